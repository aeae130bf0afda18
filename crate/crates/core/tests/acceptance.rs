//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the summary lines are always
//! printed; the process exits non-zero when any criterion fails.

use std::f64::consts::PI;
use std::time::Instant;

use rayon::prelude::*;

use aplm_core::cli::config::RunConfig;
use aplm_core::cli::run_cli;
use aplm_core::models::{BoundaryCondition, Model, Scaling};
use aplm_core::reference::{
    barenblatt, barenblatt_radius, convergence_study, exact_erf_riemann, l1_error,
    limit_scheme_oracle, linf_error, ConvergenceReport, LimitScheme,
};
use aplm_core::spatial::{cell_average_sin, Grid};
use aplm_core::stability::{scan, ScanGrid};
use aplm_core::stepper::{
    select_dt, DiffusionStencil, DtRule, Formulation, Problem, SolverOptions, Simulation,
};
use aplm_core::tableaux::{builtin, builtin_all};

/// Order-condition residual bound.
const ORDER_RESIDUAL_TOL: f64 = 1e-12;
/// Allowed deviation of measured rates from the published ones.
const RATE_TOL: f64 = 0.35;
/// Largest spread of the N = 256 rate across eps, and allowed shortfall below p.
const RATE_SPREAD: f64 = 1.5;
const RATE_SHORTFALL: f64 = 1.0;
/// Limit-scheme agreement in L1.
const ORACLE_TOL: f64 = 1e-9;
/// Relative mass drift per step on periodic grids.
const MASS_DRIFT_TOL: f64 = 1e-12;

// Frozen by `cargo run --release --example calibrate -- riemann`: 1.25 times the
// larger of the N = 80 and N = 640 full-domain errors (the walls set a floor
// that does not shrink with refinement; interior errors converge).
const RIEMANN_LINF_EXPLICIT: f64 = 1.0e-2;
const RIEMANN_LINF_IMPLICIT: f64 = 1.34e-2;
// Frozen by `cargo run --release --example calibrate -- barenblatt`: 1.25 times
// the N = 80 errors; the N = 640 BDF2 run matches the exact profile to 1.5e-4.
const BARENBLATT_L1_BDF2: f64 = 5.9e-3;
const BARENBLATT_L1_BDF5: f64 = 7.5e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn test1(scheme: &str, formulation: &str, eps: f64, n: usize) -> RunConfig {
    let mut c = RunConfig::preset("test1").unwrap();
    c.set("scheme", scheme).unwrap();
    c.set("formulation", formulation).unwrap();
    c.eps = eps;
    c.nx = n;
    c
}

fn test1_study(scheme: &str, formulation: &str, eps: f64, base: usize, levels: usize) -> ConvergenceReport {
    convergence_study(scheme, formulation, eps, 1.0, base, levels, &|n| {
        let sim = test1(scheme, formulation, eps, n).build()?.run()?;
        Ok((sim.current().u_interior().to_vec(), sim.current().v_interior().to_vec()))
    })
    .unwrap_or_else(|e| ConvergenceReport {
        scheme: format!("{scheme} ({e})"),
        formulation: formulation.into(),
        eps,
        alpha: 1.0,
        n: vec![],
        err_u: vec![],
        rate_u: vec![],
        err_v: vec![],
        rate_v: vec![],
    })
}

fn ac1_order_conditions() -> Outcome {
    let mut bad = Vec::new();
    let mut worst: f64 = 0.0;
    for t in builtin_all() {
        let r = t.order_residuals(t.order).iter().fold(0.0, |a: f64, b| a.max(b.abs()));
        worst = worst.max(r);
        if r > ORDER_RESIDUAL_TOL {
            bad.push(format!("{} residual {r:e}", t.name));
        }
        if t.is_bdf() && t.satisfies_order(t.order + 1, ORDER_RESIDUAL_TOL) {
            bad.push(format!("{} satisfies order {}", t.name, t.order + 1));
        }
    }
    outcome(bad.is_empty(), format!("max residual {worst:.1e} {}", bad.join("; ")))
}

fn ac2_published_rates() -> Outcome {
    // (scheme, eps, [u rate at 256, 512], [v rate at 256, 512])
    let cases: [(&str, f64, [f64; 2], [f64; 2]); 3] = [
        ("BDF2", 1.0, [1.6331, 1.8491], [1.5996, 1.8328]),
        ("BDF3", 1.0, [2.514, 2.8127], [2.6848, 2.861]),
        ("BDF3", 1e-3, [3.2638, 3.2], [3.1328, 3.0885]),
    ];
    let results: Vec<(String, bool)> = cases
        .par_iter()
        .map(|&(scheme, eps, ur, vr)| {
            let rep = test1_study(scheme, "ap-explicit", eps, 128, 4);
            let mut ok = true;
            let mut s = format!("{scheme} eps={eps}:");
            for (k, n) in [256usize, 512].into_iter().enumerate() {
                let (mu, mv) = (rep.u_rate_at(n).unwrap_or(f64::NAN), rep.v_rate_at(n).unwrap_or(f64::NAN));
                let good = (mu - ur[k]).abs() <= RATE_TOL && (mv - vr[k]).abs() <= RATE_TOL;
                ok &= good;
                s += &format!(" N={n} u {mu:.2}/{:.2} v {mv:.2}/{:.2}{}", ur[k], vr[k], if good { "" } else { " X" });
            }
            (s, ok)
        })
        .collect();
    let pass = results.iter().all(|r| r.1);
    outcome(pass, results.into_iter().map(|r| r.0).collect::<Vec<_>>().join(" | "))
}

fn ac3_uniform_accuracy() -> Outcome {
    let eps_list = [1.0, 0.1, 0.01, 0.001];
    let mut cells = Vec::new();
    for t in builtin_all() {
        for f in ["ap-explicit", "ap-implicit"] {
            cells.push((t.name.clone(), t.order, f));
        }
    }
    let rows: Vec<(String, bool)> = cells
        .par_iter()
        .map(|(name, order, f)| {
            let rates: Vec<f64> = eps_list
                .iter()
                .map(|&e| test1_study(name, f, e, 128, 3).u_rate_at(256).unwrap_or(f64::NAN))
                .collect();
            let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let ok = rates.iter().all(|r| r.is_finite())
                && hi - lo < RATE_SPREAD
                && lo >= *order as f64 - RATE_SHORTFALL;
            let shown: Vec<String> = rates.iter().map(|r| format!("{r:.2}")).collect();
            (format!("{name} {f} [{}]", shown.join(", ")), ok)
        })
        .collect();
    let failed: Vec<&String> = rows.iter().filter(|r| !r.1).map(|r| &r.0).collect();
    outcome(
        failed.is_empty(),
        format!(
            "{}/{} scheme-formulation pairs uniform{}{}",
            rows.len() - failed.len(),
            rows.len(),
            if failed.is_empty() { "" } else { "; failing: " },
            failed.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(" | ")
        ),
    )
}

fn ac4_limit_oracle() -> Outcome {
    let eps = 1e-12;
    let grid = Grid::new(0.0, 1.0, 64).unwrap();
    let variants = [
        (Formulation::ApExplicit, LimitScheme::ConvectionDiffusionExplicit, 1.0, DtRule::Diffusive),
        (Formulation::ApImplicit, LimitScheme::ConvectionDiffusionImex, 1.0, DtRule::Diffusive),
        (Formulation::ApExplicit, LimitScheme::Convection, 0.0, DtRule::Hyperbolic),
        (Formulation::ApImplicit, LimitScheme::Convection, 0.0, DtRule::Hyperbolic),
    ];
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for tab in builtin_all() {
        for (form, limit, alpha, rule) in variants {
            let scaling = Scaling::new(eps, alpha).unwrap();
            let model = Model::LinearRelaxation { gamma: 1.0 };
            let pb = Problem::new(model, scaling, grid, BoundaryCondition::Periodic).unwrap();
            let mut opts = SolverOptions::new(form);
            opts.stencil = DiffusionStencil::Sixth;
            let dt = select_dt(form, rule, &grid, &scaling, 0.1);
            let levels: Vec<(Vec<f64>, Vec<f64>)> = (0..tab.steps)
                .map(|j| {
                    let u = cell_average_sin(&grid, 2.0 * PI, 0.3 * j as f64);
                    let v = pb.well_prepared_v(&u);
                    (u, v)
                })
                .collect();
            let mut sim =
                Simulation::new(pb, opts, tab.clone(), &levels[0].0, Some(&levels[0].1), dt).unwrap();
            sim.set_history(&levels, 0.0);
            let hist: Vec<Vec<f64>> = levels.iter().map(|l| l.0.clone()).collect();
            let run = sim.advance_steps(10);
            let oracle = limit_scheme_oracle(&tab, limit, &grid, 1.0, dt, opts.weno_eps, &hist, 10);
            match (run, oracle) {
                (Ok(()), Ok(o)) => {
                    let e = l1_error(sim.current().u_interior(), &o[9], grid.dx()).unwrap();
                    worst = worst.max(e);
                    if !(e <= ORACLE_TOL) {
                        bad.push(format!("{} {} alpha={alpha}: {e:.1e}", tab.name, form.name()));
                    }
                }
                (r, o) => bad.push(format!("{} {}: {:?} {:?}", tab.name, form.name(), r.err(), o.err())),
            }
        }
    }
    outcome(bad.is_empty(), format!("32 cases, max L1 {worst:.1e} {}", bad.join("; ")))
}

fn ac5_erf_riemann() -> Outcome {
    let mut ok = true;
    let mut s = Vec::new();
    for scheme in ["BDF2", "TVB44"] {
        for (form, limit) in [("ap-explicit", RIEMANN_LINF_EXPLICIT), ("ap-implicit", RIEMANN_LINF_IMPLICIT)] {
            let mut c = RunConfig::preset("test2-riemann").unwrap();
            c.set("scheme", scheme).unwrap();
            c.set("formulation", form).unwrap();
            let sim = c.build().and_then(|b| b.run());
            let e = match &sim {
                Ok(sim) => {
                    let exact: Vec<f64> = sim
                        .problem
                        .grid
                        .centers()
                        .iter()
                        .map(|&x| exact_erf_riemann(x, c.t_final, 4.0, 2.0))
                        .collect();
                    linf_error(sim.current().u_interior(), &exact).unwrap()
                }
                Err(_) => f64::NAN,
            };
            let good = e <= limit;
            ok &= good;
            s.push(format!("{scheme} {form} {e:.2e} (< {limit:.2e}){}", if good { "" } else { " X" }));
        }
    }
    outcome(ok, s.join(", "))
}

fn ac6_barenblatt() -> Outcome {
    let r = barenblatt_radius(3.0);
    let mut ok = true;
    let mut s = Vec::new();
    let mut errs = Vec::new();
    for (scheme, limit) in [("BDF2", BARENBLATT_L1_BDF2), ("BDF5", BARENBLATT_L1_BDF5)] {
        let mut c = RunConfig::preset("test3-barenblatt").unwrap();
        c.set("scheme", scheme).unwrap();
        let Ok(sim) = c.build().and_then(|b| b.run()) else {
            ok = false;
            s.push(format!("{scheme} failed to run"));
            continue;
        };
        let g = sim.problem.grid;
        let u = sim.current().u_interior();
        let exact: Vec<f64> = g.centers().iter().map(|&x| barenblatt(x, c.t_final)).collect();
        let e = l1_error(u, &exact, g.dx()).unwrap();
        let peak = u.iter().cloned().fold(0.0, f64::max);
        let edge = g
            .centers()
            .iter()
            .zip(u)
            .filter(|(_, &v)| v > 1e-3 * peak)
            .map(|(x, _)| x.abs())
            .fold(0.0, f64::max);
        let good = (edge - r).abs() <= 2.0 * g.dx() && e <= limit;
        ok &= good;
        errs.push(e);
        s.push(format!("{scheme} L1 {e:.2e} (< {limit:.1e}) edge {edge:.3} vs {r:.3}{}", if good { "" } else { " X" }));
    }
    if errs.len() == 2 && errs[1] > 1.5 * errs[0] {
        ok = false;
        s.push("BDF5 error above 1.5x BDF2".into());
    }
    outcome(ok, s.join(", "))
}

fn ac7_stability() -> Outcome {
    let grid = ScanGrid::default();
    let count = |name: &str, f: Formulation, ea: f64| -> usize {
        scan(&builtin(name).unwrap(), f, ea, &grid).unwrap().iter().filter(|p| p.stable).count()
    };
    let mut bad = Vec::new();
    let total = grid.nr * grid.ni;
    let b2 = count("BDF2", Formulation::ApImplicit, 0.4);
    if b2 != total {
        bad.push(format!("BDF2 implicit at 0.4: {b2}/{total} stable"));
    }
    let bdfs = ["BDF2", "BDF3", "BDF4", "BDF5"];
    for name in bdfs {
        for ea in [0.1, 0.25] {
            let (i, e) = (count(name, Formulation::ApImplicit, ea), count(name, Formulation::ApExplicit, ea));
            if i < e {
                bad.push(format!("{name} at {ea}: implicit {i} < explicit {e}"));
            }
        }
        for f in [Formulation::ApExplicit, Formulation::ApImplicit] {
            let areas: Vec<usize> = [0.1, 0.25, 0.5, 0.75, 1.0].iter().map(|&ea| count(name, f, ea)).collect();
            if areas.windows(2).any(|w| w[1] > w[0]) {
                bad.push(format!("{name} {} areas {areas:?} increase", f.name()));
            }
        }
    }
    if bad.is_empty() {
        return outcome(true, format!("BDF2 implicit at 0.4: {b2}/{total} stable, area orderings hold"));
    }
    outcome(false, bad.join("; "))
}

fn ac8_conservation() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for t in builtin_all() {
        for f in ["ap-explicit", "ap-implicit"] {
            for eps in [1.0, 1e-3] {
                let mut c = test1(&t.name, f, eps, 128);
                c.set("cfl", "0.25").unwrap();
                let mut sim = c.build().unwrap().simulation().unwrap();
                let mut drift: f64 = 0.0;
                for _ in 0..500 {
                    match sim.step() {
                        Ok(r) => drift = drift.max(r.mass_drift),
                        Err(e) => {
                            bad.push(format!("{} {f} eps={eps}: {e}", t.name));
                            break;
                        }
                    }
                }
                worst = worst.max(drift);
                if drift > MASS_DRIFT_TOL {
                    bad.push(format!("{} {f} eps={eps}: {drift:.1e}", t.name));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("max drift per step {worst:.1e} {}", bad.join("; ")))
}

fn ac9_determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("aplm-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut ok = true;
    let mut s = Vec::new();
    for preset in ["test2-riemann", "test4c-variable-alpha"] {
        let mut outs = Vec::new();
        for k in 0..2 {
            let p = dir.join(format!("{preset}-{k}.csv"));
            let code = run_cli(["aplm", "--output", p.to_str().unwrap(), "run", "--preset", preset]);
            outs.push((code, std::fs::read(&p).unwrap_or_default()));
        }
        let same = outs[0].0 == 0 && outs[1].0 == 0 && !outs[0].1.is_empty() && outs[0].1 == outs[1].1;
        ok &= same;
        s.push(format!("{preset} {} bytes {}", outs[0].1.len(), if same { "identical" } else { "DIFFER" }));
    }
    let _ = std::fs::remove_dir_all(&dir);
    outcome(ok, s.join(", "))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    // libtest-style arguments (filters, --nocapture, ...) are ignored
    let criteria: [Criterion; 9] = [
        ("AC1 order conditions", ac1_order_conditions),
        ("AC2 published convergence rates", ac2_published_rates),
        ("AC3 near-uniform accuracy in eps", ac3_uniform_accuracy),
        ("AC4 limit-scheme equivalence", ac4_limit_oracle),
        ("AC5 erf Riemann problem", ac5_erf_riemann),
        ("AC6 Barenblatt profile", ac6_barenblatt),
        ("AC7 stability spot checks", ac7_stability),
        ("AC8 periodic conservation", ac8_conservation),
        ("AC9 deterministic output", ac9_determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let t0 = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{name}: {} ({:.1} s) {}",
            if o.pass { "PASS" } else { "FAIL" },
            t0.elapsed().as_secs_f64(),
            o.detail.trim()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
