//! One-off calibration runs behind the frozen constants of the test suite.
//!
//! ```text
//! cargo run --release --example calibrate -- final-time
//! cargo run --release --example calibrate -- riemann
//! cargo run --release --example calibrate -- barenblatt
//! ```

use aplm_core::cli::config::RunConfig;
use aplm_core::reference::{
    barenblatt, barenblatt_radius, convergence_study, exact_erf_riemann, l1_error, linf_error,
};

/// Published `u` differences between the 128- and 256-cell solutions of the
/// smooth periodic problem at `eps = 1` (AP-explicit).
const TABULATED_U_ERRORS: [(&str, f64); 8] = [
    ("SG32", 9.9402e-05),
    ("BDF2", 4.4737e-05),
    ("TVB33", 7.3451e-08),
    ("BDF3", 8.7902e-08),
    ("TVB44", 2.2234e-08),
    ("BDF4", 2.3209e-08),
    ("TVB55", 1.043e-08),
    ("BDF5", 4.9951e-08),
];

fn config(preset: &str, settings: &[(&str, &str)]) -> RunConfig {
    let mut c = RunConfig::preset(preset).unwrap();
    for (k, v) in settings {
        c.set(k, v).unwrap();
    }
    c
}

/// Final time minimizing the mean squared log mismatch of the error magnitudes.
fn final_time() {
    let mut best = (f64::INFINITY, 0.0);
    for k in 2..=20 {
        let t = 0.01 * k as f64;
        let ts = t.to_string();
        let mut misfit = 0.0;
        for (scheme, target) in TABULATED_U_ERRORS {
            let rep = convergence_study(scheme, "ap-explicit", 1.0, 1.0, 128, 3, &|n| {
                let ns = n.to_string();
                let c = config("test1", &[("scheme", scheme), ("t_final", &ts), ("nx", &ns)]);
                let sim = c.build()?.run()?;
                Ok((sim.current().u_interior().to_vec(), sim.current().v_interior().to_vec()))
            })
            .unwrap();
            misfit += (rep.err_u[0] / target).ln().powi(2);
        }
        misfit /= TABULATED_U_ERRORS.len() as f64;
        println!("T = {t:.2}  rms log misfit = {:.3}", misfit.sqrt());
        if misfit < best.0 {
            best = (misfit, t);
        }
    }
    println!("best T = {:.2}", best.1);
}

fn riemann() {
    for scheme in ["BDF2", "TVB44"] {
        for form in ["ap-explicit", "ap-implicit"] {
            for n in ["80", "640"] {
                let c = config("test2-riemann", &[("scheme", scheme), ("formulation", form), ("nx", n)]);
                let sim = c.build().unwrap().run().unwrap();
                let g = sim.problem.grid;
                let exact: Vec<f64> =
                    g.centers().iter().map(|&x| exact_erf_riemann(x, c.t_final, 4.0, 2.0)).collect();
                let u = sim.current().u_interior();
                let e = linf_error(u, &exact).unwrap();
                // away from the walls, where the infinite-line solution applies
                let inner = g
                    .centers()
                    .iter()
                    .zip(u.iter().zip(&exact))
                    .filter(|(x, _)| (**x - 2.0).abs() <= 1.0)
                    .map(|(_, (a, b))| (a - b).abs())
                    .fold(0.0, f64::max);
                println!("{scheme} {form} N={n}: Linf = {e:.4e}, Linf on [1, 3] = {inner:.4e}");
            }
        }
    }
}

fn barenblatt_front() {
    for scheme in ["BDF2", "BDF5"] {
        for n in ["80", "640"] {
            let c = config("test3-barenblatt", &[("scheme", scheme), ("nx", n)]);
            let sim = c.build().unwrap().run().unwrap();
            let g = sim.problem.grid;
            let u = sim.current().u_interior();
            let exact: Vec<f64> = g.centers().iter().map(|&x| barenblatt(x, c.t_final)).collect();
            let e = l1_error(u, &exact, g.dx()).unwrap();
            let peak = u.iter().cloned().fold(0.0, f64::max);
            let edge = g
                .centers()
                .iter()
                .zip(u)
                .filter(|(_, &r)| r > 1e-3 * peak)
                .map(|(x, _)| x.abs())
                .fold(0.0, f64::max);
            println!(
                "{scheme} N={n}: L1 = {e:.4e}, edge = {edge:.4} (exact {:.4}, dx {:.4})",
                barenblatt_radius(c.t_final),
                g.dx()
            );
        }
    }
}

fn main() {
    match std::env::args().nth(1).as_deref() {
        Some("final-time") => final_time(),
        Some("riemann") => riemann(),
        Some("barenblatt") => barenblatt_front(),
        _ => eprintln!("usage: calibrate final-time|riemann|barenblatt"),
    }
}
