//! Command-line front end: `run`, `converge`, `stability`, `tableaus`.
//!
//! Settings are resolved in order: preset, `--config` file, then flags.
//! Exit codes: 0 success, 1 usage or configuration error, 2 numerical failure.

pub mod config;

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::reference::{convergence_study, ConvergenceReport};
use crate::stability::{scan, stable_fraction, ScanGrid};
use crate::stepper::Formulation;
use crate::tableaux::{builtin, builtin_all, builtin_names, load_tableau, Tableau, ORDER_TOL};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "aplm", version, about = "IMEX multistep solvers for hyperbolic relaxation systems")]
pub struct Cli {
    /// Key-value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Fail when the CFL number exceeds one.
    #[arg(long, global = true)]
    pub strict_cfl: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate one scenario and write `x,u,v`.
    Run(RunArgs),
    /// Grid-refinement study.
    Converge(ConvergeArgs),
    /// Linear stability scan of an IMEX-BDF scheme.
    Stability(StabilityArgs),
    /// List tableaus with their order-condition residuals.
    Tableaus(TableausArgs),
}

/// Scenario selection shared by `run` and `converge`.
#[derive(Debug, Args, Clone, Default)]
pub struct ScenarioArgs {
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, alias = "eps")]
    pub epsilon: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// Alpha profile: constant, single-transition, double-transition.
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub scheme: Option<String>,
    /// External tableau file (verified before use).
    #[arg(long)]
    pub tableau_file: Option<PathBuf>,
    #[arg(long)]
    pub formulation: Option<String>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub t_final: Option<String>,
    #[arg(long)]
    pub cfl: Option<String>,
    /// Any configuration key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Number of grids (at least 3).
    #[arg(long, default_value_t = 3)]
    pub levels: usize,
    /// Coarsest grid size (default: the scenario's nx).
    #[arg(long)]
    pub base_n: Option<usize>,
    /// Comma-separated list of schemes, or `all`.
    #[arg(long)]
    pub schemes: Option<String>,
    /// Comma-separated list of relaxation parameters.
    #[arg(long)]
    pub eps_list: Option<String>,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long, default_value = "BDF2")]
    pub scheme: String,
    #[arg(long)]
    pub tableau_file: Option<PathBuf>,
    #[arg(long, default_value = "ap-explicit")]
    pub formulation: String,
    /// Comma-separated values of eps^alpha.
    #[arg(long, default_value = "")]
    pub eps_alpha: String,
    #[arg(long, default_value_t = 1e-2)]
    pub zr_min: f64,
    #[arg(long, default_value_t = 1e3)]
    pub zr_max: f64,
    #[arg(long, default_value_t = 40)]
    pub nr: usize,
    #[arg(long, default_value_t = 0.0)]
    pub zi_min: f64,
    #[arg(long, default_value_t = 3.0)]
    pub zi_max: f64,
    #[arg(long, default_value_t = 40)]
    pub ni: usize,
    /// Exit with status 2 unless every grid point is stable.
    #[arg(long)]
    pub assert_stable: bool,
}

#[derive(Debug, Args)]
pub struct TableausArgs {
    /// Show a single built-in tableau.
    #[arg(long)]
    pub name: Option<String>,
    /// Show an external tableau file instead.
    #[arg(long)]
    pub file: Option<PathBuf>,
}

/// Parse arguments, dispatch, and return the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be positive".into()));
        }
        // a second initialization in the same process is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match &cli.command {
        Command::Run(a) => cmd_run(cli, a),
        Command::Converge(a) => cmd_converge(cli, a),
        Command::Stability(a) => cmd_stability(cli, a),
        Command::Tableaus(a) => cmd_tableaus(cli, a),
    }
}

/// Preset, then config file, then flags.
pub fn resolve_config(cli: &Cli, s: &ScenarioArgs) -> Result<RunConfig> {
    let mut cfg = match &s.preset {
        Some(p) => RunConfig::preset(p)?,
        None => RunConfig::default(),
    };
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        cfg.apply_text(&text)?;
    }
    let named = [
        ("eps", &s.epsilon),
        ("alpha", &s.alpha),
        ("profile", &s.profile),
        ("scheme", &s.scheme),
        ("formulation", &s.formulation),
        ("t_final", &s.t_final),
        ("cfl", &s.cfl),
    ];
    for (key, value) in named {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(n) = s.nx {
        cfg.set("nx", &n.to_string())?;
    }
    if let Some(f) = &s.tableau_file {
        cfg.set("tableau_file", &f.to_string_lossy())?;
    }
    for kv in &s.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects key=value, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if cli.strict_cfl {
        cfg.strict_cfl = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn sidecar_path(p: &Path) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Solution table `x,u,v` (plus `alpha` for variable profiles).
pub fn solution_csv(cfg: &RunConfig, sim: &crate::stepper::Simulation) -> String {
    let variable = !cfg.alpha.is_constant();
    let mut out = String::from(if variable { "x,u,v,alpha\n" } else { "x,u,v\n" });
    let lv = sim.current();
    let xs = sim.problem.grid.centers();
    let alpha = sim.problem.alpha_cells();
    for (i, x) in xs.iter().enumerate() {
        let _ = write!(out, "{x:e},{:e},{:e}", lv.u_interior()[i], lv.v_interior()[i]);
        if variable {
            let _ = write!(out, ",{:e}", alpha[i]);
        }
        out.push('\n');
    }
    out
}

fn cmd_run(cli: &Cli, a: &RunArgs) -> Result<()> {
    let cfg = resolve_config(cli, &a.scenario)?;
    let setup = cfg.build()?;
    let mut sim = setup.simulation()?;
    let dx = sim.problem.grid.dx();
    let mass0 = sim.current().mass(dx);
    sim.advance_steps(setup.steps)?;
    let mass1 = sim.current().mass(dx);
    let csv = solution_csv(&cfg, &sim);

    let mut meta = String::new();
    let _ = writeln!(meta, "# run metadata");
    let _ = writeln!(meta, "scheme_resolved = {}", sim.tableau.name);
    let _ = writeln!(meta, "dt_used = {:e}", setup.dt);
    let _ = writeln!(meta, "steps = {}", sim.steps);
    let _ = writeln!(meta, "t_reached = {:e}", sim.time());
    let _ = writeln!(meta, "theta_max = {:e}", sim.theta_max);
    let _ = writeln!(meta, "cfl_max = {:e}", sim.max_cfl);
    let _ = writeln!(meta, "mass_initial = {:e}", mass0);
    let _ = writeln!(meta, "mass_final = {:e}", mass1);
    let _ = writeln!(meta, "mass_drift_total = {:e}", (mass1 - mass0).abs());
    let _ = writeln!(meta, "mass_drift_max_step = {:e}", sim.max_mass_drift);
    let _ = writeln!(meta, "subcharacteristic_violations = {}", sim.subchar_warnings);
    let _ = writeln!(meta, "# resolved configuration");
    meta.push_str(&cfg.to_text());

    write_output(cli.output.as_deref(), &csv)?;
    match &cli.output {
        Some(p) => std::fs::write(sidecar_path(p), meta)?,
        None => eprint!("{meta}"),
    }
    Ok(())
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    let vals = s
        .split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(crate::tableaux::parse_real)
        .collect::<Result<Vec<_>>>()?;
    if vals.is_empty() {
        return Err(Error::Config(format!("empty {what} list")));
    }
    Ok(vals)
}

fn cmd_converge(cli: &Cli, a: &ConvergeArgs) -> Result<()> {
    if a.levels < 3 {
        return Err(Error::Config(format!("--levels must be at least 3, got {}", a.levels)));
    }
    let mut scenario = a.scenario.clone();
    if scenario.preset.is_none() && cli.config.is_none() {
        scenario.preset = Some("test1".into());
    }
    let base = resolve_config(cli, &scenario)?;
    let schemes: Vec<Option<String>> = match (&a.schemes, &base.tableau_file) {
        (Some(list), _) if list.eq_ignore_ascii_case("all") => {
            builtin_names().into_iter().map(|s| Some(s.to_string())).collect()
        }
        (Some(list), _) => list.split(',').map(|s| Some(s.trim().to_string())).collect(),
        // keep the external tableau
        (None, Some(_)) => vec![None],
        (None, None) => vec![Some(base.scheme.clone())],
    };
    let eps_values = match &a.eps_list {
        Some(l) => parse_list(l, "epsilon")?,
        None => vec![base.eps],
    };
    let base_n = a.base_n.unwrap_or(base.nx);

    let mut out = format!("{}\n", ConvergenceReport::CSV_HEADER);
    for scheme in &schemes {
        for &eps in &eps_values {
            let mut cfg = base.clone();
            if let Some(s) = scheme {
                cfg.set("scheme", s)?;
            }
            cfg.eps = eps;
            let tab = cfg.tableau()?;
            let alpha = cfg.alpha.at(0.5 * (cfg.x_lo + cfg.x_hi));
            let rep: ConvergenceReport = convergence_study(
                &tab.name,
                cfg.formulation.name(),
                eps,
                alpha,
                base_n,
                a.levels,
                &|n| {
                    let mut c = cfg.clone();
                    c.nx = n;
                    let sim = c.build()?.run()?;
                    Ok((sim.current().u_interior().to_vec(), sim.current().v_interior().to_vec()))
                },
            )?;
            log::info!("{} eps = {eps}: done", tab.name);
            for line in rep.to_csv().lines().skip(1) {
                out.push_str(line);
                out.push('\n');
            }
        }
    }
    write_output(cli.output.as_deref(), &out)
}

fn stability_tableau(a: &StabilityArgs) -> Result<Tableau> {
    match &a.tableau_file {
        Some(p) => load_tableau(p),
        None => builtin(&a.scheme),
    }
}

fn cmd_stability(cli: &Cli, a: &StabilityArgs) -> Result<()> {
    let tab = stability_tableau(a)?;
    let formulation: Formulation = a.formulation.parse()?;
    if formulation == Formulation::FirstOrder {
        return Err(Error::Config("stability scans need ap-explicit or ap-implicit".into()));
    }
    let eps_alpha = parse_list(&a.eps_alpha, "eps-alpha")?;
    if a.nr == 0 || a.ni == 0 || a.zr_min <= 0.0 || a.zr_max < a.zr_min || a.zi_max < a.zi_min {
        return Err(Error::Config("empty or invalid scan ranges".into()));
    }
    let grid = ScanGrid {
        zr_min: a.zr_min,
        zr_max: a.zr_max,
        nr: a.nr,
        zi_min: a.zi_min,
        zi_max: a.zi_max,
        ni: a.ni,
    };
    let mut out = String::from("z_R,z_I,eps_alpha,max_modulus,stable\n");
    let mut unstable = Vec::new();
    for &ea in &eps_alpha {
        if ea < 0.0 {
            return Err(Error::Config(format!("eps-alpha must be non-negative, got {ea}")));
        }
        let pts = scan(&tab, formulation, ea, &grid)?;
        for p in &pts {
            let _ = writeln!(
                out,
                "{:e},{:e},{:e},{:e},{}",
                p.z_r, p.z_i, ea, p.max_modulus, p.stable as u8
            );
        }
        let frac = stable_fraction(&pts);
        log::info!("{} {} eps^alpha = {ea}: stable fraction {frac:.4}", tab.name, a.formulation);
        if frac < 1.0 {
            unstable.push((ea, frac));
        }
    }
    write_output(cli.output.as_deref(), &out)?;
    if a.assert_stable && !unstable.is_empty() {
        let list: Vec<String> =
            unstable.iter().map(|(e, f)| format!("eps^alpha = {e} ({:.1}% stable)", 100.0 * f)).collect();
        return Err(Error::Numerical(format!("unstable points found: {}", list.join(", "))));
    }
    Ok(())
}

/// Residual row: name, steps, order, max residual at the order, and at order + 1.
pub fn residual_row(t: &Tableau) -> String {
    let max = |v: Vec<f64>| v.into_iter().fold(0.0, |a: f64, b: f64| a.max(b.abs()));
    let at = max(t.order_residuals(t.order));
    let next = max(t.order_residuals(t.order + 1));
    let ok = t.satisfies_order(t.order, ORDER_TOL);
    format!("{},{},{},{},{at:e},{next:e},{}", t.name, t.steps, t.order, t.is_bdf() as u8, ok as u8)
}

fn cmd_tableaus(cli: &Cli, a: &TableausArgs) -> Result<()> {
    let tabs = match (&a.file, &a.name) {
        (Some(p), _) => vec![load_tableau(p)?],
        (None, Some(n)) => vec![builtin(n)?],
        (None, None) => builtin_all(),
    };
    let mut out = String::from("name,steps,order,bdf,residual_at_order,residual_next_order,verified\n");
    for t in &tabs {
        out.push_str(&residual_row(t));
        out.push('\n');
    }
    if a.file.is_some() {
        let t = &tabs[0];
        let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "# a = {}", fmt(&t.a));
        let _ = writeln!(out, "# b = {}", fmt(&t.b));
        let _ = writeln!(out, "# c = {}", fmt(&t.c));
        let _ = writeln!(out, "# c_minus1 = {:e}", t.c_minus1);
    }
    write_output(cli.output.as_deref(), &out)
}
