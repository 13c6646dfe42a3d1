//! Experiment runner: every acceptance experiment as a subcommand with
//! configuration, seeding, parallelism control and machine-readable reports.
//!
//! Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 usage error.
//! Reports are canonical JSON: identical `(config, seed)` produce identical
//! bytes regardless of `--threads`.

mod report;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use lpplab_core::busemann::{check_intensity, multi_class_report, DirectionAngle};
use lpplab_core::fluid::{burke_report, equilibrium_report, evolve_box, worked_example_box};
use lpplab_core::fluctuations::{
    busemann_direction_clt, clt_check, compare_stationary, cube_root_fit, exit_identity_report,
    shape_estimate, stationarity_residual,
};
use lpplab_core::particles::{
    empirical_speed_distribution, rarefaction_cdf_periodic, rarefaction_cdf_poisson,
    rarefaction_periodic_lambda_inf, s_minus_cdf, second_class_law_report, solve_p_plus,
    BoundaryLaw, RarefactionConfig,
};
use lpplab_core::points::WeightDistribution;
use report::{load_config, FileConfig, ReportSink};

#[derive(Parser)]
#[command(
    name = "lpplab",
    version = report::VERSION,
    about = "Simulation lab for planar Poisson last-passage percolation and the Hammersley fluid"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args)]
struct Global {
    /// Master seed; every replica derives an independent stream from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo replicas.
    #[arg(long, global = true)]
    replicas: Option<usize>,
    /// Worker threads (default: all cores). Never changes results.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for reports and samples.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also print the JSON report to stdout.
    #[arg(long, global = true)]
    json: bool,
    /// Write raw sample CSVs next to the report.
    #[arg(long, global = true)]
    csv: bool,
    /// JSON config file; command-line flags win over its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Shape-constant estimate over a geometric t-grid.
    Shape {
        /// Weight law: dirac1 | exp:<rate>
        #[arg(long)]
        dist: Option<String>,
        /// Largest t of the grid {t/4, t/2, t}.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Replay the hand-checkable sources-and-sinks box and assert its exact
    /// ledger values.
    Figure21,
    /// Output-process statistics of the stationary box (spacings, corners,
    /// independence).
    Burke {
        #[arg(long)]
        rho: Option<f64>,
        /// Box side length.
        #[arg(long = "box")]
        box_size: Option<f64>,
    },
    /// Time invariance of the Poisson equilibrium: top-measure spacings.
    Equilibrium {
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long = "box")]
        box_size: Option<f64>,
    },
    /// Exit-point variance and covariance identities.
    ExitIdentity {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        x: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Mean-square stationarity residual along a non-characteristic speed.
    Stationarity {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Gaussian fluctuations off the characteristic direction (or along a
    /// Busemann direction with --beta).
    Clt {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
        /// Busemann direction angle in [0, pi/2) instead of the equilibrium
        /// path check.
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Equilibrium intensity and product relation via coalescence sampling.
    BusemannIntensity {
        #[arg(long)]
        tan_alpha: Option<f64>,
    },
    /// Ordered multi-class equilibrium samples: domination on every mesh
    /// interval.
    Multiclass {
        /// Comma-separated increasing tan(alpha) values.
        #[arg(long)]
        tan_alphas: Option<String>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        cells: Option<usize>,
    },
    /// Second-class particle strong law in equilibrium.
    SecondClass {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Rarefaction-fan speed law against the closed forms.
    Rarefaction {
        /// poisson | periodic
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        mu: Option<f64>,
        /// Comparison intensity for the periodic mode.
        #[arg(long)]
        rho: Option<f64>,
        #[arg(long)]
        t: Option<f64>,
    },
    /// Cube-root scaling of the stationary variance and exit point.
    CubeRoot {
        /// Comma-separated geometric t grid.
        #[arg(long)]
        t_grid: Option<String>,
    },
    /// Free vs stationary passage times on shared interior points.
    CompareStationary {
        #[arg(long)]
        t_grid: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Shape { .. } => "shape",
            Command::Figure21 => "figure21",
            Command::Burke { .. } => "burke",
            Command::Equilibrium { .. } => "equilibrium",
            Command::ExitIdentity { .. } => "exit-identity",
            Command::Stationarity { .. } => "stationarity",
            Command::Clt { .. } => "clt",
            Command::BusemannIntensity { .. } => "busemann-intensity",
            Command::Multiclass { .. } => "multiclass",
            Command::SecondClass { .. } => "second-class",
            Command::Rarefaction { .. } => "rarefaction",
            Command::CubeRoot { .. } => "cube-root",
            Command::CompareStationary { .. } => "compare-stationary",
        }
    }
}

/// Resolved run parameters: command-line flag, else config-file entry, else
/// the experiment default.
struct Resolver {
    file: FileConfig,
}

impl Resolver {
    fn f64(&self, key: &str, flag: Option<f64>, default: f64) -> Result<f64> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.parameters.get(key) {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| anyhow!("config parameter '{key}' must be a number")),
            None => Ok(default),
        }
    }

    fn usize(&self, key: &str, flag: Option<usize>, default: usize) -> Result<usize> {
        Ok(self.f64(key, flag.map(|v| v as f64), default as f64)? as usize)
    }

    fn string(&self, key: &str, flag: Option<String>, default: &str) -> Result<String> {
        if let Some(v) = flag {
            return Ok(v);
        }
        match self.file.parameters.get(key) {
            Some(v) => v
                .as_str()
                .map(str::to_string)
                .ok_or_else(|| anyhow!("config parameter '{key}' must be a string")),
            None => Ok(default.to_string()),
        }
    }
}

fn parse_dist(s: &str) -> Result<WeightDistribution> {
    if s == "dirac1" {
        return Ok(WeightDistribution::Dirac1);
    }
    if let Some(rate) = s.strip_prefix("exp:") {
        let rate: f64 = rate.parse().context("bad exponential rate")?;
        return Ok(WeightDistribution::Exponential { rate });
    }
    bail!("unknown weight law '{s}' (use dirac1 or exp:<rate>)")
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().context("bad grid value"))
        .collect()
}

fn fmt_grid(g: &[f64]) -> Value {
    json!(g)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(threads) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let file = match &cli.global.config {
        Some(path) => load_config(path)?,
        None => FileConfig::default(),
    };
    let command = match cli.command {
        Some(c) => c,
        None => {
            let name = file
                .experiment
                .clone()
                .ok_or_else(|| anyhow!("no subcommand and no experiment in the config file"))?;
            command_from_name(&name)?
        }
    };
    let seed = cli.global.seed.or(file.seed).unwrap_or(1);
    let resolver = Resolver { file };
    let sink = ReportSink {
        out_dir: cli.global.out.clone().unwrap_or_else(|| PathBuf::from(".")),
        echo_json: cli.global.json,
        write_csv: cli.global.csv,
    };
    let replicas = |def: usize| -> usize {
        cli.global
            .replicas
            .or(resolver.file.replicas)
            .unwrap_or(def)
    };

    let name = command.name();
    let mut config: BTreeMap<String, Value> = BTreeMap::new();
    config.insert("seed".into(), json!(seed));

    let pass = match command {
        Command::Shape { dist, t } => {
            let dist_s = resolver.string("dist", dist, "dirac1")?;
            let dist = parse_dist(&dist_s)?;
            let t = resolver.f64("t", t, 1000.0)?;
            let n = replicas(500);
            let grid = [t / 4.0, t / 2.0, t];
            config.insert("dist".into(), json!(dist_s));
            config.insert("t_grid".into(), fmt_grid(&grid));
            config.insert("replicas".into(), json!(n));
            let rep = shape_estimate(&dist, &grid, n, seed)?;
            sink.write_csv_rows(
                name,
                "t,l_over_t",
                rep.samples.iter().map(|(t, v)| format!("{t},{v}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Figure21 => {
            let rep = run_figure21()?;
            let pass = rep.pass;
            if sink.write_csv {
                let (sources, sinks, points, r, t) = worked_example_box();
                let st = evolve_box(&sources, &sinks, &points, r, t)?;
                let mut buf = Vec::new();
                st.event_log_csv(&mut buf)?;
                std::fs::write(sink.csv_path(name), buf)?;
            }
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Burke { rho, box_size } => {
            let rho = resolver.f64("rho", rho, 1.0)?;
            let b = resolver.f64("box", box_size, 200.0)?;
            let n = replicas(500);
            config.insert("rho".into(), json!(rho));
            config.insert("box".into(), json!(b));
            config.insert("replicas".into(), json!(n));
            let rep = burke_report(rho, b, n, seed)?;
            sink.write_csv_rows(
                name,
                "kind,spacing",
                rep.top_spacings
                    .iter()
                    .map(|s| format!("top,{s}"))
                    .chain(rep.east_spacings.iter().map(|s| format!("east,{s}"))),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Equilibrium { rho, box_size } => {
            let rho = resolver.f64("rho", rho, 1.0)?;
            let b = resolver.f64("box", box_size, 200.0)?;
            let n = replicas(300);
            config.insert("rho".into(), json!(rho));
            config.insert("box".into(), json!(b));
            config.insert("replicas".into(), json!(n));
            let rep = equilibrium_report(rho, b, n, seed)?;
            sink.write_csv_rows(
                name,
                "spacing",
                rep.spacings.iter().map(|s| format!("{s}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::ExitIdentity { lambda, x, t } => {
            let lambda = resolver.f64("lambda", lambda, 1.0)?;
            let x = resolver.f64("x", x, 200.0)?;
            let t = resolver.f64("t", t, 200.0)?;
            let n = replicas(5000);
            config.insert("lambda".into(), json!(lambda));
            config.insert("x".into(), json!(x));
            config.insert("t".into(), json!(t));
            config.insert("replicas".into(), json!(n));
            let rep = exit_identity_report(lambda, x, t, n, seed)?;
            sink.write_csv_rows(
                name,
                "l,nu_x,z_plus",
                rep.samples
                    .iter()
                    .map(|(l, nu, z)| format!("{l},{nu},{z}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Stationarity { lambda, a, t } => {
            let lambda = resolver.f64("lambda", lambda, 1.0)?;
            let a = resolver.f64("a", a, 2.0)?;
            let t = resolver.f64("t", t, 500.0)?;
            let n = replicas(400);
            config.insert("lambda".into(), json!(lambda));
            config.insert("a".into(), json!(a));
            config.insert("t".into(), json!(t));
            config.insert("replicas".into(), json!(n));
            let rep = stationarity_residual(lambda, a, t, n, seed)?;
            sink.write_csv_rows(
                name,
                "residual",
                rep.residuals.iter().map(|r| format!("{r}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Clt { lambda, a, t, beta } => {
            let t = resolver.f64("t", t, 500.0)?;
            let n = replicas(500);
            config.insert("t".into(), json!(t));
            config.insert("replicas".into(), json!(n));
            let rep = if let Some(beta) = beta {
                config.insert("beta".into(), json!(beta));
                busemann_direction_clt(beta, t, n, seed)?
            } else {
                let lambda = resolver.f64("lambda", lambda, 1.0)?;
                let a = resolver.f64("a", a, 2.0)?;
                config.insert("lambda".into(), json!(lambda));
                config.insert("a".into(), json!(a));
                clt_check(lambda, a, t, n, seed)?
            };
            sink.write_csv_rows(
                name,
                "standardized",
                rep.standardized.iter().map(|v| format!("{v}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::BusemannIntensity { tan_alpha } => {
            let tan_alpha = resolver.f64("tan_alpha", tan_alpha, 1.0)?;
            let n = replicas(2000);
            config.insert("tan_alpha".into(), json!(tan_alpha));
            config.insert("replicas".into(), json!(n));
            let alpha = DirectionAngle::from_tan(tan_alpha)?;
            let rep = check_intensity(&alpha, &WeightDistribution::Dirac1, n, seed, None)?;
            sink.write_csv_rows(
                name,
                "kind,value",
                rep.nu_samples
                    .iter()
                    .map(|v| format!("nu,{v}"))
                    .chain(rep.nu_star_samples.iter().map(|v| format!("nu_star,{v}"))),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Multiclass { tan_alphas, h, cells } => {
            let list = resolver.string("tan_alphas", tan_alphas, "0.5,1,2")?;
            let tans = parse_grid(&list)?;
            let h = resolver.f64("h", h, 2.0)?;
            let cells = resolver.usize("cells", cells.map(|c| c), 8)?;
            let n = replicas(200);
            config.insert("tan_alphas".into(), fmt_grid(&tans));
            config.insert("h".into(), json!(h));
            config.insert("cells".into(), json!(cells));
            config.insert("replicas".into(), json!(n));
            let rep = multi_class_report(&tans, h, cells, n, seed)?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::SecondClass { lambda, t } => {
            let lambda = resolver.f64("lambda", lambda, 1.0)?;
            let t = resolver.f64("t", t, 500.0)?;
            let n = replicas(64);
            config.insert("lambda".into(), json!(lambda));
            config.insert("t".into(), json!(t));
            config.insert("replicas".into(), json!(n));
            let times: Vec<f64> = (1..=5).map(|k| t * k as f64 / 5.0).collect();
            let rep = second_class_law_report(lambda, t, &times, n, seed)?;
            sink.write_csv_rows(
                name,
                "speed",
                rep.speeds.iter().map(|v| format!("{v}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::Rarefaction { mode, lambda, mu, rho, t } => {
            let mode = resolver.string("mode", mode, "poisson")?;
            let lambda = resolver.f64("lambda", lambda, 1.0)?;
            let mu = resolver.f64("mu", mu, 2.0)?;
            config.insert("mode".into(), json!(mode));
            config.insert("lambda".into(), json!(lambda));
            config.insert("mu".into(), json!(mu));
            match mode.as_str() {
                "poisson" => {
                    let t = resolver.f64("t", t, 400.0)?;
                    let n = replicas(1500);
                    config.insert("t".into(), json!(t));
                    config.insert("replicas".into(), json!(n));
                    let rep = run_rarefaction_poisson(lambda, mu, t, n, seed)?;
                    sink.write_csv_rows(
                        name,
                        "v,cdf",
                        rep.cdf_grid
                            .iter()
                            .zip(&rep.cdf_values)
                            .map(|(v, c)| format!("{v},{c}")),
                    )?;
                    let pass = rep.pass();
                    sink.render(name, &config, &rep, pass)?;
                    pass
                }
                "periodic" => {
                    let rho = resolver.f64("rho", rho, 1.5)?;
                    let n = replicas(4000);
                    config.insert("rho".into(), json!(rho));
                    config.insert("replicas".into(), json!(n));
                    let rep = run_rarefaction_periodic(lambda, mu, rho, n, seed)?;
                    let pass = rep.pass();
                    sink.render(name, &config, &rep, pass)?;
                    pass
                }
                other => bail!("unknown rarefaction mode '{other}'"),
            }
        }
        Command::CubeRoot { t_grid } => {
            let grid_s = resolver.string("t_grid", t_grid, "128,256,512,1024")?;
            let grid = parse_grid(&grid_s)?;
            let n = replicas(2000);
            config.insert("t_grid".into(), fmt_grid(&grid));
            config.insert("replicas_per_t".into(), json!(n));
            let rep = cube_root_fit(&grid, n, seed)?;
            sink.write_csv_rows(
                name,
                "t,l,z_plus",
                rep.samples
                    .iter()
                    .map(|(t, l, z)| format!("{t},{l},{z}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
        Command::CompareStationary { t_grid } => {
            let grid_s = resolver.string("t_grid", t_grid, "125,512,1000")?;
            let grid = parse_grid(&grid_s)?;
            let n = replicas(300);
            config.insert("t_grid".into(), fmt_grid(&grid));
            config.insert("replicas".into(), json!(n));
            let rep = compare_stationary(&grid, n, seed)?;
            sink.write_csv_rows(
                name,
                "t,l_free,l_stationary",
                rep.samples
                    .iter()
                    .map(|(t, a, b)| format!("{t},{a},{b}")),
            )?;
            let pass = rep.pass();
            sink.render(name, &config, &rep, pass)?;
            pass
        }
    };
    Ok(pass)
}

fn command_from_name(name: &str) -> Result<Command> {
    Ok(match name {
        "shape" => Command::Shape { dist: None, t: None },
        "figure21" => Command::Figure21,
        "burke" => Command::Burke { rho: None, box_size: None },
        "equilibrium" => Command::Equilibrium { rho: None, box_size: None },
        "exit-identity" => Command::ExitIdentity { lambda: None, x: None, t: None },
        "stationarity" => Command::Stationarity { lambda: None, a: None, t: None },
        "clt" => Command::Clt { lambda: None, a: None, t: None, beta: None },
        "busemann-intensity" => Command::BusemannIntensity { tan_alpha: None },
        "multiclass" => Command::Multiclass { tan_alphas: None, h: None, cells: None },
        "second-class" => Command::SecondClass { lambda: None, t: None },
        "rarefaction" => Command::Rarefaction {
            mode: None,
            lambda: None,
            mu: None,
            rho: None,
            t: None,
        },
        "cube-root" => Command::CubeRoot { t_grid: None },
        "compare-stationary" => Command::CompareStationary { t_grid: None },
        other => bail!("unknown experiment '{other}'"),
    })
}

// ---------------------------------------------------------------------------
// Experiment bodies that live at the runner level
// ---------------------------------------------------------------------------

/// The hand-checkable box instance: every caption value asserted exactly.
#[derive(serde::Serialize)]
struct Figure21Report {
    mid_atoms: Vec<(f64, f64)>,
    final_atoms: Vec<(f64, f64)>,
    exited: f64,
    entered: f64,
    flux_half: f64,
    flux_full: f64,
    #[serde(skip)]
    pass: bool,
}

fn run_figure21() -> Result<Figure21Report> {
    use lpplab_core::lpp::{flux_measure, FluxBoundary, SourcesSinks};
    let (sources, sinks, points, r, t) = worked_example_box();
    let mid = evolve_box(&sources, &sinks, &points, r, t / 2.0)?;
    let end = evolve_box(&sources, &sinks, &points, r, t)?;
    let ss = SourcesSinks::new(sources, sinks);
    let flux = flux_measure(&FluxBoundary::Box(&ss), &points, &[t / 2.0, t])?;

    let mid_atoms: Vec<(f64, f64)> = mid.measure().atoms().collect();
    let final_atoms: Vec<(f64, f64)> = end.measure().atoms().collect();
    let exited = end.total_exited();
    let entered = end.total_entered();
    let flux_half = flux.cumulative(t / 2.0);
    let flux_full = flux.cumulative(t);
    let pass = mid_atoms == vec![(2.0, 1.0), (4.0, 4.0), (8.0, 6.0)]
        && final_atoms == vec![(6.0, 7.0)]
        && exited == 10.0
        && entered == 2.0
        && flux_half == 4.0
        && flux_full == 10.0;
    Ok(Figure21Report {
        mid_atoms,
        final_atoms,
        exited,
        entered,
        flux_half,
        flux_full,
        pass,
    })
}

#[derive(serde::Serialize)]
struct RarefactionPoissonReport {
    lambda: f64,
    mu: f64,
    t_final: f64,
    replicas: usize,
    sup_distance: f64,
    support_fraction: f64,
    saturation_rate: f64,
    pass_sup: bool,
    pass_support: bool,
    pass_saturation: bool,
    #[serde(skip)]
    cdf_grid: Vec<f64>,
    #[serde(skip)]
    cdf_values: Vec<f64>,
}

impl RarefactionPoissonReport {
    fn pass(&self) -> bool {
        self.pass_sup && self.pass_support && self.pass_saturation
    }
}

fn run_rarefaction_poisson(
    lambda: f64,
    mu: f64,
    t: f64,
    n: usize,
    seed: u64,
) -> Result<RarefactionPoissonReport> {
    let config = RarefactionConfig::new(
        BoundaryLaw::Poisson { intensity: lambda },
        BoundaryLaw::Poisson { intensity: mu },
    )?;
    let lo = 1.0 / (mu * mu);
    let hi = 1.0 / (lambda * lambda);
    let v_grid: Vec<f64> = (0..=80)
        .map(|k| lo * 0.8 + (hi * 1.1 - lo * 0.8) * k as f64 / 80.0)
        .collect();
    let rep = empirical_speed_distribution(&config, t, n, &v_grid, seed)?;
    let sup_distance = rep
        .cdf
        .sup_distance(|v| rarefaction_cdf_poisson(lambda, mu, v).unwrap_or(f64::NAN));
    // support band [gamma^2/4mu^2 - 0.05, gamma^2/4lambda^2 + 0.05]
    let support_fraction = rep.support_fraction(lo - 0.05, hi + 0.05);
    Ok(RarefactionPoissonReport {
        lambda,
        mu,
        t_final: t,
        replicas: n,
        sup_distance,
        support_fraction,
        saturation_rate: rep.saturation_rate,
        pass_sup: sup_distance <= 0.05,
        pass_support: support_fraction >= 0.98,
        pass_saturation: rep.saturation_rate < 0.01,
        cdf_grid: rep.cdf.grid,
        cdf_values: rep.cdf.cdf,
    })
}

#[derive(serde::Serialize)]
struct RarefactionPeriodicReport {
    lambda: f64,
    mu: f64,
    rho: f64,
    replicas: usize,
    p_plus: f64,
    p_plus_oracle_gap: f64,
    s_minus_zero: f64,
    series_value: f64,
    mc_value: f64,
    mc_ci95: f64,
    lambda_inf_value: f64,
    pass_p_plus: bool,
    pass_s_minus_zero: bool,
    pass_series_vs_mc: bool,
    pass_lambda_inf: bool,
}

impl RarefactionPeriodicReport {
    fn pass(&self) -> bool {
        self.pass_p_plus && self.pass_s_minus_zero && self.pass_series_vs_mc && self.pass_lambda_inf
    }
}

/// Monte Carlo of `P(S+ >= S-)` from independent periodic/Poisson paths,
/// fully separate from the series evaluation.
fn periodic_mc(lambda: f64, mu: f64, rho: f64, n: usize, seed: u64) -> Result<(f64, f64)> {
    use lpplab_core::points::{periodic_measure, sample_atomic_poisson, Side};
    use rayon::prelude::*;
    let horizon = 60.0 / (rho - lambda) + 60.0 / (mu - rho);
    let hits: Vec<f64> = (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let dist = WeightDistribution::Dirac1;
            let pois_r = sample_atomic_poisson(
                (0.0, horizon),
                rho,
                &dist,
                lpplab_core::seeding::derive_seed(seed, &[0xAA, i]),
            )?;
            let pois_l = sample_atomic_poisson(
                (0.0, horizon),
                rho,
                &dist,
                lpplab_core::seeding::derive_seed(seed, &[0xAB, i]),
            )?;
            let per_r = periodic_measure((0.0, horizon), lambda, Side::Right)?;
            let per_l = periodic_measure((0.0, horizon), mu, Side::Right)?;
            // S+ = sup_z { per_lambda(z) - pois_rho(z) }, z >= 0
            let sup_of = |nu: &lpplab_core::AtomicMeasure,
                          rho_proc: &lpplab_core::AtomicMeasure| {
                let mut best: f64 = 0.0;
                for &z in nu.positions() {
                    let d = nu.cumulative(z) - rho_proc.cumulative(z);
                    if d > best {
                        best = d;
                    }
                }
                best
            };
            let s_plus = sup_of(&per_r, &pois_r);
            // S- = sup_z>=0 { pois_rho(z) - per_mu(z) }
            let mut s_minus: f64 = 0.0;
            for &z in pois_l.positions() {
                let d = pois_l.cumulative(z) - per_l.cumulative(z);
                if d > s_minus {
                    s_minus = d;
                }
            }
            Ok(if s_plus >= s_minus { 1.0 } else { 0.0 })
        })
        .collect::<Result<_, lpplab_core::Error>>()?;
    let p = hits.iter().sum::<f64>() / n as f64;
    let ci = 1.96 * (p * (1.0 - p) / n as f64).sqrt();
    Ok((p, ci))
}

fn run_rarefaction_periodic(
    lambda: f64,
    mu: f64,
    rho: f64,
    n: usize,
    seed: u64,
) -> Result<RarefactionPeriodicReport> {
    let p_plus = solve_p_plus(lambda, rho)?;
    // independent oracle: fixed-point iteration from above
    let mut oracle = 1.0f64;
    for _ in 0..400 {
        oracle = 1.0 - (-oracle * rho / lambda).exp();
    }
    let p_plus_oracle_gap = (p_plus - oracle).abs();
    let s_minus_zero = s_minus_cdf(0, rho, mu)?;
    let k_max = (10.0f64.powi(-10).ln() / (1.0 - p_plus).ln()).ceil() as u32 + 1;
    let series_value = rarefaction_cdf_periodic(lambda, mu, rho, k_max)?;
    let (mc_value, mc_ci95) = periodic_mc(lambda, mu, rho, n, seed)?;
    let lambda_inf_value = rarefaction_periodic_lambda_inf(rho, mu)?;
    Ok(RarefactionPeriodicReport {
        lambda,
        mu,
        rho,
        replicas: n,
        p_plus,
        p_plus_oracle_gap,
        s_minus_zero,
        series_value,
        mc_value,
        mc_ci95,
        lambda_inf_value,
        pass_p_plus: p_plus_oracle_gap <= 1e-12,
        pass_s_minus_zero: s_minus_zero == 1.0 - rho / mu,
        pass_series_vs_mc: (series_value - mc_value).abs() <= mc_ci95,
        pass_lambda_inf: lambda_inf_value == 1.0 - rho / mu,
    })
}
