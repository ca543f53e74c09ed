use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use compresslab::density::{
    sigma_average_with, AverageMethod, DensityCurve, FourierGrid, SigmaEvaluator, Spectrum,
};
use compresslab::julia::{filled_julia, Bounds, EscapeParams, DEFAULT_MAX_ITER};
use compresslab::poly::{MergePolynomial, ESCAPE_RADIUS};
use compresslab::report::checks::{THETA0, THETA_GRID};
use compresslab::report::config::OutputFormat;
use compresslab::report::{
    parse_config, parse_tolerances, real_csv, run_checks, run_report_csv, to_json, write_output,
    ConfigFile, RunManifest, Tolerances,
};
use compresslab::schroeder::{phi_linear_approx, phi_taylor, theta_extrema};
use compresslab::sim::{run_experiment, Engine, Mode, SimConfig};
use compresslab::Error;

/// Exponential stochastic compression: simulations and analytic predictions.
#[derive(Parser)]
#[command(name = "compresslab", version)]
struct Cli {
    /// TOML file with one table per subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (also COMPRESSLAB_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo compression runs with theory columns.
    Simulate(SimulateArgs),
    /// Taylor coefficients of Phi and their linear approximation.
    Taylor(TaylorArgs),
    /// Extrema and midpoint of Theta over a fundamental interval.
    Theta(ThetaArgs),
    /// Rescaled ordered and disordered densities.
    Density(DensityArgs),
    /// Periodic correction sigma, its averages and the B integral.
    Sigma(SigmaArgs),
    /// Escape-time raster of the filled Julia set.
    Julia(JuliaArgs),
    /// Every acceptance quantity with pass/fail against tolerances.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    mode: Option<Mode>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    length: Option<u64>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    /// auto, chain or exchange.
    #[arg(long)]
    engine: Option<Engine>,
    /// Largest weight entering the deviation summary.
    #[arg(long)]
    compare_upto: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv or json.
    #[arg(long)]
    format: Option<OutputFormat>,
}

#[derive(Args)]
struct TaylorArgs {
    #[arg(long)]
    imax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ThetaArgs {
    /// Anchor of the fundamental interval [P(a), a].
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DensityArgs {
    #[arg(long)]
    x_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Initial non-empty density.
    #[arg(long)]
    p: Option<f64>,
    /// Quadrature cutoff R.
    #[arg(long)]
    radius: Option<f64>,
    /// Quadrature step h.
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SigmaArgs {
    #[arg(long, allow_negative_numbers = true)]
    x_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    x_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct JuliaArgs {
    /// re_min,re_max,im_min,im_max
    #[arg(long, allow_hyphen_values = true)]
    bounds: Option<String>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    max_iter: Option<u32>,
    #[arg(long)]
    escape_radius: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Analytic checks only.
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file overriding individual tolerances.
    #[arg(long)]
    tolerances: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Decode(_) | Error::Io(_) => 1,
        Error::Capacity(_) => 3,
        Error::NonFinite(_)
        | Error::Escaped { .. }
        | Error::Domain { .. }
        | Error::Accuracy { .. }
        | Error::Aliasing { .. } => 2,
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn out_dir(flag: Option<PathBuf>, file: Option<PathBuf>, command: &str) -> PathBuf {
    pick(flag, file, PathBuf::from("compresslab-out").join(command))
}

/// Outputs of one command before they are written.
struct Outcome {
    dir: PathBuf,
    files: Vec<(String, String)>,
    manifest: RunManifest,
    summary: String,
    /// Exit status when every step succeeded.
    status: u8,
}

fn finish(mut o: Outcome, started: Instant) -> Result<u8, Error> {
    for (name, contents) in &o.files {
        let path = write_output(&o.dir, name, contents)?;
        o.manifest.outputs.push(path);
    }
    o.manifest.wall_clock_seconds = started.elapsed().as_secs_f64();
    let path = write_output(&o.dir, "manifest.json", &to_json(&o.manifest)?)?;
    // a closed stdout must not turn a finished run into a failure
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", o.summary);
    for out in o.manifest.outputs.iter().chain([&path]) {
        let _ = writeln!(stdout, "wrote {out}");
    }
    Ok(o.status)
}

fn simulate(a: SimulateArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let s = &f.simulate;
    let d = SimConfig::default();
    let config = SimConfig {
        length: pick(a.length, s.length, d.length),
        steps: pick(a.steps, s.steps, d.steps),
        mode: pick(a.mode, s.mode, d.mode),
        p: pick(a.p, s.p, d.p),
        r: pick(a.r, s.r, d.r),
        seed: pick(a.seed, s.seed, d.seed),
        replicas: pick(a.replicas, s.replicas, d.replicas),
        engine: pick(a.engine, s.engine, d.engine),
        compare_upto: pick(a.compare_upto, s.compare_upto, d.compare_upto),
    };
    config.validate()?;
    let format = pick(a.format, s.format, OutputFormat::Csv);
    let report = run_experiment(&config)?;
    let last = report.final_step();
    let mut summary = format!(
        "step {}: {} cells, N_1 = {}\n",
        last.step,
        last.histogram.total_cells,
        last.histogram.count(1)
    );
    for i in 0..=config.compare_upto.min(last.ratios.len() - 1) {
        let show = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.5}"));
        summary += &format!(
            "  i={i:<3} ratio {:>12} theory {:>12}\n",
            show(last.ratios[i]),
            show(last.theory_ratios[i])
        );
    }
    match report.max_relative_deviation {
        Some(d) => summary += &format!("max relative deviation {d:.5}\n"),
        None => summary += "ratios undefined (no weight-1 cells)\n",
    }
    let file = match format {
        OutputFormat::Csv => ("simulate.csv".to_string(), run_report_csv(&report)),
        OutputFormat::Json => ("simulate.json".to_string(), to_json(&report)?),
    };
    Ok(Outcome {
        dir: out_dir(a.out, s.out.clone(), "simulate"),
        files: vec![file],
        manifest: RunManifest::new(
            "simulate",
            json!({ "config": config, "format": format }),
            Some(config.seed),
        ),
        summary,
        status: 0,
    })
}

fn taylor(a: TaylorArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let imax = pick(a.imax, f.taylor.imax, 8);
    if imax == 0 {
        return Err(Error::Config("--imax must be at least 1".into()));
    }
    let series = phi_taylor(imax)?;
    let rows = (1..=imax).map(|i| {
        let phi = series.coeff(i);
        let lin = phi_linear_approx(i, THETA0);
        vec![i as f64, phi, lin, phi - lin]
    });
    let csv = real_csv(&["i", "phi_i", "linear_approx", "difference"], rows);
    // the index column is an integer
    let csv = csv
        .lines()
        .enumerate()
        .map(|(k, line)| {
            if k == 0 {
                line.to_string()
            } else {
                let (_, rest) = line.split_once(',').unwrap();
                format!("{k},{rest}")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
        + "\n";
    Ok(Outcome {
        dir: out_dir(a.out, f.taylor.out.clone(), "taylor"),
        summary: csv.clone(),
        files: vec![("taylor.csv".into(), csv)],
        manifest: RunManifest::new("taylor", json!({ "imax": imax, "theta0": THETA0 }), None),
        status: 0,
    })
}

fn theta(a: ThetaArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let anchor = pick(a.a, f.theta.a, 0.5);
    let grid = pick(a.grid, f.theta.grid, THETA_GRID);
    let t = theta_extrema(anchor, grid)?;
    let body = to_json(&json!({
        "theta_min": t.theta_min,
        "theta_max": t.theta_max,
        "theta0": t.theta0,
        "a": t.a,
        "grid": t.grid_points,
        "argmin": t.argmin,
        "argmax": t.argmax,
    }))?;
    Ok(Outcome {
        dir: out_dir(a.out, f.theta.out.clone(), "theta"),
        summary: body.clone(),
        files: vec![("theta.json".into(), body)],
        manifest: RunManifest::new("theta", json!({ "a": anchor, "grid": grid }), None),
        status: 0,
    })
}

fn grid(
    radius: Option<f64>,
    step: Option<f64>,
    default: FourierGrid,
) -> Result<FourierGrid, Error> {
    match (radius, step) {
        (None, None) => Ok(default),
        (r, s) => FourierGrid::new(r.unwrap_or(default.radius), s.unwrap_or(default.step)),
    }
}

fn density(a: DensityArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let s = &f.density;
    let x_max = pick(a.x_max, s.x_max, 8.0);
    let points = pick(a.points, s.points, 800);
    let p = pick(a.p, s.p, 1.0);
    if !(x_max > 0.0 && x_max.is_finite()) {
        return Err(Error::Config(format!(
            "--x-max must be positive, got {x_max}"
        )));
    }
    let g = grid(
        a.radius.or(s.radius),
        a.step.or(s.step),
        FourierGrid::density_default(),
    )?;
    let spectrum = Spectrum::new(g)?;
    let curve = DensityCurve::build(&spectrum, x_max, points, p)?;
    let rows =
        (0..curve.xs.len()).map(|k| vec![curve.xs[k], curve.ordered[k], curve.disordered[k]]);
    let csv = real_csv(&["x", "rho_ordered", "rho_disordered"], rows);
    let summary = format!(
        "mass on [0,{x_max}]: ordered {:.9}, disordered {:.9}\n",
        curve.moment(&curve.ordered, 0),
        curve.moment(&curve.disordered, 0)
    );
    Ok(Outcome {
        dir: out_dir(a.out, s.out.clone(), "density"),
        files: vec![("density.csv".into(), csv)],
        manifest: RunManifest::new(
            "density",
            json!({ "x_max": x_max, "points": points, "p": p, "radius": g.radius, "step": g.step }),
            None,
        ),
        summary,
        status: 0,
    })
}

fn sigma(a: SigmaArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let s = &f.sigma;
    let x_min = pick(a.x_min, s.x_min, 0.0);
    let x_max = pick(a.x_max, s.x_max, 1.0);
    let points = pick(a.points, s.points, 20);
    if !(x_min < x_max) || points < 1 {
        return Err(Error::Config(format!(
            "need x_min < x_max and points >= 1, got {x_min}, {x_max}, {points}"
        )));
    }
    let g = grid(
        a.radius.or(s.radius),
        a.step.or(s.step),
        FourierGrid::correction_default(),
    )?;
    let spectrum = Spectrum::new(g)?;
    let mut averages = serde_json::Map::new();
    for method in AverageMethod::ALL {
        averages.insert(
            method.name().into(),
            sigma_average_with(&spectrum, method)?.into(),
        );
    }
    let b = spectrum.b_integral()?;
    let evaluator = SigmaEvaluator::from_spectrum(spectrum);
    let mut rows = Vec::with_capacity(points + 1);
    let mut periodicity: f64 = 0.0;
    for k in 0..=points {
        let x = x_min + (x_max - x_min) * k as f64 / points as f64;
        let v = evaluator.sigma(x)?;
        let delta = v - evaluator.sigma(x + 1.0)?;
        periodicity = periodicity.max(delta.abs());
        rows.push(vec![x, v, delta]);
    }
    let csv = real_csv(&["x", "sigma", "delta"], rows);
    let body = to_json(&json!({
        "average_by_method": averages,
        "b_residual": b.norm(),
        "b_real": b.re,
        "b_imag": b.im,
        "periodicity_max_delta": periodicity,
        "radius": g.radius,
        "step": g.step,
    }))?;
    Ok(Outcome {
        dir: out_dir(a.out, s.out.clone(), "sigma"),
        summary: body.clone(),
        files: vec![("sigma.csv".into(), csv), ("sigma.json".into(), body)],
        manifest: RunManifest::new(
            "sigma",
            json!({ "x_min": x_min, "x_max": x_max, "points": points, "radius": g.radius, "step": g.step }),
            None,
        ),
        status: 0,
    })
}

fn julia(a: JuliaArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let s = &f.julia;
    let bounds = match a.bounds.or(s.bounds.clone()) {
        Some(text) => text.parse::<Bounds>()?,
        None => Bounds::default(),
    };
    let width = pick(a.width, s.width, 500);
    let height = pick(a.height, s.height, 400);
    let params = EscapeParams {
        max_iter: pick(a.max_iter, s.max_iter, DEFAULT_MAX_ITER),
        escape_radius: pick(a.escape_radius, s.escape_radius, ESCAPE_RADIUS),
    };
    if params.max_iter > compresslab::julia::MAX_GRAY {
        return Err(Error::Config(format!(
            "--max-iter above {} does not fit a graymap",
            compresslab::julia::MAX_GRAY
        )));
    }
    let r = pick(a.r, s.r, 0.5);
    let poly = MergePolynomial::new(r)?;
    let raster = filled_julia(&poly, bounds, width, height, params)?;
    let summary = format!(
        "{}x{} raster, {} interior pixels\n",
        width,
        height,
        raster.interior_count()
    );
    Ok(Outcome {
        dir: out_dir(a.out, s.out.clone(), "julia"),
        files: vec![
            ("julia.pgm".into(), raster.to_pgm()),
            ("julia.csv".into(), raster.to_csv()),
        ],
        manifest: RunManifest::new(
            "julia",
            json!({ "bounds": bounds, "width": width, "height": height, "params": params, "r": r }),
            None,
        ),
        summary,
        status: 0,
    })
}

fn report(a: ReportArgs, f: &ConfigFile) -> Result<Outcome, Error> {
    let s = &f.report;
    let quick = a.quick || s.quick.unwrap_or(false);
    let seed = pick(a.seed, s.seed, 0);
    let tolerances = match a.tolerances.or(s.tolerances.clone()) {
        Some(path) => parse_tolerances(&read(&path)?)?,
        None => Tolerances::default(),
    };
    let bundle = run_checks(&tolerances, quick, seed)?;
    let mut summary = String::new();
    for c in &bundle.checks {
        summary += &format!(
            "{:>2} {:<40} {:>12.3e} <= {:<9.1e} {}\n",
            c.criterion,
            c.name,
            c.value,
            c.tolerance,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    let body = to_json(&json!({
        "quick": bundle.quick,
        "seed": bundle.seed,
        "tolerances": tolerances,
        "checks": bundle.checks,
        "all_pass": bundle.all_pass,
    }))?;
    let mut manifest = RunManifest::new(
        "report",
        json!({ "quick": quick, "tolerances": tolerances }),
        Some(seed),
    );
    manifest.parameters["timings"] = serde_json::to_value(&bundle.timings).unwrap_or_default();
    Ok(Outcome {
        dir: out_dir(a.out, s.out.clone(), "report"),
        files: vec![("report.json".into(), body)],
        manifest,
        summary,
        status: if bundle.all_pass { 0 } else { 2 },
    })
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn threads(flag: Option<usize>, file: Option<usize>) -> Result<Option<usize>, Error> {
    let env = match std::env::var("COMPRESSLAB_THREADS") {
        Ok(v) => Some(
            v.parse::<usize>()
                .map_err(|_| Error::Config(format!("COMPRESSLAB_THREADS='{v}' is not a count")))?,
        ),
        Err(_) => None,
    };
    match flag.or(file).or(env) {
        Some(0) => Err(Error::Config("thread count must be at least 1".into())),
        n => Ok(n),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let started = Instant::now();
    let file = match &cli.config {
        Some(path) => parse_config(&read(path)?)?,
        None => ConfigFile::default(),
    };
    if let Some(n) = threads(cli.threads, file.threads)? {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(e.to_string()))?;
    }
    let outcome = match cli.command {
        Command::Simulate(a) => simulate(a, &file)?,
        Command::Taylor(a) => taylor(a, &file)?,
        Command::Theta(a) => theta(a, &file)?,
        Command::Density(a) => density(a, &file)?,
        Command::Sigma(a) => sigma(a, &file)?,
        Command::Julia(a) => julia(a, &file)?,
        Command::Report(a) => report(a, &file)?,
    };
    finish(outcome, started)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
