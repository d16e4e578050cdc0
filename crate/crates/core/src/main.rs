//! Command-line front end: simulation, norm evaluation, inflation runs,
//! collision-time quadratures, parameter sweeps, and the non-uniqueness
//! demonstration. Emits CSV series and JSON reports; writes a run manifest
//! next to the outputs.
//!
//! Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure.

use std::collections::VecDeque;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use peakon_lab::closed_form::{self, ClosedFormParams, CollisionMode};
use peakon_lab::dynamics::{InitialProfile, PeakonState};
use peakon_lab::experiments::{
    self, ExperimentConfig, InflationReport, NonuniquenessReport,
};
use peakon_lab::sobolev;
use peakon_lab::{DomainKind, Error, IntegratorConfig};

#[derive(Parser)]
#[command(
    name = "peakon-lab",
    version,
    about = "Numerical laboratory for antipeakon-peakon collisions on the line and circle"
)]
struct Cli {
    /// Emit machine-readable JSON on stdout instead of human-readable text.
    #[arg(long, global = true)]
    json: bool,
    /// Optional JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a 2-peakon to collision and write the trajectory CSV.
    Simulate(CommonArgs),
    /// Evaluate the H^s norm of a peakon state (formula + oracle).
    Norm(NormArgs),
    /// Norm-inflation run: integrate to collision, sample norms, fit slopes.
    Inflate(InflateArgs),
    /// Collision-time quadratures and the lifespan bound.
    CollisionTime(CollisionArgs),
    /// Grid of (epsilon, s) cells through parameter selection + inflation.
    Sweep(SweepArgs),
    /// Non-uniqueness demonstration against the limiting antipeakon.
    DemoNonunique(CommonArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum DomainArg {
    Line,
    Circle,
}

impl From<DomainArg> for DomainKind {
    fn from(d: DomainArg) -> Self {
        match d {
            DomainArg::Line => DomainKind::Line,
            DomainArg::Circle => DomainKind::Circle,
        }
    }
}

/// Optional values loadable from --config (flags override these).
#[derive(Debug, Default, serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    a: Option<f64>,
    b: Option<f64>,
    delta: Option<f64>,
    domain: Option<DomainKind>,
    s: Option<f64>,
    epsilon: Option<f64>,
    q_min: Option<f64>,
    rel_tol: Option<f64>,
    abs_tol: Option<f64>,
    samples: Option<usize>,
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Half-separation a (initial gap is 2a).
    #[arg(long)]
    a: Option<f64>,
    /// Peakon momentum b.
    #[arg(long)]
    b: Option<f64>,
    /// Asymmetry delta.
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Sobolev index for the hs_sq column / the gap measurements.
    #[arg(long)]
    s: Option<f64>,
    /// Collision threshold on the gap.
    #[arg(long)]
    q_min: Option<f64>,
    #[arg(long)]
    rel_tol: Option<f64>,
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Number of log-in-gap samples.
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV path (defaults into the output directory).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NormArgs {
    /// Comma-separated peak positions.
    #[arg(long)]
    positions: String,
    /// Comma-separated momenta (same count as positions).
    #[arg(long)]
    momenta: String,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
}

#[derive(Args)]
struct InflateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Auto-select (a, b, delta) for this smallness target instead of
    /// using the profile flags.
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct CollisionArgs {
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long, value_enum)]
    domain: Option<DomainArg>,
    /// Which speed function(s) to integrate against.
    #[arg(long, value_enum, default_value = "both")]
    mode: ModeArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Exact,
    Dominating,
    Both,
}

#[derive(Args)]
struct SweepArgs {
    /// Comma-separated smallness targets.
    #[arg(long, default_value = "0.5,0.1")]
    epsilons: String,
    /// Comma-separated Sobolev indices.
    #[arg(long, default_value = "0.8,1.3")]
    s_values: String,
    /// Comma-separated domains (line, circle).
    #[arg(long, default_value = "line,circle")]
    domains: String,
    /// Worker thread count (default: logical CPUs).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
}

/// Run manifest written next to the outputs of every command.
#[derive(Debug, Serialize)]
struct RunManifest {
    command: String,
    config_hash: String,
    start_unix_s: f64,
    end_unix_s: f64,
    outputs: Vec<PathBuf>,
    verdicts: Vec<(String, String, f64)>,
}

fn out_dir() -> PathBuf {
    std::env::var_os("PEAKON_LAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn now_unix() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn sha256_hex(text: &str) -> String {
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(manifest: &RunManifest) -> peakon_lab::Result<PathBuf> {
    let dir = out_dir();
    std::fs::create_dir_all(&dir)?;
    let path = dir.join(format!("{}-manifest.json", manifest.command));
    std::fs::write(&path, serde_json::to_string_pretty(manifest).unwrap())?;
    Ok(path)
}

fn load_file_config(path: &Option<PathBuf>) -> peakon_lab::Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("bad config file {}: {e}", p.display())))
        }
    }
}

/// Fully resolved run parameters (flags > config file > defaults).
struct Resolved {
    profile: InitialProfile,
    domain: DomainKind,
    s: f64,
    integrator: IntegratorConfig,
    sample_count: usize,
    out: Option<PathBuf>,
}

fn resolve(common: &CommonArgs, file: &FileConfig) -> peakon_lab::Result<Resolved> {
    let profile = InitialProfile::new(
        common.a.or(file.a).unwrap_or(0.1),
        common.b.or(file.b).unwrap_or(5.0),
        common.delta.or(file.delta).unwrap_or(0.5),
    )?;
    let defaults = IntegratorConfig::default();
    let integrator = IntegratorConfig {
        rel_tol: common.rel_tol.or(file.rel_tol).unwrap_or(defaults.rel_tol),
        abs_tol: common.abs_tol.or(file.abs_tol).unwrap_or(defaults.abs_tol),
        q_min: common.q_min.or(file.q_min).unwrap_or(defaults.q_min),
        ..defaults
    };
    Ok(Resolved {
        profile,
        domain: common.domain.map(Into::into).or(file.domain).unwrap_or(DomainKind::Line),
        s: common.s.or(file.s).unwrap_or(1.0),
        integrator,
        sample_count: common.samples.or(file.samples).unwrap_or(240),
        out: common.out.clone().or_else(|| file.out.clone()),
    })
}

fn experiment_config(r: &Resolved, epsilon: f64, out: Option<PathBuf>) -> ExperimentConfig {
    ExperimentConfig {
        epsilon,
        s: r.s,
        domain: r.domain,
        profile: r.profile,
        integrator: r.integrator,
        sample_count: r.sample_count,
        output_path: out,
    }
}

fn config_hash_of<T: Serialize>(value: &T) -> String {
    sha256_hex(&serde_json::to_string(value).unwrap())
}

fn report_json(
    verdict: &str,
    t: Option<f64>,
    w_t: f64,
    q_t: Option<f64>,
    fits: &[experiments::NamedFit],
    residuals: serde_json::Value,
    tolerances: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "verdict": verdict,
        "T": t,
        "w_T": w_t,
        "q_T": q_t,
        "fits": fits.iter().map(|f| serde_json::json!({
            "name": f.name,
            "exponent": f.fit.exponent,
            "r2": f.fit.r_squared,
        })).collect::<Vec<_>>(),
        "residuals": residuals,
        "tolerances": tolerances,
    })
}

fn cmd_simulate(cli: &Cli, args: &CommonArgs) -> peakon_lab::Result<()> {
    let start = now_unix();
    let file = load_file_config(&cli.config)?;
    let r = resolve(args, &file)?;
    let out_path = r
        .out
        .clone()
        .unwrap_or_else(|| out_dir().join(format!("trajectory-{}.csv", r.domain)));
    let config = experiment_config(&r, 1.0, Some(out_path.clone()));
    let report = experiments::run_inflation(&config)?;
    let manifest = RunManifest {
        command: "simulate".into(),
        config_hash: config_hash_of(&config),
        start_unix_s: start,
        end_unix_s: now_unix(),
        outputs: vec![out_path.clone()],
        verdicts: vec![
            (
                "collision_time".into(),
                format!("{:?}", report.event.0).to_lowercase(),
                report.t_collision.unwrap_or(f64::NAN),
            ),
            ("h1_drift".into(), "ok".into(), report.h1_drift),
        ],
    };
    write_manifest(&manifest)?;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({
                "output": out_path,
                "event": format!("{:?}", report.event.0).to_lowercase(),
                "t_event": report.event.1,
                "t_collision": report.t_collision,
                "h1_drift": report.h1_drift,
                "samples": report.samples.len(),
            })
        );
    } else {
        println!("wrote {} ({} samples)", out_path.display(), report.samples.len());
        match report.t_collision {
            Some(t) => println!("collision time T = {t:.12e} (event at t = {:.12e})", report.event.1),
            None => println!("no collision: run ended with {:?}", report.event.0),
        }
        println!("H1 energy drift = {:.3e}", report.h1_drift);
    }
    Ok(())
}

fn parse_list(text: &str, what: &str) -> peakon_lab::Result<Vec<f64>> {
    text.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad {what} entry {tok:?}: {e}")))
        })
        .collect()
}

fn cmd_norm(cli: &Cli, args: &NormArgs) -> peakon_lab::Result<()> {
    let file = load_file_config(&cli.config)?;
    let s = args.s.or(file.s).unwrap_or(1.0);
    let domain: DomainKind =
        args.domain.map(Into::into).or(file.domain).unwrap_or(DomainKind::Line);
    let positions = parse_list(&args.positions, "position")?;
    let momenta = parse_list(&args.momenta, "momentum")?;
    let state = PeakonState::new(0.0, positions, momenta, domain)?;
    // The factorized report when it applies; the direct oracle alone
    // otherwise (n != 2 or p1 = 0).
    let value = if state.n() == 2 && state.momenta[0] != 0.0 {
        serde_json::to_value(sobolev::hs_norm_2peakon(&state, s)?).unwrap()
    } else {
        serde_json::json!({ "s": s, "oracle_sq": sobolev::hs_norm_direct(&state, s)? })
    };
    println!("{value}");
    Ok(())
}

fn cmd_inflate(cli: &Cli, args: &InflateArgs) -> peakon_lab::Result<()> {
    let start = now_unix();
    let file = load_file_config(&cli.config)?;
    let mut r = resolve(&args.common, &file)?;
    let epsilon = args.epsilon.or(file.epsilon);
    if let Some(eps) = epsilon {
        r.profile = experiments::select_parameters(eps, r.s, r.domain)?;
    }
    let out_path = r
        .out
        .clone()
        .unwrap_or_else(|| out_dir().join(format!("inflate-{}-s{}.csv", r.domain, r.s)));
    let config = experiment_config(&r, epsilon.unwrap_or(1.0), Some(out_path.clone()));
    let report = experiments::run_inflation(&config)?;
    let manifest = RunManifest {
        command: "inflate".into(),
        config_hash: config_hash_of(&config),
        start_unix_s: start,
        end_unix_s: now_unix(),
        outputs: vec![out_path.clone()],
        verdicts: vec![(
            "verdict".into(),
            report.verdict.to_string(),
            report.s,
        )],
    };
    write_manifest(&manifest)?;
    print_inflation(cli.json, &report, &out_path);
    Ok(())
}

fn print_inflation(json: bool, report: &InflationReport, out_path: &Path) {
    if json {
        let residuals = serde_json::json!({
            "h1_drift": report.h1_drift,
            "initial_norm_sq": report.initial_norm_sq,
            "final_norm_sq": report.final_norm_sq,
        });
        println!(
            "{}",
            report_json(
                &report.verdict.to_string(),
                report.t_collision,
                report.w_t,
                report.q_t,
                &report.fits,
                residuals,
                serde_json::json!({}),
            )
        );
    } else {
        println!("wrote {} ({} samples)", out_path.display(), report.samples.len());
        println!("verdict: {} (s = {})", report.verdict, report.s);
        match report.t_collision {
            Some(t) => println!("collision time T = {t:.12e}"),
            None => println!("no collision: {:?}", report.event.0),
        }
        println!(
            "norm^2: initial {:.6e} -> final {:.6e} (x{:.2})",
            report.initial_norm_sq,
            report.final_norm_sq,
            report.final_norm_sq / report.initial_norm_sq
        );
        for f in &report.fits {
            println!(
                "fit {:>7}: exponent {:+.4} (r^2 = {:.6})",
                f.name, f.fit.exponent, f.fit.r_squared
            );
        }
    }
}

fn cmd_collision_time(cli: &Cli, args: &CollisionArgs) -> peakon_lab::Result<()> {
    let start = now_unix();
    let file = load_file_config(&cli.config)?;
    let profile = InitialProfile::new(
        args.a.or(file.a).unwrap_or(0.1),
        args.b.or(file.b).unwrap_or(5.0),
        args.delta.or(file.delta).unwrap_or(0.5),
    )?;
    let domain: DomainKind =
        args.domain.map(Into::into).or(file.domain).unwrap_or(DomainKind::Line);
    let params = ClosedFormParams::from_profile(&profile, domain)?;
    let t_exact = match args.mode {
        ModeArg::Dominating => None,
        _ => Some(closed_form::collision_time(&params, CollisionMode::ExactF)?),
    };
    let t_dom = match args.mode {
        ModeArg::Exact => None,
        _ => Some(closed_form::collision_time(&params, CollisionMode::DominatingG)?),
    };
    let bound = params.lifespan_bound_scale();
    let mut verdicts = Vec::new();
    if let Some(t) = t_exact {
        verdicts.push(("t_exact".into(), "ok".into(), t));
    }
    if let Some(t) = t_dom {
        verdicts.push(("t_dominating".into(), "ok".into(), t));
    }
    verdicts.push(("lifespan_bound_scale".into(), "ok".into(), bound));
    let manifest = RunManifest {
        command: "collision-time".into(),
        config_hash: config_hash_of(&(profile, domain)),
        start_unix_s: start,
        end_unix_s: now_unix(),
        outputs: vec![],
        verdicts,
    };
    write_manifest(&manifest)?;
    if cli.json {
        println!(
            "{}",
            serde_json::json!({
                "t_exact": t_exact,
                "t_dominating": t_dom,
                "lifespan_bound_scale": bound,
                "domain": domain,
            })
        );
    } else {
        if let Some(t) = t_exact {
            println!("T_exact      = {t:.12e}");
        }
        if let Some(t) = t_dom {
            println!("T_dominating = {t:.12e}");
        }
        println!("bound scale 1/(delta*sqrt(2b(b+delta))) = {bound:.12e}");
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> peakon_lab::Result<()> {
    let start = now_unix();
    let epsilons = parse_list(&args.epsilons, "epsilon")?;
    let s_values = parse_list(&args.s_values, "s")?;
    let domains: Vec<DomainKind> = args
        .domains
        .split(',')
        .map(|tok| match tok.trim() {
            "line" => Ok(DomainKind::Line),
            "circle" => Ok(DomainKind::Circle),
            other => Err(Error::Config(format!("bad domain {other:?}"))),
        })
        .collect::<peakon_lab::Result<_>>()?;
    let sample_count = args.samples.unwrap_or(200);
    let jobs = args
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(2))
        .max(1);

    let sweep_dir = out_dir().join("sweep");
    std::fs::create_dir_all(&sweep_dir)?;
    let mut queue: VecDeque<(f64, f64, DomainKind)> = VecDeque::new();
    for &eps in &epsilons {
        for &s in &s_values {
            for &domain in &domains {
                queue.push_back((eps, s, domain));
            }
        }
    }
    let queue = Mutex::new(queue);
    let results: Mutex<Vec<serde_json::Value>> = Mutex::new(Vec::new());
    let outputs: Mutex<Vec<PathBuf>> = Mutex::new(Vec::new());

    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let Some((eps, s, domain)) = queue.lock().unwrap().pop_front() else {
                    return;
                };
                let cell = format!("eps{eps}-s{s}-{domain}");
                let path = sweep_dir.join(format!("{cell}.csv"));
                let outcome = experiments::select_parameters(eps, s, domain).and_then(
                    |profile| {
                        let config = ExperimentConfig {
                            epsilon: eps,
                            s,
                            domain,
                            profile,
                            integrator: IntegratorConfig::default(),
                            sample_count,
                            output_path: Some(path.clone()),
                        };
                        experiments::run_inflation(&config)
                    },
                );
                let entry = match outcome {
                    Ok(report) => {
                        outputs.lock().unwrap().push(path.clone());
                        serde_json::json!({
                            "epsilon": eps, "s": s, "domain": domain,
                            "status": "ok",
                            "verdict": report.verdict.to_string(),
                            "T": report.t_collision,
                            "initial_norm": report.initial_norm_sq.sqrt(),
                            "output": path,
                        })
                    }
                    Err(err) => serde_json::json!({
                        "epsilon": eps, "s": s, "domain": domain,
                        "status": format!("error: {err}"),
                    }),
                };
                results.lock().unwrap().push(entry);
            });
        }
    });

    let mut summary = results.into_inner().unwrap();
    summary.sort_by_key(|v| {
        (
            format!("{:>24}", v["epsilon"]),
            format!("{:>24}", v["s"]),
            v["domain"].to_string(),
        )
    });
    let summary_path = sweep_dir.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())?;
    let mut all_outputs = outputs.into_inner().unwrap();
    all_outputs.push(summary_path.clone());
    let manifest = RunManifest {
        command: "sweep".into(),
        config_hash: config_hash_of(&(&epsilons, &s_values, &args.domains, sample_count)),
        start_unix_s: start,
        end_unix_s: now_unix(),
        outputs: all_outputs,
        verdicts: vec![("cells".into(), "ok".into(), summary.len() as f64)],
    };
    write_manifest(&manifest)?;
    if cli.json {
        println!("{}", serde_json::Value::Array(summary));
    } else {
        println!("wrote {}", summary_path.display());
        for row in &summary {
            println!(
                "eps={} s={} {}: {}",
                row["epsilon"], row["s"], row["domain"], row["status"]
            );
        }
    }
    Ok(())
}

fn cmd_demo_nonunique(cli: &Cli, args: &CommonArgs) -> peakon_lab::Result<()> {
    let start = now_unix();
    let file = load_file_config(&cli.config)?;
    let r = resolve(args, &file)?;
    let config = experiment_config(&r, 1.0, None);
    let report = experiments::nonuniqueness_demo(&config)?;
    let manifest = RunManifest {
        command: "demo-nonunique".into(),
        config_hash: config_hash_of(&config),
        start_unix_s: start,
        end_unix_s: now_unix(),
        outputs: vec![],
        verdicts: vec![
            ("verdict".into(), report.verdict.to_string(), report.s),
            ("l2_gap_rel".into(), "ok".into(), report.l2_gap_rel),
        ],
    };
    write_manifest(&manifest)?;
    print_demo(cli.json, &report);
    Ok(())
}

fn print_demo(json: bool, report: &NonuniquenessReport) {
    if json {
        let residuals = serde_json::json!({
            "pointwise": report.pointwise_residual,
            "l2_gap_rel": report.l2_gap_rel,
            "hs_gap_rel": report.hs_gap_rel,
            "solitary": report.solitary_residual,
        });
        let tolerances = serde_json::json!({
            "pointwise": 1e-2,
            "l2_gap_rel": 5e-2,
            "hs_gap_rel": 5e-2,
            "solitary": 0.0,
        });
        println!(
            "{}",
            report_json(
                &report.verdict.to_string(),
                Some(report.t_collision),
                report.w_t,
                Some(report.q_t),
                &[],
                residuals,
                tolerances,
            )
        );
    } else {
        println!("verdict: {} (s = {})", report.verdict, report.s);
        println!(
            "T = {:.12e}, w_T = {:.12e}, q_T = {:.12e}",
            report.t_collision, report.w_t, report.q_t
        );
        println!(
            "traveling antipeakon: speed = {:.12e}, x0 = {:.12e}",
            report.speed, report.x0
        );
        println!(
            "residuals: pointwise {:.3e}, L2 {:.3e}, H^s {:.3e}, solitary {:.1e}",
            report.pointwise_residual,
            report.l2_gap_rel,
            report.hs_gap_rel,
            report.solitary_residual
        );
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Unsupported(_) | Error::Io(_) => 1,
        _ => 2,
    }
}

fn run(cli: Cli) -> peakon_lab::Result<()> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(&cli, args),
        Command::Norm(args) => cmd_norm(&cli, args),
        Command::Inflate(args) => cmd_inflate(&cli, args),
        Command::CollisionTime(args) => cmd_collision_time(&cli, args),
        Command::Sweep(args) => cmd_sweep(&cli, args),
        Command::DemoNonunique(args) => cmd_demo_nonunique(&cli, args),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            err.print().ok();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
