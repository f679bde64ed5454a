use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use s3flow::flow::{FlowEngine, Outcome};
use s3flow::io::{self, RunConfig, SnapshotFile};
use s3flow::shadow::{self, ShadowModel, ShadowState};
use s3flow::spectral::SpectralSpace;
use s3flow::{beckner, curvature, mobius, morse, verify, Error};

/// Spectral laboratory for the prescribed T-curvature flow on the 3-sphere.
#[derive(Parser, Debug)]
#[command(name = "s3flow", version)]
struct Cli {
    /// Flat `key = value` configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate the flow and write diagnostics and the final state.
    Flow(FlowArgs),
    /// Integrate the reduced (p, ε) dynamics.
    Shadow(ShadowArgs),
    /// Print the operator spectrum up to a band limit.
    Spectrum {
        #[arg(long = "K", default_value_t = 16)]
        k: usize,
    },
    /// Run the Morse existence gate on critical point data or on a prescribed function.
    Morse(MorseArgs),
    /// Build a bubble and report its invariants.
    Bubble(BubbleArgs),
    /// Run the acceptance battery.
    Verify(VerifyArgs),
}

/// Options shared with the configuration file. Values are validated by the config parser.
#[derive(Args, Debug, Default)]
struct Common {
    /// Prescribed function: const2, axial:δ, harmonics:k.l.m=a,... or coeffs:k.l.m=a,...
    #[arg(long, allow_hyphen_values = true)]
    f: Option<String>,
    /// Band limit.
    #[arg(long = "K", allow_hyphen_values = true)]
    k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    output_dir: Option<String>,
    /// Comma-separated subset of csv,json.
    #[arg(long)]
    formats: Option<String>,
}

#[derive(Args, Debug)]
struct FlowArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    t_max: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    tol_converged: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    eps_min: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    oversample: Option<String>,
    /// min_grid, one or max_grid.
    #[arg(long)]
    sigma_mode: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    n_diag: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    max_steps: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    normalize_tol: Option<String>,
    /// Initial factor, e.g. `bubble:0,0,0,1,0.6+random:0.05` or `snapshot:state.json`.
    #[arg(long, allow_hyphen_values = true)]
    w0: Option<String>,
}

#[derive(Args, Debug)]
struct ShadowArgs {
    #[command(flatten)]
    common: Common,
    /// Initial centre `x1,x2,x3,x4` (normalised).
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 10.0)]
    horizon: f64,
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
}

#[derive(Args, Debug)]
struct MorseArgs {
    #[command(flatten)]
    common: Common,
    /// JSON list of critical points `{index, laplacian_negative, value}`.
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BubbleArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_hyphen_values = true)]
    p: String,
    #[arg(long)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    oversample: usize,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Comma-separated item names.
    #[arg(long, value_delimiter = ',')]
    only: Option<Vec<String>>,
    /// Write the full report as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Perturb the operator multiplier by this relative amount (negative control).
    #[arg(long, hide = true, allow_hyphen_values = true)]
    fault_multiplier: Option<f64>,
}

fn push(out: &mut Vec<(String, String)>, key: &str, value: &Option<String>) {
    if let Some(v) = value {
        out.push((key.to_string(), v.clone()));
    }
}

impl Common {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = Vec::new();
        push(&mut o, "f", &self.f);
        push(&mut o, "K", &self.k);
        push(&mut o, "output_dir", &self.output_dir);
        push(&mut o, "formats", &self.formats);
        o
    }
}

impl FlowArgs {
    fn overrides(&self) -> Vec<(String, String)> {
        let mut o = self.common.overrides();
        for (key, value) in [
            ("dt", &self.dt),
            ("t_max", &self.t_max),
            ("tol_converged", &self.tol_converged),
            ("eps_min", &self.eps_min),
            ("oversample", &self.oversample),
            ("sigma_mode", &self.sigma_mode),
            ("seed", &self.seed),
            ("n_diag", &self.n_diag),
            ("max_steps", &self.max_steps),
            ("normalize_tol", &self.normalize_tol),
            ("w0", &self.w0),
        ] {
            push(&mut o, key, value);
        }
        o
    }
}

/// Errors that come from user input rather than from a computation.
fn is_usage(e: &anyhow::Error) -> bool {
    matches!(
        e.downcast_ref::<Error>(),
        Some(Error::Parameter(_) | Error::Config { .. } | Error::Positivity { .. } | Error::Domain { .. })
    )
}

fn parse_point(text: &str) -> anyhow::Result<mobius::Point> {
    let v: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| Error::Parameter(format!("p: expected four comma-separated numbers, got `{text}`")))?;
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if v.len() != 4 || !(n > 0.0) {
        return Err(Error::Parameter(format!("p: expected a non-zero 4-vector, got `{text}`")).into());
    }
    Ok([v[0] / n, v[1] / n, v[2] / n, v[3] / n])
}

fn run_flow(cfg: &RunConfig) -> anyhow::Result<()> {
    let f = cfg.f.to_field()?;
    let space = SpectralSpace::new(cfg.flow.band_limit, cfg.flow.oversample)?;
    let w0 = cfg.w0.to_field(&space, cfg.flow.seed)?;
    let engine = FlowEngine::new(space.clone(), &f)?;
    let run = engine.run(&w0, &cfg.flow)?;
    let dir = &cfg.output_dir;
    if cfg.formats.csv {
        io::emit_diagnostics(&dir.join("diagnostics.csv"), &run.records)?;
    }
    if cfg.formats.json {
        let snap = SnapshotFile::new(run.final_state.w(), space.grid().shape(), run.final_state.t, &cfg.hash());
        io::save_snapshot(&dir.join("final_state.json"), &snap)?;
        let summary = serde_json::json!({
            "outcome": run.outcome,
            "records": run.records.len(),
            "rejected_steps": run.rejected_steps,
            "config_hash": cfg.hash(),
            "config": cfg.to_text(),
        });
        io::save_json(&dir.join("summary.json"), &summary)?;
    }
    let last = run.records.last().context("flow produced no records")?;
    let outcome = match run.outcome {
        Outcome::Converged { t } => format!("converged at t = {t}"),
        Outcome::Concentrating { t, p, eps } => format!("concentrating at t = {t}: p = {p:?}, eps = {eps}"),
        Outcome::HorizonReached { t } => format!("horizon reached at t = {t}"),
        Outcome::StepLimit { t } => format!("step limit reached at t = {t}"),
    };
    println!("{outcome}");
    println!(
        "steps {} (rejected {}), E_f = {:.12e}, F2 = {:.3e}, alpha = {:.12}",
        run.records.len() - 1,
        run.rejected_steps,
        last.energy_f,
        last.f2,
        last.alpha
    );
    println!("output in {}", dir.display());
    Ok(())
}

fn run_shadow(cfg: &RunConfig, args: &ShadowArgs) -> anyhow::Result<()> {
    let f = cfg.f.to_field()?;
    let model = ShadowModel::new(&f)?;
    let init = ShadowState { p: parse_point(&args.p)?, eps: args.eps, s: 0.0, t: 0.0 };
    let traj = shadow::integrate_shadow(&model, init, args.horizon, args.dt)?;
    if cfg.formats.csv {
        io::write_atomic(&cfg.output_dir.join("shadow.csv"), io::shadow_csv(&traj.states).as_bytes())?;
    }
    if cfg.formats.json {
        io::save_json(&cfg.output_dir.join("shadow.json"), &traj)?;
    }
    let end = traj.states.last().context("empty shadow trajectory")?;
    println!("t = {}, s = {}, p = {:?}, eps = {}", end.t, end.s, end.p, end.eps);
    if traj.left_domain {
        println!("trajectory stopped: eps left (0, 1)");
    }
    Ok(())
}

fn run_morse(cfg: &RunConfig, args: &MorseArgs) -> anyhow::Result<()> {
    let data = match &args.data {
        Some(path) => io::load_morse_data(path)?,
        None => morse::extract_morse_data(&cfg.f.to_field()?)?,
    };
    let rep = morse::report(&data);
    if cfg.formats.json {
        io::save_json(&cfg.output_dir.join("morse_report.json"), &rep)?;
    }
    println!("{}", serde_json::to_string_pretty(&rep)?);
    Ok(())
}

fn run_bubble(cfg: &RunConfig, args: &BubbleArgs) -> anyhow::Result<()> {
    let p = parse_point(&args.p)?;
    let k = cfg.flow.band_limit;
    let space = SpectralSpace::new(k, args.oversample)?;
    let w = mobius::bubble(&space, &p, args.eps)?;
    let s = curvature::MetricSample::new(&space, &w)?;
    let t_dev = s.t.values().iter().map(|v| (v - 2.0).abs()).fold(0.0, f64::max);
    println!("band limit {k}, eps {}, p {:?}", args.eps, p);
    println!("sup |T - 2|          {t_dev:.3e}");
    println!("energy E             {:.3e}", s.energy());
    println!("volume / 2pi^2 - 1   {:.3e}", s.volume / curvature::SPHERE_AREA - 1.0);
    println!("Ache-Chang gap       {:.3e}", curvature::ache_chang_gap(&space, &w)?);
    if cfg.formats.json {
        let snap = SnapshotFile::new(&w, space.grid().shape(), 0.0, &cfg.hash());
        io::save_snapshot(&cfg.output_dir.join("bubble.json"), &snap)?;
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs) -> anyhow::Result<bool> {
    let opts = verify::VerifyOptions { only: args.only.clone(), fault_multiplier: args.fault_multiplier };
    let reports = verify::verify_suite(&opts)?;
    for r in &reports {
        println!("{}", r.table());
    }
    if let Some(path) = &args.json {
        io::save_json(path, &reports)?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    println!("{} of {} items passed", reports.len() - failed, reports.len());
    Ok(failed == 0)
}

fn config_for(file: Option<&Path>, overrides: Vec<(String, String)>) -> anyhow::Result<RunConfig> {
    Ok(RunConfig::from_sources(file, &overrides)?)
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let file = cli.config.as_deref();
    match &cli.command {
        Command::Flow(args) => run_flow(&config_for(file, args.overrides())?)?,
        Command::Shadow(args) => run_shadow(&config_for(file, args.common.overrides())?, args)?,
        Command::Spectrum { k } => {
            println!("k,Lambda_k,multiplicity");
            for (k, (lambda, mult)) in beckner::spectrum(*k).into_iter().enumerate() {
                println!("{k},{lambda},{mult}");
            }
        }
        Command::Morse(args) => run_morse(&config_for(file, args.common.overrides())?, args)?,
        Command::Bubble(args) => run_bubble(&config_for(file, args.common.overrides())?, args)?,
        Command::Verify(args) => {
            if file.is_some() {
                bail!("verify runs fixed experiments and takes no configuration file");
            }
            return run_verify(args);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
