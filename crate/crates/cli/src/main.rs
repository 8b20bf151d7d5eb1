use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use qrkick::experiments::{run_experiment, ExperimentConfig, RunOptions};
use qrkick::imaging::TofGeometry;
use qrkick::units::constants::PLANCK;
use qrkick::units::{
    depth_per_sublevel, derive_dimensionless, dipole_depth, talbot_time, AtomLineFile, PhysicalParams,
};

#[derive(Parser, Debug)]
#[command(name = "qrkick", version, about = "Kicked-particle simulations at quantum resonance")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Experiment configuration (JSON); defaults depend on the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for result.csv and result.json.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write every pipeline stage under <out>/intermediates.
    #[arg(long, global = true)]
    emit_intermediates: bool,
    /// Exit successfully even if some sweep points failed.
    #[arg(long, global = true)]
    allow_partial: bool,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print derived scales, dimensionless parameters and the dipole depth.
    Params(ParamsArgs),
    /// ⟨𝒥²/2⟩ on an (N, β) grid for all four models.
    CompareModels,
    /// Thermal ΔP_max against pulse duration.
    SweepTp,
    /// Scaling-law series and β = 0 energy inset.
    Scaling,
    /// Thermal ΔP_max against the pulse period around the Talbot time.
    ScanPeriod,
    /// Momentum distributions with and without the standing wave.
    Distribution,
}

#[derive(Args, Debug)]
struct ParamsArgs {
    /// Pulse duration in nanoseconds.
    #[arg(long)]
    pulse_duration_ns: Option<f64>,
    /// Potential depth V_d/h in MHz.
    #[arg(long)]
    depth_mhz: Option<f64>,
    /// Number of pulses.
    #[arg(long)]
    pulses: Option<u32>,
    /// Atom/laser data file; the bundled ⁸⁵Rb D₂ table if omitted.
    #[arg(long)]
    line_file: Option<PathBuf>,
}

impl Command {
    fn kind(&self) -> Option<&'static str> {
        match self {
            Command::Params(_) => None,
            Command::CompareModels => Some("compare-models"),
            Command::SweepTp => Some("sweep-tp"),
            Command::Scaling => Some("scaling"),
            Command::ScanPeriod => Some("scan-period"),
            Command::Distribution => Some("distribution"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let Some(kind) = cli.command.kind() else {
        let Command::Params(args) = &cli.command else {
            unreachable!()
        };
        print_params(&cli.global, args)?;
        return Ok(ExitCode::SUCCESS);
    };

    let mut cfg = load_config(&cli.global, Some(kind))?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = seed;
    }
    let out = cli
        .global
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    let opts = RunOptions {
        emit_intermediates: cli.global.emit_intermediates,
    };

    log::info!("running {kind}, seed {}, writing to {}", cfg.seed, out.display());
    let result = run_experiment(&cfg, opts)?;
    result
        .write_outputs(&out, &cfg)
        .with_context(|| format!("writing results to {}", out.display()))?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    let failed = result.failed_count();
    eprintln!(
        "{kind}: {} rows, {failed} failed, {:.1} s; wrote {}",
        result.rows.len(),
        result.runtimes.iter().sum::<f64>(),
        out.join("result.csv").display()
    );
    if failed > 0 && !cli.global.allow_partial {
        eprintln!("error: {failed} sweep point(s) failed (use --allow-partial to accept)");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn load_config(global: &GlobalArgs, kind: Option<&str>) -> anyhow::Result<ExperimentConfig> {
    match (&global.config, kind) {
        (Some(path), _) => {
            let cfg = ExperimentConfig::from_path(path).with_context(|| format!("loading {}", path.display()))?;
            if let Some(kind) = kind {
                if cfg.experiment.kind_name() != kind {
                    bail!(
                        "{} describes a {} experiment, not {kind}",
                        path.display(),
                        cfg.experiment.kind_name()
                    );
                }
            }
            Ok(cfg)
        }
        (None, Some(kind)) => Ok(ExperimentConfig::default_for(kind)?),
        (None, None) => Ok(ExperimentConfig::default_for("distribution")?),
    }
}

fn print_params(global: &GlobalArgs, args: &ParamsArgs) -> anyhow::Result<()> {
    let mut p: PhysicalParams = load_config(global, None)?.params;
    if let Some(ns) = args.pulse_duration_ns {
        p = p.with_pulse_duration(ns * 1e-9);
    }
    if let Some(mhz) = args.depth_mhz {
        p = p.with_depth_hz(mhz * 1e6);
    }
    if let Some(n) = args.pulses {
        p = p.with_pulses(n);
    }
    p.validate()?;
    let d = derive_dimensionless(&p)?;
    let geometry = TofGeometry::from_params(&p);
    let line = match &args.line_file {
        Some(path) => AtomLineFile::from_path(path).with_context(|| format!("reading {}", path.display()))?,
        None => AtomLineFile::rb85_d2(),
    };
    let data = line.line_data();
    let depth = dipole_depth(&data)?;
    let sublevels: Vec<_> = depth_per_sublevel(&data)?
        .into_iter()
        .map(|(m, v)| json!({ "m_f": m, "depth_j": v, "depth_hz": v / PLANCK }))
        .collect();
    let n_v = p.pulse_count as f64 * d.v_tilde;
    let report = json!({
        "params": p,
        "dimensionless": d,
        "talbot_time_s": talbot_time(&p),
        "pulse_period_s": p.period(),
        "thermal_momentum_width_recoil": p.thermal_momentum_width(),
        "meters_per_recoil_after_tof": geometry.meters_per_recoil(),
        "scaling": {
            "n_v_tilde": n_v,
            "sqrt_n_depth_hz": (p.pulse_count as f64 * p.potential_depth_hz).sqrt(),
        },
        "dipole_depth": {
            "atom": line.atom,
            "line": line.line,
            "depth_j": depth,
            "depth_hz": depth / PLANCK,
            "per_sublevel": sublevels,
        },
    });
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
