use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use thbfrac::bench::{run_simulation, Preset, Resolution, RunConfig};

#[derive(Parser)]
#[command(name = "thbfrac", version, about = "Adaptive THB-spline phase-field fracture benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark and write summary, contour and mesh files.
    Run(RunArgs),
    /// Print the resolved configuration as JSON.
    Config(ConfigArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    #[value(name = "sen_tensile", alias = "sen-tensile")]
    SenTensile,
    #[value(name = "sen_shear", alias = "sen-shear")]
    SenShear,
}

#[derive(Clone, Copy, ValueEnum)]
enum MeshArg {
    Tp,
    Thb,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    At1,
    At2,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    #[value(name = "2")]
    Two,
    #[value(name = "4")]
    Four,
}

#[derive(Clone, Copy, ValueEnum)]
enum ResolutionArg {
    Coarse,
    Fine,
}

#[derive(Clone, Copy, ValueEnum)]
enum SteppingArg {
    Explicit,
    Implicit,
    Hybrid,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long, value_enum, default_value = "sen_tensile")]
    preset: PresetArg,
    #[arg(long, value_enum)]
    mesh: Option<MeshArg>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    #[arg(long, value_enum)]
    order: Option<OrderArg>,
    #[arg(long, value_enum, default_value = "fine")]
    resolution: ResolutionArg,
    #[arg(long, value_enum)]
    stepping: Option<SteppingArg>,
    /// JSON file merged over the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Dotted override such as `material.length_scale=0.03`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

fn resolve(args: &ConfigArgs, out: Option<&PathBuf>) -> anyhow::Result<RunConfig> {
    let preset = match args.preset {
        PresetArg::SenTensile => Preset::SenTensile,
        PresetArg::SenShear => Preset::SenShear,
    };
    let resolution = match args.resolution {
        ResolutionArg::Coarse => Resolution::Coarse,
        ResolutionArg::Fine => Resolution::Fine,
    };
    // Flags act as overrides placed before the explicit `--set` ones.
    let mut overrides = Vec::new();
    if let Some(m) = args.mesh {
        overrides.push(format!("mesh.kind={}", if matches!(m, MeshArg::Tp) { "tp" } else { "thb" }));
    }
    if let Some(m) = args.model {
        overrides.push(format!("model.family={}", if matches!(m, ModelArg::At1) { "at1" } else { "at2" }));
    }
    if let Some(o) = args.order {
        overrides.push(format!("model.order={}", if matches!(o, OrderArg::Two) { "2" } else { "4" }));
    }
    if let Some(s) = args.stepping {
        let name = match s {
            SteppingArg::Explicit => "explicit",
            SteppingArg::Implicit => "implicit",
            SteppingArg::Hybrid => "hybrid",
        };
        overrides.push(format!("refinement.policy={name}"));
    }
    if let Some(dir) = out {
        overrides.push(format!("output.dir={}", serde_json::to_string(dir).context("output path")?));
    }
    overrides.extend(args.overrides.iter().cloned());
    Ok(RunConfig::load(RunConfig::preset(preset, resolution), args.config.as_deref(), &overrides)?)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Config(args) => resolve(&args, None).and_then(|cfg| {
            println!("{}", serde_json::to_string_pretty(&cfg)?);
            Ok(())
        }),
        Command::Run(args) => resolve(&args.config, Some(&args.out)).and_then(|cfg| {
            let out = run_simulation(&cfg)?;
            let last = out.reports.last().expect("initial report");
            log::info!(
                "finished {} steps: dissipation {:.6e}, dofs {}, elements {}",
                out.reports.len() - 1,
                last.dissipation,
                last.dofs,
                last.elements
            );
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
