use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use splbm_cli::config::{parse_list, GeneratorOptions};
use splbm_cli::{
    cmd_bench, cmd_generate, cmd_run, cmd_stats, load_config, CliError, GenerateArgs, OutputFormat, StatsArgs,
};
use splbm_core::engine::{Method, Precision};
use splbm_core::lattice::Arrangement;
use splbm_core::overhead::Scheme;

/// Sparse-geometry lattice Boltzmann solver and cost model.
#[derive(Parser)]
#[command(name = "splbm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated geometry (`.bin` selects the binary format).
    Generate(GenerateCmd),
    /// Tile statistics and predicted overheads of a geometry.
    Stats(StatsCmd),
    /// Run a simulation described by a configuration file.
    Run(RunCmd),
    /// Measure MLUPS for one or more methods.
    Bench(BenchCmd),
}

#[derive(Args)]
struct GenerateCmd {
    /// cavity2d, cavity3d, channel2d or ras3d.
    #[arg(long)]
    kind: String,
    /// Comma separated domain size, e.g. `192,192,192`.
    #[arg(long)]
    dims: String,
    #[arg(long, default_value_t = 0.1)]
    lid_velocity: f64,
    #[arg(long, default_value_t = 0.05)]
    inlet_velocity: f64,
    #[arg(long, default_value_t = 1.0)]
    outlet_density: f64,
    /// Solid disc in a channel as `cx,cy,radius`.
    #[arg(long)]
    obstacle: Option<String>,
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long)]
    porosity: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct StatsCmd {
    #[arg(short, long)]
    geometry: PathBuf,
    /// Tile edge; 16 in 2D and 4 in 3D by default.
    #[arg(long)]
    tile: Option<usize>,
    #[arg(long)]
    lattice: Option<Arrangement>,
    #[arg(long, default_value = "f64")]
    precision: Precision,
    #[arg(long, default_value = "t2c,tgb,cm,fia")]
    methods: String,
    /// Comma separated periodic axes.
    #[arg(long)]
    periodic: Option<String>,
    #[arg(long, default_value = "kv")]
    format: OutputFormat,
}

#[derive(Args)]
struct RunCmd {
    #[arg(short, long)]
    config: PathBuf,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Extra `key=value` settings, applied after the file.
    #[arg(long = "set")]
    set: Vec<String>,
}

#[derive(Args)]
struct BenchCmd {
    #[arg(short, long)]
    config: PathBuf,
    /// Comma separated, e.g. `dense,t2c,tgb`.
    #[arg(long)]
    methods: Option<String>,
    /// Peak memory bandwidth in bytes per second; enables the BU column.
    #[arg(long)]
    mem_bandwidth: Option<f64>,
    #[arg(long)]
    warmup: Option<u64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    /// Compare the fields of every method against the first.
    #[arg(long)]
    check: bool,
    #[arg(long = "set")]
    set: Vec<String>,
    #[arg(long, default_value = "kv")]
    format: OutputFormat,
}

fn periodic_axes(list: Option<&str>) -> Result<[bool; 3], CliError> {
    let mut p = [false; 3];
    for axis in list.into_iter().flat_map(|l| l.split(',')).map(str::trim) {
        match axis {
            "x" => p[0] = true,
            "y" => p[1] = true,
            "z" => p[2] = true,
            "" | "none" => {}
            other => return Err(CliError::Config(format!("unknown periodic axis `{other}`"))),
        }
    }
    Ok(p)
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let stdout = &mut std::io::stdout().lock();
    match cli.command {
        Command::Generate(c) => {
            let args = GenerateArgs {
                kind: c.kind,
                dims: parse_list("dims", &c.dims)?,
                options: GeneratorOptions {
                    lid_velocity: c.lid_velocity,
                    inlet_velocity: c.inlet_velocity,
                    outlet_density: c.outlet_density,
                    obstacle: c.obstacle.map(|o| parse_list("obstacle", &o)).transpose()?,
                    diameter: c.diameter,
                    porosity: c.porosity,
                    seed: c.seed,
                },
                output: c.output,
            };
            cmd_generate(&args, stdout)
        }
        Command::Stats(c) => {
            let args = StatsArgs {
                geometry: c.geometry,
                tile: c.tile,
                lattice: c.lattice,
                precision: c.precision,
                schemes: parse_list::<Scheme>("methods", &c.methods)?,
                periodic: periodic_axes(c.periodic.as_deref())?,
                format: c.format,
            };
            cmd_stats(&args, stdout)
        }
        Command::Run(c) => {
            let mut set = c.set;
            if let Some(m) = c.method {
                set.push(format!("sim.method={m}"));
            }
            if let Some(s) = c.steps {
                set.push(format!("sim.steps={s}"));
            }
            if let Some(t) = c.threads {
                set.push(format!("sim.threads={t}"));
            }
            let mut cfg = load_config(&c.config, &set)?;
            if let Some(dir) = c.output_dir {
                // Relative to the working directory, unlike paths in the file.
                let dir = std::env::current_dir().map(|cwd| cwd.join(&dir)).unwrap_or(dir);
                cfg.set("sim.output_dir", &dir.to_string_lossy())
                    .map_err(CliError::Config)?;
            }
            cmd_run(&cfg, stdout)
        }
        Command::Bench(c) => {
            let mut set = c.set;
            if let Some(m) = c.methods {
                set.push(format!("bench.methods={m}"));
            }
            if let Some(b) = c.mem_bandwidth {
                set.push(format!("bench.mem_bandwidth={b}"));
            }
            if let Some(w) = c.warmup {
                set.push(format!("bench.warmup={w}"));
            }
            if let Some(s) = c.steps {
                set.push(format!("sim.steps={s}"));
            }
            if let Some(t) = c.threads {
                set.push(format!("sim.threads={t}"));
            }
            if c.check {
                set.push("bench.check=true".into());
            }
            let cfg = load_config(&c.config, &set)?;
            cmd_bench(&cfg, c.format, stdout)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
