//! Command implementations behind the `splbm` binary.
//!
//! Every command writes its report to the supplied writer only after all
//! work succeeded, so failures never leave partial output behind.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use splbm_core::engine::{self, build_solver, Method, Precision};
use splbm_core::geometry::{write_geometry, Geometry};
use splbm_core::lattice::Arrangement;
use splbm_core::overhead::{bandwidth_utilization, CostParams, GeometryStats, OverheadReport, Scheme};
use splbm_core::tiling::build_tile_grid;

pub mod config;

use config::{generator_spec, Config, GeneratorOptions};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] splbm_core::Error),
    #[error("cannot write output: {0}")]
    Output(#[from] std::io::Error),
}

impl CliError {
    /// 3 for a simulation that produced non-finite values, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(splbm_core::Error::NumericalFailure { .. }) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Kv,
    Text,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "kv" => Ok(OutputFormat::Kv),
            "text" => Ok(OutputFormat::Text),
            other => Err(format!("unknown output format `{other}`")),
        }
    }
}

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key}={value}");
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub kind: String,
    pub dims: Vec<usize>,
    pub options: GeneratorOptions,
    pub output: PathBuf,
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let spec = generator_spec(&args.kind, &args.dims, &args.options)?;
    let g = splbm_core::geometry::generate(&spec)?;
    write_geometry(&args.output, &g, None)?;
    let mut s = String::new();
    kv(&mut s, "path", args.output.display());
    geometry_summary(&mut s, &g);
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn geometry_summary(s: &mut String, g: &Geometry) {
    let dims = g.dims();
    kv(s, "dims", format!("{},{},{}", dims[0], dims[1], dims[2]));
    kv(s, "n_nodes", g.n_nodes());
    kv(s, "n_fnodes", g.n_fnodes());
    kv(s, "phi", format!("{:.6}", g.porosity().0));
}

#[derive(Debug, Clone)]
pub struct StatsArgs {
    pub geometry: PathBuf,
    pub tile: Option<usize>,
    pub lattice: Option<Arrangement>,
    pub precision: Precision,
    pub schemes: Vec<Scheme>,
    pub periodic: [bool; 3],
    pub format: OutputFormat,
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let g = splbm_core::geometry::read_geometry(&args.geometry)?;
    let arr = args.lattice.unwrap_or(if g.dim() == 2 {
        Arrangement::D2Q9
    } else {
        Arrangement::D3Q19
    });
    let a = args.tile.unwrap_or_else(|| engine::default_tile_edge(g.dim()));
    let tg = build_tile_grid(&g, a, arr.descriptor(), args.periodic)?;
    let ts = tg.stats();
    let (phi, _) = g.porosity();
    let params = CostParams::new(arr, args.precision.bytes(), a)?;
    let gs = GeometryStats::from_tiles(phi, &ts)?;
    let report = OverheadReport::build(&params, &gs, &args.schemes)?;

    let mut s = String::new();
    match args.format {
        OutputFormat::Kv => {
            kv(&mut s, "n_nodes", g.n_nodes());
            kv(&mut s, "n_fnodes", g.n_fnodes());
            kv(&mut s, "n_tiles", ts.n_tiles);
            kv(&mut s, "n_ftiles", ts.n_ftiles);
            kv(&mut s, "n_buffers", ts.n_buffers);
            kv(&mut s, "reduced_buffer_fraction", format!("{:.6}", ts.reduced_buffer_fraction));
            s.push_str(&report.to_kv());
        }
        OutputFormat::Text => {
            let _ = writeln!(
                s,
                "nodes {}  non-solid {}  tiles {}/{}  buffers {}  reduced buffers {:.4}",
                g.n_nodes(),
                g.n_fnodes(),
                ts.n_ftiles,
                ts.n_tiles,
                ts.n_buffers,
                ts.reduced_buffer_fraction
            );
            let _ = write!(s, "{report}");
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// Loads `path` and applies `key=value` overrides in order.
pub fn load_config(path: &std::path::Path, overrides: &[String]) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    for o in overrides {
        cfg.apply_override(o)?;
    }
    Ok(cfg)
}

pub fn cmd_run(cfg: &Config, out: &mut dyn Write) -> Result<()> {
    let g = cfg.geometry()?;
    let sim = cfg.sim(&g)?;
    if sim.snapshot_every > 0 && sim.steps >= sim.snapshot_every {
        std::fs::create_dir_all(&sim.output_dir)
            .map_err(|e| splbm_core::Error::Io { path: sim.output_dir.clone(), source: e })?;
    }
    let r = engine::run(&sim, &g)?;
    let mut s = String::new();
    kv(&mut s, "method", r.method);
    kv(&mut s, "lattice", sim.lattice.name().to_ascii_lowercase());
    kv(&mut s, "model", sim.model.label());
    kv(&mut s, "steps", r.steps);
    kv(&mut s, "n_fnodes", r.n_fnodes);
    kv(&mut s, "wall_seconds", format!("{:.6}", r.wall_seconds));
    kv(&mut s, "mlups", format!("{:.3}", r.mlups));
    kv(&mut s, "initial_mass", format!("{:.12e}", r.initial_mass));
    kv(&mut s, "final_mass", format!("{:.12e}", r.final_mass));
    kv(&mut s, "mass_drift", format!("{:.6e}", r.mass_drift()));
    kv(&mut s, "tile_visits", r.tile_visits);
    kv(&mut s, "snapshots", r.snapshots.len());
    for p in &r.snapshots {
        kv(&mut s, "snapshot", p.display());
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// One benchmarked (method, model) combination.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub method: Method,
    pub model: String,
    pub steps: u64,
    pub seconds: f64,
    pub mlups: f64,
    pub utilization: Option<f64>,
    /// Largest relative density and velocity difference to the first method
    /// run with the same model.
    pub check: Option<(f64, f64)>,
}

pub fn bench(cfg: &Config) -> Result<(Geometry, Arrangement, Vec<BenchRow>)> {
    let g = cfg.geometry()?;
    let sim = cfg.sim(&g)?;
    let settings = cfg.bench(&sim)?;
    let desc = sim.lattice.descriptor();
    let params = CostParams::new(sim.lattice, sim.engine.precision.bytes(), 1)?;
    let mut rows = Vec::new();
    for model in &settings.models {
        let mut reference = None;
        for &method in &settings.methods {
            let mut solver = build_solver(method, &g, desc, model, &sim.engine, &sim.initial)?;
            solver.advance(settings.warmup)?;
            let t0 = Instant::now();
            solver.advance(sim.steps)?;
            let seconds = t0.elapsed().as_secs_f64();
            let mlups = engine::mlups(solver.n_fnodes(), sim.steps, seconds);
            let utilization = settings
                .mem_bandwidth
                .map(|b| bandwidth_utilization(mlups, &params, b))
                .transpose()?;
            let check = if settings.check {
                let fields = solver.fields();
                match &reference {
                    None => {
                        reference = Some(fields);
                        Some((0.0, 0.0))
                    }
                    Some(r) => Some(fields.rel_linf_diff(r)?),
                }
            } else {
                None
            };
            rows.push(BenchRow {
                method,
                model: model.label(),
                steps: sim.steps,
                seconds,
                mlups,
                utilization,
                check,
            });
        }
    }
    Ok((g, sim.lattice, rows))
}

pub fn cmd_bench(cfg: &Config, format: OutputFormat, out: &mut dyn Write) -> Result<()> {
    let (g, lattice, rows) = bench(cfg)?;
    let mut s = String::new();
    match format {
        OutputFormat::Kv => {
            kv(&mut s, "lattice", lattice.name().to_ascii_lowercase());
            kv(&mut s, "n_fnodes", g.n_fnodes());
            for r in &rows {
                let key = format!("{}.{}", r.method, model_key(&r.model));
                kv(&mut s, &format!("{key}.steps"), r.steps);
                kv(&mut s, &format!("{key}.seconds"), format!("{:.6}", r.seconds));
                kv(&mut s, &format!("{key}.mlups"), format!("{:.3}", r.mlups));
                if let Some(bu) = r.utilization {
                    kv(&mut s, &format!("{key}.bu"), format!("{bu:.3}"));
                }
                if let Some((dr, du)) = r.check {
                    kv(&mut s, &format!("{key}.check_rho"), format!("{dr:.3e}"));
                    kv(&mut s, &format!("{key}.check_u"), format!("{du:.3e}"));
                }
            }
        }
        OutputFormat::Text => {
            let with_bu = rows.iter().any(|r| r.utilization.is_some());
            let _ = write!(s, "{:<8}{:<16}{:>10}", "method", "model", "MLUPS");
            if with_bu {
                let _ = write!(s, "{:>8}", "BU");
            }
            s.push('\n');
            for r in &rows {
                let _ = write!(s, "{:<8}{:<16}{:>10.1}", r.method, r.model, r.mlups);
                if let Some(bu) = r.utilization {
                    let _ = write!(s, "{bu:>8.3}");
                }
                s.push('\n');
            }
        }
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

/// `BGK q-compr.` becomes `bgk_q-compr`.
fn model_key(label: &str) -> String {
    label.trim_end_matches('.').to_ascii_lowercase().replace(' ', "_")
}
