//! Time stepping over dense rasters and sparse tile grids.
//!
//! Every solver stores post-collision populations and reports macroscopic
//! fields computed from the populations a node would see after streaming,
//! so the three methods can be compared node by node at any step.

mod dense;
mod kernel;
mod output;
mod t2c;
mod tgb;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::lattice::{equilibrium_into, moments_unchecked, Arrangement, Compressibility, FluidModel, LatticeDescriptor};
use crate::tiling::build_tile_grid;

pub use dense::DenseSolver;
pub use kernel::{apply_boundary, apply_boundary_open};
pub use output::{write_csv, write_vtk};
pub use t2c::T2cSolver;
pub use tgb::TgbSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Dense,
    T2c,
    Tgb,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Dense, Method::T2c, Method::Tgb];

    pub fn name(self) -> &'static str {
        match self {
            Method::Dense => "dense",
            Method::T2c => "t2c",
            Method::Tgb => "tgb",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Method::Dense),
            "t2c" => Ok(Method::T2c),
            "tgb" => Ok(Method::Tgb),
            other => Err(Error::InvalidParameter(format!("unknown method `{other}`"))),
        }
    }
}

/// Storage width of one population value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Precision {
    F32,
    #[default]
    F64,
}

impl Precision {
    pub fn bytes(self) -> usize {
        match self {
            Precision::F32 => 4,
            Precision::F64 => 8,
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "f32" | "sp" | "single" => Ok(Precision::F32),
            "f64" | "dp" | "double" => Ok(Precision::F64),
            other => Err(Error::InvalidParameter(format!("unknown precision `{other}`"))),
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// Floating-point type used to store populations. Arithmetic always runs in
/// `f64`.
pub trait Real: Copy + Send + Sync + Default + fmt::Debug + 'static {
    const NAN: Self;
    fn from_f64(v: f64) -> Self;
    fn to_f64(self) -> f64;
}

impl Real for f32 {
    const NAN: Self = f32::NAN;
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    const NAN: Self = f64::NAN;
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
}

/// Tile edge used when none is configured: 16 in 2D, 4 in 3D.
pub fn default_tile_edge(d: usize) -> usize {
    if d == 2 {
        16
    } else {
        4
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineOptions {
    /// `None` picks [`default_tile_edge`].
    pub tile_edge: Option<usize>,
    pub periodic: [bool; 3],
    /// Worker count; 0 uses the available hardware parallelism.
    pub threads: usize,
    pub precision: Precision,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            tile_edge: None,
            periodic: [false; 3],
            threads: 0,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    /// Uniform equilibrium.
    Equilibrium { rho: f64, u: [f64; 3] },
    /// Uniform equilibrium with every population scaled by `1 + amplitude·ξ`,
    /// `ξ` uniform in `[-1, 1)`, drawn node by node in raster order.
    Perturbed {
        rho: f64,
        u: [f64; 3],
        amplitude: f64,
        seed: u64,
    },
    /// Explicit populations, `q` per geometry node in raster order.
    Populations(Vec<f64>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Equilibrium {
            rho: 1.0,
            u: [0.0; 3],
        }
    }
}

impl InitialState {
    /// Populations for every node of `g` (`q` values per node).
    pub fn populations(&self, g: &Geometry, desc: &LatticeDescriptor, model: &FluidModel) -> Result<Vec<f64>> {
        let q = desc.q;
        let n = g.n_nodes();
        match self {
            InitialState::Populations(f) => {
                if f.len() != n * q {
                    return Err(Error::DimensionMismatch {
                        expected: n * q,
                        found: f.len(),
                    });
                }
                Ok(f.clone())
            }
            InitialState::Equilibrium { rho, u } | InitialState::Perturbed { rho, u, .. } => {
                if model.compressibility == Compressibility::QuasiCompressible && !(*rho > 0.0) {
                    return Err(Error::Domain(format!("initial density must be positive, got {rho}")));
                }
                let mut node = vec![0.0; q];
                equilibrium_into(desc, model.compressibility, *rho, *u, &mut node);
                let mut out = Vec::with_capacity(n * q);
                for _ in 0..n {
                    out.extend_from_slice(&node);
                }
                if let InitialState::Perturbed { amplitude, seed, .. } = self {
                    let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                    for v in out.iter_mut() {
                        *v *= 1.0 + amplitude * rng.gen_range(-1.0..1.0);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Density and velocity over the geometry raster; solid nodes hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroFields {
    pub d: usize,
    pub dims: [usize; 3],
    pub rho: Vec<f64>,
    pub u: Vec<[f64; 3]>,
    pub solid: Vec<bool>,
}

impl MacroFields {
    pub(crate) fn blank(d: usize, dims: [usize; 3], solid: Vec<bool>) -> Self {
        let n = solid.len();
        MacroFields {
            d,
            dims,
            rho: vec![0.0; n],
            u: vec![[0.0; 3]; n],
            solid,
        }
    }

    pub(crate) fn set_from(&mut self, idx: usize, desc: &LatticeDescriptor, c: Compressibility, f: &[f64]) {
        let (rho, u) = moments_unchecked(desc, c, f);
        self.rho[idx] = rho;
        self.u[idx] = u;
    }

    pub fn n_nodes(&self) -> usize {
        self.rho.len()
    }

    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    /// Sum of the density over non-solid nodes.
    pub fn total_mass(&self) -> f64 {
        self.rho
            .iter()
            .zip(&self.solid)
            .filter(|(_, s)| !**s)
            .map(|(r, _)| *r)
            .sum()
    }

    pub fn max_speed(&self) -> f64 {
        self.u
            .iter()
            .map(|u| (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.rho.iter().all(|v| v.is_finite()) && self.u.iter().flatten().all(|v| v.is_finite())
    }

    /// Relative L∞ differences `(ρ, u)` to a reference: the largest
    /// absolute deviation at a non-solid node, divided by the largest
    /// magnitude of the reference field.
    pub fn rel_linf_diff(&self, reference: &MacroFields) -> Result<(f64, f64)> {
        if self.dims != reference.dims || self.solid != reference.solid {
            return Err(Error::InvalidParameter("fields cover different domains".into()));
        }
        let mut dr: f64 = 0.0;
        let mut du: f64 = 0.0;
        let mut sr: f64 = 0.0;
        let mut su: f64 = 0.0;
        for i in 0..self.n_nodes() {
            if self.solid[i] {
                continue;
            }
            dr = dr.max((self.rho[i] - reference.rho[i]).abs());
            sr = sr.max(reference.rho[i].abs());
            for k in 0..3 {
                du = du.max((self.u[i][k] - reference.u[i][k]).abs());
                su = su.max(reference.u[i][k].abs());
            }
        }
        let rel = |d: f64, s: f64| if s > 0.0 { d / s } else { d };
        Ok((rel(dr, sr), rel(du, su)))
    }
}

/// Common interface of the three propagation schemes.
pub trait Solver: Send {
    fn method(&self) -> Method;

    /// Advances one time step.
    fn step(&mut self) -> Result<()>;

    fn steps_done(&self) -> u64;

    fn fields(&self) -> MacroFields;

    /// Tiles processed so far; the dense solver has no tiles and reports 0.
    fn tile_visits(&self) -> u64;

    fn n_fnodes(&self) -> usize;

    fn advance(&mut self, steps: u64) -> Result<()> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }
}

pub(crate) fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Builds a solver for `method`, initialised from `init`.
pub fn build_solver(
    method: Method,
    g: &Geometry,
    desc: &LatticeDescriptor,
    model: &FluidModel,
    opts: &EngineOptions,
    init: &InitialState,
) -> Result<Box<dyn Solver>> {
    let desc = desc.arrangement.descriptor();
    if desc.d != g.dim() {
        return Err(Error::InvalidParameter(format!(
            "{} needs a {}D geometry, got {}D",
            desc.arrangement,
            desc.d,
            g.dim()
        )));
    }
    let f0 = init.populations(g, desc, model)?;
    let solver: Box<dyn Solver> = match (method, opts.precision) {
        (Method::Dense, Precision::F64) => Box::new(DenseSolver::<f64>::new(g, desc, model, opts, &f0)?),
        (Method::Dense, Precision::F32) => Box::new(DenseSolver::<f32>::new(g, desc, model, opts, &f0)?),
        (Method::T2c | Method::Tgb, precision) => {
            let a = opts.tile_edge.unwrap_or_else(|| default_tile_edge(desc.d));
            let tg = build_tile_grid(g, a, desc, opts.periodic)?;
            match (method, precision) {
                (Method::T2c, Precision::F64) => Box::new(T2cSolver::<f64>::new(tg, g, model, opts, &f0)?),
                (Method::T2c, Precision::F32) => Box::new(T2cSolver::<f32>::new(tg, g, model, opts, &f0)?),
                (_, Precision::F64) => Box::new(TgbSolver::<f64>::new(tg, g, model, opts, &f0)?),
                (_, Precision::F32) => Box::new(TgbSolver::<f32>::new(tg, g, model, opts, &f0)?),
            }
        }
    };
    Ok(solver)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SnapshotFormat {
    #[default]
    Vtk,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub method: Method,
    pub lattice: Arrangement,
    pub model: FluidModel,
    pub steps: u64,
    /// Write a snapshot after every `snapshot_every` steps; 0 disables them.
    pub snapshot_every: u64,
    pub engine: EngineOptions,
    pub initial: InitialState,
    pub output_dir: PathBuf,
    pub output_prefix: String,
    pub snapshot_format: SnapshotFormat,
}

impl SimConfig {
    pub fn new(method: Method, lattice: Arrangement, model: FluidModel, steps: u64) -> Self {
        SimConfig {
            method,
            lattice,
            model,
            steps,
            snapshot_every: 0,
            engine: EngineOptions::default(),
            initial: InitialState::default(),
            output_dir: PathBuf::from("."),
            output_prefix: "snapshot".into(),
            snapshot_format: SnapshotFormat::Vtk,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimulationResult {
    pub method: Method,
    pub steps: u64,
    /// Time spent stepping; snapshot output is excluded.
    pub wall_seconds: f64,
    /// Million non-solid node updates per second, 0 when no step ran.
    pub mlups: f64,
    pub n_fnodes: usize,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub tile_visits: u64,
    pub snapshots: Vec<PathBuf>,
    pub fields: MacroFields,
}

impl SimulationResult {
    /// `(final − initial) / initial` total mass.
    pub fn mass_drift(&self) -> f64 {
        if self.initial_mass == 0.0 {
            0.0
        } else {
            (self.final_mass - self.initial_mass) / self.initial_mass
        }
    }
}

/// Million lattice updates per second.
pub fn mlups(n_fnodes: usize, steps: u64, seconds: f64) -> f64 {
    if steps == 0 || seconds <= 0.0 {
        0.0
    } else {
        n_fnodes as f64 * steps as f64 / (seconds * 1e6)
    }
}

/// Runs a whole simulation, writing snapshots after every
/// `snapshot_every`-th step.
pub fn run(config: &SimConfig, g: &Geometry) -> Result<SimulationResult> {
    let desc = config.lattice.descriptor();
    let mut solver = build_solver(config.method, g, desc, &config.model, &config.engine, &config.initial)?;
    let initial_mass = solver.fields().total_mass();
    let mut snapshots = Vec::new();
    let mut wall = 0.0;
    for step in 1..=config.steps {
        let t0 = Instant::now();
        solver.step()?;
        wall += t0.elapsed().as_secs_f64();
        if config.snapshot_every > 0 && step % config.snapshot_every == 0 {
            let fields = solver.fields();
            let ext = match config.snapshot_format {
                SnapshotFormat::Vtk => "vtk",
                SnapshotFormat::Csv => "csv",
            };
            let path = config
                .output_dir
                .join(format!("{}_{:06}.{}", config.output_prefix, step, ext));
            match config.snapshot_format {
                SnapshotFormat::Vtk => write_vtk(&path, &fields, step)?,
                SnapshotFormat::Csv => write_csv(&path, &fields)?,
            }
            snapshots.push(path);
        }
    }
    let fields = solver.fields();
    Ok(SimulationResult {
        method: config.method,
        steps: config.steps,
        wall_seconds: wall,
        mlups: mlups(solver.n_fnodes(), config.steps, wall),
        n_fnodes: solver.n_fnodes(),
        initial_mass,
        final_mass: fields.total_mass(),
        tile_visits: solver.tile_visits(),
        snapshots,
        fields,
    })
}
