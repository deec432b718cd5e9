//! `key = value` configuration files.
//!
//! One setting per line, `#` starts a comment, sections are spelled as
//! dotted keys (`sim.steps = 100`). Later lines and command-line overrides
//! replace earlier values.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use splbm_core::engine::{EngineOptions, InitialState, Method, Precision, SimConfig, SnapshotFormat};
use splbm_core::geometry::{generate, read_geometry, GeneratorSpec, Geometry, Obstacle};
use splbm_core::lattice::{Arrangement, CollisionKind, Compressibility, FluidModel};

use crate::CliError;

/// Every key a configuration may set.
pub const KNOWN_KEYS: &[&str] = &[
    "geometry.path",
    "geometry.kind",
    "geometry.dims",
    "geometry.lid_velocity",
    "geometry.inlet_velocity",
    "geometry.outlet_density",
    "geometry.obstacle",
    "geometry.diameter",
    "geometry.porosity",
    "geometry.seed",
    "lattice",
    "model.collision",
    "model.compressibility",
    "model.tau",
    "model.mrt_rates",
    "sim.method",
    "sim.steps",
    "sim.snapshot_every",
    "sim.output_dir",
    "sim.prefix",
    "sim.format",
    "sim.tile",
    "sim.threads",
    "sim.precision",
    "sim.periodic",
    "init.rho",
    "init.velocity",
    "init.perturbation",
    "init.seed",
    "bench.methods",
    "bench.models",
    "bench.warmup",
    "bench.mem_bandwidth",
    "bench.check",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
    /// Directory relative paths are resolved against.
    base: PathBuf,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Config::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(config_err(format!("line {}: expected `key = value`", n + 1)));
            };
            cfg.set(key.trim(), value.trim())
                .map_err(|e| config_err(format!("line {}: {e}", n + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Core(splbm_core::Error::Io { path: path.into(), source: e }))?;
        let mut cfg = Config::parse(&text)?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("unknown key `{key}`"));
        }
        if value.is_empty() {
            return Err(format!("empty value for `{key}`"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), CliError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| config_err(format!("override `{kv}` is not `key=value`")))?;
        self.set(k.trim(), v.trim()).map_err(config_err)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| config_err(format!("{key}: {e}"))))
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| parse_list(key, v)).transpose()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        self.get(key).map(|p| self.base.join(p))
    }

    pub fn geometry(&self) -> Result<Geometry, CliError> {
        if let Some(path) = self.path("geometry.path") {
            if self.get("geometry.kind").is_some() {
                return Err(config_err("set either geometry.path or geometry.kind, not both"));
            }
            return Ok(read_geometry(path)?);
        }
        let kind = self
            .get("geometry.kind")
            .ok_or_else(|| config_err("missing geometry.path or geometry.kind"))?;
        let dims: Vec<usize> = self
            .list("geometry.dims")?
            .ok_or_else(|| config_err("missing geometry.dims"))?;
        let spec = generator_spec(
            kind,
            &dims,
            &GeneratorOptions {
                lid_velocity: self.or("geometry.lid_velocity", 0.1)?,
                inlet_velocity: self.or("geometry.inlet_velocity", 0.05)?,
                outlet_density: self.or("geometry.outlet_density", 1.0)?,
                obstacle: self.list("geometry.obstacle")?,
                diameter: self.parsed("geometry.diameter")?,
                porosity: self.parsed("geometry.porosity")?,
                seed: self.or("geometry.seed", 0)?,
            },
        )?;
        Ok(generate(&spec)?)
    }

    pub fn lattice_for(&self, g: &Geometry) -> Result<Arrangement, CliError> {
        let default = if g.dim() == 2 {
            Arrangement::D2Q9
        } else {
            Arrangement::D3Q19
        };
        self.or("lattice", default)
    }

    pub fn model(&self) -> Result<FluidModel, CliError> {
        let collision = self.or("model.collision", CollisionKind::Bgk)?;
        let compressibility = self.or("model.compressibility", Compressibility::QuasiCompressible)?;
        let tau = self.or("model.tau", 0.8)?;
        let mut model = FluidModel::new(compressibility, collision, tau)?;
        if let Some(rates) = self.list::<f64>("model.mrt_rates")? {
            if collision != CollisionKind::Mrt {
                return Err(config_err("model.mrt_rates requires model.collision = mrt"));
            }
            model.mrt_rates = Some(rates);
        }
        Ok(model)
    }

    pub fn engine(&self) -> Result<EngineOptions, CliError> {
        let mut periodic = [false; 3];
        if let Some(axes) = self.get("sim.periodic") {
            for axis in axes.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                match axis {
                    "x" => periodic[0] = true,
                    "y" => periodic[1] = true,
                    "z" => periodic[2] = true,
                    "none" => {}
                    other => return Err(config_err(format!("sim.periodic: unknown axis `{other}`"))),
                }
            }
        }
        Ok(EngineOptions {
            tile_edge: self.parsed("sim.tile")?,
            periodic,
            threads: self.or("sim.threads", 0)?,
            precision: self.or("sim.precision", Precision::F64)?,
        })
    }

    pub fn initial(&self) -> Result<InitialState, CliError> {
        let rho = self.or("init.rho", 1.0)?;
        let u = match self.list::<f64>("init.velocity")? {
            None => [0.0; 3],
            Some(v) if v.len() == 2 || v.len() == 3 => [v[0], v[1], v.get(2).copied().unwrap_or(0.0)],
            Some(_) => return Err(config_err("init.velocity needs 2 or 3 components")),
        };
        Ok(match self.parsed::<f64>("init.perturbation")? {
            Some(amplitude) if amplitude != 0.0 => InitialState::Perturbed {
                rho,
                u,
                amplitude,
                seed: self.or("init.seed", 0)?,
            },
            _ => InitialState::Equilibrium { rho, u },
        })
    }

    pub fn sim(&self, g: &Geometry) -> Result<SimConfig, CliError> {
        let method = self.or("sim.method", Method::Tgb)?;
        let mut sim = SimConfig::new(method, self.lattice_for(g)?, self.model()?, self.or("sim.steps", 100)?);
        sim.snapshot_every = self.or("sim.snapshot_every", 0)?;
        sim.engine = self.engine()?;
        sim.initial = self.initial()?;
        sim.output_dir = self.path("sim.output_dir").unwrap_or_else(|| self.base.join("."));
        if let Some(prefix) = self.get("sim.prefix") {
            sim.output_prefix = prefix.to_string();
        }
        sim.snapshot_format = match self.get("sim.format").unwrap_or("vtk") {
            "vtk" => SnapshotFormat::Vtk,
            "csv" => SnapshotFormat::Csv,
            other => return Err(config_err(format!("sim.format: unknown format `{other}`"))),
        };
        Ok(sim)
    }

    pub fn bench(&self, sim: &SimConfig) -> Result<BenchSettings, CliError> {
        let methods = self.list("bench.methods")?.unwrap_or_else(|| vec![sim.method]);
        let models = match self.get("bench.models") {
            None => vec![sim.model.clone()],
            Some(list) => list
                .split(',')
                .map(|m| parse_model(m.trim(), sim.model.tau))
                .collect::<Result<_, _>>()?,
        };
        let mem_bandwidth: Option<f64> = self.parsed("bench.mem_bandwidth")?;
        if let Some(b) = mem_bandwidth {
            if !(b > 0.0) {
                return Err(config_err("bench.mem_bandwidth must be positive"));
            }
        }
        Ok(BenchSettings {
            methods,
            models,
            warmup: self.or("bench.warmup", 10)?,
            mem_bandwidth,
            check: self.or("bench.check", false)?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BenchSettings {
    pub methods: Vec<Method>,
    pub models: Vec<FluidModel>,
    pub warmup: u64,
    /// Peak memory bandwidth in bytes per second.
    pub mem_bandwidth: Option<f64>,
    /// Compare the fields of every method against the first one.
    pub check: bool,
}

pub fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|e| config_err(format!("{key}: `{}`: {e}", s.trim())))
        })
        .collect()
}

/// `collision-compressibility`, e.g. `bgk-quasi` or `mrt-incompressible`.
pub fn parse_model(s: &str, tau: f64) -> Result<FluidModel, CliError> {
    let (c, m) = s
        .split_once('-')
        .ok_or_else(|| config_err(format!("model `{s}` is not `collision-compressibility`")))?;
    Ok(FluidModel::new(m.parse()?, c.parse()?, tau)?)
}

/// Parameters of the built-in geometry generators beyond the domain size.
#[derive(Debug, Clone, Default)]
pub struct GeneratorOptions {
    pub lid_velocity: f64,
    pub inlet_velocity: f64,
    pub outlet_density: f64,
    /// `cx, cy, radius`.
    pub obstacle: Option<Vec<f64>>,
    pub diameter: Option<f64>,
    pub porosity: Option<f64>,
    pub seed: u64,
}

pub fn generator_spec(kind: &str, dims: &[usize], o: &GeneratorOptions) -> Result<GeneratorSpec, CliError> {
    let need = |n: usize| {
        if dims.len() == n {
            Ok(())
        } else {
            Err(config_err(format!("{kind} needs {n} dimensions, got {}", dims.len())))
        }
    };
    Ok(match kind {
        "cavity2d" => {
            need(2)?;
            GeneratorSpec::Cavity2d {
                nx: dims[0],
                ny: dims[1],
                lid_velocity: o.lid_velocity,
            }
        }
        "cavity3d" => {
            need(3)?;
            GeneratorSpec::Cavity3d {
                nx: dims[0],
                ny: dims[1],
                nz: dims[2],
                lid_velocity: o.lid_velocity,
            }
        }
        "channel2d" => {
            need(2)?;
            let obstacle = match o.obstacle.as_deref() {
                None => None,
                Some([cx, cy, r]) => Some(Obstacle {
                    center: [*cx, *cy],
                    radius: *r,
                }),
                Some(_) => return Err(config_err("obstacle needs `cx,cy,radius`")),
            };
            GeneratorSpec::Channel2d {
                nx: dims[0],
                ny: dims[1],
                inlet_velocity: o.inlet_velocity,
                outlet_density: o.outlet_density,
                obstacle,
            }
        }
        "ras3d" => {
            need(3)?;
            GeneratorSpec::Ras3d {
                dims: [dims[0], dims[1], dims[2]],
                diameter: o.diameter.ok_or_else(|| config_err("ras3d needs a sphere diameter"))?,
                porosity: o.porosity.ok_or_else(|| config_err("ras3d needs a target porosity"))?,
                seed: o.seed,
            }
        }
        other => return Err(config_err(format!("unknown geometry kind `{other}`"))),
    })
}
