//! Synthetic test domains: lid-driven cavities, a straight channel and
//! periodic random sphere packs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BoundaryParams, Geometry, NodeType};
use crate::error::{Error, Result};

/// Solid disc placed inside a channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Obstacle {
    pub center: [f64; 2],
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeneratorSpec {
    /// Solid floor and side walls, a moving lid on the top row (`y = ny-1`).
    Cavity2d { nx: usize, ny: usize, lid_velocity: f64 },
    /// Solid floor and side walls, a moving lid plane at `z = nz-1` moving
    /// along x.
    Cavity3d {
        nx: usize,
        ny: usize,
        nz: usize,
        lid_velocity: f64,
    },
    /// Solid walls at `y = 0` and `y = ny-1`, velocity inlet at `x = 0`,
    /// pressure outlet at `x = nx-1`. The open width is `ny - 2` nodes.
    Channel2d {
        nx: usize,
        ny: usize,
        inlet_velocity: f64,
        outlet_density: f64,
        obstacle: Option<Obstacle>,
    },
    /// Randomly placed, possibly overlapping, periodically wrapped solid
    /// spheres, inserted until the porosity is as close to the target as the
    /// sphere granularity allows.
    Ras3d {
        dims: [usize; 3],
        diameter: f64,
        porosity: f64,
        seed: u64,
    },
}

pub fn generate(spec: &GeneratorSpec) -> Result<Geometry> {
    match *spec {
        GeneratorSpec::Cavity2d { nx, ny, lid_velocity } => cavity2d(nx, ny, lid_velocity),
        GeneratorSpec::Cavity3d {
            nx,
            ny,
            nz,
            lid_velocity,
        } => cavity3d(nx, ny, nz, lid_velocity),
        GeneratorSpec::Channel2d {
            nx,
            ny,
            inlet_velocity,
            outlet_density,
            obstacle,
        } => channel2d(nx, ny, inlet_velocity, outlet_density, obstacle),
        GeneratorSpec::Ras3d {
            dims,
            diameter,
            porosity,
            seed,
        } => ras3d(dims, diameter, porosity, seed),
    }
}

fn require(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}

fn cavity2d(nx: usize, ny: usize, lid: f64) -> Result<Geometry> {
    require(nx >= 3 && ny >= 3, || format!("cavity needs at least 3x3 nodes, got {nx}x{ny}"))?;
    let mut g = Geometry::new_2d(nx, ny, NodeType::Fluid);
    for y in 0..ny {
        g.set(0, y, 0, NodeType::Solid);
        g.set(nx - 1, y, 0, NodeType::Solid);
    }
    for x in 1..nx - 1 {
        g.set(x, 0, 0, NodeType::Solid);
        g.set(x, ny - 1, 0, NodeType::VelocityBc);
    }
    g.bc = BoundaryParams {
        velocity: [lid, 0.0, 0.0],
        density: 1.0,
    };
    Ok(g)
}

fn cavity3d(nx: usize, ny: usize, nz: usize, lid: f64) -> Result<Geometry> {
    require(nx >= 3 && ny >= 3 && nz >= 3, || {
        format!("cavity needs at least 3x3x3 nodes, got {nx}x{ny}x{nz}")
    })?;
    let mut g = Geometry::new_3d(nx, ny, nz, NodeType::Fluid);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let wall = x == 0 || x == nx - 1 || y == 0 || y == ny - 1 || z == 0;
                if wall {
                    g.set(x, y, z, NodeType::Solid);
                } else if z == nz - 1 {
                    g.set(x, y, z, NodeType::VelocityBc);
                }
            }
        }
    }
    g.bc = BoundaryParams {
        velocity: [lid, 0.0, 0.0],
        density: 1.0,
    };
    Ok(g)
}

fn channel2d(nx: usize, ny: usize, u_in: f64, rho_out: f64, obstacle: Option<Obstacle>) -> Result<Geometry> {
    require(nx >= 3 && ny >= 3, || format!("channel needs at least 3x3 nodes, got {nx}x{ny}"))?;
    require(rho_out > 0.0, || format!("outlet density must be positive, got {rho_out}"))?;
    let mut g = Geometry::new_2d(nx, ny, NodeType::Fluid);
    for x in 0..nx {
        g.set(x, 0, 0, NodeType::Solid);
        g.set(x, ny - 1, 0, NodeType::Solid);
    }
    for y in 1..ny - 1 {
        g.set(0, y, 0, NodeType::VelocityBc);
        g.set(nx - 1, y, 0, NodeType::PressureBc);
    }
    if let Some(ob) = obstacle {
        require(ob.radius > 0.0, || "obstacle radius must be positive".into())?;
        let r2 = ob.radius * ob.radius;
        for y in 1..ny - 1 {
            for x in 1..nx - 1 {
                let dx = x as f64 - ob.center[0];
                let dy = y as f64 - ob.center[1];
                if dx * dx + dy * dy <= r2 {
                    g.set(x, y, 0, NodeType::Solid);
                }
            }
        }
    }
    g.bc = BoundaryParams {
        velocity: [u_in, 0.0, 0.0],
        density: rho_out,
    };
    Ok(g)
}

/// Upper bound on sphere insertions before giving up.
const MAX_SPHERES: usize = 1 << 22;

fn ras3d(dims: [usize; 3], diameter: f64, target: f64, seed: u64) -> Result<Geometry> {
    let min_dim = *dims.iter().min().unwrap_or(&0);
    require(min_dim > 0, || "extents must be positive".into())?;
    require(diameter > 0.0 && diameter < min_dim as f64, || {
        format!("sphere diameter {diameter} must be positive and below the smallest extent {min_dim}")
    })?;
    require(target > 0.0 && target < 1.0, || format!("target porosity {target} must lie in (0, 1)"))?;

    let [nx, ny, nz] = dims;
    let mut g = Geometry::new_3d(nx, ny, nz, NodeType::Fluid);
    let n = g.n_nodes() as f64;
    let mut solid = 0usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = diameter / 2.0;
    let mut fresh = Vec::new();

    for _ in 0..MAX_SPHERES {
        let phi = 1.0 - solid as f64 / n;
        if phi <= target {
            return Ok(g);
        }
        let center = [
            rng.gen_range(0.0..nx as f64),
            rng.gen_range(0.0..ny as f64),
            rng.gen_range(0.0..nz as f64),
        ];
        fresh.clear();
        sphere_nodes(&g, center, r, &mut fresh);
        let phi_next = 1.0 - (solid + fresh.len()) as f64 / n;
        if phi_next <= target && (target - phi_next) > (phi - target) {
            // The previous state is the closer one.
            return Ok(g);
        }
        for &i in &fresh {
            g.types[i] = NodeType::Solid;
        }
        solid += fresh.len();
    }
    Err(Error::InvalidParameter(format!(
        "could not reach porosity {target} within {MAX_SPHERES} spheres"
    )))
}

/// Collects the still-fluid nodes within `r` of `center`, wrapping
/// periodically on every axis.
fn sphere_nodes(g: &Geometry, center: [f64; 3], r: f64, out: &mut Vec<usize>) {
    let dims = g.dims();
    let r2 = r * r;
    let lo: [i64; 3] = std::array::from_fn(|k| (center[k] - r).floor() as i64);
    let hi: [i64; 3] = std::array::from_fn(|k| (center[k] + r).ceil() as i64);
    for z in lo[2]..=hi[2] {
        let dz = z as f64 - center[2];
        let wz = z.rem_euclid(dims[2] as i64) as usize;
        for y in lo[1]..=hi[1] {
            let dy = y as f64 - center[1];
            let wy = y.rem_euclid(dims[1] as i64) as usize;
            let dyz = dy * dy + dz * dz;
            if dyz > r2 {
                continue;
            }
            for x in lo[0]..=hi[0] {
                let dx = x as f64 - center[0];
                if dx * dx + dyz > r2 {
                    continue;
                }
                let wx = x.rem_euclid(dims[0] as i64) as usize;
                let idx = g.index(wx, wy, wz);
                // Wrapped boxes can revisit a node when 2r approaches the extent.
                if !g.types[idx].is_solid() && !out.contains(&idx) {
                    out.push(idx);
                }
            }
        }
    }
}
