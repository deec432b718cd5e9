//! Geometries shared by the criterion benches.

use splbm_core::geometry::{generate, Geometry, GeneratorSpec};
use splbm_core::Result;

pub fn cavity(n: usize) -> Result<Geometry> {
    generate(&GeneratorSpec::Cavity3d {
        nx: n,
        ny: n,
        nz: n,
        lid_velocity: 0.05,
    })
}

/// Random sphere pack with porosity `phi`.
pub fn spheres(n: usize, diameter: f64, phi: f64) -> Result<Geometry> {
    generate(&GeneratorSpec::Ras3d {
        dims: [n, n, n],
        diameter,
        porosity: phi,
        seed: 11,
    })
}
