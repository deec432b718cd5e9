//! Lattice arrangements and the collision physics.
//!
//! Direction 0 is always the rest population. The remaining directions are
//! listed faces first, then edges, then corners, with each direction
//! immediately followed by its opposite. All quantities are in lattice units
//! (`δx = δt = 1`), so lattice velocities coincide with the unit vectors.

use crate::error::{Error, Result};

/// Squared lattice speed of sound.
pub const CS2: f64 = 1.0 / 3.0;

/// Largest `q` of any supported arrangement; used to size stack buffers.
pub const MAX_Q: usize = 27;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Arrangement {
    D2Q9,
    D3Q19,
    /// Only the constants are used (overhead model and tiling statistics);
    /// there is no collision operator for it.
    D3Q27,
}

impl Arrangement {
    pub fn name(self) -> &'static str {
        match self {
            Arrangement::D2Q9 => "D2Q9",
            Arrangement::D3Q19 => "D3Q19",
            Arrangement::D3Q27 => "D3Q27",
        }
    }

    pub fn descriptor(self) -> &'static LatticeDescriptor {
        lattice_descriptor(self)
    }
}

impl std::fmt::Display for Arrangement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Arrangement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "d2q9" => Ok(Arrangement::D2Q9),
            "d3q19" => Ok(Arrangement::D3Q19),
            "d3q27" => Ok(Arrangement::D3Q27),
            other => Err(Error::InvalidParameter(format!("unknown lattice `{other}`"))),
        }
    }
}

/// Immutable constants of a lattice arrangement.
#[derive(Debug, PartialEq)]
pub struct LatticeDescriptor {
    pub arrangement: Arrangement,
    pub d: usize,
    pub q: usize,
    /// Unit direction vectors; the z component is zero for 2D lattices.
    pub e: &'static [[i32; 3]],
    pub w: &'static [f64],
    pub opposite: &'static [usize],
    /// Directions crossing a face (3D) or an edge (2D) of a tile.
    pub q_s: usize,
    /// Directions crossing an edge (3D) or a corner (2D).
    pub q_d: usize,
    /// Directions crossing a corner (3D).
    pub q_t: usize,
}

impl LatticeDescriptor {
    pub fn c_s2(&self) -> f64 {
        CS2
    }

    /// Lattice velocity `c_i` as floats.
    #[inline]
    pub fn c(&self, i: usize) -> [f64; 3] {
        let e = self.e[i];
        [e[0] as f64, e[1] as f64, e[2] as f64]
    }

    /// Number of non-zero components of `e_i`.
    pub fn order(&self, i: usize) -> usize {
        self.e[i].iter().filter(|&&c| c != 0).count()
    }
}

const D2Q9_E: [[i32; 3]; 9] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
];

const D2Q9_W: [f64; 9] = [
    4.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 9.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

const D2Q9_OPP: [usize; 9] = [0, 2, 1, 4, 3, 6, 5, 8, 7];

const D3Q19_E: [[i32; 3]; 19] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
];

const D3Q19_W: [f64; 19] = [
    1.0 / 3.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 18.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
    1.0 / 36.0,
];

const D3Q19_OPP: [usize; 19] = [0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17];

const D3Q27_E: [[i32; 3]; 27] = [
    [0, 0, 0],
    [1, 0, 0],
    [-1, 0, 0],
    [0, 1, 0],
    [0, -1, 0],
    [0, 0, 1],
    [0, 0, -1],
    [1, 1, 0],
    [-1, -1, 0],
    [1, -1, 0],
    [-1, 1, 0],
    [1, 0, 1],
    [-1, 0, -1],
    [1, 0, -1],
    [-1, 0, 1],
    [0, 1, 1],
    [0, -1, -1],
    [0, 1, -1],
    [0, -1, 1],
    [1, 1, 1],
    [-1, -1, -1],
    [1, 1, -1],
    [-1, -1, 1],
    [1, -1, 1],
    [-1, 1, -1],
    [-1, 1, 1],
    [1, -1, -1],
];

const D3Q27_W: [f64; 27] = [
    8.0 / 27.0,
    2.0 / 27.0,
    2.0 / 27.0,
    2.0 / 27.0,
    2.0 / 27.0,
    2.0 / 27.0,
    2.0 / 27.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 54.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
    1.0 / 216.0,
];

const D3Q27_OPP: [usize; 27] = [
    0, 2, 1, 4, 3, 6, 5, 8, 7, 10, 9, 12, 11, 14, 13, 16, 15, 18, 17, 20, 19, 22, 21, 24, 23, 26,
    25,
];

static D2Q9: LatticeDescriptor = LatticeDescriptor {
    arrangement: Arrangement::D2Q9,
    d: 2,
    q: 9,
    e: &D2Q9_E,
    w: &D2Q9_W,
    opposite: &D2Q9_OPP,
    q_s: 4,
    q_d: 4,
    q_t: 0,
};

static D3Q19: LatticeDescriptor = LatticeDescriptor {
    arrangement: Arrangement::D3Q19,
    d: 3,
    q: 19,
    e: &D3Q19_E,
    w: &D3Q19_W,
    opposite: &D3Q19_OPP,
    q_s: 6,
    q_d: 12,
    q_t: 0,
};

static D3Q27: LatticeDescriptor = LatticeDescriptor {
    arrangement: Arrangement::D3Q27,
    d: 3,
    q: 27,
    e: &D3Q27_E,
    w: &D3Q27_W,
    opposite: &D3Q27_OPP,
    q_s: 6,
    q_d: 12,
    q_t: 8,
};

pub fn lattice_descriptor(arrangement: Arrangement) -> &'static LatticeDescriptor {
    match arrangement {
        Arrangement::D2Q9 => &D2Q9,
        Arrangement::D3Q19 => &D3Q19,
        Arrangement::D3Q27 => &D3Q27,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Compressibility {
    QuasiCompressible,
    Incompressible,
}

impl std::str::FromStr for Compressibility {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "quasi" | "quasi-compressible" | "q-compr" | "compressible" => {
                Ok(Compressibility::QuasiCompressible)
            }
            "incompressible" | "incompr" => Ok(Compressibility::Incompressible),
            other => Err(Error::InvalidParameter(format!("unknown fluid model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CollisionKind {
    Bgk,
    Mrt,
}

impl std::str::FromStr for CollisionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bgk" => Ok(CollisionKind::Bgk),
            "mrt" => Ok(CollisionKind::Mrt),
            other => Err(Error::InvalidParameter(format!("unknown collision model `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidModel {
    pub compressibility: Compressibility,
    pub collision: CollisionKind,
    pub tau: f64,
    /// One relaxation rate per moment of the MRT basis. `None` selects the
    /// default: zero for conserved moments and `1/τ` for everything else.
    pub mrt_rates: Option<Vec<f64>>,
}

impl FluidModel {
    pub fn new(compressibility: Compressibility, collision: CollisionKind, tau: f64) -> Result<Self> {
        if !(tau > 0.5) || !tau.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "relaxation time must exceed 0.5, got {tau}"
            )));
        }
        Ok(FluidModel {
            compressibility,
            collision,
            tau,
            mrt_rates: None,
        })
    }

    pub fn bgk(compressibility: Compressibility, tau: f64) -> Result<Self> {
        Self::new(compressibility, CollisionKind::Bgk, tau)
    }

    pub fn mrt(compressibility: Compressibility, tau: f64, rates: Option<Vec<f64>>) -> Result<Self> {
        let mut model = Self::new(compressibility, CollisionKind::Mrt, tau)?;
        model.mrt_rates = rates;
        Ok(model)
    }

    /// Kinematic viscosity `ν = (τ − 1/2)/3`.
    pub fn viscosity(&self) -> f64 {
        (self.tau - 0.5) / 3.0
    }

    /// Short label used in reports, e.g. `BGK incompr.`.
    pub fn label(&self) -> String {
        let c = match self.collision {
            CollisionKind::Bgk => "BGK",
            CollisionKind::Mrt => "MRT",
        };
        let m = match self.compressibility {
            Compressibility::QuasiCompressible => "q-compr.",
            Compressibility::Incompressible => "incompr.",
        };
        format!("{c} {m}")
    }
}

/// Writes the equilibrium populations into `out[..q]` without validation.
#[inline]
pub fn equilibrium_into(
    desc: &LatticeDescriptor,
    compressibility: Compressibility,
    rho: f64,
    u: [f64; 3],
    out: &mut [f64],
) {
    let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
    for i in 0..desc.q {
        let e = desc.e[i];
        let cu = e[0] as f64 * u[0] + e[1] as f64 * u[1] + e[2] as f64 * u[2];
        let poly = 3.0 * cu + 4.5 * cu * cu - 1.5 * usq;
        out[i] = match compressibility {
            Compressibility::QuasiCompressible => desc.w[i] * rho * (1.0 + poly),
            Compressibility::Incompressible => desc.w[i] * (rho + poly),
        };
    }
}

/// Density and velocity of `f` without validation. For the quasi-compressible
/// model a zero density yields non-finite velocities.
#[inline]
pub fn moments_unchecked(
    desc: &LatticeDescriptor,
    compressibility: Compressibility,
    f: &[f64],
) -> (f64, [f64; 3]) {
    let mut rho = 0.0;
    let mut j = [0.0; 3];
    for i in 0..desc.q {
        let fi = f[i];
        let e = desc.e[i];
        rho += fi;
        j[0] += e[0] as f64 * fi;
        j[1] += e[1] as f64 * fi;
        j[2] += e[2] as f64 * fi;
    }
    match compressibility {
        Compressibility::QuasiCompressible => {
            let inv = 1.0 / rho;
            (rho, [j[0] * inv, j[1] * inv, j[2] * inv])
        }
        Compressibility::Incompressible => (rho, j),
    }
}

pub fn equilibrium(
    desc: &LatticeDescriptor,
    model: &FluidModel,
    rho: f64,
    u: [f64; 3],
) -> Result<Vec<f64>> {
    if model.compressibility == Compressibility::QuasiCompressible && !(rho > 0.0) {
        return Err(Error::Domain(format!(
            "quasi-compressible equilibrium needs a positive density, got {rho}"
        )));
    }
    let mut out = vec![0.0; desc.q];
    equilibrium_into(desc, model.compressibility, rho, u, &mut out);
    Ok(out)
}

pub fn moments(desc: &LatticeDescriptor, model: &FluidModel, f: &[f64]) -> Result<(f64, [f64; 3])> {
    check_len(desc, f)?;
    let (rho, u) = moments_unchecked(desc, model.compressibility, f);
    if model.compressibility == Compressibility::QuasiCompressible && rho == 0.0 {
        return Err(Error::Domain("zero density in quasi-compressible moments".into()));
    }
    Ok((rho, u))
}

/// Pressure `p = ρ/3` in lattice units.
pub fn pressure(rho: f64) -> f64 {
    rho * CS2
}

pub fn collide_bgk(desc: &LatticeDescriptor, model: &FluidModel, f: &[f64]) -> Result<Vec<f64>> {
    check_len(desc, f)?;
    moments(desc, model, f)?;
    let mut g = f.to_vec();
    let op = Collider::new(desc, &FluidModel {
        collision: CollisionKind::Bgk,
        ..model.clone()
    })?;
    op.collide(&mut g);
    Ok(g)
}

pub fn collide_mrt(desc: &LatticeDescriptor, model: &FluidModel, f: &[f64]) -> Result<Vec<f64>> {
    check_len(desc, f)?;
    moments(desc, model, f)?;
    let mut g = f.to_vec();
    let op = Collider::new(desc, &FluidModel {
        collision: CollisionKind::Mrt,
        ..model.clone()
    })?;
    op.collide(&mut g);
    Ok(g)
}

fn check_len(desc: &LatticeDescriptor, f: &[f64]) -> Result<()> {
    if f.len() != desc.q {
        return Err(Error::Config(format!(
            "expected {} populations for {}, got {}",
            desc.q,
            desc.arrangement,
            f.len()
        )));
    }
    Ok(())
}

/// Orthogonal moment basis for MRT (row-major `q × q`).
///
/// D2Q9 rows: ρ, e, ε, jx, qx, jy, qy, pxx, pxy.
/// D3Q19 rows: ρ, e, ε, jx, qx, jy, qy, jz, qz, 3pxx, 3πxx, pww, πww, pxy,
/// pyz, pxz, mx, my, mz.
pub fn moment_basis(desc: &LatticeDescriptor) -> Result<Vec<f64>> {
    let q = desc.q;
    let mut m = vec![0.0; q * q];
    match desc.arrangement {
        Arrangement::D2Q9 => {
            for i in 0..q {
                let [x, y, _] = desc.c(i);
                let c2 = x * x + y * y;
                let row = [
                    1.0,
                    -4.0 + 3.0 * c2,
                    4.0 - 10.5 * c2 + 4.5 * c2 * c2,
                    x,
                    (-5.0 + 3.0 * c2) * x,
                    y,
                    (-5.0 + 3.0 * c2) * y,
                    x * x - y * y,
                    x * y,
                ];
                for (r, v) in row.into_iter().enumerate() {
                    m[r * q + i] = v;
                }
            }
        }
        Arrangement::D3Q19 => {
            for i in 0..q {
                let [x, y, z] = desc.c(i);
                let c2 = x * x + y * y + z * z;
                let row = [
                    1.0,
                    19.0 * c2 - 30.0,
                    (21.0 * c2 * c2 - 53.0 * c2 + 24.0) / 2.0,
                    x,
                    (5.0 * c2 - 9.0) * x,
                    y,
                    (5.0 * c2 - 9.0) * y,
                    z,
                    (5.0 * c2 - 9.0) * z,
                    3.0 * x * x - c2,
                    (3.0 * c2 - 5.0) * (3.0 * x * x - c2),
                    y * y - z * z,
                    (3.0 * c2 - 5.0) * (y * y - z * z),
                    x * y,
                    y * z,
                    x * z,
                    x * (y * y - z * z),
                    y * (z * z - x * x),
                    z * (x * x - y * y),
                ];
                for (r, v) in row.into_iter().enumerate() {
                    m[r * q + i] = v;
                }
            }
        }
        Arrangement::D3Q27 => {
            return Err(Error::Unsupported("MRT collision for D3Q27".into()));
        }
    }
    Ok(m)
}

/// Indices of the conserved rows (density and momentum) of [`moment_basis`].
pub fn conserved_moments(desc: &LatticeDescriptor) -> &'static [usize] {
    match desc.arrangement {
        Arrangement::D2Q9 => &[0, 3, 5],
        _ => &[0, 3, 5, 7],
    }
}

#[derive(Debug, Clone)]
struct MrtOperator {
    m: Vec<f64>,
    m_inv: Vec<f64>,
    rates: Vec<f64>,
}

impl MrtOperator {
    fn new(desc: &'static LatticeDescriptor, model: &FluidModel) -> Result<Self> {
        let q = desc.q;
        let m = moment_basis(desc)?;
        let rates = match &model.mrt_rates {
            Some(r) if r.len() != q => {
                return Err(Error::Config(format!(
                    "MRT needs {q} relaxation rates for {}, got {}",
                    desc.arrangement,
                    r.len()
                )))
            }
            Some(r) => r.clone(),
            None => {
                let mut r = vec![1.0 / model.tau; q];
                for &k in conserved_moments(desc) {
                    r[k] = 0.0;
                }
                r
            }
        };
        // Rows are mutually orthogonal, so M⁻¹ = Mᵀ · diag(1/|row|²).
        let mut m_inv = vec![0.0; q * q];
        for r in 0..q {
            let norm: f64 = (0..q).map(|i| m[r * q + i] * m[r * q + i]).sum();
            for i in 0..q {
                m_inv[i * q + r] = m[r * q + i] / norm;
            }
        }
        Ok(MrtOperator { m, m_inv, rates })
    }
}

/// Collision operator with everything precomputed for the hot loop.
#[derive(Debug, Clone)]
pub struct Collider {
    pub desc: &'static LatticeDescriptor,
    pub compressibility: Compressibility,
    omega: f64,
    mrt: Option<MrtOperator>,
}

impl Collider {
    pub fn new(desc: &LatticeDescriptor, model: &FluidModel) -> Result<Self> {
        let desc = desc.arrangement.descriptor();
        if desc.arrangement == Arrangement::D3Q27 {
            return Err(Error::Unsupported("collision for D3Q27".into()));
        }
        if !(model.tau > 0.5) {
            return Err(Error::InvalidParameter(format!(
                "relaxation time must exceed 0.5, got {}",
                model.tau
            )));
        }
        let mrt = match model.collision {
            CollisionKind::Bgk => None,
            CollisionKind::Mrt => Some(MrtOperator::new(desc, model)?),
        };
        Ok(Collider {
            desc,
            compressibility: model.compressibility,
            omega: 1.0 / model.tau,
            mrt,
        })
    }

    /// Relaxes `f` in place towards equilibrium and returns the pre-collision
    /// moments.
    #[inline]
    pub fn collide(&self, f: &mut [f64]) -> (f64, [f64; 3]) {
        let q = self.desc.q;
        let (rho, u) = moments_unchecked(self.desc, self.compressibility, f);
        let mut feq = [0.0; MAX_Q];
        equilibrium_into(self.desc, self.compressibility, rho, u, &mut feq);
        match &self.mrt {
            None => {
                let omega = self.omega;
                for i in 0..q {
                    f[i] += omega * (feq[i] - f[i]);
                }
            }
            Some(op) => {
                let mut dm = [0.0; MAX_Q];
                for r in 0..q {
                    let s = op.rates[r];
                    if s == 0.0 {
                        continue;
                    }
                    let row = &op.m[r * q..(r + 1) * q];
                    let mut acc = 0.0;
                    for i in 0..q {
                        acc += row[i] * (feq[i] - f[i]);
                    }
                    dm[r] = s * acc;
                }
                for i in 0..q {
                    let row = &op.m_inv[i * q..(i + 1) * q];
                    let mut acc = 0.0;
                    for r in 0..q {
                        acc += row[r] * dm[r];
                    }
                    f[i] += acc;
                }
            }
        }
        (rho, u)
    }
}
