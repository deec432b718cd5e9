use crate::error::{Error, Result};
use crate::geometry::{BoundaryParams, NodeType};
use crate::lattice::{
    equilibrium_into, moments_unchecked, Collider, Compressibility, FluidModel, LatticeDescriptor,
};

/// Per-node update shared by every propagation scheme, so that identical
/// inputs produce bit-identical outputs whichever method drives them.
#[derive(Debug, Clone)]
pub(crate) struct NodeKernel {
    pub collider: Collider,
    pub bc: BoundaryParams,
}

impl NodeKernel {
    pub fn new(desc: &LatticeDescriptor, model: &FluidModel, bc: BoundaryParams) -> Result<Self> {
        Ok(NodeKernel {
            collider: Collider::new(desc, model)?,
            bc,
        })
    }

    /// Updates the gathered populations of one non-solid node in place and
    /// reports whether the result is finite. Bit `i` of `missing` marks a
    /// population whose source node is solid or absent.
    #[inline]
    pub fn update(&self, t: NodeType, f: &mut [f64], missing: u32) -> bool {
        match t {
            NodeType::Fluid => {
                self.collider.collide(f);
            }
            NodeType::VelocityBc | NodeType::PressureBc => {
                boundary_in_place(self.collider.desc, self.collider.compressibility, t, &self.bc, f, missing);
            }
            NodeType::Solid => {}
        }
        f.iter().all(|v| v.is_finite())
    }
}

/// Inward normal of an open boundary node as `(axis, sign)`, estimated from
/// the directions whose sources are missing.
fn inward_normal(desc: &LatticeDescriptor, missing: u32) -> Option<(usize, f64)> {
    if missing == 0 {
        return None;
    }
    let mut m = [0i32; 3];
    for i in 1..desc.q {
        if missing & (1 << i) != 0 {
            for k in 0..3 {
                m[k] += desc.e[i][k];
            }
        }
    }
    let k = (0..3).fold(0, |best, k| if m[k].abs() > m[best].abs() { k } else { best });
    (m[k] != 0).then(|| (k, m[k].signum() as f64))
}

/// `Σ f` over directions tangential to the normal plus twice the sum over
/// directions leaving through the open side; both sets arrive from inside.
fn known_flux_sum(desc: &LatticeDescriptor, f: &[f64], axis: usize, sign: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..desc.q {
        let c = desc.e[i][axis] as f64 * sign;
        if c == 0.0 {
            acc += f[i];
        } else if c < 0.0 {
            acc += 2.0 * f[i];
        }
    }
    acc
}

#[inline]
fn boundary_in_place(
    desc: &LatticeDescriptor,
    compressibility: Compressibility,
    t: NodeType,
    bc: &BoundaryParams,
    f: &mut [f64],
    missing: u32,
) {
    let q = desc.q;
    let quasi = compressibility == Compressibility::QuasiCompressible;
    let normal = inward_normal(desc, missing);
    match t {
        NodeType::VelocityBc => {
            let rho = match normal {
                // Mass balance across the open side, so populations bounced
                // off the outside do not feed back into the density.
                Some((k, s)) => {
                    let known = known_flux_sum(desc, f, k, s);
                    let un = s * bc.velocity[k];
                    if quasi {
                        known / (1.0 - un)
                    } else {
                        known + un
                    }
                }
                None => f[..q].iter().sum(),
            };
            let rho = if rho.is_finite() && rho > 0.0 { rho } else { 1.0 };
            equilibrium_into(desc, compressibility, rho, bc.velocity, f);
        }
        NodeType::PressureBc => {
            let (rho, mut u) = moments_unchecked(desc, compressibility, &f[..q]);
            if !(rho > 0.0) || u.iter().any(|c| !c.is_finite()) {
                u = [0.0; 3];
            }
            if let Some((k, s)) = normal {
                let known = known_flux_sum(desc, f, k, s);
                u[k] = if quasi {
                    s * (1.0 - known / bc.density)
                } else {
                    s * (bc.density - known)
                };
            }
            equilibrium_into(desc, compressibility, bc.density, u, f);
        }
        _ => {}
    }
}

/// Replaces the populations of a boundary node by the equilibrium fixed by
/// its boundary condition, assuming every population arrived from a
/// non-solid neighbour. A velocity node keeps its local density (1 when the
/// populations do not define a positive one); a pressure node keeps its
/// local velocity.
pub fn apply_boundary(
    node_type: NodeType,
    bc: &BoundaryParams,
    f: &[f64],
    desc: &LatticeDescriptor,
    model: &FluidModel,
) -> Result<Vec<f64>> {
    apply_boundary_open(node_type, bc, f, 0, desc, model)
}

/// Like [`apply_boundary`] for a node on an open side, where bit `i` of
/// `missing` marks `f_i` as coming from a solid or absent node. The local
/// density of a velocity node, or the normal velocity of a pressure node,
/// then follows from the mass balance over the populations that did arrive
/// from inside.
pub fn apply_boundary_open(
    node_type: NodeType,
    bc: &BoundaryParams,
    f: &[f64],
    missing: u32,
    desc: &LatticeDescriptor,
    model: &FluidModel,
) -> Result<Vec<f64>> {
    if !node_type.is_boundary() {
        return Err(Error::InvalidParameter(format!(
            "boundary processing requested for a {node_type:?} node"
        )));
    }
    if f.len() != desc.q {
        return Err(Error::DimensionMismatch {
            expected: desc.q,
            found: f.len(),
        });
    }
    let mut out = f.to_vec();
    boundary_in_place(desc, model.compressibility, node_type, bc, &mut out, missing);
    Ok(out)
}
