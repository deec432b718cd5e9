use rayon::prelude::*;

use super::kernel::NodeKernel;
use super::{thread_pool, EngineOptions, MacroFields, Method, Real, Solver};
use crate::error::{Error, Result};
use crate::geometry::{Geometry, NodeType};
use crate::lattice::{FluidModel, LatticeDescriptor, MAX_Q};

/// Node types plus the addressing rules of the full raster.
struct Raster {
    dims: [usize; 3],
    periodic: [bool; 3],
    types: Vec<NodeType>,
}

impl Raster {
    /// Raster index of `p - e`, or `None` for a solid or missing source.
    #[inline]
    fn source(&self, p: [usize; 3], e: [i32; 3]) -> Option<usize> {
        let mut s = [0usize; 3];
        for k in 0..3 {
            let n = self.dims[k] as i64;
            let v = p[k] as i64 - e[k] as i64;
            s[k] = if (0..n).contains(&v) {
                v as usize
            } else if self.periodic[k] {
                v.rem_euclid(n) as usize
            } else {
                return None;
            };
        }
        let idx = s[0] + self.dims[0] * (s[1] + self.dims[1] * s[2]);
        (!self.types[idx].is_solid()).then_some(idx)
    }

    /// Post-streaming populations of node `p` pulled from `read`, with
    /// half-way bounce-back from solid or missing sources. Returns the mask
    /// of bounced directions.
    #[inline]
    fn gather<R: Real>(&self, desc: &LatticeDescriptor, read: &[R], p: [usize; 3], idx: usize, out: &mut [f64]) -> u32 {
        let q = desc.q;
        let mut missing = 0;
        out[0] = read[idx * q].to_f64();
        for i in 1..q {
            out[i] = match self.source(p, desc.e[i]) {
                Some(s) => read[s * q + i].to_f64(),
                None => {
                    missing |= 1 << i;
                    read[idx * q + desc.opposite[i]].to_f64()
                }
            };
        }
        missing
    }
}

/// Reference solver over the whole raster with two population arrays in
/// node-major layout.
pub struct DenseSolver<R: Real> {
    desc: &'static LatticeDescriptor,
    kernel: NodeKernel,
    raster: Raster,
    f: [Vec<R>; 2],
    cur: usize,
    step: u64,
    n_fnodes: usize,
    pool: rayon::ThreadPool,
}

impl<R: Real> DenseSolver<R> {
    pub fn new(
        g: &Geometry,
        desc: &LatticeDescriptor,
        model: &FluidModel,
        opts: &EngineOptions,
        f0: &[f64],
    ) -> Result<Self> {
        let desc = desc.arrangement.descriptor();
        let q = desc.q;
        if f0.len() != g.n_nodes() * q {
            return Err(Error::DimensionMismatch {
                expected: g.n_nodes() * q,
                found: f0.len(),
            });
        }
        let mut periodic = opts.periodic;
        if desc.d == 2 {
            periodic[2] = false;
        }
        let types = g.types().to_vec();
        let f: Vec<R> = f0
            .chunks(q)
            .zip(&types)
            .flat_map(|(node, t)| node.iter().map(move |v| if t.is_solid() { R::default() } else { R::from_f64(*v) }))
            .collect();
        Ok(DenseSolver {
            desc,
            kernel: NodeKernel::new(desc, model, g.bc)?,
            raster: Raster {
                dims: g.dims(),
                periodic,
                types,
            },
            f: [f.clone(), f],
            cur: 0,
            step: 0,
            n_fnodes: g.n_fnodes(),
            pool: thread_pool(opts.threads)?,
        })
    }
}

impl<R: Real> Solver for DenseSolver<R> {
    fn method(&self) -> Method {
        Method::Dense
    }

    fn step(&mut self) -> Result<()> {
        let desc = self.desc;
        let q = desc.q;
        let [nx, ny, _] = self.raster.dims;
        let (lo, hi) = self.f.split_at_mut(1);
        let (read, write) = if self.cur == 0 {
            (&lo[0], &mut hi[0])
        } else {
            (&hi[0], &mut lo[0])
        };
        let raster = &self.raster;
        let kernel = &self.kernel;
        let bad: usize = self.pool.install(|| {
            write
                .par_chunks_mut(nx * q)
                .enumerate()
                .map(|(row, out)| {
                    let (y, z) = (row % ny, row / ny);
                    let mut buf = [0.0f64; MAX_Q];
                    let mut bad = 0;
                    for x in 0..nx {
                        let idx = x + nx * row;
                        let t = raster.types[idx];
                        if t.is_solid() {
                            continue;
                        }
                        let missing = raster.gather(desc, read, [x, y, z], idx, &mut buf);
                        if !kernel.update(t, &mut buf[..q], missing) {
                            bad += 1;
                        }
                        for i in 0..q {
                            out[x * q + i] = R::from_f64(buf[i]);
                        }
                    }
                    bad
                })
                .sum()
        });
        self.cur ^= 1;
        self.step += 1;
        if bad > 0 {
            return Err(Error::NumericalFailure {
                step: self.step,
                nodes: bad,
            });
        }
        Ok(())
    }

    fn steps_done(&self) -> u64 {
        self.step
    }

    fn fields(&self) -> MacroFields {
        let desc = self.desc;
        let [nx, ny, nz] = self.raster.dims;
        let read = &self.f[self.cur];
        let solid = self.raster.types.iter().map(|t| t.is_solid()).collect();
        let mut fields = MacroFields::blank(desc.d, self.raster.dims, solid);
        let mut buf = [0.0f64; MAX_Q];
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let idx = x + nx * (y + ny * z);
                    if fields.solid[idx] {
                        continue;
                    }
                    self.raster.gather(desc, read, [x, y, z], idx, &mut buf);
                    fields.set_from(idx, desc, self.kernel.collider.compressibility, &buf[..desc.q]);
                }
            }
        }
        fields
    }

    fn tile_visits(&self) -> u64 {
        0
    }

    fn n_fnodes(&self) -> usize {
        self.n_fnodes
    }
}
