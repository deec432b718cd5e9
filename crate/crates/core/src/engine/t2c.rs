use rayon::prelude::*;

use super::kernel::NodeKernel;
use super::{thread_pool, EngineOptions, MacroFields, Method, Real, Solver};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::lattice::{FluidModel, LatticeDescriptor, MAX_Q};
use crate::tiling::{TileGrid, EMPTY};

/// Tiles with two population copies: every tile gathers from the previous
/// copy through the tile map and writes only its own block of the next one.
pub struct T2cSolver<R: Real> {
    desc: &'static LatticeDescriptor,
    kernel: NodeKernel,
    tg: TileGrid,
    f: [Vec<R>; 2],
    cur: usize,
    step: u64,
    visits: u64,
    geom_solid: Vec<bool>,
    pool: rayon::ThreadPool,
}

/// Copies raster-ordered populations into tile blocks (`[tile][dir][node]`).
pub(crate) fn scatter_to_tiles<R: Real>(tg: &TileGrid, g: &Geometry, f0: &[f64]) -> Result<Vec<R>> {
    let q = tg.descriptor().q;
    let n = tg.n_tn();
    if f0.len() != g.n_nodes() * q {
        return Err(Error::DimensionMismatch {
            expected: g.n_nodes() * q,
            found: f0.len(),
        });
    }
    let dims = g.dims();
    let mut out = vec![R::default(); tg.n_ftiles() * q * n];
    for t in 0..tg.n_ftiles() {
        let origin = tg.tile_origin(t);
        let types = tg.tile_types(t);
        for l in 0..n {
            if types[l].is_solid() {
                continue;
            }
            let c = tg.local_coords(l);
            let gi = g.index(origin[0] + c[0], origin[1] + c[1], origin[2] + c[2]);
            debug_assert!((0..3).all(|k| origin[k] + c[k] < dims[k]));
            for i in 0..q {
                out[(t * q + i) * n + l] = R::from_f64(f0[gi * q + i]);
            }
        }
    }
    Ok(out)
}

/// Post-streaming populations of node `l` in tile `t`, with half-way
/// bounce-back from solid or removed sources. Returns the mask of bounced
/// directions.
#[inline]
fn gather<R: Real>(tg: &TileGrid, nb: &[u32; 27], read: &[R], t: usize, l: usize, out: &mut [f64]) -> u32 {
    let desc = tg.descriptor();
    let q = desc.q;
    let n = tg.n_tn();
    let stride = q * n;
    let own = t * stride;
    let types = tg.all_types();
    let mut missing = 0;
    out[0] = read[own + l].to_f64();
    for i in 1..q {
        let s = tg.pull_source(i, l);
        let src = nb[s.code as usize];
        let solid = src == EMPTY || types[src as usize * n + s.local as usize].is_solid();
        out[i] = if solid {
            missing |= 1 << i;
            read[own + desc.opposite[i] * n + l].to_f64()
        } else {
            read[src as usize * stride + i * n + s.local as usize].to_f64()
        };
    }
    missing
}

pub(crate) fn geometry_mask(g: &Geometry) -> Vec<bool> {
    g.types().iter().map(|t| t.is_solid()).collect()
}

/// Fills `fields` from tile data, calling `node` to obtain the populations
/// of each non-solid node.
pub(crate) fn collect_fields(
    tg: &TileGrid,
    compressibility: crate::lattice::Compressibility,
    geom_solid: &[bool],
    mut node: impl FnMut(usize, usize, &mut [f64]),
) -> MacroFields {
    let desc = tg.descriptor();
    let dims = tg.dims();
    let mut fields = MacroFields::blank(desc.d, dims, geom_solid.to_vec());
    let mut buf = [0.0f64; MAX_Q];
    for z in 0..dims[2] {
        for y in 0..dims[1] {
            for x in 0..dims[0] {
                let idx = x + dims[0] * (y + dims[1] * z);
                if geom_solid[idx] {
                    continue;
                }
                let (t, l) = tg.locate([x, y, z]).expect("non-solid nodes lie in kept tiles");
                node(t, l, &mut buf[..desc.q]);
                fields.set_from(idx, desc, compressibility, &buf[..desc.q]);
            }
        }
    }
    fields
}

impl<R: Real> T2cSolver<R> {
    pub fn new(tg: TileGrid, g: &Geometry, model: &FluidModel, opts: &EngineOptions, f0: &[f64]) -> Result<Self> {
        let desc = tg.descriptor();
        let f = scatter_to_tiles::<R>(&tg, g, f0)?;
        Ok(T2cSolver {
            desc,
            kernel: NodeKernel::new(desc, model, g.bc)?,
            f: [f.clone(), f],
            cur: 0,
            step: 0,
            visits: 0,
            geom_solid: geometry_mask(g),
            pool: thread_pool(opts.threads)?,
            tg,
        })
    }

    pub fn tile_grid(&self) -> &TileGrid {
        &self.tg
    }
}

impl<R: Real> Solver for T2cSolver<R> {
    fn method(&self) -> Method {
        Method::T2c
    }

    fn step(&mut self) -> Result<()> {
        let q = self.desc.q;
        let n = self.tg.n_tn();
        let (lo, hi) = self.f.split_at_mut(1);
        let (read, write) = if self.cur == 0 {
            (&lo[0], &mut hi[0])
        } else {
            (&hi[0], &mut lo[0])
        };
        let tg = &self.tg;
        let kernel = &self.kernel;
        let (visits, bad) = self.pool.install(|| {
            write
                .par_chunks_mut(q * n)
                .enumerate()
                .map(|(t, out)| {
                    let nb = *tg.neighbors(t);
                    let types = tg.tile_types(t);
                    let mut buf = [0.0f64; MAX_Q];
                    let mut bad = 0usize;
                    for l in 0..n {
                        let ty = types[l];
                        if ty.is_solid() {
                            continue;
                        }
                        let missing = gather(tg, &nb, read, t, l, &mut buf);
                        if !kernel.update(ty, &mut buf[..q], missing) {
                            bad += 1;
                        }
                        for i in 0..q {
                            out[i * n + l] = R::from_f64(buf[i]);
                        }
                    }
                    (1u64, bad)
                })
                .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1))
        });
        self.cur ^= 1;
        self.step += 1;
        self.visits += visits;
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
        let read = &self.f[self.cur];
        let tg = &self.tg;
        collect_fields(tg, self.kernel.collider.compressibility, &self.geom_solid, |t, l, out| {
            gather(tg, tg.neighbors(t), read, t, l, out);
        })
    }

    fn tile_visits(&self) -> u64 {
        self.visits
    }

    fn n_fnodes(&self) -> usize {
        self.tg.n_fnodes()
    }
}
