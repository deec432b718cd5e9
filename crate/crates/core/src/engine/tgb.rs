use rayon::prelude::*;

use super::kernel::NodeKernel;
use super::t2c::{collect_fields, geometry_mask, scatter_to_tiles};
use super::{thread_pool, EngineOptions, MacroFields, Method, Real, Solver};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::lattice::{FluidModel, LatticeDescriptor, MAX_Q};
use crate::tiling::{TileGrid, ABSENT, CENTER, EMPTY};

/// Tiles with a single population copy and double-buffered ghost buffers.
///
/// Populations leaving a tile are parked in the write ghost set and picked
/// up by the receiving tile at the start of the next step, so propagation
/// across tile edges takes two stages while propagation inside a tile is a
/// direct scatter.
pub struct TgbSolver<R: Real> {
    desc: &'static LatticeDescriptor,
    kernel: NodeKernel,
    tg: TileGrid,
    pdf: Vec<R>,
    ghosts: [Vec<R>; 2],
    /// Index of the ghost set read during the next step.
    cur: usize,
    step: u64,
    visits: u64,
    geom_solid: Vec<bool>,
    pool: rayon::ThreadPool,
}

/// Loads tile `t` into `scratch` (`[dir][node]`) and completes the pending
/// propagation from the read ghost set. Sentinel values mark solid sources
/// whose slot already holds the bounced-back population.
fn load_tile<R: Real>(tg: &TileGrid, t: usize, pdf: &[R], ghost: &[R], scratch: &mut [f64]) {
    let q = tg.descriptor().q;
    let n = tg.n_tn();
    let len = tg.buffer_len();
    let types = tg.tile_types(t);
    for i in 0..q {
        for l in 0..n {
            scratch[i * n + l] = pdf[i * n + l].to_f64();
        }
    }
    for (r, slot) in tg.read_slots().iter().enumerate() {
        let b = tg.read_buffers(t)[r];
        if b == ABSENT {
            continue;
        }
        let buf = &ghost[b as usize * len..(b as usize + 1) * len];
        let col = &mut scratch[slot.dir * n..(slot.dir + 1) * n];
        for &(y, idx) in tg.read_map(r) {
            if types[y as usize].is_solid() {
                continue;
            }
            let v = buf[idx as usize].to_f64();
            if !v.is_nan() {
                col[y as usize] = v;
            }
        }
    }
}

/// Sends the populations in `scratch` on their way: values crossing the
/// tile edge go to the tile's write buffers (`ghost`, starting at buffer
/// `first`), values reaching a solid node bounce back into the sender, and
/// everything else is scattered inside the tile.
fn emit_tile<R: Real>(tg: &TileGrid, t: usize, scratch: &[f64], pdf: &mut [R], ghost: &mut [R], first: usize) {
    let desc = tg.descriptor();
    let q = desc.q;
    let n = tg.n_tn();
    let len = tg.buffer_len();
    let types = tg.tile_types(t);
    for (w, slot) in tg.write_slots().iter().enumerate() {
        let b = tg.write_buffers(t)[w];
        if b == ABSENT {
            continue;
        }
        let off = (b as usize - first) * len;
        let col = &scratch[slot.dir * n..(slot.dir + 1) * n];
        for (idx, &src) in tg.write_map(w).iter().enumerate() {
            ghost[off + idx] = if types[src as usize].is_solid() {
                R::NAN
            } else {
                R::from_f64(col[src as usize])
            };
        }
    }
    let nb = tg.neighbors(t);
    for l in 0..n {
        if types[l].is_solid() {
            continue;
        }
        pdf[l] = R::from_f64(scratch[l]);
        for i in 1..q {
            let opp = desc.opposite[i];
            let v = R::from_f64(scratch[i * n + l]);
            // The node pulling f_opp from `l` is exactly the target of f_i.
            let target = tg.pull_source(opp, l);
            let code = target.code as usize;
            let local = target.local as usize;
            if code == CENTER {
                if types[local].is_solid() {
                    pdf[opp * n + l] = v;
                } else {
                    pdf[i * n + local] = v;
                }
            } else {
                let other = nb[code];
                if other == EMPTY || tg.all_types()[other as usize * n + local].is_solid() {
                    pdf[opp * n + l] = v;
                }
            }
        }
    }
}

/// Directions of node `l` whose source is solid or in a removed tile.
fn missing_mask(tg: &TileGrid, t: usize, l: usize) -> u32 {
    let q = tg.descriptor().q;
    let n = tg.n_tn();
    let nb = tg.neighbors(t);
    let mut missing = 0;
    for i in 1..q {
        let s = tg.pull_source(i, l);
        let src = nb[s.code as usize];
        if src == EMPTY || tg.all_types()[src as usize * n + s.local as usize].is_solid() {
            missing |= 1 << i;
        }
    }
    missing
}

/// Splits a ghost set into the contiguous ranges written by each tile.
fn split_per_tile<'a, R>(tg: &TileGrid, mut set: &'a mut [R]) -> Vec<&'a mut [R]> {
    let len = tg.buffer_len();
    let mut out = Vec::with_capacity(tg.n_ftiles());
    for t in 0..tg.n_ftiles() {
        let (head, tail) = set.split_at_mut(tg.buffer_range(t).len() * len);
        out.push(head);
        set = tail;
    }
    out
}

impl<R: Real> TgbSolver<R> {
    pub fn new(tg: TileGrid, g: &Geometry, model: &FluidModel, opts: &EngineOptions, f0: &[f64]) -> Result<Self> {
        let desc = tg.descriptor();
        let q = desc.q;
        let n = tg.n_tn();
        let start = scatter_to_tiles::<R>(&tg, g, f0)?;
        let ghost_len = tg.n_buffers() * tg.buffer_len();
        let mut solver = TgbSolver {
            desc,
            kernel: NodeKernel::new(desc, model, g.bc)?,
            pdf: vec![R::default(); start.len()],
            ghosts: [vec![R::NAN; ghost_len], vec![R::NAN; ghost_len]],
            cur: 0,
            step: 0,
            visits: 0,
            geom_solid: geometry_mask(g),
            pool: thread_pool(opts.threads)?,
            tg,
        };
        // Emit the initial post-collision state so the stored copy and the
        // ghost buffers hold it in streamed form, like after a regular step.
        let tg = &solver.tg;
        let mut scratch = vec![0.0f64; q * n];
        let mut chunks = split_per_tile(tg, &mut solver.ghosts[1]);
        for (t, ghost) in chunks.iter_mut().enumerate() {
            for (s, v) in scratch.iter_mut().zip(&start[t * q * n..(t + 1) * q * n]) {
                *s = v.to_f64();
            }
            let first = tg.buffer_range(t).start;
            emit_tile(tg, t, &scratch, &mut solver.pdf[t * q * n..(t + 1) * q * n], ghost, first);
        }
        solver.cur = 1;
        Ok(solver)
    }

    pub fn tile_grid(&self) -> &TileGrid {
        &self.tg
    }
}

impl<R: Real> Solver for TgbSolver<R> {
    fn method(&self) -> Method {
        Method::Tgb
    }

    fn step(&mut self) -> Result<()> {
        let q = self.desc.q;
        let n = self.tg.n_tn();
        let (lo, hi) = self.ghosts.split_at_mut(1);
        let (read, write) = if self.cur == 0 {
            (&lo[0], &mut hi[0])
        } else {
            (&hi[0], &mut lo[0])
        };
        let tg = &self.tg;
        let kernel = &self.kernel;
        let chunks = split_per_tile(tg, write);
        let (visits, bad) = self.pool.install(|| {
            self.pdf
                .par_chunks_mut(q * n)
                .zip(chunks.into_par_iter())
                .enumerate()
                .map_init(
                    || vec![0.0f64; q * n],
                    |scratch, (t, (pdf, ghost))| {
                        load_tile(tg, t, pdf, read, scratch);
                        let types = tg.tile_types(t);
                        let mut buf = [0.0f64; MAX_Q];
                        let mut bad = 0usize;
                        for l in 0..n {
                            let ty = types[l];
                            if ty.is_solid() {
                                continue;
                            }
                            for i in 0..q {
                                buf[i] = scratch[i * n + l];
                            }
                            let missing = if ty.is_boundary() { missing_mask(tg, t, l) } else { 0 };
                            if !kernel.update(ty, &mut buf[..q], missing) {
                                bad += 1;
                            }
                            for i in 0..q {
                                scratch[i * n + l] = buf[i];
                            }
                        }
                        emit_tile(tg, t, scratch, pdf, ghost, tg.buffer_range(t).start);
                        (1u64, bad)
                    },
                )
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
        let q = self.desc.q;
        let n = self.tg.n_tn();
        let tg = &self.tg;
        let read = &self.ghosts[self.cur];
        let mut scratch = vec![0.0f64; q * n];
        let mut loaded = usize::MAX;
        collect_fields(tg, self.kernel.collider.compressibility, &self.geom_solid, |t, l, out| {
            if loaded != t {
                load_tile(tg, t, &self.pdf[t * q * n..(t + 1) * q * n], read, &mut scratch);
                loaded = t;
            }
            for i in 0..q {
                out[i] = scratch[i * n + l];
            }
        })
    }

    fn tile_visits(&self) -> u64 {
        self.visits
    }

    fn n_fnodes(&self) -> usize {
        self.tg.n_fnodes()
    }
}
