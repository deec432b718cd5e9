//! Sparse tiling of a geometry into `a^d` node blocks, the ghost-buffer
//! topology connecting neighbouring tiles, and the tiling statistics used by
//! the overhead model.
//!
//! Ghost buffers are addressed through two slot lists shared by every tile.
//! A *write slot* `(i, k)` exists for each non-zero component `k` of `e_i` and
//! names the buffer holding `f_i` of all nodes on the tile face crossed along
//! axis `k`. A *read slot* `(i, mask)` exists for each non-empty subset of
//! those axes; it gathers the values whose source lies in the neighbour
//! reached by moving against `e_i` along exactly the axes in `mask`, and reads
//! them from that neighbour's write buffer for the lowest axis in `mask`.
//! Reads are therefore shifted while writes never are.

use crate::error::{Error, Result};
use crate::geometry::{Geometry, NodeType};
use crate::lattice::LatticeDescriptor;

/// Marker for a tile-map cell without a tile.
pub const EMPTY: u32 = u32::MAX;
/// Marker for a ghost slot without an allocated buffer.
pub const ABSENT: u32 = u32::MAX;

/// Neighbourhood code of the tile itself in the `3×3×3` stencil.
pub const CENTER: usize = 13;

/// Index into the `3×3×3` neighbourhood for a tile-cell offset in `{-1,0,1}^3`.
#[inline]
pub fn neighbor_code(o: [i32; 3]) -> usize {
    ((o[0] + 1) + 3 * (o[1] + 1) + 9 * (o[2] + 1)) as usize
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WriteSlot {
    pub dir: usize,
    pub axis: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReadSlot {
    pub dir: usize,
    /// Bit `k` set when the source lies across the tile boundary along axis `k`.
    pub mask: u8,
}

impl ReadSlot {
    pub fn source_axis(&self) -> usize {
        self.mask.trailing_zeros() as usize
    }
}

/// Source of a pulled population: a neighbourhood code and the node's local
/// index inside that tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PullSource {
    pub code: u8,
    pub local: u32,
}

#[derive(Debug, Clone)]
pub struct TileGrid {
    desc: &'static LatticeDescriptor,
    a: usize,
    n_tn: usize,
    dims: [usize; 3],
    grid_dims: [usize; 3],
    periodic: [bool; 3],
    tile_map: Vec<u32>,
    cells: Vec<[usize; 3]>,
    types: Vec<NodeType>,
    neighbors: Vec<[u32; 27]>,
    write_slots: Vec<WriteSlot>,
    read_slots: Vec<ReadSlot>,
    write_maps: Vec<Vec<u32>>,
    read_maps: Vec<Vec<(u32, u32)>>,
    write_buffers: Vec<u32>,
    read_buffers: Vec<u32>,
    buffer_offsets: Vec<usize>,
    pull: Vec<PullSource>,
}

/// Covers `g` with `a^d` tiles starting at node `(0,0,0)`, pads the last
/// tiles with solid nodes and drops every tile without a non-solid node.
///
/// `periodic[k]` wraps tile neighbourhoods along axis `k`; a wrapped axis
/// must be a multiple of `a` so that padding never sits inside the domain.
pub fn build_tile_grid(
    g: &Geometry,
    a: usize,
    desc: &LatticeDescriptor,
    periodic: [bool; 3],
) -> Result<TileGrid> {
    let desc = desc.arrangement.descriptor();
    if a < 2 {
        return Err(Error::InvalidParameter(format!("tile edge must be at least 2, got {a}")));
    }
    if desc.d != g.dim() {
        return Err(Error::InvalidParameter(format!(
            "{}D lattice {} used with a {}D geometry",
            desc.d,
            desc.arrangement,
            g.dim()
        )));
    }
    let d = desc.d;
    let dims = g.dims();
    let mut periodic = periodic;
    if d == 2 {
        periodic[2] = false;
    }
    for k in 0..d {
        if periodic[k] && dims[k] % a != 0 {
            return Err(Error::InvalidParameter(format!(
                "periodic axis {k} has {} nodes, not a multiple of the tile edge {a}",
                dims[k]
            )));
        }
    }
    let n_tn = a.pow(d as u32);
    let mut grid_dims = [1usize; 3];
    for k in 0..d {
        grid_dims[k] = dims[k].div_ceil(a);
    }
    let n_cells: usize = grid_dims.iter().product();
    let mut tile_map = vec![EMPTY; n_cells];
    let mut cells = Vec::new();
    let mut types = Vec::new();
    let mut block = vec![NodeType::Solid; n_tn];

    for cz in 0..grid_dims[2] {
        for cy in 0..grid_dims[1] {
            for cx in 0..grid_dims[0] {
                let cell = [cx, cy, cz];
                let mut any = false;
                for (l, slot) in block.iter_mut().enumerate() {
                    let c = local_coords(l, a);
                    let p = [cx * a + c[0], cy * a + c[1], cz * a + c[2]];
                    *slot = if p[0] < dims[0] && p[1] < dims[1] && p[2] < dims[2] {
                        g.get(p[0], p[1], p[2])
                    } else {
                        NodeType::Solid
                    };
                    any |= !slot.is_solid();
                }
                if any {
                    tile_map[cx + grid_dims[0] * (cy + grid_dims[1] * cz)] = cells.len() as u32;
                    cells.push(cell);
                    types.extend_from_slice(&block);
                }
            }
        }
    }

    let neighbors: Vec<[u32; 27]> = cells
        .iter()
        .map(|&cell| {
            let mut nb = [EMPTY; 27];
            for (code, slot) in nb.iter_mut().enumerate() {
                let o = [code as i32 % 3 - 1, (code as i32 / 3) % 3 - 1, code as i32 / 9 - 1];
                if d == 2 && o[2] != 0 {
                    continue;
                }
                let mut c = [0usize; 3];
                let mut inside = true;
                for k in 0..3 {
                    let v = cell[k] as i64 + o[k] as i64;
                    let n = grid_dims[k] as i64;
                    if (0..n).contains(&v) {
                        c[k] = v as usize;
                    } else if periodic[k] {
                        c[k] = v.rem_euclid(n) as usize;
                    } else {
                        inside = false;
                    }
                }
                if inside {
                    *slot = tile_map[c[0] + grid_dims[0] * (c[1] + grid_dims[1] * c[2])];
                }
            }
            nb
        })
        .collect();

    let (write_slots, read_slots) = ghost_slots(desc);
    let write_maps = write_slots.iter().map(|s| write_map(desc, a, *s)).collect();
    let read_maps = read_slots.iter().map(|s| read_map(desc, a, *s)).collect();

    let mut grid = TileGrid {
        desc,
        a,
        n_tn,
        dims,
        grid_dims,
        periodic,
        tile_map,
        cells,
        types,
        neighbors,
        write_slots,
        read_slots,
        write_maps,
        read_maps,
        write_buffers: Vec::new(),
        read_buffers: Vec::new(),
        buffer_offsets: Vec::new(),
        pull: Vec::new(),
    };
    grid.allocate_buffers();
    grid.pull = pull_table(desc, a);
    Ok(grid)
}

/// Write and read slot lists for a lattice, ordered by direction.
pub fn ghost_slots(desc: &LatticeDescriptor) -> (Vec<WriteSlot>, Vec<ReadSlot>) {
    let mut writes = Vec::new();
    let mut reads = Vec::new();
    for i in 1..desc.q {
        let e = desc.e[i];
        let axes: u8 = (0..3).filter(|&k| e[k] != 0).fold(0, |m, k| m | (1 << k));
        for k in 0..3 {
            if e[k] != 0 {
                writes.push(WriteSlot { dir: i, axis: k });
            }
        }
        for mask in 1..8u8 {
            if mask & !axes == 0 {
                reads.push(ReadSlot { dir: i, mask });
            }
        }
    }
    (writes, reads)
}

#[inline]
fn local_coords(l: usize, a: usize) -> [usize; 3] {
    [l % a, (l / a) % a, l / (a * a)]
}

/// Position of a face node inside its buffer: the remaining coordinates in
/// increasing axis order, fastest first.
fn face_index(c: [usize; 3], axis: usize, d: usize, a: usize) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for k in 0..d {
        if k != axis {
            idx += c[k] * stride;
            stride *= a;
        }
    }
    idx
}

fn local_index(c: [usize; 3], a: usize) -> usize {
    c[0] + a * (c[1] + a * c[2])
}

/// Local indices of the face nodes written by `slot`, in buffer order.
fn write_map(desc: &LatticeDescriptor, a: usize, slot: WriteSlot) -> Vec<u32> {
    let d = desc.d;
    let len = a.pow(d as u32 - 1);
    let mut out = vec![0u32; len];
    let edge = if desc.e[slot.dir][slot.axis] > 0 { a - 1 } else { 0 };
    for l in 0..a.pow(d as u32) {
        let c = local_coords(l, a);
        if c[slot.axis] == edge {
            out[face_index(c, slot.axis, d, a)] = l as u32;
        }
    }
    out
}

/// `(target local index, buffer index)` pairs gathered through `slot`.
fn read_map(desc: &LatticeDescriptor, a: usize, slot: ReadSlot) -> Vec<(u32, u32)> {
    let d = desc.d;
    let e = desc.e[slot.dir];
    let ai = a as i64;
    let mut out = Vec::new();
    for l in 0..a.pow(d as u32) {
        let y = local_coords(l, a);
        let mut crossing = 0u8;
        let mut x = [0usize; 3];
        for k in 0..3 {
            let s = y[k] as i64 - e[k] as i64;
            if !(0..ai).contains(&s) {
                crossing |= 1 << k;
            }
            x[k] = s.rem_euclid(ai) as usize;
        }
        if crossing == slot.mask {
            out.push((l as u32, face_index(x, slot.source_axis(), d, a) as u32));
        }
    }
    out
}

fn pull_table(desc: &LatticeDescriptor, a: usize) -> Vec<PullSource> {
    let n_tn = a.pow(desc.d as u32);
    let ai = a as i64;
    let mut out = Vec::with_capacity(desc.q * n_tn);
    for i in 0..desc.q {
        let e = desc.e[i];
        for l in 0..n_tn {
            let y = local_coords(l, a);
            let mut o = [0i32; 3];
            let mut x = [0usize; 3];
            for k in 0..3 {
                let s = y[k] as i64 - e[k] as i64;
                o[k] = s.div_euclid(ai) as i32;
                x[k] = s.rem_euclid(ai) as usize;
            }
            out.push(PullSource {
                code: neighbor_code(o) as u8,
                local: local_index(x, a) as u32,
            });
        }
    }
    out
}

impl TileGrid {
    fn write_slot_index(&self, dir: usize, axis: usize) -> usize {
        self.write_slots
            .iter()
            .position(|s| s.dir == dir && s.axis == axis)
            .expect("every crossing axis has a write slot")
    }

    /// Source offset of a read slot in tile cells.
    fn read_offset(&self, slot: ReadSlot) -> [i32; 3] {
        let e = self.desc.e[slot.dir];
        std::array::from_fn(|k| if slot.mask & (1 << k) != 0 { -e[k] } else { 0 })
    }

    fn allocate_buffers(&mut self) {
        let nt = self.cells.len();
        let nw = self.write_slots.len();
        let nr = self.read_slots.len();
        let mut needed = vec![false; nt * nw];
        let mut read_src = vec![(EMPTY, 0usize); nt * nr];
        for t in 0..nt {
            for (r, slot) in self.read_slots.iter().enumerate() {
                let src = self.neighbors[t][neighbor_code(self.read_offset(*slot))];
                if src != EMPTY {
                    let w = self.write_slot_index(slot.dir, slot.source_axis());
                    needed[src as usize * nw + w] = true;
                    read_src[t * nr + r] = (src, w);
                }
            }
        }
        let mut write_buffers = vec![ABSENT; nt * nw];
        let mut offsets = Vec::with_capacity(nt + 1);
        let mut next = 0u32;
        for t in 0..nt {
            offsets.push(next as usize);
            for w in 0..nw {
                if needed[t * nw + w] {
                    write_buffers[t * nw + w] = next;
                    next += 1;
                }
            }
        }
        offsets.push(next as usize);
        self.read_buffers = read_src
            .iter()
            .map(|&(src, w)| if src == EMPTY { ABSENT } else { write_buffers[src as usize * nw + w] })
            .collect();
        self.write_buffers = write_buffers;
        self.buffer_offsets = offsets;
    }

    pub fn descriptor(&self) -> &'static LatticeDescriptor {
        self.desc
    }

    pub fn dim(&self) -> usize {
        self.desc.d
    }

    pub fn a(&self) -> usize {
        self.a
    }

    /// Nodes per tile, `a^d`.
    pub fn n_tn(&self) -> usize {
        self.n_tn
    }

    /// Extents of the source geometry (before padding).
    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    /// Tile cells per axis.
    pub fn grid_dims(&self) -> [usize; 3] {
        self.grid_dims
    }

    pub fn periodic(&self) -> [bool; 3] {
        self.periodic
    }

    pub fn n_tiles(&self) -> usize {
        self.tile_map.len()
    }

    pub fn n_ftiles(&self) -> usize {
        self.cells.len()
    }

    pub fn tile_map(&self) -> &[u32] {
        &self.tile_map
    }

    /// Tile-map lookup by tile-cell coordinates.
    pub fn tile_at(&self, cell: [usize; 3]) -> u32 {
        self.tile_map[cell[0] + self.grid_dims[0] * (cell[1] + self.grid_dims[1] * cell[2])]
    }

    pub fn tile_cell(&self, t: usize) -> [usize; 3] {
        self.cells[t]
    }

    pub fn tile_origin(&self, t: usize) -> [usize; 3] {
        self.cells[t].map(|c| c * self.a)
    }

    /// Node types of tile `t` in block order (x fastest).
    pub fn tile_types(&self, t: usize) -> &[NodeType] {
        &self.types[t * self.n_tn..(t + 1) * self.n_tn]
    }

    pub fn all_types(&self) -> &[NodeType] {
        &self.types
    }

    /// Tile indices of the `3^3` neighbourhood of tile `t` (`EMPTY` outside the
    /// grid or for removed tiles).
    pub fn neighbors(&self, t: usize) -> &[u32; 27] {
        &self.neighbors[t]
    }

    /// Node type at `local` inside neighbour `code` of tile `t`; removed tiles
    /// and the outside of non-periodic domains read as solid.
    #[inline]
    pub fn neighbor_type(&self, t: usize, code: usize, local: usize) -> NodeType {
        match self.neighbors[t][code] {
            EMPTY => NodeType::Solid,
            nb => self.types[nb as usize * self.n_tn + local],
        }
    }

    /// Where node `l` pulls `f_i` from.
    #[inline]
    pub fn pull_source(&self, i: usize, l: usize) -> PullSource {
        self.pull[i * self.n_tn + l]
    }

    pub fn pull_table(&self) -> &[PullSource] {
        &self.pull
    }

    /// Tile and local index of a geometry node, or `None` when it lies in a
    /// removed tile.
    pub fn locate(&self, p: [usize; 3]) -> Option<(usize, usize)> {
        let a = self.a;
        let t = self.tile_at([p[0] / a, p[1] / a, p[2] / a]);
        (t != EMPTY).then(|| (t as usize, local_index([p[0] % a, p[1] % a, p[2] % a], a)))
    }

    pub fn local_coords(&self, l: usize) -> [usize; 3] {
        local_coords(l, self.a)
    }

    pub fn write_slots(&self) -> &[WriteSlot] {
        &self.write_slots
    }

    pub fn read_slots(&self) -> &[ReadSlot] {
        &self.read_slots
    }

    /// Face nodes of write slot `w` in buffer order.
    pub fn write_map(&self, w: usize) -> &[u32] {
        &self.write_maps[w]
    }

    /// `(target node, buffer index)` pairs of read slot `r`.
    pub fn read_map(&self, r: usize) -> &[(u32, u32)] {
        &self.read_maps[r]
    }

    /// Buffer ids of tile `t`'s write slots (`ABSENT` when unallocated).
    pub fn write_buffers(&self, t: usize) -> &[u32] {
        let n = self.write_slots.len();
        &self.write_buffers[t * n..(t + 1) * n]
    }

    pub fn read_buffers(&self, t: usize) -> &[u32] {
        let n = self.read_slots.len();
        &self.read_buffers[t * n..(t + 1) * n]
    }

    pub fn n_buffers(&self) -> usize {
        *self.buffer_offsets.last().unwrap_or(&0)
    }

    /// Buffers written by tile `t` form the id range returned here.
    pub fn buffer_range(&self, t: usize) -> std::ops::Range<usize> {
        self.buffer_offsets[t]..self.buffer_offsets[t + 1]
    }

    /// Values per ghost buffer, `a^(d-1)`.
    pub fn buffer_len(&self) -> usize {
        self.n_tn / self.a
    }

    pub fn n_fnodes(&self) -> usize {
        self.types.iter().filter(|t| !t.is_solid()).count()
    }

    pub fn stats(&self) -> TileStats {
        tile_stats(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileStats {
    pub n_tiles: usize,
    pub n_ftiles: usize,
    pub n_buffers: usize,
    pub phi_t: f64,
    pub eta_t: f64,
    pub alpha_m: f64,
    pub alpha_b: f64,
    /// `N_tiles / N_ftiles`.
    pub ratio_tiles: f64,
    /// Share of allocated buffers that no face neighbour reads, so only a
    /// single edge or corner value of them is ever used.
    pub reduced_buffer_fraction: f64,
}

pub fn tile_stats(tg: &TileGrid) -> TileStats {
    let nf = tg.n_ftiles();
    let n_buffers = tg.n_buffers();
    if nf == 0 {
        return TileStats {
            n_tiles: tg.n_tiles(),
            n_ftiles: 0,
            n_buffers,
            phi_t: 0.0,
            eta_t: 1.0,
            alpha_m: 0.0,
            alpha_b: 0.0,
            ratio_tiles: 0.0,
            reduced_buffer_fraction: 0.0,
        };
    }
    let desc = tg.desc;
    let d = desc.d;
    let phi_t = tg.n_fnodes() as f64 / (nf * tg.n_tn) as f64;
    let nw = tg.write_slots.len();
    let alpha_m = n_buffers as f64 / (nf * nw) as f64;

    let len = tg.buffer_len();
    let corner_mask = (1u8 << d) - 1;
    let mut transferred = n_buffers * len;
    let mut reduced = 0usize;
    for t in 0..nf {
        for (r, slot) in tg.read_slots.iter().enumerate() {
            if tg.read_buffers(t)[r] != ABSENT {
                transferred += if slot.mask == corner_mask { 1 } else { len };
            }
        }
        for (w, slot) in tg.write_slots.iter().enumerate() {
            if tg.write_buffers(t)[w] == ABSENT {
                continue;
            }
            let mut o = [0i32; 3];
            o[slot.axis] = desc.e[slot.dir][slot.axis];
            if tg.neighbors[t][neighbor_code(o)] == EMPTY {
                reduced += 1;
            }
        }
    }
    let c_gbi = 2 * desc.q_s + 5 * desc.q_d + 10 * desc.q_t;
    let q_c = if d == 2 { desc.q_d } else { desc.q_t };
    let max_per_tile = (c_gbi - q_c) * len + q_c;
    TileStats {
        n_tiles: tg.n_tiles(),
        n_ftiles: nf,
        n_buffers,
        phi_t,
        eta_t: 1.0 - phi_t,
        alpha_m,
        alpha_b: transferred as f64 / (nf * max_per_tile) as f64,
        ratio_tiles: tg.n_tiles() as f64 / nf as f64,
        reduced_buffer_fraction: if n_buffers == 0 {
            0.0
        } else {
            reduced as f64 / n_buffers as f64
        },
    }
}
