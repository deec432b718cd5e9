//! Analytical memory and bandwidth overheads of sparse LBM storage schemes.
//!
//! Every overhead is relative to the minimum a dense code needs for the
//! non-solid nodes alone: `M_node = q·s_d` bytes of storage and
//! `B_node = 2·q·s_d` bytes of traffic per node and step.

use std::fmt;

use crate::error::{Error, Result};
use crate::lattice::{Arrangement, LatticeDescriptor};
use crate::tiling::TileStats;

/// Byte sizes entering the cost model.
#[derive(Debug, Clone, Copy)]
pub struct CostParams {
    pub desc: &'static LatticeDescriptor,
    /// Bytes per population value.
    pub s_d: usize,
    /// Bytes per node type.
    pub s_t: usize,
    /// Bytes per tile map entry.
    pub s_ti: usize,
    /// Bytes per ghost buffer index.
    pub s_gbi: usize,
    /// Bytes per neighbour index of the connectivity matrix.
    pub s_idx_cm: usize,
    /// Bytes per entry of the fluid index array.
    pub s_idx_fia: usize,
    /// Bytes per burst transaction.
    pub s_b: usize,
    /// Tile edge in nodes.
    pub a: usize,
}

impl CostParams {
    /// Default sizes for the given lattice, value size and tile edge.
    pub fn new(arrangement: Arrangement, s_d: usize, a: usize) -> Result<Self> {
        let p = CostParams {
            desc: arrangement.descriptor(),
            s_d,
            s_t: 2,
            s_ti: 4,
            s_gbi: 4,
            s_idx_cm: 4,
            s_idx_fia: 4,
            s_b: 32,
            a,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.s_d != 4 && self.s_d != 8 {
            return Err(Error::InvalidParameter(format!(
                "population size must be 4 or 8 bytes, got {}",
                self.s_d
            )));
        }
        let sizes = [
            ("s_t", self.s_t),
            ("s_ti", self.s_ti),
            ("s_gbi", self.s_gbi),
            ("s_idx_cm", self.s_idx_cm),
            ("s_idx_fia", self.s_idx_fia),
            ("s_b", self.s_b),
            ("tile edge", self.a),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Nodes per tile, `a^d`.
    pub fn n_tn(&self) -> f64 {
        (self.a as f64).powi(self.desc.d as i32)
    }

    fn q(&self) -> f64 {
        self.desc.q as f64
    }
}

/// Geometry coefficients consumed by the tile overheads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryStats {
    pub phi: f64,
    pub phi_t: f64,
    pub alpha_m: f64,
    /// `None` when unknown; the model then uses `0.95·alpha_m`.
    pub alpha_b: Option<f64>,
    /// `N_tiles / N_ftiles`.
    pub ratio_tiles: f64,
}

/// Share of `alpha_m` assumed for `alpha_b` when it was not measured.
pub const ALPHA_B_ESTIMATE: f64 = 0.95;

impl GeometryStats {
    pub fn new(phi: f64, phi_t: f64, alpha_m: f64, alpha_b: Option<f64>, ratio_tiles: f64) -> Result<Self> {
        let s = GeometryStats {
            phi,
            phi_t,
            alpha_m,
            alpha_b,
            ratio_tiles,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn from_tiles(phi: f64, stats: &TileStats) -> Result<Self> {
        GeometryStats::new(
            phi,
            stats.phi_t,
            stats.alpha_m,
            Some(stats.alpha_b),
            stats.ratio_tiles.max(1.0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must lie in [0, 1], got {v}")))
            }
        };
        unit("phi", self.phi)?;
        unit("phi_t", self.phi_t)?;
        unit("alpha_m", self.alpha_m)?;
        if let Some(b) = self.alpha_b {
            unit("alpha_b", b)?;
        }
        if !(self.ratio_tiles >= 1.0) {
            return Err(Error::Domain(format!(
                "tile ratio must be at least 1, got {}",
                self.ratio_tiles
            )));
        }
        Ok(())
    }

    /// `alpha_b`, or its estimate, plus whether it was estimated.
    pub fn alpha_b_or_estimate(&self) -> (f64, bool) {
        match self.alpha_b {
            Some(b) => (b, false),
            None => (ALPHA_B_ESTIMATE * self.alpha_m, true),
        }
    }
}

/// Per-node storage and per-step traffic minima, in bytes.
pub fn node_costs(p: &CostParams) -> (f64, f64) {
    let m = p.q() * p.s_d as f64;
    (m, 2.0 * m)
}

/// Average number of ghost buffer sets per propagating direction.
pub fn ghost_buffer_factor(desc: &LatticeDescriptor) -> f64 {
    (desc.q_s + 2 * desc.q_d + 3 * desc.q_t) as f64 / desc.q as f64
}

/// Ghost buffer indices loaded by every tile.
pub fn ghost_buffer_indices(desc: &LatticeDescriptor) -> usize {
    2 * desc.q_s + 5 * desc.q_d + 10 * desc.q_t
}

/// Directions whose ghost buffers carry a single corner value.
pub fn corner_directions(desc: &LatticeDescriptor) -> usize {
    if desc.d == 2 {
        desc.q_d
    } else {
        desc.q_t
    }
}

/// Minimum traffic of one average non-empty tile.
pub fn tile_traffic(p: &CostParams, phi_t: f64) -> f64 {
    p.n_tn() * phi_t * node_costs(p).1
}

fn tile_memory(p: &CostParams, phi_t: f64) -> f64 {
    p.n_tn() * phi_t * node_costs(p).0
}

fn check_phi_t(phi_t: f64) -> Result<()> {
    if phi_t > 0.0 && phi_t <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("tile porosity must lie in (0, 1], got {phi_t}")))
    }
}

/// Connectivity matrix: `q - 1` neighbour indices per node plus a second
/// population copy. Returns `(delta_m, delta_b)`.
pub fn overhead_cm(p: &CostParams) -> (f64, f64) {
    let (m, b) = node_costs(p);
    let idx = (p.q() - 1.0) * p.s_idx_cm as f64;
    (idx / m + 1.0, idx / b)
}

/// Fluid index array: one index per node of the bounding raster plus a
/// second population copy, with the populations accessed twice per step.
pub fn overhead_fia(p: &CostParams, phi: f64) -> Result<(f64, f64)> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(Error::Domain(format!("porosity must lie in (0, 1], got {phi}")));
    }
    let (m, b) = node_costs(p);
    let s = p.s_idx_fia as f64;
    Ok((s / (phi * m) + 1.0, s / (phi * b) + 1.0))
}

/// Two population copies per tile. Returns `(delta_m, delta_b, delta_b_bt)`
/// where the last one also charges full tile transfers.
pub fn overhead_t2c(p: &CostParams, s: &GeometryStats) -> Result<(f64, f64, f64)> {
    check_phi_t(s.phi_t)?;
    let (m, _) = node_costs(p);
    let phi_t = s.phi_t;
    let dm = (2.0 - phi_t + (p.s_t as f64 + s.ratio_tiles * p.s_ti as f64 / p.n_tn()) / m) / phi_t;
    let halo = (p.a as f64 + 2.0).powi(p.desc.d as i32);
    let db = (halo * p.s_t as f64 + (p.q() - 1.0) * p.s_ti as f64) / tile_traffic(p, phi_t);
    Ok((dm, db, db + (1.0 / phi_t - 1.0)))
}

/// One population copy plus double-buffered ghost buffers. Returns
/// `(delta_m, delta_b, delta_b_bt)`; the burst bound also charges ghost
/// buffer transfers, with corner values costing a whole transaction.
pub fn overhead_tgb(p: &CostParams, s: &GeometryStats) -> Result<(f64, f64, f64)> {
    check_phi_t(s.phi_t)?;
    let desc = p.desc;
    let (m, _) = node_costs(p);
    let phi_t = s.phi_t;
    let c_gb = ghost_buffer_factor(desc);
    let c_gbi = ghost_buffer_indices(desc) as f64;
    let a = p.a as f64;
    let dm = (1.0 - phi_t + (p.s_t as f64 + c_gbi * p.s_gbi as f64 / p.n_tn()) / m + 2.0 * s.alpha_m * c_gb / a)
        / phi_t;
    let b_tile = tile_traffic(p, phi_t);
    let halo = (a + 2.0).powi(desc.d as i32);
    let db = (halo * p.s_t as f64 + c_gbi * p.s_gbi as f64) / b_tile;
    let q_c = corner_directions(desc) as f64;
    let b_gbnc = (c_gbi - q_c) * (p.n_tn() / a) * p.s_d as f64;
    let b_gbc = q_c * p.s_b as f64;
    let (alpha_b, _) = s.alpha_b_or_estimate();
    let dbt = db + (1.0 / phi_t - 1.0) + alpha_b * (b_gbnc + b_gbc) / b_tile;
    Ok((dm, db, dbt))
}

/// Breakdown of an overhead. Memory overheads use all four parts,
/// bandwidth overheads leave `solid` at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Components {
    /// Storage spent on solid nodes inside kept tiles.
    pub solid: f64,
    /// Node type values.
    pub node_type: f64,
    /// Populations held or moved a second time: the second copy, the
    /// ghost buffers or the repeated access.
    pub race: f64,
    /// Addressing data: tile map, ghost indices or neighbour indices.
    pub addressing: f64,
}

impl Components {
    pub fn total(&self) -> f64 {
        self.solid + self.node_type + self.race + self.addressing
    }

    fn all_non_negative(&self) -> bool {
        [self.solid, self.node_type, self.race, self.addressing]
            .iter()
            .all(|v| *v >= 0.0)
    }
}

/// Component breakdown of a tile scheme's overheads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TileBreakdown {
    pub memory: Components,
    pub bandwidth: Components,
    /// Extra traffic from moving whole tiles, solid nodes included.
    pub full_tiles: f64,
    /// Extra traffic from ghost buffers under burst transactions.
    pub ghost_bursts: f64,
}

impl TileBreakdown {
    pub fn burst_total(&self) -> f64 {
        self.bandwidth.total() + self.full_tiles + self.ghost_bursts
    }
}

fn shared_tile_parts(p: &CostParams, phi_t: f64) -> (Components, Components) {
    let (m, _) = node_costs(p);
    let halo = (p.a as f64 + 2.0).powi(p.desc.d as i32);
    let memory = Components {
        solid: 1.0 / phi_t - 1.0,
        node_type: p.s_t as f64 / (m * phi_t),
        ..Default::default()
    };
    let bandwidth = Components {
        node_type: halo * p.s_t as f64 / tile_traffic(p, phi_t),
        ..Default::default()
    };
    (memory, bandwidth)
}

pub fn overhead_t2c_components(p: &CostParams, s: &GeometryStats) -> Result<TileBreakdown> {
    check_phi_t(s.phi_t)?;
    let phi_t = s.phi_t;
    let (mut memory, mut bandwidth) = shared_tile_parts(p, phi_t);
    memory.race = 1.0 / phi_t;
    memory.addressing = s.ratio_tiles * p.s_ti as f64 / tile_memory(p, phi_t);
    bandwidth.addressing = (p.q() - 1.0) * p.s_ti as f64 / tile_traffic(p, phi_t);
    Ok(TileBreakdown {
        memory,
        bandwidth,
        full_tiles: 1.0 / phi_t - 1.0,
        ghost_bursts: 0.0,
    })
}

pub fn overhead_tgb_components(p: &CostParams, s: &GeometryStats) -> Result<TileBreakdown> {
    check_phi_t(s.phi_t)?;
    let desc = p.desc;
    let phi_t = s.phi_t;
    let a = p.a as f64;
    let (mut memory, mut bandwidth) = shared_tile_parts(p, phi_t);
    let c_gbi = ghost_buffer_indices(desc) as f64;
    // Allocated ghost buffers, both sets, per average tile.
    let m_gb = 2.0 * (desc.q_s + 2 * desc.q_d + 3 * desc.q_t) as f64 * (p.n_tn() / a) * p.s_d as f64 * s.alpha_m;
    memory.race = m_gb / tile_memory(p, phi_t);
    memory.addressing = c_gbi * p.s_gbi as f64 / tile_memory(p, phi_t);
    let b_tile = tile_traffic(p, phi_t);
    bandwidth.addressing = c_gbi * p.s_gbi as f64 / b_tile;
    let q_c = corner_directions(desc) as f64;
    let edges = (c_gbi - q_c) * (p.n_tn() / a) * p.s_d as f64;
    let corners = q_c * p.s_b as f64;
    let (alpha_b, _) = s.alpha_b_or_estimate();
    Ok(TileBreakdown {
        memory,
        bandwidth,
        full_tiles: 1.0 / phi_t - 1.0,
        ghost_bursts: alpha_b * (edges + corners) / b_tile,
    })
}

/// Achieved share of the peak memory bandwidth, counting only the minimum
/// per-node traffic.
pub fn bandwidth_utilization(mlups: f64, p: &CostParams, peak_bytes_per_s: f64) -> Result<f64> {
    if !(peak_bytes_per_s > 0.0) {
        return Err(Error::Domain(format!(
            "peak bandwidth must be positive, got {peak_bytes_per_s}"
        )));
    }
    if !(mlups >= 0.0) {
        return Err(Error::Domain(format!("performance must be non-negative, got {mlups}")));
    }
    Ok(mlups * 1e6 * node_costs(p).1 / peak_bytes_per_s)
}

pub fn bytes_per_flop(p: &CostParams, flops_per_node: f64) -> Result<f64> {
    if !(flops_per_node > 0.0) {
        return Err(Error::Domain(format!(
            "FLOP count must be positive, got {flops_per_node}"
        )));
    }
    Ok(node_costs(p).1 / flops_per_node)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    T2c,
    Tgb,
    Cm,
    Fia,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::T2c, Scheme::Tgb, Scheme::Cm, Scheme::Fia];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::T2c => "t2c",
            Scheme::Tgb => "tgb",
            Scheme::Cm => "cm",
            Scheme::Fia => "fia",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "t2c" => Ok(Scheme::T2c),
            "tgb" => Ok(Scheme::Tgb),
            "cm" => Ok(Scheme::Cm),
            "fia" => Ok(Scheme::Fia),
            other => Err(Error::InvalidParameter(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeOverhead {
    pub scheme: Scheme,
    pub memory: Components,
    pub bandwidth: Components,
    /// Pessimistic bandwidth overhead under burst transactions, tiles only.
    pub bandwidth_burst: Option<f64>,
}

impl SchemeOverhead {
    pub fn delta_m(&self) -> f64 {
        self.memory.total()
    }

    pub fn delta_b(&self) -> f64 {
        self.bandwidth.total()
    }

    /// Expected performance relative to a dense code limited by memory
    /// bandwidth.
    pub fn relative_performance(&self) -> f64 {
        1.0 / (1.0 + self.delta_b())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub arrangement: Arrangement,
    pub s_d: usize,
    pub a: usize,
    pub stats: GeometryStats,
    pub alpha_b_estimated: bool,
    pub schemes: Vec<SchemeOverhead>,
}

impl OverheadReport {
    pub fn build(p: &CostParams, stats: &GeometryStats, schemes: &[Scheme]) -> Result<Self> {
        p.validate()?;
        stats.validate()?;
        let mut out = Vec::with_capacity(schemes.len());
        for &scheme in schemes {
            let entry = match scheme {
                Scheme::T2c | Scheme::Tgb => {
                    let b = if scheme == Scheme::T2c {
                        overhead_t2c_components(p, stats)?
                    } else {
                        overhead_tgb_components(p, stats)?
                    };
                    SchemeOverhead {
                        scheme,
                        memory: b.memory,
                        bandwidth: b.bandwidth,
                        bandwidth_burst: Some(b.burst_total()),
                    }
                }
                Scheme::Cm => {
                    let (m, b) = node_costs(p);
                    let idx = (p.q() - 1.0) * p.s_idx_cm as f64;
                    SchemeOverhead {
                        scheme,
                        memory: Components {
                            race: 1.0,
                            addressing: idx / m,
                            ..Default::default()
                        },
                        bandwidth: Components {
                            addressing: idx / b,
                            ..Default::default()
                        },
                        bandwidth_burst: None,
                    }
                }
                Scheme::Fia => {
                    overhead_fia(p, stats.phi)?;
                    let (m, b) = node_costs(p);
                    let idx = p.s_idx_fia as f64 / stats.phi;
                    SchemeOverhead {
                        scheme,
                        memory: Components {
                            race: 1.0,
                            addressing: idx / m,
                            ..Default::default()
                        },
                        bandwidth: Components {
                            race: 1.0,
                            addressing: idx / b,
                            ..Default::default()
                        },
                        bandwidth_burst: None,
                    }
                }
            };
            debug_assert!(entry.memory.all_non_negative() && entry.bandwidth.all_non_negative());
            out.push(entry);
        }
        Ok(OverheadReport {
            arrangement: p.desc.arrangement,
            s_d: p.s_d,
            a: p.a,
            stats: *stats,
            alpha_b_estimated: stats.alpha_b.is_none(),
            schemes: out,
        })
    }

    pub fn get(&self, scheme: Scheme) -> Option<&SchemeOverhead> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }

    /// `key=value` lines in a fixed order.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let (alpha_b, _) = self.stats.alpha_b_or_estimate();
        let mut kv = |k: &str, v: String| {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        };
        kv("lattice", self.arrangement.name().to_ascii_lowercase());
        kv("s_d", self.s_d.to_string());
        kv("tile_edge", self.a.to_string());
        kv("phi", fmt6(self.stats.phi));
        kv("phi_t", fmt6(self.stats.phi_t));
        kv("alpha_m", fmt6(self.stats.alpha_m));
        kv("alpha_b", fmt6(alpha_b));
        kv("alpha_b_estimated", self.alpha_b_estimated.to_string());
        kv("ratio_tiles", fmt6(self.stats.ratio_tiles));
        for s in &self.schemes {
            let n = s.scheme.name();
            kv(&format!("{n}.delta_m"), fmt6(s.delta_m()));
            kv(&format!("{n}.delta_m.solid"), fmt6(s.memory.solid));
            kv(&format!("{n}.delta_m.node_type"), fmt6(s.memory.node_type));
            kv(&format!("{n}.delta_m.race"), fmt6(s.memory.race));
            kv(&format!("{n}.delta_m.addressing"), fmt6(s.memory.addressing));
            kv(&format!("{n}.delta_b"), fmt6(s.delta_b()));
            kv(&format!("{n}.delta_b.node_type"), fmt6(s.bandwidth.node_type));
            kv(&format!("{n}.delta_b.race"), fmt6(s.bandwidth.race));
            kv(&format!("{n}.delta_b.addressing"), fmt6(s.bandwidth.addressing));
            if let Some(bt) = s.bandwidth_burst {
                kv(&format!("{n}.delta_b_bt"), fmt6(bt));
            }
            kv(&format!("{n}.relative_performance"), fmt6(s.relative_performance()));
        }
        out
    }
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

impl fmt::Display for OverheadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (alpha_b, estimated) = self.stats.alpha_b_or_estimate();
        writeln!(
            f,
            "{} s_d={} a={}  phi={:.4} phi_t={:.4} alpha_m={:.4} alpha_b={:.4}{}",
            self.arrangement,
            self.s_d,
            self.a,
            self.stats.phi,
            self.stats.phi_t,
            self.stats.alpha_m,
            alpha_b,
            if estimated { " (estimated)" } else { "" }
        )?;
        writeln!(
            f,
            "{:<6}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}{:>10}",
            "scheme", "dM", "dM_solid", "dM_type", "dM_race", "dM_addr", "dB", "dB_bt", "perf"
        )?;
        for s in &self.schemes {
            let bt = s
                .bandwidth_burst
                .map(|v| format!("{v:.4}"))
                .unwrap_or_else(|| "-".to_string());
            writeln!(
                f,
                "{:<6}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>10.4}{:>10}{:>10.4}",
                s.scheme.name(),
                s.delta_m(),
                s.memory.solid,
                s.memory.node_type,
                s.memory.race,
                s.memory.addressing,
                s.delta_b(),
                bt,
                s.relative_performance()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(arr: Arrangement, s_d: usize, a: usize) -> CostParams {
        CostParams::new(arr, s_d, a).unwrap()
    }

    fn dense() -> GeometryStats {
        GeometryStats::new(1.0, 1.0, 1.0, Some(1.0), 1.0).unwrap()
    }

    #[test]
    fn node_minima() {
        assert_eq!(node_costs(&p(Arrangement::D3Q19, 8, 4)), (152.0, 304.0));
        assert_eq!(node_costs(&p(Arrangement::D2Q9, 8, 16)).1, 144.0);
        assert_eq!(node_costs(&p(Arrangement::D2Q9, 4, 16)).0, 36.0);
    }

    #[test]
    fn ghost_constants() {
        let gb: Vec<f64> = [Arrangement::D2Q9, Arrangement::D3Q19, Arrangement::D3Q27]
            .iter()
            .map(|a| ghost_buffer_factor(a.descriptor()))
            .collect();
        assert!((gb[0] - 4.0 / 3.0).abs() < 1e-15);
        assert!((gb[1] - 30.0 / 19.0).abs() < 1e-15);
        assert!((gb[2] - 2.0).abs() < 1e-15);
        let gbi: Vec<usize> = [Arrangement::D2Q9, Arrangement::D3Q19, Arrangement::D3Q27]
            .iter()
            .map(|a| ghost_buffer_indices(a.descriptor()))
            .collect();
        assert_eq!(gbi, vec![28, 72, 152]);
        assert_eq!(corner_directions(Arrangement::D2Q9.descriptor()), 4);
        assert_eq!(corner_directions(Arrangement::D3Q19.descriptor()), 0);
        assert_eq!(corner_directions(Arrangement::D3Q27.descriptor()), 8);
    }

    #[test]
    fn cm_and_fia() {
        let (m, b) = overhead_cm(&p(Arrangement::D3Q19, 8, 4));
        assert!((m - 1.4737).abs() < 1e-4 && (b - 0.2368).abs() < 1e-4);
        let (m, b) = overhead_cm(&p(Arrangement::D2Q9, 8, 16));
        assert!((m - 1.4444).abs() < 1e-4 && (b - 0.2222).abs() < 1e-4);
        let mut no_idx = p(Arrangement::D2Q9, 8, 16);
        no_idx.s_idx_cm = 0;
        assert_eq!(overhead_cm(&no_idx).1, 0.0);

        let (m, b) = overhead_fia(&p(Arrangement::D3Q19, 8, 4), 0.9).unwrap();
        assert!((m - 1.029).abs() < 1e-3 && (b - 1.015).abs() < 1e-3);
        let sp = p(Arrangement::D2Q9, 4, 16);
        let (m, _) = overhead_fia(&sp, 0.1).unwrap();
        assert!((m - 1.0 - 4.0 / 3.6).abs() < 1e-12);
        let (_, b) = overhead_fia(&sp, 1.0).unwrap();
        assert_eq!(b, 4.0 / 72.0 + 1.0);
        assert!(overhead_fia(&sp, 0.0).is_err());
    }

    #[test]
    fn tile_bandwidth_at_full_porosity() {
        let (_, b, bt) = overhead_t2c(&p(Arrangement::D3Q19, 8, 4), &dense()).unwrap();
        assert!((b - 504.0 / 19456.0).abs() < 1e-15 && b == bt);
        let (_, b, _) = overhead_t2c(&p(Arrangement::D2Q9, 8, 16), &dense()).unwrap();
        assert!((b - 680.0 / 36864.0).abs() < 1e-15);
        let (_, b, _) = overhead_tgb(&p(Arrangement::D3Q19, 8, 4), &dense()).unwrap();
        assert!((b - 720.0 / 19456.0).abs() < 1e-15);
        let (_, b, _) = overhead_tgb(&p(Arrangement::D2Q9, 8, 16), &dense()).unwrap();
        assert!((b - 760.0 / 36864.0).abs() < 1e-15);
    }

    #[test]
    fn specialised_memory_constants() {
        // Constant parts of the memory overhead for common configurations.
        let s = |phi_t, alpha_m, ratio| GeometryStats::new(0.5, phi_t, alpha_m, None, ratio).unwrap();
        let d2 = p(Arrangement::D2Q9, 8, 16);
        let d3 = p(Arrangement::D3Q19, 8, 4);
        for (ratio, alpha) in [(1.0, 0.0), (4.0, 0.5), (8.6, 1.0)] {
            let (m, _, _) = overhead_t2c(&d2, &s(1.0, alpha, ratio)).unwrap();
            assert!((m + 1.0 - (2.028 + 0.00022 * ratio)).abs() < 1e-3);
            let (m, _, _) = overhead_t2c(&d3, &s(1.0, alpha, ratio)).unwrap();
            assert!((m + 1.0 - (2.013 + 0.00041 * ratio)).abs() < 1e-3);
            let (m, _, _) = overhead_tgb(&d2, &s(1.0, alpha, ratio)).unwrap();
            assert!((m + 1.0 - (1.034 + 0.167 * alpha)).abs() < 1e-3);
            let (m, _, _) = overhead_tgb(&d3, &s(1.0, alpha, ratio)).unwrap();
            assert!((m + 1.0 - (1.043 + 0.789 * alpha)).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_tile_porosity_is_rejected() {
        let s = GeometryStats::new(0.1, 0.0, 0.5, None, 2.0).unwrap();
        let d3 = p(Arrangement::D3Q19, 8, 4);
        assert!(overhead_t2c(&d3, &s).is_err());
        assert!(overhead_tgb(&d3, &s).is_err());
        assert!(overhead_tgb_components(&d3, &s).is_err());
    }

    #[test]
    fn invalid_inputs() {
        assert!(CostParams::new(Arrangement::D2Q9, 2, 16).is_err());
        assert!(CostParams::new(Arrangement::D2Q9, 8, 0).is_err());
        assert!(GeometryStats::new(1.2, 0.9, 0.9, None, 1.0).is_err());
        assert!(GeometryStats::new(0.5, 0.9, 0.9, None, 0.5).is_err());
        let d2 = p(Arrangement::D2Q9, 8, 16);
        assert!(bandwidth_utilization(100.0, &d2, 0.0).is_err());
        assert!(bytes_per_flop(&d2, 0.0).is_err());
        assert_eq!(bandwidth_utilization(0.0, &d2, 1e9).unwrap(), 0.0);
    }

    #[test]
    fn utilization_and_intensity() {
        let d3 = p(Arrangement::D3Q19, 8, 4);
        let d2 = p(Arrangement::D2Q9, 8, 16);
        assert!((bandwidth_utilization(682.0, &d3, 288.4e9).unwrap() - 0.719).abs() < 1e-3);
        assert!((bandwidth_utilization(1060.0, &d2, 288.4e9).unwrap() - 0.529).abs() < 1e-3);
        assert!((bytes_per_flop(&d2, 52.0).unwrap() - 2.77).abs() < 5e-3);
        assert!((bytes_per_flop(&d3, 304.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((bytes_per_flop(&d3, 1165.0).unwrap() - 0.26).abs() < 5e-3);
    }

    #[test]
    fn alpha_b_estimate_is_flagged() {
        let s = GeometryStats::new(0.5, 0.8, 0.9, None, 2.0).unwrap();
        let (b, est) = s.alpha_b_or_estimate();
        assert!(est && (b - 0.855).abs() < 1e-12);
        let r = OverheadReport::build(&p(Arrangement::D3Q19, 8, 4), &s, &Scheme::ALL).unwrap();
        assert!(r.alpha_b_estimated);
        assert!(r.to_kv().contains("alpha_b_estimated=true\n"));
    }

    #[test]
    fn report_renders() {
        let s = GeometryStats::new(0.9, 0.97, 0.97, Some(0.95), 1.2).unwrap();
        let r = OverheadReport::build(&p(Arrangement::D3Q19, 8, 4), &s, &Scheme::ALL).unwrap();
        let kv = r.to_kv();
        assert!(kv.contains("cm.delta_b=0.236842\n"));
        assert!(kv.contains("tgb.delta_b_bt="));
        assert!(!kv.contains("cm.delta_b_bt"));
        let text = r.to_string();
        assert_eq!(text.lines().count(), 6);
        assert!(text.lines().nth(4).unwrap().starts_with("cm"));
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("csr".parse::<Scheme>().is_err());
    }
}
