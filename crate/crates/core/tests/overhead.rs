use proptest::prelude::*;
use splbm_core::lattice::Arrangement;
use splbm_core::overhead::*;

/// (name, lattice, phi, phi_t, alpha_m) of published test geometries.
const CASES: [(&str, Arrangement, f64, f64, f64); 11] = [
    ("RAS_0.9", Arrangement::D3Q19, 0.90, 0.97, 0.97),
    ("RAS_0.8", Arrangement::D3Q19, 0.80, 0.94, 0.96),
    ("RAS_0.7", Arrangement::D3Q19, 0.70, 0.90, 0.94),
    ("Aneurysm", Arrangement::D3Q19, 0.18, 0.93, 0.97),
    ("Coarctation", Arrangement::D3Q19, 0.09, 0.81, 0.91),
    ("ChipA_08", Arrangement::D2Q9, 0.21, 0.58, 0.80),
    ("ChipB_08", Arrangement::D2Q9, 0.20, 0.60, 0.82),
    ("ChipA_16", Arrangement::D2Q9, 0.20, 0.71, 0.86),
    ("ChipB_16", Arrangement::D2Q9, 0.20, 0.74, 0.87),
    ("ChipA_32", Arrangement::D2Q9, 0.20, 0.83, 0.91),
    ("ChipB_32", Arrangement::D2Q9, 0.20, 0.84, 0.92),
];

fn params(arr: Arrangement) -> CostParams {
    let a = if arr == Arrangement::D2Q9 { 16 } else { 4 };
    CostParams::new(arr, 8, a).unwrap()
}

fn arrangement() -> impl Strategy<Value = Arrangement> {
    prop_oneof![
        Just(Arrangement::D2Q9),
        Just(Arrangement::D3Q19),
        Just(Arrangement::D3Q27)
    ]
}

#[test]
fn halo_type_traffic_matches_hand_count() {
    // 18^2 halo nodes at two bytes over 256 nodes at 144 bytes.
    let p = params(Arrangement::D2Q9);
    let s = GeometryStats::new(1.0, 1.0, 1.0, None, 1.0).unwrap();
    let b = overhead_t2c_components(&p, &s).unwrap();
    let hand = (18.0f64 * 18.0 * 2.0) / (256.0 * 144.0);
    assert!((b.bandwidth.node_type - hand).abs() < 1e-15);
    assert!((hand - 0.0176).abs() < 1e-4);
    assert!((b.bandwidth.total() - 0.0184).abs() < 1e-4);
}

#[test]
fn published_rows_spot_checks() {
    let d3 = params(Arrangement::D3Q19);
    let s = GeometryStats::new(0.09, 0.81, 0.91, None, 3.0).unwrap();
    let (_, b, _) = overhead_tgb(&d3, &s).unwrap();
    assert!((b - 720.0 / (19456.0 * 0.81)).abs() < 1e-12);
    let (m, _, _) = overhead_t2c(&d3, &s).unwrap();
    assert!((m - 1.49).abs() < 0.01, "{m}");

    let d2 = params(Arrangement::D2Q9);
    let s = GeometryStats::new(0.2, 0.84, 0.92, None, 3.0).unwrap();
    let (m, _, _) = overhead_tgb(&d2, &s).unwrap();
    assert!((m - 0.414).abs() < 1e-3, "{m}");
}

#[test]
fn scheme_ordering_for_published_rows() {
    for (name, arr, phi, phi_t, alpha_m) in CASES {
        let s = GeometryStats::new(phi, phi_t, alpha_m, None, 4.0).unwrap();
        let r = OverheadReport::build(&params(arr), &s, &Scheme::ALL).unwrap();
        let b = |sc| r.get(sc).unwrap().delta_b();
        let (t2c, tgb, cm, fia) = (b(Scheme::T2c), b(Scheme::Tgb), b(Scheme::Cm), b(Scheme::Fia));
        assert!(t2c < tgb && tgb < cm && cm < fia, "{name}: {t2c} {tgb} {cm} {fia}");
    }
}

/// Tile porosity where the ghost buffer scheme starts to need less memory
/// than the connectivity matrix, found by bisection.
fn memory_crossover(arr: Arrangement, alpha_m: f64) -> f64 {
    let p = params(arr);
    let cm = overhead_cm(&p).0;
    let excess = |phi_t: f64| {
        let s = GeometryStats::new(0.5, phi_t, alpha_m, None, 4.0).unwrap();
        overhead_tgb(&p, &s).unwrap().0 - cm
    };
    let (mut lo, mut hi) = (0.05, 1.0);
    assert!(excess(lo) > 0.0 && excess(hi) < 0.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[test]
fn memory_crossovers_against_connectivity_matrix() {
    for alpha in [0.8, 0.9] {
        let x2 = memory_crossover(Arrangement::D2Q9, alpha);
        let x3 = memory_crossover(Arrangement::D3Q19, alpha);
        assert!((x2 - 0.5).abs() < 0.05, "2D crossover {x2}");
        assert!((x3 - 0.7).abs() < 0.05, "3D crossover {x3}");
    }
}

proptest! {
    #[test]
    fn tile_bandwidth_falls_with_tile_porosity(
        arr in arrangement(),
        a in 2usize..20,
        lo in 0.05f64..0.95,
        step in 0.001f64..0.5,
        alpha in 0.0f64..1.0,
    ) {
        let hi = (lo + step).min(1.0);
        let p = CostParams::new(arr, 8, a).unwrap();
        let s = |phi_t| GeometryStats::new(0.5, phi_t, alpha, None, 2.0).unwrap();
        let (_, t_lo, _) = overhead_t2c(&p, &s(lo)).unwrap();
        let (_, t_hi, _) = overhead_t2c(&p, &s(hi)).unwrap();
        let (_, g_lo, _) = overhead_tgb(&p, &s(lo)).unwrap();
        let (_, g_hi, _) = overhead_tgb(&p, &s(hi)).unwrap();
        prop_assert!(t_hi < t_lo && g_hi < g_lo);
        prop_assert!(1.0 / (1.0 + t_hi) > 1.0 / (1.0 + t_lo));
        prop_assert!(1.0 / (1.0 + g_hi) > 1.0 / (1.0 + g_lo));
    }

    #[test]
    fn totals_equal_component_sums(
        arr in arrangement(),
        s_d in prop_oneof![Just(4usize), Just(8usize)],
        a in 1usize..24,
        phi in 0.01f64..1.0,
        phi_t in 0.01f64..1.0,
        alpha_m in 0.0f64..1.0,
        alpha_b in proptest::option::of(0.0f64..1.0),
        ratio in 1.0f64..10.0,
    ) {
        let p = CostParams::new(arr, s_d, a).unwrap();
        let s = GeometryStats::new(phi, phi_t, alpha_m, alpha_b, ratio).unwrap();
        let r = OverheadReport::build(&p, &s, &Scheme::ALL).unwrap();
        let t2c = overhead_t2c(&p, &s).unwrap();
        let tgb = overhead_tgb(&p, &s).unwrap();
        let cm = overhead_cm(&p);
        let fia = overhead_fia(&p, phi).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(1.0);
        for (sc, (m, b, bt)) in [
            (Scheme::T2c, t2c),
            (Scheme::Tgb, tgb),
            (Scheme::Cm, (cm.0, cm.1, f64::NAN)),
            (Scheme::Fia, (fia.0, fia.1, f64::NAN)),
        ] {
            let e = r.get(sc).unwrap();
            prop_assert!(close(e.delta_m(), m), "{sc} memory {} vs {m}", e.delta_m());
            prop_assert!(close(e.delta_b(), b), "{sc} bandwidth {} vs {b}", e.delta_b());
            if let Some(got) = e.bandwidth_burst {
                prop_assert!(close(got, bt));
                prop_assert!(got >= e.delta_b());
            }
            for c in [e.memory, e.bandwidth] {
                prop_assert!(c.solid >= 0.0 && c.node_type >= 0.0 && c.race >= 0.0 && c.addressing >= 0.0);
            }
        }
        prop_assert!(t2c.2 >= t2c.1 && tgb.2 >= tgb.1);
    }
}
