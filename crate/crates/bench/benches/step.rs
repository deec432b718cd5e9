use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use splbm_bench::{cavity, spheres};
use splbm_core::engine::{build_solver, EngineOptions, InitialState, Method};
use splbm_core::geometry::Geometry;
use splbm_core::lattice::{Arrangement, Compressibility, FluidModel};

const STEPS: u64 = 5;

fn bench_geometry(c: &mut Criterion, name: &str, g: &Geometry) {
    let desc = Arrangement::D3Q19.descriptor();
    let model = FluidModel::bgk(Compressibility::QuasiCompressible, 0.8).unwrap();
    let opts = EngineOptions::default();
    let mut group = c.benchmark_group(name);
    group.sample_size(10);
    // Elements are fluid node updates, so the reported rate is in LUPS.
    group.throughput(Throughput::Elements(g.n_fnodes() as u64 * STEPS));
    for m in Method::ALL {
        let mut solver = build_solver(m, g, desc, &model, &opts, &InitialState::default()).unwrap();
        group.bench_function(BenchmarkId::from_parameter(m), |b| {
            b.iter(|| solver.advance(STEPS).unwrap())
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    bench_geometry(c, "cavity_64", &cavity(64).unwrap());
    bench_geometry(c, "spheres_64_phi0.5", &spheres(64, 12.0, 0.5).unwrap());
}

criterion_group!(benches, step);
criterion_main!(benches);
