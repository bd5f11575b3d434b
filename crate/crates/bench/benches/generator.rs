use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lqed::integrator::{Propagator, SimulationConfig};
use lqed::{apply_liouvillian, rk4_step, CompiledLiouvillian, Complex64, FieldSpec, Sector};
use lqed_bench::coherent_start;

fn dense_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("apply_liouvillian");
    for mean in [2.0, 5.0, 10.0] {
        let rho = coherent_start(mean);
        group.bench_with_input(BenchmarkId::from_parameter(rho.dim()), &rho, |b, rho| {
            b.iter(|| apply_liouvillian(rho, 0.3))
        });
    }
    group.finish();
}

fn compiled_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("compiled_apply");
    let rho = coherent_start(10.0);
    for sector in [Sector::Full, Sector::ExcitationDiagonal] {
        let gen = CompiledLiouvillian::new(rho.dims(), 0.3, sector);
        let state = gen.gather(&rho);
        let mut out = vec![Complex64::new(0.0, 0.0); gen.len()];
        group.bench_function(format!("{sector:?}/{}", gen.len()), |b| {
            b.iter(|| gen.apply(&state, &mut out))
        });
    }
    group.finish();
}

fn stepping(c: &mut Criterion) {
    let mut group = c.benchmark_group("rk4");
    let rho = coherent_start(5.0);
    group.bench_function("dense_step", |b| b.iter(|| rk4_step(&rho, 0.005, 0.3).unwrap()));
    let cfg = SimulationConfig::new(FieldSpec::coherent(Complex64::new(10f64.sqrt(), 0.0)), FieldSpec::vacuum(), 0.3);
    let resolved = cfg.resolve().unwrap();
    let mut prop = Propagator::new(&resolved);
    group.bench_function("block_step_coherent10", |b| b.iter(|| prop.step().unwrap()));
    group.finish();
}

criterion_group!(benches, dense_apply, compiled_apply, stepping);
criterion_main!(benches);
