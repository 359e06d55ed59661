use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ordinal_itr::evaluation::Criterion as Selection;
use ordinal_itr::simulation::generate_replicate;
use ordinal_itr::solver::solve_dual;
use ordinal_itr::{fit, tune, KernelKind, KernelSpec, Method, ScenarioId, SolverConfig, Strategy, TuningGrid};
use ordinal_itr_bench::{dataset, dual_inputs};

fn dual_solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve_dual");
    group.sample_size(10);
    for n in [50, 100, 200] {
        let data = dataset(ScenarioId::L3, n);
        for (name, spec) in [
            ("linear", KernelSpec::Linear),
            ("gaussian", KernelSpec::gaussian(1.0).unwrap()),
        ] {
            let (rows, gram) = dual_inputs(&data, spec);
            // λ = 100 / n, the middle of the standard grid
            let config = SolverConfig::with_c(n as f64 / 200.0);
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, _| {
                b.iter(|| solve_dual(&rows, &gram, &config).unwrap())
            });
        }
    }
    group.finish();
}

fn full_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("fit");
    group.sample_size(10);
    for id in [ScenarioId::L3, ScenarioId::L5] {
        let data = dataset(id, 100);
        group.bench_function(id.name(), |b| {
            b.iter(|| fit(&data, 1.0, KernelSpec::Linear, Strategy::Full).unwrap())
        });
    }
    group.finish();
}

fn tuning(c: &mut Criterion) {
    let sets = generate_replicate(ScenarioId::N2, 100, 7, 0).unwrap();
    let grid = TuningGrid {
        lambda_multipliers: vec![10.0, 100.0, 500.0],
        ..TuningGrid::standard(KernelKind::Gaussian)
    };
    let mut group = c.benchmark_group("tune");
    group.sample_size(10);
    group.bench_function("N2 gaussian 9 cells", |b| {
        b.iter(|| {
            tune(
                &sets.train.data,
                &sets.tune.data,
                Method::gowl(),
                &grid,
                Selection::Value,
                &SolverConfig::default(),
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, dual_solver, full_fit, tuning);
criterion_main!(benches);
