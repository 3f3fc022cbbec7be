use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use stabverify::analytics::{oracle, ClassCounts};
use stabverify::graphs::GraphSpec;
use stabverify::pauli::BlockClass;
use stabverify::protocol::{estimate_with, AdversaryModel, Execution};
use stabverify::reduction::Reduction;

const TRIALS: u64 = 20_000;

fn trial_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("estimate");
    group.throughput(Throughput::Elements(TRIALS));
    group.sample_size(20);
    let cases = [
        ("grid:3x3", 2usize, AdversaryModel::Honest),
        (
            "grid:5x5",
            5,
            AdversaryModel::SingleBadCopy {
                class: BlockClass::BOTH,
            },
        ),
        (
            "rhg:2x2x2",
            5,
            AdversaryModel::IidPauli {
                p_x: 0.01,
                p_z: 0.01,
            },
        ),
    ];
    for (spec, k, model) in cases {
        let g = spec.parse::<GraphSpec>().unwrap().build().unwrap();
        let label = format!("{spec}/k{k}/{}", model.label());
        for (name, exec) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, &label), &exec, |bench, &exec| {
                bench.iter(|| estimate_with(black_box(&g), k, &model, TRIALS, 1, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn reduction(c: &mut Criterion) {
    let g = "rhg:3x3x3".parse::<GraphSpec>().unwrap().build().unwrap();
    c.bench_function("reduction/rhg:3x3x3", |b| {
        b.iter(|| Reduction::compute(black_box(&g)).unwrap())
    });
}

fn enumeration(c: &mut Criterion) {
    let cc = ClassCounts::new(2, 2, 1, 4).unwrap();
    c.bench_function("oracle/(2,2,1,4)", |b| {
        b.iter(|| oracle(black_box(&cc)).unwrap())
    });
}

criterion_group!(benches, trial_loop, reduction, enumeration);
criterion_main!(benches);
