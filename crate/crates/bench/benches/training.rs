use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use tmdc_bench::{conv_model, flat_model, random_dataset};
use tmdc_core::tm::fit;
use tmdc_core::{FitOptions, Hyperparams, MaskPolicy, TrainRngs};

fn params(clauses: usize, threshold: u32) -> Hyperparams {
    Hyperparams {
        clauses,
        threshold,
        specificity: 3.9,
        epochs: 1,
        ..Hyperparams::default()
    }
}

fn inference(c: &mut Criterion) {
    let data = random_dataset(256, 784, 10, 1);
    let mut model = flat_model(784, 10, params(200, 25));
    model.fit(&data, None).unwrap();
    let encoded = model.encode_dataset(&data).unwrap();
    c.bench_function("predict/flat 784x200x10", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % encoded.inputs.len();
            black_box(model.predict(&encoded.inputs[i]))
        })
    });

    let images = random_dataset(64, 28 * 28, 10, 2);
    let mut conv = conv_model(28, 10, 10, params(100, 25));
    conv.fit(&images, None).unwrap();
    let encoded = conv.encode_dataset(&images).unwrap();
    c.bench_function("predict/conv 28x28 w10 100x10", |b| {
        let mut i = 0;
        b.iter(|| {
            i = (i + 1) % encoded.inputs.len();
            black_box(conv.predict(&encoded.inputs[i]))
        })
    });
}

fn epoch(c: &mut Criterion) {
    let data = random_dataset(500, 500, 2, 3);
    let base = flat_model(500, 2, params(2000, 1000));
    let encoded = base.encode_dataset(&data).unwrap();
    let mut group = c.benchmark_group("epoch/flat 500x500 n=2000");
    group.sample_size(10);
    for (name, masks) in [
        ("no masks", MaskPolicy::Never),
        ("p=0.25", MaskPolicy::DropClause(0.25)),
        ("p=0.5", MaskPolicy::DropClause(0.5)),
        ("p=0.75", MaskPolicy::DropClause(0.75)),
    ] {
        let options = FitOptions { epochs: 1, masks };
        group.bench_function(name, |b| {
            b.iter_batched(
                || (base.clone(), TrainRngs::from_seed(7)),
                |(mut model, mut rngs)| fit(&mut model, &encoded, None, &options, &mut rngs).unwrap(),
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, inference, epoch);
criterion_main!(benches);
