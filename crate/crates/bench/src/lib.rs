//! Synthetic workloads shared by the benchmarks in `benches/`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmdc_core::conv::PatchGeometry;
use tmdc_core::{BooleanSample, Dataset, Hyperparams, InputShape, MulticlassModel};

/// Uniform random bits with labels from a planted rule: the class is the
/// number of set bits among the first three features, modulo `classes`.
pub fn random_dataset(samples: usize, features: usize, classes: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(samples);
    let mut ys = Vec::with_capacity(samples);
    for _ in 0..samples {
        let bytes: Vec<u8> = (0..features).map(|_| rng.random_range(0..2)).collect();
        ys.push(bytes.iter().take(3).map(|&b| b as usize).sum::<usize>() % classes);
        xs.push(BooleanSample::from_bytes(&bytes));
    }
    Dataset::new(xs, ys, Dataset::numeric_classes(classes)).expect("consistent dataset")
}

pub fn flat_model(features: usize, classes: usize, params: Hyperparams) -> MulticlassModel {
    MulticlassModel::new(
        params,
        InputShape::Flat { features },
        Dataset::numeric_classes(classes),
        false,
    )
    .expect("valid parameters")
}

/// A square single-channel convolutional model.
pub fn conv_model(side: usize, window: usize, classes: usize, params: Hyperparams) -> MulticlassModel {
    MulticlassModel::new(
        params,
        InputShape::Conv(PatchGeometry::new(side, side, 1, window)),
        Dataset::numeric_classes(classes),
        false,
    )
    .expect("valid parameters")
}
