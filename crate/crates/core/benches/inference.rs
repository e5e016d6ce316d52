use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::hint::black_box;

use snn_soc::cli::{run_batch_data, BatchOptions, IdxImages};
use snn_soc::model::{serialize_model, WeightMode};
use snn_soc::parallel::Execution;
use snn_soc::synth::{random_frame, random_model, RandomModelSpec};
use snn_soc::{dense_infer, run_network, InferenceOptions, ZeroPixelPolicy};

fn dataset(n: usize) -> (Vec<u8>, IdxImages, Vec<u8>) {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let spec = RandomModelSpec::new(WeightMode::Binary, vec![784, 600, 10], 256);
    let model = random_model(&mut rng, &spec).unwrap();
    let frames = (0..n).map(|_| random_frame(&mut rng, 784, 0.8)).collect();
    let labels = (0..n).map(|_| rng.gen_range(0..10)).collect();
    (
        serialize_model(&model),
        IdxImages {
            rows: 28,
            cols: 28,
            frames,
        },
        labels,
    )
}

fn batch(c: &mut Criterion) {
    let (image, images, labels) = dataset(64);
    let mut group = c.benchmark_group("batch_784_600_10");
    group.sample_size(20);
    for (name, execution) in [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel),
    ] {
        let opts = BatchOptions {
            execution,
            ..BatchOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| run_batch_data(&image, &images, &labels, "bench", "bench", opts).unwrap())
        });
    }
    group.finish();
}

fn single(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut group = c.benchmark_group("single_inference");
    for mode in [WeightMode::Binary, WeightMode::Fixed16] {
        let spec = RandomModelSpec::new(mode, vec![784, 128, 10], 256);
        let model = random_model(&mut rng, &spec).unwrap();
        let frame = random_frame(&mut rng, 784, 0.8);
        let opts = InferenceOptions::default();
        group.bench_function(BenchmarkId::new("event_driven", format!("{mode:?}")), |b| {
            b.iter(|| run_network(black_box(&model), black_box(&frame), &opts).unwrap())
        });
        group.bench_function(BenchmarkId::new("dense", format!("{mode:?}")), |b| {
            b.iter(|| {
                dense_infer(
                    black_box(&model),
                    black_box(&frame),
                    ZeroPixelPolicy::NoSpike,
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, batch, single);
criterion_main!(benches);
