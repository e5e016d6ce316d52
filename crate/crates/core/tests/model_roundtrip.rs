use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use snn_soc::model::{deserialize_model, serialize_model, WeightMode};
use snn_soc::synth::{random_model, RandomModelSpec};
use snn_soc::Error;

fn spec_strategy() -> impl Strategy<Value = (RandomModelSpec, u64)> {
    (
        any::<bool>(),
        prop::collection::vec(1usize..=48, 2..=4),
        1u16..=256,
        any::<u64>(),
    )
        .prop_map(|(bin, dims, t_max, seed)| {
            let mode = if bin {
                WeightMode::Binary
            } else {
                WeightMode::Fixed16
            };
            (RandomModelSpec::new(mode, dims, t_max), seed)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn serialize_deserialize_serialize((spec, seed) in spec_strategy()) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &spec).unwrap();
        let bytes = serialize_model(&model);
        let back = deserialize_model(&bytes).unwrap();
        prop_assert_eq!(&back, &model);
        prop_assert_eq!(serialize_model(&back), bytes);
    }

    #[test]
    fn single_byte_corruption_never_panics((spec, seed) in spec_strategy(), at in any::<prop::sample::Index>(), flip in 1u8..=255) {
        let model = random_model(&mut ChaCha8Rng::seed_from_u64(seed), &spec).unwrap();
        let mut bytes = serialize_model(&model);
        let i = at.index(bytes.len());
        bytes[i] ^= flip;
        match deserialize_model(&bytes) {
            Ok(m) => prop_assert_eq!(serialize_model(&m), bytes),
            Err(e) if i < 4 => prop_assert_eq!(e, Error::NotAModelImage),
            Err(_) => {}
        }
    }
}
