//! Output decoding: earliest spike wins, silent layers fall back to the
//! largest membrane potential. Ties go to the lowest index on both paths.

use crate::error::{Error, Result};
use crate::model::SpikeTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Decision {
    pub class: usize,
    /// `None` when the potential fallback decided.
    pub time: Option<SpikeTime>,
}

pub fn decode(fire_times: &[Option<SpikeTime>], potentials: &[i32]) -> Result<Decision> {
    if fire_times.is_empty() || fire_times.len() != potentials.len() {
        return Err(Error::DimensionMismatch {
            expected: fire_times.len().max(1),
            got: potentials.len(),
        });
    }
    let earliest = fire_times
        .iter()
        .enumerate()
        .filter_map(|(j, t)| t.map(|t| (t, j)))
        .min();
    if let Some((time, class)) = earliest {
        return Ok(Decision {
            class,
            time: Some(time),
        });
    }
    // max_by_key keeps the last maximum; reverse so the first one wins
    let class = potentials
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, v)| *v)
        .map(|(j, _)| j)
        .unwrap();
    Ok(Decision { class, time: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn earliest_spike() {
        let d = decode(&[Some(10), Some(3), Some(7)], &[0, 0, 0]).unwrap();
        assert_eq!(
            d,
            Decision {
                class: 1,
                time: Some(3)
            }
        );
    }

    #[test]
    fn fallback_argmax() {
        let d = decode(&[None, None, None], &[5, 9, 2]).unwrap();
        assert_eq!(
            d,
            Decision {
                class: 1,
                time: None
            }
        );
    }

    #[test]
    fn ties_go_low() {
        assert_eq!(
            decode(&[Some(4), Some(4)], &[0, 100]).unwrap(),
            Decision {
                class: 0,
                time: Some(4)
            }
        );
        assert_eq!(decode(&[None, None, None], &[3, 7, 7]).unwrap().class, 1);
        assert_eq!(decode(&[None; 4], &[0; 4]).unwrap().class, 0);
    }

    #[test]
    fn spike_beats_higher_potential() {
        let d = decode(&[None, Some(200)], &[1000, -5]).unwrap();
        assert_eq!(
            d,
            Decision {
                class: 1,
                time: Some(200)
            }
        );
    }

    #[test]
    fn empty_or_mismatched() {
        assert!(matches!(
            decode(&[], &[]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            decode(&[None], &[1, 2]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn fallback_is_shift_invariant(
            pots in proptest::collection::vec(-100_000i32..100_000, 1..50),
            shift in -100_000i32..100_000,
        ) {
            let silent = vec![None; pots.len()];
            let shifted: Vec<i32> = pots.iter().map(|v| v + shift).collect();
            let a = decode(&silent, &pots).unwrap();
            let b = decode(&silent, &shifted).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.class < pots.len());
            prop_assert_eq!(a.time, None);
        }

        #[test]
        fn fallback_iff_silent(
            times in proptest::collection::vec(proptest::option::of(0u8..=255), 1..50),
        ) {
            let pots = vec![0; times.len()];
            let d = decode(&times, &pots).unwrap();
            prop_assert_eq!(d.time.is_none(), times.iter().all(Option::is_none));
            prop_assert!(d.class < times.len());
        }
    }
}
