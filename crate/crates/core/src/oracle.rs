//! Dense reference simulator.
//!
//! Sweeps every timestep of the window and, for every layer, forms the full
//! matrix-vector product of the unpacked weights with that timestep's 0/1
//! spike vector. No sorting, no event skipping, no early stop. It shares
//! only the conventions with the event-driven engine: input encoding,
//! `>=` against the folded threshold, ascending scan, and decoding.
//!
//! Cost is `O(t_max * sum(in_dim * out_dim))`, fine at desk scale only.

use std::fmt;

use crate::decoder::{decode, Decision};
use crate::encoder::{InputFrame, TtfsEncoder, ZeroPixelPolicy};
use crate::engine::{InferenceResult, LayerResult};
use crate::error::{Error, Result};
use crate::model::{unpack_binary_row, NetworkModel, SpikeTime, SpikeTrain, WeightMatrix};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DenseResult {
    pub decision: Decision,
    pub input: SpikeTrain,
    pub layers: Vec<LayerResult>,
}

fn dense_weights(weights: &WeightMatrix) -> Result<Vec<Vec<i64>>> {
    (0..weights.out_dim())
        .map(|j| match weights {
            WeightMatrix::Binary { in_dim, .. } => {
                Ok(unpack_binary_row(weights.binary_row(j).unwrap(), *in_dim)?
                    .into_iter()
                    .map(i64::from)
                    .collect())
            }
            WeightMatrix::Fixed16 { .. } => Ok(weights
                .fixed16_row(j)
                .unwrap()
                .iter()
                .map(|&w| w as i64)
                .collect()),
        })
        .collect()
}

pub fn dense_infer(
    model: &NetworkModel,
    frame: &InputFrame,
    zero_pixel: ZeroPixelPolicy,
) -> Result<DenseResult> {
    let t_max = model.t_max();
    let input = TtfsEncoder::new(model.input_dim(), t_max, zero_pixel)?.encode(frame)?;

    let matrices = model
        .layers()
        .iter()
        .map(|l| dense_weights(&l.weights))
        .collect::<Result<Vec<_>>>()?;
    let thresholds: Vec<i64> = model
        .layers()
        .iter()
        .map(|l| l.config.effective_threshold(model.mode()))
        .collect();
    let mut potentials: Vec<Vec<i64>> = model
        .layers()
        .iter()
        .map(|l| vec![0; l.config.out_dim])
        .collect();
    let mut fire_times: Vec<Vec<Option<SpikeTime>>> = model
        .layers()
        .iter()
        .map(|l| vec![None; l.config.out_dim])
        .collect();

    for t in 0..t_max {
        let now = t as SpikeTime;
        let mut spikes: Vec<i64> = input
            .times()
            .iter()
            .map(|&s| (s == Some(now)) as i64)
            .collect();
        for (k, w) in matrices.iter().enumerate() {
            // a layer with no input this step is not evaluated
            if spikes.iter().any(|&s| s != 0) {
                for (j, row) in w.iter().enumerate() {
                    if fire_times[k][j].is_some() {
                        continue;
                    }
                    let current: i64 = row.iter().zip(&spikes).map(|(w, s)| w * s).sum();
                    let v = potentials[k][j] + current;
                    if i32::try_from(v).is_err() {
                        return Err(Error::AccumulatorOverflow { neuron: j });
                    }
                    potentials[k][j] = v;
                }
                for j in 0..w.len() {
                    if fire_times[k][j].is_none() && potentials[k][j] >= thresholds[k] {
                        fire_times[k][j] = Some(now);
                    }
                }
            }
            spikes = fire_times[k]
                .iter()
                .map(|&f| (f == Some(now)) as i64)
                .collect();
        }
    }

    let layers = fire_times
        .into_iter()
        .zip(potentials)
        .map(|(times, pots)| {
            Ok(LayerResult {
                fire_times: SpikeTrain::new(t_max, times)?,
                potentials: pots.into_iter().map(|v| v as i32).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let out = layers.last().unwrap();
    let decision = decode(out.fire_times.times(), &out.potentials)?;
    Ok(DenseResult {
        decision,
        input,
        layers,
    })
}

/// First disagreement found between the engine and the dense reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence(pub String);

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Divergence {}

/// Checks an engine result against the dense reference.
///
/// Everything must match exactly, except that an early-stopped output
/// layer is only compared up to its truncation time: neurons the reference
/// fires later must be silent in the engine, and potentials are skipped.
pub fn check_agreement(
    engine: &InferenceResult,
    dense: &DenseResult,
) -> std::result::Result<(), Divergence> {
    if engine.decision != dense.decision {
        return Err(Divergence(format!(
            "decision {:?} vs reference {:?}",
            engine.decision, dense.decision
        )));
    }
    if engine.input != dense.input {
        return Err(Divergence("encoded input differs".into()));
    }
    if engine.layers.len() != dense.layers.len() {
        return Err(Divergence("layer count differs".into()));
    }
    let last = engine.layers.len() - 1;
    for (k, (e, d)) in engine.layers.iter().zip(&dense.layers).enumerate() {
        match (k == last, engine.early_stop_at) {
            (true, Some(cut)) => {
                for (j, (&et, &dt)) in e
                    .fire_times
                    .times()
                    .iter()
                    .zip(d.fire_times.times())
                    .enumerate()
                {
                    let expected = dt.filter(|&t| t <= cut);
                    if et != expected {
                        return Err(Divergence(format!(
                            "output neuron {j} fired at {et:?}, reference {dt:?} (cut at {cut})"
                        )));
                    }
                }
            }
            _ => {
                if e.fire_times != d.fire_times {
                    return Err(Divergence(format!("layer {k} fire times differ")));
                }
                if e.potentials != d.potentials {
                    return Err(Divergence(format!("layer {k} potentials differ")));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_network, InferenceOptions};
    use crate::model::{Alpha, Layer, LayerConfig, WeightMode};

    fn single_layer(rows: &[Vec<i8>], threshold: i32) -> NetworkModel {
        let weights = WeightMatrix::binary_from_rows(rows).unwrap();
        let layer = Layer {
            config: LayerConfig::new(weights.in_dim(), weights.out_dim(), Alpha::ONE, threshold),
            weights,
        };
        NetworkModel::new(WeightMode::Binary, 256, vec![layer]).unwrap()
    }

    #[test]
    fn all_zero_frame() {
        let m = single_layer(&vec![vec![1; 8]; 3], 2);
        let d = dense_infer(&m, &InputFrame::new(vec![0; 8]), ZeroPixelPolicy::NoSpike).unwrap();
        assert_eq!(
            d.decision,
            Decision {
                class: 0,
                time: None
            }
        );
    }

    #[test]
    fn negative_threshold_fires_all_at_first_event() {
        let m = single_layer(&[vec![-1, -1, 1], vec![1, -1, -1], vec![-1, 1, -1]], -1);
        let frame = InputFrame::new(vec![0, 100, 10]);
        let d = dense_infer(&m, &frame, ZeroPixelPolicy::NoSpike).unwrap();
        // pixel 100 spikes first at t = 155
        assert_eq!(
            d.layers[0].fire_times.times(),
            &[Some(155), Some(155), Some(155)]
        );
        assert_eq!(
            d.decision,
            Decision {
                class: 0,
                time: Some(155)
            }
        );
    }

    #[test]
    fn agrees_with_engine_on_small_case() {
        let m = single_layer(&[vec![1, 1, -1, 1], vec![1, -1, 1, 1]], 2);
        let frame = InputFrame::new(vec![200, 0, 90, 150]);
        let d = dense_infer(&m, &frame, ZeroPixelPolicy::NoSpike).unwrap();
        let e = run_network(&m, &frame, &InferenceOptions::default()).unwrap();
        check_agreement(&e, &d).unwrap();
    }

    #[test]
    fn reports_divergence() {
        let m = single_layer(&[vec![1, 1]], 2);
        let frame = InputFrame::new(vec![200, 100]);
        let d = dense_infer(&m, &frame, ZeroPixelPolicy::NoSpike).unwrap();
        let mut e = run_network(&m, &frame, &InferenceOptions::default()).unwrap();
        e.layers[0].potentials[0] += 1;
        e.early_stop_at = None;
        assert!(check_agreement(&e, &d).is_err());
    }
}
