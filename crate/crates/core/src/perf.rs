//! Cycle-cost and memory-footprint model.
//!
//! Stages run sequentially per layer. The cost table is configurable;
//! the defaults charge one cycle per pixel, per sorted event, per
//! neuron visited by the time-multiplexed scan and per decoded neuron,
//! plus one cycle per counting-sort bucket.

use serde::Serialize;

use crate::model::{words_per_row, NetworkModel, WeightMode};

/// Clock used for ms/fps display when none is given.
pub const DEFAULT_CLOCK_MHZ: f64 = 163.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CycleCostTable {
    pub encode_per_pixel: u64,
    /// Charged once per bucket; the bucket count is `t_max`.
    pub sort_per_bucket: u64,
    pub sort_per_event: u64,
    pub scc_per_event_per_neuron: u64,
    pub decode_per_neuron: u64,
}

impl Default for CycleCostTable {
    fn default() -> Self {
        CycleCostTable {
            encode_per_pixel: 1,
            sort_per_bucket: 1,
            sort_per_event: 1,
            scc_per_event_per_neuron: 1,
            decode_per_neuron: 1,
        }
    }
}

/// Event tallies of one layer, as seen by the datapath.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LayerTrace {
    pub in_dim: usize,
    pub out_dim: usize,
    /// Active events handed to the sorter.
    pub events_sorted: usize,
    /// Events that reached the SCC.
    pub events_processed: usize,
    /// Events dropped after the layer saturated or the decision was fixed.
    pub events_skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct InferenceTrace {
    pub t_max: u16,
    pub input_pixels: usize,
    pub layers: Vec<LayerTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct LayerCycles {
    pub sort: u64,
    pub neuron: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct CycleReport {
    pub encode_cycles: u64,
    pub sort_cycles: u64,
    pub neuron_cycles: u64,
    pub decode_cycles: u64,
    pub total_cycles: u64,
    pub layers: Vec<LayerCycles>,
}

impl CycleReport {
    /// Adds another report stage by stage (batch aggregation).
    pub fn accumulate(&mut self, other: &CycleReport) {
        self.encode_cycles += other.encode_cycles;
        self.sort_cycles += other.sort_cycles;
        self.neuron_cycles += other.neuron_cycles;
        self.decode_cycles += other.decode_cycles;
        self.total_cycles += other.total_cycles;
        if self.layers.len() < other.layers.len() {
            self.layers
                .resize(other.layers.len(), LayerCycles::default());
        }
        for (mine, theirs) in self.layers.iter_mut().zip(&other.layers) {
            mine.sort += theirs.sort;
            mine.neuron += theirs.neuron;
        }
    }

    pub fn stages(&self) -> [(&'static str, u64); 4] {
        [
            ("encode", self.encode_cycles),
            ("sort", self.sort_cycles),
            ("neuron", self.neuron_cycles),
            ("decode", self.decode_cycles),
        ]
    }

    /// `stage,cycles,fraction` rows for external plotting.
    pub fn breakdown_csv(&self) -> String {
        let mut out = String::from("stage,cycles,fraction\n");
        for (stage, cycles) in self.stages() {
            let fraction = if self.total_cycles == 0 {
                0.0
            } else {
                cycles as f64 / self.total_cycles as f64
            };
            out.push_str(&format!("{stage},{cycles},{fraction:.6}\n"));
        }
        out
    }
}

pub fn estimate_cycles(trace: &InferenceTrace, costs: &CycleCostTable) -> CycleReport {
    let encode_cycles = trace.input_pixels as u64 * costs.encode_per_pixel;
    let layers: Vec<LayerCycles> = trace
        .layers
        .iter()
        .map(|l| LayerCycles {
            sort: trace.t_max as u64 * costs.sort_per_bucket
                + l.events_sorted as u64 * costs.sort_per_event,
            neuron: l.events_processed as u64 * l.out_dim as u64 * costs.scc_per_event_per_neuron,
        })
        .collect();
    let sort_cycles = layers.iter().map(|l| l.sort).sum();
    let neuron_cycles = layers.iter().map(|l| l.neuron).sum();
    let decode_cycles =
        trace.layers.last().map_or(0, |l| l.out_dim as u64) * costs.decode_per_neuron;
    CycleReport {
        encode_cycles,
        sort_cycles,
        neuron_cycles,
        decode_cycles,
        total_cycles: encode_cycles + sort_cycles + neuron_cycles + decode_cycles,
        layers,
    }
}

pub fn cycles_to_ms(cycles: u64, clock_mhz: f64) -> f64 {
    cycles as f64 / (clock_mhz * 1e3)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LayerMemory {
    /// Weight bytes in the model's own mode.
    pub weight_bytes: usize,
    /// Input spike memory of the layer, one byte per presynaptic neuron.
    pub spike_bytes: usize,
    pub total_bytes: usize,
    pub binary_weight_bytes: usize,
    pub fixed16_weight_bytes: usize,
}

impl LayerMemory {
    pub fn fixed_to_binary_ratio(&self) -> f64 {
        self.fixed16_weight_bytes as f64 / self.binary_weight_bytes as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MemoryReport {
    pub layers: Vec<LayerMemory>,
    pub weight_bytes: usize,
    /// Every layer's input spike memory plus the output spike memory.
    pub spike_bytes: usize,
    pub total_bytes: usize,
    pub binary_weight_bytes: usize,
    pub fixed16_weight_bytes: usize,
}

impl MemoryReport {
    pub fn fixed_to_binary_ratio(&self) -> f64 {
        self.fixed16_weight_bytes as f64 / self.binary_weight_bytes as f64
    }
}

pub fn memory_footprint(model: &NetworkModel) -> MemoryReport {
    let layers: Vec<LayerMemory> = model
        .layers()
        .iter()
        .map(|l| {
            let (i, o) = (l.config.in_dim, l.config.out_dim);
            let binary = o * words_per_row(i) * 2;
            let fixed = o * i * 2;
            let weight_bytes = match model.mode() {
                WeightMode::Binary => binary,
                WeightMode::Fixed16 => fixed,
            };
            debug_assert_eq!(weight_bytes, l.weights.byte_len());
            LayerMemory {
                weight_bytes,
                spike_bytes: i,
                total_bytes: weight_bytes + i,
                binary_weight_bytes: binary,
                fixed16_weight_bytes: fixed,
            }
        })
        .collect();
    let weight_bytes = layers.iter().map(|l| l.weight_bytes).sum();
    let spike_bytes = layers.iter().map(|l| l.spike_bytes).sum::<usize>() + model.num_classes();
    MemoryReport {
        weight_bytes,
        spike_bytes,
        total_bytes: weight_bytes + spike_bytes,
        binary_weight_bytes: layers.iter().map(|l| l.binary_weight_bytes).sum(),
        fixed16_weight_bytes: layers.iter().map(|l| l.fixed16_weight_bytes).sum(),
        layers,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Alpha, Layer, LayerConfig, WeightMatrix};

    fn trace(t_max: u16, pixels: usize, layers: &[(usize, usize, usize, usize)]) -> InferenceTrace {
        InferenceTrace {
            t_max,
            input_pixels: pixels,
            layers: layers
                .iter()
                .map(|&(in_dim, out_dim, sorted, processed)| LayerTrace {
                    in_dim,
                    out_dim,
                    events_sorted: sorted,
                    events_processed: processed,
                    events_skipped: sorted - processed,
                })
                .collect(),
        }
    }

    #[test]
    fn mnist_scale_hand_sum() {
        // 784 + (256+600) + (256+40) + 600*600 + 40*10 + 10
        let t = trace(256, 784, &[(784, 600, 600, 600), (600, 10, 40, 40)]);
        let r = estimate_cycles(&t, &CycleCostTable::default());
        assert_eq!(r.encode_cycles, 784);
        assert_eq!(r.sort_cycles, 856 + 296);
        assert_eq!(r.neuron_cycles, 360_000 + 400);
        assert_eq!(r.decode_cycles, 10);
        assert_eq!(r.total_cycles, 362_346);
    }

    #[test]
    fn zero_events() {
        let t = trace(64, 100, &[(100, 20, 0, 0), (20, 5, 0, 0)]);
        let r = estimate_cycles(&t, &CycleCostTable::default());
        assert_eq!(r.encode_cycles, 100);
        assert_eq!(r.sort_cycles, 128);
        assert_eq!(r.neuron_cycles, 0);
        assert_eq!(r.decode_cycles, 5);
        assert_eq!(r.total_cycles, 233);
    }

    #[test]
    fn doubling_events_never_lowers_a_stage() {
        let costs = CycleCostTable {
            encode_per_pixel: 2,
            sort_per_bucket: 1,
            sort_per_event: 3,
            scc_per_event_per_neuron: 1,
            decode_per_neuron: 4,
        };
        let a = estimate_cycles(&trace(256, 50, &[(50, 30, 20, 15), (30, 4, 9, 7)]), &costs);
        let b = estimate_cycles(
            &trace(256, 50, &[(50, 30, 40, 30), (30, 4, 18, 14)]),
            &costs,
        );
        for ((_, x), (_, y)) in a.stages().iter().zip(b.stages().iter()) {
            assert!(x <= y);
        }
        assert!(a.total_cycles <= b.total_cycles);
    }

    #[test]
    fn csv_rows() {
        let t = trace(16, 4, &[(4, 2, 2, 2)]);
        let r = estimate_cycles(&t, &CycleCostTable::default());
        // 4 + 18 + 4 + 2 = 28
        assert_eq!(
            r.breakdown_csv(),
            "stage,cycles,fraction\nencode,4,0.142857\nsort,18,0.642857\nneuron,4,0.142857\ndecode,2,0.071429\n"
        );
    }

    #[test]
    fn accumulate_sums_stages() {
        let t = trace(16, 4, &[(4, 2, 2, 2)]);
        let r = estimate_cycles(&t, &CycleCostTable::default());
        let mut acc = CycleReport::default();
        acc.accumulate(&r);
        acc.accumulate(&r);
        assert_eq!(acc.total_cycles, 2 * r.total_cycles);
        assert_eq!(acc.layers[0].sort, 2 * r.layers[0].sort);
    }

    fn topology(mode: WeightMode, dims: &[usize]) -> NetworkModel {
        let layers = dims
            .windows(2)
            .map(|d| {
                let weights = match mode {
                    WeightMode::Binary => {
                        WeightMatrix::binary_from_rows(&vec![vec![1i8; d[0]]; d[1]])
                    }
                    WeightMode::Fixed16 => {
                        WeightMatrix::fixed16_from_rows(&vec![vec![0i16; d[0]]; d[1]])
                    }
                }
                .unwrap();
                Layer {
                    config: LayerConfig::new(d[0], d[1], Alpha::ONE, 1),
                    weights,
                }
            })
            .collect();
        NetworkModel::new(mode, 256, layers).unwrap()
    }

    #[test]
    fn footprint_128_10() {
        let b = memory_footprint(&topology(WeightMode::Binary, &[784, 128, 10]));
        assert_eq!(b.layers[0].weight_bytes, 12_544);
        assert_eq!(b.layers[1].weight_bytes, 160);
        assert_eq!(b.weight_bytes, 12_704);
        assert_eq!(b.spike_bytes, 784 + 128 + 10);

        let f = memory_footprint(&topology(WeightMode::Fixed16, &[784, 128, 10]));
        assert_eq!(f.weight_bytes, 203_264);
        assert_eq!(
            f.layers[0].weight_bytes as f64 / b.layers[0].weight_bytes as f64,
            16.0
        );
        assert_eq!(b.layers[0].fixed_to_binary_ratio(), 16.0);
    }

    #[test]
    fn footprint_single_synapse() {
        let r = memory_footprint(&topology(WeightMode::Binary, &[1, 1]));
        assert_eq!(r.weight_bytes, 2);
    }

    #[test]
    fn ms_conversion() {
        assert!((cycles_to_ms(163_000, 163.0) - 1.0).abs() < 1e-12);
    }
}
