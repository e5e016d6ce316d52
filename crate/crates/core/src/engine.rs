//! Event-driven SNN datapath.
//!
//! Each layer consumes its sorted event queue one timestep at a time:
//! every event of the timestep is accumulated into the not-yet-fired
//! neurons, then the time-multiplexed neuron scan fires every neuron at or
//! above threshold in ascending index order. Neurons are non-leaky and
//! fire at most once; a fired neuron's potential is frozen.

use serde::Serialize;

use crate::decoder::{decode, Decision};
use crate::encoder::{InputFrame, TtfsEncoder, ZeroPixelPolicy};
use crate::error::{Error, Result};
use crate::model::{
    binary_bit, Layer, LayerConfig, NetworkModel, SpikeTime, SpikeTrain, WeightMatrix, WeightMode,
};
use crate::perf::{estimate_cycles, CycleCostTable, CycleReport, InferenceTrace, LayerTrace};
use crate::sorter::{sort_spikes, EventQueue};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeuronState {
    potentials: Vec<i32>,
    fire_times: Vec<Option<SpikeTime>>,
}

impl NeuronState {
    pub fn new(out_dim: usize) -> Self {
        NeuronState {
            potentials: vec![0; out_dim],
            fire_times: vec![None; out_dim],
        }
    }

    pub fn potentials(&self) -> &[i32] {
        &self.potentials
    }

    pub fn fire_times(&self) -> &[Option<SpikeTime>] {
        &self.fire_times
    }

    #[inline]
    pub fn is_fired(&self, j: usize) -> bool {
        self.fire_times[j].is_some()
    }

    pub fn fired(&self) -> Vec<bool> {
        self.fire_times.iter().map(Option::is_some).collect()
    }

    pub fn len(&self) -> usize {
        self.potentials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.potentials.is_empty()
    }
}

/// Arithmetic and event tallies; an energy proxy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct OpCounters {
    pub additions: u64,
    pub subtractions: u64,
    pub multiplications: u64,
    pub events_processed: u64,
    pub events_skipped: u64,
}

fn check_presynaptic(weights: &WeightMatrix, pre: usize) -> Result<()> {
    if pre >= weights.in_dim() {
        return Err(Error::DimensionMismatch {
            expected: weights.in_dim(),
            got: pre + 1,
        });
    }
    Ok(())
}

/// Adds or subtracts one unit per live neuron according to the weight bit
/// of presynaptic neuron `pre`.
pub fn accumulate_event_binary(
    state: &mut NeuronState,
    weights: &WeightMatrix,
    pre: usize,
    counters: &mut OpCounters,
) -> Result<()> {
    check_presynaptic(weights, pre)?;
    for j in 0..state.len() {
        if state.is_fired(j) {
            continue;
        }
        let row = weights.binary_row(j).ok_or(Error::DimensionMismatch {
            expected: weights.out_dim(),
            got: j,
        })?;
        let v = &mut state.potentials[j];
        *v = if binary_bit(row, pre) {
            counters.additions += 1;
            v.checked_add(1)
        } else {
            counters.subtractions += 1;
            v.checked_sub(1)
        }
        .ok_or(Error::AccumulatorOverflow { neuron: j })?;
    }
    Ok(())
}

/// Adds the sign-extended 16-bit weight of `pre` to every live neuron.
pub fn accumulate_event_fixed16(
    state: &mut NeuronState,
    weights: &WeightMatrix,
    pre: usize,
    counters: &mut OpCounters,
) -> Result<()> {
    check_presynaptic(weights, pre)?;
    for j in 0..state.len() {
        if state.is_fired(j) {
            continue;
        }
        let row = weights.fixed16_row(j).ok_or(Error::DimensionMismatch {
            expected: weights.out_dim(),
            got: j,
        })?;
        // weight times a unit spike, the DSP slice in hardware
        counters.multiplications += 1;
        counters.additions += 1;
        let v = &mut state.potentials[j];
        *v = v
            .checked_add(row[pre] as i32)
            .ok_or(Error::AccumulatorOverflow { neuron: j })?;
    }
    Ok(())
}

pub fn accumulate_event(
    state: &mut NeuronState,
    weights: &WeightMatrix,
    pre: usize,
    counters: &mut OpCounters,
) -> Result<()> {
    match weights.mode() {
        WeightMode::Binary => accumulate_event_binary(state, weights, pre, counters),
        WeightMode::Fixed16 => accumulate_event_fixed16(state, weights, pre, counters),
    }
}

/// Fires every live neuron whose potential reached the effective threshold.
/// Returns the newly fired indices in ascending order.
pub fn fire_check(
    state: &mut NeuronState,
    layer: &LayerConfig,
    mode: WeightMode,
    now: SpikeTime,
) -> Vec<usize> {
    let threshold = layer.effective_threshold(mode);
    let mut fired = Vec::new();
    for j in 0..state.len() {
        if !state.is_fired(j) && state.potentials[j] as i64 >= threshold {
            state.fire_times[j] = Some(now);
            fired.push(j);
        }
    }
    fired
}

/// Whether a layer stops at its first output spike.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerStop {
    /// Consume the whole queue (or until every neuron fired).
    Exhaust,
    /// Truncate the queue at the first timestep that produced a spike.
    FirstFire,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerRun {
    pub output: SpikeTrain,
    pub state: NeuronState,
    pub trace: LayerTrace,
    /// Timestep the queue was truncated at, under [`LayerStop::FirstFire`].
    pub truncated_at: Option<SpikeTime>,
}

pub fn run_layer(
    queue: &EventQueue,
    layer: &Layer,
    mode: WeightMode,
    t_max: u16,
    stop: LayerStop,
    counters: &mut OpCounters,
) -> Result<LayerRun> {
    let cfg = &layer.config;
    let events = queue.events();
    if let Some(bad) = events.iter().find(|e| e.neuron >= cfg.in_dim) {
        return Err(Error::DimensionMismatch {
            expected: cfg.in_dim,
            got: bad.neuron + 1,
        });
    }

    let mut state = NeuronState::new(cfg.out_dim);
    let mut live = cfg.out_dim;
    let mut limit = events.len();
    let mut truncated_at = None;
    let mut next = 0;

    while next < limit && live > 0 {
        let now = events[next].time;
        let end = next
            + events[next..limit]
                .iter()
                .take_while(|e| e.time == now)
                .count();
        for e in &events[next..end] {
            accumulate_event(&mut state, &layer.weights, e.neuron, counters)?;
        }
        next = end;
        let fired = fire_check(&mut state, cfg, mode, now);
        live -= fired.len();
        if stop == LayerStop::FirstFire && !fired.is_empty() {
            limit = queue.truncate_after(now).len();
            truncated_at = Some(now);
        }
    }

    let processed = next;
    let skipped = events.len() - processed;
    counters.events_processed += processed as u64;
    counters.events_skipped += skipped as u64;

    Ok(LayerRun {
        output: SpikeTrain::new(t_max, state.fire_times.clone())?,
        state,
        trace: LayerTrace {
            in_dim: cfg.in_dim,
            out_dim: cfg.out_dim,
            events_sorted: events.len(),
            events_processed: processed,
            events_skipped: skipped,
        },
        truncated_at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InferenceOptions {
    /// Stop the output layer once the decision time is known.
    pub early_stop: bool,
    pub zero_pixel: ZeroPixelPolicy,
    pub costs: CycleCostTable,
}

impl Default for InferenceOptions {
    fn default() -> Self {
        InferenceOptions {
            early_stop: true,
            zero_pixel: ZeroPixelPolicy::NoSpike,
            costs: CycleCostTable::default(),
        }
    }
}

impl InferenceOptions {
    /// No early stop, zero pixels spike at the last timestep.
    pub fn exhaustive() -> Self {
        InferenceOptions {
            early_stop: false,
            zero_pixel: ZeroPixelPolicy::LastTimestep,
            costs: CycleCostTable::default(),
        }
    }
}

/// Fire times and final potentials of one layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerResult {
    pub fire_times: SpikeTrain,
    pub potentials: Vec<i32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InferenceResult {
    pub decision: Decision,
    pub input: SpikeTrain,
    pub layers: Vec<LayerResult>,
    pub counters: OpCounters,
    pub trace: InferenceTrace,
    pub cycles: CycleReport,
    /// Output-layer truncation time when early stop cut the run short.
    /// Output neurons that would fire later are reported silent and their
    /// potentials reflect only events up to this time.
    pub early_stop_at: Option<SpikeTime>,
}

impl InferenceResult {
    pub fn class(&self) -> usize {
        self.decision.class
    }

    pub fn decision_time(&self) -> Option<SpikeTime> {
        self.decision.time
    }
}

pub fn run_network(
    model: &NetworkModel,
    frame: &InputFrame,
    opts: &InferenceOptions,
) -> Result<InferenceResult> {
    let t_max = model.t_max();
    let encoder = TtfsEncoder::new(model.input_dim(), t_max, opts.zero_pixel)?;
    let input = encoder.encode(frame)?;

    let mut counters = OpCounters::default();
    let mut trace = InferenceTrace {
        t_max,
        input_pixels: frame.len(),
        layers: Vec::with_capacity(model.layers().len()),
    };
    let mut layers = Vec::with_capacity(model.layers().len());
    let mut early_stop_at = None;
    let mut spikes = input.clone();
    let last = model.layers().len() - 1;

    for (k, layer) in model.layers().iter().enumerate() {
        let queue = sort_spikes(&spikes);
        let stop = if k == last && opts.early_stop {
            LayerStop::FirstFire
        } else {
            LayerStop::Exhaust
        };
        let run = run_layer(&queue, layer, model.mode(), t_max, stop, &mut counters)?;
        trace.layers.push(run.trace);
        if k == last {
            early_stop_at = run.truncated_at;
        }
        spikes = run.output.clone();
        layers.push(LayerResult {
            fire_times: run.output,
            potentials: run.state.potentials,
        });
    }

    let out = layers.last().unwrap();
    let decision = decode(out.fire_times.times(), &out.potentials)?;
    let cycles = estimate_cycles(&trace, &opts.costs);

    Ok(InferenceResult {
        decision,
        input,
        layers,
        counters,
        trace,
        cycles,
        early_stop_at,
    })
}
