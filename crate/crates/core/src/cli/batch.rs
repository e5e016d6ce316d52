//! Batch evaluation through the controller's command protocol.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use super::idx::{load_idx_images, load_idx_labels, IdxImages};
use crate::controller::{Command, Controller};
use crate::engine::InferenceOptions;
use crate::error::Error;
use crate::oracle::{check_agreement, dense_infer};
use crate::parallel::{map_indexed, Execution};
use crate::perf::{cycles_to_ms, memory_footprint, CycleReport, MemoryReport, DEFAULT_CLOCK_MHZ};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchOptions {
    /// Cross-check every sample against the dense reference.
    pub oracle: bool,
    pub early_stop: bool,
    /// Overrides the model's window.
    pub t_max: Option<u16>,
    pub clock_mhz: f64,
    pub execution: Execution,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            oracle: false,
            early_stop: true,
            t_max: None,
            clock_mhz: DEFAULT_CLOCK_MHZ,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error("dataset error: {0}")]
    Dataset(Error),
    #[error("model error: {0}")]
    Model(Error),
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Error },
    #[error("sample {index}: oracle divergence: {detail}")]
    Divergence { index: usize, detail: String },
}

impl BatchError {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            BatchError::Dataset(_) | BatchError::Sample { .. } => 1,
            BatchError::Model(_) => 2,
            BatchError::Divergence { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SampleRecord {
    pub index: usize,
    pub label: u8,
    pub pred: usize,
    pub decision_time: Option<u8>,
    pub cycles: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CyclesBreakdown {
    pub encode: u64,
    pub sort: u64,
    pub neuron: u64,
    pub decode: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemorySummary {
    pub binary_bytes: usize,
    pub fixed_equiv_bytes: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchReport {
    pub model: String,
    pub dataset: String,
    pub n_samples: usize,
    pub accuracy: f64,
    pub total_cycles: u64,
    pub cycles_breakdown: CyclesBreakdown,
    pub memory: MemorySummary,
    pub per_sample: Vec<SampleRecord>,
    #[serde(skip)]
    pub cycles: CycleReport,
    #[serde(skip)]
    pub memory_report: MemoryReport,
    /// Concatenated UART frames in sample order.
    #[serde(skip)]
    pub uart: Vec<u8>,
    #[serde(skip)]
    pub clock_mhz: f64,
}

impl BatchReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn mean_latency_ms(&self) -> f64 {
        cycles_to_ms(self.total_cycles, self.clock_mhz) / self.n_samples as f64
    }

    pub fn throughput_fps(&self) -> f64 {
        1e3 / self.mean_latency_ms()
    }
}

/// Runs a batch from files on disk.
pub fn run_batch(
    model_path: &Path,
    images_path: &Path,
    labels_path: &Path,
    opts: &BatchOptions,
) -> Result<BatchReport, BatchError> {
    let image = fs::read(model_path).map_err(|e| BatchError::Model(e.into()))?;
    let images = load_idx_images(images_path).map_err(BatchError::Dataset)?;
    let labels = load_idx_labels(labels_path).map_err(BatchError::Dataset)?;
    run_batch_data(
        &image,
        &images,
        &labels,
        &model_path.display().to_string(),
        &images_path.display().to_string(),
        opts,
    )
}

struct SampleOutcome {
    record: SampleRecord,
    cycles: CycleReport,
    uart: Vec<u8>,
}

/// Runs a batch from in-memory model image and dataset.
pub fn run_batch_data(
    image: &[u8],
    images: &IdxImages,
    labels: &[u8],
    model_name: &str,
    dataset_name: &str,
    opts: &BatchOptions,
) -> Result<BatchReport, BatchError> {
    if images.frames.is_empty() {
        return Err(BatchError::Dataset(Error::CorruptDataset(
            "dataset has no samples".into(),
        )));
    }
    if images.frames.len() != labels.len() {
        return Err(BatchError::Dataset(Error::CorruptDataset(format!(
            "{} images but {} labels",
            images.frames.len(),
            labels.len()
        ))));
    }

    let inference = InferenceOptions {
        early_stop: opts.early_stop,
        ..InferenceOptions::default()
    };
    let mut base = Controller::new(inference);
    base.handle_command(&Command::LoadModel(image.to_vec()))
        .map_err(BatchError::Model)?;
    if let Some(t_max) = opts.t_max {
        let model = base
            .model()
            .unwrap()
            .with_t_max(t_max)
            .map_err(BatchError::Model)?;
        base.install_model(Arc::new(model))
            .map_err(BatchError::Model)?;
    }
    let model = base.model().unwrap().clone();

    let outcomes = map_indexed(&images.frames, opts.execution, |index, frame| {
        let mut ctl = base.clone();
        ctl.set_next_sample(index as u32);
        let script = [Command::LoadInput(frame.pixels().to_vec()), Command::Run];
        let resp = ctl
            .run_script(&script)
            .map_err(|source| BatchError::Sample { index, source })?;
        let result = ctl.last_result().expect("Run stores its result");
        if opts.oracle {
            let dense = dense_infer(&model, frame, inference.zero_pixel)
                .map_err(|source| BatchError::Sample { index, source })?;
            check_agreement(result, &dense).map_err(|d| BatchError::Divergence {
                index,
                detail: d.to_string(),
            })?;
        }
        Ok(SampleOutcome {
            record: SampleRecord {
                index,
                label: labels[index],
                pred: result.class(),
                decision_time: result.decision_time(),
                cycles: result.cycles.total_cycles,
            },
            cycles: result.cycles.clone(),
            uart: resp.uart,
        })
    });

    let mut per_sample = Vec::with_capacity(outcomes.len());
    let mut cycles = CycleReport::default();
    let mut uart = Vec::new();
    for outcome in outcomes {
        let o = outcome?;
        cycles.accumulate(&o.cycles);
        uart.extend(o.uart);
        per_sample.push(o.record);
    }

    let correct = per_sample
        .iter()
        .filter(|r| r.pred == r.label as usize)
        .count();
    let memory_report = memory_footprint(&model);
    Ok(BatchReport {
        model: model_name.to_string(),
        dataset: dataset_name.to_string(),
        n_samples: per_sample.len(),
        accuracy: correct as f64 / per_sample.len() as f64,
        total_cycles: cycles.total_cycles,
        cycles_breakdown: CyclesBreakdown {
            encode: cycles.encode_cycles,
            sort: cycles.sort_cycles,
            neuron: cycles.neuron_cycles,
            decode: cycles.decode_cycles,
        },
        memory: MemorySummary {
            binary_bytes: memory_report.binary_weight_bytes,
            fixed_equiv_bytes: memory_report.fixed16_weight_bytes,
            ratio: memory_report.fixed_to_binary_ratio(),
        },
        per_sample,
        cycles,
        memory_report,
        uart,
        clock_mhz: opts.clock_mhz,
    })
}
