use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use snn_soc::cli::{run_batch, write_idx_images, write_idx_labels, BatchOptions, IdxImages};
use snn_soc::controller::{parse_command_stream, parse_uart_stream, Controller};
use snn_soc::model::{deserialize_model, serialize_model, WeightMode};
use snn_soc::parallel::Execution;
use snn_soc::perf::{memory_footprint, DEFAULT_CLOCK_MHZ};
use snn_soc::synth::{parse_topology, random_frame, random_model, RandomModelSpec};

const EXIT_DATASET: u8 = 1;
const EXIT_MODEL: u8 = 2;

#[derive(Parser)]
#[command(
    name = "snn-soc",
    version,
    about = "Temporal-coding SNN accelerator model"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Binary,
    Fixed16,
}

#[derive(Subcommand)]
enum Cmd {
    /// Classify an IDX dataset through the controller and report metrics.
    Run {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Cross-check every sample against the dense reference simulator.
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        no_early_stop: bool,
        /// Override the model's timestep window (1..=256).
        #[arg(long)]
        t_max: Option<u16>,
        #[arg(long, default_value_t = DEFAULT_CLOCK_MHZ)]
        clock_mhz: f64,
        #[arg(long)]
        report_json: Option<PathBuf>,
        #[arg(long)]
        breakdown_csv: Option<PathBuf>,
        /// Write the concatenated UART result frames here.
        #[arg(long)]
        uart_out: Option<PathBuf>,
        /// Process samples on one thread.
        #[arg(long)]
        sequential: bool,
    },
    /// Write a random flash model image.
    GenModel {
        /// Layer widths including the input, e.g. 784-600-10.
        #[arg(long)]
        topology: String,
        #[arg(long, value_enum, default_value_t = Mode::Binary)]
        mode: Mode,
        #[arg(long, default_value_t = 256)]
        t_max: u16,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a random IDX image/label pair.
    GenData {
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 28)]
        rows: usize,
        #[arg(long, default_value_t = 28)]
        cols: usize,
        #[arg(long, default_value_t = 10)]
        classes: u8,
        /// Fraction of dark (zero) pixels.
        #[arg(long, default_value_t = 0.5)]
        zero_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Replay a binary controller command script.
    Replay {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        uart_out: Option<PathBuf>,
    },
    /// Print a model image's layers and memory footprint.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

fn fail(code: u8, msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(code)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), ExitCode> {
    fs::write(path, bytes).map_err(|e| fail(EXIT_DATASET, format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Cmd::Run {
            model,
            images,
            labels,
            oracle,
            no_early_stop,
            t_max,
            clock_mhz,
            report_json,
            breakdown_csv,
            uart_out,
            sequential,
        } => {
            let opts = BatchOptions {
                oracle,
                early_stop: !no_early_stop,
                t_max,
                clock_mhz,
                execution: if sequential {
                    Execution::Sequential
                } else {
                    Execution::default()
                },
            };
            let report = run_batch(&model, &images, &labels, &opts)
                .map_err(|e| fail(e.exit_code() as u8, e))?;

            println!("samples       {}", report.n_samples);
            println!("accuracy      {:.4}", report.accuracy);
            println!("total cycles  {}", report.total_cycles);
            for (stage, cycles) in report.cycles.stages() {
                println!("  {stage:<10}  {cycles}");
            }
            println!(
                "latency       {:.4} ms/sample @ {clock_mhz} MHz ({:.1} fps)",
                report.mean_latency_ms(),
                report.throughput_fps()
            );
            println!(
                "weights       {} B binary, {} B fixed16 equivalent ({:.2}x)",
                report.memory.binary_bytes, report.memory.fixed_equiv_bytes, report.memory.ratio
            );
            if oracle {
                println!(
                    "oracle        {} / {} agree",
                    report.n_samples, report.n_samples
                );
            }
            if let Some(p) = report_json {
                write(&p, report.to_json())?;
            }
            if let Some(p) = breakdown_csv {
                write(&p, report.cycles.breakdown_csv())?;
            }
            if let Some(p) = uart_out {
                write(&p, &report.uart)?;
            }
        }
        Cmd::GenModel {
            topology,
            mode,
            t_max,
            seed,
            out,
        } => {
            let dims = parse_topology(&topology)
                .ok_or_else(|| fail(EXIT_MODEL, format!("bad topology {topology:?}")))?;
            let mode = match mode {
                Mode::Binary => WeightMode::Binary,
                Mode::Fixed16 => WeightMode::Fixed16,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = random_model(&mut rng, &RandomModelSpec::new(mode, dims, t_max))
                .map_err(|e| fail(EXIT_MODEL, e))?;
            write(&out, serialize_model(&model))?;
        }
        Cmd::GenData {
            count,
            rows,
            cols,
            classes,
            zero_fraction,
            seed,
            images,
            labels,
        } => {
            if classes == 0 {
                return Err(fail(EXIT_DATASET, "need at least one class"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let frames = (0..count)
                .map(|_| random_frame(&mut rng, rows * cols, zero_fraction))
                .collect();
            let lbls: Vec<u8> = (0..count).map(|_| rng.gen_range(0..classes)).collect();
            let bytes = write_idx_images(&IdxImages { rows, cols, frames })
                .map_err(|e| fail(EXIT_DATASET, e))?;
            write(&images, bytes)?;
            write(&labels, write_idx_labels(&lbls))?;
        }
        Cmd::Replay { script, uart_out } => {
            let bytes = fs::read(&script)
                .map_err(|e| fail(EXIT_DATASET, format!("{}: {e}", script.display())))?;
            let commands = parse_command_stream(&bytes).map_err(|e| fail(EXIT_DATASET, e))?;
            let mut ctl = Controller::default();
            let resp = ctl.run_script(&commands).map_err(|e| fail(EXIT_MODEL, e))?;
            for f in parse_uart_stream(&resp.uart).map_err(|e| fail(EXIT_MODEL, e))? {
                let time = f
                    .decision_time
                    .map_or("fallback".to_string(), |t| t.to_string());
                println!(
                    "sample {:>6}  label {:>3}  time {:>8}  cycles {}",
                    f.sample_index, f.label, time, f.cycles
                );
            }
            if let Some(p) = uart_out {
                write(&p, &resp.uart)?;
            }
        }
        Cmd::Inspect { model } => {
            let bytes = fs::read(&model)
                .map_err(|e| fail(EXIT_MODEL, format!("{}: {e}", model.display())))?;
            let m = deserialize_model(&bytes).map_err(|e| fail(EXIT_MODEL, e))?;
            println!(
                "mode {:?}, t_max {}, {} layers",
                m.mode(),
                m.t_max(),
                m.layers().len()
            );
            let mem = memory_footprint(&m);
            for (k, (layer, lm)) in m.layers().iter().zip(&mem.layers).enumerate() {
                let c = &layer.config;
                println!(
                    "  layer {k}: {}->{} alpha {:.4} threshold {} (effective {}), weights {} B",
                    c.in_dim,
                    c.out_dim,
                    c.alpha.to_f64(),
                    c.threshold,
                    c.effective_threshold(m.mode()),
                    lm.weight_bytes
                );
            }
            println!(
                "weights {} B, spikes {} B, total {} B; fixed16/binary {:.2}x",
                mem.weight_bytes,
                mem.spike_bytes,
                mem.total_bytes,
                mem.fixed_to_binary_ratio()
            );
        }
    }
    Ok(())
}
