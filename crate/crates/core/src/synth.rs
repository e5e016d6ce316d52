//! Random networks and frames for smoke runs, benches and equivalence
//! sweeps. Seeded ChaCha streams keep everything reproducible.

use rand::Rng;

use crate::encoder::InputFrame;
use crate::error::Result;
use crate::model::{Alpha, Layer, LayerConfig, NetworkModel, WeightMatrix, WeightMode};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomModelSpec {
    pub mode: WeightMode,
    /// Input width followed by each layer's output width.
    pub dims: Vec<usize>,
    pub t_max: u16,
}

impl RandomModelSpec {
    pub fn new(mode: WeightMode, dims: Vec<usize>, t_max: u16) -> Self {
        RandomModelSpec { mode, dims, t_max }
    }
}

/// Parses `784-600-10` style topologies.
pub fn parse_topology(s: &str) -> Option<Vec<usize>> {
    let dims: Option<Vec<usize>> = s.split('-').map(|p| p.trim().parse().ok()).collect();
    dims.filter(|d| d.len() >= 2 && d.iter().all(|&x| x > 0))
}

/// Random weights, scales and thresholds. Thresholds are drawn around the
/// scale of a random walk over the layer's fan-in, so a mix of firing and
/// silent neurons is typical.
pub fn random_model<R: Rng + ?Sized>(rng: &mut R, spec: &RandomModelSpec) -> Result<NetworkModel> {
    let layers = spec
        .dims
        .windows(2)
        .map(|d| random_layer(rng, spec.mode, d[0], d[1]))
        .collect::<Result<Vec<_>>>()?;
    NetworkModel::new(spec.mode, spec.t_max, layers)
}

fn random_layer<R: Rng + ?Sized>(
    rng: &mut R,
    mode: WeightMode,
    in_dim: usize,
    out_dim: usize,
) -> Result<Layer> {
    let alpha = Alpha::from_raw(rng.gen_range(32..=1024));
    let spread = ((in_dim as f64).sqrt() * 0.5).ceil() as i64 + 1;
    let (weights, threshold) = match mode {
        WeightMode::Binary => {
            let rows: Vec<Vec<i8>> = (0..out_dim)
                .map(|_| {
                    (0..in_dim)
                        .map(|_| if rng.gen::<bool>() { 1 } else { -1 })
                        .collect()
                })
                .collect();
            let effective = rng.gen_range(-2..=spread);
            let threshold = (effective * alpha.raw() as i64) >> Alpha::FRAC_BITS;
            (WeightMatrix::binary_from_rows(&rows)?, threshold as i32)
        }
        WeightMode::Fixed16 => {
            let amp: i32 = match rng.gen_range(0..3) {
                0 => 256,
                1 => 4096,
                _ => 32767,
            };
            let rows: Vec<Vec<i16>> = (0..out_dim)
                .map(|_| {
                    (0..in_dim)
                        .map(|_| rng.gen_range(-amp - (amp == 32767) as i32..=amp) as i16)
                        .collect()
                })
                .collect();
            let threshold = rng.gen_range(-(amp as i64)..=amp as i64 * spread);
            (WeightMatrix::fixed16_from_rows(&rows)?, threshold as i32)
        }
    };
    Ok(Layer {
        config: LayerConfig::new(in_dim, out_dim, alpha, threshold),
        weights,
    })
}

/// A frame where roughly `zero_fraction` of the pixels are dark.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, len: usize, zero_fraction: f64) -> InputFrame {
    InputFrame::new(
        (0..len)
            .map(|_| {
                if rng.gen_bool(zero_fraction) {
                    0
                } else {
                    rng.gen_range(1..=255)
                }
            })
            .collect(),
    )
}

/// One instance of the equivalence corpus: 1 to 3 layers, widths 1 to 64,
/// either weight mode, window 16, 64 or 256.
pub fn random_case<R: Rng + ?Sized>(rng: &mut R) -> Result<(NetworkModel, InputFrame)> {
    let n_layers = rng.gen_range(1..=3);
    let dims: Vec<usize> = (0..=n_layers).map(|_| rng.gen_range(1..=64)).collect();
    let mode = if rng.gen::<bool>() {
        WeightMode::Binary
    } else {
        WeightMode::Fixed16
    };
    let t_max = [16, 64, 256][rng.gen_range(0..3)];
    let model = random_model(rng, &RandomModelSpec::new(mode, dims, t_max))?;
    let zero_fraction = rng.gen_range(0.0..0.8);
    let frame = random_frame(rng, model.input_dim(), zero_fraction);
    Ok((model, frame))
}
