//! Control-plane emulation: the load / run / interrupt / UART flow of the
//! SoC's RISC-V controller, modeled as a synchronous state machine.
//!
//! Command stream, one tagged record per command (lengths little-endian):
//!
//! * `0x01` LoadModel: u32 length, flash image bytes
//! * `0x02` LoadInput: u16 length, pixel bytes
//! * `0x03` Run
//! * `0x0F` Reset
//!
//! Every `Run` emits `InferenceDone`, one UART result frame, then
//! `LoadNextSample`.

use std::sync::Arc;

use crate::encoder::InputFrame;
use crate::engine::{run_network, InferenceOptions, InferenceResult};
use crate::error::{Error, Result};
use crate::model::{deserialize_model, NetworkModel};

pub const TAG_LOAD_MODEL: u8 = 0x01;
pub const TAG_LOAD_INPUT: u8 = 0x02;
pub const TAG_RUN: u8 = 0x03;
pub const TAG_RESET: u8 = 0x0F;

pub const UART_MARKER: u8 = 0xA5;
/// Marker, u32 sample index, label, decision time, u32 cycles, checksum.
pub const UART_FRAME_LEN: usize = 12;
/// Decision-time byte for a potential-fallback decision.
pub const FALLBACK_TIME: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    LoadModel(Vec<u8>),
    LoadInput(Vec<u8>),
    Run,
    Reset,
}

impl Command {
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Command::LoadModel(image) => {
                out.push(TAG_LOAD_MODEL);
                out.extend_from_slice(&(image.len() as u32).to_le_bytes());
                out.extend_from_slice(image);
            }
            Command::LoadInput(pixels) => {
                out.push(TAG_LOAD_INPUT);
                out.extend_from_slice(&(pixels.len() as u16).to_le_bytes());
                out.extend_from_slice(pixels);
            }
            Command::Run => out.push(TAG_RUN),
            Command::Reset => out.push(TAG_RESET),
        }
    }
}

pub fn encode_command_stream(commands: &[Command]) -> Vec<u8> {
    let mut out = Vec::new();
    for c in commands {
        c.encode_into(&mut out);
    }
    out
}

pub fn parse_command_stream(bytes: &[u8]) -> Result<Vec<Command>> {
    let mut commands = Vec::new();
    let mut pos = 0;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let end = *pos + n;
        let s = bytes.get(*pos..end).ok_or_else(|| {
            Error::ProtocolViolation(format!("command stream truncated at byte {}", *pos))
        })?;
        *pos = end;
        Ok(s)
    };
    while pos < bytes.len() {
        let tag = bytes[pos];
        pos += 1;
        let cmd = match tag {
            TAG_LOAD_MODEL => {
                let len = take(&mut pos, 4)?;
                let len = u32::from_le_bytes([len[0], len[1], len[2], len[3]]) as usize;
                Command::LoadModel(take(&mut pos, len)?.to_vec())
            }
            TAG_LOAD_INPUT => {
                let len = take(&mut pos, 2)?;
                let len = u16::from_le_bytes([len[0], len[1]]) as usize;
                Command::LoadInput(take(&mut pos, len)?.to_vec())
            }
            TAG_RUN => Command::Run,
            TAG_RESET => Command::Reset,
            other => {
                return Err(Error::ProtocolViolation(format!(
                    "unknown command tag {other:#04x} at byte {}",
                    pos - 1
                )))
            }
        };
        commands.push(cmd);
    }
    Ok(commands)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Idle,
    ModelLoaded,
    InputLoaded,
    Running,
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Interrupt {
    InferenceDone,
    LoadNextSample,
}

/// What a single command produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Response {
    pub interrupts: Vec<Interrupt>,
    pub uart: Vec<u8>,
    /// Phases entered while handling the command, in order.
    pub phases: Vec<Phase>,
}

#[derive(Debug, Clone)]
pub struct Controller {
    phase: Phase,
    model: Option<Arc<NetworkModel>>,
    pending_input: Option<InputFrame>,
    last_result: Option<InferenceResult>,
    options: InferenceOptions,
    next_sample: u32,
}

impl Default for Controller {
    fn default() -> Self {
        Controller::new(InferenceOptions::default())
    }
}

impl Controller {
    pub fn new(options: InferenceOptions) -> Self {
        Controller {
            phase: Phase::Idle,
            model: None,
            pending_input: None,
            last_result: None,
            options,
            next_sample: 0,
        }
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn model(&self) -> Option<&Arc<NetworkModel>> {
        self.model.as_ref()
    }

    pub fn last_result(&self) -> Option<&InferenceResult> {
        self.last_result.as_ref()
    }

    pub fn next_sample(&self) -> u32 {
        self.next_sample
    }

    /// Positions the sample counter, for workers that each own a slice of
    /// a batch.
    pub fn set_next_sample(&mut self, index: u32) {
        self.next_sample = index;
    }

    /// Installs an already-validated model, as `LoadModel` would.
    pub fn install_model(&mut self, model: Arc<NetworkModel>) -> Result<()> {
        if model.num_classes() > 256 {
            return Err(Error::InvalidModel(format!(
                "{} classes do not fit the 8-bit UART label",
                model.num_classes()
            )));
        }
        self.model = Some(model);
        self.pending_input = None;
        self.phase = Phase::ModelLoaded;
        Ok(())
    }

    /// Applies one command. On error the controller state is unchanged.
    pub fn handle_command(&mut self, command: &Command) -> Result<Response> {
        let mut resp = Response::default();
        match command {
            Command::Reset => {
                *self = Controller::new(self.options);
            }
            Command::LoadModel(image) => {
                let model = deserialize_model(image)?;
                self.install_model(Arc::new(model))?;
            }
            Command::LoadInput(pixels) => {
                let model = match (&self.model, self.phase) {
                    (Some(m), Phase::ModelLoaded | Phase::InputLoaded) => m,
                    _ => {
                        return Err(Error::ProtocolViolation(format!(
                            "LoadInput in phase {:?} (no model loaded)",
                            self.phase
                        )))
                    }
                };
                if pixels.len() != model.input_dim() {
                    return Err(Error::DimensionMismatch {
                        expected: model.input_dim(),
                        got: pixels.len(),
                    });
                }
                self.pending_input = Some(InputFrame::new(pixels.clone()));
                self.phase = Phase::InputLoaded;
            }
            Command::Run => {
                let (model, frame) = match (&self.model, &self.pending_input, self.phase) {
                    (Some(m), Some(f), Phase::InputLoaded) => (m, f),
                    _ => {
                        return Err(Error::ProtocolViolation(format!(
                            "Run in phase {:?} (no input loaded)",
                            self.phase
                        )))
                    }
                };
                let result = run_network(model, frame, &self.options)?;
                resp.phases.push(Phase::Running);
                resp.interrupts.push(Interrupt::InferenceDone);
                resp.phases.push(Phase::Done);
                resp.uart
                    .extend_from_slice(&format_uart_frame(self.next_sample, &result));
                resp.interrupts.push(Interrupt::LoadNextSample);
                self.next_sample = self.next_sample.wrapping_add(1);
                self.last_result = Some(result);
                self.pending_input = None;
                self.phase = Phase::ModelLoaded;
            }
        }
        resp.phases.push(self.phase);
        Ok(resp)
    }

    /// Runs a command script, concatenating UART output and interrupts.
    /// Stops at the first failing command.
    pub fn run_script(&mut self, commands: &[Command]) -> Result<Response> {
        let mut all = Response::default();
        for c in commands {
            let r = self.handle_command(c)?;
            all.interrupts.extend(r.interrupts);
            all.uart.extend(r.uart);
            all.phases.extend(r.phases);
        }
        Ok(all)
    }
}

fn xor_checksum(bytes: &[u8]) -> u8 {
    bytes.iter().fold(0, |acc, b| acc ^ b)
}

pub fn format_uart_frame(sample_index: u32, result: &InferenceResult) -> [u8; UART_FRAME_LEN] {
    let cycles = u32::try_from(result.cycles.total_cycles).unwrap_or(u32::MAX);
    let mut f = [0u8; UART_FRAME_LEN];
    f[0] = UART_MARKER;
    f[1..5].copy_from_slice(&sample_index.to_le_bytes());
    f[5] = result.class() as u8;
    f[6] = result.decision_time().unwrap_or(FALLBACK_TIME);
    f[7..11].copy_from_slice(&cycles.to_le_bytes());
    f[11] = xor_checksum(&f[..11]);
    f
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UartFrame {
    pub sample_index: u32,
    pub label: u8,
    /// `None` for the fallback sentinel.
    pub decision_time: Option<u8>,
    pub cycles: u32,
}

pub fn parse_uart_frame(bytes: &[u8]) -> Result<UartFrame> {
    if bytes.len() != UART_FRAME_LEN || bytes[0] != UART_MARKER {
        return Err(Error::ProtocolViolation("not a UART result frame".into()));
    }
    if xor_checksum(&bytes[..11]) != bytes[11] {
        return Err(Error::ProtocolViolation(
            "UART frame checksum mismatch".into(),
        ));
    }
    Ok(UartFrame {
        sample_index: u32::from_le_bytes([bytes[1], bytes[2], bytes[3], bytes[4]]),
        label: bytes[5],
        decision_time: (bytes[6] != FALLBACK_TIME).then_some(bytes[6]),
        cycles: u32::from_le_bytes([bytes[7], bytes[8], bytes[9], bytes[10]]),
    })
}

/// Splits a UART byte stream into validated frames.
pub fn parse_uart_stream(bytes: &[u8]) -> Result<Vec<UartFrame>> {
    if !bytes.len().is_multiple_of(UART_FRAME_LEN) {
        return Err(Error::ProtocolViolation(
            "UART stream length is not a whole number of frames".into(),
        ));
    }
    bytes.chunks(UART_FRAME_LEN).map(parse_uart_frame).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decoder::Decision;
    use crate::model::{serialize_model, Alpha, Layer, LayerConfig, WeightMatrix, WeightMode};
    use crate::perf::CycleReport;

    fn image() -> Vec<u8> {
        let rows = vec![vec![1i8; 16], vec![-1i8; 16]];
        let layer = Layer {
            config: LayerConfig::new(16, 2, Alpha::ONE, 1),
            weights: WeightMatrix::binary_from_rows(&rows).unwrap(),
        };
        serialize_model(&NetworkModel::new(WeightMode::Binary, 256, vec![layer]).unwrap())
    }

    fn fake_result(class: usize, time: Option<u8>, cycles: u64) -> InferenceResult {
        let frame = InputFrame::new(vec![0; 16]);
        let model = deserialize_model(&image()).unwrap();
        let mut r = run_network(&model, &frame, &InferenceOptions::default()).unwrap();
        r.decision = Decision { class, time };
        r.cycles = CycleReport {
            total_cycles: cycles,
            ..CycleReport::default()
        };
        r
    }

    #[test]
    fn uart_frame_bytes() {
        let f = format_uart_frame(0, &fake_result(3, Some(17), 1040));
        // A5 ^ 03 ^ 11 ^ 10 ^ 04 = A3
        assert_eq!(f, [0xA5, 0, 0, 0, 0, 0x03, 0x11, 0x10, 0x04, 0, 0, 0xA3]);
        let parsed = parse_uart_frame(&f).unwrap();
        assert_eq!(parsed.label, 3);
        assert_eq!(parsed.decision_time, Some(17));
        assert_eq!(parsed.cycles, 1040);
    }

    #[test]
    fn uart_fallback_sentinel() {
        let f = format_uart_frame(7, &fake_result(1, None, 5));
        assert_eq!(f[6], FALLBACK_TIME);
        assert_eq!(parse_uart_frame(&f).unwrap().decision_time, None);
    }

    #[test]
    fn uart_checksum_detects_flip() {
        let mut f = format_uart_frame(9, &fake_result(2, Some(4), 99));
        f[3] ^= 0x40;
        assert!(parse_uart_frame(&f).is_err());
    }

    #[test]
    fn run_from_idle_is_rejected() {
        let mut c = Controller::default();
        assert!(matches!(
            c.handle_command(&Command::Run),
            Err(Error::ProtocolViolation(_))
        ));
        assert_eq!(c.phase(), Phase::Idle);
    }

    #[test]
    fn input_before_model_is_rejected() {
        let mut c = Controller::default();
        assert!(matches!(
            c.handle_command(&Command::LoadInput(vec![1; 16])),
            Err(Error::ProtocolViolation(_))
        ));
    }

    #[test]
    fn happy_path() {
        let mut c = Controller::default();
        c.handle_command(&Command::LoadModel(image())).unwrap();
        assert_eq!(c.phase(), Phase::ModelLoaded);
        c.handle_command(&Command::LoadInput(vec![255; 16]))
            .unwrap();
        assert_eq!(c.phase(), Phase::InputLoaded);
        let r = c.handle_command(&Command::Run).unwrap();
        assert_eq!(
            r.interrupts,
            vec![Interrupt::InferenceDone, Interrupt::LoadNextSample]
        );
        assert_eq!(r.uart.len(), UART_FRAME_LEN);
        assert_eq!(
            r.phases,
            vec![Phase::Running, Phase::Done, Phase::ModelLoaded]
        );
        let frame = parse_uart_frame(&r.uart).unwrap();
        assert_eq!(
            (frame.sample_index, frame.label, frame.decision_time),
            (0, 0, Some(0))
        );
        // input is consumed
        assert!(c.handle_command(&Command::Run).is_err());
    }

    #[test]
    fn bad_image_keeps_state() {
        let mut c = Controller::default();
        let mut img = image();
        img[0] = b'X';
        assert_eq!(
            c.handle_command(&Command::LoadModel(img)),
            Err(Error::NotAModelImage)
        );
        assert_eq!(c.phase(), Phase::Idle);
    }

    #[test]
    fn wrong_frame_size_rejected() {
        let mut c = Controller::default();
        c.handle_command(&Command::LoadModel(image())).unwrap();
        assert!(matches!(
            c.handle_command(&Command::LoadInput(vec![1; 15])),
            Err(Error::DimensionMismatch {
                expected: 16,
                got: 15
            })
        ));
        assert_eq!(c.phase(), Phase::ModelLoaded);
    }

    #[test]
    fn reset_discards_everything() {
        let mut c = Controller::default();
        c.handle_command(&Command::LoadModel(image())).unwrap();
        c.handle_command(&Command::LoadInput(vec![3; 16])).unwrap();
        c.handle_command(&Command::Run).unwrap();
        c.handle_command(&Command::Reset).unwrap();
        assert_eq!(c.phase(), Phase::Idle);
        assert!(c.model().is_none());
        assert!(c.last_result().is_none());
        assert_eq!(c.next_sample(), 0);
    }

    #[test]
    fn command_stream_roundtrip() {
        let script = vec![
            Command::LoadModel(image()),
            Command::LoadInput(vec![9; 16]),
            Command::Run,
            Command::Reset,
        ];
        let bytes = encode_command_stream(&script);
        assert_eq!(bytes[0], TAG_LOAD_MODEL);
        assert_eq!(parse_command_stream(&bytes).unwrap(), script);
    }

    #[test]
    fn command_stream_errors() {
        assert!(parse_command_stream(&[0x07]).is_err());
        assert!(parse_command_stream(&[TAG_LOAD_INPUT, 0x05, 0x00, 1, 2]).is_err());
        assert!(parse_command_stream(&[TAG_LOAD_MODEL, 0x01]).is_err());
        assert_eq!(parse_command_stream(&[]).unwrap(), vec![]);
    }
}
