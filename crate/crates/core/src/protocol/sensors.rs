//! Water-quality sensor bank and the measure-then-transmit sequence run while
//! the robot holds position.
//!
//! Channels are simulated as first-order settling signals read through a
//! 10-bit ADC. Processing is a median filter over a burst of conversions
//! followed by an affine counts-to-units map.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::packet::{FrameError, Message, Packet, Reading, MAX_PAYLOAD, READING_BYTES};
use super::radio::{RadioMode, Transceiver};
use crate::time::SimTime;

pub const CHANNELS: usize = 5;
pub const ADC_MAX: u16 = 1023;
pub const DEFAULT_SETTLE_S: f64 = 60.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SensorError {
    #[error("channel {channel} sampled {elapsed_s:.3} s after pump start, needs {settle_s} s")]
    NotSettled {
        channel: usize,
        elapsed_s: f64,
        settle_s: f64,
    },
    #[error("invalid sensor configuration: {0}")]
    Config(String),
    #[error("sequencer used out of order: {0}")]
    Sequence(&'static str),
    #[error(transparent)]
    Frame(#[from] FrameError),
}

/// Counts-to-units map with an optional median filter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConversionDescriptor {
    pub gain: f64,
    pub offset: f64,
    /// Odd window length; `None` takes a single conversion.
    pub median_window: Option<usize>,
}

impl Default for ConversionDescriptor {
    fn default() -> Self {
        Self {
            gain: 0.01,
            offset: 0.0,
            median_window: Some(5),
        }
    }
}

impl ConversionDescriptor {
    pub fn to_units(&self, counts: f64) -> f64 {
        self.gain * counts + self.offset
    }

    pub fn to_counts(&self, units: f64) -> f64 {
        (units - self.offset) / self.gain
    }

    pub fn burst_len(&self) -> usize {
        self.median_window.unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SensorChannel {
    pub name: String,
    pub settle_time_s: f64,
    /// Value in engineering units once settled.
    pub settled_value: f64,
    /// Value at pump start.
    pub initial_value: f64,
    /// ADC noise (counts, 1 sigma).
    pub noise_counts: f64,
    pub conversion: ConversionDescriptor,
}

impl Default for SensorChannel {
    fn default() -> Self {
        Self {
            name: "ch".into(),
            settle_time_s: DEFAULT_SETTLE_S,
            settled_value: 5.0,
            initial_value: 0.0,
            noise_counts: 0.0,
            conversion: ConversionDescriptor::default(),
        }
    }
}

impl SensorChannel {
    /// Signal a time `t` after pump start; reaches within 1% of the settled
    /// value at `settle_time_s`.
    pub fn signal(&self, t: f64) -> f64 {
        let tau = self.settle_time_s / 4.6;
        let t = t.max(0.0);
        self.settled_value + (self.initial_value - self.settled_value) * (-t / tau).exp()
    }
}

/// Exactly five sensor channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorBank {
    pub channels: [SensorChannel; CHANNELS],
}

impl Default for SensorBank {
    fn default() -> Self {
        let names = ["ph", "chlorine", "conductivity", "temperature", "turbidity"];
        let values = [7.2, 0.8, 4.5, 2.1, 0.4];
        Self {
            channels: std::array::from_fn(|i| SensorChannel {
                name: names[i].into(),
                settled_value: values[i],
                ..SensorChannel::default()
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub channel: usize,
    pub elapsed_s: f64,
    pub counts: u16,
    pub value: f64,
    pub valid: bool,
}

fn median(mut v: Vec<u16>) -> f64 {
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] as f64 + v[n / 2] as f64) / 2.0
    }
}

impl SensorBank {
    pub fn validate(&self) -> Result<(), SensorError> {
        for (i, c) in self.channels.iter().enumerate() {
            let bad = |what: &str| Err(SensorError::Config(format!("channel {i}: {what}")));
            if !(c.settle_time_s.is_finite() && c.settle_time_s > 0.0) {
                return bad("settle_time_s must be positive");
            }
            if !(c.conversion.gain.is_finite() && c.conversion.gain != 0.0) {
                return bad("conversion gain must be finite and nonzero");
            }
            if !c.conversion.offset.is_finite() || !c.settled_value.is_finite() || !c.initial_value.is_finite() {
                return bad("non-finite value");
            }
            if !(c.noise_counts.is_finite() && c.noise_counts >= 0.0) {
                return bad("noise_counts must be non-negative");
            }
            if let Some(w) = c.conversion.median_window {
                if w == 0 || w % 2 == 0 {
                    return bad("median_window must be odd");
                }
            }
        }
        Ok(())
    }

    pub fn max_settle_time(&self) -> f64 {
        self.channels.iter().map(|c| c.settle_time_s).fold(0.0, f64::max)
    }

    fn convert_once<R: Rng + ?Sized>(c: &SensorChannel, t: f64, rng: &mut R) -> u16 {
        let mut counts = c.conversion.to_counts(c.signal(t));
        if c.noise_counts > 0.0 {
            counts += Normal::new(0.0, c.noise_counts).unwrap().sample(rng);
        }
        counts.round().clamp(0.0, ADC_MAX as f64) as u16
    }

    /// Reads one channel `elapsed_s` after pump start. Readings before the
    /// channel's settle time are returned flagged invalid.
    pub fn sample<R: Rng + ?Sized>(&self, channel: usize, elapsed_s: f64, rng: &mut R) -> Sample {
        let c = &self.channels[channel];
        let burst: Vec<u16> = (0..c.conversion.burst_len())
            .map(|_| Self::convert_once(c, elapsed_s, rng))
            .collect();
        let filtered = median(burst);
        Sample {
            channel,
            elapsed_s,
            counts: filtered.round() as u16,
            value: c.conversion.to_units(filtered),
            valid: elapsed_s >= c.settle_time_s,
        }
    }
}

/// Groups readings into as few SensorData frames as fit the FIFO.
pub fn sensor_packets(samples: &[Sample]) -> Vec<Message> {
    let per_frame = MAX_PAYLOAD / READING_BYTES;
    samples
        .chunks(per_frame)
        .map(|chunk| {
            Message::SensorData(
                chunk
                    .iter()
                    .map(|s| Reading {
                        channel: s.channel as u8,
                        value: s.value as f32,
                    })
                    .collect(),
            )
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
enum Stage {
    Idle,
    Settling { pump_on: SimTime },
    Transmitting { queue: Vec<Message>, next: usize },
    Finished,
}

/// What the sequencer did on a poll.
#[derive(Debug, Clone, PartialEq)]
pub enum SequencerEvent {
    PumpOn,
    Sampled(Vec<Sample>),
    /// The frame the MT should put on air now.
    Transmit(Packet),
    /// DT went out and the MT was switched to receive.
    Completed {
        mode_change: Option<(RadioMode, RadioMode)>,
    },
}

/// Pump on, wait for settling, sample all channels, send SensorData frames,
/// send DT, switch the MT to Rx.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSequencer {
    stage: Stage,
    pending: Option<Packet>,
    pub first_sample_at: Option<SimTime>,
    pub pump_on_at: Option<SimTime>,
}

impl Default for MeasurementSequencer {
    fn default() -> Self {
        Self::new()
    }
}

impl MeasurementSequencer {
    pub fn new() -> Self {
        Self {
            stage: Stage::Idle,
            pending: None,
            first_sample_at: None,
            pump_on_at: None,
        }
    }

    pub fn is_finished(&self) -> bool {
        self.stage == Stage::Finished
    }

    pub fn start(&mut self, now: SimTime) -> Result<SequencerEvent, SensorError> {
        if self.stage != Stage::Idle {
            return Err(SensorError::Sequence("start called twice"));
        }
        self.stage = Stage::Settling { pump_on: now };
        self.pump_on_at = Some(now);
        Ok(SequencerEvent::PumpOn)
    }

    /// Advances the sequence. Returns at most one event; a `Transmit` must be
    /// acknowledged with [`MeasurementSequencer::sent`] once it went on air,
    /// otherwise the same frame is offered again next poll.
    pub fn poll<R: Rng + ?Sized>(
        &mut self,
        now: SimTime,
        bank: &SensorBank,
        mt: &mut Transceiver,
        rng: &mut R,
    ) -> Result<Option<SequencerEvent>, SensorError> {
        if let Some(p) = &self.pending {
            return Ok(Some(SequencerEvent::Transmit(p.clone())));
        }
        match &mut self.stage {
            Stage::Idle | Stage::Finished => Ok(None),
            Stage::Settling { pump_on } => {
                let elapsed = now.saturating_sub(*pump_on).as_secs_f64();
                if elapsed < bank.max_settle_time() {
                    return Ok(None);
                }
                let samples: Vec<Sample> = (0..CHANNELS).map(|ch| bank.sample(ch, elapsed, rng)).collect();
                if let Some(s) = samples.iter().find(|s| !s.valid) {
                    return Err(SensorError::NotSettled {
                        channel: s.channel,
                        elapsed_s: s.elapsed_s,
                        settle_s: bank.channels[s.channel].settle_time_s,
                    });
                }
                let mut queue = sensor_packets(&samples);
                queue.push(Message::DoneTransmission);
                self.first_sample_at = Some(now);
                self.stage = Stage::Transmitting { queue, next: 0 };
                Ok(Some(SequencerEvent::Sampled(samples)))
            }
            Stage::Transmitting { queue, next } => {
                if *next == queue.len() {
                    self.stage = Stage::Finished;
                    let mode_change = mt.set_mode(RadioMode::Rx);
                    return Ok(Some(SequencerEvent::Completed { mode_change }));
                }
                let p = mt.frame(&queue[*next])?;
                *next += 1;
                self.pending = Some(p.clone());
                Ok(Some(SequencerEvent::Transmit(p)))
            }
        }
    }

    /// Marks the offered frame as transmitted.
    pub fn sent(&mut self) {
        self.pending = None;
    }
}

/// Everything the measurement sequence produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub pump_on_at: SimTime,
    pub first_sample_at: SimTime,
    pub samples: Vec<Sample>,
    pub packets: Vec<Packet>,
    pub finished_at: SimTime,
    pub mt_mode: RadioMode,
}

/// Runs the full sequence on a fixed clock with an always-available
/// channel.
pub fn measurement_phase<R: Rng + ?Sized>(
    bank: &SensorBank,
    mt: &mut Transceiver,
    start: SimTime,
    dt: SimTime,
    rng: &mut R,
) -> Result<MeasurementReport, SensorError> {
    bank.validate()?;
    if mt.mode() != RadioMode::Tx {
        return Err(SensorError::Sequence("MT must be in Tx"));
    }
    let mut seq = MeasurementSequencer::new();
    let mut now = start;
    seq.start(now)?;
    let mut samples = Vec::new();
    let mut packets = Vec::new();
    loop {
        now += dt;
        match seq.poll(now, bank, mt, rng)? {
            Some(SequencerEvent::Sampled(s)) => samples = s,
            Some(SequencerEvent::Transmit(p)) => {
                packets.push(p);
                seq.sent();
            }
            Some(SequencerEvent::Completed { .. }) => break,
            Some(SequencerEvent::PumpOn) | None => {}
        }
    }
    Ok(MeasurementReport {
        pump_on_at: start,
        first_sample_at: seq.first_sample_at.expect("sampled before completing"),
        samples,
        packets,
        finished_at: now,
        mt_mode: mt.mode(),
    })
}
