//! Frame layout.
//!
//! ```text
//! offset  size  field
//! 0       4     preamble 0xAA 0x55 0xAA 0x55
//! 4       1     kind (1 SensorData, 2 Rna, 3 DoneTransmission, 4 MotionCommand, 5 Start)
//! 5       1     payload length in bytes
//! 6       2     packet counter, big-endian
//! 8       n     payload, n <= 120
//! ```
//!
//! A frame never exceeds the 128-byte transceiver FIFO.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PREAMBLE: [u8; 4] = [0xAA, 0x55, 0xAA, 0x55];
pub const HEADER_LEN: usize = 8;
pub const FIFO_BYTES: usize = 128;
pub const MAX_PAYLOAD: usize = FIFO_BYTES - HEADER_LEN;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {0} bytes exceeds the {MAX_PAYLOAD}-byte limit")]
    Oversize(usize),
    #[error("bad preamble")]
    BadPreamble,
    #[error("truncated frame: need {needed} bytes, got {got}")]
    Truncated { needed: usize, got: usize },
    #[error("length mismatch: header declares {declared} payload bytes, frame carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("unknown packet kind {0:#04x}")]
    UnknownKind(u8),
    #[error("malformed {kind:?} payload")]
    Payload { kind: PacketKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PacketKind {
    SensorData,
    Rna,
    DoneTransmission,
    MotionCommand,
    Start,
}

impl PacketKind {
    pub fn code(self) -> u8 {
        match self {
            PacketKind::SensorData => 1,
            PacketKind::Rna => 2,
            PacketKind::DoneTransmission => 3,
            PacketKind::MotionCommand => 4,
            PacketKind::Start => 5,
        }
    }

    pub fn from_code(code: u8) -> Result<Self, FrameError> {
        Ok(match code {
            1 => PacketKind::SensorData,
            2 => PacketKind::Rna,
            3 => PacketKind::DoneTransmission,
            4 => PacketKind::MotionCommand,
            5 => PacketKind::Start,
            other => return Err(FrameError::UnknownKind(other)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Packet {
    pub kind: PacketKind,
    pub counter: u16,
    pub payload: Vec<u8>,
}

impl Packet {
    pub fn new(kind: PacketKind, counter: u16, payload: Vec<u8>) -> Result<Self, FrameError> {
        if payload.len() > MAX_PAYLOAD {
            return Err(FrameError::Oversize(payload.len()));
        }
        Ok(Self { kind, counter, payload })
    }

    pub fn wire_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn wire_bits(&self) -> u64 {
        8 * self.wire_len() as u64
    }
}

pub fn encode_packet(p: &Packet) -> Result<Vec<u8>, FrameError> {
    if p.payload.len() > MAX_PAYLOAD {
        return Err(FrameError::Oversize(p.payload.len()));
    }
    let mut out = Vec::with_capacity(p.wire_len());
    out.extend_from_slice(&PREAMBLE);
    out.push(p.kind.code());
    out.push(p.payload.len() as u8);
    out.extend_from_slice(&p.counter.to_be_bytes());
    out.extend_from_slice(&p.payload);
    Ok(out)
}

pub fn decode_packet(bytes: &[u8]) -> Result<Packet, FrameError> {
    let pre = bytes.len().min(PREAMBLE.len());
    if bytes[..pre] != PREAMBLE[..pre] {
        return Err(FrameError::BadPreamble);
    }
    if bytes.len() < HEADER_LEN {
        return Err(FrameError::Truncated {
            needed: HEADER_LEN,
            got: bytes.len(),
        });
    }
    let kind = PacketKind::from_code(bytes[4])?;
    let declared = bytes[5] as usize;
    if declared > MAX_PAYLOAD {
        return Err(FrameError::Oversize(declared));
    }
    let counter = u16::from_be_bytes([bytes[6], bytes[7]]);
    let actual = bytes.len() - HEADER_LEN;
    if actual < declared {
        return Err(FrameError::Truncated {
            needed: HEADER_LEN + declared,
            got: bytes.len(),
        });
    }
    if actual > declared {
        return Err(FrameError::LengthMismatch { declared, actual });
    }
    Ok(Packet {
        kind,
        counter,
        payload: bytes[HEADER_LEN..].to_vec(),
    })
}

/// One processed sensor value as carried in a SensorData payload
/// (channel byte followed by an f32, big-endian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub channel: u8,
    pub value: f32,
}

pub const READING_BYTES: usize = 5;

/// Parameters optionally carried by a MotionCommand (axis byte, then the
/// signed heading change in degrees, big-endian). An empty payload is a
/// bare "go" trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotionParams {
    pub axis: u8,
    pub heading_delta_deg: i16,
}

/// Decoded payload view of a [`Packet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Message {
    SensorData(Vec<Reading>),
    Rna(u16),
    DoneTransmission,
    MotionCommand(Option<MotionParams>),
    Start,
}

impl Message {
    pub fn kind(&self) -> PacketKind {
        match self {
            Message::SensorData(_) => PacketKind::SensorData,
            Message::Rna(_) => PacketKind::Rna,
            Message::DoneTransmission => PacketKind::DoneTransmission,
            Message::MotionCommand(_) => PacketKind::MotionCommand,
            Message::Start => PacketKind::Start,
        }
    }

    pub fn to_packet(&self, counter: u16) -> Result<Packet, FrameError> {
        let payload = match self {
            Message::SensorData(readings) => {
                let mut out = Vec::with_capacity(readings.len() * READING_BYTES);
                for r in readings {
                    out.push(r.channel);
                    out.extend_from_slice(&r.value.to_be_bytes());
                }
                out
            }
            Message::Rna(addr) => addr.to_be_bytes().to_vec(),
            Message::MotionCommand(Some(p)) => {
                let mut out = vec![p.axis];
                out.extend_from_slice(&p.heading_delta_deg.to_be_bytes());
                out
            }
            Message::DoneTransmission | Message::MotionCommand(None) | Message::Start => Vec::new(),
        };
        Packet::new(self.kind(), counter, payload)
    }

    pub fn from_packet(p: &Packet) -> Result<Self, FrameError> {
        let bad = || FrameError::Payload { kind: p.kind };
        let b = &p.payload;
        Ok(match p.kind {
            PacketKind::SensorData => {
                if !b.len().is_multiple_of(READING_BYTES) {
                    return Err(bad());
                }
                Message::SensorData(
                    b.chunks_exact(READING_BYTES)
                        .map(|c| Reading {
                            channel: c[0],
                            value: f32::from_be_bytes([c[1], c[2], c[3], c[4]]),
                        })
                        .collect(),
                )
            }
            PacketKind::Rna => match b.as_slice() {
                [hi, lo] => Message::Rna(u16::from_be_bytes([*hi, *lo])),
                _ => return Err(bad()),
            },
            PacketKind::DoneTransmission if b.is_empty() => Message::DoneTransmission,
            PacketKind::Start if b.is_empty() => Message::Start,
            PacketKind::MotionCommand => match b.as_slice() {
                [] => Message::MotionCommand(None),
                [axis, hi, lo] => Message::MotionCommand(Some(MotionParams {
                    axis: *axis,
                    heading_delta_deg: i16::from_be_bytes([*hi, *lo]),
                })),
                _ => return Err(bad()),
            },
            _ => return Err(bad()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_payload_is_header_only() {
        let p = Packet::new(PacketKind::DoneTransmission, 7, vec![]).unwrap();
        let bytes = encode_packet(&p).unwrap();
        assert_eq!(bytes, vec![0xAA, 0x55, 0xAA, 0x55, 3, 0, 0, 7]);
    }

    #[test]
    fn fifo_bound() {
        let p = Packet::new(PacketKind::SensorData, 1, vec![0; MAX_PAYLOAD]).unwrap();
        assert_eq!(encode_packet(&p).unwrap().len(), FIFO_BYTES);
        assert_eq!(
            Packet::new(PacketKind::SensorData, 1, vec![0; 122]),
            Err(FrameError::Oversize(122))
        );
        let sneaky = Packet {
            kind: PacketKind::SensorData,
            counter: 0,
            payload: vec![0; 121],
        };
        assert_eq!(encode_packet(&sneaky), Err(FrameError::Oversize(121)));
    }

    #[test]
    fn decode_errors_are_distinct() {
        let p = Packet::new(PacketKind::Rna, 0x0102, vec![0, 1]).unwrap();
        let good = encode_packet(&p).unwrap();
        assert_eq!(decode_packet(&good).unwrap(), p);

        let mut bad = good.clone();
        bad[1] = 0x00;
        assert_eq!(decode_packet(&bad), Err(FrameError::BadPreamble));
        assert!(matches!(decode_packet(&good[..9]), Err(FrameError::Truncated { .. })));
        assert!(matches!(decode_packet(&good[..3]), Err(FrameError::Truncated { .. })));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(decode_packet(&long), Err(FrameError::LengthMismatch { .. })));
        let mut kind = good;
        kind[4] = 9;
        assert_eq!(decode_packet(&kind), Err(FrameError::UnknownKind(9)));
        assert_eq!(decode_packet(&[]), Err(FrameError::Truncated { needed: 8, got: 0 }));
    }

    #[test]
    fn message_payloads() {
        let msgs = [
            Message::Rna(513),
            Message::DoneTransmission,
            Message::Start,
            Message::MotionCommand(None),
            Message::MotionCommand(Some(MotionParams {
                axis: 0,
                heading_delta_deg: -90,
            })),
            Message::SensorData(vec![
                Reading {
                    channel: 0,
                    value: 7.25,
                },
                Reading {
                    channel: 4,
                    value: -0.5,
                },
            ]),
        ];
        for m in msgs {
            let p = m.to_packet(3).unwrap();
            assert_eq!(Message::from_packet(&p).unwrap(), m);
        }
        let rna = Message::Rna(2).to_packet(0).unwrap();
        assert_eq!(rna.payload, vec![0, 2]);
    }
}
