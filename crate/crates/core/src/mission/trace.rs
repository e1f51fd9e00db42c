//! Mission event log, serialized as JSON lines of `{"t", "kind", "detail"}`.

use std::io::{self, BufRead, Write};

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::protocol::packet::PacketKind;
use crate::protocol::radio::{DeliveryOutcome, NodeId, RadioMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    P1StraightNoComms,
    P2EstablishComms,
    P3MeasureTransmit,
    P4ReceiveCommand,
    P5Steer,
    Done,
    Fault,
}

impl Phase {
    pub fn code(self) -> char {
        match self {
            Phase::P1StraightNoComms => '1',
            Phase::P2EstablishComms => '2',
            Phase::P3MeasureTransmit => '3',
            Phase::P4ReceiveCommand => '4',
            Phase::P5Steer => '5',
            Phase::Done => 'D',
            Phase::Fault => 'F',
        }
    }

    pub fn is_terminal(self) -> bool {
        matches!(self, Phase::Done | Phase::Fault)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FaultKind {
    Collapse,
    SteeringTimeout,
    Watchdog,
    MissedRelay,
    UnexpectedRelay,
    MissionTimeout,
    Protocol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InterruptCause {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail")]
pub enum Event {
    PhaseChange {
        from: Option<Phase>,
        to: Phase,
        trigger: String,
    },
    RadioTx {
        node: NodeId,
        packet: PacketKind,
        counter: u16,
        bits: u64,
        /// `None` when the frame went on air.
        refused: Option<DeliveryOutcome>,
    },
    RadioRx {
        node: NodeId,
        from: NodeId,
        packet: PacketKind,
        counter: u16,
        rss_dbm: f64,
    },
    Interrupt {
        node: NodeId,
        cause: InterruptCause,
    },
    RadioMode {
        node: NodeId,
        from: RadioMode,
        to: RadioMode,
    },
    SensorSample {
        channel: usize,
        counts: u16,
        value: f64,
        valid: bool,
    },
    StateSnapshot {
        segment: usize,
        x: f64,
        x_dot: f64,
        phi_deg: f64,
        psi_deg: f64,
        yaw_deg: i32,
        phase: Phase,
    },
    Fault {
        fault: FaultKind,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub t: f64,
    #[serde(flatten)]
    pub event: Event,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MissionTrace {
    pub events: Vec<TraceEvent>,
}

pub const DONE_PATTERN: &str = r"^(12345)*1?D$";
pub const FAULT_PATTERN: &str = r"^(12345)*(1(2(3(4(5)?)?)?)?)?F$";

impl MissionTrace {
    /// Appends an event; time never runs backwards.
    pub fn push(&mut self, t: f64, event: Event) {
        if let Some(last) = self.events.last() {
            debug_assert!(t >= last.t, "trace time went backwards: {t} < {}", last.t);
        }
        self.events.push(TraceEvent { t, event });
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("JSON is UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(r: R) -> io::Result<Self> {
        let mut events = Vec::new();
        for line in r.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line).map_err(io::Error::other)?);
        }
        Ok(Self { events })
    }

    pub fn phases(&self) -> Vec<Phase> {
        self.events
            .iter()
            .filter_map(|e| match &e.event {
                Event::PhaseChange { to, .. } => Some(*to),
                _ => None,
            })
            .collect()
    }

    /// Phase codes in order of entry, e.g. `"123451D"`.
    pub fn phase_string(&self) -> String {
        self.phases().into_iter().map(Phase::code).collect()
    }

    pub fn phase_order_ok(&self) -> bool {
        let s = self.phase_string();
        let done = Regex::new(DONE_PATTERN).expect("static pattern");
        let fault = Regex::new(FAULT_PATTERN).expect("static pattern");
        done.is_match(&s) || fault.is_match(&s)
    }

    pub fn final_phase(&self) -> Option<Phase> {
        self.phases().last().copied()
    }

    /// Times at which each phase was entered, paired with the phase.
    pub fn phase_entries(&self) -> Vec<(f64, Phase)> {
        self.events
            .iter()
            .filter_map(|e| match &e.event {
                Event::PhaseChange { to, .. } => Some((e.t, *to)),
                _ => None,
            })
            .collect()
    }
}
