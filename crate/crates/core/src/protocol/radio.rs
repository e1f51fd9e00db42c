//! Half-duplex transceivers sharing one broadcast medium.
//!
//! A frame is delivered to a receiver only when the sender is in `Tx`, the
//! receiver is in `Rx`, the link is up and the channel's sliding one-second
//! budget of 120 kbit admits it. Every transmission raises an interrupt on the
//! sender and every delivery raises one on the receiver.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::packet::{decode_packet, encode_packet, FrameError, Message, Packet};
use crate::time::SimTime;

pub const MAX_RATE_BPS: u64 = 120_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeRole {
    /// Moving transceiver on the robot.
    Mt,
    /// Address advertiser half of a relay node.
    Aat,
    /// Data exchange half of a relay node.
    Det,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RadioMode {
    Tx,
    Rx,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeId {
    Mt,
    Aat(u16),
    Det(u16),
}

impl NodeId {
    pub fn role(self) -> NodeRole {
        match self {
            NodeId::Mt => NodeRole::Mt,
            NodeId::Aat(_) => NodeRole::Aat,
            NodeId::Det(_) => NodeRole::Det,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Mt => write!(f, "MT"),
            NodeId::Aat(a) => write!(f, "AAT{a}"),
            NodeId::Det(a) => write!(f, "DET{a}"),
        }
    }
}

impl FromStr for NodeId {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "MT" {
            return Ok(NodeId::Mt);
        }
        let parse = |rest: &str| rest.parse::<u16>().map_err(|e| format!("bad node id {s}: {e}"));
        if let Some(rest) = s.strip_prefix("AAT") {
            return Ok(NodeId::Aat(parse(rest)?));
        }
        if let Some(rest) = s.strip_prefix("DET") {
            return Ok(NodeId::Det(parse(rest)?));
        }
        Err(format!("bad node id {s}"))
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Received {
    pub at: SimTime,
    pub packet: Packet,
    pub rss_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transceiver {
    pub id: NodeId,
    mode: RadioMode,
    counter: u16,
    pub rx_interrupts: u64,
    pub tx_interrupts: u64,
    inbox: VecDeque<Received>,
}

impl Transceiver {
    pub fn new(id: NodeId, mode: RadioMode) -> Self {
        Self {
            id,
            mode,
            counter: 0,
            rx_interrupts: 0,
            tx_interrupts: 0,
            inbox: VecDeque::new(),
        }
    }

    pub fn mode(&self) -> RadioMode {
        self.mode
    }

    /// Switches mode, returning `(from, to)` when it actually changed.
    pub fn set_mode(&mut self, mode: RadioMode) -> Option<(RadioMode, RadioMode)> {
        if self.mode == mode {
            return None;
        }
        let from = self.mode;
        self.mode = mode;
        Some((from, mode))
    }

    /// Builds the next frame of this sender's session; counters increase by
    /// one per frame.
    pub fn frame(&mut self, msg: &Message) -> Result<Packet, FrameError> {
        let p = msg.to_packet(self.counter)?;
        self.counter = self.counter.wrapping_add(1);
        Ok(p)
    }

    pub fn take_inbox(&mut self) -> Vec<Received> {
        self.inbox.drain(..).collect()
    }

    pub fn inbox_len(&self) -> usize {
        self.inbox.len()
    }
}

/// Sliding-window rate limiter: at most `capacity_bits` in any window of
/// length `window`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputBudget {
    pub capacity_bits: u64,
    pub window: SimTime,
    log: VecDeque<(SimTime, u64)>,
    in_window: u64,
}

impl Default for ThroughputBudget {
    fn default() -> Self {
        Self::new(MAX_RATE_BPS, SimTime::from_millis(1_000))
    }
}

impl ThroughputBudget {
    pub fn new(capacity_bits: u64, window: SimTime) -> Self {
        Self {
            capacity_bits,
            window,
            log: VecDeque::new(),
            in_window: 0,
        }
    }

    fn evict(&mut self, now: SimTime) {
        while let Some(&(t, bits)) = self.log.front() {
            if t + self.window <= now {
                self.log.pop_front();
                self.in_window -= bits;
            } else {
                break;
            }
        }
    }

    /// Charges `bits` at `now` if the window has room.
    pub fn admit(&mut self, now: SimTime, bits: u64) -> bool {
        self.evict(now);
        if self.in_window + bits > self.capacity_bits {
            return false;
        }
        self.log.push_back((now, bits));
        self.in_window += bits;
        true
    }

    pub fn used(&mut self, now: SimTime) -> u64 {
        self.evict(now);
        self.in_window
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DeliveryOutcome {
    Delivered,
    SenderNotTx,
    Throttled,
    ReceiverNotRx,
    LinkDown,
    Corrupt,
}

/// Delivery decision for a single sender/receiver pair; charges the budget
/// when the frame goes on air.
pub fn deliver(
    packet: &Packet,
    sender_mode: RadioMode,
    receiver_mode: RadioMode,
    link: bool,
    budget: &mut ThroughputBudget,
    now: SimTime,
) -> DeliveryOutcome {
    if sender_mode != RadioMode::Tx {
        return DeliveryOutcome::SenderNotTx;
    }
    if !budget.admit(now, packet.wire_bits()) {
        return DeliveryOutcome::Throttled;
    }
    if receiver_mode != RadioMode::Rx {
        return DeliveryOutcome::ReceiverNotRx;
    }
    if !link {
        return DeliveryOutcome::LinkDown;
    }
    DeliveryOutcome::Delivered
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    pub up: bool,
    pub rss_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastReport {
    /// Whether the frame went on air at all.
    pub on_air: bool,
    pub sender_outcome: Option<DeliveryOutcome>,
    pub receivers: Vec<(NodeId, DeliveryOutcome, f64)>,
}

/// The shared radio channel.
#[derive(Debug, Clone, Default)]
pub struct Medium {
    pub budget: ThroughputBudget,
}

impl Medium {
    /// Sends `packet` from `sender` to every listed receiver. The frame is
    /// serialized once and each receiver decodes its own copy.
    pub fn broadcast<'a>(
        &mut self,
        now: SimTime,
        sender: &mut Transceiver,
        packet: &Packet,
        receivers: impl IntoIterator<Item = (&'a mut Transceiver, LinkState)>,
    ) -> BroadcastReport {
        if sender.mode != RadioMode::Tx {
            return BroadcastReport {
                on_air: false,
                sender_outcome: Some(DeliveryOutcome::SenderNotTx),
                receivers: Vec::new(),
            };
        }
        let bytes = match encode_packet(packet) {
            Ok(b) => b,
            Err(_) => {
                return BroadcastReport {
                    on_air: false,
                    sender_outcome: Some(DeliveryOutcome::Corrupt),
                    receivers: Vec::new(),
                }
            }
        };
        if !self.budget.admit(now, 8 * bytes.len() as u64) {
            return BroadcastReport {
                on_air: false,
                sender_outcome: Some(DeliveryOutcome::Throttled),
                receivers: Vec::new(),
            };
        }
        sender.tx_interrupts += 1;
        let mut out = Vec::new();
        for (rx, link) in receivers {
            let outcome = if rx.mode != RadioMode::Rx {
                DeliveryOutcome::ReceiverNotRx
            } else if !link.up {
                DeliveryOutcome::LinkDown
            } else {
                match decode_packet(&bytes) {
                    Ok(p) => {
                        rx.rx_interrupts += 1;
                        rx.inbox.push_back(Received {
                            at: now,
                            packet: p,
                            rss_dbm: link.rss_dbm,
                        });
                        DeliveryOutcome::Delivered
                    }
                    Err(_) => DeliveryOutcome::Corrupt,
                }
            };
            out.push((rx.id, outcome, link.rss_dbm));
        }
        BroadcastReport {
            on_air: true,
            sender_outcome: None,
            receivers: out,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::packet::PacketKind;

    fn frame() -> Packet {
        Packet::new(PacketKind::SensorData, 0, vec![1; 20]).unwrap()
    }

    #[test]
    fn half_duplex() {
        let mut b = ThroughputBudget::default();
        let p = frame();
        let now = SimTime::ZERO;
        assert_eq!(
            deliver(&p, RadioMode::Tx, RadioMode::Rx, true, &mut b, now),
            DeliveryOutcome::Delivered
        );
        assert_eq!(
            deliver(&p, RadioMode::Tx, RadioMode::Tx, true, &mut b, now),
            DeliveryOutcome::ReceiverNotRx
        );
        assert_eq!(
            deliver(&p, RadioMode::Rx, RadioMode::Rx, true, &mut b, now),
            DeliveryOutcome::SenderNotTx
        );
        assert_eq!(
            deliver(&p, RadioMode::Tx, RadioMode::Rx, false, &mut b, now),
            DeliveryOutcome::LinkDown
        );
    }

    #[test]
    fn budget_window() {
        let mut b = ThroughputBudget::new(1000, SimTime::from_millis(1000));
        assert!(b.admit(SimTime::from_millis(0), 600));
        assert!(!b.admit(SimTime::from_millis(500), 600));
        assert!(b.admit(SimTime::from_millis(999), 400));
        assert!(!b.admit(SimTime::from_millis(999), 1));
        assert!(b.admit(SimTime::from_millis(1000), 600));
        assert_eq!(b.used(SimTime::from_millis(1000)), 1000);
    }

    #[test]
    fn node_id_text_round_trip() {
        for id in [NodeId::Mt, NodeId::Aat(3), NodeId::Det(65535)] {
            assert_eq!(id.to_string().parse::<NodeId>().unwrap(), id);
        }
        assert!("XYZ1".parse::<NodeId>().is_err());
    }

    #[test]
    fn broadcast_counts_interrupts() {
        let mut m = Medium::default();
        let mut tx = Transceiver::new(NodeId::Mt, RadioMode::Tx);
        let mut a = Transceiver::new(NodeId::Det(1), RadioMode::Rx);
        let mut c = Transceiver::new(NodeId::Det(2), RadioMode::Tx);
        let up = LinkState {
            up: true,
            rss_dbm: -70.0,
        };
        let p = tx.frame(&Message::Start).unwrap();
        let r = m.broadcast(SimTime::ZERO, &mut tx, &p, [(&mut a, up), (&mut c, up)]);
        assert!(r.on_air);
        assert_eq!(tx.tx_interrupts, 1);
        assert_eq!(a.rx_interrupts, 1);
        assert_eq!(c.rx_interrupts, 0);
        assert_eq!(a.take_inbox()[0].packet, p);
    }
}
