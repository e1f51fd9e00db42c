//! Relay node: an address advertiser (AAT) and a data exchange transceiver
//! (DET) placed above a pipe junction.

use serde::{Deserialize, Serialize};

use super::packet::{FrameError, Message, MotionParams, Packet, PacketKind, Reading};
use super::radio::{NodeId, RadioMode, Transceiver};
use crate::time::SimTime;

pub const DEFAULT_ADVERTISE_INTERVAL_MS: u64 = 100;

/// A frame a node wants on air this step.
#[derive(Debug, Clone, PartialEq)]
pub struct Outgoing {
    pub from: NodeId,
    pub packet: Packet,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeStep {
    pub frames: Vec<Outgoing>,
    pub mode_changes: Vec<(NodeId, RadioMode, RadioMode)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeStatus {
    InService,
    Removed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelayNode {
    pub address: u16,
    pub aat: Transceiver,
    pub det: Transceiver,
    pub advertise_interval: SimTime,
    status: NodeStatus,
    next_advert: SimTime,
    dt_received: bool,
    command: Option<Packet>,
    commands_sent: u32,
    motion: Option<MotionParams>,
    pub readings: Vec<Reading>,
}

impl RelayNode {
    pub fn new(address: u16, advertise_interval: SimTime, motion: Option<MotionParams>) -> Self {
        Self {
            address,
            aat: Transceiver::new(NodeId::Aat(address), RadioMode::Tx),
            det: Transceiver::new(NodeId::Det(address), RadioMode::Rx),
            advertise_interval,
            status: NodeStatus::InService,
            next_advert: SimTime::ZERO,
            dt_received: false,
            command: None,
            commands_sent: 0,
            motion,
            readings: Vec::new(),
        }
    }

    pub fn status(&self) -> NodeStatus {
        self.status
    }

    pub fn in_service(&self) -> bool {
        self.status == NodeStatus::InService
    }

    pub fn commands_sent(&self) -> u32 {
        self.commands_sent
    }

    /// Takes the node out of service; both halves power down.
    pub fn remove_from_service(&mut self) -> Vec<(NodeId, RadioMode, RadioMode)> {
        self.status = NodeStatus::Removed;
        self.command = None;
        let mut changes = Vec::new();
        for t in [&mut self.aat, &mut self.det] {
            if let Some((from, to)) = t.set_mode(RadioMode::Off) {
                changes.push((t.id, from, to));
            }
        }
        changes
    }

    /// Confirms that a frame returned by [`relay_node_step`] went on air.
    pub fn on_air(&mut self, out: &Outgoing) -> Vec<(NodeId, RadioMode, RadioMode)> {
        let mut changes = Vec::new();
        if out.from == self.det.id && out.packet.kind == PacketKind::MotionCommand {
            self.command = None;
            self.commands_sent += 1;
            if let Some((from, to)) = self.det.set_mode(RadioMode::Rx) {
                changes.push((self.det.id, from, to));
            }
        }
        changes
    }
}

/// Advances one node to `now`: drains the DET inbox, advertises on schedule
/// and offers the motion command once DT has arrived.
pub fn relay_node_step(node: &mut RelayNode, now: SimTime) -> Result<NodeStep, FrameError> {
    let mut step = NodeStep::default();
    if !node.in_service() {
        return Ok(step);
    }
    for rx in node.det.take_inbox() {
        match Message::from_packet(&rx.packet) {
            Ok(Message::SensorData(r)) => node.readings.extend(r),
            Ok(Message::DoneTransmission) if !node.dt_received => {
                node.dt_received = true;
                node.command = Some(node.det.frame(&Message::MotionCommand(node.motion))?);
            }
            _ => {}
        }
    }
    if now >= node.next_advert {
        let p = node.aat.frame(&Message::Rna(node.address))?;
        step.frames.push(Outgoing {
            from: node.aat.id,
            packet: p,
        });
        while node.next_advert <= now {
            node.next_advert += node.advertise_interval;
        }
    }
    if let Some(p) = &node.command {
        if let Some((from, to)) = node.det.set_mode(RadioMode::Tx) {
            step.mode_changes.push((node.det.id, from, to));
        }
        step.frames.push(Outgoing {
            from: node.det.id,
            packet: p.clone(),
        });
    }
    Ok(step)
}
