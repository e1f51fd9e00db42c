//! Wire format, transceiver roles and the relay-node protocol.

pub mod node;
pub mod packet;
pub mod radio;
pub mod rna;
pub mod sensors;

pub use node::{relay_node_step, NodeStep, Outgoing, RelayNode};
pub use packet::{decode_packet, encode_packet, FrameError, Message, MotionParams, Packet, PacketKind, Reading};
pub use radio::{
    deliver, DeliveryOutcome, LinkState, Medium, NodeId, NodeRole, RadioMode, ThroughputBudget, Transceiver,
};
pub use rna::{configuration_lookup, Branch, Configuration, RnaArray, RnaEntry, RnaError};
pub use sensors::{measurement_phase, MeasurementSequencer, SensorBank, SensorError};
