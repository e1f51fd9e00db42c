//! Simulator for an in-pipe inspection robot that navigates a water network
//! by talking to relay nodes buried above pipe junctions.

pub mod characterization;
pub mod control;
pub mod mission;
pub mod plant;
pub mod protocol;
pub mod rfchannel;
pub mod time;
