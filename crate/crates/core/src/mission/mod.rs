//! Pipe-network world model and the five-phase mission supervisor.

pub mod config;
pub mod map;
pub mod scenario;
pub mod sim;
pub mod trace;

pub use config::{ConfigError, MissionConfig, MissionParams, RangefinderConfig, SweepConfig};
pub use map::{rangefinder_read, DepthProfile, Junction, JunctionKind, MapError, PipeMap, RelayPlacement, Segment};
pub use scenario::{premature_stop_scenario, StopDistribution, StopSample, StopSummary};
pub use sim::{run_mission, MissionRun, MissionSummary, Simulator, StopRecord};
pub use trace::{Event, FaultKind, MissionTrace, Phase, TraceEvent};
