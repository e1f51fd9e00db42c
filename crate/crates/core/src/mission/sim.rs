//! Fixed-step mission scheduler.
//!
//! Each 1 ms tick: relay nodes advertise and answer, the robot's current
//! phase reacts to what the MT heard, the controller for that phase computes
//! motor voltages, and the plant advances. Radio propagation is instantaneous
//! within a tick.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::config::{ConfigError, MissionConfig};
use super::map::{rangefinder_read, PipeMap};
use super::trace::{Event, FaultKind, InterruptCause, MissionTrace, Phase};
use crate::control::{ControllerGains, LqrPidController, Steerer, SteeringParams, SteeringPlan};
use crate::plant::{Plant, PlantConfig, RobotState};
use crate::protocol::node::{relay_node_step, RelayNode};
use crate::protocol::packet::{Message, Packet, PacketKind};
use crate::protocol::radio::{BroadcastReport, LinkState, Medium, NodeId, RadioMode, Transceiver};
use crate::protocol::rna::{configuration_lookup, Configuration, RnaArray, RnaError};
use crate::protocol::sensors::{MeasurementSequencer, SensorBank, SequencerEvent};
use crate::rfchannel::Channel;
use crate::time::SimTime;

/// Independent random streams, one per consumer, so enabling one noise
/// source never perturbs another.
mod stream {
    pub const RF: u64 = 1;
    pub const RANGEFINDER: u64 = 2;
    pub const SENSORS: u64 = 3;
    pub const OBSERVER: u64 = 4;
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRecord {
    pub junction: usize,
    pub address: u16,
    pub trigger_t: f64,
    /// Distance before the junction when the triggering Rna decoded (m).
    pub trigger_distance_m: f64,
    pub trigger_rss_dbm: f64,
    pub trigger_depth_cm: f64,
    pub rest_t: f64,
    /// Distance before the junction once the robot came to rest (m).
    pub rest_distance_m: f64,
    pub rest_speed: f64,
    pub rest_phi_deg: f64,
    pub rest_psi_deg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InterruptCount {
    pub tx: u64,
    pub rx: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PacketCounts {
    pub on_air: u64,
    pub refused: u64,
    pub delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub segment: usize,
    pub x: f64,
    pub x_dot: f64,
    pub phi_deg: f64,
    pub psi_deg: f64,
    pub yaw_deg: i32,
    pub pitch_deg: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionSummary {
    pub name: String,
    pub seed: u64,
    pub outcome: Phase,
    pub fault: Option<FaultKind>,
    pub duration_s: f64,
    pub phase_sequence: String,
    /// Total time spent in each phase (s).
    pub phase_durations: BTreeMap<String, f64>,
    pub stops: Vec<StopRecord>,
    pub packets: PacketCounts,
    pub interrupts: BTreeMap<String, InterruptCount>,
    pub final_state: FinalState,
}

#[derive(Debug, Clone)]
pub struct MissionRun {
    pub trace: MissionTrace,
    pub summary: MissionSummary,
}

#[derive(Debug, Clone, Copy)]
struct Trigger {
    junction: usize,
    address: u16,
    configuration: Configuration,
    t: f64,
    distance: f64,
    rss: f64,
    depth: f64,
}

enum PhaseState {
    Cruise {
        pending: Option<Trigger>,
        braking: bool,
        rest_since: Option<SimTime>,
    },
    Stop {
        trigger: Option<Trigger>,
        rest_since: Option<SimTime>,
    },
    Measure {
        trigger: Trigger,
        seq: MeasurementSequencer,
    },
    AwaitCommand {
        trigger: Trigger,
    },
    Steer {
        steerer: Box<Steerer>,
    },
    Finished,
}

/// The whole simulated world, advanced one tick at a time.
pub struct Simulator {
    pub map: PipeMap,
    rna: RnaArray,
    sensors: SensorBank,
    params: super::config::MissionParams,
    steering: SteeringParams,
    plant: Plant,
    controller: LqrPidController,
    channel: Channel,
    medium: Medium,
    mt: Transceiver,
    nodes: Vec<RelayNode>,
    phase: Phase,
    state: PhaseState,
    phase_entered: SimTime,
    now: SimTime,
    dt: SimTime,
    trace: MissionTrace,
    rng_rf: ChaCha8Rng,
    rng_range: ChaCha8Rng,
    rng_sensor: ChaCha8Rng,
    rng_obs: ChaCha8Rng,
    observer: Option<Normal<f64>>,
    next_snapshot: SimTime,
    stops: Vec<StopRecord>,
    packets: PacketCounts,
    fault: Option<FaultKind>,
    phase_time: BTreeMap<String, SimTime>,
    name: String,
    seed: u64,
}

impl Simulator {
    pub fn new(cfg: &MissionConfig, seed: u64) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let plant_cfg: PlantConfig = cfg.plant.build()?;
        let gains = ControllerGains::synthesize(&cfg.control, &plant_cfg)?;
        let p = &cfg.mission;
        let initial = RobotState::with_tilt(p.initial_phi_deg.to_radians(), p.initial_psi_deg.to_radians());
        let dt = SimTime::from_secs_f64(plant_cfg.dt);
        let interval = SimTime::from_millis(p.advertise_interval_ms);
        let nodes = cfg
            .map
            .junctions
            .iter()
            .filter_map(|j| j.relay_node)
            .map(|r| RelayNode::new(r.address, interval, None))
            .collect();
        let observer = (p.observer_noise_deg > 0.0)
            .then(|| Normal::new(0.0, p.observer_noise_deg.to_radians()).expect("validated"));
        let mut sim = Self {
            map: cfg.map.clone(),
            rna: cfg.rna.clone(),
            sensors: cfg.sensors.clone(),
            params: *p,
            steering: cfg.control.steering,
            plant: Plant::new(plant_cfg, initial),
            controller: LqrPidController::new(gains),
            channel: Channel::new(&cfg.rf)?,
            medium: Medium::default(),
            mt: Transceiver::new(NodeId::Mt, RadioMode::Off),
            nodes,
            phase: Phase::P1StraightNoComms,
            state: PhaseState::Cruise {
                pending: None,
                braking: false,
                rest_since: None,
            },
            phase_entered: SimTime::ZERO,
            now: SimTime::ZERO,
            dt,
            trace: MissionTrace::default(),
            rng_rf: rng_for(seed, stream::RF),
            rng_range: rng_for(seed, stream::RANGEFINDER),
            rng_sensor: rng_for(seed, stream::SENSORS),
            rng_obs: rng_for(seed, stream::OBSERVER),
            observer,
            next_snapshot: SimTime::ZERO,
            stops: Vec::new(),
            packets: PacketCounts::default(),
            fault: None,
            phase_time: BTreeMap::new(),
            name: cfg.name.clone(),
            seed,
        };
        sim.log(Event::PhaseChange {
            from: None,
            to: Phase::P1StraightNoComms,
            trigger: "mission start".into(),
        });
        sim.set_mt_mode(RadioMode::Rx);
        sim.snapshot();
        Ok(sim)
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn robot(&self) -> &RobotState {
        &self.plant.state
    }

    pub fn stops(&self) -> &[StopRecord] {
        &self.stops
    }

    pub fn is_finished(&self) -> bool {
        self.phase.is_terminal()
    }

    pub fn trace(&self) -> &MissionTrace {
        &self.trace
    }

    pub fn relay_nodes(&self) -> &[RelayNode] {
        &self.nodes
    }

    pub fn mt(&self) -> &Transceiver {
        &self.mt
    }

    fn t(&self) -> f64 {
        self.now.as_secs_f64()
    }

    fn log(&mut self, e: Event) {
        let t = self.t();
        self.trace.push(t, e);
    }

    fn set_mt_mode(&mut self, mode: RadioMode) {
        if let Some((from, to)) = self.mt.set_mode(mode) {
            self.log(Event::RadioMode {
                node: NodeId::Mt,
                from,
                to,
            });
        }
    }

    fn enter(&mut self, to: Phase, trigger: impl Into<String>) {
        let spent = self.now.saturating_sub(self.phase_entered);
        *self.phase_time.entry(format!("{:?}", self.phase)).or_default() += spent;
        let from = self.phase;
        self.phase = to;
        self.phase_entered = self.now;
        self.log(Event::PhaseChange {
            from: Some(from),
            to,
            trigger: trigger.into(),
        });
    }

    fn fail(&mut self, fault: FaultKind, message: impl Into<String>) {
        self.log(Event::Fault {
            fault,
            message: message.into(),
        });
        self.fault = Some(fault);
        self.state = PhaseState::Finished;
        self.enter(Phase::Fault, format!("{fault:?}"));
    }

    fn snapshot(&mut self) {
        let s = &self.plant.state;
        let e = Event::StateSnapshot {
            segment: s.heading.segment,
            x: s.x,
            x_dot: s.x_dot,
            phi_deg: s.phi.to_degrees(),
            psi_deg: s.psi.to_degrees(),
            yaw_deg: s.heading.yaw_deg,
            phase: self.phase,
        };
        self.log(e);
        self.next_snapshot += SimTime::from_secs_f64(self.params.snapshot_interval_s);
    }

    fn segment(&self) -> usize {
        self.plant.state.heading.segment
    }

    fn to_junction(&self) -> f64 {
        self.map.segments[self.segment()].length_m - self.plant.state.x
    }

    fn link_to(&mut self, node: usize) -> (LinkState, f64) {
        let geom = self.map.link_geometry(self.segment(), self.plant.state.x, node);
        let rss = self.channel.sample_rss(geom, &mut self.rng_rf);
        (
            LinkState {
                up: self.channel.decodes(rss),
                rss_dbm: rss,
            },
            geom.depth_cm,
        )
    }

    fn log_broadcast(&mut self, from: NodeId, packet: &Packet, report: &BroadcastReport) {
        self.log(Event::RadioTx {
            node: from,
            packet: packet.kind,
            counter: packet.counter,
            bits: packet.wire_bits(),
            refused: report.sender_outcome,
        });
        if !report.on_air {
            self.packets.refused += 1;
            return;
        }
        self.packets.on_air += 1;
        self.log(Event::Interrupt {
            node: from,
            cause: InterruptCause::Tx,
        });
        for &(rx, outcome, rss) in &report.receivers {
            if outcome == crate::protocol::radio::DeliveryOutcome::Delivered {
                self.packets.delivered += 1;
                self.log(Event::RadioRx {
                    node: rx,
                    from,
                    packet: packet.kind,
                    counter: packet.counter,
                    rss_dbm: rss,
                });
                self.log(Event::Interrupt {
                    node: rx,
                    cause: InterruptCause::Rx,
                });
            }
        }
    }

    /// Relay nodes advertise and answer; every frame is offered to the MT.
    fn step_nodes(&mut self) {
        for k in 0..self.nodes.len() {
            let step = match relay_node_step(&mut self.nodes[k], self.now) {
                Ok(s) => s,
                Err(e) => return self.fail(FaultKind::Protocol, e.to_string()),
            };
            for (node, from, to) in step.mode_changes {
                self.log(Event::RadioMode { node, from, to });
            }
            for out in step.frames {
                let (link, _) = self.link_to(k);
                let node = &mut self.nodes[k];
                let sender = if out.from == node.aat.id {
                    &mut node.aat
                } else {
                    &mut node.det
                };
                let report = self
                    .medium
                    .broadcast(self.now, sender, &out.packet, [(&mut self.mt, link)]);
                if report.on_air {
                    let changes = self.nodes[k].on_air(&out);
                    for (node, from, to) in changes {
                        self.log(Event::RadioMode { node, from, to });
                    }
                }
                self.log_broadcast(out.from, &out.packet, &report);
            }
        }
    }

    /// Sends an MT frame to every in-service DET; returns whether it went on air.
    fn mt_send(&mut self, packet: &Packet) -> bool {
        let links: Vec<LinkState> = (0..self.nodes.len()).map(|k| self.link_to(k).0).collect();
        let receivers = self
            .nodes
            .iter_mut()
            .zip(links)
            .filter(|(n, _)| n.in_service())
            .map(|(n, l)| (&mut n.det, l));
        let report = self.medium.broadcast(self.now, &mut self.mt, packet, receivers);
        self.log_broadcast(NodeId::Mt, packet, &report);
        report.on_air
    }

    fn observed(&mut self) -> RobotState {
        let mut s = self.plant.state.clone();
        if let Some(n) = &self.observer {
            s.phi += n.sample(&mut self.rng_obs);
            s.psi += n.sample(&mut self.rng_obs);
        }
        s
    }

    fn at_rest(&mut self, since: &mut Option<SimTime>) -> bool {
        if self.plant.state.x_dot.abs() >= self.params.rest_speed {
            *since = None;
            return false;
        }
        let start = *since.get_or_insert(self.now);
        self.now.saturating_sub(start).as_secs_f64() >= self.params.rest_hold_s
    }

    fn decode_trigger(&mut self) -> Option<Result<Trigger, RnaError>> {
        let rx = self.mt.take_inbox();
        let first = rx.into_iter().find_map(|r| match Message::from_packet(&r.packet) {
            Ok(Message::Rna(addr)) => Some((addr, r.rss_dbm)),
            _ => None,
        })?;
        let (addr, rss) = first;
        Some(configuration_lookup(addr, &self.rna).map(|l| {
            let seg = self.segment();
            Trigger {
                junction: l.index,
                address: addr,
                configuration: l.configuration,
                t: self.t(),
                distance: self.to_junction(),
                rss,
                depth: self.map.link_geometry(seg, self.plant.state.x, l.index).depth_cm,
            }
        }))
    }

    fn begin_stop(&mut self, trigger: Option<Trigger>, why: String) {
        self.state = PhaseState::Stop {
            trigger,
            rest_since: None,
        };
        self.enter(Phase::P2EstablishComms, why);
    }

    /// Phase logic; returns the desired forward speed when the straight-line
    /// controller should drive, or `None` when steering owns the motors.
    fn step_phase(&mut self) -> Option<[f64; 3]> {
        let dt = self.dt.as_secs_f64();
        let state = std::mem::replace(&mut self.state, PhaseState::Finished);
        let mut v_desired = 0.0;
        let next = match state {
            PhaseState::Cruise {
                mut pending,
                mut braking,
                mut rest_since,
            } => {
                let last_segment = self.segment() + 1 == self.map.segments.len();
                if pending.is_none() && !braking {
                    match self.decode_trigger() {
                        Some(Ok(t)) if t.junction != self.segment() => {
                            self.fail(
                                FaultKind::UnexpectedRelay,
                                format!("heard RNA {} on segment {}", t.address, self.segment()),
                            );
                            return None;
                        }
                        Some(Ok(t)) => {
                            if self.params.rangefinder.enabled {
                                self.set_mt_mode(RadioMode::Off);
                                pending = Some(t);
                            } else {
                                self.begin_stop(Some(t), format!("RNA {} decoded", t.address));
                                return self.step_phase();
                            }
                        }
                        Some(Err(e)) => {
                            self.begin_stop(None, e.to_string());
                            return self.step_phase();
                        }
                        None => {}
                    }
                }
                if let Some(t) = pending {
                    let sigma = self.params.rangefinder.noise_sigma_m;
                    let d = rangefinder_read(&self.plant.state, &self.map, sigma, &mut self.rng_range);
                    if d < self.params.rangefinder.threshold_m {
                        self.begin_stop(Some(t), format!("rangefinder {d:.3} m after RNA {}", t.address));
                        return self.step_phase();
                    }
                }
                if self.to_junction() <= 0.0 {
                    if last_segment {
                        braking = true;
                    } else if pending.is_none() {
                        self.fail(
                            FaultKind::MissedRelay,
                            format!("reached junction {} without an RNA", self.segment()),
                        );
                        return None;
                    }
                }
                if braking {
                    if self.at_rest(&mut rest_since) {
                        self.state = PhaseState::Finished;
                        self.enter(Phase::Done, "reached end of map");
                        return Some([0.0; 3]);
                    }
                } else {
                    v_desired = self.params.cruise_speed;
                }
                PhaseState::Cruise {
                    pending,
                    braking,
                    rest_since,
                }
            }
            PhaseState::Stop {
                trigger,
                mut rest_since,
            } => {
                self.mt.take_inbox();
                match trigger {
                    None => {
                        if self.now.saturating_sub(self.phase_entered).as_secs_f64() > self.params.watchdog_s {
                            self.fail(FaultKind::Watchdog, "holding on an unknown RNA");
                            return None;
                        }
                        PhaseState::Stop { trigger, rest_since }
                    }
                    Some(t) => {
                        if self.at_rest(&mut rest_since) {
                            let s = &self.plant.state;
                            self.stops.push(StopRecord {
                                junction: t.junction,
                                address: t.address,
                                trigger_t: t.t,
                                trigger_distance_m: t.distance,
                                trigger_rss_dbm: t.rss,
                                trigger_depth_cm: t.depth,
                                rest_t: self.t(),
                                rest_distance_m: self.to_junction(),
                                rest_speed: s.x_dot,
                                rest_phi_deg: s.phi.to_degrees(),
                                rest_psi_deg: s.psi.to_degrees(),
                            });
                            self.set_mt_mode(RadioMode::Tx);
                            let mut seq = MeasurementSequencer::new();
                            seq.start(self.now).expect("fresh sequencer");
                            self.enter(
                                Phase::P3MeasureTransmit,
                                format!("{} identified, robot at rest", t.configuration.name()),
                            );
                            PhaseState::Measure { trigger: t, seq }
                        } else {
                            PhaseState::Stop { trigger, rest_since }
                        }
                    }
                }
            }
            PhaseState::Measure { trigger, mut seq } => {
                let mut next = None;
                loop {
                    let ev = match seq.poll(self.now, &self.sensors, &mut self.mt, &mut self.rng_sensor) {
                        Ok(ev) => ev,
                        Err(e) => {
                            self.fail(FaultKind::Protocol, e.to_string());
                            return None;
                        }
                    };
                    match ev {
                        None | Some(SequencerEvent::PumpOn) => break,
                        Some(SequencerEvent::Sampled(samples)) => {
                            for s in samples {
                                self.log(Event::SensorSample {
                                    channel: s.channel,
                                    counts: s.counts,
                                    value: s.value,
                                    valid: s.valid,
                                });
                            }
                        }
                        Some(SequencerEvent::Transmit(p)) => {
                            let sent = self.mt_send(&p);
                            if sent {
                                seq.sent();
                            }
                            // one frame per tick; after DT the MT turns to Rx at once
                            if !(sent && p.kind == PacketKind::DoneTransmission) {
                                break;
                            }
                        }
                        Some(SequencerEvent::Completed { mode_change }) => {
                            if let Some((from, to)) = mode_change {
                                self.log(Event::RadioMode {
                                    node: NodeId::Mt,
                                    from,
                                    to,
                                });
                            }
                            self.enter(Phase::P4ReceiveCommand, "done transmission sent");
                            next = Some(PhaseState::AwaitCommand { trigger });
                            break;
                        }
                    }
                }
                next.unwrap_or(PhaseState::Measure { trigger, seq })
            }
            PhaseState::AwaitCommand { trigger } => {
                let got = self
                    .mt
                    .take_inbox()
                    .into_iter()
                    .any(|r| matches!(Message::from_packet(&r.packet), Ok(Message::MotionCommand(_))));
                if got {
                    let changes = self.nodes[trigger.junction].remove_from_service();
                    for (node, from, to) in changes {
                        self.log(Event::RadioMode { node, from, to });
                    }
                    self.set_mt_mode(RadioMode::Off);
                    let seg = self.segment();
                    let plan = match SteeringPlan::for_configuration(
                        &trigger.configuration,
                        self.map.segments[seg].diameter_m,
                        self.steering,
                    ) {
                        Ok(p) => p,
                        Err(e) => {
                            self.fail(FaultKind::Protocol, e.to_string());
                            return None;
                        }
                    };
                    self.enter(Phase::P5Steer, "motion command received");
                    self.state = PhaseState::Steer {
                        steerer: Box::new(Steerer::new(plan)),
                    };
                    return self.step_phase();
                }
                if self.now.saturating_sub(self.phase_entered).as_secs_f64() > self.params.watchdog_s {
                    self.fail(FaultKind::Watchdog, "no motion command after DT");
                    return None;
                }
                PhaseState::AwaitCommand { trigger }
            }
            PhaseState::Steer { mut steerer } => {
                let r = self.plant.cfg.wheel_radius;
                match steerer.step(&self.plant.state, r, dt) {
                    Err(e) => {
                        self.fail(FaultKind::SteeringTimeout, e.to_string());
                        return None;
                    }
                    Ok(out) if out.done => {
                        let s = &mut self.plant.state;
                        s.heading = steerer.plan.heading_after(s.heading);
                        s.heading.segment += 1;
                        s.x = 0.0;
                        self.controller.reset();
                        self.set_mt_mode(RadioMode::Rx);
                        self.mt.take_inbox();
                        self.state = PhaseState::Cruise {
                            pending: None,
                            braking: false,
                            rest_since: None,
                        };
                        self.enter(Phase::P1StraightNoComms, "rotation complete");
                        return Some(out.voltages);
                    }
                    Ok(out) => {
                        self.state = PhaseState::Steer { steerer };
                        return Some(out.voltages);
                    }
                }
            }
            PhaseState::Finished => PhaseState::Finished,
        };
        self.state = next;
        if self.phase.is_terminal() {
            return Some([0.0; 3]);
        }
        let obs = self.observed();
        Some(self.controller.step(&obs, v_desired, dt))
    }

    /// Advances the world by one tick.
    pub fn step(&mut self) {
        if self.is_finished() {
            return;
        }
        self.now += self.dt;
        self.step_nodes();
        if self.is_finished() {
            return;
        }
        let Some(voltages) = self.step_phase() else {
            return;
        };
        if self.is_finished() {
            self.snapshot();
            return;
        }
        if let Err(e) = self.plant.step(voltages) {
            return self.fail(FaultKind::Collapse, e.to_string());
        }
        let s = &self.plant.state;
        let limit = self.params.collapse_deg.to_radians();
        if s.phi.abs() > limit || s.psi.abs() > limit {
            let msg = format!("tilt phi {:.1} psi {:.1} deg", s.phi.to_degrees(), s.psi.to_degrees());
            return self.fail(FaultKind::Collapse, msg);
        }
        if self.now >= self.next_snapshot {
            self.snapshot();
        }
        if self.t() >= self.params.max_time_s {
            self.fail(
                FaultKind::MissionTimeout,
                format!("exceeded {} s", self.params.max_time_s),
            );
        }
    }

    pub fn summary(&self) -> MissionSummary {
        let mut phase_time = self.phase_time.clone();
        if !self.is_finished() {
            *phase_time.entry(format!("{:?}", self.phase)).or_default() += self.now.saturating_sub(self.phase_entered);
        }
        let phase_durations = phase_time.into_iter().map(|(k, v)| (k, v.as_secs_f64())).collect();
        let mut interrupts = BTreeMap::new();
        let mut add = |t: &Transceiver| {
            interrupts.insert(
                t.id.to_string(),
                InterruptCount {
                    tx: t.tx_interrupts,
                    rx: t.rx_interrupts,
                },
            );
        };
        add(&self.mt);
        for n in &self.nodes {
            add(&n.aat);
            add(&n.det);
        }
        let s = &self.plant.state;
        MissionSummary {
            name: self.name.clone(),
            seed: self.seed,
            outcome: self.phase,
            fault: self.fault,
            duration_s: self.t(),
            phase_sequence: self.trace.phase_string(),
            phase_durations,
            stops: self.stops.clone(),
            packets: self.packets,
            interrupts,
            final_state: FinalState {
                segment: s.heading.segment,
                x: s.x,
                x_dot: s.x_dot,
                phi_deg: s.phi.to_degrees(),
                psi_deg: s.psi.to_degrees(),
                yaw_deg: s.heading.yaw_deg,
                pitch_deg: s.heading.pitch_deg,
            },
        }
    }

    pub fn into_run(self) -> MissionRun {
        let summary = self.summary();
        MissionRun {
            trace: self.trace,
            summary,
        }
    }
}

/// Runs a mission to Done or Fault.
pub fn run_mission(cfg: &MissionConfig, seed: u64) -> Result<MissionRun, ConfigError> {
    let mut sim = Simulator::new(cfg, seed)?;
    while !sim.is_finished() {
        sim.step();
    }
    Ok(sim.into_run())
}
