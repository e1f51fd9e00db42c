#![allow(dead_code)]

use std::path::PathBuf;

use pipenav::characterization::INCH;
use pipenav::mission::trace::InterruptCause;
use pipenav::mission::*;
use pipenav::protocol::radio::NodeId;
use pipenav::protocol::rna::{Branch, Configuration, RnaArray, RnaEntry};
use pipenav::protocol::sensors::SensorBank;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bundled(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

pub fn load(name: &str) -> MissionConfig {
    MissionConfig::load(&bundled(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn junction_choice(rng: &mut ChaCha8Rng) -> (JunctionKind, Configuration) {
    match rng.random_range(0..7) {
        0 => (JunctionKind::Straight, Configuration::Straight),
        1 => (JunctionKind::Bend45, Configuration::Bend45),
        2 => (JunctionKind::Bend90, Configuration::Bend90),
        3 => (JunctionKind::Bend135, Configuration::Bend135),
        4 => (
            JunctionKind::TJunction,
            Configuration::TJunction { branch: Branch::Left },
        ),
        5 => (
            JunctionKind::TJunction,
            Configuration::TJunction { branch: Branch::Right },
        ),
        _ => (
            JunctionKind::TJunction,
            Configuration::TJunction {
                branch: Branch::Through,
            },
        ),
    }
}

/// A valid mission drawn from `seed`: up to three junctions, random speeds,
/// tilts, cover depth and noise, short sensor settling, and now and then a
/// tight time budget that forces a fault.
pub fn random_mission(seed: u64) -> MissionConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(0..=3usize);
    let mut cfg = MissionConfig {
        name: format!("random-{seed}"),
        seed: rng.random(),
        ..MissionConfig::default()
    };
    let segments = (0..=n)
        .map(|_| Segment {
            length_m: rng.random_range(1.5..4.0),
            diameter_m: (9.0 + 0.5 * rng.random_range(0..=12) as f64) * INCH,
            depth: None,
        })
        .collect();
    let mut addresses: Vec<u16> = Vec::new();
    while addresses.len() < n {
        let a = rng.random_range(1..500);
        if !addresses.contains(&a) {
            addresses.push(a);
        }
    }
    let mut junctions = Vec::new();
    let mut entries = Vec::new();
    for &address in &addresses {
        let (kind, configuration) = junction_choice(&mut rng);
        junctions.push(Junction {
            kind,
            relay_node: Some(RelayPlacement {
                address,
                horizontal_cm: rng.random_range(0.0..500.0),
            }),
        });
        entries.push(RnaEntry { address, configuration });
    }
    cfg.map = PipeMap {
        segments,
        junctions,
        depth: DepthProfile {
            ambient_cm: rng.random_range(45.0..200.0),
            coverage_window_m: rng.random_range(0.5..1.5),
            min_depth_cm: rng.random_range(5.0..20.0),
        },
    };
    cfg.rna = RnaArray::new(entries).unwrap();
    if rng.random_bool(0.5) {
        cfg.rf.jitter_sigma_db = rng.random_range(0.0..6.0);
    }
    let m = &mut cfg.mission;
    m.cruise_speed = rng.random_range(0.05..0.35);
    m.initial_phi_deg = rng.random_range(-15.0..15.0);
    m.initial_psi_deg = rng.random_range(-15.0..15.0);
    m.rangefinder.enabled = rng.random_bool(0.3);
    if rng.random_bool(0.3) {
        m.observer_noise_deg = rng.random_range(0.0..0.5);
    }
    if rng.random_bool(0.1) {
        m.max_time_s = rng.random_range(3.0..40.0);
    }
    if rng.random_bool(0.1) {
        cfg.control.steering.timeout_s = rng.random_range(0.5..4.0);
    }
    let mut bank = SensorBank::default();
    for ch in bank.channels.iter_mut() {
        ch.settle_time_s = rng.random_range(0.5..3.0);
        ch.noise_counts = rng.random_range(0.0..3.0);
    }
    cfg.sensors = bank;
    cfg.validate().unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    cfg
}

/// Longest window sum of on-air bits over any 1 s span of the trace.
pub fn peak_bits_per_second(trace: &MissionTrace) -> u64 {
    let sends: Vec<(f64, u64)> = trace
        .events
        .iter()
        .filter_map(|e| match &e.event {
            Event::RadioTx {
                bits, refused: None, ..
            } => Some((e.t, *bits)),
            _ => None,
        })
        .collect();
    let mut peak = 0;
    let mut lo = 0;
    let mut sum = 0;
    for hi in 0..sends.len() {
        sum += sends[hi].1;
        while sends[hi].0 - sends[lo].0 >= 1.0 - 1e-9 {
            sum -= sends[lo].1;
            lo += 1;
        }
        peak = peak.max(sum);
    }
    peak
}

/// Phase in force at each event, paired with the event.
pub fn with_phase(trace: &MissionTrace) -> Vec<(Option<Phase>, &TraceEvent)> {
    let mut phase = None;
    trace
        .events
        .iter()
        .map(|e| {
            if let Event::PhaseChange { to, .. } = e.event {
                phase = Some(to);
            }
            (phase, e)
        })
        .collect()
}

/// Problems with the robot's P1 listening discipline: more than one frame
/// heard per P1 stint, or anything other than an Rna.
pub fn p1_radio_violations(trace: &MissionTrace) -> Vec<String> {
    let mut out = Vec::new();
    let mut heard = 0;
    for (phase, e) in with_phase(trace) {
        match &e.event {
            Event::PhaseChange {
                to: Phase::P1StraightNoComms,
                ..
            } => heard = 0,
            Event::RadioRx {
                node: NodeId::Mt,
                packet,
                ..
            } if phase == Some(Phase::P1StraightNoComms) => {
                heard += 1;
                if heard > 1 || *packet != pipenav::protocol::PacketKind::Rna {
                    out.push(format!("t={} {packet:?} #{heard}", e.t));
                }
            }
            _ => {}
        }
    }
    out
}

/// Per node: (RadioRx events, Rx interrupt events, Tx on air, Tx interrupt events).
pub fn interrupt_ledger(trace: &MissionTrace) -> std::collections::BTreeMap<NodeId, [u64; 4]> {
    let mut m: std::collections::BTreeMap<NodeId, [u64; 4]> = Default::default();
    for e in &trace.events {
        match &e.event {
            Event::RadioRx { node, .. } => m.entry(*node).or_default()[0] += 1,
            Event::Interrupt {
                node,
                cause: InterruptCause::Rx,
            } => m.entry(*node).or_default()[1] += 1,
            Event::RadioTx {
                node, refused: None, ..
            } => m.entry(*node).or_default()[2] += 1,
            Event::Interrupt {
                node,
                cause: InterruptCause::Tx,
            } => m.entry(*node).or_default()[3] += 1,
            _ => {}
        }
    }
    m
}

/// Frames sent by a relay node after the robot entered P5 at its junction.
pub fn frames_after_removal(cfg: &MissionConfig, trace: &MissionTrace) -> Vec<String> {
    let mut removed = Vec::new();
    let mut out = Vec::new();
    for e in &trace.events {
        match e.event {
            Event::PhaseChange { to: Phase::P5Steer, .. } => {
                let addr = cfg.map.junctions[removed.len()].relay_node.unwrap().address;
                removed.push(addr);
            }
            Event::RadioTx {
                node: node @ (NodeId::Aat(a) | NodeId::Det(a)),
                refused: None,
                ..
            } if removed.contains(&a) => {
                out.push(format!("{node} at t={}", e.t));
            }
            _ => {}
        }
    }
    out
}

/// Durations of every P3 stint.
pub fn p3_durations(trace: &MissionTrace) -> Vec<f64> {
    let entries = trace.phase_entries();
    entries
        .windows(2)
        .filter(|w| w[0].1 == Phase::P3MeasureTransmit)
        .map(|w| w[1].0 - w[0].0)
        .collect()
}
