//! Acceptance suite. Runs each criterion in turn, prints one PASS/FAIL line
//! per criterion and exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use pipenav::characterization::{characterize, CharacterizationConfig, INCH};
use pipenav::control::lqr::{hurwitz_stable, RESIDUAL_TOL};
use pipenav::control::*;
use pipenav::mission::trace::{DONE_PATTERN, FAULT_PATTERN};
use pipenav::mission::*;
use pipenav::plant::{Plant, PlantConfig, RobotState};
use pipenav::protocol::packet::{HEADER_LEN, MAX_PAYLOAD, PREAMBLE};
use pipenav::protocol::*;
use pipenav::rfchannel::*;
use pipenav::time::SimTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;

type Outcome = Result<String, String>;
type Criterion = (u32, fn() -> Outcome, Option<Duration>);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn characterization_numbers() -> Outcome {
    let path = bundled("characterization.toml");
    let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let cfg: CharacterizationConfig = toml::from_str(&text).map_err(|e| e.to_string())?;
    let s = characterize(&cfg).map_err(|e| e.to_string())?.summary;
    ensure!((s.selected_k - 3350.0).abs() <= 335.0, "K = {:.1} N/m", s.selected_k);
    let f_n = 8.7 / 0.8;
    ensure!((s.normal_force_n - f_n).abs() < 1e-9, "F_N = {}", s.normal_force_n);
    ensure!(
        s.normal_force_reported_n == 11.0,
        "reported F_N = {}",
        s.normal_force_reported_n
    );
    ensure!(
        s.battery_capacity_ah == 3.0 * 20.0 * 3.0 / 12.0,
        "C = {}",
        s.battery_capacity_ah
    );
    Ok(format!(
        "K = {:.1} N/m at {:.1} in, F_N = {} N (reported {}), C = {} Ah",
        s.selected_k,
        s.selected_diameter_m / INCH,
        s.normal_force_n,
        s.normal_force_reported_n,
        s.battery_capacity_ah
    ))
}

fn channel_calibration() -> Outcome {
    let t = RssTable::default();
    let at = |d: f64, h: f64| rss_at(&t, LinkGeometry::new(d, h));
    ensure!(at(10.0, 0.0) == -66.0, "rss(10 cm) = {}", at(10.0, 0.0));
    ensure!(at(60.0, 0.0) == -82.0, "rss(60 cm) = {}", at(60.0, 0.0));
    // Scan for the last depth that still links, at 1 mm resolution.
    let mut crossing = 0.0;
    for k in 0..=1000 {
        let d = k as f64 * 0.1;
        if link_up(&t, LinkGeometry::new(d, 0.0)) {
            crossing = d;
        }
    }
    ensure!((crossing - 40.0).abs() <= 1.0, "crossing at {crossing} cm");
    for k in 0..=100 {
        let d = k as f64;
        let base = at(d, 0.0).to_bits();
        for h in [1.0, 10.0, 50.0, 100.0, 250.0, 500.0, 1000.0, 5000.0] {
            ensure!(at(d, h).to_bits() == base, "rss depends on H at d = {d}, H = {h}");
            ensure!(
                link_up(&t, LinkGeometry::new(d, h)) == link_up(&t, LinkGeometry::new(d, 0.0)),
                "link_up depends on H at d = {d}"
            );
        }
    }
    Ok(format!("endpoints -66/-82 dBm, crossing {crossing:.1} cm, H-invariant"))
}

fn protocol_counting() -> Outcome {
    let mut medium = Medium::default();
    let mut tx = Transceiver::new(NodeId::Det(1), RadioMode::Tx);
    let mut first = Transceiver::new(NodeId::Mt, RadioMode::Rx);
    let mut late = Transceiver::new(NodeId::Aat(2), RadioMode::Rx);
    let up = LinkState {
        up: true,
        rss_dbm: -70.0,
    };
    let k = 40;
    for n in 1..=100u64 {
        let now = SimTime::from_millis(20 * n);
        let p = tx.frame(&Message::Rna(1)).map_err(|e| e.to_string())?;
        if n <= k {
            medium.broadcast(now, &mut tx, &p, [(&mut first, up)]);
        } else {
            medium.broadcast(now, &mut tx, &p, [(&mut first, up), (&mut late, up)]);
        }
    }
    ensure!(first.rx_interrupts == 100, "{} receive interrupts", first.rx_interrupts);
    let heard: Vec<u16> = late.take_inbox().iter().map(|r| r.packet.counter).collect();
    // Counters start at 0, so frame n carries counter n - 1.
    let expected: Vec<u16> = (k as u16..100).collect();
    ensure!(heard == expected, "late listener heard {heard:?}");

    let mut peak = 0;
    for name in ["single_junction.toml", "two_junctions.toml"] {
        let cfg = load(name);
        let run = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?;
        peak = peak.max(peak_bits_per_second(&run.trace));
    }
    ensure!(peak <= 120_000, "mission trace peaked at {peak} bits/s");

    // Flood: full frames every millisecond for 3 s.
    let mut medium = Medium::default();
    let mut tx = Transceiver::new(NodeId::Mt, RadioMode::Tx);
    let mut sent: Vec<(u64, u64)> = Vec::new();
    let payload = vec![0u8; MAX_PAYLOAD];
    for ms in 0..3000 {
        let p = Packet::new(PacketKind::SensorData, ms as u16, payload.clone()).map_err(|e| e.to_string())?;
        let report = medium.broadcast(SimTime::from_millis(ms), &mut tx, &p, []);
        if report.on_air {
            sent.push((ms, 8 * (HEADER_LEN + MAX_PAYLOAD) as u64));
        }
    }
    let mut flood_peak = 0;
    for (i, &(start, _)) in sent.iter().enumerate() {
        let total: u64 = sent[i..]
            .iter()
            .take_while(|(t, _)| *t < start + 1000)
            .map(|(_, b)| b)
            .sum();
        flood_peak = flood_peak.max(total);
    }
    ensure!(flood_peak <= 120_000, "flood peaked at {flood_peak} bits/s");
    Ok(format!(
        "100/100 interrupts, late listener got frames {}..100, trace peak {peak} b/s, flood peak {flood_peak} b/s",
        k + 1
    ))
}

fn control_performance() -> Outcome {
    let runs = [
        ("straight_cruise_1.toml", 0.10, 14.0, -15.0),
        ("straight_cruise_2.toml", 0.20, -13.0, -11.0),
        ("straight_cruise_3.toml", 0.30, -9.0, 5.0),
        ("straight_cruise_4.toml", 0.35, -3.0, 3.0),
    ];
    let mut notes = Vec::new();
    for (name, v_d, phi0, psi0) in runs {
        let cfg = load(name);
        ensure!(
            cfg.mission.cruise_speed == v_d,
            "{name}: cruise {}",
            cfg.mission.cruise_speed
        );
        let plant = cfg.plant.build().map_err(|e| e.to_string())?;
        let gains = ControllerGains::synthesize(&cfg.control, &plant).map_err(|e| e.to_string())?;
        ensure!(
            gains.lqr.residual < RESIDUAL_TOL,
            "{name}: residual {}",
            gains.lqr.residual
        );
        ensure!(
            gains.lqr.closed_loop.iter().all(|e| e.re < 0.0),
            "{name}: closed-loop eigenvalues {:?}",
            gains.lqr.closed_loop
        );
        let a_cl = plant.stabilizing_a() - plant.stabilizing_b() * &gains.lqr.k;
        ensure!(hurwitz_stable(&a_cl), "{name}: Routh-Hurwitz rejects the closed loop");

        let run = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?;
        ensure!(
            run.summary.outcome == Phase::Done,
            "{name}: ended {:?}",
            run.summary.outcome
        );
        let length = cfg.map.segments[0].length_m;
        let snaps: Vec<(f64, f64, f64, f64, f64)> = run
            .trace
            .events
            .iter()
            .filter_map(|e| match e.event {
                Event::StateSnapshot {
                    x,
                    x_dot,
                    phi_deg,
                    psi_deg,
                    ..
                } => Some((e.t, x, x_dot, phi_deg, psi_deg)),
                _ => None,
            })
            .collect();
        let (_, _, _, p0, s0) = snaps[0];
        ensure!(
            (p0 - phi0).abs() < 1e-6 && (s0 - psi0).abs() < 1e-6,
            "{name}: starts at {p0}/{s0}"
        );
        let cruise: Vec<_> = snaps.iter().filter(|s| s.1 < length).collect();
        let band = 0.05 * v_d;
        let last_out = cruise.iter().rposition(|s| (s.2 - v_d).abs() > band);
        let settle_t = last_out.map_or(cruise[0].0, |i| cruise[(i + 1).min(cruise.len() - 1)].0);
        let tail = &cruise[last_out.map_or(0, |i| i + 1)..];
        ensure!(tail.len() >= 20, "{name}: never settled within 5% before braking");
        let end = cruise.last().unwrap();
        ensure!(
            end.3.abs() < 1.0 && end.4.abs() < 1.0,
            "{name}: tilt {}/{} at end of cruise",
            end.3,
            end.4
        );
        let f = run.summary.final_state;
        ensure!(
            f.phi_deg.abs() < 1.0 && f.psi_deg.abs() < 1.0,
            "{name}: final tilt {}/{}",
            f.phi_deg,
            f.psi_deg
        );
        notes.push(format!("{v_d} m/s settled by {settle_t:.1} s"));
    }
    Ok(notes.join(", "))
}

/// Body rotation from wheel rates, integrated independently of the steerer.
fn steered_rotation_deg(config: Configuration, diameter: f64) -> Result<f64, String> {
    let cfg = PlantConfig::default();
    let (dt, r) = (cfg.dt, cfg.wheel_radius);
    let plan =
        SteeringPlan::for_configuration(&config, diameter, SteeringParams::default()).map_err(|e| e.to_string())?;
    let p = plan.axis.pattern();
    let norm2: f64 = p.iter().map(|v| v * v).sum();
    let mut plant = Plant::new(cfg, RobotState::default());
    let mut steerer = Steerer::new(plan);
    let mut rotation = 0.0;
    loop {
        let out = steerer.step(&plant.state, r, dt).map_err(|e| e.to_string())?;
        let w = plant.state.wheel_rates;
        rotation += r * (p[0] * w[0] + p[1] * w[1] + p[2] * w[2]) / (diameter / 2.0 * norm2) * dt;
        if out.done {
            return Ok(rotation.to_degrees());
        }
        plant.step(out.voltages).map_err(|e| e.to_string())?;
    }
}

fn steering_coverage() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    let half_inches = |lo: f64, hi: f64| (0..=((hi - lo) * 2.0) as usize).map(move |k| lo + 0.5 * k as f64);
    for d in half_inches(9.0, 22.0) {
        let got = steered_rotation_deg(Configuration::Bend90, d * INCH)?;
        ensure!((got - 90.0).abs() <= 0.5, "bend at {d} in turned {got:.3} deg");
        worst = worst.max((got - 90.0).abs());
        cases += 1;
    }
    for d in half_inches(9.0, 15.0) {
        for (branch, target) in [(Branch::Left, 90.0), (Branch::Right, -90.0)] {
            let got = steered_rotation_deg(Configuration::TJunction { branch }, d * INCH)?;
            ensure!(
                (got - target).abs() <= 0.5,
                "T {branch:?} at {d} in turned {got:.3} deg"
            );
            worst = worst.max((got - target).abs());
            cases += 1;
        }
    }
    let text = std::fs::read_to_string(bundled("two_junctions.toml")).map_err(|e| e.to_string())?;
    for d in [15.5, 18.0, 22.0] {
        let mut value: toml::Value = toml::from_str(&text).map_err(|e| e.to_string())?;
        value["map"]["segments"][1]["diameter_m"] = toml::Value::Float(d * INCH);
        let edited = toml::to_string(&value).map_err(|e| e.to_string())?;
        ensure!(
            MissionConfig::from_toml_str(&edited)
                .and_then(|c| c.validate().map(|_| c))
                .is_err(),
            "T-junction at {d} in was accepted"
        );
    }
    Ok(format!(
        "{cases} turns, worst error {worst:.3} deg, T-junctions above 15 in rejected"
    ))
}

fn single_junction_run() -> Outcome {
    let cfg = load("single_junction.toml");
    ensure!(cfg.rna.entries().iter().map(|e| e.address).eq([1]), "RNA is not [1]");
    ensure!(cfg.mission.cruise_speed == 0.1, "cruise {}", cfg.mission.cruise_speed);
    let run = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?;
    let entries = run.trace.phase_entries();
    ensure!(
        entries.first().map(|e| e.1) == Some(Phase::P1StraightNoComms),
        "first phase {entries:?}"
    );
    let cruised = run.trace.events.iter().any(|e| {
        matches!(e.event, Event::StateSnapshot { phase: Phase::P1StraightNoComms, x_dot, .. }
            if (x_dot - 0.1).abs() <= 0.005)
    });
    ensure!(cruised, "never cruised at 10 cm/s in P1");
    let trigger = run.trace.events.iter().find_map(|e| match &e.event {
        Event::PhaseChange {
            to: Phase::P2EstablishComms,
            trigger,
            ..
        } => Some(trigger.clone()),
        _ => None,
    });
    ensure!(
        trigger.as_deref().is_some_and(|t| t.contains("RNA 1")),
        "P2 trigger {trigger:?}"
    );
    let stop = run.summary.stops.first().ok_or("no stop recorded")?;
    let window = cfg.map.depth.coverage_window_m;
    ensure!(
        (0.0..=window).contains(&stop.trigger_distance_m),
        "RNA heard {:.3} m out, window {window} m",
        stop.trigger_distance_m
    );
    ensure!(stop.rest_speed < 0.01, "rest speed {}", stop.rest_speed);
    ensure!(
        stop.rest_phi_deg.abs() < 1.0 && stop.rest_psi_deg.abs() < 1.0,
        "rest tilt {}/{}",
        stop.rest_phi_deg,
        stop.rest_psi_deg
    );
    Ok(format!(
        "phases {}, RNA 1 at {:.3} m ({:.1} dBm), rest at {:.3} m, {:.5} m/s, tilt {:.1e}/{:.1e} deg",
        run.summary.phase_sequence,
        stop.trigger_distance_m,
        stop.trigger_rss_dbm,
        stop.rest_distance_m,
        stop.rest_speed,
        stop.rest_phi_deg,
        stop.rest_psi_deg
    ))
}

fn premature_stop_study() -> Outcome {
    let cfg = load("premature_stop.toml");
    let seeds: Vec<u64> = (0..100).collect();
    let window = cfg.map.depth.coverage_window_m;
    let base = premature_stop_scenario(&cfg, 3.0, &seeds, false).map_err(|e| e.to_string())?;
    let b = &base.summary;
    ensure!(b.stopped == 100, "{} of 100 runs stopped", b.stopped);
    ensure!(b.spread_m > 0.0, "zero spread");
    ensure!(b.all_link_up && b.all_in_coverage, "stop outside the link-up region");
    for s in &base.samples {
        ensure!(
            (0.0..=window).contains(&s.stop_distance_m),
            "seed {} stopped {:.3} m out",
            s.seed,
            s.stop_distance_m
        );
    }
    let mitigated = premature_stop_scenario(&cfg, 3.0, &seeds, true).map_err(|e| e.to_string())?;
    let m = &mitigated.summary;
    ensure!(m.stopped == 100, "{} of 100 mitigated runs stopped", m.stopped);
    ensure!(m.max_abs_stop_m <= 0.2, "mitigated stop {:.3} m out", m.max_abs_stop_m);
    Ok(format!(
        "baseline {:.3}..{:.3} m (spread {:.3}), mitigated max {:.3} m",
        b.min_stop_m, b.max_stop_m, b.spread_m, m.max_abs_stop_m
    ))
}

fn random_frame(rng: &mut ChaCha8Rng) -> Packet {
    let kind = [
        PacketKind::SensorData,
        PacketKind::Rna,
        PacketKind::DoneTransmission,
        PacketKind::MotionCommand,
        PacketKind::Start,
    ][rng.random_range(0..5)];
    let len = rng.random_range(0..=MAX_PAYLOAD);
    let payload = (0..len).map(|_| rng.random()).collect();
    Packet::new(kind, rng.random(), payload).expect("payload within limit")
}

fn property_suites() -> Outcome {
    let done = Regex::new(DONE_PATTERN).expect("pattern");
    let fault = Regex::new(FAULT_PATTERN).expect("pattern");
    let mut faults = 0;
    for seed in 0..1000 {
        let cfg = random_mission(seed);
        let run = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?;
        let s = run.trace.phase_string();
        ensure!(done.is_match(&s) || fault.is_match(&s), "mission {seed}: phases {s}");
        faults += usize::from(s.ends_with('F'));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xF4A3);
    for n in 0..100_000 {
        let p = random_frame(&mut rng);
        let bytes = encode_packet(&p).map_err(|e| e.to_string())?;
        ensure!(decode_packet(&bytes).as_ref() == Ok(&p), "frame {n} did not round-trip");
        let _ = Message::from_packet(&p);
        // Fuzz: flip bytes, truncate, or send raw noise behind a preamble.
        let junk = match n % 3 {
            0 => {
                let mut b = bytes.clone();
                for _ in 0..rng.random_range(1..4) {
                    let i = rng.random_range(0..b.len());
                    b[i] = rng.random();
                }
                b
            }
            1 => bytes[..rng.random_range(0..bytes.len())].to_vec(),
            _ => {
                let mut b = PREAMBLE.to_vec();
                b.extend((0..rng.random_range(0..140)).map(|_| rng.random::<u8>()));
                b
            }
        };
        if let Ok(q) = decode_packet(&junk) {
            let _ = Message::from_packet(&q);
        }
    }

    for seed in 0..50 {
        let cfg = random_mission(10_000 + seed);
        let a = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?.trace.to_jsonl();
        let b = run_mission(&cfg, cfg.seed).map_err(|e| e.to_string())?.trace.to_jsonl();
        ensure!(a == b, "config {seed}: traces differ");
    }
    Ok(format!(
        "1000 missions ({faults} faulted) match the phase grammar, 100000 frames round-trip, 50 configs deterministic"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, characterization_numbers, Some(Duration::from_secs(1))),
        (2, channel_calibration, Some(Duration::from_secs(1))),
        (3, protocol_counting, Some(Duration::from_secs(5))),
        (4, control_performance, Some(Duration::from_secs(30))),
        (5, steering_coverage, Some(Duration::from_secs(30))),
        (6, single_junction_run, Some(Duration::from_secs(60))),
        (7, premature_stop_study, Some(Duration::from_secs(300))),
        (8, property_suites, None),
    ];
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, check, limit) in criteria {
        if !filter.is_empty() && !filter.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let took = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if took > limit => Err(format!("took {took:.2?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("criterion {n}: PASS ({took:.2?}) {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL ({took:.2?}) {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
