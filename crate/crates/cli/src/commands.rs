use std::path::Path;

use anyhow::{anyhow, Context};
use serde::Serialize;

use pipenav::characterization::{characterize as run_characterization, CharacterizationConfig, DiameterSweep, INCH};
use pipenav::control::{ControllerGains, TuneReport};
use pipenav::mission::{premature_stop_scenario, run_mission, Event, MissionConfig, Phase, StopSummary, SweepConfig};
use pipenav::rfchannel::{link_up, rss_at, LinkGeometry};

use crate::output::{
    resolve_out_dir, write_atomically, write_csv, write_csv_with_header, write_json, write_text, PlotKind, PlotSpec,
};
use crate::{ConfigKind, Failure};

type CmdResult = Result<(), Failure>;

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! say {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

/// Parses `START:STOP:STEP` (inches).
pub fn parse_diameters(s: &str) -> Result<(f64, f64, f64), String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("expected START:STOP:STEP, got {s:?}"));
    }
    let mut v = [0.0; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}"))?;
    }
    Ok((v[0], v[1], v[2]))
}

fn read_config_text(path: &Path) -> Result<(String, &'static str), Failure> {
    let ext = match path.extension().and_then(|e| e.to_str()) {
        Some("toml") => "toml",
        Some("json") => "json",
        other => {
            return Err(Failure::Config(anyhow!(
                "{}: unsupported extension {:?} (use .toml or .json)",
                path.display(),
                other.unwrap_or("")
            )))
        }
    };
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Config)?;
    Ok((text, ext))
}

fn load_characterization(path: &Path) -> Result<CharacterizationConfig, Failure> {
    let (text, ext) = read_config_text(path)?;
    let parsed = if ext == "toml" {
        toml::from_str(&text).map_err(|e| anyhow!("{}: {e}", path.display()))
    } else {
        serde_json::from_str(&text)
            .map_err(|e| anyhow!("{}: line {}, column {}: {e}", path.display(), e.line(), e.column()))
    };
    parsed.map_err(Failure::Config)
}

fn validate_characterization(cfg: &CharacterizationConfig) -> Result<(), Failure> {
    cfg.geometry
        .validate()
        .and_then(|_| cfg.condition.validate())
        .and_then(|_| cfg.sweep.validate())
        .and_then(|_| cfg.battery.capacity().map(|_| ()))
        .map_err(|e| Failure::Config(e.into()))
}

fn load_mission(path: &Path) -> Result<MissionConfig, Failure> {
    MissionConfig::load(path).map_err(|e| Failure::Config(anyhow!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct StiffnessRow {
    diameter_m: f64,
    #[serde(rename = "K_N_per_m")]
    k_n_per_m: f64,
}

pub fn characterize(config: Option<&Path>, diameters: Option<(f64, f64, f64)>, out: Option<&Path>) -> CmdResult {
    let mut cfg = match config {
        Some(p) => load_characterization(p)?,
        None => CharacterizationConfig::default(),
    };
    if let Some((start_in, stop_in, step_in)) = diameters {
        cfg.sweep = DiameterSweep {
            start_in,
            stop_in,
            step_in,
        };
    }
    validate_characterization(&cfg)?;
    let report = run_characterization(&cfg).map_err(|e| Failure::Other(e.into()))?;

    let rows: Vec<StiffnessRow> = report
        .curve
        .samples
        .iter()
        .map(|s| StiffnessRow {
            diameter_m: s.diameter,
            k_n_per_m: s.stiffness,
        })
        .collect();
    let plots = [PlotSpec::new(
        "Required spring stiffness vs pipe diameter",
        "stiffness_curve.csv",
        "diameter_m",
        &["K_N_per_m"],
        PlotKind::Line,
    )];
    let dest = resolve_out_dir(out, "characterize");
    write_atomically(&dest, |dir| {
        write_csv_with_header(dir, "stiffness_curve.csv", &["diameter_m", "K_N_per_m"], &rows)?;
        write_json(dir, "summary.json", &report.summary)?;
        write_json(dir, "plots.json", &plots)
    })?;
    let s = &report.summary;
    say!(
        "selected K = {:.1} N/m at {:.2} in; F'_N = {:.3} N (~{} N); battery C = {} A.h -> {}",
        s.selected_k,
        s.selected_diameter_m / INCH,
        s.normal_force_n,
        s.normal_force_reported_n,
        s.battery_capacity_ah,
        dest.display()
    );
    Ok(())
}

pub fn tune_report(config: Option<&Path>, out: Option<&Path>) -> CmdResult {
    let cfg = match config {
        Some(p) => load_mission(p)?,
        None => MissionConfig::default(),
    };
    let plant = cfg.plant.build().map_err(|e| Failure::Config(e.into()))?;
    let gains = ControllerGains::synthesize(&cfg.control, &plant).map_err(|e| Failure::Other(e.into()))?;
    let report = TuneReport::new(&gains, &plant);
    say!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)?
    );
    if let Some(dir) = out {
        write_atomically(dir, |d| write_json(d, "tune_report.json", &report))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VelocityRow {
    t: f64,
    segment: usize,
    x_m: f64,
    x_dot_mps: f64,
    phi_deg: f64,
    psi_deg: f64,
    yaw_deg: i32,
    phase: char,
}

#[derive(Serialize)]
struct RssRow {
    depth_cm: f64,
    rss_dbm: f64,
    link_up: bool,
}

#[derive(Serialize)]
struct StopRow {
    junction: usize,
    address: u16,
    trigger_t: f64,
    trigger_distance_m: f64,
    trigger_rss_dbm: f64,
    trigger_depth_cm: f64,
    rest_t: f64,
    rest_distance_m: f64,
    rest_speed_mps: f64,
    rest_phi_deg: f64,
    rest_psi_deg: f64,
}

pub const VELOCITY_HEADER: [&str; 8] = [
    "t",
    "segment",
    "x_m",
    "x_dot_mps",
    "phi_deg",
    "psi_deg",
    "yaw_deg",
    "phase",
];
pub const STOPS_HEADER: [&str; 11] = [
    "junction",
    "address",
    "trigger_t",
    "trigger_distance_m",
    "trigger_rss_dbm",
    "trigger_depth_cm",
    "rest_t",
    "rest_distance_m",
    "rest_speed_mps",
    "rest_phi_deg",
    "rest_psi_deg",
];

pub fn run(config: &Path, seed: Option<u64>, out: Option<&Path>) -> CmdResult {
    let cfg = load_mission(config)?;
    let seed = seed.unwrap_or(cfg.seed);
    let run = run_mission(&cfg, seed).map_err(|e| Failure::Config(e.into()))?;

    let velocity: Vec<VelocityRow> = run
        .trace
        .events
        .iter()
        .filter_map(|e| match &e.event {
            Event::StateSnapshot {
                segment,
                x,
                x_dot,
                phi_deg,
                psi_deg,
                yaw_deg,
                phase,
            } => Some(VelocityRow {
                t: e.t,
                segment: *segment,
                x_m: *x,
                x_dot_mps: *x_dot,
                phi_deg: *phi_deg,
                psi_deg: *psi_deg,
                yaw_deg: *yaw_deg,
                phase: phase.code(),
            }),
            _ => None,
        })
        .collect();
    let table = &cfg.rf.table;
    let rss: Vec<RssRow> = (0..=100)
        .map(|d| {
            let g = LinkGeometry::new(d as f64, 0.0);
            RssRow {
                depth_cm: d as f64,
                rss_dbm: rss_at(table, g),
                link_up: link_up(table, g),
            }
        })
        .collect();
    let stops: Vec<StopRow> = run
        .summary
        .stops
        .iter()
        .map(|s| StopRow {
            junction: s.junction,
            address: s.address,
            trigger_t: s.trigger_t,
            trigger_distance_m: s.trigger_distance_m,
            trigger_rss_dbm: s.trigger_rss_dbm,
            trigger_depth_cm: s.trigger_depth_cm,
            rest_t: s.rest_t,
            rest_distance_m: s.rest_distance_m,
            rest_speed_mps: s.rest_speed,
            rest_phi_deg: s.rest_phi_deg,
            rest_psi_deg: s.rest_psi_deg,
        })
        .collect();
    let plots = [
        PlotSpec::new("Linear velocity", "velocity.csv", "t", &["x_dot_mps"], PlotKind::Line),
        PlotSpec::new(
            "Tilt angles",
            "velocity.csv",
            "t",
            &["phi_deg", "psi_deg"],
            PlotKind::Line,
        ),
        PlotSpec::new(
            "RSS vs depth",
            "rss_vs_depth.csv",
            "depth_cm",
            &["rss_dbm"],
            PlotKind::Line,
        ),
        PlotSpec::new(
            "Stop positions",
            "stops.csv",
            "junction",
            &["rest_distance_m"],
            PlotKind::Scatter,
        ),
    ];

    let dest = resolve_out_dir(out, "run");
    write_atomically(&dest, |dir| {
        write_text(dir, "trace.jsonl", &run.trace.to_jsonl())?;
        write_json(dir, "summary.json", &run.summary)?;
        write_csv_with_header(dir, "velocity.csv", &VELOCITY_HEADER, &velocity)?;
        write_csv(dir, "rss_vs_depth.csv", &rss)?;
        write_csv_with_header(dir, "stops.csv", &STOPS_HEADER, &stops)?;
        write_json(dir, "plots.json", &plots)
    })?;

    let s = &run.summary;
    say!(
        "{}: seed {} -> {:?} after {:.3} s, phases {} -> {}",
        s.name,
        s.seed,
        s.outcome,
        s.duration_s,
        s.phase_sequence,
        dest.display()
    );
    if s.outcome == Phase::Fault {
        let kind = s.fault.map(|f| format!("{f:?}")).unwrap_or_else(|| "unknown".into());
        return Err(Failure::Fault(kind));
    }
    Ok(())
}

pub const SWEEP_HEADER: [&str; 9] = [
    "seed",
    "junction",
    "trigger_distance_m",
    "trigger_rss_dbm",
    "trigger_depth_cm",
    "stop_distance_m",
    "link_up_at_trigger",
    "in_coverage",
    "fault",
];

#[derive(Serialize)]
struct SweepReport<'a> {
    name: &'a str,
    seeds: Vec<u64>,
    baseline: &'a StopSummary,
    mitigated: &'a StopSummary,
}

pub fn sweep(
    config: &Path,
    seeds: Option<usize>,
    first_seed: Option<u64>,
    jitter: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let cfg = load_mission(config)?;
    let base = cfg.sweep.unwrap_or_default();
    let sweep = SweepConfig {
        runs: seeds.unwrap_or(base.runs),
        first_seed: first_seed.unwrap_or(base.first_seed),
        jitter_sigma_db: jitter.unwrap_or(base.jitter_sigma_db),
    };
    if sweep.runs == 0 {
        return Err(Failure::Config(anyhow!("sweep needs at least one seed")));
    }
    if !(sweep.jitter_sigma_db.is_finite() && sweep.jitter_sigma_db >= 0.0) {
        return Err(Failure::Config(anyhow!(
            "jitter must be a non-negative number of dB, got {}",
            sweep.jitter_sigma_db
        )));
    }
    let seed_list = sweep.seeds();
    let run = |mitigation| {
        premature_stop_scenario(&cfg, sweep.jitter_sigma_db, &seed_list, mitigation)
            .map_err(|e| Failure::Config(e.into()))
    };
    let baseline = run(false)?;
    let mitigated = run(true)?;

    let report = SweepReport {
        name: &cfg.name,
        seeds: seed_list.clone(),
        baseline: &baseline.summary,
        mitigated: &mitigated.summary,
    };
    let plots = [
        PlotSpec::new(
            "Stop distance before the junction, RSS trigger only",
            "stops_baseline.csv",
            "stop_distance_m",
            &[],
            PlotKind::Histogram,
        ),
        PlotSpec::new(
            "Stop distance before the junction, with rangefinder",
            "stops_mitigated.csv",
            "stop_distance_m",
            &[],
            PlotKind::Histogram,
        ),
    ];
    let dest = resolve_out_dir(out, "sweep");
    write_atomically(&dest, |dir| {
        write_csv_with_header(dir, "stops_baseline.csv", &SWEEP_HEADER, &baseline.samples)?;
        write_csv_with_header(dir, "stops_mitigated.csv", &SWEEP_HEADER, &mitigated.samples)?;
        write_json(dir, "sweep_summary.json", &report)?;
        write_json(dir, "plots.json", &plots)
    })?;

    for (label, s) in [("baseline", &baseline.summary), ("mitigated", &mitigated.summary)] {
        say!(
            "{label}: {} runs, {} faults, stop {:.3}..{:.3} m (spread {:.3} m)",
            s.runs,
            s.faults,
            s.min_stop_m,
            s.max_stop_m,
            s.spread_m
        );
    }
    say!("-> {}", dest.display());
    Ok(())
}

pub fn validate_config(path: &Path, kind: ConfigKind) -> CmdResult {
    match kind {
        ConfigKind::Mission => {
            let cfg = load_mission(path)?;
            say!("ok: mission {:?}", cfg.name);
        }
        ConfigKind::Characterization => {
            let cfg = load_characterization(path)?;
            validate_characterization(&cfg)?;
            say!("ok: characterization ({} diameters)", cfg.sweep.len());
        }
        ConfigKind::Auto => match load_mission(path) {
            Ok(cfg) => say!("ok: mission {:?}", cfg.name),
            Err(mission_err) => match load_characterization(path) {
                Ok(cfg) => {
                    validate_characterization(&cfg)?;
                    say!("ok: characterization ({} diameters)", cfg.sweep.len());
                }
                Err(_) => return Err(mission_err),
            },
        },
    }
    Ok(())
}
