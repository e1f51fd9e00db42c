//! Stop-position study: where does the robot halt before a relay node when
//! the link edge is noisy, and does a forward rangefinder pin it down?

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ConfigError, MissionConfig};
use super::sim::Simulator;
use super::trace::Phase;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSample {
    pub seed: u64,
    pub junction: Option<usize>,
    pub trigger_distance_m: f64,
    pub trigger_rss_dbm: f64,
    pub trigger_depth_cm: f64,
    /// Distance before the junction at rest (positive means short of it).
    pub stop_distance_m: f64,
    /// The triggering frame's RSS cleared the decode threshold.
    pub link_up_at_trigger: bool,
    /// The trigger happened inside the coverage window.
    pub in_coverage: bool,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopSummary {
    pub runs: usize,
    pub jitter_sigma_db: f64,
    pub mitigation: bool,
    pub stopped: usize,
    pub faults: usize,
    pub min_stop_m: f64,
    pub max_stop_m: f64,
    pub mean_stop_m: f64,
    pub std_stop_m: f64,
    pub spread_m: f64,
    pub max_abs_stop_m: f64,
    pub all_link_up: bool,
    pub all_in_coverage: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopDistribution {
    pub samples: Vec<StopSample>,
    pub summary: StopSummary,
}

fn first_stop(cfg: &MissionConfig, seed: u64) -> Result<StopSample, ConfigError> {
    let mut sim = Simulator::new(cfg, seed)?;
    while !sim.is_finished() && sim.stops().is_empty() {
        sim.step();
    }
    let threshold = cfg.rf.table.decode_threshold_dbm;
    Ok(match sim.stops().first() {
        Some(s) => {
            let window = cfg.map.profile(s.junction).coverage_window_m;
            StopSample {
                seed,
                junction: Some(s.junction),
                trigger_distance_m: s.trigger_distance_m,
                trigger_rss_dbm: s.trigger_rss_dbm,
                trigger_depth_cm: s.trigger_depth_cm,
                stop_distance_m: s.rest_distance_m,
                link_up_at_trigger: s.trigger_rss_dbm >= threshold,
                in_coverage: s.trigger_distance_m <= window,
                fault: None,
            }
        }
        None => {
            let summary = sim.summary();
            StopSample {
                seed,
                junction: None,
                trigger_distance_m: f64::NAN,
                trigger_rss_dbm: f64::NAN,
                trigger_depth_cm: f64::NAN,
                stop_distance_m: f64::NAN,
                link_up_at_trigger: false,
                in_coverage: false,
                fault: Some(match summary.fault {
                    Some(f) => format!("{f:?}"),
                    None if summary.outcome == Phase::Done => "no relay on map".into(),
                    None => "unfinished".into(),
                }),
            }
        }
    })
}

fn summarize(samples: &[StopSample], sigma: f64, mitigation: bool) -> StopSummary {
    let stops: Vec<f64> = samples
        .iter()
        .filter(|s| s.fault.is_none())
        .map(|s| s.stop_distance_m)
        .collect();
    let n = stops.len();
    let (min, max, mean, std, max_abs) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let min = stops.iter().copied().fold(f64::INFINITY, f64::min);
        let max = stops.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = stops.iter().sum::<f64>() / n as f64;
        let var = stops.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n as f64;
        let max_abs = stops.iter().map(|s| s.abs()).fold(0.0, f64::max);
        (min, max, mean, var.sqrt(), max_abs)
    };
    let ok: Vec<&StopSample> = samples.iter().filter(|s| s.fault.is_none()).collect();
    StopSummary {
        runs: samples.len(),
        jitter_sigma_db: sigma,
        mitigation,
        stopped: n,
        faults: samples.len() - n,
        min_stop_m: min,
        max_stop_m: max,
        mean_stop_m: mean,
        std_stop_m: std,
        spread_m: max - min,
        max_abs_stop_m: max_abs,
        all_link_up: !ok.is_empty() && ok.iter().all(|s| s.link_up_at_trigger),
        all_in_coverage: !ok.is_empty() && ok.iter().all(|s| s.in_coverage),
    }
}

/// Runs one seeded mission per seed up to the first stop, with RSS jitter
/// `sigma_db`, and summarizes where the robot came to rest. Seeds run in
/// parallel; results keep seed order.
pub fn premature_stop_scenario(
    cfg: &MissionConfig,
    sigma_db: f64,
    seeds: &[u64],
    mitigation: bool,
) -> Result<StopDistribution, ConfigError> {
    if seeds.is_empty() {
        return Err(ConfigError::Param {
            field: "sweep.runs",
            reason: "need at least one seed".into(),
        });
    }
    let mut cfg = cfg.clone();
    cfg.rf.jitter_sigma_db = sigma_db;
    cfg.mission.rangefinder.enabled = mitigation;
    cfg.validate()?;
    let samples = seeds
        .par_iter()
        .map(|&seed| first_stop(&cfg, seed))
        .collect::<Result<Vec<_>, _>>()?;
    let summary = summarize(&samples, sigma_db, mitigation);
    Ok(StopDistribution { samples, summary })
}
