//! Received signal strength between the in-pipe transceiver and a relay node.
//!
//! Loss is governed by the depth of water/soil between the antennas; the
//! horizontal distance through air contributes nothing. The default table
//! passes through -66 dBm at 10 cm and -82 dBm at 60 cm, with a knee at
//! (40 cm, -80 dBm) so that the decode threshold is crossed at the 40 cm read
//! range. A straight line through the two end points alone would cross
//! -80 dBm near 54 cm.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_TX_POWER_DBM: f64 = 14.0;
pub const DEFAULT_DECODE_THRESHOLD_DBM: f64 = -80.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RfError {
    #[error("RSS table needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("RSS table depths must strictly increase (point {0})")]
    DepthOrder(usize),
    #[error("RSS table must strictly decrease with depth (point {0})")]
    NotMonotone(usize),
    #[error("RSS table has a non-finite value")]
    NonFinite,
    #[error("jitter sigma must be non-negative, got {0}")]
    Jitter(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkGeometry {
    /// Water/soil depth between the antennas (cm).
    pub depth_cm: f64,
    /// Horizontal distance through air (cm).
    pub horizontal_cm: f64,
}

impl LinkGeometry {
    pub fn new(depth_cm: f64, horizontal_cm: f64) -> Self {
        Self {
            depth_cm,
            horizontal_cm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RssTable {
    pub tx_power_dbm: f64,
    /// `(depth cm, rss dBm)` pairs.
    pub points: Vec<(f64, f64)>,
    pub decode_threshold_dbm: f64,
}

impl Default for RssTable {
    fn default() -> Self {
        Self {
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            points: vec![(10.0, -66.0), (40.0, -80.0), (60.0, -82.0)],
            decode_threshold_dbm: DEFAULT_DECODE_THRESHOLD_DBM,
        }
    }
}

impl RssTable {
    pub fn new(points: Vec<(f64, f64)>, decode_threshold_dbm: f64) -> Result<Self, RfError> {
        let t = Self {
            points,
            decode_threshold_dbm,
            ..Self::default()
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), RfError> {
        if self.points.len() < 2 {
            return Err(RfError::TooFewPoints(self.points.len()));
        }
        if !self.tx_power_dbm.is_finite()
            || !self.decode_threshold_dbm.is_finite()
            || self.points.iter().any(|(d, r)| !d.is_finite() || !r.is_finite())
        {
            return Err(RfError::NonFinite);
        }
        for (i, w) in self.points.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(RfError::DepthOrder(i + 1));
            }
            if w[1].1 >= w[0].1 {
                return Err(RfError::NotMonotone(i + 1));
            }
        }
        Ok(())
    }

    fn rss_at_depth(&self, depth: f64) -> f64 {
        let pts = &self.points;
        let seg = pts.windows(2).position(|w| depth <= w[1].0).unwrap_or(pts.len() - 2);
        let (d0, r0) = pts[seg];
        let (d1, r1) = pts[seg + 1];
        r0 + (r1 - r0) * (depth - d0) / (d1 - d0)
    }

    /// Depth (cm) at which the table crosses the decode threshold.
    pub fn crossing_depth(&self) -> f64 {
        let pts = &self.points;
        let thr = self.decode_threshold_dbm;
        let seg = pts.windows(2).position(|w| thr >= w[1].1).unwrap_or(pts.len() - 2);
        let (d0, r0) = pts[seg];
        let (d1, r1) = pts[seg + 1];
        d0 + (thr - r0) * (d1 - d0) / (r1 - r0)
    }
}

/// Piecewise-linear RSS in depth, extrapolated with the end slopes. The
/// horizontal distance is ignored.
pub fn rss_at(table: &RssTable, geom: LinkGeometry) -> f64 {
    table.rss_at_depth(geom.depth_cm)
}

/// True when the RSS reaches the decode threshold (inclusive).
pub fn link_up(table: &RssTable, geom: LinkGeometry) -> bool {
    rss_at(table, geom) >= table.decode_threshold_dbm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RfConfig {
    pub table: RssTable,
    /// Standard deviation of the per-frame Gaussian RSS jitter (dB).
    pub jitter_sigma_db: f64,
}

impl Default for RfConfig {
    fn default() -> Self {
        Self {
            table: RssTable::default(),
            jitter_sigma_db: 0.0,
        }
    }
}

impl RfConfig {
    pub fn validate(&self) -> Result<(), RfError> {
        self.table.validate()?;
        if !(self.jitter_sigma_db >= 0.0) || !self.jitter_sigma_db.is_finite() {
            return Err(RfError::Jitter(self.jitter_sigma_db));
        }
        Ok(())
    }
}

/// A channel realisation: the calibrated table plus optional seeded jitter.
#[derive(Debug, Clone)]
pub struct Channel {
    pub table: RssTable,
    jitter: Option<Normal<f64>>,
}

impl Channel {
    pub fn new(cfg: &RfConfig) -> Result<Self, RfError> {
        cfg.validate()?;
        let jitter = if cfg.jitter_sigma_db > 0.0 {
            Some(Normal::new(0.0, cfg.jitter_sigma_db).map_err(|_| RfError::Jitter(cfg.jitter_sigma_db))?)
        } else {
            None
        };
        Ok(Self {
            table: cfg.table.clone(),
            jitter,
        })
    }

    /// RSS of one frame. Draws from `rng` only when jitter is enabled.
    pub fn sample_rss<R: Rng + ?Sized>(&self, geom: LinkGeometry, rng: &mut R) -> f64 {
        let mean = rss_at(&self.table, geom);
        match &self.jitter {
            Some(n) => mean + n.sample(rng),
            None => mean,
        }
    }

    pub fn decodes(&self, rss_dbm: f64) -> bool {
        rss_dbm >= self.table.decode_threshold_dbm
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calibration_points() {
        let t = RssTable::default();
        assert_eq!(rss_at(&t, LinkGeometry::new(10.0, 0.0)), -66.0);
        assert_eq!(rss_at(&t, LinkGeometry::new(60.0, 0.0)), -82.0);
        assert_eq!(
            rss_at(&t, LinkGeometry::new(35.0, 500.0)),
            rss_at(&t, LinkGeometry::new(35.0, 0.0))
        );
    }

    #[test]
    fn link_boundary() {
        let t = RssTable::default();
        assert!(link_up(&t, LinkGeometry::new(10.0, 0.0)));
        assert!(!link_up(&t, LinkGeometry::new(60.0, 0.0)));
        assert!(link_up(&t, LinkGeometry::new(40.0, 0.0)));
        assert!(!link_up(&t, LinkGeometry::new(40.01, 0.0)));
        assert!((t.crossing_depth() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn extrapolation_uses_end_slopes() {
        let t = RssTable::default();
        assert!((rss_at(&t, LinkGeometry::new(80.0, 0.0)) + 84.0).abs() < 1e-12);
        let shallow = rss_at(&t, LinkGeometry::new(0.0, 0.0));
        assert!((shallow - (-66.0 + 14.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(matches!(
            RssTable::new(vec![(10.0, -66.0)], -80.0),
            Err(RfError::TooFewPoints(1))
        ));
        assert!(matches!(
            RssTable::new(vec![(10.0, -66.0), (40.0, -60.0)], -80.0),
            Err(RfError::NotMonotone(1))
        ));
        assert!(matches!(
            RssTable::new(vec![(10.0, -66.0), (10.0, -70.0)], -80.0),
            Err(RfError::DepthOrder(1))
        ));
    }
}
