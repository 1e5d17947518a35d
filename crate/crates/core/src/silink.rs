//! Self-interference power budget.
//!
//! Power-domain only: the leaked level at the receiver is the transmit power
//! plus the Tx-to-Rx coupling in dB, compared against a receiver noise floor.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mimo::{BandSpec, MetricSpectrum, MimoError};
use crate::rfnet::{FrequencyGrid, NPortNetwork, RfNetError};
use crate::units::mag_to_db;

/// Transmit power that puts a -11.8 dB coupling 40 dB above a -90 dBm floor.
pub const DEFAULT_P_TX_DBM: f64 = -38.2;
/// Receiver noise floor, dBm.
pub const DEFAULT_NOISE_FLOOR_DBM: f64 = -90.0;
/// Slack allowed above 0 dB before a coupling value counts as active gain.
const PASSIVE_SLACK_DB: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SiLinkError {
    #[error("noise floor {floor} dBm must be below transmit power {p_tx} dBm")]
    FloorAboveTx { floor: f64, p_tx: f64 },
    #[error("coupling {db} dB at {f} Hz exceeds 0 dB")]
    ActiveCoupling { f: f64, db: f64 },
    #[error("non-finite power level")]
    NonFinite,
    #[error("grids of the compared networks differ")]
    GridMismatch,
    #[error("port {0} out of range")]
    Port(usize),
    #[error(transparent)]
    Metric(#[from] MimoError),
    #[error(transparent)]
    Network(#[from] RfNetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiBudget {
    pub p_tx_dbm: f64,
    pub noise_floor_dbm: f64,
    /// Tx-to-Rx coupling in dB per frequency.
    pub coupling: MetricSpectrum,
}

impl SiBudget {
    pub fn new(p_tx_dbm: f64, noise_floor_dbm: f64, coupling: MetricSpectrum) -> Result<Self, SiLinkError> {
        if !(p_tx_dbm.is_finite() && noise_floor_dbm.is_finite()) {
            return Err(SiLinkError::NonFinite);
        }
        if noise_floor_dbm >= p_tx_dbm {
            return Err(SiLinkError::FloorAboveTx {
                floor: noise_floor_dbm,
                p_tx: p_tx_dbm,
            });
        }
        for (f, &db) in coupling.grid.iter().zip(&coupling.values) {
            if db > PASSIVE_SLACK_DB {
                return Err(SiLinkError::ActiveCoupling { f, db });
            }
        }
        Ok(Self {
            p_tx_dbm,
            noise_floor_dbm,
            coupling,
        })
    }

    /// Coupling taken from |S(rx, tx)| of a network (zero-based ports).
    pub fn from_network(
        p_tx_dbm: f64,
        noise_floor_dbm: f64,
        n: &NPortNetwork,
        rx: usize,
        tx: usize,
    ) -> Result<Self, SiLinkError> {
        let db = coupling_spectrum(n, rx, tx)?;
        Self::new(p_tx_dbm, noise_floor_dbm, db)
    }

    /// Budget for a single coupling value at one frequency.
    pub fn single(p_tx_dbm: f64, noise_floor_dbm: f64, f_hz: f64, coupling_db: f64) -> Result<Self, SiLinkError> {
        let grid = FrequencyGrid::single(f_hz)?;
        Self::new(p_tx_dbm, noise_floor_dbm, MetricSpectrum::new(grid, vec![coupling_db])?)
    }
}

fn coupling_spectrum(n: &NPortNetwork, rx: usize, tx: usize) -> Result<MetricSpectrum, SiLinkError> {
    for p in [rx, tx] {
        if p >= n.ports() {
            return Err(SiLinkError::Port(p));
        }
    }
    let db = n.s().iter().map(|m| mag_to_db(m[(rx, tx)].norm())).collect();
    Ok(MetricSpectrum::new(n.grid().clone(), db)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiPoint {
    pub freq_hz: f64,
    pub si_level_dbm: f64,
    /// Level above the noise floor; negative means buried in noise.
    pub margin_db: f64,
    pub below_floor: bool,
}

pub fn residual_si(b: &SiBudget) -> Vec<SiPoint> {
    b.coupling
        .grid
        .iter()
        .zip(&b.coupling.values)
        .map(|(f, &c)| {
            let si = b.p_tx_dbm + c;
            let margin = si - b.noise_floor_dbm;
            SiPoint {
                freq_hz: f,
                si_level_dbm: si,
                margin_db: margin,
                below_floor: margin < 0.0,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageComparison {
    pub freqs: Vec<f64>,
    /// |S_a| dB minus |S_b| dB; positive when `b` couples less.
    pub improvement_db: Vec<f64>,
    pub center_db: f64,
    pub band_min_db: f64,
    pub band_max_db: f64,
}

/// Coupling improvement of network `b` over network `a` for the `rx <- tx`
/// path. Both networks must share a frequency grid.
pub fn stage_compare(
    a: &NPortNetwork,
    b: &NPortNetwork,
    band: &BandSpec,
    rx: usize,
    tx: usize,
) -> Result<StageComparison, SiLinkError> {
    if a.grid() != b.grid() {
        return Err(SiLinkError::GridMismatch);
    }
    let ca = coupling_spectrum(a, rx, tx)?;
    let cb = coupling_spectrum(b, rx, tx)?;
    let improvement_db: Vec<f64> = ca.values.iter().zip(&cb.values).map(|(x, y)| x - y).collect();

    let sample = band.sample_grid(a.grid())?;
    let delta_at = |f: f64| -> Result<f64, SiLinkError> {
        let sa = a.interpolate_at(f)?[(rx, tx)].norm();
        let sb = b.interpolate_at(f)?[(rx, tx)].norm();
        Ok(mag_to_db(sa) - mag_to_db(sb))
    };
    let center_db = delta_at(band.f_center)?;
    let mut band_min_db = f64::INFINITY;
    let mut band_max_db = f64::NEG_INFINITY;
    for f in sample.iter() {
        let d = delta_at(f)?;
        band_min_db = band_min_db.min(d);
        band_max_db = band_max_db.max(d);
    }
    Ok(StageComparison {
        freqs: a.grid().points().to_vec(),
        improvement_db,
        center_db,
        band_min_db,
        band_max_db,
    })
}
