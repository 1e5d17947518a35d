//! Defected-ground-structure band-stop models.
//!
//! A U-shaped ground slot is modelled as a parallel RLC tank inserted in
//! series with the signal line. [`lc_extract`] sizes L and C from the
//! attenuation pole `f0` and the 3-dB cutoff `fc` using a one-pole
//! Butterworth prototype; the loss resistance sets the finite notch depth.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::microstrip::{line_params, line_width_for_z0, MicrostripError, Substrate};
use crate::rfnet::{s_from_abcd, tline_abcd, Abcd, AbcdSpectrum, FrequencyGrid, NPortNetwork, RfNetError};
use crate::solve::bisect;
use crate::units::{db_to_mag, mag_to_db, C0};

/// First element of the one-pole Butterworth low-pass prototype.
pub const BUTTERWORTH_G1: f64 = 2.0;

/// Smallest tank admittance magnitude used when forming the series
/// impedance; keeps a lossless tank finite at exact resonance.
const MIN_TANK_ADMITTANCE: f64 = 1e-18;

/// Notch depth fitted by the transmission-line model, dB.
pub const DEFAULT_NOTCH_DB: f64 = -41.28;
/// Default 3-dB cutoff of the extracted tank, Hz.
pub const DEFAULT_FC_HZ: f64 = 5.85e9;
/// Default attenuation pole, Hz.
pub const DEFAULT_F0_HZ: f64 = 5.9e9;
/// Line length of the two-slot model, m.
pub const DEFAULT_LINE_LENGTH: f64 = 12.4e-3;
/// Distance of each slot from its nearest port, m.
pub const DEFAULT_SLOT_OFFSET: f64 = 2.0e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DgsError {
    #[error("cutoff {fc} Hz must satisfy 0 < fc < f0 = {f0} Hz")]
    InvalidCutoff { fc: f64, f0: f64 },
    #[error("notch depth {0} dB must be below -3 dB")]
    ShallowNotch(f64),
    #[error("reference impedance {0} ohm must be > 0")]
    InvalidImpedance(f64),
    #[error("slot position {position} m outside the line [0, {length}] m")]
    PositionOutOfRange { position: f64, length: f64 },
    #[error("slot positions must be in non-decreasing order")]
    UnorderedPositions,
    #[error("notch fit did not converge")]
    FitFailed,
    #[error("model response is singular at {0} Hz")]
    Singular(f64),
    #[error(transparent)]
    Network(#[from] RfNetError),
    #[error(transparent)]
    Microstrip(#[from] MicrostripError),
}

/// U-slot dimensions, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DgsGeometry {
    /// Arm length.
    pub l_d1: f64,
    /// Base length.
    pub l_d2: f64,
    /// Slot width.
    pub w_d: f64,
    /// Placement offset.
    pub y_s: f64,
    /// Auxiliary offset; carried for completeness, not used by any model.
    pub d_s: f64,
}

impl DgsGeometry {
    /// Total slot length `2 l_d1 + l_d2`.
    pub fn total_length(&self) -> f64 {
        2.0 * self.l_d1 + self.l_d2
    }

    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("l_d1", self.l_d1),
            ("l_d2", self.l_d2),
            ("w_d", self.w_d),
            ("y_s", self.y_s),
            ("d_s", self.d_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("{name} = {v} must be > 0"));
            }
        }
        Ok(())
    }
}

/// Parallel RLC tank equivalent of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcBandstop {
    pub l_henry: f64,
    pub c_farad: f64,
    /// Parallel loss resistance; `f64::INFINITY` for a lossless tank.
    pub r_loss: f64,
    pub f0: f64,
    pub fc: f64,
}

impl LcBandstop {
    pub fn is_lossless(&self) -> bool {
        self.r_loss.is_infinite()
    }

    pub fn with_loss(self, r_loss: f64) -> Self {
        Self { r_loss, ..self }
    }

    /// `1 / (2 pi sqrt(LC))`
    pub fn resonance(&self) -> f64 {
        1.0 / (2.0 * PI * (self.l_henry * self.c_farad).sqrt())
    }

    pub fn admittance(&self, f_hz: f64) -> Complex64 {
        let w = 2.0 * PI * f_hz;
        Complex64::new(1.0 / self.r_loss, w * self.c_farad - 1.0 / (w * self.l_henry))
    }

    pub fn impedance(&self, f_hz: f64) -> Complex64 {
        let y = self.admittance(f_hz);
        if y.norm() < MIN_TANK_ADMITTANCE {
            Complex64::new(1.0 / MIN_TANK_ADMITTANCE, 0.0)
        } else {
            y.inv()
        }
    }
}

/// Lossless tank with attenuation pole `f0` and 3-dB cutoff `fc` between
/// `z0` terminations.
pub fn lc_extract(f0: f64, fc: f64, z0: f64) -> Result<LcBandstop, DgsError> {
    if !(fc > 0.0 && fc < f0 && f0.is_finite()) {
        return Err(DgsError::InvalidCutoff { fc, f0 });
    }
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(DgsError::InvalidImpedance(z0));
    }
    let wc = 2.0 * PI * fc;
    let w0 = 2.0 * PI * f0;
    let c_farad = wc / (z0 * BUTTERWORTH_G1 * (w0 * w0 - wc * wc));
    let l_henry = 1.0 / (w0 * w0 * c_farad);
    Ok(LcBandstop {
        l_henry,
        c_farad,
        r_loss: f64::INFINITY,
        f0,
        fc,
    })
}

/// Loss resistance giving a single series tank a notch of `notch_db` between
/// `z0` ports: at resonance the tank is purely `r_loss`, so
/// `|S21| = 2 z0 / (2 z0 + r_loss)`.
pub fn fit_notch_resistance(notch_db: f64, z0: f64) -> Result<f64, DgsError> {
    if !(notch_db < -3.0) {
        return Err(DgsError::ShallowNotch(notch_db));
    }
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(DgsError::InvalidImpedance(z0));
    }
    Ok(2.0 * z0 * (db_to_mag(-notch_db) - 1.0))
}

/// Microstrip line hosting the slots.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DgsLine {
    pub length: f64,
    pub width: f64,
    pub substrate: Substrate,
    /// Port reference impedance, ohms.
    pub z_ref: f64,
}

impl DgsLine {
    /// Line of `length` whose width matches `z_ref` on `substrate`.
    pub fn matched(length: f64, substrate: Substrate, z_ref: f64) -> Result<Self, DgsError> {
        Ok(Self {
            length,
            width: line_width_for_z0(z_ref, &substrate)?,
            substrate,
            z_ref,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacedTank {
    pub tank: LcBandstop,
    /// Distance from port 1 along the line, m.
    pub position: f64,
}

fn check_positions(line: &DgsLine, tanks: &[PlacedTank]) -> Result<(), DgsError> {
    let mut prev = 0.0;
    for t in tanks {
        if !(t.position >= 0.0 && t.position <= line.length) {
            return Err(DgsError::PositionOutOfRange {
                position: t.position,
                length: line.length,
            });
        }
        if t.position < prev {
            return Err(DgsError::UnorderedPositions);
        }
        prev = t.position;
    }
    Ok(())
}

fn chain(line: &DgsLine, tanks: &[PlacedTank], grid: &FrequencyGrid) -> Result<AbcdSpectrum, DgsError> {
    let lp = line_params(line.width, &line.substrate);
    let mut acc = AbcdSpectrum::identity(grid);
    let mut at = 0.0;
    for t in tanks {
        acc = acc.then(&tline_abcd(lp.z0, lp.eps_eff, t.position - at, grid)?)?;
        let slot = grid
            .iter()
            .map(|f| Abcd::series_impedance(t.tank.impedance(f)))
            .collect();
        acc = acc.then(&AbcdSpectrum::new(grid.clone(), slot)?)?;
        at = t.position;
    }
    Ok(acc.then(&tline_abcd(lp.z0, lp.eps_eff, line.length - at, grid)?)?)
}

/// Two-port response of the line with series tanks at the given positions
/// (line, tank, line, tank, ..., line), referenced to `line.z_ref`.
pub fn dgs_line_model(line: &DgsLine, tanks: &[PlacedTank], grid: &FrequencyGrid) -> Result<NPortNetwork, DgsError> {
    check_positions(line, tanks)?;
    let conv = s_from_abcd(&chain(line, tanks, grid)?, line.z_ref)?;
    if let Some(&k) = conv.singular.first() {
        return Err(DgsError::Singular(grid.points()[k]));
    }
    Ok(conv.value)
}

fn s21_db_at(line: &DgsLine, tanks: &[PlacedTank], f: f64) -> Result<f64, DgsError> {
    let n = dgs_line_model(line, tanks, &FrequencyGrid::single(f)?)?;
    Ok(mag_to_db(n.s()[0][(1, 0)].norm()))
}

/// Gives every tank the same loss resistance so that the cascade reaches
/// `notch_db` at `f0`. Starts from an equal split of the notch between the
/// tanks and refines the shared resistance with a one-dimensional search.
pub fn fit_composite_notch(
    line: &DgsLine,
    tanks: &[PlacedTank],
    f0: f64,
    notch_db: f64,
) -> Result<Vec<PlacedTank>, DgsError> {
    if tanks.is_empty() {
        return Ok(Vec::new());
    }
    check_positions(line, tanks)?;
    let guess = fit_notch_resistance(notch_db / tanks.len() as f64, line.z_ref)
        .unwrap_or_else(|_| fit_notch_resistance(-6.02, line.z_ref).unwrap());
    let with_r = |r: f64| -> Vec<PlacedTank> {
        tanks
            .iter()
            .map(|t| PlacedTank {
                tank: t.tank.with_loss(r),
                position: t.position,
            })
            .collect()
    };
    // positions are already checked, so the only failure left is a singular
    // response, which the bracket search treats as "no sign change"
    let residual = |ln_r: f64| {
        s21_db_at(line, &with_r(ln_r.exp()), f0)
            .map(|db| db - notch_db)
            .unwrap_or(f64::NAN)
    };
    let mut span = 4.0;
    while span <= 40.0 {
        if let Some(ln_r) = bisect(residual, guess.ln() - span, guess.ln() + span, 1e-14) {
            return Ok(with_r(ln_r.exp()));
        }
        span *= 2.0;
    }
    Err(DgsError::FitFailed)
}

/// Half-guided-wavelength estimate of the total slot length for `f0`, using
/// the substrate-average permittivity `(eps_r + 1) / 2`. Roughly 20 %
/// accurate against optimised slots.
pub fn slot_length_estimate(f0: f64, sub: &Substrate) -> f64 {
    C0 / (2.0 * f0 * ((sub.eps_r + 1.0) / 2.0).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotchModelConfig {
    pub f0: f64,
    pub fc: f64,
    pub notch_db: f64,
    pub line: DgsLine,
    /// Slot distance from each port.
    pub slot_offset: f64,
    /// `false` models the bare line.
    pub with_slots: bool,
    pub grid: FrequencyGrid,
}

impl NotchModelConfig {
    /// Two slots on a 12.4 mm matched line over 5.5-6.3 GHz in 1 MHz steps.
    pub fn two_slot_default() -> Result<Self, DgsError> {
        Ok(Self {
            f0: DEFAULT_F0_HZ,
            fc: DEFAULT_FC_HZ,
            notch_db: DEFAULT_NOTCH_DB,
            line: DgsLine::matched(DEFAULT_LINE_LENGTH, Substrate::rt5880_1p6mm(), 50.0)?,
            slot_offset: DEFAULT_SLOT_OFFSET,
            with_slots: true,
            grid: FrequencyGrid::linspace(5.5e9, 6.3e9, 801)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NotchModel {
    pub tanks: Vec<PlacedTank>,
    pub network: NPortNetwork,
}

/// Extracts the tank, fits the composite notch and evaluates the two-slot
/// line over the configured grid.
pub fn build_notch_model(cfg: &NotchModelConfig) -> Result<NotchModel, DgsError> {
    let tanks = if cfg.with_slots {
        let lc = lc_extract(cfg.f0, cfg.fc, cfg.line.z_ref)?;
        let placed = [
            PlacedTank {
                tank: lc,
                position: cfg.slot_offset,
            },
            PlacedTank {
                tank: lc,
                position: cfg.line.length - cfg.slot_offset,
            },
        ];
        fit_composite_notch(&cfg.line, &placed, cfg.f0, cfg.notch_db)?
    } else {
        Vec::new()
    };
    let network = dgs_line_model(&cfg.line, &tanks, &cfg.grid)?;
    Ok(NotchModel { tanks, network })
}
