//! Diversity and isolation metrics computed from S-parameters.
//!
//! ECC and CCL use the S-parameter forms, which assume lossless antennas in a
//! uniform propagation environment. Frequency points where a formula's
//! denominator (or the correlation determinant) is not positive are flagged,
//! carry NaN, and are left out of band summaries with a count.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rfnet::{FrequencyGrid, NPortNetwork, RfNetError};
use crate::units::mag_to_db;

/// Correlation ceiling for acceptable diversity.
pub const ECC_LIMIT: f64 = 0.5;
/// Capacity-loss ceiling for acceptable diversity, bits/s/Hz.
pub const CCL_LIMIT: f64 = 0.5;
/// Smallest radiated fraction `1 - |S_ii|^2 - |S_ji|^2` treated as non-zero.
pub const MIN_RADIATED_FRACTION: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MimoError {
    #[error("metric needs at least two ports, network has {0}")]
    TooFewPorts(usize),
    #[error("port pair ({0}, {1}) is invalid")]
    InvalidPair(usize, usize),
    #[error("band must satisfy f_lo < f_center < f_hi (got {lo}, {center}, {hi})")]
    InvalidBand { lo: f64, center: f64, hi: f64 },
    #[error("band {lo}..{hi} Hz lies outside the data span {first}..{last} Hz")]
    BandOutsideGrid { lo: f64, hi: f64, first: f64, last: f64 },
    #[error("budget inputs must be non-negative")]
    NegativeBudget,
    #[error(transparent)]
    Network(#[from] RfNetError),
}

/// Operating band, Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub f_lo: f64,
    pub f_center: f64,
    pub f_hi: f64,
}

impl BandSpec {
    pub fn new(f_lo: f64, f_center: f64, f_hi: f64) -> Result<Self, MimoError> {
        if !(f_lo < f_center && f_center < f_hi && f_lo > 0.0) {
            return Err(MimoError::InvalidBand {
                lo: f_lo,
                center: f_center,
                hi: f_hi,
            });
        }
        Ok(Self { f_lo, f_center, f_hi })
    }

    /// 5.850-5.944 GHz impedance band centred on 5.9 GHz.
    pub fn its_5p9() -> Self {
        Self {
            f_lo: 5.850e9,
            f_center: 5.9e9,
            f_hi: 5.944e9,
        }
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.f_lo && f <= self.f_hi
    }

    fn check_within(&self, grid: &FrequencyGrid) -> Result<(), MimoError> {
        if grid.contains_span(self.f_lo, self.f_hi) {
            Ok(())
        } else {
            Err(MimoError::BandOutsideGrid {
                lo: self.f_lo,
                hi: self.f_hi,
                first: grid.first(),
                last: grid.last(),
            })
        }
    }

    /// Band edges, centre and every grid point inside the band.
    pub fn sample_grid(&self, grid: &FrequencyGrid) -> Result<FrequencyGrid, MimoError> {
        self.check_within(grid)?;
        let mut pts: Vec<f64> = grid.iter().filter(|&f| self.contains(f)).collect();
        pts.extend([self.f_lo, self.f_center, self.f_hi]);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        Ok(FrequencyGrid::new(pts)?)
    }
}

/// Real-valued metric per frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<f64>,
    /// Indices of non-physical points (values there are NaN).
    pub flagged: Vec<usize>,
}

impl MetricSpectrum {
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self, MimoError> {
        if values.len() != grid.len() {
            return Err(RfNetError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            }
            .into());
        }
        let flagged = values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_nan())
            .map(|(k, _)| k)
            .collect();
        Ok(Self { grid, values, flagged })
    }

    /// Summary over grid points inside `band`, skipping flagged points.
    pub fn band_summary(&self, band: &BandSpec) -> BandSummary {
        let mut s = BandSummary {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            evaluated: 0,
            flagged: 0,
        };
        for (f, v) in self.grid.iter().zip(&self.values) {
            if !band.contains(f) {
                continue;
            }
            if v.is_nan() {
                s.flagged += 1;
                continue;
            }
            s.evaluated += 1;
            s.min = s.min.min(*v);
            s.max = s.max.max(*v);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSummary {
    pub min: f64,
    pub max: f64,
    pub evaluated: usize,
    pub flagged: usize,
}

fn check_pair(n: &NPortNetwork, i: usize, j: usize) -> Result<(), MimoError> {
    if n.ports() < 2 {
        return Err(MimoError::TooFewPorts(n.ports()));
    }
    if i == j || i >= n.ports() || j >= n.ports() {
        return Err(MimoError::InvalidPair(i, j));
    }
    Ok(())
}

/// Port pair used for diversity metrics: the only pair of a two-port, the two
/// receivers (ports 2 and 3) of a three-port.
pub fn default_diversity_pair(n: &NPortNetwork) -> (usize, usize) {
    if n.ports() >= 3 {
        (1, 2)
    } else {
        (0, 1)
    }
}

/// Envelope correlation between ports `i` and `j` (zero-based):
/// `|S_ii* S_ij + S_ji* S_jj|^2 / ((1 - |S_ii|^2 - |S_ji|^2)(1 - |S_jj|^2 - |S_ij|^2))`.
pub fn ecc(n: &NPortNetwork, i: usize, j: usize) -> Result<MetricSpectrum, MimoError> {
    check_pair(n, i, j)?;
    let values = n
        .s()
        .iter()
        .map(|m| {
            let (sii, sij, sji, sjj) = (m[(i, i)], m[(i, j)], m[(j, i)], m[(j, j)]);
            let num = (sii.conj() * sij + sji.conj() * sjj).norm_sqr();
            let ri = 1.0 - sii.norm_sqr() - sji.norm_sqr();
            let rj = 1.0 - sjj.norm_sqr() - sij.norm_sqr();
            if ri > MIN_RADIATED_FRACTION && rj > MIN_RADIATED_FRACTION && num.is_finite() {
                num / (ri * rj)
            } else {
                f64::NAN
            }
        })
        .collect();
    MetricSpectrum::new(n.grid().clone(), values)
}

/// Channel capacity loss `-log2 det(psi)` for ports `i` and `j`, bits/s/Hz.
pub fn ccl(n: &NPortNetwork, i: usize, j: usize) -> Result<MetricSpectrum, MimoError> {
    check_pair(n, i, j)?;
    let values = n
        .s()
        .iter()
        .map(|m| {
            let (sii, sij, sji, sjj) = (m[(i, i)], m[(i, j)], m[(j, i)], m[(j, j)]);
            let p_ii = Complex64::from(1.0 - (sii.norm_sqr() + sij.norm_sqr()));
            let p_jj = Complex64::from(1.0 - (sjj.norm_sqr() + sji.norm_sqr()));
            let p_ij = -(sii.conj() * sij + sji.conj() * sjj);
            let p_ji = -(sjj.conj() * sji + sij.conj() * sii);
            let det = (p_ii * p_jj - p_ij * p_ji).re;
            if det > 0.0 && det.is_finite() {
                -det.log2()
            } else {
                f64::NAN
            }
        })
        .collect();
    MetricSpectrum::new(n.grid().clone(), values)
}

/// Minimum isolation (positive dB) a port pair must meet.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IsolationThreshold {
    /// Required isolation at every in-band point.
    pub band_min_db: Option<f64>,
    /// Required isolation at the band centre.
    pub center_min_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IsolationThresholds {
    pub default: IsolationThreshold,
    /// Overrides keyed by zero-based `(i, j)` with `i < j`.
    pub per_pair: BTreeMap<(usize, usize), IsolationThreshold>,
}

impl IsolationThresholds {
    pub fn uniform(band_min_db: Option<f64>, center_min_db: Option<f64>) -> Self {
        Self {
            default: IsolationThreshold {
                band_min_db,
                center_min_db,
            },
            per_pair: BTreeMap::new(),
        }
    }

    fn for_pair(&self, i: usize, j: usize) -> IsolationThreshold {
        self.per_pair.get(&(i, j)).copied().unwrap_or(self.default)
    }
}

/// Coupling `S_ji` (into port `j` from port `i`, `i < j`) over the band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairIsolation {
    /// One-based port numbers.
    pub from_port: usize,
    pub to_port: usize,
    pub center_db: f64,
    /// Strongest (largest) in-band coupling.
    pub worst_db: f64,
    /// Weakest (smallest) in-band coupling.
    pub best_db: f64,
    pub threshold: IsolationThreshold,
    pub evaluated_points: usize,
    pub flagged_points: usize,
    pub pass: bool,
}

impl PairIsolation {
    pub fn center_isolation_db(&self) -> f64 {
        -self.center_db
    }

    pub fn worst_isolation_db(&self) -> f64 {
        -self.worst_db
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub band: BandSpec,
    pub pairs: Vec<PairIsolation>,
}

impl IsolationReport {
    pub fn all_pass(&self) -> bool {
        self.pairs.iter().all(|p| p.pass)
    }

    pub fn pair(&self, from_port: usize, to_port: usize) -> Option<&PairIsolation> {
        self.pairs
            .iter()
            .find(|p| p.from_port == from_port && p.to_port == to_port)
    }
}

/// Coupling for every port pair over `band`. Band edges and centre are
/// interpolated when they fall between grid points.
pub fn isolation_report(
    n: &NPortNetwork,
    band: &BandSpec,
    thresholds: &IsolationThresholds,
) -> Result<IsolationReport, MimoError> {
    let sampled = n.resample(&band.sample_grid(n.grid())?)?;
    let center = sampled.grid().nearest_index(band.f_center);
    let mut pairs = Vec::new();
    for i in 0..n.ports() {
        for j in (i + 1)..n.ports() {
            let db = sampled.entry_db(j, i)?;
            let mut worst = f64::NEG_INFINITY;
            let mut best = f64::INFINITY;
            let mut evaluated = 0;
            let mut flagged = 0;
            for v in &db {
                if v.is_nan() {
                    flagged += 1;
                    continue;
                }
                evaluated += 1;
                worst = worst.max(*v);
                best = best.min(*v);
            }
            let threshold = thresholds.for_pair(i, j);
            let center_db = db[center];
            let band_ok = threshold.band_min_db.is_none_or(|t| evaluated > 0 && -worst >= t);
            let center_ok = threshold.center_min_db.is_none_or(|t| -center_db >= t);
            pairs.push(PairIsolation {
                from_port: i + 1,
                to_port: j + 1,
                center_db,
                worst_db: worst,
                best_db: best,
                threshold,
                evaluated_points: evaluated,
                flagged_points: flagged,
                pass: band_ok && center_ok,
            });
        }
    }
    Ok(IsolationReport { band: *band, pairs })
}

/// Active cancellation still needed once the antenna provides `p_sic_db`.
pub fn sic_budget(total_required_db: f64, p_sic_db: f64) -> Result<f64, MimoError> {
    if !(total_required_db >= 0.0 && p_sic_db >= 0.0) {
        return Err(MimoError::NegativeBudget);
    }
    Ok((total_required_db - p_sic_db).max(0.0))
}

/// `|S_ij|` in dB with zero mapped to `-inf`.
pub fn coupling_db(v: Complex64) -> f64 {
    mag_to_db(v.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfnet::SMatrix;
    use crate::units::db_to_mag;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn two_port(s11: Complex64, s21: Complex64, s12: Complex64, s22: Complex64) -> NPortNetwork {
        let g = FrequencyGrid::single(5.9e9).unwrap();
        NPortNetwork::with_uniform_ref(g, vec![SMatrix::from_row_slice(2, 2, &[s11, s12, s21, s22])], 50.0).unwrap()
    }

    // direct formula evaluation with real entries, independent of the
    // complex-conjugate code path
    fn ecc_real(s11: f64, s12: f64, s21: f64, s22: f64) -> f64 {
        (s11 * s12 + s21 * s22).powi(2) / ((1.0 - s11 * s11 - s21 * s21) * (1.0 - s22 * s22 - s12 * s12))
    }

    fn ccl_real(s11: f64, s12: f64, s21: f64, s22: f64) -> f64 {
        let a = 1.0 - (s11 * s11 + s12 * s12);
        let d = 1.0 - (s22 * s22 + s21 * s21);
        let b = -(s11 * s12 + s21 * s22);
        let cc = -(s22 * s21 + s12 * s11);
        -(a * d - b * cc).log2()
    }

    #[test]
    fn zero_network_metrics() {
        let n = two_port(c(0.0), c(0.0), c(0.0), c(0.0));
        assert_eq!(ecc(&n, 0, 1).unwrap().values[0], 0.0);
        assert_eq!(ccl(&n, 0, 1).unwrap().values[0], 0.0);
    }

    #[test]
    fn worked_example() {
        let n = two_port(c(0.1), c(0.2), c(0.2), c(0.1));
        let e = ecc(&n, 0, 1).unwrap().values[0];
        let l = ccl(&n, 0, 1).unwrap().values[0];
        assert!((e - ecc_real(0.1, 0.2, 0.2, 0.1)).abs() < 1e-15);
        assert!((e - 0.0016 / 0.9025).abs() < 1e-15);
        assert!((e - 1.773e-3).abs() < 1e-6);
        assert!((l - ccl_real(0.1, 0.2, 0.2, 0.1)).abs() < 1e-15);
        assert!((l + 0.9009f64.log2()).abs() < 1e-12);
        assert!((l - 0.1506).abs() < 1e-4);
    }

    #[test]
    fn compliant_band_fixture() {
        let g = FrequencyGrid::linspace(5.8e9, 6.0e9, 41).unwrap();
        let n = NPortNetwork::from_fn(g, 2, 50.0, |f| {
            let x = (f - 5.9e9) / 1e8;
            let s11 = Complex64::from_polar(db_to_mag(-10.0 - 10.0 * (1.0 - x * x)), 2.0 * x);
            let s21 = Complex64::from_polar(db_to_mag(-50.0 - 37.08 * (1.0 - x.abs())), -1.3 * x);
            SMatrix::from_row_slice(2, 2, &[s11, s21, s21, s11 * Complex64::from_polar(1.0, 0.4)])
        })
        .unwrap();
        let band = BandSpec::its_5p9();
        let e = ecc(&n, 0, 1).unwrap().band_summary(&band);
        let l = ccl(&n, 0, 1).unwrap().band_summary(&band);
        assert!(e.max < 0.01 && e.flagged == 0);
        assert!(l.max < 0.5 && l.flagged == 0);
    }

    #[test]
    fn invalid_pairs() {
        let n = two_port(c(0.0), c(0.0), c(0.0), c(0.0));
        assert_eq!(ecc(&n, 0, 0), Err(MimoError::InvalidPair(0, 0)));
        assert_eq!(ccl(&n, 0, 2), Err(MimoError::InvalidPair(0, 2)));
        let one = NPortNetwork::with_uniform_ref(FrequencyGrid::single(1e9).unwrap(), vec![SMatrix::zeros(1, 1)], 50.0)
            .unwrap();
        assert_eq!(ecc(&one, 0, 1), Err(MimoError::TooFewPorts(1)));
    }

    #[test]
    fn absorbed_port_is_flagged() {
        // |S11|^2 + |S21|^2 = 1 leaves no denominator
        let n = two_port(c(0.6), c(0.8), c(0.8), c(0.6));
        let e = ecc(&n, 0, 1).unwrap();
        assert_eq!(e.flagged, vec![0]);
        assert!(e.values[0].is_nan());
        let band = BandSpec::new(5.8e9, 5.9e9, 6.0e9).unwrap();
        let s = e.band_summary(&band);
        assert_eq!((s.evaluated, s.flagged), (0, 1));
    }

    fn stage_iv_like() -> NPortNetwork {
        let g = FrequencyGrid::linspace(5.8e9, 6.0e9, 201).unwrap();
        NPortNetwork::from_fn(g, 2, 50.0, |f| {
            let x = ((f - 5.9e9) / 0.1e9).abs();
            let s21 = c(db_to_mag(-87.08 + 35.0 * x));
            SMatrix::from_row_slice(2, 2, &[c(0.1), s21, s21, c(0.1)])
        })
        .unwrap()
    }

    #[test]
    fn center_isolation_reported() {
        let r = isolation_report(
            &stage_iv_like(),
            &BandSpec::its_5p9(),
            &IsolationThresholds::uniform(Some(50.0), Some(85.0)),
        )
        .unwrap();
        let p = r.pair(1, 2).unwrap();
        assert!((p.center_isolation_db() - 87.08).abs() < 1e-9);
        assert!(p.worst_isolation_db() >= 50.0);
        assert!(r.all_pass());
    }

    #[test]
    fn zero_coupling_passes_any_threshold() {
        let g = FrequencyGrid::linspace(5.8e9, 6.0e9, 5).unwrap();
        let n = NPortNetwork::from_fn(g, 2, 50.0, |_| SMatrix::zeros(2, 2)).unwrap();
        let r = isolation_report(
            &n,
            &BandSpec::its_5p9(),
            &IsolationThresholds::uniform(Some(1e6), Some(1e6)),
        )
        .unwrap();
        assert!(r.all_pass());
        assert_eq!(r.pairs[0].worst_db, f64::NEG_INFINITY);
    }

    #[test]
    fn rx_rx_threshold_failure() {
        let g = FrequencyGrid::linspace(5.8e9, 6.0e9, 21).unwrap();
        let n = NPortNetwork::from_fn(g, 3, 50.0, |_| {
            let mut m = SMatrix::zeros(3, 3);
            let tx_rx = c(db_to_mag(-75.0));
            let rx_rx = c(db_to_mag(-29.0));
            m[(1, 0)] = tx_rx;
            m[(0, 1)] = tx_rx;
            m[(2, 0)] = tx_rx;
            m[(0, 2)] = tx_rx;
            m[(2, 1)] = rx_rx;
            m[(1, 2)] = rx_rx;
            m
        })
        .unwrap();
        let r = isolation_report(
            &n,
            &BandSpec::its_5p9(),
            &IsolationThresholds::uniform(Some(30.0), None),
        )
        .unwrap();
        assert!(!r.all_pass());
        assert!(r.pair(1, 2).unwrap().pass);
        assert!(r.pair(1, 3).unwrap().pass);
        assert!(!r.pair(2, 3).unwrap().pass);
    }

    #[test]
    fn band_outside_grid() {
        let n = stage_iv_like();
        let band = BandSpec::new(5.0e9, 5.9e9, 5.95e9).unwrap();
        assert!(matches!(
            isolation_report(&n, &band, &IsolationThresholds::default()),
            Err(MimoError::BandOutsideGrid { .. })
        ));
        assert!(BandSpec::new(6e9, 5.9e9, 6.1e9).is_err());
    }

    #[test]
    fn sic_budget_examples() {
        assert!((sic_budget(100.0, 87.08).unwrap() - 12.92).abs() < 1e-12);
        assert_eq!(sic_budget(100.0, 110.0).unwrap(), 0.0);
        assert_eq!(sic_budget(100.0, 0.0).unwrap(), 100.0);
        assert!(sic_budget(-1.0, 0.0).is_err());
    }

    #[test]
    fn zero_coupling_gives_zero_ecc() {
        let n = two_port(Complex64::new(0.3, -0.2), c(0.0), c(0.0), Complex64::new(-0.1, 0.4));
        assert_eq!(ecc(&n, 0, 1).unwrap().values[0], 0.0);
    }

    fn cplx(max: f64) -> impl Strategy<Value = Complex64> {
        (0.0..max, -3.2..3.2f64).prop_map(|(r, t)| Complex64::from_polar(r, t))
    }

    proptest! {
        #[test]
        fn ecc_phase_invariant(s11 in cplx(0.5), s21 in cplx(0.5), s22 in cplx(0.5), phi in -3.2..3.2f64) {
            let n = two_port(s11, s21, s21, s22);
            let rot = Complex64::from_polar(1.0, phi);
            let nr = two_port(s11 * rot, s21 * rot, s21 * rot, s22 * rot);
            let a = ecc(&n, 0, 1).unwrap().values[0];
            let b = ecc(&nr, 0, 1).unwrap().values[0];
            prop_assert!((a - b).abs() <= 1e-12);
        }

        #[test]
        fn metrics_bounded_for_passive(s11 in cplx(0.6), s21 in cplx(0.6), s22 in cplx(0.6)) {
            let n = two_port(s11, s21, s21, s22);
            prop_assume!(crate::rfnet::network_checks(&n).is_passive());
            let e = ecc(&n, 0, 1).unwrap().values[0];
            let l = ccl(&n, 0, 1).unwrap().values[0];
            if !e.is_nan() {
                prop_assert!((0.0..=1.0 + 1e-9).contains(&e));
            }
            if !l.is_nan() {
                prop_assert!(l >= -1e-12);
            }
        }

        #[test]
        fn ecc_decreases_with_coupling(m in 0.01..0.5f64, k in 0.1..0.99f64, phase in -3.0..3.0f64) {
            // matched ports: ECC = |S21|^4 / ... handled through the reflected paths,
            // so give the ports a small fixed reflection
            let s11 = Complex64::new(0.05, 0.02);
            let s22 = Complex64::new(-0.03, 0.04);
            let big = Complex64::from_polar(m, phase);
            let small = big * k;
            let e_big = ecc(&two_port(s11, big, big, s22), 0, 1).unwrap().values[0];
            let e_small = ecc(&two_port(s11, small, small, s22), 0, 1).unwrap().values[0];
            prop_assert!(e_small < e_big);
        }
    }
}
