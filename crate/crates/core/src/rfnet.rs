//! Frequency-swept network algebra.
//!
//! Every spectrum carries the [`FrequencyGrid`] it was sampled on. Operations
//! that combine spectra require identical grids and never resample on their
//! own; [`NPortNetwork::resample`] is the explicit way to move data onto a
//! different grid.

use std::fmt;
use std::ops::Mul;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use crate::units::C0;

/// Complex S-matrix at a single frequency.
pub type SMatrix = DMatrix<Complex64>;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const J: Complex64 = Complex64::new(0.0, 1.0);

/// Reciprocity deviation accepted as "reciprocal" by [`network_checks`].
pub const RECIPROCITY_TOL: f64 = 1e-9;
/// Slack on the unit singular-value bound accepted as "passive".
pub const PASSIVITY_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RfNetError {
    #[error("frequency grid is empty")]
    EmptyGrid,
    #[error("frequency grid point {index} ({value} Hz) is not positive and strictly increasing")]
    InvalidGridPoint { index: usize, value: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frequency grids differ")]
    GridMismatch,
    #[error("non-physical parameter: {0}")]
    NonPhysical(String),
    #[error("operation requires a two-port network, got {0} ports")]
    NotTwoPort(usize),
    #[error("port reference impedances differ")]
    UnequalReference,
    #[error("S-matrix at index {index} is {rows}x{cols}, expected {ports}x{ports}")]
    MatrixShape {
        index: usize,
        rows: usize,
        cols: usize,
        ports: usize,
    },
    #[error("frequency {0} Hz lies outside the grid span")]
    OutOfSpan(f64),
    #[error("port index {port} out of range for a {ports}-port network")]
    PortOutOfRange { port: usize, ports: usize },
}

/// Strictly increasing, positive frequency samples in Hz.
///
/// Cloning is cheap: the points are shared.
#[derive(Clone, PartialEq)]
pub struct FrequencyGrid {
    points: Arc<[f64]>,
}

impl FrequencyGrid {
    pub fn new(points: Vec<f64>) -> Result<Self, RfNetError> {
        if points.is_empty() {
            return Err(RfNetError::EmptyGrid);
        }
        let mut prev = 0.0;
        for (index, &value) in points.iter().enumerate() {
            if !value.is_finite() || value <= prev {
                return Err(RfNetError::InvalidGridPoint { index, value });
            }
            prev = value;
        }
        Ok(Self { points: points.into() })
    }

    /// `n` evenly spaced points from `start` to `stop` inclusive.
    pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Self, RfNetError> {
        match n {
            0 => Err(RfNetError::EmptyGrid),
            1 => Self::new(vec![start]),
            _ => {
                let step = (stop - start) / (n - 1) as f64;
                let mut pts: Vec<f64> = (0..n).map(|k| start + step * k as f64).collect();
                pts[n - 1] = stop;
                Self::new(pts)
            }
        }
    }

    pub fn single(f_hz: f64) -> Result<Self, RfNetError> {
        Self::new(vec![f_hz])
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().copied()
    }

    /// Index of the sample closest to `f_hz`.
    pub fn nearest_index(&self, f_hz: f64) -> usize {
        let idx = self.points.partition_point(|&p| p < f_hz);
        if idx == 0 {
            0
        } else if idx == self.points.len() {
            idx - 1
        } else if (self.points[idx] - f_hz) < (f_hz - self.points[idx - 1]) {
            idx
        } else {
            idx - 1
        }
    }

    pub fn contains_span(&self, lo: f64, hi: f64) -> bool {
        lo >= self.first() && hi <= self.last()
    }

    /// Bracketing indices and interpolation weight for `f_hz`.
    fn locate(&self, f_hz: f64) -> Result<(usize, usize, f64), RfNetError> {
        if !(f_hz >= self.first() && f_hz <= self.last()) {
            return Err(RfNetError::OutOfSpan(f_hz));
        }
        let hi = self.points.partition_point(|&p| p < f_hz);
        if self.points[hi] == f_hz || hi == 0 {
            return Ok((hi, hi, 0.0));
        }
        let lo = hi - 1;
        let t = (f_hz - self.points[lo]) / (self.points[hi] - self.points[lo]);
        Ok((lo, hi, t))
    }
}

impl fmt::Debug for FrequencyGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "FrequencyGrid({} pts, {} .. {} Hz)",
            self.len(),
            self.first(),
            self.last()
        )
    }
}

/// Complex N x N scattering matrix per frequency sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NPortNetwork {
    grid: FrequencyGrid,
    ports: usize,
    s: Vec<SMatrix>,
    z_ref: Vec<f64>,
}

impl NPortNetwork {
    pub fn new(grid: FrequencyGrid, s: Vec<SMatrix>, z_ref: Vec<f64>) -> Result<Self, RfNetError> {
        if s.len() != grid.len() {
            return Err(RfNetError::LengthMismatch {
                expected: grid.len(),
                got: s.len(),
            });
        }
        let ports = z_ref.len();
        if ports == 0 {
            return Err(RfNetError::NonPhysical("network needs at least one port".into()));
        }
        if let Some(z) = z_ref.iter().find(|z| !(z.is_finite() && **z > 0.0)) {
            return Err(RfNetError::NonPhysical(format!(
                "reference impedance must be positive, got {z}"
            )));
        }
        for (index, m) in s.iter().enumerate() {
            if m.nrows() != ports || m.ncols() != ports {
                return Err(RfNetError::MatrixShape {
                    index,
                    rows: m.nrows(),
                    cols: m.ncols(),
                    ports,
                });
            }
        }
        Ok(Self { grid, ports, s, z_ref })
    }

    /// Network with the same reference impedance on every port.
    pub fn with_uniform_ref(grid: FrequencyGrid, s: Vec<SMatrix>, z0: f64) -> Result<Self, RfNetError> {
        let ports = s.first().map(|m| m.nrows()).unwrap_or(1);
        Self::new(grid, s, vec![z0; ports])
    }

    /// Builds a network from a closure evaluated at each grid point.
    pub fn from_fn<F>(grid: FrequencyGrid, ports: usize, z0: f64, mut f: F) -> Result<Self, RfNetError>
    where
        F: FnMut(f64) -> SMatrix,
    {
        let s = grid.iter().map(&mut f).collect();
        Self::new(grid, s, vec![z0; ports])
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn ports(&self) -> usize {
        self.ports
    }

    pub fn s(&self) -> &[SMatrix] {
        &self.s
    }

    pub fn z_ref(&self) -> &[f64] {
        &self.z_ref
    }

    fn check_port(&self, port: usize) -> Result<(), RfNetError> {
        if port >= self.ports {
            Err(RfNetError::PortOutOfRange {
                port,
                ports: self.ports,
            })
        } else {
            Ok(())
        }
    }

    /// One S entry across the sweep (zero-based port indices).
    pub fn entry(&self, i: usize, j: usize) -> Result<Vec<Complex64>, RfNetError> {
        self.check_port(i)?;
        self.check_port(j)?;
        Ok(self.s.iter().map(|m| m[(i, j)]).collect())
    }

    /// `20 log10 |S_ij|` across the sweep.
    pub fn entry_db(&self, i: usize, j: usize) -> Result<Vec<f64>, RfNetError> {
        Ok(self
            .entry(i, j)?
            .into_iter()
            .map(|v| crate::units::mag_to_db(v.norm()))
            .collect())
    }

    /// Linearly interpolated S-matrix at `f_hz` (real and imaginary parts
    /// interpolated independently).
    pub fn interpolate_at(&self, f_hz: f64) -> Result<SMatrix, RfNetError> {
        let (lo, hi, t) = self.grid.locate(f_hz)?;
        if lo == hi {
            return Ok(self.s[lo].clone());
        }
        Ok(&self.s[lo] * Complex64::from(1.0 - t) + &self.s[hi] * Complex64::from(t))
    }

    /// Moves the network onto `grid` by linear interpolation. Every target
    /// point must lie within the current span.
    pub fn resample(&self, grid: &FrequencyGrid) -> Result<NPortNetwork, RfNetError> {
        let s = grid
            .iter()
            .map(|f| self.interpolate_at(f))
            .collect::<Result<Vec<_>, _>>()?;
        NPortNetwork::new(grid.clone(), s, self.z_ref.clone())
    }

    /// Sub-network on the selected ports, in the given order.
    pub fn select_ports(&self, ports: &[usize]) -> Result<NPortNetwork, RfNetError> {
        for &p in ports {
            self.check_port(p)?;
        }
        let n = ports.len();
        let s = self
            .s
            .iter()
            .map(|m| SMatrix::from_fn(n, n, |r, c| m[(ports[r], ports[c])]))
            .collect();
        let z_ref = ports.iter().map(|&p| self.z_ref[p]).collect();
        NPortNetwork::new(self.grid.clone(), s, z_ref)
    }
}

/// 2x2 chain (transmission) matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Abcd {
    pub const IDENTITY: Abcd = Abcd {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Self { a, b, c, d }
    }

    pub fn series_impedance(z: Complex64) -> Self {
        Self::new(ONE, z, ZERO, ONE)
    }

    pub fn shunt_admittance(y: Complex64) -> Self {
        Self::new(ONE, ZERO, y, ONE)
    }

    pub fn determinant(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.a.norm_sqr() + self.b.norm_sqr() + self.c.norm_sqr() + self.d.norm_sqr()).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d].iter().all(|v| v.is_finite())
    }
}

impl Mul for Abcd {
    type Output = Abcd;

    fn mul(self, r: Abcd) -> Abcd {
        Abcd {
            a: self.a * r.a + self.b * r.c,
            b: self.a * r.b + self.b * r.d,
            c: self.c * r.a + self.d * r.c,
            d: self.c * r.b + self.d * r.d,
        }
    }
}

/// Chain matrix per frequency sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AbcdSpectrum {
    grid: FrequencyGrid,
    abcd: Vec<Abcd>,
}

impl AbcdSpectrum {
    pub fn new(grid: FrequencyGrid, abcd: Vec<Abcd>) -> Result<Self, RfNetError> {
        if abcd.len() != grid.len() {
            return Err(RfNetError::LengthMismatch {
                expected: grid.len(),
                got: abcd.len(),
            });
        }
        Ok(Self { grid, abcd })
    }

    pub fn identity(grid: &FrequencyGrid) -> Self {
        Self {
            grid: grid.clone(),
            abcd: vec![Abcd::IDENTITY; grid.len()],
        }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn abcd(&self) -> &[Abcd] {
        &self.abcd
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &AbcdSpectrum) -> Result<AbcdSpectrum, RfNetError> {
        cascade(self, next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    SeriesImpedance,
    ShuntAdmittance,
}

/// Lumped element chain matrices. `values` holds the impedance (series) or
/// admittance (shunt) at each grid point.
pub fn element_abcd(kind: ElementKind, values: &[Complex64], grid: &FrequencyGrid) -> Result<AbcdSpectrum, RfNetError> {
    if values.len() != grid.len() {
        return Err(RfNetError::LengthMismatch {
            expected: grid.len(),
            got: values.len(),
        });
    }
    let abcd = values
        .iter()
        .map(|&v| match kind {
            ElementKind::SeriesImpedance => Abcd::series_impedance(v),
            ElementKind::ShuntAdmittance => Abcd::shunt_admittance(v),
        })
        .collect();
    AbcdSpectrum::new(grid.clone(), abcd)
}

/// Lossless TEM line section of characteristic impedance `z0`.
pub fn tline_abcd(z0: f64, eps_eff: f64, length: f64, grid: &FrequencyGrid) -> Result<AbcdSpectrum, RfNetError> {
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(RfNetError::NonPhysical(format!("line impedance {z0} must be > 0")));
    }
    if !(eps_eff.is_finite() && eps_eff >= 1.0) {
        return Err(RfNetError::NonPhysical(format!(
            "effective permittivity {eps_eff} must be >= 1"
        )));
    }
    if !(length.is_finite() && length >= 0.0) {
        return Err(RfNetError::NonPhysical(format!("line length {length} must be >= 0")));
    }
    let abcd = grid
        .iter()
        .map(|f| {
            let beta_l = 2.0 * std::f64::consts::PI * f * eps_eff.sqrt() / C0 * length;
            let (s, c) = beta_l.sin_cos();
            Abcd::new(Complex64::from(c), J * (z0 * s), J * (s / z0), Complex64::from(c))
        })
        .collect();
    AbcdSpectrum::new(grid.clone(), abcd)
}

/// Per-frequency product `a * b` (signal passes through `a` first).
pub fn cascade(a: &AbcdSpectrum, b: &AbcdSpectrum) -> Result<AbcdSpectrum, RfNetError> {
    if a.grid != b.grid {
        return Err(RfNetError::GridMismatch);
    }
    let abcd = a.abcd.iter().zip(&b.abcd).map(|(x, y)| *x * *y).collect();
    Ok(AbcdSpectrum {
        grid: a.grid.clone(),
        abcd,
    })
}

/// Conversion output with the indices of frequency points whose conversion
/// denominator vanished. Flagged points hold NaN entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Converted<T> {
    pub value: T,
    pub singular: Vec<usize>,
}

impl<T> Converted<T> {
    pub fn is_clean(&self) -> bool {
        self.singular.is_empty()
    }
}

fn nan_c() -> Complex64 {
    Complex64::new(f64::NAN, f64::NAN)
}

/// Chain matrix to S-parameters with both ports referenced to `z0`.
pub fn s_from_abcd(a: &AbcdSpectrum, z0: f64) -> Result<Converted<NPortNetwork>, RfNetError> {
    if !(z0.is_finite() && z0 > 0.0) {
        return Err(RfNetError::NonPhysical(format!("reference impedance {z0} must be > 0")));
    }
    let mut singular = Vec::new();
    let s = a
        .abcd
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let b_n = m.b / z0;
            let c_n = m.c * z0;
            let den = m.a + b_n + c_n + m.d;
            let out = [
                (m.a + b_n - c_n - m.d) / den,
                2.0 * m.determinant() / den,
                Complex64::from(2.0) / den,
                (-m.a + b_n - c_n + m.d) / den,
            ];
            if den.norm() == 0.0 || out.iter().any(|v| !v.is_finite()) {
                singular.push(k);
                SMatrix::from_element(2, 2, nan_c())
            } else {
                SMatrix::from_row_slice(2, 2, &[out[0], out[1], out[2], out[3]])
            }
        })
        .collect();
    let value = NPortNetwork::new(a.grid.clone(), s, vec![z0, z0])?;
    Ok(Converted { value, singular })
}

/// S-parameters of a two-port with equal port references to chain matrix.
/// Points with `S21 = 0` are singular.
pub fn abcd_from_s(n: &NPortNetwork) -> Result<Converted<AbcdSpectrum>, RfNetError> {
    if n.ports != 2 {
        return Err(RfNetError::NotTwoPort(n.ports));
    }
    if n.z_ref[0] != n.z_ref[1] {
        return Err(RfNetError::UnequalReference);
    }
    let z0 = n.z_ref[0];
    let mut singular = Vec::new();
    let abcd =
        n.s.iter()
            .enumerate()
            .map(|(k, m)| {
                let (s11, s12, s21, s22) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
                let den = 2.0 * s21;
                let prod = s12 * s21;
                let out = Abcd::new(
                    ((ONE + s11) * (ONE - s22) + prod) / den,
                    z0 * ((ONE + s11) * (ONE + s22) - prod) / den,
                    ((ONE - s11) * (ONE - s22) - prod) / (den * z0),
                    ((ONE - s11) * (ONE + s22) + prod) / den,
                );
                if s21.norm() == 0.0 || !out.is_finite() {
                    singular.push(k);
                    Abcd::new(nan_c(), nan_c(), nan_c(), nan_c())
                } else {
                    out
                }
            })
            .collect();
    Ok(Converted {
        value: AbcdSpectrum::new(n.grid.clone(), abcd)?,
        singular,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointCheck {
    pub f_hz: f64,
    /// `max |S_ij - S_ji|` over all port pairs.
    pub reciprocity_deviation: f64,
    /// Largest singular value of S; passive networks keep this at or below 1.
    pub max_singular_value: f64,
}

impl PointCheck {
    pub fn passivity_margin(&self) -> f64 {
        1.0 - self.max_singular_value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkReport {
    pub points: Vec<PointCheck>,
    pub max_reciprocity_deviation: f64,
    pub max_singular_value: f64,
    /// Indices of points containing non-finite entries; excluded from the maxima.
    pub invalid_points: Vec<usize>,
}

impl NetworkReport {
    pub fn is_reciprocal(&self) -> bool {
        self.max_reciprocity_deviation <= RECIPROCITY_TOL
    }

    pub fn is_passive(&self) -> bool {
        self.max_singular_value <= 1.0 + PASSIVITY_TOL
    }

    /// Indices of points whose largest singular value exceeds one.
    pub fn passivity_violations(&self) -> Vec<usize> {
        self.points
            .iter()
            .enumerate()
            .filter(|(_, p)| p.max_singular_value > 1.0 + PASSIVITY_TOL)
            .map(|(k, _)| k)
            .collect()
    }
}

/// Reciprocity and passivity sanity checks. Never fails.
pub fn network_checks(n: &NPortNetwork) -> NetworkReport {
    let mut points = Vec::with_capacity(n.s.len());
    let mut invalid_points = Vec::new();
    let mut max_rec: f64 = 0.0;
    let mut max_sv: f64 = 0.0;
    for (k, (f, m)) in n.grid.iter().zip(&n.s).enumerate() {
        if m.iter().any(|v| !v.is_finite()) {
            invalid_points.push(k);
            points.push(PointCheck {
                f_hz: f,
                reciprocity_deviation: f64::NAN,
                max_singular_value: f64::NAN,
            });
            continue;
        }
        let mut rec: f64 = 0.0;
        for i in 0..n.ports {
            for j in (i + 1)..n.ports {
                rec = rec.max((m[(i, j)] - m[(j, i)]).norm());
            }
        }
        let sv = m.clone().singular_values().max();
        max_rec = max_rec.max(rec);
        max_sv = max_sv.max(sv);
        points.push(PointCheck {
            f_hz: f,
            reciprocity_deviation: rec,
            max_singular_value: sv,
        });
    }
    NetworkReport {
        points,
        max_reciprocity_deviation: max_rec,
        max_singular_value: max_sv,
        invalid_points,
    }
}
