//! Quasi-static microstrip line and rectangular patch models.
//!
//! Effective permittivity uses the Hammerstad form
//! `(er+1)/2 + (er-1)/2 * (1 + 12h/w)^-1/2`; characteristic impedance uses the
//! Hammerstad-Jensen air-line impedance scaled by `1/sqrt(eps_eff)`, which is
//! continuous and strictly decreasing in width. The patch is a TM01 cavity
//! with the Hammerstad open-end extension on both radiating edges. All
//! quantities are evaluated at a single frequency (no dispersion).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::solve::bisect;
use crate::units::{wavelength, wavenumber, C0};

/// Free-space wave impedance, ohms.
const ETA0: f64 = 376.730_313_668;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MicrostripError {
    #[error("invalid substrate: {0}")]
    InvalidSubstrate(String),
    #[error("invalid patch geometry: {0}")]
    InvalidGeometry(String),
    #[error("target impedance {0} ohm outside the supported 10..200 ohm range")]
    ImpedanceOutOfRange(f64),
    #[error("frequency {0} Hz outside the supported 0.5..100 GHz range")]
    FrequencyOutOfRange(f64),
    #[error("root finder could not bracket a solution for {0}")]
    BracketFailure(&'static str),
    #[error("edge-conductance model invalid: k0*h = {0:.4} must be < 1")]
    ThickSubstrate(f64),
    #[error("inset depth {l1} m outside [0, {max}] m")]
    InsetOutOfRange { l1: f64, max: f64 },
    #[error("target resistance {target} ohm outside (0, {r_edge}] ohm")]
    ResistanceOutOfRange { target: f64, r_edge: f64 },
}

/// Dielectric substrate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Substrate {
    /// Relative permittivity.
    pub eps_r: f64,
    /// Loss tangent.
    pub tan_delta: f64,
    /// Thickness, m.
    pub h: f64,
}

impl Substrate {
    pub fn new(eps_r: f64, tan_delta: f64, h: f64) -> Result<Self, MicrostripError> {
        let s = Self { eps_r, tan_delta, h };
        s.validate()?;
        Ok(s)
    }

    /// RT/duroid 5880, 1.6 mm.
    pub fn rt5880_1p6mm() -> Self {
        Self {
            eps_r: 2.2,
            tan_delta: 0.0009,
            h: 1.6e-3,
        }
    }

    pub fn validate(&self) -> Result<(), MicrostripError> {
        if !(self.eps_r.is_finite() && self.eps_r >= 1.0) {
            return Err(MicrostripError::InvalidSubstrate(format!(
                "eps_r = {} must be >= 1",
                self.eps_r
            )));
        }
        if !(self.tan_delta >= 0.0 && self.tan_delta < 0.1) {
            return Err(MicrostripError::InvalidSubstrate(format!(
                "tan_delta = {} must be in [0, 0.1)",
                self.tan_delta
            )));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(MicrostripError::InvalidSubstrate(format!("h = {} must be > 0", self.h)));
        }
        Ok(())
    }
}

/// Inset-fed rectangular patch dimensions, all in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatchGeometry {
    /// Resonant length.
    pub l_p: f64,
    /// Radiating-edge width.
    pub w_p: f64,
    /// Inset depth.
    pub l_1: f64,
    /// Gap between the inset feed and the notch walls.
    pub g_1: f64,
    /// Feed line width.
    pub w_f: f64,
    /// Feed line length.
    pub l_f: f64,
}

impl PatchGeometry {
    pub fn validate(&self) -> Result<(), MicrostripError> {
        let dims = [
            ("l_p", self.l_p),
            ("w_p", self.w_p),
            ("g_1", self.g_1),
            ("w_f", self.w_f),
            ("l_f", self.l_f),
        ];
        for (name, v) in dims {
            if !(v.is_finite() && v > 0.0) {
                return Err(MicrostripError::InvalidGeometry(format!("{name} = {v} must be > 0")));
            }
        }
        // zero inset is an edge-fed patch
        if !(self.l_1.is_finite() && self.l_1 >= 0.0 && self.l_1 < self.l_p) {
            return Err(MicrostripError::InvalidGeometry(format!(
                "inset l_1 = {} must be in [0, l_p)",
                self.l_1
            )));
        }
        if self.g_1 >= self.w_p / 4.0 {
            return Err(MicrostripError::InvalidGeometry(format!(
                "notch gap g_1 = {} must be < w_p/4",
                self.g_1
            )));
        }
        if self.w_f + 2.0 * self.g_1 >= self.w_p {
            return Err(MicrostripError::InvalidGeometry(
                "feed plus notch gaps wider than the patch".into(),
            ));
        }
        Ok(())
    }
}

/// Quantities derived from a patch at its operating frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedEm {
    pub f0: f64,
    pub eps_eff: f64,
    pub lambda0: f64,
    pub k0: f64,
    /// Radiating-edge conductance, S.
    pub g_edge: f64,
    /// Edge (zero-inset) input resistance, ohms.
    pub r_in0: f64,
}

impl DerivedEm {
    /// Evaluates the edge quantities of a patch of width `w_p` at `f0`.
    pub fn at(w_p: f64, f0: f64, sub: &Substrate) -> Result<Self, MicrostripError> {
        let g_edge = edge_conductance(w_p, f0, sub)?;
        Ok(Self {
            f0,
            eps_eff: effective_permittivity(w_p, sub),
            lambda0: wavelength(f0),
            k0: wavenumber(f0),
            g_edge,
            r_in0: 1.0 / (2.0 * g_edge),
        })
    }
}

/// Which patch dimension divides the inset depth in the `cos^4` feed law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum InsetDimension {
    /// Radiating-edge width `w_p`.
    #[default]
    Width,
    /// Resonant length `l_p`.
    Length,
}

impl InsetDimension {
    fn of(self, geom: &PatchGeometry) -> f64 {
        match self {
            InsetDimension::Width => geom.w_p,
            InsetDimension::Length => geom.l_p,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParams {
    pub eps_eff: f64,
    /// Characteristic impedance, ohms.
    pub z0: f64,
}

pub fn effective_permittivity(w: f64, sub: &Substrate) -> f64 {
    let er = sub.eps_r;
    (er + 1.0) / 2.0 + (er - 1.0) / 2.0 / (1.0 + 12.0 * sub.h / w).sqrt()
}

/// Impedance of the same strip with air dielectric.
fn air_impedance(u: f64) -> f64 {
    let f = 6.0 + (2.0 * PI - 6.0) * (-(30.666 / u).powf(0.7528)).exp();
    ETA0 / (2.0 * PI) * (f / u + (1.0 + (2.0 / u).powi(2)).sqrt()).ln()
}

/// Effective permittivity and characteristic impedance of a strip of width `w`.
pub fn line_params(w: f64, sub: &Substrate) -> LineParams {
    let eps_eff = effective_permittivity(w, sub);
    LineParams {
        eps_eff,
        z0: air_impedance(w / sub.h) / eps_eff.sqrt(),
    }
}

/// Strip width giving `z0_target`, by bisection on [`line_params`].
pub fn line_width_for_z0(z0_target: f64, sub: &Substrate) -> Result<f64, MicrostripError> {
    if !(10.0..=200.0).contains(&z0_target) {
        return Err(MicrostripError::ImpedanceOutOfRange(z0_target));
    }
    let (lo, hi) = (sub.h * 1e-3, sub.h * 1e3);
    // bisect in log-width: impedance spans decades of w
    bisect(
        |ln_w| line_params(ln_w.exp(), sub).z0 - z0_target,
        lo.ln(),
        hi.ln(),
        1e-14,
    )
    .map(f64::exp)
    .ok_or(MicrostripError::BracketFailure("line width"))
}

/// Open-end length extension of a patch edge of width `w`.
pub fn fringing_extension(w: f64, sub: &Substrate) -> f64 {
    let ee = effective_permittivity(w, sub);
    let u = w / sub.h;
    0.412 * sub.h * (ee + 0.3) * (u + 0.264) / ((ee - 0.258) * (u + 0.8))
}

fn cavity_frequency(l_p: f64, w_p: f64, sub: &Substrate) -> f64 {
    let ee = effective_permittivity(w_p, sub);
    C0 / (2.0 * (l_p + 2.0 * fringing_extension(w_p, sub)) * ee.sqrt())
}

/// TM01 resonance of the patch with its edge quantities evaluated there.
pub fn patch_resonance(geom: &PatchGeometry, sub: &Substrate) -> Result<DerivedEm, MicrostripError> {
    geom.validate()?;
    sub.validate()?;
    DerivedEm::at(geom.w_p, cavity_frequency(geom.l_p, geom.w_p, sub), sub)
}

/// Width rule for an efficient radiator.
pub fn patch_width(f0: f64, sub: &Substrate) -> f64 {
    C0 / (2.0 * f0) * (2.0 / (sub.eps_r + 1.0)).sqrt()
}

/// Resonant length and width for `f0`, without the feed.
pub fn synthesize_resonator(f0: f64, sub: &Substrate) -> Result<(f64, f64), MicrostripError> {
    sub.validate()?;
    if !(0.5e9..=100e9).contains(&f0) {
        return Err(MicrostripError::FrequencyOutOfRange(f0));
    }
    let w_p = patch_width(f0, sub);
    let lambda0 = wavelength(f0);
    let l_p = bisect(
        |l| cavity_frequency(l, w_p, sub) / f0 - 1.0,
        lambda0 * 1e-4,
        lambda0,
        1e-13,
    )
    .ok_or(MicrostripError::BracketFailure("resonant length"))?;
    Ok((l_p, w_p))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisOptions {
    /// Feed-line and matched input impedance, ohms.
    pub feed_z0: f64,
    pub inset: InsetDimension,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            feed_z0: 50.0,
            inset: InsetDimension::Width,
        }
    }
}

/// Full inset-fed patch for `f0`.
///
/// The feed width matches `feed_z0`, the inset depth matches the edge
/// resistance down to `feed_z0`, the notch gap is a quarter of the feed
/// width and the feed length is a quarter guided wavelength.
pub fn synthesize_patch(f0: f64, sub: &Substrate, opts: &SynthesisOptions) -> Result<PatchGeometry, MicrostripError> {
    let (l_p, w_p) = synthesize_resonator(f0, sub)?;
    let w_f = line_width_for_z0(opts.feed_z0, sub)?;
    let feed = line_params(w_f, sub);
    let mut geom = PatchGeometry {
        l_p,
        w_p,
        l_1: 0.0,
        g_1: w_f / 4.0,
        w_f,
        l_f: wavelength(f0) / feed.eps_eff.sqrt() / 4.0,
    };
    let em = DerivedEm::at(w_p, f0, sub)?;
    geom.l_1 = solve_inset_depth(opts.feed_z0, &geom, &em, opts.inset)?;
    geom.validate()?;
    Ok(geom)
}

/// Radiating-edge conductance `G = w/(120 lambda0) * (1 - (k0 h)^2 / 24)`.
pub fn edge_conductance(w: f64, f0: f64, sub: &Substrate) -> Result<f64, MicrostripError> {
    let k0h = wavenumber(f0) * sub.h;
    if !(k0h < 1.0) {
        return Err(MicrostripError::ThickSubstrate(k0h));
    }
    Ok(w / (120.0 * wavelength(f0)) * (1.0 - k0h * k0h / 24.0))
}

/// Input resistance at inset depth `l_1`: `R_in0 * cos^4(pi l_1 / w)`.
pub fn inset_resistance(
    l_1: f64,
    geom: &PatchGeometry,
    em: &DerivedEm,
    dim: InsetDimension,
) -> Result<f64, MicrostripError> {
    let w = dim.of(geom);
    let max = w / 2.0;
    if !(l_1 >= 0.0 && l_1 <= max) {
        return Err(MicrostripError::InsetOutOfRange { l1: l_1, max });
    }
    Ok(em.r_in0 * (PI * l_1 / w).cos().powi(4))
}

/// Inset depth giving `r_target`; inverse of [`inset_resistance`].
pub fn solve_inset_depth(
    r_target: f64,
    geom: &PatchGeometry,
    em: &DerivedEm,
    dim: InsetDimension,
) -> Result<f64, MicrostripError> {
    if !(r_target > 0.0 && r_target <= em.r_in0) {
        return Err(MicrostripError::ResistanceOutOfRange {
            target: r_target,
            r_edge: em.r_in0,
        });
    }
    let w = dim.of(geom);
    Ok(w / PI * (r_target / em.r_in0).powf(0.25).acos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn reference_sub() -> Substrate {
        Substrate::rt5880_1p6mm()
    }

    fn reference_patch() -> PatchGeometry {
        PatchGeometry {
            l_p: 16.2e-3,
            w_p: 21.6e-3,
            l_1: 5e-3,
            g_1: 0.625e-3,
            w_f: 2.75e-3,
            l_f: 8e-3,
        }
    }

    fn em_at_5p9() -> DerivedEm {
        DerivedEm::at(21.6e-3, 5.9e9, &reference_sub()).unwrap()
    }

    #[test]
    fn substrate_validation() {
        assert!(Substrate::new(0.5, 0.0, 1e-3).is_err());
        assert!(Substrate::new(2.2, 0.2, 1e-3).is_err());
        assert!(Substrate::new(2.2, 0.0, 0.0).is_err());
        assert!(Substrate::new(2.2, 0.0009, 1.6e-3).is_ok());
    }

    #[test]
    fn eps_eff_wide_strip_limit() {
        let sub = reference_sub();
        let p = line_params(sub.h * 1e4, &sub);
        assert!((p.eps_eff - 2.2).abs() / 2.2 < 0.01);
    }

    #[test]
    fn eps_eff_patch_width_hand_value() {
        // 1.6 + 0.6 / sqrt(1 + 12 * 1.6 / 21.6)
        let hand = 1.6 + 0.6 / (1.0 + 12.0 * 1.6 / 21.6f64).sqrt();
        let p = line_params(21.6e-3, &reference_sub());
        assert_relative_eq!(p.eps_eff, hand, max_relative = 1e-14);
        assert!((p.eps_eff - 2.037).abs() < 1e-3);
    }

    #[test]
    fn impedance_decreases_with_width() {
        let sub = reference_sub();
        assert!(line_params(1e-3, &sub).z0 > line_params(3e-3, &sub).z0);
    }

    #[test]
    fn fifty_ohm_width() {
        let sub = reference_sub();
        let w = line_width_for_z0(50.0, &sub).unwrap();
        assert!((4.5e-3..=5.5e-3).contains(&w), "w = {w}");
        // monotone bracket scan oracle: the 50 ohm crossing lies between
        // consecutive 0.01 mm samples around w
        let samples: Vec<f64> = (450..=550).map(|k| k as f64 * 1e-5).collect();
        let cross = samples
            .windows(2)
            .find(|p| line_params(p[0], &sub).z0 >= 50.0 && line_params(p[1], &sub).z0 < 50.0)
            .unwrap();
        assert!(w >= cross[0] && w <= cross[1]);
        assert_relative_eq!(line_params(w, &sub).z0, 50.0, max_relative = 1e-3);
    }

    #[test]
    fn width_out_of_range() {
        assert_eq!(
            line_width_for_z0(5.0, &reference_sub()),
            Err(MicrostripError::ImpedanceOutOfRange(5.0))
        );
    }

    #[test]
    fn reference_patch_resonates_near_5p9() {
        let em = patch_resonance(&reference_patch(), &reference_sub()).unwrap();
        assert!((em.f0 - 5.9e9).abs() / 5.9e9 < 0.02, "f0 = {}", em.f0);
        assert_relative_eq!(em.lambda0 * em.f0, C0, max_relative = 1e-14);
        assert_relative_eq!(em.k0, 2.0 * PI / em.lambda0, max_relative = 1e-14);
        assert_relative_eq!(em.r_in0, 1.0 / (2.0 * em.g_edge), max_relative = 1e-14);
    }

    #[test]
    fn fringing_lowers_resonance() {
        let sub = reference_sub();
        let g = reference_patch();
        assert!(fringing_extension(g.w_p, &sub) > 0.0);
        let no_fringe = C0 / (2.0 * g.l_p * effective_permittivity(g.w_p, &sub).sqrt());
        assert!(patch_resonance(&g, &sub).unwrap().f0 < no_fringe);
    }

    #[test]
    fn doubling_lengths_halves_f0() {
        let sub = reference_sub();
        let g = reference_patch();
        let f1 = patch_resonance(&g, &sub).unwrap().f0;
        // eps_eff depends on w/h only, so scale h as well to hold it fixed
        let sub2 = Substrate { h: 2.0 * sub.h, ..sub };
        let g2 = PatchGeometry {
            l_p: 2.0 * g.l_p,
            w_p: 2.0 * g.w_p,
            ..g
        };
        let f2 = patch_resonance(&g2, &sub2).unwrap().f0;
        assert!((f2 / f1 - 0.5).abs() < 0.005);
    }

    #[test]
    fn synthesis_at_5p9_matches_layout_scale() {
        let sub = reference_sub();
        let g = synthesize_patch(5.9e9, &sub, &SynthesisOptions::default()).unwrap();
        // forward scan oracle: resonance is monotone decreasing in l_p, so the
        // synthesized length must sit between the scan samples bracketing 5.9 GHz
        let scan: Vec<f64> = (1500..=1700).map(|k| k as f64 * 1e-5).collect();
        let bracket = scan
            .windows(2)
            .find(|p| cavity_frequency(p[0], g.w_p, &sub) >= 5.9e9 && cavity_frequency(p[1], g.w_p, &sub) < 5.9e9)
            .unwrap();
        assert!(g.l_p >= bracket[0] && g.l_p <= bracket[1]);
        assert!((g.l_p - 16.1e-3).abs() < 0.1e-3, "l_p = {}", g.l_p);
        assert!((g.l_p - 16.2e-3).abs() / 16.2e-3 < 0.03);
        assert!((g.w_p - 20.1e-3).abs() < 0.05e-3, "w_p = {}", g.w_p);
        assert!((g.w_p - 21.6e-3).abs() / 21.6e-3 < 0.10);
        let f = patch_resonance(&g, &sub).unwrap().f0;
        assert!((f / 5.9e9 - 1.0).abs() < 1e-4);
    }

    #[test]
    fn synthesis_rejects_out_of_band() {
        let sub = reference_sub();
        assert!(matches!(
            synthesize_patch(0.1e9, &sub, &SynthesisOptions::default()),
            Err(MicrostripError::FrequencyOutOfRange(_))
        ));
    }

    #[test]
    fn synthesis_bracket_failure_on_thick_substrate() {
        // fringing exceeds the half-wavelength cavity: no positive length
        let sub = Substrate::new(2.2, 0.0, 3.2e-3).unwrap();
        assert_eq!(
            synthesize_resonator(100e9, &sub),
            Err(MicrostripError::BracketFailure("resonant length"))
        );
    }

    #[test]
    fn edge_conductance_hand_value() {
        // lambda0 = 50.812 mm, k0 h = 0.19785
        let lambda0 = C0 / 5.9e9;
        let k0h = 2.0 * PI / lambda0 * 1.6e-3;
        assert!((lambda0 - 50.81e-3).abs() < 0.01e-3);
        assert!((k0h - 0.1978).abs() < 1e-4);
        let g = edge_conductance(21.6e-3, 5.9e9, &reference_sub()).unwrap();
        assert_relative_eq!(g, 3.537e-3, max_relative = 1e-3);
        assert_relative_eq!(1.0 / (2.0 * g), 141.4, max_relative = 1e-3);
    }

    #[test]
    fn edge_conductance_limits() {
        let thin = Substrate::new(2.2, 0.0, 1e-12).unwrap();
        let w = 21.6e-3;
        let g = edge_conductance(w, 5.9e9, &thin).unwrap();
        assert_relative_eq!(g, w / (120.0 * C0 / 5.9e9), max_relative = 1e-15);
        let sub = reference_sub();
        let g1 = edge_conductance(w, 5.9e9, &sub).unwrap();
        let g2 = edge_conductance(2.0 * w, 5.9e9, &sub).unwrap();
        assert_relative_eq!(g2, 2.0 * g1, max_relative = 1e-15);
        let thick = Substrate::new(2.2, 0.0, 10e-3).unwrap();
        assert!(matches!(
            edge_conductance(w, 5.9e9, &thick),
            Err(MicrostripError::ThickSubstrate(_))
        ));
    }

    #[test]
    fn inset_endpoints_and_example() {
        let g = reference_patch();
        let em = em_at_5p9();
        let dim = InsetDimension::Width;
        assert_eq!(inset_resistance(0.0, &g, &em, dim).unwrap(), em.r_in0);
        assert!(inset_resistance(g.w_p / 2.0, &g, &em, dim).unwrap() < 1e-28);
        // 141.37 * cos^4(pi * 5 / 21.6)
        let r = inset_resistance(5e-3, &g, &em, dim).unwrap();
        let hand = em.r_in0 * (PI * 5.0 / 21.6f64).cos().powi(4);
        assert_relative_eq!(r, hand, max_relative = 1e-14);
        assert!((r - 44.03).abs() < 0.01, "r = {r}");
        assert!(inset_resistance(g.w_p, &g, &em, dim).is_err());
        assert!(inset_resistance(-1e-3, &g, &em, dim).is_err());
    }

    #[test]
    fn inset_depth_for_50_ohm() {
        let g = reference_patch();
        let em = em_at_5p9();
        let l1 = solve_inset_depth(50.0, &g, &em, InsetDimension::Width).unwrap();
        assert!((l1 - 4.74e-3).abs() < 0.01e-3, "l1 = {l1}");
        assert!((l1 - 5e-3).abs() / 5e-3 < 0.10);
        assert_relative_eq!(
            inset_resistance(l1, &g, &em, InsetDimension::Width).unwrap(),
            50.0,
            max_relative = 1e-9
        );
        let l1_len = solve_inset_depth(50.0, &g, &em, InsetDimension::Length).unwrap();
        assert!((l1_len - 3.55e-3).abs() < 0.01e-3, "l1 = {l1_len}");
        assert_eq!(
            solve_inset_depth(em.r_in0, &g, &em, InsetDimension::Width).unwrap(),
            0.0
        );
        assert!(matches!(
            solve_inset_depth(200.0, &g, &em, InsetDimension::Width),
            Err(MicrostripError::ResistanceOutOfRange { .. })
        ));
    }

    #[test]
    fn geometry_invariants() {
        let mut g = reference_patch();
        assert!(g.validate().is_ok());
        g.l_1 = g.l_p;
        assert!(g.validate().is_err());
        let mut g = reference_patch();
        g.g_1 = g.w_p / 4.0;
        assert!(g.validate().is_err());
    }

    proptest! {
        #[test]
        fn line_width_round_trip(w in 0.1e-3..20e-3f64, er in 1.5..10.2f64) {
            let sub = Substrate::new(er, 0.0, 1.6e-3).unwrap();
            let z = line_params(w, &sub).z0;
            prop_assume!((10.0..=200.0).contains(&z));
            let back = line_width_for_z0(z, &sub).unwrap();
            prop_assert!((back - w).abs() / w < 1e-3);
        }

        #[test]
        fn eps_eff_bounded(w in 1e-5..1.0f64, er in 1.0..12.0f64, h in 1e-4..5e-3f64) {
            let sub = Substrate::new(er, 0.0, h).unwrap();
            let p = line_params(w, &sub);
            prop_assert!(p.eps_eff >= 1.0 && p.eps_eff <= er);
            prop_assert!(p.z0 > 0.0);
        }

        #[test]
        fn inset_law_monotone(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let g = reference_patch();
            let em = em_at_5p9();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let half = g.w_p / 2.0;
            let r_lo = inset_resistance(lo * half, &g, &em, InsetDimension::Width).unwrap();
            let r_hi = inset_resistance(hi * half, &g, &em, InsetDimension::Width).unwrap();
            prop_assert!(r_lo >= r_hi);
            prop_assert!(r_hi >= 0.0 && r_lo <= em.r_in0);
        }

        #[test]
        fn dimensionless_outputs_scale_invariant(k in 0.2..5.0f64, w in 1e-3..40e-3f64, l1 in 0.0..0.5f64) {
            let sub = reference_sub();
            let scaled = Substrate { h: sub.h * k, ..sub };
            let e1 = line_params(w, &sub).eps_eff;
            let e2 = line_params(w * k, &scaled).eps_eff;
            prop_assert!((e1 - e2).abs() / e1 < 0.01);
            let f = 5.9e9;
            let g1 = edge_conductance(w, f, &sub).unwrap();
            let g2 = edge_conductance(w * k, f / k, &scaled).unwrap();
            prop_assert!((g1 - g2).abs() / g1 < 0.01);
            let g = reference_patch();
            let gk = PatchGeometry { l_p: g.l_p * k, w_p: g.w_p * k, l_1: g.l_1 * k, g_1: g.g_1 * k, w_f: g.w_f * k, l_f: g.l_f * k };
            let em = DerivedEm::at(g.w_p, f, &sub).unwrap();
            let emk = DerivedEm::at(gk.w_p, f / k, &scaled).unwrap();
            let c1 = inset_resistance(l1 * g.w_p / 2.0, &g, &em, InsetDimension::Width).unwrap() / em.r_in0;
            let c2 = inset_resistance(l1 * gk.w_p / 2.0, &gk, &emk, InsetDimension::Width).unwrap() / emk.r_in0;
            prop_assert!((c1 - c2).abs() < 0.01);
        }
    }

    #[test]
    fn synthesis_round_trip_sweep() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
        let mut checked = 0;
        while checked < 100 {
            let er = rng.random_range(1.5..10.2);
            let h = rng.random_range(0.1e-3..3.2e-3);
            let f0 = 10f64.powf(rng.random_range(0.5e9f64.log10()..100e9f64.log10()));
            // thin-substrate regime of the closed forms
            if wavenumber(f0) * h > 0.5 {
                continue;
            }
            let sub = Substrate::new(er, 0.001, h).unwrap();
            let (l_p, w_p) = synthesize_resonator(f0, &sub).unwrap();
            let f = cavity_frequency(l_p, w_p, &sub);
            assert!((f / f0 - 1.0).abs() < 1e-4, "er {er} h {h} f0 {f0}: {f}");
            checked += 1;
        }
    }
}
