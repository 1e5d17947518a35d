//! Staged two- and three-element layouts: preset dimension tables, placement,
//! geometric validation and JSON/SVG/CSV export.
//!
//! Coordinate conventions (all JSON values in meters):
//! - origin at the board centre, x along `W_g`, y along `L_g`;
//! - patch resonant length runs along y; elements sit side by side along x;
//! - the Tx element is on the -x side with its feed toward -y, Rx elements
//!   are rotated 180 degrees (feed toward +y); each patch-plus-feed assembly
//!   is centred on y = 0;
//! - the three-element layout is Rx1 | Tx | Rx2 with Tx at x = 0;
//! - isolation fences run along y at `g_3` from the facing patch edges;
//!   corner vias sit one diameter inside the fed-edge corners; the stage III
//!   shorting row runs along x one diameter inside the far radiating edge;
//! - a U-slot is centred on its element's feed, its base `y_s` from the
//!   board edge on the feed side, arms opening toward the board centre.
//!
//! Via counts are not part of the dimension tables; they follow from the
//! fence extent and pitch and are marked as derived in every export.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dgs::DgsGeometry;
use crate::microstrip::{effective_permittivity, PatchGeometry, Substrate};
use crate::units::C0;

pub const SCHEMA: &str = "fdkit.layout/1";

const MM: f64 = 1e-3;
/// Geometric comparisons tolerate this much, m.
const GEOM_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LayoutError {
    #[error("unknown dimension `{name}` for stage {stage}; known: {known}")]
    UnknownDimension { name: String, stage: Stage, known: String },
    #[error("dimension `{0}` must be a finite number")]
    NonFinite(String),
    #[error("invalid layout: {0}")]
    Invalid(String),
    #[error("unknown stage `{0}` (expected I, II, III, IV or THREE_ELEMENT)")]
    UnknownStage(String),
    #[error("layout JSON: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
    III,
    IV,
    #[serde(rename = "THREE_ELEMENT")]
    ThreeElement,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::I, Stage::II, Stage::III, Stage::IV, Stage::ThreeElement];

    fn has_vias(self) -> bool {
        self != Stage::I
    }

    fn has_shorting_row(self) -> bool {
        matches!(self, Stage::III | Stage::IV | Stage::ThreeElement)
    }

    fn has_dgs(self) -> bool {
        matches!(self, Stage::IV | Stage::ThreeElement)
    }

    /// Published dimension table in mm, in table order, followed by the board.
    pub fn preset_mm(self) -> Vec<(&'static str, f64)> {
        let shorted = [
            ("l_p2", 13.2),
            ("w_p", 21.6),
            ("l'_2", 7.6),
            ("g'_1", 1.625),
            ("w'_f", 1.75),
            ("l'_f2", 10.6),
            ("g_2", 0.75),
            ("g_3", 1.5),
            ("g", 6.0),
            ("d", 1.0),
            ("p", 1.5),
        ];
        let mut dims: Vec<(&'static str, f64)> = match self {
            Stage::I => vec![
                ("l_p", 16.2),
                ("w_p", 21.6),
                ("l_f", 8.0),
                ("w_f", 2.75),
                ("l_1", 5.0),
                ("g_1", 0.625),
                ("g", 6.0),
            ],
            Stage::II => vec![
                ("l_p1", 20.52),
                ("w_p", 21.6),
                ("l'_1", 7.1),
                ("g'_1", 1.625),
                ("w'_f", 1.75),
                ("l'_f1", 10.1),
                ("g_2", 0.75),
                ("g_3", 1.5),
                ("g", 6.0),
                ("d", 1.0),
                ("p", 1.5),
            ],
            Stage::III => shorted.to_vec(),
            Stage::IV => {
                let mut v = shorted.to_vec();
                v.extend([
                    ("l_d1", 3.0),
                    ("l_d2", 11.5),
                    ("w_d", 1.0),
                    ("d_s", 0.5),
                    ("y_s", 21.15),
                ]);
                v
            }
            Stage::ThreeElement => {
                let mut v = shorted.to_vec();
                for e in v.iter_mut() {
                    if e.0 == "g_2" {
                        e.1 = 2.0;
                    }
                }
                // arm length and slot width carried over from stage IV
                v.extend([("l_d", 17.15), ("l_d1", 3.0), ("w_d", 1.0), ("d_s", 0.5), ("y_s", 0.65)]);
                v
            }
        };
        dims.extend([("L_g", 38.0), ("W_g", 80.0), ("h", 1.6)]);
        dims
    }
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::I => "I",
            Stage::II => "II",
            Stage::III => "III",
            Stage::IV => "IV",
            Stage::ThreeElement => "THREE_ELEMENT",
        })
    }
}

impl std::str::FromStr for Stage {
    type Err = LayoutError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "I" | "1" => Ok(Stage::I),
            "II" | "2" => Ok(Stage::II),
            "III" | "3" => Ok(Stage::III),
            "IV" | "4" => Ok(Stage::IV),
            "THREE_ELEMENT" | "THREE" => Ok(Stage::ThreeElement),
            _ => Err(LayoutError::UnknownStage(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoardOutline {
    pub l_g: f64,
    pub w_g: f64,
    pub h: f64,
}

impl BoardOutline {
    fn rect(&self) -> Rect {
        Rect::new(-self.w_g / 2.0, -self.l_g / 2.0, self.w_g / 2.0, self.l_g / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Tx,
    Rx,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedElement {
    pub label: String,
    pub role: Role,
    pub patch: PatchGeometry,
    /// Patch centre, m.
    pub center: [f64; 2],
    /// Direction of the feed along y: -1 or +1.
    pub feed_dir: i8,
}

impl PlacedElement {
    fn sign(&self) -> f64 {
        f64::from(self.feed_dir.signum())
    }

    pub fn patch_rect(&self) -> Rect {
        let [cx, cy] = self.center;
        let (hw, hl) = (self.patch.w_p / 2.0, self.patch.l_p / 2.0);
        Rect::new(cx - hw, cy - hl, cx + hw, cy + hl)
    }

    /// y of the radiating edge the feed enters.
    pub fn fed_edge_y(&self) -> f64 {
        self.center[1] + self.sign() * self.patch.l_p / 2.0
    }

    /// Feed line outside the patch.
    pub fn feed_rect(&self) -> Rect {
        let cx = self.center[0];
        let y0 = self.fed_edge_y();
        let y1 = y0 + self.sign() * self.patch.l_f;
        Rect::spanning(cx - self.patch.w_f / 2.0, y0, cx + self.patch.w_f / 2.0, y1)
    }

    /// The two inset gaps cut into the patch beside the feed.
    pub fn notch_rects(&self) -> [Rect; 2] {
        let cx = self.center[0];
        let y0 = self.fed_edge_y();
        let y1 = y0 - self.sign() * self.patch.l_1;
        let inner = self.patch.w_f / 2.0;
        let outer = inner + self.patch.g_1;
        [
            Rect::spanning(cx - outer, y0, cx - inner, y1),
            Rect::spanning(cx + inner, y0, cx + outer, y1),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FenceKind {
    /// Row between two elements.
    Isolation,
    /// Row inside a patch.
    Shorting,
    /// Pair of vias at the fed-edge corners of a patch.
    Corner,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViaFence {
    pub name: String,
    pub kind: FenceKind,
    pub axis: Axis,
    /// Via diameter, m.
    pub d: f64,
    /// Centre-to-centre pitch, m.
    pub p: f64,
    pub count: usize,
    /// Centre of the first via; the rest follow along +axis.
    pub start: [f64; 2],
    /// Distance of the row from the edge it is referenced to, m.
    pub offset: f64,
    /// `true` when `count` was computed from the fence extent.
    pub count_derived: bool,
}

impl ViaFence {
    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.count)
            .map(|k| {
                let t = k as f64 * self.p;
                match self.axis {
                    Axis::X => [self.start[0] + t, self.start[1]],
                    Axis::Y => [self.start[0], self.start[1] + t],
                }
            })
            .collect()
    }

    fn check(&self) -> Result<(), LayoutError> {
        if !(self.d > 0.0 && self.p > self.d) {
            return Err(LayoutError::Invalid(format!(
                "fence {}: pitch {} must exceed diameter {}",
                self.name, self.p, self.d
            )));
        }
        if self.count < 2 {
            return Err(LayoutError::Invalid(format!(
                "fence {}: needs at least two vias",
                self.name
            )));
        }
        Ok(())
    }

    /// Centred row of as many vias as fit in `extent` at pitch `p`.
    #[allow(clippy::too_many_arguments)]
    fn centred(
        name: String,
        kind: FenceKind,
        axis: Axis,
        d: f64,
        p: f64,
        mid: [f64; 2],
        extent: f64,
        offset: f64,
    ) -> Self {
        let count = ((extent - d) / p + 1e-9).floor().max(0.0) as usize + 1;
        let count = count.max(2);
        let half = (count - 1) as f64 * p / 2.0;
        let start = match axis {
            Axis::X => [mid[0] - half, mid[1]],
            Axis::Y => [mid[0], mid[1] - half],
        };
        Self {
            name,
            kind,
            axis,
            d,
            p,
            count,
            start,
            offset,
            count_derived: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedDgs {
    pub label: String,
    pub geometry: DgsGeometry,
    /// x of the slot centre line (the feed axis), m.
    pub center_x: f64,
    /// y of the outer edge of the slot base, m.
    pub base_y: f64,
    /// Direction the arms open along y: -1 or +1.
    pub opens: i8,
}

impl PlacedDgs {
    /// Base followed by the two arms.
    pub fn rects(&self) -> [Rect; 3] {
        let g = &self.geometry;
        let s = f64::from(self.opens.signum());
        let (x0, x1) = (self.center_x - g.l_d2 / 2.0, self.center_x + g.l_d2 / 2.0);
        let y_in = self.base_y + s * g.w_d;
        let y_tip = y_in + s * g.l_d1;
        [
            Rect::spanning(x0, self.base_y, x1, y_in),
            Rect::spanning(x0, y_in, x0 + g.w_d, y_tip),
            Rect::spanning(x1 - g.w_d, y_in, x1, y_tip),
        ]
    }
}

/// Named dimension, m.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dimension {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedLayout {
    pub schema: String,
    pub stage: Stage,
    /// Design frequency, Hz.
    pub f0: f64,
    pub board: BoardOutline,
    pub substrate: Substrate,
    /// Dimension table the geometry was built from, in table order.
    pub dimensions: Vec<Dimension>,
    /// Edge-to-edge spacing between neighbouring patches.
    pub g: f64,
    pub g_2: Option<f64>,
    pub g_3: Option<f64>,
    pub elements: Vec<PlacedElement>,
    pub fences: Vec<ViaFence>,
    pub dgs: Vec<PlacedDgs>,
}

impl StagedLayout {
    pub fn dimension(&self, name: &str) -> Option<f64> {
        self.dimensions.iter().find(|d| d.name == name).map(|d| d.value)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("layout serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LayoutError> {
        let l: StagedLayout = serde_json::from_str(text).map_err(|e| LayoutError::Json(e.to_string()))?;
        if l.schema != SCHEMA {
            return Err(LayoutError::Json(format!("schema `{}`, expected `{SCHEMA}`", l.schema)));
        }
        Ok(l)
    }
}

struct Dims {
    stage: Stage,
    map: BTreeMap<&'static str, f64>,
}

impl Dims {
    fn get(&self, name: &str) -> f64 {
        self.map[name]
    }

    fn opt(&self, name: &str) -> Option<f64> {
        self.map.get(name).copied()
    }
}

/// Preset layout for `stage` with dimension overrides given in mm.
///
/// Unknown names, non-finite values and dimensions that break a component
/// invariant are errors. Placement problems (overlaps, features off the
/// board, pitch too coarse) are left to [`validate`].
pub fn build_stage(stage: Stage, overrides_mm: &BTreeMap<String, f64>) -> Result<StagedLayout, LayoutError> {
    let preset = stage.preset_mm();
    let mut map: BTreeMap<&'static str, f64> = preset.iter().copied().collect();
    for (name, &v) in overrides_mm {
        let Some(slot) = map.get_mut(name.as_str()) else {
            return Err(LayoutError::UnknownDimension {
                name: name.clone(),
                stage,
                known: preset.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
            });
        };
        if !v.is_finite() {
            return Err(LayoutError::NonFinite(name.clone()));
        }
        *slot = v;
    }
    for v in map.values_mut() {
        *v *= MM;
    }
    let dims = Dims { stage, map };
    let dimensions = preset
        .iter()
        .map(|(n, _)| Dimension {
            name: n.to_string(),
            value: dims.get(n),
        })
        .collect();
    assemble(&dims, dimensions)
}

fn patch_for(d: &Dims) -> PatchGeometry {
    match d.stage {
        Stage::I => PatchGeometry {
            l_p: d.get("l_p"),
            w_p: d.get("w_p"),
            l_1: d.get("l_1"),
            g_1: d.get("g_1"),
            w_f: d.get("w_f"),
            l_f: d.get("l_f"),
        },
        Stage::II => PatchGeometry {
            l_p: d.get("l_p1"),
            w_p: d.get("w_p"),
            l_1: d.get("l'_1"),
            g_1: d.get("g'_1"),
            w_f: d.get("w'_f"),
            l_f: d.get("l'_f1"),
        },
        _ => PatchGeometry {
            l_p: d.get("l_p2"),
            w_p: d.get("w_p"),
            l_1: d.get("l'_2"),
            g_1: d.get("g'_1"),
            w_f: d.get("w'_f"),
            l_f: d.get("l'_f2"),
        },
    }
}

fn dgs_for(d: &Dims) -> Result<DgsGeometry, LayoutError> {
    let l_d1 = d.get("l_d1");
    let l_d2 = match d.opt("l_d") {
        Some(total) => total - 2.0 * l_d1,
        None => d.get("l_d2"),
    };
    let g = DgsGeometry {
        l_d1,
        l_d2,
        w_d: d.get("w_d"),
        y_s: d.get("y_s"),
        d_s: d.get("d_s"),
    };
    g.validate().map_err(LayoutError::Invalid)?;
    if g.l_d2 <= 2.0 * g.w_d {
        return Err(LayoutError::Invalid(format!(
            "slot base {} must be longer than both arm widths",
            g.l_d2
        )));
    }
    Ok(g)
}

fn assemble(d: &Dims, dimensions: Vec<Dimension>) -> Result<StagedLayout, LayoutError> {
    let stage = d.stage;
    let board = BoardOutline {
        l_g: d.get("L_g"),
        w_g: d.get("W_g"),
        h: d.get("h"),
    };
    if !(board.l_g > 0.0 && board.w_g > 0.0) {
        return Err(LayoutError::Invalid("board dimensions must be > 0".into()));
    }
    let substrate = Substrate {
        h: board.h,
        ..Substrate::rt5880_1p6mm()
    };
    substrate.validate().map_err(|e| LayoutError::Invalid(e.to_string()))?;
    let patch = patch_for(d);
    patch.validate().map_err(|e| LayoutError::Invalid(e.to_string()))?;

    let g = d.get("g");
    let pitch_x = patch.w_p + g;
    let assembly = patch.l_p + patch.l_f;
    let element = |label: &str, role: Role, x: f64| {
        let feed_dir: i8 = if role == Role::Tx { -1 } else { 1 };
        // shift so the patch-plus-feed assembly is centred on y = 0
        let cy = -f64::from(feed_dir) * (assembly / 2.0 - patch.l_p / 2.0);
        PlacedElement {
            label: label.into(),
            role,
            patch,
            center: [x, cy],
            feed_dir,
        }
    };
    let elements = if stage == Stage::ThreeElement {
        vec![
            element("Rx1", Role::Rx, -pitch_x),
            element("Tx", Role::Tx, 0.0),
            element("Rx2", Role::Rx, pitch_x),
        ]
    } else {
        vec![
            element("Tx", Role::Tx, -pitch_x / 2.0),
            element("Rx", Role::Rx, pitch_x / 2.0),
        ]
    };

    let mut fences = Vec::new();
    let g_3 = d.opt("g_3");
    if stage.has_vias() {
        let (vd, vp, g3) = (d.get("d"), d.get("p"), d.get("g_3"));
        for pair in elements.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            let left_edge = a.patch_rect().x1;
            let right_edge = b.patch_rect().x0;
            for (side, x) in [(&a.label, left_edge + g3), (&b.label, right_edge - g3)] {
                fences.push(ViaFence::centred(
                    format!("isolation:{side}:{}-{}", a.label, b.label),
                    FenceKind::Isolation,
                    Axis::Y,
                    vd,
                    vp,
                    [x, 0.0],
                    assembly,
                    g3,
                ));
            }
        }
        for e in &elements {
            let r = e.patch_rect();
            let y = e.fed_edge_y() - e.sign() * vd;
            fences.push(ViaFence {
                name: format!("corner:{}", e.label),
                kind: FenceKind::Corner,
                axis: Axis::X,
                d: vd,
                p: r.width() - 2.0 * vd,
                count: 2,
                start: [r.x0 + vd, y],
                offset: vd,
                count_derived: false,
            });
            if stage.has_shorting_row() {
                let far = e.center[1] - e.sign() * e.patch.l_p / 2.0;
                fences.push(ViaFence::centred(
                    format!("shorting:{}", e.label),
                    FenceKind::Shorting,
                    Axis::X,
                    vd,
                    vp,
                    [e.center[0], far + e.sign() * vd],
                    e.patch.w_p - 2.0 * vd,
                    vd,
                ));
            }
        }
        for f in &fences {
            f.check()?;
        }
    }

    let mut dgs = Vec::new();
    if stage.has_dgs() {
        let geometry = dgs_for(d)?;
        for e in &elements {
            let s = e.sign();
            dgs.push(PlacedDgs {
                label: format!("dgs:{}", e.label),
                geometry,
                center_x: e.center[0],
                base_y: s * (board.l_g / 2.0 - geometry.y_s),
                opens: -e.feed_dir,
            });
        }
    }

    Ok(StagedLayout {
        schema: SCHEMA.into(),
        stage,
        f0: 5.9e9,
        board,
        substrate,
        dimensions,
        g,
        g_2: d.opt("g_2"),
        g_3,
        elements,
        fences,
        dgs,
    })
}

/// Axis-aligned rectangle, m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self { x0, y0, x1, y1 }
    }

    fn spanning(xa: f64, ya: f64, xb: f64, yb: f64) -> Self {
        Self::new(xa.min(xb), ya.min(yb), xa.max(xb), ya.max(yb))
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    fn contains_rect(&self, o: &Rect) -> bool {
        o.x0 >= self.x0 - GEOM_EPS
            && o.x1 <= self.x1 + GEOM_EPS
            && o.y0 >= self.y0 - GEOM_EPS
            && o.y1 <= self.y1 + GEOM_EPS
    }

    /// Shared area or a shared edge.
    fn touches(&self, o: &Rect) -> bool {
        self.x0 <= o.x1 + GEOM_EPS
            && o.x0 <= self.x1 + GEOM_EPS
            && self.y0 <= o.y1 + GEOM_EPS
            && o.y0 <= self.y1 + GEOM_EPS
    }

    fn contains_circle(&self, c: [f64; 2], r: f64) -> bool {
        self.contains_rect(&Rect::new(c[0] - r, c[1] - r, c[0] + r, c[1] + r))
    }

    fn meets_circle(&self, c: [f64; 2], r: f64) -> bool {
        let dx = (c[0] - c[0].clamp(self.x0, self.x1)).abs();
        let dy = (c[1] - c[1].clamp(self.y0, self.y1)).abs();
        dx * dx + dy * dy < r * r - GEOM_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationKind {
    OutsideBoard,
    NonPositiveGap,
    Overlap,
    PitchNotAboveDiameter,
    PitchGuard,
    ViaMisplaced,
    DgsOutsideGround,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Feature names involved, sorted.
    pub features: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// lambda_g / 4 at f0 used for the pitch guard, m.
    pub quarter_guide_wavelength: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

enum Shape {
    Rect(Rect),
    Via([f64; 2], f64),
}

struct Feature {
    name: String,
    /// Element label for copper and in-patch vias; `None` for free features.
    owner: Option<String>,
    layer: Layer,
    shape: Shape,
}

#[derive(PartialEq, Clone, Copy)]
enum Layer {
    Top,
    Drill,
    Ground,
}

fn features(l: &StagedLayout) -> Vec<Feature> {
    let mut out = Vec::new();
    for e in &l.elements {
        out.push(Feature {
            name: format!("patch:{}", e.label),
            owner: Some(e.label.clone()),
            layer: Layer::Top,
            shape: Shape::Rect(e.patch_rect()),
        });
        out.push(Feature {
            name: format!("feed:{}", e.label),
            owner: Some(e.label.clone()),
            layer: Layer::Top,
            shape: Shape::Rect(e.feed_rect()),
        });
    }
    for f in &l.fences {
        let owner = match f.kind {
            FenceKind::Isolation => None,
            _ => f.name.split(':').nth(1).map(str::to_string),
        };
        for (k, c) in f.centers().into_iter().enumerate() {
            out.push(Feature {
                name: format!("{}#{k}", f.name),
                owner: owner.clone(),
                layer: Layer::Drill,
                shape: Shape::Via(c, f.d / 2.0),
            });
        }
    }
    for s in &l.dgs {
        for (r, part) in s.rects().into_iter().zip(["base", "arm0", "arm1"]) {
            out.push(Feature {
                name: format!("{}:{part}", s.label),
                owner: None,
                layer: Layer::Ground,
                shape: Shape::Rect(r),
            });
        }
    }
    out
}

fn push(v: &mut Vec<Violation>, kind: ViolationKind, names: &[&str], detail: String) {
    let mut features: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    features.sort();
    v.push(Violation { kind, features, detail });
}

/// Geometric and manufacturing checks. Every violation names the features
/// involved; checks are per feature or per pair, so adding a feature that is
/// itself clean never changes the violations of the others.
pub fn validate(l: &StagedLayout) -> ValidationReport {
    let mut v = Vec::new();
    let board = l.board.rect();
    let w_p = l.elements.first().map_or(l.board.w_g, |e| e.patch.w_p);
    let eps_eff = effective_permittivity(w_p, &l.substrate);
    let quarter = C0 / (l.f0 * eps_eff.sqrt()) / 4.0;

    if !(l.g > 0.0) {
        push(
            &mut v,
            ViolationKind::NonPositiveGap,
            &["layout"],
            format!("element spacing g = {} m", l.g),
        );
    }
    for f in &l.fences {
        if f.p <= f.d {
            push(
                &mut v,
                ViolationKind::PitchNotAboveDiameter,
                &[&f.name],
                format!("p = {} m, d = {} m", f.p, f.d),
            );
        }
        if f.kind != FenceKind::Corner && f.count >= 2 && f.p >= quarter {
            push(
                &mut v,
                ViolationKind::PitchGuard,
                &[&f.name],
                format!(
                    "pitch {:.4} mm is not below lambda_g/4 = {:.4} mm",
                    f.p / MM,
                    quarter / MM
                ),
            );
        }
    }

    let feats = features(l);
    for f in &feats {
        let inside = match &f.shape {
            Shape::Rect(r) => board.contains_rect(r),
            Shape::Via(c, r) => board.contains_circle(*c, *r),
        };
        if !inside {
            let kind = if f.layer == Layer::Ground {
                ViolationKind::DgsOutsideGround
            } else {
                ViolationKind::OutsideBoard
            };
            push(&mut v, kind, &[&f.name], "extends past the board outline".into());
        }
    }

    // in-patch vias must land on their own patch copper, clear of the inset gaps
    for f in feats.iter().filter(|f| f.layer == Layer::Drill && f.owner.is_some()) {
        let Shape::Via(c, r) = f.shape else { continue };
        let owner = f.owner.as_deref().unwrap_or_default();
        let Some(e) = l.elements.iter().find(|e| e.label == owner) else {
            push(
                &mut v,
                ViolationKind::ViaMisplaced,
                &[&f.name],
                format!("no element `{owner}`"),
            );
            continue;
        };
        let on_patch = e.patch_rect().contains_circle(c, r);
        let in_gap = e.notch_rects().iter().any(|n| n.meets_circle(c, r));
        if !on_patch || in_gap {
            push(
                &mut v,
                ViolationKind::ViaMisplaced,
                &[&f.name],
                format!("not on solid copper of {owner}"),
            );
        }
    }

    for (i, a) in feats.iter().enumerate() {
        for b in &feats[i + 1..] {
            if let Some(detail) = pair_conflict(a, b) {
                push(&mut v, ViolationKind::Overlap, &[&a.name, &b.name], detail);
            }
        }
    }

    ValidationReport {
        quarter_guide_wavelength: quarter,
        violations: v,
    }
}

fn pair_conflict(a: &Feature, b: &Feature) -> Option<String> {
    use Layer::*;
    match (&a.shape, &b.shape, a.layer, b.layer) {
        (Shape::Rect(ra), Shape::Rect(rb), Top, Top) if a.owner != b.owner => {
            ra.touches(rb).then(|| "copper of different elements touches".into())
        }
        (Shape::Rect(ra), Shape::Rect(rb), Ground, Ground) => {
            let same_slot = a.name.rsplit_once(':').map(|x| x.0) == b.name.rsplit_once(':').map(|x| x.0);
            (!same_slot && ra.touches(rb)).then(|| "ground slots merge".into())
        }
        (Shape::Via(ca, r1), Shape::Via(cb, r2), _, _) => {
            let dist = ((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt();
            (dist < r1 + r2 - GEOM_EPS).then(|| "vias overlap".into())
        }
        (Shape::Via(c, r), Shape::Rect(rect), _, layer) | (Shape::Rect(rect), Shape::Via(c, r), layer, _) => {
            let via_owner = if matches!(a.shape, Shape::Via(..)) {
                &a.owner
            } else {
                &b.owner
            };
            let rect_owner = if matches!(a.shape, Shape::Rect(..)) {
                &a.owner
            } else {
                &b.owner
            };
            let conflict = match layer {
                // in-patch vias may sit on their own element's copper
                Top => via_owner.is_none() || via_owner != rect_owner,
                Ground => true,
                Drill => false,
            };
            (conflict && rect.meets_circle(*c, *r)).then(|| "via intersects a feature".into())
        }
        _ => None,
    }
}

/// Millimetre value rounded to 1e-9 mm with trailing zeros removed.
pub fn fmt_mm(meters: f64) -> String {
    let mm = (meters / MM * 1e9).round() / 1e9;
    let mm = if mm == 0.0 { 0.0 } else { mm };
    format!("{mm}")
}

/// `name,value,unit` rows: the dimension table in mm, derived slot length
/// and derived via counts.
pub fn export_csv(l: &StagedLayout) -> String {
    let mut out = String::from("name,value,unit\n");
    for d in &l.dimensions {
        let _ = writeln!(out, "{},{},mm", d.name, fmt_mm(d.value));
    }
    if let Some(s) = l.dgs.first() {
        if l.dimension("l_d").is_none() {
            let _ = writeln!(out, "l_d,{},mm (derived)", fmt_mm(s.geometry.total_length()));
        }
        if l.dimension("l_d2").is_none() {
            let _ = writeln!(out, "l_d2,{},mm (derived)", fmt_mm(s.geometry.l_d2));
        }
    }
    for f in &l.fences {
        let unit = if f.count_derived { "vias (derived)" } else { "vias" };
        let _ = writeln!(out, "vias:{},{},{}", f.name, f.count, unit);
    }
    out
}

fn svg_rect(out: &mut String, r: &Rect, style: &str) {
    let _ = writeln!(
        out,
        r#"  <rect x="{}" y="{}" width="{}" height="{}" {style}/>"#,
        fmt_mm(r.x0),
        fmt_mm(-r.y1),
        fmt_mm(r.width()),
        fmt_mm(r.height())
    );
}

/// Top and bottom outline in one drawing, mm user units, +y up on the page.
pub fn export_svg(l: &StagedLayout) -> String {
    let b = l.board.rect();
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="{}mm" height="{}mm">"#,
        fmt_mm(b.x0),
        fmt_mm(-b.y1),
        fmt_mm(b.width()),
        fmt_mm(b.height()),
        fmt_mm(b.width()),
        fmt_mm(b.height())
    );
    let _ = writeln!(out, "  <title>stage {}</title>", l.stage);
    svg_rect(&mut out, &b, r##"fill="#f4f1e8" stroke="#000" stroke-width="0.1""##);
    for s in &l.dgs {
        for r in s.rects() {
            svg_rect(
                &mut out,
                &r,
                r##"fill="none" stroke="#1f5fa8" stroke-width="0.1" stroke-dasharray="0.4 0.2""##,
            );
        }
    }
    for e in &l.elements {
        svg_rect(&mut out, &e.patch_rect(), r##"fill="#c87533""##);
        for n in e.notch_rects() {
            svg_rect(&mut out, &n, r##"fill="#f4f1e8""##);
        }
        svg_rect(&mut out, &e.feed_rect(), r##"fill="#c87533""##);
    }
    for f in &l.fences {
        for c in f.centers() {
            let _ = writeln!(
                out,
                r##"  <circle cx="{}" cy="{}" r="{}" fill="#333"/>"##,
                fmt_mm(c[0]),
                fmt_mm(-c[1]),
                fmt_mm(f.d / 2.0)
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn preset(stage: Stage) -> StagedLayout {
        build_stage(stage, &BTreeMap::new()).unwrap()
    }

    fn with(stage: Stage, name: &str, mm: f64) -> Result<StagedLayout, LayoutError> {
        build_stage(stage, &BTreeMap::from([(name.to_string(), mm)]))
    }

    fn kinds(r: &ValidationReport) -> Vec<ViolationKind> {
        r.violations.iter().map(|v| v.kind).collect()
    }

    #[test]
    fn stage_one_dimensions() {
        let l = preset(Stage::I);
        let p = l.elements[0].patch;
        assert_eq!(fmt_mm(p.l_p), "16.2");
        assert_eq!(fmt_mm(p.w_p), "21.6");
        assert_eq!(fmt_mm(l.g), "6");
        assert_eq!(l.elements.len(), 2);
        assert!(l.fences.is_empty() && l.dgs.is_empty());
    }

    #[test]
    fn stage_four_slot() {
        let l = preset(Stage::IV);
        let g = l.dgs[0].geometry;
        let got: Vec<String> = [g.l_d1, g.l_d2, g.w_d, g.y_s, g.d_s]
            .iter()
            .map(|&v| fmt_mm(v))
            .collect();
        assert_eq!(got, ["3", "11.5", "1", "21.15", "0.5"]);
        assert_eq!(l.dgs.len(), 2);
    }

    #[test]
    fn three_element_slot() {
        let l = preset(Stage::ThreeElement);
        assert_eq!(l.elements.len(), 3);
        assert_eq!(l.elements[1].role, Role::Tx);
        assert_eq!(l.elements[1].center[0], 0.0);
        let g = l.dgs[0].geometry;
        assert_eq!(fmt_mm(g.total_length()), "17.15");
        assert_eq!(fmt_mm(g.y_s), "0.65");
        assert_eq!(fmt_mm(l.g_2.unwrap()), "2");
    }

    #[test]
    fn published_tables_digit_for_digit() {
        let expect: [(Stage, &str); 5] = [
            (Stage::I, "l_p=16.2 w_p=21.6 l_f=8 w_f=2.75 l_1=5 g_1=0.625 g=6"),
            (Stage::II, "l_p1=20.52 w_p=21.6 l'_1=7.1 g'_1=1.625 w'_f=1.75 l'_f1=10.1 g_2=0.75 g_3=1.5 g=6 d=1 p=1.5"),
            (Stage::III, "l_p2=13.2 w_p=21.6 l'_2=7.6 g'_1=1.625 w'_f=1.75 l'_f2=10.6 g_2=0.75 g_3=1.5 g=6 d=1 p=1.5"),
            (
                Stage::IV,
                "l_p2=13.2 w_p=21.6 l'_2=7.6 g'_1=1.625 w'_f=1.75 l'_f2=10.6 g_2=0.75 g_3=1.5 g=6 d=1 p=1.5 l_d1=3 l_d2=11.5 w_d=1 d_s=0.5 y_s=21.15",
            ),
            (
                Stage::ThreeElement,
                "l_p2=13.2 w_p=21.6 l'_2=7.6 g'_1=1.625 w'_f=1.75 l'_f2=10.6 g_2=2 g_3=1.5 g=6 d=1 p=1.5 l_d=17.15 l_d1=3 w_d=1 d_s=0.5 y_s=0.65",
            ),
        ];
        for (stage, published) in expect {
            let l = preset(stage);
            let table: Vec<String> = l
                .dimensions
                .iter()
                .filter(|d| !matches!(d.name.as_str(), "L_g" | "W_g" | "h"))
                .map(|d| format!("{}={}", d.name, fmt_mm(d.value)))
                .collect();
            assert_eq!(table.join(" "), published, "stage {stage}");
            assert_eq!(fmt_mm(l.board.l_g), "38");
            assert_eq!(fmt_mm(l.board.w_g), "80");
        }
    }

    #[test]
    fn presets_validate_clean() {
        for stage in Stage::ALL {
            let r = validate(&preset(stage));
            assert!(r.is_clean(), "stage {stage}: {:#?}", r.violations);
        }
    }

    #[test]
    fn pitch_guard() {
        let l = with(Stage::II, "p", 15.0).unwrap();
        let r = validate(&l);
        assert!(
            (r.quarter_guide_wavelength / MM - 8.9).abs() < 0.05,
            "{}",
            r.quarter_guide_wavelength
        );
        assert!(kinds(&r).contains(&ViolationKind::PitchGuard), "{:?}", kinds(&r));
        let guard: Vec<_> = r
            .violations
            .iter()
            .filter(|v| v.kind == ViolationKind::PitchGuard)
            .collect();
        assert!(guard.iter().all(|v| !v.features[0].starts_with("corner")));
    }

    #[test]
    fn negative_gap() {
        let r = validate(&with(Stage::I, "g", -1.0).unwrap());
        let k = kinds(&r);
        assert!(k.contains(&ViolationKind::NonPositiveGap));
        assert!(k.contains(&ViolationKind::Overlap));
    }

    #[test]
    fn oversized_board_features() {
        let r = validate(&with(Stage::I, "W_g", 40.0).unwrap());
        assert!(kinds(&r).contains(&ViolationKind::OutsideBoard));
        let r = validate(&with(Stage::IV, "y_s", 0.2).unwrap());
        assert!(kinds(&r).is_empty(), "{:?}", r.violations);
        let r = validate(&with(Stage::IV, "y_s", 60.0).unwrap());
        assert!(kinds(&r).contains(&ViolationKind::DgsOutsideGround));
    }

    #[test]
    fn override_errors() {
        assert!(matches!(
            with(Stage::I, "p", 1.0),
            Err(LayoutError::UnknownDimension { .. })
        ));
        assert!(matches!(with(Stage::II, "p", 0.5), Err(LayoutError::Invalid(_))));
        assert!(matches!(with(Stage::I, "w_f", 30.0), Err(LayoutError::Invalid(_))));
        assert!(matches!(
            with(Stage::I, "l_p", f64::NAN),
            Err(LayoutError::NonFinite(_))
        ));
        assert!(matches!(with(Stage::IV, "l_d2", -1.0), Err(LayoutError::Invalid(_))));
    }

    #[test]
    fn override_is_applied() {
        let l = with(Stage::I, "l_p", 17.0).unwrap();
        assert_eq!(fmt_mm(l.elements[0].patch.l_p), "17");
        assert_eq!(fmt_mm(l.dimension("l_p").unwrap()), "17");
    }

    #[test]
    fn placement_conventions() {
        let l = preset(Stage::III);
        let (tx, rx) = (&l.elements[0], &l.elements[1]);
        assert!(tx.center[0] < 0.0 && rx.center[0] > 0.0);
        assert_eq!((tx.feed_dir, rx.feed_dir), (-1, 1));
        let (pt, ft) = (tx.patch_rect(), tx.feed_rect());
        assert!((pt.y1 + ft.y0).abs() < 1e-15, "assembly centred");
        assert!((rx.patch_rect().x0 - pt.x1 - 6e-3).abs() < 1e-15);
        // fences at g_3 from the facing edges
        let iso: Vec<_> = l.fences.iter().filter(|f| f.kind == FenceKind::Isolation).collect();
        assert_eq!(iso.len(), 2);
        assert!((iso[0].start[0] + 1.5e-3).abs() < 1e-15);
        assert!((iso[1].start[0] - 1.5e-3).abs() < 1e-15);
        assert!(iso.iter().all(|f| f.count_derived && f.count == 16));
        let short = l.fences.iter().find(|f| f.kind == FenceKind::Shorting).unwrap();
        // floor((21.6 - 2 - 1) / 1.5) + 1
        assert_eq!(short.count, 13);
    }

    #[test]
    fn csv_rows() {
        let csv = export_csv(&preset(Stage::I));
        assert!(csv.starts_with("name,value,unit\n"));
        assert!(csv.lines().any(|l| l == "l_p,16.2,mm"));
        assert!(csv.lines().any(|l| l == "g_1,0.625,mm"));
        let csv = export_csv(&preset(Stage::II));
        assert!(csv.contains("vias (derived)"));
        let csv = export_csv(&preset(Stage::IV));
        assert!(csv.lines().any(|l| l == "l_d,17.5,mm (derived)"));
    }

    #[test]
    fn svg_outline() {
        let svg = export_svg(&preset(Stage::IV));
        assert!(svg.contains(r#"viewBox="-40 -19 80 38" width="80mm" height="38mm""#));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(
            svg.matches("<circle").count(),
            preset(Stage::IV).fences.iter().map(|f| f.count).sum::<usize>()
        );
    }

    #[test]
    fn json_round_trip_presets() {
        for stage in Stage::ALL {
            let l = preset(stage);
            let text = l.to_json();
            assert!(text.contains(SCHEMA));
            assert_eq!(StagedLayout::from_json(&text).unwrap(), l);
        }
        let bad = preset(Stage::I).to_json().replace(SCHEMA, "other/2");
        assert!(matches!(StagedLayout::from_json(&bad), Err(LayoutError::Json(_))));
    }

    #[test]
    fn stage_names() {
        for s in Stage::ALL {
            assert_eq!(s.to_string().parse::<Stage>().unwrap(), s);
        }
        assert!("V".parse::<Stage>().is_err());
    }

    fn override_strategy() -> impl Strategy<Value = (Stage, BTreeMap<String, f64>)> {
        (0usize..5, 0.9f64..1.1, 0.9f64..1.1, 0.5f64..1.5).prop_map(|(k, a, b, c)| {
            let stage = Stage::ALL[k];
            let lp = stage.preset_mm()[0];
            let mut m = BTreeMap::from([(lp.0.to_string(), lp.1 * a), ("w_p".to_string(), 21.6 * b)]);
            m.insert("g".to_string(), 6.0 * c);
            (stage, m)
        })
    }

    proptest! {
        #[test]
        fn json_round_trip_lossless((stage, m) in override_strategy()) {
            if let Ok(l) = build_stage(stage, &m) {
                let back = StagedLayout::from_json(&l.to_json()).unwrap();
                prop_assert_eq!(back, l);
            }
        }

        #[test]
        fn clean_feature_keeps_existing_violations((stage, m) in override_strategy(), p in 1.2f64..20.0, dy in 0.0f64..2.0) {
            let Ok(mut l) = build_stage(stage, &m) else { return Ok(()) };
            let mut m2 = m.clone();
            if stage.has_vias() {
                m2.insert("p".into(), p);
                if let Ok(l2) = build_stage(stage, &m2) { l = l2; }
            }
            let before = validate(&l);
            // a lone via pair near the board corner, itself violation-free
            let extra = ViaFence {
                name: "extra".into(),
                kind: FenceKind::Isolation,
                axis: Axis::X,
                d: 0.5e-3,
                p: 1e-3,
                count: 2,
                start: [-l.board.w_g / 2.0 + 0.5e-3, l.board.l_g / 2.0 - (0.5 + dy) * 1e-3],
                offset: 0.0,
                count_derived: false,
            };
            let mut bigger = l.clone();
            bigger.fences.push(extra);
            let after = validate(&bigger);
            let touches_extra = |v: &Violation| v.features.iter().any(|f| f.starts_with("extra"));
            prop_assume!(!after.violations.iter().any(touches_extra));
            prop_assert_eq!(after.violations, before.violations);
        }
    }
}
