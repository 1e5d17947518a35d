use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use fdkit_core::microstrip::{
    line_params, patch_resonance, solve_inset_depth, synthesize_patch, DerivedEm, InsetDimension, PatchGeometry,
    Substrate, SynthesisOptions,
};
use serde::Serialize;

use crate::common::{emit, to_json, CliError, Outcome, SubstrateArgs};

/// Published dimensions of the 5.9 GHz patch on 1.6 mm RT5880, mm.
const REFERENCE_F0: f64 = 5.9e9;
const REFERENCE_MM: [(&str, f64); 6] = [
    ("l_p", 16.2),
    ("w_p", 21.6),
    ("l_1", 5.0),
    ("g_1", 0.625),
    ("w_f", 2.75),
    ("l_f", 8.0),
];

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Inset {
    Width,
    Length,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Design frequency, Hz.
    #[arg(long)]
    pub f0: f64,
    #[command(flatten)]
    pub substrate: SubstrateArgs,
    /// Feed and match impedance, ohms.
    #[arg(long, default_value_t = 50.0)]
    pub z0: f64,
    /// Patch dimension inside the cos^4 inset law.
    #[arg(long, value_enum, default_value_t = Inset::Width)]
    pub inset: Inset,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    f0_hz: f64,
    substrate: Substrate,
    feed_z0_ohm: f64,
    inset_dimension: &'static str,
    /// Meters.
    geometry: PatchGeometry,
    resonance_hz: f64,
    eps_eff_patch: f64,
    eps_eff_feed: f64,
    g_edge_s: f64,
    r_in0_ohm: f64,
    reference: Option<Reference>,
}

#[derive(Serialize)]
struct Reference {
    /// Published dimensions, m.
    geometry: PatchGeometry,
    /// Inset depth for `feed_z0` evaluated on the published patch, m.
    l_1_on_published_patch: f64,
}

fn is_reference_case(f0: f64, sub: &Substrate) -> bool {
    let near = |a: f64, b: f64| (a - b).abs() <= 1e-9 * b.abs();
    let reference = Substrate::rt5880_1p6mm();
    near(f0, REFERENCE_F0) && near(sub.eps_r, reference.eps_r) && near(sub.h, reference.h)
}

fn reference(f0: f64, sub: &Substrate, opts: &SynthesisOptions) -> Result<Reference, CliError> {
    let mm = |k: usize| REFERENCE_MM[k].1 * 1e-3;
    let geometry = PatchGeometry {
        l_p: mm(0),
        w_p: mm(1),
        l_1: mm(2),
        g_1: mm(3),
        w_f: mm(4),
        l_f: mm(5),
    };
    let em = DerivedEm::at(geometry.w_p, f0, sub)?;
    let l_1 = solve_inset_depth(opts.feed_z0, &geometry, &em, opts.inset)?;
    Ok(Reference {
        geometry,
        l_1_on_published_patch: l_1,
    })
}

pub fn run(a: Args) -> Result<Outcome, CliError> {
    let sub = a.substrate.substrate()?;
    let opts = SynthesisOptions {
        feed_z0: a.z0,
        inset: match a.inset {
            Inset::Width => InsetDimension::Width,
            Inset::Length => InsetDimension::Length,
        },
    };
    let geom = synthesize_patch(a.f0, &sub, &opts)?;
    let em = DerivedEm::at(geom.w_p, a.f0, &sub)?;
    let res = patch_resonance(&geom, &sub)?;
    let feed = line_params(geom.w_f, &sub);
    let report = Report {
        f0_hz: a.f0,
        substrate: sub,
        feed_z0_ohm: a.z0,
        inset_dimension: match a.inset {
            Inset::Width => "width",
            Inset::Length => "length",
        },
        geometry: geom,
        resonance_hz: res.f0,
        eps_eff_patch: em.eps_eff,
        eps_eff_feed: feed.eps_eff,
        g_edge_s: em.g_edge,
        r_in0_ohm: em.r_in0,
        reference: if is_reference_case(a.f0, &sub) {
            Some(reference(a.f0, &sub, &opts)?)
        } else {
            None
        },
    };
    let text = match a.format {
        Format::Json => to_json(&report),
        Format::Csv => csv(&report),
    };
    emit(a.out.as_ref(), &text)?;
    Ok(Outcome::Pass)
}

fn csv(r: &Report) -> String {
    let g = &r.geometry;
    let with_ref = r.reference.is_some();
    let mut out = String::from(if with_ref {
        "name,value,unit,published\n"
    } else {
        "name,value,unit\n"
    });
    let dims = [g.l_p, g.w_p, g.l_1, g.g_1, g.w_f, g.l_f];
    for ((name, published), v) in REFERENCE_MM.iter().zip(dims) {
        let _ = write!(out, "{name},{:.4},mm", v * 1e3);
        if with_ref {
            let _ = write!(out, ",{published}");
        }
        out.push('\n');
    }
    if let Some(reference) = &r.reference {
        let _ = writeln!(
            out,
            "l_1_on_published_patch,{:.4},mm,{}",
            reference.l_1_on_published_patch * 1e3,
            reference.geometry.l_1 * 1e3
        );
    }
    let tail = if with_ref { "," } else { "" };
    let _ = writeln!(out, "f0,{:.6},GHz{tail}", r.f0_hz / 1e9);
    let _ = writeln!(out, "f_resonance,{:.6},GHz{tail}", r.resonance_hz / 1e9);
    let _ = writeln!(out, "eps_eff_patch,{:.6},-{tail}", r.eps_eff_patch);
    let _ = writeln!(out, "eps_eff_feed,{:.6},-{tail}", r.eps_eff_feed);
    let _ = writeln!(out, "g_edge,{:.6e},S{tail}", r.g_edge_s);
    let _ = writeln!(out, "r_in0,{:.4},ohm{tail}", r.r_in0_ohm);
    out
}
