use std::fmt::Write as _;
use std::path::PathBuf;

use fdkit_core::dgs::{
    fit_composite_notch, fit_notch_resistance, lc_extract, slot_length_estimate, DgsLine, PlacedTank, DEFAULT_F0_HZ,
    DEFAULT_FC_HZ, DEFAULT_LINE_LENGTH, DEFAULT_NOTCH_DB, DEFAULT_SLOT_OFFSET,
};
use serde::Serialize;

use crate::common::{emit, to_json, CliError, Outcome, SubstrateArgs};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Attenuation pole, Hz.
    #[arg(long, default_value_t = DEFAULT_F0_HZ)]
    pub f0: f64,
    /// 3-dB cutoff, Hz.
    #[arg(long, default_value_t = DEFAULT_FC_HZ)]
    pub fc: f64,
    /// Port impedance, ohms.
    #[arg(long, default_value_t = 50.0)]
    pub z0: f64,
    /// Target notch depth, dB.
    #[arg(long = "notch-db", default_value_t = DEFAULT_NOTCH_DB, allow_hyphen_values = true)]
    pub notch_db: f64,
    /// Also fit two identical slots on a matched line of this length, m.
    #[arg(long = "line-l", default_value_t = DEFAULT_LINE_LENGTH)]
    pub line_l: f64,
    #[arg(long = "slot-offset", default_value_t = DEFAULT_SLOT_OFFSET)]
    pub slot_offset: f64,
    #[command(flatten)]
    pub substrate: SubstrateArgs,
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    f0_hz: f64,
    fc_hz: f64,
    z0_ohm: f64,
    notch_db: f64,
    l_henry: f64,
    c_farad: f64,
    /// Loss resistance of one tank alone reaching `notch_db`.
    r_single_ohm: f64,
    /// Shared loss resistance of two slots on the line reaching `notch_db`.
    r_pair_ohm: f64,
    slot_length_estimate_m: f64,
}

pub fn run(a: Args) -> Result<Outcome, CliError> {
    let sub = a.substrate.substrate()?;
    let lc = lc_extract(a.f0, a.fc, a.z0)?;
    let r_single = fit_notch_resistance(a.notch_db, a.z0)?;
    let line = DgsLine::matched(a.line_l, sub, a.z0)?;
    let placed = [
        PlacedTank {
            tank: lc,
            position: a.slot_offset,
        },
        PlacedTank {
            tank: lc,
            position: a.line_l - a.slot_offset,
        },
    ];
    let pair = fit_composite_notch(&line, &placed, a.f0, a.notch_db)?;
    let r = Report {
        f0_hz: a.f0,
        fc_hz: a.fc,
        z0_ohm: a.z0,
        notch_db: a.notch_db,
        l_henry: lc.l_henry,
        c_farad: lc.c_farad,
        r_single_ohm: r_single,
        r_pair_ohm: pair[0].tank.r_loss,
        slot_length_estimate_m: slot_length_estimate(a.f0, &sub),
    };
    let text = if a.json {
        to_json(&r)
    } else {
        let mut out = String::from("name,value,unit\n");
        let rows = [
            ("l", r.l_henry * 1e9, "nH"),
            ("c", r.c_farad * 1e12, "pF"),
            ("r_single", r.r_single_ohm, "ohm"),
            ("r_pair", r.r_pair_ohm, "ohm"),
            ("slot_length_estimate", r.slot_length_estimate_m * 1e3, "mm"),
        ];
        for (name, v, unit) in rows {
            let _ = writeln!(out, "{name},{v:.6},{unit}");
        }
        out
    };
    emit(a.out.as_ref(), &text)?;
    Ok(Outcome::Pass)
}
