use std::fmt::Write as _;
use std::path::PathBuf;

use clap::ValueEnum;
use fdkit_core::dgs::{
    build_notch_model, DgsLine, NotchModelConfig, DEFAULT_F0_HZ, DEFAULT_FC_HZ, DEFAULT_LINE_LENGTH, DEFAULT_NOTCH_DB,
    DEFAULT_SLOT_OFFSET,
};
use fdkit_core::rfnet::FrequencyGrid;
use fdkit_core::touchstone::{self, DataFormat, TouchstoneDocument};
use fdkit_core::units::mag_to_db;
use serde::Serialize;

use crate::common::{cell, num, to_json, CliError, Outcome, SubstrateArgs};

/// Half-width around f0 excluded from the passband figure, Hz.
pub const NOTCH_GUARD_HZ: f64 = 400e6;

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum TsFormat {
    Ri,
    Ma,
    Db,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Notch frequency, Hz.
    #[arg(long, default_value_t = DEFAULT_F0_HZ)]
    pub f0: f64,
    /// 3-dB cutoff of the extracted tank, Hz.
    #[arg(long, default_value_t = DEFAULT_FC_HZ)]
    pub fc: f64,
    /// Notch depth of the two-slot line at f0, dB.
    #[arg(long = "notch-db", default_value_t = DEFAULT_NOTCH_DB, allow_hyphen_values = true)]
    pub notch_db: f64,
    /// Line width, m. Defaults to the 50-ohm width.
    #[arg(long = "line-w")]
    pub line_w: Option<f64>,
    /// Line length, m.
    #[arg(long = "line-l", default_value_t = DEFAULT_LINE_LENGTH)]
    pub line_l: f64,
    /// Distance of each slot from its port, m.
    #[arg(long = "slot-offset", default_value_t = DEFAULT_SLOT_OFFSET)]
    pub slot_offset: f64,
    #[command(flatten)]
    pub substrate: SubstrateArgs,
    #[arg(long = "f-start", default_value_t = 5.5e9)]
    pub f_start: f64,
    #[arg(long = "f-stop", default_value_t = 6.3e9)]
    pub f_stop: f64,
    #[arg(long, default_value_t = 801)]
    pub points: usize,
    /// Model the bare line.
    #[arg(long = "no-dgs")]
    pub no_dgs: bool,
    #[arg(long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Base name of the output files.
    #[arg(long, default_value = "fig11")]
    pub name: String,
    #[arg(long = "ts-format", value_enum, default_value_t = TsFormat::Db)]
    pub ts_format: TsFormat,
}

#[derive(Serialize)]
struct Summary {
    touchstone: String,
    csv: String,
    with_dgs: bool,
    line_width_m: f64,
    tanks: Vec<TankLine>,
    min_s21_db: serde_json::Value,
    min_s21_freq_hz: f64,
    s21_at_f0_db: serde_json::Value,
    /// Lowest |S21| at least `NOTCH_GUARD_HZ` away from f0.
    passband_min_s21_db: serde_json::Value,
}

#[derive(Serialize)]
struct TankLine {
    position_m: f64,
    l_henry: f64,
    c_farad: f64,
    r_loss_ohm: serde_json::Value,
}

pub fn run(a: Args) -> Result<Outcome, CliError> {
    let sub = a.substrate.substrate()?;
    let mut line = DgsLine::matched(a.line_l, sub, 50.0)?;
    if let Some(w) = a.line_w {
        if !(w.is_finite() && w > 0.0) {
            return crate::common::fail(format!("--line-w {w} must be > 0"));
        }
        line.width = w;
    }
    let cfg = NotchModelConfig {
        f0: a.f0,
        fc: a.fc,
        notch_db: a.notch_db,
        line,
        slot_offset: a.slot_offset,
        with_slots: !a.no_dgs,
        grid: FrequencyGrid::linspace(a.f_start, a.f_stop, a.points)?,
    };
    let model = build_notch_model(&cfg)?;
    let n = &model.network;

    let s21: Vec<f64> = n.s().iter().map(|m| mag_to_db(m[(1, 0)].norm())).collect();
    let s11: Vec<f64> = n.s().iter().map(|m| mag_to_db(m[(0, 0)].norm())).collect();
    let mut csv = String::from("freq_hz,s21_db,s11_db\n");
    for ((f, a21), a11) in n.grid().iter().zip(&s21).zip(&s11) {
        let _ = writeln!(csv, "{},{},{}", f, cell(*a21), cell(*a11));
    }

    let mut doc = TouchstoneDocument::new(model.network.clone(), DataFormat::DB);
    doc.comments = vec![
        if a.no_dgs {
            "microstrip line model without slots".to_string()
        } else {
            "microstrip line model with two DGS slots".to_string()
        },
        format!("f0 = {} Hz, fc = {} Hz, notch = {} dB", a.f0, a.fc, a.notch_db),
        format!(
            "line length = {} m, width = {} m, slot offset = {} m",
            cfg.line.length, cfg.line.width, a.slot_offset
        ),
    ];
    let format = match a.ts_format {
        TsFormat::Ri => DataFormat::RI,
        TsFormat::Ma => DataFormat::MA,
        TsFormat::Db => DataFormat::DB,
    };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| CliError(format!("{}: {e}", a.out_dir.display())))?;
    let ts_path = a.out_dir.join(format!("{}.s2p", a.name));
    let csv_path = a.out_dir.join(format!("{}.csv", a.name));
    touchstone::write_file(&ts_path, &doc, format)?;
    std::fs::write(&csv_path, csv).map_err(|e| CliError(format!("{}: {e}", csv_path.display())))?;

    let (k_min, min_db) = s21
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (k, &v)| if v < acc.1 { (k, v) } else { acc });
    let k0 = n.grid().nearest_index(a.f0);
    let passband = n
        .grid()
        .iter()
        .zip(&s21)
        .filter(|(f, _)| (f - a.f0).abs() >= NOTCH_GUARD_HZ)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let summary = Summary {
        touchstone: ts_path.display().to_string(),
        csv: csv_path.display().to_string(),
        with_dgs: !a.no_dgs,
        line_width_m: cfg.line.width,
        tanks: model
            .tanks
            .iter()
            .map(|t| TankLine {
                position_m: t.position,
                l_henry: t.tank.l_henry,
                c_farad: t.tank.c_farad,
                r_loss_ohm: num(t.tank.r_loss),
            })
            .collect(),
        min_s21_db: num(min_db),
        min_s21_freq_hz: n.grid().points()[k_min],
        s21_at_f0_db: num(s21[k0]),
        passband_min_s21_db: num(passband),
    };
    print!("{}", to_json(&summary));
    Ok(Outcome::Pass)
}
