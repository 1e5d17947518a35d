use std::fmt::Write as _;
use std::path::PathBuf;

use fdkit_core::silink::{
    residual_si, stage_compare, SiBudget, SiPoint, StageComparison, DEFAULT_NOISE_FLOOR_DBM, DEFAULT_P_TX_DBM,
};
use serde::Serialize;

use crate::common::{emit, fail, read_touchstone, to_json, BandArgs, CliError, Outcome};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Touchstone file holding the Tx-to-Rx coupling.
    #[arg(long, conflicts_with = "coupling_db")]
    pub input: Option<PathBuf>,
    /// Single coupling value instead of a file, dB.
    #[arg(long = "coupling-db", allow_hyphen_values = true, requires = "freq")]
    pub coupling_db: Option<f64>,
    /// Frequency of `--coupling-db`, Hz.
    #[arg(long)]
    pub freq: Option<f64>,
    /// Port count when the file name has no `.sNp` extension.
    #[arg(long)]
    pub ports: Option<usize>,
    /// One-based transmit port.
    #[arg(long, default_value_t = 1)]
    pub tx: usize,
    /// One-based receive port.
    #[arg(long, default_value_t = 2)]
    pub rx: usize,
    /// Transmit power, dBm.
    #[arg(long = "p-tx", default_value_t = DEFAULT_P_TX_DBM, allow_hyphen_values = true)]
    pub p_tx: f64,
    /// Receiver noise floor, dBm.
    #[arg(long, default_value_t = DEFAULT_NOISE_FLOOR_DBM, allow_hyphen_values = true)]
    pub floor: f64,
    /// Second network; adds the coupling improvement it gives over `--input`.
    #[arg(long, requires = "input")]
    pub against: Option<PathBuf>,
    #[command(flatten)]
    pub band: BandArgs,
    /// Fail (exit 3) when any point sits more than this far above the floor, dB.
    #[arg(long = "max-margin-db", allow_hyphen_values = true)]
    pub max_margin_db: Option<f64>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Report {
    p_tx_dbm: f64,
    noise_floor_dbm: f64,
    points: Vec<SiPoint>,
    comparison: Option<StageComparison>,
    pass: bool,
}

pub fn run(a: Args) -> Result<Outcome, CliError> {
    if a.tx == 0 || a.rx == 0 || a.tx == a.rx {
        return fail("--tx and --rx are distinct one-based ports");
    }
    let (budget, comparison) = match (&a.input, a.coupling_db) {
        (Some(path), None) => {
            let net = read_touchstone(path, a.ports)?.network;
            let budget = SiBudget::from_network(a.p_tx, a.floor, &net, a.rx - 1, a.tx - 1)?;
            let comparison = match &a.against {
                Some(other) => {
                    let b = read_touchstone(other, a.ports)?.network;
                    Some(stage_compare(&net, &b, &a.band.band()?, a.rx - 1, a.tx - 1)?)
                }
                None => None,
            };
            (budget, comparison)
        }
        (None, Some(c)) => {
            let f = a.freq.unwrap_or(a.band.center);
            (SiBudget::single(a.p_tx, a.floor, f, c)?, None)
        }
        _ => return fail("give either --input or --coupling-db"),
    };
    let points = residual_si(&budget);
    let pass = a.max_margin_db.is_none_or(|m| points.iter().all(|p| p.margin_db <= m));
    let text = if a.json {
        to_json(&Report {
            p_tx_dbm: a.p_tx,
            noise_floor_dbm: a.floor,
            points,
            comparison,
            pass,
        })
    } else {
        csv(&points, comparison.as_ref())
    };
    emit(a.out.as_ref(), &text)?;
    Ok(Outcome::from_pass(pass))
}

fn csv(points: &[SiPoint], cmp: Option<&StageComparison>) -> String {
    let mut out = String::from("freq_hz,si_level_dbm,margin_db,below_floor");
    if cmp.is_some() {
        out.push_str(",improvement_db");
    }
    out.push('\n');
    for (k, p) in points.iter().enumerate() {
        let _ = write!(
            out,
            "{},{},{},{}",
            p.freq_hz, p.si_level_dbm, p.margin_db, p.below_floor
        );
        if let Some(c) = cmp {
            let _ = write!(out, ",{}", c.improvement_db[k]);
        }
        out.push('\n');
    }
    out
}
