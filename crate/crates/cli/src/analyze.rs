use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use fdkit_core::mimo::{
    ccl, default_diversity_pair, ecc, isolation_report, BandSummary, IsolationReport, IsolationThreshold,
    IsolationThresholds, MetricSpectrum, CCL_LIMIT, ECC_LIMIT,
};
use fdkit_core::units::mag_to_db;
use serde::Serialize;

use crate::common::{cell, emit, fail, parse_pair, read_touchstone, to_json, BandArgs, CliError, Outcome};

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Touchstone v1 file (`-` for standard input).
    pub input: PathBuf,
    /// Port count when the file name has no `.sNp` extension.
    #[arg(long)]
    pub ports: Option<usize>,
    #[command(flatten)]
    pub band: BandArgs,
    /// One-based port pair for ECC and CCL, e.g. `2,3`.
    #[arg(long, value_parser = parse_pair)]
    pub pair: Option<(usize, usize)>,
    /// Isolation every pair must reach at every in-band point, dB.
    #[arg(long = "min-isolation-db")]
    pub min_isolation_db: Option<f64>,
    /// Isolation every pair must reach at the band centre, dB.
    #[arg(long = "center-isolation-db")]
    pub center_isolation_db: Option<f64>,
    /// In-band isolation for one pair, `I,J=DB` (repeatable).
    #[arg(long = "pair-min-db", value_parser = parse_pair_threshold)]
    pub pair_min_db: Vec<((usize, usize), f64)>,
    #[arg(long = "ecc-max", default_value_t = ECC_LIMIT)]
    pub ecc_max: f64,
    #[arg(long = "ccl-max", default_value_t = CCL_LIMIT)]
    pub ccl_max: f64,
    /// Per-frequency CSV spectra.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// JSON summary; standard output when omitted.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_pair_threshold(s: &str) -> Result<((usize, usize), f64), String> {
    let (pair, db) = s.split_once('=').ok_or_else(|| format!("expected I,J=DB, got `{s}`"))?;
    let db: f64 = db.trim().parse().map_err(|_| format!("bad threshold `{db}`"))?;
    Ok((parse_pair(pair)?, db.abs()))
}

#[derive(Serialize)]
struct MetricSummary {
    limit: f64,
    min: Option<f64>,
    max: Option<f64>,
    evaluated_points: usize,
    flagged_points: usize,
    pass: bool,
}

impl MetricSummary {
    fn new(s: BandSummary, limit: f64) -> Self {
        let some = |v: f64| v.is_finite().then_some(v);
        Self {
            limit,
            min: some(s.min),
            max: some(s.max),
            evaluated_points: s.evaluated,
            flagged_points: s.flagged,
            pass: s.evaluated > 0 && s.flagged == 0 && s.max < limit,
        }
    }
}

#[derive(Serialize)]
struct PairLine {
    pair: (usize, usize),
    center_isolation_db: Option<f64>,
    worst_isolation_db: Option<f64>,
    pass: bool,
}

#[derive(Serialize)]
struct Summary {
    input: String,
    ports: usize,
    points: usize,
    /// Isolation as positive dB, one line per pair.
    pairs: Vec<PairLine>,
    isolation: IsolationReport,
    /// One-based port pair of the diversity metrics.
    diversity_pair: (usize, usize),
    ecc: MetricSummary,
    ccl: MetricSummary,
    pass: bool,
}

pub fn run(a: Args) -> Result<Outcome, CliError> {
    let doc = read_touchstone(&a.input, a.ports)?;
    let n = &doc.network;
    if n.ports() < 2 {
        return fail("analysis needs at least two ports");
    }
    let band = a.band.band()?;
    let mut thresholds = IsolationThresholds::uniform(a.min_isolation_db, a.center_isolation_db);
    let mut per_pair = BTreeMap::new();
    for &((i, j), db) in &a.pair_min_db {
        if j > n.ports() {
            return fail(format!("pair {i},{j} exceeds the {} ports of the file", n.ports()));
        }
        per_pair.insert(
            (i - 1, j - 1),
            IsolationThreshold {
                band_min_db: Some(db),
                center_min_db: a.center_isolation_db,
            },
        );
    }
    thresholds.per_pair = per_pair;

    let (pi, pj) = match a.pair {
        Some((i, j)) if j <= n.ports() => (i - 1, j - 1),
        Some((i, j)) => return fail(format!("pair {i},{j} exceeds the {} ports of the file", n.ports())),
        None => default_diversity_pair(n),
    };
    let iso = isolation_report(n, &band, &thresholds)?;
    let e = ecc(n, pi, pj)?;
    let c = ccl(n, pi, pj)?;
    let ecc_sum = MetricSummary::new(e.band_summary(&band), a.ecc_max);
    let ccl_sum = MetricSummary::new(c.band_summary(&band), a.ccl_max);
    let pass = iso.all_pass() && ecc_sum.pass && ccl_sum.pass;
    let some = |v: f64| v.is_finite().then_some(v);
    let pairs = iso
        .pairs
        .iter()
        .map(|p| PairLine {
            pair: (p.from_port, p.to_port),
            center_isolation_db: some(p.center_isolation_db()),
            worst_isolation_db: some(p.worst_isolation_db()),
            pass: p.pass,
        })
        .collect();
    let summary = Summary {
        input: a.input.display().to_string(),
        ports: n.ports(),
        points: n.grid().len(),
        pairs,
        isolation: iso,
        diversity_pair: (pi + 1, pj + 1),
        ecc: ecc_sum,
        ccl: ccl_sum,
        pass,
    };
    if let Some(path) = &a.csv {
        emit(Some(path), &spectra_csv(n, &e, &c))?;
    }
    emit(a.json.as_ref(), &to_json(&summary))?;
    Ok(Outcome::from_pass(pass))
}

fn spectra_csv(n: &fdkit_core::rfnet::NPortNetwork, e: &MetricSpectrum, c: &MetricSpectrum) -> String {
    let p = n.ports();
    let pairs: Vec<(usize, usize)> = (0..p).flat_map(|i| ((i + 1)..p).map(move |j| (i, j))).collect();
    let mut out = String::from("freq_hz,ecc,ccl");
    for (i, j) in &pairs {
        let _ = write!(out, ",isolation_db_{}_{}", i + 1, j + 1);
    }
    out.push('\n');
    for (k, f) in n.grid().iter().enumerate() {
        let _ = write!(out, "{},{},{}", f, cell(e.values[k]), cell(c.values[k]));
        for &(i, j) in &pairs {
            let _ = write!(out, ",{}", cell(-mag_to_db(n.s()[k][(j, i)].norm())));
        }
        out.push('\n');
    }
    out
}
