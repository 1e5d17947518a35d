//! Touchstone v1 (`.sNp`) reader and canonical writer.
//!
//! Supported: S-parameters in RI, MA or DB format, Hz/kHz/MHz/GHz frequency
//! units, one reference resistance for all ports. Angles are in degrees.
//! Two-port records use the v1 column order `S11 S21 S12 S22`; three or more
//! ports are written row by row with at most four pairs per line, every
//! continuation line indented.
//!
//! Version 2 files (`[Version] 2.0`), noise data and non-S parameter types
//! are rejected.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rfnet::{FrequencyGrid, NPortNetwork, SMatrix};
use crate::units::{db_to_mag, mag_to_db};

/// First comment line of every file the writer emits. The reader drops it
/// again so that comments survive a round trip unchanged.
pub const WRITER_HEADER: &str = "fdkit touchstone v1; angles in degrees";

const PAIRS_PER_LINE: usize = 4;
/// dB and degree columns are printed with this many decimals. A fixed
/// absolute resolution keeps values near zero stable under re-conversion.
const FIXED_DECIMALS: usize = 9;
const FIXED_SCALE: f64 = 1e9;
const FIELD_WIDTH: usize = 19;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TouchstoneError {
    #[error("line {line}: malformed option line: {msg}")]
    OptionLine { line: usize, msg: String },
    #[error("line {line}: Touchstone version 2 files are not supported")]
    Version2 { line: usize },
    #[error("line {line}: invalid number `{token}`")]
    Number { line: usize, token: String },
    #[error("line {line}: inconsistent column count: {msg}")]
    Columns { line: usize, msg: String },
    #[error("line {line}: frequency {f} is not above the previous {prev}")]
    NonMonotonic { line: usize, f: f64, prev: f64 },
    #[error("conflicting port count: {0}")]
    PortCount(String),
    #[error("no data records")]
    Empty,
    #[error("invalid network: {0}")]
    Network(String),
    #[error("{0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreqUnit {
    Hz,
    KHz,
    MHz,
    GHz,
}

impl FreqUnit {
    pub fn scale(self) -> f64 {
        match self {
            FreqUnit::Hz => 1.0,
            FreqUnit::KHz => 1e3,
            FreqUnit::MHz => 1e6,
            FreqUnit::GHz => 1e9,
        }
    }

    fn keyword(self) -> &'static str {
        match self {
            FreqUnit::Hz => "HZ",
            FreqUnit::KHz => "KHZ",
            FreqUnit::MHz => "MHZ",
            FreqUnit::GHz => "GHZ",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// Real, imaginary.
    RI,
    /// Magnitude, angle.
    MA,
    /// Decibel magnitude, angle.
    DB,
}

impl DataFormat {
    fn keyword(self) -> &'static str {
        match self {
            DataFormat::RI => "RI",
            DataFormat::MA => "MA",
            DataFormat::DB => "DB",
        }
    }

    fn to_complex(self, a: f64, b: f64) -> Complex64 {
        match self {
            DataFormat::RI => Complex64::new(a, b),
            DataFormat::MA => Complex64::from_polar(a, b.to_radians()),
            DataFormat::DB => Complex64::from_polar(db_to_mag(a), b.to_radians()),
        }
    }

    fn split(self, v: Complex64) -> (f64, f64) {
        if self == DataFormat::RI {
            return (v.re, v.im);
        }
        let mag = v.norm();
        let deg = if mag == 0.0 { 0.0 } else { v.arg().to_degrees() };
        // snap to the printed resolution first so that -180 and 180 cannot
        // both appear; angles land in (-180, 180]
        let mut deg = (deg * FIXED_SCALE).round() / FIXED_SCALE;
        if deg <= -180.0 {
            deg += 360.0;
        }
        match self {
            DataFormat::MA => (mag, deg),
            _ => (mag_to_db(mag), deg),
        }
    }

    /// Whether the first column is printed in fixed-point notation.
    fn first_fixed(self) -> bool {
        self == DataFormat::DB
    }

    /// Whether the second column is printed in fixed-point notation.
    fn second_fixed(self) -> bool {
        self != DataFormat::RI
    }
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "RI" => Ok(DataFormat::RI),
            "MA" => Ok(DataFormat::MA),
            "DB" => Ok(DataFormat::DB),
            other => Err(format!("unknown data format `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionLine {
    pub freq_unit: FreqUnit,
    pub format: DataFormat,
    /// Reference resistance, ohms.
    pub z_ref: f64,
}

impl Default for OptionLine {
    fn default() -> Self {
        Self {
            freq_unit: FreqUnit::GHz,
            format: DataFormat::MA,
            z_ref: 50.0,
        }
    }
}

impl OptionLine {
    fn parse(body: &str, line: usize) -> Result<Self, TouchstoneError> {
        let err = |msg: String| TouchstoneError::OptionLine { line, msg };
        let mut opt = OptionLine::default();
        let mut tokens = body.split_whitespace();
        while let Some(tok) = tokens.next() {
            match tok.to_ascii_uppercase().as_str() {
                "HZ" => opt.freq_unit = FreqUnit::Hz,
                "KHZ" => opt.freq_unit = FreqUnit::KHz,
                "MHZ" => opt.freq_unit = FreqUnit::MHz,
                "GHZ" => opt.freq_unit = FreqUnit::GHz,
                "S" => {}
                p @ ("Y" | "Z" | "H" | "G") => {
                    return Err(err(format!("parameter type {p} is not supported (S only)")))
                }
                "RI" => opt.format = DataFormat::RI,
                "MA" => opt.format = DataFormat::MA,
                "DB" => opt.format = DataFormat::DB,
                "R" => {
                    let v = tokens
                        .next()
                        .ok_or_else(|| err("R must be followed by a resistance".into()))?;
                    let r: f64 = v.parse().map_err(|_| err(format!("invalid resistance `{v}`")))?;
                    if !(r.is_finite() && r > 0.0) {
                        return Err(err(format!("resistance {r} must be > 0")));
                    }
                    opt.z_ref = r;
                }
                other => return Err(err(format!("unknown token `{other}`"))),
            }
        }
        Ok(opt)
    }

    fn render(&self) -> String {
        format!(
            "# {} S {} R {}",
            self.freq_unit.keyword(),
            self.format.keyword(),
            self.z_ref
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TouchstoneDocument {
    pub options: OptionLine,
    /// Full-line comments in file order, without the leading `!`.
    pub comments: Vec<String>,
    pub network: NPortNetwork,
}

impl TouchstoneDocument {
    pub fn new(network: NPortNetwork, format: DataFormat) -> Self {
        let z_ref = network.z_ref()[0];
        Self {
            options: OptionLine {
                freq_unit: FreqUnit::GHz,
                format,
                z_ref,
            },
            comments: Vec::new(),
            network,
        }
    }
}

/// Port count encoded in a `.sNp` file name, if any.
pub fn ports_from_extension(path: &Path) -> Option<usize> {
    let ext = path.extension()?.to_str()?.to_ascii_lowercase();
    let digits = ext.strip_prefix('s')?.strip_suffix('p')?;
    digits.parse().ok().filter(|&n| n >= 1)
}

struct DataLine {
    line: usize,
    values: Vec<f64>,
}

fn infer_ports(lines: &[DataLine]) -> Result<usize, TouchstoneError> {
    let first = &lines[0];
    let next_len = lines.get(1).map(|l| l.values.len());
    match first.values.len() {
        3 => Ok(1),
        7 => Ok(3),
        // 2-port records and the first line of a 4-port record both carry
        // nine numbers; a 4-port record continues on even-length lines
        9 if next_len.is_some_and(|n| n % 2 == 0) => Ok(4),
        9 => Ok(2),
        n => Err(TouchstoneError::Columns {
            line: first.line,
            msg: format!("cannot infer port count from {n} values; name the file .sNp or pass a port count"),
        }),
    }
}

/// Parses Touchstone v1 text. `port_hint` is required when the port count
/// cannot be inferred from the data layout alone.
pub fn parse(text: &str, port_hint: Option<usize>) -> Result<TouchstoneDocument, TouchstoneError> {
    let mut options: Option<OptionLine> = None;
    let mut comments = Vec::new();
    let mut data = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if let Some(c) = trimmed.strip_prefix('!') {
            let c = c.strip_prefix(' ').unwrap_or(c);
            if !(comments.is_empty() && c == WRITER_HEADER) {
                comments.push(c.to_string());
            }
            continue;
        }
        let body = trimmed.split('!').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if body.starts_with('[') {
            if body.to_ascii_lowercase().starts_with("[version]") {
                return Err(TouchstoneError::Version2 { line });
            }
            return Err(TouchstoneError::Columns {
                line,
                msg: format!("unexpected keyword `{body}`"),
            });
        }
        if let Some(opt) = body.strip_prefix('#') {
            // only the first option line counts
            if options.is_none() {
                options = Some(OptionLine::parse(opt, line)?);
            }
            continue;
        }
        let values = body
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>().map_err(|_| TouchstoneError::Number {
                    line,
                    token: t.to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        data.push(DataLine { line, values });
    }

    let options = options.unwrap_or_default();
    if data.is_empty() {
        return Err(TouchstoneError::Empty);
    }
    let ports = match port_hint {
        Some(0) => return Err(TouchstoneError::PortCount("port count must be >= 1".into())),
        Some(n) => n,
        None => infer_ports(&data)?,
    };

    let per_record = 2 * ports * ports;
    let mut freqs = Vec::new();
    let mut mats = Vec::new();
    let mut k = 0;
    while k < data.len() {
        let start = &data[k];
        if start.values.len() % 2 == 0 {
            return Err(TouchstoneError::Columns {
                line: start.line,
                msg: format!(
                    "expected a frequency followed by value pairs, got {} values",
                    start.values.len()
                ),
            });
        }
        let f = start.values[0] * options.freq_unit.scale();
        let mut vals: Vec<f64> = start.values[1..].to_vec();
        k += 1;
        if ports <= 2 && vals.len() != per_record {
            return Err(TouchstoneError::Columns {
                line: start.line,
                msg: format!(
                    "{}-port record needs {} values after the frequency, got {}",
                    ports,
                    per_record,
                    vals.len()
                ),
            });
        }
        while vals.len() < per_record {
            let Some(cont) = data.get(k) else {
                return Err(TouchstoneError::Columns {
                    line: start.line,
                    msg: format!("record ends after {} of {} values", vals.len(), per_record),
                });
            };
            if cont.values.len() % 2 != 0 {
                return Err(TouchstoneError::Columns {
                    line: cont.line,
                    msg: format!("continuation line has an odd number of values ({})", cont.values.len()),
                });
            }
            vals.extend_from_slice(&cont.values);
            k += 1;
        }
        if vals.len() != per_record {
            return Err(TouchstoneError::Columns {
                line: data[k - 1].line,
                msg: format!("record holds {} values, expected {}", vals.len(), per_record),
            });
        }
        if let Some(&prev) = freqs.last() {
            if !(f > prev) {
                return Err(TouchstoneError::NonMonotonic {
                    line: start.line,
                    f,
                    prev,
                });
            }
        }
        let entries: Vec<Complex64> = vals
            .chunks_exact(2)
            .map(|p| options.format.to_complex(p[0], p[1]))
            .collect();
        let m = if ports == 2 {
            // v1 two-port order: S11 S21 S12 S22
            SMatrix::from_row_slice(2, 2, &[entries[0], entries[2], entries[1], entries[3]])
        } else {
            SMatrix::from_row_slice(ports, ports, &entries)
        };
        freqs.push(f);
        mats.push(m);
    }

    let grid = FrequencyGrid::new(freqs).map_err(|e| TouchstoneError::Network(e.to_string()))?;
    let network = NPortNetwork::new(grid, mats, vec![options.z_ref; ports])
        .map_err(|e| TouchstoneError::Network(e.to_string()))?;
    Ok(TouchstoneDocument {
        options,
        comments,
        network,
    })
}

/// Reads a file, taking the port count from the `.sNp` extension when present.
pub fn read_file(path: &Path, port_hint: Option<usize>) -> Result<TouchstoneDocument, TouchstoneError> {
    let text = std::fs::read_to_string(path).map_err(|e| TouchstoneError::Io(format!("{}: {e}", path.display())))?;
    let ports = match (ports_from_extension(path), port_hint) {
        (Some(a), Some(b)) if a != b => {
            return Err(TouchstoneError::PortCount(format!(
                "file extension says {a} ports, caller says {b}"
            )))
        }
        (a, b) => a.or(b),
    };
    let doc = parse(&text, ports)?;
    Ok(doc)
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:>FIELD_WIDTH$.11e}");
}

fn fixed(out: &mut String, v: f64) {
    // avoid printing a negative zero
    let v = if v == 0.0 { 0.0 } else { v };
    let _ = write!(out, "{v:>FIELD_WIDTH$.FIXED_DECIMALS$}");
}

/// Canonical text: writer header, comments, option line, then one record per
/// frequency. Frequencies, magnitudes and RI parts carry 12 significant
/// digits; dB and degree values carry 9 decimals. Output of this function is a fixed
/// point of `write(parse(..))`.
pub fn write(doc: &TouchstoneDocument, format: DataFormat) -> String {
    let net = &doc.network;
    let options = OptionLine {
        format,
        z_ref: net.z_ref()[0],
        ..doc.options
    };
    let mut out = String::new();
    let _ = writeln!(out, "! {WRITER_HEADER}");
    for c in &doc.comments {
        let _ = writeln!(out, "! {c}");
    }
    let _ = writeln!(out, "{}", options.render());
    let scale = options.freq_unit.scale();
    let ports = net.ports();
    for (f, m) in net.grid().iter().zip(net.s()) {
        num(&mut out, f / scale);
        let order: Vec<(usize, usize)> = if ports == 2 {
            vec![(0, 0), (1, 0), (0, 1), (1, 1)]
        } else {
            (0..ports).flat_map(|r| (0..ports).map(move |c| (r, c))).collect()
        };
        let mut in_line = 0;
        for (idx, &(r, c)) in order.iter().enumerate() {
            let new_row = ports > 2 && idx > 0 && c == 0;
            if new_row || in_line == PAIRS_PER_LINE {
                out.push('\n');
                out.push_str(&" ".repeat(FIELD_WIDTH));
                in_line = 0;
            }
            let (a, b) = format.split(m[(r, c)]);
            out.push(' ');
            if format.first_fixed() {
                fixed(&mut out, a);
            } else {
                num(&mut out, a);
            }
            out.push(' ');
            if format.second_fixed() {
                fixed(&mut out, b);
            } else {
                num(&mut out, b);
            }
            in_line += 1;
        }
        out.push('\n');
    }
    out
}

pub fn write_file(path: &Path, doc: &TouchstoneDocument, format: DataFormat) -> Result<(), TouchstoneError> {
    std::fs::write(path, write(doc, format)).map_err(|e| TouchstoneError::Io(format!("{}: {e}", path.display())))
}
