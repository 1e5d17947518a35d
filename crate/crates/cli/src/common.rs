use std::fmt;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::Args as ClapArgs;
use fdkit_core::microstrip::Substrate;
use fdkit_core::mimo::BandSpec;
use fdkit_core::touchstone::{self, TouchstoneDocument};

/// Any failure that maps to exit code 2.
#[derive(Debug)]
pub struct CliError(pub String);

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

pub fn fail<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    ThresholdFailed,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::ThresholdFailed
        }
    }
}

#[derive(ClapArgs, Debug, Clone)]
pub struct SubstrateArgs {
    /// Relative permittivity.
    #[arg(long, default_value_t = 2.2)]
    pub er: f64,
    /// Substrate thickness, m.
    #[arg(long, default_value_t = 1.6e-3)]
    pub h: f64,
    /// Loss tangent.
    #[arg(long = "tan-delta", default_value_t = 0.0009)]
    pub tan_delta: f64,
}

impl SubstrateArgs {
    pub fn substrate(&self) -> Result<Substrate, CliError> {
        Ok(Substrate::new(self.er, self.tan_delta, self.h)?)
    }
}

#[derive(ClapArgs, Debug, Clone)]
pub struct BandArgs {
    /// Lower band edge, Hz.
    #[arg(long = "band-lo", default_value_t = 5.850e9)]
    pub lo: f64,
    /// Band centre, Hz.
    #[arg(long = "band-center", default_value_t = 5.9e9)]
    pub center: f64,
    /// Upper band edge, Hz.
    #[arg(long = "band-hi", default_value_t = 5.944e9)]
    pub hi: f64,
}

impl BandArgs {
    pub fn band(&self) -> Result<BandSpec, CliError> {
        Ok(BandSpec::new(self.lo, self.center, self.hi)?)
    }
}

/// Reads a Touchstone file, or standard input for `-`.
pub fn read_touchstone(path: &Path, ports: Option<usize>) -> Result<TouchstoneDocument, CliError> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        return touchstone::parse(&text, ports).map_err(|e| CliError(format!("<stdin>: {e}")));
    }
    touchstone::read_file(path, ports).map_err(|e| CliError(format!("{}: {e}", path.display())))
}

/// Writes to `path`, or standard output when `None`.
pub fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Parses a one-based port pair such as `2,3` or `2-3`.
pub fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s
        .split_once([',', '-', ':'])
        .ok_or_else(|| format!("expected a port pair like 2,3, got `{s}`"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad port `{a}`"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad port `{b}`"))?;
    if a == 0 || b == 0 || a == b {
        return Err(format!("ports are one-based and distinct, got `{s}`"));
    }
    Ok((a.min(b), a.max(b)))
}

/// JSON number that tolerates NaN and infinities by writing `null`.
pub fn num(v: f64) -> serde_json::Value {
    serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

pub fn to_json(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

/// CSV cell: shortest round-trip form, empty for NaN.
pub fn cell(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}
