use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::ValueEnum;
use fdkit_core::layout::{build_stage, export_csv, export_svg, validate, Stage, StagedLayout};

use crate::common::{emit, fail, to_json, CliError, Outcome};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Svg,
    Csv,
    /// Validation report as JSON.
    Report,
}

#[derive(clap::Args, Debug)]
pub struct Args {
    /// I, II, III, IV or THREE_ELEMENT.
    #[arg(long, value_parser = parse_stage, required_unless_present = "input")]
    pub stage: Option<Stage>,
    /// Dimension override in mm, `name=value` (repeatable).
    #[arg(long = "set", value_parser = parse_override)]
    pub set: Vec<(String, f64)>,
    /// Existing layout JSON instead of a preset.
    #[arg(long, conflicts_with_all = ["stage", "set"])]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse().map_err(|e: fdkit_core::layout::LayoutError| e.to_string())
}

fn parse_override(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad value `{v}`"))?;
    Ok((k.trim().to_string(), v))
}

/// Writes the requested export; exits 3 when the layout has violations.
pub fn run(a: Args) -> Result<Outcome, CliError> {
    let layout: StagedLayout = match (&a.input, a.stage) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError(format!("{}: {e}", path.display())))?;
            StagedLayout::from_json(&text)?
        }
        (None, Some(stage)) => {
            let mut overrides = BTreeMap::new();
            for (k, v) in &a.set {
                if overrides.insert(k.clone(), *v).is_some() {
                    return fail(format!("dimension `{k}` given twice"));
                }
            }
            build_stage(stage, &overrides)?
        }
        (None, None) => return fail("give --stage or --input"),
    };
    let report = validate(&layout);
    let text = match a.format {
        Format::Json => layout.to_json() + "\n",
        Format::Svg => export_svg(&layout),
        Format::Csv => export_csv(&layout),
        Format::Report => to_json(&report),
    };
    emit(a.out.as_ref(), &text)?;
    for v in &report.violations {
        eprintln!("violation: {:?} [{}] {}", v.kind, v.features.join(", "), v.detail);
    }
    Ok(Outcome::from_pass(report.is_clean()))
}
