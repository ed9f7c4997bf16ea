//! Subcommand bodies. Each returns its primary output as bytes; `main` decides where they go
//! and records the run.

use crate::error::CliError;
use crate::format::{float, Grid};
use crate::settings::Settings;
use bellscope::corrgeom::{chsh_value, classify_zero_class, validate, BellFunctional, ClassLabel, Correlation};
use bellscope::lpcert::certify_nonexposed;
use bellscope::optima::{
    closed_form_max, construct_block_strategy, landscape_columns, max_chsh_class, max_chsh_mes, scan_landscape,
    scan_verify,
};
use bellscope::qstrategy::{entanglement_of_formation, named_params, named_point, NamedConstants, NamedPoint};
use bellscope::sdprelax::{boundary_curve, meas_merit_bound, swap_fidelity_bound, Party};
use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Value};
use std::io::Read;
use std::path::{Path, PathBuf};

/// What a subcommand produced.
pub struct Outcome {
    pub primary: Vec<u8>,
    /// Where `primary` goes; stdout when `None`.
    pub out: Option<PathBuf>,
    pub parameters: Value,
    /// Reported after the output is written, so partial results survive.
    pub failure: Option<CliError>,
}

impl Outcome {
    fn json(value: &Value, parameters: Value) -> Self {
        let mut primary = serde_json::to_vec_pretty(value).expect("json value serializes");
        primary.push(b'\n');
        Outcome {
            primary,
            out: None,
            parameters,
            failure: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Emit {
    Correlation,
    Strategy,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Merit {
    State,
    #[value(name = "measA")]
    MeasA,
    #[value(name = "measB")]
    MeasB,
}

impl Merit {
    fn as_str(&self) -> &'static str {
        match self {
            Merit::State => "state",
            Merit::MeasA => "measA",
            Merit::MeasB => "measB",
        }
    }
}

/// `{"p": [[..4..]; 4]}` without the library's entry checks, so bad entries surface as
/// validity flags rather than parse errors.
#[derive(Deserialize)]
struct RawTable {
    p: [[f64; 4]; 4],
}

fn read_input(path: Option<&Path>) -> Result<String, CliError> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::read_to_string(p).map_err(|e| CliError::io(p, e)),
        _ => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| CliError::Usage(format!("stdin: {e}")))?;
            Ok(s)
        }
    }
}

fn parse_table(text: &str) -> Result<Correlation, CliError> {
    let raw: RawTable =
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid correlation JSON: {e}")))?;
    let mut cells = [0.0; 16];
    for (row, cols) in raw.p.iter().enumerate() {
        cells[row * 4..row * 4 + 4].copy_from_slice(cols);
    }
    Ok(Correlation::from_cells(cells))
}

pub fn classify(input: Option<&Path>, settings: &Settings) -> Result<Outcome, CliError> {
    let c = parse_table(&read_input(input)?)?;
    let validity = validate(&c, settings.tol)?;
    let class = if validity.all() {
        classify_zero_class(&c, settings.tol)
    } else {
        ClassLabel::Unphysical
    };
    let zeros: Vec<String> = c
        .zero_pattern(settings.tol)
        .cells()
        .iter()
        .map(|&(a, b, x, y)| format!("{a}{b}{x}{y}"))
        .collect();
    let report = json!({
        "class": class,
        "validity": validity,
        "zeros": zeros,
        "chsh": chsh_value(&c),
    });
    let mut outcome = Outcome::json(&report, json!({ "input": input }));
    if !validity.all() {
        outcome.failure = Some(CliError::Domain(format!(
            "not a valid no-signaling correlation: {validity:?}"
        )));
    }
    Ok(outcome)
}

pub fn named(point: NamedPoint, emit: Emit) -> Result<Outcome, CliError> {
    let (strategy, corr) = named_point(point);
    let mut report = json!({
        "point": point,
        "class": point.class(),
        "chsh": chsh_value(&corr),
        "constants": NamedConstants::get(),
        "params": named_params(point).map(|(_, p)| p),
    });
    if matches!(emit, Emit::Correlation | Emit::Both) {
        report["correlation"] = json!(corr);
    }
    if matches!(emit, Emit::Strategy | Emit::Both) {
        match &strategy {
            Some(s) => {
                report["strategy"] = json!(s.to_json());
                report["entanglement_of_formation"] = json!(entanglement_of_formation(&s.state));
            }
            None if emit == Emit::Strategy => {
                return Err(CliError::Domain(format!("{point} has no quantum strategy")));
            }
            None => report["strategy"] = Value::Null,
        }
    }
    Ok(Outcome::json(
        &report,
        json!({ "point": point, "emit": format!("{emit:?}").to_lowercase() }),
    ))
}

pub fn maximize(label: ClassLabel, verify_scan: Option<usize>) -> Result<Outcome, CliError> {
    let opt = max_chsh_class(label)?;
    let mut report = json!({
        "class": label,
        "value": opt.value,
        "closed_form": closed_form_max(label)?,
        "point": opt.point,
        "params": opt.params,
        "trace": opt.trace,
        "entanglement_of_formation": entanglement_of_formation(&opt.strategy.state),
        "strategy": opt.strategy.to_json(),
    });
    if let Some(n) = verify_scan {
        report["scan"] = json!(scan_verify(label, n)?);
    }
    Ok(Outcome::json(
        &report,
        json!({ "class": label, "verify_scan": verify_scan }),
    ))
}

pub fn mes(d: usize) -> Result<Outcome, CliError> {
    let value = max_chsh_mes(d)?;
    let blocks = construct_block_strategy(d)?;
    let achieved = blocks.correlation();
    let report = json!({
        "d": d,
        "value": value,
        "achieved": chsh_value(&achieved),
        "qubit_blocks": blocks.qubit_blocks(),
        "weights": blocks.weights,
        "remix_error": achieved.max_abs_diff(&blocks.remixed()),
    });
    Ok(Outcome::json(&report, json!({ "d": d })))
}

pub fn certify(point: NamedPoint) -> Result<Outcome, CliError> {
    let cert = certify_nonexposed(point)?;
    Ok(Outcome::json(&json!(cert), json!({ "point": point })))
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))
}

pub struct RobustArgs {
    pub point: NamedPoint,
    pub eps: f64,
    pub grid: Grid,
    pub level: usize,
    pub merit: Merit,
    pub out: Option<PathBuf>,
}

pub fn robust(args: RobustArgs) -> Result<Outcome, CliError> {
    let RobustArgs {
        point,
        eps,
        grid,
        level,
        merit,
        out,
    } = args;
    let s_values = grid.points();
    let results: Vec<_> = bellscope::parallel::pool().install(|| {
        s_values
            .par_iter()
            .map(|&s| match merit {
                Merit::State => swap_fidelity_bound(point, s, eps, level),
                Merit::MeasA => meas_merit_bound(point, Party::A, s, eps, level),
                Merit::MeasB => meas_merit_bound(point, Party::B, s, eps, level),
            })
            .collect()
    });
    let mut failure = None;
    let mut rows = Vec::with_capacity(results.len());
    for (&s, r) in s_values.iter().zip(results) {
        let bound = match r {
            Ok(b) => b.value,
            Err(e) => {
                eprintln!("S = {s}: {e}");
                failure.get_or_insert(CliError::from(e));
                f64::NAN
            }
        };
        rows.push(vec![float(s), float(eps), float(bound), merit.as_str().to_string()]);
    }
    let header = ["S", "eps", "bound", "merit_party"].map(String::from);
    Ok(Outcome {
        primary: csv_bytes(&header, &rows)?,
        out,
        parameters: json!({
            "point": point,
            "eps": eps,
            "chsh_grid": [grid.start, grid.end, grid.count],
            "level": level,
            "merit": merit.as_str(),
        }),
        failure,
    })
}

/// Functional given as `abxy` cell codes such as `0000,1110,1101`.
pub fn functional_from_cells(list: &str) -> Result<BellFunctional, CliError> {
    let mut cells = Vec::new();
    for code in list.split(',').map(str::trim).filter(|c| !c.is_empty()) {
        let digits: Vec<usize> = code
            .chars()
            .map(|ch| match ch {
                '0' => Ok(0),
                '1' => Ok(1),
                _ => Err(()),
            })
            .collect::<Result<_, _>>()
            .map_err(|_| CliError::Usage(format!("cell code {code:?} must be four binary digits abxy")))?;
        let [a, b, x, y] = digits[..] else {
            return Err(CliError::Usage(format!(
                "cell code {code:?} must be four binary digits abxy"
            )));
        };
        cells.push((a, b, x, y));
    }
    if cells.is_empty() {
        return Err(CliError::Usage("empty cell list".into()));
    }
    Ok(BellFunctional::indicator(&cells))
}

/// Functional given as a 4×4 coefficient table in the correlation layout.
pub fn functional_from_file(path: &Path) -> Result<BellFunctional, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let raw: RawTable = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut coefficients = [0.0; 16];
    for (row, cols) in raw.p.iter().enumerate() {
        coefficients[row * 4..row * 4 + 4].copy_from_slice(cols);
    }
    Ok(BellFunctional { coefficients })
}

pub fn curve(functional: BellFunctional, grid: Grid, level: usize, out: Option<PathBuf>) -> Result<Outcome, CliError> {
    let points = boundary_curve(&functional, level, &grid.points())?;
    let header = ["h", "S_min", "S_max", "status_min", "status_max", "level"].map(String::from);
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|p| {
            vec![
                float(p.h),
                float(p.s_min),
                float(p.s_max),
                p.status_min.as_str().to_string(),
                p.status_max.as_str().to_string(),
                p.level.to_string(),
            ]
        })
        .collect();
    Ok(Outcome {
        primary: csv_bytes(&header, &rows)?,
        out,
        parameters: json!({
            "coefficients": functional.coefficients,
            "grid": [grid.start, grid.end, grid.count],
            "level": level,
        }),
        failure: None,
    })
}

pub fn scan(label: ClassLabel, grid_n: usize, out: Option<PathBuf>) -> Result<Outcome, CliError> {
    let mut header: Vec<String> = landscape_columns(label)?.into_iter().map(String::from).collect();
    header.extend(["S".to_string(), "class_ok".to_string()]);
    let rows: Vec<Vec<String>> = scan_landscape(label, grid_n)?
        .into_iter()
        .map(|r| {
            let mut row: Vec<String> = r.params.iter().map(|&v| float(v)).collect();
            row.push(float(r.s));
            row.push(r.class_ok.to_string());
            row
        })
        .collect();
    Ok(Outcome {
        primary: csv_bytes(&header, &rows)?,
        out,
        parameters: json!({ "class": label, "grid": grid_n }),
        failure: None,
    })
}
