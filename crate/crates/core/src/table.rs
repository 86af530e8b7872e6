//! Number formatting, table serialization and golden-file comparison.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::herald::{DetectionPattern, ProjectionRow};
use crate::states::{classify_three_qubit, fidelity, QubitState};
use crate::C64;

/// Environment variable that overrides the golden-data directory.
pub const GOLDEN_DIR_ENV: &str = "HERALDED_GOLDEN_DIR";

pub const SIG_DIGITS: usize = 12;
pub const MAX_DENOMINATOR: u64 = 1024;
pub const RATIONAL_TOL: f64 = 1e-9;

/// `x` with 12 significant digits, trailing zeros trimmed, like `%.12g`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mant, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-4..SIG_DIGITS as i32).contains(&exp) {
        return format!("{}e{}", trim_zeros(mant), exp);
    }
    let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Smallest-denominator fraction within [`RATIONAL_TOL`] of `x`, if one exists
/// with denominator at most [`MAX_DENOMINATOR`].
pub fn nearest_rational(x: f64) -> Option<(i64, u64)> {
    (1..=MAX_DENOMINATOR).find_map(|d| {
        let n = (x * d as f64).round();
        ((x - n / d as f64).abs() <= RATIONAL_TOL).then_some((n as i64, d))
    })
}

pub fn fmt_rational(x: f64) -> String {
    match nearest_rational(x) {
        Some((n, 1)) => n.to_string(),
        Some((n, d)) => format!("{n}/{d}"),
        None => String::new(),
    }
}

/// Parses `a/b` or an integer.
pub fn parse_rational(s: &str) -> Result<f64> {
    let bad = || Error::Parse(format!("bad rational `{s}`"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: f64 = n.trim().parse().map_err(|_| bad())?;
            let d: f64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            Ok(n / d)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// `bits:re:im;...` over nonzero amplitudes after phase canonicalization.
pub fn state_cell(s: &QubitState) -> String {
    s.canonical_phase()
        .support()
        .iter()
        .map(|(b, a)| format!("{b}:{}:{}", fmt_sig(a.re + 0.0), fmt_sig(a.im + 0.0)))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn parse_state_cell(cell: &str) -> Result<QubitState> {
    let bad = || Error::Parse(format!("bad state cell `{cell}`"));
    let mut n = None;
    let mut items = Vec::new();
    for part in cell.split(';') {
        let mut it = part.split(':');
        let (b, re, im) = (it.next().ok_or_else(bad)?, it.next().ok_or_else(bad)?, it.next().ok_or_else(bad)?);
        if n.get_or_insert(b.len()) != &b.len() {
            return Err(bad());
        }
        let idx = u64::from_str_radix(b, 2).map_err(|_| bad())?;
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        items.push((idx, C64::new(re, im)));
    }
    QubitState::from_sparse(n.ok_or_else(bad)?, &items)
}

/// Entanglement label used in the `class` column.
pub fn class_label(s: &QubitState) -> String {
    if s.n_qubits() == 3 {
        if let Ok(c) = classify_three_qubit(s) {
            return c.to_string();
        }
    }
    if s.n_qubits() < 2 || !s.is_entangled() {
        "product".into()
    } else if s.is_genuinely_entangled() {
        "genuine".into()
    } else {
        "partial".into()
    }
}

#[derive(Debug, Serialize)]
struct RowRecord<'a> {
    kind: &'a str,
    pattern: String,
    state: String,
    probability: String,
    rational: String,
    class: String,
}

/// An aggregate line appended to a swap table.
#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub name: String,
    pub probability: f64,
}

/// Writes rows, suppressed patterns and aggregates as one CSV with a `kind` column.
pub fn write_swap_csv<W: Write>(
    out: W,
    rows: &[ProjectionRow],
    suppressed: &[DetectionPattern],
    aggregates: &[Aggregate],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(RowRecord {
            kind: "row",
            pattern: r.pattern.to_string(),
            state: state_cell(&r.state),
            probability: fmt_sig(r.probability),
            rational: fmt_rational(r.probability),
            class: class_label(&r.state),
        })?;
    }
    for p in suppressed {
        w.serialize(RowRecord {
            kind: "suppressed",
            pattern: p.to_string(),
            state: String::new(),
            probability: "0".into(),
            rational: "0".into(),
            class: String::new(),
        })?;
    }
    for a in aggregates {
        w.serialize(RowRecord {
            kind: "aggregate",
            pattern: a.name.clone(),
            state: String::new(),
            probability: fmt_sig(a.probability),
            rational: fmt_rational(a.probability),
            class: String::new(),
        })?;
    }
    w.flush()?;
    Ok(())
}

/// JSON mirror of [`write_swap_csv`]; states map bitstrings to `[re, im]`.
pub fn swap_json(rows: &[ProjectionRow], suppressed: &[DetectionPattern], aggregates: &[Aggregate]) -> serde_json::Value {
    use serde_json::{json, Map, Value};
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let state: Map<String, Value> = r
                .state
                .canonical_phase()
                .support()
                .into_iter()
                .map(|(b, a)| (b, json!([round_sig(a.re + 0.0), round_sig(a.im + 0.0)])))
                .collect();
            json!({
                "pattern": r.pattern.to_string(),
                "state": state,
                "probability": round_sig(r.probability),
                "rational": fmt_rational(r.probability),
                "class": class_label(&r.state),
            })
        })
        .collect();
    let aggregates: Map<String, Value> = aggregates
        .iter()
        .map(|a| (a.name.clone(), json!(round_sig(a.probability))))
        .collect();
    json!({
        "rows": rows,
        "suppressed": suppressed.iter().map(|p| p.to_string()).collect::<Vec<_>>(),
        "aggregates": aggregates,
    })
}

/// Rounds to 12 significant digits so JSON output is as stable as CSV.
pub fn round_sig(x: f64) -> f64 {
    fmt_sig(x).parse().unwrap_or(x)
}

/// A printed table row: section tag, pattern, state and exact probability.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub section: String,
    pub pattern: DetectionPattern,
    pub state: QubitState,
    pub probability: f64,
    pub probability_text: String,
}

pub fn golden_dir() -> PathBuf {
    match std::env::var_os(GOLDEN_DIR_ENV) {
        Some(d) => PathBuf::from(d),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join("golden"),
    }
}

pub fn read_golden_table<R: Read>(r: R) -> Result<Vec<GoldenRow>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::Parse("short golden record".into()));
        out.push(GoldenRow {
            section: field(0)?.to_string(),
            pattern: field(1)?.parse()?,
            state: parse_state_cell(field(2)?)?,
            probability: parse_rational(field(3)?)?,
            probability_text: field(3)?.to_string(),
        });
    }
    Ok(out)
}

pub fn load_golden_table(path: &Path) -> Result<Vec<GoldenRow>> {
    read_golden_table(std::fs::File::open(path)?)
}

/// One pattern per line; blank lines ignored.
pub fn load_suppressed(path: &Path) -> Result<Vec<DetectionPattern>> {
    std::fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::parse)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMismatch {
    pub pattern: String,
    pub expected_probability: String,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldenReport {
    pub rows_checked: usize,
    pub mismatches: Vec<RowMismatch>,
    /// Golden patterns absent from the computed table.
    pub missing: Vec<String>,
    /// Computed patterns with no golden row.
    pub extra: Vec<String>,
    pub suppressed_missing: Vec<String>,
    pub suppressed_extra: Vec<String>,
}

impl GoldenReport {
    pub fn is_match(&self) -> bool {
        self.mismatches.is_empty()
            && self.missing.is_empty()
            && self.extra.is_empty()
            && self.suppressed_missing.is_empty()
            && self.suppressed_extra.is_empty()
    }

    pub fn rows_match(&self) -> bool {
        self.mismatches.is_empty() && self.missing.is_empty() && self.extra.is_empty()
    }

    pub fn suppressed_match(&self) -> bool {
        self.suppressed_missing.is_empty() && self.suppressed_extra.is_empty()
    }
}

/// Compares probabilities within 1e-9 and states by fidelity ≥ 1 − 1e-9.
pub fn compare_golden(
    rows: &[ProjectionRow],
    suppressed: &[DetectionPattern],
    golden: &[GoldenRow],
    golden_suppressed: &[DetectionPattern],
) -> GoldenReport {
    let by_pattern: BTreeMap<&DetectionPattern, &ProjectionRow> = rows.iter().map(|r| (&r.pattern, r)).collect();
    let mut report = GoldenReport::default();
    for g in golden {
        report.rows_checked += 1;
        let Some(r) = by_pattern.get(&g.pattern) else {
            report.missing.push(g.pattern.to_string());
            continue;
        };
        let f = fidelity(&r.state, &g.state).unwrap_or(0.0);
        if (r.probability - g.probability).abs() > 1e-9 || f < 1.0 - 1e-9 {
            report.mismatches.push(RowMismatch {
                pattern: g.pattern.to_string(),
                expected_probability: g.probability_text.clone(),
                probability: r.probability,
                fidelity: f,
            });
        }
    }
    let golden_set: BTreeSet<&DetectionPattern> = golden.iter().map(|g| &g.pattern).collect();
    report.extra = rows
        .iter()
        .filter(|r| !golden_set.contains(&r.pattern))
        .map(|r| r.pattern.to_string())
        .collect();
    let a: BTreeSet<&DetectionPattern> = suppressed.iter().collect();
    let b: BTreeSet<&DetectionPattern> = golden_suppressed.iter().collect();
    report.suppressed_missing = b.difference(&a).map(|p| p.to_string()).collect();
    report.suppressed_extra = a.difference(&b).map(|p| p.to_string()).collect();
    report
}
