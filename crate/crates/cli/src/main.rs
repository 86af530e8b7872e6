use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use heralded::analytics::{
    calibrate_depolarizing, compare_4node, compare_sweep, em_false_herald, em_fidelity, em_success,
    itinerant_fidelity_2, itinerant_ghz_fidelity_sim, itinerant_success, st_fidelity_2, st_n_node, st_rate_2,
    swap_rate, wpe_fidelity, wpe_fidelity_sweep, wpe_rate, FidelityResult, SchemeParams,
};
use heralded::herald::{
    aggregate_heralding, prepare_swap_input, run_gbsa, suppressed_patterns, wpe_simulate, DetectorModel, HeraldRule,
};
use heralded::interferometer::{
    beam_splitter, eraser, inverse, quarter, symmetric_multiport, tritter, MultiportMatrix,
};
use heralded::states::Sign;
use heralded::table::{
    compare_golden, fmt_sig, golden_dir, load_golden_table, load_suppressed, round_sig, swap_json, write_swap_csv,
    Aggregate,
};
use heralded::{Exec, C64};

const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_GOLDEN: u8 = 4;

/// Heralded multipartite entanglement: interferometers, swap tables and rate formulas.
#[derive(Parser)]
#[command(name = "heralded", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a symmetric multiport and its inverse.
    Multiport(MultiportArgs),
    /// Detection-pattern table for N Bell pairs meeting in one multiport.
    SwapTable(SwapArgs),
    /// Which-path-erasure fidelity and rate, single point or sweep.
    Wpe(WpeArgs),
    /// Four-node rates from Bell pairs versus the quarter swap.
    Compare(CompareArgs),
    /// Evaluate a named closed-form expression.
    Analytics(Box<AnalyticsArgs>),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct Output {
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// A parsed list of grid points.
#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Bs,
    Tritter,
    Quarter,
    Sym2d,
}

#[derive(Args)]
struct MultiportArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// Number of butterfly layers for `sym2d` (2^d ports).
    #[arg(long)]
    d: Option<u32>,
    /// Also print unitarity and symmetry residuals.
    #[arg(long)]
    verify: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct SwapArgs {
    /// Number of Bell pairs: 2 uses the beam splitter, 3 the tritter, 4 the quarter.
    #[arg(long, value_parser = clap::value_parser!(u8).range(2..=4))]
    n: u8,
    /// Keep only patterns with at most this many photons on one detector.
    #[arg(long)]
    max_clicks_per_detector: Option<u32>,
    /// Compare against the shipped reference table; exit 4 on any difference.
    #[arg(long)]
    golden: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct WpeArgs {
    /// Number of emitters.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=8))]
    n: u8,
    /// Click count, or an inclusive range such as `1..3`.
    #[arg(long, value_parser = parse_m_range)]
    m: (usize, usize),
    /// Excitation probability.
    #[arg(long, value_parser = open_unit, required_unless_present = "sweep", conflicts_with = "sweep")]
    p: Option<f64>,
    /// Sweep `p` over `a:b` or `a:b:steps` (default 50 steps).
    #[arg(long, value_parser = parse_sweep)]
    sweep: Option<Grid>,
    /// Detector efficiency.
    #[arg(long, value_parser = unit, default_value_t = 1.0)]
    eta: f64,
    /// Cross-check against brute-force enumeration through the eraser.
    #[arg(long)]
    simulate: bool,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct CompareArgs {
    /// Detector efficiencies: `a:b:steps` or a comma-separated list.
    #[arg(long, value_parser = parse_grid)]
    grid: Grid,
    /// Trial rate multiplying every entry.
    #[arg(long, value_parser = nonneg, default_value_t = 1.0)]
    r_t: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Formula {
    #[value(name = "st-fidelity-2")]
    StFidelity2,
    #[value(name = "st-rate-2")]
    StRate2,
    StNNode,
    #[value(name = "itinerant-fidelity-2")]
    ItinerantFidelity2,
    ItinerantGhzFidelity,
    ItinerantDepolarizing,
    ItinerantSuccess,
    EmSuccess,
    EmFalseHerald,
    EmFidelity,
    WpeFidelity,
    WpeRate,
    SwapRate,
    #[value(name = "compare-4node")]
    Compare4node,
}

impl Formula {
    fn summary(self) -> &'static str {
        match self {
            Formula::StFidelity2 => "single-photon two-node fidelity, (1 + √η)²/4  [--eta]",
            Formula::StRate2 => "single-photon two-node rate factor  [--eta --eta-p --eta-out --eta-net --eta-ent]",
            Formula::StNNode => "single-photon N-node W-state fidelity and rate factors  [--n --eta-a0an ...]",
            Formula::ItinerantFidelity2 => "itinerant photon two-node fidelity, 2F_PA − 1  [--f-pa]",
            Formula::ItinerantGhzFidelity => "itinerant photon N-node GHZ fidelity, depolarizing model  [--n --f-pa]",
            Formula::ItinerantDepolarizing => "depolarizing strength calibrated to F_PA  [--f-pa]",
            Formula::ItinerantSuccess => "itinerant photon success factor, η_T^(N−1) η_C^N η_DET  [--n --eta-t --eta-c --eta]",
            Formula::EmSuccess => "emission-absorption success factor  [--n --p-epr --p-ghz-n --eta-abs --eta]",
            Formula::EmFalseHerald => "probability that a herald includes a dark count  [--n --p-real --p-dark]",
            Formula::EmFidelity => "emission-absorption fidelity with false heralds  [--n --f-ph --p-em --p-false]",
            Formula::WpeFidelity => "which-path-erasure fidelity F_(m,N)  [--m --n --p]",
            Formula::WpeRate => "which-path-erasure rate factor  [--m --n --p --eta]",
            Formula::SwapRate => "entanglement-swap rate factor, p_BSA η^N  [--n --p-bsa --eta]",
            Formula::Compare4node => "four-node rates: Bell chain versus quarter swap  [--eta --r-t]",
        }
    }
}

#[derive(Args)]
struct AnalyticsArgs {
    #[arg(value_enum, required_unless_present = "list")]
    name: Option<Formula>,
    /// List every formula with its parameters.
    #[arg(long)]
    list: bool,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    m: usize,
    #[arg(long, value_parser = open_unit)]
    p: Option<f64>,
    /// Detector efficiency η_DET.
    #[arg(long = "eta", visible_alias = "eta-det", value_parser = unit)]
    eta_det: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_abs: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_t: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_c: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_p: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_out: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_net: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_ent: Option<f64>,
    #[arg(long, value_parser = unit)]
    eta_a0an: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_epr: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_ghz_n: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_dark: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_real: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_em: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_false: Option<f64>,
    #[arg(long, value_parser = unit)]
    p_bsa: Option<f64>,
    #[arg(long, value_parser = unit)]
    f_pa: Option<f64>,
    #[arg(long, value_parser = unit)]
    f_ph: Option<f64>,
    /// Trial rate; proportional results are also printed multiplied by it.
    #[arg(long, value_parser = nonneg)]
    r_t: Option<f64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Golden(String),
}

impl From<heralded::Error> for Failure {
    fn from(e: heralded::Error) -> Self {
        use heralded::Error as E;
        match e {
            E::Io(_) | E::Csv(_) | E::Json(_) => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Multiport(a) => cmd_multiport(a),
        Command::SwapTable(a) => cmd_swap_table(a),
        Command::Wpe(a) => cmd_wpe(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Analytics(a) => cmd_analytics(*a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Usage(m) => (EXIT_USAGE, m),
                Failure::Io(m) => (EXIT_IO, m),
                Failure::Golden(m) => (EXIT_GOLDEN, m),
            };
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn unit(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(format!("{x} is not a probability in [0, 1]"))
    }
}

fn open_unit(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("{x} is not in (0, 1)"))
    }
}

fn nonneg(s: &str) -> std::result::Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x >= 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{x} is not a nonnegative number"))
    }
}

fn parse_m_range(s: &str) -> std::result::Result<(usize, usize), String> {
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("{t}: {e}"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
        None => (parse(s)?, parse(s)?),
    };
    if a == 0 || b < a {
        return Err(format!("{s} is not a range of click counts ≥ 1"));
    }
    Ok((a, b))
}

fn linspace(a: f64, b: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![a];
    }
    (0..steps).map(|i| a + (b - a) * i as f64 / (steps - 1) as f64).collect()
}

fn parse_span(s: &str, default_steps: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}"));
    match parts.as_slice() {
        [a, b] => Ok(linspace(num(a)?, num(b)?, default_steps)),
        [a, b, n] => {
            let n: usize = n.trim().parse().map_err(|e| format!("{n}: {e}"))?;
            if n == 0 {
                return Err("step count must be at least 1".into());
            }
            Ok(linspace(num(a)?, num(b)?, n))
        }
        _ => Err(format!("{s} is not of the form a:b[:steps]")),
    }
}

fn parse_sweep(s: &str) -> std::result::Result<Grid, String> {
    let grid = parse_span(s, 50)?;
    match grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
        Some(p) => Err(format!("sweep point {p} is not in (0, 1)")),
        None => Ok(Grid(grid)),
    }
}

fn parse_grid(s: &str) -> std::result::Result<Grid, String> {
    let grid = if s.contains(':') {
        parse_span(s, 11)?
    } else {
        s.split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t}: {e}")))
            .collect::<std::result::Result<_, _>>()?
    };
    if grid.is_empty() {
        return Err("the grid is empty".into());
    }
    match grid.iter().find(|&&e| !(0.0..=1.0).contains(&e)) {
        Some(e) => Err(format!("grid point {e} is not in [0, 1]")),
        None => Ok(Grid(grid)),
    }
}

fn emit(out: &Output, bytes: &[u8]) -> CmdResult {
    match &out.output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(bytes)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json_bytes(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s.into_bytes()
}

fn csv_bytes<F>(header: &[&str], fill: F) -> std::result::Result<Vec<u8>, Failure>
where
    F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
{
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).and_then(|_| fill(&mut w)).map_err(|e| Failure::Io(e.to_string()))?;
        w.flush()?;
    }
    Ok(buf)
}

fn complex_json(z: C64) -> Value {
    json!([round_sig(z.re + 0.0), round_sig(z.im + 0.0)])
}

fn matrix_json(u: &MultiportMatrix) -> Value {
    (0..u.dim()).map(|r| u.row(r).iter().map(|&z| complex_json(z)).collect::<Vec<_>>()).collect()
}

fn cmd_multiport(a: MultiportArgs) -> CmdResult {
    let u = match a.kind {
        Kind::Bs => beam_splitter(),
        Kind::Tritter => tritter(),
        Kind::Quarter => quarter(),
        Kind::Sym2d => {
            let d = a.d.ok_or_else(|| Failure::Usage("sym2d needs --d".into()))?;
            symmetric_multiport(d)?
        }
    };
    let inv = inverse(&u)?;
    let bytes = match a.out.format.unwrap_or(Format::Json) {
        Format::Json => {
            let mut v = json!({
                "label": u.label(),
                "dim": u.dim(),
                "matrix": matrix_json(&u),
                "inverse": matrix_json(&inv),
            });
            if a.verify {
                v["unitarity_residual"] = json!(round_sig(u.unitarity_residual()));
                v["symmetry_residual"] = json!(round_sig(u.symmetry_residual()));
            }
            json_bytes(&v)
        }
        Format::Csv => csv_bytes(&["which", "row", "col", "re", "im"], |w| {
            for (name, m) in [("matrix", &u), ("inverse", &inv)] {
                for r in 0..m.dim() {
                    for c in 0..m.dim() {
                        let z = m.get(r, c);
                        w.write_record([
                            name,
                            &(r + 1).to_string(),
                            &(c + 1).to_string(),
                            &fmt_sig(z.re + 0.0),
                            &fmt_sig(z.im + 0.0),
                        ])?;
                    }
                }
            }
            if a.verify {
                w.write_record(["unitarity_residual", "", "", &fmt_sig(u.unitarity_residual()), ""])?;
                w.write_record(["symmetry_residual", "", "", &fmt_sig(u.symmetry_residual()), ""])?;
            }
            Ok(())
        })?,
    };
    emit(&a.out, &bytes)
}

fn cmd_swap_table(a: SwapArgs) -> CmdResult {
    let n = a.n as usize;
    let (u, stem) = match n {
        2 => (beam_splitter(), None),
        3 => (tritter(), Some("tritter")),
        _ => (quarter(), Some("quarter")),
    };
    if a.golden && stem.is_none() {
        return Err(Failure::Usage("no reference table ships for --n 2".into()));
    }
    let input = prepare_swap_input(n, &vec![Sign::Plus; n])?;
    let all_rows = run_gbsa(&input, &u)?;
    let suppressed = suppressed_patterns(&input, &u, n as u32)?;
    let aggregates = vec![
        Aggregate {
            name: "p_bsa_threshold".into(),
            probability: aggregate_heralding(&all_rows, DetectorModel::Threshold, &HeraldRule::new(n as u32, true)),
        },
        Aggregate {
            name: "p_bsa_number_resolved".into(),
            probability: aggregate_heralding(
                &all_rows,
                DetectorModel::NumberResolved,
                &HeraldRule::new(n as u32, false),
            ),
        },
    ];
    let rows: Vec<_> = match a.max_clicks_per_detector {
        Some(k) => all_rows.iter().filter(|r| r.pattern.max_per_detector() <= k).cloned().collect(),
        None => all_rows.clone(),
    };
    let bytes = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            write_swap_csv(&mut buf, &rows, &suppressed, &aggregates)?;
            buf
        }
        Format::Json => json_bytes(&swap_json(&rows, &suppressed, &aggregates)),
    };
    emit(&a.out, &bytes)?;

    let Some(stem) = stem.filter(|_| a.golden) else {
        return Ok(());
    };
    let dir = golden_dir();
    let golden = load_golden_table(&dir.join(format!("{stem}_table.csv")))?;
    let golden_sup = load_suppressed(&dir.join(format!("{stem}_suppressed.txt")))?;
    let report = compare_golden(&all_rows, &suppressed, &golden, &golden_sup);
    if report.is_match() {
        eprintln!("golden: {} rows match {}", report.rows_checked, dir.display());
        return Ok(());
    }
    let mut msg = format!("golden diff against {}:", dir.display());
    for m in &report.mismatches {
        let _ = write!(
            msg,
            "\n  {}: expected {}, computed {} (state fidelity {})",
            m.pattern,
            m.expected_probability,
            fmt_sig(m.probability),
            fmt_sig(m.fidelity)
        );
    }
    for (label, list) in [
        ("missing", &report.missing),
        ("extra", &report.extra),
        ("suppressed missing", &report.suppressed_missing),
        ("suppressed extra", &report.suppressed_extra),
    ] {
        if !list.is_empty() {
            let _ = write!(msg, "\n  {label}: {}", list.join(", "));
        }
    }
    let _ = write!(msg, "\n{} of {} rows differ", report.mismatches.len(), report.rows_checked);
    Err(Failure::Golden(msg))
}

fn cmd_wpe(a: WpeArgs) -> CmdResult {
    let n = a.n as usize;
    if a.m.1 > n {
        return Err(Failure::Usage(format!("--m {} exceeds --n {n}", a.m.1)));
    }
    let ms: Vec<usize> = (a.m.0..=a.m.1).collect();
    let grid = a.sweep.clone().map(|g| g.0).unwrap_or_else(|| vec![a.p.expect("clap requires --p or --sweep")]);
    let rows = wpe_fidelity_sweep(n, &ms, &grid, a.eta)?;

    let simulated = if a.simulate {
        let u = eraser(n)?;
        let phases = vec![0.0; n];
        let sims: Vec<f64> = rows
            .iter()
            .map(|r| wpe_simulate(n, r.m as u32, r.p, &phases, &u, Exec::default()).map(|s| s.fidelity))
            .collect::<heralded::Result<_>>()?;
        Some(sims)
    } else {
        None
    };
    let max_dev = simulated
        .as_ref()
        .map(|s| rows.iter().zip(s).map(|(r, f)| (r.fidelity - f).abs()).fold(0.0, f64::max));

    let bytes = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut header = vec!["n", "m", "p", "eta_det", "fidelity", "rate_factor"];
            if simulated.is_some() {
                header.extend(["simulated_fidelity", "deviation"]);
            }
            csv_bytes(&header, |w| {
                for (i, r) in rows.iter().enumerate() {
                    let mut rec = vec![
                        n.to_string(),
                        r.m.to_string(),
                        fmt_sig(r.p),
                        fmt_sig(a.eta),
                        fmt_sig(r.fidelity),
                        fmt_sig(r.rate),
                    ];
                    if let Some(s) = &simulated {
                        rec.push(fmt_sig(s[i]));
                        rec.push(fmt_sig((r.fidelity - s[i]).abs()));
                    }
                    w.write_record(&rec)?;
                }
                Ok(())
            })?
        }
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut v = json!({
                        "m": r.m,
                        "p": round_sig(r.p),
                        "fidelity": round_sig(r.fidelity),
                        "rate_factor": round_sig(r.rate),
                    });
                    if let Some(s) = &simulated {
                        v["simulated_fidelity"] = json!(round_sig(s[i]));
                    }
                    v
                })
                .collect();
            let mut v = json!({ "n": n, "eta_det": round_sig(a.eta), "rows": items });
            if let Some(d) = max_dev {
                v["max_deviation"] = json!(round_sig(d));
            }
            json_bytes(&v)
        }
    };
    emit(&a.out, &bytes)?;
    if let Some(d) = max_dev {
        eprintln!("max deviation between formula and enumeration: {}", fmt_sig(d));
    }
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> CmdResult {
    let rows = compare_sweep(&a.grid.0, a.r_t, Exec::default())?;
    let crossover = rows[0].crossover_eta;
    let bytes = match a.out.format.unwrap_or(Format::Csv) {
        Format::Csv => csv_bytes(&["kind", "eta", "r_bell", "r_bell_chain", "r_quad"], |w| {
            for r in &rows {
                w.write_record([
                    "row",
                    &fmt_sig(r.eta),
                    &fmt_sig(r.r_bell),
                    &fmt_sig(r.r_bell_chain),
                    &fmt_sig(r.r_quad),
                ])?;
            }
            w.write_record(["crossover", &fmt_sig(crossover), "", "", ""])
        })?,
        Format::Json => {
            let items: Vec<Value> = rows
                .iter()
                .map(|r| {
                    json!({
                        "eta": round_sig(r.eta),
                        "r_bell": round_sig(r.r_bell),
                        "r_bell_chain": round_sig(r.r_bell_chain),
                        "r_quad": round_sig(r.r_quad),
                    })
                })
                .collect();
            json_bytes(&json!({ "r_t": round_sig(a.r_t), "rows": items, "crossover_eta": round_sig(crossover) }))
        }
    };
    emit(&a.out, &bytes)
}

enum Value1 {
    Plain(f64),
    Factor(FidelityResult),
}

impl From<f64> for Value1 {
    fn from(x: f64) -> Self {
        Value1::Plain(x)
    }
}

impl From<FidelityResult> for Value1 {
    fn from(r: FidelityResult) -> Self {
        Value1::Factor(r)
    }
}

fn cmd_analytics(a: AnalyticsArgs) -> CmdResult {
    if a.list {
        let mut s = String::new();
        for f in Formula::value_variants() {
            let name = f.to_possible_value().expect("no skipped variants");
            let _ = writeln!(s, "{:<24} {}", name.get_name(), f.summary());
        }
        std::io::stdout().write_all(s.as_bytes())?;
        return Ok(());
    }
    let formula = a.name.expect("clap requires a name unless --list");
    let d = SchemeParams::default();
    let params = SchemeParams {
        eta_det: a.eta_det.unwrap_or(d.eta_det),
        eta_abs: a.eta_abs.unwrap_or(d.eta_abs),
        eta_t: a.eta_t.unwrap_or(d.eta_t),
        eta_c: a.eta_c.unwrap_or(d.eta_c),
        eta_p: a.eta_p.unwrap_or(d.eta_p),
        eta_out: a.eta_out.unwrap_or(d.eta_out),
        eta_net: a.eta_net.unwrap_or(d.eta_net),
        eta_ent: a.eta_ent.unwrap_or(d.eta_ent),
        eta_a0an: a.eta_a0an.unwrap_or(d.eta_a0an),
        p: a.p.unwrap_or(d.p),
        p_epr: a.p_epr.unwrap_or(d.p_epr),
        p_ghz_n: a.p_ghz_n.unwrap_or(d.p_ghz_n),
        p_dark: a.p_dark.unwrap_or(d.p_dark),
        p_real: a.p_real.unwrap_or(d.p_real),
        f_pa: a.f_pa.unwrap_or(d.f_pa),
        f_ph: a.f_ph.unwrap_or(d.f_ph),
        r_t: a.r_t.unwrap_or(d.r_t),
    };
    let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| Failure::Usage(format!("this formula needs --{flag}")));
    let p = &params;
    let n = a.n;
    let results: Vec<(&str, Value1)> = match formula {
        Formula::StFidelity2 => vec![("fidelity", st_fidelity_2(p.eta_det)?.into())],
        Formula::StRate2 => vec![("rate", st_rate_2(p)?.into())],
        Formula::StNNode => {
            let node = st_n_node(p, n)?;
            vec![("fidelity", node.fidelity.into()), ("rate", node.rate.into())]
        }
        Formula::ItinerantFidelity2 => vec![("fidelity", itinerant_fidelity_2(p.f_pa)?.into())],
        Formula::ItinerantGhzFidelity => vec![("fidelity", itinerant_ghz_fidelity_sim(n, p.f_pa)?.into())],
        Formula::ItinerantDepolarizing => vec![("lambda", calibrate_depolarizing(p.f_pa)?.into())],
        Formula::ItinerantSuccess => vec![("success", itinerant_success(n, p.eta_t, p.eta_c, p.eta_det)?.into())],
        Formula::EmSuccess => vec![("success", em_success(n, p)?.into())],
        Formula::EmFalseHerald => vec![("probability", em_false_herald(n, p.p_real, p.p_dark)?.into())],
        Formula::EmFidelity => {
            let p_em = need(a.p_em, "p-em")?;
            let p_false = need(a.p_false, "p-false")?;
            vec![("fidelity", em_fidelity(n, p.f_ph, p_em, p_false)?.into())]
        }
        Formula::WpeFidelity => vec![("fidelity", wpe_fidelity(a.m, n, need(a.p, "p")?)?.into())],
        Formula::WpeRate => vec![("rate", wpe_rate(a.m, n, need(a.p, "p")?, p.eta_det)?.into())],
        Formula::SwapRate => vec![("rate", swap_rate(n, need(a.p_bsa, "p-bsa")?, p.eta_det)?.into())],
        Formula::Compare4node => {
            let c = compare_4node(p.eta_det, p.r_t)?;
            vec![
                ("r_bell_chain", c.r_bell_chain.into()),
                ("r_quad", c.r_quad.into()),
                ("crossover_eta", c.crossover_eta.into()),
            ]
        }
    };

    let name = formula.to_possible_value().expect("no skipped variants").get_name().to_string();
    let bytes = match a.format {
        Some(Format::Json) => {
            let items: serde_json::Map<String, Value> = results
                .iter()
                .map(|(k, v)| {
                    let entry = match v {
                        Value1::Plain(x) => json!({ "value": round_sig(*x), "is_proportional": false }),
                        Value1::Factor(r) => {
                            let mut e = json!({ "value": round_sig(r.value), "is_proportional": r.is_proportional });
                            if let (true, Some(rt)) = (r.is_proportional, a.r_t) {
                                e["times_r_t"] = json!(round_sig(r.value * rt));
                            }
                            e
                        }
                    };
                    (k.to_string(), entry)
                })
                .collect();
            json_bytes(&json!({ "formula": name, "results": items }))
        }
        Some(Format::Csv) => csv_bytes(&["formula", "quantity", "value", "is_proportional"], |w| {
            for (k, v) in &results {
                let (x, prop) = match v {
                    Value1::Plain(x) => (*x, false),
                    Value1::Factor(r) => (r.value, r.is_proportional),
                };
                w.write_record([name.as_str(), k, &fmt_sig(x), &prop.to_string()])?;
            }
            Ok(())
        })?,
        None => {
            let mut s = String::new();
            for (k, v) in &results {
                match v {
                    Value1::Plain(x) => {
                        let _ = writeln!(s, "{name} {k} = {}", fmt_sig(*x));
                    }
                    Value1::Factor(r) if !r.is_proportional => {
                        let _ = writeln!(s, "{name} {k} = {}", fmt_sig(r.value));
                    }
                    Value1::Factor(r) => match a.r_t {
                        Some(rt) => {
                            let _ = writeln!(
                                s,
                                "{name} {k} ∝ {} × r_T = {} (proportional)",
                                fmt_sig(r.value),
                                fmt_sig(r.value * rt)
                            );
                        }
                        None => {
                            let _ = writeln!(s, "{name} {k} ∝ {} (proportional)", fmt_sig(r.value));
                        }
                    },
                }
            }
            s.into_bytes()
        }
    };
    std::io::stdout().write_all(&bytes)?;
    Ok(())
}
