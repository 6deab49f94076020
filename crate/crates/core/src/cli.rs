//! Command-line front end: argument parsing, table assembly and CSV/JSON
//! output.

use std::f64::consts::PI;
use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{Map, Number, Value};

use crate::analytic::{disturbance_of_t, probability_of_t, tilt_of_t, tradeoff_curve, StatePair};
use crate::instrument::{disturbance, optimal_instrument, povm_of, success_probability};
use crate::montecarlo::{self, SimConfig, SimScheme};
use crate::oracle::{self, DEFAULT_BUDGET};
use crate::qmath::Operator;
use crate::schemes::{
    kerr_report, parity_report, FeedbackMode, KerrScheme, ParityScheme, SchemeReport,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Significant digits of every printed real.
pub const DIGITS: usize = 12;

#[derive(Parser, Debug)]
#[command(
    name = "qdisturb",
    version,
    about = "Least-disturbing discrimination of two real qubit states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Optimal tradeoff curve: t, gamma, beta_t, P, D.
    Curve {
        #[arg(long, value_parser = parse_angle)]
        alpha: f64,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Kraus operators, POVM and figures of merit of the optimal instrument.
    Instrument {
        #[arg(long, value_parser = parse_angle)]
        alpha: f64,
        #[arg(long)]
        t: f64,
    },
    /// Score an optical scheme against the optimal curve.
    Scheme {
        #[arg(value_enum)]
        scheme: OpticalScheme,
        #[command(flatten)]
        param: SchemeParam,
        /// Sweep the scheme parameter over a uniform grid instead.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Compare the numerical minimizer with the closed form along the curve.
    Verify {
        #[arg(long, value_parser = parse_angle)]
        alpha: f64,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Shot-by-shot simulation with z-scores against exact values.
    Montecarlo {
        #[arg(value_enum, default_value_t = SimKind::Optimal)]
        scheme: SimKind,
        #[command(flatten)]
        param: SchemeParam,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args, Debug)]
pub struct SchemeParam {
    #[arg(long, value_parser = parse_angle)]
    pub alpha: f64,
    /// Control parameter of the optimal and parity schemes.
    #[arg(long)]
    pub t: Option<f64>,
    /// Kerr cross-phase.
    #[arg(long, value_parser = parse_angle)]
    pub phi: Option<f64>,
    #[arg(long, value_enum, default_value_t = Feedback::Paper)]
    pub feedback: Feedback,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpticalScheme {
    Kerr,
    Parity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimKind {
    Optimal,
    Kerr,
    Parity,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Feedback {
    Paper,
    Optimized,
    None,
}

impl From<Feedback> for FeedbackMode {
    fn from(f: Feedback) -> Self {
        match f {
            Feedback::Paper => FeedbackMode::Paper,
            Feedback::Optimized => FeedbackMode::Optimized,
            Feedback::None => FeedbackMode::None,
        }
    }
}

/// Parses a real number or a π-multiple: `pi`, `-pi/8`, `3pi/16`, `3*pi/16`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let bad = || format!("invalid angle `{s}` (expected a number or a form like 3pi/16)");
    let Some(at) = s.find("pi") else {
        let v: f64 = s.parse().map_err(|_| bad())?;
        return if v.is_finite() { Ok(v) } else { Err(bad()) };
    };
    let head = s[..at].trim_end_matches('*').trim();
    let tail = s[at + 2..].trim();
    let num = match head {
        "" | "+" => 1.0,
        "-" => -1.0,
        h => h.parse::<f64>().map_err(|_| bad())?,
    };
    let den = match tail {
        "" => 1.0,
        t => t
            .strip_prefix('/')
            .and_then(|d| d.trim().parse::<f64>().ok())
            .filter(|d| *d != 0.0)
            .ok_or_else(bad)?,
    };
    let v = num * PI / den;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// `%.12g`-style text: shortest of fixed or scientific, trailing zeros trimmed.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..DIGITS as i32).contains(&exp) {
        let decimals = (DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Real(x) => format_real(*x),
            Cell::Int(n) => n.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Real(x) => format_real(*x)
                .parse::<f64>()
                .ok()
                .and_then(Number::from_f64)
                .map_or(Value::Null, Value::Number),
            Cell::Int(n) => Value::from(*n),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Bool(b) => Value::from(*b),
        }
    }
}

/// Rows sharing one column schema.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> io::Result<()> {
        match format {
            Format::Csv => {
                writeln!(out, "{}", self.columns.join(","))?;
                for row in &self.rows {
                    let cells: Vec<String> = row.iter().map(Cell::text).collect();
                    writeln!(out, "{}", cells.join(","))?;
                }
            }
            Format::Json => {
                let objects: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let map: Map<String, Value> = self
                            .columns
                            .iter()
                            .zip(row)
                            .map(|(k, v)| (k.to_string(), v.json()))
                            .collect();
                        Value::Object(map)
                    })
                    .collect();
                serde_json::to_writer_pretty(&mut *out, &objects)?;
                writeln!(out)?;
            }
        }
        Ok(())
    }
}

/// Result of a command: the table, the exit code and diagnostics for stderr.
#[derive(Debug)]
pub struct Report {
    pub table: Table,
    pub exit_code: i32,
    pub diagnostics: Vec<String>,
}

impl Report {
    fn ok(table: Table) -> Self {
        Self {
            table,
            exit_code: EXIT_OK,
            diagnostics: Vec::new(),
        }
    }
}

fn real(x: f64) -> Cell {
    Cell::Real(x)
}

fn usage(msg: impl Into<String>) -> crate::Error {
    crate::Error::InvalidArgument(msg.into())
}

fn require(value: Option<f64>, flag: &str, scheme: &str) -> crate::Result<f64> {
    value.ok_or_else(|| usage(format!("{scheme} requires --{flag}")))
}

fn curve(alpha: f64, points: usize) -> crate::Result<Report> {
    let pair = StatePair::new(alpha)?;
    let mut table = Table::new(&["t", "gamma", "beta_t", "P", "D"]);
    for p in tradeoff_curve(&pair, points)? {
        table.push(vec![
            real(p.t),
            real(p.gamma),
            real(p.beta_t),
            real(p.p),
            real(p.d),
        ]);
    }
    Ok(Report::ok(table))
}

fn push_operator(
    columns: &mut Vec<&'static str>,
    cells: &mut Vec<Cell>,
    names: &[&'static str; 8],
    op: &Operator,
) {
    columns.extend_from_slice(names);
    for i in 0..2 {
        for j in 0..2 {
            let z = op.get(i, j);
            cells.push(real(z.re));
            cells.push(real(z.im));
        }
    }
}

fn instrument(alpha: f64, t: f64) -> crate::Result<Report> {
    let pair = StatePair::new(alpha)?;
    let instr = optimal_instrument(&pair, t)?;
    let povm = povm_of(&instr)?;
    let p = success_probability(&instr, &pair)?;
    let d = disturbance(&instr, &pair);
    let p_closed = probability_of_t(&pair, t)?;
    let d_closed = disturbance_of_t(&pair, t)?;

    let mut columns = vec![
        "alpha",
        "t",
        "gamma",
        "beta_t",
        "P",
        "D",
        "P_closed_form",
        "D_closed_form",
        "P_residual",
        "D_residual",
        "completeness_residual",
    ];
    let mut cells = vec![
        real(alpha),
        real(t),
        real(crate::analytic::gamma_of_t(t)),
        real(tilt_of_t(&pair, t)?),
        real(p),
        real(d),
        real(p_closed),
        real(d_closed),
        real((p - p_closed).abs()),
        real((d - d_closed).abs()),
        real(instr.completeness_residual()),
    ];
    const E1: [&str; 8] = [
        "E1_11_re", "E1_11_im", "E1_12_re", "E1_12_im", "E1_21_re", "E1_21_im", "E1_22_re",
        "E1_22_im",
    ];
    const E2: [&str; 8] = [
        "E2_11_re", "E2_11_im", "E2_12_re", "E2_12_im", "E2_21_re", "E2_21_im", "E2_22_re",
        "E2_22_im",
    ];
    const PI1: [&str; 8] = [
        "Pi1_11_re",
        "Pi1_11_im",
        "Pi1_12_re",
        "Pi1_12_im",
        "Pi1_21_re",
        "Pi1_21_im",
        "Pi1_22_re",
        "Pi1_22_im",
    ];
    const PI2: [&str; 8] = [
        "Pi2_11_re",
        "Pi2_11_im",
        "Pi2_12_re",
        "Pi2_12_im",
        "Pi2_21_re",
        "Pi2_21_im",
        "Pi2_22_re",
        "Pi2_22_im",
    ];
    push_operator(&mut columns, &mut cells, &E1, &instr.outcome(1)?.kraus[0]);
    push_operator(&mut columns, &mut cells, &E2, &instr.outcome(2)?.kraus[0]);
    push_operator(&mut columns, &mut cells, &PI1, &povm.elements[0]);
    push_operator(&mut columns, &mut cells, &PI2, &povm.elements[1]);

    let mut table = Table::new(&columns);
    table.push(cells);
    Ok(Report::ok(table))
}

fn scheme_row(
    scheme: &str,
    alpha: f64,
    param: f64,
    feedback: &str,
    rep: &SchemeReport,
) -> Vec<Cell> {
    let mut row = vec![
        Cell::Text(scheme.into()),
        real(alpha),
        real(param),
        Cell::Text(feedback.into()),
        real(rep.t_effective),
        real(rep.achieved_p),
        real(rep.achieved_d),
        real(rep.postselect_rate),
        real(rep.d_optimal_at_p),
        real(rep.gap),
    ];
    if let (Some(theta), Some(residual)) = (rep.theta, rep.choi_residual) {
        row.push(real(theta));
        row.push(real(residual));
    }
    row
}

const SCHEME_COLUMNS: [&str; 10] = [
    "scheme",
    "alpha",
    "param",
    "feedback",
    "t_effective",
    "P",
    "D",
    "postselect_rate",
    "D_optimal_at_P",
    "gap",
];

fn grid(points: usize, max: f64) -> crate::Result<Vec<f64>> {
    if points < 2 {
        return Err(crate::Error::TooSmall {
            what: "points",
            value: points,
            min: 2,
        });
    }
    let last = (points - 1) as f64;
    Ok((0..points)
        .map(|k| {
            if k + 1 == points {
                max
            } else {
                max * k as f64 / last
            }
        })
        .collect())
}

fn scheme(
    kind: OpticalScheme,
    param: &SchemeParam,
    points: Option<usize>,
) -> crate::Result<Report> {
    let pair = StatePair::new(param.alpha)?;
    match kind {
        OpticalScheme::Kerr => {
            let phis = match points {
                Some(n) => grid(n, PI)?,
                None => vec![require(param.phi, "phi", "kerr")?],
            };
            let mode = FeedbackMode::from(param.feedback);
            let mut table = Table::new(&SCHEME_COLUMNS);
            for phi in phis {
                let rep = kerr_report(&KerrScheme::new(phi, mode)?, &pair)?;
                table.push(scheme_row(
                    "kerr",
                    param.alpha,
                    phi,
                    &mode.to_string(),
                    &rep,
                ));
            }
            Ok(Report::ok(table))
        }
        OpticalScheme::Parity => {
            let ts = match points {
                Some(n) => grid(n, 1.0)?,
                None => vec![require(param.t, "t", "parity")?],
            };
            let mut columns = SCHEME_COLUMNS.to_vec();
            columns.extend(["theta", "choi_residual"]);
            let mut table = Table::new(&columns);
            for t in ts {
                let rep = parity_report(&ParityScheme::new(t)?, &pair)?;
                table.push(scheme_row("parity", param.alpha, t, "paper", &rep));
            }
            Ok(Report::ok(table))
        }
    }
}

fn verify(alpha: f64, points: usize, budget: usize, seed: u64) -> crate::Result<Report> {
    let pair = StatePair::new(alpha)?;
    let checks = oracle::verify_curve(&pair, points, budget, seed)?;
    let mut table = Table::new(&[
        "t",
        "target_P",
        "D_analytic",
        "D_oracle",
        "gap",
        "residual",
        "evaluations",
        "converged",
        "status",
    ]);
    let mut diagnostics = Vec::new();
    for c in &checks {
        let status = if c.passed() { "ok" } else { "FAIL" };
        table.push(vec![
            real(c.t),
            real(c.target_p),
            real(c.d_analytic),
            real(c.d_oracle),
            real(c.gap),
            real(c.residual),
            Cell::Int(c.evaluations as u64),
            Cell::Bool(c.converged),
            Cell::Text(status.into()),
        ]);
        if !c.converged {
            diagnostics.push(format!(
                "t = {}: budget exhausted after {} evaluations without convergence",
                format_real(c.t),
                c.evaluations
            ));
        }
        if !c.gap_ok() {
            diagnostics.push(format!(
                "t = {}: gap {} outside [{}, {}]",
                format_real(c.t),
                format_real(c.gap),
                format_real(oracle::GAP_LOWER),
                format_real(oracle::GAP_UPPER)
            ));
        }
    }
    let failed = checks.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        diagnostics.push(format!(
            "verification failed at {failed} of {} points",
            checks.len()
        ));
    }
    Ok(Report {
        table,
        exit_code: if failed > 0 {
            EXIT_VERIFY_FAILED
        } else {
            EXIT_OK
        },
        diagnostics,
    })
}

fn z_score(estimate: f64, exact: f64, se: f64) -> f64 {
    let diff = estimate - exact;
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

fn montecarlo(kind: SimKind, param: &SchemeParam, shots: u64, seed: u64) -> crate::Result<Report> {
    let pair = StatePair::new(param.alpha)?;
    let (scheme, value, name, p_exact, d_exact) = match kind {
        SimKind::Optimal | SimKind::Parity => {
            let t = require(
                param.t,
                "t",
                if kind == SimKind::Optimal {
                    "optimal"
                } else {
                    "parity"
                },
            )?;
            let (scheme, name) = if kind == SimKind::Optimal {
                (SimScheme::Optimal, "optimal")
            } else {
                (SimScheme::Parity, "parity")
            };
            (
                scheme,
                t,
                name,
                probability_of_t(&pair, t)?,
                disturbance_of_t(&pair, t)?,
            )
        }
        SimKind::Kerr => {
            let phi = require(param.phi, "phi", "kerr")?;
            let mode = FeedbackMode::from(param.feedback);
            let rep = kerr_report(&KerrScheme::new(phi, mode)?, &pair)?;
            (
                SimScheme::Kerr(mode),
                phi,
                "kerr",
                rep.achieved_p,
                rep.achieved_d,
            )
        }
    };
    let config = SimConfig {
        shots,
        seed,
        alpha: param.alpha,
        t_or_phi: value,
        scheme,
    };
    let est = montecarlo::run(&config)?;
    let n = shots as f64;
    let (rate_exact, discard_rate) = match kind {
        SimKind::Parity => (0.5, est.discarded as f64 / n),
        _ => (0.0, 0.0),
    };
    let discard_se = (rate_exact * (1.0 - rate_exact) / n).sqrt();
    let mut table = Table::new(&[
        "scheme",
        "alpha",
        "param",
        "shots",
        "seed",
        "P_hat",
        "P_se",
        "P_exact",
        "z_P",
        "D_hat",
        "D_se",
        "D_exact",
        "z_D",
        "discarded",
        "shots_used",
        "discard_rate",
        "z_discard",
    ]);
    table.push(vec![
        Cell::Text(name.into()),
        real(param.alpha),
        real(value),
        Cell::Int(shots),
        Cell::Int(seed),
        real(est.p_hat),
        real(est.p_se),
        real(p_exact),
        real(z_score(est.p_hat, p_exact, est.p_se)),
        real(est.d_hat),
        real(est.d_se),
        real(d_exact),
        real(z_score(est.d_hat, d_exact, est.d_se)),
        Cell::Int(est.discarded),
        Cell::Int(est.shots_used),
        real(discard_rate),
        real(z_score(discard_rate, rate_exact, discard_se)),
    ]);
    Ok(Report::ok(table))
}

/// Runs a parsed command. Errors are usage errors (exit code 2).
pub fn execute(cli: &Cli) -> crate::Result<Report> {
    match &cli.command {
        Command::Curve { alpha, points } => curve(*alpha, *points),
        Command::Instrument { alpha, t } => instrument(*alpha, *t),
        Command::Scheme {
            scheme: kind,
            param,
            points,
        } => scheme(*kind, param, *points),
        Command::Verify {
            alpha,
            points,
            budget,
            seed,
        } => verify(*alpha, *points, *budget, *seed),
        Command::Montecarlo {
            scheme: kind,
            param,
            shots,
            seed,
        } => montecarlo(*kind, param, *shots, *seed),
    }
}

fn emit(cli: &Cli, report: &Report) -> io::Result<()> {
    match &cli.output {
        Some(path) => {
            let mut out = BufWriter::new(File::create(path)?);
            report.table.write(cli.format, &mut out)?;
            out.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut out = stdout.lock();
            report.table.write(cli.format, &mut out)?;
            out.flush()
        }
    }
}

/// Full program: parse, execute, write. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let report = match execute(&cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: cannot write output: {e}");
        return EXIT_USAGE;
    }
    for line in &report.diagnostics {
        eprintln!("{line}");
    }
    report.exit_code
}
