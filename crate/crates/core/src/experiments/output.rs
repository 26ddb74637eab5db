//! CSV emission and parse-back.
//!
//! Metadata goes first as `# key = value` comment lines, then a header row and
//! one record per sweep row. Numbers use the shortest representation that
//! parses back to the same `f64`, always with `.` as decimal point.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::sweep::{Engine, SweepResult, SweepRow, SweepVariable};
use super::ExperimentError;

pub const CSV_COLUMNS: [&str; 13] = [
    "variable_name",
    "variable_value",
    "beta",
    "engine",
    "pe",
    "pe_ci_halfwidth",
    "mi_bits",
    "lambda",
    "n",
    "d_m",
    "D_m2s",
    "Ts_s",
    "q",
];

/// Shortest round-trip decimal, switching to exponent form for very small or
/// very large magnitudes.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e7).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn csv_err(e: csv::Error) -> ExperimentError {
    ExperimentError::Csv(e.to_string())
}

pub fn write_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io {
        path: "<output>".into(),
        source,
    };
    for (k, v) in &result.metadata {
        writeln!(out, "# {k} = {v}").map_err(io)?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in &result.rows {
        let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
        w.write_record([
            r.variable.as_str().to_string(),
            format_number(r.value),
            format_number(r.beta),
            r.engine.as_str().to_string(),
            format_number(r.pe),
            opt(r.pe_ci_halfwidth),
            format_number(r.mi_bits),
            opt(r.lambda),
            r.n.to_string(),
            format_number(r.distance),
            format_number(r.diffusion_coefficient),
            format_number(r.slot_duration),
            format_number(r.prior_one),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Write `result` to `path`, creating or truncating it.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<(), ExperimentError> {
    let with_path = |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(with_path)?;
    let mut buf = BufWriter::new(file);
    write_csv(result, &mut buf).map_err(|e| match e {
        ExperimentError::Io { source, .. } => with_path(source),
        other => other,
    })?;
    buf.flush().map_err(with_path)
}

/// Parse CSV produced by [`write_csv`]; returns metadata and rows.
/// `# key = value` lines in file order.
pub type Metadata = Vec<(String, String)>;

pub fn read_csv<R: Read>(mut input: R) -> Result<(Metadata, Vec<SweepRow>), ExperimentError> {
    let mut text = String::new();
    input.read_to_string(&mut text).map_err(|source| ExperimentError::Io {
        path: "<input>".into(),
        source,
    })?;
    let mut metadata = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (k, v) = body
            .split_once(" = ")
            .ok_or_else(|| ExperimentError::Csv(format!("bad metadata line '{line}'")))?;
        metadata.push((k.to_string(), v.to_string()));
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = reader.headers().map_err(csv_err)?;
    if header.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(ExperimentError::Csv(format!("unexpected header {header:?}")));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64, ExperimentError> {
            record[i]
                .parse()
                .map_err(|_| ExperimentError::Csv(format!("column {} is not a number: '{}'", CSV_COLUMNS[i], &record[i])))
        };
        let opt = |i: usize| if record[i].is_empty() { Ok(None) } else { f(i).map(Some) };
        rows.push(SweepRow {
            variable: SweepVariable::parse(&record[0])
                .ok_or_else(|| ExperimentError::Csv(format!("unknown variable '{}'", &record[0])))?,
            value: f(1)?,
            beta: f(2)?,
            engine: Engine::parse(&record[3]).ok_or_else(|| ExperimentError::Csv(format!("unknown engine '{}'", &record[3])))?,
            pe: f(4)?,
            pe_ci_halfwidth: opt(5)?,
            mi_bits: f(6)?,
            lambda: opt(7)?,
            n: record[8]
                .parse()
                .map_err(|_| ExperimentError::Csv(format!("bad molecule count '{}'", &record[8])))?,
            distance: f(9)?,
            diffusion_coefficient: f(10)?,
            slot_duration: f(11)?,
            prior_one: f(12)?,
        });
    }
    Ok((metadata, rows))
}
