//! CSV persistence of samples and diagnostics.

use std::io::{Read, Write};

use super::runner::TrialDiagnostics;
use crate::linklevel::{from_db, SinrSample};
use crate::{Error, Result};

pub const SAMPLES_HEADER: [&str; 6] = ["trial", "user", "kind", "direction", "scheme", "sinr_db"];
pub const DIAGNOSTICS_HEADER: [&str; 11] = [
    "trial",
    "id_attempts",
    "id_successes",
    "multi_match",
    "multi_match_cleared",
    "detection_runs",
    "false_alarm_runs",
    "interferers",
    "missed",
    "truncated_runs",
    "components",
];

/// One row per sample; `sinr_db` is written in shortest round-trip form so
/// that re-reading reproduces the dB values exactly.
pub fn write_samples<W: Write>(samples: &[SinrSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SAMPLES_HEADER)?;
    for s in samples {
        w.write_record([
            s.trial.to_string(),
            s.user.to_string(),
            s.user_kind.as_str().to_string(),
            s.direction.as_str().to_string(),
            s.scheme.as_str().to_string(),
            s.db().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(line: u64, reason: impl Into<String>) -> Error {
    Error::Parse {
        line,
        reason: reason.into(),
    }
}

fn field(rec: &csv::StringRecord, i: usize, line: u64) -> Result<&str> {
    rec.get(i)
        .ok_or_else(|| parse_err(line, format!("missing column {}", i + 1)))
}

fn check_header(rec: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = rec.iter().map(str::trim).collect();
    if got != expected {
        return Err(parse_err(1, format!("expected header {}", expected.join(","))));
    }
    Ok(())
}

pub fn read_samples<R: Read>(input: R) -> Result<Vec<SinrSample>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(r.headers()?, &SAMPLES_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        if rec.len() != SAMPLES_HEADER.len() {
            return Err(parse_err(line, format!("expected {} columns", SAMPLES_HEADER.len())));
        }
        let num = |j: usize| -> Result<&str> { field(&rec, j, line).map(str::trim) };
        let db: f64 = num(5)?.parse().map_err(|_| parse_err(line, "bad sinr_db"))?;
        if db.is_nan() {
            return Err(parse_err(line, "sinr_db is NaN"));
        }
        out.push(SinrSample {
            trial: num(0)?.parse().map_err(|_| parse_err(line, "bad trial"))?,
            user: num(1)?.parse().map_err(|_| parse_err(line, "bad user"))?,
            user_kind: num(2)?.parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
            direction: num(3)?.parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
            scheme: num(4)?.parse().map_err(|e: Error| parse_err(line, e.to_string()))?,
            value: from_db(db),
        });
    }
    Ok(out)
}

pub fn write_diagnostics<W: Write>(diags: &[TrialDiagnostics], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DIAGNOSTICS_HEADER)?;
    for d in diags {
        w.write_record([
            d.trial.to_string(),
            d.id_attempts.to_string(),
            d.id_successes.to_string(),
            d.multi_match.to_string(),
            d.multi_match_cleared.to_string(),
            d.detection_runs.to_string(),
            d.false_alarm_runs.to_string(),
            d.interferers.to_string(),
            d.missed.to_string(),
            d.truncated_runs.to_string(),
            d.components.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics<R: Read>(input: R) -> Result<Vec<TrialDiagnostics>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    check_header(r.headers()?, &DIAGNOSTICS_HEADER)?;
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i as u64 + 2;
        if rec.len() != DIAGNOSTICS_HEADER.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns", DIAGNOSTICS_HEADER.len()),
            ));
        }
        let mut v = [0u64; DIAGNOSTICS_HEADER.len()];
        for (j, slot) in v.iter_mut().enumerate() {
            *slot = field(&rec, j, line)?
                .trim()
                .parse()
                .map_err(|_| parse_err(line, format!("bad `{}`", DIAGNOSTICS_HEADER[j])))?;
        }
        let c = |x: u64| u32::try_from(x).map_err(|_| parse_err(line, "count out of range"));
        out.push(TrialDiagnostics {
            trial: v[0],
            id_attempts: c(v[1])?,
            id_successes: c(v[2])?,
            multi_match: c(v[3])?,
            multi_match_cleared: c(v[4])?,
            detection_runs: c(v[5])?,
            false_alarm_runs: c(v[6])?,
            interferers: c(v[7])?,
            missed: c(v[8])?,
            truncated_runs: c(v[9])?,
            components: c(v[10])?,
        });
    }
    Ok(out)
}
