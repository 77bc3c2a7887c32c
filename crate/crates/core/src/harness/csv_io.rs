//! CSV formats: six decimals, LF line endings.
//!
//! * model profile: `position,probability`
//! * empirical profile: `position,probability,stddev,samples`
//! * error summary: `metric,value` with rows `mae` and `max_abs_error`

use std::io::{Read, Write};

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use super::report::ErrorSummary;
use crate::error::{Error, Result};
use crate::sim::EmpiricalProfile;

pub const MODEL_HEADER: [&str; 2] = ["position", "probability"];
pub const SIM_HEADER: [&str; 4] = ["position", "probability", "stddev", "samples"];
pub const SUMMARY_HEADER: [&str; 2] = ["metric", "value"];

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

pub fn write_model_csv<W: Write>(w: W, profile: &[f64]) -> Result<()> {
    let mut out = writer(w);
    out.write_record(MODEL_HEADER)?;
    for (i, p) in profile.iter().enumerate() {
        out.write_record([(i + 1).to_string(), fixed(*p)])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sim_csv<W: Write>(w: W, profile: &EmpiricalProfile) -> Result<()> {
    if profile.stddev.len() != profile.values.len() {
        return Err(Error::LengthMismatch {
            left: profile.values.len(),
            right: profile.stddev.len(),
        });
    }
    let mut out = writer(w);
    out.write_record(SIM_HEADER)?;
    for (i, (p, s)) in profile.values.iter().zip(&profile.stddev).enumerate() {
        out.write_record([
            (i + 1).to_string(),
            fixed(*p),
            fixed(*s),
            profile.sample_count.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_error_summary<W: Write>(w: W, summary: &ErrorSummary) -> Result<()> {
    let mut out = writer(w);
    out.write_record(SUMMARY_HEADER)?;
    out.write_record(["mae".to_string(), fixed(summary.mae)])?;
    out.write_record(["max_abs_error".to_string(), fixed(summary.max_abs_error)])?;
    out.flush()?;
    Ok(())
}

fn records<R: Read>(r: R, header: &[&str]) -> Result<Vec<StringRecord>> {
    let mut rdr = ReaderBuilder::new().from_reader(r);
    let found = rdr.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::Csv(format!(
            "expected header `{}`, found `{}`",
            header.join(","),
            found.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(rdr.records().collect::<std::result::Result<_, _>>()?)
}

fn field<T: std::str::FromStr>(rec: &StringRecord, i: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::Csv(format!("cannot parse `{raw}` in row {:?}", rec.position().map(|p| p.line()))))
}

fn check_position(rec: &StringRecord, expected: usize) -> Result<()> {
    let position: usize = field(rec, 0)?;
    if position == expected {
        Ok(())
    } else {
        Err(Error::Csv(format!("expected position {expected}, found {position}")))
    }
}

pub fn read_model_csv<R: Read>(r: R) -> Result<Vec<f64>> {
    records(r, &MODEL_HEADER)?
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            check_position(rec, i + 1)?;
            field(rec, 1)
        })
        .collect()
}

pub fn read_sim_csv<R: Read>(r: R) -> Result<EmpiricalProfile> {
    let mut values = Vec::new();
    let mut stddev = Vec::new();
    let mut sample_count = 0;
    for (i, rec) in records(r, &SIM_HEADER)?.iter().enumerate() {
        check_position(rec, i + 1)?;
        values.push(field(rec, 1)?);
        stddev.push(field(rec, 2)?);
        sample_count = field(rec, 3)?;
    }
    Ok(EmpiricalProfile {
        values,
        stddev,
        sample_count,
    })
}

/// Returns `(mae, max_abs_error)`.
pub fn read_error_summary<R: Read>(r: R) -> Result<(f64, f64)> {
    let mut mae = None;
    let mut max = None;
    for rec in records(r, &SUMMARY_HEADER)? {
        match rec.get(0) {
            Some("mae") => mae = Some(field(&rec, 1)?),
            Some("max_abs_error") => max = Some(field(&rec, 1)?),
            other => return Err(Error::Csv(format!("unknown metric {other:?}"))),
        }
    }
    match (mae, max) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::Csv("error summary needs mae and max_abs_error rows".into())),
    }
}
