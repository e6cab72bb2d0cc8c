//! CSV input and output for the adjustment pipeline.
//!
//! Input files carry either a timestamp column (ISO-8601, minute precision) or
//! a column of precomputed durations in minutes. The adjusted output has the
//! columns of [`ADJUSTED_COLUMNS`].

use std::io::{Read, Write};

use chrono::NaiveDateTime;

use super::{Adjustment, InterArrivalSeries};
use crate::error::{Error, Result};

pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";
pub const ADJUSTED_COLUMNS: [&str; 5] = [
    "timestamp",
    "raw_duration",
    "week_position",
    "fitted_log",
    "adjusted_duration",
];

const ACCEPTED_FORMATS: [&str; 4] = [
    "%Y-%m-%dT%H:%M",
    "%Y-%m-%d %H:%M",
    "%Y-%m-%dT%H:%M:%S",
    "%Y-%m-%d %H:%M:%S",
];

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ACCEPTED_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn format_timestamp(ts: &NaiveDateTime) -> String {
    ts.format(TIMESTAMP_FORMAT).to_string()
}

/// Reads one column, parsing every row with `parse`. All malformed rows are
/// reported together with their 1-based line numbers (header is line 1).
fn read_column<R: Read, T>(input: R, column: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let idx = headers.iter().position(|h| h == column).ok_or_else(|| {
        Error::Parse(format!(
            "column '{column}' not found; available: {}",
            headers.iter().collect::<Vec<_>>().join(", ")
        ))
    })?;
    let mut values = Vec::new();
    let mut bad = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        match rec {
            Ok(rec) => match rec.get(idx).and_then(&parse) {
                Some(v) => values.push(v),
                None => bad.push(line),
            },
            Err(_) => bad.push(line),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(20).map(|l| l.to_string()).collect();
        let more = if bad.len() > 20 {
            format!(" (and {} more)", bad.len() - 20)
        } else {
            String::new()
        };
        return Err(Error::Parse(format!(
            "{} malformed row(s) in column '{column}' at line(s) {}{more}",
            bad.len(),
            shown.join(", ")
        )));
    }
    Ok(values)
}

pub fn read_timestamps<R: Read>(input: R, column: &str) -> Result<Vec<NaiveDateTime>> {
    read_column(input, column, parse_timestamp)
}

pub fn read_durations<R: Read>(input: R, column: &str) -> Result<Vec<f64>> {
    read_column(input, column, |s| {
        s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
    })
}

pub fn write_timestamps<W: Write>(out: W, timestamps: &[NaiveDateTime]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["timestamp"])?;
    for ts in timestamps {
        w.write_record([format_timestamp(ts)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_adjusted<W: Write>(out: W, series: &InterArrivalSeries, adjustment: &Adjustment) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ADJUSTED_COLUMNS)?;
    for i in 0..series.len() {
        w.write_record([
            format_timestamp(&series.timestamps[i]),
            format!("{}", series.durations[i]),
            format!("{}", series.week_position[i]),
            format!("{:.12}", adjustment.fitted_log[i]),
            format!("{:.15e}", adjustment.adjusted[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_formats() {
        let a = parse_timestamp("2018-06-11T09:15").unwrap();
        let b = parse_timestamp("2018-06-11 09:15").unwrap();
        let c = parse_timestamp(" 2018-06-11T09:15:00 ").unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert!(parse_timestamp("11/06/2018").is_none());
        assert_eq!(format_timestamp(&a), "2018-06-11T09:15");
    }

    #[test]
    fn malformed_rows_listed_by_line() {
        let data = "id,timestamp\n1,2018-06-11T09:15\n2,garbage\n3,2018-06-11T09:20\n4,\n";
        let err = read_timestamps(data.as_bytes(), "timestamp").unwrap_err().to_string();
        assert!(err.contains("line(s) 3, 5"), "{err}");
    }

    #[test]
    fn missing_column() {
        let err = read_durations("a,b\n1,2\n".as_bytes(), "duration").unwrap_err();
        assert!(err.to_string().contains("not found"));
    }

    #[test]
    fn durations_column() {
        let v = read_durations("duration\n1.5\n0\n3\n".as_bytes(), "duration").unwrap();
        assert_eq!(v, vec![1.5, 0.0, 3.0]);
    }
}
