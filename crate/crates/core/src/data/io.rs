//! Panel CSV (`date,<series…>`) with a sidecar `name,code` transform file.

use std::collections::HashMap;
use std::path::Path;

use chrono::NaiveDate;
use ndarray::Array2;

use super::panel::{TimeSeriesPanel, TransformCode};
use crate::error::{HnnError, Result};

fn parse_cell(s: &str) -> Result<f64> {
    let s = s.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(f64::NAN);
    }
    s.parse::<f64>()
        .map_err(|_| HnnError::Parse(format!("`{s}` is not a number")))
}

pub fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|e| HnnError::Parse(format!("bad ISO date `{s}`: {e}")))
}

/// Reads `name,code` lines. Blank lines and `#` comments are skipped.
pub fn read_transform_codes(path: &Path) -> Result<HashMap<String, TransformCode>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = HashMap::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (name, code) = line.split_once(',').ok_or_else(|| {
            HnnError::Parse(format!("{}:{}: expected `name,code`", path.display(), no + 1))
        })?;
        let code: TransformCode = code.parse().map_err(|e: HnnError| {
            HnnError::Parse(format!("{}:{}: {e}", path.display(), no + 1))
        })?;
        out.insert(name.trim().to_string(), code);
    }
    Ok(out)
}

pub fn read_panel(csv_path: &Path, codes_path: &Path) -> Result<TimeSeriesPanel> {
    let codes = read_transform_codes(codes_path)?;
    let mut reader = csv::ReaderBuilder::new().flexible(false).from_path(csv_path)?;
    let headers = reader.headers()?.clone();
    if headers.len() < 2 {
        return Err(HnnError::Parse("panel needs a date column and at least one series".into()));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let series_codes = names
        .iter()
        .map(|n| {
            codes
                .get(n)
                .copied()
                .ok_or_else(|| HnnError::Config(format!("series `{n}` has no transform code")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dates = Vec::new();
    let mut cells = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        dates.push(parse_date(&rec[0])?);
        for v in rec.iter().skip(1) {
            cells.push(parse_cell(v)?);
        }
    }
    let values = Array2::from_shape_vec((dates.len(), names.len()), cells)
        .map_err(|e| HnnError::Shape(e.to_string()))?;
    TimeSeriesPanel::new(dates, names, series_codes, values)
}

pub fn write_panel(panel: &TimeSeriesPanel, csv_path: &Path, codes_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(csv_path)?;
    let mut header = vec!["date".to_string()];
    header.extend(panel.names.iter().cloned());
    w.write_record(&header)?;
    for (i, d) in panel.dates.iter().enumerate() {
        let mut rec = vec![d.to_string()];
        rec.extend(panel.values.row(i).iter().enumerate().map(|(j, v)| {
            if panel.missing[[i, j]] {
                String::new()
            } else {
                v.to_string()
            }
        }));
        w.write_record(&rec)?;
    }
    w.flush()?;
    let codes: String = panel
        .names
        .iter()
        .zip(&panel.codes)
        .map(|(n, c)| format!("{n},{c}\n"))
        .collect();
    std::fs::write(codes_path, codes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_with_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("p.csv");
        let codes = dir.path().join("codes.txt");
        std::fs::write(&csv, "date,a,b\n2000-01-01,1.5,\n2000-04-01,2.5,3\n").unwrap();
        std::fs::write(&codes, "# comment\na,level\nb,5\n").unwrap();
        let p = read_panel(&csv, &codes).unwrap();
        assert_eq!(p.codes, vec![TransformCode::Level, TransformCode::LogDiff]);
        assert!(p.missing[[0, 1]] && !p.missing[[1, 1]]);

        let csv2 = dir.path().join("q.csv");
        let codes2 = dir.path().join("codes2.txt");
        write_panel(&p, &csv2, &codes2).unwrap();
        let q = read_panel(&csv2, &codes2).unwrap();
        assert_eq!(q.dates, p.dates);
        assert_eq!(q.missing, p.missing);
        assert_eq!(q.values[[1, 1]], 3.0);
    }

    #[test]
    fn unknown_code_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let codes = dir.path().join("codes.txt");
        std::fs::write(&codes, "a,cubic\n").unwrap();
        assert!(read_transform_codes(&codes).is_err());
    }

    #[test]
    fn series_without_code_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("p.csv");
        let codes = dir.path().join("codes.txt");
        std::fs::write(&csv, "date,a,b\n2000-01-01,1,2\n").unwrap();
        std::fs::write(&codes, "a,level\n").unwrap();
        assert!(matches!(read_panel(&csv, &codes), Err(HnnError::Config(_))));
    }
}
