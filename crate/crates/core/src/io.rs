//! CSV output with a fixed float format (17 significant digits) so identical
//! runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        // avoid "-0" vs "0" differences
        return "0.0000000000000000e0".to_string();
    }
    format!("{x:.16e}")
}

/// Write a header and rows of floats.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    write_rows(fs::File::create(path)?, header, rows)
}

/// Header and rows of floats to any writer.
pub fn write_rows<W: Write>(out: W, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|&v| fmt_f64(v)))
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Two-column curve file.
pub fn write_curve(path: &Path, x_name: &str, y_name: &str, x: &[f64], y: &[f64]) -> Result<()> {
    let rows: Vec<Vec<f64>> = x.iter().zip(y).map(|(&a, &b)| vec![a, b]).collect();
    write_csv(path, &[x_name, y_name], &rows)
}

/// Read a comma-separated file with a header row into named float columns.
pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = r
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        for (c, f) in rec.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                Error::Invalid(format!(
                    "{}: row {} field {:?} is not a number",
                    path.display(),
                    n + 2,
                    f
                ))
            })?;
            cols[c].push(v);
        }
    }
    Ok((header, cols))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv: {e}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [1.0 / 3.0, -2.5e-13, 6.02214076e23, std::f64::consts::PI] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }
}
