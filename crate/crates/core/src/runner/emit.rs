use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;

/// `x` in plain decimal notation with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    let decimals = (11 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Column-ordered numeric table plus the metadata written beside it.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub metadata: serde_json::Value,
}

impl SweepOutput {
    pub fn new(header: &[&str], rows: Vec<Vec<f64>>, metadata: serde_json::Value) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows,
            metadata,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&v| format_sig12(v)).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Writes the CSV to `path` and the metadata to `<path>.meta.json`.
    pub fn emit(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        write_json(&meta_path(path), &self.metadata)
    }
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| crate::Error::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(format_sig12(0.0), "0");
        assert_eq!(format_sig12(-0.0), "0");
        assert_eq!(format_sig12(4.0), "4.00000000000");
        assert_eq!(format_sig12(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig12(123456.7890123456), "123456.789012");
        assert_eq!(format_sig12(9.99999999999951), "10.0000000000");
        assert_eq!(format_sig12(-2.5e-5), "-0.0000250000000000");
        assert_eq!(format_sig12(1.5e13), "15000000000000");
    }

    #[test]
    fn csv_layout() {
        let out = SweepOutput::new(&["T", "a"], vec![vec![1.0, 0.5], vec![2.0, 0.25]], serde_json::json!({}));
        assert_eq!(out.to_csv(), "T,a\n1.00000000000,0.500000000000\n2.00000000000,0.250000000000\n");
        assert!(out.to_csv().lines().all(|l| !l.ends_with(',')));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(meta_path(Path::new("/tmp/x.csv")), PathBuf::from("/tmp/x.csv.meta.json"));
    }
}
