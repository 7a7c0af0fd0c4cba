//! CSV emission: UTF-8, LF line endings, '.' decimals, header always written.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Shortest round-trip form, empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    v.map(f).unwrap_or_default()
}

/// Shortest round-trip form; scientific notation outside `[1e-5, 1e15)` in magnitude.
pub fn f(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e15).contains(&a) {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub struct Table {
    header: &'static [&'static str],
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &'static [&'static str]) -> Self {
        Table { header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[Vec<String>] {
        &self.rows
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<PathBuf> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        std::fs::write(&path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub const PRICE_HEADER: &[&str] = &["model_id", "measure_rule", "status", "param", "price", "std_err", "paths", "seed"];
pub const ESSCHER_HEADER: &[&str] = &["model_id", "status", "theta", "residual", "alpha", "limit_derivative"];
pub const QOPT_HEADER: &[&str] = &["model_id", "q", "status", "beta", "residual", "i_q"];
pub const WIENER_HOPF_HEADER: &[&str] = &[
    "model_id",
    "measure_rule",
    "status",
    "param",
    "exp_rate",
    "sup_mean",
    "inf_mean",
    "product",
    "std_err",
    "paths",
    "seed",
];
pub const HYPOTHESES_HEADER: &[&str] = &["sequence", "condition", "control", "n", "value", "limit", "deviation", "error"];
pub const REGIMES_HEADER: &[&str] = &["sequence", "rule", "regime", "quantity", "at", "value", "note"];
pub const PRICES_HEADER: &[&str] =
    &["n", "price", "std_err", "gap_to_predicted_limit", "status", "param", "within_tolerance"];

#[cfg(test)]
mod tests {
    use super::f;

    #[test]
    fn formatting_round_trips() {
        for v in [0.0, -0.5, 0.38292492, 1.2e-31, -2.1747369918521673e-153, 3e20, f64::INFINITY] {
            assert_eq!(f(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(f(-2.5e-153), "-2.5e-153");
        assert_eq!(f(0.25), "0.25");
        assert_eq!(f(f64::INFINITY), "inf");
    }
}
