use std::fs;
use std::path::{Path, PathBuf};

use eyring_core::{Error, LogScaled, Result};
use serde::Serialize;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("cannot write {}: {e}", path.display()))
}

/// Output directory; files are written one at a time.
pub struct OutDir {
    pub root: PathBuf,
}

impl OutDir {
    pub fn create(root: PathBuf) -> Result<Self> {
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(OutDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let p = self.path(name);
        let mut w = csv::Writer::from_path(&p).map_err(|e| io_err(&p, e))?;
        w.write_record(header).map_err(|e| io_err(&p, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_err(&p, e))?;
        }
        w.flush().map_err(|e| io_err(&p, e))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let mut s = serde_json::to_string_pretty(value).map_err(|e| io_err(&p, e))?;
        s.push('\n');
        fs::write(&p, s).map_err(|e| io_err(&p, e))
    }

    pub fn text(&self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).map_err(|e| io_err(&p, e))
    }
}

/// Shortest round-trip decimal; `inf`/`-inf`/`nan` spelled out.
pub fn num(x: f64) -> String {
    if x == 0.0 || (x.is_finite() && (1e-4..1e6).contains(&x.abs())) {
        format!("{x}")
    } else if x.is_finite() {
        format!("{x:e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// log10|v|, sign, mantissa, exponent.
pub fn log_columns(v: &LogScaled) -> Vec<String> {
    let (s, m, e) = v.scientific();
    let l = if v.is_zero() { f64::NEG_INFINITY } else { v.log10_abs() };
    vec![num(l), s.to_string(), format!("{m:.12}"), e.to_string()]
}

pub const LOG_HEADER: [&str; 4] = ["lambda_log10", "sign", "mantissa", "exponent"];

/// Human-readable form of a LogScaled value.
pub fn sci(v: &LogScaled) -> String {
    let (s, m, e) = v.scientific();
    match s {
        0 => "0".into(),
        1 => format!("{m:.6}e{e}"),
        _ => format!("-{m:.6}e{e}"),
    }
}

pub fn point(x: &[f64]) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}
