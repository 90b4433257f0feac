//! Deterministic artifact emission: fixed-precision number formatting and
//! atomic file writes with cleanup of partial output on failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use banditwin::{Error, Result};

/// Formats to 12 significant digits, choosing fixed or scientific notation
/// the way `%g` does and trimming trailing zeros, so CSV output is both
/// compact and byte-stable.
pub fn fmt_sig(x: f64) -> String {
    const SIG: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= SIG {
        let s = format!("{:.*e}", (SIG - 1) as usize, x);
        let (mantissa, exponent) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        format!("{mantissa}e{exponent}")
    } else {
        let decimals = (SIG - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    }
}

/// Builds a CSV from a header and row cells; rows must match the header
/// width.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        let mut first = true;
        for cell in row {
            if !first {
                out.push(',');
            }
            let _ = write!(out, "{cell}");
            first = false;
        }
        out.push('\n');
    }
    out
}

/// Output directory that writes each file via a temp-and-rename and, on
/// command failure, removes everything it wrote this invocation.
pub struct ArtifactDir {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl ArtifactDir {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)
            .map_err(|e| Error::contract(format!("cannot create {}: {e}", dir.display())))?;
        Ok(ArtifactDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let tmp = self.dir.join(format!(".{name}.tmp"));
        let target = self.dir.join(name);
        fs::write(&tmp, contents)
            .map_err(|e| Error::contract(format!("cannot write {}: {e}", tmp.display())))?;
        fs::rename(&tmp, &target).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            Error::contract(format!("cannot finalise {}: {e}", target.display()))
        })?;
        self.written.push(target);
        Ok(())
    }

    /// Removes every file written so far; used when a later step fails.
    pub fn discard(&mut self) {
        for path in self.written.drain(..) {
            let _ = fs::remove_file(path);
        }
    }

    pub fn written_names(&self) -> Vec<String> {
        self.written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect()
    }
}
