//! Plain-text posterior checkpoints.
//!
//! Layout, one item per line, floats in shortest round-trip decimal form:
//!
//! ```text
//! streamgp-posterior 1
//! dim <2D>
//! prior_var <σ_θ²>
//! noise_var <σ_ε²>
//! mean <θ̂_1> ... <θ̂_2D>
//! cov <Σ_11> ... <Σ_1,2D>
//! ...                          (2D `cov` lines, row-major)
//! ```
//!
//! Writing then reading a posterior reproduces it bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use streamgp_core::{Matrix, Posterior};

use crate::error::{HarnessError, Result};

const MAGIC: &str = "streamgp-posterior 1";

pub fn to_text(p: &Posterior) -> String {
    let n = p.feature_dim();
    let mut out = String::with_capacity(24 * n * (n + 1) + 64);
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dim {n}");
    let _ = writeln!(out, "prior_var {:?}", p.prior_var());
    let _ = writeln!(out, "noise_var {:?}", p.noise_var());
    write_row(&mut out, "mean", p.mean());
    for i in 0..n {
        write_row(&mut out, "cov", p.covariance().row(i));
    }
    out
}

fn write_row(out: &mut String, tag: &str, vals: &[f64]) {
    out.push_str(tag);
    for v in vals {
        let _ = write!(out, " {v:?}");
    }
    out.push('\n');
}

pub fn from_text(text: &str) -> Result<Posterior> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line: usize, msg: String| HarnessError::Checkpoint { line, msg };
    let mut next = |want: &str| -> Result<(usize, Vec<&str>)> {
        let (no, l) = lines.next().ok_or_else(|| err(0, format!("unexpected end of input, expected '{want}'")))?;
        let mut parts = l.split_whitespace();
        match parts.next() {
            Some(tag) if tag == want => Ok((no, parts.collect())),
            other => Err(err(no, format!("expected '{want}', found '{}'", other.unwrap_or("")))),
        }
    };
    let (no, rest) = next("streamgp-posterior")?;
    if rest != ["1"] {
        return Err(err(no, format!("unsupported version {:?}", rest.join(" "))));
    }
    let scalar = |no: usize, rest: &[&str]| -> Result<f64> {
        match rest {
            [v] => v.parse().map_err(|_| err(no, format!("bad number '{v}'"))),
            _ => Err(err(no, "expected one value".into())),
        }
    };
    let (no, rest) = next("dim")?;
    let n: usize = match rest.as_slice() {
        [v] => v.parse().map_err(|_| err(no, format!("bad dimension '{v}'")))?,
        _ => return Err(err(no, "expected one value".into())),
    };
    let (no, rest) = next("prior_var")?;
    let prior_var = scalar(no, &rest)?;
    let (no, rest) = next("noise_var")?;
    let noise_var = scalar(no, &rest)?;
    let floats = |no: usize, rest: &[&str]| -> Result<Vec<f64>> {
        if rest.len() != n {
            return Err(err(no, format!("expected {n} values, found {}", rest.len())));
        }
        rest.iter()
            .map(|v| v.parse().map_err(|_| err(no, format!("bad number '{v}'"))))
            .collect()
    };
    let (no, rest) = next("mean")?;
    let mean = floats(no, &rest)?;
    let mut cov = Vec::with_capacity(n * n);
    for _ in 0..n {
        let (no, rest) = next("cov")?;
        cov.extend(floats(no, &rest)?);
    }
    let covariance = Matrix::from_vec(n, n, cov)?;
    Ok(Posterior::from_parts(mean, covariance, prior_var, noise_var)?)
}

pub fn save(p: &Posterior, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(p)).map_err(|e| HarnessError::io(path, e))
}

pub fn load(path: &Path) -> Result<Posterior> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    from_text(&text)
}
