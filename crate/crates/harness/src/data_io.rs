//! CSV ingestion and export.
//!
//! Input files need a header row. Cells that are empty or spell `NA`/`NaN`
//! count as missing and drop their row; any other non-numeric cell in a
//! selected column is an error carrying the line number.

use std::path::Path;

use streamgp_core::data::{generate_heteroscedastic, generate_linear};
use streamgp_core::{Dataset, Matrix};

use crate::config::{DatasetConfig, DatasetKind, DEFAULT_SYNTHETIC_N};
use crate::error::{HarnessError, Result};

#[derive(Debug, Clone)]
pub struct CsvOptions<'a> {
    pub target: &'a str,
    /// `None` selects every column except the target.
    pub features: Option<&'a [String]>,
    pub max_rows: Option<usize>,
    pub subsample_seed: u64,
    pub delimiter: u8,
}

fn is_missing(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c.eq_ignore_ascii_case("na") || c.eq_ignore_ascii_case("nan")
}

pub fn load_csv(path: &Path, opts: &CsvOptions<'_>) -> Result<Dataset> {
    let csv_err = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(true)
        .from_reader(file);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    let find = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| HarnessError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let target_idx = find(opts.target)?;
    let feature_names: Vec<String> = match opts.features {
        Some(f) => f.to_vec(),
        None => header.iter().filter(|h| *h != opts.target).cloned().collect(),
    };
    if feature_names.is_empty() {
        return Err(HarnessError::Config("no feature columns selected".into()));
    }
    let feature_idx = feature_names.iter().map(|f| find(f)).collect::<Result<Vec<_>>>()?;

    let d = feature_idx.len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut row_buf = vec![0.0; d];
    for rec in rdr.records() {
        let rec = rec.map_err(csv_err)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let parse = |idx: usize, name: &str| -> Result<Option<f64>> {
            let cell = rec.get(idx).unwrap_or("");
            if is_missing(cell) {
                return Ok(None);
            }
            let v: f64 = cell.trim().parse().map_err(|_| HarnessError::Parse {
                path: path.to_path_buf(),
                row: line,
                column: name.to_string(),
                value: cell.to_string(),
            })?;
            Ok(v.is_finite().then_some(v))
        };
        let Some(y) = parse(target_idx, opts.target)? else {
            continue;
        };
        let mut complete = true;
        for (slot, (&idx, name)) in row_buf.iter_mut().zip(feature_idx.iter().zip(&feature_names)) {
            match parse(idx, name)? {
                Some(v) => *slot = v,
                None => complete = false,
            }
        }
        if complete {
            data.extend_from_slice(&row_buf);
            labels.push(y);
        }
    }
    let n = labels.len();
    let name = path.file_stem().map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    let ds = Dataset::new(name, feature_names, Matrix::from_vec(n, d, data)?, labels, opts.subsample_seed)?;
    match opts.max_rows {
        Some(m) => Ok(ds.subsample(m, opts.subsample_seed)?),
        None => Ok(ds),
    }
}

/// Writes features then the label column `y`.
pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    let wrap = |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut header = ds.feature_names.clone();
    header.push("y".into());
    w.write_record(&header).map_err(wrap)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.features.row(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.labels[i].to_string());
        w.write_record(&rec).map_err(wrap)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

/// Builds the dataset described by `cfg` for one replicate seed.
pub fn load_dataset(cfg: &DatasetConfig, seed: u64) -> Result<Dataset> {
    let n = cfg.n.unwrap_or(DEFAULT_SYNTHETIC_N);
    let ds = match cfg.kind {
        DatasetKind::SyntheticHetero => generate_heteroscedastic(n, seed)?,
        DatasetKind::SyntheticLinear => generate_linear(n, seed)?,
        DatasetKind::Csv => {
            let path = cfg
                .path
                .as_deref()
                .ok_or_else(|| HarnessError::Config("dataset.path is required for csv".into()))?;
            let target = cfg
                .target
                .as_deref()
                .ok_or_else(|| HarnessError::Config("dataset.target is required for csv".into()))?;
            let opts = CsvOptions {
                target,
                features: cfg.features.as_deref(),
                max_rows: cfg.max_rows,
                subsample_seed: cfg.subsample_seed.unwrap_or(seed),
                delimiter: cfg.delimiter.map_or(b',', |c| c as u8),
            };
            return load_csv(path, &opts);
        }
    };
    match cfg.max_rows {
        Some(m) => Ok(ds.subsample(m, cfg.subsample_seed.unwrap_or(seed))?),
        None => Ok(ds),
    }
}
