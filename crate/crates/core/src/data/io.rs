use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::Dataset;
use crate::error::{Error, Result};

/// Canonical column order: seven ingredients in kg/m³, age in days, then
/// compressive strength in MPa.
pub const CONCRETE_COLUMNS: [&str; 9] = [
    "Cement",
    "Blast Furnace Slag",
    "Fly Ash",
    "Water",
    "Superplasticizer",
    "Coarse Aggregate",
    "Fine Aggregate",
    "Age",
    "Strength",
];

pub const CONCRETE_ROWS: usize = 1030;

/// SHA-256 of `data/concrete_data.csv` as shipped in this repository.
pub const CONCRETE_SHA256: &str =
    "2f837fd24819ff9988e7eaffd8b2750c8ebc9aa98d6d2de99b8c0101726bd79a";

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let mut file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Reads a headered numeric CSV whose last column is the target.
///
/// Blank lines are skipped. Reported row numbers count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let ingest = |row: usize, column: usize, message: String| Error::Ingestion {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| ingest(0, 0, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: format!("need at least 2 columns, header has {}", header.len()),
        });
    }
    let width = header.len();

    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let row = r + 1;
        let record = record.map_err(|e| ingest(row, 0, e.to_string()))?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != width {
            return Err(ingest(
                row,
                record.len().min(width) + 1,
                format!("expected {width} columns, found {}", record.len()),
            ));
        }
        for (c, field) in record.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| ingest(row, c + 1, format!("not a number: {field:?}")))?;
            if !v.is_finite() {
                return Err(ingest(row, c + 1, format!("not finite: {field:?}")));
            }
            if c + 1 == width {
                targets.push(v);
            } else {
                features.push(v);
            }
        }
    }
    if targets.is_empty() {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    let target_name = header[width - 1].clone();
    let feature_names = header[..width - 1].to_vec();
    Dataset::new(features, width - 1, targets, feature_names, target_name)
}

/// Loads the concrete compressive strength table, checking its shape.
///
/// A checksum different from [`CONCRETE_SHA256`] is logged as a warning:
/// mirrors of the file differ in row order and formatting.
pub fn load_concrete(path: impl AsRef<Path>) -> Result<Dataset<f64>> {
    let path = path.as_ref();
    let data = load_csv(path)?;
    if data.n_cols() + 1 != CONCRETE_COLUMNS.len() {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: format!(
                "expected {} columns, found {}",
                CONCRETE_COLUMNS.len(),
                data.n_cols() + 1
            ),
        });
    }
    if data.n_rows() != CONCRETE_ROWS {
        return Err(Error::Dataset {
            path: path.to_path_buf(),
            message: format!("expected {CONCRETE_ROWS} rows, found {}", data.n_rows()),
        });
    }
    let digest = file_sha256(path)?;
    if digest != CONCRETE_SHA256 {
        log::warn!(
            "{}: sha256 {digest} differs from the pinned {CONCRETE_SHA256}",
            path.display()
        );
    }
    Ok(data)
}

/// Writes a dataset in the shape [`load_csv`] reads.
pub fn write_csv(data: &Dataset<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        let mut header = data.feature_names.clone();
        header.push(data.target_name.clone());
        writeln!(out, "{}", header.join(","))?;
        for i in 0..data.n_rows() {
            for v in data.row(i) {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", data.targets()[i])?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
