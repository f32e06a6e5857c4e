//! Input files: JSON documents carrying a covariance matrix, a mode
//! partition, optional measurement constraints, or a witness matrix.

use serde::Deserialize;
use thiserror::Error;

use cvwit_core::symplectic::{CovarianceMatrix, Mat, ModePartition, SymplecticError};
use cvwit_core::witnessprob::{MeasurementConstraint, WitnessError};

/// Input problems: each variant prints with a stable diagnostic identifier
/// so scripts can tell the failure classes apart. All of them map to exit
/// code 2.
#[derive(Debug, Error)]
pub enum InputError {
    #[error("IO_ERROR: cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("MALFORMED_INPUT: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("MALFORMED_INPUT: {0}")]
    BadMatrix(String),
    #[error("ASYMMETRIC_MATRIX: {0}")]
    Asymmetric(SymplecticError),
    #[error("PARTITION_MISMATCH: {0}")]
    PartitionMismatch(SymplecticError),
    #[error("BAD_COVARIANCE: {0}")]
    BadCovariance(SymplecticError),
    #[error("BAD_CONSTRAINT: {0}")]
    BadConstraint(WitnessError),
    #[error("BAD_PARTITION: {0}")]
    BadPartition(String),
}

#[derive(Deserialize)]
struct StateFile {
    modes: Vec<usize>,
    gamma: Vec<Vec<f64>>,
    #[serde(default)]
    constraints: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
struct WitnessFile {
    z: Vec<Vec<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Mat, InputError> {
    let n = rows.len();
    if n == 0 {
        return Err(InputError::BadMatrix(format!("{what} is empty")));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(InputError::BadMatrix(format!(
                "{what} row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        if let Some(v) = row.iter().find(|v| !v.is_finite()) {
            return Err(InputError::BadMatrix(format!("{what} row {i} contains {v}")));
        }
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

fn read(path: &str) -> Result<Vec<u8>, InputError> {
    std::fs::read(path).map_err(|source| InputError::Io { path: path.into(), source })
}

#[derive(Debug)]
pub struct ParsedInput {
    pub gamma: CovarianceMatrix,
    pub partition: ModePartition,
    pub constraints: Vec<MeasurementConstraint>,
    /// Raw bytes of the file, for the report digest.
    pub raw: Vec<u8>,
}

/// Reads and validates a state file. `partition_override` replaces the
/// file's `modes` field when given (the `--partition` flag).
pub fn parse_input(
    path: &str,
    partition_override: Option<&[usize]>,
) -> Result<ParsedInput, InputError> {
    let raw = read(path)?;
    let file: StateFile = serde_json::from_slice(&raw)?;
    let gamma =
        CovarianceMatrix::new(matrix_from_rows(&file.gamma, "gamma")?).map_err(|e| match e {
            SymplecticError::NotSymmetric { .. } => InputError::Asymmetric(e),
            other => InputError::BadCovariance(other),
        })?;
    let sizes = partition_override.map(<[usize]>::to_vec).unwrap_or(file.modes);
    let partition =
        ModePartition::new(sizes).map_err(|e| InputError::BadPartition(e.to_string()))?;
    partition.check_against(&gamma).map_err(InputError::PartitionMismatch)?;
    let mut constraints = Vec::with_capacity(file.constraints.len());
    for (i, rows) in file.constraints.iter().enumerate() {
        let m = matrix_from_rows(rows, &format!("constraint {i}"))?;
        constraints.push(MeasurementConstraint::new(m).map_err(InputError::BadConstraint)?);
    }
    Ok(ParsedInput { gamma, partition, constraints, raw })
}

/// Reads a witness file: `{"z": [[...]]}` with a symmetric matrix.
pub fn parse_witness(path: &str) -> Result<(Mat, Vec<u8>), InputError> {
    let raw = read(path)?;
    let file: WitnessFile = serde_json::from_slice(&raw)?;
    let z = matrix_from_rows(&file.z, "z")?;
    let dev = (&z - z.transpose()).iter().fold(0.0f64, |a, &v| a.max(v.abs()));
    if dev > 1e-10 {
        return Err(InputError::Asymmetric(SymplecticError::NotSymmetric { deviation: dev }));
    }
    Ok((z, raw))
}

/// Parses the `--partition` flag: comma-separated party sizes.
pub fn parse_partition_flag(text: &str) -> Result<Vec<usize>, InputError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| InputError::BadPartition(format!("not a party size: {s:?}")))
        })
        .collect()
}
