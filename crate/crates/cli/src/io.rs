//! File loading and the exit-code policy.
//!
//! Exit codes: 0 ok, 2 unreadable/unparsable input, 3 metric-validation
//! failure, 4 normalization failure, 5 space mismatch (including measures
//! referencing unregistered points), 6 oracle mismatch, 1 anything else.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use maxplus_transport::measure::MeasureSpec;
use maxplus_transport::space::GroundSpace;
use maxplus_transport::{Error as CoreError, IdempotentMeasure, Normalization, TestFunction};

#[derive(Debug)]
pub enum CliError {
    Read(PathBuf, std::io::Error),
    Parse(PathBuf, serde_json::Error),
    Core(CoreError),
    OracleMismatch { solver: f64, oracle: f64 },
    EmissionInvalid(String),
    BadArgument(String),
    ValidationFailed,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Read(path, e) => write!(f, "cannot read {}: {e}", path.display()),
            CliError::Parse(path, e) => write!(f, "cannot parse {}: {e}", path.display()),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::OracleMismatch { solver, oracle } => write!(
                f,
                "solver disagrees with the exhaustive oracle: {solver} vs {oracle}"
            ),
            CliError::EmissionInvalid(what) => {
                write!(f, "refusing to emit an invalid artifact: {what}")
            }
            CliError::BadArgument(what) => write!(f, "{what}"),
            CliError::ValidationFailed => write!(f, "metric validation failed"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Read(..) | CliError::Parse(..) => 2,
            CliError::Core(e) => match e {
                CoreError::InvalidMetric(_)
                | CoreError::DuplicatePoint(_)
                | CoreError::EmptySpace
                | CoreError::MatrixShape { .. }
                | CoreError::DimensionMismatch { .. } => 3,
                CoreError::NotNormalized { .. }
                | CoreError::AllBottom
                | CoreError::EmptyMeasure
                | CoreError::InvalidWeight { .. } => 4,
                CoreError::SpaceMismatch
                | CoreError::MiddleMeasureMismatch
                | CoreError::UnknownPoint(_) => 5,
                _ => 1,
            },
            CliError::OracleMismatch { .. } | CliError::EmissionInvalid(_) => 6,
            CliError::ValidationFailed => 3,
            CliError::BadArgument(_) => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn read_to_string(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Read(path.to_owned(), e))
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Parse(path.to_owned(), e))
}

/// Raw shape of a space file; construction (and therefore metric
/// validation) happens separately so parse errors and validation failures
/// carry distinct exit codes.
#[derive(Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum SpaceFile {
    Matrix {
        points: Vec<String>,
        d: Vec<Vec<f64>>,
        #[serde(default)]
        diam: Option<f64>,
    },
    Euclidean {
        dim: usize,
        points: BTreeMap<String, Vec<f64>>,
        #[serde(default)]
        diam: Option<f64>,
    },
}

pub fn load_space(path: &Path) -> CliResult<Arc<GroundSpace>> {
    let raw: SpaceFile = parse(path, &read_to_string(path)?)?;
    let space = match raw {
        SpaceFile::Matrix { points, d, diam } => GroundSpace::matrix(points, d, diam)?,
        SpaceFile::Euclidean { dim, points, diam } => GroundSpace::euclidean(dim, points, diam)?,
    };
    Ok(Arc::new(space))
}

pub fn load_measure(
    path: &Path,
    space: &Arc<GroundSpace>,
    mode: Normalization,
) -> CliResult<IdempotentMeasure> {
    let spec: MeasureSpec = parse(path, &read_to_string(path)?)?;
    Ok(IdempotentMeasure::from_spec(&spec, space, mode)?)
}

pub fn load_measure_sequence(
    path: &Path,
    space: &Arc<GroundSpace>,
    mode: Normalization,
) -> CliResult<Vec<IdempotentMeasure>> {
    let specs: Vec<MeasureSpec> = parse(path, &read_to_string(path)?)?;
    specs
        .iter()
        .map(|spec| Ok(IdempotentMeasure::from_spec(spec, space, mode)?))
        .collect()
}

pub fn load_function(path: &Path) -> CliResult<TestFunction> {
    parse(path, &read_to_string(path)?)
}

pub fn load_point_map(path: &Path) -> CliResult<BTreeMap<String, String>> {
    parse(path, &read_to_string(path)?)
}

/// Loads every `.json` measure in a directory, sorted by file name, or the
/// single file if `path` is not a directory. Returns (label, measure).
pub fn load_measure_dir(
    path: &Path,
    space: &Arc<GroundSpace>,
    mode: Normalization,
) -> CliResult<Vec<(String, IdempotentMeasure)>> {
    let mut files: Vec<PathBuf> = if path.is_dir() {
        std::fs::read_dir(path)
            .map_err(|e| CliError::Read(path.to_owned(), e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect()
    } else {
        vec![path.to_owned()]
    };
    files.sort();
    files
        .into_iter()
        .map(|file| {
            let label = file
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| file.display().to_string());
            Ok((label, load_measure(&file, space, mode)?))
        })
        .collect()
}
