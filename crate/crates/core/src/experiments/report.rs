//! Report emission and matrix diagnostics.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentError, Summary, TrialRecord};
use crate::bounds::ASYMPTOTIC_MIN_M;
use crate::numerics::{coherence_criterion_value, Dictionary};

/// Bumped whenever a CSV column or summary field changes.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDiagnostics {
    pub n: usize,
    pub m: usize,
    pub normalized: bool,
    pub max_column_norm_deviation: f64,
    pub coherence: Option<f64>,
    pub spectral_norm: f64,
    #[serde(rename = "A0")]
    pub a0: f64,
    /// `μ ≤ A₀ / ln m`; undefined when the columns are not normalized.
    pub coherence_criterion: Option<bool>,
    /// `μ ln m`, the smallest `A₀` meeting the criterion.
    pub a0_needed: Option<f64>,
    pub small_m: bool,
}

pub fn analyze(a: &Dictionary, a0: f64) -> Result<MatrixDiagnostics, ExperimentError> {
    let normalized = a.is_normalized();
    let deviation = a.col_norms().iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
    let mf = a.m() as f64;
    let coherence = if normalized { Some(a.coherence()?) } else { None };
    Ok(MatrixDiagnostics {
        n: a.n(),
        m: a.m(),
        normalized,
        max_column_norm_deviation: deviation,
        coherence,
        spectral_norm: a.spectral_norm()?,
        a0,
        coherence_criterion: coherence.map(|mu| coherence_criterion_value(mu, mf, a0)),
        a0_needed: coherence.map(|mu| mu * mf.ln()),
        small_m: a.m() < ASYMPTOTIC_MIN_M,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Trial records as CSV bytes. Floats use the shortest round-trip decimal and
/// undefined values are empty cells, so equal records give equal bytes.
pub fn trials_csv(records: &[TrialRecord]) -> Result<Vec<u8>, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| ExperimentError::Io {
        path: PathBuf::from("<memory>"),
        source: e.into_error(),
    })
}

/// Writes `trials.csv` and `summary.json` under `dir`, creating it if needed.
/// Returns the two paths.
pub fn write_outputs(
    dir: &Path,
    summary: &Summary,
    records: &[TrialRecord],
) -> Result<(PathBuf, PathBuf), ExperimentError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let csv_path = dir.join("trials.csv");
    fs::write(&csv_path, trials_csv(records)?).map_err(io_err(&csv_path))?;
    let json_path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary)?;
    text.push('\n');
    fs::write(&json_path, text).map_err(io_err(&json_path))?;
    Ok((csv_path, json_path))
}


#[cfg(test)]
mod tests {
    use super::super::{build_matrix, run_experiment, ExperimentConfig, MatrixKind};
    use super::*;

    #[test]
    fn analyze_identity_dct() {
        let a = build_matrix(MatrixKind::IdentityDct, 32, 64, 0).unwrap();
        let d = analyze(&a, 1.0 / 240.0).unwrap();
        assert!(d.normalized);
        assert!((d.coherence.unwrap() - 0.25 * (std::f64::consts::PI / 64.0).cos()).abs() < 1e-12);
        assert_eq!(d.coherence_criterion, Some(false));
        assert!(!d.small_m);
    }

    #[test]
    fn csv_is_deterministic_and_has_header() {
        let cfg = ExperimentConfig::builtin(MatrixKind::IdentityDct, 16, 32, 2, 0.05, 5);
        let a = cfg.matrix.load().unwrap();
        let (_, r1) = run_experiment(&a, &cfg, Some(2)).unwrap();
        let (_, r2) = run_experiment(&a, &cfg, Some(3)).unwrap();
        let b1 = trials_csv(&r1).unwrap();
        assert_eq!(b1, trials_csv(&r2).unwrap());
        let text = String::from_utf8(b1).unwrap();
        assert!(text.starts_with("trial_index,seed,p,support,"));
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn write_outputs_creates_files() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::builtin(MatrixKind::IdentityDct, 16, 32, 2, 0.05, 3);
        let a = cfg.matrix.load().unwrap();
        let (s, r) = run_experiment(&a, &cfg, None).unwrap();
        let out = dir.path().join("nested");
        let (c, j) = write_outputs(&out, &s, &r).unwrap();
        assert!(c.exists());
        let back: Summary = serde_json::from_str(&fs::read_to_string(j).unwrap()).unwrap();
        assert_eq!(back, s);
    }
}
