//! Interpolating reduced-order model with a per-site smooth/oscillatory split.
//!
//! For a query parameter `s` the first `R(s)` terms of the expansion
//! `F = Σ_k σ_k u_k v_kᵀ` are evaluated with interpolated right singular
//! vectors and form the mean; the remaining terms are treated as zero-mean,
//! unit-variance, uncorrelated coefficients and contribute only variance:
//!
//! ```text
//! mean[i]     = Σ_{k ≤ R} σ_k U[i,k] ṽ_k(s)
//! var[i]      = Σ_{k > R} σ_k² U[i,k]²
//! cov[i, j]   = Σ_{k > R} σ_k² U[i,k] U[j,k]
//! ```
//!
//! `R(s)` is the largest `r` whose variation metric
//! `τ(r, s) = Σ_{k ≤ r} |V[j+1,k] − V[j,k]| / Δs` stays below a threshold `τ̄`.

mod calibrate;
mod surface;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, RomError};
use crate::interp::{self, InterpolantKind, Pchip};
use crate::store::format::{read_json, write_json};
use crate::store::{decode_chunk, encode_chunk, dot, ColumnFile, MatrixChunk, RowVector};
use crate::tsqr::SvdFactors;

pub use calibrate::{calibrate, calibrate_with_candidates, CalibrationReport, SELECTION_TOLERANCE};
pub use surface::{response_surface, ResponseSurface};

/// Relative tolerance on the spacing of a uniform parameter grid.
const UNIFORM_TOL: f64 = 1e-12;

/// Spacing `Δs = (s_N − s_1)/(N − 1)` of a uniform grid.
pub fn uniform_spacing(grid: &[f64]) -> Result<f64> {
    if grid.len() < 2 {
        return Err(RomError::InvalidArgument("grid needs at least two nodes".into()));
    }
    let n = grid.len();
    let ds = (grid[n - 1] - grid[0]) / (n - 1) as f64;
    if !(ds > 0.0) {
        return Err(RomError::NonUniformGrid("grid is not increasing".into()));
    }
    for (j, w) in grid.windows(2).enumerate() {
        let dev = ((w[1] - w[0]) - ds).abs();
        if dev > UNIFORM_TOL * ds {
            return Err(RomError::NonUniformGrid(format!(
                "interval {j} has width {} against mean spacing {ds}",
                w[1] - w[0]
            )));
        }
    }
    Ok(ds)
}

/// `ṽ_k(s)`, with `k` a zero-based column index.
pub fn interpolate_v(factors: &SvdFactors, k: usize, s: f64, kind: InterpolantKind) -> Result<f64> {
    let grid = factors.parameter_grid();
    interp::check_domain(grid, s)?;
    if k >= factors.n() {
        return Err(RomError::InvalidArgument(format!(
            "column {k} out of range for {} singular vectors",
            factors.n()
        )));
    }
    let column = factors.v().column(k);
    Ok(match kind {
        InterpolantKind::Linear => interp::linear(grid, &column, s),
        InterpolantKind::Pchip => Pchip::new(grid, &column).eval(s),
    })
}

fn interpolate_all(factors: &SvdFactors, s: f64, kind: InterpolantKind, count: usize) -> Result<Vec<f64>> {
    (0..count).map(|k| interpolate_v(factors, k, s, kind)).collect()
}

/// `τ(r, s)` for every `r = 1..=N`, as a cumulative sum (so it is
/// nondecreasing in `r` exactly).
pub fn variation_profile(factors: &SvdFactors, s: f64) -> Result<Vec<f64>> {
    let grid = factors.parameter_grid();
    let ds = uniform_spacing(grid)?;
    interp::check_domain(grid, s)?;
    let j = interp::bracket(grid, s);
    let v = factors.v();
    let mut acc = 0.0;
    Ok((0..factors.n())
        .map(|k| {
            acc += ((v[(j + 1, k)] - v[(j, k)]) / ds).abs();
            acc
        })
        .collect())
}

/// `τ(r, s)` for `1 ≤ r ≤ N`.
pub fn variation_metric(factors: &SvdFactors, r: usize, s: f64) -> Result<f64> {
    if r == 0 || r > factors.n() {
        return Err(RomError::InvalidArgument(format!(
            "r must lie in 1..={}, got {r}",
            factors.n()
        )));
    }
    Ok(variation_profile(factors, s)?[r - 1])
}

/// Largest `r` with `τ(r, s) ≤ τ̄`, or 0 when even `τ(1, s)` exceeds it.
pub fn choose_split(factors: &SvdFactors, s: f64, tau_bar: f64) -> Result<usize> {
    if !(tau_bar >= 0.0) {
        return Err(RomError::InvalidArgument(format!(
            "threshold must be nonnegative, got {tau_bar}"
        )));
    }
    let profile = variation_profile(factors, s)?;
    Ok(split_from_profile(&profile, tau_bar))
}

pub(crate) fn split_from_profile(profile: &[f64], tau_bar: f64) -> usize {
    profile
        .iter()
        .enumerate()
        .filter(|(_, &t)| t <= tau_bar)
        .map(|(r, _)| r + 1)
        .max()
        .unwrap_or(0)
}

/// `‖truth − mean‖₂ / ‖truth‖₂` over matching rows.
pub fn relative_error(mean: &RowVector, truth: &ColumnFile) -> Result<f64> {
    if mean.row_ids != truth.row_ids {
        return Err(RomError::MismatchedRows(format!(
            "prediction has {} rows, truth s={} has {}",
            mean.len(),
            truth.parameter_value,
            truth.len()
        )));
    }
    let (num, den) = mean
        .values
        .iter()
        .zip(&truth.values)
        .fold((0.0, 0.0), |(n, d), (m, t)| (n + (t - m) * (t - m), d + t * t));
    if den == 0.0 {
        return Err(RomError::ZeroTruth);
    }
    Ok((num / den).sqrt())
}

/// ROM prediction at one parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub s: f64,
    pub split_r: usize,
    pub tau_bar: f64,
    pub mean: RowVector,
    pub variance: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PredictionSidecar {
    s: f64,
    split_r: usize,
    tau_bar: f64,
}

impl Prediction {
    pub fn row_ids(&self) -> &[u64] {
        &self.mean.row_ids
    }

    /// Two-column chunk (mean, variance) plus a `.json` sidecar.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let n = self.mean.len();
        let data: Vec<f64> = self
            .mean
            .values
            .iter()
            .zip(&self.variance)
            .flat_map(|(m, v)| [*m, *v])
            .collect();
        let chunk = MatrixChunk::new(
            self.mean.row_ids.clone(),
            DenseMatrix::from_row_major(n, 2, data),
        )?;
        std::fs::write(path, encode_chunk(&chunk)).map_err(|e| RomError::io(path, e))?;
        write_json(
            &PredictionSidecar {
                s: self.s,
                split_r: self.split_r,
                tau_bar: self.tau_bar,
            },
            &path.with_extension("json"),
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| RomError::io(path, e))?;
        let chunk = decode_chunk(&bytes)?;
        if chunk.n_cols() != 2 {
            return Err(RomError::CorruptHeader(format!(
                "prediction file has {} columns, expected 2",
                chunk.n_cols()
            )));
        }
        let meta: PredictionSidecar = read_json(&path.with_extension("json"))?;
        let (row_ids, rows) = chunk.into_parts();
        Ok(Prediction {
            s: meta.s,
            split_r: meta.split_r,
            tau_bar: meta.tau_bar,
            mean: RowVector {
                row_ids,
                values: rows.column(0),
            },
            variance: rows.column(1),
        })
    }
}

/// Factors plus interpolant choice and (once calibrated) the threshold `τ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct RomModel {
    factors: SvdFactors,
    kind: InterpolantKind,
    tau_bar: Option<f64>,
    spacing: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ModelFile {
    factors: String,
    interpolant: InterpolantKind,
    tau_bar: Option<f64>,
}

impl RomModel {
    /// Rejects non-uniform parameter grids.
    pub fn new(factors: SvdFactors, kind: InterpolantKind) -> Result<Self> {
        let spacing = uniform_spacing(factors.parameter_grid())?;
        Ok(RomModel {
            factors,
            kind,
            tau_bar: None,
            spacing,
        })
    }

    pub fn with_tau_bar(mut self, tau_bar: f64) -> Result<Self> {
        self.set_tau_bar(tau_bar)?;
        Ok(self)
    }

    pub fn set_tau_bar(&mut self, tau_bar: f64) -> Result<()> {
        if !(tau_bar >= 0.0) {
            return Err(RomError::InvalidArgument(format!(
                "threshold must be nonnegative, got {tau_bar}"
            )));
        }
        self.tau_bar = Some(tau_bar);
        Ok(())
    }

    pub fn factors(&self) -> &SvdFactors {
        &self.factors
    }

    pub fn interpolant(&self) -> InterpolantKind {
        self.kind
    }

    pub fn tau_bar(&self) -> Option<f64> {
        self.tau_bar
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn parameter_grid(&self) -> &[f64] {
        self.factors.parameter_grid()
    }

    fn calibrated(&self) -> Result<f64> {
        self.tau_bar.ok_or(RomError::Uncalibrated)
    }

    pub fn split(&self, s: f64) -> Result<usize> {
        choose_split(&self.factors, s, self.calibrated()?)
    }

    /// `(σ_1 ṽ_1(s), …, σ_R ṽ_R(s))`.
    pub fn coefficients(&self, s: f64, split_r: usize) -> Result<Vec<f64>> {
        let v = interpolate_all(&self.factors, s, self.kind, split_r)?;
        Ok(v.iter().zip(self.factors.sigma()).map(|(v, s)| s * v).collect())
    }

    /// Mean field for an explicit split `R`, computed as a chunked mat-vec
    /// over the first `R` columns of `U`.
    pub fn mean_with_split(&self, s: f64, split_r: usize) -> Result<RowVector> {
        if split_r > self.factors.n() {
            return Err(RomError::InvalidArgument(format!(
                "split {split_r} exceeds {}",
                self.factors.n()
            )));
        }
        let coeffs = self.coefficients(s, split_r)?;
        self.factors.u().matvec(&coeffs, 0..split_r)
    }

    /// Per-row variance for an explicit split `R`.
    pub fn variance_with_split(&self, split_r: usize) -> Vec<f64> {
        let sigma = self.factors.sigma();
        self.factors.u().map_rows(|row| tail_variance(row, sigma, split_r))
    }

    /// Prediction with an explicit split, bypassing `τ̄`.
    pub fn predict_with_split(&self, s: f64, split_r: usize) -> Result<Prediction> {
        Ok(Prediction {
            s,
            split_r,
            tau_bar: self.tau_bar.unwrap_or(f64::NAN),
            mean: self.mean_with_split(s, split_r)?,
            variance: self.variance_with_split(split_r),
        })
    }

    pub fn predict(&self, s: f64) -> Result<Prediction> {
        let tau_bar = self.calibrated()?;
        let split_r = choose_split(&self.factors, s, tau_bar)?;
        let mut p = self.predict_with_split(s, split_r)?;
        p.tau_bar = tau_bar;
        Ok(p)
    }

    /// Predictions for many sites in a single pass over the `U` chunks.
    pub fn predict_batch(&self, sites: &[f64]) -> Result<Vec<Prediction>> {
        let tau_bar = self.calibrated()?;
        let plans: Vec<(usize, Vec<f64>)> = sites
            .iter()
            .map(|&s| {
                let r = choose_split(&self.factors, s, tau_bar)?;
                Ok((r, self.coefficients(s, r)?))
            })
            .collect::<Result<_>>()?;
        let sigma = self.factors.sigma();
        let per_row: Vec<Vec<(f64, f64)>> = self.factors.u().map_rows(|row| {
            plans
                .iter()
                .map(|(r, c)| (dot(&row[..*r], c), tail_variance(row, sigma, *r)))
                .collect()
        });
        let row_ids = self.factors.u().row_ids();
        Ok(sites
            .iter()
            .zip(&plans)
            .enumerate()
            .map(|(idx, (&s, (r, _)))| Prediction {
                s,
                split_r: *r,
                tau_bar,
                mean: RowVector {
                    row_ids: row_ids.clone(),
                    values: per_row.iter().map(|p| p[idx].0).collect(),
                },
                variance: per_row.iter().map(|p| p[idx].1).collect(),
            })
            .collect())
    }

    /// `Σ_{k > R} σ_k² U[i,k] U[j,k]` for rows with ids `row_i`, `row_j`, at
    /// the calibrated split for `s`.
    pub fn covariance_entry(&self, s: f64, row_i: u64, row_j: u64) -> Result<f64> {
        self.covariance_with_split(self.split(s)?, row_i, row_j)
    }

    pub fn covariance_with_split(&self, split_r: usize, row_i: u64, row_j: u64) -> Result<f64> {
        let u = self.factors.u();
        let lookup = |id: u64| {
            u.chunks()
                .iter()
                .find_map(|c| c.row_ids().binary_search(&id).ok().map(|i| c.rows().row(i)))
                .ok_or_else(|| RomError::MismatchedRows(format!("row id {id} not present")))
        };
        let (a, b) = (lookup(row_i)?, lookup(row_j)?);
        let sigma = self.factors.sigma();
        let mut acc = 0.0;
        for k in (split_r.min(sigma.len())..sigma.len()).rev() {
            acc += sigma[k] * sigma[k] * (a[k] * b[k]);
        }
        Ok(acc)
    }

    /// Writes `model.json` next to an existing `factors.json`.
    pub fn write(&self, path: impl AsRef<Path>, factors_file: &str) -> Result<()> {
        write_json(
            &ModelFile {
                factors: factors_file.to_string(),
                interpolant: self.kind,
                tau_bar: self.tau_bar,
            },
            path.as_ref(),
        )
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file: ModelFile = read_json(path)?;
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let factors = SvdFactors::read(dir.join(&file.factors))?;
        let mut model = RomModel::new(factors, file.interpolant)?;
        if let Some(t) = file.tau_bar {
            model.set_tau_bar(t)?;
        }
        Ok(model)
    }

    /// Relative errors of the mean against each truth column, computed in
    /// parallel over sites.
    pub fn site_errors(&self, truths: &[ColumnFile]) -> Result<Vec<f64>> {
        truths
            .par_iter()
            .map(|t| relative_error(&self.predict(t.parameter_value)?.mean, t))
            .collect()
    }
}

/// Summed from the last term backwards so that dropping a leading term can
/// only lower the value.
fn tail_variance(row: &[f64], sigma: &[f64], split_r: usize) -> f64 {
    let mut acc = 0.0;
    for k in (split_r..sigma.len()).rev() {
        acc += sigma[k] * sigma[k] * (row[k] * row[k]);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ChunkedMatrix;

    fn factors_with_v(v: DenseMatrix, grid: Vec<f64>) -> SvdFactors {
        let n = v.cols();
        let u = ChunkedMatrix::from_dense(
            &(0..n as u64).collect::<Vec<_>>(),
            &DenseMatrix::identity(n),
            2,
        )
        .unwrap();
        let sigma = (0..n).map(|k| (n - k) as f64).collect();
        SvdFactors::new(u, sigma, v, grid).unwrap()
    }

    #[test]
    fn hand_variation_metric() {
        // rows j, j+1 = (0.1, 0.3), (0.2, 0.1) on a grid with spacing 0.5.
        let v = DenseMatrix::from_rows(&[vec![0.1, 0.3], vec![0.2, 0.1]]);
        let f = factors_with_v(v, vec![0.0, 0.5]);
        let tau = variation_metric(&f, 2, 0.25).unwrap();
        assert!((tau - 0.6).abs() < 1e-15);
        assert!((variation_metric(&f, 1, 0.5).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn constant_column_has_zero_variation() {
        let c = 1.0 / 3f64.sqrt();
        let v = DenseMatrix::from_rows(&[vec![c, 0.5, 0.1], vec![c, -0.2, 0.3], vec![c, 0.1, 0.7]]);
        let f = factors_with_v(v, vec![0.0, 1.0, 2.0]);
        assert_eq!(variation_metric(&f, 1, 1.5).unwrap(), 0.0);
    }

    #[test]
    fn split_extremes() {
        let v = DenseMatrix::from_rows(&[vec![0.1, 0.3], vec![0.2, 0.1]]);
        let f = factors_with_v(v, vec![0.0, 0.5]);
        assert_eq!(choose_split(&f, 0.3, 10.0).unwrap(), 2);
        assert_eq!(choose_split(&f, 0.3, 0.0).unwrap(), 0);
        assert_eq!(choose_split(&f, 0.3, 0.2).unwrap(), 1);
        assert!(choose_split(&f, 0.3, -1.0).is_err());
        assert!(matches!(
            choose_split(&f, 0.6, 1.0),
            Err(RomError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn interpolation_refuses_extrapolation() {
        let v = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let f = factors_with_v(v, vec![0.0, 1.0]);
        assert_eq!(interpolate_v(&f, 0, 0.5, InterpolantKind::Linear).unwrap(), 0.5);
        assert!(matches!(
            interpolate_v(&f, 0, 1.5, InterpolantKind::Linear),
            Err(RomError::OutOfDomain { .. })
        ));
    }

    #[test]
    fn relative_error_cases() {
        let truth = ColumnFile::new(0.5, vec![0, 1], vec![3.0, 4.0]).unwrap();
        let mean = |v: Vec<f64>| RowVector {
            row_ids: vec![0, 1],
            values: v,
        };
        assert_eq!(relative_error(&mean(vec![3.0, 4.0]), &truth).unwrap(), 0.0);
        assert_eq!(relative_error(&mean(vec![0.0, 0.0]), &truth).unwrap(), 1.0);
        assert!((relative_error(&mean(vec![3.0, 0.0]), &truth).unwrap() - 0.8).abs() < 1e-15);
        let zero = ColumnFile::new(0.5, vec![0, 1], vec![0.0, 0.0]).unwrap();
        assert!(matches!(relative_error(&mean(vec![1.0, 0.0]), &zero), Err(RomError::ZeroTruth)));
        let other = ColumnFile::new(0.5, vec![0, 2], vec![1.0, 1.0]).unwrap();
        assert!(matches!(
            relative_error(&mean(vec![1.0, 0.0]), &other),
            Err(RomError::MismatchedRows(_))
        ));
    }

    #[test]
    fn non_uniform_grid_rejected() {
        let v = DenseMatrix::identity(3);
        let f = factors_with_v(v, vec![0.0, 1.0, 3.0]);
        assert!(matches!(
            RomModel::new(f, InterpolantKind::Linear),
            Err(RomError::NonUniformGrid(_))
        ));
    }

    #[test]
    fn uncalibrated_predict_fails() {
        let f = factors_with_v(DenseMatrix::identity(2), vec![0.0, 1.0]);
        let model = RomModel::new(f, InterpolantKind::Linear).unwrap();
        assert!(matches!(model.predict(0.5), Err(RomError::Uncalibrated)));
        assert!(matches!(model.covariance_entry(0.5, 0, 1), Err(RomError::Uncalibrated)));
    }

    #[test]
    fn zero_split_gives_full_variance() {
        let f = factors_with_v(DenseMatrix::identity(2), vec![0.0, 1.0]);
        let model = RomModel::new(f, InterpolantKind::Linear).unwrap();
        let p = model.predict_with_split(0.25, 0).unwrap();
        assert_eq!(p.mean.values, vec![0.0, 0.0]);
        assert_eq!(p.variance, vec![4.0, 1.0]);
        let full = model.predict_with_split(0.25, 2).unwrap();
        assert_eq!(full.variance, vec![0.0, 0.0]);
    }
}
