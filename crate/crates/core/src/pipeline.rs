//! File-level orchestration: toy data generation, assembly, decomposition,
//! calibration, prediction and validation. Each step reads what the previous
//! one wrote under the configured output directory:
//!
//! ```text
//! <out>/training/col_NNNNN.{tsmx,json}   training columns
//! <out>/testing/col_NNNNN.{tsmx,json}    held-out columns
//! <out>/matrix/manifest.json             assembled snapshot matrix
//! <out>/factors/factors.json             U chunks, sigma, V
//! <out>/factors/model.json               interpolant + calibrated threshold
//! <out>/predictions/pred_NNNNN.{tsmx,json}
//! <out>/*.csv                            figure/table data
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::interp::{InterpolantKind, SurfaceKind};
use crate::rom::{calibrate, relative_error, CalibrationReport, Prediction, ResponseSurface, RomModel};
use crate::store::{
    read_column_file, read_manifest, write_column_file, write_manifest, ColumnFile, SnapshotMatrix,
    DEFAULT_CHUNK_ROWS,
};
use crate::toyprobs::{linspace, midpoints, ToyProblem, ToyProblemKind};
use crate::tsqr::{tssvd, SvdFactors};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub start: f64,
    pub end: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.count)
    }
}

/// Scalar quantities of interest computed from full fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QoiSpec {
    /// Inclusive row-id range the functionals average over; all rows if unset.
    pub rows: Option<(u64, u64)>,
    /// Level for the exceedance-fraction quantity.
    pub threshold: f64,
}

impl Default for QoiSpec {
    fn default() -> Self {
        QoiSpec {
            rows: None,
            threshold: 0.22,
        }
    }
}

impl QoiSpec {
    fn selected<'a>(&self, row_ids: &'a [u64], values: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        let rows = self.rows;
        row_ids
            .iter()
            .zip(values)
            .filter(move |(id, _)| rows.map_or(true, |(lo, hi)| (lo..=hi).contains(*id)))
            .map(|(_, v)| *v)
    }

    /// Mean of the field over the selected rows.
    pub fn mean_value(&self, row_ids: &[u64], values: &[f64]) -> f64 {
        let (sum, n) = self
            .selected(row_ids, values)
            .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
        sum / n.max(1) as f64
    }

    /// Fraction of selected rows whose value exceeds the threshold.
    pub fn exceed_fraction(&self, row_ids: &[u64], values: &[f64]) -> f64 {
        let (hits, n) = self
            .selected(row_ids, values)
            .fold((0usize, 0usize), |(h, n), v| (h + usize::from(v > self.threshold), n + 1));
        hits as f64 / n.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub problem: ToyProblemKind,
    pub m_points: usize,
    pub training: GridSpec,
    /// Explicit testing sites; midpoints of the training grid when unset.
    pub testing_sites: Option<Vec<f64>>,
    /// Sites for `predict`; the testing sites when unset.
    pub predict_sites: Option<Vec<f64>>,
    pub chunk_rows: usize,
    pub interp: InterpolantKind,
    pub n_candidates: usize,
    pub qoi: QoiSpec,
    pub out_dir: PathBuf,
    /// Worker count; 0 uses the rayon default.
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            problem: ToyProblemKind::VarcoefBvp,
            m_points: 1999,
            training: GridSpec {
                start: 0.1,
                end: 0.9,
                count: 11,
            },
            testing_sites: None,
            predict_sites: None,
            chunk_rows: DEFAULT_CHUNK_ROWS,
            interp: InterpolantKind::Linear,
            n_candidates: 20,
            qoi: QoiSpec::default(),
            out_dir: PathBuf::from("romkit-out"),
            threads: 0,
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        crate::store::format::read_json(path.as_ref())
    }

    pub fn training_sites(&self) -> Vec<f64> {
        self.training.values()
    }

    pub fn testing_sites(&self) -> Vec<f64> {
        self.testing_sites
            .clone()
            .unwrap_or_else(|| midpoints(&self.training_sites()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_rows == 0 {
            return Err(RomError::InvalidArgument("chunk_rows must be positive".into()));
        }
        let train = self.training_sites();
        if let Some(s) = self.testing_sites().into_iter().find(|s| train.contains(s)) {
            return Err(RomError::SiteCollision(s));
        }
        Ok(())
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn training_dir(&self) -> PathBuf {
        self.dir("training")
    }

    pub fn testing_dir(&self) -> PathBuf {
        self.dir("testing")
    }

    pub fn matrix_manifest(&self) -> PathBuf {
        self.dir("matrix").join("manifest.json")
    }

    pub fn factors_file(&self) -> PathBuf {
        self.dir("factors").join("factors.json")
    }

    pub fn model_file(&self) -> PathBuf {
        self.dir("factors").join("model.json")
    }

    pub fn predictions_dir(&self) -> PathBuf {
        self.dir("predictions")
    }

    /// Runs `f` on a pool with `threads` workers (or the global pool for 0).
    pub fn with_pool<T: Send>(&self, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
        if self.threads == 0 {
            return f();
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| RomError::InvalidArgument(format!("thread pool: {e}")))?
            .install(f)
    }
}

/// Fixed-width float formatting: 17 significant digits, round-trip exact.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| RomError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| RomError::io(path, e))
}

fn write_columns(dir: &Path, columns: &[ColumnFile]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| RomError::io(dir, e))?;
    columns
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let path = dir.join(format!("col_{i:05}.tsmx"));
            write_column_file(c, &path)?;
            Ok(path)
        })
        .collect()
}

fn chunk_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| RomError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "tsmx"))
        .collect();
    files.sort();
    Ok(files)
}

/// Reads every column file in `dir`, in file-name order.
pub fn read_columns(dir: &Path) -> Result<Vec<ColumnFile>> {
    chunk_files(dir)?.iter().map(read_column_file).collect()
}

/// Writes training and testing column files for the configured toy problem.
pub fn cmd_toygen(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let problem = ToyProblem::of_kind(config.problem);
    config.with_pool(|| {
        let training = problem.generate(config.m_points, &config.training_sites())?;
        let testing = problem.generate(config.m_points, &config.testing_sites())?;
        let mut written = write_columns(&config.training_dir(), &training)?;
        written.extend(write_columns(&config.testing_dir(), &testing)?);
        Ok(written)
    })
}

pub fn cmd_assemble(config: &PipelineConfig) -> Result<PathBuf> {
    config.with_pool(|| {
        let columns = read_columns(&config.training_dir())?;
        let matrix = SnapshotMatrix::assemble(&columns, config.chunk_rows)?;
        write_manifest(&matrix, config.dir("matrix"))
    })
}

/// `singular_values.csv` and `right_vectors.csv` (columns scaled by σ_k).
pub fn decomposition_csvs(factors: &SvdFactors) -> (String, String) {
    let sigma = factors.sigma();
    let mut sv = String::from("k,sigma,sigma_over_sigma1\n");
    for (k, s) in sigma.iter().enumerate() {
        let ratio = if sigma[0] > 0.0 { s / sigma[0] } else { 0.0 };
        let _ = writeln!(sv, "{},{},{}", k + 1, fmt_f64(*s), fmt_f64(ratio));
    }
    let mut rv = String::from("j,s");
    for k in 0..sigma.len() {
        let _ = write!(rv, ",sigma{0}_v{0}", k + 1);
    }
    rv.push('\n');
    let v = factors.v();
    for (j, s) in factors.parameter_grid().iter().enumerate() {
        let _ = write!(rv, "{},{}", j + 1, fmt_f64(*s));
        for (k, sk) in sigma.iter().enumerate() {
            let _ = write!(rv, ",{}", fmt_f64(sk * v[(j, k)]));
        }
        rv.push('\n');
    }
    (sv, rv)
}

pub fn cmd_decompose(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    config.with_pool(|| {
        let matrix = read_manifest(config.matrix_manifest())?;
        let matrix = if matrix.chunks().iter().any(|c| c.n_rows() > config.chunk_rows) {
            matrix.rechunk(config.chunk_rows)?
        } else {
            matrix
        };
        let factors = tssvd(&matrix)?;
        let manifest = factors.write(config.dir("factors"))?;
        let (sv, rv) = decomposition_csvs(&factors);
        let sv_path = config.dir("singular_values.csv");
        let rv_path = config.dir("right_vectors.csv");
        write_text(&sv_path, &sv)?;
        write_text(&rv_path, &rv)?;
        Ok(vec![manifest, sv_path, rv_path])
    })
}

/// Full error surface: `site_index,candidate_index,s,tau,error`.
pub fn calibration_csv(report: &CalibrationReport) -> String {
    let mut out = String::from("site_index,candidate_index,s,tau,error\n");
    for (l, s) in report.testing_sites.iter().enumerate() {
        for (m, tau) in report.candidate_thresholds.iter().enumerate() {
            let _ = writeln!(
                out,
                "{l},{m},{},{},{}",
                fmt_f64(*s),
                fmt_f64(*tau),
                fmt_f64(report.errors[l][m])
            );
        }
    }
    out
}

/// Per-site split and error at the chosen threshold: `s,tau_bar,R,error`.
pub fn split_table_csv(report: &CalibrationReport) -> String {
    let mut out = String::from("s,tau_bar,R,error\n");
    for ((s, r), e) in report
        .testing_sites
        .iter()
        .zip(report.chosen_splits())
        .zip(report.chosen_errors())
    {
        let _ = writeln!(out, "{},{},{r},{}", fmt_f64(*s), fmt_f64(report.chosen_tau_bar), fmt_f64(e));
    }
    out
}

pub fn cmd_calibrate(config: &PipelineConfig) -> Result<CalibrationReport> {
    config.with_pool(|| {
        let factors = SvdFactors::read(config.factors_file())?;
        let mut model = RomModel::new(factors, config.interp)?;
        let testing = read_columns(&config.testing_dir())?;
        let report = calibrate(&mut model, &testing, config.n_candidates)?;
        model.write(config.model_file(), "factors.json")?;
        write_text(&config.dir("calibration.csv"), &calibration_csv(&report))?;
        write_text(&config.dir("split_table.csv"), &split_table_csv(&report))?;
        Ok(report)
    })
}

pub fn cmd_predict(config: &PipelineConfig) -> Result<Vec<PathBuf>> {
    config.with_pool(|| {
        let model = RomModel::read(config.model_file())?;
        let sites = config
            .predict_sites
            .clone()
            .unwrap_or_else(|| config.testing_sites());
        let predictions = model.predict_batch(&sites)?;
        let dir = config.predictions_dir();
        fs::create_dir_all(&dir).map_err(|e| RomError::io(&dir, e))?;
        predictions
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let path = dir.join(format!("pred_{i:05}.tsmx"));
                p.write(&path)?;
                Ok(path)
            })
            .collect()
    })
}

/// One row of `validate.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationRow {
    pub s: f64,
    pub error: f64,
    pub qoi: &'static str,
    pub truth: f64,
    pub rom: f64,
    pub baseline_kind: SurfaceKind,
    pub baseline: f64,
}

impl ValidationRow {
    pub fn rom_abs_error(&self) -> f64 {
        (self.rom - self.truth).abs()
    }

    pub fn baseline_abs_error(&self) -> f64 {
        (self.baseline - self.truth).abs()
    }
}

fn surface_name(kind: SurfaceKind) -> &'static str {
    match kind {
        SurfaceKind::Linear => "linear",
        SurfaceKind::Nearest => "nearest",
        SurfaceKind::CubicSpline => "cubic_spline",
        SurfaceKind::Pchip => "pchip",
    }
}

/// Compares predictions with truth columns, field-wise and through two
/// scalar quantities of interest against response-surface baselines fitted
/// to the training columns: the row mean (cubic spline) and the exceedance
/// fraction (PCHIP).
pub fn validate_predictions(
    predictions: &[Prediction],
    truths: &[ColumnFile],
    training: &[ColumnFile],
    qoi: &QoiSpec,
) -> Result<Vec<ValidationRow>> {
    type Functional = fn(&QoiSpec, &[u64], &[f64]) -> f64;
    let functionals: [(&'static str, Functional, SurfaceKind); 2] = [
        ("mean", QoiSpec::mean_value, SurfaceKind::CubicSpline),
        ("exceed_fraction", QoiSpec::exceed_fraction, SurfaceKind::Pchip),
    ];
    let surfaces = functionals
        .iter()
        .map(|(_, f, kind)| {
            let sites: Vec<(f64, f64)> = training
                .iter()
                .map(|c| (c.parameter_value, f(qoi, &c.row_ids, &c.values)))
                .collect();
            ResponseSurface::fit(&sites, *kind)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows = Vec::new();
    for p in predictions {
        let truth = truths
            .iter()
            .find(|t| t.parameter_value == p.s)
            .ok_or_else(|| RomError::MismatchedRows(format!("no truth column for s={}", p.s)))?;
        let error = relative_error(&p.mean, truth)?;
        for ((name, f, kind), surface) in functionals.iter().zip(&surfaces) {
            rows.push(ValidationRow {
                s: p.s,
                error,
                qoi: name,
                truth: f(qoi, &truth.row_ids, &truth.values),
                rom: f(qoi, &p.mean.row_ids, &p.mean.values),
                baseline_kind: *kind,
                baseline: surface.eval(p.s)?,
            });
        }
    }
    Ok(rows)
}

pub fn validate_csv(rows: &[ValidationRow]) -> String {
    let mut out = String::from(
        "s,error,qoi,truth,rom,baseline_kind,baseline,rom_abs_error,baseline_abs_error\n",
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            fmt_f64(r.s),
            fmt_f64(r.error),
            r.qoi,
            fmt_f64(r.truth),
            fmt_f64(r.rom),
            surface_name(r.baseline_kind),
            fmt_f64(r.baseline),
            fmt_f64(r.rom_abs_error()),
            fmt_f64(r.baseline_abs_error())
        );
    }
    out
}

pub fn cmd_validate(config: &PipelineConfig) -> Result<Vec<ValidationRow>> {
    config.with_pool(|| {
        let predictions = chunk_files(&config.predictions_dir())?
            .iter()
            .map(Prediction::read)
            .collect::<Result<Vec<_>>>()?;
        let truths = read_columns(&config.testing_dir())?;
        let training = read_columns(&config.training_dir())?;
        let rows = validate_predictions(&predictions, &truths, &training, &config.qoi)?;
        write_text(&config.dir("validate.csv"), &validate_csv(&rows))?;
        Ok(rows)
    })
}

/// Every step in order.
pub fn run_all(config: &PipelineConfig) -> Result<()> {
    cmd_toygen(config)?;
    cmd_assemble(config)?;
    cmd_decompose(config)?;
    cmd_calibrate(config)?;
    cmd_predict(config)?;
    cmd_validate(config)?;
    Ok(())
}
