use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{relative_error, split_from_profile, variation_profile, RomModel};
use crate::error::{Result, RomError};
use crate::store::ColumnFile;

/// A candidate is accepted when its worst-site error is within this relative
/// margin of the best achievable worst-site error.
pub const SELECTION_TOLERANCE: f64 = 0.05;

/// Error surface over testing sites × candidate thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationReport {
    pub testing_sites: Vec<f64>,
    pub candidate_thresholds: Vec<f64>,
    /// `errors[site][candidate]`.
    pub errors: Vec<Vec<f64>>,
    /// `splits[site][candidate]`.
    pub splits: Vec<Vec<usize>>,
    pub chosen_index: usize,
    pub chosen_tau_bar: f64,
}

impl CalibrationReport {
    pub fn chosen_splits(&self) -> Vec<usize> {
        self.splits.iter().map(|row| row[self.chosen_index]).collect()
    }

    pub fn chosen_errors(&self) -> Vec<f64> {
        self.errors.iter().map(|row| row[self.chosen_index]).collect()
    }

    /// Worst error over testing sites, per candidate.
    pub fn max_errors(&self) -> Vec<f64> {
        (0..self.candidate_thresholds.len())
            .map(|m| self.errors.iter().map(|row| row[m]).fold(0.0, f64::max))
            .collect()
    }
}

fn check_sites(model: &RomModel, testing: &[ColumnFile]) -> Result<()> {
    if testing.is_empty() {
        return Err(RomError::EmptyTesting);
    }
    let grid = model.parameter_grid();
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    for t in testing {
        let s = t.parameter_value;
        if grid.contains(&s) {
            return Err(RomError::SiteCollision(s));
        }
        if !(s > lo && s < hi) {
            return Err(RomError::OutOfDomain { value: s, lo, hi });
        }
    }
    Ok(())
}

/// Chooses `τ̄` from `n_candidates` thresholds spread uniformly over
/// `[min_ℓ τ(1, s_ℓ), max_ℓ τ(N, s_ℓ)]` and stores it in `model`.
pub fn calibrate(
    model: &mut RomModel,
    testing: &[ColumnFile],
    n_candidates: usize,
) -> Result<CalibrationReport> {
    if n_candidates < 2 {
        return Err(RomError::InvalidArgument(format!(
            "need at least two candidate thresholds, got {n_candidates}"
        )));
    }
    check_sites(model, testing)?;
    let profiles = testing
        .iter()
        .map(|t| variation_profile(model.factors(), t.parameter_value))
        .collect::<Result<Vec<_>>>()?;
    let lo = profiles.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
    let hi = profiles
        .iter()
        .map(|p| *p.last().expect("N >= 2"))
        .fold(f64::NEG_INFINITY, f64::max);
    let step = (hi - lo) / (n_candidates - 1) as f64;
    let candidates = (0..n_candidates)
        .map(|m| if m + 1 == n_candidates { hi } else { lo + m as f64 * step })
        .collect();
    calibrate_with_candidates(model, testing, candidates)
}

/// Evaluates the error surface for explicit candidates and keeps the
/// smallest one whose worst-site error is within [`SELECTION_TOLERANCE`] of
/// the best.
pub fn calibrate_with_candidates(
    model: &mut RomModel,
    testing: &[ColumnFile],
    candidates: Vec<f64>,
) -> Result<CalibrationReport> {
    if candidates.is_empty() {
        return Err(RomError::InvalidArgument("no candidate thresholds".into()));
    }
    if let Some(bad) = candidates.iter().find(|t| !(**t >= 0.0)) {
        return Err(RomError::InvalidArgument(format!("negative threshold {bad}")));
    }
    check_sites(model, testing)?;
    let frozen: &RomModel = model;

    let per_site: Vec<(Vec<usize>, Vec<f64>)> = testing
        .par_iter()
        .map(|truth| {
            let s = truth.parameter_value;
            let profile = variation_profile(frozen.factors(), s)?;
            let splits: Vec<usize> = candidates
                .iter()
                .map(|&t| split_from_profile(&profile, t))
                .collect();
            let mut by_split = BTreeMap::new();
            for &r in &splits {
                if let std::collections::btree_map::Entry::Vacant(e) = by_split.entry(r) {
                    let mean = frozen.mean_with_split(s, r)?;
                    e.insert(relative_error(&mean, truth)?);
                }
            }
            let errors = splits.iter().map(|r| by_split[r]).collect();
            Ok((splits, errors))
        })
        .collect::<Result<_>>()?;
    let (splits, errors): (Vec<_>, Vec<_>) = per_site.into_iter().unzip();

    let mut report = CalibrationReport {
        testing_sites: testing.iter().map(|t| t.parameter_value).collect(),
        candidate_thresholds: candidates,
        errors,
        splits,
        chosen_index: 0,
        chosen_tau_bar: 0.0,
    };
    let worst = report.max_errors();
    let best = worst.iter().copied().fold(f64::INFINITY, f64::min);
    let chosen = worst
        .iter()
        .position(|&e| e <= (1.0 + SELECTION_TOLERANCE) * best)
        .expect("the minimum itself qualifies");
    report.chosen_index = chosen;
    report.chosen_tau_bar = report.candidate_thresholds[chosen];
    model.set_tau_bar(report.chosen_tau_bar)?;
    Ok(report)
}
