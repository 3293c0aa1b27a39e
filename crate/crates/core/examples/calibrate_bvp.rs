//! Calibrate the variation threshold on the variable-coefficient problem and
//! print the resulting split table.

use romkit::rom::calibrate;
use romkit::toyprobs::{linspace, midpoints};
use romkit::{tssvd, InterpolantKind, RomModel, SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let problem = ToyProblem::varcoef_bvp();
    let grid = linspace(0.1, 0.9, 11);
    let training = problem.generate(1999, &grid)?;
    let testing = problem.generate(1999, &midpoints(&grid))?;
    let factors = tssvd(&SnapshotMatrix::assemble(&training, 500)?)?;

    let mut model = RomModel::new(factors, InterpolantKind::Linear)?;
    let report = calibrate(&mut model, &testing, 20)?;

    println!("candidates:");
    for (m, (t, e)) in report.candidate_thresholds.iter().zip(report.max_errors()).enumerate() {
        let mark = if m == report.chosen_index { " <" } else { "" };
        println!("  {m:>2}  tau {t:>8.4}  max error {e:.4e}{mark}");
    }
    println!("\ns      R  error");
    for ((s, r), e) in report.testing_sites.iter().zip(report.chosen_splits()).zip(report.chosen_errors()) {
        println!("{s:.2}  {r:>2}  {e:.4e}");
    }
    Ok(())
}
