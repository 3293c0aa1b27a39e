//! Scalar quantities of interest from ROM predictions against response
//! surfaces fitted directly to the training values.

use romkit::pipeline::{validate_predictions, QoiSpec};
use romkit::rom::calibrate;
use romkit::toyprobs::{linspace, midpoints};
use romkit::{tssvd, InterpolantKind, RomModel, SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let problem = ToyProblem::varcoef_bvp();
    let grid = linspace(0.1, 0.9, 11);
    let training = problem.generate(1999, &grid)?;
    let testing = problem.generate(1999, &midpoints(&grid))?;
    let mut model = RomModel::new(tssvd(&SnapshotMatrix::assemble(&training, 500)?)?, InterpolantKind::Pchip)?;
    let report = calibrate(&mut model, &testing, 20)?;
    let predictions = model.predict_batch(&report.testing_sites)?;

    let rows = validate_predictions(&predictions, &testing, &training, &QoiSpec::default())?;
    println!("{:<16} {:>5} {:>11} {:>11} {:>11}", "qoi", "s", "truth", "rom err", "surface err");
    for r in rows {
        println!(
            "{:<16} {:>5.2} {:>11.5} {:>11.3e} {:>11.3e}",
            r.qoi,
            r.s,
            r.truth,
            r.rom_abs_error(),
            r.baseline_abs_error()
        );
    }
    Ok(())
}
