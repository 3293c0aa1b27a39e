//! Prediction with its variance: the mean from the smooth terms, the
//! per-row variance from the rest, and a few covariance entries.

use romkit::rom::calibrate;
use romkit::toyprobs::{linspace, midpoints};
use romkit::{tssvd, InterpolantKind, RomModel, SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let problem = ToyProblem::varcoef_bvp();
    let grid = linspace(0.1, 0.9, 11);
    let training = problem.generate(1999, &grid)?;
    let testing = problem.generate(1999, &midpoints(&grid))?;
    let mut model = RomModel::new(tssvd(&SnapshotMatrix::assemble(&training, 500)?)?, InterpolantKind::Pchip)?;
    calibrate(&mut model, &testing, 20)?;

    let s = 0.83;
    let p = model.predict(s)?;
    println!("s = {s}, R = {}, tau_bar = {:.4}", p.split_r, p.tau_bar);
    println!("{:>6} {:>12} {:>12} {:>12}", "x", "truth", "mean", "std");
    for i in (0..1999).step_by(222) {
        let x = i as f64 / 1998.0;
        println!(
            "{x:>6.3} {:>12.6} {:>12.6} {:>12.3e}",
            problem.solution(x, s)?,
            p.mean.values[i],
            p.variance[i].sqrt()
        );
    }
    let mid = 999;
    println!("cov(mid, mid) = {:.3e}", model.covariance_entry(s, mid, mid)?);
    println!("cov(mid, mid+200) = {:.3e}", model.covariance_entry(s, mid, mid + 200)?);
    Ok(())
}
