//! Chunked SVD of a tall matrix and a check that it does not depend on how
//! the rows were split.

use romkit::toyprobs::linspace;
use romkit::{tssvd, SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let columns = ToyProblem::advection_diffusion().generate(4001, &linspace(2.0, 20.0, 15))?;
    let coarse = tssvd(&SnapshotMatrix::assemble(&columns, 4001)?)?;
    let fine = tssvd(&SnapshotMatrix::assemble(&columns, 333)?)?;

    println!("{:>3} {:>14} {:>12}", "k", "sigma", "sigma/sigma1");
    for (k, s) in fine.sigma().iter().enumerate() {
        println!("{:>3} {:>14.6e} {:>12.3e}", k + 1, s, s / fine.sigma()[0]);
    }
    // Columns past the noise floor are not determined by the data.
    let resolved = fine.sigma().iter().filter(|s| **s > 1e-8 * fine.sigma()[0]).count();
    let mut dv = 0.0f64;
    for k in 0..resolved {
        for (a, b) in fine.v().column(k).iter().zip(coarse.v().column(k)) {
            dv = dv.max((a - b).abs());
        }
    }
    println!("max |V_fine - V_single| over {resolved} resolved columns = {dv:.2e}");

    let f = SnapshotMatrix::assemble(&columns, 333)?.to_dense();
    let resid = fine.reconstruct().sub(&f).frobenius_norm() / f.frobenius_norm();
    println!("relative reconstruction residual = {resid:.2e}");
    Ok(())
}
