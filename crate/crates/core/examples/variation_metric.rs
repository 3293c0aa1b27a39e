//! Variation metric tau(r, s) at the midpoints of the training grid, and the
//! split it implies for a fixed threshold.

use romkit::rom::{choose_split, variation_profile};
use romkit::toyprobs::{linspace, midpoints};
use romkit::{tssvd, SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let grid = linspace(0.1, 0.9, 11);
    let columns = ToyProblem::varcoef_bvp().generate(1999, &grid)?;
    let factors = tssvd(&SnapshotMatrix::assemble(&columns, 1000)?)?;

    let tau_bar = 7.0;
    println!("s      R   tau(1..N)");
    for s in midpoints(&grid) {
        let profile = variation_profile(&factors, s)?;
        let r = choose_split(&factors, s, tau_bar)?;
        let shown: Vec<String> = profile.iter().map(|t| format!("{t:.2}")).collect();
        println!("{s:.2}  {r:>2}   {}", shown.join(" "));
    }
    Ok(())
}
