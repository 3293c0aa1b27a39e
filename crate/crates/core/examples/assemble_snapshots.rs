//! Generate toy columns, assemble them into a chunked snapshot matrix, write
//! the chunk files plus manifest, and read them back.

use romkit::store::{read_manifest, write_manifest};
use romkit::toyprobs::linspace;
use romkit::{SnapshotMatrix, ToyProblem};

fn main() -> romkit::Result<()> {
    let columns = ToyProblem::varcoef_bvp().generate(1999, &linspace(0.1, 0.9, 11))?;
    let matrix = SnapshotMatrix::assemble(&columns, 500)?;
    println!("{} x {} in {} chunks", matrix.m_rows(), matrix.n_cols(), matrix.chunks().len());
    for c in matrix.chunks() {
        println!("  tag {:>5}  rows {}", c.tag().0, c.n_rows());
    }

    let dir = std::env::temp_dir().join("romkit-assemble-example");
    let manifest = write_manifest(&matrix, &dir)?;
    let back = read_manifest(&manifest)?;
    assert_eq!(back, matrix);
    println!("round trip through {} ok", manifest.display());
    Ok(())
}
