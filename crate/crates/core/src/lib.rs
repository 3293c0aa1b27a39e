//! Snapshot reduced-order modeling on chunked tall matrices.
//!
//! The crate builds a parameter snapshot matrix from per-run column files,
//! factors it with a chunked tall-and-skinny SVD, and evaluates an
//! interpolating reduced-order model whose trailing singular terms are
//! folded into a per-row prediction variance.
//!
//! * [`store`]: chunk files, manifests, assembly and chunked mat-vec.
//! * [`tsqr`]: per-chunk QR, single-reducer R combination, R-SVD.
//! * [`rom`]: interpolation, variation metric, split, predict, calibrate.
//! * [`toyprobs`]: closed-form boundary-value problems for testing.
//! * [`pipeline`]: file-level orchestration behind the `romkit` binary.

pub mod dense;
pub mod error;
pub mod interp;
pub mod pipeline;
pub mod rom;
pub mod store;
pub mod toyprobs;
pub mod tsqr;

pub use dense::DenseMatrix;
pub use error::{Result, RomError};
pub use interp::InterpolantKind;
pub use rom::{CalibrationReport, Prediction, RomModel};
pub use store::{ChunkTag, ChunkedMatrix, ColumnFile, MatrixChunk, RowVector, SnapshotMatrix};
pub use toyprobs::{ToyProblem, ToyProblemKind};
pub use tsqr::{tssvd, SvdFactors};
