//! Chunked storage of tall dense matrices.
//!
//! A [`ChunkedMatrix`] is a list of [`MatrixChunk`]s, each holding a
//! contiguous, strictly increasing run of row ids and a dense row-major block.
//! The same container backs both the snapshot matrix `F` and the left factor
//! `U` of its SVD. Chunks are immutable once built; every per-chunk operation
//! runs on the current rayon pool and results are merged in row order, so the
//! output is bit-identical to sequential execution.

pub mod format;

use std::ops::Range;

use rayon::prelude::*;

use crate::dense::DenseMatrix;
use crate::error::{Result, RomError};

pub use format::{
    decode_chunk, encode_chunk, read_chunk, read_column_file, read_manifest, write_chunk,
    write_column_file, write_manifest, Manifest,
};

/// Default number of rows per chunk produced by [`SnapshotMatrix::assemble`].
pub const DEFAULT_CHUNK_ROWS: usize = 65_536;

/// One training (or testing) run: the solution at every row id for a single
/// parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnFile {
    pub parameter_value: f64,
    pub row_ids: Vec<u64>,
    pub values: Vec<f64>,
}

impl ColumnFile {
    pub fn new(parameter_value: f64, row_ids: Vec<u64>, values: Vec<f64>) -> Result<Self> {
        if row_ids.is_empty() {
            return Err(RomError::EmptyInput);
        }
        if row_ids.len() != values.len() {
            return Err(RomError::DimensionMismatch(format!(
                "{} row ids but {} values",
                row_ids.len(),
                values.len()
            )));
        }
        check_strictly_increasing(&row_ids)?;
        if !parameter_value.is_finite() {
            return Err(RomError::NonFinite("parameter value"));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(RomError::NonFinite("column values"));
        }
        Ok(ColumnFile {
            parameter_value,
            row_ids,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }
}

fn check_strictly_increasing(row_ids: &[u64]) -> Result<()> {
    if let Some(w) = row_ids.windows(2).find(|w| w[0] >= w[1]) {
        return Err(RomError::MismatchedRows(format!(
            "row ids must be strictly increasing, found {} then {}",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Identifier pairing a chunk's Q factor with its block of the combined R
/// factorization. It is the chunk's first row id, which is unique because
/// chunks hold disjoint row ranges and sorts in row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ChunkTag(pub u64);

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixChunk {
    tag: ChunkTag,
    row_ids: Vec<u64>,
    rows: DenseMatrix,
}

impl MatrixChunk {
    pub fn new(row_ids: Vec<u64>, rows: DenseMatrix) -> Result<Self> {
        if row_ids.is_empty() {
            return Err(RomError::EmptyInput);
        }
        if row_ids.len() != rows.rows() {
            return Err(RomError::DimensionMismatch(format!(
                "{} row ids for a {}-row block",
                row_ids.len(),
                rows.rows()
            )));
        }
        check_strictly_increasing(&row_ids)?;
        Ok(MatrixChunk {
            tag: ChunkTag(row_ids[0]),
            row_ids,
            rows,
        })
    }

    pub fn tag(&self) -> ChunkTag {
        self.tag
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    pub fn rows(&self) -> &DenseMatrix {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.row_ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.rows.cols()
    }

    pub fn into_parts(self) -> (Vec<u64>, DenseMatrix) {
        (self.row_ids, self.rows)
    }
}

/// A per-row vector keyed by row id, in ascending row order.
#[derive(Debug, Clone, PartialEq)]
pub struct RowVector {
    pub row_ids: Vec<u64>,
    pub values: Vec<f64>,
}

impl RowVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Tall matrix stored as row chunks in ascending row-id order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChunkedMatrix {
    chunks: Vec<MatrixChunk>,
    n_cols: usize,
}

impl ChunkedMatrix {
    /// Accepts chunks in any order; they are sorted by tag and checked for a
    /// common column count and disjoint row ranges.
    pub fn from_chunks(mut chunks: Vec<MatrixChunk>) -> Result<Self> {
        let n_cols = chunks.first().ok_or(RomError::EmptyInput)?.n_cols();
        if let Some(c) = chunks.iter().find(|c| c.n_cols() != n_cols) {
            return Err(RomError::DimensionMismatch(format!(
                "chunk {} has {} columns, expected {}",
                c.tag.0,
                c.n_cols(),
                n_cols
            )));
        }
        chunks.sort_by_key(MatrixChunk::tag);
        for pair in chunks.windows(2) {
            let last = *pair[0].row_ids.last().expect("chunks are nonempty");
            if last >= pair[1].row_ids[0] {
                return Err(RomError::MismatchedRows(format!(
                    "chunks {} and {} overlap",
                    pair[0].tag.0, pair[1].tag.0
                )));
            }
        }
        Ok(ChunkedMatrix { chunks, n_cols })
    }

    /// Splits a dense matrix into chunks of at most `chunk_rows` rows.
    pub fn from_dense(row_ids: &[u64], dense: &DenseMatrix, chunk_rows: usize) -> Result<Self> {
        if chunk_rows == 0 {
            return Err(RomError::InvalidArgument("chunk_rows must be positive".into()));
        }
        if row_ids.len() != dense.rows() {
            return Err(RomError::DimensionMismatch(format!(
                "{} row ids for {} rows",
                row_ids.len(),
                dense.rows()
            )));
        }
        let chunks = (0..dense.rows())
            .step_by(chunk_rows)
            .map(|start| {
                let end = (start + chunk_rows).min(dense.rows());
                MatrixChunk::new(row_ids[start..end].to_vec(), dense.row_block(start, end))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_chunks(chunks)
    }

    /// Splits a dense matrix at explicit row counts (useful for uneven layouts).
    pub fn from_dense_with_sizes(row_ids: &[u64], dense: &DenseMatrix, sizes: &[usize]) -> Result<Self> {
        if sizes.iter().sum::<usize>() != dense.rows() || row_ids.len() != dense.rows() {
            return Err(RomError::DimensionMismatch(
                "chunk sizes must add up to the row count".into(),
            ));
        }
        let mut start = 0;
        let mut chunks = Vec::with_capacity(sizes.len());
        for &size in sizes {
            let end = start + size;
            chunks.push(MatrixChunk::new(
                row_ids[start..end].to_vec(),
                dense.row_block(start, end),
            )?);
            start = end;
        }
        Self::from_chunks(chunks)
    }

    pub fn chunks(&self) -> &[MatrixChunk] {
        &self.chunks
    }

    pub fn into_chunks(self) -> Vec<MatrixChunk> {
        self.chunks
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn m_rows(&self) -> usize {
        self.chunks.iter().map(MatrixChunk::n_rows).sum()
    }

    pub fn row_ids(&self) -> Vec<u64> {
        self.chunks
            .iter()
            .flat_map(|c| c.row_ids.iter().copied())
            .collect()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let blocks: Vec<&DenseMatrix> = self.chunks.iter().map(|c| &c.rows).collect();
        DenseMatrix::vstack(&blocks)
    }

    pub fn rechunk(&self, chunk_rows: usize) -> Result<Self> {
        Self::from_dense(&self.row_ids(), &self.to_dense(), chunk_rows)
    }

    /// `out[i] = Σ_{k ∈ cols} self[i, k] · vec[k - cols.start]`.
    ///
    /// Each row is reduced left to right inside its own chunk, so the result is
    /// independent of the chunk partition and of worker scheduling.
    pub fn matvec(&self, vec: &[f64], cols: Range<usize>) -> Result<RowVector> {
        if cols.end > self.n_cols || cols.start > cols.end {
            return Err(RomError::DimensionMismatch(format!(
                "column range {:?} outside 0..{}",
                cols, self.n_cols
            )));
        }
        if vec.len() != cols.len() {
            return Err(RomError::DimensionMismatch(format!(
                "vector of length {} for a {}-column range",
                vec.len(),
                cols.len()
            )));
        }
        let parts: Vec<Vec<f64>> = self
            .chunks
            .par_iter()
            .map(|chunk| {
                (0..chunk.n_rows())
                    .map(|i| dot(&chunk.rows.row(i)[cols.clone()], vec))
                    .collect()
            })
            .collect();
        Ok(RowVector {
            row_ids: self.row_ids(),
            values: parts.concat(),
        })
    }

    /// Applies `f` to every chunk on the worker pool and concatenates the
    /// per-row outputs in row order.
    pub fn map_rows<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(&[f64]) -> T + Sync,
    {
        let parts: Vec<Vec<T>> = self
            .chunks
            .par_iter()
            .map(|chunk| (0..chunk.n_rows()).map(|i| f(chunk.rows.row(i))).collect())
            .collect();
        parts.into_iter().flatten().collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

/// The snapshot matrix `F`: one column per training run, columns ordered by
/// ascending parameter value.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    matrix: ChunkedMatrix,
    parameter_grid: Vec<f64>,
}

impl SnapshotMatrix {
    pub fn new(matrix: ChunkedMatrix, parameter_grid: Vec<f64>) -> Result<Self> {
        if parameter_grid.len() != matrix.n_cols() {
            return Err(RomError::DimensionMismatch(format!(
                "{} parameters for {} columns",
                parameter_grid.len(),
                matrix.n_cols()
            )));
        }
        if parameter_grid.len() < 2 {
            return Err(RomError::InvalidArgument(
                "a snapshot matrix needs at least two columns".into(),
            ));
        }
        if let Some(w) = parameter_grid.windows(2).find(|w| w[0] >= w[1]) {
            if w[0] == w[1] {
                return Err(RomError::DuplicateParameter(w[0]));
            }
            return Err(RomError::InvalidArgument(
                "parameter grid must be strictly increasing".into(),
            ));
        }
        if matrix.m_rows() < matrix.n_cols() {
            return Err(RomError::DimensionMismatch(format!(
                "matrix is not tall: {} rows, {} columns",
                matrix.m_rows(),
                matrix.n_cols()
            )));
        }
        Ok(SnapshotMatrix {
            matrix,
            parameter_grid,
        })
    }

    /// Builds `F` from per-parameter columns.
    ///
    /// Columns are sorted by parameter value; entry `(i, j)` is column `j`'s
    /// value at the `i`-th row id. The output is cut into contiguous row-id
    /// ranges of at most `chunk_rows` rows, each built independently.
    pub fn assemble(columns: &[ColumnFile], chunk_rows: usize) -> Result<Self> {
        if columns.is_empty() {
            return Err(RomError::EmptyInput);
        }
        if chunk_rows == 0 {
            return Err(RomError::InvalidArgument("chunk_rows must be positive".into()));
        }
        let mut sorted: Vec<&ColumnFile> = columns.iter().collect();
        sorted.sort_by(|a, b| a.parameter_value.total_cmp(&b.parameter_value));
        for pair in sorted.windows(2) {
            if pair[0].parameter_value == pair[1].parameter_value {
                return Err(RomError::DuplicateParameter(pair[0].parameter_value));
            }
        }
        let reference = &sorted[0].row_ids;
        for col in &sorted[1..] {
            if col.row_ids != *reference {
                return Err(RomError::MismatchedRows(format!(
                    "column s={} does not share the row ids of column s={}",
                    col.parameter_value, sorted[0].parameter_value
                )));
            }
        }
        let m = reference.len();
        let n = sorted.len();
        let starts: Vec<usize> = (0..m).step_by(chunk_rows).collect();
        let chunks = starts
            .par_iter()
            .map(|&start| {
                let end = (start + chunk_rows).min(m);
                let block = DenseMatrix::from_fn(end - start, n, |i, j| sorted[j].values[start + i]);
                MatrixChunk::new(reference[start..end].to_vec(), block)
            })
            .collect::<Result<Vec<_>>>()?;
        let grid = sorted.iter().map(|c| c.parameter_value).collect();
        Self::new(ChunkedMatrix::from_chunks(chunks)?, grid)
    }

    pub fn matrix(&self) -> &ChunkedMatrix {
        &self.matrix
    }

    pub fn parameter_grid(&self) -> &[f64] {
        &self.parameter_grid
    }

    pub fn m_rows(&self) -> usize {
        self.matrix.m_rows()
    }

    pub fn n_cols(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn chunks(&self) -> &[MatrixChunk] {
        self.matrix.chunks()
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.matrix.to_dense()
    }

    pub fn rechunk(&self, chunk_rows: usize) -> Result<Self> {
        Self::new(self.matrix.rechunk(chunk_rows)?, self.parameter_grid.clone())
    }

    pub fn matvec(&self, vec: &[f64], cols: Range<usize>) -> Result<RowVector> {
        self.matrix.matvec(vec, cols)
    }

    /// Column `j` as a [`ColumnFile`].
    pub fn column(&self, j: usize) -> ColumnFile {
        ColumnFile {
            parameter_value: self.parameter_grid[j],
            row_ids: self.matrix.row_ids(),
            values: self.matrix.map_rows(|row| row[j]),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(s: f64, ids: &[u64], vals: &[f64]) -> ColumnFile {
        ColumnFile::new(s, ids.to_vec(), vals.to_vec()).unwrap()
    }

    #[test]
    fn assemble_reorders_by_parameter() {
        let cols = vec![
            col(1.0, &[0, 1, 2], &[1.0, 2.0, 3.0]),
            col(0.0, &[0, 1, 2], &[4.0, 5.0, 6.0]),
        ];
        let f = SnapshotMatrix::assemble(&cols, 2).unwrap();
        assert_eq!(f.chunks().len(), 2);
        assert_eq!(
            f.chunks()[0].rows(),
            &DenseMatrix::from_rows(&[vec![4.0, 1.0], vec![5.0, 2.0]])
        );
        assert_eq!(f.chunks()[1].row_ids(), &[2]);
        assert_eq!(f.parameter_grid(), &[0.0, 1.0]);
    }

    #[test]
    fn assemble_rejects_mismatched_rows() {
        let cols = vec![col(0.0, &[0, 1], &[1.0, 2.0]), col(1.0, &[0, 2], &[1.0, 2.0])];
        assert!(matches!(
            SnapshotMatrix::assemble(&cols, 4),
            Err(RomError::MismatchedRows(_))
        ));
    }

    #[test]
    fn assemble_rejects_duplicates_and_empty() {
        let cols = vec![col(0.5, &[0, 1], &[1.0, 2.0]), col(0.5, &[0, 1], &[1.0, 2.0])];
        assert!(matches!(
            SnapshotMatrix::assemble(&cols, 4),
            Err(RomError::DuplicateParameter(_))
        ));
        assert!(matches!(SnapshotMatrix::assemble(&[], 4), Err(RomError::EmptyInput)));
    }

    #[test]
    fn column_file_validation() {
        assert!(ColumnFile::new(0.0, vec![], vec![]).is_err());
        assert!(ColumnFile::new(0.0, vec![1, 1], vec![0.0, 0.0]).is_err());
        assert!(ColumnFile::new(0.0, vec![1], vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn matvec_identity_and_zero() {
        let eye = DenseMatrix::identity(3);
        let m = ChunkedMatrix::from_dense(&[0, 1, 2], &eye, 2).unwrap();
        assert_eq!(m.chunks().len(), 2);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0], 0..3).unwrap().values, vec![1.0; 3]);
        assert_eq!(m.matvec(&[0.0; 3], 0..3).unwrap().values, vec![0.0; 3]);
        assert_eq!(m.matvec(&[2.0], 1..2).unwrap().values, vec![0.0, 2.0, 0.0]);
    }

    #[test]
    fn matvec_dimension_errors() {
        let m = ChunkedMatrix::from_dense(&[0, 1], &DenseMatrix::identity(2), 1).unwrap();
        assert!(matches!(m.matvec(&[1.0], 0..2), Err(RomError::DimensionMismatch(_))));
        assert!(matches!(m.matvec(&[1.0; 3], 0..3), Err(RomError::DimensionMismatch(_))));
    }

    #[test]
    fn overlapping_chunks_rejected() {
        let a = MatrixChunk::new(vec![0, 5], DenseMatrix::zeros(2, 1)).unwrap();
        let b = MatrixChunk::new(vec![3], DenseMatrix::zeros(1, 1)).unwrap();
        assert!(ChunkedMatrix::from_chunks(vec![a, b]).is_err());
    }
}
