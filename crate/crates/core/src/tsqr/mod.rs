//! Tall-and-skinny QR and SVD over a chunked matrix.
//!
//! The pipeline mirrors a two-pass map/reduce:
//!
//! 1. [`chunk_qr`] factors every chunk independently into `Q_i R_i`.
//! 2. [`combine_r`] stacks the `R_i` (sorted by tag) in one reducer and
//!    factors the stack into `Q_{i,1}` blocks and the global `R`.
//! 3. [`small_svd`] computes `R = U_R Σ Vᵀ` on the small `N × N` factor.
//! 4. [`reconstruct_u`] forms each block of `U` as `Q_i Q_{i,1} U_R`.
//!
//! Signs are fixed so that, in every column of `V`, the entry of largest
//! magnitude (lowest index on ties) is positive; `U` columns flip in tandem.

mod householder;
mod jacobi;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Result, RomError};
use crate::store::format::{read_chunks, read_json, write_chunks, write_json};
use crate::store::{ChunkTag, ChunkedMatrix, MatrixChunk, SnapshotMatrix};

use householder::householder_qr;
use jacobi::jacobi_svd;

/// Upper-triangular `N × N` factor emitted by one chunk.
#[derive(Debug, Clone, PartialEq)]
pub struct RFactor {
    pub tag: ChunkTag,
    pub r: DenseMatrix,
}

/// Orthonormal factor of one chunk, written back alongside its row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct QChunk {
    pub tag: ChunkTag,
    pub row_ids: Vec<u64>,
    pub q: DenseMatrix,
}

/// Output of the single-reducer combination step.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedR {
    pub r: DenseMatrix,
    /// `Q_{i,1}` blocks in ascending tag order.
    pub q_second: Vec<(ChunkTag, DenseMatrix)>,
}

/// SVD of the small triangular factor, sign convention applied.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallSvd {
    pub u_r: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

/// Thin SVD `F = U Σ Vᵀ` with `U` kept in chunks.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    u: ChunkedMatrix,
    sigma: Vec<f64>,
    v: DenseMatrix,
    parameter_grid: Vec<f64>,
}

pub fn chunk_qr(chunk: &MatrixChunk) -> Result<(QChunk, RFactor)> {
    if !chunk.rows().is_finite() {
        return Err(RomError::NonFinite("matrix chunk"));
    }
    let qr = householder_qr(chunk.rows());
    Ok((
        QChunk {
            tag: chunk.tag(),
            row_ids: chunk.row_ids().to_vec(),
            q: qr.q,
        },
        RFactor {
            tag: chunk.tag(),
            r: qr.r,
        },
    ))
}

pub fn combine_r(rfactors: &[RFactor]) -> Result<CombinedR> {
    let n = rfactors.first().ok_or(RomError::EmptyInput)?.r.cols();
    let mut seen = BTreeSet::new();
    for f in rfactors {
        if f.r.rows() != n || f.r.cols() != n {
            return Err(RomError::DimensionMismatch(format!(
                "R factor {} is {}x{}, expected {n}x{n}",
                f.tag.0,
                f.r.rows(),
                f.r.cols()
            )));
        }
        if !seen.insert(f.tag) {
            return Err(RomError::TagCollision(f.tag.0));
        }
    }
    let mut sorted: Vec<&RFactor> = rfactors.iter().collect();
    sorted.sort_by_key(|f| f.tag);
    let stack = DenseMatrix::vstack(&sorted.iter().map(|f| &f.r).collect::<Vec<_>>());
    let qr = householder_qr(&stack);
    let q_second = sorted
        .iter()
        .enumerate()
        .map(|(i, f)| (f.tag, qr.q.row_block(i * n, (i + 1) * n)))
        .collect();
    Ok(CombinedR { r: qr.r, q_second })
}

pub fn small_svd(r: &DenseMatrix) -> Result<SmallSvd> {
    if r.rows() != r.cols() {
        return Err(RomError::DimensionMismatch(format!(
            "small_svd expects a square factor, got {}x{}",
            r.rows(),
            r.cols()
        )));
    }
    if !r.is_finite() {
        return Err(RomError::NonFinite("R factor"));
    }
    let svd = jacobi_svd(r);
    let mut out = SmallSvd {
        u_r: svd.u,
        sigma: svd.sigma,
        v: svd.v,
    };
    fix_signs(&mut out.u_r, &mut out.v);
    Ok(out)
}

/// Flip column pairs so each `V` column's largest-magnitude entry is positive.
fn fix_signs(u: &mut DenseMatrix, v: &mut DenseMatrix) {
    for k in 0..v.cols() {
        let mut pivot = 0;
        for i in 1..v.rows() {
            if v[(i, k)].abs() > v[(pivot, k)].abs() {
                pivot = i;
            }
        }
        if v[(pivot, k)] < 0.0 {
            v.scale_column(k, -1.0);
            u.scale_column(k, -1.0);
        }
    }
}

/// Block of `U` for one chunk: `q · q_second · u_r`.
pub fn reconstruct_u(
    q_chunk: &QChunk,
    q_second: &(ChunkTag, DenseMatrix),
    u_r: &DenseMatrix,
) -> Result<MatrixChunk> {
    if q_chunk.tag != q_second.0 {
        return Err(RomError::TagMismatch {
            q_tag: q_chunk.tag.0,
            factor_tag: q_second.0 .0,
        });
    }
    if q_chunk.q.cols() != q_second.1.rows() || q_second.1.cols() != u_r.rows() {
        return Err(RomError::DimensionMismatch(
            "Q chunk, Q_{i,1} and U_R shapes do not chain".into(),
        ));
    }
    let small = q_second.1.matmul(u_r);
    MatrixChunk::new(q_chunk.row_ids.clone(), q_chunk.q.matmul(&small))
}

/// Full tall-and-skinny SVD of the snapshot matrix.
pub fn tssvd(matrix: &SnapshotMatrix) -> Result<SvdFactors> {
    let schedule: Vec<usize> = (0..matrix.chunks().len()).collect();
    tssvd_scheduled(matrix, &schedule)
}

/// Same as [`tssvd`], but chunks are dispatched to workers in `schedule`
/// order. The result does not depend on the schedule.
pub fn tssvd_scheduled(matrix: &SnapshotMatrix, schedule: &[usize]) -> Result<SvdFactors> {
    let chunks = matrix.chunks();
    let mut check: Vec<usize> = schedule.to_vec();
    check.sort_unstable();
    if check != (0..chunks.len()).collect::<Vec<_>>() {
        return Err(RomError::InvalidArgument(
            "schedule must be a permutation of the chunk indices".into(),
        ));
    }

    let mapped: Vec<(QChunk, RFactor)> = schedule
        .par_iter()
        .map(|&i| chunk_qr(&chunks[i]))
        .collect::<Result<_>>()?;
    let (q_chunks, rfactors): (Vec<QChunk>, Vec<RFactor>) = mapped.into_iter().unzip();

    let combined = combine_r(&rfactors)?;
    let svd = small_svd(&combined.r)?;

    let u_chunks: Vec<MatrixChunk> = q_chunks
        .par_iter()
        .map(|q| {
            let idx = combined
                .q_second
                .binary_search_by_key(&q.tag, |(t, _)| *t)
                .map_err(|_| RomError::TagMismatch {
                    q_tag: q.tag.0,
                    factor_tag: u64::MAX,
                })?;
            reconstruct_u(q, &combined.q_second[idx], &svd.u_r)
        })
        .collect::<Result<_>>()?;

    SvdFactors::new(
        ChunkedMatrix::from_chunks(u_chunks)?,
        svd.sigma,
        svd.v,
        matrix.parameter_grid().to_vec(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
struct FactorManifest {
    sigma: Vec<f64>,
    /// Row-major `N × N`.
    v: Vec<f64>,
    parameter_grid: Vec<f64>,
    m_rows: usize,
    u_chunks: Vec<String>,
}

impl SvdFactors {
    pub fn new(
        u: ChunkedMatrix,
        sigma: Vec<f64>,
        v: DenseMatrix,
        parameter_grid: Vec<f64>,
    ) -> Result<Self> {
        let n = sigma.len();
        if u.n_cols() != n || v.rows() != n || v.cols() != n || parameter_grid.len() != n {
            return Err(RomError::DimensionMismatch(format!(
                "factor shapes disagree: U has {} columns, sigma {}, V {}x{}, grid {}",
                u.n_cols(),
                n,
                v.rows(),
                v.cols(),
                parameter_grid.len()
            )));
        }
        Ok(SvdFactors {
            u,
            sigma,
            v,
            parameter_grid,
        })
    }

    pub fn u(&self) -> &ChunkedMatrix {
        &self.u
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn parameter_grid(&self) -> &[f64] {
        &self.parameter_grid
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn m_rows(&self) -> usize {
        self.u.m_rows()
    }

    /// Dense `U Σ Vᵀ`; only sensible for small instances.
    pub fn reconstruct(&self) -> DenseMatrix {
        let mut us = self.u.to_dense();
        for (k, s) in self.sigma.iter().enumerate() {
            us.scale_column(k, *s);
        }
        us.matmul(&self.v.transpose())
    }

    /// Writes `U` chunks as `u_NNNNN.tsmx` plus `factors.json` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        let u_chunks = write_chunks(&self.u, dir, "u")?;
        let manifest = FactorManifest {
            sigma: self.sigma.clone(),
            v: self.v.as_slice().to_vec(),
            parameter_grid: self.parameter_grid.clone(),
            m_rows: self.u.m_rows(),
            u_chunks,
        };
        let path = dir.join("factors.json");
        write_json(&manifest, &path)?;
        Ok(path)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let manifest: FactorManifest = read_json(path)?;
        let n = manifest.sigma.len();
        if manifest.v.len() != n * n {
            return Err(RomError::DimensionMismatch(format!(
                "V holds {} entries for {} singular values",
                manifest.v.len(),
                n
            )));
        }
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let u = read_chunks(dir, &manifest.u_chunks)?;
        if u.m_rows() != manifest.m_rows {
            return Err(RomError::DimensionMismatch("U row count disagrees with manifest".into()));
        }
        Self::new(
            u,
            manifest.sigma,
            DenseMatrix::from_row_major(n, n, manifest.v),
            manifest.parameter_grid,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chunk(rows: &[Vec<f64>]) -> MatrixChunk {
        let ids = (0..rows.len() as u64).collect();
        MatrixChunk::new(ids, DenseMatrix::from_rows(rows)).unwrap()
    }

    #[test]
    fn identity_chunk() {
        let c = MatrixChunk::new(vec![0, 1, 2], DenseMatrix::identity(3)).unwrap();
        let (q, r) = chunk_qr(&c).unwrap();
        assert_eq!(q.q, DenseMatrix::identity(3));
        assert_eq!(r.r, DenseMatrix::identity(3));
        assert_eq!(q.tag, r.tag);
    }

    #[test]
    fn orthonormal_columns_give_unit_diagonal() {
        let h = 0.5;
        let c = chunk(&[
            vec![h, h],
            vec![h, -h],
            vec![h, h],
            vec![h, -h],
        ]);
        let (_, r) = chunk_qr(&c).unwrap();
        for k in 0..2 {
            assert!((r.r[(k, k)].abs() - 1.0).abs() < 1e-15);
        }
        assert!(r.r[(0, 1)].abs() < 1e-15);
    }

    #[test]
    fn non_finite_rejected() {
        let c = chunk(&[vec![1.0, f64::NAN], vec![0.0, 1.0]]);
        assert!(matches!(chunk_qr(&c), Err(RomError::NonFinite(_))));
        assert!(matches!(
            small_svd(&DenseMatrix::from_rows(&[vec![f64::INFINITY]])),
            Err(RomError::NonFinite(_))
        ));
    }

    #[test]
    fn combine_single_factor_is_identity() {
        let r = DenseMatrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 3.0]]);
        let out = combine_r(&[RFactor { tag: ChunkTag(5), r: r.clone() }]).unwrap();
        assert!(out.r.max_abs_diff(&r) < 1e-15);
        assert_eq!(out.q_second.len(), 1);
        assert!(out.q_second[0].1.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn combine_two_identities() {
        let f = |t| RFactor {
            tag: ChunkTag(t),
            r: DenseMatrix::identity(2),
        };
        let out = combine_r(&[f(3), f(1)]).unwrap();
        let root2 = 2f64.sqrt();
        let mut expected = DenseMatrix::identity(2);
        expected.scale_column(0, root2);
        expected.scale_column(1, root2);
        assert!(out.r.max_abs_diff(&expected) < 1e-15);
        assert_eq!(out.q_second[0].0, ChunkTag(1));
        for (_, q) in &out.q_second {
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 / root2 } else { 0.0 };
                    assert!((q[(i, j)].abs() - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn combine_errors() {
        let f = |t, n| RFactor {
            tag: ChunkTag(t),
            r: DenseMatrix::identity(n),
        };
        assert!(matches!(combine_r(&[f(1, 2), f(1, 2)]), Err(RomError::TagCollision(1))));
        assert!(matches!(
            combine_r(&[f(1, 2), f(2, 3)]),
            Err(RomError::DimensionMismatch(_))
        ));
        assert!(matches!(combine_r(&[]), Err(RomError::EmptyInput)));
    }

    #[test]
    fn small_svd_diagonal_and_zero() {
        let r = DenseMatrix::from_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let svd = small_svd(&r).unwrap();
        assert_eq!(svd.sigma, vec![3.0, 2.0, 1.0]);
        assert_eq!(svd.u_r, DenseMatrix::identity(3));
        assert_eq!(svd.v, DenseMatrix::identity(3));

        let z = small_svd(&DenseMatrix::zeros(3, 3)).unwrap();
        assert!(z.sigma.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn sign_convention_prefers_lowest_index_on_ties() {
        let mut u = DenseMatrix::identity(2);
        let mut v = DenseMatrix::from_rows(&[vec![-0.5, 0.6], vec![0.5, -0.8]]);
        fix_signs(&mut u, &mut v);
        assert_eq!(v.column(0), vec![0.5, -0.5]);
        assert_eq!(u.column(0), vec![-1.0, 0.0]);
        assert_eq!(v.column(1), vec![-0.6, 0.8]);
    }

    #[test]
    fn reconstruct_identity_and_permutation() {
        let q = QChunk {
            tag: ChunkTag(0),
            row_ids: vec![0, 1, 2],
            q: DenseMatrix::identity(3),
        };
        let eye = (ChunkTag(0), DenseMatrix::identity(3));
        let out = reconstruct_u(&q, &eye, &DenseMatrix::identity(3)).unwrap();
        assert_eq!(out.rows(), &q.q);
        let perm = DenseMatrix::from_rows(&[
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 0.0, 0.0],
        ]);
        let out = reconstruct_u(&q, &eye, &perm).unwrap();
        assert_eq!(out.rows(), &perm);
        assert_eq!(out.row_ids(), &[0, 1, 2]);
    }

    #[test]
    fn reconstruct_tag_mismatch() {
        let q = QChunk {
            tag: ChunkTag(0),
            row_ids: vec![0],
            q: DenseMatrix::identity(1),
        };
        let other = (ChunkTag(4), DenseMatrix::identity(1));
        assert!(matches!(
            reconstruct_u(&q, &other, &DenseMatrix::identity(1)),
            Err(RomError::TagMismatch { .. })
        ));
    }

    #[test]
    fn rank_one_singular_values() {
        let u = [0.6, 0.8, 0.0];
        let v = [1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt()];
        let f = DenseMatrix::from_fn(3, 2, |i, j| 5.0 * u[i] * v[j]);
        let m = ChunkedMatrix::from_dense(&[0, 1, 2], &f, 2).unwrap();
        let snap = SnapshotMatrix::new(m, vec![0.0, 1.0]).unwrap();
        let svd = tssvd(&snap).unwrap();
        assert!((svd.sigma()[0] - 5.0).abs() < 1e-14);
        assert!(svd.sigma()[1].abs() < 1e-14);
        assert!(svd.reconstruct().max_abs_diff(&f) < 1e-14);
    }

    #[test]
    fn orthonormal_columns_unit_sigma() {
        let h = 0.5;
        let f = DenseMatrix::from_rows(&[
            vec![h, h],
            vec![h, -h],
            vec![h, h],
            vec![h, -h],
        ]);
        let m = ChunkedMatrix::from_dense(&[0, 1, 2, 3], &f, 3).unwrap();
        let svd = tssvd(&SnapshotMatrix::new(m, vec![1.0, 2.0]).unwrap()).unwrap();
        for s in svd.sigma() {
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn bad_schedule_rejected() {
        let m = ChunkedMatrix::from_dense(&[0, 1, 2], &DenseMatrix::identity(3), 2).unwrap();
        let snap = SnapshotMatrix::new(m, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(tssvd_scheduled(&snap, &[0, 0]).is_err());
        assert!(tssvd_scheduled(&snap, &[1, 0]).is_ok());
    }
}
