//! One-sided (Hestenes) Jacobi SVD of a small square matrix.
//!
//! Columns of a working copy `W = A·V` are rotated pairwise until mutually
//! orthogonal to working precision. Then `σ_k = ‖w_k‖` and `u_k = w_k / σ_k`.
//! The converged columns are orthogonal relative to their own norms, so the
//! left vectors stay orthonormal even for tiny singular values.

use crate::dense::DenseMatrix;

const MAX_SWEEPS: usize = 80;

pub(crate) struct JacobiSvd {
    pub u: DenseMatrix,
    pub sigma: Vec<f64>,
    pub v: DenseMatrix,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn rotate(a: &mut [f64], b: &mut [f64], c: f64, s: f64) {
    for (x, y) in a.iter_mut().zip(b.iter_mut()) {
        let (xa, yb) = (*x, *y);
        *x = c * xa - s * yb;
        *y = s * xa + c * yb;
    }
}

fn pair_mut(cols: &mut [Vec<f64>], p: usize, q: usize) -> (&mut Vec<f64>, &mut Vec<f64>) {
    debug_assert!(p < q);
    let (lo, hi) = cols.split_at_mut(q);
    (&mut lo[p], &mut hi[0])
}

/// Singular values come back sorted descending (stable on ties); `u` and `v`
/// are `n × n` with orthonormal columns.
pub(crate) fn jacobi_svd(a: &DenseMatrix) -> JacobiSvd {
    let n = a.cols();
    assert_eq!(a.rows(), n, "jacobi_svd expects a square matrix");
    let tol = f64::EPSILON * (n.max(1) as f64);

    let mut w: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&w[p], &w[p]);
                let beta = dot(&w[q], &w[q]);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                let gamma = dot(&w[p], &w[q]);
                if gamma.abs() <= tol * (alpha.sqrt() * beta.sqrt()) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (wp, wq) = pair_mut(&mut w, p, q);
                rotate(wp, wq, c, s);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = w.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma: Vec<f64> = order.iter().map(|&k| norms[k]).collect();
    let mut u_cols: Vec<Option<Vec<f64>>> = order
        .iter()
        .map(|&k| {
            (norms[k] > 0.0).then(|| w[k].iter().map(|x| x / norms[k]).collect())
        })
        .collect();
    complete_basis(&mut u_cols, n);

    let u = DenseMatrix::from_fn(n, n, |i, j| u_cols[j].as_ref().expect("completed")[i]);
    let v = DenseMatrix::from_fn(n, n, |i, j| v[order[j]][i]);
    JacobiSvd { u, sigma, v }
}

/// Fills missing columns (zero singular values) with unit vectors orthogonal
/// to every other column, drawn from the standard basis by Gram–Schmidt.
fn complete_basis(cols: &mut [Option<Vec<f64>>], n: usize) {
    let mut candidate = 0;
    for j in 0..cols.len() {
        if cols[j].is_some() {
            continue;
        }
        while candidate < n {
            let mut e = vec![0.0; n];
            e[candidate] = 1.0;
            candidate += 1;
            // Two passes of classical Gram–Schmidt.
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let proj = dot(&e, other);
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = dot(&e, &e).sqrt();
            if norm > 0.5 {
                cols[j] = Some(e.iter().map(|x| x / norm).collect());
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_input() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 3.0, 0.0],
            vec![0.0, 0.0, 2.0],
        ]);
        let svd = jacobi_svd(&a);
        assert_eq!(svd.sigma, vec![3.0, 2.0, 1.0]);
        let rebuilt = DenseMatrix::from_fn(3, 3, |i, j| {
            (0..3).map(|k| svd.u[(i, k)] * svd.sigma[k] * svd.v[(j, k)]).sum()
        });
        assert!(rebuilt.max_abs_diff(&a) < 1e-15);
    }

    #[test]
    fn zero_matrix_still_orthonormal() {
        let svd = jacobi_svd(&DenseMatrix::zeros(4, 4));
        assert!(svd.sigma.iter().all(|&s| s == 0.0));
        let gram = svd.u.transpose().matmul(&svd.u);
        assert!(gram.max_abs_diff(&DenseMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn rank_one() {
        let a = DenseMatrix::from_fn(3, 3, |i, j| ((i + 1) * (j + 1)) as f64);
        let svd = jacobi_svd(&a);
        assert!((svd.sigma[0] - 14.0).abs() < 1e-13);
        assert!(svd.sigma[1] < 1e-14 && svd.sigma[2] < 1e-14);
        let gram = svd.u.transpose().matmul(&svd.u);
        assert!(gram.max_abs_diff(&DenseMatrix::identity(3)) < 1e-14);
    }
}
