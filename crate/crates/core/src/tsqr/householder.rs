//! Thin Householder QR for a single block.

use crate::dense::DenseMatrix;

/// Result of [`householder_qr`]: `q` is `m × n` and `r` is `n × n`.
///
/// When `m < n` only `m` reflectors exist; `q` carries zero columns past `m`
/// and `r` carries zero rows past `m`, so `q · r` still equals the input.
/// The diagonal of `r` is nonnegative.
pub(crate) struct ThinQr {
    pub q: DenseMatrix,
    pub r: DenseMatrix,
}

/// 2-norm with scaling so squares of large entries do not overflow.
fn scaled_norm(x: &[f64]) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    let ssq: f64 = x.iter().map(|v| (v / scale) * (v / scale)).sum();
    scale * ssq.sqrt()
}

pub(crate) fn householder_qr(a: &DenseMatrix) -> ThinQr {
    let m = a.rows();
    let n = a.cols();
    let k = m.min(n);

    // Column-major working copy: cols[j][i] = a[i, j].
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    // Reflector j acts on rows j..m with v[0] = 1 implied.
    let mut taus = vec![0.0; k];

    for j in 0..k {
        let (head, tail) = cols.split_at_mut(j + 1);
        let x = &mut head[j][j..];
        let below = scaled_norm(&x[1..]);
        if below == 0.0 {
            taus[j] = 0.0;
            continue;
        }
        let x0 = x[0];
        let alpha = scaled_norm(&[x0, below]);
        let beta = if x0 >= 0.0 { -alpha } else { alpha };
        let tau = (beta - x0) / beta;
        let inv = 1.0 / (x0 - beta);
        for xi in x[1..].iter_mut() {
            *xi *= inv;
        }
        x[0] = beta;
        taus[j] = tau;

        let v_tail = &x[1..];
        for col in tail.iter_mut() {
            let c = &mut col[j..];
            let w = c[0] + v_tail.iter().zip(&c[1..]).map(|(v, y)| v * y).sum::<f64>();
            let tw = tau * w;
            c[0] -= tw;
            for (ci, v) in c[1..].iter_mut().zip(v_tail) {
                *ci -= tw * v;
            }
        }
    }

    let mut r = DenseMatrix::zeros(n, n);
    for (j, col) in cols.iter().enumerate() {
        for i in 0..k.min(j + 1) {
            r[(i, j)] = col[i];
        }
    }

    // Accumulate Q = H_0 H_1 ... H_{k-1} applied to the first k columns of I.
    let mut q_cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect();
    for j in (0..k).rev() {
        let tau = taus[j];
        if tau == 0.0 {
            continue;
        }
        let v_tail = &cols[j][j + 1..];
        for qc in q_cols[j..].iter_mut() {
            let c = &mut qc[j..];
            let w = c[0] + v_tail.iter().zip(&c[1..]).map(|(v, y)| v * y).sum::<f64>();
            let tw = tau * w;
            c[0] -= tw;
            for (ci, v) in c[1..].iter_mut().zip(v_tail) {
                *ci -= tw * v;
            }
        }
    }

    // Nonnegative diagonal for a deterministic factorization.
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            for c in j..n {
                r[(j, c)] = -r[(j, c)];
            }
            for v in q_cols[j].iter_mut() {
                *v = -*v;
            }
        }
    }

    let q = DenseMatrix::from_fn(m, n, |i, j| if j < k { q_cols[j][i] } else { 0.0 });
    ThinQr { q, r }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_exact() {
        let qr = householder_qr(&DenseMatrix::identity(3));
        assert_eq!(qr.q, DenseMatrix::identity(3));
        assert_eq!(qr.r, DenseMatrix::identity(3));
    }

    #[test]
    fn wide_block_pads() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let qr = householder_qr(&a);
        assert_eq!((qr.q.rows(), qr.q.cols()), (2, 3));
        assert_eq!(qr.r.row(2), &[0.0, 0.0, 0.0]);
        assert!(qr.q.matmul(&qr.r).max_abs_diff(&a) < 1e-14);
    }

    #[test]
    fn small_reconstruction() {
        let a = DenseMatrix::from_rows(&[
            vec![2.0, -1.0],
            vec![1.0, 3.0],
            vec![-4.0, 0.5],
            vec![0.0, 1.0],
        ]);
        let qr = householder_qr(&a);
        assert!(qr.q.matmul(&qr.r).max_abs_diff(&a) < 1e-14);
        assert_eq!(qr.r[(1, 0)], 0.0);
        assert!(qr.r[(0, 0)] > 0.0 && qr.r[(1, 1)] > 0.0);
        let gram = qr.q.transpose().matmul(&qr.q);
        assert!(gram.max_abs_diff(&DenseMatrix::identity(2)) < 1e-15);
    }
}
