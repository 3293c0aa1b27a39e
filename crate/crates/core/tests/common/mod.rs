//! Independent oracles shared by the integration tests. Nothing here calls
//! into the factorization code under test.
#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use romkit::{ChunkedMatrix, DenseMatrix, SnapshotMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_dense(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn to_na(m: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

pub fn from_na(m: &DMatrix<f64>) -> DenseMatrix {
    DenseMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Random cut of `rows` into `parts` nonempty pieces.
pub fn uneven_sizes(rng: &mut ChaCha8Rng, rows: usize, parts: usize) -> Vec<usize> {
    assert!(parts >= 1 && parts <= rows);
    let mut cuts: Vec<usize> = Vec::new();
    while cuts.len() < parts - 1 {
        let c = rng.gen_range(1..rows);
        if !cuts.contains(&c) {
            cuts.push(c);
        }
    }
    cuts.sort_unstable();
    let mut sizes = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(rows)) {
        sizes.push(c - prev);
        prev = c;
    }
    sizes
}

pub fn snapshot(dense: &DenseMatrix, sizes: &[usize], grid: Vec<f64>) -> SnapshotMatrix {
    let ids: Vec<u64> = (0..dense.rows() as u64).collect();
    let m = ChunkedMatrix::from_dense_with_sizes(&ids, dense, sizes).unwrap();
    SnapshotMatrix::new(m, grid).unwrap()
}

pub fn uniform_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| j as f64).collect()
}

/// Dense thin SVD via nalgebra, sorted descending, with the same sign rule
/// as the library (largest-|.| entry of each V column positive).
pub struct DenseSvd {
    pub u: DMatrix<f64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub fn dense_svd(m: &DenseMatrix) -> DenseSvd {
    let a = to_na(m);
    let svd = a.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let n = svd.singular_values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let mut uu = DMatrix::zeros(u.nrows(), n);
    let mut vv = DMatrix::zeros(vt.ncols(), n);
    let mut sigma = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        sigma.push(svd.singular_values[src]);
        uu.set_column(dst, &u.column(src));
        vv.set_column(dst, &vt.row(src).transpose());
    }
    for k in 0..n {
        let mut pivot = 0;
        for i in 1..vv.nrows() {
            if vv[(i, k)].abs() > vv[(pivot, k)].abs() {
                pivot = i;
            }
        }
        if vv[(pivot, k)] < 0.0 {
            vv.column_mut(k).neg_mut();
            uu.column_mut(k).neg_mut();
        }
    }
    DenseSvd { u: uu, sigma, v: vv }
}

/// Rank-`r` truncation `Σ_{k<r} σ_k u_k v_kᵀ` from the dense oracle.
pub fn truncation(svd: &DenseSvd, r: usize) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(svd.u.nrows(), svd.v.nrows());
    for k in 0..r {
        out += svd.sigma[k] * svd.u.column(k) * svd.v.column(k).transpose();
    }
    out
}

/// Piecewise-linear interpolation written out independently of the library.
pub fn lerp_oracle(grid: &[f64], values: &[f64], s: f64) -> f64 {
    for j in 0..grid.len() - 1 {
        if s >= grid[j] && s <= grid[j + 1] {
            let t = (s - grid[j]) / (grid[j + 1] - grid[j]);
            return (1.0 - t) * values[j] + t * values[j + 1];
        }
    }
    panic!("query {s} outside grid");
}

/// Thomas algorithm for a tridiagonal system; `sub[0]` and `sup[n-1]` unused.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let m = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / m } else { 0.0 };
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Second-order finite-difference solve of `f' + s f'' = −1` on [−10, 10]
/// with homogeneous Dirichlet conditions; returns (x grid, f).
pub fn fd_advection_diffusion(s: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 20.0 / (nodes - 1) as f64;
    let x: Vec<f64> = (0..nodes).map(|i| -10.0 + i as f64 * h).collect();
    let m = nodes - 2;
    let lo = -1.0 / (2.0 * h) + s / (h * h);
    let di = -2.0 * s / (h * h);
    let up = 1.0 / (2.0 * h) + s / (h * h);
    let inner = thomas(&vec![lo; m], &vec![di; m], &vec![up; m], &vec![-1.0; m]);
    let mut f = vec![0.0; nodes];
    f[1..nodes - 1].copy_from_slice(&inner);
    (x, f)
}

/// Conservative finite-difference solve of `−(a f')' = 1` on [0, 1].
pub fn fd_varcoef(s: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let h = 1.0 / (nodes - 1) as f64;
    let x: Vec<f64> = (0..nodes).map(|i| i as f64 * h).collect();
    let a = |x: f64| 1.0 + 4.0 * s * (x * x - x);
    let m = nodes - 2;
    let (mut sub, mut diag, mut sup) = (vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    for k in 0..m {
        let xi = x[k + 1];
        let (ap, am) = (a(xi + h / 2.0), a(xi - h / 2.0));
        sub[k] = -am / (h * h);
        diag[k] = (ap + am) / (h * h);
        sup[k] = -ap / (h * h);
    }
    let inner = thomas(&sub, &diag, &sup, &vec![1.0; m]);
    let mut f = vec![0.0; nodes];
    f[1..nodes - 1].copy_from_slice(&inner);
    (x, f)
}

/// Spearman rank correlation (no ties expected).
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
        let mut r = vec![0.0; v.len()];
        for (rank, &i) in idx.iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - mean) * (y - mean)).sum();
    let var: f64 = ra.iter().map(|x| (x - mean) * (x - mean)).sum();
    cov / var
}
