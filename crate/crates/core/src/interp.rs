//! One-dimensional interpolants on a strictly increasing grid.
//!
//! Every interpolant here reproduces its nodes exactly and refuses to
//! extrapolate; callers check the domain first.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};

/// Interpolant applied to the right singular vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpolantKind {
    #[default]
    Linear,
    Pchip,
}

impl std::str::FromStr for InterpolantKind {
    type Err = RomError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(InterpolantKind::Linear),
            "pchip" => Ok(InterpolantKind::Pchip),
            other => Err(RomError::InvalidArgument(format!("unknown interpolant {other:?}"))),
        }
    }
}

/// Interpolants offered for scalar response surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Linear,
    Nearest,
    CubicSpline,
    Pchip,
}

impl From<InterpolantKind> for SurfaceKind {
    fn from(kind: InterpolantKind) -> Self {
        match kind {
            InterpolantKind::Linear => SurfaceKind::Linear,
            InterpolantKind::Pchip => SurfaceKind::Pchip,
        }
    }
}

/// Index `j` of the interval `[x_j, x_{j+1}]` containing `s`; the last node
/// maps to the last interval.
pub fn bracket(grid: &[f64], s: f64) -> usize {
    debug_assert!(grid.len() >= 2);
    let j = grid.partition_point(|&x| x <= s);
    j.saturating_sub(1).min(grid.len() - 2)
}

pub fn check_domain(grid: &[f64], s: f64) -> Result<()> {
    let (lo, hi) = (grid[0], grid[grid.len() - 1]);
    if !(lo..=hi).contains(&s) {
        return Err(RomError::OutOfDomain { value: s, lo, hi });
    }
    Ok(())
}

/// Piecewise-linear interpolation. Exact at nodes.
pub fn linear(grid: &[f64], values: &[f64], s: f64) -> f64 {
    let j = bracket(grid, s);
    if s == grid[j + 1] {
        return values[j + 1];
    }
    let t = (s - grid[j]) / (grid[j + 1] - grid[j]);
    values[j] + t * (values[j + 1] - values[j])
}

/// Weights `w_j(s)` with `linear(grid, y, s) == Σ_j w_j y_j` (up to rounding).
pub fn linear_weights(grid: &[f64], s: f64) -> Vec<f64> {
    let mut w = vec![0.0; grid.len()];
    let j = bracket(grid, s);
    if s == grid[j + 1] {
        w[j + 1] = 1.0;
        return w;
    }
    let t = (s - grid[j]) / (grid[j + 1] - grid[j]);
    w[j] = 1.0 - t;
    w[j + 1] = t;
    w
}

/// Nearest node; a query exactly halfway goes to the right node.
pub fn nearest(grid: &[f64], values: &[f64], s: f64) -> f64 {
    let j = bracket(grid, s);
    if s - grid[j] < grid[j + 1] - s {
        values[j]
    } else {
        values[j + 1]
    }
}

fn hermite(grid: &[f64], values: &[f64], slopes: &[f64], s: f64) -> f64 {
    let j = bracket(grid, s);
    if s == grid[j + 1] {
        return values[j + 1];
    }
    let h = grid[j + 1] - grid[j];
    let t = s - grid[j];
    let delta = (values[j + 1] - values[j]) / h;
    let c = (3.0 * delta - 2.0 * slopes[j] - slopes[j + 1]) / h;
    let b = (slopes[j] - 2.0 * delta + slopes[j + 1]) / (h * h);
    values[j] + t * (slopes[j] + t * (c + t * b))
}

/// Shape-preserving piecewise cubic Hermite interpolant (Fritsch–Carlson
/// slopes with harmonic weighting and the three-point one-sided end rule).
#[derive(Debug, Clone)]
pub struct Pchip {
    grid: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(grid: &[f64], values: &[f64]) -> Self {
        let n = grid.len();
        assert!(n >= 2 && values.len() == n);
        let h: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (values[k + 1] - values[k]) / h[k]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d.fill(delta[0]);
        } else {
            for k in 1..n - 1 {
                if delta[k - 1] * delta[k] > 0.0 {
                    let w1 = 2.0 * h[k] + h[k - 1];
                    let w2 = h[k] + 2.0 * h[k - 1];
                    d[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
                }
            }
            d[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Pchip {
            grid: grid.to_vec(),
            values: values.to_vec(),
            slopes: d,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        hermite(&self.grid, &self.values, &self.slopes, s)
    }
}

fn end_slope(h0: f64, h1: f64, del0: f64, del1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if d.signum() != del0.signum() || del0 == 0.0 {
        0.0
    } else if del0.signum() != del1.signum() && d.abs() > (3.0 * del0).abs() {
        3.0 * del0
    } else {
        d
    }
}

/// Cubic spline with not-a-knot end conditions. Two nodes give the line and
/// three nodes the interpolating parabola.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    grid: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the nodes.
    curvature: Vec<f64>,
}

impl CubicSpline {
    pub fn new(grid: &[f64], values: &[f64]) -> Self {
        let n = grid.len();
        assert!(n >= 2 && values.len() == n);
        let h: Vec<f64> = grid.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|k| (values[k + 1] - values[k]) / h[k]).collect();
        let curvature = match n {
            2 => vec![0.0; 2],
            3 => vec![2.0 * (delta[1] - delta[0]) / (h[0] + h[1]); 3],
            _ => {
                let mut a = vec![vec![0.0; n]; n];
                let mut rhs = vec![0.0; n];
                a[0][0] = h[1];
                a[0][1] = -(h[0] + h[1]);
                a[0][2] = h[0];
                for i in 1..n - 1 {
                    a[i][i - 1] = h[i - 1];
                    a[i][i] = 2.0 * (h[i - 1] + h[i]);
                    a[i][i + 1] = h[i];
                    rhs[i] = 6.0 * (delta[i] - delta[i - 1]);
                }
                a[n - 1][n - 3] = h[n - 2];
                a[n - 1][n - 2] = -(h[n - 3] + h[n - 2]);
                a[n - 1][n - 1] = h[n - 3];
                solve_dense(a, rhs)
            }
        };
        CubicSpline {
            grid: grid.to_vec(),
            values: values.to_vec(),
            curvature,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        let g = &self.grid;
        let j = bracket(g, s);
        if s == g[j + 1] {
            return self.values[j + 1];
        }
        let h = g[j + 1] - g[j];
        let a = (g[j + 1] - s) / h;
        let b = (s - g[j]) / h;
        let (m0, m1) = (self.curvature[j], self.curvature[j + 1]);
        a * self.values[j]
            + b * self.values[j + 1]
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0
    }
}

/// Gaussian elimination with partial pivoting for the small spline system.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    x
}

/// Evaluates the interpolant of kind `kind` through `(grid, values)` at `s`.
/// The caller guarantees `s` is inside the grid.
pub fn eval(kind: SurfaceKind, grid: &[f64], values: &[f64], s: f64) -> f64 {
    match kind {
        SurfaceKind::Linear => linear(grid, values, s),
        SurfaceKind::Nearest => nearest(grid, values, s),
        SurfaceKind::CubicSpline => CubicSpline::new(grid, values).eval(s),
        SurfaceKind::Pchip => Pchip::new(grid, values).eval(s),
    }
}
