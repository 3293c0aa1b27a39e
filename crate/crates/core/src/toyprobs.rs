//! Closed-form parameterized boundary-value problems.
//!
//! * Advection–diffusion: `f' + s f'' = −1` on `[−10, 10]`, `f(±10) = 0`,
//!   `s ∈ [2, 20]` (the ratio of diffusion to advection).
//! * Variable coefficient: `−(a f')' = 1` on `[0, 1]`, `f(0) = f(1) = 0`,
//!   `a(x, s) = 1 + 4s(x² − x)`, `s ∈ [0.1, 0.9]`. The solution blows up at
//!   `(x, s) = (0.5, 1)`, just outside the parameter range.

use serde::{Deserialize, Serialize};

use crate::error::{Result, RomError};
use crate::store::ColumnFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToyProblemKind {
    AdvectionDiffusion,
    VarcoefBvp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyProblem {
    pub kind: ToyProblemKind,
    pub x_domain: (f64, f64),
    pub s_domain: (f64, f64),
}

impl ToyProblem {
    pub fn advection_diffusion() -> Self {
        ToyProblem {
            kind: ToyProblemKind::AdvectionDiffusion,
            x_domain: (-10.0, 10.0),
            s_domain: (2.0, 20.0),
        }
    }

    pub fn varcoef_bvp() -> Self {
        ToyProblem {
            kind: ToyProblemKind::VarcoefBvp,
            x_domain: (0.0, 1.0),
            s_domain: (0.1, 0.9),
        }
    }

    pub fn of_kind(kind: ToyProblemKind) -> Self {
        match kind {
            ToyProblemKind::AdvectionDiffusion => Self::advection_diffusion(),
            ToyProblemKind::VarcoefBvp => Self::varcoef_bvp(),
        }
    }

    pub fn solution(&self, x: f64, s: f64) -> Result<f64> {
        match self.kind {
            ToyProblemKind::AdvectionDiffusion => adv_diff_solution(x, s),
            ToyProblemKind::VarcoefBvp => bvp_solution(x, s),
        }
    }

    /// Uniform spatial grid of `m_points` nodes, endpoints included.
    pub fn x_grid(&self, m_points: usize) -> Vec<f64> {
        let (a, b) = self.x_domain;
        let h = (b - a) / (m_points - 1) as f64;
        (0..m_points)
            .map(|i| if i + 1 == m_points { b } else { a + i as f64 * h })
            .collect()
    }

    /// One column file per parameter value, row ids `0..m_points`.
    pub fn generate(&self, m_points: usize, s_values: &[f64]) -> Result<Vec<ColumnFile>> {
        if m_points < 3 {
            return Err(RomError::InvalidArgument(format!(
                "need at least 3 spatial points, got {m_points}"
            )));
        }
        let mut sorted = s_values.to_vec();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(RomError::DuplicateParameter(w[0]));
        }
        let xs = self.x_grid(m_points);
        let row_ids: Vec<u64> = (0..m_points as u64).collect();
        s_values
            .iter()
            .map(|&s| {
                let values = xs
                    .iter()
                    .map(|&x| self.solution(x, s))
                    .collect::<Result<Vec<_>>>()?;
                ColumnFile::new(s, row_ids.clone(), values)
            })
            .collect()
    }
}

fn in_range(v: f64, (lo, hi): (f64, f64)) -> Result<()> {
    if (lo..=hi).contains(&v) {
        Ok(())
    } else {
        Err(RomError::OutOfDomain { value: v, lo, hi })
    }
}

pub fn adv_diff_solution(x: f64, s: f64) -> Result<f64> {
    in_range(x, (-10.0, 10.0))?;
    in_range(s, (2.0, 20.0))?;
    let e = (20.0 / s).exp();
    Ok((e * (x - 10.0) + 20.0 * ((10.0 - x) / s).exp() - x - 10.0) / (1.0 - e))
}

pub fn bvp_solution(x: f64, s: f64) -> Result<f64> {
    in_range(x, (0.0, 1.0))?;
    in_range(s, (0.1, 0.9))?;
    let a = 1.0 + 4.0 * s * (x * x - x);
    if !(a > 0.0) {
        return Err(RomError::InvalidArgument(format!(
            "coefficient 1 + 4s(x^2 - x) = {a} is not positive at x={x}, s={s}"
        )));
    }
    Ok(-a.ln() / (8.0 * s))
}

/// `a(x, s)` of the variable-coefficient problem.
pub fn bvp_coefficient(x: f64, s: f64) -> f64 {
    1.0 + 4.0 * s * (x * x - x)
}

/// `n` equally spaced values covering `[lo, hi]`, endpoints exact.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i + 1 == n { hi } else { lo + i as f64 * step })
                .collect()
        }
    }
}

/// Midpoints of consecutive grid values.
pub fn midpoints(grid: &[f64]) -> Vec<f64> {
    grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}
