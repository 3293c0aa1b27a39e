//! Scalar response surface over the parameter, used as a baseline against
//! quantities of interest derived from the full ROM field.

use crate::error::{Result, RomError};
use crate::interp::{self, CubicSpline, Pchip, SurfaceKind};

#[derive(Debug, Clone)]
enum Fitted {
    Linear,
    Nearest,
    Spline(CubicSpline),
    Pchip(Pchip),
}

#[derive(Debug, Clone)]
pub struct ResponseSurface {
    grid: Vec<f64>,
    values: Vec<f64>,
    fitted: Fitted,
}

impl ResponseSurface {
    /// Sites may arrive in any order; repeated `s` values are rejected.
    pub fn fit(sites: &[(f64, f64)], kind: SurfaceKind) -> Result<Self> {
        if sites.len() < 2 {
            return Err(RomError::InvalidArgument(
                "a response surface needs at least two sites".into(),
            ));
        }
        let mut sorted = sites.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(RomError::DuplicateSite(w[0].0));
        }
        let grid: Vec<f64> = sorted.iter().map(|p| p.0).collect();
        let values: Vec<f64> = sorted.iter().map(|p| p.1).collect();
        let fitted = match kind {
            SurfaceKind::Linear => Fitted::Linear,
            SurfaceKind::Nearest => Fitted::Nearest,
            SurfaceKind::CubicSpline => Fitted::Spline(CubicSpline::new(&grid, &values)),
            SurfaceKind::Pchip => Fitted::Pchip(Pchip::new(&grid, &values)),
        };
        Ok(ResponseSurface {
            grid,
            values,
            fitted,
        })
    }

    pub fn eval(&self, s: f64) -> Result<f64> {
        interp::check_domain(&self.grid, s)?;
        Ok(match &self.fitted {
            Fitted::Linear => interp::linear(&self.grid, &self.values, s),
            Fitted::Nearest => interp::nearest(&self.grid, &self.values, s),
            Fitted::Spline(sp) => sp.eval(s),
            Fitted::Pchip(p) => p.eval(s),
        })
    }
}

/// One-shot fit and evaluation.
pub fn response_surface(sites: &[(f64, f64)], kind: SurfaceKind, query: f64) -> Result<f64> {
    ResponseSurface::fit(sites, kind)?.eval(query)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_quarter() {
        let v = response_surface(&[(1.0, 2.0), (0.0, 0.0)], SurfaceKind::Linear, 0.25).unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn query_at_site() {
        let sites = [(0.0, 1.0), (1.0, 3.0), (2.0, -1.0)];
        for kind in [SurfaceKind::Nearest, SurfaceKind::CubicSpline, SurfaceKind::Pchip] {
            assert_eq!(response_surface(&sites, kind, 1.0).unwrap(), 3.0);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            response_surface(&[(0.0, 1.0), (0.0, 2.0)], SurfaceKind::Linear, 0.0),
            Err(RomError::DuplicateSite(_))
        ));
        assert!(matches!(
            response_surface(&[(0.0, 1.0), (1.0, 2.0)], SurfaceKind::Pchip, 1.5),
            Err(RomError::OutOfDomain { .. })
        ));
    }
}
