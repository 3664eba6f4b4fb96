//! Least-squares polynomial fits over a fixed sample grid.

use alloc::vec::Vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Vandermonde matrix with columns `t^0 .. t^degree`.
fn vandermonde(ts: &[f64], degree: usize) -> DMatrix<f64> {
    DMatrix::from_fn(ts.len(), degree + 1, |i, j| libm::pow(ts[i], j as f64))
}

/// Coefficients (constant term first) of the least-squares polynomial fit.
pub fn fit_polynomial(ts: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>> {
    if ts.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: ts.len(), got: ys.len() });
    }
    if ts.len() < degree + 1 {
        return Err(Error::InsufficientData { needed: degree + 1, got: ts.len() });
    }
    let v = vandermonde(ts, degree);
    let y = DMatrix::from_column_slice(ys.len(), 1, ys);
    let coef = v
        .svd(true, true)
        .solve(&y, 1e-12)
        .map_err(|_| Error::InvalidArgument("polynomial fit failed"))?;
    Ok(coef.iter().copied().collect())
}

pub fn eval_polynomial(coef: &[f64], t: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Linear map from a window of `window` samples at `t = 1..=window` to the
/// fitted polynomial evaluated at `t = window+1 ..= window+horizon`.
#[derive(Debug, Clone)]
pub struct Extrapolator {
    map: DMatrix<f64>,
}

impl Extrapolator {
    pub fn new(window: usize, horizon: usize, degree: usize) -> Result<Self> {
        if window < degree + 1 {
            return Err(Error::InsufficientData { needed: degree + 1, got: window });
        }
        let ts: Vec<f64> = (1..=window).map(|t| t as f64).collect();
        let ahead: Vec<f64> = (window + 1..=window + horizon).map(|t| t as f64).collect();
        let pinv = vandermonde(&ts, degree)
            .pseudo_inverse(1e-12)
            .map_err(|_| Error::InvalidArgument("degenerate design matrix"))?;
        Ok(Extrapolator { map: vandermonde(&ahead, degree) * pinv })
    }

    pub fn window(&self) -> usize {
        self.map.ncols()
    }

    pub fn horizon(&self) -> usize {
        self.map.nrows()
    }

    /// Extrapolated values for a full window, oldest sample first.
    pub fn apply<'a>(&self, window: impl ExactSizeIterator<Item = &'a f64> + Clone) -> Vec<f64> {
        debug_assert_eq!(window.len(), self.window());
        (0..self.horizon())
            .map(|r| window.clone().enumerate().map(|(c, y)| self.map[(r, c)] * y).sum())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic() {
        let ts: Vec<f64> = (1..=15).map(|t| t as f64).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 3.0 - 0.5 * t + 0.25 * t * t).collect();
        let c = fit_polynomial(&ts, &ys, 2).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-9);
        assert!((c[1] + 0.5).abs() < 1e-9);
        assert!((c[2] - 0.25).abs() < 1e-9);
        assert!((eval_polynomial(&c, 20.0) - (3.0 - 10.0 + 100.0)).abs() < 1e-8);
    }

    #[test]
    fn extrapolator_matches_direct_fit() {
        let ys: Vec<f64> = (1..=15).map(|t| ((t * 7919) % 13) as f64).collect();
        let ts: Vec<f64> = (1..=15).map(|t| t as f64).collect();
        let c = fit_polynomial(&ts, &ys, 2).unwrap();
        let ex = Extrapolator::new(15, 7, 2).unwrap();
        let got = ex.apply(ys.iter());
        for (k, g) in got.iter().enumerate() {
            assert!((g - eval_polynomial(&c, 16.0 + k as f64)).abs() < 1e-9);
        }
    }

    #[test]
    fn too_few_points() {
        assert!(fit_polynomial(&[1.0, 2.0], &[1.0, 2.0], 2).is_err());
        assert!(Extrapolator::new(2, 7, 2).is_err());
    }
}
