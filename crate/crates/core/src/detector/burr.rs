//! Burr Type III distribution: CDF `(1 + z^-c)^-d` with `z = (x - loc) / scale`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BurrParams {
    pub c: f64,
    pub d: f64,
    pub loc: f64,
    pub scale: f64,
}

impl BurrParams {
    pub fn new(c: f64, d: f64, loc: f64, scale: f64) -> Result<Self> {
        let p = BurrParams { c, d, loc, scale };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !(pos(self.c) && pos(self.d) && pos(self.scale) && self.loc.is_finite()) {
            return Err(Error::InvalidArgument("burr parameters need c, d, scale > 0"));
        }
        Ok(())
    }

    /// Log density; `-inf` outside the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = (x - self.loc) / self.scale;
        if !(z > 0.0) {
            return f64::NEG_INFINITY;
        }
        let lz = libm::log(z);
        libm::log(self.c) + libm::log(self.d) - libm::log(self.scale) - (self.c + 1.0) * lz
            - (self.d + 1.0) * softplus(-self.c * lz)
    }
}

/// `ln(1 + e^u)` without overflow.
fn softplus(u: f64) -> f64 {
    if u > 0.0 {
        u + libm::log1p(libm::exp(-u))
    } else {
        libm::log1p(libm::exp(u))
    }
}

pub fn burr3_cdf(x: f64, p: &BurrParams) -> f64 {
    let z = (x - p.loc) / p.scale;
    if !(z > 0.0) {
        return 0.0;
    }
    // (1 + z^-c)^-d computed in log space
    libm::exp(-p.d * softplus(-p.c * libm::log(z)))
}

/// Closed-form inverse of [`burr3_cdf`].
pub fn burr3_quantile(p_target: f64, p: &BurrParams) -> Result<f64> {
    if !(p_target > 0.0 && p_target < 1.0) {
        return Err(Error::InvalidArgument("quantile probability must lie in (0, 1)"));
    }
    // p^(-1/d) - 1 = expm1(-ln(p)/d) keeps precision for p near 1.
    let inner = libm::expm1(-libm::log(p_target) / p.d);
    Ok(p.loc + p.scale * libm::pow(inner, -1.0 / p.c))
}

pub fn neg_log_likelihood(samples: &[f64], p: &BurrParams) -> f64 {
    -samples.iter().map(|x| p.ln_pdf(*x)).sum::<f64>()
}

/// Minimum sample count accepted by the fitters.
pub const MIN_FIT_SAMPLES: usize = 50;

/// Maximum-likelihood fit with `loc` pinned just below the sample minimum.
pub fn fit_burr3(samples: &[f64]) -> Result<BurrParams> {
    fit_burr3_with_loc(samples, None)
}

/// Maximum-likelihood fit of `(c, d, scale)` for a fixed location. With
/// `loc = None` it is pinned at `min - 1e-6 * range`.
pub fn fit_burr3_with_loc(samples: &[f64], loc: Option<f64>) -> Result<BurrParams> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_FIT_SAMPLES, got: samples.len() });
    }
    if !samples.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidArgument("samples must be finite"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let range = hi - lo;
    if !(range > 0.0) {
        return Err(Error::DegenerateData("samples have zero range"));
    }
    let loc = match loc {
        Some(l) if l < lo && l.is_finite() => l,
        Some(_) => return Err(Error::InvalidArgument("fixed loc must lie below every sample")),
        None => lo - 1e-6 * range,
    };

    // Log-logistic (d = 1) quantile match: median = loc + scale, and the
    // interquartile ratio gives c.
    let q = |p: f64| sorted[((p * (sorted.len() - 1) as f64) as usize).min(sorted.len() - 1)] - loc;
    let (q25, q50, q75) = (q(0.25), q(0.5), q(0.75));
    let c0 = if q25 > 0.0 && q75 > q25 { 2.0 * libm::log(3.0) / libm::log(q75 / q25) } else { 1.0 };
    let s0 = if q50 > 0.0 { q50 } else { range };
    let start = [libm::log(c0.clamp(1e-3, 1e3)), 0.0, libm::log(s0)];

    let nll = |theta: &[f64; 3]| {
        let p = BurrParams { c: libm::exp(theta[0]), d: libm::exp(theta[1]), loc, scale: libm::exp(theta[2]) };
        let v = neg_log_likelihood(samples, &p);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut best = start;
    let mut best_val = nll(&best);
    for _ in 0..4 {
        let (x, v) = nelder_mead(&nll, best, 0.5, 1e-12, 4000);
        let gain = best_val - v;
        if v < best_val {
            best = x;
            best_val = v;
        }
        if !(gain > 1e-9 * best_val.abs().max(1.0)) {
            break;
        }
    }
    if !best_val.is_finite() {
        return Err(Error::DegenerateData("likelihood is not finite for any parameters tried"));
    }
    BurrParams::new(libm::exp(best[0]), libm::exp(best[1]), loc, libm::exp(best[2]))
}

/// Deterministic Nelder-Mead on R^3.
fn nelder_mead(f: &impl Fn(&[f64; 3]) -> f64, x0: [f64; 3], step: f64, ftol: f64, max_iter: usize) -> ([f64; 3], f64) {
    const N: usize = 3;
    let mut simplex: Vec<([f64; 3], f64)> = Vec::with_capacity(N + 1);
    simplex.push((x0, f(&x0)));
    for i in 0..N {
        let mut x = x0;
        x[i] += step;
        simplex.push((x, f(&x)));
    }
    let sort = |s: &mut Vec<([f64; 3], f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));

    for _ in 0..max_iter {
        sort(&mut simplex);
        let (fb, fw) = (simplex[0].1, simplex[N].1);
        if (fw - fb).abs() <= ftol * (fb.abs() + fw.abs()).max(1e-300) {
            break;
        }
        let mut centroid = [0.0; N];
        for (x, _) in &simplex[..N] {
            for k in 0..N {
                centroid[k] += x[k] / N as f64;
            }
        }
        let along = |t: f64| {
            let mut x = [0.0; N];
            for k in 0..N {
                x[k] = centroid[k] + t * (simplex[N].0[k] - centroid[k]);
            }
            x
        };
        let xr = along(-1.0);
        let fr = f(&xr);
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[N - 1].1 {
            simplex[N] = (xr, fr);
        } else {
            let (xc, fc) = if fr < simplex[N].1 {
                let x = along(-0.5);
                (x, f(&x))
            } else {
                let x = along(0.5);
                (x, f(&x))
            };
            if fc < simplex[N].1.min(fr) {
                simplex[N] = (xc, fc);
            } else {
                let x0 = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    for k in 0..N {
                        v.0[k] = x0[k] + 0.5 * (v.0[k] - x0[k]);
                    }
                    v.1 = f(&v.0);
                }
            }
        }
    }
    sort(&mut simplex);
    simplex[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_examples() {
        let unit = BurrParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(burr3_cdf(0.0, &unit), 0.0);
        assert_eq!(burr3_cdf(-3.0, &unit), 0.0);
        assert!((burr3_cdf(1.0, &unit) - 0.5).abs() < 1e-15);
        assert!((burr3_cdf(1e12, &unit) - 1.0).abs() < 1e-11);
        let p = BurrParams::new(16.926, 1.115, -0.103, 25.985).unwrap();
        assert_eq!(burr3_cdf(p.loc, &p), 0.0);
    }

    #[test]
    fn quantile_examples() {
        let unit = BurrParams::new(1.0, 1.0, 0.0, 1.0).unwrap();
        assert!((burr3_quantile(0.5, &unit).unwrap() - 1.0).abs() < 1e-12);
        let p = BurrParams::new(16.926, 1.115, -0.103, 25.985).unwrap();
        let e = burr3_quantile(0.995, &p).unwrap();
        assert!((e - 35.65).abs() < 0.01, "{e}");
        for pt in [0.01, 0.5, 0.995] {
            assert!((burr3_cdf(burr3_quantile(pt, &p).unwrap(), &p) - pt).abs() < 1e-10);
        }
        assert!(burr3_quantile(0.0, &p).is_err());
        assert!(burr3_quantile(1.0, &p).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(BurrParams::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(BurrParams::new(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(BurrParams::new(1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(matches!(fit_burr3(&[5.0; 80]), Err(Error::DegenerateData(_))));
        assert!(matches!(fit_burr3(&[1.0, 2.0]), Err(Error::InsufficientData { .. })));
        let xs: Vec<f64> = (0..60).map(f64::from).collect();
        assert!(fit_burr3_with_loc(&xs, Some(10.0)).is_err());
        let mut bad = xs.clone();
        bad[3] = f64::NAN;
        assert!(fit_burr3(&bad).is_err());
    }

    #[test]
    fn fitted_params_are_valid() {
        let xs: Vec<f64> = (0..200).map(|i| 20.0 + libm::sin(i as f64 * 0.7) + 0.01 * i as f64).collect();
        let p = fit_burr3(&xs).unwrap();
        assert!(p.c > 0.0 && p.d > 0.0 && p.scale > 0.0);
        assert!(neg_log_likelihood(&xs, &p).is_finite());
    }
}
