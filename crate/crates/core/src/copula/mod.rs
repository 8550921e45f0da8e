//! Gaussian-copula distribution of the FAS peak envelope.
//!
//! With identical Nakagami marginals `F` and copula covariance `R`,
//!
//! ```text
//! P(max_n |h_n| <= r) = Phi_R(b, ..., b),   b = Phi^-1(F(r))
//! ```
//!
//! `R` is either the coefficient-level Jakes matrix `J` or the
//! envelope-level `J_h`; both are PSD-repaired before use.

mod mvn;

pub use mvn::{mvn_cdf, mvn_cdf_with, CdfResult, MvnOptions, MvnSpec};

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::nakagami::{self, NakagamiParams};
use crate::numerics::{clamp_probability, std_normal_quantile_unchecked, DEFAULT_PSD_FLOOR};

/// Peak-envelope CDF for a fixed marginal law and copula covariance.
///
/// Holds the repaired covariance so repeated evaluations over an `r` grid
/// skip the eigen repair.
#[derive(Debug, Clone)]
pub struct PeakDistribution {
    params: NakagamiParams,
    cov: CorrelationMatrix,
}

impl PeakDistribution {
    pub fn new(params: &NakagamiParams, cov: &CorrelationMatrix) -> Result<Self> {
        Ok(Self {
            params: *params,
            cov: cov.psd_repaired(DEFAULT_PSD_FLOOR)?,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.cov.dim()
    }

    pub fn covariance(&self) -> &CorrelationMatrix {
        &self.cov
    }

    pub fn cdf(&self, r: f64, opts: &MvnOptions, seed: u64) -> Result<CdfResult> {
        if !(r >= 0.0) {
            return Err(Error::domain("peak_cdf", format!("r must be >= 0, got {r}")));
        }
        let f = nakagami::cdf(&self.params, r)?;
        if self.cov.dim() == 1 {
            return Ok(CdfResult {
                value: f,
                error_estimate: 0.0,
                n_evaluations: 0,
                converged: true,
            });
        }
        let b = std_normal_quantile_unchecked(clamp_probability(f));
        let spec = MvnSpec::new(self.cov.clone(), vec![b; self.cov.dim()])?;
        mvn_cdf_with(&spec, opts, seed)
    }

    /// Central difference of the CDF with step `h`, integrating both sides
    /// with the same seed and with tolerance scaled by `h`.
    pub fn pdf(&self, r: f64, h: f64, opts: &MvnOptions, seed: u64) -> Result<f64> {
        if !(h > 0.0) || !(r > h) {
            return Err(Error::domain(
                "peak_pdf",
                format!("need h > 0 and r > h, got r={r}, h={h}"),
            ));
        }
        let tight = MvnOptions {
            abs_tol: opts.abs_tol * h,
            ..*opts
        };
        let hi = self.cdf(r + h, &tight, seed)?.value;
        let lo = self.cdf(r - h, &tight, seed)?.value;
        Ok((hi - lo) / (2.0 * h))
    }
}

/// `P(max_n |h_n| <= r)` with absolute tolerance `tol`.
pub fn peak_cdf(
    r: f64,
    params: &NakagamiParams,
    cov: &CorrelationMatrix,
    tol: f64,
    seed: u64,
) -> Result<f64> {
    Ok(PeakDistribution::new(params, cov)?
        .cdf(r, &MvnOptions::with_tol(tol), seed)?
        .value)
}

pub fn peak_cdf_with(
    r: f64,
    params: &NakagamiParams,
    cov: &CorrelationMatrix,
    opts: &MvnOptions,
    seed: u64,
) -> Result<CdfResult> {
    PeakDistribution::new(params, cov)?.cdf(r, opts, seed)
}

/// Density of the peak envelope by central differences of [`peak_cdf`].
pub fn peak_pdf(
    r: f64,
    params: &NakagamiParams,
    cov: &CorrelationMatrix,
    tol: f64,
    seed: u64,
    h: f64,
) -> Result<f64> {
    PeakDistribution::new(params, cov)?.pdf(r, h, &MvnOptions::with_tol(tol), seed)
}

/// Default finite-difference step `1e-3 sqrt(mu)`.
pub fn default_pdf_step(params: &NakagamiParams) -> f64 {
    1e-3 * params.mu().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::{jakes_matrix, CorrelationLevel, FasGeometry};
    use crate::numerics::{std_normal_cdf, std_normal_pdf};

    fn p3() -> NakagamiParams {
        NakagamiParams::new(3.0, 1.0).unwrap()
    }

    /// `P(max <= r)` for two ports via tensor-grid integration of the
    /// bivariate normal density over `(-inf, b]^2`.
    fn brute_force_pair(rho: f64, params: &NakagamiParams, r: f64) -> f64 {
        let f = nakagami::cdf(params, r).unwrap();
        if f <= 0.0 {
            return 0.0;
        }
        let b = std_normal_quantile_unchecked(f);
        // integrate x1 over (-inf, b] by Simpson, inner integral in closed form
        let lo = -10.0;
        let n = 4000;
        let h = (b - lo) / n as f64;
        let s = (1.0 - rho * rho).sqrt();
        let g = |x: f64| std_normal_pdf(x) * std_normal_cdf((b - rho * x) / s);
        let mut acc = g(lo) + g(b);
        for i in 1..n {
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * g(lo + i as f64 * h);
        }
        acc * h / 3.0
    }

    #[test]
    fn single_port_is_marginal() {
        let id = CorrelationMatrix::identity(1, CorrelationLevel::Coefficient);
        for r in [0.0, 0.3, 1.0, 2.2] {
            let v = peak_cdf(r, &p3(), &id, 1e-4, 0).unwrap();
            assert!((v - nakagami::cdf(&p3(), r).unwrap()).abs() < 1e-10);
        }
        let d = peak_pdf(1.0, &p3(), &id, 1e-4, 0, 1e-3).unwrap();
        assert!((d - nakagami::pdf(&p3(), 1.0).unwrap()).abs() < 1e-3);
    }

    #[test]
    fn independent_ports_give_power() {
        let id = CorrelationMatrix::identity(4, CorrelationLevel::Coefficient);
        for r in [0.4, 0.8, 1.2] {
            let f = nakagami::cdf(&p3(), r).unwrap();
            let v = peak_cdf(r, &p3(), &id, 1e-5, 2).unwrap();
            assert!((v - f.powi(4)).abs() < 2e-5);
        }
    }

    #[test]
    fn pair_matches_brute_force() {
        let geom = FasGeometry::new(2, 0.5).unwrap();
        let j = jakes_matrix(&geom).unwrap();
        for r in [0.3, 0.7, 1.0, 1.4] {
            let v = peak_cdf(r, &p3(), &j, 1e-5, 4).unwrap();
            let want = brute_force_pair(j.get(0, 1), &p3(), r);
            assert!((v - want).abs() < 1e-4, "r={r}: {v} vs {want}");
        }
    }

    #[test]
    fn zero_radius_and_bounds() {
        let geom = FasGeometry::new(5, 1.0).unwrap();
        let j = jakes_matrix(&geom).unwrap();
        assert!(peak_cdf(0.0, &p3(), &j, 1e-4, 1).unwrap() < 1e-4);
        assert!(peak_cdf(-0.1, &p3(), &j, 1e-4, 1).is_err());
        let r = 0.9;
        let f = nakagami::cdf(&p3(), r).unwrap();
        let v = peak_cdf(r, &p3(), &CorrelationMatrix::pair(0.6, CorrelationLevel::Envelope).unwrap(), 1e-4, 1)
            .unwrap();
        assert!(f * f - 2e-4 <= v && v <= f + 2e-4);
    }

    #[test]
    fn pdf_argument_checks() {
        let id = CorrelationMatrix::identity(2, CorrelationLevel::Coefficient);
        assert!(peak_pdf(0.0005, &p3(), &id, 1e-4, 0, 1e-3).is_err());
        assert!(peak_pdf(1.0, &p3(), &id, 1e-4, 0, 0.0).is_err());
        assert_eq!(default_pdf_step(&NakagamiParams::new(2.0, 4.0).unwrap()), 2e-3);
    }
}
