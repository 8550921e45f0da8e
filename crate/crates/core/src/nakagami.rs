//! Nakagami-m envelope law.
//!
//! ```text
//! f(r) = 2 m^m / (Gamma(m) mu^m) r^(2m-1) exp(-m r^2 / mu)
//! F(r) = P(m, m r^2 / mu)
//! ```
//!
//! `m` is the fading severity (m = 1 is Rayleigh) and `mu = E[r^2]` the
//! mean channel gain.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gamma_p_inv, gamma_pq, ln_gamma};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NakagamiParams {
    m: f64,
    mu: f64,
}

impl NakagamiParams {
    pub fn new(m: f64, mu: f64) -> Result<Self> {
        if !(m >= 0.5 && m.is_finite()) {
            return Err(Error::domain("NakagamiParams", format!("m must be >= 0.5, got {m}")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::domain("NakagamiParams", format!("mu must be > 0, got {mu}")));
        }
        Ok(Self { m, mu })
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `m` as an integer when it is one (the physical generator needs this).
    pub fn integer_shape(&self) -> Option<usize> {
        (self.m.fract() == 0.0 && self.m >= 1.0).then_some(self.m as usize)
    }
}

fn check_radius(func: &'static str, r: f64) -> Result<()> {
    if !(r >= 0.0) {
        return Err(Error::domain(func, format!("r must be >= 0, got {r}")));
    }
    Ok(())
}

pub fn pdf(p: &NakagamiParams, r: f64) -> Result<f64> {
    check_radius("nakagami::pdf", r)?;
    let (m, mu) = (p.m, p.mu);
    if r == 0.0 {
        return Ok(if m == 0.5 {
            (2.0 / (std::f64::consts::PI * mu)).sqrt()
        } else {
            0.0
        });
    }
    if r.is_infinite() {
        return Ok(0.0);
    }
    let log_f = std::f64::consts::LN_2 + m * (m / mu).ln() - ln_gamma(m)
        + (2.0 * m - 1.0) * r.ln()
        - m * r * r / mu;
    Ok(log_f.exp())
}

pub fn cdf(p: &NakagamiParams, r: f64) -> Result<f64> {
    check_radius("nakagami::cdf", r)?;
    Ok(gamma_pq(p.m, p.m * r * r / p.mu).0)
}

/// `1 - cdf`, computed directly so it keeps relative precision in the tail.
pub fn survival(p: &NakagamiParams, r: f64) -> Result<f64> {
    check_radius("nakagami::survival", r)?;
    Ok(gamma_pq(p.m, p.m * r * r / p.mu).1)
}

/// Inverse CDF on `[0, 1)`.
pub fn quantile(p: &NakagamiParams, u: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&u) {
        return Err(Error::domain(
            "nakagami::quantile",
            format!("u must lie in [0, 1), got {u}"),
        ));
    }
    Ok(quantile_from_tails(p, u, 1.0 - u))
}

/// Quantile given both tail probabilities (`lower + upper = 1`), so samplers
/// can pass an accurately computed upper tail.
#[inline]
pub(crate) fn quantile_from_tails(p: &NakagamiParams, lower: f64, upper: f64) -> f64 {
    let t = gamma_p_inv(p.m, lower, upper);
    (p.mu * t / p.m).sqrt()
}
