//! Multivariate normal lower-orthant probabilities `P(X <= b)`.
//!
//! Genz's sequential conditioning turns the probability into an integral
//! over the unit cube of dimension `N - 1`, which is estimated with a
//! randomly shifted Richtmyer lattice (generators `frac(sqrt(p))` for the
//! first primes, tent-periodized). Variables are reordered by the
//! Gibson-Glasbey-Elston rule so the most constrained ones come first.
//! Points are added in doubling rounds until the 3-sigma error across the
//! random shifts meets the tolerance or the point budget runs out.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::correlation::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::numerics::{std_normal_cdf, std_normal_pdf, std_normal_quantile_unchecked};

/// Conditional variances below this make a variable a hard constraint.
const DEGENERATE_PIVOT: f64 = 1e-12;
const FIRST_ROUND: usize = 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct MvnSpec {
    covariance: CorrelationMatrix,
    upper_limits: Vec<f64>,
}

impl MvnSpec {
    pub fn new(covariance: CorrelationMatrix, upper_limits: Vec<f64>) -> Result<Self> {
        if upper_limits.len() != covariance.dim() {
            return Err(Error::Shape(format!(
                "{} limits for a {}-dimensional covariance",
                upper_limits.len(),
                covariance.dim()
            )));
        }
        if upper_limits.iter().any(|b| b.is_nan()) {
            return Err(Error::InvalidArgument("NaN upper limit".into()));
        }
        Ok(Self {
            covariance,
            upper_limits,
        })
    }

    pub fn covariance(&self) -> &CorrelationMatrix {
        &self.covariance
    }

    pub fn upper_limits(&self) -> &[f64] {
        &self.upper_limits
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvnOptions {
    pub abs_tol: f64,
    /// When positive, the error must also be below `rel_tol * value`.
    pub rel_tol: f64,
    /// Total integrand evaluations over all shifts.
    pub max_points: usize,
    pub shifts: usize,
}

impl Default for MvnOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-4,
            rel_tol: 0.0,
            max_points: 1 << 22,
            shifts: 8,
        }
    }
}

impl MvnOptions {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol <= 0.1) {
            return Err(Error::domain(
                "mvn_cdf",
                format!("tol must lie in (0, 0.1], got {}", self.abs_tol),
            ));
        }
        if !(self.rel_tol >= 0.0) {
            return Err(Error::domain("mvn_cdf", "rel_tol must be >= 0"));
        }
        if self.shifts < 2 {
            return Err(Error::domain("mvn_cdf", "need at least two random shifts"));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        if self.rel_tol > 0.0 {
            self.abs_tol.min(self.rel_tol * value)
        } else {
            self.abs_tol
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdfResult {
    pub value: f64,
    /// Three standard errors across the random shifts (0 for exact cases).
    pub error_estimate: f64,
    pub n_evaluations: usize,
    /// False when the point budget ran out before the tolerance was met.
    pub converged: bool,
}

impl CdfResult {
    fn exact(value: f64) -> Self {
        Self {
            value,
            error_estimate: 0.0,
            n_evaluations: 0,
            converged: true,
        }
    }
}

/// `P(X <= b)` with absolute tolerance `tol`.
pub fn mvn_cdf(spec: &MvnSpec, tol: f64, seed: u64) -> Result<CdfResult> {
    mvn_cdf_with(spec, &MvnOptions::with_tol(tol), seed)
}

pub fn mvn_cdf_with(spec: &MvnSpec, opts: &MvnOptions, seed: u64) -> Result<CdfResult> {
    opts.validate()?;
    let b = spec.upper_limits();
    if b.contains(&f64::NEG_INFINITY) {
        return Ok(CdfResult::exact(0.0));
    }
    let keep: Vec<usize> = (0..b.len()).filter(|&i| b[i].is_finite()).collect();
    match keep.len() {
        0 => return Ok(CdfResult::exact(1.0)),
        1 => return Ok(CdfResult::exact(std_normal_cdf(b[keep[0]]))),
        _ => {}
    }
    let sigma = spec.covariance().entries();
    let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| sigma[(keep[i], keep[j])]);
    let limits: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
    let problem = Conditioned::new(&sub, &limits)?;
    Ok(problem.integrate(opts, seed))
}

/// Reordered Cholesky factor and limits ready for integration.
struct Conditioned {
    n: usize,
    /// Lower factor, row-major.
    l: Vec<f64>,
    b: Vec<f64>,
    degenerate: Vec<bool>,
}

impl Conditioned {
    fn new(sigma: &DMatrix<f64>, limits: &[f64]) -> Result<Self> {
        let n = limits.len();
        let mut a = sigma.clone();
        let mut b = limits.to_vec();
        let mut l = DMatrix::<f64>::zeros(n, n);
        let mut y = vec![0.0; n];
        let mut degenerate = vec![false; n];
        let scale = (0..n).map(|i| a[(i, i)].abs()).fold(1.0, f64::max);

        for i in 0..n {
            // choose the remaining variable with the smallest conditional
            // probability of staying below its limit
            let mut best = i;
            let mut best_p = f64::INFINITY;
            for j in i..n {
                let s: f64 = (0..i).map(|k| l[(j, k)] * y[k]).sum();
                let var = a[(j, j)] - (0..i).map(|k| l[(j, k)].powi(2)).sum::<f64>();
                let p = if var > DEGENERATE_PIVOT {
                    std_normal_cdf((b[j] - s) / var.sqrt())
                } else if s <= b[j] {
                    1.0
                } else {
                    0.0
                };
                if p < best_p {
                    best_p = p;
                    best = j;
                }
            }
            if best != i {
                a.swap_rows(i, best);
                a.swap_columns(i, best);
                l.swap_rows(i, best);
                b.swap(i, best);
            }
            let var = a[(i, i)] - (0..i).map(|k| l[(i, k)].powi(2)).sum::<f64>();
            if var < -1e-8 * scale {
                return Err(Error::Cholesky { pivot: i, value: var });
            }
            let s: f64 = (0..i).map(|k| l[(i, k)] * y[k]).sum();
            if var <= DEGENERATE_PIVOT {
                degenerate[i] = true;
                y[i] = 0.0;
                continue;
            }
            let d = var.sqrt();
            l[(i, i)] = d;
            for j in i + 1..n {
                let dot: f64 = (0..i).map(|k| l[(j, k)] * l[(i, k)]).sum();
                l[(j, i)] = (a[(j, i)] - dot) / d;
            }
            // expected value of the truncated standard normal below the limit
            let z = (b[i] - s) / d;
            let pz = std_normal_cdf(z);
            y[i] = if pz > 1e-300 {
                -std_normal_pdf(z) / pz
            } else {
                z
            };
        }

        let mut flat = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..=r {
                flat[r * n + c] = l[(r, c)];
            }
        }
        Ok(Self {
            n,
            l: flat,
            b,
            degenerate,
        })
    }

    /// Integrand at `w` in the unit cube of dimension `n - 1`; `y` is scratch.
    fn integrand(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let n = self.n;
        let mut f = 1.0;
        let mut dim = 0;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: f64 = row.iter().zip(&y[..i]).map(|(a, b)| a * b).sum();
            if self.degenerate[i] {
                if s > self.b[i] {
                    return 0.0;
                }
                y[i] = 0.0;
                continue;
            }
            let e = std_normal_cdf((self.b[i] - s) / self.l[i * n + i]);
            f *= e;
            if f == 0.0 {
                return 0.0;
            }
            if i + 1 < n {
                let u = (w[dim] * e).clamp(1e-300, 1.0 - 1e-16);
                y[i] = std_normal_quantile_unchecked(u);
                dim += 1;
            }
        }
        f
    }

    fn integrate(&self, opts: &MvnOptions, seed: u64) -> CdfResult {
        let dims = self.n - 1;
        let gen = richtmyer(dims);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shifts: Vec<Vec<f64>> = (0..opts.shifts)
            .map(|_| (0..dims).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut sums = vec![0.0; opts.shifts];
        let per_shift_budget = (opts.max_points / opts.shifts).max(FIRST_ROUND);
        let mut done = 0usize;
        let mut round = FIRST_ROUND;
        loop {
            let (start, end) = (done, (done + round).min(per_shift_budget));
            let add: Vec<f64> = shifts
                .par_iter()
                .map(|shift| self.lattice_sum(&gen, shift, start, end))
                .collect();
            for (s, a) in sums.iter_mut().zip(add) {
                *s += a;
            }
            done = end;
            let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
            let q = means.len() as f64;
            let value = means.iter().sum::<f64>() / q;
            let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (q - 1.0);
            let error = 3.0 * (var / q).sqrt();
            let converged = error < opts.target(value);
            if converged || done >= per_shift_budget {
                return CdfResult {
                    value: value.clamp(0.0, 1.0),
                    error_estimate: error,
                    n_evaluations: done * opts.shifts,
                    converged,
                };
            }
            round = done;
        }
    }

    fn lattice_sum(&self, gen: &[f64], shift: &[f64], start: usize, end: usize) -> f64 {
        let mut w = vec![0.0; gen.len()];
        let mut y = vec![0.0; self.n];
        let mut acc = 0.0;
        for j in start..end {
            let jf = (j + 1) as f64;
            for ((wk, g), s) in w.iter_mut().zip(gen).zip(shift) {
                let x = (jf * g + s).fract();
                *wk = (2.0 * x - 1.0).abs();
            }
            acc += self.integrand(&w, &mut y);
        }
        acc
    }
}

/// `frac(sqrt(p_k))` for the first `dims` primes.
fn richtmyer(dims: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(dims);
    let mut c = 2u64;
    while out.len() < dims {
        if (2..).take_while(|d| d * d <= c).all(|d| !c.is_multiple_of(d)) {
            out.push((c as f64).sqrt().fract());
        }
        c += 1;
    }
    out
}
