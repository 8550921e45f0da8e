//! Empirical distribution estimates used to validate generated ensembles.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Empirical CDF `#{x_i <= r} / K` at every grid point.
pub fn ecdf(samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("ecdf needs at least one sample".into()));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len() as f64;
    Ok(grid
        .iter()
        .map(|&r| sorted.partition_point(|&x| x <= r) as f64 / k)
        .collect())
}

/// Root-mean-square difference between two equally long series.
pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::Shape(format!(
            "rmse needs equal non-empty lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

/// Density estimate for nonnegative samples from a fine histogram smoothed
/// by a local polynomial least-squares fit.
///
/// Bins start at 0. Near the origin the histogram is continued to negative
/// abscissae by odd reflection, which matches densities that vanish like an
/// odd power of `r` (Nakagami with integer `m`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalPolyDensity {
    pub bin_width: f64,
    /// Bins on each side of the evaluation bin.
    pub half_window: usize,
    pub degree: usize,
}

impl LocalPolyDensity {
    /// Bin width `scale * 0.005`, a 41-bin window and a quartic fit.
    pub fn for_scale(scale: f64) -> Result<Self> {
        Self::new(scale * 0.005, 20, 4)
    }

    pub fn new(bin_width: f64, half_window: usize, degree: usize) -> Result<Self> {
        if !(bin_width > 0.0 && bin_width.is_finite()) {
            return Err(Error::InvalidArgument(format!("bad bin width {bin_width}")));
        }
        if 2 * half_window < degree {
            return Err(Error::InvalidArgument(
                "window must hold more bins than the polynomial degree".into(),
            ));
        }
        Ok(Self {
            bin_width,
            half_window,
            degree,
        })
    }

    pub fn estimate(&self, samples: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
        if samples.is_empty() {
            return Err(Error::InvalidArgument("density needs samples".into()));
        }
        let h = self.bin_width;
        let max = samples.iter().copied().fold(0.0, f64::max);
        let top = grid.iter().copied().fold(max, f64::max);
        let n_bins = (top / h).floor() as usize + self.half_window + 2;
        let mut counts = vec![0.0; n_bins];
        for &x in samples {
            if x < 0.0 {
                return Err(Error::InvalidArgument("density samples must be >= 0".into()));
            }
            counts[((x / h) as usize).min(n_bins - 1)] += 1.0;
        }
        let norm = 1.0 / (samples.len() as f64 * h);
        // bin i (possibly negative) has centre (i + 1/2) h
        let density = |i: i64| -> f64 {
            if i >= 0 {
                counts.get(i as usize).map_or(0.0, |c| c * norm)
            } else {
                -counts.get((-i - 1) as usize).map_or(0.0, |c| c * norm)
            }
        };

        let w = self.half_window as i64;
        let p = self.degree + 1;
        grid.iter()
            .map(|&x| {
                if x < 0.0 {
                    return Ok(0.0);
                }
                let centre = (x / h).floor() as i64;
                let mut ata = DMatrix::<f64>::zeros(p, p);
                let mut atb = DVector::<f64>::zeros(p);
                let mut row = vec![0.0; p];
                for i in centre - w..=centre + w {
                    let t = ((i as f64 + 0.5) * h - x) / (w as f64 * h);
                    let mut pow = 1.0;
                    for v in row.iter_mut() {
                        *v = pow;
                        pow *= t;
                    }
                    let y = density(i);
                    for a in 0..p {
                        atb[a] += row[a] * y;
                        for b in 0..p {
                            ata[(a, b)] += row[a] * row[b];
                        }
                    }
                }
                let coef = ata.lu().solve(&atb).ok_or_else(|| {
                    Error::InvalidArgument("singular local polynomial fit".into())
                })?;
                Ok(coef[0].max(0.0))
            })
            .collect()
    }
}
