//! Spatial correlation of FAS ports.
//!
//! The coefficient-level matrix comes from Jakes' model. Squaring it gives
//! the gain-level matrix, and the Gauss hypergeometric map turns that into
//! the envelope-level matrix for Nakagami-m fading. Empirical estimators
//! (Pearson and normal scores) are provided to check generated ensembles.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::ChannelEnsemble;
use crate::numerics::{
    bessel_j0, gauss_2f1_symmetric, max_asymmetry, psd_repair, psi_ratio,
    std_normal_quantile_unchecked, DEFAULT_PSD_FLOOR,
};

/// `N` ports evenly spaced along a line of `W` wavelengths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FasGeometry {
    n_ports: usize,
    aperture: f64,
}

impl FasGeometry {
    pub fn new(n_ports: usize, aperture: f64) -> Result<Self> {
        if n_ports == 0 {
            return Err(Error::InvalidArgument("FAS needs at least one port".into()));
        }
        if !(aperture >= 0.0 && aperture.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "aperture must be finite and >= 0, got {aperture}"
            )));
        }
        Ok(Self { n_ports, aperture })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    /// Aperture length in carrier wavelengths.
    pub fn aperture(&self) -> f64 {
        self.aperture
    }

    /// Port spacing in wavelengths (zero for a single port).
    pub fn spacing(&self) -> f64 {
        if self.n_ports < 2 {
            0.0
        } else {
            self.aperture / (self.n_ports - 1) as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationLevel {
    /// Complex channel coefficients (Jakes).
    Coefficient,
    /// Channel gains `|h|^2`.
    Gain,
    /// Channel envelopes `|h|`.
    Envelope,
    /// Gaussian-copula covariance estimated from normal scores.
    NormalScores,
}

/// Symmetric matrix with unit diagonal and entries in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    level: CorrelationLevel,
    entries: DMatrix<f64>,
}

const ENTRY_TOL: f64 = 1e-9;

impl CorrelationMatrix {
    /// Validates shape, symmetry (1e-12), unit diagonal (1e-9) and entry
    /// range; the diagonal is then set to exactly one.
    pub fn new(level: CorrelationLevel, entries: DMatrix<f64>) -> Result<Self> {
        let n = entries.nrows();
        if n == 0 || entries.ncols() != n {
            return Err(Error::Shape(format!(
                "correlation matrix must be square and non-empty, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("correlation entries must be finite".into()));
        }
        let asym = max_asymmetry(&entries);
        if asym > 1e-12 {
            return Err(Error::Asymmetric(asym));
        }
        if let Some(i) = (0..n).find(|&i| (entries[(i, i)] - 1.0).abs() > ENTRY_TOL) {
            return Err(Error::InvalidArgument(format!(
                "diagonal entry {i} is {} (expected 1)",
                entries[(i, i)]
            )));
        }
        if entries.iter().any(|v| v.abs() > 1.0 + ENTRY_TOL) {
            return Err(Error::InvalidArgument(
                "correlation entries must lie in [-1, 1]".into(),
            ));
        }
        let entries = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                1.0
            } else {
                (0.5 * (entries[(i, j)] + entries[(j, i)])).clamp(-1.0, 1.0)
            }
        });
        Ok(Self { level, entries })
    }

    pub fn identity(n: usize, level: CorrelationLevel) -> Self {
        Self {
            level,
            entries: DMatrix::identity(n, n),
        }
    }

    /// Two-port matrix with off-diagonal `rho`.
    pub fn pair(rho: f64, level: CorrelationLevel) -> Result<Self> {
        Self::new(level, DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]))
    }

    pub fn level(&self) -> CorrelationLevel {
        self.level
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn is_toeplitz(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| (self.get(i, j) - self.get(0, i.abs_diff(j))).abs() <= tol))
    }

    /// Eigenvalue-clipped copy, suitable as a copula covariance.
    pub fn psd_repaired(&self, floor: f64) -> Result<Self> {
        Ok(Self {
            level: self.level,
            entries: psd_repair(&self.entries, floor)?,
        })
    }

    fn map_entries(&self, level: CorrelationLevel, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let n = self.dim();
        let mut out = DMatrix::identity(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let v = f(self.entries[(i, j)])?;
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        Ok(Self { level, entries: out })
    }

    /// Row-major CSV with a `port_1..port_N` header.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let n = self.dim();
        w.write_record((1..=n).map(|i| format!("port_{i}")))?;
        for i in 0..n {
            w.write_record((0..n).map(|j| format_sig(self.entries[(i, j)])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, level: CorrelationLevel) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(reader);
        let n = r.headers()?.len();
        let mut data = Vec::with_capacity(n * n);
        for rec in r.records() {
            let rec = rec?;
            for field in rec.iter() {
                data.push(field.trim().parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("bad matrix entry {field:?}: {e}"))
                })?);
            }
        }
        if data.len() != n * n {
            return Err(Error::Shape(format!("expected {n}x{n} entries, got {}", data.len())));
        }
        Self::new(level, DMatrix::from_row_slice(n, n, &data))
    }
}

/// Fixed 9-significant-digit rendering used by every CSV writer.
pub fn format_sig(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    format!("{v:.8e}")
}

/// `J[n][k] = J0(2 pi (n - k) W / (N - 1))`.
pub fn jakes_matrix(geom: &FasGeometry) -> Result<CorrelationMatrix> {
    let n = geom.n_ports();
    if n == 1 {
        return Ok(CorrelationMatrix::identity(1, CorrelationLevel::Coefficient));
    }
    let step = 2.0 * std::f64::consts::PI * geom.spacing();
    let lags = (0..n)
        .map(|d| if d == 0 { Ok(1.0) } else { bessel_j0(step * d as f64) })
        .collect::<Result<Vec<f64>>>()?;
    Ok(CorrelationMatrix {
        level: CorrelationLevel::Coefficient,
        entries: DMatrix::from_fn(n, n, |i, j| lags[i.abs_diff(j)]),
    })
}

/// Entrywise square of a coefficient-level matrix.
pub fn gain_correlation(j: &CorrelationMatrix) -> Result<CorrelationMatrix> {
    if j.level() != CorrelationLevel::Coefficient {
        return Err(Error::InvalidArgument(format!(
            "gain_correlation expects a coefficient-level matrix, got {:?}",
            j.level()
        )));
    }
    j.map_entries(CorrelationLevel::Gain, |v| Ok(v * v))
}

/// `(2F1(-1/2, -1/2; m; Jr) - 1) / (psi(m) - 1)` entrywise.
pub fn envelope_correlation(jr: &CorrelationMatrix, m: f64) -> Result<CorrelationMatrix> {
    if jr.level() != CorrelationLevel::Gain {
        return Err(Error::InvalidArgument(format!(
            "envelope_correlation expects a gain-level matrix, got {:?}",
            jr.level()
        )));
    }
    let psi = psi_ratio(m)?;
    jr.map_entries(CorrelationLevel::Envelope, |g| {
        if g == 1.0 {
            return Ok(1.0);
        }
        let f = gauss_2f1_symmetric(m, g)?;
        Ok(((f - 1.0) / (psi - 1.0)).clamp(0.0, 1.0))
    })
}

/// Convenience: Jakes matrix mapped all the way to envelope level.
pub fn jakes_envelope_matrix(geom: &FasGeometry, m: f64) -> Result<CorrelationMatrix> {
    envelope_correlation(&gain_correlation(&jakes_matrix(geom)?)?, m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PearsonTransform {
    /// Correlate envelopes `|h|`.
    Envelope,
    /// Correlate gains `|h|^2`.
    Gain,
}

const MIN_SAMPLES: usize = 100;

/// Pearson correlation of the (optionally squared) envelope columns.
///
/// The result carries the envelope or gain level, but being a sample
/// estimate its off-diagonal entries may dip slightly below zero.
pub fn empirical_pearson(
    samples: &ChannelEnsemble,
    transform: PearsonTransform,
) -> Result<CorrelationMatrix> {
    let k = samples.n_samples();
    if k < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {k}"
        )));
    }
    let n = samples.n_ports();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|c| {
            samples
                .column(c)
                .map(|v| match transform {
                    PearsonTransform::Envelope => v,
                    PearsonTransform::Gain => v * v,
                })
                .collect()
        })
        .collect();
    let level = match transform {
        PearsonTransform::Envelope => CorrelationLevel::Envelope,
        PearsonTransform::Gain => CorrelationLevel::Gain,
    };
    Ok(CorrelationMatrix {
        level,
        entries: pearson_matrix(&columns)?,
    })
}

/// Rank-based estimate of the Gaussian-copula covariance: each column is
/// replaced by `Phi^-1(rank / (K + 1))` (ties take their average rank),
/// Pearson-correlated, then PSD-repaired.
pub fn normal_scores_correlation(samples: &ChannelEnsemble) -> Result<CorrelationMatrix> {
    let k = samples.n_samples();
    let n = samples.n_ports();
    if k < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "need at least {MIN_SAMPLES} samples, got {k}"
        )));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("need at least two ports".into()));
    }
    let columns = (0..n)
        .map(|c| {
            let col: Vec<f64> = samples.column(c).collect();
            let ranks = average_ranks(&col);
            if ranks.iter().all(|&r| r == ranks[0]) {
                return Err(Error::DegenerateColumn(c));
            }
            let denom = (k + 1) as f64;
            Ok(ranks
                .into_iter()
                .map(|r| std_normal_quantile_unchecked(r / denom))
                .collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let raw = pearson_matrix(&columns)?;
    Ok(CorrelationMatrix {
        level: CorrelationLevel::NormalScores,
        entries: psd_repair(&raw, DEFAULT_PSD_FLOOR)?,
    })
}

/// 1-based ranks, ties replaced by the mean of the ranks they span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = 0.5 * ((start + 1) + end) as f64;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson_matrix(columns: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = columns.len();
    let k = columns[0].len() as f64;
    let centred: Vec<Vec<f64>> = columns
        .iter()
        .map(|c| {
            let mean = c.iter().sum::<f64>() / k;
            c.iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centred
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if let Some(c) = norms.iter().position(|&s| !(s > 0.0)) {
        return Err(Error::DegenerateColumn(c));
    }
    let mut out = DMatrix::identity(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let dot: f64 = centred[i].iter().zip(&centred[j]).map(|(a, b)| a * b).sum();
            let r = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
            out[(i, j)] = r;
            out[(j, i)] = r;
        }
    }
    Ok(out)
}
