//! Outage probability of FAS and of a single fixed antenna (TAS).
//!
//! Outage happens when `gamma |h_FAS|^2 < gamma_th`, i.e. when the peak
//! envelope falls below `sqrt(gamma_th / gamma)`. SNRs are given in dB and
//! converted as `10^(dB/10)`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{MvnOptions, PeakDistribution};
use crate::correlation::{format_sig, jakes_envelope_matrix, jakes_matrix, CorrelationMatrix, FasGeometry};
use crate::error::{Error, Result};
use crate::generator::PhysicalGenerator;
use crate::nakagami::{self, NakagamiParams};
use crate::seed;

/// Smallest Monte Carlo sample count accepted by [`op_monte_carlo`].
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Sample count floor and cap of the low-OP rule.
pub const LOW_OP_FLOOR: usize = 1_000_000;
pub const LOW_OP_CAP: usize = 100_000_000;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutageQuery {
    pub snr_db: f64,
    pub threshold_db: f64,
    pub geom: FasGeometry,
    pub params: NakagamiParams,
}

impl OutageQuery {
    pub fn new(snr_db: f64, threshold_db: f64, geom: FasGeometry, params: NakagamiParams) -> Result<Self> {
        if !snr_db.is_finite() || threshold_db.is_nan() || threshold_db == f64::INFINITY {
            return Err(Error::InvalidArgument(format!(
                "SNR values must be finite dB, got snr {snr_db}, threshold {threshold_db}"
            )));
        }
        Ok(Self {
            snr_db,
            threshold_db,
            geom,
            params,
        })
    }

    /// Envelope threshold `sqrt(gamma_th / gamma)`.
    pub fn radius(&self) -> f64 {
        (db_to_linear(self.threshold_db) / db_to_linear(self.snr_db)).sqrt()
    }
}

/// Which matrix fills the copula covariance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixChoice {
    /// The Jakes matrix `J` of complex channel coefficients.
    Coefficient,
    /// The envelope correlation `J_h` derived from `J^2`.
    Envelope,
}

pub fn copula_covariance(geom: &FasGeometry, m: f64, choice: MatrixChoice) -> Result<CorrelationMatrix> {
    match choice {
        MatrixChoice::Coefficient => jakes_matrix(geom),
        MatrixChoice::Envelope => jakes_envelope_matrix(geom, m),
    }
}

/// Copula-model OP with tolerance `tol`.
pub fn op_theory(q: &OutageQuery, choice: MatrixChoice, tol: f64, seed: u64) -> Result<f64> {
    Ok(op_theory_with(q, choice, &MvnOptions::with_tol(tol), seed)?.value)
}

pub fn op_theory_with(
    q: &OutageQuery,
    choice: MatrixChoice,
    opts: &MvnOptions,
    seed: u64,
) -> Result<crate::copula::CdfResult> {
    let cov = copula_covariance(&q.geom, q.params.m(), choice)?;
    PeakDistribution::new(&q.params, &cov)?.cdf(q.radius(), opts, seed)
}

/// Single-antenna OP, the marginal CDF at the threshold radius.
pub fn op_tas(q: &OutageQuery) -> Result<f64> {
    nakagami::cdf(&q.params, q.radius())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub op: f64,
    /// Binomial standard error `sqrt(p (1 - p) / K)`.
    pub stderr: f64,
    pub samples: usize,
    pub outages: u64,
}

impl McEstimate {
    pub fn from_counts(outages: u64, samples: usize) -> Self {
        let op = outages as f64 / samples as f64;
        Self {
            op,
            stderr: (op * (1.0 - op) / samples as f64).sqrt(),
            samples,
            outages,
        }
    }

    /// Whether `value` lies within `z` standard errors of the estimate.
    pub fn covers(&self, value: f64, z: f64) -> bool {
        (value - self.op).abs() <= z * self.stderr
    }
}

fn check_samples(k: usize) -> Result<()> {
    if k < MIN_MC_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo needs K >= {MIN_MC_SAMPLES}, got {k}"
        )));
    }
    Ok(())
}

/// FAS OP from the physical generator.
pub fn op_monte_carlo(q: &OutageQuery, k: usize, seed: u64) -> Result<McEstimate> {
    Ok(op_monte_carlo_fas_tas(q, k, seed)?.0)
}

/// FAS and port-1 (TAS) OP from one shared ensemble, so the FAS estimate
/// never exceeds the TAS one.
pub fn op_monte_carlo_fas_tas(q: &OutageQuery, k: usize, seed: u64) -> Result<(McEstimate, McEstimate)> {
    check_samples(k)?;
    let g = PhysicalGenerator::new(&q.geom, &q.params)?;
    let (fas, tas) = g.outage_counts(seed, k, q.radius());
    Ok((McEstimate::from_counts(fas, k), McEstimate::from_counts(tas, k)))
}

/// Sample count for an MC point whose OP is expected near `pilot`:
/// `max(1e6, 100 / pilot)`, capped at `1e8`.
pub fn low_op_samples(pilot: f64) -> usize {
    samples_for_pilot(pilot, LOW_OP_FLOOR)
}

/// `max(floor, 100 / pilot)` capped at `1e8` (the floor itself is not capped).
pub fn samples_for_pilot(pilot: f64, floor: usize) -> usize {
    if !(pilot > 0.0) {
        return LOW_OP_CAP.max(floor);
    }
    let k = (100.0 / pilot).ceil();
    if k >= LOW_OP_CAP as f64 {
        LOW_OP_CAP.max(floor)
    } else {
        (k as usize).max(floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutageMethod {
    McFas,
    TheoryCoeff,
    TheoryEnve,
    TasTheory,
    TasMc,
}

impl OutageMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::McFas => "mc_fas",
            Self::TheoryCoeff => "theory_coeff",
            Self::TheoryEnve => "theory_enve",
            Self::TasTheory => "tas_theory",
            Self::TasMc => "tas_mc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutagePoint {
    pub snr_db: f64,
    pub op: f64,
    /// MC standard error, or the integration error estimate for theory.
    pub stderr: f64,
    /// Sample count for MC points, tolerance for theory points.
    pub k_or_tol: f64,
    pub seed: u64,
}

/// Scenario parameters shared by every point of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveMeta {
    pub n_ports: usize,
    pub aperture: f64,
    pub m: f64,
    pub mu: f64,
    pub threshold_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutageCurve {
    pub method: OutageMethod,
    pub meta: CurveMeta,
    pub points: Vec<OutagePoint>,
}

impl OutageCurve {
    pub fn new(method: OutageMethod, meta: CurveMeta, mut points: Vec<OutagePoint>) -> Result<Self> {
        if points.iter().any(|p| !(0.0..=1.0).contains(&p.op)) {
            return Err(Error::InvalidArgument("OP values must lie in [0, 1]".into()));
        }
        points.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
        Ok(Self { method, meta, points })
    }

    pub fn ops(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.op).collect()
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "snr_db",
        "op",
        "stderr",
        "method",
        "K_or_tol",
        "seed",
        "n_ports",
        "aperture",
        "m",
        "mu",
        "threshold_db",
    ];

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_curves_csv(std::slice::from_ref(self), writer)
    }

    fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for p in &self.points {
            w.write_record([
                format_sig(p.snr_db),
                format_sig(p.op),
                format_sig(p.stderr),
                self.method.as_str().to_string(),
                format_sig(p.k_or_tol),
                p.seed.to_string(),
                self.meta.n_ports.to_string(),
                format_sig(self.meta.aperture),
                format_sig(self.meta.m),
                format_sig(self.meta.mu),
                format_sig(self.meta.threshold_db),
            ])?;
        }
        Ok(())
    }
}

/// Several curves in one CSV under a single header; every row carries its
/// own scenario columns.
pub fn write_curves_csv<W: Write>(curves: &[OutageCurve], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(OutageCurve::CSV_HEADER)?;
    for c in curves {
        c.write_rows(&mut w)?;
    }
    w.flush()?;
    Ok(())
}

/// One scenario swept over SNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scenario {
    pub geom: FasGeometry,
    pub params: NakagamiParams,
    pub threshold_db: f64,
}

impl Scenario {
    pub fn meta(&self) -> CurveMeta {
        CurveMeta {
            n_ports: self.geom.n_ports(),
            aperture: self.geom.aperture(),
            m: self.params.m(),
            mu: self.params.mu(),
            threshold_db: self.threshold_db,
        }
    }

    pub fn query(&self, snr_db: f64) -> Result<OutageQuery> {
        OutageQuery::new(snr_db, self.threshold_db, self.geom, self.params)
    }

    /// Copula OP over `snr_db`; each point gets a seed derived from `seed`
    /// and its index. The MVN tolerance is `opts.abs_tol`.
    pub fn theory_curve(
        &self,
        choice: MatrixChoice,
        snr_db: &[f64],
        opts: &MvnOptions,
        seed: u64,
    ) -> Result<OutageCurve> {
        let cov = copula_covariance(&self.geom, self.params.m(), choice)?;
        let dist = PeakDistribution::new(&self.params, &cov)?;
        let points = snr_db
            .par_iter()
            .enumerate()
            .map(|(i, &s)| {
                let q = self.query(s)?;
                let point_seed = seed::derive(seed, i as u64);
                let r = dist.cdf(q.radius(), opts, point_seed)?;
                Ok(OutagePoint {
                    snr_db: s,
                    op: r.value,
                    stderr: r.error_estimate,
                    k_or_tol: opts.abs_tol,
                    seed: point_seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let method = match choice {
            MatrixChoice::Coefficient => OutageMethod::TheoryCoeff,
            MatrixChoice::Envelope => OutageMethod::TheoryEnve,
        };
        OutageCurve::new(method, self.meta(), points)
    }

    pub fn tas_theory_curve(&self, snr_db: &[f64]) -> Result<OutageCurve> {
        let points = snr_db
            .iter()
            .map(|&s| {
                Ok(OutagePoint {
                    snr_db: s,
                    op: op_tas(&self.query(s)?)?,
                    stderr: 0.0,
                    k_or_tol: 0.0,
                    seed: 0,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        OutageCurve::new(OutageMethod::TasTheory, self.meta(), points)
    }

    /// FAS and TAS Monte Carlo curves. `samples[i]` is the sample count of
    /// point `i`; both curves come from the same ensemble per point.
    pub fn mc_curves(&self, snr_db: &[f64], samples: &[usize], seed: u64) -> Result<(OutageCurve, OutageCurve)> {
        if samples.len() != snr_db.len() {
            return Err(Error::Shape("one sample count per SNR point".into()));
        }
        let mut fas = Vec::with_capacity(snr_db.len());
        let mut tas = Vec::with_capacity(snr_db.len());
        for (i, (&s, &k)) in snr_db.iter().zip(samples).enumerate() {
            let point_seed = seed::derive(seed, i as u64);
            let (f, t) = op_monte_carlo_fas_tas(&self.query(s)?, k, point_seed)?;
            for (est, out) in [(f, &mut fas), (t, &mut tas)] {
                out.push(OutagePoint {
                    snr_db: s,
                    op: est.op,
                    stderr: est.stderr,
                    k_or_tol: k as f64,
                    seed: point_seed,
                });
            }
        }
        Ok((
            OutageCurve::new(OutageMethod::McFas, self.meta(), fas)?,
            OutageCurve::new(OutageMethod::TasMc, self.meta(), tas)?,
        ))
    }
}
