//! Channel ensemble generators.
//!
//! *Physical*: for integer `m` each port envelope is the root of a sum of
//! `m` squared complex Gaussians. Every one of the `m` branches is an
//! `N`-vector `G_j = U Lambda^(1/2) Z_j` with `J = U Lambda U^T` the Jakes
//! matrix and `Z_j ~ CN(0, mu/m I)`. Marginals are exactly Nakagami(m, mu),
//! gain correlation is `J^2` entrywise and envelope correlation follows the
//! hypergeometric map.
//!
//! *Copula*: correlated standard normals (Cholesky of the repaired
//! covariance) are pushed through `Phi` and then the Nakagami quantile.
//!
//! No operation mixes Nakagami envelopes (or Gamma gains) linearly:
//! envelope-level mixing does not keep Nakagami marginals, and correlating
//! Gamma gains before the square root changes their parameters.
//!
//! Samples are produced in fixed-size chunks, each drawing from its own
//! ChaCha8 stream (`set_stream(chunk index)`), so results are bit-identical
//! for any number of worker threads.

use std::io::{BufRead, BufReader, Read, Write};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{format_sig, jakes_matrix, CorrelationMatrix, FasGeometry};
use crate::error::{Error, Result};
use crate::nakagami::{quantile_from_tails, NakagamiParams};
use crate::numerics::{cholesky_psd, std_normal_cdf, sym_eigen, DEFAULT_PSD_FLOOR};

/// Samples per RNG stream.
pub const CHUNK_SAMPLES: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Physical,
    Copula,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: GeneratorKind,
    /// Which covariance drove the sampler (e.g. "J", "J_h", "R", "jakes").
    pub covariance: String,
    pub seed: u64,
    pub n_ports: usize,
    pub aperture: f64,
    pub m: f64,
    pub mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorConfig {
    pub geom: FasGeometry,
    pub params: NakagamiParams,
    pub seed: u64,
    pub n_samples: usize,
}

/// `K x N` envelope samples, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEnsemble {
    n_ports: usize,
    envelopes: Vec<f64>,
    provenance: Provenance,
}

impl ChannelEnsemble {
    pub fn new(n_ports: usize, envelopes: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if n_ports == 0 || !envelopes.len().is_multiple_of(n_ports) {
            return Err(Error::Shape(format!(
                "{} values do not form rows of {n_ports} ports",
                envelopes.len()
            )));
        }
        if envelopes.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidArgument(
                "envelopes must be finite and nonnegative".into(),
            ));
        }
        Ok(Self {
            n_ports,
            envelopes,
            provenance,
        })
    }

    pub fn n_ports(&self) -> usize {
        self.n_ports
    }

    pub fn n_samples(&self) -> usize {
        self.envelopes.len() / self.n_ports
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.envelopes
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.envelopes[k * self.n_ports..(k + 1) * self.n_ports]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.envelopes.chunks_exact(self.n_ports)
    }

    pub fn column(&self, n: usize) -> impl Iterator<Item = f64> + '_ {
        self.envelopes.iter().skip(n).step_by(self.n_ports).copied()
    }

    /// Per-sample maximum over ports (the FAS peak envelope).
    pub fn peaks(&self) -> Vec<f64> {
        self.rows()
            .map(|r| r.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// CSV: a `#` line with JSON provenance, a `port_1..port_N` header,
    /// then one row per sample.
    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "# {}", serde_json::to_string(&self.provenance)?)?;
        let mut w = csv::Writer::from_writer(writer);
        w.write_record((1..=self.n_ports).map(|i| format!("port_{i}")))?;
        for row in self.rows() {
            w.write_record(row.iter().map(|&v| format_sig(v)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut reader = BufReader::new(reader);
        let mut first = String::new();
        reader.read_line(&mut first)?;
        let json = first.trim().strip_prefix('#').ok_or_else(|| {
            Error::InvalidArgument("ensemble CSV must start with a '#' provenance line".into())
        })?;
        let provenance: Provenance = serde_json::from_str(json.trim())?;
        let mut r = csv::Reader::from_reader(reader);
        let n_ports = r.headers()?.len();
        let mut envelopes = Vec::new();
        for rec in r.records() {
            for field in rec?.iter() {
                envelopes.push(field.parse::<f64>().map_err(|e| {
                    Error::InvalidArgument(format!("bad envelope value {field:?}: {e}"))
                })?);
            }
        }
        Self::new(n_ports, envelopes, provenance)
    }
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Something that fills rows of envelopes from an RNG.
trait RowSampler: Sync {
    fn n_ports(&self) -> usize;
    /// Fill `out` (whole rows) with fresh samples.
    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]);
}

fn generate_rows<S: RowSampler>(sampler: &S, seed: u64, k: usize) -> Vec<f64> {
    let n = sampler.n_ports();
    let mut data = vec![0.0; k * n];
    data.par_chunks_mut(CHUNK_SAMPLES * n)
        .enumerate()
        .for_each(|(c, out)| sampler.fill(&mut chunk_rng(seed, c), out));
    data
}

/// Streams `k` samples chunk by chunk, folding each chunk with `per_chunk`
/// and summing the per-chunk results in chunk order.
fn reduce_rows<S, T, F>(sampler: &S, seed: u64, k: usize, per_chunk: F) -> T
where
    S: RowSampler,
    T: Send + Default + std::ops::Add<Output = T>,
    F: Fn(&[f64]) -> T + Sync,
{
    let n = sampler.n_ports();
    let chunks = k.div_ceil(CHUNK_SAMPLES);
    let parts: Vec<T> = (0..chunks)
        .into_par_iter()
        .map_init(Vec::new, |buf: &mut Vec<f64>, c| {
            let rows = CHUNK_SAMPLES.min(k - c * CHUNK_SAMPLES);
            buf.resize(rows * n, 0.0);
            sampler.fill(&mut chunk_rng(seed, c), buf);
            per_chunk(buf)
        })
        .collect();
    parts.into_iter().fold(T::default(), |a, b| a + b)
}

/// Eigen-mixing generator for integer `m`.
#[derive(Debug, Clone)]
pub struct PhysicalGenerator {
    geom: FasGeometry,
    params: NakagamiParams,
    branches: usize,
    /// `U Lambda^(1/2)` with negative eigenvalues floored at zero, row-major.
    mixing: Vec<f64>,
    /// Per-component standard deviation of the real and imaginary parts.
    sigma: f64,
}

impl PhysicalGenerator {
    pub fn new(geom: &FasGeometry, params: &NakagamiParams) -> Result<Self> {
        let branches = params
            .integer_shape()
            .ok_or(Error::NonIntegerShape(params.m()))?;
        let j = jakes_matrix(geom)?;
        let eig = sym_eigen(j.entries())?;
        let n = geom.n_ports();
        let root: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
        let mut mixing = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                mixing[r * n + c] = eig.eigenvectors[(r, c)] * root[c];
            }
        }
        Ok(Self {
            geom: *geom,
            params: *params,
            branches,
            mixing,
            sigma: (params.mu() / (2.0 * params.m())).sqrt(),
        })
    }

    pub fn mixing_matrix(&self) -> DMatrix<f64> {
        let n = self.geom.n_ports();
        DMatrix::from_row_slice(n, n, &self.mixing)
    }

    fn provenance(&self, seed: u64) -> Provenance {
        Provenance {
            generator: GeneratorKind::Physical,
            covariance: "jakes".into(),
            seed,
            n_ports: self.geom.n_ports(),
            aperture: self.geom.aperture(),
            m: self.params.m(),
            mu: self.params.mu(),
        }
    }

    pub fn generate(&self, seed: u64, k: usize) -> Result<ChannelEnsemble> {
        let data = generate_rows(self, seed, k);
        ChannelEnsemble::new(self.geom.n_ports(), data, self.provenance(seed))
    }

    /// Counts `(fas, tas)` of samples whose peak envelope (FAS) or port-1
    /// envelope (TAS) falls below `radius`, over `k` streamed samples.
    pub fn outage_counts(&self, seed: u64, k: usize, radius: f64) -> (u64, u64) {
        let n = self.geom.n_ports();
        let Counts(fas, tas) = reduce_rows(self, seed, k, |buf| {
            let mut c = Counts(0, 0);
            for row in buf.chunks_exact(n) {
                let peak = row.iter().copied().fold(0.0, f64::max);
                c.0 += (peak < radius) as u64;
                c.1 += (row[0] < radius) as u64;
            }
            c
        });
        (fas, tas)
    }

    /// Outage counts for several radii from the same samples.
    pub fn outage_counts_multi(&self, seed: u64, k: usize, radii: &[f64]) -> Vec<u64> {
        let n = self.geom.n_ports();
        reduce_rows(self, seed, k, |buf| {
            let mut counts = CountVec(vec![0; radii.len()]);
            for row in buf.chunks_exact(n) {
                let peak = row.iter().copied().fold(0.0, f64::max);
                for (c, &r) in counts.0.iter_mut().zip(radii) {
                    *c += (peak < r) as u64;
                }
            }
            counts
        })
        .0
    }
}

#[derive(Default)]
struct Counts(u64, u64);

impl std::ops::Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts(self.0 + o.0, self.1 + o.1)
    }
}

#[derive(Default)]
struct CountVec(Vec<u64>);

impl std::ops::Add for CountVec {
    type Output = CountVec;
    fn add(self, o: CountVec) -> CountVec {
        if self.0.is_empty() {
            return o;
        }
        CountVec(self.0.iter().zip(&o.0).map(|(a, b)| a + b).collect())
    }
}

impl RowSampler for PhysicalGenerator {
    fn n_ports(&self) -> usize {
        self.geom.n_ports()
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let n = self.geom.n_ports();
        let mut zr = vec![0.0; n];
        let mut zi = vec![0.0; n];
        for row in out.chunks_exact_mut(n) {
            row.fill(0.0);
            for _ in 0..self.branches {
                for c in 0..n {
                    zr[c] = self.sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                    zi[c] = self.sigma * <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
                }
                for (r, gain) in row.iter_mut().enumerate() {
                    let a = &self.mixing[r * n..(r + 1) * n];
                    let mut gr = 0.0;
                    let mut gi = 0.0;
                    for c in 0..n {
                        gr += a[c] * zr[c];
                        gi += a[c] * zi[c];
                    }
                    *gain += gr * gr + gi * gi;
                }
            }
            for v in row.iter_mut() {
                *v = v.sqrt();
            }
        }
    }
}

/// Physical ensemble for `cfg` (integer `m` only).
pub fn generate_physical(cfg: &GeneratorConfig) -> Result<ChannelEnsemble> {
    if cfg.n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    PhysicalGenerator::new(&cfg.geom, &cfg.params)?.generate(cfg.seed, cfg.n_samples)
}

/// Gaussian-copula sampler with Nakagami marginals.
#[derive(Debug, Clone)]
pub struct CopulaGenerator {
    params: NakagamiParams,
    /// Lower Cholesky factor of the repaired covariance, row-major.
    factor: Vec<f64>,
    n_ports: usize,
    label: String,
    aperture: f64,
}

impl CopulaGenerator {
    pub fn new(params: &NakagamiParams, cov: &CorrelationMatrix, label: impl Into<String>) -> Result<Self> {
        let repaired = cov.psd_repaired(DEFAULT_PSD_FLOOR)?;
        let l = cholesky_psd(repaired.entries())?;
        let n = cov.dim();
        let mut factor = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..=r {
                factor[r * n + c] = l[(r, c)];
            }
        }
        Ok(Self {
            params: *params,
            factor,
            n_ports: n,
            label: label.into(),
            aperture: f64::NAN,
        })
    }

    /// Record the aperture in the provenance of generated ensembles.
    pub fn with_aperture(mut self, aperture: f64) -> Self {
        self.aperture = aperture;
        self
    }

    pub fn generate(&self, seed: u64, k: usize) -> Result<ChannelEnsemble> {
        let data = generate_rows(self, seed, k);
        ChannelEnsemble::new(
            self.n_ports,
            data,
            Provenance {
                generator: GeneratorKind::Copula,
                covariance: self.label.clone(),
                seed,
                n_ports: self.n_ports,
                aperture: if self.aperture.is_nan() { 0.0 } else { self.aperture },
                m: self.params.m(),
                mu: self.params.mu(),
            },
        )
    }
}

impl RowSampler for CopulaGenerator {
    fn n_ports(&self) -> usize {
        self.n_ports
    }

    fn fill(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        let n = self.n_ports;
        let mut z = vec![0.0; n];
        for row in out.chunks_exact_mut(n) {
            for v in z.iter_mut() {
                *v = <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng);
            }
            for (r, env) in row.iter_mut().enumerate() {
                let x: f64 = self.factor[r * n..r * n + r + 1]
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| a * b)
                    .sum();
                let lower = std_normal_cdf(x);
                let upper = std_normal_cdf(-x);
                *env = quantile_from_tails(&self.params, lower, upper);
            }
        }
    }
}

/// Gaussian-copula ensemble with covariance `cov` (PSD-repaired first).
pub fn generate_copula(
    geom: &FasGeometry,
    params: &NakagamiParams,
    cov: &CorrelationMatrix,
    seed: u64,
    k: usize,
) -> Result<ChannelEnsemble> {
    if cov.dim() != geom.n_ports() {
        return Err(Error::Shape(format!(
            "covariance is {0}x{0} but geometry has {1} ports",
            cov.dim(),
            geom.n_ports()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("n_samples must be positive".into()));
    }
    let label = format!("{:?}", cov.level()).to_lowercase();
    CopulaGenerator::new(params, cov, label)?
        .with_aperture(geom.aperture())
        .generate(seed, k)
}
