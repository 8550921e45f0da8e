//! One function per subcommand. Each writes its data files into the
//! output directory; the caller adds config and manifest.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use fascopula::copula::{default_pdf_step, MvnOptions, PeakDistribution};
use fascopula::correlation::{
    empirical_pearson, format_sig, jakes_envelope_matrix, jakes_matrix, normal_scores_correlation,
    FasGeometry, PearsonTransform,
};
use fascopula::generator::{generate_copula, ChannelEnsemble, PhysicalGenerator};
use fascopula::nakagami::{self, NakagamiParams};
use fascopula::numerics::RealGrid;
use fascopula::outage::{samples_for_pilot, write_curves_csv, MatrixChoice, OutageCurve, Scenario};
use fascopula::seed::derive;
use fascopula::stats::{ecdf, rmse, LocalPolyDensity};

use crate::config::{Experiment, ExperimentConfig, Geometry};
use crate::error::CliError;
use crate::output::OutputDir;

/// Thresholds used by `validate`.
pub const RMSE_LIMIT: f64 = 1e-3;
pub const CORR_DIFF_LIMIT: f64 = 0.01;

pub fn run(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    match cfg.experiment {
        Experiment::Scatter => scatter(cfg, out),
        Experiment::PdfCdf => pdf_cdf(cfg, out),
        Experiment::Validate => validate(cfg, out),
        Experiment::OpSweep => op_sweep(cfg, out),
        Experiment::CorrTable => corr_table(cfg, out),
    }
}

fn geometry(g: &Geometry) -> Result<FasGeometry, CliError> {
    Ok(FasGeometry::new(g.n_ports, g.aperture)?)
}

fn tag(g: &Geometry) -> String {
    format!("N{}_W{}", g.n_ports, g.aperture)
}

fn csv_rows<W: Write>(w: W, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r.iter().map(|&v| format_sig(v)))?;
    }
    w.flush()?;
    Ok(())
}

fn mvn_options(cfg: &ExperimentConfig) -> MvnOptions {
    MvnOptions {
        abs_tol: cfg.tol,
        rel_tol: cfg.rel_tol,
        ..MvnOptions::default()
    }
}

/// Scatter samples for two-port geometries: the physical ensemble and three
/// copula ensembles (normal-scores estimate, `J`, `J_h`).
fn scatter(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let params = NakagamiParams::new(cfg.m, cfg.mu)?;
    let mut summary = Vec::new();
    for (gi, g) in cfg.geometries.iter().enumerate() {
        if g.n_ports != 2 {
            return Err(CliError::Config(format!(
                "scatter needs two-port geometries, got N = {}",
                g.n_ports
            )));
        }
        let geom = geometry(g)?;
        let base = derive(cfg.seed, gi as u64);
        let physical = PhysicalGenerator::new(&geom, &params)?.generate(derive(base, 0), cfg.samples)?;
        let scores = normal_scores_correlation(&physical)?;
        let sets: [(&str, ChannelEnsemble); 4] = [
            ("copula_normal_scores", generate_copula(&geom, &params, &scores, derive(base, 1), cfg.samples)?),
            ("copula_coeff", generate_copula(&geom, &params, &jakes_matrix(&geom)?, derive(base, 2), cfg.samples)?),
            ("copula_enve", generate_copula(&geom, &params, &jakes_envelope_matrix(&geom, cfg.m)?, derive(base, 3), cfg.samples)?),
            ("physical", physical),
        ];
        for (source, e) in &sets {
            let name = format!("scatter_{}_{source}.csv", tag(g));
            out.write(&name, Some(e.provenance().seed), |w| Ok(e.write_csv(w)?))?;
            let r = empirical_pearson(e, PearsonTransform::Envelope)?;
            summary.push((g.aperture, *source, r.get(0, 1), scores.get(0, 1)));
        }
    }
    out.write("scatter_summary.csv", Some(cfg.seed), |w| {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(["aperture", "source", "pearson_envelope", "normal_scores_estimate"])?;
        for (a, s, p, ns) in &summary {
            w.write_record([format_sig(*a), s.to_string(), format_sig(*p), format_sig(*ns)])?;
        }
        w.flush()?;
        Ok(())
    })
}

/// Empirical density and CDF of the peak envelope next to both copula
/// models.
fn pdf_cdf(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let params = NakagamiParams::new(cfg.m, cfg.mu)?;
    let grid = cfg.r_grid.points()?;
    let opts = mvn_options(cfg);
    let h = default_pdf_step(&params);
    for (gi, g) in cfg.geometries.iter().enumerate() {
        let geom = geometry(g)?;
        let base = derive(cfg.seed, gi as u64);
        let ensemble = PhysicalGenerator::new(&geom, &params)?.generate(derive(base, 0), cfg.samples)?;
        let mut peaks = ensemble.peaks();
        peaks.sort_by(f64::total_cmp);
        let top = peaks[((peaks.len() - 1) as f64 * 0.9999) as usize];
        let pdf_mc = LocalPolyDensity::for_scale(top)?.estimate(&peaks, &grid)?;
        let cdf_mc = ecdf(&peaks, &grid)?;

        let models = [
            PeakDistribution::new(&params, &jakes_matrix(&geom)?)?,
            PeakDistribution::new(&params, &jakes_envelope_matrix(&geom, cfg.m)?)?,
        ];
        let theory: Vec<Vec<(f64, f64)>> = models
            .iter()
            .enumerate()
            .map(|(mi, model)| {
                let seed = derive(base, 1 + mi as u64);
                grid.par_iter()
                    .map(|&r| {
                        let cdf = model.cdf(r, &opts, seed)?.value;
                        let pdf = if r > h { model.pdf(r, h, &opts, seed)? } else { 0.0 };
                        Ok((pdf, cdf))
                    })
                    .collect::<Result<Vec<_>, CliError>>()
            })
            .collect::<Result<_, _>>()?;

        let rows: Vec<Vec<f64>> = grid
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                vec![r, pdf_mc[i], cdf_mc[i], theory[0][i].0, theory[0][i].1, theory[1][i].0, theory[1][i].1]
            })
            .collect();
        let name = format!("pdf_cdf_{}.csv", tag(g));
        out.write(&name, Some(base), |w| {
            csv_rows(
                w,
                &["r", "pdf_mc", "cdf_mc", "pdf_coeff", "cdf_coeff", "pdf_enve", "cdf_enve"],
                &rows,
            )
        })?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct ValidateEntry {
    m: f64,
    seed: u64,
    pdf_rmse: f64,
    cdf_rmse: f64,
    corr_max_abs_diff: f64,
    pdf_pass: bool,
    cdf_pass: bool,
    corr_pass: bool,
}

#[derive(Debug, Serialize)]
struct ValidateReport {
    n_ports: usize,
    aperture: f64,
    mu: f64,
    samples: usize,
    grid_points: usize,
    rmse_limit: f64,
    corr_diff_limit: f64,
    results: Vec<ValidateEntry>,
    all_pass: bool,
}

/// Marginal and correlation fidelity of the physical generator.
fn validate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let g = &cfg.geometries[0];
    let geom = geometry(g)?;
    let mut results = Vec::new();
    for (i, &m) in cfg.m_values.iter().enumerate() {
        let params = NakagamiParams::new(m, cfg.mu)?;
        let seed = derive(cfg.seed, i as u64);
        let e = PhysicalGenerator::new(&geom, &params)?.generate(seed, cfg.samples)?;
        let top = nakagami::quantile(&params, 0.9999)?;
        let grid = RealGrid::linspace(0.0, top, 200)?;
        let pdf_hat = LocalPolyDensity::for_scale(top)?.estimate(e.as_slice(), grid.points())?;
        let cdf_hat = ecdf(e.as_slice(), grid.points())?;
        let pdf = grid.points().iter().map(|&r| nakagami::pdf(&params, r)).collect::<Result<Vec<_>, _>>()?;
        let cdf = grid.points().iter().map(|&r| nakagami::cdf(&params, r)).collect::<Result<Vec<_>, _>>()?;
        let emp = empirical_pearson(&e, PearsonTransform::Envelope)?;
        let want = jakes_envelope_matrix(&geom, m)?;
        let corr = (emp.entries() - want.entries()).abs().max();
        let (pdf_rmse, cdf_rmse) = (rmse(&pdf_hat, &pdf)?, rmse(&cdf_hat, &cdf)?);
        results.push(ValidateEntry {
            m,
            seed,
            pdf_rmse,
            cdf_rmse,
            corr_max_abs_diff: corr,
            pdf_pass: pdf_rmse < RMSE_LIMIT,
            cdf_pass: cdf_rmse < RMSE_LIMIT,
            corr_pass: corr < CORR_DIFF_LIMIT,
        });
        let rows: Vec<Vec<f64>> = (0..grid.len())
            .map(|k| vec![grid.points()[k], pdf_hat[k], pdf[k], cdf_hat[k], cdf[k]])
            .collect();
        out.write(&format!("validate_m{m}.csv"), Some(seed), |w| {
            csv_rows(w, &["r", "pdf_empirical", "pdf_analytic", "cdf_empirical", "cdf_analytic"], &rows)
        })?;
    }
    let all_pass = results.iter().all(|r| r.pdf_pass && r.cdf_pass && r.corr_pass);
    let report = ValidateReport {
        n_ports: g.n_ports,
        aperture: g.aperture,
        mu: cfg.mu,
        samples: cfg.samples,
        grid_points: 200,
        rmse_limit: RMSE_LIMIT,
        corr_diff_limit: CORR_DIFF_LIMIT,
        results,
        all_pass,
    };
    out.write_json("validate.json", &report)
}

/// Outage curves for every geometry x m x mu scenario over the SNR list.
fn op_sweep(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let opts = mvn_options(cfg);
    let mut curves: [Vec<OutageCurve>; 5] = Default::default();
    let mut index = 0u64;
    for g in &cfg.geometries {
        for &m in &cfg.m_values {
            for &mu in &cfg.mu_values {
                let sc = Scenario {
                    geom: geometry(g)?,
                    params: NakagamiParams::new(m, mu)?,
                    threshold_db: cfg.threshold_db,
                };
                let base = derive(cfg.seed, index);
                index += 1;
                let coeff = sc.theory_curve(MatrixChoice::Coefficient, &cfg.snr_db, &opts, derive(base, 0))?;
                let enve = sc.theory_curve(MatrixChoice::Envelope, &cfg.snr_db, &opts, derive(base, 1))?;
                let tas = sc.tas_theory_curve(&cfg.snr_db)?;
                if cfg.monte_carlo && sc.params.integer_shape().is_some() {
                    // the envelope-matrix theory value is the pilot for K
                    let (snr, k): (Vec<f64>, Vec<usize>) = enve
                        .points
                        .iter()
                        .filter(|p| p.op >= cfg.mc_min_op)
                        .map(|p| (p.snr_db, samples_for_pilot(p.op, cfg.samples)))
                        .unzip();
                    let (fas_mc, tas_mc) = sc.mc_curves(&snr, &k, derive(base, 2))?;
                    curves[0].push(fas_mc);
                    curves[4].push(tas_mc);
                }
                curves[1].push(coeff);
                curves[2].push(enve);
                curves[3].push(tas);
            }
        }
    }
    let names = [
        ("mc_fas", true),
        ("theory_coeff", false),
        ("theory_enve", false),
        ("tas_theory", false),
        ("tas_mc", true),
    ];
    for ((name, is_mc), list) in names.iter().zip(&curves) {
        if cfg.monte_carlo || !is_mc {
            out.write(&format!("op_{name}.csv"), Some(cfg.seed), |w| {
                Ok(write_curves_csv(list, w)?)
            })?;
        }
    }
    Ok(())
}

/// Envelope correlation between port 1 and every other port for the
/// physical generator and both copula models.
fn corr_table(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let params = NakagamiParams::new(cfg.m, cfg.mu)?;
    for (gi, g) in cfg.geometries.iter().enumerate() {
        let geom = geometry(g)?;
        let base = derive(cfg.seed, gi as u64);
        let sim = PhysicalGenerator::new(&geom, &params)?.generate(derive(base, 0), cfg.samples)?;
        let j = jakes_matrix(&geom)?;
        let jh = jakes_envelope_matrix(&geom, cfg.m)?;
        let coeff = generate_copula(&geom, &params, &j, derive(base, 1), cfg.samples)?;
        let enve = generate_copula(&geom, &params, &jh, derive(base, 2), cfg.samples)?;
        let [sim, coeff, enve] = [&sim, &coeff, &enve].map(|e| empirical_pearson(e, PearsonTransform::Envelope));
        let (sim, coeff, enve) = (sim?, coeff?, enve?);
        out.write(&format!("corr_table_{}.csv", tag(g)), Some(base), |w| {
            let mut w = csv::Writer::from_writer(w);
            w.write_record(["pair", "lag", "sim", "coeff", "enve", "jakes", "jakes_envelope"])?;
            for lag in 1..g.n_ports {
                w.write_record([
                    format!("J_1_{}", lag + 1),
                    lag.to_string(),
                    format_sig(sim.get(0, lag)),
                    format_sig(coeff.get(0, lag)),
                    format_sig(enve.get(0, lag)),
                    format_sig(j.get(0, lag)),
                    format_sig(jh.get(0, lag)),
                ])?;
            }
            w.flush()?;
            Ok(())
        })?;
    }
    Ok(())
}
