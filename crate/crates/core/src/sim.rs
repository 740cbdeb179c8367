//! Monte-Carlo of the full chain: source, encoder, AWGN channel, decoder.
//!
//! The encoder keeps a replica of the decoder's predictor and learns each
//! channel output by noiseless feedback, so both sides run the same update
//! on the same inputs. The replica is checked against the decoder bitwise at
//! every step.

use std::io::Write;
use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gauss_source::{psd_factor, StateSpaceModel};
use crate::realization::{self, RealizationDesign};
use crate::rng::{NoiseRole, NoiseStream};

pub const DEFAULT_BURN_IN: usize = 10_000;
/// Batches used for the batch-means standard error.
pub const BATCHES: usize = 50;
/// `|xhat|_inf` above which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    /// Total simulated steps, burn-in included.
    pub steps: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Time average of `|Y_t - Y~_t|^2` after burn-in.
    pub empirical_distortion: f64,
    pub stderr_distortion: f64,
    /// Time average of `A_t^2` after burn-in.
    pub empirical_power: f64,
    pub stderr_power: f64,
    pub analytic_d: f64,
    pub analytic_p: f64,
    /// Time average of the squared error of each eigenmode.
    pub per_mode_distortion: Vec<f64>,
}

impl SimReport {
    pub fn measured_steps(&self) -> usize {
        self.steps - self.burn_in
    }
}

struct BatchMeans {
    size: usize,
    sums: [f64; BATCHES],
    counts: [usize; BATCHES],
}

impl BatchMeans {
    fn new(total: usize) -> Self {
        Self {
            size: (total / BATCHES).max(1),
            sums: [0.0; BATCHES],
            counts: [0; BATCHES],
        }
    }

    #[inline]
    fn push(&mut self, k: usize, v: f64) {
        let b = (k / self.size).min(BATCHES - 1);
        self.sums[b] += v;
        self.counts[b] += 1;
    }

    /// Grand mean and batch-means standard error.
    fn finish(&self) -> (f64, f64) {
        let total: f64 = self.sums.iter().sum();
        let n: usize = self.counts.iter().sum();
        let mean = total / n as f64;
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .map(|(&s, &c)| s / c as f64)
            .collect();
        let bm = means.iter().sum::<f64>() / BATCHES as f64;
        let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
        (mean, (var / BATCHES as f64).sqrt())
    }
}

/// Simulates `horizon` steps of the chain and averages after `burn_in`.
///
/// The source path uses the same noise streams as
/// [`crate::gauss_source::simulate`], so for equal seeds the chain sees the
/// same observations; the channel has its own stream.
pub fn run_chain(
    model: &StateSpaceModel,
    design: &RealizationDesign,
    horizon: usize,
    seed: u64,
    burn_in: usize,
) -> Result<SimReport> {
    if horizon == 0 || horizon < 10 * burn_in || horizon - burn_in < BATCHES {
        return Err(Error::Domain(format!(
            "horizon {horizon} must be at least 10x burn-in ({burn_in}) and leave {BATCHES} measured steps"
        )));
    }
    let (m, k, p) = (model.state_dim(), model.noise_dim(), model.obs_dim());
    if design.obs_dim() != p || design.filter_gain.nrows() != m {
        return Err(Error::Dimension {
            matrix: "design",
            expected: format!("observation dim {p}, state dim {m}"),
            got: format!("{} x {}", design.filter_gain.nrows(), design.obs_dim()),
        });
    }
    let mut init = NoiseStream::new(seed, NoiseRole::InitialState);
    let mut proc = NoiseStream::new(seed, NoiseRole::Process);
    let mut obs = NoiseStream::new(seed, NoiseRole::Observation);
    let mut chan = NoiseStream::new(seed, NoiseRole::Channel);
    let noise_sd = design.q.sqrt();

    // encoder row acting on the raw innovation, decoder column producing it
    let enc_row: DVector<f64> = (&design.a_enc * &design.e).row(0).transpose();
    let dec_col: DVector<f64> = (design.e.transpose() * &design.b_dec).column(0).into_owned();
    let (a, b, c, g, gain) = (&model.a, &model.b, &model.c, &model.g, &design.filter_gain);

    let mut z0 = DVector::zeros(m);
    init.fill(z0.as_mut_slice());
    let mut x = &model.x0_mean + psd_factor(&model.x0_cov) * z0;
    let mut xhat_dec = model.x0_mean.clone();
    let mut xhat_enc = model.x0_mean.clone();

    let mut v = DVector::zeros(p);
    let mut w = DVector::zeros(k);
    let mut y = DVector::zeros(p);
    let mut pred = DVector::zeros(p);
    let mut innov = DVector::zeros(p);
    let mut k_tilde = DVector::zeros(p);
    let mut err = DVector::zeros(p);
    let mut mode_err = DVector::zeros(p);
    let mut x_next = DVector::zeros(m);
    let mut xhat_next = DVector::zeros(m);

    let measured = horizon - burn_in;
    let mut dist = BatchMeans::new(measured);
    let mut power = BatchMeans::new(measured);
    let mut per_mode = vec![0.0; p];

    for t in 0..horizon {
        obs.fill(v.as_mut_slice());
        y.gemv(1.0, c, &x, 0.0);
        y.gemv(1.0, g, &v, 1.0);

        // encoder
        pred.gemv(1.0, c, &xhat_enc, 0.0);
        innov.copy_from(&y);
        innov -= &pred;
        let a_t = enc_row.dot(&innov);

        let b_t = a_t + noise_sd * chan.standard_normal();

        // decoder
        k_tilde.copy_from(&dec_col);
        k_tilde *= b_t;
        pred.gemv(1.0, c, &xhat_dec, 0.0);
        err.copy_from(&y);
        err -= &pred;
        err -= &k_tilde;

        xhat_next.gemv(1.0, a, &xhat_dec, 0.0);
        xhat_next.gemv(1.0, gain, &k_tilde, 1.0);
        std::mem::swap(&mut xhat_dec, &mut xhat_next);
        // encoder replica, fed back b_t
        xhat_next.gemv(1.0, a, &xhat_enc, 0.0);
        xhat_next.gemv(1.0, gain, &k_tilde, 1.0);
        std::mem::swap(&mut xhat_enc, &mut xhat_next);
        if xhat_enc != xhat_dec {
            return Err(Error::NonFinite(format!("encoder replica diverged from decoder at step {t}")));
        }
        let norm = xhat_dec.amax();
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::Divergence { step: t, norm });
        }

        if t >= burn_in {
            let kk = t - burn_in;
            dist.push(kk, err.norm_squared());
            power.push(kk, a_t * a_t);
            mode_err.gemv(1.0, &design.e, &err, 0.0);
            for (acc, e) in per_mode.iter_mut().zip(mode_err.iter()) {
                *acc += e * e;
            }
        }

        proc.fill(w.as_mut_slice());
        x_next.gemv(1.0, a, &x, 0.0);
        x_next.gemv(1.0, b, &w, 1.0);
        std::mem::swap(&mut x, &mut x_next);
    }

    let (empirical_distortion, stderr_distortion) = dist.finish();
    let (empirical_power, stderr_power) = power.finish();
    if !empirical_distortion.is_finite() {
        return Err(Error::NonFinite("empirical distortion".into()));
    }
    Ok(SimReport {
        steps: horizon,
        burn_in,
        seed,
        empirical_distortion,
        stderr_distortion,
        empirical_power,
        stderr_power,
        analytic_d: realization::analytic_distortion(design, &design.lambda),
        analytic_p: design.p,
        per_mode_distortion: per_mode.iter().map(|s| s / measured as f64).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    pub q: f64,
    pub steps: usize,
    pub base_seed: u64,
    pub burn_in: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            q: 1.0,
            steps: 1_000_000,
            base_seed: 0,
            burn_in: DEFAULT_BURN_IN,
            tol: 1e-9,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug)]
pub enum RowOutcome {
    Done { rate_nats: f64, report: SimReport },
    Failed(Error),
    /// Skipped because the sweep was interrupted.
    Cancelled,
}

#[derive(Debug)]
pub struct SweepRow {
    pub d: f64,
    pub seed: u64,
    pub outcome: RowOutcome,
}

/// Seed of row `i` of a sweep.
pub fn row_seed(base_seed: u64, i: usize) -> u64 {
    base_seed.wrapping_add(i as u64)
}

/// Designs and simulates each grid point independently. A failing row does
/// not abort the others; rows not yet started when `cancel` is raised are
/// reported as [`RowOutcome::Cancelled`].
pub fn sweep(model: &StateSpaceModel, d_grid: &[f64], cfg: &SweepConfig, cancel: &AtomicBool) -> Vec<SweepRow> {
    d_grid
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            let seed = row_seed(cfg.base_seed, i);
            if cancel.load(Ordering::Relaxed) {
                return SweepRow {
                    d,
                    seed,
                    outcome: RowOutcome::Cancelled,
                };
            }
            let outcome = realization::design_steady_state(model, d, cfg.q, cfg.tol, cfg.max_iter)
                .and_then(|design| {
                    let report = run_chain(model, &design, cfg.steps, seed, cfg.burn_in)?;
                    Ok(RowOutcome::Done {
                        rate_nats: design.rate_nats,
                        report,
                    })
                })
                .unwrap_or_else(|e| RowOutcome::Failed(e.at_distortion(d)));
            SweepRow { d, seed, outcome }
        })
        .collect()
}

pub const SIM_CSV_HEADER: &str = "D,rate_nats,P,Q,empirical_distortion,stderr,empirical_power,steps,seed";
/// Last line of a CSV cut short by an interrupt.
pub const TRUNCATION_MARKER: &str = "# truncated: interrupted before all rows completed";

/// Writes the sweep table. Failed rows become `# error` comment lines;
/// cancelled rows end the table with [`TRUNCATION_MARKER`].
pub fn write_sweep_csv<W: Write>(mut out: W, rows: &[SweepRow], q: f64, bits: bool) -> std::io::Result<()> {
    let header = if bits {
        SIM_CSV_HEADER.replace("rate_nats", "rate_bits")
    } else {
        SIM_CSV_HEADER.to_string()
    };
    writeln!(out, "{header}")?;
    let scale = if bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
    for row in rows {
        match &row.outcome {
            RowOutcome::Done { rate_nats, report } => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.d,
                rate_nats * scale,
                report.analytic_p,
                q,
                report.empirical_distortion,
                report.stderr_distortion,
                report.empirical_power,
                report.steps,
                row.seed
            )?,
            RowOutcome::Failed(e) => writeln!(out, "# error at D={}: {e}", row.d)?,
            RowOutcome::Cancelled => {
                writeln!(out, "{TRUNCATION_MARKER}")?;
                break;
            }
        }
    }
    out.flush()
}
