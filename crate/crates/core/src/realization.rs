//! Realization of the optimal reproduction over a scalar AWGN channel.
//!
//! The encoder rotates the innovation into its eigenmodes and compresses the
//! active modes into one channel symbol,
//!
//! ```text
//! A_t = Aenc E K_t,          Aenc_i = sqrt(alpha_i P / lambda_i)
//! B_t = A_t + Z_t,           Z_t ~ N(0, Q)
//! Y~_t = E^t Bdec B_t + C xhat_t,  Bdec_i = sqrt(alpha_i P lambda_i) / (P + Q)
//! ```
//!
//! and the decoder's predictor runs the modified Kalman filter driven by the
//! reproductions. The power is matched so that `1/2 ln(1 + P/Q)` equals the
//! rate of the water-filling allocation. The decoder gain includes the
//! `1/(P+Q)` factor that makes it the linear MMSE estimate of each mode from
//! `B_t`; with a single active mode the end-to-end distortion then equals
//! `D` exactly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::export::{json_matrix, json_num, json_object, json_vec};
use crate::gauss_source::{self, StateSpaceModel};
use crate::linalg;
use crate::nrdf_gauss::{self, WaterFillAllocation};

/// Relative singular-value cutoff used when inverting `M`.
pub const PINV_CUTOFF: f64 = 1e-12;
/// Tolerance of the total-distortion identity checks.
pub const DISTORTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    /// Noise variance `Var(Z_t)`.
    pub q: f64,
    /// Input power `E[A_t^2]`.
    pub p: f64,
}

impl ChannelModel {
    pub fn new(q: f64, p: f64) -> Result<Self> {
        if !(q > 0.0) || !(p >= 0.0) {
            return Err(Error::Domain(format!("channel needs Q > 0 and P >= 0, got Q={q}, P={p}")));
        }
        Ok(Self { q, p })
    }

    /// `1/2 ln(1 + P/Q)` nats per channel use.
    pub fn capacity(&self) -> f64 {
        0.5 * (self.p / self.q).ln_1p()
    }
}

/// Steady-state encoder/decoder pair together with the filter it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationDesign {
    /// Rows are the innovation eigenvectors. Signs follow the fixed-point
    /// iteration (see [`solve_fixed_point`]) and are part of the design.
    pub e: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    /// 1 x p encoder row.
    pub a_enc: DMatrix<f64>,
    /// p x 1 decoder column.
    pub b_dec: DMatrix<f64>,
    /// `b_dec * a_enc`, in the eigen frame.
    pub h: DMatrix<f64>,
    /// Steady-state prediction error covariance of the modified filter.
    pub sigma: DMatrix<f64>,
    pub m: DMatrix<f64>,
    /// `A Sigma C~^t M^+`, the predictor gain applied to `Y~_t - C xhat_t`.
    pub filter_gain: DMatrix<f64>,
    pub p: f64,
    pub q: f64,
    pub alloc: WaterFillAllocation,
    pub rate_nats: f64,
}

impl RealizationDesign {
    pub fn channel(&self) -> ChannelModel {
        ChannelModel {
            q: self.q,
            p: self.p,
        }
    }

    pub fn obs_dim(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_zero_rate(&self) -> bool {
        self.alloc.is_zero_rate()
    }

    /// Total distortion the allocation asks for, `sum_i delta_i`.
    pub fn target_distortion(&self) -> f64 {
        self.alloc.delta.iter().sum()
    }

    /// Diagonal of the end-to-end error covariance in the eigen frame.
    pub fn per_mode_distortion(&self) -> Vec<f64> {
        let cov = mode_error_cov(&self.h, &self.b_dec, &self.lambda, self.q);
        cov.diagonal().iter().copied().collect()
    }

    /// `E^t H E`, the innovation-to-reproduction map in observation coordinates.
    pub fn rotated_h(&self) -> DMatrix<f64> {
        self.e.transpose() * &self.h * &self.e
    }

    /// Lists every violated design invariant; empty when the design is sound.
    pub fn invariant_violations(&self, model: &StateSpaceModel) -> Vec<String> {
        let mut out = Vec::new();
        let active = &self.alloc.active;
        if self.alpha.iter().any(|&a| a < 0.0) {
            out.push("negative alpha".to_string());
        }
        let alpha_sum: f64 = self.alpha.iter().sum();
        let expected = if active.is_empty() { 0.0 } else { 1.0 };
        if (alpha_sum - expected).abs() > 1e-12 {
            out.push(format!("alpha sums to {alpha_sum}, expected {expected}"));
        }
        for (i, &a) in self.alpha.iter().enumerate() {
            if !active.contains(&i) && a != 0.0 {
                out.push(format!("alpha[{i}] nonzero on inactive mode"));
            }
        }
        let rank = self
            .h
            .clone()
            .singular_values()
            .iter()
            .filter(|&&s| s > 1e-12 * self.p.max(1.0))
            .count();
        if rank > 1 {
            out.push(format!("H has rank {rank}"));
        }
        let analytic = analytic_distortion(self, &self.lambda);
        let target = self.target_distortion();
        if (analytic - target).abs() > DISTORTION_TOL * target.max(1.0) {
            out.push(format!("analytic distortion {analytic} != {target}"));
        }
        let gap = (self.channel().capacity() - self.rate_nats).abs();
        if gap > 1e-10 {
            out.push(format!("capacity/rate gap {gap:e}"));
        }
        let lam = nrdf_gauss::innovation_covariance(&self.sigma, model);
        let used = self.e.transpose() * DMatrix::from_diagonal(&DVector::from_column_slice(&self.lambda)) * &self.e;
        let filter_gap = linalg::sup_norm(&(lam - used));
        if filter_gap > 1e-8 {
            out.push(format!("filter inconsistency {filter_gap:e}"));
        }
        out
    }

    /// JSON export with every number printed to 17 significant digits.
    pub fn to_json(&self) -> String {
        json_object(&[
            ("E", json_matrix(&self.e)),
            ("alpha", json_vec(&self.alpha)),
            ("Aenc", json_vec(self.a_enc.as_slice())),
            ("Bdec", json_vec(self.b_dec.as_slice())),
            ("H", json_matrix(&self.h)),
            ("Sigma", json_matrix(&self.sigma)),
            ("M", json_matrix(&self.m)),
            ("P", json_num(self.p)),
            ("Q", json_num(self.q)),
            ("lambda", json_vec(&self.lambda)),
            ("delta", json_vec(&self.alloc.delta)),
            ("rate_nats", json_num(self.rate_nats)),
        ])
    }

    /// Reads a design exported by [`RealizationDesign::to_json`]; the model
    /// supplies `A` and `C` for the predictor gain.
    pub fn from_json_str(s: &str, model: &StateSpaceModel) -> Result<Self> {
        let f: DesignFile = serde_json::from_str(s)?;
        let p = f.lambda.len();
        let e = linalg::from_rows("E", &f.e)?;
        linalg::expect_shape("E", &e, p, p)?;
        if model.obs_dim() != p {
            return Err(Error::Dimension {
                matrix: "lambda",
                expected: format!("{}", model.obs_dim()),
                got: format!("{p}"),
            });
        }
        let d: f64 = f.delta.iter().sum();
        let alloc = nrdf_gauss::reverse_waterfill(&f.lambda, d)?;
        if alloc
            .delta
            .iter()
            .zip(&f.delta)
            .any(|(a, b)| (a - b).abs() > 1e-9 * d.max(1.0))
        {
            return Err(Error::InvalidModel("delta is not a water-filling allocation of lambda".into()));
        }
        let a_enc = DMatrix::from_row_slice(1, p, &f.a_enc);
        let b_dec = DMatrix::from_column_slice(p, 1, &f.b_dec);
        let h = linalg::from_rows("H", &f.h)?;
        let sigma = linalg::from_rows("Sigma", &f.sigma)?;
        let m = linalg::from_rows("M", &f.m)?;
        linalg::expect_shape("Sigma", &sigma, model.state_dim(), model.state_dim())?;
        let mut design = RealizationDesign {
            e,
            lambda: f.lambda,
            alpha: f.alpha,
            a_enc,
            b_dec,
            h,
            sigma,
            m,
            filter_gain: DMatrix::zeros(model.state_dim(), p),
            p: f.p,
            q: f.q,
            alloc,
            rate_nats: f.rate_nats,
        };
        design.filter_gain = predictor_gain(&design.sigma, &design.m, &coupling(&design, model), model);
        Ok(design)
    }
}

#[derive(Deserialize, Serialize)]
struct DesignFile {
    #[serde(rename = "E")]
    e: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    #[serde(rename = "Aenc")]
    a_enc: Vec<f64>,
    #[serde(rename = "Bdec")]
    b_dec: Vec<f64>,
    #[serde(rename = "H")]
    h: Vec<Vec<f64>>,
    #[serde(rename = "Sigma")]
    sigma: Vec<Vec<f64>>,
    #[serde(rename = "M")]
    m: Vec<Vec<f64>>,
    #[serde(rename = "P")]
    p: f64,
    #[serde(rename = "Q")]
    q: f64,
    lambda: Vec<f64>,
    delta: Vec<f64>,
    rate_nats: f64,
}

/// Predictor mean `xhat_{t|t-1}` shared by encoder and decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub xhat: DVector<f64>,
}

impl KalmanState {
    pub fn new(model: &StateSpaceModel) -> Self {
        Self {
            xhat: model.x0_mean.clone(),
        }
    }
}

/// `P = Q (prod_i lambda_i / delta_i - 1)`, the power at which the channel
/// capacity equals the water-filling rate.
pub fn capacity_matched_power(lambda: &[f64], alloc: &WaterFillAllocation, q: f64) -> f64 {
    if alloc.is_zero_rate() {
        return 0.0;
    }
    let log_ratio: f64 = alloc.active.iter().map(|&i| (lambda[i] / alloc.delta[i]).ln()).sum();
    q * log_ratio.exp_m1()
}

/// Left-hand side minus right-hand side of the total-distortion identity
/// `sum_i [(1 - alpha_i P)^2 lambda_i + alpha_i P Q lambda_i] = D` over the
/// active modes.
pub fn total_distortion_residual(lambda: &[f64], alpha: &[f64], d: f64, p: f64, q: f64) -> f64 {
    lambda
        .iter()
        .zip(alpha)
        .map(|(&l, &a)| (1.0 - a * p).powi(2) * l + a * p * q * l)
        .sum::<f64>()
        - d
}

/// Coefficients `(a, b, c)` of the quadratic in `alpha_2` obtained by
/// substituting `alpha_1 = 1 - alpha_2` into the two-mode distortion
/// identity.
pub fn two_mode_quadratic(l1: f64, l2: f64, d: f64, p: f64, q: f64) -> [f64; 3] {
    [
        (l1 + l2) * p * p,
        p * ((l1 - l2) * (2.0 - q) - 2.0 * l1 * p),
        (l1 + l2) - d + l1 * p * (p + q - 2.0),
    ]
}

fn real_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    if a == 0.0 {
        return if b == 0.0 { Vec::new() } else { vec![-c / b] };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        // tangent within rounding
        if disc > -1e-12 * b * b {
            return vec![-b / (2.0 * a)];
        }
        return Vec::new();
    }
    let sq = disc.sqrt();
    let t = -0.5 * (b + b.signum() * sq);
    let mut roots = vec![t / a];
    if t != 0.0 {
        roots.push(c / t);
    } else {
        roots.push(-b / a - t / a);
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots
}

/// Power split across the active modes.
///
/// One active mode takes all the power. For two modes `alpha_2` is a root in
/// `[0, 1]` of [`two_mode_quadratic`] that satisfies the total-distortion
/// identity to `1e-8`; if both roots qualify, the one whose per-mode
/// distortions are closest to the water-filling split wins. More than two
/// active modes are rejected.
pub fn solve_alpha(lambda_active: &[f64], d: f64, p: f64, q: f64) -> Result<Vec<f64>> {
    match lambda_active.len() {
        0 => Ok(Vec::new()),
        1 => Ok(vec![1.0]),
        2 => {
            let (l1, l2) = (lambda_active[0], lambda_active[1]);
            let [a, b, c] = two_mode_quadratic(l1, l2, d, p, q);
            let roots = real_roots(a, b, c);
            let tol = DISTORTION_TOL * d.max(1.0);
            let xi = d / 2.0;
            let split_err = |alpha: &[f64; 2]| -> f64 {
                [l1, l2]
                    .iter()
                    .zip(alpha)
                    .map(|(&l, &al)| ((1.0 - al * p).powi(2) * l + al * p * q * l - xi).powi(2))
                    .sum()
            };
            let mut best: Option<([f64; 2], f64)> = None;
            for &r in &roots {
                if !(-1e-12..=1.0 + 1e-12).contains(&r) {
                    continue;
                }
                let a2 = r.clamp(0.0, 1.0);
                let alpha = [1.0 - a2, a2];
                let resid = total_distortion_residual(&[l1, l2], &alpha, d, p, q).abs();
                if resid > tol {
                    continue;
                }
                let score = split_err(&alpha);
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((alpha, score));
                }
            }
            best.map(|(alpha, _)| alpha.to_vec()).ok_or(Error::Infeasible {
                d,
                p,
                q,
                roots,
            })
        }
        k => Err(Error::UnsupportedModeCount(k)),
    }
}

/// Matrices of the modified filter that depend on the design.
#[derive(Debug, Clone)]
struct Coupling {
    /// `E^t H E C`
    c_tilde: DMatrix<f64>,
    /// `E^t H E G`
    noise_obs: DMatrix<f64>,
    /// Maps the channel (or test-channel) noise into observation coordinates.
    noise_chan: DMatrix<f64>,
    q: f64,
    /// Orthonormal basis (p x r) of the subspace the drive lives in; `M` is
    /// invertible on it and zero off it.
    range: DMatrix<f64>,
}

impl Coupling {
    /// Moore–Penrose inverse of `m`, taken on the known range so that
    /// rounding in the null directions never leaks into the gain.
    fn pinv(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let u = &self.range;
        if u.ncols() == 0 {
            return DMatrix::zeros(m.nrows(), m.ncols());
        }
        let reduced = u.transpose() * m * u;
        let inv = reduced
            .clone()
            .cholesky()
            .map(|c| c.inverse())
            .unwrap_or_else(|| linalg::pinv(&reduced, PINV_CUTOFF));
        u * inv * u.transpose()
    }
}

fn unit_columns(v: DMatrix<f64>) -> DMatrix<f64> {
    let norm = v.norm();
    if norm > 0.0 {
        v / norm
    } else {
        DMatrix::zeros(v.nrows(), 0)
    }
}

fn coupling(design: &RealizationDesign, model: &StateSpaceModel) -> Coupling {
    let ht = design.rotated_h();
    let noise_chan = design.e.transpose() * &design.b_dec;
    Coupling {
        c_tilde: &ht * &model.c,
        noise_obs: &ht * &model.g,
        range: unit_columns(noise_chan.clone()),
        noise_chan,
        q: design.q,
    }
}

fn innovation_gain_cov(sigma: &DMatrix<f64>, cp: &Coupling) -> DMatrix<f64> {
    let mut m = &cp.c_tilde * sigma * cp.c_tilde.transpose()
        + &cp.noise_obs * cp.noise_obs.transpose()
        + &cp.noise_chan * cp.noise_chan.transpose() * cp.q;
    linalg::symmetrize(&mut m);
    m
}

fn predictor_gain(
    sigma: &DMatrix<f64>,
    m: &DMatrix<f64>,
    cp: &Coupling,
    model: &StateSpaceModel,
) -> DMatrix<f64> {
    &model.a * sigma * cp.c_tilde.transpose() * cp.pinv(m)
}

fn riccati_step_inner(
    sigma: &DMatrix<f64>,
    cp: &Coupling,
    model: &StateSpaceModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let m = innovation_gain_cov(sigma, cp);
    let a_sigma = &model.a * sigma;
    let cross = &a_sigma * cp.c_tilde.transpose();
    let mut next = &a_sigma * model.a.transpose()
        - &cross * cp.pinv(&m) * cross.transpose()
        + model.process_cov();
    linalg::symmetrize(&mut next);
    if !linalg::all_finite(&next) || !linalg::all_finite(&m) {
        return Err(Error::NonFinite("Riccati iterate".into()));
    }
    Ok((next, m))
}

/// One step of the modified filter's Riccati recursion. Returns the next
/// error covariance and the innovation covariance `M` at `sigma`.
pub fn riccati_step(
    sigma: &DMatrix<f64>,
    design: &RealizationDesign,
    model: &StateSpaceModel,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    riccati_step_inner(sigma, &coupling(design, model), model)
}

/// Iteration outcome of a Riccati solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiccatiTrace {
    pub iterations: usize,
    pub residual: f64,
}

fn solve_riccati(
    sigma0: &DMatrix<f64>,
    cp: &Coupling,
    model: &StateSpaceModel,
    tol: f64,
    max_iter: usize,
) -> Result<(DMatrix<f64>, RiccatiTrace)> {
    let mut sigma = sigma0.clone();
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let (next, _) = riccati_step_inner(&sigma, cp, model).map_err(|_| {
            Error::NonFinite(format!("Riccati iterate {it} (last residual {residual:e})"))
        })?;
        residual = linalg::sup_norm(&(&next - &sigma));
        sigma = next;
        if residual <= tol * linalg::sup_norm(&sigma).max(1.0) {
            return Ok((
                sigma,
                RiccatiTrace {
                    iterations: it,
                    residual,
                },
            ));
        }
    }
    Err(Error::NonConvergence {
        what: "Riccati recursion".into(),
        iterations: max_iter,
        residual,
    })
}

/// Standard (raw-observation) Kalman predictor covariance, used to seed the
/// fixed point when `A` is not stable.
fn predictor_riccati(model: &StateSpaceModel, max_iter: usize) -> Result<DMatrix<f64>> {
    let r = model.observation_cov();
    let mut sigma = &model.x0_cov + DMatrix::identity(model.state_dim(), model.state_dim());
    for _ in 0..max_iter {
        let s = &model.c * &sigma * model.c.transpose() + &r;
        let a_sigma = &model.a * &sigma;
        let cross = &a_sigma * model.c.transpose();
        let mut next = &a_sigma * model.a.transpose()
            - &cross * linalg::pinv(&s, PINV_CUTOFF) * cross.transpose()
            + model.process_cov();
        linalg::symmetrize(&mut next);
        if !linalg::all_finite(&next) {
            return Err(Error::NonFinite("predictor Riccati".into()));
        }
        let res = linalg::sup_norm(&(&next - &sigma));
        sigma = next;
        if res <= 1e-13 * linalg::sup_norm(&sigma).max(1.0) {
            break;
        }
    }
    Ok(sigma)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointConfig {
    /// Channel noise variance.
    pub q: f64,
    /// Sup-norm tolerance on successive innovation covariances.
    pub tol: f64,
    pub max_outer: usize,
    /// Initial fraction of the new innovation covariance blended in per
    /// step; halved whenever the residual grows.
    pub damping: f64,
    /// Relative tolerance of each inner Riccati solve.
    pub riccati_tol: f64,
    pub riccati_max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            q: 1.0,
            tol: 1e-9,
            max_outer: 10_000,
            damping: 0.5,
            riccati_tol: 1e-12,
            riccati_max_iter: 10_000,
        }
    }
}

/// Converged joint fixed point with its iteration record.
#[derive(Debug, Clone)]
pub struct FixedPoint {
    pub design: RealizationDesign,
    pub outer_iterations: usize,
    /// Final `|C Sigma C^t + G G^t - Lambda_used|_inf`.
    pub lambda_residual: f64,
    pub riccati: RiccatiTrace,
}

/// Builds the encoder/decoder for a given innovation covariance. `sigma`
/// and the filter terms are left for the caller to fill.
///
/// With `previous`, each eigenvector is flipped to agree in sign with the
/// matching row of it. The rank-one encoder direction
/// `sum_i b_i e_i` depends on the relative signs of the rows, so the outer
/// loop has to keep them continuous: the fixed sign convention can flip a
/// row whose two largest entries are tied in magnitude.
fn design_oriented(
    lambda_cov: &DMatrix<f64>,
    d: f64,
    q: f64,
    m: usize,
    previous: Option<&DMatrix<f64>>,
) -> Result<RealizationDesign> {
    let mut dec = nrdf_gauss::diagonalize(lambda_cov)?;
    if let Some(prev) = previous.filter(|p| p.shape() == dec.e.shape()) {
        for i in 0..dec.e.nrows() {
            if dec.e.row(i).dot(&prev.row(i)) < 0.0 {
                dec.e.row_mut(i).neg_mut();
            }
        }
    }
    let lambda = dec.eigenvalues;
    let p_dim = lambda.len();
    let alloc = nrdf_gauss::reverse_waterfill(&lambda, d)?;
    let rate_nats = nrdf_gauss::rate_na(&alloc, &lambda)?;
    let power = capacity_matched_power(&lambda, &alloc, q);

    let lambda_active: Vec<f64> = alloc.active.iter().map(|&i| lambda[i]).collect();
    let d_active: f64 = alloc.active.iter().map(|&i| alloc.delta[i]).sum();
    let alpha_active = solve_alpha(&lambda_active, d_active, power, q)?;
    let mut alpha = vec![0.0; p_dim];
    for (&i, &a) in alloc.active.iter().zip(&alpha_active) {
        alpha[i] = a;
    }

    let mut a_enc = DMatrix::zeros(1, p_dim);
    let mut b_dec = DMatrix::zeros(p_dim, 1);
    for &i in &alloc.active {
        a_enc[(0, i)] = (alpha[i] * power / lambda[i]).sqrt();
        b_dec[(i, 0)] = (alpha[i] * power * lambda[i]).sqrt() / (power + q);
    }
    let h = &b_dec * &a_enc;
    Ok(RealizationDesign {
        e: dec.e,
        lambda,
        alpha,
        a_enc,
        b_dec,
        h,
        sigma: DMatrix::zeros(m, m),
        m: DMatrix::zeros(p_dim, p_dim),
        filter_gain: DMatrix::zeros(m, p_dim),
        p: power,
        q,
        alloc,
        rate_nats,
    })
}

const MIN_DAMPING: f64 = 1.0 / 1024.0;

/// Outcome of the shared outer loop.
struct Converged<T> {
    built: T,
    coupling: Coupling,
    sigma: DMatrix<f64>,
    outer: usize,
    residual: f64,
    riccati: RiccatiTrace,
}

/// Outer loop shared by the realization and test-channel fixed points:
/// build the filter drive for the current innovation covariance, solve the
/// Riccati equation for it, and move the innovation covariance (damped)
/// toward `C Sigma C^t + G G^t` until it stops changing. The damping starts
/// at `cfg.damping` and is halved each time the residual grows.
fn iterate_fixed_point<T>(
    model: &StateSpaceModel,
    d: f64,
    cfg: &FixedPointConfig,
    what: &str,
    build: impl Fn(&DMatrix<f64>) -> Result<(T, Coupling)>,
) -> Result<Converged<T>> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distortion must be positive, got {d}")));
    }
    let mut sigma = match gauss_source::stationary_state_cov(model) {
        Ok(pi) => pi,
        Err(Error::Nonstationary(_)) => predictor_riccati(model, cfg.riccati_max_iter)?,
        Err(e) => return Err(e),
    };
    let mut lambda_cov = nrdf_gauss::innovation_covariance(&sigma, model);
    let mut residual = f64::INFINITY;
    let mut damping = cfg.damping;
    for outer in 1..=cfg.max_outer {
        let (built, cp) = build(&lambda_cov)?;
        let (next_sigma, trace) = solve_riccati(&sigma, &cp, model, cfg.riccati_tol, cfg.riccati_max_iter)?;
        sigma = next_sigma;
        let lambda_new = nrdf_gauss::innovation_covariance(&sigma, model);
        let previous = residual;
        residual = linalg::sup_norm(&(&lambda_new - &lambda_cov));
        if residual <= cfg.tol {
            return Ok(Converged {
                built,
                coupling: cp,
                sigma,
                outer,
                residual,
                riccati: trace,
            });
        }
        // a growing residual means the damped map is overshooting
        if residual > previous {
            damping = (damping * 0.5).max(MIN_DAMPING);
        }
        lambda_cov = &lambda_cov + (lambda_new - &lambda_cov) * damping;
        linalg::symmetrize(&mut lambda_cov);
    }
    Err(Error::NonConvergence {
        what: what.into(),
        iterations: cfg.max_outer,
        residual,
    })
}

/// Runs the joint fixed point between the water-filling design and the
/// modified filter, without enforcing the end-to-end distortion identity.
///
/// Each outer step designs the encoder/decoder for the current innovation
/// covariance, solves the filter Riccati equation for that design, and moves
/// the innovation covariance halfway (by default) toward `C Sigma C^t + G G^t`.
/// Eigenvectors take the usual sign convention on the first step and are kept
/// sign-continuous afterwards.
pub fn solve_fixed_point(model: &StateSpaceModel, d: f64, cfg: &FixedPointConfig) -> Result<FixedPoint> {
    if !(cfg.q > 0.0) {
        return Err(Error::Domain(format!("channel noise must be positive, got {}", cfg.q)));
    }
    let m = model.state_dim();
    let previous_e = std::cell::RefCell::new(None);
    let c = iterate_fixed_point(model, d, cfg, "joint filter/realization fixed point", |lam| {
        let design = design_oriented(lam, d, cfg.q, m, previous_e.borrow().as_ref())?;
        *previous_e.borrow_mut() = Some(design.e.clone());
        let cp = coupling(&design, model);
        Ok((design, cp))
    })?;
    let mut design = c.built;
    let m_cov = innovation_gain_cov(&c.sigma, &c.coupling);
    design.filter_gain = predictor_gain(&c.sigma, &m_cov, &c.coupling, model);
    design.sigma = c.sigma;
    design.m = m_cov;
    Ok(FixedPoint {
        design,
        outer_iterations: c.outer,
        lambda_residual: c.residual,
        riccati: c.riccati,
    })
}

/// Steady state of the filter driven by the optimal reproduction itself,
/// `Y~_t = E^t H E K_t + E^t sqrt(H Delta) Z_t + C xhat_t` with
/// `H = diag(eta)`, `Delta = diag(delta)` and `Z_t` standard normal.
#[derive(Debug, Clone)]
pub struct TestChannelFixedPoint {
    pub e: DMatrix<f64>,
    pub lambda: Vec<f64>,
    pub alloc: WaterFillAllocation,
    pub rate_nats: f64,
    pub sigma: DMatrix<f64>,
    pub outer_iterations: usize,
    pub lambda_residual: f64,
    pub riccati: RiccatiTrace,
}

/// Joint fixed point of reverse water-filling and the filter driven by the
/// optimal test channel. This is what the rate curve is computed from; it
/// needs no channel and is defined for any number of active modes. With a
/// single active mode it coincides with [`solve_fixed_point`].
pub fn solve_test_channel_fixed_point(
    model: &StateSpaceModel,
    d: f64,
    cfg: &FixedPointConfig,
) -> Result<TestChannelFixedPoint> {
    let c = iterate_fixed_point(model, d, cfg, "joint filter/test-channel fixed point", |lam| {
        let dec = nrdf_gauss::diagonalize(lam)?;
        let alloc = nrdf_gauss::reverse_waterfill(&dec.eigenvalues, d)?;
        let et = dec.e.transpose();
        let ht = &et * alloc.h_diag() * &dec.e;
        let spread = DVector::from_iterator(
            alloc.eta.len(),
            alloc.eta.iter().zip(&alloc.delta).map(|(h, dl)| (h * dl).sqrt()),
        );
        let range = et.select_columns(&alloc.active);
        let cp = Coupling {
            c_tilde: &ht * &model.c,
            noise_obs: &ht * &model.g,
            noise_chan: et * DMatrix::from_diagonal(&spread),
            q: 1.0,
            range,
        };
        Ok(((dec, alloc), cp))
    })?;
    let (dec, alloc) = c.built;
    let rate_nats = nrdf_gauss::rate_na(&alloc, &dec.eigenvalues)?;
    Ok(TestChannelFixedPoint {
        e: dec.e,
        lambda: dec.eigenvalues,
        alloc,
        rate_nats,
        sigma: c.sigma,
        outer_iterations: c.outer,
        lambda_residual: c.residual,
        riccati: c.riccati,
    })
}

/// Steady-state realization for distortion `d` over a channel with noise
/// variance `q`.
///
/// Fails with [`Error::DistortionMismatch`] (carrying the converged design)
/// when the design does not reproduce the allocated distortion to `1e-8`.
pub fn design_steady_state(
    model: &StateSpaceModel,
    d: f64,
    q: f64,
    tol: f64,
    max_iter: usize,
) -> Result<RealizationDesign> {
    let cfg = FixedPointConfig {
        q,
        tol,
        max_outer: max_iter,
        ..FixedPointConfig::default()
    };
    let fp = solve_fixed_point(model, d, &cfg)?;
    enforce_distortion(fp.design)
}

pub(crate) fn enforce_distortion(design: RealizationDesign) -> Result<RealizationDesign> {
    let analytic = analytic_distortion(&design, &design.lambda);
    let target = design.target_distortion();
    if (analytic - target).abs() > DISTORTION_TOL * target.max(1.0) {
        return Err(Error::DistortionMismatch {
            analytic,
            target,
            active: design.alloc.k_active(),
            design: Box::new(design),
        });
    }
    Ok(design)
}

fn mode_error_cov(h: &DMatrix<f64>, b_dec: &DMatrix<f64>, lambda: &[f64], q: f64) -> DMatrix<f64> {
    let p = lambda.len();
    let i_minus_h = DMatrix::<f64>::identity(p, p) - h;
    let lam = DMatrix::from_diagonal(&DVector::from_column_slice(lambda));
    &i_minus_h * lam * i_minus_h.transpose() + b_dec * b_dec.transpose() * q
}

/// `Tr{(I - H) diag(lambda) (I - H)^t + Bdec Q Bdec^t}`.
pub fn analytic_distortion(design: &RealizationDesign, lambda: &[f64]) -> f64 {
    mode_error_cov(&design.h, &design.b_dec, lambda, design.q).trace()
}

/// Channel input for observation `y` given the shared predictor state.
pub fn encode(
    y: &DVector<f64>,
    state: &KalmanState,
    design: &RealizationDesign,
    model: &StateSpaceModel,
) -> f64 {
    let innovation = y - &model.c * &state.xhat;
    let gamma = &design.e * innovation;
    (&design.a_enc * gamma)[(0, 0)]
}

/// Reproduction for channel output `b`, and the advanced predictor state.
pub fn decode(
    b: f64,
    state: &KalmanState,
    design: &RealizationDesign,
    model: &StateSpaceModel,
) -> (DVector<f64>, KalmanState) {
    let gamma_tilde = &design.b_dec * b;
    let k_tilde: DVector<f64> = (design.e.transpose() * gamma_tilde).column(0).into_owned();
    let prediction = &model.c * &state.xhat;
    let y_tilde = &k_tilde + prediction;
    let xhat = &model.a * &state.xhat + &design.filter_gain * k_tilde;
    (y_tilde, KalmanState { xhat })
}
