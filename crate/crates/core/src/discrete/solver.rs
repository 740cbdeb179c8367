//! Alternating minimization for the finite-alphabet nonanticipative RDF.
//!
//! For a fixed slope `s <= 0` the kernels and reproduction marginals are
//! updated in turn,
//!
//! ```text
//! Q(y_i | y^{i-1}, x^i) = e^{s rho(x_i, y_i)} P(y_i | y^{i-1}) / Z_i(x_i, y^{i-1})
//! P(y_i | y^{i-1})      = marginal of Q under the source,
//! ```
//!
//! which at horizon 0 is the classical Blahut–Arimoto iteration. An outer
//! bisection on `s` hits the target distortion. The rate is reported twice:
//! by enumerating directed information, and by the closed form
//! `(n+1) s D - sum_i E[ln Z_i(X_i, Y^{i-1})]`.
//!
//! For `n >= 1` the per-stage update is applied without a proof that the
//! alternation converges; failure to converge is reported, not assumed away.

use super::enumerate::{self, StageJoints};
use super::instance::{CausalKernelFamily, FiniteSource, Marginals};
use crate::error::{Error, Result};
use crate::export::{json_num, json_object, json_rows};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Sup-norm change in the marginals that ends the inner loop.
    pub inner_tol: f64,
    pub max_sweeps: usize,
    /// Allowed gap between achieved and target distortion.
    pub distortion_tol: f64,
    pub max_bisections: usize,
    /// Allowed gap between the enumerated and closed-form rates.
    pub rate_agreement_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            inner_tol: 1e-10,
            max_sweeps: 100_000,
            distortion_tol: 1e-8,
            max_bisections: 200,
            rate_agreement_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NrdfSolution {
    pub kernels: CausalKernelFamily,
    pub marginals: Marginals,
    /// Lagrange slope, `s <= 0`.
    pub s: f64,
    /// Target per-letter distortion.
    pub d: f64,
    /// Achieved per-letter distortion.
    pub distortion: f64,
    /// Directed information over all stages (nats).
    pub rate_nats: f64,
    /// Closed-form rate at the same kernels (nats).
    pub rate_closed_form_nats: f64,
    pub stages: usize,
    pub sweeps: usize,
}

impl NrdfSolution {
    pub fn rate_per_stage(&self) -> f64 {
        self.rate_nats / self.stages as f64
    }

    pub fn to_json(&self, source: &FiniteSource) -> String {
        let kernels: Vec<String> = self
            .kernels
            .stages
            .iter()
            .enumerate()
            .map(|(i, k)| json_rows(k, source.y_size(i)))
            .collect();
        let marginals: Vec<String> = self
            .marginals
            .stages
            .iter()
            .enumerate()
            .map(|(i, m)| json_rows(m, source.y_size(i)))
            .collect();
        json_object(&[
            ("D", json_num(self.d)),
            ("s", json_num(self.s)),
            ("distortion", json_num(self.distortion)),
            ("rate_nats", json_num(self.rate_nats)),
            ("rate_closed_form_nats", json_num(self.rate_closed_form_nats)),
            ("kernels", format!("[{}]", kernels.join(", "))),
            ("marginals", format!("[{}]", marginals.join(", "))),
        ])
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

/// `ln Z_i(x_i, y^{i-1}) = ln sum_y e^{s rho(x_i, y)} P(y | y^{i-1})`,
/// indexed `y^{i-1} * |X_i| + x_i`.
fn log_partitions(source: &FiniteSource, marginals: &Marginals, s: f64) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(source.stages());
    for i in 0..source.stages() {
        let (nx, ny) = (source.x_size(i), source.y_size(i));
        let rho = source.distortion(i);
        let mut stage = Vec::with_capacity(source.y_prefixes(i) * nx);
        let mut buf = vec![0.0; ny];
        for (yp, row) in marginals.stages[i].chunks(ny).enumerate() {
            if row.iter().all(|&v| v <= 0.0) {
                return Err(Error::InvalidModel(format!(
                    "all-zero marginal row {yp} at stage {i}"
                )));
            }
            for x in 0..nx {
                for y in 0..ny {
                    buf[y] = s * rho[x * ny + y] + row[y].ln();
                }
                stage.push(log_sum_exp(&buf));
            }
        }
        out.push(stage);
    }
    Ok(out)
}

/// Optimal kernels for slope `s` given reproduction marginals, evaluated in
/// the log domain.
pub fn optimal_kernel_update(source: &FiniteSource, marginals: &Marginals, s: f64) -> Result<CausalKernelFamily> {
    if !(s <= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("slope must be finite and nonpositive, got {s}")));
    }
    marginals.check(source)?;
    let log_z = log_partitions(source, marginals, s)?;
    Ok(CausalKernelFamily::from_fn(source, |i, yp, xh, y| {
        let (nx, ny) = (source.x_size(i), source.y_size(i));
        let x = xh % nx;
        let m = marginals.stages[i][yp * ny + y];
        if m <= 0.0 {
            return 0.0;
        }
        (s * source.distortion(i)[x * ny + y] + m.ln() - log_z[i][yp * nx + x]).exp()
    }))
}

/// `(n+1) s D - sum_i E[ln Z_i]`, with the expectation under
/// `P(x^i, y^{i-1})` induced by `kernels`.
pub fn closed_form_rate(
    source: &FiniteSource,
    kernels: &CausalKernelFamily,
    marginals: &Marginals,
    s: f64,
) -> Result<f64> {
    let joints = StageJoints::build(source, kernels)?;
    let log_z = log_partitions(source, marginals, s)?;
    let d = enumerate::distortion_of(source, &joints);
    Ok(closed_form_from(source, &joints, &log_z, s, d))
}

fn closed_form_from(source: &FiniteSource, joints: &StageJoints, log_z: &[Vec<f64>], s: f64, d: f64) -> f64 {
    let mut expect = 0.0;
    for (i, lz) in log_z.iter().enumerate() {
        let nx = source.x_size(i);
        let nyp = source.y_prefixes(i);
        let w = joints.x_with_y_prefix(source, i);
        for (idx, &p) in w.iter().enumerate() {
            if p > 0.0 {
                let (xh, yp) = (idx / nyp, idx % nyp);
                expect += p * lz[yp * nx + xh % nx];
            }
        }
    }
    source.stages() as f64 * s * d - expect
}

/// Converged inner loop at a fixed slope.
#[derive(Debug, Clone)]
pub struct SlopeSolution {
    pub s: f64,
    pub kernels: CausalKernelFamily,
    pub marginals: Marginals,
    pub distortion: f64,
    pub sweeps: usize,
}

/// Alternates kernel and marginal updates at slope `s`, starting from
/// uniform marginals.
pub fn solve_at_slope(source: &FiniteSource, s: f64, cfg: &SolverConfig) -> Result<SlopeSolution> {
    source.check_budget()?;
    let mut marginals = Marginals::uniform(source);
    let mut residual = f64::INFINITY;
    for sweep in 1..=cfg.max_sweeps {
        let kernels = optimal_kernel_update(source, &marginals, s)?;
        let joints = StageJoints::build(source, &kernels)?;
        let next = enumerate::marginals_of(source, &joints);
        residual = next.sup_distance(&marginals);
        marginals = next;
        if residual <= cfg.inner_tol {
            let kernels = optimal_kernel_update(source, &marginals, s)?;
            let distortion = enumerate::expected_distortion(source, &kernels)?;
            return Ok(SlopeSolution {
                s,
                kernels,
                marginals,
                distortion,
                sweeps: sweep,
            });
        }
    }
    Err(Error::NonConvergence {
        what: format!("alternating minimization at s = {s}"),
        iterations: cfg.max_sweeps,
        residual,
    })
}

fn finish(source: &FiniteSource, sol: SlopeSolution, d: f64, cfg: &SolverConfig) -> Result<NrdfSolution> {
    let joints = StageJoints::build(source, &sol.kernels)?;
    let rate_nats: f64 = enumerate::di_terms_of(source, &sol.kernels, &joints).iter().sum();
    let log_z = log_partitions(source, &sol.marginals, sol.s)?;
    let closed = closed_form_from(source, &joints, &log_z, sol.s, sol.distortion);
    if (rate_nats - closed).abs() > cfg.rate_agreement_tol {
        return Err(Error::NonConvergence {
            what: format!("rate cross-check at s = {} (enumerated {rate_nats}, closed form {closed})", sol.s),
            iterations: sol.sweeps,
            residual: (rate_nats - closed).abs(),
        });
    }
    Ok(NrdfSolution {
        kernels: sol.kernels,
        marginals: sol.marginals,
        s: sol.s,
        d,
        distortion: sol.distortion,
        rate_nats: rate_nats.max(0.0),
        rate_closed_form_nats: closed,
        stages: source.stages(),
        sweeps: sol.sweeps,
    })
}

/// Nonanticipative RDF of a finite source at per-letter distortion `d`.
///
/// At or above the distortion of the best constant reproduction the answer
/// is the zero-rate constant kernel with `s = 0`. Otherwise the slope is
/// bracketed by doubling and then bisected until the achieved distortion
/// is within `cfg.distortion_tol` of `d`.
pub fn solve_nrdf(source: &FiniteSource, d: f64, cfg: &SolverConfig) -> Result<NrdfSolution> {
    if !d.is_finite() || d < 0.0 {
        return Err(Error::Domain(format!("distortion must be finite and nonnegative, got {d}")));
    }
    source.check_budget()?;
    let d_min = source.min_distortion();
    if d < d_min - 1e-12 {
        return Err(Error::Domain(format!(
            "D = {d} is below the minimum achievable distortion {d_min}"
        )));
    }
    let (choice, d_max) = source.zero_rate_reproduction();
    if d >= d_max {
        let marginals = Marginals {
            stages: (0..source.stages())
                .map(|i| {
                    let ny = source.y_size(i);
                    let mut row = vec![0.0; ny];
                    row[choice[i]] = 1.0;
                    row.repeat(source.y_prefixes(i))
                })
                .collect(),
        };
        let kernels = CausalKernelFamily::from_marginals(source, &marginals);
        return finish(
            source,
            SlopeSolution {
                s: 0.0,
                distortion: d_max,
                kernels,
                marginals,
                sweeps: 0,
            },
            d,
            cfg,
        );
    }

    let mut hi = 0.0;
    let mut lo = -1.0;
    let mut lo_sol = solve_at_slope(source, lo, cfg)?;
    while lo_sol.distortion > d {
        lo *= 2.0;
        if lo < -1e6 {
            return Err(Error::NonConvergence {
                what: format!("slope bracket for D = {d}"),
                iterations: 20,
                residual: lo_sol.distortion - d,
            });
        }
        lo_sol = solve_at_slope(source, lo, cfg)?;
    }
    if lo < -1.0 {
        hi = lo / 2.0;
    }
    let mut best = lo_sol;
    for _ in 0..cfg.max_bisections {
        if (best.distortion - d).abs() <= 0.01 * cfg.distortion_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let sol = solve_at_slope(source, mid, cfg)?;
        if sol.distortion > d {
            hi = mid;
        } else {
            lo = mid;
        }
        if (sol.distortion - d).abs() < (best.distortion - d).abs() {
            best = sol;
        }
    }
    if (best.distortion - d).abs() > cfg.distortion_tol {
        return Err(Error::NonConvergence {
            what: format!("slope bisection for D = {d}"),
            iterations: cfg.max_bisections,
            residual: (best.distortion - d).abs(),
        });
    }
    finish(source, best, d, cfg)
}

#[cfg(test)]
mod tests {
    use super::super::instance::hamming;
    use super::*;

    #[test]
    fn zero_slope_returns_marginals() {
        let src = FiniteSource::iid(2, &[0.3, 0.7], &hamming(2)).unwrap();
        let m = Marginals {
            stages: vec![vec![0.4, 0.6], vec![0.1, 0.9, 0.5, 0.5]],
        };
        let k = optimal_kernel_update(&src, &m, 0.0).unwrap();
        let direct = CausalKernelFamily::from_marginals(&src, &m);
        for (a, b) in k.stages.iter().flatten().zip(direct.stages.iter().flatten()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn binary_kernel_at_unit_slope() {
        let src = FiniteSource::binary_hamming(0.5);
        let k = optimal_kernel_update(&src, &Marginals::uniform(&src), -1.0).unwrap();
        let expected = 1.0 / (1.0 + (-1f64).exp());
        assert!((k.stages[0][0] - expected).abs() < 1e-15);
        assert!((k.stages[0][3] - expected).abs() < 1e-15);
        assert!((expected - 0.731059).abs() < 1e-6);
    }

    #[test]
    fn steep_slope_concentrates_on_argmin() {
        let src = FiniteSource::iid(1, &[0.5, 0.5], &[vec![0.0, 1.0, 2.0], vec![2.0, 1.0, 0.0]]).unwrap();
        let k = optimal_kernel_update(&src, &Marginals::uniform(&src), -800.0).unwrap();
        assert_eq!(k.stages[0], vec![1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    }

    #[test]
    fn zero_marginal_row_is_structural_error() {
        let src = FiniteSource::binary_hamming(0.5);
        let m = Marginals {
            stages: vec![vec![0.0, 0.0]],
        };
        assert!(log_partitions(&src, &m, -1.0).is_err());
    }

    #[test]
    fn uniform_binary_closed_form() {
        let src = FiniteSource::binary_hamming(0.5);
        let sol = solve_nrdf(&src, 0.1, &SolverConfig::default()).unwrap();
        let hb = -(0.1f64 * 0.1f64.ln() + 0.9 * 0.9f64.ln());
        assert!((sol.rate_nats - (2f64.ln() - hb)).abs() < 1e-9);
        assert!((sol.rate_nats - 0.368064).abs() < 1e-6);
        assert!((sol.rate_nats - sol.rate_closed_form_nats).abs() < 1e-8);
        assert!(sol.s < 0.0);
    }

    #[test]
    fn large_distortion_is_zero_rate() {
        let src = FiniteSource::binary_hamming(0.3);
        let sol = solve_nrdf(&src, 0.35, &SolverConfig::default()).unwrap();
        assert_eq!(sol.rate_nats, 0.0);
        assert_eq!(sol.s, 0.0);
        assert!((sol.distortion - 0.3).abs() < 1e-15);
    }

    #[test]
    fn below_minimum_distortion_is_domain_error() {
        let src = FiniteSource::iid(1, &[0.5, 0.5], &[vec![0.2, 1.0], vec![1.0, 0.2]]).unwrap();
        assert!(matches!(
            solve_nrdf(&src, 0.1, &SolverConfig::default()),
            Err(Error::Domain(_))
        ));
    }
}
