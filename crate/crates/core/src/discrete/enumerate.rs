//! Exact enumeration of the joint law of `(X^n, Y^n)`.
//!
//! The joint is built forward one stage at a time,
//! `P(x^i, y^i) = P(x^{i-1}, y^{i-1}) P(x_i | x^{i-1}) Q(y_i | y^{i-1}, x^i)`,
//! and every stage array is kept so the per-stage quantities (directed
//! information terms, marginals, distortion) can be read off in a fixed
//! lexicographic order.

use super::instance::{CausalKernelFamily, FiniteSource, Marginals};
use crate::error::Result;

/// Stage joints `P(x^i, y^i)`, indexed `x^i * |Y^i| + y^i`.
#[derive(Debug, Clone)]
pub struct StageJoints {
    pub stages: Vec<Vec<f64>>,
}

impl StageJoints {
    pub fn build(source: &FiniteSource, kernels: &CausalKernelFamily) -> Result<Self> {
        source.check_budget()?;
        kernels.check(source)?;
        let mut stages: Vec<Vec<f64>> = Vec::with_capacity(source.stages());
        let mut prev = vec![1.0];
        let (mut nx_prev, mut ny_prev) = (1usize, 1usize);
        for i in 0..source.stages() {
            let (nx, ny) = (source.x_size(i), source.y_size(i));
            let (nxh, nyh) = (nx_prev * nx, ny_prev * ny);
            let pk = source.source_kernel(i);
            let qk = &kernels.stages[i];
            let mut cur = vec![0.0; nxh * nyh];
            for xp in 0..nx_prev {
                for yp in 0..ny_prev {
                    let w = prev[xp * ny_prev + yp];
                    if w == 0.0 {
                        continue;
                    }
                    for x in 0..nx {
                        let wx = w * pk[xp * nx + x];
                        let xh = xp * nx + x;
                        let row = (yp * nxh + xh) * ny;
                        for y in 0..ny {
                            cur[xh * nyh + yp * ny + y] = wx * qk[row + y];
                        }
                    }
                }
            }
            stages.push(cur.clone());
            prev = cur;
            nx_prev = nxh;
            ny_prev = nyh;
        }
        Ok(Self { stages })
    }

    /// `P(y^i)` for stage `i`.
    pub fn y_law(&self, source: &FiniteSource, i: usize) -> Vec<f64> {
        let nyh = source.y_prefixes(i) * source.y_size(i);
        let mut out = vec![0.0; nyh];
        for chunk in self.stages[i].chunks(nyh) {
            for (o, &v) in out.iter_mut().zip(chunk) {
                *o += v;
            }
        }
        out
    }

    /// `P(x^i, y^{i-1})` for stage `i`, indexed `x^i * |Y^{i-1}| + y^{i-1}`.
    pub fn x_with_y_prefix(&self, source: &FiniteSource, i: usize) -> Vec<f64> {
        let ny = source.y_size(i);
        self.stages[i].chunks(ny).map(|c| c.iter().sum()).collect()
    }
}

/// Reproduction marginals induced by the kernels. Unreachable prefixes
/// `y^{i-1}` get a uniform row.
pub fn marginal_update(source: &FiniteSource, kernels: &CausalKernelFamily) -> Result<Marginals> {
    let joints = StageJoints::build(source, kernels)?;
    Ok(marginals_of(source, &joints))
}

pub(crate) fn marginals_of(source: &FiniteSource, joints: &StageJoints) -> Marginals {
    let mut prefix_law = vec![1.0];
    let mut stages = Vec::with_capacity(source.stages());
    for i in 0..source.stages() {
        let ny = source.y_size(i);
        let law = joints.y_law(source, i);
        let mut cond = vec![0.0; law.len()];
        for (yp, &mass) in prefix_law.iter().enumerate() {
            let row = &mut cond[yp * ny..(yp + 1) * ny];
            let here = &law[yp * ny..(yp + 1) * ny];
            let total: f64 = here.iter().sum();
            if mass > 0.0 && total > 0.0 {
                for (c, &v) in row.iter_mut().zip(here) {
                    *c = v / total;
                }
            } else {
                row.fill(1.0 / ny as f64);
            }
        }
        stages.push(cond);
        prefix_law = law;
    }
    Marginals { stages }
}

/// Per-stage terms `I(X^i; Y_i | Y^{i-1})` in nats.
pub fn directed_information_terms(source: &FiniteSource, kernels: &CausalKernelFamily) -> Result<Vec<f64>> {
    let joints = StageJoints::build(source, kernels)?;
    Ok(di_terms_of(source, kernels, &joints))
}

pub(crate) fn di_terms_of(source: &FiniteSource, kernels: &CausalKernelFamily, joints: &StageJoints) -> Vec<f64> {
    let marg = marginals_of(source, joints);
    (0..source.stages())
        .map(|i| {
            let (nxh, ny) = (source.x_histories(i), source.y_size(i));
            let nyp = source.y_prefixes(i);
            let nyh = nyp * ny;
            let joint = &joints.stages[i];
            let mut term = 0.0;
            for xh in 0..nxh {
                for yp in 0..nyp {
                    let row = (yp * nxh + xh) * ny;
                    for y in 0..ny {
                        let w = joint[xh * nyh + yp * ny + y];
                        if w > 0.0 {
                            let q = kernels.stages[i][row + y];
                            let m = marg.stages[i][yp * ny + y];
                            term += w * (q / m).ln();
                        }
                    }
                }
            }
            term
        })
        .collect()
}

/// `sum_{i=0}^n I(X^i; Y_i | Y^{i-1})` in nats, by exact enumeration.
pub fn directed_information(source: &FiniteSource, kernels: &CausalKernelFamily) -> Result<f64> {
    Ok(directed_information_terms(source, kernels)?.iter().sum())
}

/// Per-letter expected distortion `1/(n+1) sum_i E[rho_i(X_i, Y_i)]`.
pub fn expected_distortion(source: &FiniteSource, kernels: &CausalKernelFamily) -> Result<f64> {
    let joints = StageJoints::build(source, kernels)?;
    Ok(distortion_of(source, &joints))
}

pub(crate) fn distortion_of(source: &FiniteSource, joints: &StageJoints) -> f64 {
    let total: f64 = (0..source.stages())
        .map(|i| {
            let (nx, ny) = (source.x_size(i), source.y_size(i));
            let nyh = source.y_prefixes(i) * ny;
            let rho = source.distortion(i);
            joints.stages[i]
                .chunks(nyh)
                .enumerate()
                .map(|(xh, chunk)| {
                    let x = xh % nx;
                    chunk
                        .iter()
                        .enumerate()
                        .map(|(yh, &w)| w * rho[x * ny + yh % ny])
                        .sum::<f64>()
                })
                .sum::<f64>()
        })
        .sum();
    total / source.stages() as f64
}

/// Causally conditioned law `P(y^i || x^i) = prod_{j<=i} Q(y_j | y^{j-1}, x^j)`
/// per stage, indexed `x^i * |Y^i| + y^i`.
pub fn causal_conditionals(source: &FiniteSource, kernels: &CausalKernelFamily) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(source.stages());
    let mut prev = vec![1.0];
    let (mut nx_prev, mut ny_prev) = (1usize, 1usize);
    for i in 0..source.stages() {
        let (nx, ny) = (source.x_size(i), source.y_size(i));
        let (nxh, nyh) = (nx_prev * nx, ny_prev * ny);
        let mut cur = vec![0.0; nxh * nyh];
        for xp in 0..nx_prev {
            for yp in 0..ny_prev {
                let w = prev[xp * ny_prev + yp];
                for x in 0..nx {
                    let xh = xp * nx + x;
                    let row = (yp * nxh + xh) * ny;
                    for y in 0..ny {
                        cur[xh * nyh + yp * ny + y] = w * kernels.stages[i][row + y];
                    }
                }
            }
        }
        out.push(cur.clone());
        prev = cur;
        nx_prev = nxh;
        ny_prev = nyh;
    }
    out
}

/// Convex combination `theta Q1 + (1 - theta) Q0` taken in the space of
/// causally conditioned laws `P(y^n || x^n)` and factored back into
/// stage kernels.
///
/// Directed information is convex along this path. A stage-by-stage mixture
/// of the kernels is not the same path once `n >= 1` and can break
/// convexity. Rows whose prefix has zero weight under both endpoints are set
/// uniform.
pub fn causal_mixture(
    source: &FiniteSource,
    q0: &CausalKernelFamily,
    q1: &CausalKernelFamily,
    theta: f64,
) -> CausalKernelFamily {
    let c0 = causal_conditionals(source, q0);
    let c1 = causal_conditionals(source, q1);
    let mix = |c: &[Vec<f64>], d: &[Vec<f64>], i: usize, idx: usize| theta * c[i][idx] + (1.0 - theta) * d[i][idx];
    CausalKernelFamily::from_fn(source, |i, yp, xh, y| {
        let (nx, ny) = (source.x_size(i), source.y_size(i));
        let nyh = source.y_prefixes(i) * ny;
        let num = mix(&c1, &c0, i, xh * nyh + yp * ny + y);
        let den = if i == 0 {
            1.0
        } else {
            let nyp = source.y_prefixes(i);
            mix(&c1, &c0, i - 1, (xh / nx) * nyp + yp)
        };
        if den > 0.0 {
            num / den
        } else {
            1.0 / ny as f64
        }
    })
}
