//! Nonanticipative RDF of the Gauss-Markov source.
//!
//! The innovation `K_t = Y_t - E[Y_t | past reproductions]` has covariance
//! `Lambda = C Sigma C^t + G G^t`. Rotating by the eigenvector matrix `E`
//! decouples it into independent modes `lambda_i`, and the rate is given by
//! reverse water-filling over those modes:
//!
//! ```text
//! delta_i = min(xi, lambda_i),  sum_i delta_i = D,
//! R(D)    = 1/2 sum_i ln(lambda_i / delta_i)   [nats per step]
//! ```

use std::io::Write;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gauss_source::StateSpaceModel;
use crate::linalg;
use crate::realization::{self, FixedPointConfig};

pub const SYMMETRY_TOL: f64 = 1e-10;
const BISECTION_MAX_ITER: usize = 200;

/// Innovation covariance together with its eigen-decomposition.
///
/// Rows of `e` are eigenvectors, so `e * lambda_cov * e^t = diag(eigenvalues)`.
/// Eigenvalues are in descending order and each row of `e` has its
/// largest-magnitude entry positive.
#[derive(Debug, Clone, PartialEq)]
pub struct InnovationDecomposition {
    pub lambda_cov: DMatrix<f64>,
    pub e: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Reverse water-filling allocation over the innovation modes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WaterFillAllocation {
    /// Water level.
    pub xi: f64,
    pub delta: Vec<f64>,
    /// `eta_i = 1 - delta_i / lambda_i`, zero on inactive modes.
    pub eta: Vec<f64>,
    pub d: f64,
    /// Indices of modes with `lambda_i > xi`.
    pub active: Vec<usize>,
}

impl WaterFillAllocation {
    pub fn k_active(&self) -> usize {
        self.active.len()
    }

    pub fn is_zero_rate(&self) -> bool {
        self.active.is_empty()
    }

    pub fn h_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eta))
    }

    pub fn delta_diag(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.delta))
    }
}

/// `Lambda = C Sigma C^t + G G^t`.
pub fn innovation_covariance(sigma: &DMatrix<f64>, model: &StateSpaceModel) -> DMatrix<f64> {
    let mut lambda = &model.c * sigma * model.c.transpose() + model.observation_cov();
    linalg::symmetrize(&mut lambda);
    lambda
}

pub fn diagonalize(lambda: &DMatrix<f64>) -> Result<InnovationDecomposition> {
    let p = lambda.nrows();
    linalg::expect_shape("Lambda", lambda, p, p)?;
    let scale = linalg::sup_norm(lambda).max(1.0);
    let asym = linalg::max_asymmetry(lambda);
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::Asymmetric("Lambda", asym));
    }
    let mut sym = lambda.clone();
    linalg::symmetrize(&mut sym);
    let eig = sym.clone().symmetric_eigen();

    let argmax = |j: usize| -> usize {
        let col = eig.eigenvectors.column(j);
        let mut best = 0;
        for i in 1..p {
            if col[i].abs() > col[best].abs() + 1e-12 {
                best = i;
            }
        }
        best
    };
    let mut order: Vec<usize> = (0..p).collect();
    // descending eigenvalue, ties broken by where the eigenvector points
    order.sort_by(|&x, &y| {
        eig.eigenvalues[y]
            .partial_cmp(&eig.eigenvalues[x])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(argmax(x).cmp(&argmax(y)))
    });

    let mut e = DMatrix::zeros(p, p);
    let mut eigenvalues = Vec::with_capacity(p);
    for (row, &j) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(j);
        let sign = if col[argmax(j)] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            e[(row, i)] = sign * col[i];
        }
        eigenvalues.push(eig.eigenvalues[j].max(0.0));
    }
    Ok(InnovationDecomposition {
        lambda_cov: sym,
        e,
        eigenvalues,
    })
}

/// Reverse water-filling of a distortion budget `d` over modes `lambda`.
///
/// The water level is bracketed in `[0, max lambda + d]` and bisected on
/// `g(xi) = sum_i min(xi, lambda_i)`; the active set found that way is then
/// used to recompute `xi = (d - sum_inactive lambda_i) / k` exactly.
pub fn reverse_waterfill(lambda: &[f64], d: f64) -> Result<WaterFillAllocation> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain(format!("distortion must be positive, got {d}")));
    }
    if lambda.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
        return Err(Error::Domain("eigenvalues must be finite and nonnegative".into()));
    }
    let total: f64 = lambda.iter().sum();
    let lambda_max = lambda.iter().fold(0.0f64, |a, &l| a.max(l));
    if d >= total {
        return Ok(WaterFillAllocation {
            xi: lambda_max,
            delta: lambda.to_vec(),
            eta: vec![0.0; lambda.len()],
            d,
            active: Vec::new(),
        });
    }

    let fill = |xi: f64| lambda.iter().map(|&l| xi.min(l)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, lambda_max + d);
    let mut xi = 0.5 * (lo + hi);
    for _ in 0..BISECTION_MAX_ITER {
        xi = 0.5 * (lo + hi);
        let g = fill(xi);
        if (g - d).abs() <= 1e-12 * d.max(1.0) {
            break;
        }
        if g < d {
            lo = xi;
        } else {
            hi = xi;
        }
    }

    let mut active: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > xi).collect();
    for _ in 0..=lambda.len() {
        let inactive_sum: f64 = (0..lambda.len())
            .filter(|i| !active.contains(i))
            .map(|i| lambda[i])
            .sum();
        xi = (d - inactive_sum) / active.len() as f64;
        let next: Vec<usize> = (0..lambda.len()).filter(|&i| lambda[i] > xi).collect();
        if next == active {
            break;
        }
        active = next;
    }

    let delta: Vec<f64> = lambda
        .iter()
        .enumerate()
        .map(|(i, &l)| if active.contains(&i) { xi } else { l })
        .collect();
    let eta = lambda
        .iter()
        .zip(&delta)
        .enumerate()
        .map(|(i, (&l, &dl))| if active.contains(&i) { 1.0 - dl / l } else { 0.0 })
        .collect();
    Ok(WaterFillAllocation {
        xi,
        delta,
        eta,
        d,
        active,
    })
}

/// `1/2 sum_i ln(lambda_i / delta_i)` in nats per step.
pub fn rate_na(alloc: &WaterFillAllocation, lambda: &[f64]) -> Result<f64> {
    if alloc.delta.len() != lambda.len() {
        return Err(Error::Dimension {
            matrix: "delta",
            expected: format!("{}", lambda.len()),
            got: format!("{}", alloc.delta.len()),
        });
    }
    let mut rate = 0.0;
    for (&l, &dl) in lambda.iter().zip(&alloc.delta) {
        if l <= 0.0 || l == dl {
            continue;
        }
        if dl <= 0.0 {
            return Err(Error::Domain(format!(
                "zero distortion on a mode with variance {l}"
            )));
        }
        rate += 0.5 * (l / dl).ln();
    }
    Ok(rate.max(0.0))
}

/// One row of an RDF table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RdfPoint {
    pub d: f64,
    pub rate_nats: f64,
    pub xi: f64,
    pub k_active: usize,
}

/// Evaluates `R(D)` over a grid from the joint fixed point of water-filling
/// and the filter driven by the optimal test channel. Grid points are solved
/// in parallel; the output keeps input order.
pub fn rdf_curve(
    model: &StateSpaceModel,
    d_grid: &[f64],
    cfg: &FixedPointConfig,
) -> Result<Vec<RdfPoint>> {
    if d_grid.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Domain("distortion grid must be positive".into()));
    }
    if d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("distortion grid must be ascending".into()));
    }
    d_grid
        .par_iter()
        .map(|&d| {
            let fp = realization::solve_test_channel_fixed_point(model, d, cfg).map_err(|e| e.at_distortion(d))?;
            Ok(RdfPoint {
                d,
                rate_nats: fp.rate_nats,
                xi: fp.alloc.xi,
                k_active: fp.alloc.k_active(),
            })
        })
        .collect()
}

pub const RDF_CSV_HEADER: &str = "D,rate_nats,xi,k_active";

/// Writes the RDF table; `bits` rescales the rate column by `1/ln 2`.
pub fn write_rdf_csv<W: Write>(mut out: W, rows: &[RdfPoint], bits: bool) -> std::io::Result<()> {
    let header = if bits {
        "D,rate_bits,xi,k_active"
    } else {
        RDF_CSV_HEADER
    };
    writeln!(out, "{header}")?;
    let scale = if bits { 1.0 / std::f64::consts::LN_2 } else { 1.0 };
    for r in rows {
        writeln!(out, "{},{},{},{}", r.d, r.rate_nats * scale, r.xi, r.k_active)?;
    }
    Ok(())
}
