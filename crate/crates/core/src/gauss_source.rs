//! Partially observed linear Gauss-Markov source.
//!
//! ```text
//! X_{t+1} = A X_t + B W_t,    X_0 ~ N(x0_mean, x0_cov)
//! Y_t     = C X_t + G V_t
//! ```
//!
//! with `W_t`, `V_t` independent standard Gaussian vectors. `G` is required
//! to be square and invertible so the innovation covariance is positive
//! definite.

use std::fmt;
use std::path::Path;

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{NoiseRole, NoiseStream};

/// Tolerance on the symmetry and PSD checks of the initial covariance.
pub const COV_TOL: f64 = 1e-10;
/// Relative rank tolerance of the PBH tests.
pub const PBH_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub g: DMatrix<f64>,
    pub x0_mean: DVector<f64>,
    pub x0_cov: DMatrix<f64>,
}

/// One failed check from [`validate_model`].
#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    SingularObservationNoise,
    InitialCovAsymmetric { max_asymmetry: f64 },
    InitialCovNotPsd { min_eigenvalue: f64 },
    Undetectable { eigenvalue: Complex<f64> },
    Unstabilizable { eigenvalue: Complex<f64> },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::SingularObservationNoise => write!(f, "G is singular"),
            Diagnostic::InitialCovAsymmetric { max_asymmetry } => {
                write!(f, "x0_cov is not symmetric (max asymmetry {max_asymmetry:e})")
            }
            Diagnostic::InitialCovNotPsd { min_eigenvalue } => {
                write!(f, "x0_cov is not PSD (min eigenvalue {min_eigenvalue:e})")
            }
            Diagnostic::Undetectable { eigenvalue } => write!(
                f,
                "(C, A) not detectable: mode {}{:+}i is unobservable",
                eigenvalue.re, eigenvalue.im
            ),
            Diagnostic::Unstabilizable { eigenvalue } => write!(
                f,
                "(A, B) not stabilizable: mode {}{:+}i is unreachable",
                eigenvalue.re, eigenvalue.im
            ),
        }
    }
}

/// Simulated source path; `states[t]` and `observations[t]` for `t = 0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<DVector<f64>>,
    pub observations: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    c: Vec<Vec<f64>>,
    #[serde(rename = "G")]
    g: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0_cov: Option<Vec<Vec<f64>>>,
}

impl StateSpaceModel {
    /// Builds a model after checking that all dimensions agree.
    pub fn new(
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        c: DMatrix<f64>,
        g: DMatrix<f64>,
        x0_mean: DVector<f64>,
        x0_cov: DMatrix<f64>,
    ) -> Result<Self> {
        let m = a.nrows();
        if m == 0 {
            return Err(Error::Dimension {
                matrix: "A",
                expected: "non-empty square matrix".into(),
                got: "0x0".into(),
            });
        }
        linalg::expect_shape("A", &a, m, m)?;
        if b.nrows() != m || b.ncols() == 0 {
            return Err(Error::Dimension {
                matrix: "B",
                expected: format!("{m}xk"),
                got: format!("{}x{}", b.nrows(), b.ncols()),
            });
        }
        let p = c.nrows();
        if p == 0 || c.ncols() != m {
            return Err(Error::Dimension {
                matrix: "C",
                expected: format!("px{m}"),
                got: format!("{}x{}", c.nrows(), c.ncols()),
            });
        }
        linalg::expect_shape("G", &g, p, p)?;
        if x0_mean.len() != m {
            return Err(Error::Dimension {
                matrix: "x0_mean",
                expected: format!("{m}"),
                got: format!("{}", x0_mean.len()),
            });
        }
        linalg::expect_shape("x0_cov", &x0_cov, m, m)?;
        Ok(Self {
            a,
            b,
            c,
            g,
            x0_mean,
            x0_cov,
        })
    }

    /// Scalar model with zero-mean, zero-variance initial state.
    pub fn scalar(a: f64, b: f64, c: f64, g: f64) -> Self {
        let one = |v: f64| DMatrix::from_element(1, 1, v);
        Self {
            a: one(a),
            b: one(b),
            c: one(c),
            g: one(g),
            x0_mean: DVector::zeros(1),
            x0_cov: DMatrix::zeros(1, 1),
        }
    }

    /// Row-major constructor with zero initial statistics; panics on bad
    /// shapes, meant for tests and examples.
    pub fn from_row_slices(
        m: usize,
        k: usize,
        p: usize,
        a: &[f64],
        b: &[f64],
        c: &[f64],
        g: &[f64],
    ) -> Self {
        Self::new(
            DMatrix::from_row_slice(m, m, a),
            DMatrix::from_row_slice(m, k, b),
            DMatrix::from_row_slice(p, m, c),
            DMatrix::from_row_slice(p, p, g),
            DVector::zeros(m),
            DMatrix::zeros(m, m),
        )
        .expect("consistent dimensions")
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn noise_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn obs_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn process_cov(&self) -> DMatrix<f64> {
        &self.b * self.b.transpose()
    }

    pub fn observation_cov(&self) -> DMatrix<f64> {
        &self.g * self.g.transpose()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(s)?;
        let a = linalg::from_rows("A", &file.a)?;
        let b = linalg::from_rows("B", &file.b)?;
        let c = linalg::from_rows("C", &file.c)?;
        let g = linalg::from_rows("G", &file.g)?;
        let m = a.nrows();
        let x0_mean = match file.x0_mean {
            Some(v) => DVector::from_vec(v),
            None => DVector::zeros(m),
        };
        let x0_cov = match file.x0_cov {
            Some(rows) => linalg::from_rows("x0_cov", &rows)?,
            None => DMatrix::zeros(m, m),
        };
        Self::new(a, b, c, g, x0_mean, x0_cov)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            a: linalg::to_rows(&self.a),
            b: linalg::to_rows(&self.b),
            c: linalg::to_rows(&self.c),
            g: linalg::to_rows(&self.g),
            x0_mean: Some(self.x0_mean.iter().copied().collect()),
            x0_cov: Some(linalg::to_rows(&self.x0_cov)),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }
}

/// Runs the admissibility checks; an empty list means the model passes.
///
/// Detectability of `(C, A)` and stabilizability of `(A, sqrt(BB^t))` use
/// the PBH rank test on every eigenvalue of `A` with modulus >= 1.
pub fn validate_model(model: &StateSpaceModel) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let m = model.state_dim();

    let g_sv = model.g.clone().singular_values();
    let g_max = g_sv.iter().fold(0.0f64, |a, &s| a.max(s));
    let g_min = g_sv.iter().fold(f64::INFINITY, |a, &s| a.min(s));
    if g_max == 0.0 || g_min <= PBH_RANK_TOL * g_max {
        out.push(Diagnostic::SingularObservationNoise);
    }

    let asym = linalg::max_asymmetry(&model.x0_cov);
    if asym > COV_TOL {
        out.push(Diagnostic::InitialCovAsymmetric {
            max_asymmetry: asym,
        });
    } else {
        let min_ev = linalg::min_sym_eigenvalue(&model.x0_cov);
        if min_ev < -COV_TOL {
            out.push(Diagnostic::InitialCovNotPsd {
                min_eigenvalue: min_ev,
            });
        }
    }

    let a = linalg::to_complex(&model.a);
    let c = linalg::to_complex(&model.c);
    let b = linalg::to_complex(&model.b);
    for mu in linalg::eigenvalues(&model.a) {
        if mu.norm() < 1.0 {
            continue;
        }
        let shifted = DMatrix::<Complex<f64>>::identity(m, m) * mu - &a;

        let p = c.nrows();
        let mut obs = DMatrix::<Complex<f64>>::zeros(m + p, m);
        obs.view_mut((0, 0), (m, m)).copy_from(&shifted);
        obs.view_mut((m, 0), (p, m)).copy_from(&c);
        if linalg::complex_rank(&obs, PBH_RANK_TOL) < m {
            out.push(Diagnostic::Undetectable { eigenvalue: mu });
        }

        let k = b.ncols();
        let mut ctrl = DMatrix::<Complex<f64>>::zeros(m, m + k);
        ctrl.view_mut((0, 0), (m, m)).copy_from(&shifted);
        ctrl.view_mut((0, m), (m, k)).copy_from(&b);
        if linalg::complex_rank(&ctrl, PBH_RANK_TOL) < m {
            out.push(Diagnostic::Unstabilizable { eigenvalue: mu });
        }
    }
    out
}

/// Square-root factor `L` with `L L^t = cov` for a PSD matrix.
pub(crate) fn psd_factor(cov: &DMatrix<f64>) -> DMatrix<f64> {
    let mut s = cov.clone();
    linalg::symmetrize(&mut s);
    let eig = s.symmetric_eigen();
    let mut l = eig.eigenvectors;
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        let r = ev.max(0.0).sqrt();
        l.column_mut(j).scale_mut(r);
    }
    l
}

/// Samples `horizon` consecutive `(X_t, Y_t)` pairs, `t = 0..horizon`.
///
/// The initial state, process noise and observation noise each come from a
/// dedicated stream keyed by `seed`, so equal arguments give bit-identical
/// trajectories.
pub fn simulate(model: &StateSpaceModel, horizon: usize, seed: u64) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let (m, k, p) = (model.state_dim(), model.noise_dim(), model.obs_dim());
    let mut init = NoiseStream::new(seed, NoiseRole::InitialState);
    let mut proc = NoiseStream::new(seed, NoiseRole::Process);
    let mut obs = NoiseStream::new(seed, NoiseRole::Observation);

    let mut z0 = DVector::zeros(m);
    init.fill(z0.as_mut_slice());
    let mut x = &model.x0_mean + psd_factor(&model.x0_cov) * z0;

    let mut w = DVector::zeros(k);
    let mut v = DVector::zeros(p);
    let mut states = Vec::with_capacity(horizon);
    let mut observations = Vec::with_capacity(horizon);
    for t in 0..horizon {
        obs.fill(v.as_mut_slice());
        let y = &model.c * &x + &model.g * &v;
        if !x.iter().chain(y.iter()).all(|e| e.is_finite()) {
            return Err(Error::NonFinite(format!("simulated trajectory at t={t}")));
        }
        proc.fill(w.as_mut_slice());
        let next = &model.a * &x + &model.b * &w;
        states.push(std::mem::replace(&mut x, next));
        observations.push(y);
    }
    Ok(Trajectory {
        states,
        observations,
    })
}

/// Solves the discrete Lyapunov equation `Pi = A Pi A^t + B B^t`.
pub fn stationary_state_cov(model: &StateSpaceModel) -> Result<DMatrix<f64>> {
    let rho = linalg::spectral_radius(&model.a);
    if rho >= 1.0 {
        return Err(Error::Nonstationary(rho));
    }
    lyapunov(&model.a, &model.process_cov())
}

/// `X = A X A^t + Q` for stable `A`, via the Kronecker-vectorized system.
pub(crate) fn lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let kron = a.kronecker(a);
    let lhs = DMatrix::<f64>::identity(m * m, m * m) - kron;
    // column-major vec on both sides
    let rhs = DVector::from_column_slice(q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NonFinite("singular Lyapunov system".into()))?;
    let mut x = DMatrix::from_column_slice(m, m, sol.as_slice());
    linalg::symmetrize(&mut x);
    Ok(x)
}
