//! Independent oracles and generators shared by the integration tests.
//! Nothing here calls the solver paths it is used to check.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use nrdf::discrete::{CausalKernelFamily, FiniteSource};
use nrdf::StateSpaceModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Textbook Blahut–Arimoto for a memoryless source: for slope `beta > 0`,
/// `Q(y|x) ∝ q(y) exp(-beta rho(x,y))`, `q(y) = sum_x p(x) Q(y|x)`.
/// Returns `(distortion, rate_nats)` at convergence.
pub fn ba_point(px: &[f64], rho: &[Vec<f64>], beta: f64) -> (f64, f64) {
    let ny = rho[0].len();
    let mut q = vec![1.0 / ny as f64; ny];
    let mut cond = vec![vec![0.0; ny]; px.len()];
    for _ in 0..1_000_000 {
        for (x, row) in cond.iter_mut().enumerate() {
            let mut z = 0.0;
            for y in 0..ny {
                row[y] = q[y] * (-beta * rho[x][y]).exp();
                z += row[y];
            }
            for v in row.iter_mut() {
                *v /= z;
            }
        }
        let mut next = vec![0.0; ny];
        for (x, row) in cond.iter().enumerate() {
            for y in 0..ny {
                next[y] += px[x] * row[y];
            }
        }
        let change = next.iter().zip(&q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        q = next;
        if change < 1e-14 {
            break;
        }
    }
    let mut d = 0.0;
    let mut r = 0.0;
    for (x, row) in cond.iter().enumerate() {
        for y in 0..ny {
            let w = px[x] * row[y];
            if w > 0.0 {
                d += w * rho[x][y];
                r += w * (row[y] / q[y]).ln();
            }
        }
    }
    (d, r)
}

/// Classical rate at distortion `d`, by bisection on the slope.
pub fn ba_rate(px: &[f64], rho: &[Vec<f64>], d: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while ba_point(px, rho, hi).0 > d {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ba_point(px, rho, mid).0 > d {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    ba_point(px, rho, 0.5 * (lo + hi)).1
}

/// Mixed-radix enumeration of full atoms `(x_0, y_0, x_1, y_1, ...)`.
fn atoms(src: &FiniteSource) -> Vec<Vec<usize>> {
    let mut radix = Vec::new();
    for i in 0..src.stages() {
        radix.push(src.x_size(i));
        radix.push(src.y_size(i));
    }
    let mut out = Vec::new();
    let mut digits = vec![0usize; radix.len()];
    loop {
        out.push(digits.clone());
        let mut k = radix.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            digits[k] += 1;
            if digits[k] < radix[k] {
                break;
            }
            digits[k] = 0;
        }
    }
}

fn hist(symbols: &[usize], sizes: &[usize]) -> usize {
    symbols.iter().zip(sizes).fold(0, |acc, (&s, &n)| acc * n + s)
}

/// `P(x^n)` and `P(y^n || x^n)` of one atom, straight from the tensors.
fn atom_laws(src: &FiniteSource, k: &CausalKernelFamily, a: &[usize]) -> (f64, f64) {
    let n = src.stages();
    let xs: Vec<usize> = (0..n).map(|i| a[2 * i]).collect();
    let ys: Vec<usize> = (0..n).map(|i| a[2 * i + 1]).collect();
    let (mut px, mut pyx) = (1.0, 1.0);
    for i in 0..n {
        let xp = hist(&xs[..i], &src.x_sizes()[..i]);
        px *= src.source_kernel(i)[xp * src.x_size(i) + xs[i]];
        let xh = hist(&xs[..=i], &src.x_sizes()[..=i]);
        let yp = hist(&ys[..i], &src.y_sizes()[..i]);
        let row = yp * src.x_histories(i) + xh;
        pyx *= k.stages[i][row * src.y_size(i) + ys[i]];
    }
    (px, pyx)
}

/// Directed information as `E[ln P(Y^n || X^n) / P(Y^n)]` over full atoms.
pub fn brute_force_di(src: &FiniteSource, k: &CausalKernelFamily) -> f64 {
    let all = atoms(src);
    let n = src.stages();
    let ny_total: usize = src.y_sizes().iter().product();
    let mut py = vec![0.0; ny_total];
    let laws: Vec<(f64, f64, usize)> = all
        .iter()
        .map(|a| {
            let (px, pyx) = atom_laws(src, k, a);
            let ys: Vec<usize> = (0..n).map(|i| a[2 * i + 1]).collect();
            let yh = hist(&ys, src.y_sizes());
            py[yh] += px * pyx;
            (px, pyx, yh)
        })
        .collect();
    laws.iter()
        .filter(|(px, pyx, _)| px * pyx > 0.0)
        .map(|(px, pyx, yh)| px * pyx * (pyx / py[*yh]).ln())
        .sum()
}

/// `P(y_i | y^{i-1})` by summing full atoms, stage-major like `Marginals`.
pub fn brute_force_marginals(src: &FiniteSource, k: &CausalKernelFamily) -> Vec<Vec<f64>> {
    let n = src.stages();
    let mut prefix_mass: Vec<Vec<f64>> = (0..=n)
        .map(|i| vec![0.0; src.y_sizes()[..i].iter().product()])
        .collect();
    for a in atoms(src) {
        let (px, pyx) = atom_laws(src, k, &a);
        let ys: Vec<usize> = (0..n).map(|i| a[2 * i + 1]).collect();
        for i in 0..=n {
            prefix_mass[i][hist(&ys[..i], &src.y_sizes()[..i])] += px * pyx;
        }
    }
    (0..n)
        .map(|i| {
            let ny = src.y_size(i);
            (0..prefix_mass[i + 1].len())
                .map(|yh| {
                    let prev = prefix_mass[i][yh / ny];
                    if prev > 0.0 {
                        prefix_mass[i + 1][yh] / prev
                    } else {
                        1.0 / ny as f64
                    }
                })
                .collect()
        })
        .collect()
}

fn random_pmf(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| r.random_range(0.05..1.0)).collect();
    let s: f64 = v.iter().sum();
    v.iter().map(|x| x / s).collect()
}

/// Random source over `stages` stages with alphabets of size 2 or 3 and
/// random distortion matrices.
pub fn random_source(r: &mut ChaCha8Rng, stages: usize) -> FiniteSource {
    let xs: Vec<usize> = (0..stages).map(|_| r.random_range(2..=3)).collect();
    let ys: Vec<usize> = (0..stages).map(|_| r.random_range(2..=3)).collect();
    let mut source = Vec::new();
    let mut h = 1;
    for &nx in &xs {
        source.push((0..h).map(|_| random_pmf(r, nx)).collect());
        h *= nx;
    }
    let rho = (0..stages)
        .map(|i| (0..xs[i]).map(|_| (0..ys[i]).map(|_| r.random_range(0.0..1.0)).collect()).collect())
        .collect();
    FiniteSource::new(xs, ys, source, rho).unwrap()
}

pub fn random_kernels(r: &mut ChaCha8Rng, src: &FiniteSource) -> CausalKernelFamily {
    let stages = (0..src.stages())
        .map(|i| {
            let rows = CausalKernelFamily::rows(src, i);
            (0..rows).flat_map(|_| random_pmf(r, src.y_size(i))).collect()
        })
        .collect();
    CausalKernelFamily { stages }
}

fn gaussian(r: &mut ChaCha8Rng) -> f64 {
    // Box–Muller keeps this independent of the crate's noise streams
    let u1: f64 = r.random_range(f64::EPSILON..1.0);
    let u2: f64 = r.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(r))
}

/// Random stable model with `m, p, k <= 3`, spectral radius below 0.95 and
/// a well-conditioned `G`.
pub fn random_stable_model(r: &mut ChaCha8Rng) -> StateSpaceModel {
    let m = r.random_range(1..=3);
    let p = r.random_range(1..=3);
    let k = r.random_range(1..=3);
    let mut a = random_matrix(r, m, m);
    let rho = nrdf::linalg::spectral_radius(&a);
    if rho > 0.0 {
        a *= r.random_range(0.0..0.95) / rho;
    }
    let b = random_matrix(r, m, k);
    let c = random_matrix(r, p, m);
    let g = DMatrix::from_fn(p, p, |i, j| if i == j { r.random_range(0.5..1.5) } else { 0.1 * gaussian(r) });
    StateSpaceModel::new(a, b, c, g, DVector::zeros(m), DMatrix::zeros(m, m)).unwrap()
}
