use serde::Deserialize;

use crate::error::{Error, Result};

/// Joint atom budget for exact enumeration.
pub const DEFAULT_ATOM_CAP: u128 = 10_000_000;
/// Tolerance on the row sums of stochastic tensors.
pub const STOCHASTIC_TOL: f64 = 1e-12;

/// Finite-alphabet source over stages `0..=n` with a single-letter
/// distortion per stage.
///
/// Histories are indexed lexicographically with the earliest symbol most
/// significant: `x^i` maps to `((x_0 |X_1| + x_1) |X_2| + ...) + x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSource {
    x_sizes: Vec<usize>,
    y_sizes: Vec<usize>,
    /// Stage `i`: rows indexed by `x^{i-1}`, columns by `x_i`.
    source: Vec<Vec<f64>>,
    /// Stage `i`: `|X_i| x |Y_i|`, row-major.
    rho: Vec<Vec<f64>>,
    atom_cap: u128,
}

impl FiniteSource {
    /// `source[i]` has `prod_{j<i} |X_j|` rows of length `|X_i|`;
    /// `rho[i]` has `|X_i|` rows of length `|Y_i|`.
    pub fn new(
        x_sizes: Vec<usize>,
        y_sizes: Vec<usize>,
        source: Vec<Vec<Vec<f64>>>,
        rho: Vec<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let stages = x_sizes.len();
        if stages == 0 {
            return Err(Error::InvalidModel("instance needs at least one stage".into()));
        }
        if y_sizes.len() != stages || source.len() != stages || rho.len() != stages {
            return Err(Error::Dimension {
                matrix: "stages",
                expected: format!("{stages} stages everywhere"),
                got: format!(
                    "x_sizes {}, y_sizes {}, source {}, distortion {}",
                    x_sizes.len(),
                    y_sizes.len(),
                    source.len(),
                    rho.len()
                ),
            });
        }
        if x_sizes.iter().chain(&y_sizes).any(|&s| s == 0) {
            return Err(Error::InvalidModel("alphabet sizes must be positive".into()));
        }
        let mut flat_source = Vec::with_capacity(stages);
        let mut hist: usize = 1;
        for (i, rows) in source.into_iter().enumerate() {
            flat_source.push(flatten_stochastic("source", i, rows, hist, x_sizes[i])?);
            hist = hist.checked_mul(x_sizes[i]).ok_or(Error::InstanceTooLarge {
                atoms: u128::MAX,
                cap: DEFAULT_ATOM_CAP,
            })?;
        }
        let mut flat_rho = Vec::with_capacity(stages);
        for (i, rows) in rho.into_iter().enumerate() {
            if rows.len() != x_sizes[i] || rows.iter().any(|r| r.len() != y_sizes[i]) {
                return Err(Error::Dimension {
                    matrix: "distortion",
                    expected: format!("{} x {} at stage {i}", x_sizes[i], y_sizes[i]),
                    got: format!("{} rows", rows.len()),
                });
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            if flat.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "distortion at stage {i} must be finite and nonnegative"
                )));
            }
            flat_rho.push(flat);
        }
        Ok(Self {
            x_sizes,
            y_sizes,
            source: flat_source,
            rho: flat_rho,
            atom_cap: DEFAULT_ATOM_CAP,
        })
    }

    /// Independent stages with the same marginal and distortion.
    pub fn iid(stages: usize, px: &[f64], rho: &[Vec<f64>]) -> Result<Self> {
        let nx = px.len();
        let ny = rho.first().map_or(0, Vec::len);
        let mut source = Vec::with_capacity(stages);
        let mut hist = 1usize;
        for _ in 0..stages {
            source.push(vec![px.to_vec(); hist]);
            hist *= nx;
        }
        Self::new(vec![nx; stages], vec![ny; stages], source, vec![rho.to_vec(); stages])
    }

    /// Single stage binary source with Hamming distortion.
    pub fn binary_hamming(p_one: f64) -> Self {
        Self::iid(1, &[1.0 - p_one, p_one], &hamming(2)).expect("valid binary source")
    }

    pub fn with_atom_cap(mut self, cap: u128) -> Self {
        self.atom_cap = cap;
        self
    }

    pub fn atom_cap(&self) -> u128 {
        self.atom_cap
    }

    /// Number of stages `n + 1`.
    pub fn stages(&self) -> usize {
        self.x_sizes.len()
    }

    pub fn x_size(&self, i: usize) -> usize {
        self.x_sizes[i]
    }

    pub fn y_size(&self, i: usize) -> usize {
        self.y_sizes[i]
    }

    pub fn x_sizes(&self) -> &[usize] {
        &self.x_sizes
    }

    pub fn y_sizes(&self) -> &[usize] {
        &self.y_sizes
    }

    /// Number of histories `x^i` (inclusive of stage `i`).
    pub fn x_histories(&self, i: usize) -> usize {
        self.x_sizes[..=i].iter().product()
    }

    /// Number of histories `y^{i-1}` (exclusive of stage `i`).
    pub fn y_prefixes(&self, i: usize) -> usize {
        self.y_sizes[..i].iter().product()
    }

    /// `P(x_i | x^{i-1})`, rows indexed by `x^{i-1}`.
    pub fn source_kernel(&self, i: usize) -> &[f64] {
        &self.source[i]
    }

    /// `rho_i(x_i, y_i)`, row-major `|X_i| x |Y_i|`.
    pub fn distortion(&self, i: usize) -> &[f64] {
        &self.rho[i]
    }

    pub fn total_atoms(&self) -> u128 {
        self.x_sizes
            .iter()
            .zip(&self.y_sizes)
            .map(|(&a, &b)| a as u128 * b as u128)
            .fold(1u128, |acc, v| acc.saturating_mul(v))
    }

    pub(crate) fn check_budget(&self) -> Result<()> {
        let atoms = self.total_atoms();
        if atoms > self.atom_cap {
            return Err(Error::InstanceTooLarge {
                atoms,
                cap: self.atom_cap,
            });
        }
        Ok(())
    }

    /// Marginal pmf of `X_i`.
    pub fn x_marginal(&self, i: usize) -> Vec<f64> {
        let mut prefix = vec![1.0];
        for j in 0..=i {
            let nx = self.x_sizes[j];
            let mut next = vec![0.0; prefix.len() * nx];
            for (h, &w) in prefix.iter().enumerate() {
                for x in 0..nx {
                    next[h * nx + x] = w * self.source[j][h * nx + x];
                }
            }
            prefix = next;
        }
        let nx = self.x_sizes[i];
        let mut out = vec![0.0; nx];
        for (h, &w) in prefix.iter().enumerate() {
            out[h % nx] += w;
        }
        out
    }

    /// `1/(n+1) sum_i E[min_y rho_i(X_i, y)]`, the smallest achievable
    /// per-letter distortion.
    pub fn min_distortion(&self) -> f64 {
        let total: f64 = (0..self.stages())
            .map(|i| {
                let ny = self.y_sizes[i];
                self.x_marginal(i)
                    .iter()
                    .enumerate()
                    .map(|(x, &p)| {
                        let row = &self.rho[i][x * ny..(x + 1) * ny];
                        p * row.iter().copied().fold(f64::INFINITY, f64::min)
                    })
                    .sum::<f64>()
            })
            .sum();
        total / self.stages() as f64
    }

    /// Best constant reproduction per stage and its per-letter distortion;
    /// at or above this distortion the rate is zero.
    pub fn zero_rate_reproduction(&self) -> (Vec<usize>, f64) {
        let mut choice = Vec::with_capacity(self.stages());
        let mut total = 0.0;
        for i in 0..self.stages() {
            let ny = self.y_sizes[i];
            let px = self.x_marginal(i);
            let mut best = (0usize, f64::INFINITY);
            for y in 0..ny {
                let cost: f64 = px.iter().enumerate().map(|(x, &p)| p * self.rho[i][x * ny + y]).sum();
                if cost < best.1 {
                    best = (y, cost);
                }
            }
            choice.push(best.0);
            total += best.1;
        }
        (choice, total / self.stages() as f64)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: InstanceFile = serde_json::from_str(s)?;
        let stages = file.horizon + 1;
        let x_sizes = file.x_sizes.expand(stages);
        let y_sizes = file.y_sizes.expand(stages);
        let rho = match file.distortion {
            DistortionSpec::Shared(m) => vec![m; stages],
            DistortionSpec::PerStage(v) => v,
        };
        let src = Self::new(x_sizes, y_sizes, file.source, rho)?;
        Ok(match file.atom_cap {
            Some(cap) => src.with_atom_cap(cap as u128),
            None => src,
        })
    }

    pub fn from_json_file(path: &std::path::Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }
}

/// Hamming distortion on an alphabet of size `k`.
pub fn hamming(k: usize) -> Vec<Vec<f64>> {
    (0..k)
        .map(|x| (0..k).map(|y| if x == y { 0.0 } else { 1.0 }).collect())
        .collect()
}

fn flatten_stochastic(
    name: &'static str,
    stage: usize,
    rows: Vec<Vec<f64>>,
    expect_rows: usize,
    width: usize,
) -> Result<Vec<f64>> {
    if rows.len() != expect_rows || rows.iter().any(|r| r.len() != width) {
        return Err(Error::Dimension {
            matrix: name,
            expected: format!("{expect_rows} x {width} at stage {stage}"),
            got: format!(
                "{} rows of lengths {:?}",
                rows.len(),
                rows.iter().map(Vec::len).collect::<Vec<_>>()
            ),
        });
    }
    for (r, row) in rows.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > STOCHASTIC_TOL {
            return Err(Error::InvalidModel(format!(
                "{name} row {r} at stage {stage} is not a pmf (sum {sum})"
            )));
        }
    }
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    horizon: usize,
    x_sizes: Sizes,
    y_sizes: Sizes,
    source: Vec<Vec<Vec<f64>>>,
    distortion: DistortionSpec,
    #[serde(default)]
    atom_cap: Option<u64>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Sizes {
    Same(usize),
    PerStage(Vec<usize>),
}

impl Sizes {
    fn expand(self, stages: usize) -> Vec<usize> {
        match self {
            Sizes::Same(k) => vec![k; stages],
            Sizes::PerStage(v) => v,
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DistortionSpec {
    Shared(Vec<Vec<f64>>),
    PerStage(Vec<Vec<Vec<f64>>>),
}

/// Reproduction kernels `Q(y_i | y^{i-1}, x^i)`, one stochastic tensor per
/// stage. Stage `i` has rows indexed by `y^{i-1} * |X^i| + x^i` and
/// `|Y_i|` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CausalKernelFamily {
    pub stages: Vec<Vec<f64>>,
}

impl CausalKernelFamily {
    pub fn rows(source: &FiniteSource, i: usize) -> usize {
        source.y_prefixes(i) * source.x_histories(i)
    }

    /// Builds kernels from a rule `f(stage, y_prefix, x_history, y_i)`.
    pub fn from_fn(source: &FiniteSource, mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let stages = (0..source.stages())
            .map(|i| {
                let (nyp, nxh, ny) = (source.y_prefixes(i), source.x_histories(i), source.y_size(i));
                let mut v = Vec::with_capacity(nyp * nxh * ny);
                for yp in 0..nyp {
                    for xh in 0..nxh {
                        for y in 0..ny {
                            v.push(f(i, yp, xh, y));
                        }
                    }
                }
                v
            })
            .collect();
        Self { stages }
    }

    /// Every kernel ignores the source: `Q = P(y_i | y^{i-1})`.
    pub fn from_marginals(source: &FiniteSource, marginals: &Marginals) -> Self {
        Self::from_fn(source, |i, yp, _, y| marginals.stages[i][yp * source.y_size(i) + y])
    }

    pub fn check(&self, source: &FiniteSource) -> Result<()> {
        check_rows("kernel", &self.stages, source, |i| Self::rows(source, i))
    }

    /// Largest total-variation change in a kernel row when `x^i` varies
    /// with `y^{i-1}` fixed; zero iff the kernels ignore the source.
    pub fn x_dependence(&self, source: &FiniteSource) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..source.stages() {
            let (nxh, ny) = (source.x_histories(i), source.y_size(i));
            for yp in 0..source.y_prefixes(i) {
                let base = &self.stages[i][yp * nxh * ny..(yp * nxh + 1) * ny];
                for xh in 1..nxh {
                    let row = &self.stages[i][(yp * nxh + xh) * ny..(yp * nxh + xh + 1) * ny];
                    worst = worst.max(total_variation(base, row));
                }
            }
        }
        worst
    }

    /// Largest total-variation dependence of stage-`i` rows on `x^{i-1}`
    /// with `x_i` and `y^{i-1}` held fixed.
    pub fn markov_violation(&self, source: &FiniteSource) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..source.stages() {
            let (nxh, nx, ny) = (source.x_histories(i), source.x_size(i), source.y_size(i));
            let row = |yp: usize, xh: usize| &self.stages[i][(yp * nxh + xh) * ny..(yp * nxh + xh + 1) * ny];
            for yp in 0..source.y_prefixes(i) {
                for x in 0..nx {
                    let base = row(yp, x);
                    for prev in 1..nxh / nx {
                        worst = worst.max(total_variation(base, row(yp, prev * nx + x)));
                    }
                }
            }
        }
        worst
    }
}

/// Reproduction marginals `P(y_i | y^{i-1})`; stage `i` has rows indexed by
/// `y^{i-1}` and `|Y_i|` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    pub stages: Vec<Vec<f64>>,
}

impl Marginals {
    pub fn uniform(source: &FiniteSource) -> Self {
        let stages = (0..source.stages())
            .map(|i| {
                let ny = source.y_size(i);
                vec![1.0 / ny as f64; source.y_prefixes(i) * ny]
            })
            .collect();
        Self { stages }
    }

    pub fn check(&self, source: &FiniteSource) -> Result<()> {
        check_rows("marginal", &self.stages, source, |i| source.y_prefixes(i))
    }

    pub fn sup_distance(&self, other: &Marginals) -> f64 {
        self.stages
            .iter()
            .zip(&other.stages)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn check_rows(
    what: &'static str,
    stages: &[Vec<f64>],
    source: &FiniteSource,
    rows: impl Fn(usize) -> usize,
) -> Result<()> {
    if stages.len() != source.stages() {
        return Err(Error::Dimension {
            matrix: what,
            expected: format!("{} stages", source.stages()),
            got: format!("{}", stages.len()),
        });
    }
    for (i, st) in stages.iter().enumerate() {
        let ny = source.y_size(i);
        if st.len() != rows(i) * ny {
            return Err(Error::Dimension {
                matrix: what,
                expected: format!("{} x {ny} at stage {i}", rows(i)),
                got: format!("{} entries", st.len()),
            });
        }
        for (r, row) in st.chunks(ny).enumerate() {
            let sum: f64 = row.iter().sum();
            if row.iter().any(|&v| !(v >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return Err(Error::InvalidModel(format!(
                    "{what} row {r} at stage {i} is not a pmf (sum {sum})"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}
