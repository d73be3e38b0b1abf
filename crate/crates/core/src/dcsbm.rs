//! Degree-corrected stochastic block model: parameters, population adjacency, sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Mat, Real, Result};

const SUM_TOL: f64 = 1e-12;
const SYM_TOL: f64 = 1e-12;

/// DC-SBM law: `K` classes, in/out-of-class probabilities `p`/`q`, degree corrections `pi`.
#[derive(Clone, Debug)]
pub struct DcSbmParams<T: Real> {
    k: usize,
    p: T,
    q: T,
    pi: Vec<T>,
    labels: Vec<usize>,
}

impl<T: Real> DcSbmParams<T> {
    /// Validated constructor; `pi` must sum to 1 and labels must be `0..k` with no empty class.
    pub fn new(k: usize, p: T, q: T, pi: Vec<T>, labels: Vec<usize>) -> Result<Self> {
        let sum: f64 = pi.iter().map(|x| x.as_f64()).sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::param(format!("pi must sum to 1, got {sum}")));
        }
        Self::unnormalized(k, p, q, pi, labels)
    }

    /// Same checks as [`DcSbmParams::new`] except the sum-to-one condition.
    ///
    /// Sampling experiments use raw `Unif(0,1)` corrections; with a normalized vector the
    /// expected degree is far below one and sampled graphs are empty.
    pub fn unnormalized(k: usize, p: T, q: T, pi: Vec<T>, labels: Vec<usize>) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::param("node count must be positive"));
        }
        if k < 2 {
            return Err(Error::param(format!("class count must be at least 2, got {k}")));
        }
        if labels.len() != n {
            return Err(Error::dim(format!("{} labels for {n} nodes", labels.len())));
        }
        let (pf, qf) = (p.as_f64(), q.as_f64());
        if !(0.0..=1.0).contains(&qf) || !(0.0..=1.0).contains(&pf) || qf > pf {
            return Err(Error::param(format!("need 0 <= q <= p <= 1, got p={pf}, q={qf}")));
        }
        if let Some(i) = pi.iter().position(|x| !(0.0..=1.0).contains(&x.as_f64())) {
            return Err(Error::param(format!("pi[{i}] = {} outside [0, 1]", pi[i])));
        }
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            if c >= k {
                return Err(Error::param(format!("label {c} at node {i} exceeds class count {k}")));
            }
            counts[c] += 1;
        }
        if let Some(c) = counts.iter().position(|&m| m == 0) {
            return Err(Error::param(format!("class {c} has no nodes")));
        }
        Ok(Self { k, p, q, pi, labels })
    }

    pub fn n(&self) -> usize {
        self.pi.len()
    }

    /// Same law with `pi` divided by its largest entry, so the densest pair has probability `p`.
    pub fn rescaled_for_sampling(&self) -> Self {
        let top = self.pi.iter().cloned().fold(T::zero(), |a, b| if b > a { b } else { a });
        let pi = if top > T::zero() { self.pi.iter().map(|&x| x / top).collect() } else { self.pi.clone() };
        Self { pi, ..self.clone() }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn pi(&self) -> &[T] {
        &self.pi
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Edge probability (population adjacency entry) for the pair `(i, j)`.
    pub fn prob(&self, i: usize, j: usize) -> T {
        let b = if self.labels[i] == self.labels[j] { self.p } else { self.q };
        b * (self.pi[i] * self.pi[j])
    }

    /// Separability `r = (p - q) / (p + q)`; zero when `p = q = 0`.
    pub fn r(&self) -> T {
        let s = self.p + self.q;
        if s == T::zero() {
            T::zero()
        } else {
            (self.p - self.q) / s
        }
    }

    /// Per-class sums of `pi^2` (lambda, mu, ... in class order).
    pub fn class_sq_sums(&self) -> Vec<T> {
        class_sq_sums(&self.pi, &self.labels, self.k)
    }
}

pub fn class_sq_sums<T: Real>(pi: &[T], labels: &[usize], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k];
    for (&x, &c) in pi.iter().zip(labels) {
        out[c] += x * x;
    }
    out
}

/// Undirected graph with a dense adjacency and optional class labels.
#[derive(Clone, Debug)]
pub struct Graph<T: Real> {
    adjacency: Mat<T>,
    labels: Option<Vec<usize>>,
}

impl<T: Real> Graph<T> {
    pub fn new(adjacency: Mat<T>, labels: Option<Vec<usize>>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::dim(format!(
                "adjacency is {}x{}",
                adjacency.nrows(),
                adjacency.ncols()
            )));
        }
        let tol = T::lit(SYM_TOL);
        for i in 0..n {
            for j in 0..i {
                if (adjacency[(i, j)] - adjacency[(j, i)]).abs() > tol {
                    return Err(Error::param(format!("adjacency not symmetric at ({i}, {j})")));
                }
            }
        }
        if let Some((i, x)) = adjacency.iter().enumerate().find(|(_, x)| **x < T::zero()) {
            return Err(Error::param(format!("negative weight {x} at flat index {i}")));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::dim(format!("{} labels for {n} nodes", l.len())));
            }
        }
        Ok(Self { adjacency, labels })
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &Mat<T> {
        &self.adjacency
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Weighted degrees (row sums).
    pub fn degrees(&self) -> Vec<T> {
        self.adjacency.row_iter().map(|r| r.sum()).collect()
    }

    /// Number of undirected edges with nonzero weight, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        let n = self.n();
        (0..n)
            .map(|i| (i..n).filter(|&j| self.adjacency[(i, j)] != T::zero()).count())
            .sum()
    }

    /// Copy with unit self-loops added (`A + I`). Never applied implicitly.
    pub fn with_self_loops(&self) -> Self {
        let mut a = self.adjacency.clone();
        for i in 0..self.n() {
            a[(i, i)] += T::one();
        }
        Self { adjacency: a, labels: self.labels.clone() }
    }
}

/// Expected adjacency `M = E[A]`, diagonal `p * pi_i^2` included.
pub fn population_adjacency<T: Real>(params: &DcSbmParams<T>) -> Graph<T> {
    let n = params.n();
    let m = Mat::from_fn(n, n, |i, j| params.prob(i, j));
    Graph { adjacency: m, labels: Some(params.labels.clone()) }
}

/// Bernoulli sample with zero diagonal.
///
/// Row `i` draws its upper-triangle coins from ChaCha stream `i`, so an entry depends only on
/// `(seed, i, j)` and not on evaluation order.
pub fn sample_graph<T: Real>(params: &DcSbmParams<T>, seed: u64) -> Graph<T> {
    let n = params.n();
    let mut a = Mat::zeros(n, n);
    for i in 0..n {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        for j in (i + 1)..n {
            let u: f64 = rng.random();
            if u < params.prob(i, j).as_f64() {
                a[(i, j)] = T::one();
                a[(j, i)] = T::one();
            }
        }
    }
    Graph { adjacency: a, labels: Some(params.labels.clone()) }
}

/// How to build a degree-correction vector.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiMode {
    /// `pi_i = 1/n`.
    Uniform,
    /// `Unif(0,1)` draws normalized within each class to sum `1/K`.
    Unif01,
    /// `Unif01`, then each class blended toward uniform until all class sums of `pi^2` agree.
    BalancedGamma,
}

impl std::str::FromStr for PiMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(PiMode::Uniform),
            "unif01" => Ok(PiMode::Unif01),
            "balanced_gamma" | "balanced-gamma" => Ok(PiMode::BalancedGamma),
            _ => Err(Error::param(format!("unknown pi mode '{s}'"))),
        }
    }
}

/// Contiguous balanced class assignment: node `i` gets class `i * k / n`.
pub fn balanced_labels(n: usize, k: usize) -> Vec<usize> {
    (0..n).map(|i| i * k / n).collect()
}

/// Raw `Unif(0,1)` corrections (open interval, so no zero-degree population nodes).
pub fn unif01_raw<T: Real>(n: usize, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| T::lit(rng.sample::<f64, _>(rand::distr::Open01)))
        .collect()
}

/// Degree-correction vector for `n` nodes over [`balanced_labels`].
pub fn make_pi<T: Real>(n: usize, k: usize, mode: PiMode, seed: u64) -> Result<Vec<T>> {
    if n == 0 || k < 2 || k > n {
        return Err(Error::param(format!("need 2 <= K <= n, got n={n}, K={k}")));
    }
    if mode != PiMode::Uniform && !n.is_multiple_of(k) {
        return Err(Error::param(format!("n={n} not divisible by K={k}")));
    }
    let labels = balanced_labels(n, k);
    match mode {
        PiMode::Uniform => Ok(vec![T::one() / T::from_count(n); n]),
        PiMode::Unif01 => Ok(normalize_per_class(&unif01_raw(n, seed), &labels, k)),
        PiMode::BalancedGamma => {
            let pi = normalize_per_class(&unif01_raw(n, seed), &labels, k);
            balance_gamma(pi, &labels, k)
        }
    }
}

/// Rescales each class of `raw` to sum `1/K`.
pub fn normalize_per_class<T: Real>(raw: &[T], labels: &[usize], k: usize) -> Vec<T> {
    let mut sums = vec![T::zero(); k];
    for (&x, &c) in raw.iter().zip(labels) {
        sums[c] += x;
    }
    let kk = T::from_count(k);
    raw.iter()
        .zip(labels)
        .map(|(&x, &c)| x / (sums[c] * kk))
        .collect()
}

// Blending a class toward uniform, pi_w = (1-w) pi + w u, keeps its sum and moves its sum of
// squares along (1-w)^2 (S - U) + U, so every class can be brought down to the smallest S
// exactly; the loop only polishes rounding.
fn balance_gamma<T: Real>(mut pi: Vec<T>, labels: &[usize], k: usize) -> Result<Vec<T>> {
    const TOL: f64 = 1e-12;
    const MAX_ITER: usize = 50;
    let n = pi.len();
    let size = n / k;
    let u = 1.0 / (k as f64 * size as f64);
    let uu = size as f64 * u * u;
    for _ in 0..MAX_ITER {
        let s: Vec<f64> = class_sq_sums(&pi, labels, k).iter().map(|x| x.as_f64()).collect();
        let target = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let spread = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - target;
        if spread < TOL * target {
            return Ok(pi);
        }
        for c in 0..k {
            if s[c] - uu <= 0.0 {
                continue;
            }
            let w = 1.0 - ((target - uu).max(0.0) / (s[c] - uu)).sqrt();
            let (wt, ut) = (T::lit(w), T::lit(u));
            for (x, &l) in pi.iter_mut().zip(labels) {
                if l == c {
                    *x = (T::one() - wt) * *x + wt * ut;
                }
            }
        }
    }
    Err(Error::Convergence(format!(
        "class sums of pi^2 did not agree within relative {TOL} after {MAX_ITER} passes"
    )))
}
