//! Closed-form population NTKs (linear activation, orthonormal features) for a node pair.
//!
//! Every finite-depth value is `sum_{k=1}^{d+1} G_k * G_1^{d+1-k}` with the Gram factor
//! `G_k = (S^k S^{kT})_ij` of the population operator. For sym, row and col the factor is a
//! short sum of geometric terms `c_t rho_t^k`, so the depth sum is evaluated term by term in
//! closed form; adj uses the binomial expansion of `A^{2k}`.

use crate::conv::ConvKind;
use crate::dcsbm::DcSbmParams;
use crate::kernel::{KernelMatrix, KernelMeta, Source};
use crate::ntk::{Activation, NtkConfig, Skip};
use crate::{Error, Mat, Real, Result};

/// Everything the closed forms need about the pair `(i, j)` and the model.
#[derive(Clone, Debug)]
pub struct PopulationParams<T: Real> {
    pub p: T,
    pub q: T,
    pub pi_i: T,
    pub pi_j: T,
    /// Class-0 sum of `pi^2`.
    pub lambda: T,
    /// Class-1 sum of `pi^2`.
    pub mu: T,
    pub n: usize,
    pub k: usize,
    pub same_class: bool,
    /// Class of node `i` (selects the lambda/mu sign for same-class row pairs).
    pub class_i: usize,
    /// `i == j`; only the identity term of Skip-alpha depends on it.
    pub same_node: bool,
    /// `n_0 - n_1`; enters the col factor when the classes are unbalanced.
    pub size_diff: i64,
}

impl<T: Real> PopulationParams<T> {
    /// Pair `(i, j)` of a DC-SBM model.
    pub fn for_pair(model: &DcSbmParams<T>, i: usize, j: usize) -> Self {
        let sq = model.class_sq_sums();
        let labels = model.labels();
        let n0 = labels.iter().filter(|&&c| c == 0).count() as i64;
        let n = model.n();
        Self {
            p: model.p(),
            q: model.q(),
            pi_i: model.pi()[i],
            pi_j: model.pi()[j],
            lambda: sq[0],
            mu: if sq.len() > 1 { sq[1] } else { T::zero() },
            n,
            k: model.k(),
            same_class: labels[i] == labels[j],
            class_i: labels[i],
            same_node: i == j,
            size_diff: 2 * n0 - n as i64,
        }
    }

    /// Uniform `pi = 1/n` with `K` balanced classes; an off-diagonal pair.
    pub fn uniform(n: usize, k: usize, p: T, q: T, same_class: bool) -> Self {
        let nn = T::from_count(n);
        let per = T::one() / (nn * T::from_count(k));
        Self {
            p,
            q,
            pi_i: T::one() / nn,
            pi_j: T::one() / nn,
            lambda: per,
            mu: per,
            n,
            k,
            same_class,
            class_i: 0,
            same_node: false,
            size_diff: 0,
        }
    }

    pub fn with_pi(mut self, pi_i: T, pi_j: T) -> Self {
        self.pi_i = pi_i;
        self.pi_j = pi_j;
        self
    }

    pub fn with_class_sums(mut self, lambda: T, mu: T) -> Self {
        self.lambda = lambda;
        self.mu = mu;
        self
    }

    /// `r = (p - q) / (p + q)`
    pub fn r(&self) -> T {
        let s = self.p + self.q;
        if s == T::zero() {
            T::zero()
        } else {
            (self.p - self.q) / s
        }
    }

    /// `+1` for a same-class pair, `-1` otherwise.
    pub fn delta(&self) -> T {
        if self.same_class {
            T::one()
        } else {
            -T::one()
        }
    }

    /// Common class sum of `pi^2` under the balanced assumption, `(lambda + mu) / 2`.
    pub fn gamma(&self) -> T {
        (self.lambda + self.mu) * T::lit(0.5)
    }

    fn sqrt_pi(&self) -> T {
        (self.pi_i * self.pi_j).sqrt()
    }

    fn validate(&self) -> Result<()> {
        let (p, q) = (self.p.as_f64(), self.q.as_f64());
        if !(0.0..=1.0).contains(&q) || !(0.0..=1.0).contains(&p) || q > p || p == 0.0 {
            return Err(Error::param(format!("need 0 <= q <= p <= 1 and p > 0, got p={p}, q={q}")));
        }
        if self.k < 2 || self.n == 0 {
            return Err(Error::param("need K >= 2 and n >= 1"));
        }
        Ok(())
    }
}

/// `G_k = sum_t c_t rho_t^k` for sym, row, col.
fn gram_terms<T: Real>(pp: &PopulationParams<T>, kind: ConvKind) -> Result<Vec<(T, T)>> {
    pp.validate()?;
    let one = T::one();
    let two = T::lit(2.0);
    let r = pp.r();
    let delta = pp.delta();
    if pp.k > 2 {
        if kind != ConvKind::Sym {
            return Err(Error::NotImplemented(format!(
                "closed forms for {kind} with K = {} (only sym has one)",
                pp.k
            )));
        }
        // S_sym = u u^T + rho P on class space; S^{2k} = u u^T + rho^{2k} P.
        let kk = T::from_count(pp.k);
        let rho = (pp.p - pp.q) / (pp.p + (kk - one) * pp.q);
        let nu = pp.sqrt_pi();
        let proj = if pp.same_class { kk - one } else { -one };
        return Ok(vec![(nu, one), (nu * proj, rho * rho)]);
    }
    let r2 = r * r;
    Ok(match kind {
        ConvKind::Sym => {
            let nu = pp.sqrt_pi();
            vec![(nu, one), (nu * delta, r2)]
        }
        ConvKind::Row => {
            let s = pp.lambda + pp.mu;
            if pp.same_class {
                let sign = if pp.class_i == 0 { one } else { -one };
                vec![(s, one), (s, r2), (sign * two * (pp.lambda - pp.mu), r)]
            } else {
                vec![(s, one), (-s, r2)]
            }
        }
        ConvKind::Col => {
            let pij = pp.pi_i * pp.pi_j;
            let nn = T::from_count(pp.n);
            let mut terms = vec![(nn * pij, one), (nn * pij * delta, r2)];
            if pp.size_diff != 0 {
                // (s_i + s_j) with s = +1 for class 0
                let si = if pp.class_i == 0 { one } else { -one };
                let sj = if pp.same_class { si } else { -si };
                terms.push((pij * T::lit(pp.size_diff as f64) * (si + sj), r));
            }
            terms
        }
        ConvKind::Adj => unreachable!("adj handled by the binomial form"),
    })
}

fn eval_terms<T: Real>(terms: &[(T, T)], k: usize) -> T {
    terms.iter().fold(T::zero(), |acc, &(c, rho)| acc + c * rho.powi(k as i32))
}

fn require_adj<T: Real>(pp: &PopulationParams<T>) -> Result<()> {
    pp.validate()?;
    if pp.k != 2 {
        return Err(Error::NotImplemented(format!("adj closed form for K = {}", pp.k)));
    }
    let tol = T::lit(1e-10) * (pp.lambda + pp.mu);
    if (pp.lambda - pp.mu).abs() > tol {
        return Err(Error::NotImplemented(
            "adj closed form needs equal class sums of pi^2".into(),
        ));
    }
    Ok(())
}

/// Largest `m` for which every `C(m, l)` stays below `2^63`.
const EXACT_BINOMIAL_MAX: usize = 66;

/// `sum_{l even (same) / odd (cross)} C(m, l) p^{m-l} q^l`, the block entries of the 2x2
/// matrix `[[p, q], [q, p]]^m`.
fn binomial_block_sum<T: Real>(m: usize, p: T, q: T, same: bool) -> T {
    let start = if same { 0 } else { 1 };
    if m <= EXACT_BINOMIAL_MAX {
        let mut c: u64 = 1;
        let mut total = T::zero();
        for l in 0..=m {
            if l % 2 == start {
                total += T::lit(c as f64) * p.powi((m - l) as i32) * q.powi(l as i32);
            }
            if l < m {
                c = (c as u128 * (m - l) as u128 / (l + 1) as u128) as u64;
            }
        }
        return total;
    }
    // Log-space accumulation: ln C(m, l+1) = ln C(m, l) + ln(m - l) - ln(l + 1).
    let (lp, lq) = (p.as_f64().ln(), q.as_f64().ln());
    let mut logs = Vec::new();
    let mut lc = 0.0f64;
    for l in 0..=m {
        if l % 2 == start {
            let term = lc + (m - l) as f64 * lp + if l == 0 { 0.0 } else { l as f64 * lq };
            if term.is_finite() {
                logs.push(term);
            }
        }
        if l < m {
            lc += ((m - l) as f64).ln() - ((l + 1) as f64).ln();
        }
    }
    if logs.is_empty() {
        return T::zero();
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|v| (v - top).exp()).sum();
    T::lit(top + s.ln()).exp()
}

fn adj_gram<T: Real>(pp: &PopulationParams<T>, k: usize) -> T {
    // (S_adj^k S_adj^{kT})_ij = (A^{2k})_ij / n^{2k} = pi_i pi_j gamma^{2k-1} B_{2k} / n^{2k}
    let m = 2 * k;
    let nn = T::from_count(pp.n);
    let g = pp.gamma();
    let block = binomial_block_sum(m, pp.p, pp.q, pp.same_class);
    pp.pi_i * pp.pi_j * (g / nn).powi((m - 1) as i32) / nn * block
}

/// `(S^k S^{kT})_ij` for the population operator of `kind`.
pub fn pop_gram<T: Real>(pp: &PopulationParams<T>, kind: ConvKind, k: usize) -> Result<T> {
    if k == 0 {
        return Err(Error::param("power k must be at least 1"));
    }
    if kind == ConvKind::Adj {
        require_adj(pp)?;
        return Ok(adj_gram(pp, k));
    }
    Ok(eval_terms(&gram_terms(pp, kind)?, k))
}

const NEAR_EQUAL: f64 = 1e-7;

/// `sum_{k=1}^{d+1} rho^k x^{d+1-k}`, with an equal-terms branch at `rho = x`.
fn two_base_sum<T: Real>(rho: T, x: T, d: usize) -> T {
    let e = (d + 1) as i32;
    let scale = if rho.abs() > x.abs() { rho.abs() } else { x.abs() };
    if rho == x {
        return T::from_count(d + 1) * rho.powi(e);
    }
    if (rho - x).abs() <= T::lit(NEAR_EQUAL) * scale {
        let mut total = T::zero();
        for k in 1..=d + 1 {
            total += rho.powi(k as i32) * x.powi(e - k as i32);
        }
        return total;
    }
    rho * (rho.powi(e) - x.powi(e)) / (rho - x)
}

/// Finite-depth population NTK entry.
pub fn pop_ntk_depth<T: Real>(pp: &PopulationParams<T>, kind: ConvKind, depth: usize) -> Result<T> {
    if depth == 0 {
        return Err(Error::param("depth must be at least 1"));
    }
    if kind == ConvKind::Adj {
        require_adj(pp)?;
        let x = adj_gram(pp, 1);
        let mut total = T::zero();
        for k in 1..=depth + 1 {
            total += adj_gram(pp, k) * x.powi((depth + 1 - k) as i32);
        }
        return Ok(total);
    }
    let terms = gram_terms(pp, kind)?;
    let x = eval_terms(&terms, 1);
    Ok(terms
        .iter()
        .fold(T::zero(), |acc, &(c, rho)| acc + c * two_base_sum(rho, x, depth)))
}

fn convergent<T: Real>(x: T) -> Result<()> {
    if x >= T::one() {
        Err(Error::Divergent { ratio: x.as_f64() })
    } else {
        Ok(())
    }
}

/// Sum of the coefficients whose base is exactly one: the part of `G_k` that survives depth.
fn persistent<T: Real>(terms: &[(T, T)]) -> T {
    terms
        .iter()
        .filter(|(_, rho)| *rho == T::one())
        .fold(T::zero(), |acc, &(c, _)| acc + c)
}

/// Infinite-depth population NTK entry, `nu / (1 - G_1)` for sym/row/col and 0 for adj.
pub fn pop_ntk_limit<T: Real>(pp: &PopulationParams<T>, kind: ConvKind) -> Result<T> {
    if kind == ConvKind::Adj {
        require_adj(pp)?;
        let x = adj_gram(pp, 1);
        convergent(x)?;
        return Ok(T::zero());
    }
    let terms = gram_terms(pp, kind)?;
    let x = eval_terms(&terms, 1);
    convergent(x)?;
    Ok(persistent(&terms) / (T::one() - x))
}

/// Infinite-depth limit of the skip-connection linear kernels for sym and row.
///
/// Skip-PC gives `(nu + G_1) / (1 - G_1)`. For Skip-alpha only the `a^2` accumulation survives
/// depth, giving `a^2 / (1 - G_1) * sum_{l>=0} (1-a)^{2l} (S^l S^{lT})_ij`; the `l = 0` term is
/// the identity entry, so it is 1 on the diagonal and 0 elsewhere.
pub fn pop_skip_limit<T: Real>(pp: &PopulationParams<T>, kind: ConvKind, skip: Skip) -> Result<T> {
    if !matches!(kind, ConvKind::Sym | ConvKind::Row) {
        return Err(Error::param(format!("skip limits cover sym and row, not {kind}")));
    }
    skip.validate()?;
    let terms = gram_terms(pp, kind)?;
    let x = eval_terms(&terms, 1);
    convergent(x)?;
    let one = T::one();
    match skip {
        Skip::None => Err(Error::param("pop_skip_limit needs skip = pc or alpha")),
        Skip::Pc => Ok((persistent(&terms) + x) / (one - x)),
        Skip::Alpha(a) => {
            let a = T::lit(a);
            let b2 = (one - a) * (one - a);
            let mut series = if pp.same_node { one } else { T::zero() };
            for &(c, rho) in &terms {
                series += c * b2 * rho / (one - b2 * rho);
            }
            Ok(a * a * series / (one - x))
        }
    }
}

/// Assembles the closed-form finite-depth kernel over every pair of a model.
pub fn population_kernel<T: Real>(model: &DcSbmParams<T>, kind: ConvKind, depth: usize) -> Result<KernelMatrix<T>> {
    let n = model.n();
    let mut values = Mat::zeros(n, n);
    let base = PopulationParams::for_pair(model, 0, 0);
    for i in 0..n {
        for j in 0..=i {
            let mut pp = base.clone();
            pp.pi_i = model.pi()[i];
            pp.pi_j = model.pi()[j];
            pp.same_class = model.labels()[i] == model.labels()[j];
            pp.class_i = model.labels()[i];
            pp.same_node = i == j;
            let v = pop_ntk_depth(&pp, kind, depth)?;
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    let config = NtkConfig::linear(depth).with_skip(Skip::None, Activation::Linear);
    Ok(KernelMatrix::new(values, KernelMeta { conv: Some(kind), config, source: Source::Population }))
}
