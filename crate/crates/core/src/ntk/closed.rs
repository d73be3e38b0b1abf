//! Linear-activation, orthonormal-feature kernels from matrix powers of `S`.
//!
//! When `S` has low numerical rank (population operators have rank `K`), products are carried
//! out on a factored form `beta I + B C B^T` so that depth-64 kernels on thousands of nodes
//! stay cheap; results match the dense path to rounding.

use super::{NtkConfig, Skip};
use crate::kernel::{KernelMatrix, KernelMeta, Source};
use crate::linalg::{low_rank_factor, symmetrize};
use crate::{Error, Mat, Real, Result};

const FACTOR_MIN_N: usize = 64;
const FACTOR_MAX_RANK: usize = 32;
const FACTOR_TOL: f64 = 1e-13;

trait Algebra<T: Real> {
    type M: Clone;
    fn eye(&self) -> Self::M;
    /// `S M S^T`
    fn sandwich(&self, m: &Self::M) -> Self::M;
    /// `S + S^T`
    fn s_plus_st(&self) -> Self::M;
    /// `a x + b y`
    fn lin(&self, a: T, x: &Self::M, b: T, y: &Self::M) -> Self::M;
    fn dense(&self, m: &Self::M) -> Mat<T>;
}

struct Dense<'a, T: Real>(&'a Mat<T>);

impl<T: Real> Algebra<T> for Dense<'_, T> {
    type M = Mat<T>;
    fn eye(&self) -> Mat<T> {
        Mat::identity(self.0.nrows(), self.0.nrows())
    }
    fn sandwich(&self, m: &Mat<T>) -> Mat<T> {
        self.0 * m * self.0.transpose()
    }
    fn s_plus_st(&self) -> Mat<T> {
        self.0 + self.0.transpose()
    }
    fn lin(&self, a: T, x: &Mat<T>, b: T, y: &Mat<T>) -> Mat<T> {
        x * a + y * b
    }
    fn dense(&self, m: &Mat<T>) -> Mat<T> {
        m.clone()
    }
}

/// `S = L R` with basis `B = [L | R^T]`. In that basis `S B = B T`, `S S^T = B Q B^T`.
struct Factored<T: Real> {
    b: Mat<T>,
    t: Mat<T>,
    q: Mat<T>,
    e: Mat<T>,
}

#[derive(Clone)]
struct Lr<T: Real> {
    beta: T,
    c: Mat<T>,
}

impl<T: Real> Factored<T> {
    fn new(l: Mat<T>, r: Mat<T>) -> Self {
        let (n, rho) = l.shape();
        let m = 2 * rho;
        let mut b = Mat::zeros(n, m);
        b.view_mut((0, 0), (n, rho)).copy_from(&l);
        b.view_mut((0, rho), (n, rho)).copy_from(&r.transpose());
        let rb = &r * &b;
        let mut t = Mat::zeros(m, m);
        t.view_mut((0, 0), (rho, m)).copy_from(&rb);
        let mut q = Mat::zeros(m, m);
        q.view_mut((0, 0), (rho, rho)).copy_from(&(&r * r.transpose()));
        let mut e = Mat::zeros(m, m);
        for i in 0..rho {
            e[(i, rho + i)] = T::one();
        }
        Self { b, t, q, e }
    }
}

impl<T: Real> Algebra<T> for Factored<T> {
    type M = Lr<T>;
    fn eye(&self) -> Lr<T> {
        let m = self.b.ncols();
        Lr { beta: T::one(), c: Mat::zeros(m, m) }
    }
    fn sandwich(&self, x: &Lr<T>) -> Lr<T> {
        Lr { beta: T::zero(), c: &self.q * x.beta + &self.t * &x.c * self.t.transpose() }
    }
    fn s_plus_st(&self) -> Lr<T> {
        Lr { beta: T::zero(), c: &self.e + self.e.transpose() }
    }
    fn lin(&self, a: T, x: &Lr<T>, b: T, y: &Lr<T>) -> Lr<T> {
        Lr { beta: a * x.beta + b * y.beta, c: &x.c * a + &y.c * b }
    }
    fn dense(&self, x: &Lr<T>) -> Mat<T> {
        let mut out = &self.b * &x.c * self.b.transpose();
        for i in 0..out.nrows() {
            out[(i, i)] += x.beta;
        }
        out
    }
}

/// `Sigma_k` families, each assembled as `sum_k Sigma_k ⊙ (S S^T)^{⊙(d+1-k)}`.
fn assemble<T: Real, A: Algebra<T>>(alg: &A, depth: usize, skip: Skip) -> Mat<T> {
    let one = alg.eye();
    let sst = alg.dense(&alg.sandwich(&one));
    let (a, b) = match skip {
        Skip::Alpha(a) => (T::lit(a), T::lit(1.0 - a)),
        _ => (T::zero(), T::one()),
    };
    let b2 = b * b;
    let mut g_prev = one.clone();
    let mut g1: Option<A::M> = None;
    let mut h = alg.s_plus_st();
    let mut acc = one;
    let mut theta: Option<Mat<T>> = None;
    for k in 1..=depth + 1 {
        let g = alg.sandwich(&g_prev);
        let sigma = match skip {
            Skip::None => g.clone(),
            Skip::Pc => {
                let first = g1.get_or_insert_with(|| g.clone());
                alg.lin(T::one(), &g, T::one(), first)
            }
            Skip::Alpha(_) => {
                let b2k = b2.powi(k as i32);
                let s = alg.lin(b2k, &g, a * b2k / b, &h);
                alg.lin(T::one(), &s, a * a, &acc)
            }
        };
        let dense = alg.dense(&sigma);
        theta = Some(match theta {
            None => dense,
            Some(mut t) => {
                t.component_mul_assign(&sst);
                t + dense
            }
        });
        if let Skip::Alpha(_) = skip {
            acc = alg.lin(T::one(), &acc, b2.powi(k as i32), &g);
            h = alg.sandwich(&h);
        }
        g_prev = g;
    }
    let mut out = theta.expect("depth >= 1");
    symmetrize(&mut out);
    out
}

fn compute<T: Real>(s: &Mat<T>, depth: usize, skip: Skip, allow_factor: bool) -> Result<Mat<T>> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::dim(format!("S is {}x{}", n, s.ncols())));
    }
    if depth == 0 {
        return Err(Error::param("depth must be at least 1"));
    }
    skip.validate()?;
    if allow_factor && n >= FACTOR_MIN_N {
        let cap = FACTOR_MAX_RANK.min(n / 8);
        if let Some((l, r)) = low_rank_factor(s, cap, T::lit(FACTOR_TOL)) {
            return Ok(assemble(&Factored::new(l, r), depth, skip));
        }
    }
    Ok(assemble(&Dense(s), depth, skip))
}

fn wrap<T: Real>(values: Mat<T>, depth: usize, skip: Skip) -> KernelMatrix<T> {
    let config = NtkConfig::linear(depth).with_skip(skip, super::Activation::Linear);
    KernelMatrix::new(values, KernelMeta { conv: None, config, source: Source::Closed })
}

/// Linear orthonormal-feature NTK `sum_{k=1}^{d+1} S^k S^{kT} ⊙ (S S^T)^{⊙(d+1-k)}`.
pub fn ntk_linear_closed<T: Real>(s: &Mat<T>, depth: usize) -> Result<KernelMatrix<T>> {
    Ok(wrap(compute(s, depth, Skip::None, true)?, depth, Skip::None))
}

/// Skip variants of the linear closed path.
///
/// Skip-PC uses `Sigma_k = S^k S^{kT} + S S^T`. Skip-alpha uses
/// `(1-a)^{2k} S^k S^{kT} + a(1-a)^{2k-1} S^{k-1}(S + S^T)S^{(k-1)T}
/// + a^2 sum_{l<k} (1-a)^{2l} S^l S^{lT}`.
pub fn ntk_skip_linear_closed<T: Real>(s: &Mat<T>, depth: usize, skip: Skip) -> Result<KernelMatrix<T>> {
    if skip == Skip::None {
        return Err(Error::param("ntk_skip_linear_closed needs skip = pc or alpha"));
    }
    Ok(wrap(compute(s, depth, skip, true)?, depth, skip))
}
