//! Dense helpers shared by the kernel code.

use crate::{Error, Mat, Real, Result};

/// `S X S^T`
pub fn sandwich<T: Real>(s: &Mat<T>, x: &Mat<T>) -> Mat<T> {
    s * x * s.transpose()
}

/// `A A^T`
pub fn gram<T: Real>(a: &Mat<T>) -> Mat<T> {
    a * a.transpose()
}

/// Largest `|M_ij - M_ji|`.
pub fn asymmetry<T: Real>(m: &Mat<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..i {
            let d = (m[(i, j)] - m[(j, i)]).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

/// Replaces `M` by `(M + M^T) / 2`.
pub fn symmetrize<T: Real>(m: &mut Mat<T>) {
    let n = m.nrows();
    let half = T::lit(0.5);
    for i in 0..n {
        for j in 0..i {
            let v = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Smallest eigenvalue of a symmetric matrix (lower triangle is read).
pub fn min_eigenvalue<T: Real>(m: &Mat<T>) -> T {
    if m.nrows() == 0 {
        return T::zero();
    }
    let mut sym = m.clone();
    symmetrize(&mut sym);
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(T::max_value().unwrap(), |a, b| if b < a { b } else { a })
}

/// Solves `A X = B` for symmetric positive definite `A`, falling back to LU.
pub fn solve_spd<T: Real>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    if let Some(ch) = a.clone().cholesky() {
        return Ok(ch.solve(b));
    }
    a.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Singular("matrix is singular; use a positive ridge".into()))
}

/// Exact low-rank factorization `S = L R` by fully pivoted cross approximation.
///
/// Returns `None` when the residual does not drop below `rel_tol * max|S|` within
/// `max_rank` steps. Used to shortcut products with population operators, which have
/// rank `K`.
pub fn low_rank_factor<T: Real>(s: &Mat<T>, max_rank: usize, rel_tol: T) -> Option<(Mat<T>, Mat<T>)> {
    let (n, m) = s.shape();
    let scale = s.amax();
    if scale == T::zero() {
        return Some((Mat::zeros(n, 0), Mat::zeros(0, m)));
    }
    let tol = rel_tol * scale;
    let mut res = s.clone();
    let mut us: Vec<Vec<T>> = Vec::new();
    let mut vs: Vec<Vec<T>> = Vec::new();
    loop {
        let (mut pi, mut pj, mut best) = (0, 0, T::zero());
        for j in 0..m {
            for i in 0..n {
                let v = res[(i, j)].abs();
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        if us.len() == max_rank {
            return None;
        }
        let piv = res[(pi, pj)];
        let u: Vec<T> = (0..n).map(|i| res[(i, pj)] / piv).collect();
        let v: Vec<T> = (0..m).map(|j| res[(pi, j)]).collect();
        for j in 0..m {
            let vj = v[j];
            if vj != T::zero() {
                for i in 0..n {
                    res[(i, j)] -= u[i] * vj;
                }
            }
        }
        us.push(u);
        vs.push(v);
    }
    let r = us.len();
    let l = Mat::from_fn(n, r, |i, c| us[c][i]);
    let rr = Mat::from_fn(r, m, |c, j| vs[c][j]);
    Some((l, rr))
}
