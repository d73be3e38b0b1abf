//! Node classification by kernel ridge regression on an NTK.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::solve_spd;
use crate::{Error, Mat, Real, Result};

/// Observed (train) and held-out (test) nodes with one-hot train targets.
#[derive(Clone, Debug)]
pub struct SplitSpec<T: Real> {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// `m x K` one-hot targets, row `r` for `train[r]`.
    pub y: Mat<T>,
}

impl<T: Real> SplitSpec<T> {
    pub fn new(train: Vec<usize>, test: Vec<usize>, labels: &[usize], k: usize) -> Result<Self> {
        let n = labels.len();
        let mut seen = vec![false; n];
        for &i in train.iter().chain(&test) {
            if i >= n {
                return Err(Error::param(format!("node {i} out of range for {n} labels")));
            }
            if seen[i] {
                return Err(Error::param(format!("node {i} listed twice in the split")));
            }
            seen[i] = true;
        }
        if train.is_empty() {
            return Err(Error::param("empty training set"));
        }
        let mut y = Mat::zeros(train.len(), k);
        for (r, &i) in train.iter().enumerate() {
            if labels[i] >= k {
                return Err(Error::param(format!("label {} of node {i} is not below K = {k}", labels[i])));
            }
            y[(r, labels[i])] = T::one();
        }
        Ok(Self { train, test, y })
    }

    /// The first `m` nodes observed, the rest held out.
    pub fn first_m(labels: &[usize], k: usize, m: usize) -> Result<Self> {
        let n = labels.len();
        if m > n {
            return Err(Error::param(format!("m = {m} exceeds n = {n}")));
        }
        Self::new((0..m).collect(), (m..n).collect(), labels, k)
    }

    /// A uniformly random `frac` of the nodes observed; both index lists are sorted.
    pub fn random(labels: &[usize], k: usize, frac: f64, seed: u64) -> Result<Self> {
        if !(frac > 0.0 && frac < 1.0) {
            return Err(Error::param(format!("train fraction must lie in (0, 1), got {frac}")));
        }
        let n = labels.len();
        let m = ((n as f64 * frac).round() as usize).clamp(1, n.saturating_sub(1).max(1));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut train = order[..m].to_vec();
        let mut test = order[m..].to_vec();
        train.sort_unstable();
        test.sort_unstable();
        Self::new(train, test, labels, k)
    }
}

/// Default ridge `1e-6 * trace(K_train) / m`.
pub fn default_ridge<T: Real>(kernel: &Mat<T>, train: &[usize]) -> T {
    let tr = train.iter().fold(T::zero(), |s, &i| s + kernel[(i, i)]);
    T::lit(1e-6) * tr / T::from_count(train.len())
}

/// Test scores `K_test,train (K_train,train + ridge I)^{-1} Y`.
pub fn kernel_regression_scores<T: Real>(kernel: &Mat<T>, split: &SplitSpec<T>, ridge: Option<T>) -> Result<Mat<T>> {
    let n = kernel.nrows();
    if kernel.ncols() != n {
        return Err(Error::dim(format!("kernel is {}x{}", n, kernel.ncols())));
    }
    if let Some(&bad) = split.train.iter().chain(&split.test).find(|&&i| i >= n) {
        return Err(Error::dim(format!("node {bad} outside a {n}-node kernel")));
    }
    let lam = ridge.unwrap_or_else(|| default_ridge(kernel, &split.train));
    if lam < T::zero() {
        return Err(Error::param("ridge must be non-negative"));
    }
    let m = split.train.len();
    let a = Mat::from_fn(m, m, |r, c| {
        let v = kernel[(split.train[r], split.train[c])];
        if r == c {
            v + lam
        } else {
            v
        }
    });
    let coef = solve_spd(&a, &split.y).map_err(|e| match e {
        Error::Singular(msg) if lam == T::zero() => Error::Singular(format!("{msg}; try a ridge > 0")),
        other => other,
    })?;
    let cross = Mat::from_fn(split.test.len(), m, |r, c| kernel[(split.test[r], split.train[c])]);
    Ok(cross * coef)
}

/// Row-wise argmax, ties going to the lowest class index.
pub fn argmax_rows<T: Real>(scores: &Mat<T>) -> Vec<usize> {
    (0..scores.nrows())
        .map(|r| {
            let mut best = 0;
            for c in 1..scores.ncols() {
                if scores[(r, c)] > scores[(r, best)] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Predicted classes of `split.test`, in order.
pub fn kernel_regression_predict<T: Real>(kernel: &Mat<T>, split: &SplitSpec<T>, ridge: Option<T>) -> Result<Vec<usize>> {
    Ok(argmax_rows(&kernel_regression_scores(kernel, split, ridge)?))
}

pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::dim(format!("{} predictions, {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::param("accuracy of an empty prediction set"));
    }
    let hits = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_ties_to_zero() {
        let labels = [0, 1, 1, 0];
        let split = SplitSpec::<f64>::new(vec![0, 1], vec![2, 3], &labels, 2).unwrap();
        let pred = kernel_regression_predict(&Mat::identity(4, 4), &split, Some(0.0)).unwrap();
        assert_eq!(pred, vec![0, 0]);
    }

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[1, 0], &[1, 0]).unwrap(), 1.0);
        assert_eq!(accuracy(&[1, 0], &[0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 1], &[1, 0]).unwrap(), 0.5);
        assert!(accuracy(&[1], &[1, 0]).is_err());
    }

    #[test]
    fn overlapping_split_rejected() {
        assert!(SplitSpec::<f64>::new(vec![0, 1], vec![1], &[0, 1], 2).is_err());
    }
}
