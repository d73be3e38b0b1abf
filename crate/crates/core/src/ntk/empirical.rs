//! Monte-Carlo tangent kernel of finite-width GCNs.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{NtkConfig, Skip};
use crate::kernel::{KernelMatrix, KernelMeta, Source};
use crate::linalg::symmetrize;
use crate::{Error, Mat, Real, Result};

#[derive(Copy, Clone, Debug)]
pub struct EmpiricalOptions {
    /// Hidden width `h`.
    pub width: usize,
    /// Number of independent weight draws averaged.
    pub samples: usize,
    pub seed: u64,
}

fn normal_matrix<T: Real>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Mat<T> {
    Mat::from_fn(rows, cols, |_, _| T::lit(StandardNormal.sample(rng)))
}

fn map<T: Real>(m: &Mat<T>, f: impl Fn(T) -> T) -> Mat<T> {
    m.map(f)
}

/// Average over `samples` draws of the Gram matrix of per-node output gradients with respect to
/// every trainable weight. Weights are i.i.d. standard normal; the skip input transform `W_0`
/// is drawn but not trained. Draw `m` uses ChaCha stream `m` of `seed`, and draws are summed in
/// index order so the result does not depend on the thread count.
pub fn empirical_ntk<T: Real>(
    s: &Mat<T>,
    x: &Mat<T>,
    cfg: &NtkConfig,
    opts: EmpiricalOptions,
) -> Result<KernelMatrix<T>> {
    cfg.validate()?;
    let n = s.nrows();
    if s.ncols() != n || x.nrows() != n {
        return Err(Error::dim(format!("S is {}x{}, X has {} rows", n, s.ncols(), x.nrows())));
    }
    if opts.width == 0 || opts.samples == 0 {
        return Err(Error::param("width and samples must be positive"));
    }
    let grams: Vec<Mat<T>> = (0..opts.samples)
        .into_par_iter()
        .map(|m| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(m as u64);
            one_draw(s, x, cfg, opts.width, &mut rng)
        })
        .collect();
    let mut total = Mat::zeros(n, n);
    for g in &grams {
        total += g;
    }
    total /= T::from_count(opts.samples);
    symmetrize(&mut total);
    Ok(KernelMatrix::new(total, KernelMeta { conv: None, config: *cfg, source: Source::Empirical }))
}

fn one_draw<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig, h: usize, rng: &mut ChaCha8Rng) -> Mat<T> {
    let n = s.nrows();
    let d = cfg.depth;
    let act = cfg.activation;
    let scale = T::lit((cfg.c_sigma() / h as f64).sqrt());
    let (alpha, beta) = match cfg.skip {
        Skip::Alpha(a) => (T::lit(a), T::lit(1.0 - a)),
        _ => (T::zero(), T::one()),
    };

    // Skip input sigma_s(X W_0).
    let z0 = match cfg.skip {
        Skip::None => None,
        _ => {
            let w0: Mat<T> = normal_matrix(x.ncols(), h, rng);
            let h0 = x * w0;
            let sa = cfg.skip_activation;
            Some(map(&h0, |v| sa.apply(v)))
        }
    };

    // Forward pass: inputs[k] multiplies W_{k+1}; pre[k] = F_{k+1}.
    let mut inputs: Vec<Mat<T>> = Vec::with_capacity(d + 1);
    let mut pre: Vec<Mat<T>> = Vec::with_capacity(d + 1);
    let mut weights: Vec<Mat<T>> = Vec::with_capacity(d + 1);
    for k in 0..=d {
        let g = if k == 0 {
            match cfg.skip {
                Skip::None => s * x,
                Skip::Pc => s * z0.as_ref().unwrap() * scale,
                Skip::Alpha(_) => {
                    let z = z0.as_ref().unwrap();
                    (s * z * beta + z * alpha) * scale
                }
            }
        } else {
            let a = map(&pre[k - 1], |v| act.apply(v));
            match cfg.skip {
                Skip::None => s * a * scale,
                Skip::Pc => s * (a + z0.as_ref().unwrap()) * scale,
                Skip::Alpha(_) => (s * a * beta + z0.as_ref().unwrap() * alpha) * scale,
            }
        };
        let width_out = if k == d { 1 } else { h };
        let w: Mat<T> = normal_matrix(g.ncols(), width_out, rng);
        pre.push(&g * &w);
        inputs.push(g);
        weights.push(w);
    }

    // Backward pass for all n outputs at once. `delta` stacks dF_out[u] / dF_k as n blocks of
    // n rows each (block u, row x).
    let mut delta = Mat::zeros(n * n, 1);
    for u in 0..n {
        delta[(u * n + u, 0)] = T::one();
    }
    let back = match cfg.skip {
        Skip::Alpha(_) => beta * scale,
        _ => scale,
    };
    let st = s.transpose();
    let mut gram = Mat::zeros(n, n);
    for k in (0..=d).rev() {
        let q = &inputs[k] * inputs[k].transpose();
        accumulate_gram(&mut gram, &delta, &q, n);
        if k == 0 {
            break;
        }
        // dF_{k+1}/dF_k: through W_{k+1}^T, the convolution, and sigma'.
        let through_w = &delta * weights[k].transpose();
        let deriv = map(&pre[k - 1], |v| act.derivative(v));
        let width = through_w.ncols();
        let mut next = Mat::zeros(n * n, width);
        for u in 0..n {
            let block = through_w.rows(u * n, n);
            let mut nb = &st * block * back;
            nb.component_mul_assign(&deriv);
            next.rows_mut(u * n, n).copy_from(&nb);
        }
        delta = next;
    }
    gram
}

/// `gram[u, v] += <delta_u, Q delta_v>` for each pair of output nodes.
fn accumulate_gram<T: Real>(gram: &mut Mat<T>, delta: &Mat<T>, q: &Mat<T>, n: usize) {
    let qd: Vec<Mat<T>> = (0..n).map(|v| q * delta.rows(v * n, n)).collect();
    for u in 0..n {
        let du = delta.rows(u * n, n);
        for v in 0..=u {
            let val = du.dot(&qd[v]);
            gram[(u, v)] += val;
            if u != v {
                gram[(v, u)] += val;
            }
        }
    }
}
