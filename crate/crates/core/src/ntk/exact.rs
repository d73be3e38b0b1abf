use super::{activation_moments, hadamard_assemble, NtkConfig, Skip};
use crate::kernel::{KernelMatrix, KernelMeta, Source};
use crate::linalg::{gram, sandwich, symmetrize};
use crate::{Error, Mat, Real, Result};

fn check_shapes<T: Real>(s: &Mat<T>, x: &Mat<T>) -> Result<()> {
    let n = s.nrows();
    if s.ncols() != n {
        return Err(Error::dim(format!("S is {}x{}", n, s.ncols())));
    }
    if x.nrows() != n {
        return Err(Error::dim(format!("X has {} rows, S has {n}", x.nrows())));
    }
    Ok(())
}

/// `c_sigma * E[sigma_s(F) sigma_s(F)^T]` for `F ~ N(0, X X^T)`, with `c_sigma` taken from the
/// main activation.
fn skip_input_moment<T: Real>(x: &Mat<T>, cfg: &NtkConfig) -> Result<Mat<T>> {
    let (e, _) = activation_moments(&gram(x), cfg.skip_activation)?;
    let scale = cfg.activation.c_sigma() / cfg.skip_activation.c_sigma();
    Ok(e * T::lit(scale))
}

/// Layer covariances `Sigma_1..Sigma_{d+1}` and derivative moments `E_dot_1..E_dot_d`.
fn layer_moments<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<(Vec<Mat<T>>, Vec<Mat<T>>)> {
    cfg.validate()?;
    check_shapes(s, x)?;
    let d = cfg.depth;
    let mut sigmas = Vec::with_capacity(d + 1);
    let mut edots = Vec::with_capacity(d);
    let (first, tail): (Mat<T>, Box<dyn Fn(&Mat<T>) -> Mat<T>>) = match cfg.skip {
        Skip::None => {
            let sx = s * x;
            (gram(&sx), Box::new(|e: &Mat<T>| sandwich(s, e)))
        }
        Skip::Pc => {
            let e0 = skip_input_moment(x, cfg)?;
            let sigma1 = sandwich(s, &e0);
            let keep = sigma1.clone();
            (sigma1, Box::new(move |e: &Mat<T>| sandwich(s, e) + &keep))
        }
        Skip::Alpha(a) => {
            let e0 = skip_input_moment(x, cfg)?;
            let (a, b) = (T::lit(a), T::lit(1.0 - a));
            let se = s * &e0;
            let mut sigma1 = sandwich(s, &e0) * (b * b) + (&se + se.transpose()) * (a * b) + &e0 * (a * a);
            symmetrize(&mut sigma1);
            let skip = e0 * (a * a);
            (sigma1, Box::new(move |e: &Mat<T>| sandwich(s, e) * (b * b) + &skip))
        }
    };
    let mut cur = first;
    symmetrize(&mut cur);
    for _ in 0..d {
        let (e, ed) = activation_moments(&cur, cfg.activation)?;
        let mut next = tail(&e);
        symmetrize(&mut next);
        sigmas.push(cur);
        edots.push(ed);
        cur = next;
    }
    sigmas.push(cur);
    Ok((sigmas, edots))
}

fn assemble<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    let (sigmas, edots) = layer_moments(s, x, cfg)?;
    let mut theta = hadamard_assemble(&gram(s), &sigmas, &edots);
    symmetrize(&mut theta);
    Ok(KernelMatrix::new(theta, KernelMeta { conv: None, config: *cfg, source: Source::Exact }))
}

fn require(cfg: &NtkConfig, want: fn(Skip) -> bool, name: &str) -> Result<()> {
    if want(cfg.skip) {
        Ok(())
    } else {
        Err(Error::param(format!("{name} called with skip = {}", cfg.skip)))
    }
}

/// Exact NTK of the vanilla GCN: Hadamard assembly of the layer covariances
/// `Sigma_1 = S X X^T S^T`, `Sigma_k = S E_{k-1} S^T`.
pub fn ntk_vanilla<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    require(cfg, |k| k == Skip::None, "ntk_vanilla")?;
    assemble(s, x, cfg)
}

/// Skip-PC: `Sigma_1 = S E~_0 S^T`, `Sigma_k = S E_{k-1} S^T + Sigma_1`.
pub fn ntk_skip_pc<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    require(cfg, |k| k == Skip::Pc, "ntk_skip_pc")?;
    assemble(s, x, cfg)
}

/// Skip-alpha: `Sigma_1 = (1-a)^2 S E~_0 S^T + a(1-a)(S E~_0 + E~_0 S^T) + a^2 E~_0`,
/// `Sigma_k = (1-a)^2 S E_{k-1} S^T + a^2 E~_0`.
pub fn ntk_skip_alpha<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    require(cfg, |k| matches!(k, Skip::Alpha(_)), "ntk_skip_alpha")?;
    assemble(s, x, cfg)
}

/// Dispatches on `cfg.skip`.
pub fn ntk<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    assemble(s, x, cfg)
}

/// Gradient-consistent kernel for the same networks.
///
/// Uses the layer covariances of [`ntk`] but carries the tangent kernel through each layer
/// with the convolution itself, `Theta_{k+1} = P(Theta_k ⊙ E_dot_k) + Sigma_{k+1}` where
/// `P(M) = S M S^T` (scaled by `(1-a)^2` for Skip-alpha). This is the kernel the Monte-Carlo
/// estimator converges to; [`ntk`] replaces `P(M)` by `M ⊙ S S^T`, and the two agree only in
/// degenerate cases such as diagonal `S` with orthonormal features and linear activation.
pub fn ntk_propagated<T: Real>(s: &Mat<T>, x: &Mat<T>, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    let (sigmas, edots) = layer_moments(s, x, cfg)?;
    let scale = match cfg.skip {
        Skip::Alpha(a) => T::lit((1.0 - a) * (1.0 - a)),
        _ => T::one(),
    };
    let mut theta = sigmas[0].clone();
    for (k, ed) in edots.iter().enumerate() {
        theta.component_mul_assign(ed);
        theta = sandwich(s, &theta) * scale + &sigmas[k + 1];
        symmetrize(&mut theta);
    }
    Ok(KernelMatrix::new(theta, KernelMeta { conv: None, config: *cfg, source: Source::Propagated }))
}
