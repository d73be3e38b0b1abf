//! Exact, closed-path and Monte-Carlo neural tangent kernels of GCNs.
//!
//! Depth `d` counts the diffusion layers before the linear output layer, so a network has
//! `d + 1` weight matrices and the kernel sums `d + 1` covariance terms.

mod closed;
mod empirical;
mod exact;

pub use closed::{ntk_linear_closed, ntk_skip_linear_closed};
pub use empirical::{empirical_ntk, EmpiricalOptions};
pub use exact::{ntk, ntk_propagated, ntk_skip_alpha, ntk_skip_pc, ntk_vanilla};

use serde::{Deserialize, Serialize};

use crate::{Error, Mat, Real, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
}

impl Activation {
    /// `1 / E[sigma(u)^2]` for standard normal `u`.
    pub fn c_sigma(self) -> f64 {
        match self {
            Activation::Linear => 1.0,
            Activation::Relu => 2.0,
        }
    }

    pub fn apply<T: Real>(self, x: T) -> T {
        match self {
            Activation::Linear => x,
            Activation::Relu => {
                if x > T::zero() {
                    x
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Derivative, with `relu'(0) = 0`.
    pub fn derivative<T: Real>(self, x: T) -> T {
        match self {
            Activation::Linear => T::one(),
            Activation::Relu => {
                if x > T::zero() {
                    T::one()
                } else {
                    T::zero()
                }
            }
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(Activation::Linear),
            "relu" => Ok(Activation::Relu),
            _ => Err(Error::param(format!("unknown activation '{s}' (linear|relu)"))),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "alpha")]
pub enum Skip {
    None,
    /// Transformed input added before every convolution.
    Pc,
    /// Transformed input interpolated into every layer with weight `alpha`.
    Alpha(f64),
}

impl Skip {
    pub fn validate(self) -> Result<()> {
        match self {
            Skip::Alpha(a) if !(a > 0.0 && a < 1.0) => {
                Err(Error::param(format!("alpha must lie in (0, 1), got {a}")))
            }
            _ => Ok(()),
        }
    }
}

impl std::str::FromStr for Skip {
    type Err = Error;
    /// `none`, `pc`, or `alpha:<value>` / `alpha(<value>)`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t {
            "none" => return Ok(Skip::None),
            "pc" => return Ok(Skip::Pc),
            _ => {}
        }
        let body = t
            .strip_prefix("alpha:")
            .or_else(|| t.strip_prefix("alpha(").and_then(|b| b.strip_suffix(')')))
            .ok_or_else(|| Error::param(format!("unknown skip '{s}' (none|pc|alpha:<a>)")))?;
        let a: f64 = body
            .parse()
            .map_err(|_| Error::param(format!("bad alpha in '{s}'")))?;
        let skip = Skip::Alpha(a);
        skip.validate()?;
        Ok(skip)
    }
}

impl std::fmt::Display for Skip {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Skip::None => f.write_str("none"),
            Skip::Pc => f.write_str("pc"),
            Skip::Alpha(a) => write!(f, "alpha:{a}"),
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NtkConfig {
    pub depth: usize,
    pub activation: Activation,
    pub skip: Skip,
    pub skip_activation: Activation,
}

impl NtkConfig {
    pub fn new(depth: usize, activation: Activation) -> Self {
        Self { depth, activation, skip: Skip::None, skip_activation: Activation::Linear }
    }

    pub fn linear(depth: usize) -> Self {
        Self::new(depth, Activation::Linear)
    }

    pub fn relu(depth: usize) -> Self {
        Self::new(depth, Activation::Relu)
    }

    pub fn with_skip(mut self, skip: Skip, skip_activation: Activation) -> Self {
        self.skip = skip;
        self.skip_activation = skip_activation;
        self
    }

    pub fn c_sigma(&self) -> f64 {
        self.activation.c_sigma()
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::param("depth must be at least 1"));
        }
        self.skip.validate()
    }
}

const CORR_SNAP: f64 = 1e-12;

/// `(E, E_dot)` for `F ~ N(0, sigma)`, both scaled by `c_sigma` of `act`.
///
/// ReLU uses the arc-cosine closed forms. A node with zero variance gets `E = 0` and
/// `E_dot = 1/2`.
pub fn activation_moments<T: Real>(sigma: &Mat<T>, act: Activation) -> Result<(Mat<T>, Mat<T>)> {
    let n = sigma.nrows();
    if sigma.ncols() != n {
        return Err(Error::dim(format!("covariance is {}x{}", n, sigma.ncols())));
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        let v = sigma[(i, i)];
        if v < T::lit(-1e-12) {
            return Err(Error::Covariance { index: i, value: v.as_f64() });
        }
        diag.push(if v > T::zero() { v } else { T::zero() });
    }
    match act {
        Activation::Linear => Ok((sigma.clone(), Mat::from_element(n, n, T::one()))),
        Activation::Relu => {
            let pi = T::pi();
            let half = T::lit(0.5);
            let mut e = Mat::zeros(n, n);
            let mut ed = Mat::zeros(n, n);
            for j in 0..n {
                for i in j..n {
                    let (a, b) = if i == j {
                        (diag[i], T::one())
                    } else {
                        relu_pair(diag[i], diag[j], sigma[(i, j)], pi, half)
                    };
                    e[(i, j)] = a;
                    e[(j, i)] = a;
                    ed[(i, j)] = b;
                    ed[(j, i)] = b;
                }
                if diag[j] == T::zero() {
                    ed[(j, j)] = half;
                }
            }
            Ok((e, ed))
        }
    }
}

fn relu_pair<T: Real>(su: T, sv: T, cov: T, pi: T, half: T) -> (T, T) {
    if su == T::zero() || sv == T::zero() {
        return (T::zero(), half);
    }
    let norm = (su * sv).sqrt();
    let mut rho = cov / norm;
    let snap = T::lit(CORR_SNAP);
    if rho >= T::one() - snap {
        rho = T::one();
    } else if rho <= -T::one() + snap {
        rho = -T::one();
    }
    let theta = rho.acos();
    let e = norm / pi * (theta.sin() + (pi - theta) * rho);
    let ed = (pi - theta) / pi;
    (e, ed)
}

/// Hadamard assembly `sum_k Sigma_k ⊙ (S S^T)^{⊙(d+1-k)} ⊙ E_dot_k ⊙ ... ⊙ E_dot_d`
/// evaluated by Horner's rule. `sigmas` has `d + 1` entries, `edots` has `d`.
pub(crate) fn hadamard_assemble<T: Real>(sst: &Mat<T>, sigmas: &[Mat<T>], edots: &[Mat<T>]) -> Mat<T> {
    debug_assert_eq!(sigmas.len(), edots.len() + 1);
    let mut theta = sigmas[0].clone();
    for (k, ed) in edots.iter().enumerate() {
        theta.component_mul_assign(sst);
        theta.component_mul_assign(ed);
        theta += &sigmas[k + 1];
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_identity_moments() {
        let (e, ed) = activation_moments(&Mat::<f64>::identity(2, 2), Activation::Relu).unwrap();
        let inv_pi = 1.0 / std::f64::consts::PI;
        assert!((e[(0, 0)] - 1.0).abs() < 1e-15);
        assert!((e[(0, 1)] - inv_pi).abs() < 1e-15);
        assert!((ed[(0, 1)] - 0.5).abs() < 1e-15);
        assert!((ed[(1, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn relu_perfect_correlation() {
        let s = Mat::from_row_slice(2, 2, &[4.0f64, 6.0, 6.0, 9.0]);
        let (e, ed) = activation_moments(&s, Activation::Relu).unwrap();
        assert!((e[(0, 1)] - 6.0).abs() < 1e-12);
        assert!((ed[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_variance_convention() {
        let s = Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let (e, ed) = activation_moments(&s, Activation::Relu).unwrap();
        assert_eq!(e[(0, 1)], 0.0);
        assert_eq!(ed[(0, 1)], 0.5);
        assert_eq!(ed[(0, 0)], 0.5);
    }

    #[test]
    fn negative_variance_rejected() {
        let s = Mat::from_row_slice(2, 2, &[-1e-9, 0.0, 0.0, 1.0]);
        assert!(matches!(
            activation_moments(&s, Activation::Relu),
            Err(Error::Covariance { index: 0, .. })
        ));
    }

    #[test]
    fn skip_parsing() {
        assert_eq!("alpha:0.1".parse::<Skip>().unwrap(), Skip::Alpha(0.1));
        assert_eq!("alpha(0.3)".parse::<Skip>().unwrap(), Skip::Alpha(0.3));
        assert!("alpha:1.0".parse::<Skip>().is_err());
        assert_eq!("pc".parse::<Skip>().unwrap(), Skip::Pc);
    }
}
