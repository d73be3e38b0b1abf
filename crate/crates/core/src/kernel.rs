//! Kernel matrices with provenance metadata and the symmetric/PSD checks.

use serde::{Deserialize, Serialize};

use crate::conv::ConvKind;
use crate::linalg;
use crate::ntk::NtkConfig;
use crate::{Error, Mat, Real, Result};

pub const SYMMETRY_TOL: f64 = 1e-10;
pub const PSD_REL_TOL: f64 = 1e-8;

/// How a kernel was produced.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    /// Layer recursion with the Hadamard assembly.
    Exact,
    /// Linear closed path via matrix powers.
    Closed,
    /// Population closed form evaluated entrywise.
    Population,
    /// Monte-Carlo average over finite-width networks.
    Empirical,
    /// Layer recursion with gradients propagated through the convolution.
    Propagated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelMeta {
    pub conv: Option<ConvKind>,
    pub config: NtkConfig,
    pub source: Source,
}

#[derive(Clone, Debug)]
pub struct KernelMatrix<T: Real> {
    pub values: Mat<T>,
    pub meta: KernelMeta,
}

/// Outcome of [`KernelMatrix::psd_check`].
#[derive(Copy, Clone, Debug)]
pub struct PsdReport {
    pub min_eigenvalue: f64,
    /// `-1e-8 * trace / n`
    pub threshold: f64,
}

impl PsdReport {
    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= self.threshold
    }
}

impl<T: Real> KernelMatrix<T> {
    pub fn new(values: Mat<T>, meta: KernelMeta) -> Self {
        Self { values, meta }
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn with_conv(mut self, conv: ConvKind) -> Self {
        self.meta.conv = Some(conv);
        self
    }

    pub fn asymmetry(&self) -> f64 {
        linalg::asymmetry(&self.values).as_f64()
    }

    pub fn psd_check(&self) -> PsdReport {
        let n = self.n().max(1);
        let trace = self.values.trace().as_f64();
        PsdReport {
            min_eigenvalue: linalg::min_eigenvalue(&self.values).as_f64(),
            threshold: -PSD_REL_TOL * trace / n as f64,
        }
    }

    /// Errors unless the kernel is symmetric within 1e-10 and PSD within `1e-8 * trace / n`.
    pub fn validate(&self) -> Result<()> {
        let asym = self.asymmetry();
        if asym.is_nan() || asym > SYMMETRY_TOL {
            return Err(Error::Format(format!("kernel asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}")));
        }
        let psd = self.psd_check();
        if !psd.passed() {
            return Err(Error::Format(format!(
                "kernel min eigenvalue {:e} below {:e}",
                psd.min_eigenvalue, psd.threshold
            )));
        }
        Ok(())
    }
}
