//! Block-gap statistics, depth sweeps and percentile clipping for heatmaps.

use rayon::prelude::*;
use serde::Serialize;

use crate::conv::{build_convolution, ConvKind};
use crate::dcsbm::{DcSbmParams, Graph};
use crate::kernel::KernelMatrix;
use crate::ntk::{ntk, ntk_linear_closed, ntk_skip_linear_closed, Activation, NtkConfig, Skip};
use crate::population::population_kernel;
use crate::{Error, Mat, Real, Result};

/// Class-block summary of one kernel.
#[derive(Clone, Debug, Serialize)]
pub struct GapReport<T: Real + Serialize> {
    pub depth: usize,
    /// Mean off-diagonal in-class value for each class.
    pub class_in_means: Vec<T>,
    /// Mean of the diagonal block means.
    pub in_mean: T,
    /// Mean of the off-diagonal block means.
    pub out_mean: T,
    pub gap: T,
    /// `K x K` block means, `blocks[a][b]` over `i` in class `a`, `j` in class `b`, `i != j`.
    pub blocks: Vec<Vec<T>>,
}

/// Block means of `values` with the diagonal entries left out.
pub fn block_gap_values<T: Real + Serialize>(values: &Mat<T>, labels: &[usize], depth: usize) -> Result<GapReport<T>> {
    let n = values.nrows();
    if values.ncols() != n || labels.len() != n {
        return Err(Error::dim(format!(
            "kernel is {}x{}, {} labels",
            n,
            values.ncols(),
            labels.len()
        )));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in labels {
        sizes[c] += 1;
    }
    if let Some(c) = sizes.iter().position(|&s| s < 2) {
        return Err(Error::param(format!(
            "class {c} has {} nodes; every class needs at least 2",
            sizes[c]
        )));
    }
    let mut sums = vec![vec![T::zero(); k]; k];
    for j in 0..n {
        let cj = labels[j];
        for i in 0..n {
            if i != j {
                sums[labels[i]][cj] += values[(i, j)];
            }
        }
    }
    let mut blocks = vec![vec![T::zero(); k]; k];
    for a in 0..k {
        for b in 0..k {
            let count = if a == b { sizes[a] * (sizes[a] - 1) } else { sizes[a] * sizes[b] };
            blocks[a][b] = sums[a][b] / T::from_count(count);
        }
    }
    // Exact symmetry of the report even when the kernel carries rounding asymmetry.
    for a in 0..k {
        for b in 0..a {
            let m = (blocks[a][b] + blocks[b][a]) * T::lit(0.5);
            blocks[a][b] = m;
            blocks[b][a] = m;
        }
    }
    let class_in_means: Vec<T> = (0..k).map(|a| blocks[a][a]).collect();
    let in_mean = class_in_means.iter().fold(T::zero(), |s, &v| s + v) / T::from_count(k);
    let mut out = T::zero();
    for a in 0..k {
        for b in 0..k {
            if a != b {
                out += blocks[a][b];
            }
        }
    }
    let out_mean = if k > 1 { out / T::from_count(k * (k - 1)) } else { T::zero() };
    Ok(GapReport { depth, class_in_means, in_mean, out_mean, gap: in_mean - out_mean, blocks })
}

/// [`block_gap_values`] on a kernel, taking the depth from its metadata.
pub fn block_gap<T: Real + Serialize>(kernel: &KernelMatrix<T>, labels: &[usize]) -> Result<GapReport<T>> {
    block_gap_values(&kernel.values, labels, kernel.meta.config.depth)
}

/// Where the kernels of a sweep come from.
#[derive(Clone, Debug)]
pub enum GraphSource<T: Real> {
    /// A concrete graph; features default to the identity.
    Graph { graph: Graph<T>, features: Option<Mat<T>> },
    /// Closed-form population kernel of a block model (vanilla linear networks only).
    Population(DcSbmParams<T>),
}

impl<T: Real> GraphSource<T> {
    fn labels(&self) -> Result<Vec<usize>> {
        match self {
            GraphSource::Graph { graph, .. } => graph
                .labels()
                .map(|l| l.to_vec())
                .ok_or_else(|| Error::param("sweep graph has no labels")),
            GraphSource::Population(m) => Ok(m.labels().to_vec()),
        }
    }
}

/// Kernel of `cfg` on the source, recomputed from scratch.
pub fn source_kernel<T: Real>(source: &GraphSource<T>, kind: ConvKind, cfg: &NtkConfig) -> Result<KernelMatrix<T>> {
    cfg.validate()?;
    match source {
        GraphSource::Population(model) => {
            if cfg.skip != Skip::None || cfg.activation != Activation::Linear {
                return Err(Error::NotImplemented(
                    "population closed forms cover vanilla linear networks; use a graph source".into(),
                ));
            }
            population_kernel(model, kind, cfg.depth)
        }
        GraphSource::Graph { graph, features } => {
            let s = build_convolution(graph, kind)?;
            let linear_identity = cfg.activation == Activation::Linear && features.is_none();
            let k = if linear_identity {
                match cfg.skip {
                    Skip::None => ntk_linear_closed(&s, cfg.depth)?,
                    skip if cfg.skip_activation == Activation::Linear => ntk_skip_linear_closed(&s, cfg.depth, skip)?,
                    _ => ntk(&s, &Mat::identity(s.nrows(), s.nrows()), cfg)?,
                }
            } else {
                let x = features.clone().unwrap_or_else(|| Mat::identity(s.nrows(), s.nrows()));
                ntk(&s, &x, cfg)?
            };
            Ok(k.with_conv(kind))
        }
    }
}

/// One [`GapReport`] per depth; depths are evaluated in parallel and returned in order.
pub fn gap_depth_sweep<T: Real + Serialize>(
    source: &GraphSource<T>,
    kind: ConvKind,
    cfg_base: &NtkConfig,
    depths: &[usize],
) -> Result<Vec<GapReport<T>>> {
    if depths.is_empty() {
        return Err(Error::param("depth list is empty"));
    }
    if depths.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("depths must be strictly increasing"));
    }
    let labels = source.labels()?;
    depths
        .par_iter()
        .map(|&d| {
            let mut cfg = *cfg_base;
            cfg.depth = d;
            let k = source_kernel(source, kind, &cfg)?;
            block_gap(&k, &labels)
        })
        .collect()
}

/// Value at percentile `pct` of sorted data, interpolating linearly between order statistics.
pub fn percentile<T: Real>(sorted: &[T], pct: f64) -> T {
    let last = sorted.len() - 1;
    let mut pos = pct / 100.0 * last as f64;
    // Ranks such as 100 * j / last land on the order statistic itself.
    if (pos - pos.round()).abs() < 1e-9 {
        pos = pos.round();
    }
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(last);
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Clamps every entry into `[P_lo, P_hi]`, percentiles taken over all `n^2` entries.
pub fn clip_percentile<T: Real>(kernel: &KernelMatrix<T>, lo: f64, hi: f64) -> Result<KernelMatrix<T>> {
    if !(0.0..=100.0).contains(&lo) || !(0.0..=100.0).contains(&hi) || lo >= hi {
        return Err(Error::param(format!("need 0 <= lo < hi <= 100, got {lo}, {hi}")));
    }
    if kernel.values.is_empty() {
        return Ok(kernel.clone());
    }
    let mut sorted: Vec<T> = kernel.values.iter().copied().collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let (a, b) = (percentile(&sorted, lo), percentile(&sorted, hi));
    let values = kernel.values.map(|v| if v < a { a } else if v > b { b } else { v });
    Ok(KernelMatrix::new(values, kernel.meta.clone()))
}
