//! Graph convolution operators built from an adjacency matrix.

use serde::{Deserialize, Serialize};

use crate::dcsbm::Graph;
use crate::{Error, Mat, Real, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvKind {
    /// `D^{-1/2} A D^{-1/2}`
    Sym,
    /// `D^{-1} A`
    Row,
    /// `A D^{-1}`
    Col,
    /// `A / n`
    Adj,
}

impl ConvKind {
    pub const ALL: [ConvKind; 4] = [ConvKind::Sym, ConvKind::Row, ConvKind::Col, ConvKind::Adj];

    pub fn name(self) -> &'static str {
        match self {
            ConvKind::Sym => "sym",
            ConvKind::Row => "row",
            ConvKind::Col => "col",
            ConvKind::Adj => "adj",
        }
    }
}

impl std::fmt::Display for ConvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ConvKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sym" => Ok(ConvKind::Sym),
            "row" => Ok(ConvKind::Row),
            "col" => Ok(ConvKind::Col),
            "adj" => Ok(ConvKind::Adj),
            _ => Err(Error::param(format!("unknown convolution '{s}' (sym|row|col|adj)"))),
        }
    }
}

/// Builds `S` for `kind`. Degrees are weighted row sums; an isolated node is an error for the
/// normalized kinds.
pub fn build_convolution<T: Real>(g: &Graph<T>, kind: ConvKind) -> Result<Mat<T>> {
    let a = g.adjacency();
    let n = g.n();
    if kind == ConvKind::Adj {
        return Ok(a / T::from_count(n));
    }
    let deg = g.degrees();
    if let Some(node) = deg.iter().position(|&d| d <= T::zero()) {
        return Err(Error::IsolatedNode { node });
    }
    let s = match kind {
        ConvKind::Sym => {
            let inv: Vec<T> = deg.iter().map(|d| T::one() / d.sqrt()).collect();
            Mat::from_fn(n, n, |i, j| a[(i, j)] * (inv[i] * inv[j]))
        }
        ConvKind::Row => Mat::from_fn(n, n, |i, j| a[(i, j)] / deg[i]),
        ConvKind::Col => Mat::from_fn(n, n, |i, j| a[(i, j)] / deg[j]),
        ConvKind::Adj => unreachable!(),
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_degree_graph_is_fixed() {
        let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let g = Graph::new(a.clone(), None).unwrap();
        for kind in [ConvKind::Sym, ConvKind::Row, ConvKind::Col] {
            assert_eq!(build_convolution(&g, kind).unwrap(), a);
        }
        let adj = build_convolution(&g, ConvKind::Adj).unwrap();
        assert_eq!(adj, Mat::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]));
    }

    #[test]
    fn isolated_node_is_named() {
        let a = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let g = Graph::new(a, None).unwrap();
        match build_convolution(&g, ConvKind::Row) {
            Err(Error::IsolatedNode { node }) => assert_eq!(node, 2),
            other => panic!("expected isolated node error, got {other:?}"),
        }
        assert!(build_convolution(&g, ConvKind::Adj).is_ok());
    }
}
