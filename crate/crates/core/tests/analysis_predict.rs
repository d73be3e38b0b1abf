use gntk::analysis::{block_gap, block_gap_values, clip_percentile, gap_depth_sweep, GraphSource};
use gntk::conv::{build_convolution, ConvKind};
use gntk::dcsbm::{balanced_labels, make_pi, population_adjacency, DcSbmParams, PiMode};
use gntk::kernel::{KernelMatrix, KernelMeta, Source};
use gntk::ntk::{Activation, NtkConfig, Skip};
use gntk::population::{pop_ntk_depth, pop_skip_limit, PopulationParams};
use gntk::predict::{accuracy, argmax_rows, kernel_regression_predict, kernel_regression_scores, SplitSpec};
use gntk::{Error, Mat};

fn wrap(m: Mat<f64>) -> KernelMatrix<f64> {
    KernelMatrix::new(m, KernelMeta { conv: None, config: NtkConfig::linear(1), source: Source::Exact })
}

fn block_kernel(labels: &[usize]) -> Mat<f64> {
    let n = labels.len();
    Mat::from_fn(n, n, |i, j| if labels[i] == labels[j] { 1.0 } else { 0.0 })
}

fn uniform(n: usize, p: f64, q: f64) -> DcSbmParams<f64> {
    DcSbmParams::new(2, p, q, vec![1.0 / n as f64; n], balanced_labels(n, 2)).unwrap()
}

#[test]
fn block_identity_and_constant_gaps() {
    let labels = balanced_labels(10, 2);
    let r = block_gap(&wrap(block_kernel(&labels)), &labels).unwrap();
    assert_eq!(r.gap, 1.0);
    assert_eq!(r.blocks, vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
    let c = block_gap(&wrap(Mat::from_element(10, 10, 3.5)), &labels).unwrap();
    assert_eq!(c.gap, 0.0);
}

#[test]
fn diagonal_is_excluded() {
    let labels = balanced_labels(6, 2);
    let mut k = block_kernel(&labels);
    for i in 0..6 {
        k[(i, i)] = 100.0;
    }
    assert_eq!(block_gap(&wrap(k), &labels).unwrap().gap, 1.0);
}

#[test]
fn empty_or_singleton_class_is_rejected() {
    let k = wrap(Mat::identity(4, 4));
    assert!(matches!(block_gap(&k, &[0, 0, 0, 2]), Err(Error::Param(_))));
    assert!(matches!(block_gap(&k, &[0, 0, 1]), Err(Error::Dimension(_))));
}

#[test]
fn population_row_gap_at_depth_one() {
    let n = 200;
    let m = uniform(n, 0.8, 0.1);
    let s = build_convolution(&population_adjacency(&m), ConvKind::Row).unwrap();
    let k = gntk::ntk::ntk_linear_closed(&s, 1).unwrap();
    let gap = block_gap(&k, m.labels()).unwrap().gap;
    let pp = |same| PopulationParams::<f64>::uniform(n, 2, 0.8, 0.1, same);
    let want = pop_ntk_depth(&pp(true), ConvKind::Row, 1).unwrap() - pop_ntk_depth(&pp(false), ConvKind::Row, 1).unwrap();
    assert!((gap - want).abs() < 1e-12 * want, "{gap} vs {want}");
}

#[test]
fn population_sweep_matches_closed_form_differences() {
    let n = 100;
    let m = DcSbmParams::<f64>::new(2, 0.8, 0.1, make_pi(n, 2, PiMode::BalancedGamma, 3).unwrap(), balanced_labels(n, 2)).unwrap();
    let depths: Vec<usize> = (1..=10).collect();
    let src = GraphSource::Population(m.clone());
    let graph = GraphSource::Graph { graph: population_adjacency(&m), features: None };
    for kind in ConvKind::ALL {
        let pop = gap_depth_sweep(&src, kind, &NtkConfig::linear(1), &depths).unwrap();
        let closed = gap_depth_sweep(&graph, kind, &NtkConfig::linear(1), &depths).unwrap();
        for (a, b) in pop.iter().zip(&closed) {
            assert_eq!(a.depth, b.depth);
            assert!((a.gap - b.gap).abs() < 1e-8 * b.gap.abs() + 1e-15, "{kind} d={}", a.depth);
        }
    }
}

#[test]
fn population_gaps_decrease_and_row_beats_sym() {
    let n = 1000;
    let m = DcSbmParams::new(2, 0.8, 0.1, make_pi(n, 2, PiMode::BalancedGamma, 0).unwrap(), balanced_labels(n, 2)).unwrap();
    let src = GraphSource::Population(m);
    let depths: Vec<usize> = (1..=10).collect();
    let mut gaps = Vec::new();
    for kind in ConvKind::ALL {
        let g: Vec<f64> = gap_depth_sweep(&src, kind, &NtkConfig::linear(1), &depths).unwrap().iter().map(|r| r.gap).collect();
        assert!(g.windows(2).all(|w| w[1] < w[0] + 1e-12 * w[0].abs()), "{kind}: {g:?}");
        assert!(g.windows(2).all(|w| w[1] < w[0]), "{kind}: {g:?}");
        gaps.push(g);
    }
    let (sym, row) = (&gaps[0], &gaps[1]);
    assert_eq!(ConvKind::ALL[0], ConvKind::Sym);
    assert_eq!(ConvKind::ALL[1], ConvKind::Row);
    for d in 0..10 {
        assert!(row[d] > sym[d], "d={}: row {} sym {}", d + 1, row[d], sym[d]);
    }
}

#[test]
fn equal_probabilities_give_no_gap() {
    let src = GraphSource::Population(uniform(60, 0.4, 0.4));
    for kind in ConvKind::ALL {
        for r in gap_depth_sweep(&src, kind, &NtkConfig::linear(1), &[1, 2, 5, 10]).unwrap() {
            assert!(r.gap.abs() < 1e-10, "{kind} d={}", r.depth);
        }
    }
}

#[test]
fn skip_pc_sweep_reaches_limit() {
    let n = 200;
    let m = uniform(n, 0.8, 0.1);
    let src = GraphSource::Graph { graph: population_adjacency(&m), features: None };
    let cfg = NtkConfig::linear(1).with_skip(Skip::Pc, Activation::Linear);
    for kind in [ConvKind::Sym, ConvKind::Row] {
        let rep = gap_depth_sweep(&src, kind, &cfg, &[1, 8, 64]).unwrap();
        let pp = |same| PopulationParams::<f64>::uniform(n, 2, 0.8, 0.1, same);
        let lim = pop_skip_limit(&pp(true), kind, Skip::Pc).unwrap() - pop_skip_limit(&pp(false), kind, Skip::Pc).unwrap();
        let g64 = rep[2].gap;
        assert!(((g64 - lim) / lim).abs() < 0.1, "{kind}: {g64} vs {lim}");
    }
}

#[test]
fn sweep_rejects_unsorted_depths_and_population_skip() {
    let src = GraphSource::Population(uniform(10, 0.8, 0.1));
    assert!(gap_depth_sweep(&src, ConvKind::Sym, &NtkConfig::linear(1), &[2, 1]).is_err());
    assert!(gap_depth_sweep(&src, ConvKind::Sym, &NtkConfig::linear(1), &[]).is_err());
    let cfg = NtkConfig::linear(1).with_skip(Skip::Pc, Activation::Linear);
    assert!(matches!(gap_depth_sweep(&src, ConvKind::Sym, &cfg, &[1]), Err(Error::NotImplemented(_))));
}

#[test]
fn clip_examples() {
    let m = wrap(Mat::from_fn(4, 4, |i, j| (4 * i + j + 1) as f64));
    let c = clip_percentile(&m, 25.0, 75.0).unwrap().values;
    assert_eq!(c.min(), 4.75);
    assert_eq!(c.max(), 12.25);
    assert_eq!(c[(1, 1)], 6.0);
    assert_eq!(clip_percentile(&m, 0.0, 100.0).unwrap().values, m.values);
    let k = wrap(Mat::from_element(3, 3, 2.0));
    assert_eq!(clip_percentile(&k, 30.0, 70.0).unwrap().values, k.values);
    assert!(clip_percentile(&m, 70.0, 30.0).is_err());
}

#[test]
fn identity_kernel_predicts_class_zero() {
    let labels = vec![1, 0, 1, 1, 0, 1];
    let split = SplitSpec::<f64>::new(vec![0, 1, 2], vec![3, 4, 5], &labels, 2).unwrap();
    let scores = kernel_regression_scores(&Mat::identity(6, 6), &split, Some(0.0)).unwrap();
    assert!(scores.iter().all(|&v| v == 0.0));
    assert_eq!(kernel_regression_predict(&Mat::identity(6, 6), &split, Some(0.0)).unwrap(), vec![0, 0, 0]);
}

#[test]
fn block_kernel_classifies_perfectly() {
    let labels: Vec<usize> = (0..20).map(|i| i % 2).collect();
    let k = block_kernel(&labels);
    let split = SplitSpec::<f64>::first_m(&labels, 2, 6).unwrap();
    let pred = kernel_regression_predict(&k, &split, None).unwrap();
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    assert_eq!(accuracy(&pred, &truth).unwrap(), 1.0);
}

#[test]
fn singular_system_suggests_ridge() {
    let labels: Vec<usize> = (0..8).map(|i| i % 2).collect();
    let split = SplitSpec::<f64>::first_m(&labels, 2, 4).unwrap();
    match kernel_regression_scores(&block_kernel(&labels), &split, Some(0.0)) {
        Err(Error::Singular(msg)) => assert!(msg.contains("ridge")),
        other => panic!("expected a singular-system error, got {other:?}"),
    }
}

fn sampled_kernel(seed: u64) -> (Mat<f64>, Vec<usize>) {
    let n = 120;
    let labels = balanced_labels(n, 2);
    let m = DcSbmParams::new(2, 0.8, 0.1, make_pi(n, 2, PiMode::Unif01, seed).unwrap(), labels.clone()).unwrap();
    let g = gntk::dcsbm::sample_graph(&m.rescaled_for_sampling(), seed).with_self_loops();
    let s = build_convolution(&g, ConvKind::Row).unwrap();
    (gntk::ntk::ntk_linear_closed(&s, 2).unwrap().values, labels)
}

#[test]
fn predictions_survive_positive_rescaling() {
    let (k, labels) = sampled_kernel(1);
    let split = SplitSpec::<f64>::random(&labels, 2, 0.2, 4).unwrap();
    let base = kernel_regression_predict(&k, &split, Some(1e-12)).unwrap();
    for c in [1e-3, 7.0, 1e4] {
        assert_eq!(kernel_regression_predict(&(&k * c), &split, Some(1e-12 * c)).unwrap(), base);
    }
}

#[test]
fn permuting_classes_permutes_predictions() {
    let (k, labels) = sampled_kernel(2);
    let swapped: Vec<usize> = labels.iter().map(|&l| 1 - l).collect();
    let sa = SplitSpec::random(&labels, 2, 0.2, 9).unwrap();
    let sb = SplitSpec::random(&swapped, 2, 0.2, 9).unwrap();
    let a = kernel_regression_scores(&k, &sa, None).unwrap();
    let b = kernel_regression_scores(&k, &sb, None).unwrap();
    assert_eq!(a.column(0), b.column(1));
    assert_eq!(a.column(1), b.column(0));
    let (pa, pb) = (argmax_rows(&a), argmax_rows(&b));
    // Isolated test nodes score 0 for every class and fall to the tie-break.
    let mut untied = 0;
    for r in 0..a.nrows() {
        if a[(r, 0)] != a[(r, 1)] {
            assert_eq!(pb[r], 1 - pa[r]);
            untied += 1;
        } else {
            assert_eq!((pa[r], pb[r]), (0, 0));
        }
    }
    assert!(untied > a.nrows() / 2);
}

#[test]
fn accuracy_examples() {
    assert_eq!(accuracy(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
    assert_eq!(accuracy(&[0, 0], &[1, 1]).unwrap(), 0.0);
    assert_eq!(accuracy(&[0, 1, 0, 1], &[0, 1, 1, 0]).unwrap(), 0.5);
    assert!(accuracy(&[0], &[0, 1]).is_err());
}

#[test]
fn split_validation() {
    let labels = vec![0, 1, 0, 1];
    assert!(SplitSpec::<f64>::new(vec![0, 1], vec![1, 2], &labels, 2).is_err());
    assert!(SplitSpec::<f64>::new(vec![0, 9], vec![], &labels, 2).is_err());
    let s = SplitSpec::<f64>::random(&balanced_labels(100, 2), 2, 0.1, 3).unwrap();
    assert_eq!((s.train.len(), s.test.len()), (10, 90));
    assert!(s.y.row_iter().all(|r| r.sum() == 1.0));
    let t = SplitSpec::<f64>::random(&balanced_labels(100, 2), 2, 0.1, 3).unwrap();
    assert_eq!(s.train, t.train);
}

#[test]
fn block_gap_values_depth_is_carried() {
    let labels = balanced_labels(4, 2);
    assert_eq!(block_gap_values(&Mat::<f64>::identity(4, 4), &labels, 7).unwrap().depth, 7);
}
