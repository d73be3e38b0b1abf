use gntk::conv::{build_convolution, ConvKind};
use gntk::dcsbm::{balanced_labels, make_pi, population_adjacency, sample_graph, DcSbmParams, Graph, PiMode};
use gntk::{Error, Mat};

fn uniform_model(n: usize, p: f64, q: f64) -> DcSbmParams<f64> {
    DcSbmParams::new(2, p, q, vec![1.0 / n as f64; n], balanced_labels(n, 2)).unwrap()
}

#[test]
fn equal_probabilities_give_rank_one_population() {
    let pi: Vec<f64> = make_pi(6, 2, PiMode::Unif01, 4).unwrap();
    let m = DcSbmParams::new(2, 0.5, 0.5, pi.clone(), balanced_labels(6, 2)).unwrap();
    let a = population_adjacency(&m);
    let v = gntk::Vector::from_vec(pi);
    let want = &v * v.transpose() * 0.5;
    assert!((a.adjacency() - want).amax() < 1e-16);
}

#[test]
fn uniform_population_rows_sum_equally() {
    let n = 1000;
    let a = population_adjacency(&uniform_model(n, 0.8, 0.1));
    let want = (0.8 + 0.1) / (2.0 * n as f64);
    for d in a.degrees() {
        assert!((d - want).abs() < 1e-15);
    }
}

#[test]
fn population_matches_rank_two_form() {
    let n = 40;
    let pi: Vec<f64> = make_pi(n, 2, PiMode::Unif01, 9).unwrap();
    let labels = balanced_labels(n, 2);
    let (p, q) = (0.8, 0.1);
    let m = DcSbmParams::new(2, p, q, pi.clone(), labels.clone()).unwrap();
    let a = population_adjacency(&m);
    let v = gntk::Vector::from_vec(pi.clone());
    let hat = gntk::Vector::from_fn(n, |i, _| if labels[i] == 0 { pi[i] } else { -pi[i] });
    let want = &v * v.transpose() * ((p + q) / 2.0) + &hat * hat.transpose() * ((p - q) / 2.0);
    assert!((a.adjacency() - want).amax() < 1e-12);
}

#[test]
fn zero_probabilities_sample_empty_graph() {
    let m = DcSbmParams::unnormalized(2, 0.0, 0.0, vec![0.7; 10], balanced_labels(10, 2)).unwrap();
    for seed in 0..3 {
        assert_eq!(sample_graph(&m, seed).edge_count(), 0);
    }
}

#[test]
fn certain_edges_are_all_present() {
    let m = DcSbmParams::unnormalized(2, 1.0, 1.0, vec![1.0; 8], balanced_labels(8, 2)).unwrap();
    assert_eq!(sample_graph(&m, 1).edge_count(), 8 * 7 / 2);
    // sum-to-one construction rejects the same corrections
    assert!(DcSbmParams::new(2, 1.0, 1.0, vec![1.0; 8], balanced_labels(8, 2)).is_err());
}

#[test]
fn sampled_graph_is_simple() {
    let m = uniform_model(50, 0.8, 0.1).rescaled_for_sampling();
    let g = sample_graph(&m, 3);
    let a = g.adjacency();
    for i in 0..50 {
        assert_eq!(a[(i, i)], 0.0);
        for j in 0..50 {
            assert!(a[(i, j)] == 0.0 || a[(i, j)] == 1.0);
            assert_eq!(a[(i, j)], a[(j, i)]);
        }
    }
}

#[test]
fn in_class_edge_frequency_within_three_standard_errors() {
    // Uniform corrections rescaled to 1: in-class probability p itself.
    let n = 2000;
    let m = uniform_model(n, 0.8, 0.1).rescaled_for_sampling();
    let half = n / 2;
    let pairs = (half * (half - 1) / 2) as f64 * 2.0;
    let mut total = 0.0;
    let seeds = 10;
    for seed in 0..seeds {
        let g = sample_graph(&m, seed);
        let a = g.adjacency();
        let mut hits = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                if (i < half) == (j < half) {
                    hits += a[(i, j)];
                }
            }
        }
        total += hits;
    }
    let freq = total / (pairs * seeds as f64);
    let se = (0.8 * 0.2 / (pairs * seeds as f64)).sqrt();
    assert!((freq - 0.8).abs() < 3.0 * se, "freq {freq}, se {se}");
}

#[test]
fn pi_modes() {
    let u: Vec<f64> = make_pi(4, 2, PiMode::Uniform, 0).unwrap();
    assert_eq!(u, vec![0.25; 4]);
    let labels = balanced_labels(1000, 2);
    let r: Vec<f64> = make_pi(1000, 2, PiMode::Unif01, 17).unwrap();
    for c in 0..2 {
        let s: f64 = r.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(v, _)| v).sum();
        assert!((s - 0.5).abs() < 1e-12);
    }
    let b: Vec<f64> = make_pi(100, 2, PiMode::BalancedGamma, 2).unwrap();
    let sq = gntk::dcsbm::class_sq_sums(&b, &balanced_labels(100, 2), 2);
    assert!((sq[0] - sq[1]).abs() < 1e-10);
    assert!(make_pi::<f64>(5, 2, PiMode::Unif01, 0).is_err());
}

#[test]
fn unit_degree_convolutions() {
    let a = Mat::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
    let g = Graph::new(a.clone(), None).unwrap();
    for kind in [ConvKind::Sym, ConvKind::Row, ConvKind::Col] {
        assert_eq!(build_convolution(&g, kind).unwrap(), a);
    }
    assert_eq!(build_convolution(&g, ConvKind::Adj).unwrap(), a * 0.5);
}

#[test]
fn isolated_node_reported() {
    let a = Mat::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let g = Graph::new(a, None).unwrap();
    for kind in [ConvKind::Sym, ConvKind::Row, ConvKind::Col] {
        assert!(matches!(build_convolution(&g, kind), Err(Error::IsolatedNode { node: 2 })));
    }
    assert!(build_convolution(&g, ConvKind::Adj).is_ok());
}

#[test]
fn normalizations_on_population_graph() {
    let n = 30;
    let pi: Vec<f64> = make_pi(n, 2, PiMode::Unif01, 5).unwrap();
    let m = DcSbmParams::new(2, 0.8, 0.1, pi.clone(), balanced_labels(n, 2)).unwrap();
    let g = population_adjacency(&m);
    let a = g.adjacency();
    let deg = g.degrees();
    let row = build_convolution(&g, ConvKind::Row).unwrap();
    let col = build_convolution(&g, ConvKind::Col).unwrap();
    let sym = build_convolution(&g, ConvKind::Sym).unwrap();
    for i in 0..n {
        assert!((row.row(i).sum() - 1.0).abs() < 1e-12);
        assert!((col.column(i).sum() - 1.0).abs() < 1e-12);
        for j in 0..n {
            let direct = a[(i, j)] / (deg[i] * deg[j]).sqrt();
            assert!((sym[(i, j)] - direct).abs() < 1e-12);
            assert_eq!(sym[(i, j)], sym[(j, i)]);
        }
    }
}

#[test]
fn population_sym_has_singular_values_one_and_r() {
    let n = 20;
    let (p, q) = (0.8, 0.1);
    let r = (p - q) / (p + q);
    let labels = balanced_labels(n, 2);
    let pi: Vec<f64> = make_pi(n, 2, PiMode::Unif01, 8).unwrap();
    let m = DcSbmParams::new(2, p, q, pi.clone(), labels.clone()).unwrap();
    let sym = build_convolution(&population_adjacency(&m), ConvKind::Sym).unwrap();
    // U = [sqrt(pi), s * sqrt(pi)] scaled to unit columns (each class sums pi to 1/2).
    let u0 = gntk::Vector::from_fn(n, |i, _| (2.0 * pi[i]).sqrt() / 2f64.sqrt());
    let u1 = gntk::Vector::from_fn(n, |i, _| if labels[i] == 0 { 1.0 } else { -1.0 } * pi[i].sqrt());
    let want = &u0 * u0.transpose() + &u1 * u1.transpose() * r;
    assert!((sym - want).amax() < 1e-10);
}
