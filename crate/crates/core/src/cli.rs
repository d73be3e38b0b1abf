//! Command-line driver. `run_command` returns the process exit status:
//! 0 success, 1 failed validation or computation, 2 usage error, 3 I/O or parse error.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::{gap_depth_sweep, GraphSource};
use crate::conv::{build_convolution, ConvKind};
use crate::dcsbm::{
    balanced_labels, make_pi, population_adjacency, sample_graph, DcSbmParams, Graph, PiMode,
};
use crate::io::{self, Dataset, MatrixFormat};
use crate::kernel::KernelMatrix;
use crate::ntk::{
    self, empirical_ntk, ntk_linear_closed, ntk_propagated, ntk_skip_linear_closed, Activation,
    EmpiricalOptions, NtkConfig, Skip,
};
use crate::population::{pop_ntk_depth, pop_ntk_limit, pop_skip_limit, PopulationParams};
use crate::predict::{accuracy, kernel_regression_predict, SplitSpec};
use crate::{Error, Mat, Result};

#[derive(Parser, Debug)]
#[command(name = "gntk", version, about = "Graph neural tangent kernels on degree-corrected block models")]
pub struct Cli {
    /// Master seed; graph, weight and split randomness use named sub-streams of it.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample a DC-SBM graph and write edges.txt, labels.txt and pi.txt.
    Generate(GenerateArgs),
    /// Compute a kernel for a dataset and write it with a metadata sidecar.
    Ntk(NtkArgs),
    /// Closed-form population kernel values for a same-class and a cross-class pair.
    Population(PopulationArgs),
    /// Block gap against depth, one CSV row per (conv, depth).
    Sweep(SweepArgs),
    /// Kernel-regression node classification accuracy.
    Classify(ClassifyArgs),
    /// Oracle-equivalence checks; exits 1 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// In-class edge probability.
    #[arg(long, default_value_t = 0.8)]
    pub p: f64,
    /// Cross-class edge probability.
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Degree corrections: uniform, unif01 or balanced_gamma.
    #[arg(long, default_value = "uniform")]
    pub pi: PiMode,
}

#[derive(Args, Debug, Clone)]
pub struct NetArgs {
    /// Number of diffusion layers.
    #[arg(long, default_value_t = 2)]
    pub depth: usize,
    /// linear or relu.
    #[arg(long, default_value = "linear")]
    pub activation: Activation,
    /// none, pc or alpha:<value>.
    #[arg(long, default_value = "none")]
    pub skip: Skip,
    /// Activation applied to the transformed skip input.
    #[arg(long, default_value = "linear")]
    pub skip_activation: Activation,
}

impl NetArgs {
    fn config(&self) -> NtkConfig {
        NtkConfig::new(self.depth, self.activation).with_skip(self.skip, self.skip_activation)
    }
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Directory holding edges.txt, labels.txt and optionally features.txt.
    #[arg(long, conflicts_with_all = ["edges", "labels"])]
    pub dataset: Option<PathBuf>,
    /// Edge list file.
    #[arg(long, requires = "labels")]
    pub edges: Option<PathBuf>,
    /// Label file.
    #[arg(long, requires = "edges")]
    pub labels: Option<PathBuf>,
    /// Optional feature file; orthonormal features are used without it.
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Add a unit self-loop to every node before normalizing.
    #[arg(long)]
    pub self_loops: bool,
}

impl DataArgs {
    fn given(&self) -> bool {
        self.dataset.is_some() || self.edges.is_some()
    }

    fn load(&self) -> Result<Dataset<f64>> {
        let mut d = match (&self.dataset, &self.edges, &self.labels) {
            (Some(dir), _, _) => {
                let mut d = io::load_dataset_dir(dir)?;
                if let Some(f) = &self.features {
                    d.features = Some(load_features(f, d.n())?);
                }
                d
            }
            (None, Some(e), Some(l)) => io::load_dataset(e, l, self.features.as_deref())?,
            _ => return Err(Error::param("give --dataset or both --edges and --labels")),
        };
        if self.self_loops {
            d.graph = d.graph.with_self_loops();
        }
        Ok(d)
    }
}

fn load_features(path: &Path, n: usize) -> Result<Mat<f64>> {
    let x: Mat<f64> = io::read_features(path)?;
    if x.nrows() != n {
        return Err(Error::dim(format!("{}: {} feature rows for {n} nodes", path.display(), x.nrows())));
    }
    Ok(x)
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Method {
    /// Layer recursion with the Hadamard assembly (closed matrix-power path when linear).
    Exact,
    /// Gradient-consistent recursion.
    Propagated,
    /// Monte-Carlo average over finite-width networks.
    Empirical,
}

#[derive(Args, Debug)]
pub struct NtkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Graph convolution: sym, row, col or adj.
    #[arg(long, default_value = "row")]
    pub conv: ConvKind,
    #[command(flatten)]
    pub net: NetArgs,
    #[arg(long, value_enum, default_value = "exact")]
    pub method: Method,
    /// Hidden width for the empirical method.
    #[arg(long, default_value_t = 1024)]
    pub width: usize,
    /// Weight draws for the empirical method.
    #[arg(long, default_value_t = 16)]
    pub samples: usize,
    /// Output matrix path; the sidecar goes to <out>.meta.json.
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: MatrixFormat,
}

#[derive(Args, Debug)]
pub struct PopulationArgs {
    /// Number of nodes (uniform degree corrections, balanced classes).
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 0.8)]
    pub p: f64,
    #[arg(long, default_value_t = 0.1)]
    pub q: f64,
    /// Comma list of convolutions, or `all`.
    #[arg(long, default_value = "all")]
    pub conv: String,
    /// Depths such as `1..10` or `1,8,64`.
    #[arg(long, default_value = "1..10")]
    pub depths: String,
    /// Report the infinite-depth limit instead of finite depths.
    #[arg(long)]
    pub limit: bool,
    /// Skip variant for the limit (pc or alpha:<value>; sym and row only).
    #[arg(long, default_value = "none")]
    pub skip: Skip,
    /// CSV output; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepSource {
    /// Closed-form population kernel (vanilla linear); other networks use the population graph.
    Population,
    /// A graph sampled from the model.
    Sampled,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma list of convolutions, or `all`.
    #[arg(long, default_value = "all")]
    pub conv: String,
    /// Depths such as `1..10` or `1,8,64`; strictly increasing.
    #[arg(long, default_value = "1..10")]
    pub depths: String,
    #[arg(long, default_value = "linear")]
    pub activation: Activation,
    #[arg(long, default_value = "none")]
    pub skip: Skip,
    #[arg(long, default_value = "linear")]
    pub skip_activation: Activation,
    #[arg(long, value_enum, default_value = "population")]
    pub source: SweepSource,
    /// Output path.
    #[arg(long)]
    pub out: PathBuf,
    /// csv or json.
    #[arg(long, default_value = "csv")]
    pub format: MatrixFormat,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Model for a sampled graph, used when no dataset is given.
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value = "row")]
    pub conv: ConvKind,
    #[command(flatten)]
    pub net: NetArgs,
    /// Fraction of nodes observed, drawn at random.
    #[arg(long, default_value_t = 0.1)]
    pub train_frac: f64,
    /// Observe the first m nodes instead of a random subset.
    #[arg(long)]
    pub first_m: Option<usize>,
    /// Ridge; defaults to 1e-6 * trace / m.
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Predictions CSV (node_id, predicted_class, true_class).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Level {
    /// Closed forms against matrix powers and layer recursions.
    LinearOracle,
    /// Deep finite-depth values against the infinite-depth limits.
    Limits,
    /// Monte-Carlo kernels against the gradient-consistent recursion.
    Empirical,
    All,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub level: Level,
}

/// Derives an independent seed for a named stage.
pub fn sub_seed(seed: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = seed ^ h;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// `1..10`, `1,8,64` or a mix; ranges are inclusive.
pub fn parse_depths(s: &str) -> Result<Vec<usize>> {
    let bad = || Error::param(format!("bad depth list '{s}'"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if a > b {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    if out.is_empty() {
        return Err(bad());
    }
    Ok(out)
}

pub fn parse_convs(s: &str) -> Result<Vec<ConvKind>> {
    if s.trim() == "all" {
        return Ok(ConvKind::ALL.to_vec());
    }
    s.split(',').map(|t| t.trim().parse()).collect()
}

/// Model with balanced labels and the requested corrections (normalized to sum 1).
pub fn build_model(m: &ModelArgs, seed: u64) -> Result<DcSbmParams<f64>> {
    let pi = make_pi(m.n, m.k, m.pi, sub_seed(seed, "pi"))?;
    DcSbmParams::new(m.k, m.p, m.q, pi, balanced_labels(m.n, m.k))
}

/// Bernoulli sample of `model` with corrections rescaled to a unit maximum, plus self-loops.
pub fn sample_with_loops(model: &DcSbmParams<f64>, seed: u64) -> Graph<f64> {
    sample_graph(&model.rescaled_for_sampling(), sub_seed(seed, "graph")).with_self_loops()
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } => 3,
        Error::Param(_) | Error::Dimension(_) => 2,
        _ => 1,
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("GNTK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // A second call in the same process finds the pool already built; that is fine.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    init_threads();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Generate(a) => generate(a, cli.seed),
        Command::Ntk(a) => ntk_cmd(a, cli.seed),
        Command::Population(a) => population_cmd(a),
        Command::Sweep(a) => sweep_cmd(a, cli.seed),
        Command::Classify(a) => classify_cmd(a, cli.seed),
        Command::Validate(a) => Ok(validate_cmd(a.level, cli.seed)),
    }
}

fn generate(a: &GenerateArgs, seed: u64) -> Result<i32> {
    let model = build_model(&a.model, seed)?;
    let g = sample_graph(&model.rescaled_for_sampling(), sub_seed(seed, "graph"));
    io::write_graph(&a.out, &g, Some(model.pi()))?;
    println!("wrote {} nodes, {} edges to {}", g.n(), g.edge_count(), a.out.display());
    Ok(0)
}

fn compute_kernel(
    s: &Mat<f64>,
    x: Option<&Mat<f64>>,
    cfg: &NtkConfig,
    method: Method,
    opts: EmpiricalOptions,
) -> Result<KernelMatrix<f64>> {
    let n = s.nrows();
    let eye = || Mat::identity(n, n);
    match method {
        Method::Exact => {
            let linear = cfg.activation == Activation::Linear && cfg.skip_activation == Activation::Linear;
            match (x, linear, cfg.skip) {
                (None, true, Skip::None) => ntk_linear_closed(s, cfg.depth),
                (None, true, skip @ (Skip::Pc | Skip::Alpha(_))) => ntk_skip_linear_closed(s, cfg.depth, skip),
                (Some(x), _, _) => ntk::ntk(s, x, cfg),
                (None, _, _) => ntk::ntk(s, &eye(), cfg),
            }
        }
        Method::Propagated => ntk_propagated(s, x.cloned().as_ref().unwrap_or(&eye()), cfg),
        Method::Empirical => empirical_ntk(s, x.cloned().as_ref().unwrap_or(&eye()), cfg, opts),
    }
}

fn ntk_cmd(a: &NtkArgs, seed: u64) -> Result<i32> {
    let d = a.data.load()?;
    let cfg = a.net.config();
    let s = build_convolution(&d.graph, a.conv)?;
    let opts = EmpiricalOptions { width: a.width, samples: a.samples, seed: sub_seed(seed, "weights") };
    let k = compute_kernel(&s, d.features.as_ref(), &cfg, a.method, opts)?.with_conv(a.conv);
    io::export_kernel(&k, &a.out, a.format)?;
    println!("wrote {}x{} kernel to {}", k.n(), k.n(), a.out.display());
    Ok(0)
}

fn population_cmd(a: &PopulationArgs) -> Result<i32> {
    let convs = parse_convs(&a.conv)?;
    let depths = if a.limit { Vec::new() } else { parse_depths(&a.depths)? };
    let same = PopulationParams::uniform(a.n, a.k, a.p, a.q, true);
    let cross = PopulationParams::uniform(a.n, a.k, a.p, a.q, false);
    let mut rows = Vec::new();
    for &c in &convs {
        let mut push = |depth: String, s: f64, x: f64| {
            rows.push(vec![c.name().to_string(), depth, io::format_value(s), io::format_value(x), io::format_value(s - x)]);
        };
        if a.limit {
            let (s, x) = match a.skip {
                Skip::None => (pop_ntk_limit(&same, c)?, pop_ntk_limit(&cross, c)?),
                skip => (pop_skip_limit(&same, c, skip)?, pop_skip_limit(&cross, c, skip)?),
            };
            push("inf".into(), s, x);
        } else {
            if a.skip != Skip::None {
                return Err(Error::param("--skip applies to --limit only"));
            }
            for &d in &depths {
                push(d.to_string(), pop_ntk_depth(&same, c, d)?, pop_ntk_depth(&cross, c, d)?);
            }
        }
    }
    let header = ["conv", "depth", "same_class", "cross_class", "gap"];
    match &a.out {
        Some(p) => io::write_table(p, &header, &rows)?,
        None => {
            println!("{}", header.join(","));
            for r in rows {
                println!("{}", r.join(","));
            }
        }
    }
    Ok(0)
}

fn sweep_cmd(a: &SweepArgs, seed: u64) -> Result<i32> {
    let convs = parse_convs(&a.conv)?;
    let depths = parse_depths(&a.depths)?;
    let model = build_model(&a.model, seed)?;
    let cfg = NtkConfig::new(depths[0], a.activation).with_skip(a.skip, a.skip_activation);
    let closed = cfg.activation == Activation::Linear && cfg.skip == Skip::None;
    let source = match a.source {
        SweepSource::Population if closed => GraphSource::Population(model),
        SweepSource::Population => GraphSource::Graph { graph: population_adjacency(&model), features: None },
        SweepSource::Sampled => GraphSource::Graph { graph: sample_with_loops(&model, seed), features: None },
    };
    let mut rows = Vec::new();
    for &c in &convs {
        for r in gap_depth_sweep(&source, c, &cfg, &depths)? {
            rows.push((c, r));
        }
    }
    match a.format {
        MatrixFormat::Csv => io::write_gap_csv(&a.out, &rows)?,
        MatrixFormat::Json => io::write_gap_json(&a.out, &rows)?,
    }
    println!("wrote {} rows to {}", rows.len(), a.out.display());
    Ok(0)
}

fn classify_cmd(a: &ClassifyArgs, seed: u64) -> Result<i32> {
    let (graph, features, labels) = if a.data.given() {
        let d = a.data.load()?;
        (d.graph, d.features, d.labels)
    } else {
        let model = build_model(&a.model, seed)?;
        let labels = model.labels().to_vec();
        (sample_with_loops(&model, seed), None, labels)
    };
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let split = match a.first_m {
        Some(m) => SplitSpec::first_m(&labels, k, m)?,
        None => SplitSpec::random(&labels, k, a.train_frac, sub_seed(seed, "split"))?,
    };
    let s = build_convolution(&graph, a.conv)?;
    let cfg = a.net.config();
    let opts = EmpiricalOptions { width: 1, samples: 1, seed: 0 };
    let kernel = compute_kernel(&s, features.as_ref(), &cfg, Method::Exact, opts)?;
    let pred = kernel_regression_predict(&kernel.values, &split, a.ridge)?;
    let truth: Vec<usize> = split.test.iter().map(|&i| labels[i]).collect();
    let acc = accuracy(&pred, &truth)?;
    println!("accuracy {acc}");
    if let Some(out) = &a.out {
        io::write_predictions(out, &split.test, &pred, &labels)?;
    }
    Ok(0)
}

struct Check {
    name: String,
    passed: bool,
    detail: String,
}

fn check(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Check {
    Check { name: name.into(), passed, detail: detail.into() }
}

fn max_abs_diff(a: &Mat<f64>, b: &Mat<f64>) -> f64 {
    (a - b).amax()
}

/// Linear recursion for PC with identity features: `Sigma_k = sum_{l<=k} S^l S^{lT}`.
fn pc_cumulative(s: &Mat<f64>, depth: usize) -> Mat<f64> {
    let n = s.nrows();
    let sst = s * s.transpose();
    let mut g = Mat::identity(n, n);
    let mut cum = Mat::zeros(n, n);
    let mut sigmas = Vec::new();
    for _ in 0..=depth {
        g = s * &g * s.transpose();
        cum += &g;
        sigmas.push(cum.clone());
    }
    let ones = vec![Mat::from_element(n, n, 1.0); depth];
    ntk::hadamard_assemble(&sst, &sigmas, &ones)
}

fn linear_oracle_checks(seed: u64) -> Result<Vec<Check>> {
    const TOL: f64 = 1e-9;
    let mut out = Vec::new();
    let m = ModelArgs { n: 40, k: 2, p: 0.8, q: 0.1, pi: PiMode::BalancedGamma };
    let model = build_model(&m, seed)?;
    let pop = population_adjacency(&model);
    for c in ConvKind::ALL {
        let s = build_convolution(&pop, c)?;
        let mut worst: f64 = 0.0;
        for d in 1..=6 {
            let k = ntk_linear_closed(&s, d)?;
            for i in 0..model.n() {
                for j in 0..model.n() {
                    let v = pop_ntk_depth(&PopulationParams::for_pair(&model, i, j), c, d)?;
                    worst = worst.max((v - k.values[(i, j)]).abs());
                }
            }
        }
        out.push(check(format!("population closed form = matrix powers [{c}]"), worst < TOL, format!("max err {worst:.3e}")));
    }
    let sampled = sample_with_loops(&build_model(&ModelArgs { n: 30, pi: PiMode::Unif01, ..m }, seed)?, seed);
    let eye = Mat::identity(30, 30);
    for c in ConvKind::ALL {
        let s = build_convolution(&sampled, c)?;
        let mut worst: f64 = 0.0;
        for d in 1..=5 {
            let closed = ntk_linear_closed(&s, d)?;
            let rec = ntk::ntk_vanilla(&s, &eye, &NtkConfig::linear(d))?;
            worst = worst.max(max_abs_diff(&closed.values, &rec.values) / rec.values.amax());
            let cfg = NtkConfig::linear(d).with_skip(Skip::Alpha(0.2), Activation::Linear);
            let closed = ntk_skip_linear_closed(&s, d, Skip::Alpha(0.2))?;
            let rec = ntk::ntk_skip_alpha(&s, &eye, &cfg)?;
            worst = worst.max(max_abs_diff(&closed.values, &rec.values) / rec.values.amax());
            let cfg = NtkConfig::linear(d).with_skip(Skip::Pc, Activation::Linear);
            let rec = ntk::ntk_skip_pc(&s, &eye, &cfg)?;
            worst = worst.max(max_abs_diff(&pc_cumulative(&s, d), &rec.values) / rec.values.amax());
        }
        out.push(check(format!("closed path = layer recursion [{c}]"), worst < TOL, format!("max rel err {worst:.3e}")));
    }
    Ok(out)
}

fn limit_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (p, q) in [(0.8, 0.1), (0.5, 0.3)] {
        for same in [true, false] {
            let pp = PopulationParams::<f64>::uniform(10, 2, p, q, same);
            for c in [ConvKind::Sym, ConvKind::Row, ConvKind::Col] {
                let err = (pop_ntk_depth(&pp, c, 400)? - pop_ntk_limit(&pp, c)?).abs();
                out.push(check(format!("depth 400 -> limit [{c}, p={p}, q={q}, same={same}]"), err < 1e-6, format!("err {err:.3e}")));
            }
            let adj = pop_ntk_depth(&pp, ConvKind::Adj, 20)?.abs();
            out.push(check(format!("adj vanishes [p={p}, q={q}, same={same}]"), adj < 1e-12, format!("value {adj:.3e}")));
        }
    }
    let m = ModelArgs { n: 200, k: 2, p: 0.8, q: 0.1, pi: PiMode::Uniform };
    let model = build_model(&m, 0)?;
    let pop = population_adjacency(&model);
    let labels = model.labels().to_vec();
    for c in [ConvKind::Sym, ConvKind::Row] {
        let s = build_convolution(&pop, c)?;
        for skip in [Skip::Pc, Skip::Alpha(0.1)] {
            let k = ntk_skip_linear_closed(&s, 64, skip)?;
            let gap = crate::analysis::block_gap(&k, &labels)?.gap;
            let same = PopulationParams::for_pair(&model, 0, 1);
            let cross = PopulationParams::for_pair(&model, 0, m.n - 1);
            let lim = pop_skip_limit(&same, c, skip)? - pop_skip_limit(&cross, c, skip)?;
            let rel = ((gap - lim) / lim).abs();
            out.push(check(format!("depth-64 skip gap -> limit [{c}, {skip}]"), rel < 0.1, format!("rel err {rel:.3e}")));
        }
    }
    Ok(out)
}

fn empirical_checks(seed: u64) -> Result<Vec<Check>> {
    let model = build_model(&ModelArgs { n: 6, k: 2, p: 0.9, q: 0.3, pi: PiMode::Uniform }, seed)?;
    let g = sample_with_loops(&model, seed);
    let s = build_convolution(&g, ConvKind::Row)?;
    let x = Mat::identity(6, 6);
    let cfg = NtkConfig::relu(2);
    let target = ntk_propagated(&s, &x, &cfg)?;
    let hadamard = ntk::ntk_vanilla(&s, &x, &cfg)?;
    let emp = empirical_ntk(&s, &x, &cfg, EmpiricalOptions { width: 2048, samples: 16, seed: sub_seed(seed, "weights") })?;
    let rel = |k: &KernelMatrix<f64>| (&emp.values - &k.values).norm() / k.values.norm();
    let (e_prop, e_had) = (rel(&target), rel(&hadamard));
    Ok(vec![
        check("empirical -> propagated recursion [row, relu, d=2]", e_prop < 0.1, format!("rel Frobenius err {e_prop:.3e}")),
        check("empirical vs Hadamard assembly (informational)", true, format!("rel Frobenius err {e_had:.3e}")),
    ])
}

fn validate_cmd(level: Level, seed: u64) -> i32 {
    let mut checks = Vec::new();
    let mut run = |r: Result<Vec<Check>>, what: &str| match r {
        Ok(c) => checks.extend(c),
        Err(e) => checks.push(check(what.to_string(), false, format!("error: {e}"))),
    };
    if matches!(level, Level::LinearOracle | Level::All) {
        run(linear_oracle_checks(seed), "linear oracle");
    }
    if matches!(level, Level::Limits | Level::All) {
        run(limit_checks(), "limits");
    }
    if matches!(level, Level::Empirical | Level::All) {
        run(empirical_checks(seed), "empirical");
    }
    let mut ok = true;
    for c in &checks {
        ok &= c.passed;
        println!("{} {} ({})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if ok {
        0
    } else {
        1
    }
}
