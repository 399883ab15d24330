//! Baseline initializers, gradient-variance and pattern diagnostics, and the
//! experiment harness that turns a manifest into traces and aggregate tables.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Uniform};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, FlipError, Result};
use crate::initializer::{encode_qaoa, EncodingMatrix, FlipInitializer, QAOA_WIDTH};
use crate::metatrain::{test_optimize, RunTrace, TestConfig, TracePoint};
use crate::problems::{
    build_fhm, build_maxcut, build_state_prep, sample_erdos_renyi, sample_problems, DistributionConfig, EmptyGraphPolicy, Family, FhmSpec,
    Graph, MaxCutSpec, ProblemInstance, ProblemSpec, StatePrepSpec,
};
use crate::seed::{derive_seed, rng_from_seed, Rng};
use crate::simulator::{cost, gradient_reverse, MAX_QUBITS};

// ---------------------------------------------------------------------------
// Random initialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomInitConfig {
    #[serde(default = "neg_pi")]
    pub low: f64,
    #[serde(default = "pos_pi")]
    pub high: f64,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn neg_pi() -> f64 {
    -PI
}

fn pos_pi() -> f64 {
    PI
}

fn default_restarts() -> usize {
    5
}

impl Default for RandomInitConfig {
    fn default() -> Self {
        Self {
            low: -PI,
            high: PI,
            rng_seed: 0,
            restarts: 5,
        }
    }
}

impl RandomInitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.low < self.high && self.low.is_finite() && self.high.is_finite()) {
            return Err(config(format!("random bounds [{}, {}] need low < high", self.low, self.high)));
        }
        if self.restarts == 0 {
            return Err(config("at least one random restart is needed"));
        }
        Ok(())
    }
}

/// `K` i.i.d. uniform draws in `[low, high)`.
pub fn random_init(problem: &ProblemInstance, cfg: &RandomInitConfig, rng: &mut Rng) -> Result<Vec<f64>> {
    cfg.validate()?;
    let dist = Uniform::new(cfg.low, cfg.high).map_err(|e| config(e.to_string()))?;
    Ok((0..problem.n_params()).map(|_| dist.sample(rng)).collect())
}

/// One vector per restart; restart `r` draws from `derive_seed(seed, [r])`.
pub fn random_restarts(problem: &ProblemInstance, cfg: &RandomInitConfig) -> Result<Vec<Vec<f64>>> {
    (0..cfg.restarts)
        .map(|r| random_init(problem, cfg, &mut rng_from_seed(derive_seed(cfg.rng_seed, &[r as u64]))))
        .collect()
}

// ---------------------------------------------------------------------------
// Heuristics initialization
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeuristicsConfig {
    pub m_problems: usize,
    #[serde(default = "default_heuristic_steps")]
    pub steps: usize,
    #[serde(default = "default_heuristic_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_heuristic_steps() -> usize {
    100
}

fn default_heuristic_alpha() -> f64 {
    2e-2
}

/// The single stored warm start and how it was chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeuristicsModel {
    pub family: Family,
    pub theta_star: Vec<f64>,
    /// Average normalized cost of every candidate over all training problems.
    pub candidate_costs: Vec<f64>,
    pub selected: usize,
    pub training: HeuristicsConfig,
}

impl HeuristicsModel {
    pub fn n_params(&self) -> usize {
        self.theta_star.len()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

pub fn heuristics_train(dist: &DistributionConfig, cfg: &HeuristicsConfig) -> Result<HeuristicsModel> {
    dist.validate()?;
    let problems = sample_problems(dist, cfg.m_problems)?;
    heuristics_train_on(&problems, cfg)
}

/// (i) optimize every problem from a random start with Adam, (ii) score
/// each optimum on all problems, (iii) keep the best average.
pub fn heuristics_train_on(problems: &[ProblemInstance], cfg: &HeuristicsConfig) -> Result<HeuristicsModel> {
    let first = problems.first().ok_or_else(|| contract("heuristics need at least one problem"))?;
    let k = first.n_params();
    if let Some(p) = problems.iter().find(|p| p.n_params() != k || p.family() != first.family()) {
        return Err(contract(format!("heuristics need one family and one K; found K = {} and {}", k, p.n_params())));
    }
    let test = TestConfig::adam(cfg.steps, cfg.alpha);
    let random = RandomInitConfig::default();
    let candidates: Vec<Vec<f64>> = problems
        .par_iter()
        .map(|p| {
            let mut rng = rng_from_seed(spec_seed(cfg.rng_seed, p.spec())?);
            let theta0 = random_init(p, &random, &mut rng)?;
            optimize_to_params(p, &theta0, &test)
        })
        .collect::<Result<_>>()?;
    let candidate_costs: Vec<f64> = candidates
        .par_iter()
        .map(|theta| {
            let total: f64 = problems.iter().map(|p| cost(p, theta, true)).sum::<Result<f64>>()?;
            Ok(total / problems.len() as f64)
        })
        .collect::<Result<_>>()?;
    let selected = candidate_costs
        .iter()
        .enumerate()
        .fold(0, |best, (i, &c)| if c < candidate_costs[best] { i } else { best });
    Ok(HeuristicsModel {
        family: first.family(),
        theta_star: candidates[selected].clone(),
        candidate_costs,
        selected,
        training: *cfg,
    })
}

/// Seed keyed by the problem's content, so equal problems draw equal starts.
fn spec_seed(base: u64, spec: &ProblemSpec) -> Result<u64> {
    let bytes = serde_json::to_vec(spec)?;
    let words: Vec<u64> = bytes
        .chunks(8)
        .map(|c| c.iter().fold(0u64, |acc, &b| acc << 8 | u64::from(b)))
        .collect();
    Ok(derive_seed(base, &words))
}

/// Final parameters of a test-style optimization.
fn optimize_to_params(problem: &ProblemInstance, theta0: &[f64], test: &TestConfig) -> Result<Vec<f64>> {
    use crate::metatrain::{adam_step, AdamState, Optimizer};
    let mut theta = theta0.to_vec();
    let mut adam = AdamState::new(theta.len());
    for it in 0..test.steps {
        let mut g = gradient_reverse(problem, &theta, true)?;
        test.noise.derive(&[it as u64]).perturb(&mut g);
        match test.optimizer {
            Optimizer::Gd => theta.iter_mut().zip(&g).for_each(|(t, gk)| *t -= test.alpha * gk),
            Optimizer::Adam => adam_step(&mut adam, &mut theta, &g, test.alpha)?,
        }
    }
    Ok(theta)
}

/// Copies `θ*` into the leading slots and pads the deeper ones uniformly in
/// `±π`.
pub fn heuristics_apply(model: &HeuristicsModel, problem: &ProblemInstance, rng: &mut Rng) -> Result<Vec<f64>> {
    if problem.family() != model.family {
        return Err(contract(format!("{} heuristics applied to a {} problem", model.family, problem.family())));
    }
    let k = problem.n_params();
    if k < model.n_params() {
        return Err(contract(format!("problem has K = {k}, heuristics need at least {}", model.n_params())));
    }
    let mut theta = model.theta_star.clone();
    theta.extend((model.n_params()..k).map(|_| rng.random_range(-PI..PI)));
    Ok(theta)
}

// ---------------------------------------------------------------------------
// Gradient variance
// ---------------------------------------------------------------------------

/// Per-parameter sample variance across repeats, averaged over parameters.
pub fn mean_parameter_variance(grads: &[Vec<f64>]) -> Result<f64> {
    let r = grads.len();
    if r < 2 {
        return Err(contract("variance needs at least two repeats"));
    }
    let k = grads[0].len();
    if k == 0 || grads.iter().any(|g| g.len() != k) {
        return Err(contract("gradient samples must share a positive length"));
    }
    let mut total = 0.0;
    for j in 0..k {
        // shifted by the first sample so identical samples give exactly 0
        let (mut s1, mut s2) = (0.0, 0.0);
        for g in grads {
            let d = g[j] - grads[0][j];
            s1 += d;
            s2 += d * d;
        }
        total += ((s2 - s1 * s1 / r as f64) / (r - 1) as f64).max(0.0);
    }
    Ok(total / k as f64)
}

#[derive(Debug, Clone)]
pub enum VarianceInit {
    Random(RandomInitConfig),
    Flip(Box<FlipInitializer>),
}

impl VarianceInit {
    fn label(&self) -> &'static str {
        match self {
            VarianceInit::Random(_) => "random",
            VarianceInit::Flip(_) => "flip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VarianceConfig {
    pub family: Family,
    /// `(n, d)` pairs; for FHM `n` is the number of sites.
    pub sizes: Vec<[usize; 2]>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Draw a fresh problem per repeat (target position, graph, or U).
    /// Otherwise state prep uses p = 1, max-cut the complete graph, FHM U = 1.
    #[serde(default)]
    pub vary_problem: bool,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_repeats() -> usize {
    250
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceRow {
    pub n: usize,
    pub d: usize,
    pub variance: f64,
    #[serde(rename = "R")]
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub initializer: String,
    pub rows: Vec<VarianceRow>,
}

impl VarianceReport {
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn diagnostic_problem(family: Family, n: usize, d: usize, vary: bool, rng: &mut Rng) -> Result<ProblemInstance> {
    match family {
        Family::StatePrep => {
            let p = if vary { rng.random_range(1..=n) } else { 1 };
            build_state_prep(StatePrepSpec { n, d, p })
        }
        Family::MaxCut => {
            let graph = if vary {
                sample_erdos_renyi(n, 0.5, rng, EmptyGraphPolicy::Resample)?
            } else {
                Graph::complete(n)
            };
            build_maxcut(MaxCutSpec { graph, d, edge_prob: 0.5 })
        }
        Family::Fhm => {
            let u = if vary { rng.random_range(0.0..=10.0) } else { 1.0 };
            build_fhm(FhmSpec { l: n, u, d })
        }
        Family::Custom => Err(contract("custom problems have no diagnostic")),
    }
}

pub fn variance_diagnostic(cfg: &VarianceConfig, init: &VarianceInit) -> Result<VarianceReport> {
    for &[n, d] in &cfg.sizes {
        let qubits = if cfg.family == Family::Fhm { 2 * n } else { n };
        if qubits == 0 || qubits > MAX_QUBITS || d == 0 {
            return Err(FlipError::Capacity(format!("diagnostic size (n = {n}, d = {d})")));
        }
    }
    if let VarianceInit::Flip(f) = init {
        if f.family() != cfg.family {
            return Err(contract(format!("{} decoder in a {} diagnostic", f.family(), cfg.family)));
        }
    }
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for (si, &[n, d]) in cfg.sizes.iter().enumerate() {
        let fixed = if cfg.vary_problem {
            None
        } else {
            Some(diagnostic_problem(cfg.family, n, d, false, &mut rng_from_seed(0))?)
        };
        let grads: Vec<Vec<f64>> = (0..cfg.repeats)
            .into_par_iter()
            .map(|r| {
                let mut rng = rng_from_seed(derive_seed(cfg.rng_seed, &[si as u64, r as u64]));
                let owned;
                let problem = match &fixed {
                    Some(p) => p,
                    None => {
                        owned = diagnostic_problem(cfg.family, n, d, true, &mut rng)?;
                        &owned
                    }
                };
                let theta = match init {
                    VarianceInit::Random(rc) => random_init(problem, rc, &mut rng)?,
                    VarianceInit::Flip(f) => f.initialize(problem)?,
                };
                gradient_reverse(problem, &theta, true)
            })
            .collect::<Result<_>>()?;
        rows.push(VarianceRow {
            n,
            d,
            variance: mean_parameter_variance(&grads)?,
            repeats: cfg.repeats,
        });
    }
    Ok(VarianceReport {
        initializer: init.label().to_string(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Parameter patterns
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternRow {
    pub d: usize,
    pub layer: usize,
    pub gamma_over_pi: f64,
    pub beta_over_pi: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub rows: Vec<PatternRow>,
}

impl PatternReport {
    /// Fraction of consecutive layer pairs, over all depths, whose ratio
    /// does not decrease.
    pub fn ratio_monotone_fraction(&self) -> Option<f64> {
        let pairs: Vec<bool> = self
            .rows
            .windows(2)
            .filter(|w| w[0].d == w[1].d)
            .map(|w| w[1].ratio >= w[0].ratio)
            .collect();
        if pairs.is_empty() {
            return None;
        }
        Some(pairs.iter().filter(|&&up| up).count() as f64 / pairs.len() as f64)
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Decodes QAOA angles for each depth and tabulates `|γ_l|/π`, `|β_l|/π`
/// and `|γ_l|/(|γ_l| + |β_l|)` (0.5 when both vanish).
pub fn extract_patterns(init: &FlipInitializer, depths: &[usize]) -> Result<PatternReport> {
    if init.family() != Family::MaxCut {
        return Err(contract(format!("patterns need a max-cut decoder, got {}", init.family())));
    }
    let mut rows = Vec::new();
    for &d in depths {
        let spec = MaxCutSpec {
            graph: Graph::complete(2),
            d,
            edge_prob: 1.0,
        };
        let enc: Vec<Vec<f64>> = (0..2 * d).map(|k| encode_qaoa(&spec, k, init.encoder.divisor)).collect::<Result<_>>()?;
        let (theta, _) = init.net.forward(&EncodingMatrix::from_rows(QAOA_WIDTH, &enc)?)?;
        for layer in 0..d {
            let (g, b) = (theta[2 * layer].abs(), theta[2 * layer + 1].abs());
            let ratio = if g + b == 0.0 { 0.5 } else { g / (g + b) };
            rows.push(PatternRow {
                d,
                layer: layer + 1,
                gamma_over_pi: g / PI,
                beta_over_pi: b / PI,
                ratio,
            });
        }
    }
    Ok(PatternReport { rows })
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitializerKind {
    Flip {
        checkpoint: PathBuf,
    },
    Random {
        #[serde(default = "default_restarts")]
        restarts: usize,
        #[serde(default = "neg_pi")]
        low: f64,
        #[serde(default = "pos_pi")]
        high: f64,
    },
    Heuristics {
        model: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitializerEntry {
    #[serde(default)]
    pub label: Option<String>,
    pub init: InitializerKind,
    pub test: TestConfig,
}

impl InitializerEntry {
    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            match self.init {
                InitializerKind::Flip { .. } => "flip",
                InitializerKind::Random { .. } => "random",
                InitializerKind::Heuristics { .. } => "heuristics",
            }
            .to_string()
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemSource {
    Sampled { distribution: DistributionConfig, count: usize },
    Listed { specs: Vec<ProblemSpec> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default)]
    pub seed: u64,
    pub problems: ProblemSource,
    pub initializers: Vec<InitializerEntry>,
    #[serde(default = "default_resamples")]
    pub bootstrap_resamples: usize,
}

fn default_resamples() -> usize {
    1000
}

impl Manifest {
    pub fn validate(&self) -> Result<()> {
        if self.initializers.is_empty() {
            return Err(config("manifest lists no initializers"));
        }
        if self.bootstrap_resamples == 0 {
            return Err(config("bootstrap needs at least one resample"));
        }
        if let ProblemSource::Sampled { distribution, .. } = &self.problems {
            distribution.validate()?;
        }
        for e in &self.initializers {
            e.test.validate()?;
            if let InitializerKind::Random { restarts, low, high } = e.init {
                RandomInitConfig {
                    low,
                    high,
                    rng_seed: 0,
                    restarts,
                }
                .validate()?;
            }
        }
        Ok(())
    }

    pub fn build_problems(&self) -> Result<Vec<ProblemInstance>> {
        match &self.problems {
            ProblemSource::Sampled { distribution, count } => sample_problems(distribution, *count),
            ProblemSource::Listed { specs } => specs.iter().map(ProblemSpec::build).collect(),
        }
    }
}

enum LoadedInit {
    Flip(FlipInitializer),
    Random(RandomInitConfig),
    Heuristics(HeuristicsModel),
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub iteration: usize,
    pub mean: f64,
    pub median: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub initializer: String,
    pub family: Family,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentResult {
    /// Traces ordered by problem, then initializer, then restart.
    pub traces: Vec<RunTrace>,
    /// Per problem index of each trace.
    pub problem_index: Vec<usize>,
    pub aggregates: Vec<AggregateRow>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// 95% percentile-bootstrap interval of the mean.
pub fn bootstrap_ci(values: &[f64], resamples: usize, rng: &mut Rng) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut means: Vec<f64> = (0..resamples)
        .map(|_| (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let at = |q: f64| means[((q * (resamples - 1) as f64).round() as usize).min(resamples - 1)];
    (at(0.025), at(0.975))
}

/// The value aggregated per iteration: ΔC when every trace of the group has
/// it, otherwise the normalized cost.
fn metric(point: &TracePoint, use_delta: bool) -> f64 {
    if use_delta {
        point.delta_c.expect("checked")
    } else {
        point.cost_normalized
    }
}

pub fn aggregate(traces: &[RunTrace], resamples: usize, seed: u64) -> Vec<AggregateRow> {
    let mut labels: Vec<&str> = Vec::new();
    for t in traces {
        if !labels.contains(&t.initializer.as_str()) {
            labels.push(&t.initializer);
        }
    }
    let mut rows = Vec::new();
    for (li, label) in labels.iter().enumerate() {
        let group: Vec<&RunTrace> = traces.iter().filter(|t| t.initializer == *label).collect();
        let family = group[0].spec.family();
        let use_delta = group.iter().all(|t| t.points.iter().all(|p| p.delta_c.is_some()));
        let len = group.iter().map(|t| t.points.len()).min().unwrap_or(0);
        for it in 0..len {
            let values: Vec<f64> = group.iter().map(|t| metric(&t.points[it], use_delta)).collect();
            let mut rng = rng_from_seed(derive_seed(seed, &[li as u64, it as u64]));
            let (ci_lo, ci_hi) = bootstrap_ci(&values, resamples, &mut rng);
            rows.push(AggregateRow {
                iteration: it,
                mean: mean(&values),
                median: median(&values),
                ci_lo,
                ci_hi,
                initializer: label.to_string(),
                family,
            });
        }
    }
    rows
}

/// Initializes and optimizes every (problem, initializer, restart) triple.
/// Relative checkpoint and model paths resolve against `base_dir`.
pub fn run_experiment(manifest: &Manifest, base_dir: &Path) -> Result<ExperimentResult> {
    manifest.validate()?;
    let loaded: Vec<LoadedInit> = manifest
        .initializers
        .iter()
        .enumerate()
        .map(|(j, e)| {
            Ok(match &e.init {
                InitializerKind::Flip { checkpoint } => LoadedInit::Flip(FlipInitializer::load(&resolve(base_dir, checkpoint))?),
                InitializerKind::Random { restarts, low, high } => LoadedInit::Random(RandomInitConfig {
                    low: *low,
                    high: *high,
                    rng_seed: derive_seed(manifest.seed, &[u64::MAX, j as u64]),
                    restarts: *restarts,
                }),
                InitializerKind::Heuristics { model } => LoadedInit::Heuristics(HeuristicsModel::load(&resolve(base_dir, model))?),
            })
        })
        .collect::<Result<_>>()?;
    let problems = manifest.build_problems()?;

    let mut jobs = Vec::new();
    for i in 0..problems.len() {
        for (j, l) in loaded.iter().enumerate() {
            let restarts = match l {
                LoadedInit::Random(c) => c.restarts,
                _ => 1,
            };
            jobs.extend((0..restarts).map(|r| (i, j, r)));
        }
    }
    let traces: Vec<RunTrace> = jobs
        .par_iter()
        .map(|&(i, j, r)| {
            let problem = &problems[i];
            let entry = &manifest.initializers[j];
            let seed = derive_seed(manifest.seed, &[i as u64, j as u64, r as u64]);
            let mut rng = rng_from_seed(seed);
            let theta0 = match &loaded[j] {
                LoadedInit::Flip(f) => f.initialize(problem)?,
                LoadedInit::Random(c) => random_init(problem, c, &mut rng)?,
                LoadedInit::Heuristics(h) => heuristics_apply(h, problem, &mut rng)?,
            };
            let mut test = entry.test;
            test.noise = test.noise.derive(&[seed]);
            Ok(test_optimize(problem, &theta0, &test)?.labeled(&entry.label(), seed, r))
        })
        .collect::<Result<_>>()?;
    let aggregates = aggregate(&traces, manifest.bootstrap_resamples, manifest.seed);
    Ok(ExperimentResult {
        problem_index: jobs.iter().map(|j| j.0).collect(),
        traces,
        aggregates,
    })
}

impl ExperimentResult {
    pub fn write_traces(&self, out: impl Write) -> Result<()> {
        write_traces_jsonl(&self.traces, out)
    }

    pub fn write_aggregate_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.aggregates {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `traces.jsonl` and `aggregate.csv` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_traces(std::io::BufWriter::new(std::fs::File::create(dir.join("traces.jsonl"))?))?;
        self.write_aggregate_csv(std::fs::File::create(dir.join("aggregate.csv"))?)
    }
}

pub fn write_traces_jsonl(traces: &[RunTrace], mut out: impl Write) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_traces_jsonl(input: impl BufRead) -> Result<Vec<RunTrace>> {
    let mut traces = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            traces.push(serde_json::from_str(&line)?);
        }
    }
    Ok(traces)
}

/// One flat CSV row per trace point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct FlatPoint {
    trace: usize,
    initializer: String,
    seed: u64,
    restart: usize,
    spec: String,
    iteration: usize,
    cost: f64,
    cost_normalized: f64,
    delta_c: Option<f64>,
    grad_norm: f64,
}

pub fn traces_to_csv(traces: &[RunTrace], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for (i, t) in traces.iter().enumerate() {
        let spec = serde_json::to_string(&t.spec)?;
        for p in &t.points {
            w.serialize(FlatPoint {
                trace: i,
                initializer: t.initializer.clone(),
                seed: t.seed,
                restart: t.restart,
                spec: spec.clone(),
                iteration: p.iteration,
                cost: p.cost,
                cost_normalized: p.cost_normalized,
                delta_c: p.delta_c,
                grad_norm: p.grad_norm,
            })?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn traces_from_csv(input: impl std::io::Read) -> Result<Vec<RunTrace>> {
    let mut r = csv::Reader::from_reader(input);
    let mut traces: Vec<RunTrace> = Vec::new();
    let mut last = None;
    for row in r.deserialize() {
        let f: FlatPoint = row?;
        if last != Some(f.trace) {
            traces.push(RunTrace {
                spec: serde_json::from_str(&f.spec)?,
                initializer: f.initializer.clone(),
                seed: f.seed,
                restart: f.restart,
                points: Vec::new(),
            });
            last = Some(f.trace);
        }
        traces.last_mut().expect("pushed above").points.push(TracePoint {
            iteration: f.iteration,
            cost: f.cost,
            cost_normalized: f.cost_normalized,
            delta_c: f.delta_c,
            grad_norm: f.grad_norm,
        });
    }
    Ok(traces)
}
