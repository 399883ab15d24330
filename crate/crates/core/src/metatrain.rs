//! Meta-training of the decoder and the test-time optimization loop.
//!
//! All costs and gradients here are of the l1-normalized cost.

use std::io::Write;
use std::time::Instant;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, Result};
use crate::initializer::{encode_problem, FlipInitializer};
use crate::problems::{sample_problems, DistributionConfig, Family, ProblemInstance, ProblemSpec};
use crate::seed::{derive_seed, rng_from_seed};
use crate::simulator::{cost, value_and_gradient, GradientNoise};

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InnerLoopConfig {
    #[serde(default = "default_inner_steps")]
    pub s: usize,
    pub eta: f64,
    #[serde(default)]
    pub noise: GradientNoise,
}

fn default_inner_steps() -> usize {
    5
}

impl InnerLoopConfig {
    pub fn new(s: usize, eta: f64) -> Self {
        Self {
            s,
            eta,
            noise: GradientNoise::none(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(config(format!("inner learning rate {} must be positive", self.eta)));
        }
        GradientNoise::new(self.noise.sigma_n, self.noise.rng_seed).map(|_| ()).map_err(|e| config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetaConfig {
    pub epochs: usize,
    pub n_problems: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub alpha: f64,
    pub inner: InnerLoopConfig,
    #[serde(default)]
    pub rng_seed: u64,
}

fn default_batch() -> usize {
    5
}

impl MetaConfig {
    /// Training hyperparameters used for each family at full scale.
    pub fn full_defaults(family: Family) -> Result<Self> {
        let (n_problems, epochs, alpha, eta) = match family {
            Family::StatePrep => (150, 100, 4e-3, 1e-1),
            Family::MaxCut => (200, 90, 4e-3, 1e-1),
            Family::Fhm => (300, 100, 1e-3, 2e-2),
            Family::Custom => return Err(contract("custom problems have no training defaults")),
        };
        Ok(Self {
            epochs,
            n_problems,
            batch_size: 5,
            alpha,
            inner: InnerLoopConfig::new(5, eta),
            rng_seed: 0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > self.n_problems {
            return Err(config(format!(
                "batch size {} must lie in [1, n_problems = {}]",
                self.batch_size, self.n_problems
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(config(format!("outer learning rate {} must be positive", self.alpha)));
        }
        self.inner.validate()
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam descent step on `params` in place.
pub fn adam_step(state: &mut AdamState, params: &mut [f64], grads: &[f64], alpha: f64) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.m.len() {
        return Err(contract(format!(
            "Adam shapes differ: {} params, {} grads, {} moments",
            params.len(),
            grads.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - state.beta1.powi(t);
    let c2 = 1.0 - state.beta2.powi(t);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
        state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
        let mh = state.m[i] / c1;
        let vh = state.v[i] / c2;
        params[i] -= alpha * mh / (vh.sqrt() + state.eps);
    }
    Ok(())
}

/// `s` plain gradient-descent steps with step size `eta`. Step `j` draws its
/// noise from `cfg.noise.derive(&[j])`.
pub fn inner_gd(problem: &ProblemInstance, theta0: &[f64], cfg: &InnerLoopConfig) -> Result<Vec<f64>> {
    problem.circuit().check_params(theta0)?;
    let mut theta = theta0.to_vec();
    for step in 0..cfg.s {
        let (_, mut g) = value_and_gradient(problem, &theta, true)?;
        cfg.noise.derive(&[step as u64]).perturb(&mut g);
        for (t, gk) in theta.iter_mut().zip(&g) {
            *t -= cfg.eta * gk;
        }
    }
    Ok(theta)
}

/// First-order meta-gradient `(θˢ − θ⁰)/η`.
///
/// This is the negated mean inner gradient, so the decoder descends along
/// `−meta_gradient`.
pub fn meta_gradient(theta0: &[f64], theta_s: &[f64], eta: f64) -> Result<Vec<f64>> {
    if theta0.len() != theta_s.len() {
        return Err(contract(format!("θ⁰ has {} entries, θˢ has {}", theta0.len(), theta_s.len())));
    }
    if eta <= 0.0 {
        return Err(contract("eta must be positive"));
    }
    Ok(theta_s.iter().zip(theta0).map(|(s, z)| (s - z) / eta).collect())
}

/// Batch-averaged decoder gradient and mean post-refinement cost.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// Decoder gradient of one batch without touching the weights. Problem `i`
/// of the batch gets inner-loop noise keyed by `(step_key, i)`.
pub fn batch_gradient(init: &FlipInitializer, batch: &[&ProblemInstance], inner: &InnerLoopConfig, step_key: u64) -> Result<BatchGradient> {
    if batch.is_empty() {
        return Err(contract("empty meta batch"));
    }
    if let Some(p) = batch.iter().find(|p| p.family() != init.family()) {
        return Err(contract(format!("{} decoder given a {} problem", init.family(), p.family())));
    }
    let parts: Vec<Result<(f64, Vec<f64>)>> = batch
        .par_iter()
        .enumerate()
        .map(|(i, problem)| {
            let enc = encode_problem(problem, &init.encoder)?;
            let (theta0, cache) = init.net.forward(&enc)?;
            let mut cfg = *inner;
            cfg.noise = inner.noise.derive(&[step_key, i as u64]);
            let theta_s = inner_gd(problem, &theta0, &cfg)?;
            let loss = cost(problem, &theta_s, true)?;
            let upstream: Vec<f64> = meta_gradient(&theta0, &theta_s, cfg.eta)?.into_iter().map(|g| -g).collect();
            let grad = init.net.backward(&cache, &upstream)?.flatten();
            Ok((loss, grad))
        })
        .collect();
    let mut loss = 0.0;
    let mut grad = vec![0.0; init.net.n_weights()];
    for part in parts {
        let (l, g) = part?;
        loss += l;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    let b = batch.len() as f64;
    grad.iter_mut().for_each(|g| *g /= b);
    Ok(BatchGradient { loss: loss / b, grad })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub loss: f64,
    pub grad_norm: f64,
}

/// One meta-step: batch gradient through the chain rule, then one Adam step.
pub fn meta_step(
    init: &mut FlipInitializer,
    adam: &mut AdamState,
    batch: &[&ProblemInstance],
    cfg: &MetaConfig,
    step_key: u64,
) -> Result<StepOutcome> {
    let bg = batch_gradient(init, batch, &cfg.inner, step_key)?;
    let mut phi = init.net.flatten();
    adam_step(adam, &mut phi, &bg.grad, cfg.alpha)?;
    init.net.set_flat(&phi)?;
    Ok(StepOutcome {
        loss: bg.loss,
        grad_norm: norm(&bg.grad),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    pub batch: usize,
    pub loss: f64,
    pub grad_norm: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.loss).collect()
    }
}

/// Trains on `N` problems drawn once from `dist`, reshuffled every epoch.
/// `on_epoch` runs after each epoch with the epoch index (from 0).
pub fn train_flip(
    cfg: &MetaConfig,
    dist: &DistributionConfig,
    init: &mut FlipInitializer,
    on_epoch: impl FnMut(usize, &FlipInitializer) -> Result<()>,
) -> Result<TrainingLog> {
    cfg.validate()?;
    dist.validate()?;
    if dist.family() != init.family() {
        return Err(contract(format!("{} decoder trained on a {} distribution", init.family(), dist.family())));
    }
    let problems = sample_problems(dist, cfg.n_problems)?;
    train_on(cfg, &problems, init, on_epoch)
}

pub fn train_on(
    cfg: &MetaConfig,
    problems: &[ProblemInstance],
    init: &mut FlipInitializer,
    mut on_epoch: impl FnMut(usize, &FlipInitializer) -> Result<()>,
) -> Result<TrainingLog> {
    if problems.is_empty() {
        return Err(contract("no training problems"));
    }
    if !(cfg.alpha > 0.0) || cfg.batch_size == 0 {
        return Err(config("invalid meta config"));
    }
    cfg.inner.validate()?;
    let start = Instant::now();
    let mut adam = AdamState::new(init.net.n_weights());
    let mut order: Vec<usize> = (0..problems.len()).collect();
    let mut log = TrainingLog::default();
    let mut step = 0u64;
    for epoch in 0..cfg.epochs {
        let mut rng = rng_from_seed(derive_seed(cfg.rng_seed, &[epoch as u64]));
        order.shuffle(&mut rng);
        for (b, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&ProblemInstance> = chunk.iter().map(|&i| &problems[i]).collect();
            let out = meta_step(init, &mut adam, &batch, cfg, step)?;
            step += 1;
            log.records.push(LogRecord {
                epoch,
                batch: b,
                loss: out.loss,
                grad_norm: out.grad_norm,
                wall_ms: start.elapsed().as_millis() as u64,
            });
        }
        on_epoch(epoch, init)?;
    }
    Ok(log)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Gd,
    Adam,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    #[serde(default = "default_test_steps")]
    pub steps: usize,
    pub optimizer: Optimizer,
    pub alpha: f64,
    #[serde(default)]
    pub noise: GradientNoise,
}

fn default_test_steps() -> usize {
    100
}

impl TestConfig {
    pub fn gd(steps: usize, alpha: f64) -> Self {
        Self {
            steps,
            optimizer: Optimizer::Gd,
            alpha,
            noise: GradientNoise::none(),
        }
    }

    pub fn adam(steps: usize, alpha: f64) -> Self {
        Self {
            optimizer: Optimizer::Adam,
            ..Self::gd(steps, alpha)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(config(format!("test learning rate {} must be positive", self.alpha)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub iteration: usize,
    pub cost: f64,
    pub cost_normalized: f64,
    pub delta_c: Option<f64>,
    pub grad_norm: f64,
}

/// Optimization history of one problem from one initialization, including
/// the initial point. `delta_c` is in normalized units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub spec: ProblemSpec,
    pub initializer: String,
    pub seed: u64,
    #[serde(default)]
    pub restart: usize,
    pub points: Vec<TracePoint>,
}

impl RunTrace {
    pub fn final_point(&self) -> &TracePoint {
        self.points.last().expect("trace always has the initial point")
    }

    pub fn initial_point(&self) -> &TracePoint {
        &self.points[0]
    }

    pub fn labeled(mut self, initializer: &str, seed: u64, restart: usize) -> Self {
        self.initializer = initializer.to_string();
        self.seed = seed;
        self.restart = restart;
        self
    }
}

/// Runs `cfg.steps` optimizer steps from `theta0`. Step `j` draws noise from
/// `cfg.noise.derive(&[j])`; recorded costs are exact.
pub fn test_optimize(problem: &ProblemInstance, theta0: &[f64], cfg: &TestConfig) -> Result<RunTrace> {
    problem.circuit().check_params(theta0)?;
    cfg.validate()?;
    let l1 = problem.observable().l1_norm();
    let c_min = problem.c_min();
    let mut theta = theta0.to_vec();
    let mut adam = AdamState::new(theta.len());
    let mut points = Vec::with_capacity(cfg.steps + 1);
    for it in 0..=cfg.steps {
        let (c, mut g) = value_and_gradient(problem, &theta, true)?;
        points.push(TracePoint {
            iteration: it,
            cost: c * l1,
            cost_normalized: c,
            delta_c: c_min.map(|m| c - m),
            grad_norm: norm(&g),
        });
        if it == cfg.steps {
            break;
        }
        cfg.noise.derive(&[it as u64]).perturb(&mut g);
        match cfg.optimizer {
            Optimizer::Gd => theta.iter_mut().zip(&g).for_each(|(t, gk)| *t -= cfg.alpha * gk),
            Optimizer::Adam => adam_step(&mut adam, &mut theta, &g, cfg.alpha)?,
        }
    }
    Ok(RunTrace {
        spec: problem.spec().clone(),
        initializer: String::new(),
        seed: 0,
        restart: 0,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adam_first_step_is_sign_sized() {
        let mut st = AdamState::new(2);
        let mut p = vec![0.0, 0.0];
        adam_step(&mut st, &mut p, &[3.0, -0.2], 0.01).unwrap();
        assert!((p[0] + 0.01).abs() < 1e-9);
        assert!((p[1] - 0.01).abs() < 1e-9);
        assert!(adam_step(&mut st, &mut p, &[1.0], 0.01).is_err());
    }

    #[test]
    fn meta_config_checks() {
        let mut c = MetaConfig::full_defaults(Family::StatePrep).unwrap();
        assert!(c.validate().is_ok());
        c.batch_size = 151;
        assert!(c.validate().is_err());
        let f = MetaConfig::full_defaults(Family::Fhm).unwrap();
        assert_eq!((f.n_problems, f.epochs, f.alpha, f.inner.eta), (300, 100, 1e-3, 2e-2));
    }
}
