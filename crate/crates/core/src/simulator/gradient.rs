//! Costs and exact gradients of problem instances.

use std::f64::consts::FRAC_PI_2;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::circuit::{Angle, Op};
use super::pauli::Observable;
use super::state::{im_pauli_overlap, Statevector};
use crate::error::{contract, Result};
use crate::problems::ProblemInstance;
use crate::seed::{derive_seed, rng_from_seed};

/// `⟨O⟩`, divided by `‖O‖₁` when `normalized`.
pub fn cost(problem: &ProblemInstance, params: &[f64], normalized: bool) -> Result<f64> {
    let state = problem.circuit().run(params, problem.initial_state())?;
    let raw = problem.observable().expectation(&state)?;
    Ok(scale(problem.observable(), raw, normalized))
}

pub fn expectation(state: &Statevector, obs: &Observable) -> Result<f64> {
    obs.expectation(state)
}

fn scale(obs: &Observable, raw: f64, normalized: bool) -> f64 {
    if normalized {
        raw / obs.l1_norm()
    } else {
        raw
    }
}

/// Cost and its gradient from one forward pass and one adjoint sweep.
pub fn value_and_gradient(problem: &ProblemInstance, params: &[f64], normalized: bool) -> Result<(f64, Vec<f64>)> {
    let circuit = problem.circuit();
    let obs = problem.observable();
    let mut psi = circuit.run(params, problem.initial_state())?;
    let value = obs.expectation(&psi)?;
    let mut lambda = obs.apply_unchecked(psi.amplitudes());
    let psi = psi.amplitudes_mut();
    let mut grad = vec![0.0; circuit.n_params()];
    for op in circuit.ops().iter().rev() {
        let angle = op.angle(params);
        if let Op::Rotation {
            pauli,
            multiplier,
            angle: Angle::Slot(k),
        } = *op
        {
            grad[k] += multiplier * im_pauli_overlap(&lambda, psi, pauli);
        }
        op.apply(psi, -angle);
        op.apply(&mut lambda, -angle);
    }
    if normalized {
        let l1 = obs.l1_norm();
        grad.iter_mut().for_each(|g| *g /= l1);
    }
    Ok((scale(obs, value, normalized), grad))
}

/// Exact gradient via the adjoint method.
pub fn gradient_reverse(problem: &ProblemInstance, params: &[f64], normalized: bool) -> Result<Vec<f64>> {
    value_and_gradient(problem, params, normalized).map(|(_, g)| g)
}

/// Exact gradient via the two-term shift rule applied to every lowered
/// rotation; each rotation's generator `P/2` has eigenvalues `±1/2`.
pub fn gradient_shift(problem: &ProblemInstance, params: &[f64], normalized: bool) -> Result<Vec<f64>> {
    let circuit = problem.circuit();
    circuit.check_params(params)?;
    let obs = problem.observable();
    let mut grad = vec![0.0; circuit.n_params()];
    for (i, op) in circuit.ops().iter().enumerate() {
        let (multiplier, k) = match *op {
            Op::Rotation {
                pauli,
                multiplier,
                angle: Angle::Slot(k),
            } => {
                if pauli.is_identity() {
                    return Err(contract("identity generator has no shift rule"));
                }
                (multiplier, k)
            }
            _ => continue,
        };
        let plus = circuit.run_shifted(params, problem.initial_state(), i, FRAC_PI_2)?;
        let minus = circuit.run_shifted(params, problem.initial_state(), i, -FRAC_PI_2)?;
        let diff = obs.expectation(&plus)? - obs.expectation(&minus)?;
        grad[k] += multiplier * 0.5 * diff;
    }
    if normalized {
        let l1 = obs.l1_norm();
        grad.iter_mut().for_each(|g| *g /= l1);
    }
    Ok(grad)
}

/// Additive i.i.d. Gaussian noise on gradient components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientNoise {
    pub sigma_n: f64,
    pub rng_seed: u64,
}

impl GradientNoise {
    pub fn none() -> Self {
        Self {
            sigma_n: 0.0,
            rng_seed: 0,
        }
    }

    pub fn new(sigma_n: f64, rng_seed: u64) -> Result<Self> {
        if !(sigma_n >= 0.0) || !sigma_n.is_finite() {
            return Err(contract(format!("noise sigma must be >= 0, got {sigma_n}")));
        }
        Ok(Self { sigma_n, rng_seed })
    }

    pub fn is_silent(&self) -> bool {
        self.sigma_n == 0.0
    }

    /// Independent stream for one evaluation; keyed so that every step of every
    /// optimization draws fresh noise.
    pub fn derive(&self, keys: &[u64]) -> Self {
        Self {
            sigma_n: self.sigma_n,
            rng_seed: derive_seed(self.rng_seed, keys),
        }
    }

    /// Add noise in place. A silent noise leaves `grad` untouched.
    pub fn perturb(&self, grad: &mut [f64]) {
        if self.is_silent() {
            return;
        }
        let normal = Normal::new(0.0, self.sigma_n).expect("validated sigma");
        let mut rng = rng_from_seed(self.rng_seed);
        for g in grad.iter_mut() {
            *g += normal.sample(&mut rng);
        }
    }
}

impl Default for GradientNoise {
    fn default() -> Self {
        Self::none()
    }
}

/// Adjoint gradient plus `N(0, σ²)` per component, deterministic in the seed.
pub fn noisy_gradient(problem: &ProblemInstance, params: &[f64], normalized: bool, noise: &GradientNoise) -> Result<Vec<f64>> {
    let mut g = gradient_reverse(problem, params, normalized)?;
    noise.perturb(&mut g);
    Ok(g)
}
