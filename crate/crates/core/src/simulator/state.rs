use num_complex::Complex64;

use super::pauli::PauliString;
use crate::error::{FlipError, Result};

/// Largest register the dense simulator accepts.
pub const MAX_QUBITS: usize = 20;

/// Dense statevector; qubit 0 is the least significant bit of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl Statevector {
    /// The computational basis state `|initial⟩`.
    pub fn basis(n_qubits: usize, initial: u64) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(FlipError::Capacity(format!(
                "{n_qubits} qubits (supported 1..={MAX_QUBITS})"
            )));
        }
        let dim = 1usize << n_qubits;
        if initial as usize >= dim {
            return Err(FlipError::Index {
                what: "basis state",
                index: initial as usize,
                bound: dim,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[initial as usize] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    /// Wrap raw amplitudes; the length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() != 1 << n || n == 0 || n > MAX_QUBITS {
            return Err(FlipError::Capacity(format!(
                "amplitude vector of length {}",
                amps.len()
            )));
        }
        Ok(Self { n_qubits: n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// Total probability per Hamming weight of the basis index.
    pub fn hamming_weight_distribution(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits + 1];
        for (b, a) in self.amps.iter().enumerate() {
            out[b.count_ones() as usize] += a.norm_sqr();
        }
        out
    }
}

/// In place `exp(−i·angle·P/2)`.
pub(crate) fn apply_pauli_rotation(amps: &mut [Complex64], p: PauliString, angle: f64) {
    let (s, c) = (0.5 * angle).sin_cos();
    let flip = p.flip_mask() as usize;
    if flip == 0 {
        let z = p.phase_mask();
        let even = Complex64::new(c, -s);
        let odd = Complex64::new(c, s);
        for (b, a) in amps.iter_mut().enumerate() {
            if (b as u64 & z).count_ones() % 2 == 0 {
                *a *= even;
            } else {
                *a *= odd;
            }
        }
        return;
    }
    let top = 1usize << (63 - (flip as u64).leading_zeros());
    let yf = p.y_factor();
    let minus_is = Complex64::new(0.0, -s);
    for b in 0..amps.len() {
        if b & top != 0 {
            continue;
        }
        let b2 = b ^ flip;
        let (a, a2) = (amps[b], amps[b2]);
        // (Pψ)[b] = ω(b2)ψ[b2], (Pψ)[b2] = ω(b)ψ[b]
        amps[b] = c * a + minus_is * p.phase_on(b2 as u64, yf) * a2;
        amps[b2] = c * a2 + minus_is * p.phase_on(b as u64, yf) * a;
    }
}

pub(crate) fn apply_cz(amps: &mut [Complex64], mask: u64) {
    let mask = mask as usize;
    for (b, a) in amps.iter_mut().enumerate() {
        if b & mask == mask {
            *a = -*a;
        }
    }
}

/// `Im⟨λ|P|ψ⟩`, the adjoint-method derivative kernel.
pub(crate) fn im_pauli_overlap(lambda: &[Complex64], psi: &[Complex64], p: PauliString) -> f64 {
    let flip = p.flip_mask() as usize;
    let yf = p.y_factor();
    let mut acc = 0.0;
    for (b, &a) in psi.iter().enumerate() {
        // (Pψ)[b ^ flip] = ω(b) ψ[b]
        acc += (lambda[b ^ flip].conj() * p.phase_on(b as u64, yf) * a).im;
    }
    acc
}
