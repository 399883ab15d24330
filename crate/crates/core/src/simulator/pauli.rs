//! Pauli strings and weighted Pauli-sum observables.
//!
//! A Pauli string is stored in symplectic form: bit `q` of `x` is set for X or
//! Y on qubit `q`, bit `q` of `z` for Z or Y. Acting on a computational basis
//! state, `P|b⟩ = i^{#Y} (−1)^{popcount(b & z)} |b ⊕ x⟩`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::state::Statevector;
use crate::error::{contract, FlipError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Pauli {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliString {
    x: u64,
    z: u64,
}

const I_POWERS: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

impl PauliString {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(qubit: usize, op: Pauli) -> Self {
        let mut s = Self::identity();
        s.set(qubit, op);
        s
    }

    /// Build from `(qubit, op)` pairs; a qubit may appear at most once.
    pub fn from_ops(ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut s = Self::identity();
        for &(q, op) in ops {
            if q >= 64 {
                return Err(FlipError::Index {
                    what: "pauli qubit",
                    index: q,
                    bound: 64,
                });
            }
            if s.get(q).is_some() {
                return Err(contract(format!("qubit {q} repeated in pauli string")));
            }
            s.set(q, op);
        }
        Ok(s)
    }

    fn set(&mut self, qubit: usize, op: Pauli) {
        let bit = 1u64 << qubit;
        match op {
            Pauli::X => self.x |= bit,
            Pauli::Y => {
                self.x |= bit;
                self.z |= bit;
            }
            Pauli::Z => self.z |= bit,
        }
    }

    pub fn get(&self, qubit: usize) -> Option<Pauli> {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (true, true) => Some(Pauli::Y),
            (true, false) => Some(Pauli::X),
            (false, true) => Some(Pauli::Z),
            (false, false) => None,
        }
    }

    pub fn flip_mask(&self) -> u64 {
        self.x
    }

    pub fn phase_mask(&self) -> u64 {
        self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    /// Highest qubit acted on, if any.
    pub fn max_qubit(&self) -> Option<usize> {
        let s = self.support();
        (s != 0).then(|| 63 - s.leading_zeros() as usize)
    }

    /// `i^{#Y}`, the global factor of the basis action.
    pub(crate) fn y_factor(&self) -> Complex64 {
        I_POWERS[((self.x & self.z).count_ones() % 4) as usize]
    }

    /// Phase `ω(b)` such that `P|b⟩ = ω(b)|b ⊕ x⟩`.
    #[inline]
    pub(crate) fn phase_on(&self, basis: u64, y_factor: Complex64) -> Complex64 {
        if (basis & self.z).count_ones() % 2 == 0 {
            y_factor
        } else {
            -y_factor
        }
    }

    pub fn ops(&self) -> Vec<(usize, Pauli)> {
        (0..64)
            .filter_map(|q| self.get(q).map(|p| (q, p)))
            .collect()
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "I");
        }
        let parts: Vec<String> = self
            .ops()
            .into_iter()
            .map(|(q, p)| format!("{p:?}{q}"))
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for PauliString {
    type Err = FlipError;

    /// Parses `"X0 Z1 Y3"`; `"I"` or an empty string is the identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut ops = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "I" {
                continue;
            }
            let (head, idx) = tok.split_at(1);
            let op = match head {
                "X" => Pauli::X,
                "Y" => Pauli::Y,
                "Z" => Pauli::Z,
                _ => return Err(contract(format!("bad pauli token {tok:?}"))),
            };
            let q: usize = idx
                .parse()
                .map_err(|_| contract(format!("bad pauli token {tok:?}")))?;
            ops.push((q, op));
        }
        Self::from_ops(&ops)
    }
}

/// A real-weighted sum of Pauli strings over `n_qubits` qubits.
#[derive(Debug)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<(f64, PauliString)>,
    l1_norm: f64,
    /// Non-diagonal terms grouped by flip mask.
    off_diagonal: Vec<(u64, Vec<(f64, PauliString)>)>,
    diagonal: OnceLock<Vec<f64>>,
}

impl Clone for Observable {
    fn clone(&self) -> Self {
        Self {
            n_qubits: self.n_qubits,
            terms: self.terms.clone(),
            l1_norm: self.l1_norm,
            off_diagonal: self.off_diagonal.clone(),
            diagonal: OnceLock::new(),
        }
    }
}

/// Coefficients with magnitude at or below this are dropped after merging.
const ZERO_COEFF: f64 = 1e-14;

impl Observable {
    /// Merges duplicate strings and drops vanishing coefficients. An observable
    /// with no remaining terms is rejected.
    pub fn new(n_qubits: usize, terms: impl IntoIterator<Item = (f64, PauliString)>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > 30 {
            return Err(FlipError::Capacity(format!(
                "observable over {n_qubits} qubits"
            )));
        }
        let mut merged: BTreeMap<PauliString, f64> = BTreeMap::new();
        for (c, p) in terms {
            if let Some(q) = p.max_qubit() {
                if q >= n_qubits {
                    return Err(FlipError::Index {
                        what: "pauli qubit",
                        index: q,
                        bound: n_qubits,
                    });
                }
            }
            if !c.is_finite() {
                return Err(contract("non-finite observable coefficient"));
            }
            *merged.entry(p).or_insert(0.0) += c;
        }
        let terms: Vec<(f64, PauliString)> = merged
            .into_iter()
            .filter(|(_, c)| c.abs() > ZERO_COEFF)
            .map(|(p, c)| (c, p))
            .collect();
        if terms.is_empty() {
            return Err(contract("observable has no nonzero terms"));
        }
        let l1_norm = terms.iter().map(|(c, _)| c.abs()).sum();
        let mut groups: BTreeMap<u64, Vec<(f64, PauliString)>> = BTreeMap::new();
        for &(c, p) in terms.iter().filter(|(_, p)| !p.is_diagonal()) {
            groups.entry(p.flip_mask()).or_default().push((c, p));
        }
        Ok(Self {
            n_qubits,
            terms,
            l1_norm,
            off_diagonal: groups.into_iter().collect(),
            diagonal: OnceLock::new(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn l1_norm(&self) -> f64 {
        self.l1_norm
    }

    pub fn is_diagonal(&self) -> bool {
        self.off_diagonal.is_empty()
    }

    /// Dense diagonal `d[b] = Σ_z c_z (−1)^{popcount(b & z)}` over the Z-only
    /// terms, computed once with a Walsh–Hadamard transform.
    pub fn diagonal(&self) -> &[f64] {
        self.diagonal.get_or_init(|| {
            let dim = 1usize << self.n_qubits;
            let mut d = vec![0.0; dim];
            let mut any = false;
            for &(c, p) in self.terms.iter().filter(|(_, p)| p.is_diagonal()) {
                d[p.phase_mask() as usize] += c;
                any = true;
            }
            if any {
                walsh_hadamard(&mut d);
            }
            d
        })
    }

    fn check_state(&self, state: &Statevector) -> Result<()> {
        if state.n_qubits() != self.n_qubits {
            return Err(FlipError::Index {
                what: "observable qubit",
                index: self.n_qubits.saturating_sub(1),
                bound: state.n_qubits(),
            });
        }
        Ok(())
    }

    /// `⟨ψ|O|ψ⟩`; the imaginary residue is discarded.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        self.check_state(state)?;
        Ok(self.expectation_unchecked(state.amplitudes()))
    }

    pub(crate) fn expectation_unchecked(&self, amps: &[Complex64]) -> f64 {
        let diag = self.diagonal();
        let mut total: f64 = amps
            .iter()
            .zip(diag)
            .map(|(a, d)| a.norm_sqr() * d)
            .sum();
        for (flip, group) in &self.off_diagonal {
            let flip = *flip as usize;
            for &(c, p) in group {
                let yf = p.y_factor();
                let mut acc = Complex64::new(0.0, 0.0);
                for (b, &a) in amps.iter().enumerate() {
                    acc += amps[b ^ flip].conj() * p.phase_on(b as u64, yf) * a;
                }
                total += c * acc.re;
            }
        }
        total
    }

    /// `O|ψ⟩` as a raw amplitude vector (not normalized).
    pub(crate) fn apply_unchecked(&self, amps: &[Complex64]) -> Vec<Complex64> {
        let diag = self.diagonal();
        let mut out: Vec<Complex64> = amps.iter().zip(diag).map(|(a, d)| a * d).collect();
        for (flip, group) in &self.off_diagonal {
            let flip = *flip as usize;
            for &(c, p) in group {
                let yf = p.y_factor();
                for (b, &a) in amps.iter().enumerate() {
                    out[b ^ flip] += c * p.phase_on(b as u64, yf) * a;
                }
            }
        }
        out
    }

    /// Matrix element `⟨row|O|col⟩` between basis states.
    pub fn matrix_element(&self, row: u64, col: u64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for &(c, p) in &self.terms {
            if col ^ p.flip_mask() == row {
                acc += c * p.phase_on(col, p.y_factor());
            }
        }
        acc
    }
}

fn walsh_hadamard(v: &mut [f64]) {
    let mut h = 1;
    while h < v.len() {
        for block in v.chunks_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (x, y) = (*a, *b);
                *a = x + y;
                *b = x - y;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zz(a: usize, b: usize) -> PauliString {
        PauliString::from_ops(&[(a, Pauli::Z), (b, Pauli::Z)]).unwrap()
    }

    #[test]
    fn parse_and_display_round_trip() {
        let p: PauliString = "X0 Y2 Z5".parse().unwrap();
        assert_eq!(p.get(0), Some(Pauli::X));
        assert_eq!(p.get(1), None);
        assert_eq!(p.get(2), Some(Pauli::Y));
        assert_eq!(p.to_string(), "X0 Y2 Z5");
        assert_eq!("I".parse::<PauliString>().unwrap(), PauliString::identity());
        assert!("X0 Z0".parse::<PauliString>().is_err());
    }

    #[test]
    fn duplicate_terms_merge_and_cancel() {
        let obs = Observable::new(2, [(1.0, zz(0, 1)), (0.5, zz(0, 1))]).unwrap();
        assert_eq!(obs.terms().len(), 1);
        assert!((obs.l1_norm() - 1.5).abs() < 1e-15);
        assert!(Observable::new(2, [(1.0, zz(0, 1)), (-1.0, zz(0, 1))]).is_err());
        assert!(Observable::new(2, []).is_err());
    }

    #[test]
    fn out_of_range_pauli_rejected() {
        let err = Observable::new(2, [(1.0, PauliString::single(2, Pauli::Z))]).unwrap_err();
        assert!(matches!(err, FlipError::Index { .. }));
    }

    #[test]
    fn diagonal_matches_direct_sum() {
        let obs = Observable::new(
            3,
            [(1.0, zz(0, 1)), (-0.5, PauliString::single(2, Pauli::Z)), (0.25, PauliString::identity())],
        )
        .unwrap();
        for b in 0u64..8 {
            let bit = |q: u64| if b >> q & 1 == 1 { -1.0 } else { 1.0 };
            let want = bit(0) * bit(1) - 0.5 * bit(2) + 0.25;
            assert!((obs.diagonal()[b as usize] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn y_action_on_basis() {
        // Y|0⟩ = i|1⟩, Y|1⟩ = −i|0⟩
        let y = PauliString::single(0, Pauli::Y);
        let obs = Observable::new(1, [(1.0, y)]).unwrap();
        assert_eq!(obs.matrix_element(1, 0), Complex64::new(0.0, 1.0));
        assert_eq!(obs.matrix_element(0, 1), Complex64::new(0.0, -1.0));
    }
}
