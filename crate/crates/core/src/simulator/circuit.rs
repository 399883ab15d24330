//! Gate and circuit definitions.
//!
//! Every parametrized gate lowers to a short list of Pauli rotations
//! `exp(−i·m·θ·P/2)` sharing the gate's angle source. The multiplier `m`
//! absorbs conventions such as `exp(−iγ ZZ) = exp(−i·2γ·ZZ/2)`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::pauli::{Pauli, PauliString};
use super::state::{apply_cz, apply_pauli_rotation, Statevector, MAX_QUBITS};
use crate::error::{contract, FlipError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    Ry,
    Rz,
    Cz,
    Rzz,
    /// `exp(−iθXX/2)·exp(−iθYY/2)`
    RxxPlusYy,
    /// `exp(−iθXY/2)·exp(+iθYX/2)`
    RxyMinusYx,
    /// `exp(−iγ Z_i Z_j)` over every edge, one shared angle.
    QaoaProblemZz { edges: Vec<(usize, usize)> },
    /// `exp(−iβ X_q)` over every listed qubit, one shared angle.
    QaoaMixerX,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Slot(usize),
    Fixed(f64),
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Angle,
}

impl Gate {
    pub fn param(kind: GateKind, qubits: Vec<usize>, slot: usize) -> Self {
        Self {
            kind,
            qubits,
            angle: Angle::Slot(slot),
        }
    }

    pub fn fixed(kind: GateKind, qubits: Vec<usize>, angle: f64) -> Self {
        Self {
            kind,
            qubits,
            angle: Angle::Fixed(angle),
        }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cz,
            qubits: vec![a, b],
            angle: Angle::None,
        }
    }

    pub fn qaoa_problem(n_qubits: usize, edges: Vec<(usize, usize)>, slot: usize) -> Self {
        Self::param(GateKind::QaoaProblemZz { edges }, (0..n_qubits).collect(), slot)
    }

    pub fn qaoa_mixer(n_qubits: usize, slot: usize) -> Self {
        Self::param(GateKind::QaoaMixerX, (0..n_qubits).collect(), slot)
    }

    fn arity(&self) -> Option<usize> {
        match self.kind {
            GateKind::Ry | GateKind::Rz => Some(1),
            GateKind::Cz | GateKind::Rzz | GateKind::RxxPlusYy | GateKind::RxyMinusYx => Some(2),
            GateKind::QaoaProblemZz { .. } | GateKind::QaoaMixerX => None,
        }
    }

    /// Lower to `(pauli, multiplier)` rotations; empty for CZ.
    pub fn rotations(&self) -> Vec<(PauliString, f64)> {
        let q = &self.qubits;
        let two = |a: Pauli, b: Pauli| {
            PauliString::from_ops(&[(q[0], a), (q[1], b)]).expect("validated qubits")
        };
        match &self.kind {
            GateKind::Ry => vec![(PauliString::single(q[0], Pauli::Y), 1.0)],
            GateKind::Rz => vec![(PauliString::single(q[0], Pauli::Z), 1.0)],
            GateKind::Cz => vec![],
            GateKind::Rzz => vec![(two(Pauli::Z, Pauli::Z), 1.0)],
            GateKind::RxxPlusYy => vec![(two(Pauli::X, Pauli::X), 1.0), (two(Pauli::Y, Pauli::Y), 1.0)],
            GateKind::RxyMinusYx => {
                vec![(two(Pauli::X, Pauli::Y), 1.0), (two(Pauli::Y, Pauli::X), -1.0)]
            }
            GateKind::QaoaProblemZz { edges } => edges
                .iter()
                .map(|&(i, j)| {
                    let p = PauliString::from_ops(&[(i, Pauli::Z), (j, Pauli::Z)])
                        .expect("validated edge");
                    (p, 2.0)
                })
                .collect(),
            GateKind::QaoaMixerX => q
                .iter()
                .map(|&i| (PauliString::single(i, Pauli::X), 2.0))
                .collect(),
        }
    }
}

/// Role of a parameter slot, emitted by the circuit builders and consumed by
/// the encoders.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SlotRole {
    Ry,
    QaoaProblem,
    QaoaMixer,
    RzOnZero,
    RzOnOne,
    XxYy { even: bool },
    Zz { even: bool },
    XyYx { even: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotMeta {
    /// First qubit the gate acts on (0-based).
    pub qubit: usize,
    /// Layer index (0-based).
    pub layer: usize,
    pub role: SlotRole,
}

/// Lowered operation on the statevector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Op {
    Rotation {
        pauli: PauliString,
        multiplier: f64,
        angle: Angle,
    },
    Cz {
        mask: u64,
    },
}

impl Op {
    pub(crate) fn angle(&self, params: &[f64]) -> f64 {
        match *self {
            Op::Rotation {
                multiplier, angle, ..
            } => match angle {
                Angle::Slot(k) => multiplier * params[k],
                Angle::Fixed(a) => multiplier * a,
                Angle::None => 0.0,
            },
            Op::Cz { .. } => 0.0,
        }
    }

    pub(crate) fn apply(&self, amps: &mut [num_complex::Complex64], angle: f64) {
        match *self {
            Op::Rotation { pauli, .. } => apply_pauli_rotation(amps, pauli, angle),
            Op::Cz { mask } => apply_cz(amps, mask),
        }
    }
}

/// An immutable, validated parametrized circuit over `n_qubits`.
#[derive(Debug, Clone)]
pub struct Circuit {
    n_qubits: usize,
    n_layers: usize,
    n_params: usize,
    gates: Vec<Gate>,
    slots: Vec<SlotMeta>,
    ops: Vec<Op>,
}

impl Circuit {
    /// Validates qubit ranges, angle sources and that slots `0..slots.len()`
    /// are each used at least once.
    pub fn new(n_qubits: usize, n_layers: usize, gates: Vec<Gate>, slots: Vec<SlotMeta>) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(FlipError::Capacity(format!(
                "{n_qubits} qubits (supported 1..={MAX_QUBITS})"
            )));
        }
        let n_params = slots.len();
        let mut used = vec![false; n_params];
        for g in &gates {
            if let Some(a) = g.arity() {
                if g.qubits.len() != a {
                    return Err(contract(format!("{:?} expects {a} qubits", g.kind)));
                }
            }
            for (i, &q) in g.qubits.iter().enumerate() {
                if q >= n_qubits {
                    return Err(FlipError::Index {
                        what: "gate qubit",
                        index: q,
                        bound: n_qubits,
                    });
                }
                if g.qubits[..i].contains(&q) {
                    return Err(contract(format!("gate repeats qubit {q}")));
                }
            }
            if let GateKind::QaoaProblemZz { edges } = &g.kind {
                for &(i, j) in edges {
                    if i == j || i >= n_qubits || j >= n_qubits {
                        return Err(contract(format!("invalid edge ({i}, {j})")));
                    }
                }
            }
            match (&g.kind, g.angle) {
                (GateKind::Cz, Angle::None) => {}
                (GateKind::Cz, _) => return Err(contract("CZ carries no angle")),
                (_, Angle::None) => return Err(contract(format!("{:?} needs an angle", g.kind))),
                (_, Angle::Slot(k)) => {
                    if k >= n_params {
                        return Err(FlipError::Index {
                            what: "parameter slot",
                            index: k,
                            bound: n_params,
                        });
                    }
                    used[k] = true;
                }
                (_, Angle::Fixed(_)) => {}
            }
        }
        if let Some(k) = used.iter().position(|u| !u) {
            return Err(contract(format!("parameter slot {k} unused")));
        }
        let ops = gates
            .iter()
            .flat_map(|g| -> Vec<Op> {
                if g.kind == GateKind::Cz {
                    vec![Op::Cz {
                        mask: (1u64 << g.qubits[0]) | (1u64 << g.qubits[1]),
                    }]
                } else {
                    g.rotations()
                        .into_iter()
                        .map(|(pauli, multiplier)| Op::Rotation {
                            pauli,
                            multiplier,
                            angle: g.angle,
                        })
                        .collect()
                }
            })
            .collect();
        Ok(Self {
            n_qubits,
            n_layers,
            n_params,
            gates,
            slots,
            ops,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn slots(&self) -> &[SlotMeta] {
        &self.slots
    }

    pub(crate) fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub(crate) fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.n_params {
            return Err(contract(format!(
                "expected {} parameters, got {}",
                self.n_params,
                params.len()
            )));
        }
        Ok(())
    }

    /// `U(θ)|initial⟩`.
    pub fn run(&self, params: &[f64], initial: u64) -> Result<Statevector> {
        self.check_params(params)?;
        let mut state = Statevector::basis(self.n_qubits, initial)?;
        let amps = state.amplitudes_mut();
        for op in &self.ops {
            op.apply(amps, op.angle(params));
        }
        Ok(state)
    }

    /// Like [`Circuit::run`] but with lowered op `op_index` shifted by `delta`
    /// radians of its own rotation angle.
    pub(crate) fn run_shifted(&self, params: &[f64], initial: u64, op_index: usize, delta: f64) -> Result<Statevector> {
        self.check_params(params)?;
        let mut state = Statevector::basis(self.n_qubits, initial)?;
        let amps = state.amplitudes_mut();
        for (i, op) in self.ops.iter().enumerate() {
            let mut a = op.angle(params);
            if i == op_index {
                a += delta;
            }
            op.apply(amps, a);
        }
        Ok(state)
    }
}

/// Apply a single gate to `state` in place.
pub fn apply_gate(state: &mut Statevector, gate: &Gate, params: &[f64]) -> Result<()> {
    let n = state.n_qubits();
    for &q in &gate.qubits {
        if q >= n {
            return Err(FlipError::Index {
                what: "gate qubit",
                index: q,
                bound: n,
            });
        }
    }
    if let GateKind::QaoaProblemZz { edges } = &gate.kind {
        if let Some(&(i, j)) = edges.iter().find(|&&(i, j)| i >= n || j >= n || i == j) {
            return Err(contract(format!("invalid edge ({i}, {j})")));
        }
    }
    let theta = match gate.angle {
        Angle::Slot(k) => *params.get(k).ok_or(FlipError::Index {
            what: "parameter slot",
            index: k,
            bound: params.len(),
        })?,
        Angle::Fixed(a) => a,
        Angle::None => 0.0,
    };
    let amps = state.amplitudes_mut();
    if gate.kind == GateKind::Cz {
        if gate.qubits.len() != 2 {
            return Err(contract("CZ expects 2 qubits"));
        }
        apply_cz(amps, (1u64 << gate.qubits[0]) | (1u64 << gate.qubits[1]));
    } else {
        if let Some(a) = gate.arity() {
            if gate.qubits.len() != a {
                return Err(contract(format!("{:?} expects {a} qubits", gate.kind)));
            }
        }
        for (p, m) in gate.rotations() {
            apply_pauli_rotation(amps, p, m * theta);
        }
    }
    Ok(())
}

/// Fixed `RY(π/2)` on every qubit, mapping `|0…0⟩` to `|+⟩^⊗n`.
pub fn hadamard_like_layer(n_qubits: usize) -> Vec<Gate> {
    (0..n_qubits)
        .map(|q| Gate::fixed(GateKind::Ry, vec![q], FRAC_PI_2))
        .collect()
}
