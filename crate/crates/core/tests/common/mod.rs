//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use flip_core::problems::{DistributionConfig, FamilyDistribution, ProblemInstance};
use flip_core::seed::Rng;
use flip_core::simulator::{cost, Gate, GateKind, Observable, Pauli};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use rand::Rng as _;

pub type Mat = DMatrix<C>;

fn single(p: Option<Pauli>) -> Mat {
    let (o, z, i) = (C::new(1.0, 0.0), C::new(0.0, 0.0), C::new(0.0, 1.0));
    match p {
        None => Mat::from_row_slice(2, 2, &[o, z, z, o]),
        Some(Pauli::X) => Mat::from_row_slice(2, 2, &[z, o, o, z]),
        Some(Pauli::Y) => Mat::from_row_slice(2, 2, &[z, -i, i, z]),
        Some(Pauli::Z) => Mat::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense matrix of a Pauli product with qubit 0 as the least significant bit.
pub fn pauli_matrix(n: usize, ops: &[(usize, Pauli)]) -> Mat {
    let mut m = Mat::from_element(1, 1, C::new(1.0, 0.0));
    for q in (0..n).rev() {
        let p = ops.iter().find(|(k, _)| *k == q).map(|(_, p)| *p);
        m = m.kronecker(&single(p));
    }
    m
}

/// Matrix exponential by scaling and squaring of a Taylor series.
pub fn expm(a: &Mat) -> Mat {
    let norm: f64 = a.iter().map(|x| x.norm()).sum();
    let mut squarings = 0;
    let mut scale = 1.0;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let x = a * C::new(scale, 0.0);
    let dim = a.nrows();
    let mut term = Mat::identity(dim, dim);
    let mut out = Mat::identity(dim, dim);
    for k in 1..30 {
        term = &term * &x * C::new(1.0 / k as f64, 0.0);
        out += &term;
    }
    for _ in 0..squarings {
        out = &out * &out;
    }
    out
}

/// `exp(−i·θ·G)` for a Hermitian generator.
pub fn rotation(g: &Mat, theta: f64) -> Mat {
    expm(&(g * C::new(0.0, -theta)))
}

/// Dense unitary of a gate straight from the gate-kind definitions.
pub fn gate_unitary(n: usize, gate: &Gate, theta: f64) -> Mat {
    let q = &gate.qubits;
    let p2 = |a: Pauli, b: Pauli| pauli_matrix(n, &[(q[0], a), (q[1], b)]);
    let half = 0.5 * theta;
    match &gate.kind {
        GateKind::Ry => rotation(&pauli_matrix(n, &[(q[0], Pauli::Y)]), half),
        GateKind::Rz => rotation(&pauli_matrix(n, &[(q[0], Pauli::Z)]), half),
        GateKind::Cz => {
            let dim = 1 << n;
            let mask = (1 << q[0]) | (1 << q[1]);
            Mat::from_fn(dim, dim, |r, c| {
                if r != c {
                    C::new(0.0, 0.0)
                } else if r & mask == mask {
                    C::new(-1.0, 0.0)
                } else {
                    C::new(1.0, 0.0)
                }
            })
        }
        GateKind::Rzz => rotation(&p2(Pauli::Z, Pauli::Z), half),
        GateKind::RxxPlusYy => rotation(&p2(Pauli::X, Pauli::X), half) * rotation(&p2(Pauli::Y, Pauli::Y), half),
        GateKind::RxyMinusYx => rotation(&p2(Pauli::X, Pauli::Y), half) * rotation(&p2(Pauli::Y, Pauli::X), -half),
        GateKind::QaoaProblemZz { edges } => {
            let dim = 1 << n;
            let mut g = Mat::zeros(dim, dim);
            for &(i, j) in edges {
                g += pauli_matrix(n, &[(i, Pauli::Z), (j, Pauli::Z)]);
            }
            rotation(&g, theta)
        }
        GateKind::QaoaMixerX => {
            let dim = 1 << n;
            let mut g = Mat::zeros(dim, dim);
            for &i in q {
                g += pauli_matrix(n, &[(i, Pauli::X)]);
            }
            rotation(&g, theta)
        }
    }
}

pub fn central_difference(problem: &ProblemInstance, params: &[f64], h: f64, normalized: bool) -> Vec<f64> {
    (0..params.len())
        .map(|k| {
            let mut p = params.to_vec();
            p[k] += h;
            let up = cost(problem, &p, normalized).unwrap();
            p[k] -= 2.0 * h;
            let down = cost(problem, &p, normalized).unwrap();
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn random_params(rng: &mut Rng, k: usize) -> Vec<f64> {
    (0..k)
        .map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect()
}

/// A random instance from one of the three families with `n <= 5` and
/// `K <= 40`.
pub fn small_family_instance(rng: &mut Rng, which: usize) -> ProblemInstance {
    let ranges = match which % 3 {
        0 => FamilyDistribution::StatePrep {
            n: [1, 5],
            d: [1, 8],
            p: None,
        },
        1 => FamilyDistribution::MaxCut {
            n: [2, 5],
            d: [1, 8],
            edge_prob: [0.3, 0.9],
        },
        _ => FamilyDistribution::Fhm {
            l: [1, 2],
            d: [1, 3],
            u: [0.5, 10.0],
        },
    };
    let cfg = DistributionConfig::new(ranges, 0);
    loop {
        let p = flip_core::problems::sample_problem(&cfg, rng).unwrap();
        if p.n_params() <= 40 && p.circuit().n_qubits() <= 5 {
            return p;
        }
    }
}

pub fn rel_close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= abs.max(rel * a.abs().max(b.abs()))
}

/// Dense matrix of an observable assembled from Kronecker products.
pub fn dense(obs: &Observable) -> Mat {
    let n = obs.n_qubits();
    let mut m = Mat::zeros(1 << n, 1 << n);
    for (c, p) in obs.terms() {
        m += pauli_matrix(n, &p.ops()) * C::new(*c, 0.0);
    }
    m
}

pub fn sorted_spectrum(m: Mat) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Hubbard Hamiltonian built in the occupation basis with canonical
/// anticommutation signs. Modes are ordered spin-up block then spin-down
/// block, which differs from the qubit layout on purpose.
pub fn fock_hubbard(l: usize, u: f64) -> Mat {
    let n = 2 * l;
    let dim = 1usize << n;
    let mode = |site: usize, down: bool| site + if down { l } else { 0 };
    // c_m |b⟩ with the sign of the occupied modes below m
    let annihilate = |m: usize, b: usize| -> Option<(f64, usize)> {
        if b >> m & 1 == 0 {
            return None;
        }
        let sign = if (b & ((1 << m) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, b ^ (1 << m)))
    };
    let create = |m: usize, b: usize| -> Option<(f64, usize)> {
        if b >> m & 1 == 1 {
            return None;
        }
        let sign = if (b & ((1 << m) - 1)).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        Some((sign, b | (1 << m)))
    };
    let mu = u / 2.0;
    let mut h = Mat::zeros(dim, dim);
    for b in 0..dim {
        for down in [false, true] {
            for j in 0..l.saturating_sub(1) {
                for (from, to) in [(mode(j, down), mode(j + 1, down)), (mode(j + 1, down), mode(j, down))] {
                    if let Some((s1, b1)) = annihilate(from, b) {
                        if let Some((s2, b2)) = create(to, b1) {
                            h[(b2, b)] += C::new(-s1 * s2, 0.0);
                        }
                    }
                }
            }
        }
        let occ = |m: usize| (b >> m & 1) as f64;
        let mut diag = 0.0;
        for j in 0..l {
            diag += u * occ(mode(j, false)) * occ(mode(j, true));
            diag -= mu * (occ(mode(j, false)) + occ(mode(j, true)));
        }
        h[(b, b)] += C::new(diag, 0.0);
    }
    h
}
