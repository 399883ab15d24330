//! Problem families: state preparation, QAOA max-cut, and the 1D Fermi–Hubbard
//! model with a number-preserving brickwork ansatz.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, FlipError, Result};
use crate::seed::{rng_from_seed, Rng};
use crate::simulator::{hadamard_like_layer, Circuit, Gate, GateKind, Observable, Pauli, PauliString, SlotMeta, SlotRole, MAX_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    StatePrep,
    MaxCut,
    Fhm,
    /// Hand-built instances outside the three families.
    Custom,
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::StatePrep => "state_prep",
            Family::MaxCut => "max_cut",
            Family::Fhm => "fhm",
            Family::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatePrepSpec {
    pub n: usize,
    pub d: usize,
    /// 1-based target position.
    pub p: usize,
}

impl StatePrepSpec {
    pub fn target(&self) -> u64 {
        1u64 << (self.p - 1)
    }

    pub fn n_params(&self) -> usize {
        self.n * self.d
    }
}

/// Undirected simple graph as an edge list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    pub n_nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Normalizes each edge to `(min, max)`; rejects self-loops, duplicates
    /// and out-of-range nodes.
    pub fn new(n_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for (a, b) in edges {
            if a == b {
                return Err(contract(format!("self-loop on node {a}")));
            }
            if a.max(b) >= n_nodes {
                return Err(FlipError::Index {
                    what: "graph node",
                    index: a.max(b),
                    bound: n_nodes,
                });
            }
            let e = (a.min(b), a.max(b));
            if out.contains(&e) {
                return Err(contract(format!("duplicate edge {e:?}")));
            }
            out.push(e);
        }
        Ok(Self { n_nodes, edges: out })
    }

    pub fn complete(n_nodes: usize) -> Self {
        let edges = (0..n_nodes)
            .flat_map(|i| (i + 1..n_nodes).map(move |j| (i, j)))
            .collect();
        Self { n_nodes, edges }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Graph = serde_json::from_str(s)?;
        Graph::new(raw.n_nodes, raw.edges)
    }

    /// Size of the maximum cut by enumeration of all partitions.
    pub fn max_cut_brute_force(&self) -> usize {
        (0u64..1 << self.n_nodes)
            .map(|s| {
                self.edges
                    .iter()
                    .filter(|&&(i, j)| (s >> i & 1) != (s >> j & 1))
                    .count()
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxCutSpec {
    pub graph: Graph,
    pub d: usize,
    /// Edge probability the graph was drawn with; metadata only.
    pub edge_prob: f64,
}

impl MaxCutSpec {
    pub fn n_params(&self) -> usize {
        2 * self.d
    }
}

/// 1D Fermi–Hubbard chain at half filling; tunneling `t = 1`, `μ = U/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FhmSpec {
    /// Number of sites.
    pub l: usize,
    pub u: f64,
    /// Brickwork sublayers.
    pub d: usize,
}

impl FhmSpec {
    pub const T: f64 = 1.0;

    pub fn mu(&self) -> f64 {
        self.u / 2.0
    }

    pub fn n_qubits(&self) -> usize {
        2 * self.l
    }

    pub fn n_params(&self) -> usize {
        let n = self.n_qubits();
        3 * self.d * (n - 1) + n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProblemSpec {
    StatePrep(StatePrepSpec),
    MaxCut(MaxCutSpec),
    Fhm(FhmSpec),
    Custom { label: String },
}

impl ProblemSpec {
    pub fn family(&self) -> Family {
        match self {
            ProblemSpec::StatePrep(_) => Family::StatePrep,
            ProblemSpec::MaxCut(_) => Family::MaxCut,
            ProblemSpec::Fhm(_) => Family::Fhm,
            ProblemSpec::Custom { .. } => Family::Custom,
        }
    }

    pub fn build(&self) -> Result<ProblemInstance> {
        match self {
            ProblemSpec::StatePrep(s) => build_state_prep(*s),
            ProblemSpec::MaxCut(s) => build_maxcut(s.clone()),
            ProblemSpec::Fhm(s) => build_fhm(*s),
            ProblemSpec::Custom { label } => Err(contract(format!("custom problem {label:?} has no builder"))),
        }
    }
}

/// A circuit, an observable, and the basis state the circuit starts from.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    circuit: Arc<Circuit>,
    observable: Arc<Observable>,
    initial_state: u64,
    spec: ProblemSpec,
    c_min: Option<f64>,
}

impl ProblemInstance {
    pub fn new(circuit: Circuit, observable: Observable, initial_state: u64, spec: ProblemSpec, c_min: Option<f64>) -> Result<Self> {
        if circuit.n_qubits() != observable.n_qubits() {
            return Err(contract("circuit and observable sizes differ"));
        }
        Ok(Self {
            circuit: Arc::new(circuit),
            observable: Arc::new(observable),
            initial_state,
            spec,
            c_min,
        })
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn observable(&self) -> &Observable {
        &self.observable
    }

    pub fn initial_state(&self) -> u64 {
        self.initial_state
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn family(&self) -> Family {
        self.spec.family()
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    /// Exact minimum of the l1-normalized cost, when known.
    pub fn c_min(&self) -> Option<f64> {
        self.c_min
    }

    /// Exact minimum of the raw cost, when known.
    pub fn c_min_raw(&self) -> Option<f64> {
        self.c_min.map(|c| c * self.observable.l1_norm())
    }
}

// ---------------------------------------------------------------------------
// State preparation
// ---------------------------------------------------------------------------

/// `−|t⟩⟨t|` expanded as `−(1/2ⁿ) Π_q (I ± Z_q)`.
pub fn projector_observable(n: usize, target: u64) -> Result<Observable> {
    if n > MAX_QUBITS {
        return Err(FlipError::Capacity(format!("{n} qubits")));
    }
    let scale = -1.0 / (1u64 << n) as f64;
    let terms = (0u64..1 << n).map(|z| {
        let negatives = (z & target).count_ones();
        let c = if negatives % 2 == 0 { scale } else { -scale };
        let ops: Vec<(usize, Pauli)> = (0..n).filter(|q| z >> q & 1 == 1).map(|q| (q, Pauli::Z)).collect();
        (c, PauliString::from_ops(&ops).expect("distinct qubits"))
    });
    Observable::new(n, terms)
}

/// RY layers with a CZ ring after each; slot `k` sits on qubit `k mod n`,
/// layer `k div n`.
pub fn state_prep_circuit(spec: StatePrepSpec) -> Result<Circuit> {
    let StatePrepSpec { n, d, p } = spec;
    if n == 0 || n > MAX_QUBITS {
        return Err(FlipError::Capacity(format!("state prep with n = {n}")));
    }
    if d == 0 {
        return Err(contract("state prep needs d >= 1"));
    }
    if p == 0 || p > n {
        return Err(contract(format!("target position {p} outside [1, {n}]")));
    }
    let mut gates = Vec::new();
    let mut slots = Vec::new();
    for layer in 0..d {
        for q in 0..n {
            gates.push(Gate::param(GateKind::Ry, vec![q], slots.len()));
            slots.push(SlotMeta {
                qubit: q,
                layer,
                role: SlotRole::Ry,
            });
        }
        match n {
            1 => {}
            2 => gates.push(Gate::cz(0, 1)),
            _ => gates.extend((0..n).map(|q| Gate::cz(q, (q + 1) % n))),
        }
    }
    Circuit::new(n, d, gates, slots)
}

pub fn build_state_prep(spec: StatePrepSpec) -> Result<ProblemInstance> {
    let circuit = state_prep_circuit(spec)?;
    let obs = projector_observable(spec.n, spec.target())?;
    ProblemInstance::new(circuit, obs, 0, ProblemSpec::StatePrep(spec), Some(-1.0))
}

// ---------------------------------------------------------------------------
// Max-cut
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmptyGraphPolicy {
    Resample,
    Accept,
}

/// G(n, e): each of the `n(n−1)/2` edges is kept independently with
/// probability `e`.
pub fn sample_erdos_renyi(n: usize, e: f64, rng: &mut Rng, policy: EmptyGraphPolicy) -> Result<Graph> {
    if !(0.0..=1.0).contains(&e) {
        return Err(config(format!("edge probability {e} outside [0, 1]")));
    }
    if policy == EmptyGraphPolicy::Resample && (n < 2 || e == 0.0) {
        return Err(contract("resampling can never produce a nonempty graph"));
    }
    loop {
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random::<f64>() < e {
                    edges.push((i, j));
                }
            }
        }
        if !edges.is_empty() || policy == EmptyGraphPolicy::Accept {
            return Ok(Graph { n_nodes: n, edges });
        }
    }
}

pub fn maxcut_observable(graph: &Graph) -> Result<Observable> {
    let terms = graph.edges.iter().map(|&(i, j)| {
        (1.0, PauliString::from_ops(&[(i, Pauli::Z), (j, Pauli::Z)]).expect("validated edge"))
    });
    Observable::new(graph.n_nodes, terms)
}

/// Fixed RY(π/2) layer, then `d` rounds of problem and mixer unitaries;
/// slot `2l` is γ of round `l`, slot `2l + 1` is β.
pub fn qaoa_circuit(graph: &Graph, d: usize) -> Result<Circuit> {
    if d == 0 {
        return Err(contract("QAOA needs d >= 1"));
    }
    let n = graph.n_nodes;
    if n > MAX_QUBITS {
        return Err(FlipError::Capacity(format!("{n} nodes")));
    }
    let mut gates = hadamard_like_layer(n);
    let mut slots = Vec::new();
    for layer in 0..d {
        gates.push(Gate::qaoa_problem(n, graph.edges.clone(), 2 * layer));
        slots.push(SlotMeta {
            qubit: 0,
            layer,
            role: SlotRole::QaoaProblem,
        });
        gates.push(Gate::qaoa_mixer(n, 2 * layer + 1));
        slots.push(SlotMeta {
            qubit: 0,
            layer,
            role: SlotRole::QaoaMixer,
        });
    }
    Circuit::new(n, d, gates, slots)
}

pub fn build_maxcut(spec: MaxCutSpec) -> Result<ProblemInstance> {
    let graph = Graph::new(spec.graph.n_nodes, spec.graph.edges.iter().copied())?;
    if graph.edges.is_empty() {
        return Err(contract("max-cut needs a nonempty graph"));
    }
    let circuit = qaoa_circuit(&graph, spec.d)?;
    let obs = maxcut_observable(&graph)?;
    let c_min = exact_min(&obs, None)? / obs.l1_norm();
    ProblemInstance::new(circuit, obs, 0, ProblemSpec::MaxCut(MaxCutSpec { graph, ..spec }), Some(c_min))
}

// ---------------------------------------------------------------------------
// Fermi–Hubbard
// ---------------------------------------------------------------------------

/// Qubit of spin orbital `(site, spin)`; spin-up first, interleaved per site.
pub fn fermion_mode(site: usize, down: bool) -> usize {
    2 * site + usize::from(down)
}

/// Jordan–Wigner image of the 1D Hubbard Hamiltonian. Identity terms are kept.
pub fn jordan_wigner(spec: &FhmSpec) -> Result<Observable> {
    if spec.l == 0 {
        return Err(contract("FHM needs L >= 1"));
    }
    let n = spec.n_qubits();
    if n > MAX_QUBITS {
        return Err(FlipError::Capacity(format!("FHM with L = {}", spec.l)));
    }
    let mut terms = Vec::new();
    let t = FhmSpec::T;
    for down in [false, true] {
        for j in 0..spec.l.saturating_sub(1) {
            let (p, q) = (fermion_mode(j, down), fermion_mode(j + 1, down));
            for op in [Pauli::X, Pauli::Y] {
                let mut ops = vec![(p, op), (q, op)];
                ops.extend((p + 1..q).map(|k| (k, Pauli::Z)));
                terms.push((-t / 2.0, PauliString::from_ops(&ops)?));
            }
        }
    }
    let id = PauliString::identity();
    for j in 0..spec.l {
        let (a, b) = (fermion_mode(j, false), fermion_mode(j, true));
        let za = PauliString::single(a, Pauli::Z);
        let zb = PauliString::single(b, Pauli::Z);
        let zz = PauliString::from_ops(&[(a, Pauli::Z), (b, Pauli::Z)])?;
        // U n↑n↓ = U/4 (I − Z_a − Z_b + Z_a Z_b)
        let u4 = spec.u / 4.0;
        terms.extend([(u4, id), (-u4, za), (-u4, zb), (u4, zz)]);
        // −μ n = −μ/2 (I − Z)
        let m2 = spec.mu() / 2.0;
        terms.extend([(-m2, id), (m2, za), (-m2, id), (m2, zb)]);
    }
    Observable::new(n, terms)
}

/// Half-filled initial occupation: doubly occupied sites 0, 2, 4, … with a
/// single spin-up electron on the next even site when `L` is odd.
pub fn fhm_initial_state(l: usize) -> u64 {
    let mut mask = 0u64;
    let mut remaining = l;
    let mut site = 0;
    while remaining >= 2 {
        mask |= 1 << fermion_mode(site, false);
        mask |= 1 << fermion_mode(site, true);
        remaining -= 2;
        site += 2;
    }
    if remaining == 1 {
        mask |= 1 << fermion_mode(site, false);
    }
    mask
}

/// Number-preserving brickwork ansatz over `n = 2L` qubits.
///
/// One `RZ` per qubit, then `d` sublayers; each sublayer is an even brick
/// (pairs (0,1),(2,3),…) followed by an odd brick (pairs (1,2),(3,4),…), and
/// every pair carries `[RXXpYY, RZZ, RXYmYX]`.
pub fn ldca_circuit(l: usize, d: usize) -> Result<Circuit> {
    if l == 0 || d == 0 {
        return Err(contract("LDCA needs L >= 1 and d >= 1"));
    }
    let n = 2 * l;
    if n > MAX_QUBITS {
        return Err(FlipError::Capacity(format!("LDCA with L = {l}")));
    }
    let initial = fhm_initial_state(l);
    let mut gates = Vec::new();
    let mut slots = Vec::new();
    for q in 0..n {
        gates.push(Gate::param(GateKind::Rz, vec![q], slots.len()));
        let role = if initial >> q & 1 == 1 {
            SlotRole::RzOnOne
        } else {
            SlotRole::RzOnZero
        };
        slots.push(SlotMeta {
            qubit: q,
            layer: 0,
            role,
        });
    }
    for layer in 0..d {
        for even in [true, false] {
            let start = if even { 0 } else { 1 };
            for a in (start..n.saturating_sub(1)).step_by(2) {
                let blocks = [
                    (GateKind::RxxPlusYy, SlotRole::XxYy { even }),
                    (GateKind::Rzz, SlotRole::Zz { even }),
                    (GateKind::RxyMinusYx, SlotRole::XyYx { even }),
                ];
                for (kind, role) in blocks {
                    gates.push(Gate::param(kind, vec![a, a + 1], slots.len()));
                    slots.push(SlotMeta {
                        qubit: a,
                        layer,
                        role,
                    });
                }
            }
        }
    }
    Circuit::new(n, d, gates, slots)
}

/// Sites for which the exact ground energy is computed at build time.
pub const FHM_EXACT_MAX_SITES: usize = 5;

pub fn build_fhm(spec: FhmSpec) -> Result<ProblemInstance> {
    if spec.l > MAX_QUBITS / 2 {
        return Err(FlipError::Capacity(format!("FHM with L = {} (max 10)", spec.l)));
    }
    if !spec.u.is_finite() {
        return Err(contract("interaction strength must be finite"));
    }
    let obs = jordan_wigner(&spec)?;
    let circuit = ldca_circuit(spec.l, spec.d)?;
    let initial = fhm_initial_state(spec.l);
    let c_min = if spec.l <= FHM_EXACT_MAX_SITES {
        let sector = Sector::spin_of(initial);
        Some(exact_min(&obs, Some(sector))? / obs.l1_norm())
    } else {
        None
    };
    ProblemInstance::new(circuit, obs, initial, ProblemSpec::Fhm(spec), c_min)
}

// ---------------------------------------------------------------------------
// Exact minima
// ---------------------------------------------------------------------------

const EVEN_BITS: u64 = 0x5555_5555_5555_5555;

/// Symmetry sector restricting the exact minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    /// Fixed total Hamming weight.
    HammingWeight(usize),
    /// Fixed spin-up (even qubits) and spin-down (odd qubits) counts.
    Spin { up: usize, down: usize },
}

impl Sector {
    pub fn spin_of(basis: u64) -> Self {
        Sector::Spin {
            up: (basis & EVEN_BITS).count_ones() as usize,
            down: (basis & !EVEN_BITS).count_ones() as usize,
        }
    }

    pub fn contains(&self, basis: u64) -> bool {
        match *self {
            Sector::HammingWeight(w) => basis.count_ones() as usize == w,
            Sector::Spin { up, down } => {
                (basis & EVEN_BITS).count_ones() as usize == up
                    && (basis & !EVEN_BITS).count_ones() as usize == down
            }
        }
    }
}

/// Largest dense matrix handed to the Hermitian eigensolver.
pub const MAX_DENSE_DIM: usize = 4096;

/// Minimum eigenvalue of `obs`, optionally within a sector. Diagonal
/// observables are enumerated; otherwise the (sector) matrix is diagonalized
/// densely. The sector is assumed invariant under `obs`.
pub fn exact_min(obs: &Observable, sector: Option<Sector>) -> Result<f64> {
    let n = obs.n_qubits();
    let basis: Vec<u64> = (0u64..1 << n)
        .filter(|&b| sector.is_none_or(|s| s.contains(b)))
        .collect();
    if basis.is_empty() {
        return Err(contract("empty sector"));
    }
    if obs.is_diagonal() {
        let diag = obs.diagonal();
        return Ok(basis
            .iter()
            .map(|&b| diag[b as usize])
            .fold(f64::INFINITY, f64::min));
    }
    if basis.len() > MAX_DENSE_DIM {
        return Err(FlipError::Capacity(format!(
            "dense diagonalization of dimension {}",
            basis.len()
        )));
    }
    let mut index = vec![usize::MAX; 1 << n];
    for (i, &b) in basis.iter().enumerate() {
        index[b as usize] = i;
    }
    let dim = basis.len();
    let mut h = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &b) in basis.iter().enumerate() {
        for &(c, p) in obs.terms() {
            let row = index[(b ^ p.flip_mask()) as usize];
            if row != usize::MAX {
                h[(row, col)] += c * p.phase_on(b, p.y_factor());
            }
        }
    }
    let eig = h.symmetric_eigenvalues();
    Ok(eig.iter().copied().fold(f64::INFINITY, f64::min))
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilyDistribution {
    StatePrep {
        n: [usize; 2],
        d: [usize; 2],
        /// Target-position range, clipped to `[1, n]`; defaults to `[1, n]`.
        #[serde(default)]
        p: Option<[usize; 2]>,
    },
    MaxCut {
        n: [usize; 2],
        d: [usize; 2],
        edge_prob: [f64; 2],
    },
    Fhm {
        l: [usize; 2],
        d: [usize; 2],
        u: [f64; 2],
    },
}

/// Uniform distribution over problem specs of one family. Integer ranges are
/// inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionConfig {
    #[serde(flatten)]
    pub ranges: FamilyDistribution,
    #[serde(default)]
    pub rng_seed: u64,
}

fn check_int(name: &str, r: [usize; 2], lo: usize, hi: usize) -> Result<()> {
    if r[0] > r[1] || r[0] < lo || r[1] > hi {
        return Err(config(format!("{name} range {r:?} must satisfy {lo} <= min <= max <= {hi}")));
    }
    Ok(())
}

fn check_real(name: &str, r: [f64; 2], lo: f64, hi: f64) -> Result<()> {
    if !(r[0] <= r[1] && r[0] >= lo && r[1] <= hi) {
        return Err(config(format!("{name} range {r:?} must lie in [{lo}, {hi}] with min <= max")));
    }
    Ok(())
}

impl DistributionConfig {
    pub fn new(ranges: FamilyDistribution, rng_seed: u64) -> Self {
        Self { ranges, rng_seed }
    }

    pub fn family(&self) -> Family {
        match self.ranges {
            FamilyDistribution::StatePrep { .. } => Family::StatePrep,
            FamilyDistribution::MaxCut { .. } => Family::MaxCut,
            FamilyDistribution::Fhm { .. } => Family::Fhm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.ranges {
            FamilyDistribution::StatePrep { n, d, p } => {
                check_int("n", *n, 1, MAX_QUBITS)?;
                check_int("d", *d, 1, usize::MAX)?;
                if let Some(p) = p {
                    check_int("p", *p, 1, n[1])?;
                }
            }
            FamilyDistribution::MaxCut { n, d, edge_prob } => {
                check_int("n", *n, 2, MAX_QUBITS)?;
                check_int("d", *d, 1, usize::MAX)?;
                check_real("edge_prob", *edge_prob, f64::MIN_POSITIVE, 1.0)?;
            }
            FamilyDistribution::Fhm { l, d, u } => {
                check_int("l", *l, 1, MAX_QUBITS / 2)?;
                check_int("d", *d, 1, usize::MAX)?;
                check_real("u", *u, -1e6, 1e6)?;
            }
        }
        Ok(())
    }

    /// Draw one spec; `p` is clipped to `[1, n]` after `n` is drawn.
    pub fn sample_spec(&self, rng: &mut Rng) -> Result<ProblemSpec> {
        self.validate()?;
        let int = |rng: &mut Rng, r: [usize; 2]| rng.random_range(r[0]..=r[1]);
        let real = |rng: &mut Rng, r: [f64; 2]| {
            if r[0] == r[1] {
                r[0]
            } else {
                rng.random_range(r[0]..r[1])
            }
        };
        Ok(match &self.ranges {
            FamilyDistribution::StatePrep { n, d, p } => {
                let n = int(rng, *n);
                let d = int(rng, *d);
                let pr = p.unwrap_or([1, n]);
                let (lo, hi) = (pr[0].min(n), pr[1].min(n));
                let p = rng.random_range(lo..=hi);
                ProblemSpec::StatePrep(StatePrepSpec { n, d, p })
            }
            FamilyDistribution::MaxCut { n, d, edge_prob } => {
                let n = int(rng, *n);
                let d = int(rng, *d);
                let e = real(rng, *edge_prob);
                let graph = sample_erdos_renyi(n, e, rng, EmptyGraphPolicy::Resample)?;
                ProblemSpec::MaxCut(MaxCutSpec {
                    graph,
                    d,
                    edge_prob: e,
                })
            }
            FamilyDistribution::Fhm { l, d, u } => {
                let l = int(rng, *l);
                let d = int(rng, *d);
                let u = real(rng, *u);
                ProblemSpec::Fhm(FhmSpec { l, u, d })
            }
        })
    }
}

pub fn sample_problem(cfg: &DistributionConfig, rng: &mut Rng) -> Result<ProblemInstance> {
    cfg.sample_spec(rng)?.build()
}

/// `count` problems from the config's own seed.
pub fn sample_problems(cfg: &DistributionConfig, count: usize) -> Result<Vec<ProblemInstance>> {
    let mut rng = rng_from_seed(cfg.rng_seed);
    (0..count).map(|_| sample_problem(cfg, &mut rng)).collect()
}
