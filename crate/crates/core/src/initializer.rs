//! Per-family parameter encoders and the decoder network that maps each
//! encoding to an initial angle.

use std::collections::hash_map::DefaultHasher;
use std::f64::consts::PI;
use std::hash::{Hash, Hasher};
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{config, contract, FlipError, Result};
use crate::problems::{ldca_circuit, qaoa_circuit, state_prep_circuit, Family, FhmSpec, Graph, MaxCutSpec, ProblemInstance, ProblemSpec, StatePrepSpec};
use crate::seed::{rng_from_seed, Rng};
use crate::simulator::{SlotMeta, SlotRole};

pub const DEFAULT_DIVISOR: f64 = 10.0;
pub const OUTPUT_SCALE: f64 = PI;
pub const CHECKPOINT_FORMAT: u32 = 1;

pub const STATE_PREP_WIDTH: usize = 5;
pub const QAOA_WIDTH: usize = 3;
pub const LDCA_WIDTH: usize = 13;
const LDCA_GATE_TYPES: usize = 8;

/// Width `S` of one slot encoding.
pub fn encoding_width(family: Family) -> Result<usize> {
    match family {
        Family::StatePrep => Ok(STATE_PREP_WIDTH),
        Family::MaxCut => Ok(QAOA_WIDTH),
        Family::Fhm => Ok(LDCA_WIDTH),
        Family::Custom => Err(contract("custom problems have no encoder")),
    }
}

/// Decoder shape used for each family: input, hidden widths, output 1.
pub fn default_layer_dims(family: Family) -> Result<Vec<usize>> {
    let (hidden, width) = match family {
        Family::StatePrep => (6, 30),
        Family::MaxCut => (4, 30),
        Family::Fhm => (4, 20),
        Family::Custom => return Err(contract("custom problems have no decoder")),
    };
    let mut dims = vec![encoding_width(family)?];
    dims.extend(std::iter::repeat_n(width, hidden));
    dims.push(1);
    Ok(dims)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub family: Family,
    pub divisor: f64,
}

impl EncoderConfig {
    pub fn new(family: Family, divisor: f64) -> Result<Self> {
        let cfg = Self { family, divisor };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_default_divisor(family: Family) -> Result<Self> {
        Self::new(family, DEFAULT_DIVISOR)
    }

    pub fn validate(&self) -> Result<()> {
        encoding_width(self.family)?;
        if !(10.0..=15.0).contains(&self.divisor) {
            return Err(config(format!("divisor {} outside [10, 15]", self.divisor)));
        }
        Ok(())
    }
}

/// One encoding row per parameter slot, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodingMatrix {
    width: usize,
    data: Vec<f64>,
}

impl EncodingMatrix {
    pub fn from_rows(width: usize, rows: &[Vec<f64>]) -> Result<Self> {
        if width == 0 {
            return Err(contract("encoding width must be positive"));
        }
        let mut data = Vec::with_capacity(rows.len() * width);
        for r in rows {
            if r.len() != width {
                return Err(contract(format!("row of width {} in a width-{width} matrix", r.len())));
            }
            data.extend_from_slice(r);
        }
        Ok(Self { width, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn n_rows(&self) -> usize {
        self.data.len() / self.width
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.width..(k + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.width)
    }
}

fn slot_of(slots: &[SlotMeta], slot: usize) -> Result<&SlotMeta> {
    slots.get(slot).ok_or(FlipError::Index {
        what: "parameter slot",
        index: slot,
        bound: slots.len(),
    })
}

fn state_prep_row(spec: &StatePrepSpec, meta: &SlotMeta, div: f64) -> Vec<f64> {
    [meta.qubit + 1, meta.layer + 1, spec.d, spec.n, spec.p]
        .iter()
        .map(|&v| v as f64 / div)
        .collect()
}

fn qaoa_row(d: usize, meta: &SlotMeta, div: f64) -> Vec<f64> {
    let is_mixer = matches!(meta.role, SlotRole::QaoaMixer);
    vec![(meta.layer + 1) as f64 / div, d as f64 / div, f64::from(u8::from(is_mixer))]
}

fn ldca_type_index(role: SlotRole) -> Result<usize> {
    Ok(match role {
        SlotRole::RzOnZero => 0,
        SlotRole::RzOnOne => 1,
        SlotRole::XxYy { even: true } => 2,
        SlotRole::XxYy { even: false } => 3,
        SlotRole::Zz { even: true } => 4,
        SlotRole::Zz { even: false } => 5,
        SlotRole::XyYx { even: true } => 6,
        SlotRole::XyYx { even: false } => 7,
        other => return Err(contract(format!("slot role {other:?} is not an LDCA gate"))),
    })
}

fn ldca_row(spec: &FhmSpec, meta: &SlotMeta, div: f64) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(LDCA_WIDTH);
    row.push((meta.qubit + 1) as f64 / div);
    row.push((meta.layer + 1) as f64 / div);
    let mut onehot = [0.0; LDCA_GATE_TYPES];
    onehot[ldca_type_index(meta.role)?] = 1.0;
    row.extend(onehot);
    row.push(spec.d as f64 / div);
    row.push(spec.n_qubits() as f64 / div);
    row.push(spec.u / div);
    Ok(row)
}

/// `[qubit+1, layer+1, d, n, p] / divisor` for slot `k`.
pub fn encode_state_prep(spec: &StatePrepSpec, slot: usize, divisor: f64) -> Result<Vec<f64>> {
    let circuit = state_prep_circuit(*spec)?;
    Ok(state_prep_row(spec, slot_of(circuit.slots(), slot)?, divisor))
}

/// `[(layer+1)/divisor, d/divisor, is_mixer]` for slot `k`.
pub fn encode_qaoa(spec: &MaxCutSpec, slot: usize, divisor: f64) -> Result<Vec<f64>> {
    // the encoding ignores the graph, so any graph gives the same slot layout
    let circuit = qaoa_circuit(&Graph::complete(spec.graph.n_nodes.max(2)), spec.d)?;
    Ok(qaoa_row(spec.d, slot_of(circuit.slots(), slot)?, divisor))
}

/// `[qubit+1, layer+1, one-hot gate type (8), d, n, U]`, with every entry
/// except the one-hot block divided by the divisor.
pub fn encode_ldca(spec: &FhmSpec, slot: usize, divisor: f64) -> Result<Vec<f64>> {
    let circuit = ldca_circuit(spec.l, spec.d)?;
    ldca_row(spec, slot_of(circuit.slots(), slot)?, divisor)
}

/// Encodes every parameter slot of `problem` from its circuit's slot metadata.
pub fn encode_problem(problem: &ProblemInstance, cfg: &EncoderConfig) -> Result<EncodingMatrix> {
    cfg.validate()?;
    if problem.family() != cfg.family {
        return Err(contract(format!("encoder for {} given a {} problem", cfg.family, problem.family())));
    }
    let div = cfg.divisor;
    let slots = problem.circuit().slots();
    let rows: Vec<Vec<f64>> = match problem.spec() {
        ProblemSpec::StatePrep(s) => slots.iter().map(|m| state_prep_row(s, m, div)).collect(),
        ProblemSpec::MaxCut(s) => slots.iter().map(|m| qaoa_row(s.d, m, div)).collect(),
        ProblemSpec::Fhm(s) => slots.iter().map(|m| ldca_row(s, m, div)).collect::<Result<_>>()?,
        ProblemSpec::Custom { .. } => return Err(contract("custom problems have no encoder")),
    };
    EncodingMatrix::from_rows(encoding_width(cfg.family)?, &rows)
}

/// One dense layer; `weights` is row-major with shape `out × in`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Feed-forward network with rectifier hidden layers, a linear scalar
/// output, and a fixed output scale.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderNet {
    layer_dims: Vec<usize>,
    layers: Vec<Layer>,
    output_scale: f64,
}

/// Activation record of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    fingerprint: u64,
    rows: usize,
    /// Input of every layer, `rows × dims[i]` row-major.
    inputs: Vec<Vec<f64>>,
}

/// Gradient of a scalar with respect to every weight and bias.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoderGradient {
    pub layers: Vec<Layer>,
}

impl DecoderGradient {
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }
}

fn flatten_layers(layers: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in layers {
        out.extend_from_slice(&l.weights);
        out.extend_from_slice(&l.biases);
    }
    out
}

fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) || *dims.last().unwrap() != 1 {
        return Err(contract(format!("layer dims {dims:?} must be positive and end at 1")));
    }
    Ok(())
}

/// Uniform weights in `±√(1/fan_in)` and zero biases.
pub fn init_decoder(rng: &mut Rng, layer_dims: &[usize]) -> Result<DecoderNet> {
    check_dims(layer_dims)?;
    let layers = layer_dims
        .windows(2)
        .map(|w| {
            let bound = (1.0 / w[0] as f64).sqrt();
            Layer {
                weights: (0..w[0] * w[1]).map(|_| rng.random_range(-bound..=bound)).collect(),
                biases: vec![0.0; w[1]],
            }
        })
        .collect();
    Ok(DecoderNet {
        layer_dims: layer_dims.to_vec(),
        layers,
        output_scale: OUTPUT_SCALE,
    })
}

impl DecoderNet {
    pub fn from_layers(layer_dims: Vec<usize>, layers: Vec<Layer>, output_scale: f64) -> Result<Self> {
        check_dims(&layer_dims)?;
        if layers.len() + 1 != layer_dims.len() {
            return Err(contract("layer count does not match dims"));
        }
        for (w, l) in layer_dims.windows(2).zip(&layers) {
            if l.weights.len() != w[0] * w[1] || l.biases.len() != w[1] {
                return Err(contract(format!("layer {}→{} has wrong parameter counts", w[0], w[1])));
            }
        }
        if !output_scale.is_finite() {
            return Err(contract("output scale must be finite"));
        }
        Ok(Self {
            layer_dims,
            layers,
            output_scale,
        })
    }

    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        check_dims(layer_dims)?;
        let layers = layer_dims
            .windows(2)
            .map(|w| Layer {
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Self::from_layers(layer_dims.to_vec(), layers, OUTPUT_SCALE)
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn output_scale(&self) -> f64 {
        self.output_scale
    }

    pub fn input_width(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn n_weights(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// All weights and biases, layer by layer, weights before biases.
    pub fn flatten(&self) -> Vec<f64> {
        flatten_layers(&self.layers)
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_weights() {
            return Err(contract(format!("{} values for {} weights", flat.len(), self.n_weights())));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&flat[at..at + nw]);
            at += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&flat[at..at + nb]);
            at += nb;
        }
        Ok(())
    }

    fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.layer_dims.hash(&mut h);
        for l in &self.layers {
            for v in l.weights.iter().chain(&l.biases) {
                v.to_bits().hash(&mut h);
            }
        }
        self.output_scale.to_bits().hash(&mut h);
        h.finish()
    }

    /// `θ⁰_k = scale · net(row k)`, plus the cache for [`decode_backward`].
    pub fn forward(&self, enc: &EncodingMatrix) -> Result<(Vec<f64>, ForwardCache)> {
        if enc.width() != self.input_width() {
            return Err(contract(format!("encoding width {} but decoder input {}", enc.width(), self.input_width())));
        }
        let rows = enc.n_rows();
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut act = enc.data.clone();
        let last = self.layers.len() - 1;
        for (i, (w, layer)) in self.layer_dims.windows(2).zip(&self.layers).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let mut next = vec![0.0; rows * fan_out];
            for r in 0..rows {
                let x = &act[r * fan_in..(r + 1) * fan_in];
                for o in 0..fan_out {
                    let wrow = &layer.weights[o * fan_in..(o + 1) * fan_in];
                    let z = layer.biases[o] + wrow.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
                    next[r * fan_out + o] = if i == last { z } else { z.max(0.0) };
                }
            }
            inputs.push(std::mem::replace(&mut act, next));
        }
        let theta = act.into_iter().map(|v| v * self.output_scale).collect();
        let cache = ForwardCache {
            fingerprint: self.fingerprint(),
            rows,
            inputs,
        };
        Ok((theta, cache))
    }

    /// `Σ_k upstream_k · ∂θ⁰_k/∂φ`. Rectifiers use subgradient 0 at 0.
    pub fn backward(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<DecoderGradient> {
        if cache.fingerprint != self.fingerprint() || cache.inputs.len() != self.layers.len() {
            return Err(contract("forward cache is stale for this decoder"));
        }
        let rows = cache.rows;
        if upstream.len() != rows {
            return Err(contract(format!("upstream of length {} for {rows} outputs", upstream.len())));
        }
        let mut delta: Vec<f64> = upstream.iter().map(|u| u * self.output_scale).collect();
        let mut grads: Vec<Layer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let (fan_in, fan_out) = (self.layer_dims[i], self.layer_dims[i + 1]);
            let x = &cache.inputs[i];
            let layer = &self.layers[i];
            let mut gw = vec![0.0; fan_in * fan_out];
            let mut gb = vec![0.0; fan_out];
            let mut back = vec![0.0; rows * fan_in];
            for r in 0..rows {
                let xr = &x[r * fan_in..(r + 1) * fan_in];
                for o in 0..fan_out {
                    let dz = delta[r * fan_out + o];
                    if dz == 0.0 {
                        continue;
                    }
                    gb[o] += dz;
                    let wrow = &layer.weights[o * fan_in..(o + 1) * fan_in];
                    for j in 0..fan_in {
                        gw[o * fan_in + j] += dz * xr[j];
                        back[r * fan_in + j] += dz * wrow[j];
                    }
                }
            }
            if i > 0 {
                // the input of layer i is the rectified output of layer i-1
                for (b, &a) in back.iter_mut().zip(x) {
                    if a <= 0.0 {
                        *b = 0.0;
                    }
                }
            }
            grads.push(Layer { weights: gw, biases: gb });
            delta = back;
        }
        grads.reverse();
        Ok(DecoderGradient { layers: grads })
    }
}

pub fn decode_forward(net: &DecoderNet, enc: &EncodingMatrix) -> Result<(Vec<f64>, ForwardCache)> {
    net.forward(enc)
}

pub fn decode_backward(net: &DecoderNet, cache: &ForwardCache, upstream: &[f64]) -> Result<DecoderGradient> {
    net.backward(cache, upstream)
}

/// A trained (or freshly initialized) FLIP initializer for one family.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipInitializer {
    pub encoder: EncoderConfig,
    pub net: DecoderNet,
    pub rng_seed: u64,
}

impl FlipInitializer {
    /// Fresh decoder with the family's default shape.
    pub fn new(family: Family, rng_seed: u64) -> Result<Self> {
        let encoder = EncoderConfig::with_default_divisor(family)?;
        let mut rng = rng_from_seed(rng_seed);
        let net = init_decoder(&mut rng, &default_layer_dims(family)?)?;
        Ok(Self { encoder, net, rng_seed })
    }

    pub fn family(&self) -> Family {
        self.encoder.family
    }

    pub fn initialize(&self, problem: &ProblemInstance) -> Result<Vec<f64>> {
        let enc = encode_problem(problem, &self.encoder)?;
        Ok(self.net.forward(&enc)?.0)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT,
            family: self.encoder.family,
            layer_dims: self.net.layer_dims.clone(),
            divisor: self.encoder.divisor,
            output_scale: self.net.output_scale,
            weights: self.net.layers.iter().map(|l| l.weights.clone()).collect(),
            biases: self.net.layers.iter().map(|l| l.biases.clone()).collect(),
            rng_seed: self.rng_seed,
        }
    }

    pub fn from_checkpoint(ck: Checkpoint) -> Result<Self> {
        if ck.format_version != CHECKPOINT_FORMAT {
            return Err(config(format!("checkpoint format {} (expected {CHECKPOINT_FORMAT})", ck.format_version)));
        }
        let encoder = EncoderConfig::new(ck.family, ck.divisor)?;
        if ck.layer_dims.first() != Some(&encoding_width(ck.family)?) {
            return Err(config(format!("layer dims {:?} do not start at the {} encoding width", ck.layer_dims, ck.family)));
        }
        if ck.weights.len() != ck.biases.len() {
            return Err(config("weights and biases have different layer counts"));
        }
        let layers = ck
            .weights
            .into_iter()
            .zip(ck.biases)
            .map(|(weights, biases)| Layer { weights, biases })
            .collect();
        let net = DecoderNet::from_layers(ck.layer_dims, layers, ck.output_scale).map_err(|e| config(e.to_string()))?;
        Ok(Self {
            encoder,
            net,
            rng_seed: ck.rng_seed,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_checkpoint())?;
        std::fs::write(path, json + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_checkpoint(serde_json::from_str(&text)?)
    }
}

/// Decoder checkpoint as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub family: Family,
    pub layer_dims: Vec<usize>,
    pub divisor: f64,
    pub output_scale: f64,
    /// Row-major `out × in` weight matrix per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
    pub rng_seed: u64,
}
