//! Feedforward tanh policy networks whose fully connected weights are
//! rewritten every timestep by per-synapse Hebbian rules.
//!
//! The rule applied to every connection `i -> j` is
//!
//! ```text
//! dw_ij = eta * (A * o_i * o_j + B * o_i + C * o_j + D)
//! ```
//!
//! where `o_i` is the input the layer received and `o_j` the post-tanh output
//! of that layer in the same forward pass. Layers carry no bias. An optional
//! convolutional frontend turns pixel observations into the first layer's
//! input; its parameters never change during a lifetime.

mod conv;
mod lifetime;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::Observation;
use crate::error::{Error, Result};
use crate::seed;

pub use conv::{ConvFrontendSpec, ConvLayerSpec};
pub use lifetime::{run_lifetime, Controller, LifetimeConfig, LifetimeHooks, NoHooks, RecordOptions};

/// Dense row-major matrix. For weight layers `rows` indexes the presynaptic
/// neuron and `cols` the postsynaptic one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape("Matrix::from_vec", rows * cols, data.len()));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Layer structure of a policy network. Activation is always tanh and no
/// layer has a bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkTopology {
    pub input_dim: usize,
    pub fc_layer_sizes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conv: Option<ConvFrontendSpec>,
}

impl NetworkTopology {
    pub fn new(input_dim: usize, fc_layer_sizes: Vec<usize>) -> Result<Self> {
        let topology = NetworkTopology {
            input_dim,
            fc_layer_sizes,
            conv: None,
        };
        topology.validate()?;
        Ok(topology)
    }

    /// Network fed by a convolutional frontend; the fc input size is the
    /// frontend's flattened output.
    pub fn with_conv(conv: ConvFrontendSpec, fc_layer_sizes: Vec<usize>) -> Result<Self> {
        conv.validate()?;
        let topology = NetworkTopology {
            input_dim: conv.output_dim(),
            fc_layer_sizes,
            conv: Some(conv),
        };
        topology.validate()?;
        Ok(topology)
    }

    /// The 28 -> 128 -> 64 -> 8 state-vector network used for the quadruped.
    pub fn quadruped() -> Self {
        Self::new(28, vec![128, 64, 8]).expect("static topology")
    }

    /// Two conv layers over 3x84x84 pixels feeding 128 -> 64 -> 3.
    pub fn vision() -> Self {
        Self::with_conv(ConvFrontendSpec::full_vision(), vec![128, 64, 3]).expect("static topology")
    }

    /// Small network for the desk-scale crawler with `legs` legs.
    pub fn desk_crawler(legs: usize) -> Self {
        Self::new(crate::envs::crawler::observation_dim(legs), vec![16, 8, legs]).expect("static topology")
    }

    /// Reduced conv frontend over a 1x16x16 patch feeding 16 -> 8 -> 3.
    pub fn desk_track() -> Self {
        Self::with_conv(ConvFrontendSpec::desk(), vec![16, 8, 3]).expect("static topology")
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Topology("input_dim must be positive".into()));
        }
        if self.fc_layer_sizes.is_empty() {
            return Err(Error::Topology("at least one fc layer is required".into()));
        }
        if let Some(k) = self.fc_layer_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Topology(format!("fc layer {k} has zero neurons")));
        }
        if let Some(conv) = &self.conv {
            conv.validate()?;
            if conv.output_dim() != self.input_dim {
                return Err(Error::Topology(format!(
                    "conv frontend flattens to {} features but input_dim is {}",
                    conv.output_dim(),
                    self.input_dim
                )));
            }
        }
        Ok(())
    }

    /// `(pre, post)` neuron counts of every fc layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut pre = self.input_dim;
        self.fc_layer_sizes
            .iter()
            .map(|&post| {
                let shape = (pre, post);
                pre = post;
                shape
            })
            .collect()
    }

    pub fn synapse_count(&self) -> usize {
        self.layer_shapes().iter().map(|(a, b)| a * b).sum()
    }

    pub fn conv_param_count(&self) -> usize {
        self.conv.as_ref().map_or(0, ConvFrontendSpec::param_count)
    }

    pub fn output_dim(&self) -> usize {
        *self.fc_layer_sizes.last().expect("validated topology")
    }

    /// Stable 64-bit fingerprint used to reject checkpoints and trajectories
    /// recorded for a different network.
    pub fn hash(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"topology/v1");
        h.update((self.input_dim as u64).to_le_bytes());
        for &n in &self.fc_layer_sizes {
            h.update((n as u64).to_le_bytes());
        }
        if let Some(conv) = &self.conv {
            h.update(b"conv");
            for v in [conv.input_channels, conv.input_height, conv.input_width] {
                h.update((v as u64).to_le_bytes());
            }
            for l in &conv.layers {
                for v in [l.in_channels, l.out_channels, l.kernel, l.stride, l.pool_window, l.pool_stride] {
                    h.update((v as u64).to_le_bytes());
                }
            }
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }
}

/// Distribution for the random weights an episode starts from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitDistribution {
    Uniform { half_width: f64 },
    Normal { std: f64 },
}

impl Default for InitDistribution {
    fn default() -> Self {
        InitDistribution::Uniform { half_width: 0.1 }
    }
}

impl InitDistribution {
    pub(crate) fn fill<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        match *self {
            InitDistribution::Uniform { half_width } => {
                for v in out {
                    *v = rng.random_range(-half_width..=half_width);
                }
            }
            InitDistribution::Normal { std } => {
                let normal = Normal::new(0.0, std).expect("finite std");
                for v in out {
                    *v = normal.sample(rng);
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    #[default]
    None,
    /// Divide a layer by its largest magnitude whenever that exceeds 1.
    LayerMaxAbs,
}

/// How the Hebbian update is interleaved with the forward pass.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOrder {
    /// One full forward pass, then every layer updated from that trace.
    #[default]
    Synchronous,
    /// Each layer is updated right after it fires and the next layer
    /// receives the output recomputed with the updated weights.
    Sequential,
}

/// The mutable fc weights of one network instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightState {
    pub layers: Vec<Matrix>,
    pub normalization: Normalization,
}

impl WeightState {
    pub fn zeros(topology: &NetworkTopology) -> Self {
        WeightState {
            layers: topology
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| Matrix::zeros(r, c))
                .collect(),
            normalization: Normalization::None,
        }
    }

    /// Samples every fc weight independently from `dist`.
    pub fn init(topology: &NetworkTopology, seed: u64, dist: InitDistribution) -> Self {
        let mut state = Self::zeros(topology);
        let mut rng = seed::rng(seed);
        for layer in &mut state.layers {
            dist.fill(&mut rng, layer.as_mut_slice());
        }
        state
    }

    /// Rebuilds weights from a flat row-major vector (layer by layer).
    pub fn from_flat(topology: &NetworkTopology, flat: &[f64]) -> Result<Self> {
        let expected = topology.synapse_count();
        if flat.len() != expected {
            return Err(Error::shape("WeightState::from_flat", expected, flat.len()));
        }
        let mut state = Self::zeros(topology);
        let mut offset = 0;
        for layer in &mut state.layers {
            let n = layer.len();
            layer.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(state)
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Self {
        self.normalization = normalization;
        self
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.synapse_count());
        self.flatten_into(&mut out);
        out
    }

    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(layer.as_slice());
        }
    }

    pub fn synapse_count(&self) -> usize {
        self.layers.iter().map(Matrix::len).sum()
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.layers.iter().map(Matrix::shape).collect()
    }

    pub fn matches(&self, topology: &NetworkTopology) -> bool {
        self.shapes() == topology.layer_shapes()
    }

    /// Applies the configured normalization to every layer.
    pub fn normalize(&mut self) {
        if self.normalization == Normalization::LayerMaxAbs {
            for layer in &mut self.layers {
                normalize_layer(layer);
            }
        }
    }
}

/// Scales a layer into `[-1, 1]` by its largest magnitude when that magnitude
/// exceeds one; otherwise the layer is left untouched.
pub fn normalize_layer(layer: &mut Matrix) {
    let m = layer.max_abs();
    if m > 1.0 {
        for v in layer.as_mut_slice() {
            *v /= m;
        }
    }
}

/// One of the five coefficient tensors of the rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CoefficientClass {
    A,
    B,
    C,
    D,
    Eta,
}

impl CoefficientClass {
    pub const ALL: [CoefficientClass; 5] = [Self::A, Self::B, Self::C, Self::D, Self::Eta];

    pub fn name(self) -> &'static str {
        match self {
            Self::A => "A",
            Self::B => "B",
            Self::C => "C",
            Self::D => "D",
            Self::Eta => "eta",
        }
    }
}

/// Which coefficients are evolved. Everything else is pinned: A-D to zero,
/// eta to one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlasticityVariant {
    #[serde(rename = "A_only")]
    AOnly,
    #[serde(rename = "A_plus_eta")]
    APlusEta,
    #[serde(rename = "AD")]
    AD,
    #[serde(rename = "ABCD")]
    ABCD,
    #[serde(rename = "ABCD_plus_eta")]
    ABCDPlusEta,
}

impl PlasticityVariant {
    pub const ALL: [PlasticityVariant; 5] = [Self::AOnly, Self::APlusEta, Self::AD, Self::ABCD, Self::ABCDPlusEta];

    pub fn active(self) -> &'static [CoefficientClass] {
        use CoefficientClass::*;
        match self {
            Self::AOnly => &[A],
            Self::APlusEta => &[A, Eta],
            Self::AD => &[A, D],
            Self::ABCD => &[A, B, C, D],
            Self::ABCDPlusEta => &[A, B, C, D, Eta],
        }
    }

    pub fn coefficients_per_synapse(self) -> usize {
        self.active().len()
    }

    pub fn is_active(self, class: CoefficientClass) -> bool {
        self.active().contains(&class)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::AOnly => "A_only",
            Self::APlusEta => "A_plus_eta",
            Self::AD => "AD",
            Self::ABCD => "ABCD",
            Self::ABCDPlusEta => "ABCD_plus_eta",
        }
    }
}

impl std::str::FromStr for PlasticityVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Invalid(format!("unknown plasticity variant `{s}`")))
    }
}

/// Per-connection rule coefficients, five tensors shaped like the weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HebbianCoefficients {
    pub variant: PlasticityVariant,
    pub a: Vec<Matrix>,
    pub b: Vec<Matrix>,
    pub c: Vec<Matrix>,
    pub d: Vec<Matrix>,
    pub eta: Vec<Matrix>,
}

impl HebbianCoefficients {
    /// Evolved tensors zeroed, pinned eta at one.
    pub fn zeros(topology: &NetworkTopology, variant: PlasticityVariant) -> Self {
        let shapes = topology.layer_shapes();
        let make = |v: f64| shapes.iter().map(|&(r, c)| Matrix::filled(r, c, v)).collect::<Vec<_>>();
        let eta_fill = if variant.is_active(CoefficientClass::Eta) { 0.0 } else { 1.0 };
        HebbianCoefficients {
            variant,
            a: make(0.0),
            b: make(0.0),
            c: make(0.0),
            d: make(0.0),
            eta: make(eta_fill),
        }
    }

    pub fn tensor(&self, class: CoefficientClass) -> &[Matrix] {
        match class {
            CoefficientClass::A => &self.a,
            CoefficientClass::B => &self.b,
            CoefficientClass::C => &self.c,
            CoefficientClass::D => &self.d,
            CoefficientClass::Eta => &self.eta,
        }
    }

    pub fn tensor_mut(&mut self, class: CoefficientClass) -> &mut [Matrix] {
        match class {
            CoefficientClass::A => &mut self.a,
            CoefficientClass::B => &mut self.b,
            CoefficientClass::C => &mut self.c,
            CoefficientClass::D => &mut self.d,
            CoefficientClass::Eta => &mut self.eta,
        }
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.a.iter().map(Matrix::shape).collect()
    }

    /// Number of evolved values.
    pub fn active_count(&self) -> usize {
        let per_class: usize = self.a.iter().map(Matrix::len).sum();
        per_class * self.variant.coefficients_per_synapse()
    }
}

/// Activations of one layer during one forward pass.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LayerTrace {
    /// What the layer received (`o_i`).
    pub pre: Vec<f64>,
    /// Post-tanh output (`o_j`).
    pub post: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub layers: Vec<LayerTrace>,
}

impl ActivationTrace {
    pub fn for_topology(topology: &NetworkTopology) -> Self {
        ActivationTrace {
            layers: topology
                .layer_shapes()
                .into_iter()
                .map(|(r, c)| LayerTrace {
                    pre: vec![0.0; r],
                    post: vec![0.0; c],
                })
                .collect(),
        }
    }

    /// The network output of the pass that produced this trace.
    pub fn output(&self) -> &[f64] {
        &self.layers.last().expect("non-empty trace").post
    }
}

fn layer_forward(weights: &Matrix, pre: &[f64], post: &mut [f64]) {
    post.iter_mut().for_each(|v| *v = 0.0);
    for (i, &x) in pre.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (acc, &w) in post.iter_mut().zip(weights.row(i)) {
            *acc += x * w;
        }
    }
    post.iter_mut().for_each(|v| *v = v.tanh());
}

/// Turns an observation into the fc input vector, running the conv frontend
/// when the topology has one.
pub fn preprocess(topology: &NetworkTopology, conv_params: Option<&[f64]>, obs: &Observation, out: &mut Vec<f64>) -> Result<()> {
    out.clear();
    match (&topology.conv, obs) {
        (Some(conv), Observation::Image(img)) => {
            let params = conv_params.ok_or_else(|| Error::shape("conv parameters", conv.param_count(), 0))?;
            conv.apply(params, img, out)
        }
        (Some(conv), Observation::Vector(v)) => Err(Error::shape(
            "observation",
            format!("{}x{}x{} image", conv.input_channels, conv.input_height, conv.input_width),
            format!("vector of {}", v.len()),
        )),
        (None, obs) => {
            let flat = obs.as_flat();
            if flat.len() != topology.input_dim {
                return Err(Error::shape("observation", topology.input_dim, flat.len()));
            }
            out.extend_from_slice(flat);
            Ok(())
        }
    }
}

/// Runs the fc stack on an already preprocessed input, filling `trace`.
pub fn forward_features(weights: &WeightState, features: &[f64], trace: &mut ActivationTrace) -> Result<()> {
    if weights.layers.len() != trace.layers.len() {
        return Err(Error::shape("trace layers", weights.layers.len(), trace.layers.len()));
    }
    let first = weights.layers.first().ok_or_else(|| Error::Topology("no layers".into()))?;
    if features.len() != first.rows() {
        return Err(Error::shape("fc input", first.rows(), features.len()));
    }
    for (l, w) in weights.layers.iter().enumerate() {
        let (head, tail) = trace.layers.split_at_mut(l);
        let lt = &mut tail[0];
        lt.pre.clear();
        if l == 0 {
            lt.pre.extend_from_slice(features);
        } else {
            lt.pre.extend_from_slice(&head[l - 1].post);
        }
        lt.post.resize(w.cols(), 0.0);
        layer_forward(w, &lt.pre, &mut lt.post);
    }
    Ok(())
}

/// Full forward pass: `tanh(W_n^T ... tanh(W_1^T x))`.
pub fn forward(
    topology: &NetworkTopology,
    weights: &WeightState,
    conv_params: Option<&[f64]>,
    obs: &Observation,
) -> Result<(Vec<f64>, ActivationTrace)> {
    if !weights.matches(topology) {
        return Err(Error::shape(
            "weights",
            format!("{:?}", topology.layer_shapes()),
            format!("{:?}", weights.shapes()),
        ));
    }
    let mut features = Vec::with_capacity(topology.input_dim);
    preprocess(topology, conv_params, obs, &mut features)?;
    let mut trace = ActivationTrace::for_topology(topology);
    forward_features(weights, &features, &mut trace)?;
    Ok((trace.output().to_vec(), trace))
}

/// Applies the rule to one layer in place. Returns false if any updated
/// weight is non-finite.
fn update_layer(
    w: &mut Matrix,
    coeffs: &HebbianCoefficients,
    layer: usize,
    pre: &[f64],
    post: &[f64],
) -> bool {
    let cols = w.cols();
    let a = coeffs.a[layer].as_slice();
    let b = coeffs.b[layer].as_slice();
    let c = coeffs.c[layer].as_slice();
    let d = coeffs.d[layer].as_slice();
    let eta = coeffs.eta[layer].as_slice();
    let mut finite = true;
    for (i, (&oi, w_row)) in pre.iter().zip(w.as_mut_slice().chunks_exact_mut(cols)).enumerate() {
        let r = i * cols..(i + 1) * cols;
        let (a, b, c, d, eta) = (&a[r.clone()], &b[r.clone()], &c[r.clone()], &d[r.clone()], &eta[r]);
        match coeffs.variant {
            PlasticityVariant::AOnly => {
                for (j, (wv, &oj)) in w_row.iter_mut().zip(post).enumerate() {
                    *wv += a[j] * oi * oj;
                    finite &= wv.is_finite();
                }
            }
            PlasticityVariant::APlusEta => {
                for (j, (wv, &oj)) in w_row.iter_mut().zip(post).enumerate() {
                    *wv += eta[j] * (a[j] * oi * oj);
                    finite &= wv.is_finite();
                }
            }
            PlasticityVariant::AD => {
                for (j, (wv, &oj)) in w_row.iter_mut().zip(post).enumerate() {
                    *wv += a[j] * oi * oj + d[j];
                    finite &= wv.is_finite();
                }
            }
            PlasticityVariant::ABCD => {
                for (j, (wv, &oj)) in w_row.iter_mut().zip(post).enumerate() {
                    *wv += a[j] * oi * oj + b[j] * oi + c[j] * oj + d[j];
                    finite &= wv.is_finite();
                }
            }
            PlasticityVariant::ABCDPlusEta => {
                for (j, (wv, &oj)) in w_row.iter_mut().zip(post).enumerate() {
                    *wv += eta[j] * (a[j] * oi * oj + b[j] * oi + c[j] * oj + d[j]);
                    finite &= wv.is_finite();
                }
            }
        }
    }
    finite
}

fn check_rule_shapes(weights: &WeightState, coeffs: &HebbianCoefficients, trace: &ActivationTrace) -> Result<()> {
    let shapes = weights.shapes();
    if coeffs.shapes() != shapes {
        return Err(Error::shape("coefficients", format!("{shapes:?}"), format!("{:?}", coeffs.shapes())));
    }
    for ((r, c), lt) in shapes.iter().zip(&trace.layers) {
        if lt.pre.len() != *r || lt.post.len() != *c {
            return Err(Error::shape("trace", format!("{r}x{c}"), format!("{}x{}", lt.pre.len(), lt.post.len())));
        }
    }
    if trace.layers.len() != shapes.len() {
        return Err(Error::shape("trace layers", shapes.len(), trace.layers.len()));
    }
    Ok(())
}

/// Updates every fc weight from the trace of the preceding forward pass, then
/// normalizes according to the weights' mode. Inactive coefficient classes of
/// the variant are ignored whatever they contain.
pub fn hebbian_step(weights: &mut WeightState, coeffs: &HebbianCoefficients, trace: &ActivationTrace) -> Result<()> {
    check_rule_shapes(weights, coeffs, trace)?;
    for (l, (w, lt)) in weights.layers.iter_mut().zip(&trace.layers).enumerate() {
        if !update_layer(w, coeffs, l, &lt.pre, &lt.post) {
            return Err(Error::Divergence { layer: l });
        }
    }
    weights.normalize();
    Ok(())
}

/// Layer-interleaved variant of forward + [`hebbian_step`]: each layer is
/// updated as soon as it fires and the next layer sees the output recomputed
/// with the new weights. The trace records those recomputed outputs.
pub(crate) fn forward_update_sequential(
    weights: &mut WeightState,
    coeffs: &HebbianCoefficients,
    features: &[f64],
    trace: &mut ActivationTrace,
) -> Result<()> {
    let normalize = weights.normalization == Normalization::LayerMaxAbs;
    for l in 0..weights.layers.len() {
        let (head, tail) = trace.layers.split_at_mut(l);
        let lt = &mut tail[0];
        lt.pre.clear();
        if l == 0 {
            lt.pre.extend_from_slice(features);
        } else {
            lt.pre.extend_from_slice(&head[l - 1].post);
        }
        let w = &mut weights.layers[l];
        lt.post.resize(w.cols(), 0.0);
        layer_forward(w, &lt.pre, &mut lt.post);
        if !update_layer(w, coeffs, l, &lt.pre, &lt.post) {
            return Err(Error::Divergence { layer: l });
        }
        if normalize {
            normalize_layer(w);
        }
        layer_forward(w, &lt.pre, &mut lt.post);
    }
    Ok(())
}
