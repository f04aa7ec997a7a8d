//! The collaborative network: two peer networks (feature extractor plus
//! classifier), a shared domain discriminator and a shared noise
//! co-adaptation layer.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use rand::Rng;

use crate::autodiff::{ParamId, Tape, Tensor, Var};
use crate::error::{config, input, Error, Result};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    LeakyRelu,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinalActivation {
    None,
    Softmax,
    Sigmoid,
}

/// Widths include the input, so `[4, 32, 16]` is two layers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MlpSpec {
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    pub final_activation: FinalActivation,
}

impl MlpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.len() < 2 {
            return Err(config("an MLP needs at least one layer"));
        }
        if self.layer_widths.contains(&0) {
            return Err(config(format!(
                "MLP widths must be positive: {:?}",
                self.layer_widths
            )));
        }
        Ok(())
    }

    pub fn input_width(&self) -> usize {
        self.layer_widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.layer_widths.last().unwrap()
    }
}

/// Hands out parameter ids in construction order.
#[derive(Debug, Default)]
pub struct ParamIds {
    next: usize,
}

impl ParamIds {
    pub fn next_id(&mut self) -> ParamId {
        self.next += 1;
        ParamId(self.next - 1)
    }
}

#[derive(Clone, Debug)]
pub struct Linear<T> {
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
    weight_id: ParamId,
    bias_id: ParamId,
}

impl<T: Scalar> Linear<T> {
    fn zeros(fan_in: usize, fan_out: usize, ids: &mut ParamIds) -> Self {
        Linear {
            weight: Tensor::zeros(&[fan_in, fan_out]),
            bias: Tensor::zeros(&[1, fan_out]),
            weight_id: ids.next_id(),
            bias_id: ids.next_id(),
        }
    }

    /// Glorot-uniform weights, zero bias.
    fn glorot(fan_in: usize, fan_out: usize, ids: &mut ParamIds, rng: &mut impl Rng) -> Self {
        let mut layer = Self::zeros(fan_in, fan_out, ids);
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for w in layer.weight.data_mut() {
            *w = T::of(rng.random_range(-limit..limit));
        }
        layer
    }

    pub fn forward<'t>(&self, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let tape = x.tape();
        x.matmul(tape.param(self.weight_id, &self.weight))?
            .add_bias(tape.param(self.bias_id, &self.bias))
    }
}

#[derive(Clone, Debug)]
pub struct Mlp<T> {
    spec: MlpSpec,
    pub layers: Vec<Linear<T>>,
}

impl<T: Scalar> Mlp<T> {
    pub fn new(spec: MlpSpec, ids: &mut ParamIds, rng: &mut impl Rng) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Linear::glorot(w[0], w[1], ids, rng))
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn zeros(spec: MlpSpec, ids: &mut ParamIds) -> Result<Self> {
        spec.validate()?;
        let layers = spec
            .layer_widths
            .windows(2)
            .map(|w| Linear::zeros(w[0], w[1], ids))
            .collect();
        Ok(Mlp { spec, layers })
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn forward<'t>(&self, x: Var<'t, T>) -> Result<Var<'t, T>> {
        let width = x.value().cols();
        if width != self.spec.input_width() {
            return Err(Error::Shape {
                op: "mlp_input",
                lhs: x.shape(),
                rhs: vec![self.spec.input_width()],
            });
        }
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, layer) in self.layers.iter().enumerate() {
            h = layer.forward(h)?;
            if i < last {
                h = match self.spec.activation {
                    Activation::Relu => h.relu(),
                    Activation::LeakyRelu => h.leaky_relu(T::of(LEAKY_SLOPE)),
                };
            }
        }
        match self.spec.final_activation {
            FinalActivation::None => Ok(h),
            FinalActivation::Softmax => h.softmax_rows(),
            FinalActivation::Sigmoid => Ok(h.sigmoid()),
        }
    }

    fn visit<'a>(&'a self, prefix: &str, f: &mut dyn FnMut(String, ParamId, &'a Tensor<T>)) {
        for (i, l) in self.layers.iter().enumerate() {
            f(format!("{prefix}.{i}.weight"), l.weight_id, &l.weight);
            f(format!("{prefix}.{i}.bias"), l.bias_id, &l.bias);
        }
    }

    fn visit_mut<'a>(&'a mut self, f: &mut dyn FnMut(ParamId, &'a mut Tensor<T>)) {
        for l in &mut self.layers {
            f(l.weight_id, &mut l.weight);
            f(l.bias_id, &mut l.bias);
        }
    }
}

#[derive(Clone, Debug)]
pub struct PeerNetwork<T> {
    pub extractor: Mlp<T>,
    pub classifier: Mlp<T>,
}

/// Forward results of one peer on one batch.
#[derive(Clone, Copy)]
pub struct PeerOutput<'t, T> {
    pub features: Var<'t, T>,
    pub probs: Var<'t, T>,
}

impl<T: Scalar> PeerNetwork<T> {
    pub fn forward<'t>(&self, x: Var<'t, T>) -> Result<PeerOutput<'t, T>> {
        let features = self.extractor.forward(x)?;
        let probs = self.classifier.forward(features)?;
        Ok(PeerOutput { features, probs })
    }
}

#[derive(Clone, Debug)]
pub struct Discriminator<T> {
    pub mlp: Mlp<T>,
}

impl<T: Scalar> Discriminator<T> {
    /// `[n, d] -> [n, 1]` with values in (0, 1); target is labeled 1.
    pub fn forward<'t>(&self, features: Var<'t, T>) -> Result<Var<'t, T>> {
        self.mlp.forward(features)
    }
}

/// Feature-conditioned label transition model.
///
/// `weights` is stored as `[d, K*K]`: column `k*K + m` holds `w_km`, the
/// weight vector scoring a switch from true label `k` to noisy label `m`.
/// `biases` is `[1, K*K]` in the same order.
#[derive(Clone, Debug)]
pub struct NoiseCoAdaptationLayer<T> {
    pub weights: Tensor<T>,
    pub biases: Tensor<T>,
    n_classes: usize,
    weight_id: ParamId,
    bias_id: ParamId,
}

/// Biases `log((1-ε)·[i=j] + ε/(K-1)·[i≠j])`, row-major `[1, K*K]`.
pub fn noise_init_biases<T: Scalar>(eps: f64, n_classes: usize) -> Result<Tensor<T>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(config(format!("noise init ε must be in (0, 1), got {eps}")));
    }
    if n_classes < 2 {
        return Err(config(format!("need at least 2 classes, got {n_classes}")));
    }
    let diag = (1.0 - eps).ln();
    let off = (eps / (n_classes - 1) as f64).ln();
    let data = (0..n_classes * n_classes)
        .map(|i| T::of(if i / n_classes == i % n_classes { diag } else { off }))
        .collect();
    Tensor::matrix(1, n_classes * n_classes, data)
}

impl<T: Scalar> NoiseCoAdaptationLayer<T> {
    /// Zero weights and small-uniform-noise biases.
    pub fn init(eps: f64, n_classes: usize, feature_dim: usize, ids: &mut ParamIds) -> Result<Self> {
        if feature_dim == 0 {
            return Err(config("noise layer feature width must be positive"));
        }
        Ok(NoiseCoAdaptationLayer {
            weights: Tensor::zeros(&[feature_dim, n_classes * n_classes]),
            biases: noise_init_biases(eps, n_classes)?,
            n_classes,
            weight_id: ids.next_id(),
            bias_id: ids.next_id(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.weights.rows()
    }

    /// `[n, d] -> [n, K*K]`; each row holds a row-major, row-stochastic
    /// `K×K` matrix whose entry `(k, m)` is the probability that true label
    /// `k` is observed as `m`.
    pub fn transition<'t>(&self, features: Var<'t, T>) -> Result<Var<'t, T>> {
        let tape = features.tape();
        let n = features.value().rows();
        let k = self.n_classes;
        features
            .matmul(tape.param(self.weight_id, &self.weights))?
            .add_bias(tape.param(self.bias_id, &self.biases))?
            .reshape(&[n * k, k])?
            .softmax_rows()?
            .reshape(&[n, k * k])
    }

    /// Transition matrix for a single feature vector.
    pub fn transition_for(&self, feature: &[T]) -> Result<Tensor<T>> {
        let tape = Tape::new();
        let f = tape.constant(Tensor::matrix(1, feature.len(), feature.to_vec())?);
        let t = self.transition(f)?;
        let out = t.value().reshaped(&[self.n_classes, self.n_classes])?;
        Ok(out)
    }
}

/// Noisy-label prediction `ẑ_m = Σ_k T[k, m] · ŷ_k` for one sample.
pub fn noisy_prediction<T: Scalar>(probs: &[T], transition: &Tensor<T>) -> Result<Vec<T>> {
    let k = probs.len();
    if transition.shape() != [k, k] {
        return Err(Error::Shape {
            op: "noisy_prediction",
            lhs: vec![k],
            rhs: transition.shape().to_vec(),
        });
    }
    let tol = 1e-6;
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    if (total - 1.0).abs() > tol {
        return Err(input(format!("prediction sums to {total}, not 1")));
    }
    for (r, row) in transition.row_iter().enumerate() {
        let s: f64 = row.iter().map(|p| p.as_f64()).sum();
        if (s - 1.0).abs() > tol {
            return Err(input(format!("transition row {r} sums to {s}, not 1")));
        }
    }
    Ok((0..k)
        .map(|m| (0..k).map(|a| probs[a] * transition.get(a, m)).sum())
        .collect())
}

/// Layer sizes of a [`CollaborativeModel`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Architecture {
    pub input_dim: usize,
    pub extractor_hidden: Vec<usize>,
    pub feature_dim: usize,
    pub n_classes: usize,
    pub discriminator_hidden: Vec<usize>,
}

impl Architecture {
    /// Extractor `[in → 32 → 16]`, classifier `[16 → K]`,
    /// discriminator `[16 → 16 → 16 → 1]`.
    pub fn desk(input_dim: usize, n_classes: usize) -> Self {
        Architecture {
            input_dim,
            extractor_hidden: vec![32],
            feature_dim: 16,
            n_classes,
            discriminator_hidden: vec![16, 16],
        }
    }

    pub fn extractor_spec(&self) -> MlpSpec {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.extractor_hidden);
        widths.push(self.feature_dim);
        MlpSpec {
            layer_widths: widths,
            activation: Activation::Relu,
            final_activation: FinalActivation::None,
        }
    }

    pub fn classifier_spec(&self) -> MlpSpec {
        MlpSpec {
            layer_widths: vec![self.feature_dim, self.n_classes],
            activation: Activation::Relu,
            final_activation: FinalActivation::Softmax,
        }
    }

    pub fn discriminator_spec(&self) -> MlpSpec {
        let mut widths = vec![self.feature_dim];
        widths.extend(&self.discriminator_hidden);
        widths.push(1);
        MlpSpec {
            layer_widths: widths,
            activation: Activation::LeakyRelu,
            final_activation: FinalActivation::Sigmoid,
        }
    }

    fn header(&self) -> String {
        let list = |v: &[usize]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            }
        };
        format!(
            "arch input={} extractor={} feature={} classes={} discriminator={}",
            self.input_dim,
            list(&self.extractor_hidden),
            self.feature_dim,
            self.n_classes,
            list(&self.discriminator_hidden)
        )
    }

    fn parse_header(line: &str, lineno: usize) -> Result<Self> {
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        let rest = line
            .strip_prefix("arch ")
            .ok_or_else(|| perr(format!("expected arch line, got {line:?}")))?;
        let mut arch = Architecture::desk(0, 0);
        let num = |v: &str| {
            v.parse::<usize>()
                .map_err(|e| perr(format!("bad size {v:?}: {e}")))
        };
        let list = |v: &str| -> Result<Vec<usize>> {
            if v == "-" {
                return Ok(Vec::new());
            }
            v.split(',').map(num).collect()
        };
        for kv in rest.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| perr(format!("bad field {kv:?}")))?;
            match k {
                "input" => arch.input_dim = num(v)?,
                "extractor" => arch.extractor_hidden = list(v)?,
                "feature" => arch.feature_dim = num(v)?,
                "classes" => arch.n_classes = num(v)?,
                "discriminator" => arch.discriminator_hidden = list(v)?,
                _ => return Err(perr(format!("unknown arch field {k:?}"))),
            }
        }
        Ok(arch)
    }
}

#[derive(Clone, Debug)]
pub struct CollaborativeModel<T> {
    arch: Architecture,
    pub peers: [PeerNetwork<T>; 2],
    pub discriminator: Discriminator<T>,
    pub noise_layer: NoiseCoAdaptationLayer<T>,
}

const CHECKPOINT_MAGIC: &str = "couda-checkpoint v1";

impl<T: Scalar> CollaborativeModel<T> {
    /// Builds a model whose peers draw their weights from independent
    /// streams of `seed`. The noise layer starts at zero weights with biases
    /// from [`noise_init_biases`].
    pub fn new(arch: Architecture, noise_eps: f64, seed: u64) -> Result<Self> {
        let mut ids = ParamIds::default();
        let mut peer = |which| -> Result<PeerNetwork<T>> {
            let mut rng = stream(seed, which);
            Ok(PeerNetwork {
                extractor: Mlp::new(arch.extractor_spec(), &mut ids, &mut rng)?,
                classifier: Mlp::new(arch.classifier_spec(), &mut ids, &mut rng)?,
            })
        };
        let peers = [peer(Stream::InitPeer1)?, peer(Stream::InitPeer2)?];
        let mut rng = stream(seed, Stream::InitShared);
        let discriminator = Discriminator {
            mlp: Mlp::new(arch.discriminator_spec(), &mut ids, &mut rng)?,
        };
        let noise_layer =
            NoiseCoAdaptationLayer::init(noise_eps, arch.n_classes, arch.feature_dim, &mut ids)?;
        Ok(CollaborativeModel {
            arch,
            peers,
            discriminator,
            noise_layer,
        })
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn n_classes(&self) -> usize {
        self.arch.n_classes
    }

    pub fn forward_peer<'t>(&self, peer: usize, x: Var<'t, T>) -> Result<PeerOutput<'t, T>> {
        self.peers[peer].forward(x)
    }

    pub fn discriminate<'t>(&self, features: Var<'t, T>) -> Result<Var<'t, T>> {
        self.discriminator.forward(features)
    }

    /// Gradient-free forward of one peer: `(features, probabilities)`.
    pub fn predict_peer(&self, peer: usize, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let tape = Tape::new();
        let out = self.forward_peer(peer, tape.constant(x.clone()))?;
        let f = out.features.value().clone();
        let p = out.probs.value().clone();
        Ok((f, p))
    }

    /// Visits every parameter in a fixed order with a stable dotted name.
    pub fn for_each_param<'a>(&'a self, mut f: impl FnMut(String, ParamId, &'a Tensor<T>)) {
        for (i, p) in self.peers.iter().enumerate() {
            p.extractor.visit(&format!("peer{}.extractor", i + 1), &mut f);
            p.classifier.visit(&format!("peer{}.classifier", i + 1), &mut f);
        }
        self.discriminator.mlp.visit("discriminator", &mut f);
        let z = &self.noise_layer;
        f("noise.weights".into(), z.weight_id, &z.weights);
        f("noise.biases".into(), z.bias_id, &z.biases);
    }

    pub fn for_each_param_mut<'a>(&'a mut self, mut f: impl FnMut(ParamId, &'a mut Tensor<T>)) {
        for p in self.peers.iter_mut() {
            p.extractor.visit_mut(&mut f);
            p.classifier.visit_mut(&mut f);
        }
        self.discriminator.mlp.visit_mut(&mut f);
        let z = &mut self.noise_layer;
        f(z.weight_id, &mut z.weights);
        f(z.bias_id, &mut z.biases);
    }

    /// `(name, id, tensor)` for every parameter.
    pub fn parameters(&self) -> Vec<(String, ParamId, &Tensor<T>)> {
        let mut out = Vec::new();
        self.for_each_param(|n, id, t| out.push((n, id, t)));
        out
    }

    pub fn param_count(&self) -> usize {
        self.parameters().iter().map(|(_, _, t)| t.numel()).sum()
    }

    pub fn extractor_ids(&self) -> Vec<ParamId> {
        self.ids_with_prefix(&["peer1.extractor", "peer2.extractor"])
    }

    pub fn classifier_ids(&self) -> Vec<ParamId> {
        self.ids_with_prefix(&["peer1.classifier", "peer2.classifier"])
    }

    pub fn discriminator_ids(&self) -> Vec<ParamId> {
        self.ids_with_prefix(&["discriminator"])
    }

    pub fn noise_ids(&self) -> Vec<ParamId> {
        self.ids_with_prefix(&["noise"])
    }

    fn ids_with_prefix(&self, prefixes: &[&str]) -> Vec<ParamId> {
        self.parameters()
            .into_iter()
            .filter(|(n, _, _)| prefixes.iter().any(|p| n.starts_with(p)))
            .map(|(_, id, _)| id)
            .collect()
    }

    /// Exchanges the parameter values of the two peers.
    pub fn swap_peer_parameters(&mut self) {
        let [a, b] = &mut self.peers;
        let swap = |x: &mut Mlp<T>, y: &mut Mlp<T>| {
            for (lx, ly) in x.layers.iter_mut().zip(y.layers.iter_mut()) {
                std::mem::swap(&mut lx.weight, &mut ly.weight);
                std::mem::swap(&mut lx.bias, &mut ly.bias);
            }
        };
        swap(&mut a.extractor, &mut b.extractor);
        swap(&mut a.classifier, &mut b.classifier);
    }

    /// Text checkpoint: a header, the architecture, then one
    /// `param <name> <rows> <cols>` line followed by the comma-separated
    /// row-major values for every parameter.
    pub fn write_checkpoint(&self, mut w: impl Write) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(s, "scalar {}", T::NAME).unwrap();
        writeln!(s, "{}", self.arch.header()).unwrap();
        self.for_each_param(|name, _, t| {
            writeln!(s, "param {name} {} {}", t.rows(), t.cols()).unwrap();
            let vals: Vec<String> = t.data().iter().map(|v| v.to_string()).collect();
            writeln!(s, "{}", vals.join(",")).unwrap();
        });
        w.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut buf = Vec::new();
        self.write_checkpoint(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Overwrites every parameter from a checkpoint. Fails without touching
    /// the model if the architecture or any parameter shape differs.
    pub fn read_checkpoint(&mut self, r: impl BufRead) -> Result<()> {
        let (arch, values) = parse_checkpoint::<T>(r)?;
        if arch != self.arch {
            return Err(input(format!(
                "checkpoint architecture ({}) does not match model ({})",
                arch.header(),
                self.arch.header()
            )));
        }
        let expected = self.parameters();
        if expected.len() != values.len() {
            return Err(input(format!(
                "checkpoint has {} parameters, model has {}",
                values.len(),
                expected.len()
            )));
        }
        for ((name, _, t), (cname, ct)) in expected.iter().zip(&values) {
            if name != cname || t.shape() != ct.shape() {
                return Err(input(format!(
                    "checkpoint parameter {cname} {:?} does not match model parameter {name} {:?}",
                    ct.shape(),
                    t.shape()
                )));
            }
        }
        let mut it = values.into_iter();
        self.for_each_param_mut(|_, t| *t = it.next().unwrap().1);
        Ok(())
    }

    pub fn load_checkpoint(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::open(path)?;
        self.read_checkpoint(std::io::BufReader::new(f))
    }

    /// Rebuilds a model from the architecture stored in a checkpoint.
    pub fn from_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let (arch, _) = parse_checkpoint::<T>(text.as_bytes())?;
        let mut model = Self::new(arch, 0.5, 0)?;
        model.read_checkpoint(text.as_bytes())?;
        Ok(model)
    }
}

type NamedTensors<T> = Vec<(String, Tensor<T>)>;

fn parse_checkpoint<T: Scalar>(r: impl BufRead) -> Result<(Architecture, NamedTensors<T>)> {
    let mut lines = r.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((_, Err(e))) => Err(e.into()),
            None => Err(Error::Parse {
                line: 0,
                msg: format!("unexpected end of checkpoint, expected {what}"),
            }),
        }
    };
    let (n, magic) = next("header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Parse {
            line: n,
            msg: format!("not a checkpoint: {magic:?}"),
        });
    }
    let (n, scalar) = next("scalar line")?;
    if scalar != format!("scalar {}", T::NAME) {
        return Err(Error::Parse {
            line: n,
            msg: format!("expected scalar {}, found {scalar:?}", T::NAME),
        });
    }
    let (n, arch_line) = next("arch line")?;
    let arch = Architecture::parse_header(&arch_line, n)?;

    let mut params = Vec::new();
    loop {
        let (n, head) = match next("param") {
            Ok(x) => x,
            Err(Error::Parse { line: 0, .. }) => break,
            Err(e) => return Err(e),
        };
        if head.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: n, msg };
        let parts: Vec<&str> = head.split_whitespace().collect();
        let [kw, name, rows, cols] = parts[..] else {
            return Err(perr(format!("malformed param line {head:?}")));
        };
        if kw != "param" {
            return Err(perr(format!("expected param line, got {head:?}")));
        }
        let rows: usize = rows.parse().map_err(|e| perr(format!("rows: {e}")))?;
        let cols: usize = cols.parse().map_err(|e| perr(format!("cols: {e}")))?;
        let (vn, body) = next("parameter values")?;
        let data = body
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<T>().map_err(|_| Error::Parse {
                    line: vn,
                    msg: format!("bad number {s:?}"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        let t = Tensor::matrix(rows, cols, data).map_err(|_| Error::Parse {
            line: vn,
            msg: format!("{name}: expected {} values", rows * cols),
        })?;
        params.push((name.to_string(), t));
    }
    Ok((arch, params))
}
