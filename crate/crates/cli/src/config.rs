//! Resolved run configuration: built-in defaults, then a `key = value`
//! file, then command-line flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use couda::data::{Corruption, ShiftSpec};
use couda::model::Architecture;
use couda::objectives::{DiversityMetric, DomainLossKind, ObjectiveConfig, WeightMetric};
use couda::training::{Ensemble, TrainConfig};

use crate::CliError;

/// Model variants compared by `ablate`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Component {
    Full,
    SourceOnly,
    NoNoiseLayer,
    NoDomain,
    NoDiversity,
    UniformWeights,
}

impl Component {
    pub const ALL: &'static [Component] = &[
        Component::Full,
        Component::SourceOnly,
        Component::NoNoiseLayer,
        Component::NoDomain,
        Component::NoDiversity,
        Component::UniformWeights,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Component::Full => "full",
            Component::SourceOnly => "source-only",
            Component::NoNoiseLayer => "no-noise-layer",
            Component::NoDomain => "no-domain",
            Component::NoDiversity => "no-diversity",
            Component::UniformWeights => "uniform-weights",
        }
    }

    /// Switches this variant off in an objective configuration.
    pub fn apply(self, o: &mut ObjectiveConfig) {
        match self {
            Component::Full => {}
            Component::SourceOnly => {
                o.alpha = 0.0;
                o.eta = 0.0;
                o.uniform_weights = true;
            }
            Component::NoNoiseLayer => o.noise_layer = false,
            Component::NoDomain => o.alpha = 0.0,
            Component::NoDiversity => o.eta = 0.0,
            Component::UniformWeights => o.uniform_weights = true,
        }
    }
}

impl FromStr for Component {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Component::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Component::ALL.iter().map(|c| c.as_str()).collect();
                format!("unknown component {s:?}; valid names: {}", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub k: usize,
    pub dim: usize,
    pub per_class: usize,
    pub test_per_class: usize,
    /// Degrees.
    pub rot: f64,
    pub translation: Vec<f64>,
    pub scale: f64,
    pub spread: f64,
    pub radius: f64,
    pub center: f64,
    /// Degrees.
    pub arc: f64,
    pub noise: f64,
    pub p_class: f64,

    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub eps: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub weight_metric: WeightMetric,
    pub diversity_metric: DiversityMetric,
    pub domain_loss: DomainLossKind,
    pub ensemble: Ensemble,
    pub log_every: usize,
    pub uniform_weights: bool,
    pub noise_layer: bool,

    pub dataset: PathBuf,
    pub out_dir: PathBuf,
    pub checkpoint: Option<PathBuf>,
    pub curves: Option<PathBuf>,
    pub report: Option<PathBuf>,

    pub components: Option<Vec<Component>>,
    pub weight_metrics: Option<Vec<WeightMetric>>,
    pub diversity_metrics: Option<Vec<DiversityMetric>>,
    pub domain_losses: Option<Vec<DomainLossKind>>,
    pub ensembles: Option<Vec<Ensemble>>,
    pub seeds: Option<Vec<u64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let spec = ShiftSpec::default();
        let train = TrainConfig::default();
        let o = &train.objective;
        RunConfig {
            k: 3,
            dim: spec.dim,
            per_class: 300,
            test_per_class: 300,
            rot: 0.0,
            translation: Vec::new(),
            scale: spec.scale,
            spread: spec.spread,
            radius: spec.radius,
            center: spec.center,
            arc: spec.arc.to_degrees(),
            noise: 0.0,
            p_class: 0.0,
            alpha: o.alpha,
            eta: o.eta,
            gamma: o.gamma,
            eps: train.noise_eps,
            lr: train.learning_rate,
            batch_size: train.batch_size,
            steps: train.steps,
            seed: 0,
            weight_metric: o.weight_metric,
            diversity_metric: o.diversity_metric,
            domain_loss: o.domain_loss,
            ensemble: train.ensemble,
            log_every: train.log_every,
            uniform_weights: o.uniform_weights,
            noise_layer: o.noise_layer,
            dataset: PathBuf::from("dataset.csv"),
            out_dir: PathBuf::from("run"),
            checkpoint: None,
            curves: None,
            report: None,
            components: None,
            weight_metrics: None,
            diversity_metrics: None,
            domain_losses: None,
            ensembles: None,
            seeds: None,
        }
    }
}

/// Every configurable key with its help text. Flags are `--<key>`.
pub const KEYS: &[(&str, &str)] = &[
    ("k", "number of classes"),
    ("dim", "input dimension"),
    ("per-class", "training samples per class and domain"),
    ("test-per-class", "target test samples per class"),
    ("rot", "target rotation in degrees"),
    ("translation", "comma-separated target translation"),
    ("scale", "target scale factor"),
    ("spread", "cluster standard deviation"),
    ("radius", "distance of class means from the arc centre"),
    ("center", "offset of the arc centre along the first axis"),
    ("arc", "angular extent of the class means in degrees"),
    ("noise", "source label noise rate in [0, 1)"),
    ("p-class", "per-class probability of halving its source samples"),
    ("alpha", "domain loss trade-off"),
    ("eta", "diversity loss trade-off"),
    ("gamma", "focal loss exponent"),
    ("eps", "noise layer initialization parameter in (0, 1)"),
    ("lr", "Adam learning rate"),
    ("batch-size", "mini-batch size per domain"),
    ("steps", "training steps"),
    ("seed", "master seed"),
    ("weight-metric", "transferability weight metric"),
    ("diversity-metric", "diversity metric"),
    ("domain-loss", "domain loss kind"),
    ("ensemble", "inference ensemble"),
    ("log-every", "steps between curve entries"),
    ("uniform-weights", "replace transferability weights by 1"),
    ("noise-layer", "use the noise co-adaptation layer"),
    ("dataset", "dataset file"),
    ("out-dir", "output directory"),
    ("checkpoint", "checkpoint file (default <out-dir>/checkpoint.txt)"),
    ("curves", "training curve file (default <out-dir>/curves.csv)"),
    ("report", "report file (default <out-dir>/report.csv)"),
    ("components", "ablation: comma-separated model variants"),
    ("weight-metrics", "ablation: comma-separated weight metrics"),
    ("diversity-metrics", "ablation: comma-separated diversity metrics"),
    ("domain-losses", "ablation: comma-separated domain loss kinds"),
    ("ensembles", "ablation: comma-separated ensembles"),
    ("seeds", "ablation: comma-separated seeds"),
];

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    v.trim()
        .parse()
        .map_err(|e| CliError::usage(format!("--{key}: cannot parse {v:?}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse(key, s))
        .collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(CliError::usage(format!("--{key}: expected true or false, got {v:?}"))),
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn opt_path(p: &Option<PathBuf>) -> String {
    p.as_deref().map(path_str).unwrap_or_default()
}

fn opt_list<T: ToString>(v: &Option<Vec<T>>) -> String {
    v.as_deref().map(join).unwrap_or_default()
}

fn component_names(v: &[Component]) -> String {
    v.iter().map(|c| c.as_str()).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Sets one key from its textual value. Keys may use `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let key = key.trim().replace('_', "-");
        let k = key.as_str();
        let v = value.trim();
        let path = || (!v.is_empty()).then(|| PathBuf::from(v));
        match k {
            "k" => self.k = parse(k, v)?,
            "dim" => self.dim = parse(k, v)?,
            "per-class" => self.per_class = parse(k, v)?,
            "test-per-class" => self.test_per_class = parse(k, v)?,
            "rot" => self.rot = parse(k, v)?,
            "translation" => self.translation = parse_list(k, v)?,
            "scale" => self.scale = parse(k, v)?,
            "spread" => self.spread = parse(k, v)?,
            "radius" => self.radius = parse(k, v)?,
            "center" => self.center = parse(k, v)?,
            "arc" => self.arc = parse(k, v)?,
            "noise" => self.noise = parse(k, v)?,
            "p-class" => self.p_class = parse(k, v)?,
            "alpha" => self.alpha = parse(k, v)?,
            "eta" => self.eta = parse(k, v)?,
            "gamma" => self.gamma = parse(k, v)?,
            "eps" => self.eps = parse(k, v)?,
            "lr" => self.lr = parse(k, v)?,
            "batch-size" => self.batch_size = parse(k, v)?,
            "steps" => self.steps = parse(k, v)?,
            "seed" => self.seed = parse(k, v)?,
            "weight-metric" => self.weight_metric = parse(k, v)?,
            "diversity-metric" => self.diversity_metric = parse(k, v)?,
            "domain-loss" => self.domain_loss = parse(k, v)?,
            "ensemble" => self.ensemble = parse(k, v)?,
            "log-every" => self.log_every = parse(k, v)?,
            "uniform-weights" => self.uniform_weights = parse_bool(k, v)?,
            "noise-layer" => self.noise_layer = parse_bool(k, v)?,
            "dataset" => self.dataset = PathBuf::from(v),
            "out-dir" => self.out_dir = PathBuf::from(v),
            "checkpoint" => self.checkpoint = path(),
            "curves" => self.curves = path(),
            "report" => self.report = path(),
            "components" => self.components = Some(parse_list(k, v)?),
            "weight-metrics" => self.weight_metrics = Some(parse_list(k, v)?),
            "diversity-metrics" => self.diversity_metrics = Some(parse_list(k, v)?),
            "domain-losses" => self.domain_losses = Some(parse_list(k, v)?),
            "ensembles" => self.ensembles = Some(parse_list(k, v)?),
            "seeds" => self.seeds = Some(parse_list(k, v)?),
            _ => return Err(CliError::usage(format!("unknown configuration key {key:?}"))),
        }
        Ok(())
    }

    /// Current value of every key, in [`KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        KEYS.iter()
            .map(|&(key, _)| {
                let v = match key {
                    "k" => self.k.to_string(),
                    "dim" => self.dim.to_string(),
                    "per-class" => self.per_class.to_string(),
                    "test-per-class" => self.test_per_class.to_string(),
                    "rot" => self.rot.to_string(),
                    "translation" => join(&self.translation),
                    "scale" => self.scale.to_string(),
                    "spread" => self.spread.to_string(),
                    "radius" => self.radius.to_string(),
                    "center" => self.center.to_string(),
                    "arc" => self.arc.to_string(),
                    "noise" => self.noise.to_string(),
                    "p-class" => self.p_class.to_string(),
                    "alpha" => self.alpha.to_string(),
                    "eta" => self.eta.to_string(),
                    "gamma" => self.gamma.to_string(),
                    "eps" => self.eps.to_string(),
                    "lr" => self.lr.to_string(),
                    "batch-size" => self.batch_size.to_string(),
                    "steps" => self.steps.to_string(),
                    "seed" => self.seed.to_string(),
                    "weight-metric" => self.weight_metric.to_string(),
                    "diversity-metric" => self.diversity_metric.to_string(),
                    "domain-loss" => self.domain_loss.to_string(),
                    "ensemble" => self.ensemble.to_string(),
                    "log-every" => self.log_every.to_string(),
                    "uniform-weights" => self.uniform_weights.to_string(),
                    "noise-layer" => self.noise_layer.to_string(),
                    "dataset" => path_str(&self.dataset),
                    "out-dir" => path_str(&self.out_dir),
                    "checkpoint" => opt_path(&self.checkpoint),
                    "curves" => opt_path(&self.curves),
                    "report" => opt_path(&self.report),
                    "components" => self.components.as_deref().map(component_names).unwrap_or_default(),
                    "weight-metrics" => opt_list(&self.weight_metrics),
                    "diversity-metrics" => opt_list(&self.diversity_metrics),
                    "domain-losses" => opt_list(&self.domain_losses),
                    "ensembles" => opt_list(&self.ensembles),
                    "seeds" => opt_list(&self.seeds),
                    _ => unreachable!("key table and entries disagree on {key}"),
                };
                (key, v)
            })
            .collect()
    }

    /// `key = value` text that [`RunConfig::apply_file_text`] reads back.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s
    }

    /// Applies a flat `key = value` file; `#` starts a comment.
    pub fn apply_file_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("config line {}: expected `key = value`, got {raw:?}", i + 1))
            })?;
            // list keys hold nothing when empty; leave them unset
            let empty_list = v.trim().is_empty()
                && matches!(
                    k.trim().replace('_', "-").as_str(),
                    "components" | "weight-metrics" | "diversity-metrics" | "domain-losses" | "ensembles" | "seeds"
                );
            if empty_list {
                continue;
            }
            self.set(k, v)
                .map_err(|e| CliError::usage(format!("config line {}: {}", i + 1, e.message)))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::usage(format!("--{key}: {msg}")));
        if self.k < 2 {
            return bad("k", format!("need at least 2 classes, got {}", self.k));
        }
        if self.dim < 2 {
            return bad("dim", format!("need at least 2 dimensions, got {}", self.dim));
        }
        if self.per_class == 0 {
            return bad("per-class", "must be >= 1".into());
        }
        if self.test_per_class == 0 {
            return bad("test-per-class", "must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.noise) {
            return bad("noise", format!("must be in [0, 1), got {}", self.noise));
        }
        if !(0.0..=1.0).contains(&self.p_class) {
            return bad("p-class", format!("must be in [0, 1], got {}", self.p_class));
        }
        if !(self.spread > 0.0) {
            return bad("spread", format!("must be > 0, got {}", self.spread));
        }
        if !(self.scale > 0.0) {
            return bad("scale", format!("must be > 0, got {}", self.scale));
        }
        if self.translation.len() > self.dim {
            return bad("translation", format!("has more than dim={} coordinates", self.dim));
        }
        for (key, v) in [("rot", self.rot), ("radius", self.radius), ("center", self.center), ("arc", self.arc)] {
            if !v.is_finite() {
                return bad(key, format!("must be finite, got {v}"));
            }
        }
        for (key, v) in [("alpha", self.alpha), ("eta", self.eta), ("gamma", self.gamma)] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(key, format!("must be >= 0, got {v}"));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps", format!("must be in (0, 1), got {}", self.eps));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite()) {
            return bad("lr", format!("must be >= 0, got {}", self.lr));
        }
        if self.batch_size == 0 {
            return bad("batch-size", "must be >= 1".into());
        }
        if self.steps == 0 {
            return bad("steps", "must be >= 1".into());
        }
        if self.log_every == 0 {
            return bad("log-every", "must be >= 1".into());
        }
        Ok(())
    }

    pub fn shift_spec(&self) -> ShiftSpec {
        ShiftSpec {
            n_classes: self.k,
            dim: self.dim,
            per_class: self.per_class,
            test_per_class: self.test_per_class,
            rotation: self.rot.to_radians(),
            translation: self.translation.clone(),
            scale: self.scale,
            spread: self.spread,
            radius: self.radius,
            center: self.center,
            arc: self.arc.to_radians(),
        }
    }

    pub fn corruption(&self) -> Corruption {
        Corruption { noise_rate: self.noise, p_class: self.p_class }
    }

    pub fn objective(&self) -> ObjectiveConfig {
        ObjectiveConfig {
            alpha: self.alpha,
            eta: self.eta,
            gamma: self.gamma,
            weight_metric: self.weight_metric,
            uniform_weights: self.uniform_weights,
            diversity_metric: self.diversity_metric,
            domain_loss: self.domain_loss,
            noise_layer: self.noise_layer,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            objective: self.objective(),
            noise_eps: self.eps,
            learning_rate: self.lr,
            batch_size: self.batch_size,
            steps: self.steps,
            seed: self.seed,
            ensemble: self.ensemble,
            log_every: self.log_every,
            dry_run: false,
        }
    }

    pub fn architecture(&self, input_dim: usize, n_classes: usize) -> Architecture {
        Architecture::desk(input_dim, n_classes)
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out_dir.join("checkpoint.txt"))
    }

    pub fn curves_path(&self) -> PathBuf {
        self.curves.clone().unwrap_or_else(|| self.out_dir.join("curves.csv"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| self.out_dir.join("report.csv"))
    }
}
