//! Mini-batch training with Adam and two-peer ensemble inference.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use rand::Rng;

use crate::autodiff::{ParamId, Tape, Tensor};
use crate::data::DatasetBundle;
use crate::error::{config, input, Error, Result};
use crate::model::CollaborativeModel;
use crate::objectives::{build_objective, named_enum, Batch, ObjectiveConfig};
use crate::rng::{stream, Stream};
use crate::scalar::Scalar;

named_enum!(
    /// How the two peers' predictions are combined at inference.
    Ensemble {
        #[default]
        Average => "average",
        Maximum => "maximum",
    }
);

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub objective: ObjectiveConfig,
    /// Initial keep probability parameter of the noise layer biases.
    pub noise_eps: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub seed: u64,
    pub ensemble: Ensemble,
    pub log_every: usize,
    /// Compute and log losses without updating any parameter.
    pub dry_run: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: ObjectiveConfig::default(),
            noise_eps: 0.8,
            learning_rate: 1e-3,
            batch_size: 16,
            steps: 2000,
            seed: 0,
            ensemble: Ensemble::Average,
            log_every: 10,
            dry_run: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.objective.validate()?;
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return Err(config(format!("learning rate must be >= 0, got {}", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(config("batch size must be >= 1"));
        }
        if self.steps == 0 {
            return Err(config("steps must be >= 1"));
        }
        if self.log_every == 0 {
            return Err(config("log_every must be >= 1"));
        }
        if !(self.noise_eps > 0.0 && self.noise_eps < 1.0) {
            return Err(config(format!("noise eps must be in (0, 1), got {}", self.noise_eps)));
        }
        Ok(())
    }
}

/// Adam moments for every parameter of a model.
#[derive(Clone, Debug)]
pub struct AdamState<T> {
    pub lr: T,
    pub beta1: T,
    pub beta2: T,
    pub eps: T,
    pub step: u64,
    moments: BTreeMap<ParamId, (Tensor<T>, Tensor<T>)>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(model: &CollaborativeModel<T>, lr: f64) -> Self {
        let mut moments = BTreeMap::new();
        model.for_each_param(|_, id, p| {
            let z = Tensor::zeros(p.shape());
            moments.insert(id, (z.clone(), z));
        });
        AdamState {
            lr: T::of(lr),
            beta1: T::of(ADAM_BETA1),
            beta2: T::of(ADAM_BETA2),
            eps: T::of(ADAM_EPS),
            step: 0,
            moments,
        }
    }

    pub fn moments(&self, id: ParamId) -> Option<(&Tensor<T>, &Tensor<T>)> {
        self.moments.get(&id).map(|(m, v)| (m, v))
    }

    /// One bias-corrected update of every parameter. Parameters without a
    /// gradient are treated as having a zero gradient.
    pub fn update(&mut self, model: &mut CollaborativeModel<T>, grads: &crate::autodiff::Gradients<T>) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        let (b1, b2, lr, eps) = (self.beta1, self.beta2, self.lr, self.eps);
        let moments = &mut self.moments;
        let mut missing = None;
        model.for_each_param_mut(|id, p| {
            let Some((m, v)) = moments.get_mut(&id) else {
                missing = Some(id);
                return;
            };
            let g = grads.get(id);
            if let Some(g) = g {
                if g.shape() != p.shape() {
                    missing = Some(id);
                    return;
                }
            }
            let gd = g.map(|g| g.data());
            for (i, ((pi, mi), vi)) in p
                .data_mut()
                .iter_mut()
                .zip(m.data_mut())
                .zip(v.data_mut())
                .enumerate()
            {
                let gi = gd.map_or(T::zero(), |g| g[i]);
                *mi = b1 * *mi + (one - b1) * gi;
                *vi = b2 * *vi + (one - b2) * gi * gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *pi = *pi - lr * mhat / (vhat.sqrt() + eps);
            }
        });
        match missing {
            Some(id) => Err(input(format!("optimizer state does not match parameter {id:?}"))),
            None => Ok(()),
        }
    }
}

/// Loss values recorded at one logged step.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveEntry {
    pub step: usize,
    pub domain_loss: f64,
    pub classification_loss: f64,
    pub diversity_loss: f64,
    pub mean_lambda: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CurveLog {
    pub entries: Vec<CurveEntry>,
}

impl CurveLog {
    pub const HEADER: &'static str = "step,domain_loss,classification_loss,diversity_loss,mean_lambda";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for e in &self.entries {
            writeln!(
                s,
                "{},{},{},{},{}",
                e.step, e.domain_loss, e.classification_loss, e.diversity_loss, e.mean_lambda
            )
            .unwrap();
        }
        s
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Mean classification loss over the `n` entries ending at index `end`.
    pub fn mean_classification(&self, end: usize, n: usize) -> f64 {
        let start = end.saturating_sub(n);
        let w = &self.entries[start..end];
        w.iter().map(|e| e.classification_loss).sum::<f64>() / w.len() as f64
    }
}

/// Uniform sampling with replacement.
fn sample_rows(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|_| rng.random_range(0..n)).collect()
}

/// Runs `cfg.steps` Adam steps on the full objective.
///
/// Each step draws an independent source and target mini-batch, records the
/// objective on a fresh tape and backpropagates once.
pub fn train<T: Scalar>(
    model: &mut CollaborativeModel<T>,
    bundle: &DatasetBundle,
    cfg: &TrainConfig,
) -> Result<CurveLog> {
    cfg.validate()?;
    bundle.validate()?;
    if model.n_classes() != bundle.n_classes {
        return Err(config(format!(
            "model has K={} but the dataset has K={}",
            model.n_classes(),
            bundle.n_classes
        )));
    }
    if model.architecture().input_dim != bundle.dim {
        return Err(config(format!(
            "model input width {} != dataset dim {}",
            model.architecture().input_dim,
            bundle.dim
        )));
    }
    if bundle.n_source() == 0 || bundle.n_target() == 0 {
        return Err(input("training needs source and target samples"));
    }

    let source_x: Tensor<T> = bundle.source_x.cast();
    let target_x: Tensor<T> = bundle.target_x.cast();
    let mut rng = stream(cfg.seed, Stream::Batching);
    let mut adam = AdamState::new(model, cfg.learning_rate);
    let mut log = CurveLog::default();

    for step in 1..=cfg.steps {
        let si = sample_rows(&mut rng, bundle.n_source(), cfg.batch_size);
        let ti = sample_rows(&mut rng, bundle.n_target(), cfg.batch_size);
        let xs = source_x.gather_rows(&si);
        let xt = target_x.gather_rows(&ti);
        let labels: Vec<usize> = si.iter().map(|&i| bundle.source_noisy[i]).collect();

        let tape = Tape::new();
        let losses = build_objective(
            model,
            &tape,
            Batch { source_x: &xs, source_labels: &labels, target_x: &xt },
            &cfg.objective,
        )?;
        let (d, c, v) = (
            losses.domain.item(),
            losses.classification.item(),
            losses.diversity.item(),
        );
        let non_finite: Vec<&str> = [("domain_loss", d), ("classification_loss", c), ("diversity_loss", v)]
            .iter()
            .filter(|(_, x)| !x.is_finite())
            .map(|(n, _)| *n)
            .collect();
        if !non_finite.is_empty() {
            return Err(Error::NonFinite { step, losses: non_finite.join(", ") });
        }
        if step % cfg.log_every == 0 {
            log.entries.push(CurveEntry {
                step,
                domain_loss: d.as_f64(),
                classification_loss: c.as_f64(),
                diversity_loss: v.as_f64(),
                mean_lambda: losses.mean_lambda().as_f64(),
            });
        }
        if !cfg.dry_run {
            let grads = tape.backward(losses.backprop)?;
            adam.update(model, &grads)?;
        }
    }
    Ok(log)
}

/// Combines two rows of peer probabilities.
pub fn combine_rows<T: Scalar>(p1: &[T], p2: &[T], ensemble: Ensemble) -> Vec<T> {
    match ensemble {
        Ensemble::Average => {
            let half = T::of(0.5);
            p1.iter().zip(p2).map(|(&a, &b)| (a + b) * half).collect()
        }
        Ensemble::Maximum => {
            let m: Vec<T> = p1.iter().zip(p2).map(|(&a, &b)| a.max(b)).collect();
            let s: T = m.iter().copied().sum();
            m.into_iter().map(|v| v / s).collect()
        }
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Ensemble prediction of both peers. The noise layer is not used.
pub fn infer<T: Scalar>(
    model: &CollaborativeModel<T>,
    x: &Tensor<T>,
    ensemble: Ensemble,
) -> Result<(Tensor<T>, Vec<usize>)> {
    x.require_matrix("infer")?;
    if x.cols() != model.architecture().input_dim {
        return Err(Error::Shape {
            op: "infer",
            lhs: x.shape().to_vec(),
            rhs: vec![model.architecture().input_dim],
        });
    }
    let (_, p1) = model.predict_peer(0, x)?;
    let (_, p2) = model.predict_peer(1, x)?;
    ensemble_probs(&p1, &p2, ensemble)
}

/// Combines two peers' probability matrices row by row.
pub fn ensemble_probs<T: Scalar>(
    p1: &Tensor<T>,
    p2: &Tensor<T>,
    ensemble: Ensemble,
) -> Result<(Tensor<T>, Vec<usize>)> {
    if p1.shape() != p2.shape() {
        return Err(Error::Shape { op: "ensemble", lhs: p1.shape().to_vec(), rhs: p2.shape().to_vec() });
    }
    p1.require_matrix("ensemble")?;
    let mut data = Vec::with_capacity(p1.numel());
    let mut labels = Vec::with_capacity(p1.rows());
    for (a, b) in p1.row_iter().zip(p2.row_iter()) {
        let row = combine_rows(a, b, ensemble);
        labels.push(argmax(&row));
        data.extend(row);
    }
    Ok((Tensor::matrix(p1.rows(), p1.cols(), data)?, labels))
}
