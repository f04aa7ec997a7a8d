//! Loss terms of the collaborative objective and their composition.
//!
//! The model parameters minimize `-α·L_d + L_c - η·L_div` while the
//! discriminator minimizes `L_d`. [`build_objective`] records all three terms
//! on one tape and returns a single scalar whose gradient realizes both
//! directions: the domain term is built on features passed through
//! [`Var::grad_reverse`] with coefficient `α`, so extractors see `-α·∇L_d`
//! and the discriminator sees `∇L_d`.

use std::fmt;
use std::str::FromStr;

use crate::autodiff::{concat, Tape, Tensor, Var};
use crate::error::{config, input, Error, Result};
use crate::model::CollaborativeModel;
use crate::scalar::Scalar;

/// Floor applied to probabilities before taking logs.
pub const PROB_FLOOR: f64 = 1e-12;

const NORMALIZATION_TOL: f64 = 1e-6;

macro_rules! named_enum {
    ($(#[$m:meta])* $name:ident { $($(#[$vm:meta])* $variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$m])*
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
        pub enum $name {
            $($(#[$vm])* $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($text => Ok($name::$variant),)+
                    _ => {
                        let valid: Vec<&str> = $name::ALL.iter().map(|v| v.as_str()).collect();
                        Err(config(format!(
                            "unknown {} {s:?}; valid names: {}",
                            stringify!($name),
                            valid.join(", ")
                        )))
                    }
                }
            }
        }
    };
}

pub(crate) use named_enum;

named_enum!(
    /// Distance between the peers' predictions used for sample weights.
    WeightMetric {
        #[default]
        Cosine => "cosine",
        L1 => "l1",
        L2 => "l2",
    }
);

named_enum!(
    /// Distance between the peers' predictions that the diversity term maximizes.
    DiversityMetric {
        #[default]
        Js => "js",
        Kl => "kl",
        L1 => "l1",
        L2 => "l2",
        Cos => "cos",
    }
);

named_enum!(
    DomainLossKind {
        #[default]
        LeastSquares => "least_squares",
        Gan => "gan",
    }
);

/// Transferability weight of one sample from the two peers' predictions.
///
/// Cosine gives `2 - cos(ŷ₁, ŷ₂)`, in `[1, 2]` for probability vectors. The
/// L1 and L2 variants give `1 + ‖ŷ₁ - ŷ₂‖`, which shares the floor of 1.
pub fn transfer_weight<T: Scalar>(p1: &[T], p2: &[T], metric: WeightMetric) -> Result<T> {
    if p1.len() != p2.len() {
        return Err(Error::Shape {
            op: "transfer_weight",
            lhs: vec![p1.len()],
            rhs: vec![p2.len()],
        });
    }
    Ok(match metric {
        WeightMetric::Cosine => {
            let dot: T = p1.iter().zip(p2).map(|(&a, &b)| a * b).sum();
            let n1 = p1.iter().map(|&a| a * a).sum::<T>().sqrt();
            let n2 = p2.iter().map(|&b| b * b).sum::<T>().sqrt();
            if n1 == T::zero() || n2 == T::zero() {
                return Err(input("transfer weight of a zero-norm prediction"));
            }
            T::of(2.0) - dot / (n1 * n2)
        }
        WeightMetric::L1 => T::one() + p1.iter().zip(p2).map(|(&a, &b)| (a - b).abs()).sum(),
        WeightMetric::L2 => {
            T::one()
                + p1.iter()
                    .zip(p2)
                    .map(|(&a, &b)| (a - b) * (a - b))
                    .sum::<T>()
                    .sqrt()
        }
    })
}

/// Row-wise weights for two `[n, K]` prediction batches, as an `[n, 1]` column.
pub fn transfer_weights<T: Scalar>(
    p1: &Tensor<T>,
    p2: &Tensor<T>,
    metric: WeightMetric,
) -> Result<Tensor<T>> {
    if p1.shape() != p2.shape() {
        return Err(Error::Shape {
            op: "transfer_weights",
            lhs: p1.shape().to_vec(),
            rhs: p2.shape().to_vec(),
        });
    }
    let w = p1
        .row_iter()
        .zip(p2.row_iter())
        .map(|(a, b)| transfer_weight(a, b, metric))
        .collect::<Result<Vec<T>>>()?;
    Tensor::matrix(p1.rows(), 1, w)
}

fn check_rows_normalized<T: Scalar>(p: &Tensor<T>, what: &str) -> Result<()> {
    for (i, row) in p.row_iter().enumerate() {
        let s: f64 = row.iter().map(|v| v.as_f64()).sum();
        if (s - 1.0).abs() > NORMALIZATION_TOL || row.iter().any(|&v| v < T::zero()) {
            return Err(input(format!("{what} row {i} is not a distribution (sum {s})")));
        }
    }
    Ok(())
}

/// One-hot `[n, K]` encoding of labels.
pub fn one_hot<T: Scalar>(labels: &[usize], n_classes: usize) -> Result<Tensor<T>> {
    let mut t = Tensor::zeros(&[labels.len(), n_classes]);
    for (i, &l) in labels.iter().enumerate() {
        if l >= n_classes {
            return Err(input(format!("label {l} out of range for {n_classes} classes")));
        }
        t.set(i, l, T::one());
    }
    Ok(t)
}

/// Discriminator outputs of one peer on the source and target batches.
#[derive(Clone, Copy)]
pub struct DomainScores<'t, T> {
    pub source: Var<'t, T>,
    pub target: Var<'t, T>,
}

/// Transferability-weighted domain loss summed over the peers.
///
/// Least squares: `Σ_τ [ mean_i λˢ_i d_τ(xˢ_i)² + mean_j λᵗ_j (d_τ(xᵗ_j) - 1)² ]`.
/// GAN: the same weights on binary cross-entropy, source labeled 0 and
/// target labeled 1.
pub fn domain_loss<'t, T: Scalar>(
    scores: &[DomainScores<'t, T>],
    lambda_source: &Tensor<T>,
    lambda_target: &Tensor<T>,
    kind: DomainLossKind,
) -> Result<Var<'t, T>> {
    let first = scores.first().ok_or_else(|| input("domain loss needs at least one peer"))?;
    let tape = first.source.tape();
    let n_s = lambda_source.rows();
    let n_t = lambda_target.rows();
    if n_s == 0 || n_t == 0 {
        return Err(input("domain loss needs non-empty source and target batches"));
    }
    let ls = tape.constant(lambda_source.clone());
    let lt = tape.constant(lambda_target.clone());
    let floor = T::of(PROB_FLOOR);

    let mut total: Option<Var<'t, T>> = None;
    for s in scores {
        let (src, tgt) = match kind {
            DomainLossKind::LeastSquares => (s.source.pow(T::of(2.0)), s.target.rsub_scalar(T::one()).pow(T::of(2.0))),
            DomainLossKind::Gan => (
                s.source.rsub_scalar(T::one()).ln_clamped(floor).neg(),
                s.target.ln_clamped(floor).neg(),
            ),
        };
        let src = src.mul(ls)?.sum().scale(T::one() / T::of(n_s as f64));
        let tgt = tgt.mul(lt)?.sum().scale(T::one() / T::of(n_t as f64));
        let term = src.add(tgt)?;
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(term)?,
        });
    }
    Ok(total.unwrap())
}

/// Focal loss on noisy-label predictions of both peers:
/// `-(1/n) Σ_i Σ_τ z_iᵀ ((1 - ẑ_τ)^γ ⊙ log ẑ_τ)`.
pub fn focal_loss<'t, T: Scalar>(
    noisy_preds: &[Var<'t, T>],
    labels_one_hot: &Tensor<T>,
    gamma: T,
) -> Result<Var<'t, T>> {
    let first = noisy_preds.first().ok_or_else(|| input("focal loss needs at least one peer"))?;
    let tape = first.tape();
    if gamma < T::zero() {
        return Err(config(format!("focal γ must be >= 0, got {gamma}")));
    }
    for (i, row) in labels_one_hot.row_iter().enumerate() {
        let ones = row.iter().filter(|&&v| v == T::one()).count();
        let zeros = row.iter().filter(|&&v| v == T::zero()).count();
        if ones != 1 || ones + zeros != row.len() {
            return Err(input(format!("label row {i} is not one-hot")));
        }
    }
    let n = labels_one_hot.rows();
    if n == 0 {
        return Err(input("focal loss of an empty batch"));
    }
    let z = tape.constant(labels_one_hot.clone());
    let mut total: Option<Var<'t, T>> = None;
    for &p in noisy_preds {
        check_rows_normalized(&p.value(), "noisy prediction")?;
        let term = z
            .mul(p.rsub_scalar(T::one()).pow(gamma))?
            .mul(p.ln_clamped(T::of(PROB_FLOOR)))?
            .sum();
        total = Some(match total {
            None => term,
            Some(acc) => acc.add(term)?,
        });
    }
    Ok(total.unwrap().scale(-T::one() / T::of(n as f64)))
}

fn kl_rows<'t, T: Scalar>(p: Var<'t, T>, q: Var<'t, T>) -> Result<Var<'t, T>> {
    let floor = T::of(PROB_FLOOR);
    // 0·log 0 = 0 comes from the clamp: p = 0 multiplies a finite log.
    p.mul(p.ln_clamped(floor).sub(q.ln_clamped(floor))?)
        .map(|v| v.sum())
}

/// Disagreement between the peers averaged over the batch rows.
pub fn diversity_loss<'t, T: Scalar>(
    p1: Var<'t, T>,
    p2: Var<'t, T>,
    metric: DiversityMetric,
) -> Result<Var<'t, T>> {
    {
        let (a, b) = (p1.value(), p2.value());
        if a.shape() != b.shape() {
            return Err(Error::Shape {
                op: "diversity_loss",
                lhs: a.shape().to_vec(),
                rhs: b.shape().to_vec(),
            });
        }
        check_rows_normalized(&a, "peer 1 prediction")?;
        check_rows_normalized(&b, "peer 2 prediction")?;
    }
    let n = p1.value().rows();
    if n == 0 {
        return Err(input("diversity loss of an empty batch"));
    }
    let inv_n = T::one() / T::of(n as f64);
    let summed = match metric {
        DiversityMetric::Js => {
            let mid = p1.add(p2)?.scale(T::of(0.5));
            kl_rows(p1, mid)?.add(kl_rows(p2, mid)?)?
        }
        DiversityMetric::Kl => kl_rows(p1, p2)?,
        DiversityMetric::L1 => p1.sub(p2)?.abs().sum(),
        DiversityMetric::L2 => p1.sub(p2)?.pow(T::of(2.0)).sum_rows()?.pow(T::of(0.5)).sum(),
        DiversityMetric::Cos => {
            let dot = p1.mul(p2)?.sum_rows()?;
            let inv1 = p1.pow(T::of(2.0)).sum_rows()?.pow(T::of(-0.5));
            let inv2 = p2.pow(T::of(2.0)).sum_rows()?.pow(T::of(-0.5));
            dot.mul(inv1)?.mul(inv2)?.rsub_scalar(T::one()).sum()
        }
    };
    Ok(summed.scale(inv_n))
}

/// Scalar value of the min-max objective seen by the networks:
/// `-α·L_d + L_c - η·L_div`.
pub fn total_objective<T: Scalar>(domain: T, classification: T, diversity: T, alpha: T, eta: T) -> Result<T> {
    if alpha < T::zero() || eta < T::zero() {
        return Err(config(format!("trade-offs must be >= 0, got α={alpha}, η={eta}")));
    }
    Ok(classification - alpha * domain - eta * diversity)
}

/// Switches and trade-offs that shape the objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveConfig {
    pub alpha: f64,
    pub eta: f64,
    pub gamma: f64,
    pub weight_metric: WeightMetric,
    /// Replace the transferability weights by 1.
    pub uniform_weights: bool,
    pub diversity_metric: DiversityMetric,
    pub domain_loss: DomainLossKind,
    /// Use the noise co-adaptation layer; otherwise the transition is the
    /// identity and the classification loss sees the clean-label predictions.
    pub noise_layer: bool,
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        ObjectiveConfig {
            alpha: 0.1,
            eta: 0.01,
            gamma: 2.0,
            weight_metric: WeightMetric::Cosine,
            uniform_weights: false,
            diversity_metric: DiversityMetric::Js,
            domain_loss: DomainLossKind::LeastSquares,
            noise_layer: true,
        }
    }
}

impl ObjectiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0) || !(self.eta >= 0.0) {
            return Err(config(format!(
                "trade-offs must be >= 0, got α={}, η={}",
                self.alpha, self.eta
            )));
        }
        if !(self.gamma >= 0.0) {
            return Err(config(format!("focal γ must be >= 0, got {}", self.gamma)));
        }
        Ok(())
    }
}

/// One labeled source batch and one unlabeled target batch.
#[derive(Clone, Copy, Debug)]
pub struct Batch<'a, T> {
    pub source_x: &'a Tensor<T>,
    pub source_labels: &'a [usize],
    pub target_x: &'a Tensor<T>,
}

/// Every loss term of one step, recorded on a tape.
pub struct LossBundle<'t, T> {
    pub domain: Var<'t, T>,
    pub classification: Var<'t, T>,
    pub diversity: Var<'t, T>,
    /// Value of `-α·L_d + L_c - η·L_div`.
    pub total: T,
    /// The scalar to differentiate.
    pub backprop: Var<'t, T>,
    pub lambda_source: Tensor<T>,
    pub lambda_target: Tensor<T>,
}

impl<T: Scalar> LossBundle<'_, T> {
    pub fn mean_lambda(&self) -> T {
        let n = self.lambda_source.numel() + self.lambda_target.numel();
        (self.lambda_source.sum() + self.lambda_target.sum()) / T::of(n as f64)
    }
}

/// Domain term alone: features optionally pass through a gradient reversal
/// with coefficient `reverse` before the shared discriminator.
pub fn domain_term<'t, T: Scalar>(
    model: &CollaborativeModel<T>,
    features_source: &[Var<'t, T>; 2],
    features_target: &[Var<'t, T>; 2],
    lambda_source: &Tensor<T>,
    lambda_target: &Tensor<T>,
    kind: DomainLossKind,
    reverse: Option<T>,
) -> Result<Var<'t, T>> {
    let mut scores = Vec::with_capacity(2);
    for tau in 0..2 {
        let (mut fs, mut ft) = (features_source[tau], features_target[tau]);
        if let Some(c) = reverse {
            fs = fs.grad_reverse(c)?;
            ft = ft.grad_reverse(c)?;
        }
        scores.push(DomainScores {
            source: model.discriminate(fs)?,
            target: model.discriminate(ft)?,
        });
    }
    domain_loss(&scores, lambda_source, lambda_target, kind)
}

/// Records the full objective for one step.
pub fn build_objective<'t, T: Scalar>(
    model: &CollaborativeModel<T>,
    tape: &'t Tape<T>,
    batch: Batch<'_, T>,
    cfg: &ObjectiveConfig,
) -> Result<LossBundle<'t, T>> {
    cfg.validate()?;
    if batch.source_x.rows() != batch.source_labels.len() {
        return Err(input(format!(
            "{} source rows but {} labels",
            batch.source_x.rows(),
            batch.source_labels.len()
        )));
    }
    let xs = tape.constant(batch.source_x.clone());
    let xt = tape.constant(batch.target_x.clone());
    let src = [model.forward_peer(0, xs)?, model.forward_peer(1, xs)?];
    let tgt = [model.forward_peer(0, xt)?, model.forward_peer(1, xt)?];

    let (lambda_source, lambda_target) = if cfg.uniform_weights {
        (
            Tensor::full(&[batch.source_x.rows(), 1], T::one()),
            Tensor::full(&[batch.target_x.rows(), 1], T::one()),
        )
    } else {
        (
            transfer_weights(&src[0].probs.value(), &src[1].probs.value(), cfg.weight_metric)?,
            transfer_weights(&tgt[0].probs.value(), &tgt[1].probs.value(), cfg.weight_metric)?,
        )
    };

    let alpha = T::of(cfg.alpha);
    let fs = [src[0].features, src[1].features];
    let ft = [tgt[0].features, tgt[1].features];
    let reverse = (cfg.alpha > 0.0).then_some(alpha);
    let domain = domain_term(model, &fs, &ft, &lambda_source, &lambda_target, cfg.domain_loss, reverse)?;

    let labels = one_hot(batch.source_labels, model.n_classes())?;
    let noisy = if cfg.noise_layer {
        [
            src[0].probs.row_vec_mat(model.noise_layer.transition(src[0].features)?)?,
            src[1].probs.row_vec_mat(model.noise_layer.transition(src[1].features)?)?,
        ]
    } else {
        [src[0].probs, src[1].probs]
    };
    let classification = focal_loss(&noisy, &labels, T::of(cfg.gamma))?;

    let p1 = concat(&[src[0].probs, tgt[0].probs], 0)?;
    let p2 = concat(&[src[1].probs, tgt[1].probs], 0)?;
    let diversity = diversity_loss(p1, p2, cfg.diversity_metric)?;

    let total = total_objective(
        domain.item(),
        classification.item(),
        diversity.item(),
        alpha,
        T::of(cfg.eta),
    )?;

    let mut backprop = classification;
    if cfg.eta > 0.0 {
        backprop = backprop.sub(diversity.scale(T::of(cfg.eta)))?;
    }
    if cfg.alpha > 0.0 {
        backprop = backprop.add(domain)?;
    }

    Ok(LossBundle {
        domain,
        classification,
        diversity,
        total,
        backprop,
        lambda_source,
        lambda_target,
    })
}
