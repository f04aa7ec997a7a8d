//! Classification metrics and recovery error of the noise transition matrix.

use std::fmt::Write as _;

use crate::autodiff::Tensor;
use crate::error::{input, Error, Result};
use crate::model::CollaborativeModel;
use crate::scalar::Scalar;

/// Counts indexed by (true class, predicted class).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    n_classes: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(input(format!(
                "{} true labels but {} predictions",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(input("no samples to evaluate"));
        }
        let mut counts = vec![0; n_classes * n_classes];
        for (&t, &p) in y_true.iter().zip(y_pred) {
            if t >= n_classes || p >= n_classes {
                return Err(input(format!("label pair ({t}, {p}) out of range for K={n_classes}")));
            }
            counts[t * n_classes + p] += 1;
        }
        Ok(ConfusionMatrix { n_classes, counts })
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn get(&self, truth: usize, pred: usize) -> u64 {
        self.counts[truth * self.n_classes + pred]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        (0..self.n_classes).map(|p| self.get(truth, p)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.n_classes).map(|t| self.get(t, pred)).sum()
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f1: Vec<f64>,
    pub q_error_maxabs: f64,
    pub q_error_frobenius: f64,
}

impl MetricsReport {
    pub fn from_confusion(cm: &ConfusionMatrix) -> Self {
        let k = cm.n_classes();
        let precision: Vec<f64> = (0..k).map(|c| ratio(cm.get(c, c), cm.col_sum(c))).collect();
        let recall: Vec<f64> = (0..k).map(|c| ratio(cm.get(c, c), cm.row_sum(c))).collect();
        let f1s: Vec<f64> = precision.iter().zip(&recall).map(|(&p, &r)| f1(p, r)).collect();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / k as f64;
        let trace: u64 = (0..k).map(|c| cm.get(c, c)).sum();
        MetricsReport {
            accuracy: ratio(trace, cm.total()),
            macro_precision: mean(&precision),
            macro_recall: mean(&recall),
            macro_f1: mean(&f1s),
            precision,
            recall,
            f1: f1s,
            q_error_maxabs: 0.0,
            q_error_frobenius: 0.0,
        }
    }

    /// `name,value` lines in a fixed order, per-class entries suffixed by
    /// the class index.
    pub fn fields(&self) -> Vec<(String, f64)> {
        let mut out = vec![
            ("accuracy".to_string(), self.accuracy),
            ("macro_precision".to_string(), self.macro_precision),
            ("macro_recall".to_string(), self.macro_recall),
            ("macro_f1".to_string(), self.macro_f1),
        ];
        for (name, v) in [("precision", &self.precision), ("recall", &self.recall), ("f1", &self.f1)] {
            for (k, x) in v.iter().enumerate() {
                out.push((format!("{name}_{k}"), *x));
            }
        }
        out.push(("q_error_maxabs".to_string(), self.q_error_maxabs));
        out.push(("q_error_frobenius".to_string(), self.q_error_frobenius));
        out
    }

    /// Report file text, with the estimated and true matrices appended as
    /// `Q_est` and `Q_true` row blocks.
    pub fn to_csv(&self, q_est: Option<&Tensor<f64>>, q_true: Option<&Tensor<f64>>) -> String {
        let mut s = String::from("name,value\n");
        for (n, v) in self.fields() {
            writeln!(s, "{n},{v}").unwrap();
        }
        for (label, q) in [("Q_est", q_est), ("Q_true", q_true)] {
            if let Some(q) = q {
                for (r, row) in q.row_iter().enumerate() {
                    let vals: Vec<String> = row.iter().map(f64::to_string).collect();
                    writeln!(s, "{label},{r},{}", vals.join(",")).unwrap();
                }
            }
        }
        s
    }
}

pub fn compute_metrics(y_true: &[usize], y_pred: &[usize], n_classes: usize) -> Result<MetricsReport> {
    Ok(MetricsReport::from_confusion(&ConfusionMatrix::new(y_true, y_pred, n_classes)?))
}

/// Mean transition matrix of the noise layer over a feature sample, taken
/// through both peers' extractors.
pub fn estimated_q<T: Scalar>(model: &CollaborativeModel<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    x.require_matrix("estimated_q")?;
    if x.rows() == 0 {
        return Err(input("estimated Q needs at least one sample"));
    }
    let k = model.n_classes();
    let mut acc = Tensor::zeros(&[k, k]);
    for peer in 0..2 {
        let (features, _) = model.predict_peer(peer, x)?;
        for f in features.row_iter() {
            acc.add_assign(&model.noise_layer.transition_for(f)?);
        }
    }
    let inv = T::one() / T::of((2 * x.rows()) as f64);
    Ok(acc.map(|v| v * inv))
}

/// Max-abs and Frobenius norms of `a - b`.
pub fn q_error<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<(T, T)> {
    if a.shape() != b.shape() {
        return Err(Error::Shape { op: "q_error", lhs: a.shape().to_vec(), rhs: b.shape().to_vec() });
    }
    let mut maxabs = T::zero();
    let mut sq = T::zero();
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let d = (x - y).abs();
        maxabs = maxabs.max(d);
        sq = sq + d * d;
    }
    Ok((maxabs, sq.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::uniform_noise_matrix;
    use crate::model::Architecture;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-4
    }

    #[test]
    fn perfect_prediction() {
        let y = [0, 1, 2, 2, 1];
        let r = compute_metrics(&y, &y, 3).unwrap();
        assert_eq!((r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn hand_worked_example() {
        let r = compute_metrics(&[0, 0, 1, 1], &[0, 1, 1, 1], 2).unwrap();
        assert_eq!(r.accuracy, 0.75);
        assert!(close(r.macro_precision, 0.8333));
        assert_eq!(r.macro_recall, 0.75);
        assert!(close(r.macro_f1, 0.7333));
    }

    #[test]
    fn constant_predictor() {
        let r = compute_metrics(&[0, 0, 1, 1], &[0, 0, 0, 0], 2).unwrap();
        assert_eq!(r.accuracy, 0.5);
        assert!((r.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.precision[1], 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(compute_metrics(&[0, 3], &[0, 1], 3).is_err());
        assert!(compute_metrics(&[0], &[0, 1], 3).is_err());
        assert!(compute_metrics(&[], &[], 3).is_err());
    }

    #[test]
    fn invariant_under_relabeling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let perm = [2, 0, 3, 1];
        for _ in 0..100 {
            let n = rng.random_range(1..40);
            let t: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let p: Vec<usize> = (0..n).map(|_| rng.random_range(0..4)).collect();
            let a = compute_metrics(&t, &p, 4).unwrap();
            let tp: Vec<usize> = t.iter().map(|&v| perm[v]).collect();
            let pp: Vec<usize> = p.iter().map(|&v| perm[v]).collect();
            let b = compute_metrics(&tp, &pp, 4).unwrap();
            assert_eq!(a.accuracy, b.accuracy);
            assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
            assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
        }
    }

    #[test]
    fn q_error_cases() {
        let q = uniform_noise_matrix(0.2, 3).unwrap();
        assert_eq!(q_error(&q, &q).unwrap(), (0.0, 0.0));
        let mut p = q.clone();
        p.set(1, 2, p.get(1, 2) + 0.1);
        let (m, f) = q_error(&p, &q).unwrap();
        assert!((m - 0.1).abs() < 1e-12 && (f - 0.1).abs() < 1e-12);
        let (m, _) = q_error(&uniform_noise_matrix(0.1, 3).unwrap(), &Tensor::identity(3)).unwrap();
        assert!((m - 0.1).abs() < 1e-12);
        assert!(q_error(&q, &Tensor::identity(2)).is_err());
    }

    #[test]
    fn fresh_layer_estimate() {
        let m = CollaborativeModel::<f64>::new(Architecture::desk(2, 3), 0.8, 4).unwrap();
        let x1 = Tensor::from_rows(&[vec![0.3, -1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x100 = Tensor::matrix(100, 2, (0..200).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let a = estimated_q(&m, &x1).unwrap();
        let b = estimated_q(&m, &x100).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 0.2 } else { 0.4 };
                assert!((a.get(i, j) - want).abs() < 1e-12);
                assert!((a.get(i, j) - b.get(i, j)).abs() < 1e-12);
            }
            assert!((b.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(estimated_q(&m, &Tensor::zeros(&[0, 2])).is_err());
    }

    #[test]
    fn report_schema() {
        let r = compute_metrics(&[0, 1, 2], &[0, 1, 1], 3).unwrap();
        let q = Tensor::identity(3);
        let text = r.to_csv(Some(&q), Some(&q));
        let names: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
        assert_eq!(&names[..4], ["accuracy", "macro_precision", "macro_recall", "macro_f1"]);
        assert_eq!(names.iter().filter(|n| **n == "Q_est").count(), 3);
        assert_eq!(names.iter().filter(|n| **n == "Q_true").count(), 3);
    }
}
