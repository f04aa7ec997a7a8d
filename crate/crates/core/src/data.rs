//! Synthetic domain-shift data, label corruption and the dataset file format.
//!
//! Source samples come from Gaussian clusters whose means sit on a circular
//! arc in the first two coordinates. The default arc is an uneven fan, so no
//! rotation other than the true one maps the target clusters back onto the
//! source clusters. Target samples come from the same clusters
//! pushed through `x ↦ R·(s·(x + t))`: a translation, a scale and a rotation
//! of the first two coordinates.

use std::fmt::Write as _;
use std::io::BufRead;
use std::path::Path;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::Tensor;
use crate::error::{config, input, Error, Result};
use crate::rng::{stream, Stream};

#[derive(Clone, Debug, PartialEq)]
pub struct ShiftSpec {
    pub n_classes: usize,
    pub dim: usize,
    /// Training samples per class in each domain.
    pub per_class: usize,
    /// Held-out labeled target samples per class.
    pub test_per_class: usize,
    /// Radians, applied in the plane of the first two coordinates.
    pub rotation: f64,
    /// Added before scaling; missing trailing coordinates are zero.
    pub translation: Vec<f64>,
    pub scale: f64,
    /// Standard deviation of every cluster along every axis.
    pub spread: f64,
    /// Distance of the class means from the ring centre.
    pub radius: f64,
    /// Offset of the ring centre from the origin along the first axis.
    pub center: f64,
    /// Angular extent covered by the class means; mean `k` sits at angle
    /// `arc·k/K`. A full turn spaces the classes evenly.
    pub arc: f64,
}

impl Default for ShiftSpec {
    fn default() -> Self {
        ShiftSpec {
            n_classes: 3,
            dim: 2,
            per_class: 200,
            test_per_class: 200,
            rotation: 0.0,
            translation: Vec::new(),
            scale: 1.0,
            spread: 0.15,
            radius: 1.0,
            center: 0.0,
            arc: 1.25 * std::f64::consts::PI,
        }
    }
}

impl ShiftSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(config(format!("need K >= 2 classes, got {}", self.n_classes)));
        }
        if self.dim < 2 {
            return Err(config(format!("need at least 2 input dimensions, got {}", self.dim)));
        }
        if self.per_class == 0 || self.test_per_class == 0 {
            return Err(config("samples per class must be positive"));
        }
        if !(self.spread > 0.0) {
            return Err(config(format!("spread must be > 0, got {}", self.spread)));
        }
        if !(self.scale > 0.0) {
            return Err(config(format!("scale must be > 0, got {}", self.scale)));
        }
        if self.translation.len() > self.dim {
            return Err(config(format!(
                "translation has {} coordinates but dim is {}",
                self.translation.len(),
                self.dim
            )));
        }
        if ![self.rotation, self.radius, self.center, self.arc].iter().all(|v| v.is_finite()) {
            return Err(config("rotation, radius, center and arc must be finite"));
        }
        Ok(())
    }

    /// Mean of class `k` in the source domain.
    pub fn class_mean(&self, k: usize) -> Vec<f64> {
        let angle = self.arc * k as f64 / self.n_classes as f64;
        let mut m = vec![0.0; self.dim];
        m[0] = self.center + self.radius * angle.cos();
        m[1] = self.radius * angle.sin();
        m
    }

    /// Source-to-target map.
    pub fn shift(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            let t = self.translation.get(i).copied().unwrap_or(0.0);
            *v = self.scale * (*v + t);
        }
        let (c, s) = (self.rotation.cos(), self.rotation.sin());
        let (a, b) = (x[0], x[1]);
        x[0] = c * a - s * b;
        x[1] = s * a + c * b;
    }
}

/// Labeled noisy source data, unlabeled target data and a clean labeled
/// target test split.
///
/// Target training labels are never stored, so nothing downstream of the
/// generator can see them.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetBundle {
    pub n_classes: usize,
    pub dim: usize,
    pub source_x: Tensor<f64>,
    pub source_noisy: Vec<usize>,
    /// Diagnostics only; training uses `source_noisy`.
    pub source_clean: Vec<usize>,
    pub target_x: Tensor<f64>,
    pub test_x: Tensor<f64>,
    pub test_y: Vec<usize>,
    /// Row-stochastic `K×K`, entry `(k, m)` = P(noisy m | true k).
    pub true_q: Tensor<f64>,
    pub seed: u64,
}

impl DatasetBundle {
    pub fn n_source(&self) -> usize {
        self.source_x.rows()
    }

    pub fn n_target(&self) -> usize {
        self.target_x.rows()
    }

    /// Number of source samples per clean class.
    pub fn source_class_counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &y in &self.source_clean {
            c[y] += 1;
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_classes;
        let check_labels = |labels: &[usize], what: &str| {
            match labels.iter().find(|&&l| l >= k) {
                Some(l) => Err(input(format!("{what} label {l} out of range for K={k}"))),
                None => Ok(()),
            }
        };
        check_labels(&self.source_noisy, "source noisy")?;
        check_labels(&self.source_clean, "source clean")?;
        check_labels(&self.test_y, "test")?;
        let n = self.source_x.rows();
        if self.source_noisy.len() != n || self.source_clean.len() != n {
            return Err(input("source labels do not match source rows"));
        }
        if self.test_y.len() != self.test_x.rows() {
            return Err(input("test labels do not match test rows"));
        }
        for x in [&self.source_x, &self.target_x, &self.test_x] {
            if x.rows() > 0 && x.cols() != self.dim {
                return Err(input(format!("feature width {} != dim {}", x.cols(), self.dim)));
            }
        }
        if self.true_q.shape() != [k, k] {
            return Err(input(format!("true Q has shape {:?}, expected [{k}, {k}]", self.true_q.shape())));
        }
        for (r, row) in self.true_q.row_iter().enumerate() {
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 || row.iter().any(|&v| v < 0.0) {
                return Err(input(format!("true Q row {r} is not a distribution (sum {s})")));
            }
        }
        Ok(())
    }
}

fn draw_cluster(spec: &ShiftSpec, k: usize, n: usize, rng: &mut impl Rng, out: &mut Vec<f64>) {
    let mean = spec.class_mean(k);
    for _ in 0..n {
        for &m in &mean {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m + spec.spread * z);
        }
    }
}

/// Clean source, unlabeled target and labeled target test samples. Labels
/// are noise-free and `true_q` is the identity.
pub fn gen_shifted_gaussians(spec: &ShiftSpec, seed: u64) -> Result<DatasetBundle> {
    spec.validate()?;
    let mut rng = stream(seed, Stream::Data);
    let (k, d) = (spec.n_classes, spec.dim);

    let mut source = Vec::with_capacity(k * spec.per_class * d);
    let mut labels = Vec::with_capacity(k * spec.per_class);
    for c in 0..k {
        draw_cluster(spec, c, spec.per_class, &mut rng, &mut source);
        labels.extend(std::iter::repeat_n(c, spec.per_class));
    }

    let shifted = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
        let mut x = Vec::with_capacity(k * n * d);
        let mut y = Vec::with_capacity(k * n);
        for c in 0..k {
            let start = x.len();
            draw_cluster(spec, c, n, rng, &mut x);
            for row in x[start..].chunks_exact_mut(d) {
                spec.shift(row);
            }
            y.extend(std::iter::repeat_n(c, n));
        }
        (x, y)
    };
    let (target, _) = shifted(spec.per_class, &mut rng);
    let (test, test_y) = shifted(spec.test_per_class, &mut rng);

    Ok(DatasetBundle {
        n_classes: k,
        dim: d,
        source_x: Tensor::matrix(labels.len(), d, source)?,
        source_noisy: labels.clone(),
        source_clean: labels,
        target_x: Tensor::matrix(k * spec.per_class, d, target)?,
        test_x: Tensor::matrix(test_y.len(), d, test)?,
        test_y,
        true_q: Tensor::identity(k),
        seed,
    })
}

/// Uniform transition matrix: keep with probability `1 - ρ`, otherwise move
/// to one of the other `K - 1` classes uniformly.
pub fn uniform_noise_matrix(rho: f64, n_classes: usize) -> Result<Tensor<f64>> {
    if !(0.0..1.0).contains(&rho) {
        return Err(config(format!("noise rate must be in [0, 1), got {rho}")));
    }
    if n_classes < 2 {
        return Err(config(format!("need K >= 2 classes, got {n_classes}")));
    }
    let off = rho / (n_classes - 1) as f64;
    let data = (0..n_classes * n_classes)
        .map(|i| if i / n_classes == i % n_classes { 1.0 - rho } else { off })
        .collect();
    Tensor::matrix(n_classes, n_classes, data)
}

/// Flips each label with probability `ρ` to a uniformly chosen different class.
pub fn inject_label_noise(
    labels: &[usize],
    rho: f64,
    n_classes: usize,
    seed: u64,
) -> Result<(Vec<usize>, Tensor<f64>)> {
    let q = uniform_noise_matrix(rho, n_classes)?;
    if let Some(l) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(input(format!("label {l} out of range for K={n_classes}")));
    }
    let mut rng = stream(seed, Stream::Noise);
    let noisy = labels
        .iter()
        .map(|&y| {
            if rho > 0.0 && rng.random::<f64>() < rho {
                // Skip over the true class.
                let r = rng.random_range(0..n_classes - 1);
                if r >= y {
                    r + 1
                } else {
                    r
                }
            } else {
                y
            }
        })
        .collect();
    Ok((noisy, q))
}

/// Selects each class with probability `p_class`; selected classes keep a
/// uniform subsample of ⌈n/2⌉ of their source samples. Returns the new
/// bundle and the selected classes in increasing order.
pub fn imbalance_subsample(
    bundle: &DatasetBundle,
    p_class: f64,
    seed: u64,
) -> Result<(DatasetBundle, Vec<usize>)> {
    if !(0.0..=1.0).contains(&p_class) {
        return Err(config(format!("p_class must be in [0, 1], got {p_class}")));
    }
    let mut rng = stream(seed, Stream::Imbalance);
    let k = bundle.n_classes;
    let selected: Vec<usize> = (0..k).filter(|_| rng.random::<f64>() < p_class).collect();

    let mut keep = vec![true; bundle.n_source()];
    for &c in &selected {
        let members: Vec<usize> = (0..bundle.n_source())
            .filter(|&i| bundle.source_clean[i] == c)
            .collect();
        let n_keep = members.len().div_ceil(2);
        let mut chosen = vec![false; members.len()];
        for j in sample(&mut rng, members.len(), n_keep) {
            chosen[j] = true;
        }
        for (&i, &c) in members.iter().zip(&chosen) {
            keep[i] = c;
        }
    }

    let idx: Vec<usize> = (0..bundle.n_source()).filter(|&i| keep[i]).collect();
    let out = DatasetBundle {
        source_x: bundle.source_x.gather_rows(&idx),
        source_noisy: idx.iter().map(|&i| bundle.source_noisy[i]).collect(),
        source_clean: idx.iter().map(|&i| bundle.source_clean[i]).collect(),
        ..bundle.clone()
    };
    if let Some(c) = out.source_class_counts().iter().position(|&n| n == 0) {
        return Err(input(format!("class {c} has no source samples left")));
    }
    Ok((out, selected))
}

/// Corruption applied on top of a generated bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct Corruption {
    pub noise_rate: f64,
    pub p_class: f64,
}

/// Generates, subsamples for imbalance, then corrupts the source labels.
pub fn build_bundle(spec: &ShiftSpec, corruption: &Corruption, seed: u64) -> Result<DatasetBundle> {
    let clean = gen_shifted_gaussians(spec, seed)?;
    let (mut bundle, _) = imbalance_subsample(&clean, corruption.p_class, seed)?;
    let (noisy, q) = inject_label_noise(&bundle.source_clean, corruption.noise_rate, spec.n_classes, seed)?;
    bundle.source_noisy = noisy;
    bundle.true_q = q;
    Ok(bundle)
}

const SPLIT_SOURCE: &str = "source";
const SPLIT_TARGET: &str = "target";
const SPLIT_TEST: &str = "target_test";

fn push_row(s: &mut String, split: &str, domain: u8, noisy: i64, clean: i64, x: &[f64]) {
    write!(s, "{split},{domain},{noisy},{clean}").unwrap();
    for v in x {
        write!(s, ",{v}").unwrap();
    }
    s.push('\n');
}

/// Serializes a bundle to the text dataset format.
pub fn bundle_to_string(b: &DatasetBundle) -> String {
    let mut s = String::new();
    writeln!(s, "# couda-dataset v1, K={}, dim={}", b.n_classes, b.dim).unwrap();
    writeln!(s, "# seed {}", b.seed).unwrap();
    for i in 0..b.n_source() {
        push_row(
            &mut s,
            SPLIT_SOURCE,
            0,
            b.source_noisy[i] as i64,
            b.source_clean[i] as i64,
            b.source_x.row(i),
        );
    }
    for row in b.target_x.row_iter().take(b.n_target()) {
        push_row(&mut s, SPLIT_TARGET, 1, -1, -1, row);
    }
    for (i, &y) in b.test_y.iter().enumerate() {
        push_row(&mut s, SPLIT_TEST, 1, -1, y as i64, b.test_x.row(i));
    }
    for (r, row) in b.true_q.row_iter().enumerate() {
        let vals: Vec<String> = row.iter().map(f64::to_string).collect();
        writeln!(s, "# Q {r} {}", vals.join(",")).unwrap();
    }
    s
}

pub fn save_bundle(b: &DatasetBundle, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, bundle_to_string(b))?;
    Ok(())
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<DatasetBundle> {
    let f = std::fs::File::open(path)?;
    parse_bundle(std::io::BufReader::new(f))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let rest = line.strip_prefix("# couda-dataset v1, K=")?;
    let (k, rest) = rest.split_once(", dim=")?;
    Some((k.trim().parse().ok()?, rest.trim().parse().ok()?))
}

/// Parses the text dataset format; every error carries its line number.
pub fn parse_bundle(r: impl BufRead) -> Result<DatasetBundle> {
    let mut lines = r.lines();
    let header = match lines.next() {
        Some(l) => l?,
        None => return Err(Error::Parse { line: 1, msg: "empty dataset file".into() }),
    };
    let (k, dim) = parse_header(&header).ok_or_else(|| Error::Parse {
        line: 1,
        msg: format!("bad header {header:?}"),
    })?;
    if k < 2 || dim == 0 {
        return Err(Error::Parse { line: 1, msg: format!("invalid K={k} or dim={dim}") });
    }

    let mut seed = None;
    let (mut sx, mut sn, mut sc) = (Vec::new(), Vec::new(), Vec::new());
    let mut tx = Vec::new();
    let (mut ex, mut ey) = (Vec::new(), Vec::new());
    let mut q: Vec<Option<Vec<f64>>> = vec![None; k];

    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let perr = |msg: String| Error::Parse { line: lineno, msg };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(c) = line.strip_prefix('#') {
            let c = c.trim();
            if let Some(v) = c.strip_prefix("seed ") {
                seed = Some(v.trim().parse::<u64>().map_err(|e| perr(format!("bad seed: {e}")))?);
            } else if let Some(v) = c.strip_prefix("Q ") {
                let (idx, vals) = v.split_once(' ').ok_or_else(|| perr("bad Q row".into()))?;
                let idx: usize = idx.parse().map_err(|e| perr(format!("bad Q row index: {e}")))?;
                if idx >= k {
                    return Err(perr(format!("Q row {idx} out of range for K={k}")));
                }
                let vals = vals
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| perr(format!("bad Q value: {e}")))?;
                if vals.len() != k {
                    return Err(perr(format!("Q row has {} values, expected {k}", vals.len())));
                }
                q[idx] = Some(vals);
            }
            continue;
        }

        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + dim {
            return Err(perr(format!("expected {} fields, found {}", 4 + dim, fields.len())));
        }
        let label = |s: &str, what: &str| -> Result<Option<usize>> {
            let v: i64 = s.trim().parse().map_err(|e| perr(format!("bad {what} {s:?}: {e}")))?;
            match v {
                -1 => Ok(None),
                v if v >= 0 && (v as usize) < k => Ok(Some(v as usize)),
                v => Err(perr(format!("{what} {v} out of range for K={k}"))),
            }
        };
        let domain = fields[1].trim();
        let noisy = label(fields[2], "noisy label")?;
        let clean = label(fields[3], "clean label")?;
        let x = fields[4..]
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(format!("bad feature value: {e}")))?;
        match (fields[0].trim(), domain) {
            (SPLIT_SOURCE, "0") => {
                let (Some(n), Some(c)) = (noisy, clean) else {
                    return Err(perr("source rows need noisy and clean labels".into()));
                };
                sx.extend(x);
                sn.push(n);
                sc.push(c);
            }
            (SPLIT_TARGET, "1") => tx.extend(x),
            (SPLIT_TEST, "1") => {
                let Some(c) = clean else {
                    return Err(perr("target_test rows need a clean label".into()));
                };
                ex.extend(x);
                ey.push(c);
            }
            (split, d) => return Err(perr(format!("unknown split/domain {split:?}/{d:?}"))),
        }
    }

    let mut qdata = Vec::with_capacity(k * k);
    for (r, row) in q.into_iter().enumerate() {
        let row = row.ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("missing Q row {r} (truncated file?)"),
        })?;
        qdata.extend(row);
    }
    let seed = seed.ok_or_else(|| Error::Parse { line: 0, msg: "missing seed comment".into() })?;
    let n_t = tx.len() / dim;
    let bundle = DatasetBundle {
        n_classes: k,
        dim,
        source_x: Tensor::matrix(sn.len(), dim, sx)?,
        source_noisy: sn,
        source_clean: sc,
        target_x: Tensor::matrix(n_t, dim, tx)?,
        test_x: Tensor::matrix(ey.len(), dim, ex)?,
        test_y: ey,
        true_q: Tensor::matrix(k, k, qdata)?,
        seed,
    };
    bundle.validate()?;
    Ok(bundle)
}
