//! Command-line driver: dataset generation, training, evaluation, ablation
//! sweeps and noise-matrix inspection.
//!
//! Exit codes are 0 on success, 2 for usage or validation errors (including
//! missing files) and 3 for numerical failures during training.

// Negated comparisons double as NaN rejection in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Arg, ArgAction, ArgMatches, Command};
use rayon::prelude::*;

use couda::autodiff::Tensor;
use couda::data::{build_bundle, load_bundle, save_bundle, DatasetBundle};
use couda::metrics::{compute_metrics, estimated_q, q_error, MetricsReport};
use couda::training::{infer, train, Ensemble};
use couda::{Error, Model64};

pub use config::{Component, RunConfig, KEYS};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

pub const SEED_ENV: &str = "COUDA_SEED";

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite { .. } => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

pub fn command() -> Command {
    let keyed = |mut c: Command| {
        c = c.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .help("flat `key = value` configuration file"),
        );
        for &(key, help) in KEYS {
            c = c.arg(Arg::new(key).long(key).value_name("VALUE").help(help).action(ArgAction::Set));
        }
        c
    };
    Command::new("couda")
        .about("Collaborative domain adaptation with noisy source labels")
        .subcommand_required(true)
        .arg_required_else_help(true)
        .subcommand(keyed(
            Command::new("gen-data").about("Generate a synthetic shifted dataset").arg(
                Arg::new("output")
                    .short('o')
                    .long("output")
                    .value_name("FILE")
                    .help("dataset file to write (same as --dataset)"),
            ),
        ))
        .subcommand(keyed(Command::new("train").about("Train both peers on a dataset")))
        .subcommand(keyed(Command::new("eval").about("Evaluate a checkpoint on the target test split")))
        .subcommand(keyed(Command::new("ablate").about("Train and evaluate a grid of variants")))
        .subcommand(keyed(
            Command::new("inspect-noise-matrix").about("Print estimated and true noise transition matrices"),
        ))
}

/// Defaults, then `COUDA_SEED`, then the config file, then flags.
pub fn resolve(m: &ArgMatches, env_seed: Option<&str>) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(s) = env_seed {
        cfg.set("seed", s)
            .map_err(|e| CliError::usage(format!("{SEED_ENV}: {}", e.message)))?;
    }
    if let Some(path) = m.get_one::<String>("config") {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(Path::new(path), e))?;
        cfg.apply_file_text(&text)?;
    }
    for &(key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    if let Ok(Some(o)) = m.try_get_one::<String>("output") {
        cfg.dataset = PathBuf::from(o);
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses arguments, runs one command and returns the exit code.
pub fn run<I, A>(args: I, env_seed: Option<&str>, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = A>,
    A: Into<OsString> + Clone,
{
    let matches = match command().try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match dispatch(&matches, env_seed, out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(m: &ArgMatches, env_seed: Option<&str>, out: &mut dyn Write) -> Result<(), CliError> {
    let (name, sub) = m.subcommand().expect("subcommand is required");
    let cfg = resolve(sub, env_seed)?;
    let text = match name {
        "gen-data" => cmd_gen_data(&cfg)?,
        "train" => cmd_train(&cfg)?,
        "eval" => cmd_eval(&cfg)?,
        "ablate" => cmd_ablate(&cfg)?,
        "inspect-noise-matrix" => cmd_inspect(&cfg)?,
        other => return Err(CliError::usage(format!("unknown command {other}"))),
    };
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::usage(format!("cannot write output: {e}")))
}

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => std::fs::create_dir_all(p).map_err(|e| io_err(p, e)),
        _ => Ok(()),
    }
}

/// Writes the resolved configuration next to the outputs.
pub fn echo_config(cfg: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    let path = cfg.out_dir.join(name);
    ensure_parent(&path)?;
    std::fs::write(&path, cfg.to_text()).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn format_matrix(q: &Tensor<f64>) -> String {
    let mut s = String::new();
    for row in q.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.4}")).collect();
        writeln!(s, "  [{}]", cells.join(", ")).unwrap();
    }
    s
}

fn load_dataset(cfg: &RunConfig) -> Result<DatasetBundle, CliError> {
    if !cfg.dataset.exists() {
        return Err(CliError::usage(format!("dataset {} does not exist", cfg.dataset.display())));
    }
    Ok(load_bundle(&cfg.dataset)?)
}

fn load_model(cfg: &RunConfig, bundle: &DatasetBundle) -> Result<Model64, CliError> {
    let path = cfg.checkpoint_path();
    if !path.exists() {
        return Err(CliError::usage(format!("checkpoint {} does not exist", path.display())));
    }
    let model = Model64::from_checkpoint(&path)?;
    let arch = model.architecture();
    if arch.n_classes != bundle.n_classes || arch.input_dim != bundle.dim {
        return Err(CliError::usage(format!(
            "checkpoint expects K={}, dim={} but the dataset has K={}, dim={}",
            arch.n_classes, arch.input_dim, bundle.n_classes, bundle.dim
        )));
    }
    Ok(model)
}

pub fn cmd_gen_data(cfg: &RunConfig) -> Result<String, CliError> {
    let bundle = build_bundle(&cfg.shift_spec(), &cfg.corruption(), cfg.seed)?;
    ensure_parent(&cfg.dataset)?;
    save_bundle(&bundle, &cfg.dataset)?;
    let mut s = String::new();
    writeln!(s, "wrote {}", cfg.dataset.display()).unwrap();
    writeln!(s, "K = {}", bundle.n_classes).unwrap();
    writeln!(s, "n_s = {}", bundle.n_source()).unwrap();
    writeln!(s, "n_t = {}", bundle.n_target()).unwrap();
    writeln!(s, "true_Q =\n{}", format_matrix(&bundle.true_q)).unwrap();
    Ok(s)
}

/// Trains a fresh model seeded from `cfg.seed`.
pub fn train_model(cfg: &RunConfig, bundle: &DatasetBundle) -> Result<(Model64, couda::training::CurveLog), CliError> {
    let mut model = Model64::new(cfg.architecture(bundle.dim, bundle.n_classes), cfg.eps, cfg.seed)?;
    let log = train(&mut model, bundle, &cfg.train_config())?;
    Ok((model, log))
}

pub fn cmd_train(cfg: &RunConfig) -> Result<String, CliError> {
    let bundle = load_dataset(cfg)?;
    let (model, log) = train_model(cfg, &bundle)?;
    let (ck, curves) = (cfg.checkpoint_path(), cfg.curves_path());
    ensure_parent(&ck)?;
    ensure_parent(&curves)?;
    model.save_checkpoint(&ck)?;
    log.save(&curves)?;
    let echo = echo_config(cfg, "train-config.txt")?;
    let mut s = String::new();
    if let Some(last) = log.entries.last() {
        writeln!(
            s,
            "step {}: domain {:.6} classification {:.6} diversity {:.6} lambda {:.6}",
            last.step, last.domain_loss, last.classification_loss, last.diversity_loss, last.mean_lambda
        )
        .unwrap();
    }
    writeln!(s, "checkpoint {}", ck.display()).unwrap();
    writeln!(s, "curves {}", curves.display()).unwrap();
    writeln!(s, "config {}", echo.display()).unwrap();
    Ok(s)
}

/// Metrics on the target test split plus the noise-matrix recovery error
/// against the bundle's ground truth.
pub fn evaluate(
    model: &Model64,
    bundle: &DatasetBundle,
    ensemble: Ensemble,
) -> Result<(MetricsReport, Tensor<f64>), CliError> {
    let (_, pred) = infer(model, &bundle.test_x, ensemble)?;
    let mut report = compute_metrics(&bundle.test_y, &pred, bundle.n_classes)?;
    let q = estimated_q(model, &bundle.source_x)?;
    let (maxabs, frob) = q_error(&q, &bundle.true_q)?;
    report.q_error_maxabs = maxabs;
    report.q_error_frobenius = frob;
    Ok((report, q))
}

pub fn cmd_eval(cfg: &RunConfig) -> Result<String, CliError> {
    let bundle = load_dataset(cfg)?;
    let model = load_model(cfg, &bundle)?;
    let (report, q) = evaluate(&model, &bundle, cfg.ensemble)?;
    let path = cfg.report_path();
    ensure_parent(&path)?;
    std::fs::write(&path, report.to_csv(Some(&q), Some(&bundle.true_q))).map_err(|e| io_err(&path, e))?;
    echo_config(cfg, "eval-config.txt")?;
    let mut s = String::new();
    for (name, v) in report.fields().iter().take(4) {
        writeln!(s, "{name} = {v:.4}").unwrap();
    }
    writeln!(s, "q_error_maxabs = {:.4}", report.q_error_maxabs).unwrap();
    writeln!(s, "report {}", path.display()).unwrap();
    Ok(s)
}

pub fn cmd_inspect(cfg: &RunConfig) -> Result<String, CliError> {
    let bundle = load_dataset(cfg)?;
    let model = load_model(cfg, &bundle)?;
    let q = estimated_q(&model, &bundle.source_x)?;
    let (maxabs, frob) = q_error(&q, &bundle.true_q)?;
    Ok(format!(
        "estimated_Q =\n{}true_Q =\n{}q_error maxabs = {maxabs:.6}, frobenius = {frob:.6}\n",
        format_matrix(&q),
        format_matrix(&bundle.true_q)
    ))
}

/// One trained variant of the ablation grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AblationCell {
    pub component: Component,
    pub config: RunConfig,
}

/// Expands the configured axes into training cells. Ensembles are an
/// inference axis and are applied per cell afterwards.
pub fn ablation_cells(cfg: &RunConfig) -> Result<Vec<AblationCell>, CliError> {
    fn axis<T: Clone>(key: &str, v: &Option<Vec<T>>, single: T) -> Result<Vec<T>, CliError> {
        match v {
            Some(v) if v.is_empty() => Err(CliError::usage(format!("--{key}: empty grid"))),
            Some(v) => Ok(v.clone()),
            None => Ok(vec![single]),
        }
    }
    let components = axis("components", &cfg.components, Component::Full)?;
    let wms = axis("weight-metrics", &cfg.weight_metrics, cfg.weight_metric)?;
    let dms = axis("diversity-metrics", &cfg.diversity_metrics, cfg.diversity_metric)?;
    let dls = axis("domain-losses", &cfg.domain_losses, cfg.domain_loss)?;
    axis("ensembles", &cfg.ensembles, cfg.ensemble)?;
    let seeds = axis("seeds", &cfg.seeds, cfg.seed)?;

    let mut cells = Vec::new();
    for &component in &components {
        for &wm in &wms {
            for &dm in &dms {
                for &dl in &dls {
                    for &seed in &seeds {
                        let mut c = cfg.clone();
                        c.weight_metric = wm;
                        c.diversity_metric = dm;
                        c.domain_loss = dl;
                        c.seed = seed;
                        let mut o = c.objective();
                        component.apply(&mut o);
                        c.alpha = o.alpha;
                        c.eta = o.eta;
                        c.uniform_weights = o.uniform_weights;
                        c.noise_layer = o.noise_layer;
                        cells.push(AblationCell { component, config: c });
                    }
                }
            }
        }
    }
    Ok(cells)
}

pub const ABLATION_KEYS: &str = "component,weight_metric,diversity_metric,domain_loss,ensemble,seed";

pub fn cmd_ablate(cfg: &RunConfig) -> Result<String, CliError> {
    let bundle = load_dataset(cfg)?;
    let cells = ablation_cells(cfg)?;
    let ensembles = cfg.ensembles.clone().unwrap_or_else(|| vec![cfg.ensemble]);

    let rows: Vec<Result<Vec<(Ensemble, MetricsReport)>, CliError>> = cells
        .par_iter()
        .map(|cell| {
            let (model, _) = train_model(&cell.config, &bundle)?;
            ensembles
                .iter()
                .map(|&e| Ok((e, evaluate(&model, &bundle, e)?.0)))
                .collect()
        })
        .collect();

    let mut table = String::from(ABLATION_KEYS);
    let field_names: Vec<String> = {
        let probe = compute_metrics(&[0], &[0], bundle.n_classes)?;
        probe.fields().into_iter().map(|(n, _)| n).collect()
    };
    for n in &field_names {
        write!(table, ",{n}").unwrap();
    }
    table.push('\n');
    for (cell, row) in cells.iter().zip(rows) {
        for (e, report) in row? {
            let c = &cell.config;
            write!(
                table,
                "{},{},{},{},{},{}",
                cell.component.as_str(),
                c.weight_metric,
                c.diversity_metric,
                c.domain_loss,
                e,
                c.seed
            )
            .unwrap();
            for (_, v) in report.fields() {
                write!(table, ",{v}").unwrap();
            }
            table.push('\n');
        }
    }
    let path = cfg.report.clone().unwrap_or_else(|| cfg.out_dir.join("ablation.csv"));
    ensure_parent(&path)?;
    std::fs::write(&path, &table).map_err(|e| io_err(&path, e))?;
    echo_config(cfg, "ablate-config.txt")?;
    Ok(table)
}
