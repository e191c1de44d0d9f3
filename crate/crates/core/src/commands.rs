//! Subcommand implementations behind the `rcreadout` binary.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{BaselineKind, BinSource, RunConfig};
use crate::error::{Error, Result};
use crate::eval::{
    accuracy_curve_filter, empirical_filter, hyperparameter_sweep, measured_subspace_export, report_rc_responses,
    EvaluationReport,
};
use crate::filters::{boxcar_kernel, build_matched_kernel_analytic, fit_bins, BinReference};
use crate::io::{prepare_output_dir, read_artifact, read_dataset, write_artifact, write_csv, write_dataset};
use crate::kerr::{sample_network, KerrNetwork};
use crate::qsim::{generate_dataset, MeasurementDataset, TrajectoryOptions};
use crate::seed::{seed_derive, SeedTag};
use crate::trainer::{train, ReadoutHead, Responses};

pub const RESOLVED_CONFIG: &str = "config.json";

#[derive(Debug, Parser)]
#[command(name = "rcreadout", version, about = "Qubit readout simulation and Kerr-network reservoir classification")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// JSON run configuration; defaults are used for anything left out.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overwrite a non-empty output directory.
    #[arg(long, global = true)]
    pub force: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `master_seed` from the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a labeled homodyne dataset.
    Generate,
    /// Fit a filter baseline and evaluate it.
    Baseline {
        /// Dataset the kernel and bins are fit on.
        #[arg(long)]
        dataset: PathBuf,
        /// Evaluation dataset (defaults to --dataset).
        #[arg(long)]
        test: Option<PathBuf>,
        #[arg(long, value_enum)]
        kind: Option<BaselineKind>,
    },
    /// Sample a network and train its readout head.
    Train {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Accuracy curve of a trained network on a test set.
    Eval {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Hyperparameter sweep.
    Sweep {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        test: PathBuf,
    },
    /// Final measured-subspace coordinates and separating hyperplanes.
    ExportMs {
        #[arg(long)]
        network: PathBuf,
        #[arg(long)]
        head: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        t_final: Option<f64>,
    },
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'a str,
    exit_code: i32,
    message: String,
}

/// JSON written to stderr on failure.
pub fn error_json(e: &Error) -> String {
    serde_json::to_string(&ErrorReport {
        error: e.code(),
        exit_code: e.exit_code(),
        message: e.to_string(),
    })
    .expect("error report serializes")
}

pub fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.global.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.global.seed {
        cfg.master_seed = s;
    }
    if let Some(n) = cli.global.threads {
        // Fails only if the pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let out = cli
        .global
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Error::Config("an output directory is required (--out or output_dir)".into()))?;
    let force = cli.global.force;
    match cli.command {
        Command::Generate => cmd_generate(&cfg, &out, force).map(|_| ()),
        Command::Baseline { dataset, test, kind } => {
            if let Some(k) = kind {
                cfg.baseline.kind = k;
            }
            cmd_baseline(&cfg, &dataset, test.as_deref(), &out, force).map(|_| ())
        }
        Command::Train { dataset } => cmd_train(&cfg, &dataset, &out, force).map(|_| ()),
        Command::Eval { network, head, test } => cmd_eval(&cfg, &network, &head, &test, &out, force).map(|_| ()),
        Command::Sweep { dataset, test } => cmd_sweep(&cfg, &dataset, &test, &out, force),
        Command::ExportMs {
            network,
            head,
            test,
            t_final,
        } => {
            if let Some(t) = t_final {
                cfg.export.t_final = t;
            }
            cmd_export_ms(&cfg, &network, &head, &test, &out, force)
        }
    }
}

fn start(cfg: &RunConfig, out: &Path, force: bool) -> Result<String> {
    prepare_output_dir(out, force)?;
    crate::io::write_atomic(&out.join(RESOLVED_CONFIG), cfg.to_json().as_bytes())?;
    Ok(cfg.hash())
}

pub fn cmd_generate(cfg: &RunConfig, out: &Path, force: bool) -> Result<MeasurementDataset> {
    let hash = start(cfg, out, force)?;
    let ds = generate_dataset(
        &cfg.system,
        cfg.dataset.m_per_class,
        cfg.master_seed,
        cfg.dataset.tag,
        cfg.timing,
        TrajectoryOptions {
            conditional: cfg.dataset.conditional,
            populations: false,
        },
    )?;
    write_dataset(out, &ds, &hash)?;
    Ok(ds)
}

fn curve_rows(report: &EvaluationReport) -> Vec<Vec<String>> {
    report
        .times()
        .iter()
        .zip(&report.accuracy_curve)
        .map(|(t, a)| vec![t.to_string(), a.to_string()])
        .collect()
}

fn write_report(out: &Path, hash: &str, report: &EvaluationReport) -> Result<()> {
    write_artifact(&out.join("report.json"), "evaluation_report", hash, report)?;
    write_csv(&out.join("curves.csv"), hash, &["t", "accuracy"], &curve_rows(report))
}

pub fn cmd_baseline(
    cfg: &RunConfig,
    dataset: &Path,
    test: Option<&Path>,
    out: &Path,
    force: bool,
) -> Result<EvaluationReport> {
    let hash = start(cfg, out, force)?;
    let train_set = read_dataset(dataset)?;
    let test_set = match test {
        Some(p) => read_dataset(p)?,
        None => train_set.clone(),
    };
    let n = train_set.n_samples();
    let dt = train_set.dt_record;
    let (kernel, bins) = match cfg.baseline.kind {
        BaselineKind::Matched => empirical_filter(&train_set)?,
        kind => {
            let kernel = match kind {
                BaselineKind::Boxcar => boxcar_kernel(n, dt),
                _ => build_matched_kernel_analytic(&train_set.spec, dt, n)?,
            };
            let reference = match cfg.baseline.bins {
                BinSource::Dataset => BinReference::Dataset(&train_set),
                BinSource::Analytic => BinReference::Analytic(&train_set.spec),
            };
            let bins = fit_bins(&kernel, reference)?;
            (kernel, bins)
        }
    };
    let report = accuracy_curve_filter(&kernel, &bins, &test_set)?;
    write_artifact(&out.join("kernel.json"), "filter_kernel", &hash, &kernel)?;
    write_artifact(&out.join("bins.json"), "bin_classifier", &hash, &bins)?;
    write_report(out, &hash, &report)?;
    Ok(report)
}

pub fn network_for(cfg: &RunConfig) -> Result<KerrNetwork> {
    let seed = seed_derive(cfg.master_seed, SeedTag::Network, cfg.network.index);
    let net = sample_network(&cfg.network.hp, seed)?;
    Ok(match cfg.network.uniform_lambda {
        Some(l) => net.with_uniform_lambda(l),
        None => net,
    })
}

pub fn cmd_train(cfg: &RunConfig, dataset: &Path, out: &Path, force: bool) -> Result<(KerrNetwork, ReadoutHead)> {
    let hash = start(cfg, out, force)?;
    let ds = read_dataset(dataset)?;
    let net = network_for(cfg)?;
    let r = Responses::from_network(&net, &ds, cfg.network.substeps)?;
    let init = seed_derive(cfg.master_seed, SeedTag::HeadInit, cfg.network.index);
    let head = train(&r, &ds.labels(), ds.n_classes(), &cfg.train, init)?;
    write_artifact(&out.join("network.json"), "kerr_network", &hash, &net)?;
    write_artifact(&out.join("head.json"), "readout_head", &hash, &head)?;
    Ok((net, head))
}

fn load_model(network: &Path, head: &Path) -> Result<(KerrNetwork, ReadoutHead)> {
    let net: KerrNetwork = read_artifact(network, "kerr_network")?.data;
    net.validate()?;
    let head: ReadoutHead = read_artifact(head, "readout_head")?.data;
    if head.k_nodes() != net.k_nodes() {
        return Err(Error::Dimension(format!(
            "head has K = {} but the network has K = {}",
            head.k_nodes(),
            net.k_nodes()
        )));
    }
    Ok((net, head))
}

pub fn cmd_eval(
    cfg: &RunConfig,
    network: &Path,
    head: &Path,
    test: &Path,
    out: &Path,
    force: bool,
) -> Result<EvaluationReport> {
    let (net, head) = load_model(network, head)?;
    let test = read_dataset(test)?;
    let hash = start(cfg, out, force)?;
    let r = Responses::from_network(&net, &test, cfg.network.substeps)?;
    let report = report_rc_responses(&head, &r, &test)?;
    write_report(out, &hash, &report)?;
    Ok(report)
}

pub fn cmd_sweep(cfg: &RunConfig, dataset: &Path, test: &Path, out: &Path, force: bool) -> Result<()> {
    let train_set = read_dataset(dataset)?;
    let test = read_dataset(test)?;
    let hash = start(cfg, out, force)?;
    let res = hyperparameter_sweep(&cfg.sweep.grid, cfg.sweep.n_seeds, &train_set, &test, &cfg.train, cfg.master_seed)?;
    write_artifact(&out.join("sweep.json"), "sweep_result", &hash, &res)?;
    let mut rows = Vec::new();
    for (i, cell) in res.cells.iter().enumerate() {
        for (s, f) in cell.fidelities.iter().enumerate() {
            rows.push(vec![
                i.to_string(),
                cell.hp.k_nodes.to_string(),
                cell.hp.gamma.to_string(),
                cell.hp.alpha.to_string(),
                cell.hp.mu.to_string(),
                cell.hp.lambda_bar.to_string(),
                s.to_string(),
                f.map_or_else(|| "NaN".to_string(), |v| v.to_string()),
            ]);
        }
    }
    write_csv(
        &out.join("sweep.csv"),
        &hash,
        &["cell", "k_nodes", "gamma", "alpha", "mu", "lambda_bar", "seed", "fidelity"],
        &rows,
    )
}

pub fn cmd_export_ms(cfg: &RunConfig, network: &Path, head: &Path, test: &Path, out: &Path, force: bool) -> Result<()> {
    let (net, head) = load_model(network, head)?;
    let test = read_dataset(test)?;
    let hash = start(cfg, out, force)?;
    let ms = measured_subspace_export(&net, &head, &test, cfg.export.t_final)?;
    let k = net.k_nodes();
    let mut header: Vec<String> = (1..=k).map(|j| format!("x_phi_{j}")).collect();
    header.push("label".into());
    header.push("predicted".into());
    let rows: Vec<Vec<String>> = ms
        .points
        .iter()
        .map(|p| {
            let mut r: Vec<String> = p.coords.iter().map(|c| c.to_string()).collect();
            r.push(p.label.to_string());
            r.push(p.predicted.to_string());
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    write_csv(&out.join("ms.csv"), &hash, &header_refs, &rows)?;
    write_artifact(&out.join("hyperplanes.json"), "hyperplanes", &hash, &ms.hyperplanes)
}
