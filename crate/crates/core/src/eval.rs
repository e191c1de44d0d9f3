//! Accuracy curves, fidelity, baseline comparisons, scaling studies and
//! hyperparameter sweeps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filters::{
    apply_filter, build_matched_kernel, classify_filtered, fit_bins, BinClassifier, BinReference, FilterKernel,
};
use crate::kerr::{integrate, measure, quadratures, sample_network, KerrNetwork, RcHyperParams};
use crate::qsim::MeasurementDataset;
use crate::seed::{seed_derive, SeedTag};
use crate::trainer::{argmax, train, ReadoutHead, Responses, TrainConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub dt_record: f64,
    pub accuracy_curve: Vec<f64>,
    pub fidelity: f64,
    pub t_opt_index: usize,
    pub t_opt: f64,
    /// `confusion[true][predicted]` at `t_opt`.
    pub confusion: Vec<Vec<usize>>,
    pub n_test: usize,
}

impl EvaluationReport {
    /// `predictions[q][n]` against `labels[q]`; sample `n` is at `(n+1)·dt`.
    pub fn from_predictions(predictions: &[Vec<u8>], labels: &[u8], n_classes: usize, dt_record: f64) -> Result<Self> {
        if predictions.len() != labels.len() || predictions.is_empty() {
            return Err(Error::Dimension(format!(
                "{} prediction rows for {} labels",
                predictions.len(),
                labels.len()
            )));
        }
        let n = predictions[0].len();
        if n == 0 || predictions.iter().any(|p| p.len() != n) {
            return Err(Error::Dimension("prediction rows must share a non-zero length".into()));
        }
        let q = labels.len() as f64;
        let curve: Vec<f64> = (0..n)
            .map(|i| predictions.iter().zip(labels).filter(|(p, l)| p[i] == **l).count() as f64 / q)
            .collect();
        let (t_opt_index, fidelity) = first_max(&curve);
        let mut confusion = vec![vec![0usize; n_classes]; n_classes];
        for (p, l) in predictions.iter().zip(labels) {
            let (t, pr) = (*l as usize, p[t_opt_index] as usize);
            if t >= n_classes || pr >= n_classes {
                return Err(Error::Domain(format!("label outside {n_classes} classes")));
            }
            confusion[t][pr] += 1;
        }
        Ok(Self {
            dt_record,
            accuracy_curve: curve,
            fidelity,
            t_opt_index,
            t_opt: (t_opt_index + 1) as f64 * dt_record,
            confusion,
            n_test: labels.len(),
        })
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.accuracy_curve.len()).map(|i| (i + 1) as f64 * self.dt_record).collect()
    }
}

/// Index and value of the first maximum.
pub fn first_max(curve: &[f64]) -> (usize, f64) {
    let mut best = 0;
    for (i, v) in curve.iter().enumerate() {
        if *v > curve[best] {
            best = i;
        }
    }
    (best, curve[best])
}

pub const DEFAULT_SUBSTEPS: usize = crate::kerr::DEFAULT_SUBSTEPS;

fn check_head(net: &KerrNetwork, head: &ReadoutHead) -> Result<()> {
    if head.k_nodes() != net.k_nodes() || head.w_out.len() != head.n_classes * net.k_nodes() {
        return Err(Error::Dimension(format!(
            "head has K = {} but the network has K = {}",
            head.k_nodes(),
            net.k_nodes()
        )));
    }
    Ok(())
}

/// Predicted labels per time sample for precomputed responses.
pub fn predict_responses(head: &ReadoutHead, r: &Responses) -> Result<Vec<Vec<u8>>> {
    if r.k_nodes != head.k_nodes() {
        return Err(Error::Dimension("head and responses differ in K".into()));
    }
    Ok((0..r.n_trajectories())
        .map(|q| (0..r.n_times).map(|n| head.classify(r.sample(q, n))).collect())
        .collect())
}

pub fn report_rc_responses(head: &ReadoutHead, r: &Responses, test: &MeasurementDataset) -> Result<EvaluationReport> {
    let preds = predict_responses(head, r)?;
    EvaluationReport::from_predictions(&preds, &test.labels(), test.n_classes(), test.dt_record)
}

pub fn accuracy_curve_rc(net: &KerrNetwork, head: &ReadoutHead, test: &MeasurementDataset) -> Result<EvaluationReport> {
    check_head(net, head)?;
    let r = Responses::from_network(net, test, DEFAULT_SUBSTEPS)?;
    report_rc_responses(head, &r, test)
}

pub fn accuracy_curve_filter(
    kernel: &FilterKernel,
    bins: &BinClassifier,
    test: &MeasurementDataset,
) -> Result<EvaluationReport> {
    let preds = test
        .trajectories
        .iter()
        .map(|t| classify_filtered(bins, &apply_filter(kernel, &t.j_record)?))
        .collect::<Result<Vec<_>>>()?;
    EvaluationReport::from_predictions(&preds, &test.labels(), test.n_classes(), test.dt_record)
}

/// Empirical matched filter with bins from the same training set.
pub fn empirical_filter(train: &MeasurementDataset) -> Result<(FilterKernel, BinClassifier)> {
    let kernel = build_matched_kernel(train)?;
    let bins = fit_bins(&kernel, BinReference::Dataset(train))?;
    Ok((kernel, bins))
}

/// Samples, trains and evaluates one network. `Ok(None)` marks divergence.
pub fn fit_and_evaluate(
    net: &KerrNetwork,
    train_set: &MeasurementDataset,
    test: &MeasurementDataset,
    cfg: &TrainConfig,
    init_seed: u64,
) -> Result<Option<(ReadoutHead, EvaluationReport)>> {
    let run = || -> Result<(ReadoutHead, EvaluationReport)> {
        let r = Responses::from_network(net, train_set, DEFAULT_SUBSTEPS)?;
        let head = train(&r, &train_set.labels(), train_set.n_classes(), cfg, init_seed)?;
        let report = accuracy_curve_rc(net, &head, test)?;
        Ok((head, report))
    };
    match run() {
        Ok(v) => Ok(Some(v)),
        Err(Error::Divergence { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub q: usize,
    pub method: String,
    /// Network seed index for RC rows; `None` for filters.
    pub seed_index: Option<usize>,
    pub fidelity: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub rows: Vec<ScalingRow>,
}

impl ScalingStudy {
    /// Mean over non-divergent rows of `method` at `q`.
    pub fn mean(&self, method: &str, q: usize) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method && r.q == q)
            .filter_map(|r| r.fidelity)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }
}

/// Trains every network and the empirical matched filter on the first `Q`
/// trajectories of `pool` for each `Q`, and evaluates on `test`.
pub fn q_scaling_study(
    networks: &[KerrNetwork],
    pool: &MeasurementDataset,
    q_list: &[usize],
    test: &MeasurementDataset,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<ScalingStudy> {
    let c = pool.n_classes();
    let mut rows = Vec::new();
    for &q in q_list {
        if q == 0 || q % c != 0 {
            return Err(Error::Domain(format!("Q = {q} is not a positive multiple of {c}")));
        }
        let train_set = pool.prefix(q)?;
        let (kernel, bins) = empirical_filter(&train_set)?;
        rows.push(ScalingRow {
            q,
            method: "mf_empirical".into(),
            seed_index: None,
            fidelity: Some(accuracy_curve_filter(&kernel, &bins, test)?.fidelity),
        });
        for (i, net) in networks.iter().enumerate() {
            let init = seed_derive(master_seed, SeedTag::HeadInit, i as u64);
            let f = fit_and_evaluate(net, &train_set, test, cfg, init)?.map(|(_, r)| r.fidelity);
            rows.push(ScalingRow {
                q,
                method: "rc".into(),
                seed_index: Some(i),
                fidelity: f,
            });
        }
    }
    Ok(ScalingStudy { rows })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepGrid {
    /// Node count against decay rate at fixed `μ`, `Λ̄`.
    KGamma {
        k_nodes: Vec<usize>,
        gammas: Vec<f64>,
        mu: f64,
        lambda_bar: f64,
        alpha: f64,
    },
    /// Input scale against nonlinearity with every `Λ_j = −Λ̄`.
    MuLambda {
        k_nodes: usize,
        gamma: f64,
        alpha: f64,
        mus: Vec<f64>,
        lambda_bars: Vec<f64>,
    },
}

impl SweepGrid {
    /// Hyperparameters per cell plus the uniform `Λ_j` override if any.
    pub fn cells(&self) -> Vec<(RcHyperParams, Option<f64>)> {
        match self {
            SweepGrid::KGamma {
                k_nodes,
                gammas,
                mu,
                lambda_bar,
                alpha,
            } => k_nodes
                .iter()
                .flat_map(|k| {
                    gammas.iter().map(move |g| {
                        (
                            RcHyperParams {
                                k_nodes: *k,
                                gamma: *g,
                                alpha: *alpha,
                                lambda_bar: *lambda_bar,
                                mu: *mu,
                            },
                            None,
                        )
                    })
                })
                .collect(),
            SweepGrid::MuLambda {
                k_nodes,
                gamma,
                alpha,
                mus,
                lambda_bars,
            } => mus
                .iter()
                .flat_map(|m| {
                    lambda_bars.iter().map(move |l| {
                        (
                            RcHyperParams {
                                k_nodes: *k_nodes,
                                gamma: *gamma,
                                alpha: *alpha,
                                lambda_bar: *l,
                                mu: *m,
                            },
                            Some(-*l),
                        )
                    })
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub hp: RcHyperParams,
    pub uniform_lambda: Option<f64>,
    /// `None` for divergent networks.
    pub fidelities: Vec<Option<f64>>,
    pub mean: Option<f64>,
    pub n_divergent: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub grid: SweepGrid,
    pub cells: Vec<SweepCell>,
}

impl SweepResult {
    /// Cell with the largest mean fidelity; first wins ties.
    pub fn best(&self) -> Option<&SweepCell> {
        let mut best: Option<&SweepCell> = None;
        for c in &self.cells {
            if let Some(m) = c.mean {
                if best.and_then(|b| b.mean).is_none_or(|bm| m > bm) {
                    best = Some(c);
                }
            }
        }
        best
    }
}

/// Network seed `s` of every cell is `seed_derive(master, Network, s)`, so
/// cells differ only in hyperparameters.
pub fn hyperparameter_sweep(
    grid: &SweepGrid,
    n_seeds: usize,
    train_set: &MeasurementDataset,
    test: &MeasurementDataset,
    cfg: &TrainConfig,
    master_seed: u64,
) -> Result<SweepResult> {
    let cells = grid.cells();
    if cells.is_empty() || n_seeds == 0 {
        return Err(Error::Config("sweep grid and seed count must be non-empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..n_seeds).map(move |s| (c, s))).collect();
    let results: Vec<Result<Option<f64>>> = jobs
        .par_iter()
        .map(|&(c, s)| {
            let (hp, lam) = &cells[c];
            let mut net = sample_network(hp, seed_derive(master_seed, SeedTag::Network, s as u64))?;
            if let Some(l) = lam {
                net = net.with_uniform_lambda(*l);
            }
            let init = seed_derive(master_seed, SeedTag::HeadInit, s as u64);
            Ok(fit_and_evaluate(&net, train_set, test, cfg, init)?.map(|(_, r)| r.fidelity))
        })
        .collect();
    let mut out = Vec::with_capacity(cells.len());
    let mut it = results.into_iter();
    for (hp, lam) in cells {
        let fids = (0..n_seeds).map(|_| it.next().unwrap()).collect::<Result<Vec<_>>>()?;
        let ok: Vec<f64> = fids.iter().flatten().cloned().collect();
        out.push(SweepCell {
            hp,
            uniform_lambda: lam,
            n_divergent: fids.len() - ok.len(),
            mean: (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64),
            fidelities: fids,
        });
    }
    Ok(SweepResult {
        grid: grid.clone(),
        cells: out,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MsPoint {
    pub coords: Vec<f64>,
    pub label: u8,
    pub predicted: u8,
}

/// `(row_j(W_o) − row_k(W_o))·x^φ = 0` separates classes `j` and `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub j: u8,
    pub k: u8,
    pub normal: Vec<f64>,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredSubspace {
    pub t_final: f64,
    pub points: Vec<MsPoint>,
    pub hyperplanes: Vec<Hyperplane>,
}

pub fn hyperplanes(head: &ReadoutHead) -> Vec<Hyperplane> {
    let k = head.k_nodes();
    let row = |c: usize| &head.w_out[c * k..(c + 1) * k];
    let mut out = Vec::new();
    for j in 0..head.n_classes {
        for l in j + 1..head.n_classes {
            out.push(Hyperplane {
                j: j as u8,
                k: l as u8,
                normal: row(j).iter().zip(row(l)).map(|(a, b)| a - b).collect(),
                offset: 0.0,
            });
        }
    }
    out
}

/// Predicted cell from the hyperplanes alone: class `j` wins when it is on the
/// non-negative side of every plane against a larger index and strictly
/// positive against every smaller one.
pub fn hyperplane_cell(planes: &[Hyperplane], n_classes: usize, x: &[f64]) -> u8 {
    let side = |a: usize, b: usize| -> f64 {
        let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
        let p = planes.iter().find(|p| p.j as usize == lo && p.k as usize == hi).unwrap();
        sign * (p.normal.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + p.offset)
    };
    (0..n_classes)
        .find(|&j| (0..n_classes).all(|o| o == j || if o > j { side(j, o) >= 0.0 } else { side(j, o) > 0.0 }))
        .unwrap_or(0) as u8
}

/// Final measured coordinates of every test trajectory at the record sample
/// nearest `t_final`.
pub fn measured_subspace_export(
    net: &KerrNetwork,
    head: &ReadoutHead,
    test: &MeasurementDataset,
    t_final: f64,
) -> Result<MeasuredSubspace> {
    check_head(net, head)?;
    let n = test.n_samples();
    let idx = ((t_final / test.dt_record).round() as usize).clamp(1, n) - 1;
    let points = test
        .trajectories
        .par_iter()
        .map(|t| {
            let traj = integrate(net, &t.j_record[..=idx], test.dt_record, DEFAULT_SUBSTEPS)?;
            let x = quadratures(&traj);
            let w = 2 * net.k_nodes();
            let last = &x[idx * w..(idx + 1) * w];
            let coords = measure(last, &head.phi)?;
            let logits: Vec<f64> = (0..head.n_classes)
                .map(|c| {
                    head.w_out[c * head.k_nodes()..(c + 1) * head.k_nodes()]
                        .iter()
                        .zip(&coords)
                        .map(|(a, b)| a * b)
                        .sum()
                })
                .collect();
            Ok(MsPoint {
                predicted: argmax(&logits) as u8,
                coords,
                label: t.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MeasuredSubspace {
        t_final: (idx + 1) as f64 * test.dt_record,
        points,
        hyperplanes: hyperplanes(head),
    })
}
