use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rcreadout::commands::cmd_generate;
use rcreadout::config::RunConfig;
use rcreadout::eval::{
    accuracy_curve_filter, empirical_filter, fit_and_evaluate, hyperparameter_sweep, q_scaling_study, EvaluationReport,
    SweepGrid,
};
use rcreadout::filters::{boxcar_kernel, build_matched_kernel_analytic, fit_bins, BinReference, FilterKernel};
use rcreadout::io::{read_artifact, read_dataset, write_artifact};
use rcreadout::kerr::{integrate, linear_response_analytic, sample_network, KerrNetwork, RcHyperParams};
use rcreadout::qsim::spec::qubit_sign;
use rcreadout::qsim::{
    analytic_cavity_amplitude, unconditional_evolve, DensityMatrix, EvolveOptions, MeasurementDataset, Model,
    QuantumSystemSpec, SmeIntegrator, Timing, TrajectoryOptions, C64,
};
use rcreadout::seed::{seed_derive, SeedTag};
use rcreadout::trainer::{gradients, loss, softmax, train, Responses, TrainConfig};

use crate::data::{self, MASTER_SEED};
use crate::Outcome;

fn outcome(id: &'static str, name: &'static str, pass: bool, detail: String) -> Outcome {
    Outcome { id, name, pass, detail }
}

/// Single headline networks train on every recorded time.
fn full_cfg() -> TrainConfig {
    TrainConfig::default()
}

/// Multi-network statistics use every 10th sample in the loss.
fn multi_cfg() -> TrainConfig {
    TrainConfig {
        time_stride: 10,
        ..TrainConfig::default()
    }
}

fn sweep_cfg() -> TrainConfig {
    TrainConfig {
        time_stride: 10,
        max_iters: 1500,
        ..TrainConfig::default()
    }
}

fn network(hp: &RcHyperParams, index: u64) -> KerrNetwork {
    sample_network(hp, seed_derive(MASTER_SEED, SeedTag::Network, index)).unwrap()
}

fn rc_report(net: &KerrNetwork, train_set: &MeasurementDataset, test: &MeasurementDataset, cfg: &TrainConfig, index: u64) -> EvaluationReport {
    let init = seed_derive(MASTER_SEED, SeedTag::HeadInit, index);
    fit_and_evaluate(net, train_set, test, cfg, init)
        .unwrap()
        .expect("network does not diverge")
        .1
}

fn filter_f(kernel: &FilterKernel, reference: BinReference, test: &MeasurementDataset) -> EvaluationReport {
    let bins = fit_bins(kernel, reference).unwrap();
    accuracy_curve_filter(kernel, &bins, test).unwrap()
}

pub fn c01_dispersive_fidelity() -> Vec<Outcome> {
    let pool = data::dispersive_train_pool();
    let test = data::dispersive_test();
    let r = rc_report(&network(&RcHyperParams::five_node(), 0), &pool.prefix(40).unwrap(), &test, &full_cfg(), 0);
    vec![outcome(
        "1",
        "dispersive K=5 fidelity, Q=40",
        r.fidelity >= 0.92 && (5.0..=9.0).contains(&r.t_opt),
        format!("F = {:.4} (>= 0.92), t_opt = {:.2}/kappa (in [5, 9])", r.fidelity, r.t_opt),
    )]
}

pub fn c02_c04_c05_q_scaling() -> Vec<Outcome> {
    let pool = data::dispersive_train_pool();
    let test = data::dispersive_test();
    let hp = RcHyperParams::five_node();
    let nets: Vec<KerrNetwork> = (0..10).map(|i| network(&hp, i)).collect();
    let study = q_scaling_study(&nets, &pool, &[4, 40], &test, &multi_cfg(), MASTER_SEED).unwrap();
    for row in &study.rows {
        eprintln!("    Q={} {} seed={:?} F={:?}", row.q, row.method, row.seed_index, row.fidelity);
    }
    let rc40 = study.mean("rc", 40).unwrap();
    let rc4 = study.mean("rc", 4).unwrap();
    let mf40 = study.mean("mf_empirical", 40).unwrap();

    let (k, b) = empirical_filter(&pool).unwrap();
    let mf1200 = accuracy_curve_filter(&k, &b, &test).unwrap().fidelity;
    let analytic = build_matched_kernel_analytic(&test.spec, test.dt_record, test.n_samples()).unwrap();
    let mf_an = filter_f(&analytic, BinReference::Analytic(&test.spec), &test).fidelity;
    vec![
        outcome(
            "2",
            "mean dispersive fidelity over 10 networks, Q=40",
            (0.90..=0.99).contains(&rc40),
            format!("mean F = {rc40:.4} (in [0.90, 0.99])"),
        ),
        outcome(
            "4a",
            "RC beats empirical MF at Q=40",
            rc40 - mf40 >= 0.05,
            format!("mean RC F = {rc40:.4}, MF F = {mf40:.4}, margin {:.4} (>= 0.05)", rc40 - mf40),
        ),
        outcome(
            "4b",
            "empirical MF at Q=1200 approaches analytic MF",
            (mf1200 - mf_an).abs() <= 0.02,
            format!("MF(1200) F = {mf1200:.4}, analytic MF F = {mf_an:.4}, |diff| {:.4} (<= 0.02)", (mf1200 - mf_an).abs()),
        ),
        outcome(
            "5",
            "mean RC fidelity over 10 networks, Q=4",
            (0.82..=0.96).contains(&rc4),
            format!("mean F = {rc4:.4} (in [0.82, 0.96])"),
        ),
    ]
}

pub fn c03_jc_fidelity() -> Vec<Outcome> {
    let train_set = data::jc_train();
    let test = data::jc_test();
    let rc = rc_report(&network(&RcHyperParams::five_node(), 0), &train_set, &test, &full_cfg(), 0);

    // The analytic kernel and bins come from the dispersive model with the
    // same parameters.
    let disp = QuantumSystemSpec {
        model: Model::Dispersive,
        ..test.spec.clone()
    };
    let n = test.n_samples();
    let dt = test.dt_record;
    let boxcar = boxcar_kernel(n, dt);
    let analytic = build_matched_kernel_analytic(&disp, dt, n).unwrap();
    let (mf_k, mf_b) = empirical_filter(&train_set).unwrap();
    let filters = [
        ("BF/train bins", filter_f(&boxcar, BinReference::Dataset(&train_set), &test).fidelity),
        ("BF/analytic bins", filter_f(&boxcar, BinReference::Analytic(&disp), &test).fidelity),
        ("analytic MF", filter_f(&analytic, BinReference::Analytic(&disp), &test).fidelity),
        ("analytic MF/train bins", filter_f(&analytic, BinReference::Dataset(&train_set), &test).fidelity),
        ("MF(Q=80)", accuracy_curve_filter(&mf_k, &mf_b, &test).unwrap().fidelity),
    ];
    let (best_name, best) = filters.iter().cloned().fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let listing: Vec<String> = filters.iter().map(|(k, f)| format!("{k} {f:.4}")).collect();
    vec![
        outcome(
            "3a",
            "JC K=5 fidelity, Q=80",
            rc.fidelity >= 0.87,
            format!("F = {:.4} (>= 0.87), t_opt = {:.2}/kappa", rc.fidelity, rc.t_opt),
        ),
        outcome(
            "3b",
            "JC RC beats the best linear filter",
            rc.fidelity > best,
            format!("RC {:.4} vs best {best_name} {best:.4} [{}]", rc.fidelity, listing.join(", ")),
        ),
    ]
}

pub fn c06_linear_rc() -> Vec<Outcome> {
    let pool = data::dispersive_train_pool();
    let test = data::dispersive_test();
    let train_set = pool.prefix(40).unwrap();
    let net = network(&RcHyperParams::two_node(), 0);
    let nonlinear = rc_report(&net, &train_set, &test, &multi_cfg(), 0).fidelity;
    let linear = rc_report(&net.with_uniform_lambda(0.0), &train_set, &test, &multi_cfg(), 0).fidelity;
    vec![outcome(
        "6",
        "linear K=2 RC degradation",
        (0.65..=0.85).contains(&linear) && nonlinear - linear >= 0.12,
        format!(
            "linear F = {linear:.4} (in [0.65, 0.85]), nonlinear F = {nonlinear:.4}, gap {:.4} (>= 0.12)",
            nonlinear - linear
        ),
    )]
}

/// Minimum accuracy drop below the surrounding maxima that counts as a dip.
const DIP_DEPTH: f64 = 0.01;

pub fn c07_mf_dip() -> Vec<Outcome> {
    let test = data::dispersive_test();
    let kernel = build_matched_kernel_analytic(&test.spec, test.dt_record, test.n_samples()).unwrap();
    let r = filter_f(&kernel, BinReference::Analytic(&test.spec), &test);
    let c = &r.accuracy_curve;
    let times = r.times();
    let after = (2.0 / test.dt_record) as usize;
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 1..c.len() {
        if !(1.5..=3.5).contains(&times[i]) {
            continue;
        }
        let pre = c[..i].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let post = c[i + 1..(i + 1 + after).min(c.len())].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let depth = (pre - c[i]).min(post - c[i]);
        if depth > best.0 {
            best = (depth, i);
        }
    }
    vec![outcome(
        "7",
        "analytic MF accuracy dip",
        best.0 >= DIP_DEPTH,
        format!(
            "deepest local minimum in [1.5, 3.5]/kappa at t = {:.2}, depth {:.4} (>= {DIP_DEPTH}), accuracy there {:.4}",
            times[best.1], best.0, c[best.1]
        ),
    )]
}

pub fn c08_hyperparameters() -> Vec<Outcome> {
    let pool = data::dispersive_train_pool();
    let test = data::dispersive_test();
    let train_set = pool.prefix(80).unwrap();
    let mu_lambda = SweepGrid::MuLambda {
        k_nodes: 5,
        gamma: 0.25,
        alpha: 1.9,
        mus: vec![1.0, 2.5, 5.0, 10.0],
        lambda_bars: vec![1e-3, 1e-2, 5e-2, 2e-1],
    };
    let res = hyperparameter_sweep(&mu_lambda, 5, &train_set, &test, &sweep_cfg(), MASTER_SEED).unwrap();
    for c in &res.cells {
        eprintln!(
            "    mu={} lambda_bar={} mean={:?} divergent={} {:?}",
            c.hp.mu, c.hp.lambda_bar, c.mean, c.n_divergent, c.fidelities
        );
    }
    let best = res.best().unwrap();
    let product = best.hp.lambda_bar.sqrt() * best.hp.mu;

    let gammas = vec![0.05, 0.1, 0.25, 0.4, 1.0];
    let g_grid = SweepGrid::KGamma {
        k_nodes: vec![5],
        gammas: gammas.clone(),
        mu: 5.0,
        lambda_bar: 5e-2,
        alpha: 1.9,
    };
    let g = hyperparameter_sweep(&g_grid, 5, &train_set, &test, &sweep_cfg(), MASTER_SEED).unwrap();
    let m: Vec<f64> = g.cells.iter().map(|c| c.mean.unwrap_or(f64::NAN)).collect();
    for (gm, c) in gammas.iter().zip(&g.cells) {
        eprintln!("    gamma={gm} mean={:?} {:?}", c.mean, c.fidelities);
    }
    let mid_ok = m[1..4].iter().all(|v| *v > m[0] && *v > m[4]);
    vec![
        outcome(
            "8a",
            "mu-lambda sweep optimum",
            (0.3..=1.5).contains(&product),
            format!(
                "best cell mu = {}, lambda_bar = {} (mean F {:.4}), sqrt(lambda_bar)*mu = {product:.3} (in [0.3, 1.5])",
                best.hp.mu,
                best.hp.lambda_bar,
                best.mean.unwrap()
            ),
        ),
        outcome(
            "8b",
            "gamma sweep optimum",
            mid_ok,
            format!(
                "mean F by gamma {{0.05, 0.1, 0.25, 0.4, 1.0}} = [{}]",
                m.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>().join(", ")
            ),
        ),
    ]
}

pub fn c09_sme_ensemble() -> Vec<Outcome> {
    let ds = data::sme_oracle();
    let spec = data::oracle_spec();
    let timing = data::oracle_timing();
    let rho0 = DensityMatrix::qubit_basis_vacuum(data::ORACLE_CLASS, 4, spec.n_fock).unwrap();
    let ev = unconditional_evolve(
        &spec,
        &rho0,
        timing.tau_m,
        timing.dt_int,
        &EvolveOptions {
            record_interval: timing.dt_record,
            checkpoint_every: None,
        },
    )
    .unwrap();
    let q = ds.len() as f64;
    let sk = spec.kappa.sqrt();
    let mut worst_ratio: f64 = 0.0;
    let mut worst_abs: f64 = 0.0;
    let mut pass = true;
    for n in 0..timing.n_records() {
        let xs: Vec<f64> = ds.trajectories.iter().map(|t| t.x_conditional.as_ref().unwrap()[n]).collect();
        let mean = xs.iter().sum::<f64>() / q;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (q - 1.0);
        // Floor for times where every trajectory agrees to rounding.
        let se = (var / q).sqrt().max(1e-9);
        let diff = (mean - sk * ev.quadrature[n + 1]).abs();
        worst_ratio = worst_ratio.max(diff / se);
        worst_abs = worst_abs.max(diff);
        pass &= diff <= 3.0 * se;
    }
    vec![outcome(
        "9",
        "SME ensemble mean vs unconditional master equation",
        pass,
        format!(
            "{} trajectories, {} record times: max |diff| = {worst_abs:.3e}, max |diff|/SE = {worst_ratio:.2} (<= 3)",
            ds.len(),
            timing.n_records()
        ),
    )]
}

fn pointer_error(spec: &QuantumSystemSpec) -> f64 {
    let mut worst: f64 = 0.0;
    for z in 0..4 {
        let rho0 = DensityMatrix::qubit_basis_vacuum(z, 4, spec.n_fock).unwrap();
        let ev = unconditional_evolve(
            spec,
            &rho0,
            10.0,
            1e-3,
            &EvolveOptions {
                record_interval: 0.05,
                checkpoint_every: None,
            },
        )
        .unwrap();
        for (t, x) in ev.times.iter().zip(&ev.quadrature) {
            let a = analytic_cavity_amplitude(spec, z, *t).unwrap();
            worst = worst.max((x - 2.0 * a.re).abs());
        }
    }
    worst
}

pub fn c10_pointer() -> Vec<Outcome> {
    let paper = data::dispersive_spec();
    let qnd = QuantumSystemSpec {
        gamma_h: 0.0,
        include_exchange: false,
        ..paper.clone()
    };
    let e_paper = pointer_error(&paper);
    let e_qnd = pointer_error(&qnd);
    vec![
        outcome(
            "10a",
            "pointer-state oracle, full dispersive model",
            e_paper < 1e-3,
            format!("max |<d+d^dag> - 2 Re alpha_z| = {e_paper:.3e} (< 1e-3)"),
        ),
        outcome(
            "10b",
            "pointer-state oracle, gamma_h = 0 and J = 0",
            e_qnd < 1e-4,
            format!("max |<d+d^dag> - 2 Re alpha_z| = {e_qnd:.3e} (< 1e-4)"),
        ),
    ]
}

pub fn c11_qnd() -> Vec<Outcome> {
    let spec = QuantumSystemSpec {
        gamma_h: 0.0,
        include_exchange: false,
        ..data::dispersive_spec()
    };
    let integ = SmeIntegrator::new(&spec, data::timing()).unwrap();
    let opts = TrajectoryOptions {
        conditional: false,
        populations: true,
    };
    let sigma = |p: &[f64], j: usize| -> f64 { (0..4).map(|z| p[z] * qubit_sign(z, j, 2)).sum() };
    let mut worst: f64 = 0.0;
    for z in 0..4 {
        for s in 0..2 {
            let run = integ.run(z, seed_derive(MASTER_SEED + 2, SeedTag::TestData, (2 * z + s) as u64), opts).unwrap();
            for p in run.populations.unwrap() {
                for j in 0..2 {
                    worst = worst.max((sigma(&p, j) - qubit_sign(z, j, 2)).abs());
                }
            }
        }
    }
    // Unconditional evolution of an equal superposition of all four states.
    let n = spec.n_fock;
    let dim = 4 * n;
    let mut rho0 = DensityMatrix::zeros(dim);
    for a in 0..4 {
        for b in 0..4 {
            rho0.elements[(a * n) * dim + b * n] = C64::new(0.25, 0.0);
        }
    }
    let ev = unconditional_evolve(
        &spec,
        &rho0,
        10.0,
        1e-3,
        &EvolveOptions {
            record_interval: 0.1,
            checkpoint_every: None,
        },
    )
    .unwrap();
    let mut worst_sup: f64 = 0.0;
    for p in &ev.populations {
        for j in 0..2 {
            worst_sup = worst_sup.max(sigma(p, j).abs());
        }
    }
    vec![outcome(
        "11",
        "QND conservation of <sigma_z,j>",
        worst < 1e-8 && worst_sup < 1e-8,
        format!("8 trajectories: max drift {worst:.2e}; superposition, unconditional: max drift {worst_sup:.2e} (< 1e-8)"),
    )]
}

pub fn c12_linear_rc() -> Vec<Outcome> {
    let test = data::dispersive_test();
    let hp = RcHyperParams::five_node();
    let mut worst: f64 = 0.0;
    for i in 0..10 {
        let net = network(&hp, 100 + i).with_uniform_lambda(0.0);
        let u = &test.trajectories[i as usize].j_record;
        let rk = integrate(&net, u, test.dt_record, rcreadout::kerr::DEFAULT_SUBSTEPS).unwrap();
        let ex = linear_response_analytic(&net, u, test.dt_record).unwrap();
        let scale = ex.beta.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let err = rk.beta.iter().zip(&ex.beta).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale;
        worst = worst.max(err);
    }
    vec![outcome(
        "12",
        "linear RC: RK4 vs eigenmode solution",
        worst < 1e-6,
        format!("10 networks over tau_m = 10/kappa: max relative error {worst:.3e} (< 1e-6)"),
    )]
}

pub fn c13_gradients() -> Vec<Outcome> {
    let test = data::dispersive_test();
    let subset = test.prefix(8).unwrap();
    let net = network(&RcHyperParams::five_node(), 0);
    let r = Responses::from_network(&net, &subset, rcreadout::kerr::DEFAULT_SUBSTEPS).unwrap();
    let labels = subset.labels();
    let cfg = TrainConfig {
        time_stride: 7,
        ..TrainConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let w: Vec<f64> = (0..20).map(|_| rng.random_range(-0.3..0.3)).collect();
        let phi: Vec<f64> = (0..5).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let (dw, dp) = gradients(&w, &phi, &r, &labels, 4, &cfg).unwrap();
        let f = |w: &[f64], p: &[f64]| loss(w, p, &r, &labels, 4, &cfg).unwrap();
        let h = 1e-6;
        let mut num = Vec::new();
        for i in 0..w.len() {
            let (mut a, mut b) = (w.clone(), w.clone());
            a[i] += h;
            b[i] -= h;
            num.push((f(&a, &phi) - f(&b, &phi)) / (2.0 * h));
        }
        for j in 0..phi.len() {
            let (mut a, mut b) = (phi.clone(), phi.clone());
            a[j] += h;
            b[j] -= h;
            num.push((f(&w, &a) - f(&w, &b)) / (2.0 * h));
        }
        let ana: Vec<f64> = dw.into_iter().chain(dp).collect();
        let diff = ana.iter().zip(&num).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let norm = ana.iter().map(|a| a * a).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    vec![outcome(
        "13",
        "analytic vs finite-difference gradients",
        worst < 1e-5,
        format!("20 instances on RC responses: max relative error {worst:.3e} (< 1e-5)"),
    )]
}

pub fn c14_normalization() -> Vec<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut sm: f64 = 0.0;
    for i in 0..1000 {
        let scale = 10f64.powi(i % 4);
        let y: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0) * scale).collect();
        let p = softmax(&y);
        sm = sm.max((p.iter().sum::<f64>() - 1.0).abs());
        assert!(p.iter().all(|v| *v >= 0.0));
    }

    let mut tr: f64 = 0.0;
    let mut herm: f64 = 0.0;
    let mut min_eig = f64::INFINITY;
    let jc = data::jc_spec();
    for (spec, z) in [(data::dispersive_spec(), 3usize), (data::dispersive_spec(), 1), (jc.clone(), 2), (jc, 3)] {
        let rho0 = DensityMatrix::qubit_basis_vacuum(z, 4, spec.n_fock).unwrap();
        let ev = unconditional_evolve(
            &spec,
            &rho0,
            10.0,
            1e-3,
            &EvolveOptions {
                record_interval: 0.5,
                checkpoint_every: Some(2),
            },
        )
        .unwrap();
        for (_, rho) in &ev.checkpoints {
            tr = tr.max((rho.trace() - C64::new(1.0, 0.0)).norm());
            herm = herm.max(rho.hermiticity_error());
            min_eig = min_eig.min(rho.min_eigenvalue());
        }
    }

    let mut sv: f64 = 0.0;
    for i in 0..100u64 {
        let hp = RcHyperParams {
            k_nodes: 1 + (i as usize % 10),
            ..RcHyperParams::five_node()
        };
        let net = sample_network(&hp, seed_derive(MASTER_SEED, SeedTag::Network, 1000 + i)).unwrap();
        sv = sv.max((net.largest_singular_value() - hp.alpha).abs());
    }
    vec![
        outcome("14a", "softmax normalization", sm < 1e-12, format!("max |sum P - 1| = {sm:.2e} (< 1e-12)")),
        outcome(
            "14b",
            "density-matrix invariants",
            tr < 1e-9 && herm < 1e-10 && min_eig >= -1e-8,
            format!("max |tr - 1| = {tr:.2e} (< 1e-9), max Hermiticity error {herm:.2e} (< 1e-10), min eigenvalue {min_eig:.2e} (>= -1e-8)"),
        ),
        outcome(
            "14c",
            "coupling singular-value contract",
            sv < 1e-10,
            format!("100 networks: max |s_max - alpha| = {sv:.2e} (< 1e-10)"),
        ),
    ]
}

pub fn c15_round_trip() -> Vec<Outcome> {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::default();
    cfg.master_seed = 15;
    cfg.system.n_fock = 20;
    cfg.timing = Timing::new(1e-3, 1e-2, 1.0).unwrap();
    cfg.dataset.m_per_class = 3;
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let ds = cmd_generate(&cfg, &a, false).unwrap();
    cmd_generate(&cfg, &b, false).unwrap();
    let files = ["manifest.json", "trajectories.f64", "config.json"];
    let identical = files.iter().all(|f| std::fs::read(a.join(f)).unwrap() == std::fs::read(b.join(f)).unwrap());
    let size_ok = std::fs::metadata(a.join("trajectories.f64")).unwrap().len() == (12 * 100 * 8) as u64;
    let back = read_dataset(&a).unwrap();
    let dataset_ok = back == ds;

    let net = sample_network(&RcHyperParams::five_node(), 3).unwrap();
    let r = Responses::from_network(&net, &ds, 4).unwrap();
    let head = train(&r, &ds.labels(), 4, &TrainConfig { max_iters: 50, ..TrainConfig::default() }, 1).unwrap();
    let kernel = build_matched_kernel_analytic(&ds.spec, ds.dt_record, ds.n_samples()).unwrap();
    let report = filter_f(&kernel, BinReference::Analytic(&ds.spec), &ds);
    let dir = tmp.path().join("art");
    std::fs::create_dir_all(&dir).unwrap();
    let h = cfg.hash();
    write_artifact(&dir.join("n.json"), "kerr_network", &h, &net).unwrap();
    write_artifact(&dir.join("h.json"), "readout_head", &h, &head).unwrap();
    write_artifact(&dir.join("k.json"), "filter_kernel", &h, &kernel).unwrap();
    write_artifact(&dir.join("r.json"), "evaluation_report", &h, &report).unwrap();
    let artifacts_ok = read_artifact::<KerrNetwork>(&dir.join("n.json"), "kerr_network").unwrap().data == net
        && read_artifact::<rcreadout::trainer::ReadoutHead>(&dir.join("h.json"), "readout_head").unwrap().data == head
        && read_artifact::<FilterKernel>(&dir.join("k.json"), "filter_kernel").unwrap().data == kernel
        && read_artifact::<EvaluationReport>(&dir.join("r.json"), "evaluation_report").unwrap().data == report
        && RunConfig::from_json(&cfg.to_json()).unwrap() == cfg;
    vec![outcome(
        "15",
        "format round trip",
        identical && size_ok && dataset_ok && artifacts_ok,
        format!(
            "re-generation byte-identical: {identical}, payload size: {size_ok}, dataset read-back equal: {dataset_ok}, artifacts field-exact: {artifacts_ok}"
        ),
    )]
}
