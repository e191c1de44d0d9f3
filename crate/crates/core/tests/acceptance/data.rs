//! The shared acceptance datasets.

use rcreadout::qsim::{MeasurementDataset, Model, QuantumSystemSpec, Timing};
use rcreadout::seed::SeedTag;

use crate::cache::{dataset, DatasetRequest};

pub const MASTER_SEED: u64 = 20_240_601;
/// Largest training set drawn from; smaller training sets are its prefixes.
pub const TRAIN_POOL: usize = 1200;
pub const TEST_SIZE: usize = 400;
pub const JC_TRAIN: usize = 80;

pub fn timing() -> Timing {
    Timing::new(1e-3, 1e-2, 10.0).unwrap()
}

pub fn dispersive_spec() -> QuantumSystemSpec {
    QuantumSystemSpec::two_qubit_readout(Model::Dispersive)
}

/// The JC pointer states for |10⟩ reach the top of a 30-level cavity, so the
/// JC runs use a larger truncation.
pub const JC_N_FOCK: usize = 34;

pub fn jc_spec() -> QuantumSystemSpec {
    QuantumSystemSpec {
        n_fock: JC_N_FOCK,
        ..QuantumSystemSpec::two_qubit_readout(Model::JaynesCummings)
    }
}

fn request(name: &str, spec: QuantumSystemSpec, n: usize, tag: SeedTag) -> MeasurementDataset {
    dataset(&DatasetRequest {
        name,
        spec,
        n_trajectories: n,
        master_seed: MASTER_SEED,
        tag,
        timing: timing(),
        conditional: false,
    })
}

pub fn dispersive_test() -> MeasurementDataset {
    request("dispersive-test", dispersive_spec(), TEST_SIZE, SeedTag::TestData)
}

pub fn dispersive_train_pool() -> MeasurementDataset {
    request("dispersive-train", dispersive_spec(), TRAIN_POOL, SeedTag::TrainData)
}

pub fn jc_train() -> MeasurementDataset {
    request("jc-train", jc_spec(), JC_TRAIN, SeedTag::TrainData)
}

pub fn jc_test() -> MeasurementDataset {
    request("jc-test", jc_spec(), TEST_SIZE, SeedTag::TestData)
}

pub const ORACLE_SIZE: usize = 500;
/// |01⟩: the measurement-induced spread comes from the exchange dynamics,
/// which every record resolves, so the ensemble mean is close to normal at
/// this size. From |11⟩ the spread is carried by rare decay events and the
/// sample SE is unreliable.
pub const ORACLE_CLASS: usize = 1;

pub fn oracle_spec() -> QuantumSystemSpec {
    dispersive_spec()
}

pub fn oracle_timing() -> Timing {
    Timing::new(1e-3, 0.25, 10.0).unwrap()
}

/// Conditional records of `ORACLE_SIZE` trajectories, all from `ORACLE_CLASS`.
pub fn sme_oracle() -> MeasurementDataset {
    use rayon::prelude::*;
    use rcreadout::io::{read_dataset, read_manifest, write_dataset};
    use rcreadout::qsim::{SmeIntegrator, TrajectoryOptions};
    use rcreadout::seed::seed_derive;

    let dir = crate::cache::cache_root().join(format!("sme-oracle-z{ORACLE_CLASS}"));
    let spec = oracle_spec();
    let timing = oracle_timing();
    if let Ok(m) = read_manifest(&dir) {
        if m.spec == spec && m.n_trajectories == ORACLE_SIZE && m.dt_record == timing.dt_record && m.has_conditional && m.labels.iter().all(|&l| l as usize == ORACLE_CLASS) {
            return read_dataset(&dir).expect("cached oracle set");
        }
    }
    let t0 = std::time::Instant::now();
    let integ = SmeIntegrator::new(&spec, timing).unwrap();
    let opts = TrajectoryOptions {
        conditional: true,
        populations: false,
    };
    let trajectories: Vec<_> = (0..ORACLE_SIZE)
        .into_par_iter()
        .map(|i| {
            let seed = seed_derive(MASTER_SEED + 1, SeedTag::TestData, i as u64);
            let t = integ.run(ORACLE_CLASS, seed, opts).expect("oracle trajectory").trajectory;
            assert!(t.is_valid(), "oracle trajectory {i} leaked");
            t
        })
        .collect();
    eprintln!("  [sme-oracle] {ORACLE_SIZE} trajectories ({:.0} s)", t0.elapsed().as_secs_f64());
    let ds = MeasurementDataset {
        spec,
        trajectories,
        master_seed: MASTER_SEED + 1,
        seed_tag: SeedTag::TestData,
        dt_int: timing.dt_int,
        dt_record: timing.dt_record,
        tau_m: timing.tau_m,
    };
    write_dataset(&dir, &ds, "acceptance").expect("write oracle set");
    ds
}
