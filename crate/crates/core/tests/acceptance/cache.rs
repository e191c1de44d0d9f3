//! Acceptance datasets are expensive, so they are kept under the cargo
//! target directory and reused while their defining parameters match.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use rcreadout::io::{read_dataset, read_manifest, write_dataset};
use rcreadout::qsim::{generate_trajectories, MeasurementDataset, QuantumSystemSpec, SmeIntegrator, Timing, TrajectoryOptions};
use rcreadout::seed::SeedTag;

const CHUNK: usize = 40;

pub fn cache_root() -> PathBuf {
    std::env::var_os("RCREADOUT_ACCEPTANCE_CACHE")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-cache"))
}

pub struct DatasetRequest<'a> {
    pub name: &'a str,
    pub spec: QuantumSystemSpec,
    pub n_trajectories: usize,
    pub master_seed: u64,
    pub tag: SeedTag,
    pub timing: Timing,
    pub conditional: bool,
}

fn matches(req: &DatasetRequest, dir: &std::path::Path) -> bool {
    match read_manifest(dir) {
        Ok(m) => {
            m.spec == req.spec
                && m.n_trajectories == req.n_trajectories
                && m.master_seed == req.master_seed
                && m.seed_tag == req.tag
                && m.dt_int == req.timing.dt_int
                && m.dt_record == req.timing.dt_record
                && m.tau_m == req.timing.tau_m
                && m.has_conditional == req.conditional
        }
        Err(_) => false,
    }
}

/// Loads the dataset from the cache or simulates it chunk by chunk; finished
/// chunks survive an interrupted run.
pub fn dataset(req: &DatasetRequest) -> MeasurementDataset {
    let dir = cache_root().join(req.name);
    if matches(req, &dir) {
        return read_dataset(&dir).expect("cached dataset is readable");
    }
    let integ = SmeIntegrator::new(&req.spec, req.timing).expect("valid system");
    let opts = TrajectoryOptions {
        conditional: req.conditional,
        populations: false,
    };
    let mut trajectories = Vec::with_capacity(req.n_trajectories);
    let started = Instant::now();
    for start in (0..req.n_trajectories).step_by(CHUNK) {
        let end = (start + CHUNK).min(req.n_trajectories);
        let chunk_req = DatasetRequest {
            n_trajectories: end - start,
            master_seed: req.master_seed,
            spec: req.spec.clone(),
            tag: req.tag,
            timing: req.timing,
            name: req.name,
            conditional: req.conditional,
        };
        let chunk_dir = dir.join(format!("chunk-{start:06}"));
        let part = if matches(&chunk_req, &chunk_dir) {
            read_dataset(&chunk_dir).expect("cached chunk is readable").trajectories
        } else {
            let part = generate_trajectories(&integ, req.master_seed, req.tag, start..end, opts)
                .expect("trajectory generation");
            let ds = wrap(req, part);
            write_dataset(&chunk_dir, &ds, "acceptance").expect("write chunk");
            ds.trajectories
        };
        trajectories.extend(part);
        eprintln!(
            "  [{}] {}/{} trajectories ({:.0} s)",
            req.name,
            end,
            req.n_trajectories,
            started.elapsed().as_secs_f64()
        );
    }
    let ds = wrap(req, trajectories);
    write_dataset(&dir, &ds, "acceptance").expect("write dataset");
    for entry in fs::read_dir(&dir).expect("cache dir").flatten() {
        if entry.file_name().to_string_lossy().starts_with("chunk-") {
            let _ = fs::remove_dir_all(entry.path());
        }
    }
    ds
}

fn wrap(req: &DatasetRequest, trajectories: Vec<rcreadout::qsim::HomodyneTrajectory>) -> MeasurementDataset {
    MeasurementDataset {
        spec: req.spec.clone(),
        trajectories,
        master_seed: req.master_seed,
        seed_tag: req.tag,
        dt_int: req.timing.dt_int,
        dt_record: req.timing.dt_record,
        tau_m: req.timing.tau_m,
    }
}
