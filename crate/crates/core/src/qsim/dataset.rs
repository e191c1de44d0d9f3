use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::sme::{HomodyneTrajectory, SmeIntegrator, TrajectoryOptions};
use super::spec::QuantumSystemSpec;
use super::timing::Timing;
use crate::error::{Error, Result};
use crate::seed::{seed_derive, SeedTag};

/// Labeled homodyne records. Trajectory `q` has label `q mod 2^N_q`, so any
/// prefix whose length is a multiple of the class count is balanced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementDataset {
    pub spec: QuantumSystemSpec,
    pub trajectories: Vec<HomodyneTrajectory>,
    pub master_seed: u64,
    pub seed_tag: SeedTag,
    pub dt_int: f64,
    pub dt_record: f64,
    pub tau_m: f64,
}

impl MeasurementDataset {
    pub fn len(&self) -> usize {
        self.trajectories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trajectories.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.spec.n_qubit_states()
    }

    pub fn n_samples(&self) -> usize {
        self.trajectories.first().map_or(0, |t| t.j_record.len())
    }

    pub fn labels(&self) -> Vec<u8> {
        self.trajectories.iter().map(|t| t.label).collect()
    }

    pub fn records(&self) -> Vec<&[f64]> {
        self.trajectories.iter().map(|t| t.j_record.as_slice()).collect()
    }

    pub fn timing(&self) -> Timing {
        Timing {
            dt_int: self.dt_int,
            dt_record: self.dt_record,
            tau_m: self.tau_m,
        }
    }

    /// First `q` trajectories.
    pub fn prefix(&self, q: usize) -> Result<Self> {
        if q > self.len() {
            return Err(Error::Dimension(format!(
                "requested {q} trajectories from a dataset of {}",
                self.len()
            )));
        }
        Ok(Self {
            trajectories: self.trajectories[..q].to_vec(),
            ..self.clone()
        })
    }

    /// Per-class mean record; fails if a class is absent.
    pub fn class_means(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.n_samples();
        let c = self.n_classes();
        let mut sums = vec![vec![0.0; n]; c];
        let mut counts = vec![0usize; c];
        for t in &self.trajectories {
            let z = t.label as usize;
            counts[z] += 1;
            for (s, v) in sums[z].iter_mut().zip(&t.j_record) {
                *s += v;
            }
        }
        for (z, count) in counts.iter().enumerate() {
            if *count == 0 {
                return Err(Error::MissingClass(z as u8));
            }
        }
        for (s, count) in sums.iter_mut().zip(&counts) {
            for v in s.iter_mut() {
                *v /= *count as f64;
            }
        }
        Ok(sums)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.timing().n_records();
        for (q, t) in self.trajectories.iter().enumerate() {
            if t.j_record.len() != n {
                return Err(Error::Dimension(format!(
                    "trajectory {q} has {} samples, expected {n}",
                    t.j_record.len()
                )));
            }
            if (t.dt_record - self.dt_record).abs() > 0.0 {
                return Err(Error::Dimension(format!("trajectory {q} has a different dt_record")));
            }
            if t.label as usize >= self.n_classes() {
                return Err(Error::Domain(format!("trajectory {q} has label {}", t.label)));
            }
        }
        Ok(())
    }
}

/// Simulates trajectories `range` of the sequence defined by
/// `(master_seed, tag)`. Output order follows the index, whatever the
/// thread schedule.
pub fn generate_trajectories(
    integ: &SmeIntegrator,
    master_seed: u64,
    tag: SeedTag,
    range: std::ops::Range<usize>,
    opts: TrajectoryOptions,
) -> Result<Vec<HomodyneTrajectory>> {
    let nz = integ.spec().n_qubit_states();
    let out: Vec<Result<HomodyneTrajectory>> = range
        .into_par_iter()
        .map(|q| {
            let seed = seed_derive(master_seed, tag, q as u64);
            let t = integ.run(q % nz, seed, opts)?.trajectory;
            if !t.is_valid() {
                return Err(Error::TruncationLeak {
                    index: q,
                    leak: t.truncation_leak,
                });
            }
            Ok(t)
        })
        .collect();
    out.into_iter().collect()
}

pub fn generate_dataset(
    spec: &QuantumSystemSpec,
    m_per_class: usize,
    master_seed: u64,
    tag: SeedTag,
    timing: Timing,
    opts: TrajectoryOptions,
) -> Result<MeasurementDataset> {
    if m_per_class == 0 {
        return Err(Error::Domain("m_per_class must be >= 1".into()));
    }
    let integ = SmeIntegrator::new(spec, timing)?;
    let q = m_per_class * spec.n_qubit_states();
    let trajectories = generate_trajectories(&integ, master_seed, tag, 0..q, opts)?;
    Ok(MeasurementDataset {
        spec: spec.clone(),
        trajectories,
        master_seed,
        seed_tag: tag,
        dt_int: timing.dt_int,
        dt_record: timing.dt_record,
        tau_m: timing.tau_m,
    })
}
