//! Conventional readout baselines: boxcar and matched filters followed by
//! nearest-expected-bin classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{analytic_cavity_amplitude, MeasurementDataset, QuantumSystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    Boxcar,
    MatchedEmpirical,
    MatchedAnalytic,
}

/// Kernel `h(tₙ)` sampled at the record times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterKernel {
    pub kind: FilterKind,
    pub dt_record: f64,
    pub h: Vec<f64>,
}

/// `expected[z][n]`: filtered class-`z` mean signal at `tₙ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinClassifier {
    pub expected: Vec<Vec<f64>>,
}

/// Where the class mean signals for [`fit_bins`] come from.
#[derive(Clone, Copy, Debug)]
pub enum BinReference<'a> {
    Dataset(&'a MeasurementDataset),
    /// `√κ·2Re α_z(tₙ)` from the dispersive pointer-state solution.
    Analytic(&'a QuantumSystemSpec),
}

/// `y(tₙ) = Σ_{m≤n} u(tₘ)·dt`.
pub fn boxcar_filter(u: &[f64], dt_record: f64) -> Vec<f64> {
    let mut acc = 0.0;
    u.iter()
        .map(|v| {
            acc += v * dt_record;
            acc
        })
        .collect()
}

pub fn boxcar_kernel(n: usize, dt_record: f64) -> FilterKernel {
    FilterKernel {
        kind: FilterKind::Boxcar,
        dt_record,
        h: vec![1.0; n],
    }
}

fn mean_abs_over_classes(means: &[Vec<f64>]) -> Vec<f64> {
    let n = means.first().map_or(0, Vec::len);
    let c = means.len() as f64;
    (0..n).map(|i| means.iter().map(|m| m[i].abs()).sum::<f64>() / c).collect()
}

/// `h(tₙ) = (1/C) Σ_z |mean_z J(tₙ)|` over the dataset's class means.
pub fn build_matched_kernel(dataset: &MeasurementDataset) -> Result<FilterKernel> {
    let means = dataset.class_means()?;
    Ok(FilterKernel {
        kind: FilterKind::MatchedEmpirical,
        dt_record: dataset.dt_record,
        h: mean_abs_over_classes(&means),
    })
}

/// Noiseless class means `√κ·2Re α_z(tₙ)` at `tₙ = (n+1)·dt`.
pub fn analytic_class_means(spec: &QuantumSystemSpec, dt_record: f64, n: usize) -> Result<Vec<Vec<f64>>> {
    let sk = spec.kappa.sqrt();
    (0..spec.n_qubit_states())
        .map(|z| {
            (0..n)
                .map(|i| Ok(sk * 2.0 * analytic_cavity_amplitude(spec, z, (i + 1) as f64 * dt_record)?.re))
                .collect()
        })
        .collect()
}

pub fn build_matched_kernel_analytic(spec: &QuantumSystemSpec, dt_record: f64, n: usize) -> Result<FilterKernel> {
    let means = analytic_class_means(spec, dt_record, n)?;
    Ok(FilterKernel {
        kind: FilterKind::MatchedAnalytic,
        dt_record,
        h: mean_abs_over_classes(&means),
    })
}

/// Running correlation `y(tₙ) = Σ_{m≤n} h(tₘ)·u(tₘ)·dt`.
pub fn apply_filter(kernel: &FilterKernel, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != kernel.h.len() {
        return Err(Error::Dimension(format!(
            "signal has {} samples but the kernel has {}",
            u.len(),
            kernel.h.len()
        )));
    }
    let dt = kernel.dt_record;
    let mut acc = 0.0;
    Ok(kernel
        .h
        .iter()
        .zip(u)
        .map(|(h, v)| {
            acc += h * v * dt;
            acc
        })
        .collect())
}

pub fn fit_bins(kernel: &FilterKernel, reference: BinReference) -> Result<BinClassifier> {
    let n = kernel.h.len();
    let means = match reference {
        BinReference::Dataset(ds) => {
            if ds.n_samples() != n {
                return Err(Error::Dimension(format!(
                    "reference records have {} samples but the kernel has {n}",
                    ds.n_samples()
                )));
            }
            ds.class_means()?
        }
        BinReference::Analytic(spec) => analytic_class_means(spec, kernel.dt_record, n)?,
    };
    let expected = means.iter().map(|m| apply_filter(kernel, m)).collect::<Result<_>>()?;
    Ok(BinClassifier { expected })
}

/// `label(tₙ) = argmin_z |y(tₙ) − expected[z][n]|`, ties to the smaller `z`.
pub fn classify_filtered(bins: &BinClassifier, y: &[f64]) -> Result<Vec<u8>> {
    if let Some(e) = bins.expected.iter().find(|e| e.len() != y.len()) {
        return Err(Error::Dimension(format!(
            "filtered signal has {} samples but the bins have {}",
            y.len(),
            e.len()
        )));
    }
    Ok((0..y.len())
        .map(|i| {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (z, e) in bins.expected.iter().enumerate() {
                let d = (y[i] - e[i]).abs();
                if d < best_d {
                    best = z;
                    best_d = d;
                }
            }
            best as u8
        })
        .collect())
}
