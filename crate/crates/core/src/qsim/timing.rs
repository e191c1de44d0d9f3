use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integration step, recording interval and measurement window, in units of `1/κ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub dt_int: f64,
    pub dt_record: f64,
    pub tau_m: f64,
}

impl Timing {
    pub fn new(dt_int: f64, dt_record: f64, tau_m: f64) -> Result<Self> {
        let t = Self {
            dt_int,
            dt_record,
            tau_m,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt_int", self.dt_int), ("dt_record", self.dt_record), ("tau_m", self.tau_m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        integer_ratio(self.dt_record, self.dt_int).ok_or_else(|| {
            Error::Domain(format!(
                "dt_record = {} is not an integer multiple of dt_int = {}",
                self.dt_record, self.dt_int
            ))
        })?;
        integer_ratio(self.tau_m, self.dt_record).ok_or_else(|| {
            Error::Domain(format!(
                "tau_m = {} is not an integer multiple of dt_record = {}",
                self.tau_m, self.dt_record
            ))
        })?;
        Ok(())
    }

    pub fn steps_per_record(&self) -> usize {
        integer_ratio(self.dt_record, self.dt_int).unwrap_or(1)
    }

    /// Number of recorded samples `N = τ_m / dt_record`.
    pub fn n_records(&self) -> usize {
        integer_ratio(self.tau_m, self.dt_record).unwrap_or(0)
    }

    /// Time stamp of record `i` (0-based), the end of its bin.
    pub fn record_time(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.dt_record
    }
}

fn integer_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let n = r.round();
    if n >= 1.0 && (r - n).abs() <= 1e-9 * n {
        Some(n as usize)
    } else {
        None
    }
}
