//! On-disk formats.
//!
//! A dataset directory holds `manifest.json` and `trajectories.f64`: raw
//! little-endian float64, trajectory `q` at bytes `[q·N·8, (q+1)·N·8)`.
//! `conditional.f64` has the same layout when conditional expectations were
//! kept. Every write goes to a temporary file that is then renamed.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{HomodyneTrajectory, MeasurementDataset, QuantumSystemSpec};
use crate::seed::SeedTag;

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const TRAJECTORIES: &str = "trajectories.f64";
pub const CONDITIONAL: &str = "conditional.f64";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub config_hash: String,
    pub spec: QuantumSystemSpec,
    pub dt_int: f64,
    pub dt_record: f64,
    pub tau_m: f64,
    pub master_seed: u64,
    pub seed_tag: SeedTag,
    pub n_trajectories: usize,
    pub n_samples: usize,
    pub labels: Vec<u8>,
    pub seeds: Vec<u64>,
    pub truncation_leak: Vec<f64>,
    pub has_conditional: bool,
}

/// JSON wrapper carrying provenance for every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact<T> {
    pub schema_version: u32,
    pub kind: String,
    pub config_hash: String,
    pub data: T,
}

impl<T> Artifact<T> {
    pub fn new(kind: &str, config_hash: &str, data: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind: kind.to_string(),
            config_hash: config_hash.to_string(),
            data,
        }
    }
}

/// Writes `bytes` to `path` through a sibling temporary file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&s).map_err(|e| Error::Format {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

pub fn write_artifact<T: Serialize>(path: &Path, kind: &str, config_hash: &str, data: &T) -> Result<()> {
    write_json(path, &Artifact::new(kind, config_hash, data))
}

/// Reads an artifact and checks its kind and schema version.
pub fn read_artifact<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Artifact<T>> {
    let a: Artifact<T> = read_json(path)?;
    if a.schema_version != SCHEMA_VERSION {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("schema_version {} is not supported", a.schema_version),
        });
    }
    if a.kind != kind {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("expected a {kind} artifact, found {}", a.kind),
        });
    }
    Ok(a)
}

/// CSV text with a leading `#` provenance line.
pub fn write_csv(path: &Path, config_hash: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = format!("# schema_version={SCHEMA_VERSION} config_hash={config_hash}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    write_atomic(path, &buf)
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

pub fn f64s_to_le_bytes(values: impl IntoIterator<Item = f64>) -> Vec<u8> {
    values.into_iter().flat_map(f64::to_le_bytes).collect()
}

pub fn le_bytes_to_f64s(path: &Path, bytes: &[u8]) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("length {} is not a multiple of 8", bytes.len()),
        });
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Fails unless `dir` is absent or empty, or `force` is set.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?.next().is_some();
        if non_empty && !force {
            return Err(Error::OutputExists(dir.to_path_buf()));
        }
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

pub fn manifest_for(ds: &MeasurementDataset, config_hash: &str) -> Manifest {
    Manifest {
        schema_version: SCHEMA_VERSION,
        config_hash: config_hash.to_string(),
        spec: ds.spec.clone(),
        dt_int: ds.dt_int,
        dt_record: ds.dt_record,
        tau_m: ds.tau_m,
        master_seed: ds.master_seed,
        seed_tag: ds.seed_tag,
        n_trajectories: ds.len(),
        n_samples: ds.n_samples(),
        labels: ds.labels(),
        seeds: ds.trajectories.iter().map(|t| t.seed).collect(),
        truncation_leak: ds.trajectories.iter().map(|t| t.truncation_leak).collect(),
        has_conditional: !ds.is_empty() && ds.trajectories.iter().all(|t| t.x_conditional.is_some()),
    }
}

pub fn write_dataset(dir: &Path, ds: &MeasurementDataset, config_hash: &str) -> Result<()> {
    ds.validate()?;
    let manifest = manifest_for(ds, config_hash);
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let bulk = f64s_to_le_bytes(ds.trajectories.iter().flat_map(|t| t.j_record.iter().copied()));
    write_atomic(&dir.join(TRAJECTORIES), &bulk)?;
    if manifest.has_conditional {
        let cond = f64s_to_le_bytes(
            ds.trajectories
                .iter()
                .flat_map(|t| t.x_conditional.as_deref().unwrap_or_default().iter().copied()),
        );
        write_atomic(&dir.join(CONDITIONAL), &cond)?;
    }
    // The manifest goes last so a readable manifest implies complete data.
    write_json(&dir.join(MANIFEST), &manifest)
}

fn split_records(path: &Path, values: Vec<f64>, q: usize, n: usize) -> Result<Vec<Vec<f64>>> {
    if values.len() != q * n {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("holds {} samples, manifest implies {q} x {n}", values.len()),
        });
    }
    Ok(if n == 0 {
        vec![Vec::new(); q]
    } else {
        values.chunks_exact(n).map(<[f64]>::to_vec).collect()
    })
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let m: Manifest = read_json(&dir.join(MANIFEST))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(Error::Format {
            path: dir.join(MANIFEST),
            reason: format!("schema_version {} is not supported", m.schema_version),
        });
    }
    let q = m.n_trajectories;
    if m.labels.len() != q || m.seeds.len() != q || m.truncation_leak.len() != q {
        return Err(Error::Format {
            path: dir.join(MANIFEST),
            reason: "per-trajectory arrays disagree with n_trajectories".into(),
        });
    }
    Ok(m)
}

pub fn read_dataset(dir: &Path) -> Result<MeasurementDataset> {
    let m = read_manifest(dir)?;
    let q = m.n_trajectories;
    let n = m.n_samples;
    let path = dir.join(TRAJECTORIES);
    let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    let records = split_records(&path, le_bytes_to_f64s(&path, &bytes)?, q, n)?;
    let conditional: Vec<Option<Vec<f64>>> = if m.has_conditional {
        let cpath = dir.join(CONDITIONAL);
        let bytes = fs::read(&cpath).map_err(|e| Error::io(&cpath, e))?;
        split_records(&cpath, le_bytes_to_f64s(&cpath, &bytes)?, q, n)?
            .into_iter()
            .map(Some)
            .collect()
    } else {
        vec![None; q]
    };
    let trajectories = records
        .into_iter()
        .zip(conditional)
        .enumerate()
        .map(|(i, (j_record, x_conditional))| HomodyneTrajectory {
            label: m.labels[i],
            dt_record: m.dt_record,
            j_record,
            x_conditional,
            seed: m.seeds[i],
            truncation_leak: m.truncation_leak[i],
        })
        .collect();
    let ds = MeasurementDataset {
        spec: m.spec,
        trajectories,
        master_seed: m.master_seed,
        seed_tag: m.seed_tag,
        dt_int: m.dt_int,
        dt_record: m.dt_record,
        tau_m: m.tau_m,
    };
    ds.validate()?;
    Ok(ds)
}
