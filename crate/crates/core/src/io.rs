//! On-disk dataset directories.
//!
//! ```text
//! <dir>/data.csv       x0..x{D-1}
//! <dir>/labels.csv     m0..m{d-1},v0..v{d-1}
//! <dir>/latents.csv    z0..z{d-1}   (evaluation only)
//! <dir>/scm.json       ground-truth model
//! <dir>/manifest.json  generation parameters and seed
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{BcdError, Result};
use crate::graph_scm::GroundTruthScm;
use crate::sampler::{Dataset, DatasetSpec, InterventionLabels};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub d: usize,
    #[serde(rename = "D")]
    pub big_d: usize,
    pub er_edges_per_node: f64,
    pub sigma: f64,
    pub spec: DatasetSpec,
    pub seed: u64,
}

pub fn write_matrix_csv(path: &Path, header: &[String], m: &DMatrix<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| m[(r, c)].to_string()))?;
    }
    w.flush().map_err(|e| BcdError::io(path, e))?;
    Ok(())
}

/// Reads a numeric CSV whose header must equal `header`.
pub fn read_matrix_csv(path: &Path, header: &[String]) -> Result<DMatrix<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let found: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if found != header {
        return Err(BcdError::Format {
            path: path.display().to_string(),
            reason: format!("expected header {header:?}, found {found:?}"),
        });
    }
    let mut values = Vec::new();
    let mut rows = 0;
    for record in rdr.records() {
        let record = record?;
        for field in record.iter() {
            values.push(field.trim().parse::<f64>().map_err(|e| BcdError::Format {
                path: path.display().to_string(),
                reason: format!("row {rows}: {e}"),
            })?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, header.len(), &values))
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn label_header(d: usize) -> Vec<String> {
    let mut h = names("m", d);
    h.extend(names("v", d));
    h
}

pub fn save_dataset(dir: &Path, data: &Dataset, scm: &GroundTruthScm, manifest: &DatasetManifest) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BcdError::io(dir, e))?;
    let d = data.labels.d();
    write_matrix_csv(&dir.join("data.csv"), &names("x", data.x.ncols()), &data.x)?;

    let n = data.n();
    let labels = DMatrix::from_fn(n, 2 * d, |r, c| {
        if c < d {
            if data.labels.is_target(r, c) {
                1.0
            } else {
                0.0
            }
        } else if data.labels.is_target(r, c - d) {
            data.labels.value(r, c - d)
        } else {
            0.0
        }
    });
    write_matrix_csv(&dir.join("labels.csv"), &label_header(d), &labels)?;

    if let Some(z) = &data.z_eval {
        write_matrix_csv(&dir.join("latents.csv"), &names("z", d), z)?;
    }
    scm.save(&dir.join("scm.json"))?;
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(manifest)?).map_err(|e| BcdError::io(&path, e))
}

pub fn load_dataset(dir: &Path) -> Result<(Dataset, GroundTruthScm, DatasetManifest)> {
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path).map_err(|e| BcdError::io(&manifest_path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let scm = GroundTruthScm::load(&dir.join("scm.json"))?;
    let d = manifest.d;

    let x = read_matrix_csv(&dir.join("data.csv"), &names("x", manifest.big_d))?;
    let raw = read_matrix_csv(&dir.join("labels.csv"), &label_header(d))?;
    if raw.nrows() != x.nrows() {
        return Err(BcdError::Format {
            path: dir.display().to_string(),
            reason: format!("data.csv has {} rows, labels.csv has {}", x.nrows(), raw.nrows()),
        });
    }
    let mut mask = Vec::with_capacity(raw.nrows() * d);
    let mut values = Vec::with_capacity(raw.nrows() * d);
    for r in 0..raw.nrows() {
        for c in 0..d {
            mask.push(raw[(r, c)] != 0.0);
            values.push(raw[(r, c + d)]);
        }
    }
    let labels = InterventionLabels::from_parts(d, mask, values)?;

    let latents = dir.join("latents.csv");
    let z_eval = if latents.exists() {
        Some(read_matrix_csv(&latents, &names("z", d))?)
    } else {
        None
    };
    Ok((Dataset { x, labels, z_eval }, scm, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::{generate_dataset, NodeMode, ValueMode};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn dataset_directory_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scm = GroundTruthScm::generate(4, 7, 1.0, 0.1, &mut rng).unwrap();
        let spec = DatasetSpec {
            n_obs: 10,
            n_int: 20,
            node_mode: NodeMode::Multi,
            value_mode: ValueMode::Uniform { lo: -10.0, hi: 10.0 },
            sets: 4,
        };
        let data = generate_dataset(&scm, &spec, &mut rng).unwrap();
        let manifest = DatasetManifest {
            d: 4,
            big_d: 7,
            er_edges_per_node: 1.0,
            sigma: 0.1,
            spec,
            seed: 3,
        };
        let dir = tempfile::tempdir().unwrap();
        save_dataset(dir.path(), &data, &scm, &manifest).unwrap();
        let header = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
        assert!(header.starts_with("m0,m1,m2,m3,v0,v1,v2,v3\n"));
        let (back, scm_back, manifest_back) = load_dataset(dir.path()).unwrap();
        assert_eq!(back, data);
        assert_eq!(scm_back, scm);
        assert_eq!(manifest_back, manifest);
    }

    #[test]
    fn header_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        write_matrix_csv(&path, &names("x", 2), &DMatrix::zeros(1, 2)).unwrap();
        assert!(matches!(read_matrix_csv(&path, &names("y", 2)), Err(BcdError::Format { .. })));
    }
}
