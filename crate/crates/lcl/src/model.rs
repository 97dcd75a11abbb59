//! JSON model files: `{"name", "d", "D", "matrices"}` with `matrices[k][i][j] = [re, im]`.

use std::fs;
use std::path::Path;

use lcl_core::bench::{self, FamilyName, FamilySpec};
use lcl_core::{CMatrix, KrausSet, MpsFamily, C64};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub name: String,
    pub d: usize,
    #[serde(rename = "D")]
    pub bond_dim: usize,
    pub matrices: Vec<Vec<Vec<[f64; 2]>>>,
}

impl ModelFile {
    pub fn from_family(f: &MpsFamily) -> ModelFile {
        let matrices = f
            .kraus()
            .matrices()
            .iter()
            .map(|m| {
                (0..m.rows())
                    .map(|i| m.row(i).iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect();
        ModelFile {
            name: f.name().to_string(),
            d: f.phys_dim(),
            bond_dim: f.bond_dim(),
            matrices,
        }
    }

    /// Checks shapes and finiteness; errors name the offending index.
    pub fn to_family(&self) -> Result<MpsFamily> {
        let ctx = |k: usize| format!("model `{}`, matrix {k}", self.name);
        if self.matrices.len() != self.d {
            return Err(Error::format(
                format!("model `{}`", self.name),
                format!("declares d = {} but has {} matrices", self.d, self.matrices.len()),
            ));
        }
        if self.d == 0 || self.bond_dim == 0 {
            return Err(Error::format(format!("model `{}`", self.name), "d and D must be positive"));
        }
        let dim = self.bond_dim;
        let mut mats = Vec::with_capacity(self.d);
        for (k, rows) in self.matrices.iter().enumerate() {
            if rows.len() != dim {
                return Err(Error::format(ctx(k), format!("has {} rows, expected {dim}", rows.len())));
            }
            let mut data = Vec::with_capacity(dim * dim);
            for (i, row) in rows.iter().enumerate() {
                if row.len() != dim {
                    return Err(Error::format(
                        format!("{}, row {i}", ctx(k)),
                        format!("has {} entries, expected {dim}", row.len()),
                    ));
                }
                for (j, [re, im]) in row.iter().enumerate() {
                    if !re.is_finite() || !im.is_finite() {
                        return Err(Error::format(format!("{}, entry ({i}, {j})", ctx(k)), "is not finite"));
                    }
                    data.push(C64::new(*re, *im));
                }
            }
            mats.push(CMatrix::new(dim, dim, data).map_err(lcl_core::mps::MpsError::from)?);
        }
        Ok(MpsFamily::new(self.name.clone(), KrausSet::new(mats)?))
    }
}

pub fn load_model(path: &Path) -> Result<MpsFamily> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ModelFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.to_family()
}

/// Loads externally produced tensors (same format as [`load_model`]).
pub fn load_physical(path: &Path) -> Result<MpsFamily> {
    load_model(path)
}

pub fn save_model(f: &MpsFamily, path: &Path) -> Result<()> {
    let text = serde_json::to_string(&ModelFile::from_family(f)).expect("serializable");
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// A model file path, or a built-in: `dichotomy`, `two_block`, `FAMILY:t`.
pub fn resolve_model(arg: &str) -> Result<MpsFamily> {
    let path = Path::new(arg);
    if path.exists() {
        return load_model(path);
    }
    match arg {
        "dichotomy" => return Ok(bench::dichotomy_tensors()),
        "two_block" => return Ok(bench::two_block_family()),
        _ => {}
    }
    let (name, t) = arg.split_once(':').ok_or_else(|| Error::UnknownModel(arg.to_string()))?;
    let family: FamilyName = name.parse()?;
    let t: u32 = t.parse().map_err(|_| Error::UnknownModel(arg.to_string()))?;
    Ok(bench::build_family(FamilySpec::new(family, t))?)
}
