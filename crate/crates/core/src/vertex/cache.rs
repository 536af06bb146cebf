//! On-disk cache of structure-constant tables.
//!
//! One JSON file per `(name, params, cap)`:
//! `{name, params, cap, basis: [[degree, label]...], modes: [[a, m, b, [coeffs]]...]}`
//! where `coeffs` lists the result in the basis of its degree component and
//! scalars are `"p/q"` text. Algebra files carry the vacuum, conformal
//! vector, central charge and generator data in an extra `algebra` field.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{GradedSpace, SparseVec};
use crate::scalar::Scalar;

use super::{ModeTable, ModuleData, VertexAlgebraData};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableFile {
    pub name: String,
    pub params: BTreeMap<String, String>,
    pub cap: i64,
    pub basis: Vec<(i64, String)>,
    pub modes: Vec<(String, i64, String, Vec<Scalar>)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub algebra: Option<AlgebraExtras>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraExtras {
    pub vacuum: String,
    pub omega: Vec<(String, Scalar)>,
    pub central_charge: Scalar,
    pub generators: Vec<String>,
    /// `[u, g, k, v]` meaning `u = g_(-k) v`.
    pub construction: Vec<(String, String, i64, String)>,
}

fn basis_of(space: &GradedSpace) -> Vec<(i64, String)> {
    (0..space.dim()).map(|i| (space.degree(i), space.label(i).to_string())).collect()
}

fn space_from(basis: &[(i64, String)]) -> Result<GradedSpace> {
    let mut comps: BTreeMap<i64, Vec<String>> = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    for (d, l) in basis {
        if !seen.insert(l.clone()) {
            return Err(Error::Corrupted(format!("duplicate basis label {l}")));
        }
        comps.entry(*d).or_default().push(l.clone());
    }
    Ok(GradedSpace::new(comps))
}

fn modes_to_rows(alg: &GradedSpace, target: &GradedSpace, table: &ModeTable) -> Vec<(String, i64, String, Vec<Scalar>)> {
    table
        .sorted()
        .into_iter()
        .map(|((a, m, v), r)| {
            let d = alg.degree(a) + target.degree(v) - m - 1;
            let range = target.range_at(d);
            let coeffs = range.clone().map(|i| r.get(i)).collect();
            (alg.label(a).to_string(), m, target.label(v).to_string(), coeffs)
        })
        .collect()
}

fn rows_to_modes(
    alg: &GradedSpace,
    target: &GradedSpace,
    rows: &[(String, i64, String, Vec<Scalar>)],
) -> Result<ModeTable> {
    let idx = |space: &GradedSpace, l: &str| {
        space.index_of(l).ok_or_else(|| Error::Corrupted(format!("unknown basis label {l:?} in mode table")))
    };
    let mut table = ModeTable::new();
    for (a, m, v, coeffs) in rows {
        let ai = idx(alg, a)?;
        let vi = idx(target, v)?;
        let d = alg.degree(ai) + target.degree(vi) - m - 1;
        let range = target.range_at(d);
        if coeffs.len() != range.len() {
            return Err(Error::Corrupted(format!(
                "mode ({a}, {m}, {v}) has {} coefficients but degree {d} has dimension {}",
                coeffs.len(),
                range.len()
            )));
        }
        let vec = SparseVec::from_pairs(range.zip(coeffs.iter().cloned()));
        table.insert(ai, *m, vi, vec);
    }
    Ok(table)
}

pub fn algebra_to_file(alg: &VertexAlgebraData) -> TableFile {
    let s = &alg.space;
    TableFile {
        name: alg.name.clone(),
        params: alg.params.clone(),
        cap: alg.cap,
        basis: basis_of(s),
        modes: modes_to_rows(s, s, &alg.modes),
        algebra: Some(AlgebraExtras {
            vacuum: s.label(alg.vacuum).to_string(),
            omega: alg.omega.iter().map(|(i, c)| (s.label(i).to_string(), c.clone())).collect(),
            central_charge: alg.central_charge.clone(),
            generators: alg.generators.iter().map(|g| s.label(*g).to_string()).collect(),
            construction: alg
                .construction
                .iter()
                .enumerate()
                .filter_map(|(u, c)| {
                    c.map(|(g, k, v)| (s.label(u).to_string(), s.label(g).to_string(), k, s.label(v).to_string()))
                })
                .collect(),
        }),
    }
}

pub fn algebra_from_file(file: &TableFile) -> Result<Arc<VertexAlgebraData>> {
    let extras = file.algebra.as_ref().ok_or_else(|| Error::Corrupted("not an algebra table".into()))?;
    let space = space_from(&file.basis)?;
    let idx = |l: &str| space.index_of(l).ok_or_else(|| Error::Corrupted(format!("unknown basis label {l:?}")));
    let mut construction = vec![None; space.dim()];
    for (u, g, k, v) in &extras.construction {
        construction[idx(u)?] = Some((idx(g)?, *k, idx(v)?));
    }
    let alg = VertexAlgebraData {
        name: file.name.clone(),
        params: file.params.clone(),
        cap: file.cap,
        vacuum: idx(&extras.vacuum)?,
        omega: SparseVec::from_pairs(
            extras.omega.iter().map(|(l, c)| Ok((idx(l)?, c.clone()))).collect::<Result<Vec<_>>>()?,
        ),
        central_charge: extras.central_charge.clone(),
        generators: extras.generators.iter().map(|g| idx(g)).collect::<Result<_>>()?,
        construction,
        modes: rows_to_modes(&space, &space, &file.modes)?,
        space,
    };
    alg.validate()?;
    Ok(Arc::new(alg))
}

pub fn module_to_file(module: &ModuleData) -> TableFile {
    TableFile {
        name: module.name.clone(),
        params: module.params.clone(),
        cap: module.cap,
        basis: basis_of(&module.space),
        modes: modes_to_rows(&module.algebra.space, &module.space, &module.modes),
        algebra: None,
    }
}

pub fn module_from_file(file: &TableFile, alg: &Arc<VertexAlgebraData>) -> Result<ModuleData> {
    let space = space_from(&file.basis)?;
    let m = ModuleData {
        name: file.name.clone(),
        params: file.params.clone(),
        algebra: Arc::clone(alg),
        cap: file.cap,
        modes: rows_to_modes(&alg.space, &space, &file.modes)?,
        space,
    };
    m.validate()?;
    Ok(m)
}

/// Directory of cached tables.
#[derive(Clone, Debug)]
pub struct TableCache {
    dir: PathBuf,
}

impl TableCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        TableCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, kind: &str, name: &str, params: &BTreeMap<String, String>, cap: i64, extra: &str) -> PathBuf {
        let mut stem = format!("{kind}-{name}");
        for (k, v) in params {
            stem.push_str(&format!("-{k}={}", v.replace('/', "_")));
        }
        stem.push_str(&format!("-cap{cap}{extra}.json"));
        self.dir.join(stem)
    }

    fn read(path: &Path) -> Result<Option<TableFile>> {
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(path)?;
        Ok(Some(serde_json::from_str(&text)?))
    }

    fn write(path: &Path, file: &TableFile) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(file)?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    /// Loads the algebra table if cached, otherwise builds and stores it.
    pub fn algebra(
        &self,
        name: &str,
        params: &BTreeMap<String, String>,
        cap: i64,
        build: impl FnOnce() -> Result<Arc<VertexAlgebraData>>,
    ) -> Result<Arc<VertexAlgebraData>> {
        let path = self.path("algebra", name, params, cap, "");
        if let Some(file) = Self::read(&path)? {
            log::debug!("loaded {}", path.display());
            return algebra_from_file(&file);
        }
        let alg = build()?;
        Self::write(&path, &algebra_to_file(&alg))?;
        Ok(alg)
    }

    /// Loads the module table if cached, otherwise builds and stores it.
    pub fn module(
        &self,
        alg: &Arc<VertexAlgebraData>,
        name: &str,
        params: &BTreeMap<String, String>,
        cap: i64,
        build: impl FnOnce() -> Result<ModuleData>,
    ) -> Result<ModuleData> {
        let path = self.path("module", name, params, cap, &format!("-over-{}-cap{}", alg.name, alg.cap));
        if let Some(file) = Self::read(&path)? {
            log::debug!("loaded {}", path.display());
            return module_from_file(&file, alg);
        }
        let m = build()?;
        Self::write(&path, &module_to_file(&m))?;
        Ok(m)
    }
}
