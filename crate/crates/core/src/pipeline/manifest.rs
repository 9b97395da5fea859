use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use crate::{Error, Result};

pub const MESH_COLUMN: &str = "mesh_path";
pub const WEIGHT_COLUMN: &str = "carcass_weight";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    /// Path as written in the manifest; doubles as the sample id.
    pub mesh_path: String,
    pub carcass_weight: f64,
    pub targets: BTreeMap<String, f64>,
}

/// CSV dataset description: `mesh_path,carcass_weight,<target>...`.
/// Relative mesh paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    root: PathBuf,
    target_names: Vec<String>,
    rows: Vec<ManifestRow>,
}

impl DatasetManifest {
    pub fn new(root: impl Into<PathBuf>, target_names: Vec<String>, rows: Vec<ManifestRow>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, row) in rows.iter().enumerate() {
            let line = i + 2;
            if !seen.insert(&row.mesh_path) {
                return Err(Error::Structural(format!("row {line}: duplicate mesh path {}", row.mesh_path)));
            }
            if !(row.carcass_weight > 0.0 && row.carcass_weight.is_finite()) {
                return Err(Error::Structural(format!(
                    "row {line} ({}): carcass weight must be positive, got {}",
                    row.mesh_path, row.carcass_weight
                )));
            }
            if row.targets.keys().ne(target_names.iter().collect::<std::collections::BTreeSet<_>>()) {
                return Err(Error::Structural(format!("row {line} ({}): target columns differ", row.mesh_path)));
            }
        }
        Ok(Self {
            root: root.into(),
            target_names,
            rows,
        })
    }

    pub fn from_reader<R: std::io::Read>(reader: R, root: impl Into<PathBuf>) -> Result<Self> {
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Structural(format!("manifest has no {name} column")))
        };
        let (mesh_col, weight_col) = (find(MESH_COLUMN)?, find(WEIGHT_COLUMN)?);
        let target_cols: Vec<usize> = (0..headers.len()).filter(|&c| c != mesh_col && c != weight_col).collect();
        let target_names: Vec<String> = target_cols.iter().map(|&c| headers[c].clone()).collect();
        let mut rows = Vec::new();
        for (i, record) in csv.records().enumerate() {
            let record = record?;
            let line = i + 2;
            let number = |c: usize| -> Result<f64> {
                let text = record.get(c).unwrap_or("");
                text.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("column {} is not a number: {text:?}", headers[c]),
                })
            };
            let mesh_path = record.get(mesh_col).unwrap_or("").to_string();
            if mesh_path.is_empty() {
                return Err(Error::Parse {
                    line,
                    message: "empty mesh path".into(),
                });
            }
            let mut targets = BTreeMap::new();
            for &c in &target_cols {
                targets.insert(headers[c].clone(), number(c)?);
            }
            rows.push(ManifestRow {
                mesh_path,
                carcass_weight: number(weight_col)?,
                targets,
            });
        }
        Self::new(root, target_names, rows)
    }

    /// Reads the manifest and checks that every referenced mesh exists.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = Self::from_reader(file, root)?;
        for (i, row) in manifest.rows.iter().enumerate() {
            if !manifest.resolve(row).is_file() {
                return Err(Error::Structural(format!(
                    "row {} ({}): mesh file not found",
                    i + 2,
                    row.mesh_path
                )));
            }
        }
        Ok(manifest)
    }

    pub fn write<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        let mut header = vec![MESH_COLUMN.to_string(), WEIGHT_COLUMN.to_string()];
        header.extend(self.target_names.iter().cloned());
        csv.write_record(&header)?;
        for row in &self.rows {
            let mut record = vec![row.mesh_path.clone(), row.carcass_weight.to_string()];
            record.extend(self.target_names.iter().map(|t| row.targets[t].to_string()));
            csv.write_record(&record)?;
        }
        csv.flush().map_err(|e| Error::io("manifest", e))?;
        Ok(())
    }

    pub fn rows(&self) -> &[ManifestRow] {
        &self.rows
    }

    pub fn target_names(&self) -> &[String] {
        &self.target_names
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        self.root.join(&row.mesh_path)
    }

    /// Values of `target` in row order.
    pub fn target(&self, target: &str) -> Result<Vec<f64>> {
        if !self.target_names.iter().any(|t| t == target) {
            return Err(Error::Argument(format!(
                "unknown target column {target:?}; available: {}",
                self.target_names.join(", ")
            )));
        }
        Ok(self.rows.iter().map(|r| r.targets[target]).collect())
    }
}
