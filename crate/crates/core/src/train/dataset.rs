//! On-disk docking datasets.
//!
//! ```text
//! <root>/splits.json                {"train": [...], "val": [...], "test": [...]}
//! <root>/pairs/<id>/ligand.pdb      unbound ligand
//! <root>/pairs/<id>/receptor.pdb    receptor in the complex frame
//! <root>/pairs/<id>/complex.json    transform taking ligand.pdb into the complex
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::protein::{parse_pdb, ResidueSet};
use crate::rigid::RigidTransform;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    #[serde(default)]
    pub train: Vec<String>,
    #[serde(default)]
    pub val: Vec<String>,
    #[serde(default)]
    pub test: Vec<String>,
}

impl Splits {
    pub fn get(&self, name: &str) -> Result<&[String]> {
        match name {
            "train" => Ok(&self.train),
            "val" => Ok(&self.val),
            "test" => Ok(&self.test),
            other => Err(Error::Dataset(format!("unknown split {other:?}"))),
        }
    }

    fn all(&self) -> impl Iterator<Item = &String> {
        self.train.iter().chain(&self.val).chain(&self.test)
    }
}

/// One docking example as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PairData {
    pub id: String,
    pub ligand: ResidueSet,
    pub receptor: ResidueSet,
    /// Maps ligand coordinates into the complex frame.
    pub truth: RigidTransform,
}

impl PairData {
    pub fn ligand_bound(&self) -> ResidueSet {
        self.ligand.transformed(&self.truth.r, &self.truth.t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub root: PathBuf,
    pub pairs: Vec<PairData>,
    pub splits: Splits,
}

pub fn complex_json(id: &str, truth: &RigidTransform) -> serde_json::Value {
    let mut v = truth.to_json();
    v["pair_id"] = serde_json::Value::String(id.to_string());
    v
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Dataset(format!("{}: {e}", path.display())))
}

pub fn load_pair(root: &Path, id: &str) -> Result<PairData> {
    let dir = root.join("pairs").join(id);
    let parse = |name: &str| {
        let path = dir.join(name);
        parse_pdb(&read(&path)?, None).map_err(|e| match e {
            Error::PdbParse { line, msg } => Error::PdbParse {
                line,
                msg: format!("{}: {msg}", path.display()),
            },
            other => other,
        })
    };
    let truth_json: serde_json::Value = serde_json::from_str(&read(&dir.join("complex.json"))?)?;
    Ok(PairData {
        id: id.to_string(),
        ligand: parse("ligand.pdb")?,
        receptor: parse("receptor.pdb")?,
        truth: RigidTransform::from_json(&truth_json)?,
    })
}

impl Dataset {
    /// Loads every pair named in `splits.json`. Without a splits file, all
    /// pair directories (sorted by name) form the test split.
    pub fn load(root: &Path) -> Result<Self> {
        let splits_path = root.join("splits.json");
        let splits = if splits_path.exists() {
            serde_json::from_str(&read(&splits_path)?)?
        } else {
            let mut ids = Vec::new();
            let pairs_dir = root.join("pairs");
            let entries = std::fs::read_dir(&pairs_dir)
                .map_err(|e| Error::Dataset(format!("{}: {e}", pairs_dir.display())))?;
            for entry in entries {
                let entry = entry?;
                if entry.file_type()?.is_dir() {
                    ids.push(entry.file_name().to_string_lossy().into_owned());
                }
            }
            ids.sort();
            Splits {
                test: ids,
                ..Default::default()
            }
        };
        let pairs = splits
            .all()
            .map(|id| load_pair(root, id))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            root: root.to_path_buf(),
            pairs,
            splits,
        })
    }

    pub fn pair(&self, id: &str) -> Result<&PairData> {
        self.pairs
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::Dataset(format!("unknown pair {id:?}")))
    }

    pub fn split(&self, name: &str) -> Result<Vec<&PairData>> {
        self.splits.get(name)?.iter().map(|id| self.pair(id)).collect()
    }
}

/// Writes one pair's files, each atomically.
pub fn write_pair(
    root: &Path,
    id: &str,
    ligand_pdb: &str,
    receptor_pdb: &str,
    truth: &RigidTransform,
) -> Result<()> {
    let dir = root.join("pairs").join(id);
    std::fs::create_dir_all(&dir)?;
    write_atomic(&dir.join("ligand.pdb"), ligand_pdb.as_bytes())?;
    write_atomic(&dir.join("receptor.pdb"), receptor_pdb.as_bytes())?;
    let json = serde_json::to_string_pretty(&complex_json(id, truth))?;
    write_atomic(&dir.join("complex.json"), format!("{json}\n").as_bytes())
}

pub fn write_splits(root: &Path, splits: &Splits) -> Result<()> {
    std::fs::create_dir_all(root)?;
    let json = serde_json::to_string_pretty(splits)?;
    write_atomic(&root.join("splits.json"), format!("{json}\n").as_bytes())
}
