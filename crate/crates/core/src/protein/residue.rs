use serde::{Deserialize, Serialize};

use crate::linalg::{self, Mat3, Vec3};

/// Three-letter codes of the 20 standard amino acids; index 20 is `UNK`.
pub const RESIDUE_NAMES: [&str; 21] = [
    "ALA", "ARG", "ASN", "ASP", "CYS", "GLN", "GLU", "GLY", "HIS", "ILE", "LEU", "LYS", "MET",
    "PHE", "PRO", "SER", "THR", "TRP", "TYR", "VAL", "UNK",
];

pub const NUM_RESIDUE_TYPES: usize = RESIDUE_NAMES.len();

/// Residue type index into [`RESIDUE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResidueType(pub u8);

impl ResidueType {
    pub const UNK: ResidueType = ResidueType(20);

    /// Non-standard names map to `UNK`.
    pub fn from_name(name: &str) -> Self {
        RESIDUE_NAMES[..20]
            .iter()
            .position(|&n| n == name)
            .map_or(Self::UNK, |i| ResidueType(i as u8))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn name(self) -> &'static str {
        RESIDUE_NAMES[self.index()]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residue {
    /// Residue name as written in the file.
    pub name: String,
    pub kind: ResidueType,
    pub chain: char,
    /// Residue number plus insertion code, kept verbatim (PDB columns 23–27).
    pub seq: String,
    pub ca: Vec3,
    pub n: Vec3,
    pub c: Vec3,
}

impl Residue {
    pub fn label(&self) -> String {
        format!("{}:{}{}", self.chain, self.name, self.seq.trim())
    }

    fn map_atoms(&self, f: impl Fn(&Vec3) -> Vec3) -> Self {
        Self {
            ca: f(&self.ca),
            n: f(&self.n),
            c: f(&self.c),
            ..self.clone()
        }
    }
}

/// Residues of one protein (all selected chains merged), in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResidueSet {
    pub residues: Vec<Residue>,
    /// Residues dropped because a backbone atom was missing.
    pub skipped: usize,
}

impl ResidueSet {
    pub fn new(residues: Vec<Residue>) -> Self {
        Self {
            residues,
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.residues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.residues.is_empty()
    }

    pub fn ca_coords(&self) -> Vec<Vec3> {
        self.residues.iter().map(|r| r.ca).collect()
    }

    pub fn types(&self) -> Vec<ResidueType> {
        self.residues.iter().map(|r| r.kind).collect()
    }

    /// Applies `x ↦ R x + t` to every backbone atom.
    pub fn transformed(&self, rot: &Mat3, trans: &Vec3) -> Self {
        Self {
            residues: self
                .residues
                .iter()
                .map(|r| r.map_atoms(|x| linalg::add(&linalg::mat_vec(rot, x), trans)))
                .collect(),
            skipped: self.skipped,
        }
    }

    pub fn translated(&self, offset: &Vec3) -> Self {
        self.transformed(&linalg::IDENTITY, offset)
    }

    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            residues: order.iter().map(|&i| self.residues[i].clone()).collect(),
            skipped: self.skipped,
        }
    }
}
