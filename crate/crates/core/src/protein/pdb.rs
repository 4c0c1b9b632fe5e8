//! Fixed-column PDB `ATOM`/`HETATM` reading and writing.
//!
//! Only backbone N, CA and C atoms are kept. Residues are grouped by
//! consecutive (chain, residue number + insertion code, residue name) keys in
//! file order; only the first model of a multi-model file is read.

use log::warn;

use super::residue::{Residue, ResidueSet, ResidueType};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat3, Vec3};

#[derive(Default)]
struct Pending {
    key: (char, String, String),
    n: Option<Vec3>,
    ca: Option<Vec3>,
    c: Option<Vec3>,
}

impl Pending {
    fn finish(self, out: &mut Vec<Residue>, skipped: &mut usize) {
        let (chain, seq, name) = self.key;
        match (self.n, self.ca, self.c) {
            (Some(n), Some(ca), Some(c)) => out.push(Residue {
                kind: ResidueType::from_name(&name),
                name,
                chain,
                seq,
                ca,
                n,
                c,
            }),
            _ => *skipped += 1,
        }
    }
}

fn field(line: &str, lo: usize, hi: usize) -> &str {
    let hi = hi.min(line.len());
    if lo >= hi {
        ""
    } else {
        &line[lo..hi]
    }
}

fn coord(line: &str, lineno: usize, lo: usize, axis: char) -> Result<f64> {
    let raw = field(line, lo, lo + 8).trim();
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::PdbParse {
            line: lineno,
            msg: format!("malformed {axis} coordinate {raw:?}"),
        })
}

/// Parses backbone residues from PDB text.
///
/// `chains`, when given, restricts parsing to those chain identifiers; all
/// selected chains are merged into one residue set.
pub fn parse_pdb(text: &str, chains: Option<&[char]>) -> Result<ResidueSet> {
    let mut residues = Vec::new();
    let mut skipped = 0usize;
    let mut current: Option<Pending> = None;

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let record = field(line, 0, 6).trim_end();
        if record == "ENDMDL" {
            break;
        }
        if record != "ATOM" && record != "HETATM" {
            continue;
        }
        if !line.is_ascii() {
            return Err(Error::PdbParse {
                line: lineno,
                msg: "non-ASCII atom record".into(),
            });
        }
        if line.len() < 54 {
            return Err(Error::PdbParse {
                line: lineno,
                msg: format!("atom record has {} columns, need 54", line.len()),
            });
        }
        let chain = line.as_bytes()[21] as char;
        if let Some(sel) = chains {
            if !sel.contains(&chain) {
                continue;
            }
        }
        let atom = field(line, 12, 16).trim();
        let res_name = field(line, 17, 20).trim().to_string();
        let seq = field(line, 22, 27).to_string();
        let key = (chain, seq, res_name);

        let x = coord(line, lineno, 30, 'x')?;
        let y = coord(line, lineno, 38, 'y')?;
        let z = coord(line, lineno, 46, 'z')?;

        if current.as_ref().map_or(true, |p| p.key != key) {
            if let Some(done) = current.take() {
                done.finish(&mut residues, &mut skipped);
            }
            current = Some(Pending {
                key,
                ..Default::default()
            });
        }
        let p = current.as_mut().expect("pending residue");
        // First occurrence wins, which also resolves alternate locations.
        let slot = match atom {
            "N" => &mut p.n,
            "CA" => &mut p.ca,
            "C" => &mut p.c,
            _ => continue,
        };
        if slot.is_none() {
            *slot = Some([x, y, z]);
        }
    }
    if let Some(done) = current.take() {
        done.finish(&mut residues, &mut skipped);
    }
    if skipped > 0 {
        warn!("skipped {skipped} residue(s) missing N, CA or C");
    }
    if residues.is_empty() {
        return Err(Error::NoResidues { skipped });
    }
    Ok(ResidueSet { residues, skipped })
}

pub fn read_pdb(path: &std::path::Path, chains: Option<&[char]>) -> Result<ResidueSet> {
    parse_pdb(&std::fs::read_to_string(path)?, chains)
}

fn atom_record(serial: usize, name: &str, r: &Residue, p: &Vec3, element: &str) -> String {
    format!(
        "ATOM  {:>5} {} {:>3} {}{:<5}   {:>8.3}{:>8.3}{:>8.3}{:>6.2}{:>6.2}          {:>2}",
        serial % 100_000,
        name,
        r.name,
        r.chain,
        r.seq,
        p[0],
        p[1],
        p[2],
        1.0,
        0.0,
        element
    )
}

/// CA-only PDB text; `coords[i]` replaces the CA position of residue `i`.
pub fn write_ca_pdb(rs: &ResidueSet, coords: &[Vec3]) -> String {
    let mut out = String::new();
    for (i, (r, p)) in rs.residues.iter().zip(coords).enumerate() {
        out.push_str(&atom_record(i + 1, " CA ", r, p, "C"));
        out.push('\n');
    }
    out.push_str("END\n");
    out
}

/// Backbone (N, CA, C) PDB text for a residue set.
pub fn write_backbone_pdb(rs: &ResidueSet) -> String {
    let mut out = String::new();
    let mut serial = 1;
    for r in &rs.residues {
        for (name, p, el) in [(" N  ", &r.n, "N"), (" CA ", &r.ca, "C"), (" C  ", &r.c, "C")] {
            out.push_str(&atom_record(serial, name, r, p, el));
            out.push('\n');
            serial += 1;
        }
    }
    out.push_str("END\n");
    out
}

/// Rewrites the coordinates of every `ATOM`/`HETATM` record with
/// `x ↦ R x + t`, leaving all other columns untouched.
pub fn transform_pdb_text(text: &str, rot: &Mat3, trans: &Vec3) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for (idx, line) in text.lines().enumerate() {
        let record = field(line, 0, 6).trim_end();
        if (record == "ATOM" || record == "HETATM") && line.is_ascii() && line.len() >= 54 {
            let p = [
                coord(line, idx + 1, 30, 'x')?,
                coord(line, idx + 1, 38, 'y')?,
                coord(line, idx + 1, 46, 'z')?,
            ];
            let q = linalg::add(&linalg::mat_vec(rot, &p), trans);
            out.push_str(&line[..30]);
            out.push_str(&format!("{:>8.3}{:>8.3}{:>8.3}", q[0], q[1], q[2]));
            out.push_str(&line[54..]);
        } else {
            out.push_str(line);
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atom(serial: usize, name: &str, res: &str, chain: char, seq: i32, p: [f64; 3]) -> String {
        format!(
            "ATOM  {serial:>5} {name:<4} {res:>3} {chain}{seq:>4}    {:>8.3}{:>8.3}{:>8.3}  1.00  0.00           C",
            p[0], p[1], p[2]
        )
    }

    #[test]
    fn single_alanine() {
        let text = [
            atom(1, " N", "ALA", 'A', 1, [1.0, 0.0, 0.0]),
            atom(2, " CA", "ALA", 'A', 1, [0.0, 0.0, 0.0]),
            atom(3, " C", "ALA", 'A', 1, [0.0, 1.0, 0.0]),
            atom(4, " CB", "ALA", 'A', 1, [0.0, 0.0, 1.0]),
        ]
        .join("\n");
        let rs = parse_pdb(&text, None).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.residues[0].kind.name(), "ALA");
        assert_eq!(rs.residues[0].n, [1.0, 0.0, 0.0]);
        assert_eq!(rs.skipped, 0);
    }

    #[test]
    fn missing_nitrogen_is_error_with_count() {
        let text = [
            atom(2, " CA", "GLY", 'A', 1, [0.0, 0.0, 0.0]),
            atom(3, " C", "GLY", 'A', 1, [0.0, 1.0, 0.0]),
        ]
        .join("\n");
        match parse_pdb(&text, None) {
            Err(Error::NoResidues { skipped }) => assert_eq!(skipped, 1),
            other => panic!("unexpected {other:?}"),
        }
        let msg = parse_pdb(&text, None).unwrap_err().to_string();
        assert!(msg.contains("zero valid residues"), "{msg}");
    }

    #[test]
    fn malformed_coordinate_reports_line() {
        let mut bad = atom(2, " CA", "GLY", 'A', 1, [0.0, 0.0, 0.0]);
        bad.replace_range(30..38, "   abc  ");
        let text = format!("HEADER    TEST\n{bad}\n");
        match parse_pdb(&text, None) {
            Err(Error::PdbParse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn chain_filter_and_unknown_names() {
        let mut lines = Vec::new();
        for (i, (chain, res)) in [('A', "MSE"), ('B', "LYS")].iter().enumerate() {
            let base = i as f64 * 5.0;
            lines.push(atom(1, " N", res, *chain, 1, [base + 1.0, 0.0, 0.0]));
            lines.push(atom(2, " CA", res, *chain, 1, [base, 0.0, 0.0]));
            lines.push(atom(3, " C", res, *chain, 1, [base, 1.0, 0.0]));
        }
        let text = lines.join("\n");
        let all = parse_pdb(&text, None).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all.residues[0].kind, ResidueType::UNK);
        let b = parse_pdb(&text, Some(&['B'])).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.residues[0].kind.name(), "LYS");
    }

    #[test]
    fn ca_writer_round_trips_through_parser_columns() {
        let r = Residue {
            name: "TRP".into(),
            kind: ResidueType::from_name("TRP"),
            chain: 'C',
            seq: "  42A".into(),
            ca: [1.234, -5.678, 9.0],
            n: [0.0; 3],
            c: [0.0; 3],
        };
        let rs = ResidueSet::new(vec![r]);
        let text = write_ca_pdb(&rs, &[[12.3456, -0.0004, 100.0]]);
        let line = text.lines().next().unwrap();
        assert_eq!(&line[12..16], " CA ");
        assert_eq!(&line[17..20], "TRP");
        assert_eq!(&line[21..22], "C");
        assert_eq!(&line[22..27], "  42A");
        assert_eq!(line[30..38].trim().parse::<f64>().unwrap(), 12.346);
        assert_eq!(line[46..54].trim().parse::<f64>().unwrap(), 100.0);
    }

    #[test]
    fn backbone_writer_parses_back() {
        let rs = ResidueSet::new(vec![Residue {
            name: "SER".into(),
            kind: ResidueType::from_name("SER"),
            chain: 'A',
            seq: "   7 ".into(),
            ca: [1.0, 2.0, 3.0],
            n: [2.0, 2.0, 3.0],
            c: [1.0, 3.0, 3.0],
        }]);
        let back = parse_pdb(&write_backbone_pdb(&rs), None).unwrap();
        assert_eq!(back, rs);
    }
}
