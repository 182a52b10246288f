//! Output files: diagnostic CSV tables, binary checkpoints with a JSON
//! header, and the sweep manifest.
//!
//! Binary payloads are flat little-endian `f64` arrays. The header lists
//! each named section with its offset and length counted in values.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Result, VmfpError};
use crate::fieldsolve::EmState;
use crate::grid::{DistributionField, PerpGrid, ScalarField, VectorField, VelGrid};
use crate::limit::LimitState;
use crate::params::PlasmaParams;

pub const CHECKPOINT_FORMAT: &str = "vmfp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a CSV table of floats with 17 significant digits.
pub fn write_table(path: &Path, columns: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", columns.join(","))?;
    for row in rows {
        if row.len() != columns.len() {
            return Err(VmfpError::Shape {
                expected: columns.len(),
                got: row.len(),
            });
        }
        let line: Vec<String> = row.into_iter().map(fmt).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_table`]; returns the header and rows.
/// Errors name the offending line.
pub fn read_table(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut lines = r.lines();
    let header: Vec<String> = match lines.next() {
        Some(h) => h?.split(',').map(|s| s.trim().to_string()).collect(),
        None => return Err(VmfpError::Serde(format!("{}: empty file", path.display()))),
    };
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.map_err(|e| VmfpError::Serde(format!("{}: line {lineno}: {e}", path.display())))?;
        if row.len() != header.len() {
            return Err(VmfpError::Serde(format!(
                "{}: line {lineno}: expected {} fields, got {}",
                path.display(),
                header.len(),
                row.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn write_records(path: &Path, records: &[DiagnosticsRecord]) -> Result<()> {
    write_table(path, &DiagnosticsRecord::COLUMNS, records.iter().map(|r| r.values().to_vec()))
}

pub fn read_records(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let (header, rows) = read_table(path)?;
    if header != DiagnosticsRecord::COLUMNS {
        return Err(VmfpError::Serde(format!("{}: unexpected columns {header:?}", path.display())));
    }
    Ok(rows
        .iter()
        .map(|r| DiagnosticsRecord::from_values(r).expect("length checked"))
        .collect())
}

/// Record of the limit model at one sample time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitRecord {
    pub t: f64,
    pub mass: f64,
    pub free_energy: f64,
    pub e_mean1: f64,
    pub e_mean2: f64,
    pub flux_equivalence_residual: f64,
}

impl LimitRecord {
    pub const COLUMNS: [&'static str; 6] = ["t", "mass", "free_energy", "e_mean1", "e_mean2", "flux_equivalence_residual"];

    pub fn values(&self) -> Vec<f64> {
        vec![
            self.t,
            self.mass,
            self.free_energy,
            self.e_mean1,
            self.e_mean2,
            self.flux_equivalence_residual,
        ]
    }
}

pub fn write_limit_records(path: &Path, records: &[LimitRecord]) -> Result<()> {
    write_table(path, &LimitRecord::COLUMNS, records.iter().map(|r| r.values()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Writes the sections back to back and returns their layout.
pub fn write_sections(path: &Path, sections: &[(String, &[f64])]) -> Result<Vec<Section>> {
    let total: usize = sections.iter().map(|(_, d)| d.len()).sum();
    let mut bytes = Vec::with_capacity(total * 8);
    let mut out = Vec::new();
    let mut offset = 0;
    for (name, data) in sections {
        for x in data.iter() {
            bytes.extend_from_slice(&x.to_le_bytes());
        }
        out.push(Section {
            name: name.clone(),
            offset,
            len: data.len(),
        });
        offset += data.len();
    }
    fs::write(path, bytes)?;
    Ok(out)
}

pub struct SectionReader {
    values: Vec<f64>,
    layout: Vec<Section>,
}

impl SectionReader {
    pub fn open(path: &Path, layout: Vec<Section>) -> Result<Self> {
        let bytes = fs::read(path)?;
        if bytes.len() % 8 != 0 {
            return Err(VmfpError::Serde(format!("{}: truncated payload", path.display())));
        }
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        if let Some(s) = layout.iter().find(|s| s.offset + s.len > values.len()) {
            return Err(VmfpError::Serde(format!("section '{}' exceeds payload", s.name)));
        }
        Ok(Self { values, layout })
    }

    pub fn get(&self, name: &str) -> Result<Vec<f64>> {
        let s = self
            .layout
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| VmfpError::Serde(format!("missing section '{name}'")))?;
        Ok(self.values[s.offset..s.offset + s.len].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckpointKind {
    Kinetic,
    Limit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub version: u32,
    pub kind: CheckpointKind,
    pub t: f64,
    pub params: PlasmaParams,
    pub perp: PerpGrid,
    pub vel: Option<VelGrid>,
    pub e_mean: Option<[f64; 2]>,
    pub dissipated: Option<f64>,
    pub collision_energy: Option<f64>,
    /// Index order of the distribution section.
    pub layout: String,
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KineticCheckpoint {
    pub params: PlasmaParams,
    pub f: DistributionField,
    pub em: EmState,
    pub b_ext: ScalarField,
    pub background: ScalarField,
    pub dissipated: f64,
    pub collision_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitCheckpoint {
    pub params: PlasmaParams,
    pub state: LimitState,
    pub b_ext: ScalarField,
    pub background: ScalarField,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoint {
    Kinetic(KineticCheckpoint),
    Limit(LimitCheckpoint),
}

const LAYOUT: &str = "f[((i1*n2+i2)*nv+a)*nv*nv+b*nv+c], x1 outermost, v3 innermost";

fn vec_sections<'a>(prefix: &str, v: &'a VectorField) -> Vec<(String, &'a [f64])> {
    (0..3).map(|k| (format!("{prefix}{}", k + 1), v.c[k].as_slice())).collect()
}

fn read_scalar(r: &SectionReader, name: &str, g: PerpGrid) -> Result<ScalarField> {
    ScalarField::from_vec(g, r.get(name)?)
}

fn read_vector(r: &SectionReader, prefix: &str, g: PerpGrid) -> Result<VectorField> {
    Ok(VectorField::from_components(
        read_scalar(r, &format!("{prefix}1"), g)?,
        read_scalar(r, &format!("{prefix}2"), g)?,
        read_scalar(r, &format!("{prefix}3"), g)?,
    ))
}

/// Writes `checkpoint.bin` and `checkpoint.json` into `dir`.
pub fn write_checkpoint(dir: &Path, cp: &Checkpoint) -> Result<()> {
    fs::create_dir_all(dir)?;
    let bin = dir.join("checkpoint.bin");
    let header = match cp {
        Checkpoint::Kinetic(k) => {
            let mut s: Vec<(String, &[f64])> = vec![("f".into(), k.f.data.as_slice())];
            s.extend(vec_sections("e", &k.em.e));
            s.extend(vec_sections("b", &k.em.b));
            s.push(("b_ext".into(), &k.b_ext.data));
            s.push(("background".into(), &k.background.data));
            CheckpointHeader {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                kind: CheckpointKind::Kinetic,
                t: k.f.t,
                params: k.params,
                perp: k.f.perp,
                vel: Some(k.f.vel),
                e_mean: None,
                dissipated: Some(k.dissipated),
                collision_energy: Some(k.collision_energy),
                layout: LAYOUT.into(),
                sections: write_sections(&bin, &s)?,
            }
        }
        Checkpoint::Limit(l) => {
            let s: Vec<(String, &[f64])> = vec![
                ("n".into(), l.state.n.data.as_slice()),
                ("b_ext".into(), &l.b_ext.data),
                ("background".into(), &l.background.data),
            ];
            CheckpointHeader {
                format: CHECKPOINT_FORMAT.into(),
                version: CHECKPOINT_VERSION,
                kind: CheckpointKind::Limit,
                t: l.state.t,
                params: l.params,
                perp: l.state.n.grid,
                vel: None,
                e_mean: Some(l.state.e_mean),
                dissipated: None,
                collision_energy: None,
                layout: "n[i1*n2+i2]".into(),
                sections: write_sections(&bin, &s)?,
            }
        }
    };
    let json = serde_json::to_string_pretty(&header).map_err(|e| VmfpError::Serde(e.to_string()))?;
    fs::write(dir.join("checkpoint.json"), json)?;
    Ok(())
}

pub fn read_checkpoint(dir: &Path) -> Result<Checkpoint> {
    let json = fs::read_to_string(dir.join("checkpoint.json"))?;
    let h: CheckpointHeader = serde_json::from_str(&json).map_err(|e| VmfpError::Serde(e.to_string()))?;
    if h.format != CHECKPOINT_FORMAT || h.version != CHECKPOINT_VERSION {
        return Err(VmfpError::Serde(format!("unsupported checkpoint {} v{}", h.format, h.version)));
    }
    let r = SectionReader::open(&dir.join("checkpoint.bin"), h.sections.clone())?;
    let g = h.perp;
    match h.kind {
        CheckpointKind::Kinetic => {
            let vel = h.vel.ok_or_else(|| VmfpError::Serde("kinetic checkpoint without velocity grid".into()))?;
            let mut f = DistributionField::from_vec(g, vel, r.get("f")?)?;
            f.t = h.t;
            Ok(Checkpoint::Kinetic(KineticCheckpoint {
                params: h.params,
                f,
                em: EmState {
                    e: read_vector(&r, "e", g)?,
                    b: read_vector(&r, "b", g)?,
                },
                b_ext: read_scalar(&r, "b_ext", g)?,
                background: read_scalar(&r, "background", g)?,
                dissipated: h.dissipated.unwrap_or(0.0),
                collision_energy: h.collision_energy.unwrap_or(0.0),
            }))
        }
        CheckpointKind::Limit => Ok(Checkpoint::Limit(LimitCheckpoint {
            params: h.params,
            state: LimitState {
                n: read_scalar(&r, "n", g)?,
                e_mean: h.e_mean.unwrap_or([0.0, 0.0]),
                t: h.t,
            },
            b_ext: read_scalar(&r, "b_ext", g)?,
            background: read_scalar(&r, "background", g)?,
        })),
    }
}

/// Summary of one kinetic run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub sup_modulated_energy: f64,
    pub sup_kinetic_relative_entropy: f64,
    /// `∫ D / (eps tau) dt` over the run.
    pub dissipated: f64,
    pub relative_mass_drift: f64,
    pub kinetic_energy_margin: f64,
    pub max_momentum_residual: Option<f64>,
    pub records: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepManifest {
    pub complete: bool,
    pub t_final: f64,
    pub dt: f64,
    pub limit_records: String,
    pub limit_trajectory: String,
    pub entries: Vec<SweepEntry>,
    /// Least-squares slope of `ln sup ME` against `ln eps`; absent with
    /// fewer than two entries.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    pub error: Option<String>,
}

impl SweepManifest {
    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).map_err(|e| VmfpError::Serde(e.to_string()))?;
        fs::write(path, s)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path)?;
        serde_json::from_str(&s).map_err(|e| VmfpError::Serde(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_roundtrip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        let rows = vec![vec![0.1, 1.0 / 3.0, -2.5e-300], vec![f64::MAX, 1e-17, std::f64::consts::PI]];
        write_table(&p, &["a", "b", "c"], rows.clone()).unwrap();
        let (h, back) = read_table(&p).unwrap();
        assert_eq!(h, vec!["a", "b", "c"]);
        assert_eq!(back, rows);
    }

    #[test]
    fn malformed_row_names_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        fs::write(&p, "a,b\n1,2\n3,x\n").unwrap();
        let e = read_table(&p).unwrap_err().to_string();
        assert!(e.contains("line 3"), "{e}");
    }
}
