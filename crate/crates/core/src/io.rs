//! CSV and JSON files exchanged between pipeline stages.
//!
//! | File | Content |
//! |------|---------|
//! | `points.csv`, `latent.csv` | one row per observation, named columns |
//! | `generator.json` | generator descriptor of the cloud |
//! | `eigenvalues.csv` | `index,lambda`, index 1 the trivial pair |
//! | `eigenvectors.csv` | columns `phi_2..phi_{N+1}` |
//! | `triplets.csv` | `i,j,k,score,eig_gap` after a `#` comment header |
//! | `assignment.json` | factor groups, products, unassigned, cut value |
//! | `embedding_factor{0,1}.csv` | per-factor eigenmap plus latent columns |
//! | `criterion_k{k}.csv` | `i,j,eig_gap,score` for every pair below `k` |
//!
//! Floats are written in shortest round-trip form, so reading a file back
//! reproduces the values bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorize::{CriterionPoint, Triplet, TripletList};
use crate::separate::{CutMethod, FactorAssignment};
use crate::spectral::SpectralDecomposition;
use crate::synthgen::{Descriptor, PointCloud};

pub const POINTS: &str = "points.csv";
pub const LATENT: &str = "latent.csv";
pub const GENERATOR: &str = "generator.json";
pub const EIGENVALUES: &str = "eigenvalues.csv";
pub const EIGENVECTORS: &str = "eigenvectors.csv";
pub const TRIPLETS: &str = "triplets.csv";
pub const ASSIGNMENT: &str = "assignment.json";
pub const REPORT: &str = "report.json";
pub const CONFIG: &str = "config.toml";
pub const FAILED: &str = "FAILED";

const TRIPLET_HEADER: &str = "# eigenvector indices are 1-based; index 1 is the trivial constant eigenvector";

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format { path: path.display().to_string(), reason: reason.into() }
}

fn write_table(path: &Path, header: &[String], rows: usize, cell: impl Fn(usize, usize) -> f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(header)?;
    let mut rec = Vec::with_capacity(header.len());
    for r in 0..rows {
        rec.clear();
        rec.extend((0..header.len()).map(|c| cell(r, c).to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a headed numeric CSV into (column names, `rows x cols` matrix).
pub fn read_table(path: &Path) -> Result<(Vec<String>, DMatrix<f64>)> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() != header.len() {
            return Err(format_err(path, format!("row {} has {} fields, expected {}", rows + 1, rec.len(), header.len())));
        }
        for (c, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| format_err(path, format!("column `{}` row {}: `{field}` is not a number", header[c], rows + 1)))?;
            data.push(v);
        }
        rows += 1;
    }
    Ok((header.clone(), DMatrix::from_row_slice(rows, header.len(), &data)))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_reader(BufReader::new(File::open(path)?))?)
}

/// `points.csv` (`x1..xD`), `latent.csv` when present, and `generator.json`.
pub fn write_cloud(dir: &Path, cloud: &PointCloud) -> Result<()> {
    let header: Vec<String> = (1..=cloud.dim()).map(|c| format!("x{c}")).collect();
    write_table(&dir.join(POINTS), &header, cloud.n(), |r, c| cloud.points()[(r, c)])?;
    if let Some(latent) = cloud.latent() {
        write_table(&dir.join(LATENT), cloud.latent_names(), cloud.n(), |r, c| latent[(r, c)])?;
    }
    write_json(&dir.join(GENERATOR), cloud.descriptor())
}

/// Inverse of [`write_cloud`]; latent and descriptor are optional.
pub fn read_cloud(dir: &Path) -> Result<PointCloud> {
    let (_, points) = read_table(&dir.join(POINTS))?;
    let latent_path = dir.join(LATENT);
    let latent = if latent_path.exists() { Some(read_table(&latent_path)?) } else { None };
    let gen_path = dir.join(GENERATOR);
    let descriptor = if gen_path.exists() { read_json(&gen_path)? } else { Descriptor::external() };
    PointCloud::new(points, latent.map(|(names, m)| (m, names)), descriptor)
}

pub fn write_decomposition(dir: &Path, dec: &SpectralDecomposition) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(dir.join(EIGENVALUES))?));
    w.write_record(["index", "lambda"])?;
    for (i, l) in dec.eigenvalues().iter().enumerate() {
        w.write_record([(i + 1).to_string(), l.to_string()])?;
    }
    w.flush()?;
    drop(w);
    let header: Vec<String> = (2..=dec.n_eigs() + 1).map(|k| format!("phi_{k}")).collect();
    write_table(&dir.join(EIGENVECTORS), &header, dec.n_points(), |r, c| dec.eigenvectors()[(r, c + 1)])
}

/// Reads back a decomposition; the trivial eigenvector is not stored and is
/// rebuilt as the unit constant vector.
pub fn read_decomposition(dir: &Path, epsilon: f64) -> Result<SpectralDecomposition> {
    let vals_path = dir.join(EIGENVALUES);
    let (_, vals) = read_table(&vals_path)?;
    if vals.ncols() != 2 {
        return Err(format_err(&vals_path, "expected columns index,lambda"));
    }
    let eigenvalues: Vec<f64> = vals.column(1).iter().copied().collect();
    let vec_path = dir.join(EIGENVECTORS);
    let (header, vecs) = read_table(&vec_path)?;
    for (c, name) in header.iter().enumerate() {
        if *name != format!("phi_{}", c + 2) {
            return Err(format_err(&vec_path, format!("column {} is `{name}`, expected phi_{}", c + 1, c + 2)));
        }
    }
    if eigenvalues.len() != vecs.ncols() + 1 {
        return Err(format_err(
            &vec_path,
            format!("{} eigenvectors for {} eigenvalues", vecs.ncols(), eigenvalues.len()),
        ));
    }
    let n = vecs.nrows();
    let c = 1.0 / (n as f64).sqrt();
    let full = DMatrix::from_fn(n, vecs.ncols() + 1, |r, col| if col == 0 { c } else { vecs[(r, col - 1)] });
    SpectralDecomposition::from_parts(eigenvalues, full, epsilon)
}

pub fn write_triplets(path: &Path, list: &TripletList) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{TRIPLET_HEADER}")?;
    writeln!(out, "# n_eigs={} visited_pairs={}", list.n_eigs, list.visited_pairs)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "j", "k", "score", "eig_gap"])?;
    for t in &list.triplets {
        w.write_record([t.i.to_string(), t.j.to_string(), t.k.to_string(), t.score.to_string(), t.eig_gap.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_triplets(path: &Path) -> Result<TripletList> {
    let mut n_eigs = None;
    let mut visited = 0;
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        if !line.starts_with('#') {
            break;
        }
        for tok in line.trim_start_matches('#').split_whitespace() {
            if let Some(v) = tok.strip_prefix("n_eigs=") {
                n_eigs = v.parse().ok();
            } else if let Some(v) = tok.strip_prefix("visited_pairs=") {
                visited = v.parse().unwrap_or(0);
            }
        }
    }
    let (header, m) = read_table(path)?;
    if header != ["i", "j", "k", "score", "eig_gap"] {
        return Err(format_err(path, format!("unexpected columns {header:?}")));
    }
    let triplets: Vec<Triplet> = m
        .row_iter()
        .map(|r| Triplet { i: r[0] as usize, j: r[1] as usize, k: r[2] as usize, score: r[3], eig_gap: r[4] })
        .collect();
    let n_eigs = n_eigs.unwrap_or_else(|| triplets.iter().map(|t| t.k).max().unwrap_or(1) - 1);
    Ok(TripletList { triplets, n_eigs, visited_pairs: visited })
}

#[derive(Serialize, Deserialize)]
struct AssignmentFile {
    factors: [Vec<usize>; 2],
    products: Vec<usize>,
    unassigned: Vec<usize>,
    cut_value: f64,
    method: CutMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sdp_value: Option<f64>,
    seed: Option<u64>,
}

impl From<&FactorAssignment> for AssignmentFile {
    fn from(a: &FactorAssignment) -> Self {
        Self {
            factors: [a.group_a.clone(), a.group_b.clone()],
            products: a.products.clone(),
            unassigned: a.unassigned.clone(),
            cut_value: a.cut_value,
            method: a.method,
            sdp_value: a.sdp_value,
            seed: a.seed,
        }
    }
}

/// JSON value of an assignment in the `assignment.json` layout.
pub fn assignment_json(a: &FactorAssignment) -> serde_json::Value {
    serde_json::to_value(AssignmentFile::from(a)).expect("assignment serializes")
}

pub fn write_assignment(path: &Path, a: &FactorAssignment) -> Result<()> {
    write_json(path, &AssignmentFile::from(a))
}

pub fn read_assignment(path: &Path) -> Result<FactorAssignment> {
    let f: AssignmentFile = read_json(path)?;
    let [group_a, group_b] = f.factors;
    Ok(FactorAssignment {
        group_a,
        group_b,
        products: f.products,
        unassigned: f.unassigned,
        cut_value: f.cut_value,
        method: f.method,
        sdp_value: f.sdp_value,
        seed: f.seed,
    })
}

/// Embedding columns named after their eigenvectors, then the latent
/// columns when available.
pub fn write_embedding(
    path: &Path,
    embedding: &DMatrix<f64>,
    members: &[usize],
    latent: Option<(&DMatrix<f64>, &[String])>,
) -> Result<()> {
    let mut header: Vec<String> = members.iter().map(|k| format!("phi_{k}")).collect();
    let d = header.len();
    if let Some((_, names)) = latent {
        header.extend(names.iter().cloned());
    }
    write_table(path, &header, embedding.nrows(), |r, c| {
        if c < d {
            embedding[(r, c)]
        } else {
            latent.expect("latent columns").0[(r, c - d)]
        }
    })
}

pub fn write_criterion(path: &Path, points: &[CriterionPoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(BufWriter::new(File::create(path)?));
    w.write_record(["i", "j", "eig_gap", "score"])?;
    for p in points {
        w.write_record([p.i.to_string(), p.j.to_string(), p.eig_gap.to_string(), p.score.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_report(path: &Path, report: &serde_json::Value) -> Result<()> {
    write_json(path, report)
}

pub fn read_json_value(path: &Path) -> Result<serde_json::Value> {
    read_json(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let list = TripletList {
            triplets: vec![Triplet { i: 2, j: 3, k: 5, score: 0.9712345678901234, eig_gap: 1.5e-7 }],
            n_eigs: 9,
            visited_pairs: 17,
        };
        let p = dir.path().join(TRIPLETS);
        write_triplets(&p, &list).unwrap();
        assert_eq!(read_triplets(&p).unwrap(), list);
    }

    #[test]
    fn bad_number_names_column() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        std::fs::write(&p, "a,b\n1,2\n3,oops\n").unwrap();
        let err = read_table(&p).unwrap_err().to_string();
        assert!(err.contains("`b`"), "{err}");
    }
}
