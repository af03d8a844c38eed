//! Fixed-format artifact I/O.
//!
//! All numeric CSV output uses 17-significant-digit decimals, which
//! round-trip every f64 exactly; iteration orders are fixed (row-major by
//! latitude then longitude).  The same inputs therefore always produce
//! byte-identical files, and content hashes of run artifacts are stable.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read as _, Write as _};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::body::SupportFunction;
use crate::error::{Error, Result};
use crate::flow::FlowSample;
use crate::grid::{make_grid, ScalarField};
use crate::symmetry::{PolytopeSpec, SymmetryGroup};

/// 17-significant-digit decimal; parses back to the identical f64.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn bad(path: &Path, what: impl Into<String>) -> Error {
    Error::Format {
        path: path.display().to_string(),
        what: what.into(),
    }
}

fn parse_float(path: &Path, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(path, format!("not a number: {s:?}")))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = fs::File::open(path)?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push(line);
        }
    }
    if lines.is_empty() {
        return Err(bad(path, "empty file"));
    }
    Ok(lines)
}

// ---------------------------------------------------------------------------
// Field CSV
// ---------------------------------------------------------------------------

/// Write a node field: header `theta,value` (n = 1) or `theta,phi,value`
/// (n = 2), one row per node in row-major (latitude, longitude) order.
pub fn write_field_csv(path: &Path, f: &ScalarField) -> Result<()> {
    let g = &f.grid;
    let mut w = BufWriter::new(fs::File::create(path)?);
    if g.n == 1 {
        writeln!(w, "theta,value")?;
        for (j, v) in f.v.iter().enumerate() {
            writeln!(w, "{},{}", format_float(g.thetas[j]), format_float(*v))?;
        }
    } else {
        writeln!(w, "theta,phi,value")?;
        for j in 0..g.ntheta {
            for l in 0..g.nphi {
                writeln!(
                    w,
                    "{},{},{}",
                    format_float(g.thetas[j]),
                    format_float(g.phis[l]),
                    format_float(f.v[g.index(j, l)])
                )?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Read a field CSV back onto the grid it was written from.  The sphere
/// dimension comes from the header and the resolution from the row
/// structure; node coordinates must match the reconstructed grid.
pub fn read_field_csv(path: &Path) -> Result<ScalarField> {
    let lines = read_lines(path)?;
    let header = lines[0].trim();
    let n = match header {
        "theta,value" => 1usize,
        "theta,phi,value" => 2usize,
        other => return Err(bad(path, format!("unknown field header {other:?}"))),
    };
    let rows = &lines[1..];
    if rows.is_empty() {
        return Err(bad(path, "no data rows"));
    }

    let mut cells = Vec::with_capacity(rows.len());
    for row in rows {
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() != n + 1 {
            return Err(bad(path, format!("expected {} columns, got {}", n + 1, parts.len())));
        }
        let mut nums = [0.0; 3];
        for (k, p) in parts.iter().enumerate() {
            nums[k] = parse_float(path, p)?;
        }
        cells.push(nums);
    }

    let (grid, values) = if n == 1 {
        let grid = make_grid(1, &[cells.len()])
            .map_err(|e| bad(path, format!("bad row count: {e}")))?;
        for (j, c) in cells.iter().enumerate() {
            if (c[0] - grid.thetas[j]).abs() > 1e-12 {
                return Err(bad(path, format!("row {j}: theta {} is not a grid node", c[0])));
            }
        }
        (grid.clone(), cells.iter().map(|c| c[1]).collect::<Vec<f64>>())
    } else {
        let theta0 = cells[0][0];
        let nphi = cells.iter().take_while(|c| c[0] == theta0).count();
        if nphi == 0 || cells.len() % nphi != 0 {
            return Err(bad(path, "rows do not factor into latitude blocks"));
        }
        let ntheta = cells.len() / nphi;
        let grid = make_grid(2, &[ntheta, nphi])
            .map_err(|e| bad(path, format!("bad row structure: {e}")))?;
        for j in 0..ntheta {
            for l in 0..nphi {
                let c = &cells[j * nphi + l];
                if (c[0] - grid.thetas[j]).abs() > 1e-12 || (c[1] - grid.phis[l]).abs() > 1e-12 {
                    return Err(bad(
                        path,
                        format!("row {}: ({}, {}) is not a grid node", j * nphi + l, c[0], c[1]),
                    ));
                }
            }
        }
        (grid.clone(), cells.iter().map(|c| c[2]).collect::<Vec<f64>>())
    };
    ScalarField::new(grid, values)
}

// ---------------------------------------------------------------------------
// Body = field CSV + JSON sidecar
// ---------------------------------------------------------------------------

/// Sidecar schema stored next to a body's field CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BodySidecar {
    pub n: usize,
    pub resolution: Vec<usize>,
    pub description: String,
}

fn sidecar_path(csv_path: &Path) -> std::path::PathBuf {
    csv_path.with_extension("json")
}

/// Write a support function as a field CSV plus a JSON sidecar
/// (`<stem>.json`) recording dimension, resolution and a description.
pub fn write_body(csv_path: &Path, body: &SupportFunction, description: &str) -> Result<()> {
    write_field_csv(csv_path, &body.h)?;
    let g = &body.h.grid;
    let resolution = if g.n == 1 {
        vec![g.ntheta]
    } else {
        vec![g.ntheta, g.nphi]
    };
    write_json(
        &sidecar_path(csv_path),
        &BodySidecar {
            n: g.n,
            resolution,
            description: description.to_string(),
        },
    )
}

/// Read a body written by [`write_body`]; the sidecar must agree with the
/// CSV's structure.  Returns the body and its stored description.
pub fn read_body(csv_path: &Path) -> Result<(SupportFunction, String)> {
    let side: BodySidecar = read_json(&sidecar_path(csv_path))?;
    let field = read_field_csv(csv_path)?;
    let g = &field.grid;
    let resolution = if g.n == 1 {
        vec![g.ntheta]
    } else {
        vec![g.ntheta, g.nphi]
    };
    if side.n != g.n || side.resolution != resolution {
        return Err(bad(
            csv_path,
            format!(
                "sidecar says n={} resolution={:?}, CSV has n={} resolution={:?}",
                side.n, side.resolution, g.n, resolution
            ),
        ));
    }
    Ok((SupportFunction::new(field)?, side.description))
}

// ---------------------------------------------------------------------------
// Spectrum CSV
// ---------------------------------------------------------------------------

/// Write eigenvalues with their cluster labels: header
/// `index,eigenvalue,multiplicity_cluster`.
pub fn write_spectrum_csv(path: &Path, eigenvalues: &[f64], clusters: &[usize]) -> Result<()> {
    if eigenvalues.len() != clusters.len() {
        return Err(Error::Precondition(format!(
            "{} eigenvalues but {} cluster labels",
            eigenvalues.len(),
            clusters.len()
        )));
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "index,eigenvalue,multiplicity_cluster")?;
    for (i, (ev, c)) in eigenvalues.iter().zip(clusters).enumerate() {
        writeln!(w, "{i},{},{c}", format_float(*ev))?;
    }
    w.flush()?;
    Ok(())
}

/// Read back (eigenvalues, cluster labels).
pub fn read_spectrum_csv(path: &Path) -> Result<(Vec<f64>, Vec<usize>)> {
    let lines = read_lines(path)?;
    if lines[0].trim() != "index,eigenvalue,multiplicity_cluster" {
        return Err(bad(path, "unknown spectrum header"));
    }
    let mut evs = Vec::new();
    let mut clusters = Vec::new();
    for (i, row) in lines[1..].iter().enumerate() {
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() != 3 {
            return Err(bad(path, format!("expected 3 columns, got {}", parts.len())));
        }
        let idx: usize = parts[0]
            .trim()
            .parse()
            .map_err(|_| bad(path, format!("bad index {:?}", parts[0])))?;
        if idx != i {
            return Err(bad(path, format!("index column must count up from 0, got {idx} at row {i}")));
        }
        evs.push(parse_float(path, parts[1])?);
        clusters.push(
            parts[2]
                .trim()
                .parse()
                .map_err(|_| bad(path, format!("bad cluster label {:?}", parts[2])))?,
        );
    }
    Ok((evs, clusters))
}

// ---------------------------------------------------------------------------
// Trajectory CSV
// ---------------------------------------------------------------------------

/// Write flow samples: header `t,m,M,gamma,volume,F,residual,clamps`, one
/// row per sample.  The runtime step size is a diagnostic and is not part
/// of the stored schema.
pub fn write_trajectory_csv(path: &Path, samples: &[FlowSample]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "t,m,M,gamma,volume,F,residual,clamps")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            format_float(s.t),
            format_float(s.inner),
            format_float(s.outer),
            format_float(s.gamma),
            format_float(s.volume),
            format_float(s.functional),
            format_float(s.residual),
            s.clamps
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Read back flow samples; the step-size diagnostic is restored as 0.
pub fn read_trajectory_csv(path: &Path) -> Result<Vec<FlowSample>> {
    let lines = read_lines(path)?;
    if lines[0].trim() != "t,m,M,gamma,volume,F,residual,clamps" {
        return Err(bad(path, "unknown trajectory header"));
    }
    let mut out = Vec::new();
    for row in &lines[1..] {
        let parts: Vec<&str> = row.split(',').collect();
        if parts.len() != 8 {
            return Err(bad(path, format!("expected 8 columns, got {}", parts.len())));
        }
        out.push(FlowSample {
            t: parse_float(path, parts[0])?,
            inner: parse_float(path, parts[1])?,
            outer: parse_float(path, parts[2])?,
            gamma: parse_float(path, parts[3])?,
            volume: parse_float(path, parts[4])?,
            functional: parse_float(path, parts[5])?,
            residual: parse_float(path, parts[6])?,
            clamps: parts[7]
                .trim()
                .parse()
                .map_err(|_| bad(path, format!("bad clamp count {:?}", parts[7])))?,
            dt: 0.0,
        });
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Groups and polytopes
// ---------------------------------------------------------------------------

/// On-disk schema for a symmetry group: row-major matrices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupFile {
    pub dim: usize,
    pub provenance: String,
    pub elements: Vec<Vec<f64>>,
}

/// Write a group as JSON (a list of row-major dim x dim matrices).
pub fn write_group_json(path: &Path, group: &SymmetryGroup) -> Result<()> {
    write_json(
        path,
        &GroupFile {
            dim: group.dim,
            provenance: group.provenance.clone(),
            elements: group.elements.clone(),
        },
    )
}

/// Read a group written by [`write_group_json`].
pub fn read_group_json(path: &Path) -> Result<SymmetryGroup> {
    let gf: GroupFile = read_json(path)?;
    if gf.dim < 2 || gf.dim > 3 {
        return Err(bad(path, format!("group dimension must be 2 or 3, got {}", gf.dim)));
    }
    for (i, e) in gf.elements.iter().enumerate() {
        if e.len() != gf.dim * gf.dim {
            return Err(bad(
                path,
                format!("element {i} has {} entries, want {}", e.len(), gf.dim * gf.dim),
            ));
        }
    }
    if gf.elements.is_empty() {
        return Err(bad(path, "group has no elements"));
    }
    Ok(SymmetryGroup {
        dim: gf.dim,
        elements: gf.elements,
        provenance: gf.provenance,
    })
}

/// Write polytope vertices as CSV: header `x,y` or `x,y,z`, one vertex per
/// row.
pub fn write_polytope_csv(path: &Path, poly: &PolytopeSpec) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{}", if poly.n == 1 { "x,y" } else { "x,y,z" })?;
    for v in &poly.vertices {
        let row: Vec<String> = v.iter().map(|c| format_float(*c)).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// JSON helpers and hashing
// ---------------------------------------------------------------------------

/// Pretty-printed JSON via serde; numbers use the shortest representation
/// that parses back to the identical f64.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)
        .map_err(|e| bad(path, format!("serialize: {e}")))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// Parse a JSON file into `T`.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = fs::File::open(path)?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| bad(path, e.to_string()))
}

/// Lowercase hex SHA-256 of a file's contents.
pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let k = file.read(&mut buf)?;
        if k == 0 {
            break;
        }
        hasher.update(&buf[..k]);
    }
    Ok(hex::encode(hasher.finalize()))
}

// ---------------------------------------------------------------------------
