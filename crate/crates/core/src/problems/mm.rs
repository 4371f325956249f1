//! Matrix Market coordinate files (`real`/`integer`, `general`/`symmetric`).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::SparseMatrix;

fn bad(line: usize, msg: impl Into<String>) -> Error {
    Error::MatrixMarket { line, msg: msg.into() }
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<SparseMatrix> {
    mm_parse(BufReader::new(File::open(path)?))
}

/// Parses a square coordinate matrix. Symmetric files are expanded to the
/// full pattern.
pub fn mm_parse(reader: impl Read) -> Result<SparseMatrix> {
    let mut lines = BufReader::new(reader).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file"))?;
    let header = header?;
    let fields: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if fields.len() != 5 || fields[0] != "%%matrixmarket" || fields[1] != "matrix" {
        return Err(bad(1, "expected '%%MatrixMarket matrix ...' header"));
    }
    if fields[2] != "coordinate" {
        return Err(bad(1, format!("unsupported format '{}'", fields[2])));
    }
    match fields[3].as_str() {
        "real" | "integer" => {}
        other => return Err(bad(1, format!("unsupported field '{other}'"))),
    }
    let symmetric = match fields[4].as_str() {
        "general" => false,
        "symmetric" => true,
        other => return Err(bad(1, format!("unsupported symmetry '{other}'"))),
    };

    let mut size: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    let mut n = 0;
    for (no, line) in lines {
        let lineno = no + 1;
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        match size {
            None => {
                if parts.len() != 3 {
                    return Err(bad(lineno, "size line needs 'rows cols nnz'"));
                }
                let rows: usize = parts[0].parse().map_err(|_| bad(lineno, "bad row count"))?;
                let cols: usize = parts[1].parse().map_err(|_| bad(lineno, "bad column count"))?;
                let nnz: usize = parts[2].parse().map_err(|_| bad(lineno, "bad entry count"))?;
                if rows != cols {
                    return Err(bad(lineno, "matrix must be square"));
                }
                n = rows;
                size = Some((rows, nnz));
                triplets.reserve(if symmetric { 2 * nnz } else { nnz });
            }
            Some(_) => {
                if parts.len() != 3 {
                    return Err(bad(lineno, "entry line needs 'row col value'"));
                }
                let i: usize = parts[0].parse().map_err(|_| bad(lineno, "bad row index"))?;
                let j: usize = parts[1].parse().map_err(|_| bad(lineno, "bad column index"))?;
                let v: f64 = parts[2].parse().map_err(|_| bad(lineno, "bad value"))?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(bad(lineno, format!("index ({i}, {j}) out of range 1..={n}")));
                }
                if symmetric && j > i {
                    return Err(bad(lineno, "symmetric file stores an upper-triangle entry"));
                }
                triplets.push((i - 1, j - 1, v));
                if symmetric && i != j {
                    triplets.push((j - 1, i - 1, v));
                }
            }
        }
    }
    let (_, nnz) = size.ok_or_else(|| bad(1, "missing size line"))?;
    let stored = if symmetric {
        triplets.iter().filter(|(i, j, _)| i >= j).count()
    } else {
        triplets.len()
    };
    if stored != nnz {
        return Err(bad(0, format!("header announces {nnz} entries, found {stored}")));
    }
    SparseMatrix::from_triplets(n, &triplets)
}

/// Writes `a` as a coordinate file; symmetric matrices store their lower
/// triangle. Values use the shortest round-trip representation.
pub fn mm_write(a: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    mm_format(a, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn mm_format(a: &SparseMatrix, w: &mut impl Write) -> Result<()> {
    let symmetric = a.is_symmetric();
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let entries: Vec<(usize, usize, f64)> = (0..a.n())
        .flat_map(|i| a.row(i).map(move |(j, v)| (i, j, v)))
        .filter(|&(i, j, _)| !symmetric || j <= i)
        .collect();
    writeln!(w, "{} {} {}", a.n(), a.n(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
    }
    Ok(())
}
