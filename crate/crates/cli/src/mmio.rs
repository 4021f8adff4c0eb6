//! Matrix Market I/O: coordinate, real (or integer), general. One-based
//! indices; duplicate entries are summed on read.

use anyhow::{bail, Context, Result};
use discrep_core::sparse::CsrMatrix;
use std::fs;
use std::io::Write;
use std::path::Path;

pub fn read_matrix_market(path: &Path) -> Result<CsrMatrix> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .context("empty file: missing MatrixMarket header")?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_lowercase()).collect();
    if fields.len() < 5 || fields[0] != "%%matrixmarket" {
        bail!("not a MatrixMarket file: bad header line");
    }
    if fields[1] != "matrix" || fields[2] != "coordinate" {
        bail!("unsupported MatrixMarket object/format: want `matrix coordinate`");
    }
    if fields[3] != "real" && fields[3] != "integer" {
        bail!("unsupported MatrixMarket field `{}`: want `real`", fields[3]);
    }
    if fields[4] != "general" {
        bail!(
            "unsupported MatrixMarket symmetry `{}`: want `general`",
            fields[4]
        );
    }
    let mut size_line = None;
    for line in lines.by_ref() {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        size_line = Some(t.to_string());
        break;
    }
    let size_line = size_line.context("missing size line")?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .context("parsing size line")?;
    if dims.len() != 3 {
        bail!("size line must be `rows cols nnz`");
    }
    let (m, n, nnz) = (dims[0], dims[1], dims[2]);
    let mut triplets = Vec::with_capacity(nnz);
    for line in lines {
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let parts: Vec<&str> = t.split_whitespace().collect();
        if parts.len() != 3 {
            bail!("malformed entry line: `{t}`");
        }
        let r: usize = parts[0].parse().context("entry row index")?;
        let c: usize = parts[1].parse().context("entry col index")?;
        let v: f64 = parts[2].parse().context("entry value")?;
        if r == 0 || c == 0 || r > m || c > n {
            bail!("entry ({r}, {c}) outside 1-based {m} x {n}");
        }
        triplets.push((r - 1, c - 1, v));
    }
    if triplets.len() != nnz {
        bail!("entry count {} disagrees with header nnz {nnz}", triplets.len());
    }
    CsrMatrix::from_triplets(m, n, &triplets).map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn write_matrix_market(path: &Path, a: &CsrMatrix) -> Result<()> {
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real general\n");
    out.push_str(&format!("{} {} {}\n", a.n_rows(), a.n_cols(), a.nnz()));
    for (r, c, v) in a.iter_triplets() {
        // `{}` prints the shortest representation that round-trips exactly
        out.push_str(&format!("{} {} {}\n", r + 1, c + 1, v));
    }
    let mut f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_coloring(path: &Path, coloring: &[i8]) -> Result<()> {
    let mut out = String::with_capacity(coloring.len() * 3);
    for &s in coloring {
        out.push_str(if s >= 0 { "1\n" } else { "-1\n" });
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_coloring(path: &Path) -> Result<Vec<i8>> {
    let text = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "1" | "+1" => out.push(1),
            "-1" => out.push(-1),
            other => bail!("coloring entries must be +-1, got `{other}`"),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use discrep_core::rng::RngStream;
    use rand::Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = RngStream::new(3, 0).rng();
        let mut trips = Vec::new();
        for r in 0..20 {
            for c in 0..9 {
                if rng.gen::<f64>() < 0.3 {
                    trips.push((r, c, rng.gen_range(-5.0..5.0)));
                }
            }
        }
        let a = CsrMatrix::from_triplets(20, 9, &trips).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.mtx");
        write_matrix_market(&path, &a).unwrap();
        let b = read_matrix_market(&path).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicates_are_summed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dup.mtx");
        fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real general\n% comment\n2 2 3\n1 1 1.5\n1 1 2.5\n2 2 -1\n",
        )
        .unwrap();
        let a = read_matrix_market(&path).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.row(0), (&[0usize][..], &[4.0][..]));
    }

    #[test]
    fn rejects_symmetric_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sym.mtx");
        fs::write(
            &path,
            "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n2 1 1.0\n",
        )
        .unwrap();
        assert!(read_matrix_market(&path).is_err());
    }

    #[test]
    fn zero_entry_count_is_fine() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("zero.mtx");
        fs::write(&path, "%%MatrixMarket matrix coordinate real general\n3 4 0\n").unwrap();
        let a = read_matrix_market(&path).unwrap();
        assert_eq!((a.n_rows(), a.n_cols(), a.nnz()), (3, 4, 0));
    }
}
