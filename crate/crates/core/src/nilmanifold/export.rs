use std::io::{BufRead, BufReader, BufWriter, Read, Write};

use num_complex::Complex64;
use serde::Serialize;

use super::DiscretizedOperator;
use crate::linalg::CsrMatrix;
use crate::{Error, Result};

/// Writes `matrix` as coordinate text: a `rows cols nnz` header line, then
/// `row col re im` per stored entry, 0-based.
pub fn write_coordinate<W: Write>(matrix: &CsrMatrix, out: W) -> Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{} {} {}", matrix.rows(), matrix.cols(), matrix.nnz())?;
    for (i, j, v) in matrix.triplets() {
        writeln!(w, "{i} {j} {:e} {:e}", v.re, v.im)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_coordinate<R: Read>(input: R) -> Result<CsrMatrix> {
    let mut lines = BufReader::new(input).lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix file".into()))??;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| Error::Parse(format!("bad header {header:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::Parse(format!("header needs rows, cols, nnz: {header:?}")));
    };
    let mut t = Vec::with_capacity(nnz);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split_whitespace().collect();
        if f.len() != 4 {
            return Err(Error::Parse(format!("bad entry line {line:?}")));
        }
        let parse_u = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad index in {line:?}")));
        let parse_f = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad value in {line:?}")));
        let (i, j) = (parse_u(f[0])?, parse_u(f[1])?);
        if i >= rows || j >= cols {
            return Err(Error::Parse(format!("entry ({i}, {j}) outside {rows}x{cols}")));
        }
        t.push((i, j, Complex64::new(parse_f(f[2])?, parse_f(f[3])?)));
    }
    if t.len() != nnz {
        return Err(Error::Parse(format!("header announces {nnz} entries, found {}", t.len())));
    }
    Ok(CsrMatrix::from_triplets(rows, cols, t))
}

#[derive(Serialize)]
struct Sidecar<'a> {
    label: &'a str,
    dim: usize,
    continuum_order: usize,
    symmetrization_defect: f64,
    trust_cutoff: f64,
    grid: &'a super::QuotientGrid,
}

/// Grid metadata for an exported operator, as pretty JSON.
pub fn write_sidecar<W: Write>(op: &DiscretizedOperator, out: W) -> Result<()> {
    let s = Sidecar {
        label: &op.label,
        dim: op.dim(),
        continuum_order: op.continuum_order,
        symmetrization_defect: op.symmetrization_defect,
        trust_cutoff: op.grid.trust_cutoff(),
        grid: &op.grid,
    };
    serde_json::to_writer_pretty(out, &s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nilmanifold::{heisenberg_fiber, HEISENBERG_PERIOD};

    #[test]
    fn coordinate_round_trip() {
        let op = heisenberg_fiber(8, 1, HEISENBERG_PERIOD).unwrap();
        let mut buf = Vec::new();
        write_coordinate(&op.matrix, &mut buf).unwrap();
        let back = read_coordinate(buf.as_slice()).unwrap();
        assert_eq!(back, op.matrix);
        let mut side = Vec::new();
        write_sidecar(&op, &mut side).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&side).unwrap();
        assert_eq!(v["dim"], 64);
        assert_eq!(v["grid"]["center"]["m"], 1);
        assert!(read_coordinate("2 2 1\n0 5 1 0\n".as_bytes()).is_err());
    }
}
