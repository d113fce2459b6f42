//! Matrix Market coordinate format (`real general`, 1-based indices).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::csr::CsrMatrix;
use crate::error::{Error, Result};

pub const HEADER: &str = "%%MatrixMarket matrix coordinate real general";

pub fn write_to(m: &CsrMatrix, mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), m.nnz())?;
    for (r, c, v) in m.triplets() {
        // 17 significant digits round-trip every binary64 value.
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn mm_write(m: &CsrMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_to(m, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn mm_read(path: impl AsRef<Path>) -> Result<CsrMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_from(BufReader::new(file), path)
}

/// Parses from any reader; `path` only labels error messages.
pub fn read_from(reader: impl BufRead, path: &Path) -> Result<CsrMatrix> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (lno, header) = match lines.next() {
        Some((n, l)) => (n, l.map_err(|e| Error::io(path, e))?),
        None => return Err(err(1, "empty file".into())),
    };
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if tokens.len() != 5
        || tokens[0] != "%%matrixmarket"
        || tokens[1] != "matrix"
        || tokens[2] != "coordinate"
        || tokens[3] != "real"
        || tokens[4] != "general"
    {
        return Err(err(
            lno,
            format!("unsupported header {header:?}, expected {HEADER:?}"),
        ));
    }

    let mut size: Option<(usize, usize, usize)> = None;
    let mut triplets = Vec::new();
    for (lno, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        match size {
            None => {
                if fields.len() != 3 {
                    return Err(err(lno, format!("size line needs 3 fields, got {trimmed:?}")));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| err(lno, format!("bad size field {s:?}")))
                };
                let dims = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
                triplets.reserve(dims.2);
                size = Some(dims);
            }
            Some((rows, cols, nnz)) => {
                if triplets.len() == nnz {
                    return Err(err(
                        lno,
                        format!("more entries than the {nnz} declared in the size line"),
                    ));
                }
                if fields.len() != 3 {
                    return Err(err(lno, format!("entry needs 3 fields, got {trimmed:?}")));
                }
                let idx = |s: &str, bound: usize, what: &str| -> Result<usize> {
                    let i = s
                        .parse::<usize>()
                        .map_err(|_| err(lno, format!("bad {what} index {s:?}")))?;
                    if i == 0 || i > bound {
                        return Err(err(lno, format!("{what} index {i} out of bounds 1..={bound}")));
                    }
                    Ok(i - 1)
                };
                let r = idx(fields[0], rows, "row")?;
                let c = idx(fields[1], cols, "column")?;
                let v = fields[2]
                    .parse::<f64>()
                    .map_err(|_| err(lno, format!("non-numeric value {:?}", fields[2])))?;
                if !v.is_finite() {
                    return Err(err(lno, format!("non-finite value {:?}", fields[2])));
                }
                triplets.push((r, c, v));
            }
        }
    }
    let (rows, cols, nnz) = size.ok_or_else(|| err(lno, "missing size line".into()))?;
    if triplets.len() != nnz {
        return Err(err(
            lno,
            format!("size line declares {nnz} entries but {} found", triplets.len()),
        ));
    }
    CsrMatrix::from_triplets_keep_zeros(rows, cols, triplets)
}
