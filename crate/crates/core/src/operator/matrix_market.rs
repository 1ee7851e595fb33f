//! Matrix Market coordinate format, real symmetric (and general, checked for symmetry).

use std::fmt::Write as _;
use std::path::Path;

use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
}

fn format_err(line: usize, message: impl Into<String>) -> Error {
    Error::Format {
        line,
        message: message.into(),
    }
}

/// Parses a square coordinate-format matrix. Symmetric files store one triangle
/// and are mirrored; general files are returned as given.
pub fn parse_matrix_market(text: &str) -> Result<CscMatrix<f64>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));

    let (hline, header) = lines
        .next()
        .ok_or_else(|| format_err(1, "empty input, missing %%MatrixMarket header"))?;
    let tokens: Vec<String> = header.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if tokens.len() != 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err(format_err(hline, "expected '%%MatrixMarket matrix coordinate <field> <symmetry>'"));
    }
    if tokens[2] != "coordinate" {
        return Err(format_err(hline, format!("unsupported format '{}'", tokens[2])));
    }
    if tokens[3] != "real" && tokens[3] != "integer" {
        return Err(format_err(hline, format!("unsupported field '{}'", tokens[3])));
    }
    let symmetry = match tokens[4].as_str() {
        "symmetric" => Symmetry::Symmetric,
        "general" => Symmetry::General,
        other => return Err(format_err(hline, format!("unsupported symmetry '{other}'"))),
    };

    let mut content = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });

    let (sline, size) = content
        .next()
        .ok_or_else(|| format_err(hline + 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| format_err(sline, format!("bad size line: {e}")))?;
    if dims.len() != 3 {
        return Err(format_err(sline, "size line must hold 'rows cols nnz'"));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);
    if nrows != ncols {
        return Err(format_err(sline, format!("matrix is {nrows}x{ncols}, expected square")));
    }
    if nrows == 0 {
        return Err(format_err(sline, "matrix dimension is zero"));
    }

    let mut coo = CooMatrix::new(nrows, ncols);
    let mut count = 0usize;
    for (ln, line) in content {
        if count == nnz {
            return Err(format_err(ln, format!("more entries than the declared {nnz}")));
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 3 {
            return Err(format_err(ln, "entry must hold 'row col value'"));
        }
        let i: usize = parts[0]
            .parse()
            .map_err(|e| format_err(ln, format!("bad row index: {e}")))?;
        let j: usize = parts[1]
            .parse()
            .map_err(|e| format_err(ln, format!("bad column index: {e}")))?;
        let v: f64 = parts[2]
            .parse()
            .map_err(|e| format_err(ln, format!("bad value: {e}")))?;
        if i == 0 || j == 0 || i > nrows || j > ncols {
            return Err(format_err(ln, format!("index ({i}, {j}) outside 1..={nrows}")));
        }
        if !v.is_finite() {
            return Err(format_err(ln, "non-finite value"));
        }
        coo.push(i - 1, j - 1, v);
        if symmetry == Symmetry::Symmetric && i != j {
            coo.push(j - 1, i - 1, v);
        }
        count += 1;
    }
    if count != nnz {
        return Err(format_err(
            text.lines().count().max(1),
            format!("declared {nnz} entries, found {count}"),
        ));
    }
    Ok(CscMatrix::from(&coo))
}

pub fn read_matrix_market(path: &Path) -> Result<CscMatrix<f64>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_matrix_market(&text)
}

/// Serializes the lower triangle in symmetric coordinate format with
/// shortest round-trip decimal values.
pub fn format_matrix_market(a: &CscMatrix<f64>) -> String {
    let entries: Vec<(usize, usize, f64)> = a
        .triplet_iter()
        .filter(|(i, j, _)| i >= j)
        .map(|(i, j, &v)| (i, j, v))
        .collect();
    let mut out = String::new();
    out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
    let _ = writeln!(out, "{} {} {}", a.nrows(), a.ncols(), entries.len());
    for (i, j, v) in entries {
        let _ = writeln!(out, "{} {} {:e}", i + 1, j + 1, v);
    }
    out
}

pub fn write_matrix_market(path: &Path, a: &CscMatrix<f64>) -> Result<()> {
    std::fs::write(path, format_matrix_market(a))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_symmetric_lower_triangle() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n% comment\n2 2 3\n1 1 2\n2 1 -1\n2 2 2\n";
        let a = parse_matrix_market(text).unwrap();
        assert_eq!(a.nnz(), 4);
        let d = nalgebra::DMatrix::from(&a);
        assert_eq!(d[(0, 1)], -1.0);
        assert_eq!(d[(1, 0)], -1.0);
    }

    #[test]
    fn header_only_is_format_error() {
        let err = parse_matrix_market("%%MatrixMarket matrix coordinate real symmetric\n").unwrap_err();
        assert!(matches!(err, Error::Format { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn bad_entry_reports_line() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 2\n1 1 2\n2 x 1\n";
        match parse_matrix_market(text).unwrap_err() {
            Error::Format { line, .. } => assert_eq!(line, 4),
            e => panic!("{e:?}"),
        }
    }

    #[test]
    fn entry_count_mismatch() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 3\n1 1 2\n2 2 2\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Format { .. })));
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 1 2\n2 2 2\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Format { line: 4, .. })));
    }

    #[test]
    fn rejects_out_of_range_and_unsupported() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n3 1 2\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Format { line: 3, .. })));
        let text = "%%MatrixMarket matrix array real general\n2 2\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Format { line: 1, .. })));
        let text = "%%MatrixMarket matrix coordinate complex symmetric\n";
        assert!(matches!(parse_matrix_market(text), Err(Error::Format { line: 1, .. })));
    }
}
