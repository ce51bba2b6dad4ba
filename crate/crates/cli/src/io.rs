//! Matrix and vector file I/O.
//!
//! Two formats are accepted:
//!
//! * plain whitespace text — first line `rows cols`, then `rows*cols` entries
//!   in row-major order, split across lines however convenient;
//! * Matrix Market — `%%MatrixMarket matrix array|coordinate real ...`
//!   headers, `general` or `symmetric`; coordinate entries are densified.
//!
//! An `n x 1` array of either format parses as a vector. Emission uses 17
//! significant decimal digits, which round-trips `f64` bitwise.

use std::fmt;
use std::fs;
use std::path::Path;

use itersolve::{DenseMatrix, DenseVector};

#[derive(Debug)]
pub enum IoError {
    Read { path: String, source: std::io::Error },
    Write { path: String, source: std::io::Error },
    Parse { path: String, line: usize, message: String },
}

impl fmt::Display for IoError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IoError::Read { path, source } => write!(f, "cannot read {path}: {source}"),
            IoError::Write { path, source } => write!(f, "cannot write {path}: {source}"),
            IoError::Parse { path, line, message } => {
                write!(f, "{path}:{line}: {message}")
            }
        }
    }
}

impl std::error::Error for IoError {}

/// A parsed file is a matrix or, when it has a single column, a vector.
#[derive(Debug, Clone, PartialEq)]
pub enum ParsedArray {
    Matrix(DenseMatrix),
    Vector(DenseVector),
}

impl ParsedArray {
    /// Reinterpret as a matrix (a vector becomes n x 1).
    pub fn into_matrix(self) -> DenseMatrix {
        match self {
            ParsedArray::Matrix(m) => m,
            ParsedArray::Vector(v) => {
                DenseMatrix::new(v.dim(), 1, v.entries().to_vec()).expect("validated entries")
            }
        }
    }

    pub fn into_vector(self) -> Option<DenseVector> {
        match self {
            ParsedArray::Vector(v) => Some(v),
            ParsedArray::Matrix(_) => None,
        }
    }
}

pub fn parse_matrix_file(path: &Path) -> Result<ParsedArray, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::Read {
        path: path.display().to_string(),
        source,
    })?;
    parse_matrix_str(&text).map_err(|(line, message)| IoError::Parse {
        path: path.display().to_string(),
        line,
        message,
    })
}

type ParseResult<T> = Result<T, (usize, String)>;

/// Parse from text; errors carry the 1-based line number.
pub fn parse_matrix_str(text: &str) -> ParseResult<ParsedArray> {
    if text.trim_start().starts_with("%%MatrixMarket") {
        parse_matrix_market(text)
    } else {
        parse_plain(text)
    }
}

fn wrap(rows: usize, cols: usize, entries: Vec<f64>, line: usize) -> ParseResult<ParsedArray> {
    if cols == 1 && rows > 1 {
        let v = DenseVector::new(entries)
            .map_err(|e| (line, format!("invalid vector: {e}")))?;
        return Ok(ParsedArray::Vector(v));
    }
    let m = DenseMatrix::new(rows, cols, entries)
        .map_err(|e| (line, format!("invalid matrix: {e}")))?;
    Ok(ParsedArray::Matrix(m))
}

fn parse_plain(text: &str) -> ParseResult<ParsedArray> {
    let mut dims: Option<(usize, usize)> = None;
    let mut entries: Vec<f64> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut tokens = line.split_whitespace();
        if dims.is_none() {
            let rows: usize = tokens
                .next()
                .ok_or((line_no, "expected row count".to_string()))?
                .parse()
                .map_err(|_| (line_no, "cannot parse row count".to_string()))?;
            let cols: usize = tokens
                .next()
                .ok_or((line_no, "expected column count".to_string()))?
                .parse()
                .map_err(|_| (line_no, "cannot parse column count".to_string()))?;
            if rows == 0 || cols == 0 {
                return Err((line_no, format!("degenerate shape {rows}x{cols}")));
            }
            dims = Some((rows, cols));
            entries.reserve(rows * cols);
        }
        for token in tokens {
            let value: f64 = token
                .parse()
                .map_err(|_| (line_no, format!("cannot parse entry {token:?}")))?;
            entries.push(value);
        }
        last_line = line_no;
    }

    let (rows, cols) = dims.ok_or((1, "empty file".to_string()))?;
    if entries.len() != rows * cols {
        return Err((
            last_line.max(1),
            format!("expected {} entries for {rows}x{cols}, found {}", rows * cols, entries.len()),
        ));
    }
    wrap(rows, cols, entries, last_line.max(1))
}

fn parse_matrix_market(text: &str) -> ParseResult<ParsedArray> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or((1, "empty file".to_string()))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
    if tokens.len() < 5 || tokens[0] != "%%matrixmarket" || tokens[1] != "matrix" {
        return Err((1, "malformed MatrixMarket header".to_string()));
    }
    let layout = tokens[2].as_str();
    let field = tokens[3].as_str();
    let symmetry = tokens[4].as_str();
    if layout != "array" && layout != "coordinate" {
        return Err((1, format!("unsupported layout {layout:?}")));
    }
    if field != "real" && field != "integer" && field != "double" {
        return Err((1, format!("unsupported field {field:?} (real only)")));
    }
    if symmetry != "general" && symmetry != "symmetric" {
        return Err((1, format!("unsupported symmetry {symmetry:?}")));
    }

    // skip comments, read the size line
    let mut size_line = None;
    for (idx, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        size_line = Some((idx + 1, line.to_string()));
        break;
    }
    let (size_no, size_text) = size_line.ok_or((1, "missing size line".to_string()))?;
    let sizes: Vec<usize> = size_text
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| (size_no, format!("cannot parse size {t:?}"))))
        .collect::<Result<_, _>>()?;

    if layout == "array" {
        if sizes.len() != 2 {
            return Err((size_no, "array size line must be `rows cols`".to_string()));
        }
        let (rows, cols) = (sizes[0], sizes[1]);
        if rows == 0 || cols == 0 {
            return Err((size_no, format!("degenerate shape {rows}x{cols}")));
        }
        // array entries are column-major; symmetric files carry the lower
        // triangle only
        let mut values = Vec::new();
        let mut last = size_no;
        for (idx, raw) in lines {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('%') {
                continue;
            }
            last = idx + 1;
            for token in line.split_whitespace() {
                let value: f64 = token
                    .parse()
                    .map_err(|_| (last, format!("cannot parse entry {token:?}")))?;
                values.push(value);
            }
        }
        let mut entries = vec![0.0; rows * cols];
        if symmetry == "symmetric" {
            if rows != cols {
                return Err((size_no, "symmetric matrix must be square".to_string()));
            }
            let expected = rows * (rows + 1) / 2;
            if values.len() != expected {
                return Err((last, format!("expected {expected} entries, found {}", values.len())));
            }
            let mut it = values.into_iter();
            for j in 0..cols {
                for i in j..rows {
                    let v = it.next().unwrap();
                    entries[i * cols + j] = v;
                    entries[j * cols + i] = v;
                }
            }
        } else {
            if values.len() != rows * cols {
                return Err((
                    last,
                    format!("expected {} entries, found {}", rows * cols, values.len()),
                ));
            }
            for (pos, v) in values.into_iter().enumerate() {
                let j = pos / rows;
                let i = pos % rows;
                entries[i * cols + j] = v;
            }
        }
        return wrap(rows, cols, entries, last);
    }

    // coordinate
    if sizes.len() != 3 {
        return Err((size_no, "coordinate size line must be `rows cols nnz`".to_string()));
    }
    let (rows, cols, nnz) = (sizes[0], sizes[1], sizes[2]);
    if rows == 0 || cols == 0 {
        return Err((size_no, format!("degenerate shape {rows}x{cols}")));
    }
    let mut entries = vec![0.0; rows * cols];
    let mut seen = 0usize;
    let mut last = size_no;
    for (idx, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        last = idx + 1;
        let mut tokens = line.split_whitespace();
        let i: usize = tokens
            .next()
            .ok_or((last, "missing row index".to_string()))?
            .parse()
            .map_err(|_| (last, "cannot parse row index".to_string()))?;
        let j: usize = tokens
            .next()
            .ok_or((last, "missing column index".to_string()))?
            .parse()
            .map_err(|_| (last, "cannot parse column index".to_string()))?;
        let v: f64 = tokens
            .next()
            .ok_or((last, "missing value".to_string()))?
            .parse()
            .map_err(|_| (last, "cannot parse value".to_string()))?;
        if i == 0 || j == 0 || i > rows || j > cols {
            return Err((last, format!("index ({i}, {j}) outside {rows}x{cols}")));
        }
        entries[(i - 1) * cols + (j - 1)] = v;
        if symmetry == "symmetric" && i != j {
            entries[(j - 1) * cols + (i - 1)] = v;
        }
        seen += 1;
    }
    if seen != nnz {
        return Err((last, format!("expected {nnz} coordinate entries, found {seen}")));
    }
    wrap(rows, cols, entries, last)
}

/// Format one f64 with 17 significant digits (lossless for binary64).
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Serialize a matrix in the plain text format.
pub fn write_matrix_string(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_f64(m[(i, j)])).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_matrix_file(path: &Path, m: &DenseMatrix) -> Result<(), IoError> {
    fs::write(path, write_matrix_string(m)).map_err(|source| IoError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_matrix_and_vector() {
        let parsed = parse_matrix_str("3 3\n59 -63 -2\n29 42 51\n36 31 -67\n").unwrap();
        let ParsedArray::Matrix(m) = parsed else { panic!("expected matrix") };
        assert_eq!(m.rows(), 3);
        assert_eq!(m[(0, 1)], -63.0);
        assert_eq!(m[(2, 2)], -67.0);

        let parsed = parse_matrix_str("3 1\n-73\n266\n-103\n").unwrap();
        let ParsedArray::Vector(v) = parsed else { panic!("expected vector") };
        assert_eq!(v.entries(), &[-73.0, 266.0, -103.0]);
    }

    #[test]
    fn plain_entry_count_mismatch() {
        let err = parse_matrix_str("2 2\n1 2 3\n").unwrap_err();
        assert_eq!(err.0, 2);
    }

    #[test]
    fn plain_bad_token_reports_line() {
        let err = parse_matrix_str("2 2\n1 2\n3 oops\n").unwrap_err();
        assert_eq!(err.0, 3);
    }

    #[test]
    fn matrix_market_array_identity() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n";
        let ParsedArray::Matrix(m) = parse_matrix_str(text).unwrap() else {
            panic!("expected matrix")
        };
        assert_eq!(m, DenseMatrix::identity(2));
    }

    #[test]
    fn matrix_market_array_is_column_major() {
        let text = "%%MatrixMarket matrix array real general\n2 2\n1\n2\n3\n4\n";
        let ParsedArray::Matrix(m) = parse_matrix_str(text).unwrap() else {
            panic!("expected matrix")
        };
        assert_eq!(m, DenseMatrix::from_rows(&[&[1.0, 3.0], &[2.0, 4.0]]).unwrap());
    }

    #[test]
    fn matrix_market_coordinate_symmetric() {
        let text = "%%MatrixMarket matrix coordinate real symmetric\n\
                    3 3 4\n1 1 2\n2 1 -1\n2 2 2\n3 3 5\n";
        let ParsedArray::Matrix(m) = parse_matrix_str(text).unwrap() else {
            panic!("expected matrix")
        };
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], -1.0);
        assert_eq!(m[(2, 2)], 5.0);
    }

    #[test]
    fn matrix_market_vector() {
        let text = "%%MatrixMarket matrix array real general\n3 1\n1.5\n-2\n0.25\n";
        let ParsedArray::Vector(v) = parse_matrix_str(text).unwrap() else {
            panic!("expected vector")
        };
        assert_eq!(v.entries(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn matrix_market_rejects_complex() {
        let text = "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n";
        assert!(parse_matrix_str(text).is_err());
    }

    #[test]
    fn emit_parse_round_trip_is_bitwise() {
        let tricky = [
            1.0 / 3.0,
            -59.0,
            1e-300,
            -1.2345678901234567e100,
            f64::MIN_POSITIVE,
            0.1 + 0.2,
        ];
        let m = DenseMatrix::new(2, 3, tricky.to_vec()).unwrap();
        let text = write_matrix_string(&m);
        let ParsedArray::Matrix(back) = parse_matrix_str(&text).unwrap() else {
            panic!("expected matrix")
        };
        for (a, b) in m.entries().iter().zip(back.entries()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
