//! JSON encodings shared by the file formats and the CLI.
//!
//! Complex matrices are encoded row-major as nested arrays of `[re, im]`
//! pairs: `[[[re, im], ...], ...]`. All numbers are IEEE-754 doubles.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// Row-major nested-array form of a complex matrix.
pub type MatrixRows = Vec<Vec<[f64; 2]>>;

/// Encode a matrix as nested `[re, im]` rows.
pub fn matrix_to_rows(m: &CMatrix) -> MatrixRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

/// Decode nested `[re, im]` rows into a square matrix.
pub fn matrix_from_rows(rows: &MatrixRows) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Parse("empty matrix".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Parse(format!(
                "matrix is not square: row {} has {} entries, expected {}",
                i,
                row.len(),
                n
            )));
        }
    }
    let m = CMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1]));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Parse("matrix contains non-finite entries".into()));
    }
    Ok(m)
}

/// Parse a JSON document containing a single bare matrix.
pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    let rows: MatrixRows =
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    matrix_from_rows(&rows)
}

/// Serialize a matrix as a bare JSON document.
pub fn matrix_to_json(m: &CMatrix) -> String {
    serde_json::to_string(&matrix_to_rows(m)).expect("nested float arrays always serialize")
}
