//! Sparse symmetric matrix storage and input/output.
//!
//! Matrices are held in compressed sparse row (CSR) form with both triangles
//! stored, so a row scan sees every entry of that row. Parsing accepts the
//! Matrix Market coordinate format for real matrices declared `symmetric`
//! (one stored triangle, mirrored on load) or `general` (all entries stored,
//! verified numerically symmetric). Construction enforces the invariants the
//! estimator relies on: a square matrix, exact symmetry of the expanded
//! storage, and a strictly positive diagonal. Positive-definiteness itself is
//! not checked; a positive diagonal is the cheap necessary condition.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{cast, Scalar};

/// Relative tolerance for declaring a `general` Matrix Market file
/// numerically symmetric.
const SYMMETRY_RTOL: f64 = 1e-12;

/// Errors from matrix construction, parsing, and products.
#[derive(Debug, Error)]
pub enum MatIoError {
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported Matrix Market format: {0}")]
    UnsupportedFormat(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimension must be at least 1")]
    EmptyMatrix,
    #[error("entry ({row}, {col}) out of bounds for dimension {n}")]
    IndexOutOfBounds { row: usize, col: usize, n: usize },
    #[error("matrix is asymmetric at ({row}, {col}): {forward} vs {mirrored}")]
    Asymmetric {
        row: usize,
        col: usize,
        forward: f64,
        mirrored: f64,
    },
    #[error("diagonal entry {row} is {value}; a positive-definite matrix needs a strictly positive diagonal")]
    NonPositiveDiagonal { row: usize, value: f64 },
    #[error("non-finite value {value} at ({row}, {col})")]
    NonFiniteValue { row: usize, col: usize, value: f64 },
    #[error("vector length {got} does not match matrix dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("normalization factor must be positive and finite, got {0}")]
    InvalidNormalization(f64),
}

/// How a spectral normalization factor was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormalizationMethod {
    /// Gershgorin disc bound computed from the matrix.
    Gershgorin,
    /// Caller-supplied bound.
    Supplied,
}

/// A positive factor `c >= lambda_max(A)` used to map the spectrum into
/// `(0, 1]`, together with its provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationFactor<T> {
    pub value: T,
    pub method: NormalizationMethod,
}

impl<T: Scalar> NormalizationFactor<T> {
    /// Wrap a caller-supplied bound, rejecting non-positive or non-finite
    /// values.
    pub fn supplied(value: T) -> Result<Self, MatIoError> {
        if !(value.is_finite() && value > T::zero()) {
            return Err(MatIoError::InvalidNormalization(
                value.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self {
            value,
            method: NormalizationMethod::Supplied,
        })
    }
}

/// Symmetric sparse matrix in CSR form with both triangles stored.
///
/// Invariants, enforced at construction:
/// - `row_ptr` is nondecreasing with `row_ptr[0] = 0` and `row_ptr[n] = nnz`;
/// - column indices are strictly increasing within each row;
/// - storage is exactly symmetric (`a_ij == a_ji` bitwise);
/// - every diagonal entry is present and strictly positive;
/// - all values are finite. Explicit zeros are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix<T> {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CsrMatrix<T> {
    /// Build from coordinate triplets `(row, col, value)`, summing duplicates.
    ///
    /// The triplet set must already contain both triangles; mirrored entries
    /// must sum to bitwise-equal values (guaranteed when mirrored duplicates
    /// appear in the same relative order, as produced by the parser).
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, T)>,
    ) -> Result<Self, MatIoError> {
        if n == 0 {
            return Err(MatIoError::EmptyMatrix);
        }
        let mut entries: Vec<(usize, usize, T)> = triplets.into_iter().collect();
        for &(row, col, value) in &entries {
            if row >= n || col >= n {
                return Err(MatIoError::IndexOutOfBounds { row, col, n });
            }
            if !value.is_finite() {
                return Err(MatIoError::NonFiniteValue {
                    row,
                    col,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        // Stable sort keeps duplicate values in input order, so mirrored
        // duplicate runs accumulate in the same order on both sides.
        entries.sort_by_key(|&(row, col, _)| (row, col));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<T> = Vec::with_capacity(entries.len());
        let mut counts = vec![0usize; n];
        let mut i = 0;
        while i < entries.len() {
            let (row, col, mut acc) = entries[i];
            let mut j = i + 1;
            while j < entries.len() && entries[j].0 == row && entries[j].1 == col {
                acc += entries[j].2;
                j += 1;
            }
            counts[row] += 1;
            col_idx.push(col);
            values.push(acc);
            i = j;
        }
        for row in 0..n {
            row_ptr[row + 1] = row_ptr[row] + counts[row];
        }

        let matrix = Self {
            n,
            row_ptr,
            col_idx,
            values,
        };
        matrix.check_symmetry_exact()?;
        matrix.check_positive_diagonal()?;
        Ok(matrix)
    }

    fn check_symmetry_exact(&self) -> Result<(), MatIoError> {
        for row in 0..self.n {
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let col = self.col_idx[k];
                if col <= row {
                    continue;
                }
                let forward = self.values[k];
                match self.entry(col, row) {
                    Some(mirrored) if mirrored == forward => {}
                    other => {
                        return Err(MatIoError::Asymmetric {
                            row,
                            col,
                            forward: forward.to_f64().unwrap_or(f64::NAN),
                            mirrored: other
                                .map(|v| v.to_f64().unwrap_or(f64::NAN))
                                .unwrap_or(0.0),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    fn check_positive_diagonal(&self) -> Result<(), MatIoError> {
        for row in 0..self.n {
            let value = self.entry(row, row).unwrap_or_else(T::zero);
            // negated comparison so NaN also fails
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(value > T::zero()) {
                return Err(MatIoError::NonPositiveDiagonal {
                    row,
                    value: value.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(())
    }

    /// Stored value at `(row, col)`, or `None` when the position is
    /// structurally absent.
    pub fn entry(&self, row: usize, col: usize) -> Option<T> {
        let range = self.row_ptr[row]..self.row_ptr[row + 1];
        let cols = &self.col_idx[range.clone()];
        cols.binary_search(&col)
            .ok()
            .map(|offset| self.values[range.start + offset])
    }

    /// Matrix dimension.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of stored entries (both triangles, explicit zeros included).
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Row pointer array of length `n + 1`.
    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    /// Column indices, strictly increasing within each row.
    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    /// Stored values, aligned with [`Self::col_idx`].
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Iterate over stored entries as `(row, col, value)` in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.n).flat_map(move |row| {
            (self.row_ptr[row]..self.row_ptr[row + 1])
                .map(move |k| (row, self.col_idx[k], self.values[k]))
        })
    }

    /// `y = A x`, accumulating each row left to right in storage order so the
    /// floating-point result is reproducible.
    pub fn matvec_into(&self, x: &[T], y: &mut [T]) -> Result<(), MatIoError> {
        if x.len() != self.n {
            return Err(MatIoError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        if y.len() != self.n {
            return Err(MatIoError::DimensionMismatch {
                expected: self.n,
                got: y.len(),
            });
        }
        for (row, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
        Ok(())
    }

    /// `A x` as a fresh vector.
    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, MatIoError> {
        let mut y = vec![T::zero(); self.n];
        self.matvec_into(x, &mut y)?;
        Ok(y)
    }

    /// Gershgorin upper bound on the spectrum:
    /// `max_i (a_ii + sum_{j != i} |a_ij|)`.
    ///
    /// For a symmetric matrix every eigenvalue lies within some disc, so the
    /// bound dominates `lambda_max`; with a positive diagonal it is positive.
    pub fn gershgorin_bound(&self) -> NormalizationFactor<T> {
        let mut bound = T::zero();
        for row in 0..self.n {
            let mut disc = T::zero();
            for k in self.row_ptr[row]..self.row_ptr[row + 1] {
                let value = self.values[k];
                disc += if self.col_idx[k] == row {
                    value
                } else {
                    value.abs()
                };
            }
            bound = bound.max(disc);
        }
        NormalizationFactor {
            value: bound,
            method: NormalizationMethod::Gershgorin,
        }
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for row in 0..self.n {
            if let Some(value) = self.entry(row, row) {
                acc += value;
            }
        }
        acc
    }

    /// Sum of squares of all stored entries. For a symmetric matrix this
    /// equals `Tr(A^2)`.
    pub fn frobenius_squared(&self) -> T {
        let mut acc = T::zero();
        for &value in &self.values {
            acc += value * value;
        }
        acc
    }

    /// The scaled matrix `A / c`, dividing each stored value.
    pub fn divided_by(&self, c: T) -> Result<Self, MatIoError> {
        if !(c.is_finite() && c > T::zero()) {
            return Err(MatIoError::InvalidNormalization(
                c.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let mut scaled = self.clone();
        for value in &mut scaled.values {
            *value /= c;
        }
        Ok(scaled)
    }

    /// Parse the Matrix Market coordinate format for real matrices.
    ///
    /// Accepts symmetry kinds `symmetric` (stored triangle mirrored) and
    /// `general` (entries must be numerically symmetric within `1e-12`
    /// relative; mirrored pairs are averaged so storage ends up exactly
    /// symmetric). Indices are 1-based, `%` starts a comment, duplicate
    /// entries are summed, explicit zeros are kept.
    pub fn parse_matrix_market<R: BufRead>(reader: R) -> Result<Self, MatIoError> {
        let mut lines = reader.lines().enumerate();

        let (header_no, header) = loop {
            match lines.next() {
                Some((no, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break (no + 1, line);
                    }
                }
                None => {
                    return Err(MatIoError::Parse {
                        line: 1,
                        msg: "empty file".into(),
                    })
                }
            }
        };

        let header_lower = header.to_ascii_lowercase();
        let mut tokens = header_lower.split_whitespace();
        let banner = tokens.next().unwrap_or("");
        if banner != "%%matrixmarket" {
            return Err(MatIoError::Parse {
                line: header_no,
                msg: format!("expected %%MatrixMarket banner, found {header:?}"),
            });
        }
        let object = tokens.next().unwrap_or("");
        let format = tokens.next().unwrap_or("");
        let field = tokens.next().unwrap_or("");
        let symmetry = tokens.next().unwrap_or("");
        if object != "matrix" || format != "coordinate" {
            return Err(MatIoError::UnsupportedFormat(format!(
                "only `matrix coordinate` is supported, found `{object} {format}`"
            )));
        }
        if field != "real" {
            return Err(MatIoError::UnsupportedFormat(format!(
                "only real-valued matrices are supported, found field `{field}`"
            )));
        }
        let mirrored = match symmetry {
            "symmetric" => true,
            "general" => false,
            other => {
                return Err(MatIoError::UnsupportedFormat(format!(
                    "only symmetry kinds `symmetric` and `general` are supported, found `{other}`"
                )))
            }
        };

        // Size line: first non-comment, non-blank line after the header.
        let (size_no, size_line) = loop {
            match lines.next() {
                Some((no, line)) => {
                    let line = line?;
                    let trimmed = line.trim();
                    if trimmed.is_empty() || trimmed.starts_with('%') {
                        continue;
                    }
                    break (no + 1, line);
                }
                None => {
                    return Err(MatIoError::Parse {
                        line: header_no,
                        msg: "missing size line".into(),
                    })
                }
            }
        };
        let dims: Vec<&str> = size_line.split_whitespace().collect();
        if dims.len() != 3 {
            return Err(MatIoError::Parse {
                line: size_no,
                msg: format!("size line must be `rows cols nnz`, found {size_line:?}"),
            });
        }
        let parse_dim = |tok: &str| -> Result<usize, MatIoError> {
            tok.parse().map_err(|_| MatIoError::Parse {
                line: size_no,
                msg: format!("invalid size token {tok:?}"),
            })
        };
        let rows = parse_dim(dims[0])?;
        let cols = parse_dim(dims[1])?;
        let declared_nnz = parse_dim(dims[2])?;
        if rows != cols {
            return Err(MatIoError::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(MatIoError::EmptyMatrix);
        }
        let n = rows;

        let mut raw: Vec<(usize, usize, T)> = Vec::with_capacity(declared_nnz);
        let mut seen = 0usize;
        for (no, line) in lines {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let line_no = no + 1;
            if seen == declared_nnz {
                return Err(MatIoError::Parse {
                    line: line_no,
                    msg: format!("more than the declared {declared_nnz} entries"),
                });
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(MatIoError::Parse {
                    line: line_no,
                    msg: format!("entry must be `row col value`, found {trimmed:?}"),
                });
            }
            let row_1: usize = fields[0].parse().map_err(|_| MatIoError::Parse {
                line: line_no,
                msg: format!("invalid row index {:?}", fields[0]),
            })?;
            let col_1: usize = fields[1].parse().map_err(|_| MatIoError::Parse {
                line: line_no,
                msg: format!("invalid column index {:?}", fields[1]),
            })?;
            let value_f64: f64 = fields[2].parse().map_err(|_| MatIoError::Parse {
                line: line_no,
                msg: format!("invalid value {:?}", fields[2]),
            })?;
            if row_1 == 0 || col_1 == 0 || row_1 > n || col_1 > n {
                return Err(MatIoError::IndexOutOfBounds {
                    row: row_1,
                    col: col_1,
                    n,
                });
            }
            let (row, col) = (row_1 - 1, col_1 - 1);
            if !value_f64.is_finite() {
                return Err(MatIoError::NonFiniteValue {
                    row,
                    col,
                    value: value_f64,
                });
            }
            raw.push((row, col, cast(value_f64)));
            seen += 1;
        }
        if seen != declared_nnz {
            return Err(MatIoError::Parse {
                line: size_no,
                msg: format!("declared {declared_nnz} entries but found {seen}"),
            });
        }

        let triplets = if mirrored {
            let mut out = Vec::with_capacity(2 * raw.len());
            for (row, col, value) in raw {
                out.push((row, col, value));
                if row != col {
                    out.push((col, row, value));
                }
            }
            out
        } else {
            Self::symmetrize_general(raw)?
        };
        Self::from_triplets(n, triplets)
    }

    /// Accumulate a `general` entry list, verify numeric symmetry within
    /// [`SYMMETRY_RTOL`] relative, and average mirrored pairs so the stored
    /// matrix is exactly symmetric.
    fn symmetrize_general(
        raw: Vec<(usize, usize, T)>,
    ) -> Result<Vec<(usize, usize, T)>, MatIoError> {
        let mut accum: BTreeMap<(usize, usize), T> = BTreeMap::new();
        for (row, col, value) in raw {
            *accum.entry((row, col)).or_insert_with(T::zero) += value;
        }
        let mut out = Vec::with_capacity(accum.len());
        let rtol: T = cast(SYMMETRY_RTOL);
        let keys: Vec<(usize, usize)> = accum.keys().copied().collect();
        for (row, col) in keys {
            if col < row {
                continue;
            }
            let forward = accum.get(&(row, col)).copied();
            if row == col {
                out.push((row, col, forward.unwrap()));
                continue;
            }
            let mirrored = accum.get(&(col, row)).copied();
            let a = forward.unwrap_or_else(T::zero);
            let b = mirrored.unwrap_or_else(T::zero);
            if (a - b).abs() > rtol * a.abs().max(b.abs()) {
                return Err(MatIoError::Asymmetric {
                    row,
                    col,
                    forward: a.to_f64().unwrap_or(f64::NAN),
                    mirrored: b.to_f64().unwrap_or(f64::NAN),
                });
            }
            let avg = (a + b) / cast(2.0);
            out.push((row, col, avg));
            out.push((col, row, avg));
        }
        // Lower-triangle-only keys were skipped above; pick up pairs whose
        // upper member is absent (pure lower-triangle zero storage).
        for (&(row, col), &value) in &accum {
            if col < row && !accum.contains_key(&(col, row)) {
                let b = value;
                if b.abs() > T::zero() {
                    // Nonzero without a mirror already failed above via the
                    // (col, row) pass only if that key existed; report here.
                    return Err(MatIoError::Asymmetric {
                        row: col,
                        col: row,
                        forward: 0.0,
                        mirrored: b.to_f64().unwrap_or(f64::NAN),
                    });
                }
                out.push((row, col, T::zero()));
                out.push((col, row, T::zero()));
            }
        }
        Ok(out)
    }

    /// Write the lower triangle in Matrix Market `symmetric` coordinate
    /// format with round-trip-exact decimal values.
    pub fn write_matrix_market<W: Write>(&self, writer: &mut W) -> Result<(), MatIoError> {
        let lower: Vec<(usize, usize, T)> =
            self.triplets().filter(|&(row, col, _)| col <= row).collect();
        writeln!(writer, "%%MatrixMarket matrix coordinate real symmetric")?;
        writeln!(writer, "{} {} {}", self.n, self.n, lower.len())?;
        for (row, col, value) in lower {
            writeln!(writer, "{} {} {:.16e}", row + 1, col + 1, value)?;
        }
        Ok(())
    }
}
