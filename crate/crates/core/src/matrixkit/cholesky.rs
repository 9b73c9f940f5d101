use crate::error::{Error, Result};
use crate::matrixkit::dense::{axpy, dot, DenseMatrix, SymmetricMatrix};
use crate::par;

/// Lower-triangular `L` with positive diagonal such that `L L^T = M`.
pub fn cholesky(m: &SymmetricMatrix) -> Result<DenseMatrix> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let row_j = l[j * n..j * n + j].to_vec();
        let pivot = m.get(j, j) - dot(&row_j, &row_j);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let ljj = pivot.sqrt();
        l[j * n + j] = ljj;
        // column j below the diagonal, one row per task
        par::for_each_chunk_mut(&mut l[(j + 1) * n..], n, |t, row_i| {
            let i = j + 1 + t;
            row_i[j] = (m.get(i, j) - dot(&row_i[..j], &row_j)) / ljj;
        });
    }
    Ok(DenseMatrix::from_vec_unchecked(n, n, l))
}

/// Low-rank factor from diagonally pivoted Cholesky: `M ≈ F F^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotedCholesky {
    /// `n × r`, rows in the original order.
    pub factor: DenseMatrix,
    /// Pivot order of the `r` factored indices.
    pub pivots: Vec<usize>,
    /// Trace of the unfactored Schur complement, clamped at zero per entry.
    pub remaining_trace: f64,
}

/// Left-looking Cholesky with diagonal pivoting for positive semidefinite `M`.
/// Before each step `stop(step, pivot, remaining_trace)` may end the
/// factorization; it also ends when no positive pivot remains.
pub fn pivoted_cholesky(m: &SymmetricMatrix, stop: impl Fn(usize, f64, f64) -> bool) -> PivotedCholesky {
    let n = m.dim();
    let mut d = m.diag();
    let mut chosen = vec![false; n];
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut pivots = Vec::new();
    let remaining = |d: &[f64], chosen: &[bool]| -> f64 {
        d.iter().zip(chosen).filter(|(_, c)| !**c).map(|(v, _)| v.max(0.0)).sum()
    };
    for step in 0..n {
        let mut p = usize::MAX;
        for i in 0..n {
            if !chosen[i] && (p == usize::MAX || d[i] > d[p]) {
                p = i;
            }
        }
        let pivot = d[p];
        if !(pivot > 0.0) || stop(step, pivot, remaining(&d, &chosen)) {
            break;
        }
        let mut c = m.row(p).to_vec();
        for col in &columns {
            let coef = -col[p];
            axpy(coef, col, &mut c);
        }
        let root = pivot.sqrt();
        chosen[p] = true;
        for i in 0..n {
            if chosen[i] {
                c[i] = 0.0;
            } else {
                c[i] /= root;
                d[i] -= c[i] * c[i];
            }
        }
        c[p] = root;
        d[p] = 0.0;
        columns.push(c);
        pivots.push(p);
    }
    let remaining_trace = remaining(&d, &chosen);
    PivotedCholesky {
        factor: DenseMatrix::from_columns(n, &columns).expect("finite factor"),
        pivots,
        remaining_trace,
    }
}

fn check_lower(l: &DenseMatrix) -> Result<usize> {
    let (n, c) = l.shape();
    if n != c {
        return Err(Error::DimensionMismatch {
            what: "triangular matrix columns",
            expected: n,
            actual: c,
        });
    }
    for i in 0..n {
        if l.get(i, i) == 0.0 {
            return Err(Error::SingularTriangular { index: i });
        }
        if l.row(i)[i + 1..].iter().any(|v| *v != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "matrix is not lower triangular (row {i})"
            )));
        }
    }
    Ok(n)
}

/// Forward substitution on a buffer of right-hand sides stored one per row.
pub(crate) fn forward_substitute_rows(l: &DenseMatrix, rhs_rows: &mut [f64]) {
    let n = l.rows();
    par::for_each_chunk_mut(rhs_rows, n, |_, x| {
        for i in 0..n {
            let row = l.row(i);
            x[i] = (x[i] - dot(&row[..i], &x[..i])) / row[i];
        }
    });
}

/// Solves `L X = B` for lower-triangular `L`.
pub fn solve_lower_triangular(l: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let n = check_lower(l)?;
    if b.rows() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side rows",
            expected: n,
            actual: b.rows(),
        });
    }
    let mut buf = b.transpose().into_data();
    forward_substitute_rows(l, &mut buf);
    Ok(DenseMatrix::from_vec_unchecked(b.cols(), n, buf).transpose())
}

/// Solves `L x = b`.
pub fn solve_lower_vec(l: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = check_lower(l)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: n,
            actual: b.len(),
        });
    }
    let mut x = b.to_vec();
    forward_substitute_rows(l, &mut x);
    Ok(x)
}

/// Solves `L^T x = b` by column-oriented back substitution.
pub fn solve_lower_transpose_vec(l: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = check_lower(l)?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            what: "right-hand side length",
            expected: n,
            actual: b.len(),
        });
    }
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let row = l.row(i);
        x[i] /= row[i];
        let xi = x[i];
        axpy(-xi, &row[..i], &mut x[..i]);
    }
    Ok(x)
}

/// `L^{-1} A L^{-T}` for symmetric `A`, returned exactly symmetric.
pub fn congruence_inverse(l: &DenseMatrix, a: &SymmetricMatrix) -> Result<SymmetricMatrix> {
    let n = check_lower(l)?;
    if a.dim() != n {
        return Err(Error::DimensionMismatch {
            what: "congruence dimension",
            expected: n,
            actual: a.dim(),
        });
    }
    // rows of A are its columns; after substitution the buffer holds (L^{-1}A)^T
    let mut buf = a.data().to_vec();
    forward_substitute_rows(l, &mut buf);
    let mut buf = DenseMatrix::from_vec_unchecked(n, n, buf).transpose().into_data();
    forward_substitute_rows(l, &mut buf);
    SymmetricMatrix::symmetrize(&DenseMatrix::from_vec_unchecked(n, n, buf))
}
