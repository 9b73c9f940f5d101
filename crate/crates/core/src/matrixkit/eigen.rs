//! Symmetric eigensolvers.
//!
//! Two algorithms are provided. Cyclic Jacobi is used for small matrices and
//! is the reference solver in tests. Above [`JACOBI_MAX_DIM`] the matrix is
//! reduced to tridiagonal form with Householder reflectors and diagonalized by
//! implicit QL; the Givens rotations of the QL phase are logged so that only
//! the requested eigenvectors are ever formed.

use crate::error::{Error, Result};
use crate::matrixkit::dense::{axpy, dot, DenseMatrix, SymmetricMatrix};
use crate::par;

/// Largest dimension handled by cyclic Jacobi in [`sym_eigendecompose`].
pub const JACOBI_MAX_DIM: usize = 64;
pub const JACOBI_MAX_SWEEPS: usize = 100;
/// Jacobi stops once the off-diagonal Frobenius norm is below this fraction of `‖M‖_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-12;
const QL_MAX_ITERATIONS: usize = 60;

/// Eigenvalues in non-increasing order with matching orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    values: Vec<f64>,
    vectors: DenseMatrix,
}

impl EigenPairs {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `n × k` matrix; column `i` pairs with `values()[i]`.
    pub fn vectors(&self) -> &DenseMatrix {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.vectors.column(i)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn from_unsorted(n: usize, values: Vec<f64>, columns: Vec<Vec<f64>>, keep: usize) -> Self {
        let mut order: Vec<usize> = (0..values.len()).collect();
        // stable sort keeps ties in solver order, which is deterministic
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        order.truncate(keep);
        let vals = order.iter().map(|&i| values[i]).collect();
        let cols: Vec<Vec<f64>> = order.iter().map(|&i| columns[i].clone()).collect();
        let vectors = DenseMatrix::from_columns(n, &cols).expect("eigenvectors are finite");
        Self {
            values: vals,
            vectors,
        }
    }
}

/// Full eigendecomposition, eigenvalues descending.
pub fn sym_eigendecompose(m: &SymmetricMatrix) -> Result<EigenPairs> {
    sym_eigen_top(m, m.dim())
}

/// The `k` largest eigenpairs.
pub fn sym_eigen_top(m: &SymmetricMatrix, k: usize) -> Result<EigenPairs> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let k = k.min(n);
    if n <= JACOBI_MAX_DIM {
        let full = jacobi_eigen(m)?;
        Ok(truncate(full, k))
    } else {
        tridiagonal_ql_eigen(m, k)
    }
}

fn truncate(full: EigenPairs, k: usize) -> EigenPairs {
    if k == full.len() {
        return full;
    }
    let n = full.vectors.rows();
    let cols: Vec<Vec<f64>> = (0..k).map(|i| full.vector(i)).collect();
    EigenPairs {
        values: full.values[..k].to_vec(),
        vectors: DenseMatrix::from_columns(n, &cols).expect("finite"),
    }
}

/// Cyclic-by-row Jacobi rotations.
pub fn jacobi_eigen(m: &SymmetricMatrix) -> Result<EigenPairs> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let mut a = m.data().to_vec();
    let mut v = DenseMatrix::identity(n).into_data();
    let norm = m.frobenius_norm();
    let target = JACOBI_TOLERANCE * norm;

    let off_norm = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j] * a[i * n + j];
                }
            }
        }
        s.sqrt()
    };

    let mut converged = false;
    let mut off = off_norm(&a);
    for _ in 0..JACOBI_MAX_SWEEPS {
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..n {
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    a[r * n + p] = c * arp - s * arq;
                    a[r * n + q] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[p * n + r];
                    let aqr = a[q * n + r];
                    a[p * n + r] = c * apr - s * aqr;
                    a[q * n + r] = s * apr + c * aqr;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
        off = off_norm(&a);
    }
    if !converged && off > target {
        return Err(Error::ConvergenceFailure {
            iterations: JACOBI_MAX_SWEEPS,
            residual: off,
        });
    }
    let values: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    let columns: Vec<Vec<f64>> = (0..n)
        .map(|j| (0..n).map(|i| v[i * n + j]).collect())
        .collect();
    Ok(EigenPairs::from_unsorted(n, values, columns, n))
}

struct Reflector {
    /// first index the reflector acts on
    offset: usize,
    v: Vec<f64>,
    beta: f64,
}

/// Householder reduction `A = Q T Q^T`. Returns diagonal, off-diagonal
/// (`e[i]` couples `i` and `i + 1`, `e[n-1] = 0`) and the reflectors of `Q`.
fn tridiagonalize(m: &SymmetricMatrix) -> (Vec<f64>, Vec<f64>, Vec<Reflector>) {
    let n = m.dim();
    let mut a = m.data().to_vec();
    let mut e = vec![0.0; n];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
    for k in 0..n.saturating_sub(1) {
        let start = k + 1;
        let len = n - start;
        let x: Vec<f64> = a[k * n + start..k * n + n].to_vec();
        if len == 1 {
            e[k] = x[0];
            continue;
        }
        let xnorm = crate::matrixkit::dense::norm2(&x);
        let tail_zero = x[1..].iter().all(|v| *v == 0.0);
        if xnorm == 0.0 || tail_zero {
            e[k] = x[0];
            continue;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x;
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let beta = 2.0 / vv;
        e[k] = alpha;

        // p = beta * A22 v, rows of the trailing block in parallel
        let a_ref = &a;
        let v_ref = &v;
        let p: Vec<f64> = par::map_range(len, |i| {
            let row = &a_ref[(start + i) * n + start..(start + i) * n + n];
            beta * dot(row, v_ref)
        });
        let kk = 0.5 * beta * dot(&p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - kk * vi).collect();

        // A22 -= v w^T + w v^T
        let block = &mut a[start * n..];
        par::for_each_chunk_mut(block, n, |i, row| {
            let (vi, wi) = (v[i], w[i]);
            let tail = &mut row[start..];
            for ((t, vj), wj) in tail.iter_mut().zip(&v).zip(&w) {
                *t -= vi * wj + wi * vj;
            }
        });
        // row/column k now hold the reflected vector
        a[k * n + start] = alpha;
        a[start * n + k] = alpha;
        for j in start + 1..n {
            a[k * n + j] = 0.0;
            a[j * n + k] = 0.0;
        }
        reflectors.push(Reflector {
            offset: start,
            v,
            beta,
        });
    }
    let d = (0..n).map(|i| a[i * n + i]).collect();
    (d, e, reflectors)
}

struct RotationLog {
    index: Vec<u32>,
    cs: Vec<[f64; 2]>,
}

/// Implicit QL with Wilkinson-style shifts on a symmetric tridiagonal matrix.
/// `d` is overwritten with eigenvalues (unsorted); rotations are logged.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<RotationLog> {
    let n = d.len();
    let mut log = RotationLog {
        index: Vec::new(),
        cs: Vec::new(),
    };
    // absolute floor: rounding from large entries keeps tiny couplings near
    // eps·‖T‖, so a purely relative test can stall on clusters near zero
    let norm = (0..n)
        .map(|i| d[i].abs() + e.get(i).map_or(0.0, |x| x.abs()))
        .fold(0.0, f64::max);
    let floor = f64::EPSILON * norm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITERATIONS {
                return Err(Error::ConvergenceFailure {
                    iterations: QL_MAX_ITERATIONS,
                    residual: e[l].abs(),
                });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                log.index.push(i as u32);
                log.cs.push([c, s]);
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(log)
}

/// Eigenvectors per back-transformation block. Rows of a block are
/// contiguous, so each rotation and reflector updates whole rows at once.
const VECTOR_BLOCK: usize = 32;

/// Columns `Q Z e_j` for the tridiagonal eigen-indices `cols`, normalized.
fn back_transform(n: usize, cols: &[usize], log: &RotationLog, reflectors: &[Reflector]) -> Vec<Vec<f64>> {
    let w = cols.len();
    let mut y = vec![0.0; n * w];
    for (c, &j) in cols.iter().enumerate() {
        y[j * w + c] = 1.0;
    }
    // Z = R_1 R_2 ... R_T, applied right to left
    for (&i, &[c, s]) in log.index.iter().zip(&log.cs).rev() {
        let i = i as usize;
        let (upper, lower) = y[i * w..(i + 2) * w].split_at_mut(w);
        for (a, b) in upper.iter_mut().zip(lower.iter_mut()) {
            let (yi, yi1) = (*a, *b);
            *a = c * yi + s * yi1;
            *b = -s * yi + c * yi1;
        }
    }
    let mut coef = vec![0.0; w];
    for r in reflectors.iter().rev() {
        coef.iter_mut().for_each(|x| *x = 0.0);
        for (t, vt) in r.v.iter().enumerate() {
            let row = &y[(r.offset + t) * w..(r.offset + t + 1) * w];
            axpy(*vt, row, &mut coef);
        }
        coef.iter_mut().for_each(|x| *x *= -r.beta);
        for (t, vt) in r.v.iter().enumerate() {
            let row = &mut y[(r.offset + t) * w..(r.offset + t + 1) * w];
            axpy(*vt, &coef, row);
        }
    }
    (0..w)
        .map(|c| {
            let mut col: Vec<f64> = (0..n).map(|i| y[i * w + c]).collect();
            let norm = crate::matrixkit::dense::norm2(&col);
            col.iter_mut().for_each(|v| *v /= norm);
            col
        })
        .collect()
}

/// Top-`k` eigenpairs via Householder tridiagonalization and implicit QL.
pub fn tridiagonal_ql_eigen(m: &SymmetricMatrix, k: usize) -> Result<EigenPairs> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyMatrix);
    }
    let k = k.min(n);
    let (mut d, mut e, reflectors) = tridiagonalize(m);
    let log = tridiagonal_ql(&mut d, &mut e)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[b].total_cmp(&d[a]));
    order.truncate(k);

    let blocks: Vec<&[usize]> = order.chunks(VECTOR_BLOCK).collect();
    let columns: Vec<Vec<f64>> = par::map_slice(&blocks, |cols| back_transform(n, cols, &log, &reflectors))
        .into_iter()
        .flatten()
        .collect();
    let values: Vec<f64> = order.iter().map(|&j| d[j]).collect();
    Ok(EigenPairs::from_unsorted(n, values, columns, k))
}
