//! Thin SVD by column-pivoted Householder QR followed by one-sided Jacobi on
//! the small triangular factor.
//!
//! The pivoted QR touches the tall matrix only `O(m n r)` times, where `r` is
//! the numerical rank, so a rank-deficient background Jacobian never pays for
//! a full `n × n` decomposition. The second QR (of `R^T`) preconditions the
//! Jacobi stage, which then converges in a handful of sweeps and keeps small
//! singular values accurate to working precision relative to `σ_max`.

use crate::error::{Error, Result};
use crate::matrixkit::dense::{axpy, dot, norm2, DenseMatrix, SymmetricMatrix};
use crate::matrixkit::eigen::sym_eigendecompose;
use crate::par;

/// Relative singular-value cutoff used when none is given.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-10;
const JACOBI_SVD_MAX_SWEEPS: usize = 100;

/// `M ≈ U diag(D) V^T` with `D` strictly positive and non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        let (m, n, r) = (self.u.rows(), self.v.rows(), self.rank());
        let mut out = DenseMatrix::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..r {
                    s += self.u.get(i, k) * self.singular_values[k] * self.v.get(j, k);
                }
                out.set(i, j, s);
            }
        }
        out
    }
}

/// Right singular vectors and values only.
#[derive(Debug, Clone, PartialEq)]
pub struct RightSingularFactors {
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl RightSingularFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }
}

struct PivotedQr {
    m: usize,
    /// column-major `m × n` working buffer; row `i < rank` of column `j` holds `R[i][j]`
    cols: Vec<f64>,
    /// Householder vectors; reflector `j` acts on rows `j..m`
    reflectors: Vec<(Vec<f64>, f64)>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    fn r_row(&self, i: usize, n: usize) -> Vec<f64> {
        (0..n).map(|j| if j >= i { self.cols[j * self.m + i] } else { 0.0 }).collect()
    }

    /// `Q [y; 0]` for a vector of length `rank`.
    fn apply_q(&self, y: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.m];
        x[..y.len()].copy_from_slice(y);
        for (j, (v, beta)) in self.reflectors.iter().enumerate().rev() {
            let tail = &mut x[j..];
            let coef = -beta * dot(v, tail);
            axpy(coef, v, tail);
        }
        x
    }
}

/// Column-pivoted Householder QR of an `m × n` column-major matrix. Stops at
/// step `j` once `stop(j, largest remaining column norm)` holds.
fn pivoted_qr(mut cols: Vec<f64>, m: usize, n: usize, stop: impl Fn(usize, f64) -> bool) -> PivotedQr {
    let mut norms: Vec<f64> = (0..n).map(|j| norm2(&cols[j * m..(j + 1) * m])).collect();
    let mut reference = norms.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut reflectors = Vec::new();
    let tol3z = f64::EPSILON.sqrt();
    let steps = m.min(n);
    let mut rank = 0;
    for j in 0..steps {
        let mut p = j;
        for q in j + 1..n {
            if norms[q] > norms[p] {
                p = q;
            }
        }
        if p != j {
            for i in 0..m {
                cols.swap(j * m + i, p * m + i);
            }
            norms.swap(j, p);
            reference.swap(j, p);
            perm.swap(j, p);
        }
        if norms[j] == 0.0 || stop(j, norms[j]) {
            break;
        }
        let x = &cols[j * m + j..(j + 1) * m];
        let xnorm = norm2(x);
        if xnorm == 0.0 {
            break;
        }
        let alpha = if x[0] >= 0.0 { -xnorm } else { xnorm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vv = dot(&v, &v);
        let beta = if vv == 0.0 { 0.0 } else { 2.0 / vv };
        cols[j * m + j] = alpha;
        for i in j + 1..m {
            cols[j * m + i] = 0.0;
        }
        let trailing = &mut cols[(j + 1) * m..];
        par::for_each_chunk_mut(trailing, m, |_, col| {
            let tail = &mut col[j..];
            let coef = -beta * dot(&v, tail);
            axpy(coef, &v, tail);
        });
        for q in j + 1..n {
            if norms[q] == 0.0 {
                continue;
            }
            let rjq = cols[q * m + j].abs() / norms[q];
            let temp = (1.0 - rjq * rjq).max(0.0);
            let ratio = norms[q] / reference[q];
            if temp * ratio * ratio <= tol3z {
                norms[q] = norm2(&cols[q * m + j + 1..(q + 1) * m]);
                reference[q] = norms[q];
            } else {
                norms[q] *= temp.sqrt();
            }
        }
        reflectors.push((v, beta));
        rank = j + 1;
    }
    PivotedQr {
        m,
        cols,
        reflectors,
        perm,
        rank,
    }
}

/// One-sided Jacobi on the columns of a column-major `rows × ncols` matrix.
/// Returns the rotated columns and the accumulated right rotation `W`
/// (column-major `ncols × ncols`).
fn one_sided_jacobi(mut x: Vec<f64>, rows: usize, ncols: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut w = vec![0.0; ncols * ncols];
    for i in 0..ncols {
        w[i * ncols + i] = 1.0;
    }
    let threshold = f64::EPSILON * (rows.max(1) as f64);
    for _ in 0..JACOBI_SVD_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..ncols {
            for q in p + 1..ncols {
                let (xp, xq) = (&x[p * rows..(p + 1) * rows], &x[q * rows..(q + 1) * rows]);
                let alpha = dot(xp, xp);
                let beta = dot(xq, xq);
                let gamma = dot(xp, xq);
                if alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                if gamma.abs() <= threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(&mut x, rows, p, q, c, s);
                rotate_columns(&mut w, ncols, p, q, c, s);
            }
        }
        if !rotated {
            return Ok((x, w));
        }
    }
    let mut worst: f64 = 0.0;
    for p in 0..ncols {
        for q in p + 1..ncols {
            let (xp, xq) = (&x[p * rows..(p + 1) * rows], &x[q * rows..(q + 1) * rows]);
            let denom = (dot(xp, xp) * dot(xq, xq)).sqrt();
            if denom > 0.0 {
                worst = worst.max(dot(xp, xq).abs() / denom);
            }
        }
    }
    Err(Error::ConvergenceFailure {
        iterations: JACOBI_SVD_MAX_SWEEPS,
        residual: worst,
    })
}

fn rotate_columns(buf: &mut [f64], len: usize, p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = buf.split_at_mut(q * len);
    let cp = &mut head[p * len..(p + 1) * len];
    let cq = &mut tail[..len];
    for (a, b) in cp.iter_mut().zip(cq.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = c * x - s * y;
        *b = s * x + c * y;
    }
}

struct Core {
    stage1: PivotedQr,
    /// `U_s` columns (length `stage1.rank`) permuted back to stage-1 row order
    left: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    /// right singular vectors in the original column order
    right: Vec<Vec<f64>>,
}

fn check_tolerance(rank_tolerance: f64) -> Result<()> {
    if !(rank_tolerance >= 0.0) || !rank_tolerance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be a non-negative finite number, got {rank_tolerance}"
        )));
    }
    Ok(())
}

fn svd_core(m: &DenseMatrix, rank_tolerance: f64) -> Result<Core> {
    check_tolerance(rank_tolerance)?;
    let (rows, n) = m.shape();
    let colmajor = m.transpose().into_data();
    let sigma_estimate = (0..n)
        .map(|j| norm2(&colmajor[j * rows..(j + 1) * rows]))
        .fold(0.0, f64::max);
    let stage1 = pivoted_qr(colmajor, rows, n, |j, remaining| {
        // the dropped block has spectral norm at most sqrt(n - j) * remaining
        rank_tolerance > 0.0
            && remaining * ((n - j) as f64).sqrt() <= rank_tolerance * sigma_estimate
    });
    let r1 = stage1.rank;
    if r1 == 0 {
        return Ok(Core {
            stage1,
            left: Vec::new(),
            sigma: Vec::new(),
            right: Vec::new(),
        });
    }

    // R^T as column-major n × r1: column i is row i of R
    let mut rt = Vec::with_capacity(n * r1);
    for i in 0..r1 {
        rt.extend(stage1.r_row(i, n));
    }
    let stage2 = pivoted_qr(rt, n, r1, |_, _| false);
    let r2 = stage2.rank;

    // T^T (r1 × r2) column-major: column i is row i of T (length r1)
    let mut tt = vec![0.0; r1 * r2];
    for i in 0..r2 {
        for (q, slot) in tt[i * r1..(i + 1) * r1].iter_mut().enumerate() {
            *slot = if q >= i { stage2.cols[q * n + i] } else { 0.0 };
        }
    }
    let (x, w) = one_sided_jacobi(tt, r1, r2)?;

    let mut entries: Vec<(f64, usize)> = (0..r2).map(|j| (norm2(&x[j * r1..(j + 1) * r1]), j)).collect();
    entries.sort_by(|a, b| b.0.total_cmp(&a.0));
    let sigma_max = entries.first().map_or(0.0, |e| e.0);
    let cutoff = rank_tolerance * sigma_max;
    entries.retain(|(s, _)| *s > 0.0 && *s > cutoff);

    let mut left = Vec::with_capacity(entries.len());
    let mut right = Vec::with_capacity(entries.len());
    let mut sigma = Vec::with_capacity(entries.len());
    for &(s, j) in &entries {
        // Π2 U_s: stage-2 column i came from row perm2[i] of R
        let us = &x[j * r1..(j + 1) * r1];
        let mut l = vec![0.0; r1];
        for (i, &src) in stage2.perm.iter().enumerate() {
            l[src] = us[i] / s;
        }
        left.push(l);
        // Π Q2 W: stage-1 column i came from column perm1[i] of M
        let q2w = stage2.apply_q(&w[j * r2..(j + 1) * r2]);
        let mut v = vec![0.0; n];
        for (i, &src) in stage1.perm.iter().enumerate() {
            v[src] = q2w[i];
        }
        right.push(v);
        sigma.push(s);
    }
    Ok(Core {
        stage1,
        left,
        sigma,
        right,
    })
}

/// Thin SVD with relative rank cutoff: singular values `≤ rank_tolerance · σ_max`
/// are dropped. An all-zero matrix yields rank 0.
pub fn thin_svd(m: &DenseMatrix, rank_tolerance: f64) -> Result<SvdFactors> {
    let core = svd_core(m, rank_tolerance)?;
    let (rows, n) = m.shape();
    let u_cols: Vec<Vec<f64>> = core.left.iter().map(|l| core.stage1.apply_q(l)).collect();
    Ok(SvdFactors {
        u: DenseMatrix::from_columns(rows, &u_cols)?,
        singular_values: core.sigma,
        v: DenseMatrix::from_columns(n, &core.right)?,
    })
}

/// As [`thin_svd`] without forming `U`.
pub fn right_singular_factors(m: &DenseMatrix, rank_tolerance: f64) -> Result<RightSingularFactors> {
    let core = svd_core(m, rank_tolerance)?;
    Ok(RightSingularFactors {
        singular_values: core.sigma,
        v: DenseMatrix::from_columns(m.cols(), &core.right)?,
    })
}

/// Eigenfactors of `F F^T` for a tall `F`: `V` and `σ` with
/// `F F^T ≈ V diag(σ)² V^T`, from `F Π = Q R` and the eigendecomposition of
/// `R R^T`. Backward stable at the level of `F F^T`, which is cheaper than a
/// full SVD when only the outer product matters. Values `≤ rank_tolerance · σ_max`
/// are dropped.
pub fn outer_factors(f: &DenseMatrix, rank_tolerance: f64) -> Result<(DenseMatrix, Vec<f64>)> {
    check_tolerance(rank_tolerance)?;
    let (rows, n) = f.shape();
    let qr = pivoted_qr(f.transpose().into_data(), rows, n, |_, _| false);
    let r = qr.rank;
    if r == 0 {
        return Ok((DenseMatrix::zeros(rows, 0), Vec::new()));
    }
    let r_rows: Vec<Vec<f64>> = (0..r).map(|i| qr.r_row(i, n)).collect();
    let rrt = SymmetricMatrix::from_upper_fn(r, |i, j| dot(&r_rows[i][j..], &r_rows[j][j..]))?;
    let eig = sym_eigendecompose(&rrt)?;
    let top = eig.values()[0].max(0.0).sqrt();
    let kept = eig
        .values()
        .iter()
        .take_while(|&&l| l > 0.0 && l.sqrt() > rank_tolerance * top)
        .count();
    let order: Vec<usize> = (0..kept).collect();
    let cols = par::map_slice(&order, |&i| qr.apply_q(&eig.vector(i)));
    let sigma = eig.values()[..kept].iter().map(|l| l.sqrt()).collect();
    Ok((DenseMatrix::from_columns(rows, &cols)?, sigma))
}
