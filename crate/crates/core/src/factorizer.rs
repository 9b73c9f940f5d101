//! Regularized generalized Rayleigh quotient maximization.
//!
//! The directions maximize `n^T A n / n^T B_reg n`, i.e. solve
//! `A n = λ B_reg n` for the largest `λ`. Both solvers reduce this to an
//! ordinary symmetric problem by congruence:
//!
//! * standard: `B_reg = L L^T`, eigenvectors `ñ` of `L^{-1} A L^{-T}`, `n = L^{-T} ñ`;
//! * fast: thin SVD `J_b = U diag(D) V^T`, eigenvectors `ñ` of
//!   `B_reg^{-1/2} A B_reg^{-1/2}`, `n = B_reg^{-1/2} ñ`, where the inverse
//!   square root comes from the Woodbury form and costs `O(K r)` per vector.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixkit::{
    cholesky, congruence_inverse, dot, norm2, outer_factors, pivoted_cholesky, right_singular_factors, solve_lower_transpose_vec, sym_eigen_top,
    thin_svd, DenseMatrix, EigenPairs, LowRankShift, SymmetricMatrix, DEFAULT_RANK_TOLERANCE,
};
use crate::par;
use crate::regions::{gram, SplitJacobian};

pub const DEFAULT_TAU: f64 = 1e-3;
pub const DEFAULT_TOP: usize = 7;
/// Neighbouring eigenvalues closer than this relative gap share a cluster.
pub const CLUSTER_GAP: f64 = 1e-6;
/// Bound on both stationarity residuals for a valid result.
pub const STATIONARITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub tau: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Standard,
    Fast,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Standard => "standard",
            Method::Fast => "fast",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(Method::Standard),
            "fast" => Ok(Method::Fast),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemanticDirection {
    /// Unit latent vector, largest-magnitude coordinate positive.
    pub vector: Vec<f64>,
    pub eigenvalue: f64,
    /// 1-based position in descending eigenvalue order.
    pub rank_index: usize,
    /// `n^T B_reg n` predicted by the solver for the unit vector. The
    /// unnormalized solver output `n / √b_norm` has `B_reg`-norm one.
    pub b_norm: f64,
    /// Directions with eigenvalues within [`CLUSTER_GAP`] share an id.
    pub cluster: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    pub rank_index: usize,
    /// `‖A n − λ B_reg n‖ / (‖A‖_F + λ‖B_reg‖_F)`.
    pub r1: f64,
    /// `|n^T B_reg n / b_norm − 1|`.
    pub r2: f64,
}

impl StationarityReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.r1 <= tol && self.r2 <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorizationResult {
    pub directions: Vec<SemanticDirection>,
    pub method: Method,
    pub regularizer: Regularizer,
    pub latent_dim: usize,
    /// Numerical rank of `J_b` kept by the fast path.
    pub retained_rank: Option<usize>,
    /// The last returned cluster continues past the requested count, so the
    /// trailing directions are one arbitrary basis of a larger subspace.
    pub boundary_cluster_split: bool,
    pub diagnostics: Vec<StationarityReport>,
}

impl FactorizationResult {
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.directions.iter().map(|d| d.eigenvalue).collect()
    }

    pub fn max_residual(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.r1.max(d.r2)).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizeOptions {
    pub method: Method,
    pub tau: f64,
    pub top: usize,
    pub rank_tolerance: f64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        Self {
            method: Method::Fast,
            tau: DEFAULT_TAU,
            top: DEFAULT_TOP,
            rank_tolerance: DEFAULT_RANK_TOLERANCE,
        }
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::InvalidRegularizer(tau));
    }
    Ok(())
}

fn check_top(top: usize, k: usize) -> Result<usize> {
    if top == 0 {
        return Err(Error::InvalidArgument("top must be at least 1".into()));
    }
    Ok(top.min(k))
}

fn regularizer_from_trace(trace: f64, tau: f64) -> Result<Regularizer> {
    check_tau(tau)?;
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::NumericalInconsistency(format!(
            "background Gram matrix is nonzero but has trace {trace:e}"
        )));
    }
    let a = tau * trace;
    if !(a > 0.0) {
        return Err(Error::InvalidRegularizer(a));
    }
    Ok(Regularizer { tau, a })
}

/// `B_reg = B + τ·tr(B)·I`.
pub fn regularize(b: &SymmetricMatrix, tau: f64) -> Result<(SymmetricMatrix, Regularizer)> {
    check_tau(tau)?;
    if b.is_zero() {
        return Err(Error::ZeroBackgroundJacobian);
    }
    if let Some(i) = b.diag().iter().position(|d| *d < 0.0) {
        return Err(Error::NumericalInconsistency(format!(
            "background Gram matrix has negative diagonal entry at {i}"
        )));
    }
    let reg = regularizer_from_trace(b.trace(), tau)?;
    Ok((b.add_diagonal(reg.a), reg))
}

/// `n^T A n / n^T B_reg n`.
pub fn rayleigh_quotient(n: &[f64], a: &SymmetricMatrix, b_reg: &SymmetricMatrix) -> Result<f64> {
    if n.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroVector);
    }
    let den = b_reg.quad_form(n)?;
    if !(den > 0.0) {
        return Err(Error::NumericalInconsistency(format!(
            "n^T B_reg n = {den:e} is not positive"
        )));
    }
    Ok(a.quad_form(n)? / den)
}

/// Cluster ids over descending values; a new id starts at each relative gap
/// above [`CLUSTER_GAP`].
pub fn cluster_ids(values: &[f64]) -> Vec<usize> {
    let mut ids = Vec::with_capacity(values.len());
    let mut id = 0;
    for (i, v) in values.iter().enumerate() {
        if i > 0 && !same_cluster(values[i - 1], *v) {
            id += 1;
        }
        ids.push(id);
    }
    ids
}

fn same_cluster(x: f64, y: f64) -> bool {
    let scale = x.abs().max(y.abs());
    scale == 0.0 || (x - y).abs() <= CLUSTER_GAP * scale
}

/// Flips `v` so that its largest-magnitude coordinate (first on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Turns reduced eigenpairs into unit directions. `map_back` sends `ñ` to
/// the `B_reg`-normalized `n`.
fn assemble(
    pairs: &EigenPairs,
    top: usize,
    map_back: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
) -> Result<(Vec<SemanticDirection>, bool)> {
    let ids = cluster_ids(pairs.values());
    let boundary = pairs.len() > top && ids[top] == ids[top - 1];
    let columns: Vec<usize> = (0..top).collect();
    let mapped = par::map_slice(&columns, |&i| map_back(&pairs.vector(i)));
    let mut out = Vec::with_capacity(top);
    for (i, n0) in mapped.into_iter().enumerate() {
        let mut n = n0?;
        let s = norm2(&n);
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::NumericalInconsistency(format!(
                "direction {} mapped to a degenerate vector",
                i + 1
            )));
        }
        n.iter_mut().for_each(|x| *x /= s);
        canonical_sign(&mut n);
        out.push(SemanticDirection {
            vector: n,
            // the reduced matrix is PSD; rounding may leave tiny negatives
            eigenvalue: pairs.values()[i].max(0.0),
            rank_index: i + 1,
            b_norm: 1.0 / (s * s),
            cluster: ids[i],
        });
    }
    Ok((out, boundary))
}

/// Cholesky congruence path. `b_reg` must already be regularized.
pub fn factorize_standard(a: &SymmetricMatrix, b_reg: &SymmetricMatrix, top: usize) -> Result<FactorizationResult> {
    factorize_standard_with(a, b_reg, top, Regularizer { tau: 0.0, a: 0.0 })
}

fn factorize_standard_with(
    a: &SymmetricMatrix,
    b_reg: &SymmetricMatrix,
    top: usize,
    regularizer: Regularizer,
) -> Result<FactorizationResult> {
    let k = a.dim();
    if b_reg.dim() != k {
        return Err(Error::DimensionMismatch {
            what: "B_reg dimension",
            expected: k,
            actual: b_reg.dim(),
        });
    }
    if k == 0 {
        return Err(Error::EmptyMatrix);
    }
    let top = check_top(top, k)?;
    let l = cholesky(b_reg)?;
    let s = congruence_inverse(&l, a)?;
    let pairs = sym_eigen_top(&s, (top + 1).min(k))?;
    let (directions, boundary) = assemble(&pairs, top, |y| solve_lower_transpose_vec(&l, y))?;
    let mut result = FactorizationResult {
        directions,
        method: Method::Standard,
        regularizer,
        latent_dim: k,
        retained_rank: None,
        boundary_cluster_split: boundary,
        diagnostics: vec![],
    };
    result.diagnostics = verify_stationarity(&result, a, b_reg)?;
    Ok(result)
}

/// Standard path from the Jacobian blocks: forms both Gram matrices and
/// regularizes the background one.
pub fn factorize_standard_blocks(j_f: &DenseMatrix, j_b: &DenseMatrix, tau: f64, top: usize) -> Result<FactorizationResult> {
    check_blocks(j_f, j_b)?;
    let a = gram(j_f);
    let (b_reg, reg) = regularize(&gram(j_b), tau)?;
    factorize_standard_with(&a, &b_reg, top, reg)
}

fn check_blocks(j_f: &DenseMatrix, j_b: &DenseMatrix) -> Result<()> {
    if j_f.cols() != j_b.cols() {
        return Err(Error::DimensionMismatch {
            what: "background latent dimension",
            expected: j_f.cols(),
            actual: j_b.cols(),
        });
    }
    if j_f.cols() == 0 {
        return Err(Error::EmptyMatrix);
    }
    Ok(())
}

/// Background rows per latent dimension above which the fast path factors
/// `J_b^T J_b` instead of `J_b` itself.
pub const GRAM_ROUTE_ASPECT: usize = 2;

/// `V` and `D` with `J_b^T J_b ≈ V diag(D)² V^T`.
///
/// A tall `J_b` is reduced through its Gram matrix by pivoted Cholesky, which
/// stops once the unfactored remainder has trace at most `rank_tolerance · a`
/// (a relative perturbation of `B_reg` of at most `rank_tolerance`) or its
/// largest pivot falls below `rank_tolerance² · max diag`. Otherwise, and
/// always for `rank_tolerance = 0`, the SVD of `J_b` is taken directly.
fn background_factors(j_b: &DenseMatrix, a: f64, rank_tolerance: f64) -> Result<(DenseMatrix, Vec<f64>)> {
    let (rows, k) = j_b.shape();
    if rank_tolerance > 0.0 && rank_tolerance.is_finite() && rows >= GRAM_ROUTE_ASPECT * k {
        let b = gram(j_b);
        let largest = b.diag().into_iter().fold(0.0, f64::max);
        let pc = pivoted_cholesky(&b, |_, pivot, rest| {
            pivot <= rank_tolerance * rank_tolerance * largest || rest <= rank_tolerance * a
        });
        if pc.factor.cols() == 0 {
            return Ok((DenseMatrix::zeros(k, 0), vec![]));
        }
        outer_factors(&pc.factor, rank_tolerance)
    } else {
        let svd = right_singular_factors(j_b, rank_tolerance)?;
        Ok((svd.v, svd.singular_values))
    }
}

/// `B_reg^{-1/2} A B_reg^{-1/2}` with `A = J_f^T J_f`.
///
/// With fewer foreground rows than latents this is the Gram matrix of
/// `J_f B_reg^{-1/2}`. Otherwise `a·S = A − (P E^T + E P^T)` with
/// `P = V diag(ŝ)`, `C = A V` and `E = C − ½ P (V^T C)`.
fn reduced_fast(j_f: &DenseMatrix, a: Option<&SymmetricMatrix>, op: &LowRankShift) -> Result<SymmetricMatrix> {
    let Some(a) = a else {
        let y = op.apply_inverse_sqrt(&j_f.transpose())?;
        return Ok(gram(&y.transpose()));
    };
    let k = a.dim();
    let v = op.v();
    let r = op.rank();
    let s_hat = op.s_hat();
    let c = a.to_dense().matmul(v)?;
    let m = v.transpose().matmul(&c)?;
    let mut p = v.clone();
    for i in 0..k {
        for j in 0..r {
            p.set(i, j, v.get(i, j) * s_hat[j]);
        }
    }
    let pm = p.matmul(&m)?;
    let mut e = c;
    for i in 0..k {
        for j in 0..r {
            e.set(i, j, e.get(i, j) - 0.5 * pm.get(i, j));
        }
    }
    let scale = 1.0 / op.a();
    let mut data = vec![0.0; k * k];
    par::for_each_chunk_mut(&mut data, k, |i, row| {
        let (pi, ei) = (p.row(i), e.row(i));
        for j in i..k {
            row[j] = scale * (a.get(i, j) - dot(pi, e.row(j)) - dot(ei, p.row(j)));
        }
    });
    Ok(SymmetricMatrix::from_upper_storage(k, data))
}

/// `M^T M x` without forming `M^T M`.
fn gram_apply(m: &DenseMatrix, x: &[f64]) -> Result<Vec<f64>> {
    m.t_matvec(&m.matvec(x)?)
}

/// Woodbury path from the Jacobian blocks. `rank_tolerance` truncates the
/// background factorization; with 0 the result matches the standard path.
pub fn factorize_fast(
    j_f: &DenseMatrix,
    j_b: &DenseMatrix,
    tau: f64,
    rank_tolerance: f64,
    top: usize,
) -> Result<FactorizationResult> {
    check_blocks(j_f, j_b)?;
    check_tau(tau)?;
    if !(rank_tolerance >= 0.0) || !rank_tolerance.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "rank tolerance must be finite and non-negative, got {rank_tolerance}"
        )));
    }
    let k = j_f.cols();
    let top = check_top(top, k)?;
    let trace_b: f64 = j_b.data().iter().map(|x| x * x).sum();
    if trace_b == 0.0 {
        return Err(Error::ZeroBackgroundJacobian);
    }
    let reg = regularizer_from_trace(trace_b, tau)?;
    let (v, d) = background_factors(j_b, reg.a, rank_tolerance)?;
    let op = LowRankShift::new(v, d, reg.a)?;
    let wide = j_f.rows() < k;
    let a = if wide { None } else { Some(gram(j_f)) };
    let s = reduced_fast(j_f, a.as_ref(), &op)?;
    let pairs = sym_eigen_top(&s, (top + 1).min(k))?;
    let (directions, boundary) = assemble(&pairs, top, |y| op.apply_inverse_sqrt_vec(y))?;
    let mut result = FactorizationResult {
        directions,
        method: Method::Fast,
        regularizer: reg,
        latent_dim: k,
        retained_rank: Some(op.rank()),
        boundary_cluster_split: boundary,
        diagnostics: vec![],
    };
    // ‖J_f^T J_f‖_F = ‖J_f J_f^T‖_F
    let a_frob = match &a {
        Some(a) => a.frobenius_norm(),
        None => gram(&j_f.transpose()).frobenius_norm(),
    };
    // residuals against the full background Jacobian, not the truncated operator
    let b_frob = {
        let sq: f64 = op
            .singular_values()
            .iter()
            .map(|d| (d * d + reg.a).powi(2))
            .sum::<f64>()
            + (k - op.rank()) as f64 * reg.a * reg.a;
        sq.sqrt()
    };
    result.diagnostics = stationarity_with(
        &result,
        |n| gram_apply(j_f, n),
        a_frob,
        |n| {
            let mut out = gram_apply(j_b, n)?;
            out.iter_mut().zip(n).for_each(|(o, x)| *o += reg.a * x);
            Ok(out)
        },
        b_frob,
    )?;
    Ok(result)
}

/// Runs the configured path on a split Jacobian.
pub fn factorize(split: &SplitJacobian, options: &FactorizeOptions) -> Result<FactorizationResult> {
    match options.method {
        Method::Standard => factorize_standard_blocks(&split.foreground, &split.background, options.tau, options.top),
        Method::Fast => factorize_fast(
            &split.foreground,
            &split.background,
            options.tau,
            options.rank_tolerance,
            options.top,
        ),
    }
}

/// Residuals of `A n = λ B_reg n` and of the `B_reg`-normalization.
pub fn verify_stationarity(
    result: &FactorizationResult,
    a: &SymmetricMatrix,
    b_reg: &SymmetricMatrix,
) -> Result<Vec<StationarityReport>> {
    if b_reg.dim() != a.dim() {
        return Err(Error::DimensionMismatch {
            what: "B_reg dimension",
            expected: a.dim(),
            actual: b_reg.dim(),
        });
    }
    stationarity_with(
        result,
        |n| a.matvec(n),
        a.frobenius_norm(),
        |n| b_reg.matvec(n),
        b_reg.frobenius_norm(),
    )
}

fn stationarity_with(
    result: &FactorizationResult,
    apply_a: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
    a_frob: f64,
    apply_b: impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + Send,
    b_frob: f64,
) -> Result<Vec<StationarityReport>> {
    let reports = par::map_slice(&result.directions, |d| -> Result<StationarityReport> {
        let an = apply_a(&d.vector)?;
        let bn = apply_b(&d.vector)?;
        let resid: Vec<f64> = an.iter().zip(&bn).map(|(x, y)| x - d.eigenvalue * y).collect();
        let denom = a_frob + d.eigenvalue * b_frob;
        let r1 = if denom > 0.0 { norm2(&resid) / denom } else { norm2(&resid) };
        let r2 = if d.b_norm > 0.0 {
            (dot(&d.vector, &bn) / d.b_norm - 1.0).abs()
        } else {
            f64::INFINITY
        };
        Ok(StationarityReport {
            rank_index: d.rank_index,
            r1,
            r2,
        })
    });
    reports.into_iter().collect()
}

/// Angle between two lines, `0 ≤ θ ≤ π/2`, accurate for small angles.
pub fn angular_distance(u: &[f64], v: &[f64]) -> f64 {
    let (nu, nv) = (norm2(u), norm2(v));
    let chord = |sign: f64| {
        let d: Vec<f64> = u.iter().zip(v).map(|(x, y)| x / nu - sign * y / nv).collect();
        norm2(&d)
    };
    let c = chord(1.0).min(chord(-1.0));
    2.0 * (0.5 * c).min(1.0).asin()
}

/// Largest principal angle between the spans of two equally sized vector
/// sets (vectors need not be orthonormal).
pub fn subspace_angle(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() {
        return Err(Error::InvalidArgument("subspaces must have equal nonzero dimension".into()));
    }
    let k = a[0].len();
    let qa = thin_svd(&DenseMatrix::from_columns(k, a)?, 0.0)?.u;
    let qb = thin_svd(&DenseMatrix::from_columns(k, b)?, 0.0)?.u;
    if qa.cols() != a.len() || qb.cols() != b.len() {
        return Err(Error::InvalidArgument("vector set is rank deficient".into()));
    }
    // sin θ_max = ‖(I − Qa Qa^T) Qb‖₂
    let proj = qa.matmul(&qa.transpose().matmul(&qb)?)?;
    let resid = DenseMatrix::new(
        k,
        qb.cols(),
        qb.data().iter().zip(proj.data()).map(|(x, y)| x - y).collect(),
    )?;
    let sigma = thin_svd(&resid, 0.0)?.singular_values;
    Ok(sigma.first().copied().unwrap_or(0.0).min(1.0).asin())
}

/// Largest cluster-aware angle between two results over their common
/// directions. Each cluster of `reference` is compared as a subspace; a
/// cluster cut by the end of either result is skipped.
pub fn max_direction_angle(reference: &FactorizationResult, other: &FactorizationResult) -> Result<f64> {
    let n = reference.directions.len().min(other.directions.len());
    let mut worst: f64 = 0.0;
    let mut start = 0;
    while start < n {
        let id = reference.directions[start].cluster;
        let mut end = start;
        while end < reference.directions.len() && reference.directions[end].cluster == id {
            end += 1;
        }
        let cut = end > n || (end == reference.directions.len() && reference.boundary_cluster_split);
        if !cut {
            let left: Vec<Vec<f64>> = reference.directions[start..end].iter().map(|d| d.vector.clone()).collect();
            let right: Vec<Vec<f64>> = other.directions[start..end].iter().map(|d| d.vector.clone()).collect();
            let angle = if end - start == 1 {
                angular_distance(&left[0], &right[0])
            } else {
                subspace_angle(&left, &right)?
            };
            worst = worst.max(angle);
        }
        start = end;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrixkit::DenseMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn diag(v: &[f64]) -> SymmetricMatrix {
        SymmetricMatrix::diagonal(v).unwrap()
    }

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal)).unwrap()
    }

    fn low_rank(rng: &mut ChaCha8Rng, rows: usize, cols: usize, rank: usize) -> DenseMatrix {
        random_matrix(rng, rows, rank).matmul(&random_matrix(rng, rank, cols)).unwrap()
    }

    #[test]
    fn regularize_examples() {
        let (b, reg) = regularize(&diag(&[1.0, 4.0]), 1e-3).unwrap();
        assert!((reg.a - 0.005).abs() < 1e-18);
        assert_eq!(b.diag(), vec![1.005, 4.005]);
        assert_eq!(b.get(0, 1), 0.0);

        let (b, _) = regularize(&SymmetricMatrix::identity(5), 1e-3).unwrap();
        assert_eq!(b, SymmetricMatrix::identity(5).scaled(1.0 + 1e-3 * 5.0));

        assert!(matches!(
            regularize(&diag(&[0.0, 0.0]), 1e-3),
            Err(Error::ZeroBackgroundJacobian)
        ));
        assert!(matches!(regularize(&diag(&[1.0]), 0.0), Err(Error::InvalidRegularizer(_))));
        let indefinite = SymmetricMatrix::from_upper_fn(2, |i, j| [[0.0, 1.0], [1.0, 0.0]][i][j]).unwrap();
        assert!(matches!(
            regularize(&indefinite, 1e-3),
            Err(Error::NumericalInconsistency(_))
        ));
    }

    #[test]
    fn diagonal_standard_case() {
        let a = diag(&[4.0, 1.0]);
        let b = diag(&[1.005, 4.005]);
        let r = factorize_standard(&a, &b, 2).unwrap();
        assert!((r.directions[0].eigenvalue - 4.0 / 1.005).abs() < 1e-14);
        assert!((r.directions[1].eigenvalue - 1.0 / 4.005).abs() < 1e-14);
        assert_eq!(r.directions[0].vector, vec![1.0, 0.0]);
        assert_eq!(r.directions[1].vector, vec![0.0, 1.0]);
        assert!((r.directions[0].eigenvalue - 3.98010).abs() < 1e-5);
        assert!(r.max_residual() <= 1e-15);
    }

    #[test]
    fn diagonal_fast_case_matches() {
        // J_f^T J_f = diag(4, 1), J_b^T J_b = diag(1, 4), τ = 1e-3 gives a = 0.005
        let jf = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let jb = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap();
        let fast = factorize_fast(&jf, &jb, 1e-3, 0.0, 2).unwrap();
        let std = factorize_standard_blocks(&jf, &jb, 1e-3, 2).unwrap();
        assert_eq!(fast.regularizer, std.regularizer);
        for (f, s) in fast.directions.iter().zip(&std.directions) {
            assert!((f.eigenvalue - s.eigenvalue).abs() <= 1e-12 * s.eigenvalue, "{} {}", f.eigenvalue, s.eigenvalue);
            assert!(angular_distance(&f.vector, &s.vector) < 1e-12);
        }
        // the Woodbury form cancels at the scale of 1/a, here 200
        assert!((fast.directions[0].eigenvalue - 4.0 / 1.005).abs() < 1e-12);
        assert!((fast.directions[1].eigenvalue - 1.0 / 4.005).abs() < 1e-12 * 0.25);
        assert_eq!(fast.retained_rank, Some(2));
    }

    #[test]
    fn identity_pair_is_degenerate() {
        let r = factorize_standard(&SymmetricMatrix::identity(3), &SymmetricMatrix::identity(3), 3).unwrap();
        assert_eq!(r.eigenvalues(), vec![1.0; 3]);
        assert!(r.directions.iter().all(|d| d.cluster == 0));
        assert!(r.diagnostics.iter().all(|d| d.r1 == 0.0));
    }

    #[test]
    fn rank_deficient_background_needs_regularization() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let row = random_matrix(&mut rng, 1, 6);
        let jb = DenseMatrix::from_rows(&[row.row(0).to_vec(), row.row(0).to_vec()]).unwrap();
        let jf = random_matrix(&mut rng, 4, 6);
        assert!(matches!(cholesky(&gram(&jb)), Err(Error::NotPositiveDefinite { .. })));
        let r = factorize_fast(&jf, &jb, 1e-3, DEFAULT_RANK_TOLERANCE, 3).unwrap();
        assert_eq!(r.retained_rank, Some(1));
        assert!(r.max_residual() <= STATIONARITY_TOLERANCE);
        assert!(factorize_standard_blocks(&jf, &jb, 1e-3, 3).is_ok());
    }

    #[test]
    fn zero_background_is_reported() {
        let jf = DenseMatrix::identity(2);
        let jb = DenseMatrix::zeros(3, 2);
        assert!(matches!(factorize_fast(&jf, &jb, 1e-3, 0.0, 1), Err(Error::ZeroBackgroundJacobian)));
        assert!(matches!(
            factorize_standard_blocks(&jf, &jb, 1e-3, 1),
            Err(Error::ZeroBackgroundJacobian)
        ));
    }

    #[test]
    fn rayleigh_quotient_examples() {
        let a = diag(&[4.0, 1.0]);
        let b = diag(&[1.005, 4.005]);
        let q = rayleigh_quotient(&[1.0, 0.0], &a, &b).unwrap();
        assert!((q - 3.980_099_502_487_562).abs() < 1e-15);
        let n = [0.3, -0.7];
        let twice = [0.6, -1.4];
        assert_eq!(rayleigh_quotient(&n, &a, &b).unwrap(), rayleigh_quotient(&twice, &a, &b).unwrap());
        assert!(matches!(rayleigh_quotient(&[0.0, 0.0], &a, &b), Err(Error::ZeroVector)));
    }

    #[test]
    fn random_paths_agree_and_are_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..12 {
            let k = rng.random_range(4..80);
            let r = rng.random_range(1..=k);
            let jf = random_matrix(&mut rng, 20, k);
            let jb = low_rank(&mut rng, 3 * k, k, r);
            let std = factorize_standard_blocks(&jf, &jb, 1e-3, 7).unwrap();
            let fast = factorize_fast(&jf, &jb, 1e-3, 0.0, 7).unwrap();
            for (f, s) in fast.directions.iter().zip(&std.directions) {
                assert!((f.eigenvalue - s.eigenvalue).abs() <= 1e-8 * s.eigenvalue, "trial {trial}");
            }
            assert!(max_direction_angle(&std, &fast).unwrap() <= 1e-6, "trial {trial}");
            assert!(std.max_residual() <= STATIONARITY_TOLERANCE);
            assert!(fast.max_residual() <= STATIONARITY_TOLERANCE);

            // B-orthogonality of the returned directions
            let (b_reg, _) = regularize(&gram(&jb), 1e-3).unwrap();
            for i in 0..std.directions.len() {
                for j in 0..i {
                    let (ni, nj) = (&std.directions[i].vector, &std.directions[j].vector);
                    let cross = b_reg.bilinear(ni, nj).unwrap();
                    let scale = (b_reg.quad_form(ni).unwrap() * b_reg.quad_form(nj).unwrap()).sqrt();
                    assert!(cross.abs() <= 1e-8 * scale);
                }
            }
        }
    }

    #[test]
    fn tall_and_wide_blocks_match_standard() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for trial in 0..8 {
            let k = rng.random_range(8..90);
            let r = rng.random_range(1..=k);
            let rows_f = if trial % 2 == 0 { k / 2 + 1 } else { 2 * k };
            let jf = random_matrix(&mut rng, rows_f, k);
            let jb = low_rank(&mut rng, GRAM_ROUTE_ASPECT * k + 3, k, r);
            let std = factorize_standard_blocks(&jf, &jb, 1e-3, 5).unwrap();
            let fast = factorize_fast(&jf, &jb, 1e-3, DEFAULT_RANK_TOLERANCE, 5).unwrap();
            assert_eq!(fast.retained_rank, Some(r), "trial {trial}");
            for (f, s) in fast.directions.iter().zip(&std.directions) {
                assert!((f.eigenvalue - s.eigenvalue).abs() <= 1e-8 * s.eigenvalue, "trial {trial}");
            }
            assert!(max_direction_angle(&std, &fast).unwrap() <= 1e-6);
            assert!(fast.max_residual() <= STATIONARITY_TOLERANCE);
        }
    }

    #[test]
    fn perturbed_direction_breaks_stationarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let jf = random_matrix(&mut rng, 10, 6);
        let jb = random_matrix(&mut rng, 30, 6);
        let a = gram(&jf);
        let (b_reg, _) = regularize(&gram(&jb), 1e-3).unwrap();
        let mut r = factorize_standard(&a, &b_reg, 3).unwrap();
        r.directions[0].vector[1] += 1e-3;
        let report = verify_stationarity(&r, &a, &b_reg).unwrap();
        assert!(report[0].r1 > 1e-5);
        assert!(report[1].passes(STATIONARITY_TOLERANCE));
    }

    #[test]
    fn sign_convention() {
        let mut v = vec![0.1, -0.9, 0.3];
        canonical_sign(&mut v);
        assert_eq!(v, vec![-0.1, 0.9, -0.3]);
        let mut tie = vec![-0.5, 0.5];
        canonical_sign(&mut tie);
        assert_eq!(tie, vec![0.5, -0.5]);
    }

    #[test]
    fn clusters_and_angles() {
        assert_eq!(cluster_ids(&[3.0, 3.0 * (1.0 - 1e-7), 2.0, 0.0, 0.0]), vec![0, 0, 1, 2, 2]);
        assert!(angular_distance(&[1.0, 0.0], &[-2.0, 0.0]) == 0.0);
        let t: f64 = 1e-9;
        let angle = angular_distance(&[1.0, 0.0], &[t.cos(), t.sin()]);
        assert!((angle - t).abs() < 1e-20);
        let e = |i: usize| {
            let mut v = vec![0.0; 3];
            v[i] = 1.0;
            v
        };
        let same = subspace_angle(&[e(0), e(1)], &[vec![1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0]]).unwrap();
        assert!(same < 1e-15);
        let orth = subspace_angle(&[e(0)], &[e(2)]).unwrap();
        assert!((orth - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn top_is_clamped_and_validated() {
        let r = factorize_standard(&diag(&[1.0, 2.0]), &SymmetricMatrix::identity(2), 9).unwrap();
        assert_eq!(r.directions.len(), 2);
        assert!(factorize_standard(&diag(&[1.0]), &SymmetricMatrix::identity(1), 0).is_err());
    }
}
