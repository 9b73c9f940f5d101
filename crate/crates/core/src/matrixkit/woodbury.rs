//! Inverse and inverse square root of `B_reg = V diag(D)² V^T + a I` for `V`
//! with orthonormal columns.
//!
//! Woodbury gives `B_reg^{-1} = (1/a)(I − V diag(D̃) V^T)` with
//! `D̃_i = d_i² / (a + d_i²)`, and the same eigenbasis gives
//! `B_reg^{-1/2} = a^{-1/2}(I − V diag(ŝ) V^T)` with `ŝ_i = 1 − √(a / (a + d_i²))`.
//! Both reduce to diagonal work on `r` values plus products with `V`.

use crate::error::{Error, Result};
use crate::matrixkit::dense::{dot, DenseMatrix, SymmetricMatrix};

/// Regularized low-rank operator `B_reg = V diag(D)² V^T + a I`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankShift {
    v: DenseMatrix,
    d: Vec<f64>,
    a: f64,
}

impl LowRankShift {
    pub fn new(v: DenseMatrix, d: Vec<f64>, a: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidRegularizer(a));
        }
        if v.cols() != d.len() {
            return Err(Error::DimensionMismatch {
                what: "singular value count",
                expected: v.cols(),
                actual: d.len(),
            });
        }
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("singular values must be finite".into()));
        }
        Ok(Self { v, d, a })
    }

    pub fn dim(&self) -> usize {
        self.v.rows()
    }

    pub fn rank(&self) -> usize {
        self.d.len()
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn v(&self) -> &DenseMatrix {
        &self.v
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.d
    }

    /// `B_reg x`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let d2: Vec<f64> = self.d.iter().map(|d| d * d).collect();
        let mut out: Vec<f64> = x.iter().map(|v| self.a * v).collect();
        self.add_low_rank(x, &d2, 1.0, &mut out)?;
        Ok(out)
    }

    /// `out += sign · V diag(weights) V^T x`.
    fn add_low_rank(&self, x: &[f64], weights: &[f64], sign: f64, out: &mut [f64]) -> Result<()> {
        let t = self.v.t_matvec(x)?;
        let scaled: Vec<f64> = t.iter().zip(weights).map(|(t, w)| sign * t * w).collect();
        for (i, o) in out.iter_mut().enumerate() {
            *o += dot(self.v.row(i), &scaled);
        }
        Ok(())
    }

    pub fn d_tilde(&self) -> Vec<f64> {
        self.d.iter().map(|d| d * d / (self.a + d * d)).collect()
    }

    pub fn s_hat(&self) -> Vec<f64> {
        self.d.iter().map(|d| 1.0 - (self.a / (self.a + d * d)).sqrt()).collect()
    }

    pub fn inverse_factors(&self) -> WoodburyInverse {
        WoodburyInverse {
            scale: 1.0 / self.a,
            v: self.v.clone(),
            d_tilde: self.d_tilde(),
        }
    }

    /// `B_reg^{-1/2} x`.
    pub fn apply_inverse_sqrt_vec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = x.to_vec();
        self.add_low_rank(x, &self.s_hat(), -1.0, &mut out)?;
        let scale = self.a.sqrt().recip();
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }

    /// `B_reg^{-1/2} X` for a `K × m` block.
    pub fn apply_inverse_sqrt(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        apply_shifted_projection(&self.v, &self.s_hat(), self.a.sqrt().recip(), x)
    }

    pub fn to_symmetric(&self) -> SymmetricMatrix {
        let d2: Vec<f64> = self.d.iter().map(|d| d * d).collect();
        let vs = scale_columns(&self.v, &d2);
        let n = self.dim();
        SymmetricMatrix::from_upper_fn(n, |i, j| {
            dot(vs.row(i), self.v.row(j)) + if i == j { self.a } else { 0.0 }
        })
        .expect("finite operator")
    }
}

/// Factored `B_reg^{-1} = scale · (I − V diag(D̃) V^T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WoodburyInverse {
    pub scale: f64,
    pub v: DenseMatrix,
    pub d_tilde: Vec<f64>,
}

impl WoodburyInverse {
    pub fn apply(&self, x: &DenseMatrix) -> Result<DenseMatrix> {
        apply_shifted_projection(&self.v, &self.d_tilde, self.scale, x)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        self.apply(&DenseMatrix::identity(self.v.rows()))
            .expect("square identity matches")
    }
}

fn scale_columns(m: &DenseMatrix, w: &[f64]) -> DenseMatrix {
    let mut out = m.clone();
    let c = m.cols();
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        *v *= w[i % c];
    }
    out
}

/// `scale · (X − V diag(w) V^T X)`.
fn apply_shifted_projection(v: &DenseMatrix, w: &[f64], scale: f64, x: &DenseMatrix) -> Result<DenseMatrix> {
    if x.rows() != v.rows() {
        return Err(Error::DimensionMismatch {
            what: "operand rows",
            expected: v.rows(),
            actual: x.rows(),
        });
    }
    let t = v.transpose().matmul(x)?;
    let correction = scale_columns(v, w).matmul(&t)?;
    let data = x
        .data()
        .iter()
        .zip(correction.data())
        .map(|(a, b)| scale * (a - b))
        .collect();
    DenseMatrix::new(x.rows(), x.cols(), data)
}

/// Factored inverse of `V diag(D)² V^T + a I`.
pub fn woodbury_inverse_factors(v: &DenseMatrix, d: &[f64], a: f64) -> Result<WoodburyInverse> {
    Ok(LowRankShift::new(v.clone(), d.to_vec(), a)?.inverse_factors())
}

/// `B_reg^{-1/2} X` with `B_reg = V diag(D)² V^T + a I`.
pub fn apply_inverse_sqrt(v: &DenseMatrix, d: &[f64], a: f64, x: &DenseMatrix) -> Result<DenseMatrix> {
    LowRankShift::new(v.clone(), d.to_vec(), a)?.apply_inverse_sqrt(x)
}
