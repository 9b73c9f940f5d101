//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::panic::{catch_unwind, AssertUnwindSafe};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense row-major square matrix as nested vectors; kept separate from the
/// library types on purpose.
pub type Mat = Vec<Vec<f64>>;

pub fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    let (n, m, p) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; p]; n];
    for i in 0..n {
        for k in 0..m {
            for j in 0..p {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

pub fn transpose(a: &Mat) -> Mat {
    (0..a[0].len()).map(|j| a.iter().map(|r| r[j]).collect()).collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn gauss_jordan_inverse(m: &Mat) -> Mat {
    let n = m.len();
    let mut aug: Mat = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            row
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| aug[x][c].abs().total_cmp(&aug[y][c].abs())).unwrap();
        aug.swap(c, p);
        let pivot = aug[c][c];
        assert!(pivot != 0.0, "singular matrix in oracle");
        aug[c].iter_mut().for_each(|v| *v /= pivot);
        for r in 0..n {
            if r != c {
                let f = aug[r][c];
                if f != 0.0 {
                    let pivot_row = aug[c].clone();
                    aug[r].iter_mut().zip(&pivot_row).for_each(|(v, p)| *v -= f * p);
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// Sign of `det(M − λI)` by elimination with partial pivoting; 0 if singular.
fn char_poly_sign(m: &Mat, lambda: f64) -> f64 {
    let n = m.len();
    let mut a: Mat = m.clone();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let mut sign = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x][c].abs().total_cmp(&a[y][c].abs())).unwrap();
        if a[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            a.swap(c, p);
            sign = -sign;
        }
        sign *= a[c][c].signum();
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            let pivot_row = a[c].clone();
            a[r].iter_mut().zip(&pivot_row).skip(c).for_each(|(v, p)| *v -= f * p);
        }
    }
    sign
}

/// All eigenvalues of `M`, assumed real and positive, in descending order:
/// sign changes of the characteristic polynomial on a geometric grid, refined
/// by bisection. Returns `None` if fewer than `n` roots are bracketed.
pub fn char_poly_roots(m: &Mat) -> Option<Vec<f64>> {
    let n = m.len();
    let upper = m.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) * 1.01 + 1e-300;
    for points in [4_000usize, 40_000, 400_000] {
        let lo = upper * 1e-14;
        let ratio = (upper / lo).powf(1.0 / points as f64);
        let mut roots = Vec::new();
        let mut x0 = lo;
        let mut s0 = char_poly_sign(m, x0);
        for _ in 0..points {
            let x1 = x0 * ratio;
            let s1 = char_poly_sign(m, x1);
            if s1 == 0.0 {
                roots.push(x1);
            } else if s0 != 0.0 && s0 != s1 {
                let (mut a, mut b, sa) = (x0, x1, s0);
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if char_poly_sign(m, mid) == sa {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                roots.push(0.5 * (a + b));
            }
            x0 = x1;
            s0 = s1;
        }
        if roots.len() == n {
            roots.reverse();
            return Some(roots);
        }
    }
    None
}

/// Brute-force generalized eigenvalues of `(A, B_reg)` from `B_reg^{-1} A`.
pub fn brute_force_generalized(a: &Mat, b_reg: &Mat) -> Option<Vec<f64>> {
    char_poly_roots(&mat_mul(&gauss_jordan_inverse(b_reg), a))
}

/// Mutations of a valid file: every single-bit flip in the header, plus
/// seeded multi-byte header corruptions, field overwrites, truncations and
/// appended bytes.
pub fn header_mutations(valid: &[u8], header_len: usize, u64_fields: &[usize], seed: u64, random: usize) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    for byte in 0..header_len {
        for bit in 0..8 {
            let mut m = valid.to_vec();
            m[byte] ^= 1 << bit;
            out.push(m);
        }
    }
    for &at in u64_fields {
        let current = u64::from_le_bytes(valid[at..at + 8].try_into().unwrap());
        for v in [0, 1, current.wrapping_sub(1), current + 1, u64::MAX, u64::MAX / 2, 1 << 32, 1 << 61] {
            let mut m = valid.to_vec();
            m[at..at + 8].copy_from_slice(&v.to_le_bytes());
            out.push(m);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..random {
        let mut m = valid.to_vec();
        match i % 4 {
            0 => {
                for _ in 0..rng.random_range(1..6) {
                    let at = rng.random_range(0..header_len);
                    m[at] = rng.random();
                }
            }
            1 => m.truncate(rng.random_range(0..valid.len())),
            2 => {
                let extra = rng.random_range(1..16);
                m.extend((0..extra).map(|_| rng.random::<u8>()));
            }
            _ => {
                let at = rng.random_range(0..header_len);
                let flips = rng.random_range(1..4);
                for _ in 0..flips {
                    m[at] ^= 1 << rng.random_range(0..8);
                }
                if rng.random_bool(0.5) {
                    m.truncate(rng.random_range(header_len.min(m.len())..=m.len()));
                }
            }
        }
        out.push(m);
    }
    out
}

/// Outcome of feeding one mutated file to a reader.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FuzzOutcome {
    Rejected,
    /// Accepted, and the writer reproduces the exact bytes.
    WriterReachable,
    /// Accepted bytes the writer cannot produce.
    SilentlyAccepted,
    Panicked,
}

/// Runs `decode` and, on success, checks that `encode` reproduces the input.
pub fn probe<T>(bytes: &[u8], decode: impl Fn(&[u8]) -> rsf::Result<T>, encode: impl Fn(&T) -> Vec<u8>) -> FuzzOutcome {
    match catch_unwind(AssertUnwindSafe(|| decode(bytes))) {
        Err(_) => FuzzOutcome::Panicked,
        Ok(Err(_)) => FuzzOutcome::Rejected,
        Ok(Ok(v)) => {
            if encode(&v) == bytes {
                FuzzOutcome::WriterReachable
            } else {
                FuzzOutcome::SilentlyAccepted
            }
        }
    }
}
