//! Latent edits `x_edit = G(z + α n)` and the masked pixel-change metric.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::factorizer::SemanticDirection;
use crate::generators::{ImageBuffer, LatentCode, ToyGenerator};
use crate::par;
use crate::regions::RegionMask;

/// Points in the default α grid, symmetric around and including zero.
pub const DEFAULT_GRID_POINTS: usize = 21;

#[derive(Debug, Clone, Copy)]
pub struct EditRequest<'a> {
    pub generator: &'a ToyGenerator,
    pub z: &'a LatentCode,
    pub direction: &'a SemanticDirection,
    /// Signed edit strength.
    pub alpha: f64,
}

pub fn edit(req: &EditRequest<'_>) -> Result<ImageBuffer> {
    edit_with(req.generator, req.z, &req.direction.vector, req.alpha)
}

/// `G(z + α n)` for a raw latent vector `n`.
pub fn edit_with(generator: &ToyGenerator, z: &LatentCode, n: &[f64], alpha: f64) -> Result<ImageBuffer> {
    if !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("edit strength {alpha} is not finite")));
    }
    generator.generate(&z.shifted(n, alpha)?)
}

/// Per-element mean squared difference over the foreground and background.
pub fn masked_mse(x: &ImageBuffer, x_edit: &ImageBuffer, mask: &RegionMask) -> Result<(f64, f64)> {
    if x.shape() != x_edit.shape() {
        return Err(Error::DimensionMismatch {
            what: "edited image size",
            expected: x.pixels().len(),
            actual: x_edit.pixels().len(),
        });
    }
    if mask.len() != x.pixels().len() {
        return Err(Error::DimensionMismatch {
            what: "mask length",
            expected: x.pixels().len(),
            actual: mask.len(),
        });
    }
    let (mut sum_in, mut sum_out) = (0.0, 0.0);
    for ((p, q), &fg) in x.pixels().iter().zip(x_edit.pixels()).zip(mask.flags()) {
        let d = q - p;
        if fg {
            sum_in += d * d;
        } else {
            sum_out += d * d;
        }
    }
    Ok((
        sum_in / mask.foreground_count() as f64,
        sum_out / mask.background_count() as f64,
    ))
}

/// `DEFAULT_GRID_POINTS` uniform points on `[−1, 1] / √λ₁`.
pub fn default_alpha_grid(lambda1: f64) -> Result<Vec<f64>> {
    if !(lambda1 > 0.0) || !lambda1.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid scale needs a positive leading eigenvalue, got {lambda1}"
        )));
    }
    let half = (DEFAULT_GRID_POINTS / 2) as f64;
    let scale = lambda1.sqrt().recip();
    Ok((0..DEFAULT_GRID_POINTS)
        .map(|i| (i as f64 - half) / half * scale)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRecord {
    pub direction_id: usize,
    pub alpha: f64,
    pub mse_in: f64,
    pub mse_out: f64,
}

impl SweepRecord {
    /// `mse_in / mse_out`, infinite for a perfectly local edit.
    pub fn locality_ratio(&self) -> f64 {
        self.mse_in / self.mse_out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub alphas: Vec<f64>,
    /// Direction-major, then in grid order.
    pub records: Vec<SweepRecord>,
    /// FNV-1a hash of the mask flags, printed in hex.
    pub mask_id: String,
}

impl SweepReport {
    pub const CSV_HEADER: &'static str = "direction_id,alpha,mse_in,mse_out";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let _ = writeln!(out, "{},{:e},{:e},{:e}", r.direction_id, r.alpha, r.mse_in, r.mse_out);
        }
        out
    }

    pub fn record(&self, direction_id: usize, alpha: f64) -> Option<&SweepRecord> {
        self.records
            .iter()
            .find(|r| r.direction_id == direction_id && r.alpha == alpha)
    }
}

pub fn mask_id(mask: &RegionMask) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &f in mask.flags() {
        h ^= f as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Masked MSE of every `(direction, α)` edit against `G(z)`. The grid must be
/// finite and contain zero; the zero rows are exactly zero.
pub fn sweep(
    generator: &ToyGenerator,
    z: &LatentCode,
    directions: &[SemanticDirection],
    mask: &RegionMask,
    alphas: &[f64],
) -> Result<SweepReport> {
    if let Some(bad) = alphas.iter().find(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument(format!("alpha grid contains {bad}")));
    }
    if !alphas.contains(&0.0) {
        return Err(Error::InvalidArgument("alpha grid must contain 0".into()));
    }
    let reference = generator.generate(z)?;
    if mask.len() != reference.pixels().len() {
        return Err(Error::DimensionMismatch {
            what: "mask length",
            expected: reference.pixels().len(),
            actual: mask.len(),
        });
    }
    for d in directions {
        if d.vector.len() != z.len() {
            return Err(Error::DimensionMismatch {
                what: "direction length",
                expected: z.len(),
                actual: d.vector.len(),
            });
        }
    }
    let jobs: Vec<(usize, f64)> = (0..directions.len())
        .flat_map(|d| alphas.iter().map(move |&a| (d, a)))
        .collect();
    let records = par::map_slice(&jobs, |&(d, alpha)| -> Result<SweepRecord> {
        let direction = &directions[d];
        let (mse_in, mse_out) = if alpha == 0.0 {
            (0.0, 0.0)
        } else {
            let edited = edit_with(generator, z, &direction.vector, alpha)?;
            masked_mse(&reference, &edited, mask)?
        };
        Ok(SweepRecord {
            direction_id: direction.rank_index,
            alpha,
            mse_in,
            mse_out,
        })
    });
    Ok(SweepReport {
        alphas: alphas.to_vec(),
        records: records.into_iter().collect::<Result<_>>()?,
        mask_id: mask_id(mask),
    })
}
