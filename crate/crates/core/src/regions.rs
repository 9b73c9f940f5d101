//! Foreground/background partitions of the flattened pixel vector and the
//! matching row split of a Jacobian.

use crate::error::{Error, Result};
use crate::matrixkit::{DenseMatrix, SymmetricMatrix};

/// Channel-resolved pixel partition. `true` marks a foreground element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegionMask {
    flags: Vec<bool>,
    foreground: usize,
}

impl RegionMask {
    /// Rejects masks with an empty foreground or an empty background.
    pub fn new(flags: Vec<bool>) -> Result<Self> {
        let foreground = flags.iter().filter(|f| **f).count();
        let background = flags.len() - foreground;
        if foreground == 0 || background == 0 {
            return Err(Error::DegenerateMask {
                foreground,
                background,
            });
        }
        Ok(Self { flags, foreground })
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn is_foreground(&self, index: usize) -> bool {
        self.flags[index]
    }

    pub fn foreground_count(&self) -> usize {
        self.foreground
    }

    pub fn background_count(&self) -> usize {
        self.flags.len() - self.foreground
    }

    pub fn foreground_indices(&self) -> Vec<usize> {
        self.indices(true)
    }

    pub fn background_indices(&self) -> Vec<usize> {
        self.indices(false)
    }

    fn indices(&self, value: bool) -> Vec<usize> {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, f)| **f == value)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            flags: self.flags.iter().map(|f| !f).collect(),
            foreground: self.background_count(),
        }
    }
}

/// Half-open pixel box `[top, bottom) × [left, right)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BoundingBox {
    pub top: usize,
    pub left: usize,
    pub bottom: usize,
    pub right: usize,
}

impl BoundingBox {
    pub fn new(top: usize, left: usize, bottom: usize, right: usize) -> Self {
        Self {
            top,
            left,
            bottom,
            right,
        }
    }

    pub fn area(&self) -> usize {
        self.bottom.saturating_sub(self.top) * self.right.saturating_sub(self.left)
    }

    pub fn contains(&self, y: usize, x: usize) -> bool {
        (self.top..self.bottom).contains(&y) && (self.left..self.right).contains(&x)
    }
}

/// Marks every channel of each pixel inside `bbox` as foreground. Elements
/// are ordered channel-major, then row-major within a channel.
pub fn mask_from_box(height: usize, width: usize, channels: usize, bbox: BoundingBox) -> Result<RegionMask> {
    if height == 0 || width == 0 || channels == 0 {
        return Err(Error::InvalidBox(format!(
            "image shape {height}x{width}x{channels} is empty"
        )));
    }
    if bbox.bottom > height || bbox.right > width {
        return Err(Error::InvalidBox(format!(
            "box ({}, {}, {}, {}) exceeds {height}x{width}",
            bbox.top, bbox.left, bbox.bottom, bbox.right
        )));
    }
    if bbox.top > bbox.bottom || bbox.left > bbox.right {
        return Err(Error::InvalidBox(format!(
            "box ({}, {}, {}, {}) has inverted edges",
            bbox.top, bbox.left, bbox.bottom, bbox.right
        )));
    }
    let plane = height * width;
    let flags = (0..channels * plane)
        .map(|i| {
            let p = i % plane;
            bbox.contains(p / width, p % width)
        })
        .collect();
    RegionMask::new(flags)
}

/// Where a Jacobian came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Provenance {
    ToyGenerator,
    Imported,
}

/// `P × K` derivative of the flattened image with respect to the latent code.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianMatrix {
    matrix: DenseMatrix,
    provenance: Provenance,
}

impl JacobianMatrix {
    pub fn new(matrix: DenseMatrix, provenance: Provenance) -> Result<Self> {
        if matrix.rows() == 0 || matrix.cols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        Ok(Self { matrix, provenance })
    }

    pub fn pixels(&self) -> usize {
        self.matrix.rows()
    }

    pub fn latent_dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> DenseMatrix {
        self.matrix
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }
}

/// Row blocks `J_f` and `J_b`, each in original pixel order.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitJacobian {
    pub foreground: DenseMatrix,
    pub background: DenseMatrix,
    pub mask: RegionMask,
}

impl SplitJacobian {
    /// Interleaves the blocks back into mask order.
    pub fn reassemble(&self) -> DenseMatrix {
        let k = self.foreground.cols();
        let mut data = Vec::with_capacity(self.mask.len() * k);
        let (mut f, mut b) = (0, 0);
        for &is_fg in self.mask.flags() {
            if is_fg {
                data.extend_from_slice(self.foreground.row(f));
                f += 1;
            } else {
                data.extend_from_slice(self.background.row(b));
                b += 1;
            }
        }
        DenseMatrix::from_vec_unchecked(self.mask.len(), k, data)
    }

    pub fn grams(&self) -> GramPair {
        GramPair {
            a: gram(&self.foreground),
            b: gram(&self.background),
        }
    }
}

/// `A = J_f^T J_f` and `B = J_b^T J_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPair {
    pub a: SymmetricMatrix,
    pub b: SymmetricMatrix,
}

pub fn split(j: &JacobianMatrix, mask: &RegionMask) -> Result<SplitJacobian> {
    if mask.len() != j.pixels() {
        return Err(Error::DimensionMismatch {
            what: "mask length",
            expected: j.pixels(),
            actual: mask.len(),
        });
    }
    Ok(SplitJacobian {
        foreground: j.matrix().select_rows(&mask.foreground_indices()),
        background: j.matrix().select_rows(&mask.background_indices()),
        mask: mask.clone(),
    })
}

/// `M^T M`, symmetric by construction.
pub fn gram(m: &DenseMatrix) -> SymmetricMatrix {
    m.gram()
}
