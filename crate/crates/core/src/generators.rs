//! Toy differentiable generators `G: R^K → R^P` with analytic Jacobians.
//!
//! Pixels are flattened channel-major, then row-major within a channel.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrixkit::{dot, DenseMatrix};
use crate::par;
use crate::regions::{BoundingBox, JacobianMatrix, Provenance};

/// Hidden width of the two-layer generator.
pub const MLP_HIDDEN: usize = 32;
/// Center displacement per unit of `tanh`, as a fraction of the blob width.
pub const BLOB_SHIFT_FRACTION: f64 = 0.6;
pub const BLOB_BACKGROUND: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageShape {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
}

impl ImageShape {
    pub fn new(height: usize, width: usize, channels: usize) -> Self {
        Self {
            height,
            width,
            channels,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.height * self.width * self.channels
    }

    fn validate(&self) -> Result<()> {
        if self.pixel_count() == 0 {
            return Err(Error::InvalidGeneratorSpec(format!("empty output shape {self}")));
        }
        Ok(())
    }
}

impl fmt::Display for ImageShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.height, self.width, self.channels)
    }
}

/// Parses `HxW` or `HxWxC`.
impl FromStr for ImageShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X']).collect();
        let nums: std::result::Result<Vec<usize>, _> = parts.iter().map(|p| p.trim().parse()).collect();
        match nums.as_deref() {
            Ok([h, w]) => Ok(Self::new(*h, *w, 1)),
            Ok([h, w, c]) => Ok(Self::new(*h, *w, *c)),
            _ => Err(Error::InvalidArgument(format!("shape {s:?} is not HxW or HxWxC"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    shape: ImageShape,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(shape: ImageShape, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != shape.pixel_count() {
            return Err(Error::DimensionMismatch {
                what: "pixel count",
                expected: shape.pixel_count(),
                actual: pixels.len(),
            });
        }
        Ok(Self { shape, pixels })
    }

    pub fn shape(&self) -> ImageShape {
        self.shape
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn get(&self, channel: usize, y: usize, x: usize) -> f64 {
        let s = self.shape;
        self.pixels[(channel * s.height + y) * s.width + x]
    }
}

/// A finite latent vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode(Vec<f64>);

impl LatentCode {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self(values))
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    /// Standard normal draws from a seeded stream.
    pub fn sample(k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self((0..k).map(|_| rng.sample(StandardNormal)).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `z + alpha·n`.
    pub fn shifted(&self, n: &[f64], alpha: f64) -> Result<Self> {
        if n.len() != self.len() {
            return Err(Error::DimensionMismatch {
                what: "direction length",
                expected: self.len(),
                actual: n.len(),
            });
        }
        Self::new(self.0.iter().zip(n).map(|(z, d)| z + alpha * d).collect())
    }
}

/// How to build a latent code: `zero`, `normal:SEED`, or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentSpec {
    Zero,
    Normal(u64),
    Values(Vec<f64>),
}

impl LatentSpec {
    pub fn resolve(&self, k: usize) -> Result<LatentCode> {
        match self {
            LatentSpec::Zero => Ok(LatentCode::zeros(k)),
            LatentSpec::Normal(seed) => Ok(LatentCode::sample(k, *seed)),
            LatentSpec::Values(v) if v.len() == k => LatentCode::new(v.clone()),
            LatentSpec::Values(v) => Err(Error::DimensionMismatch {
                what: "latent length",
                expected: k,
                actual: v.len(),
            }),
        }
    }
}

impl FromStr for LatentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "zero" {
            return Ok(LatentSpec::Zero);
        }
        if let Some(seed) = s.strip_prefix("normal:") {
            return seed
                .parse()
                .map(LatentSpec::Normal)
                .map_err(|_| Error::InvalidArgument(format!("bad latent seed {seed:?}")));
        }
        s.split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(LatentSpec::Values)
            .map_err(|_| Error::InvalidArgument(format!("latent spec {s:?} is not zero, normal:SEED or a list")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Linear,
    Mlp,
    RadialBlobs,
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Linear => "linear",
            GeneratorKind::Mlp => "mlp",
            GeneratorKind::RadialBlobs => "radial-blobs",
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "linear" => Ok(GeneratorKind::Linear),
            "mlp" => Ok(GeneratorKind::Mlp),
            "radial-blobs" => Ok(GeneratorKind::RadialBlobs),
            other => Err(Error::UnknownGeneratorKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSeedSpec {
    pub kind: GeneratorKind,
    pub latent_dim: usize,
    pub shape: ImageShape,
    pub seed: u64,
}

/// `G(z) = W z + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearGenerator {
    shape: ImageShape,
    w: DenseMatrix,
    b: Vec<f64>,
}

impl LinearGenerator {
    pub fn new(shape: ImageShape, w: DenseMatrix, b: Vec<f64>) -> Result<Self> {
        shape.validate()?;
        if w.rows() != shape.pixel_count() || b.len() != w.rows() {
            return Err(Error::DimensionMismatch {
                what: "linear generator rows",
                expected: shape.pixel_count(),
                actual: if w.rows() != shape.pixel_count() { w.rows() } else { b.len() },
            });
        }
        if w.cols() == 0 {
            return Err(Error::EmptyMatrix);
        }
        if let Some(index) = b.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self { shape, w, b })
    }

    pub fn weights(&self) -> &DenseMatrix {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }
}

/// `G(z) = W2 tanh(W1 z + b1) + b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGenerator {
    shape: ImageShape,
    w1: DenseMatrix,
    b1: Vec<f64>,
    w2: DenseMatrix,
    b2: Vec<f64>,
}

impl MlpGenerator {
    fn hidden(&self, z: &[f64]) -> Vec<f64> {
        (0..self.w1.rows())
            .map(|h| (dot(self.w1.row(h), z) + self.b1[h]).tanh())
            .collect()
    }
}

/// One Gaussian blob at rest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blob {
    pub cx: f64,
    pub cy: f64,
    pub sigma: f64,
    pub amplitude: f64,
}

impl Blob {
    pub fn shift(&self) -> f64 {
        BLOB_SHIFT_FRACTION * self.sigma
    }
}

/// Grayscale sum of Gaussian blobs. Blob `m` owns latents `3m..3m+3`:
/// horizontal offset, vertical offset and intensity, each through `tanh`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialBlobsGenerator {
    shape: ImageShape,
    blobs: Vec<Blob>,
}

/// Blob state at a particular latent code.
struct PlacedBlob {
    cx: f64,
    cy: f64,
    inv_two_var: f64,
    amplitude: f64,
    // derivatives of cx, cy and amplitude with respect to the blob's latents
    dcx: f64,
    dcy: f64,
    damp: f64,
}

impl RadialBlobsGenerator {
    pub fn new(shape: ImageShape, blobs: Vec<Blob>) -> Result<Self> {
        shape.validate()?;
        if shape.channels != 1 {
            return Err(Error::InvalidGeneratorSpec(
                "radial-blobs images are single channel".into(),
            ));
        }
        if blobs.is_empty() {
            return Err(Error::InvalidGeneratorSpec("radial-blobs needs at least one blob".into()));
        }
        for b in &blobs {
            if ![b.cx, b.cy, b.sigma, b.amplitude].iter().all(|v| v.is_finite()) || b.sigma <= 0.0 {
                return Err(Error::InvalidGeneratorSpec(format!("invalid blob {b:?}")));
            }
        }
        Ok(Self { shape, blobs })
    }

    pub fn blobs(&self) -> &[Blob] {
        &self.blobs
    }

    /// Half-open box around blob `m`'s rest center that holds its `3σ` disk
    /// at every reachable offset.
    pub fn blob_box(&self, m: usize) -> BoundingBox {
        let b = &self.blobs[m];
        let reach = 3.0 * b.sigma + b.shift();
        let lo = |c: f64| (c - reach).floor().max(0.0) as usize;
        let hi = |c: f64, n: usize| ((c + reach).ceil() as usize + 1).min(n);
        BoundingBox::new(
            lo(b.cy),
            lo(b.cx),
            hi(b.cy, self.shape.height),
            hi(b.cx, self.shape.width),
        )
    }

    /// Current center of blob `m` at latent `z`.
    pub fn center(&self, m: usize, z: &[f64]) -> (f64, f64) {
        let p = self.place(m, z);
        (p.cx, p.cy)
    }

    fn place(&self, m: usize, z: &[f64]) -> PlacedBlob {
        let b = &self.blobs[m];
        let (tu, tv, tw) = (z[3 * m].tanh(), z[3 * m + 1].tanh(), z[3 * m + 2].tanh());
        PlacedBlob {
            cx: b.cx + b.shift() * tu,
            cy: b.cy + b.shift() * tv,
            inv_two_var: 0.5 / (b.sigma * b.sigma),
            amplitude: b.amplitude * (1.0 + 0.5 * tw),
            dcx: b.shift() * (1.0 - tu * tu),
            dcy: b.shift() * (1.0 - tv * tv),
            damp: 0.5 * b.amplitude * (1.0 - tw * tw),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToyGenerator {
    Linear(LinearGenerator),
    Mlp(MlpGenerator),
    RadialBlobs(RadialBlobsGenerator),
}

impl ToyGenerator {
    pub fn kind(&self) -> GeneratorKind {
        match self {
            ToyGenerator::Linear(_) => GeneratorKind::Linear,
            ToyGenerator::Mlp(_) => GeneratorKind::Mlp,
            ToyGenerator::RadialBlobs(_) => GeneratorKind::RadialBlobs,
        }
    }

    pub fn shape(&self) -> ImageShape {
        match self {
            ToyGenerator::Linear(g) => g.shape,
            ToyGenerator::Mlp(g) => g.shape,
            ToyGenerator::RadialBlobs(g) => g.shape,
        }
    }

    pub fn latent_dim(&self) -> usize {
        match self {
            ToyGenerator::Linear(g) => g.w.cols(),
            ToyGenerator::Mlp(g) => g.w1.cols(),
            ToyGenerator::RadialBlobs(g) => 3 * g.blobs.len(),
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.shape().pixel_count()
    }

    /// All parameters in a fixed order.
    pub fn parameters(&self) -> Vec<f64> {
        match self {
            ToyGenerator::Linear(g) => [g.w.data(), &g.b[..]].concat(),
            ToyGenerator::Mlp(g) => [g.w1.data(), &g.b1[..], g.w2.data(), &g.b2[..]].concat(),
            ToyGenerator::RadialBlobs(g) => g
                .blobs
                .iter()
                .flat_map(|b| [b.cx, b.cy, b.sigma, b.amplitude])
                .collect(),
        }
    }

    fn check(&self, z: &LatentCode) -> Result<()> {
        if z.len() != self.latent_dim() {
            return Err(Error::DimensionMismatch {
                what: "latent length",
                expected: self.latent_dim(),
                actual: z.len(),
            });
        }
        Ok(())
    }

    pub fn generate(&self, z: &LatentCode) -> Result<ImageBuffer> {
        self.check(z)?;
        let z = z.values();
        let pixels = match self {
            ToyGenerator::Linear(g) => {
                let mut out = g.w.matvec(z)?;
                out.iter_mut().zip(&g.b).for_each(|(o, b)| *o += b);
                out
            }
            ToyGenerator::Mlp(g) => {
                let h = g.hidden(z);
                let mut out = g.w2.matvec(&h)?;
                out.iter_mut().zip(&g.b2).for_each(|(o, b)| *o += b);
                out
            }
            ToyGenerator::RadialBlobs(g) => {
                let placed: Vec<PlacedBlob> = (0..g.blobs.len()).map(|m| g.place(m, z)).collect();
                let mut out = vec![BLOB_BACKGROUND; g.shape.pixel_count()];
                par::for_each_chunk_mut(&mut out, g.shape.width, |y, row| {
                    for (x, o) in row.iter_mut().enumerate() {
                        for p in &placed {
                            let (dx, dy) = (x as f64 - p.cx, y as f64 - p.cy);
                            *o += p.amplitude * (-(dx * dx + dy * dy) * p.inv_two_var).exp();
                        }
                    }
                });
                out
            }
        };
        ImageBuffer::new(self.shape(), pixels)
    }

    /// `J_{j,k} = ∂G(z)_j / ∂z_k`, computed by the chain rule.
    pub fn jacobian(&self, z: &LatentCode) -> Result<JacobianMatrix> {
        self.check(z)?;
        let z = z.values();
        let matrix = match self {
            ToyGenerator::Linear(g) => g.w.clone(),
            ToyGenerator::Mlp(g) => {
                let h = g.hidden(z);
                // diag(1 − h²) W1
                let mut inner = g.w1.clone();
                let k = inner.cols();
                for (i, v) in inner.data_mut().iter_mut().enumerate() {
                    let t = h[i / k];
                    *v *= 1.0 - t * t;
                }
                g.w2.matmul(&inner)?
            }
            ToyGenerator::RadialBlobs(g) => {
                let placed: Vec<PlacedBlob> = (0..g.blobs.len()).map(|m| g.place(m, z)).collect();
                let k = 3 * placed.len();
                let w = g.shape.width;
                let mut data = vec![0.0; g.shape.pixel_count() * k];
                par::for_each_chunk_mut(&mut data, k, |pixel, row| {
                    let (y, x) = ((pixel / w) as f64, (pixel % w) as f64);
                    for (m, p) in placed.iter().enumerate() {
                        let (dx, dy) = (x - p.cx, y - p.cy);
                        let e = (-(dx * dx + dy * dy) * p.inv_two_var).exp();
                        let radial = 2.0 * p.inv_two_var * p.amplitude * e;
                        row[3 * m] = radial * dx * p.dcx;
                        row[3 * m + 1] = radial * dy * p.dcy;
                        row[3 * m + 2] = p.damp * e;
                    }
                });
                DenseMatrix::new(g.shape.pixel_count(), k, data)?
            }
        };
        JacobianMatrix::new(matrix, Provenance::ToyGenerator)
    }
}

fn normal_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> DenseMatrix {
    let data = (0..rows * cols)
        .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
        .collect();
    DenseMatrix::new(rows, cols, data).expect("finite normal draws")
}

fn make_blobs(shape: ImageShape, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Blob>> {
    let grid_cols = (1..=count).find(|c| c * c >= count).unwrap_or(1);
    let grid_rows = count.div_ceil(grid_cols);
    let cell_h = shape.height as f64 / grid_rows as f64;
    let cell_w = shape.width as f64 / grid_cols as f64;
    let cell = cell_h.min(cell_w);
    if cell < 8.0 {
        return Err(Error::InvalidGeneratorSpec(format!(
            "{count} blobs do not fit a {shape} image (cells under 8 pixels)"
        )));
    }
    let jitter = cell / 16.0;
    Ok((0..count)
        .map(|m| {
            let (row, col) = (m / grid_cols, m % grid_cols);
            let cy = (row as f64 + 0.5) * cell_h + rng.random_range(-jitter..=jitter);
            let cx = (col as f64 + 0.5) * cell_w + rng.random_range(-jitter..=jitter);
            let sigma = cell / 12.8 * rng.random_range(1.0..1.3);
            let amplitude = rng.random_range(0.6..1.0);
            Blob {
                cx,
                cy,
                sigma,
                amplitude,
            }
        })
        .collect())
}

/// Deterministic parameters from a seed.
pub fn make_generator(spec: &GeneratorSeedSpec) -> Result<ToyGenerator> {
    let k = spec.latent_dim;
    if k == 0 {
        return Err(Error::InvalidGeneratorSpec("latent dimension must be at least 1".into()));
    }
    spec.shape.validate()?;
    let p = spec.shape.pixel_count();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    match spec.kind {
        GeneratorKind::Linear => {
            let w = normal_matrix(&mut rng, p, k, 1.0 / (k as f64).sqrt());
            let b = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            Ok(ToyGenerator::Linear(LinearGenerator::new(spec.shape, w, b)?))
        }
        GeneratorKind::Mlp => {
            let w1 = normal_matrix(&mut rng, MLP_HIDDEN, k, 1.0 / (k as f64).sqrt());
            let b1 = (0..MLP_HIDDEN).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
            let w2 = normal_matrix(&mut rng, p, MLP_HIDDEN, 1.0 / (MLP_HIDDEN as f64).sqrt());
            let b2 = (0..p).map(|_| rng.random_range(0.0..1.0)).collect();
            Ok(ToyGenerator::Mlp(MlpGenerator {
                shape: spec.shape,
                w1,
                b1,
                w2,
                b2,
            }))
        }
        GeneratorKind::RadialBlobs => {
            if k % 3 != 0 {
                return Err(Error::InvalidGeneratorSpec(format!(
                    "radial-blobs needs 3 latents per blob, got K={k}"
                )));
            }
            let blobs = make_blobs(spec.shape, k / 3, &mut rng)?;
            Ok(ToyGenerator::RadialBlobs(RadialBlobsGenerator::new(spec.shape, blobs)?))
        }
    }
}
