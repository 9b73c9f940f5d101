//! `rsf` command line: toy Jacobians, masks, factorization, edits, sweeps and
//! verification.
//!
//! Exit codes: 0 success, 2 usage or other failure, 3 dimension mismatch or
//! degenerate mask, 4 zero background Jacobian, 5 failed verification.
//! Standard output carries only results; diagnostics go to standard error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::editor::{default_alpha_grid, edit_with, sweep};
use crate::error::Error;
use crate::factorizer::{
    factorize, regularize, verify_stationarity, FactorizeOptions, Method, DEFAULT_TAU, DEFAULT_TOP,
    STATIONARITY_TOLERANCE,
};
use crate::generators::{make_generator, GeneratorKind, GeneratorSeedSpec, ImageShape, LatentCode, LatentSpec, ToyGenerator};
use crate::interchange::{
    read_directions, read_jacobian, read_mask, write_directions, write_image, write_jacobian_as, write_mask,
    DirectionsFile, Dtype,
};
use crate::matrixkit::DEFAULT_RANK_TOLERANCE;
use crate::par;
use crate::regions::{gram, mask_from_box, split, BoundingBox, JacobianMatrix, RegionMask};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DIMENSION: i32 = 3;
pub const EXIT_ZERO_BACKGROUND: i32 = 4;
pub const EXIT_VERIFICATION: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "rsf", version, about = "Region-based semantic factorization of generator Jacobians")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the Jacobian of a toy generator (RSFJ) and its reference image.
    GenToy(GenToyArgs),
    /// Write a region mask (RSFM) from a box or a radial-blobs blob.
    Mask(MaskArgs),
    /// Find the top local directions for one or more Jacobians.
    Factorize(FactorizeArgs),
    /// Render G(z + alpha n) for one stored direction.
    Edit(EditArgs),
    /// Masked pixel change over a grid of edit strengths, as CSV.
    Sweep(SweepArgs),
    /// Recheck the stationarity conditions of a directions file.
    Verify(VerifyArgs),
}

/// Toy generator, either from a TOML file or from inline flags.
#[derive(Debug, Clone, Args)]
pub struct GeneratorArgs {
    /// TOML generator config (kind, latent_dim, shape, seed, z).
    #[arg(long, conflicts_with_all = ["kind", "latent_dim", "shape"])]
    pub generator: Option<PathBuf>,
    /// linear, mlp or radial-blobs.
    #[arg(long)]
    pub kind: Option<String>,
    /// Latent dimension K.
    #[arg(long = "latent-dim", short = 'k')]
    pub latent_dim: Option<usize>,
    /// Output shape HxW or HxWxC.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Latent code: zero, normal:SEED or a comma-separated list.
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
}

/// TOML form of a toy generator and its latent code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub kind: String,
    pub latent_dim: usize,
    pub shape: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "zero_latent")]
    pub z: String,
}

fn zero_latent() -> String {
    "zero".into()
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct RegionArgs {
    /// RSFM mask file.
    #[arg(long)]
    pub mask: Option<PathBuf>,
    /// Foreground box TOP,LEFT,BOTTOM,RIGHT (half-open; needs a shape).
    #[arg(long = "box")]
    pub bbox: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Regularization strength; a = tau·tr(B).
    #[arg(long, default_value_t = DEFAULT_TAU)]
    pub tau: f64,
    /// Number of directions to return.
    #[arg(long, default_value_t = DEFAULT_TOP)]
    pub top: usize,
    /// standard or fast.
    #[arg(long, default_value = "fast")]
    pub method: String,
    /// Relative singular value cutoff for the background factorization.
    #[arg(long = "rank-tolerance", default_value_t = DEFAULT_RANK_TOLERANCE)]
    pub rank_tolerance: f64,
}

#[derive(Debug, Clone, Args)]
pub struct GenToyArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// RSFJ output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Reference image path; defaults to the output with a .pgm/.ppm extension.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Also write the generator config as TOML.
    #[arg(long = "spec-out")]
    pub spec_out: Option<PathBuf>,
    /// Payload precision: f64 or f32.
    #[arg(long, default_value = "f64")]
    pub dtype: String,
}

#[derive(Debug, Clone, Args)]
pub struct MaskArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    /// Foreground box TOP,LEFT,BOTTOM,RIGHT (needs --shape).
    #[arg(long = "box", conflicts_with = "blob", required_unless_present = "blob")]
    pub bbox: Option<String>,
    /// Box around radial-blobs blob M (0-based).
    #[arg(long)]
    pub blob: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FactorizeArgs {
    /// RSFJ inputs.
    #[arg(required = true)]
    pub jacobians: Vec<PathBuf>,
    #[command(flatten)]
    pub region: RegionArgs,
    /// Image shape for --box.
    #[arg(long)]
    pub shape: Option<String>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// One directions file per input, in order.
    #[arg(long, required = true, num_args = 1..)]
    pub out: Vec<PathBuf>,
    /// Worker threads for independent inputs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EditArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub directions: PathBuf,
    /// 1-based rank index of the direction.
    #[arg(long, default_value_t = 1)]
    pub direction: usize,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: f64,
    /// PGM/PPM output.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub generator: GeneratorArgs,
    #[arg(long)]
    pub directions: PathBuf,
    #[command(flatten)]
    pub region: RegionArgs,
    /// Rank indices to sweep; all stored directions by default.
    #[arg(long, value_delimiter = ',')]
    pub direction: Vec<usize>,
    /// Comma-separated strengths including 0; defaults to 21 points on
    /// [-1, 1]/sqrt(lambda_1).
    #[arg(long = "alpha-grid", allow_hyphen_values = true)]
    pub alpha_grid: Option<String>,
    /// CSV output; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub jacobian: PathBuf,
    #[command(flatten)]
    pub region: RegionArgs,
    /// Image shape for --box.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub directions: PathBuf,
    #[arg(long, default_value_t = STATIONARITY_TOLERANCE)]
    pub tolerance: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Core(Error),
    Verification(Vec<usize>),
    /// Already written to standard error; carries the exit code.
    Reported(i32),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure::Usage(msg.into()))
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::DimensionMismatch { .. } | Error::DegenerateMask { .. } | Error::EmptyMatrix => EXIT_DIMENSION,
        Error::ZeroBackgroundJacobian => EXIT_ZERO_BACKGROUND,
        _ => EXIT_USAGE,
    }
}

fn failure_code(f: &Failure) -> i32 {
    match f {
        Failure::Usage(_) => EXIT_USAGE,
        Failure::Core(e) => exit_code(e),
        Failure::Verification(_) => EXIT_VERIFICATION,
        Failure::Reported(code) => *code,
    }
}

fn report(f: &Failure, err: &mut dyn Write) {
    let _ = match f {
        Failure::Usage(msg) => writeln!(err, "rsf: {msg}"),
        Failure::Core(e) => writeln!(err, "rsf: {e}"),
        Failure::Verification(bad) => {
            let list: Vec<String> = bad.iter().map(|i| i.to_string()).collect();
            writeln!(err, "rsf: stationarity check failed for directions {}", list.join(", "))
        }
        Failure::Reported(_) => Ok(()),
    };
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let config = match CliConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
                return EXIT_USAGE;
            }
            let _ = write!(out, "{text}");
            return EXIT_OK;
        }
    };
    let result = match &config.command {
        Command::GenToy(a) => cmd_gen_toy(a, out, err),
        Command::Mask(a) => cmd_mask(a, out, err),
        Command::Factorize(a) => cmd_factorize(a, out, err),
        Command::Edit(a) => cmd_edit(a, err),
        Command::Sweep(a) => cmd_sweep(a, out, err),
        Command::Verify(a) => cmd_verify(a, out, err),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            report(&f, err);
            failure_code(&f)
        }
    }
}

impl GeneratorArgs {
    fn config(&self) -> CliResult<GeneratorConfig> {
        let mut config = match &self.generator {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
                match toml::from_str::<GeneratorConfig>(&text) {
                    Ok(c) => c,
                    Err(e) => return usage(format!("{}: {}", path.display(), e.message())),
                }
            }
            None => {
                let (Some(kind), Some(latent_dim), Some(shape)) = (&self.kind, self.latent_dim, &self.shape) else {
                    return usage("a generator needs --generator FILE or --kind, --latent-dim and --shape");
                };
                GeneratorConfig {
                    kind: kind.clone(),
                    latent_dim,
                    shape: shape.clone(),
                    seed: 0,
                    z: zero_latent(),
                }
            }
        };
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(z) = &self.z {
            config.z = z.clone();
        }
        Ok(config)
    }
}

impl GeneratorConfig {
    pub fn seed_spec(&self) -> crate::Result<GeneratorSeedSpec> {
        Ok(GeneratorSeedSpec {
            kind: GeneratorKind::from_str(&self.kind)?,
            latent_dim: self.latent_dim,
            shape: ImageShape::from_str(&self.shape)?,
            seed: self.seed,
        })
    }

    pub fn build(&self) -> crate::Result<(ToyGenerator, LatentCode)> {
        let generator = make_generator(&self.seed_spec()?)?;
        let z = LatentSpec::from_str(&self.z)?.resolve(self.latent_dim)?;
        Ok((generator, z))
    }
}

fn parse_box(text: &str) -> CliResult<BoundingBox> {
    let parts: std::result::Result<Vec<usize>, _> = text.split(',').map(|p| p.trim().parse()).collect();
    match parts.as_deref() {
        Ok([top, left, bottom, right]) => Ok(BoundingBox::new(*top, *left, *bottom, *right)),
        _ => usage(format!("box {text:?} is not TOP,LEFT,BOTTOM,RIGHT")),
    }
}

fn parse_list(text: &str, what: &str) -> CliResult<Vec<f64>> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .or_else(|_| usage(format!("{what} {text:?} is not a comma-separated list of numbers")))
}

fn box_mask(bbox: &str, shape: ImageShape) -> CliResult<RegionMask> {
    let b = parse_box(bbox)?;
    Ok(mask_from_box(shape.height, shape.width, shape.channels, b)?)
}

/// Mask from `--mask` or `--box`, checked against `pixels` elements.
fn load_region(region: &RegionArgs, shape: Option<&str>, pixels: usize) -> CliResult<RegionMask> {
    let mask = match (&region.mask, &region.bbox) {
        (Some(path), _) => read_mask(path)?,
        (None, Some(bbox)) => {
            let Some(shape) = shape else {
                return usage("--box needs an image shape (--shape)");
            };
            let shape = ImageShape::from_str(shape)?;
            if shape.pixel_count() != pixels {
                return Err(Error::DimensionMismatch {
                    what: "image shape pixel count",
                    expected: pixels,
                    actual: shape.pixel_count(),
                }
                .into());
            }
            box_mask(bbox, shape)?
        }
        (None, None) => return usage("one of --mask or --box is required"),
    };
    if mask.len() != pixels {
        return Err(Error::DimensionMismatch {
            what: "mask length",
            expected: pixels,
            actual: mask.len(),
        }
        .into());
    }
    Ok(mask)
}

fn solver_options(s: &SolverArgs) -> CliResult<FactorizeOptions> {
    let method = match Method::from_str(&s.method) {
        Ok(m) => m,
        Err(_) => return usage(format!("--method must be standard or fast, got {:?}", s.method)),
    };
    if !(s.tau > 0.0) || !s.tau.is_finite() {
        return usage(format!("--tau must be positive and finite, got {}", s.tau));
    }
    if s.top == 0 {
        return usage("--top must be at least 1");
    }
    if !(s.rank_tolerance >= 0.0) || !s.rank_tolerance.is_finite() {
        return usage(format!("--rank-tolerance must be non-negative and finite, got {}", s.rank_tolerance));
    }
    Ok(FactorizeOptions {
        method,
        tau: s.tau,
        top: s.top,
        rank_tolerance: s.rank_tolerance,
    })
}

fn image_extension(shape: ImageShape) -> &'static str {
    if shape.channels == 3 {
        "ppm"
    } else {
        "pgm"
    }
}

fn cmd_gen_toy(a: &GenToyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let dtype = match a.dtype.as_str() {
        "f64" => Dtype::F64,
        "f32" => Dtype::F32,
        other => return usage(format!("--dtype must be f64 or f32, got {other:?}")),
    };
    let config = a.generator.config()?;
    let (generator, z) = match config.build() {
        Ok(built) => built,
        // a bad kind, shape or K is a usage error here, whatever its class
        Err(e) => return usage(e.to_string()),
    };
    let j = generator.jacobian(&z)?;
    let image = generator.generate(&z)?;
    write_jacobian_as(j.matrix(), &a.out, dtype)?;
    let image_path = a
        .image
        .clone()
        .unwrap_or_else(|| a.out.with_extension(image_extension(generator.shape())));
    write_image(&image, &image_path)?;
    if let Some(spec) = &a.spec_out {
        let text = toml::to_string(&config).map_err(|e| Failure::Usage(e.to_string()))?;
        std::fs::write(spec, text).map_err(|e| Error::io(spec, e))?;
    }
    let _ = writeln!(out, "{} {}", j.pixels(), j.latent_dim());
    let _ = writeln!(
        err,
        "wrote {} ({} generator, {}) and {}",
        a.out.display(),
        generator.kind(),
        generator.shape(),
        image_path.display()
    );
    Ok(())
}

fn cmd_mask(a: &MaskArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let mask = match (a.blob, &a.bbox) {
        (Some(m), _) => {
            let config = a.generator.config()?;
            let (generator, _) = config.build().or_else(|e| usage(e.to_string()))?;
            let ToyGenerator::RadialBlobs(blobs) = &generator else {
                return usage("--blob needs a radial-blobs generator");
            };
            if m >= blobs.blobs().len() {
                return usage(format!("blob {m} out of range (generator has {})", blobs.blobs().len()));
            }
            let shape = generator.shape();
            mask_from_box(shape.height, shape.width, shape.channels, blobs.blob_box(m))?
        }
        (None, Some(bbox)) => {
            let shape = match (&a.generator.shape, &a.generator.generator) {
                (Some(s), _) => ImageShape::from_str(s)?,
                (None, Some(_)) => ImageShape::from_str(&a.generator.config()?.shape)?,
                (None, None) => return usage("--box needs --shape"),
            };
            box_mask(bbox, shape)?
        }
        (None, None) => return usage("one of --box or --blob is required"),
    };
    write_mask(&mask, &a.out)?;
    let _ = writeln!(out, "{} {}", mask.len(), mask.foreground_count());
    let _ = writeln!(err, "wrote {}", a.out.display());
    Ok(())
}

struct Factorized {
    eigenvalues: Vec<f64>,
    summary: String,
}

fn factorize_one(path: &Path, out_path: &Path, args: &FactorizeArgs, options: &FactorizeOptions) -> CliResult<Factorized> {
    let j = read_jacobian(path)?;
    let mask = load_region(&args.region, args.shape.as_deref(), j.pixels())?;
    let parts = split(&j, &mask)?;
    let result = factorize(&parts, options)?;
    write_directions(&DirectionsFile::from_result(&result), out_path)?;
    let rank = result
        .retained_rank
        .map_or_else(String::new, |r| format!(", background rank {r}"));
    Ok(Factorized {
        eigenvalues: result.eigenvalues(),
        summary: format!(
            "{}: K={}, |f|={}, |b|={}, {} path{rank}, max residual {:.2e} -> {}",
            path.display(),
            j.latent_dim(),
            mask.foreground_count(),
            mask.background_count(),
            result.method,
            result.max_residual(),
            out_path.display()
        ),
    })
}

fn cmd_factorize(a: &FactorizeArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let options = solver_options(&a.solver)?;
    if a.jobs == 0 {
        return usage("--jobs must be at least 1");
    }
    if a.out.len() != a.jacobians.len() {
        return usage(format!(
            "{} inputs need {} --out paths, got {}",
            a.jacobians.len(),
            a.jacobians.len(),
            a.out.len()
        ));
    }
    let pairs: Vec<(&PathBuf, &PathBuf)> = a.jacobians.iter().zip(&a.out).collect();
    let results = par::map_slice_on(&pairs, a.jobs, |(input, output)| factorize_one(input, output, a, &options));

    let multiple = pairs.len() > 1;
    let mut failures = Vec::new();
    for ((input, _), result) in pairs.iter().zip(results) {
        match result {
            Ok(f) => {
                if multiple {
                    let _ = writeln!(out, "# {}", input.display());
                }
                for l in &f.eigenvalues {
                    let _ = writeln!(out, "{l:e}");
                }
                let _ = writeln!(err, "{}", f.summary);
            }
            Err(f) => {
                let _ = write!(err, "{}: ", input.display());
                report(&f, err);
                failures.push(failure_code(&f));
            }
        }
    }
    match failures.first() {
        None => Ok(()),
        Some(&code) => {
            if multiple {
                let _ = writeln!(err, "rsf: {} of {} inputs failed", failures.len(), pairs.len());
            }
            Err(Failure::Reported(code))
        }
    }
}

fn load_directions_for(path: &Path, k: usize) -> CliResult<DirectionsFile> {
    let file = read_directions(path)?;
    if file.latent_dim != k {
        return Err(Error::DimensionMismatch {
            what: "directions latent dimension",
            expected: k,
            actual: file.latent_dim,
        }
        .into());
    }
    Ok(file)
}

fn cmd_edit(a: &EditArgs, err: &mut dyn Write) -> CliResult<()> {
    if !a.alpha.is_finite() {
        return usage(format!("--alpha must be finite, got {}", a.alpha));
    }
    let (generator, z) = a.generator.config()?.build()?;
    let file = load_directions_for(&a.directions, generator.latent_dim())?;
    let Some(d) = file.directions.iter().find(|d| d.rank_index == a.direction) else {
        return usage(format!("direction {} is not in {}", a.direction, a.directions.display()));
    };
    let image = edit_with(&generator, &z, &d.vector, a.alpha)?;
    write_image(&image, &a.out)?;
    let _ = writeln!(
        err,
        "wrote {} (direction {}, alpha {})",
        a.out.display(),
        a.direction,
        a.alpha
    );
    Ok(())
}

fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    let config = a.generator.config()?;
    let (generator, z) = config.build()?;
    let file = load_directions_for(&a.directions, generator.latent_dim())?;
    let all = file.semantic_directions();
    let chosen: Vec<_> = if a.direction.is_empty() {
        all
    } else {
        let mut picked = Vec::with_capacity(a.direction.len());
        for &i in &a.direction {
            match all.iter().find(|d| d.rank_index == i) {
                Some(d) => picked.push(d.clone()),
                None => return usage(format!("direction {i} is not in {}", a.directions.display())),
            }
        }
        picked
    };
    if chosen.is_empty() {
        return usage(format!("{} holds no directions", a.directions.display()));
    }
    let alphas = match &a.alpha_grid {
        Some(text) => parse_list(text, "--alpha-grid")?,
        None => default_alpha_grid(file.directions[0].eigenvalue)?,
    };
    if alphas.iter().any(|v| !v.is_finite()) || !alphas.contains(&0.0) {
        return usage("--alpha-grid must be finite and contain 0");
    }
    let mask = load_region(&a.region, Some(&config.shape), generator.pixel_count())?;
    let report = sweep(&generator, &z, &chosen, &mask, &alphas)?;
    let csv = report.to_csv();
    match &a.out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
            let _ = writeln!(err, "wrote {} ({} rows, mask {})", path.display(), report.records.len(), report.mask_id);
        }
        None => {
            let _ = write!(out, "{csv}");
        }
    }
    Ok(())
}

fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write, err: &mut dyn Write) -> CliResult<()> {
    if !(a.tolerance > 0.0) || !a.tolerance.is_finite() {
        return usage(format!("--tolerance must be positive, got {}", a.tolerance));
    }
    let j: JacobianMatrix = read_jacobian(&a.jacobian)?;
    let file = load_directions_for(&a.directions, j.latent_dim())?;
    let mask = load_region(&a.region, a.shape.as_deref(), j.pixels())?;
    let parts = split(&j, &mask)?;
    let (b_reg, reg) = regularize(&gram(&parts.background), file.tau)?;
    if (reg.a - file.a).abs() > 1e-9 * reg.a {
        let _ = writeln!(
            err,
            "warning: regularizer a = {} differs from the stored {}; inputs may not match",
            reg.a, file.a
        );
    }
    let reports = verify_stationarity(&file.to_result(), &gram(&parts.foreground), &b_reg)?;
    let mut failed = Vec::new();
    for r in &reports {
        let ok = r.passes(a.tolerance);
        let _ = writeln!(
            out,
            "{} {:e} {:e} {}",
            r.rank_index,
            r.r1,
            r.r2,
            if ok { "ok" } else { "fail" }
        );
        if !ok {
            failed.push(r.rank_index);
        }
    }
    if failed.is_empty() {
        let _ = writeln!(err, "{} directions stationary within {:e}", reports.len(), a.tolerance);
        Ok(())
    } else {
        Err(Failure::Verification(failed))
    }
}
