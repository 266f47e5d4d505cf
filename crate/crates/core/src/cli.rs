//! The `sphwav` command line.
//!
//! Exit codes: 0 success, 1 bad flags, 2 I/O failure, 3 malformed or
//! unsuitable file, 4 parameter or consistency violation.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::bench::{power_of_two_band_limits, run_bench, BenchConfig};
use crate::denoise::{denoise_with, snr_db};
use crate::error::{Error, FormatError};
use crate::grid::{SamplingScheme, SphereMap};
use crate::io::{read_map, write_map};
use crate::mollweide::{render_mollweide, write_ppm, Colormap, RenderOptions, MIN_WIDTH};
use crate::tiling::{KernelFamily, TilingParams, WaveletKernels};
use crate::transform::{TransformConfig, WaveletDecomposition, WaveletTransform};

pub const EXIT_FLAGS: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_PARAM: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::Format { .. } | Error::Decode(_) => EXIT_FORMAT,
            Error::InvalidBandLimit { .. }
            | Error::InvalidParameter(_)
            | Error::BandLimitMismatch(_)
            | Error::Inconsistent(_) => EXIT_PARAM,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

fn output_error(e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("cannot write output: {e}"),
    }
}

type CliResult<T = ()> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(
    name = "sphwav",
    version,
    about = "Exact axisymmetric wavelet transforms on the sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wavelet analysis of a real map into scaling and wavelet maps
    Analyze(AnalyzeArgs),
    /// Reconstruct a map from scaling and wavelet maps
    Synthesize(SynthesizeArgs),
    /// Hard-threshold denoising of a real map
    Denoise(DenoiseArgs),
    /// Render a real map as a Mollweide PPM image
    Plot(PlotArgs),
    /// Tabulate the harmonic kernels
    Kernels(KernelsArgs),
    /// Accuracy and timing benchmark
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct TilingArgs {
    /// Dilation parameter (> 1)
    #[arg(long, default_value_t = 2.0)]
    pub lambda: f64,
    /// Lowest wavelet scale J0
    #[arg(long, default_value_t = 0)]
    pub jmin: usize,
    /// Kernel family: sd, needlet or bspline
    #[arg(long, default_value = "sd", value_parser = parse_family)]
    pub family: KernelFamily,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[command(flatten)]
    pub tiling: TilingArgs,
    /// Store each scale at its own band-limit
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true",
          action = clap::ArgAction::Set)]
    pub multires: bool,
    #[arg(long)]
    pub out_prefix: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthesizeArgs {
    #[arg(long)]
    pub in_prefix: PathBuf,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[arg(long)]
    pub bandlimit: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Map to compare the reconstruction against
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Harmonic noise standard deviation (>= 0)
    #[arg(long, value_parser = parse_non_negative)]
    pub sigma: f64,
    /// Threshold in units of the per-scale noise level
    #[arg(long, default_value_t = 3.0, value_parser = parse_non_negative)]
    pub factor: f64,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[arg(long, default_value_t = false, num_args = 0..=1, default_missing_value = "true",
          action = clap::ArgAction::Set)]
    pub multires: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Noiseless map; SNR before and after is printed when given
    #[arg(long)]
    pub reference: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 800, value_parser = parse_width)]
    pub width: usize,
    /// grayscale or diverging
    #[arg(long, default_value = "grayscale", value_parser = parse_colormap)]
    pub colormap: Colormap,
    #[arg(long, requires = "max", allow_negative_numbers = true)]
    pub min: Option<f64>,
    #[arg(long, requires = "min", allow_negative_numbers = true)]
    pub max: Option<f64>,
}

#[derive(Debug, Args)]
pub struct KernelsArgs {
    #[arg(long)]
    pub bandlimit: usize,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Largest band-limit exponent: L = 4, 8, …, 2^N
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=12))]
    pub lmax_exp: u32,
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    #[command(flatten)]
    pub tiling: TilingArgs,
    #[arg(long, default_value = "gl", value_parser = parse_scheme)]
    pub scheme: SamplingScheme,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub report: PathBuf,
}

fn parse_family(s: &str) -> Result<KernelFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<SamplingScheme, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_colormap(s: &str) -> Result<Colormap, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a finite value >= 0, got {s}"))
    }
}

fn parse_width(s: &str) -> Result<usize, String> {
    let w: usize = s.parse().map_err(|_| format!("'{s}' is not a width"))?;
    if w >= MIN_WIDTH {
        Ok(w)
    } else {
        Err(format!("width must be at least {MIN_WIDTH}, got {w}"))
    }
}

/// Parameters recorded next to analysis output so synthesis can check them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisMeta {
    pub lambda: f64,
    pub j_min: usize,
    pub family: String,
    pub band_limit: usize,
    pub scheme: String,
    pub multires: bool,
}

pub fn scaling_path(prefix: &Path) -> PathBuf {
    suffixed(prefix, "_scal.s2wm")
}

pub fn wavelet_path(prefix: &Path, j: usize) -> PathBuf {
    suffixed(prefix, &format!("_wav_{j}.s2wm"))
}

pub fn meta_path(prefix: &Path) -> PathBuf {
    suffixed(prefix, "_meta.json")
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn require_real(map: &SphereMap, path: &Path) -> CliResult {
    if map.is_real() {
        Ok(())
    } else {
        Err(Error::Format {
            path: path.to_path_buf(),
            source: FormatError::Invalid("expected a real map".into()),
        }
        .into())
    }
}

fn config_for(map: &SphereMap, tiling: &TilingArgs, multires: bool) -> TransformConfig {
    TransformConfig::new(map.grid().l(), tiling.lambda, tiling.jmin)
        .with_family(tiling.family)
        .with_scheme(map.grid().scheme())
        .with_multires(multires)
}

fn analyze(args: &AnalyzeArgs, out: &mut dyn Write) -> CliResult {
    let map = read_map(&args.input)?;
    require_real(&map, &args.input)?;
    let cfg = config_for(&map, &args.tiling, args.multires);
    let t = WaveletTransform::new(cfg)?;
    let decomp = t.analysis(&map)?;
    let k = t.kernels();

    writeln!(
        out,
        "L = {}, lambda = {}, J0 = {}, J = {}",
        cfg.band_limit,
        cfg.lambda,
        k.j_min(),
        k.j_max()
    )
    .map_err(output_error)?;
    let scal = scaling_path(&args.out_prefix);
    write_map(&scal, &decomp.scaling)?;
    writeln!(
        out,
        "scaling: band-limit {}, {} samples -> {}",
        decomp.scaling.grid().l(),
        decomp.scaling.len(),
        scal.display()
    )
    .map_err(output_error)?;
    for ((j, map), bl) in k.scales().zip(&decomp.wavelets).zip(k.scale_band_limits()) {
        let path = wavelet_path(&args.out_prefix, j);
        write_map(&path, map)?;
        writeln!(
            out,
            "scale {j}: band-limit {bl}, {} samples -> {}",
            map.len(),
            path.display()
        )
        .map_err(output_error)?;
    }
    let meta = AnalysisMeta {
        lambda: cfg.lambda,
        j_min: cfg.j_min,
        family: cfg.family.to_string(),
        band_limit: cfg.band_limit,
        scheme: cfg.scheme.to_string(),
        multires: cfg.multires,
    };
    let path = meta_path(&args.out_prefix);
    let json = serde_json::to_string_pretty(&meta).expect("metadata serialises");
    std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    writeln!(out, "total samples: {}", decomp.total_samples()).map_err(output_error)?;
    Ok(())
}

fn check_meta(prefix: &Path, tiling: &TilingArgs, band_limit: usize) -> CliResult {
    let path = meta_path(prefix);
    let Ok(text) = std::fs::read_to_string(&path) else {
        return Ok(());
    };
    let meta: AnalysisMeta = serde_json::from_str(&text).map_err(|e| Error::Format {
        path: path.clone(),
        source: FormatError::Invalid(e.to_string()),
    })?;
    let mut problems = Vec::new();
    if meta.lambda != tiling.lambda {
        problems.push(format!("lambda {} (flag {})", meta.lambda, tiling.lambda));
    }
    if meta.j_min != tiling.jmin {
        problems.push(format!("J0 {} (flag {})", meta.j_min, tiling.jmin));
    }
    if meta.family != tiling.family.to_string() {
        problems.push(format!("family {} (flag {})", meta.family, tiling.family));
    }
    if meta.band_limit != band_limit {
        problems.push(format!(
            "band-limit {} (flag {band_limit})",
            meta.band_limit
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Inconsistent(format!(
            "coefficient files were produced with {}",
            problems.join(", ")
        ))
        .into())
    }
}

fn synthesize(args: &SynthesizeArgs, out: &mut dyn Write) -> CliResult {
    let params = TilingParams::new(args.tiling.lambda, args.tiling.jmin, args.bandlimit)?;
    check_meta(&args.in_prefix, &args.tiling, args.bandlimit)?;
    let kernels = WaveletKernels::new(params, args.tiling.family)?;

    let scaling = read_map(scaling_path(&args.in_prefix))?;
    let wavelets = kernels
        .scales()
        .map(|j| read_map(wavelet_path(&args.in_prefix, j)))
        .collect::<Result<Vec<_>, _>>()?;

    let scheme = scaling.grid().scheme();
    let full = std::iter::once(&scaling)
        .chain(&wavelets)
        .all(|m| m.grid().l() == args.bandlimit);
    let cfg = TransformConfig::new(args.bandlimit, args.tiling.lambda, args.tiling.jmin)
        .with_family(args.tiling.family)
        .with_scheme(scheme)
        .with_multires(!full);
    let t = WaveletTransform::with_kernels(cfg, kernels)?;
    let decomp = WaveletDecomposition {
        config: cfg,
        scaling,
        wavelets,
    };
    let rec = t.synthesis(&decomp)?;
    write_map(&args.out, &rec)?;
    writeln!(
        out,
        "wrote {} (L = {}, {})",
        args.out.display(),
        args.bandlimit,
        scheme
    )
    .map_err(output_error)?;

    if let Some(path) = &args.reference {
        let reference = read_map(path)?;
        if reference.grid() != rec.grid() {
            return Err(Error::Inconsistent(format!(
                "reference map is on a {} L={} grid, reconstruction on {} L={}",
                reference.grid().scheme(),
                reference.grid().l(),
                scheme,
                args.bandlimit
            ))
            .into());
        }
        let a = t.plan().analyze(&reference)?;
        let b = t.plan().analyze(&rec)?;
        writeln!(out, "eps = {:e}", a.max_abs_diff(&b)).map_err(output_error)?;
    }
    Ok(())
}

fn denoise(args: &DenoiseArgs, out: &mut dyn Write) -> CliResult {
    let noisy = read_map(&args.input)?;
    require_real(&noisy, &args.input)?;
    let reference = match &args.reference {
        Some(p) => {
            let r = read_map(p)?;
            if r.grid() != noisy.grid() {
                return Err(Error::Inconsistent(
                    "reference and input maps use different grids".into(),
                )
                .into());
            }
            Some(r)
        }
        None => None,
    };
    let cfg = config_for(&noisy, &args.tiling, args.multires);
    let t = WaveletTransform::new(cfg)?;
    let denoised = denoise_with(&t, &noisy, args.sigma, args.factor)?;
    write_map(&args.out, &denoised)?;
    writeln!(out, "wrote {}", args.out.display()).map_err(output_error)?;
    if let Some(r) = reference {
        let s = t.plan().analyze(&r)?;
        let y = t.plan().analyze(&noisy)?;
        let d = t.plan().analyze(&denoised)?;
        writeln!(out, "SNR(y) = {:.4} dB", snr_db(&s, &y)?).map_err(output_error)?;
        writeln!(out, "SNR(d) = {:.4} dB", snr_db(&s, &d)?).map_err(output_error)?;
    }
    Ok(())
}

fn plot(args: &PlotArgs, out: &mut dyn Write) -> CliResult {
    let map = read_map(&args.input)?;
    require_real(&map, &args.input)?;
    let opts = RenderOptions {
        width: args.width,
        colormap: args.colormap,
        range: args.min.zip(args.max),
        ..Default::default()
    };
    let img = render_mollweide(&map, &opts)?;
    write_ppm(&args.out, &img)?;
    writeln!(
        out,
        "wrote {} ({}x{})",
        args.out.display(),
        img.width(),
        img.height()
    )
    .map_err(output_error)?;
    Ok(())
}

/// Kernel table as TSV: header comment, one row per `ℓ`, residual comment.
pub fn kernels_tsv(kernels: &WaveletKernels) -> String {
    let mut s = String::from("# l\tphi");
    for j in kernels.scales() {
        s.push_str(&format!("\tpsi_{j}"));
    }
    s.push('\n');
    for ell in 0..kernels.l() {
        s.push_str(&format!("{ell}\t{:.17e}", kernels.phi()[ell]));
        for psi in kernels.psis() {
            s.push_str(&format!("\t{:.17e}", psi[ell]));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "# admissibility_residual\t{:e}\n",
        kernels.admissibility_residual()
    ));
    s
}

fn kernels(args: &KernelsArgs, out: &mut dyn Write) -> CliResult {
    let params = TilingParams::new(args.tiling.lambda, args.tiling.jmin, args.bandlimit)?;
    let k = WaveletKernels::new(params, args.tiling.family)?;
    std::fs::write(&args.out, kernels_tsv(&k)).map_err(|e| Error::io(&args.out, e))?;
    writeln!(
        out,
        "J0 = {}, J = {}, admissibility residual = {:e}",
        k.j_min(),
        k.j_max(),
        k.admissibility_residual()
    )
    .map_err(output_error)?;
    Ok(())
}

fn bench(args: &BenchArgs, out: &mut dyn Write) -> CliResult {
    let cfg = BenchConfig {
        lambda: args.tiling.lambda,
        j_min: args.tiling.jmin,
        family: args.tiling.family,
        scheme: args.scheme,
        reps: args.reps as usize,
        seed: args.seed,
    };
    let band_limits: Vec<usize> = power_of_two_band_limits(args.lmax_exp)
        .into_iter()
        .filter(|&l| TilingParams::new(cfg.lambda, cfg.j_min, l).is_ok())
        .collect();
    if band_limits.is_empty() {
        return Err(Error::param(format!(
            "no band-limit up to 2^{} admits J0 = {} with lambda = {}",
            args.lmax_exp, cfg.j_min, cfg.lambda
        ))
        .into());
    }
    let report = run_bench(&band_limits, &cfg)?;
    writeln!(out, "L\teps_full\teps_multi\tt_full_ms\tt_multi_ms").map_err(output_error)?;
    for r in &report.records {
        writeln!(
            out,
            "{}\t{:.3e}\t{:.3e}\t{:.3}\t{:.3}",
            r.l, r.eps_full, r.eps_multi, r.t_full_median_ms, r.t_multi_median_ms
        )
        .map_err(output_error)?;
    }
    if let (Some(f), Some(m)) = (report.slope_full, report.slope_multi) {
        writeln!(out, "timing slope: full {f:.3}, multires {m:.3}").map_err(output_error)?;
    }
    let json = serde_json::to_string_pretty(&report).expect("report serialises");
    std::fs::write(&args.report, json).map_err(|e| Error::io(&args.report, e))?;
    Ok(())
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> CliResult {
    match &cli.command {
        Command::Analyze(a) => analyze(a, out),
        Command::Synthesize(a) => synthesize(a, out),
        Command::Denoise(a) => denoise(a, out),
        Command::Plot(a) => plot(a, out),
        Command::Kernels(a) => kernels(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version requests print to `out` and succeed.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> CliResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    write!(out, "{e}").map_err(output_error)
                }
                _ => Err(CliError {
                    code: EXIT_FLAGS,
                    message: e.to_string(),
                }),
            };
        }
    };
    execute(&cli, out)
}
