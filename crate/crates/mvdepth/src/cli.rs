//! Command-line definitions. Every flag can also be set through an
//! environment variable named `MVDEPTH_<FLAG>` (e.g. `MVDEPTH_THREADS`).

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mvdepth_core::{Alignment, FusionMode, RangeSource};

#[derive(Debug, Parser)]
#[command(name = "mvdepth", version, about = "Plane-sweep multi-view depth estimation and evaluation")]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Outputs do not depend on it.
    #[arg(long, global = true, env = "MVDEPTH_THREADS", default_value_t = 0)]
    pub threads: usize,

    /// Seed for every random draw; echoed in reports.
    #[arg(long, global = true, env = "MVDEPTH_SEED", default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate inverse depth and uncertainty for every sample.
    Estimate(EstimateArgs),
    /// Evaluate stored predictions against ground truth.
    Eval(EvalArgs),
    /// Greedy source-view selection.
    Viewselect(ViewselectArgs),
    /// Sparsification curves and AUSE of stored predictions.
    Sparsify(SparsifyArgs),
    /// Depth histograms produced by scale augmentation.
    Augstats(AugstatsArgs),
    /// Render synthetic samples and their manifest.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct IoArgs {
    #[arg(long, env = "MVDEPTH_MANIFEST")]
    pub manifest: PathBuf,
    /// Output directory, created if missing.
    #[arg(long, env = "MVDEPTH_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Depth range to sweep: gt, default (0.2-100 m) or LO:HI in meters.
    #[arg(long, env = "MVDEPTH_RANGE", default_value = "gt")]
    pub range: RangeArg,
    #[arg(long, env = "MVDEPTH_FUSION", value_enum, default_value_t = FusionArg::Average)]
    pub fusion: FusionArg,
    /// Number of inverse-depth hypotheses.
    #[arg(long, env = "MVDEPTH_HYPS", default_value_t = 64)]
    pub hyps: usize,
    /// Matching window radius in pixels.
    #[arg(long, env = "MVDEPTH_PATCH", default_value_t = 2)]
    pub patch: usize,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Directory holding `<id>_invdepth.pfm` and optionally `<id>_uncert.pfm`.
    #[arg(long, env = "MVDEPTH_PRED")]
    pub pred: PathBuf,
    /// none, median or scalar=S.
    #[arg(long, env = "MVDEPTH_ALIGN", default_value = "none")]
    pub align: AlignArg,
    /// Range source the predictions were made with; only echoed.
    #[arg(long, env = "MVDEPTH_RANGE", default_value = "gt")]
    pub range: RangeArg,
}

#[derive(Debug, Args)]
pub struct ViewselectArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, env = "MVDEPTH_ALIGN", default_value = "none")]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct SparsifyArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long, env = "MVDEPTH_PRED")]
    pub pred: PathBuf,
    #[arg(long, env = "MVDEPTH_ALIGN", default_value = "none")]
    pub align: AlignArg,
}

#[derive(Debug, Args)]
pub struct AugstatsArgs {
    /// Draw depth maps from this manifest instead of synthetic ones.
    #[arg(long, env = "MVDEPTH_MANIFEST")]
    pub manifest: Option<PathBuf>,
    #[arg(long, env = "MVDEPTH_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "MVDEPTH_ITERATIONS", default_value_t = 10_000)]
    pub iterations: usize,
    #[arg(long, env = "MVDEPTH_BINS", default_value_t = 100)]
    pub bins: usize,
    /// Histogram whose least populated bin picks each scale factor.
    #[arg(long, env = "MVDEPTH_TRACK", value_enum, default_value_t = TrackArg::Depths)]
    pub track: TrackArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrackArg {
    /// Every scaled ground truth depth.
    Depths,
    /// One scaled median per sample, taken before masking.
    Medians,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, env = "MVDEPTH_OUT")]
    pub out: PathBuf,
    #[arg(long, env = "MVDEPTH_SAMPLES", default_value_t = 3)]
    pub samples: usize,
    /// Image side in pixels.
    #[arg(long, env = "MVDEPTH_SIZE", default_value_t = 64)]
    pub size: usize,
    /// Other views per sample.
    #[arg(long, env = "MVDEPTH_VIEWS", default_value_t = 2)]
    pub views: usize,
    /// Focal length in pixels; defaults to the image side.
    #[arg(long, env = "MVDEPTH_FOCAL")]
    pub focal: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FusionArg {
    Average,
    Weighted,
}

impl From<FusionArg> for FusionMode {
    fn from(f: FusionArg) -> Self {
        match f {
            FusionArg::Average => FusionMode::Average,
            FusionArg::Weighted => FusionMode::Weighted,
        }
    }
}

impl fmt::Display for FusionArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FusionArg::Average => "average",
            FusionArg::Weighted => "weighted",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeArg(pub RangeSource);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gt" => Ok(Self(RangeSource::GroundTruth)),
            "default" => Ok(Self(RangeSource::Default)),
            _ => {
                let (lo, hi) = s
                    .split_once(':')
                    .ok_or_else(|| format!("expected gt, default or LO:HI, got {s:?}"))?;
                let lo: f64 = lo.trim().parse().map_err(|_| format!("bad lower bound {lo:?}"))?;
                let hi: f64 = hi.trim().parse().map_err(|_| format!("bad upper bound {hi:?}"))?;
                if !(lo > 0.0 && lo < hi && hi.is_finite()) {
                    return Err(format!("range {lo}:{hi} must satisfy 0 < LO < HI"));
                }
                Ok(Self(RangeSource::Fixed(lo, hi)))
            }
        }
    }
}

impl fmt::Display for RangeArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            RangeSource::GroundTruth => f.write_str("gt"),
            RangeSource::Default => f.write_str("default"),
            RangeSource::Fixed(lo, hi) => write!(f, "{lo}:{hi}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignArg(pub Alignment);

impl FromStr for AlignArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self(Alignment::None)),
            "median" => Ok(Self(Alignment::Median)),
            _ => {
                let v = s
                    .strip_prefix("scalar=")
                    .ok_or_else(|| format!("expected none, median or scalar=S, got {s:?}"))?;
                let v: f64 = v.parse().map_err(|_| format!("bad scale {v:?}"))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(format!("scale {v} must be positive"));
                }
                Ok(Self(Alignment::Scalar(v)))
            }
        }
    }
}

impl fmt::Display for AlignArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Alignment::None => f.write_str("none"),
            Alignment::Median => f.write_str("median"),
            Alignment::Scalar(s) => write!(f, "scalar={s}"),
        }
    }
}
