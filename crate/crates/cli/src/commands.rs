//! Argument definitions and command execution.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use gemmsim::oracle::{check_case, grid};
use gemmsim::{
    best_per_layer, channel_volumes, default_tiles, estimate, run_oracle, sweep,
    CalibrationProfile, GemmShape, MicroKernel, TileConfig, Variant,
};

use crate::error::CliError;
use crate::formatting::Format;
use crate::report::{OracleReport, ReportBody, ReportDocument, VerifyReport};
use crate::workload::{parse_layers, MOBILENET_V1};

/// Analytic GEMM performance simulator for scratchpad memory hierarchies.
#[derive(Debug, Parser)]
#[command(name = "gemmsim", version)]
pub struct Cli {
    /// Calibration file; defaults to the bundled GAP8 profile.
    #[arg(long, global = true, env = "GEMMSIM_CALIB")]
    pub calib: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Human)]
    pub format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Time breakdown of one configuration.
    Estimate {
        #[arg(long)]
        variant: Variant,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        tiles: TileArgs,
    },
    /// Rank every micro-kernel of a variant for one shape.
    Sweep {
        #[arg(long)]
        variant: Variant,
        #[command(flatten)]
        shape: ShapeArgs,
    },
    /// Best micro-kernel per layer and variant.
    Layers {
        /// CSV with an `id,m,n,k` header; defaults to the bundled MobileNetV1 table.
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Execute one configuration in the instrumented interpreter.
    Oracle {
        #[arg(long)]
        variant: Variant,
        #[command(flatten)]
        shape: ShapeArgs,
        #[command(flatten)]
        kernel: KernelArgs,
        #[command(flatten)]
        tiles: TileArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Check the closed-form volumes against the interpreter on a random grid.
    Verify {
        #[arg(long, default_value_t = 24)]
        max_dim: usize,
        #[arg(long, default_value_t = 100)]
        cases: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[arg(long)]
    pub mr: usize,
    /// Second kernel dimension for B3A2C0.
    #[arg(long)]
    pub nr: Option<usize>,
    /// Second kernel dimension for C3B2A0 and B3C2A0.
    #[arg(long)]
    pub kr: Option<usize>,
}

/// Tile overrides; missing values come from the default blocking.
#[derive(Debug, Args)]
pub struct TileArgs {
    #[arg(long)]
    pub mc: Option<usize>,
    #[arg(long)]
    pub nc: Option<usize>,
    #[arg(long)]
    pub kc: Option<usize>,
}

/// Whether the command's own check passed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Ok,
    Failed(String),
}

pub fn load_profile(path: Option<&Path>) -> Result<CalibrationProfile, CliError> {
    let Some(path) = path else {
        return Ok(CalibrationProfile::gap8());
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })?;
    CalibrationProfile::parse(&text).map_err(|source| CliError::Calibration {
        path: path.to_owned(),
        source,
    })
}

impl ShapeArgs {
    fn shape(&self) -> Result<GemmShape, CliError> {
        Ok(GemmShape::new(self.m, self.n, self.k)?)
    }
}

impl KernelArgs {
    fn kernel(
        &self,
        variant: Variant,
        profile: &CalibrationProfile,
    ) -> Result<MicroKernel, CliError> {
        let (wanted, other, other_name) = match variant {
            Variant::B3A2C0 => (self.nr, self.kr, "kr"),
            _ => (self.kr, self.nr, "nr"),
        };
        let second_name = variant.second_dim_name();
        if other.is_some() {
            return Err(CliError::Usage(format!(
                "{variant} takes --{second_name}, not --{other_name}"
            )));
        }
        let second =
            wanted.ok_or_else(|| CliError::Usage(format!("{variant} requires --{second_name}")))?;
        Ok(MicroKernel::checked(variant, self.mr, second, profile)?)
    }
}

impl TileArgs {
    fn tiles(
        &self,
        variant: Variant,
        shape: GemmShape,
        kernel: MicroKernel,
        profile: &CalibrationProfile,
    ) -> Result<TileConfig, CliError> {
        if let (Some(mc), Some(nc), Some(kc)) = (self.mc, self.nc, self.kc) {
            return Ok(TileConfig::new(mc, nc, kc));
        }
        let d = default_tiles(variant, shape, kernel, profile)?;
        Ok(TileConfig::new(
            self.mc.unwrap_or(d.mc),
            self.nc.unwrap_or(d.nc),
            self.kc.unwrap_or(d.kc),
        ))
    }
}

/// Runs the selected command and returns its report.
pub fn execute(cli: &Cli) -> Result<(ReportDocument, Status), CliError> {
    let profile = load_profile(cli.calib.as_deref())?;
    let p = &profile;
    let (name, body, status) = match &cli.command {
        Command::Estimate {
            variant,
            shape,
            kernel,
            tiles,
        } => {
            let s = shape.shape()?;
            let mk = kernel.kernel(*variant, p)?;
            let t = tiles.tiles(*variant, s, mk, p)?;
            let b = estimate(p, *variant, s, mk, t)?;
            ("estimate", ReportBody::Estimate(b), Status::Ok)
        }
        Command::Sweep { variant, shape } => {
            let r = sweep(p, *variant, shape.shape()?)?;
            ("sweep", ReportBody::Sweep(r), Status::Ok)
        }
        Command::Layers { file } => {
            let text = match file {
                Some(path) => std::fs::read_to_string(path).map_err(|source| CliError::Io {
                    path: path.clone(),
                    source,
                })?,
                None => MOBILENET_V1.to_owned(),
            };
            let layers = parse_layers(&text)?;
            (
                "layers",
                ReportBody::Layers(best_per_layer(p, &layers)),
                Status::Ok,
            )
        }
        Command::Oracle {
            variant,
            shape,
            kernel,
            tiles,
            seed,
        } => {
            let s = shape.shape()?;
            let mk = kernel.kernel(*variant, p)?;
            let t = tiles.tiles(*variant, s, mk, p)?;
            let run = run_oracle(*variant, s, mk, t, p, *seed)?;
            let mismatches = channel_volumes(*variant, s, mk, t)?.differences(&run.counters);
            let status = if !run.correct {
                Status::Failed("interpreted product differs from the reference".into())
            } else if let Some((a, r)) = mismatches.first() {
                Status::Failed(format!(
                    "{}: analytic {} vs interpreted {}",
                    a.component, a.volume, r.volume
                ))
            } else {
                Status::Ok
            };
            let report = OracleReport {
                variant: *variant,
                shape: s,
                kernel: mk,
                tiles: t,
                seed: *seed,
                run,
                mismatches,
            };
            ("oracle", ReportBody::Oracle(report), status)
        }
        Command::Verify {
            max_dim,
            cases,
            seed,
        } => {
            if *max_dim == 0 {
                return Err(CliError::Usage("--max-dim must be at least 1".into()));
            }
            let outcomes = grid(p, *cases, *max_dim, *seed)?
                .iter()
                .map(|c| check_case(p, c))
                .collect::<Result<Vec<_>, _>>()?;
            let passed = outcomes.iter().filter(|o| o.passed()).count();
            let report = VerifyReport {
                max_dim: *max_dim,
                cases: *cases,
                seed: *seed,
                passed,
                failed: outcomes.len() - passed,
                outcomes,
            };
            let status = match report.first_failure() {
                Some(f) => Status::Failed(format!("case {:?}", f.case)),
                None => Status::Ok,
            };
            ("verify", ReportBody::Verify(report), status)
        }
    };
    Ok((ReportDocument::new(name, p, body), status))
}
