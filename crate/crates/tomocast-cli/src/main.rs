//! Command-line front end: ingestion, analysis, prediction and the
//! verification oracles, wired together over JSON and CSV files.
//!
//! Exit codes: 0 on success, 2 when the input data itself fails validation
//! (inconsistent propagators, broken Kraus sets, unphysical states), 1 for
//! I/O, parse and configuration problems. Failures print a one-line JSON
//! diagnostic on standard error.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use tomocast::distributions::PriorDistribution;
use tomocast::hamiltonian::{extract_min_norm_hamiltonian, AdmissibleHamiltonian};
use tomocast::jsonio;
use tomocast::linalg::CMatrix;
use tomocast::oracles::diophantine_adversary;
use tomocast::predictor::PredictedChannel;
use tomocast::rational::rationalize;
use tomocast::snapshot::{
    load_tomography, shared_eigenspaces, validate_consistency, BlockDecomposition,
    TomographySet,
};
use tomocast::Error as LibError;

#[derive(Parser)]
#[command(
    name = "tomocast",
    about = "Predict quantum evolution between tomography snapshots",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a snapshot set for consistency and report its structure.
    Validate {
        /// Tomography JSON file.
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
        /// Write the report here instead of standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply the predicted map at one time to an observable.
    Predict {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        family: FamilyOpts,
        /// Evaluation time (seconds).
        #[arg(long)]
        t: f64,
        /// Observable matrix JSON file.
        #[arg(long)]
        observable: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evolve a density matrix over a time grid, emitting CSV.
    Trajectory {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        family: FamilyOpts,
        /// Time grid as start:step:stop.
        #[arg(long)]
        times: String,
        /// Initial density matrix JSON file.
        #[arg(long)]
        state: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Emit the squared characteristic function of a prior on a grid.
    Charfun {
        #[command(flatten)]
        family: FamilyOpts,
        /// Number of grid points over [0, 2 pi], endpoints included.
        #[arg(long, default_value_t = 1000)]
        grid: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Exhibit a far-away Hamiltonian reproducing the snapshots to epsilon.
    Adversary {
        #[arg(long)]
        input: PathBuf,
        /// Target propagator residual.
        #[arg(long)]
        epsilon: f64,
        /// Largest lattice multiple to try.
        #[arg(long, default_value_t = 100_000)]
        rmax: u64,
        #[command(flatten)]
        knobs: Knobs,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Complete a Kraus set into a system-bath unitary.
    Dilate {
        /// Kraus JSON file: {"n_s": .., "n_e": .., "operators": [..]}.
        #[arg(long)]
        kraus: PathBuf,
        /// Completion seed; falls back to TOMOCAST_SEED, then 0.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Regenerate the characteristic-function datasets for all six
    /// built-in families (1000 points over [0, 4 pi], one CSV each).
    Demo {
        /// Output directory.
        #[arg(long, default_value = ".")]
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        grid: usize,
    },
}

#[derive(Args)]
struct Knobs {
    /// Largest denominator accepted when rationalizing time ratios.
    #[arg(long, default_value_t = 64)]
    qmax: u64,
    /// Relative tolerance of the rationalization.
    #[arg(long, default_value_t = 1e-9)]
    rtol: f64,
    /// Phase/admissibility tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct FamilyOpts {
    /// Prior family on the integer lattice.
    #[arg(long, value_enum)]
    family: Family,
    /// Scale parameter (exponential, cauchy-lorentz, normal).
    #[arg(long)]
    a: Option<f64>,
    /// Half-width parameter (truncated-uniform, semicircular, binomial).
    #[arg(long)]
    m: Option<u32>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Delta,
    Exponential,
    TruncatedUniform,
    Semicircular,
    CauchyLorentz,
    Binomial,
    Normal,
}

impl FamilyOpts {
    fn build(&self) -> Result<PriorDistribution, LibError> {
        let need_a = |a: Option<f64>| {
            a.ok_or_else(|| LibError::Config("this family requires --a".into()))
        };
        let need_m = |m: Option<u32>| {
            m.ok_or_else(|| LibError::Config("this family requires --m".into()))
        };
        match self.family {
            Family::Delta => Ok(PriorDistribution::delta()),
            Family::Exponential => PriorDistribution::exponential(need_a(self.a)?),
            Family::TruncatedUniform => {
                Ok(PriorDistribution::truncated_uniform(need_m(self.m)?))
            }
            Family::Semicircular => Ok(PriorDistribution::semicircular(need_m(self.m)?)),
            Family::CauchyLorentz => PriorDistribution::cauchy_lorentz(need_a(self.a)?),
            Family::Binomial => Ok(PriorDistribution::binomial(need_m(self.m)?)),
            Family::Normal => PriorDistribution::normal(need_a(self.a)?),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let (code, diagnostic) = diagnose(&err);
            eprintln!("{diagnostic}");
            ExitCode::from(code)
        }
    }
}

/// Map an error chain onto (exit code, one-line JSON diagnostic). Data
/// validation failures exit 2, everything else 1.
fn diagnose(err: &anyhow::Error) -> (u8, String) {
    let (code, kind) = match err.downcast_ref::<LibError>() {
        Some(lib) => {
            let kind = match lib {
                LibError::Dimension(_) => "dimension",
                LibError::Hermiticity { .. } => "hermiticity",
                LibError::Parse(_) => "parse",
                LibError::Unitarity { .. } => "unitarity",
                LibError::TimeOrder => "time-order",
                LibError::Inconsistency { .. } => "inconsistency",
                LibError::NotConsistent { .. } => "not-consistent",
                LibError::Overflow => "overflow",
                LibError::Distribution(_) => "distribution",
                LibError::State(_) => "state",
                LibError::Kraus { .. } => "kraus",
                LibError::Budget { .. } => "budget",
                LibError::SearchExhausted { .. } => "search-exhausted",
                LibError::Config(_) => "config",
                LibError::Decomposition { .. } => "decomposition",
            };
            let code = match lib {
                LibError::Unitarity { .. }
                | LibError::TimeOrder
                | LibError::Inconsistency { .. }
                | LibError::NotConsistent { .. }
                | LibError::Decomposition { .. }
                | LibError::Kraus { .. }
                | LibError::State { .. } => 2u8,
                _ => 1u8,
            };
            (code, kind)
        }
        None => (1u8, "io"),
    };
    let diagnostic = json!({
        "error": kind,
        "message": format!("{err:#}"),
    });
    (code, diagnostic.to_string())
}

fn run(command: Command) -> anyhow::Result<()> {
    match command {
        Command::Validate { input, knobs, output } => {
            let set = read_set(&input)?;
            let decomp = shared_eigenspaces(&set, tomocast::snapshot::DEFAULT_CLUSTER_TOL)?;
            let structure = rationalize(set.times(), knobs.qmax, knobs.rtol)?;
            let report = validate_consistency(&set, &decomp, &structure, knobs.tol);
            let doc = json!({
                "consistent": report.consistent,
                "kappa": decomp.kappa(),
                "dim": set.dim(),
                "rational": structure.is_rational(),
                "gamma": structure.gamma(),
                "lcm_q": structure.lcm_q(),
                "block_dims": decomp.blocks().iter().map(|b| b.dim).collect::<Vec<_>>(),
                "block_residuals": report.block_residuals,
                "block_energies": report.block_energies,
                "warnings": report.warnings,
            });
            write_out(output.as_deref(), &format!("{doc:#}"))?;
            if !report.consistent {
                let worst = report
                    .block_residuals
                    .iter()
                    .cloned()
                    .fold(0.0f64, f64::max);
                return Err(LibError::NotConsistent {
                    block: report
                        .block_energies
                        .iter()
                        .position(|e| e.is_none())
                        .unwrap_or(0),
                    residual: worst,
                }
                .into());
            }
            Ok(())
        }
        Command::Predict {
            input,
            family,
            t,
            observable,
            knobs,
            output,
        } => {
            let set = read_set(&input)?;
            let obs = read_matrix(&observable)?;
            let channel = build_channel(&set, &family, &knobs)?;
            let image = channel.apply(t, &obs)?;
            write_out(output.as_deref(), &jsonio::matrix_to_json(&image))?;
            Ok(())
        }
        Command::Trajectory {
            input,
            family,
            times,
            state,
            knobs,
            output,
        } => {
            let set = read_set(&input)?;
            let rho0 = read_matrix(&state)?;
            let grid = parse_grid(&times)?;
            let channel = build_channel(&set, &family, &knobs)?;
            let states = channel.trajectory(&rho0, &grid)?;
            let mut csv = String::new();
            let d = rho0.nrows();
            csv.push('t');
            for i in 0..d {
                for j in 0..d {
                    csv.push_str(&format!(",re_{i}_{j},im_{i}_{j}"));
                }
            }
            csv.push_str(",purity\n");
            for (t, rho) in grid.iter().zip(&states) {
                csv.push_str(&format!("{t}"));
                for i in 0..d {
                    for j in 0..d {
                        csv.push_str(&format!(",{},{}", rho[(i, j)].re, rho[(i, j)].im));
                    }
                }
                let purity: f64 = (rho * rho).diagonal().iter().map(|z| z.re).sum();
                csv.push_str(&format!(",{purity}\n"));
            }
            write_out(output.as_deref(), &csv)?;
            Ok(())
        }
        Command::Charfun { family, grid, output } => {
            let dist = family.build()?;
            let csv = charfun_csv(&dist, grid, 2.0 * std::f64::consts::PI)?;
            write_out(output.as_deref(), &csv)?;
            Ok(())
        }
        Command::Adversary {
            input,
            epsilon,
            rmax,
            knobs,
            output,
        } => {
            let set = read_set(&input)?;
            let analysis = analyze(&set, &knobs)?;
            let witness = diophantine_adversary(
                &set,
                &analysis.decomp,
                &analysis.hhat,
                epsilon,
                rmax,
                None,
            )?;
            let doc = json!({
                "r": witness.r,
                "residuals": witness.unitary_residuals,
                "distance": witness.hamiltonian_distance,
            });
            write_out(output.as_deref(), &format!("{doc:#}"))?;
            Ok(())
        }
        Command::Dilate { kraus, seed, output } => {
            let kraus_set = read_kraus(&kraus)?;
            let seed = resolve_seed(seed)?;
            let u = tomocast::dilation::kraus_to_unitary(&kraus_set, seed)?;
            write_out(output.as_deref(), &jsonio::matrix_to_json(&u))?;
            Ok(())
        }
        Command::Demo { output, grid } => {
            let families: [(&str, PriorDistribution); 6] = [
                ("exponential", PriorDistribution::exponential(1.0)?),
                ("truncated_uniform", PriorDistribution::truncated_uniform(2)),
                ("semicircular", PriorDistribution::semicircular(2)),
                ("cauchy_lorentz", PriorDistribution::cauchy_lorentz(1.0)?),
                ("binomial", PriorDistribution::binomial(2)),
                ("normal", PriorDistribution::normal(1.0)?),
            ];
            fs::create_dir_all(&output)
                .with_context(|| format!("creating {}", output.display()))?;
            for (name, dist) in families {
                let csv = charfun_csv(&dist, grid, 4.0 * std::f64::consts::PI)?;
                let path = output.join(format!("charfun_{name}.csv"));
                fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
    }
}

struct Analysis {
    decomp: BlockDecomposition,
    hhat: AdmissibleHamiltonian,
}

fn analyze(set: &TomographySet, knobs: &Knobs) -> anyhow::Result<Analysis> {
    let decomp = shared_eigenspaces(set, tomocast::snapshot::DEFAULT_CLUSTER_TOL)?;
    let structure = rationalize(set.times(), knobs.qmax, knobs.rtol)?;
    let hhat = extract_min_norm_hamiltonian(&decomp, &structure, set.times(), knobs.tol)?;
    Ok(Analysis { decomp, hhat })
}

fn build_channel(
    set: &TomographySet,
    family: &FamilyOpts,
    knobs: &Knobs,
) -> anyhow::Result<PredictedChannel> {
    let dist = family.build()?;
    let analysis = analyze(set, knobs)?;
    Ok(PredictedChannel::new(analysis.decomp, analysis.hhat, dist)?)
}

fn charfun_csv(dist: &PriorDistribution, grid: usize, span: f64) -> anyhow::Result<String> {
    if grid == 0 {
        return Err(LibError::Config("grid needs at least one point".into()).into());
    }
    let mut csv = String::from("t,abs_phi_squared\n");
    for k in 0..grid {
        let t = if grid == 1 {
            0.0
        } else {
            span * k as f64 / (grid - 1) as f64
        };
        csv.push_str(&format!("{t},{}\n", dist.char_fn(t).norm_sqr()));
    }
    Ok(csv)
}

/// Parse a start:step:stop grid specification.
fn parse_grid(spec: &str) -> anyhow::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(LibError::Config(format!(
            "time grid must be start:step:stop, got '{spec}'"
        ))
        .into());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| LibError::Config(format!("bad grid number '{p}': {e}")))
        })
        .collect::<Result<_, _>>()?;
    let (start, step, stop) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(LibError::Config(
            "grid needs step > 0 and stop >= start".into(),
        )
        .into());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}

fn resolve_seed(flag: Option<u64>) -> anyhow::Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var("TOMOCAST_SEED") {
        Ok(text) => text
            .parse::<u64>()
            .map_err(|e| anyhow!(LibError::Config(format!("TOMOCAST_SEED: {e}")))),
        Err(_) => Ok(0),
    }
}

fn read_set(path: &Path) -> anyhow::Result<TomographySet> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(load_tomography(file)?)
}

fn read_matrix(path: &Path) -> anyhow::Result<CMatrix> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(jsonio::matrix_from_json(&text)?)
}

fn read_kraus(path: &Path) -> anyhow::Result<tomocast::dilation::KrausSet> {
    let mut text = String::new();
    fs::File::open(path)
        .with_context(|| format!("opening {}", path.display()))?
        .read_to_string(&mut text)
        .with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| LibError::Parse(e.to_string()))?;
    let n_s = value["n_s"]
        .as_u64()
        .ok_or_else(|| LibError::Parse("missing n_s".into()))? as usize;
    let n_e = value["n_e"]
        .as_u64()
        .ok_or_else(|| LibError::Parse("missing n_e".into()))? as usize;
    let ops_json = value["operators"]
        .as_array()
        .ok_or_else(|| LibError::Parse("missing operators".into()))?;
    let operators = ops_json
        .iter()
        .map(|m| {
            let rows: jsonio::MatrixRows = serde_json::from_value(m.clone())
                .map_err(|e| LibError::Parse(e.to_string()))?;
            jsonio::matrix_from_rows(&rows)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(tomocast::dilation::KrausSet::new(n_s, n_e, operators)?)
}

fn write_out(output: Option<&Path>, content: &str) -> anyhow::Result<()> {
    let text = if content.ends_with('\n') {
        content.to_string()
    } else {
        format!("{content}\n")
    };
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
