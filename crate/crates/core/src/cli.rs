//! Command-line front end.
//!
//! Exit codes: 0 success, 1 validation failure, 2 input error, 3 numerical
//! non-convergence.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{average_q_quadrature, QuadratureSpec};
use crate::channel::ScenarioConfig;
use crate::error::Error;
use crate::experiments::{
    baseline_with, csv_string, default_sequence, trace_trial, CorrelatorPath, MonteCarlo,
    PowerEstimate, SweepResult, sweep_m, sweep_tb,
};
use crate::rng::trial_rng;
use crate::training::{parse_chips, validate_design_criterion, TrainingSequence};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Environment variable supplying the default `--seed`.
pub const SEED_ENV: &str = "RETROWPT_SEED";
const FALLBACK_SEED: u64 = 1;

pub const FIG3_TS: [f64; 3] = [5e-6, 10e-6, 20e-6];
pub const FIG3_TB_MS: [f64; 5] = [0.2, 0.4, 0.6, 0.8, 1.0];
pub const FIG4_M: [usize; 8] = [50, 100, 200, 300, 400, 500, 750, 1000];

#[derive(Debug, Parser)]
#[command(name = "retrowpt", version, about = "Retrodirective WPT with ambient backscatter training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a training sequence against the per-symbol balance criterion.
    ValidateSeq {
        /// File holding one line of ±1 chips.
        #[arg(long, conflicts_with = "chips", required_unless_present = "chips")]
        file: Option<PathBuf>,
        /// Chips given inline, e.g. "+1 -1 +1 -1".
        #[arg(long, allow_hyphen_values = true)]
        chips: Option<String>,
        /// Ambient symbols covered by the sequence.
        #[arg(long)]
        ns: usize,
    },
    /// Print the quadrature average harvested power.
    Average {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = QuadratureSpec::default().rel_tol)]
        rel_tol: f64,
        #[arg(long, default_value_t = QuadratureSpec::default().max_subdivisions)]
        max_subdivisions: usize,
    },
    /// Monte Carlo estimate of the average harvested power.
    Simulate(SimulateArgs),
    /// Regenerate a figure's data as CSV.
    Reproduce(ReproduceArgs),
    /// Re-run the invocation recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Print the default scenario in config-file format.
    PrintConfig,
}

#[derive(Debug, Args)]
struct CommonRun {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Master seed; defaults to $RETROWPT_SEED, else 1.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (default: all hardware threads). Does not affect results.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: CommonRun,
    /// Hold the reflection coefficient at +1.
    #[arg(long)]
    no_training: bool,
    /// Use the chip-resolution correlator.
    #[arg(long)]
    waveform: bool,
    /// Write the first trial's channels, frame and correlator output as JSON.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig3,
    Fig4,
    Baseline,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(value_enum)]
    figure: Figure,
    #[command(flatten)]
    common: CommonRun,
    /// fig3 backscatter durations in ms, comma separated.
    #[arg(long, value_delimiter = ',')]
    tb_ms: Option<Vec<f64>>,
    /// fig4 antenna counts, comma separated.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
}

/// What a run did, in enough detail to repeat it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Invocation {
    Simulate {
        trials: usize,
        seed: u64,
        no_training: bool,
        waveform: bool,
    },
    Reproduce {
        figure: Figure,
        trials: usize,
        seed: u64,
        tb_ms: Vec<f64>,
        m: Vec<usize>,
    },
}

/// Written next to every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub invocation: Invocation,
    pub seed: u64,
    pub config: ScenarioConfig,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub outputs: Vec<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergence { .. } | Error::Degenerate(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        };
        Failure { code, message: e.to_string() }
    }
}

fn input_failure(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

type CliResult = std::result::Result<i32, Failure>;

/// Runs the CLI on `args` (program name first), writing to the given streams,
/// and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            if code == EXIT_OK {
                let _ = write!(stdout, "{e}");
            } else {
                let _ = write!(stderr, "{e}");
            }
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> CliResult {
    match command {
        Command::ValidateSeq { file, chips, ns } => cmd_validate_seq(file.as_deref(), chips.as_deref(), ns, out),
        Command::Average { config, rel_tol, max_subdivisions } => {
            let quad = QuadratureSpec { rel_tol, max_subdivisions, ..Default::default() };
            cmd_average(&load_config(config.as_deref())?, &quad, out)
        }
        Command::Simulate(args) => {
            let cfg = load_config(args.common.config.as_deref())?;
            let inv = Invocation::Simulate {
                trials: args.common.trials,
                seed: resolve_seed(args.common.seed)?,
                no_training: args.no_training,
                waveform: args.waveform,
            };
            execute(&cfg, &inv, &args.common.out, args.common.threads, args.dump.as_deref(), out)
        }
        Command::Reproduce(args) => {
            let cfg = load_config(args.common.config.as_deref())?;
            let inv = Invocation::Reproduce {
                figure: args.figure,
                trials: args.common.trials,
                seed: resolve_seed(args.common.seed)?,
                tb_ms: args.tb_ms.unwrap_or_else(|| FIG3_TB_MS.to_vec()),
                m: args.m.unwrap_or_else(|| FIG4_M.to_vec()),
            };
            execute(&cfg, &inv, &args.common.out, args.common.threads, None, out)
        }
        Command::Rerun { manifest, out: dir, threads } => {
            let text = fs::read_to_string(&manifest)
                .map_err(|e| input_failure(format!("cannot read {}: {e}", manifest.display())))?;
            let m: RunManifest = serde_json::from_str(&text)
                .map_err(|e| input_failure(format!("bad manifest {}: {e}", manifest.display())))?;
            m.config.validate()?;
            execute(&m.config, &m.invocation, &dir, threads, None, out)
        }
        Command::PrintConfig => {
            let _ = write!(out, "{}", ScenarioConfig::default().to_config_text());
            Ok(EXIT_OK)
        }
    }
}

fn load_config(path: Option<&Path>) -> std::result::Result<ScenarioConfig, Failure> {
    Ok(match path {
        Some(p) => ScenarioConfig::from_file(p)?,
        None => ScenarioConfig::default(),
    })
}

fn resolve_seed(seed: Option<u64>) -> std::result::Result<u64, Failure> {
    if let Some(s) = seed {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| input_failure(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(FALLBACK_SEED),
    }
}

/// Four significant figures.
pub fn sig4(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let digits = 3 - v.abs().log10().floor() as i32;
    if digits >= 0 {
        format!("{v:.*}", digits as usize)
    } else {
        format!("{:.3e}", v)
    }
}

fn cmd_validate_seq(file: Option<&Path>, chips: Option<&str>, ns: usize, out: &mut dyn Write) -> CliResult {
    let text = match (file, chips) {
        (Some(p), _) => fs::read_to_string(p).map_err(|e| input_failure(format!("cannot read {}: {e}", p.display())))?,
        (None, Some(c)) => c.to_owned(),
        (None, None) => return Err(input_failure("give --file or --chips")),
    };
    // Only the chip pattern matters for validation; the duration is nominal.
    let seq = TrainingSequence::new(parse_chips(&text)?, ns, 1.0)?;
    let report = validate_design_criterion(&seq)?;
    let _ = writeln!(
        out,
        "{} chips over {} symbols, {} per symbol",
        seq.len(),
        seq.ns(),
        seq.chips_per_symbol()
    );
    if report.valid {
        let _ = writeln!(out, "valid: every symbol has equal +1 and -1 chips");
        return Ok(EXIT_OK);
    }
    let _ = writeln!(out, "invalid: unbalanced symbols");
    for (i, b) in report.blocks.iter().enumerate().filter(|(_, b)| !b.is_balanced()) {
        let _ = writeln!(out, "  symbol {}: {} x +1, {} x -1", i + 1, b.plus, b.minus);
    }
    Ok(EXIT_INVALID)
}

fn cmd_average(cfg: &ScenarioConfig, quad: &QuadratureSpec, out: &mut dyn Write) -> CliResult {
    let est = average_q_quadrature(cfg, quad)?;
    let _ = writeln!(out, "average harvested power: {:e} W ({} uW)", est.mean, sig4(est.mean_uw()));
    Ok(EXIT_OK)
}

fn write_file(dir: &Path, name: &str, contents: &str, written: &mut Vec<String>) -> std::result::Result<(), Failure> {
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| input_failure(format!("cannot write {}: {e}", path.display())))?;
    written.push(name.to_owned());
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("result types serialize") + "\n"
}

/// Runs an invocation and writes its outputs plus a manifest into `dir`.
fn execute(
    cfg: &ScenarioConfig,
    inv: &Invocation,
    dir: &Path,
    threads: Option<usize>,
    dump: Option<&Path>,
    out: &mut dyn Write,
) -> CliResult {
    fs::create_dir_all(dir).map_err(|e| input_failure(format!("cannot create {}: {e}", dir.display())))?;
    let mut written = Vec::new();
    let (stem, seed) = match inv {
        Invocation::Simulate { trials, seed, no_training, waveform } => {
            let path = if *waveform { CorrelatorPath::Waveform } else { CorrelatorPath::ClosedForm };
            let mc = MonteCarlo::new(*trials, *seed).threads(threads).path(path);
            let est = if *no_training { baseline_with(cfg, &mc)? } else { mc.run(cfg, &default_sequence(cfg)?)? };
            if let Some(p) = dump {
                let seq = if *no_training {
                    crate::training::constant_sequence(cfg.ns, cfg.half_chips(), cfg.tc)?
                } else {
                    default_sequence(cfg)?
                };
                let trace = trace_trial(cfg, &seq, &mut trial_rng(*seed, 0), path)?;
                fs::write(p, to_json(&trace)).map_err(|e| input_failure(format!("cannot write {}: {e}", p.display())))?;
            }
            write_file(dir, "simulate.csv", &csv_string([(cfg.tb(), &est)])?, &mut written)?;
            write_file(dir, "simulate.json", &to_json(&est), &mut written)?;
            print_estimate(out, if *no_training { "untrained" } else { "trained" }, &est);
            ("simulate", *seed)
        }
        Invocation::Reproduce { figure, trials, seed, tb_ms, m } => {
            let mc = MonteCarlo::new(*trials, *seed).threads(threads);
            let quad = QuadratureSpec::default();
            match figure {
                Figure::Fig3 => {
                    let tb: Vec<f64> = tb_ms.iter().map(|v| v * 1e-3).collect();
                    let mut all = Vec::new();
                    for ts in FIG3_TS {
                        let s = ScenarioConfig { ts, ..*cfg };
                        s.validate()?;
                        let sweep = sweep_tb(&s, &tb, &mc, &quad)?;
                        let name = format!("fig3_ts{}us.csv", (ts * 1e6).round() as u64);
                        write_file(dir, &name, &sweep.to_csv()?, &mut written)?;
                        report_sweep(out, &format!("Ts = {} us", sig4(ts * 1e6)), &sweep);
                        all.push(sweep);
                    }
                    write_file(dir, "fig3.json", &to_json(&all), &mut written)?;
                }
                Figure::Fig4 => {
                    let sweep = sweep_m(cfg, m, &mc, &quad)?;
                    write_file(dir, "fig4.csv", &sweep.to_csv()?, &mut written)?;
                    write_file(dir, "fig4.json", &to_json(&sweep), &mut written)?;
                    report_sweep(out, "M sweep", &sweep);
                }
                Figure::Baseline => {
                    let est = baseline_with(cfg, &mc)?;
                    write_file(dir, "baseline.csv", &csv_string([(cfg.tb(), &est)])?, &mut written)?;
                    write_file(dir, "baseline.json", &to_json(&est), &mut written)?;
                    print_estimate(out, "untrained", &est);
                }
            }
            let stem = match figure {
                Figure::Fig3 => "fig3",
                Figure::Fig4 => "fig4",
                Figure::Baseline => "baseline",
            };
            (stem, *seed)
        }
    };
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
        invocation: inv.clone(),
        seed,
        config: *cfg,
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        outputs: written.clone(),
    };
    let name = format!("{stem}.manifest.json");
    fs::write(dir.join(&name), to_json(&manifest))
        .map_err(|e| input_failure(format!("cannot write manifest: {e}")))?;
    let _ = writeln!(out, "wrote {} and {name} to {}", written.join(", "), dir.display());
    Ok(EXIT_OK)
}

fn print_estimate(out: &mut dyn Write, label: &str, est: &PowerEstimate) {
    let se = est
        .std_error
        .map(|s| format!(" ± {} uW", sig4(s * 1e6)))
        .unwrap_or_default();
    let _ = writeln!(
        out,
        "{label}: {:e} W ({} uW{se}) over {} trials",
        est.mean,
        sig4(est.mean_uw()),
        est.trials
    );
}

fn report_sweep(out: &mut dyn Write, label: &str, sweep: &SweepResult) {
    let _ = writeln!(out, "{label}");
    for ((v, mc), q) in sweep.values.iter().zip(&sweep.monte_carlo).zip(&sweep.quadrature) {
        let _ = writeln!(
            out,
            "  {} = {:<8} monte-carlo {} uW, quadrature {} uW",
            sweep.axis,
            v,
            sig4(mc.mean_uw()),
            sig4(q.mean_uw())
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_significant_figures() {
        assert_eq!(sig4(94.94233), "94.94");
        assert_eq!(sig4(0.27653), "0.2765");
        assert_eq!(sig4(116.4), "116.4");
        assert_eq!(sig4(1234.6), "1235");
        assert_eq!(sig4(123456.0), "1.235e5");
    }

    #[test]
    fn manifest_round_trips() {
        let m = RunManifest {
            tool_version: "0".into(),
            invocation: Invocation::Reproduce {
                figure: Figure::Fig4,
                trials: 3,
                seed: 4,
                tb_ms: vec![0.5],
                m: vec![10, 20],
            },
            seed: 4,
            config: ScenarioConfig::default(),
            timestamp: 0,
            outputs: vec!["fig4.csv".into()],
        };
        let back: RunManifest = serde_json::from_str(&to_json(&m)).unwrap();
        assert_eq!(back, m);
    }
}
