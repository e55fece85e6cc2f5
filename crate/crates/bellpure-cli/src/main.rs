//! Command-line front end: evolve states, report exponents and verdicts,
//! solve protocol thresholds, run verification scans and emit CSV/JSON.
//!
//! Exit codes: 0 success, 1 domain error, 2 verification violations found,
//! 3 resource limit, 64 usage error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use bellpure::{
    apply_sequence, arc_k, bb84_state, bb84_threshold, decide_correctability, exponent_report,
    make_state, oracle_bn, oracle_pn, region_figure_data, scan_conjecture, six_state_threshold,
    summarize, verify_delta_inequality, verify_h_inequality, verify_lemma_diag, verify_reductions,
    verify_theorem_chain, werner, write_records_csv, z_param, BellDiagonalState, BellError, Method,
    ScanRecord, StepKind, StepSequence, StepSpec, ThresholdResult, Verdict,
};

const EXIT_VIOLATIONS: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "bellpure",
    version,
    about = "Bell-diagonal purification steps, exponents, thresholds and verification scans"
)]
struct Cli {
    /// Worker threads for scans (0 = auto). Falls back to BELLPURE_THREADS.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SequenceKindArg {
    /// Bit-error correcting sequence (B1, B2, B3, ...).
    Bn,
    /// Phase-error correcting sequence (P1, P3, P5, ...).
    Pn,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProtocolArg {
    Bb84,
    SixState,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve a state through a step sequence like "B4 P3 B2".
    Evolve {
        /// State spec: "a,b,c,d", werner:F, bb84:F, k:t, z:a,b,z or @file.json.
        #[arg(long)]
        state: String,
        /// Whitespace-separated steps, e.g. "B2 B2 P3". Empty = identity.
        #[arg(long, default_value = "")]
        seq: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        /// Write the output here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print characteristic exponents, the region polynomial and flags.
    Exponents {
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decide asymptotic correctability under bit or phase sequences.
    Decide {
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value = "bn")]
        sequence: SequenceKindArg,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve the BB84 / six-state maximum tolerable bit error rates.
    Threshold {
        #[arg(long, value_enum, default_value = "both")]
        protocol: ProtocolArg,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification scan; emits CSV records and a JSON summary.
    #[command(group(ArgGroup::new("mode").required(true).multiple(false)))]
    Scan {
        /// Optimality bound r[Pn(K(t))] <= 2 over the boundary arc.
        #[arg(long, group = "mode")]
        conjecture: bool,
        /// Implication chain AsymCSS > 0 => r_P > 1 => r > 2 on random states.
        #[arg(long, group = "mode")]
        theorem_chain: bool,
        /// Entropy inequality along the r_P = 1 circle.
        #[arg(long, group = "mode")]
        h_inequality: bool,
        /// Fidelity-gap inequality between the r = 2 and r_P = 1 curves.
        #[arg(long, group = "mode")]
        delta_inequality: bool,
        /// Diagonal-shift identity and implication for the region polynomial.
        #[arg(long, group = "mode")]
        lemma_diag: bool,
        /// Parameter-space reductions and binomial monotonicity.
        #[arg(long, group = "mode")]
        reductions: bool,
        /// Grid size over t in [-1, 1] (conjecture scan).
        #[arg(long, default_value_t = 201)]
        t_grid: usize,
        /// Odd step sizes for conjecture/reduction scans.
        #[arg(long, value_delimiter = ',', default_value = "3,5,7,11,21")]
        n: Vec<u32>,
        /// Grid size for the inequality scans.
        #[arg(long, default_value_t = 10_000)]
        grid: usize,
        /// Sample count for the randomized scans.
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Summary JSON path (a one-line summary always goes to stderr).
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Cross-check a closed-form step against the exhaustive label oracle
    /// (and optionally the Monte Carlo sampler).
    Verify {
        #[arg(long)]
        state: String,
        /// Single step token, e.g. B3 or P5 (oracle caps n at 10).
        #[arg(long)]
        step: String,
        /// Also run the Monte Carlo sampler with this many shots.
        #[arg(long)]
        shots: Option<u64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Emit the region-classification raster of the (a, b) square.
    Figure {
        #[arg(long, default_value_t = 201)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    configure_threads(cli.threads);
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(classify_error(&err))
        }
    }
}

fn configure_threads(flag: usize) {
    let threads = if flag > 0 {
        flag
    } else {
        std::env::var("BELLPURE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .unwrap_or(0)
    };
    if threads > 0 {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

fn classify_error(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<BellError>() {
        Some(BellError::Parse(_)) => EXIT_USAGE,
        Some(BellError::ResourceLimit(_)) => EXIT_RESOURCE,
        _ => 1,
    }
}

/// Parses a state spec: inline components, a named family or `@file.json`.
fn parse_state_spec(text: &str) -> anyhow::Result<BellDiagonalState> {
    let text = text.trim();
    if let Some(path) = text.strip_prefix('@') {
        return load_state_json(Path::new(path));
    }
    if let Some((family, args)) = text.split_once(':') {
        let nums = parse_numbers(args)?;
        let need = |k: usize| -> Result<(), BellError> {
            if nums.len() == k {
                Ok(())
            } else {
                Err(BellError::Parse(format!(
                    "family '{family}' takes {k} parameter(s), got {}",
                    nums.len()
                )))
            }
        };
        return match family.to_ascii_lowercase().as_str() {
            "werner" => {
                need(1)?;
                Ok(werner(nums[0])?)
            }
            "bb84" | "bb" => {
                need(1)?;
                Ok(bb84_state(nums[0])?)
            }
            "k" => {
                need(1)?;
                Ok(arc_k(nums[0])?)
            }
            "z" => {
                need(3)?;
                Ok(z_param(nums[0], nums[1], nums[2])?)
            }
            other => Err(BellError::Parse(format!("unknown state family '{other}'")).into()),
        };
    }
    let nums = parse_numbers(text)?;
    if nums.len() != 4 {
        return Err(BellError::Parse(format!(
            "inline state needs 4 components, got {}",
            nums.len()
        ))
        .into());
    }
    Ok(make_state(nums[0], nums[1], nums[2], nums[3])?)
}

fn parse_numbers(text: &str) -> Result<Vec<f64>, BellError> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| BellError::Parse(format!("bad number '{v}': {e}")))
        })
        .collect()
}

/// Accepts either a bare state object or any JSON object with a "state"
/// field, so every state-bearing JSON this tool emits round-trips.
fn load_state_json(path: &Path) -> anyhow::Result<BellDiagonalState> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    let state_value = value.get("state").unwrap_or(&value);
    let state: BellDiagonalState = serde_json::from_value(state_value.clone())
        .with_context(|| format!("no Bell-diagonal state in {}", path.display()))?;
    Ok(state)
}

fn write_output(out: Option<&Path>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, content).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn sig15(x: f64) -> String {
    bellpure::states::format_sig(x)
}

fn format_ext(v: &bellpure::ExtReal) -> String {
    match v.finite() {
        Some(x) => format!("{x:.6}"),
        None => v.to_string(),
    }
}

fn run(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Evolve {
            state,
            seq,
            format,
            out,
        } => {
            let input = parse_state_spec(&state)?;
            let sequence = StepSequence::from_str(&seq)?;
            let result = apply_sequence(&input, &sequence)?;
            let s = result.state;
            let content = match format {
                Format::Json => {
                    let value = serde_json::json!({
                        "state": s,
                        "survival_probability": result.survival_probability,
                    });
                    format!("{}\n", serde_json::to_string_pretty(&value)?)
                }
                Format::Csv => format!(
                    "a,b,c,d,survival_probability\n{},{}\n",
                    s.to_csv_row(),
                    sig15(result.survival_probability)
                ),
                Format::Table => format!(
                    "state     a={:.6} b={:.6} c={:.6} d={:.6}\nsurvival  {:.6}\n",
                    s.a(),
                    s.b(),
                    s.c(),
                    s.d(),
                    result.survival_probability
                ),
            };
            write_output(out.as_deref(), &content)?;
            Ok(0)
        }
        Command::Exponents { state, format, out } => {
            let s = parse_state_spec(&state)?;
            let report = exponent_report(&s);
            let flags = report.region_flags;
            let content = match format {
                Format::Json => {
                    let value = serde_json::json!({ "state": s, "report": report });
                    format!("{}\n", serde_json::to_string_pretty(&value)?)
                }
                Format::Csv => format!(
                    "a,b,c,d,r,r_p,f,r_gt_1,r_gt_2,rp_gt_1,rp_gt_2\n{},{},{},{},{},{},{},{}\n",
                    s.to_csv_row(),
                    report.r,
                    report.r_p,
                    sig15(report.f_value),
                    flags.r_gt_1,
                    flags.r_gt_2,
                    flags.rp_gt_1,
                    flags.rp_gt_2,
                ),
                Format::Table => format!(
                    "{:<36} {:<12} {:<12} {:<12} flags\n{:<36} {:<12} {:<12} {:<12} r>1={} r>2={} rP>1={} rP>2={}\n",
                    "state (a,b,c,d)",
                    "r",
                    "r_P",
                    "f(a,b)",
                    format!("({:.4}, {:.4}, {:.4}, {:.4})", s.a(), s.b(), s.c(), s.d()),
                    format_ext(&report.r),
                    format_ext(&report.r_p),
                    format!("{:.6}", report.f_value),
                    flags.r_gt_1,
                    flags.r_gt_2,
                    flags.rp_gt_1,
                    flags.rp_gt_2,
                ),
            };
            write_output(out.as_deref(), &content)?;
            Ok(0)
        }
        Command::Decide {
            state,
            sequence,
            format,
            out,
        } => {
            let s = parse_state_spec(&state)?;
            let kind = match sequence {
                SequenceKindArg::Bn => StepKind::Bit,
                SequenceKindArg::Pn => StepKind::Phase,
            };
            let report = decide_correctability(&s, kind)?;
            let content = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&report)?),
                Format::Csv | Format::Table => {
                    let verdict = match report.verdict {
                        Verdict::Correctable => "correctable",
                        Verdict::NotCorrectable => "not correctable",
                        Verdict::Inconclusive => "inconclusive",
                    };
                    let basis = report.exponent_basis;
                    format!(
                        "verdict: {verdict} ({} sequence)\n  r          = {}\n  r_P        = {}\n  f(a,b)     = {:.6}\n  AsymCSS    = {:.6}\n  smallest n = {}\n",
                        match kind {
                            StepKind::Bit => "Bn",
                            StepKind::Phase => "Pn",
                        },
                        format_ext(&basis.r),
                        format_ext(&basis.r_p),
                        basis.f_value,
                        report.asymcss_now,
                        report
                            .smallest_n
                            .map_or("not found below bound".to_string(), |n| n.to_string()),
                    )
                }
            };
            write_output(out.as_deref(), &content)?;
            Ok(0)
        }
        Command::Threshold {
            protocol,
            format,
            out,
        } => {
            let mut results: Vec<ThresholdResult> = Vec::new();
            if matches!(protocol, ProtocolArg::Bb84 | ProtocolArg::Both) {
                results.push(bb84_threshold(Method::ClosedForm));
                results.push(bb84_threshold(Method::Bisection));
            }
            if matches!(protocol, ProtocolArg::SixState | ProtocolArg::Both) {
                results.push(six_state_threshold(Method::ClosedForm));
                results.push(six_state_threshold(Method::Bisection));
            }
            let content = match format {
                Format::Json => format!("{}\n", serde_json::to_string_pretty(&results)?),
                Format::Csv => {
                    let mut text =
                        String::from("protocol,method,critical_fidelity,critical_bit_error_rate\n");
                    for r in &results {
                        text.push_str(&format!(
                            "{:?},{:?},{},{}\n",
                            r.protocol,
                            r.method,
                            sig15(r.critical_fidelity),
                            sig15(r.critical_bit_error_rate)
                        ));
                    }
                    text
                }
                Format::Table => {
                    let mut text = format!(
                        "{:<10} {:<12} {:<16} {:<16}\n",
                        "protocol", "method", "F*", "B*"
                    );
                    for r in &results {
                        text.push_str(&format!(
                            "{:<10} {:<12} {:<16.9} {:<16.9}\n",
                            format!("{:?}", r.protocol),
                            format!("{:?}", r.method),
                            r.critical_fidelity,
                            r.critical_bit_error_rate
                        ));
                    }
                    text
                }
            };
            write_output(out.as_deref(), &content)?;
            Ok(0)
        }
        Command::Scan {
            conjecture,
            theorem_chain,
            h_inequality,
            delta_inequality,
            lemma_diag,
            reductions,
            t_grid,
            n,
            grid,
            samples,
            seed,
            out,
            summary,
        } => {
            let (name, params, records): (&str, serde_json::Value, Vec<ScanRecord>) = if conjecture
            {
                (
                    "conjecture",
                    serde_json::json!({"t_grid": t_grid, "n": n}),
                    scan_conjecture(t_grid, &n)?,
                )
            } else if theorem_chain {
                (
                    "theorem_chain",
                    serde_json::json!({"samples": samples, "seed": seed}),
                    verify_theorem_chain(samples, seed),
                )
            } else if h_inequality {
                (
                    "h_inequality",
                    serde_json::json!({"grid": grid}),
                    verify_h_inequality(grid),
                )
            } else if delta_inequality {
                (
                    "delta_inequality",
                    serde_json::json!({"grid": grid}),
                    verify_delta_inequality(grid),
                )
            } else if lemma_diag {
                (
                    "lemma_diag",
                    serde_json::json!({"samples": samples, "seed": seed}),
                    verify_lemma_diag(samples, seed),
                )
            } else if reductions {
                (
                    "reductions",
                    serde_json::json!({"samples": samples, "n": n, "seed": seed}),
                    verify_reductions(samples, &n, seed)?,
                )
            } else {
                unreachable!("clap enforces one scan mode");
            };
            emit_records(out.as_deref(), &records)?;
            let stats = summarize(name, params, &records);
            if let Some(path) = &summary {
                let text = format!("{}\n", serde_json::to_string_pretty(&stats)?);
                fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
            }
            eprintln!(
                "scan {}: records={} violations={} worst_margin={}",
                stats.op,
                stats.n_records,
                stats.n_violations,
                stats
                    .worst_margin
                    .map_or("n/a".to_string(), |m| format!("{m:e}")),
            );
            Ok(if stats.n_violations > 0 {
                EXIT_VIOLATIONS
            } else {
                0
            })
        }
        Command::Verify {
            state,
            step,
            shots,
            seed,
        } => {
            let s = parse_state_spec(&state)?;
            let spec = StepSpec::from_str(&step)?;
            let (closed, exhaustive) = match spec.kind {
                StepKind::Bit => (bellpure::apply_bn(&s, spec.n)?, oracle_bn(&s, spec.n)?),
                StepKind::Phase => (
                    bellpure::StepResult {
                        state: bellpure::apply_pn(&s, spec.n)?,
                        survival_probability: 1.0,
                    },
                    bellpure::StepResult {
                        state: oracle_pn(&s, spec.n)?,
                        survival_probability: 1.0,
                    },
                ),
            };
            let state_dev = closed
                .state
                .components()
                .iter()
                .zip(exhaustive.state.components())
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            let survival_dev =
                (closed.survival_probability - exhaustive.survival_probability).abs();
            println!(
                "step {spec} on ({}, {}, {}, {})",
                s.a(),
                s.b(),
                s.c(),
                s.d()
            );
            println!("  closed form : {}", closed.state.to_csv_row());
            println!("  label oracle: {}", exhaustive.state.to_csv_row());
            println!("  max component deviation: {}", sig15(state_dev));
            println!("  survival deviation     : {}", sig15(survival_dev));
            if let Some(shots) = shots {
                let (empirical, fraction) = bellpure::monte_carlo_step(&s, spec, shots, seed)?;
                let mc_dev = empirical
                    .components()
                    .iter()
                    .zip(closed.state.components())
                    .map(|(x, y)| (x - y).abs())
                    .fold(0.0, f64::max);
                println!(
                    "  monte carlo ({shots} shots, seed {seed}): dev {} kept fraction {}",
                    sig15(mc_dev),
                    sig15(fraction)
                );
            }
            Ok(if state_dev > 1e-12 || survival_dev > 1e-12 {
                EXIT_VIOLATIONS
            } else {
                0
            })
        }
        Command::Figure { grid, out } => {
            let records = region_figure_data(grid);
            emit_records(out.as_deref(), &records)?;
            Ok(0)
        }
    }
}

fn emit_records(out: Option<&Path>, records: &[ScanRecord]) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            let file =
                fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_records_csv(file, records)?;
        }
        None => {
            let stdout = std::io::stdout();
            write_records_csv(stdout.lock(), records)?;
        }
    }
    Ok(())
}
