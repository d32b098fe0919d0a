//! `dbase` — double-base representations, spans, censuses, and
//! non-representability certificates from the command line.
//!
//! Exit codes: 0 = proved / verified / complete, 2 = inconclusive (upper
//! bound only, not found within bounds, census misses), 1 = error.

mod config;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use config::{parse_int_pow, OutFormat, RunConfig};
use double_base::certify::{
    refute_length, span_exact, verify_report, Certificate, ModulusPool, SpanStatus,
};
use double_base::modular::modulus_from_exponents;
use double_base::rep::Representation;
use double_base::search::{census, find_representation_with_limits, CensusOptions, SearchBounds};
use double_base::Limits;
use num_bigint::BigInt;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "dbase",
    version,
    about = "Double-base ({2,3}-integer) representations: search, censuses, spans, certificates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Flat key=value config file; flags override it, DBASE_* env vars sit
    /// in between.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output format: text or json.
    #[arg(long, global = true)]
    format: Option<String>,
    /// Memory budget (bytes; accepts 2^k syntax).
    #[arg(long, global = true)]
    memory_budget: Option<String>,
    /// Worker threads for the parallel engines.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Modulus pool JSON for refutations (defaults to the built-in table).
    #[arg(long, global = true)]
    pool: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute the span of N: witness upper bound plus refutation of the
    /// next shorter length.
    Span {
        n: String,
        /// Give up if no representation of length ≤ this is found.
        #[arg(long, default_value_t = 8)]
        max_length: u32,
    },
    /// Find one representation of N with exactly LENGTH summands.
    Represent {
        n: String,
        #[arg(long)]
        length: u32,
        /// Summand magnitude cap (accepts 2^k syntax).
        #[arg(long)]
        max_summand: Option<String>,
        /// Half-sum magnitude cap (default: 2·|N|).
        #[arg(long)]
        max_partial: Option<String>,
    },
    /// Sweep LO..=HI marking everything representable with ≤ LENGTH
    /// summands; report the misses.
    Census {
        lo: i64,
        hi: i64,
        #[arg(long)]
        length: u32,
        #[arg(long)]
        max_summand: Option<String>,
        #[arg(long)]
        max_partial: Option<String>,
        /// Checkpoint file for resumable runs.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Resume from an existing checkpoint instead of starting over.
        #[arg(long)]
        resume: bool,
        /// Interval granularity for checkpointing.
        #[arg(long, default_value_t = 1 << 16)]
        chunk: u64,
    },
    /// Build modulus profiles from exponent pairs.
    Moduli(ModuliArgs),
    /// Render the built-in table of six moduli with densities and work
    /// factors for degrees 2–5.
    Table1,
    /// Produce a certificate that N has no representation of length LENGTH.
    Certify {
        n: String,
        #[arg(long)]
        length: u32,
        /// Write the certificate JSON here (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recheck a certificate from scratch.
    Verify { cert: PathBuf },
}

#[derive(Args)]
struct ModuliArgs {
    /// One exponent pair: --from A B.
    #[arg(long, num_args = 2, value_names = ["A", "B"])]
    from: Option<Vec<u32>>,
    /// All pairs up to --sweep AMAX BMAX.
    #[arg(long, num_args = 2, value_names = ["AMAX", "BMAX"])]
    sweep: Option<Vec<u32>>,
    /// Sort rows by the work factor of this degree.
    #[arg(long, default_value_t = 4)]
    rank: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(f) = &cli.format {
        cfg.format = match f.as_str() {
            "text" => OutFormat::Text,
            "json" => OutFormat::Json,
            other => anyhow::bail!("unknown format {other:?}"),
        };
    }
    if let Some(b) = &cli.memory_budget {
        cfg.memory_budget_bytes = parse_int_pow(b)?;
    }
    if let Some(t) = cli.threads {
        cfg.parallelism = t;
    }
    if let Some(p) = &cli.pool {
        cfg.pool = Some(p.clone());
    }
    cfg.validate()?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism)
        .build_global()
        .ok();

    let limits = Limits::with_memory_budget(cfg.memory_budget_bytes);
    match cli.cmd {
        Cmd::Span { n, max_length } => cmd_span(&cfg, limits, &n, max_length),
        Cmd::Represent {
            n,
            length,
            max_summand,
            max_partial,
        } => cmd_represent(&cfg, limits, &n, length, max_summand, max_partial),
        Cmd::Census {
            lo,
            hi,
            length,
            max_summand,
            max_partial,
            checkpoint,
            resume,
            chunk,
        } => cmd_census(
            &cfg, limits, lo, hi, length, max_summand, max_partial, checkpoint, resume, chunk,
        ),
        Cmd::Moduli(args) => cmd_moduli(&cfg, args),
        Cmd::Table1 => cmd_table1(&cfg),
        Cmd::Certify { n, length, out } => cmd_certify(&cfg, limits, &n, length, out),
        Cmd::Verify { cert } => cmd_verify(&cfg, limits, &cert),
    }
}

fn bounds_from(
    cfg: &RunConfig,
    max_summand: Option<String>,
    max_partial: Option<String>,
) -> Result<SearchBounds> {
    Ok(SearchBounds {
        max_abs_summand: match max_summand {
            Some(s) => parse_int_pow(&s)?,
            None => cfg.max_abs_summand,
        },
        max_abs_partial: match max_partial {
            Some(s) => Some(parse_int_pow(&s)?),
            None => cfg.max_abs_partial,
        },
    })
}

fn load_pool(cfg: &RunConfig, limits: Limits) -> Result<ModulusPool> {
    match &cfg.pool {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading pool {}", path.display()))?;
            Ok(ModulusPool::from_json_str(&text, limits)?)
        }
        None => Ok(ModulusPool::builtin(limits)?),
    }
}

fn rep_to_json(rep: &Representation) -> serde_json::Value {
    json!({
        "target": rep.target().to_string(),
        "summands": rep
            .summands()
            .iter()
            .map(|s| {
                json!({
                    "sign": if s.sign() == double_base::Sign::Neg { "-" } else { "+" },
                    "a": s.a(),
                    "b": s.b(),
                    "value": s.value().to_string(),
                })
            })
            .collect::<Vec<_>>(),
    })
}

fn cmd_span(cfg: &RunConfig, limits: Limits, n: &str, max_length: u32) -> Result<ExitCode> {
    let n: BigInt = n.parse().context("N must be an integer")?;
    use num_traits::Zero;
    if n.is_zero() {
        // 0 is not a {2,3}-integer but 0 = 2 − 2, so its span is 2 by
        // convention
        match cfg.format {
            OutFormat::Text => println!("span = 2 (by convention: 0 = 2 - 2)"),
            OutFormat::Json => println!(
                "{}",
                json!({"n": "0", "span": 2, "status": "proved", "convention": "0 = 2 - 2"})
            ),
        }
        return Ok(ExitCode::SUCCESS);
    }
    let bounds = SearchBounds {
        max_abs_summand: cfg.max_abs_summand,
        max_abs_partial: cfg.max_abs_partial,
    };
    let pool = load_pool(cfg, limits)?;
    let result = span_exact(&n, &pool, &bounds, max_length)?;
    let proved = result.status == SpanStatus::Proved;
    match cfg.format {
        OutFormat::Text => {
            println!(
                "span = {} ({})",
                result.span,
                if proved { "proved" } else { "upper bound only" }
            );
            println!("witness: {}", result.witness.display_equation());
            if let Some(cert) = &result.certificate {
                if let Some((cn, cr)) = cert.claim() {
                    println!("lower bound: no length-{cr} representation of {cn} (certificate attached in json output)");
                }
            }
        }
        OutFormat::Json => {
            println!(
                "{}",
                serde_json::to_string_pretty(&json!({
                    "n": result.n.to_string(),
                    "span": result.span,
                    "status": if proved { "proved" } else { "upper_bound_only" },
                    "witness": rep_to_json(&result.witness),
                    "certificate": result.certificate.as_ref().map(|c| c.to_json()),
                }))?
            );
        }
    }
    Ok(if proved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_represent(
    cfg: &RunConfig,
    limits: Limits,
    n: &str,
    length: u32,
    max_summand: Option<String>,
    max_partial: Option<String>,
) -> Result<ExitCode> {
    let n: BigInt = n.parse().context("N must be an integer")?;
    let bounds = bounds_from(cfg, max_summand, max_partial)?;
    let found = find_representation_with_limits(&n, length, &bounds, limits)?;
    match (&found, cfg.format) {
        (Some(rep), OutFormat::Text) => println!("{}", rep.display_equation()),
        (None, OutFormat::Text) => {
            println!("no length-{length} representation of {n} found within bounds")
        }
        (rep, OutFormat::Json) => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "n": n.to_string(),
                "length": length,
                "found": rep.is_some(),
                "representation": rep.as_ref().map(rep_to_json),
                "note": "absence means not found within bounds, not a proof of non-existence",
            }))?
        ),
    }
    Ok(if found.is_some() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_census(
    cfg: &RunConfig,
    limits: Limits,
    lo: i64,
    hi: i64,
    length: u32,
    max_summand: Option<String>,
    max_partial: Option<String>,
    checkpoint: Option<PathBuf>,
    resume: bool,
    chunk: u64,
) -> Result<ExitCode> {
    let bounds = bounds_from(cfg, max_summand, max_partial)?;
    let checkpoint = checkpoint.map(|p| {
        if p.is_relative() {
            if let Some(dir) = &cfg.checkpoint_dir {
                return dir.join(p);
            }
        }
        p
    });
    let report = census(
        lo,
        hi,
        length,
        &bounds,
        &CensusOptions {
            checkpoint,
            resume,
            chunk_size: chunk,
            limits,
        },
    )?;
    match cfg.format {
        OutFormat::Text => {
            println!(
                "census {lo}..{hi} at length {length}: {} of {} covered",
                (hi - lo + 1) as usize - report.misses.len(),
                hi - lo + 1,
            );
            if report.complete() {
                println!("no misses");
            } else {
                println!(
                    "misses (not found within bounds, not proved unrepresentable): {}",
                    report
                        .misses
                        .iter()
                        .map(|m| m.to_string())
                        .collect::<Vec<_>>()
                        .join(" ")
                );
            }
        }
        OutFormat::Json => println!("{}", serde_json::to_string_pretty(&report.to_json())?),
    }
    Ok(if report.complete() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn cmd_moduli(cfg: &RunConfig, args: ModuliArgs) -> Result<ExitCode> {
    let pairs: Vec<(u32, u32)> = match (&args.from, &args.sweep) {
        (Some(ab), None) => vec![(ab[0], ab[1])],
        (None, Some(maxes)) => (1..=maxes[0])
            .flat_map(|a| (1..=maxes[1]).map(move |b| (a, b)))
            .collect(),
        _ => anyhow::bail!("use exactly one of --from A B or --sweep AMAX BMAX"),
    };
    use rayon::prelude::*;
    let mut profiles: Vec<_> = pairs
        .par_iter()
        .filter_map(|&(a, b)| modulus_from_exponents(a, b, 2..=5).ok())
        .collect();
    let rank = args.rank;
    profiles.sort_by(|x, y| {
        let wx = x.ln_work.get(&rank).copied().unwrap_or(f64::INFINITY);
        let wy = y.ln_work.get(&rank).copied().unwrap_or(f64::INFINITY);
        wx.partial_cmp(&wy).unwrap_or(std::cmp::Ordering::Equal)
    });
    match cfg.format {
        OutFormat::Text => {
            println!(
                "{:>5} {:>5} {:>26} {:>9} {:>9} {:>9} {:>9}  (ranked by ln w_{rank})",
                "a", "b", "m", "ln d_2", "ln d_3", "ln d_4", "ln d_5"
            );
            for p in &profiles {
                let d = |r: u32| {
                    p.ln_density_dp
                        .get(&r)
                        .map(|&v| format!("{:9.2}", v.min(0.0)))
                        .unwrap_or_else(|| "        —".into())
                };
                println!(
                    "{:>5} {:>5} {:>26} {} {} {} {}",
                    p.a,
                    p.b,
                    p.m.to_string(),
                    d(2),
                    d(3),
                    d(4),
                    d(5)
                );
            }
        }
        OutFormat::Json => {
            let records: Vec<_> = profiles.iter().map(|p| p.record()).collect();
            println!("{}", serde_json::to_string_pretty(&records)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_table1(cfg: &RunConfig) -> Result<ExitCode> {
    let profiles: Vec<_> = double_base::modular::DEFAULT_EXPONENT_PAIRS
        .iter()
        .map(|&(a, b)| modulus_from_exponents(a, b, 2..=5))
        .collect::<Result<_, _>>()?;
    match cfg.format {
        OutFormat::Json => {
            let records: Vec<_> = profiles.iter().map(|p| p.record()).collect();
            println!("{}", serde_json::to_string_pretty(&records)?);
        }
        OutFormat::Text => {
            println!(
                "{:>4} {:>4} {:>25} | {:>8} {:>8} {:>8} {:>8}",
                "a", "b", "m", "r=2", "r=3", "r=4", "r=5"
            );
            println!("{}", "-".repeat(80));
            for p in &profiles {
                let mut dens = String::new();
                let mut work = String::new();
                for r in 2..=5 {
                    let ln_d = p.ln_density_dp[&r];
                    if p.density_dp_clamped(r) {
                        dens.push_str(&format!(" {:>8.2}", 0.0));
                        work.push_str(&format!(" {:>8}", "—"));
                    } else {
                        dens.push_str(&format!(" {ln_d:>8.2}"));
                        work.push_str(&format!(" {:>8.2}", p.ln_work[&r]));
                    }
                }
                println!("{:>4} {:>4} {:>25} |{}", p.a, p.b, p.m.to_string(), dens);
                println!("{:>4} {:>4} {:>25} |{}", "", "", "", work);
            }
            println!("(upper line per row: ln d_r; lower line: ln w_r, suppressed where d_r clamps to 1)");
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_certify(
    cfg: &RunConfig,
    limits: Limits,
    n: &str,
    length: u32,
    out: Option<PathBuf>,
) -> Result<ExitCode> {
    let n: BigInt = n.parse().context("N must be an integer")?;
    let pool = load_pool(cfg, limits)?;
    let cert = refute_length(&n, length, &pool)?;
    match cert {
        Some(cert) => {
            let text = cert.to_json_string();
            match &out {
                Some(path) => {
                    std::fs::write(path, &text)?;
                    if cfg.format == OutFormat::Text {
                        println!(
                            "proved: {n} has no length-{length} representation (certificate: {})",
                            path.display()
                        );
                    }
                }
                None => println!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        None => {
            match cfg.format {
                OutFormat::Text => println!(
                    "inconclusive: the pool could not refute length {length} for {n} \
                     (this is not a claim that a representation exists; try a larger pool)"
                ),
                OutFormat::Json => println!(
                    "{}",
                    json!({"n": n.to_string(), "length": length, "proved": false})
                ),
            }
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_verify(cfg: &RunConfig, limits: Limits, path: &PathBuf) -> Result<ExitCode> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading certificate {}", path.display()))?;
    let cert = Certificate::from_json_str(&text)?;
    let report = verify_report(&cert, &limits)?;
    let claim = cert.claim();
    match cfg.format {
        OutFormat::Text => {
            if report.valid() {
                match claim {
                    Some((n, r)) => println!(
                        "certificate verifies: {n} has no length-{r} double-base representation"
                    ),
                    None => println!("certificate verifies"),
                }
            } else {
                println!("certificate INVALID:");
                for f in &report.failures {
                    println!("  {}: {}", f.path, f.reason);
                }
            }
        }
        OutFormat::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({
                "valid": report.valid(),
                "claim": claim.map(|(n, r)| json!({"n": n.to_string(), "length": r})),
                "failures": report
                    .failures
                    .iter()
                    .map(|f| json!({"path": f.path, "reason": f.reason}))
                    .collect::<Vec<_>>(),
            }))?
        ),
    }
    Ok(if report.valid() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
