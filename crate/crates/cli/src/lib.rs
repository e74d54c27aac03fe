pub mod args;
pub mod cache;
pub mod commands;
pub mod manifest;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::time::Instant;

use clap::Parser;
use sawlab_core::walks::EngineConfig;
use sha2::{Digest, Sha256};

use args::{Cli, Command, Format};
use cache::{cache_gc, resolve_dir, Cache};
use commands::{CliError, Computed, Ctx, GrassmannArgs, HexArgs, SeriesArgs};
use report::{overall, outcome_str, Document, Outcome, Output, Table, Timing};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Count { .. } => "count",
        Command::Bridge { .. } => "bridge",
        Command::Polygon { .. } => "polygon",
        Command::Hw { .. } => "hw",
        Command::Lace { .. } => "lace",
        Command::Series { .. } => "series",
        Command::Hex { .. } => "hex",
        Command::Grassmann { .. } => "grassmann",
        Command::Srw { .. } => "srw",
        Command::CacheGc { .. } => "cache-gc",
    }
}

fn compute(cli: &Cli) -> Result<Computed, CliError> {
    let g = &cli.global;
    let ctx = Ctx {
        cfg: EngineConfig {
            workers: g.threads.unwrap_or(0) as usize,
            split_depth: None,
            node_budget: g.node_budget,
        },
        bits: g.precision_bits as usize,
    };
    match &cli.command {
        Command::Count { lattice, n, lambda } => commands::count(&ctx, lattice, *n as usize, lambda),
        Command::Bridge { lattice, n, mu } => commands::bridge(&ctx, lattice, *n as usize, mu.as_deref()),
        Command::Polygon { lattice, n } => commands::polygon(&ctx, lattice, *n as usize),
        Command::Hw { lattice, n } => commands::hw(&ctx, lattice, *n as usize),
        Command::Lace {
            lattice,
            m_max,
            n_max,
            check_recursion,
            kj_b_max,
        } => commands::lace(&ctx, lattice, *m_max as usize, n_max.map(|v| v as usize), *check_recursion, *kj_b_max),
        Command::Series {
            lattice,
            check,
            n_max,
            z,
            k,
            lambda,
            half_width,
            x,
            y,
        } => commands::series(
            &ctx,
            lattice,
            &SeriesArgs {
                check: *check,
                n_max: *n_max as usize,
                z: z.as_deref(),
                k: k.as_deref(),
                lambda,
                half_width: *half_width,
                x: x.as_deref(),
                y: y.as_deref(),
            },
        ),
        Command::Hex {
            t,
            l,
            z,
            sigma,
            check,
            l_max,
        } => commands::hex(
            &ctx,
            &HexArgs {
                t: *t,
                l: *l,
                z,
                sigma,
                check: *check,
                l_max,
            },
        ),
        Command::Grassmann {
            m,
            seed,
            seeds,
            check,
            matrix,
            exact,
        } => commands::grassmann(&GrassmannArgs {
            m: *m as usize,
            seed: *seed,
            seeds: *seeds,
            check: *check,
            matrix: matrix.as_deref(),
            exact: *exact,
        }),
        Command::Srw { d, task } => commands::srw(*d, *task),
        Command::CacheGc { max_bytes } => {
            let dir = resolve_dir(g.cache_dir.as_deref());
            let s = cache_gc(&dir, *max_bytes).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
            Ok(Computed {
                data: serde_json::json!({"cache_dir": dir.display().to_string(), "summary": s}),
                reports: vec![],
                table: None,
            })
        }
    }
}

fn build_output(cli: &Cli, c: Computed) -> Output {
    let table = c.table.unwrap_or_else(|| Table::from_reports(&c.reports));
    Output {
        document: Document {
            command: command_name(&cli.command).to_string(),
            engine_version: ENGINE_VERSION.to_string(),
            outcome: overall(&c.reports),
            data: c.data,
            reports: c.reports,
            timing: None,
        },
        table,
    }
}

fn cache_key(cli: &Cli) -> Result<String, CliError> {
    let mut extra = String::new();
    if let Command::Grassmann { matrix: Some(p), .. } = &cli.command {
        let bytes = std::fs::read(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
        extra = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    }
    Ok(cache::key(&[
        ENGINE_VERSION,
        &format!("{:?}", cli.command),
        &cli.global.precision_bits.to_string(),
        &format!("{:?}", cli.global.node_budget),
        &extra,
    ]))
}

/// Runs the job, consulting the cache; returns the output and whether it was cached.
fn execute(cli: &Cli) -> Result<(Output, bool), CliError> {
    let cacheable = !cli.global.no_cache && !matches!(cli.command, Command::CacheGc { .. });
    if !cacheable {
        return Ok((build_output(cli, compute(cli)?), false));
    }
    let key = cache_key(cli)?;
    let Ok(cache) = Cache::open(resolve_dir(cli.global.cache_dir.as_deref())) else {
        return Ok((build_output(cli, compute(cli)?), false));
    };
    if let Some(out) = cache.get(&key) {
        return Ok((out, true));
    }
    let _lock = cache.lock(&key);
    let out = build_output(cli, compute(cli)?);
    let _ = cache.put(&key, &out);
    Ok((out, false))
}

fn render(out: &Output, format: Format, w: &mut dyn Write) -> std::io::Result<()> {
    match format {
        Format::Json => {
            let s = serde_json::to_string_pretty(&out.document).map_err(std::io::Error::other)?;
            writeln!(w, "{s}")
        }
        Format::Csv => {
            let mut c = csv::Writer::from_writer(w);
            c.write_record(&out.table.headers)?;
            for row in &out.table.rows {
                c.write_record(row)?;
            }
            c.flush()
        }
        Format::Human => {
            let d = &out.document;
            writeln!(w, "{} ({})", d.command, outcome_str(d.outcome).to_uppercase())?;
            for r in &d.reports {
                writeln!(w, "  {}: {}  [{}]", r.check_id, outcome_str(r.outcome).to_uppercase(), r.reference)?;
                if let Some(c) = &r.counterexample {
                    writeln!(w, "    counterexample {}: {} vs {}", c.label, c.lhs, c.rhs)?;
                }
            }
            if !out.table.rows.is_empty() {
                writeln!(w, "{}", out.table.headers.join("\t"))?;
                for row in &out.table.rows {
                    writeln!(w, "{}", row.join("\t"))?;
                }
            }
            if let Some(t) = &d.timing {
                writeln!(w, "wall {} ms{}", t.wall_ms, if t.cached { " (cached)" } else { "" })?;
            }
            Ok(())
        }
    }
}

pub fn exit_code(o: Outcome) -> i32 {
    match o {
        Outcome::Pass => 0,
        Outcome::Fail => 1,
        Outcome::Inconclusive => 3,
    }
}

/// Parses `argv`, runs the job and writes the result to stdout; returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let start = Instant::now();
    match execute(&cli) {
        Ok((mut out, cached)) => {
            if cli.global.timing {
                out.document.timing = Some(Timing {
                    wall_ms: start.elapsed().as_millis(),
                    cached,
                });
            }
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            if let Err(e) = render(&out, cli.global.format, &mut lock) {
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
            exit_code(out.document.outcome)
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.code()
        }
    }
}
