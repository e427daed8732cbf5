use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use cmimic::field::Field;
use cmimic::graph::from_weighted;
use cmimic::io::{parse_graph, write_graph};
use cmimic::partition::{build_network, Config, Mode, OracleKind};
use cmimic::selftest::{self, SelftestConfig};
use cmimic::verify::tc_equivalent;
use cmimic::Error;

#[derive(Parser)]
#[command(name = "cmimic", version, about = "Connectivity-c mimicking networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Existence,
    Expander,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleArg {
    Exact,
    Spectral,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mimicking network and write it with a statistics file.
    Build {
        input: PathBuf,
        #[arg(long)]
        c: usize,
        #[arg(long, value_enum, default_value = "expander")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "exact")]
        oracle: OracleArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Field modulus for the matroid constructions (an odd prime).
        #[arg(long)]
        prime: Option<u64>,
        /// Expansion target in (0, 1]; expander mode only.
        #[arg(long)]
        phi: Option<f64>,
        /// Assumed sparse-cut oracle quality; expander mode only.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long, default_value_t = 18)]
        enum_threshold: u32,
        /// Contract all non-candidate edges per round (experimental).
        #[arg(long)]
        batch_contract: bool,
        /// Output graph path; statistics go to `<out>.stats`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Check that two graphs are (T, c)-equivalent; exit 1 with a witness if not.
    Verify {
        original: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        c: usize,
    },
    /// Print size statistics of a graph file.
    Stats {
        input: PathBuf,
        /// Also report the unit-edge count after capping multiplicities at c + 1.
        #[arg(long)]
        c: Option<usize>,
    },
    /// Run the randomized self-check at reduced scale.
    Selftest {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long)]
        prime: Option<u64>,
    },
}

/// Command failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::Input(_) | Error::Parse { .. } => 2,
            Error::Guard(_) => 3,
            Error::RandomizedFailure { .. } => 4,
            Error::Internal(_) | Error::Stage { .. } => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn input_failure(message: String) -> Failure {
    Failure { code: 2, message }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| input_failure(format!("{}: {e}", path.display())))
}

fn field(prime: Option<u64>) -> Result<Field, Failure> {
    Ok(match prime {
        Some(p) => Field::new(p)?,
        None => Field::default(),
    })
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<(), Failure> {
    let io_err = |e: std::io::Error| Failure {
        code: 2,
        message: format!("{}: {e}", path.display()),
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn stats_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".stats");
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Build {
            input,
            c,
            mode,
            oracle,
            seed,
            prime,
            phi,
            sigma,
            enum_threshold,
            batch_contract,
            out,
        } => {
            if c == 0 {
                return Err(input_failure("--c must be at least 1".into()));
            }
            let mode = match mode {
                ModeArg::Existence => Mode::Existence,
                ModeArg::Expander => Mode::Expander,
            };
            if mode == Mode::Existence && (phi.is_some() || sigma.is_some()) {
                return Err(input_failure(
                    "--phi and --sigma only apply to --mode expander".into(),
                ));
            }
            if let Some(s) = sigma.filter(|s| s.is_nan() || *s < 1.0) {
                return Err(input_failure(format!("--sigma must be at least 1, got {s}")));
            }
            let config = Config {
                mode,
                oracle: match oracle {
                    OracleArg::Exact => OracleKind::Exact,
                    OracleArg::Spectral => OracleKind::Spectral,
                },
                phi,
                sigma: sigma.unwrap_or(1.0),
                enum_threshold,
                seed,
                field: field(prime)?,
                batch: batch_contract,
            };
            let graph = parse_graph(&read(&input)?)?;
            let start = Instant::now();
            let net = build_network(&graph, c, &config)?;
            let elapsed = start.elapsed();
            let stats = net.stats.render();
            write_atomic(&out, &write_graph(&net.graph, &net.terminals)?)?;
            write_atomic(&stats_path(&out), &stats)?;
            print!("{stats}");
            println!("wall_time_ms={}", elapsed.as_millis());
            Ok(())
        }
        Command::Verify {
            original,
            candidate,
            c,
        } => {
            if c == 0 {
                return Err(input_failure("--c must be at least 1".into()));
            }
            let g_in = parse_graph(&read(&original)?)?;
            let h_in = parse_graph(&read(&candidate)?)?;
            let terminals = g_in.terminal_set()?;
            let mut a = g_in.terminals.clone();
            let mut b = h_in.terminals.clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(input_failure(format!(
                    "terminal sets differ: {a:?} versus {b:?}"
                )));
            }
            let g = from_weighted(&g_in, c)?;
            let h = from_weighted(&h_in, c)?;
            let report = tc_equivalent(&g, &h, &terminals, c)?;
            println!("checked={}", report.checked);
            match report.failure {
                None => {
                    println!("equivalent=true");
                    Ok(())
                }
                Some(m) => {
                    println!("equivalent=false");
                    let side: Vec<String> = m.side.iter().map(|v| v.to_string()).collect();
                    println!("witness={}", side.join(","));
                    println!("original_value={}", m.g_value);
                    println!("candidate_value={}", m.h_value);
                    Err(Failure {
                        code: 1,
                        message: format!("not ({}, {c})-equivalent", "T"),
                    })
                }
            }
        }
        Command::Stats { input, c } => {
            let g = parse_graph(&read(&input)?)?;
            println!("vertices={}", g.n);
            println!("edges={}", g.edges.len());
            println!("total_weight={}", g.edges.iter().map(|e| e.w).sum::<i64>());
            println!("terminals={}", g.terminals.len());
            if let Some(c) = c {
                println!("capped_unit_edges={}", from_weighted(&g, c)?.num_edges());
            }
            Ok(())
        }
        Command::Selftest {
            seed,
            trials,
            prime,
        } => {
            let report = selftest::run(&SelftestConfig {
                seed,
                trials,
                field: field(prime)?,
            })?;
            print!("{}", report.render());
            if report.passed {
                Ok(())
            } else {
                Err(Failure {
                    code: 1,
                    message: "selftest failed".into(),
                })
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cmimic: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_follow_the_root_error() {
        let code = |e: Error| Failure::from(e).code;
        assert_eq!(code(Error::input("x")), 2);
        assert_eq!(code(Error::Guard("x".into())), 3);
        let randomized = Error::RandomizedFailure {
            seed: 1,
            attempts: 4,
            context: "gammoid".into(),
        };
        assert_eq!(code(randomized.at(cmimic::Stage::Cover)), 4);
        assert_eq!(code(Error::Guard("x".into()).at(cmimic::Stage::Refine)), 3);
    }

    #[test]
    fn stats_file_sits_next_to_output() {
        assert_eq!(stats_path(Path::new("out/h.txt")), PathBuf::from("out/h.txt.stats"));
    }
}
