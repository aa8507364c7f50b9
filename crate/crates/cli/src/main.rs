use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dl_lab::dump::{self, DumpConfig, DumpKind};
use dl_lab::suites::{self, run_suite, SuiteConfig, DEFAULT_MAX_SIZE};
use dllab::Error;

#[derive(Parser)]
#[command(name = "dl-lab", version, about = "Finite verification suites for Deligne-Lusztig constructions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a verification suite and write its JSON report.
    Verify {
        #[arg(long)]
        suite: String,
        #[arg(long)]
        q: Option<u64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        h: Option<u32>,
        #[arg(long = "M", default_value_t = 1)]
        m: u32,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
        max_size: u128,
        #[arg(long)]
        saturate: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// report path; the report goes to stdout when absent
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Write a CSV table.
    Dump {
        /// char-table, points or y-set
        #[arg(long)]
        kind: String,
        #[arg(long)]
        q: u64,
        #[arg(long)]
        n: u32,
        #[arg(long, default_value_t = 2)]
        h: u32,
        #[arg(long, default_value_t = 1)]
        s: u32,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_SIZE)]
        max_size: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the suites.
    Suites,
}

fn usage(msg: &str) -> ExitCode {
    eprintln!("usage error: {msg}");
    ExitCode::from(2)
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), String> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| format!("writing {}: {e}", path.display()))?;
            println!("{}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.cmd {
        Cmd::Suites => {
            for s in suites::SUITES {
                println!("{s}");
            }
            ExitCode::SUCCESS
        }
        Cmd::Verify { suite, q, n, h, m, jobs, max_size, saturate, seed, out, quiet } => {
            let cfg = SuiteConfig { suite, q, n, h, m_pi: m, jobs, max_size, saturate, seed, progress: !quiet };
            if let Err(msg) = suites::validate(&cfg) {
                return usage(&msg);
            }
            let report = match run_suite(&cfg) {
                Ok(r) => r,
                Err(e @ Error::WrongParameters(_)) => return usage(&e.to_string()),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            };
            if let Err(msg) = emit(&out, &format!("{}\n", report.to_json())) {
                eprintln!("error: {msg}");
                return ExitCode::from(1);
            }
            let passed = report.claims.iter().filter(|c| c.passed()).count();
            eprintln!("[{}] {passed}/{} claims pass", report.suite, report.claims.len());
            match report.first_failure() {
                None => ExitCode::SUCCESS,
                Some(c) => {
                    eprintln!("first failure: {} ({}) params {} expected {} observed {}", c.claim, c.anchor, c.params, c.expected, c.observed);
                    ExitCode::from(1)
                }
            }
        }
        Cmd::Dump { kind, q, n, h, s, jobs, max_size, out } => {
            let Some(kind) = DumpKind::parse(&kind) else {
                return usage(&format!("unknown dump kind '{kind}'; known: char-table, points, y-set"));
            };
            let cfg = DumpConfig { kind, q, n, h, s, max_size, jobs };
            if let Err(msg) = dump::validate(&cfg) {
                return usage(&msg);
            }
            match dump::dump(&cfg) {
                Ok(csv) => match emit(&out, &csv) {
                    Ok(()) => ExitCode::SUCCESS,
                    Err(msg) => {
                        eprintln!("error: {msg}");
                        ExitCode::from(1)
                    }
                },
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
    }
}
