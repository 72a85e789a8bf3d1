use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use susy_dfs::{
    build_version, load_scenario, run_scenario, run_suite, suite_passed, write_outputs,
    OutputFormat, QuasiBasis, Suite, TAINT_THRESHOLD,
};

#[derive(Parser)]
#[command(
    name = "susy-dfs",
    version = build_version(),
    about = "Oscillator-network decoherence simulator: scenario runs, self-verification, quasi-mode transforms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file; write results and a metadata sidecar.
    Simulate {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Results body format (the metadata sidecar is always JSON).
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
    },
    /// Run a built-in verification suite; exit nonzero if an asserted check fails.
    Verify {
        /// Which battery of checks to run.
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
    },
    /// Print a scenario's quasi-mode transform (U and Ω per sector) as JSON.
    Diagonalize {
        /// Scenario JSON file.
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Algebra,
    Oracle,
    Dfs,
    Susy,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Algebra => Suite::Algebra,
            SuiteArg::Oracle => Suite::Oracle,
            SuiteArg::Dfs => Suite::Dfs,
            SuiteArg::Susy => Suite::Susy,
            SuiteArg::All => Suite::All,
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

/// Print to stdout, treating a closed pipe (e.g. `| head`) as success.
fn emit(text: &str) -> anyhow::Result<()> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        Err(e) => Err(e.into()),
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            format,
        } => {
            let sc = load_scenario(&scenario)?;
            let output = run_scenario(&sc)?;
            let files = write_outputs(&sc, &output, &out, format.into())?;
            emit(&format!(
                "wrote {} ({} records)\nwrote {}\n",
                files.results.display(),
                output.records.len(),
                files.metadata.display()
            ))?;
            if output.tainted {
                eprintln!(
                    "warning: truncation leakage exceeded {TAINT_THRESHOLD:.0e} at some grid point; the sidecar marks this run tainted"
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite } => {
            let reports = run_suite(suite.into())?;
            let mut text = String::new();
            for report in &reports {
                text.push_str(&format!("{report}\n"));
            }
            let passed = reports.iter().filter(|r| r.passed == Some(true)).count();
            let failed = reports.iter().filter(|r| r.passed == Some(false)).count();
            let info = reports.iter().filter(|r| r.passed.is_none()).count();
            text.push_str(&format!(
                "{passed} passed, {failed} failed, {info} informational\n"
            ));
            emit(&text)?;
            Ok(if suite_passed(&reports) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Diagonalize { scenario } => {
            let sc = load_scenario(&scenario)?;
            let spec = sc.network_spec()?;
            let basis = sc.quasi_basis(&spec)?;
            let doc = serde_json::json!({
                "scenario": sc.name,
                "boson": sector_json(spec.boson_sites(), &basis.boson),
                "fermion": sector_json(spec.fermion_sites(), &basis.fermion),
            });
            emit(&format!("{}\n", serde_json::to_string_pretty(&doc)?))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// One sector of the transform: mode indices, the unitary as [re, im] pairs
/// (u[i][k] weights site i in quasi mode k), and the mode frequencies.
fn sector_json(sites: Vec<usize>, basis: &QuasiBasis) -> serde_json::Value {
    let u = basis.u();
    let rows: Vec<Vec<[f64; 2]>> = (0..u.nrows())
        .map(|i| (0..u.ncols()).map(|k| [u[[i, k]].re, u[[i, k]].im]).collect())
        .collect();
    serde_json::json!({
        "sites": sites,
        "u": rows,
        "omega": basis.omega(),
        "unitarity_defect": basis.unitarity_defect(),
    })
}
