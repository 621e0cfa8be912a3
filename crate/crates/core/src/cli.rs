//! The `tempnet` command-line tool.
//!
//! Exit codes: 0 when solutions are found or a check passes, 1 when there
//! is no solution or the summary is rejected, 2 on input or usage errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::io::{
    export_dot, parse_contacts, parse_problem, render_essential, render_feasibility, render_report, render_verdict,
    ReportFormat, ReportOptions,
};
use crate::model::Problem;
use crate::network::{build_network, check_admissible, SearchOptions, Summary};
use crate::solver::{check_summary, solve, Minimality, Mode, SolverConfig, Verdict};
use crate::temporal::{build_constraints, check_feasible};

#[derive(Parser, Debug)]
#[command(name = "tempnet", version, about = "Find small sets of lateral contacts that make a dated phylogeny perfect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Search for minimal contact summaries.
    Solve(SolveArgs),
    /// Run the full pipeline on one summary.
    Check(CheckArgs),
    /// Decide temporal feasibility of one summary.
    Filter(FilterArgs),
    /// Print the states shared by at least two leaves, per character.
    Essential(CommonArgs),
    /// Write the network of a summary in DOT format.
    ExportDot(ExportArgs),
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// Problem file.
    file: PathBuf,
    /// Output format: json or text.
    #[arg(long, default_value = "text")]
    format: String,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Disable pruning in the labeling search.
    #[arg(long)]
    no_prune: bool,
    /// Disable the contact-interval overlap prefilter.
    #[arg(long)]
    no_overlap_prefilter: bool,
    /// Route checks through the exhaustive oracles (small inputs only).
    #[arg(long)]
    oracle: bool,
    /// Check temporal feasibility before admissibility.
    #[arg(long)]
    temporal_first: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Minimum,
    All,
    SubsetMinimal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MinimalityArg {
    Solution,
    Admissible,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Largest number of contacts; overrides the file.
    #[arg(long)]
    max_contacts: Option<usize>,
    /// subset-minimal reports summaries of exactly --max-contacts contacts.
    #[arg(long, value_enum, default_value = "minimum")]
    mode: ModeArg,
    /// In subset-minimal mode, compare against passing or merely admissible subsets.
    #[arg(long, value_enum, default_value = "solution")]
    minimal_wrt: MinimalityArg,
    /// Write the first solution's network here.
    #[arg(long)]
    dot: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Drop characters with fewer than two essential states first.
    #[arg(long)]
    drop_uninformative: bool,
    /// Include elapsed time in the report.
    #[arg(long)]
    timing: bool,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Contacts as `child1:child2[,child3:child4...]`.
    #[arg(long, default_value = "")]
    contacts: String,
    /// Write the network (labeled when accepted) here.
    #[arg(long)]
    dot: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FilterArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long, default_value = "")]
    contacts: String,
}

#[derive(Args, Debug)]
struct ExportArgs {
    /// Problem file.
    file: PathBuf,
    #[arg(long, default_value = "")]
    contacts: String,
    /// Annotate vertices with an admissible labeling when one exists.
    #[arg(long)]
    label: bool,
    /// Output path; standard output when absent.
    #[arg(long)]
    dot: Option<PathBuf>,
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string())
    }
}

fn load(path: &Path) -> Result<Problem, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    parse_problem(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn config(p: &PipelineArgs) -> SolverConfig {
    SolverConfig {
        search: SearchOptions { prune: !p.no_prune },
        overlap_prefilter: !p.no_overlap_prefilter,
        use_oracle: p.oracle,
        temporal_first: p.temporal_first,
        ..SolverConfig::default()
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure(format!("{}: {e}", path.display())))
}

fn run_command(command: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Solve(a) => {
            let format: ReportFormat = a.common.format.parse()?;
            let mut problem = load(&a.common.file)?;
            if let Some(k) = a.max_contacts {
                problem.max_contacts = k;
            }
            if a.drop_uninformative {
                problem.phylogeny = problem.phylogeny.without_uninformative();
            }
            let mode = match a.mode {
                ModeArg::Minimum => Mode::Minimum,
                ModeArg::All => Mode::All,
                ModeArg::SubsetMinimal => Mode::SubsetMinimal(problem.max_contacts),
            };
            let cfg = SolverConfig {
                workers: a.workers,
                minimality: match a.minimal_wrt {
                    MinimalityArg::Solution => Minimality::Solution,
                    MinimalityArg::Admissible => Minimality::Admissible,
                },
                ..config(&a.pipeline)
            };
            let report = solve(&problem, mode, &cfg)?;
            let text = render_report(&report, &problem, format, ReportOptions { timing: a.timing });
            out.write_all(text.as_bytes())?;
            if let (Some(path), Some(first)) = (&a.dot, report.solutions.first()) {
                let network = build_network(&problem.phylogeny, &first.summary)?;
                write_file(path, &export_dot(&network, Some(&first.labeling))?)?;
            }
            Ok(if report.solutions.is_empty() { 1 } else { 0 })
        }
        Command::Check(a) => {
            let format: ReportFormat = a.common.format.parse()?;
            let problem = load(&a.common.file)?;
            let summary = parse_contacts(&problem.phylogeny, &a.contacts)?;
            let verdict = check_summary(&problem, &summary, &config(&a.pipeline))?;
            out.write_all(render_verdict(&verdict, &problem, &summary, format).as_bytes())?;
            if let Some(path) = &a.dot {
                let network = build_network(&problem.phylogeny, &summary)?;
                let labeling = match &verdict {
                    Verdict::Accepted(s) => Some(&s.labeling),
                    Verdict::Rejected(_) => None,
                };
                write_file(path, &export_dot(&network, labeling)?)?;
            }
            Ok(if verdict.is_accepted() { 0 } else { 1 })
        }
        Command::Filter(a) => {
            let format: ReportFormat = a.common.format.parse()?;
            let problem = load(&a.common.file)?;
            let summary = parse_contacts(&problem.phylogeny, &a.contacts)?;
            let sys = build_constraints(&problem, &summary);
            let result = check_feasible(&sys);
            out.write_all(render_feasibility(&result, &sys, &problem, format).as_bytes())?;
            Ok(if result.is_feasible() { 0 } else { 1 })
        }
        Command::Essential(a) => {
            let format: ReportFormat = a.format.parse()?;
            let problem = load(&a.file)?;
            out.write_all(render_essential(&problem.phylogeny, format).as_bytes())?;
            Ok(0)
        }
        Command::ExportDot(a) => {
            let problem = load(&a.file)?;
            let summary: Summary = parse_contacts(&problem.phylogeny, &a.contacts)?;
            let network = build_network(&problem.phylogeny, &summary)?;
            let labeling = if a.label {
                check_admissible(&problem.phylogeny, &summary, SearchOptions::default())?
            } else {
                None
            };
            let dot = export_dot(&network, labeling.as_ref())?;
            match &a.dot {
                Some(path) => write_file(path, &dot)?,
                None => out.write_all(dot.as_bytes())?,
            }
            Ok(0)
        }
    }
}

/// Runs the tool on `args` (including the program name) and returns the
/// exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = err.write_all(text.as_bytes());
                2
            } else {
                let _ = out.write_all(text.as_bytes());
                0
            };
        }
    };
    match run_command(cli.command, out) {
        Ok(code) => code,
        Err(Failure(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            2
        }
    }
}
