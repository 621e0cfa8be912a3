//! JSON and plain-text rendering of solver results.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::ser::{Serialize, SerializeMap, Serializer};
use serde::Serialize as DeriveSerialize;
use thiserror::Error;

use crate::model::{Phylogeny, Problem};
use crate::network::{ContactPair, Labeling, NetVertex, Summary};
use crate::solver::{Rejection, Solution, SolveReport, Verdict};
use crate::temporal::{format_rational, ConstraintSystem, CycleStep, Feasibility, InfeasibilityCertificate, Variable, Witness};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("unknown format `{0}` (expected `json` or `text`)")]
    UnknownFormat(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Text,
}

impl FromStr for ReportFormat {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, ReportError> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "text" => Ok(ReportFormat::Text),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReportOptions {
    /// Include wall-clock time; off by default so output is reproducible.
    pub timing: bool,
}

/// A JSON object whose keys keep insertion order.
struct Ordered<V>(Vec<(String, V)>);

impl<V: Serialize> Serialize for Ordered<V> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn var_name(p: &Phylogeny, v: Variable) -> String {
    match v {
        Variable::Origin => "origin".to_string(),
        Variable::Vertex(nv) => nv.display_name(p),
    }
}

fn contact_line(p: &Phylogeny, pair: ContactPair) -> String {
    format!(
        "{} -- {}",
        NetVertex::Up(pair.first().base()).display_name(p),
        NetVertex::Up(pair.second().base()).display_name(p)
    )
}

fn labeling_json(p: &Phylogeny, g: &Labeling) -> Ordered<Ordered<String>> {
    Ordered(
        p.character_ids()
            .map(|c| {
                let row = g
                    .vertices()
                    .iter()
                    .zip(g.character(c))
                    .map(|(v, s)| (v.display_name(p), p.state_name(*s).to_string()))
                    .collect();
                (p.character(c).name.clone(), Ordered(row))
            })
            .collect(),
    )
}

fn witness_json(p: &Phylogeny, w: &Witness) -> Ordered<String> {
    Ordered(
        w.times
            .iter()
            .filter(|(v, _)| **v != Variable::Origin)
            .map(|(v, t)| (var_name(p, *v), format_rational(t)))
            .collect(),
    )
}

fn certificate_lines(p: &Phylogeny, sys: &ConstraintSystem, cert: &InfeasibilityCertificate) -> Vec<String> {
    let name = |i: usize| var_name(p, sys.variables()[i]);
    cert.steps
        .iter()
        .map(|step| match *step {
            CycleStep::Difference(i) => {
                let c = sys.constraints()[i];
                let op = if c.strict { "<" } else { "<=" };
                format!("{} - {} {op} {}", name(c.x), name(c.y), c.bound)
            }
            CycleStep::Equality { index, .. } => {
                let (a, b) = sys.equalities()[index];
                format!("{} = {}", name(a), name(b))
            }
        })
        .collect()
}

#[derive(DeriveSerialize)]
struct SolutionJson {
    summary: Vec<[String; 2]>,
    contacts: Vec<String>,
    labeling: Ordered<Ordered<String>>,
    witness: Ordered<String>,
}

fn solution_json(p: &Phylogeny, s: &Solution) -> SolutionJson {
    SolutionJson {
        summary: s
            .summary
            .pairs()
            .iter()
            .map(|c| [p.name(c.first().base()).to_string(), p.name(c.second().base()).to_string()])
            .collect(),
        contacts: s.summary.pairs().iter().map(|&c| contact_line(p, c)).collect(),
        labeling: labeling_json(p, &s.labeling),
        witness: witness_json(p, &s.witness),
    }
}

#[derive(DeriveSerialize)]
struct PrunedJson {
    forbidden: u128,
    overlap: u128,
}

#[derive(DeriveSerialize)]
struct StatsJson {
    candidates_examined: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<f64>,
}

#[derive(DeriveSerialize)]
struct ReportJson {
    mode: &'static str,
    max_contacts: usize,
    minimum_cardinality: Option<usize>,
    solutions: Vec<SolutionJson>,
    admissible_rejected_by_temporal: u64,
    candidates_pruned: PrunedJson,
    search_stats: StatsJson,
}

fn elapsed_ms(report: &SolveReport) -> f64 {
    report.stats.elapsed.as_secs_f64() * 1000.0
}

fn solution_text(out: &mut String, p: &Phylogeny, s: &Solution) {
    for &pair in s.summary.pairs() {
        let t = &s.witness.times[&Variable::Vertex(NetVertex::Up(pair.first().base()))];
        let _ = writeln!(out, "  {}  at {}", contact_line(p, pair), format_rational(t));
    }
    for c in p.character_ids() {
        let classes: Vec<String> = s
            .labeling
            .classes(c)
            .into_iter()
            .map(|(state, members)| {
                let names: Vec<String> = members.iter().map(|v| v.display_name(p)).collect();
                format!("{} {{{}}}", p.state_name(state), names.join(", "))
            })
            .collect();
        let _ = writeln!(out, "  character {}: {}", p.character(c).name, classes.join("; "));
    }
    let times: Vec<String> = s
        .witness
        .times
        .iter()
        .filter(|(v, _)| **v != Variable::Origin)
        .map(|(v, t)| format!("{}={}", var_name(p, *v), format_rational(t)))
        .collect();
    let _ = writeln!(out, "  times: {}", times.join(" "));
}

pub fn render_report(report: &SolveReport, problem: &Problem, format: ReportFormat, options: ReportOptions) -> String {
    let p = &problem.phylogeny;
    match format {
        ReportFormat::Json => {
            let doc = ReportJson {
                mode: report.mode.name(),
                max_contacts: report.max_contacts,
                minimum_cardinality: report.minimum_cardinality,
                solutions: report.solutions.iter().map(|s| solution_json(p, s)).collect(),
                admissible_rejected_by_temporal: report.admissible_rejected_by_temporal,
                candidates_pruned: PrunedJson {
                    forbidden: report.candidates_pruned.forbidden,
                    overlap: report.candidates_pruned.overlap,
                },
                search_stats: StatsJson {
                    candidates_examined: report.stats.candidates_examined,
                    elapsed_ms: options.timing.then(|| elapsed_ms(report)),
                },
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            let _ = writeln!(out, "mode: {}", report.mode.name());
            let _ = writeln!(out, "max contacts: {}", report.max_contacts);
            let min = report.minimum_cardinality.map_or("none".to_string(), |c| c.to_string());
            let _ = writeln!(out, "minimum cardinality: {min}");
            let _ = writeln!(out, "solutions: {}", report.solutions.len());
            let _ = writeln!(out, "admissible but temporally infeasible: {}", report.admissible_rejected_by_temporal);
            let _ = writeln!(out, "pruned by forbid: {}", report.candidates_pruned.forbidden);
            let _ = writeln!(out, "pruned by overlap: {}", report.candidates_pruned.overlap);
            let _ = writeln!(out, "candidates examined: {}", report.stats.candidates_examined);
            if options.timing {
                let _ = writeln!(out, "elapsed: {:.3} ms", elapsed_ms(report));
            }
            for (i, s) in report.solutions.iter().enumerate() {
                let _ = writeln!(out, "\nsolution {}:", i + 1);
                solution_text(&mut out, p, s);
            }
            out
        }
    }
}

#[derive(DeriveSerialize)]
struct VerdictJson {
    verdict: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution: Option<SolutionJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Vec<String>>,
}

/// Outcome of checking one summary.
pub fn render_verdict(verdict: &Verdict, problem: &Problem, summary: &Summary, format: ReportFormat) -> String {
    let p = &problem.phylogeny;
    let sys = crate::temporal::build_constraints(problem, summary);
    let (reason, certificate) = match verdict {
        Verdict::Accepted(_) => (None, None),
        Verdict::Rejected(r) => match r {
            Rejection::Forbidden(c) => (Some(format!("forbidden contact {}", contact_line(p, *c))), None),
            Rejection::OverlapPruned(c) => (Some(format!("contact intervals do not overlap: {}", contact_line(p, *c))), None),
            Rejection::NotAdmissible => (Some("not admissible".to_string()), None),
            Rejection::TemporallyInfeasible(cert) => {
                (Some("temporally infeasible".to_string()), Some(certificate_lines(p, &sys, cert)))
            }
        },
    };
    match format {
        ReportFormat::Json => {
            let doc = VerdictJson {
                verdict: if verdict.is_accepted() { "accepted" } else { "rejected" },
                reason,
                solution: match verdict {
                    Verdict::Accepted(s) => Some(solution_json(p, s)),
                    Verdict::Rejected(_) => None,
                },
                certificate,
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            match verdict {
                Verdict::Accepted(s) => {
                    out.push_str("accepted\n");
                    solution_text(&mut out, p, s);
                }
                Verdict::Rejected(_) => {
                    let _ = writeln!(out, "rejected: {}", reason.unwrap_or_default());
                    for line in certificate.unwrap_or_default() {
                        let _ = writeln!(out, "  {line}");
                    }
                }
            }
            out
        }
    }
}

#[derive(DeriveSerialize)]
struct FeasibilityJson {
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Ordered<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    certificate: Option<Vec<String>>,
}

/// Outcome of the temporal check alone.
pub fn render_feasibility(result: &Feasibility, sys: &ConstraintSystem, problem: &Problem, format: ReportFormat) -> String {
    let p = &problem.phylogeny;
    match format {
        ReportFormat::Json => {
            let doc = match result {
                Feasibility::Feasible(w) => FeasibilityJson {
                    feasible: true,
                    witness: Some(witness_json(p, w)),
                    certificate: None,
                },
                Feasibility::Infeasible(c) => FeasibilityJson {
                    feasible: false,
                    witness: None,
                    certificate: Some(certificate_lines(p, sys, c)),
                },
            };
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
        ReportFormat::Text => {
            let mut out = String::new();
            match result {
                Feasibility::Feasible(w) => {
                    out.push_str("feasible\n");
                    for (name, t) in witness_json(p, w).0 {
                        let _ = writeln!(out, "  {name} = {t}");
                    }
                }
                Feasibility::Infeasible(c) => {
                    out.push_str("infeasible\n");
                    for line in certificate_lines(p, sys, c) {
                        let _ = writeln!(out, "  {line}");
                    }
                }
            }
            out
        }
    }
}

/// Essential states per character.
pub fn render_essential(phylogeny: &Phylogeny, format: ReportFormat) -> String {
    let essential = crate::model::essential_states(phylogeny);
    let rows: Vec<(String, Vec<String>)> = essential
        .iter()
        .map(|(c, states)| {
            (
                phylogeny.character(*c).name.clone(),
                states.iter().map(|s| phylogeny.state_name(*s).to_string()).collect(),
            )
        })
        .collect();
    match format {
        ReportFormat::Json => {
            let mut s = serde_json::to_string_pretty(&Ordered(rows)).expect("serializable");
            s.push('\n');
            s
        }
        ReportFormat::Text => rows
            .into_iter()
            .map(|(c, states)| format!("{c}: {}\n", states.join(" ")))
            .collect(),
    }
}
