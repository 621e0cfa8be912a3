//! Iterative-deepening search over summaries: candidate enumeration with
//! forbid and overlap pruning, the admissibility/feasibility pipeline, and
//! the three reporting modes.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use itertools::Itertools;
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{intervals_overlap, Problem, UpVertex};
use crate::network::{check_admissible, ContactPair, Labeling, NetworkError, SearchOptions, Summary};
use crate::oracle::{self, InstanceTooLarge};
use crate::temporal::{
    build_constraints, check_feasible, contact_interval, Feasibility, InfeasibilityCertificate, Witness,
};

const CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolveError {
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    OracleLimit(#[from] InstanceTooLarge),
    #[error("could not start worker pool: {0}")]
    WorkerPool(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Minimum,
    All,
    /// Passing summaries of exactly this cardinality with no passing (or,
    /// under [`Minimality::Admissible`], no admissible) proper subset.
    SubsetMinimal(usize),
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Minimum => "minimum",
            Mode::All => "all",
            Mode::SubsetMinimal(_) => "subset-minimal",
        }
    }
}

/// What proper subsets are compared against in subset-minimal mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Minimality {
    /// Subsets that are admissible and temporally feasible.
    #[default]
    Solution,
    /// Admissible subsets; feasibility is checked only on the minimal ones.
    Admissible,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub search: SearchOptions,
    pub overlap_prefilter: bool,
    /// Worker threads; 0 picks the number of cores.
    pub workers: usize,
    /// Route checks through the exhaustive oracles.
    pub use_oracle: bool,
    pub temporal_first: bool,
    pub minimality: Minimality,
    pub admissible_limit: usize,
    pub feasible_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            search: SearchOptions::default(),
            overlap_prefilter: true,
            workers: 0,
            use_oracle: false,
            temporal_first: false,
            minimality: Minimality::Solution,
            admissible_limit: oracle::DEFAULT_ADMISSIBLE_LIMIT,
            feasible_limit: oracle::DEFAULT_FEASIBLE_LIMIT,
        }
    }
}

impl SolverConfig {
    /// No labeling-search pruning and no overlap prefilter.
    pub fn unpruned() -> Self {
        SolverConfig {
            search: SearchOptions { prune: false },
            overlap_prefilter: false,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub summary: Summary,
    pub labeling: Labeling,
    pub witness: Witness,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rejection {
    Forbidden(ContactPair),
    OverlapPruned(ContactPair),
    NotAdmissible,
    TemporallyInfeasible(InfeasibilityCertificate),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Accepted(Solution),
    Rejected(Rejection),
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted(_))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PruneCounts {
    pub forbidden: u128,
    pub overlap: u128,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub candidates_examined: u64,
    pub elapsed: Duration,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolveReport {
    pub mode: Mode,
    pub max_contacts: usize,
    pub minimum_cardinality: Option<usize>,
    pub solutions: Vec<Solution>,
    pub admissible_rejected_by_temporal: u64,
    pub candidates_pruned: PruneCounts,
    pub stats: SearchStats,
}

/// Every unordered pair of distinct non-root up-vertices, canonical order.
pub fn all_pairs(problem: &Problem) -> Vec<ContactPair> {
    let ups: Vec<UpVertex> = problem
        .phylogeny
        .non_root_vertices()
        .map(|v| UpVertex::new(&problem.phylogeny, v).expect("non-root"))
        .collect();
    ups.iter()
        .tuple_combinations()
        .map(|(&a, &b)| ContactPair::new(a, b).expect("distinct"))
        .collect()
}

fn pair_overlaps(problem: &Problem, pair: ContactPair) -> bool {
    let a = contact_interval(problem, pair.first().base()).expect("non-root");
    let b = contact_interval(problem, pair.second().base()).expect("non-root");
    intervals_overlap(a, b)
}

/// Candidate summaries of one cardinality in canonical order, with the
/// number of summaries each pruning rule removed.
pub struct Candidates {
    pairs: Vec<ContactPair>,
    combinations: Box<dyn Iterator<Item = Vec<usize>> + Send>,
    pruned: PruneCounts,
}

impl Candidates {
    pub fn pruned(&self) -> PruneCounts {
        self.pruned
    }

    /// Pairs that survived pruning.
    pub fn allowed_pairs(&self) -> &[ContactPair] {
        &self.pairs
    }
}

impl Iterator for Candidates {
    type Item = Summary;

    fn next(&mut self) -> Option<Summary> {
        let idx = self.combinations.next()?;
        Some(Summary::new(idx.into_iter().map(|i| self.pairs[i])))
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

pub fn enumerate_candidates(problem: &Problem, cardinality: usize, overlap_prefilter: bool) -> Candidates {
    let all = all_pairs(problem);
    let total = all.len();
    let not_forbidden: Vec<ContactPair> = all
        .into_iter()
        .filter(|p| !problem.is_forbidden(p.first(), p.second()))
        .collect();
    let after_forbid = not_forbidden.len();
    let pairs: Vec<ContactPair> = if overlap_prefilter {
        not_forbidden.into_iter().filter(|&p| pair_overlaps(problem, p)).collect()
    } else {
        not_forbidden
    };
    let pruned = PruneCounts {
        forbidden: binomial(total, cardinality) - binomial(after_forbid, cardinality),
        overlap: binomial(after_forbid, cardinality) - binomial(pairs.len(), cardinality),
    };
    let combinations = (0..pairs.len()).combinations(cardinality);
    Candidates {
        pairs,
        combinations: Box::new(combinations),
        pruned,
    }
}

fn admissibility(problem: &Problem, summary: &Summary, config: &SolverConfig) -> Result<Option<Labeling>, SolveError> {
    Ok(if config.use_oracle {
        oracle::oracle_admissible(&problem.phylogeny, summary, config.admissible_limit)?
    } else {
        check_admissible(&problem.phylogeny, summary, config.search)?
    })
}

fn feasibility(problem: &Problem, summary: &Summary, config: &SolverConfig) -> Result<Feasibility, SolveError> {
    let sys = build_constraints(problem, summary);
    let result = check_feasible(&sys);
    if config.use_oracle {
        let decision = oracle::oracle_feasible(&sys, config.feasible_limit)?;
        assert_eq!(decision, result.is_feasible(), "oracle and solver disagree on feasibility");
    }
    Ok(result)
}

fn validate_summary(problem: &Problem, summary: &Summary) -> Result<(), SolveError> {
    let n = problem.phylogeny.vertex_count();
    for up in summary.up_vertices() {
        let v = up.base();
        if v.0 >= n {
            return Err(NetworkError::UnknownVertex(format!("#{}", v.0)).into());
        }
        if v == problem.phylogeny.root() {
            return Err(NetworkError::RootUpVertex(problem.phylogeny.name(v).to_string()).into());
        }
    }
    Ok(())
}

fn prefilter(problem: &Problem, summary: &Summary, config: &SolverConfig) -> Option<Rejection> {
    for &pair in summary.pairs() {
        if problem.is_forbidden(pair.first(), pair.second()) {
            return Some(Rejection::Forbidden(pair));
        }
    }
    if config.overlap_prefilter {
        for &pair in summary.pairs() {
            if !pair_overlaps(problem, pair) {
                return Some(Rejection::OverlapPruned(pair));
            }
        }
    }
    None
}

// (verdict, whether admissibility was established)
fn check_inner(problem: &Problem, summary: &Summary, config: &SolverConfig) -> Result<(Verdict, bool), SolveError> {
    validate_summary(problem, summary)?;
    if let Some(r) = prefilter(problem, summary, config) {
        return Ok((Verdict::Rejected(r), false));
    }
    let (labeling, witness) = if config.temporal_first {
        let witness = match feasibility(problem, summary, config)? {
            Feasibility::Feasible(w) => w,
            Feasibility::Infeasible(c) => return Ok((Verdict::Rejected(Rejection::TemporallyInfeasible(c)), false)),
        };
        let Some(labeling) = admissibility(problem, summary, config)? else {
            return Ok((Verdict::Rejected(Rejection::NotAdmissible), false));
        };
        (labeling, witness)
    } else {
        let Some(labeling) = admissibility(problem, summary, config)? else {
            return Ok((Verdict::Rejected(Rejection::NotAdmissible), false));
        };
        match feasibility(problem, summary, config)? {
            Feasibility::Feasible(w) => (labeling, w),
            Feasibility::Infeasible(c) => return Ok((Verdict::Rejected(Rejection::TemporallyInfeasible(c)), true)),
        }
    };
    Ok((
        Verdict::Accepted(Solution {
            summary: summary.clone(),
            labeling,
            witness,
        }),
        true,
    ))
}

/// Runs the full pipeline on one summary.
pub fn check_summary(problem: &Problem, summary: &Summary, config: &SolverConfig) -> Result<Verdict, SolveError> {
    check_inner(problem, summary, config).map(|(v, _)| v)
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, SolveError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| SolveError::WorkerPool(e.to_string()))
}

fn par_map<T: Sync, R: Send>(
    items: &[T],
    f: impl Fn(&T) -> Result<R, SolveError> + Sync + Send,
) -> Result<Vec<R>, SolveError> {
    items.par_iter().map(f).collect()
}

struct Stratum {
    solutions: Vec<Solution>,
    rejected_by_temporal: u64,
    examined: u64,
    pruned: PruneCounts,
}

fn run_stratum(problem: &Problem, cardinality: usize, config: &SolverConfig) -> Result<Stratum, SolveError> {
    let mut candidates = enumerate_candidates(problem, cardinality, config.overlap_prefilter);
    let pruned = candidates.pruned();
    let mut out = Stratum {
        solutions: Vec::new(),
        rejected_by_temporal: 0,
        examined: 0,
        pruned,
    };
    loop {
        let chunk: Vec<Summary> = candidates.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        out.examined += chunk.len() as u64;
        for (verdict, admissible) in par_map(&chunk, |s| check_inner(problem, s, config))? {
            match verdict {
                Verdict::Accepted(sol) => out.solutions.push(sol),
                Verdict::Rejected(Rejection::TemporallyInfeasible(_)) if admissible => out.rejected_by_temporal += 1,
                Verdict::Rejected(_) => {}
            }
        }
    }
    Ok(out)
}

fn add(a: PruneCounts, b: PruneCounts) -> PruneCounts {
    PruneCounts {
        forbidden: a.forbidden.saturating_add(b.forbidden),
        overlap: a.overlap.saturating_add(b.overlap),
    }
}

fn subset_minimal(problem: &Problem, c: usize, config: &SolverConfig, report: &mut SolveReport) -> Result<(), SolveError> {
    let mut candidates = enumerate_candidates(problem, c, config.overlap_prefilter);
    report.candidates_pruned = candidates.pruned();
    // candidates passing the first stage, with their labelings
    let mut survivors: Vec<(Summary, Labeling, Option<Witness>)> = Vec::new();
    loop {
        let chunk: Vec<Summary> = candidates.by_ref().take(CHUNK).collect();
        if chunk.is_empty() {
            break;
        }
        report.stats.candidates_examined += chunk.len() as u64;
        match config.minimality {
            Minimality::Solution => {
                for (verdict, admissible) in par_map(&chunk, |s| check_inner(problem, s, config))? {
                    match verdict {
                        Verdict::Accepted(s) => survivors.push((s.summary, s.labeling, Some(s.witness))),
                        Verdict::Rejected(Rejection::TemporallyInfeasible(_)) if admissible => {
                            report.admissible_rejected_by_temporal += 1
                        }
                        Verdict::Rejected(_) => {}
                    }
                }
            }
            Minimality::Admissible => {
                let labelings = par_map(&chunk, |s| {
                    if prefilter(problem, s, config).is_some() {
                        return Ok(None);
                    }
                    admissibility(problem, s, config)
                })?;
                for (s, l) in chunk.into_iter().zip(labelings) {
                    if let Some(l) = l {
                        survivors.push((s, l, None));
                    }
                }
            }
        }
    }

    let subsets: Vec<Summary> = survivors
        .iter()
        .flat_map(|(s, _, _)| s.proper_subsets())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let passing = par_map(&subsets, |s| {
        Ok(match config.minimality {
            Minimality::Solution => check_summary(problem, s, config)?.is_accepted(),
            Minimality::Admissible => prefilter(problem, s, config).is_none() && admissibility(problem, s, config)?.is_some(),
        })
    })?;
    let passing: BTreeMap<&Summary, bool> = subsets.iter().zip(passing).collect();

    let minimal: Vec<_> = survivors
        .into_iter()
        .filter(|(s, _, _)| !s.proper_subsets().any(|x| passing.get(&x).copied().unwrap_or(false)))
        .collect();
    let checked = par_map(&minimal, |(s, l, w)| {
        Ok(match w {
            Some(w) => Some(w.clone()),
            None => match feasibility(problem, s, config)? {
                Feasibility::Feasible(w) => Some(w),
                Feasibility::Infeasible(_) => None,
            },
        })
        .map(|w| (s.clone(), l.clone(), w))
    })?;
    for (summary, labeling, witness) in checked {
        match witness {
            Some(witness) => report.solutions.push(Solution {
                summary,
                labeling,
                witness,
            }),
            None => report.admissible_rejected_by_temporal += 1,
        }
    }
    if !report.solutions.is_empty() {
        report.minimum_cardinality = Some(c);
    }
    Ok(())
}

/// Searches summaries of cardinality at most `problem.max_contacts`.
pub fn solve(problem: &Problem, mode: Mode, config: &SolverConfig) -> Result<SolveReport, SolveError> {
    let started = Instant::now();
    let mut report = SolveReport {
        mode,
        max_contacts: problem.max_contacts,
        minimum_cardinality: None,
        solutions: Vec::new(),
        admissible_rejected_by_temporal: 0,
        candidates_pruned: PruneCounts::default(),
        stats: SearchStats::default(),
    };
    pool(config.workers)?.install(|| -> Result<(), SolveError> {
        match mode {
            Mode::SubsetMinimal(c) => subset_minimal(problem, c, config, &mut report),
            Mode::Minimum | Mode::All => {
                for c in 0..=problem.max_contacts {
                    let stratum = run_stratum(problem, c, config)?;
                    report.stats.candidates_examined += stratum.examined;
                    report.admissible_rejected_by_temporal += stratum.rejected_by_temporal;
                    report.candidates_pruned = add(report.candidates_pruned, stratum.pruned);
                    if !stratum.solutions.is_empty() && report.minimum_cardinality.is_none() {
                        report.minimum_cardinality = Some(c);
                    }
                    let found = !stratum.solutions.is_empty();
                    report.solutions.extend(stratum.solutions);
                    if found && mode == Mode::Minimum {
                        break;
                    }
                }
                Ok(())
            }
        }
    })?;
    report.stats.elapsed = started.elapsed();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{toy4, toy4_dated};
    use crate::model::{Interval, TimeIntervals};

    fn names(problem: &Problem, s: &Summary) -> Vec<(String, String)> {
        let p = &problem.phylogeny;
        s.pairs()
            .iter()
            .map(|c| (p.name(c.first().base()).to_string(), p.name(c.second().base()).to_string()))
            .collect()
    }

    #[test]
    fn fifteen_pairs_without_restrictions() {
        let q = Problem::unconstrained(toy4(), 1);
        let all: Vec<Summary> = enumerate_candidates(&q, 1, true).collect();
        assert_eq!(all.len(), 15);
        assert_eq!(names(&q, &all[0]), vec![("A".into(), "B".into())]);
        assert_eq!(names(&q, &all[14]), vec![("E".into(), "F".into())]);
        let mut sorted = all.clone();
        sorted.sort();
        assert_eq!(sorted, all);
        assert_eq!(enumerate_candidates(&q, 0, true).count(), 1);
        assert_eq!(enumerate_candidates(&q, 2, true).count(), 105);
    }

    #[test]
    fn forbidden_pairs_are_counted_and_skipped() {
        let p = toy4();
        let v = |n: &str| p.vertex(n).unwrap();
        let iv = TimeIntervals::unbounded(p.vertex_count());
        let q = Problem::new(p.clone(), iv, [(v("B"), v("D"))], 2).unwrap();
        let c = enumerate_candidates(&q, 2, true);
        assert_eq!(c.pruned(), PruneCounts { forbidden: 14, overlap: 0 });
        let bd = Summary::from_names(&q.phylogeny, &[("B", "D")]).unwrap();
        assert!(c.into_iter().all(|s| !s.contains(bd.pairs()[0])));
        assert!(matches!(
            check_summary(&q, &bd, &SolverConfig::default()).unwrap(),
            Verdict::Rejected(Rejection::Forbidden(_))
        ));
    }

    #[test]
    fn toy4_minimum_is_one_contact() {
        let q = toy4_dated();
        let r = solve(&q, Mode::Minimum, &SolverConfig::default()).unwrap();
        assert_eq!(r.minimum_cardinality, Some(1));
        let bd = Summary::from_names(&q.phylogeny, &[("B", "D")]).unwrap();
        assert!(r.solutions.iter().any(|s| s.summary == bd));
        assert!(r.solutions.iter().all(|s| s.summary.len() == 1));
    }

    #[test]
    fn toy4_without_contacts_has_no_solution() {
        let mut q = toy4_dated();
        q.max_contacts = 0;
        let r = solve(&q, Mode::Minimum, &SolverConfig::default()).unwrap();
        assert_eq!(r.minimum_cardinality, None);
        assert!(r.solutions.is_empty());
        assert_eq!(r.stats.candidates_examined, 1);
    }

    #[test]
    fn check_summary_rejections() {
        let q = toy4_dated();
        let cfg = SolverConfig::default();
        let bc = Summary::from_names(&q.phylogeny, &[("B", "C")]).unwrap();
        assert_eq!(check_summary(&q, &bc, &cfg).unwrap(), Verdict::Rejected(Rejection::NotAdmissible));

        let p = toy4();
        let v = |n: &str| p.vertex(n).unwrap();
        let mut iv = TimeIntervals::unbounded(p.vertex_count());
        iv.set(v("R"), Interval::years(-1100, -900).unwrap());
        iv.set(v("E"), Interval::years(-100, 500).unwrap());
        iv.set(v("F"), Interval::years(600, 1100).unwrap());
        for l in ["A", "B", "C", "D"] {
            iv.set(v(l), Interval::years(1900, 2100).unwrap());
        }
        let q = Problem::new(p.clone(), iv, [], 1).unwrap();
        let ec = Summary::from_names(&p, &[("E", "C")]).unwrap();
        assert!(matches!(
            check_summary(&q, &ec, &cfg).unwrap(),
            Verdict::Rejected(Rejection::OverlapPruned(_))
        ));
        let unpruned = SolverConfig::unpruned();
        let verdict = check_summary(&q, &ec, &unpruned).unwrap();
        assert!(
            matches!(verdict, Verdict::Rejected(Rejection::TemporallyInfeasible(_)) | Verdict::Rejected(Rejection::NotAdmissible)),
            "{verdict:?}"
        );
        let temporal_first = SolverConfig {
            temporal_first: true,
            ..unpruned
        };
        assert!(matches!(
            check_summary(&q, &ec, &temporal_first).unwrap(),
            Verdict::Rejected(Rejection::TemporallyInfeasible(_))
        ));
    }

    #[test]
    fn modes_agree_and_are_deterministic() {
        let q = toy4_dated();
        let one = SolverConfig {
            workers: 1,
            ..SolverConfig::default()
        };
        let many = SolverConfig {
            workers: 4,
            ..SolverConfig::default()
        };
        let min = solve(&q, Mode::Minimum, &one).unwrap();
        let all = solve(&q, Mode::All, &many).unwrap();
        let slice: Vec<_> = all.solutions.iter().filter(|s| s.summary.len() == 1).cloned().collect();
        assert_eq!(min.solutions, slice);
        let again = solve(&q, Mode::Minimum, &many).unwrap();
        assert_eq!(min.solutions, again.solutions);
    }

    #[test]
    fn subset_minimal_discards_supersets() {
        let q = toy4_dated();
        let r = solve(&q, Mode::SubsetMinimal(2), &SolverConfig::default()).unwrap();
        let singles = solve(&q, Mode::Minimum, &SolverConfig::default()).unwrap();
        for s in &r.solutions {
            assert_eq!(s.summary.len(), 2);
            for single in &singles.solutions {
                assert!(!single.summary.pairs().iter().all(|p| s.summary.contains(*p)));
            }
        }
        let adm = SolverConfig {
            minimality: Minimality::Admissible,
            ..SolverConfig::default()
        };
        let r2 = solve(&q, Mode::SubsetMinimal(2), &adm).unwrap();
        for s in &r2.solutions {
            for sub in s.summary.proper_subsets() {
                assert!(check_admissible(&q.phylogeny, &sub, SearchOptions::default()).unwrap().is_none());
            }
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(6, 2), 15);
        assert_eq!(binomial(15, 0), 1);
        assert_eq!(binomial(3, 5), 0);
        assert_eq!(binomial(60, 30), 118264581564861424);
    }
}
