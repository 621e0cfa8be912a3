//! Time assignments: the difference-constraint system a summary imposes,
//! its exact feasibility decision with witnesses and infeasibility
//! certificates, and the contact-interval prefilter.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;

use num_rational::Ratio;
use thiserror::Error;

use crate::model::{ExtYear, Interval, Problem, VertexId};
use crate::network::{NetVertex, Summary};

pub type Rational = Ratio<i128>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TemporalError {
    #[error("the root `{0}` has no contact interval")]
    RootHasNoContactInterval(String),
}

/// The open span `(tau_min(parent(v)), tau_max(v))` in which `v↑` can be
/// spoken. May be empty when the bounds are inconsistent.
pub fn contact_interval(problem: &Problem, v: VertexId) -> Result<Interval, TemporalError> {
    let phylogeny = &problem.phylogeny;
    let parent = phylogeny
        .parent(v)
        .ok_or_else(|| TemporalError::RootHasNoContactInterval(phylogeny.name(v).to_string()))?;
    Ok(Interval {
        lo: problem.intervals.get(parent).lo,
        hi: problem.intervals.get(v).hi,
    })
}

/// A time variable: the distinguished origin (year 0) or a network vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Variable {
    Origin,
    Vertex(NetVertex),
}

/// `x - y < bound` when strict, `x - y <= bound` otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DiffConstraint {
    pub x: usize,
    pub y: usize,
    pub bound: i64,
    pub strict: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSystem {
    variables: Vec<Variable>,
    index: HashMap<Variable, usize>,
    constraints: Vec<DiffConstraint>,
    equalities: Vec<(usize, usize)>,
}

impl ConstraintSystem {
    /// A system holding only the origin.
    pub fn new() -> Self {
        let mut s = ConstraintSystem::default();
        s.variable(Variable::Origin);
        s
    }

    /// Index of `v`, declaring it if needed.
    pub fn variable(&mut self, v: Variable) -> usize {
        if let Some(&i) = self.index.get(&v) {
            return i;
        }
        self.variables.push(v);
        self.index.insert(v, self.variables.len() - 1);
        self.variables.len() - 1
    }

    pub fn index_of(&self, v: Variable) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn origin(&self) -> usize {
        self.index[&Variable::Origin]
    }

    pub fn add_difference(&mut self, x: Variable, y: Variable, bound: i64, strict: bool) {
        let (x, y) = (self.variable(x), self.variable(y));
        self.constraints.push(DiffConstraint { x, y, bound, strict });
    }

    pub fn add_equality(&mut self, x: Variable, y: Variable) {
        let (x, y) = (self.variable(x), self.variable(y));
        self.equalities.push((x, y));
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[DiffConstraint] {
        &self.constraints
    }

    pub fn equalities(&self) -> &[(usize, usize)] {
        &self.equalities
    }

    /// Exact check of a full assignment indexed like [`Self::variables`].
    pub fn is_satisfied_by(&self, values: &[Rational]) -> bool {
        let diffs_ok = self.constraints.iter().all(|c| {
            let d = values[c.x] - values[c.y];
            let b = Rational::from_integer(c.bound as i128);
            if c.strict {
                d < b
            } else {
                d <= b
            }
        });
        diffs_ok && self.equalities.iter().all(|&(a, b)| values[a] == values[b])
    }
}

/// Emits the bound, descent, subdivision and simultaneity constraints a
/// summary places on the times of `V ∪ V_X`.
pub fn build_constraints(problem: &Problem, summary: &Summary) -> ConstraintSystem {
    let phylogeny = &problem.phylogeny;
    let mut sys = ConstraintSystem::new();
    let origin = Variable::Origin;
    let tree = |v: VertexId| Variable::Vertex(NetVertex::Tree(v));
    let up = |v: VertexId| Variable::Vertex(NetVertex::Up(v));
    for v in phylogeny.vertices() {
        sys.variable(tree(v));
    }
    for u in summary.up_vertices() {
        sys.variable(up(u.base()));
    }

    for v in phylogeny.vertices() {
        let iv = problem.intervals.get(v);
        if let ExtYear::Year(hi) = iv.hi {
            sys.add_difference(tree(v), origin, hi, true);
        }
        if let ExtYear::Year(lo) = iv.lo {
            sys.add_difference(origin, tree(v), -lo, true);
        }
    }
    for v in phylogeny.non_root_vertices() {
        let p = phylogeny.parent(v).expect("non-root");
        sys.add_difference(tree(p), tree(v), 0, true);
    }
    for u in summary.up_vertices() {
        let v = u.base();
        let p = phylogeny.parent(v).expect("contact points sit below the root");
        sys.add_difference(tree(p), up(v), 0, true);
        sys.add_difference(up(v), tree(v), 0, true);
    }
    for pair in summary.pairs() {
        sys.add_equality(up(pair.first().base()), up(pair.second().base()));
    }
    sys
}

/// Times for every variable of a system; origin is 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witness {
    pub times: BTreeMap<Variable, Rational>,
}

/// One step of a closed walk through the constraint graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleStep {
    /// Constraint `x - y ≤ b`, walked from `y` to `x`.
    Difference(usize),
    /// Equality `(a, b)`, walked from `a` to `b` or back when `reversed`.
    Equality { index: usize, reversed: bool },
}

/// A closed walk whose bounds sum below zero, or to zero through a strict
/// constraint, so no assignment can satisfy all of its steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfeasibilityCertificate {
    pub steps: Vec<CycleStep>,
}

impl InfeasibilityCertificate {
    fn step(sys: &ConstraintSystem, s: CycleStep) -> (usize, usize, i64, bool) {
        match s {
            CycleStep::Difference(i) => {
                let c = sys.constraints[i];
                (c.y, c.x, c.bound, c.strict)
            }
            CycleStep::Equality { index, reversed } => {
                let (a, b) = sys.equalities[index];
                if reversed {
                    (b, a, 0, false)
                } else {
                    (a, b, 0, false)
                }
            }
        }
    }

    pub fn bound_sum(&self, sys: &ConstraintSystem) -> i64 {
        self.steps.iter().map(|&s| Self::step(sys, s).2).sum()
    }

    pub fn strict_count(&self, sys: &ConstraintSystem) -> usize {
        self.steps.iter().filter(|&&s| Self::step(sys, s).3).count()
    }

    /// Steps chain into a closed walk meeting the negative-or-zero-strict rule.
    pub fn is_valid(&self, sys: &ConstraintSystem) -> bool {
        if self.steps.is_empty() {
            return false;
        }
        let walk: Vec<_> = self.steps.iter().map(|&s| Self::step(sys, s)).collect();
        let chained = (0..walk.len()).all(|i| walk[i].1 == walk[(i + 1) % walk.len()].0);
        let sum = self.bound_sum(sys);
        chained && (sum < 0 || (sum == 0 && self.strict_count(sys) > 0))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Feasibility {
    Feasible(Witness),
    Infeasible(InfeasibilityCertificate),
}

impl Feasibility {
    pub fn is_feasible(&self) -> bool {
        matches!(self, Feasibility::Feasible(_))
    }
}

/// Path length `bound - strict·ε` with ε infinitesimal, ordered
/// lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Weight(i64, i64);

impl Weight {
    fn of(c: &DiffConstraint) -> Weight {
        Weight(c.bound, -(c.strict as i64))
    }

    fn add(self, o: Weight) -> Weight {
        Weight(self.0 + o.0, self.1 + o.1)
    }
}

struct Edge {
    from: usize,
    to: usize,
    weight: Weight,
    constraint: usize,
}

enum Relaxation {
    Settled(Vec<Weight>),
    Cycle(Vec<usize>),
}

/// Bellman-Ford from a virtual source joined to every node by a zero edge.
fn relax_all(nodes: usize, edges: &[Edge]) -> Relaxation {
    let mut dist = vec![Weight(0, 0); nodes];
    let mut pred: Vec<Option<usize>> = vec![None; nodes];
    let mut last_changed = None;
    for _round in 0..=nodes {
        last_changed = None;
        for (k, e) in edges.iter().enumerate() {
            let cand = dist[e.from].add(e.weight);
            if cand < dist[e.to] {
                dist[e.to] = cand;
                pred[e.to] = Some(k);
                last_changed = Some(e.to);
            }
        }
        if last_changed.is_none() {
            return Relaxation::Settled(dist);
        }
    }
    let mut v = last_changed.expect("relaxation in final round");
    for _ in 0..nodes {
        v = edges[pred[v].expect("predecessor chain")].from;
    }
    let start = v;
    let mut cycle = Vec::new();
    loop {
        let k = pred[v].expect("predecessor chain");
        cycle.push(k);
        v = edges[k].from;
        if v == start {
            break;
        }
    }
    cycle.reverse();
    Relaxation::Cycle(cycle)
}

fn equality_classes(sys: &ConstraintSystem) -> (Vec<usize>, usize) {
    let n = sys.variables.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in &sys.equalities {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    }
    let mut ids: HashMap<usize, usize> = HashMap::new();
    let class: Vec<usize> = (0..n)
        .map(|v| {
            let r = find(&mut parent, v);
            let next = ids.len();
            *ids.entry(r).or_insert(next)
        })
        .collect();
    let count = ids.len();
    (class, count)
}

/// Steps along equality constraints from `from` to `to` (same class).
fn equality_path(sys: &ConstraintSystem, from: usize, to: usize) -> Vec<CycleStep> {
    if from == to {
        return Vec::new();
    }
    let mut came: HashMap<usize, CycleStep> = HashMap::new();
    let mut queue = VecDeque::from([from]);
    came.insert(from, CycleStep::Difference(usize::MAX));
    while let Some(v) = queue.pop_front() {
        if v == to {
            break;
        }
        for (i, &(a, b)) in sys.equalities.iter().enumerate() {
            let (next, reversed) = match (a == v, b == v) {
                (true, _) => (b, false),
                (_, true) => (a, true),
                _ => continue,
            };
            if let std::collections::hash_map::Entry::Vacant(e) = came.entry(next) {
                e.insert(CycleStep::Equality { index: i, reversed });
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut v = to;
    while v != from {
        let step = came[&v];
        path.push(step);
        let CycleStep::Equality { index, reversed } = step else {
            unreachable!("equality path")
        };
        let (a, b) = sys.equalities[index];
        v = if reversed { b } else { a };
    }
    path.reverse();
    path
}

/// Exact feasibility over the reals.
///
/// Equalities are merged, then lexicographic shortest paths over
/// `(bound, -strict)` weights either settle or expose a cycle that is
/// negative or zero with a strict step. Settled potentials become times by
/// reading the strictness part as multiples of `ε = 1/(classes + 1)`. The
/// reported witness is the midpoint of the latest and earliest such
/// solutions (both shifted to put the origin at 0) and is checked against
/// every constraint before it is returned.
pub fn check_feasible(sys: &ConstraintSystem) -> Feasibility {
    let (class, m) = equality_classes(sys);
    let forward: Vec<Edge> = sys
        .constraints
        .iter()
        .enumerate()
        .map(|(i, c)| Edge {
            from: class[c.y],
            to: class[c.x],
            weight: Weight::of(c),
            constraint: i,
        })
        .collect();

    let late = match relax_all(m, &forward) {
        Relaxation::Settled(d) => d,
        Relaxation::Cycle(edges) => {
            let mut steps = Vec::new();
            let k = edges.len();
            for (j, &e) in edges.iter().enumerate() {
                let c = sys.constraints[forward[e].constraint];
                steps.push(CycleStep::Difference(forward[e].constraint));
                let next = sys.constraints[forward[edges[(j + 1) % k]].constraint];
                steps.extend(equality_path(sys, c.x, next.y));
            }
            let cert = InfeasibilityCertificate { steps };
            assert!(cert.is_valid(sys), "certificate must be a bad closed walk");
            return Feasibility::Infeasible(cert);
        }
    };
    let backward: Vec<Edge> = forward
        .iter()
        .map(|e| Edge {
            from: e.to,
            to: e.from,
            weight: e.weight,
            constraint: e.constraint,
        })
        .collect();
    let early = match relax_all(m, &backward) {
        Relaxation::Settled(d) => d,
        Relaxation::Cycle(_) => unreachable!("reversal preserves cycle weights"),
    };

    let eps = Rational::new(1, m as i128 + 1);
    let value = |w: Weight| Rational::from_integer(w.0 as i128) + eps * Rational::from_integer(w.1 as i128);
    let o = class[sys.origin()];
    let (late0, early0) = (value(late[o]), value(early[o]));
    let two = Rational::from_integer(2);
    let per_class: Vec<Rational> = (0..m)
        .map(|c| ((value(late[c]) - late0) + (early0 - value(early[c]))) / two)
        .collect();
    let values: Vec<Rational> = (0..sys.variables.len()).map(|v| per_class[class[v]]).collect();
    assert!(sys.is_satisfied_by(&values), "witness must satisfy the system");
    Feasibility::Feasible(Witness {
        times: sys.variables.iter().copied().zip(values).collect(),
    })
}

/// `1400`, `-2801/2`.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (v, t) in &self.times {
            writeln!(f, "{v:?} = {}", format_rational(t))?;
        }
        Ok(())
    }
}
