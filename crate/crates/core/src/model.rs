//! Core problem objects: the rooted phylogeny with its leaf character data,
//! per-vertex open time intervals, and the problem instance tying them
//! together with forbidden contacts and the contact bound.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Index of a tree vertex. Vertices are numbered in lexicographic order of
/// their identifiers, so comparing ids compares names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VertexId(pub usize);

/// Index of a character, in lexicographic order of character names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CharId(pub usize);

/// Index into the global state set, in lexicographic order of state names.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("duplicate vertex `{0}`")]
    DuplicateVertex(String),
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("duplicate edge `{0}` -> `{1}`")]
    DuplicateEdge(String, String),
    #[error("vertex `{0}` has more than one parent")]
    InDegreeViolation(String),
    #[error("tree has no root (every vertex has a parent)")]
    NoRoot,
    #[error("more than one vertex without a parent: {}", .0.join(", "))]
    MultipleRoots(Vec<String>),
    #[error("vertex `{0}` is not reachable from the root")]
    UnreachableVertex(String),
    #[error("duplicate character `{0}`")]
    DuplicateCharacter(String),
    #[error("unknown character `{0}`")]
    UnknownCharacter(String),
    #[error("leaf `{leaf}` has no state for character `{character}`")]
    MissingLeafLabel { leaf: String, character: String },
    #[error("vertex `{vertex}` is not a leaf but is labeled for character `{character}`")]
    LabelOnInternalVertex { vertex: String, character: String },
    #[error("leaf `{leaf}` is labeled twice for character `{character}`")]
    DuplicateLabel { leaf: String, character: String },
    #[error("state `{state}` of leaf `{leaf}` is not a declared state of character `{character}`")]
    UnknownState {
        leaf: String,
        character: String,
        state: String,
    },
    #[error("interval ({lo}, {hi}) of vertex `{vertex}` is empty")]
    EmptyInterval {
        vertex: String,
        lo: ExtYear,
        hi: ExtYear,
    },
    #[error("the root `{0}` has no contact point above it")]
    RootUpVertex(String),
    #[error("forbidden pair names the same vertex `{0}` twice")]
    ForbidSelf(String),
}

/// Unvalidated phylogeny input, also produced by [`Phylogeny::to_raw`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawPhylogeny {
    pub vertices: Vec<String>,
    pub edges: Vec<(String, String)>,
    /// Character name and its declared states.
    pub characters: Vec<(String, Vec<String>)>,
    /// `(leaf, character, state)` triples.
    pub labels: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Character {
    pub name: String,
    /// Declared states, sorted.
    pub states: Vec<StateId>,
}

/// A validated rooted tree with characters and a total leaf labeling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phylogeny {
    names: Vec<String>,
    index: HashMap<String, VertexId>,
    root: VertexId,
    parent: Vec<Option<VertexId>>,
    children: Vec<Vec<VertexId>>,
    leaves: Vec<VertexId>,
    characters: Vec<Character>,
    states: Vec<String>,
    // labels[char][vertex], Some exactly on leaves
    labels: Vec<Vec<Option<StateId>>>,
}

/// Checks the tree shape and the leaf labeling and builds a [`Phylogeny`].
pub fn validate_phylogeny(raw: RawPhylogeny) -> Result<Phylogeny, ModelError> {
    let mut names = raw.vertices;
    names.sort();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(ModelError::DuplicateVertex(w[0].clone()));
    }
    let index: HashMap<String, VertexId> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), VertexId(i)))
        .collect();
    let lookup = |name: &str| {
        index
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::UnknownVertex(name.to_string()))
    };

    let n = names.len();
    let mut parents: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<VertexId>> = vec![Vec::new(); n];
    let mut seen_edges = BTreeSet::new();
    for (p, c) in &raw.edges {
        let (pi, ci) = (lookup(p)?, lookup(c)?);
        if !seen_edges.insert((pi, ci)) {
            return Err(ModelError::DuplicateEdge(p.clone(), c.clone()));
        }
        parents[ci.0].push(pi);
        children[pi.0].push(ci);
    }
    if let Some(v) = (0..n).find(|&v| parents[v].len() > 1) {
        return Err(ModelError::InDegreeViolation(names[v].clone()));
    }
    let roots: Vec<usize> = (0..n).filter(|&v| parents[v].is_empty()).collect();
    let root = match roots.as_slice() {
        [] => return Err(ModelError::NoRoot),
        [r] => VertexId(*r),
        many => {
            return Err(ModelError::MultipleRoots(
                many.iter().map(|&v| names[v].clone()).collect(),
            ))
        }
    };
    let mut reached = vec![false; n];
    reached[root.0] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        for &c in &children[v.0] {
            if !reached[c.0] {
                reached[c.0] = true;
                queue.push_back(c);
            }
        }
    }
    if let Some(v) = (0..n).find(|&v| !reached[v]) {
        return Err(ModelError::UnreachableVertex(names[v].clone()));
    }
    for c in &mut children {
        c.sort();
    }
    let parent: Vec<Option<VertexId>> = parents.iter().map(|p| p.first().copied()).collect();
    let leaves: Vec<VertexId> = (0..n)
        .filter(|&v| children[v].is_empty())
        .map(VertexId)
        .collect();

    let mut char_names: Vec<&String> = raw.characters.iter().map(|(c, _)| c).collect();
    char_names.sort();
    if let Some(w) = char_names.windows(2).find(|w| w[0] == w[1]) {
        return Err(ModelError::DuplicateCharacter(w[0].clone()));
    }
    let states: Vec<String> = raw
        .characters
        .iter()
        .flat_map(|(_, s)| s.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let state_index: HashMap<&str, StateId> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), StateId(i)))
        .collect();
    let mut declared: Vec<(String, Vec<String>)> = raw.characters;
    declared.sort_by(|a, b| a.0.cmp(&b.0));
    let characters: Vec<Character> = declared
        .iter()
        .map(|(name, st)| {
            let ids: BTreeSet<StateId> = st.iter().map(|s| state_index[s.as_str()]).collect();
            Character {
                name: name.clone(),
                states: ids.into_iter().collect(),
            }
        })
        .collect();
    let char_index: HashMap<&str, CharId> = characters
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.as_str(), CharId(i)))
        .collect();

    let mut labels = vec![vec![None; n]; characters.len()];
    for (leaf, ch, state) in &raw.labels {
        let v = lookup(leaf)?;
        let c = *char_index
            .get(ch.as_str())
            .ok_or_else(|| ModelError::UnknownCharacter(ch.clone()))?;
        if !children[v.0].is_empty() {
            return Err(ModelError::LabelOnInternalVertex {
                vertex: leaf.clone(),
                character: ch.clone(),
            });
        }
        let s = state_index
            .get(state.as_str())
            .copied()
            .filter(|s| characters[c.0].states.binary_search(s).is_ok())
            .ok_or_else(|| ModelError::UnknownState {
                leaf: leaf.clone(),
                character: ch.clone(),
                state: state.clone(),
            })?;
        if labels[c.0][v.0].replace(s).is_some() {
            return Err(ModelError::DuplicateLabel {
                leaf: leaf.clone(),
                character: ch.clone(),
            });
        }
    }
    for (c, row) in labels.iter().enumerate() {
        if let Some(l) = leaves.iter().find(|l| row[l.0].is_none()) {
            return Err(ModelError::MissingLeafLabel {
                leaf: names[l.0].clone(),
                character: characters[c].name.clone(),
            });
        }
    }

    Ok(Phylogeny {
        names,
        index,
        root,
        parent,
        children,
        leaves,
        characters,
        states,
        labels,
    })
}

impl Phylogeny {
    pub fn vertex_count(&self) -> usize {
        self.names.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.names.len()).map(VertexId)
    }

    pub fn non_root_vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        self.vertices().filter(move |&v| v != self.root)
    }

    pub fn name(&self, v: VertexId) -> &str {
        &self.names[v.0]
    }

    pub fn vertex(&self, name: &str) -> Option<VertexId> {
        self.index.get(name).copied()
    }

    pub fn root(&self) -> VertexId {
        self.root
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parent[v.0]
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v.0]
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v.0].is_empty()
    }

    pub fn leaves(&self) -> &[VertexId] {
        &self.leaves
    }

    /// Parent-to-child edges, ordered by child.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        self.vertices()
            .filter_map(move |v| self.parent(v).map(|p| (p, v)))
    }

    pub fn characters(&self) -> &[Character] {
        &self.characters
    }

    pub fn character_ids(&self) -> impl Iterator<Item = CharId> {
        (0..self.characters.len()).map(CharId)
    }

    pub fn character(&self, c: CharId) -> &Character {
        &self.characters[c.0]
    }

    pub fn character_by_name(&self, name: &str) -> Option<CharId> {
        self.characters
            .iter()
            .position(|c| c.name == name)
            .map(CharId)
    }

    /// The global state set.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    /// The leaf labeling; `None` for internal vertices.
    pub fn label(&self, v: VertexId, c: CharId) -> Option<StateId> {
        self.labels[c.0][v.0]
    }

    pub fn to_raw(&self) -> RawPhylogeny {
        RawPhylogeny {
            vertices: self.names.clone(),
            edges: self
                .edges()
                .map(|(p, c)| (self.name(p).to_string(), self.name(c).to_string()))
                .collect(),
            characters: self
                .characters
                .iter()
                .map(|c| {
                    let states = c.states.iter().map(|&s| self.state_name(s).to_string());
                    (c.name.clone(), states.collect())
                })
                .collect(),
            labels: self
                .character_ids()
                .flat_map(|c| {
                    self.leaves.iter().map(move |&l| {
                        (
                            self.name(l).to_string(),
                            self.character(c).name.clone(),
                            self.state_name(self.label(l, c).expect("leaf labeled"))
                                .to_string(),
                        )
                    })
                })
                .collect(),
        }
    }

    /// Copy of this phylogeny restricted to characters with at least two
    /// essential states. Characters with fewer never force a contact.
    pub fn without_uninformative(&self) -> Phylogeny {
        let essential = essential_states(self);
        let keep: BTreeSet<String> = self
            .character_ids()
            .filter(|c| essential[c].len() >= 2)
            .map(|c| self.character(c).name.clone())
            .collect();
        let mut raw = self.to_raw();
        raw.characters.retain(|(c, _)| keep.contains(c));
        raw.labels.retain(|(_, c, _)| keep.contains(c));
        validate_phylogeny(raw).expect("restriction of a valid phylogeny is valid")
    }
}

/// States shared by at least two distinct leaves, per character.
pub fn essential_states(phylogeny: &Phylogeny) -> BTreeMap<CharId, BTreeSet<StateId>> {
    phylogeny
        .character_ids()
        .map(|c| {
            let mut counts: BTreeMap<StateId, usize> = BTreeMap::new();
            for &l in phylogeny.leaves() {
                if let Some(s) = phylogeny.label(l, c) {
                    *counts.entry(s).or_default() += 1;
                }
            }
            let shared = counts
                .into_iter()
                .filter(|&(_, k)| k >= 2)
                .map(|(s, _)| s)
                .collect();
            (c, shared)
        })
        .collect()
}

/// An integer year (negative is BCE) or an infinite end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ExtYear {
    NegInf,
    Year(i64),
    PosInf,
}

impl ExtYear {
    pub fn finite(self) -> Option<i64> {
        match self {
            ExtYear::Year(y) => Some(y),
            _ => None,
        }
    }
}

impl fmt::Display for ExtYear {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtYear::NegInf => f.write_str("-inf"),
            ExtYear::Year(y) => write!(f, "{y}"),
            ExtYear::PosInf => f.write_str("+inf"),
        }
    }
}

/// An open interval `(lo, hi)` of extended years.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Interval {
    pub lo: ExtYear,
    pub hi: ExtYear,
}

impl Interval {
    pub const UNBOUNDED: Interval = Interval {
        lo: ExtYear::NegInf,
        hi: ExtYear::PosInf,
    };

    /// `None` unless `lo < hi` with `lo` not `+inf` and `hi` not `-inf`.
    pub fn new(lo: ExtYear, hi: ExtYear) -> Option<Interval> {
        (lo < hi && lo != ExtYear::PosInf && hi != ExtYear::NegInf).then_some(Interval { lo, hi })
    }

    pub fn years(lo: i64, hi: i64) -> Option<Interval> {
        Interval::new(ExtYear::Year(lo), ExtYear::Year(hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

/// Open intervals overlap iff the larger lower end is below the smaller upper end.
pub fn intervals_overlap(a: Interval, b: Interval) -> bool {
    a.lo.max(b.lo) < a.hi.min(b.hi)
}

/// `(tau_min, tau_max)` for every vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeIntervals {
    bounds: Vec<Interval>,
}

impl TimeIntervals {
    pub fn unbounded(vertex_count: usize) -> Self {
        TimeIntervals {
            bounds: vec![Interval::UNBOUNDED; vertex_count],
        }
    }

    pub fn from_vec(bounds: Vec<Interval>) -> Self {
        TimeIntervals { bounds }
    }

    pub fn get(&self, v: VertexId) -> Interval {
        self.bounds[v.0]
    }

    pub fn set(&mut self, v: VertexId, interval: Interval) {
        self.bounds[v.0] = interval;
    }

    pub fn len(&self) -> usize {
        self.bounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bounds.is_empty()
    }
}

/// The intermediate language `v↑` on the tree edge into `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UpVertex(VertexId);

impl UpVertex {
    pub fn new(phylogeny: &Phylogeny, base: VertexId) -> Result<UpVertex, ModelError> {
        if base == phylogeny.root() {
            return Err(ModelError::RootUpVertex(phylogeny.name(base).to_string()));
        }
        Ok(UpVertex(base))
    }

    pub fn base(self) -> VertexId {
        self.0
    }
}

/// A problem instance: phylogeny, time intervals, forbidden contacts and the
/// bound on the number of contacts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub phylogeny: Phylogeny,
    pub intervals: TimeIntervals,
    forbidden: BTreeSet<(UpVertex, UpVertex)>,
    pub max_contacts: usize,
}

impl Problem {
    pub fn new(
        phylogeny: Phylogeny,
        intervals: TimeIntervals,
        forbidden: impl IntoIterator<Item = (VertexId, VertexId)>,
        max_contacts: usize,
    ) -> Result<Problem, ModelError> {
        assert_eq!(intervals.len(), phylogeny.vertex_count());
        let mut pairs = BTreeSet::new();
        for (a, b) in forbidden {
            if a == b {
                return Err(ModelError::ForbidSelf(phylogeny.name(a).to_string()));
            }
            let (a, b) = (UpVertex::new(&phylogeny, a)?, UpVertex::new(&phylogeny, b)?);
            pairs.insert((a.min(b), a.max(b)));
        }
        Ok(Problem {
            phylogeny,
            intervals,
            forbidden: pairs,
            max_contacts,
        })
    }

    /// Problem with no time or geographic restrictions.
    pub fn unconstrained(phylogeny: Phylogeny, max_contacts: usize) -> Problem {
        let intervals = TimeIntervals::unbounded(phylogeny.vertex_count());
        Problem::new(phylogeny, intervals, [], max_contacts).expect("no forbidden pairs")
    }

    /// Forbidden contacts as ordered `(smaller, larger)` pairs.
    pub fn forbidden(&self) -> &BTreeSet<(UpVertex, UpVertex)> {
        &self.forbidden
    }

    pub fn is_forbidden(&self, a: UpVertex, b: UpVertex) -> bool {
        self.forbidden.contains(&(a.min(b), a.max(b)))
    }
}
