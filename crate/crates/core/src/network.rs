//! Networks built from a phylogeny and a summary of contacts, and the
//! search for a labeling under which every state class is spanned by a
//! rooted tree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::graph;
use crate::model::{CharId, ModelError, Phylogeny, StateId, UpVertex, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NetworkError {
    #[error("unknown vertex `{0}`")]
    UnknownVertex(String),
    #[error("`{0}` is the root; it has no contact point above it")]
    RootUpVertex(String),
    #[error("a contact needs two different vertices, got `{0}` twice")]
    SelfContact(String),
    #[error("vertex subset is empty")]
    EmptySubset,
    #[error("unknown character #{0}")]
    UnknownCharacter(usize),
    #[error("instance too large for exhaustive checking: {size} exceeds limit {limit}")]
    InstanceTooLarge { size: usize, limit: usize },
}

impl From<ModelError> for NetworkError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::RootUpVertex(v) => NetworkError::RootUpVertex(v),
            ModelError::UnknownVertex(v) => NetworkError::UnknownVertex(v),
            other => NetworkError::UnknownVertex(other.to_string()),
        }
    }
}

/// A vertex of a network: a tree vertex `v` or the contact point `v↑`
/// subdividing the edge into `v`.
///
/// Ordered by base vertex, with `v↑` immediately before `v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetVertex {
    Up(VertexId),
    Tree(VertexId),
}

impl NetVertex {
    pub fn base(self) -> VertexId {
        match self {
            NetVertex::Up(v) | NetVertex::Tree(v) => v,
        }
    }

    fn key(self) -> (VertexId, u8) {
        match self {
            NetVertex::Up(v) => (v, 0),
            NetVertex::Tree(v) => (v, 1),
        }
    }

    /// `pre-<name>` for contact points, the vertex name otherwise.
    pub fn display_name(self, phylogeny: &Phylogeny) -> String {
        match self {
            NetVertex::Up(v) => format!("pre-{}", phylogeny.name(v)),
            NetVertex::Tree(v) => phylogeny.name(v).to_string(),
        }
    }
}

impl From<UpVertex> for NetVertex {
    fn from(u: UpVertex) -> Self {
        NetVertex::Up(u.base())
    }
}

impl Ord for NetVertex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

impl PartialOrd for NetVertex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Unordered pair of distinct contact points, stored smaller first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContactPair {
    first: UpVertex,
    second: UpVertex,
}

impl ContactPair {
    pub fn new(a: UpVertex, b: UpVertex) -> Option<ContactPair> {
        match a.cmp(&b) {
            Ordering::Less => Some(ContactPair { first: a, second: b }),
            Ordering::Greater => Some(ContactPair { first: b, second: a }),
            Ordering::Equal => None,
        }
    }

    /// Pair from two base vertex names, e.g. `("B", "D")` for `{B↑, D↑}`.
    pub fn from_names(phylogeny: &Phylogeny, a: &str, b: &str) -> Result<ContactPair, NetworkError> {
        let up = |name: &str| -> Result<UpVertex, NetworkError> {
            let v = phylogeny
                .vertex(name)
                .ok_or_else(|| NetworkError::UnknownVertex(name.to_string()))?;
            Ok(UpVertex::new(phylogeny, v)?)
        };
        ContactPair::new(up(a)?, up(b)?).ok_or_else(|| NetworkError::SelfContact(a.to_string()))
    }

    pub fn first(self) -> UpVertex {
        self.first
    }

    pub fn second(self) -> UpVertex {
        self.second
    }
}

/// A set of contacts with their times erased.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Summary {
    pairs: Vec<ContactPair>,
}

impl Summary {
    pub fn new(pairs: impl IntoIterator<Item = ContactPair>) -> Summary {
        let set: BTreeSet<ContactPair> = pairs.into_iter().collect();
        Summary {
            pairs: set.into_iter().collect(),
        }
    }

    pub fn empty() -> Summary {
        Summary::default()
    }

    pub fn from_names(phylogeny: &Phylogeny, pairs: &[(&str, &str)]) -> Result<Summary, NetworkError> {
        let pairs = pairs
            .iter()
            .map(|&(a, b)| ContactPair::from_names(phylogeny, a, b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Summary::new(pairs))
    }

    /// Pairs in canonical order.
    pub fn pairs(&self) -> &[ContactPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// The contact points used by the summary.
    pub fn up_vertices(&self) -> BTreeSet<UpVertex> {
        self.pairs
            .iter()
            .flat_map(|p| [p.first, p.second])
            .collect()
    }

    pub fn with(&self, pair: ContactPair) -> Summary {
        Summary::new(self.pairs.iter().copied().chain([pair]))
    }

    pub fn contains(&self, pair: ContactPair) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }

    /// Every proper subset, smallest first.
    pub fn proper_subsets(&self) -> impl Iterator<Item = Summary> + '_ {
        let n = self.pairs.len();
        let mut masks: Vec<u64> = (0..(1u64 << n) - 1).collect();
        masks.sort_by_key(|m| m.count_ones());
        masks.into_iter().map(move |m| {
            Summary {
                pairs: (0..n)
                    .filter(|i| m & (1 << i) != 0)
                    .map(|i| self.pairs[i])
                    .collect(),
            }
        })
    }
}

/// The digraph `⟨V ∪ V_X, E_X⟩` for a summary `X`.
#[derive(Debug, Clone)]
pub struct Network<'a> {
    phylogeny: &'a Phylogeny,
    summary: Summary,
    vertices: Vec<NetVertex>,
    tree_pos: Vec<usize>,
    up_pos: Vec<Option<usize>>,
    edges: Vec<(usize, usize)>,
    out: Vec<Vec<usize>>,
}

/// Subdivides the tree edge into every contact point of `summary` and adds
/// a pair of opposite lateral edges per contact.
pub fn build_network<'a>(phylogeny: &'a Phylogeny, summary: &Summary) -> Result<Network<'a>, NetworkError> {
    let ups = summary.up_vertices();
    for u in &ups {
        let v = u.base();
        if v.0 >= phylogeny.vertex_count() {
            return Err(NetworkError::UnknownVertex(format!("#{}", v.0)));
        }
        if v == phylogeny.root() {
            return Err(NetworkError::RootUpVertex(phylogeny.name(v).to_string()));
        }
    }
    let mut vertices: Vec<NetVertex> = phylogeny
        .vertices()
        .map(NetVertex::Tree)
        .chain(ups.iter().map(|&u| NetVertex::from(u)))
        .collect();
    vertices.sort();

    let n_tree = phylogeny.vertex_count();
    let mut tree_pos = vec![0; n_tree];
    let mut up_pos = vec![None; n_tree];
    for (i, v) in vertices.iter().enumerate() {
        match *v {
            NetVertex::Tree(t) => tree_pos[t.0] = i,
            NetVertex::Up(t) => up_pos[t.0] = Some(i),
        }
    }

    let mut edges = Vec::with_capacity(n_tree + ups.len() + 2 * summary.len());
    for (p, v) in phylogeny.edges() {
        match up_pos[v.0] {
            Some(u) => {
                edges.push((tree_pos[p.0], u));
                edges.push((u, tree_pos[v.0]));
            }
            None => edges.push((tree_pos[p.0], tree_pos[v.0])),
        }
    }
    for pair in summary.pairs() {
        let a = up_pos[pair.first.base().0].expect("contact point inserted");
        let b = up_pos[pair.second.base().0].expect("contact point inserted");
        edges.push((a, b));
        edges.push((b, a));
    }
    edges.sort_unstable();

    let mut out = vec![Vec::new(); vertices.len()];
    for &(a, b) in &edges {
        out[a].push(b);
    }
    Ok(Network {
        phylogeny,
        summary: summary.clone(),
        vertices,
        tree_pos,
        up_pos,
        edges,
        out,
    })
}

impl<'a> Network<'a> {
    pub fn phylogeny(&self) -> &'a Phylogeny {
        self.phylogeny
    }

    pub fn summary(&self) -> &Summary {
        &self.summary
    }

    /// Vertices in canonical order.
    pub fn vertices(&self) -> &[NetVertex] {
        &self.vertices
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (NetVertex, NetVertex)> + '_ {
        self.edges
            .iter()
            .map(|&(a, b)| (self.vertices[a], self.vertices[b]))
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: NetVertex, to: NetVertex) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.out[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    pub fn index_of(&self, v: NetVertex) -> Option<usize> {
        match v {
            NetVertex::Tree(t) => (t.0 < self.tree_pos.len()).then(|| self.tree_pos[t.0]),
            NetVertex::Up(t) => self.up_pos.get(t.0).copied().flatten(),
        }
    }

    /// Tree leaves are the only vertices with a fixed labeling.
    pub fn is_leaf(&self, v: NetVertex) -> bool {
        matches!(v, NetVertex::Tree(t) if self.phylogeny.is_leaf(t))
    }

    /// A vertex of `subset` from which all of `subset` is reachable inside
    /// the subgraph induced by `subset`; the canonically first one of the
    /// source component.
    pub fn rooted_spanning_root(&self, subset: &[NetVertex]) -> Result<Option<NetVertex>, NetworkError> {
        if subset.is_empty() {
            return Err(NetworkError::EmptySubset);
        }
        let mut members = vec![false; self.vertices.len()];
        for &v in subset {
            let i = self
                .index_of(v)
                .ok_or_else(|| NetworkError::UnknownVertex(v.display_name(self.phylogeny)))?;
            members[i] = true;
        }
        Ok(graph::spanning_root(&self.out, &members).map(|i| self.vertices[i]))
    }

    /// True iff the labeling agrees with the leaves and every nonempty
    /// state class of every character has a spanning root.
    pub fn is_perfect_labeling(&self, labeling: &Labeling) -> bool {
        if labeling.vertices != self.vertices
            || labeling.states.len() != self.phylogeny.characters().len()
        {
            return false;
        }
        self.phylogeny.character_ids().all(|c| {
            let row = labeling.character(c);
            let leaves_ok = self
                .vertices
                .iter()
                .zip(row)
                .all(|(v, &s)| match v {
                    NetVertex::Tree(t) if self.phylogeny.is_leaf(*t) => {
                        self.phylogeny.label(*t, c) == Some(s)
                    }
                    _ => true,
                });
            leaves_ok && classes_rooted(&self.out, row)
        })
    }
}

fn classes_rooted(out: &[Vec<usize>], row: &[StateId]) -> bool {
    let states: BTreeSet<StateId> = row.iter().copied().collect();
    states.into_iter().all(|s| {
        let members: Vec<bool> = row.iter().map(|&x| x == s).collect();
        graph::spanning_root(out, &members).is_some()
    })
}

/// The function `g`: a state for every network vertex and character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labeling {
    vertices: Vec<NetVertex>,
    // states[char][vertex index]
    states: Vec<Vec<StateId>>,
}

impl Labeling {
    pub(crate) fn from_rows(vertices: Vec<NetVertex>, states: Vec<Vec<StateId>>) -> Labeling {
        Labeling { vertices, states }
    }

    pub fn vertices(&self) -> &[NetVertex] {
        &self.vertices
    }

    pub fn state(&self, v: NetVertex, c: CharId) -> Option<StateId> {
        let i = self.vertices.binary_search(&v).ok()?;
        self.states.get(c.0).map(|row| row[i])
    }

    /// States of character `c`, aligned with [`Labeling::vertices`].
    pub fn character(&self, c: CharId) -> &[StateId] {
        &self.states[c.0]
    }

    /// The sets `V_is` for character `c`, keyed by state.
    pub fn classes(&self, c: CharId) -> BTreeMap<StateId, Vec<NetVertex>> {
        let mut classes: BTreeMap<StateId, Vec<NetVertex>> = BTreeMap::new();
        for (v, &s) in self.vertices.iter().zip(&self.states[c.0]) {
            classes.entry(s).or_default().push(*v);
        }
        classes
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchOptions {
    /// Cut partial assignments whose classes can no longer be rooted.
    pub prune: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { prune: true }
    }
}

/// Backtracking search for one character's labeling.
///
/// Non-leaf vertices are assigned in reverse breadth-first order from the
/// root, states in lexicographic order; the first labeling whose classes
/// all have spanning roots is returned.
///
/// With pruning on, a partial assignment is cut when some state `t` has
/// assigned vertices that no single vertex can reach while walking only
/// through vertices assigned `t` or still unassigned. Every completion
/// keeps `t`'s class inside that set, so none of them could be rooted.
pub fn find_character_labeling(
    network: &Network<'_>,
    character: CharId,
    options: SearchOptions,
) -> Result<Option<Vec<StateId>>, NetworkError> {
    let phylogeny = network.phylogeny;
    if character.0 >= phylogeny.characters().len() {
        return Err(NetworkError::UnknownCharacter(character.0));
    }
    let n = network.vertex_count();
    let mut assign: Vec<Option<StateId>> = vec![None; n];
    for (i, v) in network.vertices.iter().enumerate() {
        if let NetVertex::Tree(t) = v {
            assign[i] = phylogeny.label(*t, character);
        }
    }

    let mut bfs = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let root = network.tree_pos[phylogeny.root().0];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(v) = queue.pop_front() {
        bfs.push(v);
        for &w in &network.out[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    let order: Vec<usize> = bfs.into_iter().rev().filter(|&i| assign[i].is_none()).collect();

    let mut incoming = vec![Vec::new(); n];
    for &(a, b) in &network.edges {
        incoming[b].push(a);
    }
    let mut search = Search {
        out: &network.out,
        incoming,
        domain: phylogeny.character(character).states.clone(),
        order,
        assign,
        prune: options.prune,
    };
    Ok(search
        .run(0)
        .then(|| search.assign.iter().map(|s| s.expect("complete")).collect()))
}

struct Search<'n> {
    out: &'n [Vec<usize>],
    incoming: Vec<Vec<usize>>,
    domain: Vec<StateId>,
    order: Vec<usize>,
    assign: Vec<Option<StateId>>,
    prune: bool,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> bool {
        if depth == self.order.len() {
            let row: Vec<StateId> = self.assign.iter().map(|s| s.expect("complete")).collect();
            return classes_rooted(self.out, &row);
        }
        let v = self.order[depth];
        for k in 0..self.domain.len() {
            self.assign[v] = Some(self.domain[k]);
            if self.prune && !self.partial_ok() {
                continue;
            }
            if self.run(depth + 1) {
                return true;
            }
        }
        self.assign[v] = None;
        false
    }

    fn partial_ok(&self) -> bool {
        self.domain.iter().all(|&t| self.state_may_root(t))
    }

    /// Is there a vertex reaching every vertex assigned `t` through vertices
    /// assigned `t` or unassigned?
    fn state_may_root(&self, t: StateId) -> bool {
        let n = self.assign.len();
        let allowed: Vec<bool> = self.assign.iter().map(|s| s.is_none_or(|s| s == t)).collect();
        let mut candidates: Option<Vec<bool>> = None;
        let mut reach = vec![false; n];
        let mut stack = Vec::new();
        for x in (0..n).filter(|&x| self.assign[x] == Some(t)) {
            reach.fill(false);
            reach[x] = true;
            stack.push(x);
            while let Some(v) = stack.pop() {
                for &u in &self.incoming[v] {
                    if allowed[u] && !reach[u] {
                        reach[u] = true;
                        stack.push(u);
                    }
                }
            }
            let next = match candidates {
                None => reach.clone(),
                Some(mut c) => {
                    c.iter_mut().zip(&reach).for_each(|(a, &b)| *a &= b);
                    c
                }
            };
            if !next.iter().any(|&b| b) {
                return false;
            }
            candidates = Some(next);
        }
        true
    }
}

/// Decides admissibility of `summary`: one labeling search per character,
/// merged. `None` if some character has no perfect labeling.
pub fn check_admissible(
    phylogeny: &Phylogeny,
    summary: &Summary,
    options: SearchOptions,
) -> Result<Option<Labeling>, NetworkError> {
    let network = build_network(phylogeny, summary)?;
    let mut rows = Vec::with_capacity(phylogeny.characters().len());
    for c in phylogeny.character_ids() {
        match find_character_labeling(&network, c, options)? {
            Some(row) => rows.push(row),
            None => return Ok(None),
        }
    }
    Ok(Some(Labeling::from_rows(network.vertices.clone(), rows)))
}
