#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tempnet::model::{validate_phylogeny, Interval, Phylogeny, Problem, RawPhylogeny, TimeIntervals, VertexId};
use tempnet::network::{ContactPair, NetVertex, Summary};
use tempnet::temporal::{ConstraintSystem, Variable};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// A random rooted tree on `2..=max_vertices` vertices named `v0..`, with
/// up to `max_chars` characters of 2 or 3 states (`"0"`, `"1"`, `"2"`,
/// shared names across characters).
pub fn random_phylogeny(rng: &mut impl Rng, max_vertices: usize, max_chars: usize) -> Phylogeny {
    let n = rng.gen_range(2..=max_vertices);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
    let mut edges = Vec::new();
    let mut has_child = vec![false; n];
    for i in 1..n {
        let p = rng.gen_range(0..i);
        has_child[p] = true;
        edges.push((names[p].clone(), names[i].clone()));
    }
    let chars = rng.gen_range(1..=max_chars);
    let mut characters = Vec::new();
    let mut labels = Vec::new();
    for c in 0..chars {
        let s = rng.gen_range(2..=3);
        let states: Vec<String> = (0..s).map(|x| x.to_string()).collect();
        for (i, name) in names.iter().enumerate() {
            if !has_child[i] {
                labels.push((name.clone(), format!("c{c}"), states.choose(rng).unwrap().clone()));
            }
        }
        characters.push((format!("c{c}"), states));
    }
    validate_phylogeny(RawPhylogeny {
        vertices: names,
        edges,
        characters,
        labels,
    })
    .expect("generated phylogeny is valid")
}

/// Independent random intervals with integer ends in `[-5000, 2500]`.
pub fn random_intervals(rng: &mut impl Rng, p: &Phylogeny) -> TimeIntervals {
    let mut iv = TimeIntervals::unbounded(p.vertex_count());
    for v in p.vertices() {
        let lo = rng.gen_range(-5000..2500);
        let hi = rng.gen_range(lo + 1..=2500);
        iv.set(v, Interval::years(lo, hi).unwrap());
    }
    iv
}

/// Intervals around dates that increase down the tree, so that the tree
/// itself is always feasible.
pub fn dated_intervals(rng: &mut impl Rng, p: &Phylogeny) -> TimeIntervals {
    let mut iv = TimeIntervals::unbounded(p.vertex_count());
    let mut date = vec![0i64; p.vertex_count()];
    let mut order: Vec<VertexId> = vec![p.root()];
    let mut i = 0;
    while i < order.len() {
        let v = order[i];
        date[v.0] = match p.parent(v) {
            None => rng.gen_range(-5000..-3000),
            Some(u) => date[u.0] + rng.gen_range(1..1500),
        };
        let w = rng.gen_range(1..400);
        iv.set(v, Interval::years(date[v.0] - w, date[v.0] + w).unwrap());
        order.extend_from_slice(p.children(v));
        i += 1;
    }
    iv
}

pub fn non_root(p: &Phylogeny) -> Vec<VertexId> {
    p.non_root_vertices().collect()
}

pub fn random_pair(rng: &mut impl Rng, p: &Phylogeny) -> Option<ContactPair> {
    let vs = non_root(p);
    if vs.len() < 2 {
        return None;
    }
    let picked: Vec<_> = vs.choose_multiple(rng, 2).copied().collect();
    ContactPair::new(
        tempnet::model::UpVertex::new(p, picked[0]).unwrap(),
        tempnet::model::UpVertex::new(p, picked[1]).unwrap(),
    )
}

pub fn random_summary(rng: &mut impl Rng, p: &Phylogeny, max_pairs: usize) -> Summary {
    let k = rng.gen_range(0..=max_pairs);
    Summary::new((0..k).filter_map(|_| random_pair(rng, p)))
}

/// A random problem with at most `max_vertices` vertices.
pub fn random_problem(rng: &mut impl Rng, max_vertices: usize, max_contacts: usize, dated: bool) -> Problem {
    let p = random_phylogeny(rng, max_vertices, 3);
    let iv = if dated { dated_intervals(rng, &p) } else { random_intervals(rng, &p) };
    let mut forbidden = Vec::new();
    if rng.gen_bool(0.3) {
        if let Some(pair) = random_pair(rng, &p) {
            forbidden.push((pair.first().base(), pair.second().base()));
        }
    }
    Problem::new(p, iv, forbidden, max_contacts).unwrap()
}

fn var(i: usize) -> Variable {
    if i == 0 {
        Variable::Origin
    } else {
        Variable::Vertex(NetVertex::Tree(VertexId(i)))
    }
}

/// A random difference system over at most `max_vars` variables
/// (the origin included), small bounds, some equalities.
pub fn random_system(rng: &mut impl Rng, max_vars: usize) -> ConstraintSystem {
    let n = rng.gen_range(1..=max_vars);
    let mut sys = ConstraintSystem::new();
    for i in 1..n {
        sys.variable(var(i));
    }
    for _ in 0..rng.gen_range(0..=2 * n) {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        sys.add_difference(var(x), var(y), rng.gen_range(-4..=4), rng.gen_bool(0.5));
    }
    for _ in 0..rng.gen_range(0..=2) {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        sys.add_equality(var(x), var(y));
    }
    sys
}
