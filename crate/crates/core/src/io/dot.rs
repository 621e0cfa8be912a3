//! Graphviz DOT text for a network.

use std::fmt::Write as _;

use thiserror::Error;

use crate::network::{Labeling, NetVertex, Network};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DotError {
    #[error("labeling does not cover the vertices of this network")]
    LabelingMismatch,
}

fn id(name: &str) -> String {
    let mut out = String::from("\"");
    for c in name.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Tree edges (subdivided at contact points) are directed; each contact
/// is a single dashed edge without arrowheads.
pub fn export_dot(network: &Network<'_>, labeling: Option<&Labeling>) -> Result<String, DotError> {
    if let Some(g) = labeling {
        if g.vertices() != network.vertices() {
            return Err(DotError::LabelingMismatch);
        }
    }
    let p = network.phylogeny();
    let mut out = String::from("digraph network {\n");
    for &v in network.vertices() {
        let name = v.display_name(p);
        let mut label = name.clone();
        if let Some(g) = labeling {
            for c in p.character_ids() {
                let s = g.state(v, c).ok_or(DotError::LabelingMismatch)?;
                let _ = write!(label, "\n{}={}", p.character(c).name, p.state_name(s));
            }
        }
        let shape = if matches!(v, NetVertex::Up(_)) { "ellipse" } else { "box" };
        let _ = writeln!(out, "  {} [label={}, shape={shape}];", id(&name), id(&label));
    }
    for (a, b) in network.edges() {
        if matches!((a, b), (NetVertex::Up(_), NetVertex::Up(_))) {
            continue;
        }
        let _ = writeln!(out, "  {} -> {};", id(&a.display_name(p)), id(&b.display_name(p)));
    }
    for pair in network.summary().pairs() {
        let (a, b) = (NetVertex::Up(pair.first().base()), NetVertex::Up(pair.second().base()));
        let _ = writeln!(
            out,
            "  {} -> {} [dir=none, style=dashed, constraint=false];",
            id(&a.display_name(p)),
            id(&b.display_name(p))
        );
    }
    out.push_str("}\n");
    Ok(out)
}
