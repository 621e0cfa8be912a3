//! Line-oriented problem files.
//!
//! ```text
//! %phylogeny
//! root <vertex>
//! edge <parent> <child>
//! %characters
//! character <name> states <s1> <s2> ...
//! label <leaf> <character> <state-or-?>
//! %intervals
//! interval <vertex> <lo|-inf> <hi|+inf>
//! %constraints
//! forbid <vertex> <vertex>
//! %options
//! max-contacts <k>
//! ```
//!
//! Tokens are separated by whitespace; `#` starts a comment. A token may be
//! written in double quotes to include spaces, `#` or quotes (escaped with a
//! backslash). A `?` cell becomes a fresh state `?<leaf>` of its character.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use thiserror::Error;

use crate::model::{
    validate_phylogeny, ExtYear, Interval, ModelError, Phylogeny, Problem, RawPhylogeny, TimeIntervals, VertexId,
};
use crate::network::{ContactPair, NetworkError, Summary};

/// Largest accepted magnitude of a finite year.
pub const MAX_YEAR: i64 = 1_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: ModelError },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::Syntax { line, .. } | ParseError::Invalid { line, .. } => *line,
        }
    }

    fn syntax(line: usize, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line,
            message: message.into(),
        }
    }
}

/// A parsed item and the 1-based line it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record<T> {
    pub line: usize,
    pub value: T,
}

type LabelRow = (String, String, Option<String>);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Phylogeny,
    Characters,
    Intervals,
    Constraints,
    Options,
}

/// Unvalidated contents of a problem file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProblemDocument {
    pub root: Option<Record<String>>,
    pub edges: Vec<Record<(String, String)>>,
    /// Character name and declared states.
    pub characters: Vec<Record<(String, Vec<String>)>>,
    /// `(leaf, character, state)`; `None` is a blank cell.
    pub labels: Vec<Record<LabelRow>>,
    pub intervals: Vec<Record<(String, ExtYear, ExtYear)>>,
    pub forbids: Vec<Record<(String, String)>>,
    pub max_contacts: Option<Record<usize>>,
    phylogeny_header: Option<usize>,
}

fn tokenize(line: &str, number: usize) -> Result<Vec<String>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = line.chars().peekable();
    loop {
        while chars.next_if(|c| c.is_whitespace()).is_some() {}
        match chars.peek() {
            None | Some('#') => break,
            Some('"') => {
                chars.next();
                let mut tok = String::new();
                loop {
                    match chars.next() {
                        None => return Err(ParseError::syntax(number, "unterminated quoted token")),
                        Some('"') => break,
                        Some('\\') => match chars.next() {
                            Some(c @ ('"' | '\\')) => tok.push(c),
                            _ => return Err(ParseError::syntax(number, "bad escape in quoted token")),
                        },
                        Some(c) => tok.push(c),
                    }
                }
                if chars.peek().is_some_and(|c| !c.is_whitespace() && *c != '#') {
                    return Err(ParseError::syntax(number, "quoted token must be followed by whitespace"));
                }
                tokens.push(tok);
            }
            Some(_) => {
                let mut tok = String::new();
                while let Some(c) = chars.next_if(|c| !c.is_whitespace() && *c != '#') {
                    if c == '"' {
                        return Err(ParseError::syntax(number, "stray quote inside token"));
                    }
                    tok.push(c);
                }
                tokens.push(tok);
            }
        }
    }
    Ok(tokens)
}

fn parse_year(tok: &str, line: usize) -> Result<ExtYear, ParseError> {
    match tok {
        "-inf" => Ok(ExtYear::NegInf),
        "+inf" => Ok(ExtYear::PosInf),
        _ => {
            let y: i64 = tok
                .parse()
                .map_err(|_| ParseError::syntax(line, format!("expected an integer year, `-inf` or `+inf`, got `{tok}`")))?;
            if y.abs() > MAX_YEAR {
                return Err(ParseError::syntax(line, format!("year {y} is out of range")));
            }
            Ok(ExtYear::Year(y))
        }
    }
}

fn arity(tokens: &[String], n: usize, usage: &str, line: usize) -> Result<(), ParseError> {
    if tokens.len() != n {
        return Err(ParseError::syntax(line, format!("expected `{usage}`")));
    }
    Ok(())
}

impl ProblemDocument {
    pub fn parse(text: &str) -> Result<ProblemDocument, ParseError> {
        let mut doc = ProblemDocument::default();
        let mut section: Option<Section> = None;
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let t = tokenize(raw, line)?;
            let Some(head) = t.first() else { continue };
            if raw.trim_start().starts_with('%') {
                let s = match head.as_str() {
                    "%phylogeny" => Section::Phylogeny,
                    "%characters" => Section::Characters,
                    "%intervals" => Section::Intervals,
                    "%constraints" => Section::Constraints,
                    "%options" => Section::Options,
                    other => return Err(ParseError::syntax(line, format!("unknown section `{other}`"))),
                };
                if t.len() != 1 {
                    return Err(ParseError::syntax(line, "section header takes no arguments"));
                }
                if !seen.insert(s) {
                    return Err(ParseError::syntax(line, format!("section `{head}` appears twice")));
                }
                if s == Section::Phylogeny {
                    doc.phylogeny_header = Some(line);
                }
                section = Some(s);
                continue;
            }
            let Some(s) = section else {
                return Err(ParseError::syntax(line, "directive outside of any section"));
            };
            match (s, head.as_str()) {
                (Section::Phylogeny, "root") => {
                    arity(&t, 2, "root <vertex>", line)?;
                    if doc.root.is_some() {
                        return Err(ParseError::syntax(line, "second `root` directive"));
                    }
                    doc.root = Some(Record { line, value: t[1].clone() });
                }
                (Section::Phylogeny, "edge") => {
                    arity(&t, 3, "edge <parent> <child>", line)?;
                    doc.edges.push(Record {
                        line,
                        value: (t[1].clone(), t[2].clone()),
                    });
                }
                (Section::Characters, "character") => {
                    if t.len() < 3 || t[2] != "states" {
                        return Err(ParseError::syntax(line, "expected `character <name> states <s1> <s2> ...`"));
                    }
                    if let Some(bad) = t[3..].iter().find(|s| s.starts_with('?')) {
                        return Err(ParseError::syntax(line, format!("state names may not start with `?`: `{bad}`")));
                    }
                    doc.characters.push(Record {
                        line,
                        value: (t[1].clone(), t[3..].to_vec()),
                    });
                }
                (Section::Characters, "label") => {
                    arity(&t, 4, "label <leaf> <character> <state-or-?>", line)?;
                    let state = match t[3].as_str() {
                        "?" => None,
                        s if s.starts_with('?') => {
                            return Err(ParseError::syntax(line, format!("state names may not start with `?`: `{s}`")))
                        }
                        s => Some(s.to_string()),
                    };
                    doc.labels.push(Record {
                        line,
                        value: (t[1].clone(), t[2].clone(), state),
                    });
                }
                (Section::Intervals, "interval") => {
                    arity(&t, 4, "interval <vertex> <lo|-inf> <hi|+inf>", line)?;
                    doc.intervals.push(Record {
                        line,
                        value: (t[1].clone(), parse_year(&t[2], line)?, parse_year(&t[3], line)?),
                    });
                }
                (Section::Constraints, "forbid") => {
                    arity(&t, 3, "forbid <vertex> <vertex>", line)?;
                    doc.forbids.push(Record {
                        line,
                        value: (t[1].clone(), t[2].clone()),
                    });
                }
                (Section::Options, "max-contacts") => {
                    arity(&t, 2, "max-contacts <k>", line)?;
                    if doc.max_contacts.is_some() {
                        return Err(ParseError::syntax(line, "second `max-contacts` directive"));
                    }
                    let k = t[1]
                        .parse()
                        .map_err(|_| ParseError::syntax(line, format!("expected a nonnegative integer, got `{}`", t[1])))?;
                    doc.max_contacts = Some(Record { line, value: k });
                }
                (_, other) => return Err(ParseError::syntax(line, format!("unknown directive `{other}` in this section"))),
            }
        }
        Ok(doc)
    }

    /// The raw phylogeny with blank cells expanded to fresh states.
    fn raw_phylogeny(&self) -> Result<RawPhylogeny, ParseError> {
        let header = self.phylogeny_header.unwrap_or(1);
        let root = self
            .root
            .as_ref()
            .ok_or_else(|| ParseError::syntax(header, "missing `root` directive"))?;
        for e in &self.edges {
            if e.value.1 == root.value {
                return Err(ParseError::syntax(e.line, format!("root `{}` cannot have a parent", root.value)));
            }
        }
        let mut vertices: BTreeSet<String> = BTreeSet::new();
        vertices.insert(root.value.clone());
        for e in &self.edges {
            vertices.insert(e.value.0.clone());
            vertices.insert(e.value.1.clone());
        }
        let mut characters: Vec<(String, Vec<String>)> =
            self.characters.iter().map(|r| r.value.clone()).collect();
        let position: HashMap<&str, usize> = self
            .characters
            .iter()
            .enumerate()
            .map(|(i, r)| (r.value.0.as_str(), i))
            .collect();
        let mut labels = Vec::new();
        for r in &self.labels {
            let (leaf, c, state) = &r.value;
            let state = match state {
                Some(s) => s.clone(),
                None => {
                    let fresh = format!("?{leaf}");
                    if let Some(&i) = position.get(c.as_str()) {
                        if !characters[i].1.contains(&fresh) {
                            characters[i].1.push(fresh.clone());
                        }
                    }
                    fresh
                }
            };
            labels.push((leaf.clone(), c.clone(), state));
        }
        Ok(RawPhylogeny {
            vertices: vertices.into_iter().collect(),
            edges: self.edges.iter().map(|r| r.value.clone()).collect(),
            characters,
            labels,
        })
    }

    fn locate(&self, e: &ModelError) -> usize {
        let header = self.phylogeny_header.unwrap_or(1);
        let nth_edge = |pred: &dyn Fn(&(String, String)) -> bool, n: usize| {
            self.edges.iter().filter(|r| pred(&r.value)).nth(n).map(|r| r.line)
        };
        let label_line = |pred: &dyn Fn(&LabelRow) -> bool, n: usize| {
            self.labels.iter().filter(|r| pred(&r.value)).nth(n).map(|r| r.line)
        };
        let found = match e {
            ModelError::DuplicateEdge(p, c) => nth_edge(&|x| &x.0 == p && &x.1 == c, 1),
            ModelError::InDegreeViolation(v) => nth_edge(&|x| &x.1 == v, 1),
            ModelError::MultipleRoots(names) => {
                let root = self.root.as_ref().map(|r| r.value.as_str());
                nth_edge(&|x| names.contains(&x.0) && Some(x.0.as_str()) != root, 0)
            }
            ModelError::UnreachableVertex(v) => nth_edge(&|x| &x.0 == v || &x.1 == v, 0),
            ModelError::NoRoot => self.root.as_ref().map(|r| r.line),
            ModelError::DuplicateCharacter(c) => {
                self.characters.iter().filter(|r| &r.value.0 == c).nth(1).map(|r| r.line)
            }
            ModelError::UnknownCharacter(c) => label_line(&|x| &x.1 == c, 0),
            ModelError::UnknownVertex(v) => label_line(&|x| &x.0 == v, 0),
            ModelError::MissingLeafLabel { character, .. } => {
                self.characters.iter().find(|r| &r.value.0 == character).map(|r| r.line)
            }
            ModelError::LabelOnInternalVertex { vertex, character } => {
                label_line(&|x| &x.0 == vertex && &x.1 == character, 0)
            }
            ModelError::DuplicateLabel { leaf, character } => label_line(&|x| &x.0 == leaf && &x.1 == character, 1),
            ModelError::UnknownState { leaf, character, .. } => label_line(&|x| &x.0 == leaf && &x.1 == character, 0),
            _ => None,
        };
        found.unwrap_or(header)
    }

    pub fn into_problem(self) -> Result<Problem, ParseError> {
        let raw = self.raw_phylogeny()?;
        let phylogeny = validate_phylogeny(raw).map_err(|e| ParseError::Invalid {
            line: self.locate(&e),
            source: e,
        })?;
        let vertex = |name: &str, line: usize| {
            phylogeny
                .vertex(name)
                .ok_or_else(|| ParseError::Invalid {
                    line,
                    source: ModelError::UnknownVertex(name.to_string()),
                })
        };

        let mut intervals = TimeIntervals::unbounded(phylogeny.vertex_count());
        let mut dated = BTreeSet::new();
        for r in &self.intervals {
            let (name, lo, hi) = &r.value;
            let v = vertex(name, r.line)?;
            if !dated.insert(v) {
                return Err(ParseError::syntax(r.line, format!("second interval for `{name}`")));
            }
            let iv = Interval::new(*lo, *hi).ok_or_else(|| ParseError::Invalid {
                line: r.line,
                source: ModelError::EmptyInterval {
                    vertex: name.clone(),
                    lo: *lo,
                    hi: *hi,
                },
            })?;
            intervals.set(v, iv);
        }

        let mut forbidden: Vec<(VertexId, VertexId)> = Vec::new();
        for r in &self.forbids {
            let (a, b) = (vertex(&r.value.0, r.line)?, vertex(&r.value.1, r.line)?);
            // validate each line on its own so errors point at it
            Problem::new(phylogeny.clone(), TimeIntervals::unbounded(phylogeny.vertex_count()), [(a, b)], 0)
                .map_err(|source| ParseError::Invalid { line: r.line, source })?;
            forbidden.push((a, b));
        }
        let k = self.max_contacts.map_or(0, |r| r.value);
        Ok(Problem::new(phylogeny, intervals, forbidden, k).expect("forbidden pairs validated"))
    }
}

pub fn parse_problem(text: &str) -> Result<Problem, ParseError> {
    ProblemDocument::parse(text)?.into_problem()
}

fn quote(tok: &str) -> String {
    let plain = !tok.is_empty()
        && !tok.starts_with('%')
        && !tok.chars().any(|c| c.is_whitespace() || matches!(c, '#' | '"' | '\\'));
    if plain {
        return tok.to_string();
    }
    let mut out = String::from("\"");
    for c in tok.chars() {
        if matches!(c, '"' | '\\') {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

fn is_fresh(state: &str) -> bool {
    state.starts_with('?')
}

/// Canonical text for a problem; [`parse_problem`] reads it back to an
/// equal value.
pub fn write_problem(problem: &Problem) -> String {
    let p = &problem.phylogeny;
    let mut out = String::new();
    out.push_str("%phylogeny\n");
    let _ = writeln!(out, "root {}", quote(p.name(p.root())));
    for (a, b) in p.edges() {
        let _ = writeln!(out, "edge {} {}", quote(p.name(a)), quote(p.name(b)));
    }
    out.push_str("%characters\n");
    for c in p.character_ids() {
        let ch = p.character(c);
        let _ = write!(out, "character {} states", quote(&ch.name));
        for &s in &ch.states {
            if !is_fresh(p.state_name(s)) {
                let _ = write!(out, " {}", quote(p.state_name(s)));
            }
        }
        out.push('\n');
    }
    for c in p.character_ids() {
        for &l in p.leaves() {
            let s = p.label(l, c).expect("leaf labeled");
            let state = if is_fresh(p.state_name(s)) { "?".to_string() } else { quote(p.state_name(s)) };
            let _ = writeln!(out, "label {} {} {}", quote(p.name(l)), quote(&p.character(c).name), state);
        }
    }
    out.push_str("%intervals\n");
    for v in p.vertices() {
        let iv = problem.intervals.get(v);
        if iv != Interval::UNBOUNDED {
            let _ = writeln!(out, "interval {} {} {}", quote(p.name(v)), iv.lo, iv.hi);
        }
    }
    out.push_str("%constraints\n");
    for (a, b) in problem.forbidden() {
        let _ = writeln!(out, "forbid {} {}", quote(p.name(a.base())), quote(p.name(b.base())));
    }
    out.push_str("%options\n");
    let _ = writeln!(out, "max-contacts {}", problem.max_contacts);
    out
}

/// Reads `child1:child2[,child3:child4...]` into a summary. Names may
/// themselves contain `:` as long as exactly one split gives two known
/// vertices. An empty string is the empty summary.
pub fn parse_contacts(phylogeny: &Phylogeny, text: &str) -> Result<Summary, NetworkError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(Summary::empty());
    }
    let mut pairs: BTreeMap<ContactPair, ()> = BTreeMap::new();
    for item in text.split(',') {
        let item = item.trim();
        let splits: Vec<(&str, &str)> = item
            .match_indices(':')
            .map(|(i, _)| (&item[..i], &item[i + 1..]))
            .filter(|(a, b)| phylogeny.vertex(a).is_some() && phylogeny.vertex(b).is_some())
            .collect();
        let (a, b) = match splits.as_slice() {
            [one] => *one,
            [] => {
                let (a, b) = item
                    .split_once(':')
                    .ok_or_else(|| NetworkError::UnknownVertex(format!("{item} (expected `a:b`)")))?;
                let missing = if phylogeny.vertex(a).is_none() { a } else { b };
                return Err(NetworkError::UnknownVertex(missing.to_string()));
            }
            _ => return Err(NetworkError::UnknownVertex(format!("{item} (ambiguous split)"))),
        };
        pairs.insert(ContactPair::from_names(phylogeny, a, b)?, ());
    }
    Ok(Summary::new(pairs.into_keys()))
}
