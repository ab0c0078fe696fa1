//! Lightweight is-a taxonomy used to relate descriptor terms.
//!
//! Text format, one statement per line:
//!
//! ```text
//! # comment
//! !root,entity
//! animal,entity
//! snake,animal
//! ```
//!
//! `child,parent` declares an is-a edge; `!root,<term>` declares the root
//! and must appear exactly once. Terms are trimmed, lowercased and have
//! internal whitespace collapsed to single spaces. A term may have several
//! parents, but the graph must be acyclic and every term must reach the
//! root through parent links.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::path::Path;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Index of a term inside one [`Taxonomy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Canonical form of a term: trimmed, lowercase, single inner spaces.
pub fn normalize_term(raw: &str) -> Option<String> {
    let joined = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    (!joined.is_empty()).then_some(joined)
}

#[derive(Clone)]
pub struct Taxonomy {
    name: String,
    terms: Vec<String>,
    index: HashMap<String, NodeId>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
    // Per-source BFS distances, filled on first use.
    hops: Vec<OnceLock<Vec<u32>>>,
}

impl fmt::Debug for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Taxonomy")
            .field("name", &self.name)
            .field("root", &self.terms[self.root])
            .field("terms", &self.terms.len())
            .finish()
    }
}

impl PartialEq for Taxonomy {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.terms == other.terms
            && self.parents == other.parents
            && self.root == other.root
    }
}

/// Collects edges before validating them into a [`Taxonomy`].
#[derive(Debug, Clone)]
pub struct TaxonomyBuilder {
    name: String,
    root: String,
    edges: Vec<(String, String, usize)>,
}

impl TaxonomyBuilder {
    pub fn new(name: impl Into<String>, root: &str) -> Self {
        Self {
            name: name.into(),
            root: root.to_string(),
            edges: Vec::new(),
        }
    }

    pub fn edge(mut self, child: &str, parent: &str) -> Self {
        self.push_edge(child, parent, 0);
        self
    }

    fn push_edge(&mut self, child: &str, parent: &str, line: usize) {
        self.edges.push((child.to_string(), parent.to_string(), line));
    }

    pub fn build(self) -> Result<Taxonomy> {
        let bad = |line: usize, message: String| Error::Taxonomy { line, message };
        let root = normalize_term(&self.root).ok_or_else(|| bad(0, "empty root term".into()))?;

        let mut terms = vec![root.clone()];
        let mut index = HashMap::from([(root, NodeId(0))]);
        let mut parents: Vec<Vec<usize>> = vec![Vec::new()];
        let mut intern = |term: String, parents: &mut Vec<Vec<usize>>| -> usize {
            if let Some(id) = index.get(&term) {
                return id.0;
            }
            let id = terms.len();
            index.insert(term.clone(), NodeId(id));
            terms.push(term);
            parents.push(Vec::new());
            id
        };

        for (child, parent, line) in &self.edges {
            let c = normalize_term(child).ok_or_else(|| bad(*line, "empty child term".into()))?;
            let p = normalize_term(parent).ok_or_else(|| bad(*line, "empty parent term".into()))?;
            if c == p {
                return Err(bad(*line, format!("'{c}' cannot be its own parent")));
            }
            let c = intern(c, &mut parents);
            let p = intern(p, &mut parents);
            if c == 0 {
                return Err(bad(*line, "the root cannot have a parent".into()));
            }
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }

        let n = terms.len();
        let mut children = vec![Vec::new(); n];
        for (c, ps) in parents.iter().enumerate() {
            for &p in ps {
                children[p].push(c);
            }
        }

        // Walking down from the root reaches every term iff each term has a
        // parent chain ending at the root.
        let mut reached = vec![false; n];
        reached[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                if !reached[c] {
                    reached[c] = true;
                    queue.push_back(c);
                }
            }
        }
        if let Some(orphan) = reached.iter().position(|r| !r) {
            return Err(bad(
                0,
                format!("'{}' does not reach root '{}'", terms[orphan], terms[0]),
            ));
        }
        if let Some(term) = find_cycle(&parents) {
            return Err(bad(0, format!("cycle through '{}'", terms[term])));
        }

        Ok(Taxonomy {
            name: self.name,
            hops: (0..n).map(|_| OnceLock::new()).collect(),
            terms,
            index,
            parents,
            children,
            root: 0,
        })
    }
}

fn find_cycle(parents: &[Vec<usize>]) -> Option<usize> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let mut mark = vec![Mark::New; parents.len()];
    for start in 0..parents.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Open;
        while let Some((u, i)) = stack.pop() {
            if let Some(&p) = parents[u].get(i) {
                stack.push((u, i + 1));
                match mark[p] {
                    Mark::Open => return Some(p),
                    Mark::New => {
                        mark[p] = Mark::Open;
                        stack.push((p, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[u] = Mark::Done;
            }
        }
    }
    None
}

impl Taxonomy {
    pub fn builder(name: impl Into<String>, root: &str) -> TaxonomyBuilder {
        TaxonomyBuilder::new(name, root)
    }

    pub fn parse(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut root: Option<(String, usize)> = None;
        let mut edges = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim().trim_start_matches('\u{feff}');
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (left, right) = trimmed.split_once(',').ok_or_else(|| Error::Taxonomy {
                line,
                message: format!("expected 'child,parent', got '{trimmed}'"),
            })?;
            if right.contains(',') {
                return Err(Error::Taxonomy {
                    line,
                    message: "too many fields".into(),
                });
            }
            if left.trim() == "!root" {
                if let Some((_, first)) = root {
                    return Err(Error::Taxonomy {
                        line,
                        message: format!("root already declared on line {first}"),
                    });
                }
                root = Some((right.to_string(), line));
            } else {
                edges.push((left.to_string(), right.to_string(), line));
            }
        }
        let (root, _) = root.ok_or_else(|| Error::Taxonomy {
            line: 0,
            message: "missing '!root,<term>' declaration".into(),
        })?;
        let mut builder = TaxonomyBuilder::new(name, &root);
        for (c, p, line) in edges {
            builder.push_edge(&c, &p, line);
        }
        builder.build()
    }

    /// Reads a taxonomy file; its name is the file stem.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "taxonomy".into());
        Self::parse(name, &text)
    }

    /// Serializes to the line format accepted by [`Taxonomy::parse`].
    pub fn to_text(&self) -> String {
        let mut out = format!("!root,{}\n", self.terms[self.root]);
        for (c, ps) in self.parents.iter().enumerate() {
            for &p in ps {
                out.push_str(&format!("{},{}\n", self.terms[c], self.terms[p]));
            }
        }
        out
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn root(&self) -> &str {
        &self.terms[self.root]
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn term(&self, id: NodeId) -> &str {
        &self.terms[id.0]
    }

    pub fn contains(&self, term: &str) -> bool {
        self.lookup(term).is_some()
    }

    pub fn lookup(&self, term: &str) -> Option<NodeId> {
        match self.index.get(term) {
            Some(id) => Some(*id),
            None => normalize_term(term).and_then(|t| self.index.get(&t).copied()),
        }
    }

    pub fn resolve(&self, term: &str) -> Result<NodeId> {
        self.lookup(term)
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    pub fn parents(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parents[id.0].iter().map(|&p| NodeId(p))
    }

    /// Strict descendants of `term`, in declaration order.
    pub fn descendants(&self, term: &str) -> Result<Vec<&str>> {
        let start = self.resolve(term)?.0;
        let mut seen = vec![false; self.terms.len()];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for &c in &self.children[u] {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        seen[start] = false;
        Ok(seen
            .iter()
            .enumerate()
            .filter(|(_, s)| **s)
            .map(|(i, _)| self.terms[i].as_str())
            .collect())
    }

    /// Edge count of the shortest undirected is-a path between two nodes.
    pub fn path_length(&self, a: NodeId, b: NodeId) -> u32 {
        if a == b {
            return 0;
        }
        // The root reaches everything, so the undirected graph is connected.
        self.hops[a.0].get_or_init(|| self.bfs(a.0))[b.0]
    }

    fn bfs(&self, source: usize) -> Vec<u32> {
        let mut dist = vec![u32::MAX; self.terms.len()];
        dist[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            let next = dist[u] + 1;
            for &v in self.parents[u].iter().chain(&self.children[u]) {
                if dist[v] == u32::MAX {
                    dist[v] = next;
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}
