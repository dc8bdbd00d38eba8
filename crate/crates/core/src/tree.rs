//! Rooted trees and their finite breadth-first truncations.
//!
//! A `TreeSpec` describes the whole (possibly infinite) tree; a `Truncation`
//! realizes the vertices of depth at most `depth_cap` with dense BFS ids:
//! the root is id 0, levels are contiguous, and the children of a vertex
//! occupy a contiguous id range because BFS processes parents in id order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub type VertexId = u32;

const NO_PARENT: u32 = u32::MAX;

/// Tree description given by explicit parent-child pairs with external ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeListData {
    pub root: u64,
    pub edges: Vec<(u64, u64)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeKind {
    /// Every vertex has the same number of children.
    Homogeneous { children: u32 },
    /// Children count depends only on depth: `prefix[d]`, then `rest`.
    RadialProfile { prefix: Vec<u32>, rest: u32 },
    EdgeList(EdgeListData),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSpec {
    pub kind: TreeKind,
    /// Whether the described tree continues past any truncation cap.
    pub declared_infinite: bool,
}

impl TreeSpec {
    pub fn homogeneous(children: u32) -> Self {
        TreeSpec { kind: TreeKind::Homogeneous { children }, declared_infinite: true }
    }

    pub fn radial_profile(prefix: Vec<u32>, rest: u32) -> Self {
        TreeSpec { kind: TreeKind::RadialProfile { prefix, rest }, declared_infinite: true }
    }

    pub fn edge_list(root: u64, edges: Vec<(u64, u64)>) -> Self {
        TreeSpec { kind: TreeKind::EdgeList(EdgeListData { root, edges }), declared_infinite: false }
    }

    /// Declared children count at a depth, for generator specs.
    pub fn children_at_depth(&self, depth: u32) -> Option<u32> {
        match &self.kind {
            TreeKind::Homogeneous { children } => Some(*children),
            TreeKind::RadialProfile { prefix, rest } => {
                Some(prefix.get(depth as usize).copied().unwrap_or(*rest))
            }
            TreeKind::EdgeList(_) => None,
        }
    }

    /// True for specs defined by a depth rule rather than explicit edges.
    pub fn is_generator(&self) -> bool {
        !matches!(self.kind, TreeKind::EdgeList(_))
    }

    /// Level sizes `0..=cap` for generator specs, as f64 (they overflow any
    /// integer type long before they overflow f64).
    pub fn level_sizes(&self, cap: u32) -> Option<Vec<f64>> {
        if !self.is_generator() {
            return None;
        }
        let mut sizes = Vec::with_capacity(cap as usize + 1);
        let mut current = 1.0f64;
        for d in 0..=cap {
            sizes.push(current);
            if d < cap {
                current *= f64::from(self.children_at_depth(d).unwrap());
            }
        }
        Some(sizes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    /// Reject any vertex with more children than this.
    pub max_degree: u32,
    /// Refuse to realize more vertices than this.
    pub max_vertices: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_degree: 64, max_vertices: 4_000_000 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TreeError {
    #[error("homogeneous spec requires at least one child per vertex")]
    ZeroBranching,
    #[error("declared-infinite radial profile has a zero children count at depth {0}")]
    DyingProfile(u32),
    #[error("vertex with {degree} children exceeds the degree cap {cap}")]
    DegreeCap { degree: u32, cap: u32 },
    #[error("truncation would realize more than {cap} vertices")]
    TooLarge { cap: usize },
    #[error("root {0} is listed as a child")]
    RootAsChild(u64),
    #[error("vertex {0} is listed as a child twice")]
    DuplicateChild(u64),
    #[error("self-loop on vertex {0}")]
    SelfLoop(u64),
    #[error("{count} vertices unreachable from the root (e.g. {example})")]
    Disconnected { count: usize, example: u64 },
    #[error("unknown vertex id {0}")]
    UnknownVertex(VertexId),
    #[error("edge-list parse error on line {line}: {message}")]
    EdgeListParse { line: usize, message: String },
}

/// Terminality verdict; `boundary_uncertain` is set when the answer depends on
/// structure the `TreeSpec` does not pin down beyond the listed data.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TerminalVerdict {
    pub terminal: bool,
    pub boundary_uncertain: bool,
}

/// Finite BFS-ordered truncation of a tree.
#[derive(Debug, Clone)]
pub struct Truncation {
    spec: TreeSpec,
    depth_cap: u32,
    parent: Vec<u32>,
    depth: Vec<u32>,
    /// CSR over the BFS contiguity invariant: children of `v` are ids
    /// `child_start[v]..child_start[v+1]`.
    child_start: Vec<u32>,
    /// Level `k` is ids `level_start[k]..level_start[k+1]`.
    level_start: Vec<u32>,
    /// For edge-list specs: BFS id -> external id, and total listed children
    /// (including any cut off by the cap).
    ext_ids: Option<Vec<u64>>,
    listed_children: Option<Vec<u32>>,
    covers_spec: bool,
}

impl PartialEq for Truncation {
    fn eq(&self, other: &Self) -> bool {
        self.parent == other.parent && self.depth == other.depth
    }
}

impl Truncation {
    pub fn build(spec: &TreeSpec, depth_cap: u32) -> Result<Self, TreeError> {
        Self::build_with(spec, depth_cap, &BuildOptions::default())
    }

    pub fn build_with(
        spec: &TreeSpec,
        depth_cap: u32,
        opts: &BuildOptions,
    ) -> Result<Self, TreeError> {
        match &spec.kind {
            TreeKind::Homogeneous { children } => {
                if *children == 0 {
                    return Err(TreeError::ZeroBranching);
                }
                if *children > opts.max_degree {
                    return Err(TreeError::DegreeCap { degree: *children, cap: opts.max_degree });
                }
                build_generator(spec.clone(), depth_cap, opts)
            }
            TreeKind::RadialProfile { prefix, rest } => {
                if spec.declared_infinite {
                    for (d, b) in prefix.iter().enumerate() {
                        if *b == 0 {
                            return Err(TreeError::DyingProfile(d as u32));
                        }
                    }
                    if *rest == 0 {
                        return Err(TreeError::DyingProfile(prefix.len() as u32));
                    }
                }
                for b in prefix.iter().chain(std::iter::once(rest)) {
                    if *b > opts.max_degree {
                        return Err(TreeError::DegreeCap { degree: *b, cap: opts.max_degree });
                    }
                }
                build_generator(spec.clone(), depth_cap, opts)
            }
            TreeKind::EdgeList(data) => build_edge_list(spec.clone(), data.clone(), depth_cap, opts),
        }
    }

    pub fn spec(&self) -> &TreeSpec {
        &self.spec
    }

    pub fn depth_cap(&self) -> u32 {
        self.depth_cap
    }

    /// True when the truncation realized the whole tree: a declared-finite
    /// spec whose vertices all fit under the depth cap. Verdicts on such a
    /// truncation are exact, not window estimates.
    pub fn covers_spec(&self) -> bool {
        self.covers_spec
    }

    pub fn vertex_count(&self) -> usize {
        self.parent.len()
    }

    /// Number of realized levels (max realized depth + 1).
    pub fn levels(&self) -> usize {
        self.level_start.len() - 1
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (v as usize) < self.parent.len()
    }

    fn check(&self, v: VertexId) -> Result<(), TreeError> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(TreeError::UnknownVertex(v))
        }
    }

    pub fn depth(&self, v: VertexId) -> u32 {
        self.depth[v as usize]
    }

    pub fn parent(&self, v: VertexId) -> Result<Option<VertexId>, TreeError> {
        self.check(v)?;
        let p = self.parent[v as usize];
        Ok(if p == NO_PARENT { None } else { Some(p) })
    }

    pub fn children(&self, v: VertexId) -> std::ops::Range<VertexId> {
        self.child_start[v as usize]..self.child_start[v as usize + 1]
    }

    pub fn level(&self, k: usize) -> std::ops::Range<VertexId> {
        if k + 1 < self.level_start.len() {
            self.level_start[k]..self.level_start[k + 1]
        } else {
            0..0
        }
    }

    pub fn vertices(&self) -> std::ops::Range<VertexId> {
        0..self.parent.len() as u32
    }

    /// External id of a vertex, for edge-list specs.
    pub fn external_id(&self, v: VertexId) -> Option<u64> {
        self.ext_ids.as_ref().map(|ids| ids[v as usize])
    }

    /// Graph distance via parent climbing to the common ancestor.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<u32, TreeError> {
        self.check(u)?;
        self.check(v)?;
        let (mut a, mut b) = (u, v);
        let mut steps = 0u32;
        while self.depth(a) > self.depth(b) {
            a = self.parent[a as usize];
            steps += 1;
        }
        while self.depth(b) > self.depth(a) {
            b = self.parent[b as usize];
            steps += 1;
        }
        while a != b {
            a = self.parent[a as usize];
            b = self.parent[b as usize];
            steps += 2;
        }
        Ok(steps)
    }

    /// All realized vertices of the sector rooted at `v` (the vertex and its
    /// descendants), in BFS id order.
    pub fn sector(&self, v: VertexId) -> Result<Vec<VertexId>, TreeError> {
        self.check(v)?;
        let mut out = vec![v];
        let mut i = 0;
        while i < out.len() {
            let w = out[i];
            out.extend(self.children(w));
            i += 1;
        }
        out.sort_unstable();
        Ok(out)
    }

    /// Whether `v` has exactly one neighbour in the underlying spec.
    pub fn is_terminal(&self, v: VertexId) -> Result<TerminalVerdict, TreeError> {
        self.check(v)?;
        let parent_count = u32::from(v != 0);
        match &self.spec.kind {
            TreeKind::EdgeList(_) => {
                let listed = self.listed_children.as_ref().unwrap()[v as usize];
                let neighbors = parent_count + listed;
                if self.spec.declared_infinite && neighbors <= 1 {
                    // The listing may be a window of a larger tree: absent
                    // children are unknowable.
                    Ok(TerminalVerdict { terminal: neighbors == 1, boundary_uncertain: true })
                } else {
                    Ok(TerminalVerdict { terminal: neighbors == 1, boundary_uncertain: false })
                }
            }
            _ => {
                let declared = if self.spec.declared_infinite || self.depth(v) < self.depth_cap {
                    self.spec.children_at_depth(self.depth(v)).unwrap()
                } else {
                    0
                };
                Ok(TerminalVerdict {
                    terminal: parent_count + declared == 1,
                    boundary_uncertain: false,
                })
            }
        }
    }
}

impl fmt::Display for Truncation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} vertices, depth cap {}, {} levels",
            self.vertex_count(),
            self.depth_cap,
            self.levels()
        )
    }
}

/// CSR child ranges from a BFS parent vector: first-child id of `v` is one
/// plus the child count of every vertex before it.
fn child_starts(parent: &[u32]) -> Vec<u32> {
    let n = parent.len();
    let mut counts = vec![0u32; n];
    for u in 1..n {
        counts[parent[u] as usize] += 1;
    }
    let mut starts = Vec::with_capacity(n + 1);
    let mut acc = 1u32;
    starts.push(acc);
    for c in counts {
        acc += c;
        starts.push(acc);
    }
    starts
}

fn build_generator(
    spec: TreeSpec,
    depth_cap: u32,
    opts: &BuildOptions,
) -> Result<Truncation, TreeError> {
    let mut parent: Vec<u32> = vec![NO_PARENT];
    let mut depth: Vec<u32> = vec![0];
    let mut level_start: Vec<u32> = vec![0, 1];

    let mut level_begin = 0usize;
    let mut level_end = 1usize;
    for d in 0..depth_cap {
        let b = spec.children_at_depth(d).unwrap() as usize;
        let next_len = (level_end - level_begin) * b;
        if next_len == 0 {
            break;
        }
        if parent.len() + next_len > opts.max_vertices {
            return Err(TreeError::TooLarge { cap: opts.max_vertices });
        }
        for v in level_begin..level_end {
            for _ in 0..b {
                parent.push(v as u32);
                depth.push(d + 1);
            }
        }
        level_begin = level_end;
        level_end = parent.len();
        level_start.push(level_end as u32);
    }

    let child_start = child_starts(&parent);
    let last_depth = (level_start.len() - 2) as u32;
    let covers_spec =
        !spec.declared_infinite && spec.children_at_depth(last_depth).unwrap() == 0;
    Ok(Truncation {
        spec,
        depth_cap,
        parent,
        depth,
        child_start,
        level_start,
        ext_ids: None,
        listed_children: None,
        covers_spec,
    })
}

fn build_edge_list(
    spec: TreeSpec,
    data: EdgeListData,
    depth_cap: u32,
    opts: &BuildOptions,
) -> Result<Truncation, TreeError> {
    // Group children by parent in listing order; detect structural faults.
    let mut children: BTreeMap<u64, Vec<u64>> = BTreeMap::new();
    let mut seen_child: BTreeSet<u64> = BTreeSet::new();
    let mut mentioned: BTreeSet<u64> = BTreeSet::new();
    mentioned.insert(data.root);
    for &(p, c) in &data.edges {
        if p == c {
            return Err(TreeError::SelfLoop(p));
        }
        if c == data.root {
            return Err(TreeError::RootAsChild(c));
        }
        if !seen_child.insert(c) {
            return Err(TreeError::DuplicateChild(c));
        }
        mentioned.insert(p);
        mentioned.insert(c);
        children.entry(p).or_default().push(c);
    }
    for kids in children.values() {
        if kids.len() as u32 > opts.max_degree {
            return Err(TreeError::DegreeCap {
                degree: kids.len() as u32,
                cap: opts.max_degree,
            });
        }
    }

    // BFS from the root over the full listing (no cap) to find reachability.
    let mut order: Vec<u64> = vec![data.root];
    let mut depth_of: BTreeMap<u64, u32> = BTreeMap::new();
    depth_of.insert(data.root, 0);
    let mut qi = 0usize;
    while qi < order.len() {
        let u = order[qi];
        qi += 1;
        let d = depth_of[&u];
        if let Some(kids) = children.get(&u) {
            for &c in kids {
                depth_of.insert(c, d + 1);
                order.push(c);
            }
        }
    }
    if order.len() < mentioned.len() {
        let example = mentioned
            .iter()
            .find(|id| !depth_of.contains_key(id))
            .copied()
            .unwrap();
        return Err(TreeError::Disconnected { count: mentioned.len() - order.len(), example });
    }

    // Second BFS restricted to the cap, assigning dense ids level by level.
    let mut parent: Vec<u32> = vec![NO_PARENT];
    let mut depth: Vec<u32> = vec![0];
    let mut ext_ids: Vec<u64> = vec![data.root];
    let mut level_start: Vec<u32> = vec![0, 1];
    let mut listed: Vec<u32> = vec![children.get(&data.root).map_or(0, |k| k.len() as u32)];

    let mut frontier_begin = 0usize;
    loop {
        let frontier_end = parent.len();
        let d = depth[frontier_begin];
        if d >= depth_cap {
            break;
        }
        for v in frontier_begin..frontier_end {
            let ext = ext_ids[v];
            if let Some(kids) = children.get(&ext) {
                for &c in kids {
                    if parent.len() >= opts.max_vertices {
                        return Err(TreeError::TooLarge { cap: opts.max_vertices });
                    }
                    parent.push(v as u32);
                    depth.push(d + 1);
                    ext_ids.push(c);
                    listed.push(children.get(&c).map_or(0, |k| k.len() as u32));
                }
            }
        }
        if parent.len() == frontier_end {
            break;
        }
        frontier_begin = frontier_end;
        level_start.push(parent.len() as u32);
    }

    let child_start = child_starts(&parent);
    let covers_spec = !spec.declared_infinite && parent.len() == order.len();
    Ok(Truncation {
        spec,
        depth_cap,
        parent,
        depth,
        child_start,
        level_start,
        ext_ids: Some(ext_ids),
        listed_children: Some(listed),
        covers_spec,
    })
}

/// Parse the edge-list file format: first non-comment line `root <id>`, then
/// `<parent-id> <child-id>` lines; `#` starts a comment.
pub fn parse_edge_list(text: &str) -> Result<TreeSpec, TreeError> {
    let mut root: Option<u64> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        if root.is_none() {
            let tag = parts.next().unwrap();
            if tag != "root" {
                return Err(TreeError::EdgeListParse {
                    line: line_no,
                    message: format!("expected 'root <id>', found '{tag}'"),
                });
            }
            let id = parse_id(parts.next(), line_no)?;
            if parts.next().is_some() {
                return Err(TreeError::EdgeListParse {
                    line: line_no,
                    message: "trailing tokens after root id".into(),
                });
            }
            root = Some(id);
        } else {
            let p = parse_id(parts.next(), line_no)?;
            let c = parse_id(parts.next(), line_no)?;
            if parts.next().is_some() {
                return Err(TreeError::EdgeListParse {
                    line: line_no,
                    message: "trailing tokens after edge".into(),
                });
            }
            edges.push((p, c));
        }
    }
    match root {
        Some(r) => Ok(TreeSpec::edge_list(r, edges)),
        None => Err(TreeError::EdgeListParse {
            line: text.lines().count() + 1,
            message: "missing 'root <id>' line".into(),
        }),
    }
}

fn parse_id(tok: Option<&str>, line: usize) -> Result<u64, TreeError> {
    let tok = tok.ok_or_else(|| TreeError::EdgeListParse {
        line,
        message: "missing id".into(),
    })?;
    tok.parse().map_err(|_| TreeError::EdgeListParse {
        line,
        message: format!("'{tok}' is not a nonnegative integer id"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reference BFS realization used to cross-check the packed builder.
    fn brute_levels(spec: &TreeSpec, cap: u32) -> Vec<Vec<(u32, Option<u32>)>> {
        // (id, parent) per level, ids assigned in BFS order
        let mut levels: Vec<Vec<(u32, Option<u32>)>> = vec![vec![(0, None)]];
        let mut next_id = 1u32;
        for d in 0..cap {
            let b = spec.children_at_depth(d).unwrap();
            let mut level = Vec::new();
            for &(v, _) in &levels[d as usize] {
                for _ in 0..b {
                    level.push((next_id, Some(v)));
                    next_id += 1;
                }
            }
            if level.is_empty() {
                break;
            }
            levels.push(level);
        }
        levels
    }

    #[test]
    fn homogeneous_binary_depth_three() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 3).unwrap();
        assert_eq!(t.vertex_count(), 15);
        let sizes: Vec<usize> = (0..t.levels()).map(|k| t.level(k).len()).collect();
        assert_eq!(sizes, vec![1, 2, 4, 8]);

        let brute = brute_levels(&TreeSpec::homogeneous(2), 3);
        for (k, level) in brute.iter().enumerate() {
            for &(id, p) in level {
                assert_eq!(t.depth(id), k as u32);
                assert_eq!(t.parent(id).unwrap(), p);
            }
        }
    }

    #[test]
    fn path_depth_five() {
        let t = Truncation::build(&TreeSpec::homogeneous(1), 5).unwrap();
        assert_eq!(t.vertex_count(), 6);
        for v in 1..6u32 {
            assert_eq!(t.parent(v).unwrap(), Some(v - 1));
        }
    }

    #[test]
    fn radial_profile_levels() {
        let t = Truncation::build(&TreeSpec::radial_profile(vec![3], 1), 2).unwrap();
        assert_eq!(t.vertex_count(), 7);
        let sizes: Vec<usize> = (0..t.levels()).map(|k| t.level(k).len()).collect();
        assert_eq!(sizes, vec![1, 3, 3]);
    }

    #[test]
    fn parent_id_arithmetic() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 4).unwrap();
        // first vertex of level 3 hangs off the first vertex of level 2
        assert_eq!(t.parent(7).unwrap(), Some(3));
        assert_eq!(t.children(3).collect::<Vec<_>>(), vec![7, 8]);
        // every child range is contiguous and consistent with parents
        for v in t.vertices() {
            for c in t.children(v) {
                assert_eq!(t.parent(c).unwrap(), Some(v));
            }
        }
    }

    #[test]
    fn level_sizes_match_generator_formula() {
        let spec = TreeSpec::homogeneous(3);
        let t = Truncation::build(&spec, 5).unwrap();
        let sizes = spec.level_sizes(5).unwrap();
        for k in 0..t.levels() {
            assert_eq!(t.level(k).len() as f64, sizes[k]);
        }
    }

    #[test]
    fn distance_is_depth_from_root() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 4).unwrap();
        for v in t.vertices() {
            assert_eq!(t.distance(0, v).unwrap(), t.depth(v));
            assert_eq!(t.distance(v, v).unwrap(), 0);
        }
        // two distinct children of the root
        assert_eq!(t.distance(1, 2).unwrap(), 2);
        // symmetry and the triangle inequality on all pairs of a small tree
        let small = Truncation::build(&TreeSpec::homogeneous(2), 3).unwrap();
        let n = small.vertex_count() as u32;
        for u in 0..n {
            for v in 0..n {
                let duv = small.distance(u, v).unwrap();
                assert_eq!(duv, small.distance(v, u).unwrap());
                for w in 0..n {
                    assert!(duv <= small.distance(u, w).unwrap() + small.distance(w, v).unwrap());
                }
            }
        }
    }

    #[test]
    fn sector_sizes() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 3).unwrap();
        assert_eq!(t.sector(0).unwrap().len(), 15);
        assert_eq!(t.sector(1).unwrap().len(), 7);
        let leaf = 14;
        assert_eq!(t.sector(leaf).unwrap(), vec![leaf]);
        // children partition a sector minus its root
        for v in t.vertices() {
            let total: usize = t.children(v).map(|c| t.sector(c).unwrap().len()).sum();
            assert_eq!(total + 1, t.sector(v).unwrap().len());
        }
    }

    #[test]
    fn terminal_verdicts() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 3).unwrap();
        assert_eq!(
            t.is_terminal(0).unwrap(),
            TerminalVerdict { terminal: false, boundary_uncertain: false }
        );
        // depth-cap vertex of a declared-infinite spec: children exist by decree
        assert_eq!(
            t.is_terminal(14).unwrap(),
            TerminalVerdict { terminal: false, boundary_uncertain: false }
        );

        // a path's root has exactly one neighbour
        let p = Truncation::build(&TreeSpec::homogeneous(1), 3).unwrap();
        assert!(p.is_terminal(0).unwrap().terminal);
        assert!(!p.is_terminal(1).unwrap().terminal);

        // finite edge list: the leaf really is terminal
        let spec = TreeSpec::edge_list(0, vec![(0, 1), (1, 2)]);
        let e = Truncation::build(&spec, 10).unwrap();
        assert_eq!(
            e.is_terminal(2).unwrap(),
            TerminalVerdict { terminal: true, boundary_uncertain: false }
        );

        // declared-infinite edge list: absence of listed children is uncertain
        let mut inf = spec;
        inf.declared_infinite = true;
        let e = Truncation::build(&inf, 10).unwrap();
        let v = e.is_terminal(2).unwrap();
        assert!(v.terminal && v.boundary_uncertain);
        let v = e.is_terminal(1).unwrap();
        assert!(!v.terminal && !v.boundary_uncertain);
    }

    #[test]
    fn zero_branching_rejected() {
        assert_eq!(
            Truncation::build(&TreeSpec::homogeneous(0), 3).unwrap_err(),
            TreeError::ZeroBranching
        );
        let dying = TreeSpec::radial_profile(vec![2, 0], 1);
        assert_eq!(Truncation::build(&dying, 3).unwrap_err(), TreeError::DyingProfile(1));
        // a finite radial profile may die out
        let mut finite = TreeSpec::radial_profile(vec![2, 0], 0);
        finite.declared_infinite = false;
        let t = Truncation::build(&finite, 5).unwrap();
        assert_eq!(t.vertex_count(), 3);
        assert!(t.covers_spec());
        // the same profile cut before the die-out is an honest window
        let cut = Truncation::build(&finite, 0).unwrap();
        assert!(!cut.covers_spec());
    }

    #[test]
    fn covers_spec_tracks_completeness() {
        assert!(!Truncation::build(&TreeSpec::homogeneous(2), 3).unwrap().covers_spec());

        let spec = TreeSpec::edge_list(0, vec![(0, 1), (1, 2), (0, 3)]);
        assert!(Truncation::build(&spec, 10).unwrap().covers_spec());
        assert!(!Truncation::build(&spec, 1).unwrap().covers_spec());

        let mut declared = TreeSpec::edge_list(0, vec![(0, 1)]);
        declared.declared_infinite = true;
        assert!(!Truncation::build(&declared, 10).unwrap().covers_spec());
    }

    #[test]
    fn degree_and_size_caps() {
        let opts = BuildOptions { max_degree: 4, max_vertices: 100 };
        assert!(matches!(
            Truncation::build_with(&TreeSpec::homogeneous(5), 2, &opts),
            Err(TreeError::DegreeCap { degree: 5, cap: 4 })
        ));
        assert!(matches!(
            Truncation::build_with(&TreeSpec::homogeneous(2), 10, &opts),
            Err(TreeError::TooLarge { cap: 100 })
        ));
    }

    #[test]
    fn edge_list_build_and_remap() {
        // shuffled listing with arbitrary external ids
        let spec = TreeSpec::edge_list(
            10,
            vec![(20, 40), (10, 20), (10, 30), (20, 50), (30, 60)],
        );
        let t = Truncation::build(&spec, 5).unwrap();
        assert_eq!(t.vertex_count(), 6);
        // BFS ids follow levels; children ordered by listing appearance
        assert_eq!(t.external_id(0), Some(10));
        assert_eq!(t.external_id(1), Some(20));
        assert_eq!(t.external_id(2), Some(30));
        assert_eq!(t.external_id(3), Some(40));
        assert_eq!(t.external_id(4), Some(50));
        assert_eq!(t.external_id(5), Some(60));
        assert_eq!(t.parent(5).unwrap(), Some(2));

        // cap cuts off depth-2 vertices but terminality still sees the listing
        let t1 = Truncation::build(&spec, 1).unwrap();
        assert_eq!(t1.vertex_count(), 3);
        let v = t1.is_terminal(1).unwrap();
        assert!(!v.terminal && !v.boundary_uncertain);
    }

    #[test]
    fn edge_list_faults() {
        let cyc = TreeSpec::edge_list(0, vec![(0, 1), (1, 2), (2, 1)]);
        assert_eq!(Truncation::build(&cyc, 5).unwrap_err(), TreeError::DuplicateChild(1));

        let disc = TreeSpec::edge_list(0, vec![(0, 1), (5, 6)]);
        assert!(matches!(
            Truncation::build(&disc, 5).unwrap_err(),
            TreeError::Disconnected { count: 2, .. }
        ));

        let loopy = TreeSpec::edge_list(0, vec![(1, 1)]);
        assert_eq!(Truncation::build(&loopy, 5).unwrap_err(), TreeError::SelfLoop(1));

        let rooty = TreeSpec::edge_list(0, vec![(1, 0)]);
        assert_eq!(Truncation::build(&rooty, 5).unwrap_err(), TreeError::RootAsChild(0));
    }

    #[test]
    fn edge_list_file_format() {
        let text = "# sample tree\nroot 7\n7 8   # first child\n7 9\n\n8 11\n";
        let spec = parse_edge_list(text).unwrap();
        let t = Truncation::build(&spec, 10).unwrap();
        assert_eq!(t.vertex_count(), 4);
        assert_eq!(t.external_id(0), Some(7));

        let err = parse_edge_list("7 8\n").unwrap_err();
        assert!(matches!(err, TreeError::EdgeListParse { line: 1, .. }));
        let err = parse_edge_list("root 1\n1 x\n").unwrap_err();
        assert!(matches!(err, TreeError::EdgeListParse { line: 2, .. }));
        let err = parse_edge_list("# nothing\n").unwrap_err();
        assert!(matches!(err, TreeError::EdgeListParse { .. }));
    }

    #[test]
    fn build_is_deterministic() {
        let spec = TreeSpec::radial_profile(vec![3, 2], 1);
        let a = Truncation::build(&spec, 4).unwrap();
        let b = Truncation::build(&spec, 4).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.child_start, b.child_start);
        assert_eq!(a.level_start, b.level_start);
    }

    #[test]
    fn unknown_vertex_errors() {
        let t = Truncation::build(&TreeSpec::homogeneous(2), 2).unwrap();
        assert_eq!(t.parent(99).unwrap_err(), TreeError::UnknownVertex(99));
        assert_eq!(t.distance(0, 99).unwrap_err(), TreeError::UnknownVertex(99));
        assert_eq!(t.sector(99).unwrap_err(), TreeError::UnknownVertex(99));
    }
}
