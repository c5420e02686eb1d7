//! Leader–follower graphs.
//!
//! A [`LeaderNetwork`] is an unweighted graph with one distinguished leader
//! node. Node indices are 0-based; the follower ordering used by every
//! matrix in this crate is the ascending node order with the leader removed.
//! In directed mode an edge `(u, v)` means information flows from `u` to `v`,
//! so `v` lists `u` among its neighbors.

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Undirected,
    Directed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaderNetwork {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    mode: Mode,
    leader: usize,
    // out[u] holds v for every edge u -> v (both directions when undirected).
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

/// On-disk form: `{"n": .., "leader": .., "mode": .., "edges": [[u, v], ..]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub leader: usize,
    pub mode: Mode,
    pub edges: Vec<[usize; 2]>,
}

impl LeaderNetwork {
    pub fn new(node_count: usize, edges: &[(usize, usize)], mode: Mode, leader: usize) -> Result<Self> {
        if leader >= node_count {
            return Err(Error::IndexOutOfRange { index: leader, node_count });
        }
        if edges.is_empty() {
            return Err(Error::EmptyEdgeList);
        }
        let mut seen = BTreeSet::new();
        let mut out_adj = vec![Vec::new(); node_count];
        let mut in_adj = vec![Vec::new(); node_count];
        for &(u, v) in edges {
            for index in [u, v] {
                if index >= node_count {
                    return Err(Error::IndexOutOfRange { index, node_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            match mode {
                Mode::Undirected => {
                    if !seen.insert((u.min(v), u.max(v))) {
                        return Err(Error::DuplicateEdge(u, v));
                    }
                    out_adj[u].push(v);
                    out_adj[v].push(u);
                    in_adj[u].push(v);
                    in_adj[v].push(u);
                }
                Mode::Directed => {
                    if seen.contains(&(u, v)) {
                        return Err(Error::DuplicateEdge(u, v));
                    }
                    if seen.contains(&(v, u)) {
                        return Err(Error::AntiParallel(v, u));
                    }
                    seen.insert((u, v));
                    out_adj[u].push(v);
                    in_adj[v].push(u);
                }
            }
        }
        for list in out_adj.iter_mut().chain(in_adj.iter_mut()) {
            list.sort_unstable();
        }
        Ok(Self { node_count, edges: edges.to_vec(), mode, leader, out_adj, in_adj })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn follower_count(&self) -> usize {
        self.node_count - 1
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn leader(&self) -> usize {
        self.leader
    }

    /// Follower node indices in kernel order.
    pub fn followers(&self) -> Vec<usize> {
        (0..self.node_count).filter(|&v| v != self.leader).collect()
    }

    /// Kernel row/column of a follower node.
    pub fn follower_position(&self, node: usize) -> Option<usize> {
        match node.cmp(&self.leader) {
            _ if node >= self.node_count => None,
            std::cmp::Ordering::Less => Some(node),
            std::cmp::Ordering::Equal => None,
            std::cmp::Ordering::Greater => Some(node - 1),
        }
    }

    /// Follower node at a kernel position.
    pub fn follower_node(&self, position: usize) -> usize {
        if position < self.leader {
            position
        } else {
            position + 1
        }
    }

    /// Nodes that `v` listens to (in-neighbors; all neighbors when undirected).
    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    /// Degree when undirected, in-degree when directed.
    pub fn degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    fn underlying_neighbors(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        let (a, b) = match self.mode {
            Mode::Undirected => (&self.out_adj[v][..], &[][..]),
            Mode::Directed => (&self.out_adj[v][..], &self.in_adj[v][..]),
        };
        a.iter().chain(b.iter()).copied()
    }

    /// The same edges with direction dropped.
    pub fn undirected_counterpart(&self) -> LeaderNetwork {
        match self.mode {
            Mode::Undirected => self.clone(),
            Mode::Directed => LeaderNetwork::new(self.node_count, &self.edges, Mode::Undirected, self.leader)
                .expect("a valid directed network has a valid undirected counterpart"),
        }
    }

    /// Connectivity of the underlying undirected graph, optionally with one node removed.
    fn underlying_connected_without(&self, removed: Option<usize>) -> bool {
        let start = match (0..self.node_count).find(|&v| Some(v) != removed) {
            Some(s) => s,
            None => return true,
        };
        let mut seen = vec![false; self.node_count];
        if let Some(r) = removed {
            seen[r] = true;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for w in self.underlying_neighbors(v) {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }

    pub fn is_connected(&self) -> bool {
        self.underlying_connected_without(None)
    }

    /// Nodes reachable from the leader along out-edges.
    pub fn reachable_from_leader(&self) -> Vec<bool> {
        let mut seen = vec![false; self.node_count];
        seen[self.leader] = true;
        let mut queue = VecDeque::from([self.leader]);
        while let Some(v) = queue.pop_front() {
            for &w in &self.out_adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// First follower not reachable from the leader, if any.
    pub fn first_unreachable(&self) -> Option<usize> {
        self.reachable_from_leader().iter().position(|&r| !r)
    }

    /// Whether the graph is a tree (directed: its underlying graph is a tree
    /// and every follower is reachable from the leader).
    pub fn validate_tree(&self) -> bool {
        self.edges.len() + 1 == self.node_count
            && self.is_connected()
            && (self.mode == Mode::Undirected || self.first_unreachable().is_none())
    }

    pub(crate) fn require_tree(&self) -> Result<RootedTree> {
        if self.edges.len() + 1 != self.node_count || !self.is_connected() {
            return Err(Error::NotATree);
        }
        if self.mode == Mode::Directed {
            if let Some(v) = self.first_unreachable() {
                return Err(Error::LeaderUnreachable(v));
            }
        }
        Ok(RootedTree::new(self))
    }

    /// Whether removing the leader disconnects the followers.
    pub fn is_leader_cut_vertex(&self) -> bool {
        !self.underlying_connected_without(Some(self.leader))
    }

    /// Nodes on the unique leader-to-`node` path, from the leader's neighbor to `node`.
    pub fn path_to_leader(&self, node: usize) -> Result<PathToLeader> {
        if node >= self.node_count {
            return Err(Error::IndexOutOfRange { index: node, node_count: self.node_count });
        }
        if node == self.leader {
            return Err(Error::IsLeader(node));
        }
        Ok(self.require_tree()?.path_to_leader(node))
    }

    /// Every leader-rooted path in depth-first order (children ascending).
    pub fn leader_rooted_paths(&self) -> Result<Vec<LeaderRootedPath>> {
        Ok(self.require_tree()?.leader_rooted_paths())
    }

    /// Whether this is a directed path with the leader at one end.
    pub fn is_directed_path(&self) -> bool {
        self.mode == Mode::Directed
            && self.validate_tree()
            && (0..self.node_count).all(|v| self.out_degree(v) <= 1)
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            n: self.node_count,
            leader: self.leader,
            mode: self.mode,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        Self::try_from(file)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("network serializes")
    }
}

impl TryFrom<NetworkFile> for LeaderNetwork {
    type Error = Error;

    fn try_from(file: NetworkFile) -> Result<Self> {
        let edges: Vec<_> = file.edges.iter().map(|e| (e[0], e[1])).collect();
        LeaderNetwork::new(file.n, &edges, file.mode, file.leader)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathToLeader {
    pub node: usize,
    /// Leader's neighbor first, `node` last; never contains the leader.
    pub nodes: Vec<usize>,
}

impl PathToLeader {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.nodes.contains(&v)
    }

    pub fn common_nodes(&self, other: &PathToLeader) -> usize {
        self.nodes.iter().filter(|v| other.contains(**v)).count()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LeaderRootedPath {
    /// From the leader's neighbor down to a terminal node.
    pub nodes: Vec<usize>,
    /// Suffix of `nodes` not covered by earlier paths, shallowest first.
    pub segment: Vec<usize>,
}

impl LeaderRootedPath {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// A tree hung from its leader.
#[derive(Clone, Debug)]
pub(crate) struct RootedTree {
    pub leader: usize,
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<usize>,
    pub children: Vec<Vec<usize>>,
}

impl RootedTree {
    fn new(net: &LeaderNetwork) -> Self {
        let n = net.node_count;
        let mut parent = vec![None; n];
        let mut depth = vec![0; n];
        let mut children = vec![Vec::new(); n];
        let mut seen = vec![false; n];
        seen[net.leader] = true;
        let mut queue = VecDeque::from([net.leader]);
        while let Some(v) = queue.pop_front() {
            let mut next: Vec<usize> = net.underlying_neighbors(v).filter(|&w| !seen[w]).collect();
            next.sort_unstable();
            for w in next {
                seen[w] = true;
                parent[w] = Some(v);
                depth[w] = depth[v] + 1;
                children[v].push(w);
                queue.push_back(w);
            }
        }
        Self { leader: net.leader, parent, depth, children }
    }

    pub fn path_to_leader(&self, node: usize) -> PathToLeader {
        let mut nodes = Vec::with_capacity(self.depth[node]);
        let mut v = node;
        while v != self.leader {
            nodes.push(v);
            v = self.parent[v].expect("every follower has a parent");
        }
        nodes.reverse();
        PathToLeader { node, nodes }
    }

    /// Is `ancestor` on the leader path of `node` (inclusive)?
    pub fn is_ancestor_or_self(&self, ancestor: usize, node: usize) -> bool {
        let mut v = node;
        loop {
            if v == ancestor {
                return true;
            }
            match self.parent[v] {
                Some(p) if self.depth[p] >= self.depth[ancestor] => v = p,
                _ => return false,
            }
        }
    }

    pub fn leader_rooted_paths(&self) -> Vec<LeaderRootedPath> {
        let mut paths = Vec::new();
        let mut labeled = vec![false; self.parent.len()];
        let mut stack = Vec::new();
        self.visit(self.leader, &mut stack, &mut labeled, &mut paths);
        paths
    }

    fn visit(&self, v: usize, stack: &mut Vec<usize>, labeled: &mut [bool], paths: &mut Vec<LeaderRootedPath>) {
        if v != self.leader {
            stack.push(v);
        }
        if self.children[v].is_empty() && v != self.leader {
            let segment: Vec<usize> = stack.iter().copied().filter(|&w| !labeled[w]).collect();
            for &w in &segment {
                labeled[w] = true;
            }
            paths.push(LeaderRootedPath { nodes: stack.clone(), segment });
        }
        for &c in &self.children[v] {
            self.visit(c, stack, labeled, paths);
        }
        if v != self.leader {
            stack.pop();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TreeKind {
    Path,
    Star,
    RandomTree,
    Platoon,
}

impl std::str::FromStr for TreeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "path" => Ok(TreeKind::Path),
            "star" => Ok(TreeKind::Star),
            "random_tree" | "random-tree" => Ok(TreeKind::RandomTree),
            "platoon" => Ok(TreeKind::Platoon),
            other => Err(Error::InvalidGenerator(format!("unknown kind {other:?}"))),
        }
    }
}

/// Build a standard tree.
///
/// * `Path` / `Platoon`: nodes `0..n` on a line, `leader` is the leader's position.
/// * `Star`: node 0 is the hub; `leader` may be the hub or any leaf.
/// * `RandomTree`: uniform labeled tree from a seeded Prüfer sequence.
///
/// Directed mode orients every edge away from the leader, which is the only
/// orientation of a tree that keeps every follower reachable.
pub fn generate(kind: TreeKind, n: usize, leader: usize, mode: Mode, seed: Option<u64>) -> Result<LeaderNetwork> {
    if n < 2 {
        return Err(Error::InvalidGenerator(format!("need at least 2 nodes, got {n}")));
    }
    if leader >= n {
        return Err(Error::InvalidGenerator(format!("leader {leader} outside 0..{n}")));
    }
    let edges: Vec<(usize, usize)> = match kind {
        TreeKind::Path | TreeKind::Platoon => (0..n - 1).map(|k| (k, k + 1)).collect(),
        TreeKind::Star => (1..n).map(|k| (0, k)).collect(),
        TreeKind::RandomTree => {
            let seed = seed.ok_or_else(|| Error::InvalidGenerator("random trees need a seed".into()))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            random_tree_edges(n, &mut rng)
        }
    };
    tree_from_edges(n, &edges, leader, mode)
}

/// Wrap undirected tree edges as a network, orienting them away from the leader in directed mode.
pub fn tree_from_edges(n: usize, edges: &[(usize, usize)], leader: usize, mode: Mode) -> Result<LeaderNetwork> {
    let undirected = LeaderNetwork::new(n, edges, Mode::Undirected, leader)?;
    match mode {
        Mode::Undirected => Ok(undirected),
        Mode::Directed => {
            let tree = undirected.require_tree()?;
            let oriented: Vec<_> = edges
                .iter()
                .map(|&(u, v)| if tree.parent[v] == Some(u) { (u, v) } else { (v, u) })
                .collect();
            LeaderNetwork::new(n, &oriented, Mode::Directed, leader)
        }
    }
}

/// Edges of a uniformly random labeled tree on `n` nodes.
pub fn random_tree_edges<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => Vec::new(),
        2 => vec![(0, 1)],
        _ => {
            let code: Vec<usize> = (0..n - 2).map(|_| rng.gen_range(0..n)).collect();
            prufer_decode(&code)
        }
    }
}

/// Decode a Prüfer sequence of length `n - 2` into the `n - 1` tree edges.
pub fn prufer_decode(code: &[usize]) -> Vec<(usize, usize)> {
    let n = code.len() + 2;
    let mut degree = vec![1usize; n];
    for &c in code {
        degree[c] += 1;
    }
    let mut leaves: BTreeSet<usize> = (0..n).filter(|&v| degree[v] == 1).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &c in code {
        let leaf = leaves.pop_first().expect("a Prüfer code always leaves a leaf");
        edges.push((leaf, c));
        degree[c] -= 1;
        if degree[c] == 1 {
            leaves.insert(c);
        }
    }
    let last: Vec<usize> = leaves.into_iter().collect();
    edges.push((last[0], last[1]));
    edges
}

/// Caterpillar: a spine `0..spine` with `legs` pendant nodes on every spine node.
pub fn caterpillar_edges(spine: usize, legs: usize) -> Vec<(usize, usize)> {
    let mut edges: Vec<(usize, usize)> = (1..spine).map(|k| (k - 1, k)).collect();
    let mut next = spine;
    for s in 0..spine {
        for _ in 0..legs {
            edges.push((s, next));
            next += 1;
        }
    }
    edges
}

/// Followers sorted by leader distance, ties by node index.
pub fn topological_order(net: &LeaderNetwork) -> Result<Vec<usize>> {
    let tree = net.require_tree()?;
    let mut order = net.followers();
    order.sort_by_key(|&v| (tree.depth[v], v));
    Ok(order)
}

/// Leader distance of every node (leader itself at 0).
pub fn leader_depths(net: &LeaderNetwork) -> Result<Vec<usize>> {
    Ok(net.require_tree()?.depth)
}
