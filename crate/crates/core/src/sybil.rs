//! Graph-theoretic Sybil analysis: the trusted set Γ, Sybil clusters, the
//! cluster graph, shortest-path-tree sampling and pruning.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::graph::{disjoint_paths_into, DirectedGraph, ReachableGraph};
use crate::profile::VertexId;

/// Why a vertex belongs to Γ.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Seller,
    SellerNeighbor,
    Trusted,
    /// Reached from `x` and `y` by two paths sharing only this vertex.
    MeetingPoint {
        x: usize,
        y: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaSet {
    members: FixedBitSet,
    provenance: Vec<Option<Provenance>>,
}

impl GammaSet {
    pub fn contains(&self, v: usize) -> bool {
        self.members.contains(v)
    }

    pub fn members(&self) -> &FixedBitSet {
        &self.members
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.ones()
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_clear()
    }

    pub fn provenance(&self, v: usize) -> Option<&Provenance> {
        self.provenance[v].as_ref()
    }
}

/// Least fixed point of the meeting-point closure started from the seller,
/// her neighbors and the trusted vertices of `g`.
///
/// A vertex `z ∉ Γ` is a meeting point of some pair in Γ exactly when the
/// unit-vertex-capacity flow from all of Γ into `z` is at least two, so each
/// candidate costs one flow computation instead of one per pair.
pub fn compute_gamma(g: &ReachableGraph) -> GammaSet {
    compute_gamma_on(g.graph(), g.gamma0())
}

/// [`compute_gamma`] on a bare graph rooted at vertex 0.
pub fn compute_gamma_on(graph: &DirectedGraph, gamma0: &FixedBitSet) -> GammaSet {
    let n = graph.len();
    let mut members = FixedBitSet::with_capacity(n);
    let mut provenance = vec![None; n];
    members.insert(0);
    provenance[0] = Some(Provenance::Seller);
    for &v in graph.succ(0) {
        members.insert(v);
        provenance[v] = Some(Provenance::SellerNeighbor);
    }
    for v in gamma0.ones() {
        if !members.contains(v) {
            members.insert(v);
            provenance[v] = Some(Provenance::Trusted);
        }
    }
    loop {
        let sources: Vec<usize> = members.ones().collect();
        let mut added = Vec::new();
        for z in 0..n {
            if members.contains(z) {
                continue;
            }
            let (flow, used) = disjoint_paths_into(graph, &sources, z, 2);
            if flow >= 2 {
                added.push((z, used[0], used[1]));
            }
        }
        if added.is_empty() {
            break;
        }
        for (z, x, y) in added {
            members.insert(z);
            provenance[z] = Some(Provenance::MeetingPoint { x, y });
        }
    }
    GammaSet { members, provenance }
}

/// Sybil clusters: each Γ member together with what it reaches without
/// passing another Γ member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SybilClusters {
    root_of: Vec<usize>,
    members: BTreeMap<usize, Vec<usize>>,
}

/// Partitions `V(G_s)` into Sybil clusters. Panics if two clusters overlap
/// or some vertex is left over, which the graph structure rules out.
pub fn sybil_clusters(g: &ReachableGraph, gamma: &GammaSet) -> SybilClusters {
    let n = g.len();
    let mut root_of = vec![usize::MAX; n];
    let mut members = BTreeMap::new();
    for r in gamma.iter() {
        let reach = g.graph().reachable_avoiding(r, |v| gamma.contains(v));
        let list: Vec<usize> = reach.ones().collect();
        for &v in &list {
            assert!(
                root_of[v] == usize::MAX,
                "vertex {} lies in the clusters of both {} and {}",
                g.id(v),
                g.id(root_of[v]),
                g.id(r)
            );
            root_of[v] = r;
        }
        members.insert(r, list);
    }
    if let Some(v) = root_of.iter().position(|&r| r == usize::MAX) {
        panic!("vertex {} is in no Sybil cluster", g.id(v));
    }
    SybilClusters { root_of, members }
}

impl SybilClusters {
    pub fn root_of(&self, v: usize) -> usize {
        self.root_of[v]
    }

    /// Cluster members keyed by root, members ascending.
    pub fn clusters(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.members
    }

    pub fn members(&self, root: usize) -> &[usize] {
        &self.members[&root]
    }
}

/// The graph `H` on Γ with an arc `x -> y` whenever some arc of `G_s` runs
/// from cluster `K_x` into cluster `K_y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterGraph {
    nodes: Vec<usize>,
    local: Vec<usize>,
    graph: DirectedGraph,
}

/// Builds `H`. Panics if an inter-cluster arc lands anywhere but on the
/// target cluster's root.
pub fn cluster_graph(g: &ReachableGraph, parts: &SybilClusters) -> ClusterGraph {
    let nodes: Vec<usize> = parts.members.keys().copied().collect();
    let mut local = vec![usize::MAX; g.len()];
    for (i, &v) in nodes.iter().enumerate() {
        local[v] = i;
    }
    let mut graph = DirectedGraph::new(nodes.len());
    for (u, v) in g.graph().arcs() {
        let (ru, rv) = (parts.root_of(u), parts.root_of(v));
        if ru != rv {
            assert_eq!(v, rv, "arc {} -> {} enters cluster {} away from its root", g.id(u), g.id(v), g.id(rv));
            graph.add_arc(local[ru], local[rv]);
        }
    }
    ClusterGraph { nodes, local, graph }
}

impl ClusterGraph {
    /// Γ members as indices of the underlying market graph; the seller
    /// comes first.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// Arcs as pairs of market-graph indices.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.graph.arcs().map(|(a, b)| (self.nodes[a], self.nodes[b])).collect()
    }

    pub fn has_arc(&self, x: usize, y: usize) -> bool {
        let (a, b) = (self.local[x], self.local[y]);
        a != usize::MAX && b != usize::MAX && self.graph.has_arc(a, b)
    }

    /// Breadth-first distances from the seller, by market index.
    pub fn distances(&self) -> BTreeMap<usize, usize> {
        let dist = self.graph.bfs_distances(0);
        self.nodes
            .iter()
            .zip(dist)
            .map(|(&v, d)| (v, d.expect("cluster graph vertex unreachable from the seller")))
            .collect()
    }

    /// Parent candidates for every non-seller node: the in-neighbors one
    /// step closer to the seller, ascending by market index.
    pub fn parent_candidates(&self) -> BTreeMap<usize, Vec<usize>> {
        let dist = self.graph.bfs_distances(0);
        let mut out = BTreeMap::new();
        for x in 1..self.nodes.len() {
            let dx = dist[x].expect("cluster graph vertex unreachable from the seller");
            let cands: Vec<usize> = self
                .graph
                .pred(x)
                .iter()
                .filter(|&&y| dist[y].is_some_and(|dy| dy + 1 == dx))
                .map(|&y| self.nodes[y])
                .collect();
            out.insert(self.nodes[x], cands);
        }
        out
    }
}

/// Deterministic priorities over (child, parent) pairs; the lowest-priority
/// candidate parent is chosen.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgePriority {
    /// Keyed hash of the ordered pair under a 64-bit seed.
    Seeded(u64),
    /// Explicit parent preference lists per child. A listed parent beats any
    /// unlisted one; unlisted pairs fall back to the seeded hash.
    Ranked { prefs: BTreeMap<VertexId, Vec<VertexId>>, fallback_seed: u64 },
}

/// Sortable priority value: lower is preferred. The trailing parent id
/// makes the order total even if two hashes collide.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PriorityKey(u8, u64, VertexId);

impl EdgePriority {
    /// Ranked priorities that make each `child` pick `parent` whenever it is
    /// a candidate.
    pub fn prefer<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Self {
        let mut prefs: BTreeMap<VertexId, Vec<VertexId>> = BTreeMap::new();
        for (child, parent) in pairs {
            prefs.entry(child.into()).or_default().push(parent.into());
        }
        EdgePriority::Ranked { prefs, fallback_seed: 0 }
    }

    pub fn key(&self, child: &VertexId, parent: &VertexId) -> PriorityKey {
        match self {
            EdgePriority::Seeded(seed) => PriorityKey(0, pair_hash(*seed, child, parent), parent.clone()),
            EdgePriority::Ranked { prefs, fallback_seed } => {
                match prefs.get(child).and_then(|list| list.iter().position(|p| p == parent)) {
                    Some(rank) => PriorityKey(0, rank as u64, parent.clone()),
                    None => PriorityKey(1, pair_hash(*fallback_seed, child, parent), parent.clone()),
                }
            }
        }
    }

    pub fn compare(&self, child: &VertexId, a: &VertexId, b: &VertexId) -> Ordering {
        self.key(child, a).cmp(&self.key(child, b))
    }
}

fn pair_hash(seed: u64, child: &VertexId, parent: &VertexId) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update((child.as_str().len() as u64).to_le_bytes());
    h.update(child.as_str().as_bytes());
    h.update(parent.as_str().as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().unwrap())
}

/// A shortest-path spanning tree of `H`, by market indices.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShortestPathTree {
    parent: BTreeMap<usize, usize>,
    dist: BTreeMap<usize, usize>,
}

impl ShortestPathTree {
    /// Builds a tree from explicit parent choices, checking it is a
    /// shortest-path tree of `h`.
    pub fn from_parents(h: &ClusterGraph, parent: BTreeMap<usize, usize>) -> Option<Self> {
        let dist = h.distances();
        let cands = h.parent_candidates();
        if parent.len() != cands.len() {
            return None;
        }
        for (x, p) in &parent {
            if !cands.get(x)?.contains(p) {
                return None;
            }
        }
        Some(ShortestPathTree { parent, dist })
    }

    pub fn parent(&self, x: usize) -> Option<usize> {
        self.parent.get(&x).copied()
    }

    pub fn parents(&self) -> &BTreeMap<usize, usize> {
        &self.parent
    }

    pub fn distance(&self, x: usize) -> Option<usize> {
        self.dist.get(&x).copied()
    }

    /// Distance from the seller following tree arcs only.
    pub fn tree_depth(&self, x: usize) -> usize {
        let mut d = 0;
        let mut v = x;
        while let Some(p) = self.parent(v) {
            v = p;
            d += 1;
        }
        d
    }
}

/// Samples a shortest-path tree: every non-seller node of `H` takes the
/// candidate parent with the lowest priority.
pub fn sample_sp_tree(g: &ReachableGraph, h: &ClusterGraph, prio: &EdgePriority) -> ShortestPathTree {
    sample_sp_tree_by(h, |child, a, b| prio.compare(g.id(child), g.id(a), g.id(b)))
}

/// [`sample_sp_tree`] with the priority comparison given directly on market
/// indices.
pub fn sample_sp_tree_by(
    h: &ClusterGraph,
    mut compare: impl FnMut(usize, usize, usize) -> Ordering,
) -> ShortestPathTree {
    let dist = h.distances();
    let mut parent = BTreeMap::new();
    for (x, cands) in h.parent_candidates() {
        let best = cands
            .iter()
            .copied()
            .reduce(|a, b| if compare(x, b, a) == Ordering::Less { b } else { a })
            .expect("every non-seller vertex of H has a parent candidate");
        parent.insert(x, best);
    }
    ShortestPathTree { parent, dist }
}

/// Every shortest-path tree of `H`, in lexicographic order of parent
/// choices.
pub fn all_sp_trees(h: &ClusterGraph) -> Vec<ShortestPathTree> {
    let dist = h.distances();
    let cands: Vec<(usize, Vec<usize>)> = h.parent_candidates().into_iter().collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; cands.len()];
    loop {
        let parent = cands.iter().zip(&pick).map(|((x, c), &k)| (*x, c[k])).collect();
        out.push(ShortestPathTree { parent, dist: dist.clone() });
        let mut i = 0;
        loop {
            if i == pick.len() {
                return out;
            }
            pick[i] += 1;
            if pick[i] < cands[i].1.len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Removes every inter-cluster arc whose cluster pair is not a tree arc.
/// Returns the pruned graph and the removed arcs.
pub fn prune_graph(
    g: &ReachableGraph,
    parts: &SybilClusters,
    tree: &ShortestPathTree,
) -> (ReachableGraph, Vec<(usize, usize)>) {
    let removed: Vec<(usize, usize)> = g
        .graph()
        .arcs()
        .filter(|&(u, v)| {
            let (x, y) = (parts.root_of(u), parts.root_of(v));
            x != y && tree.parent(y) != Some(x)
        })
        .collect();
    (g.with_arcs_removed(&removed), removed)
}
