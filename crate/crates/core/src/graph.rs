//! Directed graphs over dense vertex indices, the seller-reachable market
//! graph, bid maxima, and vertex-disjoint path queries.

use std::collections::{BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::money::{Amount, Money};
use crate::profile::{ReportProfile, VertexId};

/// A simple digraph on `0..n`. Arc lists are sorted and deduplicated;
/// self-loops are dropped on insertion since no mechanism can observe them.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DirectedGraph {
    succ: Vec<Vec<usize>>,
    pred: Vec<Vec<usize>>,
}

impl DirectedGraph {
    pub fn new(n: usize) -> Self {
        DirectedGraph { succ: vec![Vec::new(); n], pred: vec![Vec::new(); n] }
    }

    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = DirectedGraph::new(n);
        for (u, v) in arcs {
            g.add_arc(u, v);
        }
        g
    }

    pub fn len(&self) -> usize {
        self.succ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.succ.is_empty()
    }

    /// Appends an isolated vertex and returns its index.
    pub fn add_vertex(&mut self) -> usize {
        self.succ.push(Vec::new());
        self.pred.push(Vec::new());
        self.succ.len() - 1
    }

    /// Inserts `u -> v`; returns false for self-loops and duplicates.
    pub fn add_arc(&mut self, u: usize, v: usize) -> bool {
        if u == v {
            return false;
        }
        match self.succ[u].binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.succ[u].insert(pos, v);
                let ppos = self.pred[v].binary_search(&u).unwrap_err();
                self.pred[v].insert(ppos, u);
                true
            }
        }
    }

    pub fn remove_arc(&mut self, u: usize, v: usize) -> bool {
        match self.succ[u].binary_search(&v) {
            Ok(pos) => {
                self.succ[u].remove(pos);
                let ppos = self.pred[v].binary_search(&u).expect("pred index out of sync");
                self.pred[v].remove(ppos);
                true
            }
            Err(_) => false,
        }
    }

    pub fn has_arc(&self, u: usize, v: usize) -> bool {
        self.succ[u].binary_search(&v).is_ok()
    }

    pub fn succ(&self, u: usize) -> &[usize] {
        &self.succ[u]
    }

    pub fn pred(&self, v: usize) -> &[usize] {
        &self.pred[v]
    }

    pub fn arc_count(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    /// All arcs in `(tail, head)` lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.succ.iter().enumerate().flat_map(|(u, vs)| vs.iter().map(move |&v| (u, v)))
    }

    pub fn reachable_from(&self, root: usize) -> FixedBitSet {
        self.reachable_avoiding(root, |_| false)
    }

    /// Vertices reachable from `root` without entering a blocked vertex.
    /// The root itself is always included.
    pub fn reachable_avoiding(&self, root: usize, blocked: impl Fn(usize) -> bool) -> FixedBitSet {
        let mut seen = FixedBitSet::with_capacity(self.len());
        let mut queue = VecDeque::new();
        seen.insert(root);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            for &v in &self.succ[u] {
                if !seen.contains(v) && !blocked(v) {
                    seen.insert(v);
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// Breadth-first distances from `root`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, root: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[root] = Some(0);
        queue.push_back(root);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            for &v in &self.succ[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }
}

/// The market graph a mechanism sees: the seller-reachable part of a report
/// profile, indexed densely.
///
/// Index 0 is the seller. Buyers follow in ascending [`VertexId`] order, so
/// "lowest index" and "lowest id" coincide and tie-breaking works on
/// indices. The one exception is an auxiliary vertex appended with
/// [`ReachableGraph::with_auxiliary_neighbor`], which sits last and so loses
/// every tie. Arcs into the seller are dropped along with self-loops.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachableGraph {
    graph: DirectedGraph,
    ids: Vec<VertexId>,
    index: HashMap<VertexId, usize>,
    bids: Vec<Money>,
    gamma0: FixedBitSet,
    unreachable: Vec<VertexId>,
}

/// Builds `G_s` from a profile, validating it first.
pub fn reachable_subgraph(profile: &ReportProfile) -> Result<ReachableGraph> {
    profile.validate()?;
    ReachableGraph::from_validated(profile)
}

impl ReachableGraph {
    fn from_validated(profile: &ReportProfile) -> Result<Self> {
        let seller = &profile.seller;
        let mut reached: BTreeSet<&VertexId> = BTreeSet::new();
        let mut queue: VecDeque<&VertexId> = VecDeque::new();
        for v in &profile.seller_neighbors {
            if v != seller && reached.insert(v) {
                queue.push_back(v);
            }
        }
        while let Some(u) = queue.pop_front() {
            for v in &profile.reports[u].diffuse {
                if v != seller && reached.insert(v) {
                    queue.push_back(v);
                }
            }
        }

        let mut ids = Vec::with_capacity(reached.len() + 1);
        ids.push(seller.clone());
        ids.extend(reached.iter().map(|v| (*v).clone()));
        let index: HashMap<VertexId, usize> = ids.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();

        let mut graph = DirectedGraph::new(ids.len());
        for v in &profile.seller_neighbors {
            if v != seller {
                graph.add_arc(0, index[v]);
            }
        }
        let mut bids = vec![Money::zero(); ids.len()];
        for (i, id) in ids.iter().enumerate().skip(1) {
            let report = &profile.reports[id];
            bids[i] = report.bid.clone();
            for v in &report.diffuse {
                if v != seller {
                    graph.add_arc(i, index[v]);
                }
            }
        }

        let mut gamma0 = FixedBitSet::with_capacity(ids.len());
        for v in &profile.gamma0 {
            match index.get(v) {
                Some(&i) => gamma0.insert(i),
                None => log::warn!("dropping trusted vertex {v}: it is unknown or unreachable from the seller"),
            }
        }

        let unreachable = profile.reports.keys().filter(|v| !index.contains_key(*v)).cloned().collect();
        Ok(ReachableGraph { graph, ids, index, bids, gamma0, unreachable })
    }

    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    /// Number of vertices, seller included.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn buyer_count(&self) -> usize {
        self.ids.len() - 1
    }

    pub fn seller(&self) -> usize {
        0
    }

    pub fn buyers(&self) -> std::ops::Range<usize> {
        1..self.ids.len()
    }

    pub fn id(&self, i: usize) -> &VertexId {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn index_of(&self, id: &VertexId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn require_index(&self, id: &VertexId) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownVertex(id.clone()))
    }

    /// Reported bids by index; the seller's slot holds zero and is never read
    /// as a bid.
    pub fn bids(&self) -> &[Money] {
        &self.bids
    }

    pub fn bid(&self, i: usize) -> &Money {
        &self.bids[i]
    }

    pub fn set_bid(&mut self, i: usize, bid: Money) {
        assert!(i != 0, "the seller has no bid");
        self.bids[i] = bid;
    }

    pub fn seller_neighbors(&self) -> &[usize] {
        self.graph.succ(0)
    }

    /// Trusted vertices supplied with the profile that survived reachability.
    pub fn gamma0(&self) -> &FixedBitSet {
        &self.gamma0
    }

    /// Reported buyers that the seller cannot reach.
    pub fn unreachable(&self) -> &[VertexId] {
        &self.unreachable
    }

    /// Appends a seller neighbor with no outgoing arcs. It takes the last
    /// index regardless of its id.
    pub fn with_auxiliary_neighbor(&self, id: VertexId, bid: Money) -> ReachableGraph {
        assert!(!self.index.contains_key(&id), "auxiliary id {id} collides with a reported vertex");
        let mut out = self.clone();
        let v = out.graph.add_vertex();
        out.graph.add_arc(0, v);
        out.index.insert(id.clone(), v);
        out.ids.push(id);
        out.bids.push(bid);
        out.gamma0.grow(v + 1);
        out
    }

    /// Same vertex indexing with some arcs removed. Every vertex must still
    /// be reachable from the seller.
    pub fn with_arcs_removed(&self, removed: &[(usize, usize)]) -> ReachableGraph {
        let mut out = self.clone();
        for &(u, v) in removed {
            out.graph.remove_arc(u, v);
        }
        debug_assert_eq!(out.graph.reachable_from(0).count_ones(..), out.len());
        out
    }

    /// The seller-reachable part of the subgraph induced by `keep` (which
    /// must contain the seller), together with the map from new indices to
    /// indices of `self`.
    pub fn induced_reachable(&self, keep: &FixedBitSet) -> (ReachableGraph, Vec<usize>) {
        assert!(keep.contains(0), "the seller must be kept");
        let reach = self.graph.reachable_avoiding(0, |v| !keep.contains(v));
        let map: Vec<usize> = reach.ones().collect();
        let mut local = vec![usize::MAX; self.len()];
        for (new, &old) in map.iter().enumerate() {
            local[old] = new;
        }
        let mut graph = DirectedGraph::new(map.len());
        for (u, v) in self.graph.arcs() {
            if local[u] != usize::MAX && local[v] != usize::MAX {
                graph.add_arc(local[u], local[v]);
            }
        }
        let ids: Vec<VertexId> = map.iter().map(|&i| self.ids[i].clone()).collect();
        let index = ids.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let bids = map.iter().map(|&i| self.bids[i].clone()).collect();
        let mut gamma0 = FixedBitSet::with_capacity(map.len());
        for (new, &old) in map.iter().enumerate() {
            if self.gamma0.contains(old) {
                gamma0.insert(new);
            }
        }
        let mut unreachable = self.unreachable.clone();
        unreachable.extend(self.buyers().filter(|&i| local[i] == usize::MAX).map(|i| self.ids[i].clone()));
        unreachable.sort();
        (ReachableGraph { graph, ids, index, bids, gamma0, unreachable }, map)
    }

    /// Turns the reachable graph back into a report profile.
    pub fn to_profile(&self) -> ReportProfile {
        let mut p = ReportProfile::new(self.ids[0].clone())
            .with_seller_neighbors(self.graph.succ(0).iter().map(|&v| self.ids[v].clone()))
            .with_gamma0(self.gamma0.ones().map(|v| self.ids[v].clone()));
        for i in self.buyers() {
            p = p.with_report(
                self.ids[i].clone(),
                self.bids[i].clone(),
                self.graph.succ(i).iter().map(|&v| self.ids[v].clone()),
            );
        }
        p
    }

    pub fn vertex_set(&self, members: &FixedBitSet) -> BTreeSet<VertexId> {
        members.ones().map(|i| self.ids[i].clone()).collect()
    }
}

/// Highest bid among the buyers selected by `member`; zero when none is
/// selected. The seller (index 0) is never considered.
pub fn max_bid_where<T: Amount>(bids: &[T], member: impl Fn(usize) -> bool) -> T {
    let mut best: Option<&T> = None;
    for (i, b) in bids.iter().enumerate().skip(1) {
        if member(i) && best.is_none_or(|cur| b > cur) {
            best = Some(b);
        }
    }
    best.cloned().unwrap_or_else(T::zero)
}

/// Index of the highest bidder among the selected buyers, ties toward the
/// lowest index.
pub fn argmax_bid_where<T: Amount>(bids: &[T], member: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, b) in bids.iter().enumerate().skip(1) {
        if member(i) && best.is_none_or(|cur| *b > bids[cur]) {
            best = Some(i);
        }
    }
    best
}

/// Highest reported bid among `vs`. The seller and ids without a report are
/// skipped; returns zero for a bid-free set.
pub fn max_bid(profile: &ReportProfile, vs: &BTreeSet<VertexId>) -> Money {
    vs.iter().filter_map(|v| profile.bid(v)).max().cloned().unwrap_or_else(Money::zero)
}

/// True iff there are paths `x -> z` and `y -> z` whose only common vertex
/// is `z`. Neither endpoint may lie on the other path.
pub fn two_disjoint_paths(g: &DirectedGraph, x: usize, y: usize, z: usize) -> bool {
    assert!(x != y, "the two sources must differ");
    if x == z || y == z {
        // the source at the target contributes the trivial path
        let other = if x == z { y } else { x };
        return g.reachable_from(other).contains(z);
    }
    disjoint_paths_into(g, &[x, y], z, 2).0 >= 2
}

/// Maximum number (capped at `cap`) of paths into `z` that start at distinct
/// vertices of `sources` and share no vertex other than `z`. Also returns the
/// sources used by one such path family.
///
/// Unit vertex capacities on a split graph, augmented by breadth-first search.
pub fn disjoint_paths_into(g: &DirectedGraph, sources: &[usize], z: usize, cap: usize) -> (usize, Vec<usize>) {
    let mut net = SplitNetwork::new(g, sources, z);
    let mut flow = 0;
    while flow < cap && net.augment() {
        flow += 1;
    }
    (flow, net.used_sources())
}

struct SplitNetwork {
    head: Vec<usize>,
    cap: Vec<u8>,
    adj: Vec<Vec<usize>>,
    source: usize,
    sink: usize,
    source_edges: Vec<(usize, usize)>,
}

impl SplitNetwork {
    fn new(g: &DirectedGraph, sources: &[usize], z: usize) -> Self {
        let n = g.len();
        let nodes = 2 * n + 1;
        let mut net = SplitNetwork {
            head: Vec::with_capacity(4 * (n + g.arc_count() + sources.len())),
            cap: Vec::new(),
            adj: vec![Vec::new(); nodes],
            source: 2 * n,
            sink: 2 * z,
            source_edges: Vec::new(),
        };
        for v in 0..n {
            if v != z {
                net.edge(2 * v, 2 * v + 1);
            }
        }
        for (u, v) in g.arcs() {
            if u != z {
                net.edge(2 * u + 1, 2 * v);
            }
        }
        for &s in sources {
            if s != z {
                let e = net.edge(2 * n, 2 * s);
                net.source_edges.push((e, s));
            }
        }
        net
    }

    fn edge(&mut self, u: usize, v: usize) -> usize {
        let e = self.head.len();
        self.head.push(v);
        self.cap.push(1);
        self.adj[u].push(e);
        self.head.push(u);
        self.cap.push(0);
        self.adj[v].push(e + 1);
        e
    }

    fn augment(&mut self) -> bool {
        let mut via = vec![usize::MAX; self.adj.len()];
        let mut queue = VecDeque::new();
        queue.push_back(self.source);
        via[self.source] = usize::MAX - 1;
        while let Some(u) = queue.pop_front() {
            if u == self.sink {
                break;
            }
            for &e in &self.adj[u] {
                let v = self.head[e];
                if self.cap[e] > 0 && via[v] == usize::MAX {
                    via[v] = e;
                    queue.push_back(v);
                }
            }
        }
        if via[self.sink] == usize::MAX {
            return false;
        }
        let mut v = self.sink;
        while v != self.source {
            let e = via[v];
            self.cap[e] -= 1;
            self.cap[e ^ 1] += 1;
            v = self.head[e ^ 1];
        }
        true
    }

    fn used_sources(&self) -> Vec<usize> {
        self.source_edges.iter().filter(|(e, _)| self.cap[*e] == 0).map(|&(_, s)| s).collect()
    }
}
