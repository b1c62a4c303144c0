//! The Sybil cluster mechanism.

use std::collections::BTreeMap;

use crate::graph::ReachableGraph;
use crate::sybil::{
    cluster_graph, compute_gamma, prune_graph, sample_sp_tree, sybil_clusters, ClusterGraph, EdgePriority, GammaSet,
    ShortestPathTree, SybilClusters,
};

use super::{StmPrepared, TieRule};

/// Trusted set, clusters and cluster graph of the unpruned market graph.
/// Each shortest-path tree then yields its own pruned graph for STM.
#[derive(Clone, Debug)]
pub struct ScmPrepared {
    gamma: GammaSet,
    clusters: SybilClusters,
    h: ClusterGraph,
    candidates: BTreeMap<usize, Vec<usize>>,
}

impl ScmPrepared {
    pub fn new(g: &ReachableGraph) -> Self {
        let gamma = compute_gamma(g);
        let clusters = sybil_clusters(g, &gamma);
        let h = cluster_graph(g, &clusters);
        let candidates = h.parent_candidates();
        ScmPrepared { gamma, clusters, h, candidates }
    }

    pub fn gamma(&self) -> &GammaSet {
        &self.gamma
    }

    pub fn clusters(&self) -> &SybilClusters {
        &self.clusters
    }

    pub fn cluster_graph(&self) -> &ClusterGraph {
        &self.h
    }

    /// Parent candidates of every non-seller Γ member.
    pub fn candidates(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.candidates
    }

    pub fn tree(&self, g: &ReachableGraph, priority: &EdgePriority) -> ShortestPathTree {
        sample_sp_tree(g, &self.h, priority)
    }

    /// Prunes `g` to `tree` and prepares STM on the result with the
    /// original Γ. Also returns the removed arcs.
    pub fn stm_for_tree(
        &self,
        g: &ReachableGraph,
        tree: &ShortestPathTree,
        tie: TieRule,
    ) -> (StmPrepared, Vec<(usize, usize)>) {
        let (pruned, removed) = prune_graph(g, &self.clusters, tree);
        (StmPrepared::new(pruned.graph(), self.gamma.members(), tie), removed)
    }
}
