//! IDM run on the trusted subgraph only.
//!
//! Kept as a cautionary baseline: restricting the market to Γ lets a broker
//! hide a neighbor to shrink the trusted set and win cheaper.

use crate::dominator::{dominator_tree, DominatorTree};
use crate::graph::ReachableGraph;
use crate::money::Amount;
use crate::sybil::{compute_gamma, GammaSet};

use super::{idm_price, RawOutcome, RawStep};

#[derive(Clone, Debug)]
pub struct OsmPrepared {
    gamma: GammaSet,
    /// Market indices of the seller-reachable part of `G_s[Γ]`, ascending.
    kept: Vec<usize>,
    dom: DominatorTree,
}

impl OsmPrepared {
    pub fn new(g: &ReachableGraph) -> Self {
        let gamma = compute_gamma(g);
        let (sub, kept) = g.induced_reachable(gamma.members());
        let dom = dominator_tree(sub.graph(), 0);
        OsmPrepared { gamma, kept, dom }
    }

    pub fn gamma(&self) -> &GammaSet {
        &self.gamma
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn price<T: Amount>(&self, bids: &[T]) -> RawOutcome<T> {
        let local: Vec<T> = self.kept.iter().map(|&i| bids[i].clone()).collect();
        let inner = idm_price(&self.dom, &local);
        let mut out = RawOutcome::no_sale(bids.len());
        for (k, &i) in self.kept.iter().enumerate() {
            out.payments[i] = inner.payments[k].clone();
        }
        out.winner = inner.winner.map(|w| self.kept[w]);
        out.ladder =
            inner.ladder.into_iter().map(|s| RawStep { vertex: self.kept[s.vertex], p: s.p, q: s.q }).collect();
        out
    }
}
