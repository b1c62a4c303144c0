//! The Sybil tax mechanism and its reserve-price variant.

use fixedbitset::FixedBitSet;

use crate::dominator::{dominator_tree, DominatorTree};
use crate::graph::{argmax_bid_where, max_bid_where, DirectedGraph, ReachableGraph};
use crate::money::Amount;
use crate::profile::VertexId;

use super::{base_ladder, settle, RawOutcome, TieRule};

/// Preferred id of the auxiliary reserve bidder.
pub const RESERVE_AGENT: &str = "~reserve";

/// Picks an id for the reserve bidder that no reported vertex uses.
pub(crate) fn reserve_id(g: &ReachableGraph) -> VertexId {
    let mut id = RESERVE_AGENT.to_string();
    while g.index_of(&VertexId::new(id.clone())).is_some() {
        id.push('~');
    }
    VertexId::new(id)
}

/// Dominator tree, trusted set and the per-arc `β` sets of one graph.
#[derive(Clone, Debug)]
pub struct StmPrepared {
    dom: DominatorTree,
    gamma: FixedBitSet,
    /// `beta[v]` is `β_j` for the rung pair `(c_j, c_{j+1}) = (idom(v), v)`:
    /// the union of `α(y)` over trusted `y ≠ c_j` in `α(c_j) \ α(v)`. It only
    /// depends on that tree arc, so it is computed once per vertex.
    beta: Vec<FixedBitSet>,
    /// `ladders[v]`: dominator sequence of `v` without the seller.
    ladders: Vec<Vec<usize>>,
    tie: TieRule,
}

impl StmPrepared {
    /// `gamma` is the trusted set; under SCM it comes from the unpruned graph.
    pub fn new(graph: &DirectedGraph, gamma: &FixedBitSet, tie: TieRule) -> Self {
        let dom = dominator_tree(graph, 0);
        let n = graph.len();
        let alpha: Vec<FixedBitSet> = (0..n).map(|x| dom.dominated_set(x)).collect();
        let mut beta = vec![FixedBitSet::with_capacity(n); n];
        for (v, beta_v) in beta.iter_mut().enumerate().skip(1) {
            let u = dom.idom(v).unwrap();
            if u == 0 {
                continue;
            }
            for y in gamma.ones() {
                if y != u && dom.dominates(u, y) && !dom.dominates(v, y) {
                    beta_v.union_with(&alpha[y]);
                }
            }
        }
        let ladders = (0..n).map(|v| dom.dominator_sequence(v)[1..].to_vec()).collect();
        StmPrepared { dom, gamma: gamma.clone(), beta, ladders, tie }
    }

    pub fn dominators(&self) -> &DominatorTree {
        &self.dom
    }

    /// `β_j` for the rung whose successor is `next`.
    pub fn beta_for(&self, next: usize) -> &FixedBitSet {
        &self.beta[next]
    }

    /// `γ(x)`: union of `α(y)` over trusted `y ∈ α(x)`, `y ≠ x`.
    pub fn gamma_of(&self, x: usize) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(self.dom.len());
        for y in self.gamma.ones() {
            if y != x && self.dom.dominates(x, y) {
                out.union_with(&self.dom.dominated_set(y));
            }
        }
        out
    }

    /// Builds the ladder of the highest bidder with
    /// `q_j = M[(V \ α(c_j)) ∪ β_j]` and gives the item to the first broker
    /// that keeps it under the tie rule, else to the highest bidder.
    pub fn price<T: Amount>(&self, bids: &[T]) -> RawOutcome<T> {
        let Some(top) = argmax_bid_where(bids, |_| true) else {
            return RawOutcome::no_sale(bids.len());
        };
        let mut ladder = base_ladder(&self.dom, bids, top);
        for j in 0..ladder.len().saturating_sub(1) {
            let (c, next) = (ladder[j].vertex, ladder[j + 1].vertex);
            let beta = &self.beta[next];
            ladder[j].q = Some(max_bid_where(bids, |i| !self.dom.dominates(c, i) || beta.contains(i)));
        }
        let tie = self.tie;
        settle(bids.len(), ladder, |_, step| tie.keeps(&bids[step.vertex], step.q.as_ref().unwrap()))
    }
}

impl StmPrepared {
    /// Same allocation and payments as [`StmPrepared::price`] without
    /// building the ladder: writes every payment into `payments` (one slot
    /// per vertex) and returns the winner.
    pub fn settle_into(&self, bids: &[i128], payments: &mut [i128]) -> Option<usize> {
        payments.fill(0);
        let top = argmax_bid_where(bids, |_| true)?;
        let ladder = &self.ladders[top];
        let p = |c: usize| max_bid_where(bids, |i| !self.dom.dominates(c, i));
        let last = ladder.len() - 1;
        for j in 0..last {
            let (c, next) = (ladder[j], ladder[j + 1]);
            let beta = &self.beta[next];
            let q = max_bid_where(bids, |i| !self.dom.dominates(c, i) || beta.contains(i));
            if self.tie.keeps(&bids[c], &q) {
                payments[c] = p(c);
                return Some(c);
            }
            payments[c] = p(c) - q;
        }
        payments[top] = p(top);
        Some(top)
    }
}

/// STM on the graph extended by the reserve bidder (the last index of
/// `stm`'s graph) bidding `kappa`. A reserve win leaves the item unsold.
pub(crate) fn price_with_reserve<T: Amount>(stm: &StmPrepared, bids: &[T], kappa: &T) -> RawOutcome<T> {
    let mut aug = Vec::with_capacity(bids.len() + 1);
    aug.extend_from_slice(bids);
    aug.push(kappa.clone());
    let reserve = bids.len();
    let mut out = stm.price(&aug);
    if out.winner == Some(reserve) {
        let mut reserved = RawOutcome::no_sale(bids.len());
        reserved.reserved = true;
        reserved.ladder = out.ladder;
        return reserved;
    }
    debug_assert!(out.payments[reserve] == T::zero(), "the reserve bidder never brokers");
    out.payments.truncate(bids.len());
    out
}
