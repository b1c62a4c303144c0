//! VCG on the visible market graph.

use crate::dominator::DominatorTree;
use crate::graph::{argmax_bid_where, max_bid_where};
use crate::money::Amount;

use super::RawOutcome;

/// The highest bidder `x*` wins and pays the best bid outside `α(x*)`.
/// Every other buyer `x` pays `M[V \ α(x)] - M[V]`, a reward equal to the
/// welfare lost without her; that is zero unless she dominates `x*`.
pub fn vcg_price<T: Amount>(dom: &DominatorTree, bids: &[T]) -> RawOutcome<T> {
    let mut out = RawOutcome::no_sale(bids.len());
    let Some(top) = argmax_bid_where(bids, |_| true) else {
        return out;
    };
    let best = bids[top].clone();
    for x in 1..bids.len() {
        let outside = max_bid_where(bids, |i| !dom.dominates(x, i));
        out.payments[x] = if x == top { outside } else { outside.minus(&best) };
    }
    out.winner = Some(top);
    out
}
