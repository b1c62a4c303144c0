//! The information diffusion mechanism.

use crate::dominator::DominatorTree;
use crate::graph::{argmax_bid_where, max_bid_where};
use crate::money::Amount;

use super::{base_ladder, settle, RawOutcome};

/// Climbs the dominator sequence of the highest bidder with `q_j = p_{j+1}`
/// and `q_ℓ = M[V]`; the first `c_d` with bid at least `q_d` wins.
pub fn idm_price<T: Amount>(dom: &DominatorTree, bids: &[T]) -> RawOutcome<T> {
    let Some(top) = argmax_bid_where(bids, |_| true) else {
        return RawOutcome::no_sale(bids.len());
    };
    let mut ladder = base_ladder(dom, bids, top);
    for j in 0..ladder.len() {
        let q = match ladder.get(j + 1) {
            Some(next) => next.p.clone(),
            None => max_bid_where(bids, |_| true),
        };
        ladder[j].q = Some(q);
    }
    settle(bids.len(), ladder, |_, step| bids[step.vertex] >= *step.q.as_ref().unwrap())
}
