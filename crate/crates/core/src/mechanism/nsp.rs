//! Second-price auction among the seller's direct neighbors.

use crate::graph::{argmax_bid_where, max_bid_where};
use crate::money::Amount;

use super::RawOutcome;

/// Highest neighbor wins (lowest index on ties) and pays the best other
/// neighbor bid, or zero without competition. Nobody else pays.
pub fn nsp_price<T: Amount>(neighbors: &[usize], bids: &[T]) -> RawOutcome<T> {
    let is_neighbor = |i: usize| neighbors.binary_search(&i).is_ok();
    let mut out = RawOutcome::no_sale(bids.len());
    if let Some(w) = argmax_bid_where(bids, is_neighbor) {
        out.payments[w] = max_bid_where(bids, |i| i != w && is_neighbor(i));
        out.winner = Some(w);
    }
    out
}
