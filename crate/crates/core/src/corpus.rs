//! Instance generators for exhaustive and randomized checking.

use rand::Rng;

use crate::money::Money;
use crate::profile::{ReportProfile, VertexId};

/// Buyer names `a`, `b`, … for small generated instances.
pub fn buyer_name(i: usize) -> VertexId {
    assert!(i < 26, "generated instances have at most 26 buyers");
    VertexId::new(((b'a' + i as u8) as char).to_string())
}

/// Arc sets of every digraph on `n` vertices (vertex 0 the seller) with no
/// arcs into the seller and every vertex reachable from it.
pub fn seller_rooted_digraphs(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!((1..=6).contains(&n), "exhaustive enumeration supports 1..=6 vertices");
    let slots: Vec<(usize, usize)> =
        (0..n).flat_map(|u| (1..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << slots.len()) {
        let arcs: Vec<(usize, usize)> =
            slots.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &a)| a).collect();
        if all_reachable(n, &arcs) {
            out.push(arcs);
        }
    }
    out
}

fn all_reachable(n: usize, arcs: &[(usize, usize)]) -> bool {
    let mut seen = vec![false; n];
    seen[0] = true;
    let mut stack = vec![0];
    while let Some(u) = stack.pop() {
        for &(a, b) in arcs {
            if a == u && !seen[b] {
                seen[b] = true;
                stack.push(b);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

/// Builds a profile on vertices `s, a, b, …` from index arcs and buyer bids.
pub fn profile_from_arcs(n: usize, arcs: &[(usize, usize)], bids: &[Money]) -> ReportProfile {
    assert_eq!(bids.len(), n - 1);
    let name = |v: usize| if v == 0 { VertexId::from("s") } else { buyer_name(v - 1) };
    let mut p =
        ReportProfile::new("s").with_seller_neighbors(arcs.iter().filter(|(u, _)| *u == 0).map(|&(_, v)| name(v)));
    for v in 1..n {
        p = p.with_report(name(v), bids[v - 1].clone(), arcs.iter().filter(|(u, _)| *u == v).map(|&(_, w)| name(w)));
    }
    p
}

/// Every seller-rooted digraph with `2..=n_max` vertices under every
/// assignment of bids from `bids`.
pub fn exhaustive_profiles(n_max: usize, bids: &[Money]) -> impl Iterator<Item = ReportProfile> + '_ {
    (2..=n_max).flat_map(move |n| {
        seller_rooted_digraphs(n).into_iter().flat_map(move |arcs| {
            let buyers = n - 1;
            let total = bids.len().pow(buyers as u32);
            (0..total).map(move |mut code| {
                let mut assignment = Vec::with_capacity(buyers);
                for _ in 0..buyers {
                    assignment.push(bids[code % bids.len()].clone());
                    code /= bids.len();
                }
                profile_from_arcs(n, &arcs, &assignment)
            })
        })
    })
}

/// A random profile on `n` vertices: each possible arc present with
/// probability `arc_prob`, bids uniform in `0..=max_bid`. Some buyers may be
/// unreachable.
pub fn random_profile(rng: &mut impl Rng, n: usize, arc_prob: f64, max_bid: i64) -> ReportProfile {
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 1..n {
            if u != v && rng.random_bool(arc_prob) {
                arcs.push((u, v));
            }
        }
    }
    let bids: Vec<Money> = (1..n).map(|_| Money::from_integer(rng.random_range(0..=max_bid))).collect();
    profile_from_arcs(n, &arcs, &bids)
}

#[cfg(test)]
pub(crate) fn arb_profile(max_n: usize) -> impl proptest::strategy::Strategy<Value = ReportProfile> {
    use proptest::prelude::*;
    (2..=max_n).prop_flat_map(|n| {
        (
            proptest::collection::vec(any::<bool>(), n * n),
            proptest::collection::vec(0i64..=5, n - 1),
            proptest::collection::vec(proptest::bool::weighted(0.15), n),
        )
            .prop_map(move |(bits, bids, trusted)| {
                // arcs into the seller and self-loops are generated on purpose
                let name = |v: usize| if v == 0 { VertexId::from("s") } else { buyer_name(v - 1) };
                let mut p = ReportProfile::new("s");
                for v in 1..n {
                    if bits[v] {
                        p.seller_neighbors.insert(name(v));
                    }
                    let diffuse: Vec<VertexId> = (0..n).filter(|&w| bits[v * n + w]).map(name).collect();
                    p = p.with_report(name(v), Money::from_integer(bids[v - 1]), diffuse);
                }
                p.gamma0 = (0..n).filter(|&v| trusted[v]).map(name).collect();
                p
            })
    })
}
