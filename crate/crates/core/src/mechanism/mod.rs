//! Diffusion auction mechanisms.
//!
//! Every mechanism is split in two phases. [`Mechanism::prepare`] does the
//! graph work (dominators, the trusted set, clusters, pruning), which does
//! not depend on bids. [`Prepared::price`] then runs the bid-dependent part
//! on a bid vector indexed like the market graph. Searches that vary only
//! bids on a fixed graph reuse one preparation.

mod idm;
mod nsp;
mod osm;
mod scm;
mod stm;
mod vcg;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::dominator::{dominator_tree, DominatorTree};
use crate::error::{Error, Result};
use crate::graph::{reachable_subgraph, ReachableGraph};
use crate::money::{Amount, Money};
use crate::profile::{ReportProfile, VertexId};
use crate::sybil::{compute_gamma, EdgePriority, GammaSet, ShortestPathTree};

pub use idm::idm_price;
pub use nsp::nsp_price;
pub use osm::OsmPrepared;
pub use scm::ScmPrepared;
pub use stm::{StmPrepared, RESERVE_AGENT};
pub use vcg::vcg_price;

/// How a broker's own bid is compared with her resale price.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TieRule {
    /// A broker keeps the item only when her bid strictly exceeds `q_j`.
    #[default]
    Strict,
    /// A broker keeps the item when her bid is at least `q_j`.
    Geq,
}

impl TieRule {
    pub fn keeps<T: Ord>(self, bid: &T, price: &T) -> bool {
        match self {
            TieRule::Strict => bid > price,
            TieRule::Geq => bid >= price,
        }
    }
}

impl FromStr for TieRule {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strict" => Ok(TieRule::Strict),
            "geq" => Ok(TieRule::Geq),
            _ => Err(Error::InvalidParameters(format!("unknown tie rule {s:?} (expected strict or geq)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismKind {
    Nsp,
    Vcg,
    Idm,
    Stm,
    StmReserve,
    Scm,
    Osm,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 7] = [
        MechanismKind::Nsp,
        MechanismKind::Vcg,
        MechanismKind::Idm,
        MechanismKind::Stm,
        MechanismKind::StmReserve,
        MechanismKind::Scm,
        MechanismKind::Osm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MechanismKind::Nsp => "nsp",
            MechanismKind::Vcg => "vcg",
            MechanismKind::Idm => "idm",
            MechanismKind::Stm => "stm",
            MechanismKind::StmReserve => "stm-reserve",
            MechanismKind::Scm => "scm",
            MechanismKind::Osm => "osm",
        }
    }

    /// Whether the mechanism promises a non-negative revenue.
    pub fn non_deficit(self) -> bool {
        !matches!(self, MechanismKind::Vcg | MechanismKind::Osm)
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameters(format!("unknown mechanism {s:?}")))
    }
}

/// A fully configured mechanism.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mechanism {
    /// Second-price auction among the seller's neighbors.
    Nsp,
    Vcg,
    Idm,
    Stm {
        tie: TieRule,
    },
    /// STM with a reserve price: an auxiliary bidder at `kappa` joins the
    /// seller's neighbors and, if it wins, the item stays unsold.
    StmReserve {
        kappa: Money,
        tie: TieRule,
    },
    /// SCM with the shortest-path tree drawn from `priority`.
    Scm {
        priority: EdgePriority,
        tie: TieRule,
    },
    /// IDM restricted to the trusted subgraph.
    Osm,
}

impl Mechanism {
    pub fn stm() -> Self {
        Mechanism::Stm { tie: TieRule::Strict }
    }

    pub fn scm(seed: u64) -> Self {
        Mechanism::Scm { priority: EdgePriority::Seeded(seed), tie: TieRule::Strict }
    }

    pub fn stm_reserve(kappa: Money) -> Self {
        Mechanism::StmReserve { kappa, tie: TieRule::Strict }
    }

    pub fn kind(&self) -> MechanismKind {
        match self {
            Mechanism::Nsp => MechanismKind::Nsp,
            Mechanism::Vcg => MechanismKind::Vcg,
            Mechanism::Idm => MechanismKind::Idm,
            Mechanism::Stm { .. } => MechanismKind::Stm,
            Mechanism::StmReserve { .. } => MechanismKind::StmReserve,
            Mechanism::Scm { .. } => MechanismKind::Scm,
            Mechanism::Osm => MechanismKind::Osm,
        }
    }

    /// Graph-only preparation. `conv` maps configured amounts (the reserve
    /// price) into the amount type used for pricing.
    pub fn prepare<T: Amount>(&self, g: &ReachableGraph, conv: impl Fn(&Money) -> T) -> Prepared<T> {
        match self {
            Mechanism::Nsp => Prepared::Nsp { neighbors: g.seller_neighbors().to_vec() },
            Mechanism::Vcg => Prepared::Vcg { dom: dominator_tree(g.graph(), 0) },
            Mechanism::Idm => Prepared::Idm { dom: dominator_tree(g.graph(), 0) },
            Mechanism::Stm { tie } => {
                let gamma = compute_gamma(g);
                Prepared::Stm { stm: StmPrepared::new(g.graph(), gamma.members(), *tie), gamma }
            }
            Mechanism::StmReserve { kappa, tie } => {
                let aug = g.with_auxiliary_neighbor(stm::reserve_id(g), kappa.clone());
                let gamma = compute_gamma(&aug);
                Prepared::StmReserve {
                    stm: StmPrepared::new(aug.graph(), gamma.members(), *tie),
                    gamma,
                    kappa: conv(kappa),
                    reserve_id: aug.id(aug.len() - 1).clone(),
                }
            }
            Mechanism::Scm { priority, tie } => {
                let scm = ScmPrepared::new(g);
                let tree = scm.tree(g, priority);
                let (stm, removed) = scm.stm_for_tree(g, &tree, *tie);
                Prepared::Scm { scm: Box::new(scm), tree, removed, stm }
            }
            Mechanism::Osm => Prepared::Osm(Box::new(OsmPrepared::new(g))),
        }
    }

    /// Runs the mechanism on a market graph with its reported bids.
    pub fn run_graph(&self, g: &ReachableGraph) -> Outcome {
        let prepared = self.prepare(g, Money::clone);
        let raw = prepared.price(g.bids());
        Outcome::from_raw(self.kind(), g, &prepared, raw)
    }

    /// Validates `profile`, restricts it to the seller-reachable part and
    /// runs the mechanism.
    pub fn run(&self, profile: &ReportProfile) -> Result<Outcome> {
        if let Mechanism::StmReserve { kappa, .. } = self {
            if kappa.is_negative() {
                return Err(Error::InvalidParameters(format!("reserve price {kappa} is negative")));
            }
        }
        let g = reachable_subgraph(profile)?;
        Ok(self.run_graph(&g))
    }
}

/// Bid-independent state of a mechanism on one market graph.
#[derive(Clone, Debug)]
pub enum Prepared<T> {
    Nsp { neighbors: Vec<usize> },
    Vcg { dom: DominatorTree },
    Idm { dom: DominatorTree },
    Stm { stm: StmPrepared, gamma: GammaSet },
    StmReserve { stm: StmPrepared, gamma: GammaSet, kappa: T, reserve_id: VertexId },
    Scm { scm: Box<ScmPrepared>, tree: ShortestPathTree, removed: Vec<(usize, usize)>, stm: StmPrepared },
    Osm(Box<OsmPrepared>),
}

impl<T: Amount> Prepared<T> {
    /// Runs the bid-dependent phase. `bids[0]` (the seller) is ignored.
    pub fn price(&self, bids: &[T]) -> RawOutcome<T> {
        match self {
            Prepared::Nsp { neighbors } => nsp_price(neighbors, bids),
            Prepared::Vcg { dom } => vcg_price(dom, bids),
            Prepared::Idm { dom } => idm_price(dom, bids),
            Prepared::Stm { stm, .. } => stm.price(bids),
            Prepared::StmReserve { stm, kappa, .. } => stm::price_with_reserve(stm, bids, kappa),
            Prepared::Scm { stm, .. } => stm.price(bids),
            Prepared::Osm(osm) => osm.price(bids),
        }
    }
}

/// One rung of a price ladder, by market index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawStep<T> {
    pub vertex: usize,
    pub p: T,
    /// Resale price; absent for STM's last rung.
    pub q: Option<T>,
}

/// Index-level mechanism result.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawOutcome<T> {
    pub winner: Option<usize>,
    /// Signed payment per market index; the seller's slot is zero.
    pub payments: Vec<T>,
    pub reserved: bool,
    /// Dominator-sequence ladder `c_1 … c_ℓ` for ladder mechanisms.
    pub ladder: Vec<RawStep<T>>,
}

impl<T: Amount> RawOutcome<T> {
    pub fn no_sale(n: usize) -> Self {
        RawOutcome { winner: None, payments: vec![T::zero(); n], reserved: false, ladder: Vec::new() }
    }

    pub fn revenue(&self) -> T {
        self.payments.iter().fold(T::zero(), |acc, p| acc.plus(p))
    }

    /// Winner's bid in `bids`, or zero.
    pub fn welfare(&self, bids: &[T]) -> T {
        self.winner.map(|w| bids[w].clone()).unwrap_or_else(T::zero)
    }

    /// Position of the winner on the ladder, 1-based, if she is on it.
    pub fn winner_rung(&self) -> Option<usize> {
        let w = self.winner?;
        self.ladder.iter().position(|s| s.vertex == w).map(|k| k + 1)
    }
}

/// One rung of a price ladder in an [`Outcome`] trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LadderStep {
    pub vertex: VertexId,
    pub p: Money,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<Money>,
    /// STM's `β_j`: trusted outsiders of the next rung whose subtrees count
    /// toward the resale price.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<VertexId>>,
    /// STM's `γ(c_j)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<VertexId>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LadderTrace {
    pub sequence: Vec<VertexId>,
    pub steps: Vec<LadderStep>,
    /// 1-based rung of the winner.
    pub winner_rung: Option<usize>,
}

/// Mechanism-specific diagnostics.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trace {
    Nsp {
        candidates: Vec<VertexId>,
    },
    Vcg {
        highest_bidder: Option<VertexId>,
    },
    Idm {
        ladder: LadderTrace,
    },
    Stm {
        gamma: Vec<VertexId>,
        ladder: LadderTrace,
    },
    StmReserve {
        reserve_agent: VertexId,
        kappa: Money,
        gamma: Vec<VertexId>,
        ladder: LadderTrace,
    },
    Scm {
        gamma: Vec<VertexId>,
        clusters: BTreeMap<VertexId, Vec<VertexId>>,
        /// Shortest-path tree of the cluster graph, child to parent.
        tree: BTreeMap<VertexId, VertexId>,
        removed_arcs: Vec<(VertexId, VertexId)>,
        ladder: LadderTrace,
    },
    Osm {
        gamma: Vec<VertexId>,
        subgraph: Vec<VertexId>,
        ladder: LadderTrace,
    },
}

/// The result of running a mechanism.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Outcome {
    pub mechanism: MechanismKind,
    pub winner: Option<VertexId>,
    /// Signed payment of every reachable buyer; negative means the buyer is
    /// paid.
    pub payments: BTreeMap<VertexId, Money>,
    pub revenue: Money,
    /// The winner's reported value; zero when nothing is sold.
    pub social_welfare: Money,
    pub reserved: bool,
    pub trace: Trace,
}

impl Outcome {
    pub fn from_raw(
        kind: MechanismKind,
        g: &ReachableGraph,
        prepared: &Prepared<Money>,
        raw: RawOutcome<Money>,
    ) -> Self {
        let name = |i: usize| g.id(i).clone();
        let names = |set: &FixedBitSet| set.ones().map(|i| g.id(i).clone()).collect::<Vec<_>>();
        let ladder = |with_stm: Option<&StmPrepared>, rename: &dyn Fn(usize) -> VertexId| LadderTrace {
            sequence: raw.ladder.iter().map(|s| rename(s.vertex)).collect(),
            steps: raw
                .ladder
                .iter()
                .enumerate()
                .map(|(k, s)| LadderStep {
                    vertex: rename(s.vertex),
                    p: s.p.clone(),
                    q: s.q.clone(),
                    beta: with_stm.and_then(|stm| {
                        raw.ladder.get(k + 1).map(|next| stm.beta_for(next.vertex).ones().map(rename).collect())
                    }),
                    gamma: with_stm.map(|stm| stm.gamma_of(s.vertex).ones().map(rename).collect()),
                })
                .collect(),
            winner_rung: raw.winner_rung(),
        };
        let trace = match prepared {
            Prepared::Nsp { neighbors } => Trace::Nsp { candidates: neighbors.iter().map(|&v| name(v)).collect() },
            Prepared::Vcg { .. } => {
                Trace::Vcg { highest_bidder: crate::graph::argmax_bid_where(g.bids(), |_| true).map(name) }
            }
            Prepared::Idm { .. } => Trace::Idm { ladder: ladder(None, &name) },
            Prepared::Stm { stm, gamma } => {
                Trace::Stm { gamma: names(gamma.members()), ladder: ladder(Some(stm), &name) }
            }
            Prepared::StmReserve { stm, gamma, kappa, reserve_id } => {
                let rename = |i: usize| if i < g.len() { name(i) } else { reserve_id.clone() };
                Trace::StmReserve {
                    reserve_agent: reserve_id.clone(),
                    kappa: kappa.clone(),
                    gamma: gamma.members().ones().map(rename).collect(),
                    ladder: ladder(Some(stm), &rename),
                }
            }
            Prepared::Scm { scm, tree, removed, stm } => Trace::Scm {
                gamma: names(scm.gamma().members()),
                clusters: scm
                    .clusters()
                    .clusters()
                    .iter()
                    .map(|(r, m)| (name(*r), m.iter().map(|&v| name(v)).collect()))
                    .collect(),
                tree: tree.parents().iter().map(|(c, p)| (name(*c), name(*p))).collect(),
                removed_arcs: removed.iter().map(|&(u, v)| (name(u), name(v))).collect(),
                ladder: ladder(Some(stm), &name),
            },
            Prepared::Osm(osm) => Trace::Osm {
                gamma: names(osm.gamma().members()),
                subgraph: osm.kept().iter().map(|&v| name(v)).collect(),
                ladder: ladder(None, &name),
            },
        };
        let revenue = raw.revenue();
        let social_welfare = raw.welfare(g.bids());
        let payments = g.buyers().map(|i| (name(i), raw.payments[i].clone())).collect();
        Outcome {
            mechanism: kind,
            winner: raw.winner.map(name),
            payments,
            revenue,
            social_welfare,
            reserved: raw.reserved,
            trace,
        }
    }

    pub fn payment(&self, id: &VertexId) -> Money {
        self.payments.get(id).cloned().unwrap_or_else(Money::zero)
    }

    /// Utility of `id` if her true value is `value`.
    pub fn utility(&self, id: &VertexId, value: &Money) -> Money {
        let gross = if self.winner.as_ref() == Some(id) { value.clone() } else { Money::zero() };
        gross - self.payment(id)
    }

    /// Social welfare measured with true values instead of reported bids.
    pub fn welfare_under(&self, truth: &ReportProfile) -> Money {
        self.winner.as_ref().and_then(|w| truth.bid(w).cloned()).unwrap_or_else(Money::zero)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("outcomes always serialize")
    }
}

/// The ladder both IDM and STM climb: `c_1 … c_ℓ` with `p_j` the highest
/// bid outside `α(c_j)`.
pub(crate) fn base_ladder<T: Amount>(dom: &DominatorTree, bids: &[T], top: usize) -> Vec<RawStep<T>> {
    let seq = dom.dominator_sequence(top);
    seq[1..]
        .iter()
        .map(|&c| RawStep { vertex: c, p: crate::graph::max_bid_where(bids, |i| !dom.dominates(c, i)), q: None })
        .collect()
}

/// Settles a ladder whose `q` values are filled in: the winner is the
/// first rung that keeps the item, brokers below her pay `p_j - q_j` and she
/// pays `p_d`.
pub(crate) fn settle<T: Amount>(
    n: usize,
    ladder: Vec<RawStep<T>>,
    keeps: impl Fn(usize, &RawStep<T>) -> bool,
) -> RawOutcome<T> {
    let mut payments = vec![T::zero(); n];
    let last = ladder.len() - 1;
    let d = (0..last).find(|&j| keeps(j, &ladder[j])).unwrap_or(last);
    for step in &ladder[..d] {
        payments[step.vertex] = step.p.minus(step.q.as_ref().expect("broker rungs carry a resale price"));
    }
    payments[ladder[d].vertex] = ladder[d].p.clone();
    RawOutcome { winner: Some(ladder[d].vertex), payments, reserved: false, ladder }
}
