//! Diffusion auctions on social networks that resist Sybil attacks.
//!
//! A seller wants to sell one item. She only knows her direct neighbors, so
//! buyers are invited to forward the sale, and the mechanism has to reward
//! them for it without letting anyone profit from fake identities. The crate
//! provides:
//!
//! - the market model ([`ReportProfile`], [`ReachableGraph`]) and exact
//!   [`Money`];
//! - dominator trees and the Sybil analysis behind the trusted set Γ
//!   ([`dominator`], [`sybil`]);
//! - the mechanisms NSP, VCG, IDM, STM, STM with reserve, SCM and OSM
//!   ([`mechanism`]);
//! - brute-force attack search and incentive checks ([`adversary`]);
//! - Price's-model simulations with CSV output ([`experiment`]).
//!
//! ```
//! use sybilproof_core::{fixtures, Mechanism, Money};
//!
//! let outcome = Mechanism::stm().run(&fixtures::theta1()).unwrap();
//! assert_eq!(outcome.winner.unwrap().as_str(), "d");
//! assert_eq!(outcome.revenue, Money::from_integer(10));
//! ```

pub mod adversary;
pub mod corpus;
pub mod dominator;
pub mod error;
pub mod experiment;
pub mod fixtures;
pub mod graph;
pub mod mechanism;
pub mod money;
pub mod profile;
pub mod sybil;

pub use adversary::{
    apply_attack, attacker_utility, check_property, check_property_many, enumerate_attacks, AttackProfile,
    CheckOptions, CheckReport, DiffusionMode, Property, ScmFamily, StrategySpace, Subject, Verdict, ViolationReport,
};
pub use dominator::{dominator_tree, DominatorTree};
pub use error::{Error, Result};
pub use graph::{max_bid, reachable_subgraph, two_disjoint_paths, DirectedGraph, ReachableGraph};
pub use mechanism::{Mechanism, MechanismKind, Outcome, TieRule};
pub use money::Money;
pub use profile::{Report, ReportProfile, VertexId};
pub use sybil::{
    all_sp_trees, cluster_graph, compute_gamma, prune_graph, sample_sp_tree, sybil_clusters, ClusterGraph,
    EdgePriority, GammaSet, ShortestPathTree, SybilClusters,
};
