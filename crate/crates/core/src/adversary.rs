//! Sybil attacks, strategic misreports and brute-force incentive checks.
//!
//! An attack replaces the attacker's report by reports of several
//! identities: herself plus `k` fresh Sybils. Every identity may bid any
//! grid value and diffuse to any subset of the attacker's true neighbors and
//! the other identities. Sybils have no inbound arcs from real agents, so
//! they can only be reached through the attacker.
//!
//! The search enumerates attacks wiring by wiring. All graph work of a
//! mechanism depends only on the wiring, so it is prepared once per wiring
//! and then priced for every bid assignment. Prices are computed on
//! integers after scaling every amount in play by a common denominator,
//! which keeps the arithmetic exact.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{reachable_subgraph, ReachableGraph};
use crate::mechanism::{Mechanism, MechanismKind, Prepared, RawOutcome, ScmPrepared, StmPrepared, TieRule};
use crate::money::{scale_to_integers, Money};
use crate::profile::{Report, ReportProfile, VertexId};
use crate::sybil::{EdgePriority, ShortestPathTree};

/// Which diffusion sets the identities may report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionMode {
    /// Every admissible subset.
    #[default]
    All,
    /// Each identity diffuses to every target it may use.
    Full,
}

impl FromStr for DiffusionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(DiffusionMode::All),
            "full" => Ok(DiffusionMode::Full),
            _ => Err(Error::InvalidParameters(format!("unknown diffusion mode {s:?} (expected all or full)"))),
        }
    }
}

/// The finite strategy space searched for each attacker.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrategySpace {
    /// Sorted, deduplicated, non-negative.
    pub bid_grid: Vec<Money>,
    pub max_identities: usize,
    pub diffusion: DiffusionMode,
}

impl StrategySpace {
    pub fn new(grid: impl IntoIterator<Item = Money>, max_identities: usize, diffusion: DiffusionMode) -> Result<Self> {
        let grid: BTreeSet<Money> = grid.into_iter().collect();
        if grid.is_empty() {
            return Err(Error::InvalidParameters("the bid grid is empty".into()));
        }
        if let Some(neg) = grid.iter().find(|b| b.is_negative()) {
            return Err(Error::InvalidParameters(format!("grid bid {neg} is negative")));
        }
        Ok(StrategySpace { bid_grid: grid.into_iter().collect(), max_identities, diffusion })
    }

    /// The default grid: every bid in the profile, each one plus and minus
    /// one, and zero.
    pub fn auto(truth: &ReportProfile, max_identities: usize, diffusion: DiffusionMode) -> Self {
        StrategySpace::new(auto_grid(truth), max_identities, diffusion).expect("the auto grid holds zero")
    }

    /// Same space without Sybils.
    pub fn without_sybils(&self) -> Self {
        StrategySpace { max_identities: 0, ..self.clone() }
    }
}

pub fn auto_grid(truth: &ReportProfile) -> BTreeSet<Money> {
    let one = Money::from_integer(1);
    let mut grid = BTreeSet::from([Money::zero()]);
    for r in truth.reports.values() {
        grid.insert(r.bid.clone());
        grid.insert(&r.bid + &one);
        let below = &r.bid - &one;
        if !below.is_negative() {
            grid.insert(below);
        }
    }
    grid
}

/// Parses `auto` or a comma-separated list of decimal bids.
pub fn parse_bid_grid(text: &str, truth: &ReportProfile) -> Result<Vec<Money>> {
    if text.trim() == "auto" {
        return Ok(auto_grid(truth).into_iter().collect());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct IdentityReport {
    pub id: VertexId,
    pub bid: Money,
    pub diffuse: BTreeSet<VertexId>,
}

/// A Sybil attack (or, with no Sybils, a plain misreport). The first
/// identity is the attacker herself.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct AttackProfile {
    pub attacker: VertexId,
    pub identities: Vec<IdentityReport>,
}

impl AttackProfile {
    pub fn sybil_count(&self) -> usize {
        self.identities.len() - 1
    }

    pub fn identity_ids(&self) -> impl Iterator<Item = &VertexId> {
        self.identities.iter().map(|r| &r.id)
    }

    /// The attacker reporting her true type.
    pub fn truthful(truth: &ReportProfile, attacker: &VertexId) -> Result<Self> {
        let report = truth.reports.get(attacker).ok_or_else(|| Error::UnknownVertex(attacker.clone()))?;
        Ok(AttackProfile {
            attacker: attacker.clone(),
            identities: vec![IdentityReport {
                id: attacker.clone(),
                bid: report.bid.clone(),
                diffuse: report.diffuse.clone(),
            }],
        })
    }
}

/// The `j`-th Sybil name of `attacker`, avoiding ids already in `truth`.
pub fn sybil_id(truth: &ReportProfile, attacker: &VertexId, j: usize) -> VertexId {
    let mut id = format!("{attacker}#{j}");
    while truth.reports.contains_key(&VertexId::new(id.clone())) || truth.seller.as_str() == id {
        id.push('#');
    }
    VertexId::new(id)
}

/// The report profile after `attack`; every other report is unchanged.
pub fn apply_attack(truth: &ReportProfile, attack: &AttackProfile) -> Result<ReportProfile> {
    let attacker = &attack.attacker;
    let true_report = truth.reports.get(attacker).ok_or_else(|| Error::UnknownVertex(attacker.clone()))?;
    let first = attack.identities.first().ok_or_else(|| Error::InvalidAttack("no identities".into()))?;
    if &first.id != attacker {
        return Err(Error::InvalidAttack(format!("the first identity must be the attacker {attacker}")));
    }
    let phi: BTreeSet<&VertexId> = attack.identity_ids().collect();
    if phi.len() != attack.identities.len() {
        return Err(Error::InvalidAttack("identity ids repeat".into()));
    }
    for sybil in &attack.identities[1..] {
        if truth.reports.contains_key(&sybil.id) || sybil.id == truth.seller {
            return Err(Error::InvalidAttack(format!("Sybil id {} is already taken", sybil.id)));
        }
    }
    let mut out = truth.clone();
    for ident in &attack.identities {
        if ident.bid.is_negative() {
            return Err(Error::NegativeBid { id: ident.id.clone(), bid: ident.bid.to_string() });
        }
        for to in &ident.diffuse {
            if !phi.contains(to) && !true_report.diffuse.contains(to) {
                return Err(Error::InfeasibleArc {
                    attacker: attacker.clone(),
                    from: ident.id.clone(),
                    to: to.clone(),
                });
            }
        }
        out.reports.insert(ident.id.clone(), Report { bid: ident.bid.clone(), diffuse: ident.diffuse.clone() });
    }
    Ok(out)
}

/// Aggregate utility of all identities: the attacker's true value if one
/// of them wins, minus everything they pay.
pub fn attacker_utility(mech: &Mechanism, truth: &ReportProfile, attack: &AttackProfile) -> Result<Money> {
    let value = truth.bid(&attack.attacker).ok_or_else(|| Error::UnknownVertex(attack.attacker.clone()))?;
    let outcome = mech.run(&apply_attack(truth, attack)?)?;
    let mut u = Money::zero();
    for id in attack.identity_ids() {
        if outcome.winner.as_ref() == Some(id) {
            u += value;
        }
        u -= &outcome.payment(id);
    }
    Ok(u)
}

/// Identity wirings as bit masks over the target list
/// `[true neighbors…, attacker, sybil 1, …, sybil k]`.
#[derive(Clone, Debug)]
struct Wiring {
    masks: Vec<u32>,
    /// Sybil relabelings that map the wiring onto itself; bids are only
    /// emitted in their canonical order under these.
    stabilizer: Vec<Vec<usize>>,
}

/// Every Sybil permutation of `1..=k` as a map `old label -> new label`
/// (index 0 is the attacker and is fixed).
fn sybil_permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(rest: &mut Vec<usize>, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            let mut p = vec![0];
            p.extend_from_slice(cur);
            out.push(p);
            return;
        }
        for i in 0..rest.len() {
            let v = rest.remove(i);
            cur.push(v);
            go(rest, cur, out);
            cur.pop();
            rest.insert(i, v);
        }
    }
    let mut out = Vec::new();
    go(&mut (1..=k).collect(), &mut Vec::new(), &mut out);
    out
}

fn permute_masks(masks: &[u32], r: usize, perm: &[usize]) -> Vec<u32> {
    let mut out = vec![0u32; masks.len()];
    for (j, &m) in masks.iter().enumerate() {
        let mut nm = m & ((1u32 << r) - 1);
        for (t, &pt) in perm.iter().enumerate().take(masks.len()) {
            if m >> (r + t) & 1 == 1 {
                nm |= 1 << (r + pt);
            }
        }
        out[perm[j]] = nm;
    }
    out
}

/// Canonical admissible wirings of `k` Sybils over `r` true neighbors.
fn wirings(r: usize, k: usize, mode: DiffusionMode) -> Vec<Wiring> {
    let width = r + k + 1;
    assert!(width <= 16, "too many attack targets");
    let perms = sybil_permutations(k);
    let choices: Vec<Vec<u32>> = (0..=k)
        .map(|j| {
            let allowed = ((1u32 << width) - 1) & !(1 << (r + j));
            match mode {
                DiffusionMode::Full => vec![allowed],
                DiffusionMode::All => (0..1u32 << width).filter(|m| m & !allowed == 0).collect(),
            }
        })
        .collect();
    let mut out = Vec::new();
    let mut pick = vec![0usize; k + 1];
    loop {
        let masks: Vec<u32> = pick.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
        if admissible(&masks, r) {
            let mut minimal = true;
            let mut stabilizer = Vec::new();
            for p in &perms {
                let pm = permute_masks(&masks, r, p);
                match pm.cmp(&masks) {
                    std::cmp::Ordering::Less => {
                        minimal = false;
                        break;
                    }
                    std::cmp::Ordering::Equal => stabilizer.push(p.clone()),
                    std::cmp::Ordering::Greater => {}
                }
            }
            if minimal {
                out.push(Wiring { masks, stabilizer });
            }
        }
        let mut i = 0;
        loop {
            if i > k {
                return out;
            }
            pick[i] += 1;
            if pick[i] < choices[i].len() {
                break;
            }
            pick[i] = 0;
            i += 1;
        }
    }
}

/// Every Sybil must be reachable from the attacker through identity arcs.
fn admissible(masks: &[u32], r: usize) -> bool {
    let k = masks.len() - 1;
    let mut seen = 1u32;
    let mut stack = vec![0usize];
    while let Some(j) = stack.pop() {
        for t in 1..=k {
            if masks[j] >> (r + t) & 1 == 1 && seen >> t & 1 == 0 {
                seen |= 1 << t;
                stack.push(t);
            }
        }
    }
    seen == (1u32 << (k + 1)) - 1
}

/// Bid assignments (grid indices, one per identity) in canonical order for
/// the wiring's stabilizer.
fn canonical_bids(bids: &[usize], stabilizer: &[Vec<usize>]) -> bool {
    stabilizer.iter().all(|p| {
        let mut permuted = vec![0usize; bids.len()];
        for (j, &b) in bids.iter().enumerate() {
            permuted[p[j]] = b;
        }
        bids <= permuted.as_slice()
    })
}

/// Attack targets of one attacker: her true neighbors (the seller excluded,
/// as arcs into the seller are inert) and her identity names.
struct Targets {
    neighbors: Vec<VertexId>,
    identities: Vec<VertexId>,
}

impl Targets {
    fn new(truth: &ReportProfile, attacker: &VertexId, k: usize) -> Self {
        let neighbors: Vec<VertexId> =
            truth.reports[attacker].diffuse.iter().filter(|v| **v != truth.seller && *v != attacker).cloned().collect();
        let mut identities = vec![attacker.clone()];
        identities.extend((1..=k).map(|j| sybil_id(truth, attacker, j)));
        Targets { neighbors, identities }
    }

    fn target(&self, t: usize) -> &VertexId {
        let r = self.neighbors.len();
        if t < r {
            &self.neighbors[t]
        } else {
            &self.identities[t - r]
        }
    }

    fn diffuse(&self, mask: u32) -> BTreeSet<VertexId> {
        (0..self.neighbors.len() + self.identities.len())
            .filter(|t| mask >> t & 1 == 1)
            .map(|t| self.target(t).clone())
            .collect()
    }

    fn attack(&self, attacker: &VertexId, masks: &[u32], bids: &[Money]) -> AttackProfile {
        AttackProfile {
            attacker: attacker.clone(),
            identities: masks
                .iter()
                .zip(bids)
                .enumerate()
                .map(|(j, (&m, b))| IdentityReport {
                    id: self.identities[j].clone(),
                    bid: b.clone(),
                    diffuse: self.diffuse(m),
                })
                .collect(),
        }
    }
}

fn for_each_assignment(g: usize, slots: usize, mut f: impl FnMut(&[usize]) -> bool) {
    let mut cur = vec![0usize; slots];
    loop {
        if !f(&cur) {
            return;
        }
        let mut i = slots;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            cur[i] += 1;
            if cur[i] < g {
                break;
            }
            cur[i] = 0;
        }
    }
}

/// Every attack in `space`, once per Sybil relabeling class, with Sybil
/// counts ascending, then wirings, then bids.
pub fn enumerate_attacks(
    truth: &ReportProfile,
    attacker: &VertexId,
    space: &StrategySpace,
) -> Result<Vec<AttackProfile>> {
    if !truth.reports.contains_key(attacker) {
        return Err(Error::UnknownVertex(attacker.clone()));
    }
    let mut out = Vec::new();
    for k in 0..=space.max_identities {
        let targets = Targets::new(truth, attacker, k);
        for w in wirings(targets.neighbors.len(), k, space.diffusion) {
            for_each_assignment(space.bid_grid.len(), k + 1, |bids| {
                if canonical_bids(bids, &w.stabilizer) {
                    let b: Vec<Money> = bids.iter().map(|&i| space.bid_grid[i].clone()).collect();
                    out.push(targets.attack(attacker, &w.masks, &b));
                }
                true
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    /// Truthful buyers never lose.
    Ir,
    /// No single-identity misreport gains.
    Ic,
    /// No Sybil attack gains.
    Sp,
    /// Truthful revenue is never negative.
    NonDeficit,
}

impl Property {
    pub const ALL: [Property; 4] = [Property::Ir, Property::Ic, Property::Sp, Property::NonDeficit];

    pub fn name(self) -> &'static str {
        match self {
            Property::Ir => "IR",
            Property::Ic => "IC",
            Property::Sp => "SP",
            Property::NonDeficit => "NON_DEFICIT",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ir" => Ok(Property::Ir),
            "ic" => Ok(Property::Ic),
            "sp" => Ok(Property::Sp),
            "non_deficit" | "nd" => Ok(Property::NonDeficit),
            _ => Err(Error::InvalidParameters(format!("unknown property {s:?}"))),
        }
    }
}

/// The deterministic SCM variants an SCM check quantifies over. Member `f`
/// fixes, for every buyer, a preference order over the other buyers as
/// shortest-path-tree parents. The seller is never compared with a buyer:
/// a vertex with the seller as candidate parent sits at distance one, and
/// then the seller is its only candidate.
#[derive(Clone, Debug)]
pub struct ScmFamily {
    buyers: Vec<VertexId>,
    buyer_index: HashMap<VertexId, usize>,
    members: Vec<FamilyMember>,
    exhaustive: bool,
    tie: TieRule,
}

#[derive(Clone, Debug)]
struct FamilyMember {
    priority: EdgePriority,
    /// `rank[child][parent]` over buyer positions; lower is preferred.
    rank: Vec<Vec<u32>>,
}

/// Families up to this size are enumerated exhaustively.
pub const FAMILY_LIMIT: u128 = 3_628_800;
/// Seeded members drawn when the family is too large.
pub const FAMILY_SAMPLES: u64 = 64;

impl ScmFamily {
    /// The family for the buyers the seller can reach in `truth`. No attack
    /// can add a real buyer to the reachable set, so the family covers every
    /// deviation too.
    pub fn for_truth(truth: &ReportProfile, tie: TieRule) -> Result<Self> {
        let g = reachable_subgraph(truth)?;
        let buyers: Vec<VertexId> = g.buyers().map(|i| g.id(i).clone()).collect();
        Ok(Self::over(buyers, tie))
    }

    pub fn over(buyers: Vec<VertexId>, tie: TieRule) -> Self {
        let b = buyers.len();
        let buyer_index = buyers.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect();
        let per_child = (1..b as u128).product::<u128>().max(1);
        let size = (0..b).try_fold(1u128, |acc, _| acc.checked_mul(per_child));
        let exhaustive = size.is_some_and(|s| s <= FAMILY_LIMIT);
        let members = if exhaustive {
            (0..size.unwrap()).map(|f| Self::ranked_member(&buyers, f, per_child)).collect()
        } else {
            (0..FAMILY_SAMPLES).map(|seed| Self::seeded_member(&buyers, seed)).collect()
        };
        ScmFamily { buyers, buyer_index, members, exhaustive, tie }
    }

    fn ranked_member(buyers: &[VertexId], mut f: u128, per_child: u128) -> FamilyMember {
        let b = buyers.len();
        let mut prefs = BTreeMap::new();
        let mut rank = vec![vec![u32::MAX; b]; b];
        for child in 0..b {
            let mut digit = (f % per_child) as usize;
            f /= per_child;
            let mut others: Vec<usize> = (0..b).filter(|&o| o != child).collect();
            // the digit-th permutation of the others in lexicographic order
            let mut order = Vec::with_capacity(others.len());
            while !others.is_empty() {
                let block: usize = (1..others.len()).product::<usize>().max(1);
                order.push(others.remove(digit / block));
                digit %= block;
            }
            for (pos, &o) in order.iter().enumerate() {
                rank[child][o] = pos as u32;
            }
            prefs.insert(buyers[child].clone(), order.iter().map(|&o| buyers[o].clone()).collect());
        }
        FamilyMember { priority: EdgePriority::Ranked { prefs, fallback_seed: 0 }, rank }
    }

    fn seeded_member(buyers: &[VertexId], seed: u64) -> FamilyMember {
        let b = buyers.len();
        let priority = EdgePriority::Seeded(seed);
        let mut rank = vec![vec![u32::MAX; b]; b];
        for child in 0..b {
            let mut others: Vec<usize> = (0..b).filter(|&o| o != child).collect();
            others.sort_by_key(|&o| priority.key(&buyers[child], &buyers[o]));
            for (pos, &o) in others.iter().enumerate() {
                rank[child][o] = pos as u32;
            }
        }
        FamilyMember { priority, rank }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_exhaustive(&self) -> bool {
        self.exhaustive
    }

    pub fn buyers(&self) -> &[VertexId] {
        &self.buyers
    }

    pub fn priority(&self, f: usize) -> &EdgePriority {
        &self.members[f].priority
    }

    pub fn mechanism(&self, f: usize) -> Mechanism {
        Mechanism::Scm { priority: self.members[f].priority.clone(), tie: self.tie }
    }

    pub fn summary(&self) -> FamilySummary {
        FamilySummary {
            members: self.members.len(),
            exhaustive: self.exhaustive,
            note: if self.exhaustive {
                "every parent preference order over the reachable buyers".into()
            } else {
                format!("{FAMILY_SAMPLES} seeded members; the full family exceeds {FAMILY_LIMIT} orders")
            },
        }
    }
}

/// SCM preparation on one graph for every family member: the distinct
/// shortest-path trees the members can induce, each with its pruned STM.
struct FamilyOnGraph {
    /// Children with several candidate parents and those candidates.
    choices: Vec<(usize, Vec<usize>)>,
    trees: Vec<(ShortestPathTree, StmPrepared)>,
    /// Tree index of each member, filled on first use.
    member_tree: Option<Vec<u32>>,
    /// Buyer position of each market index, for rank lookups.
    buyer_pos: Vec<usize>,
}

impl FamilyOnGraph {
    fn new(family: &ScmFamily, g: &ReachableGraph) -> Self {
        let scm = ScmPrepared::new(g);
        let fixed: BTreeMap<usize, usize> =
            scm.candidates().iter().filter(|(_, c)| c.len() == 1).map(|(&x, c)| (x, c[0])).collect();
        let choices: Vec<(usize, Vec<usize>)> =
            scm.candidates().iter().filter(|(_, c)| c.len() > 1).map(|(&x, c)| (x, c.clone())).collect();
        let mut trees = Vec::new();
        let mut pick = vec![0usize; choices.len()];
        loop {
            let mut parents = fixed.clone();
            for ((x, c), &k) in choices.iter().zip(&pick) {
                parents.insert(*x, c[k]);
            }
            let tree =
                ShortestPathTree::from_parents(scm.cluster_graph(), parents).expect("candidate choices form a tree");
            let (stm, _) = scm.stm_for_tree(g, &tree, family.tie);
            trees.push((tree, stm));
            let mut i = 0;
            loop {
                if i == pick.len() {
                    break;
                }
                pick[i] += 1;
                if pick[i] < choices[i].1.len() {
                    break;
                }
                pick[i] = 0;
                i += 1;
            }
            if i == pick.len() {
                break;
            }
        }
        let buyer_pos = (0..g.len())
            .map(|v| if v == 0 { usize::MAX } else { family.buyer_index.get(g.id(v)).copied().unwrap_or(usize::MAX) })
            .collect();
        FamilyOnGraph { choices, trees, member_tree: None, buyer_pos }
    }

    fn member_trees(&mut self, family: &ScmFamily) -> &[u32] {
        if self.member_tree.is_none() {
            let map = family
                .members
                .iter()
                .map(|m| {
                    let mut idx = 0usize;
                    let mut radix = 1usize;
                    for (x, cands) in &self.choices {
                        let child = self.buyer_pos[*x];
                        let best = (0..cands.len())
                            .min_by_key(|&k| m.rank[child][self.buyer_pos[cands[k]]])
                            .expect("non-empty candidates");
                        idx += best * radix;
                        radix *= cands.len();
                    }
                    idx as u32
                })
                .collect();
            self.member_tree = Some(map);
        }
        self.member_tree.as_deref().unwrap()
    }
}

/// What a check quantifies over.
#[derive(Clone, Debug)]
pub enum Subject {
    Single(Mechanism),
    /// Every deterministic SCM variant of the family.
    ScmFamily(ScmFamily),
}

impl Subject {
    pub fn kind(&self) -> MechanismKind {
        match self {
            Subject::Single(m) => m.kind(),
            Subject::ScmFamily(_) => MechanismKind::Scm,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FamilySummary {
    pub members: usize,
    pub exhaustive: bool,
    pub note: String,
}

/// A strict violation of a property, with enough detail to replay it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ViolationReport {
    pub property: Property,
    pub mechanism: MechanismKind,
    /// The SCM variant that is violated, for family checks.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family_member: Option<EdgePriority>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attacker: Option<VertexId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub attack: Option<AttackProfile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truthful_utility: Option<Money>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub deviating_utility: Option<Money>,
    /// Size of the violation: utility gained, utility lost under truth, or
    /// revenue deficit.
    pub gain: Money,
}

impl ViolationReport {
    /// The mechanism the violation was found for.
    pub fn replay_mechanism(&self, subject: &Subject) -> Mechanism {
        match (&self.family_member, subject) {
            (Some(priority), Subject::ScmFamily(fam)) => Mechanism::Scm { priority: priority.clone(), tie: fam.tie },
            (_, Subject::Single(m)) => m.clone(),
            (None, Subject::ScmFamily(fam)) => fam.mechanism(0),
        }
    }

    /// Recomputes the gain from scratch through the public entry points.
    pub fn replay(&self, truth: &ReportProfile, subject: &Subject) -> Result<Money> {
        let mech = self.replay_mechanism(subject);
        match self.property {
            Property::Ic | Property::Sp => {
                let attacker = self.attacker.as_ref().expect("incentive violations name the attacker");
                let attack = self.attack.as_ref().expect("incentive violations carry the attack");
                let truthful = attacker_utility(&mech, truth, &AttackProfile::truthful(truth, attacker)?)?;
                Ok(attacker_utility(&mech, truth, attack)? - truthful)
            }
            Property::Ir => {
                let attacker = self.attacker.as_ref().expect("IR violations name the buyer");
                Ok(-attacker_utility(&mech, truth, &AttackProfile::truthful(truth, attacker)?)?)
            }
            Property::NonDeficit => Ok(-mech.run(truth)?.revenue),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation(Box<ViolationReport>),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn violation(&self) -> Option<&ViolationReport> {
        match self {
            Verdict::Violation(v) => Some(v),
            Verdict::Pass => None,
        }
    }
}

/// The result of one property check, stating the space that was searched.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub property: Property,
    pub mechanism: MechanismKind,
    pub space: StrategySpace,
    pub attackers: Vec<VertexId>,
    pub attacks_evaluated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<FamilySummary>,
    #[serde(flatten)]
    pub verdict: Verdict,
}

/// Options for [`check_property`].
#[derive(Clone, Debug, Default)]
pub struct CheckOptions {
    /// Restrict the search to one attacker; all reachable buyers otherwise.
    pub attacker: Option<VertexId>,
    /// Return the first strict violation instead of the largest one.
    pub first_violation: bool,
}

/// Brute-force check of `property` for `subject` on `truth` over `space`.
///
/// IC is SP with the Sybil count forced to zero. The largest violation is
/// reported, ties going to the smallest attack, unless `first_violation` is
/// set.
pub fn check_property(
    subject: &Subject,
    truth: &ReportProfile,
    property: Property,
    space: &StrategySpace,
    options: &CheckOptions,
) -> Result<CheckReport> {
    Ok(check_property_many(subject, std::slice::from_ref(truth), property, space, options)?.remove(0))
}

/// [`check_property`] for several profiles with the same arcs and different
/// bids. The graph work of every attack wiring is shared by all of them.
pub fn check_property_many(
    subject: &Subject,
    truths: &[ReportProfile],
    property: Property,
    space: &StrategySpace,
    options: &CheckOptions,
) -> Result<Vec<CheckReport>> {
    let Some(first) = truths.first() else { return Ok(Vec::new()) };
    for t in &truths[1..] {
        let same = t.seller == first.seller
            && t.seller_neighbors == first.seller_neighbors
            && t.gamma0 == first.gamma0
            && t.reports.len() == first.reports.len()
            && t.reports.iter().zip(&first.reports).all(|((a, ra), (b, rb))| a == b && ra.diffuse == rb.diffuse);
        if !same {
            return Err(Error::InvalidParameters("batched profiles must share their report graph".into()));
        }
    }
    let graphs: Vec<ReachableGraph> = truths.iter().map(reachable_subgraph).collect::<Result<_>>()?;
    let attackers: Vec<VertexId> = match &options.attacker {
        Some(a) => {
            if !first.reports.contains_key(a) {
                return Err(Error::UnknownVertex(a.clone()));
            }
            vec![a.clone()]
        }
        None => graphs[0].buyers().map(|i| graphs[0].id(i).clone()).collect(),
    };
    let space = if property == Property::Ic { space.without_sybils() } else { space.clone() };
    let scaling = Scaling::new(subject, truths, &space)?;
    let ctxs: Vec<Context> = truths
        .iter()
        .zip(&graphs)
        .map(|(truth, g)| Context { subject, truth, g, space: &space, scaling: &scaling })
        .collect();

    let mut evaluated = vec![0u64; ctxs.len()];
    let verdicts: Vec<Verdict> = match property {
        Property::Ir => ctxs.iter().map(|c| c.check_ir(&attackers)).collect(),
        Property::NonDeficit => ctxs.iter().map(|c| c.check_non_deficit()).collect(),
        Property::Ic | Property::Sp => {
            let mut best: Vec<Option<Found>> = (0..ctxs.len()).map(|_| None).collect();
            for a in &attackers {
                let done: Vec<bool> = best.iter().map(|b| options.first_violation && b.is_some()).collect();
                let found = search_shared(&ctxs, a, options.first_violation, &mut evaluated, &done)?;
                for (slot, f) in best.iter_mut().zip(found) {
                    let Some(f) = f else { continue };
                    if slot.as_ref().is_none_or(|b| f.gain > b.gain || (f.gain == b.gain && f.attack < b.attack)) {
                        *slot = Some(f);
                    }
                }
            }
            best.into_iter()
                .zip(&ctxs)
                .map(|(b, c)| match b {
                    None => Verdict::Pass,
                    Some(f) => Verdict::Violation(Box::new(c.report(property, f))),
                })
                .collect()
        }
    };
    Ok(verdicts
        .into_iter()
        .zip(evaluated)
        .map(|(verdict, attacks_evaluated)| CheckReport {
            property,
            mechanism: subject.kind(),
            space: space.clone(),
            attackers: attackers.clone(),
            attacks_evaluated,
            family: match subject {
                Subject::ScmFamily(f) => Some(f.summary()),
                Subject::Single(_) => None,
            },
            verdict,
        })
        .collect())
}

/// A violation found in integer units.
struct Found {
    gain: i128,
    truthful: i128,
    deviating: i128,
    member: Option<usize>,
    attacker: VertexId,
    attack: Option<AttackProfile>,
}

/// One common denominator for every amount in a check.
struct Scaling {
    scale: BigInt,
    /// Scaled grid, same order as the space's grid.
    grid: Vec<i128>,
    scaled: HashMap<Money, i128>,
}

impl Scaling {
    fn new(subject: &Subject, truths: &[ReportProfile], space: &StrategySpace) -> Result<Self> {
        let mut amounts: BTreeSet<Money> = space.bid_grid.iter().cloned().collect();
        amounts.extend(truths.iter().flat_map(|t| t.reports.values().map(|r| r.bid.clone())));
        amounts.insert(Money::zero());
        if let Subject::Single(Mechanism::StmReserve { kappa, .. }) = subject {
            amounts.insert(kappa.clone());
        }
        let amounts: Vec<Money> = amounts.into_iter().collect();
        let (ints, scale) = scale_to_integers(&amounts)
            .ok_or_else(|| Error::InvalidParameters("bid amounts are too fine-grained to search exactly".into()))?;
        let scaled: HashMap<Money, i128> = amounts.into_iter().zip(ints).collect();
        let grid = space.bid_grid.iter().map(|b| scaled[b]).collect();
        Ok(Scaling { scale, grid, scaled })
    }
}

/// Everything the checks on one truthful profile need.
struct Context<'a> {
    subject: &'a Subject,
    truth: &'a ReportProfile,
    g: &'a ReachableGraph,
    space: &'a StrategySpace,
    scaling: &'a Scaling,
}

impl Context<'_> {
    fn to_money(&self, v: i128) -> Money {
        Money::from_scaled(v, &self.scaling.scale)
    }

    fn scaled_bids(&self, g: &ReachableGraph) -> Vec<i128> {
        g.bids().iter().map(|b| self.scaling.scaled[b]).collect()
    }

    fn prepare_single(&self, mech: &Mechanism, g: &ReachableGraph) -> Prepared<i128> {
        mech.prepare(g, |m| self.scaling.scaled[m])
    }

    fn fast_utility(stm: &StmPrepared, bids: &[i128], pay: &mut [i128], identities: &[usize], value: i128) -> i128 {
        let winner = stm.settle_into(bids, pay);
        let mut u = 0;
        for &i in identities {
            if winner == Some(i) {
                u += value;
            }
            u -= pay[i];
        }
        u
    }

    fn utility(raw: &RawOutcome<i128>, identities: &[usize], value: i128) -> i128 {
        let mut u = 0;
        for &i in identities {
            if raw.winner == Some(i) {
                u += value;
            }
            u -= raw.payments[i];
        }
        u
    }

    /// Truthful utilities of every reachable buyer, per family member for
    /// family subjects.
    fn truthful_table(&self) -> Vec<Vec<i128>> {
        let bids = self.scaled_bids(self.g);
        let all = |raw: &RawOutcome<i128>| (0..self.g.len()).map(|i| Self::utility(raw, &[i], bids[i])).collect();
        match self.subject {
            Subject::Single(mech) => vec![all(&self.prepare_single(mech, self.g).price(&bids))],
            Subject::ScmFamily(fam) => {
                let mut on = FamilyOnGraph::new(fam, self.g);
                let per_tree: Vec<Vec<i128>> = on.trees.iter().map(|(_, stm)| all(&stm.price(&bids))).collect();
                on.member_trees(fam).iter().map(|&t| per_tree[t as usize].clone()).collect()
            }
        }
    }

    fn check_ir(&self, attackers: &[VertexId]) -> Verdict {
        let table = self.truthful_table();
        let mut worst: Option<Found> = None;
        for a in attackers {
            let Some(i) = self.g.index_of(a) else { continue };
            for (f, row) in table.iter().enumerate() {
                if row[i] < 0 && worst.as_ref().is_none_or(|w| -row[i] > w.gain) {
                    worst = Some(Found {
                        gain: -row[i],
                        truthful: row[i],
                        deviating: 0,
                        member: self.member(f),
                        attacker: a.clone(),
                        attack: None,
                    });
                }
            }
        }
        match worst {
            None => Verdict::Pass,
            Some(w) => Verdict::Violation(Box::new(ViolationReport {
                deviating_utility: None,
                ..self.report(Property::Ir, w)
            })),
        }
    }

    fn check_non_deficit(&self) -> Verdict {
        let bids = self.scaled_bids(self.g);
        let revenues: Vec<i128> = match self.subject {
            Subject::Single(mech) => vec![self.prepare_single(mech, self.g).price(&bids).revenue()],
            Subject::ScmFamily(fam) => {
                let mut on = FamilyOnGraph::new(fam, self.g);
                let per_tree: Vec<i128> = on.trees.iter().map(|(_, stm)| stm.price(&bids).revenue()).collect();
                on.member_trees(fam).iter().map(|&t| per_tree[t as usize]).collect()
            }
        };
        let worst = revenues.iter().enumerate().min_by_key(|(_, r)| **r).map(|(f, r)| (f, *r));
        match worst {
            Some((f, r)) if r < 0 => Verdict::Violation(Box::new(ViolationReport {
                property: Property::NonDeficit,
                mechanism: self.subject.kind(),
                family_member: self.member(f).map(|f| self.member_priority(f)),
                attacker: None,
                attack: None,
                truthful_utility: None,
                deviating_utility: None,
                gain: self.to_money(-r),
            })),
            _ => Verdict::Pass,
        }
    }

    fn member(&self, f: usize) -> Option<usize> {
        matches!(self.subject, Subject::ScmFamily(_)).then_some(f)
    }

    fn member_priority(&self, f: usize) -> EdgePriority {
        match self.subject {
            Subject::ScmFamily(fam) => fam.priority(f).clone(),
            Subject::Single(_) => unreachable!("single mechanisms have no members"),
        }
    }

    fn report(&self, property: Property, f: Found) -> ViolationReport {
        ViolationReport {
            property,
            mechanism: self.subject.kind(),
            family_member: f.member.map(|m| self.member_priority(m)),
            attacker: Some(f.attacker),
            attack: f.attack,
            truthful_utility: Some(self.to_money(f.truthful)),
            deviating_utility: Some(self.to_money(f.deviating)),
            gain: self.to_money(f.gain),
        }
    }
}

/// Per-wiring mechanism state shared by every bid vector.
enum Prep {
    Single(Box<Prepared<i128>>),
    Family(Box<FamilyOnGraph>),
}

/// Best (or first) strictly profitable attack of one attacker, for each
/// context not marked `done`. All contexts share one report graph.
fn search_shared(
    ctxs: &[Context],
    attacker: &VertexId,
    first: bool,
    evaluated: &mut [u64],
    done: &[bool],
) -> Result<Vec<Option<Found>>> {
    let mut best: Vec<Option<Found>> = (0..ctxs.len()).map(|_| None).collect();
    let c0 = &ctxs[0];
    let Some(ai) = c0.g.index_of(attacker) else {
        // the seller cannot reach her whatever she reports
        return Ok(best);
    };
    let (subject, truth0, space, scaling) = (c0.subject, c0.truth, c0.space, c0.scaling);
    let values: Vec<i128> = ctxs.iter().map(|c| scaling.scaled[&c.truth.reports[attacker].bid]).collect();
    let truthful: Vec<Vec<i128>> =
        ctxs.iter().map(|c| c.truthful_table().iter().map(|row| row[ai]).collect()).collect();
    let min_truthful: Vec<i128> = truthful.iter().map(|t| *t.iter().min().expect("at least one member")).collect();
    let mut stopped: Vec<bool> = done.to_vec();
    let gsize = scaling.grid.len();

    for k in 0..=space.max_identities {
        let targets = Targets::new(truth0, attacker, k);
        for w in wirings(targets.neighbors.len(), k, space.diffusion) {
            if stopped.iter().all(|&s| s) {
                return Ok(best);
            }
            let skeleton_bids = vec![space.bid_grid[0].clone(); k + 1];
            let profile = apply_attack(truth0, &targets.attack(attacker, &w.masks, &skeleton_bids))?;
            let g = reachable_subgraph(&profile)?;
            let slots: Vec<usize> =
                targets.identities.iter().map(|id| g.index_of(id).expect("identities are reachable")).collect();
            let mut prep = match subject {
                Subject::Single(mech) => Prep::Single(Box::new(mech.prepare(&g, |m| scaling.scaled[m]))),
                Subject::ScmFamily(fam) => Prep::Family(Box::new(FamilyOnGraph::new(fam, &g))),
            };
            let mut tree_utils: Vec<i128> = Vec::new();
            let mut pay = vec![0i128; g.len()];

            for (t, ctx) in ctxs.iter().enumerate() {
                if stopped[t] {
                    continue;
                }
                // identity slots are overwritten below
                let mut bids: Vec<i128> = g
                    .ids()
                    .iter()
                    .enumerate()
                    .map(|(v, id)| if v == 0 { 0 } else { ctx.truth.bid(id).map_or(0, |b| scaling.scaled[b]) })
                    .collect();
                let (value, truthful, min_truthful) = (values[t], &truthful[t], min_truthful[t]);
                let best = &mut best[t];
                let mut stop = false;
                for_each_assignment(gsize, k + 1, |assign| {
                    if !canonical_bids(assign, &w.stabilizer) {
                        return true;
                    }
                    evaluated[t] += 1;
                    for (j, &s) in slots.iter().enumerate() {
                        bids[s] = scaling.grid[assign[j]];
                    }
                    // equal gains are kept when the attack sorts first
                    let threshold = best.as_ref().map_or(1, |b| b.gain);
                    let hit: Option<(i128, i128, Option<usize>)> = match &mut prep {
                        Prep::Single(p) => {
                            let u = match &mut **p {
                                Prepared::Stm { stm, .. } | Prepared::Scm { stm, .. } => {
                                    Context::fast_utility(stm, &bids, &mut pay, &slots, value)
                                }
                                _ => Context::utility(&p.price(&bids), &slots, value),
                            };
                            (u - truthful[0] >= threshold).then_some((u, truthful[0], None))
                        }
                        Prep::Family(on) => {
                            tree_utils.clear();
                            for (_, stm) in &on.trees {
                                tree_utils.push(Context::fast_utility(stm, &bids, &mut pay, &slots, value));
                            }
                            let max_u = *tree_utils.iter().max().unwrap();
                            if max_u - min_truthful < threshold {
                                None
                            } else {
                                let Subject::ScmFamily(fam) = subject else { unreachable!() };
                                let map = on.member_trees(fam);
                                let mut pick: Option<(i128, i128, Option<usize>)> = None;
                                for (f, &tr) in map.iter().enumerate() {
                                    let u = tree_utils[tr as usize];
                                    let gain = u - truthful[f];
                                    if gain >= threshold && pick.as_ref().is_none_or(|(pu, pt, _)| gain > pu - pt) {
                                        pick = Some((u, truthful[f], Some(f)));
                                    }
                                }
                                pick
                            }
                        }
                    };
                    if let Some((u, tv, member)) = hit {
                        let b: Vec<Money> = assign.iter().map(|&i| space.bid_grid[i].clone()).collect();
                        let attack = targets.attack(attacker, &w.masks, &b);
                        let better = best
                            .as_ref()
                            .is_none_or(|cur| u - tv > cur.gain || cur.attack.as_ref().is_some_and(|a| &attack < a));
                        if better {
                            *best = Some(Found {
                                gain: u - tv,
                                truthful: tv,
                                deviating: u,
                                member,
                                attacker: attacker.clone(),
                                attack: Some(attack),
                            });
                        }
                        if first {
                            stop = true;
                            return false;
                        }
                    }
                    true
                });
                if stop {
                    stopped[t] = true;
                }
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn m(v: i64) -> Money {
        Money::from_integer(v)
    }

    fn id(s: &str) -> VertexId {
        VertexId::from(s)
    }

    fn grid(n: usize) -> Vec<Money> {
        (0..n as i64).map(m).collect()
    }

    #[test]
    fn fake_neighbor_attack_on_f3() {
        let truth = fixtures::f3();
        let attack = AttackProfile {
            attacker: id("a"),
            identities: vec![
                IdentityReport { id: id("a"), bid: m(1), diffuse: ["b", "c", "a#1"].map(id).into() },
                IdentityReport { id: id("a#1"), bid: m(89), diffuse: BTreeSet::new() },
            ],
        };
        let p = apply_attack(&truth, &attack).unwrap();
        assert_eq!(p.reports.len(), 5);
        assert_eq!(p.reports[&id("x")], truth.reports[&id("x")]);
        assert_eq!(attacker_utility(&Mechanism::Idm, &truth, &attack).unwrap(), m(59));
        let honest = AttackProfile::truthful(&truth, &id("a")).unwrap();
        assert_eq!(attacker_utility(&Mechanism::Idm, &truth, &honest).unwrap(), m(20));
        assert_eq!(attacker_utility(&Mechanism::stm(), &truth, &attack).unwrap(), m(0));
        assert_eq!(attacker_utility(&Mechanism::stm(), &truth, &honest).unwrap(), m(0));
    }

    #[test]
    fn chain_attack_on_f3() {
        let truth = fixtures::f3();
        let attack = AttackProfile {
            attacker: id("a"),
            identities: vec![
                IdentityReport { id: id("a"), bid: m(1), diffuse: ["a#1"].map(id).into() },
                IdentityReport { id: id("a#1"), bid: m(1), diffuse: ["b", "c"].map(id).into() },
            ],
        };
        assert_eq!(attacker_utility(&Mechanism::Vcg, &truth, &attack).unwrap(), m(120));
        let honest = AttackProfile::truthful(&truth, &id("a")).unwrap();
        assert_eq!(attacker_utility(&Mechanism::Vcg, &truth, &honest).unwrap(), m(60));
        assert_eq!(attacker_utility(&Mechanism::stm(), &truth, &attack).unwrap(), m(0));
    }

    #[test]
    fn plain_rebid_and_infeasible_arc() {
        let truth = fixtures::f3();
        let rebid = AttackProfile {
            attacker: id("a"),
            identities: vec![IdentityReport { id: id("a"), bid: m(7), diffuse: ["b", "c"].map(id).into() }],
        };
        let p = apply_attack(&truth, &rebid).unwrap();
        assert_eq!(p.bid(&id("a")), Some(&m(7)));
        let bad = AttackProfile {
            attacker: id("a"),
            identities: vec![
                IdentityReport { id: id("a"), bid: m(1), diffuse: ["a#1"].map(id).into() },
                IdentityReport { id: id("a#1"), bid: m(1), diffuse: ["x"].map(id).into() },
            ],
        };
        match apply_attack(&truth, &bad) {
            Err(Error::InfeasibleArc { from, to, .. }) => assert_eq!((from, to), (id("a#1"), id("x"))),
            other => panic!("unexpected {other:?}"),
        }
    }

    /// Reference count of attack classes: brute force over every raw
    /// assignment, canonicalized by sorting the Sybils' reports after
    /// relabeling, collected into a set.
    fn brute_force_count(r: usize, k_max: usize, g: usize, full: bool) -> usize {
        let mut seen = BTreeSet::new();
        for k in 0..=k_max {
            let width = r + k + 1;
            let ids = k + 1;
            let total_masks = 1usize << width;
            let mut raw = vec![0usize; ids * 2];
            let combos = (total_masks * g).pow(ids as u32);
            for mut code in 0..combos {
                for slot in raw.iter_mut().take(ids) {
                    *slot = code % (total_masks * g);
                    code /= total_masks * g;
                }
                let masks: Vec<u32> = raw[..ids].iter().map(|c| (c / g) as u32).collect();
                let bids: Vec<usize> = raw[..ids].iter().map(|c| c % g).collect();
                let ok_self = masks.iter().enumerate().all(|(j, mk)| mk >> (r + j) & 1 == 0);
                let full_ok =
                    !full || masks.iter().enumerate().all(|(j, mk)| *mk == ((1u32 << width) - 1) & !(1 << (r + j)));
                if !ok_self || !full_ok || !admissible(&masks, r) {
                    continue;
                }
                // smallest relabeled (masks, bids) tuple
                let key = sybil_permutations(k)
                    .iter()
                    .map(|p| {
                        let pm = permute_masks(&masks, r, p);
                        let mut pb = vec![0usize; ids];
                        for (j, &b) in bids.iter().enumerate() {
                            pb[p[j]] = b;
                        }
                        (k, pm, pb)
                    })
                    .min()
                    .unwrap();
                seen.insert(key);
            }
        }
        seen.len()
    }

    #[test]
    fn enumeration_counts() {
        let mut truth = ReportProfile::new("s").with_seller_neighbors(["a"]);
        truth = truth.with_report("a", m(1), ["b", "c"]).with_report("b", m(1), Vec::<VertexId>::new());
        truth = truth.with_report("c", m(1), Vec::<VertexId>::new());
        for g in 1..=3 {
            let all0 = StrategySpace::new(grid(g), 0, DiffusionMode::All).unwrap();
            assert_eq!(enumerate_attacks(&truth, &id("a"), &all0).unwrap().len(), g * 4);
            let full0 = StrategySpace::new(grid(g), 0, DiffusionMode::Full).unwrap();
            assert_eq!(enumerate_attacks(&truth, &id("a"), &full0).unwrap().len(), g);
        }
        // one true neighbor, one Sybil: g * 2 plain + g^2 * 2 * 4 wirings
        let one = ReportProfile::new("s").with_seller_neighbors(["a"]).with_report("a", m(1), ["b"]).with_report(
            "b",
            m(1),
            Vec::<VertexId>::new(),
        );
        for g in 1..=3 {
            let space = StrategySpace::new(grid(g), 1, DiffusionMode::All).unwrap();
            let n = enumerate_attacks(&one, &id("a"), &space).unwrap().len();
            assert_eq!(n, g * 2 + g * g * 2 * 4);
            assert_eq!(n, brute_force_count(1, 1, g, false));
        }
        for (r, k, g) in [(0, 2, 2), (1, 2, 2), (2, 2, 1), (1, 3, 1)] {
            let mut t = ReportProfile::new("s").with_seller_neighbors(["a"]);
            let nbrs: Vec<VertexId> = (0..r).map(|i| VertexId::new(format!("n{i}"))).collect();
            t = t.with_report("a", m(1), nbrs.clone());
            for v in nbrs {
                t = t.with_report(v, m(1), Vec::<VertexId>::new());
            }
            for (mode, full) in [(DiffusionMode::All, false), (DiffusionMode::Full, true)] {
                let space = StrategySpace::new(grid(g), k, mode).unwrap();
                let attacks = enumerate_attacks(&t, &id("a"), &space).unwrap();
                assert_eq!(attacks.len(), brute_force_count(r, k, g, full), "r={r} k={k} g={g} {mode:?}");
                let distinct: BTreeSet<_> = attacks.iter().collect();
                assert_eq!(distinct.len(), attacks.len());
                for a in &attacks {
                    apply_attack(&t, a).unwrap();
                }
            }
        }
    }

    #[test]
    fn auto_grid_covers_bids_and_neighbors() {
        let grid: Vec<Money> = auto_grid(&fixtures::f3()).into_iter().collect();
        assert_eq!(grid, [0, 1, 2, 29, 30, 31, 49, 50, 51, 89, 90, 91].map(m).to_vec());
    }

    #[test]
    fn family_sizes() {
        let fam = ScmFamily::over(["a", "b", "c"].map(id).to_vec(), TieRule::Strict);
        assert_eq!(fam.len(), 8);
        assert!(fam.is_exhaustive());
        let fam = ScmFamily::over(["a", "b", "c", "d"].map(id).to_vec(), TieRule::Strict);
        assert_eq!(fam.len(), 1296);
        let fam = ScmFamily::over(["a", "b", "c", "d", "e"].map(id).to_vec(), TieRule::Strict);
        assert_eq!(fam.len(), FAMILY_SAMPLES as usize);
        assert!(!fam.is_exhaustive());
        let fam = ScmFamily::over(vec![id("a")], TieRule::Strict);
        assert_eq!(fam.len(), 1);
    }

    #[test]
    fn family_members_are_distinct_orders() {
        let fam = ScmFamily::over(["a", "b", "c", "d"].map(id).to_vec(), TieRule::Strict);
        let distinct: BTreeSet<String> = (0..fam.len()).map(|f| format!("{:?}", fam.priority(f))).collect();
        assert_eq!(distinct.len(), fam.len());
    }

    #[test]
    fn theta2_family_reaches_all_four_trees() {
        let truth = fixtures::theta2();
        let fam = ScmFamily::for_truth(&truth, TieRule::Strict).unwrap();
        let g = reachable_subgraph(&truth).unwrap();
        let mut on = FamilyOnGraph::new(&fam, &g);
        assert_eq!(on.trees.len(), 4);
        let used: BTreeSet<u32> = on.member_trees(&fam).iter().copied().collect();
        assert_eq!(used.len(), 4);
        // the member's own mechanism agrees with the tree it was mapped to
        let map = on.member_trees(&fam).to_vec();
        for (f, t) in map.iter().enumerate().step_by(97) {
            let out = fam.mechanism(f).run(&truth).unwrap();
            let raw = on.trees[*t as usize].1.price(g.bids());
            assert_eq!(out.revenue, raw.revenue());
        }
    }

    #[test]
    fn ic_equals_sp_without_sybils() {
        let truth = fixtures::osm();
        let space = StrategySpace::auto(&truth, 0, DiffusionMode::All);
        for mech in [Mechanism::Osm, Mechanism::Idm, Mechanism::stm()] {
            let subject = Subject::Single(mech);
            let ic = check_property(&subject, &truth, Property::Ic, &space, &CheckOptions::default()).unwrap();
            let sp = check_property(&subject, &truth, Property::Sp, &space, &CheckOptions::default()).unwrap();
            let strip = |v: &Verdict| v.violation().map(|r| (r.attack.clone(), r.gain.clone()));
            assert_eq!(strip(&ic.verdict), strip(&sp.verdict));
            assert_eq!(ic.attacks_evaluated, sp.attacks_evaluated);
        }
    }

    #[test]
    fn osm_ic_witness_replays() {
        let truth = fixtures::osm();
        let space = StrategySpace::auto(&truth, 0, DiffusionMode::All);
        let subject = Subject::Single(Mechanism::Osm);
        let report = check_property(&subject, &truth, Property::Ic, &space, &CheckOptions::default()).unwrap();
        let v = report.verdict.violation().expect("OSM is not incentive compatible");
        assert_eq!(v.gain, m(5));
        assert_eq!(v.attacker, Some(id("a")));
        assert_eq!(v.replay(&truth, &subject).unwrap(), v.gain);
    }

    #[test]
    fn vcg_sp_witness_on_f3() {
        let truth = fixtures::f3();
        let space = StrategySpace::auto(&truth, 1, DiffusionMode::All);
        let subject = Subject::Single(Mechanism::Vcg);
        let opts = CheckOptions { attacker: Some(id("a")), first_violation: false };
        let report = check_property(&subject, &truth, Property::Sp, &space, &opts).unwrap();
        let v = report.verdict.violation().unwrap();
        assert!(v.gain >= m(60), "gain {}", v.gain);
        assert_eq!(v.replay(&truth, &subject).unwrap(), v.gain);
    }

    #[test]
    fn stm_and_scm_family_pass_on_theta2() {
        let truth = fixtures::theta2();
        let space = StrategySpace::auto(&truth, 1, DiffusionMode::All);
        for subject in [
            Subject::Single(Mechanism::stm()),
            Subject::ScmFamily(ScmFamily::for_truth(&truth, TieRule::Strict).unwrap()),
        ] {
            for prop in Property::ALL {
                let r = check_property(&subject, &truth, prop, &space, &CheckOptions::default()).unwrap();
                assert!(r.verdict.is_pass(), "{prop} {:?}", r.verdict);
            }
        }
    }

    /// The buyers that reach the seller's market, with their reports.
    fn reachable_part(p: &ReportProfile) -> ReportProfile {
        let g = crate::graph::reachable_subgraph(p).unwrap();
        let mut out = p.clone();
        out.reports.retain(|v, _| g.index_of(v).is_some());
        out.gamma0.retain(|v| g.index_of(v).is_some());
        out
    }

    /// Checks that every Sybil cluster is something its root could have
    /// produced alone: collapse the cluster into one type whose neighbors
    /// are the cluster's outside targets, and the cluster's reports form a
    /// feasible attack that reproduces the original profile exactly.
    /// Returns how many nontrivial clusters were checked.
    fn check_clusters_as_attacks(p: &ReportProfile) -> usize {
        let p = reachable_part(p);
        let g = crate::graph::reachable_subgraph(&p).unwrap();
        let parts = crate::sybil::sybil_clusters(&g, &crate::sybil::compute_gamma(&g));
        let mut checked = 0;
        for (&root, members) in parts.clusters() {
            if root == 0 || members.len() < 2 {
                continue;
            }
            let names: Vec<VertexId> = members.iter().map(|&v| g.id(v).clone()).collect();
            let x = g.id(root).clone();
            let mut collapsed = p.clone();
            let mut identities = vec![IdentityReport {
                id: x.clone(),
                bid: p.reports[&x].bid.clone(),
                diffuse: p.reports[&x].diffuse.clone(),
            }];
            let mut outside = BTreeSet::new();
            for v in &names {
                let r = collapsed.reports.remove(v).unwrap();
                outside.extend(r.diffuse.iter().filter(|t| !names.contains(t)).cloned());
                if *v != x {
                    identities.push(IdentityReport { id: v.clone(), bid: r.bid, diffuse: r.diffuse });
                }
            }
            collapsed.reports.insert(x.clone(), Report { bid: p.reports[&x].bid.clone(), diffuse: outside });
            let attack = AttackProfile { attacker: x, identities };
            assert_eq!(apply_attack(&collapsed, &attack).unwrap(), p);
            checked += 1;
        }
        checked
    }

    #[test]
    fn theta1_cluster_is_a_feasible_attack() {
        assert_eq!(check_clusters_as_attacks(&fixtures::theta1()), 1);
    }

    proptest::proptest! {
        #[test]
        fn clusters_are_feasible_sybil_attacks(p in crate::corpus::arb_profile(6)) {
            check_clusters_as_attacks(&p);
        }
    }
}
