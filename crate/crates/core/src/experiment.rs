//! Price's-model simulations: graph generation, batch runs under truthful
//! reporting, summary statistics and CSV output.
//!
//! Each trial derives its own seed from the master seed and the trial index,
//! so trials can run in any order (or in parallel) and still produce the
//! same rows.

use std::collections::BTreeSet;
use std::io::Write;

use num_rational::BigRational;
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{reachable_subgraph, ReachableGraph};
use crate::mechanism::{Mechanism, MechanismKind, TieRule};
use crate::money::Money;
use crate::profile::{ReportProfile, VertexId};
use crate::sybil::EdgePriority;

/// Values are drawn as `k / VALUE_RESOLUTION` with `k` uniform.
pub const VALUE_RESOLUTION: u64 = 1_000_000_000;

pub const SELLER_ID: &str = "s";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PriceModelParams {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
}

impl PriceModelParams {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 || self.n < self.m + 1 {
            return Err(Error::InvalidParameters(format!(
                "Price's model needs n >= m + 1 >= 2 (got n={}, m={})",
                self.n, self.m
            )));
        }
        Ok(())
    }
}

/// Vertex names: the seller, then zero-padded buyer numbers so that id
/// order equals generation order.
pub fn price_vertex_id(i: usize, n: usize) -> VertexId {
    if i == 0 {
        return VertexId::from(SELLER_ID);
    }
    let width = (n.max(2) - 1).to_string().len();
    VertexId::new(format!("v{i:0width$}"))
}

/// Undirected attachment edges of a Price's-model graph on `0..n`: an
/// `(m+1)`-clique, then each new vertex picks `m` distinct earlier vertices
/// with probability proportional to in-degree plus one, where a new vertex
/// cites the vertices it picks.
pub fn price_edges(params: &PriceModelParams, rng: &mut impl Rng) -> Result<Vec<(usize, usize)>> {
    params.validate()?;
    let PriceModelParams { n, m, .. } = *params;
    let mut edges = Vec::new();
    let mut in_degree = vec![0usize; n];
    for u in 0..=m {
        for (v, deg) in in_degree.iter_mut().enumerate().take(m + 1) {
            if u != v {
                *deg += 1;
            }
            if u < v {
                edges.push((u, v));
            }
        }
    }
    for t in m + 1..n {
        let candidates: Vec<usize> = (0..t).collect();
        let picked: BTreeSet<usize> = candidates
            .choose_multiple_weighted(rng, m, |&v| (in_degree[v] + 1) as f64)
            .expect("positive finite weights")
            .copied()
            .collect();
        debug_assert_eq!(picked.len(), m);
        for v in picked {
            in_degree[v] += 1;
            edges.push((v, t));
        }
    }
    Ok(edges)
}

/// A Price's-model market with every bid zero. Each attachment edge becomes
/// arcs in both directions, except that nobody diffuses to the seller.
pub fn generate_price_graph(params: &PriceModelParams) -> Result<ReportProfile> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    price_profile(params, &mut rng)
}

fn price_profile(params: &PriceModelParams, rng: &mut impl Rng) -> Result<ReportProfile> {
    let edges = price_edges(params, rng)?;
    let n = params.n;
    let ids: Vec<VertexId> = (0..n).map(|i| price_vertex_id(i, n)).collect();
    let mut diffuse = vec![BTreeSet::new(); n];
    let mut seller_neighbors = BTreeSet::new();
    for (u, v) in edges {
        for (a, b) in [(u, v), (v, u)] {
            if a == 0 {
                seller_neighbors.insert(ids[b].clone());
            } else if b != 0 {
                diffuse[a].insert(ids[b].clone());
            }
        }
    }
    let mut profile = ReportProfile::new(ids[0].clone()).with_seller_neighbors(seller_neighbors);
    for (i, d) in diffuse.into_iter().enumerate().skip(1) {
        profile = profile.with_report(ids[i].clone(), Money::zero(), d);
    }
    Ok(profile)
}

/// A value drawn uniformly from the grid `{0, 1/R, …, 1}`.
pub fn sample_value(rng: &mut impl Rng) -> Money {
    let k = rng.random_range(0..=VALUE_RESOLUTION);
    Money::from_rational(BigRational::new(k.into(), VALUE_RESOLUTION.into()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub mechanisms: Vec<MechanismKind>,
    /// Reserve price used when `stm-reserve` is listed.
    pub kappa: Money,
    pub tie: TieRule,
}

impl ExperimentConfig {
    pub const DEFAULT_MECHANISMS: [MechanismKind; 5] =
        [MechanismKind::Nsp, MechanismKind::Stm, MechanismKind::Scm, MechanismKind::Idm, MechanismKind::Vcg];

    pub fn new(n: usize, m: usize, trials: usize, master_seed: u64) -> Self {
        ExperimentConfig {
            n,
            m,
            trials,
            master_seed,
            mechanisms: Self::DEFAULT_MECHANISMS.to_vec(),
            kappa: Money::zero(),
            tie: TieRule::Strict,
        }
    }

    pub fn validate(&self) -> Result<()> {
        PriceModelParams { n: self.n, m: self.m, seed: 0 }.validate()?;
        if self.trials == 0 {
            return Err(Error::InvalidParameters("at least one trial is needed".into()));
        }
        if self.mechanisms.is_empty() {
            return Err(Error::InvalidParameters("no mechanisms selected".into()));
        }
        if self.kappa.is_negative() {
            return Err(Error::InvalidParameters(format!("reserve price {} is negative", self.kappa)));
        }
        Ok(())
    }

    /// Seed of trial `t`: the first word of stream `t` of the master
    /// generator.
    pub fn trial_seed(&self, trial: usize) -> u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(trial as u64);
        rng.next_u64()
    }

    fn mechanism(&self, kind: MechanismKind, trial_seed: u64) -> Mechanism {
        match kind {
            MechanismKind::Nsp => Mechanism::Nsp,
            MechanismKind::Vcg => Mechanism::Vcg,
            MechanismKind::Idm => Mechanism::Idm,
            MechanismKind::Stm => Mechanism::Stm { tie: self.tie },
            MechanismKind::StmReserve => Mechanism::StmReserve { kappa: self.kappa.clone(), tie: self.tie },
            MechanismKind::Scm => Mechanism::Scm { priority: EdgePriority::Seeded(trial_seed), tie: self.tie },
            MechanismKind::Osm => Mechanism::Osm,
        }
    }
}

/// One (trial, mechanism) result.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResultRow {
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub trial: usize,
    pub mechanism: MechanismKind,
    pub social_welfare: Money,
    pub revenue: Money,
    pub optimal_welfare: Money,
    /// `social_welfare / optimal_welfare`; absent for reserved outcomes and
    /// when every value is zero.
    pub ratio: Option<Money>,
    pub reserved: bool,
}

/// The profile a trial runs on: a fresh Price graph and fresh values.
pub fn trial_profile(config: &ExperimentConfig, trial: usize) -> Result<(u64, ReportProfile)> {
    let seed = config.trial_seed(trial);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut profile = price_profile(&PriceModelParams { n: config.n, m: config.m, seed }, &mut rng)?;
    for report in profile.reports.values_mut() {
        report.bid = sample_value(&mut rng);
    }
    Ok((seed, profile))
}

fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<Vec<ResultRow>> {
    let (seed, profile) = trial_profile(config, trial)?;
    let g: ReachableGraph = reachable_subgraph(&profile)?;
    let optimal = g.bids().iter().max().cloned().unwrap_or_else(Money::zero);
    let rows = config
        .mechanisms
        .iter()
        .map(|&kind| {
            let outcome = config.mechanism(kind, seed).run_graph(&g);
            let ratio =
                if outcome.reserved || optimal.is_zero() { None } else { outcome.social_welfare.checked_div(&optimal) };
            ResultRow {
                seed,
                n: config.n,
                m: config.m,
                trial,
                mechanism: kind,
                social_welfare: outcome.social_welfare,
                revenue: outcome.revenue,
                optimal_welfare: optimal.clone(),
                ratio,
                reserved: outcome.reserved,
            }
        })
        .collect();
    Ok(rows)
}

/// Runs every trial and returns rows ordered by trial, then by the order of
/// `config.mechanisms`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    config.validate()?;
    let per_trial: Vec<Vec<ResultRow>> =
        (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect::<Result<_>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

/// Exact decimal when it terminates, otherwise rounded to 15 places.
pub fn csv_decimal(v: &Money) -> String {
    if v.is_terminating() {
        v.to_string()
    } else {
        v.to_decimal_rounded(15)
    }
}

pub const RESULTS_HEADER: [&str; 9] =
    ["seed", "n", "m", "trial", "mechanism", "social_welfare", "revenue", "optimal_welfare", "ratio"];

pub fn write_results_csv(rows: &[ResultRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.trial.to_string(),
            r.mechanism.name().to_string(),
            csv_decimal(&r.social_welfare),
            csv_decimal(&r.revenue),
            csv_decimal(&r.optimal_welfare),
            r.ratio.as_ref().map(csv_decimal).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SocialWelfare,
    Revenue,
    Ratio,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::SocialWelfare, Metric::Revenue, Metric::Ratio];

    pub fn name(self) -> &'static str {
        match self {
            Metric::SocialWelfare => "social_welfare",
            Metric::Revenue => "revenue",
            Metric::Ratio => "ratio",
        }
    }

    pub fn of(self, row: &ResultRow) -> Option<&Money> {
        match self {
            Metric::SocialWelfare => Some(&row.social_welfare),
            Metric::Revenue => Some(&row.revenue),
            Metric::Ratio => row.ratio.as_ref(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SummaryStats {
    pub mechanism: MechanismKind,
    pub metric: Metric,
    pub count: usize,
    pub mean: Money,
    pub median: Money,
    pub q1: Money,
    pub q3: Money,
    pub p5: Money,
    pub p95: Money,
}

/// Percentile `pct`/100 of a sorted sample, interpolating linearly between
/// the closest ranks: position `(len - 1) * pct / 100`.
pub fn percentile(sorted: &[Money], pct: u32) -> Result<Money> {
    if sorted.is_empty() {
        return Err(Error::EmptyGroup("percentile of an empty sample".into()));
    }
    let pos = Money::from_ratio(((sorted.len() - 1) as i64) * pct as i64, 100);
    let lo = pos.as_rational().floor().to_integer();
    let lo: usize = lo.try_into().expect("position fits in usize");
    let frac = &pos - &Money::from_integer(lo as i64);
    if lo + 1 >= sorted.len() {
        return Ok(sorted[lo].clone());
    }
    Ok(&sorted[lo] + &frac.mul(&(&sorted[lo + 1] - &sorted[lo])))
}

pub fn summarize_sample(mechanism: MechanismKind, metric: Metric, sample: &[Money]) -> Result<SummaryStats> {
    if sample.is_empty() {
        return Err(Error::EmptyGroup(format!("no {} values for {}", metric.name(), mechanism)));
    }
    let mut sorted = sample.to_vec();
    sorted.sort();
    let mut total = Money::zero();
    for v in &sorted {
        total += v;
    }
    Ok(SummaryStats {
        mechanism,
        metric,
        count: sorted.len(),
        mean: total.mul_ratio(1, sorted.len() as i64),
        median: percentile(&sorted, 50)?,
        q1: percentile(&sorted, 25)?,
        q3: percentile(&sorted, 75)?,
        p5: percentile(&sorted, 5)?,
        p95: percentile(&sorted, 95)?,
    })
}

/// Statistics per mechanism (first-appearance order) and metric. Rows
/// without a ratio are left out of the ratio statistics; a mechanism with no
/// ratio at all gets no ratio entry.
pub fn summarize(rows: &[ResultRow]) -> Result<Vec<SummaryStats>> {
    let mut mechanisms: Vec<MechanismKind> = Vec::new();
    for r in rows {
        if !mechanisms.contains(&r.mechanism) {
            mechanisms.push(r.mechanism);
        }
    }
    if mechanisms.is_empty() {
        return Err(Error::EmptyGroup("no rows to summarize".into()));
    }
    let mut out = Vec::new();
    for mech in mechanisms {
        for metric in Metric::ALL {
            let sample: Vec<Money> =
                rows.iter().filter(|r| r.mechanism == mech).filter_map(|r| metric.of(r).cloned()).collect();
            if sample.is_empty() && metric == Metric::Ratio {
                continue;
            }
            out.push(summarize_sample(mech, metric, &sample)?);
        }
    }
    Ok(out)
}

pub const SUMMARY_HEADER: [&str; 8] = ["mechanism", "metric", "mean", "median", "q1", "q3", "p5", "p95"];

pub fn write_summary_csv(stats: &[SummaryStats], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for s in stats {
        w.write_record([
            s.mechanism.name().to_string(),
            s.metric.name().to_string(),
            csv_decimal(&s.mean),
            csv_decimal(&s.median),
            csv_decimal(&s.q1),
            csv_decimal(&s.q3),
            csv_decimal(&s.p5),
            csv_decimal(&s.p95),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Mean and standard error of the per-trial difference `a - b` of a metric,
/// over trials where both rows have a value.
pub fn paired_difference(rows: &[ResultRow], a: MechanismKind, b: MechanismKind, metric: Metric) -> Option<(f64, f64)> {
    let pick = |mech: MechanismKind| {
        rows.iter()
            .filter(move |r| r.mechanism == mech)
            .filter_map(move |r| metric.of(r).map(|v| (r.trial, v.to_f64())))
            .collect::<std::collections::BTreeMap<_, _>>()
    };
    let (xa, xb) = (pick(a), pick(b));
    let diffs: Vec<f64> = xa.iter().filter_map(|(t, va)| xb.get(t).map(|vb| va - vb)).collect();
    if diffs.len() < 2 {
        return None;
    }
    let len = diffs.len() as f64;
    let mean = diffs.iter().sum::<f64>() / len;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (len - 1.0);
    Some((mean, (var / len).sqrt()))
}
