//! The `verify` subcommand: the property matrix over a fixed instance set.
//!
//! Instances are the named fixtures, every seller-rooted digraph up to
//! `--n-max` vertices with every bid vector from `--bids`, and `--trials`
//! seeded random profiles. Profiles sharing a digraph are checked as one
//! batch over the union of their default bid grids.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use sybilproof_core::adversary::auto_grid;
use sybilproof_core::corpus::{profile_from_arcs, random_profile, seller_rooted_digraphs};
use sybilproof_core::{
    check_property_many, fixtures, CheckOptions, DiffusionMode, MechanismKind, Money, Property, ReportProfile,
    StrategySpace, ViolationReport,
};

use crate::args::{Cli, Format, VerifyArgs};
use crate::commands::build_subject;
use crate::error::CliResult;
use crate::output::{write_csv, write_json};

/// Arc probability and bid bound of the random instances.
const RANDOM_ARC_PROB: f64 = 0.4;
const RANDOM_MAX_BID: i64 = 5;
/// Reserve price of stm-reserve when `--kappa` is not given.
const DEFAULT_KAPPA: i64 = 1;

/// The verdict each mechanism is known to earn: `Some(true)` must pass,
/// `Some(false)` is known to fail somewhere, `None` makes no claim.
pub fn expected_pass(kind: MechanismKind, property: Property) -> Option<bool> {
    use MechanismKind::*;
    use Property::*;
    match (kind, property) {
        (Stm | StmReserve | Scm | Nsp, _) => Some(true),
        (Idm, Sp) => Some(false),
        (Idm, _) => Some(true),
        (Vcg, Sp | NonDeficit) => Some(false),
        (Vcg, Ir | Ic) => Some(true),
        (Osm, Ic | Sp) => Some(false),
        (Osm, Ir | NonDeficit) => Some(true),
    }
}

/// Profiles with one digraph, checked together.
struct Group {
    name: String,
    truths: Vec<ReportProfile>,
}

fn instance_groups(args: &VerifyArgs, seed: u64) -> Vec<Group> {
    let mut groups: Vec<Group> = [
        ("theta1", fixtures::theta1()),
        ("theta2", fixtures::theta2()),
        ("f3", fixtures::f3()),
        ("osm", fixtures::osm()),
    ]
    .into_iter()
    .map(|(name, p)| Group { name: format!("fixture {name}"), truths: vec![p] })
    .collect();
    for n in 2..=args.n_max as usize {
        for (i, arcs) in seller_rooted_digraphs(n).into_iter().enumerate() {
            let codes = args.bids.len().pow(n as u32 - 1);
            let truths = (0..codes)
                .map(|code| {
                    let bids: Vec<Money> = (0..n - 1)
                        .map(|j| args.bids[code / args.bids.len().pow(j as u32) % args.bids.len()].clone())
                        .collect();
                    profile_from_arcs(n, &arcs, &bids)
                })
                .collect();
            groups.push(Group { name: format!("digraph n={n} #{i} {arcs:?}"), truths });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..args.trials {
        let n = rng.random_range(2..=args.random_n as usize);
        let p = random_profile(&mut rng, n, RANDOM_ARC_PROB, RANDOM_MAX_BID);
        groups.push(Group { name: format!("random #{t}"), truths: vec![p] });
    }
    groups
}

#[derive(Debug, Serialize)]
struct Witness {
    instance: String,
    profile: serde_json::Value,
    #[serde(flatten)]
    violation: ViolationReport,
}

#[derive(Debug, Serialize)]
struct MatrixRow {
    mechanism: MechanismKind,
    property: Property,
    expected: &'static str,
    /// `pass`, `violation`, or `no_witness` for a known failure that the
    /// instance set did not expose.
    outcome: &'static str,
    ok: bool,
    instances: usize,
    attacks_evaluated: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    witness: Option<Witness>,
}

/// First violation of `property` in instance order, and the attack count.
fn check_groups(
    args: &VerifyArgs,
    cli: &Cli,
    groups: &[Group],
    kind: MechanismKind,
    property: Property,
) -> CliResult<(Option<Witness>, u64)> {
    let seeking_witness = expected_pass(kind, property) == Some(false);
    let opts = CheckOptions { attacker: None, first_violation: seeking_witness };
    let mut mech = args.mech.clone();
    if kind == MechanismKind::StmReserve {
        mech.kappa.get_or_insert_with(|| Money::from_integer(DEFAULT_KAPPA));
    }
    let results: Vec<CliResult<(Option<Witness>, u64)>> = groups
        .par_iter()
        .map(|group| {
            let grid: BTreeSet<Money> = group.truths.iter().flat_map(auto_grid).collect();
            let space = StrategySpace::new(grid, args.k_max, DiffusionMode::All)?;
            let subject =
                build_subject(kind, cli.seed.filter(|_| kind != MechanismKind::Scm), &mech, &group.truths[0])?;
            let reports = check_property_many(&subject, &group.truths, property, &space, &opts)?;
            let evaluated = reports.iter().map(|r| r.attacks_evaluated).sum();
            let witness = group.truths.iter().zip(reports).find_map(|(truth, r)| {
                r.verdict.violation().map(|v| Witness {
                    instance: group.name.clone(),
                    profile: serde_json::from_str(&truth.to_json_string()).expect("profiles serialize"),
                    violation: v.clone(),
                })
            });
            Ok((witness, evaluated))
        })
        .collect();
    let mut first = None;
    let mut evaluated = 0;
    for r in results {
        let (w, e) = r?;
        evaluated += e;
        if first.is_none() {
            first = w;
        }
    }
    Ok((first, evaluated))
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> CliResult<bool> {
    let seed = cli.seed.unwrap_or(0);
    let groups = instance_groups(args, seed);
    let instances: usize = groups.iter().map(|g| g.truths.len()).sum();
    log::info!("{instances} instances in {} groups", groups.len());
    let mut rows = Vec::new();
    for &kind in &args.mechanisms {
        for property in Property::ALL {
            let (witness, attacks_evaluated) = check_groups(args, cli, &groups, kind, property)?;
            let expected = expected_pass(kind, property);
            let (outcome, ok) = match (&witness, expected) {
                (None, Some(false)) => ("no_witness", true),
                (None, _) => ("pass", true),
                (Some(_), Some(true)) => ("violation", false),
                (Some(_), _) => ("violation", true),
            };
            rows.push(MatrixRow {
                mechanism: kind,
                property,
                expected: match expected {
                    Some(true) => "pass",
                    Some(false) => "fail",
                    None => "none",
                },
                outcome,
                ok,
                instances,
                attacks_evaluated,
                witness,
            });
        }
    }
    print_table(&rows);
    match cli.format {
        Format::Json => write_json(cli.output.as_deref(), &rows)?,
        Format::Csv => {
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.mechanism.to_string(),
                        r.property.to_string(),
                        r.expected.to_string(),
                        r.outcome.to_string(),
                        r.ok.to_string(),
                        r.instances.to_string(),
                        r.attacks_evaluated.to_string(),
                        r.witness.as_ref().map(|w| w.instance.clone()).unwrap_or_default(),
                        r.witness.as_ref().map(|w| w.violation.gain.to_string()).unwrap_or_default(),
                    ]
                })
                .collect();
            write_csv(
                cli.output.as_deref(),
                &[
                    "mechanism",
                    "property",
                    "expected",
                    "outcome",
                    "ok",
                    "instances",
                    "attacks_evaluated",
                    "witness_instance",
                    "witness_gain",
                ],
                &table,
            )?;
        }
    }
    Ok(rows.iter().all(|r| r.ok))
}

fn print_table(rows: &[MatrixRow]) {
    eprintln!("{:<12} {:<12} {:<9} {:<11} witness", "mechanism", "property", "expected", "outcome");
    for r in rows {
        let witness =
            r.witness.as_ref().map_or(String::new(), |w| format!("gain {} on {}", w.violation.gain, w.instance));
        eprintln!(
            "{:<12} {:<12} {:<9} {:<11} {witness}",
            r.mechanism.to_string(),
            r.property.to_string(),
            r.expected,
            if r.ok { r.outcome.to_string() } else { format!("{} !", r.outcome) }
        );
    }
}
