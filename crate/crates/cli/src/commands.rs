//! The `run`, `gamma`, `attack` and `experiment` subcommands.

use std::collections::BTreeMap;

use log::{info, warn};
use serde_json::json;
use sybilproof_core::adversary::parse_bid_grid;
use sybilproof_core::experiment::{
    csv_decimal, run_experiment, summarize, write_results_csv, write_summary_csv, ExperimentConfig, RESULTS_HEADER,
};
use sybilproof_core::{
    check_property, cluster_graph, compute_gamma, reachable_subgraph, sybil_clusters, CheckOptions, EdgePriority,
    Mechanism, MechanismKind, ReportProfile, ScmFamily, StrategySpace, Subject, VertexId,
};

use crate::args::{AttackArgs, Cli, ExperimentArgs, Format, MechanismOptions, RunArgs};
use crate::error::{CliError, CliResult};
use crate::output::{sink, write_csv, write_json};
use crate::verify::expected_pass;

pub fn load_profile(cli: &Cli) -> CliResult<ReportProfile> {
    let path = cli.input.as_ref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    info!("reading {}", path.display());
    Ok(ReportProfile::from_json_file(path)?)
}

/// The configured mechanism; SCM samples its tree from `seed` (0 when
/// absent).
pub fn build_mechanism(kind: MechanismKind, seed: Option<u64>, opts: &MechanismOptions) -> CliResult<Mechanism> {
    let tie = opts.stm_tie;
    if opts.kappa.is_some() && kind != MechanismKind::StmReserve {
        warn!("--kappa only applies to stm-reserve; ignored for {kind}");
    }
    Ok(match kind {
        MechanismKind::Nsp => Mechanism::Nsp,
        MechanismKind::Vcg => Mechanism::Vcg,
        MechanismKind::Idm => Mechanism::Idm,
        MechanismKind::Stm => Mechanism::Stm { tie },
        MechanismKind::StmReserve => {
            let kappa = opts.kappa.clone().ok_or_else(|| CliError::Usage("stm-reserve needs --kappa".into()))?;
            if kappa.is_negative() {
                return Err(CliError::Usage(format!("reserve price {kappa} is negative")));
            }
            Mechanism::StmReserve { kappa, tie }
        }
        MechanismKind::Scm => Mechanism::Scm { priority: EdgePriority::Seeded(seed.unwrap_or(0)), tie },
        MechanismKind::Osm => Mechanism::Osm,
    })
}

/// What `attack` and `verify` check: an unseeded SCM means every
/// derandomized variant.
pub fn build_subject(
    kind: MechanismKind,
    seed: Option<u64>,
    opts: &MechanismOptions,
    truth: &ReportProfile,
) -> CliResult<Subject> {
    if kind == MechanismKind::Scm && seed.is_none() {
        return Ok(Subject::ScmFamily(ScmFamily::for_truth(truth, opts.stm_tie)?));
    }
    Ok(Subject::Single(build_mechanism(kind, seed, opts)?))
}

pub fn run(cli: &Cli, args: &RunArgs) -> CliResult<bool> {
    let mech = build_mechanism(args.mechanism, cli.seed, &args.mech)?;
    let profile = load_profile(cli)?;
    let outcome = mech.run(&profile)?;
    info!("{}: winner {:?}, revenue {}", args.mechanism, outcome.winner, outcome.revenue);
    match cli.format {
        Format::Json => write_json(cli.output.as_deref(), &outcome)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = profile
                .reports
                .iter()
                .map(|(id, r)| {
                    vec![
                        id.to_string(),
                        r.bid.to_string(),
                        outcome.payment(id).to_string(),
                        outcome.utility(id, &r.bid).to_string(),
                        (outcome.winner.as_ref() == Some(id)).to_string(),
                    ]
                })
                .collect();
            write_csv(cli.output.as_deref(), &["vertex", "bid", "payment", "utility", "winner"], &rows)?;
        }
    }
    Ok(true)
}

pub fn gamma(cli: &Cli) -> CliResult<bool> {
    let profile = load_profile(cli)?;
    let g = reachable_subgraph(&profile)?;
    let gamma = compute_gamma(&g);
    let parts = sybil_clusters(&g, &gamma);
    let h = cluster_graph(&g, &parts);
    let name = |v: usize| g.id(v).clone();
    match cli.format {
        Format::Json => {
            let clusters: BTreeMap<VertexId, Vec<VertexId>> =
                parts.clusters().iter().map(|(&r, ms)| (name(r), ms.iter().map(|&v| name(v)).collect())).collect();
            let edges: Vec<[VertexId; 2]> = h.arcs().into_iter().map(|(a, b)| [name(a), name(b)]).collect();
            let doc = json!({
                "gamma": gamma.iter().map(name).collect::<Vec<_>>(),
                "clusters": clusters,
                "cluster_edges": edges,
            });
            write_json(cli.output.as_deref(), &doc)?;
        }
        Format::Csv => {
            let rows: Vec<Vec<String>> = (0..g.len())
                .map(|v| vec![name(v).to_string(), gamma.contains(v).to_string(), name(parts.root_of(v)).to_string()])
                .collect();
            write_csv(cli.output.as_deref(), &["vertex", "in_gamma", "cluster"], &rows)?;
        }
    }
    Ok(true)
}

pub fn attack(cli: &Cli, args: &AttackArgs) -> CliResult<bool> {
    if args.mechanism == MechanismKind::StmReserve && args.mech.kappa.is_none() {
        return Err(CliError::Usage("stm-reserve needs --kappa".into()));
    }
    let truth = load_profile(cli)?;
    let grid = parse_bid_grid(&args.bid_grid, &truth)?;
    let space = StrategySpace::new(grid, args.max_identities, args.diffusion)?;
    let subject = build_subject(args.mechanism, cli.seed, &args.mech, &truth)?;
    let opts =
        CheckOptions { attacker: args.attacker.as_deref().map(VertexId::from), first_violation: args.first_violation };
    let report = check_property(&subject, &truth, args.property, &space, &opts)?;
    info!("{} attacks evaluated", report.attacks_evaluated);
    match cli.format {
        Format::Json => write_json(cli.output.as_deref(), &report)?,
        Format::Csv => {
            let v = report.verdict.violation();
            let row = vec![
                report.property.to_string(),
                report.mechanism.to_string(),
                if v.is_some() { "violation" } else { "pass" }.to_string(),
                v.and_then(|v| v.attacker.as_ref()).map(ToString::to_string).unwrap_or_default(),
                v.map(|v| v.gain.to_string()).unwrap_or_default(),
                report.attacks_evaluated.to_string(),
            ];
            write_csv(
                cli.output.as_deref(),
                &["property", "mechanism", "verdict", "attacker", "gain", "attacks_evaluated"],
                &[row],
            )?;
        }
    }
    let contradicts = !report.verdict.is_pass() && expected_pass(args.mechanism, args.property) == Some(true);
    Ok(!contradicts)
}

pub fn experiment(cli: &Cli, args: &ExperimentArgs) -> CliResult<bool> {
    let mut config = ExperimentConfig::new(args.n, args.m, args.trials, cli.seed.unwrap_or(0));
    config.mechanisms = args.mechanisms.clone();
    config.tie = args.mech.stm_tie;
    if let Some(kappa) = &args.mech.kappa {
        config.kappa = kappa.clone();
    }
    config.validate()?;
    info!("running {} trials at n={}, m={}", config.trials, config.n, config.m);
    let rows = run_experiment(&config)?;
    let results_path = args.out.as_deref().or(cli.output.as_deref());
    let write_err = |path: &std::path::Path, e: sybilproof_core::Error| CliError::Write {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    if args.out.is_some() || cli.format == Format::Csv {
        write_results_csv(&rows, sink(results_path)?)
            .map_err(|e| write_err(results_path.unwrap_or("<stdout>".as_ref()), e))?;
    } else {
        let doc: Vec<_> = rows
            .iter()
            .map(|r| {
                let mut obj = serde_json::Map::new();
                let fields = [
                    r.seed.to_string(),
                    r.n.to_string(),
                    r.m.to_string(),
                    r.trial.to_string(),
                    r.mechanism.to_string(),
                    csv_decimal(&r.social_welfare),
                    csv_decimal(&r.revenue),
                    csv_decimal(&r.optimal_welfare),
                    r.ratio.as_ref().map(csv_decimal).unwrap_or_default(),
                ];
                for (k, v) in RESULTS_HEADER.iter().zip(fields) {
                    obj.insert(k.to_string(), v.into());
                }
                serde_json::Value::Object(obj)
            })
            .collect();
        write_json(results_path, &doc)?;
    }
    if let Some(path) = &args.summary {
        let stats = summarize(&rows)?;
        write_summary_csv(&stats, sink(Some(path))?).map_err(|e| write_err(path, e))?;
        info!("wrote {}", path.display());
    }
    Ok(true)
}
