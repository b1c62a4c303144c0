//! Command-line definitions.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sybilproof_core::{DiffusionMode, MechanismKind, Money, Property, TieRule};

#[derive(Parser, Debug)]
#[command(name = "sybilproof", version, about = "Sybil-proof diffusion auctions on social networks")]
pub struct Cli {
    /// Profile JSON file
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,

    /// Seed for SCM tree sampling, experiments and random instances
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Write results to this file instead of stdout
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Result format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run one mechanism on a profile and print the outcome
    Run(RunArgs),
    /// Print the trusted set, the Sybil clusters and the cluster graph
    Gamma,
    /// Search for a profitable Sybil attack or misreport
    Attack(AttackArgs),
    /// Run the Price's-model experiment and write CSV rows
    Experiment(ExperimentArgs),
    /// Check the property matrix on fixtures, small digraphs and random instances
    Verify(VerifyArgs),
}

/// Settings shared by every command that builds a mechanism.
#[derive(Args, Debug, Clone)]
pub struct MechanismOptions {
    /// Reserve price for stm-reserve
    #[arg(long, value_parser = parse_money)]
    pub kappa: Option<Money>,

    /// How STM and SCM brokers compare their bid with the resale price
    #[arg(long, value_parser = parse_tie, default_value = "strict")]
    pub stm_tie: TieRule,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long, value_parser = parse_kind)]
    pub mechanism: MechanismKind,

    #[command(flatten)]
    pub mech: MechanismOptions,
}

#[derive(Args, Debug)]
pub struct AttackArgs {
    /// Without --seed, scm checks every derandomized tree order
    #[arg(long, value_parser = parse_kind)]
    pub mechanism: MechanismKind,

    /// The deviating buyer; every reachable buyer when omitted
    #[arg(long)]
    pub attacker: Option<String>,

    /// Sybil identities besides the attacker
    #[arg(long, default_value_t = 1)]
    pub max_identities: usize,

    /// `auto` or a comma-separated list of decimal bids
    #[arg(long, default_value = "auto")]
    pub bid_grid: String,

    /// Diffusion sets to try: every subset, or full diffusion only
    #[arg(long, value_parser = parse_diffusion, default_value = "all")]
    pub diffusion: DiffusionMode,

    #[arg(long, value_parser = parse_property, default_value = "sp")]
    pub property: Property,

    /// Stop at the first strict violation instead of the largest
    #[arg(long)]
    pub first_violation: bool,

    #[command(flatten)]
    pub mech: MechanismOptions,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Vertices per graph, the seller included
    #[arg(long, default_value_t = 100)]
    pub n: usize,

    /// Attachment degree of Price's model
    #[arg(long, default_value_t = 3)]
    pub m: usize,

    #[arg(long, default_value_t = 1000)]
    pub trials: usize,

    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "nsp,stm,scm,idm,vcg")]
    pub mechanisms: Vec<MechanismKind>,

    /// results.csv path; defaults to --output or stdout
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// summary.csv path
    #[arg(long)]
    pub summary: Option<PathBuf>,

    #[command(flatten)]
    pub mech: MechanismOptions,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Largest vertex count of the exhaustive digraph corpus
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u8).range(1..=6))]
    pub n_max: u8,

    /// Random instances on top of the fixtures and the exhaustive corpus
    #[arg(long, default_value_t = 20)]
    pub trials: usize,

    /// Largest vertex count of the random instances
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u8).range(2..=6))]
    pub random_n: u8,

    #[arg(long, value_parser = parse_kind, value_delimiter = ',', default_value = "nsp,vcg,idm,stm,stm-reserve,scm,osm")]
    pub mechanisms: Vec<MechanismKind>,

    /// Sybil identities besides the attacker
    #[arg(long, default_value_t = 1)]
    pub k_max: usize,

    /// Bid values of the exhaustive corpus
    #[arg(long, value_parser = parse_money, value_delimiter = ',', default_value = "1,2,3")]
    pub bids: Vec<Money>,

    #[command(flatten)]
    pub mech: MechanismOptions,
}

fn parse_kind(s: &str) -> Result<MechanismKind, String> {
    s.parse().map_err(|e: sybilproof_core::Error| e.to_string())
}

fn parse_money(s: &str) -> Result<Money, String> {
    s.parse().map_err(|e: sybilproof_core::Error| e.to_string())
}

fn parse_tie(s: &str) -> Result<TieRule, String> {
    s.parse().map_err(|e: sybilproof_core::Error| e.to_string())
}

fn parse_diffusion(s: &str) -> Result<DiffusionMode, String> {
    s.parse().map_err(|e: sybilproof_core::Error| e.to_string())
}

fn parse_property(s: &str) -> Result<Property, String> {
    s.parse().map_err(|e: sybilproof_core::Error| e.to_string())
}
