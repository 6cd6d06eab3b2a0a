use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use georep_core::experiments::RateSet;
use georep_core::offline::DEFAULT_BUDGET;
use georep_core::{OracleMode, PolicyKind};

const INSTANCE_SCHEMA: &str = "\
Instance files are JSON:

  {
    \"lambda\": 1.0,
    \"initial_server\": 1,
    \"rates\": [1.0, 1.5],
    \"requests\": [{\"t\": 0.34, \"s\": 2}, {\"t\": 1.01, \"s\": 1}]
  }

Servers are numbered from 1 in ascending rate order. Request times are
strictly increasing; a request at time 0 is allowed only at the initial
server. Unknown fields are rejected.

Exit status: 0 on success, 1 when an invariant is violated, 2 on bad usage
or unreadable input.";

#[derive(Debug, Parser)]
#[command(name = "georep", version, about = "Online data replication toolkit", after_help = INSTANCE_SCHEMA)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an online policy on an instance and print its cost.
    Simulate {
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        #[arg(long)]
        instance: PathBuf,
        /// Also print the copy, transfer and serve events.
        #[arg(long)]
        log: bool,
    },
    /// Compute the offline optimum of an instance.
    Opt {
        #[command(flatten)]
        oracle: OracleArgs,
        #[arg(long)]
        instance: PathBuf,
        /// Also print the optimal schedule's events.
        #[arg(long)]
        log: bool,
    },
    /// Print the per-request cost allocation of the alg1 run as CSV.
    Allocate {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Check schedule validity, special-copy disjointness, allocation
    /// conservation and ratio bounds.
    Verify {
        #[arg(long, conflicts_with = "random", required_unless_present = "random")]
        instance: Option<PathBuf>,
        /// Check a batch of small seeded random instances.
        #[arg(long)]
        random: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 500)]
        count: usize,
    },
    /// Generate an instance file.
    Gen {
        #[command(subcommand)]
        which: GenCommand,
        /// Write here instead of standard output.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
    /// Play the adaptive two-server adversary against policies.
    Adversary {
        #[command(flatten)]
        params: AdversaryArgs,
        /// Policies to play against (comma separated).
        #[arg(long, value_delimiter = ',', value_parser = parse_policy, default_value = "alg1,wang,simple")]
        policies: Vec<PolicyKind>,
    },
    /// Sweep transfer costs and rate sets, printing one CSV row per cell.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_parser = parse_oracle, default_value = "full")]
    pub oracle: OracleMode,
    /// Maximum transition evaluations before the oracle refuses.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct AdversaryArgs {
    #[arg(long, default_value_t = 5.0)]
    pub mu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub epsilon: f64,
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    /// Repeated requests just past the fixed window on a near-equal pair.
    Fig1 {
        #[arg(long, default_value_t = 2000)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-4)]
        delta: f64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Requests spaced so the fixed-window policy renews and falls back each time.
    Fig2 {
        #[arg(long, default_value_t = 2000)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1.0)]
        mu2: f64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Tight case for `1 < mu2 <= 2`.
    Tight1 {
        #[arg(long, default_value_t = 2.0)]
        mu2: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
    },
    /// Tight case for `2 < mu2 <= 3` with an idle period `tau`.
    Tight2 {
        #[arg(long, default_value_t = 2.5)]
        mu2: f64,
        #[arg(long, default_value_t = 1e4)]
        tau: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
    },
    /// Tight case for `mu2 > 3`.
    Tight3 {
        #[arg(long, default_value_t = 4.0)]
        mu2: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Seeded random instance.
    Random {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        m: usize,
        #[arg(long, default_value_t = 1.0)]
        rate_min: f64,
        #[arg(long, default_value_t = 6.0)]
        rate_max: f64,
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
        #[arg(long, default_value_t = 10.0)]
        horizon: f64,
        /// Place the initial copy at a random server instead of the cheapest.
        #[arg(long)]
        random_initial: bool,
    },
    /// The instance the adversary realizes against one policy.
    Adversary {
        #[arg(long, value_parser = parse_policy, default_value = "alg1")]
        policy: PolicyKind,
        #[command(flatten)]
        params: AdversaryArgs,
    },
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// `set1`..`set4`, a comma-separated rate list, or a file holding one.
    /// Repeat for several sets; all four standard sets by default.
    #[arg(long)]
    pub rates: Vec<String>,
    #[arg(long, default_value_t = 50.0)]
    pub lambda_min: f64,
    #[arg(long, default_value_t = 1200.0)]
    pub lambda_max: f64,
    #[arg(long, default_value_t = 25.0)]
    pub lambda_step: f64,
    #[arg(long, default_value_t = 10)]
    pub servers: usize,
    /// Delimited trace file; without it a Poisson trace is generated.
    #[arg(long, conflicts_with = "poisson")]
    pub trace: Option<PathBuf>,
    /// Use a seeded Poisson trace (the default when no trace is given).
    #[arg(long)]
    pub poisson: bool,
    #[arg(long, default_value_t = 11_683)]
    pub total: usize,
    /// Mean gap between consecutive requests of the whole trace.
    #[arg(long, default_value_t = 50.0)]
    pub mean_gap: f64,
    /// Object whose reads form the request sequence.
    #[arg(long, requires = "trace")]
    pub object_id: Option<String>,
    #[arg(long, default_value = "timestamp")]
    pub ts_column: String,
    #[arg(long, default_value = "op")]
    pub op_column: String,
    #[arg(long, default_value = "object_id")]
    pub object_column: String,
    /// Timestamp units per second.
    #[arg(long, default_value_t = 1.0)]
    pub time_units: f64,
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_delimiter = ',', value_parser = parse_policy, default_value = "alg1,wang,simple")]
    pub policies: Vec<PolicyKind>,
    #[arg(long, value_parser = parse_oracle, default_value = "restricted")]
    pub oracle: OracleMode,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Keep only the first K requests.
    #[arg(long)]
    pub prefix: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse()
}

fn parse_oracle(s: &str) -> Result<OracleMode, String> {
    s.parse()
}

/// Reads a rate-set argument, treating an existing path as a rate list file.
pub fn parse_rate_set(arg: &str) -> anyhow::Result<RateSet> {
    let path = std::path::Path::new(arg);
    if !matches!(arg, "set1" | "set2" | "set3" | "set4") && path.is_file() {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{arg}: cannot read: {e}"))?;
        let list: Vec<&str> = text.split(|c: char| c == ',' || c.is_whitespace()).filter(|x| !x.is_empty()).collect();
        return list
            .join(",")
            .parse()
            .map_err(|e: String| anyhow::anyhow!("{arg}: {e}"));
    }
    arg.parse().map_err(|e: String| anyhow::anyhow!(e))
}
