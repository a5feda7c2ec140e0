use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use authlab::adversary::Scheme;
use authlab::scenario::{cmd_attacks, cmd_cost, cmd_demo, CommandOutput, ScenarioConfig};
use authlab::SecurityLabel;
use clap::{Args, Parser, Subcommand};

/// Smart-card authentication lab: honest runs, attacks and cost counts.
#[derive(Parser, Debug)]
#[command(name = "authlab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Register, log in, change the password and log in again.
    Demo {
        #[arg(long, default_value = "proposed", value_parser = parse_scheme)]
        scheme: Scheme,
        /// Attempt the password change with a wrong old password.
        #[arg(long)]
        wrong_old_password: bool,
    },
    /// Run every attack against both schemes and print the comparison matrix.
    Attacks,
    /// Print per-phase operation counts for both schemes.
    Cost,
}

#[derive(Args, Debug)]
struct Opts {
    /// Group size: tiny, 512 or 1024.
    #[arg(long, global = true, default_value = "512")]
    params: SecurityLabel,
    #[arg(long, global = true, env = "AUTHLAB_SEED", default_value_t = 1)]
    seed: u64,
    /// Accepted timestamp window of the timestamp-based scheme, in ticks.
    #[arg(long = "delta-t", global = true, default_value_t = 2)]
    delta_t: u64,
    /// Client clock skew in ticks.
    #[arg(long, global = true, allow_hyphen_values = true)]
    skew: Option<i64>,
    /// Password dictionary, one word per line.
    #[arg(long, global = true)]
    dict: Option<PathBuf>,
    /// Write the server record table here after a demo.
    #[arg(long, global = true)]
    state: Option<PathBuf>,
    /// Write the channel transcript here.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    /// Tab-separated output.
    #[arg(long, global = true)]
    machine: bool,
    /// Overwrite a state file even if it fails its checksum.
    #[arg(long, global = true)]
    force: bool,
    /// Store the master key in the state file.
    #[arg(long, global = true)]
    persist_master_key: bool,
    /// Reject a second registration of an existing identity.
    #[arg(long, global = true)]
    no_duplicate_registration: bool,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    Scheme::parse(s).ok_or_else(|| format!("unknown scheme '{s}' (jiang, proposed)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = cli.opts;
    let mut cfg = ScenarioConfig {
        label: o.params,
        seed: o.seed,
        delta_t: o.delta_t,
        dictionary: o.dict,
        skew: o.skew,
        persist_master_key: o.persist_master_key,
        allow_duplicate_registration: !o.no_duplicate_registration,
        force: o.force,
        state: o.state,
        transcript: o.transcript,
        machine: o.machine,
        wrong_old_password: false,
    };
    let out: CommandOutput = match cli.command {
        Command::Demo {
            scheme,
            wrong_old_password,
        } => {
            cfg.wrong_old_password = wrong_old_password;
            cmd_demo(scheme, &cfg)
        }
        Command::Attacks => cmd_attacks(&cfg),
        Command::Cost => cmd_cost(&cfg),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    if !out.stderr.is_empty() {
        eprintln!("authlab: {}", out.stderr);
    }
    ExitCode::from(out.code as u8)
}
