//! End-to-end scenarios behind the command-line front end.
//!
//! Each command returns its exit code and output instead of printing, so the
//! same runs back the binary, the Python bindings and the tests.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::adversary::{
    attack_matrix, load_dictionary, random_credential, JiangWorld, MatrixConfig, ProposedWorld,
    Scheme,
};
use crate::clock::{Party, SimClock};
use crate::cost::measure_costs;
use crate::crypto::{seeded_rng, Digest, SecurityLabel};
use crate::error::Reject;
use crate::jiang::JConfig;
use crate::registry::{export_transcript, load_state, save_state, SaveOptions, Transcript};

pub const EXIT_OK: i32 = 0;
/// A protocol step rejected, or the attack matrix diverged.
pub const EXIT_REJECT: i32 = 1;
/// Bad input or an I/O failure.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub label: SecurityLabel,
    pub seed: u64,
    pub delta_t: u64,
    pub dictionary: Option<PathBuf>,
    pub skew: Option<i64>,
    pub persist_master_key: bool,
    pub allow_duplicate_registration: bool,
    pub force: bool,
    pub state: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub machine: bool,
    /// Demo only: attempt the password change with a wrong old password.
    pub wrong_old_password: bool,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            label: SecurityLabel::Test512,
            seed: 1,
            delta_t: JConfig::default().delta_t,
            dictionary: None,
            skew: None,
            persist_master_key: false,
            allow_duplicate_registration: true,
            force: false,
            state: None,
            transcript: None,
            machine: false,
            wrong_old_password: false,
        }
    }
}

impl ScenarioConfig {
    fn jiang_config(&self) -> JConfig {
        JConfig {
            delta_t: self.delta_t,
            allow_duplicate_registration: self.allow_duplicate_registration,
            ..JConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
    pub transcript: Transcript,
}

impl CommandOutput {
    fn error(msg: impl Into<String>) -> Self {
        CommandOutput {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: msg.into(),
            transcript: Transcript::new(),
        }
    }
}

struct Steps {
    machine: bool,
    out: String,
    first_reject: Option<(&'static str, Reject)>,
}

impl Steps {
    fn new(machine: bool) -> Self {
        Steps {
            machine,
            out: String::new(),
            first_reject: None,
        }
    }

    fn line(&mut self, step: &'static str, result: &Result<Option<&Digest>, Reject>) {
        let (status, detail) = match result {
            Ok(Some(sk)) => (
                "accept".to_string(),
                format!("sk={}", hex::encode(sk.as_bytes())),
            ),
            Ok(None) => ("accept".to_string(), String::new()),
            Err(r) => (r.to_string(), String::new()),
        };
        if self.machine {
            let _ = writeln!(self.out, "step\t{step}\t{status}\t{detail}");
        } else {
            let line = format!("{step:<20}{status:<26}{detail}");
            let _ = writeln!(self.out, "{}", line.trim_end());
        }
        if let (Err(r), None) = (result, self.first_reject) {
            self.first_reject = Some((step, *r));
        }
    }

    fn ok(&self) -> bool {
        self.first_reject.is_none()
    }
}

fn agreed(
    client: &Result<Digest, Reject>,
    server: &Option<Result<Digest, Reject>>,
) -> Result<Digest, Reject> {
    match server {
        Some(Err(r)) => Err(*r),
        None => Err(client.clone().err().unwrap_or(Reject::ServerUnavailable)),
        Some(Ok(s)) => match client {
            Ok(c) if c == s => Ok(c.clone()),
            Ok(_) => Err(Reject::BadMac),
            Err(r) => Err(*r),
        },
    }
}

fn credentials(seed: u64) -> (String, String, String) {
    let mut rng = seeded_rng(seed ^ 0x6465_6d6f);
    let id = format!("user-{}", random_credential(&mut rng, 6));
    let pw = random_credential(&mut rng, 10);
    let new_pw = random_credential(&mut rng, 10);
    (id, pw, new_pw)
}

/// Registration, login with key agreement, password change and a second
/// login under the new password.
pub fn cmd_demo(scheme: Scheme, cfg: &ScenarioConfig) -> CommandOutput {
    if cfg.state.is_some() && scheme == Scheme::Jiang {
        return CommandOutput::error("--state is only supported for the proposed scheme");
    }
    let (id, pw, new_pw) = credentials(cfg.seed);
    let old_pw = if cfg.wrong_old_password {
        format!("{pw}!")
    } else {
        pw.clone()
    };
    let skew = cfg.skew.unwrap_or(0);
    let mut steps = Steps::new(cfg.machine);
    let header = format!(
        "scheme {scheme}, params {}, seed {}, id {id}",
        cfg.label, cfg.seed
    );
    if cfg.machine {
        let _ = writeln!(
            steps.out,
            "demo\t{scheme}\t{}\t{}\t{id}",
            cfg.label, cfg.seed
        );
    } else {
        let _ = writeln!(steps.out, "{header}");
    }

    let transcript = match scheme {
        Scheme::Jiang => {
            let mut w = JiangWorld::new(cfg.label, cfg.jiang_config(), cfg.seed);
            w.clock = SimClock::new().with_skew(Party::Client, skew);
            let card = w.register(&id, &pw);
            steps.line("register", &card.as_ref().map(|_| None).map_err(|r| *r));
            if let Ok(mut card) = card {
                let run = w.login(&card, &id, &pw);
                steps.line(
                    "login",
                    &agreed(&run.client, &run.server)
                        .as_ref()
                        .map(Some)
                        .map_err(|r| *r),
                );
                if steps.ok() {
                    let pc = w.change_password(&mut card, &id, &old_pw, &new_pw);
                    steps.line("password-change", &pc.map(|_| None));
                }
                if steps.ok() {
                    let run = w.login(&card, &id, &new_pw);
                    steps.line(
                        "login-new-password",
                        &agreed(&run.client, &run.server)
                            .as_ref()
                            .map(Some)
                            .map_err(|r| *r),
                    );
                }
            }
            w.channel.transcript().clone()
        }
        Scheme::Proposed => {
            let mut w = ProposedWorld::new(cfg.label, cfg.seed);
            w.clock = SimClock::new().with_skew(Party::Client, skew);
            let card = w.register(&id, &pw);
            steps.line("register", &card.as_ref().map(|_| None).map_err(|r| *r));
            if let Ok(card) = card {
                let run = w.login(&card, &id, &pw);
                steps.line(
                    "login",
                    &agreed(&run.client, &run.server)
                        .as_ref()
                        .map(Some)
                        .map_err(|r| *r),
                );
                let mut card = Some(card);
                if steps.ok() {
                    let pc = w.change_password(card.as_ref().unwrap(), &id, &old_pw, &new_pw);
                    steps.line(
                        "password-change",
                        &pc.as_ref().map(|_| None).map_err(|r| *r),
                    );
                    card = pc.ok();
                }
                if let (true, Some(card)) = (steps.ok(), card) {
                    let run = w.login(&card, &id, &new_pw);
                    steps.line(
                        "login-new-password",
                        &agreed(&run.client, &run.server)
                            .as_ref()
                            .map(Some)
                            .map_err(|r| *r),
                    );
                }
            }
            if let Some(path) = &cfg.state {
                let opts = SaveOptions {
                    persist_master_key: cfg.persist_master_key,
                    force: cfg.force,
                };
                if let Err(e) = save_state(&w.server, path, opts) {
                    return CommandOutput::error(format!("saving {}: {e}", path.display()));
                }
                match load_state(path, Some(w.server.master_key())) {
                    Ok(s) if s.records().len() == w.server.records().len() => {}
                    Ok(_) => return CommandOutput::error("state file did not round-trip"),
                    Err(e) => {
                        return CommandOutput::error(format!("reloading {}: {e}", path.display()))
                    }
                }
                if !cfg.machine {
                    let _ = writeln!(steps.out, "state written to {}", path.display());
                }
            }
            w.channel.transcript().clone()
        }
    };

    let code = match steps.first_reject {
        None => {
            let _ = writeln!(
                steps.out,
                "{}",
                if cfg.machine {
                    "result\taccept"
                } else {
                    "result: accept"
                }
            );
            EXIT_OK
        }
        Some((step, r)) => {
            if cfg.machine {
                let _ = writeln!(steps.out, "result\t{}\t{step}", r.as_str());
            } else {
                let _ = writeln!(steps.out, "result: {r} at {step}");
            }
            EXIT_REJECT
        }
    };
    finish(cfg, code, steps.out, transcript)
}

/// Runs the attack matrix. Exit 0 iff every compared row matches.
pub fn cmd_attacks(cfg: &ScenarioConfig) -> CommandOutput {
    let dictionary = match &cfg.dictionary {
        Some(path) => match load_dictionary(path) {
            Ok(d) => Some(d),
            Err(e) => return CommandOutput::error(format!("reading {}: {e}", path.display())),
        },
        None => None,
    };
    let mc = MatrixConfig {
        label: cfg.label,
        seed: cfg.seed,
        jiang: cfg.jiang_config(),
        dictionary,
        skew: cfg.skew,
    };
    let m = attack_matrix(&mc);
    let mut out = if cfg.machine {
        m.render_machine()
    } else {
        m.render_text()
    };
    let code = if m.matches_expected() {
        EXIT_OK
    } else {
        if !cfg.machine {
            let _ = writeln!(out, "diverging rows: {}", m.divergences().join(", "));
        }
        EXIT_REJECT
    };
    finish(cfg, code, out, m.transcript.clone())
}

/// Prints measured operation counts for both schemes. Exit 0 iff the
/// improved scheme stays within tolerance of its published figures.
pub fn cmd_cost(cfg: &ScenarioConfig) -> CommandOutput {
    let mut out = String::new();
    let mut code = EXIT_OK;
    for scheme in [Scheme::Jiang, Scheme::Proposed] {
        match measure_costs(scheme, cfg.label, cfg.seed) {
            Ok(r) => {
                out.push_str(&if cfg.machine {
                    r.render_machine()
                } else {
                    r.render_text()
                });
                if scheme == Scheme::Proposed && !r.conforms() {
                    code = EXIT_REJECT;
                }
            }
            Err(e) => return CommandOutput::error(format!("{scheme} run failed: {e}")),
        }
    }
    finish(cfg, code, out, Transcript::new())
}

fn finish(
    cfg: &ScenarioConfig,
    code: i32,
    stdout: String,
    transcript: Transcript,
) -> CommandOutput {
    if let Some(path) = &cfg.transcript {
        if let Err(e) = export_transcript(&transcript, path) {
            return CommandOutput::error(format!("writing {}: {e}", path.display()));
        }
    }
    CommandOutput {
        code,
        stdout,
        stderr: String::new(),
        transcript,
    }
}
