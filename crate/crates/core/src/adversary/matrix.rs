//! Runs every attack against both schemes and lays the results out next to
//! the expected resistance of each scheme.

use std::fmt::Write as _;

use rand::Rng;

use crate::crypto::{seeded_rng, Digest, SecurityLabel};
use crate::jiang::JConfig;
use crate::registry::Transcript;

use super::attacks::*;
use super::dictionary::{default_dictionary, random_credential};
use super::world::{JiangWorld, ProposedWorld};
use super::{AdversaryState, AttackReport, Capability, Hooks, Scheme};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// The attack failed or the property holds.
    Resists,
    /// The attack succeeded or the property is missing.
    Vulnerable,
    NotRun,
}

impl Cell {
    pub fn symbol(self) -> &'static str {
        match self {
            Cell::Resists => "√",
            Cell::Vulnerable => "×",
            Cell::NotRun => "-",
        }
    }

    pub fn ascii(self) -> &'static str {
        match self {
            Cell::Resists => "v",
            Cell::Vulnerable => "x",
            Cell::NotRun => "-",
        }
    }

    fn of(report: &Option<AttackReport>) -> Cell {
        match report {
            None => Cell::NotRun,
            Some(r) if r.succeeded() => Cell::Vulnerable,
            Some(_) => Cell::Resists,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub attribute: &'static str,
    /// Part of the published comparison, as opposed to a supplementary check.
    pub compared: bool,
    pub expected: (Cell, Cell),
    pub jiang: Option<AttackReport>,
    pub proposed: Option<AttackReport>,
}

impl MatrixRow {
    pub fn cells(&self) -> (Cell, Cell) {
        (Cell::of(&self.jiang), Cell::of(&self.proposed))
    }

    pub fn matches(&self) -> bool {
        self.cells() == self.expected
    }
}

#[derive(Debug, Clone)]
pub struct MatrixConfig {
    pub label: SecurityLabel,
    pub seed: u64,
    pub jiang: JConfig,
    /// Defaults to 1000 seeded words.
    pub dictionary: Option<Vec<String>>,
    /// Client clock skew for the time-synchronisation row. Defaults to
    /// `delta_t + 1` for the original scheme and `10 * delta_t` for the
    /// improved one.
    pub skew: Option<i64>,
}

impl MatrixConfig {
    pub fn with_seed(seed: u64) -> Self {
        MatrixConfig {
            seed,
            ..Self::default()
        }
    }
}

impl Default for MatrixConfig {
    fn default() -> Self {
        MatrixConfig {
            label: SecurityLabel::Test512,
            seed: 1,
            jiang: JConfig::default(),
            dictionary: None,
            skew: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AttackMatrix {
    pub seed: u64,
    pub rows: Vec<MatrixRow>,
    /// Every channel's traffic, scenario by scenario.
    pub transcript: Transcript,
}

impl AttackMatrix {
    pub fn matches_expected(&self) -> bool {
        self.rows
            .iter()
            .filter(|r| r.compared)
            .all(MatrixRow::matches)
    }

    pub fn divergences(&self) -> Vec<&'static str> {
        self.rows
            .iter()
            .filter(|r| !r.matches())
            .map(|r| r.attribute)
            .collect()
    }

    pub fn reports(&self) -> impl Iterator<Item = &AttackReport> {
        self.rows
            .iter()
            .flat_map(|r| r.jiang.iter().chain(r.proposed.iter()))
    }

    pub fn render_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.attribute.chars().count())
            .max()
            .unwrap_or(0)
            + 2;
        let mut out = String::new();
        let header = |out: &mut String, title: &str| {
            let _ = writeln!(
                out,
                "{:<width$}{:<7}{:<10}{:<10}status",
                title, "jiang", "proposed", "expected"
            );
        };
        let line = |out: &mut String, r: &MatrixRow| {
            let (j, p) = r.cells();
            let exp = format!("{} {}", r.expected.0.symbol(), r.expected.1.symbol());
            let status = if r.matches() { "ok" } else { "DIVERGES" };
            let _ = writeln!(
                out,
                "{:<width$}{:<7}{:<10}{:<10}{status}",
                r.attribute,
                j.symbol(),
                p.symbol(),
                exp
            );
        };
        header(&mut out, "security attribute");
        for r in self.rows.iter().filter(|r| r.compared) {
            line(&mut out, r);
        }
        out.push('\n');
        header(&mut out, "supplementary");
        for r in self.rows.iter().filter(|r| !r.compared) {
            line(&mut out, r);
        }
        let compared: Vec<_> = self.rows.iter().filter(|r| r.compared).collect();
        let ok = compared.iter().filter(|r| r.matches()).count();
        let _ = writeln!(
            out,
            "\nseed {}: {ok}/{} compared rows match",
            self.seed,
            compared.len()
        );
        out
    }

    /// Tab-separated rows, then one line per report.
    pub fn render_machine(&self) -> String {
        let mut out = String::new();
        for r in &self.rows {
            let (j, p) = r.cells();
            let _ = writeln!(
                out,
                "row\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.attribute,
                if r.compared {
                    "compared"
                } else {
                    "supplementary"
                },
                j.ascii(),
                p.ascii(),
                r.expected.0.ascii(),
                r.expected.1.ascii(),
                if r.matches() { "ok" } else { "diverges" }
            );
        }
        out.push_str(&self.render_reports());
        out
    }

    pub fn render_reports(&self) -> String {
        self.reports()
            .map(|r| format!("report\t{}\n", r.to_line()))
            .collect()
    }
}

struct Fixture {
    label: SecurityLabel,
    seed: u64,
    jiang: JConfig,
    dictionary: Vec<String>,
    victim: String,
    password: String,
    decoys: Vec<String>,
    skew: Option<i64>,
}

impl Fixture {
    fn jiang_world(&self, row: u64) -> JiangWorld {
        JiangWorld::new(
            self.label,
            self.jiang,
            self.seed.wrapping_mul(1_000_003).wrapping_add(2 * row),
        )
    }

    fn proposed_world(&self, row: u64) -> ProposedWorld {
        ProposedWorld::new(
            self.label,
            self.seed.wrapping_mul(1_000_003).wrapping_add(2 * row + 1),
        )
    }

    fn adversary(&self, ids: Vec<String>) -> AdversaryState {
        AdversaryState::new(self.dictionary.clone(), ids)
    }

    fn wrong_password(&self) -> String {
        format!("{}x", self.password)
    }
}

fn eavesdropping(hooks_on: bool) -> Hooks {
    Hooks {
        eavesdrop: hooks_on,
        ..Hooks::default()
    }
}

fn grant(adv: &mut AdversaryState, caps: &[Capability]) {
    for &c in caps {
        adv.grant(c);
    }
}

fn sk_of(run_server: &Option<Result<Digest, crate::error::Reject>>) -> Digest {
    match run_server {
        Some(Ok(sk)) => sk.clone(),
        _ => Digest::zero(0),
    }
}

/// Runs every scenario for the given configuration.
pub fn attack_matrix(config: &MatrixConfig) -> AttackMatrix {
    let mut rng = seeded_rng(config.seed);
    let dictionary = config
        .dictionary
        .clone()
        .unwrap_or_else(|| default_dictionary(config.seed, 1000));
    let password = if dictionary.is_empty() {
        random_credential(&mut rng, 6)
    } else {
        dictionary[rng.gen_range(0..dictionary.len())].clone()
    };
    let victim = random_credential(&mut rng, 8);
    let mut decoys = Vec::new();
    while decoys.len() < 4 {
        let d = random_credential(&mut rng, 8);
        if d != victim && !decoys.contains(&d) {
            decoys.push(d);
        }
    }
    let fx = Fixture {
        label: config.label,
        seed: config.seed,
        jiang: config.jiang,
        dictionary,
        victim,
        password,
        decoys,
        skew: config.skew,
    };
    let mut transcript = Transcript::new();
    let mut rows = Vec::new();
    let v = Cell::Vulnerable;
    let r = Cell::Resists;

    type Scenario =
        fn(&Fixture, u64, &mut Transcript) -> (Option<AttackReport>, Option<AttackReport>);
    let table: [(&'static str, bool, (Cell, Cell), Scenario); 15] = [
        ("user anonymity", true, (v, r), row_anonymity),
        ("insider attack", true, (v, r), row_insider),
        ("on-line password guessing", true, (v, r), row_online),
        ("off-line password guessing", true, (v, r), row_offline),
        ("forward secrecy", true, (r, r), row_forward_secrecy),
        ("user impersonation", true, (v, r), row_impersonation),
        ("replay attack", true, (r, r), row_replay),
        ("time synchronization", true, (v, r), row_time_sync),
        ("efficient login", true, (v, r), row_efficient_login),
        (
            "user-friendly password change",
            true,
            (v, r),
            row_password_change,
        ),
        (
            "session key verification",
            true,
            (v, r),
            row_key_verification,
        ),
        ("smart card revocation", true, (v, r), row_revocation),
        (
            "perfect forward secrecy (master key)",
            false,
            (v, r),
            row_pfs,
        ),
        (
            "server impersonation",
            false,
            (Cell::NotRun, r),
            row_server_impersonation,
        ),
        (
            "ephemeral secret leakage",
            false,
            (Cell::NotRun, r),
            row_ephemeral,
        ),
    ];
    for (i, (attribute, compared, expected, run)) in table.into_iter().enumerate() {
        let (jiang, proposed) = run(&fx, i as u64, &mut transcript);
        rows.push(MatrixRow {
            attribute,
            compared,
            expected,
            jiang,
            proposed,
        });
    }
    AttackMatrix {
        seed: config.seed,
        rows,
        transcript,
    }
}

type Pair = (Option<AttackReport>, Option<AttackReport>);

fn row_anonymity(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    jw.channel.set_hooks(eavesdropping(true));
    jw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::Eavesdrop]);
    adv.record_all(&jw.channel).expect("granted");
    let j = atk_anonymity(Scheme::Jiang, jw.params(), &adv, &fx.victim);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    pw.login(&card, &fx.victim, &fx.password);
    pw.login(&card, &fx.victim, &fx.password);
    let mut ids = fx.decoys.clone();
    ids.push(fx.victim.clone());
    let mut adv = fx.adversary(ids);
    grant(&mut adv, &[Capability::Eavesdrop]);
    adv.record_all(&pw.channel).expect("granted");
    let p = atk_anonymity(Scheme::Proposed, pw.params(), &adv, &fx.victim)
        .note("true identity included in the candidate list");
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_insider(fx: &Fixture, row: u64, _t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    jw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::ObserveRegistration]);
    for b in jw.registration_traffic() {
        adv.observe_registration(b).expect("granted");
    }
    let j = atk_insider(Scheme::Jiang, jw.params(), &adv, &fx.victim, &fx.password);

    let mut pw = fx.proposed_world(row);
    pw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::ObserveRegistration]);
    for b in pw.registration_traffic() {
        adv.observe_registration(b).expect("granted");
    }
    let p = atk_insider(
        Scheme::Proposed,
        pw.params(),
        &adv,
        &fx.victim,
        &fx.password,
    );
    (Some(j), Some(p))
}

fn row_online(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    jw.channel.set_hooks(eavesdropping(true));
    jw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::DumpCard, Capability::Eavesdrop]);
    adv.dump_jiang_card(&card).expect("granted");
    adv.record_all(&jw.channel).expect("granted");
    let j = atk_online_guess_jiang(&mut jw, &adv, &fx.password);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(fx.decoys.clone());
    grant(&mut adv, &[Capability::DumpCard]);
    adv.dump_card(&card).expect("granted");
    let p = atk_online_guess_proposed(&mut pw, &adv, &fx.password);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_offline(fx: &Fixture, row: u64, _t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::DumpCard, Capability::Register]);
    adv.dump_jiang_card(&card).expect("granted");
    let extraction = atk_extract_user_key_jiang(&mut jw, &mut adv, &fx.victim, "adversary");
    let mut j = atk_offline_guess_jiang(jw.params(), &adv, &fx.victim, &fx.password);
    if let Err(e) = extraction {
        j = j.note(format!("key extraction failed: {e}"));
    }
    j = j.messages(jw.channel.message_count());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(fx.decoys.clone());
    grant(&mut adv, &[Capability::DumpCard, Capability::Register]);
    adv.dump_card(&card).expect("granted");
    let extraction = atk_extract_user_key_proposed(&mut pw, &adv, &fx.victim, "adversary");
    let mut p = atk_offline_guess_proposed(pw.params(), &adv, &fx.password)
        .messages(pw.channel.message_count());
    if let Err(e) = extraction {
        p = p.note(format!("key extraction failed: {e}"));
    }
    (Some(j), Some(p))
}

fn row_forward_secrecy(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    jw.channel.set_hooks(eavesdropping(true));
    let run = jw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(
        &mut adv,
        &[Capability::CompromiseUserKey, Capability::Eavesdrop],
    );
    adv.record_all(&jw.channel).expect("granted");
    let params = jw.params().clone();
    let mut ops = crate::counter::OpCounter::new();
    let h = params.hash_to_group(fx.victim.as_bytes(), &mut ops);
    let user_key = params.mod_exp(&h, jw.server.master_key().value(), &mut ops);
    adv.learn_extracted_key(&fx.victim, user_key)
        .expect("granted");
    let j = atk_forward_secrecy(
        Scheme::Jiang,
        &params,
        &adv,
        &fx.victim,
        &sk_of(&run.server),
    );
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    let run = pw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(
        &mut adv,
        &[Capability::CompromiseUserKey, Capability::Eavesdrop],
    );
    adv.record_all(&pw.channel).expect("granted");
    let record = pw.server.records().get(&card.nid).expect("record").clone();
    let x_i = pw.server.user_key(&record, &mut ops);
    adv.compromise_user_key(&fx.victim, &x_i).expect("granted");
    let p = atk_forward_secrecy(
        Scheme::Proposed,
        pw.params(),
        &adv,
        &fx.victim,
        &sk_of(&run.server),
    );
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_impersonation(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    jw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::Register]);
    let extraction = atk_extract_user_key_jiang(&mut jw, &mut adv, &fx.victim, "adversary");
    let mut j = atk_impersonate_user_jiang(&mut jw, &adv, &fx.victim);
    if let Err(e) = extraction {
        j = j.note(format!("key extraction failed: {e}"));
    }
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let mut adv = fx.adversary(fx.decoys.clone());
    grant(&mut adv, &[Capability::DumpCard]);
    adv.dump_card(&card).expect("granted");
    let p = atk_impersonate_user_proposed(&mut pw, &adv, 256);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_replay(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    jw.channel.set_hooks(eavesdropping(true));
    jw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::Eavesdrop]);
    adv.record_all(&jw.channel).expect("granted");
    let mut j = atk_replay_jiang(&mut jw, &adv, 1);
    let horizon = jw.server.config().delta_t + 2;
    let sweep = replay_window_sweep(&mut jw, &adv, horizon);
    let sweep: Vec<String> = sweep
        .iter()
        .map(|(d, r)| format!("{d}:{}", r.map_or("accept", |r| r.as_str())))
        .collect();
    j = j.note(format!("window sweep {}", sweep.join(",")));
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    pw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::Eavesdrop]);
    adv.record_all(&pw.channel).expect("granted");
    let p = atk_replay_proposed(&mut pw, &adv);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_time_sync(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let delta_t = fx.jiang.delta_t as i64;
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    let j = demo_clock_skew_jiang(
        &mut jw,
        &card,
        &fx.victim,
        &fx.password,
        fx.skew.unwrap_or(delta_t + 1),
    );
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let p = demo_clock_skew_proposed(
        &mut pw,
        &card,
        &fx.victim,
        &fx.password,
        fx.skew.unwrap_or(10 * delta_t.max(1)),
    );
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_efficient_login(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let wrong = fx.wrong_password();
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    let j = demo_wasted_roundtrip_jiang(&mut jw, &card, &fx.victim, &wrong);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let p = demo_wasted_roundtrip_proposed(&mut pw, &card, &fx.victim, &wrong);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_password_change(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let new = format!("{}2", fx.password);
    let mut jw = fx.jiang_world(row);
    let mut card = jw.register(&fx.victim, &fx.password).expect("registration");
    let j = demo_password_change_jiang(&mut jw, &mut card, &fx.victim, &fx.password, &new);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let mut card = pw.register(&fx.victim, &fx.password).expect("registration");
    let mut p = demo_password_change_proposed(&mut pw, &mut card, &fx.victim, &fx.password, &new);
    p = p.note(format!(
        "new password accepted: {}",
        pw.login(&card, &fx.victim, &new).accepted()
    ));
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_key_verification(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    let j = demo_session_key_verification_jiang(&mut jw, &card, &fx.victim, &fx.password);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    let p = demo_session_key_verification_proposed(&mut pw, &card, &fx.victim, &fx.password);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_revocation(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let new = format!("{}2", fx.password);
    let mut jw = fx.jiang_world(row);
    let j = demo_revocation_jiang(&mut jw, &fx.victim, &fx.password, &new);
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let p = demo_revocation_proposed(&mut pw, &fx.victim, &fx.password, &new);
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_pfs(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut jw = fx.jiang_world(row);
    let card = jw.register(&fx.victim, &fx.password).expect("registration");
    jw.channel.set_hooks(eavesdropping(true));
    let run = jw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(
        &mut adv,
        &[Capability::CompromiseMasterKey, Capability::Eavesdrop],
    );
    adv.record_all(&jw.channel).expect("granted");
    adv.compromise_master_key(jw.server.master_key(), vec![])
        .expect("granted");
    let j = atk_break_pfs_jiang(jw.params(), &adv, &sk_of(&run.server));
    t.extend(jw.channel.transcript());

    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    let run = pw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(
        &mut adv,
        &[Capability::CompromiseMasterKey, Capability::Eavesdrop],
    );
    adv.record_all(&pw.channel).expect("granted");
    let records = pw.server.records().values().cloned().collect();
    adv.compromise_master_key(pw.server.master_key(), records)
        .expect("granted");
    let p = atk_break_pfs_proposed(pw.params(), &adv, &sk_of(&run.server));
    t.extend(pw.channel.transcript());
    (Some(j), Some(p))
}

fn row_server_impersonation(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    pw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(vec![]);
    grant(&mut adv, &[Capability::Eavesdrop]);
    adv.record_all(&pw.channel).expect("granted");
    let p = atk_impersonate_server(&mut pw, &adv, (&card, &fx.victim, &fx.password), 1000);
    t.extend(pw.channel.transcript());
    (None, Some(p))
}

fn row_ephemeral(fx: &Fixture, row: u64, t: &mut Transcript) -> Pair {
    let mut pw = fx.proposed_world(row);
    let card = pw.register(&fx.victim, &fx.password).expect("registration");
    pw.channel.set_hooks(eavesdropping(true));
    let run = pw.login(&card, &fx.victim, &fx.password);
    let mut adv = fx.adversary(fx.decoys.clone());
    grant(
        &mut adv,
        &[Capability::LeakEphemeral, Capability::Eavesdrop],
    );
    adv.record_all(&pw.channel).expect("granted");
    adv.leak_ephemeral(run.alpha.as_ref(), run.beta.as_ref())
        .expect("granted");
    let p = atk_ephemeral_leak(pw.params(), &adv, &sk_of(&run.server));
    t.extend(pw.channel.transcript());
    (None, Some(p))
}
