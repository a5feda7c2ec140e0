//! Acceptance suite. One PASS/FAIL line per criterion; exits nonzero if any
//! criterion fails.

mod common;

use std::collections::BTreeSet;
use std::io;
use std::time::{Duration, Instant};

use authlab::adversary::*;
use authlab::clock::Party;
use authlab::cost::measure_costs;
use authlab::crypto::{seeded_rng, LabRng};
use authlab::proposed::{begin_registration, PConfirmMsg, PLoginMsg, PReplyMsg, PServerState};
use authlab::registry::{encode_state, load_state, save_state, save_state_with_hook, SaveOptions};
use authlab::*;
use rand::{Rng, RngCore};

const COMPLETENESS_RUNS: u64 = 100;
const COMPLETENESS_BUDGET: Duration = Duration::from_secs(10);
const MATRIX_BUDGET: Duration = Duration::from_secs(60);
const OFFLINE_FIXTURES: u64 = 20;
const PFS_TRANSCRIPTS: u64 = 50;
const HASH_TOLERANCE: u64 = 2;
const WRONG_CREDENTIAL_ATTEMPTS: u64 = 1000;
const BIT_FLIPS: u64 = 10_000;
const PERSISTED_USERS: usize = 1000;

/// Proposed row of the published cost table as (T_h, T_E, T_M).
const PUBLISHED_PROPOSED: [(Phase, u64, u64, u64); 4] = [
    (Phase::Registration, 4, 0, 0),
    (Phase::Login, 4, 1, 0),
    (Phase::Authentication, 8, 3, 0),
    (Phase::PasswordChange, 6, 0, 0),
];

type Verdict = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Verdict + 'a>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> LabRng {
    seeded_rng(seed)
}

fn completeness() -> Verdict {
    let start = Instant::now();
    for i in 0..COMPLETENESS_RUNS {
        let mut r = rng(0xc0_0000 + i);
        let id = random_credential(&mut r, 8);
        let pw = random_credential(&mut r, 10);

        let mut pw_world = ProposedWorld::new(SecurityLabel::Test512, 0x1000 + i);
        let card = pw_world
            .register(&id, &pw)
            .map_err(|e| format!("proposed register: {e}"))?;
        let run = pw_world.login(&card, &id, &pw);
        let client = run
            .client
            .clone()
            .map_err(|e| format!("proposed run {i}: client {e}"))?;
        let server = run
            .server
            .clone()
            .ok_or("proposed: no server key")?
            .map_err(|e| format!("proposed run {i}: server {e}"))?;
        ensure(client == server, || {
            format!("proposed run {i}: keys differ")
        })?;
        let rec = pw_world
            .server
            .records()
            .get(&card.nid)
            .ok_or("record missing")?;
        let x_i = common::user_key(
            pw_world.params(),
            &id,
            rec.n,
            &rec.id_sc,
            pw_world.server.master_key().value(),
        );
        let expected = common::proposed_session_key(
            pw_world.params(),
            &id,
            run.alpha.as_ref().unwrap().value(),
            run.beta.as_ref().unwrap().value(),
            &x_i,
        );
        ensure(client.as_bytes() == expected.as_slice(), || {
            format!("proposed run {i}: key differs from oracle")
        })?;

        let mut jw = JiangWorld::new(SecurityLabel::Test512, Default::default(), 0x2000 + i);
        let card = jw
            .register(&id, &pw)
            .map_err(|e| format!("jiang register: {e}"))?;
        let run = jw.login(&card, &id, &pw);
        let client = run
            .client
            .clone()
            .map_err(|e| format!("jiang run {i}: client {e}"))?;
        let server = run
            .server
            .clone()
            .ok_or("jiang: no server key")?
            .map_err(|e| format!("jiang run {i}: server {e}"))?;
        ensure(client == server, || format!("jiang run {i}: keys differ"))?;
        let expected = common::jiang_session_key(
            jw.params(),
            run.login.d.value(),
            jw.server.master_key().value(),
        );
        ensure(client.as_bytes() == expected.as_slice(), || {
            format!("jiang run {i}: key differs from oracle")
        })?;
    }

    let tiny = GroupParams::for_label(SecurityLabel::TestTiny);
    let q = tiny.q().clone();
    let exps = q.clone() - 1u8;
    let want_pairs = (&exps * &exps).to_string().parse::<usize>().unwrap();
    let want_alphas = exps.to_string().parse::<usize>().unwrap();
    let mut pairs = BTreeSet::new();
    let mut alphas = BTreeSet::new();
    let mut tiny_runs = 0u64;
    let mut seed = 0u64;
    while (pairs.len() < want_pairs || alphas.len() < want_alphas) && seed < 50_000 {
        seed += 1;
        let mut r = rng(0x7000_0000 + seed);
        let id = random_credential(&mut r, 5);
        let pw = random_credential(&mut r, 5);
        let mut pw_world = ProposedWorld::new(SecurityLabel::TestTiny, seed);
        let card = pw_world
            .register(&id, &pw)
            .map_err(|e| format!("tiny proposed register: {e}"))?;
        let run = pw_world.login(&card, &id, &pw);
        ensure(
            run.accepted() && Some(&run.client) == run.server.as_ref(),
            || format!("tiny proposed seed {seed}: {:?}", run.first_reject()),
        )?;
        pairs.insert((
            run.alpha.unwrap().value().clone(),
            run.beta.unwrap().value().clone(),
        ));

        let mut jw = JiangWorld::new(SecurityLabel::TestTiny, Default::default(), seed);
        let card = jw
            .register(&id, &pw)
            .map_err(|e| format!("tiny jiang register: {e}"))?;
        let run = jw.login(&card, &id, &pw);
        ensure(
            run.accepted() && Some(&run.client) == run.server.as_ref(),
            || format!("tiny jiang seed {seed}: {:?}", run.first_reject()),
        )?;
        alphas.insert(run.alpha.value().clone());
        tiny_runs += 2;
    }
    ensure(pairs.len() == want_pairs, || {
        format!(
            "tiny: only {} of {want_pairs} (alpha, beta) pairs covered",
            pairs.len()
        )
    })?;
    ensure(alphas.len() == want_alphas, || {
        format!(
            "tiny: only {} of {want_alphas} alphas covered",
            alphas.len()
        )
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < COMPLETENESS_BUDGET, || {
        format!("took {elapsed:?}")
    })?;
    Ok(format!(
        "{COMPLETENESS_RUNS} runs per scheme on test-512, {tiny_runs} tiny runs covering all {want_pairs} exponent pairs, {:.2}s",
        elapsed.as_secs_f64()
    ))
}

fn matrix_reproduction(m: &AttackMatrix, elapsed: Duration) -> Verdict {
    ensure(elapsed < MATRIX_BUDGET, || format!("took {elapsed:?}"))?;
    let compared: Vec<_> = m.rows.iter().filter(|r| r.compared).collect();
    ensure(compared.len() == 12, || {
        format!("{} compared rows", compared.len())
    })?;
    for row in &compared {
        ensure(row.matches(), || {
            format!("{} diverges: {:?}", row.attribute, row.cells())
        })?;
        for rep in [&row.jiang, &row.proposed].into_iter().flatten() {
            ensure(
                !matches!(rep.evidence, Evidence::MissingCapability(_)),
                || format!("{} {}: no evidence", row.attribute, rep.scheme),
            )?;
            ensure(rep.succeeded() == rep.evidence.verifies(), || {
                format!(
                    "{} {}: outcome not backed by evidence",
                    row.attribute, rep.scheme
                )
            })?;
        }
    }
    ensure(m.matches_expected(), || {
        format!("divergences: {:?}", m.divergences())
    })?;
    Ok(format!("12/12 rows match, {:.2}s", elapsed.as_secs_f64()))
}

fn offline_guessing() -> Verdict {
    let mut r = rng(0x0ff1);
    let mut total_probes = 0;
    for i in 0..OFFLINE_FIXTURES {
        let size = r.gen_range(20..=400);
        let dict = default_dictionary(r.next_u64(), size);
        let rank = r.gen_range(0..dict.len());
        let password = dict[rank].clone();
        let victim = random_credential(&mut r, 8);
        let decoys: Vec<String> = (0..4)
            .map(|_| random_credential(&mut r, 8))
            .filter(|d| *d != victim)
            .collect();

        let mut jw = JiangWorld::new(SecurityLabel::Test512, Default::default(), 0x3000 + i);
        let card = jw.register(&victim, &password).map_err(|e| e.to_string())?;
        let mut adv = AdversaryState::new(dict.clone(), vec![]);
        adv.grant(Capability::DumpCard).grant(Capability::Register);
        adv.dump_jiang_card(&card).unwrap();
        let key = atk_extract_user_key_jiang(&mut jw, &mut adv, &victim, "adversary-pw")
            .map_err(|e| e.to_string())?;
        let h = common::hash_to_group(jw.params(), victim.as_bytes());
        let oracle_key = h.modpow(jw.server.master_key().value(), jw.params().p());
        ensure(key.value() == &oracle_key, || {
            format!("fixture {i}: extracted key is not h(ID)^x")
        })?;
        let before = jw.channel.message_count();
        let rep = atk_offline_guess_jiang(jw.params(), &adv, &victim, &password);
        let sent = jw.channel.message_count() - before;
        ensure(rep.succeeded(), || {
            format!("fixture {i}: jiang not recovered")
        })?;
        ensure(rep.probes == rank as u64 + 1, || {
            format!("fixture {i}: {} iterations, rank {rank}", rep.probes)
        })?;
        ensure(sent == 0 && rep.messages == 0, || {
            format!("fixture {i}: {sent} messages")
        })?;
        total_probes += rep.probes;

        let mut pw_world = ProposedWorld::new(SecurityLabel::Test512, 0x4000 + i);
        let card = pw_world
            .register(&victim, &password)
            .map_err(|e| e.to_string())?;
        let mut adv = AdversaryState::new(dict.clone(), decoys.clone());
        adv.grant(Capability::DumpCard);
        adv.dump_card(&card).unwrap();
        let rep = atk_offline_guess_proposed(pw_world.params(), &adv, &password);
        let joint = (decoys.len() * dict.len()) as u64;
        ensure(!rep.succeeded(), || {
            format!("fixture {i}: proposed recovered a password")
        })?;
        ensure(
            matches!(
                rep.evidence,
                Evidence::Secret {
                    recovered: None,
                    ..
                }
            ),
            || format!("fixture {i}: proposed returned a candidate"),
        )?;
        ensure(rep.probes == joint, || {
            format!("fixture {i}: {} of {joint} joint probes", rep.probes)
        })?;
    }
    Ok(format!("{OFFLINE_FIXTURES} fixtures, rank+1 iterations each ({total_probes} total), 0 messages; proposed exhausted joint space"))
}

fn forward_secrecy_boundary() -> Verdict {
    for i in 0..PFS_TRANSCRIPTS {
        let mut r = rng(0x5000 + i);
        let id = random_credential(&mut r, 8);
        let pw = random_credential(&mut r, 8);

        let mut jw = JiangWorld::new(SecurityLabel::Test512, Default::default(), 0x5100 + i);
        let card = jw.register(&id, &pw).map_err(|e| e.to_string())?;
        jw.channel.set_hooks(Hooks {
            eavesdrop: true,
            ..Hooks::default()
        });
        let run = jw.login(&card, &id, &pw);
        let genuine = run.server.clone().unwrap().map_err(|e| e.to_string())?;
        let mut adv = AdversaryState::new(vec![], vec![]);
        adv.grant(Capability::CompromiseMasterKey)
            .grant(Capability::Eavesdrop);
        adv.record_all(&jw.channel).unwrap();
        adv.compromise_master_key(jw.server.master_key(), vec![])
            .unwrap();
        let rep = atk_break_pfs_jiang(jw.params(), &adv, &genuine);
        let oracle = common::jiang_session_key(
            jw.params(),
            run.login.d.value(),
            jw.server.master_key().value(),
        );
        let hit = match &rep.evidence {
            Evidence::SessionKey { candidates, .. } => {
                candidates.iter().any(|c| c.as_bytes() == oracle.as_slice())
            }
            _ => false,
        };
        ensure(
            rep.succeeded() && hit && genuine.as_bytes() == oracle.as_slice(),
            || format!("jiang transcript {i}: key not recovered"),
        )?;

        let mut pw_world = ProposedWorld::new(SecurityLabel::Test512, 0x5200 + i);
        let card = pw_world.register(&id, &pw).map_err(|e| e.to_string())?;
        pw_world.channel.set_hooks(Hooks {
            eavesdrop: true,
            ..Hooks::default()
        });
        let run = pw_world.login(&card, &id, &pw);
        let genuine = run.server.clone().unwrap().map_err(|e| e.to_string())?;
        let mut adv = AdversaryState::new(vec![], vec![]);
        adv.grant(Capability::CompromiseMasterKey)
            .grant(Capability::Eavesdrop);
        adv.record_all(&pw_world.channel).unwrap();
        let records = pw_world.server.records().values().cloned().collect();
        adv.compromise_master_key(pw_world.server.master_key(), records)
            .unwrap();
        let rep = atk_break_pfs_proposed(pw_world.params(), &adv, &genuine);
        let tried = match &rep.evidence {
            Evidence::SessionKey { candidates, .. } => candidates.len(),
            _ => 0,
        };
        ensure(!rep.succeeded() && tried > 0, || {
            format!(
                "proposed transcript {i}: {} with {tried} candidates",
                rep.outcome.as_str()
            )
        })?;
    }
    Ok(format!("jiang broken in {PFS_TRANSCRIPTS}/{PFS_TRANSCRIPTS}, proposed held in {PFS_TRANSCRIPTS}/{PFS_TRANSCRIPTS}"))
}

fn cost_counts() -> Verdict {
    let report =
        measure_costs(Scheme::Proposed, SecurityLabel::Test512, 1).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (phase, h, e, m) in PUBLISHED_PROPOSED {
        let got = report.phase(phase).ok_or("phase missing")?.measured;
        ensure(got.exp == e, || {
            format!("{}: T_E {} != {e}", phase.as_str(), got.exp)
        })?;
        ensure(got.mul == m, || {
            format!("{}: T_M {} != {m}", phase.as_str(), got.mul)
        })?;
        ensure(got.hash.abs_diff(h) <= HASH_TOLERANCE, || {
            format!("{}: T_h {} vs {h}", phase.as_str(), got.hash)
        })?;
        parts.push(format!(
            "{} {}h/{h}h {}E",
            phase.as_str(),
            got.hash,
            got.exp
        ));
    }
    let text = report.render_text();
    ensure(text.contains("hashes:"), || "mapping not printed".into())?;
    print!("{text}");
    Ok(parts.join(", "))
}

fn wrong_credentials() -> Verdict {
    let mut r = rng(0x6000);
    let (id, pw) = ("victim-user", "victim-password");
    let mut pw_world = ProposedWorld::new(SecurityLabel::Test512, 0x6001);
    let pcard = pw_world.register(id, pw).map_err(|e| e.to_string())?;
    let mut jw = JiangWorld::new(SecurityLabel::Test512, Default::default(), 0x6002);
    let jcard = jw.register(id, pw).map_err(|e| e.to_string())?;
    for k in 0..WRONG_CREDENTIAL_ATTEMPTS {
        let (gid, gpw) = match k % 3 {
            0 => (
                id.to_string(),
                random_credential(&mut r, 1 + (k as usize % 15)),
            ),
            1 => (
                random_credential(&mut r, 1 + (k as usize % 12)),
                pw.to_string(),
            ),
            _ => (random_credential(&mut r, 8), random_credential(&mut r, 8)),
        };
        if gid == id && gpw == pw {
            continue;
        }
        let before = pw_world.channel.message_count();
        let run = pw_world.login(&pcard, &gid, &gpw);
        ensure(!run.accepted(), || format!("proposed accepted {gid}/{gpw}"))?;
        ensure(pw_world.channel.message_count() == before, || {
            format!("proposed attempt {k} emitted a message")
        })?;

        let before = jw.channel.sent_by(Party::Client);
        let run = jw.login(&jcard, &gid, &gpw);
        ensure(!run.accepted(), || format!("jiang accepted {gid}/{gpw}"))?;
        let sent = jw.channel.sent_by(Party::Client) - before;
        ensure(sent == 1, || {
            format!("jiang attempt {k} sent {sent} messages")
        })?;
    }
    Ok(format!(
        "{WRONG_CREDENTIAL_ATTEMPTS} attempts: proposed 0 messages, jiang 1 message each"
    ))
}

fn flip(bytes: &mut [u8], r: &mut impl Rng) {
    let bit = r.gen_range(0..bytes.len() * 8);
    bytes[bit / 8] ^= 1 << (bit % 8);
}

fn fuzz_rejection() -> Verdict {
    let label = SecurityLabel::Test512;
    let mut r = rng(0x7000);
    let params = GroupParams::for_label(label);
    let mut ops = OpCounter::new();
    let mut server = PServerState::setup(label, &mut r);
    let (id, pw) = ("fuzz-user", "fuzz-password");
    let (req, a) = begin_registration(&params, id, pw, &mut r, &mut ops);
    let card = server
        .register(&req, &mut r, &mut ops)
        .unwrap()
        .finalize(&params, id, pw, &a, &mut ops);
    let (login, client) = card.login_start(&params, id, pw, &mut r, &mut ops).unwrap();
    let (reply, _) = server.respond(&login, &mut r, &mut ops).unwrap();
    let login_bytes = login.encode(&params);
    let reply_bytes = reply.encode(&params);

    let mut accepted = 0u64;
    let mut rejected = [0u64; 3];
    for t in 0..BIT_FLIPS {
        match t % 3 {
            0 => {
                let mut b = login_bytes.clone();
                flip(&mut b, &mut r);
                let ok = PLoginMsg::decode(&b, &params)
                    .and_then(|m| server.respond(&m, &mut r, &mut ops))
                    .is_ok();
                if ok {
                    accepted += 1
                } else {
                    rejected[0] += 1
                }
            }
            1 => {
                let mut b = reply_bytes.clone();
                flip(&mut b, &mut r);
                let ok = PReplyMsg::decode(&b, &params)
                    .and_then(|m| client.clone().finish(&params, &m, &mut ops))
                    .is_ok();
                if ok {
                    accepted += 1
                } else {
                    rejected[1] += 1
                }
            }
            _ => {
                let (reply, session) = server.respond(&login, &mut r, &mut ops).unwrap();
                let (confirm, _) = client.clone().finish(&params, &reply, &mut ops).unwrap();
                let mut b = confirm.encode();
                flip(&mut b, &mut r);
                let ok = PConfirmMsg::decode(&b)
                    .and_then(|m| session.confirm(&params, &m, &mut ops))
                    .is_ok();
                if ok {
                    accepted += 1
                } else {
                    rejected[2] += 1
                }
            }
        }
    }
    ensure(accepted == 0, || format!("{accepted} false accepts"))?;
    Ok(format!(
        "{BIT_FLIPS} flips rejected (M_1 {}, M_2 {}, M_3 {}), 0 false accepts",
        rejected[0], rejected[1], rejected[2]
    ))
}

fn persistence() -> Verdict {
    let label = SecurityLabel::Test512;
    let mut r = rng(0x8000);
    let params = GroupParams::for_label(label);
    let mut ops = OpCounter::new();
    let mut server = PServerState::setup(label, &mut r);
    for i in 0..PERSISTED_USERS {
        let id = format!("user-{i:04}-{}", random_credential(&mut r, 4));
        let (req, _) = begin_registration(&params, &id, "pw", &mut r, &mut ops);
        server
            .register(&req, &mut r, &mut ops)
            .map_err(|e| e.to_string())?;
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("server.state");
    save_state(&server, &path, SaveOptions::default()).map_err(|e| e.to_string())?;
    let on_disk = std::fs::read(&path).map_err(|e| e.to_string())?;
    let loaded = load_state(&path, Some(server.master_key())).map_err(|e| e.to_string())?;
    ensure(loaded.records() == server.records(), || {
        "records differ after load".into()
    })?;
    ensure(encode_state(&loaded, false) == on_disk, || {
        "re-encoding is not byte-identical".into()
    })?;
    ensure(load_state(&path, None).is_err(), || {
        "loaded without the master key".into()
    })?;

    let (req, _) = begin_registration(&params, "late-user", "pw", &mut r, &mut ops);
    server
        .register(&req, &mut r, &mut ops)
        .map_err(|e| e.to_string())?;
    let crash = save_state_with_hook(&server, &path, SaveOptions::default(), || {
        Err(io::Error::other("crash before rename"))
    });
    ensure(crash.is_err(), || {
        "crash hook did not abort the save".into()
    })?;
    ensure(
        std::fs::read(&path).map_err(|e| e.to_string())? == on_disk,
        || "file changed by an aborted save".into(),
    )?;
    let survivors = load_state(&path, Some(server.master_key())).map_err(|e| e.to_string())?;
    ensure(survivors.records().len() == PERSISTED_USERS, || {
        "old table not intact".into()
    })?;
    let entries = std::fs::read_dir(dir.path())
        .map_err(|e| e.to_string())?
        .count();
    ensure(entries == 1, || {
        format!("{entries} files left in the directory")
    })?;
    Ok(format!("{PERSISTED_USERS} records round-trip byte-for-byte ({} bytes); crash before rename leaves the old file", on_disk.len()))
}

fn determinism(first: &AttackMatrix) -> Verdict {
    let second = attack_matrix(&MatrixConfig::default());
    ensure(
        first.transcript.to_string() == second.transcript.to_string(),
        || "transcripts differ".into(),
    )?;
    ensure(first.render_text() == second.render_text(), || {
        "matrix text differs".into()
    })?;
    ensure(first.render_machine() == second.render_machine(), || {
        "machine rows differ".into()
    })?;
    let other = attack_matrix(&MatrixConfig::with_seed(first.seed + 1));
    ensure(
        other.transcript.to_string() != first.transcript.to_string(),
        || "seed has no effect".into(),
    )?;
    Ok(format!(
        "{} transcript events identical across runs",
        first.transcript.len()
    ))
}

fn main() {
    let start = Instant::now();
    let matrix = attack_matrix(&MatrixConfig::default());
    let matrix_time = start.elapsed();

    let criteria: Vec<(&str, Check<'_>)> = vec![
        ("completeness", Box::new(completeness)),
        (
            "attack matrix reproduction",
            Box::new(|| matrix_reproduction(&matrix, matrix_time)),
        ),
        (
            "off-line guessing oracle equivalence",
            Box::new(offline_guessing),
        ),
        (
            "perfect forward secrecy boundary",
            Box::new(forward_secrecy_boundary),
        ),
        ("cost counts", Box::new(cost_counts)),
        ("input validation", Box::new(wrong_credentials)),
        ("fuzz rejection", Box::new(fuzz_rejection)),
        ("persistence round-trip", Box::new(persistence)),
        ("determinism", Box::new(|| determinism(&matrix))),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {}. {name}: {detail}", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {}. {name}: {why}", n + 1);
            }
        }
    }
    println!(
        "acceptance: {}/{} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
