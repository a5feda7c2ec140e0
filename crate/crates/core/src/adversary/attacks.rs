use std::fmt;

use rand::RngCore;

use crate::clock::{Party, SimClock};
use crate::counter::OpCounter;
use crate::crypto::{Digest, GroupElement, GroupParams};
use crate::error::Reject;
use crate::jiang::{self, unblind_card, JCard, JLoginMsg, JRegRequest};
use crate::proposed::{
    id_pw_mask, login_mac, password_blind, reply_mac, session_key, verifier, PCard, PLoginMsg,
    PReplyMsg, RegRequest,
};
use crate::registry::Direction;
use crate::wire::{tag_of, TAG_J_LOGIN, TAG_P_CONFIRM, TAG_P_LOGIN, TAG_P_REPLY};

use super::world::{JiangWorld, ProposedWorld, ServerEvent};
use super::{AdversaryState, AttackReport, Capability, Evidence, Scheme};

/// Why an attack step could not be carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackError {
    MissingCapability(Capability),
    Rejected(Reject),
}

impl fmt::Display for AttackError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackError::MissingCapability(c) => write!(f, "missing capability {}", c.as_str()),
            AttackError::Rejected(r) => write!(f, "{r}"),
        }
    }
}

impl std::error::Error for AttackError {}

fn need(adv: &AdversaryState, caps: &[Capability]) -> Result<(), Capability> {
    caps.iter()
        .try_for_each(|&c| if adv.has(c) { Ok(()) } else { Err(c) })
}

fn missing(attack: &'static str, scheme: Scheme, cap: Capability) -> AttackReport {
    AttackReport::new(attack, scheme, Evidence::MissingCapability(cap))
}

fn last_with_tag(adv: &AdversaryState, tag: u8) -> Option<&[u8]> {
    adv.recorded()
        .iter()
        .rev()
        .find(|b| tag_of(b) == Some(tag))
        .map(Vec::as_slice)
}

fn contains(hay: &[u8], needle: &[u8]) -> bool {
    !needle.is_empty() && hay.windows(needle.len()).any(|w| w == needle)
}

fn reject_of(ev: ServerEvent) -> Result<Digest, Reject> {
    match ev {
        ServerEvent::Accepted(sk) => Ok(sk),
        ServerEvent::Rejected(r) => Err(r),
        ServerEvent::Replied | ServerEvent::Idle => Err(Reject::ServerUnavailable),
    }
}

fn secret(kind: &'static str, recovered: Option<String>, truth: &str) -> Evidence {
    Evidence::Secret {
        kind,
        recovered,
        truth: truth.to_string(),
    }
}

/// Reads the victim's password off the registration channel.
pub fn atk_insider(
    scheme: Scheme,
    params: &GroupParams,
    adv: &AdversaryState,
    victim_id: &str,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "insider";
    if let Err(c) = need(adv, &[Capability::ObserveRegistration]) {
        return missing(NAME, scheme, c);
    }
    let mut ops = OpCounter::new();
    let mut recovered = None;
    let mut probes = 0;
    let mut note = "no registration request for the victim";
    for bytes in adv.registration_traffic() {
        match scheme {
            Scheme::Jiang => {
                if let Ok(req) = JRegRequest::decode(bytes) {
                    if req.id == victim_id {
                        probes += 1;
                        recovered = Some(req.password);
                        note = "password sent in the clear";
                        break;
                    }
                }
            }
            Scheme::Proposed => {
                let Ok(req) = RegRequest::decode(bytes) else {
                    continue;
                };
                if req.id != victim_id {
                    continue;
                }
                note = "only h(PW || a) visible; no dictionary word matches without a";
                let blank = vec![0u8; params.digest_len()];
                for guess in &adv.dictionary {
                    probes += 1;
                    let plain = params.digest(&[guess.as_bytes()], &mut ops);
                    let zero_a = params.digest(&[guess.as_bytes(), &blank], &mut ops);
                    if plain == req.w || zero_a == req.w {
                        recovered = Some(guess.clone());
                        break;
                    }
                }
                break;
            }
        }
    }
    AttackReport::new(NAME, scheme, secret("password", recovered, truth))
        .probes(probes)
        .counts(ops.total())
        .note(note)
}

/// Identifies the user behind eavesdropped traffic.
///
/// Against the improved scheme every candidate in the identity dictionary is
/// fingerprinted (raw bytes, digest, group hash) and searched for in every
/// recorded message.
pub fn atk_anonymity(
    scheme: Scheme,
    params: &GroupParams,
    adv: &AdversaryState,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "anonymity";
    if let Err(c) = need(adv, &[Capability::Eavesdrop]) {
        return missing(NAME, scheme, c);
    }
    let mut ops = OpCounter::new();
    let mut probes = 0;
    let recovered = match scheme {
        Scheme::Jiang => adv.recorded().iter().find_map(|b| {
            probes += 1;
            JLoginMsg::decode(b, params).ok().map(|m| m.id)
        }),
        Scheme::Proposed => adv.id_dictionary.iter().find_map(|id| {
            probes += 1;
            let prints = [
                id.as_bytes().to_vec(),
                params
                    .digest(&[id.as_bytes()], &mut ops)
                    .as_bytes()
                    .to_vec(),
                params.encode_element(&params.hash_to_group(id.as_bytes(), &mut ops)),
            ];
            let hit = prints
                .iter()
                .filter(|p| p.len() >= 4)
                .any(|p| adv.recorded().iter().any(|m| contains(m, p)));
            hit.then(|| id.clone())
        }),
    };
    AttackReport::new(NAME, scheme, secret("identity", recovered, truth))
        .probes(probes)
        .counts(ops.total())
}

/// Dictionary attack through the live server using a dumped card and the
/// identity read off an eavesdropped login.
pub fn atk_online_guess_jiang(
    world: &mut JiangWorld,
    adv: &AdversaryState,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "online-guess";
    if let Err(c) = need(adv, &[Capability::DumpCard, Capability::Eavesdrop]) {
        return missing(NAME, Scheme::Jiang, c);
    }
    let params = world.params().clone();
    let Some(card) = adv.jiang_cards().first() else {
        return missing(NAME, Scheme::Jiang, Capability::DumpCard);
    };
    let Some(id) = adv
        .recorded()
        .iter()
        .find_map(|b| JLoginMsg::decode(b, &params).ok())
        .map(|m| m.id)
    else {
        return AttackReport::new(NAME, Scheme::Jiang, secret("password", None, truth))
            .note("no login observed");
    };
    let mut ops = OpCounter::new();
    let before = world.channel.sent_by(Party::Adversary);
    let h = params.hash_to_group(id.as_bytes(), &mut ops);
    let mut recovered = None;
    let mut probes = 0;
    let mut last = None;
    for guess in &adv.dictionary {
        probes += 1;
        let pw = params.password_exponent(guess, &mut ops);
        let h_pw = params.mod_exp(&h, &pw, &mut ops);
        let c = params.mod_div(&card.b, &h_pw, &mut ops);
        let e = params.sample_exponent(&mut world.rng);
        let d = params.mod_exp(&h, e.value(), &mut ops);
        let w = params.mod_exp(&c, e.value(), &mut ops);
        let t = world.clock.local(Party::Adversary);
        let m = jiang::login_mac(&params, &id, &c, &d, &w, t, &mut ops);
        world.send_login(
            &JLoginMsg {
                id: id.clone(),
                d,
                m,
                t,
            },
            Party::Adversary,
        );
        match world.pump_server() {
            ServerEvent::Accepted(_) => {
                world.channel.deliver(Direction::ToClient);
                recovered = Some(guess.clone());
                break;
            }
            ServerEvent::Rejected(r) => last = Some(r),
            _ => {}
        }
    }
    let sent = world.channel.sent_by(Party::Adversary) - before;
    let mut report = AttackReport::new(NAME, Scheme::Jiang, secret("password", recovered, truth))
        .probes(probes)
        .messages(sent)
        .counts(ops.total());
    if let Some(r) = last {
        report = report.note(format!("wrong guesses answered with {r}"));
    }
    report
}

/// The same attack against the improved scheme: with only the card, every
/// (identity, password) pair is tried against the live server.
pub fn atk_online_guess_proposed(
    world: &mut ProposedWorld,
    adv: &AdversaryState,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "online-guess";
    if let Err(c) = need(adv, &[Capability::DumpCard]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let Some(card) = adv.cards().first() else {
        return missing(NAME, Scheme::Proposed, Capability::DumpCard);
    };
    let params = world.params().clone();
    let mut ops = OpCounter::new();
    let before = world.channel.sent_by(Party::Adversary);
    let mut recovered = None;
    let mut probes = 0u64;
    let mut rejected = 0u64;
    let mut last = None;
    'outer: for id in &adv.id_dictionary {
        let e = params.sample_exponent(&mut world.rng);
        let h = params.hash_to_group(id.as_bytes(), &mut ops);
        let d_i = params.mod_exp(&h, e.value(), &mut ops);
        for guess in &adv.dictionary {
            probes += 1;
            let mask = id_pw_mask(&params, id, guess, &mut ops);
            let Ok(a) = params.xor_digest(&card.l, &mask, &mut ops) else {
                continue;
            };
            let w = password_blind(&params, guess, &a, &mut ops);
            let Ok(x_i) = params.xor_digest(&card.b, &w, &mut ops) else {
                continue;
            };
            let m_1 = login_mac(&params, id, &d_i, &x_i, &mut ops);
            let msg = PLoginMsg {
                nid: card.nid,
                d_i: d_i.clone(),
                m_1,
            };
            world.send(Direction::ToServer, Party::Adversary, msg.encode(&params));
            match world.pump_server() {
                ServerEvent::Replied => {
                    world.channel.deliver(Direction::ToClient);
                    recovered = Some(guess.clone());
                    break 'outer;
                }
                ServerEvent::Rejected(r) => {
                    rejected += 1;
                    last = Some(r);
                }
                _ => {}
            }
        }
    }
    let sent = world.channel.sent_by(Party::Adversary) - before;
    AttackReport::new(NAME, Scheme::Proposed, secret("password", recovered, truth))
        .probes(probes)
        .messages(sent)
        .counts(ops.total())
        .note(format!(
            "{} identities x {} passwords, {rejected} rejected ({})",
            adv.id_dictionary.len(),
            adv.dictionary.len(),
            last.map_or("none", Reject::as_str)
        ))
}

/// Registers the victim's identity under an adversary password and divides
/// the password out of the new card, leaving `h(ID)^x`.
pub fn atk_extract_user_key_jiang(
    world: &mut JiangWorld,
    adv: &mut AdversaryState,
    victim_id: &str,
    adversary_password: &str,
) -> Result<GroupElement, AttackError> {
    need(adv, &[Capability::Register]).map_err(AttackError::MissingCapability)?;
    let card = world
        .register(victim_id, adversary_password)
        .map_err(AttackError::Rejected)?;
    let params = world.params().clone();
    let key = unblind_card(
        &params,
        &card,
        victim_id,
        adversary_password,
        &mut OpCounter::new(),
    );
    adv.learn_extracted_key(victim_id, key.clone())
        .map_err(AttackError::MissingCapability)?;
    Ok(key)
}

/// The improved server refuses a second registration of a known identity.
pub fn atk_extract_user_key_proposed(
    world: &mut ProposedWorld,
    adv: &AdversaryState,
    victim_id: &str,
    adversary_password: &str,
) -> Result<(), AttackError> {
    need(adv, &[Capability::Register]).map_err(AttackError::MissingCapability)?;
    world
        .register(victim_id, adversary_password)
        .map_err(AttackError::Rejected)?;
    Ok(())
}

/// Purely local password search: `B_i / h(ID)^{PW*}` against the extracted
/// `h(ID)^x`.
pub fn atk_offline_guess_jiang(
    params: &GroupParams,
    adv: &AdversaryState,
    victim_id: &str,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "offline-guess";
    if let Err(c) = need(adv, &[Capability::DumpCard]) {
        return missing(NAME, Scheme::Jiang, c);
    }
    let Some(card) = adv.jiang_cards().first() else {
        return missing(NAME, Scheme::Jiang, Capability::DumpCard);
    };
    let Some(key) = adv.extracted_keys().get(victim_id) else {
        return AttackReport::new(NAME, Scheme::Jiang, secret("password", None, truth))
            .note("no extracted key");
    };
    let mut ops = OpCounter::new();
    let h = params.hash_to_group(victim_id.as_bytes(), &mut ops);
    let mut recovered = None;
    let mut probes = 0;
    for guess in &adv.dictionary {
        probes += 1;
        let pw = params.password_exponent(guess, &mut ops);
        let h_pw = params.mod_exp(&h, &pw, &mut ops);
        if &params.mod_div(&card.b, &h_pw, &mut ops) == key {
            recovered = Some(guess.clone());
            break;
        }
    }
    AttackReport::new(NAME, Scheme::Jiang, secret("password", recovered, truth))
        .probes(probes)
        .counts(ops.total())
}

/// Joint (identity, password) search against the card's verifier `V`.
pub fn atk_offline_guess_proposed(
    params: &GroupParams,
    adv: &AdversaryState,
    truth: &str,
) -> AttackReport {
    const NAME: &str = "offline-guess";
    if let Err(c) = need(adv, &[Capability::DumpCard]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let Some(card) = adv.cards().first() else {
        return missing(NAME, Scheme::Proposed, Capability::DumpCard);
    };
    let mut ops = OpCounter::new();
    let mut recovered = None;
    let mut probes = 0;
    'outer: for id in &adv.id_dictionary {
        for guess in &adv.dictionary {
            probes += 1;
            let mask = id_pw_mask(params, id, guess, &mut ops);
            let Ok(a) = params.xor_digest(&card.l, &mask, &mut ops) else {
                continue;
            };
            if verifier(params, id, &a, guess, &mut ops) == card.v {
                recovered = Some(guess.clone());
                break 'outer;
            }
        }
    }
    AttackReport::new(NAME, Scheme::Proposed, secret("password", recovered, truth))
        .probes(probes)
        .counts(ops.total())
        .note(format!(
            "joint space {} x {}",
            adv.id_dictionary.len(),
            adv.dictionary.len()
        ))
}

/// Logs in as the victim with the extracted `h(ID)^x` and a fresh exponent.
pub fn atk_impersonate_user_jiang(
    world: &mut JiangWorld,
    adv: &AdversaryState,
    victim_id: &str,
) -> AttackReport {
    const NAME: &str = "impersonate-user";
    let Some(c) = adv.extracted_keys().get(victim_id) else {
        return AttackReport::new(
            NAME,
            Scheme::Jiang,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Err(Reject::ServerUnavailable),
            },
        )
        .note("no extracted key");
    };
    let params = world.params().clone();
    let mut ops = OpCounter::new();
    let h = params.hash_to_group(victim_id.as_bytes(), &mut ops);
    let e = params.sample_exponent(&mut world.rng);
    let d = params.mod_exp(&h, e.value(), &mut ops);
    let w = params.mod_exp(c, e.value(), &mut ops);
    let t = world.clock.local(Party::Adversary);
    let m = jiang::login_mac(&params, victim_id, c, &d, &w, t, &mut ops);
    world.send_login(
        &JLoginMsg {
            id: victim_id.to_string(),
            d,
            m,
            t,
        },
        Party::Adversary,
    );
    let genuine = reject_of(world.pump_server());
    world.channel.deliver(Direction::ToClient);
    let sk = params.digest_element(&w, &mut ops);
    AttackReport::new(
        NAME,
        Scheme::Jiang,
        Evidence::SessionKey {
            candidates: vec![sk],
            genuine,
        },
    )
    .probes(1)
    .messages(1)
    .counts(ops.total())
}

/// Forged logins from a dumped card without the identity or `X_i`.
pub fn atk_impersonate_user_proposed(
    world: &mut ProposedWorld,
    adv: &AdversaryState,
    attempts: u64,
) -> AttackReport {
    const NAME: &str = "impersonate-user";
    if let Err(c) = need(adv, &[Capability::DumpCard]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let Some(card) = adv.cards().first() else {
        return missing(NAME, Scheme::Proposed, Capability::DumpCard);
    };
    let params = world.params().clone();
    let mut ops = OpCounter::new();
    let ids: Vec<String> = if adv.id_dictionary.is_empty() {
        vec![String::new()]
    } else {
        adv.id_dictionary.clone()
    };
    let d: Vec<GroupElement> = ids
        .iter()
        .map(|id| {
            let e = params.sample_exponent(&mut world.rng);
            let h = params.hash_to_group(id.as_bytes(), &mut ops);
            params.mod_exp(&h, e.value(), &mut ops)
        })
        .collect();
    let (mut accepted, mut last) = (0, None);
    for k in 0..attempts {
        let slot = (k as usize) % ids.len();
        let x_guess = if k < ids.len() as u64 {
            card.b.clone()
        } else {
            let mut bytes = vec![0u8; params.digest_len()];
            world.rng.fill_bytes(&mut bytes);
            Digest::from_bytes(bytes)
        };
        let m_1 = login_mac(&params, &ids[slot], &d[slot], &x_guess, &mut ops);
        let msg = PLoginMsg {
            nid: card.nid,
            d_i: d[slot].clone(),
            m_1,
        };
        world.send(Direction::ToServer, Party::Adversary, msg.encode(&params));
        match world.pump_server() {
            ServerEvent::Replied => {
                world.channel.deliver(Direction::ToClient);
                accepted += 1;
            }
            ServerEvent::Rejected(r) => last = Some(r),
            _ => {}
        }
    }
    AttackReport::new(
        NAME,
        Scheme::Proposed,
        Evidence::Forgery {
            attempts,
            accepted,
            reject: last,
        },
    )
    .probes(attempts)
    .messages(attempts)
    .counts(ops.total())
}

/// Intercepts a fresh login and answers it with a recorded server reply,
/// then with `fuzz` random replies.
pub fn atk_impersonate_server(
    world: &mut ProposedWorld,
    adv: &AdversaryState,
    client: (&PCard, &str, &str),
    fuzz: u64,
) -> AttackReport {
    const NAME: &str = "impersonate-server";
    if let Err(c) = need(adv, &[Capability::Eavesdrop]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let params = world.params().clone();
    let Some(old) =
        last_with_tag(adv, TAG_P_REPLY).and_then(|b| PReplyMsg::decode(b, &params).ok())
    else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::Forgery {
                attempts: 0,
                accepted: 0,
                reject: None,
            },
        )
        .note("no reply recorded");
    };
    let (card, id, password) = client;
    let mut ops = OpCounter::new();
    let Ok((login, session)) = card.login_start(&params, id, password, &mut world.rng, &mut ops)
    else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::Forgery {
                attempts: 0,
                accepted: 0,
                reject: None,
            },
        )
        .note("client refused its own credentials");
    };
    let hooks = world.channel.hooks();
    world.channel.set_hooks(super::Hooks {
        drop_to_server: true,
        ..hooks
    });
    world.send(Direction::ToServer, Party::Client, login.encode(&params));
    world.channel.deliver(Direction::ToServer);
    world.channel.set_hooks(hooks);

    let before = world.channel.sent_by(Party::Adversary);
    let (mut accepted, mut last) = (0, None);
    for k in 0..=fuzz {
        let forged = if k == 0 {
            old.clone()
        } else {
            let d_s = if k % 2 == 1 {
                old.d_s.clone()
            } else {
                let mut seed = [0u8; 16];
                world.rng.fill_bytes(&mut seed);
                params.hash_to_group(&seed, &mut ops)
            };
            let mut m_2 = vec![0u8; params.digest_len()];
            world.rng.fill_bytes(&mut m_2);
            PReplyMsg {
                d_s,
                m_2: Digest::from_bytes(m_2),
            }
        };
        world.channel.inject(
            world.clock.now(),
            Direction::ToClient,
            forged.encode(&params),
        );
        let Some(bytes) = world.channel.deliver(Direction::ToClient) else {
            continue;
        };
        let verdict = PReplyMsg::decode(&bytes, &params)
            .and_then(|r| session.clone().finish(&params, &r, &mut ops));
        match verdict {
            Ok(_) => accepted += 1,
            Err(r) => last = Some(r),
        }
    }
    let attempts = fuzz + 1;
    AttackReport::new(
        NAME,
        Scheme::Proposed,
        Evidence::Forgery {
            attempts,
            accepted,
            reject: last,
        },
    )
    .probes(attempts)
    .messages(world.channel.sent_by(Party::Adversary) - before)
    .counts(ops.total())
    .note("first forgery is the recorded reply, the rest are random")
}

/// Re-sends the last recorded login after `delay` ticks. The adversary has
/// no way to derive the resulting key, so acceptance alone is not success.
pub fn atk_replay_jiang(world: &mut JiangWorld, adv: &AdversaryState, delay: u64) -> AttackReport {
    const NAME: &str = "replay";
    if let Err(c) = need(adv, &[Capability::Eavesdrop]) {
        return missing(NAME, Scheme::Jiang, c);
    }
    let Some(bytes) = last_with_tag(adv, TAG_J_LOGIN).map(<[u8]>::to_vec) else {
        return AttackReport::new(
            NAME,
            Scheme::Jiang,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Err(Reject::ServerUnavailable),
            },
        )
        .note("no login recorded");
    };
    world.clock.advance(delay);
    world
        .channel
        .inject(world.clock.now(), Direction::ToServer, bytes);
    let genuine = reject_of(world.pump_server());
    world.channel.deliver(Direction::ToClient);
    let note = match &genuine {
        Ok(_) => format!("server accepted the replay after {delay} ticks; key needs alpha or x"),
        Err(r) => format!("replay after {delay} ticks: {r}"),
    };
    AttackReport::new(
        NAME,
        Scheme::Jiang,
        Evidence::SessionKey {
            candidates: vec![],
            genuine,
        },
    )
    .probes(1)
    .messages(1)
    .note(note)
}

/// Replays the last recorded login at offsets `0..=max_delay` from its
/// timestamp and reports what the server did with each.
pub fn replay_window_sweep(
    world: &mut JiangWorld,
    adv: &AdversaryState,
    max_delay: u64,
) -> Vec<(u64, Option<Reject>)> {
    let params = world.params().clone();
    let Some(msg) =
        last_with_tag(adv, TAG_J_LOGIN).and_then(|b| JLoginMsg::decode(b, &params).ok())
    else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for d in 0..=max_delay {
        let target = msg.t + d;
        let now = world.clock.local(Party::Server);
        if target < now {
            continue;
        }
        world.clock.advance(target - now);
        world
            .channel
            .inject(world.clock.now(), Direction::ToServer, msg.encode(&params));
        let r = reject_of(world.pump_server()).err();
        world.channel.deliver(Direction::ToClient);
        out.push((d, r));
    }
    out
}

/// Replays a recorded login and then the recorded confirmation.
pub fn atk_replay_proposed(world: &mut ProposedWorld, adv: &AdversaryState) -> AttackReport {
    const NAME: &str = "replay";
    if let Err(c) = need(adv, &[Capability::Eavesdrop]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let (Some(login), Some(confirm)) = (
        last_with_tag(adv, TAG_P_LOGIN),
        last_with_tag(adv, TAG_P_CONFIRM),
    ) else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Err(Reject::ServerUnavailable),
            },
        )
        .note("no complete session recorded");
    };
    let (login, confirm) = (login.to_vec(), confirm.to_vec());
    world
        .channel
        .inject(world.clock.now(), Direction::ToServer, login);
    let first = world.pump_server();
    world.channel.deliver(Direction::ToClient);
    let genuine = if first == ServerEvent::Replied {
        world
            .channel
            .inject(world.clock.now(), Direction::ToServer, confirm);
        reject_of(world.pump_server())
    } else {
        reject_of(first)
    };
    let note = match &genuine {
        Ok(_) => "server accepted the replayed confirmation".to_string(),
        Err(r) => format!("server answered the replayed login with a fresh reply, then {r}"),
    };
    AttackReport::new(
        NAME,
        Scheme::Proposed,
        Evidence::SessionKey {
            candidates: vec![],
            genuine,
        },
    )
    .probes(1)
    .messages(2)
    .note(note)
}

/// Session keys of recorded sessions from the master key: `digest(D^x)`.
pub fn atk_break_pfs_jiang(
    params: &GroupParams,
    adv: &AdversaryState,
    genuine: &Digest,
) -> AttackReport {
    const NAME: &str = "break-pfs";
    if let Err(c) = need(
        adv,
        &[Capability::CompromiseMasterKey, Capability::Eavesdrop],
    ) {
        return missing(NAME, Scheme::Jiang, c);
    }
    let Some(x) = adv.master_key() else {
        return missing(NAME, Scheme::Jiang, Capability::CompromiseMasterKey);
    };
    let mut ops = OpCounter::new();
    let candidates: Vec<Digest> = adv
        .recorded()
        .iter()
        .filter_map(|b| JLoginMsg::decode(b, params).ok())
        .map(|m| {
            let w = params.mod_exp(&m.d, x.value(), &mut ops);
            params.digest_element(&w, &mut ops)
        })
        .collect();
    let n = candidates.len() as u64;
    AttackReport::new(
        NAME,
        Scheme::Jiang,
        Evidence::SessionKey {
            candidates,
            genuine: Ok(genuine.clone()),
        },
    )
    .probes(n)
    .counts(ops.total())
}

fn candidate_elements(
    params: &GroupParams,
    a: &GroupElement,
    b: &GroupElement,
    ops: &mut OpCounter,
) -> Vec<GroupElement> {
    vec![
        a.clone(),
        b.clone(),
        params.mod_mul(a, b, ops),
        params.mod_div(a, b, ops),
        params.mod_div(b, a, ops),
    ]
}

/// With the master key and record table the adversary has `X_i` and the
/// identity, but not `h(ID)^{ab}`. Every key reachable from the public
/// values is tried.
pub fn atk_break_pfs_proposed(
    params: &GroupParams,
    adv: &AdversaryState,
    genuine: &Digest,
) -> AttackReport {
    const NAME: &str = "break-pfs";
    if let Err(c) = need(
        adv,
        &[Capability::CompromiseMasterKey, Capability::Eavesdrop],
    ) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let Some(x) = adv.master_key() else {
        return missing(NAME, Scheme::Proposed, Capability::CompromiseMasterKey);
    };
    let login = last_with_tag(adv, TAG_P_LOGIN).and_then(|b| PLoginMsg::decode(b, params).ok());
    let reply = last_with_tag(adv, TAG_P_REPLY).and_then(|b| PReplyMsg::decode(b, params).ok());
    let (Some(login), Some(reply)) = (login, reply) else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Ok(genuine.clone()),
            },
        )
        .note("no session recorded");
    };
    let Some(record) = adv.server_records().iter().find(|r| r.nid == login.nid) else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Ok(genuine.clone()),
            },
        )
        .note("pseudonym not in the stolen table");
    };
    let mut ops = OpCounter::new();
    let x_i =
        crate::proposed::derive_user_key(params, &record.id, record.n, &record.id_sc, x, &mut ops);
    let h = params.hash_to_group(record.id.as_bytes(), &mut ops);
    let mut elems = candidate_elements(params, &login.d_i, &reply.d_s, &mut ops);
    for base in [&login.d_i, &reply.d_s, &h] {
        elems.push(params.mod_exp(base, x.value(), &mut ops));
    }
    let candidates: Vec<Digest> = elems
        .iter()
        .map(|k| session_key(params, &record.id, k, &x_i, &mut ops))
        .collect();
    let reproduces_m2 = candidates
        .iter()
        .any(|sk| reply_mac(params, &record.id, sk, &login.d_i, &reply.d_s, &mut ops) == reply.m_2);
    let n = candidates.len() as u64;
    AttackReport::new(
        NAME,
        Scheme::Proposed,
        Evidence::SessionKey {
            candidates,
            genuine: Ok(genuine.clone()),
        },
    )
    .probes(n)
    .counts(ops.total())
    .note(format!(
        "X_i and identity recovered; candidate reproduces M_2: {reproduces_m2}"
    ))
}

/// Past session keys from a user's long-term key (`h(ID)^x` for the original
/// scheme, `X_i` for the improved one) plus recorded traffic.
pub fn atk_forward_secrecy(
    scheme: Scheme,
    params: &GroupParams,
    adv: &AdversaryState,
    victim_id: &str,
    genuine: &Digest,
) -> AttackReport {
    const NAME: &str = "forward-secrecy";
    if let Err(c) = need(adv, &[Capability::CompromiseUserKey, Capability::Eavesdrop]) {
        return missing(NAME, scheme, c);
    }
    let mut ops = OpCounter::new();
    let candidates: Vec<Digest> = match scheme {
        Scheme::Jiang => {
            let (Some(c), Some(login)) = (
                adv.extracted_keys().get(victim_id),
                last_with_tag(adv, TAG_J_LOGIN).and_then(|b| JLoginMsg::decode(b, params).ok()),
            ) else {
                return missing(NAME, scheme, Capability::CompromiseUserKey);
            };
            candidate_elements(params, c, &login.d, &mut ops)
                .iter()
                .map(|k| params.digest_element(k, &mut ops))
                .collect()
        }
        Scheme::Proposed => {
            let login =
                last_with_tag(adv, TAG_P_LOGIN).and_then(|b| PLoginMsg::decode(b, params).ok());
            let reply =
                last_with_tag(adv, TAG_P_REPLY).and_then(|b| PReplyMsg::decode(b, params).ok());
            let (Some(x_i), Some(login), Some(reply)) =
                (adv.user_keys().get(victim_id), login, reply)
            else {
                return missing(NAME, scheme, Capability::CompromiseUserKey);
            };
            candidate_elements(params, &login.d_i, &reply.d_s, &mut ops)
                .iter()
                .map(|k| session_key(params, victim_id, k, x_i, &mut ops))
                .collect()
        }
    };
    let n = candidates.len() as u64;
    AttackReport::new(
        NAME,
        scheme,
        Evidence::SessionKey {
            candidates,
            genuine: Ok(genuine.clone()),
        },
    )
    .probes(n)
    .counts(ops.total())
}

/// Session key from leaked ephemeral exponents. `K` follows from either
/// exponent; the key additionally needs the identity and `X_i`, which are
/// taken from the identity dictionary and any compromised user keys.
pub fn atk_ephemeral_leak(
    params: &GroupParams,
    adv: &AdversaryState,
    genuine: &Digest,
) -> AttackReport {
    const NAME: &str = "ephemeral-leak";
    if let Err(c) = need(adv, &[Capability::LeakEphemeral, Capability::Eavesdrop]) {
        return missing(NAME, Scheme::Proposed, c);
    }
    let login = last_with_tag(adv, TAG_P_LOGIN).and_then(|b| PLoginMsg::decode(b, params).ok());
    let reply = last_with_tag(adv, TAG_P_REPLY).and_then(|b| PReplyMsg::decode(b, params).ok());
    let (Some(login), Some(reply)) = (login, reply) else {
        return AttackReport::new(
            NAME,
            Scheme::Proposed,
            Evidence::SessionKey {
                candidates: vec![],
                genuine: Ok(genuine.clone()),
            },
        )
        .note("no session recorded");
    };
    let mut ops = OpCounter::new();
    let k = match (adv.alpha(), adv.beta()) {
        (Some(a), _) => Some(params.mod_exp(&reply.d_s, a.value(), &mut ops)),
        (None, Some(b)) => Some(params.mod_exp(&login.d_i, b.value(), &mut ops)),
        (None, None) => None,
    };
    let mut candidates = Vec::new();
    if let Some(k) = &k {
        let blank = Digest::zero(params.digest_len());
        for id in &adv.id_dictionary {
            let x_i = adv.user_keys().get(id).unwrap_or(&blank);
            candidates.push(session_key(params, id, k, x_i, &mut ops));
        }
    }
    let n = candidates.len() as u64;
    AttackReport::new(
        NAME,
        Scheme::Proposed,
        Evidence::SessionKey {
            candidates,
            genuine: Ok(genuine.clone()),
        },
    )
    .probes(n)
    .counts(ops.total())
    .note(format!("K derived: {}", k.is_some()))
}

fn skewed(clock: &SimClock, skew: i64) -> SimClock {
    SimClock::starting_at(clock.now() + skew.unsigned_abs()).with_skew(Party::Client, skew)
}

/// Honest login with the client clock `skew` ticks off.
pub fn demo_clock_skew_jiang(
    world: &mut JiangWorld,
    card: &JCard,
    id: &str,
    password: &str,
    skew: i64,
) -> AttackReport {
    world.clock = skewed(&world.clock, skew);
    let run = world.login(card, id, password);
    AttackReport::new(
        "clock-skew",
        Scheme::Jiang,
        Evidence::HonestRun {
            reject: run.first_reject(),
        },
    )
    .messages(world.channel.message_count())
    .note(format!(
        "skew {skew}, delta_t {}",
        world.server.config().delta_t
    ))
}

pub fn demo_clock_skew_proposed(
    world: &mut ProposedWorld,
    card: &PCard,
    id: &str,
    password: &str,
    skew: i64,
) -> AttackReport {
    world.clock = skewed(&world.clock, skew);
    let run = world.login(card, id, password);
    AttackReport::new(
        "clock-skew",
        Scheme::Proposed,
        Evidence::HonestRun {
            reject: run.first_reject(),
        },
    )
    .messages(world.channel.message_count())
    .note(format!("skew {skew}"))
}

/// A login with a mistyped password, counting what reaches the wire.
pub fn demo_wasted_roundtrip_jiang(
    world: &mut JiangWorld,
    card: &JCard,
    id: &str,
    wrong_password: &str,
) -> AttackReport {
    let before = world.channel.sent_by(Party::Client);
    let run = world.login(card, id, wrong_password);
    let sent = world.channel.sent_by(Party::Client) - before;
    let reject = match run.server {
        Some(Err(r)) => Some(r),
        _ => run.client.err(),
    };
    AttackReport::new(
        "wasted-roundtrip",
        Scheme::Jiang,
        Evidence::WastedMessages { sent, reject },
    )
    .messages(sent)
    .counts(
        world.ops.counts(crate::counter::Phase::Login)
            + world.ops.counts(crate::counter::Phase::Authentication),
    )
}

pub fn demo_wasted_roundtrip_proposed(
    world: &mut ProposedWorld,
    card: &PCard,
    id: &str,
    wrong_password: &str,
) -> AttackReport {
    let before = world.channel.sent_by(Party::Client);
    let run = world.login(card, id, wrong_password);
    let sent = world.channel.sent_by(Party::Client) - before;
    AttackReport::new(
        "wasted-roundtrip",
        Scheme::Proposed,
        Evidence::WastedMessages {
            sent,
            reject: run.first_reject(),
        },
    )
    .messages(sent)
    .counts(world.ops.counts(crate::counter::Phase::Login))
}

/// Password change first with the server unreachable, then reachable.
pub fn demo_password_change_jiang(
    world: &mut JiangWorld,
    card: &mut JCard,
    id: &str,
    password: &str,
    new_password: &str,
) -> AttackReport {
    let online = world.online;
    world.online = false;
    let offline_reject = world
        .change_password(card, id, password, new_password)
        .err();
    world.online = online;
    let round_trips = match world.change_password(card, id, password, new_password) {
        Ok(pc) => pc.round_trips,
        Err(_) => 0,
    };
    AttackReport::new(
        "password-change",
        Scheme::Jiang,
        Evidence::ServerDependence {
            round_trips,
            offline_reject,
        },
    )
    .messages(world.channel.message_count())
}

pub fn demo_password_change_proposed(
    world: &mut ProposedWorld,
    card: &mut PCard,
    id: &str,
    password: &str,
    new_password: &str,
) -> AttackReport {
    let online = world.online;
    world.online = false;
    let before = world.channel.message_count();
    let result = world.change_password(card, id, password, new_password);
    world.online = online;
    let offline_reject = match result {
        Ok(updated) => {
            *card = updated;
            None
        }
        Err(r) => Some(r),
    };
    AttackReport::new(
        "password-change",
        Scheme::Proposed,
        Evidence::ServerDependence {
            round_trips: 0,
            offline_reject,
        },
    )
    .messages(world.channel.message_count() - before)
}

/// Login with the server's reply dropped in transit.
pub fn demo_session_key_verification_jiang(
    world: &mut JiangWorld,
    card: &JCard,
    id: &str,
    password: &str,
) -> AttackReport {
    let hooks = world.channel.hooks();
    world.channel.set_hooks(super::Hooks {
        drop_to_client: true,
        ..hooks
    });
    let run = world.login(card, id, password);
    world.channel.set_hooks(hooks);
    let evidence = Evidence::UnconfirmedKey {
        server_committed: matches!(run.server, Some(Ok(_))),
        client_finished: run.client.is_ok(),
    };
    AttackReport::new("session-key-verification", Scheme::Jiang, evidence)
        .messages(world.channel.message_count())
}

pub fn demo_session_key_verification_proposed(
    world: &mut ProposedWorld,
    card: &PCard,
    id: &str,
    password: &str,
) -> AttackReport {
    let hooks = world.channel.hooks();
    world.channel.set_hooks(super::Hooks {
        drop_to_client: true,
        ..hooks
    });
    let run = world.login(card, id, password);
    world.channel.set_hooks(hooks);
    let evidence = Evidence::UnconfirmedKey {
        server_committed: matches!(run.server, Some(Ok(_))),
        client_finished: run.client.is_ok(),
    };
    AttackReport::new("session-key-verification", Scheme::Proposed, evidence)
        .messages(world.channel.message_count())
        .note(format!(
            "server holds a pending key only: {}",
            world.pending_key().is_some()
        ))
}

/// The user loses a card and gets a new one; the lost card (with its
/// password) is then tried.
pub fn demo_revocation_jiang(
    world: &mut JiangWorld,
    id: &str,
    old_password: &str,
    new_password: &str,
) -> AttackReport {
    let mut report_note = String::from("re-registered");
    let old = match world.register(id, old_password) {
        Ok(c) => c,
        Err(r) => {
            return AttackReport::new(
                "revocation",
                Scheme::Jiang,
                Evidence::RevokedCard { reject: Some(r) },
            )
        }
    };
    if let Err(r) = world.register(id, new_password) {
        report_note = format!("re-registration refused ({r}); old card still the only one");
    }
    let run = world.login(&old, id, old_password);
    AttackReport::new(
        "revocation",
        Scheme::Jiang,
        Evidence::RevokedCard {
            reject: run.first_reject(),
        },
    )
    .note(report_note)
}

pub fn demo_revocation_proposed(
    world: &mut ProposedWorld,
    id: &str,
    old_password: &str,
    new_password: &str,
) -> AttackReport {
    let old = match world.register(id, old_password) {
        Ok(c) => c,
        Err(r) => {
            return AttackReport::new(
                "revocation",
                Scheme::Proposed,
                Evidence::RevokedCard { reject: Some(r) },
            )
        }
    };
    let new = world.reissue(id, new_password);
    let run = world.login(&old, id, old_password);
    let mut report = AttackReport::new(
        "revocation",
        Scheme::Proposed,
        Evidence::RevokedCard {
            reject: run.first_reject(),
        },
    );
    if let Ok(card) = new {
        report = report.note(format!(
            "new card accepted: {}",
            world.login(&card, id, new_password).accepted()
        ));
    }
    report
}
