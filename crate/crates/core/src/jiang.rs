//! The timestamp-based smart-card scheme under attack.
//!
//! Implemented as published, flaws included: the identity travels in clear,
//! the password is sent to the server at registration, duplicate identities
//! are accepted, the card never checks its inputs, and changing a password
//! needs a live server.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use rand::RngCore;

use crate::clock::{is_fresh, Party, SimClock};
use crate::counter::OpCounter;
use crate::crypto::{Digest, GroupElement, GroupParams, Scalar};
use crate::error::Reject;
use crate::wire::{Reader, Writer, TAG_J_LOGIN, TAG_J_REGISTER, TAG_J_REPLY};

/// Consecutive MAC failures before an identity is locked, when failure
/// tracking is switched on.
pub const LOCKOUT_THRESHOLD: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JConfig {
    /// Maximum accepted transmission delay in ticks.
    pub delta_t: u64,
    pub allow_duplicate_registration: bool,
    /// Off in the published scheme. When on, an identity is locked after
    /// [`LOCKOUT_THRESHOLD`] consecutive bad MACs.
    pub track_failures: bool,
}

impl Default for JConfig {
    fn default() -> Self {
        JConfig {
            delta_t: 2,
            allow_duplicate_registration: true,
            track_failures: false,
        }
    }
}

/// Registration request. The password travels in plaintext.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JRegRequest {
    pub id: String,
    pub password: String,
}

impl JRegRequest {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new(TAG_J_REGISTER)
            .field(self.id.as_bytes())
            .field(self.password.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_J_REGISTER)?;
        let id = r.string()?;
        let password = r.string()?;
        r.finish()?;
        Ok(JRegRequest { id, password })
    }
}

/// Card contents `{B_i, h, p, q}`. Everything here is readable by whoever
/// holds the card.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JCard {
    pub b: GroupElement,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JLoginMsg {
    pub id: String,
    pub d: GroupElement,
    pub m: Digest,
    pub t: u64,
}

impl JLoginMsg {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Writer::new(TAG_J_LOGIN)
            .field(self.id.as_bytes())
            .field(&params.encode_element(&self.d))
            .field(self.m.as_bytes())
            .u64(self.t)
            .finish()
    }

    pub fn decode(bytes: &[u8], params: &GroupParams) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_J_LOGIN)?;
        let id = r.string()?;
        let d = params
            .decode_element(r.field()?)
            .map_err(|_| Reject::Malformed)?;
        let m = Digest::from_bytes(r.field()?);
        let t = r.u64()?;
        r.finish()?;
        Ok(JLoginMsg { id, d, m, t })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JServerReply {
    pub id: String,
    pub m_s: Digest,
    pub t_s: u64,
}

impl JServerReply {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new(TAG_J_REPLY)
            .field(self.id.as_bytes())
            .field(self.m_s.as_bytes())
            .u64(self.t_s)
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_J_REPLY)?;
        let id = r.string()?;
        let m_s = Digest::from_bytes(r.field()?);
        let t_s = r.u64()?;
        r.finish()?;
        Ok(JServerReply { id, m_s, t_s })
    }
}

/// Card-side ephemeral state between login and the server's reply.
#[derive(Debug)]
pub struct JClientSession {
    alpha: Scalar,
    c: GroupElement,
    w: GroupElement,
    t: u64,
}

impl JClientSession {
    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }

    /// `C_i = B_i / h(ID)^PW`, equal to `h(ID)^x` when the password is right.
    pub fn c(&self) -> &GroupElement {
        &self.c
    }

    pub fn w(&self) -> &GroupElement {
        &self.w
    }

    pub fn timestamp(&self) -> u64 {
        self.t
    }

    /// Checks the reply's freshness and `M_S`, then derives `SK = h(W_i)`.
    pub fn finish(
        self,
        params: &GroupParams,
        reply: &JServerReply,
        id: &str,
        clock: &SimClock,
        delta_t: u64,
        ops: &mut OpCounter,
    ) -> Result<Digest, Reject> {
        if !is_fresh(reply.t_s, clock.local(Party::Client), delta_t) {
            return Err(Reject::StaleTimestamp);
        }
        let expected = reply_mac(params, id, &self.w, reply.t_s, ops);
        if reply.id != id || expected != reply.m_s {
            return Err(Reject::BadMac);
        }
        Ok(params.digest_element(&self.w, ops))
    }
}

/// What the server keeps from an accepted login.
#[derive(Debug, Clone)]
pub struct JServerSession {
    pub id: String,
    pub sk: Digest,
}

#[derive(Debug, Clone)]
pub struct JServerState {
    params: GroupParams,
    x: Scalar,
    id_table: BTreeSet<String>,
    failures: BTreeMap<String, u64>,
    config: JConfig,
}

impl JServerState {
    /// Initialization: pick the master key `x` in `[1, q-1]`.
    pub fn new<R: RngCore + ?Sized>(params: GroupParams, config: JConfig, rng: &mut R) -> Self {
        let x = params.sample_exponent(rng);
        Self::with_master_key(params, config, x)
    }

    pub fn with_master_key(params: GroupParams, config: JConfig, x: Scalar) -> Self {
        JServerState {
            params,
            x,
            id_table: BTreeSet::new(),
            failures: BTreeMap::new(),
            config,
        }
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    pub fn config(&self) -> &JConfig {
        &self.config
    }

    pub fn config_mut(&mut self) -> &mut JConfig {
        &mut self.config
    }

    /// The master key. Exposed for compromise experiments.
    pub fn master_key(&self) -> &Scalar {
        &self.x
    }

    pub fn is_registered(&self, id: &str) -> bool {
        self.id_table.contains(id)
    }

    /// Per-identity failure counts (always empty unless tracking is on).
    pub fn failure_counts(&self) -> &BTreeMap<String, u64> {
        &self.failures
    }

    /// `B_i = h(ID)^(x + PW) mod p`. Duplicate identities are accepted
    /// unless the config forbids them.
    pub fn register(&mut self, req: &JRegRequest, ops: &mut OpCounter) -> Result<JCard, Reject> {
        if !self.config.allow_duplicate_registration && self.id_table.contains(&req.id) {
            return Err(Reject::DuplicateId);
        }
        let h = self.params.hash_to_group(req.id.as_bytes(), ops);
        let exponent = self.x.value() + self.params.password_exponent(&req.password, ops);
        let b = self.params.mod_exp(&h, &exponent, ops);
        self.id_table.insert(req.id.clone());
        Ok(JCard { b })
    }

    /// Verifies a login message and answers with `{ID, M_S, T_S}`.
    pub fn authenticate(
        &mut self,
        msg: &JLoginMsg,
        clock: &SimClock,
        ops: &mut OpCounter,
    ) -> Result<(JServerReply, JServerSession), Reject> {
        if !self.id_table.contains(&msg.id) {
            return Err(Reject::UnknownId);
        }
        if self.config.track_failures
            && self.failures.get(&msg.id).copied().unwrap_or(0) >= LOCKOUT_THRESHOLD
        {
            return Err(Reject::LockedOut);
        }
        let now = clock.local(Party::Server);
        if !is_fresh(msg.t, now, self.config.delta_t) {
            return Err(Reject::StaleTimestamp);
        }
        let params = &self.params;
        let h = params.hash_to_group(msg.id.as_bytes(), ops);
        let c = params.mod_exp(&h, self.x.value(), ops);
        let w = params.mod_exp(&msg.d, self.x.value(), ops);
        if login_mac(params, &msg.id, &c, &msg.d, &w, msg.t, ops) != msg.m {
            if self.config.track_failures {
                *self.failures.entry(msg.id.clone()).or_insert(0) += 1;
            }
            return Err(Reject::BadMac);
        }
        if self.config.track_failures {
            self.failures.remove(&msg.id);
        }
        let reply = JServerReply {
            id: msg.id.clone(),
            m_s: reply_mac(params, &msg.id, &w, now, ops),
            t_s: now,
        };
        let sk = params.digest_element(&w, ops);
        Ok((
            reply,
            JServerSession {
                id: msg.id.clone(),
                sk,
            },
        ))
    }
}

/// `M = h(ID || C || D || W || T)`.
pub fn login_mac(
    params: &GroupParams,
    id: &str,
    c: &GroupElement,
    d: &GroupElement,
    w: &GroupElement,
    t: u64,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[
            id.as_bytes(),
            &params.encode_element(c),
            &params.encode_element(d),
            &params.encode_element(w),
            &t.to_be_bytes(),
        ],
        ops,
    )
}

/// `M_S = h(ID || W || T_S)`.
pub fn reply_mac(
    params: &GroupParams,
    id: &str,
    w: &GroupElement,
    t_s: u64,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[id.as_bytes(), &params.encode_element(w), &t_s.to_be_bytes()],
        ops,
    )
}

/// The card's side of a server round-trip, used by password change.
pub trait JServerLink {
    fn clock(&self) -> &SimClock;
    fn delta_t(&self) -> u64;
    /// Delivers a login message and returns the server's answer.
    fn exchange(&mut self, login: &JLoginMsg, ops: &mut OpCounter) -> Result<JServerReply, Reject>;
}

/// Outcome of a password change: how many server round-trips it took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JPasswordChange {
    pub round_trips: u32,
}

impl JCard {
    /// Builds a login message. No input checking happens here; a wrong
    /// identity or password still yields a message.
    pub fn login<R: RngCore + ?Sized>(
        &self,
        params: &GroupParams,
        id: &str,
        password: &str,
        clock: &SimClock,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> (JLoginMsg, JClientSession) {
        let h = params.hash_to_group(id.as_bytes(), ops);
        let pw = params.password_exponent(password, ops);
        let h_pw = params.mod_exp(&h, &pw, ops);
        let c = params.mod_div(&self.b, &h_pw, ops);
        let alpha = params.sample_exponent(rng);
        let d = params.mod_exp(&h, alpha.value(), ops);
        let w = params.mod_exp(&c, alpha.value(), ops);
        let t = clock.local(Party::Client);
        let m = login_mac(params, id, &c, &d, &w, t, ops);
        let msg = JLoginMsg {
            id: id.to_string(),
            d,
            m,
            t,
        };
        (msg, JClientSession { alpha, c, w, t })
    }

    /// Confirms the old password through a full login with the server, then
    /// sets `B_new = B * h(ID)^PW_new / h(ID)^PW`.
    #[allow(clippy::too_many_arguments)]
    pub fn change_password<R: RngCore + ?Sized>(
        &mut self,
        params: &GroupParams,
        id: &str,
        password: &str,
        new_password: &str,
        link: &mut dyn JServerLink,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<JPasswordChange, Reject> {
        let (msg, session) = self.login(params, id, password, link.clock(), rng, ops);
        let reply = link.exchange(&msg, ops)?;
        session.finish(params, &reply, id, link.clock(), link.delta_t(), ops)?;

        let h = params.hash_to_group(id.as_bytes(), ops);
        let new_exp = params.password_exponent(new_password, ops);
        let old_exp = params.password_exponent(password, ops);
        let h_new = params.mod_exp(&h, &new_exp, ops);
        let h_old = params.mod_exp(&h, &old_exp, ops);
        let scaled = params.mod_mul(&self.b, &h_new, ops);
        self.b = params.mod_div(&scaled, &h_old, ops);
        Ok(JPasswordChange { round_trips: 1 })
    }
}

/// `h(ID)^x` recovered from a card and the password it was issued for.
pub fn unblind_card(
    params: &GroupParams,
    card: &JCard,
    id: &str,
    password: &str,
    ops: &mut OpCounter,
) -> GroupElement {
    let h = params.hash_to_group(id.as_bytes(), ops);
    let pw: BigUint = params.password_exponent(password, ops);
    let h_pw = params.mod_exp(&h, &pw, ops);
    params.mod_div(&card.b, &h_pw, ops)
}
