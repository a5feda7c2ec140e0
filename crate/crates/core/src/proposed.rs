//! The nonce-based replacement scheme: pseudonymous login, mutual
//! authentication with key confirmation, local password change and card
//! revocation.
//!
//! Hash inputs, all length-framed:
//!
//! | value | definition |
//! |-------|------------|
//! | `W`   | `h(PW ‖ a)` |
//! | `X_i` | `h(ID ‖ N ‖ ID_SC ‖ x)` |
//! | `B`   | `X_i ⊕ W` |
//! | `L`   | `a ⊕ h(ID ⊕ PW)` |
//! | `V`   | `h(ID ‖ a ‖ PW)` |
//! | `M_1` | `h(ID ‖ D_i ‖ X_i)` |
//! | `SK`  | `h(ID ‖ K ‖ X_i)` |
//! | `M_2` | `h(ID ‖ SK ‖ D_i ‖ D_S)` |
//! | `M_3` | `h(ID ‖ SK ‖ K ‖ D_S)` |

use std::collections::BTreeMap;
use std::fmt;

use rand::RngCore;

use crate::counter::OpCounter;
use crate::crypto::{Digest, GroupElement, GroupParams, Scalar, SecurityLabel};
use crate::error::{Reject, StoreError};
use crate::wire::{Reader, Writer, TAG_P_CONFIRM, TAG_P_LOGIN, TAG_P_REGISTER, TAG_P_REPLY};

pub const NID_LEN: usize = 16;
pub const CARD_SECRET_LEN: usize = 16;

const CARD_MAGIC: &[u8; 6] = b"APCARD";
const CARD_VERSION: u8 = 1;

/// Pseudonym that stands in for the identity on the wire.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nid(pub [u8; NID_LEN]);

impl Nid {
    pub fn random<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut b = [0u8; NID_LEN];
        rng.fill_bytes(&mut b);
        Nid(b)
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        bytes.try_into().ok().map(Nid)
    }
}

impl fmt::Debug for Nid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Nid({})", hex::encode(self.0))
    }
}

/// Registration (or reissue) request `(ID, W)`. No password inside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegRequest {
    pub id: String,
    pub w: Digest,
}

impl RegRequest {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new(TAG_P_REGISTER)
            .field(self.id.as_bytes())
            .field(self.w.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_P_REGISTER)?;
        let id = r.string()?;
        let w = Digest::from_bytes(r.field()?);
        r.finish()?;
        Ok(RegRequest { id, w })
    }
}

/// The user's registration nonce `a`. Never leaves the user.
#[derive(Clone, PartialEq, Eq)]
pub struct UserSecret(Digest);

impl UserSecret {
    pub fn as_digest(&self) -> &Digest {
        &self.0
    }
}

impl fmt::Debug for UserSecret {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("UserSecret(..)")
    }
}

/// What the server writes onto a fresh card: `{NID, B}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialCard {
    pub nid: Nid,
    pub b: Digest,
}

/// Full card contents `{NID, B, L, V}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PCard {
    pub nid: Nid,
    pub b: Digest,
    pub l: Digest,
    pub v: Digest,
    pub label: SecurityLabel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordStatus {
    Active,
    Revoked,
}

/// One row of the server's record table, keyed by NID.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserRecord {
    pub nid: Nid,
    /// Reissue counter.
    pub n: u64,
    pub id_sc: [u8; CARD_SECRET_LEN],
    pub id: String,
    pub status: RecordStatus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PLoginMsg {
    pub nid: Nid,
    pub d_i: GroupElement,
    pub m_1: Digest,
}

impl PLoginMsg {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Writer::new(TAG_P_LOGIN)
            .field(&self.nid.0)
            .field(&params.encode_element(&self.d_i))
            .field(self.m_1.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8], params: &GroupParams) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_P_LOGIN)?;
        let nid = Nid::from_slice(r.field()?).ok_or(Reject::Malformed)?;
        let d_i = params
            .decode_element(r.field()?)
            .map_err(|_| Reject::Malformed)?;
        let m_1 = Digest::from_bytes(r.field()?);
        r.finish()?;
        Ok(PLoginMsg { nid, d_i, m_1 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PReplyMsg {
    pub d_s: GroupElement,
    pub m_2: Digest,
}

impl PReplyMsg {
    pub fn encode(&self, params: &GroupParams) -> Vec<u8> {
        Writer::new(TAG_P_REPLY)
            .field(&params.encode_element(&self.d_s))
            .field(self.m_2.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8], params: &GroupParams) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_P_REPLY)?;
        let d_s = params
            .decode_element(r.field()?)
            .map_err(|_| Reject::Malformed)?;
        let m_2 = Digest::from_bytes(r.field()?);
        r.finish()?;
        Ok(PReplyMsg { d_s, m_2 })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PConfirmMsg {
    pub m_3: Digest,
}

impl PConfirmMsg {
    pub fn encode(&self) -> Vec<u8> {
        Writer::new(TAG_P_CONFIRM)
            .field(self.m_3.as_bytes())
            .finish()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, Reject> {
        let mut r = Reader::new(bytes, TAG_P_CONFIRM)?;
        let m_3 = Digest::from_bytes(r.field()?);
        r.finish()?;
        Ok(PConfirmMsg { m_3 })
    }
}

/// `h(ID ⊕ PW)`: the two strings are XORed (shorter one zero-extended) and
/// hashed once.
pub fn id_pw_mask(params: &GroupParams, id: &str, password: &str, ops: &mut OpCounter) -> Digest {
    let mixed = params.xor_padded(id.as_bytes(), password.as_bytes(), ops);
    params.digest(&[&mixed], ops)
}

/// `W = h(PW ‖ a)`.
pub fn password_blind(
    params: &GroupParams,
    password: &str,
    a: &Digest,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(&[password.as_bytes(), a.as_bytes()], ops)
}

/// `V = h(ID ‖ a ‖ PW)`.
pub fn verifier(
    params: &GroupParams,
    id: &str,
    a: &Digest,
    password: &str,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(&[id.as_bytes(), a.as_bytes(), password.as_bytes()], ops)
}

pub fn login_mac(
    params: &GroupParams,
    id: &str,
    d_i: &GroupElement,
    x_i: &Digest,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[id.as_bytes(), &params.encode_element(d_i), x_i.as_bytes()],
        ops,
    )
}

pub fn session_key(
    params: &GroupParams,
    id: &str,
    k: &GroupElement,
    x_i: &Digest,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[id.as_bytes(), &params.encode_element(k), x_i.as_bytes()],
        ops,
    )
}

pub fn reply_mac(
    params: &GroupParams,
    id: &str,
    sk: &Digest,
    d_i: &GroupElement,
    d_s: &GroupElement,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[
            id.as_bytes(),
            sk.as_bytes(),
            &params.encode_element(d_i),
            &params.encode_element(d_s),
        ],
        ops,
    )
}

pub fn confirm_mac(
    params: &GroupParams,
    id: &str,
    sk: &Digest,
    k: &GroupElement,
    d_s: &GroupElement,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[
            id.as_bytes(),
            sk.as_bytes(),
            &params.encode_element(k),
            &params.encode_element(d_s),
        ],
        ops,
    )
}

/// User side of registration: draw `a`, send `(ID, h(PW ‖ a))`.
pub fn begin_registration<R: RngCore + ?Sized>(
    params: &GroupParams,
    id: &str,
    password: &str,
    rng: &mut R,
    ops: &mut OpCounter,
) -> (RegRequest, UserSecret) {
    let mut a = vec![0u8; params.digest_len()];
    rng.fill_bytes(&mut a);
    let a = Digest::from_bytes(a);
    let w = password_blind(params, password, &a, ops);
    (
        RegRequest {
            id: id.to_string(),
            w,
        },
        UserSecret(a),
    )
}

impl PartialCard {
    /// Stores `L` and `V` next to the server's `{NID, B}`.
    pub fn finalize(
        self,
        params: &GroupParams,
        id: &str,
        password: &str,
        secret: &UserSecret,
        ops: &mut OpCounter,
    ) -> PCard {
        let mask = id_pw_mask(params, id, password, ops);
        let l = params
            .xor_digest(&secret.0, &mask, ops)
            .expect("digest lengths match");
        let v = verifier(params, id, &secret.0, password, ops);
        PCard {
            nid: self.nid,
            b: self.b,
            l,
            v,
            label: params.label(),
        }
    }
}

/// Card-side state between login and the server's reply.
#[derive(Clone)]
pub struct PClientSession {
    alpha: Scalar,
    id: String,
    x_i: Digest,
    d_i: GroupElement,
}

impl fmt::Debug for PClientSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PClientSession")
            .field("d_i", &self.d_i)
            .finish_non_exhaustive()
    }
}

impl PClientSession {
    pub fn alpha(&self) -> &Scalar {
        &self.alpha
    }

    pub fn user_key(&self) -> &Digest {
        &self.x_i
    }

    /// Verifies `M_2`, which authenticates the server and its session key,
    /// and answers with `M_3`.
    pub fn finish(
        self,
        params: &GroupParams,
        reply: &PReplyMsg,
        ops: &mut OpCounter,
    ) -> Result<(PConfirmMsg, Digest), Reject> {
        let k_i = params.mod_exp(&reply.d_s, self.alpha.value(), ops);
        let sk = session_key(params, &self.id, &k_i, &self.x_i, ops);
        if reply_mac(params, &self.id, &sk, &self.d_i, &reply.d_s, ops) != reply.m_2 {
            return Err(Reject::BadMac);
        }
        let m_3 = confirm_mac(params, &self.id, &sk, &k_i, &reply.d_s, ops);
        Ok((PConfirmMsg { m_3 }, sk))
    }
}

/// Server-side state between its reply and the client's confirmation.
pub struct PServerSession {
    beta: Scalar,
    nid: Nid,
    id: String,
    k_s: GroupElement,
    sk: Digest,
    d_i: GroupElement,
    d_s: GroupElement,
}

impl fmt::Debug for PServerSession {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PServerSession")
            .field("nid", &self.nid)
            .finish_non_exhaustive()
    }
}

impl PServerSession {
    pub fn beta(&self) -> &Scalar {
        &self.beta
    }

    pub fn nid(&self) -> Nid {
        self.nid
    }

    pub fn d_i(&self) -> &GroupElement {
        &self.d_i
    }

    pub fn d_s(&self) -> &GroupElement {
        &self.d_s
    }

    /// The key the server derived, before confirmation. Only for inspection.
    pub fn pending_key(&self) -> &Digest {
        &self.sk
    }

    /// Verifies `M_3`; on success both ends hold the same key.
    pub fn confirm(
        self,
        params: &GroupParams,
        confirm: &PConfirmMsg,
        ops: &mut OpCounter,
    ) -> Result<Digest, Reject> {
        let expected = confirm_mac(params, &self.id, &self.sk, &self.k_s, &self.d_s, ops);
        if expected != confirm.m_3 {
            return Err(Reject::BadMac);
        }
        Ok(self.sk)
    }
}

impl PCard {
    /// Recovers `a` and checks `V`. Wrong identity and wrong password are
    /// reported the same way.
    fn unlock(
        &self,
        params: &GroupParams,
        id: &str,
        password: &str,
        ops: &mut OpCounter,
    ) -> Result<Digest, Reject> {
        let mask = id_pw_mask(params, id, password, ops);
        let a = params
            .xor_digest(&self.l, &mask, ops)
            .map_err(|_| Reject::BadCredentials)?;
        if verifier(params, id, &a, password, ops) != self.v {
            return Err(Reject::BadCredentials);
        }
        Ok(a)
    }

    /// Card-side login. Bad input is caught here and nothing is sent.
    pub fn login_start<R: RngCore + ?Sized>(
        &self,
        params: &GroupParams,
        id: &str,
        password: &str,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<(PLoginMsg, PClientSession), Reject> {
        let a = self.unlock(params, id, password, ops)?;
        let w = password_blind(params, password, &a, ops);
        let x_i = params
            .xor_digest(&self.b, &w, ops)
            .map_err(|_| Reject::BadCredentials)?;
        let alpha = params.sample_exponent(rng);
        let h = params.hash_to_group(id.as_bytes(), ops);
        let d_i = params.mod_exp(&h, alpha.value(), ops);
        let m_1 = login_mac(params, id, &d_i, &x_i, ops);
        let msg = PLoginMsg {
            nid: self.nid,
            d_i: d_i.clone(),
            m_1,
        };
        Ok((
            msg,
            PClientSession {
                alpha,
                id: id.to_string(),
                x_i,
                d_i,
            },
        ))
    }

    /// Local password change. The card is returned updated; on failure the
    /// caller's card is untouched.
    pub fn change_password(
        &self,
        params: &GroupParams,
        id: &str,
        password: &str,
        new_password: &str,
        ops: &mut OpCounter,
    ) -> Result<PCard, Reject> {
        let a = self.unlock(params, id, password, ops)?;
        let w = password_blind(params, password, &a, ops);
        let w_new = password_blind(params, new_password, &a, ops);
        let b = params
            .xor_digest(&self.b, &w, ops)
            .map_err(|_| Reject::BadCredentials)?;
        let b = params
            .xor_digest(&b, &w_new, ops)
            .map_err(|_| Reject::BadCredentials)?;
        let mask = id_pw_mask(params, id, new_password, ops);
        let l = params
            .xor_digest(&a, &mask, ops)
            .map_err(|_| Reject::BadCredentials)?;
        let v = verifier(params, id, &a, new_password, ops);
        Ok(PCard {
            nid: self.nid,
            b,
            l,
            v,
            label: self.label,
        })
    }

    /// Versioned binary export: magic, version, label id, then NID, B, L, V
    /// as length-prefixed fields.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = CARD_MAGIC.to_vec();
        out.push(CARD_VERSION);
        out.push(self.label.id());
        let body = Writer::new(0)
            .field(&self.nid.0)
            .field(self.b.as_bytes())
            .field(self.l.as_bytes())
            .field(self.v.as_bytes())
            .finish();
        out.extend_from_slice(&body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<PCard, StoreError> {
        let head = CARD_MAGIC.len();
        if bytes.len() < head + 2 || &bytes[..head] != CARD_MAGIC {
            return Err(StoreError::BadMagic);
        }
        if bytes[head] != CARD_VERSION {
            return Err(StoreError::UnsupportedVersion(bytes[head]));
        }
        let label = SecurityLabel::from_id(bytes[head + 1])
            .ok_or(StoreError::Malformed("unknown params id"))?;
        let bad = |_| StoreError::Malformed("card fields");
        let mut r = Reader::new(&bytes[head + 2..], 0).map_err(bad)?;
        let nid =
            Nid::from_slice(r.field().map_err(bad)?).ok_or(StoreError::Malformed("nid length"))?;
        let b = Digest::from_bytes(r.field().map_err(bad)?);
        let l = Digest::from_bytes(r.field().map_err(bad)?);
        let v = Digest::from_bytes(r.field().map_err(bad)?);
        r.finish().map_err(bad)?;
        let len = label.digest_len();
        if b.len() != len || l.len() != len || v.len() != len {
            return Err(StoreError::Malformed("digest length"));
        }
        Ok(PCard {
            nid,
            b,
            l,
            v,
            label,
        })
    }
}

/// Server state: master key, record table keyed by NID, and an index from
/// identity to the active record's reissue counter.
#[derive(Clone)]
pub struct PServerState {
    params: GroupParams,
    x: Scalar,
    records: BTreeMap<Nid, UserRecord>,
    id_index: BTreeMap<String, u64>,
}

impl fmt::Debug for PServerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PServerState")
            .field("params", &self.params)
            .field("records", &self.records.len())
            .finish_non_exhaustive()
    }
}

impl PartialEq for PServerState {
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.x == other.x
            && self.records == other.records
            && self.id_index == other.id_index
    }
}

impl PServerState {
    /// Initialization for a security label.
    pub fn setup<R: RngCore + ?Sized>(label: SecurityLabel, rng: &mut R) -> Self {
        let params = GroupParams::for_label(label);
        let x = params.sample_exponent(rng);
        Self::with_master_key(params, x)
    }

    pub fn with_master_key(params: GroupParams, x: Scalar) -> Self {
        PServerState {
            params,
            x,
            records: BTreeMap::new(),
            id_index: BTreeMap::new(),
        }
    }

    /// Rebuilds a server from persisted rows. The identity index is derived
    /// from the active rows.
    pub fn from_records(params: GroupParams, x: Scalar, rows: Vec<UserRecord>) -> Self {
        let mut s = Self::with_master_key(params, x);
        for row in rows {
            if row.status == RecordStatus::Active {
                s.id_index.insert(row.id.clone(), row.n);
            }
            s.records.insert(row.nid, row);
        }
        s
    }

    pub fn params(&self) -> &GroupParams {
        &self.params
    }

    /// The master key. Exposed for persistence and compromise experiments.
    pub fn master_key(&self) -> &Scalar {
        &self.x
    }

    pub fn records(&self) -> &BTreeMap<Nid, UserRecord> {
        &self.records
    }

    pub fn id_index(&self) -> &BTreeMap<String, u64> {
        &self.id_index
    }

    /// `X_i = h(ID ‖ N ‖ ID_SC ‖ x)` for a record.
    pub fn user_key(&self, record: &UserRecord, ops: &mut OpCounter) -> Digest {
        derive_user_key(
            &self.params,
            &record.id,
            record.n,
            &record.id_sc,
            &self.x,
            ops,
        )
    }

    fn fresh_nid<R: RngCore + ?Sized>(&self, rng: &mut R) -> Nid {
        loop {
            let nid = Nid::random(rng);
            if !self.records.contains_key(&nid) {
                return nid;
            }
        }
    }

    fn issue<R: RngCore + ?Sized>(
        &mut self,
        id: &str,
        n: u64,
        w: &Digest,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<PartialCard, Reject> {
        let nid = self.fresh_nid(rng);
        let mut id_sc = [0u8; CARD_SECRET_LEN];
        rng.fill_bytes(&mut id_sc);
        let record = UserRecord {
            nid,
            n,
            id_sc,
            id: id.to_string(),
            status: RecordStatus::Active,
        };
        let x_i = self.user_key(&record, ops);
        let b = self
            .params
            .xor_digest(&x_i, w, ops)
            .map_err(|_| Reject::Malformed)?;
        self.records.insert(nid, record);
        self.id_index.insert(id.to_string(), n);
        Ok(PartialCard { nid, b })
    }

    /// Registers a new identity. An identity that already has an active card
    /// is refused.
    pub fn register<R: RngCore + ?Sized>(
        &mut self,
        req: &RegRequest,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<PartialCard, Reject> {
        if self.id_index.contains_key(&req.id) {
            return Err(Reject::DuplicateId);
        }
        self.issue(&req.id, 0, &req.w, rng, ops)
    }

    /// Revokes the identity's current card and issues a new one with the
    /// reissue counter bumped.
    pub fn revoke_and_reissue<R: RngCore + ?Sized>(
        &mut self,
        req: &RegRequest,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<PartialCard, Reject> {
        let n = *self.id_index.get(&req.id).ok_or(Reject::UnknownId)?;
        for rec in self.records.values_mut() {
            if rec.id == req.id {
                rec.status = RecordStatus::Revoked;
            }
        }
        self.issue(&req.id, n + 1, &req.w, rng, ops)
    }

    /// Checks a login message and answers with `<D_S, M_2>`.
    pub fn respond<R: RngCore + ?Sized>(
        &self,
        msg: &PLoginMsg,
        rng: &mut R,
        ops: &mut OpCounter,
    ) -> Result<(PReplyMsg, PServerSession), Reject> {
        let record = match self.records.get(&msg.nid) {
            Some(r) if r.status == RecordStatus::Active => r,
            _ => return Err(Reject::UnknownNid),
        };
        let params = &self.params;
        let x_i = self.user_key(record, ops);
        if login_mac(params, &record.id, &msg.d_i, &x_i, ops) != msg.m_1 {
            return Err(Reject::BadMac);
        }
        let beta = params.sample_exponent(rng);
        let h = params.hash_to_group(record.id.as_bytes(), ops);
        let d_s = params.mod_exp(&h, beta.value(), ops);
        let k_s = params.mod_exp(&msg.d_i, beta.value(), ops);
        let sk = session_key(params, &record.id, &k_s, &x_i, ops);
        let m_2 = reply_mac(params, &record.id, &sk, &msg.d_i, &d_s, ops);
        let session = PServerSession {
            beta,
            nid: msg.nid,
            id: record.id.clone(),
            k_s,
            sk,
            d_i: msg.d_i.clone(),
            d_s: d_s.clone(),
        };
        Ok((PReplyMsg { d_s, m_2 }, session))
    }
}

pub fn derive_user_key(
    params: &GroupParams,
    id: &str,
    n: u64,
    id_sc: &[u8],
    x: &Scalar,
    ops: &mut OpCounter,
) -> Digest {
    params.digest(
        &[
            id.as_bytes(),
            &n.to_be_bytes(),
            id_sc,
            &params.encode_scalar(x),
        ],
        ops,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{seeded_rng, LabRng};

    fn enrol(server: &mut PServerState, id: &str, pw: &str, rng: &mut LabRng) -> PCard {
        let params = server.params().clone();
        let mut ops = OpCounter::new();
        let (req, a) = begin_registration(&params, id, pw, rng, &mut ops);
        let partial = server.register(&req, rng, &mut ops).unwrap();
        partial.finalize(&params, id, pw, &a, &mut ops)
    }

    fn full_run(
        server: &PServerState,
        card: &PCard,
        id: &str,
        pw: &str,
        rng: &mut LabRng,
    ) -> Result<(Digest, Digest), Reject> {
        let params = server.params();
        let mut ops = OpCounter::new();
        let (login, cs) = card.login_start(params, id, pw, rng, &mut ops)?;
        let (reply, ss) = server.respond(&login, rng, &mut ops)?;
        let (confirm, sk_c) = cs.finish(params, &reply, &mut ops)?;
        let sk_s = ss.confirm(params, &confirm, &mut ops)?;
        Ok((sk_c, sk_s))
    }

    #[test]
    fn setup_ranges_and_seeds() {
        let a = PServerState::setup(SecurityLabel::TestTiny, &mut seeded_rng(1));
        let b = PServerState::setup(SecurityLabel::TestTiny, &mut seeded_rng(2));
        let x: u64 = a.master_key().value().try_into().unwrap();
        assert!((1..=10).contains(&x));
        let a = PServerState::setup(SecurityLabel::Test512, &mut seeded_rng(1));
        let b2 = PServerState::setup(SecurityLabel::Test512, &mut seeded_rng(2));
        assert_ne!(a.master_key(), b2.master_key());
        assert!(b.records().is_empty());
    }

    #[test]
    fn registration_request_hides_password() {
        let params = GroupParams::for_label(SecurityLabel::Test512);
        let mut rng = seeded_rng(3);
        let mut ops = OpCounter::new();
        let mut pw = [0u8; 16];
        rng.fill_bytes(&mut pw);
        let pw = hex::encode(pw);
        let (r1, _) = begin_registration(&params, "alice", &pw, &mut rng, &mut ops);
        let (r2, _) = begin_registration(&params, "alice", &pw, &mut rng, &mut ops);
        assert_ne!(r1.w, r2.w);
        assert_eq!(r1.w.len(), params.digest_len());
        let bytes = r1.encode();
        for window in 4..=pw.len() {
            for start in 0..=pw.len() - window {
                let needle = &pw.as_bytes()[start..start + window];
                assert!(!bytes.windows(window).any(|w| w == needle));
            }
        }
        assert_eq!(RegRequest::decode(&bytes).unwrap(), r1);
    }

    #[test]
    fn register_then_duplicate() {
        let mut rng = seeded_rng(4);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();
        let (req, a) = begin_registration(&params, "alice", "pw", &mut rng, &mut ops);
        let partial = server.register(&req, &mut rng, &mut ops).unwrap();
        assert_eq!(server.records().len(), 1);
        let rec = &server.records()[&partial.nid];
        assert_eq!(rec.n, 0);
        let x_i = server.user_key(rec, &mut ops);
        assert_eq!(
            params.xor_digest(&partial.b, &req.w, &mut ops).unwrap(),
            x_i
        );

        let card = partial.finalize(&params, "alice", "pw", &a, &mut ops);
        let mask = id_pw_mask(&params, "alice", "pw", &mut ops);
        assert_eq!(
            &params.xor_digest(&card.l, &mask, &mut ops).unwrap(),
            a.as_digest()
        );
        assert_eq!(
            card.v,
            verifier(&params, "alice", a.as_digest(), "pw", &mut ops)
        );

        let (req2, _) = begin_registration(&params, "alice", "other", &mut rng, &mut ops);
        assert_eq!(
            server.register(&req2, &mut rng, &mut ops),
            Err(Reject::DuplicateId)
        );
    }

    #[test]
    fn honest_run_agrees() {
        let mut rng = seeded_rng(5);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let card = enrol(&mut server, "alice", "pw", &mut rng);
        let (a, b) = full_run(&server, &card, "alice", "pw", &mut rng).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn wrong_credentials_rejected_locally() {
        let mut rng = seeded_rng(6);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let card = enrol(&mut server, "alice", "pw", &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();
        for (id, pw) in [("alice", "pX"), ("alicX", "pw"), ("bob", "nope")] {
            let err = card
                .login_start(&params, id, pw, &mut rng, &mut ops)
                .unwrap_err();
            assert_eq!(err, Reject::BadCredentials);
        }
    }

    #[test]
    fn tampering_is_caught() {
        let mut rng = seeded_rng(7);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let card = enrol(&mut server, "alice", "pw", &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();

        let (mut login, _) = card
            .login_start(&params, "alice", "pw", &mut rng, &mut ops)
            .unwrap();
        let mut m = login.m_1.as_bytes().to_vec();
        m[3] ^= 0x10;
        login.m_1 = Digest::from_bytes(m);
        assert_eq!(
            server.respond(&login, &mut rng, &mut ops).unwrap_err(),
            Reject::BadMac
        );

        let (login, cs) = card
            .login_start(&params, "alice", "pw", &mut rng, &mut ops)
            .unwrap();
        let (mut reply, _) = server.respond(&login, &mut rng, &mut ops).unwrap();
        reply.d_s = params.mod_mul(&reply.d_s, &login.d_i, &mut ops);
        assert_eq!(
            cs.finish(&params, &reply, &mut ops).unwrap_err(),
            Reject::BadMac
        );

        let (login, cs) = card
            .login_start(&params, "alice", "pw", &mut rng, &mut ops)
            .unwrap();
        let (reply, ss) = server.respond(&login, &mut rng, &mut ops).unwrap();
        let (confirm, _) = cs.finish(&params, &reply, &mut ops).unwrap();
        let truncated = PConfirmMsg {
            m_3: Digest::from_bytes(&confirm.m_3.as_bytes()[..10]),
        };
        assert_eq!(
            ss.confirm(&params, &truncated, &mut ops).unwrap_err(),
            Reject::BadMac
        );
    }

    #[test]
    fn password_change_is_local_and_checked() {
        let mut rng = seeded_rng(8);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let card = enrol(&mut server, "alice", "pw", &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();
        assert_eq!(
            card.change_password(&params, "alice", "bad", "new", &mut ops),
            Err(Reject::BadCredentials)
        );
        let changed = card
            .change_password(&params, "alice", "pw", "new", &mut ops)
            .unwrap();
        assert!(full_run(&server, &changed, "alice", "new", &mut rng).is_ok());
        assert_eq!(
            full_run(&server, &changed, "alice", "pw", &mut rng).unwrap_err(),
            Reject::BadCredentials
        );
    }

    #[test]
    fn reissue_revokes_old_card() {
        let mut rng = seeded_rng(9);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let old = enrol(&mut server, "alice", "pw", &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();

        let (req, a) = begin_registration(&params, "alice", "pw2", &mut rng, &mut ops);
        let partial = server.revoke_and_reissue(&req, &mut rng, &mut ops).unwrap();
        let new = partial.finalize(&params, "alice", "pw2", &a, &mut ops);
        assert_eq!(server.id_index()["alice"], 1);
        assert_eq!(
            full_run(&server, &old, "alice", "pw", &mut rng).unwrap_err(),
            Reject::UnknownNid
        );
        assert!(full_run(&server, &new, "alice", "pw2", &mut rng).is_ok());
        let active = server
            .records()
            .values()
            .filter(|r| r.status == RecordStatus::Active)
            .count();
        assert_eq!(active, 1);

        let (req, _) = begin_registration(&params, "nobody", "pw", &mut rng, &mut ops);
        assert_eq!(
            server.revoke_and_reissue(&req, &mut rng, &mut ops),
            Err(Reject::UnknownId)
        );
    }

    #[test]
    fn messages_and_card_roundtrip() {
        let mut rng = seeded_rng(10);
        let mut server = PServerState::setup(SecurityLabel::Test512, &mut rng);
        let card = enrol(&mut server, "alice", "pw", &mut rng);
        let params = server.params().clone();
        let mut ops = OpCounter::new();
        let (login, cs) = card
            .login_start(&params, "alice", "pw", &mut rng, &mut ops)
            .unwrap();
        assert_eq!(
            PLoginMsg::decode(&login.encode(&params), &params).unwrap(),
            login
        );
        let (reply, _) = server.respond(&login, &mut rng, &mut ops).unwrap();
        assert_eq!(
            PReplyMsg::decode(&reply.encode(&params), &params).unwrap(),
            reply
        );
        let (confirm, _) = cs.finish(&params, &reply, &mut ops).unwrap();
        assert_eq!(PConfirmMsg::decode(&confirm.encode()).unwrap(), confirm);

        assert_eq!(PCard::from_bytes(&card.to_bytes()).unwrap(), card);
        let mut bad = card.to_bytes();
        bad[6] = 9;
        assert!(matches!(
            PCard::from_bytes(&bad),
            Err(StoreError::UnsupportedVersion(9))
        ));
    }
}
