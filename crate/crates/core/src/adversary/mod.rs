//! Network adversary, attack implementations and the comparison matrix.
//!
//! Every attack returns an [`AttackReport`] whose outcome is computed from
//! its [`Evidence`]: a report can only say `Succeeded` if the evidence checks
//! out against ground truth held by the caller (a recovered secret equal to
//! the real one, or a session key equal to the one the genuine server holds).

mod attacks;
mod channel;
mod dictionary;
mod matrix;
mod world;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use attacks::*;
pub use channel::{Channel, Envelope, Hooks};
pub use dictionary::{default_dictionary, load_dictionary, random_credential, ALPHABET};
pub use matrix::{attack_matrix, AttackMatrix, Cell, MatrixConfig, MatrixRow};
pub use world::{JRun, JiangWorld, PRun, ProposedWorld, ServerEvent};

use crate::counter::OpCounts;
use crate::crypto::{Digest, GroupElement, Scalar};
use crate::error::Reject;
use crate::jiang::JCard;
use crate::proposed::{PCard, UserRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Jiang,
    Proposed,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::Jiang => "jiang",
            Scheme::Proposed => "proposed",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "jiang" => Some(Scheme::Jiang),
            "proposed" => Some(Scheme::Proposed),
            _ => None,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Succeeded,
    Failed,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Succeeded => "succeeded",
            Outcome::Failed => "failed",
        }
    }
}

/// What an attack produced, together with the ground truth to check it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Evidence {
    /// A recovered password or identity.
    Secret {
        kind: &'static str,
        recovered: Option<String>,
        truth: String,
    },
    /// Candidate session keys against the key the genuine server holds.
    SessionKey {
        candidates: Vec<Digest>,
        genuine: Result<Digest, Reject>,
    },
    /// Forged messages submitted to a genuine endpoint.
    Forgery {
        attempts: u64,
        accepted: u64,
        reject: Option<Reject>,
    },
    /// An honest run under adverse conditions.
    HonestRun { reject: Option<Reject> },
    /// Messages an honest party put on the wire for a doomed attempt.
    WastedMessages { sent: u64, reject: Option<Reject> },
    /// Whether a password change needs the server.
    ServerDependence {
        round_trips: u32,
        offline_reject: Option<Reject>,
    },
    /// Whether the server committed to a key the client never confirmed.
    UnconfirmedKey {
        server_committed: bool,
        client_finished: bool,
    },
    /// Login with a card that should have been revoked.
    RevokedCard { reject: Option<Reject> },
    /// The attack could not run because a capability was not granted.
    MissingCapability(Capability),
}

impl Evidence {
    /// True iff the evidence demonstrates the attack.
    pub fn verifies(&self) -> bool {
        match self {
            Evidence::Secret {
                recovered, truth, ..
            } => recovered.as_deref() == Some(truth.as_str()),
            Evidence::SessionKey {
                candidates,
                genuine,
            } => match genuine {
                Ok(sk) => candidates.contains(sk),
                Err(_) => false,
            },
            Evidence::Forgery { accepted, .. } => *accepted > 0,
            Evidence::HonestRun { reject } => reject.is_some(),
            Evidence::WastedMessages { sent, reject } => *sent > 0 && reject.is_some(),
            Evidence::ServerDependence {
                round_trips,
                offline_reject,
            } => *round_trips > 0 || offline_reject.is_some(),
            Evidence::UnconfirmedKey {
                server_committed,
                client_finished,
            } => *server_committed && !*client_finished,
            Evidence::RevokedCard { reject } => reject.is_none(),
            Evidence::MissingCapability(_) => false,
        }
    }

    /// One-line summary without secrets beyond what the attack recovered.
    pub fn summary(&self) -> String {
        let r = |x: &Option<Reject>| x.map_or("none".to_string(), |r| r.as_str().to_string());
        match self {
            Evidence::Secret {
                kind, recovered, ..
            } => match recovered {
                Some(v) => format!("recovered {kind} '{v}'"),
                None => format!("no {kind} recovered"),
            },
            Evidence::SessionKey {
                candidates,
                genuine,
            } => match genuine {
                Ok(sk) if candidates.contains(sk) => {
                    format!("session key recovered ({})", hex::encode(sk.as_bytes()))
                }
                Ok(_) => format!("{} candidate keys, none match", candidates.len()),
                Err(e) => format!("{} candidate keys, server {}", candidates.len(), e),
            },
            Evidence::Forgery {
                attempts,
                accepted,
                reject,
            } => {
                format!(
                    "{accepted}/{attempts} forgeries accepted, last reject {}",
                    r(reject)
                )
            }
            Evidence::HonestRun { reject } => format!("honest run reject {}", r(reject)),
            Evidence::WastedMessages { sent, reject } => {
                format!("{sent} messages sent, server reject {}", r(reject))
            }
            Evidence::ServerDependence {
                round_trips,
                offline_reject,
            } => {
                format!(
                    "{round_trips} server round trips, offline reject {}",
                    r(offline_reject)
                )
            }
            Evidence::UnconfirmedKey {
                server_committed,
                client_finished,
            } => {
                format!("server committed {server_committed}, client finished {client_finished}")
            }
            Evidence::RevokedCard { reject } => format!("old card reject {}", r(reject)),
            Evidence::MissingCapability(c) => format!("missing capability {}", c.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttackReport {
    pub attack: &'static str,
    pub scheme: Scheme,
    pub outcome: Outcome,
    pub evidence: Evidence,
    pub probes: u64,
    /// Channel messages emitted during the attack.
    pub messages: u64,
    pub counts: OpCounts,
    pub notes: Vec<String>,
}

impl AttackReport {
    pub fn new(attack: &'static str, scheme: Scheme, evidence: Evidence) -> Self {
        let outcome = if evidence.verifies() {
            Outcome::Succeeded
        } else {
            Outcome::Failed
        };
        AttackReport {
            attack,
            scheme,
            outcome,
            evidence,
            probes: 0,
            messages: 0,
            counts: OpCounts::default(),
            notes: Vec::new(),
        }
    }

    pub fn probes(mut self, n: u64) -> Self {
        self.probes = n;
        self
    }

    pub fn messages(mut self, n: u64) -> Self {
        self.messages = n;
        self
    }

    pub fn counts(mut self, c: OpCounts) -> Self {
        self.counts = c;
        self
    }

    pub fn note(mut self, s: impl Into<String>) -> Self {
        self.notes.push(s.into());
        self
    }

    pub fn succeeded(&self) -> bool {
        self.outcome == Outcome::Succeeded
    }

    /// Tab-separated line in the same style as transcript events.
    pub fn to_line(&self) -> String {
        let mut line = format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.attack,
            self.scheme,
            self.outcome.as_str(),
            self.probes,
            self.messages,
            self.counts,
            self.evidence.summary()
        );
        for n in &self.notes {
            line.push('\t');
            line.push_str(n);
        }
        line
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Capability {
    /// Read the registration channel (malicious insider).
    ObserveRegistration,
    /// Read every value stored on a card.
    DumpCard,
    /// Read messages on the public channel.
    Eavesdrop,
    /// Register identities of the adversary's choice.
    Register,
    /// Learn the server's master key, together with its record table.
    CompromiseMasterKey,
    /// Learn a user's long-term key.
    CompromiseUserKey,
    /// Learn a session's ephemeral exponents.
    LeakEphemeral,
}

impl Capability {
    pub fn as_str(self) -> &'static str {
        match self {
            Capability::ObserveRegistration => "observe-registration",
            Capability::DumpCard => "dump-card",
            Capability::Eavesdrop => "eavesdrop",
            Capability::Register => "register",
            Capability::CompromiseMasterKey => "compromise-master-key",
            Capability::CompromiseUserKey => "compromise-user-key",
            Capability::LeakEphemeral => "leak-ephemeral",
        }
    }
}

/// Everything the adversary knows. Secret material can only be added through
/// methods that check a granted capability; the dictionaries are public.
#[derive(Debug, Clone, Default)]
pub struct AdversaryState {
    granted: BTreeSet<Capability>,
    registration_traffic: Vec<Vec<u8>>,
    jiang_cards: Vec<JCard>,
    cards: Vec<PCard>,
    recorded: Vec<Vec<u8>>,
    extracted_keys: BTreeMap<String, GroupElement>,
    user_keys: BTreeMap<String, Digest>,
    master_key: Option<Scalar>,
    server_records: Vec<UserRecord>,
    alpha: Option<Scalar>,
    beta: Option<Scalar>,
    pub dictionary: Vec<String>,
    pub id_dictionary: Vec<String>,
}

impl AdversaryState {
    pub fn new(dictionary: Vec<String>, id_dictionary: Vec<String>) -> Self {
        AdversaryState {
            dictionary,
            id_dictionary,
            ..Default::default()
        }
    }

    pub fn grant(&mut self, cap: Capability) -> &mut Self {
        self.granted.insert(cap);
        self
    }

    pub fn granted(&self) -> &BTreeSet<Capability> {
        &self.granted
    }

    pub fn has(&self, cap: Capability) -> bool {
        self.granted.contains(&cap)
    }

    fn require(&self, cap: Capability) -> Result<(), Capability> {
        if self.has(cap) {
            Ok(())
        } else {
            Err(cap)
        }
    }

    pub fn observe_registration(&mut self, bytes: &[u8]) -> Result<(), Capability> {
        self.require(Capability::ObserveRegistration)?;
        self.registration_traffic.push(bytes.to_vec());
        Ok(())
    }

    pub fn dump_jiang_card(&mut self, card: &JCard) -> Result<(), Capability> {
        self.require(Capability::DumpCard)?;
        self.jiang_cards.push(card.clone());
        Ok(())
    }

    pub fn dump_card(&mut self, card: &PCard) -> Result<(), Capability> {
        self.require(Capability::DumpCard)?;
        self.cards.push(card.clone());
        Ok(())
    }

    pub fn record(&mut self, bytes: &[u8]) -> Result<(), Capability> {
        self.require(Capability::Eavesdrop)?;
        self.recorded.push(bytes.to_vec());
        Ok(())
    }

    /// Records every message the channel has let the adversary see.
    pub fn record_all(&mut self, channel: &Channel) -> Result<(), Capability> {
        self.require(Capability::Eavesdrop)?;
        self.recorded
            .extend(channel.observed().iter().map(|e| e.payload.clone()));
        Ok(())
    }

    /// `h(ID)^x` obtained by registering (extraction) or by compromise.
    pub fn learn_extracted_key(&mut self, id: &str, key: GroupElement) -> Result<(), Capability> {
        if !self.has(Capability::Register) {
            self.require(Capability::CompromiseUserKey)?;
        }
        self.extracted_keys.insert(id.to_string(), key);
        Ok(())
    }

    pub fn compromise_user_key(&mut self, id: &str, key: &Digest) -> Result<(), Capability> {
        self.require(Capability::CompromiseUserKey)?;
        self.user_keys.insert(id.to_string(), key.clone());
        Ok(())
    }

    pub fn compromise_master_key(
        &mut self,
        x: &Scalar,
        records: Vec<UserRecord>,
    ) -> Result<(), Capability> {
        self.require(Capability::CompromiseMasterKey)?;
        self.master_key = Some(x.clone());
        self.server_records = records;
        Ok(())
    }

    pub fn leak_ephemeral(
        &mut self,
        alpha: Option<&Scalar>,
        beta: Option<&Scalar>,
    ) -> Result<(), Capability> {
        self.require(Capability::LeakEphemeral)?;
        self.alpha = alpha.cloned();
        self.beta = beta.cloned();
        Ok(())
    }

    pub fn registration_traffic(&self) -> &[Vec<u8>] {
        &self.registration_traffic
    }

    pub fn jiang_cards(&self) -> &[JCard] {
        &self.jiang_cards
    }

    pub fn cards(&self) -> &[PCard] {
        &self.cards
    }

    pub fn recorded(&self) -> &[Vec<u8>] {
        &self.recorded
    }

    pub fn extracted_keys(&self) -> &BTreeMap<String, GroupElement> {
        &self.extracted_keys
    }

    pub fn user_keys(&self) -> &BTreeMap<String, Digest> {
        &self.user_keys
    }

    pub fn master_key(&self) -> Option<&Scalar> {
        self.master_key.as_ref()
    }

    pub fn server_records(&self) -> &[UserRecord] {
        &self.server_records
    }

    pub fn alpha(&self) -> Option<&Scalar> {
        self.alpha.as_ref()
    }

    pub fn beta(&self) -> Option<&Scalar> {
        self.beta.as_ref()
    }

    /// Names of the secret-bearing fields that hold anything.
    pub fn holdings(&self) -> BTreeSet<&'static str> {
        let mut h = BTreeSet::new();
        let mut add = |cond: bool, name| {
            if cond {
                h.insert(name);
            }
        };
        add(
            !self.registration_traffic.is_empty(),
            "registration-traffic",
        );
        add(
            !self.jiang_cards.is_empty() || !self.cards.is_empty(),
            "cards",
        );
        add(!self.recorded.is_empty(), "recorded");
        add(!self.extracted_keys.is_empty(), "extracted-keys");
        add(!self.user_keys.is_empty(), "user-keys");
        add(
            self.master_key.is_some() || !self.server_records.is_empty(),
            "master-key",
        );
        add(self.alpha.is_some() || self.beta.is_some(), "ephemeral");
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_refuses_ungranted_material() {
        let mut adv = AdversaryState::default();
        assert_eq!(adv.record(b"x"), Err(Capability::Eavesdrop));
        assert_eq!(
            adv.observe_registration(b"x"),
            Err(Capability::ObserveRegistration)
        );
        assert_eq!(
            adv.leak_ephemeral(None, None),
            Err(Capability::LeakEphemeral)
        );
        assert!(adv.holdings().is_empty());
        adv.grant(Capability::Eavesdrop);
        adv.record(b"x").unwrap();
        assert_eq!(
            adv.holdings().into_iter().collect::<Vec<_>>(),
            vec!["recorded"]
        );
    }

    #[test]
    fn outcome_follows_evidence() {
        let truth = "pw".to_string();
        let ok = AttackReport::new(
            "t",
            Scheme::Jiang,
            Evidence::Secret {
                kind: "password",
                recovered: Some("pw".into()),
                truth: truth.clone(),
            },
        );
        let wrong = AttackReport::new(
            "t",
            Scheme::Jiang,
            Evidence::Secret {
                kind: "password",
                recovered: Some("pX".into()),
                truth,
            },
        );
        assert!(ok.succeeded());
        assert!(!wrong.succeeded());
        let sk = Digest::from_bytes(vec![1; 20]);
        let e = Evidence::SessionKey {
            candidates: vec![sk.clone()],
            genuine: Err(Reject::BadMac),
        };
        assert!(!e.verifies());
        let e = Evidence::SessionKey {
            candidates: vec![sk.clone()],
            genuine: Ok(sk),
        };
        assert!(e.verifies());
        assert!(!Evidence::MissingCapability(Capability::DumpCard).verifies());
    }
}
