//! Honest drivers: one server, its clients and the channel between them.

use crate::clock::{Party, SimClock};
use crate::counter::{OpCounter, Phase};
use crate::crypto::{seeded_rng, Digest, GroupParams, LabRng, Scalar, SecurityLabel};
use crate::error::Reject;
use crate::jiang::{
    JCard, JConfig, JLoginMsg, JPasswordChange, JRegRequest, JServerLink, JServerReply,
    JServerState,
};
use crate::proposed::{
    begin_registration, PCard, PConfirmMsg, PLoginMsg, PReplyMsg, PServerSession, PServerState,
};
use crate::registry::Direction;
use crate::wire::{tag_of, TAG_P_CONFIRM, TAG_P_LOGIN};

use super::channel::Channel;

/// What the server did with the next message addressed to it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ServerEvent {
    /// Nothing arrived.
    Idle,
    /// Sent a reply and is waiting for confirmation.
    Replied,
    /// Accepted the session with this key.
    Accepted(Digest),
    Rejected(Reject),
}

/// One Jiang login as seen from both ends.
#[derive(Debug, Clone)]
pub struct JRun {
    pub login: JLoginMsg,
    pub alpha: Scalar,
    /// `None` if the login never reached the server.
    pub server: Option<Result<Digest, Reject>>,
    pub client: Result<Digest, Reject>,
}

impl JRun {
    pub fn accepted(&self) -> bool {
        matches!((&self.server, &self.client), (Some(Ok(a)), Ok(b)) if a == b)
    }

    pub fn first_reject(&self) -> Option<Reject> {
        match (&self.server, &self.client) {
            (Some(Err(r)), _) => Some(*r),
            (_, Err(r)) => Some(*r),
            _ => None,
        }
    }
}

fn jiang_server_step(
    server: &mut JServerState,
    online: bool,
    channel: &mut Channel,
    clock: &SimClock,
    ops: &mut OpCounter,
) -> ServerEvent {
    let Some(bytes) = channel.deliver(Direction::ToServer) else {
        return ServerEvent::Idle;
    };
    if !online {
        return ServerEvent::Rejected(Reject::ServerUnavailable);
    }
    let msg = match JLoginMsg::decode(&bytes, server.params()) {
        Ok(m) => m,
        Err(r) => return ServerEvent::Rejected(r),
    };
    match server.authenticate(&msg, clock, ops) {
        Ok((reply, session)) => {
            channel.send(
                clock.now(),
                Direction::ToClient,
                Party::Server,
                reply.encode(),
                ops.counts(ops.phase()),
            );
            ServerEvent::Accepted(session.sk)
        }
        Err(r) => ServerEvent::Rejected(r),
    }
}

struct JLink<'a> {
    server: &'a mut JServerState,
    online: bool,
    channel: &'a mut Channel,
    clock: &'a SimClock,
}

impl JServerLink for JLink<'_> {
    fn clock(&self) -> &SimClock {
        self.clock
    }

    fn delta_t(&self) -> u64 {
        self.server.config().delta_t
    }

    fn exchange(&mut self, login: &JLoginMsg, ops: &mut OpCounter) -> Result<JServerReply, Reject> {
        let bytes = login.encode(self.server.params());
        self.channel.send(
            self.clock.now(),
            Direction::ToServer,
            Party::Client,
            bytes,
            ops.counts(ops.phase()),
        );
        match jiang_server_step(self.server, self.online, self.channel, self.clock, ops) {
            ServerEvent::Accepted(_) => {}
            ServerEvent::Rejected(r) => return Err(r),
            _ => return Err(Reject::ServerUnavailable),
        }
        let reply = self
            .channel
            .deliver(Direction::ToClient)
            .ok_or(Reject::ServerUnavailable)?;
        JServerReply::decode(&reply)
    }
}

/// A Jiang server, a simulated clock and a channel.
#[derive(Debug, Clone)]
pub struct JiangWorld {
    pub server: JServerState,
    /// When false the server ignores everything it receives.
    pub online: bool,
    pub clock: SimClock,
    pub channel: Channel,
    pub rng: LabRng,
    pub ops: OpCounter,
    registrations: Vec<Vec<u8>>,
}

impl JiangWorld {
    pub fn new(label: SecurityLabel, config: JConfig, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let server = JServerState::new(GroupParams::for_label(label), config, &mut rng);
        JiangWorld {
            server,
            online: true,
            clock: SimClock::new(),
            channel: Channel::new(),
            rng,
            ops: OpCounter::new(),
            registrations: Vec::new(),
        }
    }

    pub fn params(&self) -> &GroupParams {
        self.server.params()
    }

    /// Registration requests as they arrived at the server.
    pub fn registration_traffic(&self) -> &[Vec<u8>] {
        &self.registrations
    }

    pub fn register(&mut self, id: &str, password: &str) -> Result<JCard, Reject> {
        self.ops.begin(Phase::Registration);
        let req = JRegRequest {
            id: id.to_string(),
            password: password.to_string(),
        };
        self.registrations.push(req.encode());
        self.server.register(&req, &mut self.ops)
    }

    pub fn send_login(&mut self, msg: &JLoginMsg, from: Party) {
        let bytes = msg.encode(self.server.params());
        self.channel.send(
            self.clock.now(),
            Direction::ToServer,
            from,
            bytes,
            self.ops.counts(self.ops.phase()),
        );
    }

    /// Lets the server handle the next message addressed to it.
    pub fn pump_server(&mut self) -> ServerEvent {
        jiang_server_step(
            &mut self.server,
            self.online,
            &mut self.channel,
            &self.clock,
            &mut self.ops,
        )
    }

    pub fn login(&mut self, card: &JCard, id: &str, password: &str) -> JRun {
        let params = self.server.params().clone();
        self.ops.begin(Phase::Login);
        let (msg, session) = card.login(
            &params,
            id,
            password,
            &self.clock,
            &mut self.rng,
            &mut self.ops,
        );
        self.send_login(&msg, Party::Client);
        self.ops.begin(Phase::Authentication);
        let alpha = session.alpha().clone();
        let server = match self.pump_server() {
            ServerEvent::Accepted(sk) => Some(Ok(sk)),
            ServerEvent::Rejected(r) => Some(Err(r)),
            _ => None,
        };
        let delta_t = self.server.config().delta_t;
        let client = match self.channel.deliver(Direction::ToClient) {
            None => Err(Reject::ServerUnavailable),
            Some(bytes) => JServerReply::decode(&bytes).and_then(|reply| {
                session.finish(&params, &reply, id, &self.clock, delta_t, &mut self.ops)
            }),
        };
        JRun {
            login: msg,
            alpha,
            server,
            client,
        }
    }

    pub fn change_password(
        &mut self,
        card: &mut JCard,
        id: &str,
        password: &str,
        new_password: &str,
    ) -> Result<JPasswordChange, Reject> {
        self.ops.begin(Phase::PasswordChange);
        let params = self.server.params().clone();
        let mut link = JLink {
            server: &mut self.server,
            online: self.online,
            channel: &mut self.channel,
            clock: &self.clock,
        };
        card.change_password(
            &params,
            id,
            password,
            new_password,
            &mut link,
            &mut self.rng,
            &mut self.ops,
        )
    }
}

/// One run of the improved scheme's login and key agreement.
#[derive(Debug, Clone)]
pub struct PRun {
    /// `None` when the card refused the credentials.
    pub login: Option<PLoginMsg>,
    pub reply: Option<PReplyMsg>,
    pub confirm: Option<PConfirmMsg>,
    pub alpha: Option<Scalar>,
    pub beta: Option<Scalar>,
    pub client: Result<Digest, Reject>,
    /// `None` if the server never reached a decision.
    pub server: Option<Result<Digest, Reject>>,
}

impl PRun {
    pub fn accepted(&self) -> bool {
        matches!((&self.server, &self.client), (Some(Ok(a)), Ok(b)) if a == b)
    }

    pub fn first_reject(&self) -> Option<Reject> {
        match (&self.client, &self.server) {
            (Err(r), _) => Some(*r),
            (_, Some(Err(r))) => Some(*r),
            _ => None,
        }
    }
}

/// A server for the improved scheme, plus clock and channel.
pub struct ProposedWorld {
    pub server: PServerState,
    pub online: bool,
    /// Only used to stamp transcript events; the protocol itself is clockless.
    pub clock: SimClock,
    pub channel: Channel,
    pub rng: LabRng,
    pub ops: OpCounter,
    pending: Option<PServerSession>,
    registrations: Vec<Vec<u8>>,
}

impl ProposedWorld {
    pub fn new(label: SecurityLabel, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let server = PServerState::setup(label, &mut rng);
        ProposedWorld {
            server,
            online: true,
            clock: SimClock::new(),
            channel: Channel::new(),
            rng,
            ops: OpCounter::new(),
            pending: None,
            registrations: Vec::new(),
        }
    }

    pub fn params(&self) -> &GroupParams {
        self.server.params()
    }

    pub fn registration_traffic(&self) -> &[Vec<u8>] {
        &self.registrations
    }

    pub fn register(&mut self, id: &str, password: &str) -> Result<PCard, Reject> {
        self.ops.begin(Phase::Registration);
        let params = self.server.params().clone();
        let (req, secret) = begin_registration(&params, id, password, &mut self.rng, &mut self.ops);
        self.registrations.push(req.encode());
        let partial = self.server.register(&req, &mut self.rng, &mut self.ops)?;
        Ok(partial.finalize(&params, id, password, &secret, &mut self.ops))
    }

    /// Lost-card path: the old card is revoked and a new one issued.
    pub fn reissue(&mut self, id: &str, password: &str) -> Result<PCard, Reject> {
        self.ops.begin(Phase::Registration);
        let params = self.server.params().clone();
        let (req, secret) = begin_registration(&params, id, password, &mut self.rng, &mut self.ops);
        self.registrations.push(req.encode());
        let partial = self
            .server
            .revoke_and_reissue(&req, &mut self.rng, &mut self.ops)?;
        Ok(partial.finalize(&params, id, password, &secret, &mut self.ops))
    }

    pub fn change_password(
        &mut self,
        card: &PCard,
        id: &str,
        password: &str,
        new_password: &str,
    ) -> Result<PCard, Reject> {
        self.ops.begin(Phase::PasswordChange);
        card.change_password(
            self.server.params(),
            id,
            password,
            new_password,
            &mut self.ops,
        )
    }

    pub fn send(&mut self, direction: Direction, from: Party, bytes: Vec<u8>) {
        self.channel.send(
            self.clock.now(),
            direction,
            from,
            bytes,
            self.ops.counts(self.ops.phase()),
        );
    }

    /// The ephemeral exponent of the session the server is waiting on.
    pub fn pending_beta(&self) -> Option<&Scalar> {
        self.pending.as_ref().map(|s| s.beta())
    }

    pub fn pending_key(&self) -> Option<&Digest> {
        self.pending.as_ref().map(|s| s.pending_key())
    }

    pub fn pump_server(&mut self) -> ServerEvent {
        let Some(bytes) = self.channel.deliver(Direction::ToServer) else {
            return ServerEvent::Idle;
        };
        if !self.online {
            return ServerEvent::Rejected(Reject::ServerUnavailable);
        }
        let params = self.server.params().clone();
        match tag_of(&bytes) {
            Some(TAG_P_LOGIN) => {
                let msg = match PLoginMsg::decode(&bytes, &params) {
                    Ok(m) => m,
                    Err(r) => return ServerEvent::Rejected(r),
                };
                match self.server.respond(&msg, &mut self.rng, &mut self.ops) {
                    Ok((reply, session)) => {
                        self.pending = Some(session);
                        self.send(Direction::ToClient, Party::Server, reply.encode(&params));
                        ServerEvent::Replied
                    }
                    Err(r) => ServerEvent::Rejected(r),
                }
            }
            Some(TAG_P_CONFIRM) => {
                let msg = match PConfirmMsg::decode(&bytes) {
                    Ok(m) => m,
                    Err(r) => return ServerEvent::Rejected(r),
                };
                match self.pending.take() {
                    Some(session) => match session.confirm(&params, &msg, &mut self.ops) {
                        Ok(sk) => ServerEvent::Accepted(sk),
                        Err(r) => ServerEvent::Rejected(r),
                    },
                    None => ServerEvent::Rejected(Reject::Malformed),
                }
            }
            _ => ServerEvent::Rejected(Reject::Malformed),
        }
    }

    pub fn login(&mut self, card: &PCard, id: &str, password: &str) -> PRun {
        let params = self.server.params().clone();
        self.ops.begin(Phase::Login);
        let mut run = PRun {
            login: None,
            reply: None,
            confirm: None,
            alpha: None,
            beta: None,
            client: Err(Reject::ServerUnavailable),
            server: None,
        };
        let (msg, session) =
            match card.login_start(&params, id, password, &mut self.rng, &mut self.ops) {
                Ok(x) => x,
                Err(r) => {
                    run.client = Err(r);
                    return run;
                }
            };
        run.alpha = Some(session.alpha().clone());
        self.send(Direction::ToServer, Party::Client, msg.encode(&params));
        run.login = Some(msg);

        self.ops.begin(Phase::Authentication);
        match self.pump_server() {
            ServerEvent::Replied => run.beta = self.pending_beta().cloned(),
            ServerEvent::Rejected(r) => {
                run.server = Some(Err(r));
                return run;
            }
            _ => return run,
        }
        let Some(bytes) = self.channel.deliver(Direction::ToClient) else {
            return run;
        };
        let reply = match PReplyMsg::decode(&bytes, &params) {
            Ok(r) => r,
            Err(r) => {
                run.client = Err(r);
                return run;
            }
        };
        run.reply = Some(reply.clone());
        let (confirm, sk) = match session.finish(&params, &reply, &mut self.ops) {
            Ok(x) => x,
            Err(r) => {
                run.client = Err(r);
                return run;
            }
        };
        run.client = Ok(sk);
        self.send(Direction::ToServer, Party::Client, confirm.encode());
        run.confirm = Some(confirm);
        run.server = match self.pump_server() {
            ServerEvent::Accepted(sk) => Some(Ok(sk)),
            ServerEvent::Rejected(r) => Some(Err(r)),
            _ => None,
        };
        run
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::channel::Hooks;

    #[test]
    fn honest_jiang_run_on_neutral_channel() {
        let mut w = JiangWorld::new(SecurityLabel::TestTiny, JConfig::default(), 1);
        let card = w.register("alice", "pw").unwrap();
        let run = w.login(&card, "alice", "pw");
        assert!(run.accepted(), "{run:?}");
        assert_eq!(w.channel.message_count(), 2);
    }

    #[test]
    fn honest_proposed_run_on_neutral_channel() {
        let mut w = ProposedWorld::new(SecurityLabel::TestTiny, 1);
        let card = w.register("alice", "pw").unwrap();
        let run = w.login(&card, "alice", "pw");
        assert!(run.accepted(), "{run:?}");
        assert_eq!(w.channel.message_count(), 3);
    }

    #[test]
    fn dropped_reply_leaves_client_waiting() {
        let mut w = ProposedWorld::new(SecurityLabel::TestTiny, 2);
        let card = w.register("alice", "pw").unwrap();
        w.channel.set_hooks(Hooks {
            drop_to_client: true,
            ..Default::default()
        });
        let run = w.login(&card, "alice", "pw");
        assert_eq!(run.client, Err(Reject::ServerUnavailable));
        assert_eq!(run.server, None);
        assert!(w.pending_key().is_some());
    }

    #[test]
    fn jiang_password_change_needs_online_server() {
        let mut w = JiangWorld::new(SecurityLabel::TestTiny, JConfig::default(), 3);
        let mut card = w.register("alice", "old").unwrap();
        w.online = false;
        assert_eq!(
            w.change_password(&mut card, "alice", "old", "new"),
            Err(Reject::ServerUnavailable)
        );
        w.online = true;
        assert_eq!(
            w.change_password(&mut card, "alice", "old", "new")
                .unwrap()
                .round_trips,
            1
        );
        assert!(w.login(&card, "alice", "new").accepted());
    }
}
