use std::collections::{BTreeMap, VecDeque};

use crate::clock::Party;
use crate::counter::OpCounts;
use crate::registry::{Direction, Transcript, TranscriptEvent};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Envelope {
    pub tick: u64,
    pub direction: Direction,
    pub from: Party,
    pub payload: Vec<u8>,
}

/// Adversary switches. All off means an honest wire.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Hooks {
    /// Keep a copy of every message.
    pub eavesdrop: bool,
    /// Remove messages headed to the server.
    pub drop_to_server: bool,
    /// Remove messages headed to the client.
    pub drop_to_client: bool,
}

/// In-order message queues in both directions, with a full transcript.
#[derive(Debug, Clone, Default)]
pub struct Channel {
    hooks: Hooks,
    to_server: VecDeque<Envelope>,
    to_client: VecDeque<Envelope>,
    transcript: Transcript,
    observed: Vec<Envelope>,
    intercepted: Vec<Envelope>,
    sent: BTreeMap<Party, u64>,
}

impl Channel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_hooks(hooks: Hooks) -> Self {
        Channel {
            hooks,
            ..Self::default()
        }
    }

    pub fn hooks(&self) -> Hooks {
        self.hooks
    }

    pub fn set_hooks(&mut self, hooks: Hooks) {
        self.hooks = hooks;
    }

    pub fn send(
        &mut self,
        tick: u64,
        direction: Direction,
        from: Party,
        payload: Vec<u8>,
        counts: OpCounts,
    ) {
        let env = Envelope {
            tick,
            direction,
            from,
            payload,
        };
        self.transcript.push(TranscriptEvent {
            tick,
            direction,
            party: from,
            payload: env.payload.clone(),
            counts,
        });
        *self.sent.entry(from).or_insert(0) += 1;
        if self.hooks.eavesdrop {
            self.observed.push(env.clone());
        }
        match direction {
            Direction::ToServer => self.to_server.push_back(env),
            Direction::ToClient => self.to_client.push_back(env),
        }
    }

    pub fn inject(&mut self, tick: u64, direction: Direction, payload: Vec<u8>) {
        self.send(
            tick,
            direction,
            Party::Adversary,
            payload,
            OpCounts::default(),
        );
    }

    /// Re-sends the `index`-th observed message. Returns false if there is
    /// no such message.
    pub fn replay(&mut self, tick: u64, index: usize) -> bool {
        match self.observed.get(index) {
            Some(env) => {
                let (direction, payload) = (env.direction, env.payload.clone());
                self.inject(tick, direction, payload);
                true
            }
            None => false,
        }
    }

    /// Next message for the receiver at the end of `direction`, unless the
    /// adversary removes it.
    pub fn deliver(&mut self, direction: Direction) -> Option<Vec<u8>> {
        let queue = match direction {
            Direction::ToServer => &mut self.to_server,
            Direction::ToClient => &mut self.to_client,
        };
        let env = queue.pop_front()?;
        let dropped = match direction {
            Direction::ToServer => self.hooks.drop_to_server,
            Direction::ToClient => self.hooks.drop_to_client,
        };
        if dropped {
            self.intercepted.push(env);
            None
        } else {
            Some(env.payload)
        }
    }

    pub fn pending(&self, direction: Direction) -> usize {
        match direction {
            Direction::ToServer => self.to_server.len(),
            Direction::ToClient => self.to_client.len(),
        }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn observed(&self) -> &[Envelope] {
        &self.observed
    }

    pub fn intercepted(&self) -> &[Envelope] {
        &self.intercepted
    }

    /// Messages put on the wire by `party`.
    pub fn sent_by(&self, party: Party) -> u64 {
        self.sent.get(&party).copied().unwrap_or(0)
    }

    pub fn message_count(&self) -> u64 {
        self.sent.values().sum()
    }
}
