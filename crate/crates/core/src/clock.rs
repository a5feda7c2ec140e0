use std::collections::BTreeMap;

/// Protocol participants, as seen by clocks and the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Party {
    Client,
    Server,
    Adversary,
}

impl Party {
    pub fn as_str(self) -> &'static str {
        match self {
            Party::Client => "client",
            Party::Server => "server",
            Party::Adversary => "adversary",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "client" => Some(Party::Client),
            "server" => Some(Party::Server),
            "adversary" => Some(Party::Adversary),
            _ => None,
        }
    }
}

/// Simulated time in ticks with a fixed per-party skew.
///
/// Global time only moves forward and skews never change after setup, so
/// each party's local clock is monotone.
#[derive(Debug, Clone, Default)]
pub struct SimClock {
    now: u64,
    skew: BTreeMap<Party, i64>,
}

impl SimClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn starting_at(now: u64) -> Self {
        SimClock {
            now,
            skew: BTreeMap::new(),
        }
    }

    pub fn with_skew(mut self, party: Party, ticks: i64) -> Self {
        self.skew.insert(party, ticks);
        self
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn advance(&mut self, ticks: u64) {
        self.now += ticks;
    }

    /// The party's local reading, clamped at zero.
    pub fn local(&self, party: Party) -> u64 {
        let skew = self.skew.get(&party).copied().unwrap_or(0);
        self.now.saturating_add_signed(skew)
    }
}

/// `|receive - sent| <= delta_t`. A sender clock running ahead is as stale
/// as one running behind.
pub fn is_fresh(sent: u64, received: u64, delta_t: u64) -> bool {
    sent.abs_diff(received) <= delta_t
}
