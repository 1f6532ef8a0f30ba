//! Malicious node behaviour.
//!
//! A malicious node may replace its own value and any value it relays, or
//! stay silent, but it sends the same thing to every out-neighbor: every law
//! here is a pure function of `(step, source, path so far)`. It never edits
//! path entries unless an [`Injection`] asks it to, which exists only to
//! exercise the anomaly classifier.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

/// A value as a function of the step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Waveform {
    Constant { value: f64 },
    /// `offset + amplitude * sin(frequency * k + phase)`.
    Sine {
        amplitude: f64,
        frequency: f64,
        offset: f64,
        #[serde(default)]
        phase: f64,
    },
    /// Indexed by step; the last entry repeats past the end.
    Table { values: Vec<f64> },
}

pub const DEFAULT_SINE_FREQUENCY: f64 = 0.3;

impl Waveform {
    pub fn at(&self, k: u64) -> f64 {
        match self {
            Waveform::Constant { value } => *value,
            Waveform::Sine {
                amplitude,
                frequency,
                offset,
                phase,
            } => offset + amplitude * (frequency * k as f64 + phase).sin(),
            Waveform::Table { values } => {
                let idx = (k as usize).min(values.len().saturating_sub(1));
                values.get(idx).copied().unwrap_or(0.0)
            }
        }
    }

    /// Sine spanning the range of `values`: amplitude half the range, offset
    /// the midpoint, frequency 0.3 rad/step.
    pub fn default_sine(values: &[f64]) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
        Waveform::Sine {
            amplitude: (hi - lo) / 2.0,
            frequency: DEFAULT_SINE_FREQUENCY,
            offset: (hi + lo) / 2.0,
            phase: 0.0,
        }
    }
}

/// What a malicious node broadcasts as its own state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum OwnLaw {
    Forge { wave: Waveform },
    /// Sends nothing (crash / omission).
    Omit,
    /// Runs the normal update; with passthrough relays the node behaves
    /// exactly like a normal one.
    Honest,
}

/// What a malicious node does to a value it relays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum RelayLaw {
    Forge { wave: Waveform },
    Passthrough,
    Omit,
    /// Sends different values to different neighbors. Violates broadcast
    /// consistency on purpose so tests can show the engine detects it.
    #[doc(hidden)]
    EquivocateForTesting,
}

/// Deliberate protocol violations, off by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Injection {
    /// Every message the node originates is sent twice.
    Duplicate,
    /// Also sends its own value along paths prefixed by a node id that does
    /// not exist.
    UnknownPath,
    /// Drops every message it should relay.
    DropPath,
}

/// Output of a law: a value, or nothing sent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Emission {
    Value(f64),
    Omit,
}

impl Emission {
    pub fn value(self) -> Option<f64> {
        match self {
            Emission::Value(v) => Some(v),
            Emission::Omit => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdversarySpec {
    pub node: NodeId,
    pub own: OwnLaw,
    /// Relay law per originating node; `None` is the wildcard.
    pub relay: BTreeMap<Option<NodeId>, RelayLaw>,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

impl AdversarySpec {
    pub fn new(node: NodeId, own: OwnLaw) -> Self {
        AdversarySpec {
            node,
            own,
            relay: BTreeMap::new(),
            injections: Vec::new(),
        }
    }

    pub fn with_relay(mut self, source: Option<NodeId>, law: RelayLaw) -> Self {
        self.relay.insert(source, law);
        self
    }

    pub fn with_injection(mut self, inj: Injection) -> Self {
        self.injections.push(inj);
        self
    }

    pub fn has_injection(&self, inj: Injection) -> bool {
        self.injections.contains(&inj)
    }

    /// Law for values originated by `source`: exact match, then wildcard,
    /// then passthrough.
    pub fn relay_law(&self, source: NodeId) -> &RelayLaw {
        self.relay
            .get(&Some(source))
            .or_else(|| self.relay.get(&None))
            .unwrap_or(&RelayLaw::Passthrough)
    }

    /// True when every relay law is passthrough and the own law is honest.
    pub fn is_null(&self) -> bool {
        self.own == OwnLaw::Honest
            && self.relay.values().all(|l| *l == RelayLaw::Passthrough)
            && self.injections.is_empty()
    }
}

/// The adversary's own broadcast at step `k`. `honest` is what the normal
/// update would send, used by [`OwnLaw::Honest`].
pub fn forge_own_value(spec: &AdversarySpec, k: u64, honest: f64) -> Emission {
    match &spec.own {
        OwnLaw::Forge { wave } => Emission::Value(wave.at(k)),
        OwnLaw::Omit => Emission::Omit,
        OwnLaw::Honest => Emission::Value(honest),
    }
}

/// The value the adversary forwards for a message that originated at
/// `source` and has travelled `path_so_far` (ending at the adversary).
/// `next_hop` only matters for the equivocation test hook.
pub fn forge_relay(
    spec: &AdversarySpec,
    k: u64,
    source: NodeId,
    path_so_far: &[NodeId],
    true_value: f64,
    next_hop: NodeId,
) -> Emission {
    let _ = path_so_far;
    if spec.has_injection(Injection::DropPath) {
        return Emission::Omit;
    }
    match spec.relay_law(source) {
        RelayLaw::Forge { wave } => Emission::Value(wave.at(k)),
        RelayLaw::Passthrough => Emission::Value(true_value),
        RelayLaw::Omit => Emission::Omit,
        RelayLaw::EquivocateForTesting => Emission::Value(true_value + next_hop as f64 + 1.0),
    }
}
