//! Resilient consensus with multi-hop relays.
//!
//! * [`graph`]: directed graphs, generators, simple-path enumeration.
//! * [`messaging`]: relayed messages, minimum message covers and the
//!   path-anomaly classifier.
//! * [`mwmsr`]: the multi-hop weighted MSR filter and update.
//! * [`robustness`]: exact `(r, s)`-robustness with `l` hops and the
//!   partition conditions NC / SC.
//! * [`adversary`]: malicious node behaviour laws.
//! * [`engine`]: synchronous and asynchronous simulation with traces.

pub mod adversary;
pub mod engine;
pub mod flow;
pub mod graph;
pub mod messaging;
pub mod mwmsr;
pub mod robustness;

pub use graph::{Generator, Graph, GraphError, NodeId, Path};
pub use messaging::{CoverResult, Message};
