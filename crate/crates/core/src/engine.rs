//! Discrete-time simulation of the transmit / receive / update protocol.
//!
//! Flooding is per path: at every step each node's value travels along each
//! of its simple out-paths of at most `hops` hops. A malicious node on a path
//! rewrites (or drops) the value as the message passes through it, in path
//! order; normal relays forward unchanged. In async mode every message gets
//! a delay, receivers keep the freshest value per path, and nodes update only
//! on their own schedule.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::{forge_own_value, forge_relay, AdversarySpec, Injection, OwnLaw};
use crate::graph::{Graph, NodeId, Path};
use crate::messaging::{LoggedMessage, Message};
use crate::mwmsr::{mwmsr_update, FilterResult};

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("node {node} has non-finite state {value} at step {step}")]
    NonFinite { node: NodeId, step: u64, value: f64 },
    #[error("malicious node {node} sent different values for path prefix {prefix:?} at step {step}")]
    BroadcastInconsistency {
        node: NodeId,
        step: u64,
        prefix: Vec<NodeId>,
    },
    #[error("invalid scenario: {0}")]
    Config(String),
    #[error("run_{expected} called on a scenario in the other mode")]
    WrongMode { expected: &'static str },
}

/// When an async node updates: at steps `k` with `k % period == phase % period`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub period: u64,
    pub phase: u64,
}

impl Default for Schedule {
    fn default() -> Self {
        Schedule { period: 1, phase: 0 }
    }
}

impl Schedule {
    pub fn updates_at(&self, k: u64) -> bool {
        k % self.period == self.phase % self.period
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DelayLaw {
    /// `delays[h - 1]` steps for an `h`-hop path; the last entry repeats.
    ByLength { delays: Vec<u64> },
    /// Uniform in `0..=max`, drawn per message from the scenario seed.
    Uniform { max: u64 },
}

impl DelayLaw {
    fn bound(&self) -> u64 {
        match self {
            DelayLaw::ByLength { delays } => delays.iter().copied().max().unwrap_or(0),
            DelayLaw::Uniform { max } => *max,
        }
    }

    fn draw(&self, hops: usize, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            DelayLaw::ByLength { delays } => delays
                .get(hops - 1)
                .or(delays.last())
                .copied()
                .unwrap_or(0),
            DelayLaw::Uniform { max } => rng.gen_range(0..=*max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Mode {
    Sync,
    Async {
        tau: u64,
        /// One entry per node; nodes without one update every step.
        schedule: Vec<Schedule>,
        delay: DelayLaw,
    },
}

/// Update rule of normal nodes. `PlainAverage` removes nothing and exists as
/// a negative control.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FilterKind {
    #[default]
    MwMsr,
    PlainAverage,
}

/// What to keep in the trace besides states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub filters: bool,
    pub received: bool,
    pub forgeries: bool,
}

impl Default for Record {
    fn default() -> Self {
        Record {
            filters: true,
            received: false,
            forgeries: true,
        }
    }
}

impl Record {
    pub fn states_only() -> Self {
        Record {
            filters: false,
            received: false,
            forgeries: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub graph: Graph,
    pub hops: usize,
    pub f: usize,
    pub initial: Vec<f64>,
    pub adversaries: Vec<AdversarySpec>,
    pub mode: Mode,
    pub horizon: u64,
    pub seed: u64,
    pub filter: FilterKind,
    pub record: Record,
}

impl ScenarioConfig {
    pub fn new(graph: Graph, hops: usize, f: usize, initial: Vec<f64>) -> Self {
        ScenarioConfig {
            graph,
            hops,
            f,
            initial,
            adversaries: Vec::new(),
            mode: Mode::Sync,
            horizon: 100,
            seed: 0,
            filter: FilterKind::MwMsr,
            record: Record::default(),
        }
    }

    pub fn tau(&self) -> u64 {
        match &self.mode {
            Mode::Sync => 0,
            Mode::Async { tau, .. } => *tau,
        }
    }

    pub fn is_adversary(&self, i: NodeId) -> bool {
        self.adversaries.iter().any(|a| a.node == i)
    }

    pub fn normal_nodes(&self) -> Vec<NodeId> {
        (0..self.graph.n()).filter(|&i| !self.is_adversary(i)).collect()
    }

    /// The safety interval: hull of the normal initial values (which are
    /// also the whole initial history in async mode).
    pub fn safety_interval(&self) -> Interval {
        Interval::hull(self.normal_nodes().iter().map(|&i| self.initial[i]))
    }

    pub fn validate(&self) -> Result<Vec<String>, EngineError> {
        let n = self.graph.n();
        let bad = |m: String| Err(EngineError::Config(m));
        if self.initial.len() != n {
            return bad(format!("{} initial values for {n} nodes", self.initial.len()));
        }
        if let Some(i) = self.initial.iter().position(|v| !v.is_finite()) {
            return bad(format!("initial value of node {i} is not finite"));
        }
        if self.hops == 0 {
            return bad("hops must be at least 1".into());
        }
        let mut seen = vec![false; n];
        for a in &self.adversaries {
            if a.node >= n {
                return bad(format!("adversary node {} out of range (n = {n})", a.node));
            }
            if std::mem::replace(&mut seen[a.node], true) {
                return bad(format!("adversary node {} listed twice", a.node));
            }
        }
        if self.normal_nodes().is_empty() {
            return bad("no normal nodes".into());
        }
        if let Mode::Async { tau, schedule, delay } = &self.mode {
            if delay.bound() > *tau {
                return bad(format!("delay law allows {} steps, above tau = {tau}", delay.bound()));
            }
            if schedule.len() > n {
                return bad(format!("{} schedule entries for {n} nodes", schedule.len()));
            }
            if schedule.iter().any(|s| s.period == 0) {
                return bad("update period must be at least 1".into());
            }
        }
        let mut warnings = Vec::new();
        if self.adversaries.len() > self.f {
            warnings.push(format!(
                "{} adversaries exceed f = {}; guarantees do not apply",
                self.adversaries.len(),
                self.f
            ));
        }
        Ok(warnings)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn hull(values: impl IntoIterator<Item = f64>) -> Self {
        values.into_iter().fold(
            Interval {
                lo: f64::INFINITY,
                hi: f64::NEG_INFINITY,
            },
            |acc, v| Interval {
                lo: acc.lo.min(v),
                hi: acc.hi.max(v),
            },
        )
    }

    /// Membership with a relative slack of `1e-12 * max(1, |bound|)`.
    pub fn contains(&self, v: f64) -> bool {
        let slack = |b: f64| 1e-12 * b.abs().max(1.0);
        v >= self.lo - slack(self.lo) && v <= self.hi + slack(self.hi)
    }
}

/// A value a malicious node emitted in place of the true one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forgery {
    pub step: u64,
    pub node: NodeId,
    /// Path from the originator up to and including `node`.
    pub prefix: Path,
    pub true_value: Option<f64>,
    pub sent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub n: usize,
    pub normal: Vec<bool>,
    pub tau: u64,
    pub safety: Interval,
    /// `states[k][i]`; adversaries show what they broadcast (`None` when
    /// silent).
    pub states: Vec<Vec<Option<f64>>>,
    /// `filters[k]`: filter results of the nodes updating at step `k`.
    pub filters: Vec<BTreeMap<NodeId, FilterResult>>,
    pub forgeries: Vec<Forgery>,
    /// Per node, every message received (async: delivered) with its step.
    pub received: Vec<Vec<LoggedMessage>>,
    pub warnings: Vec<String>,
}

impl Trace {
    pub fn horizon(&self) -> u64 {
        self.states.len() as u64 - 1
    }

    fn normal_values(&self, k: u64) -> impl Iterator<Item = f64> + '_ {
        self.states[k as usize]
            .iter()
            .zip(&self.normal)
            .filter(|(_, &normal)| normal)
            .map(|(v, _)| v.expect("normal states are always present"))
    }

    pub fn normal_max(&self, k: u64) -> f64 {
        self.normal_values(k).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn normal_min(&self, k: u64) -> f64 {
        self.normal_values(k).fold(f64::INFINITY, f64::min)
    }

    /// Max and min of normal states over `[k - tau, k]` (clipped at 0).
    pub fn window(&self, k: u64, tau: u64) -> Interval {
        Interval::hull((k.saturating_sub(tau)..=k).flat_map(|j| self.normal_values(j)))
    }
}

/// Spread of normal states over `[k - tau, k]`; `tau = 0` is the spread at `k`.
pub fn consensus_error(trace: &Trace, k: u64, tau: u64) -> f64 {
    let w = trace.window(k, tau);
    w.hi - w.lo
}

/// True iff every normal state of the run stays in the safety interval.
pub fn check_safety(trace: &Trace, cfg: &ScenarioConfig) -> bool {
    let s = cfg.safety_interval();
    (0..=trace.horizon()).all(|k| trace.normal_values(k).all(|v| s.contains(v)))
}

/// Max of normal states nonincreasing and min nondecreasing, over
/// `tau`-windows (`tau = 0` for the plain sync property).
pub fn is_monotone(trace: &Trace, tau: u64, tol: f64) -> bool {
    let mut prev = trace.window(0, tau);
    (1..=trace.horizon()).all(|k| {
        let w = trace.window(k, tau);
        let ok = w.hi <= prev.hi + tol && w.lo >= prev.lo - tol;
        prev = w;
        ok
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub converged: bool,
    pub final_error: f64,
    pub safety_ok: bool,
    /// First step from which the error stays below the threshold.
    pub steps_to_threshold: Option<u64>,
}

pub fn summarize(trace: &Trace, cfg: &ScenarioConfig, threshold: f64) -> Summary {
    let tau = trace.tau;
    let errors: Vec<f64> = (0..=trace.horizon()).map(|k| consensus_error(trace, k, tau)).collect();
    let final_error = *errors.last().expect("trace has at least one step");
    let steps_to_threshold = errors
        .iter()
        .rposition(|&e| e >= threshold)
        .map_or(Some(0), |last_bad| {
            (last_bad + 1 < errors.len()).then_some(last_bad as u64 + 1)
        });
    Summary {
        converged: final_error < threshold,
        final_error,
        safety_ok: check_safety(trace, cfg),
        steps_to_threshold,
    }
}

/// Runs the scenario in whichever mode it specifies.
pub fn run(cfg: &ScenarioConfig) -> Result<Trace, EngineError> {
    Sim::new(cfg)?.run()
}

pub fn run_sync(cfg: &ScenarioConfig) -> Result<Trace, EngineError> {
    if cfg.mode != Mode::Sync {
        return Err(EngineError::WrongMode { expected: "sync" });
    }
    run(cfg)
}

pub fn run_async(cfg: &ScenarioConfig) -> Result<Trace, EngineError> {
    if cfg.mode == Mode::Sync {
        return Err(EngineError::WrongMode { expected: "async" });
    }
    run(cfg)
}

struct InPath {
    path: Path,
    /// Positions (1..len) of malicious relays on the path.
    relays: Vec<usize>,
}

struct Sim<'a> {
    cfg: &'a ScenarioConfig,
    n: usize,
    adv: Vec<Option<&'a AdversarySpec>>,
    in_paths: Vec<Vec<InPath>>,
    /// Internal states (adversaries with an honest law run the update too).
    x: Vec<f64>,
    trace: Trace,
    rng: ChaCha8Rng,
}

/// A message as built at send time, before delivery.
struct Built {
    slot: usize,
    msg: Message,
}

impl<'a> Sim<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, EngineError> {
        let warnings = cfg.validate()?;
        let n = cfg.graph.n();
        let mut adv = vec![None; n];
        for a in &cfg.adversaries {
            adv[a.node] = Some(a);
        }
        let in_paths = (0..n)
            .map(|i| {
                cfg.graph
                    .enumerate_in_paths(i, cfg.hops)
                    .into_iter()
                    .map(|path| {
                        let relays = (1..path.nodes().len() - 1)
                            .filter(|&pos| adv[path.nodes()[pos]].is_some())
                            .collect();
                        InPath { path, relays }
                    })
                    .collect()
            })
            .collect();
        let normal: Vec<bool> = adv.iter().map(Option::is_none).collect();
        let trace = Trace {
            n,
            normal,
            tau: cfg.tau(),
            safety: cfg.safety_interval(),
            states: Vec::with_capacity(cfg.horizon as usize + 1),
            filters: Vec::new(),
            forgeries: Vec::new(),
            received: if cfg.record.received { vec![Vec::new(); n] } else { Vec::new() },
            warnings,
        };
        Ok(Sim {
            cfg,
            n,
            adv,
            in_paths,
            x: cfg.initial.clone(),
            trace,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        })
    }

    fn run(mut self) -> Result<Trace, EngineError> {
        match &self.cfg.mode {
            Mode::Sync => self.run_sync()?,
            Mode::Async { tau, schedule, delay } => self.run_async(*tau, schedule, delay)?,
        }
        Ok(self.trace)
    }

    /// What every node broadcasts as its own value at step `k`.
    fn emissions(&self, k: u64) -> Vec<Option<f64>> {
        (0..self.n)
            .map(|i| match self.adv[i] {
                None => Some(self.x[i]),
                Some(spec) => forge_own_value(spec, k, self.x[i]).value(),
            })
            .collect()
    }

    /// Builds every message sent at step `k`, grouped by receiver. Checks
    /// that each malicious node emits one value per path prefix.
    fn build(&mut self, k: u64, own: &[Option<f64>]) -> Result<Vec<Vec<Built>>, EngineError> {
        let mut sent: HashMap<(NodeId, &[NodeId]), Option<f64>> = HashMap::new();
        let mut forgeries = Vec::new();
        let mut out: Vec<Vec<Built>> = (0..self.n).map(|_| Vec::new()).collect();
        for (i, paths) in self.in_paths.iter().enumerate() {
            for (slot, ip) in paths.iter().enumerate() {
                let nodes = ip.path.nodes();
                let src = nodes[0];
                let mut value = own[src];
                for &pos in &ip.relays {
                    let Some(v) = value else { break };
                    let relay = nodes[pos];
                    let spec = self.adv[relay].expect("relay positions are adversaries");
                    let forged = forge_relay(spec, k, src, &nodes[..=pos], v, nodes[pos + 1]).value();
                    let prefix = &nodes[..=pos];
                    match sent.get(&(relay, prefix)) {
                        Some(&prev) if prev.map(f64::to_bits) != forged.map(f64::to_bits) => {
                            return Err(EngineError::BroadcastInconsistency {
                                node: relay,
                                step: k,
                                prefix: prefix.to_vec(),
                            });
                        }
                        Some(_) => {}
                        None => {
                            sent.insert((relay, prefix), forged);
                            if self.cfg.record.forgeries && forged != Some(v) {
                                forgeries.push(Forgery {
                                    step: k,
                                    node: relay,
                                    prefix: Path::new(prefix.to_vec()),
                                    true_value: Some(v),
                                    sent: forged,
                                });
                            }
                        }
                    }
                    value = forged;
                }
                let Some(v) = value else { continue };
                let msg = Message::new(v, ip.path.clone());
                if let Some(spec) = self.adv[src] {
                    if spec.has_injection(Injection::Duplicate) {
                        out[i].push(Built { slot, msg: msg.clone() });
                    }
                    if spec.has_injection(Injection::UnknownPath) {
                        // a node id that does not exist in the graph
                        let phantom = self.n + src;
                        let mut fake = vec![phantom];
                        fake.extend_from_slice(nodes);
                        out[i].push(Built {
                            slot: usize::MAX,
                            msg: Message::new(v, Path::new(fake)),
                        });
                    }
                }
                out[i].push(Built { slot, msg });
            }
        }
        if self.cfg.record.forgeries {
            for (i, spec) in self.adv.iter().enumerate() {
                if let Some(spec) = spec {
                    if !matches!(spec.own, OwnLaw::Honest) {
                        forgeries.push(Forgery {
                            step: k,
                            node: i,
                            prefix: Path::trivial(i),
                            true_value: Some(self.x[i]),
                            sent: own[i],
                        });
                    }
                }
            }
            forgeries.sort_by(|a, b| (a.node, a.prefix.nodes()).cmp(&(b.node, b.prefix.nodes())));
            self.trace.forgeries.extend(forgeries);
        }
        Ok(out)
    }

    fn runs_update(&self, i: NodeId) -> bool {
        self.adv[i].is_none_or(|a| a.own == OwnLaw::Honest)
    }

    fn update(&self, i: NodeId, msgs: &[Message]) -> (f64, FilterResult) {
        match self.cfg.filter {
            FilterKind::MwMsr => mwmsr_update(self.x[i], msgs, self.cfg.f, i),
            FilterKind::PlainAverage => mwmsr_update(self.x[i], msgs, 0, i),
        }
    }

    fn record_states(&mut self, k: u64, own: &[Option<f64>]) -> Result<(), EngineError> {
        for i in 0..self.n {
            if self.adv[i].is_none() && !self.x[i].is_finite() {
                return Err(EngineError::NonFinite {
                    node: i,
                    step: k,
                    value: self.x[i],
                });
            }
        }
        self.trace.states.push(own.to_vec());
        Ok(())
    }

    fn log_received(&mut self, i: NodeId, k: u64, msgs: &[Message]) {
        if self.cfg.record.received {
            self.trace.received[i].extend(msgs.iter().map(|m| LoggedMessage::new(k, m)));
        }
    }

    fn run_sync(&mut self) -> Result<(), EngineError> {
        for k in 0..=self.cfg.horizon {
            let own = self.emissions(k);
            self.record_states(k, &own)?;
            if k == self.cfg.horizon {
                break;
            }
            let inbox = self.build(k, &own)?;
            let mut next = self.x.clone();
            let mut filters = BTreeMap::new();
            for (i, built) in inbox.into_iter().enumerate() {
                let mut msgs: Vec<Message> = built.into_iter().map(|b| b.msg).collect();
                self.log_received(i, k, &msgs);
                if !self.runs_update(i) {
                    continue;
                }
                msgs.push(Message::own(self.x[i], i));
                let (v, fr) = self.update(i, &msgs);
                next[i] = v;
                if self.cfg.record.filters {
                    filters.insert(i, fr);
                }
            }
            if self.cfg.record.filters {
                self.trace.filters.push(filters);
            }
            self.x = next;
        }
        Ok(())
    }

    fn run_async(&mut self, tau: u64, schedule: &[Schedule], delay: &DelayLaw) -> Result<(), EngineError> {
        let horizon = self.cfg.horizon;
        // freshest (send step, message) per receiver and in-path slot; the
        // initial history is the step-0 broadcast, stamped as sent at -1
        let mut store: Vec<Vec<Option<(i64, Message)>>> =
            self.in_paths.iter().map(|p| vec![None; p.len()]).collect();
        let mut extras: Vec<Vec<(i64, Message)>> = vec![Vec::new(); self.n];
        let mut pending: BTreeMap<u64, Vec<(NodeId, i64, Built)>> = BTreeMap::new();
        let schedule_of = |i: NodeId| schedule.get(i).copied().unwrap_or_default();

        for k in 0..=horizon {
            let own = self.emissions(k);
            self.record_states(k, &own)?;
            if k == horizon {
                break;
            }
            let built = self.build(k, &own)?;
            for (i, msgs) in built.into_iter().enumerate() {
                for b in msgs {
                    if k == 0 && b.slot != usize::MAX {
                        store[i][b.slot] = Some((-1, b.msg.clone()));
                    }
                    let d = delay.draw(b.msg.path.len().max(1), &mut self.rng);
                    pending.entry(k + d).or_default().push((i, k as i64, b));
                }
            }
            for i in 0..self.n {
                extras[i].retain(|(sent, _)| *sent >= k as i64 - tau as i64);
            }
            if let Some(arrivals) = pending.remove(&k) {
                for (i, sent, b) in arrivals {
                    if self.cfg.record.received {
                        self.trace.received[i].push(LoggedMessage::new(k, &b.msg));
                    }
                    if b.slot == usize::MAX {
                        extras[i].push((sent, b.msg));
                        continue;
                    }
                    let entry = &mut store[i][b.slot];
                    match entry {
                        Some((s, _)) if *s > sent => {}
                        Some((s, _)) if *s == sent => extras[i].push((sent, b.msg)),
                        _ => *entry = Some((sent, b.msg)),
                    }
                }
            }
            let mut next = self.x.clone();
            let mut filters = BTreeMap::new();
            let oldest = k as i64 - tau as i64;
            for i in 0..self.n {
                if !self.runs_update(i) || !schedule_of(i).updates_at(k) {
                    continue;
                }
                let mut msgs: Vec<Message> = store[i]
                    .iter()
                    .flatten()
                    .filter(|(sent, _)| (*sent).max(0) >= oldest)
                    .map(|(_, m)| m.clone())
                    .collect();
                msgs.extend(extras[i].iter().map(|(_, m)| m.clone()));
                msgs.push(Message::own(self.x[i], i));
                let (v, fr) = self.update(i, &msgs);
                next[i] = v;
                if self.cfg.record.filters {
                    filters.insert(i, fr);
                }
            }
            if self.cfg.record.filters {
                self.trace.filters.push(filters);
            }
            self.x = next;
        }
        Ok(())
    }
}
