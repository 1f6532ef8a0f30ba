//! Scenario files: line-oriented `key = value` pairs under `[scenario]` and
//! repeated `[adversary]` sections. Node ids are 1-based; `#` starts a
//! comment.
//!
//! ```text
//! [scenario]
//! generator = cycle 4
//! hops = 2
//! f = 1
//! initial = 1 2 4 6
//!
//! [adversary]
//! node = 1
//! own = sine 1 0.3 1 0
//! relay.4 = sine 1 0.3 1 0
//! relay.2 = constant 0.5
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path as FsPath;

use mwmsr::adversary::{AdversarySpec, Injection, OwnLaw, RelayLaw, Waveform};
use mwmsr::engine::{DelayLaw, FilterKind, Mode, Record, ScenarioConfig, Schedule};
use mwmsr::{Generator, Graph};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{}: {msg}", .line.map_or("config".to_string(), |l| format!("line {l}")))]
    At { line: Option<usize>, msg: String },
    #[error("cannot read {path}: {msg}")]
    Io { path: String, msg: String },
}

fn err<T>(line: Option<usize>, msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError::At { line, msg: msg.into() })
}

/// A scenario plus the settings that only matter to the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    /// Consensus-error level that counts as converged in the summary.
    pub threshold: f64,
}

/// One `key = value` line with its section and line number.
#[derive(Debug, Clone)]
pub(crate) struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Splits a config text into sections, each a list of entries.
pub(crate) fn sections(text: &str) -> Result<Vec<(String, usize, Vec<Entry>)>, ConfigError> {
    let mut out: Vec<(String, usize, Vec<Entry>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            out.push((name.trim().to_string(), line, Vec::new()));
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return err(Some(line), format!("expected `key = value`, got `{content}`"));
        };
        let Some(section) = out.last_mut() else {
            return err(Some(line), "entry before any [section] header");
        };
        section.2.push(Entry {
            line,
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    if out.is_empty() {
        return err(None, "empty configuration");
    }
    Ok(out)
}

pub(crate) fn parse_num<T: std::str::FromStr>(e: &Entry, word: &str) -> Result<T, ConfigError> {
    word.parse()
        .or_else(|_| err(Some(e.line), format!("`{}`: cannot parse `{word}`", e.key)))
}

pub(crate) fn parse_list<T: std::str::FromStr>(e: &Entry) -> Result<Vec<T>, ConfigError> {
    e.value.split_whitespace().map(|w| parse_num(e, w)).collect()
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => err(Some(e.line), format!("`{}`: expected true/false, got `{other}`", e.key)),
    }
}

/// `constant c`, `sine amplitude frequency offset [phase]` or `table v0 v1 ...`.
fn parse_wave(e: &Entry, words: &[&str]) -> Result<Waveform, ConfigError> {
    let nums: Vec<f64> = words[1..].iter().map(|w| parse_num(e, w)).collect::<Result<_, _>>()?;
    match (words[0], nums.len()) {
        ("constant", 1) => Ok(Waveform::Constant { value: nums[0] }),
        ("sine", 3 | 4) => Ok(Waveform::Sine {
            amplitude: nums[0],
            frequency: nums[1],
            offset: nums[2],
            phase: nums.get(3).copied().unwrap_or(0.0),
        }),
        ("table", n) if n > 0 => Ok(Waveform::Table { values: nums }),
        _ => err(Some(e.line), format!("`{}`: bad law `{}`", e.key, e.value)),
    }
}

fn parse_own(e: &Entry) -> Result<OwnLaw, ConfigError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    match words.as_slice() {
        ["omit"] => Ok(OwnLaw::Omit),
        ["honest"] => Ok(OwnLaw::Honest),
        [] => err(Some(e.line), "empty law"),
        _ => Ok(OwnLaw::Forge { wave: parse_wave(e, &words)? }),
    }
}

fn parse_relay(e: &Entry) -> Result<RelayLaw, ConfigError> {
    let words: Vec<&str> = e.value.split_whitespace().collect();
    match words.as_slice() {
        ["omit"] => Ok(RelayLaw::Omit),
        ["passthrough"] => Ok(RelayLaw::Passthrough),
        [] => err(Some(e.line), "empty law"),
        _ => Ok(RelayLaw::Forge { wave: parse_wave(e, &words)? }),
    }
}

fn parse_injection(e: &Entry, word: &str) -> Result<Injection, ConfigError> {
    match word {
        "DUPLICATE" => Ok(Injection::Duplicate),
        "UNKNOWN_PATH" => Ok(Injection::UnknownPath),
        "DROP_PATH" => Ok(Injection::DropPath),
        other => err(Some(e.line), format!("unknown injection `{other}`")),
    }
}

/// 1-based node id in `1..=n`, returned 0-based.
pub(crate) fn parse_node(e: &Entry, word: &str, n: usize) -> Result<usize, ConfigError> {
    let id: usize = parse_num(e, word)?;
    if id == 0 || id > n {
        return err(Some(e.line), format!("node {id} out of range 1..={n}"));
    }
    Ok(id - 1)
}

/// Loads the graph named by one of `graph`, `generator` or `graph_inline`.
pub(crate) fn load_graph(e: &Entry, base: Option<&FsPath>) -> Result<Graph, ConfigError> {
    let at = |m: String| ConfigError::At { line: Some(e.line), msg: m };
    match e.key.as_str() {
        "generator" => {
            let g: Generator = e.value.parse().map_err(|m: String| at(m))?;
            Graph::generate(g).map_err(|m| at(m.to_string()))
        }
        "graph_inline" => Graph::parse(&e.value.replace(';', "\n")).map_err(|m| at(m.to_string())),
        _ => {
            let path = base.map_or_else(|| e.value.clone().into(), |b| b.join(&e.value));
            let text = std::fs::read_to_string(&path).map_err(|m| at(format!("{}: {m}", path.display())))?;
            Graph::parse(&text).map_err(|m| at(format!("{}: {m}", path.display())))
        }
    }
}

const SCENARIO_KEYS: &[&str] = &[
    "graph",
    "generator",
    "graph_inline",
    "hops",
    "f",
    "initial",
    "mode",
    "tau",
    "periods",
    "phases",
    "delays",
    "delay_uniform",
    "horizon",
    "seed",
    "filter",
    "threshold",
    "record_filters",
    "record_received",
    "record_forgeries",
];

/// Parses scenario text; relative graph paths resolve against `base`.
pub fn parse_scenario(text: &str, base: Option<&FsPath>) -> Result<Scenario, ConfigError> {
    let secs = sections(text)?;
    let mut scenario: Option<&Vec<Entry>> = None;
    let mut adversaries: Vec<(usize, &Vec<Entry>)> = Vec::new();
    for (name, line, entries) in &secs {
        match name.as_str() {
            "scenario" if scenario.is_none() => scenario = Some(entries),
            "scenario" => return err(Some(*line), "duplicate [scenario] section"),
            "adversary" => adversaries.push((*line, entries)),
            other => return err(Some(*line), format!("unknown section [{other}]")),
        }
    }
    let Some(entries) = scenario else {
        return err(None, "missing [scenario] section");
    };
    let mut map: BTreeMap<&str, &Entry> = BTreeMap::new();
    for e in entries {
        if !SCENARIO_KEYS.contains(&e.key.as_str()) {
            return err(Some(e.line), format!("unknown key `{}`", e.key));
        }
        if map.insert(e.key.as_str(), e).is_some() {
            return err(Some(e.line), format!("duplicate key `{}`", e.key));
        }
    }
    let sources: Vec<&&Entry> = ["graph", "generator", "graph_inline"]
        .iter()
        .filter_map(|k| map.get(k))
        .collect();
    let graph = match sources.as_slice() {
        [] => return err(None, "missing graph (set graph, generator or graph_inline)"),
        [e] => load_graph(e, base)?,
        [_, e, ..] => return err(Some(e.line), "more than one graph source"),
    };
    let n = graph.n();
    let get = |k: &str| map.get(k).copied();

    let hops = get("hops").map_or(Ok(1), |e| parse_num(e, &e.value))?;
    let f = get("f").map_or(Ok(0), |e| parse_num(e, &e.value))?;
    let Some(init_entry) = get("initial") else {
        return err(None, "missing `initial`");
    };
    let initial: Vec<f64> = parse_list(init_entry)?;
    if initial.len() != n {
        return err(
            Some(init_entry.line),
            format!("{} initial values for {n} nodes", initial.len()),
        );
    }

    let mut cfg = ScenarioConfig::new(graph, hops, f, initial);
    if let Some(e) = get("horizon") {
        cfg.horizon = parse_num(e, &e.value)?;
    }
    if let Some(e) = get("seed") {
        cfg.seed = parse_num(e, &e.value)?;
    }
    if let Some(e) = get("filter") {
        cfg.filter = match e.value.as_str() {
            "mwmsr" => FilterKind::MwMsr,
            "plain_average" => FilterKind::PlainAverage,
            other => return err(Some(e.line), format!("unknown filter `{other}`")),
        };
    }
    cfg.record = Record {
        filters: get("record_filters").map_or(Ok(true), parse_bool)?,
        received: get("record_received").map_or(Ok(false), parse_bool)?,
        forgeries: get("record_forgeries").map_or(Ok(true), parse_bool)?,
    };
    let threshold = get("threshold").map_or(Ok(1e-6), |e| parse_num(e, &e.value))?;

    let mode = get("mode").map_or("sync", |e| e.value.as_str());
    let async_keys = ["tau", "periods", "phases", "delays", "delay_uniform"];
    cfg.mode = match mode {
        "sync" => {
            if let Some(e) = async_keys.iter().find_map(|k| get(k)) {
                return err(Some(e.line), format!("`{}` only applies to mode = async", e.key));
            }
            Mode::Sync
        }
        "async" => {
            let tau = get("tau").map_or(Ok(0), |e| parse_num(e, &e.value))?;
            let periods: Vec<u64> = get("periods").map_or(Ok(vec![1; n]), parse_list)?;
            let phases: Vec<u64> = get("phases").map_or(Ok(vec![0; n]), parse_list)?;
            for (key, len) in [("periods", periods.len()), ("phases", phases.len())] {
                if len != n {
                    return err(get(key).map(|e| e.line), format!("`{key}` needs {n} entries, got {len}"));
                }
            }
            let delay = match (get("delays"), get("delay_uniform")) {
                (Some(_), Some(e)) => return err(Some(e.line), "set either `delays` or `delay_uniform`"),
                (Some(e), None) => DelayLaw::ByLength { delays: parse_list(e)? },
                (None, Some(e)) => DelayLaw::Uniform { max: parse_num(e, &e.value)? },
                (None, None) => DelayLaw::ByLength { delays: vec![0] },
            };
            let schedule = periods
                .into_iter()
                .zip(phases)
                .map(|(period, phase)| Schedule { period, phase })
                .collect();
            Mode::Async { tau, schedule, delay }
        }
        other => return err(get("mode").map(|e| e.line), format!("unknown mode `{other}`")),
    };

    if adversaries.len() > n {
        return err(None, format!("{} adversaries for {n} nodes", adversaries.len()));
    }
    let normal_values: Vec<f64> = {
        let bad: Vec<Option<usize>> = adversaries
            .iter()
            .map(|(_, es)| {
                es.iter()
                    .find(|e| e.key == "node")
                    .and_then(|e| e.value.parse::<usize>().ok())
                    .and_then(|v| v.checked_sub(1))
            })
            .collect();
        (0..n)
            .filter(|i| !bad.contains(&Some(*i)))
            .map(|i| cfg.initial[i])
            .collect()
    };
    for (line, entries) in adversaries {
        cfg.adversaries.push(parse_adversary(line, entries, n, &normal_values)?);
    }
    cfg.validate().map_err(|m| ConfigError::At {
        line: None,
        msg: m.to_string(),
    })?;
    Ok(Scenario { config: cfg, threshold })
}

fn parse_adversary(
    line: usize,
    entries: &[Entry],
    n: usize,
    normal_values: &[f64],
) -> Result<AdversarySpec, ConfigError> {
    let mut node = None;
    let mut own = None;
    let mut relay = BTreeMap::new();
    let mut injections = Vec::new();
    for e in entries {
        match e.key.as_str() {
            "node" => node = Some(parse_node(e, &e.value, n)?),
            "own" => own = Some(parse_own(e)?),
            "injections" => {
                injections = e
                    .value
                    .split_whitespace()
                    .map(|w| parse_injection(e, w))
                    .collect::<Result<_, _>>()?
            }
            key => {
                let Some(src) = key.strip_prefix("relay.") else {
                    return err(Some(e.line), format!("unknown adversary key `{key}`"));
                };
                let src = if src == "*" { None } else { Some(parse_node(e, src, n)?) };
                if relay.insert(src, parse_relay(e)?).is_some() {
                    return err(Some(e.line), format!("duplicate key `{key}`"));
                }
            }
        }
    }
    let Some(node) = node else {
        return err(Some(line), "[adversary] without `node`");
    };
    let own = own.unwrap_or_else(|| OwnLaw::Forge {
        wave: Waveform::default_sine(normal_values),
    });
    relay.entry(None).or_insert(RelayLaw::Passthrough);
    Ok(AdversarySpec {
        node,
        own,
        relay,
        injections,
    })
}

pub fn load_scenario(path: &FsPath) -> Result<Scenario, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    parse_scenario(&text, path.parent())
}

fn fmt_list<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

fn fmt_wave(w: &Waveform) -> String {
    match w {
        Waveform::Constant { value } => format!("constant {value}"),
        Waveform::Sine {
            amplitude,
            frequency,
            offset,
            phase,
        } => format!("sine {amplitude} {frequency} {offset} {phase}"),
        Waveform::Table { values } => format!("table {}", fmt_list(values)),
    }
}

/// Writes every setting explicitly, defaults included, with the graph
/// inlined. Parsing the echo gives back the same scenario.
pub fn echo_scenario(s: &Scenario) -> String {
    let cfg = &s.config;
    let mut out = String::from("[scenario]\n");
    let g = &cfg.graph;
    let graph = if g.is_directed() {
        g.to_edge_list().trim_end().replace('\n', "; ")
    } else {
        let pairs = g.edges().filter(|(j, i)| j < i).map(|(j, i)| format!("; {} {}", j + 1, i + 1));
        format!("undirected {}{}", g.n(), pairs.collect::<String>())
    };
    let _ = writeln!(out, "graph_inline = {graph}");
    let _ = writeln!(out, "hops = {}", cfg.hops);
    let _ = writeln!(out, "f = {}", cfg.f);
    let _ = writeln!(out, "initial = {}", fmt_list(&cfg.initial));
    let _ = writeln!(out, "horizon = {}", cfg.horizon);
    let _ = writeln!(out, "seed = {}", cfg.seed);
    let filter = match cfg.filter {
        FilterKind::MwMsr => "mwmsr",
        FilterKind::PlainAverage => "plain_average",
    };
    let _ = writeln!(out, "filter = {filter}");
    let _ = writeln!(out, "threshold = {}", s.threshold);
    let _ = writeln!(out, "record_filters = {}", cfg.record.filters);
    let _ = writeln!(out, "record_received = {}", cfg.record.received);
    let _ = writeln!(out, "record_forgeries = {}", cfg.record.forgeries);
    match &cfg.mode {
        Mode::Sync => out.push_str("mode = sync\n"),
        Mode::Async { tau, schedule, delay } => {
            out.push_str("mode = async\n");
            let _ = writeln!(out, "tau = {tau}");
            let full: Vec<Schedule> = (0..cfg.graph.n())
                .map(|i| schedule.get(i).copied().unwrap_or_default())
                .collect();
            let _ = writeln!(out, "periods = {}", fmt_list(full.iter().map(|s| s.period)));
            let _ = writeln!(out, "phases = {}", fmt_list(full.iter().map(|s| s.phase)));
            match delay {
                DelayLaw::ByLength { delays } => {
                    let _ = writeln!(out, "delays = {}", fmt_list(delays));
                }
                DelayLaw::Uniform { max } => {
                    let _ = writeln!(out, "delay_uniform = {max}");
                }
            }
        }
    }
    for a in &cfg.adversaries {
        out.push_str("\n[adversary]\n");
        let _ = writeln!(out, "node = {}", a.node + 1);
        let own = match &a.own {
            OwnLaw::Forge { wave } => fmt_wave(wave),
            OwnLaw::Omit => "omit".into(),
            OwnLaw::Honest => "honest".into(),
        };
        let _ = writeln!(out, "own = {own}");
        for (src, law) in &a.relay {
            let key = src.map_or("*".to_string(), |s| (s + 1).to_string());
            let law = match law {
                RelayLaw::Forge { wave } => fmt_wave(wave),
                RelayLaw::Passthrough => "passthrough".into(),
                RelayLaw::Omit => "omit".into(),
                RelayLaw::EquivocateForTesting => unreachable!("not expressible in a scenario file"),
            };
            let _ = writeln!(out, "relay.{key} = {law}");
        }
        if !a.injections.is_empty() {
            let names = a.injections.iter().map(|i| match i {
                Injection::Duplicate => "DUPLICATE",
                Injection::UnknownPath => "UNKNOWN_PATH",
                Injection::DropPath => "DROP_PATH",
            });
            let _ = writeln!(out, "injections = {}", fmt_list(names));
        }
    }
    out
}
