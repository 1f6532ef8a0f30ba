//! Monte Carlo sweep over the wireless-sensor grid: for every
//! `(f, radius, hops)` cell, repeated sync runs with random initial values
//! and sine adversaries, scored by the consensus error at a fixed step.

use std::fmt::Write as _;
use std::path::Path as FsPath;

use mwmsr::adversary::{AdversarySpec, OwnLaw, RelayLaw, Waveform, DEFAULT_SINE_FREQUENCY};
use mwmsr::engine::{consensus_error, run, summarize, Record, ScenarioConfig};
use mwmsr::{Generator, Graph, NodeId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::scenario::{load_graph, parse_list, parse_num, sections, ConfigError, Entry};

/// Grid indices (0-based, node `i` at `(i mod side, i / side)`) that turn
/// malicious as `f` grows.
pub const MALICIOUS_ORDER: [NodeId; 11] = [32, 34, 36, 38, 43, 62, 64, 66, 68, 74, 14];

#[derive(Debug, Clone, PartialEq)]
pub enum Topology {
    /// `side * side` grid, rebuilt for every radius.
    Grid { side: usize },
    /// A fixed graph; the radius axis is then only a label.
    Fixed(Graph),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub topology: Topology,
    pub f_values: Vec<usize>,
    pub radii: Vec<f64>,
    pub hops: Vec<usize>,
    pub runs: usize,
    pub init_range: (f64, f64),
    pub horizon: u64,
    /// Success when the consensus error at `success_step` is below this.
    pub threshold: f64,
    pub success_step: u64,
    pub seed: u64,
    pub sine_frequency: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            topology: Topology::Grid { side: 10 },
            f_values: vec![0, 1, 2, 4, 6],
            radii: vec![1.2, 1.5, 2.0, 2.5, 3.1],
            hops: vec![1, 2],
            runs: 50,
            init_range: (0.0, 100.0),
            horizon: 70,
            threshold: 1.0,
            success_step: 70,
            seed: 0,
            sine_frequency: DEFAULT_SINE_FREQUENCY,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: &str| Err(ConfigError::At { line: None, msg: m.into() });
        if self.runs == 0 {
            return bad("runs must be at least 1");
        }
        if !(self.threshold > 0.0) {
            return bad("threshold must be positive");
        }
        if self.f_values.is_empty() || self.radii.is_empty() || self.hops.is_empty() {
            return bad("sweep axes must be nonempty");
        }
        if self.hops.contains(&0) {
            return bad("hops must be at least 1");
        }
        if self.f_values.iter().any(|&f| f > MALICIOUS_ORDER.len()) {
            return bad("f is limited by the 11-node malicious order");
        }
        let (lo, hi) = self.init_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("init range must be finite with lo <= hi");
        }
        if self.success_step > self.horizon {
            return bad("success_step beyond horizon");
        }
        let n = match &self.topology {
            Topology::Grid { side } => side * side,
            Topology::Fixed(g) => g.n(),
        };
        let max_f = self.f_values.iter().copied().max().unwrap_or(0);
        if MALICIOUS_ORDER[..max_f].iter().any(|&v| v >= n) {
            return bad("malicious node outside the graph");
        }
        Ok(())
    }
}

/// Parses a `[grid]` section; unset keys keep the desk-scale defaults.
pub fn parse_experiment(text: &str, base: Option<&FsPath>) -> Result<ExperimentConfig, ConfigError> {
    let secs = sections(text)?;
    let [(name, line, entries)] = secs.as_slice() else {
        return Err(ConfigError::At { line: None, msg: "expected exactly one [grid] section".into() });
    };
    if name != "grid" {
        return Err(ConfigError::At { line: Some(*line), msg: format!("unknown section [{name}]") });
    }
    let mut cfg = ExperimentConfig::default();
    let mut source: Option<&Entry> = None;
    for e in entries {
        let at = |m: String| ConfigError::At { line: Some(e.line), msg: m };
        match e.key.as_str() {
            "side" => cfg.topology = Topology::Grid { side: parse_num(e, &e.value)? },
            "graph" | "generator" | "graph_inline" => {
                if source.replace(e).is_some() {
                    return Err(at("more than one topology source".into()));
                }
                cfg.topology = Topology::Fixed(load_graph(e, base)?);
            }
            "f" => cfg.f_values = parse_list(e)?,
            "radius" => cfg.radii = parse_list(e)?,
            "hops" => cfg.hops = parse_list(e)?,
            "runs" => cfg.runs = parse_num(e, &e.value)?,
            "init" => match parse_list::<f64>(e)?.as_slice() {
                [lo, hi] => cfg.init_range = (*lo, *hi),
                _ => return Err(at("`init` takes two numbers: lo hi".into())),
            },
            "horizon" => cfg.horizon = parse_num(e, &e.value)?,
            "threshold" => cfg.threshold = parse_num(e, &e.value)?,
            "success_step" => cfg.success_step = parse_num(e, &e.value)?,
            "seed" => cfg.seed = parse_num(e, &e.value)?,
            "sine_frequency" => cfg.sine_frequency = parse_num(e, &e.value)?,
            key => return Err(at(format!("unknown key `{key}`"))),
        }
    }
    if source.is_some() && entries.iter().any(|e| e.key == "side") {
        return Err(ConfigError::At { line: None, msg: "`side` conflicts with a fixed graph".into() });
    }
    cfg.validate()?;
    Ok(cfg)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of one run, depending only on its own coordinates so that adding
/// cells leaves the others untouched.
pub fn run_seed(seed: u64, f: usize, radius: f64, hops: usize, run: usize) -> u64 {
    [f as u64, radius.to_bits(), hops as u64, run as u64]
        .iter()
        .fold(splitmix64(seed), |h, &x| splitmix64(h ^ x))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub f: usize,
    pub radius: f64,
    pub hops: usize,
    pub run: usize,
    pub seed: u64,
    pub error_at_success_step: f64,
    pub final_error: f64,
    pub success: bool,
    pub steps_to_threshold: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub f: usize,
    pub radius: f64,
    pub hops: usize,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_final_error: f64,
    /// Over the runs that got below the threshold; `None` if none did.
    pub mean_steps_to_threshold: Option<f64>,
    pub disconnected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub cells: Vec<CellResult>,
    /// Sorted by cell axes, then run index.
    pub runs: Vec<RunResult>,
}

/// The scenario of one run: sine adversaries on the first `f` nodes of the
/// malicious order, each with a seed-derived phase, forging relays with the
/// same wave.
pub fn build_run(cfg: &ExperimentConfig, graph: &Graph, f: usize, hops: usize, seed: u64) -> ScenarioConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = cfg.init_range;
    let initial: Vec<f64> = (0..graph.n()).map(|_| rng.gen_range(lo..=hi)).collect();
    let mut sc = ScenarioConfig::new(graph.clone(), hops, f, initial);
    sc.adversaries = MALICIOUS_ORDER[..f]
        .iter()
        .map(|&node| {
            let wave = Waveform::Sine {
                amplitude: (hi - lo) / 2.0,
                frequency: cfg.sine_frequency,
                offset: (hi + lo) / 2.0,
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            };
            AdversarySpec::new(node, OwnLaw::Forge { wave: wave.clone() })
                .with_relay(None, RelayLaw::Forge { wave })
        })
        .collect();
    sc.horizon = cfg.horizon;
    sc.seed = seed;
    sc.record = Record::states_only();
    sc
}

pub fn run_grid_experiment(cfg: &ExperimentConfig) -> Result<GridResult, ConfigError> {
    cfg.validate()?;
    let mut f_values = cfg.f_values.clone();
    let mut radii = cfg.radii.clone();
    let mut hops_values = cfg.hops.clone();
    f_values.sort_unstable();
    f_values.dedup();
    radii.sort_by(f64::total_cmp);
    radii.dedup();
    hops_values.sort_unstable();
    hops_values.dedup();

    let mut graphs = Vec::new();
    for &radius in &radii {
        let g = match &cfg.topology {
            Topology::Grid { side } => Graph::generate(Generator::Grid { side: *side, radius })
                .map_err(|e| ConfigError::At { line: None, msg: e.to_string() })?,
            Topology::Fixed(g) => g.clone(),
        };
        graphs.push(g);
    }
    let mut cells = Vec::new();
    for &f in &f_values {
        for (ri, &radius) in radii.iter().enumerate() {
            for &hops in &hops_values {
                cells.push((f, ri, radius, hops));
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.runs).map(move |r| (c, r))).collect();
    let runs: Vec<RunResult> = jobs
        .par_iter()
        .map(|&(c, run_idx)| {
            let (f, ri, radius, hops) = cells[c];
            let seed = run_seed(cfg.seed, f, radius, hops, run_idx);
            let sc = build_run(cfg, &graphs[ri], f, hops, seed);
            let trace = run(&sc).expect("grid scenarios are valid by construction");
            let summary = summarize(&trace, &sc, cfg.threshold);
            let err_kc = consensus_error(&trace, cfg.success_step, 0);
            RunResult {
                f,
                radius,
                hops,
                run: run_idx,
                seed,
                error_at_success_step: err_kc,
                final_error: summary.final_error,
                success: err_kc < cfg.threshold,
                steps_to_threshold: summary.steps_to_threshold,
            }
        })
        .collect();
    let cells = cells
        .iter()
        .enumerate()
        .map(|(c, &(f, ri, radius, hops))| {
            let mine = &runs[c * cfg.runs..(c + 1) * cfg.runs];
            tally(f, radius, hops, mine, !graphs[ri].is_strongly_connected())
        })
        .collect();
    Ok(GridResult { cells, runs })
}

/// Aggregates the stored runs of one cell.
pub fn tally(f: usize, radius: f64, hops: usize, runs: &[RunResult], disconnected: bool) -> CellResult {
    let successes = runs.iter().filter(|r| r.success).count();
    let reached: Vec<u64> = runs.iter().filter_map(|r| r.steps_to_threshold).collect();
    CellResult {
        f,
        radius,
        hops,
        runs: runs.len(),
        successes,
        success_rate: successes as f64 / runs.len() as f64,
        mean_final_error: runs.iter().map(|r| r.final_error).sum::<f64>() / runs.len() as f64,
        mean_steps_to_threshold: (!reached.is_empty())
            .then(|| reached.iter().sum::<u64>() as f64 / reached.len() as f64),
        disconnected,
    }
}

pub fn cells_csv(cells: &[CellResult]) -> String {
    let mut out =
        String::from("f,radius,hops,runs,successes,success_rate,mean_final_error,mean_steps_to_threshold,disconnected\n");
    for c in cells {
        let steps = c.mean_steps_to_threshold.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.f, c.radius, c.hops, c.runs, c.successes, c.success_rate, c.mean_final_error, steps, c.disconnected
        );
    }
    out
}

pub fn runs_csv(runs: &[RunResult]) -> String {
    let mut out = String::from("f,radius,hops,run,seed,error_at_success_step,final_error,success,steps_to_threshold\n");
    for r in runs {
        let steps = r.steps_to_threshold.map(|s| s.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.f, r.radius, r.hops, r.run, r.seed, r.error_at_success_step, r.final_error, r.success, steps
        );
    }
    out
}
