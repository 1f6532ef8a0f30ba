//! Trace and summary emission. Output is byte-stable for a fixed trace:
//! JSON object keys are sorted and floats use the shortest decimal that
//! round-trips. Node ids are 1-based, as in scenario files.

use std::io;
use std::path::Path as FsPath;

use mwmsr::engine::{Summary, Trace};
use mwmsr::robustness::RobustnessReport;
use mwmsr::{Message, Path};
use serde_json::{json, Map, Value};

/// `k,node,value,is_normal`, one row per step and node. Silent adversaries
/// leave `value` empty.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("k,node,value,is_normal\n");
    for (k, row) in trace.states.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let value = v.map(|x| x.to_string()).unwrap_or_default();
            out.push_str(&format!("{k},{},{value},{}\n", i + 1, trace.normal[i]));
        }
    }
    out
}

fn path_json(p: &Path) -> Value {
    p.nodes().iter().map(|v| v + 1).collect()
}

fn message_json(m: &Message) -> Value {
    json!({ "value": m.value, "path": path_json(&m.path) })
}

fn messages_json(ms: &[Message]) -> Value {
    ms.iter().map(message_json).collect()
}

/// Whole trace as one JSON document. `steps[k].filters` maps each updating
/// node to its removal sets, survivors and weight.
pub fn trace_json(trace: &Trace) -> Value {
    let steps: Vec<Value> = trace
        .states
        .iter()
        .enumerate()
        .map(|(k, states)| {
            let mut filters = Map::new();
            if let Some(step) = trace.filters.get(k) {
                for (node, fr) in step {
                    filters.insert(
                        (node + 1).to_string(),
                        json!({
                            "removed_high": messages_json(&fr.removed_high),
                            "removed_low": messages_json(&fr.removed_low),
                            "kept": messages_json(&fr.kept),
                            "weight": fr.weight,
                        }),
                    );
                }
            }
            json!({ "k": k, "states": states, "filters": filters })
        })
        .collect();
    let forgeries: Vec<Value> = trace
        .forgeries
        .iter()
        .map(|f| {
            json!({
                "step": f.step,
                "node": f.node + 1,
                "prefix": path_json(&f.prefix),
                "true_value": f.true_value,
                "sent": f.sent,
            })
        })
        .collect();
    let mut doc = json!({
        "n": trace.n,
        "tau": trace.tau,
        "normal": (0..trace.n).filter(|&i| trace.normal[i]).map(|i| i + 1).collect::<Vec<_>>(),
        "safety": { "lo": trace.safety.lo, "hi": trace.safety.hi },
        "steps": steps,
        "forgeries": forgeries,
        "warnings": trace.warnings,
    });
    if trace.received.iter().any(|r| !r.is_empty()) {
        let received: Map<String, Value> = trace
            .received
            .iter()
            .enumerate()
            .map(|(i, log)| {
                let entries = log
                    .iter()
                    .map(|m| json!({ "step": m.step, "value": m.value, "path": path_json(&m.path) }))
                    .collect();
                ((i + 1).to_string(), Value::Array(entries))
            })
            .collect();
        doc["received"] = Value::Object(received);
    }
    doc
}

pub fn summary_json(summary: &Summary) -> Value {
    json!({
        "converged": summary.converged,
        "final_error": summary.final_error,
        "safety_ok": summary.safety_ok,
        "steps_to_threshold": summary.steps_to_threshold,
    })
}

fn ids(set: &std::collections::BTreeSet<usize>) -> Value {
    set.iter().map(|v| v + 1).collect()
}

/// `{verdict, witness, elapsed}`; the witness is `null` when the graph is
/// robust.
pub fn robustness_json(report: &RobustnessReport, elapsed_secs: f64) -> Value {
    let witness = report.witness.as_ref().map_or(Value::Null, |w| {
        json!({
            "v1": ids(&w.v1),
            "v2": ids(&w.v2),
            "f_set": ids(&w.f_set),
            "z1": ids(&w.z1),
            "z2": ids(&w.z2),
        })
    });
    json!({ "verdict": report.verdict, "witness": witness, "elapsed": elapsed_secs })
}

pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Writes `trace.csv` or `trace.json` into `dir`, returning the file path.
pub fn emit_trace(trace: &Trace, format: Format, dir: &FsPath) -> io::Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir)?;
    let (name, body) = match format {
        Format::Csv => ("trace.csv", trace_csv(trace)),
        Format::Json => ("trace.json", to_pretty(&trace_json(trace))),
    };
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use mwmsr::engine::{run, ScenarioConfig};
    use mwmsr::Graph;

    fn two_node() -> Trace {
        let g = Graph::parse("undirected 2\n1 2\n").unwrap();
        let mut cfg = ScenarioConfig::new(g, 1, 0, vec![0.0, 1.0]);
        cfg.horizon = 1;
        run(&cfg).unwrap()
    }

    #[test]
    fn csv_has_a_row_per_step_and_node() {
        let csv = trace_csv(&two_node());
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 2);
        assert_eq!(lines[1], "0,1,0,true");
        assert_eq!(lines[3], "1,1,0.5,true");
    }

    #[test]
    fn json_keys_are_sorted() {
        let text = to_pretty(&trace_json(&two_node()));
        let top: Vec<&str> = text
            .lines()
            .filter(|l| l.starts_with("  \""))
            .map(|l| l.trim().split('"').nth(1).unwrap())
            .collect();
        let mut sorted = top.clone();
        sorted.sort();
        assert_eq!(top, sorted);
        assert_eq!(text, to_pretty(&trace_json(&two_node())));
    }

    #[test]
    fn floats_round_trip() {
        let v = json!({ "x": 0.1 + 0.2 });
        let text = serde_json::to_string(&v).unwrap();
        assert_eq!(text, "{\"x\":0.30000000000000004}");
    }
}
