//! TOML scenario files.
//!
//! ```toml
//! replications = 200        # defaults applied to every scenario
//! seed = 7
//! alpha_levels = [0.05, 0.01]
//!
//! [[scenario]]
//! case = "case1"
//! mechanism = "logit"
//! params = [1.8, 1.0]
//! n = 400
//! ```

use ipwband::sim::Scenario;
use toml::{Table, Value};

const TOP_KEYS: &[&str] = &["replications", "seed", "alpha_levels", "scenario"];
const SCENARIO_KEYS: &[&str] = &[
    "case",
    "mechanism",
    "params",
    "n",
    "alpha_levels",
    "replications",
    "base_seed",
    "grid_size",
    "rho",
    "pi_floor",
];

fn unknown<'a>(table: &'a Table, allowed: &[&str]) -> Vec<&'a str> {
    table.keys().map(String::as_str).filter(|k| !allowed.contains(k)).collect()
}

pub fn parse(text: &str) -> Result<Vec<Scenario>, String> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| format!("invalid TOML: {e}"))?;
    let mut problems = Vec::new();
    let bad = unknown(&root, TOP_KEYS);
    if !bad.is_empty() {
        problems.push(format!("unknown top-level keys: {}", bad.join(", ")));
    }

    let defaults = {
        let mut d = Table::new();
        d.insert("replications".into(), Value::Integer(1000));
        d.insert("base_seed".into(), Value::Integer(20_240_601));
        d.insert("alpha_levels".into(), Value::Array(vec![Value::Float(0.05), Value::Float(0.01)]));
        if let Some(v) = root.get("replications") {
            d.insert("replications".into(), v.clone());
        }
        if let Some(v) = root.get("seed") {
            d.insert("base_seed".into(), v.clone());
        }
        if let Some(v) = root.get("alpha_levels") {
            d.insert("alpha_levels".into(), v.clone());
        }
        d
    };

    let entries = match root.get("scenario") {
        Some(Value::Array(a)) if !a.is_empty() => a.clone(),
        _ => {
            problems.push("no [[scenario]] entries".into());
            Vec::new()
        }
    };
    let mut out = Vec::new();
    for (i, entry) in entries.into_iter().enumerate() {
        let Value::Table(mut t) = entry else {
            problems.push(format!("scenario {}: not a table", i + 1));
            continue;
        };
        let bad = unknown(&t, SCENARIO_KEYS);
        if !bad.is_empty() {
            problems.push(format!("scenario {}: unknown keys: {}", i + 1, bad.join(", ")));
            continue;
        }
        for (k, v) in &defaults {
            t.entry(k.clone()).or_insert_with(|| v.clone());
        }
        match Value::Table(t).try_into::<Scenario>() {
            Ok(s) => match s.validate() {
                Ok(()) => out.push(s),
                Err(e) => problems.push(format!("scenario {}: {e}", i + 1)),
            },
            Err(e) => problems.push(format!("scenario {}: {}", i + 1, e.message())),
        }
    }
    if problems.is_empty() {
        Ok(out)
    } else {
        Err(format!("invalid scenario config: {}", problems.join("; ")))
    }
}
