//! Run configuration (flat `key = value` files) and JSON-lines reports.

use crate::config::SparsifyConfig;
use crate::error::{Error, Result};
use crate::sketch::SketchConfig;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

pub const SEED_ENV: &str = "HYPERSPARSE_SEED";

/// Every tunable of a run. Nested sections are addressed by their bare
/// field names in config files (`c_lambda = 0.1`, `dense_limit = 512`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: String,
    pub eps: f64,
    /// Carries the master seed in `sparsify.seed`.
    pub sparsify: SparsifyConfig,
    pub sketch: SketchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: "static".into(),
            eps: 0.5,
            sparsify: SparsifyConfig::default(),
            sketch: SketchConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> Value {
    match raw {
        "none" | "null" | "" => Value::Null,
        _ => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())),
    }
}

fn set_key(obj: &mut Map<String, Value>, key: &str, v: &Value) -> bool {
    if let Some(slot) = obj.get_mut(key) {
        if !slot.is_object() {
            *slot = v.clone();
            return true;
        }
    }
    obj.values_mut().any(|child| child.as_object_mut().is_some_and(|c| set_key(c, key, v)))
}

impl RunConfig {
    /// Applies `key = value` lines on top of `self`. `#` starts a comment.
    pub fn apply_text(&self, text: &str) -> Result<RunConfig> {
        let mut tree = serde_json::to_value(self).expect("config serializes");
        let obj = tree.as_object_mut().expect("config is an object");
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: i + 1, msg: "expected key = value".into() })?;
            let (k, v) = (k.trim(), v.trim());
            let mut val = parse_value(v);
            if k == "mode" {
                val = Value::String(v.to_string());
            }
            if !set_key(obj, k, &val) {
                return Err(Error::Parse { line: i + 1, msg: format!("unknown key `{k}`") });
            }
        }
        let cfg: RunConfig = serde_json::from_value(tree).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Infeasible(format!("eps = {} not in (0,1)", self.eps)));
        }
        Ok(())
    }

    /// Flat `key = value` rendering that [`RunConfig::apply_text`] reads back.
    pub fn to_text(&self) -> String {
        fn walk(v: &Value, out: &mut String) {
            if let Value::Object(m) = v {
                for (k, x) in m {
                    if x.is_object() {
                        walk(x, out);
                    } else {
                        out.push_str(&format!("{k} = {}\n", render(x)));
                    }
                }
            }
        }
        fn render(v: &Value) -> String {
            match v {
                Value::String(s) => s.clone(),
                Value::Null => "none".into(),
                x => x.to_string(),
            }
        }
        let mut out = String::new();
        walk(&serde_json::to_value(self).expect("config serializes"), &mut out);
        out
    }

    pub fn seed(&self) -> u64 {
        self.sparsify.seed
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.sparsify.seed = seed;
    }
}

/// One JSON line: the record kind, the full config, the payload, and the
/// wall time last so that determinism checks can drop it.
pub fn report_line<T: Serialize>(kind: &str, config: &RunConfig, result: &T, wall_ms: u128) -> String {
    let mut m = Map::new();
    m.insert("record".into(), Value::String(kind.into()));
    m.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    m.insert("result".into(), serde_json::to_value(result).expect("result serializes"));
    m.insert("wall_ms".into(), Value::from(wall_ms as u64));
    Value::Object(m).to_string()
}

/// A report line with every `wall_ms` and `*_wall_ms` field removed, at any depth.
pub fn strip_wall_time(line: &str) -> Result<Value> {
    fn strip(v: &mut Value) {
        match v {
            Value::Object(m) => {
                m.retain(|k, _| k != "wall_ms" && !k.ends_with("_wall_ms"));
                m.values_mut().for_each(strip);
            }
            Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }
    let mut v: Value = serde_json::from_str(line).map_err(|e| Error::Parse { line: 0, msg: e.to_string() })?;
    strip(&mut v);
    Ok(v)
}
