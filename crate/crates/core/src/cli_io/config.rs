use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::driver::SolverConfig;
use crate::error::{Error, Result};
use crate::upstream::InflowSpec;

fn default_gamma() -> f64 {
    1.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GasSection {
    #[serde(default = "default_gamma")]
    pub gamma: f64,
}

impl Default for GasSection {
    fn default() -> Self {
        Self { gamma: default_gamma() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    /// Output directory; the command line and `TRANSONIC_OUT_ROOT` take over when unset.
    #[serde(default)]
    pub dir: Option<String>,
    #[serde(default)]
    pub emit_plots: bool,
    /// Dump the final linear systems in matrix-market format.
    #[serde(default)]
    pub dump_matrices: bool,
}

/// Everything a run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub inflow: InflowSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub gas: GasSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.inflow.violations();
        v.extend(self.solver.violations());
        if !(self.gas.gamma > 1.0 && self.gas.gamma.is_finite()) {
            v.push(format!("gas.gamma must exceed 1, got {}", self.gas.gamma));
        }
        v
    }
}

fn closest<'a>(key: &str, known: impl Iterator<Item = &'a String>) -> Option<&'a String> {
    let lower = key.to_lowercase();
    known
        .map(|k| {
            let d = strsim::levenshtein(&lower, &k.replace('_', "")).min(strsim::levenshtein(&lower, k));
            (d, k)
        })
        .filter(|(d, k)| *d <= 2 + k.len() / 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k)
}

/// Unknown keys in `value` against the shape of `reference`, with suggestions.
fn unknown_keys(value: &Map<String, Value>, reference: &Map<String, Value>, prefix: &str, out: &mut Vec<String>) {
    for (key, v) in value {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        match reference.get(key) {
            Some(Value::Object(inner)) => {
                if let Value::Object(obj) = v {
                    unknown_keys(obj, inner, &path, out);
                }
            }
            Some(_) => {}
            None => {
                let hint = match closest(key, reference.keys()) {
                    Some(k) => {
                        let full = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                        format!("; did you mean \"{full}\"?")
                    }
                    None => String::new(),
                };
                out.push(format!("unknown key \"{path}\"{hint}"));
            }
        }
    }
}

/// Copy of `value` without the keys that `reference` lacks.
fn prune(value: &Map<String, Value>, reference: &Map<String, Value>) -> Map<String, Value> {
    value
        .iter()
        .filter_map(|(k, v)| match (reference.get(k), v) {
            (Some(Value::Object(inner)), Value::Object(obj)) => Some((k.clone(), Value::Object(prune(obj, inner)))),
            (Some(_), _) => Some((k.clone(), v.clone())),
            (None, _) => None,
        })
        .collect()
}

/// Validates a JSON value and fills defaults. Every problem is reported, not just the first.
pub fn parse_config_value(value: &Value) -> Result<RunConfig> {
    let Value::Object(root) = value else {
        return Err(Error::Config(vec!["configuration must be a JSON object".into()]));
    };
    let reference = match serde_json::to_value(RunConfig::default()) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("default configuration serializes to an object"),
    };
    let mut problems = Vec::new();
    unknown_keys(root, &reference, "", &mut problems);
    let known = prune(root, &reference);

    let section = |name: &str| known.get(name).cloned().unwrap_or(Value::Object(Map::new()));
    fn typed<T: serde::de::DeserializeOwned + Default>(name: &str, v: Value, problems: &mut Vec<String>) -> T {
        serde_path_to_error::deserialize(v).unwrap_or_else(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path == "." {
                problems.push(format!("{name}: {inner}"));
            } else {
                problems.push(format!("{name}.{path}: {inner}"));
            }
            T::default()
        })
    }
    let config = RunConfig {
        inflow: typed("inflow", section("inflow"), &mut problems),
        solver: typed("solver", section("solver"), &mut problems),
        gas: typed("gas", section("gas"), &mut problems),
        output: typed("output", section("output"), &mut problems),
    };
    // Sections that failed to deserialize fall back to defaults, which carry no violations.
    problems.extend(config.violations());
    if problems.is_empty() {
        Ok(config)
    } else {
        Err(Error::Config(problems))
    }
}

/// Parses configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| Error::Config(vec![format!("malformed JSON: {e}")]))?;
    parse_config_value(&value)
}

/// Applies `section.key=value` to a JSON document. The value is read as JSON when it parses,
/// otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(vec![format!("override {assignment:?} is not of the form key=value")]))?;
    let parsed = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    let mut node = doc;
    let parts: Vec<&str> = path.trim().split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(vec![format!("override key {path:?} has an empty component")]));
        }
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let obj = node.as_object_mut().expect("object");
        if k + 1 == parts.len() {
            obj.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = obj.entry(part.to_string()).or_insert_with(|| Value::Object(Map::new()));
    }
    Ok(())
}

/// SHA-256 of the canonical JSON of the parts that affect the solution.
pub fn config_hash(config: &RunConfig) -> String {
    let semantic = serde_json::json!({
        "inflow": config.inflow,
        "solver": config.solver,
        "gas": config.gas,
    });
    let digest = Sha256::digest(semantic.to_string().as_bytes());
    hex::encode(digest.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(r#"{"inflow": {"eps_swirl": 0.02}}"#).unwrap();
        assert_eq!(c.inflow.eps_swirl, 0.02);
        assert_eq!(c.gas.gamma, 1.4);
        assert_eq!((c.solver.n_y, c.solver.n_t), (129, 65));
        assert_eq!(c.inflow.u0m, 2.0);
    }

    #[test]
    fn every_violation_is_listed() {
        let err = parse_config(r#"{"inflow": {"eps_swirl": -1, "eps_entropy": -2}, "gas": {"gamma": 0.5}}"#)
            .unwrap_err();
        let Error::Config(v) = err else { panic!() };
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].contains("inflow.eps_swirl"));
    }

    #[test]
    fn unknown_key_gets_a_suggestion() {
        let Error::Config(v) = parse_config(r#"{"inflow": {"epsSwirl": 0.02}}"#).unwrap_err() else {
            panic!()
        };
        assert_eq!(v.len(), 1);
        assert!(v[0].contains("\"inflow.epsSwirl\"") && v[0].contains("inflow.eps_swirl"), "{}", v[0]);
    }

    #[test]
    fn type_errors_in_several_sections() {
        let Error::Config(v) = parse_config(r#"{"inflow": {"eps_swirl": "x"}, "solver": {"n_y": -3}}"#).unwrap_err()
        else {
            panic!()
        };
        assert_eq!(v.len(), 2, "{v:?}");
    }

    #[test]
    fn overrides_create_nested_keys() {
        let mut doc = serde_json::json!({});
        apply_override(&mut doc, "inflow.eps_swirl=0.02").unwrap();
        apply_override(&mut doc, "solver.nesting=flattened_picard").unwrap();
        let c = parse_config_value(&doc).unwrap();
        assert_eq!(c.inflow.eps_swirl, 0.02);
        assert_eq!(c.solver.nesting, crate::driver::Nesting::FlattenedPicard);
        assert!(apply_override(&mut doc, "novalue").is_err());
    }

    #[test]
    fn hash_ignores_output_section() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output.dir = Some("elsewhere".into());
        assert_eq!(config_hash(&a), config_hash(&b));
        b.inflow.eps_swirl = 1e-3;
        assert_ne!(config_hash(&a), config_hash(&b));
    }
}
