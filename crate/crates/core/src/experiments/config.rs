use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Experiment {
    Sweep,
    Meyers,
    Scaling,
    Kernel,
    Degiorgi,
    Convergence,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Sweep,
        Experiment::Meyers,
        Experiment::Scaling,
        Experiment::Kernel,
        Experiment::Degiorgi,
        Experiment::Convergence,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Sweep => "sweep",
            Experiment::Meyers => "meyers",
            Experiment::Scaling => "scaling",
            Experiment::Kernel => "kernel",
            Experiment::Degiorgi => "degiorgi",
            Experiment::Convergence => "convergence",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A typed configuration value. The type of every key is fixed by its default.
#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Nums(Vec<f64>),
    Text(String),
    Texts(Vec<String>),
}

fn fmt_num(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => f.write_str(&fmt_num(*x)),
            Value::Nums(v) => write!(f, "[{}]", v.iter().map(|x| fmt_num(*x)).collect::<Vec<_>>().join(", ")),
            Value::Text(s) => f.write_str(s),
            Value::Texts(v) => write!(f, "[{}]", v.join(", ")),
        }
    }
}

/// Accepts plain floats and fractions `a/b`.
fn parse_num(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

fn list_items(raw: &str) -> Option<Vec<&str>> {
    let inner = raw.strip_prefix('[')?.strip_suffix(']')?.trim();
    if inner.is_empty() {
        return Some(Vec::new());
    }
    Some(inner.split(',').map(str::trim).collect())
}

fn valid_word(s: &str) -> bool {
    !s.is_empty() && !s.contains([',', '[', ']', '#', '\n', '"'])
}

impl Value {
    /// Parses `raw` as the same variant as `self`.
    fn coerce(&self, key: &str, raw: &str) -> Result<Value> {
        let bad = || Error::Config(format!("bad value '{raw}' for key '{key}'"));
        let raw = raw.trim();
        match self {
            Value::Num(_) => parse_num(raw).map(Value::Num).ok_or_else(bad),
            Value::Nums(_) => {
                let items = list_items(raw).ok_or_else(bad)?;
                items.iter().map(|s| parse_num(s)).collect::<Option<Vec<_>>>().map(Value::Nums).ok_or_else(bad)
            }
            Value::Text(_) => {
                let s = raw.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(raw);
                if !s.is_empty() && !s.contains(['[', ']', '#', '\n', '"']) {
                    Ok(Value::Text(s.to_string()))
                } else {
                    Err(bad())
                }
            }
            Value::Texts(_) => {
                let items = list_items(raw).ok_or_else(bad)?;
                if items.iter().all(|s| valid_word(s)) {
                    Ok(Value::Texts(items.iter().map(|s| s.to_string()).collect()))
                } else {
                    Err(bad())
                }
            }
        }
    }
}

fn num(x: f64) -> Value {
    Value::Num(x)
}

fn nums(v: &[f64]) -> Value {
    Value::Nums(v.to_vec())
}

fn defaults(e: Experiment) -> Vec<(&'static str, Value)> {
    let mut d = vec![("output.dir", Value::Text("results".into())), ("seed", num(0.0))];
    d.extend(match e {
        Experiment::Sweep => vec![
            ("geometry.radius", num(0.15)),
            ("geometry.deltas", nums(&[0.2, 0.1, 0.05, 0.025, 0.0])),
            ("field.contrast", nums(&[10.0, 10.0])),
            ("field.background", num(1.0)),
            ("mesh.h", num(1.0 / 128.0)),
            ("time.step", num(0.01)),
            ("time.final", num(0.1)),
            ("norms.epsilon", num(0.05)),
            ("norms.alpha", num(0.5)),
            ("sweep.delta_tail", num(0.05)),
            ("sweep.plateau_max", num(1.5)),
        ],
        Experiment::Meyers => vec![
            ("meyers.ms", nums(&[2.0, 4.0, 9.0])),
            ("meyers.fem", num(1.0)),
            ("mesh.h", num(1.0 / 256.0)),
            ("meyers.r_min_factor", num(4.0)),
            ("meyers.r_max", num(0.3)),
            ("meyers.annuli", num(8.0)),
            ("meyers.min_annuli", num(5.0)),
            ("meyers.rays", num(8.0)),
            ("time.step", num(0.01)),
            ("time.final", num(0.02)),
            ("meyers.ray_tol", num(1e-4)),
            ("meyers.slope_tol", num(0.1)),
        ],
        Experiment::Scaling => vec![
            ("scaling.rhos", nums(&[1.0, 0.5, 0.25, 0.125])),
            ("scaling.pair_distance", num(1.5)),
            ("scaling.pair_lag", num(2.0)),
            ("scaling.t0", num(2.0)),
            ("geometry.radius", num(0.5)),
            ("geometry.gaps", nums(&[0.0])),
            ("field.contrast", num(10.0)),
            ("mesh.h", num(1.0 / 64.0)),
            ("scaling.linear_tol", num(1e-6)),
            ("scaling.closed_form_max", num(4.0)),
            ("scaling.fem_max", num(10.0)),
        ],
        Experiment::Kernel => vec![
            ("kernel.fields", Value::Texts(vec!["line".into(), "constant".into(), "contrast".into(), "cylinder".into()])),
            ("kernel.line_h", num(0.02)),
            ("kernel.line_step", num(1e-3)),
            ("mesh.h", num(0.05)),
            ("time.step", num(0.01)),
            ("kernel.elapsed", nums(&[0.4, 3.2, 0.2])),
            ("kernel.etas", nums(&[0.0, 2.0, 0.125])),
            ("kernel.directions", num(16.0)),
            ("geometry.half_width", num(2.0)),
            ("geometry.radius", num(0.5)),
            ("geometry.offset", num(0.75)),
            ("field.contrast", num(5.0)),
            ("kernel.exponent_tol", num(0.02)),
            ("kernel.rate_tol", num(0.05)),
            ("kernel.gradient_tol", num(0.05)),
            ("kernel.contrast_range", nums(&[1.35, 1.65])),
            ("kernel.cylinder_max", num(50.0)),
        ],
        Experiment::Degiorgi => vec![
            ("degiorgi.triples", num(200.0)),
            ("degiorgi.m_max", num(60.0)),
            ("degiorgi.c_range", nums(&[0.5, 10.0])),
            ("degiorgi.b_range", nums(&[1.0001, 16.0])),
            ("degiorgi.eps_range", nums(&[0.1, 2.0])),
            ("cascade.p", num(6.0)),
            ("cascade.rho", num(0.2)),
            ("cascade.slack", num(1.05)),
            ("mesh.h", num(1.0 / 32.0)),
            ("time.step", num(0.01)),
            ("time.final", num(0.2)),
            ("embedding.modes", num(3.0)),
            ("embedding.h", num(1.0 / 16.0)),
            ("embedding.spread_max", num(3.0)),
            ("embedding.stability", num(0.1)),
        ],
        Experiment::Convergence => vec![
            ("convergence.space_h", nums(&[0.125, 0.0625, 0.03125, 0.015625])),
            ("convergence.time_steps", nums(&[0.1, 0.05, 0.025, 0.0125])),
            ("convergence.reference_divisor", num(16.0)),
            ("mesh.h", num(1.0 / 16.0)),
            ("time.final", num(0.5)),
            ("convergence.space_range", nums(&[1.8, 2.2])),
            ("convergence.euler_range", nums(&[0.9, 1.1])),
            ("convergence.crank_nicolson_range", nums(&[1.8, 2.2])),
        ],
    });
    d
}

/// Flat `key = value` configuration of one experiment, every key present.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    experiment: Experiment,
    values: BTreeMap<String, Value>,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            values: defaults(experiment).into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        }
    }

    /// Parses the text format:
    ///
    /// ```text
    /// experiment = sweep
    /// # comment
    /// mesh.h = 1/128
    /// [geometry]
    /// deltas = [0.2, 0.1, 0]
    /// ```
    ///
    /// A `[section]` line prefixes the keys after it. Keys missing from the
    /// file keep their defaults; unknown and repeated keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut section = String::new();
        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim();
            let no = no + 1;
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !name.is_empty() && !valid_key(name) {
                    return Err(Error::Config(format!("line {no}: bad section '{name}'")));
                }
                section = name.to_string();
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {no}: expected 'key = value'")))?;
            let k = k.trim();
            if !valid_key(k) {
                return Err(Error::Config(format!("line {no}: bad key '{k}'")));
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            if entries.iter().any(|e| e.1 == key) {
                return Err(Error::Config(format!("line {no}: repeated key '{key}'")));
            }
            entries.push((no, key, v.trim().to_string()));
        }
        let exp = entries
            .iter()
            .find(|e| e.1 == "experiment")
            .ok_or_else(|| Error::Config("missing 'experiment' key".into()))?;
        let mut cfg = ExperimentConfig::defaults(Experiment::parse(&exp.2)?);
        for (no, key, raw) in entries.iter().filter(|e| e.1 != "experiment") {
            cfg.set(key, raw).map_err(|e| Error::Config(format!("line {no}: {}", strip_prefix(&e))))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        ExperimentConfig::parse(&std::fs::read_to_string(path)?)
    }

    /// Replaces one value, parsed with the key's type.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let slot = self
            .values
            .get_mut(key)
            .ok_or_else(|| Error::Config(format!("unknown key '{key}' for experiment {}", self.experiment)))?;
        *slot = slot.coerce(key, raw)?;
        Ok(())
    }

    /// `experiment` first, then every key in sorted order.
    pub fn to_canonical(&self) -> String {
        let mut s = format!("experiment = {}\n", self.experiment);
        for (k, v) in &self.values {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    pub fn experiment(&self) -> Experiment {
        self.experiment
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    fn get(&self, key: &str) -> Result<&Value> {
        self.values.get(key).ok_or_else(|| Error::Config(format!("unknown key '{key}'")))
    }

    pub fn num(&self, key: &str) -> Result<f64> {
        match self.get(key)? {
            Value::Num(x) => Ok(*x),
            _ => Err(Error::Config(format!("'{key}' is not a number"))),
        }
    }

    /// A number that must be a positive integer.
    pub fn count(&self, key: &str) -> Result<usize> {
        let x = self.num(key)?;
        if x >= 1.0 && x.fract() == 0.0 && x < 1e9 {
            Ok(x as usize)
        } else {
            Err(Error::Config(format!("'{key}' = {x} must be a positive integer")))
        }
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.num(key)? {
            x if x == 0.0 => Ok(false),
            x if x == 1.0 => Ok(true),
            x => Err(Error::Config(format!("'{key}' = {x} must be 0 or 1"))),
        }
    }

    pub fn nums(&self, key: &str) -> Result<&[f64]> {
        match self.get(key)? {
            Value::Nums(v) => Ok(v),
            _ => Err(Error::Config(format!("'{key}' is not a list of numbers"))),
        }
    }

    pub fn text(&self, key: &str) -> Result<&str> {
        match self.get(key)? {
            Value::Text(s) => Ok(s),
            _ => Err(Error::Config(format!("'{key}' is not text"))),
        }
    }

    pub fn texts(&self, key: &str) -> Result<&[String]> {
        match self.get(key)? {
            Value::Texts(v) => Ok(v),
            _ => Err(Error::Config(format!("'{key}' is not a list of words"))),
        }
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.text("output.dir").unwrap_or("results"))
    }

    pub fn seed(&self) -> Result<u64> {
        let s = self.num("seed")?;
        if s >= 0.0 && s.fract() == 0.0 && s < 2f64.powi(53) {
            Ok(s as u64)
        } else {
            Err(Error::Config(format!("seed {s} must be a nonnegative integer")))
        }
    }
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|p| !p.is_empty())
        && k.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_' || c == '.')
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_and_lists() {
        assert_eq!(parse_num("1/128"), Some(0.0078125));
        assert_eq!(parse_num("1/0"), None);
        assert_eq!(list_items("[]"), Some(vec![]));
        assert_eq!(list_items("[a, b]"), Some(vec!["a", "b"]));
    }

    #[test]
    fn every_experiment_has_a_canonical_default() {
        for e in Experiment::ALL {
            let d = ExperimentConfig::defaults(e);
            assert_eq!(ExperimentConfig::parse(&d.to_canonical()).unwrap(), d);
        }
    }
}
