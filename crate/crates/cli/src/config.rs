//! Settings layered as flags over `POLARITY_*` variables over a TOML file over defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer};

use crate::args::{DualOpts, Format, OutputOpts, TimeOpts};
use crate::error::{CliError, Result};

pub const ENV_PREFIX: &str = "POLARITY_";

/// One source of settings; `None` defers to the next layer.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Layer {
    #[serde(default, deserialize_with = "text_or_number")]
    pub dual_box: Option<String>,
    #[serde(default, deserialize_with = "text_or_number")]
    pub dual_shape: Option<String>,
    pub strict: Option<bool>,
    pub steps: Option<usize>,
    pub t_end: Option<f64>,
    pub format: Option<Format>,
    pub no_timestamp: Option<bool>,
    pub check: Option<bool>,
}

fn text_or_number<'de, D: Deserializer<'de>>(
    d: D,
) -> std::result::Result<Option<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Text(String),
        Int(i64),
        Float(f64),
        List(Vec<f64>),
    }
    Ok(Some(match Raw::deserialize(d)? {
        Raw::Text(s) => s,
        Raw::Int(i) => i.to_string(),
        Raw::Float(x) => x.to_string(),
        Raw::List(v) => v
            .iter()
            .map(|x| x.to_string())
            .collect::<Vec<_>>()
            .join(","),
    }))
}

impl Layer {
    pub fn from_flags(
        dual: Option<&DualOpts>,
        time: Option<&TimeOpts>,
        output: Option<&OutputOpts>,
        check: bool,
    ) -> Self {
        let flag = |b: bool| b.then_some(true);
        Layer {
            dual_box: dual.and_then(|d| d.dual_box.clone()),
            dual_shape: dual.and_then(|d| d.dual_shape.clone()),
            strict: dual.and_then(|d| flag(d.strict)),
            steps: time.and_then(|t| t.steps),
            t_end: time.and_then(|t| t.t_end),
            format: output.and_then(|o| o.format),
            no_timestamp: output.and_then(|o| flag(o.no_timestamp)),
            check: flag(check),
        }
    }

    pub fn from_env(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let var = |key: &str| get(&format!("{ENV_PREFIX}{key}")).filter(|v| !v.is_empty());
        fn parse<T: std::str::FromStr>(key: &str, v: Option<String>) -> Result<Option<T>> {
            v.map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{ENV_PREFIX}{key}: cannot parse {s:?}")))
            })
            .transpose()
        }
        let format = match var("FORMAT").as_deref().map(str::trim) {
            None => None,
            Some("json") => Some(Format::Json),
            Some("csv") => Some(Format::Csv),
            Some(other) => {
                return Err(CliError::Usage(format!(
                    "{ENV_PREFIX}FORMAT: expected json or csv, got {other:?}"
                )))
            }
        };
        Ok(Layer {
            dual_box: var("DUAL_BOX"),
            dual_shape: var("DUAL_SHAPE"),
            strict: parse("STRICT", var("STRICT"))?,
            steps: parse("STEPS", var("STEPS"))?,
            t_end: parse("T_END", var("T_END"))?,
            format,
            no_timestamp: parse("NO_TIMESTAMP", var("NO_TIMESTAMP"))?,
            check: parse("CHECK", var("CHECK"))?,
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Fields of `self`, falling back to `lower`.
    pub fn over(self, lower: Layer) -> Layer {
        Layer {
            dual_box: self.dual_box.or(lower.dual_box),
            dual_shape: self.dual_shape.or(lower.dual_shape),
            strict: self.strict.or(lower.strict),
            steps: self.steps.or(lower.steps),
            t_end: self.t_end.or(lower.t_end),
            format: self.format.or(lower.format),
            no_timestamp: self.no_timestamp.or(lower.no_timestamp),
            check: self.check.or(lower.check),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub dual_box: Option<String>,
    pub dual_shape: Option<String>,
    pub strict: bool,
    pub steps: usize,
    pub t_end: f64,
    pub format: Format,
    pub no_timestamp: bool,
    pub check: bool,
}

impl Settings {
    /// Resolves `flags` against the environment and the config file.
    ///
    /// The file is `config` if given, else `POLARITY_CONFIG` if set.
    pub fn resolve(
        flags: Layer,
        config: Option<&Path>,
        get: impl Fn(&str) -> Option<String>,
    ) -> Result<Self> {
        let env = Layer::from_env(&get)?;
        let path = config
            .map(Path::to_path_buf)
            .or_else(|| get(&format!("{ENV_PREFIX}CONFIG")).map(PathBuf::from));
        let file = match path {
            Some(p) => Layer::from_file(&p)?,
            None => Layer::default(),
        };
        let l = flags.over(env).over(file);
        let s = Settings {
            dual_box: l.dual_box,
            dual_shape: l.dual_shape,
            strict: l.strict.unwrap_or(false),
            steps: l.steps.unwrap_or(11),
            t_end: l.t_end.unwrap_or(1.0),
            format: l.format.unwrap_or(Format::Json),
            no_timestamp: l.no_timestamp.unwrap_or(false),
            check: l.check.unwrap_or(false),
        };
        if s.steps < 2 {
            return Err(CliError::Usage(format!(
                "steps must be at least 2, got {}",
                s.steps
            )));
        }
        if !(s.t_end > 0.0 && s.t_end.is_finite()) {
            return Err(CliError::Usage(format!(
                "t-end must be positive, got {}",
                s.t_end
            )));
        }
        Ok(s)
    }

    /// `steps` equally spaced times on `[0, t_end]`.
    pub fn times(&self) -> Vec<f64> {
        let n = self.steps - 1;
        (0..=n).map(|k| self.t_end * k as f64 / n as f64).collect()
    }

    /// Box bounds for a `dim`-dimensional dual lattice, if overridden.
    pub fn dual_bounds(&self, dim: usize) -> Result<Option<Vec<[f64; 2]>>> {
        let Some(text) = &self.dual_box else {
            return Ok(None);
        };
        let nums = numbers::<f64>(text, "dual-box")?;
        let bounds = match nums.len() {
            1 if nums[0] > 0.0 => vec![[-nums[0], nums[0]]; dim],
            2 => vec![[nums[0], nums[1]]; dim],
            n if n == 2 * dim => nums.chunks(2).map(|c| [c[0], c[1]]).collect(),
            _ => {
                return Err(CliError::Usage(format!(
                    "dual-box {text:?}: expected R, lo,hi or {} bounds",
                    2 * dim
                )))
            }
        };
        Ok(Some(bounds))
    }

    pub fn dual_shape_for(&self, dim: usize) -> Result<Option<Vec<usize>>> {
        let Some(text) = &self.dual_shape else {
            return Ok(None);
        };
        let nums = numbers::<usize>(text, "dual-shape")?;
        match nums.len() {
            1 => Ok(Some(vec![nums[0]; dim])),
            n if n == dim => Ok(Some(nums)),
            _ => Err(CliError::Usage(format!(
                "dual-shape {text:?}: expected one count or {dim}"
            ))),
        }
    }
}

fn numbers<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{what}: cannot parse {s:?}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn env(pairs: &[(&str, &str)]) -> impl Fn(&str) -> Option<String> {
        let m: HashMap<String, String> = pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        move |k| m.get(k).cloned()
    }

    #[test]
    fn flags_beat_env_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(
            &cfg,
            "steps = 5\nt_end = 3.0\ndual_box = 4\nformat = \"csv\"\n",
        )
        .unwrap();
        let flags = Layer {
            steps: Some(7),
            ..Layer::default()
        };
        let s = Settings::resolve(flags, Some(&cfg), env(&[("POLARITY_T_END", "2")])).unwrap();
        assert_eq!(s.steps, 7);
        assert_eq!(s.t_end, 2.0);
        assert_eq!(s.dual_box.as_deref(), Some("4"));
        assert_eq!(s.format, Format::Csv);
        assert!(!s.strict);
    }

    #[test]
    fn config_path_from_env() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "strict = true\n").unwrap();
        let p = cfg.to_str().unwrap();
        let s = Settings::resolve(Layer::default(), None, env(&[("POLARITY_CONFIG", p)])).unwrap();
        assert!(s.strict);
    }

    #[test]
    fn unknown_config_keys_and_bad_env_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.toml");
        std::fs::write(&cfg, "stepz = 5\n").unwrap();
        let e = Settings::resolve(Layer::default(), Some(&cfg), env(&[])).unwrap_err();
        assert_eq!(e.exit_code(), 1);
        let e =
            Settings::resolve(Layer::default(), None, env(&[("POLARITY_STEPS", "x")])).unwrap_err();
        assert_eq!(e.exit_code(), 1);
    }

    #[test]
    fn dual_box_forms() {
        let mut s = Settings::resolve(Layer::default(), None, env(&[])).unwrap();
        s.dual_box = Some("3".into());
        assert_eq!(s.dual_bounds(2).unwrap().unwrap(), vec![[-3.0, 3.0]; 2]);
        s.dual_box = Some("-1,2".into());
        assert_eq!(s.dual_bounds(1).unwrap().unwrap(), vec![[-1.0, 2.0]]);
        s.dual_box = Some("-1,1,-2,2".into());
        assert_eq!(
            s.dual_bounds(2).unwrap().unwrap(),
            vec![[-1.0, 1.0], [-2.0, 2.0]]
        );
        s.dual_box = Some("1,2,3".into());
        assert!(s.dual_bounds(2).is_err());
        s.dual_shape = Some("21,31".into());
        assert_eq!(s.dual_shape_for(2).unwrap().unwrap(), vec![21, 31]);
    }

    #[test]
    fn times_are_equally_spaced() {
        let mut s = Settings::resolve(Layer::default(), None, env(&[])).unwrap();
        s.steps = 5;
        s.t_end = 2.0;
        assert_eq!(s.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }
}
