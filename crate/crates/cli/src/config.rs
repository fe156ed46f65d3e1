//! Resolved run settings: defaults, then a `key=value` file, then flags.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use tmdc_core::booleanize::BinarizationConfig;
use tmdc_core::eval::{Corruption, CorruptionSpec};
use tmdc_core::Hyperparams;

/// How a dataset path is read.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    /// Pick from the file name.
    Auto,
    /// Whitespace separated `0`/`1` features, label last.
    Bits,
    /// IDX images plus a separate IDX label file.
    Idx,
    /// Binarized cache written by an earlier run.
    Cache,
    /// CSV with `label` and `text` columns.
    Text,
}

impl Format {
    pub fn resolve(self, path: &Path) -> Format {
        if self != Format::Auto {
            return self;
        }
        let name = path
            .file_name()
            .map(|n| n.to_string_lossy().to_lowercase())
            .unwrap_or_default();
        if name.ends_with(".tmbc") {
            Format::Cache
        } else if name.ends_with(".csv") {
            Format::Text
        } else if name.contains("idx") || name.ends_with("-ubyte") || name.ends_with(".gz") {
            Format::Idx
        } else {
            Format::Bits
        }
    }
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Format::Auto,
            "bits" => Format::Bits,
            "idx" => Format::Idx,
            "cache" => Format::Cache,
            "text" => Format::Text,
            _ => bail!("unknown format `{s}` (auto, bits, idx, cache, text)"),
        })
    }
}

impl std::fmt::Display for Format {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Format::Auto => "auto",
            Format::Bits => "bits",
            Format::Idx => "idx",
            Format::Cache => "cache",
            Format::Text => "text",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub format: Format,
    pub model: Option<PathBuf>,
    pub out: Option<PathBuf>,

    pub params: Hyperparams,
    pub one_vs_rest: bool,

    /// Convolution window; `None` trains a flat machine.
    pub patch: Option<usize>,
    pub step: usize,
    pub coords: bool,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub channels: usize,

    pub window: usize,
    /// Defaults to `window / 6`.
    pub sigma: Option<f64>,
    pub offset: i32,

    pub vocab: usize,
    pub min_freq: usize,
    pub stem: bool,

    pub class: Option<String>,
    pub k: usize,
    pub index: usize,
    pub top: usize,

    pub kinds: Vec<Corruption>,
    pub apply_prob: f64,
    pub draws: usize,
    pub synonyms: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let bin = BinarizationConfig::default();
        let spec = CorruptionSpec::default();
        Self {
            data: None,
            labels: None,
            test: None,
            test_labels: None,
            format: Format::Auto,
            model: None,
            out: None,
            params: Hyperparams::default(),
            one_vs_rest: false,
            patch: None,
            step: 1,
            coords: true,
            rows: None,
            cols: None,
            channels: 1,
            window: bin.window,
            sigma: None,
            offset: bin.offset,
            vocab: 5000,
            min_freq: 1,
            stem: false,
            class: None,
            k: 10,
            index: 0,
            top: 20,
            kinds: spec.kinds,
            apply_prob: spec.apply_probability,
            draws: 5,
            synonyms: None,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| anyhow!("bad value `{value}` for `{key}`: {e}"))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("bad value `{value}` for `{key}`: expected true or false"),
    }
}

fn parse_opt<T: FromStr>(key: &str, value: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if value.is_empty() {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn opt_path(value: &str) -> Option<PathBuf> {
    (!value.is_empty()).then(|| PathBuf::from(value))
}

fn show_path(p: &Option<PathBuf>) -> String {
    p.as_ref().map(|p| p.display().to_string()).unwrap_or_default()
}

fn show<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

impl RunConfig {
    /// Applies one setting. Dashes and underscores are interchangeable in
    /// keys; `T` and `s` are case sensitive.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let norm = key.trim().replace('-', "_");
        match norm.as_str() {
            "data" => self.data = opt_path(value),
            "labels" => self.labels = opt_path(value),
            "test" => self.test = opt_path(value),
            "test_labels" => self.test_labels = opt_path(value),
            "format" => self.format = parse(key, value)?,
            "model" => self.model = opt_path(value),
            "out" => self.out = opt_path(value),
            "clauses" => self.params.clauses = parse(key, value)?,
            "T" => self.params.threshold = parse(key, value)?,
            "s" => self.params.specificity = parse(key, value)?,
            "states" => self.params.states = parse(key, value)?,
            "boost_tp" => self.params.boost_true_positive = parse_bool(key, value)?,
            "weighted" => self.params.weighted = parse_bool(key, value)?,
            "drop_clause" => self.params.drop_clause = parse(key, value)?,
            "epochs" => self.params.epochs = parse(key, value)?,
            "seed" => self.params.seed = parse(key, value)?,
            "one_vs_rest" => self.one_vs_rest = parse_bool(key, value)?,
            "patch" => self.patch = parse_opt(key, value)?,
            "step" => self.step = parse(key, value)?,
            "coords" => self.coords = parse_bool(key, value)?,
            "rows" => self.rows = parse_opt(key, value)?,
            "cols" => self.cols = parse_opt(key, value)?,
            "channels" => self.channels = parse(key, value)?,
            "window" => self.window = parse(key, value)?,
            "sigma" => self.sigma = parse_opt(key, value)?,
            "offset" => self.offset = parse(key, value)?,
            "vocab" => self.vocab = parse(key, value)?,
            "min_freq" => self.min_freq = parse(key, value)?,
            "stem" => self.stem = parse_bool(key, value)?,
            "class" => self.class = (!value.is_empty()).then(|| value.to_string()),
            "k" => self.k = parse(key, value)?,
            "index" => self.index = parse(key, value)?,
            "top" => self.top = parse(key, value)?,
            "kinds" => {
                self.kinds = value
                    .split(';')
                    .map(str::trim)
                    .filter(|k| !k.is_empty())
                    .map(|k| k.parse::<Corruption>().map_err(|e| anyhow!("bad corruption `{k}`: {e}")))
                    .collect::<Result<_>>()?
            }
            "apply_prob" => self.apply_prob = parse(key, value)?,
            "draws" => self.draws = parse(key, value)?,
            "synonyms" => self.synonyms = opt_path(value),
            _ => bail!("unknown config key `{key}`"),
        }
        Ok(())
    }

    /// Reads `key=value` lines; `#` starts a comment line.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), n + 1))?;
            self.set(key, value)
                .with_context(|| format!("{}:{}", path.display(), n + 1))?;
        }
        Ok(())
    }

    /// Defaults, then the config file if any, then each override in order.
    pub fn resolve(file: Option<&Path>, overrides: &[(&str, String)]) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(f) = file {
            cfg.apply_file(f)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn binarization(&self) -> BinarizationConfig {
        BinarizationConfig {
            window: self.window,
            sigma: self.sigma.unwrap_or(self.window as f64 / 6.0),
            offset: self.offset,
        }
    }

    pub fn corruption_spec(&self) -> CorruptionSpec {
        CorruptionSpec {
            kinds: self.kinds.clone(),
            apply_probability: self.apply_prob,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.binarization().validate()?;
        if self.patch == Some(0) {
            bail!("patch must be >= 1");
        }
        if self.step == 0 {
            bail!("step must be >= 1");
        }
        if self.channels == 0 {
            bail!("channels must be >= 1");
        }
        if self.vocab == 0 {
            bail!("vocab must be >= 1");
        }
        if self.draws == 0 {
            bail!("draws must be >= 1");
        }
        if !(0.0..=1.0).contains(&self.apply_prob) {
            bail!("apply_prob {} outside [0, 1]", self.apply_prob);
        }
        for kind in &self.kinds {
            if let Corruption::ImpulseNoise { rate } = kind {
                if !(0.0..=1.0).contains(rate) {
                    bail!("impulse rate {rate} outside [0, 1]");
                }
            }
        }
        Ok(())
    }

    /// Every setting as `key=value` lines, readable back with `--config`.
    pub fn echo(&self) -> String {
        let p = &self.params;
        let kinds: Vec<String> = self.kinds.iter().map(ToString::to_string).collect();
        let pairs: Vec<(&str, String)> = vec![
            ("data", show_path(&self.data)),
            ("labels", show_path(&self.labels)),
            ("test", show_path(&self.test)),
            ("test_labels", show_path(&self.test_labels)),
            ("format", self.format.to_string()),
            ("model", show_path(&self.model)),
            ("out", show_path(&self.out)),
            ("clauses", p.clauses.to_string()),
            ("T", p.threshold.to_string()),
            ("s", p.specificity.to_string()),
            ("states", p.states.to_string()),
            ("boost_tp", p.boost_true_positive.to_string()),
            ("weighted", p.weighted.to_string()),
            ("drop_clause", p.drop_clause.to_string()),
            ("epochs", p.epochs.to_string()),
            ("seed", p.seed.to_string()),
            ("one_vs_rest", self.one_vs_rest.to_string()),
            ("patch", show(&self.patch)),
            ("step", self.step.to_string()),
            ("coords", self.coords.to_string()),
            ("rows", show(&self.rows)),
            ("cols", show(&self.cols)),
            ("channels", self.channels.to_string()),
            ("window", self.window.to_string()),
            ("sigma", self.binarization().sigma.to_string()),
            ("offset", self.offset.to_string()),
            ("vocab", self.vocab.to_string()),
            ("min_freq", self.min_freq.to_string()),
            ("stem", self.stem.to_string()),
            ("class", self.class.clone().unwrap_or_default()),
            ("k", self.k.to_string()),
            ("index", self.index.to_string()),
            ("top", self.top.to_string()),
            ("kinds", kinds.join(";")),
            ("apply_prob", self.apply_prob.to_string()),
            ("draws", self.draws.to_string()),
            ("synonyms", show_path(&self.synonyms)),
        ];
        let mut s = String::new();
        for (k, v) in pairs {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}
