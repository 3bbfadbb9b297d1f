//! Flat `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use stancegen::train::Hyperparams;
use stancegen::{Error, Result, Variant};

pub const DATA_DIR_ENV: &str = "STANCEGEN_DATA_DIR";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Labeled TSV files; records are split by target.
    pub data: Vec<PathBuf>,
    /// Pretrained vectors in GloVe text format. Without it every word gets
    /// its deterministic fallback vector.
    pub embeddings: Option<PathBuf>,
    pub variant: Variant,
    pub hp: Hyperparams,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub min_count: usize,
    /// Compare the split against the published sample distribution.
    pub count_check: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: Vec::new(),
            embeddings: None,
            variant: Variant::BcaInvar,
            hp: Hyperparams::default(),
            seeds: vec![1],
            out_dir: PathBuf::from("runs"),
            min_count: 1,
            count_check: true,
        }
    }
}

/// Parses `key = value` lines; `#` starts a comment. Later keys win.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!(
                "line {}: expected key = value, got '{line}'",
                i + 1
            ))
        })?;
        out.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(Error::Config(format!(
            "{key}: expected a boolean, got '{v}'"
        ))),
    }
}

pub fn parse_seeds(v: &str) -> Result<Vec<u64>> {
    let seeds = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num("seeds", s))
        .collect::<Result<Vec<u64>>>()?;
    if seeds.is_empty() {
        return Err(Error::Config("seeds: empty list".into()));
    }
    Ok(seeds)
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = PathBuf::from(p);
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Applies `pairs` on top of the defaults. Relative paths resolve
    /// against `base`.
    pub fn from_pairs(pairs: &BTreeMap<String, String>, base: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        for (k, v) in pairs {
            c.set(k, v, base)?;
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_pairs(&parse_pairs(&text)?, base)
    }

    pub fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        let hp = &mut self.hp;
        match key {
            "data" => {
                self.data = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| resolve(base, s))
                    .collect()
            }
            "embeddings" => self.embeddings = (!v.is_empty()).then(|| resolve(base, v)),
            "variant" => self.variant = v.parse()?,
            "seed" => self.seeds = vec![parse_num(key, v)?],
            "seeds" => self.seeds = parse_seeds(v)?,
            "out_dir" => self.out_dir = resolve(base, v),
            "min_count" => self.min_count = parse_num(key, v)?,
            "count_check" => self.count_check = parse_bool(key, v)?,
            "embed_dim" => hp.embed_dim = parse_num(key, v)?,
            "hidden_dim" => hp.hidden_dim = parse_num(key, v)?,
            "dropout" => hp.dropout = parse_num(key, v)?,
            "batch_size" => hp.batch_size = parse_num(key, v)?,
            "learning_rate" => hp.learning_rate = parse_num(key, v)?,
            "l2" => hp.l2 = parse_num(key, v)?,
            "patience" => hp.patience = parse_num(key, v)?,
            "lambda" => hp.lambda = parse_num(key, v)?,
            "max_epochs" => hp.max_epochs = parse_num(key, v)?,
            "clip_norm" => hp.clip_norm = parse_num(key, v)?,
            _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
        }
        Ok(())
    }

    /// Fills in `data` from the data-directory environment variable when the
    /// config names no files: every `*.txt` / `*.tsv` file there, by name.
    pub fn with_data_fallback(mut self, env_dir: Option<PathBuf>) -> Result<Self> {
        if !self.data.is_empty() {
            return Ok(self);
        }
        let Some(dir) = env_dir else {
            return Err(Error::Config(format!(
                "no data files configured; set `data = ...` or {DATA_DIR_ENV}"
            )));
        };
        let entries = std::fs::read_dir(&dir)
            .map_err(|e| Error::Config(format!("{DATA_DIR_ENV}={}: {e}", dir.display())))?;
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && matches!(
                        p.extension().and_then(|x| x.to_str()),
                        Some("txt") | Some("tsv")
                    )
            })
            .collect();
        files.sort();
        if files.is_empty() {
            return Err(Error::Config(format!(
                "{DATA_DIR_ENV}={} contains no .txt or .tsv files",
                dir.display()
            )));
        }
        self.data = files;
        Ok(self)
    }

    /// Checks values and that every referenced input exists.
    pub fn validate(&self) -> Result<()> {
        self.hp.validate()?;
        if self.min_count == 0 {
            return Err(Error::Config("min_count must be at least 1".into()));
        }
        for p in &self.data {
            if !p.is_file() {
                return Err(Error::Config(format!(
                    "data file {} does not exist",
                    p.display()
                )));
            }
        }
        if let Some(e) = &self.embeddings {
            if !e.is_file() {
                return Err(Error::Config(format!(
                    "embeddings file {} does not exist",
                    e.display()
                )));
            }
        }
        Ok(())
    }
}
