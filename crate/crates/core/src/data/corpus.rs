use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::Stance;

/// One labeled (tweet, target) row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: String,
    pub target: String,
    pub text: String,
    pub stance: Stance,
    /// Source-domain index; set only for training targets.
    pub domain: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub records: Vec<Record>,
}

impl Corpus {
    pub fn new(records: Vec<Record>) -> Self {
        Corpus { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Counts per label in (FAVOR, AGAINST, NONE) order.
    pub fn label_counts(&self) -> [usize; 3] {
        let mut counts = [0; 3];
        for r in &self.records {
            counts[r.stance.index()] += 1;
        }
        counts
    }

    pub fn target_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.target.clone()).or_insert(0) += 1;
        }
        counts
    }

    pub fn extend(&mut self, other: Corpus) {
        self.records.extend(other.records);
    }
}

/// Reads a SemEval-2016 Task 6 style file: a header line, then
/// `ID<TAB>Target<TAB>Tweet<TAB>Stance` rows.
pub fn parse_semeval_tsv(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    // Some public copies carry stray non-UTF-8 bytes; replace rather than fail.
    let text = String::from_utf8_lossy(&bytes);
    parse_semeval_str(&text, path)
}

pub fn parse_semeval_str(text: &str, origin: impl Into<PathBuf>) -> Result<Corpus> {
    let origin = origin.into();
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::Parse {
                path: origin,
                line: lineno,
                msg: format!("expected 4 tab-separated columns, found {}", cols.len()),
            });
        }
        let stance = cols[3].parse::<Stance>().map_err(|msg| Error::Parse {
            path: origin.clone(),
            line: lineno,
            msg,
        })?;
        records.push(Record {
            id: cols[0].trim().to_string(),
            target: cols[1].trim().to_string(),
            text: cols[2].to_string(),
            stance,
            domain: None,
        });
    }
    Ok(Corpus { records })
}
