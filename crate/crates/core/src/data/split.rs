//! Unseen-target split: four source targets for training, Hillary Clinton
//! for validation, Donald Trump for testing.

use super::corpus::Corpus;
use crate::error::{Error, Result};

pub const TRAIN_TARGETS: [&str; 4] = [
    "Atheism",
    "Climate Change is a Real Concern",
    "Feminist Movement",
    "Legalization of Abortion",
];
pub const DEV_TARGET: &str = "Hillary Clinton";
pub const TEST_TARGET: &str = "Donald Trump";

/// Expected (FAVOR, AGAINST, NONE) counts of the official data.
pub const TRAIN_COUNTS: [usize; 3] = [619, 982, 574];
pub const DEV_TOTAL: usize = 1278;
pub const TEST_TOTAL: usize = 707;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Corpus,
    pub dev: Corpus,
    pub test: Corpus,
    /// Training targets in domain-index order.
    pub domain_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Role {
    Train(usize),
    Dev,
    Test,
}

fn role(target: &str) -> Option<Role> {
    let t = target.trim().to_lowercase();
    let t = t.as_str();
    match t {
        "atheism" => Some(Role::Train(0)),
        "climate change is a real concern" => Some(Role::Train(1)),
        "feminist movement" => Some(Role::Train(2)),
        "legalization of abortion" | "legality of abortion" => Some(Role::Train(3)),
        "hillary clinton" | "hillary" => Some(Role::Dev),
        "donald trump" | "trump" => Some(Role::Test),
        _ => None,
    }
}

pub fn make_split(full: &Corpus) -> Result<Split> {
    let found = full.target_counts();
    let mut seen = [false; 6];
    let mut unknown = Vec::new();
    for name in found.keys() {
        match role(name) {
            Some(Role::Train(i)) => seen[i] = true,
            Some(Role::Dev) => seen[4] = true,
            Some(Role::Test) => seen[5] = true,
            None => unknown.push(name.clone()),
        }
    }
    let listing = || found.keys().cloned().collect::<Vec<_>>().join(", ");
    if !unknown.is_empty() {
        return Err(Error::Data(format!(
            "unexpected targets {unknown:?}; found targets: {}",
            listing()
        )));
    }
    let expected: Vec<&str> = TRAIN_TARGETS
        .iter()
        .copied()
        .chain([DEV_TARGET, TEST_TARGET])
        .collect();
    let missing: Vec<&str> = expected
        .iter()
        .zip(seen)
        .filter(|(_, s)| !s)
        .map(|(n, _)| *n)
        .collect();
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "missing targets {missing:?}; found targets: {}",
            listing()
        )));
    }

    let mut split = Split {
        train: Corpus::default(),
        dev: Corpus::default(),
        test: Corpus::default(),
        domain_names: TRAIN_TARGETS.iter().map(|s| s.to_string()).collect(),
    };
    for r in &full.records {
        let mut r = r.clone();
        match role(&r.target).expect("checked above") {
            Role::Train(i) => {
                r.domain = Some(i);
                split.train.records.push(r);
            }
            Role::Dev => {
                r.domain = None;
                split.dev.records.push(r);
            }
            Role::Test => {
                r.domain = None;
                split.test.records.push(r);
            }
        }
    }
    Ok(split)
}

/// Checks the split against the published sample distribution.
pub fn verify_counts(split: &Split) -> Result<()> {
    let train = split.train.label_counts();
    let mut problems = Vec::new();
    if train != TRAIN_COUNTS {
        problems.push(format!(
            "train FAVOR/AGAINST/NONE {train:?}, expected {TRAIN_COUNTS:?}"
        ));
    }
    if split.dev.len() != DEV_TOTAL {
        problems.push(format!(
            "dev total {}, expected {DEV_TOTAL}",
            split.dev.len()
        ));
    }
    if split.test.len() != TEST_TOTAL {
        problems.push(format!(
            "test total {}, expected {TEST_TOTAL}",
            split.test.len()
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::Data(format!(
            "split counts differ from the reference distribution: {}",
            problems.join("; ")
        )))
    }
}
