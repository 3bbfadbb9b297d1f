use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::corpus::Corpus;
use super::tokenize::{tokenize, UNK};
use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token ↔ id map. Ids 0 and 1 are reserved for padding and unknown tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds from `tokens` in the given order after the reserved entries.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocabulary {
            tokens: Vec::new(),
            ids: HashMap::new(),
        };
        for t in [PAD.to_string(), UNK.to_string()]
            .into_iter()
            .chain(tokens.into_iter().map(Into::into))
        {
            if !vocab.ids.contains_key(&t) {
                vocab.ids.insert(t.clone(), vocab.tokens.len());
                vocab.tokens.push(t);
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn id_or_unk(&self, token: &str) -> usize {
        self.id(token).unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// `token<TAB>id` per line, sorted by id.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (id, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{id}");
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (tok, id) = line.rsplit_once('\t').ok_or_else(|| Error::Parse {
                path: "<vocabulary>".into(),
                line: i + 1,
                msg: "expected token<TAB>id".into(),
            })?;
            if id.parse::<usize>().ok() != Some(i) {
                return Err(Error::Parse {
                    path: "<vocabulary>".into(),
                    line: i + 1,
                    msg: format!("expected id {i}, found '{id}'"),
                });
            }
            tokens.push(tok.to_string());
        }
        if tokens.get(PAD_ID).map(String::as_str) != Some(PAD)
            || tokens.get(UNK_ID).map(String::as_str) != Some(UNK)
        {
            return Err(Error::Data(
                "vocabulary must start with <pad> and <unk>".into(),
            ));
        }
        Ok(Vocabulary::from_tokens(tokens.into_iter().skip(2)))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.serialize()).map_err(|e| Error::io(path, e))
    }

    /// Hex SHA-256 of the serialized form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.serialize().as_bytes()))
    }
}

/// Vocabulary over the tweet and target tokens of training corpora only.
/// Ids are assigned by descending count, then ascending token.
pub fn build_vocab(corpora: &[&Corpus], min_count: usize) -> Vocabulary {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for corpus in corpora {
        for r in &corpus.records {
            for t in tokenize(&r.text).into_iter().chain(tokenize(&r.target)) {
                *counts.entry(t).or_insert(0) += 1;
            }
        }
    }
    let mut entries: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(t, c)| *c >= min_count.max(1) && t != PAD && t != UNK)
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocabulary::from_tokens(entries.into_iter().map(|(t, _)| t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::corpus::Record;
    use crate::Stance;

    fn corpus(text: &str) -> Corpus {
        Corpus::new(vec![Record {
            id: "1".into(),
            target: String::new(),
            text: text.into(),
            stance: Stance::None,
            domain: None,
        }])
    }

    #[test]
    fn orders_by_count_then_token() {
        let c = corpus("a a b");
        let v = build_vocab(&[&c], 1);
        // The empty target contributes one <unk>, which is reserved.
        assert_eq!(v.tokens(), ["<pad>", "<unk>", "a", "b"]);
        assert_eq!(v.id("a"), Some(2));
        assert_eq!(v.id("b"), Some(3));
    }

    #[test]
    fn min_count_filters() {
        let c = corpus("a a b");
        let v = build_vocab(&[&c], 2);
        assert_eq!(v.id("b"), None);
        assert_eq!(v.id_or_unk("b"), UNK_ID);
    }

    #[test]
    fn deterministic_and_roundtrips() {
        let c = corpus("z y x y z z w");
        let v1 = build_vocab(&[&c], 1);
        let v2 = build_vocab(&[&c], 1);
        assert_eq!(v1.serialize(), v2.serialize());
        assert_eq!(v1.hash(), v2.hash());
        assert_eq!(Vocabulary::parse(&v1.serialize()).unwrap(), v1);
        assert_eq!(v1.serialize().lines().next(), Some("<pad>\t0"));
    }

    #[test]
    fn parse_rejects_gaps() {
        assert!(Vocabulary::parse("<pad>\t0\n<unk>\t2\n").is_err());
    }
}
