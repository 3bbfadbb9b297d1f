use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng as _, SeedableRng};
use sha2::{Digest, Sha256};

use super::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::tensor::Scalar;
use crate::Rng;

/// Frozen `|V| × dim` word-vector table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<T> {
    dim: usize,
    rows: usize,
    values: Vec<T>,
    frozen: bool,
}

impl<T: Scalar> EmbeddingMatrix<T> {
    pub fn from_rows(dim: usize, values: Vec<T>) -> Self {
        assert!(
            dim > 0 && values.len().is_multiple_of(dim),
            "ragged embedding matrix"
        );
        EmbeddingMatrix {
            dim,
            rows: values.len() / dim,
            values,
            frozen: true,
        }
    }

    /// Every row pseudorandom except PAD; used when no vector file is given.
    pub fn pseudo_random(vocab: &Vocabulary, dim: usize) -> Self {
        let mut values = Vec::with_capacity(vocab.len() * dim);
        for (id, token) in vocab.tokens().iter().enumerate() {
            if id == PAD_ID {
                values.extend(std::iter::repeat_n(T::zero(), dim));
            } else {
                values.extend(fallback_vector::<T>(token, dim));
            }
        }
        Self::from_rows(dim, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn row(&self, id: usize) -> Option<&[T]> {
        (id < self.rows).then(|| &self.values[id * self.dim..(id + 1) * self.dim])
    }

    pub fn convert<U: Scalar>(&self) -> EmbeddingMatrix<U> {
        EmbeddingMatrix {
            dim: self.dim,
            rows: self.rows,
            values: self.values.iter().map(|x| U::of(x.as_f64())).collect(),
            frozen: self.frozen,
        }
    }
}

/// Deterministic vector in `[-0.05, 0.05]^dim` seeded by the token's
/// SHA-256, so absent words stay distinguishable and stable across runs.
pub fn fallback_vector<T: Scalar>(token: &str, dim: usize) -> Vec<T> {
    let digest = Sha256::digest(token.as_bytes());
    let mut seed = [0u8; 32];
    seed.copy_from_slice(&digest);
    let mut rng = Rng::from_seed(seed);
    (0..dim)
        .map(|_| T::of(rng.gen_range(-0.05..=0.05)))
        .collect()
}

/// Loads `token v1 … v_dim` lines for the vocabulary's tokens.
pub fn load_embeddings<T: Scalar>(
    path: impl AsRef<Path>,
    vocab: &Vocabulary,
    dim: usize,
) -> Result<EmbeddingMatrix<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut found: Vec<Option<Vec<T>>> = vec![None; vocab.len()];
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values: Vec<&str> = fields.collect();
        if values.len() != dim {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: format!("expected {dim} values, found {}", values.len()),
            });
        }
        let Some(id) = vocab.id(token) else { continue };
        if id == PAD_ID || found[id].is_some() {
            continue;
        }
        let parsed = values
            .iter()
            .map(|v| {
                v.parse::<f64>().map(T::of).map_err(|_| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: format!("bad number '{v}'"),
                })
            })
            .collect::<Result<Vec<T>>>()?;
        found[id] = Some(parsed);
    }
    let mut values = Vec::with_capacity(vocab.len() * dim);
    for (id, row) in found.into_iter().enumerate() {
        match row {
            _ if id == PAD_ID => values.extend(std::iter::repeat_n(T::zero(), dim)),
            Some(v) => values.extend(v),
            None => values.extend(fallback_vector::<T>(
                vocab.token(id).expect("id in range"),
                dim,
            )),
        }
    }
    Ok(EmbeddingMatrix::from_rows(dim, values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(["a", "zzz"])
    }

    fn file(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_rows_and_zeros_pad() {
        let f = file("a 0.1 0.2\nother 1 1\n");
        let m: EmbeddingMatrix<f64> = load_embeddings(f.path(), &vocab(), 2).unwrap();
        assert_eq!(m.row(2).unwrap(), &[0.1, 0.2]);
        assert_eq!(m.row(PAD_ID).unwrap(), &[0.0, 0.0]);
        assert!(m.is_frozen());
        assert_eq!(m.rows(), 4);
    }

    #[test]
    fn missing_tokens_are_stable_and_small() {
        let f = file("a 0.1 0.2\n");
        let m1: EmbeddingMatrix<f64> = load_embeddings(f.path(), &vocab(), 2).unwrap();
        let m2: EmbeddingMatrix<f64> = load_embeddings(f.path(), &vocab(), 2).unwrap();
        let zzz = m1.row(3).unwrap();
        assert_eq!(zzz, m2.row(3).unwrap());
        assert!(zzz.iter().all(|x| x.abs() <= 0.05));
        assert_ne!(zzz, m1.row(1).unwrap());
        // Independent of which file was read.
        assert_eq!(zzz, fallback_vector::<f64>("zzz", 2).as_slice());
    }

    #[test]
    fn dimension_mismatch_names_line() {
        let f = file("a 0.1 0.2\nb 0.3\n");
        match load_embeddings::<f32>(f.path(), &vocab(), 2) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
