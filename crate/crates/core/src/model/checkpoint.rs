//! Versioned binary checkpoint.
//!
//! ```text
//! magic "STGNCKPT" | u32 version | u64 header length | JSON header
//! | parameter values, little-endian, registry order | SHA-256 of all prior bytes
//! ```

use std::io::{Cursor, Read, Write};
use std::path::Path;
use std::sync::Arc;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::model::Model;
use super::spec::ModelSpec;
use crate::data::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::nn::{ParamGroup, ParamStore};
use crate::tensor::{Scalar, Shape, Tensor};

const MAGIC: &[u8; 8] = b"STGNCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Entry {
    name: String,
    shape: Vec<usize>,
    group: ParamGroup,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    dtype: String,
    spec: ModelSpec,
    vocab_hash: String,
    metadata: serde_json::Value,
    params: Vec<Entry>,
}

/// Contents of a checkpoint file.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<T> {
    pub spec: ModelSpec,
    pub vocab_hash: String,
    /// Free-form run information (epoch, seed, config echo).
    pub metadata: serde_json::Value,
    pub params: ParamStore<T>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn from_model(
        model: &Model<T>,
        vocab_hash: impl Into<String>,
        metadata: serde_json::Value,
    ) -> Self {
        Checkpoint {
            spec: *model.spec(),
            vocab_hash: vocab_hash.into(),
            metadata,
            params: model.params().clone(),
        }
    }

    /// Rebuilds the model around `embeddings` with the stored values.
    pub fn into_model(self, embeddings: Arc<EmbeddingMatrix<T>>) -> Result<Model<T>> {
        let mut model = Model::build(self.spec, 0, embeddings)?;
        model.params_mut().load_from(&self.params)?;
        Ok(model)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let header = Header {
            dtype: T::NAME.to_string(),
            spec: self.spec,
            vocab_hash: self.vocab_hash.clone(),
            metadata: self.metadata.clone(),
            params: self
                .params
                .iter()
                .map(|p| Entry {
                    name: p.name.clone(),
                    shape: p.value.shape().dims(),
                    group: p.group,
                })
                .collect(),
        };
        let json =
            serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
        let mut out = Vec::with_capacity(json.len() + 8 * self.params.scalar_count() + 64);
        out.extend_from_slice(MAGIC);
        out.write_u32::<LittleEndian>(FORMAT_VERSION)
            .expect("vec write");
        out.write_u64::<LittleEndian>(json.len() as u64)
            .expect("vec write");
        out.extend_from_slice(&json);
        for p in self.params.iter() {
            for &x in p.value.data() {
                write_value::<T>(&mut out, x);
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |msg: &str| Error::Checkpoint(msg.to_string());
        if bytes.len() < MAGIC.len() + 12 + DIGEST_LEN {
            return Err(bad("file too short"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if &body[..MAGIC.len()] != MAGIC {
            return Err(bad("not a checkpoint file (bad magic)"));
        }
        if Sha256::digest(body).as_slice() != digest {
            return Err(bad("checksum mismatch; the file is corrupted"));
        }
        let mut cur = Cursor::new(&body[MAGIC.len()..]);
        let version = cur
            .read_u32::<LittleEndian>()
            .map_err(|_| bad("truncated version"))?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        let header_len = cur
            .read_u64::<LittleEndian>()
            .map_err(|_| bad("truncated header length"))? as usize;
        let mut json = vec![0u8; header_len];
        cur.read_exact(&mut json)
            .map_err(|_| bad("truncated header"))?;
        let header: Header = serde_json::from_slice(&json)
            .map_err(|e| Error::Checkpoint(format!("malformed header: {e}")))?;
        let width = match header.dtype.as_str() {
            "f32" => 4,
            "f64" => 8,
            other => return Err(Error::Checkpoint(format!("unknown dtype '{other}'"))),
        };
        let mut params = ParamStore::new();
        for entry in &header.params {
            let shape = match entry.shape[..] {
                [n] => Shape::Vector(n),
                [r, c] => Shape::Matrix(r, c),
                _ => return Err(Error::Checkpoint(format!("bad shape for {}", entry.name))),
            };
            let mut data = Vec::with_capacity(shape.len());
            for _ in 0..shape.len() {
                let x = if width == 4 {
                    cur.read_f32::<LittleEndian>().map(f64::from)
                } else {
                    cur.read_f64::<LittleEndian>()
                }
                .map_err(|_| bad("truncated parameter values"))?;
                data.push(T::of(x));
            }
            if params.find(&entry.name).is_some() {
                return Err(Error::Checkpoint(format!(
                    "duplicate parameter {}",
                    entry.name
                )));
            }
            params.add(entry.name.clone(), Tensor::new(shape, data), entry.group);
        }
        if (cur.position() as usize) != body.len() - MAGIC.len() {
            return Err(bad("trailing bytes after parameter values"));
        }
        Ok(Checkpoint {
            spec: header.spec,
            vocab_hash: header.vocab_hash,
            metadata: header.metadata,
            params,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let bytes = self.to_bytes()?;
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(path, e))
    }

    /// I/O failures and format problems both surface as checkpoint errors.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

fn write_value<T: Scalar>(out: &mut Vec<u8>, x: T) {
    if T::NAME == "f32" {
        out.write_f32::<LittleEndian>(x.as_f64() as f32)
            .expect("vec write");
    } else {
        out.write_f64::<LittleEndian>(x.as_f64())
            .expect("vec write");
    }
}
