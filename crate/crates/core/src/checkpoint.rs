//! Binary checkpoint format.
//!
//! Layout: the 8-byte magic `KFCKPT01`, a little-endian `u32` header length,
//! a JSON header, then the raw little-endian `f64` payload. The header maps
//! each tensor name to `{dtype, shape, offset, length}` (byte offsets into
//! the payload) and carries a `__metadata__` entry with the vocabulary hash,
//! dimensions, label-index map and the vocabulary itself.

use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::corpus::{Label, Vocabulary};
use crate::crf::CrfParams;
use crate::encoder::{EncoderDims, EncoderParams};
use crate::error::{Error, Result};
use crate::model::Model;
use crate::params::{ModelParams, TENSOR_NAMES};

pub const MAGIC: &[u8; 8] = b"KFCKPT01";
const METADATA: &str = "__metadata__";

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let dims = model.dims();
    let mut header = Map::new();
    let mut payload: Vec<u8> = Vec::with_capacity(model.params.num_parameters() * 8);
    for t in model.params.tensors() {
        let offset = payload.len();
        for x in t.data {
            payload.extend_from_slice(&x.to_le_bytes());
        }
        header.insert(
            t.name.to_owned(),
            json!({
                "dtype": "f64",
                "shape": t.shape,
                "offset": offset,
                "length": payload.len() - offset,
            }),
        );
    }
    let labels: Map<String, Value> = Label::ALL
        .iter()
        .map(|l| (l.as_str().to_owned(), json!(l.index())))
        .collect();
    header.insert(
        METADATA.to_owned(),
        json!({
            "vocab_hash": model.vocab.hash(),
            "vocab_min_count": model.vocab.min_count(),
            "vocab": model.vocab.tokens(),
            "dims": {
                "vocab_size": dims.vocab_size,
                "embed_dim": dims.embed_dim,
                "hidden_dim": dims.hidden_dim,
                "num_labels": Label::ALL.len(),
            },
            "labels": labels,
        }),
    );
    let header = serde_json::to_vec(&Value::Object(header)).expect("header serializes");
    let mut out = Vec::with_capacity(12 + header.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    out.extend_from_slice(&payload);
    out
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Checkpoint(msg.into())
}

fn get_usize(v: &Value, key: &str) -> Result<usize> {
    v.get(key)
        .and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| bad(format!("missing or invalid {key:?}")))
}

pub fn from_bytes(bytes: &[u8]) -> Result<Model> {
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    let header_end = 12 + header_len;
    if bytes.len() < header_end {
        return Err(bad("truncated header"));
    }
    let header: Value = serde_json::from_slice(&bytes[12..header_end])?;
    let payload = &bytes[header_end..];
    let meta = header
        .get(METADATA)
        .ok_or_else(|| bad("missing metadata"))?;

    let labels = meta.get("labels").ok_or_else(|| bad("missing label map"))?;
    for l in Label::ALL {
        if labels.get(l.as_str()).and_then(Value::as_u64) != Some(l.index() as u64) {
            return Err(bad("label-index map differs from O=0, B=1, I=2"));
        }
    }

    let tokens: Vec<String> = serde_json::from_value(
        meta.get("vocab")
            .cloned()
            .ok_or_else(|| bad("missing vocabulary"))?,
    )?;
    let min_count = get_usize(meta, "vocab_min_count")?;
    let vocab = Vocabulary::from_tokens(tokens, min_count)?;
    let hash = meta
        .get("vocab_hash")
        .and_then(Value::as_str)
        .unwrap_or_default();
    if hash != vocab.hash() {
        return Err(bad("vocabulary hash mismatch"));
    }

    let dims_v = meta.get("dims").ok_or_else(|| bad("missing dims"))?;
    let dims = EncoderDims {
        vocab_size: get_usize(dims_v, "vocab_size")?,
        embed_dim: get_usize(dims_v, "embed_dim")?,
        hidden_dim: get_usize(dims_v, "hidden_dim")?,
    };
    if dims.vocab_size != vocab.len() {
        return Err(bad("vocabulary size does not match dims"));
    }

    let mut params = ModelParams {
        encoder: EncoderParams::zeros(dims),
        crf: CrfParams::zeros(),
    };
    for (name, dst) in params.tensors_mut() {
        let entry = header
            .get(name)
            .ok_or_else(|| bad(format!("missing tensor {name}")))?;
        if entry.get("dtype").and_then(Value::as_str) != Some("f64") {
            return Err(bad(format!("{name}: unsupported dtype")));
        }
        let offset = get_usize(entry, "offset")?;
        let length = get_usize(entry, "length")?;
        if length != dst.len() * 8 {
            return Err(bad(format!(
                "{name}: expected {} bytes, header says {length}",
                dst.len() * 8
            )));
        }
        let src = payload
            .get(offset..offset + length)
            .ok_or_else(|| bad(format!("{name}: payload out of range")))?;
        for (d, chunk) in dst.iter_mut().zip(src.chunks_exact(8)) {
            *d = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    let extra = header
        .as_object()
        .map(|m| {
            m.keys()
                .filter(|k| *k != METADATA && !TENSOR_NAMES.contains(&k.as_str()))
                .count()
        })
        .unwrap_or(0);
    if extra > 0 {
        return Err(bad("unknown tensors in header"));
    }
    if let Some(name) = params.first_non_finite() {
        return Err(Error::NonFinite(format!("checkpoint tensor {name}")));
    }
    Ok(Model { params, vocab })
}

pub fn save(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_bytes(model)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Model> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    from_bytes(&bytes)
}
