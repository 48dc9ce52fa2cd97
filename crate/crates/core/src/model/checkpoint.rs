//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "LSOFCKPT"            8 bytes magic
//! version               u32
//! meta length           u32, followed by that many bytes of JSON metadata
//! tensor count          u32
//! per tensor:
//!   name length         u32, followed by the UTF-8 name
//!   group               u8
//!   rows, cols          u32, u32
//!   data                rows * cols f64, row-major
//! ```

use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig, ParamGroup};
use crate::dataset::Normalizer;
use crate::error::ModelError;
use lsoformer_synth::Metric;

const MAGIC: &[u8; 8] = b"LSOFCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub config: ModelConfig,
    pub normalizer: Option<Normalizer>,
    pub metric: Option<Metric>,
}

pub fn write_checkpoint(model: &Model, normalizer: Option<Normalizer>, metric: Option<Metric>) -> Vec<u8> {
    let meta = CheckpointMeta {
        config: model.config.clone(),
        normalizer,
        metric,
    };
    let json = serde_json::to_vec(&meta).expect("metadata serializes");
    let mut out = Vec::with_capacity(64 + json.len() + model.params.num_scalars() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for e in model.params.entries() {
        out.extend_from_slice(&(e.name.len() as u32).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.push(e.group.code());
        let (r, c) = e.value.dim();
        out.extend_from_slice(&(r as u32).to_le_bytes());
        out.extend_from_slice(&(c as u32).to_le_bytes());
        for &x in e.value.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| ModelError::Checkpoint("truncated file".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Parses a checkpoint and checks it against the layout its config implies.
pub fn read_checkpoint(bytes: &[u8]) -> Result<(Model, CheckpointMeta), ModelError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(ModelError::Checkpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!("unsupported version {version}")));
    }
    let len = r.u32()? as usize;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(len)?).map_err(|e| ModelError::Checkpoint(format!("metadata: {e}")))?;
    let mut model = Model::new(meta.config.clone(), 0)?;
    let count = r.u32()? as usize;
    if count != model.params.len() {
        return Err(ModelError::Checkpoint(format!(
            "{count} tensors stored, configuration implies {}",
            model.params.len()
        )));
    }
    for _ in 0..count {
        let n = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(n)?).map_err(|_| ModelError::Checkpoint("tensor name is not UTF-8".into()))?.to_string();
        let group = ParamGroup::from_code(r.take(1)?[0]).ok_or_else(|| ModelError::Checkpoint(format!("bad group for `{name}`")))?;
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        let id = model.params.id(&name)?;
        let entry = model.params.entry(id);
        if entry.value.dim() != (rows, cols) {
            return Err(ModelError::ShapeMismatch {
                name,
                expected: entry.value.dim(),
                got: (rows, cols),
            });
        }
        if entry.group != group {
            return Err(ModelError::Checkpoint(format!("group mismatch for `{name}`")));
        }
        let data = (0..rows * cols).map(|_| r.f64()).collect::<Result<Vec<_>, _>>()?;
        *model.params.value_mut(id) = Array2::from_shape_vec((rows, cols), data).expect("shape checked");
    }
    if r.pos != bytes.len() {
        return Err(ModelError::Checkpoint("trailing bytes".into()));
    }
    Ok((model, meta))
}

pub fn save_checkpoint(path: &Path, model: &Model, normalizer: Option<Normalizer>, metric: Option<Metric>) -> Result<(), ModelError> {
    fs::write(path, write_checkpoint(model, normalizer, metric))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(Model, CheckpointMeta), ModelError> {
    read_checkpoint(&fs::read(path)?)
}
