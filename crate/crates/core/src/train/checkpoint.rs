//! `GCKP` checkpoint files.
//!
//! Little-endian layout:
//!
//! ```text
//! "GCKP" | version u16 | config length u32 | config (TOML, UTF-8)
//! parameter count u64 | parameters f32 × count
//! optimizer step u64 | moment count u64 | first moments f32 × count | second moments f32 × count
//! epoch u64 | shuffle rng | stride rng
//! ```
//!
//! Each RNG state is a 32-byte seed, a `u64` stream id and a `u128` word
//! position.

use std::path::Path;

use super::{Model, ModelConfig, TrainingState};
use crate::numeric::{OptimizerKind, OptimizerState, ParameterCount};
use crate::rng::RngState;
use crate::{Error, Real, Result};

pub const GCKP_MAGIC: &[u8; 4] = b"GCKP";
pub const GCKP_VERSION: u16 = 1;

#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub model: Model<T>,
    pub state: TrainingState<T>,
}

fn put_f32s<T: Real>(buf: &mut Vec<u8>, values: &[T]) {
    for v in values {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
}

fn put_rng(buf: &mut Vec<u8>, s: &RngState) {
    buf.extend_from_slice(&s.seed);
    buf.extend_from_slice(&s.stream.to_le_bytes());
    buf.extend_from_slice(&s.word_pos.to_le_bytes());
}

pub fn encode_checkpoint<T: Real>(model: &Model<T>, state: &TrainingState<T>) -> Vec<u8> {
    let config = model.config().to_toml();
    let params = model.flatten_params();
    let mut buf = Vec::with_capacity(64 + config.len() + 4 * (params.len() + 2 * state.optimizer.m.len()));
    buf.extend_from_slice(GCKP_MAGIC);
    buf.extend_from_slice(&GCKP_VERSION.to_le_bytes());
    buf.extend_from_slice(&(config.len() as u32).to_le_bytes());
    buf.extend_from_slice(config.as_bytes());
    buf.extend_from_slice(&(params.len() as u64).to_le_bytes());
    put_f32s(&mut buf, &params);
    buf.extend_from_slice(&state.optimizer.step.to_le_bytes());
    buf.extend_from_slice(&(state.optimizer.m.len() as u64).to_le_bytes());
    put_f32s(&mut buf, &state.optimizer.m);
    put_f32s(&mut buf, &state.optimizer.v);
    buf.extend_from_slice(&(state.epoch as u64).to_le_bytes());
    put_rng(&mut buf, &RngState::capture(&state.shuffle_rng));
    put_rng(&mut buf, &RngState::capture(&state.stride_rng));
    buf
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.bytes.len()).ok_or_else(|| {
            Error::Checkpoint(format!("truncated while reading {what} at byte {}", self.at))
        })?;
        let out = &self.bytes[self.at..end];
        self.at = end;
        Ok(out)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.array(what)?))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.array(what)?))
    }

    fn f32s<T: Real>(&mut self, count: usize, what: &str) -> Result<Vec<T>> {
        let bytes = self.take(count.checked_mul(4).ok_or_else(|| Error::Checkpoint(format!("{what} count overflows")))?, what)?;
        Ok(bytes.chunks_exact(4).map(|b| T::of(f32::from_le_bytes(b.try_into().expect("4 bytes")) as f64)).collect())
    }

    fn rng(&mut self, what: &str) -> Result<RngState> {
        Ok(RngState { seed: self.array(what)?, stream: self.u64(what)?, word_pos: u128::from_le_bytes(self.array(what)?) })
    }
}

pub fn decode_checkpoint<T: Real>(bytes: &[u8]) -> Result<Checkpoint<T>> {
    let mut r = Reader { bytes, at: 0 };
    if r.take(4, "magic")? != GCKP_MAGIC {
        return Err(Error::Checkpoint("not a GCKP checkpoint".into()));
    }
    let version = r.u16("version")?;
    if version != GCKP_VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version} (expected {GCKP_VERSION})")));
    }
    let config_len = r.u32("config length")? as usize;
    let config_text = std::str::from_utf8(r.take(config_len, "config")?)
        .map_err(|e| Error::Checkpoint(format!("config is not UTF-8: {e}")))?;
    let config = ModelConfig::from_toml(config_text)?;
    let mut model = Model::<T>::build(&config)?;
    let count = r.u64("parameter count")? as usize;
    if count != model.parameter_count() {
        return Err(Error::Checkpoint(format!("checkpoint holds {count} parameters but its config needs {}", model.parameter_count())));
    }
    let params: Vec<T> = r.f32s(count, "parameters")?;
    model.load_params(&params)?;
    let step = r.u64("optimizer step")?;
    let moments = r.u64("moment count")? as usize;
    let expected_moments = match config.optimizer.kind {
        OptimizerKind::Adam => count,
        OptimizerKind::Sgd => 0,
    };
    if moments != expected_moments {
        return Err(Error::Checkpoint(format!("{moments} optimizer moments, expected {expected_moments}")));
    }
    let m = r.f32s(moments, "first moments")?;
    let v = r.f32s(moments, "second moments")?;
    let epoch = r.u64("epoch")? as usize;
    let shuffle = r.rng("shuffle rng")?;
    let stride = r.rng("stride rng")?;
    if r.at != bytes.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.at)));
    }
    let state = TrainingState {
        optimizer: OptimizerState { config: config.optimizer, step, m, v },
        epoch,
        shuffle_rng: shuffle.restore(),
        stride_rng: stride.restore(),
    };
    Ok(Checkpoint { model, state })
}

pub fn save_checkpoint<T: Real>(model: &Model<T>, state: &TrainingState<T>, path: &Path) -> Result<()> {
    std::fs::write(path, encode_checkpoint(model, state)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: Real>(path: &Path) -> Result<Checkpoint<T>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
