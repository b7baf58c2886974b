//! Binary ensemble files.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic            8 bytes  "BAGSCORE"
//! version          u32      FORMAT_VERSION
//! input_dim        u32
//! n_hidden         u32
//! hidden widths    u32 × n_hidden
//! activations      u8  × n_hidden      0 = linear, 1 = tanh
//! output_dim       u32      always 1
//! feature means    f64 × input_dim
//! feature scales   f64 × input_dim
//! target mean      f64
//! target scale     f64
//! n_metadata       u32
//!   key            u32 length + UTF-8 bytes
//!   value          u32 length + UTF-8 bytes
//! n_members        u32
//!   seed           u64
//!   per layer      f64 weights (fan_in × fan_out, row-major by input),
//!                  then f64 biases (fan_out)
//! digest           32 bytes SHA-256 of everything above
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::model::EnsembleModel;
use super::network::{Activation, Layer, MlpSpec, NetworkParams};
use crate::data::{ScalerPair, Standardizer};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"BAGSCORE";
pub const FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: usize) {
        let v = u32::try_from(v).expect("count fits in u32");
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn f64s(&mut self, vs: &[f64]) {
        for v in vs {
            self.0.extend_from_slice(&v.to_le_bytes());
        }
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Format(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(
            n.checked_mul(8)
                .ok_or_else(|| Error::Format("length overflow".into()))?,
        )?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect())
    }

    fn str(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::Format("metadata is not UTF-8".into()))
    }
}

pub fn write_model(model: &EnsembleModel<f64>) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(FORMAT_VERSION as usize);
    let spec = &model.spec;
    w.u32(spec.input_dim);
    w.u32(spec.hidden_widths.len());
    for &h in &spec.hidden_widths {
        w.u32(h);
    }
    for a in &spec.activations {
        w.0.push(a.tag());
    }
    w.u32(spec.output_dim());
    w.f64s(&model.scalers.features.mean);
    w.f64s(&model.scalers.features.scale);
    w.f64s(&model.scalers.target.mean);
    w.f64s(&model.scalers.target.scale);
    w.u32(model.metadata.len());
    for (k, v) in &model.metadata {
        w.str(k);
        w.str(v);
    }
    w.u32(model.members.len());
    for m in &model.members {
        w.u64(m.seed);
        for l in &m.layers {
            w.f64s(&l.weights);
            w.f64s(&l.biases);
        }
    }
    let digest = Sha256::digest(&w.0);
    w.0.extend_from_slice(&digest);
    w.0
}

pub fn read_model(bytes: &[u8]) -> Result<EnsembleModel<f64>> {
    if bytes.len() < MAGIC.len() + 4 + 32 || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Format("not an ensemble model file".into()));
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err(Error::Format("checksum mismatch; file is corrupted".into()));
    }

    let mut r = Reader { buf: body, pos: 12 };
    let input_dim = r.u32()?;
    let n_hidden = r.u32()?;
    let widths = (0..n_hidden).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let activations = (0..n_hidden)
        .map(|_| {
            let t = r.u8()?;
            Activation::from_tag(t)
                .ok_or_else(|| Error::Format(format!("unknown activation tag {t}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let output_dim = r.u32()?;
    if output_dim != MlpSpec::OUTPUT_DIM {
        return Err(Error::Format(format!(
            "unsupported output dimension {output_dim}"
        )));
    }
    let spec =
        MlpSpec::new(input_dim, widths, activations).map_err(|e| Error::Format(e.to_string()))?;

    let features = Standardizer::new(r.f64s(input_dim)?, r.f64s(input_dim)?)
        .map_err(|e| Error::Format(e.to_string()))?;
    let target =
        Standardizer::new(r.f64s(1)?, r.f64s(1)?).map_err(|e| Error::Format(e.to_string()))?;

    let n_meta = r.u32()?;
    let mut metadata = BTreeMap::new();
    for _ in 0..n_meta {
        let k = r.str()?;
        let v = r.str()?;
        metadata.insert(k, v);
    }

    let n_members = r.u32()?;
    let shapes = spec.layer_shapes();
    let mut members = Vec::with_capacity(n_members.min(1 << 16));
    for _ in 0..n_members {
        let seed = r.u64()?;
        let mut layers = Vec::with_capacity(shapes.len());
        for &(fan_in, fan_out) in &shapes {
            let weights = r.f64s(fan_in * fan_out)?;
            let biases = r.f64s(fan_out)?;
            layers.push(Layer {
                fan_in,
                fan_out,
                weights,
                biases,
            });
        }
        let params = NetworkParams { layers, seed };
        if !params.is_finite() {
            return Err(Error::Format(format!(
                "member with seed {seed} has non-finite weights"
            )));
        }
        members.push(params);
    }
    if r.pos != body.len() {
        return Err(Error::Format(format!(
            "{} trailing bytes",
            body.len() - r.pos
        )));
    }

    let mut model = EnsembleModel::new(spec, members, ScalerPair { features, target })
        .map_err(|e| Error::Format(e.to_string()))?;
    model.metadata = metadata;
    Ok(model)
}

pub fn save_model(model: &EnsembleModel<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_model(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<EnsembleModel<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_model(&bytes)
}
