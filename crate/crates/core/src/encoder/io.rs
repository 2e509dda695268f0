//! Binary weight files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic      b"CIWT"
//! version    u32 (= 1)
//! config     layers, heads, d_model, d_ff, vocab_size, classes, max_len: u32
//!            weight_seed: u64
//! tensors    for each tensor: rows u32, cols u32, rows*cols f64 (row-major)
//! ```
//!
//! Tensor order: embedding; per layer wq, wk, wv, wo, w1, b1, w2, b2; per
//! layer process head (weight, bias); classifier (weight, bias). Vectors are
//! stored as `1 x len`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::model::{EncoderConfig, Head, LayerWeights, ModelWeights};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CIWT";
const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::io("<weights stream>", e)
}

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(io_err)
}

fn put_matrix<W: Write>(w: &mut W, m: &Array2<f64>) -> Result<()> {
    put_u32(w, m.nrows() as u32)?;
    put_u32(w, m.ncols() as u32)?;
    for v in m.iter() {
        w.write_all(&v.to_le_bytes()).map_err(io_err)?;
    }
    Ok(())
}

fn put_vector<W: Write>(w: &mut W, v: &Array1<f64>) -> Result<()> {
    put_matrix(w, &v.view().insert_axis(ndarray::Axis(0)).to_owned())
}

pub fn write_weights<W: Write>(out: &mut W, weights: &ModelWeights) -> Result<()> {
    let c = &weights.config;
    out.write_all(MAGIC).map_err(io_err)?;
    put_u32(out, VERSION)?;
    for v in [c.layers as u32, c.heads as u32, c.d_model as u32, c.d_ff as u32, c.vocab_size, c.classes as u32, c.max_len as u32] {
        put_u32(out, v)?;
    }
    out.write_all(&c.weight_seed.to_le_bytes()).map_err(io_err)?;
    put_matrix(out, &weights.embedding)?;
    for l in &weights.layers {
        put_matrix(out, &l.wq)?;
        put_matrix(out, &l.wk)?;
        put_matrix(out, &l.wv)?;
        put_matrix(out, &l.wo)?;
        put_matrix(out, &l.w1)?;
        put_vector(out, &l.b1)?;
        put_matrix(out, &l.w2)?;
        put_vector(out, &l.b2)?;
    }
    for h in weights.process_heads.iter().chain(std::iter::once(&weights.classifier)) {
        put_matrix(out, &h.weight)?;
        put_vector(out, &h.bias)?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(io_err)?;
        Ok(buf)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Array2<f64>> {
        let (r, c) = (self.u32()? as usize, self.u32()? as usize);
        if (r, c) != (rows, cols) {
            return Err(Error::InvalidInput(format!(
                "weight tensor is {r}x{c}, expected {rows}x{cols}"
            )));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            data.push(f64::from_le_bytes(self.bytes()?));
        }
        Ok(Array2::from_shape_vec((rows, cols), data).expect("shape checked"))
    }

    fn vector(&mut self, len: usize) -> Result<Array1<f64>> {
        Ok(self.matrix(1, len)?.row(0).to_owned())
    }
}

pub fn read_weights<R: Read>(input: R) -> Result<ModelWeights> {
    let mut r = Reader { inner: input };
    if &r.bytes::<4>()? != MAGIC {
        return Err(Error::InvalidInput("not a weight file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::InvalidInput(format!("unsupported weight file version {version}")));
    }
    let config = EncoderConfig {
        layers: r.u32()? as usize,
        heads: r.u32()? as usize,
        d_model: r.u32()? as usize,
        d_ff: r.u32()? as usize,
        vocab_size: r.u32()?,
        classes: r.u32()? as usize,
        max_len: r.u32()? as usize,
        weight_seed: u64::from_le_bytes(r.bytes()?),
    };
    config.validate()?;
    let (d, ff, k) = (config.d_model, config.d_ff, config.classes);
    let embedding = r.matrix(config.vocab_size as usize, d)?;
    let mut layers = Vec::with_capacity(config.layers);
    for _ in 0..config.layers {
        layers.push(LayerWeights {
            wq: r.matrix(d, d)?,
            wk: r.matrix(d, d)?,
            wv: r.matrix(d, d)?,
            wo: r.matrix(d, d)?,
            w1: r.matrix(d, ff)?,
            b1: r.vector(ff)?,
            w2: r.matrix(ff, d)?,
            b2: r.vector(d)?,
        });
    }
    let mut heads = Vec::with_capacity(config.layers + 1);
    for _ in 0..=config.layers {
        heads.push(Head { weight: r.matrix(d, k)?, bias: r.vector(k)? });
    }
    let classifier = heads.pop().expect("at least one head");
    Ok(ModelWeights { config, embedding, layers, process_heads: heads, classifier })
}

pub fn save_weights(path: impl AsRef<Path>, weights: &ModelWeights) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_weights(&mut out, weights)?;
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn load_weights(path: impl AsRef<Path>) -> Result<ModelWeights> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_weights(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut w = ModelWeights::init(EncoderConfig { layers: 2, vocab_size: 64, ..EncoderConfig::default() }).unwrap();
        w.classifier.bias[1] = -0.1234567890123;
        w.process_heads[0].weight[[3, 0]] = f64::MIN_POSITIVE;
        let mut buf = Vec::new();
        write_weights(&mut buf, &w).unwrap();
        let back = read_weights(buf.as_slice()).unwrap();
        assert_eq!(back, w);
        let mut again = Vec::new();
        write_weights(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncated_and_foreign_files_fail() {
        let w = ModelWeights::init(EncoderConfig { layers: 1, vocab_size: 16, ..EncoderConfig::default() }).unwrap();
        let mut buf = Vec::new();
        write_weights(&mut buf, &w).unwrap();
        assert!(read_weights(&buf[..buf.len() - 3]).is_err());
        assert!(read_weights(&b"NOPE\x01\0\0\0"[..]).is_err());
    }
}
