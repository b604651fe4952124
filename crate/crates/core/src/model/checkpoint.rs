//! Versioned binary checkpoints.
//!
//! All integers are little-endian `u32`, all values little-endian `f64`.
//!
//! ```text
//! magic        4 bytes  "XVCK"
//! version      u32      1
//! pooling      u32      0 = stats, 1 = attentive
//! heads        u32
//! n_speakers   u32
//! frame_dims   4 x u32  widths of layers 1..4
//! hidden_dim   u32
//! embed_dim    u32
//! n_tensors    u32
//! then per tensor:
//!   name_len   u32
//!   name       name_len bytes of UTF-8
//!   rows       u32
//!   cols       u32
//!   values     rows * cols x f64, row-major
//! ```
//!
//! Tensors appear in [`ModelSpec::layout`] order; decoding rejects any
//! name or shape that disagrees with the header.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

use super::network::{ModelSpec, NetworkParams, PoolingMode, Tensor, Topology};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"XVCK";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

pub fn encode_checkpoint(p: &NetworkParams) -> Vec<u8> {
    let s = &p.spec;
    let mut out = Vec::with_capacity(64 + 8 * p.num_parameters());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, CHECKPOINT_VERSION as usize);
    put_u32(
        &mut out,
        match s.pooling {
            PoolingMode::Stats => 0,
            PoolingMode::Attentive => 1,
        },
    );
    put_u32(&mut out, s.heads);
    put_u32(&mut out, s.n_speakers);
    for d in s.topology.frame_dims {
        put_u32(&mut out, d);
    }
    put_u32(&mut out, s.topology.hidden_dim);
    put_u32(&mut out, s.topology.embed_dim);
    put_u32(&mut out, p.tensors.len());
    for t in &p.tensors {
        put_u32(&mut out, t.name.len());
        out.extend_from_slice(t.name.as_bytes());
        put_u32(&mut out, t.value.rows());
        put_u32(&mut out, t.value.cols());
        for v in t.value.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    source: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(self.source, "unexpected end of checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

pub fn decode_checkpoint(bytes: &[u8], source: &str) -> Result<NetworkParams> {
    let mut r = Reader {
        bytes,
        pos: 0,
        source,
    };
    if r.take(4)? != CHECKPOINT_MAGIC {
        return Err(Error::format(source, "missing XVCK magic"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION as usize {
        return Err(Error::format(source, format!("unsupported version {version}")));
    }
    let pooling = match r.u32()? {
        0 => PoolingMode::Stats,
        1 => PoolingMode::Attentive,
        other => return Err(Error::format(source, format!("unknown pooling code {other}"))),
    };
    let heads = r.u32()?;
    let n_speakers = r.u32()?;
    let mut frame_dims = [0; 4];
    for d in &mut frame_dims {
        *d = r.u32()?;
    }
    let hidden_dim = r.u32()?;
    let embed_dim = r.u32()?;
    let spec = ModelSpec {
        topology: Topology {
            frame_dims,
            hidden_dim,
            embed_dim,
        },
        pooling,
        heads,
        n_speakers,
    };
    spec.validate()
        .map_err(|e| Error::format(source, format!("invalid header: {e}")))?;
    let n = r.u32()?;
    let layout = spec.layout();
    if n != layout.len() {
        return Err(Error::format(
            source,
            format!("{n} tensors, header implies {}", layout.len()),
        ));
    }
    let mut tensors = Vec::with_capacity(n);
    for (want, rows_want, cols_want) in layout {
        let len = r.u32()?;
        let name = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format(source, "tensor name is not UTF-8"))?
            .to_string();
        let (rows, cols) = (r.u32()?, r.u32()?);
        if name != want || (rows, cols) != (rows_want, cols_want) {
            return Err(Error::format(
                source,
                format!("found {name} {rows}x{cols}, expected {want} {rows_want}x{cols_want}"),
            ));
        }
        let data = r
            .take(rows * cols * 8)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push(Tensor {
            name,
            value: Matrix::from_vec(rows, cols, data)?,
        });
    }
    if r.pos != bytes.len() {
        return Err(Error::format(source, "trailing bytes after last tensor"));
    }
    Ok(NetworkParams { spec, tensors })
}

pub fn save_checkpoint(path: &Path, p: &NetworkParams) -> Result<()> {
    fs::write(path, encode_checkpoint(p))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<NetworkParams> {
    if !path.exists() {
        return Err(Error::MissingArtifact {
            path: path.to_path_buf(),
            hint: "checkpoint not found; run `xvec train` first".into(),
        });
    }
    let bytes = fs::read(path)?;
    decode_checkpoint(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(pooling: PoolingMode) -> ModelSpec {
        ModelSpec {
            topology: Topology {
                frame_dims: [3, 3, 2, 2],
                hidden_dim: 4,
                embed_dim: 3,
            },
            pooling,
            heads: 2,
            n_speakers: 2,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for mode in [PoolingMode::Stats, PoolingMode::Attentive] {
            let p = NetworkParams::init(spec(mode), 12).unwrap();
            let bytes = encode_checkpoint(&p);
            assert_eq!(decode_checkpoint(&bytes, "t").unwrap(), p);
            assert_eq!(encode_checkpoint(&decode_checkpoint(&bytes, "t").unwrap()), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let p = NetworkParams::init(spec(PoolingMode::Attentive), 1).unwrap();
        let b = encode_checkpoint(&p);
        assert_eq!(&b[..4], b"XVCK");
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..16], &2u32.to_le_bytes());
        let name_len = u32::from_le_bytes(b[48..52].try_into().unwrap());
        assert_eq!(&b[52..52 + name_len as usize], b"tdnn1.weight");
    }

    #[test]
    fn damaged_checkpoints_rejected() {
        let p = NetworkParams::init(spec(PoolingMode::Stats), 1).unwrap();
        let b = encode_checkpoint(&p);
        assert!(decode_checkpoint(&b[..b.len() - 3], "t").is_err());
        let mut extra = b.clone();
        extra.push(0);
        assert!(decode_checkpoint(&extra, "t").is_err());
        let mut wrong = b;
        wrong[0] = b'Y';
        assert!(decode_checkpoint(&wrong, "t").is_err());
    }
}
