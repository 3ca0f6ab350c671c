//! Binary parameter checkpoints.
//!
//! One record per network:
//!
//! ```text
//! b"ACLP" | version: u32 | layer count: u32
//! per layer: in_dim: u32 | out_dim: u32 | weights: f64 × in·out | bias: f64 × out
//! ```
//!
//! Integers and floats are little-endian. A checkpoint file is one or more
//! records back to back, one per network of an assembly.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::Tensor;

use super::{LayerParams, ParamSet};

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"ACLP";
pub const CHECKPOINT_VERSION: u32 = 1;

pub fn write_params<W: Write>(out: &mut W, params: &ParamSet) -> io::Result<()> {
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&(params.layers.len() as u32).to_le_bytes())?;
    for layer in &params.layers {
        let shape = layer.weight.shape();
        out.write_all(&(shape[0] as u32).to_le_bytes())?;
        out.write_all(&(shape[1] as u32).to_le_bytes())?;
        for v in layer.weight.data().iter().chain(layer.bias.data()) {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

#[derive(Debug)]
pub enum ReadError {
    Io(io::Error),
    Format(String),
}

impl From<io::Error> for ReadError {
    fn from(e: io::Error) -> Self {
        ReadError::Io(e)
    }
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut bytes = vec![0u8; n * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

/// Reads one record. Returns `Ok(None)` on a clean end of input.
pub fn read_params<R: Read>(input: &mut R) -> std::result::Result<Option<ParamSet>, ReadError> {
    let mut magic = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        let n = input.read(&mut magic[filled..])?;
        if n == 0 {
            break;
        }
        filled += n;
    }
    if filled == 0 {
        return Ok(None);
    }
    if filled < 4 || magic != CHECKPOINT_MAGIC {
        return Err(ReadError::Format(format!("bad checkpoint magic {magic:?}")));
    }
    let version = read_u32(input)?;
    if version != CHECKPOINT_VERSION {
        return Err(ReadError::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let count = read_u32(input)? as usize;
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let in_dim = read_u32(input)? as usize;
        let out_dim = read_u32(input)? as usize;
        let weight = read_f64s(input, in_dim * out_dim)?;
        let bias = read_f64s(input, out_dim)?;
        layers.push(LayerParams {
            weight: Tensor::matrix(in_dim, out_dim, weight).expect("sized read"),
            bias: Tensor::vector(bias),
        });
    }
    Ok(Some(ParamSet { layers }))
}

/// Writes all networks to `path` via a temporary file and rename, so readers
/// never observe a partial checkpoint.
pub fn write_checkpoint(path: &Path, networks: &[&ParamSet]) -> Result<()> {
    let tmp = path.with_extension("aclp.tmp");
    let write = || -> io::Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut file = io::BufWriter::new(fs::File::create(&tmp)?);
        for params in networks {
            write_params(&mut file, params)?;
        }
        file.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<Vec<ParamSet>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = io::BufReader::new(file);
    let mut out = Vec::new();
    loop {
        match read_params(&mut reader) {
            Ok(Some(p)) => out.push(p),
            Ok(None) => break,
            Err(ReadError::Io(e)) if e.kind() == io::ErrorKind::UnexpectedEof => {
                return Err(Error::Truncated {
                    path: path.to_path_buf(),
                    message: "checkpoint record ends early".into(),
                })
            }
            Err(ReadError::Io(e)) => return Err(Error::io(path, e)),
            Err(ReadError::Format(message)) => {
                return Err(Error::Format {
                    path: path.to_path_buf(),
                    message,
                })
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Format {
            path: path.to_path_buf(),
            message: "empty checkpoint".into(),
        });
    }
    Ok(out)
}
