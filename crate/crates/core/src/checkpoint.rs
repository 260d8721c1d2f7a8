//! DTXM checkpoint files.
//!
//! Layout (integers little-endian):
//!
//! ```text
//! magic "DTXM" | u16 version=1 | u32 config_len | config JSON (UTF-8)
//! | u32 num_params
//! | per param: u16 name_len | name | u8 rank | u32 dim per axis | f32 values
//! ```
//!
//! Values are stored as f32 regardless of the in-memory scalar type; loading
//! into f64 widens them back. The config JSON is model-specific.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::gradcore::Tensor;
use crate::scalar::Scalar;

pub const DTXM_MAGIC: &[u8; 4] = b"DTXM";
pub const DTXM_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub struct RawParam {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f32>,
}

pub fn write_dtxm<S: Scalar>(
    path: &Path,
    config_json: &str,
    params: &[(String, &Tensor<S>)],
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DTXM_MAGIC)?;
    w.write_all(&DTXM_VERSION.to_le_bytes())?;
    let cfg = config_json.as_bytes();
    w.write_all(&(cfg.len() as u32).to_le_bytes())?;
    w.write_all(cfg)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params {
        let name_bytes = name.as_bytes();
        if name_bytes.len() > u16::MAX as usize {
            return Err(CheckpointError::Format(format!("name too long: {}", name)));
        }
        w.write_all(&(name_bytes.len() as u16).to_le_bytes())?;
        w.write_all(name_bytes)?;
        let shape = tensor.shape();
        w.write_all(&[shape.len() as u8])?;
        for &d in shape {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for v in tensor.data() {
            w.write_all(&(v.as_f64() as f32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dtxm(path: &Path) -> Result<(String, Vec<RawParam>), CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DTXM_MAGIC {
        return Err(CheckpointError::Format(format!("bad magic {:?}", magic)));
    }
    let version = read_u16(&mut r)?;
    if version != DTXM_VERSION {
        return Err(CheckpointError::Format(format!("unsupported version {}", version)));
    }
    let cfg_len = read_u32(&mut r)? as usize;
    let mut cfg = vec![0u8; cfg_len];
    r.read_exact(&mut cfg)?;
    let config_json = String::from_utf8(cfg)
        .map_err(|e| CheckpointError::Format(format!("config not UTF-8: {}", e)))?;
    let num_params = read_u32(&mut r)? as usize;
    let mut params = Vec::with_capacity(num_params);
    for _ in 0..num_params {
        let name_len = read_u16(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|e| CheckpointError::Format(format!("name not UTF-8: {}", e)))?;
        let mut rank = [0u8; 1];
        r.read_exact(&mut rank)?;
        let mut shape = Vec::with_capacity(rank[0] as usize);
        for _ in 0..rank[0] {
            shape.push(read_u32(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let mut values = vec![0f32; numel];
        let mut buf = [0u8; 4];
        for v in values.iter_mut() {
            r.read_exact(&mut buf)?;
            *v = f32::from_le_bytes(buf);
        }
        params.push(RawParam { name, shape, values });
    }
    Ok((config_json, params))
}

/// Copy loaded values into a model's named parameters, by name.
pub fn restore_params<S: Scalar>(
    raw: &[RawParam],
    targets: &mut [(String, &mut Tensor<S>)],
) -> Result<(), CheckpointError> {
    if raw.len() != targets.len() {
        return Err(CheckpointError::Format(format!(
            "checkpoint has {} params, model wants {}",
            raw.len(),
            targets.len()
        )));
    }
    for (param, (name, tensor)) in raw.iter().zip(targets.iter_mut()) {
        if param.name != *name {
            return Err(CheckpointError::Format(format!(
                "parameter order mismatch: file has {:?}, model wants {:?}",
                param.name, name
            )));
        }
        if param.shape != tensor.shape() {
            return Err(CheckpointError::Format(format!(
                "{}: shape {:?} in file, model wants {:?}",
                name,
                param.shape,
                tensor.shape()
            )));
        }
        for (dst, &src) in tensor.data_mut().iter_mut().zip(&param.values) {
            *dst = S::from_f64(src as f64);
        }
    }
    Ok(())
}

fn read_u16(r: &mut impl Read) -> Result<u16, CheckpointError> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read) -> Result<u32, CheckpointError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
