//! DTXD dataset files.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "DTXD" | u16 version=1 | u32 N | u16 w | u16 h | u16 c
//! | u16 num_factors | u16 cardinality per factor
//! | per sample: u16 tuple entry per factor, then w*h*c f32 pixels
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DataError, FactorDataset};

pub const DTXD_MAGIC: &[u8; 4] = b"DTXD";
pub const DTXD_VERSION: u16 = 1;

/// Raw file contents before a [`super::FactorSpec`] is attached.
pub struct RawDataset {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub cardinalities: Vec<u16>,
    pub tuples: Vec<Vec<u16>>,
    pub pixels: Vec<Vec<f32>>,
}

pub fn write_dtxd(path: &Path, dataset: &FactorDataset) -> Result<(), DataError> {
    let spec = dataset.spec();
    for &dim in &[spec.width, spec.height, spec.channels] {
        if dim > u16::MAX as usize {
            return Err(DataError::Format(format!("dimension {} exceeds u16", dim)));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(DTXD_MAGIC)?;
    w.write_all(&DTXD_VERSION.to_le_bytes())?;
    w.write_all(&(dataset.len() as u32).to_le_bytes())?;
    for dim in [spec.width, spec.height, spec.channels] {
        w.write_all(&(dim as u16).to_le_bytes())?;
    }
    let cards = spec.cardinalities();
    w.write_all(&(cards.len() as u16).to_le_bytes())?;
    for card in &cards {
        w.write_all(&card.to_le_bytes())?;
    }
    for i in 0..dataset.len() {
        for &v in &dataset.tuples()[i] {
            w.write_all(&v.to_le_bytes())?;
        }
        for &px in dataset.pixels(i) {
            w.write_all(&px.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dtxd(path: &Path) -> Result<RawDataset, DataError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != DTXD_MAGIC {
        return Err(DataError::Format(format!("bad magic {:?}", magic)));
    }
    let version = read_u16(&mut r)?;
    if version != DTXD_VERSION {
        return Err(DataError::Format(format!("unsupported version {}", version)));
    }
    let n = read_u32(&mut r)? as usize;
    let width = read_u16(&mut r)? as usize;
    let height = read_u16(&mut r)? as usize;
    let channels = read_u16(&mut r)? as usize;
    let num_factors = read_u16(&mut r)? as usize;
    let mut cardinalities = Vec::with_capacity(num_factors);
    for _ in 0..num_factors {
        cardinalities.push(read_u16(&mut r)?);
    }
    let per_image = width * height * channels;
    let mut tuples = Vec::with_capacity(n);
    let mut pixels = Vec::with_capacity(n);
    for _ in 0..n {
        let mut tuple = Vec::with_capacity(num_factors);
        for _ in 0..num_factors {
            tuple.push(read_u16(&mut r)?);
        }
        let mut img = vec![0f32; per_image];
        let mut buf = [0u8; 4];
        for px in img.iter_mut() {
            r.read_exact(&mut buf)?;
            *px = f32::from_le_bytes(buf);
        }
        tuples.push(tuple);
        pixels.push(img);
    }
    Ok(RawDataset {
        width,
        height,
        channels,
        cardinalities,
        tuples,
        pixels,
    })
}

impl RawDataset {
    /// Validate the file against a spec and attach it.
    pub fn into_dataset(self, spec: super::FactorSpec) -> Result<FactorDataset, DataError> {
        if self.width != spec.width
            || self.height != spec.height
            || self.channels != spec.channels
            || self.cardinalities != spec.cardinalities()
        {
            return Err(DataError::Format(
                "dataset file does not match the configured factor spec".into(),
            ));
        }
        FactorDataset::from_parts(spec, self.tuples, self.pixels)
    }
}

fn read_u16(r: &mut impl Read) -> Result<u16, DataError> {
    let mut buf = [0u8; 2];
    r.read_exact(&mut buf)?;
    Ok(u16::from_le_bytes(buf))
}

fn read_u32(r: &mut impl Read) -> Result<u32, DataError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}
