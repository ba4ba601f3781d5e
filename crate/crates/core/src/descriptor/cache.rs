//! Binary descriptor cache.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic     8 bytes  "ENVCDSC1"
//! k         u32
//! cutoff    f64
//! width     u64
//! n_env     u64
//! n_struct  u64
//! offsets   n_struct × (start u64, len u64)
//! values    n_env × width × f64, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DescriptorParams, DescriptorSet};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"ENVCDSC1";

pub fn write_cache(set: &DescriptorSet, path: &Path) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    out.write_all(MAGIC)?;
    out.write_all(&(set.params.k as u32).to_le_bytes())?;
    out.write_all(&set.params.cutoff.to_le_bytes())?;
    out.write_all(&(set.width as u64).to_le_bytes())?;
    out.write_all(&(set.n_environments() as u64).to_le_bytes())?;
    out.write_all(&(set.n_structures() as u64).to_le_bytes())?;
    for &(start, len) in &set.offsets {
        out.write_all(&(start as u64).to_le_bytes())?;
        out.write_all(&(len as u64).to_le_bytes())?;
    }
    for v in &set.values {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_cache(path: &Path) -> Result<DescriptorSet> {
    let bad = |message: &str| Error::Cache {
        path: path.to_path_buf(),
        message: message.to_string(),
    };
    let mut input = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("wrong magic bytes"));
    }
    let k = read_u32(&mut input)? as usize;
    let cutoff = read_f64(&mut input)?;
    let width = read_u64(&mut input)? as usize;
    let n_env = read_u64(&mut input)? as usize;
    let n_structures = read_u64(&mut input)? as usize;
    let params = DescriptorParams::new(k, cutoff).map_err(|_| bad("invalid parameters"))?;
    if width != params.width() {
        return Err(bad("width does not match k"));
    }

    let mut sizes = Vec::with_capacity(n_structures);
    let mut expected_start = 0;
    for _ in 0..n_structures {
        let start = read_u64(&mut input)? as usize;
        let len = read_u64(&mut input)? as usize;
        if start != expected_start {
            return Err(bad("non-contiguous offsets"));
        }
        expected_start += len;
        sizes.push(len);
    }
    if expected_start != n_env {
        return Err(bad("offsets do not cover all environments"));
    }

    let mut bytes = Vec::with_capacity(n_env * width * 8);
    input.read_to_end(&mut bytes)?;
    if bytes.len() != n_env * width * 8 {
        return Err(bad("truncated or oversized value block"));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    DescriptorSet::from_parts(values, width, &sizes, params).map_err(|_| bad("invalid values"))
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}
