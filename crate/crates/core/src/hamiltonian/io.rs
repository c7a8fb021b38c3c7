//! Binary dump of a [`Disorder`].
//!
//! Layout, all integers little-endian:
//! `b"SPDS"`, version `u32`, mixture text length `u32`, mixture text (UTF-8),
//! `N: u64`, `seed: u64`, then per degree in increasing order
//! `p: u32`, `count: u64`, `count` little-endian `f64` coefficients in
//! lexicographic sorted-tuple order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::tuples::{first_index_offsets, tuple_count};
use super::{DegreeTensor, Disorder};
use crate::error::{Error, Result};
use crate::mixture::Mixture;

const MAGIC: &[u8; 4] = b"SPDS";
const VERSION: u32 = 1;

pub fn dump_disorder(d: &Disorder, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut w = BufWriter::new(File::create(path).map_err(io)?);
    let text = d.mixture.to_string();
    let mut header = Vec::new();
    header.extend_from_slice(MAGIC);
    header.extend_from_slice(&VERSION.to_le_bytes());
    header.extend_from_slice(&(text.len() as u32).to_le_bytes());
    header.extend_from_slice(text.as_bytes());
    header.extend_from_slice(&(d.n as u64).to_le_bytes());
    header.extend_from_slice(&d.seed.to_le_bytes());
    w.write_all(&header).map_err(io)?;
    for t in &d.tensors {
        w.write_all(&(t.p as u32).to_le_bytes()).map_err(io)?;
        w.write_all(&(t.coeffs.len() as u64).to_le_bytes()).map_err(io)?;
        for c in &t.coeffs {
            w.write_all(&c.to_le_bytes()).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

fn read_array<const K: usize>(r: &mut impl Read, path: &Path) -> Result<[u8; K]> {
    let mut buf = [0u8; K];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(buf)
}

/// Restores a dump, refusing it unless its header matches the requested
/// `(mixture, n, seed)`.
pub fn restore_disorder(path: &Path, mixture: &Mixture, n: usize, seed: u64) -> Result<Disorder> {
    let mut r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    if &read_array::<4>(&mut r, path)? != MAGIC {
        return Err(Error::Format(format!("{} is not a disorder dump", path.display())));
    }
    let version = u32::from_le_bytes(read_array(&mut r, path)?);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported dump version {version}")));
    }
    let len = u32::from_le_bytes(read_array(&mut r, path)?) as usize;
    let mut text = vec![0u8; len];
    r.read_exact(&mut text).map_err(|e| Error::io(path, e))?;
    let text = String::from_utf8(text).map_err(|_| Error::Format("mixture text is not UTF-8".into()))?;
    let stored: Mixture = text.parse()?;
    let stored_n = u64::from_le_bytes(read_array(&mut r, path)?) as usize;
    let stored_seed = u64::from_le_bytes(read_array(&mut r, path)?);
    if &stored != mixture || stored_n != n || stored_seed != seed {
        return Err(Error::DisorderMismatch(format!(
            "dump holds (mixture={stored}, N={stored_n}, seed={stored_seed}), requested (mixture={mixture}, N={n}, seed={seed})"
        )));
    }
    let mut tensors = Vec::new();
    for &(p, gamma) in mixture.terms() {
        let stored_p = u32::from_le_bytes(read_array(&mut r, path)?);
        let count = u64::from_le_bytes(read_array(&mut r, path)?) as usize;
        let p = p as usize;
        if stored_p as usize != p || count as u128 != tuple_count(n, p) {
            return Err(Error::Format(format!(
                "degree block ({stored_p}, {count}) does not match p={p}"
            )));
        }
        let mut coeffs = Vec::with_capacity(count);
        for _ in 0..count {
            coeffs.push(f64::from_le_bytes(read_array(&mut r, path)?));
        }
        tensors.push(DegreeTensor {
            p,
            scale: gamma * (n as f64).powf(-((p - 1) as f64) / 2.0),
            offsets: first_index_offsets(n, p),
            coeffs,
        });
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::io(path, e))? != 0 {
        return Err(Error::Format("trailing bytes after the last degree block".into()));
    }
    Ok(Disorder {
        mixture: mixture.clone(),
        n,
        seed,
        tensors,
    })
}
