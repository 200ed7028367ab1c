//! Binary sidecar for weight matrices.
//!
//! Layout (little endian): magic `SSIRWM01`, 32-byte key digest, row count
//! and entry count as u64, then `row_ptr` (u64), `cols` (u32), `vals` (f64).

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::grid::{Grid, WeightMatrix};
use crate::error::{Error, Result};
use crate::spatial::{BaselineDensity, KernelSpec};

const MAGIC: &[u8; 8] = b"SSIRWM01";

/// Hex SHA-256 of everything the weight matrix depends on.
pub fn weight_key(grid: &Grid, kernel: &KernelSpec, density: &BaselineDensity, gamma: f64) -> String {
    let text = format!(
        "{:?}|{:?}|{:?}|{:?}|{:?}",
        grid.lattice, grid.radius, kernel, density, gamma
    );
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn digest_bytes(key: &str) -> Vec<u8> {
    (0..key.len() / 2)
        .map(|i| u8::from_str_radix(&key[2 * i..2 * i + 2], 16).unwrap_or(0))
        .collect()
}

pub fn save_weights(path: &Path, key: &str, w: &WeightMatrix) -> Result<()> {
    let mut buf = Vec::with_capacity(56 + w.row_ptr.len() * 8 + w.vals.len() * 12);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&digest_bytes(key));
    buf.extend_from_slice(&(w.rows() as u64).to_le_bytes());
    buf.extend_from_slice(&(w.vals.len() as u64).to_le_bytes());
    for &p in &w.row_ptr {
        buf.extend_from_slice(&(p as u64).to_le_bytes());
    }
    for &c in &w.cols {
        buf.extend_from_slice(&c.to_le_bytes());
    }
    for &v in &w.vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

/// `Ok(None)` when the file is missing or was written for another key.
pub fn load_weights(path: &Path, key: &str) -> Result<Option<WeightMatrix>> {
    let mut buf = Vec::new();
    match fs::File::open(path) {
        Ok(mut f) => f.read_to_end(&mut buf)?,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let corrupt = || Error::Io(format!("corrupt weight sidecar {}", path.display()));
    if buf.len() < 56 || &buf[..8] != MAGIC {
        return Err(corrupt());
    }
    if buf[8..40] != digest_bytes(key)[..] {
        return Ok(None);
    }
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap()) as usize;
    let rows = u64_at(40);
    let nnz = u64_at(48);
    let need = 56 + (rows + 1) * 8 + nnz * 12;
    if buf.len() != need {
        return Err(corrupt());
    }
    let mut o = 56;
    let row_ptr: Vec<usize> = (0..=rows).map(|k| u64_at(o + 8 * k)).collect();
    o += (rows + 1) * 8;
    let cols = (0..nnz)
        .map(|k| u32::from_le_bytes(buf[o + 4 * k..o + 4 * k + 4].try_into().unwrap()))
        .collect();
    o += nnz * 4;
    let vals = (0..nnz)
        .map(|k| f64::from_le_bytes(buf[o + 8 * k..o + 8 * k + 8].try_into().unwrap()))
        .collect();
    if row_ptr.last() != Some(&nnz) {
        return Err(corrupt());
    }
    Ok(Some(WeightMatrix {
        row_ptr,
        cols,
        vals,
    }))
}
