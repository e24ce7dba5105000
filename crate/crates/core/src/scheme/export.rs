//! Trajectory and empirical-measure export.
//!
//! CSV columns are `stream,n,Gamma_n,x_1..x_d,weight`, floats in shortest
//! round-trip form. The binary dump is little-endian:
//!
//! ```text
//! b"LSTP" | version: u32 | d: u32 | count: u64 | count × (d + 4) f64
//! ```
//!
//! where each row is `stream, n, Γ_n, x_1..x_d, weight` as `f64`.

use std::io::{Read, Write};

use super::chain::ChainState;
use super::empirical::WeightedEmpiricalMeasure;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"LSTP";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub stream: u64,
    pub n: u64,
    pub gamma_n: f64,
    pub x: Vec<f64>,
    pub weight: f64,
}

impl Row {
    pub fn snapshot(stream: u64, state: &ChainState) -> Self {
        Row { stream, n: state.n, gamma_n: state.elapsed, x: state.x.clone(), weight: 1.0 }
    }
}

/// Atoms of `ν̄_n`: row `k` holds `X̄_{Γ_k}`, `Γ_k` and its weight `γ_{k+1}`.
pub fn measure_rows(stream: u64, measure: &WeightedEmpiricalMeasure) -> Vec<Row> {
    let d = measure.dim();
    let mut gamma_n = 0.0;
    measure
        .points()
        .chunks_exact(d)
        .zip(measure.weights())
        .enumerate()
        .map(|(k, (x, &w))| {
            let row = Row { stream, n: k as u64, gamma_n, x: x.to_vec(), weight: w };
            gamma_n += w;
            row
        })
        .collect()
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv<W: Write>(mut w: W, d: usize, rows: &[Row]) -> Result<()> {
    let mut header = String::from("stream,n,Gamma_n");
    for i in 1..=d {
        header.push_str(&format!(",x_{i}"));
    }
    header.push_str(",weight\n");
    w.write_all(header.as_bytes())?;
    let mut line = String::new();
    for r in rows {
        check_row(r, d)?;
        line.clear();
        line.push_str(&format!("{},{},{}", r.stream, r.n, fmt_f64(r.gamma_n)));
        for v in &r.x {
            line.push(',');
            line.push_str(&fmt_f64(*v));
        }
        line.push(',');
        line.push_str(&fmt_f64(r.weight));
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

fn check_row(r: &Row, d: usize) -> Result<()> {
    if r.x.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: r.x.len(), context: "export row" });
    }
    Ok(())
}

pub fn write_binary<W: Write>(mut w: W, d: usize, rows: &[Row]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    for r in rows {
        check_row(r, d)?;
        let mut buf = Vec::with_capacity(8 * (d + 4));
        for v in [r.stream as f64, r.n as f64, r.gamma_n].into_iter().chain(r.x.iter().copied()).chain([r.weight]) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

/// Reads a binary dump back; returns `(d, rows)`.
pub fn read_binary<R: Read>(mut r: R) -> Result<(usize, Vec<Row>)> {
    let mut head = [0u8; 20];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::invalid("not an LSTP dump (bad magic)"));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::invalid(format!("unsupported LSTP version {version}")));
    }
    let d = u32::from_le_bytes(head[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(head[12..20].try_into().unwrap());
    let mut rows = Vec::new();
    let mut buf = vec![0u8; 8 * (d + 4)];
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        let v: Vec<f64> = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        rows.push(Row { stream: v[0] as u64, n: v[1] as u64, gamma_n: v[2], x: v[3..3 + d].to_vec(), weight: v[3 + d] });
    }
    Ok((d, rows))
}
