//! Ensemble export: CSV (one row per path) and a compact binary layout.
//!
//! Binary layout, all integers and floats little-endian:
//!
//! | offset | size | field                      |
//! |--------|------|----------------------------|
//! | 0      | 4    | magic `BFBM`               |
//! | 4      | 4    | format version (u32), = 1  |
//! | 8      | 8    | M, number of paths (u64)   |
//! | 16     | 8    | N, points per path (u64)   |
//! | 24     | 8    | seed (u64)                 |
//! | 32     | 4    | kernel id (u32)            |
//! | 36     | 4    | reserved, zero             |
//! | 40     | 8N   | time values (f64)          |
//! | ...    | 8MN  | path values, row-major     |

use std::io::{self, Read, Write};

use crate::grid::TimeGrid;
use crate::sampler::PathEnsemble;

pub const BINARY_MAGIC: [u8; 4] = *b"BFBM";
pub const BINARY_VERSION: u32 = 1;

/// Full-roundtrip float formatting (17 significant digits) used by every
/// CSV the crate writes, so the files double as regression baselines.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV with a header row of time values; one path per row.
pub fn write_ensemble_csv(e: &PathEnsemble, out: &mut impl Write) -> io::Result<()> {
    let header: Vec<String> = e.times().iter().map(|t| format!("t={t}")).collect();
    writeln!(out, "{}", header.join(","))?;
    for m in 0..e.m_paths() {
        let row: Vec<String> = e.row(m).iter().map(|&v| format_f64(v)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_ensemble_binary(e: &PathEnsemble, out: &mut impl Write) -> io::Result<()> {
    out.write_all(&BINARY_MAGIC)?;
    out.write_all(&BINARY_VERSION.to_le_bytes())?;
    out.write_all(&(e.m_paths() as u64).to_le_bytes())?;
    out.write_all(&(e.n_points() as u64).to_le_bytes())?;
    out.write_all(&e.seed().to_le_bytes())?;
    out.write_all(&e.kernel_id().to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    for t in e.times() {
        out.write_all(&t.to_le_bytes())?;
    }
    for v in e.values() {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Decoded binary ensemble (header fields plus raw values).
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryEnsemble {
    pub m_paths: u64,
    pub n_points: u64,
    pub seed: u64,
    pub kernel_id: u32,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn read_ensemble_binary(input: &mut impl Read) -> io::Result<BinaryEnsemble> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != BINARY_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad magic"));
    }
    let version = read_u32(input)?;
    if version != BINARY_VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported version {version}"),
        ));
    }
    let m_paths = read_u64(input)?;
    let n_points = read_u64(input)?;
    let seed = read_u64(input)?;
    let kernel_id = read_u32(input)?;
    let _reserved = read_u32(input)?;
    let times = read_f64s(input, n_points as usize)?;
    let values = read_f64s(input, (m_paths * n_points) as usize)?;
    Ok(BinaryEnsemble {
        m_paths,
        n_points,
        seed,
        kernel_id,
        times,
        values,
    })
}

fn read_u32(r: &mut impl Read) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64s(r: &mut impl Read, n: usize) -> io::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

/// Rebuilds a [`PathEnsemble`] from decoded binary data.
pub fn ensemble_from_binary(b: &BinaryEnsemble, kernel_name: &str) -> crate::Result<PathEnsemble> {
    let origin = b.times.first() == Some(&0.0);
    let pts: Vec<f64> = if origin { b.times[1..].to_vec() } else { b.times.clone() };
    let grid = TimeGrid::new(pts)?;
    let grid = if origin { grid.with_origin() } else { grid };
    Ok(PathEnsemble::from_rows(
        grid,
        b.m_paths as usize,
        b.values.clone(),
        b.seed,
        kernel_name,
        b.kernel_id,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::CovKernel;
    use crate::params::ModelParams;
    use crate::sampler::sample_process;

    fn small_ensemble() -> PathEnsemble {
        let p = ModelParams::new(0.6, 0.8).unwrap();
        let grid = TimeGrid::new(vec![0.5, 1.0, 2.0]).unwrap().with_origin();
        sample_process(&CovKernel::bifbm(p), &grid, 5, 99).unwrap()
    }

    #[test]
    fn csv_round_trips_at_full_precision() {
        let e = small_ensemble();
        let mut buf = Vec::new();
        write_ensemble_csv(&e, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t=0,t=0.5,t=1,t=2");
        let first: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|v| v.parse().unwrap())
            .collect();
        assert_eq!(first, e.row(0));
    }

    #[test]
    fn binary_round_trips_bit_for_bit() {
        let e = small_ensemble();
        let mut buf = Vec::new();
        write_ensemble_binary(&e, &mut buf).unwrap();
        let back = read_ensemble_binary(&mut buf.as_slice()).unwrap();
        assert_eq!(back.m_paths, 5);
        assert_eq!(back.n_points, 4);
        assert_eq!(back.seed, 99);
        assert_eq!(back.kernel_id, 0);
        assert_eq!(back.values, e.values());
        let rebuilt = ensemble_from_binary(&back, "bifbm").unwrap();
        assert_eq!(rebuilt.values(), e.values());
        assert_eq!(rebuilt.times(), e.times());
    }

    #[test]
    fn binary_rejects_bad_magic() {
        let mut buf = Vec::new();
        write_ensemble_binary(&small_ensemble(), &mut buf).unwrap();
        buf[0] = b'X';
        assert!(read_ensemble_binary(&mut buf.as_slice()).is_err());
    }
}
