//! Matrix and table serialization.
//!
//! `DVR1` is a little-endian binary container: the 4-byte magic `DVR1`,
//! `u32` matrix size N, a length-prefixed UTF-8 family tag, then the N^2
//! matrix entries as 64-bit floats in row-major order.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::quadrature::Quadrature;

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"DVR1";

pub fn write_dvr1(path: &Path, family_tag: &str, n: usize, entries: &[f64]) -> Result<()> {
    if entries.len() != n * n {
        return Err(Error::ShapeMismatch {
            expected: n * n,
            got: entries.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(n as u32).to_le_bytes())?;
    let tag = family_tag.as_bytes();
    w.write_all(&(tag.len() as u32).to_le_bytes())?;
    w.write_all(tag)?;
    for v in entries {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dvr1(path: &Path) -> Result<(String, usize, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid(format!(
            "{} is not a DVR1 file (magic {:?})",
            path.display(),
            magic
        )));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let n = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let tag_len = u32::from_le_bytes(word) as usize;
    let mut tag = vec![0u8; tag_len];
    r.read_exact(&mut tag)?;
    let tag = String::from_utf8(tag)
        .map_err(|_| Error::invalid("family tag is not valid UTF-8".to_string()))?;
    let mut entries = vec![0.0f64; n * n];
    let mut buf = [0u8; 8];
    for e in &mut entries {
        r.read_exact(&mut buf)?;
        *e = f64::from_le_bytes(buf);
    }
    Ok((tag, n, entries))
}

/// 17-significant-digit decimal, enough to round-trip any f64.
pub fn format_g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Matrix as CSV with shortest round-trip decimals.
pub fn write_matrix_csv(path: &Path, n: usize, entries: &[f64]) -> Result<()> {
    if entries.len() != n * n {
        return Err(Error::ShapeMismatch {
            expected: n * n,
            got: entries.len(),
        });
    }
    let mut w = BufWriter::new(File::create(path)?);
    for row in entries.chunks(n) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix_csv(path: &Path) -> Result<Mat> {
    let r = BufReader::new(File::open(path)?);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| Error::invalid(format!("bad CSV number: {e}")))?);
    }
    if rows.is_empty() {
        return Err(Error::invalid(format!("{} is empty", path.display())));
    }
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(Error::invalid("ragged CSV matrix".to_string()));
    }
    Ok(Mat::from_rows(&rows))
}

/// Nodes and weights at 17 significant digits.
pub fn write_quadrature_csv(path: &Path, quad: &Quadrature) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "k,node,weight")?;
    for (k, (x, wt)) in quad.nodes.iter().zip(&quad.weights).enumerate() {
        writeln!(w, "{k},{},{}", format_g17(*x), format_g17(*wt))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dvr1_round_trip() {
        let dir = std::env::temp_dir().join(format!("dvr1_rt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.dvr1");
        let entries = [0.5, -0.25, 1.0 / 3.0, 0.125];
        write_dvr1(&path, "jacobi:0.5,0.5", 2, &entries).unwrap();
        let (tag, n, got) = read_dvr1(&path).unwrap();
        assert_eq!(tag, "jacobi:0.5,0.5");
        assert_eq!(n, 2);
        assert_eq!(got, entries);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn g17_round_trips_f64() {
        for x in [1.0 / 3.0, std::f64::consts::PI, 1e-300, -0.1] {
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn matrix_csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("dvrcsv_rt_{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("m.csv");
        let entries = [0.1, 0.2, -0.3, 1.0 / 7.0];
        write_matrix_csv(&path, 2, &entries).unwrap();
        let m = read_matrix_csv(&path).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(m[(i, j)], entries[i * 2 + j]);
            }
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
