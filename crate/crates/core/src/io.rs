//! File formats: the VWM1 dense matrix container and CSV tables.
//!
//! VWM1 layout: the 4 bytes "VWM1", u32 version, u32 N, then N·N little-endian f64 in
//! row-major order. A JSON sidecar `<file>.json` carries the configuration echo.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub const VWM1_MAGIC: &[u8; 4] = b"VWM1";
pub const VWM1_VERSION: u32 = 1;

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes a square matrix and its JSON sidecar.
pub fn write_vwm1(path: &Path, m: &DenseMatrix, sidecar: &serde_json::Value) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Dimension(format!("VWM1 needs a square matrix, got {}x{}", m.rows(), m.cols())));
    }
    let n = u32::try_from(m.rows()).map_err(|_| Error::Format("matrix too large for VWM1".into()))?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(VWM1_MAGIC)?;
    w.write_all(&VWM1_VERSION.to_le_bytes())?;
    w.write_all(&n.to_le_bytes())?;
    for v in m.as_slice() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    std::fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

pub fn read_vwm1(path: &Path) -> Result<DenseMatrix> {
    let mut r = BufReader::new(File::open(path)?);
    let mut head = [0u8; 12];
    r.read_exact(&mut head).map_err(|_| Error::Format("truncated VWM1 header".into()))?;
    if &head[..4] != VWM1_MAGIC {
        return Err(Error::Format("missing VWM1 magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes"));
    if version != VWM1_VERSION {
        return Err(Error::Format(format!("unsupported VWM1 version {version}")));
    }
    let n = u32::from_le_bytes(head[8..12].try_into().expect("4 bytes")) as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != n * n * 8 {
        return Err(Error::Format(format!("VWM1 payload of {} bytes for N = {n}", bytes.len())));
    }
    let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect();
    DenseMatrix::from_row_major(n, n, data)
}

/// 17 significant digits in scientific form; round-trips exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV table with a leading `# ` comment line holding the compact JSON echo.
pub fn write_csv(path: &Path, echo: &serde_json::Value, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "# {}", serde_json::to_string(echo)?)?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        if row.len() != header.len() {
            return Err(Error::Dimension(format!("CSV row of {} fields for {} columns", row.len(), header.len())));
        }
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Parsed CSV: the echo line (if any), column names and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub echo: Option<serde_json::Value>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let r = BufReader::new(File::open(path)?);
    let mut echo = None;
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if let Some(rest) = line.strip_prefix("# ") {
            if i == 0 {
                echo = Some(serde_json::from_str(rest)?);
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        if header.is_empty() {
            header = line.split(',').map(|s| s.trim().to_string()).collect();
            continue;
        }
        let row = line
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("{}: line {}: bad number {s:?}", path.display(), i + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(CsvTable { echo, header, rows })
}
