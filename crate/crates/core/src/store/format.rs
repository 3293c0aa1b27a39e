//! On-disk layout.
//!
//! Chunk file, all integers little-endian:
//!
//! ```text
//! "TSMX" | version: u32 = 1 | n_rows: u64 | n_cols: u64
//! row ids: n_rows × u64
//! payload: n_rows × n_cols × f64, row-major
//! ```
//!
//! A column file is a chunk with `n_cols = 1` plus a `.json` sidecar holding
//! `{"parameter_value": s}`. A snapshot manifest is a JSON document naming the
//! chunk files in row order, relative to the manifest's directory.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChunkedMatrix, ColumnFile, MatrixChunk, SnapshotMatrix};
use crate::dense::DenseMatrix;
use crate::error::{Result, RomError};

pub const MAGIC: &[u8; 4] = b"TSMX";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 8 + 8;

pub fn encode_chunk(chunk: &MatrixChunk) -> Vec<u8> {
    let n_rows = chunk.n_rows();
    let n_cols = chunk.n_cols();
    let mut buf = Vec::with_capacity(HEADER_LEN + 8 * n_rows * (1 + n_cols));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n_rows as u64).to_le_bytes());
    buf.extend_from_slice(&(n_cols as u64).to_le_bytes());
    for id in chunk.row_ids() {
        buf.extend_from_slice(&id.to_le_bytes());
    }
    for v in chunk.rows().as_slice() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf
}

fn read_u64(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().expect("8-byte slice"))
}

pub fn decode_chunk(bytes: &[u8]) -> Result<MatrixChunk> {
    if bytes.len() < HEADER_LEN {
        return Err(RomError::CorruptHeader(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if &bytes[..4] != MAGIC {
        return Err(RomError::CorruptHeader("bad magic bytes".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4-byte slice"));
    if version != FORMAT_VERSION {
        return Err(RomError::CorruptHeader(format!("unsupported version {version}")));
    }
    let n_rows = read_u64(bytes, 8);
    let n_cols = read_u64(bytes, 16);
    let expected = n_rows
        .checked_mul(n_cols)
        .and_then(|cells| cells.checked_add(n_rows))
        .and_then(|words| words.checked_mul(8))
        .and_then(|b| b.checked_add(HEADER_LEN as u64))
        .ok_or_else(|| RomError::CorruptHeader("dimensions overflow".into()))?;
    if bytes.len() as u64 != expected {
        return Err(RomError::CorruptHeader(format!(
            "expected {expected} bytes for {n_rows}x{n_cols}, found {}",
            bytes.len()
        )));
    }
    let (n_rows, n_cols) = (n_rows as usize, n_cols as usize);
    let row_ids: Vec<u64> = (0..n_rows).map(|i| read_u64(bytes, HEADER_LEN + 8 * i)).collect();
    let payload_at = HEADER_LEN + 8 * n_rows;
    let data: Vec<f64> = bytes[payload_at..]
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte slice")))
        .collect();
    MatrixChunk::new(row_ids, DenseMatrix::from_row_major(n_rows, n_cols, data))
        .map_err(|e| RomError::CorruptHeader(e.to_string()))
}

pub fn write_chunk(chunk: &MatrixChunk, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| RomError::io(path, e))?;
    file.write_all(&encode_chunk(chunk))
        .map_err(|e| RomError::io(path, e))
}

pub fn read_chunk(path: impl AsRef<Path>) -> Result<MatrixChunk> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| RomError::io(path, e))?;
    decode_chunk(&bytes)
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| RomError::json(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| RomError::io(path, e))
}

pub(crate) fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| RomError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| RomError::json(path, e))
}

#[derive(Debug, Serialize, Deserialize)]
struct ColumnSidecar {
    parameter_value: f64,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` (chunk format, one column) and its `.json` sidecar.
pub fn write_column_file(column: &ColumnFile, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let chunk = MatrixChunk::new(
        column.row_ids.clone(),
        DenseMatrix::from_row_major(column.len(), 1, column.values.clone()),
    )?;
    write_chunk(&chunk, path)?;
    write_json(
        &ColumnSidecar {
            parameter_value: column.parameter_value,
        },
        &sidecar_path(path),
    )
}

pub fn read_column_file(path: impl AsRef<Path>) -> Result<ColumnFile> {
    let path = path.as_ref();
    let chunk = read_chunk(path)?;
    if chunk.n_cols() != 1 {
        return Err(RomError::CorruptHeader(format!(
            "column file has {} columns",
            chunk.n_cols()
        )));
    }
    let sidecar: ColumnSidecar = read_json(&sidecar_path(path))?;
    let (row_ids, rows) = chunk.into_parts();
    ColumnFile::new(sidecar.parameter_value, row_ids, rows.into_vec())
}

/// JSON manifest describing a chunked matrix on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub m_rows: usize,
    pub n_cols: usize,
    pub parameter_grid: Vec<f64>,
    pub chunks: Vec<String>,
}

/// Writes every chunk of `matrix` as `<dir>/<prefix>_NNNNN.tsmx` and returns
/// the relative file names in row order.
pub(crate) fn write_chunks(matrix: &ChunkedMatrix, dir: &Path, prefix: &str) -> Result<Vec<String>> {
    fs::create_dir_all(dir).map_err(|e| RomError::io(dir, e))?;
    matrix
        .chunks()
        .iter()
        .enumerate()
        .map(|(i, chunk)| {
            let name = format!("{prefix}_{i:05}.tsmx");
            write_chunk(chunk, dir.join(&name))?;
            Ok(name)
        })
        .collect()
}

pub(crate) fn read_chunks(dir: &Path, names: &[String]) -> Result<ChunkedMatrix> {
    let chunks = names
        .iter()
        .map(|name| read_chunk(dir.join(name)))
        .collect::<Result<Vec<_>>>()?;
    ChunkedMatrix::from_chunks(chunks)
}

/// Persists a snapshot matrix as chunk files plus `manifest.json` in `dir`.
pub fn write_manifest(matrix: &SnapshotMatrix, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let chunks = write_chunks(matrix.matrix(), dir, "chunk")?;
    let manifest = Manifest {
        m_rows: matrix.m_rows(),
        n_cols: matrix.n_cols(),
        parameter_grid: matrix.parameter_grid().to_vec(),
        chunks,
    };
    let path = dir.join("manifest.json");
    write_json(&manifest, &path)?;
    Ok(path)
}

/// Loads a snapshot matrix from a manifest written by [`write_manifest`].
pub fn read_manifest(path: impl AsRef<Path>) -> Result<SnapshotMatrix> {
    let path = path.as_ref();
    let manifest: Manifest = read_json(path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let matrix = read_chunks(dir, &manifest.chunks)?;
    if matrix.m_rows() != manifest.m_rows || matrix.n_cols() != manifest.n_cols {
        return Err(RomError::DimensionMismatch(format!(
            "manifest declares {}x{}, chunks hold {}x{}",
            manifest.m_rows,
            manifest.n_cols,
            matrix.m_rows(),
            matrix.n_cols()
        )));
    }
    SnapshotMatrix::new(matrix, manifest.parameter_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_chunk_round_trip() {
        let chunk = MatrixChunk::new(vec![7], DenseMatrix::from_rows(&[vec![0.1]])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.tsmx");
        write_chunk(&chunk, &path).unwrap();
        assert_eq!(read_chunk(&path).unwrap(), chunk);
    }

    #[test]
    fn header_layout_is_exact() {
        let chunk = MatrixChunk::new(vec![3, 9], DenseMatrix::from_rows(&[vec![1.0], vec![-2.5]])).unwrap();
        let bytes = encode_chunk(&chunk);
        assert_eq!(&bytes[..4], b"TSMX");
        assert_eq!(&bytes[4..8], &[1, 0, 0, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(&bytes[16..24], &1u64.to_le_bytes());
        assert_eq!(&bytes[24..32], &3u64.to_le_bytes());
        assert_eq!(&bytes[32..40], &9u64.to_le_bytes());
        assert_eq!(&bytes[40..48], &1.0f64.to_le_bytes());
        assert_eq!(&bytes[48..56], &(-2.5f64).to_le_bytes());
        assert_eq!(bytes.len(), 56);
    }

    #[test]
    fn wrong_magic_is_corrupt() {
        let chunk = MatrixChunk::new(vec![0], DenseMatrix::from_rows(&[vec![1.0]])).unwrap();
        let mut bytes = encode_chunk(&chunk);
        bytes[0] = b'X';
        assert!(matches!(decode_chunk(&bytes), Err(RomError::CorruptHeader(_))));
    }

    #[test]
    fn truncated_payload_is_corrupt() {
        let chunk = MatrixChunk::new(vec![0, 1], DenseMatrix::zeros(2, 3)).unwrap();
        let bytes = encode_chunk(&chunk);
        assert!(matches!(
            decode_chunk(&bytes[..bytes.len() - 1]),
            Err(RomError::CorruptHeader(_))
        ));
        assert!(matches!(decode_chunk(&bytes[..10]), Err(RomError::CorruptHeader(_))));
    }

    #[test]
    fn missing_file_is_io_failure() {
        let err = read_chunk("/nonexistent/dir/c.tsmx").unwrap_err();
        assert_eq!(err.code(), "IoFailure");
    }

    #[test]
    fn column_file_round_trip() {
        let col = ColumnFile::new(0.25, vec![0, 1, 2], vec![0.0, 1.5, -3.0]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("col.tsmx");
        write_column_file(&col, &path).unwrap();
        assert!(dir.path().join("col.json").exists());
        assert_eq!(read_column_file(&path).unwrap(), col);
    }
}
