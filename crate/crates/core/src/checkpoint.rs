//! Binary checkpoint container for embedding tables.
//!
//! Layout, all integers little-endian:
//!
//! | bytes      | content                                  |
//! |------------|------------------------------------------|
//! | 8          | magic `GDCFCKPT`                         |
//! | 4          | format version (u32, currently 1)        |
//! | 8          | rows N (u64)                             |
//! | 8          | width d (u64)                            |
//! | 8          | seed (u64)                               |
//! | 8          | config length L in bytes (u64)           |
//! | L          | UTF-8 echo of the run configuration      |
//! | 8 * N * d  | row-major f64 embedding values           |

use std::fs;
use std::path::Path;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::train::EmbeddingTable;

const MAGIC: &[u8; 8] = b"GDCFCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub table: EmbeddingTable,
    pub seed: u64,
    pub config_echo: String,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let x = &self.table.x;
        let mut out = Vec::with_capacity(44 + self.config_echo.len() + 8 * x.as_slice().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(x.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(x.cols() as u64).to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        out.extend_from_slice(&(self.config_echo.len() as u64).to_le_bytes());
        out.extend_from_slice(self.config_echo.as_bytes());
        for v in x.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = Reader { bytes, pos: 0 };
        if cur.take(8)? != MAGIC {
            return Err(Error::Checkpoint("bad magic".into()));
        }
        let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let rows = cur.u64()? as usize;
        let cols = cur.u64()? as usize;
        let seed = cur.u64()?;
        let config_len = cur.u64()? as usize;
        let config_echo = String::from_utf8(cur.take(config_len)?.to_vec())
            .map_err(|_| Error::Checkpoint("config echo is not UTF-8".into()))?;
        let count = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::Checkpoint("table size overflows".into()))?;
        let raw = cur.take(count.checked_mul(8).ok_or_else(|| Error::Checkpoint("table size overflows".into()))?)?;
        if cur.pos != bytes.len() {
            return Err(Error::Checkpoint(format!(
                "{} trailing bytes",
                bytes.len() - cur.pos
            )));
        }
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Checkpoint("non-finite embedding value".into()));
        }
        Ok(Self {
            table: EmbeddingTable {
                x: DenseMatrix::from_vec(rows, cols, values)?,
            },
            seed,
            config_echo,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("truncated file".into()))?;
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}
