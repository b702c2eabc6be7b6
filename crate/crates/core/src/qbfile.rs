//! Binary instance serialization with a density-adaptive payload.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "QBF1" | mode u8 | n u32 | payload
//! ```
//!
//! Dense payload (mode 0): the `n(n+1)/2` upper-triangle entries, row-major,
//! as f64. Sparse payload (mode 1): the nonzero count as u64, then one
//! record per nonzero — row u32, column u32, value f64 — strictly sorted by
//! (row, column) with row <= column. The writer picks sparse exactly when
//! `16 * nnz < 8 * n(n+1)/2`; ties go to dense.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::instance::QuboInstance;

pub const MAGIC: [u8; 4] = *b"QBF1";

/// Largest size field a reader accepts. The in-memory representation takes
/// `8 n^2` bytes, so anything past this is a forged header, not an instance.
pub const MAX_LOAD_SIZE: usize = 1 << 15;

const MODE_DENSE: u8 = 0;
const MODE_SPARSE: u8 = 1;

/// Writes an instance to a byte stream.
pub fn save<W: Write>(q: &QuboInstance, mut writer: W) -> Result<()> {
    let n = q.n();
    let triangle = n * (n + 1) / 2;
    let nnz = q.nonzero_count();
    let sparse = 16 * nnz < 8 * triangle;

    writer.write_all(&MAGIC)?;
    writer.write_all(&[if sparse { MODE_SPARSE } else { MODE_DENSE }])?;
    writer.write_all(&(n as u32).to_le_bytes())?;
    if sparse {
        writer.write_all(&(nnz as u64).to_le_bytes())?;
        for i in 0..n {
            for j in i..n {
                let v = q.weight(i, j);
                if v != 0.0 {
                    writer.write_all(&(i as u32).to_le_bytes())?;
                    writer.write_all(&(j as u32).to_le_bytes())?;
                    writer.write_all(&v.to_le_bytes())?;
                }
            }
        }
    } else {
        for i in 0..n {
            for j in i..n {
                writer.write_all(&q.weight(i, j).to_le_bytes())?;
            }
        }
    }
    writer.flush()?;
    Ok(())
}

/// Reads an instance from a byte stream; the exact inverse of [`save`].
pub fn load<R: Read>(reader: R) -> Result<QuboInstance> {
    let mut r = Offset::new(reader);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {magic:?}, expected {MAGIC:?}"),
        });
    }
    let mut mode = [0u8; 1];
    r.read_exact(&mut mode, "mode byte")?;
    let mut n_bytes = [0u8; 4];
    r.read_exact(&mut n_bytes, "size field")?;
    let n = u32::from_le_bytes(n_bytes) as usize;
    if n > MAX_LOAD_SIZE {
        return Err(Error::Format {
            offset: 5,
            message: format!("size field {n} exceeds the limit {MAX_LOAD_SIZE}"),
        });
    }
    let triangle = n * (n + 1) / 2;

    let mut q = QuboInstance::zeros(n);
    match mode[0] {
        MODE_DENSE => {
            let mut buf = [0u8; 8];
            for i in 0..n {
                for j in i..n {
                    let at = r.offset;
                    r.read_exact(&mut buf, "dense payload")?;
                    let v = f64::from_le_bytes(buf);
                    if !v.is_finite() {
                        return Err(Error::Format {
                            offset: at,
                            message: format!("non-finite weight at ({i}, {j})"),
                        });
                    }
                    q.set_weight(i, j, v);
                }
            }
        }
        MODE_SPARSE => {
            let mut count_bytes = [0u8; 8];
            let count_at = r.offset;
            r.read_exact(&mut count_bytes, "nonzero count")?;
            let nnz = u64::from_le_bytes(count_bytes);
            if nnz as usize > triangle {
                return Err(Error::Format {
                    offset: count_at,
                    message: format!("{nnz} records cannot fit an upper triangle of {triangle}"),
                });
            }
            let mut prev: Option<(u32, u32)> = None;
            for _ in 0..nnz {
                let at = r.offset;
                let mut rec = [0u8; 16];
                r.read_exact(&mut rec, "sparse record")?;
                let row = u32::from_le_bytes(rec[0..4].try_into().unwrap());
                let col = u32::from_le_bytes(rec[4..8].try_into().unwrap());
                let v = f64::from_le_bytes(rec[8..16].try_into().unwrap());
                if row > col {
                    return Err(Error::Format {
                        offset: at,
                        message: format!("record ({row}, {col}) lies below the diagonal"),
                    });
                }
                if col as usize >= n {
                    return Err(Error::Format {
                        offset: at,
                        message: format!("record ({row}, {col}) out of range for n = {n}"),
                    });
                }
                if let Some(p) = prev {
                    if (row, col) <= p {
                        return Err(Error::Format {
                            offset: at,
                            message: format!(
                                "record ({row}, {col}) not strictly after ({}, {})",
                                p.0, p.1
                            ),
                        });
                    }
                }
                if !v.is_finite() {
                    return Err(Error::Format {
                        offset: at,
                        message: format!("non-finite weight at ({row}, {col})"),
                    });
                }
                prev = Some((row, col));
                q.set_weight(row as usize, col as usize, v);
            }
        }
        m => {
            return Err(Error::Format {
                offset: 4,
                message: format!("unknown mode byte {m}"),
            });
        }
    }
    Ok(q)
}

pub fn save_to_path<P: AsRef<Path>>(q: &QuboInstance, path: P) -> Result<()> {
    save(q, BufWriter::new(File::create(path)?))
}

pub fn load_from_path<P: AsRef<Path>>(path: P) -> Result<QuboInstance> {
    load(BufReader::new(File::open(path)?))
}

/// Read adapter that tracks the byte offset for error reporting.
struct Offset<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Offset<R> {
    fn new(inner: R) -> Self {
        Self { inner, offset: 0 }
    }

    fn read_exact(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        let at = self.offset;
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format {
                    offset: at,
                    message: format!("truncated {what}"),
                }
            } else {
                Error::Io(e)
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }
}
