//! Binary CSR container.
//!
//! Layout, all integers little-endian:
//!
//! | field          | type          |
//! |----------------|---------------|
//! | magic          | `b"ICSR1"`    |
//! | n              | u64           |
//! | nnz            | u64           |
//! | row_offsets    | u64 x (n + 1) |
//! | column_indices | u64 x nnz     |
//! | values         | f64 x nnz     |

use std::io::{ErrorKind, Read, Write};

use crate::error::{Error, Result};
use crate::model::{CouplingMatrix, CsrMatrix};

pub const CSR_MAGIC: &[u8; 5] = b"ICSR1";

/// Writes `matrix` in CSR form. Non-CSR storage is converted first, keeping
/// only nonzero entries.
pub fn csr_save<W: Write>(matrix: &CouplingMatrix, sink: W) -> Result<()> {
    let csr = matrix.to_csr();
    write_csr(&csr, sink)
}

pub fn write_csr<W: Write>(csr: &CsrMatrix, mut sink: W) -> Result<()> {
    sink.write_all(CSR_MAGIC)?;
    sink.write_all(&(csr.n() as u64).to_le_bytes())?;
    sink.write_all(&(csr.nnz() as u64).to_le_bytes())?;
    for &o in csr.row_offsets() {
        sink.write_all(&(o as u64).to_le_bytes())?;
    }
    for &c in csr.col_indices() {
        sink.write_all(&(c as u64).to_le_bytes())?;
    }
    for &v in csr.values() {
        sink.write_all(&v.to_le_bytes())?;
    }
    sink.flush()?;
    Ok(())
}

fn read_word<R: Read>(src: &mut R, what: &str) -> Result<[u8; 8]> {
    let mut b = [0u8; 8];
    src.read_exact(&mut b).map_err(|e| truncated(e, what))?;
    Ok(b)
}

fn truncated(e: std::io::Error, what: &str) -> Error {
    if e.kind() == ErrorKind::UnexpectedEof {
        Error::BadContainer(format!("truncated while reading {what}"))
    } else {
        Error::Io(e)
    }
}

fn read_u64s<R: Read>(src: &mut R, count: u64, what: &str) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(count.min(1 << 20) as usize);
    for _ in 0..count {
        let v = u64::from_le_bytes(read_word(src, what)?);
        out.push(usize::try_from(v).map_err(|_| Error::BadContainer(format!("{what} value {v} overflows")))?);
    }
    Ok(out)
}

/// Reads and validates a container. Either a complete, valid matrix comes
/// back or an error does.
pub fn csr_load<R: Read>(mut source: R) -> Result<CouplingMatrix> {
    let mut magic = [0u8; 5];
    source.read_exact(&mut magic).map_err(|e| truncated(e, "magic"))?;
    if &magic != CSR_MAGIC {
        return Err(Error::BadContainer(format!("bad magic {magic:?}")));
    }
    let n = u64::from_le_bytes(read_word(&mut source, "n")?);
    let nnz = u64::from_le_bytes(read_word(&mut source, "nnz")?);
    if n == u64::MAX {
        return Err(Error::BadContainer("n overflows".into()));
    }
    let row_offsets = read_u64s(&mut source, n + 1, "row_offsets")?;
    let col_indices = read_u64s(&mut source, nnz, "column_indices")?;
    let mut values = Vec::with_capacity(nnz.min(1 << 20) as usize);
    for _ in 0..nnz {
        values.push(f64::from_le_bytes(read_word(&mut source, "values")?));
    }
    let mut extra = [0u8; 1];
    match source.read(&mut extra) {
        Ok(0) => {}
        Ok(_) => return Err(Error::BadContainer("trailing bytes after values".into())),
        Err(e) => return Err(Error::Io(e)),
    }
    let csr =
        CsrMatrix::new(n as usize, row_offsets, col_indices, values).map_err(|e| Error::BadContainer(e.to_string()))?;
    CouplingMatrix::from_csr(csr).map_err(|e| Error::BadContainer(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate;

    #[test]
    fn save_load_bit_identical() {
        let j = generate::gen_sparse_9bit(200, 5.0, 1).unwrap();
        let mut buf = Vec::new();
        csr_save(&j, &mut buf).unwrap();
        assert_eq!(&buf[..5], b"ICSR1");
        let back = csr_load(&buf[..]).unwrap();
        assert_eq!(back.to_csr(), j.to_csr());
        let mut again = Vec::new();
        csr_save(&back, &mut again).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn truncation_and_corruption_are_clean_errors() {
        let j = generate::gen_sparse_9bit(50, 20.0, 2).unwrap();
        let mut buf = Vec::new();
        csr_save(&j, &mut buf).unwrap();
        for cut in [0, 3, 5, 12, 21, buf.len() / 2, buf.len() - 1] {
            assert!(
                matches!(csr_load(&buf[..cut]), Err(Error::BadContainer(_))),
                "cut {cut}"
            );
        }
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(csr_load(&bad[..]), Err(Error::BadContainer(_))));
        let mut long = buf.clone();
        long.push(0);
        assert!(matches!(csr_load(&long[..]), Err(Error::BadContainer(_))));
        // break symmetry: change the first value
        let mut asym = buf.clone();
        let header = 5 + 16 + 8 * 51;
        let nnz = j.to_csr().nnz();
        let first_value = header + 8 * nnz;
        asym[first_value..first_value + 8].copy_from_slice(&1234.5f64.to_le_bytes());
        assert!(matches!(csr_load(&asym[..]), Err(Error::BadContainer(_))));
    }

    #[test]
    fn huge_header_does_not_allocate() {
        let mut buf = Vec::new();
        buf.extend_from_slice(CSR_MAGIC);
        buf.extend_from_slice(&(u64::MAX - 1).to_le_bytes());
        buf.extend_from_slice(&(u64::MAX).to_le_bytes());
        assert!(matches!(csr_load(&buf[..]), Err(Error::BadContainer(_))));
    }
}
