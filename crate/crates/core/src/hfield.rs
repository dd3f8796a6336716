//! `.hfield` snapshot format.
//!
//! Little-endian binary: a five-entry 64-bit header `n, N_xy, N_tau`
//! (unsigned) then `L_xy, L_tau` (floats), followed by the row-major node
//! values as 64-bit floats. Round-trips are bit-exact.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{CoreError, Result};
use crate::grid::{GridSpec, ScalarField};
use crate::heisenberg::GroupParams;

pub fn write_hfield(field: &ScalarField, path: &Path) -> Result<()> {
    let g = &field.grid;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&(g.params.n as u64).to_le_bytes())?;
    w.write_all(&(g.n_xy as u64).to_le_bytes())?;
    w.write_all(&(g.n_tau as u64).to_le_bytes())?;
    w.write_all(&g.l_xy.to_le_bytes())?;
    w.write_all(&g.l_tau.to_le_bytes())?;
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_hfield(path: &Path) -> Result<ScalarField> {
    let mut r = BufReader::new(File::open(path)?);
    let mut buf = [0u8; 8];
    let mut next_u64 = |r: &mut BufReader<File>| -> Result<u64> {
        r.read_exact(&mut buf)?;
        Ok(u64::from_le_bytes(buf))
    };
    let n = next_u64(&mut r)? as usize;
    let n_xy = next_u64(&mut r)? as usize;
    let n_tau = next_u64(&mut r)? as usize;
    let mut fbuf = [0u8; 8];
    r.read_exact(&mut fbuf)?;
    let l_xy = f64::from_le_bytes(fbuf);
    r.read_exact(&mut fbuf)?;
    let l_tau = f64::from_le_bytes(fbuf);

    let grid = GridSpec::new(GroupParams::new(n)?, l_xy, l_tau, n_xy, n_tau)
        .map_err(|e| CoreError::Io(format!("bad .hfield header: {e}")))?;
    let mut values = vec![0.0f64; grid.len()];
    for v in values.iter_mut() {
        r.read_exact(&mut fbuf)?;
        *v = f64::from_le_bytes(fbuf);
    }
    // trailing bytes indicate a corrupt or mislabeled file
    let mut probe = [0u8; 1];
    if r.read(&mut probe)? != 0 {
        return Err(CoreError::Io("trailing bytes after field values".into()));
    }
    Ok(ScalarField { grid, values })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let grid = GridSpec::new(GroupParams::new(1).unwrap(), 2.0, 4.0, 9, 7).unwrap();
        let field = ScalarField::sample(grid, |xy, tau| {
            (xy[0] * 1.7 - xy[1] * 0.3 + tau).sin() * 1e-7 + xy[0]
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.hfield");
        write_hfield(&field, &path).unwrap();
        let back = read_hfield(&path).unwrap();
        assert_eq!(back.grid, field.grid);
        assert!(back
            .values
            .iter()
            .zip(&field.values)
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let grid = GridSpec::new(GroupParams::new(1).unwrap(), 2.0, 4.0, 9, 7).unwrap();
        let field = ScalarField::zeros(grid);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap.hfield");
        write_hfield(&field, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        assert!(read_hfield(&path).is_err());
    }
}
