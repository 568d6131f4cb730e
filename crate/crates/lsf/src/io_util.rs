//! Shared helpers for the little-endian binary artifact formats.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub fn check_magic<R: Read>(reader: &mut R, expected: &[u8; 4], path: &Path) -> Result<()> {
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|e| Error::io(path, e))?;
    if &magic != expected {
        return Err(Error::format(
            path,
            format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(&magic),
                String::from_utf8_lossy(expected)
            ),
        ));
    }
    Ok(())
}

pub fn read_u16<R: Read>(r: &mut R, path: &Path) -> Result<u16> {
    r.read_u16::<LittleEndian>().map_err(|e| Error::io(path, e))
}

pub fn read_u32<R: Read>(r: &mut R, path: &Path) -> Result<u32> {
    r.read_u32::<LittleEndian>().map_err(|e| Error::io(path, e))
}

pub fn read_u64<R: Read>(r: &mut R, path: &Path) -> Result<u64> {
    r.read_u64::<LittleEndian>().map_err(|e| Error::io(path, e))
}

pub fn read_f64_vec<R: Read>(r: &mut R, len: usize, path: &Path) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; len];
    r.read_f64_into::<LittleEndian>(&mut out)
        .map_err(|e| Error::io(path, e))?;
    Ok(out)
}

pub fn write_f64_slice<W: Write>(w: &mut W, values: &[f64], path: &Path) -> Result<()> {
    for &v in values {
        w.write_f64::<LittleEndian>(v)
            .map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

pub fn read_string<R: Read>(r: &mut R, path: &Path) -> Result<String> {
    let len = read_u32(r, path)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    String::from_utf8(buf).map_err(|_| Error::format(path, "non-utf8 string in artifact"))
}

pub fn write_string<W: Write>(w: &mut W, s: &str, path: &Path) -> Result<()> {
    w.write_u32::<LittleEndian>(s.len() as u32)
        .map_err(|e| Error::io(path, e))?;
    w.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
}
