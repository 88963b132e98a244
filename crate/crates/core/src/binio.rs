//! Little-endian primitives shared by the binary checkpoint formats.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub fn write_u32<W: Write>(w: &mut W, v: u32, path: &str) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_f64<W: Write>(w: &mut W, v: f64, path: &str) -> Result<()> {
    w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(path, e))
}

pub fn write_bytes<W: Write>(w: &mut W, v: &[u8], path: &str) -> Result<()> {
    w.write_all(v).map_err(|e| Error::io(path, e))
}

pub fn write_str<W: Write>(w: &mut W, s: &str, path: &str) -> Result<()> {
    write_u32(w, s.len() as u32, path)?;
    write_bytes(w, s.as_bytes(), path)
}

pub fn read_u32<R: Read>(r: &mut R, path: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(u32::from_le_bytes(buf))
}

pub fn read_f64<R: Read>(r: &mut R, path: &str) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], path: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| Error::io(path, e))
}

pub fn read_str<R: Read>(r: &mut R, path: &str) -> Result<String> {
    let len = read_u32(r, path)? as usize;
    if len > 1 << 20 {
        return Err(Error::format(path, None, "unreasonable string length"));
    }
    let mut buf = vec![0u8; len];
    read_exact(r, &mut buf, path)?;
    String::from_utf8(buf).map_err(|_| Error::format(path, None, "invalid utf-8 string"))
}

pub fn expect_magic<R: Read>(r: &mut R, magic: &[u8; 4], path: &str) -> Result<()> {
    let mut buf = [0u8; 4];
    read_exact(r, &mut buf, path)?;
    if &buf != magic {
        return Err(Error::format(
            path,
            None,
            format!(
                "bad magic: expected {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&buf)
            ),
        ));
    }
    Ok(())
}
