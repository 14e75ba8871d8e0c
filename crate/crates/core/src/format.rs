//! Versioned binary records: magic, version, JSON metadata, then any number
//! of little-endian f64 arrays.

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub(crate) fn write_record<W: Write, M: Serialize>(
    mut w: W,
    magic: &[u8; 4],
    version: u32,
    meta: &M,
    payloads: &[&[f64]],
) -> Result<()> {
    let meta = serde_json::to_vec(meta)?;
    w.write_all(magic)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&(meta.len() as u64).to_le_bytes())?;
    w.write_all(&meta)?;
    w.write_all(&(payloads.len() as u32).to_le_bytes())?;
    for p in payloads {
        w.write_all(&(p.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(p.len() * 8);
        for v in p.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_record<R: Read, M: DeserializeOwned>(
    mut r: R,
    magic: &[u8; 4],
    supported: u32,
    what: &'static str,
) -> Result<(M, Vec<Vec<f64>>)> {
    let mut found = [0u8; 4];
    r.read_exact(&mut found)?;
    if &found != magic {
        return Err(Error::Format(format!(
            "not a {what} file (magic {:?}, expected {:?})",
            String::from_utf8_lossy(&found),
            String::from_utf8_lossy(magic)
        )));
    }
    let version = read_u32(&mut r)?;
    if version != supported {
        return Err(Error::Version { what, found: version, supported });
    }
    let meta_len = read_u64(&mut r)? as usize;
    if meta_len > 1 << 30 {
        return Err(Error::Format(format!("{what} metadata length {meta_len} is implausible")));
    }
    let mut meta = vec![0u8; meta_len];
    r.read_exact(&mut meta)?;
    let meta: M = serde_json::from_slice(&meta)?;
    let count = read_u32(&mut r)?;
    let mut payloads = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let n = read_u64(&mut r)? as usize;
        let mut bytes = vec![0u8; n.checked_mul(8).ok_or_else(|| Error::Format("payload too large".into()))?];
        r.read_exact(&mut bytes)?;
        payloads.push(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect());
    }
    Ok((meta, payloads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_magic_and_version() {
        let mut buf = Vec::new();
        write_record(&mut buf, b"ABCD", 3, &"meta", &[&[1.0, 2.0]]).unwrap();
        let (m, p): (String, _) = read_record(&buf[..], b"ABCD", 3, "test").unwrap();
        assert_eq!(m, "meta");
        assert_eq!(p, vec![vec![1.0, 2.0]]);
        assert!(matches!(read_record::<_, String>(&buf[..], b"ABCE", 3, "test"), Err(Error::Format(_))));
        assert!(matches!(
            read_record::<_, String>(&buf[..], b"ABCD", 4, "test"),
            Err(Error::Version { found: 3, supported: 4, .. })
        ));
    }
}
