//! Per-(g, x) residue cache: a binary stream of little-endian u32 pairs
//! (order mod L, p mod L) for L = lcm(1..24), behind a fixed header. Every
//! supported sieve bound is below L, so the stored residues equal the full
//! order and prime values and any (d, mode) census view can be rebuilt.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use ordidx_core::arith::DecomposedBase;
use ordidx_core::empirical::ResidueStream;

pub const MAGIC: &[u8; 4] = b"OIDX";
pub const VERSION: u16 = 1;

/// Advisory lock on a cache directory; the file is removed on drop.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(dir: &Path) -> Result<CacheLock> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(CacheLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                bail!("cache directory {} is locked by another process", dir.display())
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn sanitized_g(base: &DecomposedBase) -> String {
    let num = base.numerator;
    let den = base.denominator;
    let sign = if num < 0 { "m" } else { "" };
    if den == 1 {
        format!("{sign}{}", num.unsigned_abs())
    } else {
        format!("{sign}{}_{den}", num.unsigned_abs())
    }
}

pub fn cache_path(dir: &Path, base: &DecomposedBase, x: u64) -> PathBuf {
    dir.join(format!("{}_{x}.oidx", sanitized_g(base)))
}

pub fn write_stream(dir: &Path, base: &DecomposedBase, stream: &ResidueStream) -> Result<PathBuf> {
    let _lock = CacheLock::acquire(dir)?;
    let path = cache_path(dir, base, stream.x);
    let mut buf: Vec<u8> = Vec::with_capacity(24 + stream.pairs.len() * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&base.numerator.to_le_bytes());
    buf.extend_from_slice(&base.denominator.to_le_bytes());
    buf.extend_from_slice(&stream.x.to_le_bytes());
    for &(ord, p) in &stream.pairs {
        buf.extend_from_slice(&ord.to_le_bytes());
        buf.extend_from_slice(&p.to_le_bytes());
    }
    fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn read_stream(dir: &Path, base: &DecomposedBase, x: u64) -> Result<Option<ResidueStream>> {
    let path = cache_path(dir, base, x);
    if !path.exists() {
        return Ok(None);
    }
    let mut file = fs::File::open(&path)?;
    // header layout: magic(4) version(2) num(8) den(8) x(8)
    let mut header = [0u8; 30];
    file.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        bail!("{}: bad magic", path.display());
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    if version != VERSION {
        bail!("{}: unsupported cache version {version}", path.display());
    }
    let num = i64::from_le_bytes(header[6..14].try_into().unwrap());
    let den = u64::from_le_bytes(header[14..22].try_into().unwrap());
    if num != base.numerator || den != base.denominator {
        bail!("{}: cache is for a different base", path.display());
    }
    let stored_x = u64::from_le_bytes(header[22..30].try_into().unwrap());
    if stored_x != x {
        bail!("{}: cache is for x = {stored_x}", path.display());
    }
    let mut body = Vec::new();
    file.read_to_end(&mut body)?;
    let body = &body[..];
    if body.len() % 8 != 0 {
        bail!("{}: truncated pair stream", path.display());
    }
    let pairs: Vec<(u32, u32)> = body
        .chunks_exact(8)
        .map(|c| {
            (
                u32::from_le_bytes(c[0..4].try_into().unwrap()),
                u32::from_le_bytes(c[4..8].try_into().unwrap()),
            )
        })
        .collect();
    Ok(Some(ResidueStream { x, pairs }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ordidx_core::arith::{decompose, Rational};

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let base = decompose(Rational::new(9, 4)).unwrap();
        let stream = ResidueStream {
            x: 100,
            pairs: vec![(3, 7), (10, 11), (12, 13)],
        };
        let path = write_stream(dir.path(), &base, &stream).unwrap();
        assert!(path.exists());
        let back = read_stream(dir.path(), &base, 100).unwrap().unwrap();
        assert_eq!(back, stream);
        assert!(read_stream(dir.path(), &base, 200).unwrap().is_none());
        // wrong base is rejected
        let other = decompose(Rational::from_integer(2)).unwrap();
        assert!(read_stream(dir.path(), &other, 100).unwrap().is_none());
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let l1 = CacheLock::acquire(dir.path()).unwrap();
        assert!(CacheLock::acquire(dir.path()).is_err());
        drop(l1);
        assert!(CacheLock::acquire(dir.path()).is_ok());
    }
}
