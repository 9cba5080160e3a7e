//! KPM1 checkpoint files.
//!
//! Layout (all integers little-endian u32, reals little-endian f64):
//! magic "KPM1", version = 1, architecture descriptor (byte length + UTF-8
//! text), tensor count, then per tensor: rank, dims, raw values. Tensor
//! order and the channel-major flattening convention are fixed by the model
//! that writes the file.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"KPM1";
pub const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, descriptor: &str, tensors: &[&Tensor]) -> Result<()> {
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    let desc = descriptor.as_bytes();
    buf.extend_from_slice(&(desc.len() as u32).to_le_bytes());
    buf.extend_from_slice(desc);
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
        for &d in t.shape() {
            buf.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for &x in t.data() {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    file.write_all(&buf)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(String, Vec<Tensor>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut cursor = Cursor::new(&bytes, path);
    let magic = cursor.take(4)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint(format!(
            "{}: bad magic {:?}, expected KPM1",
            path.display(),
            magic
        )));
    }
    let version = cursor.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!(
            "{}: unsupported version {version}",
            path.display()
        )));
    }
    let desc_len = cursor.u32()? as usize;
    let desc_bytes = cursor.take(desc_len)?;
    let descriptor = String::from_utf8(desc_bytes.to_vec())
        .map_err(|_| Error::Checkpoint(format!("{}: descriptor is not UTF-8", path.display())))?;
    let count = cursor.u32()? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let rank = cursor.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cursor.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(cursor.f64()?);
        }
        tensors.push(Tensor::from_vec(&shape, data)?);
    }
    if !cursor.at_end() {
        return Err(Error::Checkpoint(format!(
            "{}: trailing bytes after last tensor",
            path.display()
        )));
    }
    Ok((descriptor, tensors))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: String,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8], path: &Path) -> Self {
        Cursor {
            bytes,
            pos: 0,
            path: path.display().to_string(),
        }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Checkpoint(format!("{}: truncated file", self.path)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f64(&mut self) -> Result<f64> {
        let b = self.take(8)?;
        Ok(f64::from_le_bytes([
            b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
        ]))
    }

    fn at_end(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_preserves_bits() {
        let dir = std::env::temp_dir().join("koopnet_ckpt_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.kpm");

        let a = Tensor::from_vec(&[2, 3], vec![1.0, -0.5, 1e-300, f64::MAX, 0.0, 2.25]).unwrap();
        let b = Tensor::from_vec(&[4], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        save_checkpoint(&path, "test n=3 r=2", &[&a, &b]).unwrap();
        let (desc, tensors) = load_checkpoint(&path).unwrap();
        assert_eq!(desc, "test n=3 r=2");
        assert_eq!(tensors.len(), 2);
        assert_eq!(tensors[0], a);
        assert_eq!(tensors[1], b);
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn header_layout_is_exact() {
        let dir = std::env::temp_dir().join("koopnet_ckpt_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("layout.kpm");
        let t = Tensor::from_vec(&[2], vec![1.0, 2.0]).unwrap();
        save_checkpoint(&path, "ab", &[&t]).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[0..4], b"KPM1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 2);
        assert_eq!(&bytes[12..14], b"ab");
        assert_eq!(u32::from_le_bytes(bytes[14..18].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[18..22].try_into().unwrap()), 1); // rank
        assert_eq!(u32::from_le_bytes(bytes[22..26].try_into().unwrap()), 2); // dim
        assert_eq!(f64::from_le_bytes(bytes[26..34].try_into().unwrap()), 1.0);
        assert_eq!(f64::from_le_bytes(bytes[34..42].try_into().unwrap()), 2.0);
        assert_eq!(bytes.len(), 42);
        fs::remove_file(&path).unwrap();
    }

    #[test]
    fn rejects_corrupt_files() {
        let dir = std::env::temp_dir().join("koopnet_ckpt_test");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("corrupt.kpm");
        fs::write(&path, b"KPMX____").unwrap();
        assert!(load_checkpoint(&path).is_err());
        fs::write(&path, b"KP").unwrap();
        assert!(load_checkpoint(&path).is_err());
        fs::remove_file(&path).unwrap();
    }
}
