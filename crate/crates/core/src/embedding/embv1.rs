//! EMBV1 embedding files.
//!
//! Layout (little-endian): magic `EMBV1\0`, u32 dim, u64 record count, then
//! per record a u16 id length, the UTF-8 id, and `dim` f32 values.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const EMBV1_MAGIC: &[u8; 6] = b"EMBV1\0";

#[derive(Debug, Error)]
pub enum Embv1Error {
    #[error("not an EMBV1 file (bad magic)")]
    BadMagic,
    #[error("file ends inside {0}")]
    Truncated(&'static str),
    #[error("bytes after the last record")]
    TrailingBytes,
    #[error("dimension must be positive")]
    ZeroDim,
    #[error("record {index}: id is not UTF-8")]
    BadId { index: u64 },
    #[error("record {index}: duplicate id {id:?}")]
    DuplicateId { index: u64, id: String },
    #[error("id {0:?} longer than 65535 bytes")]
    IdTooLong(String),
    #[error("record {id:?} has {found} values, expected {expected}")]
    DimMismatch { id: String, expected: usize, found: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embv1 {
    pub dim: usize,
    pub records: Vec<(String, Vec<f32>)>,
}

pub fn write_embv1<W: Write>(mut out: W, dim: usize, records: &[(String, Vec<f32>)]) -> Result<(), Embv1Error> {
    if dim == 0 {
        return Err(Embv1Error::ZeroDim);
    }
    out.write_all(EMBV1_MAGIC)?;
    out.write_all(&(dim as u32).to_le_bytes())?;
    out.write_all(&(records.len() as u64).to_le_bytes())?;
    for (id, values) in records {
        let id_len = u16::try_from(id.len()).map_err(|_| Embv1Error::IdTooLong(id.clone()))?;
        if values.len() != dim {
            return Err(Embv1Error::DimMismatch {
                id: id.clone(),
                expected: dim,
                found: values.len(),
            });
        }
        out.write_all(&id_len.to_le_bytes())?;
        out.write_all(id.as_bytes())?;
        for v in values {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &'static str) -> Result<(), Embv1Error> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => Embv1Error::Truncated(what),
        _ => Embv1Error::Io(e),
    })
}

/// Reads and validates a complete EMBV1 stream.
pub fn read_embv1<R: Read>(mut input: R) -> Result<Embv1, Embv1Error> {
    let mut magic = [0u8; 6];
    read_exact(&mut input, &mut magic, "header")?;
    if &magic != EMBV1_MAGIC {
        return Err(Embv1Error::BadMagic);
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut input, &mut b4, "header")?;
    let dim = u32::from_le_bytes(b4) as usize;
    if dim == 0 {
        return Err(Embv1Error::ZeroDim);
    }
    let mut b8 = [0u8; 8];
    read_exact(&mut input, &mut b8, "header")?;
    let count = u64::from_le_bytes(b8);

    let mut records = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut vector_bytes = vec![0u8; dim * 4];
    for index in 0..count {
        let mut b2 = [0u8; 2];
        read_exact(&mut input, &mut b2, "record id length")?;
        let mut id = vec![0u8; u16::from_le_bytes(b2) as usize];
        read_exact(&mut input, &mut id, "record id")?;
        let id = String::from_utf8(id).map_err(|_| Embv1Error::BadId { index })?;
        read_exact(&mut input, &mut vector_bytes, "record vector")?;
        let values = vector_bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        if !seen.insert(id.clone()) {
            return Err(Embv1Error::DuplicateId { index, id });
        }
        records.push((id, values));
    }
    let mut probe = [0u8; 1];
    if input.read(&mut probe)? != 0 {
        return Err(Embv1Error::TrailingBytes);
    }
    Ok(Embv1 { dim, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<(String, Vec<f32>)> {
        vec![
            ("CCO".into(), vec![1.0, -0.5, f32::MIN_POSITIVE]),
            ("spectrum_01.png".into(), vec![0.0, 3.25, -7.0]),
        ]
    }

    #[test]
    fn byte_layout() {
        let mut buf = Vec::new();
        write_embv1(&mut buf, 3, &sample()[..1]).unwrap();
        assert_eq!(&buf[..6], b"EMBV1\0");
        assert_eq!(&buf[6..10], &3u32.to_le_bytes());
        assert_eq!(&buf[10..18], &1u64.to_le_bytes());
        assert_eq!(&buf[18..20], &3u16.to_le_bytes());
        assert_eq!(&buf[20..23], b"CCO");
        assert_eq!(&buf[23..27], &1.0f32.to_le_bytes());
        assert_eq!(buf.len(), 23 + 12);
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let mut buf = Vec::new();
        write_embv1(&mut buf, 3, &sample()).unwrap();
        let back = read_embv1(buf.as_slice()).unwrap();
        assert_eq!(back.dim, 3);
        for ((id_a, a), (id_b, b)) in back.records.iter().zip(sample()) {
            assert_eq!(id_a, &id_b);
            let bits_a: Vec<u32> = a.iter().map(|x| x.to_bits()).collect();
            let bits_b: Vec<u32> = b.iter().map(|x| x.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn rejects_damage() {
        let mut buf = Vec::new();
        write_embv1(&mut buf, 3, &sample()).unwrap();
        assert!(matches!(
            read_embv1(&buf[..buf.len() - 1]),
            Err(Embv1Error::Truncated(_))
        ));
        let mut extra = buf.clone();
        extra.push(0);
        assert!(matches!(read_embv1(extra.as_slice()), Err(Embv1Error::TrailingBytes)));
        let mut magic = buf.clone();
        magic[0] = b'X';
        assert!(matches!(read_embv1(magic.as_slice()), Err(Embv1Error::BadMagic)));
        let dup = vec![sample()[0].clone(), sample()[0].clone()];
        let mut d = Vec::new();
        write_embv1(&mut d, 3, &dup).unwrap();
        assert!(matches!(
            read_embv1(d.as_slice()),
            Err(Embv1Error::DuplicateId { index: 1, .. })
        ));
        assert!(matches!(
            write_embv1(Vec::new(), 2, &sample()),
            Err(Embv1Error::DimMismatch { .. })
        ));
    }
}
