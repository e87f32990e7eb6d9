//! Binary snapshot codec.
//!
//! Layout (little endian): magic, `u16` version, `u32` collection count, then
//! per collection a length-prefixed JSON schema, the record block and the
//! index block. A CRC32C of every preceding byte closes the file.
//!
//! Record block: `u64` slot count, then per slot a live flag, a
//! length-prefixed id, `dim` f32 values and length-prefixed JSON holding
//! payload, metadata and links. Tombstoned slots are kept so HNSW node
//! numbers stay valid.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::collection::{Collection, Index, Slot};
use super::hnsw::Hnsw;
use super::ivf::Ivf;
use super::schema::{CollectionSchema, IndexKind, Link, Metadata};
use super::StoreError;

pub const SNAPSHOT_MAGIC: &[u8; 6] = b"CVRS1\0";
pub const SNAPSHOT_VERSION: u16 = 1;

const TAG_FLAT: u8 = 0;
const TAG_HNSW: u8 = 1;
const TAG_IVF: u8 = 2;

#[derive(Serialize, Deserialize)]
struct SlotExtras {
    payload: String,
    metadata: Metadata,
    links: Vec<Link>,
}

pub(crate) fn encode<'a>(collections: impl ExactSizeIterator<Item = &'a Collection>) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    put_u32(&mut out, collections.len());
    for c in collections {
        put_blob(&mut out, &serde_json::to_vec(&c.schema).expect("schema serializes"));
        out.extend_from_slice(&(c.slots.len() as u64).to_le_bytes());
        let dim = c.schema.dim;
        for (i, s) in c.slots.iter().enumerate() {
            out.push(s.live as u8);
            put_blob(&mut out, s.id.as_bytes());
            for x in &c.vectors[i * dim..(i + 1) * dim] {
                out.extend_from_slice(&x.to_le_bytes());
            }
            let extras = SlotExtras {
                payload: s.payload.clone(),
                metadata: s.metadata.clone(),
                links: s.links.clone(),
            };
            put_blob(&mut out, &serde_json::to_vec(&extras).expect("record serializes"));
        }
        match &c.index {
            Index::Flat => out.push(TAG_FLAT),
            Index::Hnsw(h) => {
                out.push(TAG_HNSW);
                out.extend_from_slice(&h.rng.get_seed());
                out.extend_from_slice(&h.rng.get_stream().to_le_bytes());
                out.extend_from_slice(&h.rng.get_word_pos().to_le_bytes());
                match h.entry {
                    Some(e) => {
                        out.push(1);
                        put_u32(&mut out, e as usize);
                    }
                    None => out.push(0),
                }
                for layers in &h.links {
                    out.push(layers.len() as u8);
                    for list in layers {
                        put_ids(&mut out, list);
                    }
                }
            }
            Index::Ivf(ivf) => {
                out.push(TAG_IVF);
                out.push(ivf.trained as u8);
                put_u32(&mut out, ivf.lists.len());
                for x in &ivf.centroids {
                    out.extend_from_slice(&x.to_le_bytes());
                }
                for list in &ivf.lists {
                    put_ids(&mut out, list);
                }
            }
        }
    }
    let crc = crc32c::crc32c(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub(crate) fn decode(bytes: &[u8]) -> Result<Vec<Collection>, StoreError> {
    if bytes.len() < SNAPSHOT_MAGIC.len() + 2 + 4 + 4 || &bytes[..6] != SNAPSHOT_MAGIC {
        return Err(corrupt("missing snapshot header"));
    }
    let version = u16::from_le_bytes([bytes[6], bytes[7]]);
    if version != SNAPSHOT_VERSION {
        return Err(StoreError::VersionMismatch {
            found: version,
            expected: SNAPSHOT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().unwrap());
    if crc32c::crc32c(body) != stored {
        return Err(corrupt("checksum mismatch"));
    }
    let mut r = Reader { buf: body, pos: 8 };
    let count = r.u32()? as usize;
    let mut out: Vec<Collection> = Vec::new();
    for _ in 0..count {
        let schema: CollectionSchema =
            serde_json::from_slice(r.blob()?).map_err(|e| corrupt(&format!("schema: {e}")))?;
        schema.validate().map_err(|e| corrupt(&e))?;
        if out.iter().any(|c| c.schema.name == schema.name) {
            return Err(corrupt("collection listed twice"));
        }
        let mut c = Collection::new(schema);
        read_records(&mut r, &mut c)?;
        read_index(&mut r, &mut c)?;
        out.push(c);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    Ok(out)
}

fn read_records(r: &mut Reader<'_>, c: &mut Collection) -> Result<(), StoreError> {
    let dim = c.schema.dim;
    let n = r.u64()?;
    // Each slot needs at least this many bytes, which bounds allocations.
    let min_slot = 1 + 4 + 4 * dim + 4;
    if n > (r.remaining() / min_slot) as u64 {
        return Err(corrupt("record count exceeds file size"));
    }
    let n = n as usize;
    c.vectors.reserve(n * dim);
    let mut by_id = HashMap::new();
    for i in 0..n {
        let live = match r.u8()? {
            0 => false,
            1 => true,
            _ => return Err(corrupt("bad live flag")),
        };
        let id = std::str::from_utf8(r.blob()?)
            .map_err(|_| corrupt("id is not UTF-8"))?
            .to_owned();
        for _ in 0..dim {
            c.vectors.push(f32::from_le_bytes(r.take(4)?.try_into().unwrap()));
        }
        let extras: SlotExtras =
            serde_json::from_slice(r.blob()?).map_err(|e| corrupt(&format!("record {id:?}: {e}")))?;
        if live && by_id.insert(id.clone(), i as u32).is_some() {
            return Err(corrupt("duplicate live id"));
        }
        c.slots.push(Slot {
            id,
            payload: extras.payload,
            metadata: extras.metadata,
            links: extras.links,
            live,
        });
    }
    c.by_id = by_id;
    Ok(())
}

fn read_index(r: &mut Reader<'_>, c: &mut Collection) -> Result<(), StoreError> {
    let n = c.slots.len();
    let tag = r.u8()?;
    let expected = match c.schema.index {
        IndexKind::Flat => TAG_FLAT,
        IndexKind::Hnsw => TAG_HNSW,
        IndexKind::IvfFlat => TAG_IVF,
    };
    if tag != expected {
        return Err(corrupt("index block does not match schema"));
    }
    c.index = match tag {
        TAG_FLAT => Index::Flat,
        TAG_HNSW => {
            let seed: [u8; 32] = r.take(32)?.try_into().unwrap();
            let stream = r.u64()?;
            let word_pos = u128::from_le_bytes(r.take(16)?.try_into().unwrap());
            let mut rng = ChaCha8Rng::from_seed(seed);
            rng.set_stream(stream);
            rng.set_word_pos(word_pos);
            let entry = match r.u8()? {
                0 => None,
                1 => Some(r.u32()?),
                _ => return Err(corrupt("bad entry flag")),
            };
            let mut links = Vec::with_capacity(n);
            for _ in 0..n {
                let levels = r.u8()? as usize;
                if levels == 0 {
                    return Err(corrupt("node without layers"));
                }
                let mut layers = Vec::with_capacity(levels);
                for _ in 0..levels {
                    layers.push(r.ids(n)?);
                }
                links.push(layers);
            }
            if entry.is_some_and(|e| e as usize >= n) || (entry.is_none() && n > 0) {
                return Err(corrupt("bad entry point"));
            }
            for layers in &links {
                for (layer, list) in layers.iter().enumerate() {
                    if list.iter().any(|&t| links[t as usize].len() <= layer) {
                        return Err(corrupt("link to a node above its top layer"));
                    }
                }
            }
            Index::Hnsw(Hnsw {
                params: c.schema.hnsw,
                rng,
                links,
                entry,
            })
        }
        _ => {
            let trained = r.u8()? != 0;
            let nlist = r.u32()? as usize;
            let dim = c.schema.dim;
            if nlist > n || nlist.saturating_mul(dim).saturating_mul(4) > r.remaining() {
                return Err(corrupt("bad list count"));
            }
            let centroids = (0..nlist * dim)
                .map(|_| Ok(f32::from_le_bytes(r.take(4)?.try_into().unwrap())))
                .collect::<Result<Vec<f32>, StoreError>>()?;
            let lists = (0..nlist).map(|_| r.ids(n)).collect::<Result<Vec<_>, _>>()?;
            Index::Ivf(Ivf {
                trained,
                centroids,
                lists,
            })
        }
    };
    Ok(())
}

fn corrupt(msg: &str) -> StoreError {
    StoreError::CorruptSnapshot(msg.to_owned())
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("snapshot field exceeds u32").to_le_bytes());
}

fn put_blob(out: &mut Vec<u8>, bytes: &[u8]) {
    put_u32(out, bytes.len());
    out.extend_from_slice(bytes);
}

fn put_ids(out: &mut Vec<u8>, ids: &[u32]) {
    put_u32(out, ids.len());
    for id in ids {
        out.extend_from_slice(&id.to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        if n > self.remaining() {
            return Err(corrupt("truncated"));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, StoreError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, StoreError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, StoreError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn blob(&mut self) -> Result<&'a [u8], StoreError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    /// A list of node numbers, each below `bound`.
    fn ids(&mut self, bound: usize) -> Result<Vec<u32>, StoreError> {
        let n = self.u32()? as usize;
        let raw = self.take(n.checked_mul(4).ok_or_else(|| corrupt("list too long"))?)?;
        let ids: Vec<u32> = raw
            .chunks_exact(4)
            .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        if ids.iter().any(|&i| i as usize >= bound) {
            return Err(corrupt("node number out of range"));
        }
        Ok(ids)
    }
}
