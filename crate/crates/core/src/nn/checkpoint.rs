//! Binary parameter files: the magic `VULCAN1`, then for each parameter a
//! little-endian u32 name length, the UTF-8 name, a u32 rank, u64 dims, and
//! the values as little-endian f64.

use super::{NnError, ParamStore, Tensor};
use std::io::{Read, Write};

pub const MAGIC: &[u8; 7] = b"VULCAN1";

pub fn write_checkpoint<W: Write>(store: &ParamStore, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    for p in store.iter() {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.value.shape.len() as u32).to_le_bytes())?;
        for &d in &p.value.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        for v in &p.value.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn checkpoint_bytes(store: &ParamStore) -> Vec<u8> {
    let mut buf = Vec::new();
    write_checkpoint(store, &mut buf).expect("writing to memory cannot fail");
    buf
}

/// All (name, tensor) records in file order.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<(String, Tensor)>, NnError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|e| NnError::Checkpoint(e.to_string()))?;
    parse_checkpoint(&bytes)
}

pub fn parse_checkpoint(bytes: &[u8]) -> Result<Vec<(String, Tensor)>, NnError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(MAGIC.len())? != MAGIC {
        return Err(NnError::Checkpoint("bad magic".into()));
    }
    let mut out = Vec::new();
    while cur.pos < bytes.len() {
        let name_len = cur.u32()? as usize;
        let name = std::str::from_utf8(cur.take(name_len)?)
            .map_err(|_| NnError::Checkpoint("parameter name is not UTF-8".into()))?
            .to_string();
        let rank = cur.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(cur.u64()? as usize);
        }
        let n: usize = shape.iter().product();
        let raw = cur.take(n.checked_mul(8).ok_or_else(|| NnError::Checkpoint("size overflow".into()))?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        out.push((name, Tensor { shape, data }));
    }
    Ok(out)
}

/// Copy checkpoint values into a store with the same names and shapes.
pub fn load_into(store: &mut ParamStore, records: Vec<(String, Tensor)>) -> Result<(), NnError> {
    if records.len() != store.len() {
        return Err(NnError::Checkpoint(format!(
            "checkpoint has {} parameters, model has {}",
            records.len(),
            store.len()
        )));
    }
    for (name, tensor) in records {
        let id = store
            .find(&name)
            .ok_or_else(|| NnError::Checkpoint(format!("unknown parameter `{name}`")))?;
        let p = store.param_mut(id);
        if p.value.shape != tensor.shape {
            return Err(NnError::Checkpoint(format!(
                "parameter `{name}` has shape {:?}, checkpoint has {:?}",
                p.value.shape, tensor.shape
            )));
        }
        p.value = tensor;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| NnError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store() -> ParamStore {
        let mut s = ParamStore::new();
        s.register("a.w", Tensor::from_vec(&[2, 2], vec![1.0, -0.0, f64::MIN_POSITIVE, 3.5]).unwrap(), true);
        s.register("u", Tensor::vector(vec![0.1, 0.2, 0.3]), false);
        s
    }

    #[test]
    fn round_trip_is_bitwise() {
        let s = store();
        let bytes = checkpoint_bytes(&s);
        assert_eq!(&bytes[..7], b"VULCAN1");
        let mut t = store();
        for p in t.iter_mut() {
            p.value.fill(9.0);
        }
        load_into(&mut t, parse_checkpoint(&bytes).unwrap()).unwrap();
        assert_eq!(checkpoint_bytes(&t), bytes);
        let bits: Vec<u64> = t.value(t.find("a.w").unwrap()).data.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits[1], (-0.0f64).to_bits());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let bytes = checkpoint_bytes(&store());
        assert!(parse_checkpoint(b"VULCAN2").is_err());
        assert!(parse_checkpoint(&bytes[..bytes.len() - 3]).is_err());
        let mut other = ParamStore::new();
        other.register("a.w", Tensor::zeros(&[4]), true);
        other.register("u", Tensor::zeros(&[3]), false);
        assert!(load_into(&mut other, parse_checkpoint(&bytes).unwrap()).is_err());
    }
}
