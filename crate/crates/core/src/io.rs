//! Binary snapshots of energy vectors.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 4 | magic `ZSNP` |
//! | 4 | format version (`u32`, currently 1) |
//! | 4 × (4 + k) | `d`, `L`, `E_c`, `eps`, each a `u32` byte length then ASCII text |
//! | 8 | `N` (`u64`) |
//! | 8 N | energies as `f64` |
//!
//! `d` and `L` are base-10 integers; `E_c` and `eps` are exact rationals written as `p/q` or an integer.

use std::io::{Read, Write};

use crate::error::{Result, ZhangError};
use crate::lattice::ModelParams;
use crate::scalar::{format_rational, parse_rational, Rational};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ZSNP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub d: usize,
    pub l: usize,
    pub ec: Rational,
    pub eps: Rational,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn new(d: usize, l: usize, params: &ModelParams, values: Vec<f64>) -> Self {
        Snapshot { d, l, ec: params.ec.clone(), eps: params.eps.clone(), values }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.values.len());
        self.write(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
        for s in [self.d.to_string(), self.l.to_string(), format_rational(&self.ec), format_rational(&self.eps)] {
            w.write_all(&(s.len() as u32).to_le_bytes())?;
            w.write_all(s.as_bytes())?;
        }
        w.write_all(&(self.values.len() as u64).to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let io = |e: std::io::Error| ZhangError::Parse(format!("snapshot: {e}"));
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(ZhangError::Parse("snapshot: bad magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4).map_err(io)?;
        let version = u32::from_le_bytes(b4);
        if version != SNAPSHOT_VERSION {
            return Err(ZhangError::Parse(format!("snapshot: unsupported version {version}")));
        }
        let mut fields = Vec::with_capacity(4);
        for _ in 0..4 {
            r.read_exact(&mut b4).map_err(io)?;
            let len = u32::from_le_bytes(b4) as usize;
            if len > 1 << 20 {
                return Err(ZhangError::Parse("snapshot: header field too long".into()));
            }
            let mut buf = vec![0u8; len];
            r.read_exact(&mut buf).map_err(io)?;
            fields.push(String::from_utf8(buf).map_err(|_| ZhangError::Parse("snapshot: header is not UTF-8".into()))?);
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| ZhangError::Parse(format!("snapshot: bad integer `{s}`")));
        let (d, l) = (int(&fields[0])?, int(&fields[1])?);
        let (ec, eps) = (parse_rational(&fields[2])?, parse_rational(&fields[3])?);
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8).map_err(io)?;
        let n = u64::from_le_bytes(b8) as usize;
        if l.checked_pow(d as u32) != Some(n) {
            return Err(ZhangError::Parse(format!("snapshot: {n} values for L = {l}, d = {d}")));
        }
        let mut values = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut b8).map_err(io)?;
            values.push(f64::from_le_bytes(b8));
        }
        Ok(Snapshot { d, l, ec, eps, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn round_trip() {
        let p = ModelParams::new(rat(7, 2), rat(1, 3)).unwrap();
        let s = Snapshot::new(2, 2, &p, vec![0.0, 1.5, 1.0 / 3.0, 3.5]);
        let bytes = s.to_bytes();
        assert_eq!(&bytes[..4], b"ZSNP");
        assert_eq!(Snapshot::read(&mut bytes.as_slice()).unwrap(), s);
    }

    #[test]
    fn truncated_and_inconsistent_are_rejected() {
        let p = ModelParams::new(rat(1, 1), rat(1, 2)).unwrap();
        let bytes = Snapshot::new(1, 3, &p, vec![0.1, 0.2, 0.3]).to_bytes();
        assert!(Snapshot::read(&mut &bytes[..bytes.len() - 1]).is_err());
        let bad = Snapshot::new(1, 2, &p, vec![0.1, 0.2, 0.3]).to_bytes();
        assert!(Snapshot::read(&mut bad.as_slice()).is_err());
    }
}
