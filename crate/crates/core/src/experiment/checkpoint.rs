//! Binary chain checkpoints.
//!
//! Layout, all little-endian:
//!
//! | bytes | field |
//! |---|---|
//! | 4 | magic `LGTC` |
//! | 4 | format version (`u32`, currently 1) |
//! | 1 | group tag |
//! | 1 | number of dimensions |
//! | 1 | boundary (0 periodic, 1 open) |
//! | 1 | padding |
//! | 4 x ndims | extents (`u32`) |
//! | 8 | beta (`f64`) |
//! | 8 | sweep counter: sweeps completed (`u64`) |
//! | 32 | RNG state, key then counter (`u64` x 4) |
//! | 16 x N^2 x links | link matrices, row-major `(re, im)` pairs of `f64` |
//!
//! Random streams are derived per link from `(seed, sweep)`, so the saved RNG
//! state is the key `(seed, sweep counter)` with a zero counter; resuming from
//! it continues the chain exactly.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::action::Configuration;
use crate::error::{Error, Result};
use crate::group::{CMatrix, GroupElement, GroupId};
use crate::lattice::{Boundary, Geometry, LatticeShape};

pub const MAGIC: &[u8; 4] = b"LGTC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub config: Configuration,
    pub beta: f64,
    pub sweep: u64,
    pub rng_key: [u64; 2],
    pub rng_counter: [u64; 2],
}

impl Checkpoint {
    pub fn new(config: Configuration, beta: f64, seed: u64, sweep: u64) -> Self {
        Self {
            config,
            beta,
            sweep,
            rng_key: [seed, sweep],
            rng_counter: [0, 0],
        }
    }

    pub fn seed(&self) -> u64 {
        self.rng_key[0]
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let shape = self.config.shape();
        let n = self.config.group().order();
        let mut out = Vec::with_capacity(64 + self.config.link_count() * n * n * 16);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(self.config.group().tag());
        out.push(shape.ndims() as u8);
        out.push(match shape.boundary() {
            Boundary::Periodic => 0,
            Boundary::Open => 1,
        });
        out.push(0);
        for &e in shape.extents() {
            out.extend_from_slice(&(e as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.beta.to_le_bytes());
        out.extend_from_slice(&self.sweep.to_le_bytes());
        for w in self.rng_key.iter().chain(&self.rng_counter) {
            out.extend_from_slice(&w.to_le_bytes());
        }
        for id in 0..self.config.link_count() {
            for z in self.config.link_matrix(id).entries() {
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Checkpoint("bad magic; not a checkpoint file".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let tag = r.u8()?;
        let group = GroupId::from_tag(tag).ok_or_else(|| Error::Checkpoint(format!("unknown group tag {tag}")))?;
        let ndims = r.u8()? as usize;
        let boundary = match r.u8()? {
            0 => Boundary::Periodic,
            1 => Boundary::Open,
            b => return Err(Error::Checkpoint(format!("unknown boundary code {b}"))),
        };
        r.u8()?;
        let extents = (0..ndims)
            .map(|_| r.u32().map(|e| e as usize))
            .collect::<Result<Vec<_>>>()?;
        let shape = LatticeShape::new(&extents, boundary).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let beta = r.f64()?;
        let sweep = r.u64()?;
        let rng_key = [r.u64()?, r.u64()?];
        let rng_counter = [r.u64()?, r.u64()?];
        let geometry = Arc::new(Geometry::new(shape));
        let n = group.order();
        let mut links = Vec::with_capacity(geometry.link_count());
        for _ in 0..geometry.link_count() {
            let mut m = CMatrix::zeros(n);
            for i in 0..n {
                for j in 0..n {
                    m.set(i, j, Complex64::new(r.f64()?, r.f64()?));
                }
            }
            if !m.is_finite() {
                return Err(Error::Checkpoint("non-finite link value".into()));
            }
            links.push(GroupElement::from_matrix_unchecked(group, m));
        }
        if r.pos != bytes.len() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let config = Configuration::from_links(geometry, group, links)?;
        Ok(Self {
            config,
            beta,
            sweep,
            rng_key,
            rng_counter,
        })
    }

    /// Write atomically: a temporary file in the same directory is renamed
    /// over `path`, so an interruption never leaves a torn checkpoint.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = super::tmp_path(path);
        {
            let mut f = std::fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        std::fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::Checkpoint("file is truncated".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::hot_start_for_seed;

    #[test]
    fn round_trip_is_byte_identical() {
        for group in GroupId::ALL {
            for shape in [
                LatticeShape::periodic(&[3, 2, 4]).unwrap(),
                LatticeShape::open(&[2, 3]).unwrap(),
            ] {
                let cfg = hot_start_for_seed(&shape, group, 11);
                let ck = Checkpoint::new(cfg, 1.25, 11, 42);
                let bytes = ck.to_bytes();
                let back = Checkpoint::from_bytes(&bytes).unwrap();
                assert_eq!(back.to_bytes(), bytes);
                assert_eq!(back.sweep, 42);
                assert_eq!(back.seed(), 11);
                assert_eq!(back.config.shape(), &shape);
                assert_eq!(back.config.group(), group);
            }
        }
    }

    #[test]
    fn header_layout() {
        let shape = LatticeShape::periodic(&[2, 2]).unwrap();
        let ck = Checkpoint::new(Configuration::cold_start(&shape, GroupId::U1), 0.5, 9, 7);
        let b = ck.to_bytes();
        assert_eq!(&b[0..4], b"LGTC");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(b[8], GroupId::U1.tag());
        assert_eq!(b[9], 2);
        assert_eq!(b[10], 0);
        assert_eq!(f64::from_le_bytes(b[20..28].try_into().unwrap()), 0.5);
        assert_eq!(u64::from_le_bytes(b[28..36].try_into().unwrap()), 7);
        assert_eq!(b.len(), 12 + 8 + 16 + 32 + 8 * 16);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let shape = LatticeShape::periodic(&[2, 2]).unwrap();
        let b = Checkpoint::new(Configuration::cold_start(&shape, GroupId::Z2), 0.5, 1, 0).to_bytes();
        assert!(Checkpoint::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut bad = b.clone();
        bad[4] = 2;
        assert!(Checkpoint::from_bytes(&bad).is_err());
        let mut long = b;
        long.push(0);
        assert!(Checkpoint::from_bytes(&long).is_err());
    }
}
