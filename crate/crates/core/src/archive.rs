//! Sample archive file.
//!
//! ```text
//! "PS3D"  u32 version=1  u32 N  u64 count
//! count x { u8 class  u8 variant  u32 frame  u32 cluster  u32 NUM  N x 5 f32 }
//! ```
//!
//! All integers and floats are little-endian.

use std::fs;
use std::path::Path;

use crate::cloud::ClassId;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PS3D";
pub const VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 4 + 8;
const SAMPLE_HEADER_BYTES: usize = 1 + 1 + 4 + 4 + 4;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchiveSample {
    pub class: ClassId,
    pub variant: u8,
    pub frame_id: u32,
    pub cluster_id: u32,
    pub num: u32,
    pub features: Vec<[f32; 5]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleArchive {
    pub n_points: u32,
    pub samples: Vec<ArchiveSample>,
}

impl SampleArchive {
    pub fn new(n_points: u32) -> Self {
        Self {
            n_points,
            samples: Vec::new(),
        }
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let n = self.n_points as usize;
        let mut out =
            Vec::with_capacity(HEADER_BYTES + self.samples.len() * (SAMPLE_HEADER_BYTES + n * 20));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n_points.to_le_bytes());
        out.extend_from_slice(&(self.samples.len() as u64).to_le_bytes());
        for (k, s) in self.samples.iter().enumerate() {
            if s.features.len() != n {
                return Err(Error::Precondition(format!(
                    "sample {k} has {} rows, archive expects {n}",
                    s.features.len()
                )));
            }
            out.push(s.class.as_u8());
            out.push(s.variant);
            out.extend_from_slice(&s.frame_id.to_le_bytes());
            out.extend_from_slice(&s.cluster_id.to_le_bytes());
            out.extend_from_slice(&s.num.to_le_bytes());
            for row in &s.features {
                for v in row {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let n_points = r.u32()?;
        let count = r.u64()?;
        let per_sample = SAMPLE_HEADER_BYTES as u64 + n_points as u64 * 20;
        let remaining = (bytes.len() - r.pos) as u64;
        if count.checked_mul(per_sample) != Some(remaining) {
            return Err(Error::Format(format!(
                "{count} samples of {n_points} points do not match {remaining} payload bytes"
            )));
        }
        let mut samples = Vec::with_capacity(count as usize);
        for k in 0..count {
            let class_byte = r.u8()?;
            let class = ClassId::from_u8(class_byte)
                .ok_or_else(|| Error::Format(format!("sample {k}: invalid class {class_byte}")))?;
            let variant = r.u8()?;
            let frame_id = r.u32()?;
            let cluster_id = r.u32()?;
            let num = r.u32()?;
            let mut features = Vec::with_capacity(n_points as usize);
            for _ in 0..n_points {
                let mut row = [0f32; 5];
                for v in row.iter_mut() {
                    *v = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
                }
                features.push(row);
            }
            samples.push(ArchiveSample {
                class,
                variant,
                frame_id,
                cluster_id,
                num,
                features,
            });
        }
        Ok(Self { n_points, samples })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format("truncated archive".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn export_samples(path: impl AsRef<Path>, archive: &SampleArchive) -> Result<()> {
    let path = path.as_ref();
    let bytes = archive.encode()?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn import_samples(path: impl AsRef<Path>) -> Result<SampleArchive> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    SampleArchive::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_archive() {
        let a = SampleArchive::new(512);
        let bytes = a.encode().unwrap();
        assert_eq!(bytes.len(), HEADER_BYTES);
        assert_eq!(&bytes[..4], b"PS3D");
        assert_eq!(SampleArchive::decode(&bytes).unwrap(), a);
    }

    #[test]
    fn layout_is_fixed() {
        let a = SampleArchive {
            n_points: 1,
            samples: vec![ArchiveSample {
                class: ClassId::Cyclist,
                variant: 5,
                frame_id: 0x0102_0304,
                cluster_id: 9,
                num: 3,
                features: vec![[1.0, 2.0, 3.0, 0.5, 2.0]],
            }],
        };
        let b = a.encode().unwrap();
        assert_eq!(b.len(), HEADER_BYTES + SAMPLE_HEADER_BYTES + 20);
        assert_eq!(&b[4..8], &1u32.to_le_bytes());
        assert_eq!(&b[8..12], &1u32.to_le_bytes());
        assert_eq!(&b[12..20], &1u64.to_le_bytes());
        assert_eq!(b[20], 3);
        assert_eq!(b[21], 5);
        assert_eq!(&b[22..26], &[4, 3, 2, 1]);
        assert_eq!(&b[34..38], &1.0f32.to_le_bytes());
    }

    #[test]
    fn bad_magic() {
        let mut bytes = SampleArchive::new(4).encode().unwrap();
        bytes[0] = b'X';
        assert!(matches!(SampleArchive::decode(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload() {
        let a = SampleArchive {
            n_points: 2,
            samples: vec![ArchiveSample {
                class: ClassId::Car,
                variant: 0,
                frame_id: 0,
                cluster_id: 1,
                num: 2,
                features: vec![[0.0; 5]; 2],
            }],
        };
        let bytes = a.encode().unwrap();
        assert!(matches!(
            SampleArchive::decode(&bytes[..bytes.len() - 1]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn wrong_row_count_rejected_on_encode() {
        let a = SampleArchive {
            n_points: 2,
            samples: vec![ArchiveSample {
                class: ClassId::Car,
                variant: 0,
                frame_id: 0,
                cluster_id: 1,
                num: 2,
                features: vec![[0.0; 5]; 3],
            }],
        };
        assert!(a.encode().is_err());
    }
}
