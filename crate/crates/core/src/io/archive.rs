//! Weight archive layout (all integers little-endian):
//!
//! ```text
//! "PLFP" | version u8 | seed u64 | input height u32 | input width u32
//! layer count u32 | per layer: tag u8, then u32 fields
//!     0 conv (c_out, c_in, k) | 1 relu | 2 max pool 2x2 | 3 global max pool | 4 linear (c_in, c_out)
//! entry count u32 | per entry:
//!     layer u32 | slot u8 | rank u8 | dims u32 x rank | payload f64 x prod(dims) | crc32 u32
//! ```
//!
//! The checksum of an entry covers every byte of the entry before it.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Layer, Tensor, ToyModel};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"PLFP";
pub const ARCHIVE_VERSION: u8 = 1;

/// A model together with the input resolution it is meant for.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArchive<T> {
    pub model: ToyModel<T>,
    pub input_height: usize,
    pub input_width: usize,
}

fn put_u32(out: &mut Vec<u8>, v: usize) -> Result<()> {
    let v =
        u32::try_from(v).map_err(|_| Error::Format(format!("value {v} does not fit in u32")))?;
    out.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub fn save_archive<T: Scalar>(archive: &WeightArchive<T>) -> Result<Vec<u8>> {
    let model = &archive.model;
    let mut out = Vec::new();
    out.extend_from_slice(ARCHIVE_MAGIC);
    out.push(ARCHIVE_VERSION);
    out.extend_from_slice(&model.seed().to_le_bytes());
    put_u32(&mut out, archive.input_height)?;
    put_u32(&mut out, archive.input_width)?;
    put_u32(&mut out, model.layers().len())?;
    for layer in model.layers() {
        match *layer {
            Layer::Conv2d { c_out, c_in, k } => {
                out.push(0);
                for v in [c_out, c_in, k] {
                    put_u32(&mut out, v)?;
                }
            }
            Layer::Relu => out.push(1),
            Layer::MaxPool2 => out.push(2),
            Layer::GlobalMaxPool => out.push(3),
            Layer::Linear { c_in, c_out } => {
                out.push(4);
                put_u32(&mut out, c_in)?;
                put_u32(&mut out, c_out)?;
            }
        }
    }
    let entries: Vec<(usize, usize, &Tensor<T>)> = model
        .params()
        .iter()
        .enumerate()
        .flat_map(|(l, group)| group.iter().enumerate().map(move |(s, t)| (l, s, t)))
        .collect();
    put_u32(&mut out, entries.len())?;
    for (layer, slot, t) in entries {
        let start = out.len();
        put_u32(&mut out, layer)?;
        out.push(slot as u8);
        out.push(t.shape().len() as u8);
        for &d in t.shape() {
            put_u32(&mut out, d)?;
        }
        for x in t.data() {
            out.extend_from_slice(&x.as_f64().to_le_bytes());
        }
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end =
            end.ok_or_else(|| Error::Format(format!("archive truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn load_archive<T: Scalar>(bytes: &[u8]) -> Result<WeightArchive<T>> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != ARCHIVE_MAGIC {
        return Err(Error::Format("not a weight archive (bad magic)".into()));
    }
    let version = r.u8()?;
    if version != ARCHIVE_VERSION {
        return Err(Error::Format(format!(
            "unsupported archive version {version}"
        )));
    }
    let seed = r.u64()?;
    let input_height = r.u32()?;
    let input_width = r.u32()?;
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        layers.push(match r.u8()? {
            0 => Layer::Conv2d {
                c_out: r.u32()?,
                c_in: r.u32()?,
                k: r.u32()?,
            },
            1 => Layer::Relu,
            2 => Layer::MaxPool2,
            3 => Layer::GlobalMaxPool,
            4 => Layer::Linear {
                c_in: r.u32()?,
                c_out: r.u32()?,
            },
            tag => return Err(Error::Format(format!("unknown layer tag {tag}"))),
        });
    }
    let mut params: Vec<Vec<Tensor<T>>> = vec![Vec::new(); layers.len()];
    let n_entries = r.u32()?;
    for _ in 0..n_entries {
        let start = r.pos;
        let layer = r.u32()?;
        let slot = r.u8()? as usize;
        let rank = r.u8()? as usize;
        let shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
        let len = len
            .filter(|&n| n.checked_mul(8).is_some_and(|b| b <= bytes.len()))
            .ok_or_else(|| {
                Error::Format(format!("entry shape {shape:?} exceeds the archive size"))
            })?;
        let data = (0..len)
            .map(|_| r.f64().map(T::lit))
            .collect::<Result<Vec<_>>>()?;
        let computed = crc32fast::hash(&bytes[start..r.pos]);
        let stored = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
        if computed != stored {
            return Err(Error::Format(format!(
                "checksum mismatch in entry for layer {layer}"
            )));
        }
        let group = params
            .get_mut(layer)
            .ok_or_else(|| Error::Format(format!("entry refers to missing layer {layer}")))?;
        if slot != group.len() {
            return Err(Error::Format(format!(
                "entries of layer {layer} out of order"
            )));
        }
        group.push(Tensor::new(shape, data)?);
    }
    if r.pos != bytes.len() {
        return Err(Error::Format("trailing bytes after last entry".into()));
    }
    let model = ToyModel::from_parts(layers, params, seed)?;
    Ok(WeightArchive {
        model,
        input_height,
        input_width,
    })
}
