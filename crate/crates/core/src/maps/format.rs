//! R2HM raster container.
//!
//! Layout: magic `R2HM`, u32 version (1), u32 height, u32 width,
//! u32 channels, u8 dtype, then the row-major, channel-interleaved payload,
//! all little endian. Dtypes: 0 = f32, 1 = u8, 2 = f64 (model blobs).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"R2HM";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DType {
    F32 = 0,
    U8 = 1,
    F64 = 2,
}

impl DType {
    fn from_u8(v: u8) -> Result<Self> {
        match v {
            0 => Ok(DType::F32),
            1 => Ok(DType::U8),
            2 => Ok(DType::F64),
            other => Err(Error::Format(format!("unknown dtype {other}"))),
        }
    }

    fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U8 => 1,
            DType::F64 => 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RasterData {
    F32(Vec<f32>),
    U8(Vec<u8>),
    F64(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: RasterData,
}

impl Raster {
    pub fn f32(height: usize, width: usize, channels: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), height * width * channels);
        Raster {
            height,
            width,
            channels,
            data: RasterData::F32(data),
        }
    }

    pub fn u8(height: usize, width: usize, channels: usize, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), height * width * channels);
        Raster {
            height,
            width,
            channels,
            data: RasterData::U8(data),
        }
    }

    pub fn f64(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), height * width * channels);
        Raster {
            height,
            width,
            channels,
            data: RasterData::F64(data),
        }
    }

    pub fn dtype(&self) -> DType {
        match self.data {
            RasterData::F32(_) => DType::F32,
            RasterData::U8(_) => DType::U8,
            RasterData::F64(_) => DType::F64,
        }
    }

    pub fn expect_channels(self, channels: usize) -> Result<Self> {
        if self.channels != channels {
            return Err(Error::DimMismatch {
                expected: format!("{channels} channels"),
                found: format!("{} channels", self.channels),
            });
        }
        Ok(self)
    }

    pub fn expect_shape(self, height: usize, width: usize, channels: usize) -> Result<Self> {
        if (self.height, self.width, self.channels) != (height, width, channels) {
            return Err(Error::DimMismatch {
                expected: format!("{height}x{width}x{channels}"),
                found: format!("{}x{}x{}", self.height, self.width, self.channels),
            });
        }
        Ok(self)
    }

    pub fn into_f32(self) -> Result<Vec<f32>> {
        match self.data {
            RasterData::F32(v) => Ok(v),
            _ => Err(Error::Format(format!("expected f32 payload, found {:?}", self.dtype()))),
        }
    }

    pub fn into_u8(self) -> Result<Vec<u8>> {
        match self.data {
            RasterData::U8(v) => Ok(v),
            _ => Err(Error::Format(format!("expected u8 payload, found {:?}", self.dtype()))),
        }
    }

    pub fn as_f64(&self) -> Result<&[f64]> {
        match &self.data {
            RasterData::F64(v) => Ok(v),
            _ => Err(Error::Format(format!("expected f64 payload, found {:?}", self.dtype()))),
        }
    }
}

fn wio(e: std::io::Error) -> Error {
    Error::Format(format!("write failed: {e}"))
}

pub fn write_raster<W: Write>(out: &mut W, r: &Raster) -> Result<()> {
    out.write_all(MAGIC).map_err(wio)?;
    for v in [VERSION, r.height as u32, r.width as u32, r.channels as u32] {
        out.write_all(&v.to_le_bytes()).map_err(wio)?;
    }
    out.write_all(&[r.dtype() as u8]).map_err(wio)?;
    match &r.data {
        RasterData::U8(v) => out.write_all(v).map_err(wio)?,
        RasterData::F32(v) => {
            let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
            out.write_all(&bytes).map_err(wio)?
        }
        RasterData::F64(v) => {
            let bytes: Vec<u8> = v.iter().flat_map(|x| x.to_le_bytes()).collect();
            out.write_all(&bytes).map_err(wio)?
        }
    }
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::Format(format!("truncated {what}"))
        } else {
            Error::Format(format!("read failed: {e}"))
        }
    })
}

pub fn read_raster<R: Read>(input: &mut R) -> Result<Raster> {
    let mut magic = [0u8; 4];
    read_exact(input, &mut magic, "header")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut head = [0u8; 17];
    read_exact(input, &mut head, "header")?;
    let word = |i: usize| u32::from_le_bytes(head[4 * i..4 * i + 4].try_into().unwrap());
    let version = word(0);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let (height, width, channels) = (word(1) as usize, word(2) as usize, word(3) as usize);
    let dtype = DType::from_u8(head[16])?;
    let count = height
        .checked_mul(width)
        .and_then(|c| c.checked_mul(channels))
        .ok_or_else(|| Error::Format("raster dimensions overflow".into()))?;
    let mut payload = vec![0u8; count * dtype.size()];
    read_exact(input, &mut payload, "payload")?;
    let data = match dtype {
        DType::U8 => RasterData::U8(payload),
        DType::F32 => RasterData::F32(
            payload
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
        DType::F64 => RasterData::F64(
            payload
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ),
    };
    Ok(Raster {
        height,
        width,
        channels,
        data,
    })
}

pub fn save_map(path: &Path, r: &Raster) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_raster(&mut w, r)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_map(path: &Path) -> Result<Raster> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    read_raster(&mut BufReader::new(f)).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bytes(r: &Raster) -> Vec<u8> {
        let mut v = Vec::new();
        write_raster(&mut v, r).unwrap();
        v
    }

    #[test]
    fn header_layout() {
        let b = bytes(&Raster::u8(2, 3, 1, vec![0, 1, 2, 3, 4, 5]));
        assert_eq!(&b[..4], b"R2HM");
        assert_eq!(u32::from_le_bytes(b[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(b[8..12].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(b[12..16].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(b[16..20].try_into().unwrap()), 1);
        assert_eq!(b[20], 1);
        assert_eq!(b.len(), 21 + 6);
    }

    #[test]
    fn wrong_magic() {
        let mut b = bytes(&Raster::u8(1, 1, 1, vec![7]));
        b[0] = b'X';
        assert!(matches!(read_raster(&mut b.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload() {
        let b = bytes(&Raster::f32(2, 2, 1, vec![1.0; 4]));
        let cut = &b[..b.len() - 1];
        let err = read_raster(&mut &cut[..]).unwrap_err();
        assert!(err.to_string().contains("truncated"));
    }

    #[test]
    fn channel_mismatch() {
        let b = bytes(&Raster::f32(1, 2, 3, vec![0.5; 6]));
        let r = read_raster(&mut b.as_slice()).unwrap();
        assert!(matches!(r.expect_channels(1), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.r2hm");
        let r = Raster::f32(2, 2, 1, vec![1.5, -0.25, f32::MIN_POSITIVE, 3.0]);
        save_map(&p, &r).unwrap();
        assert_eq!(load_map(&p).unwrap(), r);
        assert!(matches!(load_map(&dir.path().join("missing")), Err(Error::Io { .. })));
    }

    proptest! {
        #[test]
        fn f32_round_trip_bit_exact(h in 1usize..6, w in 1usize..6, c in 1usize..4, seed in any::<u32>()) {
            let data: Vec<f32> = (0..h * w * c)
                .map(|i| f32::from_bits(seed.wrapping_mul(2654435761).wrapping_add(i as u32 * 40503) & 0x7f7f_ffff))
                .collect();
            let r = Raster::f32(h, w, c, data);
            let back = read_raster(&mut bytes(&r).as_slice()).unwrap();
            let (RasterData::F32(a), RasterData::F32(b)) = (&r.data, &back.data) else { panic!() };
            prop_assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
        }

        #[test]
        fn u8_round_trip(data in proptest::collection::vec(any::<u8>(), 1..64)) {
            let r = Raster::u8(1, data.len(), 1, data);
            prop_assert_eq!(read_raster(&mut bytes(&r).as_slice()).unwrap(), r);
        }
    }
}
