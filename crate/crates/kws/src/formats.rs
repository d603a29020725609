//! Little-endian binary formats.
//!
//! * `EVRS` event raster: magic, version u16, channels u16, timesteps u32,
//!   bin_ms f32, then channel-major u16 counts.
//! * `SYNQ` quantised model: magic, version u16, layer count u8, then per
//!   layer rows u16, cols u16, d_syn u8[cols], d_mem u8[cols],
//!   threshold i16[cols], weight scale f32, weight shift u8 and i8 weights
//!   row-major; trailing CRC32 of everything before it.
//! * `SYNF` float checkpoint: as `SYNQ` with f32 thresholds, no scale or
//!   shift, and f32 weights.

use std::fs;
use std::path::Path;

use snnkws_core::afe::EventRaster;
use snnkws_core::snn::{FloatLayer, FloatModel, QuantizedLayer, QuantizedModel};

use crate::error::{KwsError, Result};

pub const EVRS_MAGIC: &[u8; 4] = b"EVRS";
pub const SYNQ_MAGIC: &[u8; 4] = b"SYNQ";
pub const SYNF_MAGIC: &[u8; 4] = b"SYNF";
pub const VERSION: u16 = 1;

type Parse<T> = std::result::Result<T, String>;

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Parse<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        match end {
            Some(end) => {
                let s = &self.buf[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(format!("truncated at byte {} (needed {n} more)", self.pos)),
        }
    }

    fn array<const N: usize>(&mut self) -> Parse<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("length checked"))
    }

    fn u8(&mut self) -> Parse<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Parse<u16> {
        Ok(u16::from_le_bytes(self.array()?))
    }

    fn u32(&mut self) -> Parse<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn f32(&mut self) -> Parse<f32> {
        Ok(f32::from_le_bytes(self.array()?))
    }

    fn header(&mut self, magic: &[u8; 4]) -> Parse<()> {
        let m = self.take(4)?;
        if m != magic {
            return Err(format!(
                "bad magic {:?}, expected {:?}",
                String::from_utf8_lossy(m),
                String::from_utf8_lossy(magic)
            ));
        }
        let v = self.u16()?;
        if v != VERSION {
            return Err(format!("unsupported version {v}"));
        }
        Ok(())
    }

    fn finish(&self) -> Parse<()> {
        if self.pos != self.buf.len() {
            return Err(format!("{} trailing bytes", self.buf.len() - self.pos));
        }
        Ok(())
    }
}

fn dim16(what: &str, n: usize) -> Parse<u16> {
    u16::try_from(n).map_err(|_| format!("{what} {n} does not fit in 16 bits"))
}

fn with_crc(mut body: Vec<u8>) -> Vec<u8> {
    let crc = crc32fast::hash(&body);
    body.extend_from_slice(&crc.to_le_bytes());
    body
}

fn check_crc(bytes: &[u8]) -> Parse<&[u8]> {
    if bytes.len() < 4 {
        return Err("file too short for a checksum".into());
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
    let actual = crc32fast::hash(body);
    if stored != actual {
        return Err(format!("checksum mismatch (stored {stored:08x}, computed {actual:08x})"));
    }
    Ok(body)
}

pub fn raster_to_bytes(r: &EventRaster) -> Parse<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + 2 * r.counts().len());
    out.extend_from_slice(EVRS_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim16("channel count", r.channels())?.to_le_bytes());
    let steps = u32::try_from(r.timesteps()).map_err(|_| "too many timesteps".to_string())?;
    out.extend_from_slice(&steps.to_le_bytes());
    out.extend_from_slice(&(r.bin_ms() as f32).to_le_bytes());
    for &c in r.counts() {
        out.extend_from_slice(&c.to_le_bytes());
    }
    Ok(out)
}

pub fn raster_from_bytes(bytes: &[u8]) -> Parse<EventRaster> {
    let mut rd = Reader::new(bytes);
    rd.header(EVRS_MAGIC)?;
    let channels = usize::from(rd.u16()?);
    let steps = rd.u32()? as usize;
    let bin_ms = f64::from(rd.f32()?);
    let n = channels.checked_mul(steps).ok_or("raster dimensions overflow")?;
    let counts = rd.take(n.checked_mul(2).ok_or("raster dimensions overflow")?)?;
    let counts = counts.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect();
    rd.finish()?;
    EventRaster::from_counts(channels, steps, bin_ms, counts).map_err(|e| e.to_string())
}

pub fn synq_to_bytes(m: &QuantizedModel) -> Parse<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(SYNQ_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(u8::try_from(m.layers.len()).map_err(|_| "more than 255 layers".to_string())?);
    for l in &m.layers {
        out.extend_from_slice(&dim16("rows", l.inputs)?.to_le_bytes());
        out.extend_from_slice(&dim16("cols", l.outputs)?.to_le_bytes());
        out.extend_from_slice(&l.syn_shift);
        out.extend_from_slice(&l.mem_shift);
        for &t in &l.threshold {
            out.extend_from_slice(&t.to_le_bytes());
        }
        out.extend_from_slice(&l.weight_scale.to_le_bytes());
        out.push(l.weight_shift);
        out.extend(l.weights.iter().map(|&w| w as u8));
    }
    Ok(with_crc(out))
}

pub fn synq_from_bytes(bytes: &[u8]) -> Parse<QuantizedModel> {
    let mut rd = Reader::new(check_crc(bytes)?);
    rd.header(SYNQ_MAGIC)?;
    let n = rd.u8()?;
    let mut layers = Vec::with_capacity(usize::from(n));
    for _ in 0..n {
        let inputs = usize::from(rd.u16()?);
        let outputs = usize::from(rd.u16()?);
        let syn_shift = rd.take(outputs)?.to_vec();
        let mem_shift = rd.take(outputs)?.to_vec();
        let threshold = rd.take(2 * outputs)?.chunks_exact(2).map(|c| i16::from_le_bytes([c[0], c[1]])).collect();
        let weight_scale = rd.f32()?;
        let weight_shift = rd.u8()?;
        let weights = rd.take(inputs * outputs)?.iter().map(|&b| b as i8).collect();
        layers.push(QuantizedLayer {
            inputs,
            outputs,
            weights,
            weight_shift,
            weight_scale,
            syn_shift,
            mem_shift,
            threshold,
        });
    }
    rd.finish()?;
    let model = QuantizedModel { layers };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

pub fn synf_to_bytes(m: &FloatModel) -> Parse<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(SYNF_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(u8::try_from(m.layers.len()).map_err(|_| "more than 255 layers".to_string())?);
    for l in &m.layers {
        out.extend_from_slice(&dim16("rows", l.inputs)?.to_le_bytes());
        out.extend_from_slice(&dim16("cols", l.outputs)?.to_le_bytes());
        out.extend_from_slice(&l.syn_shift);
        out.extend_from_slice(&l.mem_shift);
        for &t in &l.threshold {
            out.extend_from_slice(&(t as f32).to_le_bytes());
        }
        for &w in &l.weights {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
    }
    Ok(with_crc(out))
}

pub fn synf_from_bytes(bytes: &[u8]) -> Parse<FloatModel> {
    let mut rd = Reader::new(check_crc(bytes)?);
    rd.header(SYNF_MAGIC)?;
    let n = rd.u8()?;
    let mut layers = Vec::with_capacity(usize::from(n));
    for _ in 0..n {
        let inputs = usize::from(rd.u16()?);
        let outputs = usize::from(rd.u16()?);
        let syn_shift = rd.take(outputs)?.to_vec();
        let mem_shift = rd.take(outputs)?.to_vec();
        let threshold = (0..outputs).map(|_| rd.f32().map(f64::from)).collect::<Parse<Vec<_>>>()?;
        let weights = (0..inputs * outputs).map(|_| rd.f32().map(f64::from)).collect::<Parse<Vec<_>>>()?;
        layers.push(FloatLayer { inputs, outputs, weights, syn_shift, mem_shift, threshold });
    }
    rd.finish()?;
    let model = FloatModel { layers };
    model.validate().map_err(|e| e.to_string())?;
    Ok(model)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| KwsError::io(path, e))
}

fn write_bytes(path: &Path, bytes: Parse<Vec<u8>>) -> Result<()> {
    let bytes = bytes.map_err(|d| KwsError::format(path, d))?;
    fs::write(path, bytes).map_err(|e| KwsError::io(path, e))
}

pub fn read_raster(path: &Path) -> Result<EventRaster> {
    raster_from_bytes(&read_bytes(path)?).map_err(|d| KwsError::format(path, d))
}

pub fn write_raster(path: &Path, r: &EventRaster) -> Result<()> {
    write_bytes(path, raster_to_bytes(r))
}

pub fn read_synq(path: &Path) -> Result<QuantizedModel> {
    synq_from_bytes(&read_bytes(path)?).map_err(|d| KwsError::format(path, d))
}

pub fn write_synq(path: &Path, m: &QuantizedModel) -> Result<()> {
    write_bytes(path, synq_to_bytes(m))
}

pub fn read_synf(path: &Path) -> Result<FloatModel> {
    synf_from_bytes(&read_bytes(path)?).map_err(|d| KwsError::format(path, d))
}

pub fn write_synf(path: &Path, m: &FloatModel) -> Result<()> {
    write_bytes(path, synf_to_bytes(m))
}
