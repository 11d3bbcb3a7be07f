//! Flat binary checkpoints.
//!
//! ```text
//! magic    8 bytes  "SYMMARL\0"
//! version  u32 LE   (1)
//! count    u32 LE   number of records
//! record*  tag u8, name_len u16 LE, name utf-8, payload
//!
//! tag 0 (network): activation u8 (0 elu, 1 tanh), activate_output u8,
//!                  output_gain f64, n_widths u32, widths u32*, n_params u64,
//!                  params f64* (per layer: weight row-major in×out, then bias)
//! tag 1 (vector):  len u64, f64*
//! tag 2 (text):    len u32, utf-8 bytes
//! ```
//! All numbers are little-endian.

use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};

use super::mlp::{Activation, Layer, NetParams};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"SYMMARL\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum Record {
    Net(NetParams),
    Vector(Vec<f64>),
    Text(String),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    records: Vec<(String, Record)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, record: Record) -> &mut Self {
        self.records.push((name.into(), record));
        self
    }

    pub fn records(&self) -> &[(String, Record)] {
        &self.records
    }

    pub fn get(&self, name: &str) -> Option<&Record> {
        self.records.iter().find(|(n, _)| n == name).map(|(_, r)| r)
    }

    pub fn net(&self, name: &str) -> Result<&NetParams> {
        match self.get(name) {
            Some(Record::Net(n)) => Ok(n),
            _ => Err(Error::Unsupported(format!("checkpoint has no network record `{name}`"))),
        }
    }

    pub fn vector(&self, name: &str) -> Result<&[f64]> {
        match self.get(name) {
            Some(Record::Vector(v)) => Ok(v),
            _ => Err(Error::Unsupported(format!("checkpoint has no vector record `{name}`"))),
        }
    }

    pub fn text(&self, name: &str) -> Result<&str> {
        match self.get(name) {
            Some(Record::Text(t)) => Ok(t),
            _ => Err(Error::Unsupported(format!("checkpoint has no text record `{name}`"))),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u32).to_le_bytes());
        for (name, record) in &self.records {
            let tag: u8 = match record {
                Record::Net(_) => 0,
                Record::Vector(_) => 1,
                Record::Text(_) => 2,
            };
            out.push(tag);
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            match record {
                Record::Net(net) => {
                    out.push(match net.activation {
                        Activation::Elu => 0,
                        Activation::Tanh => 1,
                    });
                    out.push(net.activate_output as u8);
                    out.extend_from_slice(&net.output_gain.to_le_bytes());
                    let widths = net.widths();
                    out.extend_from_slice(&(widths.len() as u32).to_le_bytes());
                    for w in widths {
                        out.extend_from_slice(&(w as u32).to_le_bytes());
                    }
                    let flat = net.to_flat();
                    out.extend_from_slice(&(flat.len() as u64).to_le_bytes());
                    for v in flat {
                        out.extend_from_slice(&v.to_le_bytes());
                    }
                }
                Record::Vector(v) => {
                    out.extend_from_slice(&(v.len() as u64).to_le_bytes());
                    for x in v {
                        out.extend_from_slice(&x.to_le_bytes());
                    }
                }
                Record::Text(t) => {
                    out.extend_from_slice(&(t.len() as u32).to_le_bytes());
                    out.extend_from_slice(t.as_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let mut r = Reader { bytes, at: 0, origin };
        if r.take(8)? != MAGIC {
            return Err(Error::format(origin, "bad magic tag"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(origin, format!("unsupported checkpoint version {version}")));
        }
        let count = r.u32()?;
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let tag = r.u8()?;
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec()).map_err(|_| Error::format(origin, "record name is not utf-8"))?;
            let record = match tag {
                0 => {
                    let activation = match r.u8()? {
                        0 => Activation::Elu,
                        1 => Activation::Tanh,
                        other => return Err(Error::format(origin, format!("unknown activation {other}"))),
                    };
                    let activate_output = r.u8()? != 0;
                    let output_gain = r.f64()?;
                    let n_widths = r.u32()? as usize;
                    if n_widths < 2 {
                        return Err(Error::format(origin, "network needs at least two widths"));
                    }
                    let widths = (0..n_widths).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>>>()?;
                    let n_params = r.u64()? as usize;
                    let expected: usize = widths.windows(2).map(|p| p[0] * p[1] + p[1]).sum();
                    if n_params != expected {
                        return Err(Error::format(
                            origin,
                            format!("record `{name}` declares {n_params} parameters, arch implies {expected}"),
                        ));
                    }
                    let mut layers = Vec::new();
                    for pair in widths.windows(2) {
                        let w = (0..pair[0] * pair[1]).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                        let b = (0..pair[1]).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
                        layers.push(Layer {
                            weight: Array2::from_shape_vec((pair[0], pair[1]), w).expect("shape"),
                            bias: Array1::from_vec(b),
                        });
                    }
                    let mut net = NetParams::from_layers(layers, activation)?;
                    net.activate_output = activate_output;
                    net.output_gain = output_gain;
                    Record::Net(net)
                }
                1 => {
                    let len = r.u64()? as usize;
                    Record::Vector((0..len).map(|_| r.f64()).collect::<Result<Vec<_>>>()?)
                }
                2 => {
                    let len = r.u32()? as usize;
                    Record::Text(String::from_utf8(r.take(len)?.to_vec()).map_err(|_| Error::format(origin, "text record is not utf-8"))?)
                }
                other => return Err(Error::format(origin, format!("unknown record tag {other}"))),
            };
            records.push((name, record));
        }
        if r.at != bytes.len() {
            return Err(Error::format(origin, "trailing bytes after last record"));
        }
        Ok(Self { records })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, path)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    at: usize,
    origin: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.at + n > self.bytes.len() {
            return Err(Error::format(self.origin, "truncated checkpoint"));
        }
        let s = &self.bytes[self.at..self.at + n];
        self.at += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
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
    use crate::net::NetArch;

    #[test]
    fn round_trip_preserves_bits() {
        let net = NetParams::init(&NetArch::from_widths(&[4, 8, 2]).unwrap().with_output_gain(0.01), 3);
        let mut ck = Checkpoint::new();
        ck.push("phi", Record::Net(net.clone()))
            .push("log_std", Record::Vector(vec![-0.5, 0.25]))
            .push("meta", Record::Text("{\"variant\":\"masa\"}".into()));
        let bytes = ck.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = Checkpoint::from_bytes(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, ck);
        assert_eq!(back.net("phi").unwrap().to_flat(), net.to_flat());
    }

    #[test]
    fn header_layout() {
        let mut ck = Checkpoint::new();
        ck.push("v", Record::Vector(vec![1.0]));
        let bytes = ck.to_bytes();
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), VERSION);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 1);
        assert_eq!(bytes[16], 1);
        assert_eq!(&bytes[bytes.len() - 8..], &1.0f64.to_le_bytes());
    }

    #[test]
    fn truncated_file_rejected() {
        let mut ck = Checkpoint::new();
        ck.push("v", Record::Vector(vec![1.0, 2.0]));
        let bytes = ck.to_bytes();
        let err = Checkpoint::from_bytes(&bytes[..bytes.len() - 3], Path::new("x.ckpt")).unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let err = Checkpoint::from_bytes(b"NOTMAGIC\x01\0\0\0\0\0\0\0", Path::new("x.ckpt")).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
    }
}
