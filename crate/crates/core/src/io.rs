//! On-disk formats: the F64R raster container, CSV helpers, 8-bit PGM export and
//! plain-text key=value configs.
//!
//! F64R layout (all little-endian): magic `F64R`, version u16 (= 1), ndim u16,
//! ndim × u64 extents, then row-major binary64 payload.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::{Error, Result};

pub const F64R_MAGIC: &[u8; 4] = b"F64R";
pub const F64R_VERSION: u16 = 1;

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn encode_f64r(extents: &[usize], data: &[f64]) -> Result<Vec<u8>> {
    let total: usize = extents.iter().product();
    if total != data.len() {
        return Err(Error::Shape(format!("extents {extents:?} hold {total} values, got {}", data.len())));
    }
    let mut out = Vec::with_capacity(8 + 8 * extents.len() + 8 * data.len());
    out.extend_from_slice(F64R_MAGIC);
    out.extend_from_slice(&F64R_VERSION.to_le_bytes());
    out.extend_from_slice(&(extents.len() as u16).to_le_bytes());
    for &e in extents {
        out.extend_from_slice(&(e as u64).to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_f64r(bytes: &[u8]) -> Result<(Vec<usize>, Vec<f64>)> {
    let bad = |m: &str| Error::Format(format!("F64R: {m}"));
    if bytes.len() < 8 || &bytes[..4] != F64R_MAGIC {
        return Err(bad("bad magic"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != F64R_VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let ndim = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let header = 8 + 8 * ndim;
    if bytes.len() < header {
        return Err(bad("truncated header"));
    }
    let mut extents = Vec::with_capacity(ndim);
    let mut total: u128 = 1;
    for i in 0..ndim {
        let e = u64::from_le_bytes(bytes[8 + 8 * i..16 + 8 * i].try_into().unwrap());
        total *= e as u128;
        extents.push(e as usize);
    }
    if (bytes.len() - header) as u128 != 8 * total {
        return Err(bad(&format!("payload is {} bytes, extents need {}", bytes.len() - header, 8 * total)));
    }
    let data = bytes[header..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((extents, data))
}

pub fn write_f64r(path: impl AsRef<Path>, extents: &[usize], data: &[f64]) -> Result<()> {
    let bytes = encode_f64r(extents, data)?;
    std::fs::File::create(path)?.write_all(&bytes)?;
    Ok(())
}

pub fn read_f64r(path: impl AsRef<Path>) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    decode_f64r(&bytes)
}

/// Binary 8-bit PGM of a 2D raster (axis 0 = rows), linearly mapped from [min, max].
pub fn encode_pgm(extents: &[usize], data: &[f64]) -> Result<Vec<u8>> {
    if extents.len() != 2 || extents[0] * extents[1] != data.len() {
        return Err(Error::Shape("PGM export needs a 2D raster".into()));
    }
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P5\n{} {}\n255\n", extents[1], extents[0]).into_bytes();
    out.extend(data.iter().map(|v| ((v - lo) * scale).round().clamp(0.0, 255.0) as u8));
    Ok(out)
}

/// Ordered key=value pairs; `#` starts a comment line, later keys override earlier ones.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        let value = value.to_string();
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn get_parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Constraint(format!("config key '{key}': cannot parse '{v}'"))),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Entries of `other` override ours.
    pub fn merge(&mut self, other: &KeyValues) {
        for (k, v) in &other.entries {
            self.set(k, v);
        }
    }
}

impl FromStr for KeyValues {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (no, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("config line {}: expected key=value", no + 1)))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

impl fmt::Display for KeyValues {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f64r_roundtrip_and_layout() {
        let data = [1.0, -2.5, 3.25, 0.0, f64::MIN_POSITIVE, 1e300];
        let bytes = encode_f64r(&[2, 3], &data).unwrap();
        assert_eq!(&bytes[..4], b"F64R");
        assert_eq!(&bytes[4..8], &[1, 0, 2, 0]);
        assert_eq!(&bytes[8..16], &2u64.to_le_bytes());
        assert_eq!(bytes.len(), 8 + 16 + 48);
        let (e, d) = decode_f64r(&bytes).unwrap();
        assert_eq!(e, vec![2, 3]);
        assert_eq!(d, data);
    }

    #[test]
    fn f64r_rejects_malformed() {
        let bytes = encode_f64r(&[2, 2], &[0.0; 4]).unwrap();
        assert!(matches!(decode_f64r(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut b2 = bytes.clone();
        b2[0] = b'X';
        assert!(matches!(decode_f64r(&b2), Err(Error::Format(_))));
        let mut b3 = bytes;
        b3[4] = 2;
        assert!(matches!(decode_f64r(&b3), Err(Error::Format(_))));
        assert!(matches!(decode_f64r(b"F6"), Err(Error::Format(_))));
    }

    #[test]
    fn keyvalues_parse_and_override() {
        let kv: KeyValues = "# comment\ndim = 2\nc1=0.5\n\nc1=0.25\n".parse().unwrap();
        assert_eq!(kv.get("dim"), Some("2"));
        assert_eq!(kv.get_parsed::<f64>("c1").unwrap(), Some(0.25));
        assert!(kv.get_parsed::<u32>("c1").is_err());
        assert!("novalue".parse::<KeyValues>().is_err());
        let mut a = kv.clone();
        let b: KeyValues = "dim=3".parse().unwrap();
        a.merge(&b);
        assert_eq!(a.get("dim"), Some("3"));
    }

    #[test]
    fn pgm_header() {
        let p = encode_pgm(&[2, 3], &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(p.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(*p.last().unwrap(), 255);
        assert_eq!(p[11], 0);
    }
}
