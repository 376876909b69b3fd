//! Flat parameter container.
//!
//! Layout:
//!
//! ```text
//! offset 0   4 bytes   magic "DMFP"
//! offset 4   4 bytes   u32 LE, byte length H of the JSON header
//! offset 8   H bytes   UTF-8 JSON ContainerHeader
//! offset 8+H           f64 LE values, tensors in header order, row-major
//! ```
//!
//! The value count must equal the sum of the tensor shape products exactly.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const CONTAINER_MAGIC: &[u8; 4] = b"DMFP";
pub const CONTAINER_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
}

impl TensorEntry {
    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContainerHeader {
    pub format_version: u32,
    pub seed: u64,
    pub tensors: Vec<TensorEntry>,
    /// Free-form producer metadata.
    #[serde(default)]
    pub metadata: serde_json::Value,
}

pub fn write_container(w: &mut impl Write, header: &ContainerHeader, values: &[f64]) -> Result<()> {
    let expected: usize = header.tensors.iter().map(TensorEntry::numel).sum();
    if expected != values.len() {
        return Err(Error::Shape(format!(
            "header describes {expected} values, got {}",
            values.len()
        )));
    }
    let json = serde_json::to_vec(header)?;
    let len = u32::try_from(json.len()).map_err(|_| Error::Format("container header too large".into()))?;
    w.write_all(CONTAINER_MAGIC)?;
    w.write_all(&len.to_le_bytes())?;
    w.write_all(&json)?;
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_container(r: &mut impl Read) -> Result<(ContainerHeader, Vec<f64>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() < 8 || &bytes[..4] != CONTAINER_MAGIC {
        return Err(Error::Format("not a parameter container (bad magic)".into()));
    }
    let hlen = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
    let body = bytes
        .get(8..8 + hlen)
        .ok_or_else(|| Error::Format("truncated container header".into()))?;
    let header: ContainerHeader = serde_json::from_slice(body)?;
    if header.format_version != CONTAINER_VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {}",
            header.format_version
        )));
    }
    let payload = &bytes[8 + hlen..];
    let expected: usize = header.tensors.iter().map(TensorEntry::numel).sum();
    if payload.len() != expected * 8 {
        return Err(Error::Format(format!(
            "container holds {} bytes of values, header needs {}",
            payload.len(),
            expected * 8
        )));
    }
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> ContainerHeader {
        ContainerHeader {
            format_version: CONTAINER_VERSION,
            seed: 42,
            tensors: vec![
                TensorEntry {
                    name: "a".into(),
                    shape: vec![2, 3],
                    stride: Some(2),
                },
                TensorEntry {
                    name: "b".into(),
                    shape: vec![2],
                    stride: None,
                },
            ],
            metadata: serde_json::json!({"note": "x"}),
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let values: Vec<f64> = vec![0.1, -0.0, f64::MIN_POSITIVE, 1e300, -3.5, 7.0, 1.0 / 3.0, 2.0];
        let mut buf = Vec::new();
        write_container(&mut buf, &header(), &values).unwrap();
        assert_eq!(&buf[..4], b"DMFP");
        let (h, v) = read_container(&mut buf.as_slice()).unwrap();
        assert_eq!(h, header());
        assert_eq!(
            v.iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
            values.iter().map(|x| x.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut buf = Vec::new();
        assert!(write_container(&mut buf, &header(), &[1.0]).is_err());
        write_container(&mut buf, &header(), &[0.0; 8]).unwrap();
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_container(&mut &truncated[..]), Err(Error::Format(_))));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_container(&mut bad.as_slice()), Err(Error::Format(_))));
    }
}
