//! Binary trace file format.
//!
//! Layout: magic "QPTB" | format version u16 LE | header length u32 LE |
//! UTF-8 key-value header | records. Records are little-endian IEEE-754
//! float32 interleaved I,Q, channel A record then channel B record,
//! signal/background alternating. Round-trips are bit-exact.

use super::{ChainConfig, IQTraceBatch};
use num_complex::Complex32;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const MAGIC: &[u8; 4] = b"QPTB";
pub const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("bad magic {found:?}; not a trace file or wrong endianness")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("file truncated inside record {record_index}")]
    Truncated { record_index: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn header_string(batch: &IQTraceBatch) -> String {
    let c = &batch.config;
    format!(
        "fs = {}\nf_if = {}\nrecord_len = {}\nn_records = {}\nseed = {}\nnoise_temp_K = {}\ngain = {}\ncarrier_ghz = {}\nvacuum = {}\nsource = {}\n",
        c.fs_msps,
        c.f_if_mhz,
        c.record_len,
        batch.n_records(),
        batch.seed,
        c.noise_temp_k,
        c.gain,
        c.carrier_ghz,
        c.vacuum_noise,
        batch.source_label,
    )
}

fn parse_header(text: &str) -> Result<BTreeMap<String, String>, FormatError> {
    let mut map = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| FormatError::BadHeader(format!("no '=' in line {line:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

fn header_f64(map: &BTreeMap<String, String>, key: &str) -> Result<f64, FormatError> {
    map.get(key)
        .ok_or_else(|| FormatError::BadHeader(format!("missing key {key}")))?
        .parse()
        .map_err(|e| FormatError::BadHeader(format!("key {key}: {e}")))
}

pub fn write_batch(batch: &IQTraceBatch, path: &Path) -> Result<(), FormatError> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = header_string(batch);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(header.as_bytes())?;
    for idx in 0..batch.n_records() {
        for rec in [&batch.records_a[idx], &batch.records_b[idx]] {
            for s in rec.iter() {
                w.write_all(&s.re.to_le_bytes())?;
                w.write_all(&s.im.to_le_bytes())?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<IQTraceBatch, FormatError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| FormatError::BadHeader("file shorter than magic".into()))?;
    if &magic != MAGIC {
        return Err(FormatError::BadMagic { found: magic });
    }
    let mut buf2 = [0u8; 2];
    r.read_exact(&mut buf2)
        .map_err(|_| FormatError::BadHeader("missing version".into()))?;
    let version = u16::from_le_bytes(buf2);
    if version != FORMAT_VERSION {
        return Err(FormatError::UnsupportedVersion(version));
    }
    let mut buf4 = [0u8; 4];
    r.read_exact(&mut buf4)
        .map_err(|_| FormatError::BadHeader("missing header length".into()))?;
    let header_len = u32::from_le_bytes(buf4) as usize;
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)
        .map_err(|_| FormatError::BadHeader("header shorter than declared".into()))?;
    let text = String::from_utf8(header_bytes)
        .map_err(|e| FormatError::BadHeader(e.to_string()))?;
    let map = parse_header(&text)?;

    let record_len = header_f64(&map, "record_len")? as usize;
    let n_records = header_f64(&map, "n_records")? as usize;
    let config = ChainConfig {
        f_if_mhz: header_f64(&map, "f_if")?,
        fs_msps: header_f64(&map, "fs")?,
        noise_temp_k: header_f64(&map, "noise_temp_K")?,
        record_len,
        gain: header_f64(&map, "gain").unwrap_or(1.0),
        carrier_ghz: header_f64(&map, "carrier_ghz").unwrap_or(7.062),
        vacuum_noise: header_f64(&map, "vacuum").unwrap_or(0.0),
    };
    let seed = header_f64(&map, "seed")? as u64;
    let source_label = map.get("source").cloned().unwrap_or_default();

    let mut records_a = Vec::with_capacity(n_records);
    let mut records_b = Vec::with_capacity(n_records);
    let mut sample_buf = vec![0u8; record_len * 8];
    for idx in 0..n_records {
        for side in 0..2 {
            if let Err(e) = r.read_exact(&mut sample_buf) {
                if e.kind() == std::io::ErrorKind::UnexpectedEof {
                    return Err(FormatError::Truncated { record_index: idx });
                }
                return Err(e.into());
            }
            let rec: Vec<Complex32> = sample_buf
                .chunks_exact(8)
                .map(|c| {
                    Complex32::new(
                        f32::from_le_bytes([c[0], c[1], c[2], c[3]]),
                        f32::from_le_bytes([c[4], c[5], c[6], c[7]]),
                    )
                })
                .collect();
            if side == 0 {
                records_a.push(rec);
            } else {
                records_b.push(rec);
            }
        }
    }
    Ok(IQTraceBatch {
        config,
        seed,
        source_label,
        records_a,
        records_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{synthesize, SourceSpec};
    use crate::pulse::{Pulse, PulseTrain};

    fn sample_batch() -> IQTraceBatch {
        let cfg = ChainConfig {
            record_len: 160,
            ..ChainConfig::default()
        };
        let src = SourceSpec::coherent_gaussian(8.0, 1.0, 4.0);
        let train = PulseTrain::new(Pulse::gaussian(2.0, 0.5), 4, 128.0).unwrap();
        synthesize(&cfg, &src, &train, 3, 99).unwrap()
    }

    #[test]
    fn round_trip_is_bitwise() {
        let batch = sample_batch();
        let dir = std::env::temp_dir().join("sps_tracefile_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("batch.qptb");
        write_batch(&batch, &path).unwrap();
        let back = read_batch(&path).unwrap();
        assert_eq!(batch.records_a, back.records_a);
        assert_eq!(batch.records_b, back.records_b);
        assert_eq!(batch.config, back.config);
        assert_eq!(batch.seed, back.seed);
        assert_eq!(batch.source_label, back.source_label);
    }

    #[test]
    fn truncation_names_the_record() {
        let batch = sample_batch();
        let dir = std::env::temp_dir().join("sps_tracefile_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trunc.qptb");
        write_batch(&batch, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let cut = bytes.len() - 160 * 8 - 4; // inside the last record pair
        std::fs::write(&path, &bytes[..cut]).unwrap();
        match read_batch(&path) {
            Err(FormatError::Truncated { record_index }) => assert_eq!(record_index, 5),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = std::env::temp_dir().join("sps_tracefile_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.qptb");
        std::fs::write(&path, b"BTPQxxxxxxxxxxxx").unwrap();
        assert!(matches!(
            read_batch(&path),
            Err(FormatError::BadMagic { .. })
        ));
    }
}
