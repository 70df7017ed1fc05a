//! On-disk model bundles: a one-line header followed by JSON.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{HnnError, Result};

pub const BUNDLE_MAGIC: &str = "HNN-BUNDLE";
pub const BUNDLE_VERSION: u32 = 1;

pub fn write_bundle<T: Serialize, W: Write>(mut w: W, kind: &str, value: &T) -> Result<()> {
    writeln!(w, "{BUNDLE_MAGIC} {BUNDLE_VERSION} {kind}")?;
    serde_json::to_writer(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_bundle<T: DeserializeOwned, R: Read>(r: R, kind: &str) -> Result<T> {
    let mut reader = BufReader::new(r);
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    match parts.as_slice() {
        [magic, version, k] if *magic == BUNDLE_MAGIC => {
            let v: u32 = version
                .parse()
                .map_err(|_| HnnError::Parse(format!("bad bundle version `{version}`")))?;
            if v != BUNDLE_VERSION {
                return Err(HnnError::Parse(format!(
                    "bundle version {v} not supported (expected {BUNDLE_VERSION})"
                )));
            }
            if *k != kind {
                return Err(HnnError::Parse(format!("bundle holds `{k}`, expected `{kind}`")));
            }
        }
        _ => return Err(HnnError::Parse("missing bundle header".into())),
    }
    Ok(serde_json::from_reader(reader)?)
}

pub fn save_bundle<T: Serialize>(path: impl AsRef<Path>, kind: &str, value: &T) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_bundle(std::io::BufWriter::new(file), kind, value)
}

pub fn load_bundle<T: DeserializeOwned>(path: impl AsRef<Path>, kind: &str) -> Result<T> {
    read_bundle(std::fs::File::open(path)?, kind)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let v = vec![0.1f64, 1.0 / 3.0, -2.5e-300, f64::MAX];
        let mut buf = Vec::new();
        write_bundle(&mut buf, "floats", &v).unwrap();
        let back: Vec<f64> = read_bundle(buf.as_slice(), "floats").unwrap();
        assert_eq!(v, back);
    }

    #[test]
    fn wrong_kind_or_version_rejected() {
        let mut buf = Vec::new();
        write_bundle(&mut buf, "a", &1u8).unwrap();
        assert!(matches!(read_bundle::<u8, _>(buf.as_slice(), "b"), Err(HnnError::Parse(_))));
        let bad = b"HNN-BUNDLE 9 a\n1\n";
        assert!(matches!(read_bundle::<u8, _>(&bad[..], "a"), Err(HnnError::Parse(_))));
        assert!(read_bundle::<u8, _>(&b"1\n"[..], "a").is_err());
    }
}
