//! Feature file encodings.
//!
//! Text: a `dim=<d>` header, then one region per line as
//! `x y w h v1 ... vd` with shortest round-trip decimals.
//!
//! Binary: magic `MCF1`, little-endian `u32` dim and `u32` region count,
//! then per region four `u32` geometry fields and `d` `f32` values.

use std::fmt::Write as _;
use std::path::Path;

use super::{RegionFeature, RegionGeometry};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"MCF1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureEncoding {
    #[default]
    Text,
    Binary,
}

pub fn write_features_text(regions: &[RegionFeature], dim: usize) -> Result<String> {
    let mut out = format!("dim={dim}\n");
    for r in regions {
        check_region(r, dim)?;
        let g = r.geometry;
        let _ = write!(out, "{} {} {} {}", g.x, g.y, g.width, g.height);
        for v in &r.activation {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn parse_features_text(
    text: &str,
    expected_dim: usize,
    source: &str,
) -> Result<Vec<RegionFeature>> {
    let mut lines = text.lines().enumerate();
    let dim = loop {
        match lines.next() {
            None => return Err(Error::Truncated(format!("{source}: missing dim header"))),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((i, l)) => {
                let d = l
                    .trim()
                    .strip_prefix("dim=")
                    .and_then(|d| d.parse::<usize>().ok())
                    .ok_or_else(|| Error::parse(source, i + 1, "expected `dim=<d>` header"))?;
                break d;
            }
        }
    };
    if dim != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            found: dim,
        });
    }
    let mut regions = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() < 4 {
            return Err(Error::parse(source, i + 1, "missing region geometry"));
        }
        let mut geo = [0u32; 4];
        for (slot, f) in geo.iter_mut().zip(&fields[..4]) {
            *slot = f
                .parse()
                .map_err(|_| Error::parse(source, i + 1, format!("bad geometry field {f:?}")))?;
        }
        let values = &fields[4..];
        if values.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: values.len(),
            });
        }
        let mut activation = Vec::with_capacity(dim);
        for (j, f) in values.iter().enumerate() {
            let v: f32 = f
                .parse()
                .map_err(|_| Error::parse(source, i + 1, format!("bad value {f:?}")))?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    value: v as f64,
                    position: j,
                });
            }
            activation.push(v);
        }
        regions.push(RegionFeature {
            geometry: geometry(geo),
            activation,
        });
    }
    Ok(regions)
}

pub fn write_features_binary(regions: &[RegionFeature], dim: usize) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(12 + regions.len() * (16 + 4 * dim));
    out.extend_from_slice(BINARY_MAGIC);
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(regions.len() as u32).to_le_bytes());
    for r in regions {
        check_region(r, dim)?;
        let g = r.geometry;
        for v in [g.x, g.y, g.width, g.height] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &r.activation {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn parse_features_binary(bytes: &[u8], expected_dim: usize) -> Result<Vec<RegionFeature>> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != BINARY_MAGIC {
        return Err(Error::Truncated("bad magic, expected MCF1".into()));
    }
    let dim = cur.u32()? as usize;
    if dim != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            found: dim,
        });
    }
    let count = cur.u32()? as usize;
    let record = 16 + 4 * dim;
    if bytes.len() - cur.pos != count * record {
        return Err(Error::Truncated(format!(
            "{count} regions of {record} bytes declared, {} bytes present",
            bytes.len() - cur.pos
        )));
    }
    let mut regions = Vec::with_capacity(count);
    for _ in 0..count {
        let geo = [cur.u32()?, cur.u32()?, cur.u32()?, cur.u32()?];
        let mut activation = Vec::with_capacity(dim);
        for j in 0..dim {
            let v = f32::from_le_bytes(cur.take(4)?.try_into().unwrap());
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    value: v as f64,
                    position: j,
                });
            }
            activation.push(v);
        }
        regions.push(RegionFeature {
            geometry: geometry(geo),
            activation,
        });
    }
    Ok(regions)
}

/// Reads either encoding, chosen by the leading magic bytes.
pub fn load_features(path: &Path, expected_dim: usize) -> Result<Vec<RegionFeature>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(BINARY_MAGIC) {
        parse_features_binary(&bytes, expected_dim)
    } else {
        let text = String::from_utf8(bytes)
            .map_err(|_| Error::parse(path.display().to_string(), 0, "not UTF-8 text"))?;
        parse_features_text(&text, expected_dim, &path.display().to_string())
    }
}

pub fn save_features(
    path: &Path,
    regions: &[RegionFeature],
    dim: usize,
    encoding: FeatureEncoding,
) -> Result<()> {
    let bytes = match encoding {
        FeatureEncoding::Text => write_features_text(regions, dim)?.into_bytes(),
        FeatureEncoding::Binary => write_features_binary(regions, dim)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn check_region(r: &RegionFeature, dim: usize) -> Result<()> {
    if r.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: r.dim(),
        });
    }
    if let Some((j, v)) = r
        .activation
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::NonFinite {
            value: *v as f64,
            position: j,
        });
    }
    Ok(())
}

fn geometry([x, y, width, height]: [u32; 4]) -> RegionGeometry {
    RegionGeometry {
        x,
        y,
        width,
        height,
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated(format!(
                "needed {n} bytes at offset {}",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> Vec<RegionFeature> {
        vec![
            RegionFeature {
                geometry: geometry([0, 0, 128, 128]),
                activation: vec![0.1, 2.5, -3.0, 1e-7],
            },
            RegionFeature {
                geometry: geometry([32, 0, 128, 128]),
                activation: vec![0.0, 0.333_333_34, 7.0, 12345.678],
            },
        ]
    }

    #[test]
    fn two_regions_text() {
        let text = write_features_text(&sample(), 4).unwrap();
        assert!(text.starts_with("dim=4\n0 0 128 128 0.1 2.5 -3 0.0000001\n"));
        assert_eq!(parse_features_text(&text, 4, "t").unwrap(), sample());
    }

    #[test]
    fn wrong_record_dim() {
        let err = parse_features_text("dim=4\n0 0 1 1 1 2 3\n", 4, "t").unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                found: 3
            }
        ));
        let err = parse_features_text("dim=3\n0 0 1 1 1 2 3\n", 4, "t").unwrap_err();
        assert!(matches!(
            err,
            Error::DimensionMismatch {
                expected: 4,
                found: 3
            }
        ));
    }

    #[test]
    fn nan_rejected() {
        let err = parse_features_text("dim=2\n0 0 1 1 NaN 1\n", 2, "t").unwrap_err();
        assert!(matches!(err, Error::NonFinite { position: 0, .. }));
        let mut bad = sample();
        bad[0].activation[1] = f32::INFINITY;
        assert!(write_features_binary(&bad, 4).is_err());
    }

    #[test]
    fn binary_layout() {
        let bytes = write_features_binary(&sample()[..1], 4).unwrap();
        assert_eq!(&bytes[..4], b"MCF1");
        assert_eq!(&bytes[4..8], &4u32.to_le_bytes());
        assert_eq!(&bytes[8..12], &1u32.to_le_bytes());
        assert_eq!(&bytes[12..16], &0u32.to_le_bytes());
        assert_eq!(&bytes[20..24], &128u32.to_le_bytes());
        assert_eq!(&bytes[28..32], &0.1f32.to_le_bytes());
        assert_eq!(bytes.len(), 12 + 16 + 16);
    }

    #[test]
    fn binary_truncated() {
        let bytes = write_features_binary(&sample(), 4).unwrap();
        assert!(matches!(
            parse_features_binary(&bytes[..bytes.len() - 1], 4),
            Err(Error::Truncated(_))
        ));
        assert!(matches!(
            parse_features_binary(&bytes[..6], 4),
            Err(Error::Truncated(_))
        ));
    }

    #[test]
    fn load_detects_encoding() {
        let dir = tempfile::tempdir().unwrap();
        let t = dir.path().join("a.feat");
        let b = dir.path().join("b.feat");
        save_features(&t, &sample(), 4, FeatureEncoding::Text).unwrap();
        save_features(&b, &sample(), 4, FeatureEncoding::Binary).unwrap();
        assert_eq!(load_features(&t, 4).unwrap(), sample());
        assert_eq!(load_features(&b, 4).unwrap(), sample());
    }

    fn arb_regions() -> impl Strategy<Value = (usize, Vec<RegionFeature>)> {
        (1usize..8).prop_flat_map(|d| {
            let region = (
                any::<[u32; 4]>(),
                proptest::collection::vec(any::<f32>().prop_filter("finite", |v| v.is_finite()), d),
            )
                .prop_map(|(g, activation)| RegionFeature {
                    geometry: geometry(g),
                    activation,
                });
            (Just(d), proptest::collection::vec(region, 0..6))
        })
    }

    proptest! {
        #[test]
        fn both_encodings_round_trip((d, regions) in arb_regions()) {
            let text = write_features_text(&regions, d).unwrap();
            let back = parse_features_text(&text, d, "t").unwrap();
            prop_assert_eq!(&back, &regions);
            prop_assert_eq!(write_features_text(&back, d).unwrap(), text);

            let bin = write_features_binary(&regions, d).unwrap();
            let back = parse_features_binary(&bin, d).unwrap();
            prop_assert_eq!(write_features_binary(&back, d).unwrap(), bin);
        }
    }
}
