use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

use super::ply::{header_text, push_coords, write_bytes};
use super::{PlyFormat, WriteOptions};

/// Color reserved for breaking-curve points.
pub const CURVE_COLOR: [u8; 3] = [255, 0, 0];

/// A cloud with one label per point: `Some(region)` or `None` for curve
/// points.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledCloudExport<'a> {
    pub cloud: &'a PointCloud,
    pub labels: Vec<Option<usize>>,
}

/// Deterministic region color. Hues step by the golden ratio; value stays
/// below 255 so no region is ever pure red.
pub fn palette_color(region: usize) -> [u8; 3] {
    let hue = (region as f64 * 0.618_033_988_749_895 + 0.35).fract() * 6.0;
    let (s, v) = (0.7, 0.9);
    let c = v * s;
    let x = c * (1.0 - (hue % 2.0 - 1.0).abs());
    let (r, g, b) = match hue as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [r, g, b].map(|ch| ((ch + m) * 255.0).round() as u8)
}

/// Writes a PLY with per-vertex `red`/`green`/`blue` and an `int region`
/// property (`-1` for curve points).
pub fn write_labeled_cloud(export: &LabeledCloudExport, path: &Path, options: WriteOptions) -> Result<()> {
    let cloud = export.cloud;
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    if export.labels.len() != cloud.len() {
        return Err(Error::MaskLength {
            mask: export.labels.len(),
            points: cloud.len(),
        });
    }
    let extra = [
        "property uchar red",
        "property uchar green",
        "property uchar blue",
        "property int region",
    ];
    let mut buf = header_text(cloud.len(), options, &extra).into_bytes();
    for (p, label) in cloud.iter().zip(&export.labels) {
        let rgb = label.map_or(CURVE_COLOR, palette_color);
        let region = label.map_or(-1, |r| r as i32);
        push_coords(&mut buf, p, options);
        match options.format {
            PlyFormat::BinaryLittleEndian => {
                buf.extend_from_slice(&rgb);
                buf.extend_from_slice(&region.to_le_bytes());
            }
            PlyFormat::Ascii => {
                buf.extend_from_slice(format!(" {} {} {} {}\n", rgb[0], rgb[1], rgb[2], region).as_bytes());
            }
        }
    }
    write_bytes(path, &buf)
}
