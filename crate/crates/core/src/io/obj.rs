use std::path::{Path, PathBuf};

use crate::error::{Error, Location, ParseErrorKind, Result};
use crate::geometry::{Point3, PointCloud};

/// Reads the `v` lines of a Wavefront OBJ file; faces and everything else
/// are ignored.
pub fn read_obj(path: &Path) -> Result<PointCloud> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let mut tok = line.split_whitespace();
        if tok.next() != Some("v") {
            continue;
        }
        let coords: Vec<f64> = tok.take(3).filter_map(|t| t.parse().ok()).collect();
        if coords.len() != 3 {
            return Err(Error::Parse {
                path: PathBuf::from(path),
                kind: ParseErrorKind::MalformedData("vertex needs three numbers".into()),
                location: Location::Line(i + 1),
            });
        }
        points.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    if points.is_empty() {
        return Err(Error::Parse {
            path: PathBuf::from(path),
            kind: ParseErrorKind::EmptyCloud,
            location: Location::Line(text.lines().count()),
        });
    }
    PointCloud::with_id(points, path.display().to_string())
}
