use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Mat3, RigidTransform, Tolerances, Vec3};

pub const SCHEMA_VERSION: u32 = 1;

/// On-disk form of a rigid transform. Rotation is row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformFile {
    pub schema_version: u32,
    pub rotation: [f64; 9],
    pub translation: [f64; 3],
}

impl From<&RigidTransform> for TransformFile {
    fn from(t: &RigidTransform) -> Self {
        let v = t.to_row_major();
        TransformFile {
            schema_version: SCHEMA_VERSION,
            rotation: v[..9].try_into().unwrap(),
            translation: v[9..].try_into().unwrap(),
        }
    }
}

impl TransformFile {
    /// Rejects improper or non-orthonormal rotations.
    pub fn to_transform(&self) -> Result<RigidTransform> {
        let r = Mat3::from_row_slice(&self.rotation);
        RigidTransform::new_with_tolerance(
            r,
            Vec3::from(self.translation),
            Tolerances::DEFAULT.orthonormal_read,
        )
    }
}

/// Pretty-printed JSON; byte-identical for identical transforms.
pub fn transform_to_json(t: &RigidTransform) -> String {
    let mut s = serde_json::to_string_pretty(&TransformFile::from(t)).expect("plain data serializes");
    s.push('\n');
    s
}

pub fn write_transform(t: &RigidTransform, path: &Path) -> Result<()> {
    std::fs::write(path, transform_to_json(t)).map_err(|e| Error::io(path, e))
}

pub fn read_transform(path: &Path) -> Result<RigidTransform> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: TransformFile = serde_json::from_str(&text).map_err(|e| Error::Json {
        path: path.into(),
        message: e.to_string(),
    })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(Error::Json {
            path: path.into(),
            message: format!("unsupported schema_version {}", file.schema_version),
        });
    }
    file.to_transform()
}
