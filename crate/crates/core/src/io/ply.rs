use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Location, ParseErrorKind, Result};
use crate::geometry::{Point3, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PlyFormat {
    Ascii,
    #[default]
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Precision {
    #[default]
    F32,
    F64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct WriteOptions {
    pub format: PlyFormat,
    pub precision: Precision,
}

impl WriteOptions {
    pub fn ascii() -> Self {
        Self {
            format: PlyFormat::Ascii,
            precision: Precision::F64,
        }
    }

    pub fn binary_f64() -> Self {
        Self {
            format: PlyFormat::BinaryLittleEndian,
            precision: Precision::F64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Scalar> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Scalar::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar { name: String, ty: Scalar },
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    properties: Vec<Property>,
}

struct Header {
    binary: bool,
    elements: Vec<Element>,
    /// Byte offset of the first data byte.
    data_start: usize,
    /// Line number (1-based) of the first data line.
    data_line: usize,
}

struct Parser<'a> {
    path: &'a Path,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind, location: Location) -> Error {
        Error::Parse {
            path: PathBuf::from(self.path),
            kind,
            location,
        }
    }

    fn header_err(&self, msg: impl Into<String>, line: usize) -> Error {
        self.err(ParseErrorKind::MalformedHeader(msg.into()), Location::Line(line))
    }

    fn header(&self, bytes: &[u8]) -> Result<Header> {
        let mut offset = 0;
        let mut line_no = 0;
        let mut format = None;
        let mut elements: Vec<Element> = Vec::new();
        loop {
            line_no += 1;
            let Some(nl) = bytes[offset..].iter().position(|&b| b == b'\n') else {
                return Err(self.header_err("missing end_header", line_no));
            };
            let raw = &bytes[offset..offset + nl];
            offset += nl + 1;
            let line = std::str::from_utf8(raw)
                .map_err(|_| self.header_err("header is not valid text", line_no))?
                .trim_end_matches('\r')
                .trim();
            let mut tok = line.split_whitespace();
            let first = tok.next().unwrap_or("");
            if line_no == 1 {
                if line != "ply" {
                    return Err(self.header_err("missing `ply` magic", 1));
                }
                continue;
            }
            match first {
                "" | "comment" | "obj_info" => {}
                "format" => {
                    let kind = tok.next().unwrap_or("");
                    let version = tok.next().unwrap_or("");
                    if version != "1.0" {
                        return Err(self.err(
                            ParseErrorKind::UnsupportedFormat(format!("version `{version}`")),
                            Location::Line(line_no),
                        ));
                    }
                    format = Some(match kind {
                        "ascii" => false,
                        "binary_little_endian" => true,
                        other => {
                            return Err(self.err(
                                ParseErrorKind::UnsupportedFormat(other.to_string()),
                                Location::Line(line_no),
                            ))
                        }
                    });
                }
                "element" => {
                    let name = tok.next().ok_or_else(|| self.header_err("element without name", line_no))?;
                    let count = tok
                        .next()
                        .and_then(|c| c.parse::<usize>().ok())
                        .ok_or_else(|| self.header_err("element count is not an integer", line_no))?;
                    elements.push(Element {
                        name: name.to_string(),
                        count,
                        properties: Vec::new(),
                    });
                }
                "property" => {
                    let elem = elements
                        .last_mut()
                        .ok_or_else(|| self.header_err("property before any element", line_no))?;
                    let words: Vec<&str> = tok.collect();
                    let prop = match words.as_slice() {
                        ["list", count, item, _name] => Property::List {
                            count: Scalar::parse(count)
                                .ok_or_else(|| self.header_err(format!("unknown type `{count}`"), line_no))?,
                            item: Scalar::parse(item)
                                .ok_or_else(|| self.header_err(format!("unknown type `{item}`"), line_no))?,
                        },
                        [ty, name] => Property::Scalar {
                            name: name.to_string(),
                            ty: Scalar::parse(ty)
                                .ok_or_else(|| self.header_err(format!("unknown type `{ty}`"), line_no))?,
                        },
                        _ => return Err(self.header_err("malformed property line", line_no)),
                    };
                    elem.properties.push(prop);
                }
                "end_header" => break,
                other => return Err(self.header_err(format!("unexpected keyword `{other}`"), line_no)),
            }
        }
        let binary = format.ok_or_else(|| self.header_err("missing format line", line_no))?;
        Ok(Header {
            binary,
            elements,
            data_start: offset,
            data_line: line_no + 1,
        })
    }
}

struct VertexLayout {
    element: usize,
    xyz: [usize; 3],
}

fn vertex_layout(parser: &Parser, header: &Header) -> Result<VertexLayout> {
    let element = header
        .elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| parser.header_err("no vertex element", header.data_line - 1))?;
    let props = &header.elements[element].properties;
    let find = |axis: &str| {
        props
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
            .ok_or_else(|| parser.header_err(format!("vertex element lacks scalar `{axis}`"), header.data_line - 1))
    };
    Ok(VertexLayout {
        element,
        xyz: [find("x")?, find("y")?, find("z")?],
    })
}

/// Reads vertex positions from an ASCII or binary little-endian PLY file.
pub fn read_ply(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let parser = Parser { path };
    let header = parser.header(&bytes)?;
    let layout = vertex_layout(&parser, &header)?;
    let declared = header.elements[layout.element].count;
    if declared == 0 {
        return Err(parser.err(ParseErrorKind::EmptyCloud, Location::Line(header.data_line - 1)));
    }
    let points = if header.binary {
        read_binary(&parser, &header, &layout, &bytes)?
    } else {
        read_ascii(&parser, &header, &layout, &bytes)?
    };
    PointCloud::with_id(points, path.display().to_string())
}

fn read_ascii(parser: &Parser, header: &Header, layout: &VertexLayout, bytes: &[u8]) -> Result<Vec<Point3>> {
    let text = std::str::from_utf8(&bytes[header.data_start..]).map_err(|_| {
        parser.err(
            ParseErrorKind::MalformedData("ASCII body is not valid text".into()),
            Location::Line(header.data_line),
        )
    })?;
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (header.data_line + i, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut points = Vec::new();
    for (e, element) in header.elements.iter().enumerate() {
        if e > layout.element {
            break;
        }
        for found in 0..element.count {
            let Some((line_no, line)) = lines.next() else {
                if e == layout.element {
                    return Err(parser.err(
                        ParseErrorKind::VertexCountMismatch {
                            declared: element.count,
                            found,
                        },
                        Location::Line(header.data_line + text.lines().count()),
                    ));
                }
                return Err(parser.err(
                    ParseErrorKind::MalformedData(format!("element `{}` truncated", element.name)),
                    Location::Line(header.data_line + text.lines().count()),
                ));
            };
            if e != layout.element {
                continue;
            }
            let mut values = Vec::with_capacity(element.properties.len());
            let mut tok = line.split_whitespace();
            let mut next_number = || -> Result<f64> {
                tok.next()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| {
                        parser.err(
                            ParseErrorKind::MalformedData("expected a number".into()),
                            Location::Line(line_no),
                        )
                    })
            };
            for prop in &element.properties {
                match prop {
                    Property::Scalar { .. } => values.push(next_number()?),
                    Property::List { .. } => {
                        let n = next_number()? as usize;
                        for _ in 0..n {
                            next_number()?;
                        }
                        values.push(f64::NAN);
                    }
                }
            }
            points.push(Point3::new(
                values[layout.xyz[0]],
                values[layout.xyz[1]],
                values[layout.xyz[2]],
            ));
        }
    }
    Ok(points)
}

fn read_binary(parser: &Parser, header: &Header, layout: &VertexLayout, bytes: &[u8]) -> Result<Vec<Point3>> {
    let mut pos = header.data_start;
    let mut points = Vec::new();
    for (e, element) in header.elements.iter().enumerate() {
        if e > layout.element {
            break;
        }
        for found in 0..element.count {
            let record = pos;
            let truncated = || {
                let kind = if e == layout.element {
                    ParseErrorKind::VertexCountMismatch {
                        declared: element.count,
                        found,
                    }
                } else {
                    ParseErrorKind::MalformedData(format!("element `{}` truncated", element.name))
                };
                parser.err(kind, Location::Byte(record as u64))
            };
            let mut xyz = [0.0; 3];
            for (p, prop) in element.properties.iter().enumerate() {
                match prop {
                    Property::Scalar { ty, .. } => {
                        let end = pos + ty.size();
                        if end > bytes.len() {
                            return Err(truncated());
                        }
                        if e == layout.element {
                            if let Some(axis) = layout.xyz.iter().position(|&a| a == p) {
                                xyz[axis] = ty.read_le(&bytes[pos..end]);
                            }
                        }
                        pos = end;
                    }
                    Property::List { count, item } => {
                        let end = pos + count.size();
                        if end > bytes.len() {
                            return Err(truncated());
                        }
                        let n = count.read_le(&bytes[pos..end]) as usize;
                        pos = end + n * item.size();
                        if pos > bytes.len() {
                            return Err(truncated());
                        }
                    }
                }
            }
            if e == layout.element {
                points.push(Point3::new(xyz[0], xyz[1], xyz[2]));
            }
        }
    }
    Ok(points)
}

/// Header lines for a vertex-only file, plus any extra vertex properties.
pub(super) fn header_text(count: usize, options: WriteOptions, extra: &[&str]) -> String {
    let format = match options.format {
        PlyFormat::Ascii => "ascii",
        PlyFormat::BinaryLittleEndian => "binary_little_endian",
    };
    let ty = match options.precision {
        Precision::F32 => "float",
        Precision::F64 => "double",
    };
    let mut h = format!("ply\nformat {format} 1.0\nelement vertex {count}\n");
    for axis in ["x", "y", "z"] {
        h.push_str(&format!("property {ty} {axis}\n"));
    }
    for line in extra {
        h.push_str(line);
        h.push('\n');
    }
    h.push_str("end_header\n");
    h
}

pub(super) fn push_coords(buf: &mut Vec<u8>, p: &Point3, options: WriteOptions) {
    match (options.format, options.precision) {
        (PlyFormat::BinaryLittleEndian, Precision::F32) => {
            for c in p.iter() {
                buf.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        (PlyFormat::BinaryLittleEndian, Precision::F64) => {
            for c in p.iter() {
                buf.extend_from_slice(&c.to_le_bytes());
            }
        }
        (PlyFormat::Ascii, Precision::F32) => {
            let _ = write!(buf, "{} {} {}", p.x as f32, p.y as f32, p.z as f32);
        }
        (PlyFormat::Ascii, Precision::F64) => {
            let _ = write!(buf, "{} {} {}", p.x, p.y, p.z);
        }
    }
}

pub(super) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes vertex positions; refuses an empty cloud.
pub fn write_ply(cloud: &PointCloud, path: &Path, options: WriteOptions) -> Result<()> {
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let mut buf = header_text(cloud.len(), options, &[]).into_bytes();
    for p in cloud.iter() {
        push_coords(&mut buf, p, options);
        if options.format == PlyFormat::Ascii {
            buf.push(b'\n');
        }
    }
    write_bytes(path, &buf)
}
