use crate::{MeshError, Point2, Point3, TriMesh};
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

/// Binary little-endian PLY with double-precision vertex properties
/// (x, y, z and optionally u, v) and uchar-counted int face lists.
/// Double precision keeps save/load round-trips bit-exact.
pub fn save_ply(mesh: &TriMesh, path: &Path) -> Result<(), MeshError> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "ply")?;
    writeln!(w, "format binary_little_endian 1.0")?;
    writeln!(w, "element vertex {}", mesh.vertex_count())?;
    writeln!(w, "property double x")?;
    writeln!(w, "property double y")?;
    writeln!(w, "property double z")?;
    if mesh.has_uvs() {
        writeln!(w, "property double u")?;
        writeln!(w, "property double v")?;
    }
    writeln!(w, "element face {}", mesh.triangle_count())?;
    writeln!(w, "property list uchar int vertex_indices")?;
    writeln!(w, "end_header")?;
    for (i, p) in mesh.vertices.iter().enumerate() {
        w.write_all(&p.x.to_le_bytes())?;
        w.write_all(&p.y.to_le_bytes())?;
        w.write_all(&p.z.to_le_bytes())?;
        if let Some(uvs) = &mesh.uvs {
            w.write_all(&uvs[i].x.to_le_bytes())?;
            w.write_all(&uvs[i].y.to_le_bytes())?;
        }
    }
    for t in &mesh.triangles {
        w.write_all(&[3u8])?;
        for &i in t {
            w.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    F32,
    F64,
    I32,
    U32,
    U8,
    I8,
    U16,
    I16,
}

impl ScalarType {
    fn parse(s: &str, line: usize) -> Result<Self, MeshError> {
        Ok(match s {
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "uchar" | "uint8" => ScalarType::U8,
            "char" | "int8" => ScalarType::I8,
            "ushort" | "uint16" => ScalarType::U16,
            "short" | "int16" => ScalarType::I16,
            other => {
                return Err(MeshError::Parse {
                    line,
                    message: format!("unsupported ply scalar type '{other}'"),
                })
            }
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::F64 => 8,
            ScalarType::F32 | ScalarType::I32 | ScalarType::U32 => 4,
            ScalarType::U16 | ScalarType::I16 => 2,
            ScalarType::U8 | ScalarType::I8 => 1,
        }
    }

    fn read_f64(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::F64 => f64::from_le_bytes(bytes.try_into().unwrap()),
            ScalarType::F32 => f32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ScalarType::I32 => i32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ScalarType::U16 => u16::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ScalarType::I16 => i16::from_le_bytes(bytes.try_into().unwrap()) as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I8 => bytes[0] as i8 as f64,
        }
    }
}

pub fn load_ply(path: &Path) -> Result<TriMesh, MeshError> {
    let file = std::fs::File::open(path)?;
    let mut reader = std::io::BufReader::new(file);

    let mut line_no = 0;
    let mut read_line = |reader: &mut std::io::BufReader<std::fs::File>| -> Result<String, MeshError> {
        let mut s = String::new();
        reader.read_line(&mut s)?;
        line_no += 1;
        Ok(s.trim_end().to_string())
    };

    let magic = read_line(&mut reader)?;
    if magic != "ply" {
        return Err(MeshError::Parse {
            line: 1,
            message: "not a ply file".into(),
        });
    }

    struct Element {
        name: String,
        count: usize,
        // scalar properties as (name, type); list property as (count type, item type)
        scalars: Vec<(String, ScalarType)>,
        list: Option<(ScalarType, ScalarType)>,
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut line_idx = 1usize;
    loop {
        let line = read_line(&mut reader)?;
        line_idx += 1;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("format") => {
                let fmt = parts.next().unwrap_or("");
                if fmt != "binary_little_endian" {
                    return Err(MeshError::Parse {
                        line: line_idx,
                        message: format!("unsupported ply format '{fmt}'"),
                    });
                }
            }
            Some("comment") => {}
            Some("element") => {
                let name = parts.next().unwrap_or("").to_string();
                let count: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or(MeshError::Parse {
                        line: line_idx,
                        message: "bad element count".into(),
                    })?;
                elements.push(Element {
                    name,
                    count,
                    scalars: Vec::new(),
                    list: None,
                });
            }
            Some("property") => {
                let element = elements.last_mut().ok_or(MeshError::Parse {
                    line: line_idx,
                    message: "property before element".into(),
                })?;
                let kind = parts.next().unwrap_or("");
                if kind == "list" {
                    let count_ty = ScalarType::parse(parts.next().unwrap_or(""), line_idx)?;
                    let item_ty = ScalarType::parse(parts.next().unwrap_or(""), line_idx)?;
                    element.list = Some((count_ty, item_ty));
                } else {
                    let ty = ScalarType::parse(kind, line_idx)?;
                    let name = parts.next().unwrap_or("").to_string();
                    element.scalars.push((name, ty));
                }
            }
            Some("end_header") => break,
            other => {
                return Err(MeshError::Parse {
                    line: line_idx,
                    message: format!("unexpected header record {other:?}"),
                })
            }
        }
    }

    let mut body = Vec::new();
    reader.read_to_end(&mut body)?;
    let mut cursor = 0usize;
    let mut take = |n: usize| -> Result<&[u8], MeshError> {
        if cursor + n > body.len() {
            return Err(MeshError::Parse {
                line: 0,
                message: "unexpected end of ply body".into(),
            });
        }
        let s = &body[cursor..cursor + n];
        cursor += n;
        Ok(s)
    };

    let mut positions: Vec<Point3> = Vec::new();
    let mut uvs: Vec<Point2> = Vec::new();
    let mut has_uv = false;
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for element in &elements {
        if element.name == "vertex" {
            let names: Vec<&str> = element.scalars.iter().map(|(n, _)| n.as_str()).collect();
            has_uv = names.contains(&"u") && names.contains(&"v");
            for _ in 0..element.count {
                let mut values = std::collections::HashMap::new();
                for (name, ty) in &element.scalars {
                    let v = ty.read_f64(take(ty.size())?);
                    values.insert(name.as_str(), v);
                }
                let get = |k: &str| -> Result<f64, MeshError> {
                    values.get(k).copied().ok_or(MeshError::Parse {
                        line: 0,
                        message: format!("vertex property '{k}' missing"),
                    })
                };
                positions.push(Point3::new(get("x")?, get("y")?, get("z")?));
                if has_uv {
                    uvs.push(Point2::new(get("u")?, get("v")?));
                }
            }
        } else if element.name == "face" {
            let (count_ty, item_ty) = element.list.ok_or(MeshError::Parse {
                line: 0,
                message: "face element without list property".into(),
            })?;
            for _ in 0..element.count {
                let n = count_ty.read_f64(take(count_ty.size())?) as usize;
                if n != 3 {
                    return Err(MeshError::Parse {
                        line: 0,
                        message: format!("only triangular faces supported, got {n}"),
                    });
                }
                let mut tri = [0u32; 3];
                for slot in &mut tri {
                    *slot = item_ty.read_f64(take(item_ty.size())?) as u32;
                }
                triangles.push(tri);
            }
        } else {
            // skip unknown fixed-size elements
            let stride: usize = element.scalars.iter().map(|(_, t)| t.size()).sum();
            if element.list.is_some() {
                return Err(MeshError::Parse {
                    line: 0,
                    message: format!("unsupported list element '{}'", element.name),
                });
            }
            take(stride * element.count)?;
        }
    }

    TriMesh::new(positions, triangles, if has_uv { Some(uvs) } else { None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_bit_exact() {
        let mesh = TriMesh::new(
            vec![
                Point3::new(0.1, 0.2, 0.3),
                Point3::new(1.0, 0.0, std::f64::consts::PI),
                Point3::new(0.0, 1.0, -1e-17),
            ],
            vec![[0, 1, 2]],
            Some(vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(0.0, 1.0),
            ]),
        )
        .unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        save_ply(&mesh, f.path()).unwrap();
        let back = load_ply(f.path()).unwrap();
        assert_eq!(mesh.vertices, back.vertices);
        assert_eq!(mesh.triangles, back.triangles);
        assert_eq!(mesh.uvs, back.uvs);
    }
}
