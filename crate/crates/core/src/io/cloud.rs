//! Point cloud loaders and writers. Format picked by extension: `.ply` for
//! ASCII PLY (binary PLY is rejected), anything else is whitespace-delimited
//! XYZ text.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;

use super::IoError;
use crate::geometry::PointCloud;

pub fn load_point_cloud(path: &Path) -> Result<PointCloud, IoError> {
    let text = fs::read_to_string(path)?;
    let is_ply = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("ply"))
        .unwrap_or(false);
    if is_ply {
        parse_ply(path, &text)
    } else {
        parse_xyz(path, &text)
    }
}

struct ElementDecl {
    name: String,
    count: usize,
}

fn parse_ply(path: &Path, text: &str) -> Result<PointCloud, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));

    let (line_no, magic) = lines
        .next()
        .ok_or_else(|| IoError::parse(path, 1, "empty file"))?;
    if magic.trim() != "ply" {
        return Err(IoError::parse(path, line_no, "missing 'ply' magic"));
    }

    let mut elements: Vec<ElementDecl> = Vec::new();
    let mut vertex_props: Vec<String> = Vec::new();
    let mut format_seen = false;
    let mut in_vertex = false;
    loop {
        let (line_no, line) = lines
            .next()
            .ok_or_else(|| IoError::parse(path, 0, "header never ends"))?;
        let line = line.trim();
        if line == "end_header" {
            break;
        }
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("format") => {
                let kind = tokens.next().unwrap_or("");
                if kind != "ascii" {
                    return Err(IoError::UnsupportedFormat {
                        path: path.to_path_buf(),
                        message: format!("PLY format '{kind}' (only ascii is supported)"),
                    });
                }
                format_seen = true;
            }
            Some("comment") | Some("obj_info") => {}
            Some("element") => {
                let name = tokens
                    .next()
                    .ok_or_else(|| IoError::parse(path, line_no, "element without a name"))?;
                let count: usize = tokens
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| IoError::parse(path, line_no, "element without a count"))?;
                in_vertex = name == "vertex";
                elements.push(ElementDecl { name: name.to_string(), count });
            }
            Some("property") => {
                let rest: Vec<&str> = tokens.collect();
                if in_vertex {
                    if rest.first() == Some(&"list") {
                        return Err(IoError::parse(
                            path,
                            line_no,
                            "list property in the vertex element",
                        ));
                    }
                    let name = rest
                        .last()
                        .ok_or_else(|| IoError::parse(path, line_no, "property without a name"))?;
                    vertex_props.push((*name).to_string());
                }
            }
            Some(other) => {
                return Err(IoError::parse(path, line_no, format!("unknown header keyword '{other}'")));
            }
            None => {}
        }
    }
    if !format_seen {
        return Err(IoError::parse(path, 1, "header has no format line"));
    }

    let find = |axis: &str| vertex_props.iter().position(|p| p == axis);
    let (ix, iy, iz) = match (find("x"), find("y"), find("z")) {
        (Some(ix), Some(iy), Some(iz)) => (ix, iy, iz),
        _ => {
            return Err(IoError::parse(path, 1, "vertex element lacks x, y, z properties"));
        }
    };

    let mut points = Vec::new();
    for element in &elements {
        for _ in 0..element.count {
            let (line_no, line) = lines.next().ok_or_else(|| {
                IoError::parse(path, 0, format!("truncated data for element '{}'", element.name))
            })?;
            if element.name != "vertex" {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let needed = ix.max(iy).max(iz);
            if tokens.len() <= needed {
                return Err(IoError::parse(path, line_no, "vertex line has too few values"));
            }
            let get = |idx: usize| -> Result<f64, IoError> {
                tokens[idx].parse().map_err(|_| {
                    IoError::parse(path, line_no, format!("cannot parse '{}' as a number", tokens[idx]))
                })
            };
            points.push(Vector3::new(get(ix)?, get(iy)?, get(iz)?));
        }
    }

    PointCloud::new(points).map_err(|e| IoError::parse(path, 0, e.to_string()))
}

fn parse_xyz(path: &Path, text: &str) -> Result<PointCloud, IoError> {
    let mut points = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(IoError::parse(path, i + 1, "expected at least 3 coordinates"));
        }
        let parse = |t: &str| -> Result<f64, IoError> {
            t.parse()
                .map_err(|_| IoError::parse(path, i + 1, format!("cannot parse '{t}' as a number")))
        };
        points.push(Vector3::new(parse(tokens[0])?, parse(tokens[1])?, parse(tokens[2])?));
    }
    PointCloud::new(points).map_err(|e| IoError::parse(path, 0, e.to_string()))
}

/// Writes an ASCII PLY with float64 x/y/z properties. Rust's shortest-float
/// formatting keeps the round trip exact.
pub fn save_point_cloud_ply(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "element vertex {}", cloud.len())?;
    writeln!(out, "property double x")?;
    writeln!(out, "property double y")?;
    writeln!(out, "property double z")?;
    writeln!(out, "end_header")?;
    for p in cloud.iter() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}

pub fn save_point_cloud_xyz(path: &Path, cloud: &PointCloud) -> Result<(), IoError> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for p in cloud.iter() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z)?;
    }
    Ok(())
}
