//! Plain-text mesh format.
//!
//! ```text
//! shapeopt-mesh v1
//! NV NT
//! x y            (NV lines)
//! i j k flag     (NT lines, 0-based, flag = 1 for Ω)
//! ```

use std::io::{BufRead, Write};

use super::Mesh;
use crate::mat2::Vec2;
use crate::{Error, Result};

const HEADER: &str = "shapeopt-mesh v1";

pub fn write_text<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    writeln!(out, "{HEADER}")?;
    writeln!(out, "{} {}", mesh.num_vertices(), mesh.num_triangles())?;
    for p in mesh.vertices() {
        writeln!(out, "{} {}", p.x, p.y)?;
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        writeln!(out, "{} {} {} {}", tri[0], tri[1], tri[2], u8::from(mesh.in_omega()[t]))?;
    }
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|l| l.as_ref().map_or(true, |(_, s)| !s.trim().is_empty()));
    let mut next = |what: &str| -> Result<(usize, String)> {
        lines.next().transpose()?.ok_or_else(|| Error::Parse {
            line: 0,
            msg: format!("unexpected end of input, expected {what}"),
        })
    };
    let (line, header) = next("header")?;
    if header.trim() != HEADER {
        return Err(Error::Parse {
            line,
            msg: format!("expected `{HEADER}`"),
        });
    }
    let (line, counts) = next("counts")?;
    let counts: Vec<usize> = parse_fields(line, &counts, 2)?;
    let (nv, nt) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, s) = next("vertex")?;
        let xy: Vec<f64> = parse_fields(line, &s, 2)?;
        vertices.push(Vec2::new(xy[0], xy[1]));
    }
    let mut triangles = Vec::with_capacity(nt);
    let mut flags = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, s) = next("triangle")?;
        let f: Vec<usize> = parse_fields(line, &s, 4)?;
        if f[3] > 1 {
            return Err(Error::Parse {
                line,
                msg: format!("flag must be 0 or 1, got {}", f[3]),
            });
        }
        triangles.push([f[0], f[1], f[2]]);
        flags.push(f[3] == 1);
    }
    Mesh::new(vertices, triangles, flags)
}

fn parse_fields<T: std::str::FromStr>(line: usize, s: &str, count: usize) -> Result<Vec<T>> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    if parts.len() != count {
        return Err(Error::Parse {
            line,
            msg: format!("expected {count} fields, found {}", parts.len()),
        });
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<T>().map_err(|_| Error::Parse {
                line,
                msg: format!("cannot parse `{p}`"),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_with_disk, Rect};

    #[test]
    fn round_trip_is_bit_exact() {
        let m = box_with_disk(Rect::square(2.0), Vec2::zeros(), 1.1, 4).unwrap();
        let mut buf = Vec::new();
        write_text(&m, &mut buf).unwrap();
        let back = read_text(buf.as_slice()).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.in_omega(), m.in_omega());
    }

    #[test]
    fn bad_header_and_truncation() {
        assert!(matches!(read_text("nope\n".as_bytes()), Err(Error::Parse { line: 1, .. })));
        let truncated = "shapeopt-mesh v1\n3 1\n0 0\n1 0\n";
        assert!(matches!(read_text(truncated.as_bytes()), Err(Error::Parse { .. })));
        let bad_flag = "shapeopt-mesh v1\n3 1\n0 0\n1 0\n0 1\n0 1 2 7\n";
        assert!(matches!(read_text(bad_flag.as_bytes()), Err(Error::Parse { line: 6, .. })));
    }
}
