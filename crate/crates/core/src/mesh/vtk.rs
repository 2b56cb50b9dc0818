//! Legacy ASCII VTK export of the full hold-all mesh.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::Mesh;
use crate::fem::{ScalarField, VectorField};
use crate::Result;

enum PointData<'a> {
    Scalar(&'a str, &'a ScalarField),
    Vector(&'a str, &'a VectorField),
}

/// Writes an `UNSTRUCTURED_GRID` with the cell scalar `in_omega` and any
/// number of point fields.
pub struct VtkExport<'a> {
    mesh: &'a Mesh,
    title: String,
    point_data: Vec<PointData<'a>>,
}

impl<'a> VtkExport<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        Self {
            mesh,
            title: "shapeopt mesh".to_string(),
            point_data: Vec::new(),
        }
    }

    pub fn title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into().replace('\n', " ");
        self
    }

    pub fn point_scalar(mut self, name: &'a str, field: &'a ScalarField) -> Self {
        self.point_data.push(PointData::Scalar(name, field));
        self
    }

    pub fn point_vector(mut self, name: &'a str, field: &'a VectorField) -> Self {
        self.point_data.push(PointData::Vector(name, field));
        self
    }

    pub fn write<W: Write>(&self, mut out: W) -> Result<()> {
        let m = self.mesh;
        writeln!(out, "# vtk DataFile Version 3.0")?;
        writeln!(out, "{}", self.title)?;
        writeln!(out, "ASCII")?;
        writeln!(out, "DATASET UNSTRUCTURED_GRID")?;
        writeln!(out, "POINTS {} double", m.num_vertices())?;
        for p in m.vertices() {
            writeln!(out, "{} {} 0", p.x, p.y)?;
        }
        writeln!(out, "CELLS {} {}", m.num_triangles(), 4 * m.num_triangles())?;
        for t in m.triangles() {
            writeln!(out, "3 {} {} {}", t[0], t[1], t[2])?;
        }
        writeln!(out, "CELL_TYPES {}", m.num_triangles())?;
        for _ in 0..m.num_triangles() {
            writeln!(out, "5")?;
        }
        writeln!(out, "CELL_DATA {}", m.num_triangles())?;
        writeln!(out, "SCALARS in_omega int 1")?;
        writeln!(out, "LOOKUP_TABLE default")?;
        for &f in m.in_omega() {
            writeln!(out, "{}", u8::from(f))?;
        }
        if !self.point_data.is_empty() {
            writeln!(out, "POINT_DATA {}", m.num_vertices())?;
        }
        for data in &self.point_data {
            match data {
                PointData::Scalar(name, f) => {
                    writeln!(out, "SCALARS {name} double 1")?;
                    writeln!(out, "LOOKUP_TABLE default")?;
                    for v in f.values() {
                        writeln!(out, "{v}")?;
                    }
                }
                PointData::Vector(name, f) => {
                    writeln!(out, "VECTORS {name} double")?;
                    for v in f.values() {
                        writeln!(out, "{} {} 0", v.x, v.y)?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn write_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{box_with_rectangle, Rect};

    #[test]
    fn sections_and_counts() {
        let m = box_with_rectangle(Rect::square(2.0), Rect::square(1.0), 1).unwrap();
        let y = ScalarField::zeros(m.num_vertices());
        let mut buf = Vec::new();
        VtkExport::new(&m).point_scalar("y", &y).write(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# vtk DataFile Version 3.0\n"));
        assert!(text.contains(&format!("POINTS {} double", m.num_vertices())));
        assert!(text.contains(&format!("CELLS {} {}", m.num_triangles(), 4 * m.num_triangles())));
        assert!(text.contains("SCALARS in_omega int 1"));
        assert!(text.contains("SCALARS y double 1"));
        let omega_cells = text
            .split("LOOKUP_TABLE default\n")
            .nth(1)
            .unwrap()
            .lines()
            .take(m.num_triangles())
            .filter(|l| *l == "1")
            .count();
        assert_eq!(omega_cells, m.omega_triangles().len());
    }
}
