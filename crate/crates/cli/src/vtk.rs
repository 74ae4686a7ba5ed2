//! Legacy ASCII VTK export of nodal scalar fields on the triangulation.

use std::fmt::Write as _;
use std::path::Path;

use annulus_core::mesh::Mesh;

/// Writes an unstructured-grid file with one POINT_DATA scalar per field.
pub fn write_vtk(
    path: &Path,
    title: &str,
    mesh: &Mesh,
    fields: &[(String, Vec<f64>)],
) -> std::io::Result<()> {
    let n = mesh.vertices.len();
    let m = mesh.triangles.len();
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push('\n');
    out.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");

    let _ = writeln!(out, "POINTS {n} double");
    for v in &mesh.vertices {
        let _ = writeln!(out, "{:.12e} {:.12e} 0.0", v[0], v[1]);
    }
    let _ = writeln!(out, "CELLS {m} {}", 4 * m);
    for t in &mesh.triangles {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(out, "CELL_TYPES {m}");
    for _ in 0..m {
        out.push_str("5\n");
    }

    let _ = writeln!(out, "POINT_DATA {n}");
    for (name, values) in fields {
        assert_eq!(values.len(), n, "field `{name}` is not nodal");
        let _ = writeln!(out, "SCALARS {name} double 1");
        out.push_str("LOOKUP_TABLE default\n");
        for v in values {
            let _ = writeln!(out, "{v:.12e}");
        }
    }
    std::fs::write(path, out)
}
