//! Legacy ASCII VTK output of projected fields.
//!
//! Each cell is split into its ear-clipping triangles; points are duplicated
//! per cell so that discontinuous projections are shown as they are.

use std::fmt::Write as _;

use polyvem::mesh::Mesh2D;
use polyvem::{Point, Result};

use crate::solution::{FieldValues, Solution};

/// Renders the finest-level solution as an unstructured grid.
pub fn to_vtk(mesh: &Mesh2D, solution: &Solution) -> Result<String> {
    let mut points: Vec<Point> = Vec::new();
    let mut triangles: Vec<[usize; 3]> = Vec::new();
    let mut fields: Vec<FieldValues> = Vec::new();
    for cell in 0..mesh.num_cells() {
        let polygon = mesh.polygon(cell)?;
        let base = points.len();
        points.extend_from_slice(polygon.vertices());
        for t in polygon.triangulate()?.triangles {
            triangles.push([base + t[0], base + t[1], base + t[2]]);
        }
        let values = solution.fields_at(cell, polygon.vertices())?;
        if fields.is_empty() {
            fields = values;
        } else {
            for (acc, v) in fields.iter_mut().zip(values) {
                match (acc, v) {
                    (FieldValues::Scalar(_, a), FieldValues::Scalar(_, b)) => a.extend(b),
                    (FieldValues::Vector(_, a), FieldValues::Vector(_, b)) => a.extend(b),
                    _ => unreachable!("fields keep their kind across cells"),
                }
            }
        }
    }

    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "# vtk DataFile Version 3.0");
    let _ = writeln!(w, "polyvem {} k={}", solution.family, solution.order);
    let _ = writeln!(w, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(w, "POINTS {} double", points.len());
    for p in &points {
        let _ = writeln!(w, "{:e} {:e} 0", p[0], p[1]);
    }
    let _ = writeln!(w, "CELLS {} {}", triangles.len(), 4 * triangles.len());
    for t in &triangles {
        let _ = writeln!(w, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(w, "CELL_TYPES {}", triangles.len());
    for _ in &triangles {
        let _ = writeln!(w, "5");
    }
    let _ = writeln!(w, "POINT_DATA {}", points.len());
    for f in &fields {
        match f {
            FieldValues::Scalar(name, v) => {
                let _ = writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                for x in v {
                    let _ = writeln!(w, "{x:e}");
                }
            }
            FieldValues::Vector(name, v) => {
                let _ = writeln!(w, "VECTORS {name} double");
                for x in v {
                    let _ = writeln!(w, "{:e} {:e} 0", x[0], x[1]);
                }
            }
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{Family, ManufacturedProblem};
    use crate::solution::solve;
    use polyvem::mesh::{unit_square, StructuredKind};
    use polyvem::vem::Stabilization;

    #[test]
    fn vtk_has_consistent_sections() {
        let mesh = unit_square(StructuredKind::HangingQuads, 2).unwrap();
        for family in [Family::Pcc, Family::Mcc, Family::DfStokes] {
            let problem = ManufacturedProblem::smooth(family);
            let k = family.min_order().max(1);
            let sol = solve(&problem, family, &mesh, k, Stabilization::DofiDofi).unwrap();
            let text = to_vtk(&mesh, &sol).unwrap();
            let npts: usize = (0..mesh.num_cells()).map(|c| mesh.cells()[c].vertices.len()).sum();
            assert!(text.contains(&format!("POINTS {npts} double")));
            assert!(text.contains(&format!("POINT_DATA {npts}")));
            let ntri: usize = (0..mesh.num_cells()).map(|c| mesh.cells()[c].vertices.len() - 2).sum();
            assert!(text.contains(&format!("CELL_TYPES {ntri}")));
            if family != Family::Pcc {
                assert!(text.contains("VECTORS velocity double") && text.contains("SCALARS pressure double 1"));
            }
        }
    }
}
