//! Legacy ASCII VTK snapshots of the fluid and of the deformed solid.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;
use crate::stepper::{Spaces, SystemState};

const VTK_QUAD: u8 = 9;

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

fn grid(out: &mut String, title: &str, mesh: &QuadMesh, points: &[[f64; 2]]) {
    out.push_str("# vtk DataFile Version 3.0\n");
    out.push_str(title);
    out.push_str("\nASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(out, "POINTS {} double", points.len());
    for p in points {
        num(out, p[0]);
        out.push(' ');
        num(out, p[1]);
        out.push_str(" 0\n");
    }
    let nc = mesh.n_cells();
    let _ = writeln!(out, "CELLS {} {}", nc, 5 * nc);
    for c in mesh.cells() {
        let _ = writeln!(out, "4 {} {} {} {}", c[0], c[1], c[2], c[3]);
    }
    let _ = writeln!(out, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(out, "{VTK_QUAD}");
    }
}

fn vectors(out: &mut String, name: &str, dofs: &[f64], n_points: usize) {
    let _ = writeln!(out, "POINT_DATA {n_points}");
    let _ = writeln!(out, "VECTORS {name} double");
    // vertex v is Q2 node v
    for v in 0..n_points {
        num(out, dofs[2 * v]);
        out.push(' ');
        num(out, dofs[2 * v + 1]);
        out.push_str(" 0\n");
    }
}

/// Fluid snapshot: vertex velocities and the cell mean of the pressure.
pub fn fluid_vtk(state: &SystemState, spaces: &Spaces) -> String {
    let mesh = spaces.velocity.mesh();
    let points: Vec<[f64; 2]> = mesh.vertices().iter().map(|v| [v.x, v.y]).collect();
    let mut out = String::new();
    grid(
        &mut out,
        &format!("fluid t={:.16e}", state.t),
        mesh,
        &points,
    );
    vectors(&mut out, "velocity", &state.u, points.len());
    let pr = &spaces.pressure;
    let _ = writeln!(out, "CELL_DATA {}", mesh.n_cells());
    out.push_str("SCALARS pressure double 1\nLOOKUP_TABLE default\n");
    for cell in 0..mesh.n_cells() {
        let mean = cell_mean(pr, &state.p, cell);
        num(&mut out, mean);
        out.push('\n');
    }
    out
}

fn cell_mean(pr: &crate::fem::FeSpace, p: &[f64], cell: usize) -> f64 {
    let rule = crate::fem::gauss_rule(2).expect("built-in rule");
    let mut area = 0.0;
    let mut sum = 0.0;
    for (r, w) in rule.points.iter().zip(&rule.weights) {
        let (v, _) = pr.evaluate(p, cell, r);
        let det = pr.mesh().jacobian(cell, r).determinant();
        sum += w * det * v[0];
        area += w * det;
    }
    sum / area
}

/// Solid snapshot on the deformed configuration s + w.
pub fn solid_vtk(state: &SystemState, spaces: &Spaces) -> String {
    let mesh = spaces.solid.mesh();
    let points: Vec<[f64; 2]> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, s)| [s.x + state.w[2 * v], s.y + state.w[2 * v + 1]])
        .collect();
    let mut out = String::new();
    grid(
        &mut out,
        &format!("solid t={:.16e}", state.t),
        mesh,
        &points,
    );
    vectors(&mut out, "displacement", &state.w, points.len());
    out
}

fn write(path: PathBuf, text: &str) -> Result<PathBuf> {
    std::fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    Ok(path)
}

/// Writes `fluid_%06d.vtk` and `solid_%06d.vtk` into `dir`.
pub fn write_vtk(
    dir: &Path,
    index: usize,
    state: &SystemState,
    spaces: &Spaces,
) -> Result<(PathBuf, PathBuf)> {
    let f = write(
        dir.join(format!("fluid_{index:06}.vtk")),
        &fluid_vtk(state, spaces),
    )?;
    let s = write(
        dir.join(format!("solid_{index:06}.vtk")),
        &solid_vtk(state, spaces),
    )?;
    Ok((f, s))
}
