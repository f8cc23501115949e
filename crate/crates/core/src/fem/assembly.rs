//! Cell-wise assembly of the fluid operators on a single mesh.
//!
//! Local matrices are computed in parallel and scattered in cell order, so
//! the assembled values do not depend on the number of worker threads.

use nalgebra::Vector2;

use super::element::ElementFamily;
use super::quadrature::gauss_rule;
use super::space::{CellQuadrature, FeSpace};
use super::sparse::{CsrMatrix, TripletBuilder};
use crate::error::{Error, Result};
use crate::mesh::{BoundaryMarker, Point2};
use crate::par;

/// Volume rule for mass, viscous and divergence terms: exact for Q2 on affine cells.
pub const DEFAULT_ORDER: usize = 3;
/// Volume rule for the trilinear convection term and loads.
pub const CONVECTION_ORDER: usize = 4;

pub(crate) struct LocalMatrix {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub values: Vec<f64>,
}

/// Assembles a global matrix from per-item local blocks.
pub(crate) fn assemble_local<F>(nrows: usize, ncols: usize, n_items: usize, local: F) -> CsrMatrix
where
    F: Fn(usize) -> LocalMatrix + Sync + Send,
{
    let blocks = par::map_indexed(n_items, local);
    let cap = blocks.iter().map(|b| b.values.len()).sum();
    let mut builder = TripletBuilder::with_capacity(nrows, ncols, cap);
    for b in &blocks {
        builder.push_block(&b.rows, &b.cols, &b.values);
    }
    builder.build()
}

pub(crate) fn assemble_local_vector<F>(n: usize, n_items: usize, local: F) -> Vec<f64>
where
    F: Fn(usize) -> (Vec<usize>, Vec<f64>) + Sync + Send,
{
    let blocks = par::map_indexed(n_items, local);
    let mut out = vec![0.0; n];
    for (dofs, vals) in &blocks {
        for (&d, &v) in dofs.iter().zip(vals) {
            out[d] += v;
        }
    }
    out
}

fn quadrature(space: &FeSpace, order: usize) -> CellQuadrature {
    space.cell_quadrature(&gauss_rule(order).expect("built-in quadrature order"))
}

/// `<M u, v> = (coefficient u, v)`; component-diagonal for vector spaces.
pub fn assemble_mass(space: &FeSpace, coefficient: impl Fn(&Point2) -> f64 + Sync) -> CsrMatrix {
    let quad = quadrature(space, DEFAULT_ORDER);
    let nb = space.family().scalar_basis_len();
    let nc = space.components();
    let n = space.n_dofs();
    assemble_local(n, n, space.mesh().n_cells(), |cell| {
        let dofs = space.cell_dofs(cell);
        let nl = dofs.len();
        let mut local = vec![0.0; nl * nl];
        for qp in quad.cell(cell) {
            let w = coefficient(&qp.x) * qp.jxw;
            for a in 0..nb {
                for b in 0..nb {
                    let m = w * qp.values[a] * qp.values[b];
                    for c in 0..nc {
                        local[(a * nc + c) * nl + b * nc + c] += m;
                    }
                }
            }
        }
        LocalMatrix {
            rows: dofs.clone(),
            cols: dofs,
            values: local,
        }
    })
}

/// `<A u, v> = (nu D u, D v)` with `D u = (grad u + grad u^T) / 2`.
pub fn assemble_viscous(space: &FeSpace, nu: f64) -> Result<CsrMatrix> {
    require_vector(space)?;
    let quad = quadrature(space, DEFAULT_ORDER);
    let n = space.n_dofs();
    Ok(assemble_local(n, n, space.mesh().n_cells(), |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for qp in quad.cell(cell) {
            let w = nu * qp.jxw;
            for a in 0..9 {
                let ga = qp.grads[a];
                for b in 0..9 {
                    let gb = qp.grads[b];
                    let dot = ga[0] * gb[0] + ga[1] * gb[1];
                    for c in 0..2 {
                        for d in 0..2 {
                            // D(phi_a e_c) : D(phi_b e_d)
                            let mut v = 0.5 * ga[d] * gb[c];
                            if c == d {
                                v += 0.5 * dot;
                            }
                            local[(2 * a + c) * 18 + 2 * b + d] += w * v;
                        }
                    }
                }
            }
        }
        LocalMatrix {
            rows: dofs.clone(),
            cols: dofs,
            values: local,
        }
    }))
}

/// `<B v, q> = -(div v, q)`; rows are pressure DoFs, columns velocity DoFs.
pub fn assemble_divergence(velocity: &FeSpace, pressure: &FeSpace) -> Result<CsrMatrix> {
    require_vector(velocity)?;
    if !std::sync::Arc::ptr_eq(velocity.mesh_arc(), pressure.mesh_arc()) {
        return Err(Error::ShapeMismatch(
            "velocity and pressure spaces live on different meshes".into(),
        ));
    }
    let vq = quadrature(velocity, DEFAULT_ORDER);
    let pq = quadrature(pressure, DEFAULT_ORDER);
    let nq = pressure.family().scalar_basis_len();
    Ok(assemble_local(
        pressure.n_dofs(),
        velocity.n_dofs(),
        velocity.mesh().n_cells(),
        |cell| {
            let rows = pressure.cell_dofs(cell);
            let cols = velocity.cell_dofs(cell);
            let mut local = vec![0.0; nq * 18];
            for (vp, pp) in vq.cell(cell).iter().zip(pq.cell(cell)) {
                for i in 0..nq {
                    let q = pp.values[i] * vp.jxw;
                    for b in 0..9 {
                        for d in 0..2 {
                            local[i * 18 + 2 * b + d] -= q * vp.grads[b][d];
                        }
                    }
                }
            }
            LocalMatrix {
                rows,
                cols,
                values: local,
            }
        },
    ))
}

/// `<N v, w> = rho_f ((u_n . grad) v, w)`; linear in `u_n`.
pub fn assemble_convection(space: &FeSpace, u_n: &[f64], rho_f: f64) -> Result<CsrMatrix> {
    require_vector(space)?;
    if u_n.len() != space.n_dofs() {
        return Err(Error::ShapeMismatch(format!(
            "velocity vector has {} entries, space has {} DoFs",
            u_n.len(),
            space.n_dofs()
        )));
    }
    let quad = quadrature(space, CONVECTION_ORDER);
    let n = space.n_dofs();
    Ok(assemble_local(n, n, space.mesh().n_cells(), |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for qp in quad.cell(cell) {
            let mut adv = [0.0; 2];
            for k in 0..9 {
                adv[0] += u_n[dofs[2 * k]] * qp.values[k];
                adv[1] += u_n[dofs[2 * k + 1]] * qp.values[k];
            }
            let w = rho_f * qp.jxw;
            for a in 0..9 {
                for b in 0..9 {
                    let v = w * qp.values[a] * (adv[0] * qp.grads[b][0] + adv[1] * qp.grads[b][1]);
                    for c in 0..2 {
                        local[(2 * a + c) * 18 + 2 * b + c] += v;
                    }
                }
            }
        }
        LocalMatrix {
            rows: dofs.clone(),
            cols: dofs,
            values: local,
        }
    }))
}

/// `(f, v)` for a vector-valued volume force density `f`.
pub fn assemble_load(
    space: &FeSpace,
    force: impl Fn(&Point2) -> Vector2<f64> + Sync,
) -> Result<Vec<f64>> {
    require_vector(space)?;
    let quad = quadrature(space, CONVECTION_ORDER);
    Ok(assemble_local_vector(
        space.n_dofs(),
        space.mesh().n_cells(),
        |cell| {
            let dofs = space.cell_dofs(cell);
            let mut local = vec![0.0; 18];
            for qp in quad.cell(cell) {
                let f = force(&qp.x) * qp.jxw;
                for a in 0..9 {
                    local[2 * a] += f.x * qp.values[a];
                    local[2 * a + 1] += f.y * qp.values[a];
                }
            }
            (dofs, local)
        },
    ))
}

/// `(tau, v)` over the faces carrying `marker`; 3-point Gauss per face.
pub fn assemble_traction(
    space: &FeSpace,
    marker: BoundaryMarker,
    traction: impl Fn(&Point2) -> Vector2<f64>,
) -> Result<Vec<f64>> {
    require_vector(space)?;
    let mut out = vec![0.0; space.n_dofs()];
    for face in space.mesh().faces_with(marker)? {
        for (r, w, ds) in face_quadrature(space, face.cell, face.local_face) {
            let x = space.mesh().map_to_physical(face.cell, &r);
            let (vals, _, _) = space.basis_at(face.cell, &r);
            let t = traction(&x) * (w * ds);
            for a in 0..9 {
                out[space.dof(face.cell, a, 0)] += t.x * vals[a];
                out[space.dof(face.cell, a, 1)] += t.y * vals[a];
            }
        }
    }
    Ok(out)
}

/// 3-point Gauss rule on local face `face` of `cell`: (reference point,
/// weight on [0,1], physical length element).
pub(crate) fn face_quadrature(
    space: &FeSpace,
    cell: usize,
    face: usize,
) -> Vec<(Point2, f64, f64)> {
    let (t, w) = super::quadrature::gauss_legendre_1d(3);
    let corners = space.mesh().corners(cell);
    let (a, b) = (corners[face], corners[(face + 1) % 4]);
    let length = (b - a).norm();
    t.iter()
        .zip(&w)
        .map(|(&s, &ws)| {
            let r = match face {
                0 => Point2::new(s, 0.0),
                1 => Point2::new(1.0, s),
                2 => Point2::new(1.0 - s, 1.0),
                _ => Point2::new(0.0, 1.0 - s),
            };
            (r, ws, length)
        })
        .collect()
}

fn require_vector(space: &FeSpace) -> Result<()> {
    if space.family() != ElementFamily::Q2Vector {
        return Err(Error::InvalidArgument(
            "operator requires a Q2 vector space".into(),
        ));
    }
    Ok(())
}
