//! Kinematics on the solid reference mesh and the solid-side operators.

use nalgebra::Matrix2;

use crate::constitutive::{piola_stress, piola_tangent, Material, Tensor2};
use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_local, assemble_local_vector, LocalMatrix};
use crate::fem::{CellQuadrature, CsrMatrix, FeSpace, QuadratureRule};
use crate::par;

/// Deformation gradient data at one solid quadrature point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicPoint {
    pub f: Tensor2,
    pub j: f64,
    pub f_inv_t: Tensor2,
}

/// F, J and F^{-T} at every (cell, quadrature point), plus the basis data
/// they were computed from.
#[derive(Debug, Clone)]
pub struct DeformationField {
    pub quad: CellQuadrature,
    pub points: Vec<KinematicPoint>,
}

impl DeformationField {
    pub fn cell(&self, cell: usize) -> &[KinematicPoint] {
        let n = self.quad.n_points;
        &self.points[cell * n..(cell + 1) * n]
    }
}

/// Gradient of a vector field at a quadrature point; row = component.
pub(crate) fn field_gradient(
    space: &FeSpace,
    dofs: &[f64],
    cell: usize,
    grads: &[[f64; 2]; 9],
) -> Tensor2 {
    let mut g = Matrix2::zeros();
    for (k, gk) in grads.iter().enumerate() {
        for c in 0..2 {
            let d = dofs[space.dof(cell, k, c)];
            g[(c, 0)] += d * gk[0];
            g[(c, 1)] += d * gk[1];
        }
    }
    g
}

/// Evaluates F = I + grad w on every quadrature point; fails on the first
/// cell (lowest index) with det F <= 0.
pub fn eval_deformation(
    space: &FeSpace,
    w: &[f64],
    rule: &QuadratureRule,
) -> Result<DeformationField> {
    if space.components() != 2 {
        return Err(Error::ShapeMismatch(
            "solid space must be vector valued".into(),
        ));
    }
    if w.len() != space.n_dofs() {
        return Err(Error::ShapeMismatch(format!(
            "displacement has {} entries, space has {} DoFs",
            w.len(),
            space.n_dofs()
        )));
    }
    let quad = space.cell_quadrature(rule);
    let per_cell = par::try_map_indexed(space.mesh().n_cells(), |cell| {
        quad.cell(cell)
            .iter()
            .enumerate()
            .map(|(q, qp)| {
                let f = Tensor2::identity() + field_gradient(space, w, cell, &qp.grads);
                let j = f.determinant();
                if !(j > 0.0) || !j.is_finite() {
                    return Err(Error::InvertedElement {
                        cell,
                        point: q,
                        det: j,
                    });
                }
                let f_inv_t = Tensor2::new(f[(1, 1)], -f[(1, 0)], -f[(0, 1)], f[(0, 0)]) / j;
                Ok(KinematicPoint { f, j, f_inv_t })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(DeformationField {
        quad,
        points: per_cell.into_iter().flatten().collect(),
    })
}

fn check(space: &FeSpace, defo: &DeformationField) -> Result<()> {
    if defo.quad.points.len() != space.mesh().n_cells() * defo.quad.n_points {
        return Err(Error::ShapeMismatch(
            "deformation field does not match the solid mesh".into(),
        ));
    }
    Ok(())
}

/// `<M_s z, y> = (δρ z, y)_B`, δρ = ρ_s0 − ρ_f J.
pub fn assemble_solid_mass(
    space: &FeSpace,
    defo: &DeformationField,
    rho_s0: f64,
    rho_f: f64,
) -> Result<CsrMatrix> {
    check(space, defo)?;
    let n = space.n_dofs();
    Ok(assemble_local(n, n, space.mesh().n_cells(), |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for (qp, kp) in defo.quad.cell(cell).iter().zip(defo.cell(cell)) {
            let w = (rho_s0 - rho_f * kp.j) * qp.jxw;
            for a in 0..9 {
                for b in 0..9 {
                    let m = w * qp.values[a] * qp.values[b];
                    local[(2 * a) * 18 + 2 * b] += m;
                    local[(2 * a + 1) * 18 + 2 * b + 1] += m;
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

/// Solid excess viscosity form
/// `(ν_s−ν_f)/4 ∫_B S(X):S(Y) J`, `S(X) = ∇X F^{-1} + F^{-T} ∇Xᵀ`.
pub fn assemble_solid_viscous(
    space: &FeSpace,
    defo: &DeformationField,
    nu_s: f64,
    nu_f: f64,
) -> Result<CsrMatrix> {
    check(space, defo)?;
    let n = space.n_dofs();
    let k = 0.25 * (nu_s - nu_f);
    Ok(assemble_local(n, n, space.mesh().n_cells(), |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for (qp, kp) in defo.quad.cell(cell).iter().zip(defo.cell(cell)) {
            let w = k * kp.j * qp.jxw;
            // h_a = F^{-T} g_a, so that ∇(φ_a e_c) F^{-1} = e_c ⊗ h_a
            let h: Vec<[f64; 2]> = qp
                .grads
                .iter()
                .map(|g| {
                    let v = kp.f_inv_t * nalgebra::Vector2::new(g[0], g[1]);
                    [v.x, v.y]
                })
                .collect();
            for a in 0..9 {
                for b in 0..9 {
                    let dot = h[a][0] * h[b][0] + h[a][1] * h[b][1];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut v = 2.0 * h[a][d] * h[b][c];
                            if c == d {
                                v += 2.0 * dot;
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

/// Linearized elastic term about F^n: returns `(K_e, r_e)` with
/// `(P(F^{n+1}), ∇Y)_B ≈ K_e w^{n+1} + r_e`.
pub fn assemble_elastic(
    space: &FeSpace,
    defo: &DeformationField,
    mat: &Material,
) -> Result<(CsrMatrix, Vec<f64>)> {
    check(space, defo)?;
    let n = space.n_dofs();
    let n_cells = space.mesh().n_cells();
    let tangents = par::try_map_indexed(defo.points.len(), |i| {
        let f = defo.points[i].f;
        Ok::<_, Error>((piola_tangent(&f, mat)?, piola_stress(&f, mat)?))
    })?;
    let nq = defo.quad.n_points;
    let k = assemble_local(n, n, n_cells, |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for (q, qp) in defo.quad.cell(cell).iter().enumerate() {
            let (a4, _) = &tangents[cell * nq + q];
            for a in 0..9 {
                let ga = qp.grads[a];
                for b in 0..9 {
                    let gb = qp.grads[b];
                    for c in 0..2 {
                        for d in 0..2 {
                            let mut s = 0.0;
                            for j in 0..2 {
                                for l in 0..2 {
                                    s += a4.get(c, j, d, l) * ga[j] * gb[l];
                                }
                            }
                            local[(2 * a + c) * 18 + 2 * b + d] += qp.jxw * s;
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
    });
    let r = assemble_local_vector(n, n_cells, |cell| {
        let dofs = space.cell_dofs(cell);
        let mut local = vec![0.0; 18];
        for (q, (qp, kp)) in defo.quad.cell(cell).iter().zip(defo.cell(cell)).enumerate() {
            let (a4, p) = &tangents[cell * nq + q];
            let grad_w = kp.f - Tensor2::identity();
            let s = p - a4.contract(&grad_w);
            for a in 0..9 {
                let g = qp.grads[a];
                for c in 0..2 {
                    local[2 * a + c] += qp.jxw * (s[(c, 0)] * g[0] + s[(c, 1)] * g[1]);
                }
            }
        }
        (dofs, local)
    });
    Ok((k, r))
}

/// `(P(F), ∇Y)_B` assembled without linearization.
pub fn assemble_stress_divergence(
    space: &FeSpace,
    defo: &DeformationField,
    mat: &Material,
) -> Result<Vec<f64>> {
    check(space, defo)?;
    let stresses =
        par::try_map_indexed(defo.points.len(), |i| piola_stress(&defo.points[i].f, mat))?;
    let nq = defo.quad.n_points;
    Ok(assemble_local_vector(
        space.n_dofs(),
        space.mesh().n_cells(),
        |cell| {
            let dofs = space.cell_dofs(cell);
            let mut local = vec![0.0; 18];
            for (q, qp) in defo.quad.cell(cell).iter().enumerate() {
                let p = &stresses[cell * nq + q];
                for a in 0..9 {
                    let g = qp.grads[a];
                    for c in 0..2 {
                        local[2 * a + c] += qp.jxw * (p[(c, 0)] * g[0] + p[(c, 1)] * g[1]);
                    }
                }
            }
            (dofs, local)
        },
    ))
}
