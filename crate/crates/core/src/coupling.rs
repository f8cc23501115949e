//! Cross-mesh operators: the coupling form on the solid, its fluid
//! counterpart evaluated through X^n, and the solid pressure terms.
//!
//! All cross-mesh integrals use the solid quadrature; each solid point is
//! located in the fluid mesh once per step.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fem::assembly::{assemble_local, assemble_local_vector, LocalMatrix};
use crate::fem::{gauss_rule, CsrMatrix, ElementFamily, FeSpace, QuadratureRule};
use crate::mesh::{Point2, PointLocation, QuadMesh};
use crate::par;
use crate::solid::{eval_deformation, DeformationField, KinematicPoint};

/// Solid quadrature order used for every coupling integral.
pub const COUPLING_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPoint {
    pub solid_cell: usize,
    /// Reference coordinates inside the solid cell.
    pub s_ref: Point2,
    /// Quadrature weight times the solid map determinant.
    pub weight: f64,
    /// Current position X^n(s).
    pub x: Point2,
    pub host: PointLocation,
    pub kin: KinematicPoint,
}

/// Per solid quadrature point records, ordered by (cell, point).
#[derive(Debug, Clone)]
pub struct CouplingQuadrature {
    pub defo: DeformationField,
    pub points: Vec<CouplingPoint>,
}

impl CouplingQuadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Sorted list of fluid cells hosting at least one point.
    pub fn host_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = self.points.iter().map(|p| p.host.cell_index).collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Locates X^n(s_q) = s_q + w^n(s_q) for every solid quadrature point.
/// `previous` supplies host cells used as search hints.
pub fn build_coupling_quadrature(
    solid_space: &FeSpace,
    w_n: &[f64],
    fluid_mesh: &QuadMesh,
    rule: &QuadratureRule,
    previous: Option<&CouplingQuadrature>,
) -> Result<CouplingQuadrature> {
    let defo = eval_deformation(solid_space, w_n, rule)?;
    let nq = defo.quad.n_points;
    let hints = previous.filter(|p| p.points.len() == defo.points.len());
    let per_cell = par::try_map_indexed(solid_space.mesh().n_cells(), |cell| {
        (0..nq)
            .map(|q| {
                let qp = &defo.quad.cell(cell)[q];
                let mut disp = [0.0; 2];
                for k in 0..9 {
                    for (c, d) in disp.iter_mut().enumerate() {
                        *d += w_n[solid_space.dof(cell, k, c)] * qp.values[k];
                    }
                }
                let x = qp.x + Vector2::new(disp[0], disp[1]);
                let hint = hints.map(|h| h.points[cell * nq + q].host.cell_index);
                let host = fluid_mesh.locate_point(&x, hint)?;
                Ok(CouplingPoint {
                    solid_cell: cell,
                    s_ref: rule.points[q],
                    weight: qp.jxw,
                    x,
                    host,
                    kin: defo.cell(cell)[q],
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(CouplingQuadrature {
        defo,
        points: per_cell.into_iter().flatten().collect(),
    })
}

/// Convenience wrapper using the default coupling rule.
pub fn coupling_quadrature(
    solid_space: &FeSpace,
    w_n: &[f64],
    fluid_mesh: &QuadMesh,
    previous: Option<&CouplingQuadrature>,
) -> Result<CouplingQuadrature> {
    let rule = gauss_rule(COUPLING_ORDER)?;
    build_coupling_quadrature(solid_space, w_n, fluid_mesh, &rule, previous)
}

fn require_same(a: &FeSpace, b: &FeSpace) -> Result<()> {
    if !std::sync::Arc::ptr_eq(a.mesh_arc(), b.mesh_arc()) || a.family() != b.family() {
        return Err(Error::ShapeMismatch(
            "multiplier and solid spaces must coincide".into(),
        ));
    }
    Ok(())
}

fn check_coupling(coupq: &CouplingQuadrature, solid_like: &FeSpace) -> Result<()> {
    if coupq.points.len() != solid_like.mesh().n_cells() * coupq.defo.quad.n_points {
        return Err(Error::ShapeMismatch(
            "coupling quadrature does not match the solid mesh".into(),
        ));
    }
    Ok(())
}

/// Gram matrix of the H¹(B) inner product, componentwise.
pub fn assemble_cs(multiplier_space: &FeSpace, solid_space: &FeSpace) -> Result<CsrMatrix> {
    require_same(multiplier_space, solid_space)?;
    if solid_space.family() != ElementFamily::Q2Vector {
        return Err(Error::ShapeMismatch("solid space must be Q2 vector".into()));
    }
    let quad = solid_space.cell_quadrature(&gauss_rule(COUPLING_ORDER)?);
    let n = solid_space.n_dofs();
    Ok(assemble_local(n, n, solid_space.mesh().n_cells(), |cell| {
        let dofs = solid_space.cell_dofs(cell);
        let mut local = vec![0.0; 18 * 18];
        for qp in quad.cell(cell) {
            for a in 0..9 {
                for b in 0..9 {
                    let ga = qp.grads[a];
                    let gb = qp.grads[b];
                    let v = qp.jxw * (ga[0] * gb[0] + ga[1] * gb[1] + qp.values[a] * qp.values[b]);
                    local[(2 * a) * 18 + 2 * b] += v;
                    local[(2 * a + 1) * 18 + 2 * b + 1] += v;
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

/// `<C_f v, μ> = c(μ, v∘X^n)`; rows are multiplier DoFs, columns fluid velocity DoFs.
pub fn assemble_cf(
    coupq: &CouplingQuadrature,
    multiplier_space: &FeSpace,
    fluid_velocity_space: &FeSpace,
) -> Result<CsrMatrix> {
    check_coupling(coupq, multiplier_space)?;
    if fluid_velocity_space.family() != ElementFamily::Q2Vector {
        return Err(Error::ShapeMismatch(
            "fluid velocity space must be Q2 vector".into(),
        ));
    }
    let nq = coupq.defo.quad.n_points;
    Ok(assemble_local(
        multiplier_space.n_dofs(),
        fluid_velocity_space.n_dofs(),
        coupq.points.len(),
        |i| {
            let cp = &coupq.points[i];
            let sq = &coupq.defo.quad.cell(cp.solid_cell)[i % nq];
            let (psi, dpsi, _) =
                fluid_velocity_space.basis_at(cp.host.cell_index, &cp.host.ref_coords);
            let f = cp.kin.f;
            // F^T ∇ψ_b
            let ft_grad: Vec<[f64; 2]> = dpsi
                .iter()
                .map(|g| {
                    [
                        f[(0, 0)] * g[0] + f[(1, 0)] * g[1],
                        f[(0, 1)] * g[0] + f[(1, 1)] * g[1],
                    ]
                })
                .collect();
            let mut local = vec![0.0; 18 * 18];
            for a in 0..9 {
                let ga = sq.grads[a];
                for b in 0..9 {
                    let v = cp.weight
                        * (ga[0] * ft_grad[b][0] + ga[1] * ft_grad[b][1] + sq.values[a] * psi[b]);
                    local[(2 * a) * 18 + 2 * b] += v;
                    local[(2 * a + 1) * 18 + 2 * b + 1] += v;
                }
            }
            LocalMatrix {
                rows: multiplier_space.cell_dofs(cp.solid_cell),
                cols: fluid_velocity_space.cell_dofs(cp.host.cell_index),
                values: local,
            }
        },
    ))
}

/// `<B_s z, q> = (J q(X^n) F^{-T}, ∇_s z)_B`; rows are pressure DoFs, columns solid DoFs.
pub fn assemble_bs(
    coupq: &CouplingQuadrature,
    pressure_space: &FeSpace,
    solid_space: &FeSpace,
) -> Result<CsrMatrix> {
    check_coupling(coupq, solid_space)?;
    let nq = coupq.defo.quad.n_points;
    let np = pressure_space.family().scalar_basis_len();
    Ok(assemble_local(
        pressure_space.n_dofs(),
        solid_space.n_dofs(),
        coupq.points.len(),
        |i| {
            let cp = &coupq.points[i];
            let sq = &coupq.defo.quad.cell(cp.solid_cell)[i % nq];
            let (qv, _, _) = pressure_space.basis_at(cp.host.cell_index, &cp.host.ref_coords);
            let mut local = vec![0.0; np * 18];
            for b in 0..9 {
                let g = Vector2::new(sq.grads[b][0], sq.grads[b][1]);
                let h = cp.kin.f_inv_t * g;
                for k in 0..np {
                    let s = cp.weight * cp.kin.j * qv[k];
                    local[k * 18 + 2 * b] += s * h.x;
                    local[k * 18 + 2 * b + 1] += s * h.y;
                }
            }
            LocalMatrix {
                rows: pressure_space.cell_dofs(cp.host.cell_index),
                cols: solid_space.cell_dofs(cp.solid_cell),
                values: local,
            }
        },
    ))
}

/// `<M_p p, q> = (1/κ)(J p(X^n), q(X^n))_B`.
pub fn assemble_solid_pressure_mass(
    coupq: &CouplingQuadrature,
    pressure_space: &FeSpace,
    kappa: f64,
) -> Result<CsrMatrix> {
    if !(kappa > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let np = pressure_space.family().scalar_basis_len();
    let n = pressure_space.n_dofs();
    Ok(assemble_local(n, n, coupq.points.len(), |i| {
        let cp = &coupq.points[i];
        let (qv, _, _) = pressure_space.basis_at(cp.host.cell_index, &cp.host.ref_coords);
        let s = cp.weight * cp.kin.j / kappa;
        let mut local = vec![0.0; np * np];
        for a in 0..np {
            for b in 0..np {
                local[a * np + b] = s * qv[a] * qv[b];
            }
        }
        let dofs = pressure_space.cell_dofs(cp.host.cell_index);
        LocalMatrix {
            rows: dofs.clone(),
            cols: dofs,
            values: local,
        }
    }))
}

/// Excess body force on the fluid test functions:
/// `∫_B (ρ_s0 − ρ_f J) b · v(X^n) ds`.
pub fn assemble_solid_body_force(
    coupq: &CouplingQuadrature,
    fluid_velocity_space: &FeSpace,
    rho_s0: f64,
    rho_f: f64,
    body_force: Vector2<f64>,
) -> Vec<f64> {
    assemble_local_vector(fluid_velocity_space.n_dofs(), coupq.points.len(), |i| {
        let cp = &coupq.points[i];
        let (psi, _, _) = fluid_velocity_space.basis_at(cp.host.cell_index, &cp.host.ref_coords);
        let s = cp.weight * (rho_s0 - rho_f * cp.kin.j);
        let mut local = vec![0.0; 18];
        for b in 0..9 {
            local[2 * b] = s * psi[b] * body_force.x;
            local[2 * b + 1] = s * psi[b] * body_force.y;
        }
        (fluid_velocity_space.cell_dofs(cp.host.cell_index), local)
    })
}
