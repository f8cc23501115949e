//! Steady Stokes solve on the fluid mesh alone, with the pressure mean
//! fixed by a scalar multiplier. Used for manufactured-solution checks.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::fem::assembly::CONVECTION_ORDER;
use crate::fem::{
    assemble_divergence, assemble_load, assemble_viscous, gauss_rule, CsrMatrix, ElementFamily,
    FeSpace, TripletBuilder,
};
use crate::linalg::{flatten, BlockSystem, DirectSolver};
use crate::mesh::{BoundaryMarker, Point2};

/// Solves `a(u, v) - (div v, p) = (f, v)`, `-(div u, q) = 0` with u = 0 on
/// the whole boundary and zero pressure mean. Returns `(u, p)`.
pub fn solve_stokes(
    velocity: &FeSpace,
    pressure: &FeSpace,
    nu: f64,
    force: impl Fn(&Point2) -> Vector2<f64> + Sync,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if pressure.family() != ElementFamily::P1Disc {
        return Err(Error::ShapeMismatch("pressure space must be P1disc".into()));
    }
    let nu_dofs = velocity.n_dofs();
    let np = pressure.n_dofs();
    let a = assemble_viscous(velocity, nu)?;
    let b = assemble_divergence(velocity, pressure)?;
    // pressure mean: ∫ q_i for every basis function
    let quad = pressure.cell_quadrature(&gauss_rule(2)?);
    let mut mean = TripletBuilder::new(1, np);
    for cell in 0..pressure.mesh().n_cells() {
        for qp in quad.cell(cell) {
            for k in 0..3 {
                mean.push(0, pressure.dof(cell, k, 0), qp.jxw * qp.values[k]);
            }
        }
    }
    let mean: CsrMatrix = mean.build();

    // the multiplier slot carries the single mean-pressure constraint
    let mut sys = BlockSystem::new([nu_dofs, np, 0, 1]);
    sys.set_block(0, 0, a)?;
    sys.set_block(0, 1, b.transpose())?;
    sys.set_block(1, 0, b)?;
    sys.set_block(1, 3, mean.transpose())?;
    sys.set_block(3, 1, mean)?;
    sys.set_rhs(0, assemble_load(velocity, force)?)?;
    let faces = velocity.mesh().faces_with(BoundaryMarker::All)?;
    let nodes = velocity.boundary_nodes(&faces);
    let dofs: Vec<usize> = nodes.iter().flat_map(|&n| [2 * n, 2 * n + 1]).collect();
    sys.constrain(0, &dofs, &vec![0.0; dofs.len()])?;
    let (mat, rhs) = flatten(&sys)?;
    let (x, _) = DirectSolver::new().solve(&mat, &rhs)?;
    Ok((x[..nu_dofs].to_vec(), x[nu_dofs..nu_dofs + np].to_vec()))
}

/// L² norm of `exact − u_h` for a vector field.
pub fn l2_error_vector(
    space: &FeSpace,
    dofs: &[f64],
    exact: impl Fn(&Point2) -> [f64; 2],
) -> Result<f64> {
    let rule = gauss_rule(CONVECTION_ORDER + 1)?;
    let mut sum = 0.0;
    for cell in 0..space.mesh().n_cells() {
        for (r, w) in rule.points.iter().zip(&rule.weights) {
            let (v, _) = space.evaluate(dofs, cell, r);
            let x = space.mesh().map_to_physical(cell, r);
            let det = space.mesh().jacobian(cell, r).determinant();
            let e = exact(&x);
            sum += w * det * ((e[0] - v[0]).powi(2) + (e[1] - v[1]).powi(2));
        }
    }
    Ok(sum.sqrt())
}

/// L² norm of `exact − p_h` for a scalar field.
pub fn l2_error_scalar(
    space: &FeSpace,
    dofs: &[f64],
    exact: impl Fn(&Point2) -> f64,
) -> Result<f64> {
    let rule = gauss_rule(CONVECTION_ORDER + 1)?;
    let mut sum = 0.0;
    for cell in 0..space.mesh().n_cells() {
        for (r, w) in rule.points.iter().zip(&rule.weights) {
            let (v, _) = space.evaluate(dofs, cell, r);
            let x = space.mesh().map_to_physical(cell, r);
            let det = space.mesh().jacobian(cell, r).determinant();
            sum += w * det * (exact(&x) - v[0]).powi(2);
        }
    }
    Ok(sum.sqrt())
}
