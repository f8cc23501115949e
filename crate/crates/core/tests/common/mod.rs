#![allow(dead_code)]

pub mod oracle;
pub mod vtk_reader;

use std::sync::Arc;

use ibfsi_core::constitutive::Material;
use ibfsi_core::coupling::{
    assemble_bs, assemble_cf, assemble_cs, assemble_solid_pressure_mass, coupling_quadrature,
};
use ibfsi_core::fem::gauss_rule;
use ibfsi_core::fem::{
    assemble_convection, assemble_divergence, assemble_mass, assemble_viscous, CsrMatrix,
    ElementFamily, FeSpace,
};
use ibfsi_core::mesh::{make_disk_mesh, make_rect_grid, Point2};
use ibfsi_core::solid::{
    assemble_elastic, assemble_solid_mass, assemble_solid_viscous, eval_deformation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oracle::{Acc, Q2};

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Worst relative mismatch `|y^T A x - oracle| / sum|oracle terms|` of one operator.
#[derive(Debug, Clone)]
pub struct OracleResult {
    pub name: &'static str,
    pub worst: f64,
}

fn compare(
    name: &'static str,
    rng: &mut ChaCha8Rng,
    trials: usize,
    matrix: &CsrMatrix,
    oracle: impl Fn(&[f64], &[f64]) -> Acc,
) -> OracleResult {
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let y = random_vec(rng, matrix.nrows());
        let x = random_vec(rng, matrix.ncols());
        let got = matrix.bilinear(&y, &x);
        let want = oracle(&y, &x);
        worst = worst.max((got - want.value).abs() / want.magnitude.max(f64::MIN_POSITIVE));
    }
    OracleResult { name, worst }
}

pub const FLUID_GRID: (usize, usize) = (7, 6);
pub const MATERIAL: Material = Material {
    mu_e: 3.0,
    nu: 0.3,
    nu_s: 2.0,
    rho_s0: 0.8,
};
pub const RHO_F: f64 = 1.3;
pub const NU_F: f64 = 0.05;
pub const KAPPA: f64 = 50.0;

/// Evaluates every assembled operator against the quadrature-loop oracle.
pub fn operator_oracles(trials: usize, seed: u64) -> Vec<OracleResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fmesh = Arc::new(
        make_rect_grid(
            FLUID_GRID.0,
            FLUID_GRID.1,
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
        )
        .unwrap(),
    );
    let vel = FeSpace::new(fmesh.clone(), ElementFamily::Q2Vector);
    let pre = FeSpace::new(fmesh, ElementFamily::P1Disc);
    let smesh = Arc::new(make_disk_mesh(Point2::zeros(), 0.2, 1).unwrap());
    let sol = FeSpace::new(smesh, ElementFamily::Q2Vector);
    let fq = Q2::new(&vel);
    let sq = Q2::new(&sol);

    // a smooth, moderately distorted placement of the solid inside the box
    let w_n = sol
        .interpolate(|s| {
            [
                0.47 - 0.15 * s.x + 0.03 * (7.0 * s.y).sin(),
                0.52 - 0.1 * s.y + 0.02 * (5.0 * s.x).cos() + 0.05 * s.x,
            ]
        })
        .unwrap();
    let pts = oracle::solid_points(&sq, &w_n);
    let u_n = random_vec(&mut rng, vel.n_dofs());

    let mut out = Vec::new();
    let m_f = assemble_mass(&vel, |_| RHO_F);
    out.push(compare("M_f", &mut rng, trials, &m_f, |y, x| {
        oracle::fluid_mass(&fq, RHO_F, y, x)
    }));
    let a_f = assemble_viscous(&vel, NU_F).unwrap();
    out.push(compare("A_f", &mut rng, trials, &a_f, |y, x| {
        oracle::fluid_viscous(&fq, NU_F, y, x)
    }));
    let b_f = assemble_divergence(&vel, &pre).unwrap();
    out.push(compare("B_f", &mut rng, trials, &b_f, |y, x| {
        oracle::fluid_divergence(&fq, y, x)
    }));
    let n = assemble_convection(&vel, &u_n, RHO_F).unwrap();
    out.push(compare("N", &mut rng, trials, &n, |y, x| {
        oracle::fluid_convection(&fq, RHO_F, &u_n, y, x)
    }));

    let defo = eval_deformation(&sol, &w_n, &gauss_rule(3).unwrap()).unwrap();
    let m_s = assemble_solid_mass(&sol, &defo, MATERIAL.rho_s0, RHO_F).unwrap();
    out.push(compare("M_s", &mut rng, trials, &m_s, |y, x| {
        oracle::solid_mass(&sq, &pts, MATERIAL.rho_s0, RHO_F, y, x)
    }));
    let a_v = assemble_solid_viscous(&sol, &defo, MATERIAL.nu_s, NU_F).unwrap();
    out.push(compare("A_s^v", &mut rng, trials, &a_v, |y, x| {
        oracle::solid_viscous(&sq, &pts, MATERIAL.nu_s, NU_F, y, x)
    }));
    let (k_e, _) = assemble_elastic(&sol, &defo, &MATERIAL).unwrap();
    out.push(compare("K_e", &mut rng, trials, &k_e, |y, x| {
        oracle::elastic_tangent(&sq, &pts, MATERIAL.mu_e, MATERIAL.nu, y, x)
    }));
    let c_s = assemble_cs(&sol, &sol).unwrap();
    out.push(compare("C_s", &mut rng, trials, &c_s, |y, x| {
        oracle::coupling_solid(&sq, y, x)
    }));

    let cq = coupling_quadrature(&sol, &w_n, vel.mesh(), None).unwrap();
    let c_f = assemble_cf(&cq, &sol, &vel).unwrap();
    out.push(compare("C_f", &mut rng, trials, &c_f, |y, x| {
        oracle::coupling_fluid(&sq, &pts, &fq, FLUID_GRID, y, x)
    }));
    let b_s = assemble_bs(&cq, &pre, &sol).unwrap();
    out.push(compare("B_s", &mut rng, trials, &b_s, |y, x| {
        oracle::solid_divergence(&sq, &pts, FLUID_GRID, y, x)
    }));
    let m_p = assemble_solid_pressure_mass(&cq, &pre, KAPPA).unwrap();
    out.push(compare("M_p", &mut rng, trials, &m_p, |y, x| {
        oracle::solid_pressure_mass(&pts, FLUID_GRID, KAPPA, y, x)
    }));
    out
}
