//! Direct quadrature-loop evaluation of the bilinear forms behind every
//! assembled operator. Shares no basis, geometry or quadrature code with
//! the library: nodes are matched to cells by physical position only.

use std::collections::HashMap;

use ibfsi_core::fem::FeSpace;
use ibfsi_core::mesh::Point2;
use nalgebra::{Matrix2, Vector2};

/// Tensor Gauss rule on [0,1]^2.
pub fn gauss(n: usize) -> Vec<([f64; 2], f64)> {
    let (x, w): (Vec<f64>, Vec<f64>) = match n {
        3 => (
            vec![-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4],
            vec![5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0],
        ),
        5 => (
            vec![
                -0.906_179_845_938_664,
                -0.538_469_310_105_683_1,
                0.0,
                0.538_469_310_105_683_1,
                0.906_179_845_938_664,
            ],
            vec![
                0.236_926_885_056_189_1,
                0.478_628_670_499_366_5,
                0.568_888_888_888_888_9,
                0.478_628_670_499_366_5,
                0.236_926_885_056_189_1,
            ],
        ),
        _ => panic!("oracle rule {n} not tabulated"),
    };
    let mut out = Vec::new();
    for j in 0..n {
        for i in 0..n {
            out.push(([(x[i] + 1.0) / 2.0, (x[j] + 1.0) / 2.0], w[i] * w[j] / 4.0));
        }
    }
    out
}

fn lagrange(t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            2.0 * (t - 0.5) * (t - 1.0),
            -4.0 * t * (t - 1.0),
            2.0 * t * (t - 0.5),
        ],
        [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
    )
}

/// Bilinear map of a cell with corners listed counter-clockwise from (0,0).
pub fn map(c: &[Point2; 4], r: [f64; 2]) -> (Point2, Matrix2<f64>) {
    let (s, t) = (r[0], r[1]);
    let x = c[0] * ((1.0 - s) * (1.0 - t))
        + c[1] * (s * (1.0 - t))
        + c[2] * (s * t)
        + c[3] * ((1.0 - s) * t);
    let ds = (c[1] - c[0]) * (1.0 - t) + (c[2] - c[3]) * t;
    let dt = (c[3] - c[0]) * (1.0 - s) + (c[2] - c[1]) * s;
    (x, Matrix2::new(ds.x, dt.x, ds.y, dt.y))
}

fn key(p: &Point2) -> (i64, i64) {
    ((p.x * 1e9).round() as i64, (p.y * 1e9).round() as i64)
}

/// Q2 vector field evaluator built from node positions.
pub struct Q2 {
    corners: Vec<[Point2; 4]>,
    nodes: Vec<[[usize; 3]; 3]>,
}

impl Q2 {
    pub fn new(space: &FeSpace) -> Self {
        let mesh = space.mesh();
        let lookup: HashMap<(i64, i64), usize> = space
            .node_points()
            .unwrap()
            .iter()
            .enumerate()
            .map(|(i, p)| (key(p), i))
            .collect();
        let corners: Vec<[Point2; 4]> = (0..mesh.n_cells()).map(|c| mesh.corners(c)).collect();
        let nodes = corners
            .iter()
            .map(|c| {
                let mut n = [[0; 3]; 3];
                for (i, row) in n.iter_mut().enumerate() {
                    for (j, v) in row.iter_mut().enumerate() {
                        let (x, _) = map(c, [i as f64 / 2.0, j as f64 / 2.0]);
                        *v = lookup[&key(&x)];
                    }
                }
                n
            })
            .collect();
        Self { corners, nodes }
    }

    pub fn n_cells(&self) -> usize {
        self.corners.len()
    }

    /// Physical point, det of the geometric Jacobian, field value and
    /// physical gradient (row = component).
    pub fn eval(
        &self,
        dofs: &[f64],
        cell: usize,
        r: [f64; 2],
    ) -> (Point2, f64, Vector2<f64>, Matrix2<f64>) {
        let (x, jac) = map(&self.corners[cell], r);
        let inv = jac.try_inverse().unwrap();
        let (ls, ds) = lagrange(r[0]);
        let (lt, dt) = lagrange(r[1]);
        let mut v = Vector2::zeros();
        let mut g_ref = Matrix2::<f64>::zeros();
        for i in 0..3 {
            for j in 0..3 {
                let n = self.nodes[cell][i][j];
                let d = Vector2::new(dofs[2 * n], dofs[2 * n + 1]);
                v += d * (ls[i] * lt[j]);
                for c in 0..2 {
                    g_ref[(c, 0)] += d[c] * ds[i] * lt[j];
                    g_ref[(c, 1)] += d[c] * ls[i] * dt[j];
                }
            }
        }
        (x, jac.determinant(), v, g_ref * inv)
    }
}

/// Discontinuous linear pressure in cell reference coordinates.
pub fn p1(dofs: &[f64], cell: usize, r: [f64; 2]) -> f64 {
    dofs[3 * cell] + dofs[3 * cell + 1] * (r[0] - 0.5) + dofs[3 * cell + 2] * (r[1] - 0.5)
}

/// Locates x in a uniform nx x ny grid of [0,1]^2 built row by row.
pub fn locate_unit_grid(x: &Point2, nx: usize, ny: usize) -> (usize, [f64; 2]) {
    let fx = x.x * nx as f64;
    let fy = x.y * ny as f64;
    let i = (fx.floor() as usize).min(nx - 1);
    let j = (fy.floor() as usize).min(ny - 1);
    (j * nx + i, [fx - i as f64, fy - j as f64])
}

/// Sum of weighted integrand values and of their magnitudes.
#[derive(Default, Clone, Copy, Debug)]
pub struct Acc {
    pub value: f64,
    pub magnitude: f64,
}

impl Acc {
    pub fn add(&mut self, v: f64) {
        self.value += v;
        self.magnitude += v.abs();
    }
}

fn sym(g: &Matrix2<f64>) -> Matrix2<f64> {
    (g + g.transpose()) * 0.5
}

pub fn fluid_mass(f: &Q2, rho: f64, y: &[f64], x: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for cell in 0..f.n_cells() {
        for (r, w) in gauss(5) {
            let (_, det, ux, _) = f.eval(x, cell, r);
            let (_, _, uy, _) = f.eval(y, cell, r);
            acc.add(w * det * rho * ux.dot(&uy));
        }
    }
    acc
}

pub fn fluid_viscous(f: &Q2, nu: f64, y: &[f64], x: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for cell in 0..f.n_cells() {
        for (r, w) in gauss(5) {
            let (_, det, _, gx) = f.eval(x, cell, r);
            let (_, _, _, gy) = f.eval(y, cell, r);
            acc.add(w * det * nu * sym(&gx).component_mul(&sym(&gy)).sum());
        }
    }
    acc
}

/// `-(div u_x, q_y)`.
pub fn fluid_divergence(f: &Q2, q: &[f64], x: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for cell in 0..f.n_cells() {
        for (r, w) in gauss(5) {
            let (_, det, _, g) = f.eval(x, cell, r);
            acc.add(-w * det * g.trace() * p1(q, cell, r));
        }
    }
    acc
}

/// `rho ((u_n . grad) u_x, u_y)`.
pub fn fluid_convection(f: &Q2, rho: f64, un: &[f64], y: &[f64], x: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for cell in 0..f.n_cells() {
        for (r, w) in gauss(5) {
            let (_, det, a, _) = f.eval(un, cell, r);
            let (_, _, _, gx) = f.eval(x, cell, r);
            let (_, _, uy, _) = f.eval(y, cell, r);
            acc.add(w * det * rho * (gx * a).dot(&uy));
        }
    }
    acc
}

/// Solid-side data at one reference quadrature point.
pub struct SolidPoint {
    pub cell: usize,
    pub r: [f64; 2],
    /// Reference weight times reference Jacobian determinant.
    pub dv: f64,
    pub x: Point2,
    pub f: Matrix2<f64>,
}

/// Quadrature points of the solid with F = I + grad w_n and X = s + w_n.
pub fn solid_points(s: &Q2, w_n: &[f64]) -> Vec<SolidPoint> {
    let mut out = Vec::new();
    for cell in 0..s.n_cells() {
        for (r, w) in gauss(3) {
            let (sx, det, wv, g) = s.eval(w_n, cell, r);
            out.push(SolidPoint {
                cell,
                r,
                dv: w * det,
                x: sx + wv,
                f: Matrix2::identity() + g,
            });
        }
    }
    out
}

pub fn solid_mass(
    s: &Q2,
    pts: &[SolidPoint],
    rho_s0: f64,
    rho_f: f64,
    y: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let (_, _, vx, _) = s.eval(x, p.cell, p.r);
        let (_, _, vy, _) = s.eval(y, p.cell, p.r);
        acc.add(p.dv * (rho_s0 - rho_f * p.f.determinant()) * vx.dot(&vy));
    }
    acc
}

/// `(nu_s - nu_f)/4 (J S(x), S(y))` with `S(X) = grad X F^{-1} + F^{-T} grad X^T`.
pub fn solid_viscous(
    s: &Q2,
    pts: &[SolidPoint],
    nu_s: f64,
    nu_f: f64,
    y: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let fi = p.f.try_inverse().unwrap();
        let strain = |g: Matrix2<f64>| g * fi + fi.transpose() * g.transpose();
        let (_, _, _, gx) = s.eval(x, p.cell, p.r);
        let (_, _, _, gy) = s.eval(y, p.cell, p.r);
        let v = strain(gx).component_mul(&strain(gy)).sum();
        acc.add(p.dv * 0.25 * (nu_s - nu_f) * p.f.determinant() * v);
    }
    acc
}

/// Directional derivative of P at F along H, in matrix form.
pub fn stress_derivative(
    f: &Matrix2<f64>,
    h: &Matrix2<f64>,
    mu: f64,
    poisson: f64,
) -> Matrix2<f64> {
    let beta = 2.0 * poisson / (1.0 - 2.0 * poisson);
    let fit = f.try_inverse().unwrap().transpose();
    let jb = f.determinant().powf(-beta);
    (h + (fit * beta * fit.component_mul(h).sum() + fit * h.transpose() * fit) * jb) * mu
}

pub fn stress(f: &Matrix2<f64>, mu: f64, poisson: f64) -> Matrix2<f64> {
    let beta = 2.0 * poisson / (1.0 - 2.0 * poisson);
    let fit = f.try_inverse().unwrap().transpose();
    (f - fit * f.determinant().powf(-beta)) * mu
}

/// `(dP(F_n)[grad x], grad y)`.
pub fn elastic_tangent(
    s: &Q2,
    pts: &[SolidPoint],
    mu: f64,
    poisson: f64,
    y: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let (_, _, _, gx) = s.eval(x, p.cell, p.r);
        let (_, _, _, gy) = s.eval(y, p.cell, p.r);
        acc.add(
            p.dv * stress_derivative(&p.f, &gx, mu, poisson)
                .component_mul(&gy)
                .sum(),
        );
    }
    acc
}

/// `(P(F(w)), grad y)` with F recomputed from `w`.
pub fn elastic_residual(s: &Q2, w: &[f64], mu: f64, poisson: f64, y: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for p in solid_points(s, w) {
        let (_, _, _, gy) = s.eval(y, p.cell, p.r);
        acc.add(p.dv * stress(&p.f, mu, poisson).component_mul(&gy).sum());
    }
    acc
}

/// Full H1(B) inner product on the reference configuration.
pub fn coupling_solid(s: &Q2, y: &[f64], x: &[f64]) -> Acc {
    let mut acc = Acc::default();
    for cell in 0..s.n_cells() {
        for (r, w) in gauss(3) {
            let (_, det, vx, gx) = s.eval(x, cell, r);
            let (_, _, vy, gy) = s.eval(y, cell, r);
            acc.add(w * det * (vx.dot(&vy) + gx.component_mul(&gy).sum()));
        }
    }
    acc
}

/// `c(mu_y, u_x(X))` with the fluid on a uniform unit-box grid.
pub fn coupling_fluid(
    s: &Q2,
    pts: &[SolidPoint],
    fl: &Q2,
    grid: (usize, usize),
    y: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let (host, rf) = locate_unit_grid(&p.x, grid.0, grid.1);
        let (_, _, u, gu) = fl.eval(x, host, rf);
        let (_, _, m, gm) = s.eval(y, p.cell, p.r);
        acc.add(p.dv * (u.dot(&m) + (gu * p.f).component_mul(&gm).sum()));
    }
    acc
}

/// `(J q_y(X) F^{-T}, grad z_x)`.
pub fn solid_divergence(
    s: &Q2,
    pts: &[SolidPoint],
    grid: (usize, usize),
    q: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let (host, rf) = locate_unit_grid(&p.x, grid.0, grid.1);
        let (_, _, _, gz) = s.eval(x, p.cell, p.r);
        let fit = p.f.try_inverse().unwrap().transpose();
        acc.add(p.dv * p.f.determinant() * p1(q, host, rf) * fit.component_mul(&gz).sum());
    }
    acc
}

/// `(1/kappa)(J p_x(X), q_y(X))`.
pub fn solid_pressure_mass(
    pts: &[SolidPoint],
    grid: (usize, usize),
    kappa: f64,
    y: &[f64],
    x: &[f64],
) -> Acc {
    let mut acc = Acc::default();
    for p in pts {
        let (host, rf) = locate_unit_grid(&p.x, grid.0, grid.1);
        acc.add(p.dv * p.f.determinant() / kappa * p1(x, host, rf) * p1(y, host, rf));
    }
    acc
}
