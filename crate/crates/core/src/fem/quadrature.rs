use crate::error::{Error, Result};
use crate::mesh::Point2;

/// Tensor Gauss-Legendre rule on the reference square [0,1]^2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on [0,1] via Newton iteration on P_n.
pub fn gauss_legendre_1d(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev-like initial guess for the i-th root on [-1, 1]
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        // map from [-1,1] to [0,1]; nodes ascending
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Tensor rule with `points_per_dim` points per direction, exact for
/// polynomials of degree `2 * points_per_dim - 1` in each variable.
pub fn gauss_rule(points_per_dim: usize) -> Result<QuadratureRule> {
    if !(1..=6).contains(&points_per_dim) {
        return Err(Error::InvalidArgument(format!(
            "quadrature order must be in 1..=6, got {points_per_dim}"
        )));
    }
    let (x, w) = gauss_legendre_1d(points_per_dim);
    let mut points = Vec::with_capacity(points_per_dim * points_per_dim);
    let mut weights = Vec::with_capacity(points_per_dim * points_per_dim);
    for j in 0..points_per_dim {
        for i in 0..points_per_dim {
            points.push(Point2::new(x[i], x[j]));
            weights.push(w[i] * w[j]);
        }
    }
    Ok(QuadratureRule { points, weights })
}
