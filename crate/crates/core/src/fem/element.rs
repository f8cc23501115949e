use crate::mesh::Point2;

/// Element families used by the solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementFamily {
    /// Continuous biquadratic, two components.
    Q2Vector,
    /// Continuous biquadratic, scalar.
    Q2Scalar,
    /// Discontinuous per-cell linear `{1, xi - 1/2, eta - 1/2}`.
    P1Disc,
}

impl ElementFamily {
    pub fn components(self) -> usize {
        match self {
            ElementFamily::Q2Vector => 2,
            _ => 1,
        }
    }

    /// Number of scalar basis functions per cell.
    pub fn scalar_basis_len(self) -> usize {
        match self {
            ElementFamily::P1Disc => 3,
            _ => 9,
        }
    }
}

/// Values and reference gradients of the scalar basis at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeValues {
    pub values: Vec<f64>,
    pub gradients: Vec<[f64; 2]>,
}

/// Lattice position (i, j) in {0,1,2}^2 of Q2 local node `i + 3 j`.
pub const Q2_LATTICE: [(usize, usize); 9] = [
    (0, 0),
    (1, 0),
    (2, 0),
    (0, 1),
    (1, 1),
    (2, 1),
    (0, 2),
    (1, 2),
    (2, 2),
];

#[inline]
fn lagrange_1d(t: f64) -> ([f64; 3], [f64; 3]) {
    (
        [
            (2.0 * t - 1.0) * (t - 1.0),
            4.0 * t * (1.0 - t),
            t * (2.0 * t - 1.0),
        ],
        [4.0 * t - 3.0, 4.0 - 8.0 * t, 4.0 * t - 1.0],
    )
}

/// Biquadratic Lagrange basis on the 3x3 node lattice of [0,1]^2.
#[inline]
pub fn q2_basis(xi: f64, eta: f64) -> ([f64; 9], [[f64; 2]; 9]) {
    let (lx, dx) = lagrange_1d(xi);
    let (ly, dy) = lagrange_1d(eta);
    let mut v = [0.0; 9];
    let mut g = [[0.0; 2]; 9];
    for j in 0..3 {
        for i in 0..3 {
            v[i + 3 * j] = lx[i] * ly[j];
            g[i + 3 * j] = [dx[i] * ly[j], lx[i] * dy[j]];
        }
    }
    (v, g)
}

/// Per-cell linear basis centred at the cell's reference midpoint.
#[inline]
pub fn p1disc_basis(xi: f64, eta: f64) -> ([f64; 3], [[f64; 2]; 3]) {
    (
        [1.0, xi - 0.5, eta - 0.5],
        [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
    )
}

/// Scalar basis values and reference gradients of `family` at `reference`.
pub fn shape_eval(family: ElementFamily, reference: &Point2) -> ShapeValues {
    match family {
        ElementFamily::Q2Scalar | ElementFamily::Q2Vector => {
            let (v, g) = q2_basis(reference.x, reference.y);
            ShapeValues {
                values: v.to_vec(),
                gradients: g.to_vec(),
            }
        }
        ElementFamily::P1Disc => {
            let (v, g) = p1disc_basis(reference.x, reference.y);
            ShapeValues {
                values: v.to_vec(),
                gradients: g.to_vec(),
            }
        }
    }
}
