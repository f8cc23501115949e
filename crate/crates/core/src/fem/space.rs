use std::sync::Arc;

use nalgebra::Matrix2;

use super::element::{p1disc_basis, q2_basis, ElementFamily, Q2_LATTICE};
use super::quadrature::QuadratureRule;
use crate::error::{Error, Result};
use crate::mesh::{Point2, QuadMesh};
use crate::par;

/// A finite element space over a quadrilateral mesh with its DoF map.
///
/// Q2 nodes are numbered vertices first, then edge midpoints, then cell
/// centres. Vector spaces interleave components: DoF `2 * node + component`.
#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<QuadMesh>,
    family: ElementFamily,
    cell_nodes: Vec<[usize; 9]>,
    n_nodes: usize,
    n_dofs: usize,
}

/// Basis data of one cell quadrature point; for P1Disc only the first three
/// entries of `values` and `grads` are meaningful.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: Point2,
    pub jxw: f64,
    pub values: [f64; 9],
    pub grads: [[f64; 2]; 9],
}

/// Precomputed basis data at every quadrature point of every cell.
#[derive(Debug, Clone)]
pub struct CellQuadrature {
    pub n_points: usize,
    pub points: Vec<QuadPoint>,
}

impl CellQuadrature {
    pub fn cell(&self, cell: usize) -> &[QuadPoint] {
        &self.points[cell * self.n_points..(cell + 1) * self.n_points]
    }
}

impl FeSpace {
    pub fn new(mesh: Arc<QuadMesh>, family: ElementFamily) -> Self {
        let nv = mesh.n_vertices();
        let ne = mesh.n_edges();
        let (cell_nodes, n_nodes) = match family {
            ElementFamily::P1Disc => (Vec::new(), 3 * mesh.n_cells()),
            _ => {
                let nodes = (0..mesh.n_cells())
                    .map(|c| {
                        let v = mesh.cells()[c];
                        let e = mesh.cell_edges(c);
                        // lattice order i + 3 j; faces 0..3 are bottom, right, top, left
                        [
                            v[0],
                            nv + e[0],
                            v[1],
                            nv + e[3],
                            nv + ne + c,
                            nv + e[1],
                            v[3],
                            nv + e[2],
                            v[2],
                        ]
                    })
                    .collect();
                (nodes, nv + ne + mesh.n_cells())
            }
        };
        let n_dofs = n_nodes * family.components();
        Self {
            mesh,
            family,
            cell_nodes,
            n_nodes,
            n_dofs,
        }
    }

    pub fn mesh(&self) -> &QuadMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<QuadMesh> {
        &self.mesh
    }

    pub fn family(&self) -> ElementFamily {
        self.family
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn components(&self) -> usize {
        self.family.components()
    }

    /// Number of scalar nodes (Q2) or scalar DoFs (P1Disc).
    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Global scalar node ids of a Q2 cell, in lattice order.
    pub fn cell_nodes(&self, cell: usize) -> &[usize; 9] {
        &self.cell_nodes[cell]
    }

    /// Global DoF of local scalar basis `k` and component `c` on `cell`.
    #[inline]
    pub fn dof(&self, cell: usize, k: usize, c: usize) -> usize {
        match self.family {
            ElementFamily::P1Disc => 3 * cell + k,
            ElementFamily::Q2Scalar => self.cell_nodes[cell][k],
            ElementFamily::Q2Vector => 2 * self.cell_nodes[cell][k] + c,
        }
    }

    /// All DoFs of a cell: scalar basis major, component minor.
    pub fn cell_dofs(&self, cell: usize) -> Vec<usize> {
        let nb = self.family.scalar_basis_len();
        let nc = self.components();
        (0..nb)
            .flat_map(|k| (0..nc).map(move |c| (k, c)))
            .map(|(k, c)| self.dof(cell, k, c))
            .collect()
    }

    /// Physical coordinates of every scalar Q2 node.
    pub fn node_points(&self) -> Result<Vec<Point2>> {
        if self.family == ElementFamily::P1Disc {
            return Err(Error::InvalidArgument("P1Disc has no nodal points".into()));
        }
        let mut pts = vec![Point2::zeros(); self.n_nodes];
        for cell in 0..self.mesh.n_cells() {
            for (k, &(i, j)) in Q2_LATTICE.iter().enumerate() {
                let r = Point2::new(i as f64 / 2.0, j as f64 / 2.0);
                pts[self.cell_nodes[cell][k]] = self.mesh.map_to_physical(cell, &r);
            }
        }
        Ok(pts)
    }

    /// Nodal interpolant of `f` (Q2 families only).
    pub fn interpolate(&self, f: impl Fn(&Point2) -> [f64; 2]) -> Result<Vec<f64>> {
        let pts = self.node_points()?;
        let nc = self.components();
        let mut out = vec![0.0; self.n_dofs];
        for (n, p) in pts.iter().enumerate() {
            let v = f(p);
            for c in 0..nc {
                out[nc * n + c] = v[c];
            }
        }
        Ok(out)
    }

    /// DoFs of the scalar Q2 nodes lying on the given boundary faces.
    pub fn boundary_nodes(&self, faces: &[crate::mesh::BoundaryFace]) -> Vec<usize> {
        // lattice nodes of face f, in lattice index
        const FACE_NODES: [[usize; 3]; 4] = [[0, 1, 2], [2, 5, 8], [8, 7, 6], [6, 3, 0]];
        let mut nodes: Vec<usize> = faces
            .iter()
            .flat_map(|f| {
                FACE_NODES[f.local_face]
                    .iter()
                    .map(move |&k| self.cell_nodes[f.cell][k])
            })
            .collect();
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }

    /// Scalar basis values and physical gradients at a reference point of `cell`.
    #[inline]
    pub fn basis_at(&self, cell: usize, reference: &Point2) -> ([f64; 9], [[f64; 2]; 9], f64) {
        let jac = self.mesh.jacobian(cell, reference);
        let det = jac.determinant();
        let inv_t = jac
            .try_inverse()
            .map(|m| m.transpose())
            .unwrap_or_else(Matrix2::zeros);
        let mut values = [0.0; 9];
        let mut grads = [[0.0; 2]; 9];
        let nb = self.family.scalar_basis_len();
        let (rv, rg): (&[f64], &[[f64; 2]]);
        let q2;
        let p1;
        match self.family {
            ElementFamily::P1Disc => {
                p1 = p1disc_basis(reference.x, reference.y);
                rv = &p1.0;
                rg = &p1.1;
            }
            _ => {
                q2 = q2_basis(reference.x, reference.y);
                rv = &q2.0;
                rg = &q2.1;
            }
        }
        for k in 0..nb {
            values[k] = rv[k];
            grads[k] = [
                inv_t[(0, 0)] * rg[k][0] + inv_t[(0, 1)] * rg[k][1],
                inv_t[(1, 0)] * rg[k][0] + inv_t[(1, 1)] * rg[k][1],
            ];
        }
        (values, grads, det)
    }

    /// Value (per component) and physical gradient (row = component) of a
    /// discrete field at a reference point of `cell`.
    pub fn evaluate(
        &self,
        dofs: &[f64],
        cell: usize,
        reference: &Point2,
    ) -> ([f64; 2], [[f64; 2]; 2]) {
        let (v, g, _) = self.basis_at(cell, reference);
        let mut val = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for k in 0..self.family.scalar_basis_len() {
            for c in 0..self.components() {
                let d = dofs[self.dof(cell, k, c)];
                val[c] += d * v[k];
                grad[c][0] += d * g[k][0];
                grad[c][1] += d * g[k][1];
            }
        }
        (val, grad)
    }

    /// Basis data at all quadrature points of all cells.
    pub fn cell_quadrature(&self, rule: &QuadratureRule) -> CellQuadrature {
        let nq = rule.len();
        let per_cell = par::map_indexed(self.mesh.n_cells(), |cell| {
            rule.points
                .iter()
                .zip(&rule.weights)
                .map(|(r, w)| {
                    let (values, grads, det) = self.basis_at(cell, r);
                    QuadPoint {
                        x: self.mesh.map_to_physical(cell, r),
                        jxw: w * det,
                        values,
                        grads,
                    }
                })
                .collect::<Vec<_>>()
        });
        CellQuadrature {
            n_points: nq,
            points: per_cell.into_iter().flatten().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::make_rect_grid;

    fn grid(nx: usize, ny: usize) -> Arc<QuadMesh> {
        Arc::new(make_rect_grid(nx, ny, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap())
    }

    #[test]
    fn dof_counts() {
        let m = grid(3, 2);
        let v = FeSpace::new(m.clone(), ElementFamily::Q2Vector);
        assert_eq!(v.n_dofs(), 2 * 7 * 5);
        let s = FeSpace::new(m.clone(), ElementFamily::Q2Scalar);
        assert_eq!(s.n_dofs(), 7 * 5);
        let p = FeSpace::new(m, ElementFamily::P1Disc);
        assert_eq!(p.n_dofs(), 18);
    }

    #[test]
    fn interfaces_share_dofs() {
        let m = grid(2, 1);
        let s = FeSpace::new(m, ElementFamily::Q2Scalar);
        let right_of_0 = [2, 5, 8].map(|k| s.cell_nodes(0)[k]);
        let left_of_1 = [0, 3, 6].map(|k| s.cell_nodes(1)[k]);
        assert_eq!(right_of_0, left_of_1);
    }

    #[test]
    fn node_points_are_consistent() {
        let m = grid(3, 3);
        let s = FeSpace::new(m, ElementFamily::Q2Scalar);
        let pts = s.node_points().unwrap();
        let mut uniq: Vec<(i64, i64)> = pts
            .iter()
            .map(|p| ((p.x * 6.0).round() as i64, (p.y * 6.0).round() as i64))
            .collect();
        uniq.sort();
        uniq.dedup();
        assert_eq!(uniq.len(), 49);
    }

    #[test]
    fn interpolation_reproduces_quadratics() {
        let m = grid(2, 3);
        let s = FeSpace::new(m, ElementFamily::Q2Vector);
        let f = |p: &Point2| [p.x * p.x * p.y, p.y * p.y - p.x];
        let dofs = s.interpolate(f).unwrap();
        let (val, grad) = s.evaluate(&dofs, 3, &Point2::new(0.3, 0.6));
        let x = s.mesh().map_to_physical(3, &Point2::new(0.3, 0.6));
        let exact = f(&x);
        assert!((val[0] - exact[0]).abs() < 1e-14 && (val[1] - exact[1]).abs() < 1e-14);
        assert!((grad[0][0] - 2.0 * x.x * x.y).abs() < 1e-13);
        assert!((grad[1][1] - 2.0 * x.y).abs() < 1e-13);
    }
}
