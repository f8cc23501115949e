//! Conforming quadrilateral meshes: the fixed fluid box and the Lagrangian
//! solid meshes (disk, annulus), plus point location in a mesh.

use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

pub type Point2 = Vector2<f64>;

/// Tolerance on reference coordinates when deciding whether a cell contains a point.
pub const CONTAINMENT_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryMarker {
    Bottom,
    Top,
    Left,
    Right,
    /// Matches every boundary face; the only marker on disk and annulus meshes.
    All,
}

impl BoundaryMarker {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "bottom" => Ok(Self::Bottom),
            "top" => Ok(Self::Top),
            "left" => Ok(Self::Left),
            "right" => Ok(Self::Right),
            "all" => Ok(Self::All),
            other => Err(Error::UnknownMarker(other.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Bottom => "bottom",
            Self::Top => "top",
            Self::Left => "left",
            Self::Right => "right",
            Self::All => "all",
        }
    }
}

/// Face `local_face` of a cell joins corners `local_face` and `local_face + 1 (mod 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub local_face: usize,
    pub marker: BoundaryMarker,
}

/// Host cell of a physical point and its coordinates in the reference square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLocation {
    pub cell_index: usize,
    pub ref_coords: Point2,
}

/// Bilinear corner shape functions on [0,1]^2 in counterclockwise corner order.
#[inline]
pub fn bilinear_shape(xi: f64, eta: f64) -> ([f64; 4], [[f64; 2]; 4]) {
    let vals = [
        (1.0 - xi) * (1.0 - eta),
        xi * (1.0 - eta),
        xi * eta,
        (1.0 - xi) * eta,
    ];
    let grads = [
        [-(1.0 - eta), -(1.0 - xi)],
        [1.0 - eta, -xi],
        [eta, xi],
        [-eta, 1.0 - xi],
    ];
    (vals, grads)
}

#[derive(Debug, Clone)]
struct BinGrid {
    origin: Point2,
    size: f64,
    nx: usize,
    ny: usize,
    bins: Vec<Vec<usize>>,
}

impl BinGrid {
    fn build(vertices: &[Point2], cells: &[[usize; 4]]) -> Self {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        let mut max_diam: f64 = 0.0;
        let boxes: Vec<(Point2, Point2)> = cells
            .iter()
            .map(|c| {
                let mut clo = vertices[c[0]];
                let mut chi = vertices[c[0]];
                for &v in &c[1..] {
                    clo = clo.inf(&vertices[v]);
                    chi = chi.sup(&vertices[v]);
                }
                (clo, chi)
            })
            .collect();
        for (clo, chi) in &boxes {
            lo = lo.inf(clo);
            hi = hi.sup(chi);
            max_diam = max_diam.max((chi - clo).norm());
        }
        let extent = (hi - lo).max().max(f64::MIN_POSITIVE);
        let size = if max_diam > 0.0 { max_diam } else { extent };
        let pad = 1e-9 * extent;
        let nx = (((hi.x - lo.x) / size).floor() as usize + 1).max(1);
        let ny = (((hi.y - lo.y) / size).floor() as usize + 1).max(1);
        let mut grid = BinGrid {
            origin: lo,
            size,
            nx,
            ny,
            bins: vec![Vec::new(); nx * ny],
        };
        for (ci, (clo, chi)) in boxes.iter().enumerate() {
            let (i0, j0) = grid.bin_of(&(clo - Point2::new(pad, pad)));
            let (i1, j1) = grid.bin_of(&(chi + Point2::new(pad, pad)));
            for j in j0..=j1 {
                for i in i0..=i1 {
                    grid.bins[j * nx + i].push(ci);
                }
            }
        }
        grid
    }

    fn bin_of(&self, x: &Point2) -> (usize, usize) {
        let clamp = |v: f64, n: usize| -> usize {
            if v <= 0.0 {
                0
            } else {
                (v.floor() as usize).min(n - 1)
            }
        };
        (
            clamp((x.x - self.origin.x) / self.size, self.nx),
            clamp((x.y - self.origin.y) / self.size, self.ny),
        )
    }

    fn candidates(&self, x: &Point2) -> &[usize] {
        let (i, j) = self.bin_of(x);
        &self.bins[j * self.nx + i]
    }
}

/// Geometry and connectivity of a conforming quadrilateral mesh.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct QuadMesh {
    vertices: Vec<Point2>,
    cells: Vec<[usize; 4]>,
    boundary_faces: Vec<BoundaryFace>,
    cell_edges: Vec<[usize; 4]>,
    n_edges: usize,
    bins: BinGrid,
}

impl QuadMesh {
    /// Validates orientation, conformity and boundary coverage.
    pub fn new(
        vertices: Vec<Point2>,
        cells: Vec<[usize; 4]>,
        boundary_faces: Vec<BoundaryFace>,
    ) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidMesh("mesh has no cells".into()));
        }
        for (ci, c) in cells.iter().enumerate() {
            if c.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "cell {ci} references a missing vertex"
                )));
            }
            for (k, &(xi, eta)) in [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
                .iter()
                .enumerate()
            {
                let det = jacobian_of(&vertices, c, xi, eta).determinant();
                if det <= 0.0 {
                    return Err(Error::InvalidMesh(format!(
                        "cell {ci} has non-positive Jacobian {det:e} at corner {k}"
                    )));
                }
            }
        }

        // Edge numbering in order of first appearance; each interior edge must be
        // traversed once in each direction.
        let mut edge_ids: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        let mut n_edges = 0;
        let mut directed = HashMap::new();
        for (ci, c) in cells.iter().enumerate() {
            let mut ce = [0usize; 4];
            for f in 0..4 {
                let (a, b) = (c[f], c[(f + 1) % 4]);
                if directed.insert((a, b), ci).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "face ({a}, {b}) traversed twice in the same direction"
                    )));
                }
                let key = (a.min(b), a.max(b));
                let entry = edge_ids.entry(key).or_insert_with(|| {
                    n_edges += 1;
                    (n_edges - 1, 0)
                });
                entry.1 += 1;
                if entry.1 > 2 {
                    return Err(Error::InvalidMesh(format!(
                        "edge {key:?} shared by more than two cells"
                    )));
                }
                ce[f] = entry.0;
            }
            cell_edges.push(ce);
        }
        let mut seen = HashMap::new();
        for bf in &boundary_faces {
            if bf.cell >= cells.len() || bf.local_face >= 4 {
                return Err(Error::InvalidMesh("boundary face out of range".into()));
            }
            let c = cells[bf.cell];
            let (a, b) = (c[bf.local_face], c[(bf.local_face + 1) % 4]);
            let key = (a.min(b), a.max(b));
            if edge_ids[&key].1 != 1 {
                return Err(Error::InvalidMesh(format!(
                    "boundary face {key:?} is interior"
                )));
            }
            if seen.insert(key, ()).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "boundary face {key:?} listed twice"
                )));
            }
        }
        let n_topological = edge_ids.values().filter(|e| e.1 == 1).count();
        if n_topological != boundary_faces.len() {
            return Err(Error::InvalidMesh(format!(
                "{} boundary faces listed, {} on the topological boundary",
                boundary_faces.len(),
                n_topological
            )));
        }

        let bins = BinGrid::build(&vertices, &cells);
        Ok(Self {
            vertices,
            cells,
            boundary_faces,
            cell_edges,
            n_edges,
            bins,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Global edge ids of the four faces of `cell`.
    pub fn cell_edges(&self, cell: usize) -> [usize; 4] {
        self.cell_edges[cell]
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn has_marker(&self, marker: BoundaryMarker) -> bool {
        marker == BoundaryMarker::All || self.boundary_faces.iter().any(|f| f.marker == marker)
    }

    /// Boundary faces carrying `marker` (every face for [`BoundaryMarker::All`]).
    pub fn faces_with(&self, marker: BoundaryMarker) -> Result<Vec<BoundaryFace>> {
        if !self.has_marker(marker) {
            return Err(Error::UnknownMarker(marker.name().to_string()));
        }
        Ok(self
            .boundary_faces
            .iter()
            .copied()
            .filter(|f| marker == BoundaryMarker::All || f.marker == marker)
            .collect())
    }

    pub fn corners(&self, cell: usize) -> [Point2; 4] {
        let c = self.cells[cell];
        [
            self.vertices[c[0]],
            self.vertices[c[1]],
            self.vertices[c[2]],
            self.vertices[c[3]],
        ]
    }

    /// Bilinear forward map of `cell` evaluated at reference coordinates.
    pub fn map_to_physical(&self, cell: usize, reference: &Point2) -> Point2 {
        let (n, _) = bilinear_shape(reference.x, reference.y);
        let c = self.cells[cell];
        (0..4).fold(Point2::zeros(), |acc, k| acc + self.vertices[c[k]] * n[k])
    }

    /// Jacobian dx/dxi of the bilinear map (columns are d/dxi, d/deta).
    pub fn jacobian(&self, cell: usize, reference: &Point2) -> Matrix2<f64> {
        jacobian_of(&self.vertices, &self.cells[cell], reference.x, reference.y)
    }

    /// Exact cell area (bilinear cells: shoelace formula).
    pub fn cell_area(&self, cell: usize) -> f64 {
        let p = self.corners(cell);
        0.5 * (0..4)
            .map(|k| {
                let (a, b) = (p[k], p[(k + 1) % 4]);
                a.x * b.y - b.x * a.y
            })
            .sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Area-weighted centroid.
    pub fn centroid(&self) -> Point2 {
        let mut acc = Point2::zeros();
        let mut area = 0.0;
        for cell in 0..self.n_cells() {
            let p = self.corners(cell);
            for k in 0..4 {
                let (a, b) = (p[k], p[(k + 1) % 4]);
                let cross = a.x * b.y - b.x * a.y;
                acc += (a + b) * cross;
                area += cross;
            }
        }
        acc / (3.0 * area)
    }

    /// Inverse bilinear map by Newton iteration. Returns `None` if the
    /// iteration fails to converge or the result lies outside the reference
    /// square by more than [`CONTAINMENT_TOL`].
    pub fn inverse_map(&self, cell: usize, x: &Point2) -> Option<Point2> {
        let mut r = Point2::new(0.5, 0.5);
        for _ in 0..NEWTON_MAX_ITER {
            let residual = self.map_to_physical(cell, &r) - x;
            let jac = self.jacobian(cell, &r);
            let delta = jac.try_inverse()? * residual;
            r -= delta;
            if !r.x.is_finite() || !r.y.is_finite() || r.amax() > 1e3 {
                return None;
            }
            if delta.amax() <= NEWTON_TOL {
                let inside = (-CONTAINMENT_TOL..=1.0 + CONTAINMENT_TOL).contains(&r.x)
                    && (-CONTAINMENT_TOL..=1.0 + CONTAINMENT_TOL).contains(&r.y);
                return inside.then(|| Point2::new(r.x.clamp(0.0, 1.0), r.y.clamp(0.0, 1.0)));
            }
        }
        None
    }

    fn bbox_contains(&self, cell: usize, x: &Point2) -> bool {
        let p = self.corners(cell);
        let mut lo = p[0];
        let mut hi = p[0];
        for q in &p[1..] {
            lo = lo.inf(q);
            hi = hi.sup(q);
        }
        let pad = 1e-9 * (hi - lo).amax();
        x.x >= lo.x - pad && x.x <= hi.x + pad && x.y >= lo.y - pad && x.y <= hi.y + pad
    }

    /// Finds the cell containing `x`. Among several containing cells (points
    /// on shared faces or vertices) the smallest index is returned. A hint is
    /// accepted only when `x` lies strictly inside it, so the result never
    /// depends on the hint.
    pub fn locate_point(&self, x: &Point2, hint: Option<usize>) -> Result<PointLocation> {
        if let Some(h) = hint.filter(|&h| h < self.n_cells()) {
            if self.bbox_contains(h, x) {
                if let Some(r) = self.inverse_map(h, x) {
                    let margin = r.x.min(r.y).min(1.0 - r.x).min(1.0 - r.y);
                    if margin > CONTAINMENT_TOL {
                        return Ok(PointLocation {
                            cell_index: h,
                            ref_coords: r,
                        });
                    }
                }
            }
        }
        for &cell in self.bins.candidates(x) {
            if !self.bbox_contains(cell, x) {
                continue;
            }
            if let Some(r) = self.inverse_map(cell, x) {
                return Ok(PointLocation {
                    cell_index: cell,
                    ref_coords: r,
                });
            }
        }
        Err(Error::PointOutsideMesh { x: x.x, y: x.y })
    }
}

fn jacobian_of(vertices: &[Point2], cell: &[usize; 4], xi: f64, eta: f64) -> Matrix2<f64> {
    let (_, g) = bilinear_shape(xi, eta);
    let mut jac = Matrix2::zeros();
    for k in 0..4 {
        let v = vertices[cell[k]];
        jac[(0, 0)] += v.x * g[k][0];
        jac[(0, 1)] += v.x * g[k][1];
        jac[(1, 0)] += v.y * g[k][0];
        jac[(1, 1)] += v.y * g[k][1];
    }
    jac
}

/// Uniform `nx` x `ny` tensor grid of the box `[lower, upper]`.
pub fn make_rect_grid(nx: usize, ny: usize, lower: Point2, upper: Point2) -> Result<QuadMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(
            "grid needs at least one cell per direction".into(),
        ));
    }
    if !(upper.x > lower.x && upper.y > lower.y) {
        return Err(Error::InvalidArgument(format!(
            "degenerate box [{lower:?}, {upper:?}]"
        )));
    }
    let (hx, hy) = (
        (upper.x - lower.x) / nx as f64,
        (upper.y - lower.y) / ny as f64,
    );
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny {
            upper.y
        } else {
            lower.y + j as f64 * hy
        };
        for i in 0..=nx {
            let x = if i == nx {
                upper.x
            } else {
                lower.x + i as f64 * hx
            };
            vertices.push(Point2::new(x, y));
        }
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    let mut faces = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let cell = cells.len();
            cells.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            let mut mark = |local_face, marker| {
                faces.push(BoundaryFace {
                    cell,
                    local_face,
                    marker,
                })
            };
            if j == 0 {
                mark(0, BoundaryMarker::Bottom);
            }
            if i == nx - 1 {
                mark(1, BoundaryMarker::Right);
            }
            if j == ny - 1 {
                mark(2, BoundaryMarker::Top);
            }
            if i == 0 {
                mark(3, BoundaryMarker::Left);
            }
        }
    }
    QuadMesh::new(vertices, cells, faces)
}

/// Merges vertices closer than a tolerance; lookups scan neighbouring buckets
/// so that points near a bucket boundary are still matched.
struct VertexPool {
    scale: f64,
    tol: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
    points: Vec<Point2>,
}

impl VertexPool {
    fn new(length: f64) -> Self {
        Self {
            scale: 1e6 / length,
            tol: 1e-9 * length,
            buckets: HashMap::new(),
            points: Vec::new(),
        }
    }

    fn insert(&mut self, p: Point2) -> usize {
        let key = (
            (p.x * self.scale).round() as i64,
            (p.y * self.scale).round() as i64,
        );
        for dj in -1..=1 {
            for di in -1..=1 {
                if let Some(ids) = self.buckets.get(&(key.0 + di, key.1 + dj)) {
                    if let Some(&id) = ids
                        .iter()
                        .find(|&&id| (self.points[id] - p).norm() <= self.tol)
                    {
                        return id;
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry(key).or_default().push(id);
        id
    }
}

/// Half-width of the central square block of the disk layout, relative to the radius.
const DISK_CORE_FRACTION: f64 = 0.4;

/// Five-block quadrilateral disk (central square plus four boundary-fitted
/// blocks), each block split into `2^refinement` x `2^refinement` cells.
/// Boundary vertices lie exactly on the circle.
pub fn make_disk_mesh(center: Point2, radius: f64, refinement: u32) -> Result<QuadMesh> {
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if refinement > 10 {
        return Err(Error::InvalidArgument(format!(
            "refinement {refinement} too large"
        )));
    }
    let n = 1usize << refinement;
    let a = DISK_CORE_FRACTION * radius;
    let rotate = |p: Point2, quarter_turns: usize| -> Point2 {
        (0..quarter_turns).fold(p, |q, _| Point2::new(-q.y, q.x))
    };
    // Right block in local (xi, eta); the other three are quarter-turn rotations.
    let outer = |xi: f64, eta: f64| -> Point2 {
        let inner = Point2::new(a, -a + 2.0 * a * eta);
        let theta = -PI / 4.0 + 0.5 * PI * eta;
        let on_circle = Point2::new(radius * theta.cos(), radius * theta.sin());
        let p = inner * (1.0 - xi) + on_circle * xi;
        if xi == 1.0 {
            on_circle
        } else {
            p
        }
    };
    let core = |xi: f64, eta: f64| Point2::new(-a + 2.0 * a * xi, -a + 2.0 * a * eta);

    let mut pool = VertexPool::new(radius);
    let mut cells = Vec::with_capacity(5 * n * n);
    let mut faces = Vec::new();
    let t = |i: usize| i as f64 / n as f64;
    for block in 0..5 {
        let mut ids = vec![0usize; (n + 1) * (n + 1)];
        for j in 0..=n {
            for i in 0..=n {
                let local = if block == 0 {
                    core(t(i), t(j))
                } else {
                    rotate(outer(t(i), t(j)), block - 1)
                };
                ids[j * (n + 1) + i] = pool.insert(local);
            }
        }
        for j in 0..n {
            for i in 0..n {
                let cell = cells.len();
                cells.push([
                    ids[j * (n + 1) + i],
                    ids[j * (n + 1) + i + 1],
                    ids[(j + 1) * (n + 1) + i + 1],
                    ids[(j + 1) * (n + 1) + i],
                ]);
                if block > 0 && i == n - 1 {
                    faces.push(BoundaryFace {
                        cell,
                        local_face: 1,
                        marker: BoundaryMarker::All,
                    });
                }
            }
        }
    }
    let vertices = pool.points.into_iter().map(|p| p + center).collect();
    QuadMesh::new(vertices, cells, faces)
}

/// Polar tensor grid of the annulus `inner_radius <= r <= inner_radius + thickness`,
/// periodic in the angle.
pub fn make_annulus_mesh(
    center: Point2,
    inner_radius: f64,
    thickness: f64,
    n_theta: usize,
    n_r: usize,
) -> Result<QuadMesh> {
    if !(inner_radius > 0.0 && thickness > 0.0) {
        return Err(Error::InvalidArgument(
            "annulus radii must be positive".into(),
        ));
    }
    if n_theta < 8 || n_r < 1 {
        return Err(Error::InvalidArgument(format!(
            "annulus needs n_theta >= 8 and n_r >= 1, got {n_theta}, {n_r}"
        )));
    }
    let mut vertices = Vec::with_capacity(n_theta * (n_r + 1));
    for ir in 0..=n_r {
        let r = inner_radius + thickness * ir as f64 / n_r as f64;
        for it in 0..n_theta {
            let theta = 2.0 * PI * it as f64 / n_theta as f64;
            vertices.push(center + Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }
    let vid = |ir: usize, it: usize| ir * n_theta + it % n_theta;
    let mut cells = Vec::with_capacity(n_theta * n_r);
    let mut faces = Vec::new();
    for it in 0..n_theta {
        for ir in 0..n_r {
            let cell = cells.len();
            cells.push([
                vid(ir, it),
                vid(ir + 1, it),
                vid(ir + 1, it + 1),
                vid(ir, it + 1),
            ]);
            if ir == 0 {
                faces.push(BoundaryFace {
                    cell,
                    local_face: 3,
                    marker: BoundaryMarker::All,
                });
            }
            if ir == n_r - 1 {
                faces.push(BoundaryFace {
                    cell,
                    local_face: 1,
                    marker: BoundaryMarker::All,
                });
            }
        }
    }
    QuadMesh::new(vertices, cells, faces)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(n: usize) -> QuadMesh {
        make_rect_grid(n, n, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).unwrap()
    }

    #[test]
    fn rect_grid_counts() {
        let m = unit_grid(4);
        assert_eq!(m.n_cells(), 16);
        assert_eq!(m.n_vertices(), 25);
        assert_eq!(m.boundary_faces().len(), 16);
        assert_eq!(m.n_edges(), 40);
    }

    #[test]
    fn single_cell_corners() {
        let m = unit_grid(1);
        let c = m.corners(0);
        assert_eq!(c[0], Point2::new(0.0, 0.0));
        assert_eq!(c[1], Point2::new(1.0, 0.0));
        assert_eq!(c[2], Point2::new(1.0, 1.0));
        assert_eq!(c[3], Point2::new(0.0, 1.0));
    }

    #[test]
    fn two_cells_share_a_face() {
        let m = make_rect_grid(2, 1, Point2::new(0.0, 0.0), Point2::new(2.0, 1.0)).unwrap();
        assert_eq!(m.n_cells(), 2);
        assert_eq!(m.cell_edges(0)[1], m.cell_edges(1)[3]);
        assert_eq!(m.cell_area(0), 1.0);
        assert_eq!(m.cell_area(1), 1.0);
    }

    #[test]
    fn degenerate_box_rejected() {
        assert!(make_rect_grid(2, 2, Point2::new(0.0, 0.0), Point2::new(0.0, 1.0)).is_err());
        assert!(make_rect_grid(0, 2, Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn markers_by_side() {
        let m = unit_grid(3);
        for marker in [
            BoundaryMarker::Bottom,
            BoundaryMarker::Top,
            BoundaryMarker::Left,
            BoundaryMarker::Right,
        ] {
            assert_eq!(m.faces_with(marker).unwrap().len(), 3);
        }
        assert_eq!(m.faces_with(BoundaryMarker::All).unwrap().len(), 12);
        let disk = make_disk_mesh(Point2::zeros(), 1.0, 0).unwrap();
        assert!(matches!(
            disk.faces_with(BoundaryMarker::Top),
            Err(Error::UnknownMarker(_))
        ));
    }

    #[test]
    fn locate_interior_point() {
        let m = unit_grid(4);
        let loc = m.locate_point(&Point2::new(0.3, 0.7), None).unwrap();
        // row 2, column 1
        assert_eq!(loc.cell_index, 2 * 4 + 1);
        assert!((loc.ref_coords - Point2::new(0.2, 0.8)).amax() < 1e-12);
    }

    #[test]
    fn locate_shared_vertex_picks_smallest_index() {
        let m = unit_grid(4);
        let loc = m.locate_point(&Point2::new(0.25, 0.25), None).unwrap();
        assert_eq!(loc.cell_index, 0);
        assert!((loc.ref_coords - Point2::new(1.0, 1.0)).amax() < 1e-12);
        // a hint on one of the other three cells must not change the answer
        let hinted = m.locate_point(&Point2::new(0.25, 0.25), Some(5)).unwrap();
        assert_eq!(hinted.cell_index, 0);
    }

    #[test]
    fn locate_outside() {
        let m = unit_grid(1);
        assert!(matches!(
            m.locate_point(&Point2::new(1.5, 0.5), None),
            Err(Error::PointOutsideMesh { .. })
        ));
    }

    #[test]
    fn disk_cell_count_and_boundary() {
        for k in 0..4 {
            let m = make_disk_mesh(Point2::new(0.6, 0.4), 0.125, k).unwrap();
            assert_eq!(m.n_cells(), 5 * 4usize.pow(k));
            for f in m.boundary_faces() {
                let c = m.cells()[f.cell];
                for v in [c[f.local_face], c[(f.local_face + 1) % 4]] {
                    let r = (m.vertices()[v] - Point2::new(0.6, 0.4)).norm();
                    assert!((r - 0.125).abs() < 1e-12);
                }
            }
            assert!((m.centroid() - Point2::new(0.6, 0.4)).amax() < 1e-12);
        }
    }

    #[test]
    fn annulus_counts_and_inner_ring() {
        let c = Point2::new(0.5, 0.5);
        let m = make_annulus_mesh(c, 0.25, 0.05, 64, 4).unwrap();
        assert_eq!(m.n_vertices(), 64 * 5);
        assert_eq!(m.n_cells(), 256);
        for v in &m.vertices()[..64] {
            assert!(((v - c).norm() - 0.25).abs() < 1e-12);
        }
        assert!(make_annulus_mesh(c, 0.25, 0.05, 4, 1).is_err());
    }

    #[test]
    fn non_conforming_mesh_rejected() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        // clockwise cell
        assert!(QuadMesh::new(v.clone(), vec![[0, 3, 2, 1]], vec![]).is_err());
        // missing boundary faces
        assert!(QuadMesh::new(v, vec![[0, 1, 2, 3]], vec![]).is_err());
    }
}
