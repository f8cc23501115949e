//! Block saddle-point systems and their sparse direct solution.
//!
//! The factorization itself is delegated to faer's sparse LU (partial
//! pivoting with a fill-reducing column ordering). The symbolic analysis is
//! cached and reused while the sparsity pattern is unchanged.

use std::hash::{DefaultHasher, Hash, Hasher};

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMat, SymbolicSparseColMat};

use crate::error::{Error, Result};
use crate::fem::{CsrMatrix, TripletBuilder};

/// Required relative residual of every accepted solve.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Field order of the monolithic system.
pub const FIELD_NAMES: [&str; 4] = ["u", "p", "w", "lambda"];

/// The 4x4 block system in field order (u, p, w, lambda). `None` blocks are zero.
#[derive(Debug, Clone)]
pub struct BlockSystem {
    sizes: [usize; 4],
    blocks: [[Option<CsrMatrix>; 4]; 4],
    pub rhs: [Vec<f64>; 4],
}

impl BlockSystem {
    pub fn new(sizes: [usize; 4]) -> Self {
        Self {
            sizes,
            blocks: Default::default(),
            rhs: sizes.map(|n| vec![0.0; n]),
        }
    }

    pub fn sizes(&self) -> [usize; 4] {
        self.sizes
    }

    /// Start of each field in the flattened numbering.
    pub fn offsets(&self) -> [usize; 5] {
        let mut o = [0; 5];
        for i in 0..4 {
            o[i + 1] = o[i] + self.sizes[i];
        }
        o
    }

    pub fn dimension(&self) -> usize {
        self.sizes.iter().sum()
    }

    pub fn set_block(&mut self, row: usize, col: usize, block: CsrMatrix) -> Result<()> {
        if block.shape() != (self.sizes[row], self.sizes[col]) {
            return Err(Error::ShapeMismatch(format!(
                "block ({}, {}) must be {}x{}, got {:?}",
                FIELD_NAMES[row],
                FIELD_NAMES[col],
                self.sizes[row],
                self.sizes[col],
                block.shape()
            )));
        }
        self.blocks[row][col] = Some(block);
        Ok(())
    }

    pub fn block(&self, row: usize, col: usize) -> Option<&CsrMatrix> {
        self.blocks[row][col].as_ref()
    }

    pub fn block_mut(&mut self, row: usize, col: usize) -> Option<&mut CsrMatrix> {
        self.blocks[row][col].as_mut()
    }

    pub fn set_rhs(&mut self, field: usize, values: Vec<f64>) -> Result<()> {
        if values.len() != self.sizes[field] {
            return Err(Error::ShapeMismatch(format!(
                "rhs of {} must have {} entries, got {}",
                FIELD_NAMES[field],
                self.sizes[field],
                values.len()
            )));
        }
        self.rhs[field] = values;
        Ok(())
    }

    /// Checks block shapes, rhs lengths and that the (lambda, lambda) block is empty.
    pub fn validate(&self) -> Result<()> {
        for i in 0..4 {
            if self.rhs[i].len() != self.sizes[i] {
                return Err(Error::ShapeMismatch(format!(
                    "rhs of {} has wrong length",
                    FIELD_NAMES[i]
                )));
            }
            for j in 0..4 {
                if let Some(b) = &self.blocks[i][j] {
                    if b.shape() != (self.sizes[i], self.sizes[j]) {
                        return Err(Error::ShapeMismatch(format!(
                            "block ({}, {}) has shape {:?}",
                            FIELD_NAMES[i],
                            FIELD_NAMES[j],
                            b.shape()
                        )));
                    }
                }
            }
        }
        if self.blocks[3][3]
            .as_ref()
            .is_some_and(|b| b.max_abs() != 0.0)
        {
            return Err(Error::ShapeMismatch(
                "(lambda, lambda) block must be zero".into(),
            ));
        }
        Ok(())
    }

    /// Imposes `x_field[dofs[k]] = values[k]`: constrained rows become identity
    /// rows and constrained columns are moved to the right-hand side. The
    /// sparsity pattern is kept, eliminated entries are stored as zeros.
    pub fn constrain(&mut self, field: usize, dofs: &[usize], values: &[f64]) -> Result<()> {
        if dofs.len() != values.len() {
            return Err(Error::ShapeMismatch(
                "one value per constrained DoF required".into(),
            ));
        }
        let n = self.sizes[field];
        let mut fixed: Vec<Option<f64>> = vec![None; n];
        for (&d, &v) in dofs.iter().zip(values) {
            if d >= n {
                return Err(Error::ShapeMismatch(format!(
                    "constrained DoF {d} out of range {n}"
                )));
            }
            fixed[d] = Some(v);
        }
        {
            let diag = self.blocks[field][field].get_or_insert_with(|| CsrMatrix::zeros(n, n));
            if dofs.iter().any(|&d| !diag.row(d).0.contains(&d)) {
                let mut t = TripletBuilder::new(n, n);
                for &d in dofs {
                    t.push(d, d, 0.0);
                }
                *diag = diag.add_scaled(1.0, &t.build())?;
            }
        }
        for i in 0..4 {
            let Some(block) = self.blocks[i][field].as_mut() else {
                continue;
            };
            let (offsets, cols, vals) = block.parts_mut();
            for r in 0..offsets.len() - 1 {
                if i == field && fixed[r].is_some() {
                    continue;
                }
                for k in offsets[r]..offsets[r + 1] {
                    if let Some(g) = fixed[cols[k]] {
                        self.rhs[i][r] -= vals[k] * g;
                        vals[k] = 0.0;
                    }
                }
            }
        }
        for j in 0..4 {
            let Some(block) = self.blocks[field][j].as_mut() else {
                continue;
            };
            let (offsets, cols, vals) = block.parts_mut();
            for r in 0..offsets.len() - 1 {
                if fixed[r].is_none() {
                    continue;
                }
                for k in offsets[r]..offsets[r + 1] {
                    vals[k] = if j == field && cols[k] == r { 1.0 } else { 0.0 };
                }
            }
        }
        for (d, g) in fixed.iter().enumerate() {
            if let Some(g) = g {
                self.rhs[field][d] = *g;
            }
        }
        Ok(())
    }

    /// Applies the full operator to a stacked vector.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let o = self.offsets();
        let mut y = vec![0.0; self.dimension()];
        for i in 0..4 {
            for j in 0..4 {
                if let Some(b) = &self.blocks[i][j] {
                    let part = b.mul_vec(&x[o[j]..o[j + 1]]);
                    for (k, v) in part.into_iter().enumerate() {
                        y[o[i] + k] += v;
                    }
                }
            }
        }
        y
    }
}

/// Single sparse matrix and stacked right-hand side in field order.
pub fn flatten(system: &BlockSystem) -> Result<(CsrMatrix, Vec<f64>)> {
    system.validate()?;
    let o = system.offsets();
    let n = system.dimension();
    let nnz: usize = system
        .blocks
        .iter()
        .flatten()
        .flatten()
        .map(|b| b.nnz())
        .sum();
    let mut builder = TripletBuilder::with_capacity(n, n, nnz);
    for i in 0..4 {
        for j in 0..4 {
            if let Some(b) = &system.blocks[i][j] {
                for r in 0..b.nrows() {
                    let (cols, vals) = b.row(r);
                    for (&c, &v) in cols.iter().zip(vals) {
                        builder.push(o[i] + r, o[j] + c, v);
                    }
                }
            }
        }
    }
    let rhs = system.rhs.iter().flatten().copied().collect();
    Ok((builder.build(), rhs))
}

/// Extracts block `(row, col)` of a flattened matrix with the given field sizes.
pub fn extract_block(matrix: &CsrMatrix, sizes: [usize; 4], row: usize, col: usize) -> CsrMatrix {
    let mut o = [0; 5];
    for i in 0..4 {
        o[i + 1] = o[i] + sizes[i];
    }
    let mut builder = TripletBuilder::new(sizes[row], sizes[col]);
    for r in o[row]..o[row + 1] {
        let (cols, vals) = matrix.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            if (o[col]..o[col + 1]).contains(&c) {
                builder.push(r - o[row], c - o[col], v);
            }
        }
    }
    builder.build()
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn pattern_hash(a: &CsrMatrix) -> u64 {
    let mut h = DefaultHasher::new();
    a.shape().hash(&mut h);
    a.row_offsets().hash(&mut h);
    a.col_indices().hash(&mut h);
    h.finish()
}

fn to_faer(a: &CsrMatrix) -> SparseColMat<usize, f64> {
    // CSR of A^T is CSC of A
    let t = a.transpose();
    let symbolic = SymbolicSparseColMat::new_checked(
        a.nrows(),
        a.ncols(),
        t.row_offsets().to_vec(),
        None,
        t.col_indices().to_vec(),
    );
    SparseColMat::new(symbolic, t.values().to_vec())
}

fn map_lu_error(e: LuError) -> Error {
    match e {
        LuError::SymbolicSingular { index } => {
            Error::SingularMatrix(format!("no pivot available at elimination step {index}"))
        }
        LuError::Generic(g) => Error::SingularMatrix(format!("factorization failed: {g:?}")),
    }
}

/// Sparse LU solver that caches the symbolic factorization by pattern hash.
///
/// A solver instance is used by one time loop; separate instances may run
/// concurrently.
#[derive(Default)]
pub struct DirectSolver {
    cached: Option<(u64, faer::sparse::linalg::solvers::SymbolicLu<usize>)>,
    symbolic_reuses: usize,
    symbolic_builds: usize,
}

/// Outcome of one solve, for monitoring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub relative_residual: f64,
    pub refinement_steps: usize,
    pub reused_symbolic: bool,
}

impl DirectSolver {
    pub fn new() -> Self {
        // Sequential kernels keep results bitwise reproducible.
        faer::set_global_parallelism(faer::Par::Seq);
        Self::default()
    }

    pub fn symbolic_builds(&self) -> usize {
        self.symbolic_builds
    }

    pub fn symbolic_reuses(&self) -> usize {
        self.symbolic_reuses
    }

    pub fn solve(&mut self, a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        if a.nrows() != a.ncols() {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {:?}, must be square",
                a.shape()
            )));
        }
        if b.len() != a.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "rhs has {} entries, matrix has {} rows",
                b.len(),
                a.nrows()
            )));
        }
        let n = a.nrows();
        if n == 0 {
            return Ok((
                Vec::new(),
                SolveReport {
                    relative_residual: 0.0,
                    refinement_steps: 0,
                    reused_symbolic: false,
                },
            ));
        }
        let amax = a.max_abs();
        if amax == 0.0 || !amax.is_finite() {
            return Err(Error::SingularMatrix(format!("matrix max |a_ij| = {amax}")));
        }
        let hash = pattern_hash(a);
        let fa = to_faer(a);
        let reused = matches!(&self.cached, Some((h, _)) if *h == hash);
        if !reused {
            let symbolic = faer::sparse::linalg::solvers::SymbolicLu::try_new(fa.symbolic())
                .map_err(|e| Error::SingularMatrix(format!("symbolic analysis failed: {e:?}")))?;
            self.cached = Some((hash, symbolic));
            self.symbolic_builds += 1;
        } else {
            self.symbolic_reuses += 1;
        }
        let symbolic = self
            .cached
            .as_ref()
            .map(|(_, s)| s.clone())
            .expect("symbolic cached");
        let lu = faer::sparse::linalg::solvers::Lu::try_new_with_symbolic(symbolic, fa.as_ref())
            .map_err(map_lu_error)?;

        let solve = |rhs: &[f64]| -> Vec<f64> {
            let mut m = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
            lu.solve_in_place(m.as_mut());
            (0..n).map(|i| m[(i, 0)]).collect()
        };
        let bnorm = norm2(b);
        if bnorm == 0.0 {
            return Ok((
                vec![0.0; n],
                SolveReport {
                    relative_residual: 0.0,
                    refinement_steps: 0,
                    reused_symbolic: reused,
                },
            ));
        }
        let mut x = solve(b);
        let mut steps = 0;
        let residual = |x: &[f64]| -> Vec<f64> {
            a.mul_vec(x).iter().zip(b).map(|(ax, bi)| bi - ax).collect()
        };
        let mut r = residual(&x);
        let mut rel = norm2(&r) / bnorm;
        while rel > 1e-3 * RESIDUAL_TOL && steps < 3 && rel.is_finite() {
            let dx = solve(&r);
            x.iter_mut().zip(&dx).for_each(|(xi, d)| *xi += d);
            steps += 1;
            r = residual(&x);
            let next = norm2(&r) / bnorm;
            if !(next < rel) {
                rel = next;
                break;
            }
            rel = next;
        }
        if !rel.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularMatrix(format!(
                "non-finite solution (pivot below {:e})",
                1e-14 * amax
            )));
        }
        if rel > RESIDUAL_TOL {
            return Err(Error::ResidualTooLarge {
                residual: rel,
                tolerance: RESIDUAL_TOL,
            });
        }
        Ok((
            x,
            SolveReport {
                relative_residual: rel,
                refinement_steps: steps,
                reused_symbolic: reused,
            },
        ))
    }
}

/// One-shot sparse direct solve with the residual contract enforced.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    DirectSolver::new().solve(a, b).map(|(x, _)| x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_solve() {
        let b = vec![1.0, -2.0, 3.5];
        assert_eq!(solve_direct(&CsrMatrix::identity(3), &b).unwrap(), b);
    }

    #[test]
    fn two_by_two() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 2.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 2.0);
        let x = solve_direct(&t.build(), &[3.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_rejected() {
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(1, 0, 1.0);
        let err = solve_direct(&t.build(), &[1.0, 2.0]).unwrap_err();
        assert!(
            matches!(
                err,
                Error::SingularMatrix(_) | Error::ResidualTooLarge { .. }
            ),
            "{err}"
        );
    }

    #[test]
    fn identity_block_flattens_with_padding() {
        let mut s = BlockSystem::new([3, 2, 1, 1]);
        s.set_block(0, 0, CsrMatrix::identity(3)).unwrap();
        let (a, rhs) = flatten(&s).unwrap();
        assert_eq!(a.shape(), (7, 7));
        assert_eq!(rhs.len(), 7);
        assert_eq!(a.nnz(), 3);
        for i in 0..3 {
            assert_eq!(a.get(i, i), 1.0);
        }
        assert_eq!(extract_block(&a, s.sizes(), 0, 0), CsrMatrix::identity(3));
        assert_eq!(extract_block(&a, s.sizes(), 1, 1).nnz(), 0);
    }

    #[test]
    fn constrain_keeps_solution_of_free_dofs() {
        // [[4,1],[1,3]] x = b with x1 = 2 fixed
        let mut t = TripletBuilder::new(2, 2);
        t.push(0, 0, 4.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 3.0);
        let mut s = BlockSystem::new([2, 0, 0, 0]);
        s.set_block(0, 0, t.build()).unwrap();
        s.set_rhs(0, vec![6.0, 7.0]).unwrap();
        s.constrain(0, &[1], &[2.0]).unwrap();
        let (a, b) = flatten(&s).unwrap();
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(0, 1), 0.0);
        let x = solve_direct(&a, &b).unwrap();
        assert_eq!(x[1], 2.0);
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_block_shape() {
        let mut s = BlockSystem::new([3, 2, 1, 1]);
        assert!(s.set_block(0, 1, CsrMatrix::identity(3)).is_err());
    }

    #[test]
    fn symbolic_is_reused_for_same_pattern() {
        let mut solver = DirectSolver::new();
        let a = CsrMatrix::identity(4);
        solver.solve(&a, &[1.0; 4]).unwrap();
        solver.solve(&a.scaled(2.0), &[1.0; 4]).unwrap();
        assert_eq!(solver.symbolic_builds(), 1);
        assert_eq!(solver.symbolic_reuses(), 1);
    }
}
