//! One linearized time step of the coupled fluid-solid problem.

use std::sync::Arc;

use nalgebra::Vector2;

use crate::constitutive::Material;
use crate::coupling::{
    assemble_bs, assemble_cf, assemble_cs, assemble_solid_body_force, assemble_solid_pressure_mass,
    coupling_quadrature, CouplingQuadrature, COUPLING_ORDER,
};
use crate::error::{Error, Result};
use crate::fem::{
    assemble_convection, assemble_divergence, assemble_load, assemble_mass, assemble_traction,
    assemble_viscous, gauss_rule, CsrMatrix, ElementFamily, FeSpace,
};
use crate::linalg::{flatten, norm2, BlockSystem, DirectSolver, SolveReport};
use crate::mesh::{BoundaryMarker, Point2, QuadMesh};
use crate::solid::{
    assemble_elastic, assemble_solid_mass, assemble_solid_viscous, eval_deformation,
};

pub const U: usize = 0;
pub const P: usize = 1;
pub const W: usize = 2;
pub const LAMBDA: usize = 3;

/// Constraint residual must stay below `CONSTRAINT_TOL * (1 + ‖C_f u‖)`.
pub const CONSTRAINT_TOL: f64 = 1e-8;

/// Elastic sub-iterations stop once the update is below this fraction of
/// the step increment.
pub const ELASTIC_TOL: f64 = 1e-9;

/// Fluid velocity and pressure on the background mesh, displacement (and
/// multiplier) on the solid reference mesh.
#[derive(Debug, Clone)]
pub struct Spaces {
    pub velocity: FeSpace,
    pub pressure: FeSpace,
    pub solid: FeSpace,
}

impl Spaces {
    pub fn new(fluid_mesh: Arc<QuadMesh>, solid_mesh: Arc<QuadMesh>) -> Self {
        Self {
            velocity: FeSpace::new(fluid_mesh.clone(), ElementFamily::Q2Vector),
            pressure: FeSpace::new(fluid_mesh, ElementFamily::P1Disc),
            solid: FeSpace::new(solid_mesh, ElementFamily::Q2Vector),
        }
    }

    /// The multiplier lives in the displacement space.
    pub fn multiplier(&self) -> &FeSpace {
        &self.solid
    }

    pub fn sizes(&self) -> [usize; 4] {
        [
            self.velocity.n_dofs(),
            self.pressure.n_dofs(),
            self.solid.n_dofs(),
            self.solid.n_dofs(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointSource {
    pub x: Point2,
    /// Mass rate Q.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepConfig {
    pub dt: f64,
    pub rho_f: f64,
    pub nu_f: f64,
    pub kappa: f64,
    pub body_force: Vector2<f64>,
    pub dirichlet: Vec<(BoundaryMarker, Vector2<f64>)>,
    pub neumann: Vec<(BoundaryMarker, Vector2<f64>)>,
    pub point_source: Option<PointSource>,
    /// Linearized solves per step with the elastic stress re-linearized
    /// about the latest iterate. 1 is the plain semi-implicit scheme.
    pub elastic_iterations: usize,
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        positive("dt", self.dt)?;
        positive("rho_f", self.rho_f)?;
        positive("nu_f", self.nu_f)?;
        positive("kappa", self.kappa)?;
        if self.elastic_iterations == 0 {
            return Err(Error::InvalidArgument(
                "elastic_iterations must be at least 1".into(),
            ));
        }
        for (d, _) in &self.dirichlet {
            for (n, _) in &self.neumann {
                if d == n || *d == BoundaryMarker::All || *n == BoundaryMarker::All {
                    return Err(Error::InvalidArgument(format!(
                        "boundary `{}` is both Dirichlet and Neumann (`{}`)",
                        d.name(),
                        n.name()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Coupled unknowns at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub t: f64,
    pub u: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<f64>,
    pub w_prev: Vec<f64>,
    pub lambda: Vec<f64>,
}

impl SystemState {
    /// Fluid at rest, solid at rest in configuration `w0`.
    pub fn at_rest(spaces: &Spaces, w0: Vec<f64>) -> Result<Self> {
        let s = Self {
            t: 0.0,
            u: vec![0.0; spaces.velocity.n_dofs()],
            p: vec![0.0; spaces.pressure.n_dofs()],
            w_prev: w0.clone(),
            w: w0,
            lambda: vec![0.0; spaces.solid.n_dofs()],
        };
        s.validate(spaces)?;
        Ok(s)
    }

    pub fn validate(&self, spaces: &Spaces) -> Result<()> {
        let sizes = spaces.sizes();
        let checks = [
            ("u", self.u.len(), sizes[U]),
            ("p", self.p.len(), sizes[P]),
            ("w", self.w.len(), sizes[W]),
            ("w_prev", self.w_prev.len(), sizes[W]),
            ("lambda", self.lambda.len(), sizes[LAMBDA]),
        ];
        for (name, got, want) in checks {
            if got != want {
                return Err(Error::ShapeMismatch(format!(
                    "{name} has {got} entries, expected {want}"
                )));
            }
        }
        if !(self.t >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "time must be non-negative, got {}",
                self.t
            )));
        }
        Ok(())
    }

    /// (u, p, w, λ) stacked in field order.
    pub fn stacked(&self) -> Vec<f64> {
        [&self.u, &self.p, &self.w, &self.lambda]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

/// Adds the pressure-row contribution of a point mass source at `x_c`.
/// The sign makes the discrete divergence integrate to `+rate/rho_f`.
pub fn apply_point_source(
    system: &mut BlockSystem,
    pressure: &FeSpace,
    x_c: &Point2,
    rate: f64,
    rho_f: f64,
) -> Result<()> {
    if rate == 0.0 {
        return Ok(());
    }
    let host = pressure.mesh().locate_point(x_c, None)?;
    let (q, _, _) = pressure.basis_at(host.cell_index, &host.ref_coords);
    for k in 0..pressure.family().scalar_basis_len() {
        system.rhs[P][pressure.dof(host.cell_index, k, 0)] -= rate / rho_f * q[k];
    }
    Ok(())
}

/// Velocity DoFs and values fixed by the given conditions; later entries win
/// on shared nodes.
pub fn dirichlet_dofs(
    velocity: &FeSpace,
    conditions: &[(BoundaryMarker, Vector2<f64>)],
) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut value: Vec<Option<[f64; 2]>> = vec![None; velocity.n_nodes()];
    for (marker, g) in conditions {
        let faces = velocity.mesh().faces_with(*marker)?;
        for n in velocity.boundary_nodes(&faces) {
            value[n] = Some([g.x, g.y]);
        }
    }
    let mut dofs = Vec::new();
    let mut vals = Vec::new();
    for (n, v) in value.iter().enumerate() {
        if let Some(v) = v {
            dofs.extend([2 * n, 2 * n + 1]);
            vals.extend(v);
        }
    }
    Ok((dofs, vals))
}

/// Imposes the velocity Dirichlet conditions on the u field.
pub fn apply_dirichlet(
    system: &mut BlockSystem,
    velocity: &FeSpace,
    conditions: &[(BoundaryMarker, Vector2<f64>)],
) -> Result<()> {
    let (dofs, vals) = dirichlet_dofs(velocity, conditions)?;
    system.constrain(U, &dofs, &vals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub step: usize,
    pub constraint_residual: f64,
    pub constraint_bound: f64,
    pub solve: SolveReport,
    pub n_dofs: usize,
    /// Linearized solves performed for this step.
    pub elastic_iterations: usize,
}

/// Time integrator holding the step-independent operators and the
/// factorization cache.
pub struct Stepper {
    spaces: Arc<Spaces>,
    cfg: StepConfig,
    material: Material,
    /// ρ_f M/δt + A_f
    fluid_base: CsrMatrix,
    /// ρ_f M/δt, for the right-hand side
    fluid_inertia: CsrMatrix,
    b_f: CsrMatrix,
    b_f_t: CsrMatrix,
    c_s: CsrMatrix,
    fluid_load: Vec<f64>,
    dirichlet: (Vec<usize>, Vec<f64>),
    solver: DirectSolver,
    previous: Option<CouplingQuadrature>,
    steps_taken: usize,
}

impl Stepper {
    pub fn new(spaces: Arc<Spaces>, cfg: StepConfig, material: Material) -> Result<Self> {
        cfg.validate()?;
        material.validate()?;
        let v = &spaces.velocity;
        let rho_dt = cfg.rho_f / cfg.dt;
        let fluid_inertia = assemble_mass(v, |_| rho_dt);
        let fluid_base = fluid_inertia.add_scaled(1.0, &assemble_viscous(v, cfg.nu_f)?)?;
        let b_f = assemble_divergence(v, &spaces.pressure)?;
        let b_f_t = b_f.transpose();
        let c_s = assemble_cs(spaces.multiplier(), &spaces.solid)?;
        let body = cfg.body_force * cfg.rho_f;
        let mut fluid_load = assemble_load(v, |_| body)?;
        for (marker, tau) in &cfg.neumann {
            let t = assemble_traction(v, *marker, |_| *tau)?;
            fluid_load.iter_mut().zip(t).for_each(|(a, b)| *a += b);
        }
        let dirichlet = dirichlet_dofs(v, &cfg.dirichlet)?;
        if let Some(src) = &cfg.point_source {
            spaces.pressure.mesh().locate_point(&src.x, None)?;
        }
        Ok(Self {
            spaces,
            cfg,
            material,
            fluid_base,
            fluid_inertia,
            b_f,
            b_f_t,
            c_s,
            fluid_load,
            dirichlet,
            solver: DirectSolver::new(),
            previous: None,
            steps_taken: 0,
        })
    }

    pub fn spaces(&self) -> &Arc<Spaces> {
        &self.spaces
    }

    pub fn config(&self) -> &StepConfig {
        &self.cfg
    }

    pub fn material(&self) -> &Material {
        &self.material
    }

    pub fn steps_taken(&self) -> usize {
        self.steps_taken
    }

    pub fn coupling_matrix_solid(&self) -> &CsrMatrix {
        &self.c_s
    }

    /// Number of symbolic factorizations computed so far.
    pub fn symbolic_builds(&self) -> usize {
        self.solver.symbolic_builds()
    }

    /// Assembles the unconstrained block system for the step from `state`
    /// (no point source, no Dirichlet conditions).
    pub fn assemble_step(&self, state: &SystemState) -> Result<(BlockSystem, CouplingQuadrature)> {
        self.assemble_at(state, &state.w)
            .map(|(sys, coupq, _)| (sys, coupq))
    }

    /// Also returns the solid-row residual at `state`, formed without the
    /// large cancelling terms of `rhs - A x`.
    fn assemble_at(
        &self,
        state: &SystemState,
        w_lin: &[f64],
    ) -> Result<(BlockSystem, CouplingQuadrature, Vec<f64>)> {
        state.validate(&self.spaces)?;
        let sp = &*self.spaces;
        let cfg = &self.cfg;
        let dt = cfg.dt;
        let coupq = coupling_quadrature(
            &sp.solid,
            &state.w,
            sp.velocity.mesh(),
            self.previous.as_ref(),
        )?;

        let conv = assemble_convection(&sp.velocity, &state.u, cfg.rho_f)?;
        let a_uu = self.fluid_base.add_scaled(1.0, &conv)?;
        let c_f = assemble_cf(&coupq, sp.multiplier(), &sp.velocity)?;
        let b_s = assemble_bs(&coupq, &sp.pressure, &sp.solid)?;
        let m_p = assemble_solid_pressure_mass(&coupq, &sp.pressure, cfg.kappa)?;
        let m_s = assemble_solid_mass(&sp.solid, &coupq.defo, self.material.rho_s0, cfg.rho_f)?;
        let a_v = assemble_solid_viscous(&sp.solid, &coupq.defo, self.material.nu_s, cfg.nu_f)?;
        let (k_e, r_e) = if w_lin == state.w.as_slice() {
            assemble_elastic(&sp.solid, &coupq.defo, &self.material)?
        } else {
            let defo = eval_deformation(&sp.solid, w_lin, &gauss_rule(COUPLING_ORDER)?)?;
            assemble_elastic(&sp.solid, &defo, &self.material)?
        };

        let mut sys = BlockSystem::new(sp.sizes());
        // momentum
        let mut rhs_u = self.fluid_inertia.mul_vec(&state.u);
        let solid_body = assemble_solid_body_force(
            &coupq,
            &sp.velocity,
            self.material.rho_s0,
            cfg.rho_f,
            cfg.body_force,
        );
        for ((r, a), b) in rhs_u.iter_mut().zip(&self.fluid_load).zip(&solid_body) {
            *r += a + b;
        }
        sys.set_block(U, U, a_uu)?;
        sys.set_block(U, P, self.b_f_t.clone())?;
        sys.set_block(U, LAMBDA, c_f.transpose())?;
        sys.set_rhs(U, rhs_u)?;

        // continuity with the solid compressibility term
        let rhs_p: Vec<f64> = b_s.mul_vec(&state.w).into_iter().map(|v| v / dt).collect();
        sys.set_block(P, U, self.b_f.clone())?;
        sys.set_block(P, P, m_p.scaled(-1.0))?;
        sys.set_block(P, W, b_s.scaled(1.0 / dt))?;
        sys.set_rhs(P, rhs_p)?;

        // solid
        let mut history = vec![0.0; state.w.len()];
        for (h, (wn, wp)) in history.iter_mut().zip(state.w.iter().zip(&state.w_prev)) {
            *h = (2.0 * wn - wp) / (dt * dt);
        }
        let mut rhs_w = m_s.mul_vec(&history);
        let visc = a_v.mul_vec(&state.w);
        for ((r, v), e) in rhs_w.iter_mut().zip(&visc).zip(&r_e) {
            *r += v / dt - e;
        }
        let b_s_t = b_s.transpose();
        let velocity: Vec<f64> = state
            .w
            .iter()
            .zip(&state.w_prev)
            .map(|(a, b)| (a - b) / (dt * dt))
            .collect();
        let mut res_w = m_s.mul_vec(&velocity);
        let parts = [
            k_e.mul_vec(&state.w),
            b_s_t.mul_vec(&state.p),
            self.c_s.mul_vec(&state.lambda),
        ];
        for (k, r) in res_w.iter_mut().enumerate() {
            *r += -parts[0][k] - r_e[k] - parts[1][k] + parts[2][k];
        }
        let a_ww = m_s
            .scaled(1.0 / (dt * dt))
            .add_scaled(1.0 / dt, &a_v)?
            .add_scaled(1.0, &k_e)?;
        sys.set_block(W, P, b_s_t)?;
        sys.set_block(W, W, a_ww)?;
        sys.set_block(W, LAMBDA, self.c_s.scaled(-1.0))?;
        sys.set_rhs(W, rhs_w)?;

        // constraint
        let rhs_l: Vec<f64> = self
            .c_s
            .mul_vec(&state.w)
            .into_iter()
            .map(|v| -v / dt)
            .collect();
        sys.set_block(LAMBDA, U, c_f)?;
        sys.set_block(LAMBDA, W, self.c_s.scaled(-1.0 / dt))?;
        sys.set_rhs(LAMBDA, rhs_l)?;
        Ok((sys, coupq, res_w))
    }

    /// Advances `state` by one step.
    pub fn step(&mut self, state: &SystemState) -> Result<(SystemState, StepReport)> {
        let index = self.steps_taken + 1;
        let out = self
            .step_inner(state, index)
            .map_err(|e| e.at_step(index))?;
        self.steps_taken = index;
        Ok(out)
    }

    fn step_inner(
        &mut self,
        state: &SystemState,
        index: usize,
    ) -> Result<(SystemState, StepReport)> {
        let (mut next, mut report, mut coupq) = self.solve_once(state, &state.w, index)?;
        for it in 2..=self.cfg.elastic_iterations {
            let w_lin = next.w.clone();
            let (n, r, q) = self.solve_once(state, &w_lin, index)?;
            let change = norm2(
                &n.w.iter()
                    .zip(&w_lin)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            let incr = norm2(
                &n.w.iter()
                    .zip(&state.w)
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            (next, report, coupq) = (n, r, q);
            report.elastic_iterations = it;
            if change <= ELASTIC_TOL * incr.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        self.previous = Some(coupq);
        Ok((next, report))
    }

    fn solve_once(
        &mut self,
        state: &SystemState,
        w_lin: &[f64],
        index: usize,
    ) -> Result<(SystemState, StepReport, CouplingQuadrature)> {
        let (mut sys, coupq, res_w) = self.assemble_at(state, w_lin)?;
        let c_f = sys
            .block(LAMBDA, U)
            .cloned()
            .expect("constraint block assembled");
        // the assembled P and LAMBDA right-hand sides equal their W columns applied to w^n
        let base = [sys.rhs[P].clone(), sys.rhs[LAMBDA].clone()];
        if let Some(src) = self.cfg.point_source {
            apply_point_source(
                &mut sys,
                &self.spaces.pressure,
                &src.x,
                src.rate,
                self.cfg.rho_f,
            )?;
        }
        sys.constrain(U, &self.dirichlet.0, &self.dirichlet.1)?;

        // solve for the increment from the previous level
        let x0 = state.stacked();
        let offsets = sys.offsets();
        let mut x0_fluid = x0.clone();
        x0_fluid[offsets[W]..offsets[W + 1]]
            .iter_mut()
            .for_each(|v| *v = 0.0);
        let ax0 = sys.apply(&x0_fluid);
        for (f, base) in [(P, &base[0]), (LAMBDA, &base[1])] {
            for (r, b) in sys.rhs[f].iter_mut().zip(base) {
                *r -= b;
            }
        }
        for f in [U, P, LAMBDA] {
            for (k, r) in sys.rhs[f].iter_mut().enumerate() {
                *r -= ax0[offsets[f] + k];
            }
        }
        sys.rhs[W] = res_w;
        let (a, b) = flatten(&sys)?;
        let (dx, report) = self.solver.solve(&a, &b)?;
        let x: Vec<f64> = x0.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let field = |f: usize| x[offsets[f]..offsets[f + 1]].to_vec();
        let next = SystemState {
            t: state.t + self.cfg.dt,
            u: field(U),
            p: field(P),
            w: field(W),
            w_prev: state.w.clone(),
            lambda: field(LAMBDA),
        };

        let cfu = c_f.mul_vec(&next.u);
        let dw: Vec<f64> = next.w.iter().zip(&state.w).map(|(a, b)| a - b).collect();
        let csw = self.c_s.mul_vec(&dw);
        let res: Vec<f64> = cfu
            .iter()
            .zip(&csw)
            .map(|(a, b)| a - b / self.cfg.dt)
            .collect();
        let residual = norm2(&res);
        let bound = CONSTRAINT_TOL * (1.0 + norm2(&cfu));
        if !(residual <= bound) {
            return Err(Error::ConstraintViolated { residual, bound });
        }
        Ok((
            next,
            StepReport {
                step: index,
                constraint_residual: residual,
                constraint_bound: bound,
                solve: report,
                n_dofs: x.len(),
                elastic_iterations: 1,
            },
            coupq,
        ))
    }
}

/// Single step without a persistent factorization cache.
pub fn step(
    state: &SystemState,
    cfg: &StepConfig,
    spaces: Arc<Spaces>,
    material: &Material,
) -> Result<SystemState> {
    Stepper::new(spaces, cfg.clone(), *material)?
        .step(state)
        .map(|(s, _)| s)
}
