//! Scalar monitors: energies, areas, boundary fluxes and volume bookkeeping.

use std::io::Write;
use std::sync::Arc;

use crate::constitutive::{strain_energy, Material, Tensor2};
use crate::coupling::coupling_quadrature;
use crate::error::{Error, Result};
use crate::fem::assembly::{face_quadrature, CONVECTION_ORDER};
use crate::fem::{assemble_load, assemble_traction, gauss_rule, FeSpace};
use crate::mesh::BoundaryMarker;
use crate::solid::{eval_deformation, field_gradient};
use crate::stepper::{Spaces, StepConfig, SystemState};

pub const CSV_HEADER: &str =
    "t,kinetic,elastic,solid_area,flux,efflux_cum,source_cum,p_solid_l2,centroid_y,vol_err";

/// One row of the diagnostics table.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiagnosticRecord {
    pub t: f64,
    pub kinetic_energy: f64,
    pub elastic_energy: f64,
    pub solid_area: f64,
    pub boundary_flux: f64,
    pub cumulative_efflux: f64,
    pub source_influx_cum: f64,
    pub solid_pressure_l2: f64,
    pub disk_centroid_y: f64,
    pub volume_balance_error: f64,
}

impl DiagnosticRecord {
    pub fn csv_row(&self) -> String {
        [
            self.t,
            self.kinetic_energy,
            self.elastic_energy,
            self.solid_area,
            self.boundary_flux,
            self.cumulative_efflux,
            self.source_influx_cum,
            self.solid_pressure_l2,
            self.disk_centroid_y,
            self.volume_balance_error,
        ]
        .iter()
        .map(|v| format!("{v:.16e}"))
        .collect::<Vec<_>>()
        .join(",")
    }
}

/// Writes the header and one line per record.
pub fn write_csv(out: &mut impl Write, records: &[DiagnosticRecord]) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(out, "{}", r.csv_row())?;
    }
    Ok(())
}

/// Which volume bookkeeping identity a scenario is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BalanceKind {
    /// Solid growth equals fluid leaving the box.
    Efflux,
    /// Solid shrinkage equals fluid injected by the source.
    Source,
}

/// ½∫_Ω ρ_f |u|² + ½∫_B (ρ_s0 − ρ_f J) |(w − w_prev)/δt|².
pub fn kinetic_energy(
    state: &SystemState,
    spaces: &Spaces,
    rho_f: f64,
    rho_s0: f64,
    dt: f64,
) -> Result<f64> {
    let v = &spaces.velocity;
    let quad = v.cell_quadrature(&gauss_rule(CONVECTION_ORDER)?);
    let mut fluid = 0.0;
    for cell in 0..v.mesh().n_cells() {
        for qp in quad.cell(cell) {
            let mut u = [0.0; 2];
            for k in 0..9 {
                for (c, uc) in u.iter_mut().enumerate() {
                    *uc += state.u[v.dof(cell, k, c)] * qp.values[k];
                }
            }
            fluid += qp.jxw * (u[0] * u[0] + u[1] * u[1]);
        }
    }
    let s = &spaces.solid;
    let defo = eval_deformation(s, &state.w, &gauss_rule(CONVECTION_ORDER)?)?;
    let mut solid = 0.0;
    for cell in 0..s.mesh().n_cells() {
        for (qp, kp) in defo.quad.cell(cell).iter().zip(defo.cell(cell)) {
            let mut vel = [0.0; 2];
            for k in 0..9 {
                for (c, vc) in vel.iter_mut().enumerate() {
                    let d = s.dof(cell, k, c);
                    *vc += (state.w[d] - state.w_prev[d]) / dt * qp.values[k];
                }
            }
            solid += qp.jxw * (rho_s0 - rho_f * kp.j) * (vel[0] * vel[0] + vel[1] * vel[1]);
        }
    }
    Ok(0.5 * (rho_f * fluid + solid))
}

/// ∫_B W(F).
pub fn elastic_energy(w: &[f64], solid_space: &FeSpace, mat: &Material) -> Result<f64> {
    let defo = eval_deformation(solid_space, w, &gauss_rule(CONVECTION_ORDER)?)?;
    let mut e = 0.0;
    for (qp, kp) in defo.quad.points.iter().zip(&defo.points) {
        e += qp.jxw * strain_energy(&kp.f, mat)?;
    }
    Ok(e)
}

fn solid_moments(w: &[f64], solid_space: &FeSpace) -> Result<(f64, f64)> {
    if w.len() != solid_space.n_dofs() {
        return Err(Error::ShapeMismatch(
            "displacement does not match the solid space".into(),
        ));
    }
    let quad = solid_space.cell_quadrature(&gauss_rule(CONVECTION_ORDER)?);
    let mut area = 0.0;
    let mut ymom = 0.0;
    for cell in 0..solid_space.mesh().n_cells() {
        for qp in quad.cell(cell) {
            let f = Tensor2::identity() + field_gradient(solid_space, w, cell, &qp.grads);
            let j = f.determinant();
            let mut wy = 0.0;
            for k in 0..9 {
                wy += w[solid_space.dof(cell, k, 1)] * qp.values[k];
            }
            area += qp.jxw * j;
            ymom += qp.jxw * j * (qp.x.y + wy);
        }
    }
    Ok((area, ymom))
}

/// ∫_B det(I + ∇w).
pub fn solid_area(w: &[f64], solid_space: &FeSpace) -> Result<f64> {
    solid_moments(w, solid_space).map(|(a, _)| a)
}

/// Vertical coordinate of the centroid of the deformed solid.
pub fn solid_centroid_y(w: &[f64], solid_space: &FeSpace) -> Result<f64> {
    solid_moments(w, solid_space).map(|(a, m)| m / a)
}

/// ∫ u·n over the faces carrying any of `markers`, outward normal.
pub fn boundary_flux(u: &[f64], fluid_space: &FeSpace, markers: &[BoundaryMarker]) -> Result<f64> {
    let mesh = fluid_space.mesh();
    let mut faces = Vec::new();
    for m in markers {
        faces.extend(mesh.faces_with(*m)?);
    }
    faces.sort_by_key(|f| (f.cell, f.local_face));
    faces.dedup_by_key(|f| (f.cell, f.local_face));
    let mut flux = 0.0;
    for face in faces {
        let c = mesh.corners(face.cell);
        let t = c[(face.local_face + 1) % 4] - c[face.local_face];
        let n = nalgebra::Vector2::new(t.y, -t.x) / t.norm();
        for (r, wq, ds) in face_quadrature(fluid_space, face.cell, face.local_face) {
            let (val, _) = fluid_space.evaluate(u, face.cell, &r);
            flux += wq * ds * (val[0] * n.x + val[1] * n.y);
        }
    }
    Ok(flux)
}

/// Bookkeeping error per record.
pub fn volume_balance(records: &[DiagnosticRecord], kind: BalanceKind) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    records
        .iter()
        .map(|r| match kind {
            BalanceKind::Efflux => (r.solid_area - first.solid_area) - r.cumulative_efflux,
            BalanceKind::Source => r.source_influx_cum - (first.solid_area - r.solid_area),
        })
        .collect()
}

/// Pressure seen by the solid and by the rest of the fluid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PressureSplit {
    /// sqrt(∫_B J p(X)²)
    pub solid_l2: f64,
    /// sqrt(∫_B J p(X)² / ∫_B J)
    pub solid_rms: f64,
    /// max |p| over corners of fluid cells hosting no solid point.
    pub fluid_max: f64,
}

pub fn pressure_split(state: &SystemState, spaces: &Spaces) -> Result<PressureSplit> {
    let coupq = coupling_quadrature(&spaces.solid, &state.w, spaces.velocity.mesh(), None)?;
    let pr = &spaces.pressure;
    let mut sq = 0.0;
    let mut area = 0.0;
    for cp in &coupq.points {
        let (val, _) = pr.evaluate(&state.p, cp.host.cell_index, &cp.host.ref_coords);
        sq += cp.weight * cp.kin.j * val[0] * val[0];
        area += cp.weight * cp.kin.j;
    }
    let hosts = coupq.host_cells();
    let mut fluid_max = 0.0f64;
    for cell in 0..pr.mesh().n_cells() {
        if hosts.binary_search(&cell).is_ok() {
            continue;
        }
        for r in [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]] {
            let (val, _) = pr.evaluate(&state.p, cell, &nalgebra::Vector2::new(r[0], r[1]));
            fluid_max = fluid_max.max(val[0].abs());
        }
    }
    Ok(PressureSplit {
        solid_l2: sq.sqrt(),
        solid_rms: (sq / area).sqrt(),
        fluid_max,
    })
}

/// Incrementally builds records along a run, integrating rates with the
/// trapezoidal rule.
pub struct Monitor {
    spaces: Arc<Spaces>,
    material: Material,
    rho_f: f64,
    dt: f64,
    balance: BalanceKind,
    source_rate: f64,
    /// Work of the fixed external loads per unit fluid velocity.
    fluid_load: Vec<f64>,
    body_force: nalgebra::Vector2<f64>,
    records: Vec<DiagnosticRecord>,
    pressures: Vec<PressureSplit>,
    work: Vec<f64>,
    last_power: f64,
}

impl Monitor {
    pub fn new(
        spaces: Arc<Spaces>,
        cfg: &StepConfig,
        material: Material,
        balance: BalanceKind,
    ) -> Result<Self> {
        let body = cfg.body_force * cfg.rho_f;
        let mut fluid_load = assemble_load(&spaces.velocity, |_| body)?;
        for (marker, tau) in &cfg.neumann {
            let t = assemble_traction(&spaces.velocity, *marker, |_| *tau)?;
            fluid_load.iter_mut().zip(t).for_each(|(a, b)| *a += b);
        }
        Ok(Self {
            spaces,
            material,
            rho_f: cfg.rho_f,
            dt: cfg.dt,
            balance,
            source_rate: cfg.point_source.map_or(0.0, |s| s.rate / cfg.rho_f),
            fluid_load,
            body_force: cfg.body_force,
            records: Vec::new(),
            pressures: Vec::new(),
            work: Vec::new(),
            last_power: 0.0,
        })
    }

    fn external_power(&self, state: &SystemState) -> Result<f64> {
        let mut p: f64 = self
            .fluid_load
            .iter()
            .zip(&state.u)
            .map(|(a, b)| a * b)
            .sum();
        // excess gravity on the solid acts on its material velocity
        let s = &self.spaces.solid;
        let defo = eval_deformation(s, &state.w, &gauss_rule(CONVECTION_ORDER)?)?;
        for cell in 0..s.mesh().n_cells() {
            for (qp, kp) in defo.quad.cell(cell).iter().zip(defo.cell(cell)) {
                let mut vel = [0.0; 2];
                for k in 0..9 {
                    for (c, vc) in vel.iter_mut().enumerate() {
                        let d = s.dof(cell, k, c);
                        *vc += (state.w[d] - state.w_prev[d]) / self.dt * qp.values[k];
                    }
                }
                let drho = self.material.rho_s0 - self.rho_f * kp.j;
                p += qp.jxw * drho * (self.body_force.x * vel[0] + self.body_force.y * vel[1]);
            }
        }
        Ok(p)
    }

    /// Appends the record for `state` and returns it.
    pub fn observe(&mut self, state: &SystemState) -> Result<DiagnosticRecord> {
        let sp = &*self.spaces;
        let flux = boundary_flux(&state.u, &sp.velocity, &[BoundaryMarker::All])?;
        let split = pressure_split(state, sp)?;
        let power = self.external_power(state)?;
        let mut rec = DiagnosticRecord {
            t: state.t,
            kinetic_energy: kinetic_energy(state, sp, self.rho_f, self.material.rho_s0, self.dt)?,
            elastic_energy: elastic_energy(&state.w, &sp.solid, &self.material)?,
            solid_area: solid_area(&state.w, &sp.solid)?,
            boundary_flux: flux,
            cumulative_efflux: 0.0,
            source_influx_cum: self.source_rate * state.t,
            solid_pressure_l2: split.solid_l2,
            disk_centroid_y: solid_centroid_y(&state.w, &sp.solid)?,
            volume_balance_error: 0.0,
        };
        let mut work = 0.0;
        if let (Some(prev), Some(w_prev)) = (self.records.last(), self.work.last()) {
            let h = rec.t - prev.t;
            rec.cumulative_efflux = prev.cumulative_efflux + 0.5 * h * (prev.boundary_flux + flux);
            rec.source_influx_cum = prev.source_influx_cum + h * self.source_rate;
            work = w_prev + 0.5 * h * (self.last_power + power);
        }
        let first_area = self
            .records
            .first()
            .map_or(rec.solid_area, |r| r.solid_area);
        rec.volume_balance_error = match self.balance {
            BalanceKind::Efflux => (rec.solid_area - first_area) - rec.cumulative_efflux,
            BalanceKind::Source => rec.source_influx_cum - (first_area - rec.solid_area),
        };
        self.last_power = power;
        self.records.push(rec);
        self.pressures.push(split);
        self.work.push(work);
        Ok(rec)
    }

    pub fn records(&self) -> &[DiagnosticRecord] {
        &self.records
    }

    pub fn pressures(&self) -> &[PressureSplit] {
        &self.pressures
    }

    /// Cumulative work of body force and tractions at each record.
    pub fn external_work(&self) -> &[f64] {
        &self.work
    }
}
