//! Built-in scenarios, the time loop and its file outputs.

pub mod config;
pub mod vtk;

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::Vector2;

pub use config::{ScenarioConfig, ScenarioKind, SolidShape};

use crate::constitutive::Material;
use crate::diagnostics::{write_csv, BalanceKind, DiagnosticRecord, Monitor, PressureSplit};
use crate::error::{Error, Result};
use crate::mesh::{make_annulus_mesh, make_disk_mesh, make_rect_grid, Point2};
use crate::stepper::{PointSource, Spaces, StepConfig, StepReport, Stepper, SystemState};

pub const CSV_NAME: &str = "diagnostics.csv";

/// Everything needed to start the time loop.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub spaces: Arc<Spaces>,
    pub step_config: StepConfig,
    pub material: Material,
    pub initial: SystemState,
    pub balance: BalanceKind,
}

impl Scenario {
    pub fn build(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let l = config.box_size;
        let fluid = make_rect_grid(
            config.fluid_nx,
            config.fluid_ny,
            Point2::zeros(),
            Point2::new(l, l),
        )?;
        // the reference solid is centred at the origin; w^0 places it in the box
        let solid = match config.solid_shape {
            SolidShape::Disk => {
                make_disk_mesh(Point2::zeros(), config.radius, config.solid_refinement)?
            }
            SolidShape::Annulus => make_annulus_mesh(
                Point2::zeros(),
                config.radius,
                config.thickness,
                config.solid_n_theta,
                config.solid_n_r,
            )?,
        };
        let spaces = Arc::new(Spaces::new(Arc::new(fluid), Arc::new(solid)));
        let [cx, cy] = config.solid_center;
        let k = config.lambda0 - 1.0;
        let w0 = spaces.solid.interpolate(|s| [cx + k * s.x, cy + k * s.y])?;
        let initial = SystemState::at_rest(&spaces, w0)?;
        let step_config = StepConfig {
            dt: config.dt,
            rho_f: config.rho_f,
            nu_f: config.mu_f,
            kappa: config.kappa,
            body_force: Vector2::new(config.body_force[0], config.body_force[1]),
            dirichlet: config
                .dirichlet
                .iter()
                .map(|&m| (m, Vector2::zeros()))
                .collect(),
            neumann: config
                .neumann
                .iter()
                .map(|&m| (m, Vector2::zeros()))
                .collect(),
            point_source: (config.source_rate != 0.0).then(|| PointSource {
                x: Point2::new(config.source_position[0], config.source_position[1]),
                rate: config.source_rate,
            }),
            elastic_iterations: config.elastic_iterations,
        };
        step_config.validate()?;
        let material = Material {
            mu_e: config.mu_e,
            nu: config.poisson,
            nu_s: config.mu_s,
            rho_s0: config.rho_s0,
        };
        material.validate()?;
        let balance = if config.source_rate != 0.0 {
            BalanceKind::Source
        } else {
            BalanceKind::Efflux
        };
        Ok(Self {
            config: config.clone(),
            spaces,
            step_config,
            material,
            initial,
            balance,
        })
    }
}

/// Result of a completed (or partially completed) run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub records: Vec<DiagnosticRecord>,
    pub pressures: Vec<PressureSplit>,
    pub external_work: Vec<f64>,
    pub reports: Vec<StepReport>,
    pub final_state: SystemState,
    pub wall_seconds: f64,
}

/// A run that stopped on a fatal error, with what was computed before it.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: RunOutput,
}

/// Runs the time loop, calling `on_state(step, state)` for the initial
/// state and after every step.
pub fn simulate(
    scenario: &Scenario,
    mut on_state: impl FnMut(usize, &SystemState) -> Result<()>,
) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let start = Instant::now();
    let mut monitor = match Monitor::new(
        scenario.spaces.clone(),
        &scenario.step_config,
        scenario.material,
        scenario.balance,
    ) {
        Ok(m) => m,
        Err(error) => {
            return Err(fail(
                error,
                None,
                Vec::new(),
                scenario.initial.clone(),
                start,
            ))
        }
    };
    let mut reports = Vec::new();
    let mut state = scenario.initial.clone();
    let result = (|| {
        monitor.observe(&state)?;
        on_state(0, &state)?;
        let mut stepper = Stepper::new(
            scenario.spaces.clone(),
            scenario.step_config.clone(),
            scenario.material,
        )?;
        for n in 1..=scenario.config.n_steps() {
            let (next, report) = stepper.step(&state)?;
            state = next;
            reports.push(report);
            monitor.observe(&state).map_err(|e| Error::Step {
                step: n,
                source: Box::new(e),
            })?;
            on_state(n, &state)?;
        }
        Ok(())
    })();
    match result {
        Ok(()) => Ok(output(&monitor, reports, state, start)),
        Err(error) => Err(fail(error, Some(&monitor), reports, state, start)),
    }
}

fn output(
    monitor: &Monitor,
    reports: Vec<StepReport>,
    state: SystemState,
    start: Instant,
) -> RunOutput {
    RunOutput {
        records: monitor.records().to_vec(),
        pressures: monitor.pressures().to_vec(),
        external_work: monitor.external_work().to_vec(),
        reports,
        final_state: state,
        wall_seconds: start.elapsed().as_secs_f64(),
    }
}

fn fail(
    error: Error,
    monitor: Option<&Monitor>,
    reports: Vec<StepReport>,
    state: SystemState,
    start: Instant,
) -> Box<RunFailure> {
    let partial = match monitor {
        Some(m) => output(m, reports, state, start),
        None => RunOutput {
            records: Vec::new(),
            pressures: Vec::new(),
            external_work: Vec::new(),
            reports,
            final_state: state,
            wall_seconds: start.elapsed().as_secs_f64(),
        },
    };
    Box::new(RunFailure { error, partial })
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes the diagnostics table to `dir/diagnostics.csv`.
pub fn write_diagnostics(dir: &Path, records: &[DiagnosticRecord]) -> Result<()> {
    let path = dir.join(CSV_NAME);
    let mut buf = Vec::new();
    write_csv(&mut buf, records).map_err(|e| io_error(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| io_error(&path, e))
}

/// Runs a configuration and writes CSV and VTK output into `out_dir`
/// (or the configured output directory). The CSV is written even when the
/// run stops early.
pub fn run(
    config: &ScenarioConfig,
    out_dir: Option<&Path>,
) -> std::result::Result<RunOutput, Box<RunFailure>> {
    let dir = out_dir.unwrap_or(&config.output_dir).to_path_buf();
    let early = |error: Error| {
        Box::new(RunFailure {
            error,
            partial: RunOutput {
                records: Vec::new(),
                pressures: Vec::new(),
                external_work: Vec::new(),
                reports: Vec::new(),
                final_state: SystemState {
                    t: 0.0,
                    u: Vec::new(),
                    p: Vec::new(),
                    w: Vec::new(),
                    w_prev: Vec::new(),
                    lambda: Vec::new(),
                },
                wall_seconds: 0.0,
            },
        })
    };
    std::fs::create_dir_all(&dir).map_err(|e| early(io_error(&dir, e)))?;
    let scenario = Scenario::build(config).map_err(early)?;
    let every = config.vtk_every;
    let n_steps = config.n_steps();
    let spaces = scenario.spaces.clone();
    let result = simulate(&scenario, |n, state| {
        if every > 0 && (n % every == 0 || n == n_steps) {
            vtk::write_vtk(&dir, n, state, &spaces)?;
        }
        Ok(())
    });
    let records = match &result {
        Ok(out) => &out.records,
        Err(f) => &f.partial.records,
    };
    if let Err(e) = write_diagnostics(&dir, records) {
        return Err(match result {
            Ok(out) => Box::new(RunFailure {
                error: e,
                partial: out,
            }),
            Err(f) => f,
        });
    }
    result
}
