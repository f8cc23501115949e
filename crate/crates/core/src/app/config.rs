//! Flat JSON run configuration with per-scenario defaults.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::mesh::BoundaryMarker;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    DiskRecovery,
    AnnulusSource,
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolidShape {
    Disk,
    Annulus,
}

/// Keys as they appear in the file; every key except `scenario` is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<ScenarioKind>,
    solid_shape: Option<SolidShape>,
    radius: Option<f64>,
    thickness: Option<f64>,
    box_size: Option<f64>,
    lambda0: Option<f64>,
    solid_center: Option<[f64; 2]>,
    source_position: Option<[f64; 2]>,
    source_rate: Option<f64>,
    rho_f: Option<f64>,
    rho_s0: Option<f64>,
    mu_f: Option<f64>,
    mu_s: Option<f64>,
    mu_e: Option<f64>,
    poisson: Option<f64>,
    kappa: Option<f64>,
    body_force: Option<[f64; 2]>,
    dirichlet: Option<Vec<String>>,
    neumann: Option<Vec<String>>,
    fluid_nx: Option<usize>,
    fluid_ny: Option<usize>,
    solid_refinement: Option<u32>,
    solid_n_theta: Option<usize>,
    solid_n_r: Option<usize>,
    dt: Option<f64>,
    t_end: Option<f64>,
    elastic_iterations: Option<usize>,
    output_dir: Option<String>,
    vtk_every: Option<usize>,
}

/// Validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    pub solid_shape: SolidShape,
    /// Disk radius or annulus inner radius.
    pub radius: f64,
    /// Annulus wall thickness.
    pub thickness: f64,
    /// Side length of the square fluid box.
    pub box_size: f64,
    /// Initial isotropic stretch of the solid.
    pub lambda0: f64,
    pub solid_center: [f64; 2],
    pub source_position: [f64; 2],
    /// Q, mass injected per unit time.
    pub source_rate: f64,
    pub rho_f: f64,
    pub rho_s0: f64,
    pub mu_f: f64,
    pub mu_s: f64,
    pub mu_e: f64,
    pub poisson: f64,
    pub kappa: f64,
    pub body_force: [f64; 2],
    pub dirichlet: Vec<BoundaryMarker>,
    pub neumann: Vec<BoundaryMarker>,
    pub fluid_nx: usize,
    pub fluid_ny: usize,
    pub solid_refinement: u32,
    pub solid_n_theta: usize,
    pub solid_n_r: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Linearized solves per step (1 = plain semi-implicit scheme).
    pub elastic_iterations: usize,
    pub output_dir: PathBuf,
    /// Write VTK every this many steps; 0 disables VTK output.
    pub vtk_every: usize,
}

impl ScenarioConfig {
    /// Defaults of a scenario, before any user override.
    pub fn defaults(kind: ScenarioKind) -> Self {
        let disk = Self {
            scenario: kind,
            solid_shape: SolidShape::Disk,
            radius: 0.125,
            thickness: 0.05,
            box_size: 1.0,
            lambda0: 0.7,
            solid_center: [0.6, 0.4],
            source_position: [0.5, 0.5],
            source_rate: 0.0,
            rho_f: 1.0,
            rho_s0: 0.8,
            mu_f: 0.01,
            mu_s: 2.0,
            mu_e: 20.0,
            poisson: 0.3,
            kappa: 1e3,
            body_force: [0.0, -10.0],
            dirichlet: vec![
                BoundaryMarker::Bottom,
                BoundaryMarker::Left,
                BoundaryMarker::Right,
            ],
            neumann: vec![BoundaryMarker::Top],
            fluid_nx: 16,
            fluid_ny: 16,
            solid_refinement: 2,
            solid_n_theta: 64,
            solid_n_r: 2,
            dt: 0.01,
            t_end: 0.5,
            elastic_iterations: 1,
            output_dir: PathBuf::from("output"),
            vtk_every: 10,
        };
        match kind {
            ScenarioKind::DiskRecovery | ScenarioKind::Custom => disk,
            ScenarioKind::AnnulusSource => Self {
                solid_shape: SolidShape::Annulus,
                radius: 0.25,
                thickness: 0.05,
                lambda0: 1.0,
                solid_center: [0.5, 0.5],
                source_position: [0.5, 0.5],
                source_rate: 0.1,
                rho_f: 1.0,
                rho_s0: 1.0,
                mu_f: 1.0,
                mu_s: 1.0,
                mu_e: 1.0,
                body_force: [0.0, 0.0],
                dirichlet: vec![BoundaryMarker::All],
                neumann: Vec::new(),
                fluid_nx: 32,
                fluid_ny: 32,
                ..disk
            },
        }
    }

    /// Parses and validates a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| Error::ConfigParse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let kind = raw
            .scenario
            .ok_or_else(|| config_error("scenario", "missing"))?;
        let mut c = Self::defaults(kind);
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = raw.$field { c.$field = v; } )* };
        }
        take!(
            solid_shape,
            radius,
            thickness,
            box_size,
            lambda0,
            solid_center,
            source_position,
            source_rate,
            rho_f,
            rho_s0,
            mu_f,
            mu_s,
            mu_e,
            poisson,
            kappa,
            body_force,
            fluid_nx,
            fluid_ny,
            solid_refinement,
            solid_n_theta,
            solid_n_r,
            dt,
            t_end,
            elastic_iterations,
            vtk_every
        );
        if let Some(d) = raw.output_dir {
            c.output_dir = PathBuf::from(d);
        }
        if let Some(m) = raw.dirichlet {
            c.dirichlet = parse_markers("dirichlet", &m)?;
        }
        if let Some(m) = raw.neumann {
            c.neumann = parse_markers("neumann", &m)?;
        }
        if kind != ScenarioKind::Custom
            && raw
                .solid_shape
                .is_some_and(|s| s != Self::defaults(kind).solid_shape)
        {
            return Err(config_error(
                "solid_shape",
                "only the custom scenario may change the solid shape",
            ));
        }
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    /// Number of time steps, N = round(T/δt).
    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("radius", self.radius),
            ("thickness", self.thickness),
            ("box_size", self.box_size),
            ("rho_f", self.rho_f),
            ("rho_s0", self.rho_s0),
            ("mu_f", self.mu_f),
            ("mu_e", self.mu_e),
            ("kappa", self.kappa),
            ("dt", self.dt),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(config_error(key, &format!("must be positive, got {v}")));
            }
        }
        let finite = [
            ("source_rate", self.source_rate),
            ("body_force", self.body_force[0]),
            ("body_force", self.body_force[1]),
            ("solid_center", self.solid_center[0]),
            ("solid_center", self.solid_center[1]),
            ("source_position", self.source_position[0]),
            ("source_position", self.source_position[1]),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(config_error(key, "must be finite"));
            }
        }
        if !(self.mu_s >= 0.0 && self.mu_s.is_finite()) {
            return Err(config_error("mu_s", "must be non-negative"));
        }
        if !(self.poisson > 0.0 && self.poisson < 0.5) {
            return Err(config_error("poisson", "must lie in (0, 0.5)"));
        }
        if !(self.lambda0 > 0.0 && self.lambda0 <= 1.0) {
            return Err(config_error(
                "lambda0",
                &format!("must lie in (0, 1], got {}", self.lambda0),
            ));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(config_error("t_end", "must be non-negative"));
        }
        if ((self.t_end / self.dt).round() * self.dt - self.t_end).abs()
            > 1e-9 * self.t_end.max(self.dt)
        {
            return Err(config_error("t_end", "must be a whole multiple of dt"));
        }
        if self.fluid_nx == 0 {
            return Err(config_error("fluid_nx", "must be at least 1"));
        }
        if self.fluid_ny == 0 {
            return Err(config_error("fluid_ny", "must be at least 1"));
        }
        if self.solid_n_theta < 8 {
            return Err(config_error("solid_n_theta", "must be at least 8"));
        }
        if self.elastic_iterations == 0 {
            return Err(config_error("elastic_iterations", "must be at least 1"));
        }
        if self.solid_n_r == 0 {
            return Err(config_error("solid_n_r", "must be at least 1"));
        }
        if self.solid_refinement > 8 {
            return Err(config_error("solid_refinement", "must be at most 8"));
        }
        for d in &self.dirichlet {
            for n in &self.neumann {
                if d == n || *d == BoundaryMarker::All || *n == BoundaryMarker::All {
                    return Err(config_error(
                        "neumann",
                        &format!("`{}` overlaps a Dirichlet boundary", n.name()),
                    ));
                }
            }
        }
        // initial solid must sit strictly inside the box
        let outer = match self.solid_shape {
            SolidShape::Disk => self.lambda0 * self.radius,
            SolidShape::Annulus => self.lambda0 * (self.radius + self.thickness),
        };
        let [cx, cy] = self.solid_center;
        if cx - outer <= 0.0
            || cy - outer <= 0.0
            || cx + outer >= self.box_size
            || cy + outer >= self.box_size
        {
            return Err(config_error(
                "solid_center",
                "initial solid does not fit inside the box",
            ));
        }
        let [sx, sy] = self.source_position;
        if self.source_rate != 0.0
            && !((0.0..=self.box_size).contains(&sx) && (0.0..=self.box_size).contains(&sy))
        {
            return Err(config_error("source_position", "must lie inside the box"));
        }
        Ok(())
    }
}

fn config_error(key: &str, message: &str) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.to_string(),
    }
}

fn parse_markers(key: &str, names: &[String]) -> Result<Vec<BoundaryMarker>> {
    names
        .iter()
        .map(|n| {
            BoundaryMarker::parse(n)
                .map_err(|_| config_error(key, &format!("unknown boundary `{n}`")))
        })
        .collect()
}
