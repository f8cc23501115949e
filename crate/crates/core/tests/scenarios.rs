use std::sync::Arc;

use ibfsi_core::app::{simulate, Scenario, ScenarioConfig};
use ibfsi_core::diagnostics::elastic_energy;
use ibfsi_core::fem::{gauss_rule, ElementFamily, FeSpace};
use ibfsi_core::linalg::solve_direct;
use ibfsi_core::mesh::{make_disk_mesh, Point2};
use ibfsi_core::solid::{assemble_elastic, assemble_solid_mass, eval_deformation};

fn run(json: &str) -> ibfsi_core::app::RunOutput {
    let cfg = ScenarioConfig::from_json(json).unwrap();
    let sc = Scenario::build(&cfg).unwrap();
    simulate(&sc, |_, _| Ok(())).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[test]
fn undeformed_disk_without_loads_stays_at_rest() {
    let cfg = ScenarioConfig::from_json(
        r#"{"scenario": "disk_recovery", "lambda0": 1.0, "body_force": [0.0, 0.0], "fluid_nx": 8, "fluid_ny": 8,
            "solid_refinement": 1, "t_end": 0.1}"#,
    )
    .unwrap();
    let sc = Scenario::build(&cfg).unwrap();
    let w0 = sc.initial.w.clone();
    let out = simulate(&sc, |_, s| {
        assert!(max_abs(&s.u) <= 1e-10);
        assert!(max_abs(&s.lambda) <= 1e-10);
        let dw: Vec<f64> = s.w.iter().zip(&w0).map(|(a, b)| a - b).collect();
        assert!(max_abs(&dw) <= 1e-10);
        Ok(())
    })
    .unwrap();
    assert_eq!(out.reports.len(), 10);
}

#[test]
fn compressed_disk_expands_at_small_step() {
    let out = run(r#"{"scenario": "disk_recovery", "dt": 0.0025, "t_end": 0.02}"#);
    for pair in out.records.windows(2) {
        assert!(pair[1].solid_area > pair[0].solid_area);
    }
    for r in &out.reports {
        assert!(r.constraint_residual <= r.constraint_bound);
    }
}

#[test]
fn source_compresses_annulus_by_injected_volume() {
    let out = run(
        r#"{"scenario": "annulus_source", "fluid_nx": 16, "fluid_ny": 16, "solid_n_theta": 32,
                      "t_end": 0.05}"#,
    );
    let first = &out.records[0];
    let last = out.records.last().unwrap();
    let injected = 0.1 * last.t;
    let decrease = first.solid_area - last.solid_area;
    assert!(decrease > 0.0);
    assert!(
        (decrease - injected).abs() <= 0.1 * injected,
        "{decrease} vs {injected}"
    );
    assert!((last.source_influx_cum - injected).abs() <= 1e-12);
}

#[test]
fn elastic_relaxation_step_lowers_energy() {
    let s = FeSpace::new(
        Arc::new(make_disk_mesh(Point2::zeros(), 0.125, 1).unwrap()),
        ElementFamily::Q2Vector,
    );
    let mat = ibfsi_core::constitutive::Material {
        mu_e: 20.0,
        nu: 0.3,
        nu_s: 0.0,
        rho_s0: 0.8,
    };
    let w0 = s.interpolate(|p| [-0.3 * p.x, -0.3 * p.y]).unwrap();
    let dt = 0.01;
    let defo = eval_deformation(&s, &w0, &gauss_rule(3).unwrap()).unwrap();
    let m = assemble_solid_mass(&s, &defo, mat.rho_s0, 0.0).unwrap();
    let (k, r) = assemble_elastic(&s, &defo, &mat).unwrap();
    let a = m.scaled(1.0 / (dt * dt)).add_scaled(1.0, &k).unwrap();
    let mw = m.mul_vec(&w0);
    let rhs: Vec<f64> = mw.iter().zip(&r).map(|(x, y)| x / (dt * dt) - y).collect();
    let w1 = solve_direct(&a, &rhs).unwrap();
    let e0 = elastic_energy(&w0, &s, &mat).unwrap();
    let e1 = elastic_energy(&w1, &s, &mat).unwrap();
    assert!(e1 < e0, "{e1} >= {e0}");
}
