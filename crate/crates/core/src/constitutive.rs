//! Compressible neo-Hookean law: energy, first Piola-Kirchhoff stress and
//! its exact derivative with respect to F.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Tensor2 = Matrix2<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    /// Shear modulus.
    pub mu_e: f64,
    /// Poisson ratio.
    pub nu: f64,
    /// Solid viscosity.
    pub nu_s: f64,
    /// Referential density.
    pub rho_s0: f64,
}

impl Material {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| {
            Err(Error::InvalidArgument(format!(
                "{what} = {v} is out of range"
            )))
        };
        if !(self.mu_e > 0.0 && self.mu_e.is_finite()) {
            return bad("mu_e", self.mu_e);
        }
        if !(self.nu > 0.0 && self.nu < 0.5) {
            return bad("nu", self.nu);
        }
        if !(self.nu_s >= 0.0 && self.nu_s.is_finite()) {
            return bad("nu_s", self.nu_s);
        }
        if !(self.rho_s0 > 0.0 && self.rho_s0.is_finite()) {
            return bad("rho_s0", self.rho_s0);
        }
        Ok(())
    }

    /// Exponent of the volumetric term, 2ν/(1−2ν).
    pub fn beta(&self) -> f64 {
        2.0 * self.nu / (1.0 - 2.0 * self.nu)
    }
}

/// Fourth-order tensor indexed `[i][j][k][l]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor4(pub [[[[f64; 2]; 2]; 2]; 2]);

impl Tensor4 {
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[i][j][k][l]
    }

    /// (A:H)_ij = A_ijkl H_kl.
    pub fn contract(&self, h: &Tensor2) -> Tensor2 {
        Tensor2::from_fn(|i, j| {
            let mut s = 0.0;
            for k in 0..2 {
                for l in 0..2 {
                    s += self.0[i][j][k][l] * h[(k, l)];
                }
            }
            s
        })
    }
}

fn checked_det(f: &Tensor2) -> Result<f64> {
    let det = f.determinant();
    if det > 0.0 && det.is_finite() {
        Ok(det)
    } else {
        Err(Error::NonPositiveJacobian { det })
    }
}

fn inverse(f: &Tensor2, det: f64) -> Tensor2 {
    Tensor2::new(f[(1, 1)], -f[(0, 1)], -f[(1, 0)], f[(0, 0)]) / det
}

/// W(F) = μ/2 (‖F‖² − 2) + μ/β (J^{−β} − 1).
pub fn strain_energy(f: &Tensor2, mat: &Material) -> Result<f64> {
    let j = checked_det(f)?;
    let beta = mat.beta();
    let mu = mat.mu_e;
    Ok(0.5 * mu * (f.norm_squared() - 2.0) + mu / beta * (j.powf(-beta) - 1.0))
}

/// P(F) = μ (F − J^{−β} F^{−T}).
pub fn piola_stress(f: &Tensor2, mat: &Material) -> Result<Tensor2> {
    let j = checked_det(f)?;
    let finv_t = inverse(f, j).transpose();
    Ok(mat.mu_e * (f - j.powf(-mat.beta()) * finv_t))
}

/// dP/dF.
pub fn piola_tangent(f: &Tensor2, mat: &Material) -> Result<Tensor4> {
    let j = checked_det(f)?;
    let beta = mat.beta();
    let mu = mat.mu_e;
    let finv = inverse(f, j);
    let finv_t = finv.transpose();
    let jb = j.powf(-beta);
    let mut a = Tensor4::default();
    for i in 0..2 {
        for jj in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let id = if i == k && jj == l { 1.0 } else { 0.0 };
                    a.0[i][jj][k][l] = mu
                        * (id
                            + jb * (beta * finv_t[(i, jj)] * finv_t[(k, l)]
                                + finv[(jj, k)] * finv[(l, i)]));
                }
            }
        }
    }
    Ok(a)
}
