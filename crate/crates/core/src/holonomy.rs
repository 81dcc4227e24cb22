//! Wilson loops, continuum holonomies and the fixed-loop reality check.
//!
//! hol = P exp(−∮A). A forward step contributes U†, a backward step U, and later
//! steps multiply on the left, so hol(γ₁·γ₂) = hol(γ₂)·hol(γ₁).

use num_complex::Complex64;
use serde::Serialize;

use crate::berry::{LinkField, ProductConnectionSpec};
use crate::error::{Error, Result};
use crate::lattice::{InvolutiveLattice, LoopPath};
use crate::linalg::{self, c, CMat, I};
use crate::symmetry::SewingField;

/// Rounding window for holonomy signs.
pub const SIGN_WINDOW: f64 = 0.3;

#[derive(Clone, Debug)]
pub struct HolonomyResult {
    pub hol: CMat,
    pub base: usize,
    /// Names the frame gauge the matrix is expressed in.
    pub gauge: String,
}

impl HolonomyResult {
    pub fn trace(&self) -> Complex64 {
        linalg::trace(&self.hol)
    }

    pub fn det(&self) -> Complex64 {
        if self.hol.nrows() == 1 {
            return self.hol[(0, 0)];
        }
        self.hol.clone().determinant()
    }
}

pub fn wilson_loop(u: &LinkField, path: &LoopPath, lat: &InvolutiveLattice) -> Result<HolonomyResult> {
    path.validate(lat)?;
    let mut hol = linalg::identity(u.rank);
    for &s in &path.steps {
        hol = u.step(s.reversed()) * hol;
    }
    Ok(HolonomyResult {
        hol,
        base: path.base,
        gauge: format!("frame@site{}", path.base),
    })
}

/// A closed curve t ∈ [0, 1] ↦ (γ(t), γ̇(t)).
pub trait ClosedCurve {
    fn point(&self, t: f64) -> Vec<f64>;
    fn velocity(&self, t: f64) -> Vec<f64>;
}

/// t ↦ start + t·winding, a straight closed line on a flat periodic base.
#[derive(Clone, Debug)]
pub struct StraightCurve {
    pub start: Vec<f64>,
    pub winding: Vec<f64>,
}

impl ClosedCurve for StraightCurve {
    fn point(&self, t: f64) -> Vec<f64> {
        self.start.iter().zip(&self.winding).map(|(a, w)| a + t * w).collect()
    }

    fn velocity(&self, _t: f64) -> Vec<f64> {
        self.winding.clone()
    }
}

/// Ordered product of exp(−A(γ̇)Δt) evaluated at sub-interval midpoints.
pub fn continuum_holonomy(
    spec: &ProductConnectionSpec,
    curve: &dyn ClosedCurve,
    steps: usize,
) -> Result<HolonomyResult> {
    if steps < 16 {
        return Err(Error::Domain(format!("continuum holonomy needs at least 16 steps, got {steps}")));
    }
    let dt = 1.0 / steps as f64;
    let mut hol = linalg::identity(spec.rank);
    for k in 0..steps {
        let t = (k as f64 + 0.5) * dt;
        let a = spec.along(&curve.point(t), &curve.velocity(t));
        hol = linalg::exp_anti_hermitian(&(a * c(-dt, 0.0))) * hol;
    }
    Ok(HolonomyResult {
        hol,
        base: 0,
        gauge: "product".into(),
    })
}

#[derive(Clone, Debug)]
pub struct FixedLoopHolonomy {
    pub loop_index: usize,
    /// Holonomy in the gauge where Θ acts as plain conjugation at the base site.
    pub holonomy: HolonomyResult,
    /// ‖Im hol‖
    pub reality_residual: f64,
    /// Rounded det hol, the product of the O(1) signs.
    pub sign: i8,
}

/// Rounds a unimodular number to ±1, or fails when it is not near either.
pub fn round_sign(z: Complex64, loop_index: usize) -> Result<i8> {
    if (z - 1.0).norm() < SIGN_WINDOW {
        Ok(1)
    } else if (z + 1.0).norm() < SIGN_WINDOW {
        Ok(-1)
    } else {
        Err(Error::IndeterminateHolonomy {
            loop_index,
            value: format!("{:.4}{:+.4}i", z.re, z.im),
        })
    }
}

pub fn fixed_loop_holonomies(
    u: &LinkField,
    lat: &InvolutiveLattice,
    w: &SewingField,
) -> Result<Vec<FixedLoopHolonomy>> {
    lat.fixed_loops()
        .iter()
        .enumerate()
        .map(|(idx, path)| {
            let h = wilson_loop(u, path, lat)?;
            // W is symmetric unitary at a fixed site; S = √W turns Θ into C.
            let s = linalg::sqrt_unitary(w.at(path.base));
            let real_gauge = s.adjoint() * &h.hol * &s;
            let reality_residual = real_gauge.iter().map(|z| z.im * z.im).sum::<f64>().sqrt();
            let holonomy = HolonomyResult {
                hol: real_gauge,
                base: h.base,
                gauge: format!("real@site{}", h.base),
            };
            let sign = round_sign(holonomy.det(), idx)?;
            Ok(FixedLoopHolonomy {
                loop_index: idx,
                holonomy,
                reality_residual,
                sign,
            })
        })
        .collect()
}

/// ‖W(base)† hol_τγ W(base) − conj(hol_γ)‖
pub fn holonomy_equivariance_check(
    u: &LinkField,
    w: &SewingField,
    path: &LoopPath,
    lat: &InvolutiveLattice,
) -> Result<f64> {
    let hol = wilson_loop(u, path, lat)?;
    let image = wilson_loop(u, &lat.map_loop(path)?, lat)?;
    let wb = w.at(path.base);
    Ok(linalg::dist(&(wb.adjoint() * image.hol * wb), &hol.hol.conjugate()))
}

/// Holonomy e^{−2πia} of the flat Real connection A = ia dθ on the reflection circle.
pub fn flat_moduli_holonomy(a: f64) -> Complex64 {
    (-I * (2.0 * std::f64::consts::PI * a)).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct LoopReport {
    pub loop_id: usize,
    pub base_coords: Vec<f64>,
    pub trace_re: f64,
    pub trace_im: f64,
    pub reality_residual: Option<f64>,
    pub sign: Option<i8>,
}
