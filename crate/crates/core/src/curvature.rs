//! Plaquette field strengths, Chern–Weil densities and Chern numbers.
//!
//! F_p = log(U_{s₁} U_{s₂} ⋯ U_{s_k}) for the oriented boundary steps of p. The first
//! Chern density is (i/2π) tr F_p; with the lattices' declared orientations the lower
//! band of the degree-k sphere model integrates to +k.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::berry::LinkField;
use crate::error::{Error, Result};
use crate::lattice::InvolutiveLattice;
use crate::linalg::{self, c, CMat};
use crate::spectral::{frame_from_projection, ProjectionFamily};

/// Chern numbers further than this from an integer raise a warning.
pub const QUANTIZATION_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct CurvatureField {
    /// Anti-Hermitian flux through each plaquette.
    pub flux: Vec<CMat>,
    pub rank: usize,
}

impl CurvatureField {
    pub fn traces(&self) -> Vec<num_complex::Complex64> {
        self.flux.iter().map(linalg::trace).collect()
    }

    /// Plot-ready dump: plaquette center and (i/2π) tr F_p.
    pub fn write_csv<W: Write>(&self, lat: &InvolutiveLattice, mut out: W) -> Result<()> {
        writeln!(out, "x,y,berry_curvature")?;
        for (f, p) in self.flux.iter().zip(lat.plaquettes()) {
            let density = (linalg::trace(f) * c(0.0, 1.0 / (2.0 * PI))).re;
            writeln!(out, "{:.12},{:.12},{:.12e}", p.center[0], p.center[1], density)?;
        }
        Ok(())
    }
}

pub fn plaquette_curvature(u: &LinkField, lat: &InvolutiveLattice) -> Result<CurvatureField> {
    if lat.dim() != 2 {
        return Err(Error::Domain("curvature needs a two-dimensional lattice".into()));
    }
    let flux: Vec<Result<CMat>> = lat
        .plaquettes()
        .par_iter()
        .enumerate()
        .map(|(idx, p)| {
            let mut prod = linalg::identity(u.rank);
            for &s in &p.steps {
                prod *= u.step(s);
            }
            linalg::log_unitary(&prod).ok_or_else(|| Error::BranchCut {
                what: format!("plaquette {idx}"),
            })
        })
        .collect();
    Ok(CurvatureField {
        flux: flux.into_iter().collect::<Result<_>>()?,
        rank: u.rank,
    })
}

/// Elementary symmetric polynomial e_k of the given values.
fn elementary_symmetric(values: &[f64], k: usize) -> f64 {
    let mut e = vec![0.0; k + 1];
    e[0] = 1.0;
    for &v in values {
        for j in (1..=k).rev() {
            e[j] += v * e[j - 1];
        }
    }
    e[k]
}

/// C_k(F_p), the coefficient of t^{m−k} in det(t − F/(2πi)).
pub fn chern_weil_density(curv: &CurvatureField, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > curv.rank {
        return Err(Error::Domain(format!(
            "Chern–Weil degree {k} outside 1..={}",
            curv.rank
        )));
    }
    Ok(curv
        .flux
        .iter()
        .map(|f| {
            if k == 1 {
                return (linalg::trace(f) * c(0.0, 1.0 / (2.0 * PI))).re;
            }
            // iF/2π is Hermitian; C_k = e_k of its eigenvalues.
            let h = f * c(0.0, 1.0 / (2.0 * PI));
            let h = (&h + h.adjoint()) * c(0.5, 0.0);
            let (vals, _) = linalg::hermitian_eigen(&h);
            elementary_symmetric(&vals, k)
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ChernNumber {
    pub value: f64,
    pub integer: i64,
    /// |value − integer|
    pub residual: f64,
}

impl ChernNumber {
    pub fn is_quantized(&self) -> bool {
        self.residual <= QUANTIZATION_TOLERANCE
    }
}

/// Σ_p C₁(F_p), summed in plaquette order.
pub fn chern_number(curv: &CurvatureField, lat: &InvolutiveLattice) -> Result<ChernNumber> {
    if lat.dim() != 2 || curv.flux.len() != lat.plaquettes().len() {
        return Err(Error::Domain("Chern numbers need a curvature field on a 2d lattice".into()));
    }
    let value: f64 = chern_weil_density(curv, 1)?.iter().sum();
    let integer = value.round() as i64;
    let residual = (value - integer as f64).abs();
    if residual > QUANTIZATION_TOLERANCE {
        log::warn!("Chern number {value} is not quantized (residual {residual:.2e})");
    }
    Ok(ChernNumber {
        value,
        integer,
        residual,
    })
}

/// max_p |±tr F_τp − conj(tr F_p)|, the sign undoing an orientation-reversed image.
pub fn curvature_parity_check(curv: &CurvatureField, lat: &InvolutiveLattice) -> f64 {
    let tr = curv.traces();
    (0..lat.plaquettes().len())
        .map(|p| {
            let (q, reversed) = lat.map_plaquette(p);
            let image = if reversed { -tr[q] } else { tr[q] };
            (image - tr[p].conj()).norm()
        })
        .fold(0.0, f64::max)
}

/// Grassmann–Berry curvature P dP ∧ dP integrated over each plaquette by fan
/// triangulation, compressed to the frame at the plaquette's first vertex.
pub fn gb_curvature_direct(p: &ProjectionFamily, lat: &InvolutiveLattice) -> Result<CurvatureField> {
    if lat.dim() != 2 {
        return Err(Error::Domain("curvature needs a two-dimensional lattice".into()));
    }
    let frame = frame_from_projection(p)?;
    let flux = lat
        .plaquettes()
        .par_iter()
        .map(|pl| {
            let v0 = pl.sites[0];
            let p0 = &p.projectors[v0];
            let mut acc = CMat::zeros(p0.nrows(), p0.ncols());
            for w in pl.sites[1..].windows(2) {
                let a = &p.projectors[w[0]] - p0;
                let b = &p.projectors[w[1]] - p0;
                acc += p0 * (&a * &b - &b * &a) * c(0.5, 0.0);
            }
            let psi = &frame.columns[v0];
            linalg::anti_hermitian_part(&(psi.adjoint() * acc * psi))
        })
        .collect();
    Ok(CurvatureField {
        flux,
        rank: p.rank,
    })
}
