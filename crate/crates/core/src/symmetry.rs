//! Time-reversal data, symmetry residuals and sewing matrices.
//!
//! Complex conjugation is entrywise conjugation in the fixed computational basis.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::InvolutiveLattice;
use crate::linalg::{self, c, CMat};
use crate::spectral::{Frame, HamiltonianFamily, ProjectionFamily};

/// Declared symmetric when both Hamiltonian residuals are below this.
pub const HAMILTONIAN_TOLERANCE: f64 = 1e-10;
pub const PROJECTION_TOLERANCE: f64 = 1e-8;
pub const SEWING_UNITARITY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Θ² = +1
    Even,
    /// Θ² = −1
    Odd,
}

impl Parity {
    pub fn sign(self) -> f64 {
        match self {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        }
    }
}

type JEvaluator = dyn Fn(&[f64]) -> CMat + Send + Sync;

/// The unitary field x ↦ J(x) with its parity ε.
#[derive(Clone)]
pub struct SymmetryData {
    dim: usize,
    parity: Parity,
    eval: Arc<JEvaluator>,
    constant: bool,
}

impl fmt::Debug for SymmetryData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetryData")
            .field("dim", &self.dim)
            .field("parity", &self.parity)
            .field("constant", &self.constant)
            .finish()
    }
}

impl SymmetryData {
    pub fn new(
        dim: usize,
        parity: Parity,
        eval: impl Fn(&[f64]) -> CMat + Send + Sync + 'static,
    ) -> Self {
        SymmetryData {
            dim,
            parity,
            eval: Arc::new(eval),
            constant: false,
        }
    }

    pub fn constant(j: CMat, parity: Parity) -> Self {
        SymmetryData {
            dim: j.nrows(),
            parity,
            constant: true,
            eval: Arc::new(move |_| j.clone()),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::constant(linalg::identity(dim), Parity::Even)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// True when J was declared site-independent.
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    pub fn j(&self, x: &[f64]) -> CMat {
        (self.eval)(x)
    }

    pub fn at_sites(&self, lat: &InvolutiveLattice) -> Vec<CMat> {
        (0..lat.num_sites()).map(|s| self.j(lat.coords(s))).collect()
    }

    /// J₁ ⊕ J₂; both parities must agree.
    pub fn direct_sum(&self, other: &SymmetryData) -> Result<SymmetryData> {
        if self.parity != other.parity {
            return Err(Error::Domain("cannot add symmetry data of different parity".into()));
        }
        let (a, b) = (self.clone(), other.clone());
        let mut out = SymmetryData::new(self.dim + other.dim, self.parity, move |x| {
            linalg::block_diag(&a.j(x), &b.j(x))
        });
        out.constant = self.constant && other.constant;
        Ok(out)
    }

    /// J ↦ O J Oᵀ, the structure transported by the basis change H ↦ O H O†.
    pub fn conjugated(&self, o: &CMat) -> SymmetryData {
        let (j, o) = (self.clone(), o.clone());
        let mut out = SymmetryData::new(self.dim, self.parity, move |x| {
            &o * j.j(x) * o.transpose()
        });
        out.constant = self.constant;
        out
    }
}

/// Block matrix with 2×2 blocks [[0, −1], [1, 0]] on the diagonal; Q·conj(Q) = −1.
pub fn quaternionic_q(n: usize) -> Result<CMat> {
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::Domain(format!("Q needs an even positive size, got {n}")));
    }
    let mut q = CMat::zeros(n, n);
    for b in (0..n).step_by(2) {
        q[(b, b + 1)] = c(-1.0, 0.0);
        q[(b + 1, b)] = c(1.0, 0.0);
    }
    Ok(q)
}

#[derive(Clone, Debug, Serialize)]
pub struct SymmetryReport {
    /// max ‖J(x)† H(τx) J(x) − conj(H(x))‖
    pub hamiltonian_residual: f64,
    /// max ‖J(τx) conj(J(x)) − ε‖
    pub parity_residual: f64,
    /// max ‖J†J − 1‖
    pub unitarity_residual: f64,
    pub symmetric: bool,
}

pub fn verify_hamiltonian_symmetry(
    h: &HamiltonianFamily,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> Result<SymmetryReport> {
    if h.dim() != j.dim() {
        return Err(Error::Domain(format!(
            "Hamiltonian dimension {} does not match J dimension {}",
            h.dim(),
            j.dim()
        )));
    }
    let eps = linalg::identity(j.dim()) * c(j.parity().sign(), 0.0);
    let per_site: Vec<(f64, f64, f64)> = (0..lat.num_sites())
        .into_par_iter()
        .map(|s| {
            let x = lat.coords(s);
            let tx = lat.coords(lat.tau(s));
            let jx = j.j(x);
            let jtx = j.j(tx);
            let lhs = jx.adjoint() * h.eval(tx) * &jx;
            let ham = linalg::dist(&lhs, &h.eval(x).conjugate());
            let par = linalg::dist(&(&jtx * jx.conjugate()), &eps);
            (ham, par, linalg::unitarity_residual(&jx))
        })
        .collect();
    let max = |f: fn(&(f64, f64, f64)) -> f64| per_site.iter().map(f).fold(0.0, f64::max);
    let hamiltonian_residual = max(|r| r.0);
    let parity_residual = max(|r| r.1);
    let unitarity_residual = max(|r| r.2);
    Ok(SymmetryReport {
        hamiltonian_residual,
        parity_residual,
        unitarity_residual,
        symmetric: hamiltonian_residual <= HAMILTONIAN_TOLERANCE
            && parity_residual <= HAMILTONIAN_TOLERANCE
            && unitarity_residual <= HAMILTONIAN_TOLERANCE,
    })
}

/// max over sites of ‖P(τx) J(x) − J(x) conj(P(x))‖.
pub fn verify_projection_symmetry(
    p: &ProjectionFamily,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> Result<f64> {
    if p.dim() != j.dim() || p.projectors.len() != lat.num_sites() {
        return Err(Error::Domain("projection does not match J or the lattice".into()));
    }
    Ok((0..lat.num_sites())
        .into_par_iter()
        .map(|s| {
            let jx = j.j(lat.coords(s));
            let lhs = &p.projectors[lat.tau(s)] * &jx;
            let rhs = &jx * p.projectors[s].conjugate();
            linalg::dist(&lhs, &rhs)
        })
        .reduce(|| 0.0, f64::max))
}

/// Per-site m×m matrices W(x) = Ψ(τx)† J(x) conj(Ψ(x)).
#[derive(Clone, Debug)]
pub struct SewingField {
    pub matrices: Vec<CMat>,
    pub parity: Parity,
    pub unitarity_residual: f64,
}

impl SewingField {
    /// Sewing field of the standard frame, W(x) = J(x) (product bundles).
    pub fn from_symmetry(j: &SymmetryData, lat: &InvolutiveLattice) -> SewingField {
        let matrices = j.at_sites(lat);
        let unitarity_residual = matrices
            .iter()
            .map(linalg::unitarity_residual)
            .fold(0.0, f64::max);
        SewingField {
            matrices,
            parity: j.parity(),
            unitarity_residual,
        }
    }

    pub fn at(&self, site: usize) -> &CMat {
        &self.matrices[site]
    }

    /// max ‖W(τx) conj(W(x)) − ε‖, the discrete Θ² = ε.
    pub fn square_residual(&self, lat: &InvolutiveLattice) -> f64 {
        let m = self.matrices.first().map_or(0, |w| w.nrows());
        let eps = linalg::identity(m) * c(self.parity.sign(), 0.0);
        (0..lat.num_sites())
            .map(|s| linalg::dist(&(&self.matrices[lat.tau(s)] * self.matrices[s].conjugate()), &eps))
            .fold(0.0, f64::max)
    }
}

pub fn sewing_matrix(f: &Frame, j: &SymmetryData, lat: &InvolutiveLattice) -> Result<SewingField> {
    if f.dim() != j.dim() || f.columns.len() != lat.num_sites() {
        return Err(Error::Domain("frame does not match J or the lattice".into()));
    }
    let matrices: Vec<CMat> = (0..lat.num_sites())
        .into_par_iter()
        .map(|s| f.columns[lat.tau(s)].adjoint() * j.j(lat.coords(s)) * f.columns[s].conjugate())
        .collect();
    let mut worst = (0usize, 0.0f64);
    for (s, w) in matrices.iter().enumerate() {
        let r = linalg::unitarity_residual(w);
        if r > worst.1 {
            worst = (s, r);
        }
    }
    if worst.1 > SEWING_UNITARITY_TOLERANCE {
        return Err(Error::SymmetryInconsistency {
            site: worst.0,
            residual: worst.1,
        });
    }
    let field = SewingField {
        matrices,
        parity: j.parity(),
        unitarity_residual: worst.1,
    };
    // At a fixed site W conj(W) = ε; impossible for ε = −1 with odd rank.
    let sq = field.square_residual(lat);
    if sq > SEWING_UNITARITY_TOLERANCE {
        let site = (0..lat.num_sites())
            .max_by(|&a, &b| {
                let r = |s: usize| {
                    let m = field.matrices[s].nrows();
                    let eps = linalg::identity(m) * c(j.parity().sign(), 0.0);
                    linalg::dist(&(&field.matrices[lat.tau(s)] * field.matrices[s].conjugate()), &eps)
                };
                r(a).total_cmp(&r(b))
            })
            .unwrap_or(0);
        return Err(Error::SymmetryInconsistency { site, residual: sq });
    }
    Ok(field)
}

/// max over links x → y of ‖P(x) conj(J(y)† − J(x)†)‖ / |y − x|.
pub fn gb_equivariance_obstruction(
    p: &ProjectionFamily,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> f64 {
    lat.links()
        .par_iter()
        .map(|l| {
            let jx = j.j(lat.coords(l.from));
            let jy = j.j(lat.coords(l.to));
            let diff = (jy.adjoint() - jx.adjoint()).conjugate();
            linalg::frobenius(&(&p.projectors[l.from] * diff)) / l.length()
        })
        .reduce(|| 0.0, f64::max)
}
