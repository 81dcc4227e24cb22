//! Discrete Real bundle assembled from a model: frame, links and sewing matrices.

use serde::Serialize;

use crate::berry::{self, LinkField, ProductConnectionSpec};
use crate::error::{Error, Result};
use crate::lattice::InvolutiveLattice;
use crate::linalg;
use crate::models::Model;
use crate::spectral::{self, Frame, HamiltonianFamily, ProjectionFamily};
use crate::symmetry::{self, SewingField, SymmetryData, SymmetryReport};

#[derive(Clone, Debug, Serialize)]
pub struct BundleDiagnostics {
    pub gap_margin: Option<f64>,
    pub symmetry: Option<SymmetryReport>,
    pub projection_symmetry_residual: f64,
    pub sewing_unitarity_residual: f64,
    pub sewing_square_residual: f64,
}

#[derive(Clone, Debug)]
pub struct DiscreteBundle {
    pub name: String,
    pub frame: Frame,
    pub projection: ProjectionFamily,
    pub links: LinkField,
    pub sewing: SewingField,
    pub symmetry: SymmetryData,
    /// Closed-form connection, for product-bundle models.
    pub product: Option<ProductConnectionSpec>,
    pub diagnostics: BundleDiagnostics,
}

impl DiscreteBundle {
    pub fn rank(&self) -> usize {
        self.links.rank
    }

    /// Spectral projection route: eigensolve, select bands, frame, links, sewing.
    pub fn from_hamiltonian(
        h: &HamiltonianFamily,
        j: &SymmetryData,
        lat: &InvolutiveLattice,
        bands: &[usize],
    ) -> Result<DiscreteBundle> {
        let report = symmetry::verify_hamiltonian_symmetry(h, j, lat)?;
        if !report.symmetric {
            let (what, residual) = if report.hamiltonian_residual > symmetry::HAMILTONIAN_TOLERANCE {
                ("Hamiltonian", report.hamiltonian_residual)
            } else if report.unitarity_residual > symmetry::HAMILTONIAN_TOLERANCE {
                ("J unitarity", report.unitarity_residual)
            } else {
                ("J parity", report.parity_residual)
            };
            return Err(Error::SymmetryViolation {
                what,
                residual,
                tolerance: symmetry::HAMILTONIAN_TOLERANCE,
            });
        }
        let spec = spectral::eigensolve_family(h, lat)?;
        let projection = spectral::select_projection(&spec, bands)?;
        let gap = spectral::gap_margin(&spec, bands);
        let proj_res = symmetry::verify_projection_symmetry(&projection, j, lat)?;
        if proj_res > symmetry::PROJECTION_TOLERANCE {
            return Err(Error::SymmetryViolation {
                what: "projection",
                residual: proj_res,
                tolerance: symmetry::PROJECTION_TOLERANCE,
            });
        }
        let frame = spectral::frame_from_projection(&projection)?;
        let sewing = symmetry::sewing_matrix(&frame, j, lat)?;
        let links = berry::link_field(&frame, lat)?;
        let diagnostics = BundleDiagnostics {
            gap_margin: Some(gap),
            symmetry: Some(report),
            projection_symmetry_residual: proj_res,
            sewing_unitarity_residual: sewing.unitarity_residual,
            sewing_square_residual: sewing.square_residual(lat),
        };
        Ok(DiscreteBundle {
            name: h.name().to_string(),
            frame,
            projection,
            links,
            sewing,
            symmetry: j.clone(),
            product: None,
            diagnostics,
        })
    }

    /// Product bundle X × U(m) with a closed-form connection; the frame is the standard basis.
    pub fn from_product(spec: &ProductConnectionSpec, lat: &InvolutiveLattice) -> Result<DiscreteBundle> {
        let m = spec.rank;
        if spec.symmetry.dim() != m {
            return Err(Error::Model(format!(
                "{}: J has size {} but the bundle rank is {m}",
                spec.name,
                spec.symmetry.dim()
            )));
        }
        let sewing = spec.sewing(lat);
        let square = sewing.square_residual(lat);
        if sewing.unitarity_residual > symmetry::HAMILTONIAN_TOLERANCE {
            return Err(Error::SymmetryViolation {
                what: "J unitarity",
                residual: sewing.unitarity_residual,
                tolerance: symmetry::HAMILTONIAN_TOLERANCE,
            });
        }
        if square > symmetry::HAMILTONIAN_TOLERANCE {
            return Err(Error::SymmetryViolation {
                what: "J parity",
                residual: square,
                tolerance: symmetry::HAMILTONIAN_TOLERANCE,
            });
        }
        let frame = spec.frame(lat);
        let projection = frame.projection();
        Ok(DiscreteBundle {
            name: spec.name.clone(),
            links: spec.link_field(lat),
            frame,
            projection,
            diagnostics: BundleDiagnostics {
                gap_margin: None,
                symmetry: None,
                projection_symmetry_residual: 0.0,
                sewing_unitarity_residual: sewing.unitarity_residual,
                sewing_square_residual: square,
            },
            sewing,
            symmetry: spec.symmetry.clone(),
            product: Some(spec.clone()),
        })
    }

    pub fn from_model(model: &Model, lat: &InvolutiveLattice, bands: &[usize]) -> Result<DiscreteBundle> {
        match model {
            Model::Hamiltonian { family, symmetry } => Self::from_hamiltonian(family, symmetry, lat, bands),
            Model::Product(spec) => Self::from_product(spec, lat),
        }
    }

    pub fn equivariance_residual(&self, lat: &InvolutiveLattice) -> f64 {
        berry::equivariance_residual(&self.links, &self.sewing, lat)
    }

    pub fn gb_obstruction(&self, lat: &InvolutiveLattice) -> f64 {
        symmetry::gb_equivariance_obstruction(&self.projection, &self.symmetry, lat)
    }

    /// Replaces the frame by Ψg and transforms links and sewing matrices to match.
    pub fn regauged(&self, g: &[linalg::CMat], lat: &InvolutiveLattice) -> Result<DiscreteBundle> {
        let mut out = self.clone();
        out.frame = self.frame.gauge(g)?;
        out.links = berry::gauge_transform(&self.links, g, lat)?;
        out.sewing.matrices = (0..lat.num_sites())
            .map(|s| g[lat.tau(s)].adjoint() * self.sewing.at(s) * g[s].conjugate())
            .collect();
        Ok(out)
    }
}
