//! Per-site spectra, isolated-band projections and orthonormal frames.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::InvolutiveLattice;
use crate::linalg::{self, c, frobenius, CMat};

/// Degeneracy tolerance at the boundary of a band selection.
pub const DEGENERACY_TOLERANCE: f64 = 1e-8;

/// Relative anti-Hermitian part tolerated in model output.
pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

type Evaluator = dyn Fn(&[f64]) -> CMat + Send + Sync;

/// A continuous family x ↦ H(x) of N×N Hermitian matrices.
#[derive(Clone)]
pub struct HamiltonianFamily {
    name: String,
    dim: usize,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for HamiltonianFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HamiltonianFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish()
    }
}

impl HamiltonianFamily {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        eval: impl Fn(&[f64]) -> CMat + Send + Sync + 'static,
    ) -> Self {
        HamiltonianFamily {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> CMat {
        (self.eval)(x)
    }

    /// Block-diagonal sum H₁ ⊕ H₂.
    pub fn direct_sum(&self, other: &HamiltonianFamily) -> HamiltonianFamily {
        let (a, b) = (self.clone(), other.clone());
        HamiltonianFamily::new(
            format!("{}+{}", self.name, other.name),
            self.dim + other.dim,
            move |x| linalg::block_diag(&a.eval(x), &b.eval(x)),
        )
    }

    /// x ↦ O H(x) O† for a fixed unitary O.
    pub fn conjugated(&self, o: &CMat) -> HamiltonianFamily {
        let (h, o) = (self.clone(), o.clone());
        HamiltonianFamily::new(self.name.clone(), self.dim, move |x| {
            &o * h.eval(x) * o.adjoint()
        })
    }
}

#[derive(Clone, Debug)]
pub struct SpectralData {
    pub values: Vec<Vec<f64>>,
    pub vectors: Vec<CMat>,
}

impl SpectralData {
    pub fn num_sites(&self) -> usize {
        self.values.len()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.nrows())
    }
}

#[derive(Clone, Debug)]
pub struct ProjectionFamily {
    pub projectors: Vec<CMat>,
    pub rank: usize,
}

impl ProjectionFamily {
    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    /// Largest of ‖P² − P‖, ‖P − P†‖ and |tr P − m| over sites.
    pub fn max_residual(&self) -> f64 {
        self.projectors
            .iter()
            .map(|p| {
                let idem = linalg::dist(&(p * p), p);
                let herm = linalg::hermitian_residual(p);
                let tr = (linalg::trace(p) - c(self.rank as f64, 0.0)).norm();
                idem.max(herm).max(tr)
            })
            .fold(0.0, f64::max)
    }
}

/// Per-site N×m matrices with orthonormal columns.
#[derive(Clone, Debug)]
pub struct Frame {
    pub columns: Vec<CMat>,
    pub rank: usize,
}

impl Frame {
    pub fn new(columns: Vec<CMat>) -> Result<Frame> {
        let rank = columns.first().map_or(0, |c| c.ncols());
        if columns.iter().any(|c| c.ncols() != rank) {
            return Err(Error::Domain("frame columns differ in rank between sites".into()));
        }
        Ok(Frame { columns, rank })
    }

    /// The first `rank` standard basis vectors at every site.
    pub fn standard(num_sites: usize, dim: usize, rank: usize) -> Frame {
        let mut e = CMat::zeros(dim, rank);
        for k in 0..rank {
            e[(k, k)] = c(1.0, 0.0);
        }
        Frame {
            columns: vec![e; num_sites],
            rank,
        }
    }

    pub fn dim(&self) -> usize {
        self.columns.first().map_or(0, |c| c.nrows())
    }

    /// Ψ(x) ↦ Ψ(x) g(x).
    pub fn gauge(&self, g: &[CMat]) -> Result<Frame> {
        if g.len() != self.columns.len() {
            return Err(Error::Domain("gauge field has the wrong number of sites".into()));
        }
        Ok(Frame {
            columns: self.columns.iter().zip(g).map(|(psi, g)| psi * g).collect(),
            rank: self.rank,
        })
    }

    pub fn orthonormality_residual(&self) -> f64 {
        self.columns
            .iter()
            .map(linalg::unitarity_residual)
            .fold(0.0, f64::max)
    }

    pub fn projection(&self) -> ProjectionFamily {
        ProjectionFamily {
            projectors: self.columns.iter().map(|p| p * p.adjoint()).collect(),
            rank: self.rank,
        }
    }
}

pub fn eigensolve_family(h: &HamiltonianFamily, lat: &InvolutiveLattice) -> Result<SpectralData> {
    let solved: Vec<Result<(Vec<f64>, CMat)>> = (0..lat.num_sites())
        .into_par_iter()
        .map(|s| {
            let m = h.eval(lat.coords(s));
            if m.nrows() != h.dim() || m.ncols() != h.dim() {
                return Err(Error::Model(format!(
                    "{} returned a {}×{} matrix, expected {}",
                    h.name(),
                    m.nrows(),
                    m.ncols(),
                    h.dim()
                )));
            }
            let scale = frobenius(&m).max(f64::MIN_POSITIVE);
            let rel = linalg::hermitian_residual(&m) / scale;
            if rel > HERMITICITY_TOLERANCE {
                return Err(Error::Model(format!(
                    "{} is not Hermitian at site {s} (relative residual {rel:.2e})",
                    h.name()
                )));
            }
            let m = (&m + m.adjoint()) * c(0.5, 0.0);
            Ok(linalg::hermitian_eigen(&m))
        })
        .collect();
    let mut values = Vec::with_capacity(solved.len());
    let mut vectors = Vec::with_capacity(solved.len());
    for r in solved {
        let (v, w) = r?;
        values.push(v);
        vectors.push(w);
    }
    Ok(SpectralData { values, vectors })
}

fn check_bands(s: &SpectralData, bands: &[usize]) -> Result<()> {
    let n = s.dim();
    for (i, &b) in bands.iter().enumerate() {
        if b >= n {
            return Err(Error::Config(format!("band index {b} out of range for N = {n}")));
        }
        if bands[..i].contains(&b) {
            return Err(Error::Config(format!("band index {b} listed twice")));
        }
    }
    Ok(())
}

fn site_gap(values: &[f64], bands: &[usize]) -> f64 {
    let mut gap = f64::INFINITY;
    for vj in bands.iter().filter_map(|&j| values.get(j)) {
        for (k, &v) in values.iter().enumerate() {
            if !bands.contains(&k) {
                gap = gap.min((vj - v).abs());
            }
        }
    }
    gap
}

/// Minimum over sites of the spectral distance between the selection and the rest.
/// Infinite when the selection is empty or takes every band.
pub fn gap_margin(s: &SpectralData, bands: &[usize]) -> f64 {
    s.values
        .iter()
        .map(|v| site_gap(v, bands))
        .fold(f64::INFINITY, f64::min)
}

pub fn select_projection(s: &SpectralData, bands: &[usize]) -> Result<ProjectionFamily> {
    check_bands(s, bands)?;
    for (site, v) in s.values.iter().enumerate() {
        let gap = site_gap(v, bands);
        if gap < DEGENERACY_TOLERANCE {
            return Err(Error::GapClosure { site, gap });
        }
    }
    let projectors = s
        .vectors
        .par_iter()
        .map(|v| {
            let n = v.nrows();
            let mut p = CMat::zeros(n, n);
            for &j in bands {
                let col = v.column(j);
                p += col * col.adjoint();
            }
            p
        })
        .collect();
    Ok(ProjectionFamily {
        projectors,
        rank: bands.len(),
    })
}

/// Columns are eigenvectors of P with eigenvalue 1, ordered by the index of their
/// largest component, each phased so that component is real and positive.
pub fn frame_from_projection(p: &ProjectionFamily) -> Result<Frame> {
    let m = p.rank;
    let columns: Vec<Result<CMat>> = p
        .projectors
        .par_iter()
        .enumerate()
        .map(|(site, proj)| {
            let n = proj.nrows();
            let (vals, vecs) = linalg::hermitian_eigen(proj);
            let found = vals.iter().filter(|&&l| l > 0.5).count();
            if found != m {
                return Err(Error::Rank {
                    site,
                    expected: m,
                    found,
                });
            }
            let mut cols: Vec<(usize, CMat)> = (n - m..n)
                .map(|k| {
                    let col = vecs.column(k).into_owned();
                    let lead = (0..n)
                        .max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm()))
                        .unwrap();
                    let phase = col[lead] / col[lead].norm();
                    (lead, CMat::from_iterator(n, 1, col.iter().map(|z| z / phase)))
                })
                .collect();
            cols.sort_by_key(|(lead, _)| *lead);
            let mut psi = CMat::zeros(n, m);
            for (j, (_, col)) in cols.iter().enumerate() {
                psi.set_column(j, &col.column(0));
            }
            Ok(psi)
        })
        .collect();
    Ok(Frame {
        columns: columns.into_iter().collect::<Result<_>>()?,
        rank: m,
    })
}

/// Largest eigen-equation residual ‖H v − λ v‖ relative to ‖H‖ over all sites.
pub fn eigen_residual(h: &HamiltonianFamily, lat: &InvolutiveLattice, s: &SpectralData) -> f64 {
    (0..lat.num_sites())
        .map(|site| {
            let m = h.eval(lat.coords(site));
            let scale = frobenius(&m).max(1.0);
            let v = &s.vectors[site];
            let lam = CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                v.ncols(),
                s.values[site].iter().map(|&l| Complex64::new(l, 0.0)),
            ));
            frobenius(&(&m * v - v * lam)) / scale
        })
        .fold(0.0, f64::max)
}
