//! Discrete Berry connection as unitary link variables.
//!
//! U_ℓ is the unitary polar factor of Ψ(x)†Ψ(y) for the link ℓ: x → y, so that
//! U_ℓ ≈ exp(A(ℓ̇)) with A = Ψ†dΨ. Traversing a link backwards uses U_ℓ†.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{InvolutiveLattice, Step};
use crate::linalg::{self, c, CMat};
use crate::spectral::Frame;
use crate::symmetry::{SewingField, SymmetryData};

/// Overlaps with a smaller singular value are rejected.
pub const SINGULAR_OVERLAP_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct LinkField {
    /// One unitary per stored (forward) link.
    pub links: Vec<CMat>,
    pub rank: usize,
}

impl LinkField {
    pub fn from_unitaries(links: Vec<CMat>, rank: usize) -> Result<LinkField> {
        if links.iter().any(|u| u.nrows() != rank || u.ncols() != rank) {
            return Err(Error::Domain("link matrices do not match the rank".into()));
        }
        Ok(LinkField { links, rank })
    }

    /// Transporter matrix for a step: U for forward traversal, U† for backward.
    pub fn step(&self, s: Step) -> CMat {
        if s.forward {
            self.links[s.link].clone()
        } else {
            self.links[s.link].adjoint()
        }
    }

    pub fn unitarity_residual(&self) -> f64 {
        self.links
            .iter()
            .map(linalg::unitarity_residual)
            .fold(0.0, f64::max)
    }
}

pub fn link_field(f: &Frame, lat: &InvolutiveLattice) -> Result<LinkField> {
    if f.columns.len() != lat.num_sites() {
        return Err(Error::Domain("frame does not cover the lattice".into()));
    }
    let links: Vec<Result<CMat>> = lat
        .links()
        .par_iter()
        .enumerate()
        .map(|(idx, l)| {
            let overlap = f.columns[l.from].adjoint() * &f.columns[l.to];
            let (u, smin) = linalg::polar_unitary(&overlap);
            if smin < SINGULAR_OVERLAP_TOLERANCE {
                return Err(Error::SingularOverlap { link: idx, smin });
            }
            Ok(u)
        })
        .collect();
    Ok(LinkField {
        links: links.into_iter().collect::<Result<_>>()?,
        rank: f.rank,
    })
}

/// Anti-Hermitian A per link, A = log U / |Δ| (per unit coordinate length along the link).
#[derive(Clone, Debug)]
pub struct LocalConnectionForm {
    pub forms: Vec<CMat>,
    pub rank: usize,
}

impl LocalConnectionForm {
    /// A on the first stored link leaving `site` in `direction`.
    pub fn at(&self, lat: &InvolutiveLattice, site: usize, direction: usize) -> Option<&CMat> {
        lat.links()
            .iter()
            .position(|l| l.from == site && l.direction == direction)
            .map(|k| &self.forms[k])
    }

    pub fn anti_hermitian_residual(&self) -> f64 {
        self.forms
            .iter()
            .map(linalg::anti_hermitian_residual)
            .fold(0.0, f64::max)
    }

    /// Link variables exp(A |Δ|).
    pub fn to_links(&self, lat: &InvolutiveLattice) -> LinkField {
        LinkField {
            links: self
                .forms
                .iter()
                .zip(lat.links())
                .map(|(a, l)| linalg::exp_anti_hermitian(&(a * c(l.length(), 0.0))))
                .collect(),
            rank: self.rank,
        }
    }

    /// Plot-ready dump: x, y, direction, row, col, re, im.
    pub fn write_csv<W: Write>(&self, lat: &InvolutiveLattice, mut out: W) -> Result<()> {
        writeln!(out, "x,y,direction,row,col,re,im")?;
        for (a, l) in self.forms.iter().zip(lat.links()) {
            let x = lat.coords(l.from);
            let y = x.get(1).copied().unwrap_or(0.0);
            for r in 0..a.nrows() {
                for col in 0..a.ncols() {
                    let z = a[(r, col)];
                    writeln!(
                        out,
                        "{:.12},{:.12},{},{},{},{:.12e},{:.12e}",
                        x[0], y, l.direction, r, col, z.re, z.im
                    )?;
                }
            }
        }
        Ok(())
    }
}

pub fn local_connection_from_links(
    u: &LinkField,
    lat: &InvolutiveLattice,
) -> Result<LocalConnectionForm> {
    let forms: Vec<Result<CMat>> = u
        .links
        .par_iter()
        .zip(lat.links().par_iter())
        .enumerate()
        .map(|(idx, (m, l))| {
            let log = linalg::log_unitary(m).ok_or_else(|| Error::BranchCut {
                what: format!("link {idx}"),
            })?;
            Ok(log * c(1.0 / l.length(), 0.0))
        })
        .collect();
    Ok(LocalConnectionForm {
        forms: forms.into_iter().collect::<Result<_>>()?,
        rank: u.rank,
    })
}

/// max over links ℓ: x → y of ‖W(x)† U_τℓ W(y) − conj(U_ℓ)‖.
pub fn equivariance_residual(u: &LinkField, w: &SewingField, lat: &InvolutiveLattice) -> f64 {
    lat.links()
        .par_iter()
        .enumerate()
        .map(|(idx, l)| {
            let img = u.step(lat.map_link(idx));
            let lhs = w.at(l.from).adjoint() * img * w.at(l.to);
            linalg::dist(&lhs, &u.links[idx].conjugate())
        })
        .reduce(|| 0.0, f64::max)
}

/// The involutive map U ↦ Uᴶ on link fields of the product bundle,
/// Uᴶ_ℓ = conj(J(x)† U_τℓ J(y)).
pub fn bar_j_links(u: &LinkField, j: &SymmetryData, lat: &InvolutiveLattice) -> LinkField {
    let js = j.at_sites(lat);
    let links = lat
        .links()
        .iter()
        .enumerate()
        .map(|(idx, l)| (js[l.from].adjoint() * u.step(lat.map_link(idx)) * &js[l.to]).conjugate())
        .collect();
    LinkField {
        links,
        rank: u.rank,
    }
}

/// Aᴶ per link, the discrete counterpart of conj(J⁻¹(τ*A)J + J⁻¹dJ).
pub fn bar_j_connection(
    a: &LocalConnectionForm,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> Result<LocalConnectionForm> {
    check_product(a, j, lat)?;
    local_connection_from_links(&bar_j_links(&a.to_links(lat), j, lat), lat)
}

fn check_product(a: &LocalConnectionForm, j: &SymmetryData, lat: &InvolutiveLattice) -> Result<()> {
    if a.rank != j.dim() {
        return Err(Error::Unsupported(
            "averaging needs the product bundle: connection rank must equal the size of J".into(),
        ));
    }
    if a.forms.len() != lat.links().len() {
        return Err(Error::Domain("connection does not cover the lattice".into()));
    }
    Ok(())
}

/// Real (equivariant) average of a product-bundle connection.
///
/// Per link the result is the geodesic midpoint of U and Uᴶ in U(m), which is
/// exp(½(A + Aᴶ)h) whenever the two commute.
pub fn average_connection(
    a: &LocalConnectionForm,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> Result<LocalConnectionForm> {
    check_product(a, j, lat)?;
    let u = a.to_links(lat);
    let uj = bar_j_links(&u, j, lat);
    let mid: Vec<Result<CMat>> = u
        .links
        .iter()
        .zip(&uj.links)
        .enumerate()
        .map(|(idx, (x, y))| {
            let rel = linalg::log_unitary(&(x.adjoint() * y)).ok_or_else(|| Error::BranchCut {
                what: format!("averaging on link {idx}"),
            })?;
            Ok(x * linalg::exp_anti_hermitian(&(rel * c(0.5, 0.0))))
        })
        .collect();
    let mid = LinkField {
        links: mid.into_iter().collect::<Result<_>>()?,
        rank: u.rank,
    };
    local_connection_from_links(&mid, lat)
}

/// max ‖Aᴶ − A‖ over links; zero exactly on Real connections.
pub fn real_condition_residual(
    a: &LocalConnectionForm,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
) -> Result<f64> {
    let aj = bar_j_connection(a, j, lat)?;
    Ok(a.forms
        .iter()
        .zip(&aj.forms)
        .map(|(x, y)| linalg::dist(x, y))
        .fold(0.0, f64::max))
}

pub fn gauge_transform(u: &LinkField, g: &[CMat], lat: &InvolutiveLattice) -> Result<LinkField> {
    if g.len() != lat.num_sites() {
        return Err(Error::Domain("gauge field has the wrong number of sites".into()));
    }
    if let Some(s) = g.iter().position(|m| linalg::unitarity_residual(m) > 1e-10) {
        return Err(Error::Domain(format!("gauge matrix at site {s} is not unitary")));
    }
    let links = u
        .links
        .iter()
        .zip(lat.links())
        .map(|(m, l)| g[l.from].adjoint() * m * &g[l.to])
        .collect();
    Ok(LinkField {
        links,
        rank: u.rank,
    })
}

/// A fixed dim × m isometry with no special alignment to coordinate axes.
pub fn generic_reference(dim: usize, m: usize) -> CMat {
    let raw = CMat::from_fn(dim, m, |k, j| {
        let (k, j) = (k as f64, j as f64);
        (linalg::I * (0.7 * k + 1.3 * j + 0.1 * k * j)).exp() / (1.0 + k + j)
    });
    linalg::polar_unitary(&raw).0
}

/// Per-site gauge g(x) = polar(Ψ(x)† R). The regauged frame overlaps R positively, so
/// it only jumps near the points where Ψ(x)† R is singular. Sites with a singular
/// overlap keep their gauge.
pub fn reference_gauge(f: &Frame, reference: &CMat) -> Result<Vec<CMat>> {
    if reference.nrows() != f.dim() || reference.ncols() != f.rank {
        return Err(Error::Domain("reference does not match the frame".into()));
    }
    Ok(f.columns
        .par_iter()
        .map(|psi| {
            let (g, smin) = linalg::polar_unitary(&(psi.adjoint() * reference));
            if smin > SINGULAR_OVERLAP_TOLERANCE {
                g
            } else {
                linalg::identity(f.rank)
            }
        })
        .collect())
}

type ConnectionEvaluator = dyn Fn(&[f64]) -> Vec<CMat> + Send + Sync;

/// Closed-form connection on a product bundle X × U(m), with its J.
#[derive(Clone)]
pub struct ProductConnectionSpec {
    pub name: String,
    pub rank: usize,
    /// A_μ(x), one anti-Hermitian matrix per coordinate direction.
    pub connection: Arc<ConnectionEvaluator>,
    pub symmetry: SymmetryData,
}

impl fmt::Debug for ProductConnectionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProductConnectionSpec")
            .field("name", &self.name)
            .field("rank", &self.rank)
            .finish()
    }
}

impl ProductConnectionSpec {
    pub fn new(
        name: impl Into<String>,
        rank: usize,
        symmetry: SymmetryData,
        connection: impl Fn(&[f64]) -> Vec<CMat> + Send + Sync + 'static,
    ) -> Self {
        ProductConnectionSpec {
            name: name.into(),
            rank,
            connection: Arc::new(connection),
            symmetry,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<CMat> {
        (self.connection)(x)
    }

    /// Block sum A₁ ⊕ A₂ with J₁ ⊕ J₂.
    pub fn direct_sum(&self, other: &ProductConnectionSpec) -> Result<ProductConnectionSpec> {
        let symmetry = self.symmetry.direct_sum(&other.symmetry)?;
        let (a, b) = (self.clone(), other.clone());
        Ok(ProductConnectionSpec::new(
            format!("{}+{}", self.name, other.name),
            self.rank + other.rank,
            symmetry,
            move |x| {
                a.eval(x)
                    .iter()
                    .zip(b.eval(x).iter())
                    .map(|(p, q)| linalg::block_diag(p, q))
                    .collect()
            },
        ))
    }

    /// A contracted with a coordinate velocity.
    pub fn along(&self, x: &[f64], v: &[f64]) -> CMat {
        let mut out = CMat::zeros(self.rank, self.rank);
        for (a, &vi) in self.eval(x).iter().zip(v) {
            out += a * c(vi, 0.0);
        }
        out
    }

    /// U_ℓ = exp(A(midpoint)·Δ).
    pub fn link_field(&self, lat: &InvolutiveLattice) -> LinkField {
        let links = lat
            .links()
            .par_iter()
            .map(|l| {
                let mid = &l.midpoint[..lat.dim()];
                linalg::exp_anti_hermitian(&self.along(mid, &l.delta[..lat.dim()]))
            })
            .collect();
        LinkField {
            links,
            rank: self.rank,
        }
    }

    pub fn local_form(&self, lat: &InvolutiveLattice) -> Result<LocalConnectionForm> {
        local_connection_from_links(&self.link_field(lat), lat)
    }

    /// Standard-basis frame of the product bundle.
    pub fn frame(&self, lat: &InvolutiveLattice) -> Frame {
        Frame::standard(lat.num_sites(), self.rank, self.rank)
    }

    /// The sewing field of the standard frame is J itself.
    pub fn sewing(&self, lat: &InvolutiveLattice) -> SewingField {
        SewingField::from_symmetry(&self.symmetry, lat)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::InvolutionKind;
    use crate::linalg::I;
    use crate::symmetry::Parity;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn circle(n: usize) -> InvolutiveLattice {
        InvolutiveLattice::circle(n, InvolutionKind::Trivial).unwrap()
    }

    #[test]
    fn constant_frame_gives_identity_links() {
        let lat = circle(8);
        let u = link_field(&Frame::standard(8, 3, 2), &lat).unwrap();
        assert!(u.links.iter().all(|m| linalg::dist(m, &linalg::identity(2)) < 1e-15));
        let a = local_connection_from_links(&u, &lat).unwrap();
        assert!(a.forms.iter().all(|m| linalg::frobenius(m) < 1e-15));
    }

    #[test]
    fn winding_frame() {
        let n = 16;
        let lat = circle(n);
        let cols = (0..n)
            .map(|s| linalg::scalar((I * lat.coords(s)[0]).exp()))
            .collect();
        let u = link_field(&Frame::new(cols).unwrap(), &lat).unwrap();
        let step = (I * (2.0 * PI / n as f64)).exp();
        for m in &u.links {
            assert!((m[(0, 0)] - step).norm() < 1e-13);
        }
        let a = local_connection_from_links(&u, &lat).unwrap();
        for f in &a.forms {
            assert!((f[(0, 0)] - I).norm() < 1e-12);
        }
    }

    #[test]
    fn scalar_log_and_branch_cut() {
        let lat = circle(4);
        let h = lat.links()[0].length();
        let u = LinkField::from_unitaries(vec![linalg::scalar((I * 0.3).exp()); 4], 1).unwrap();
        let a = local_connection_from_links(&u, &lat).unwrap();
        assert!((a.forms[0][(0, 0)] - I * (0.3 / h)).norm() < 1e-12);
        let bad = LinkField::from_unitaries(vec![linalg::scalar(c(-1.0, 0.0)); 4], 1).unwrap();
        assert!(matches!(
            local_connection_from_links(&bad, &lat),
            Err(Error::BranchCut { .. })
        ));
    }

    #[test]
    fn singular_overlap_is_reported() {
        let lat = circle(4);
        let mut cols = vec![CMat::from_column_slice(2, 1, &[c(1.0, 0.0), c(0.0, 0.0)]); 4];
        cols[2] = CMat::from_column_slice(2, 1, &[c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            link_field(&Frame::new(cols).unwrap(), &lat),
            Err(Error::SingularOverlap { link: 1, .. })
        ));
    }

    #[test]
    fn averaging_mobius_term() {
        let lat = circle(32);
        let j = SymmetryData::new(1, Parity::Even, |x| linalg::scalar((I * x[0]).exp()));
        let zero = LocalConnectionForm {
            forms: vec![CMat::zeros(1, 1); 32],
            rank: 1,
        };
        let avg = average_connection(&zero, &j, &lat).unwrap();
        for f in &avg.forms {
            assert!((f[(0, 0)] - c(0.0, -0.5)).norm() < 1e-12);
        }
        assert!(real_condition_residual(&avg, &j, &lat).unwrap() < 1e-10);

        let one = SymmetryData::identity(1);
        let avg = average_connection(&zero, &one, &lat).unwrap();
        assert!(avg.forms.iter().all(|f| linalg::frobenius(f) < 1e-15));
    }

    #[test]
    fn averaging_requires_product_rank() {
        let lat = circle(8);
        let a = LocalConnectionForm {
            forms: vec![CMat::zeros(1, 1); 8],
            rank: 1,
        };
        assert!(matches!(
            average_connection(&a, &SymmetryData::identity(2), &lat),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn trivial_involution_real_links() {
        let lat = circle(8);
        let u = LinkField::from_unitaries(
            (0..8)
                .map(|k| {
                    let t = 0.1 * k as f64;
                    CMat::from_row_slice(2, 2, &[c(t.cos(), 0.0), c(-t.sin(), 0.0), c(t.sin(), 0.0), c(t.cos(), 0.0)])
                })
                .collect(),
            2,
        )
        .unwrap();
        let w = SewingField::from_symmetry(&SymmetryData::identity(2), &lat);
        assert!(equivariance_residual(&u, &w, &lat) < 1e-15);
    }

    #[test]
    fn gauge_rejects_non_unitary() {
        let lat = circle(4);
        let u = LinkField::from_unitaries(vec![linalg::identity(1); 4], 1).unwrap();
        let g = vec![linalg::scalar(c(2.0, 0.0)); 4];
        assert!(gauge_transform(&u, &g, &lat).is_err());
        let g = vec![linalg::identity(1); 4];
        assert_eq!(gauge_transform(&u, &g, &lat).unwrap().links, u.links);
    }

    fn random_connection(lat: &InvolutiveLattice, seed: u64, m: usize) -> LocalConnectionForm {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let forms = lat
            .links()
            .iter()
            .map(|_| {
                let a = CMat::from_fn(m, m, |_, _| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
                linalg::anti_hermitian_part(&a)
            })
            .collect();
        LocalConnectionForm { forms, rank: m }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn averaged_connection_is_fixed_by_bar_j(seed in any::<u64>(), twisted in any::<bool>(), m in 1usize..3) {
            let lat = circle(16);
            let j = if twisted {
                SymmetryData::new(m, Parity::Even, move |x| linalg::identity(m) * (I * x[0]).exp())
            } else {
                SymmetryData::identity(m)
            };
            let a = random_connection(&lat, seed, m);
            let avg = average_connection(&a, &j, &lat).unwrap();
            prop_assert!(avg.anti_hermitian_residual() < 1e-12);
            prop_assert!(real_condition_residual(&avg, &j, &lat).unwrap() < 1e-10);
            // Averaging a Real connection returns it.
            let again = average_connection(&avg, &j, &lat).unwrap();
            for (x, y) in avg.forms.iter().zip(&again.forms) {
                prop_assert!(linalg::dist(x, y) < 1e-10);
            }
        }

        #[test]
        fn links_stay_unitary_under_gauge(seed in any::<u64>()) {
            let lat = InvolutiveLattice::torus2(4, 6, InvolutionKind::Eta).unwrap();
            let a = random_connection(&lat, seed, 2);
            let u = a.to_links(&lat);
            let g = random_connection(&lat, seed ^ 7, 2).to_links(&lat).links[..lat.num_sites()].to_vec();
            let v = gauge_transform(&u, &g, &lat).unwrap();
            prop_assert!(v.unitarity_residual() < 1e-12);
        }
    }

    #[test]
    fn reference_gauge_removes_frame_sign_flips() {
        let lat = InvolutiveLattice::sphere2(12, 16).unwrap();
        let (h, j) = crate::models::model_degree_k_sphere(2).unwrap();
        let b = crate::bundle::DiscreteBundle::from_hamiltonian(&h, &j, &lat, &[0]).unwrap();
        assert!(matches!(
            local_connection_from_links(&b.links, &lat),
            Err(Error::BranchCut { .. })
        ));
        let g = reference_gauge(&b.frame, &generic_reference(2, 1)).unwrap();
        let smooth = gauge_transform(&b.links, &g, &lat).unwrap();
        let form = local_connection_from_links(&smooth, &lat).unwrap();
        assert!(form.anti_hermitian_residual() < 1e-12);
    }
}
