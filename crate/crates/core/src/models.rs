//! Model zoo and analytic oracles.
//!
//! Hamiltonian models come with their time-reversal data; product-bundle models are
//! closed-form connections on X × U(m) with a J field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::berry::{self, ProductConnectionSpec};
use crate::curvature;
use crate::error::{Error, Result};
use crate::lattice::{InvolutionKind, InvolutiveLattice, Topology};
use crate::linalg::{self, c, CMat, I};
use crate::spectral::{self, HamiltonianFamily};
use crate::symmetry::{Parity, SymmetryData};

/// Smooth periodic profile used for the oscillator's f and g.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Profile {
    Constant { value: f64 },
    Sin { amplitude: f64, frequency: f64 },
    Cos { amplitude: f64, frequency: f64 },
}

impl Profile {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Sin { amplitude, frequency } => amplitude * (frequency * t).sin(),
            Profile::Cos { amplitude, frequency } => amplitude * (frequency * t).cos(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::Sin { amplitude, frequency } => amplitude * frequency * (frequency * t).cos(),
            Profile::Cos { amplitude, frequency } => -amplitude * frequency * (frequency * t).sin(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OscillatorParams {
    pub level: usize,
    pub n_basis: usize,
    pub delta: f64,
    pub f: Profile,
    pub g: Profile,
}

impl Default for OscillatorParams {
    fn default() -> Self {
        OscillatorParams {
            level: 0,
            n_basis: 40,
            delta: 1.0,
            f: Profile::Sin {
                amplitude: 1.0,
                frequency: 1.0,
            },
            g: Profile::Constant { value: 1.0 },
        }
    }
}

impl OscillatorParams {
    /// ν(θ₁, θ₂) = δ + f(θ₂)²
    pub fn nu(&self, x: &[f64]) -> f64 {
        self.delta + self.f.value(x[1]).powi(2)
    }

    /// φ(θ₁, θ₂) = sin θ₁ · g(θ₂)
    pub fn phi(&self, x: &[f64]) -> f64 {
        x[0].sin() * self.g.value(x[1])
    }

    pub fn grad_nu(&self, x: &[f64]) -> [f64; 2] {
        [0.0, 2.0 * self.f.value(x[1]) * self.f.derivative(x[1])]
    }

    pub fn grad_phi(&self, x: &[f64]) -> [f64; 2] {
        [x[0].cos() * self.g.value(x[1]), x[0].sin() * self.g.derivative(x[1])]
    }

    fn validate(&self) -> Result<()> {
        if self.delta.is_nan() || self.delta <= 0.0 {
            return Err(Error::Model(format!("oscillator needs δ > 0, got {}", self.delta)));
        }
        if self.n_basis < self.level + 20 {
            return Err(Error::Truncation(format!(
                "n_basis = {} is below level + 20 = {}",
                self.n_basis,
                self.level + 20
            )));
        }
        Ok(())
    }
}

/// Normalized Hermite function h_n(y) = C_n H_n(y) e^{−y²/2}.
///
/// Runs the normalized three-term recurrence on the polynomial part and keeps a
/// separate log scale, so large |y| underflows gracefully instead of overflowing.
pub fn hermite_function(n: usize, y: f64) -> f64 {
    let mut log_scale = -0.5 * y * y;
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25);
    for k in 0..n {
        let next = (2.0 / (k as f64 + 1.0)).sqrt() * y * cur - (k as f64 / (k as f64 + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > 1e100 {
            cur *= 1e-100;
            prev *= 1e-100;
            log_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    cur * log_scale.exp()
}

/// ψ_n(r) = ν^{1/4} h_n(r√ν) e^{−i r² φ / 2}, the level-n eigenfunction at (ν, φ).
pub fn hermite_eigenfunction(n: usize, r: f64, nu: f64, phi: f64) -> Complex64 {
    let amp = nu.powf(0.25) * hermite_function(n, r * nu.sqrt());
    amp * (-I * (0.5 * r * r * phi)).exp()
}

/// Gauss–Hermite nodes and weights for ∫ f(r) e^{−r²} dr (Golub–Welsch).
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut jac = nalgebra::DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64 / 2.0).sqrt();
        jac[(k, k - 1)] = b;
        jac[(k - 1, k)] = b;
    }
    let eig = nalgebra::SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], PI.sqrt() * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Matrices of q², p² and pq + qp in the (ν = 1, φ = 0) Hermite basis, truncated to N.
pub fn oscillator_operators(n_basis: usize) -> (CMat, CMat, CMat) {
    let mut q2 = CMat::zeros(n_basis, n_basis);
    let mut p2 = CMat::zeros(n_basis, n_basis);
    let mut pq = CMat::zeros(n_basis, n_basis);
    for k in 0..n_basis {
        q2[(k, k)] = c(k as f64 + 0.5, 0.0);
        p2[(k, k)] = c(k as f64 + 0.5, 0.0);
        if k + 2 < n_basis {
            let s = ((k + 1) as f64 * (k + 2) as f64).sqrt();
            q2[(k + 2, k)] = c(0.5 * s, 0.0);
            q2[(k, k + 2)] = c(0.5 * s, 0.0);
            p2[(k + 2, k)] = c(-0.5 * s, 0.0);
            p2[(k, k + 2)] = c(-0.5 * s, 0.0);
            pq[(k + 2, k)] = c(0.0, s);
            pq[(k, k + 2)] = c(0.0, -s);
        }
    }
    (q2, p2, pq)
}

/// ½[p² + φ(pq + qp) + (ν² + φ²)q²] on the η₁ torus, J = 1, ε = +1.
pub fn model_oscillator(
    p: &OscillatorParams,
    lat: &InvolutiveLattice,
) -> Result<(HamiltonianFamily, SymmetryData)> {
    if lat.topology() != Topology::Torus2 || lat.kind() != InvolutionKind::EtaFirst {
        return Err(Error::Config(
            "the oscillator model lives on torus2 with the eta1 involution".into(),
        ));
    }
    p.validate()?;
    let (q2, p2, pq) = oscillator_operators(p.n_basis);
    let params = p.clone();
    let family = HamiltonianFamily::new("oscillator", p.n_basis, move |x| {
        let (nu, phi) = (params.nu(x), params.phi(x));
        (&p2 + &pq * c(phi, 0.0) + &q2 * c(nu * nu + phi * phi, 0.0)) * c(0.5, 0.0)
    });

    // Truncation check at the sites with the strongest squeezing.
    let score = |s: usize| {
        let x = lat.coords(s);
        p.nu(x).max(1.0 / p.nu(x)) + p.phi(x).abs()
    };
    let worst = (0..lat.num_sites())
        .max_by(|&a, &b| score(a).total_cmp(&score(b)))
        .unwrap_or(0);
    for site in [0, worst] {
        let x = lat.coords(site);
        let (vals, _) = linalg::hermitian_eigen(&family.eval(x));
        let expected = p.nu(x) * (p.level as f64 + 0.5);
        let err = (vals[p.level] - expected).abs();
        if err > 1e-6 {
            return Err(Error::Truncation(format!(
                "level {} eigenvalue off by {err:.2e} at site {site}; increase n_basis",
                p.level
            )));
        }
    }
    Ok((family, SymmetryData::identity(p.n_basis)))
}

/// Imaginary parts of 𝒜_μ = −i (2n+1)/(4ν) ∂_μφ.
pub fn oscillator_analytic_connection(p: &OscillatorParams, x: &[f64]) -> [f64; 2] {
    let k = -(2.0 * p.level as f64 + 1.0) / (4.0 * p.nu(x));
    let g = p.grad_phi(x);
    [k * g[0], k * g[1]]
}

/// Imaginary part of the dθ₁∧dθ₂ coefficient of ℱ = i (2n+1)/(4ν²) dν∧dφ.
pub fn oscillator_analytic_curvature(p: &OscillatorParams, x: &[f64]) -> f64 {
    let nu = p.nu(x);
    let (dn, dp) = (p.grad_nu(x), p.grad_phi(x));
    (2.0 * p.level as f64 + 1.0) / (4.0 * nu * nu) * (dn[0] * dp[1] - dn[1] * dp[0])
}

#[derive(Clone, Debug, Serialize)]
pub struct OscillatorOracleReport {
    pub sizes: [usize; 2],
    pub spacing: f64,
    pub gap_margin: f64,
    /// max over links of |A_numeric − 𝒜| in the analytic gauge.
    pub connection_error: f64,
    /// max over plaquettes of |F_p − ∫_p ℱ| / area.
    pub curvature_error: f64,
    /// max over plaquettes of |F_p / area − ℱ₁₂(center)|.
    pub curvature_point_error: f64,
    pub chern_value: f64,
}

/// Four-point Gauss–Legendre nodes and weights on [−1, 1].
const GAUSS_LEGENDRE_4: ([f64; 4], [f64; 4]) = (
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6],
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9],
);

/// Coefficients of the analytic eigenfunction in the truncated reference basis.
fn analytic_coefficients(p: &OscillatorParams, x: &[f64], nodes: &(Vec<f64>, Vec<f64>)) -> CMat {
    let (nu, phi) = (p.nu(x), p.phi(x));
    let mut out = CMat::zeros(p.n_basis, 1);
    for (&r, &w) in nodes.0.iter().zip(&nodes.1) {
        let psi = hermite_eigenfunction(p.level, r, nu, phi) * (w * (r * r).exp());
        for k in 0..p.n_basis {
            out[(k, 0)] += psi * hermite_function(k, r);
        }
    }
    out
}

/// Compares the numerical Berry connection and curvature of the oscillator level with
/// the closed forms on an n1 × n2 η₁ torus.
pub fn oscillator_oracle(p: &OscillatorParams, n1: usize, n2: usize) -> Result<OscillatorOracleReport> {
    let lat = InvolutiveLattice::torus2(n1, n2, InvolutionKind::EtaFirst)?;
    let (h, _) = model_oscillator(p, &lat)?;
    let spec = spectral::eigensolve_family(&h, &lat)?;
    let bands = [p.level];
    let gap = spectral::gap_margin(&spec, &bands);
    let proj = spectral::select_projection(&spec, &bands)?;
    let frame = spectral::frame_from_projection(&proj)?;
    let links = berry::link_field(&frame, &lat)?;

    let nodes = gauss_hermite(2 * p.n_basis + 40);
    let gauge: Vec<CMat> = (0..lat.num_sites())
        .map(|s| {
            let coeffs = analytic_coefficients(p, lat.coords(s), &nodes);
            let z = (frame.columns[s].adjoint() * coeffs)[(0, 0)];
            linalg::scalar(z / z.norm())
        })
        .collect();
    let aligned = berry::gauge_transform(&links, &gauge, &lat)?;
    let form = berry::local_connection_from_links(&aligned, &lat)?;
    let mut connection_error: f64 = 0.0;
    for (a, l) in form.forms.iter().zip(lat.links()) {
        let exact = oscillator_analytic_connection(p, &l.midpoint);
        let expected = exact[l.direction];
        connection_error = connection_error.max((a[(0, 0)] - I * expected).norm());
    }

    let curv = curvature::plaquette_curvature(&links, &lat)?;
    let area = lat.spacing()[0] * lat.spacing()[1];
    let (h1, h2) = (lat.spacing()[0], lat.spacing()[1]);
    let mut curvature_error: f64 = 0.0;
    let mut curvature_point_error: f64 = 0.0;
    for (f, pl) in curv.flux.iter().zip(lat.plaquettes()) {
        let at_center = oscillator_analytic_curvature(p, &pl.center);
        let mut mean = 0.0;
        for (&u, &wu) in GAUSS_LEGENDRE_4.0.iter().zip(&GAUSS_LEGENDRE_4.1) {
            for (&v, &wv) in GAUSS_LEGENDRE_4.0.iter().zip(&GAUSS_LEGENDRE_4.1) {
                let x = [pl.center[0] + 0.5 * h1 * u, pl.center[1] + 0.5 * h2 * v];
                mean += 0.25 * wu * wv * oscillator_analytic_curvature(p, &x);
            }
        }
        let flux = f[(0, 0)] / area;
        curvature_error = curvature_error.max((flux - I * mean).norm());
        curvature_point_error = curvature_point_error.max((flux - I * at_center).norm());
    }
    let chern = curvature::chern_number(&curv, &lat)?;
    Ok(OscillatorOracleReport {
        sizes: [n1, n2],
        spacing: lat.max_spacing(),
        gap_margin: gap,
        connection_error,
        curvature_error,
        curvature_point_error,
        chern_value: chern.value,
    })
}

/// d(x) for the degree-k sphere model, in (polar, azimuth) coordinates.
pub fn degree_k_vector(k: i32, x: &[f64]) -> [f64; 3] {
    let (t, p) = (x[0], x[1]);
    let x0 = t.cos();
    let w = Complex64::new(t.sin() * p.cos(), t.sin() * p.sin());
    let w = if k >= 0 { w } else { w.conj() };
    let wk = w.powu(k.unsigned_abs());
    [wk.re, wk.im, x0]
}

/// H = Re(w^k)σ_x + Im(w^k)σ_y + x₀σ_z with w = x₁ + i x₂, J = 1.
pub fn model_degree_k_sphere(k: i32) -> Result<(HamiltonianFamily, SymmetryData)> {
    if k == 0 {
        return Err(Error::Model("the degree-k sphere model needs k ≠ 0".into()));
    }
    let h = HamiltonianFamily::new(format!("degree_k_sphere({k})"), 2, move |x| {
        linalg::pauli_vector(degree_k_vector(k, x))
    });
    Ok((h, SymmetryData::identity(2)))
}

/// Signed solid angle of the spherical triangle (a, b, c) (Van Oosterom–Strackee).
pub fn solid_angle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
    let dot = |u: [f64; 3], v: [f64; 3]| u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    let cross = [
        b[1] * c[2] - b[2] * c[1],
        b[2] * c[0] - b[0] * c[2],
        b[0] * c[1] - b[1] * c[0],
    ];
    let num = dot(a, cross);
    let den = 1.0 + dot(a, b) + dot(b, c) + dot(c, a);
    2.0 * num.atan2(den)
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Degree of x ↦ d̂(x) over a closed 2d lattice, as a real number.
pub fn d_vector_degree(d: impl Fn(&[f64]) -> [f64; 3], lat: &InvolutiveLattice) -> f64 {
    let img: Vec<[f64; 3]> = (0..lat.num_sites()).map(|s| normalized(d(lat.coords(s)))).collect();
    let mut total = 0.0;
    for p in lat.plaquettes() {
        let v0 = img[p.sites[0]];
        for w in p.sites[1..].windows(2) {
            total += solid_angle(v0, img[w[0]], img[w[1]]);
        }
    }
    total / (4.0 * PI)
}

/// Brouwer degree of the degree-k sphere model's unit d-vector.
pub fn degree_oracle(k: i32, lat: &InvolutiveLattice) -> Result<i64> {
    if lat.topology() != Topology::Sphere2 {
        return Err(Error::Domain("the degree oracle runs on the sphere".into()));
    }
    Ok(d_vector_degree(|x| degree_k_vector(k, x), lat).round() as i64)
}

/// Qi–Wu–Zhang two-band model d = (sin θ₁, sin θ₂, m + cos θ₁ + cos θ₂) on the η torus.
pub fn qwz_vector(m: f64, x: &[f64]) -> [f64; 3] {
    [x[0].sin(), x[1].sin(), m + x[0].cos() + x[1].cos()]
}

pub fn model_qwz(m: f64) -> (HamiltonianFamily, SymmetryData) {
    let h = HamiltonianFamily::new(format!("qwz({m})"), 2, move |x| {
        linalg::pauli_vector(qwz_vector(m, x))
    });
    (h, SymmetryData::identity(2))
}

/// Two-band model symmetric under ξ. With a = θ₂, b = θ₁ − θ₂ the involution swaps
/// a and b, and d = (sin a + sin b, sin a − sin b, m + cos a + cos b).
pub fn xi_qwz_vector(m: f64, x: &[f64]) -> [f64; 3] {
    let (a, b) = (x[1], x[0] - x[1]);
    [a.sin() + b.sin(), a.sin() - b.sin(), m + a.cos() + b.cos()]
}

pub fn model_xi_qwz(m: f64) -> (HamiltonianFamily, SymmetryData) {
    let h = HamiltonianFamily::new(format!("xi_qwz({m})"), 2, move |x| {
        linalg::pauli_vector(xi_qwz_vector(m, x))
    });
    (h, SymmetryData::identity(2))
}

/// Möbius Real line bundle on the trivial-involution circle: J(θ) = e^{iθ}, A = −(i/2)dθ.
pub fn model_mobius_circle() -> ProductConnectionSpec {
    let j = SymmetryData::new(1, Parity::Even, |x| linalg::scalar((I * x[0]).exp()));
    ProductConnectionSpec::new("mobius", 1, j, |_| vec![linalg::scalar(c(0.0, -0.5))])
}

/// Trivial Real line bundle on a circle: J = 1, A = 0.
pub fn model_trivial_circle() -> ProductConnectionSpec {
    ProductConnectionSpec::new("trivial_circle", 1, SymmetryData::identity(1), |_| {
        vec![CMat::zeros(1, 1)]
    })
}

/// Flat Real connection A = ia dθ on the reflection circle, J = 1.
pub fn model_flat_moduli(a: f64) -> ProductConnectionSpec {
    ProductConnectionSpec::new(format!("flat_moduli({a})"), 1, SymmetryData::identity(1), move |_| {
        vec![linalg::scalar(c(0.0, a))]
    })
}

/// Möbius bundle pulled back along (θ₁, θ₂) ↦ θ₁: J = e^{iθ₁}, A = −(i/2)dθ₁.
pub fn model_mobius_pullback_torus() -> ProductConnectionSpec {
    let j = SymmetryData::new(1, Parity::Even, |x| linalg::scalar((I * x[0]).exp()));
    ProductConnectionSpec::new("mobius_pullback_torus", 1, j, |_| {
        vec![linalg::scalar(c(0.0, -0.5)), CMat::zeros(1, 1)]
    })
}

/// A model ready for the pipeline.
#[derive(Clone, Debug)]
pub enum Model {
    Hamiltonian {
        family: HamiltonianFamily,
        symmetry: SymmetryData,
    },
    Product(ProductConnectionSpec),
}

fn param_f64(params: &Map<String, Value>, key: &str, default: Option<f64>) -> Result<f64> {
    match params.get(key) {
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::Config(format!("model parameter {key} must be a number"))),
        None => default.ok_or_else(|| Error::Config(format!("missing model parameter {key}"))),
    }
}

fn require_base(lat: &InvolutiveLattice, tags: &[&str], model: &str) -> Result<()> {
    let tag = lat.base_tag();
    if tags.contains(&tag.as_str()) {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "model {model} needs base {}, got {tag}",
            tags.join(" or ")
        )))
    }
}

/// Names accepted by [`build_model`].
pub const MODEL_NAMES: &[&str] = &[
    "oscillator",
    "degree_k_sphere",
    "mobius",
    "trivial_circle",
    "flat_moduli",
    "mobius_pullback_torus",
    "qwz",
    "xi_qwz",
];

/// Looks a model up by name and checks that it fits the lattice.
pub fn build_model(name: &str, params: &Map<String, Value>, lat: &InvolutiveLattice) -> Result<Model> {
    let ham = |(family, symmetry): (HamiltonianFamily, SymmetryData)| Model::Hamiltonian { family, symmetry };
    match name {
        "oscillator" => {
            let p: OscillatorParams = serde_json::from_value(Value::Object(params.clone()))
                .map_err(|e| Error::Config(format!("oscillator parameters: {e}")))?;
            Ok(ham(model_oscillator(&p, lat)?))
        }
        "degree_k_sphere" => {
            require_base(lat, &["sphere2"], name)?;
            let k = param_f64(params, "k", None)?;
            if k.fract() != 0.0 {
                return Err(Error::Config("k must be an integer".into()));
            }
            Ok(ham(model_degree_k_sphere(k as i32)?))
        }
        "mobius" => {
            require_base(lat, &["circle-trivial"], name)?;
            Ok(Model::Product(model_mobius_circle()))
        }
        "trivial_circle" => {
            if lat.topology() != Topology::Circle {
                return Err(Error::Config("trivial_circle needs a circle base".into()));
            }
            Ok(Model::Product(model_trivial_circle()))
        }
        "flat_moduli" => {
            require_base(lat, &["circle-reflection"], name)?;
            Ok(Model::Product(model_flat_moduli(param_f64(params, "a", Some(0.0))?)))
        }
        "mobius_pullback_torus" => {
            require_base(lat, &["torus2-eta"], name)?;
            Ok(Model::Product(model_mobius_pullback_torus()))
        }
        "qwz" => {
            require_base(lat, &["torus2-eta", "torus2-trivial"], name)?;
            Ok(ham(model_qwz(param_f64(params, "m", Some(1.0))?)))
        }
        "xi_qwz" => {
            require_base(lat, &["torus2-xi"], name)?;
            Ok(ham(model_xi_qwz(param_f64(params, "m", Some(1.0))?)))
        }
        other => Err(Error::Config(format!(
            "unknown model {other}; known models: {}",
            MODEL_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symmetry::verify_hamiltonian_symmetry;

    #[test]
    fn hermite_ground_state_at_origin() {
        let v = hermite_eigenfunction(0, 0.0, 1.0, 0.0);
        assert!((v.re - PI.powf(-0.25)).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn hermite_matches_explicit_polynomials() {
        // H_1 = 2y, H_2 = 4y² − 2, H_3 = 8y³ − 12y
        let norm = |n: i32| 1.0 / ((1..=n).product::<i32>() as f64 * 2f64.powi(n) * PI.sqrt()).sqrt();
        for &y in &[-1.3f64, 0.2, 2.5] {
            let g = (-0.5 * y * y).exp();
            assert!((hermite_function(1, y) - norm(1) * 2.0 * y * g).abs() < 1e-14);
            assert!((hermite_function(2, y) - norm(2) * (4.0 * y * y - 2.0) * g).abs() < 1e-14);
            assert!((hermite_function(3, y) - norm(3) * (8.0 * y.powi(3) - 12.0 * y) * g).abs() < 1e-14);
        }
        assert_eq!(hermite_function(30, 60.0), 0.0);
        assert!(hermite_function(200, 5.0).is_finite());
    }

    #[test]
    fn hermite_orthonormal_by_quadrature() {
        let (nodes, weights) = gauss_hermite(60);
        for (nu, phi) in [(1.0, 0.0), (1.7, 0.4)] {
            for n in 0..=6 {
                for m in 0..=6 {
                    let mut s = Complex64::new(0.0, 0.0);
                    for (&r, &w) in nodes.iter().zip(&weights) {
                        let a = hermite_eigenfunction(n, r, nu, phi);
                        let b = hermite_eigenfunction(m, r, nu, phi);
                        s += a.conj() * b * (w * (r * r).exp());
                    }
                    let expected = if n == m { 1.0 } else { 0.0 };
                    assert!((s - expected).norm() < 1e-10, "n={n} m={m} nu={nu}: {s}");
                }
            }
        }
    }

    #[test]
    fn hermite_time_reversal() {
        for n in 0..5 {
            let a = hermite_eigenfunction(n, 0.7, 1.3, 0.4).conj();
            let b = hermite_eigenfunction(n, 0.7, 1.3, -0.4);
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20);
        let m0: f64 = w.iter().sum();
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| x * x * w).sum();
        assert!((m0 - PI.sqrt()).abs() < 1e-13);
        assert!((m2 - 0.5 * PI.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn oscillator_spectrum_and_symmetry() {
        let lat = InvolutiveLattice::torus2(8, 8, InvolutionKind::EtaFirst).unwrap();
        let p = OscillatorParams::default();
        let (h, j) = model_oscillator(&p, &lat).unwrap();
        for s in [0, 9, 27, 50] {
            let x = lat.coords(s);
            let (vals, _) = linalg::hermitian_eigen(&h.eval(x));
            for (n, v) in vals.iter().take(3).enumerate() {
                assert!((v - p.nu(x) * (n as f64 + 0.5)).abs() < 1e-8);
            }
        }
        let r = verify_hamiltonian_symmetry(&h, &j, &lat).unwrap();
        assert!(r.hamiltonian_residual <= 1e-10);
        let spec = spectral::eigensolve_family(&h, &lat).unwrap();
        let min_nu = (0..lat.num_sites()).map(|s| p.nu(lat.coords(s))).fold(f64::INFINITY, f64::min);
        assert!((spectral::gap_margin(&spec, &[0]) - min_nu).abs() < 1e-8);
    }

    #[test]
    fn oscillator_rejects_bad_inputs() {
        let lat = InvolutiveLattice::torus2(8, 8, InvolutionKind::EtaFirst).unwrap();
        let small = OscillatorParams { n_basis: 10, ..Default::default() };
        assert!(matches!(model_oscillator(&small, &lat), Err(Error::Truncation(_))));
        let eta = InvolutiveLattice::torus2(8, 8, InvolutionKind::Eta).unwrap();
        assert!(model_oscillator(&OscillatorParams::default(), &eta).is_err());
        let neg = OscillatorParams { delta: -1.0, ..Default::default() };
        assert!(model_oscillator(&neg, &lat).is_err());
    }

    #[test]
    fn analytic_forms() {
        let p = OscillatorParams {
            f: Profile::Constant { value: 0.0 },
            ..Default::default()
        };
        // n = 0, ν = 1, ∂φ = (1, 0) at θ₁ = 0.
        let a = oscillator_analytic_connection(&p, &[0.0, 0.3]);
        assert!((a[0] + 0.25).abs() < 1e-15 && a[1] == 0.0);
        assert_eq!(oscillator_analytic_curvature(&p, &[0.4, 0.3]), 0.0);
        let p3 = OscillatorParams { level: 3, ..p.clone() };
        assert!((oscillator_analytic_connection(&p3, &[0.0, 0.3])[0] - 7.0 * a[0]).abs() < 1e-15);
        let flat = OscillatorParams { g: Profile::Constant { value: 0.0 }, ..Default::default() };
        assert_eq!(oscillator_analytic_connection(&flat, &[0.3, 0.2]), [0.0, 0.0]);
    }

    #[test]
    fn analytic_curvature_is_d_of_connection() {
        let p = OscillatorParams {
            level: 1,
            g: Profile::Cos { amplitude: 0.8, frequency: 1.0 },
            ..Default::default()
        };
        let h = 1e-4;
        for x in [[0.3, 0.7], [-1.2, 2.0], [2.5, -0.4]] {
            let d1a2 = (oscillator_analytic_connection(&p, &[x[0] + h, x[1]])[1]
                - oscillator_analytic_connection(&p, &[x[0] - h, x[1]])[1])
                / (2.0 * h);
            let d2a1 = (oscillator_analytic_connection(&p, &[x[0], x[1] + h])[0]
                - oscillator_analytic_connection(&p, &[x[0], x[1] - h])[0])
                / (2.0 * h);
            assert!((d1a2 - d2a1 - oscillator_analytic_curvature(&p, &x)).abs() < 1e-7);
        }
    }

    #[test]
    fn solid_angle_of_octant() {
        let o = solid_angle([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
        assert!((o - PI / 2.0).abs() < 1e-14);
        let r = solid_angle([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]);
        assert!((r + PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn degree_oracle_values() {
        let lat = InvolutiveLattice::sphere2(24, 32).unwrap();
        for k in [-3, -2, -1, 1, 2, 3] {
            let raw = d_vector_degree(|x| degree_k_vector(k, x), &lat);
            assert!((raw - k as f64).abs() < 1e-9, "k={k}: {raw}");
            assert_eq!(degree_oracle(k, &lat).unwrap(), k as i64);
        }
    }

    #[test]
    fn sphere_models_are_symmetric() {
        let lat = InvolutiveLattice::sphere2(8, 12).unwrap();
        for k in [-2, -1, 1, 2] {
            let (h, j) = model_degree_k_sphere(k).unwrap();
            let r = verify_hamiltonian_symmetry(&h, &j, &lat).unwrap();
            assert!(r.hamiltonian_residual <= 1e-12, "k={k}");
        }
        assert!(model_degree_k_sphere(0).is_err());
    }

    #[test]
    fn qwz_models_are_symmetric() {
        let eta = InvolutiveLattice::torus2(8, 8, InvolutionKind::Eta).unwrap();
        let (h, j) = model_qwz(1.0);
        assert!(verify_hamiltonian_symmetry(&h, &j, &eta).unwrap().symmetric);
        let xi = InvolutiveLattice::torus2(8, 8, InvolutionKind::Xi).unwrap();
        let (h, j) = model_xi_qwz(1.0);
        assert!(verify_hamiltonian_symmetry(&h, &j, &xi).unwrap().symmetric);
    }

    #[test]
    fn mobius_pullback_parity() {
        let spec = model_mobius_pullback_torus();
        let lat = InvolutiveLattice::torus2(8, 8, InvolutionKind::Eta).unwrap();
        for s in 0..lat.num_sites() {
            let x = lat.coords(s);
            let tx = lat.coords(lat.tau(s));
            let prod = spec.symmetry.j(tx) * spec.symmetry.j(x).conjugate();
            assert!((prod[(0, 0)] - c(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn registry_rejects_mismatches() {
        let lat = InvolutiveLattice::circle(8, InvolutionKind::Trivial).unwrap();
        let empty = Map::new();
        assert!(build_model("mobius", &empty, &lat).is_ok());
        assert!(matches!(build_model("nope", &empty, &lat), Err(Error::Config(_))));
        assert!(matches!(build_model("degree_k_sphere", &empty, &lat), Err(Error::Config(_))));
        let sphere = InvolutiveLattice::sphere2(4, 8).unwrap();
        assert!(matches!(build_model("degree_k_sphere", &empty, &sphere), Err(Error::Config(_))));
    }
}
