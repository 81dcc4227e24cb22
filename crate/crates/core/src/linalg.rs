//! Small dense complex matrix helpers shared by the geometric modules.
//!
//! All matrices here are tiny (rank of a band group, or the truncation size of a
//! model), so clarity wins over blocking or in-place tricks.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn scalar(z: Complex64) -> CMat {
    CMat::from_element(1, 1, z)
}

pub fn frobenius(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist(a: &CMat, b: &CMat) -> f64 {
    frobenius(&(a - b))
}

/// ‖U†U − 1‖_F
pub fn unitarity_residual(u: &CMat) -> f64 {
    dist(&(u.adjoint() * u), &identity(u.ncols()))
}

/// ‖A + A†‖_F
pub fn anti_hermitian_residual(a: &CMat) -> f64 {
    frobenius(&(a + a.adjoint()))
}

pub fn hermitian_residual(a: &CMat) -> f64 {
    frobenius(&(a - a.adjoint()))
}

pub fn anti_hermitian_part(a: &CMat) -> CMat {
    (a - a.adjoint()) * c(0.5, 0.0)
}

pub fn trace(a: &CMat) -> Complex64 {
    a.diagonal().iter().sum()
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues and
/// eigenvector columns in the same order.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 1 {
        return (vec![h[(0, 0)].re], identity(1));
    }
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Unitary factor of the polar decomposition together with the smallest singular value.
pub fn polar_unitary(m: &CMat) -> (CMat, f64) {
    if m.nrows() == 1 && m.ncols() == 1 {
        let z = m[(0, 0)];
        let r = z.norm();
        let u = if r > 0.0 { z / r } else { c(1.0, 0.0) };
        return (scalar(u), r);
    }
    let svd = m.clone().svd(true, true);
    let smin = svd
        .singular_values
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    (u * v_t, smin)
}

/// Schur form of a unitary (hence normal) matrix: U ≈ Q diag(λ) Q†.
fn unitary_spectrum(u: &CMat) -> (CMat, Vec<Complex64>) {
    if u.nrows() == 1 {
        return (identity(1), vec![u[(0, 0)]]);
    }
    let (q, t) = nalgebra::Schur::new(u.clone()).unpack();
    let lambdas = (0..t.nrows()).map(|k| t[(k, k)]).collect();
    (q, lambdas)
}

fn rebuild(q: &CMat, diag: &[Complex64]) -> CMat {
    let d = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(diag));
    q * d * q.adjoint()
}

/// Distance below which an eigenvalue phase counts as sitting on the principal-branch cut.
pub const BRANCH_TOLERANCE: f64 = 1e-9;

/// Principal logarithm of a unitary matrix, anti-Hermitian by construction.
/// Returns `None` when an eigenvalue lies within [`BRANCH_TOLERANCE`] of −1.
pub fn log_unitary(u: &CMat) -> Option<CMat> {
    let (q, lambdas) = unitary_spectrum(u);
    let mut logs = Vec::with_capacity(lambdas.len());
    for z in lambdas {
        let phase = z.arg();
        if std::f64::consts::PI - phase.abs() < BRANCH_TOLERANCE {
            return None;
        }
        logs.push(c(0.0, phase));
    }
    Some(anti_hermitian_part(&rebuild(&q, &logs)))
}

/// Principal square root of a unitary matrix.
pub fn sqrt_unitary(u: &CMat) -> CMat {
    let (q, lambdas) = unitary_spectrum(u);
    let roots: Vec<Complex64> = lambdas
        .iter()
        .map(|z| Complex64::from_polar(1.0, 0.5 * z.arg()))
        .collect();
    rebuild(&q, &roots)
}

/// exp(A) for anti-Hermitian A, exactly unitary up to rounding.
pub fn exp_anti_hermitian(a: &CMat) -> CMat {
    if a.nrows() == 1 {
        return scalar(c(0.0, a[(0, 0)].im).exp());
    }
    // A = -iH with H = iA Hermitian.
    let h = a * I;
    let h = (&h + h.adjoint()) * c(0.5, 0.0);
    let (values, vectors) = hermitian_eigen(&h);
    let phases: Vec<Complex64> = values.iter().map(|&l| Complex64::from_polar(1.0, -l)).collect();
    rebuild(&vectors, &phases)
}

pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut out = CMat::zeros(ra + rb, ca + cb);
    out.view_mut((0, 0), (ra, ca)).copy_from(a);
    out.view_mut((ra, ca), (rb, cb)).copy_from(b);
    out
}

pub fn sigma_x() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])
}

pub fn sigma_y() -> CMat {
    CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)])
}

pub fn sigma_z() -> CMat {
    CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)])
}

/// H = d·σ
pub fn pauli_vector(d: [f64; 3]) -> CMat {
    sigma_x() * c(d[0], 0.0) + sigma_y() * c(d[1], 0.0) + sigma_z() * c(d[2], 0.0)
}
