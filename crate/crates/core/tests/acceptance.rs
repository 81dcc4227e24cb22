//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use realbloch::berry::{self, LocalConnectionForm, ProductConnectionSpec};
use realbloch::bundle::DiscreteBundle;
use realbloch::classify::{self, Group};
use realbloch::curvature;
use realbloch::holonomy::{self, StraightCurve};
use realbloch::linalg::{self, c, CMat, I};
use realbloch::models::{self, Model, OscillatorParams};
use realbloch::symmetry::{Parity, SymmetryData};
use realbloch::{InvolutionKind, InvolutiveLattice, LoopPath, Topology};

type Check = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn lib<T>(r: realbloch::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn within(start: Instant, limit: Duration, what: &str) -> std::result::Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, format!("{what} took {t:.2?}, limit {limit:?}"))
}

/// Refinement halves the residual, or both residuals are at round-off.
fn halves(coarse: f64, fine: f64) -> bool {
    fine <= 0.5 * coarse || (coarse <= 1e-12 && fine <= 1e-12)
}

fn circle(n: usize, kind: InvolutionKind) -> InvolutiveLattice {
    InvolutiveLattice::circle(n, kind).unwrap()
}

fn full_loop(lat: &InvolutiveLattice) -> LoopPath {
    lat.straight_loop(0, 0).unwrap()
}

fn c1_mobius_holonomy() -> Check {
    let start = Instant::now();
    let lat = circle(64, InvolutionKind::Trivial);
    let spec = models::model_mobius_circle();
    let bundle = lib(DiscreteBundle::from_product(&spec, &lat))?;
    let hol = lib(holonomy::wilson_loop(&bundle.links, &full_loop(&lat), &lat))?;
    let lattice_err = (hol.hol[(0, 0)] + 1.0).norm();
    ensure(lattice_err <= 1e-9, format!("lattice holonomy off by {lattice_err:.2e}"))?;

    let curve = StraightCurve {
        start: vec![0.0],
        winding: vec![2.0 * PI],
    };
    let cont = lib(holonomy::continuum_holonomy(&spec, &curve, 64))?;
    let cont_err = (cont.hol[(0, 0)] + 1.0).norm();
    ensure(cont_err <= 1e-3, format!("continuum holonomy off by {cont_err:.2e}"))?;

    let fixed = lib(holonomy::fixed_loop_holonomies(&bundle.links, &lat, &bundle.sewing))?;
    ensure(fixed.len() == 1 && fixed[0].sign == -1, "fixed-loop sign is not -1")?;
    within(start, Duration::from_secs(1), "criterion")?;
    Ok(format!("lattice |hol+1| = {lattice_err:.1e}, continuum |hol+1| = {cont_err:.1e}"))
}

fn c2_trivial_holonomy() -> Check {
    let start = Instant::now();
    let lat = circle(64, InvolutionKind::Trivial);
    let bundle = lib(DiscreteBundle::from_product(&models::model_trivial_circle(), &lat))?;
    let hol = lib(holonomy::wilson_loop(&bundle.links, &full_loop(&lat), &lat))?;
    let err = (hol.hol[(0, 0)] - 1.0).norm();
    ensure(err <= 1e-9, format!("holonomy off by {err:.2e}"))?;
    let fixed = lib(holonomy::fixed_loop_holonomies(&bundle.links, &lat, &bundle.sewing))?;
    ensure(fixed[0].sign == 1, "fixed-loop sign is not +1")?;
    within(start, Duration::from_secs(1), "criterion")?;
    Ok(format!("|hol-1| = {err:.1e}"))
}

fn sphere_bundle(k: i32, lat: &InvolutiveLattice) -> std::result::Result<DiscreteBundle, String> {
    let (h, j) = lib(models::model_degree_k_sphere(k))?;
    lib(DiscreteBundle::from_hamiltonian(&h, &j, lat, &[0]))
}

fn sphere_chern(bundle: &DiscreteBundle, lat: &InvolutiveLattice) -> std::result::Result<curvature::ChernNumber, String> {
    let curv = lib(curvature::plaquette_curvature(&bundle.links, lat))?;
    lib(curvature::chern_number(&curv, lat))
}

fn c3_sphere_chern() -> Check {
    let lat = InvolutiveLattice::sphere2(24, 32).unwrap();
    let mut parts = Vec::new();
    for k in [-2, -1, 1, 2] {
        let start = Instant::now();
        let c1 = sphere_chern(&sphere_bundle(k, &lat)?, &lat)?;
        let oracle = lib(models::degree_oracle(k, &lat))?;
        let err = (c1.value - oracle as f64).abs();
        ensure(err <= 1e-9, format!("k = {k}: c1 = {} vs oracle {oracle}", c1.value))?;
        ensure(oracle == k as i64, format!("k = {k}: oracle certifies {oracle}"))?;
        within(start, Duration::from_secs(10), &format!("k = {k}"))?;
        parts.push(format!("k={k}: {:.1e}", err));
    }
    Ok(parts.join(", "))
}

fn c4_oscillator_oracle() -> Check {
    let start = Instant::now();
    let p = OscillatorParams::default();
    let coarse = lib(models::oscillator_oracle(&p, 16, 16))?;
    let fine = lib(models::oscillator_oracle(&p, 32, 32))?;
    ensure(coarse.connection_error <= 5e-3, format!("connection error {:.2e}", coarse.connection_error))?;
    ensure(coarse.curvature_error <= 5e-3, format!("curvature error {:.2e}", coarse.curvature_error))?;
    ensure(
        halves(coarse.connection_error, fine.connection_error),
        format!("connection error {:.2e} -> {:.2e}", coarse.connection_error, fine.connection_error),
    )?;
    ensure(
        halves(coarse.curvature_error, fine.curvature_error),
        format!("curvature error {:.2e} -> {:.2e}", coarse.curvature_error, fine.curvature_error),
    )?;
    within(start, Duration::from_secs(60), "criterion")?;
    Ok(format!(
        "connection {:.2e} -> {:.2e}, curvature {:.2e} -> {:.2e} (center-point {:.2e})",
        coarse.connection_error,
        fine.connection_error,
        coarse.curvature_error,
        fine.curvature_error,
        coarse.curvature_point_error
    ))
}

fn oscillator_bundle(n: usize) -> std::result::Result<(InvolutiveLattice, DiscreteBundle), String> {
    let lat = InvolutiveLattice::torus2(n, n, InvolutionKind::EtaFirst).unwrap();
    let (h, j) = lib(models::model_oscillator(&OscillatorParams::default(), &lat))?;
    let bundle = lib(DiscreteBundle::from_hamiltonian(&h, &j, &lat, &[0]))?;
    Ok((lat, bundle))
}

fn c5_oscillator_signs() -> Check {
    let (lat, bundle) = oscillator_bundle(16)?;
    let fixed = lib(holonomy::fixed_loop_holonomies(&bundle.links, &lat, &bundle.sewing))?;
    let signs: Vec<i8> = fixed.iter().map(|f| f.sign).collect();
    let worst = fixed.iter().map(|f| f.reality_residual).fold(0.0, f64::max);
    ensure(signs == [1, 1], format!("signs {signs:?}"))?;
    ensure(worst <= 1e-2, format!("reality residual {worst:.2e}"))?;
    Ok(format!("signs (+1, +1), reality residual {worst:.1e}"))
}

fn c6_pullback() -> Check {
    let spec = models::model_mobius_pullback_torus();
    let mut results = Vec::new();
    for n in [16, 32] {
        let lat = InvolutiveLattice::torus2(n, n, InvolutionKind::Eta).unwrap();
        let r = lib(classify::classify_product_bundle(&spec, &lat))?;
        let value = r.diagnostics.chern_value.unwrap_or(f64::NAN);
        ensure(value.abs() <= 1e-9, format!("n = {n}: c1 = {value}"))?;
        ensure(r.group == Group::Z2PlusZ, format!("n = {n}: group {}", r.group.label()))?;
        ensure(r.free == [0] && r.torsion == [-1, -1], format!("n = {n}: verdict {}", r.verdict))?;
        results.push(r);
    }
    ensure(results[0].same_class(&results[1]), "verdict changes under refinement")?;
    Ok(format!("{} stable at 16 and 32", results[0].verdict))
}

struct Case {
    name: &'static str,
    lattices: [InvolutiveLattice; 2],
    model: fn(&InvolutiveLattice) -> Model,
    loops: fn(&InvolutiveLattice) -> Vec<LoopPath>,
}

fn flat_loops(lat: &InvolutiveLattice) -> Vec<LoopPath> {
    if lat.topology() == Topology::Circle {
        let n = lat.num_sites();
        return vec![
            full_loop(lat),
            lat.straight_loop(n / 4 + 1, 0).unwrap(),
            lat.straight_loop(3, 0).unwrap().reversed(),
        ];
    }
    let n1 = lat.sizes()[0];
    let p = lat.plaquettes().len() / 3 + 1;
    vec![
        lat.straight_loop(0, 0).unwrap(),
        lat.straight_loop(n1 + 3, 1).unwrap(),
        lat.plaquette_loop(p),
    ]
}

fn sphere_loops(lat: &InvolutiveLattice) -> Vec<LoopPath> {
    let n_theta = lat.sizes()[0];
    vec![
        lat.latitude_loop(n_theta / 3).unwrap(),
        lat.fixed_loops()[0].clone(),
        lat.plaquette_loop(lat.plaquettes().len() / 2 + 5),
    ]
}

fn ham(pair: (realbloch::spectral::HamiltonianFamily, SymmetryData)) -> Model {
    Model::Hamiltonian {
        family: pair.0,
        symmetry: pair.1,
    }
}

fn constant_j_cases() -> Vec<Case> {
    let torus = |k| {
        [
            InvolutiveLattice::torus2(16, 16, k).unwrap(),
            InvolutiveLattice::torus2(32, 32, k).unwrap(),
        ]
    };
    let sphere = || {
        [
            InvolutiveLattice::sphere2(24, 32).unwrap(),
            InvolutiveLattice::sphere2(48, 64).unwrap(),
        ]
    };
    let circles = |k| [circle(32, k), circle(64, k)];
    vec![
        Case {
            name: "oscillator",
            lattices: torus(InvolutionKind::EtaFirst),
            model: |lat| ham(models::model_oscillator(&OscillatorParams::default(), lat).unwrap()),
            loops: flat_loops,
        },
        Case {
            name: "degree_k_sphere(1)",
            lattices: sphere(),
            model: |_| ham(models::model_degree_k_sphere(1).unwrap()),
            loops: sphere_loops,
        },
        Case {
            name: "degree_k_sphere(-2)",
            lattices: sphere(),
            model: |_| ham(models::model_degree_k_sphere(-2).unwrap()),
            loops: sphere_loops,
        },
        Case {
            name: "qwz",
            lattices: torus(InvolutionKind::Eta),
            model: |_| ham(models::model_qwz(1.0)),
            loops: flat_loops,
        },
        Case {
            name: "xi_qwz",
            lattices: torus(InvolutionKind::Xi),
            model: |_| ham(models::model_xi_qwz(1.0)),
            loops: flat_loops,
        },
        Case {
            name: "trivial_circle",
            lattices: circles(InvolutionKind::Trivial),
            model: |_| Model::Product(models::model_trivial_circle()),
            loops: flat_loops,
        },
        Case {
            name: "flat_moduli",
            lattices: circles(InvolutionKind::Reflection),
            model: |_| Model::Product(models::model_flat_moduli(0.3)),
            loops: flat_loops,
        },
    ]
}

fn c7_equivariance() -> Check {
    let mut worst_ratio: f64 = 0.0;
    for case in constant_j_cases() {
        let mut residuals = Vec::new();
        for lat in &case.lattices {
            let model = (case.model)(lat);
            let bundle = lib(DiscreteBundle::from_model(&model, lat, &[0]))?;
            ensure(bundle.symmetry.is_constant(), format!("{}: J is not constant", case.name))?;
            let h = lat.max_spacing();
            let obstruction = bundle.gb_obstruction(lat);
            ensure(obstruction == 0.0, format!("{}: obstruction {obstruction:e}", case.name))?;
            let r = bundle.equivariance_residual(lat);
            ensure(r <= 1e-2 * h, format!("{}: equivariance residual {r:.2e} at h = {h:.3}", case.name))?;
            worst_ratio = worst_ratio.max(r / h);
            let loops = (case.loops)(lat);
            ensure(loops.len() == 3, "three loops per model")?;
            for path in &loops {
                let e = lib(holonomy::holonomy_equivariance_check(&bundle.links, &bundle.sewing, path, lat))?;
                ensure(e <= 1e-2 * h, format!("{}: loop residual {e:.2e}", case.name))?;
                worst_ratio = worst_ratio.max(e / h);
            }
            residuals.push(r);
        }
        ensure(
            halves(residuals[0], residuals[1]),
            format!("{}: residual {:.2e} -> {:.2e}", case.name, residuals[0], residuals[1]),
        )?;
    }
    Ok(format!("7 models, worst residual/h = {worst_ratio:.1e}"))
}

fn c8_curvature_parity() -> Check {
    let mut parts = Vec::new();
    let mut run = |name: &str, lats: [InvolutiveLattice; 2], build: &dyn Fn(&InvolutiveLattice) -> std::result::Result<DiscreteBundle, String>| -> std::result::Result<(), String> {
        let mut r = Vec::new();
        for lat in &lats {
            let bundle = build(lat)?;
            let curv = lib(curvature::plaquette_curvature(&bundle.links, lat))?;
            let v = curvature::curvature_parity_check(&curv, lat);
            ensure(v <= 1e-2 * lat.max_spacing(), format!("{name}: parity residual {v:.2e}"))?;
            r.push(v);
        }
        ensure(halves(r[0], r[1]), format!("{name}: {:.2e} -> {:.2e}", r[0], r[1]))?;
        parts.push(format!("{name}: {:.1e} -> {:.1e}", r[0], r[1]));
        Ok(())
    };
    run(
        "sphere k=1",
        [InvolutiveLattice::sphere2(24, 32).unwrap(), InvolutiveLattice::sphere2(48, 64).unwrap()],
        &|lat| sphere_bundle(1, lat),
    )?;
    run(
        "oscillator",
        [
            InvolutiveLattice::torus2(16, 16, InvolutionKind::EtaFirst).unwrap(),
            InvolutiveLattice::torus2(32, 32, InvolutionKind::EtaFirst).unwrap(),
        ],
        &|lat| {
            let (h, j) = lib(models::model_oscillator(&OscillatorParams::default(), lat))?;
            lib(DiscreteBundle::from_hamiltonian(&h, &j, lat, &[0]))
        },
    )?;
    Ok(parts.join(", "))
}

fn random_unitary(rng: &mut ChaCha8Rng, m: usize) -> CMat {
    let a = CMat::from_fn(m, m, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let h = linalg::anti_hermitian_part(&a) * c(3.0, 0.0);
    linalg::exp_anti_hermitian(&h)
}

fn c9_gauge_invariance() -> Check {
    let lat = InvolutiveLattice::sphere2(24, 32).unwrap();
    let bundle = sphere_bundle(1, &lat)?;
    let c1 = sphere_chern(&bundle, &lat)?;
    let mut loops: Vec<LoopPath> = (1..=24).map(|j| lat.latitude_loop(j).unwrap()).collect();
    loops.extend(lat.fixed_loops().iter().cloned());
    loops.extend((0..lat.plaquettes().len()).step_by(7).map(|p| lat.plaquette_loop(p)));
    let traces = |b: &DiscreteBundle| -> std::result::Result<Vec<Complex64>, String> {
        loops
            .iter()
            .map(|p| lib(holonomy::wilson_loop(&b.links, p, &lat)).map(|h| h.trace()))
            .collect()
    };
    let base = traces(&bundle)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_c, mut worst_t): (f64, f64) = (0.0, 0.0);
    for _ in 0..100 {
        let g: Vec<CMat> = (0..lat.num_sites()).map(|_| random_unitary(&mut rng, 1)).collect();
        let moved = lib(bundle.regauged(&g, &lat))?;
        let c1g = sphere_chern(&moved, &lat)?;
        worst_c = worst_c.max((c1g.value - c1.value).abs());
        ensure(c1g.integer == c1.integer, "Chern integer changed")?;
        for (a, b) in traces(&moved)?.iter().zip(&base) {
            worst_t = worst_t.max((a - b).norm());
        }
    }
    ensure(worst_c <= 1e-12, format!("Chern number moved by {worst_c:.2e}"))?;
    ensure(worst_t <= 1e-12, format!("Wilson trace moved by {worst_t:.2e}"))?;
    Ok(format!("{} loops, max drift c1 {worst_c:.1e}, traces {worst_t:.1e}", loops.len()))
}

fn c10_flat_moduli() -> Check {
    let lat = circle(64, InvolutionKind::Reflection);
    let path = full_loop(&lat);
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a_values: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut worst: f64 = 0.0;
    let mut hols = Vec::new();
    for &a in &a_values {
        let exact = (-I * 2.0 * PI * a).exp();
        let closed = holonomy::flat_moduli_holonomy(a);
        let bundle = lib(DiscreteBundle::from_product(&models::model_flat_moduli(a), &lat))?;
        let lattice = lib(holonomy::wilson_loop(&bundle.links, &path, &lat))?.hol[(0, 0)];
        worst = worst.max((closed - exact).norm()).max((lattice - exact).norm());
        let shifted = holonomy::flat_moduli_holonomy(a + 1.0);
        ensure((shifted - closed).norm() <= 1e-12, format!("a = {a}: a and a+1 differ"))?;
        hols.push(closed);
    }
    ensure(worst <= 1e-12, format!("deviation {worst:.2e}"))?;
    for i in 0..hols.len() {
        for j in 0..i {
            ensure((hols[i] - hols[j]).norm() > 1e-9, "distinct a give equal holonomy")?;
        }
    }
    Ok(format!("10 values, max deviation {worst:.1e}"))
}

fn random_connection(rng: &mut ChaCha8Rng) -> impl Fn(&[f64]) -> Vec<CMat> + Send + Sync + 'static {
    let coeffs: Vec<(f64, f64)> = (0..4)
        .map(|_| (rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)))
        .collect();
    let offset = rng.random_range(-0.3..0.3);
    move |x: &[f64]| {
        let mut a = offset;
        for (k, (s, co)) in coeffs.iter().enumerate() {
            let k = (k + 1) as f64;
            a += s * (k * x[0]).sin() + co * (k * x[0]).cos();
        }
        vec![linalg::scalar(c(0.0, a))]
    }
}

fn c11_averaging() -> Check {
    let lat = circle(64, InvolutionKind::Trivial);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (mut worst_fixed, mut worst_term): (f64, f64) = (0.0, 0.0);
    for trial in 0..20 {
        let mobius = trial % 2 == 1;
        let j = if mobius {
            SymmetryData::new(1, Parity::Even, |x| linalg::scalar((I * x[0]).exp()))
        } else {
            SymmetryData::identity(1)
        };
        let spec = ProductConnectionSpec::new("random", 1, j.clone(), random_connection(&mut rng));
        let form = lib(spec.local_form(&lat))?;
        let avg = lib(berry::average_connection(&form, &j, &lat))?;
        worst_fixed = worst_fixed.max(lib(berry::real_condition_residual(&avg, &j, &lat))?);
        // Trivial involution, m = 1: the average is the J-term alone.
        let expected = if mobius { -0.5 } else { 0.0 };
        worst_term = worst_term.max(max_deviation(&avg, c(0.0, expected)));
    }
    ensure(worst_fixed <= 1e-10, format!("real condition residual {worst_fixed:.2e}"))?;
    ensure(worst_term <= 1e-10, format!("average differs from the J-term by {worst_term:.2e}"))?;
    Ok(format!("20 connections, fixed point {worst_fixed:.1e}, J-term {worst_term:.1e}"))
}

fn max_deviation(form: &LocalConnectionForm, value: Complex64) -> f64 {
    form.forms.iter().map(|a| (a[(0, 0)] - value).norm()).fold(0.0, f64::max)
}

fn c12_whitney() -> Check {
    let start = Instant::now();
    let lat = circle(64, InvolutionKind::Trivial);
    let mobius = models::model_mobius_circle();
    let trivial = models::model_trivial_circle();
    let sign = |s: &ProductConnectionSpec| -> std::result::Result<i8, String> {
        Ok(lib(classify::classify_product_bundle(s, &lat))?.torsion[0])
    };
    let (sm, st) = (sign(&mobius)?, sign(&trivial)?);
    let sum = sign(&lib(mobius.direct_sum(&trivial))?)?;
    let twice = sign(&lib(mobius.direct_sum(&mobius))?)?;
    ensure(sum == sm * st, format!("mobius+trivial sign {sum}, expected {}", sm * st))?;
    ensure(twice == sm * sm, format!("mobius+mobius sign {twice}"))?;

    let sphere = InvolutiveLattice::sphere2(24, 32).unwrap();
    let mut parts = vec![format!("signs {sm:+}·{st:+} = {sum:+}")];
    for (k1, k2) in [(1, 1), (1, -2), (2, -1)] {
        let (h1, j1) = lib(models::model_degree_k_sphere(k1))?;
        let (h2, j2) = lib(models::model_degree_k_sphere(k2))?;
        let h = h1.direct_sum(&h2);
        let j = lib(j1.direct_sum(&j2))?;
        let r = lib(classify::classify_real_bundle(&h, &j, &sphere, &[0, 1]))?;
        let c1 = r.diagnostics.chern_value.unwrap_or(f64::NAN);
        ensure(r.free == [(k1 + k2) as i64], format!("{k1} ⊕ {k2}: c1 = {c1}"))?;
        ensure((c1 - (k1 + k2) as f64).abs() <= 1e-9, format!("{k1} ⊕ {k2}: c1 = {c1}"))?;
        parts.push(format!("{k1}+{k2}={}", r.free[0]));
    }
    within(start, Duration::from_secs(10), "criterion")?;
    Ok(parts.join(", "))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("1 mobius holonomy", c1_mobius_holonomy),
        ("2 trivial holonomy", c2_trivial_holonomy),
        ("3 sphere chern numbers", c3_sphere_chern),
        ("4 oscillator oracle", c4_oscillator_oracle),
        ("5 oscillator fixed-loop signs", c5_oscillator_signs),
        ("6 torus mobius pullback", c6_pullback),
        ("7 equivariance suite", c7_equivariance),
        ("8 curvature parity", c8_curvature_parity),
        ("9 gauge invariance", c9_gauge_invariance),
        ("10 flat moduli", c10_flat_moduli),
        ("11 averaging", c11_averaging),
        ("12 whitney additivity", c12_whitney),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name:<32} {detail} [{t:.2?}]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<32} {why} [{t:.2?}]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
