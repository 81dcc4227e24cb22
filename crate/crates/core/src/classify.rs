//! Free and torsion invariants of Real line and vector bundles on the supported bases.
//!
//! The classifying group per base is a fixed table. The free part is the Chern number;
//! the torsion part is read off the signs of fixed-loop holonomies.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bundle::DiscreteBundle;
use crate::curvature;
use crate::error::{Error, Result};
use crate::holonomy;
use crate::lattice::InvolutiveLattice;
use crate::berry::ProductConnectionSpec;
use crate::spectral::HamiltonianFamily;
use crate::symmetry::{Parity, SymmetryData};

/// Equivariance residuals above `EQUIVARIANCE_FACTOR · h` raise a warning.
pub const EQUIVARIANCE_FACTOR: f64 = 1e-2;
pub const REALITY_TOLERANCE: f64 = 1e-2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Group {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "Z")]
    Integers,
    #[serde(rename = "Z2")]
    Z2,
    #[serde(rename = "Z2 ⊕ Z")]
    Z2PlusZ,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Zero => "0",
            Group::Integers => "Z",
            Group::Z2 => "Z2",
            Group::Z2PlusZ => "Z2 ⊕ Z",
        }
    }

    fn has_free(self) -> bool {
        matches!(self, Group::Integers | Group::Z2PlusZ)
    }

    fn has_torsion(self) -> bool {
        matches!(self, Group::Z2 | Group::Z2PlusZ)
    }
}

/// Classifying group of Real bundles over the lattice's base.
pub fn group_for_base(lat: &InvolutiveLattice) -> Result<Group> {
    match lat.base_tag().as_str() {
        "circle-trivial" => Ok(Group::Z2),
        "circle-reflection" | "circle-antipodal" => Ok(Group::Zero),
        "sphere2" | "torus2-xi" => Ok(Group::Integers),
        "torus2-eta" | "torus2-eta1" => Ok(Group::Z2PlusZ),
        other => Err(Error::Unsupported(format!("no classification table for base {other}"))),
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Diagnostics {
    pub spacing: f64,
    pub gap_margin: Option<f64>,
    pub hamiltonian_symmetry_residual: Option<f64>,
    pub projection_symmetry_residual: f64,
    pub sewing_unitarity_residual: f64,
    pub gb_equivariance_obstruction: f64,
    pub equivariance_residual: f64,
    pub chern_value: Option<f64>,
    pub quantization_residual: Option<f64>,
    pub curvature_parity_residual: Option<f64>,
    pub reality_residuals: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ClassificationResult {
    pub base: String,
    pub group: Group,
    pub free: Vec<i64>,
    pub torsion: Vec<i8>,
    pub verdict: String,
    pub diagnostics: Diagnostics,
    pub warnings: Vec<String>,
}

impl ClassificationResult {
    /// Same group, invariants and verdict.
    pub fn same_class(&self, other: &ClassificationResult) -> bool {
        self.group == other.group
            && self.free == other.free
            && self.torsion == other.torsion
            && self.verdict == other.verdict
    }
}

fn signs_label(s: &[i8]) -> String {
    let parts: Vec<String> = s.iter().map(|v| format!("{v:+}")).collect();
    format!("({})", parts.join(", "))
}

/// Classification of an already assembled bundle.
pub fn classify_bundle(bundle: &DiscreteBundle, lat: &InvolutiveLattice) -> Result<ClassificationResult> {
    if bundle.symmetry.parity() == Parity::Odd {
        return Err(Error::Quaternionic);
    }
    let group = group_for_base(lat)?;
    let h = lat.max_spacing();
    let mut warnings = Vec::new();
    let mut diag = Diagnostics {
        spacing: h,
        gap_margin: bundle.diagnostics.gap_margin,
        hamiltonian_symmetry_residual: bundle.diagnostics.symmetry.as_ref().map(|r| r.hamiltonian_residual),
        projection_symmetry_residual: bundle.diagnostics.projection_symmetry_residual,
        sewing_unitarity_residual: bundle.diagnostics.sewing_unitarity_residual,
        gb_equivariance_obstruction: bundle.gb_obstruction(lat),
        equivariance_residual: bundle.equivariance_residual(lat),
        ..Default::default()
    };
    if diag.equivariance_residual > EQUIVARIANCE_FACTOR * h {
        warnings.push(format!(
            "equivariance residual {:.2e} exceeds {:.0e}·h",
            diag.equivariance_residual, EQUIVARIANCE_FACTOR
        ));
    }

    let mut free = Vec::new();
    if group.has_free() {
        let curv = curvature::plaquette_curvature(&bundle.links, lat)?;
        let c1 = curvature::chern_number(&curv, lat)?;
        diag.chern_value = Some(c1.value);
        diag.quantization_residual = Some(c1.residual);
        diag.curvature_parity_residual = Some(curvature::curvature_parity_check(&curv, lat));
        if !c1.is_quantized() {
            warnings.push(format!("Chern number {} is not quantized", c1.value));
        }
        free.push(c1.integer);
    }

    let mut torsion = Vec::new();
    if group.has_torsion() {
        for f in holonomy::fixed_loop_holonomies(&bundle.links, lat, &bundle.sewing)? {
            if f.reality_residual > REALITY_TOLERANCE {
                warnings.push(format!(
                    "fixed loop {} holonomy is not real (residual {:.2e})",
                    f.loop_index, f.reality_residual
                ));
            }
            diag.reality_residuals.push(f.reality_residual);
            torsion.push(f.sign);
        }
    }

    if group == Group::Z2PlusZ && torsion.len() == 2 {
        let parity = if free[0].rem_euclid(2) == 0 { 1 } else { -1 };
        if torsion[0] * torsion[1] != parity {
            warnings.push(format!(
                "fixed-loop signs {} disagree with the parity of c1 = {}",
                signs_label(&torsion),
                free[0]
            ));
        }
    }

    let verdict = match group {
        Group::Zero => "trivial".to_string(),
        Group::Z2 => match torsion.first() {
            Some(-1) => "Möbius class".to_string(),
            _ => "trivial class".to_string(),
        },
        Group::Integers => format!("c1 = {}", free[0]),
        Group::Z2PlusZ => format!("c1 = {}; signs = {}", free[0], signs_label(&torsion)),
    };
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(ClassificationResult {
        base: lat.base_tag(),
        group,
        free,
        torsion,
        verdict,
        diagnostics: diag,
        warnings,
    })
}

pub fn classify_real_bundle(
    h: &HamiltonianFamily,
    j: &SymmetryData,
    lat: &InvolutiveLattice,
    bands: &[usize],
) -> Result<ClassificationResult> {
    if j.parity() == Parity::Odd {
        return Err(Error::Quaternionic);
    }
    group_for_base(lat)?;
    let bundle = DiscreteBundle::from_hamiltonian(h, j, lat, bands)?;
    classify_bundle(&bundle, lat)
}

pub fn classify_product_bundle(
    spec: &ProductConnectionSpec,
    lat: &InvolutiveLattice,
) -> Result<ClassificationResult> {
    if spec.symmetry.parity() == Parity::Odd {
        return Err(Error::Quaternionic);
    }
    group_for_base(lat)?;
    classify_bundle(&DiscreteBundle::from_product(spec, lat)?, lat)
}

/// Human-readable summary that keeps free and torsion parts side by side.
pub fn mixed_case_report(result: &ClassificationResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "base: {}", result.base);
    let _ = writeln!(out, "group: {}", result.group.label());
    match result.group {
        Group::Z2PlusZ => {
            let _ = writeln!(out, "free invariant c1 = {}", result.free[0]);
            let _ = writeln!(
                out,
                "torsion invariants (fixed-loop holonomy signs) = {}",
                signs_label(&result.torsion)
            );
            let _ = writeln!(
                out,
                "note: no canonical splitting of the class into free and torsion parts is known; \
                 the pair above is the full readout"
            );
        }
        Group::Integers => {
            let _ = writeln!(out, "free invariant c1 = {}", result.free[0]);
            let _ = writeln!(out, "torsion-free base: no holonomy signs are needed");
        }
        Group::Z2 => {
            let _ = writeln!(out, "pure torsion: holonomy sign = {}", signs_label(&result.torsion));
        }
        Group::Zero => {
            let _ = writeln!(out, "every Real bundle on this base is trivial");
        }
    }
    let _ = writeln!(out, "verdict: {}", result.verdict);
    for w in &result.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
