//! Discretized involutive base manifolds.
//!
//! A lattice is a set of sites with angle coordinates, directed links, oriented
//! plaquettes tiling the closed surface, and an involution given as an exact site
//! permutation. The involution is required to map links to links and plaquettes to
//! plaquettes; the constructors only accept sizes for which that holds.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    Circle,
    Torus2,
    Sphere2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvolutionKind {
    /// Identity map.
    Trivial,
    /// Circle, θ ↦ −θ.
    Reflection,
    /// Circle, θ ↦ θ + π.
    Antipodal,
    /// Torus, (θ₁, θ₂) ↦ (θ₁, −θ₂).
    Eta,
    /// Torus, (θ₁, θ₂) ↦ (−θ₁, θ₂).
    #[serde(rename = "eta1")]
    EtaFirst,
    /// Torus, (θ₁, θ₂) ↦ (θ₁, θ₁ − θ₂).
    Xi,
    /// Sphere, azimuth φ ↦ −φ.
    Kappa,
}

/// A directed link of the lattice, stored once in its forward orientation.
#[derive(Clone, Debug)]
pub struct Link {
    pub from: usize,
    pub to: usize,
    pub direction: usize,
    /// Coordinate displacement from `from` to `to` (not wrapped).
    pub delta: [f64; 2],
    /// Coordinates of the link midpoint.
    pub midpoint: [f64; 2],
}

impl Link {
    pub fn length(&self) -> f64 {
        self.delta[0].hypot(self.delta[1])
    }
}

/// A link traversed either along or against its stored orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Step {
    pub link: usize,
    pub forward: bool,
}

impl Step {
    pub fn reversed(self) -> Step {
        Step {
            link: self.link,
            forward: !self.forward,
        }
    }

    pub fn start(self, lat: &InvolutiveLattice) -> usize {
        let l = &lat.links[self.link];
        if self.forward {
            l.from
        } else {
            l.to
        }
    }

    pub fn end(self, lat: &InvolutiveLattice) -> usize {
        let l = &lat.links[self.link];
        if self.forward {
            l.to
        } else {
            l.from
        }
    }
}

#[derive(Clone, Debug)]
pub struct Plaquette {
    /// Oriented vertex cycle (3 or 4 sites).
    pub sites: Vec<usize>,
    pub steps: Vec<Step>,
    pub center: [f64; 2],
}

/// A closed lattice path, based at the start of its first step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoopPath {
    pub base: usize,
    pub steps: Vec<Step>,
}

impl LoopPath {
    /// Closed path through `sites` in order, returning to `sites[0]`.
    pub fn from_sites(lat: &InvolutiveLattice, sites: &[usize]) -> Result<LoopPath> {
        if sites.len() < 2 {
            return Err(Error::Domain("a loop needs at least two sites".into()));
        }
        let mut steps = Vec::with_capacity(sites.len());
        for (i, &a) in sites.iter().enumerate() {
            let b = sites[(i + 1) % sites.len()];
            let step = lat
                .step_between(a, b)
                .ok_or_else(|| Error::Domain(format!("sites {a} and {b} are not linked")))?;
            steps.push(step);
        }
        Ok(LoopPath {
            base: sites[0],
            steps,
        })
    }

    pub fn sites(&self, lat: &InvolutiveLattice) -> Vec<usize> {
        self.steps.iter().map(|s| s.start(lat)).collect()
    }

    pub fn reversed(&self) -> LoopPath {
        LoopPath {
            base: self.base,
            steps: self.steps.iter().rev().map(|s| s.reversed()).collect(),
        }
    }

    /// Traverse `self`, then `other`. Both must share the base site.
    pub fn concat(&self, other: &LoopPath) -> Result<LoopPath> {
        if self.base != other.base {
            return Err(Error::Domain("concatenated loops must share a base".into()));
        }
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Ok(LoopPath {
            base: self.base,
            steps,
        })
    }

    /// Checks that consecutive steps share endpoints and the path closes at `base`.
    pub fn validate(&self, lat: &InvolutiveLattice) -> Result<()> {
        if self.steps.is_empty() {
            return Err(Error::Domain("empty loop".into()));
        }
        if self.steps.iter().any(|s| s.link >= lat.links.len()) {
            return Err(Error::Domain("loop references a link outside the lattice".into()));
        }
        let mut at = self.base;
        for s in &self.steps {
            if s.start(lat) != at {
                return Err(Error::Domain("loop steps are not contiguous".into()));
            }
            at = s.end(lat);
        }
        if at != self.base {
            return Err(Error::Domain("loop does not close".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct InvolutiveLattice {
    topology: Topology,
    kind: InvolutionKind,
    sizes: Vec<usize>,
    dim: usize,
    sites: Vec<[f64; 2]>,
    links: Vec<Link>,
    plaquettes: Vec<Plaquette>,
    involution: Vec<usize>,
    fixed_sites: Vec<usize>,
    orientation_flip: bool,
    spacing: Vec<f64>,
    link_lookup: HashMap<(usize, usize), Step>,
    link_image: Vec<Step>,
    plaquette_image: Vec<(usize, bool)>,
    fixed_loops: Vec<LoopPath>,
}

/// Angle of grid index `k` out of `n`, in (−π, π] so that k ↦ n − k negates it exactly.
fn grid_angle(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        2.0 * PI * k as f64 / n as f64
    } else {
        -2.0 * PI * (n - k) as f64 / n as f64
    }
}

fn require_even(what: &str, n: usize) -> Result<()> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidDiscretization(format!(
            "{what} = {n} must be even for the involution to permute sites"
        )));
    }
    Ok(())
}

struct Draft {
    topology: Topology,
    kind: InvolutionKind,
    sizes: Vec<usize>,
    dim: usize,
    sites: Vec<[f64; 2]>,
    links: Vec<Link>,
    plaquettes: Vec<(Vec<usize>, [f64; 2])>,
    involution: Vec<usize>,
    spacing: Vec<f64>,
    orientation_flip: bool,
    fixed_cycles: Vec<Vec<usize>>,
}

impl Draft {
    fn finish(self) -> Result<InvolutiveLattice> {
        let n = self.sites.len();
        for (i, &j) in self.involution.iter().enumerate() {
            if j >= n || self.involution[j] != i {
                return Err(Error::InvalidDiscretization(
                    "involution is not a self-inverse permutation".into(),
                ));
            }
        }
        let mut link_lookup = HashMap::with_capacity(2 * self.links.len());
        for (idx, l) in self.links.iter().enumerate() {
            let fwd = Step {
                link: idx,
                forward: true,
            };
            if link_lookup.insert((l.from, l.to), fwd).is_some()
                || link_lookup.insert((l.to, l.from), fwd.reversed()).is_some()
            {
                return Err(Error::InvalidDiscretization(format!(
                    "duplicate link between sites {} and {}",
                    l.from, l.to
                )));
            }
        }

        let mut lat = InvolutiveLattice {
            topology: self.topology,
            kind: self.kind,
            sizes: self.sizes,
            dim: self.dim,
            sites: self.sites,
            links: self.links,
            plaquettes: Vec::new(),
            fixed_sites: (0..n).filter(|&i| self.involution[i] == i).collect(),
            involution: self.involution,
            orientation_flip: self.orientation_flip,
            spacing: self.spacing,
            link_lookup,
            link_image: Vec::new(),
            plaquette_image: Vec::new(),
            fixed_loops: Vec::new(),
        };

        for (cycle, center) in self.plaquettes {
            let steps = LoopPath::from_sites(&lat, &cycle)?.steps;
            lat.plaquettes.push(Plaquette {
                sites: cycle,
                steps,
                center,
            });
        }

        lat.link_image = lat
            .links
            .iter()
            .map(|l| {
                let (a, b) = (lat.involution[l.from], lat.involution[l.to]);
                lat.step_between(a, b).ok_or_else(|| {
                    Error::InvalidDiscretization(format!(
                        "involution maps link {}→{} outside the lattice",
                        l.from, l.to
                    ))
                })
            })
            .collect::<Result<_>>()?;

        let mut by_site_set: HashMap<Vec<usize>, usize> = HashMap::new();
        for (idx, p) in lat.plaquettes.iter().enumerate() {
            let mut key = p.sites.clone();
            key.sort_unstable();
            by_site_set.insert(key, idx);
        }
        let mut plaquette_image = Vec::with_capacity(lat.plaquettes.len());
        for p in &lat.plaquettes {
            let image: Vec<usize> = p.sites.iter().map(|&s| lat.involution[s]).collect();
            let mut key = image.clone();
            key.sort_unstable();
            let q = *by_site_set.get(&key).ok_or_else(|| {
                Error::InvalidDiscretization("involution maps a plaquette outside the lattice".into())
            })?;
            let target = &lat.plaquettes[q].sites;
            let k = target.len();
            let offset = target.iter().position(|&s| s == image[0]).unwrap();
            let same = (0..k).all(|i| image[i] == target[(offset + i) % k]);
            let reversed = (0..k).all(|i| image[i] == target[(offset + k - i) % k]);
            if !same && !reversed {
                return Err(Error::InvalidDiscretization(
                    "plaquette image is not a cyclic rotation".into(),
                ));
            }
            plaquette_image.push((q, !same));
        }
        lat.plaquette_image = plaquette_image;

        lat.fixed_loops = self
            .fixed_cycles
            .iter()
            .map(|c| LoopPath::from_sites(&lat, c))
            .collect::<Result<_>>()?;
        Ok(lat)
    }
}

impl InvolutiveLattice {
    /// Circle with `n_sites` equally spaced sites.
    pub fn circle(n_sites: usize, kind: InvolutionKind) -> Result<Self> {
        if n_sites < 4 {
            return Err(Error::InvalidDiscretization("circle needs at least 4 sites".into()));
        }
        let involution: Vec<usize> = match kind {
            InvolutionKind::Trivial => (0..n_sites).collect(),
            InvolutionKind::Reflection => {
                require_even("n_sites", n_sites)?;
                (0..n_sites).map(|k| (n_sites - k) % n_sites).collect()
            }
            InvolutionKind::Antipodal => {
                require_even("n_sites", n_sites)?;
                (0..n_sites).map(|k| (k + n_sites / 2) % n_sites).collect()
            }
            other => {
                return Err(Error::InvalidDiscretization(format!(
                    "involution {other:?} is not defined on the circle"
                )))
            }
        };
        let h = 2.0 * PI / n_sites as f64;
        let sites = (0..n_sites).map(|k| [grid_angle(k, n_sites), 0.0]).collect::<Vec<_>>();
        let links = (0..n_sites)
            .map(|k| Link {
                from: k,
                to: (k + 1) % n_sites,
                direction: 0,
                delta: [h, 0.0],
                midpoint: [sites[k][0] + 0.5 * h, 0.0],
            })
            .collect();
        let fixed_cycles = if kind == InvolutionKind::Trivial {
            vec![(0..n_sites).collect()]
        } else {
            Vec::new()
        };
        Draft {
            topology: Topology::Circle,
            kind,
            sizes: vec![n_sites],
            dim: 1,
            sites,
            links,
            plaquettes: Vec::new(),
            involution,
            spacing: vec![h],
            orientation_flip: kind == InvolutionKind::Reflection,
            fixed_cycles,
        }
        .finish()
    }

    /// Two-torus on an `n1 × n2` grid of angles.
    ///
    /// `Trivial`, `Eta` and `EtaFirst` use the square grid. `Xi` needs `n1 == n2` and
    /// uses a triangulation with link steps (1,0), (1,1), (2,1) in grid units, the
    /// smallest link set that ξ maps onto itself and that contains the fixed circle.
    pub fn torus2(n1: usize, n2: usize, kind: InvolutionKind) -> Result<Self> {
        if n1 < 4 || n2 < 4 {
            return Err(Error::InvalidDiscretization("torus sizes must be at least 4".into()));
        }
        require_even("n1", n1)?;
        require_even("n2", n2)?;
        let idx = |i1: usize, i2: usize| (i1 % n1) + n1 * (i2 % n2);
        let (h1, h2) = (2.0 * PI / n1 as f64, 2.0 * PI / n2 as f64);
        let mut sites = vec![[0.0; 2]; n1 * n2];
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                sites[idx(i1, i2)] = [grid_angle(i1, n1), grid_angle(i2, n2)];
            }
        }

        let step_set: Vec<(usize, usize)> = match kind {
            InvolutionKind::Xi => {
                if n1 != n2 {
                    return Err(Error::InvalidDiscretization(
                        "the ξ involution needs a square grid (n1 = n2)".into(),
                    ));
                }
                vec![(1, 0), (1, 1), (2, 1)]
            }
            InvolutionKind::Trivial | InvolutionKind::Eta | InvolutionKind::EtaFirst => {
                vec![(1, 0), (0, 1)]
            }
            other => {
                return Err(Error::InvalidDiscretization(format!(
                    "involution {other:?} is not defined on the torus"
                )))
            }
        };

        let mut links = Vec::new();
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                for (dir, &(s1, s2)) in step_set.iter().enumerate() {
                    let delta = [s1 as f64 * h1, s2 as f64 * h2];
                    let from = idx(i1, i2);
                    links.push(Link {
                        from,
                        to: idx(i1 + s1, i2 + s2),
                        direction: dir,
                        delta,
                        midpoint: [
                            sites[from][0] + 0.5 * delta[0],
                            sites[from][1] + 0.5 * delta[1],
                        ],
                    });
                }
            }
        }

        let shapes: Vec<Vec<(usize, usize)>> = if kind == InvolutionKind::Xi {
            vec![vec![(0, 0), (1, 0), (2, 1)], vec![(0, 0), (2, 1), (1, 1)]]
        } else {
            vec![vec![(0, 0), (1, 0), (1, 1), (0, 1)]]
        };
        let mut plaquettes = Vec::new();
        for i2 in 0..n2 {
            for i1 in 0..n1 {
                for shape in &shapes {
                    let cycle = shape.iter().map(|&(a, b)| idx(i1 + a, i2 + b)).collect();
                    let k = shape.len() as f64;
                    let c1 = shape.iter().map(|&(a, _)| a as f64).sum::<f64>() / k;
                    let c2 = shape.iter().map(|&(_, b)| b as f64).sum::<f64>() / k;
                    let base = sites[idx(i1, i2)];
                    plaquettes.push((cycle, [base[0] + c1 * h1, base[1] + c2 * h2]));
                }
            }
        }

        let involution: Vec<usize> = (0..n1 * n2)
            .map(|s| {
                let (i1, i2) = (s % n1, s / n1);
                match kind {
                    InvolutionKind::Trivial => s,
                    InvolutionKind::Eta => idx(i1, n2 - i2),
                    InvolutionKind::EtaFirst => idx(n1 - i1, i2),
                    InvolutionKind::Xi => idx(i1, n2 + i1 - i2),
                    _ => unreachable!(),
                }
            })
            .collect();

        let fixed_cycles: Vec<Vec<usize>> = match kind {
            // The fixed set is the whole torus; report the two generating circles.
            InvolutionKind::Trivial => vec![
                (0..n1).map(|i1| idx(i1, 0)).collect(),
                (0..n2).map(|i2| idx(0, i2)).collect(),
            ],
            InvolutionKind::Eta => [0, n2 / 2]
                .iter()
                .map(|&i2| (0..n1).map(|i1| idx(i1, i2)).collect())
                .collect(),
            InvolutionKind::EtaFirst => [0, n1 / 2]
                .iter()
                .map(|&i1| (0..n2).map(|i2| idx(i1, i2)).collect())
                .collect(),
            // 2θ₂ = θ₁: one circle winding twice around θ₁.
            InvolutionKind::Xi => vec![(0..n2).map(|t| idx(2 * t, t)).collect()],
            _ => unreachable!(),
        };

        let spacing = step_set
            .iter()
            .map(|&(a, b)| (a as f64 * h1).hypot(b as f64 * h2))
            .collect();
        Draft {
            topology: Topology::Torus2,
            kind,
            sizes: vec![n1, n2],
            dim: 2,
            sites,
            links,
            plaquettes,
            involution,
            spacing,
            orientation_flip: matches!(
                kind,
                InvolutionKind::Eta | InvolutionKind::EtaFirst | InvolutionKind::Xi
            ),
            fixed_cycles,
        }
        .finish()
    }

    /// Sphere with `n_theta` latitude rings of `n_phi` sites plus two pole sites.
    ///
    /// Coordinates are (polar angle, azimuth). Plaquettes are oriented polar-first,
    /// which is the outward orientation; the pole caps are triangles.
    pub fn sphere2(n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 3 || n_phi < 4 {
            return Err(Error::InvalidDiscretization(
                "sphere needs n_theta >= 3 and n_phi >= 4".into(),
            ));
        }
        require_even("n_phi", n_phi)?;
        let h_theta = PI / (n_theta + 1) as f64;
        let h_phi = 2.0 * PI / n_phi as f64;
        let north = 0;
        let south = n_theta * n_phi + 1;
        let ring = |j: usize, k: usize| 1 + (j - 1) * n_phi + (k % n_phi);

        let mut sites = vec![[0.0, 0.0]];
        for j in 1..=n_theta {
            for k in 0..n_phi {
                sites.push([j as f64 * h_theta, grid_angle(k, n_phi)]);
            }
        }
        sites.push([PI, 0.0]);

        let mut links = Vec::new();
        for k in 0..n_phi {
            let phi = grid_angle(k, n_phi);
            links.push(Link {
                from: north,
                to: ring(1, k),
                direction: 0,
                delta: [h_theta, 0.0],
                midpoint: [0.5 * h_theta, phi],
            });
            for j in 1..n_theta {
                links.push(Link {
                    from: ring(j, k),
                    to: ring(j + 1, k),
                    direction: 0,
                    delta: [h_theta, 0.0],
                    midpoint: [(j as f64 + 0.5) * h_theta, phi],
                });
            }
            links.push(Link {
                from: ring(n_theta, k),
                to: south,
                direction: 0,
                delta: [h_theta, 0.0],
                midpoint: [PI - 0.5 * h_theta, phi],
            });
            for j in 1..=n_theta {
                links.push(Link {
                    from: ring(j, k),
                    to: ring(j, k + 1),
                    direction: 1,
                    delta: [0.0, h_phi],
                    midpoint: [j as f64 * h_theta, phi + 0.5 * h_phi],
                });
            }
        }

        let mut plaquettes = Vec::new();
        for k in 0..n_phi {
            let phi_mid = grid_angle(k, n_phi) + 0.5 * h_phi;
            plaquettes.push((
                vec![north, ring(1, k), ring(1, k + 1)],
                [2.0 / 3.0 * h_theta, phi_mid],
            ));
            for j in 1..n_theta {
                plaquettes.push((
                    vec![ring(j, k), ring(j + 1, k), ring(j + 1, k + 1), ring(j, k + 1)],
                    [(j as f64 + 0.5) * h_theta, phi_mid],
                ));
            }
            plaquettes.push((
                vec![ring(n_theta, k), south, ring(n_theta, k + 1)],
                [PI - 2.0 / 3.0 * h_theta, phi_mid],
            ));
        }

        let mut involution = vec![north];
        for j in 1..=n_theta {
            for k in 0..n_phi {
                involution.push(ring(j, n_phi - k));
            }
        }
        involution.push(south);

        // Great circle φ ∈ {0, π}: down the φ = 0 meridian, up the φ = π one.
        let mut great_circle = vec![north];
        great_circle.extend((1..=n_theta).map(|j| ring(j, 0)));
        great_circle.push(south);
        great_circle.extend((1..=n_theta).rev().map(|j| ring(j, n_phi / 2)));

        Draft {
            topology: Topology::Sphere2,
            kind: InvolutionKind::Kappa,
            sizes: vec![n_theta, n_phi],
            dim: 2,
            sites,
            links,
            plaquettes,
            involution,
            spacing: vec![h_theta, h_phi],
            orientation_flip: true,
            fixed_cycles: vec![great_circle],
        }
        .finish()
    }

    /// Builds a lattice from a topology tag and sizes.
    pub fn build(topology: Topology, sizes: &[usize], kind: InvolutionKind) -> Result<Self> {
        match (topology, sizes) {
            (Topology::Circle, &[n]) => Self::circle(n, kind),
            (Topology::Torus2, &[n1, n2]) => Self::torus2(n1, n2, kind),
            (Topology::Sphere2, &[nt, np]) => {
                if kind != InvolutionKind::Kappa {
                    return Err(Error::InvalidDiscretization(
                        "the sphere carries the κ involution only".into(),
                    ));
                }
                Self::sphere2(nt, np)
            }
            _ => Err(Error::InvalidDiscretization(format!(
                "wrong number of sizes {sizes:?} for {topology:?}"
            ))),
        }
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn kind(&self) -> InvolutionKind {
        self.kind
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Short tag naming the involutive base, e.g. `torus2-eta`.
    pub fn base_tag(&self) -> String {
        let kind = match self.kind {
            InvolutionKind::Trivial => "trivial",
            InvolutionKind::Reflection => "reflection",
            InvolutionKind::Antipodal => "antipodal",
            InvolutionKind::Eta => "eta",
            InvolutionKind::EtaFirst => "eta1",
            InvolutionKind::Xi => "xi",
            InvolutionKind::Kappa => return "sphere2".into(),
        };
        match self.topology {
            Topology::Circle => format!("circle-{kind}"),
            Topology::Torus2 => format!("torus2-{kind}"),
            Topology::Sphere2 => "sphere2".into(),
        }
    }

    /// Number of coordinates per site.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn coords(&self, site: usize) -> &[f64] {
        &self.sites[site][..self.dim]
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn plaquettes(&self) -> &[Plaquette] {
        &self.plaquettes
    }

    pub fn involution(&self) -> &[usize] {
        &self.involution
    }

    pub fn tau(&self, site: usize) -> usize {
        self.involution[site]
    }

    pub fn fixed_sites(&self) -> &[usize] {
        &self.fixed_sites
    }

    pub fn orientation_flip(&self) -> bool {
        self.orientation_flip
    }

    /// Coordinate spacing of each link direction.
    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Largest link length, the `h` used in discretization-order tolerances.
    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(0.0, f64::max)
    }

    pub fn step_between(&self, a: usize, b: usize) -> Option<Step> {
        self.link_lookup.get(&(a, b)).copied()
    }

    /// Image of a link under the involution, with its traversal orientation.
    pub fn map_link(&self, link: usize) -> Step {
        self.link_image[link]
    }

    pub fn map_step(&self, step: Step) -> Step {
        let img = self.link_image[step.link];
        if step.forward {
            img
        } else {
            img.reversed()
        }
    }

    /// Image plaquette index and whether the involution reverses its orientation.
    pub fn map_plaquette(&self, plaquette: usize) -> (usize, bool) {
        self.plaquette_image[plaquette]
    }

    /// Maximal lattice cycles contained in the fixed-point set.
    ///
    /// For the trivial involution on the torus the fixed set is the whole surface and
    /// the two generating circles through site 0 are returned.
    pub fn fixed_loops(&self) -> &[LoopPath] {
        &self.fixed_loops
    }

    /// Image loop τ(γ), traversed in the order induced by the involution.
    pub fn map_loop(&self, path: &LoopPath) -> Result<LoopPath> {
        path.validate(self)?;
        Ok(LoopPath {
            base: self.involution[path.base],
            steps: path.steps.iter().map(|&s| self.map_step(s)).collect(),
        })
    }

    /// Closed lattice line along `direction` through `site` (torus and circle only).
    pub fn straight_loop(&self, site: usize, direction: usize) -> Result<LoopPath> {
        if self.topology == Topology::Sphere2 {
            return Err(Error::Domain("straight loops are defined on flat bases only".into()));
        }
        let mut sites = vec![site];
        loop {
            let here = *sites.last().unwrap();
            let next = self
                .links
                .iter()
                .find(|l| l.from == here && l.direction == direction)
                .map(|l| l.to)
                .ok_or_else(|| Error::Domain(format!("no link in direction {direction}")))?;
            if next == site {
                break;
            }
            sites.push(next);
        }
        LoopPath::from_sites(self, &sites)
    }

    /// Latitude ring `j` (1-based) of a sphere lattice, oriented by increasing azimuth.
    pub fn latitude_loop(&self, j: usize) -> Result<LoopPath> {
        let (n_theta, n_phi) = match (self.topology, self.sizes.as_slice()) {
            (Topology::Sphere2, &[a, b]) => (a, b),
            _ => return Err(Error::Domain("latitude loops exist on the sphere only".into())),
        };
        if j == 0 || j > n_theta {
            return Err(Error::Domain(format!("ring {j} out of range")));
        }
        let sites: Vec<usize> = (0..n_phi).map(|k| 1 + (j - 1) * n_phi + k).collect();
        LoopPath::from_sites(self, &sites)
    }

    /// Boundary loop of a plaquette, based at its first vertex.
    pub fn plaquette_loop(&self, plaquette: usize) -> LoopPath {
        let p = &self.plaquettes[plaquette];
        LoopPath {
            base: p.sites[0],
            steps: p.steps.clone(),
        }
    }

    /// Sum of oriented plaquette boundaries per link; zero everywhere on a closed surface.
    pub fn boundary_multiplicity(&self) -> Vec<i32> {
        let mut count = vec![0i32; self.links.len()];
        for p in &self.plaquettes {
            for s in &p.steps {
                count[s.link] += if s.forward { 1 } else { -1 };
            }
        }
        count
    }
}
