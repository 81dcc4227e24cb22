//! `realbloch run <config.json>`: config parsing, task orchestration and report output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::bundle::DiscreteBundle;
use crate::classify;
use crate::curvature;
use crate::error::{Error, ErrorKind, Result};
use crate::holonomy;
use crate::lattice::{InvolutionKind, InvolutiveLattice, Topology};
use crate::models::{self, Model, OscillatorParams};
use crate::berry;

pub const REPORT_SCHEMA: &str = "report_v1";

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GAP: i32 = 3;
pub const EXIT_SYMMETRY: i32 = 4;
pub const EXIT_REFINEMENT: i32 = 5;
pub const EXIT_UNSUPPORTED: i32 = 6;
pub const EXIT_STRICT_WARNINGS: i32 = 7;

pub fn exit_code(e: &Error) -> i32 {
    match e.kind() {
        ErrorKind::Config => EXIT_CONFIG,
        ErrorKind::GapClosure => EXIT_GAP,
        ErrorKind::Symmetry => EXIT_SYMMETRY,
        ErrorKind::Refinement => EXIT_REFINEMENT,
        ErrorKind::Unsupported => EXIT_UNSUPPORTED,
        ErrorKind::Model | ErrorKind::Io => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "realbloch", version, about = "Invariants of time-reversal symmetric band families")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the tasks listed in a JSON config.
    Run(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    pub config: PathBuf,
    /// Output directory (overrides `output_dir` in the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for per-site work.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Exit with a nonzero status when warnings were emitted.
    #[arg(long)]
    pub strict: bool,
    /// Multiply every lattice size by this factor (rounded to an even count).
    #[arg(long, default_value_t = 1.0)]
    pub resolution_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    CheckSymmetry,
    Berry,
    Chern,
    Holonomy,
    Classify,
    Moduli,
    OscillatorOracle,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub topology: Topology,
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub involution: Option<InvolutionKind>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub name: String,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub quantization: f64,
    pub equivariance_factor: f64,
    pub reality: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            quantization: curvature::QUANTIZATION_TOLERANCE,
            equivariance_factor: classify::EQUIVARIANCE_FACTOR,
            reality: classify::REALITY_TOLERANCE,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeSpec,
    pub model: ModelSpec,
    #[serde(default = "default_bands")]
    pub bands: Vec<usize>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Repeat the run at doubled resolution and report both.
    #[serde(default)]
    pub refine: bool,
}

fn default_bands() -> Vec<usize> {
    vec![0]
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            return Err(Error::Config("the task list is empty".into()));
        }
        if self.bands.is_empty() {
            return Err(Error::Config("select at least one band".into()));
        }
        Ok(())
    }

    pub fn involution(&self) -> InvolutionKind {
        self.lattice.involution.unwrap_or(match self.lattice.topology {
            Topology::Sphere2 => InvolutionKind::Kappa,
            _ => InvolutionKind::Trivial,
        })
    }

    pub fn build_lattice(&self, scale: f64) -> Result<InvolutiveLattice> {
        let sizes = scaled_sizes(&self.lattice.sizes, scale)?;
        InvolutiveLattice::build(self.lattice.topology, &sizes, self.involution())
    }
}

/// Sizes multiplied by `scale`, rounded to the nearest even count.
pub fn scaled_sizes(sizes: &[usize], scale: f64) -> Result<Vec<usize>> {
    if !scale.is_finite() || scale <= 0.0 {
        return Err(Error::Config(format!("resolution scale must be positive, got {scale}")));
    }
    if scale == 1.0 {
        return Ok(sizes.to_vec());
    }
    Ok(sizes
        .iter()
        .map(|&n| (((n as f64 * scale) / 2.0).round() as usize * 2).max(4))
        .collect())
}

/// Report plus collected warnings for one run.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub report: Value,
    pub warnings: Vec<String>,
    pub curvature_csv: Option<String>,
    pub connection_csv: Option<String>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    lat: InvolutiveLattice,
    model: Model,
    warnings: Vec<String>,
    curvature_csv: Option<String>,
    connection_csv: Option<String>,
}

impl Context<'_> {
    fn h(&self) -> f64 {
        self.lat.max_spacing()
    }

    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn lattice_json(lat: &InvolutiveLattice) -> Value {
    json!({
        "base": lat.base_tag(),
        "sizes": lat.sizes(),
        "sites": lat.num_sites(),
        "links": lat.links().len(),
        "plaquettes": lat.plaquettes().len(),
        "fixed_sites": lat.fixed_sites().len(),
        "fixed_loops": lat.fixed_loops().len(),
        "orientation_flip": lat.orientation_flip(),
        "spacing": lat.max_spacing(),
    })
}

fn task_check_symmetry(ctx: &mut Context, bundle: &DiscreteBundle) -> Value {
    let d = &bundle.diagnostics;
    let obstruction = bundle.gb_obstruction(&ctx.lat);
    json!({
        "verify_hamiltonian_symmetry": d.symmetry,
        "verify_projection_symmetry": d.projection_symmetry_residual,
        "sewing_matrix": {
            "unitarity_residual": d.sewing_unitarity_residual,
            "square_residual": d.sewing_square_residual,
        },
        "gb_equivariance_obstruction": obstruction,
        "gap_margin": d.gap_margin,
        "symmetry_constant": bundle.symmetry.is_constant(),
    })
}

fn task_berry(ctx: &mut Context, bundle: &DiscreteBundle) -> Result<Value> {
    // The spectral frame gauge can flip sign across a link; smooth it first.
    let reference = berry::generic_reference(bundle.frame.dim(), bundle.rank());
    let g = berry::reference_gauge(&bundle.frame, &reference)?;
    let smooth = berry::gauge_transform(&bundle.links, &g, &ctx.lat)?;
    let form = berry::local_connection_from_links(&smooth, &ctx.lat)?;
    let residual = bundle.equivariance_residual(&ctx.lat);
    if residual > ctx.cfg.tolerances.equivariance_factor * ctx.h() {
        ctx.warn(format!("equivariance residual {residual:.3e} exceeds tolerance"));
    }
    let mut csv = Vec::new();
    form.write_csv(&ctx.lat, &mut csv)?;
    ctx.connection_csv = Some(String::from_utf8_lossy(&csv).into_owned());
    let max_norm = form.forms.iter().map(crate::linalg::frobenius).fold(0.0, f64::max);
    let mut out = json!({
        "link_field": {
            "links": bundle.links.links.len(),
            "rank": bundle.rank(),
            "unitarity_residual": bundle.links.unitarity_residual(),
        },
        "local_connection_from_links": {
            "gauge": "reference-overlap",
            "max_norm": max_norm,
            "anti_hermitian_residual": form.anti_hermitian_residual(),
        },
        "equivariance_residual": residual,
    });
    if bundle.product.is_some() {
        let avg = berry::average_connection(&form, &bundle.symmetry, &ctx.lat)?;
        out["average_connection"] = json!({
            "real_condition_residual": berry::real_condition_residual(&avg, &bundle.symmetry, &ctx.lat)?,
            "input_real_condition_residual": berry::real_condition_residual(&form, &bundle.symmetry, &ctx.lat)?,
        });
    }
    Ok(out)
}

fn task_chern(ctx: &mut Context, bundle: &DiscreteBundle) -> Result<Value> {
    if ctx.lat.dim() != 2 {
        return Err(Error::Config("the chern task needs a two-dimensional base".into()));
    }
    let curv = curvature::plaquette_curvature(&bundle.links, &ctx.lat)?;
    let c1 = curvature::chern_number(&curv, &ctx.lat)?;
    if c1.residual > ctx.cfg.tolerances.quantization {
        ctx.warn(format!("Chern number {} is not quantized", c1.value));
    }
    let parity = curvature::curvature_parity_check(&curv, &ctx.lat);
    let mut csv = Vec::new();
    curv.write_csv(&ctx.lat, &mut csv)?;
    ctx.curvature_csv = Some(String::from_utf8_lossy(&csv).into_owned());
    let mut out = json!({
        "chern_number": c1,
        "curvature_parity_check": parity,
    });
    if bundle.product.is_none() {
        let direct = curvature::gb_curvature_direct(&bundle.projection, &ctx.lat)?;
        let value: f64 = curvature::chern_weil_density(&direct, 1)?.iter().sum();
        out["gb_curvature_direct"] = json!({ "chern_value": value });
    }
    if ctx.lat.topology() == Topology::Sphere2 {
        if let Some(k) = ctx.cfg.model.params.get("k").and_then(Value::as_i64) {
            if ctx.cfg.model.name == "degree_k_sphere" {
                let oracle = models::degree_oracle(k as i32, &ctx.lat)?;
                if oracle != c1.integer {
                    ctx.warn(format!("Chern number {} disagrees with degree oracle {oracle}", c1.integer));
                }
                out["degree_oracle"] = json!(oracle);
            }
        }
    }
    Ok(out)
}

fn loop_report(
    ctx: &Context,
    bundle: &DiscreteBundle,
    idx: usize,
    path: &crate::lattice::LoopPath,
    fixed: Option<&holonomy::FixedLoopHolonomy>,
) -> Result<Value> {
    let h = holonomy::wilson_loop(&bundle.links, path, &ctx.lat)?;
    let tr = h.trace();
    let report = holonomy::LoopReport {
        loop_id: idx,
        base_coords: ctx.lat.coords(path.base).to_vec(),
        trace_re: tr.re,
        trace_im: tr.im,
        reality_residual: fixed.map(|f| f.reality_residual),
        sign: fixed.map(|f| f.sign),
    };
    let mut v = serde_json::to_value(report)?;
    v["holonomy_equivariance_check"] =
        json!(holonomy::holonomy_equivariance_check(&bundle.links, &bundle.sewing, path, &ctx.lat)?);
    Ok(v)
}

fn task_holonomy(ctx: &mut Context, bundle: &DiscreteBundle) -> Result<Value> {
    let fixed = holonomy::fixed_loop_holonomies(&bundle.links, &ctx.lat, &bundle.sewing)?;
    let mut loops = Vec::new();
    for (i, path) in ctx.lat.fixed_loops().iter().enumerate() {
        loops.push(loop_report(ctx, bundle, i, path, fixed.get(i))?);
    }
    for f in &fixed {
        if f.reality_residual > ctx.cfg.tolerances.reality {
            ctx.warn(format!("fixed loop {} reality residual {:.3e}", f.loop_index, f.reality_residual));
        }
    }
    let mut out = json!({ "fixed_loop_holonomies": loops });
    // A loop through the whole base on flat bases with no fixed circle.
    if fixed.is_empty() && ctx.lat.topology() != Topology::Sphere2 {
        let path = ctx.lat.straight_loop(0, 0)?;
        out["base_loop"] = loop_report(ctx, bundle, 0, &path, None)?;
    }
    if let Some(spec) = &bundle.product {
        if ctx.lat.topology() == Topology::Circle {
            let curve = holonomy::StraightCurve {
                start: vec![0.0],
                winding: vec![2.0 * std::f64::consts::PI],
            };
            let steps = ctx.lat.num_sites().max(16);
            let cont = holonomy::continuum_holonomy(spec, &curve, steps)?;
            let tr = cont.trace();
            out["continuum_holonomy"] = json!({ "steps": steps, "trace_re": tr.re, "trace_im": tr.im });
        }
    }
    Ok(out)
}

fn task_classify(ctx: &mut Context, bundle: &DiscreteBundle) -> Result<Value> {
    let r = classify::classify_bundle(bundle, &ctx.lat)?;
    for w in &r.warnings {
        ctx.warnings.push(w.clone());
    }
    let text = classify::mixed_case_report(&r);
    let mut v = serde_json::to_value(&r)?;
    v["report_text"] = json!(text);
    Ok(v)
}

fn task_moduli(ctx: &mut Context, bundle: &DiscreteBundle) -> Result<Value> {
    if ctx.cfg.model.name != "flat_moduli" {
        return Err(Error::Config("the moduli task needs the flat_moduli model".into()));
    }
    let a = ctx.cfg.model.params.get("a").and_then(Value::as_f64).unwrap_or(0.0);
    let path = ctx.lat.straight_loop(0, 0)?;
    let lattice = holonomy::wilson_loop(&bundle.links, &path, &ctx.lat)?.hol[(0, 0)];
    let exact = holonomy::flat_moduli_holonomy(a);
    let wrapped = a.rem_euclid(1.0);
    Ok(json!({
        "a": a,
        "a_mod_1": wrapped,
        "flat_moduli_holonomy": { "re": exact.re, "im": exact.im },
        "lattice_holonomy": { "re": lattice.re, "im": lattice.im },
        "deviation": (lattice - exact).norm(),
    }))
}

fn task_oscillator(ctx: &mut Context) -> Result<Value> {
    if ctx.cfg.model.name != "oscillator" {
        return Err(Error::Config("the oscillator-oracle task needs the oscillator model".into()));
    }
    let p: OscillatorParams = serde_json::from_value(Value::Object(ctx.cfg.model.params.clone()))
        .map_err(|e| Error::Config(e.to_string()))?;
    let sizes = ctx.lat.sizes();
    let r = models::oscillator_oracle(&p, sizes[0], sizes[1])?;
    Ok(serde_json::to_value(r)?)
}

fn run_tasks(cfg: &RunConfig, scale: f64) -> Result<(Value, Context<'_>)> {
    let lat = cfg.build_lattice(scale)?;
    let model = models::build_model(&cfg.model.name, &cfg.model.params, &lat)?;
    let mut ctx = Context {
        cfg,
        lat,
        model,
        warnings: Vec::new(),
        curvature_csv: None,
        connection_csv: None,
    };
    let needs_bundle = cfg.tasks.iter().any(|t| *t != Task::OscillatorOracle);
    let bundle = if needs_bundle {
        Some(DiscreteBundle::from_model(&ctx.model, &ctx.lat, &cfg.bands)?)
    } else {
        None
    };
    let mut tasks = BTreeMap::new();
    let mut ordered = cfg.tasks.clone();
    ordered.sort();
    ordered.dedup();
    for task in ordered {
        let (key, value) = match (&task, &bundle) {
            (Task::OscillatorOracle, _) => ("oscillator-oracle", task_oscillator(&mut ctx)?),
            (Task::CheckSymmetry, Some(b)) => ("check-symmetry", task_check_symmetry(&mut ctx, b)),
            (Task::Berry, Some(b)) => ("berry", task_berry(&mut ctx, b)?),
            (Task::Chern, Some(b)) => ("chern", task_chern(&mut ctx, b)?),
            (Task::Holonomy, Some(b)) => ("holonomy", task_holonomy(&mut ctx, b)?),
            (Task::Classify, Some(b)) => ("classify", task_classify(&mut ctx, b)?),
            (Task::Moduli, Some(b)) => ("moduli", task_moduli(&mut ctx, b)?),
            (_, None) => unreachable!("bundle is built for every task but the oracle"),
        };
        tasks.insert(key.to_string(), value);
    }
    let section = json!({
        "lattice": lattice_json(&ctx.lat),
        "tasks": tasks,
    });
    Ok((section, ctx))
}

/// Runs every task in the config and assembles report.json contents.
pub fn execute(cfg: &RunConfig, scale: f64) -> Result<RunOutcome> {
    cfg.validate()?;
    let (main, ctx) = run_tasks(cfg, scale)?;
    let mut warnings = ctx.warnings;
    let curvature_csv = ctx.curvature_csv;
    let connection_csv = ctx.connection_csv;
    let mut report = json!({
        "schema": REPORT_SCHEMA,
        "config": cfg,
        "resolution_scale": scale,
        "model": cfg.model.name,
        "lattice": main["lattice"],
        "tasks": main["tasks"],
    });
    if cfg.refine {
        let (fine, fine_ctx) = run_tasks(cfg, 2.0 * scale)?;
        warnings.extend(fine_ctx.warnings.into_iter().map(|w| format!("refined: {w}")));
        report["refined"] = fine;
    }
    report["warnings"] = json!(warnings);
    Ok(RunOutcome {
        report,
        warnings,
        curvature_csv,
        connection_csv,
    })
}

/// Writes report.json and the CSV dumps into `dir`.
pub fn write_outputs(outcome: &RunOutcome, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&outcome.report)?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    if let Some(csv) = &outcome.curvature_csv {
        fs::write(dir.join("curvature.csv"), csv)?;
    }
    if let Some(csv) = &outcome.connection_csv {
        fs::write(dir.join("connection.csv"), csv)?;
    }
    Ok(())
}

fn run_command(args: &RunArgs) -> Result<RunOutcome> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let outcome = execute(&cfg, args.resolution_scale)?;
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    write_outputs(&outcome, &dir)?;
    Ok(outcome)
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args(cli: Cli) -> i32 {
    match cli.command {
        Command::Run(args) => match run_command(&args) {
            Ok(outcome) => {
                for w in &outcome.warnings {
                    eprintln!("warning: {w}");
                }
                if args.strict && !outcome.warnings.is_empty() {
                    EXIT_STRICT_WARNINGS
                } else {
                    EXIT_OK
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                eprintln!("hint: {}", e.hint());
                exit_code(&e)
            }
        },
    }
}
