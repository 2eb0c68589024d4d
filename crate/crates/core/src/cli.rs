//! Experiment configuration and the command implementations behind the
//! `fourier-lab` binary.
//!
//! A run is described by a JSON config file, with command-line flags taking
//! precedence. Each command computes everything first and only then writes
//! its files. Exit codes: 0 success, 1 a required check failed, 2 the run
//! could not be carried out (bad config, out-of-range input, numerical
//! failure).

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::hermite::{Basis, BasisSpec};
use crate::io::{fmt_num, read_json, report_table, write_json, Table};
use crate::operator::{
    conjugated_position, fourier_operator, k_operator, kernel_matrix, position_operator, OperatorMatrix,
    RegroupingPlan,
};
use crate::state::{existential_weight, pauli_pair};
use crate::symmetry::{
    commutator_residual, pauli_report, random_interior_states, translation_check, unbiasedness_scan,
    uncertainty_scan, verify_symmetry_with, Check, ExplorationReport, PauliReport, PropertyReport, ReportMetadata,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

/// Tolerance applied to symmetry rows without an explicit override.
pub const DEFAULT_SYMMETRY_TOL: f64 = 1e-12;
pub const DEFAULT_WINDOW: f64 = 3.0;
/// Displacement used by the translation scan.
pub const TRANSLATION_STEP: f64 = 0.1;
/// Random states per uncertainty scan.
pub const UNCERTAINTY_STATES: usize = 100;

/// Named defaults for the non-symmetry tolerances.
pub fn default_tolerance(name: &str) -> Option<f64> {
    Some(match name {
        "commutator" => 1e-10,
        "translation" => 1e-6,
        "robertson" => 1e-9,
        "kernel" => 1e-4,
        "weight" => 1e-10,
        _ => return None,
    })
}

/// Which operator a run studies.
#[derive(Clone, Debug, PartialEq)]
pub enum PlanChoice {
    Fourier,
    /// The identity transform; a reference point for kernels and scans.
    Identity,
    /// Random regrouping drawn from the run seed.
    Random,
    Explicit(RegroupingPlan),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub basis: BasisSpec,
    pub plan: PlanChoice,
    pub seed: Option<u64>,
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: PathBuf,
    pub window: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            basis: BasisSpec::default(),
            plan: PlanChoice::Fourier,
            seed: None,
            tolerances: BTreeMap::new(),
            output_dir: PathBuf::from("out"),
            window: DEFAULT_WINDOW,
        }
    }
}

/// On-disk config. `plan` is `"fourier"`, `"identity"`, `"random"`, a path to
/// a plan JSON file, or an inline plan object.
#[derive(Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub basis: Option<BasisSpec>,
    pub plan: Option<PlanValue>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    pub output_dir: Option<PathBuf>,
    pub window: Option<f64>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum PlanValue {
    Name(String),
    Inline(RegroupingPlan),
}

/// Command-line values that override the config file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub config: Option<PathBuf>,
    pub dim: Option<usize>,
    pub quad_order: Option<usize>,
    pub seed: Option<u64>,
    pub plan: Option<String>,
    pub window: Option<f64>,
    pub out: Option<PathBuf>,
    /// `name=value` pairs.
    pub tol: Vec<String>,
}

fn parse_plan_name(value: &str, base: &Path) -> Result<PlanChoice> {
    Ok(match value {
        "fourier" => PlanChoice::Fourier,
        "identity" => PlanChoice::Identity,
        "random" => PlanChoice::Random,
        path => {
            let p = base.join(path);
            PlanChoice::Explicit(read_json(&p).map_err(|e| LabError::Config(format!("plan {}: {e}", p.display())))?)
        }
    })
}

impl RunConfig {
    pub fn resolve(o: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &o.config {
            let file: ConfigFile =
                read_json(path).map_err(|e| LabError::Config(format!("config {}: {e}", path.display())))?;
            let base = path.parent().unwrap_or(Path::new("."));
            if let Some(b) = file.basis {
                cfg.basis = b;
            }
            if let Some(p) = file.plan {
                cfg.plan = match p {
                    PlanValue::Name(n) => parse_plan_name(&n, base)?,
                    PlanValue::Inline(plan) => PlanChoice::Explicit(plan),
                };
            }
            cfg.seed = file.seed;
            cfg.tolerances = file.tolerances;
            if let Some(d) = file.output_dir {
                cfg.output_dir = d;
            }
            if let Some(w) = file.window {
                cfg.window = w;
            }
        }
        if o.dim.is_some() || o.quad_order.is_some() {
            let dim = o.dim.unwrap_or(cfg.basis.dim());
            let quad = o.quad_order.unwrap_or(if o.dim.is_some() { 2 * dim } else { cfg.basis.quad_order() });
            cfg.basis = BasisSpec::new(dim, quad).map_err(|e| LabError::Config(e.to_string()))?;
        }
        if let Some(s) = o.seed {
            cfg.seed = Some(s);
        }
        if let Some(p) = &o.plan {
            cfg.plan = parse_plan_name(p, Path::new("."))?;
        }
        if let Some(w) = o.window {
            cfg.window = w;
        }
        if let Some(out) = &o.out {
            cfg.output_dir = out.clone();
        }
        for kv in &o.tol {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("--tol expects name=value, got {kv:?}")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| LabError::Config(format!("tolerance {k}: not a number: {v:?}")))?;
            cfg.tolerances.insert(k.trim().to_string(), v);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in &self.tolerances {
            if !(*v > 0.0) {
                return Err(LabError::Config(format!("tolerance {k} must be positive, got {v}")));
            }
        }
        if self.plan == PlanChoice::Random && self.seed.is_none() {
            return Err(LabError::Config("random plan requires --seed".into()));
        }
        if let PlanChoice::Explicit(p) = &self.plan {
            if p.dim() != self.basis.dim() {
                return Err(LabError::Config(format!(
                    "plan dimension {} differs from basis dimension {}",
                    p.dim(),
                    self.basis.dim()
                )));
            }
        }
        if !(self.window > 0.0) {
            return Err(LabError::Config(format!("window must be positive, got {}", self.window)));
        }
        Ok(())
    }

    /// Tolerance for `name`: explicit override, then `default` key, then `fallback`.
    pub fn tolerance(&self, name: &str, fallback: f64) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .unwrap_or_else(|| default_tolerance(name).unwrap_or(fallback))
    }

    pub fn plan(&self) -> Result<Option<RegroupingPlan>> {
        let n = self.basis.dim();
        Ok(match &self.plan {
            PlanChoice::Fourier => Some(RegroupingPlan::fourier(n)),
            PlanChoice::Identity => None,
            PlanChoice::Random => {
                let seed = self.seed.ok_or_else(|| LabError::Config("random plan requires --seed".into()))?;
                Some(RegroupingPlan::random(n, seed)?)
            }
            PlanChoice::Explicit(p) => Some(p.clone()),
        })
    }

    /// The operator under study with a short label.
    pub fn operator(&self) -> Result<(String, OperatorMatrix<f64>, Option<RegroupingPlan>)> {
        let n = self.basis.dim();
        let plan = self.plan()?;
        let (label, op) = match (&self.plan, &plan) {
            (PlanChoice::Identity, _) => ("identity".to_string(), OperatorMatrix::identity(n)),
            (_, Some(p)) if p.is_fourier() => ("fourier".to_string(), fourier_operator(n)),
            (_, Some(p)) => {
                let label = match p.seed() {
                    Some(s) => format!("k(seed={s})"),
                    None => "k(explicit)".to_string(),
                };
                (label, k_operator(p))
            }
            (_, None) => unreachable!("only the identity choice has no plan"),
        };
        Ok((label, op, plan))
    }

    fn metadata(&self, label: &str, plan: &Option<RegroupingPlan>) -> ReportMetadata {
        let mut m = ReportMetadata::for_dim(self.basis.dim());
        m.basis = Some(self.basis);
        m.operator = label.to_string();
        m.plan = plan.clone();
        m.seed = self.seed;
        m.reliability_bound = Some(self.basis.reliability_bound());
        if let Some(p) = plan {
            for k in p.empty_sets() {
                m.flags.push(format!("degenerate plan: h{k} empty"));
            }
        }
        m.timestamp = chrono::Utc::now().to_rfc3339();
        m
    }

    fn out(&self, name: &str) -> PathBuf {
        self.output_dir.join(name)
    }

    fn check_window(&self) -> Result<()> {
        let bound = self.basis.reliability_bound();
        if self.window > bound {
            return Err(LabError::Range(format!(
                "window {} exceeds reliability bound {bound:.6} for N = {}",
                self.window,
                self.basis.dim()
            )));
        }
        Ok(())
    }
}

/// What a command did.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub status: u8,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Exit code for an error that stopped a command.
pub fn error_status(_: &LabError) -> u8 {
    EXIT_USAGE
}

fn check_lines(checks: &[Check]) -> Vec<String> {
    checks
        .iter()
        .map(|c| {
            format!(
                "{} {:<28} residual {:>12.3e}  tol {:.1e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tolerance
            )
        })
        .collect()
}

/// Symmetry checks for the configured operator.
pub fn build_verify_report(cfg: &RunConfig) -> Result<PropertyReport> {
    let (label, op, plan) = cfg.operator()?;
    let mut report = verify_symmetry_with(&op, &cfg.tolerances, cfg.tolerance("default", DEFAULT_SYMMETRY_TOL));
    let flags = std::mem::take(&mut report.metadata.flags);
    report.metadata = cfg.metadata(&label, &plan);
    report.metadata.flags.extend(flags);
    Ok(report)
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Outcome> {
    let report = build_verify_report(cfg)?;
    let json = cfg.out("verify_report.json");
    let csv = cfg.out("verify_report.csv");
    write_json(&json, &report)?;
    report_table(&report).write(&csv)?;
    let mut summary = vec![format!(
        "operator {} (N = {}{})",
        report.metadata.operator,
        cfg.basis.dim(),
        report.metadata.seed.map(|s| format!(", seed {s}")).unwrap_or_default()
    )];
    summary.extend(check_lines(&report.checks));
    Ok(Outcome {
        status: if report.all_pass() { EXIT_OK } else { EXIT_CHECK_FAILED },
        files: vec![json, csv],
        summary,
    })
}

/// Runs every exploratory scan for the configured operator.
pub fn build_exploration_report(cfg: &RunConfig) -> Result<ExplorationReport> {
    cfg.check_window()?;
    let (label, op, plan) = cfg.operator()?;
    let n = cfg.basis.dim();
    let basis = Basis::<f64>::new(cfg.basis)?;

    let pk = conjugated_position(&op)?;
    let comm = commutator_residual(&position_operator(n), &pk, n - 2)?;

    let states = random_interior_states::<f64>(n, UNCERTAINTY_STATES, cfg.seed.unwrap_or(0))?;
    let uncertainty = uncertainty_scan(&op, &states)?;

    let kernel = unbiasedness_scan(&op, &basis, cfg.window)?;
    let baseline = unbiasedness_scan(&fourier_operator(n), &basis, cfg.window)?;
    let ratio = kernel.max / baseline.max;

    let guard = (4.0 * n as f64 * TRANSLATION_STEP).ceil() as usize;
    let interior = (n / 2).min(n.saturating_sub(guard)).max(1);
    let translation = translation_check(TRANSLATION_STEP, n, interior)?;

    let mut checks = Vec::new();
    if label == "fourier" {
        let floor = uncertainty.iter().map(|r| r.deviation_product).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("commutator_interior", comm.interior, cfg.tolerance("commutator", 1e-10)));
        checks.push(Check::new(
            "translation_interior",
            translation.residual_interior,
            cfg.tolerance("translation", 1e-6),
        ));
        checks.push(Check::new(
            "robertson_floor",
            (0.5 - floor).max(0.0),
            cfg.tolerance("robertson", 1e-9),
        ));
        checks.push(Check::new("kernel_flatness", kernel.max, cfg.tolerance("kernel", 1e-4)));
    }

    let mut metadata = cfg.metadata(&label, &plan);
    metadata.seed = cfg.seed.or(Some(0));
    Ok(ExplorationReport {
        metadata,
        commutator_interior_dim: comm.interior_dim,
        commutator_interior_residual: comm.interior,
        commutator_full_residual: comm.full,
        uncertainty_samples: uncertainty,
        kernel_deviation: kernel,
        kernel_baseline: baseline,
        kernel_ratio: ratio,
        window: cfg.window,
        translation,
        checks,
    })
}

pub fn cmd_explore(cfg: &RunConfig) -> Result<Outcome> {
    let r = build_exploration_report(cfg)?;

    let mut comm = Table::new(&["interior_dim", "interior_residual", "full_residual"]);
    comm.push(vec![
        r.commutator_interior_dim.to_string(),
        fmt_num(r.commutator_interior_residual),
        fmt_num(r.commutator_full_residual),
    ]);
    let mut unc = Table::new(&[
        "state",
        "var_x",
        "var_p",
        "delta_x",
        "delta_p",
        "variance_product",
        "deviation_product",
    ]);
    for u in &r.uncertainty_samples {
        unc.push(vec![
            u.state.to_string(),
            fmt_num(u.var_x),
            fmt_num(u.var_p),
            fmt_num(u.delta_x),
            fmt_num(u.delta_p),
            fmt_num(u.variance_product),
            fmt_num(u.deviation_product),
        ]);
    }
    let mut ker = Table::new(&["operator", "window", "mean_dev", "max_dev", "pairs"]);
    for (name, k) in [(r.metadata.operator.as_str(), &r.kernel_deviation), ("fourier_baseline", &r.kernel_baseline)] {
        ker.push(vec![name.to_string(), fmt_num(k.window), fmt_num(k.mean), fmt_num(k.max), k.pairs.to_string()]);
    }
    let mut tr = Table::new(&["a", "interior", "guard_band", "residual_interior", "residual_full"]);
    let t = &r.translation;
    tr.push(vec![
        fmt_num(t.a),
        t.interior.to_string(),
        t.guard_band.to_string(),
        fmt_num(t.residual_interior),
        fmt_num(t.residual_full),
    ]);

    let files: Vec<PathBuf> = ["explore_report.json", "commutator.csv", "uncertainty.csv", "kernel_deviation.csv", "translation.csv"]
        .iter()
        .map(|f| cfg.out(f))
        .collect();
    write_json(&files[0], &r)?;
    comm.write(&files[1])?;
    unc.write(&files[2])?;
    ker.write(&files[3])?;
    tr.write(&files[4])?;

    let floor = r.uncertainty_samples.iter().map(|u| u.deviation_product).fold(f64::INFINITY, f64::min);
    let mut summary = vec![
        format!("operator {} (N = {}, window {})", r.metadata.operator, cfg.basis.dim(), r.window),
        format!(
            "commutator residual: interior({}) {:.3e}, full {:.3e}",
            r.commutator_interior_dim, r.commutator_interior_residual, r.commutator_full_residual
        ),
        format!("smallest dX*dP over {} states: {:.12}", r.uncertainty_samples.len(), floor),
        format!(
            "kernel deviation: mean {:.3e}, max {:.3e} (fourier baseline max {:.3e}, ratio {:.3})",
            r.kernel_deviation.mean, r.kernel_deviation.max, r.kernel_baseline.max, r.kernel_ratio
        ),
        format!(
            "translation a={}: interior({}) {:.3e}, full {:.3e}",
            t.a, t.interior, t.residual_interior, t.residual_full
        ),
    ];
    summary.extend(check_lines(&r.checks));
    Ok(Outcome {
        status: EXIT_OK,
        files,
        summary,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PauliRun {
    pub metadata: ReportMetadata,
    pub phi: f64,
    pub report: PauliReport,
    pub checks: Vec<Check>,
}

pub fn build_pauli_run(phi: f64, cfg: &RunConfig) -> Result<(PauliRun, Table)> {
    if !(phi > 0.0 && phi < PI) {
        return Err(LabError::Config(format!("phi must lie in (0, pi), got {phi}")));
    }
    let n = cfg.basis.dim();
    let (label, op, plan) = cfg.operator()?;
    let basis = Basis::<f64>::new(cfg.basis)?;
    let (f, g) = pauli_pair(phi, n)?;
    let id = OperatorMatrix::identity(n);
    let four = fourier_operator(n);
    let mut transforms: Vec<(&str, &OperatorMatrix<f64>)> = vec![("identity", &id), ("fourier", &four)];
    if label != "fourier" && label != "identity" {
        transforms.push((label.as_str(), &op));
    }
    let report = pauli_report((&f, &g), &transforms, &basis)?;

    let tol = cfg.tolerance("weight", 1e-10);
    let checks = report
        .rows
        .iter()
        .filter(|r| r.transform == "identity" || r.transform == "fourier")
        .map(|r| Check::new(format!("{}_weight_match", r.transform), r.weight_distance, tol))
        .collect();

    let mut weights = Table::new(&["transform", "x", "rho_f", "rho_fbar"]);
    for (name, t) in &transforms {
        let wf = existential_weight(&t.apply(&f), &basis)?;
        let wg = existential_weight(&t.apply(&g), &basis)?;
        for ((x, a), b) in basis.grid.nodes().iter().zip(&wf).zip(&wg) {
            weights.push(vec![name.to_string(), fmt_num(*x), fmt_num(*a), fmt_num(*b)]);
        }
    }
    Ok((
        PauliRun {
            metadata: cfg.metadata(&label, &plan),
            phi,
            report,
            checks,
        },
        weights,
    ))
}

pub fn cmd_pauli(phi: f64, cfg: &RunConfig) -> Result<Outcome> {
    let (run, weights) = build_pauli_run(phi, cfg)?;
    let mut rows = Table::new(&["transform", "weight_distance"]);
    for r in &run.report.rows {
        rows.push(vec![r.transform.clone(), fmt_num(r.weight_distance)]);
    }
    rows.push(vec!["state_distance".into(), fmt_num(run.report.state_distance)]);
    let files = vec![cfg.out("pauli_report.json"), cfg.out("pauli_report.csv"), cfg.out("pauli_weights.csv")];
    write_json(&files[0], &run)?;
    rows.write(&files[1])?;
    weights.write(&files[2])?;
    let mut summary = vec![format!("phi = {phi}, phase-minimized state distance {:.12}", run.report.state_distance)];
    summary.extend(run.report.rows.iter().map(|r| format!("{:<16} weight distance {:.3e}", r.transform, r.weight_distance)));
    summary.extend(check_lines(&run.checks));
    Ok(Outcome {
        status: if run.checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_CHECK_FAILED },
        files,
        summary,
    })
}

/// `x,p,abs,arg` over the window for the configured operator.
pub fn kernel_table(cfg: &RunConfig) -> Result<Table> {
    cfg.check_window()?;
    let (_, op, _) = cfg.operator()?;
    let basis = Basis::<f64>::new(cfg.basis)?;
    let kappa = kernel_matrix(&op, &basis)?;
    let idx = basis.grid.window(cfg.window);
    let x = basis.grid.nodes();
    let mut t = Table::new(&["x", "p", "abs", "arg"]);
    for &i in &idx {
        for &j in &idx {
            let z = kappa[[i, j]];
            t.push(vec![fmt_num(x[i]), fmt_num(x[j]), fmt_num(z.norm()), fmt_num(z.arg())]);
        }
    }
    Ok(t)
}

pub fn cmd_kernel(cfg: &RunConfig) -> Result<Outcome> {
    let t = kernel_table(cfg)?;
    let path = cfg.out("kernel.csv");
    t.write(&path)?;
    Ok(Outcome {
        status: EXIT_OK,
        summary: vec![format!("{} kernel samples over |x|, |p| <= {}", t.len(), cfg.window)],
        files: vec![path],
    })
}

/// `plan generate`: writes `plan.json` for a seeded random regrouping.
pub fn cmd_plan_generate(dim: usize, seed: u64, out: &Path) -> Result<(Outcome, RegroupingPlan)> {
    let plan = RegroupingPlan::random(dim, seed).map_err(|e| LabError::Config(e.to_string()))?;
    let path = out.join("plan.json");
    write_json(&path, &plan)?;
    let mut summary = vec![format!("plan for N = {dim}, seed {seed}")];
    summary.extend((0..4).map(|k| format!("h{k}: {} indices", plan.set(k).len())));
    if plan.is_fourier() {
        summary.push("note: draw reproduces the Fourier grouping".into());
    }
    Ok((
        Outcome {
            status: EXIT_OK,
            files: vec![path],
            summary,
        },
        plan,
    ))
}

/// `plan validate`: parses and checks a plan file.
pub fn cmd_plan_validate(path: &Path) -> Result<Outcome> {
    let plan: RegroupingPlan = read_json(path).map_err(|e| LabError::Config(e.to_string()))?;
    let mut summary = vec![format!("{}: valid plan for N = {}", path.display(), plan.dim())];
    if plan.is_fourier() {
        summary.push("plan is the Fourier grouping".into());
    }
    for k in plan.empty_sets() {
        summary.push(format!("degenerate: h{k} empty"));
    }
    Ok(Outcome {
        status: EXIT_OK,
        files: Vec::new(),
        summary,
    })
}
