//! Report-producing commands behind the `momentlab` binary.
//!
//! Every command takes a [`RunConfig`] and returns a [`Report`]: a versioned JSON document
//! (or a CSV table) plus a list of [`Assertion`] rows. The seed fixes every number in the
//! report, and the report carries no timings, so identical configs render byte-identically.

pub mod criteria;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bounds::{
    bound_sheet, bound_sheet_csv, comparison_gap, complexity_growth_bound, design_depth, exponent_decomposition_new,
    exponent_decomposition_old, final_delta_arithmetic, gap_bounds, layer_count_check, lambert_chain,
    reduction_inequality_check, reduction_length, Architecture, EtaMode,
};
use crate::coupling::{contraction_estimate, epsilon_sweep, eta_consistency, steps_below, twirl_coefficients, wasserstein_decay};
use crate::error::{Error, Result};
use crate::tensor::krylov::{EigOptions, SolverChoice, AUTO_DENSE_LIMIT};
use crate::walk::checks::{convolution_gap_check, design_check, DesignMode};
use crate::walk::{spectral_gap, WalkContext, WalkKind, WalkSpec};

pub use criteria::{run_criteria, run_criterion, CriteriaContext, CriterionInfo, CriterionOutcome, CRITERIA};

pub const SCHEMA_VERSION: u32 = 1;
pub const MIN_DENSE_CAP: usize = 1 << 8;
pub const MAX_DENSE_CAP: usize = 1 << 20;
/// Step sizes of the mandatory ε-sweep in coupling reports.
pub const SWEEP_EPSILONS: [f64; 3] = [1e-3, 1e-4, 1e-5];
/// Half-width added to the 3σ contraction band.
pub const CONTRACTION_BAND: f64 = 0.02;
/// Largest `4^{nt}` for which the coupling report also computes `g(σ_n, t)`.
const RATE_CHECK_DIM: usize = 1 << 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Gap,
    Coupling,
    Bounds,
    VerifyAll,
}

impl CommandKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandKind::Gap => "gap",
            CommandKind::Coupling => "coupling",
            CommandKind::Bounds => "bounds",
            CommandKind::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Json,
    Csv,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Json => "json",
            OutputFormat::Csv => "csv",
        }
    }
}

/// Problem sizes used by `verify-all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Drops the `n = 3, t = 3` instances and uses fewer coupling samples.
    Quick,
    /// The acceptance sizes.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decompose {
    Old,
    New,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundsOptions {
    /// Sweep the reduction inequality over `1..=t_max`.
    pub t_max: Option<u64>,
    pub decompose: Option<Decompose>,
    /// Include design depths for both architectures.
    pub depth: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: usize,
    pub t: usize,
    pub walk: WalkKind,
    /// Number of walk steps for convolution and design checks.
    pub k: Option<usize>,
    /// Inner Clifford-brickwork steps for the sigma walk.
    pub inner_k: Option<usize>,
    pub epsilon: f64,
    pub samples: usize,
    pub seed: u64,
    pub dense_cap: usize,
    pub solver: SolverChoice,
    pub format: OutputFormat,
    /// Not serialized, so the destination does not change the report bytes.
    #[serde(skip)]
    pub output: Option<PathBuf>,
    /// Recorded only: every kernel runs on the calling thread, so each run is already in
    /// reference mode.
    pub threads: usize,
    pub profile: Profile,
    /// `verify-all` subset: criterion numbers, keys or tags.
    pub only: Vec<String>,
    /// Assertion-id substrings whose rows are forced to fail, as a negative control.
    pub inject_fault: Vec<String>,
    pub bounds: BoundsOptions,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            command,
            n: 2,
            t: 2,
            walk: WalkKind::Local,
            k: None,
            inner_k: None,
            epsilon: 1e-4,
            samples: 10_000,
            seed: 1,
            dense_cap: AUTO_DENSE_LIMIT,
            solver: SolverChoice::Auto,
            format: OutputFormat::Json,
            output: None,
            threads: 1,
            profile: Profile::Quick,
            only: Vec::new(),
            inject_fault: Vec::new(),
            bounds: BoundsOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(MIN_DENSE_CAP..=MAX_DENSE_CAP).contains(&self.dense_cap) {
            return Err(Error::InvalidParameter(format!(
                "dense cap {} outside [{MIN_DENSE_CAP}, {MAX_DENSE_CAP}]",
                self.dense_cap
            )));
        }
        if self.threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(Error::InvalidParameter(format!("epsilon must be finite and nonnegative, got {}", self.epsilon)));
        }
        match self.command {
            CommandKind::Coupling if self.samples < 2 => {
                Err(Error::InvalidParameter("coupling needs at least two samples".into()))
            }
            CommandKind::Bounds if !(self.epsilon > 0.0 && self.epsilon < 1.0) => {
                Err(Error::InvalidParameter(format!("bounds need epsilon in (0,1), got {}", self.epsilon)))
            }
            CommandKind::Bounds if self.n == 0 || self.t == 0 => {
                Err(Error::InvalidParameter("bounds need n, t >= 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn eig_options(&self) -> EigOptions {
        EigOptions::default().with_dense_cap(self.dense_cap).with_solver(self.solver).with_seed(self.seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Relation {
    /// `value <= limit + slack`
    AtMost { slack: f64 },
    /// `value >= limit - slack`
    AtLeast { slack: f64 },
    /// `|value - limit| <= tol`
    Near { tol: f64 },
    /// A boolean outcome; `value` is 1 or 0.
    Flag,
}

/// One pass/fail row. `reference` names the result being checked.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assertion {
    pub id: String,
    pub reference: String,
    pub value: f64,
    pub limit: f64,
    pub relation: Relation,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fault_injected: bool,
}

impl Assertion {
    fn build(id: &str, reference: &str, value: f64, limit: f64, relation: Relation) -> Self {
        let passed = match relation {
            Relation::AtMost { slack } => value <= limit + slack,
            Relation::AtLeast { slack } => value >= limit - slack,
            Relation::Near { tol } => (value - limit).abs() <= tol,
            Relation::Flag => value == 1.0,
        };
        Self { id: id.into(), reference: reference.into(), value, limit, relation, passed, fault_injected: false }
    }

    pub fn at_most(id: &str, reference: &str, value: f64, limit: f64, slack: f64) -> Self {
        Self::build(id, reference, value, limit, Relation::AtMost { slack })
    }

    pub fn at_least(id: &str, reference: &str, value: f64, limit: f64, slack: f64) -> Self {
        Self::build(id, reference, value, limit, Relation::AtLeast { slack })
    }

    pub fn near(id: &str, reference: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::build(id, reference, value, target, Relation::Near { tol })
    }

    pub fn flag(id: &str, reference: &str, ok: bool) -> Self {
        Self::build(id, reference, if ok { 1.0 } else { 0.0 }, 1.0, Relation::Flag)
    }
}

/// Forces every row whose id contains one of `faults` to fail.
pub fn apply_faults(rows: &mut [Assertion], faults: &[String]) {
    for row in rows {
        if faults.iter().any(|f| !f.is_empty() && row.id.contains(f.as_str())) {
            row.passed = false;
            row.fault_injected = true;
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub command: CommandKind,
    pub config: RunConfig,
    pub passed: bool,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub result: serde_json::Value,
    #[serde(skip)]
    csv: String,
}

impl Report {
    fn new(cfg: &RunConfig, mut assertions: Vec<Assertion>, warnings: Vec<String>, result: serde_json::Value, csv: String) -> Self {
        apply_faults(&mut assertions, &cfg.inject_fault);
        Self {
            schema: SCHEMA_VERSION,
            command: cfg.command,
            config: cfg.clone(),
            passed: assertions.iter().all(|a| a.passed),
            assertions,
            warnings,
            result,
            csv,
        }
    }

    pub fn failing(&self) -> impl Iterator<Item = &Assertion> {
        self.assertions.iter().filter(|a| !a.passed)
    }

    pub fn render(&self) -> Result<String> {
        match self.config.format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            OutputFormat::Csv => Ok(self.csv.clone()),
        }
    }

    pub fn exit(&self) -> Exit {
        if self.passed {
            Exit::Pass
        } else {
            Exit::AssertionFailed
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exit {
    Pass = 0,
    AssertionFailed = 1,
    Infeasible = 2,
    Internal = 3,
}

impl Exit {
    pub fn code(self) -> i32 {
        self as i32
    }

    /// Configuration problems map to [`Exit::Infeasible`]; numerical failures to
    /// [`Exit::Internal`].
    pub fn for_error(e: &Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::CapExceeded { .. } | Error::Domain(_) => Exit::Infeasible,
            _ => Exit::Internal,
        }
    }
}

/// Validates `cfg` and runs its command.
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    match cfg.command {
        CommandKind::Gap => cmd_gap(cfg),
        CommandKind::Coupling => cmd_coupling(cfg),
        CommandKind::Bounds => cmd_bounds(cfg),
        CommandKind::VerifyAll => cmd_verify_all(cfg),
    }
}

fn csv_string<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}

/// Column order of the `gap` CSV.
#[derive(Serialize)]
struct GapCsvRow<'a> {
    walk: &'a str,
    n: usize,
    t: usize,
    inner_k: Option<usize>,
    g: f64,
    delta: f64,
    fixed_space_rank: usize,
    proven_bound: f64,
    bound_name: &'a str,
    satisfied: bool,
    method: &'a str,
}

pub fn cmd_gap(cfg: &RunConfig) -> Result<Report> {
    let mut spec = WalkSpec::new(cfg.walk, cfg.n, cfg.t)?;
    if let Some(k) = cfg.inner_k {
        spec = spec.with_inner_k(k)?;
    }
    let opts = cfg.eig_options();
    let mut ctx = WalkContext::for_spec(&spec, cfg.seed)?;
    let gap = spectral_gap(&spec, &mut ctx, &opts)?;
    let mut rows = vec![
        Assertion::at_most("gap.proven-bound", &format!("{} bound on g", gap.bound_name), gap.g_value, gap.proven_bound, 1e-10),
        Assertion::flag("gap.fixed-space", "fixed space of the moment operator", gap.fixed_space_verified),
    ];
    if let Some(id) = gap.residuals.identity {
        rows.push(Assertion::at_most("gap.identity", "g = 1 - Δ(H)/n for the local walk", id, 0.0, 1e-10));
    }
    let mut warnings = Vec::new();
    let (mut conv, mut design) = (None, None);
    if let Some(k) = cfg.k.filter(|&k| k >= 1) {
        let c = convolution_gap_check(&spec, k, &mut ctx, &opts)?;
        rows.push(Assertion::at_most("gap.convolution", "‖M^k - P‖ <= g^k", c.power_norm, c.g_pow_k, 1e-9));
        let d = design_check(&spec, k, cfg.epsilon, DesignMode::RelativePsd, &mut ctx, &opts)?;
        if d.gap_condition {
            rows.push(Assertion::flag("gap.design", "g^k <= ε/D^(2t) gives an ε-approximate design", d.passes));
        }
        warnings.extend(d.warning.clone());
        conv = Some(c);
        design = Some(d);
    }
    let method = serde_json::to_value(gap.method)?;
    let csv = csv_string(&[GapCsvRow {
        walk: spec.kind.as_str(),
        n: spec.n,
        t: spec.t,
        inner_k: spec.inner_k,
        g: gap.g_value,
        delta: gap.delta_value,
        fixed_space_rank: gap.fixed_space_rank,
        proven_bound: gap.proven_bound,
        bound_name: &gap.bound_name,
        satisfied: gap.satisfied,
        method: method.as_str().unwrap_or("unknown"),
    }])?;
    let result = json!({ "gap": gap, "convolution": conv, "design": design });
    Ok(Report::new(cfg, rows, warnings, result, csv))
}

#[derive(Serialize)]
struct CouplingCsvRow {
    index: usize,
    sample_seed: u64,
    ratio: f64,
    twirl_term: f64,
}

pub fn cmd_coupling(cfg: &RunConfig) -> Result<Report> {
    let n = cfg.n;
    let trace = contraction_estimate(n, cfg.epsilon, cfg.samples, cfg.seed)?;
    let mut rows = Vec::new();
    let mut warnings: Vec<String> = trace.advisory.iter().cloned().collect();
    let mut result = serde_json::Map::new();
    if cfg.epsilon == 0.0 {
        let worst = trace.ratios.iter().copied().fold(0.0, f64::max);
        rows.push(Assertion::at_most("coupling.zero-distance", "coupled copies of X = Y stay together", worst, 0.0, 1e-24));
    } else {
        let ref_band = "mean-square contraction 1 - 3/(4^n - 1) of one coupled step";
        rows.push(Assertion::near(
            "coupling.contraction-band",
            ref_band,
            trace.mean,
            trace.target_eta_sq,
            3.0 * trace.stderr + CONTRACTION_BAND,
        ));
        rows.push(Assertion::at_most(
            "coupling.optimal-vs-identity",
            "optimal correction V never does worse than V = 1",
            trace.mean,
            trace.identity_mean,
            1e-12,
        ));
        let sweep = epsilon_sweep(n, &SWEEP_EPSILONS, cfg.samples, cfg.seed)?;
        for s in &sweep {
            rows.push(Assertion::near(
                &format!("coupling.sweep-band.eps={:e}", s.epsilon),
                ref_band,
                s.mean,
                s.target_eta_sq,
                3.0 * s.stderr + CONTRACTION_BAND,
            ));
        }
        let steps: Vec<f64> = sweep.windows(2).map(|w| (w[0].mean - w[1].mean).abs()).collect();
        // the correction is O(ε): successive differences must not grow
        rows.push(Assertion::at_most(
            "coupling.sweep-stabilizes",
            "contraction estimate converges as ε -> 0",
            steps[1],
            steps[0].max(1e-9),
            0.0,
        ));
        result.insert(
            "sweep".into(),
            sweep
                .iter()
                .map(|s| json!({ "epsilon": s.epsilon, "mean": s.mean, "stderr": s.stderr, "identity_mean": s.identity_mean }))
                .collect(),
        );
        let tw = twirl_coefficients(n, cfg.samples, cfg.seed ^ 0x7477_6972_6c00)?;
        rows.push(Assertion::near(
            "coupling.twirl-square",
            "Clifford twirl coefficient of Tr[H²]",
            tw.square,
            tw.square_exact,
            3.0 * tw.square_stderr + 1e-12,
        ));
        rows.push(Assertion::near(
            "coupling.twirl-trace",
            "Clifford twirl coefficient of Tr[H]²",
            tw.trace,
            tw.trace_exact,
            3.0 * tw.trace_stderr + 1e-12,
        ));
        result.insert("twirl".into(), serde_json::to_value(&tw)?);
    }
    let decay = wasserstein_decay(n, cfg.k.unwrap_or(0), cfg.t)?;
    result.insert("wasserstein".into(), serde_json::to_value(&decay)?);
    result.insert("steps_below_1e-6".into(), json!(steps_below(n, cfg.t, 1e-6)?));
    if n >= 2 && cfg.t >= 1 && cfg.t <= crate::haar::MAX_T && 4usize.pow((n * cfg.t) as u32) <= RATE_CHECK_DIM {
        let spec = WalkSpec::new(WalkKind::Sigma, n, cfg.t)?;
        let mut ctx = WalkContext::for_spec(&spec, cfg.seed)?;
        let g = spectral_gap(&spec, &mut ctx, &cfg.eig_options())?.g_value;
        let e = eta_consistency(n, cfg.t, g);
        rows.push(Assertion::at_most("coupling.rate-consistency", "exact g(σ_n, t) against the coupling rate η", g, e.eta, 1e-9));
        result.insert("rate_consistency".into(), serde_json::to_value(&e)?);
    } else {
        warnings.push("g(σ_n, t) too large to compute here; rate consistency skipped".into());
    }
    let csv_rows: Vec<CouplingCsvRow> = (0..trace.samples)
        .map(|i| CouplingCsvRow {
            index: i,
            sample_seed: trace.sample_seeds[i],
            ratio: trace.ratios[i],
            twirl_term: trace.twirl_terms[i],
        })
        .collect();
    let csv = csv_string(&csv_rows)?;
    result.insert("trace".into(), serde_json::to_value(&trace)?);
    Ok(Report::new(cfg, rows, warnings, serde_json::Value::Object(result), csv))
}

/// Reduction-inequality failures over `1..=t_max` for the improved and legacy lengths.
fn reduction_sweep(t_max: u64) -> Result<(u64, u64, Option<u64>)> {
    let (mut improved, mut legacy, mut first) = (0, 0, None);
    for t in 1..=t_max {
        let l = reduction_length(t)?;
        if !reduction_inequality_check(l.improved, t)?.holds {
            improved += 1;
            first.get_or_insert(t);
        }
        if !reduction_inequality_check(l.legacy, t)?.holds {
            legacy += 1;
        }
    }
    Ok((improved, legacy, first))
}

pub fn cmd_bounds(cfg: &RunConfig) -> Result<Report> {
    let n = u32::try_from(cfg.n).map_err(|_| Error::InvalidParameter("n too large".into()))?;
    let t = cfg.t as u64;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut result = serde_json::Map::new();
    let gaps = gap_bounds(n, t)?;
    rows.push(Assertion::flag("bounds.gap-consistency", "unconditional g bound equals 1 - Δ bound / n", gaps.consistent));
    result.insert("gap_bounds".into(), serde_json::to_value(&gaps)?);
    result.insert("reduction_length".into(), serde_json::to_value(reduction_length(t)?)?);
    let fd = final_delta_arithmetic(n);
    rows.push(Assertion::at_most("bounds.final-delta", "8(2k_n+1)(4^n-1) <= 120000 n^4 4^n", fd.lhs, fd.rhs, 0.0));
    result.insert("final_delta".into(), serde_json::to_value(fd)?);
    if n >= 2 {
        let stated = comparison_gap(n, EtaMode::Stated24)?;
        let enumerated = comparison_gap(n, EtaMode::Enumerated11520)?;
        rows.push(Assertion::at_least(
            "bounds.comparison-claim",
            "comparison-method gap η/d² against 1/(2000 n³)",
            stated.gap,
            stated.claimed,
            0.0,
        ));
        let layers = layer_count_check(n);
        rows.push(Assertion::at_most(
            "bounds.layer-count",
            "(1 - 1/(2000n³))^(6000n⁴) <= (1/2)/(4^n - 1), in logs",
            layers.log_lhs,
            layers.log_rhs,
            0.0,
        ));
        result.insert("comparison_gap".into(), json!({ "stated": stated, "enumerated": enumerated }));
        result.insert("layer_count".into(), serde_json::to_value(layers)?);
    }
    let mut ts = vec![t];
    if let Some(t_max) = cfg.bounds.t_max {
        if t_max == 0 {
            return Err(Error::InvalidParameter("t-max must be at least 1".into()));
        }
        let (improved, legacy, first) = reduction_sweep(t_max)?;
        rows.push(Assertion::at_most(
            "bounds.reduction-sweep",
            "improved reduction length satisfies 6t²/2^l <= l^(-1/2)/2",
            improved as f64,
            0.0,
            0.0,
        ));
        ts = std::iter::successors(Some(1u64), |&x| x.checked_mul(2)).take_while(|&x| x <= t_max).collect();
        let (mut chain_ok, mut middle_step_failures) = (true, Vec::new());
        for &t in &ts {
            let c = lambert_chain(t)?;
            chain_ok &= c.exact_within_lambert() && c.exact_within_closed_form();
            if !c.lambert_within_closed_form() {
                middle_step_failures.push(t);
            }
        }
        rows.push(Assertion::flag(
            "bounds.lambert-chain",
            "root of l - a ln l = b lies below its Lambert bound and below the closed-form length",
            chain_ok,
        ));
        if !middle_step_failures.is_empty() {
            warnings.push(format!(
                "Lambert bound exceeds the closed-form length at t in {middle_step_failures:?}; the exact root does not"
            ));
        }
        result.insert("lambert_middle_step_failures".into(), json!(middle_step_failures));
        result.insert(
            "reduction_sweep".into(),
            json!({ "t_max": t_max, "improved_failures": improved, "legacy_failures": legacy, "first_failure": first }),
        );
    }
    match cfg.bounds.decompose {
        Some(Decompose::Old) => {
            let d = exponent_decomposition_old();
            rows.push(Assertion::near("bounds.exponent-old", "old depth exponent ≈ 10.41", d.total, 10.41, 0.01));
            result.insert("decomposition".into(), serde_json::to_value(&d)?);
        }
        Some(Decompose::New) => {
            let d = exponent_decomposition_new(t as f64)?;
            result.insert("decomposition".into(), serde_json::to_value(&d)?);
        }
        None => {}
    }
    if cfg.bounds.depth {
        let local = design_depth(n, t, cfg.epsilon, Architecture::Local)?;
        let brick = design_depth(n, t, cfg.epsilon, Architecture::Brickwork)?;
        if let (Some(l), Some(b)) = (local.depth.formula_value(), brick.depth.formula_value()) {
            rows.push(Assertion::near("bounds.depth-ratio", "local depth = n × brickwork depth", l / b, n as f64, 1e-9 * n as f64));
        }
        let growth = match brick.depth.formula_value() {
            Some(d) => Some(complexity_growth_bound(d, n, cfg.epsilon)?),
            None => None,
        };
        result.insert("depth".into(), json!({ "local": local, "brickwork": brick, "complexity_growth": growth }));
    }
    let sheet = bound_sheet(&[n], &ts, cfg.epsilon)?;
    let csv = bound_sheet_csv(&sheet)?;
    result.insert("sheet".into(), serde_json::to_value(&sheet)?);
    Ok(Report::new(cfg, rows, warnings, serde_json::Value::Object(result), csv))
}

#[derive(Serialize)]
struct MatrixCsvRow<'a> {
    criterion: u8,
    key: &'a str,
    id: &'a str,
    reference: &'a str,
    value: f64,
    limit: f64,
    passed: bool,
}

pub fn cmd_verify_all(cfg: &RunConfig) -> Result<Report> {
    let ctx = CriteriaContext { profile: cfg.profile, seed: cfg.seed, opts: cfg.eig_options() };
    let mut outcomes = run_criteria(&ctx, &cfg.only)?;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for o in &mut outcomes {
        apply_faults(&mut o.assertions, &cfg.inject_fault);
        o.passed = o.assertions.iter().all(|a| a.passed);
        rows.extend(o.assertions.iter().cloned());
        warnings.extend(o.warnings.iter().map(|w| format!("criterion {}: {w}", o.id)));
    }
    let mut csv_rows = Vec::new();
    for o in &outcomes {
        for a in &o.assertions {
            csv_rows.push(MatrixCsvRow {
                criterion: o.id,
                key: o.key,
                id: &a.id,
                reference: &a.reference,
                value: a.value,
                limit: a.limit,
                passed: a.passed,
            });
        }
    }
    let csv = csv_string(&csv_rows)?;
    let matrix: Vec<_> = outcomes
        .iter()
        .map(|o| json!({ "criterion": o.id, "key": o.key, "reference": o.reference, "passed": o.passed, "detail": o.detail }))
        .collect();
    Ok(Report::new(cfg, rows, warnings, json!({ "matrix": matrix }), csv))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_cap_range() {
        let mut cfg = RunConfig::new(CommandKind::Gap);
        cfg.dense_cap = 1 << 7;
        assert!(matches!(run(&cfg), Err(Error::InvalidParameter(_))));
        cfg.dense_cap = (1 << 20) + 1;
        assert_eq!(Exit::for_error(&run(&cfg).unwrap_err()), Exit::Infeasible);
    }

    #[test]
    fn gap_report_local_n3() {
        let mut cfg = RunConfig::new(CommandKind::Gap);
        cfg.n = 3;
        cfg.seed = 7;
        let r = run(&cfg).unwrap();
        assert!(r.passed);
        assert_eq!(r.exit(), Exit::Pass);
        let g = r.result["gap"]["g_value"].as_f64().unwrap();
        assert!((g - 0.6).abs() < 1e-10);
        assert!(r.render().unwrap().contains("\"schema\": 1"));
    }

    #[test]
    fn infeasible_walk_maps_to_exit_2() {
        let mut cfg = RunConfig::new(CommandKind::Gap);
        cfg.n = 6;
        cfg.t = 4;
        assert_eq!(Exit::for_error(&run(&cfg).unwrap_err()), Exit::Infeasible);
        cfg.walk = WalkKind::Brickwork;
        cfg.n = 3;
        cfg.t = 1;
        assert_eq!(Exit::for_error(&run(&cfg).unwrap_err()), Exit::Infeasible);
    }

    #[test]
    fn fault_injection_fails_targeted_rows() {
        let mut cfg = RunConfig::new(CommandKind::Bounds);
        cfg.bounds.decompose = Some(Decompose::Old);
        assert!(run(&cfg).unwrap().passed);
        cfg.inject_fault = vec!["exponent-old".into()];
        let r = run(&cfg).unwrap();
        assert_eq!(r.exit(), Exit::AssertionFailed);
        let failing: Vec<_> = r.failing().map(|a| a.id.as_str()).collect();
        assert_eq!(failing, ["bounds.exponent-old"]);
    }

    #[test]
    fn coupling_report_is_reproducible() {
        let mut cfg = RunConfig::new(CommandKind::Coupling);
        cfg.samples = 500;
        let a = run(&cfg).unwrap();
        assert!(a.passed, "{:?}", a.failing().collect::<Vec<_>>());
        let b = run(&cfg).unwrap();
        assert_eq!(a.render().unwrap(), b.render().unwrap());
        cfg.format = OutputFormat::Csv;
        let csv = run(&cfg).unwrap().render().unwrap();
        assert!(csv.starts_with("index,sample_seed,ratio,twirl_term\n"));
        assert_eq!(csv.lines().count(), 501);
    }

    #[test]
    fn coupling_zero_distance() {
        let mut cfg = RunConfig::new(CommandKind::Coupling);
        cfg.samples = 10;
        cfg.epsilon = 0.0;
        let r = run(&cfg).unwrap();
        assert!(r.passed);
        assert!(r.assertions.iter().any(|a| a.id == "coupling.zero-distance"));
    }

    #[test]
    fn bounds_sweep_and_csv() {
        let mut cfg = RunConfig::new(CommandKind::Bounds);
        cfg.bounds.t_max = Some(1 << 12);
        cfg.bounds.depth = true;
        cfg.n = 32;
        cfg.t = 4;
        cfg.epsilon = 0.01;
        let r = run(&cfg).unwrap();
        assert!(r.passed, "{:?}", r.failing().collect::<Vec<_>>());
        cfg.format = OutputFormat::Csv;
        let csv = run(&cfg).unwrap().render().unwrap();
        assert!(csv.starts_with("n,t,epsilon,reduction_length,"));
        assert_eq!(csv.lines().count(), 1 + 13);
    }
}
