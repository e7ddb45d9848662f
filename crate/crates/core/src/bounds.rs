//! Closed-form gap, depth and reduction-length arithmetic.
//!
//! Everything here is pure `f64` arithmetic with no randomness, so a grid evaluates
//! bit-identically on every run.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Constant of the tensor-product-expander bounds.
pub const SCALING_C: f64 = 1e13;

/// `120000`, the constant of the unconditional gap.
pub const UNCONDITIONAL_CONSTANT: f64 = 120_000.0;

fn log2(x: f64) -> f64 {
    x.log2()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionLength {
    pub t: u64,
    /// `⌈2 log2(4t) + 1.5 sqrt(log2(4t))⌉`
    pub improved: u64,
    /// `⌈2.5 log2(4t)⌉`
    pub legacy: u64,
}

pub fn reduction_length(t: u64) -> Result<ReductionLength> {
    if t == 0 {
        return Err(Error::Domain("reduction length needs t >= 1".into()));
    }
    let l4t = log2(4.0 * t as f64);
    Ok(ReductionLength {
        t,
        improved: (2.0 * l4t + 1.5 * l4t.sqrt()).ceil() as u64,
        legacy: (2.5 * l4t).ceil() as u64,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductionInequality {
    pub l: u64,
    pub t: u64,
    /// `6t² / 2^l`
    pub lhs: f64,
    /// `l^{-1/2} / 2`
    pub rhs: f64,
    pub holds: bool,
}

pub fn reduction_inequality_check(l: u64, t: u64) -> Result<ReductionInequality> {
    if l == 0 || t == 0 {
        return Err(Error::Domain("reduction inequality needs l, t >= 1".into()));
    }
    let tf = t as f64;
    // 2^l via powi keeps the value exact for every l below the exponent range
    let lhs = 6.0 * tf * tf / 2f64.powi(l as i32);
    let rhs = 0.5 / (l as f64).sqrt();
    Ok(ReductionInequality { l, t, lhs, rhs, holds: lhs <= rhs })
}

/// Lower branch `W_{-1}(x)` for `x ∈ [-1/e, 0)`, by Halley iteration started at
/// `-1 - sqrt(2u) - u` with `x = -e^{-u-1}`.
pub fn lambert_w_minus1(x: f64) -> Result<f64> {
    let branch = -(-1.0f64).exp();
    if !(x < 0.0) || x < branch - 1e-15 || !x.is_finite() {
        return Err(Error::Domain(format!("W_-1 is real only on [-1/e, 0), got {x}")));
    }
    let u = (-(-x).ln() - 1.0).max(0.0);
    if u == 0.0 {
        return Ok(-1.0);
    }
    let mut w = -1.0 - (2.0 * u).sqrt() - u;
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let fp = ew * (w + 1.0);
        if fp == 0.0 {
            break;
        }
        let step = f / (fp - (w + 2.0) * f / (2.0 * (w + 1.0)));
        w -= step;
        if step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    Ok(w)
}

/// `-1 - sqrt(2x) - x`, the lower bound on `W_{-1}(-e^{-x-1})` for `x > 0`.
pub fn lambert_lower_bound(x: f64) -> f64 {
    -1.0 - (2.0 * x).sqrt() - x
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambertBoundCheck {
    pub x: f64,
    pub w: f64,
    pub bound: f64,
    pub holds: bool,
}

/// Evaluates `W_{-1}(-e^{-x-1}) >= -1 - sqrt(2x) - x`.
pub fn lambert_bound_check(x: f64) -> Result<LambertBoundCheck> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("bound stated for x > 0, got {x}")));
    }
    let w = lambert_w_minus1(-(-x - 1.0).exp())?;
    let bound = lambert_lower_bound(x);
    Ok(LambertBoundCheck { x, w, bound, holds: w >= bound })
}

/// Steps from `l - a ln l >= b` to the closed-form reduction length, with
/// `a = 1/(2 ln 2)` and `b = 2 log2(4t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambertChain {
    pub t: u64,
    pub a: f64,
    pub b: f64,
    /// `b/a + ln a - 1`
    pub x: f64,
    /// Largest root of `y - a ln y = b`: `-a W_{-1}(-e^{-b/a}/a)`.
    pub y_exact: f64,
    /// `-a(-1 - sqrt(2x) - x)`, the Lambert lower bound pushed through.
    pub y_lambert: f64,
    /// `2 log2(4t) + 1.5 sqrt(log2(4t))`
    pub closed_form: f64,
}

impl LambertChain {
    pub fn exact_within_lambert(&self) -> bool {
        self.y_exact <= self.y_lambert * (1.0 + 1e-12)
    }

    pub fn lambert_within_closed_form(&self) -> bool {
        self.y_lambert <= self.closed_form
    }

    pub fn exact_within_closed_form(&self) -> bool {
        self.y_exact <= self.closed_form
    }
}

pub fn lambert_chain(t: u64) -> Result<LambertChain> {
    if t == 0 {
        return Err(Error::Domain("Lambert chain needs t >= 1".into()));
    }
    let a = 1.0 / (2.0 * std::f64::consts::LN_2);
    let l4t = log2(4.0 * t as f64);
    let b = 2.0 * l4t;
    let x = b / a + a.ln() - 1.0;
    let y_exact = -a * lambert_w_minus1(-(-b / a).exp() / a)?;
    let y_lambert = -a * lambert_lower_bound(x);
    Ok(LambertChain {
        t,
        a,
        b,
        x,
        y_exact,
        y_lambert,
        closed_form: b + 1.5 * l4t.sqrt(),
    })
}

/// A bound that may be outside its stated hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Bound {
    Applicable { value: f64 },
    NotApplicable { reason: String, formula_value: Option<f64> },
}

impl Bound {
    pub fn value(&self) -> Option<f64> {
        match self {
            Bound::Applicable { value } => Some(*value),
            Bound::NotApplicable { .. } => None,
        }
    }

    pub fn formula_value(&self) -> Option<f64> {
        match self {
            Bound::Applicable { value } => Some(*value),
            Bound::NotApplicable { formula_value, .. } => *formula_value,
        }
    }
}

pub fn unconditional_delta_bound(n: u32) -> f64 {
    let nf = n as f64;
    1.0 / (UNCONDITIONAL_CONSTANT * nf.powi(4) * 4f64.powi(n as i32))
}

pub fn unconditional_g_bound(n: u32) -> f64 {
    let nf = n as f64;
    1.0 - 1.0 / (UNCONDITIONAL_CONSTANT * nf.powi(5) * 4f64.powi(n as i32))
}

/// `ln^5(t) t^{4 + 3/sqrt(log2 t)}`, the `t`-dependence shared by the expander bounds.
fn t_factor(t: f64) -> f64 {
    t.ln().powi(5) * t.powf(4.0 + 3.0 / log2(t).sqrt())
}

fn scaling_hypothesis(n: u32, t: u64) -> Result<Option<String>> {
    if t < 2 {
        return Ok(Some(format!("t = {t}: ln t vanishes, bound needs t >= 2")));
    }
    let l = reduction_length(t)?.improved;
    if (n as u64) < l {
        return Ok(Some(format!("n = {n} below the reduction length {l}")));
    }
    Ok(None)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    Local,
    Brickwork,
}

/// Tensor-product-expander bound on `g` for either architecture.
pub fn scaling_g_bound(n: u32, t: u64, arch: Architecture) -> Result<Bound> {
    let tf = t as f64;
    let formula = if t >= 2 {
        let denom = match arch {
            Architecture::Local => SCALING_C * n as f64 * t_factor(tf),
            Architecture::Brickwork => 3.0 * SCALING_C * t_factor(tf),
        };
        Some(1.0 - 1.0 / denom)
    } else {
        None
    };
    Ok(match scaling_hypothesis(n, t)? {
        Some(reason) => Bound::NotApplicable { reason, formula_value: formula },
        None => Bound::Applicable { value: formula.expect("t >= 2") },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapBounds {
    pub n: u32,
    pub t: u64,
    pub unconditional_g: f64,
    pub unconditional_delta: f64,
    pub scaling_local_g: Bound,
    pub scaling_brickwork_g: Bound,
    /// `1/(n (5e)^n)`, a lower bound on `Δ(H_{n,t})`.
    pub legacy_delta: f64,
    /// `1 - legacy_delta`, the form in which the legacy bound is usually quoted.
    pub legacy_one_minus_delta: f64,
    /// `1 - legacy_delta / n`, the legacy bound converted to `g`.
    pub legacy_g: f64,
    /// `unconditional_g == 1 - unconditional_delta / n` to rounding.
    pub consistent: bool,
}

pub fn legacy_delta_bound(n: u32) -> f64 {
    1.0 / (n as f64 * (5.0 * std::f64::consts::E).powi(n as i32))
}

pub fn gap_bounds(n: u32, t: u64) -> Result<GapBounds> {
    if n == 0 || t == 0 {
        return Err(Error::Domain("gap bounds need n, t >= 1".into()));
    }
    let g1 = unconditional_g_bound(n);
    let d1 = unconditional_delta_bound(n);
    let legacy = legacy_delta_bound(n);
    Ok(GapBounds {
        n,
        t,
        unconditional_g: g1,
        unconditional_delta: d1,
        scaling_local_g: scaling_g_bound(n, t, Architecture::Local)?,
        scaling_brickwork_g: scaling_g_bound(n, t, Architecture::Brickwork)?,
        legacy_delta: legacy,
        legacy_one_minus_delta: 1.0 - legacy,
        legacy_g: 1.0 - legacy / n as f64,
        consistent: (g1 - (1.0 - d1 / n as f64)).abs() <= 4.0 * f64::EPSILON,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDepth {
    pub n: u32,
    pub t: u64,
    pub epsilon: f64,
    pub architecture: Architecture,
    /// Ceiling of the depth formula, or the formula value when out of hypothesis.
    pub depth: Bound,
    /// `depth / (n t^5)`, the headline-scaling sanity ratio.
    pub ratio_to_n_t5: Option<f64>,
}

/// Real-valued depth formula `C [n] ln^5 t t^{4+3/sqrt(log2 t)} (2nt + log2(1/ε))`.
pub fn design_depth_formula(n: u32, t: f64, epsilon: f64, arch: Architecture) -> f64 {
    let prefactor = match arch {
        Architecture::Local => SCALING_C * n as f64,
        Architecture::Brickwork => SCALING_C,
    };
    prefactor * t_factor(t) * (2.0 * n as f64 * t + log2(1.0 / epsilon))
}

pub fn design_depth(n: u32, t: u64, epsilon: f64, arch: Architecture) -> Result<DesignDepth> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if n == 0 || t == 0 {
        return Err(Error::Domain("depth needs n, t >= 1".into()));
    }
    let formula = (t >= 2).then(|| design_depth_formula(n, t as f64, epsilon, arch).ceil());
    let depth = match scaling_hypothesis(n, t)? {
        Some(reason) => Bound::NotApplicable { reason, formula_value: formula },
        None => Bound::Applicable { value: formula.expect("t >= 2") },
    };
    let ratio = depth.formula_value().map(|d| d / (n as f64 * (t as f64).powi(5)));
    Ok(DesignDepth {
        n,
        t,
        epsilon,
        architecture: arch,
        depth,
        ratio_to_n_t5: ratio,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaMode {
    /// `η = 1/(24 n)`, the stated generator weight.
    Stated24,
    /// `η = 1/(11520 n)`, one over the two-qubit Clifford count.
    Enumerated11520,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGap {
    pub n: u32,
    pub mode: EtaMode,
    pub eta: f64,
    /// Generator diameter, `9n`.
    pub diameter: f64,
    /// `η / d²`
    pub gap: f64,
    /// `1/(2000 n³)`
    pub claimed: f64,
    pub meets_claim: bool,
}

pub fn comparison_gap(n: u32, mode: EtaMode) -> Result<ComparisonGap> {
    if n < 2 {
        return Err(Error::Domain("comparison gap needs n >= 2".into()));
    }
    let nf = n as f64;
    let eta = match mode {
        EtaMode::Stated24 => 1.0 / (24.0 * nf),
        EtaMode::Enumerated11520 => 1.0 / (11520.0 * nf),
    };
    let diameter = 9.0 * nf;
    let gap = eta / (diameter * diameter);
    let claimed = 1.0 / (2000.0 * nf.powi(3));
    Ok(ComparisonGap {
        n,
        mode,
        eta,
        diameter,
        gap,
        claimed,
        meets_claim: gap >= claimed,
    })
}

/// Number of Clifford-brickwork layers, `6000 n⁴`.
pub fn k_n(n: u32) -> u64 {
    6000 * (n as u64).pow(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerCountCheck {
    pub n: u32,
    pub k: u64,
    /// `ln((1 - 1/(2000n³))^k)`
    pub log_lhs: f64,
    /// `ln((1/2)/(2^{2n} - 1))`
    pub log_rhs: f64,
    pub holds: bool,
}

/// `(1 - 1/(2000n³))^{k_n} <= (1/2)/(2^{2n} - 1)`, compared in log space.
pub fn layer_count_check(n: u32) -> LayerCountCheck {
    let nf = n as f64;
    let k = k_n(n);
    let log_lhs = k as f64 * (-1.0 / (2000.0 * nf.powi(3))).ln_1p();
    let log_rhs = (0.5f64).ln() - (4f64.powi(n as i32) - 1.0).ln();
    LayerCountCheck {
        n,
        k,
        log_lhs,
        log_rhs,
        holds: log_lhs <= log_rhs,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalDeltaArithmetic {
    pub n: u32,
    /// `8 (2 k_n + 1)(2^{2n} - 1)`
    pub lhs: f64,
    /// `120000 n⁴ 2^{2n}`
    pub rhs: f64,
    pub holds: bool,
}

pub fn final_delta_arithmetic(n: u32) -> FinalDeltaArithmetic {
    let nf = n as f64;
    let four_n = 4f64.powi(n as i32);
    let lhs = 8.0 * (2.0 * k_n(n) as f64 + 1.0) * (four_n - 1.0);
    let rhs = UNCONDITIONAL_CONSTANT * nf.powi(4) * four_n;
    FinalDeltaArithmetic { n, lhs, rhs, holds: lhs <= rhs }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentTerm {
    pub label: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentDecomposition {
    pub terms: Vec<ExponentTerm>,
    /// `1 + (term2 + term3) × (remaining terms summed)`
    pub total: f64,
}

fn term(label: &str, value: f64) -> ExponentTerm {
    ExponentTerm { label: label.into(), value }
}

/// `1 + (2 + 0.5)(log2 5 + log2 e)`.
pub fn exponent_decomposition_old() -> ExponentDecomposition {
    let terms = vec![
        term("1. circuit length", 1.0),
        term("2. reduction prefactor", 2.0),
        term("3. reduction correction", 0.5),
        term("4. log2 5", 5f64.log2()),
        term("5. log2 e", std::f64::consts::LOG2_E),
    ];
    let total = 1.0 + (terms[1].value + terms[2].value) * (terms[3].value + terms[4].value);
    ExponentDecomposition { terms, total }
}

/// `1 + (2 + 1.5/sqrt(log2 t)) × 2`.
pub fn exponent_decomposition_new(t: f64) -> Result<ExponentDecomposition> {
    if !(t > 1.0) {
        return Err(Error::Domain(format!("new exponent needs t > 1, got {t}")));
    }
    let terms = vec![
        term("1. circuit length", 1.0),
        term("2. reduction prefactor", 2.0),
        term("3. reduction correction", 1.5 / log2(t).sqrt()),
        term("4. unconditional gap", 2.0),
    ];
    let total = 1.0 + (terms[1].value + terms[2].value) * terms[3].value;
    Ok(ExponentDecomposition { terms, total })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityGrowth {
    pub depth: f64,
    pub n: u32,
    /// Design order reached at this depth by the brickwork formula (at least 2).
    pub t: f64,
    pub exponent: f64,
    /// `depth^{exponent}`, a scaling figure only; constants are not tracked.
    pub value: f64,
    /// `depth <= 2^{n/2}`.
    pub within_horizon: bool,
}

/// `T^{1/(5 + 3/sqrt(log2 t(T)))}` with `t(T)` the largest order whose brickwork depth
/// formula at accuracy `epsilon` does not exceed `T`.
pub fn complexity_growth_bound(depth: f64, n: u32, epsilon: f64) -> Result<ComplexityGrowth> {
    if !(depth >= 1.0) || n == 0 {
        return Err(Error::Domain("complexity growth needs T >= 1 and n >= 1".into()));
    }
    let f = |t: f64| design_depth_formula(n, t, epsilon, Architecture::Brickwork);
    let t = if f(2.0) >= depth {
        2.0
    } else {
        let (mut lo, mut hi) = (2.0f64, 4.0f64);
        while f(hi) < depth {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) <= depth {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    let exponent = 1.0 / (5.0 + 3.0 / log2(t).sqrt());
    Ok(ComplexityGrowth {
        depth,
        n,
        t,
        exponent,
        value: depth.powf(exponent),
        within_horizon: log2(depth) <= n as f64 / 2.0,
    })
}

/// One row of the CSV bound sheet. Column order follows field order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: u32,
    pub t: u64,
    pub epsilon: f64,
    pub reduction_length: u64,
    pub legacy_reduction_length: u64,
    pub unconditional_g: f64,
    pub unconditional_delta: f64,
    pub scaling_local_g: Option<f64>,
    pub scaling_brickwork_g: Option<f64>,
    pub depth_local: Option<f64>,
    pub depth_brickwork: Option<f64>,
    pub comparison_gap_stated24: Option<f64>,
    pub comparison_gap_enumerated: Option<f64>,
    pub k_n: u64,
    pub legacy_delta: f64,
}

pub fn bound_sheet(ns: &[u32], ts: &[u64], epsilon: f64) -> Result<Vec<BoundRow>> {
    let mut rows = Vec::with_capacity(ns.len() * ts.len());
    for &n in ns {
        for &t in ts {
            let gaps = gap_bounds(n, t)?;
            let l = reduction_length(t)?;
            rows.push(BoundRow {
                n,
                t,
                epsilon,
                reduction_length: l.improved,
                legacy_reduction_length: l.legacy,
                unconditional_g: gaps.unconditional_g,
                unconditional_delta: gaps.unconditional_delta,
                scaling_local_g: gaps.scaling_local_g.value(),
                scaling_brickwork_g: gaps.scaling_brickwork_g.value(),
                depth_local: design_depth(n, t, epsilon, Architecture::Local)?.depth.value(),
                depth_brickwork: design_depth(n, t, epsilon, Architecture::Brickwork)?.depth.value(),
                comparison_gap_stated24: comparison_gap(n, EtaMode::Stated24).ok().map(|c| c.gap),
                comparison_gap_enumerated: comparison_gap(n, EtaMode::Enumerated11520).ok().map(|c| c.gap),
                k_n: k_n(n),
                legacy_delta: gaps.legacy_delta,
            });
        }
    }
    Ok(rows)
}

pub fn bound_sheet_csv(rows: &[BoundRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Serialization(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Serialization(e.to_string()))
}
