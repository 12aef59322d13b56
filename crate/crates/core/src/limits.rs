//! Epsilon sweeps, tail statistics, extrapolation to `eps -> 0` and
//! verdicts for chains of limit (in)equalities.
//!
//! Tail minima and maxima are statistics over a declared window of the
//! smallest scales; they are estimates of the lower and upper limits, not
//! the limits themselves.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::kernels::Epsilon;
use crate::parallel;
use crate::quadrature::QuadResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsilonGrid {
    /// `eps_k = eps0 * ratio^k`
    Geometric { eps0: f64, ratio: f64, count: usize },
    /// `|ln eps|` uniform in `[abs_ln_min, abs_ln_max]`.
    LogUniform { abs_ln_min: f64, abs_ln_max: f64, count: usize },
}

impl EpsilonGrid {
    /// Grid for variations and Besov constants.
    pub fn default_variation() -> Self {
        EpsilonGrid::Geometric { eps0: 0.2, ratio: 0.5, count: 10 }
    }

    /// Grid for Gagliardo constants, whose small parameter is `1/|ln eps|`.
    pub fn default_gagliardo() -> Self {
        EpsilonGrid::LogUniform { abs_ln_min: 2.0, abs_ln_max: 9.0, count: 8 }
    }

    pub fn count(&self) -> usize {
        match *self {
            EpsilonGrid::Geometric { count, .. } | EpsilonGrid::LogUniform { count, .. } => count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsilonGrid::Geometric { eps0, ratio, count } => {
                if !(eps0 > 0.0 && eps0.is_finite()) {
                    return input("grid.eps0 must be positive");
                }
                if !(ratio > 0.0 && ratio < 1.0) {
                    return input("grid.ratio must lie in (0, 1)");
                }
                if count < 4 {
                    return input("grid.count must be at least 4");
                }
            }
            EpsilonGrid::LogUniform { abs_ln_min, abs_ln_max, count } => {
                if !(abs_ln_min.is_finite() && abs_ln_max > abs_ln_min) {
                    return input("grid needs abs_ln_min < abs_ln_max");
                }
                if count < 4 {
                    return input("grid.count must be at least 4");
                }
            }
        }
        Ok(())
    }

    /// Scales in strictly decreasing order.
    pub fn epsilons(&self) -> Result<Vec<Epsilon>> {
        self.validate()?;
        match *self {
            EpsilonGrid::Geometric { eps0, ratio, count } => {
                (0..count).map(|k| Epsilon::from_ln(eps0.ln() + k as f64 * ratio.ln())).collect()
            }
            EpsilonGrid::LogUniform { abs_ln_min, abs_ln_max, count } => (0..count)
                .map(|k| {
                    let a = abs_ln_min + (abs_ln_max - abs_ln_min) * k as f64 / (count - 1) as f64;
                    Epsilon::from_ln(-a)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Model {
    /// Mean of the tail rows.
    ConstantTail,
    /// `value = a + b / |ln eps|`
    InverseLog,
    /// `value = a + b eps^s`
    Power { s: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extrapolation {
    pub model: Model,
    pub limit: f64,
    pub uncertainty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub ln_epsilon: f64,
    pub value: f64,
    pub error: f64,
    pub low_confidence: bool,
    /// Why the row is unusable, if it is.
    pub flag: Option<String>,
}

impl SweepRow {
    pub fn is_valid(&self) -> bool {
        self.flag.is_none() && self.value.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonSweepResult {
    pub functional: String,
    pub params: BTreeMap<String, String>,
    pub rows: Vec<SweepRow>,
    pub tail_window: usize,
    pub tail_min: f64,
    pub tail_max: f64,
    pub extrapolated: Option<Extrapolation>,
    /// Set when the requested model could not be fitted.
    pub fit_error: Option<String>,
}

impl EpsilonSweepResult {
    pub fn limit(&self) -> Result<Extrapolation> {
        self.extrapolated
            .ok_or_else(|| Error::Fit(self.fit_error.clone().unwrap_or_else(|| "no extrapolation".into())))
    }

    pub fn valid_rows(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.is_valid())
    }
}

/// Default tail window: the last third of the rows, rounded up.
pub fn default_tail_window(count: usize) -> usize {
    count.div_ceil(3)
}

/// `(min, max)` over the valid rows among the last `window`.
pub fn tail_stats(rows: &[SweepRow], window: usize) -> Option<(f64, f64)> {
    let start = rows.len().saturating_sub(window);
    let vals: Vec<f64> = rows[start..].iter().filter(|r| r.is_valid()).map(|r| r.value).collect();
    if vals.is_empty() {
        return None;
    }
    Some((vals.iter().copied().fold(f64::INFINITY, f64::min), vals.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
}

/// Evaluate `f` at every scale of the grid. Failing rows are flagged and
/// kept; the sweep fails only when every row fails.
pub fn epsilon_sweep<F>(
    functional: &str,
    params: BTreeMap<String, String>,
    grid: &EpsilonGrid,
    model: Model,
    f: F,
) -> Result<EpsilonSweepResult>
where
    F: Fn(Epsilon) -> Result<QuadResult> + Sync + Send,
{
    let eps = grid.epsilons()?;
    let results = parallel::map(&eps, |e| f(*e));
    let mut rows = Vec::with_capacity(eps.len());
    let mut first_err = None;
    for (e, r) in eps.iter().zip(results) {
        rows.push(match r {
            Ok(q) => SweepRow {
                epsilon: e.value(),
                ln_epsilon: e.ln(),
                value: q.value,
                error: q.error_estimate,
                low_confidence: q.low_confidence,
                flag: (!q.value.is_finite()).then(|| "non_finite".to_string()),
            },
            Err(err) => {
                first_err.get_or_insert_with(|| err.clone());
                SweepRow { epsilon: e.value(), ln_epsilon: e.ln(), value: f64::NAN, error: f64::NAN, low_confidence: true, flag: Some(err.to_string()) }
            }
        });
    }
    if rows.iter().all(|r| !r.is_valid()) {
        return Err(first_err.unwrap_or_else(|| Error::Input("every sweep row failed".into())));
    }
    let tail_window = default_tail_window(rows.len());
    let (tail_min, tail_max) = tail_stats(&rows, tail_window).unwrap_or((f64::NAN, f64::NAN));
    let (extrapolated, fit_error) = match extrapolate(&rows, tail_window, model) {
        Ok(x) => (Some(x), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(EpsilonSweepResult { functional: functional.into(), params, rows, tail_window, tail_min, tail_max, extrapolated, fit_error })
}

/// Least squares `y = a + b x`; returns `(a, standard error of a)`.
fn affine_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(sxx > 1e-24 * scale * scale * n) {
        return Err(Error::Fit("abscissae are (nearly) identical; the affine fit has no unique intercept".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let se = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        (s2 * (1.0 / n + mx * mx / sxx)).sqrt()
    } else {
        0.0
    };
    Ok((a, se))
}

/// Extrapolated `eps -> 0` limit under `model`.
///
/// The constant model averages the tail window; the affine models are
/// fitted to the last `max(tail_window, 3)` valid rows. Their uncertainty
/// adds the intercept's standard error, the mean row error and the change
/// of the intercept when the next larger scale joins the fit.
pub fn extrapolate(rows: &[SweepRow], tail_window: usize, model: Model) -> Result<Extrapolation> {
    let valid: Vec<&SweepRow> = rows.iter().filter(|r| r.is_valid()).collect();
    match model {
        Model::ConstantTail => {
            let start = rows.len().saturating_sub(tail_window);
            let tail: Vec<&SweepRow> = rows[start..].iter().filter(|r| r.is_valid()).collect();
            if tail.len() < 3 {
                return Err(Error::Fit(format!("constant-tail model needs 3 valid tail rows, got {}", tail.len())));
            }
            let weighted = tail.iter().all(|r| r.error > 0.0);
            let (mut sw, mut swv) = (0.0, 0.0);
            for r in &tail {
                let w = if weighted { r.error.powi(-2) } else { 1.0 };
                sw += w;
                swv += w * r.value;
            }
            let (lo, hi) = tail_stats(rows, tail_window).expect("tail is nonempty");
            let mean_err = tail.iter().map(|r| r.error).sum::<f64>() / tail.len() as f64;
            Ok(Extrapolation { model, limit: swv / sw, uncertainty: (hi - lo) + mean_err })
        }
        Model::InverseLog | Model::Power { .. } => {
            if valid.len() < 3 {
                return Err(Error::Fit(format!("affine models need 3 valid rows, got {}", valid.len())));
            }
            // Large-eps rows carry corrections the affine model does not
            // describe, so only the tail is fitted. Widening the window by one
            // row measures how far the intercept still moves.
            let x: Vec<f64> = valid
                .iter()
                .map(|r| match model {
                    Model::InverseLog => 1.0 / r.ln_epsilon.abs(),
                    Model::Power { s } => (s * r.ln_epsilon).exp(),
                    Model::ConstantTail => unreachable!(),
                })
                .collect();
            let y: Vec<f64> = valid.iter().map(|r| r.value).collect();
            let start = valid.len() - tail_window.max(3).min(valid.len());
            let (a, se) = affine_fit(&x[start..], &y[start..])?;
            let drop = if start > 0 { affine_fit(&x[start - 1..], &y[start - 1..]).map(|(a2, _)| (a2 - a).abs()).unwrap_or(0.0) } else { 0.0 };
            let mean_err = valid[start..].iter().map(|r| r.error).sum::<f64>() / (valid.len() - start) as f64;
            Ok(Extrapolation { model, limit: a, uncertainty: se + mean_err + drop })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainKind {
    /// `lower <= mid <= upper`
    Sandwich,
    /// Gagliardo constant, scaled Besov constants and the spherical
    /// variation pairwise equal.
    KernelEquivalence,
    /// The kernel-equivalence terms plus the jump term, pairwise equal.
    JumpChain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
    pub uncertainty: f64,
}

impl Term {
    pub fn new(name: impl Into<String>, value: f64, uncertainty: f64) -> Self {
        Term { name: name.into(), value, uncertainty }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainVerdict {
    pub chain: ChainKind,
    pub terms: Vec<Term>,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_violation: f64,
}

/// Absolute tolerance `rel * max(|terms|, floor)`.
pub fn relative_tolerance(rel: f64, terms: &[Term], floor: f64) -> f64 {
    rel * terms.iter().map(|t| t.value.abs()).fold(floor, f64::max)
}

pub fn chain_check(kind: ChainKind, terms: &[Term], tolerance: f64) -> Result<ChainVerdict> {
    if !(tolerance >= 0.0) {
        return input("tolerance must be nonnegative");
    }
    let get = |name: &str| -> Result<f64> {
        terms
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.value)
            .ok_or_else(|| Error::Input(format!("chain term `{name}` is missing")))
    };
    let worst = match kind {
        ChainKind::Sandwich => {
            let (l, m, u) = (get("lower")?, get("mid")?, get("upper")?);
            (l - m).max(m - u).max(0.0)
        }
        ChainKind::KernelEquivalence | ChainKind::JumpChain => {
            get("gagliardo")?;
            get("variation")?;
            if !terms.iter().any(|t| t.name.starts_with("besov")) {
                return input("chain term `besov:<kernel>` is missing");
            }
            if kind == ChainKind::JumpChain {
                get("jump")?;
            }
            let mut w: f64 = 0.0;
            for (i, a) in terms.iter().enumerate() {
                for b in &terms[..i] {
                    w = w.max((a.value - b.value).abs());
                }
            }
            w
        }
    };
    if terms.iter().any(|t| !t.value.is_finite()) {
        return input("chain terms must be finite");
    }
    Ok(ChainVerdict { chain: kind, terms: terms.to_vec(), tolerance, pass: worst <= tolerance, worst_violation: worst })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::log_kernel_moment;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rows_from(grid: &EpsilonGrid, f: impl Fn(f64) -> f64) -> Vec<SweepRow> {
        grid.epsilons()
            .unwrap()
            .iter()
            .map(|e| SweepRow { epsilon: e.value(), ln_epsilon: e.ln(), value: f(e.ln()), error: 0.0, low_confidence: false, flag: None })
            .collect()
    }

    #[test]
    fn grids() {
        let g = EpsilonGrid::default_variation().epsilons().unwrap();
        assert_eq!(g.len(), 10);
        assert_abs_diff_eq!(g[0].value(), 0.2, epsilon = 1e-15);
        assert!(g.windows(2).all(|w| w[1].ln() < w[0].ln()));
        let h = EpsilonGrid::default_gagliardo().epsilons().unwrap();
        assert_abs_diff_eq!(h[0].ln(), -2.0);
        assert_abs_diff_eq!(h[7].ln(), -9.0);
        assert!(EpsilonGrid::Geometric { eps0: 0.2, ratio: 1.0, count: 10 }.validate().is_err());
        assert!(EpsilonGrid::Geometric { eps0: 0.2, ratio: 0.5, count: 3 }.validate().is_err());
        assert_eq!(default_tail_window(10), 4);
        assert_eq!(default_tail_window(8), 3);
    }

    #[test]
    fn exact_models_are_recovered() {
        let g = EpsilonGrid::default_gagliardo();
        let rows = rows_from(&g, |ln| 4.0 - 3.0 / ln.abs());
        let x = extrapolate(&rows, 3, Model::InverseLog).unwrap();
        assert_abs_diff_eq!(x.limit, 4.0, epsilon = 1e-12);
        let g = EpsilonGrid::default_variation();
        let rows = rows_from(&g, |ln| 2.0 + 0.7 * ln.exp());
        assert_abs_diff_eq!(extrapolate(&rows, 4, Model::Power { s: 1.0 }).unwrap().limit, 2.0, epsilon = 1e-12);
        let rows = rows_from(&g, |_| 1.5);
        for m in [Model::ConstantTail, Model::InverseLog, Model::Power { s: 1.0 }, Model::Power { s: 2.0 }] {
            let x = extrapolate(&rows, 4, m).unwrap();
            assert_abs_diff_eq!(x.limit, 1.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn large_scale_corrections_stay_out_of_the_intercept() {
        let g = EpsilonGrid::default_gagliardo();
        let rows = rows_from(&g, |ln| (11.4 - 8.0 * ln.exp()) / ln.abs());
        let x = extrapolate(&rows, 3, Model::InverseLog).unwrap();
        assert!(x.limit.abs() < 0.01, "{x:?}");
        assert!(x.limit.abs() <= x.uncertainty, "{x:?}");
    }

    #[test]
    fn degenerate_fit_is_an_error() {
        let mut rows = rows_from(&EpsilonGrid::default_variation(), |_| 1.0);
        for r in &mut rows {
            r.ln_epsilon = -3.0;
        }
        assert!(matches!(extrapolate(&rows, 4, Model::InverseLog), Err(Error::Fit(_))));
        assert!(matches!(extrapolate(&rows[..2], 4, Model::ConstantTail), Err(Error::Fit(_))));
    }

    #[test]
    fn sweep_of_constant_and_failures() {
        let g = EpsilonGrid::default_variation();
        let s = epsilon_sweep("const", BTreeMap::new(), &g, Model::ConstantTail, |_| Ok(QuadResult::exact(3.0))).unwrap();
        assert_eq!((s.tail_min, s.tail_max), (3.0, 3.0));
        let x = s.limit().unwrap();
        assert_eq!(x.limit, 3.0);
        assert_eq!(x.uncertainty, 0.0);
        let s = epsilon_sweep("partial", BTreeMap::new(), &g, Model::ConstantTail, |e| {
            if e.value() > 0.1 { input("too coarse") } else { Ok(QuadResult::exact(1.0)) }
        })
        .unwrap();
        assert!(s.rows[0].flag.is_some());
        assert_eq!(s.limit().unwrap().limit, 1.0);
        let all = epsilon_sweep("bad", BTreeMap::new(), &g, Model::ConstantTail, |_| input::<QuadResult>("no"));
        assert!(all.is_err());
    }

    #[test]
    fn log_kernel_moment_sweep_decays() {
        let g = EpsilonGrid::LogUniform { abs_ln_min: 5.0, abs_ln_max: 200.0, count: 10 };
        let s = epsilon_sweep("log_kernel_moment", BTreeMap::new(), &g, Model::ConstantTail, |e| {
            log_kernel_moment(e, 0.5, 1.0, 2).map(QuadResult::exact)
        })
        .unwrap();
        assert!(s.rows.windows(2).all(|w| w[1].value < w[0].value));
        assert!(s.tail_max < 0.03);
    }

    #[test]
    fn chains() {
        let t = |n: &str, v: f64| Term::new(n, v, 0.0);
        let ok = [t("gagliardo", 4.0), t("besov:trivial", 4.0), t("besov:log", 4.0), t("variation", 4.0), t("jump", 4.0)];
        let v = chain_check(ChainKind::JumpChain, &ok, 0.4).unwrap();
        assert!(v.pass);
        let mut bad = ok.clone();
        bad[2].value = 6.0;
        let v = chain_check(ChainKind::JumpChain, &bad, 0.4).unwrap();
        assert!(!v.pass);
        assert_eq!(v.worst_violation, 2.0);
        let zero = [t("gagliardo", 0.0), t("besov:trivial", 0.0), t("variation", 0.0), t("jump", 0.0)];
        assert!(chain_check(ChainKind::JumpChain, &zero, 0.0).unwrap().pass);
        assert!(chain_check(ChainKind::JumpChain, &ok[..4], 0.4).is_err());
        let s = [t("lower", 1.0), t("mid", 1.05), t("upper", 1.0)];
        let v = chain_check(ChainKind::Sandwich, &s, 0.1).unwrap();
        assert!(v.pass);
        assert_abs_diff_eq!(v.worst_violation, 0.05, epsilon = 1e-15);
        assert!(chain_check(ChainKind::Sandwich, &s[..2], 0.1).is_err());
    }

    proptest! {
        #[test]
        fn tail_stats_are_stable(vals in prop::collection::vec(-10.0f64..10.0, 10), noise in prop::collection::vec(-1.0f64..1.0, 10), delta in 0.0f64..0.5) {
            let mk = |v: &[f64]| -> Vec<SweepRow> {
                v.iter().enumerate().map(|(k, x)| SweepRow { epsilon: 0.5f64.powi(k as i32), ln_epsilon: -(k as f64), value: *x, error: 0.0, low_confidence: false, flag: None }).collect()
            };
            let a = mk(&vals);
            let moved: Vec<f64> = vals.iter().zip(&noise).map(|(v, n)| v + delta * n).collect();
            let b = mk(&moved);
            let (a0, a1) = tail_stats(&a, 4).unwrap();
            let (b0, b1) = tail_stats(&b, 4).unwrap();
            prop_assert!((a0 - b0).abs() <= delta + 1e-12);
            prop_assert!((a1 - b1).abs() <= delta + 1e-12);
        }
    }
}
