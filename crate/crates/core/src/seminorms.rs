//! The nonlocal functionals evaluated at one scale: Gagliardo and Besov
//! seminorms, the localized double integral, directional and spherical
//! variations, kernel-weighted Besov constants, mollified Gagliardo
//! constants, and the bound audits built on them.
//!
//! Every functional returns the q-th power of the quantity, never its root.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{input, Result};
use crate::fields::{Field, JumpSetSpec};
use crate::geometry::{along, norm, point, Point, Region, ORIGIN};
use crate::jumps::total_variation;
use crate::kernels::{Epsilon, RadialKernelFamily};
use crate::mollifiers::{mollify, MollifierSpec};
use crate::quadrature::lines::{distance_q, norm_q, shift_integral};
use crate::quadrature::singular::{double_integral_singular, polar_double_integral, stratified_double_integral, Method, Window};
use crate::quadrature::{sphere_measure, QuadBudget, QuadResult, RadialWeight, SphereRule, Tolerance};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalParams {
    pub r: f64,
    pub q: f64,
    /// Upper exponent for interpolation checks.
    pub p: Option<f64>,
    #[serde(skip)]
    pub region: Region,
}

impl FunctionalParams {
    pub fn new(r: f64, q: f64, region: Region) -> Result<Self> {
        if !(r > 0.0 && r < 1.0) {
            return input(format!("r must lie in (0, 1), got {r}"));
        }
        if !(q >= 1.0 && q.is_finite()) {
            return input(format!("q must lie in [1, inf), got {q}"));
        }
        Ok(FunctionalParams { r, q, p: None, region })
    }

    /// `r = 1/q`, the regime in which variations see jumps.
    pub fn jump_regime(q: f64, region: Region) -> Result<Self> {
        if !(q > 1.0) {
            return input("the jump regime needs q > 1");
        }
        FunctionalParams::new(1.0 / q, q, region)
    }

    pub fn with_p(mut self, p: f64) -> Result<Self> {
        if !(p > self.q && p.is_finite()) {
            return input(format!("p must exceed q = {}", self.q));
        }
        self.p = Some(p);
        Ok(self)
    }

    pub fn rq(&self) -> f64 {
        self.r * self.q
    }

    pub fn is_jump_regime(&self) -> bool {
        (self.r * self.q - 1.0).abs() <= 4.0 * f64::EPSILON
    }

    fn record(&self, m: &mut BTreeMap<String, String>) {
        m.insert("r".into(), fmt(self.r));
        m.insert("q".into(), fmt(self.q));
        if let Some(p) = self.p {
            m.insert("p".into(), fmt(p));
        }
        m.insert("region".into(), format!("{:?}", self.region));
    }
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Which operation and parameters produced a value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub operation: String,
    pub params: BTreeMap<String, String>,
}

impl Provenance {
    fn new(op: &str, f: &Field, p: &FunctionalParams) -> Self {
        let mut params = BTreeMap::new();
        params.insert("field".into(), f.id.clone());
        p.record(&mut params);
        Provenance { operation: op.into(), params }
    }

    fn with(mut self, key: &str, value: impl Into<String>) -> Self {
        self.params.insert(key.into(), value.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalValue {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations_used: u64,
    pub low_confidence: bool,
    pub provenance: Provenance,
}

impl FunctionalValue {
    fn from_quad(r: QuadResult, provenance: Provenance) -> Self {
        FunctionalValue {
            value: r.value,
            error_estimate: r.error_estimate,
            evaluations_used: r.evaluations_used,
            low_confidence: r.low_confidence,
            provenance,
        }
    }

    pub fn quad(&self) -> QuadResult {
        QuadResult {
            value: self.value,
            error_estimate: self.error_estimate,
            evaluations_used: self.evaluations_used,
            low_confidence: self.low_confidence,
        }
    }
}

/// Default deterministic method for a dimension.
pub fn default_method(dim: usize) -> Method {
    Method::Polar(SphereRule::default_for(dim))
}

/// Line tolerance derived from a budget.
pub fn line_tolerance(budget: &QuadBudget) -> Tolerance {
    Tolerance::new(1e-15, (budget.target_rel_error * 0.1).max(1e-12), budget.max_evaluations.max(200))
}

fn weighted(f: &Field, region: &Region, q: f64, w: &RadialWeight, budget: &QuadBudget, method: Method) -> Result<QuadResult> {
    match method {
        Method::Polar(rule) => polar_double_integral(f, region, q, w, rule, budget),
        Method::Stratified => stratified_double_integral(f, region, q, w, budget),
    }
}

/// `int int_{E x E} |u(x) - u(y)|^q / |x - y|^{N + rq} dy dx`.
pub fn gagliardo_seminorm_q(f: &Field, p: &FunctionalParams, budget: &QuadBudget, method: Method) -> Result<FunctionalValue> {
    let s = f.dim as f64 + p.rq();
    let r = double_integral_singular(f, &p.region, s, p.q, Window::Full, budget, method)?;
    Ok(FunctionalValue::from_quad(r, Provenance::new("gagliardo_seminorm_q", f, p).with("method", format!("{method:?}"))))
}

/// Shifts `|h| * n` with `|h|` log-spaced in `[lo, hi]` and `n` over the
/// antipodal halves of `rule` (the shift integral is even in `h`).
pub fn shift_grid(dim: usize, lo: f64, hi: f64, count: usize, rule: SphereRule) -> Result<Vec<Point>> {
    if !(lo > 0.0 && hi >= lo) || count == 0 {
        return input("shift grid needs 0 < lo <= hi and a positive count");
    }
    rule.validate(dim)?;
    let dirs = rule.half_nodes()?;
    let mut out = Vec::new();
    for k in 0..count {
        let t = if count == 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
        let rho = lo * (hi / lo).powf(t);
        for (n, _) in &dirs {
            out.push(along(ORIGIN, *n, rho));
        }
    }
    Ok(out)
}

/// Default shift grid: `|h|` from `1e-3` to twice the support radius, with
/// the support diameter itself included.
pub fn default_shift_grid(f: &Field) -> Result<Vec<Point>> {
    let r = f.support().map(|s| s.1).unwrap_or(1.0);
    let mut g = shift_grid(f.dim, 1e-3, 2.0 * r, 33, SphereRule::default_for(f.dim))?;
    g.extend(shift_grid(f.dim, 2.0 * r, 2.0 * r, 1, SphereRule::default_for(f.dim))?);
    Ok(g)
}

/// `max_h int chi_E(x) chi_E(x+h) |u(x+h) - u(x)|^q / |h|^{rq} dx` over a
/// finite shift grid; a lower bound for the supremum over all shifts.
pub fn besov_seminorm_q(f: &Field, p: &FunctionalParams, h_grid: &[Point], tol: Tolerance) -> Result<FunctionalValue> {
    if h_grid.is_empty() {
        return input("shift grid is empty");
    }
    let mut best = QuadResult::exact(0.0);
    let mut best_h = ORIGIN;
    let mut evals = 0;
    for h in h_grid {
        let rho = norm(*h);
        if rho == 0.0 {
            return input("shift grid must exclude zero");
        }
        let v = shift_integral(f, &p.region, *h, p.q, tol)?.scaled(rho.powf(-p.rq()));
        evals += v.evaluations_used;
        if v.value > best.value {
            best = v;
            best_h = *h;
        }
    }
    best.evaluations_used = evals;
    let prov = Provenance::new("besov_seminorm_q", f, p)
        .with("grid_size", h_grid.len().to_string())
        .with("argmax_h", format!("{:?}", &best_h[..f.dim]));
    Ok(FunctionalValue::from_quad(best, prov))
}

/// `int_E eps^{-N} int_{E ∩ B_eps(x)} |u(x) - u(y)|^q / |x - y|^{rq} dy dx`.
pub fn brq_double_integral(f: &Field, p: &FunctionalParams, eps: f64, budget: &QuadBudget, method: Method) -> Result<FunctionalValue> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input("epsilon must be positive");
    }
    let w = RadialWeight::power(0.0, eps, eps.powi(-(f.dim as i32)), -p.rq());
    let r = weighted(f, &p.region, p.q, &w, budget, method)?;
    Ok(FunctionalValue::from_quad(r, Provenance::new("brq_double_integral", f, p).with("epsilon", fmt(eps))))
}

/// `int_E chi_E(x + eps n) |u(x + eps n) - u(x)|^q / eps^{rq} dx`.
pub fn directional_variation(f: &Field, p: &FunctionalParams, n: &[f64], eps: f64, tol: Tolerance) -> Result<FunctionalValue> {
    if n.len() != f.dim || n.iter().any(|v| !v.is_finite()) {
        return input("direction must be a finite vector of the field dimension");
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return input("epsilon must be positive");
    }
    let h = along(ORIGIN, point(n), eps);
    let r = shift_integral(f, &p.region, h, p.q, tol)?.scaled(eps.powf(-p.rq()));
    let prov = Provenance::new("directional_variation", f, p).with("epsilon", fmt(eps)).with("n", format!("{n:?}"));
    Ok(FunctionalValue::from_quad(r, prov))
}

/// The directional variation integrated over unit directions (unnormalized).
pub fn spherical_variation(f: &Field, p: &FunctionalParams, eps: f64, rule: SphereRule, tol: Tolerance) -> Result<FunctionalValue> {
    rule.validate(f.dim)?;
    let dim = f.dim;
    let prov = Provenance::new("spherical_variation", f, p).with("epsilon", fmt(eps)).with("rule", format!("{rule:?}"));
    let symmetric = dim > 1
        && f.radial_center().is_some_and(|c| match &p.region {
            Region::Whole => true,
            Region::Ball { center, .. } => *center == c,
            _ => false,
        });
    let eval = |n: Point| directional_variation(f, p, &n[..dim], eps, tol).map(|v| v.quad());
    if symmetric {
        let r = eval([1.0, 0.0, 0.0])?.scaled(sphere_measure(dim)?);
        return Ok(FunctionalValue::from_quad(r, prov.with("reduction", "rotation")));
    }
    // the shift integral is even in the direction
    let half = rule.half_nodes()?;
    let vals: Vec<QuadResult> = half.iter().map(|&(n, _)| eval(n)).collect::<Result<_>>()?;
    let mut total = QuadResult::exact(0.0);
    for ((_, w), v) in half.iter().zip(&vals) {
        total = total.plus(v.scaled(*w));
    }
    let sphere_err = match (rule, rule.coarser()) {
        (SphereRule::Trapezoid(_), Some(c)) if c.half_nodes().is_ok() => {
            let coarse: f64 = half.iter().zip(&vals).step_by(2).map(|((_, w), v)| 2.0 * w * v.value).sum();
            (total.value - coarse).abs()
        }
        (_, Some(c)) => {
            let mut coarse = 0.0;
            for (n, w) in c.half_nodes()? {
                coarse += w * eval(n)?.value;
            }
            (total.value - coarse).abs()
        }
        _ => 0.0,
    };
    total.error_estimate += sphere_err;
    Ok(FunctionalValue::from_quad(total, prov))
}

/// `int int_{E x E} rho_eps(|x - y|) |u(x) - u(y)|^q / |x - y|^{rq} dy dx`.
pub fn besov_constant_at(
    f: &Field,
    p: &FunctionalParams,
    k: &RadialKernelFamily,
    eps: Epsilon,
    budget: &QuadBudget,
    method: Method,
) -> Result<FunctionalValue> {
    if k.dim != f.dim {
        return input("kernel and field dimensions differ");
    }
    let w = k.profile(eps)?.times_power(-p.rq());
    let r = weighted(f, &p.region, p.q, &w, budget, method)?;
    let prov = Provenance::new("besov_constant_at", f, p)
        .with("kernel", k.kind.label())
        .with("epsilon", fmt(eps.value()))
        .with("ln_epsilon", fmt(eps.ln()));
    Ok(FunctionalValue::from_quad(r, prov))
}

/// `[u * eta_eps]^q_{W^{r,q}(E)} / |ln eps|`.
pub fn gagliardo_constant_at(
    f: &Field,
    m: &MollifierSpec,
    p: &FunctionalParams,
    eps: f64,
    budget: &QuadBudget,
    method: Method,
) -> Result<FunctionalValue> {
    if !(eps > 0.0 && eps < (-1.0f64).exp()) {
        return input(format!("gagliardo constants need epsilon in (0, 1/e), got {eps}"));
    }
    let ue = mollify(f, m, eps)?;
    let g = gagliardo_seminorm_q(&ue, p, budget, method)?;
    let prov = Provenance::new("gagliardo_constant_at", f, p)
        .with("mollifier", m.kind.label())
        .with("epsilon", fmt(eps))
        .with("method", format!("{method:?}"));
    Ok(FunctionalValue::from_quad(g.quad().scaled(1.0 / eps.ln().abs()), prov))
}

/// `||u||^q_{L^q}` and `[u]^q_{B^r_{q,inf}}` of a field on the whole space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldMoments {
    pub lq: f64,
    pub besov: f64,
}

pub fn field_moments(f: &Field, p: &FunctionalParams, tol: Tolerance) -> Result<FieldMoments> {
    let whole = FunctionalParams { region: Region::Whole, ..p.clone() };
    let lq = norm_q(f, &Region::Whole, p.q, tol)?.value;
    let besov = besov_seminorm_q(f, &whole, &default_shift_grid(f)?, tol)?.value;
    Ok(FieldMoments { lq, besov })
}

/// Right-hand sides of the three-region bounds for `g^eps` integrated over
/// `|z| >= gamma`, `beta <= |z| < gamma` and `|z| < beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitBounds {
    pub tail: f64,
    pub annulus: f64,
    pub core: f64,
}

pub fn gagliardo_split_bounds(
    m: &MollifierSpec,
    p: &FunctionalParams,
    moments: &FieldMoments,
    eps: f64,
    beta: f64,
    gamma: f64,
) -> Result<SplitBounds> {
    if !(beta > 0.0 && gamma > beta) {
        return input("split bounds need 0 < beta < gamma");
    }
    if !(eps > 0.0) {
        return input("epsilon must be positive");
    }
    let (q, rq) = (p.q, p.rq());
    let s = sphere_measure(m.dim)?;
    let l1 = m.abs_mass.powf(q);
    let two_q = 2f64.powf(q);
    Ok(SplitBounds {
        tail: l1 * two_q * moments.lq * s / (rq * gamma.powf(rq)),
        annulus: l1 * moments.besov * s * (gamma.ln() - beta.ln()),
        core: m.grad_mass.powf(q) * two_q * moments.lq * s / (q - rq) * beta.powf(q - rq) / eps.powf(q),
    })
}

/// The same three integrals measured for `u * eta_eps`.
pub fn measured_split(
    f: &Field,
    m: &MollifierSpec,
    p: &FunctionalParams,
    eps: f64,
    beta: f64,
    gamma: f64,
    budget: &QuadBudget,
    method: Method,
) -> Result<[QuadResult; 3]> {
    if !(beta > 0.0 && gamma > beta) {
        return input("split bounds need 0 < beta < gamma");
    }
    let ue = mollify(f, m, eps)?;
    let s = f.dim as f64 + p.rq();
    let run = |w| double_integral_singular(&ue, &Region::Whole, s, p.q, w, budget, method);
    Ok([run(Window::Annulus(gamma, f64::INFINITY))?, run(Window::Annulus(beta, gamma))?, run(Window::Ball(beta))?])
}

/// Uniform bound on `[u * eta_eps]^q_{W^{r,q}} / |ln eps|` over `eps in (0, 1/e)`.
pub fn uniform_gagliardo_bound(m: &MollifierSpec, p: &FunctionalParams, moments: &FieldMoments) -> Result<f64> {
    continuity_terms(m.abs_mass, m.grad_mass, m.dim, p, moments)
}

fn continuity_terms(l1: f64, grad: f64, dim: usize, p: &FunctionalParams, moments: &FieldMoments) -> Result<f64> {
    let (q, rq) = (p.q, p.rq());
    let s = sphere_measure(dim)?;
    let two_q = 2f64.powf(q);
    Ok(l1.powf(q) * two_q * moments.lq * s / rq
        + l1.powf(q) * moments.besov * s * q / (q - rq)
        + grad.powf(q) * two_q * moments.lq * s / (q - rq))
}

/// Bound on `|G(eta')^{1/q} - G(eta)^{1/q}|^q` in terms of `||eta' - eta||_{W^{1,1}}`.
pub fn continuity_bound(m: &MollifierSpec, other: &MollifierSpec, p: &FunctionalParams, moments: &FieldMoments) -> Result<f64> {
    let (l1, grad) = m.difference_norms(other)?;
    continuity_terms(l1, grad, m.dim, p, moments)
}

/// `||u - u_eps||^q_{L^q} / eps^{rq}` against
/// `||eta||_1^{q-1} [u]^q_B int |eta(v)| |v|^{rq} dv`.
pub fn lq_convergence_check(
    f: &Field,
    m: &MollifierSpec,
    p: &FunctionalParams,
    moments: &FieldMoments,
    eps: f64,
    tol: Tolerance,
) -> Result<(QuadResult, f64)> {
    let ue = mollify(f, m, eps)?;
    let lhs = distance_q(f, &ue, &Region::Whole, p.q, tol)?.scaled(eps.powf(-p.rq()));
    let rhs = m.abs_mass.powf(p.q - 1.0) * moments.besov * m.abs_moment(p.rq());
    Ok((lhs, rhs))
}

/// `[u]^q_{B^{1/q}_q}` against `|Du|^alpha ([u]^p_{B^{1/p}_p})^{1 - alpha}`
/// with `alpha = (p - q) / (p - 1)`.
pub fn interpolation_check(
    f: &Field,
    js: &JumpSetSpec,
    q: f64,
    p: f64,
    h_grid: &[Point],
    tol: Tolerance,
) -> Result<(FunctionalValue, f64)> {
    if !(q > 1.0 && p > q) {
        return input("interpolation needs 1 < q < p");
    }
    let pq = FunctionalParams::jump_regime(q, Region::Whole)?.with_p(p)?;
    let pp = FunctionalParams::jump_regime(p, Region::Whole)?;
    let lhs = besov_seminorm_q(f, &pq, h_grid, tol)?;
    let upper = besov_seminorm_q(f, &pp, h_grid, tol)?;
    let alpha = (p - q) / (p - 1.0);
    let tv = total_variation(js);
    let rhs = tv.powf(alpha) * upper.value.powf(1.0 - alpha);
    Ok((lhs, rhs))
}

/// `int |u(x+h) - u(x)| / |h| dx` against `|Du|(R^N)`.
pub fn variation_inequality_check(f: &Field, js: &JumpSetSpec, h: &[f64], tol: Tolerance) -> Result<(QuadResult, f64)> {
    if h.len() != f.dim {
        return input("shift dimension differs from field dimension");
    }
    let hp = point(h);
    let rho = norm(hp);
    if rho == 0.0 {
        return input("shift must be nonzero");
    }
    let lhs = shift_integral(f, &Region::Whole, hp, 1.0, tol)?.scaled(1.0 / rho);
    Ok((lhs, total_variation(js)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::jump_set_of;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn budget() -> QuadBudget {
        QuadBudget::new(4_000, 1e-7, 1).unwrap()
    }

    fn tol() -> Tolerance {
        Tolerance::new(1e-15, 1e-10, 4_000)
    }

    fn step() -> Field {
        Field::step(0.0, 1.0, 1.0).unwrap()
    }

    fn params() -> FunctionalParams {
        FunctionalParams::jump_regime(2.0, Region::interval(-1.0, 2.0)).unwrap()
    }

    #[test]
    fn params_validate() {
        assert!(FunctionalParams::new(1.5, 2.0, Region::Whole).is_err());
        assert!(FunctionalParams::new(0.5, 0.5, Region::Whole).is_err());
        assert!(params().is_jump_regime());
        assert!(params().with_p(1.5).is_err());
    }

    #[test]
    fn constant_field_gives_zero_everywhere() {
        let c = Field::constant(1, &[2.0]).unwrap();
        let p = params();
        let m1 = default_method(1);
        assert_eq!(gagliardo_seminorm_q(&c, &p, &budget(), m1).unwrap().value, 0.0);
        assert_eq!(besov_seminorm_q(&c, &p, &shift_grid(1, 0.01, 1.0, 5, SphereRule::Exact2pt).unwrap(), tol()).unwrap().value, 0.0);
        assert_eq!(brq_double_integral(&c, &p, 0.05, &budget(), m1).unwrap().value, 0.0);
        assert_eq!(spherical_variation(&c, &p, 0.01, SphereRule::Exact2pt, tol()).unwrap().value, 0.0);
        let k = RadialKernelFamily::trivial(1).unwrap();
        assert_eq!(besov_constant_at(&c, &p, &k, Epsilon::new(0.01).unwrap(), &budget(), m1).unwrap().value, 0.0);
        let m = MollifierSpec::tent(1).unwrap();
        assert_eq!(gagliardo_constant_at(&c, &m, &p, 0.01, &budget(), m1).unwrap().value, 0.0);
    }

    #[test]
    fn step_examples() {
        let u = step();
        let p = params();
        let grid = shift_grid(1, 0.01, 4.0, 17, SphereRule::Exact2pt).unwrap();
        let whole = FunctionalParams::jump_regime(2.0, Region::Whole).unwrap();
        assert_abs_diff_eq!(besov_seminorm_q(&u, &whole, &grid, tol()).unwrap().value, 2.0, epsilon = 1e-10);
        let u2 = Field::step(0.0, 1.0, 2.0).unwrap();
        assert_abs_diff_eq!(besov_seminorm_q(&u2, &whole, &grid, tol()).unwrap().value, 8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(directional_variation(&u, &p, &[1.0], 0.01, tol()).unwrap().value, 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(directional_variation(&u, &p, &[2.0], 0.01, tol()).unwrap().value, 4.0, epsilon = 1e-10);
        assert_eq!(directional_variation(&u, &p, &[0.0], 0.01, tol()).unwrap().value, 0.0);
        assert_abs_diff_eq!(spherical_variation(&u, &p, 0.01, SphereRule::Exact2pt, tol()).unwrap().value, 4.0, epsilon = 1e-10);
        let raw = gagliardo_seminorm_q(&u, &p, &budget(), default_method(1));
        assert!(matches!(raw, Err(crate::Error::Divergence(_))));
    }

    /// Symbolic oracle for the unit step on `[0, 1)` with `|h| <= 1`:
    /// `D(h) = 2|h|`, so with weight `eps^{-1} |h|^{-1}` on `|h| < eps`
    /// `int D(h) eps^{-1} |h|^{-1} dh = 2 * 2 = 4` for every `eps <= 1`.
    #[test]
    fn localized_double_integral_of_step() {
        let u = step();
        let p = params();
        let v = brq_double_integral(&u, &p, 0.05, &budget(), default_method(1)).unwrap();
        assert_abs_diff_eq!(v.value, 4.0, epsilon = 1e-8);
        let k = RadialKernelFamily::trivial(1).unwrap();
        let b = besov_constant_at(&u, &p, &k, Epsilon::new(0.05).unwrap(), &budget(), default_method(1)).unwrap();
        // unit ball volume in 1D is 2
        assert_abs_diff_eq!(v.value, 2.0 * b.value, epsilon = 1e-8);
    }

    #[test]
    fn checks_on_step() {
        let u = step();
        let js = jump_set_of(&u).unwrap();
        for (h, want) in [(0.05, 2.0), (0.5, 2.0), (4.0, 0.5)] {
            let (lhs, tv) = variation_inequality_check(&u, &js, &[h], tol()).unwrap();
            assert_abs_diff_eq!(lhs.value, want, epsilon = 1e-10);
            assert_eq!(tv, 2.0);
        }
        let grid = shift_grid(1, 0.01, 4.0, 17, SphereRule::Exact2pt).unwrap();
        let (lhs, rhs) = interpolation_check(&u, &js, 2.0, 3.0, &grid, tol()).unwrap();
        assert_abs_diff_eq!(lhs.value, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rhs, 2.0, epsilon = 1e-9);
        let u2 = Field::step(0.0, 1.0, 2.0).unwrap();
        let js2 = jump_set_of(&u2).unwrap();
        let (lhs, rhs) = interpolation_check(&u2, &js2, 2.0, 3.0, &grid, tol()).unwrap();
        // 8 <= 4^{1/2} 16^{1/2}
        assert!(lhs.value <= rhs + 1e-9);
        assert!(interpolation_check(&u, &js, 3.0, 2.0, &grid, tol()).is_err());
    }

    #[test]
    fn uniform_bound_for_step_and_tent() {
        let m = MollifierSpec::tent(1).unwrap();
        let p = params();
        let mo = field_moments(&step(), &p, tol()).unwrap();
        assert_abs_diff_eq!(mo.lq, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mo.besov, 2.0, epsilon = 1e-9);
        // 8 + 8 + 32
        assert_abs_diff_eq!(uniform_gagliardo_bound(&m, &p, &mo).unwrap(), 48.0, epsilon = 1e-7);
        let sb = gagliardo_split_bounds(&m, &p, &mo, 0.05, 0.01, 1.0).unwrap();
        assert!(sb.tail > 0.0 && sb.annulus > 0.0 && sb.core > 0.0);
        assert!(gagliardo_split_bounds(&m, &p, &mo, 0.05, 1.0, 1.0).is_err());
        let far = gagliardo_split_bounds(&m, &p, &mo, 0.05, 0.01, 1e12).unwrap();
        assert!(far.tail < 1e-5);
    }

    #[test]
    fn split_measurements_respect_bounds() {
        let u = step();
        let m = MollifierSpec::tent(1).unwrap();
        let p = params();
        let mo = field_moments(&u, &p, tol()).unwrap();
        let eps: f64 = 0.05;
        let beta = eps.powf(2.0);
        let got = measured_split(&u, &m, &p, eps, beta, 1.0, &budget(), default_method(1)).unwrap();
        let b = gagliardo_split_bounds(&m, &p, &mo, eps, beta, 1.0).unwrap();
        for (r, bound) in got.iter().zip([b.tail, b.annulus, b.core]) {
            assert!(r.value <= bound + 3.0 * r.error_estimate, "{} > {}", r.value, bound);
        }
    }

    #[test]
    fn lq_convergence_on_step() {
        let m = MollifierSpec::tent(1).unwrap();
        let p = params();
        let mo = field_moments(&step(), &p, tol()).unwrap();
        for eps in [0.2, 0.05, 0.01] {
            let (lhs, rhs) = lq_convergence_check(&step(), &m, &p, &mo, eps, tol()).unwrap();
            assert!(lhs.value <= rhs + 3.0 * lhs.error_estimate);
        }
    }

    #[test]
    fn gagliardo_constant_of_step_is_finite() {
        let m = MollifierSpec::tent(1).unwrap();
        let v = gagliardo_constant_at(&step(), &m, &params(), 0.01, &budget(), default_method(1)).unwrap();
        assert!(v.value > 0.0 && v.value < 48.0);
        assert!(gagliardo_constant_at(&step(), &m, &params(), 0.5, &budget(), default_method(1)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn homogeneity(lambda in prop::sample::select(vec![-1.0, 2.0]), eps in 0.01f64..0.2) {
            let p = params();
            let u = step();
            let lu = Field::step(0.0, 1.0, lambda).unwrap();
            let s = lambda.abs().powf(p.q);
            let a = brq_double_integral(&u, &p, eps, &budget(), default_method(1)).unwrap();
            let b = brq_double_integral(&lu, &p, eps, &budget(), default_method(1)).unwrap();
            prop_assert!((b.value - s * a.value).abs() <= 3.0 * (b.error_estimate + s * a.error_estimate) + 1e-9);
            let a = directional_variation(&u, &p, &[1.0], eps, tol()).unwrap();
            let b = directional_variation(&lu, &p, &[1.0], eps, tol()).unwrap();
            prop_assert!((b.value - s * a.value).abs() <= 1e-9);
        }

        #[test]
        fn triangle_inequality(a in 0.0f64..0.8, w in 0.1f64..1.0, amp in -2.0f64..2.0, eps in 0.02f64..0.3) {
            let p = params();
            let u = step();
            let v = Field::step(a, a + w, amp).unwrap();
            let sum = Field::piecewise_constant(1, vec![
                (Region::interval(a, (a + w).min(1.0)), vec![1.0 + amp]),
                (Region::interval(0.0, 1.0), vec![1.0]),
                (Region::interval(a, a + w), vec![amp]),
            ], &[0.0]).unwrap();
            let f = |x: &Field| brq_double_integral(x, &p, eps, &budget(), default_method(1)).unwrap();
            let (fu, fv, fs) = (f(&u), f(&v), f(&sum));
            let q = p.q;
            prop_assert!(fs.value.powf(1.0 / q) <= fu.value.powf(1.0 / q) + fv.value.powf(1.0 / q) + 1e-6);
        }

        #[test]
        fn besov_constant_below_besov_seminorm(e in -4.0f64..-1.5, which in 0usize..3) {
            let u = step();
            let whole = FunctionalParams::jump_regime(2.0, Region::Whole).unwrap();
            let eps = Epsilon::from_ln(e).unwrap();
            let k = match which {
                0 => RadialKernelFamily::trivial(1).unwrap(),
                1 => RadialKernelFamily::logarithmic(0.5, 1).unwrap(),
                _ => RadialKernelFamily::sigma_approx(1).unwrap(),
            };
            let bc = besov_constant_at(&u, &whole, &k, eps, &budget(), default_method(1)).unwrap();
            let bs = besov_seminorm_q(&u, &whole, &default_shift_grid(&u).unwrap(), tol()).unwrap();
            prop_assert!(bc.value <= bs.value + 3.0 * bc.error_estimate + 1e-9);
        }
    }
}
