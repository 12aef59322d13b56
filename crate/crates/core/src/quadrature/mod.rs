//! Deterministic integration rules: Gauss-Kronrod panels with a global
//! adaptive driver, Gauss-Legendre rules, sphere rules with the unnormalized
//! surface measure, and radial integrals with an exact path for piecewise
//! power profiles.

pub mod lines;
pub mod singular;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::geometry::Point;
use crate::parallel;

/// Limits for one integration call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadBudget {
    pub max_evaluations: u64,
    pub target_rel_error: f64,
    pub rng_seed: u64,
}

impl QuadBudget {
    pub fn new(max_evaluations: u64, target_rel_error: f64, rng_seed: u64) -> Result<Self> {
        let b = QuadBudget { max_evaluations, target_rel_error, rng_seed };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_evaluations < 1 {
            return input("budget.max_evaluations must be at least 1");
        }
        if !(self.target_rel_error > 0.0 && self.target_rel_error < 1.0) {
            return input("budget.target_rel_error must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }
}

impl Default for QuadBudget {
    fn default() -> Self {
        QuadBudget { max_evaluations: 4_000, target_rel_error: 1e-6, rng_seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations_used: u64,
    /// Budget ran out before the target accuracy was reached.
    pub low_confidence: bool,
}

impl QuadResult {
    pub fn exact(value: f64) -> Self {
        QuadResult { value, error_estimate: 0.0, evaluations_used: 0, low_confidence: false }
    }

    pub fn scaled(self, s: f64) -> Self {
        QuadResult { value: self.value * s, error_estimate: self.error_estimate * s.abs(), ..self }
    }

    pub fn plus(self, o: QuadResult) -> Self {
        QuadResult {
            value: self.value + o.value,
            error_estimate: self.error_estimate + o.error_estimate,
            evaluations_used: self.evaluations_used + o.evaluations_used,
            low_confidence: self.low_confidence || o.low_confidence,
        }
    }
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// The fifteen Kronrod abscissae of `[a, b]`, left to right.
pub fn gk15_nodes(a: f64, b: f64) -> [f64; 15] {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut x = [0.0; 15];
    for j in 0..7 {
        x[j] = c - h * XGK[j];
        x[14 - j] = c + h * XGK[j];
    }
    x[7] = c;
    x
}

/// Kronrod estimate and QUADPACK-style error from values at `gk15_nodes`.
pub fn gk15_combine(a: f64, b: f64, f: &[f64; 15]) -> (f64, f64) {
    let h = 0.5 * (b - a);
    let fc = f[7];
    let mut rk = WGK[7] * fc;
    let mut rg = WG[3] * fc;
    let mut rabs = rk.abs();
    for j in 0..7 {
        let s = f[j] + f[14 - j];
        rk += WGK[j] * s;
        rabs += WGK[j] * (f[j].abs() + f[14 - j].abs());
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    let mean = 0.5 * rk;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((f[j] - mean).abs() + (f[14 - j] - mean).abs());
    }
    let value = rk * h;
    let resabs = rabs * h.abs();
    let resasc = asc * h.abs();
    let mut err = ((rk - rg) * h).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * resabs);
    }
    if !value.is_finite() {
        err = f64::INFINITY;
    }
    (value, err)
}

pub fn gk15<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> (f64, f64) {
    let x = gk15_nodes(a, b);
    let mut v = [0.0; 15];
    for (slot, &xi) in v.iter_mut().zip(&x) {
        *slot = f(xi);
    }
    gk15_combine(a, b, &v)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err).then_with(|| o.a.total_cmp(&self.a))
    }
}

/// Accuracy request for [`adaptive`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_evaluations: u64,
}

impl Tolerance {
    pub fn new(abs: f64, rel: f64, max_evaluations: u64) -> Self {
        Tolerance { abs, rel, max_evaluations }
    }
}

/// Global adaptive Gauss-Kronrod over the finite interval split at `breaks`.
///
/// `batch` receives abscissae and returns integrand values in the same
/// order, so expensive integrands can evaluate a whole batch in parallel.
pub fn adaptive_batched<B>(mut batch: B, breaks: &[f64], tol: Tolerance) -> QuadResult
where
    B: FnMut(&[f64]) -> Vec<f64>,
{
    let mut edges: Vec<f64> = breaks.iter().copied().filter(|x| x.is_finite()).collect();
    crate::geometry::sort_dedup(&mut edges, 0.0);
    if edges.len() < 2 {
        return QuadResult::exact(0.0);
    }
    let width = edges[edges.len() - 1] - edges[0];
    let min_width = width * 1e-13;

    let mut xs = Vec::with_capacity(15 * (edges.len() - 1));
    for w in edges.windows(2) {
        xs.extend_from_slice(&gk15_nodes(w[0], w[1]));
    }
    let vals = batch(&xs);
    let mut evals = xs.len() as u64;
    let mut heap = BinaryHeap::new();
    let mut finished = Vec::new();
    for (k, w) in edges.windows(2).enumerate() {
        let mut v = [0.0; 15];
        v.copy_from_slice(&vals[15 * k..15 * k + 15]);
        let (value, err) = gk15_combine(w[0], w[1], &v);
        heap.push(Panel { a: w[0], b: w[1], value, err });
    }

    let total = |heap: &BinaryHeap<Panel>, done: &[Panel]| -> (f64, f64) {
        let mut v = 0.0;
        let mut e = 0.0;
        let mut all: Vec<&Panel> = heap.iter().chain(done.iter()).collect();
        all.sort_by(|p, q| p.a.total_cmp(&q.a));
        for p in all {
            v += p.value;
            e += p.err;
        }
        (v, e)
    };

    let mut low_confidence = false;
    loop {
        let (v, e) = total(&heap, &finished);
        if !(e > tol.abs.max(tol.rel * v.abs())) {
            break;
        }
        if evals + 30 > tol.max_evaluations {
            low_confidence = true;
            break;
        }
        let Some(worst) = heap.pop() else { break };
        if worst.b - worst.a <= min_width || !worst.err.is_finite() && worst.b - worst.a <= min_width {
            finished.push(worst);
            if heap.is_empty() {
                low_confidence = true;
                break;
            }
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let mut xs = Vec::with_capacity(30);
        xs.extend_from_slice(&gk15_nodes(worst.a, m));
        xs.extend_from_slice(&gk15_nodes(m, worst.b));
        let vals = batch(&xs);
        evals += 30;
        let mut l = [0.0; 15];
        let mut r = [0.0; 15];
        l.copy_from_slice(&vals[..15]);
        r.copy_from_slice(&vals[15..]);
        let (lv, le) = gk15_combine(worst.a, m, &l);
        let (rv, re) = gk15_combine(m, worst.b, &r);
        heap.push(Panel { a: worst.a, b: m, value: lv, err: le });
        heap.push(Panel { a: m, b: worst.b, value: rv, err: re });
    }
    let (value, error_estimate) = total(&heap, &finished);
    QuadResult { value, error_estimate, evaluations_used: evals, low_confidence }
}

/// Sequential global adaptive quadrature over `[a, b]` with interior breaks.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> QuadResult {
    let edges = clip_breaks(a, b, breaks);
    adaptive_batched(|xs| xs.iter().map(|&x| f(x)).collect(), &edges, tol)
}

/// Parallel variant: each batch of abscissae is evaluated concurrently.
pub fn adaptive_par<F: Fn(f64) -> f64 + Sync>(f: F, a: f64, b: f64, breaks: &[f64], tol: Tolerance) -> QuadResult {
    let edges = clip_breaks(a, b, breaks);
    adaptive_batched(|xs| parallel::map(xs, |&x| f(x)), &edges, tol)
}

/// `[a, breaks inside (a, b)..., b]`
pub fn clip_breaks(a: f64, b: f64, breaks: &[f64]) -> Vec<f64> {
    let mut edges = vec![a, b];
    edges.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    crate::geometry::sort_dedup(&mut edges, 0.0);
    edges
}

/// Adaptive integral over an interval whose ends may be infinite. Infinite
/// ends are mapped with `t = t0 +- u / (1 - u)`.
pub fn adaptive_unbounded<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    tol: Tolerance,
) -> QuadResult {
    let inner: Vec<f64> = {
        let mut v: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b && x.is_finite()).collect();
        crate::geometry::sort_dedup(&mut v, 0.0);
        v
    };
    let lo = if a.is_finite() { a } else { inner.first().copied().unwrap_or(0.0).min(b) };
    let hi = if b.is_finite() { b } else { inner.last().copied().unwrap_or(lo).max(lo) };
    let share = |n: u64| Tolerance { abs: tol.abs / 3.0, rel: tol.rel, max_evaluations: n };
    let mut res = QuadResult::exact(0.0);
    let budget = tol.max_evaluations / if a.is_finite() && b.is_finite() { 1 } else { 2 };
    if hi > lo {
        res = res.plus(adaptive(&mut f, lo, hi, &inner, share(budget)));
    }
    if !a.is_finite() {
        let g = |u: f64| {
            let w = 1.0 - u;
            if w <= 0.0 {
                return 0.0;
            }
            let t = lo - u / w;
            let v = f(t);
            if v == 0.0 { 0.0 } else { v / (w * w) }
        };
        res = res.plus(adaptive(g, 0.0, 1.0, &[], share(budget / 2)));
    }
    if !b.is_finite() {
        let g = |u: f64| {
            let w = 1.0 - u;
            if w <= 0.0 {
                return 0.0;
            }
            let t = hi + u / w;
            let v = f(t);
            if v == 0.0 { 0.0 } else { v / (w * w) }
        };
        res = res.plus(adaptive(g, 0.0, 1.0, &[], share(budget / 2)));
    }
    res
}

fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = 0.0;
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = wt;
        w[n - 1 - i] = wt;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, cached for `n <= 128`.
pub fn gauss_legendre(n: usize) -> &'static (Vec<f64>, Vec<f64>) {
    static CACHE: OnceLock<Vec<(Vec<f64>, Vec<f64>)>> = OnceLock::new();
    let table = CACHE.get_or_init(|| (0..=128).map(|k| if k == 0 { (vec![], vec![]) } else { legendre_rule(k) }).collect());
    &table[n.clamp(1, 128)]
}

/// `H^{N-1}(S^{N-1})`.
pub fn sphere_measure(dim: usize) -> Result<f64> {
    match dim {
        1 => Ok(2.0),
        2 => Ok(2.0 * PI),
        3 => Ok(4.0 * PI),
        _ => Err(Error::Capability(format!("dimension {dim} is not supported (1..=3)"))),
    }
}

/// Lebesgue measure of the unit ball.
pub fn unit_ball_volume(dim: usize) -> Result<f64> {
    Ok(sphere_measure(dim)? / dim as f64)
}

/// Quadrature rules on the unit sphere, all with the unnormalized measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SphereRule {
    /// The two points of `S^0`.
    Exact2pt,
    /// `M` equally spaced angles on the circle.
    Trapezoid(usize),
    /// Gauss-Legendre in the height times `2M` equally spaced longitudes.
    ProductLatLong(usize),
}

impl SphereRule {
    pub fn default_for(dim: usize) -> SphereRule {
        match dim {
            1 => SphereRule::Exact2pt,
            2 => SphereRule::Trapezoid(16),
            _ => SphereRule::ProductLatLong(6),
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match (self, dim) {
            (SphereRule::Exact2pt, 1) => Ok(()),
            (SphereRule::Trapezoid(m), 2) if *m >= 1 => Ok(()),
            (SphereRule::ProductLatLong(m), 3) if *m >= 1 => Ok(()),
            _ => input(format!("sphere rule {self:?} does not match dimension {dim}")),
        }
    }

    pub fn nodes(&self) -> Vec<(Point, f64)> {
        match *self {
            SphereRule::Exact2pt => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
            SphereRule::Trapezoid(m) => (0..m)
                .map(|j| {
                    let t = 2.0 * PI * j as f64 / m as f64;
                    ([t.cos(), t.sin(), 0.0], 2.0 * PI / m as f64)
                })
                .collect(),
            SphereRule::ProductLatLong(m) => {
                let (z, w) = gauss_legendre(m);
                let mut out = Vec::with_capacity(2 * m * m);
                for (zi, wi) in z.iter().zip(w) {
                    let s = (1.0 - zi * zi).sqrt();
                    for k in 0..2 * m {
                        let psi = PI * (k as f64 + 0.5) / m as f64;
                        out.push(([s * psi.cos(), s * psi.sin(), *zi], wi * PI / m as f64));
                    }
                }
                out
            }
        }
    }

    /// One node per antipodal pair with doubled weight, for integrands with
    /// `g(-n) = g(n)`.
    pub fn half_nodes(&self) -> Result<Vec<(Point, f64)>> {
        match *self {
            SphereRule::Exact2pt => Ok(vec![([1.0, 0.0, 0.0], 2.0)]),
            SphereRule::Trapezoid(m) => {
                if m % 2 != 0 {
                    return input("trapezoid sphere rule needs an even point count here");
                }
                Ok(self.nodes().into_iter().take(m / 2).map(|(n, w)| (n, 2.0 * w)).collect())
            }
            SphereRule::ProductLatLong(m) => {
                let (z, _) = gauss_legendre(m);
                let nodes = self.nodes();
                let mut out = Vec::new();
                for (i, zi) in z.iter().enumerate() {
                    for k in 0..2 * m {
                        let keep = *zi > 0.0 || (*zi == 0.0 && k < m);
                        if keep {
                            let (n, w) = nodes[i * 2 * m + k];
                            out.push((n, 2.0 * w));
                        }
                    }
                }
                Ok(out)
            }
        }
    }

    /// The rule used for the error estimate.
    pub fn coarser(&self) -> Option<SphereRule> {
        match *self {
            SphereRule::Exact2pt => None,
            SphereRule::Trapezoid(m) if m >= 2 => Some(SphereRule::Trapezoid(m / 2)),
            SphereRule::ProductLatLong(m) if m >= 2 => Some(SphereRule::ProductLatLong(m / 2)),
            _ => None,
        }
    }
}

/// `int_{S^{N-1}} g dH^{N-1}`; the error estimate compares with the coarser rule.
pub fn integrate_sphere<F: Fn(Point) -> f64>(g: F, dim: usize, rule: SphereRule) -> Result<QuadResult> {
    rule.validate(dim)?;
    let nodes = rule.nodes();
    let value: f64 = nodes.iter().map(|(n, w)| w * g(*n)).sum();
    let mut evals = nodes.len() as u64;
    let error_estimate = match rule.coarser() {
        None => 0.0,
        Some(c) => {
            let cn = c.nodes();
            evals += cn.len() as u64;
            let coarse: f64 = cn.iter().map(|(n, w)| w * g(*n)).sum();
            (value - coarse).abs()
        }
    };
    Ok(QuadResult { value, error_estimate, evaluations_used: evals, low_confidence: false })
}

/// `coeff * r^power` on `[lo, hi)`, stored through logarithms so that
/// extreme scales stay representable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPiece {
    pub ln_lo: f64,
    pub ln_hi: f64,
    pub ln_coeff: f64,
    pub power: f64,
}

impl PowerPiece {
    pub fn new(lo: f64, hi: f64, coeff: f64, power: f64) -> Self {
        PowerPiece { ln_lo: lo.ln(), ln_hi: hi.ln(), ln_coeff: coeff.ln(), power }
    }

    pub fn ln_eval(&self, ln_r: f64) -> f64 {
        if ln_r < self.ln_lo || ln_r >= self.ln_hi {
            f64::NEG_INFINITY
        } else {
            self.ln_coeff + self.power * ln_r
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        self.ln_eval(r.ln()).exp()
    }

    /// `int coeff r^power r^{dim-1} dr` over `[lo, hi) ∩ [e^ln_a, e^ln_b)`.
    pub fn moment(&self, dim: usize, ln_a: f64, ln_b: f64) -> Result<f64> {
        let lo = self.ln_lo.max(ln_a);
        let hi = self.ln_hi.min(ln_b);
        if !(hi > lo) {
            return Ok(0.0);
        }
        let k1 = self.power + dim as f64;
        if k1 == 0.0 {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Divergence("logarithmic divergence of radial power".into()));
            }
            return Ok((self.ln_coeff).exp() * (hi - lo));
        }
        let a = k1 * lo;
        let b = k1 * hi;
        if a.is_nan() || b.is_nan() {
            return Ok(0.0);
        }
        let (big, small) = if b > a { (b, a) } else { (a, b) };
        if big == f64::INFINITY {
            return Err(Error::Divergence("radial power integral diverges".into()));
        }
        let frac = -(small - big).exp_m1();
        Ok((self.ln_coeff + big).exp() * frac / k1.abs())
    }
}

/// A radial profile given as a sum of power pieces.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadialWeight {
    pub pieces: Vec<PowerPiece>,
}

impl RadialWeight {
    pub fn new(pieces: Vec<PowerPiece>) -> Self {
        RadialWeight { pieces }
    }

    /// Pure power `coeff r^power` on `[lo, hi)`.
    pub fn power(lo: f64, hi: f64, coeff: f64, power: f64) -> Self {
        RadialWeight { pieces: vec![PowerPiece::new(lo, hi, coeff, power)] }
    }

    pub fn eval(&self, r: f64) -> f64 {
        self.pieces.iter().map(|p| p.eval(r)).sum()
    }

    pub fn ln_eval(&self, ln_r: f64) -> f64 {
        let mut acc = 0.0;
        let mut best = f64::NEG_INFINITY;
        let vals: Vec<f64> = self.pieces.iter().map(|p| p.ln_eval(ln_r)).collect();
        for &v in &vals {
            best = best.max(v);
        }
        if best == f64::NEG_INFINITY {
            return best;
        }
        for v in vals {
            acc += (v - best).exp();
        }
        best + acc.ln()
    }

    /// Multiply by `r^p`.
    pub fn times_power(&self, p: f64) -> Self {
        RadialWeight {
            pieces: self.pieces.iter().map(|pc| PowerPiece { power: pc.power + p, ..*pc }).collect(),
        }
    }

    pub fn times(&self, c: f64) -> Self {
        RadialWeight {
            pieces: self.pieces.iter().map(|pc| PowerPiece { ln_coeff: pc.ln_coeff + c.ln(), ..*pc }).collect(),
        }
    }

    /// Restrict to `[lo, hi)`.
    pub fn window(&self, lo: f64, hi: f64) -> Self {
        let (a, b) = (lo.ln(), hi.ln());
        RadialWeight {
            pieces: self
                .pieces
                .iter()
                .filter_map(|pc| {
                    let l = pc.ln_lo.max(a);
                    let h = pc.ln_hi.min(b);
                    (h > l).then_some(PowerPiece { ln_lo: l, ln_hi: h, ..*pc })
                })
                .collect(),
        }
    }

    pub fn ln_support(&self) -> Option<(f64, f64)> {
        if self.pieces.is_empty() {
            return None;
        }
        let lo = self.pieces.iter().map(|p| p.ln_lo).fold(f64::INFINITY, f64::min);
        let hi = self.pieces.iter().map(|p| p.ln_hi).fold(f64::NEG_INFINITY, f64::max);
        Some((lo, hi))
    }

    pub fn ln_breaks(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.pieces.iter().flat_map(|p| [p.ln_lo, p.ln_hi]).collect();
        crate::geometry::sort_dedup(&mut v, 0.0);
        v
    }

    /// `int_a^b w(r) r^{dim-1} dr` without the sphere factor.
    pub fn moment(&self, dim: usize, a: f64, b: f64) -> Result<f64> {
        let (la, lb) = (a.ln(), b.ln());
        let mut acc = 0.0;
        for p in &self.pieces {
            acc += p.moment(dim, la, lb)?;
        }
        Ok(acc)
    }
}

/// `H^{N-1}(S^{N-1}) int_a^b w(r) r^{N-1} dr` through the exact power path.
pub fn radial_integral_pieces(w: &RadialWeight, dim: usize, a: f64, b: f64) -> Result<QuadResult> {
    let s = sphere_measure(dim)?;
    let (la, lb) = (a.ln(), b.ln());
    let mut value = 0.0;
    let mut scale = 0.0;
    for p in &w.pieces {
        let m = p.moment(dim, la, lb)?;
        value += m;
        scale += m.abs();
    }
    let value = s * value;
    let guard = 1e12;
    if value.abs() > guard {
        return Err(Error::Divergence(format!("radial integral {value:e} exceeds the overflow guard")));
    }
    Ok(QuadResult {
        value,
        error_estimate: 16.0 * f64::EPSILON * s * scale,
        evaluations_used: w.pieces.len() as u64,
        low_confidence: false,
    })
}

/// `H^{N-1}(S^{N-1}) int_a^b profile(r) r^{N-1} dr` by adaptive quadrature
/// in `t = ln r`. `breaks` are radii where the profile is not smooth.
pub fn radial_integral<F: Fn(f64) -> f64>(
    profile: F,
    dim: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    budget: &QuadBudget,
) -> Result<QuadResult> {
    budget.validate()?;
    let s = sphere_measure(dim)?;
    if !(b > a) || a < 0.0 {
        return input("radial_integral needs 0 <= a < b");
    }
    let n = dim as f64;
    let lb: Vec<f64> = breaks.iter().filter(|&&r| r > a && r < b).map(|r| r.ln()).collect();
    let g = |t: f64| {
        let r = t.exp();
        let v = profile(r);
        if v == 0.0 { 0.0 } else { v * (n * t).exp() }
    };
    let tol = Tolerance::new(1e-300, budget.target_rel_error.min(1e-10), budget.max_evaluations);
    let res = adaptive_unbounded(g, if a > 0.0 { a.ln() } else { f64::NEG_INFINITY }, b.ln(), &lb, tol);
    let res = res.scaled(s);
    if !res.value.is_finite() || res.value.abs() > 1e12 {
        return Err(Error::Divergence(format!("radial integral {:e} exceeds the overflow guard", res.value)));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gk15_is_exact_on_polynomials() {
        let (v, _) = gk15(|x| x.powi(7) - 2.0 * x * x, -1.0, 2.0);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - 2.0 * (8.0 + 1.0) / 3.0;
        assert_abs_diff_eq!(v, exact, epsilon = 1e-12);
    }

    #[test]
    fn adaptive_handles_kinks_and_infinite_ranges() {
        let r = adaptive(|x: f64| (x - 0.3).abs(), 0.0, 1.0, &[], Tolerance::new(1e-12, 1e-12, 100_000));
        assert_abs_diff_eq!(r.value, 0.5 * (0.09 + 0.49), epsilon = 1e-10);
        let r = adaptive_unbounded(|x: f64| (-x * x).exp(), f64::NEG_INFINITY, f64::INFINITY, &[], Tolerance::new(1e-13, 1e-12, 100_000));
        assert_abs_diff_eq!(r.value, PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn legendre_rule_integrates_degree_2n_minus_1() {
        let (x, w) = gauss_legendre(10);
        let v: f64 = x.iter().zip(w).map(|(x, w)| w * x.powi(18)).sum();
        assert_abs_diff_eq!(v, 2.0 / 19.0, epsilon = 1e-14);
    }

    #[test]
    fn sphere_rules_examples() {
        for dim in 1..=3 {
            let rule = SphereRule::default_for(dim);
            let r = integrate_sphere(|_| 1.0, dim, rule).unwrap();
            assert_abs_diff_eq!(r.value, sphere_measure(dim).unwrap(), epsilon = 1e-12);
            let odd = integrate_sphere(|n| n[0], dim, rule).unwrap();
            assert_abs_diff_eq!(odd.value, 0.0, epsilon = 1e-12);
        }
        let abs = integrate_sphere(|n| n[0].abs(), 2, SphereRule::Trapezoid(4096)).unwrap();
        assert_abs_diff_eq!(abs.value, 4.0, epsilon = 1e-5);
        assert!(integrate_sphere(|_| 1.0, 2, SphereRule::Exact2pt).is_err());
    }

    #[test]
    fn half_nodes_pair_antipodes() {
        for (dim, rule) in [(1, SphereRule::Exact2pt), (2, SphereRule::Trapezoid(16)), (3, SphereRule::ProductLatLong(5))] {
            let full: f64 = rule.nodes().iter().map(|(n, w)| w * n[0] * n[0]).sum();
            let half: f64 = rule.half_nodes().unwrap().iter().map(|(n, w)| w * n[0] * n[0]).sum();
            assert_abs_diff_eq!(full, half, epsilon = 1e-12);
            let _ = dim;
        }
    }

    #[test]
    fn radial_power_path() {
        // r^{-N} on [eps, R]
        for dim in 1..=3 {
            let (eps, big_r) = (1e-3, 0.7);
            let w = RadialWeight::power(eps, big_r, 1.0, -(dim as f64));
            let r = radial_integral_pieces(&w, dim, 0.0, f64::INFINITY).unwrap();
            let expect = sphere_measure(dim).unwrap() * (big_r.ln() - eps.ln());
            assert_abs_diff_eq!(r.value, expect, epsilon = 1e-13);
        }
        let zero = RadialWeight::default();
        assert_eq!(radial_integral_pieces(&zero, 2, 0.0, 1.0).unwrap().value, 0.0);
        let div = RadialWeight::power(0.0, 1.0, 1.0, -2.0);
        assert!(matches!(radial_integral_pieces(&div, 1, 0.0, 1.0), Err(Error::Divergence(_))));
    }

    #[test]
    fn radial_adaptive_matches_power_path() {
        let w = RadialWeight::power(0.01, 0.5, 3.0, -1.5);
        let exact = radial_integral_pieces(&w, 2, 0.0, f64::INFINITY).unwrap();
        let num = radial_integral(|r| w.eval(r), 2, 0.0, f64::INFINITY, &[0.01, 0.5], &QuadBudget::default()).unwrap();
        assert!((num.value - exact.value).abs() <= 3.0 * num.error_estimate.max(1e-12));
    }
}
