//! Double integrals `int int_{E x E} w(|x - y|) |u(x) - u(y)|^q dy dx`.
//!
//! With `z = y - x` the integral becomes `int w(|z|) D(z) dz`, where `D` is
//! the shift integral. The default path integrates `D` in polar form: a
//! sphere rule over antipodal pairs of directions (`D(-z) = D(z)`) and
//! adaptive Gauss-Kronrod in `ln |z|`. A seeded stratified Monte Carlo
//! estimator over `(x, ln |z|, z / |z|)` is kept as an independent check.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{input, Error, Result};
use crate::fields::{diff_norm, Field};
use crate::geometry::{add, along, norm, point, sub, Point, Region};
use crate::parallel;
use crate::quadrature::lines::{pair_integral, shift_integral};
use crate::quadrature::{adaptive_par, sphere_measure, PowerPiece, QuadBudget, QuadResult, RadialWeight, SphereRule, Tolerance};

/// Radial window applied to the weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Window {
    Full,
    /// `beta <= |z| < gamma`
    Annulus(f64, f64),
    /// `|z| < eps`
    Ball(f64),
}

impl Window {
    pub fn apply(&self, w: &RadialWeight) -> Result<RadialWeight> {
        match *self {
            Window::Full => Ok(w.clone()),
            Window::Annulus(b, g) => {
                if !(b >= 0.0 && g > b) {
                    return input("annulus window needs 0 <= beta < gamma");
                }
                Ok(w.window(b, g))
            }
            Window::Ball(e) => {
                if !(e > 0.0) {
                    return input("ball window needs a positive radius");
                }
                Ok(w.window(0.0, e))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    Polar(SphereRule),
    Stratified,
}

/// `int_{R^N} w(|z|) D(z) dz` with `D(z) = int chi_E(x) chi_E(x+z) |u(x+z) - u(x)|^q dx`.
pub fn polar_double_integral(
    u: &Field,
    region: &Region,
    q: f64,
    weight: &RadialWeight,
    rule: SphereRule,
    budget: &QuadBudget,
) -> Result<QuadResult> {
    budget.validate()?;
    let dim = u.dim;
    rule.validate(dim)?;
    if !(q > 0.0) {
        return input("q must be positive");
    }
    let Some((ln_lo_w, ln_hi_w)) = weight.ln_support() else {
        return Ok(QuadResult::exact(0.0));
    };
    if let Some(v) = u.max_amplitude() {
        if v == 0.0 {
            return Ok(QuadResult::exact(0.0));
        }
    }
    // A rotation-invariant integrand needs a single direction.
    let symmetric = dim > 1
        && u.radial_center().is_some_and(|c| match region {
            Region::Whole => true,
            Region::Ball { center, .. } => *center == c,
            _ => false,
        });
    let half = if symmetric { vec![([1.0, 0.0, 0.0], sphere_measure(dim)?)] } else { rule.half_nodes()? };
    let coarse: Option<Vec<(Point, f64)>> = match rule.coarser().filter(|_| !symmetric) {
        Some(c) if matches!(rule, SphereRule::Trapezoid(_)) => {
            if c.half_nodes().is_ok() {
                Some(half.iter().step_by(2).map(|&(n, w)| (n, 2.0 * w)).collect())
            } else {
                None
            }
        }
        Some(c) => c.half_nodes().ok(),
        None => None,
    };
    let line_tol = Tolerance::new(1e-15, (budget.target_rel_error * 0.05).max(1e-12), 4_000);

    // Upper radius beyond which D is known in closed form.
    let e_ball = region.bounding_ball(dim);
    let supp = u.support();
    let mut far_tail = QuadResult::exact(0.0);
    let rho_far = match (e_ball, supp) {
        (Some((_, re)), _) => 2.0 * re,
        (None, Some((_, rs))) if region.is_whole() => {
            let rho_far = (2.0 * rs).max(1e-300);
            let ln_far = rho_far.ln();
            if ln_hi_w > ln_far {
                let far = u.far_value();
                let mass = pair_integral(u, u, region, point(&[0.0]), |a, _| diff_norm(a, &far).powf(q), line_tol)?;
                let w_mass = weight.moment(dim, rho_far, f64::INFINITY)?;
                let s = sphere_measure(dim)?;
                far_tail = mass.scaled(2.0 * s * w_mass);
            }
            rho_far
        }
        _ => return input("region must be bounded or the whole space with a field of bounded support"),
    };
    let ln_hi = ln_hi_w.min(rho_far.ln());

    let mut scales = Vec::new();
    u.radial_scales(&mut scales);
    if let Some((_, re)) = e_ball {
        scales.push(re);
    }
    let smallest = scales.iter().copied().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min);
    let smallest = if smallest.is_finite() { smallest } else { 1.0 };
    let ln_min = (1e-6 * smallest).ln();
    let ln_lo = ln_lo_w.max(ln_min);
    if !(ln_hi > ln_lo) {
        return Ok(far_tail);
    }
    let mut ln_breaks = weight.ln_breaks();
    ln_breaks.extend(scales.iter().filter(|s| **s > 0.0).map(|s| s.ln()));
    let n = dim as f64;

    let per_dir_budget = (budget.max_evaluations / half.len().max(1) as u64).max(60);
    let radial = |dir: Point| -> Result<(QuadResult, f64)> {
        let d_at = |rho: f64| -> f64 {
            shift_integral(u, region, along([0.0; 3], dir, rho), q, line_tol).map(|r| r.value).unwrap_or(f64::NAN)
        };
        let g = |t: f64| {
            let lw = weight.ln_eval(t);
            if lw == f64::NEG_INFINITY {
                return 0.0;
            }
            let dv = d_at(t.exp());
            if dv == 0.0 { 0.0 } else { dv * (lw + n * t).exp() }
        };
        let tol = Tolerance::new(1e-300, budget.target_rel_error * 0.3, per_dir_budget);
        let res = adaptive_par(g, ln_lo, ln_hi, &ln_breaks, tol);
        if !res.value.is_finite() {
            return Err(Error::Divergence("double integral is not finite".into()));
        }
        // Contribution of |z| < rho_min from the local power law of D.
        let mut tail = 0.0;
        let mut tail_err = 0.0;
        if ln_lo_w < ln_min {
            let r0 = ln_min.exp();
            let d0 = d_at(r0);
            if d0 > 0.0 {
                let d1 = d_at(0.5 * r0);
                let k = (d0 / d1).log2();
                let piece = weight.pieces.iter().find(|p| p.ln_lo <= ln_min && ln_min < p.ln_hi).copied();
                if let Some(PowerPiece { power, .. }) = piece {
                    let e = k + n + power;
                    if !(e > 0.02) {
                        return Err(Error::Divergence(format!(
                            "integrand behaves like |z|^{:.3} near zero; the double integral diverges",
                            e - 1.0
                        )));
                    }
                    tail = d0 * (weight.ln_eval(ln_min) + n * ln_min).exp() / e;
                    tail_err = 0.05 * tail;
                }
            }
        }
        Ok((QuadResult { value: res.value + tail, ..res }, tail_err))
    };

    let results: Vec<Result<(QuadResult, f64)>> = half.iter().map(|&(dir, _)| radial(dir)).collect();
    let mut total = QuadResult::exact(0.0);
    let mut fine_values = Vec::with_capacity(half.len());
    for ((_, w), r) in half.iter().zip(results) {
        let (res, tail_err) = r?;
        fine_values.push(res.value);
        total = total.plus(QuadResult { error_estimate: res.error_estimate + tail_err, ..res }.scaled(*w));
    }
    let sphere_err = match coarse {
        Some(cn) if matches!(rule, SphereRule::Trapezoid(_)) => {
            let c: f64 = cn.iter().zip(fine_values.iter().step_by(2)).map(|((_, w), v)| w * v).sum();
            (total.value - c).abs()
        }
        Some(cn) => {
            let mut c = 0.0;
            for (dir, w) in cn {
                let (res, _) = radial(dir)?;
                c += w * res.value;
            }
            (total.value - c).abs()
        }
        None => 0.0,
    };
    total.error_estimate += sphere_err;
    let total = total.plus(far_tail);
    if total.value.abs() > 1e12 {
        return Err(Error::Divergence(format!("double integral {:e} exceeds the overflow guard", total.value)));
    }
    Ok(total)
}

/// Seeded stratified Monte Carlo estimate of the same double integral over
/// a bounded `E`, restricted to `rho_min <= |z| < diam(E)`.
pub fn stratified_double_integral(
    u: &Field,
    region: &Region,
    q: f64,
    weight: &RadialWeight,
    budget: &QuadBudget,
) -> Result<QuadResult> {
    budget.validate()?;
    let dim = u.dim;
    let Some((lo, hi)) = region.bounds(dim) else {
        return input("stratified sampling needs a bounded region");
    };
    let Some((ln_lo_w, ln_hi_w)) = weight.ln_support() else {
        return Ok(QuadResult::exact(0.0));
    };
    let diam = norm(sub(hi, lo));
    let ln_lo = ln_lo_w.max((1e-6 * u.smallest_scale().min(diam)).ln());
    let ln_hi = ln_hi_w.min(diam.ln());
    if !(ln_hi > ln_lo) {
        return Ok(QuadResult::exact(0.0));
    }
    let radial_bins = 24usize;
    let angular_bins = match dim {
        1 => 2usize,
        2 => 16,
        _ => 24,
    };
    let strata = radial_bins * angular_bins;
    let per = (budget.max_evaluations / strata as u64).max(2);
    let vol: f64 = (0..dim).map(|a| hi[a] - lo[a]).product();
    let s_meas = sphere_measure(dim)?;
    let dt = (ln_hi - ln_lo) / radial_bins as f64;
    let n = dim as f64;

    let ids: Vec<usize> = (0..strata).collect();
    let sums: Vec<(f64, f64)> = parallel::map(&ids, |&k| {
        let (rb, ab) = (k / angular_bins, k % angular_bins);
        let mut rng = ChaCha8Rng::seed_from_u64(budget.rng_seed);
        rng.set_stream(k as u64);
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for _ in 0..per {
            let t = ln_lo + dt * (rb as f64 + rng.random::<f64>());
            let dir = sample_direction(dim, ab, angular_bins, &mut rng);
            let mut x = [0.0; 3];
            for a in 0..dim {
                x[a] = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
            }
            let y = add(x, along([0.0; 3], dir, t.exp()));
            let v = if region.contains(&x) && region.contains(&y) {
                let lw = weight.ln_eval(t);
                let du = diff_norm(&u.eval(&x), &u.eval(&y));
                if lw == f64::NEG_INFINITY || du == 0.0 {
                    0.0
                } else {
                    du.powf(q) * (lw + n * t).exp()
                }
            } else {
                0.0
            };
            s1 += v;
            s2 += v * v;
        }
        (s1, s2)
    });
    // measure of one stratum in (x, t, direction) space
    let cell = vol * dt * s_meas / angular_bins as f64;
    let mut value = 0.0;
    let mut var = 0.0;
    let m = per as f64;
    for (s1, s2) in sums {
        let mean = s1 / m;
        let v = ((s2 / m - mean * mean).max(0.0)) / (m - 1.0);
        value += cell * mean;
        var += cell * cell * v;
    }
    let error_estimate = var.sqrt();
    Ok(QuadResult {
        value,
        error_estimate,
        evaluations_used: per * strata as u64,
        low_confidence: error_estimate > budget.target_rel_error * value.abs(),
    })
}

fn sample_direction(dim: usize, bin: usize, bins: usize, rng: &mut ChaCha8Rng) -> Point {
    use std::f64::consts::PI;
    match dim {
        1 => [if bin == 0 { 1.0 } else { -1.0 }, 0.0, 0.0],
        2 => {
            let phi = 2.0 * PI * (bin as f64 + rng.random::<f64>()) / bins as f64;
            [phi.cos(), phi.sin(), 0.0]
        }
        _ => {
            // 4 height bands times 6 longitude sectors, equal area each
            let (zb, pb) = (bin / 6, bin % 6);
            let z = -1.0 + 0.5 * (zb as f64 + rng.random::<f64>());
            let phi = 2.0 * PI * (pb as f64 + rng.random::<f64>()) / 6.0;
            let s = (1.0 - z * z).max(0.0).sqrt();
            [s * phi.cos(), s * phi.sin(), z]
        }
    }
}

/// `int int_{E x E, |x-y| in window} |u(x) - u(y)|^q / |x - y|^s dy dx`.
pub fn double_integral_singular(
    u: &Field,
    region: &Region,
    s: f64,
    q: f64,
    window: Window,
    budget: &QuadBudget,
    method: Method,
) -> Result<QuadResult> {
    if !s.is_finite() {
        return input("weight exponent must be finite");
    }
    let w = window.apply(&RadialWeight::power(0.0, f64::INFINITY, 1.0, -s))?;
    match method {
        Method::Polar(rule) => polar_double_integral(u, region, q, &w, rule, budget),
        Method::Stratified => stratified_double_integral(u, region, q, &w, budget),
    }
}
