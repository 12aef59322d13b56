//! Deterministic shift integrals
//! `int chi_E(x) chi_E(x + h) phi(a(x), b(x + h)) dx`
//! computed line by line along `h`.
//!
//! Along every line the integrand is split at the feature crossings of both
//! fields and of `E`. Panels on which both fields are constant are summed
//! exactly; the rest get adaptive Gauss-Kronrod. The transverse coordinates
//! are integrated adaptively with breaks where lines become tangent to a
//! feature.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{input, Result};
use crate::fields::{Field, Vals};
use crate::geometry::{add, along, dot, norm, scale, sub, transverse_frame, Point, Region, ORIGIN};
use crate::quadrature::{adaptive, adaptive_par, QuadResult, Tolerance};

/// Evaluations spent on one line at most.
const LINE_BUDGET: u64 = 6_000;

struct Setup<'a, P> {
    a: &'a Field,
    b: &'a Field,
    region: &'a Region,
    shift: Point,
    dir: Point,
    phi: P,
    cover: Vec<(Point, f64)>,
    clip: Vec<(Point, f64)>,
    rel: f64,
    evals: AtomicU64,
    worst_rel: AtomicU64,
}

fn chord(c: Point, r: f64, p: Point, d: Point) -> Option<(f64, f64)> {
    let v = sub(c, p);
    let m = dot(v, d);
    let perp2 = dot(v, v) - m * m;
    let disc = r * r - perp2;
    (disc > 0.0).then(|| {
        let s = disc.sqrt();
        (m - s, m + s)
    })
}

fn hull(
    cover: &[(Point, f64)],
    clip: &[(Point, f64)],
    f: impl Fn(Point, f64) -> Option<(f64, f64)>,
) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &(c, r) in cover {
        if let Some((a, b)) = f(c, r) {
            lo = lo.min(a);
            hi = hi.max(b);
        }
    }
    for &(c, r) in clip {
        let (a, b) = f(c, r)?;
        lo = lo.max(a);
        hi = hi.min(b);
    }
    (hi > lo).then_some((lo, hi))
}

fn atomic_max(cell: &AtomicU64, v: f64) {
    let mut cur = cell.load(Ordering::Relaxed);
    while f64::from_bits(cur) < v {
        match cell.compare_exchange_weak(cur, v.to_bits(), Ordering::Relaxed, Ordering::Relaxed) {
            Ok(_) => break,
            Err(x) => cur = x,
        }
    }
}

impl<P: Fn(&Vals, &Vals) -> f64 + Sync> Setup<'_, P> {
    fn value_at(&self, x: Point) -> f64 {
        let y = add(x, self.shift);
        if !self.region.contains(&x) || !self.region.contains(&y) {
            return 0.0;
        }
        (self.phi)(&self.a.eval(&x), &self.b.eval(&y))
    }

    fn flat(&self, f: &Field, x: Point, half: f64) -> bool {
        f.constant_between_breaks() || f.flat_radius(&x) > half
    }

    /// Integral along `p + s dir`.
    fn line(&self, p: Point) -> f64 {
        let d = self.dir;
        let Some((s0, s1)) = hull(&self.cover, &self.clip, |c, r| chord(c, r, p, d)) else {
            return 0.0;
        };
        let mut br = Vec::new();
        let q = add(p, self.shift);
        self.a.line_breaks(p, d, 0.0, &mut br);
        self.b.line_breaks(q, d, 0.0, &mut br);
        self.region.line_crossings(p, d, &mut br);
        self.region.line_crossings(q, d, &mut br);
        let edges = super::clip_breaks(s0, s1, &br);
        let abs_floor = 1e-14 * (s1 - s0);
        let mut total = 0.0;
        let mut err = 0.0;
        let mut evals = 0;
        for w in edges.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = 0.5 * (lo + hi);
            let half = 0.5 * (hi - lo);
            let xm = along(p, d, mid);
            if self.flat(self.a, xm, half) && self.flat(self.b, add(xm, self.shift), half) {
                total += self.value_at(xm) * (hi - lo);
                evals += 1;
                continue;
            }
            let res = adaptive(
                |s| self.value_at(along(p, d, s)),
                lo,
                hi,
                &[],
                Tolerance::new(abs_floor, self.rel, LINE_BUDGET),
            );
            total += res.value;
            err += res.error_estimate;
            evals += res.evaluations_used;
        }
        self.evals.fetch_add(evals, Ordering::Relaxed);
        if total != 0.0 {
            atomic_max(&self.worst_rel, err / total.abs());
        } else if err > 0.0 {
            atomic_max(&self.worst_rel, 1.0);
        }
        total
    }

    fn feature_breaks(&self, p: Point, m: Point, slab: bool, out: &mut Vec<f64>) {
        self.a.transverse_breaks(p, self.dir, m, 0.0, slab, out);
        self.b.transverse_breaks(add(p, self.shift), self.dir, m, 0.0, slab, out);
        let pads = [0.0];
        if slab {
            self.region.slab_breaks(p, m, &pads, out);
            self.region.slab_breaks(add(p, self.shift), m, &pads, out);
        } else {
            self.region.transverse_breaks(p, self.dir, m, &pads, out);
            self.region.transverse_breaks(add(p, self.shift), self.dir, m, &pads, out);
        }
    }
}

/// `int chi_E(x) chi_E(x + h) phi(a(x), b(x + h)) dx` over `R^N`.
///
/// `phi` must be symmetric enough that its value is meaningful at the far
/// values; when `phi(far_a, far_b) != 0` the integrand does not decay and
/// `E` has to be bounded. `evaluations_used` counts integrand evaluations
/// of the innermost line integrals; `tol.max_evaluations` bounds the
/// transverse rule only.
pub fn pair_integral<P>(a: &Field, b: &Field, region: &Region, shift: Point, phi: P, tol: Tolerance) -> Result<QuadResult>
where
    P: Fn(&Vals, &Vals) -> f64 + Sync,
{
    let dim = a.dim;
    if b.dim != dim {
        return input("paired fields must share a dimension");
    }
    if !shift.iter().all(|v| v.is_finite()) {
        return input("shift must be finite");
    }
    let rho = norm(shift);
    let dir = if rho > 0.0 { scale(shift, 1.0 / rho) } else { [1.0, 0.0, 0.0] };
    let e_ball = region.bounding_ball(dim);
    let decays = phi(&a.far_value(), &b.far_value()) == 0.0;
    let mut clip = Vec::new();
    if let Some((c, r)) = e_ball {
        clip.push((c, r));
        clip.push((sub(c, shift), r));
    }
    let cover = match (a.support(), b.support(), decays) {
        (Some((ca, ra)), Some((cb, rb)), true) => vec![(ca, ra), (sub(cb, shift), rb)],
        _ => match e_ball {
            Some(bb) => vec![bb],
            None => return input("integrand does not vanish at infinity; the region must be bounded"),
        },
    };
    let setup = Setup {
        a,
        b,
        region,
        shift,
        dir,
        phi,
        cover,
        clip,
        rel: (tol.rel * 0.1).max(1e-13),
        evals: AtomicU64::new(0),
        worst_rel: AtomicU64::new(0f64.to_bits()),
    };
    let frame = transverse_frame(dir, dim);
    let outer = match dim {
        1 => QuadResult::exact(setup.line(ORIGIN)),
        2 => {
            let m = frame[0];
            let Some((t0, t1)) = hull(&setup.cover, &setup.clip, |c, r| {
                let cm = dot(c, m);
                Some((cm - r, cm + r))
            }) else {
                return Ok(QuadResult::exact(0.0));
            };
            let mut br = Vec::new();
            setup.feature_breaks(ORIGIN, m, false, &mut br);
            // lines through points where a boundary of `a` meets a shifted boundary of `b`
            let (mut ca, mut cb, mut pts) = (Vec::new(), Vec::new(), Vec::new());
            a.planar_curves(0.0, &mut ca);
            b.planar_curves(0.0, &mut cb);
            region.planar_curves(0.0, &mut ca);
            region.planar_curves(0.0, &mut cb);
            for c1 in &ca {
                for c2 in &cb {
                    c1.meets(&c2.translated(scale(shift, -1.0)), &mut pts);
                }
            }
            br.extend(pts.iter().map(|p| dot(*p, m)));
            adaptive_par(|t| setup.line(scale(m, t)), t0, t1, &br, tol)
        }
        _ => {
            let (m1, m2) = (frame[0], frame[1]);
            let Some((t0, t1)) = hull(&setup.cover, &setup.clip, |c, r| {
                let cm = dot(c, m1);
                Some((cm - r, cm + r))
            }) else {
                return Ok(QuadResult::exact(0.0));
            };
            let mut br = Vec::new();
            setup.feature_breaks(ORIGIN, m1, true, &mut br);
            let inner_tol = Tolerance::new(tol.abs, tol.rel * 0.3, tol.max_evaluations);
            let slice = |t1: f64| {
                let base = scale(m1, t1);
                let Some((u0, u1)) = hull(&setup.cover, &setup.clip, |c, r| {
                    let v = sub(c, base);
                    let off = dot(v, m1);
                    let rr = r * r - off * off;
                    (rr > 0.0).then(|| {
                        let cm = dot(v, m2);
                        (cm - rr.sqrt(), cm + rr.sqrt())
                    })
                }) else {
                    return 0.0;
                };
                let mut br2 = Vec::new();
                setup.feature_breaks(base, m2, false, &mut br2);
                let res = adaptive(|t2| setup.line(along(base, m2, t2)), u0, u1, &br2, inner_tol);
                if res.value != 0.0 {
                    atomic_max(&setup.worst_rel, res.error_estimate / res.value.abs());
                }
                res.value
            };
            adaptive_par(slice, t0, t1, &br, tol)
        }
    };
    let worst = f64::from_bits(setup.worst_rel.load(Ordering::Relaxed));
    Ok(QuadResult {
        value: outer.value,
        error_estimate: outer.error_estimate + worst * outer.value.abs(),
        evaluations_used: setup.evals.load(Ordering::Relaxed),
        low_confidence: outer.low_confidence,
    })
}

/// `int chi_E(x) chi_E(x + h) |u(x + h) - u(x)|^q dx`.
pub fn shift_integral(u: &Field, region: &Region, shift: Point, q: f64, tol: Tolerance) -> Result<QuadResult> {
    if norm(shift) == 0.0 {
        return Ok(QuadResult::exact(0.0));
    }
    pair_integral(u, u, region, shift, |x, y| crate::fields::diff_norm(x, y).powf(q), tol)
}

/// `int_E |u - v|^q dx`.
pub fn distance_q(u: &Field, v: &Field, region: &Region, q: f64, tol: Tolerance) -> Result<QuadResult> {
    pair_integral(u, v, region, ORIGIN, |x, y| crate::fields::diff_norm(x, y).powf(q), tol)
}

/// `int_E |u|^q dx`.
pub fn norm_q(u: &Field, region: &Region, q: f64, tol: Tolerance) -> Result<QuadResult> {
    pair_integral(u, u, region, ORIGIN, |x, _| crate::fields::vnorm(x).powf(q), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Field;
    use crate::geometry::point;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn tol() -> Tolerance {
        Tolerance::new(1e-13, 1e-10, 20_000)
    }

    /// Area of the intersection of two disks of radius `r` at distance `d`.
    fn lens(r: f64, d: f64) -> f64 {
        if d >= 2.0 * r {
            return 0.0;
        }
        2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt()
    }

    #[test]
    fn step_shift_integral() {
        let u = Field::step(0.0, 1.0, 1.0).unwrap();
        for h in [0.05, 0.5, 1.0, 4.0, -0.3] {
            let r = shift_integral(&u, &Region::Whole, point(&[h]), 2.0, tol()).unwrap();
            assert_abs_diff_eq!(r.value, 2.0 * f64::min(h.abs(), 1.0), epsilon = 1e-13);
        }
        let e = Region::interval(-1.0, 2.0);
        let r = shift_integral(&u, &e, point(&[0.5]), 2.0, tol()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-13);
        // x + 4 falls outside [-1, 2) for every x in the support
        let r = shift_integral(&u, &e, point(&[4.0]), 2.0, tol()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn disk_shift_integral_matches_lens_area() {
        let r = 0.5;
        let u = Field::ball_indicator(&[0.0, 0.0], r, 1.0).unwrap();
        for (h, ang) in [(0.01, 0.0), (0.3, 0.7), (0.9, 2.0), (1.5, 1.0)] {
            let shift = point(&[h * f64::cos(ang), h * f64::sin(ang)]);
            let res = shift_integral(&u, &Region::Whole, shift, 2.0, Tolerance::new(1e-14, 1e-9, 50_000)).unwrap();
            let exact = 2.0 * (PI * r * r - lens(r, h));
            assert_abs_diff_eq!(res.value, exact, epsilon = 1e-7 * exact.max(1.0));
            assert!((res.value - exact).abs() <= 3.0 * res.error_estimate + 1e-12);
        }
    }

    #[test]
    fn norms() {
        let u = Field::step(0.0, 1.0, 3.0).unwrap();
        assert_abs_diff_eq!(norm_q(&u, &Region::Whole, 2.0, tol()).unwrap().value, 9.0, epsilon = 1e-12);
        let c = Field::constant(1, &[2.0]).unwrap();
        assert!(norm_q(&c, &Region::Whole, 2.0, tol()).is_err());
        let v = norm_q(&c, &Region::interval(0.0, 1.5), 1.0, tol()).unwrap();
        assert_abs_diff_eq!(v.value, 3.0, epsilon = 1e-12);
        let g = Field::gaussian_bump(&[0.0], 0.5, &[1.0]).unwrap();
        let n = norm_q(&g, &Region::Whole, 2.0, tol()).unwrap();
        assert_abs_diff_eq!(n.value, 0.5 * PI.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn ball_3d_shift_integral() {
        let u = Field::ball_indicator(&[0.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        let h = 0.4;
        let res = shift_integral(&u, &Region::Whole, point(&[0.0, h, 0.0]), 1.0, Tolerance::new(1e-12, 1e-7, 20_000))
            .unwrap();
        // two caps of height 1 - h/2 removed from each ball
        let cap = |t: f64| PI * t * t * (3.0 - t) / 3.0;
        let inter = 2.0 * cap(1.0 - h / 2.0);
        let exact = 2.0 * (4.0 * PI / 3.0 - inter);
        assert_abs_diff_eq!(res.value, exact, epsilon = 1e-5);
    }
}
