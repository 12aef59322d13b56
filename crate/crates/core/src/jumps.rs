//! Jump-side quantities: q-jump variations over a jump set, their
//! directional versions, and the dimensional sphere constants they are
//! compared against.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{capability, input, Result};
use crate::fields::{patch_measure, JumpPatch, JumpSetSpec, PatchGeometry};
use crate::geometry::{norm, point, sort_dedup, sub, Curve, Point, Region};
use crate::quadrature::{adaptive_unbounded, sphere_measure, Tolerance};

/// `int_{S^{N-1}} |z_1|^q dH^{N-1}(z) = 2 pi^{(N-1)/2} Gamma((q+1)/2) / Gamma((N+q)/2)`.
pub fn sphere_moment(dim: usize, q: f64) -> Result<f64> {
    sphere_measure(dim)?;
    if !(q >= 0.0 && q.is_finite()) {
        return input("moment order q must be finite and nonnegative");
    }
    if dim == 1 {
        return Ok(2.0);
    }
    let n = dim as f64;
    Ok(2.0 * PI.powf(0.5 * (n - 1.0)) * libm::tgamma(0.5 * (q + 1.0)) / libm::tgamma(0.5 * (n + q)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentRow {
    pub q: f64,
    /// `int |z_1|^q dH`
    pub moment_q: f64,
    /// The sphere average of `|z_1|^q`.
    pub hat_c: f64,
}

/// Sphere constants of one dimension, in both the unnormalized and the
/// averaged convention.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsTable {
    pub dim: usize,
    pub sphere_measure: f64,
    /// `int |z_1| dH` (unnormalized)
    pub moment1: f64,
    /// `moment1 / N`
    pub c_n: f64,
    /// `moment1 / sphere_measure` (averaged)
    pub moment1_avg: f64,
    pub moments: Vec<MomentRow>,
    /// `int_{R^{N-1}} 2 (1 + |v|^2)^{-(N+1)/2} dv` by quadrature, for `N >= 2`.
    pub nc_integral: Option<f64>,
    /// `|nc_integral - moment1|`
    pub nc_residual: Option<f64>,
}

/// `int_{R^{N-1}} 2 (1 + |v|^2)^{-(N+1)/2} dv`, integrated numerically.
fn nc_integral(dim: usize) -> Result<Option<f64>> {
    let tol = Tolerance::new(1e-15, 1e-13, 20_000);
    Ok(match dim {
        1 => None,
        2 => {
            let half = adaptive_unbounded(|v| 2.0 * (1.0 + v * v).powf(-1.5), 0.0, f64::INFINITY, &[1.0], tol);
            Some(2.0 * half.value)
        }
        3 => {
            // polar coordinates in the plane
            let radial = adaptive_unbounded(|r| 2.0 * r * (1.0 + r * r).powi(-2), 0.0, f64::INFINITY, &[1.0], tol);
            Some(2.0 * PI * radial.value)
        }
        _ => return capability(format!("dimension {dim} is not supported (1..=3)")),
    })
}

pub fn dimensional_constants(dim: usize, q_list: &[f64]) -> Result<ConstantsTable> {
    let s = sphere_measure(dim)?;
    let moment1 = sphere_moment(dim, 1.0)?;
    let mut moments = Vec::with_capacity(q_list.len());
    for &q in q_list {
        let m = sphere_moment(dim, q)?;
        moments.push(MomentRow { q, moment_q: m, hat_c: m / s });
    }
    let nc = nc_integral(dim)?;
    Ok(ConstantsTable {
        dim,
        sphere_measure: s,
        moment1,
        c_n: moment1 / dim as f64,
        moment1_avg: moment1 / s,
        moments,
        nc_integral: nc,
        nc_residual: nc.map(|v| (v - moment1).abs()),
    })
}

/// `int_a^b |cos t| dt`
fn abs_cos_integral(a: f64, b: f64) -> f64 {
    let prim = |t: f64| {
        let k = ((t + 0.5 * PI) / PI).floor();
        let sign = if (k as i64).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        2.0 * k + sign * t.sin()
    };
    prim(b) - prim(a)
}

/// Angular intervals of a circle lying inside `s`.
fn circle_arcs(center: Point, radius: f64, s: &Region) -> Vec<(f64, f64)> {
    let circle = Curve::Circle { center, radius };
    let mut curves = Vec::new();
    s.planar_curves(0.0, &mut curves);
    let mut pts = Vec::new();
    for c in &curves {
        circle.meets(c, &mut pts);
    }
    let mut angles: Vec<f64> = pts
        .iter()
        .map(|p| {
            let v = sub(*p, center);
            v[1].atan2(v[0]).rem_euclid(2.0 * PI)
        })
        .collect();
    angles.push(0.0);
    angles.push(2.0 * PI);
    sort_dedup(&mut angles, 1e-14);
    angles
        .windows(2)
        .filter(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            s.contains(&[center[0] + radius * mid.cos(), center[1] + radius * mid.sin(), 0.0])
        })
        .map(|w| (w[0], w[1]))
        .collect()
}

enum Clip {
    Outside,
    Inside,
    Partial,
}

fn patch_box(g: &PatchGeometry, dim: usize) -> (Point, Point) {
    match g {
        PatchGeometry::Point { x } => (point(&[*x]), point(&[*x])),
        PatchGeometry::Face { axis, coord, lo, hi, .. } => {
            let (mut l, mut h) = (*lo, *hi);
            l[*axis] = *coord;
            h[*axis] = *coord;
            for a in dim..3 {
                l[a] = 0.0;
                h[a] = 0.0;
            }
            (l, h)
        }
        PatchGeometry::Sphere { center, radius } => {
            let (mut l, mut h) = (*center, *center);
            for a in 0..dim {
                l[a] -= radius;
                h[a] += radius;
            }
            (l, h)
        }
    }
}

/// Whether a closed box lies in the interior of `s`, strictly outside its
/// closure, or neither. Only decides the cases it can prove.
fn classify_box(l: Point, h: Point, dim: usize, s: &Region) -> Clip {
    match s {
        Region::Whole => Clip::Inside,
        Region::Box { lo, hi } => {
            if (0..dim).all(|a| lo[a] < l[a] && h[a] < hi[a]) {
                Clip::Inside
            } else if (0..dim).any(|a| h[a] < lo[a] || l[a] > hi[a]) {
                Clip::Outside
            } else {
                Clip::Partial
            }
        }
        Region::Ball { center, radius } => {
            let mut far = 0.0;
            let mut near = 0.0;
            for a in 0..dim {
                let dl = (l[a] - center[a]).abs();
                let dh = (h[a] - center[a]).abs();
                far += dl.max(dh).powi(2);
                let gap = if center[a] < l[a] {
                    l[a] - center[a]
                } else if center[a] > h[a] {
                    center[a] - h[a]
                } else {
                    0.0
                };
                near += gap * gap;
            }
            if far.sqrt() < *radius {
                Clip::Inside
            } else if near.sqrt() > *radius {
                Clip::Outside
            } else {
                Clip::Partial
            }
        }
        _ => Clip::Partial,
    }
}

/// `int_{patch ∩ s} |nu . n| dH^{N-1}` (or the plain measure for `n = None`).
fn clipped_measure(p: &JumpPatch, dim: usize, n: Option<Point>, s: &Region) -> Result<f64> {
    let full = |g: &PatchGeometry| -> Result<f64> {
        let m = patch_measure(g, dim)?;
        Ok(match (g, n) {
            (_, None) => m,
            (PatchGeometry::Point { .. }, Some(n)) => n[0].abs(),
            (PatchGeometry::Face { axis, .. }, Some(n)) => m * n[*axis].abs(),
            (PatchGeometry::Sphere { radius, .. }, Some(n)) => {
                radius.powi(dim as i32 - 1) * norm(n) * sphere_moment(dim, 1.0)?
            }
        })
    };
    if let PatchGeometry::Point { x } = p.geometry {
        return if s.contains(&point(&[x])) { full(&p.geometry) } else { Ok(0.0) };
    }
    let (l, h) = patch_box(&p.geometry, dim);
    match classify_box(l, h, dim, s) {
        Clip::Inside => return full(&p.geometry),
        Clip::Outside => return Ok(0.0),
        Clip::Partial => {}
    }
    match (&p.geometry, s) {
        (PatchGeometry::Face { axis, coord, lo, hi, .. }, Region::Box { lo: sl, hi: sh }) => {
            if !(sl[*axis] < *coord && *coord < sh[*axis]) {
                return Ok(0.0);
            }
            let mut g = p.geometry.clone();
            if let PatchGeometry::Face { lo: gl, hi: gh, .. } = &mut g {
                for a in (0..dim).filter(|a| a != axis) {
                    gl[a] = lo[a].max(sl[a]);
                    gh[a] = hi[a].min(sh[a]);
                    if gh[a] <= gl[a] {
                        return Ok(0.0);
                    }
                }
            }
            full(&g)
        }
        (PatchGeometry::Sphere { center, radius }, _) if dim == 2 => {
            let arcs = circle_arcs(*center, *radius, s);
            Ok(arcs
                .iter()
                .map(|&(a, b)| match n {
                    None => radius * (b - a),
                    Some(n) => {
                        // |nu . n| = |n| |cos(t - phi)|
                        let phi = n[1].atan2(n[0]);
                        radius * norm(n) * abs_cos_integral(a - phi, b - phi)
                    }
                })
                .sum())
        }
        _ => capability("clipping this patch geometry by this region is not supported"),
    }
}

fn check_q(q: f64) -> Result<()> {
    if !q.is_finite() {
        return input("q must be finite");
    }
    Ok(())
}

/// `int_{J ∩ S} |u+ - u-|^q dH^{N-1}`.
pub fn jump_variation(js: &JumpSetSpec, q: f64, s: &Region) -> Result<f64> {
    check_q(q)?;
    let mut acc = 0.0;
    for p in &js.patches {
        acc += p.amplitude().powf(q) * clipped_measure(p, js.dim, None, s)?;
    }
    Ok(acc)
}

/// `int_{J ∩ S} |u+ - u-|^q |nu . n| dH^{N-1}`.
pub fn directional_jump_variation(js: &JumpSetSpec, q: f64, n: &[f64], s: &Region) -> Result<f64> {
    check_q(q)?;
    if n.len() != js.dim || n.iter().any(|v| !v.is_finite()) {
        return input("direction must be a finite vector of the field dimension");
    }
    let n = point(n);
    let mut acc = 0.0;
    for p in &js.patches {
        acc += p.amplitude().powf(q) * clipped_measure(p, js.dim, Some(n), s)?;
    }
    Ok(acc)
}

/// `|Du|(R^N)` of a piecewise-constant field: the jump part only.
pub fn total_variation(js: &JumpSetSpec) -> f64 {
    js.patches.iter().map(|p| p.amplitude() * p.measure).sum()
}
