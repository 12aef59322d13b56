//! Points, regions and the exact line/circle intersection queries the
//! integrators are built on.

use std::f64::consts::PI;

/// A point of R^N stored in three slots; unused trailing slots stay zero.
pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0; 3];

pub fn point(c: &[f64]) -> Point {
    let mut p = ORIGIN;
    for (slot, v) in p.iter_mut().zip(c) {
        *slot = *v;
    }
    p
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

/// `p + s * d`
#[inline]
pub fn along(p: Point, d: Point, s: f64) -> Point {
    [p[0] + s * d[0], p[1] + s * d[1], p[2] + s * d[2]]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

pub fn is_finite_point(a: &Point) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Unit vectors completing `d` to an orthonormal frame of R^dim.
pub fn transverse_frame(d: Point, dim: usize) -> Vec<Point> {
    match dim {
        1 => Vec::new(),
        2 => vec![[-d[1], d[0], 0.0]],
        _ => {
            let helper = if d[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
            let m1 = sub(helper, scale(d, dot(helper, d)));
            let m1 = scale(m1, 1.0 / norm(m1));
            let m2 = [
                d[1] * m1[2] - d[2] * m1[1],
                d[2] * m1[0] - d[0] * m1[2],
                d[0] * m1[1] - d[1] * m1[0],
            ];
            vec![m1, m2]
        }
    }
}

/// Measurable sets built from boxes, balls and half-spaces.
///
/// Boxes are half-open (`lo <= x < hi`), balls and half-spaces are open.
/// Axes a box does not constrain carry infinite bounds.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    Whole,
    Box { lo: Point, hi: Point },
    Ball { center: Point, radius: f64 },
    /// `{ x : normal . x < offset }`
    HalfSpace { normal: Point, offset: f64 },
    Complement(Box<Region>),
    Union(Vec<Region>),
}

impl Region {
    pub fn interval(a: f64, b: f64) -> Region {
        Region::boxed(&[a], &[b])
    }

    pub fn boxed(lo: &[f64], hi: &[f64]) -> Region {
        let mut l = [f64::NEG_INFINITY; 3];
        let mut h = [f64::INFINITY; 3];
        for i in 0..lo.len().min(3) {
            l[i] = lo[i];
            h[i] = hi[i];
        }
        Region::Box { lo: l, hi: h }
    }

    pub fn ball(center: &[f64], radius: f64) -> Region {
        Region::Ball { center: point(center), radius }
    }

    pub fn half_space(normal: &[f64], offset: f64) -> Region {
        Region::HalfSpace { normal: point(normal), offset }
    }

    pub fn complement(r: Region) -> Region {
        Region::Complement(Box::new(r))
    }

    pub fn contains(&self, x: &Point) -> bool {
        match self {
            Region::Whole => true,
            Region::Box { lo, hi } => (0..3).all(|i| lo[i] <= x[i] && x[i] < hi[i]),
            Region::Ball { center, radius } => {
                let v = sub(*x, *center);
                dot(v, v) < radius * radius
            }
            Region::HalfSpace { normal, offset } => dot(*normal, *x) < *offset,
            Region::Complement(inner) => !inner.contains(x),
            Region::Union(parts) => parts.iter().any(|r| r.contains(x)),
        }
    }

    pub fn is_whole(&self) -> bool {
        matches!(self, Region::Whole)
    }

    /// Axis-aligned bounding box over the first `dim` axes, `None` when unbounded.
    pub fn bounds(&self, dim: usize) -> Option<(Point, Point)> {
        match self {
            Region::Box { lo, hi } => {
                let mut l = ORIGIN;
                let mut h = ORIGIN;
                for i in 0..dim {
                    if !lo[i].is_finite() || !hi[i].is_finite() {
                        return None;
                    }
                    l[i] = lo[i];
                    h[i] = hi[i];
                }
                Some((l, h))
            }
            Region::Ball { center, radius } => {
                let mut l = ORIGIN;
                let mut h = ORIGIN;
                for i in 0..dim {
                    l[i] = center[i] - radius;
                    h[i] = center[i] + radius;
                }
                Some((l, h))
            }
            Region::Union(parts) => {
                let mut acc: Option<(Point, Point)> = None;
                for p in parts {
                    let (l, h) = p.bounds(dim)?;
                    acc = Some(match acc {
                        None => (l, h),
                        Some((al, ah)) => {
                            let mut nl = al;
                            let mut nh = ah;
                            for i in 0..dim {
                                nl[i] = al[i].min(l[i]);
                                nh[i] = ah[i].max(h[i]);
                            }
                            (nl, nh)
                        }
                    });
                }
                acc
            }
            _ => None,
        }
    }

    /// Smallest convenient ball containing the region.
    pub fn bounding_ball(&self, dim: usize) -> Option<(Point, f64)> {
        if let Region::Ball { center, radius } = self {
            return Some((*center, *radius));
        }
        let (l, h) = self.bounds(dim)?;
        let c = scale(add(l, h), 0.5);
        Some((c, 0.5 * norm(sub(h, l))))
    }

    /// Parameters `s` at which the line `p + s d` crosses the boundary.
    pub fn line_crossings(&self, p: Point, d: Point, out: &mut Vec<f64>) {
        match self {
            Region::Whole => {}
            Region::Box { lo, hi } => box_crossings(lo, hi, p, d, out),
            Region::Ball { center, radius } => ball_crossings(*center, *radius, p, d, out),
            Region::HalfSpace { normal, offset } => {
                let nd = dot(*normal, d);
                if nd != 0.0 {
                    out.push((offset - dot(*normal, p)) / nd);
                }
            }
            Region::Complement(inner) => inner.line_crossings(p, d, out),
            Region::Union(parts) => parts.iter().for_each(|r| r.line_crossings(p, d, out)),
        }
    }

    /// Crossings of the two surfaces at distance `pad` from the boundary.
    pub fn offset_crossings(&self, p: Point, d: Point, pad: f64, out: &mut Vec<f64>) {
        if pad <= 0.0 {
            return;
        }
        match self {
            Region::Whole => {}
            Region::Box { lo, hi } => {
                let mut l = *lo;
                let mut h = *hi;
                let mut empty = false;
                for i in 0..3 {
                    l[i] += pad;
                    h[i] -= pad;
                    if l[i] >= h[i] {
                        empty = true;
                    }
                }
                if !empty {
                    box_crossings(&l, &h, p, d, out);
                }
                rounded_box_crossings(lo, hi, pad, p, d, out);
            }
            Region::Ball { center, radius } => {
                ball_crossings(*center, radius + pad, p, d, out);
                if *radius > pad {
                    ball_crossings(*center, radius - pad, p, d, out);
                }
            }
            Region::HalfSpace { normal, offset } => {
                let nd = dot(*normal, d);
                if nd != 0.0 {
                    let shift = pad * norm(*normal);
                    let base = offset - dot(*normal, p);
                    out.push((base + shift) / nd);
                    out.push((base - shift) / nd);
                }
            }
            Region::Complement(inner) => inner.offset_crossings(p, d, pad, out),
            Region::Union(parts) => parts.iter().for_each(|r| r.offset_crossings(p, d, pad, out)),
        }
    }

    /// Distance from `x` to the boundary. For unions this is the distance to
    /// the nearest member boundary, which never exceeds the true value.
    pub fn boundary_distance(&self, x: &Point) -> f64 {
        match self {
            Region::Whole => f64::INFINITY,
            Region::Box { lo, hi } => {
                let mut inside = true;
                let mut d2 = 0.0;
                let mut margin = f64::INFINITY;
                for i in 0..3 {
                    let below = lo[i] - x[i];
                    let above = x[i] - hi[i];
                    if below > 0.0 {
                        inside = false;
                        d2 += below * below;
                    } else if above >= 0.0 {
                        inside = false;
                        d2 += above * above;
                    } else {
                        margin = margin.min(-below).min(-above);
                    }
                }
                if inside {
                    margin
                } else {
                    d2.sqrt()
                }
            }
            Region::Ball { center, radius } => (norm(sub(*x, *center)) - radius).abs(),
            Region::HalfSpace { normal, offset } => {
                (dot(*normal, *x) - offset).abs() / norm(*normal)
            }
            Region::Complement(inner) => inner.boundary_distance(x),
            Region::Union(parts) => parts
                .iter()
                .map(|r| r.boundary_distance(x))
                .fold(f64::INFINITY, f64::min),
        }
    }

    /// Transverse coordinates `t` at which lines `p + t m + s d` (all `s`)
    /// become tangent to the boundary or to its offsets at each of `pads`.
    pub fn transverse_breaks(&self, p: Point, d: Point, m: Point, pads: &[f64], out: &mut Vec<f64>) {
        match self {
            Region::Whole => {}
            Region::Ball { center, radius } => {
                let c = sub(*center, p);
                let cd = dot(c, d);
                let cperp = sub(c, scale(d, cd));
                let cm = dot(cperp, m);
                let rest = dot(cperp, cperp) - cm * cm;
                for &pad in pads {
                    for rr in [radius + pad, radius - pad] {
                        if rr <= 0.0 {
                            continue;
                        }
                        let disc = rr * rr - rest;
                        if disc >= 0.0 {
                            let s = disc.sqrt();
                            out.push(cm - s);
                            out.push(cm + s);
                        }
                        if pad == 0.0 {
                            break;
                        }
                    }
                }
            }
            Region::Box { lo, hi } => {
                for &pad in pads {
                    for sign in [1.0, -1.0] {
                        let mut l = *lo;
                        let mut h = *hi;
                        for i in 0..3 {
                            l[i] -= sign * pad;
                            h[i] += sign * pad;
                        }
                        box_corner_projections(&l, &h, p, m, out);
                        if pad == 0.0 {
                            break;
                        }
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                let nm = dot(*normal, m);
                if nm.abs() > 1e-12 * norm(*normal) {
                    let base = offset - dot(*normal, p);
                    for &pad in pads {
                        let shift = pad * norm(*normal);
                        out.push((base + shift) / nm);
                        if pad > 0.0 {
                            out.push((base - shift) / nm);
                        }
                    }
                }
            }
            Region::Complement(inner) => inner.transverse_breaks(p, d, m, pads, out),
            Region::Union(parts) => {
                parts.iter().for_each(|r| r.transverse_breaks(p, d, m, pads, out))
            }
        }
    }

    /// Coordinates `t` at which the slab `{ x : (x - p) . m = t }` starts or
    /// stops touching the boundary or its offsets at each of `pads`.
    pub fn slab_breaks(&self, p: Point, m: Point, pads: &[f64], out: &mut Vec<f64>) {
        match self {
            Region::Ball { center, radius } => {
                let cm = dot(sub(*center, p), m);
                for &pad in pads {
                    for rr in [radius + pad, radius - pad] {
                        if rr > 0.0 {
                            out.push(cm - rr);
                            out.push(cm + rr);
                        }
                    }
                }
            }
            Region::Complement(inner) => inner.slab_breaks(p, m, pads, out),
            Region::Union(parts) => parts.iter().for_each(|r| r.slab_breaks(p, m, pads, out)),
            _ => self.transverse_breaks(p, m, m, pads, out),
        }
    }

    /// Planar only: angles in `[0, 2pi)` where the circle of radius `r`
    /// around `x` meets the boundary.
    pub fn circle_crossings(&self, x: &Point, r: f64, out: &mut Vec<f64>) {
        match self {
            Region::Whole => {}
            Region::Ball { center, radius } => {
                let v = sub(*center, *x);
                let dist = (v[0] * v[0] + v[1] * v[1]).sqrt();
                if dist > (r - radius).abs() && dist < r + radius {
                    let base = v[1].atan2(v[0]);
                    let c = (dist * dist + r * r - radius * radius) / (2.0 * dist * r);
                    let half = c.clamp(-1.0, 1.0).acos();
                    out.push(wrap_angle(base - half));
                    out.push(wrap_angle(base + half));
                }
            }
            Region::Box { lo, hi } => {
                for edge in [lo[0], hi[0]] {
                    let c = (edge - x[0]) / r;
                    if edge.is_finite() && c.abs() < 1.0 {
                        let a = c.acos();
                        for phi in [a, -a] {
                            let y = x[1] + r * phi.sin();
                            if y >= lo[1] && y <= hi[1] {
                                out.push(wrap_angle(phi));
                            }
                        }
                    }
                }
                for edge in [lo[1], hi[1]] {
                    let c = (edge - x[1]) / r;
                    if edge.is_finite() && c.abs() < 1.0 {
                        let a = c.asin();
                        for phi in [a, PI - a] {
                            let y = x[0] + r * phi.cos();
                            if y >= lo[0] && y <= hi[0] {
                                out.push(wrap_angle(phi));
                            }
                        }
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                let nn = (normal[0] * normal[0] + normal[1] * normal[1]).sqrt();
                if nn == 0.0 {
                    return;
                }
                let k = (offset - (normal[0] * x[0] + normal[1] * x[1])) / (r * nn);
                if k.abs() < 1.0 {
                    let alpha = normal[1].atan2(normal[0]);
                    let a = k.acos();
                    out.push(wrap_angle(alpha - a));
                    out.push(wrap_angle(alpha + a));
                }
            }
            Region::Complement(inner) => inner.circle_crossings(x, r, out),
            Region::Union(parts) => parts.iter().for_each(|p| p.circle_crossings(x, r, out)),
        }
    }

    /// Planar only: radii at which circles around `x` change how they meet
    /// the boundary (tangencies and corners).
    pub fn critical_radii(&self, x: &Point, out: &mut Vec<f64>) {
        match self {
            Region::Whole => {}
            Region::Ball { center, radius } => {
                let v = sub(*center, *x);
                let dist = (v[0] * v[0] + v[1] * v[1]).sqrt();
                out.push((dist - radius).abs());
                out.push(dist + radius);
            }
            Region::Box { lo, hi } => {
                for axis in 0..2 {
                    for edge in [lo[axis], hi[axis]] {
                        if edge.is_finite() {
                            out.push((edge - x[axis]).abs());
                        }
                    }
                }
                for cx in [lo[0], hi[0]] {
                    for cy in [lo[1], hi[1]] {
                        if cx.is_finite() && cy.is_finite() {
                            out.push(((cx - x[0]).powi(2) + (cy - x[1]).powi(2)).sqrt());
                        }
                    }
                }
            }
            Region::HalfSpace { .. } => out.push(self.boundary_distance(x)),
            Region::Complement(inner) => inner.critical_radii(x, out),
            Region::Union(parts) => parts.iter().for_each(|p| p.critical_radii(x, out)),
        }
    }

    /// Same region with every coordinate mapped through `x -> x + shift`.
    pub fn translated(&self, shift: Point) -> Region {
        match self {
            Region::Whole => Region::Whole,
            Region::Box { lo, hi } => Region::Box { lo: add(*lo, shift), hi: add(*hi, shift) },
            Region::Ball { center, radius } => {
                Region::Ball { center: add(*center, shift), radius: *radius }
            }
            Region::HalfSpace { normal, offset } => {
                Region::HalfSpace { normal: *normal, offset: offset + dot(*normal, shift) }
            }
            Region::Complement(inner) => Region::complement(inner.translated(shift)),
            Region::Union(parts) => Region::Union(parts.iter().map(|r| r.translated(shift)).collect()),
        }
    }
}

/// Planar boundary pieces, used to locate where two boundaries meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Curve {
    Circle { center: Point, radius: f64 },
    Segment { a: Point, b: Point },
}

const FAR: f64 = 1e9;

impl Curve {
    pub fn translated(&self, shift: Point) -> Curve {
        match *self {
            Curve::Circle { center, radius } => Curve::Circle { center: add(center, shift), radius },
            Curve::Segment { a, b } => Curve::Segment { a: add(a, shift), b: add(b, shift) },
        }
    }

    /// Points where two planar curves meet.
    pub fn meets(&self, other: &Curve, out: &mut Vec<Point>) {
        match (*self, *other) {
            (Curve::Circle { center: c1, radius: r1 }, Curve::Circle { center: c2, radius: r2 }) => {
                let v = sub(c2, c1);
                let d = norm(v);
                if d == 0.0 || d > r1 + r2 || d < (r1 - r2).abs() {
                    return;
                }
                let along_ = (d * d + r1 * r1 - r2 * r2) / (2.0 * d);
                let h = (r1 * r1 - along_ * along_).max(0.0).sqrt();
                let u = scale(v, 1.0 / d);
                let base = along(c1, u, along_);
                let perp = [-u[1], u[0], 0.0];
                out.push(along(base, perp, h));
                out.push(along(base, perp, -h));
            }
            (Curve::Circle { center, radius }, Curve::Segment { a, b })
            | (Curve::Segment { a, b }, Curve::Circle { center, radius }) => {
                // measured from the midpoint so that very long segments stay accurate
                let mid = scale(add(a, b), 0.5);
                let half = 0.5 * norm(sub(b, a));
                if half == 0.0 {
                    return;
                }
                let u = scale(sub(b, a), 0.5 / half);
                let f = sub(mid, center);
                let s0 = -dot(f, u);
                let perp = sub(f, scale(u, -s0));
                let disc = radius * radius - dot(perp, perp);
                if disc < 0.0 {
                    return;
                }
                let h = disc.sqrt();
                for s in [s0 - h, s0 + h] {
                    if s.abs() <= half {
                        out.push(along(mid, u, s));
                    }
                }
            }
            (Curve::Segment { a: a1, b: b1 }, Curve::Segment { a: a2, b: b2 }) => {
                let d1 = sub(b1, a1);
                let d2 = sub(b2, a2);
                let den = d1[0] * d2[1] - d1[1] * d2[0];
                if den == 0.0 {
                    return;
                }
                let w = sub(a2, a1);
                let t = (w[0] * d2[1] - w[1] * d2[0]) / den;
                let s = (w[0] * d1[1] - w[1] * d1[0]) / den;
                if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s) {
                    out.push(along(a1, d1, t));
                }
            }
        }
    }
}

impl Region {
    /// Planar boundary curves, plus the offset curves at distance `pad`.
    pub fn planar_curves(&self, pad: f64, out: &mut Vec<Curve>) {
        match self {
            Region::Whole => {}
            Region::Ball { center, radius } => {
                out.push(Curve::Circle { center: *center, radius: *radius });
                if pad > 0.0 {
                    out.push(Curve::Circle { center: *center, radius: radius + pad });
                    if *radius > pad {
                        out.push(Curve::Circle { center: *center, radius: radius - pad });
                    }
                }
            }
            Region::Box { lo, hi } => {
                let l = [lo[0].max(-FAR), lo[1].max(-FAR), 0.0];
                let h = [hi[0].min(FAR), hi[1].min(FAR), 0.0];
                let offsets: &[f64] = if pad > 0.0 { &[0.0, 1.0, -1.0] } else { &[0.0] };
                for &o in offsets {
                    let p = o * pad;
                    let (x0, x1, y0, y1) = (l[0] - p, h[0] + p, l[1] - p, h[1] + p);
                    let (ex0, ex1, ey0, ey1) = (l[0], h[0], l[1], h[1]);
                    // edges keep the original extent; offsets only move them outward or inward
                    out.push(Curve::Segment { a: [x0, ey0, 0.0], b: [x0, ey1, 0.0] });
                    out.push(Curve::Segment { a: [x1, ey0, 0.0], b: [x1, ey1, 0.0] });
                    out.push(Curve::Segment { a: [ex0, y0, 0.0], b: [ex1, y0, 0.0] });
                    out.push(Curve::Segment { a: [ex0, y1, 0.0], b: [ex1, y1, 0.0] });
                }
                if pad > 0.0 {
                    for cx in [l[0], h[0]] {
                        for cy in [l[1], h[1]] {
                            out.push(Curve::Circle { center: [cx, cy, 0.0], radius: pad });
                        }
                    }
                }
            }
            Region::HalfSpace { normal, offset } => {
                let nn = dot(*normal, *normal);
                if nn == 0.0 {
                    return;
                }
                let dir = [-normal[1], normal[0], 0.0];
                let pads: &[f64] = if pad > 0.0 { &[0.0, 1.0, -1.0] } else { &[0.0] };
                for &o in pads {
                    let p0 = scale(*normal, (offset + o * pad * nn.sqrt()) / nn);
                    out.push(Curve::Segment { a: along(p0, dir, -FAR), b: along(p0, dir, FAR) });
                }
            }
            Region::Complement(inner) => inner.planar_curves(pad, out),
            Region::Union(parts) => parts.iter().for_each(|r| r.planar_curves(pad, out)),
        }
    }
}

pub fn wrap_angle(a: f64) -> f64 {
    let t = a.rem_euclid(2.0 * PI);
    if t >= 2.0 * PI {
        0.0
    } else {
        t
    }
}

fn box_crossings(lo: &Point, hi: &Point, p: Point, d: Point, out: &mut Vec<f64>) {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for i in 0..3 {
        if d[i] == 0.0 {
            if p[i] < lo[i] || p[i] >= hi[i] {
                return;
            }
            continue;
        }
        let a = (lo[i] - p[i]) / d[i];
        let b = (hi[i] - p[i]) / d[i];
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        t0 = t0.max(a);
        t1 = t1.min(b);
    }
    if t0 < t1 {
        if t0.is_finite() {
            out.push(t0);
        }
        if t1.is_finite() {
            out.push(t1);
        }
    }
}

fn ball_crossings(c: Point, r: f64, p: Point, d: Point, out: &mut Vec<f64>) {
    let v = sub(p, c);
    let a = dot(d, d);
    let b = dot(d, v);
    let cc = dot(v, v) - r * r;
    let disc = b * b - a * cc;
    if disc > 0.0 && a > 0.0 {
        let s = disc.sqrt();
        // stable pair of roots
        let q = if b >= 0.0 { -(b + s) } else { -(b - s) };
        let r1 = q / a;
        let r2 = if q != 0.0 { cc / q } else { -r1 };
        out.push(r1.min(r2));
        out.push(r1.max(r2));
    }
}

fn box_corner_projections(lo: &Point, hi: &Point, p: Point, m: Point, out: &mut Vec<f64>) {
    let axes: Vec<usize> = (0..3).filter(|&i| lo[i].is_finite() && hi[i].is_finite()).collect();
    let count = 1usize << axes.len();
    for mask in 0..count {
        let mut corner = p;
        for (bit, &i) in axes.iter().enumerate() {
            corner[i] = if mask >> bit & 1 == 1 { hi[i] } else { lo[i] };
        }
        out.push(dot(sub(corner, p), m));
    }
}

/// Crossings of `{ x : dist(x, box) = pad }`, the rounded outer offset.
fn rounded_box_crossings(lo: &Point, hi: &Point, pad: f64, p: Point, d: Point, out: &mut Vec<f64>) {
    let mut knots = Vec::with_capacity(6);
    for i in 0..3 {
        if d[i] != 0.0 {
            for b in [lo[i], hi[i]] {
                if b.is_finite() {
                    knots.push((b - p[i]) / d[i]);
                }
            }
        }
    }
    if knots.is_empty() {
        return;
    }
    knots.sort_by(f64::total_cmp);
    let mut edges = vec![f64::NEG_INFINITY];
    edges.extend(knots.iter().copied());
    edges.push(f64::INFINITY);
    let target = pad * pad;
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = if a.is_finite() && b.is_finite() {
            0.5 * (a + b)
        } else if a.is_finite() {
            a + 1.0
        } else {
            b - 1.0
        };
        // squared distance is c2 s^2 + c1 s + c0 on this piece
        let (mut c2, mut c1, mut c0) = (0.0, 0.0, 0.0);
        for i in 0..3 {
            let x = p[i] + mid * d[i];
            let anchor = if x < lo[i] {
                lo[i]
            } else if x > hi[i] {
                hi[i]
            } else {
                continue;
            };
            let e = p[i] - anchor;
            c2 += d[i] * d[i];
            c1 += 2.0 * e * d[i];
            c0 += e * e;
        }
        c0 -= target;
        let mut roots = Vec::with_capacity(2);
        if c2 > 0.0 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((-c1 - s) / (2.0 * c2));
                roots.push((-c1 + s) / (2.0 * c2));
            }
        } else if c1 != 0.0 {
            roots.push(-c0 / c1);
        }
        for t in roots {
            if t >= a && t <= b {
                out.push(t);
            }
        }
    }
}

/// Sort ascending and drop entries closer than `tol` to their predecessor.
pub fn sort_dedup(v: &mut Vec<f64>, tol: f64) {
    v.retain(|x| x.is_finite());
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| (*b - *a).abs() <= tol);
}
