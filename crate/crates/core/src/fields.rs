//! Test functions `u : R^N -> R^d`, their sampled versions, truncation and
//! exact jump data.

use crate::error::{capability, input, Error, Result};
use crate::geometry::{self, along, dot, norm, point, sort_dedup, sub, Point, Region, ORIGIN};
use crate::mollifiers::Mollified;
use crate::quadrature::sphere_measure;

pub const MAX_COMPONENTS: usize = 4;

/// Field values; only the first `components` slots are meaningful.
pub type Vals = [f64; MAX_COMPONENTS];

pub const ZERO: Vals = [0.0; MAX_COMPONENTS];

pub fn vals(c: &[f64]) -> Vals {
    let mut v = ZERO;
    for (slot, x) in v.iter_mut().zip(c) {
        *slot = *x;
    }
    v
}

/// Euclidean distance between two value vectors.
#[inline]
pub fn diff_norm(a: &Vals, b: &Vals) -> f64 {
    let mut s = 0.0;
    for i in 0..MAX_COMPONENTS {
        let t = a[i] - b[i];
        s += t * t;
    }
    s.sqrt()
}

#[inline]
pub fn vnorm(a: &Vals) -> f64 {
    diff_norm(a, &ZERO)
}

pub fn scale_vals(a: &Vals, s: f64) -> Vals {
    let mut v = *a;
    v.iter_mut().for_each(|x| *x *= s);
    v
}

fn clamp_vals(a: &Vals, l: f64) -> Vals {
    let mut v = *a;
    v.iter_mut().for_each(|x| *x = x.clamp(-l, l));
    v
}

/// Regular cell-centered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub origin: Point,
    pub spacing: Point,
    pub extent: [usize; 3],
}

impl GridSpec {
    pub fn new(origin: &[f64], spacing: &[f64], extent: &[usize]) -> Result<Self> {
        let dim = origin.len();
        if !(1..=3).contains(&dim) || spacing.len() != dim || extent.len() != dim {
            return input("grid origin, spacing and extent must share a dimension in 1..=3");
        }
        if spacing.iter().any(|h| !(*h > 0.0) || !h.is_finite()) {
            return input("grid spacing must be positive");
        }
        if extent.iter().any(|&n| n < 2) {
            return input("grid extent must be at least 2 per axis");
        }
        let mut e = [1usize; 3];
        e[..dim].copy_from_slice(extent);
        let mut s = [1.0; 3];
        s[..dim].copy_from_slice(spacing);
        Ok(GridSpec { dim, origin: point(origin), spacing: s, extent: e })
    }

    /// Grid of square cells with spacing `h` covering the box `[lo, hi]`.
    pub fn covering(lo: &[f64], hi: &[f64], h: f64) -> Result<Self> {
        let ext: Vec<usize> = lo.iter().zip(hi).map(|(a, b)| (((b - a) / h).ceil() as usize).max(2)).collect();
        GridSpec::new(lo, &vec![h; lo.len()], &ext)
    }

    pub fn cells(&self) -> usize {
        self.extent.iter().product()
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing[..self.dim].iter().copied().fold(0.0, f64::max)
    }

    pub fn index(&self, i: [usize; 3]) -> usize {
        i[0] + self.extent[0] * (i[1] + self.extent[1] * i[2])
    }

    pub fn center(&self, i: [usize; 3]) -> Point {
        let mut p = ORIGIN;
        for a in 0..self.dim {
            p[a] = self.origin[a] + (i[a] as f64 + 0.5) * self.spacing[a];
        }
        p
    }

    pub fn multi_index(&self, mut k: usize) -> [usize; 3] {
        let i0 = k % self.extent[0];
        k /= self.extent[0];
        let i1 = k % self.extent[1];
        [i0, i1, k / self.extent[1]]
    }

    fn hi_corner(&self) -> Point {
        let mut p = ORIGIN;
        for a in 0..self.dim {
            p[a] = self.origin[a] + self.extent[a] as f64 * self.spacing[a];
        }
        p
    }
}

/// Closed-form smooth fields.
#[derive(Debug, Clone, PartialEq)]
pub enum SmoothFormula {
    Constant { value: Vals },
    /// `amplitude * exp(-|x - center|^2 / (2 sigma^2))`
    GaussianBump { center: Point, sigma: f64, amplitude: Vals },
}

#[derive(Debug, Clone)]
pub enum FieldKind {
    /// The first region containing the point decides the value.
    PiecewiseConstant { pieces: Vec<(Region, Vals)>, background: Vals },
    Smooth(SmoothFormula),
    Grid { spec: GridSpec, values: Vec<Vals>, source: Option<String> },
    Mollified(Box<Mollified>),
    Clamped { base: Box<Field>, level: f64 },
}

#[derive(Debug, Clone)]
pub struct Field {
    pub dim: usize,
    pub components: usize,
    pub kind: FieldKind,
    pub id: String,
}

fn check_dims(dim: usize, components: usize) -> Result<()> {
    if !(1..=3).contains(&dim) {
        return Err(Error::Capability(format!("dimension {dim} is not supported (1..=3)")));
    }
    if components == 0 || components > MAX_COMPONENTS {
        return Err(Error::Capability(format!("{components} components (1..={MAX_COMPONENTS} supported)")));
    }
    Ok(())
}

fn finite_vals(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        input("field values must be finite")
    }
}

impl Field {
    pub fn piecewise_constant(dim: usize, pieces: Vec<(Region, Vec<f64>)>, background: &[f64]) -> Result<Field> {
        let components = background.len();
        check_dims(dim, components)?;
        finite_vals(background)?;
        let mut ps = Vec::with_capacity(pieces.len());
        for (r, v) in pieces {
            if v.len() != components {
                return input("every piece needs as many components as the background");
            }
            finite_vals(&v)?;
            ps.push((r, vals(&v)));
        }
        Ok(Field {
            dim,
            components,
            kind: FieldKind::PiecewiseConstant { pieces: ps, background: vals(background) },
            id: "piecewise".into(),
        })
    }

    /// `amplitude * indicator(region)`.
    pub fn indicator(dim: usize, region: Region, amplitude: f64) -> Result<Field> {
        Field::piecewise_constant(dim, vec![(region, vec![amplitude])], &[0.0])
    }

    /// `amplitude` on `[a, b)` in one dimension.
    pub fn step(a: f64, b: f64, amplitude: f64) -> Result<Field> {
        if !(a < b) {
            return input("step needs a < b");
        }
        Ok(Field::indicator(1, Region::interval(a, b), amplitude)?.named(format!("step[{a},{b})x{amplitude}")))
    }

    pub fn ball_indicator(center: &[f64], radius: f64, amplitude: f64) -> Result<Field> {
        if !(radius > 0.0) {
            return input("ball radius must be positive");
        }
        let dim = center.len();
        Ok(Field::indicator(dim, Region::ball(center, radius), amplitude)?
            .named(format!("ball{dim}d(r={radius})x{amplitude}")))
    }

    /// Two-component unit step on `[0, 1)` pointing along `angle`.
    pub fn rotated_step(angle: f64) -> Result<Field> {
        Ok(Field::piecewise_constant(1, vec![(Region::interval(0.0, 1.0), vec![angle.cos(), angle.sin()])], &[0.0, 0.0])?
            .named(format!("rotated_step({angle})")))
    }

    pub fn constant(dim: usize, value: &[f64]) -> Result<Field> {
        check_dims(dim, value.len())?;
        finite_vals(value)?;
        Ok(Field {
            dim,
            components: value.len(),
            kind: FieldKind::Smooth(SmoothFormula::Constant { value: vals(value) }),
            id: format!("constant{value:?}"),
        })
    }

    pub fn gaussian_bump(center: &[f64], sigma: f64, amplitude: &[f64]) -> Result<Field> {
        let dim = center.len();
        check_dims(dim, amplitude.len())?;
        finite_vals(amplitude)?;
        if !(sigma > 0.0) {
            return input("gaussian sigma must be positive");
        }
        Ok(Field {
            dim,
            components: amplitude.len(),
            kind: FieldKind::Smooth(SmoothFormula::GaussianBump { center: point(center), sigma, amplitude: vals(amplitude) }),
            id: format!("gaussian{dim}d(sigma={sigma})"),
        })
    }

    pub fn grid(spec: GridSpec, values: Vec<Vals>, components: usize) -> Result<Field> {
        check_dims(spec.dim, components)?;
        if values.len() != spec.cells() {
            return input("grid value count does not match the grid extent");
        }
        if values.iter().any(|v| v.iter().any(|x| !x.is_finite())) {
            return input("grid values must be finite");
        }
        Ok(Field { dim: spec.dim, components, kind: FieldKind::Grid { spec, values, source: None }, id: "grid".into() })
    }

    pub fn named(mut self, id: impl Into<String>) -> Field {
        self.id = id.into();
        self
    }

    /// `u(x)`; grid fields interpolate multilinearly and vanish outside.
    pub fn eval(&self, x: &Point) -> Vals {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, background } => {
                for (r, v) in pieces {
                    if r.contains(x) {
                        return *v;
                    }
                }
                *background
            }
            FieldKind::Smooth(SmoothFormula::Constant { value }) => *value,
            FieldKind::Smooth(SmoothFormula::GaussianBump { center, sigma, amplitude }) => {
                let v = sub(*x, *center);
                scale_vals(amplitude, (-dot(v, v) / (2.0 * sigma * sigma)).exp())
            }
            FieldKind::Grid { spec, values, .. } => grid_eval(spec, values, x),
            FieldKind::Mollified(m) => m.eval(x),
            FieldKind::Clamped { base, level } => clamp_vals(&base.eval(x), *level),
        }
    }

    pub fn try_eval(&self, x: &[f64]) -> Result<Vals> {
        if x.len() != self.dim || x.iter().any(|v| !v.is_finite()) {
            return input("evaluation point must be finite with the field's dimension");
        }
        Ok(self.eval(&point(x)))
    }

    /// Value outside the support ball.
    pub fn far_value(&self) -> Vals {
        match &self.kind {
            FieldKind::PiecewiseConstant { background, .. } => *background,
            FieldKind::Smooth(SmoothFormula::Constant { value }) => *value,
            FieldKind::Smooth(SmoothFormula::GaussianBump { .. }) | FieldKind::Grid { .. } => ZERO,
            FieldKind::Mollified(m) => scale_vals(&m.base.far_value(), m.mollifier.total),
            FieldKind::Clamped { base, level } => clamp_vals(&base.far_value(), *level),
        }
    }

    /// A ball outside of which the field equals `far_value` (Gaussians are
    /// cut where they fall below 1e-17 of their amplitude). `None` when the
    /// variation is unbounded.
    pub fn support(&self) -> Option<(Point, f64)> {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, background } => {
                let active: Vec<Region> =
                    pieces.iter().filter(|(_, v)| v != background).map(|(r, _)| r.clone()).collect();
                if active.is_empty() {
                    return Some((ORIGIN, 0.0));
                }
                Region::Union(active).bounding_ball(self.dim)
            }
            FieldKind::Smooth(SmoothFormula::Constant { .. }) => Some((ORIGIN, 0.0)),
            FieldKind::Smooth(SmoothFormula::GaussianBump { center, sigma, .. }) => Some((*center, 9.0 * sigma)),
            FieldKind::Grid { spec, .. } => {
                let mut lo = spec.origin;
                let mut hi = spec.hi_corner();
                for a in 0..spec.dim {
                    lo[a] -= spec.spacing[a];
                    hi[a] += spec.spacing[a];
                }
                let c = geometry::scale(geometry::add(lo, hi), 0.5);
                Some((c, 0.5 * norm(sub(hi, lo))))
            }
            FieldKind::Mollified(m) => m.base.support().map(|(c, r)| (c, r + m.reach())),
            FieldKind::Clamped { base, .. } => base.support(),
        }
    }

    /// Center of rotational symmetry, when the field is invariant under all
    /// rotations about one point.
    pub fn radial_center(&self) -> Option<Point> {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => {
                let mut center = None;
                for (r, _) in pieces {
                    let Region::Ball { center: c, .. } = r else { return None };
                    match center {
                        None => center = Some(*c),
                        Some(p) if p == *c => {}
                        Some(_) => return None,
                    }
                }
                Some(center.unwrap_or(ORIGIN))
            }
            FieldKind::Smooth(SmoothFormula::Constant { .. }) => Some(ORIGIN),
            FieldKind::Smooth(SmoothFormula::GaussianBump { center, .. }) => Some(*center),
            FieldKind::Grid { .. } => None,
            FieldKind::Mollified(m) => if m.mollifier.is_radial() { m.base.radial_center() } else { None },
            FieldKind::Clamped { base, .. } => base.radial_center(),
        }
    }

    pub fn is_piecewise_constant(&self) -> bool {
        matches!(self.kind, FieldKind::PiecewiseConstant { .. })
    }

    /// Parameters along `p + s d` where the field, or its flat/non-flat
    /// status, may change non-smoothly. `pad` adds the offset surfaces used
    /// by mollified fields.
    pub fn line_breaks(&self, p: Point, d: Point, pad: f64, out: &mut Vec<f64>) {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => {
                for (r, _) in pieces {
                    r.line_crossings(p, d, out);
                    r.offset_crossings(p, d, pad, out);
                }
            }
            FieldKind::Smooth(_) => {}
            FieldKind::Grid { spec, .. } => {
                for a in 0..spec.dim {
                    if d[a] == 0.0 {
                        continue;
                    }
                    for i in -1..=spec.extent[a] as i64 {
                        let node = spec.origin[a] + (i as f64 + 0.5) * spec.spacing[a];
                        out.push((node - p[a]) / d[a]);
                    }
                }
            }
            FieldKind::Mollified(m) => {
                m.base.line_breaks(p, d, pad, out);
                m.base.line_breaks(p, d, pad + m.reach(), out);
            }
            FieldKind::Clamped { base, .. } => base.line_breaks(p, d, pad, out),
        }
    }

    /// Radius of a ball around `x` on which the field is constant; zero
    /// when it is not known to be locally constant.
    pub fn flat_radius(&self, x: &Point) -> f64 {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => pieces
                .iter()
                .map(|(r, _)| r.boundary_distance(x))
                .fold(f64::INFINITY, f64::min),
            FieldKind::Smooth(SmoothFormula::Constant { .. }) => f64::INFINITY,
            FieldKind::Smooth(SmoothFormula::GaussianBump { .. }) => 0.0,
            FieldKind::Grid { .. } => match self.support() {
                Some((c, r)) => (norm(sub(*x, c)) - r).max(0.0),
                None => 0.0,
            },
            FieldKind::Mollified(m) => (m.base.flat_radius(x) - m.reach()).max(0.0),
            FieldKind::Clamped { base, .. } => base.flat_radius(x),
        }
    }

    /// Transverse coordinates `t` of lines `p + t m + s d` that touch a
    /// feature. With `slab` set, the coordinates where slabs normal to `m`
    /// start or stop touching one.
    pub fn transverse_breaks(&self, p: Point, d: Point, m: Point, pad: f64, slab: bool, out: &mut Vec<f64>) {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => {
                let pads = [0.0, pad];
                let pads = if pad > 0.0 { &pads[..] } else { &pads[..1] };
                for (r, _) in pieces {
                    if slab {
                        r.slab_breaks(p, m, pads, out);
                    } else {
                        r.transverse_breaks(p, d, m, pads, out);
                    }
                }
            }
            FieldKind::Mollified(mo) => {
                mo.base.transverse_breaks(p, d, m, pad, slab, out);
                mo.base.transverse_breaks(p, d, m, pad + mo.reach(), slab, out);
            }
            FieldKind::Clamped { base, .. } => base.transverse_breaks(p, d, m, pad, slab, out),
            FieldKind::Smooth(_) | FieldKind::Grid { .. } => {}
        }
    }

    /// Planar curves where the field or its flatness may change.
    pub fn planar_curves(&self, pad: f64, out: &mut Vec<geometry::Curve>) {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => {
                for (r, _) in pieces {
                    r.planar_curves(pad, out);
                }
            }
            FieldKind::Mollified(m) => {
                m.base.planar_curves(pad, out);
                m.base.planar_curves(pad + m.reach(), out);
            }
            FieldKind::Clamped { base, .. } => base.planar_curves(pad, out),
            FieldKind::Smooth(_) | FieldKind::Grid { .. } => {}
        }
    }

    /// True when the field is constant between consecutive `line_breaks`.
    pub fn constant_between_breaks(&self) -> bool {
        match &self.kind {
            FieldKind::PiecewiseConstant { .. } | FieldKind::Smooth(SmoothFormula::Constant { .. }) => true,
            FieldKind::Clamped { base, .. } => base.constant_between_breaks(),
            _ => false,
        }
    }

    /// Length scales at which shift integrals change behaviour.
    pub fn radial_scales(&self, out: &mut Vec<f64>) {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, .. } => {
                for (r, _) in pieces {
                    region_scales(r, self.dim, out);
                }
            }
            FieldKind::Smooth(SmoothFormula::Constant { .. }) => {}
            FieldKind::Smooth(SmoothFormula::GaussianBump { sigma, .. }) => out.extend([*sigma, 4.0 * sigma]),
            FieldKind::Grid { spec, .. } => {
                out.push(spec.max_spacing());
                if let Some((_, r)) = self.support() {
                    out.push(2.0 * r);
                }
            }
            FieldKind::Mollified(m) => {
                m.base.radial_scales(out);
                out.extend([m.reach(), 2.0 * m.reach()]);
            }
            FieldKind::Clamped { base, .. } => base.radial_scales(out),
        }
    }

    /// Smallest positive entry of `radial_scales`, or 1 when there is none.
    pub fn smallest_scale(&self) -> f64 {
        let mut v = Vec::new();
        self.radial_scales(&mut v);
        let s = v.into_iter().filter(|x| *x > 0.0 && x.is_finite()).fold(f64::INFINITY, f64::min);
        if s.is_finite() { s } else { 1.0 }
    }

    /// Values at the cell centers of `g`.
    pub fn sample(&self, g: &GridSpec) -> Result<Field> {
        if g.dim != self.dim {
            return input("grid dimension differs from field dimension");
        }
        let values: Vec<Vals> = crate::parallel::map(&(0..g.cells()).collect::<Vec<_>>(), |&k| {
            self.eval(&g.center(g.multi_index(k)))
        });
        let mut f = Field::grid(g.clone(), values, self.components)?;
        if let FieldKind::Grid { source, .. } = &mut f.kind {
            *source = Some(self.id.clone());
        }
        f.id = format!("sample({})", self.id);
        Ok(f)
    }

    /// Componentwise clamp to `[-l, l]`. Piecewise-constant, constant and
    /// grid fields stay in their kind; other fields are wrapped lazily.
    pub fn truncate(&self, l: f64) -> Result<Field> {
        if !(l >= 0.0) {
            return input("truncation level must be nonnegative");
        }
        let kind = match &self.kind {
            FieldKind::PiecewiseConstant { pieces, background } => FieldKind::PiecewiseConstant {
                pieces: pieces.iter().map(|(r, v)| (r.clone(), clamp_vals(v, l))).collect(),
                background: clamp_vals(background, l),
            },
            FieldKind::Smooth(SmoothFormula::Constant { value }) => {
                FieldKind::Smooth(SmoothFormula::Constant { value: clamp_vals(value, l) })
            }
            FieldKind::Grid { spec, values, source } => FieldKind::Grid {
                spec: spec.clone(),
                values: values.iter().map(|v| clamp_vals(v, l)).collect(),
                source: source.clone(),
            },
            FieldKind::Clamped { base, level } => FieldKind::Clamped { base: base.clone(), level: level.min(l) },
            _ => FieldKind::Clamped { base: Box::new(self.clone()), level: l },
        };
        Ok(Field { dim: self.dim, components: self.components, kind, id: format!("truncate({},{l})", self.id) })
    }

    /// Largest absolute component over pieces (piecewise-constant only).
    pub fn max_amplitude(&self) -> Option<f64> {
        match &self.kind {
            FieldKind::PiecewiseConstant { pieces, background } => Some(
                pieces
                    .iter()
                    .map(|(_, v)| v)
                    .chain(std::iter::once(background))
                    .flat_map(|v| v.iter().map(|x| x.abs()))
                    .fold(0.0, f64::max),
            ),
            FieldKind::Smooth(SmoothFormula::Constant { value }) => Some(value.iter().map(|x| x.abs()).fold(0.0, f64::max)),
            _ => None,
        }
    }
}

fn region_scales(r: &Region, dim: usize, out: &mut Vec<f64>) {
    match r {
        Region::Ball { radius, .. } => out.extend([*radius, 2.0 * radius]),
        Region::Box { lo, hi } => {
            let mut diag = 0.0;
            for a in 0..dim {
                let w = hi[a] - lo[a];
                if w.is_finite() {
                    out.push(w);
                    diag += w * w;
                }
            }
            if diag > 0.0 {
                out.push(diag.sqrt());
            }
        }
        Region::Complement(inner) => region_scales(inner, dim, out),
        Region::Union(parts) => parts.iter().for_each(|p| region_scales(p, dim, out)),
        Region::HalfSpace { .. } | Region::Whole => {}
    }
}

fn grid_eval(spec: &GridSpec, values: &[Vals], x: &Point) -> Vals {
    let mut base = [0i64; 3];
    let mut frac = [0.0; 3];
    for a in 0..spec.dim {
        let u = (x[a] - spec.origin[a]) / spec.spacing[a] - 0.5;
        if !(u >= -1.0 && u <= spec.extent[a] as f64) {
            return ZERO;
        }
        let i = u.floor();
        base[a] = i as i64;
        frac[a] = u - i;
    }
    let mut out = ZERO;
    for corner in 0..(1usize << spec.dim) {
        let mut w = 1.0;
        let mut idx = [0usize; 3];
        let mut inside = true;
        for a in 0..spec.dim {
            let bit = (corner >> a) & 1;
            let i = base[a] + bit as i64;
            w *= if bit == 1 { frac[a] } else { 1.0 - frac[a] };
            if i < 0 || i >= spec.extent[a] as i64 {
                inside = false;
            } else {
                idx[a] = i as usize;
            }
        }
        if inside && w != 0.0 {
            let v = &values[spec.index(idx)];
            for c in 0..MAX_COMPONENTS {
                out[c] += w * v[c];
            }
        }
    }
    out
}

/// Geometry of one interface patch.
#[derive(Debug, Clone, PartialEq)]
pub enum PatchGeometry {
    /// A jump point on the line; the normal is `+1`.
    Point { x: f64 },
    /// Axis-aligned flat face `x[axis] = coord`, spanning `[lo, hi]` in the
    /// other axes, with normal `sign * e_axis`.
    Face { axis: usize, coord: f64, lo: Point, hi: Point, sign: f64 },
    /// Sphere with outward normal.
    Sphere { center: Point, radius: f64 },
}

/// `plus` is the trace on the side the normal points to.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpPatch {
    pub geometry: PatchGeometry,
    pub plus: Vals,
    pub minus: Vals,
    pub measure: f64,
}

impl JumpPatch {
    pub fn amplitude(&self) -> f64 {
        diff_norm(&self.plus, &self.minus)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpSetSpec {
    pub dim: usize,
    pub patches: Vec<JumpPatch>,
}

impl JumpSetSpec {
    pub fn total_measure(&self) -> f64 {
        self.patches.iter().map(|p| p.measure).sum()
    }
}

/// Exact jump set of a piecewise-constant field.
pub fn jump_set_of(f: &Field) -> Result<JumpSetSpec> {
    let (pieces, _) = match &f.kind {
        FieldKind::PiecewiseConstant { pieces, background } => (pieces, background),
        FieldKind::Smooth(SmoothFormula::Constant { .. }) => return Ok(JumpSetSpec { dim: f.dim, patches: vec![] }),
        _ => return capability("jump sets are only available for piecewise-constant fields"),
    };
    if f.dim == 1 {
        let mut cuts = Vec::new();
        for (r, _) in pieces {
            r.line_crossings(ORIGIN, [1.0, 0.0, 0.0], &mut cuts);
        }
        sort_dedup(&mut cuts, 0.0);
        let mut patches = Vec::new();
        for (k, &b) in cuts.iter().enumerate() {
            let left = if k == 0 { b - 1.0 } else { 0.5 * (cuts[k - 1] + b) };
            let right = if k + 1 == cuts.len() { b + 1.0 } else { 0.5 * (cuts[k + 1] + b) };
            let minus = f.eval(&point(&[left]));
            let plus = f.eval(&point(&[right]));
            if plus != minus {
                patches.push(JumpPatch { geometry: PatchGeometry::Point { x: b }, plus, minus, measure: 1.0 });
            }
        }
        return Ok(JumpSetSpec { dim: 1, patches });
    }

    let mut candidates = Vec::new();
    for (r, _) in pieces {
        match r {
            Region::Ball { center, radius } => {
                candidates.push(PatchGeometry::Sphere { center: *center, radius: *radius });
            }
            Region::Box { lo, hi } => {
                for a in 0..f.dim {
                    if !lo[a].is_finite() || !hi[a].is_finite() {
                        return capability("unbounded boxes have no finite jump set");
                    }
                }
                for axis in 0..f.dim {
                    for (coord, sign) in [(lo[axis], -1.0), (hi[axis], 1.0)] {
                        candidates.push(PatchGeometry::Face { axis, coord, lo: *lo, hi: *hi, sign });
                    }
                }
            }
            _ => return capability("jump sets in dimension >= 2 support balls and boxes only"),
        }
    }
    for i in 0..candidates.len() {
        for j in 0..i {
            if patches_overlap(&candidates[i], &candidates[j], f.dim) {
                return capability("region boundaries overlap; jump patches would not be disjoint");
            }
        }
    }
    let scale = f.support().map(|s| s.1).unwrap_or(1.0).max(1e-300);
    let delta = 1e-9 * scale;
    let mut patches = Vec::new();
    for g in candidates {
        let probes = patch_probes(&g, f.dim);
        let mut traces: Option<(Vals, Vals)> = None;
        for (y, nu) in probes {
            let plus = f.eval(&along(y, nu, delta));
            let minus = f.eval(&along(y, nu, -delta));
            match traces {
                None => traces = Some((plus, minus)),
                Some(t) if t == (plus, minus) => {}
                Some(_) => return capability("traces vary along a patch; boundaries intersect"),
            }
        }
        let (plus, minus) = traces.expect("patches have probes");
        if plus != minus {
            let measure = patch_measure(&g, f.dim)?;
            patches.push(JumpPatch { geometry: g, plus, minus, measure });
        }
    }
    Ok(JumpSetSpec { dim: f.dim, patches })
}

pub(crate) fn patch_measure(g: &PatchGeometry, dim: usize) -> Result<f64> {
    Ok(match g {
        PatchGeometry::Point { .. } => 1.0,
        PatchGeometry::Face { axis, lo, hi, .. } => {
            (0..dim).filter(|a| a != axis).map(|a| hi[a] - lo[a]).product()
        }
        PatchGeometry::Sphere { radius, .. } => sphere_measure(dim)? * radius.powi(dim as i32 - 1),
    })
}

fn patches_overlap(a: &PatchGeometry, b: &PatchGeometry, dim: usize) -> bool {
    match (a, b) {
        (PatchGeometry::Sphere { center: c1, radius: r1 }, PatchGeometry::Sphere { center: c2, radius: r2 }) => {
            norm(sub(*c1, *c2)) < 1e-12 && (r1 - r2).abs() < 1e-12
        }
        (
            PatchGeometry::Face { axis: a1, coord: x1, lo: l1, hi: h1, .. },
            PatchGeometry::Face { axis: a2, coord: x2, lo: l2, hi: h2, .. },
        ) => {
            a1 == a2
                && (x1 - x2).abs() < 1e-12
                && (0..dim).filter(|k| k != a1).all(|k| l1[k].max(l2[k]) < h1[k].min(h2[k]))
        }
        _ => false,
    }
}

fn patch_probes(g: &PatchGeometry, dim: usize) -> Vec<(Point, Point)> {
    let mut out = Vec::new();
    match g {
        PatchGeometry::Point { x } => out.push((point(&[*x]), [1.0, 0.0, 0.0])),
        PatchGeometry::Face { axis, coord, lo, hi, sign } => {
            let others: Vec<usize> = (0..dim).filter(|a| a != axis).collect();
            let k: usize = 7;
            let count = k.pow(others.len() as u32);
            for idx in 0..count {
                let mut y = ORIGIN;
                y[*axis] = *coord;
                let mut rem = idx;
                for &a in &others {
                    let t = (rem % k) as f64;
                    rem /= k;
                    y[a] = lo[a] + (hi[a] - lo[a]) * (t + 0.5 + 0.1 * (t - 3.0) / 7.0) / k as f64;
                }
                let mut nu = ORIGIN;
                nu[*axis] = *sign;
                out.push((y, nu));
            }
        }
        PatchGeometry::Sphere { center, radius } => {
            let dirs: Vec<Point> = if dim == 2 {
                (0..24)
                    .map(|j| {
                        let t = 0.1 + 2.0 * std::f64::consts::PI * j as f64 / 24.0;
                        [t.cos(), t.sin(), 0.0]
                    })
                    .collect()
            } else {
                crate::quadrature::SphereRule::ProductLatLong(5).nodes().into_iter().map(|(n, _)| n).collect()
            };
            for n in dirs {
                out.push((along(*center, n, *radius), n));
            }
        }
    }
    out
}
