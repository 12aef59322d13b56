//! Mollifiers `eta` and mollification `u_eps = u * eta_(eps)` with
//! `eta_(eps)(z) = eps^{-N} eta(z / eps)`.
//!
//! Every shipped `eta` has the form `A(|z|) + B(|z|) z_1 / |z|`, so integrals
//! over `R^N` reduce to a radial integral of a sphere integral in `n_1`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::fields::{scale_vals, Field, FieldKind, GridSpec, Vals, ZERO};
use crate::geometry::{along, norm, point, sort_dedup, Point, Region};
use crate::quadrature::lines::shift_integral;
use crate::quadrature::{adaptive, gauss_legendre, sphere_measure, QuadResult, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MollifierKind {
    /// `c (1 - |z|)` on the unit ball.
    Tent,
    /// `c exp(-|z|^2 / 2)` cut at `|z| = cut`.
    TruncatedGaussian { cut: f64 },
    /// `c exp(-1 / (1 - |z|^2))` on the unit ball.
    SmoothBump,
    /// `d/dz_1` of the unit-mass smooth bump; integrates to zero.
    SignedTest,
}

impl MollifierKind {
    pub fn label(&self) -> String {
        match self {
            MollifierKind::Tent => "tent".into(),
            MollifierKind::TruncatedGaussian { cut } => format!("truncated_gaussian(cut={cut})"),
            MollifierKind::SmoothBump => "smooth_bump".into(),
            MollifierKind::SignedTest => "signed_test".into(),
        }
    }

    fn outer(&self) -> f64 {
        match self {
            MollifierKind::TruncatedGaussian { cut } => *cut,
            _ => 1.0,
        }
    }

    /// Unnormalized radial profile and its first two derivatives.
    fn g(&self, r: f64) -> (f64, f64, f64) {
        match self {
            MollifierKind::Tent => (1.0 - r, -1.0, 0.0),
            MollifierKind::TruncatedGaussian { .. } => {
                let e = (-0.5 * r * r).exp();
                (e, -r * e, (r * r - 1.0) * e)
            }
            MollifierKind::SmoothBump | MollifierKind::SignedTest => {
                let s = 1.0 - r * r;
                if s <= 0.0 {
                    return (0.0, 0.0, 0.0);
                }
                let g = (-1.0 / s).exp();
                let s2 = s * s;
                (g, g * (-2.0 * r / s2), g * (4.0 * r * r / (s2 * s2) - 2.0 / s2 - 8.0 * r * r / (s2 * s)))
            }
        }
    }

    /// `g'(r) / r`, finite at `r = 0` for the smooth kinds.
    fn gp_over_r(&self, r: f64) -> f64 {
        match self {
            MollifierKind::Tent => -1.0 / r,
            MollifierKind::TruncatedGaussian { .. } => -(-0.5 * r * r).exp(),
            MollifierKind::SmoothBump | MollifierKind::SignedTest => {
                let s = 1.0 - r * r;
                if s <= 0.0 {
                    0.0
                } else {
                    -2.0 * (-1.0 / s).exp() / (s * s)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MollifierSpec {
    pub kind: MollifierKind,
    pub dim: usize,
    /// Multiplier applied to the normalized profile.
    pub gain: f64,
    /// `eta(z) = gain width^{-N} eta_1(z / width)`.
    pub width: f64,
    /// `int eta`
    pub total: f64,
    /// `int |eta|`
    pub abs_mass: f64,
    /// `int |grad eta|`
    pub grad_mass: f64,
    /// Support radius.
    pub support: f64,
    norm_const: f64,
}

const FINE: f64 = 1e-13;

/// `int_{S^{N-1}} h(n_1) dH^{N-1}(n)`.
fn sphere_n1<F: Fn(f64) -> f64>(h: F, dim: usize) -> f64 {
    use std::f64::consts::PI;
    let tol = Tolerance::new(1e-16, FINE, 4_000);
    match dim {
        1 => h(1.0) + h(-1.0),
        2 => 2.0 * adaptive(|phi: f64| h(phi.cos()), 0.0, PI, &[0.5 * PI], tol).value,
        _ => 2.0 * PI * adaptive(&h, -1.0, 1.0, &[0.0], tol).value,
    }
}

impl MollifierSpec {
    pub fn new(kind: MollifierKind, dim: usize) -> Result<Self> {
        let s = sphere_measure(dim)?;
        if let MollifierKind::TruncatedGaussian { cut } = kind {
            if !(cut > 0.0 && cut.is_finite()) {
                return input("gaussian cut must be positive");
            }
        }
        let n = dim as f64;
        let radial_kind = match kind {
            MollifierKind::SignedTest => MollifierKind::SmoothBump,
            k => k,
        };
        let norm_const = match radial_kind {
            MollifierKind::Tent => n * (n + 1.0) / s,
            k => {
                let m = adaptive(
                    |r| k.g(r).0 * r.powi(dim as i32 - 1),
                    0.0,
                    k.outer(),
                    &[],
                    Tolerance::new(1e-300, 1e-15, 20_000),
                );
                1.0 / (s * m.value)
            }
        };
        let mut spec = MollifierSpec {
            kind,
            dim,
            gain: 1.0,
            width: 1.0,
            total: 0.0,
            abs_mass: 0.0,
            grad_mass: 0.0,
            support: kind.outer(),
            norm_const,
        };
        spec.refresh();
        Ok(spec)
    }

    pub fn tent(dim: usize) -> Result<Self> {
        Self::new(MollifierKind::Tent, dim)
    }

    /// Gaussian with unit standard deviation cut at six.
    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(MollifierKind::TruncatedGaussian { cut: 6.0 }, dim)
    }

    pub fn bump(dim: usize) -> Result<Self> {
        Self::new(MollifierKind::SmoothBump, dim)
    }

    pub fn signed_test(dim: usize) -> Result<Self> {
        Self::new(MollifierKind::SignedTest, dim)
    }

    pub fn with_gain(mut self, gain: f64) -> Result<Self> {
        if !gain.is_finite() {
            return input("mollifier gain must be finite");
        }
        self.gain = gain;
        self.refresh();
        Ok(self)
    }

    pub fn with_width(mut self, width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return input("mollifier width must be positive");
        }
        self.width = width;
        self.support = width * self.kind.outer();
        self.refresh();
        Ok(self)
    }

    fn refresh(&mut self) {
        self.total = match self.kind {
            MollifierKind::SignedTest => 0.0,
            _ => self.gain,
        };
        self.abs_mass = self.integrate(|r, c| self.eta_rc(r, c).abs(), &[]);
        self.grad_mass = self.integrate(|r, c| self.grad_norm(r, c), &[]);
    }

    /// True when `eta` depends on `|z|` only.
    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, MollifierKind::SignedTest)
    }

    /// `eta` at radius `r` and direction cosine `c = z_1 / |z|`.
    fn eta_rc(&self, r: f64, c: f64) -> f64 {
        if r >= self.support {
            return 0.0;
        }
        let k = self.gain * self.width.powi(-(self.dim as i32)) * self.norm_const;
        let t = r / self.width;
        match self.kind {
            MollifierKind::SignedTest => k * self.kind.g(t).1 * c,
            _ => k * self.kind.g(t).0,
        }
    }

    /// Components of `grad eta = alpha z/|z| + beta e_1`.
    fn grad_parts(&self, r: f64, c: f64) -> (f64, f64) {
        if r >= self.support {
            return (0.0, 0.0);
        }
        let k = self.gain * self.width.powi(-(self.dim as i32) - 1) * self.norm_const;
        let t = r / self.width;
        let (_, g1, g2) = self.kind.g(t);
        match self.kind {
            MollifierKind::SignedTest => {
                let gr = self.kind.gp_over_r(t);
                (k * (g2 - gr) * c, k * gr)
            }
            _ => (k * g1, 0.0),
        }
    }

    fn grad_norm(&self, r: f64, c: f64) -> f64 {
        let (a, b) = self.grad_parts(r, c);
        (a * a + 2.0 * a * b * c + b * b).max(0.0).sqrt()
    }

    /// `int_{R^N} F(|z|, z_1/|z|) dz` over the support.
    fn integrate<F: Fn(f64, f64) -> f64>(&self, f: F, extra: &[f64]) -> f64 {
        let dim = self.dim;
        let mut br = extra.to_vec();
        if let MollifierKind::TruncatedGaussian { .. } = self.kind {
            br.push(self.width);
        }
        let outer = extra.iter().copied().fold(self.support, f64::max);
        adaptive(
            |r| {
                if r == 0.0 {
                    return 0.0;
                }
                r.powi(dim as i32 - 1) * sphere_n1(|c| f(r, c), dim)
            },
            0.0,
            outer,
            &br,
            Tolerance::new(1e-300, FINE, 40_000),
        )
        .value
    }

    /// `eta(z)`.
    pub fn eval(&self, z: &Point) -> f64 {
        let r = norm(*z);
        let c = if r > 0.0 { z[0] / r } else { 0.0 };
        self.eta_rc(r, c)
    }

    /// `int |grad eta| (|v| + 2)^{rq} dv`
    pub fn weighted_grad(&self, rq: f64) -> f64 {
        self.integrate(|r, c| self.grad_norm(r, c) * (r + 2.0).powf(rq), &[])
    }

    /// `int |eta(v)| |v|^alpha dv`
    pub fn abs_moment(&self, alpha: f64) -> f64 {
        self.integrate(|r, c| self.eta_rc(r, c).abs() * r.powf(alpha), &[])
    }

    /// `sup |eta|`, sampled on a fine radial grid.
    pub fn sup_norm(&self) -> f64 {
        (0..=2000)
            .map(|k| {
                let r = self.support * k as f64 / 2000.0;
                self.eta_rc(r, 1.0).abs().max(self.eta_rc(r, 0.0).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `(int |eta - other|, int |grad eta - grad other|)`.
    pub fn difference_norms(&self, other: &MollifierSpec) -> Result<(f64, f64)> {
        if other.dim != self.dim {
            return input("mollifiers must share a dimension");
        }
        let br = [self.support.min(other.support), self.support.max(other.support)];
        let l1 = self.integrate(|r, c| (self.eta_rc(r, c) - other.eta_rc(r, c)).abs(), &br);
        let w11 = self.integrate(
            |r, c| {
                let (a1, b1) = self.grad_parts(r, c);
                let (a2, b2) = other.grad_parts(r, c);
                let (a, b) = (a1 - a2, b1 - b2);
                (a * a + 2.0 * a * b * c + b * b).max(0.0).sqrt()
            },
            &br,
        );
        Ok((l1, w11))
    }

    /// `int_{-inf}^t eta` in one dimension.
    pub fn cdf_1d(&self, t: f64) -> f64 {
        let s = t / self.width;
        let o = self.kind.outer();
        let base = if s <= -o {
            0.0
        } else if s >= o {
            match self.kind {
                MollifierKind::SignedTest => 0.0,
                _ => 1.0,
            }
        } else {
            match self.kind {
                MollifierKind::Tent => {
                    if s <= 0.0 {
                        0.5 * (1.0 + s) * (1.0 + s)
                    } else {
                        1.0 - 0.5 * (1.0 - s) * (1.0 - s)
                    }
                }
                MollifierKind::TruncatedGaussian { cut } => {
                    let k = std::f64::consts::FRAC_1_SQRT_2;
                    let lo = libm::erf(-cut * k);
                    (libm::erf(s * k) - lo) / (libm::erf(cut * k) - lo)
                }
                MollifierKind::SmoothBump => bump_cdf(s),
                MollifierKind::SignedTest => self.norm_const * self.kind.g(s.abs()).0,
            }
        };
        self.gain * base
    }
}

/// Cumulative integral of the unit-mass one-dimensional bump, by cubic
/// Hermite interpolation of a fine table.
fn bump_cdf(s: f64) -> f64 {
    const NODES: usize = 4096;
    static TABLE: OnceLock<(f64, Vec<f64>)> = OnceLock::new();
    let (c, table) = TABLE.get_or_init(|| {
        let k = MollifierKind::SmoothBump;
        let tol = Tolerance::new(1e-300, 1e-15, 20_000);
        let c = 1.0 / adaptive(|x| k.g(x.abs()).0, -1.0, 1.0, &[0.0], tol).value;
        let h = 2.0 / NODES as f64;
        let mut acc = 0.0;
        let mut t = vec![0.0];
        for i in 0..NODES {
            let a = -1.0 + i as f64 * h;
            acc += c * adaptive(|x| k.g(x.abs()).0, a, a + h, &[], tol).value;
            t.push(acc);
        }
        (c, t)
    });
    let h = 2.0 / NODES as f64;
    let u = (s + 1.0) / h;
    let i = (u.floor() as usize).min(NODES - 1);
    let f = u - i as f64;
    let (x0, x1) = (-1.0 + i as f64 * h, -1.0 + (i + 1) as f64 * h);
    let d = |x: f64| c * MollifierKind::SmoothBump.g(x.abs()).0;
    let (p0, p1, m0, m1) = (table[i], table[i + 1], d(x0) * h, d(x1) * h);
    let f2 = f * f;
    let f3 = f2 * f;
    (2.0 * f3 - 3.0 * f2 + 1.0) * p0 + (f3 - 2.0 * f2 + f) * m0 + (-2.0 * f3 + 3.0 * f2) * p1 + (f3 - f2) * m1
}

#[derive(Debug, Clone)]
enum Path {
    /// One-dimensional piecewise-constant base: `left` plus jumps `(b, J)`.
    Steps { left: Vals, jumps: Vec<(f64, Vals)> },
    /// Planar piecewise-constant base, integrated over circles around `x`.
    Polar,
    /// Product Gauss-Legendre over the support of `eta`.
    Tensor,
}

/// Lazily evaluated `u * eta_(eps)`.
#[derive(Debug, Clone)]
pub struct Mollified {
    pub base: Field,
    pub mollifier: MollifierSpec,
    pub eps: f64,
    path: Path,
}

impl Mollified {
    /// Radius of the support of `eta_(eps)`.
    pub fn reach(&self) -> f64 {
        self.eps * self.mollifier.support
    }

    pub fn eval(&self, x: &Point) -> Vals {
        if let Path::Steps { left, jumps } = &self.path {
            let mut v = scale_vals(left, self.mollifier.total);
            let s = self.eps;
            for (b, j) in jumps {
                let phi = self.mollifier.cdf_1d((x[0] - b) / s);
                if phi != 0.0 {
                    for c in 0..v.len() {
                        v[c] += j[c] * phi;
                    }
                }
            }
            return v;
        }
        let a = self.reach();
        if self.base.flat_radius(x) >= a {
            return scale_vals(&self.base.eval(x), self.mollifier.total);
        }
        match self.path {
            Path::Polar => self.eval_polar(x),
            _ => self.eval_tensor(x),
        }
    }

    /// `eta_(eps)(z)`
    fn kernel(&self, z: &Point) -> f64 {
        let e = self.eps;
        self.mollifier.eval(&[z[0] / e, z[1] / e, z[2] / e]) * e.powi(-(self.base.dim as i32))
    }

    /// `u_eps(x) = int_0^a rho int eta_(eps)(-rho e(phi)) u(x + rho e(phi)) dphi drho`
    /// where `eta(r, c) = A(r) + B(r) c` and `c = -cos phi`.
    fn eval_polar(&self, x: &Point) -> Vals {
        let FieldKind::PiecewiseConstant { pieces, .. } = &self.base.kind else {
            return self.eval_tensor(x);
        };
        let a = self.reach();
        let e = self.eps;
        let m = &self.mollifier;
        let mut radii = vec![0.0, a];
        for (r, _) in pieces {
            r.critical_radii(x, &mut radii);
        }
        if let MollifierKind::TruncatedGaussian { .. } = m.kind {
            radii.push(e * m.width);
        }
        radii.retain(|r| *r >= 0.0 && *r <= a);
        sort_dedup(&mut radii, 1e-14 * a);
        let (gx, gw) = gauss_legendre(16);
        let mut acc = ZERO;
        let mut angles = Vec::new();
        for w in radii.windows(2) {
            let (r0, r1) = (w[0], w[1]);
            if r1 - r0 <= 0.0 {
                continue;
            }
            for (xi, wi) in gx.iter().zip(gw.iter()) {
                // smoothstep substitution damps endpoint singularities
                let s = 0.5 * (xi + 1.0);
                let sm = s * s * (3.0 - 2.0 * s);
                let dsm = 6.0 * s * (1.0 - s);
                let rho = r0 + (r1 - r0) * sm;
                let jac = 0.5 * wi * (r1 - r0) * dsm;
                if rho <= 0.0 || jac == 0.0 {
                    continue;
                }
                let av = m.eta_rc(rho / e, 0.0) / (e * e);
                let bv = if m.is_radial() { 0.0 } else { m.eta_rc(rho / e, 1.0) / (e * e) - av };
                angles.clear();
                for (r, _) in pieces {
                    r.circle_crossings(x, rho, &mut angles);
                }
                let (i0, i1) = arc_integrals(&self.base, x, rho, &mut angles);
                for c in 0..acc.len() {
                    acc[c] += jac * rho * (av * i0[c] + bv * i1[c]);
                }
            }
        }
        acc
    }

    fn eval_tensor(&self, x: &Point) -> Vals {
        let a = self.reach();
        let base = &self.base;
        if base.dim == 1 {
            let mut acc = ZERO;
            let mut br = vec![0.0];
            base.line_breaks(*x, [-1.0, 0.0, 0.0], 0.0, &mut br);
            for c in 0..base.components {
                let r = adaptive(
                    |z| {
                        let k = self.kernel(&[z, 0.0, 0.0]);
                        if k == 0.0 { 0.0 } else { k * base.eval(&[x[0] - z, 0.0, 0.0])[c] }
                    },
                    -a,
                    a,
                    &br,
                    Tolerance::new(1e-15, 1e-12, 20_000),
                );
                acc[c] = r.value;
            }
            return acc;
        }
        self.nest(x, [0.0; 3], 0, a * a)
    }

    /// Integral over coordinates `axis..dim` of `z` inside the ball, with the
    /// earlier coordinates fixed in `z`; panels split where the base field
    /// changes and mapped through a smoothstep.
    fn nest(&self, x: &Point, z: Point, axis: usize, room: f64) -> Vals {
        let dim = self.base.dim;
        let last = dim - 1;
        let mut acc = ZERO;
        if room <= 0.0 {
            return acc;
        }
        let h = room.sqrt();
        let mut p = *x;
        for i in 0..axis {
            p[i] -= z[i];
        }
        let mut e_axis = [0.0; 3];
        e_axis[axis] = -1.0;
        let mut br = vec![-h, 0.0, h];
        if axis == last {
            self.base.line_breaks(p, e_axis, 0.0, &mut br);
        } else {
            let mut e_last = [0.0; 3];
            e_last[last] = -1.0;
            self.base.transverse_breaks(p, e_last, e_axis, 0.0, axis + 2 < dim, &mut br);
        }
        br.retain(|s| s.is_finite() && *s >= -h && *s <= h);
        sort_dedup(&mut br, 1e-15 * h);
        let (gx, gw) = gauss_legendre(16);
        for w in br.windows(2) {
            let (s0, s1) = (w[0], w[1]);
            if s1 <= s0 {
                continue;
            }
            for (xi, wi) in gx.iter().zip(gw.iter()) {
                let t = 0.5 * (xi + 1.0);
                let sm = t * t * (3.0 - 2.0 * t);
                let s = s0 + (s1 - s0) * sm;
                let wt = 0.5 * wi * (s1 - s0) * 6.0 * t * (1.0 - t);
                let mut zz = z;
                zz[axis] = s;
                let v = if axis == last {
                    let k = self.kernel(&zz);
                    if k == 0.0 {
                        continue;
                    }
                    scale_vals(&self.base.eval(&along(p, e_axis, s)), k)
                } else {
                    self.nest(x, zz, axis + 1, room - s * s)
                };
                for c in 0..acc.len() {
                    acc[c] += wt * v[c];
                }
            }
        }
        acc
    }
}

/// `(int u dphi, int u (-cos phi) dphi)` over the circle of radius `rho`
/// around `x`, exact for piecewise-constant `u` given the crossing angles.
fn arc_integrals(u: &Field, x: &Point, rho: f64, angles: &mut Vec<f64>) -> (Vals, Vals) {
    use std::f64::consts::PI;
    let mut i0 = ZERO;
    let mut i1 = ZERO;
    angles.sort_by(f64::total_cmp);
    angles.dedup();
    let n = angles.len();
    let arcs: Vec<(f64, f64)> = if n == 0 {
        vec![(0.0, 2.0 * PI)]
    } else {
        (0..n)
            .map(|k| {
                let a = angles[k];
                let b = if k + 1 < n { angles[k + 1] } else { angles[0] + 2.0 * PI };
                (a, b)
            })
            .collect()
    };
    for (a, b) in arcs {
        if b <= a {
            continue;
        }
        let mid = 0.5 * (a + b);
        let v = u.eval(&[x[0] + rho * mid.cos(), x[1] + rho * mid.sin(), 0.0]);
        let len = b - a;
        let cs = -(b.sin() - a.sin());
        for c in 0..i0.len() {
            i0[c] += v[c] * len;
            i1[c] += v[c] * cs;
        }
    }
    (i0, i1)
}

/// `u * eta_(eps)`.
///
/// Constant bases give a constant, grid bases a discrete convolution on a
/// padded grid, and the remaining bases a lazily evaluated field.
pub fn mollify(f: &Field, m: &MollifierSpec, eps: f64) -> Result<Field> {
    if !(eps > 0.0 && eps.is_finite()) {
        return input("epsilon must be positive and finite");
    }
    if m.dim != f.dim {
        return input("mollifier and field dimensions differ");
    }
    let id = format!("mollify({},{},{eps})", f.id, m.kind.label());
    let path = match &f.kind {
        FieldKind::Smooth(crate::fields::SmoothFormula::Constant { value }) => {
            let v: Vec<f64> = scale_vals(value, m.total)[..f.components].to_vec();
            return Ok(Field::constant(f.dim, &v)?.named(id));
        }
        FieldKind::Grid { spec, values, .. } => return grid_convolution(f, spec, values, m, eps).map(|g| g.named(id)),
        FieldKind::PiecewiseConstant { pieces, .. } if f.dim == 1 => {
            let mut cuts = Vec::new();
            for (r, _) in pieces {
                r.line_crossings([0.0; 3], [1.0, 0.0, 0.0], &mut cuts);
            }
            sort_dedup(&mut cuts, 0.0);
            let left = match cuts.first() {
                Some(c) => f.eval(&point(&[c - 1.0])),
                None => f.eval(&point(&[0.0])),
            };
            let mut jumps = Vec::new();
            let mut prev = left;
            for (k, &b) in cuts.iter().enumerate() {
                let right = if k + 1 < cuts.len() { 0.5 * (b + cuts[k + 1]) } else { b + 1.0 };
                let v = f.eval(&point(&[right]));
                if v != prev {
                    let mut j = ZERO;
                    for c in 0..j.len() {
                        j[c] = v[c] - prev[c];
                    }
                    jumps.push((b, j));
                }
                prev = v;
            }
            Path::Steps { left, jumps }
        }
        FieldKind::PiecewiseConstant { .. } if f.dim == 2 => Path::Polar,
        _ => Path::Tensor,
    };
    Ok(Field {
        dim: f.dim,
        components: f.components,
        kind: FieldKind::Mollified(Box::new(Mollified { base: f.clone(), mollifier: m.clone(), eps, path })),
        id,
    })
}

fn grid_convolution(f: &Field, spec: &GridSpec, values: &[Vals], m: &MollifierSpec, eps: f64) -> Result<Field> {
    let h = spec.max_spacing();
    if eps < 8.0 * h {
        return Err(Error::Resolution(format!(
            "epsilon {eps} is below eight grid spacings ({h}); resample the field on a finer grid"
        )));
    }
    let dim = spec.dim;
    let a = eps * m.support;
    let mut pad = [0usize; 3];
    let mut origin = vec![0.0; dim];
    let mut extent = vec![0usize; dim];
    for ax in 0..dim {
        pad[ax] = (a / spec.spacing[ax]).ceil() as usize + 1;
        origin[ax] = spec.origin[ax] - pad[ax] as f64 * spec.spacing[ax];
        extent[ax] = spec.extent[ax] + 2 * pad[ax];
    }
    let out = GridSpec::new(&origin, &spec.spacing[..dim], &extent)?;
    let cell: f64 = spec.spacing[..dim].iter().product();
    let reach: Vec<i64> = (0..3).map(|ax| if ax < dim { (a / spec.spacing[ax]).ceil() as i64 } else { 0 }).collect();
    let idx: Vec<usize> = (0..out.cells()).collect();
    let e = eps;
    let vals_out: Vec<Vals> = crate::parallel::map(&idx, |&k| {
        let o = out.multi_index(k);
        let y = out.center(o);
        let mut acc = ZERO;
        // output index o corresponds to source index o - pad
        let src: Vec<i64> = (0..3).map(|ax| o[ax] as i64 - pad[ax] as i64).collect();
        for dz in -reach[2]..=reach[2] {
            for dy in -reach[1]..=reach[1] {
                for dx in -reach[0]..=reach[0] {
                    let s = [src[0] + dx, src[1] + dy, src[2] + dz];
                    if (0..dim).any(|ax| s[ax] < 0 || s[ax] >= spec.extent[ax] as i64) {
                        continue;
                    }
                    let si = [s[0] as usize, s[1] as usize, s[2] as usize];
                    let c = spec.center(si);
                    let z = [(y[0] - c[0]) / e, (y[1] - c[1]) / e, (y[2] - c[2]) / e];
                    let k = m.eval(&z);
                    if k != 0.0 {
                        let v = &values[spec.index(si)];
                        for comp in 0..acc.len() {
                            acc[comp] += k * v[comp];
                        }
                    }
                }
            }
        }
        scale_vals(&acc, cell * e.powi(-(dim as i32)))
    });
    let mut g = Field::grid(out, vals_out, f.components)?;
    if let FieldKind::Grid { source, .. } = &mut g.kind {
        *source = Some(f.id.clone());
    }
    Ok(g)
}

/// Result of comparing the shift integrals of `u_eps` and `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub lhs: QuadResult,
    pub rhs: QuadResult,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.lhs.value <= self.rhs.value + 3.0 * (self.lhs.error_estimate + self.rhs.error_estimate)
    }
}

/// `int |u_eps(x) - u_eps(x+h)|^q dx <= (int |eta|)^q int |u(x) - u(x+h)|^q dx`.
pub fn mollifier_bound_check(f: &Field, m: &MollifierSpec, eps: f64, q: f64, h: &[f64], tol: Tolerance) -> Result<BoundCheck> {
    if h.len() != f.dim {
        return input("shift dimension differs from field dimension");
    }
    let ue = mollify(f, m, eps)?;
    let shift = point(h);
    let lhs = shift_integral(&ue, &Region::Whole, shift, q, tol)?;
    let rhs = shift_integral(f, &Region::Whole, shift, q, tol)?.scaled(m.abs_mass.powf(q));
    Ok(BoundCheck { lhs, rhs })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn tent_constants() {
        for dim in 1..=3 {
            let t = MollifierSpec::tent(dim).unwrap();
            assert_abs_diff_eq!(t.total, 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(t.abs_mass, 1.0, epsilon = 1e-11);
            assert_abs_diff_eq!(t.grad_mass, dim as f64 + 1.0, epsilon = 1e-10);
        }
        let t = MollifierSpec::tent(1).unwrap();
        // int_{-1}^{1} (|v| + 2) dv = 5 for the unit tent gradient
        assert_abs_diff_eq!(t.weighted_grad(1.0), 5.0, epsilon = 1e-10);
        // int (1 - |v|) |v| dv = 1/3
        assert_abs_diff_eq!(t.abs_moment(1.0), 1.0 / 3.0, epsilon = 1e-11);
    }

    #[test]
    fn other_kinds() {
        for dim in 1..=3 {
            let g = MollifierSpec::gaussian(dim).unwrap();
            assert_abs_diff_eq!(g.abs_mass, 1.0, epsilon = 1e-10);
            let b = MollifierSpec::bump(dim).unwrap();
            assert_abs_diff_eq!(b.abs_mass, 1.0, epsilon = 1e-10);
            let s = MollifierSpec::signed_test(dim).unwrap();
            assert_eq!(s.total, 0.0);
            let total = s.integrate(|r, c| s.eta_rc(r, c), &[]);
            assert_abs_diff_eq!(total, 0.0, epsilon = 1e-12);
            assert!(s.abs_mass > 0.0 && s.grad_mass > 0.0);
        }
        // 1D gaussian gradient mass: 2 * eta(0) after renormalization
        let g = MollifierSpec::gaussian(1).unwrap();
        let peak = 1.0 / ((2.0 * PI).sqrt() * libm::erf(6.0 / 2f64.sqrt()));
        assert_abs_diff_eq!(g.grad_mass, 2.0 * peak * (1.0 - (-18f64).exp()), epsilon = 1e-10);
        // 1D signed test: int |b'| = 2 b(0)
        let s = MollifierSpec::signed_test(1).unwrap();
        assert_abs_diff_eq!(s.abs_mass, 2.0 * s.cdf_1d(0.0), epsilon = 1e-10);
    }

    #[test]
    fn cdfs_match_quadrature() {
        for m in [
            MollifierSpec::tent(1).unwrap(),
            MollifierSpec::gaussian(1).unwrap(),
            MollifierSpec::bump(1).unwrap(),
            MollifierSpec::signed_test(1).unwrap(),
        ] {
            for t in [-0.7f64, -0.1, 0.0, 0.35, 0.9, 2.5] {
                let q = adaptive(
                    |z| m.eval(&[z, 0.0, 0.0]),
                    -m.support,
                    t.min(m.support),
                    &[0.0],
                    Tolerance::new(1e-15, 1e-14, 20_000),
                );
                assert_abs_diff_eq!(m.cdf_1d(t), q.value, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn mollify_examples() {
        let c = Field::constant(1, &[2.5]).unwrap();
        let t = MollifierSpec::tent(1).unwrap();
        assert_eq!(mollify(&c, &t, 0.3).unwrap().eval(&point(&[0.4]))[0], 2.5);
        let s = MollifierSpec::signed_test(1).unwrap();
        assert_eq!(mollify(&c, &s, 0.3).unwrap().eval(&point(&[0.4]))[0], 0.0);
        let step = Field::step(0.0, 1.0, 1.0).unwrap();
        let ue = mollify(&step, &t, 0.2).unwrap();
        assert_abs_diff_eq!(ue.eval(&point(&[0.0]))[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ue.eval(&point(&[0.5]))[0], 1.0, epsilon = 1e-15);
        assert!(mollify(&step, &t, 0.0).is_err());
    }

    #[test]
    fn polar_and_tensor_paths_agree() {
        let disk = Field::ball_indicator(&[0.0, 0.0], 0.5, 1.0).unwrap();
        let t = MollifierSpec::tent(2).unwrap();
        let ue = mollify(&disk, &t, 0.1).unwrap();
        let FieldKind::Mollified(m) = &ue.kind else { panic!() };
        for x in [[0.45, 0.0, 0.0], [0.3, 0.35, 0.0], [0.52, -0.1, 0.0]] {
            let p = m.eval_polar(&x)[0];
            let q = m.eval_tensor(&x)[0];
            assert_abs_diff_eq!(p, q, epsilon = 2e-4);
        }
        // on the circle the tent average sees slightly less than half inside
        let on = ue.eval(&[0.5, 0.0, 0.0])[0];
        assert!(on > 0.4 && on < 0.5);
        let s = MollifierSpec::signed_test(2).unwrap();
        let ve = mollify(&disk, &s, 0.1).unwrap();
        let FieldKind::Mollified(m) = &ve.kind else { panic!() };
        let x = [0.47, 0.05, 0.0];
        assert_abs_diff_eq!(m.eval_polar(&x)[0], m.eval_tensor(&x)[0], epsilon = 1e-3);
    }

    #[test]
    fn grid_path() {
        let g = GridSpec::new(&[-1.0], &[0.01], &[300]).unwrap();
        let s = Field::step(0.0, 1.0, 1.0).unwrap().sample(&g).unwrap();
        let t = MollifierSpec::tent(1).unwrap();
        assert!(matches!(mollify(&s, &t, 0.05), Err(Error::Resolution(_))));
        let ue = mollify(&s, &t, 0.2).unwrap();
        let exact = mollify(&Field::step(0.0, 1.0, 1.0).unwrap(), &t, 0.2).unwrap();
        for x in [-0.1, 0.05, 0.5, 0.97] {
            assert_abs_diff_eq!(ue.eval(&point(&[x]))[0], exact.eval(&point(&[x]))[0], epsilon = 2e-3);
        }
    }

    #[test]
    fn bound_check_step() {
        let step = Field::step(0.0, 1.0, 1.0).unwrap();
        let t = MollifierSpec::tent(1).unwrap();
        let tol = Tolerance::new(1e-14, 1e-10, 20_000);
        let b = mollifier_bound_check(&step, &t, 0.1, 2.0, &[0.05], tol).unwrap();
        assert_abs_diff_eq!(b.rhs.value, 0.1, epsilon = 1e-12);
        assert!(b.holds());
        let t2 = t.clone().with_gain(2.0).unwrap();
        let b2 = mollifier_bound_check(&step, &t2, 0.1, 2.0, &[0.05], tol).unwrap();
        assert_abs_diff_eq!(b2.lhs.value, 4.0 * b.lhs.value, epsilon = 1e-12);
        assert_abs_diff_eq!(b2.rhs.value, 4.0 * b.rhs.value, epsilon = 1e-12);
    }

    #[test]
    fn difference_norms_of_widened_tent() {
        let a = MollifierSpec::tent(1).unwrap();
        let b = a.clone().with_width(1.1).unwrap();
        let (l1, w11) = a.difference_norms(&b).unwrap();
        assert_eq!(a.difference_norms(&a).unwrap(), (0.0, 0.0));
        assert!(l1 > 0.0 && l1 < 0.2);
        assert!(w11 > l1);
    }
}
