//! Radial kernel families `eps -> rho_eps` and their audits.
//!
//! Profiles are stored as power pieces in log form, so `eps` itself is
//! carried as `ln eps` and may be far below the smallest `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};
use crate::quadrature::{
    adaptive, radial_integral_pieces, sphere_measure, unit_ball_volume, PowerPiece, QuadBudget, QuadResult,
    RadialWeight, Tolerance,
};

/// Smallest accepted `ln eps`.
pub const MIN_LN_EPS: f64 = -1e5;

/// A scale `eps > 0` stored as its logarithm.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Epsilon {
    ln: f64,
}

impl Epsilon {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return input(format!("epsilon must be positive and finite, got {eps}"));
        }
        Ok(Epsilon { ln: eps.ln() })
    }

    pub fn from_ln(ln: f64) -> Result<Self> {
        if !(ln.is_finite() && ln >= MIN_LN_EPS) {
            return input(format!("ln epsilon must be finite and at least {MIN_LN_EPS}"));
        }
        Ok(Epsilon { ln })
    }

    /// `eps` itself; zero when it underflows.
    pub fn value(&self) -> f64 {
        self.ln.exp()
    }

    pub fn ln(&self) -> f64 {
        self.ln
    }

    /// `|ln eps|`
    pub fn abs_ln(&self) -> f64 {
        self.ln.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    /// Uniform density on the ball of radius `eps`.
    Trivial,
    /// `r^{-N}` on `[eps, |ln eps|^{-omega})`.
    Logarithmic { omega: f64 },
    /// `r^{1-N}` on `[eps - sigma, eps + sigma]` with `sigma = ratio * eps`.
    SigmaApprox { ratio: f64 },
}

impl KernelKind {
    pub fn label(&self) -> String {
        match self {
            KernelKind::Trivial => "trivial".into(),
            KernelKind::Logarithmic { omega } => format!("logarithmic(omega={omega})"),
            KernelKind::SigmaApprox { ratio } => format!("sigma_approx(ratio={ratio})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadialKernelFamily {
    pub kind: KernelKind,
    pub dim: usize,
}

impl RadialKernelFamily {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        sphere_measure(dim)?;
        match kind {
            KernelKind::Logarithmic { omega } if !(omega > 0.0 && omega < 1.0) => {
                return input("kernel omega must lie in (0, 1)");
            }
            KernelKind::SigmaApprox { ratio } if !(ratio > 0.0 && ratio < 1.0) => {
                return input("sigma ratio must lie in (0, 1)");
            }
            _ => {}
        }
        Ok(RadialKernelFamily { kind, dim })
    }

    pub fn trivial(dim: usize) -> Result<Self> {
        Self::new(KernelKind::Trivial, dim)
    }

    pub fn logarithmic(omega: f64, dim: usize) -> Result<Self> {
        Self::new(KernelKind::Logarithmic { omega }, dim)
    }

    /// The default rule `sigma_eps = eps / 2`.
    pub fn sigma_approx(dim: usize) -> Result<Self> {
        Self::new(KernelKind::SigmaApprox { ratio: 0.5 }, dim)
    }

    pub fn check_eps(&self, eps: Epsilon) -> Result<()> {
        if eps.ln < MIN_LN_EPS {
            return input("epsilon is below the supported range");
        }
        if let KernelKind::Logarithmic { .. } = self.kind {
            // eps in (0, 1/e - 1e-12]
            if eps.ln > (1.0 / std::f64::consts::E - 1e-12).ln() {
                return input("logarithmic kernels need epsilon < 1/e");
            }
        }
        Ok(())
    }

    /// `sigma_eps`, for the sigma-approximating family.
    pub fn sigma(&self, eps: Epsilon) -> Option<f64> {
        match self.kind {
            KernelKind::SigmaApprox { ratio } => Some(ratio * eps.value()),
            _ => None,
        }
    }

    /// The profile `r -> rho_eps(r)` as power pieces.
    pub fn profile(&self, eps: Epsilon) -> Result<RadialWeight> {
        self.check_eps(eps)?;
        let n = self.dim as f64;
        let s = sphere_measure(self.dim)?;
        Ok(match self.kind {
            KernelKind::Trivial => RadialWeight::new(vec![PowerPiece {
                ln_lo: f64::NEG_INFINITY,
                ln_hi: eps.ln,
                ln_coeff: -n * eps.ln - unit_ball_volume(self.dim)?.ln(),
                power: 0.0,
            }]),
            KernelKind::Logarithmic { omega } => {
                let l = eps.abs_ln();
                let ln_r = -omega * l.ln();
                RadialWeight::new(vec![PowerPiece {
                    ln_lo: eps.ln,
                    ln_hi: ln_r,
                    ln_coeff: -(s * (l - omega * l.ln())).ln(),
                    power: -n,
                }])
            }
            KernelKind::SigmaApprox { ratio } => {
                // [eps - sigma, eps + sigma], closed at the top
                let hi = eps.ln + (1.0 + ratio).ln();
                RadialWeight::new(vec![PowerPiece {
                    ln_lo: eps.ln + (1.0 - ratio).ln(),
                    ln_hi: hi + 4.0 * f64::EPSILON * hi.abs().max(1.0),
                    ln_coeff: -(2.0 * ratio * s).ln() - eps.ln,
                    power: 1.0 - n,
                }])
            }
        })
    }

    /// `rho_eps(r)`.
    pub fn kernel_profile(&self, eps: Epsilon, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return input("kernel radius must be positive");
        }
        Ok(self.profile(eps)?.eval(r))
    }

    /// Outer radius of the support.
    pub fn support_radius(&self, eps: Epsilon) -> Result<f64> {
        Ok(self.profile(eps)?.ln_support().map(|(_, hi)| hi.exp()).unwrap_or(0.0))
    }

    /// `int_{R^N} rho_eps(|z|) dz` through the exact power path.
    pub fn kernel_mass(&self, eps: Epsilon) -> Result<QuadResult> {
        radial_integral_pieces(&self.profile(eps)?, self.dim, 0.0, f64::INFINITY)
    }

    /// The same mass by adaptive quadrature in `ln r` over the support.
    pub fn kernel_mass_quadrature(&self, eps: Epsilon, budget: &QuadBudget) -> Result<QuadResult> {
        self.weighted_moment_quadrature(eps, 0.0, budget)
    }

    /// `int_delta^inf rho_eps(r) r^{N-1} dr`, without the sphere factor.
    pub fn support_tail(&self, eps: Epsilon, delta: f64) -> Result<f64> {
        if !(delta > 0.0) {
            return input("support tail needs delta > 0");
        }
        self.profile(eps)?.moment(self.dim, delta, f64::INFINITY)
    }

    /// `eps^alpha int rho_eps(|z|) |z|^{-alpha} dz` through the power path.
    pub fn scaled_moment(&self, eps: Epsilon, alpha: f64) -> Result<f64> {
        let w = self.profile(eps)?.times_power(-alpha);
        let shifted = RadialWeight::new(
            w.pieces.iter().map(|p| PowerPiece { ln_coeff: p.ln_coeff + alpha * eps.ln, ..*p }).collect(),
        );
        Ok(radial_integral_pieces(&shifted, self.dim, 0.0, f64::INFINITY)?.value)
    }

    /// `eps^alpha int rho_eps(|z|) |z|^{-alpha} dz` by adaptive quadrature in
    /// `t = ln(r / eps)`.
    pub fn weighted_moment_quadrature(&self, eps: Epsilon, alpha: f64, budget: &QuadBudget) -> Result<QuadResult> {
        budget.validate()?;
        let w = self.profile(eps)?;
        let n = self.dim as f64;
        let s = sphere_measure(self.dim)?;
        let (lo, hi) = w.ln_support().expect("kernel profiles are nonempty");
        // the trivial profile reaches r = 0; its integrand decays like r^N
        let lo = if lo == f64::NEG_INFINITY { hi - 750.0 / n.max(1.0) } else { lo };
        let g = |tau: f64| {
            let t = tau + eps.ln;
            let lw = w.ln_eval(t);
            if lw == f64::NEG_INFINITY {
                0.0
            } else {
                (lw + (n - alpha) * t + alpha * eps.ln).exp()
            }
        };
        let mut breaks: Vec<f64> = w.ln_breaks().into_iter().map(|b| b - eps.ln).collect();
        breaks.retain(|b| b.is_finite());
        let tol = Tolerance::new(1e-300, budget.target_rel_error.min(1e-12), budget.max_evaluations);
        Ok(adaptive(g, lo - eps.ln, hi - eps.ln, &breaks, tol).scaled(s))
    }
}

/// Closed form of `eps^alpha int rho_{eps,omega}(|z|) |z|^{-alpha} dz`.
pub fn log_kernel_moment(eps: Epsilon, omega: f64, alpha: f64, dim: usize) -> Result<f64> {
    let fam = RadialKernelFamily::logarithmic(omega, dim)?;
    fam.check_eps(eps)?;
    if !(alpha > 0.0) {
        return input("moment order alpha must be positive");
    }
    let l = eps.abs_ln();
    let lead = (alpha * eps.ln + alpha * omega * l.ln()).exp();
    Ok((1.0 - lead) / (alpha * (l - omega * l.ln())))
}

/// One row of a kernel audit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditRow {
    pub kernel: String,
    pub dim: usize,
    pub epsilon: f64,
    pub ln_epsilon: f64,
    pub mass: f64,
    pub mass_err: f64,
    pub tail_delta: f64,
    pub moment_alpha: f64,
    /// Closed-form minus quadrature moment, logarithmic kernels only.
    pub moment_check: Option<f64>,
}

/// `|ln eps|` log-spaced from `lo` to `hi`, `count` points.
pub fn audit_grid(lo: f64, hi: f64, count: usize) -> Result<Vec<Epsilon>> {
    if !(lo > 0.0 && hi > lo) || count < 2 {
        return input("audit grid needs 0 < lo < hi and at least two points");
    }
    let r = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|k| Epsilon::from_ln(-(lo * (r * k as f64).exp()))).collect()
}

pub fn kernel_audit(
    fam: &RadialKernelFamily,
    grid: &[Epsilon],
    delta: f64,
    alpha: f64,
    budget: &QuadBudget,
) -> Result<Vec<AuditRow>> {
    grid.iter()
        .map(|&e| {
            let mass = fam.kernel_mass(e)?;
            // kernels reaching the origin have an infinite moment once alpha >= N
            let moment = match fam.scaled_moment(e, alpha) {
                Err(Error::Divergence(_)) => f64::INFINITY,
                r => r?,
            };
            let moment_check = match fam.kind {
                KernelKind::Logarithmic { omega } => {
                    let closed = log_kernel_moment(e, omega, alpha, fam.dim)?;
                    Some(closed - fam.weighted_moment_quadrature(e, alpha, budget)?.value)
                }
                _ => None,
            };
            Ok(AuditRow {
                kernel: fam.kind.label(),
                dim: fam.dim,
                epsilon: e.value(),
                ln_epsilon: e.ln(),
                mass: mass.value,
                mass_err: mass.error_estimate,
                tail_delta: fam.support_tail(e, delta)?,
                moment_alpha: moment,
                moment_check,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn eps(x: f64) -> Epsilon {
        Epsilon::new(x).unwrap()
    }

    #[test]
    fn profile_examples() {
        let t = RadialKernelFamily::trivial(1).unwrap();
        assert_abs_diff_eq!(t.kernel_profile(eps(0.5), 0.25).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(t.kernel_profile(eps(0.5), 1.0).unwrap(), 0.0);
        let l = RadialKernelFamily::logarithmic(0.5, 1).unwrap();
        let e = Epsilon::from_ln(-10.0).unwrap();
        assert_abs_diff_eq!(l.support_radius(e).unwrap(), 10f64.powf(-0.5), epsilon = 1e-14);
        assert!(l.kernel_profile(e, 0.9 * e.value()).unwrap() == 0.0);
        assert!(l.kernel_profile(e, 1.1 * e.value()).unwrap() > 0.0);
        assert!(l.check_eps(eps(1.0 / std::f64::consts::E)).is_err());
    }

    #[test]
    fn masses() {
        let b = QuadBudget::new(20_000, 1e-10, 0).unwrap();
        for dim in 1..=3 {
            for fam in [
                RadialKernelFamily::trivial(dim).unwrap(),
                RadialKernelFamily::logarithmic(0.3, dim).unwrap(),
                RadialKernelFamily::sigma_approx(dim).unwrap(),
            ] {
                for e in [0.3, 1e-3, 1e-40] {
                    let m = fam.kernel_mass(eps(e)).unwrap();
                    assert_abs_diff_eq!(m.value, 1.0, epsilon = 1e-12);
                    let mq = fam.kernel_mass_quadrature(eps(e), &b).unwrap();
                    assert_abs_diff_eq!(mq.value, 1.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn tails() {
        let t = RadialKernelFamily::trivial(2).unwrap();
        assert_eq!(t.support_tail(eps(0.05), 0.1).unwrap(), 0.0);
        assert!(t.support_tail(eps(0.2), 0.1).unwrap() > 0.0);
        let l = RadialKernelFamily::logarithmic(0.5, 2).unwrap();
        let e = Epsilon::from_ln(-200.0).unwrap();
        assert_eq!(l.support_tail(e, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn log_moment_closed_form_matches_quadrature() {
        let b = QuadBudget::new(20_000, 1e-12, 0).unwrap();
        let e = Epsilon::from_ln(-5.0).unwrap();
        let closed = log_kernel_moment(e, 0.5, 1.0, 2).unwrap();
        let fam = RadialKernelFamily::logarithmic(0.5, 2).unwrap();
        let q = fam.weighted_moment_quadrature(e, 1.0, &b).unwrap();
        assert_abs_diff_eq!(closed, q.value, epsilon = 1e-9);
        assert_abs_diff_eq!(closed, fam.scaled_moment(e, 1.0).unwrap(), epsilon = 1e-12);
        assert!(log_kernel_moment(e, 0.5, 0.0, 2).is_err());
    }
}
