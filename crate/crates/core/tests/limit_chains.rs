use std::collections::BTreeMap;

use besovlab_core::fields::jump_set_of;
use besovlab_core::jumps::{dimensional_constants, jump_variation};
use besovlab_core::limits::*;
use besovlab_core::quadrature::Tolerance;
use besovlab_core::seminorms::*;
use besovlab_core::*;

fn step() -> Field {
    Field::step(0.0, 1.0, 1.0).unwrap()
}

fn params() -> FunctionalParams {
    FunctionalParams::jump_regime(2.0, Region::interval(-1.0, 2.0)).unwrap()
}

fn budget() -> QuadBudget {
    QuadBudget::new(4_000, 1e-7, 1).unwrap()
}

fn tol() -> Tolerance {
    Tolerance::new(1e-15, 1e-10, 4_000)
}

fn gagliardo_sweep(m: &MollifierSpec) -> EpsilonSweepResult {
    let (f, p, b) = (step(), params(), budget());
    epsilon_sweep("gagliardo_constant", BTreeMap::new(), &EpsilonGrid::default_gagliardo(), Model::InverseLog, |e| {
        Ok(gagliardo_constant_at(&f, m, &p, e.value(), &b, default_method(1))?.quad())
    })
    .unwrap()
}

#[test]
fn trivial_besov_constant_of_step_extrapolates_to_two() {
    let (f, p, b) = (step(), params(), budget());
    let k = RadialKernelFamily::trivial(1).unwrap();
    let grid = EpsilonGrid::Geometric { eps0: 0.1, ratio: 0.1, count: 4 };
    let s = epsilon_sweep("besov_constant", BTreeMap::new(), &grid, Model::Power { s: 1.0 }, |e| {
        Ok(besov_constant_at(&f, &p, &k, e, &b, default_method(1))?.quad())
    })
    .unwrap();
    let x = s.limit().unwrap();
    assert!((x.limit - 2.0).abs() <= 0.02, "{x:?}");
}

#[test]
fn gagliardo_constant_of_step_extrapolates_to_four() {
    let s = gagliardo_sweep(&MollifierSpec::tent(1).unwrap());
    assert!(s.valid_rows().count() == 8);
    let x = s.limit().unwrap();
    assert!((x.limit - 4.0).abs() <= 0.01, "{x:?}");
    assert!(s.tail_min <= s.tail_max);
}

#[test]
fn extrapolated_gagliardo_constant_is_continuous_in_the_mollifier() {
    let tent = MollifierSpec::tent(1).unwrap();
    let other = MollifierSpec::tent(1).unwrap().with_width(1.05).unwrap().with_gain(1.02).unwrap();
    let a = gagliardo_sweep(&tent).limit().unwrap();
    let b = gagliardo_sweep(&other).limit().unwrap();
    let moments = field_moments(&step(), &params(), tol()).unwrap();
    let bound = continuity_bound(&tent, &other, &params(), &moments).unwrap();
    let slack = a.uncertainty.sqrt() + b.uncertainty.sqrt();
    let diff = (b.limit.max(0.0).sqrt() - a.limit.max(0.0).sqrt()).abs();
    assert!(diff <= bound.sqrt() + slack, "diff {diff}, bound {}", bound.sqrt());
    // the perturbation is visible, so the check is not vacuous
    assert!((b.limit - a.limit).abs() > 0.01);
}

#[test]
fn jump_chain_of_step_passes() {
    let (f, p, b) = (step(), params(), budget());
    let tent = MollifierSpec::tent(1).unwrap();
    let mass_q = tent.total.powf(p.q);
    let sphere = 2.0;
    let g = gagliardo_sweep(&tent).limit().unwrap();
    let mut terms = vec![Term::new("gagliardo", g.limit, g.uncertainty)];
    for kind in [KernelKind::Trivial, KernelKind::Logarithmic { omega: 0.5 }] {
        let k = RadialKernelFamily::new(kind, 1).unwrap();
        let s = epsilon_sweep("besov_constant", BTreeMap::new(), &EpsilonGrid::default_variation(), Model::ConstantTail, |e| {
            Ok(besov_constant_at(&f, &p, &k, e, &b, default_method(1))?.quad())
        })
        .unwrap();
        let x = s.limit().unwrap();
        terms.push(Term::new(format!("besov:{}", kind.label()), mass_q * sphere * x.limit, x.uncertainty));
    }
    let v = epsilon_sweep("spherical_variation", BTreeMap::new(), &EpsilonGrid::default_variation(), Model::ConstantTail, |e| {
        Ok(spherical_variation(&f, &p, e.value(), SphereRule::Exact2pt, tol())?.quad())
    })
    .unwrap()
    .limit()
    .unwrap();
    terms.push(Term::new("variation", mass_q * v.limit, v.uncertainty));
    let js = jump_set_of(&f).unwrap();
    let moment1 = dimensional_constants(1, &[]).unwrap().moment1;
    terms.push(Term::new("jump", mass_q * moment1 * jump_variation(&js, p.q, &p.region).unwrap(), 0.0));
    for t in &terms {
        assert!((t.value - 4.0).abs() <= 0.4, "{t:?}");
    }
    let verdict = chain_check(ChainKind::JumpChain, &terms, relative_tolerance(0.1, &terms, 0.0)).unwrap();
    assert!(verdict.pass, "{verdict:?}");
}
