//! Experiment drivers. Each builds a [`Report`] from a validated config;
//! nothing here writes files.

use std::collections::BTreeMap;

use anyhow::{anyhow, Context};
use besovlab_core::fields::jump_set_of;
use besovlab_core::jumps::{dimensional_constants, directional_jump_variation, jump_variation, total_variation, ConstantsTable};
use besovlab_core::kernels::{audit_grid, kernel_audit, AuditRow};
use besovlab_core::limits::{chain_check, epsilon_sweep, ChainKind, EpsilonGrid, EpsilonSweepResult, Model, Term};
use besovlab_core::quadrature::{sphere_measure, Tolerance};
use besovlab_core::seminorms::{
    besov_constant_at, default_shift_grid, directional_variation, field_moments,
    gagliardo_constant_at, gagliardo_split_bounds, interpolation_check, line_tolerance, lq_convergence_check,
    measured_split, spherical_variation, uniform_gagliardo_bound, variation_inequality_check, FunctionalValue,
};
use besovlab_core::{Epsilon, Field, KernelKind, QuadBudget, RadialKernelFamily, SphereRule};

use crate::config::{ExperimentConfig, ExperimentKind, Resolved};
use crate::report::{num, table_csv, Check, Relation, Report, TermRecord};

/// Validated config plus everything derived from it.
pub struct Ctx<'a> {
    pub cfg: &'a ExperimentConfig,
    pub res: Resolved,
    pub tol: Tolerance,
}

impl<'a> Ctx<'a> {
    pub fn new(cfg: &'a ExperimentConfig) -> anyhow::Result<Self> {
        let res = cfg.resolve()?;
        let tol = line_tolerance(&res.budget);
        Ok(Ctx { cfg, res, tol })
    }

    fn dim(&self) -> usize {
        self.res.field.dim
    }

    fn base_params(&self, f: &Field) -> BTreeMap<String, String> {
        let p = &self.res.params;
        let mut m = BTreeMap::new();
        m.insert("field".into(), f.id.clone());
        m.insert("r".into(), num(p.r));
        m.insert("q".into(), num(p.q));
        m.insert("region".into(), format!("{:?}", p.region));
        m.insert("method".into(), format!("{:?}", self.res.method));
        m.insert("max_evaluations".into(), self.res.budget.max_evaluations.to_string());
        m.insert("target_rel_error".into(), num(self.res.budget.target_rel_error));
        m.insert("seed".into(), self.cfg.seed.to_string());
        m
    }

    /// Per-row budget; the seed depends on the row's scale only, so it is
    /// the same whichever thread evaluates the row.
    fn row_budget(&self, e: Epsilon) -> QuadBudget {
        let s = self.cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ e.ln().to_bits();
        self.res.budget.with_seed(s)
    }

    fn sweep<F>(&self, id: &str, params: BTreeMap<String, String>, grid: &EpsilonGrid, model: Model, f: F) -> anyhow::Result<EpsilonSweepResult>
    where
        F: Fn(Epsilon, &QuadBudget) -> besovlab_core::Result<FunctionalValue> + Sync + Send,
    {
        epsilon_sweep(id, params, grid, model, |e| Ok(f(e, &self.row_budget(e))?.quad()))
            .with_context(|| format!("sweep {id}"))
    }

    fn variation_sweep(&self, f: &Field) -> anyhow::Result<EpsilonSweepResult> {
        let rule = SphereRule::default_for(self.dim());
        let mut params = self.base_params(f);
        params.insert("rule".into(), format!("{rule:?}"));
        let p = &self.res.params;
        self.sweep("spherical_variation", params, &self.cfg.grid, Model::ConstantTail, |e, _| {
            spherical_variation(f, p, e.value(), rule, self.tol)
        })
    }

    fn besov_sweep(&self, f: &Field, kind: KernelKind) -> anyhow::Result<EpsilonSweepResult> {
        let k = RadialKernelFamily::new(kind, self.dim())?;
        let mut params = self.base_params(f);
        params.insert("kernel".into(), kind.label());
        let (p, method) = (&self.res.params, self.res.method);
        self.sweep("besov_constant", params, &self.cfg.grid, Model::ConstantTail, |e, b| {
            besov_constant_at(f, p, &k, e, b, method)
        })
    }

    fn gagliardo_sweep(&self, f: &Field) -> anyhow::Result<EpsilonSweepResult> {
        let mut params = self.base_params(f);
        params.insert("mollifier".into(), self.res.mollifier.kind.label());
        let (p, m, method) = (&self.res.params, &self.res.mollifier, self.res.method);
        self.sweep("gagliardo_constant", params, &self.cfg.gagliardo_grid, Model::InverseLog, |e, b| {
            gagliardo_constant_at(f, m, p, e.value(), b, method)
        })
    }

    /// `|int eta|^q`
    fn mass_q(&self) -> f64 {
        self.res.mollifier.total.abs().powf(self.res.params.q)
    }
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<Report> {
    let ctx = Ctx::new(cfg)?;
    let mut rep = Report::new(cfg.kind.name(), &ctx.res.field.id, cfg.seed);
    match cfg.kind {
        ExperimentKind::KernelAudit => run_kernel_audit(&ctx, &mut rep)?,
        ExperimentKind::Constants => run_constants(&ctx, &mut rep)?,
        ExperimentKind::Sandwich => run_sandwich(&ctx, &mut rep)?,
        ExperimentKind::KernelEquivalence => run_chain(&ctx, &mut rep, false)?,
        ExperimentKind::JumpChain => run_chain(&ctx, &mut rep, true)?,
        ExperimentKind::Interpolation => run_interpolation(&ctx, &mut rep)?,
        ExperimentKind::TruncationConvergence => run_truncation(&ctx, &mut rep)?,
        ExperimentKind::BoundsAudit => run_bounds(&ctx, &mut rep)?,
    }
    rep.finish();
    Ok(rep)
}

fn record(name: &str, raw: f64, raw_unc: f64, factor: f64, op: &str, params: BTreeMap<String, String>) -> TermRecord {
    TermRecord {
        name: name.into(),
        value: factor * raw,
        uncertainty: factor.abs() * raw_unc,
        factor,
        raw,
        operation: op.into(),
        params,
    }
}

fn extrapolated(s: &EpsilonSweepResult) -> anyhow::Result<(f64, f64)> {
    let x = s.limit().map_err(|e| anyhow!("{}: {e}", s.functional))?;
    Ok((x.limit, x.uncertainty))
}

/// Largest magnitude among chain terms and the scaled sweep rows feeding them.
fn chain_scale(terms: &[TermRecord], sweeps: &[(f64, &EpsilonSweepResult)]) -> f64 {
    let t = terms.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
    sweeps
        .iter()
        .flat_map(|(factor, s)| s.valid_rows().map(move |r| (factor * r.value).abs()))
        .fold(t, f64::max)
}

fn as_terms(t: &[TermRecord]) -> Vec<Term> {
    t.iter().map(|t| Term::new(t.name.clone(), t.value, t.uncertainty)).collect()
}

fn plot_sweep(rep: &mut Report, figure: &str, label: &str, factor: f64, s: &EpsilonSweepResult) {
    for r in s.valid_rows() {
        rep.plot(figure, r.epsilon, factor * r.value, label);
    }
}

struct ChainTerms {
    terms: Vec<TermRecord>,
    sweeps: Vec<(f64, EpsilonSweepResult)>,
}

/// Gagliardo, Besov-constant and variation terms, scaled to a common
/// normalization; the jump term when `with_jump`.
fn chain_terms(ctx: &Ctx, f: &Field, with_jump: bool) -> anyhow::Result<ChainTerms> {
    let mass_q = ctx.mass_q();
    let sphere = sphere_measure(ctx.dim())?;
    let mut terms = Vec::new();
    let mut sweeps = Vec::new();

    let g = ctx.gagliardo_sweep(f)?;
    let (v, u) = extrapolated(&g)?;
    terms.push(record("gagliardo", v, u, 1.0, "gagliardo_constant_at", g.params.clone()));
    sweeps.push((1.0, g));

    for kind in &ctx.cfg.kernels {
        let s = ctx.besov_sweep(f, *kind)?;
        let (v, u) = extrapolated(&s)?;
        let factor = mass_q * sphere;
        terms.push(record(&format!("besov:{}", kind.label()), v, u, factor, "besov_constant_at", s.params.clone()));
        sweeps.push((factor, s));
    }

    let s = ctx.variation_sweep(f)?;
    let (v, u) = extrapolated(&s)?;
    terms.push(record("variation", v, u, mass_q, "spherical_variation", s.params.clone()));
    sweeps.push((mass_q, s));

    if with_jump {
        let js = jump_set_of(f)?;
        let moment1 = dimensional_constants(ctx.dim(), &[])?.moment1;
        let jv = jump_variation(&js, ctx.res.params.q, &ctx.res.region)?;
        let mut params = ctx.base_params(f);
        params.insert("moment1".into(), num(moment1));
        terms.push(record("jump", jv, 0.0, mass_q * moment1, "jump_variation", params));
    }
    Ok(ChainTerms { terms, sweeps })
}

fn run_chain(ctx: &Ctx, rep: &mut Report, with_jump: bool) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let ct = chain_terms(ctx, f, with_jump)?;
    let tol = &ctx.cfg.tolerances;
    let refs: Vec<(f64, &EpsilonSweepResult)> = ct.sweeps.iter().map(|(k, s)| (*k, s)).collect();
    let scale = chain_scale(&ct.terms, &refs);
    let kind = if with_jump { ChainKind::JumpChain } else { ChainKind::KernelEquivalence };
    rep.verdicts.push(chain_check(kind, &as_terms(&ct.terms), tol.gagliardo * scale)?);

    // variations and Besov constants converge fast, so they are held to
    // the tighter tolerance among themselves
    let fast: Vec<&TermRecord> = ct.terms.iter().filter(|t| t.name == "variation" || t.name.starts_with("besov:")).collect();
    let mut spread: f64 = 0.0;
    for (i, a) in fast.iter().enumerate() {
        for b in &fast[..i] {
            spread = spread.max((a.value - b.value).abs());
        }
    }
    let fast_scale = fast.iter().map(|t| t.value.abs()).fold(0.0, f64::max);
    rep.checks.push(
        Check::new("variation_and_besov_terms_agree", spread, 0.0, Relation::Close, 0.0, tol.variation * fast_scale)
            .from("chain_check"),
    );

    if let Some(jump) = ct.terms.iter().find(|t| t.name == "jump").cloned() {
        for t in ct.terms.iter().filter(|t| t.name != "jump") {
            let rel = if t.name == "gagliardo" { tol.gagliardo } else { tol.variation };
            rep.checks.push(
                Check::new(format!("{}_matches_jump", t.name), t.value, t.uncertainty, Relation::Close, jump.value, rel * jump.value.abs())
                    .from(&t.operation),
            );
        }
        directional_checks(ctx, rep)?;
    }

    for (factor, s) in &ct.sweeps {
        let label = ct.terms.iter().find(|t| t.params == s.params).map(|t| t.name.clone()).unwrap_or_default();
        plot_sweep(rep, "convergence", &label, *factor, s);
    }
    rep.terms = ct.terms;
    for (i, (_, s)) in ct.sweeps.into_iter().enumerate() {
        let name = format!("{}_{}", i, rep.terms[i].name);
        rep.add_sweep(&name, s);
    }
    Ok(())
}

fn directional_checks(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let js = jump_set_of(f)?;
    let eps = ctx.cfg.directional.epsilon;
    for n in ctx.cfg.directional.directions_for(ctx.dim()) {
        let measured = directional_variation(f, &ctx.res.params, &n, eps, ctx.tol)?;
        let reference = directional_jump_variation(&js, ctx.res.params.q, &n, &ctx.res.region)?;
        let mut c = Check::new(
            format!("directional_{}", n.iter().map(|v| num(*v)).collect::<Vec<_>>().join("_")),
            measured.value,
            measured.error_estimate,
            Relation::Close,
            reference,
            ctx.cfg.tolerances.variation * reference.abs(),
        )
        .from("directional_variation");
        c.params = measured.provenance.params.clone();
        rep.checks.push(c);
    }
    Ok(())
}

fn run_sandwich(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let mass_q = ctx.mass_q();
    let v = ctx.variation_sweep(f)?;
    let g = ctx.gagliardo_sweep(f)?;
    let (gv, gu) = extrapolated(&g)?;
    let terms = vec![
        record("lower", v.tail_min, 0.0, mass_q, "spherical_variation.tail_min", v.params.clone()),
        record("mid", gv, gu, 1.0, "gagliardo_constant_at", g.params.clone()),
        record("upper", v.tail_max, 0.0, mass_q, "spherical_variation.tail_max", v.params.clone()),
    ];
    let scale = chain_scale(&terms, &[(mass_q, &v), (1.0, &g)]);
    rep.verdicts.push(chain_check(ChainKind::Sandwich, &as_terms(&terms), ctx.cfg.tolerances.gagliardo * scale)?);
    if ctx.res.mollifier.total.abs() < 1e-12 {
        rep.checks.push(
            Check::new("mid_vanishes_for_zero_mass_mollifier", gv.abs(), gu, Relation::AtMost, 0.0, ctx.cfg.tolerances.vanishing)
                .from("gagliardo_constant_at"),
        );
    }
    plot_sweep(rep, "convergence", "variation", mass_q, &v);
    plot_sweep(rep, "convergence", "gagliardo", 1.0, &g);
    rep.terms = terms;
    rep.add_sweep("variation", v);
    rep.add_sweep("gagliardo", g);
    Ok(())
}

fn run_interpolation(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let js = jump_set_of(f)?;
    let p = ctx.res.params.p.expect("validated");
    let (lhs, rhs) = interpolation_check(f, &js, ctx.res.params.q, p, &default_shift_grid(f)?, ctx.tol)?;
    let tol = ctx.cfg.tolerances.identity * rhs.abs().max(1.0);
    let mut c = Check::new("interpolation_inequality", lhs.value, lhs.error_estimate, Relation::AtMost, rhs, tol).from("interpolation_check");
    c.params = lhs.provenance.params.clone();
    rep.checks.push(c.clone());
    if ctx.cfg.interpolation.expect_equality {
        let mut e = Check::new("interpolation_equality", lhs.value, lhs.error_estimate, Relation::Close, rhs, tol).from("interpolation_check");
        e.params = c.params;
        rep.checks.push(e);
    }
    rep.tables.insert("total_variation".into(), serde_json::json!(total_variation(&js)));
    Ok(())
}

fn run_truncation(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let top = f.max_amplitude().ok_or_else(|| anyhow!("field has no amplitude"))?;
    let full = chain_terms(ctx, f, true)?.terms;
    let mut by_level: Vec<(f64, Vec<TermRecord>)> = Vec::new();
    for &l in &ctx.cfg.truncation.levels {
        let t = chain_terms(ctx, &f.truncate(l)?, true)?.terms;
        for r in &t {
            rep.plot("truncation", l, r.value, &r.name);
        }
        by_level.push((l, t));
    }
    let exact = ctx.cfg.truncation.exact_tolerance;
    for (i, term) in full.iter().enumerate() {
        let slack = exact * term.value.abs().max(1.0);
        let mut worst_drop: f64 = 0.0;
        for w in by_level.windows(2) {
            worst_drop = worst_drop.max(w[0].1[i].value - w[1].1[i].value);
        }
        rep.checks.push(
            Check::new(format!("{}_nondecreasing_in_level", term.name), worst_drop, 0.0, Relation::AtMost, 0.0, slack).from(&term.operation),
        );
        for (l, t) in by_level.iter().filter(|(l, _)| *l >= top) {
            rep.checks.push(
                Check::new(format!("{}_exact_at_level_{}", term.name, num(*l)), t[i].value, t[i].uncertainty, Relation::Close, term.value, slack)
                    .from(&term.operation)
                    .with("level", num(*l)),
            );
        }
    }
    let mut table = Vec::new();
    for (l, t) in &by_level {
        table.push(serde_json::json!({ "level": l, "terms": t }));
    }
    rep.tables.insert("levels".into(), serde_json::Value::Array(table));
    rep.terms = full;
    Ok(())
}

/// Slack for bounds that hold with equality, so rounding cannot flip them.
fn rounding(reference: f64) -> f64 {
    1e-12 * reference.abs()
}

fn run_bounds(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let f = &ctx.res.field;
    let (p, m, method) = (&ctx.res.params, &ctx.res.mollifier, ctx.res.method);
    let k = ctx.cfg.bounds.error_factor;
    let moments = field_moments(f, p, ctx.tol)?;
    rep.tables.insert("moments".into(), serde_json::to_value(moments)?);

    for &[eps, beta, gamma] in &ctx.cfg.bounds.splits {
        let bounds = gagliardo_split_bounds(m, p, &moments, eps, beta, gamma)?;
        let measured = measured_split(f, m, p, eps, beta, gamma, &ctx.res.budget, method)?;
        for (name, r, b) in [("tail", measured[0], bounds.tail), ("annulus", measured[1], bounds.annulus), ("core", measured[2], bounds.core)] {
            rep.checks.push(
                Check::new(format!("split_{name}_eps{}_beta{}_gamma{}", num(eps), num(beta), num(gamma)), r.value, r.error_estimate, Relation::AtMost, b, k * r.error_estimate + rounding(b))
                    .from("measured_split")
                    .with("epsilon", num(eps))
                    .with("beta", num(beta))
                    .with("gamma", num(gamma)),
            );
        }
    }

    let uniform = uniform_gagliardo_bound(m, p, &moments)?;
    let g = ctx.gagliardo_sweep(f)?;
    for r in &g.rows {
        if r.is_valid() {
            rep.checks.push(
                Check::new(format!("uniform_bound_eps{}", num(r.epsilon)), r.value, r.error, Relation::AtMost, uniform, k * r.error + rounding(uniform))
                    .from("uniform_gagliardo_bound"),
            );
        }
    }
    plot_sweep(rep, "uniform_bound", "gagliardo", 1.0, &g);
    for r in g.valid_rows() {
        rep.plot("uniform_bound", r.epsilon, uniform, "bound");
    }
    rep.add_sweep("gagliardo", g);

    for &eps in &ctx.cfg.bounds.lq_epsilons {
        let (lhs, rhs) = lq_convergence_check(f, m, p, &moments, eps, ctx.tol)?;
        rep.checks.push(
            Check::new(format!("lq_convergence_eps{}", num(eps)), lhs.value, lhs.error_estimate, Relation::AtMost, rhs, k * lhs.error_estimate + rounding(rhs))
                .from("lq_convergence_check"),
        );
    }

    match jump_set_of(f) {
        Ok(js) => {
            for h in &ctx.cfg.bounds.shifts {
                let (lhs, tv) = variation_inequality_check(f, &js, h, ctx.tol)?;
                let name = format!("variation_inequality_h{}", h.iter().map(|v| num(*v)).collect::<Vec<_>>().join("_"));
                rep.checks.push(Check::new(name, lhs.value, lhs.error_estimate, Relation::AtMost, tv, k * lhs.error_estimate + rounding(tv)).from("variation_inequality_check"));
            }
        }
        Err(e) => {
            rep.tables.insert("variation_inequality".into(), serde_json::json!(format!("skipped: {e}")));
        }
    }
    rep.tables.insert("uniform_bound".into(), serde_json::json!(uniform));
    Ok(())
}

/// All audit rows as one CSV with `kernel` and `dim` leading columns.
pub fn audit_csv(rows: &[AuditRow]) -> anyhow::Result<String> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![r.kernel.clone(), r.dim.to_string(), num(r.epsilon), num(r.mass), num(r.mass_err), num(r.tail_delta), num(r.moment_alpha)]
        })
        .collect();
    table_csv(&["kernel", "dim", "epsilon", "mass", "mass_err", "tail_delta", "moment_alpha"], &body)
}

/// One audit per dimension and kernel, in config order.
pub fn audit_tables(cfg: &ExperimentConfig, budget: &QuadBudget) -> anyhow::Result<Vec<(String, Vec<AuditRow>)>> {
    let a = &cfg.audit;
    let grid = audit_grid(a.abs_ln_min, a.abs_ln_max, a.count)?;
    let mut out = Vec::new();
    for &dim in &a.dims {
        for kind in &cfg.kernels {
            let fam = RadialKernelFamily::new(*kind, dim)?;
            let rows = kernel_audit(&fam, &grid, a.delta, a.alpha, budget)?;
            out.push((format!("{}_{}d", kind.label(), dim), rows));
        }
    }
    Ok(out)
}

fn run_kernel_audit(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let a = &ctx.cfg.audit;
    let mut all = Vec::new();
    for (name, rows) in audit_tables(ctx.cfg, &ctx.res.budget)? {
        let mass_dev = rows.iter().map(|r| (r.mass - 1.0).abs()).fold(0.0, f64::max);
        let mass_err = rows.iter().map(|r| r.mass_err).fold(0.0, f64::max);
        rep.checks.push(Check::new(format!("{name}_mass"), mass_dev, mass_err, Relation::AtMost, 0.0, a.mass_tolerance).from("kernel_mass"));
        let last = rows.last().expect("audit grid is nonempty");
        rep.checks.push(Check::new(format!("{name}_support_tail_vanishes"), last.tail_delta, 0.0, Relation::Close, 0.0, 0.0).from("support_tail"));
        let checks: Vec<f64> = rows.iter().filter_map(|r| r.moment_check).collect();
        if !checks.is_empty() {
            let worst = checks.iter().map(|c| c.abs()).fold(0.0, f64::max);
            rep.checks.push(Check::new(format!("{name}_moment_closed_form"), worst, 0.0, Relation::AtMost, 0.0, a.moment_tolerance).from("log_kernel_moment"));
            let tail = &rows[rows.len() - rows.len().div_ceil(3)..];
            let rise = tail.windows(2).map(|w| w[1].moment_alpha - w[0].moment_alpha).fold(f64::NEG_INFINITY, f64::max);
            rep.checks.push(Check::new(format!("{name}_moment_tail_decreasing"), rise, 0.0, Relation::AtMost, 0.0, 0.0).from("log_kernel_moment"));
        }
        for r in &rows {
            rep.plot("kernel_moment", -r.ln_epsilon, r.moment_alpha, &name);
        }
        all.extend(rows);
    }
    rep.extra_files.push(("kernel_audit.csv".into(), audit_csv(&all)?));
    rep.tables.insert("audit".into(), serde_json::to_value(&all)?);
    Ok(())
}

/// Reference values of the first absolute sphere moment.
fn moment1_reference(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 4.0,
        _ => 2.0 * std::f64::consts::PI,
    }
}

pub fn constants_tables(cfg: &ExperimentConfig) -> anyhow::Result<Vec<ConstantsTable>> {
    cfg.constants.dims.iter().map(|&d| Ok(dimensional_constants(d, &cfg.constants.q_list)?)).collect()
}

/// Aligned text rendering of constants tables.
pub fn constants_text(tables: &[ConstantsTable]) -> String {
    let mut s = String::new();
    for t in tables {
        s.push_str(&format!("N = {}\n", t.dim));
        let mut line = |k: &str, v: String| s.push_str(&format!("  {k:<16} {v:>24}\n"));
        line("sphere_measure", num(t.sphere_measure));
        line("moment1", num(t.moment1));
        line("c_n", num(t.c_n));
        line("moment1_avg", num(t.moment1_avg));
        line("nc_integral", t.nc_integral.map(num).unwrap_or_else(|| "-".into()));
        line("nc_residual", t.nc_residual.map(num).unwrap_or_else(|| "-".into()));
        s.push_str(&format!("  {:<16} {:>24} {:>24}\n", "q", "moment_q", "hat_c"));
        for m in &t.moments {
            s.push_str(&format!("  {:<16} {:>24} {:>24}\n", num(m.q), num(m.moment_q), num(m.hat_c)));
        }
    }
    s
}

fn run_constants(ctx: &Ctx, rep: &mut Report) -> anyhow::Result<()> {
    let tables = constants_tables(ctx.cfg)?;
    let nc_tol = ctx.cfg.constants.nc_tolerance;
    for t in &tables {
        let reference = moment1_reference(t.dim);
        rep.checks.push(Check::new(format!("moment1_{}d", t.dim), t.moment1, 0.0, Relation::Close, reference, 1e-9 * reference).from("dimensional_constants"));
        if let Some(r) = t.nc_residual {
            rep.checks.push(Check::new(format!("nc_residual_{}d", t.dim), r, 0.0, Relation::AtMost, 0.0, nc_tol).from("dimensional_constants"));
        }
    }
    rep.extra_files.push(("constants.txt".into(), constants_text(&tables)));
    rep.tables.insert("constants".into(), serde_json::to_value(&tables)?);
    Ok(())
}
