//! Acceptance criteria, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line before asserting.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use besovlab_cli::config::ExperimentConfig;
use besovlab_cli::experiments;
use besovlab_cli::report::{Report, TermRecord};

/// Criteria run one at a time so each runtime limit measures that criterion alone.
fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn config(toml: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(toml).expect("acceptance configs parse")
}

fn run(toml: &str) -> (Report, Duration) {
    let cfg = config(toml);
    let t = Instant::now();
    let rep = experiments::run(&cfg).expect("experiment runs");
    (rep, t.elapsed())
}

fn term<'a>(rep: &'a Report, name: &str) -> &'a TermRecord {
    rep.terms.iter().find(|t| t.name == name).unwrap_or_else(|| panic!("term {name} missing"))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Print the criterion line, then fail the test on any failure.
fn verdict(n: u32, elapsed: Duration, limit: Duration, failures: &[String], detail: &str) {
    let ok = failures.is_empty() && elapsed <= limit;
    println!(
        "criterion {n}: {} ({:.1}s of {:.0}s) {detail}{}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs_f64(),
        if failures.is_empty() { String::new() } else { format!(" failures: {}", failures.join("; ")) }
    );
    assert!(failures.is_empty(), "criterion {n}: {failures:?}");
    assert!(elapsed <= limit, "criterion {n}: {elapsed:?} exceeds {limit:?}");
}

fn require(failures: &mut Vec<String>, ok: bool, what: impl Into<String>) {
    if !ok {
        failures.push(what.into());
    }
}

const AUDIT: &str = r#"
kind = "kernel_audit"
kernels = [
  { kind = "trivial" },
  { kind = "logarithmic", omega = 0.3 },
  { kind = "logarithmic", omega = 0.5 },
  { kind = "logarithmic", omega = 0.9 },
  { kind = "sigma_approx", ratio = 0.5 },
]
[audit]
dims = [1, 2, 3]
count = 10
delta = 0.1
"#;

#[test]
fn criterion_1_kernel_audits() {
    let _serial = serial();
    let (rep, elapsed) = run(AUDIT);
    let mut failures = Vec::new();
    let rows = rep.tables["audit"].as_array().expect("audit table");
    let mut groups: BTreeMap<(String, u64), Vec<&serde_json::Value>> = BTreeMap::new();
    for r in rows {
        groups.entry((r["kernel"].as_str().unwrap().to_string(), r["dim"].as_u64().unwrap())).or_default().push(r);
    }
    require(&mut failures, groups.len() == 15, format!("{} kernel/dimension groups", groups.len()));
    for ((kernel, dim), g) in &groups {
        require(&mut failures, g.len() == 10, format!("{kernel} {dim}d has {} rows", g.len()));
        let mass = g.iter().map(|r| (r["mass"].as_f64().unwrap() - 1.0).abs()).fold(0.0, f64::max);
        require(&mut failures, mass <= 1e-9, format!("{kernel} {dim}d mass deviation {mass:e}"));
        let tail = g.last().unwrap()["tail_delta"].as_f64().unwrap();
        require(&mut failures, tail == 0.0, format!("{kernel} {dim}d final tail {tail:e}"));
        if kernel.starts_with("logarithmic") {
            let worst = g.iter().map(|r| r["moment_check"].as_f64().unwrap().abs()).fold(0.0, f64::max);
            require(&mut failures, worst <= 1e-8, format!("{kernel} {dim}d moment mismatch {worst:e}"));
            let m: Vec<f64> = g.iter().map(|r| r["moment_alpha"].as_f64().unwrap()).collect();
            let tail = &m[m.len() - m.len().div_ceil(3)..];
            require(&mut failures, tail.windows(2).all(|w| w[1] < w[0]), format!("{kernel} {dim}d moment tail not decreasing"));
        }
    }
    require(&mut failures, rep.pass, "report verdict");
    verdict(1, elapsed, Duration::from_secs(10), &failures, "15 kernel/dimension audits");
}

#[test]
fn criterion_2_constants() {
    let _serial = serial();
    let (rep, elapsed) = run("kind = \"constants\"\n");
    let mut failures = Vec::new();
    let tables = rep.tables["constants"].as_array().expect("constants table");
    let get = |dim: u64, key: &str| -> f64 {
        tables.iter().find(|t| t["dim"].as_u64() == Some(dim)).unwrap()[key].as_f64().unwrap_or(f64::NAN)
    };
    require(&mut failures, get(1, "moment1") == 2.0, format!("N=1 moment1 {}", get(1, "moment1")));
    require(&mut failures, (get(2, "moment1") - 4.0).abs() <= 1e-12, format!("N=2 moment1 {}", get(2, "moment1")));
    require(&mut failures, get(2, "nc_residual") <= 1e-8, format!("N=2 residual {:e}", get(2, "nc_residual")));
    require(&mut failures, (get(3, "moment1") - 2.0 * PI).abs() <= 1e-9, format!("N=3 moment1 {}", get(3, "moment1")));
    require(&mut failures, get(3, "nc_residual") <= 1e-6, format!("N=3 residual {:e}", get(3, "nc_residual")));
    require(&mut failures, rep.pass, "report verdict");
    verdict(
        2,
        elapsed,
        Duration::from_secs(5),
        &failures,
        &format!("residuals N=2 {:.1e}, N=3 {:.1e}", get(2, "nc_residual"), get(3, "nc_residual")),
    );
}

const STEP_CHAIN: &str = r#"
kind = "jump_chain"
kernels = [{ kind = "trivial" }, { kind = "logarithmic", omega = 0.5 }]
[field]
type = "step"
a = 0.0
b = 1.0
amplitude = 1.0
[region]
type = "interval"
a = -1.0
b = 2.0
[mollifier]
kind = "tent"
"#;

const DISK_CHAIN: &str = r#"
kind = "jump_chain"
kernels = [{ kind = "trivial" }, { kind = "logarithmic", omega = 0.5 }]
[field]
type = "ball_indicator"
center = [0.0, 0.0]
radius = 0.5
amplitude = 1.0
[region]
type = "ball"
center = [0.0, 0.0]
radius = 1.0
[budget]
target_rel_error = 1e-3
[tolerances]
gagliardo = 0.15
"#;

fn step_chain() -> &'static (Report, Duration) {
    static R: OnceLock<(Report, Duration)> = OnceLock::new();
    R.get_or_init(|| run(STEP_CHAIN))
}

fn disk_chain() -> &'static (Report, Duration) {
    static R: OnceLock<(Report, Duration)> = OnceLock::new();
    R.get_or_init(|| run(DISK_CHAIN))
}

#[test]
fn criterion_3_jump_chain_1d() {
    let _serial = serial();
    let (rep, elapsed) = step_chain();
    let mut failures = Vec::new();
    let names = ["gagliardo", "besov:trivial", "besov:logarithmic(omega=0.5)", "variation", "jump"];
    let mut shown = Vec::new();
    for n in names {
        let v = term(rep, n).value;
        shown.push(format!("{n}={v:.4}"));
        require(&mut failures, rel(v, 4.0) <= 0.10, format!("{n} = {v}"));
    }
    // Gagliardo constant, Besov constants and variation: the kernel-equivalence chain
    let eq: Vec<f64> = names[..4].iter().map(|n| term(rep, n).value).collect();
    let spread = eq.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - eq.iter().cloned().fold(f64::INFINITY, f64::min);
    require(&mut failures, spread <= 0.05 * 4.0, format!("kernel-equivalence spread {spread}"));
    require(&mut failures, rep.verdicts.iter().all(|v| v.pass), "chain verdict");
    verdict(3, *elapsed, Duration::from_secs(120), &failures, &shown.join(" "));
}

#[test]
fn criterion_4_jump_chain_2d() {
    let _serial = serial();
    let (rep, elapsed) = disk_chain();
    let mut failures = Vec::new();
    let target = 4.0 * PI;
    let var = term(rep, "variation").value;
    require(&mut failures, rel(var, target) <= 0.05, format!("variation {var}"));
    let jump = term(rep, "jump").value;
    require(&mut failures, rel(jump, target) <= 1e-12, format!("jump term {jump}"));
    let besov = term(rep, "besov:trivial").raw;
    require(&mut failures, rel(besov, target / (2.0 * PI)) <= 0.05, format!("trivial Besov constant {besov}"));
    let g = term(rep, "gagliardo").value;
    require(&mut failures, rel(g, target) <= 0.15, format!("gagliardo {g}"));
    let chain = rep.verdicts.iter().find(|v| format!("{:?}", v.chain) == "JumpChain").expect("jump chain verdict");
    require(&mut failures, chain.pass, format!("jump chain worst violation {}", chain.worst_violation));
    verdict(
        4,
        *elapsed,
        Duration::from_secs(600),
        &failures,
        &format!("variation={var:.4} besov={besov:.5} gagliardo={g:.4} target={target:.4}"),
    );
}

#[test]
fn criterion_5_directional_formula() {
    let _serial = serial();
    let t = Instant::now();
    let mut failures = Vec::new();
    let mut count = 0;
    for (label, rep) in [("step", &step_chain().0), ("disk", &disk_chain().0)] {
        for c in rep.checks.iter().filter(|c| c.name.starts_with("directional_")) {
            count += 1;
            require(&mut failures, rel(c.measured, c.reference) <= 0.05, format!("{label} {}: {} vs {}", c.name, c.measured, c.reference));
        }
    }
    require(&mut failures, count == 6, format!("{count} directions checked"));
    // the chains are shared with criteria 3 and 4; charge their time here too
    let elapsed = t.elapsed().max(step_chain().1);
    verdict(5, elapsed, Duration::from_secs(600), &failures, &format!("{count} directions at eps = 1e-3"));
}

const BUMP_SANDWICH: &str = r#"
kind = "sandwich"
[field]
type = "gaussian_bump"
center = [0.5]
sigma = 0.2
amplitude = [1.0]
[region]
type = "interval"
a = -1.0
b = 2.0
[tolerances]
gagliardo = 0.10
"#;

const STEP_SANDWICH: &str = "kind = \"sandwich\"\n[tolerances]\ngagliardo = 0.10\n";

const SIGNED_SANDWICH: &str = "kind = \"sandwich\"\n[mollifier]\nkind = \"signed_test\"\n";

#[test]
fn criterion_6_sandwich() {
    let _serial = serial();
    let mut failures = Vec::new();
    let mut elapsed = Duration::ZERO;
    let mut shown = Vec::new();
    for (label, toml) in [("bump", BUMP_SANDWICH), ("step", STEP_SANDWICH)] {
        let (rep, t) = run(toml);
        elapsed += t;
        let v = &rep.verdicts[0];
        shown.push(format!("{label}: worst {:.3e} tol {:.3e}", v.worst_violation, v.tolerance));
        require(&mut failures, v.pass, format!("{label} sandwich violation {}", v.worst_violation));
    }
    let (rep, t) = run(SIGNED_SANDWICH);
    elapsed += t;
    let mid = term(&rep, "mid").value;
    shown.push(format!("signed mid {mid:.3e}"));
    require(&mut failures, mid.abs() < 0.05, format!("signed-test mid term {mid}"));
    verdict(6, elapsed, Duration::from_secs(300), &failures, &shown.join(", "));
}

#[test]
fn criterion_7_bounds_audits() {
    let _serial = serial();
    let (bounds, t1) = run("kind = \"bounds_audit\"\n");
    let (interp, t2) = run("kind = \"interpolation\"\n[params]\nq = 2.0\np = 3.0\n");
    let mut failures = Vec::new();
    let count = |prefix: &str| bounds.checks.iter().filter(|c| c.name.starts_with(prefix)).count();
    require(&mut failures, count("split_") == 15, format!("{} split checks", count("split_")));
    require(&mut failures, count("uniform_bound_") == 8, format!("{} uniform-bound checks", count("uniform_bound_")));
    require(&mut failures, count("variation_inequality_") == 3, format!("{} variation checks", count("variation_inequality_")));
    for c in bounds.checks.iter().filter(|c| !c.name.starts_with("lq_")) {
        require(&mut failures, c.measured <= c.reference + 3.0 * c.error + 1e-12 * c.reference.abs(), format!("{}: {} > {}", c.name, c.measured, c.reference));
    }
    let eq = interp.checks.iter().find(|c| c.name == "interpolation_equality").expect("equality check");
    require(&mut failures, (eq.measured - eq.reference).abs() <= 1e-6, format!("interpolation {} vs {}", eq.measured, eq.reference));
    require(&mut failures, bounds.pass && interp.pass, "report verdicts");
    verdict(7, t1 + t2, Duration::from_secs(300), &failures, &format!("{} bound checks, interpolation gap {:.1e}", bounds.checks.len(), (eq.measured - eq.reference).abs()));
}

#[test]
fn criterion_8_truncation_convergence() {
    let _serial = serial();
    let (rep, elapsed) = run("kind = \"truncation_convergence\"\n[field]\ntype = \"step\"\na = 0.0\nb = 1.0\namplitude = 3.0\n[truncation]\nlevels = [0.5, 1.0, 2.0, 3.0, 4.0]\n");
    let mut failures = Vec::new();
    let levels = rep.tables["levels"].as_array().expect("levels table");
    require(&mut failures, levels.len() == 5, "five levels");
    for full in &rep.terms {
        let vals: Vec<(f64, f64)> = levels
            .iter()
            .map(|l| {
                let v = l["terms"].as_array().unwrap().iter().find(|t| t["name"] == full.name.as_str()).unwrap()["value"].as_f64().unwrap();
                (l["level"].as_f64().unwrap(), v)
            })
            .collect();
        require(&mut failures, vals.windows(2).all(|w| w[1].1 >= w[0].1), format!("{} not nondecreasing", full.name));
        for (l, v) in vals.iter().filter(|(l, _)| *l >= 3.0) {
            require(&mut failures, (v - full.value).abs() <= 1e-9, format!("{} at l = {l}: {v} vs {}", full.name, full.value));
        }
    }
    require(&mut failures, rep.pass, "report verdict");
    verdict(8, elapsed, Duration::from_secs(300), &failures, &format!("{} terms over 5 levels", rep.terms.len()));
}

const DISK_REDUCED: &str = r#"
kind = "jump_chain"
kernels = [{ kind = "trivial" }]
gagliardo_grid = { kind = "log_uniform", abs_ln_min = 2.0, abs_ln_max = 3.5, count = 4 }
[field]
type = "ball_indicator"
center = [0.0, 0.0]
radius = 0.5
amplitude = 1.0
[region]
type = "ball"
center = [0.0, 0.0]
radius = 1.0
[budget]
target_rel_error = 1e-2
[tolerances]
gagliardo = 0.15
"#;

fn run_binary(config: &Path, out: &Path, threads: usize, seed: u64) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_besovlab"))
        .arg("experiment")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .arg("--seed")
        .arg(seed.to_string())
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn criterion_9_determinism() {
    let _serial = serial();
    let t = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut failures = Vec::new();
    let mut files = 0;
    for (label, toml) in [("step", STEP_CHAIN), ("disk", DISK_REDUCED)] {
        let cfg = tmp.path().join(format!("{label}.toml"));
        std::fs::write(&cfg, toml).unwrap();
        let mut snaps = Vec::new();
        for (i, threads) in [1usize, 2, 2].into_iter().enumerate() {
            let out = tmp.path().join(format!("{label}_{i}"));
            let code = run_binary(&cfg, &out, threads, 7);
            require(&mut failures, code == 0, format!("{label} run {i} exited {code}"));
            snaps.push(snapshot(&out));
        }
        files += snaps[0].len();
        require(&mut failures, snaps[0].len() >= 3, format!("{label} wrote {} files", snaps[0].len()));
        for (i, s) in snaps.iter().enumerate().skip(1) {
            for (name, bytes) in &snaps[0] {
                require(&mut failures, s.get(name) == Some(bytes), format!("{label} run {i}: {name} differs"));
            }
            require(&mut failures, s.len() == snaps[0].len(), format!("{label} run {i}: file set differs"));
        }
    }
    verdict(9, t.elapsed(), Duration::from_secs(600), &failures, &format!("{files} output files identical across 3 runs each"));
}
