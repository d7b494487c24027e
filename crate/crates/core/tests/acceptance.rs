//! Acceptance criteria, one line per criterion.  Exits nonzero when any
//! criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use resonant_kinetics::cli::{RunConfig, SuiteKind};
use resonant_kinetics::report::Check;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn default_config() -> RunConfig {
    RunConfig::load(&configs().join("default.json")).expect("default config")
}

struct Outcome {
    pass: bool,
    elapsed: Duration,
    note: String,
}

/// Run the named parts of `kind`; the report passes and the budget holds.
fn parts(kind: SuiteKind, names: &[&str], budget: Duration, pick: impl Fn(&[&Check]) -> String) -> Outcome {
    let started = Instant::now();
    let mut pass = true;
    let mut checks: Vec<Check> = Vec::new();
    for name in names {
        let mut cfg = default_config();
        cfg.suite.name = Some(name.to_string());
        let out = kind.run(&cfg);
        pass &= out.report.pass;
        for c in &out.report.failures() {
            eprintln!("    failed: {} = {:e} ({})", c.name, c.estimate, c.detail);
        }
        checks.extend(out.report.all_checks().into_iter().cloned());
    }
    let elapsed = started.elapsed();
    let refs: Vec<&Check> = checks.iter().collect();
    let note = format!("{} checks; {}", refs.len(), pick(&refs));
    Outcome {
        pass: pass && elapsed <= budget,
        elapsed,
        note: if elapsed <= budget {
            note
        } else {
            format!("{note}; over budget {budget:?}")
        },
    }
}

fn failures(checks: &[&Check]) -> String {
    format!("{} failed", checks.iter().filter(|c| !c.pass).count())
}

fn named<'a>(checks: &[&'a Check], fragment: &str) -> Vec<&'a Check> {
    checks.iter().copied().filter(|c| c.name.contains(fragment)).collect()
}

fn strip_timing(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.remove("timing");
            map.values_mut().for_each(strip_timing);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

fn determinism() -> Outcome {
    let started = Instant::now();
    let exe = env!("CARGO_BIN_EXE_resonant-verify");
    let dir = tempfile::tempdir().expect("temp dir");
    let run = |sub: &str| -> Option<serde_json::Value> {
        let out = dir.path().join(sub);
        let status = Command::new(exe)
            .args(["all", "--config"])
            .arg(configs().join("quick.json"))
            .args(["--seed", "3", "--out"])
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .ok()?;
        status.code()?;
        let text = std::fs::read_to_string(out.join("all.json")).ok()?;
        let mut value: serde_json::Value = serde_json::from_str(&text).ok()?;
        strip_timing(&mut value);
        Some(value)
    };
    let (a, b) = (run("a"), run("b"));
    let same_tables = {
        let list = |sub: &str| -> Vec<(String, Vec<u8>)> {
            let mut files: Vec<_> = std::fs::read_dir(dir.path().join(sub))
                .map(|d| d.filter_map(|e| e.ok()).map(|e| e.path()).collect())
                .unwrap_or_default();
            files.retain(|p: &PathBuf| p.extension().is_some_and(|x| x == "csv"));
            files.sort();
            files
                .iter()
                .map(|p| {
                    (
                        p.file_name().unwrap().to_string_lossy().into_owned(),
                        std::fs::read(p).unwrap_or_default(),
                    )
                })
                .collect()
        };
        let (ta, tb) = (list("a"), list("b"));
        !ta.is_empty() && ta == tb
    };
    let pass = matches!((&a, &b), (Some(x), Some(y)) if x == y) && same_tables;
    Outcome {
        pass,
        elapsed: started.elapsed(),
        note: format!(
            "two `all` runs, reports {} and CSV tables {}",
            if a.is_some() && a == b { "identical" } else { "differ" },
            if same_tables { "identical" } else { "differ" }
        ),
    }
}

fn main() {
    let minutes = |m: u64| Duration::from_secs(60 * m);
    type Criterion<'a> = (&'a str, Box<dyn Fn() -> Outcome + 'a>);
    let criteria: Vec<Criterion> = vec![
        (
            "conservation of momentum and both energies",
            Box::new(|| {
                parts(SuiteKind::Kinematics, &["conservation"], Duration::from_secs(5), |c| {
                    c.iter().map(|c| format!("{:.1e}", c.estimate)).collect::<Vec<_>>().join(" ")
                })
            }),
        ),
        (
            "(z, A) Jacobian and pushforward identity",
            Box::new(|| {
                parts(
                    SuiteKind::Jacobian,
                    &["ball-measure", "pushforward"],
                    Duration::from_secs(30),
                    failures,
                )
            }),
        ),
        (
            "H-theorem",
            Box::new(|| {
                parts(
                    SuiteKind::HTheorem,
                    &["random-densities", "maxwellians", "kinetic-mixture"],
                    minutes(2),
                    |c| {
                        named(c, "kinetic mixture").first().map_or(String::new(), |m| {
                            format!("mixture {:.3e} +- {:.1e}", m.estimate, m.error.unwrap_or(0.0))
                        })
                    },
                )
            }),
        ),
        (
            "monatomic kernel equivalence",
            Box::new(|| parts(SuiteKind::KernelEquivalence, &["monatomic"], minutes(5), failures)),
        ),
        (
            "polyatomic kernel equivalence",
            Box::new(|| parts(SuiteKind::KernelEquivalence, &["polyatomic"], minutes(10), failures)),
        ),
        (
            "tensor bound on 10^4 tuples",
            Box::new(|| {
                parts(SuiteKind::Bounds, &["tensor"], minutes(5), |c| {
                    c.first().map_or(String::new(), |c| c.detail.clone())
                })
            }),
        ),
        (
            "kappa_1 Hilbert-Schmidt refinement",
            Box::new(|| {
                parts(SuiteKind::HsNorm, &["hs-norm"], minutes(5), |c| {
                    c.first().map_or(String::new(), |c| format!("final increment {:.2e}", c.estimate))
                })
            }),
        ),
        (
            "bound suite",
            Box::new(|| {
                parts(
                    SuiteKind::Bounds,
                    &["psi-m", "phi-alpha", "kappa-i", "kappa-m", "exp-ratio"],
                    minutes(5),
                    |c| {
                        let max = c.iter().filter_map(|c| c.ratio).fold(0.0_f64, f64::max);
                        format!("largest ratio {max:.3e}")
                    },
                )
            }),
        ),
        (
            "tail decay",
            Box::new(|| {
                parts(SuiteKind::Tail, &["tail-decay"], minutes(5), |c| {
                    named(c, "1+R")
                        .iter()
                        .map(|c| format!("{:.3e}", c.estimate))
                        .collect::<Vec<_>>()
                        .join(" ")
                })
            }),
        ),
        (
            "Galerkin spectrum",
            Box::new(|| {
                parts(SuiteKind::Spectrum, &["spectrum"], minutes(10), |c| {
                    named(c, "enrichment")
                        .first()
                        .map_or(String::new(), |c| format!("sigma_1 change {:.2e}", c.estimate))
                })
            }),
        ),
        (
            "Bessel accuracy and asymptotics",
            Box::new(|| {
                parts(SuiteKind::KernelEquivalence, &["bessel"], minutes(5), |c| {
                    c.iter().map(|c| format!("{:.3e}", c.estimate)).collect::<Vec<_>>().join(" ")
                })
            }),
        ),
        ("determinism of `all`", Box::new(determinism)),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {} {name} [{:.1} s] {}",
            n + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.elapsed.as_secs_f64(),
            outcome.note
        );
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
