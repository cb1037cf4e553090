//! One PASS/FAIL line per acceptance criterion. Each criterion is a single
//! `halphen` invocation; its report is re-checked here against tolerances
//! pinned in this file, independently of the tolerances the binary reports.

use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;

#[derive(Clone, Copy)]
enum Rel {
    Below,
    AtMost,
    Above,
}

struct Pin {
    check: &'static str,
    rel: Rel,
    value: f64,
}

const fn below(check: &'static str, value: f64) -> Pin {
    Pin { check, rel: Rel::Below, value }
}
const fn at_most(check: &'static str, value: f64) -> Pin {
    Pin { check, rel: Rel::AtMost, value }
}
const fn above(check: &'static str, value: f64) -> Pin {
    Pin { check, rel: Rel::Above, value }
}

struct Criterion {
    id: u32,
    title: &'static str,
    argv: &'static [&'static str],
    budget_s: f64,
    pins: &'static [Pin],
}

// DH tracking is checked against 100·tol with tol = 1e-10.
const CRITERIA: &[Criterion] = &[
    Criterion {
        id: 1,
        title: "modular identities",
        argv: &["verify", "forms", "--samples", "50", "--t-min", "0.5", "--t-max", "3"],
        budget_s: 5.0,
        pins: &[
            below("jacobi_identity_max", 1e-12),
            below("e4_theta_identity_max", 1e-11),
            below("e2_s_law_max", 1e-10),
        ],
    },
    Criterion {
        id: 2,
        title: "DH closed form and integration",
        argv: &["verify", "dh", "--t-min", "0.3", "--t-max", "5", "--samples", "200", "--tol", "1e-10"],
        budget_s: 10.0,
        pins: &[
            below("closed_form_dh_residual_max", 1e-8),
            below("integration_tracking_error_max", 100.0 * 1e-10),
        ],
    },
    Criterion {
        id: 3,
        title: "Halphen identities",
        argv: &["verify", "halphen", "--samples", "20"],
        budget_s: 5.0,
        pins: &[
            below("y_sum_max", 1e-9),
            below("y_second_max", 1e-8),
            above("jacobian_min_abs", 1e-6),
        ],
    },
    Criterion {
        id: 4,
        title: "anti-self-duality of the AH metric",
        argv: &["verify", "asd", "--t-min", "0.5", "--t-max", "3"],
        budget_s: 30.0,
        pins: &[
            below("asd_residual_max", 1e-7),
            below("ricci_max_abs", 1e-6),
            above("perturbed_asd_residual_min", 1e-4),
            below("torsion_residual_max", 1e-9),
        ],
    },
    Criterion {
        id: 5,
        title: "BPS monopole",
        argv: &["verify", "bps", "--v", "1", "--e", "1", "--rmax", "40"],
        budget_s: 60.0,
        pins: &[
            below("radial_bogomolny_max", 1e-10),
            at_most("fd_ratio_deviation_from_4", 0.5),
            at_most("energy_relative_error", 5e-3),
            at_most("flux_over_4pi_error", 1e-2),
            at_most("bogomolny_bound_relative_error", 5e-3),
        ],
    },
    Criterion {
        id: 6,
        title: "k = 2 resultants",
        argv: &["moduli", "resultant", "--samples", "100", "--seed", "7"],
        budget_s: 1.0,
        pins: &[
            below("sylvester_vs_closed_form_relative_max", 1e-12),
            at_most("planted_shared_roots_accepted", 0.0),
        ],
    },
    Criterion {
        id: 7,
        title: "AH geodesics",
        argv: &["moduli", "geodesic", "--arc", "10", "--tol", "1e-10"],
        budget_s: 30.0,
        pins: &[
            below("norm2_relative_drift", 1e-8),
            below("p_beta_relative_drift", 1e-8),
            at_most("arc_shortfall", 0.0),
            at_most("zero_velocity_displacement", 0.0),
        ],
    },
    Criterion {
        id: 8,
        title: "radial Schroedinger spectrum",
        argv: &["moduli", "spectrum", "--preset", "constant", "--grid", "2000"],
        budget_s: 10.0,
        pins: &[
            below("energy_relative_error_max", 1e-3),
            at_most("refinement_ratio_deviation_from_4", 0.2),
        ],
    },
    Criterion {
        id: 9,
        title: "line scattering (loosest tolerance)",
        argv: &["moduli", "scatter"],
        budget_s: 120.0,
        pins: &[
            at_most("degree_error_max", 0.0),
            below("pole_tracking_relative_max", 0.05),
        ],
    },
];

fn halphen(args: &[&str]) -> (Output, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_halphen"))
        .args(args)
        .env_remove("HALPHEN_MAX_TERMS")
        .output()
        .expect("spawn halphen");
    (out, start.elapsed())
}

fn check_criterion(c: &Criterion) -> Result<String, String> {
    let (out, took) = halphen(c.argv);
    let report: Value =
        serde_json::from_slice(&out.stdout).map_err(|e| format!("report is not JSON: {e}"))?;
    let checks = report["checks"].as_array().ok_or("report has no checks")?;
    let mut notes = Vec::new();
    let mut bad = Vec::new();
    for pin in c.pins {
        let Some(m) = checks.iter().find(|k| k["name"] == pin.check) else {
            bad.push(format!("{} missing", pin.check));
            continue;
        };
        let Some(v) = m["measured"].as_f64() else {
            bad.push(format!("{}: {}", pin.check, m["diagnostic"]));
            continue;
        };
        let ok = match pin.rel {
            Rel::Below => v < pin.value,
            Rel::AtMost => v <= pin.value,
            Rel::Above => v > pin.value,
        };
        let sym = match pin.rel {
            Rel::Below => "<",
            Rel::AtMost => "<=",
            Rel::Above => ">",
        };
        let line = format!("{}={v:.3e} {sym} {:e}", pin.check, pin.value);
        if ok {
            notes.push(line);
        } else {
            bad.push(line);
        }
    }
    if out.status.code() != Some(0) || report["pass"] != true {
        bad.push(format!("exit {:?}, pass {}", out.status.code(), report["pass"]));
    }
    if took.as_secs_f64() >= c.budget_s {
        bad.push(format!("runtime {:.2}s over budget {}s", took.as_secs_f64(), c.budget_s));
    }
    let timing = format!("{:.3}s", took.as_secs_f64());
    if bad.is_empty() {
        Ok(format!("{timing} {}", notes.join(", ")))
    } else {
        Err(format!("{timing} {}", bad.join("; ")))
    }
}

fn strip_wall_time(b: &[u8]) -> String {
    String::from_utf8_lossy(b)
        .lines()
        .filter(|l| !l.contains("\"wall_time_s\""))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Invocations, exit codes, report schema and byte reproducibility.
fn check_cli() -> Result<String, String> {
    let start = Instant::now();
    let mut bad = Vec::new();
    for c in CRITERIA {
        let (out, _) = halphen(c.argv);
        match serde_json::from_slice::<Value>(&out.stdout) {
            Ok(v) => {
                let schema = ["command", "params", "checks", "pass", "wall_time_s"]
                    .iter()
                    .all(|k| v.get(k).is_some())
                    && v["checks"].as_array().is_some_and(|cs| {
                        cs.iter().all(|k| ["name", "measured", "tolerance", "pass"].iter().all(|f| k.get(f).is_some()))
                    });
                if !schema {
                    bad.push(format!("criterion {} report schema", c.id));
                }
                let want = if v["pass"] == true { 0 } else { 1 };
                if out.status.code() != Some(want) {
                    bad.push(format!("criterion {} exit {:?} vs pass {}", c.id, out.status.code(), v["pass"]));
                }
            }
            Err(e) => bad.push(format!("criterion {} not JSON: {e}", c.id)),
        }
        let (again, _) = halphen(c.argv);
        if strip_wall_time(&out.stdout) != strip_wall_time(&again.stdout) {
            bad.push(format!("criterion {} not reproducible", c.id));
        }
    }
    for (args, code) in [
        (&["verify", "dh", "--t-min", "-1"][..], 1),
        (&["verify", "dh", "--tol", "-1"], 2),
        (&["verify", "dh", "--no-such-flag"], 2),
        (&["--help"], 0),
        (&["verify", "asd", "--help"], 0),
    ] {
        let (out, _) = halphen(args);
        if out.status.code() != Some(code) {
            bad.push(format!("{args:?} exit {:?}, want {code}", out.status.code()));
        }
        if code == 2 && (out.stderr.is_empty() || !out.stdout.is_empty()) {
            bad.push(format!("{args:?} usage message not on stderr alone"));
        }
    }
    let timing = format!("{:.3}s", start.elapsed().as_secs_f64());
    if bad.is_empty() {
        Ok(format!("{timing} {} invocations reproducible, exit codes and schema conform", CRITERIA.len()))
    } else {
        Err(format!("{timing} {}", bad.join("; ")))
    }
}

fn main() {
    let mut failed = 0;
    let mut line = |id: u32, title: &str, r: Result<String, String>| match r {
        Ok(s) => println!("PASS criterion {id:>2} [{title}] {s}"),
        Err(s) => {
            failed += 1;
            println!("FAIL criterion {id:>2} [{title}] {s}");
        }
    };
    for c in CRITERIA {
        line(c.id, c.title, check_criterion(c));
    }
    line(10, "CLI contract", check_cli());
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
