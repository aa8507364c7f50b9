//! Acceptance run: one PASS/FAIL line per criterion. Runs without the libtest harness so
//! the lines are always printed; exits nonzero when any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use dl_lab::report::Report;
use dl_lab::suites::{run_suite, SuiteConfig};
use dllab::charlib::all_add_chars;
use dllab::constructions::{build_rho_psi, GroupCtx};
use dllab::ffield::lcm;
use dllab::repkit::{inner_product, ClassFunction, RingGroup};
use dllab::twistring::RingParams;

struct Outcome {
    pass: bool,
    detail: String,
}

fn run(suite: &str, jobs: usize, tweak: impl FnOnce(&mut SuiteConfig)) -> Report {
    let mut cfg = SuiteConfig::new(suite);
    cfg.jobs = jobs;
    tweak(&mut cfg);
    run_suite(&cfg).unwrap_or_else(|e| panic!("suite {suite}: {e}"))
}

/// All claims with the given prefixes pass; returns (passed, total, first failure).
fn tally(r: &Report, prefixes: &[&str]) -> (usize, usize, Option<String>) {
    let claims: Vec<_> = r.claims.iter().filter(|c| prefixes.iter().any(|p| c.claim.starts_with(p))).collect();
    let passed = claims.iter().filter(|c| c.passed()).count();
    let first = claims.iter().find(|c| !c.passed()).map(|c| format!("{} at {} expected {} observed {}", c.claim, c.params, c.expected, c.observed));
    (passed, claims.len(), first)
}

fn suite_outcome(r: &Report, prefixes: &[&str], elapsed: Duration, limit: Option<Duration>) -> Outcome {
    let (passed, total, first) = tally(r, prefixes);
    let in_time = limit.is_none_or(|l| elapsed < l);
    let time = match limit {
        Some(l) => format!("{:.1}s, limit {}s", elapsed.as_secs_f64(), l.as_secs()),
        None => format!("{:.1}s", elapsed.as_secs_f64()),
    };
    Outcome {
        pass: total > 0 && passed == total && in_time,
        detail: match first {
            None => format!("{passed}/{total} claims exact ({time})"),
            Some(f) => format!("{passed}/{total} claims exact ({time}); first failure: {f}"),
        },
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn c1() -> Outcome {
    let (r, t) = timed(|| run("rho-psi", 4, |_| {}));
    suite_outcome(&r, &["rho."], t, Some(Duration::from_secs(60)))
}

fn c2() -> Outcome {
    let (r, t) = timed(|| run("rho-psi-prime", 4, |_| {}));
    let mut o = suite_outcome(&r, &["rho_prime."], t, Some(Duration::from_secs(60)));
    let (np, nt, _) = tally(&r, &["rho_prime.norm_homomorphism"]);
    o.pass &= nt == 3 && np == 3;
    o.detail.push_str(&format!("; Nm homomorphism at k=1 on {np}/{nt} parameter sets"));
    o
}

fn c3() -> Outcome {
    let (r, t) = timed(|| run("eigenspaces", 4, |_| {}));
    let mut o = suite_outcome(&r, &["eigen."], t, Some(Duration::from_secs(300)));
    let qs: Vec<String> = r.matching("eigen.dimensions").map(|c| c.params["q"].to_string()).collect();
    o.pass &= qs == ["2", "3"];
    o
}

fn c4() -> Outcome {
    let (r, t) = timed(|| run("intertwiners", 4, |_| {}));
    let mut o = suite_outcome(&r, &["intertwiner.exp_sum", "intertwiner.inductive"], t, Some(Duration::from_secs(120)));
    let sums = r.matching("intertwiner.exp_sum").count();
    o.detail.push_str(&format!("; {sums} sums q^(2+2s) over q in {{2,3}}, s in {{1,2}}"));
    o
}

fn c5() -> Outcome {
    let (r, t) = timed(|| run("traces", 4, |_| {}));
    let mut o = suite_outcome(&r, &["trace."], t, None);
    o.pass &= r.matching("trace.level3").count() == 1;
    o
}

/// Everything in the level-2 division suite except the "exactly when conductor q^n" claim.
fn c6() -> Outcome {
    let (r, t) = timed(|| run("eta-level2", 4, |_| {}));
    let parts = [
        "eta.extension",
        "eta.degree",
        "eta.full_conductor_irreducible",
        "eta.irreducible_iff_regular",
        "eta.mackey",
    ];
    let mut o = suite_outcome(&r, &parts, t, None);
    let (lp, lt, _) = tally(&r, &["eta.irreducible_iff_full_conductor"]);
    let counter: Vec<String> = r
        .matching("eta.irreducible_iff_full_conductor")
        .map(|c| format!("(n,q)=({},{}): {} of {} theta", c.params["n"], c.params["q"], c.observed, c.params["thetas"]))
        .collect();
    o.pass &= lp == lt;
    o.detail = format!(
        "extension, degree n*deg rho, conductor q^n => irreducible, irreducible <=> regular, Mackey: {}; \
         'irreducible exactly when conductor q^n': {lp}/{lt} parameter sets, irreducible with smaller conductor at {}",
        o.detail,
        counter.join(", ")
    );
    o
}

fn c7() -> Outcome {
    let (r, t) = timed(|| run("main-example", 4, |_| {}));
    let mut o = suite_outcome(&r, &["main."], t, Some(Duration::from_secs(600)));
    let readings: Vec<String> = r.matching("main.theta_prime_reading").map(|c| format!("q={}: {}", c.params["q"], c.observed)).collect();
    o.detail.push_str(&format!("; theta' reading: pi^2 passes, pi^4 is not a character [{}]", readings.join("; ")));
    o
}

fn c8() -> Outcome {
    let (r, t) = timed(|| run("matrix-y", 4, |_| {}));
    let mut o = suite_outcome(&r, &["matrix."], t, None);
    o.pass &= r.matching("matrix.n2_identity").count() == 3 && r.matching("matrix.locus").count() == 4;
    o
}

fn c9() -> Outcome {
    let (r, t) = timed(|| run("series", 4, |_| {}));
    suite_outcome(&r, &["series."], t, Some(Duration::from_secs(60)))
}

/// Byte-identical reports across repeated runs and shard counts, plus integral inner
/// products between all rho_psi characters.
fn c10() -> Outcome {
    let cheap: [(&str, Option<u64>); 6] = [
        ("rho-psi", Some(2)),
        ("traces", None),
        ("series", None),
        ("matrix-y", Some(2)),
        ("eigenspaces", Some(2)),
        ("intertwiners", Some(2)),
    ];
    let mut diffs = Vec::new();
    for (suite, q) in cheap {
        let a = run(suite, 1, |c| c.q = q).to_json();
        let b = run(suite, 1, |c| c.q = q).to_json();
        let c = run(suite, 4, |c| c.q = q).to_json();
        if a != b || a != c {
            diffs.push(suite);
        }
    }
    let mut products = 0;
    let mut non_integral = 0;
    for (q, n) in [(2u32, 2u32), (3, 2), (2, 3)] {
        let params = RingParams::over(q, 1, n, 2, 1).unwrap();
        let u = Arc::new(RingGroup::new(&params, false).unwrap());
        let ctx = GroupCtx::new(u.clone()).unwrap();
        let chars: Vec<_> = all_add_chars(params.field(), n)
            .unwrap()
            .iter()
            .map(|psi| build_rho_psi(&ctx, &u, psi).unwrap().character)
            .collect();
        let root = chars.iter().map(|c| c.values[0].order() as u64).fold(1, lcm) as u32;
        let lifted: Vec<_> = chars
            .iter()
            .map(|c| ClassFunction {
                classes: c.classes.clone(),
                values: c.values.iter().map(|v| v.lift_to(root).unwrap()).collect(),
            })
            .collect();
        for a in &lifted {
            for b in &lifted {
                products += 1;
                non_integral += usize::from(inner_product(a, b).unwrap().as_count().is_none());
            }
        }
    }
    Outcome {
        pass: diffs.is_empty() && non_integral == 0,
        detail: format!(
            "6 suites x (2 runs at 1 shard + 1 run at 4 shards), differing: {diffs:?}; {products} inner products, {non_integral} non-integral"
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "rho_psi on U^{n,q}", c1),
        (2, "rho'_psi on G^{n,q}", c2),
        (3, "eigenspaces", c3),
        (4, "intertwiner sums", c4),
        (5, "traces of zeta-bar", c5),
        (6, "level-2 division representations", c6),
        (7, "main example", c7),
        (8, "matrix model and Y_3", c8),
        (9, "series", c9),
        (10, "determinism and integrality", c10),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (k, name, f) in criteria {
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let o = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        failed += usize::from(!o.pass);
        println!("criterion {k:>2} [{name}]: {} {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criterion/criteria failed");
        ExitCode::FAILURE
    }
}
