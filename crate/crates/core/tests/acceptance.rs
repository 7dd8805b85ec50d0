//! Acceptance run: one PASS/FAIL line per criterion with its timing.
//! A failing criterion is reported, not turned into a nonzero exit.

use sk_core::duality::{law_sweep, verify_co_tr_identity, verify_tr_co_identity};
use sk_core::examples::{
    check_u_equivariance, verify_elliptic, verify_lspace_formulas, verify_transformer, verify_whitehead_da,
    verify_whitehead_dd, whitehead_model, StaircaseData,
};
use sk_core::report::Report;
use sk_core::suites::{
    cotrace_mutations, verify_k_algebra, verify_kdual_algebra, verify_sdr, verify_trace_values, verify_transfer,
};
use std::time::{Duration, Instant};

struct Outcome {
    passed: bool,
    detail: String,
}

/// Name, time budget and check of one criterion.
type Criterion = (&'static str, Duration, Box<dyn Fn() -> Outcome>);

fn from_reports(reports: Vec<Report>) -> Outcome {
    let passed = reports.iter().all(Report::passed);
    let checks: usize = reports.iter().map(|r| r.checked).sum();
    let mut detail = format!("{checks} checks");
    for r in reports.iter().filter(|r| !r.passed()) {
        detail.push_str(&format!("; failing: {}", r.name));
        if let Some(v) = r.violations.first() {
            detail.push_str(&format!(" at {}", v.input));
        }
    }
    Outcome { passed, detail }
}

fn mutations() -> Outcome {
    let (co, survivors) = cotrace_mutations();
    let n = sk_core::duality::cotrace().arrows.len();
    let killed = n - survivors.len();
    let detail = if survivors.is_empty() {
        format!("Co is DD; all {n} single-arrow deletions break it")
    } else {
        format!(
            "Co is DD: {}; {killed} of {n} deletions break it; still DD after deleting {}",
            co.passed(),
            survivors.join(" and ")
        )
    };
    Outcome { passed: co.passed() && survivors.is_empty(), detail }
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "algebra axioms",
            Duration::from_secs(10),
            Box::new(|| from_reports(vec![verify_k_algebra(8), verify_kdual_algebra(8, 6)])),
        ),
        ("K!∞ transfer", Duration::from_secs(30), Box::new(|| from_reports(vec![verify_transfer(6, 6)]))),
        ("cotrace consistency", Duration::from_secs(5), Box::new(mutations)),
        ("SDR identities", Duration::from_secs(60), Box::new(|| from_reports(vec![verify_sdr(6)]))),
        ("trace values", Duration::from_secs(10), Box::new(|| from_reports(vec![verify_trace_values()]))),
        (
            "Koszul duality",
            Duration::from_secs(300),
            Box::new(|| from_reports(vec![verify_tr_co_identity(4, 3), verify_co_tr_identity(4, 3)])),
        ),
        ("weight and grading laws", Duration::from_secs(300), Box::new(|| from_reports(vec![law_sweep(4, 8, 4, 3)]))),
        (
            "worked examples",
            Duration::from_secs(60),
            Box::new(|| from_reports(vec![verify_elliptic(), verify_transformer(), verify_whitehead_da()])),
        ),
        (
            "L-space formulas",
            Duration::from_secs(120),
            Box::new(|| from_reports(vec![verify_lspace_formulas(&StaircaseData::whitehead(), 3, 3)])),
        ),
        (
            "U-equivariance and regularity",
            Duration::from_secs(60),
            Box::new(|| from_reports(vec![check_u_equivariance(&whitehead_model(), 3, 3), verify_whitehead_dd(8)])),
        ),
    ];
    let mut passed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let mut out = run();
        let took = start.elapsed();
        if took > *budget {
            out.passed = false;
            out.detail.push_str(&format!("; over the {budget:?} budget"));
        }
        passed += usize::from(out.passed);
        let status = if out.passed { "PASS" } else { "FAIL" };
        println!("{status} {:>2} {name} ({took:.2?}): {}", i + 1, out.detail);
    }
    println!("{passed}/{} criteria pass", criteria.len());
}
