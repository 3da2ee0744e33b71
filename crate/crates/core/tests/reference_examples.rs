//! Published-reference coverage examples at full replication counts.
//!
//! Run with `cargo test -p ipwband --test reference_examples`. Cells outside
//! their tolerance print FAIL; only those not listed as known exit nonzero.

use std::time::Instant;

use ipwband::sim::{run_scenario, Case, Mechanism, Scenario};

struct Example {
    id: &'static str,
    case: Case,
    mechanism: Mechanism,
    params: [f64; 2],
    n: usize,
    reps: usize,
    alpha: f64,
    /// (quantity, reference, tolerance)
    checks: &'static [(Quantity, f64, f64)],
}

#[derive(Clone, Copy, Debug)]
enum Quantity {
    ScbCoverage,
    ScbWidth,
    CcCoverage,
}

const EXAMPLES: &[Example] = &[
    Example {
        id: "case1-logit-400",
        case: Case::Case1,
        mechanism: Mechanism::Logit,
        params: [1.8, 1.0],
        n: 400,
        reps: 1000,
        alpha: 0.05,
        checks: &[(Quantity::ScbCoverage, 0.938, 0.025), (Quantity::ScbWidth, 1.102, 0.06), (Quantity::CcCoverage, 0.422, 0.04)],
    },
    Example {
        id: "case4-probit-800",
        case: Case::Case4,
        mechanism: Mechanism::Probit,
        params: [0.1, 0.3],
        n: 800,
        reps: 1000,
        alpha: 0.01,
        checks: &[(Quantity::ScbCoverage, 0.999, 0.01)],
    },
    Example {
        id: "case3-probit-800-cc",
        case: Case::Case3,
        mechanism: Mechanism::Probit,
        params: [1.0, 0.5],
        n: 800,
        reps: 1000,
        alpha: 0.01,
        checks: &[(Quantity::CcCoverage, 0.961, 0.03)],
    },
    Example {
        id: "case2-truncated-600",
        case: Case::Case2,
        mechanism: Mechanism::TruncatedLogit,
        params: [0.2, 0.6],
        n: 600,
        reps: 1000,
        alpha: 0.05,
        checks: &[(Quantity::ScbCoverage, 0.924, 0.03)],
    },
];

/// Weighted-band coverage under Logit(1.8, 1) at 1 - alpha = 0.95 and 0.99,
/// indexed by case then n = 400, 600, 800.
const LOGIT_GRID: [[[f64; 2]; 3]; 4] = [
    [[0.938, 0.993], [0.954, 0.999], [0.949, 0.998]],
    [[0.953, 0.994], [0.955, 0.994], [0.949, 0.996]],
    [[0.938, 0.991], [0.932, 0.994], [0.934, 0.995]],
    [[0.942, 0.995], [0.940, 0.997], [0.937, 0.997]],
];
const GRID_REPS: usize = 200;
const GRID_TOL: f64 = 0.045;

const KNOWN_FAILURES: &[(&str, &str)] = &[
    ("case1-logit-400", "weighted-band coverage near 0.88; d-hat runs low at n = 400 (see README)"),
    ("case2-truncated-600", "same d-hat bias, compounded by the misspecified link"),
    ("logit-grid", "95% cells of Case 1 and Case 2 at n <= 600 undercover for the same reason"),
];

fn main() {
    let mut unexpected = Vec::new();
    let mut report = |id: &str, pass: bool, detail: String| {
        println!("{} {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            match KNOWN_FAILURES.iter().find(|k| k.0 == id) {
                Some((_, why)) => println!("     known failure: {why}"),
                None => unexpected.push(id.to_string()),
            }
        }
    };

    for ex in EXAMPLES {
        let start = Instant::now();
        let s = Scenario::new(ex.case, ex.mechanism, ex.params, ex.n)
            .with_replications(ex.reps)
            .with_levels(vec![ex.alpha]);
        let r = run_scenario(&s).unwrap();
        let l = &r.levels[0];
        let mut pass = true;
        let mut parts = Vec::new();
        for &(q, want, tol) in ex.checks {
            let got = match q {
                Quantity::ScbCoverage => l.scb.coverage,
                Quantity::ScbWidth => l.scb.width,
                Quantity::CcCoverage => l.cc.coverage,
            };
            pass &= (got - want).abs() <= tol;
            parts.push(format!("{q:?} {got:.3} vs {want} ± {tol}"));
        }
        parts.push(format!("failures {} [{:.1}s]", r.failures, start.elapsed().as_secs_f64()));
        report(ex.id, pass, parts.join(", "));
    }

    let start = Instant::now();
    let mut misses = Vec::new();
    for (ci, case) in Case::ALL.into_iter().enumerate() {
        for (ni, n) in [400, 600, 800].into_iter().enumerate() {
            let s = Scenario::new(case, Mechanism::Logit, [1.8, 1.0], n)
                .with_replications(GRID_REPS)
                .with_levels(vec![0.05, 0.01]);
            let r = run_scenario(&s).unwrap();
            for (li, l) in r.levels.iter().enumerate() {
                let want = LOGIT_GRID[ci][ni][li];
                if (l.scb.coverage - want).abs() > GRID_TOL {
                    misses.push(format!("{case} n={n} {}: {:.3} vs {want}", l.level, l.scb.coverage));
                }
            }
        }
    }
    let detail = if misses.is_empty() {
        format!("all 24 cells within ± {GRID_TOL}")
    } else {
        format!("{} of 24 cells outside ± {GRID_TOL}: {}", misses.len(), misses.join("; "))
    };
    report("logit-grid", misses.is_empty(), format!("{detail} [{:.1}s]", start.elapsed().as_secs_f64()));

    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
