//! Acceptance suite: every verification criterion at its stated size and
//! tolerance, one pass/fail line printed per criterion.
//!
//! Criteria 8 and 9 probe statistics that need refining bulk field data near
//! the curve; with the boundary-only field surrogate they are expected to
//! saturate below their thresholds (the experiment reports carry the
//! diagnostics). They are still asserted at face value here.

use critweld_lab::config::{KvMap, RunContext};
use critweld_lab::experiments;
use critweld_lab::report::Report;

const SEED: u64 = 1;
const WORKERS: usize = 8;

fn run(name: &str, replicas: u64, overrides: &[(&str, &str)]) -> Report {
    let exp = experiments::find(name).expect("registered experiment");
    let mut user = KvMap::new();
    for (k, v) in overrides {
        user.set(k, v);
    }
    let params = user.merged_into(&exp.schema()).expect("valid overrides");
    let ctx = RunContext { seed: SEED, replicas, workers: WORKERS, params };
    let report = exp.run(&ctx).expect("experiment run");
    for c in &report.criteria {
        println!(
            "[acceptance] {} {}::{} (value {}, requires {})",
            if c.passed { "PASS" } else { "FAIL" },
            name,
            c.name,
            c.value,
            c.threshold
        );
    }
    report
}

fn assert_passed(report: &Report) {
    assert!(
        report.passed(),
        "failed criteria: {:?}",
        report
            .criteria
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{} (value {}, requires {})", c.name, c.value, c.threshold))
            .collect::<Vec<_>>()
    );
}

#[test]
fn acceptance_01_gmc_first_moment() {
    // neumann model, kappa0 = 0, gamma = 1, eps = 2^-8, N = 2000:
    // mean subcritical mass of [0,1] within 3 standard errors of 1
    let r = run("exp_gmc_moment", 2000, &[("gamma", "1.0"), ("eps_j", "8"), ("ci_mult", "3")]);
    assert_passed(&r);
}

#[test]
fn acceptance_02_ratio_trend() {
    // shared-noise (2,1)-wedge fields, 200 replicas, gamma in {1.8, 1.9, 1.95}
    // at eps = 2^-12: fitted-constant ratio medians decreasing; fitted c
    // stable across [0,1], [0,1/2], [1/2,1]
    let r = run("exp_ratio", 200, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_03_loewner_exactness() {
    // zero-driving closed forms and capacity additivity to 1e-9 relative
    let r = run("exp_loewner_exact", 1, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_04_flow_convergence() {
    // shared-BM coupling, kappa_n = 4 - 2^-n, n = 1..6, 200 trials:
    // Caratheodory+ distance decreasing in >= 95% of trials; rescaled
    // swallowing monotone on the full mesh in every trial
    let r = run("exp_flows", 200, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_05_girsanov_bessel() {
    // M_t-reweighted front vs BES(3) marginal at t = 1: KS p > 0.01 at
    // N = 10^4, ESS >= 100
    let r = run("exp_rn", 10_000, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_06_williams_decomposition() {
    // theta vs Uniform[0, C + beta] with C + beta = 5: KS p > 0.01 at N = 10^4
    let r = run("exp_williams", 10_000, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_07_zoom_in() {
    // importance-sampled typical point: recentred radial increments over
    // s in [0.5, 2] match -BES(3) increment moments within 3-SE CIs at
    // N = 500 effective
    let r = run("exp_zoom", 4000, &[("ess_min", "500")]);
    assert_passed(&r);
}

#[test]
fn acceptance_08_length_matching() {
    // (2,1)-wedge + independent SLE4, capacity 0.5: median |L-R|/(L+R) over
    // 100 replicas strictly decreasing across eps in {2^-6, 2^-8, 2^-10}
    let r = run("exp_weld", 100, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_09_interface_law() {
    // weld two independent (2,2)-wedge fields by truncated-critical length
    // (256 pairs/unit), extract the seam driving over 300 seams: regression
    // slope of Var W_t vs t within [3, 5]; pooled increment Gaussianity
    // KS p > 0.01
    let r = run("exp_interface", 300, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_10_zip_stationarity() {
    // zip_up by quantum length 0.5 and canonical rescaling: radial marginals
    // at s in {0.5, 1} match the direct sampler, two-sample KS p > 0.01 with
    // >= 500 usable replicas
    let r = run("exp_zip", 1000, &[]);
    let usable = r
        .summary
        .iter()
        .find(|(k, _)| k == "zipped_replicas")
        .map(|(_, v)| *v)
        .unwrap_or(0.0);
    assert!(usable >= 500.0, "need >= 500 usable zipped replicas, got {usable}");
    assert_passed(&r);
}

#[test]
fn acceptance_11_shared_noise_points() {
    // coupled gamma ladder: measure distances and quantum-point distances
    // decreasing in median; quantile monotonicity exact in every replica
    let r = run("exp_points", 1000, &[]);
    assert_passed(&r);
}

#[test]
fn acceptance_12_determinism_and_merge_invariance() {
    // identical config + seed give byte-identical reports; 1-worker and
    // 8-worker runs merge identically
    let exp = experiments::find("exp_gmc_moment").unwrap();
    let params = KvMap::new().merged_into(&exp.schema()).unwrap();
    let mk = |workers: usize| {
        let ctx = RunContext { seed: 7, replicas: 200, workers, params: params.clone() };
        exp.run(&ctx).unwrap().to_ndjson().unwrap()
    };
    let a = mk(8);
    let b = mk(8);
    println!("[acceptance] {} exp determinism::rerun_identical", if a == b { "PASS" } else { "FAIL" });
    assert_eq!(a, b, "rerun with identical config+seed must be byte-identical");
    let c = mk(1);
    println!(
        "[acceptance] {} exp determinism::merge_invariance",
        if a == c { "PASS" } else { "FAIL" }
    );
    assert_eq!(a, c, "1-worker and 8-worker runs must merge identically");
}
