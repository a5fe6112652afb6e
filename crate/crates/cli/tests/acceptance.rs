//! Acceptance criteria. Prints one verdict line per criterion and fails if
//! any criterion fails.

use std::process::Command;
use std::time::Instant;

use qi_lab_core::boundary::{find_boundaries, BoundaryQuery, Contender, Variable};
use qi_lab_core::receiver::{engine_snr, engine_stats};
use qi_lab_core::sweep::{run_sweep, SweepSpec};
use qi_lab_core::validate::random_scenarios;
use qi_lab_core::{
    approx_error_from_snr, build_dhd_operator, build_opa_operator, build_pc_operator, ci_chernoff,
    closed_form_snr, erfc, error_probabilities, fock_oracle_moments, moments, optimal_threshold, snr,
    ChernoffCache, Hypothesis, QiScenario, Receiver,
};
use qi_lab_core::receiver::hypothesis_state;

const AC1_REL: f64 = 1e-9;
const AC1_SECONDS: f64 = 5.0;
const AC2_REL: f64 = 1e-6;
const AC2_DIM: usize = 25;
const AC2_SECONDS: f64 = 60.0;
const AC3_BAND: (f64, f64) = (96.0, 144.0);
const AC4_NB30: (f64, f64) = (0.0007, 0.0011);
const AC4_NB100: (f64, f64) = (0.0002, 0.0004);
const AC4_SECONDS: f64 = 10.0;
const AC5_CI: (f64, f64) = (0.10, 0.15);
const AC5_DHD_EDGE: (f64, f64) = (0.017, 0.027);
const AC5_SECONDS: f64 = 300.0;
const AC6_REL: f64 = 1e-6;
const AC7_BALANCE: f64 = 1e-9;
const AC7_ERFC: f64 = 1e-12;
const AC7_APPROX: f64 = 0.01;

struct Verdict {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn rel(a: f64, b: f64) -> f64 {
    let s = a.abs().max(b.abs());
    if s == 0.0 {
        0.0
    } else {
        (a - b).abs() / s
    }
}

fn within(x: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&x)
}

fn anchor(n_b: f64) -> QiScenario {
    QiScenario::new(0.01, 0.01, n_b, 1e7)
}

fn ac1() -> Verdict {
    let t = Instant::now();
    let grid = random_scenarios(20_240_601, 1000);
    let mut parts = Vec::new();
    let mut ok = true;
    for r in Receiver::QUANTUM {
        let worst = grid
            .iter()
            .map(|s| rel(engine_snr(r, s).unwrap(), closed_form_snr(r, s).unwrap()))
            .fold(0.0, f64::max);
        ok &= worst <= AC1_REL;
        parts.push(format!("{}={worst:.2e}", r.label()));
    }
    let secs = t.elapsed().as_secs_f64();
    ok &= secs < AC1_SECONDS;
    Verdict {
        id: "AC1 formula/engine equivalence",
        passed: ok,
        detail: format!("worst rel {} (tol {AC1_REL:e}), {secs:.2}s", parts.join(" ")),
    }
}

fn ac2() -> Verdict {
    let t = Instant::now();
    let s = QiScenario::new(0.3, 0.1, 0.5, 1.0);
    let ops = [
        (Receiver::Dhd, build_dhd_operator()),
        (Receiver::Opa, build_opa_operator(s.opa_gain).unwrap()),
        (Receiver::Pc, build_pc_operator(s.pc_mu, s.pc_nu).unwrap()),
    ];
    let mut worst: f64 = 0.0;
    for (r, op) in &ops {
        for h in [Hypothesis::H0, Hypothesis::H1] {
            let gauss = moments(op, &hypothesis_state(*r, &s, h).unwrap()).unwrap();
            let fock = fock_oracle_moments(op, &s, h, AC2_DIM).unwrap();
            worst = worst.max(rel(gauss.mean, fock.mean)).max(rel(gauss.variance, fock.variance));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    Verdict {
        id: "AC2 Fock-oracle equivalence",
        passed: worst <= AC2_REL && secs < AC2_SECONDS,
        detail: format!("worst rel {worst:.2e} over 3 operators x 2 hypotheses (tol {AC2_REL:e}), {secs:.2}s"),
    }
}

fn ac3() -> Verdict {
    let s = anchor(30.0);
    let formula = closed_form_snr(Receiver::Dhd, &s).unwrap();
    let engine = engine_snr(Receiver::Dhd, &s).unwrap();
    Verdict {
        id: "AC3 dHD anchor SNR",
        passed: within(formula, AC3_BAND) && within(engine, AC3_BAND),
        detail: format!("formula {formula:.4} engine {engine:.4}, band [{}, {}]", AC3_BAND.0, AC3_BAND.1),
    }
}

fn crossings(a: &str, b: &str, base: QiScenario, cache: &ChernoffCache) -> Vec<(f64, bool)> {
    let q = BoundaryQuery::new(a.parse::<Contender>().unwrap(), b.parse().unwrap(), base, Variable::Kappa);
    find_boundaries(&q, cache)
        .unwrap()
        .crossings
        .iter()
        .map(|c| (c.value, c.a_leads_below))
        .collect()
}

fn ac4() -> Verdict {
    let t = Instant::now();
    let cache = ChernoffCache::new();
    let c30 = crossings("dhd", "pc", anchor(30.0), &cache);
    let c100 = crossings("dhd", "pc", anchor(100.0), &cache);
    let secs = t.elapsed().as_secs_f64();
    let ok = |c: &[(f64, bool)], band| c.len() == 1 && within(c[0].0, band);
    Verdict {
        id: "AC4 PC/dHD crossover",
        passed: ok(&c30, AC4_NB30) && ok(&c100, AC4_NB100) && secs < AC4_SECONDS,
        detail: format!(
            "N_B=30 {:?} in {AC4_NB30:?}; N_B=100 {:?} in {AC4_NB100:?}; {secs:.2}s",
            c30.iter().map(|c| c.0).collect::<Vec<_>>(),
            c100.iter().map(|c| c.0).collect::<Vec<_>>()
        ),
    }
}

fn ac5() -> Verdict {
    let t = Instant::now();
    let cache = ChernoffCache::new();
    // the last crossing after which CI stays ahead
    let ci = crossings("ci", "dhd+opa+pc", anchor(30.0), &cache);
    let overtake = ci.last().filter(|c| !c.1).map(|c| c.0);
    // first point where dHD stops being best at N_S = 1e-4
    let dhd = crossings("dhd", "opa+pc+ci", QiScenario::new(0.01, 1e-4, 30.0, 1e7), &cache);
    let edge = dhd.iter().find(|c| c.1).map(|c| c.0);
    let secs = t.elapsed().as_secs_f64();
    let ci_ok = overtake.is_some_and(|x| within(x, AC5_CI));
    let edge_ok = edge.is_some_and(|x| within(x, AC5_DHD_EDGE));
    Verdict {
        id: "AC5 CI boundary",
        passed: ci_ok && edge_ok && secs < AC5_SECONDS,
        detail: format!(
            "CI overtakes at {overtake:?} in {AC5_CI:?} [{}]; dHD window edge at {edge:?} in {AC5_DHD_EDGE:?} [{}]; {secs:.2}s",
            if ci_ok { "ok" } else { "miss" },
            if edge_ok { "ok" } else { "miss" },
        ),
    }
}

fn ac6() -> Verdict {
    let mut worst: f64 = 0.0;
    for kappa in [0.5, 0.2] {
        for n_s in [0.1, 1.0] {
            let r = ci_chernoff(n_s, 0.0, kappa, 1.0).unwrap();
            worst = worst.max(rel(-r.q_value.ln(), kappa * n_s));
        }
    }
    Verdict {
        id: "AC6 Chernoff pure-state limit",
        passed: worst <= AC6_REL,
        detail: format!("worst rel {worst:.2e} (tol {AC6_REL:e})"),
    }
}

fn ac7() -> Verdict {
    let mut balance: f64 = 0.0;
    let mut erfc_err: f64 = 0.0;
    for r in Receiver::QUANTUM {
        for n_b in [0.5, 30.0, 100.0] {
            let stats = engine_stats(r, &QiScenario::new(0.05, 0.01, n_b, 1e4)).unwrap();
            let th = optimal_threshold(&stats).unwrap();
            let p = error_probabilities(&stats, th).unwrap();
            balance = balance.max((p.false_alarm - p.miss).abs());
            let value = snr(&stats).unwrap();
            erfc_err = erfc_err.max(rel(p.total, 0.5 * erfc(value.sqrt()).unwrap()));
        }
    }
    let exact = 0.5 * erfc(10.0).unwrap();
    let approx_err = rel(approx_error_from_snr(100.0).unwrap(), exact);
    Verdict {
        id: "AC7 decision-theory identities",
        passed: balance <= AC7_BALANCE && erfc_err <= AC7_ERFC && approx_err <= AC7_APPROX,
        detail: format!(
            "|P(1|0)-P(0|1)| {balance:.2e} (tol {AC7_BALANCE:e}); P_E vs erfc rel {erfc_err:.2e} (tol {AC7_ERFC:e}); approx at SNR=100 rel {approx_err:.2e} (tol {AC7_APPROX})"
        ),
    }
}

fn qi_regions(preset: &str) -> (Vec<(Receiver, usize)>, usize) {
    let mut spec = SweepSpec::preset(preset).unwrap();
    spec.receivers = Receiver::QUANTUM.to_vec();
    let map = run_sweep(&spec, &ChernoffCache::new()).unwrap();
    let regions = map.regions().into_iter().map(|(r, cells)| (r, cells.len())).collect();
    (regions, map.count(Receiver::Dhd))
}

fn ac8() -> Verdict {
    let (a, dhd_a) = qi_regions("fig3a");
    let (_, dhd_b) = qi_regions("fig3b");
    let mut labels: Vec<Receiver> = a.iter().map(|r| r.0).collect();
    labels.sort_by_key(|r| r.key());
    let three = a.len() == 3 && labels.len() == 3 && {
        let mut want = vec![Receiver::Pc, Receiver::Dhd, Receiver::Opa];
        want.sort_by_key(|r| r.key());
        labels == want
    };
    let grows = dhd_b > dhd_a;
    Verdict {
        id: "AC8 region-map reproduction",
        passed: three && grows,
        detail: format!(
            "fig3a regions {a:?} [{}]; dHD cells {dhd_a} -> {dhd_b} [{}]",
            if three { "ok" } else { "expected exactly {PC, dHD, OPA}" },
            if grows { "ok" } else { "no growth" },
        ),
    }
}

fn ac9() -> Verdict {
    let dir = std::env::temp_dir().join(format!("qi-lab-ac9-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let spec = dir.join("spec.txt");
    std::fs::write(&spec, "preset = fig3a\nkappa_points = 9\nns_points = 7\nreceivers = dhd, opa, pc, ci\n").unwrap();
    let run = |threads: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_qi-lab"))
            .args(["scan", "--spec"])
            .arg(&spec)
            .env("QI_LAB_THREADS", threads)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        out.stdout
    };
    let (first, second, single) = (run("4"), run("4"), run("1"));
    std::fs::remove_dir_all(&dir).ok();
    Verdict {
        id: "AC9 scan determinism",
        passed: first == second && first == single,
        detail: format!("{} bytes, repeat identical {}, 1-thread identical {}", first.len(), first == second, first == single),
    }
}

#[test]
fn acceptance() {
    let checks: [fn() -> Verdict; 9] = [ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9];
    let mut failed = Vec::new();
    for check in checks {
        let v = check();
        println!("{} {}: {}", if v.passed { "PASS" } else { "FAIL" }, v.id, v.detail);
        if !v.passed {
            failed.push(v.id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
