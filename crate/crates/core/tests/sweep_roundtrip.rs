use qi_lab_core::boundary::{find_boundaries, BoundaryQuery, Contender, Variable};
use qi_lab_core::sweep::{run_sweep, SweepSpec, CSV_HEADER};
use qi_lab_core::{ChernoffCache, QiError, QiScenario, Receiver};

const SMALL: &str = "
# small fig3a-style grid
preset = fig3a
kappa_points = 7
ns_points = 5
receivers = dhd, opa, pc
";

#[test]
fn csv_rows_are_kappa_major_and_self_consistent() {
    let spec = SweepSpec::parse(SMALL).unwrap();
    let map = run_sweep(&spec, &ChernoffCache::new()).unwrap();
    let csv = map.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 35);
    for (n, row) in rows.iter().enumerate() {
        let (i, j) = (n / 5, n % 5);
        assert_eq!(row[0].parse::<f64>().unwrap(), map.kappas[i]);
        assert_eq!(row[1].parse::<f64>().unwrap(), map.n_s_values[j]);
        assert_eq!(row[5], "", "CI column left empty");
        let snr: Vec<f64> = row[2..5].iter().map(|v| v.parse().unwrap()).collect();
        let top = snr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let best = Receiver::QUANTUM[snr.iter().position(|&v| v == top).unwrap()];
        assert_eq!(row[6], best.label());
        assert!(row[7].parse::<f64>().unwrap() >= 1.0);
    }
}

#[test]
fn floats_round_trip_losslessly() {
    let map = run_sweep(&SweepSpec::parse(SMALL).unwrap(), &ChernoffCache::new()).unwrap();
    let csv = map.to_csv();
    let row = csv.lines().nth(9).unwrap();
    let snr_dhd: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(snr_dhd, map.cells[8].snr_of(Receiver::Dhd).unwrap());
}

#[test]
fn sweep_is_deterministic_across_pools() {
    let spec = SweepSpec::parse(&format!("{SMALL}\nreceivers = dhd, ci\nkappa_points = 4\nns_points = 3\n")).unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| run_sweep(&spec, &ChernoffCache::new()).unwrap().to_csv());
    let b = four.install(|| run_sweep(&spec, &ChernoffCache::new()).unwrap().to_csv());
    assert_eq!(a, b);
}

#[test]
fn spec_errors_are_collected() {
    let Err(QiError::Spec(problems)) = SweepSpec::parse("kappa_points = 1\nns_min = 0\nn_b = -3\nbogus\nmystery = 1\n")
    else {
        panic!("expected spec error");
    };
    let joined = problems.join("\n");
    for needle in ["kappa_points", "ns_min", "n_b", "line 4", "mystery"] {
        assert!(joined.contains(needle), "missing {needle}: {joined}");
    }
}

#[test]
fn svg_has_one_polygon_per_region() {
    let map = run_sweep(&SweepSpec::parse(SMALL).unwrap(), &ChernoffCache::new()).unwrap();
    let svg = map.to_svg();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert_eq!(svg.matches("<polygon").count(), map.regions().len());
}

#[test]
fn n_s_boundary_search() {
    // along N_S at fixed κ the PC receiver takes over at larger signal strength
    let q = BoundaryQuery::new(
        Contender::Single(Receiver::Dhd),
        Contender::Single(Receiver::Pc),
        QiScenario::new(1e-4, 0.01, 30.0, 1e7),
        Variable::NS,
    );
    let r = find_boundaries(&q, &ChernoffCache::new()).unwrap();
    assert!(!r.crossings.is_empty());
    for c in &r.crossings {
        let s = QiScenario::new(1e-4, c.value, 30.0, 1e7);
        let d = qi_lab_core::closed_form_snr(Receiver::Dhd, &s).unwrap();
        let p = qi_lab_core::closed_form_snr(Receiver::Pc, &s).unwrap();
        assert!((d - p).abs() / d < 1e-3, "{d} vs {p} at {}", c.value);
    }
}
