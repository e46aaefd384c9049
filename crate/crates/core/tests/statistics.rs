use fbt_core::branching::{replicate_seed, sample_tree, SurvivalParams};
use fbt_core::inference::{joint_pmf, FatherStat};
use fbt_core::montecarlo::{mc_compare, CellKind, McConfig};

const SEED: u64 = 0x5EED_0001;

fn symmetric() -> SurvivalParams {
    SurvivalParams::new(0.5, 0.2, 0.3, 0.5, 0.2, 0.3).unwrap()
}

#[test]
fn subcritical_cells_within_three_standard_errors() {
    let r = mc_compare(&symmetric(), &McConfig::new(100_000, SEED)).unwrap();
    assert_eq!(r.truncated, 0);
    for kind in [
        CellKind::Extinction,
        CellKind::Mgf,
        CellKind::Father,
        CellKind::Joint,
    ] {
        let z = r.max_abs_z(kind, 0.01);
        assert!(z <= 3.0, "{kind:?}: max |z| {z}\n{}", r.to_csv());
    }
    assert!(r.father_tv.unwrap() < 0.01);
}

#[test]
fn joint_cells_are_reported_with_the_closed_form() {
    let p = symmetric();
    let r = mc_compare(&p, &McConfig::new(20_000, 7)).unwrap();
    let cherry = r.cell(CellKind::Joint, "D1=1;D2=0;S1=0;S2=0").unwrap();
    assert!((cherry.theoretical - 0.5 * 0.3 * 0.5).abs() < 1e-15);
    let j = joint_pmf(&p, &FatherStat::with_survivals(2, 1, 1, 0).unwrap()).unwrap();
    if let Some(c) = r.cell(CellKind::Joint, "D1=2;D2=1;S1=1;S2=0") {
        assert_eq!(c.theoretical, j);
    }
}

#[test]
fn supercritical_extinction_frequency() {
    let p = SurvivalParams::without_survivals(0.8, 0.8).unwrap();
    let mut cfg = McConfig::new(100_000, SEED);
    cfg.max_vertices = 1_000;
    let r = mc_compare(&p, &cfg).unwrap();
    let e = r.cell(CellKind::Extinction, "extinction").unwrap();
    assert!((e.empirical - 0.25).abs() <= 3.0 * (0.25f64 * 0.75 / 1e5).sqrt());
    assert_eq!(r.complete + r.truncated, 100_000);
}

#[test]
fn replicates_rerun_in_isolation() {
    let p = symmetric();
    let mut cfg = McConfig::new(50, 99);
    cfg.s_values = vec![-0.5];
    let r = mc_compare(&p, &cfg).unwrap();
    let dist = p.distribution();
    let mean: f64 = (0..50)
        .map(|j| {
            let o = sample_tree(&dist, 1, replicate_seed(99, j), 10_000).unwrap();
            (-(o.edge_count as f64)).exp()
        })
        .sum::<f64>()
        / 50.0;
    let c = r.cell(CellKind::Mgf, "mgf(s=-0.5)").unwrap();
    assert!((c.empirical - mean).abs() < 1e-12);
}

#[test]
fn report_is_thread_count_independent() {
    let p = symmetric();
    let cfg = McConfig::new(5_000, 11);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| mc_compare(&p, &cfg).unwrap());
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap()
        .install(|| mc_compare(&p, &cfg).unwrap());
    assert_eq!(one.to_csv(), many.to_csv());
}
