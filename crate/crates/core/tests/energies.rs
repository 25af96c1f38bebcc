//! Energy functionals against closed forms, homogeneity, and the run-level diagnostics.

use proptest::prelude::*;
use radelastic::energies::*;
use radelastic::nullform::CoefficientSet;
use radelastic::radialfield::{RadialGrid, RadialProfile, StateVector};
use radelastic::solver::{run, DataFamily, Model, Outcome, ScenarioConfig};
use std::f64::consts::PI;

fn gaussian_state(g: RadialGrid, amp: f64) -> StateVector {
    StateVector::new(
        RadialProfile::from_fn(g, |r| amp * (-r * r).exp()),
        RadialProfile::from_fn(g, |r| 0.5 * amp * (-r * r).exp()),
        0.0,
    )
    .unwrap()
}

/// `∫_0^∞ r^{2k} e^{−2r²} dr`.
fn moment(k: i32) -> f64 {
    let gamma = [PI.sqrt() / 2.0, 3.0 * PI.sqrt() / 4.0, 15.0 * PI.sqrt() / 8.0];
    gamma[(k - 1) as usize] / (2.0 * 2f64.powf(k as f64 + 0.5))
}

#[test]
fn first_energy_closed_form() {
    // u = x e^{−r²}, u_t = x e^{−r²}/2: |∇u|² = e^{−2r²}(3 − 4r² + 4r⁴), |u_t|² = r² e^{−2r²}/4.
    let want = 0.5 * 4.0 * PI * (3.0 * moment(1) - 4.0 * moment(2) + 4.0 * moment(3) + 0.25 * moment(2));
    let mut errs = Vec::new();
    for n in [100usize, 200, 400] {
        let got = energy_e1(&gaussian_state(RadialGrid::new(7.0, n).unwrap(), 1.0)).unwrap();
        errs.push((got - want).abs() / want);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("E1 relative errors {errs:?} orders {orders:?}");
    assert!(errs[2] < 1e-6 && orders.iter().all(|o| *o > 3.7));
}

#[test]
fn ks_constant_takes_the_worst_time() {
    let snaps = [
        Snapshot { t: 0.0, e3: 4.0, x3: 1.0, box_norm: 0.0, ..Default::default() },
        Snapshot { t: 2.0, e3: 4.0, x3: 3.0, box_norm: 0.5, ..Default::default() },
        Snapshot { t: 1.0, e3: 0.0, x3: 0.0, box_norm: 0.0, ..Default::default() },
    ];
    assert_eq!(ks_constant(&snaps), 1.0);
    assert_eq!(ks_constant(&[]), 0.0);
}

fn synthetic_reports(p: f64, growth: f64) -> Vec<EnergyReport> {
    (0..=100)
        .map(|k| {
            let t = k as f64;
            let e3 = 1.0 + growth * t;
            EnergyReport {
                t,
                e3,
                ghost_e3: 0.0,
                x3: 0.0,
                n3: 0.0,
                m3_running: (2.0 + t).ln() * e3 * (1.0 + t).powf(p),
                l3_running: 0.0,
                etilde3: e3,
                smallness_eps: 0.0,
            }
        })
        .collect()
}

#[test]
fn growth_exponent_recovers_power_laws() {
    for p in [0.0, 0.05, 0.5] {
        let got = kss_growth_exponent(&synthetic_reports(p, 0.0), 1.0, 100.0).unwrap();
        assert!((got - p).abs() < 1e-12, "{p}: {got}");
    }
    // Growing energy is absorbed by the running supremum.
    let got = kss_growth_exponent(&synthetic_reports(0.2, 0.01), 1.0, 100.0).unwrap();
    assert!((got - 0.2).abs() < 1e-12);
    assert!(kss_growth_exponent(&synthetic_reports(0.2, 0.0), 200.0, 300.0).is_none());
}

#[test]
fn equivalence_and_integrals_along_a_small_run() {
    let g = RadialGrid::new(20.0, 600).unwrap();
    let mut c = ScenarioConfig::new(g, 10.0, CoefficientSet::reduced(0.0, 1.0, 1.0), DataFamily::Bump { plateau: 1.0, support: 4.0 }, 1.0);
    c.output.cadence = 0.5;
    let t = run(&c).unwrap();
    assert_eq!(t.outcome, Outcome::Completed);
    assert!(t.snapshots_detail.iter().all(|s| s.equivalence_holds()));
    assert!(t.reports.windows(2).all(|w| w[1].m3_running >= w[0].m3_running && w[1].l3_running >= w[0].l3_running));
    let c3 = ks_constant(&t.snapshots_detail);
    println!("KS constant {c3:.4}, energy ratio {:.6}", t.energy_ratio());
    assert!(c3.is_finite() && c3 > 0.0);
}

#[test]
fn report_field_names() {
    let r = synthetic_reports(0.0, 0.0)[1];
    let v: serde_json::Value = serde_json::to_value(r).unwrap();
    let mut keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    keys.sort();
    assert_eq!(keys, ["E3", "Etilde3", "L3_running", "M3_running", "N3", "X3", "ghost_E3", "smallness_eps", "t"]);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 8, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn linear_functionals_are_quadratic(amp in 0.1..10.0f64) {
        let g = RadialGrid::new(8.0, 160).unwrap();
        let eval = EnergyEvaluator::new(Model::linear(), ReportLevel::Full);
        let a = eval.snapshot(&gaussian_state(g, 1.0)).unwrap();
        let b = eval.snapshot(&gaussian_state(g, amp)).unwrap();
        let a2 = amp * amp;
        prop_assert!((b.e3 - a2 * a.e3).abs() <= 1e-12 * b.e3);
        prop_assert!((b.etilde3 - a2 * a.etilde3).abs() <= 1e-12 * b.etilde3);
        prop_assert!((b.x3 - amp * a.x3).abs() <= 1e-12 * b.x3);
        prop_assert!((b.smallness - amp * a.smallness).abs() <= 1e-12 * b.smallness);
        prop_assert!(b.equivalence_holds());
    }
}
