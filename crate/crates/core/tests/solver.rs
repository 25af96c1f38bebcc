//! Evolution against exact linear waves, blowup detection, radiality and run bookkeeping.

use proptest::prelude::*;
use radelastic::energies::ReportLevel;
use radelastic::nullform::CoefficientSet;
use radelastic::radialfield::{RadialGrid, StateVector};
use radelastic::solver::*;
use radelastic::verify::ManufacturedField;

const PULSE: ManufacturedField = ManufacturedField::OutgoingPulse { center: 6.0, width: 1.0 };

fn linear_cfg(g: RadialGrid, t_final: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::new(g, t_final, CoefficientSet::reduced(0.0, 0.0, 0.0), DataFamily::Gaussian { width: 1.0 }, 0.0);
    c.output.level = ReportLevel::Energy;
    c.output.store_states = true;
    c
}

fn bump_cfg(radius: f64, cells: usize, t_final: f64, d1: f64, eps: f64) -> ScenarioConfig {
    let g = RadialGrid::new(radius, cells).unwrap();
    let mut c = ScenarioConfig::new(g, t_final, CoefficientSet::reduced(d1, 1.0, 1.0), DataFamily::Bump { plateau: 1.0, support: 4.0 }, eps);
    c.output.level = ReportLevel::Energy;
    c
}

#[test]
fn exact_outgoing_wave_is_reproduced_to_fourth_order() {
    let mut errs = Vec::new();
    for n in [200usize, 400, 800] {
        let g = RadialGrid::new(20.0, n).unwrap();
        let t = run_from(&linear_cfg(g, 5.0), &Model::linear(), PULSE.state(g, 0.0).unwrap()).unwrap();
        assert_eq!(t.outcome, Outcome::Completed);
        let last = t.states.last().unwrap();
        let exact = PULSE.state(g, 5.0).unwrap();
        let scale = exact.psi.max_abs();
        let err = last
            .psi
            .values()
            .iter()
            .zip(exact.psi.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale;
        errs.push(err);
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    println!("outgoing wave relative errors {errs:?} orders {orders:?}");
    assert!(orders.iter().all(|o| *o > 3.5));
}

#[test]
fn zero_data_completes_with_zero_reports() {
    let c = bump_cfg(16.0, 160, 10.0, 1.0, 0.0);
    let t = run(&c).unwrap();
    assert_eq!(t.outcome, Outcome::Completed);
    assert_eq!(t.reports.len(), 11);
    assert!(t.reports.iter().all(|r| r.e3 == 0.0 && r.m3_running == 0.0));
    assert_eq!(t.energy_ratio(), 1.0);
}

#[test]
fn nonnull_blowup_time_decreases_with_amplitude() {
    let mut times = Vec::new();
    for eps in [120.0, 135.0, 150.0] {
        let t = run(&bump_cfg(8.0, 800, 3.0, 1.0, eps)).unwrap();
        match t.outcome {
            Outcome::Blowup { t_star } => times.push(t_star),
            other => panic!("eps {eps}: {other:?}"),
        }
    }
    println!("blowup times {times:?}");
    assert!(times.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn small_null_run_stays_bounded() {
    let t = run(&bump_cfg(24.0, 960, 10.0, 0.0, 5.0)).unwrap();
    assert_eq!(t.outcome, Outcome::Completed);
    println!("energy ratio {:.6}", t.energy_ratio());
    assert!(t.energy_ratio() < 1.5);
}

#[test]
fn boundary_violation_reported() {
    let g = RadialGrid::new(12.0, 240).unwrap();
    // Too small a radius for the run time; run_from skips validation so the pulse reaches the edge.
    let c = linear_cfg(g, 10.0);
    let t = run_from(&c, &Model::linear(), PULSE.state(g, 0.0).unwrap()).unwrap();
    assert!(matches!(t.outcome, Outcome::BoundaryViolation { .. }), "{:?}", t.outcome);
}

#[test]
fn radiality_of_nonlinear_states() {
    let mut c = bump_cfg(10.0, 400, 2.0, 1.0, 20.0);
    c.output.cadence = 0.5;
    c.output.store_states = true;
    let t = run(&c).unwrap();
    let m = Model::new(c.coeffs);
    for s in &t.states {
        let d = radiality_defect(s, &m).unwrap();
        assert!(d <= 1e-10, "t = {}: {d:e}", s.t);
    }
    assert_eq!(radiality_defect(&StateVector::zeros(c.grid, 0.0), &m).unwrap(), 0.0);
}

#[test]
fn fast_reduction_matches_on_axis_evaluation() {
    let g = RadialGrid::new(10.0, 400).unwrap();
    let s = make_initial_data(&DataFamily::Gaussian { width: 1.0 }, 3.0, g).unwrap();
    for c in [CoefficientSet::reduced(0.0, 1.0, 1.0), CoefficientSet::reduced(1.0, 1.0, 1.0), CoefficientSet::new(1.0, 0.5, [0.4, 2.0, -0.7, 1.3, 0.2]).unwrap()] {
        let m = Model::new(c);
        let stack = radelastic::radialfield::derivative_stack(&g, s.psi.values(), 2, radelastic::radialfield::OuterClosure::OneSided).unwrap();
        let fast = m.chi_profile(&g, &stack);
        let direct = scalar_rhs(&s, &m.tensor).unwrap();
        let scale = direct.max_abs();
        let err = fast.iter().zip(direct.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
        assert!(err <= 1e-12, "{c:?}: {err:e}");
    }
}

#[test]
fn principal_margin_detects_loss_of_hyperbolicity() {
    let g = RadialGrid::new(10.0, 400).unwrap();
    let m = Model::new(CoefficientSet::reduced(1.0, 1.0, 1.0));
    let fam = DataFamily::Bump { plateau: 1.0, support: 4.0 };
    let margin = |eps: f64| m.principal_margin(&g, make_initial_data(&fam, eps, g).unwrap().psi.values()).unwrap();
    assert_eq!(margin(0.0), 1.0);
    assert!(margin(10.0) > 0.5);
    assert!(margin(300.0) < 0.0);
    assert_eq!(Model::linear().principal_margin(&g, make_initial_data(&fam, 300.0, g).unwrap().psi.values()).unwrap(), 1.0);
}

#[test]
fn violations_are_collected_together() {
    let g = RadialGrid::new(5.0, 100).unwrap();
    let mut c = ScenarioConfig::new(g, 10.0, CoefficientSet::reduced(0.0, 1.0, 1.0), DataFamily::Bump { plateau: 2.0, support: 1.0 }, -1.0);
    c.output.cadence = 3.0;
    c.thresholds.h_bound = 2.0;
    let keys: Vec<String> = c.violations().into_iter().map(|(k, _)| k).collect();
    for k in ["output.cadence", "grid.radius", "data", "data.epsilon", "thresholds.h_bound"] {
        assert!(keys.iter().any(|x| x == k), "{k} missing from {keys:?}");
    }
    assert!(run(&c).is_err());
}

#[test]
fn outcome_serializes_with_kind_tag() {
    let o = Outcome::Blowup { t_star: 0.5 };
    let s = serde_json::to_string(&o).unwrap();
    assert_eq!(s, r#"{"kind":"blowup","t_star":0.5}"#);
    assert_eq!(serde_json::from_str::<Outcome>(&s).unwrap(), o);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn amplitude_fixes_smallness_norm(eps in 0.01..50.0f64, w in 0.5..2.0f64) {
        let g = RadialGrid::new(15.0, 300).unwrap();
        let fam = DataFamily::Gaussian { width: w };
        let s = make_initial_data(&fam, eps, g).unwrap();
        let got = radelastic::energies::smallness_norm(&s).unwrap();
        prop_assert!((got - eps).abs() <= 1e-12 * eps);
    }

    #[test]
    fn stepping_divides_cadence(cells in 50usize..400, cadence in 0.1..2.0f64) {
        let g = RadialGrid::new(20.0, cells).unwrap();
        let mut c = linear_cfg(g, 10.0);
        c.output.cadence = cadence;
        let (k, dt) = c.stepping();
        prop_assert!(dt <= c.max_dt() * (1.0 + 1e-12));
        prop_assert!((k as f64 * dt - cadence).abs() <= 1e-12 * cadence);
    }
}
