//! Strict configuration parsing, canonical emission and artifact plumbing.

use proptest::prelude::*;
use radelastic::energies::ReportLevel;
use radelastic::solver::{DataFamily, Outcome, TimeStep};
use radelastic_cli::config::*;
use radelastic_cli::experiments::{observed_orders, restrict, run_convergence, run_scenario};
use radelastic_cli::output::{read_energy_stream, read_manifest, ENERGY_FILE, MANIFEST_FILE};
use radelastic_cli::{CliError, Suite};

const MINIMAL: &str = r#"
[grid]
radius = 20.0
cells = 200

[time]
t_final = 4.0

[data]
epsilon = 0.5
"#;

#[test]
fn minimal_document_gets_documented_defaults() {
    let d = parse_document(MINIMAL).unwrap();
    let s = &d.scenario;
    assert_eq!(s.id, "run");
    assert_eq!(s.seed, 0);
    assert_eq!(s.time_step, TimeStep::Cfl(DEFAULT_CFL));
    assert_eq!((s.coeffs.c1, s.coeffs.c2), (1.0, 0.5));
    assert_eq!([s.coeffs.d1, s.coeffs.d2, s.coeffs.d3, s.coeffs.d4, s.coeffs.d5], [0.0; 5]);
    assert_eq!(s.family, DataFamily::Bump { plateau: 1.0, support: 2.0 });
    assert_eq!(s.output.cadence, 1.0);
    assert_eq!(s.output.level, ReportLevel::Full);
    assert!(s.output.snapshots.is_empty());
    assert_eq!(s.thresholds, radelastic::solver::Thresholds::default());
    assert_eq!(d.convergence.levels, 3);
    assert_eq!(d.dichotomy, DichotomySpec::default());
    assert_eq!(Suite::parse_selector(&d.verify.suite).unwrap(), Suite::ALL.to_vec());
}

#[test]
fn cfl_above_bound_is_rejected_by_name() {
    let text = MINIMAL.replace("t_final = 4.0", "t_final = 4.0\ncfl = 0.9");
    let err = parse_config(&text).unwrap_err();
    let v = err.violations();
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].path, "time.cfl");
    assert!(v[0].message.contains("0.5"), "{}", v[0].message);
}

#[test]
fn every_violation_is_listed() {
    let text = r#"
[grid]
radius = 3.0
cells = 100
colour = "red"

[time]
t_final = 4.0
cfl = 0.3
dt = 0.01

[data]
family = "gaussian"
plateau = 1.0

[output]
level = "verbose"

[extra]
x = 1
"#;
    let err = parse_document(text).unwrap_err();
    let paths: Vec<&str> = err.violations().iter().map(|v| v.path.as_str()).collect();
    println!("{err}");
    for p in ["grid.colour", "extra", "time", "data.plateau", "data.epsilon", "output.level", "grid.radius"] {
        assert!(paths.contains(&p), "{p} missing from {paths:?}");
    }
}

#[test]
fn unknown_key_is_fatal() {
    let text = MINIMAL.replace("[data]", "[data]\nepsilom = 1.0");
    let err = parse_config(&text).unwrap_err();
    assert!(err.violations().iter().any(|v| v.path == "data.epsilom" && v.message == "unknown key"));
}

#[test]
fn two_convergence_levels_rejected() {
    let text = format!("{MINIMAL}\n[convergence]\nlevels = 2\n");
    let err = parse_document(&text).unwrap_err();
    assert!(err.violations().iter().any(|v| v.path == "convergence.levels"));
    let d = parse_document(MINIMAL).unwrap();
    assert!(matches!(run_convergence(&d.scenario, 2, 1), Err(CliError::TooFewLevels(2))));
}

#[test]
fn suite_selectors() {
    assert_eq!(Suite::parse_selector("").unwrap().len(), 5);
    assert_eq!(Suite::parse_selector("all").unwrap().len(), 5);
    assert_eq!(Suite::parse_selector("kss, nullform").unwrap(), vec![Suite::Kss, Suite::Nullform]);
    assert!(matches!(Suite::parse_selector("nullform,hardy"), Err(CliError::UnknownSuite(s)) if s == "hardy"));
    let text = format!("{MINIMAL}\n[verify]\nsuite = \"energies\"\n");
    assert!(parse_document(&text).unwrap_err().violations().iter().any(|v| v.path == "verify.suite"));
}

#[test]
fn dichotomy_section_is_checked() {
    let text = format!("{MINIMAL}\n[dichotomy]\namplitudes = [2.0, 1.0]\nbracket = [5.0]\nnonnull_d1 = 0.0\n");
    let paths: Vec<String> = parse_document(&text).unwrap_err().violations().iter().map(|v| v.path.clone()).collect();
    for p in ["dichotomy.amplitudes", "dichotomy.bracket", "dichotomy.nonnull_d1"] {
        assert!(paths.iter().any(|x| x == p), "{p} missing from {paths:?}");
    }
}

fn document() -> impl Strategy<Value = String> {
    (
        (1u64..1000, 100usize..400, 0.1..0.5f64, 1usize..5),
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, 0.0..3.0f64),
        (0usize..3, 0.5..1.5f64, 0usize..3),
        (1.0..100.0f64, 2usize..6),
    )
        .prop_map(|((seed, cells, cfl, tf), (d1, d3, d5, eps), (fam, w, lvl), (lo, levels))| {
            let data = match fam {
                0 => format!("family = \"gaussian\"\nwidth = {w}"),
                1 => format!("family = \"bump\"\nplateau = {w}\nsupport = {}", 2.0 * w),
                _ => format!("family = \"ring\"\ncenter = {}\nwidth = {}", 2.0 * w, 0.3 * w),
            };
            let level = ["energy", "full", "identity"][lvl];
            format!(
                "[run]\nid = \"case-{seed}\"\nseed = {seed}\n[grid]\nradius = 40.0\ncells = {cells}\n\
                 [time]\nt_final = {tf}.0\ncfl = {cfl}\n[material]\nd1 = {d1}\nd3 = {d3}\nd5 = {d5}\n\
                 [data]\n{data}\nepsilon = {eps}\n[output]\ncadence = 0.5\nsnapshots = [0.5, 1.0]\nlevel = \"{level}\"\n\
                 [dichotomy]\nbracket = [{lo}, {}]\nmultiples = [2.0, 3.0]\n[convergence]\nlevels = {}\n\
                 [verify]\nsuite = \"nullform,kss\"\n",
                2.0 * lo,
                levels + 1
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn emit_then_parse_is_identity(text in document()) {
        let doc = parse_document(&text).unwrap();
        let emitted = emit_document(&doc);
        let again = parse_document(&emitted).unwrap();
        prop_assert_eq!(&again, &doc);
        prop_assert_eq!(emit_document(&again), emitted);
        prop_assert_eq!(config_hash(&again), config_hash(&doc));
    }
}

#[test]
fn run_writes_listed_artifacts_and_echoes_config() {
    let text = format!("{}\n[output]\nsnapshots = [2.0]\nlevel = \"energy\"\n", MINIMAL.replace("cells = 200", "cells = 400"));
    let doc = parse_document(&text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (traj, manifest) = run_scenario(&doc, Some(dir.path())).unwrap();
    let m = manifest.unwrap();
    assert_eq!(traj.outcome, Outcome::Completed);
    let mut on_disk: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    on_disk.sort();
    let mut listed = m.artifacts.clone();
    listed.sort();
    assert_eq!(on_disk, listed);
    assert!(listed.contains(&MANIFEST_FILE.to_string()) && listed.contains(&ENERGY_FILE.to_string()));
    assert_eq!(parse_document(&m.config).unwrap(), doc);
    assert_eq!(read_manifest(dir.path()).unwrap(), m);
    let stream = read_energy_stream(&std::fs::read_to_string(dir.path().join(ENERGY_FILE)).unwrap()).unwrap();
    assert_eq!(stream, traj.reports);
}

#[test]
fn restriction_is_sixth_order_and_orders_are_logs() {
    let mut errs = Vec::new();
    for n in [50usize, 100, 200] {
        let h = 8.0 / n as f64;
        let fine: Vec<f64> = (0..2 * n).map(|j| (-((j as f64 + 0.5) * h / 2.0).powi(2)).exp()).collect();
        let coarse = restrict(&fine);
        let e = coarse
            .iter()
            .enumerate()
            .map(|(j, v)| (v - (-((j as f64 + 0.5) * h).powi(2)).exp()).abs())
            .fold(0.0, f64::max);
        errs.push(e);
    }
    let o = observed_orders(&errs);
    println!("restriction errors {errs:?} orders {o:?}");
    assert!(o.iter().all(|x| *x > 5.5));
    assert_eq!(observed_orders(&[4.0, 1.0]), vec![2.0]);
}
