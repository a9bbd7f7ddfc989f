mod common;

use common::*;
use harmsim::sweep::{evaluate_cell, restrict_sources_to_phase, CoupledStudySpec};
use harmsim::{
    angle_sweep, box_stats, compare_points, coupled_phase_study, index_report, run_assessment, AssessmentConfig,
    Metric, PhaseId, PhiOptions, SweepSpec,
};
use serde_json::json;

fn cfg() -> AssessmentConfig {
    AssessmentConfig::default()
}

fn spec(a: &str, b: &str, metric: Metric, point: &str, phase: PhaseId) -> SweepSpec {
    SweepSpec::new((a.into(), b.into()), metric, point.into(), phase)
}

#[test]
fn default_grid_is_seven_by_seven() {
    let g = angle_sweep(
        &fixture("feeder_y13"),
        &cfg(),
        &spec("hs1", "hs2", Metric::Thdv, "sub", PhaseId::B),
    )
    .unwrap();
    assert_eq!(g.angles_deg, [0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0]);
    assert_eq!(g.values.len(), 7);
    assert!(g.values.iter().all(|r| r.len() == 7 && r.iter().all(|v| v.is_finite())));
}

#[test]
fn dead_second_source_leaves_rows_constant() {
    let mut raw = fixture_json("feeder_2bus");
    let mut hs2 = raw["sources"][0].clone();
    hs2["id"] = json!("hs2");
    hs2["spectrum"] = json!([]);
    raw["sources"].as_array_mut().unwrap().push(hs2);
    let g = angle_sweep(
        &model(&raw),
        &cfg(),
        &spec("hs1", "hs2", Metric::PhiI, "sub", PhaseId::A),
    )
    .unwrap();
    for row in &g.values {
        assert!(row.iter().all(|v| v == &row[0]));
    }
    assert!(g.values[0][0] != g.values[3][0]);
}

#[test]
fn identical_sources_give_a_symmetric_surface() {
    let mut raw = fixture_json("feeder_cancel");
    raw["sources"][1]["spectrum"] = raw["sources"][0]["spectrum"].clone();
    let m = model(&raw);
    for metric in [Metric::Thdi, Metric::Thdv, Metric::PhiI] {
        let g = angle_sweep(&m, &cfg(), &spec("hs1", "hs2", metric, "sub", PhaseId::A)).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                let (a, b) = (g.values[i][j], g.values[j][i]);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12), "{metric} ({i},{j})");
            }
        }
    }
}

#[test]
fn opposite_sources_have_near_zero_cells() {
    let m = fixture("feeder_cancel");
    let g = angle_sweep(&m, &cfg(), &spec("hs1", "hs2", Metric::Thdi, "sub", PhaseId::A)).unwrap();
    let off = g.values[0][6];
    assert!(off > 1e-3);
    for k in 0..7 {
        assert!(g.values[k][k] < 1e-9 * off, "diagonal cell {k}: {}", g.values[k][k]);
    }
}

#[test]
fn cells_reproduce_standalone_bit_exactly() {
    let m = fixture("feeder_y13");
    for metric in [Metric::Thdi, Metric::PhiV] {
        let s = spec("hs1", "hs2", metric, "n1", PhaseId::B);
        let g = angle_sweep(&m, &cfg(), &s).unwrap();
        for (i, &a) in g.angles_deg.iter().enumerate() {
            for (j, &b) in g.angles_deg.iter().enumerate() {
                assert_eq!(
                    evaluate_cell(&m, &cfg(), &s, a, b).unwrap().to_bits(),
                    g.values[i][j].to_bits()
                );
            }
        }
    }
}

#[test]
fn common_offset_leaves_thd_unchanged() {
    let m = fixture("feeder_y13");
    let g = angle_sweep(&m, &cfg(), &spec("hs1", "hs2", Metric::Thdi, "sub", PhaseId::A)).unwrap();
    for i in 0..6 {
        for j in 0..6 {
            let (a, b) = (g.values[i][j], g.values[i + 1][j + 1]);
            assert!((a - b).abs() <= 1e-9 * a, "({i},{j})");
        }
    }
}

#[test]
fn sweep_errors_carry_context() {
    let m = fixture("feeder_y13");
    assert!(angle_sweep(&m, &cfg(), &spec("hs1", "nope", Metric::Thdi, "sub", PhaseId::A)).is_err());
    assert!(angle_sweep(&m, &cfg(), &spec("hs1", "hs2", Metric::Thdi, "nowhere", PhaseId::A)).is_err());
    // n6 carries only phases A and C.
    let err = angle_sweep(&m, &cfg(), &spec("hs1", "hs2", Metric::Thdi, "n6", PhaseId::B)).unwrap_err();
    assert!(err.to_string().contains("alpha"), "{err}");
}

fn baseline_phi_i(m: &harmsim::Network64, point: &str) -> std::collections::BTreeMap<PhaseId, f64> {
    let mut quiet = m.clone();
    quiet.sources.clear();
    let store = run_assessment(&quiet, &cfg().with_orders([]).unwrap()).unwrap();
    index_report(&quiet, &store, point, PhiOptions::default())
        .unwrap()
        .per_phase
        .into_iter()
        .map(|(p, ix)| (p, ix.phi_i.unwrap()))
        .collect()
}

#[test]
fn coupling_leaks_into_other_phases() {
    let m = fixture("feeder_coupled3");
    let store = run_assessment(&m, &cfg()).unwrap();
    let report = index_report(&m, &store, "sub", PhiOptions::default()).unwrap();
    let base = baseline_phi_i(&m, "sub");
    for p in [PhaseId::A, PhaseId::C] {
        let thdi = report.per_phase[&p].thdi.unwrap();
        assert!(thdi > 0.0 && thdi < 0.1, "{p}: {thdi}");
        assert!(store
            .harmonics
            .values()
            .any(|s| s.current("source", p).unwrap().magnitude() > 0.0));
        assert_ne!(report.per_phase[&p].phi_i.unwrap(), base[&p]);
    }

    let stats = coupled_phase_study(&m, &cfg(), &CoupledStudySpec::new(PhaseId::B, "sub".into())).unwrap();
    assert_eq!(stats.keys().copied().collect::<Vec<_>>(), PhaseId::ALL);
    for p in [PhaseId::A, PhaseId::C] {
        assert!(stats[&p].min != base[&p] || stats[&p].max != base[&p]);
    }
}

#[test]
fn zero_mutuals_isolate_the_injected_phase() {
    let m = fixture("feeder_coupled3").without_mutual_coupling();
    let store = run_assessment(&m, &cfg()).unwrap();
    for sol in store.harmonics.values() {
        for p in [PhaseId::A, PhaseId::C] {
            for per_phase in sol.branch_currents.values() {
                assert_eq!(per_phase[&p].magnitude(), 0.0);
            }
            for per_phase in sol.node_voltages.values() {
                assert_eq!(per_phase[&p].magnitude(), 0.0);
            }
        }
    }
    let base = baseline_phi_i(&m, "sub");
    let stats = coupled_phase_study(&m, &cfg(), &CoupledStudySpec::new(PhaseId::B, "sub".into())).unwrap();
    for p in [PhaseId::A, PhaseId::C] {
        let s = stats[&p];
        assert_eq!(
            (s.min, s.max, s.mean, s.median),
            (base[&p], base[&p], base[&p], base[&p])
        );
    }
}

#[test]
fn restricting_sources_needs_the_phase() {
    let m = fixture("feeder_coupled3");
    let r = restrict_sources_to_phase(&m, PhaseId::B).unwrap();
    assert!(r.sources.iter().all(|s| s.phases == [PhaseId::B]));
    assert!(restrict_sources_to_phase(&m, PhaseId::A).is_err());
}

#[test]
fn constant_series_box() {
    let b = box_stats(&[0.25; 9]).unwrap();
    assert_eq!((b.min, b.max, b.mean, b.median), (0.25, 0.25, 0.25, 0.25));
}

#[test]
fn comparisons() {
    let stiff = fixture("feeder_stiff");
    let r = compare_points(&stiff, &cfg(), "sub", "cust", PhiOptions::default()).unwrap();
    for p in PhaseId::ALL {
        let (s, c) = (&r.points.0.per_phase[&p], &r.points.1.per_phase[&p]);
        assert!(s.thdi.unwrap() > c.thdi.unwrap(), "{p} THDI");
        assert!(c.thdv.unwrap() > s.thdv.unwrap(), "{p} THDV");
    }

    let same = compare_points(&stiff, &cfg(), "mid", "mid", PhiOptions::default()).unwrap();
    assert_eq!(same.points.0.per_phase, same.points.1.per_phase);

    let mut quiet = stiff.clone();
    quiet.sources.clear();
    let r = compare_points(&quiet, &cfg(), "sub", "cust", PhiOptions::default()).unwrap();
    for ix in r.points.0.per_phase.values().chain(r.points.1.per_phase.values()) {
        assert_eq!((ix.thdv, ix.thdi), (Some(0.0), Some(0.0)));
        assert!(ix.tpf.is_some());
    }
    assert!(compare_points(&stiff, &cfg(), "sub", "X9", PhiOptions::default()).is_err());
}
