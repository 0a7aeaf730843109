use esdr_core::esdr::leave_probability;
use esdr_core::oracle::{propagate, standard_panel, PropagationPlan};
use esdr_core::SystemParams;

fn weak_on_resonance() -> SystemParams {
    standard_panel()
        .into_iter()
        .find(|p| p.label == "weak/single-photon inner branch")
        .unwrap()
        .params
}

#[test]
fn norm_is_preserved() {
    for point in standard_panel().iter().step_by(3) {
        let run = propagate(&PropagationPlan::new(point.params, 1000.0)).unwrap();
        assert!(run.norm_drift < 1e-8, "{}: {}", point.label, run.norm_drift);
        let sum: f64 = run.averages.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8);
    }
}

#[test]
fn halving_the_step_leaves_averages_unchanged() {
    let p = weak_on_resonance();
    let coarse = PropagationPlan::new(p, 1000.0);
    let fine = PropagationPlan { step: coarse.step / 2.0, ..coarse.clone() };
    let (a, b) = (propagate(&coarse).unwrap(), propagate(&fine).unwrap());
    for k in 0..3 {
        assert!((a.averages[k] - b.averages[k]).abs() < 1e-4, "slot {k}");
    }
}

#[test]
fn weak_field_resonances_match_floquet() {
    for point in standard_panel().iter().filter(|p| p.label.starts_with("weak/")) {
        let plan = PropagationPlan {
            drive_phases: 4,
            ..PropagationPlan::new(point.params, 2000.0)
        };
        let oracle = propagate(&plan).unwrap().p_leave();
        let floquet = leave_probability(&point.params, 15).unwrap();
        assert!((oracle - floquet).abs() < 1e-2, "{}: {oracle} vs {floquet}", point.label);
    }
}

#[test]
fn undriven_case_agrees_up_to_window_beat() {
    let p = SystemParams { omega_cap_rf: 0.0, ..weak_on_resonance() };
    let floquet = leave_probability(&p, 4).unwrap();
    for total in [1000.0, 4000.0] {
        let oracle = propagate(&PropagationPlan::new(p, total)).unwrap().p_leave();
        assert!((oracle - floquet).abs() < 0.1 / total, "{total}: {oracle} vs {floquet}");
    }
}

#[test]
fn phase_average_is_deterministic() {
    let plan = PropagationPlan {
        drive_phases: 3,
        ..PropagationPlan::new(weak_on_resonance(), 500.0)
    };
    assert_eq!(propagate(&plan).unwrap().averages, propagate(&plan).unwrap().averages);
}
