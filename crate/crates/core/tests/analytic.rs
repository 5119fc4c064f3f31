//! Closed-form single-qubit precession: env_dim = 1, a_z·v = ½, so the qubit precesses
//! about z at unit angular frequency and the x-basis statistics are cosines.

use ddmeas::linalg::CMatrix;
use ddmeas::model::{evolution_unitary, scalar_dephasing, ModelSpec, SegmentKind};
use ddmeas::protocol::{
    carr_purcell_2_from_measurements, o_signal, outcome_probabilities, plus_state, w_signal,
    ProtocolSchedule, PulsePattern,
};
use ddmeas::signals::SignalKind;
use num_complex::Complex64;

const TOL: f64 = 1e-10;

fn model(a_1: f64) -> ModelSpec {
    scalar_dephasing(0.5, 1.0, a_1, 0.8).unwrap()
}

fn grid() -> impl Iterator<Item = f64> {
    (1..=100).map(|k| 0.07 * k as f64)
}

#[test]
fn evolution_is_a_z_rotation() {
    let m = model(0.0);
    for t in grid() {
        let u = evolution_unitary(&m, t, SegmentKind::Composite).unwrap();
        let expected = CMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::from_polar(1.0, -t / 2.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::from_polar(1.0, t / 2.0),
            ],
        );
        assert!((u - expected).iter().all(|z| z.norm() < 1e-12));
    }
}

#[test]
fn free_induction_and_echo() {
    for a_1 in [0.0, 0.9] {
        let m = model(a_1);
        let rho = plus_state(&m).unwrap();
        for t in grid() {
            let idle = ProtocolSchedule::composite(vec![t]).unwrap();
            let w = w_signal(&m, &rho, &idle, &PulsePattern::idle(0)).unwrap();
            assert!((w - t.cos()).abs() < TOL);
            let echo = ProtocolSchedule::composite(vec![t, 2.0 * t]).unwrap();
            let w = w_signal(&m, &rho, &echo, &PulsePattern::all_x(1)).unwrap();
            assert!((w - 1.0).abs() < TOL);
        }
    }
}

#[test]
fn off_echo_pulse_dephases_by_the_timing_mismatch() {
    let m = model(0.3);
    let rho = plus_state(&m).unwrap();
    for t2 in grid() {
        let t1 = 0.37 * t2;
        let s = ProtocolSchedule::composite(vec![t1, t2]).unwrap();
        let w = w_signal(&m, &rho, &s, &PulsePattern::all_x(1)).unwrap();
        assert!((w - (t2 - 2.0 * t1).cos()).abs() < TOL);
    }
}

#[test]
fn single_and_two_step_probabilities() {
    let m = model(0.0);
    let rho = plus_state(&m).unwrap();
    for t2 in grid() {
        let t1 = 0.6 * t2;
        let one = ProtocolSchedule::composite(vec![t2]).unwrap();
        let p = outcome_probabilities(&m, &rho, &one).unwrap();
        assert!((p.get(SignalKind::P, &one, "+").unwrap() - (1.0 + t2.cos()) / 2.0).abs() < TOL);

        let two = ProtocolSchedule::composite(vec![t1, t2]).unwrap();
        let p = outcome_probabilities(&m, &rho, &two).unwrap();
        for (m1, s1) in [(1.0, "+"), (-1.0, "-")] {
            for (m2, s2) in [(1.0, "+"), (-1.0, "-")] {
                let expected = (1.0 + m1 * t1.cos()) / 2.0 * (1.0 + m1 * m2 * (t2 - t1).cos()) / 2.0;
                let got = p.get(SignalKind::P, &two, &format!("{s1},{s2}")).unwrap();
                assert!((got - expected).abs() < TOL);
            }
        }
    }
}

#[test]
fn two_measurement_signal_closed_form() {
    let m = model(0.4);
    let rho = plus_state(&m).unwrap();
    for t2 in grid() {
        for frac in [0.1, 0.5, 0.9] {
            let t1 = frac * t2;
            let s = ProtocolSchedule::composite(vec![t1, t2]).unwrap();
            let expected = 0.5 * (t2.cos() + (t2 - 2.0 * t1).cos());
            assert!((o_signal(&m, &rho, &s).unwrap() - expected).abs() < TOL);
        }
    }
}

#[test]
fn carr_purcell_refocuses_and_matches_measurements() {
    let m = model(0.2);
    let rho = plus_state(&m).unwrap();
    for tau in grid() {
        let s = ProtocolSchedule::composite(vec![tau, 3.0 * tau, 4.0 * tau]).unwrap();
        let w = w_signal(&m, &rho, &s, &PulsePattern::all_x(2)).unwrap();
        assert!((w - 1.0).abs() < TOL);
        let check = carr_purcell_2_from_measurements(&m, &rho, tau, [SegmentKind::Composite; 3]).unwrap();
        assert!(check.passed, "{check:?}");
        assert!((check.lhs - 1.0).abs() < TOL);
    }
}
