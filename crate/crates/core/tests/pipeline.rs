use approx::assert_relative_eq;
use nalgebra::Matrix4;

use netwave::harness::{
    draw_powers, from_json, mismatched_campaign, p3_reference, run_campaign,
    run_campaign_with_powers, run_monte_carlo, trial_rng, FrameRecord, Scenario,
};
use netwave::signal::{build_code_matrices, measurement_covariance};
use netwave::tracking::{geometry, information_increment, jacobian_h, pcrlb_trace, TargetState};

fn baseline() -> Scenario {
    Scenario::builtin("four_node").unwrap().unwrap()
}

fn short(frames: usize) -> Scenario {
    let mut s = baseline();
    s.frames = frames;
    s
}

/// Frame-1 records of the built-in scenario, frozen from a verified run.
/// Reference rows are deterministic closed forms; designed rows carry solver
/// tolerance.
#[test]
fn frame_one_golden() {
    let golden: Vec<FrameRecord> = from_json(include_str!("golden/frame1.json")).unwrap();
    assert_eq!(golden.len(), 2);
    let s = short(1);
    for want in &golden {
        let got = &run_campaign(&s, want.zeta).unwrap()[0];
        let tol = if want.zeta == 0.0 { 1e-9 } else { 1e-6 };
        assert_eq!(got.frame, want.frame);
        assert_eq!(got.accepted, want.accepted);
        let pairs = [
            (got.pcrlb_trace, want.pcrlb_trace),
            (got.crlb_x, want.crlb_x),
            (got.crlb_y, want.crlb_y),
            (got.crlb_vx, want.crlb_vx),
            (got.crlb_vy, want.crlb_vy),
        ];
        for (g, w) in pairs
            .into_iter()
            .chain(got.pd.iter().copied().zip(want.pd.iter().copied()))
        {
            assert_relative_eq!(g, w, max_relative = tol);
        }
    }
}

/// The reference campaign rebuilt by hand from the complex-domain CRLBs.
#[test]
fn reference_frame_matches_complex_path() {
    let s = short(1);
    let code = p3_reference(s.pulses()).unwrap();
    let x1 = TargetState::new(
        [
            s.initial_state.x + s.interval * s.initial_state.vx,
            s.initial_state.y + s.interval * s.initial_state.vy,
        ],
        [s.initial_state.vx, s.initial_state.vy],
    );
    let mut j = Matrix4::identity() * s.initial_information;
    // The prior F⁻ᵀ(εI)F⁻¹ is negligible next to the measurements but kept exact.
    let mut fi = Matrix4::identity();
    fi[(0, 1)] = -s.interval;
    fi[(2, 3)] = -s.interval;
    j = fi.transpose() * j * fi;
    for node in &s.nodes {
        let g = geometry(&x1, node.position).unwrap();
        let cm = build_code_matrices(node, g.doppler(node.wavelength), g.angle).unwrap();
        let r = measurement_covariance(&code, &cm, node.wavelength).unwrap();
        j += information_increment(
            &jacobian_h(&x1, node.position).unwrap(),
            &r.map(|v| 1.0 / v),
        );
    }
    let expected = pcrlb_trace(&((j + j.transpose()) * 0.5)).unwrap();
    let got = run_campaign(&s, 0.0).unwrap()[0].pcrlb_trace;
    assert_relative_eq!(got, expected, max_relative = 1e-9);
}

#[test]
fn reference_trace_decreases_over_frames() {
    let recs = run_campaign(&short(8), 0.0).unwrap();
    assert_eq!(recs.len(), 8);
    assert!(recs.windows(2).all(|w| w[1].pcrlb_trace < w[0].pcrlb_trace));
    assert!(recs.iter().all(|r| r.crlb_x > r.crlb_y));
}

#[test]
fn one_trial_monte_carlo_is_a_campaign_on_the_drawn_powers() {
    let mut s = short(3);
    let mc = s.monte_carlo.as_mut().unwrap();
    mc.trials = 1;
    let mean = mc.power_mean;
    let agg = run_monte_carlo(&s, &[0.0, 0.1]).unwrap();
    assert_eq!(agg.len(), 2 * s.frames);

    let powers = draw_powers(&mut trial_rng(s.seed, 0), s.nodes.len(), mean).unwrap();
    for (zi, z) in [0.0, 0.1].into_iter().enumerate() {
        let c = run_campaign_with_powers(&s, z, &powers).unwrap();
        for (a, r) in agg[zi * s.frames..(zi + 1) * s.frames]
            .iter()
            .zip(&c.records)
        {
            assert_eq!(a.frame, r.frame);
            assert_eq!(a.pcrlb_trace, r.pcrlb_trace);
            assert_eq!(a.pd, r.pd);
            assert_eq!(a.trials, 1);
        }
    }
}

#[test]
fn monte_carlo_is_thread_count_independent() {
    let mut s = short(2);
    s.monte_carlo.as_mut().unwrap().trials = 4;
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let three = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap();
    let a = one.install(|| run_monte_carlo(&s, &[0.05]).unwrap());
    let b = three.install(|| run_monte_carlo(&s, &[0.05]).unwrap());
    assert_eq!(a, b);
}

#[test]
fn error_free_prediction_reproduces_the_designed_campaign() {
    let s = short(4);
    let designed = run_campaign(&s, 0.15).unwrap();
    let mismatched = mismatched_campaign(&s, 0.15, &mut trial_rng(1, 0), 0.0, 0.0).unwrap();
    for (d, m) in designed.iter().zip(&mismatched) {
        assert_relative_eq!(d.pcrlb_trace, *m, max_relative = 1e-12);
    }
}

#[test]
fn designed_dominates_reference_on_short_run() {
    let s = short(5);
    let reference = run_campaign(&s, 0.0).unwrap();
    for z in [0.01, 0.15] {
        let designed = run_campaign(&s, z).unwrap();
        for (d, r) in designed.iter().zip(&reference) {
            assert!(d.pcrlb_trace <= r.pcrlb_trace, "zeta {z} frame {}", d.frame);
            for (p, b) in d.pd.iter().zip(&d.pd_bench) {
                assert!(*p >= s.pfa && *p <= b + 1e-6);
            }
        }
    }
}

#[test]
fn zeta_outside_range_is_rejected() {
    let s = short(1);
    assert!(run_campaign(&s, -0.1).is_err());
    assert!(run_campaign(&s, 2.5).is_err());
}
