use critpass::actions;
use critpass::experiments;
use critpass::model::{ModelParams, PhaseState, TwoTimePoint};
use critpass::pathintegrate::{self, PathSpec, SegmentSettings};

fn params() -> ModelParams {
    ModelParams::new(1.0, vec![-0.5, 0.5]).unwrap()
}

fn start(t0: f64, i: f64) -> PhaseState {
    actions::init_from_action_angle(&params(), t0, &[i, i], &[0.7, 2.9]).unwrap()
}

#[test]
fn detour_matches_physical_route() {
    let s = start(-100.0, 1e-2);
    let cmp = experiments::compare_paths(&params(), &s, 100.0, 3.0, 1e-10).unwrap();
    assert!(cmp.relative_discrepancy < 1e-4, "{}", cmp.relative_discrepancy);
}

#[test]
fn zero_height_detour_is_at_noise_floor() {
    let s = start(-100.0, 1e-2);
    let set = SegmentSettings::rk_adaptive(1e-11);
    let a = pathintegrate::evolve_to_end(&params(), &s, &PathSpec::physical(-100.0, 100.0, 1.0, set).unwrap()).unwrap();
    let b = pathintegrate::evolve_to_end(&params(), &s, &PathSpec::physical(-100.0, 100.0, 1.0, set).unwrap()).unwrap();
    assert_eq!(a, b);
    // Same route split into three collinear legs.
    let pts = [(-100.0, 1.0), (-30.0, 1.0), (40.0, 1.0), (100.0, 1.0)]
        .map(|(t, e)| TwoTimePoint::new(t, e).unwrap())
        .to_vec();
    let split = PathSpec::new(pts, vec![set; 3]).unwrap();
    let c = pathintegrate::evolve_to_end(&params(), &s, &split).unwrap();
    assert!(c.rel_distance(&a) < 1e-7, "{}", c.rel_distance(&a));
}

#[test]
fn vertical_legs_far_from_the_transition_conserve_invariants() {
    let p = params();
    let before = start(-1e4, 1e-2);
    let leg = experiments::vertical_leg_drift(&p, &before, 3.0, 2.0, 1e-11).unwrap();
    assert!(leg.max_relative_drift < 1e-3, "{leg:?}");

    // After the transition: condensate on the positive branch, small
    // oscillations in both wells.
    let t = 1e4;
    let xc = ((t - 2.0 * p.e()[0]) / 2.0).sqrt();
    let w = (2.0 * (t - 2.0 * p.e()[0])).sqrt();
    let a = 0.05;
    let after = PhaseState::new(vec![xc + a, 0.3], vec![0.0, 0.2], t, 3.0).unwrap();
    let leg = experiments::vertical_leg_drift(&p, &after, 1.0, 20.0, 1e-11).unwrap();
    assert!(leg.max_relative_drift < 1e-3, "{leg:?} (omega {w})");
}

#[test]
fn go_and_return_restores_the_state() {
    let s = start(-50.0, 1e-2);
    let set = SegmentSettings::rk_adaptive(1e-12);
    let path = PathSpec::detour(-50.0, 50.0, 1.0, 2.0, set, set).unwrap();
    let end = pathintegrate::evolve_to_end(&params(), &s, &path).unwrap();
    let back = pathintegrate::evolve_to_end(&params(), &end, &path.reversed()).unwrap();
    assert!(back.rel_distance(&s) < 1e-7, "{}", back.rel_distance(&s));

    // The triple jump is time-symmetric: reversal is exact up to roundoff,
    // whatever the step.
    for h in [0.02, 0.005] {
        let path = PathSpec::physical(-50.0, 50.0, 1.0, SegmentSettings::splitting4(h)).unwrap();
        let end = pathintegrate::evolve_to_end(&params(), &s, &path).unwrap();
        let back = pathintegrate::evolve_to_end(&params(), &end, &path.reversed()).unwrap();
        eprintln!("h {h}: {:e}", back.rel_distance(&s));
        assert!(back.rel_distance(&s) < 1e-8, "h = {h}: {}", back.rel_distance(&s));
    }
}

/// Jacobian of the flow map by central differences.
fn jacobian(settings: SegmentSettings, s: &PhaseState, a: TwoTimePoint, b: TwoTimePoint) -> Vec<Vec<f64>> {
    let n = s.n_dof();
    let flat = |z: &PhaseState| z.x.iter().chain(&z.p).copied().collect::<Vec<f64>>();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for k in 0..2 * n {
        let h = 1e-6;
        let (mut u, mut d) = (s.clone(), s.clone());
        if k < n {
            u.x[k] += h;
            d.x[k] -= h;
        } else {
            u.p[k - n] += h;
            d.p[k - n] -= h;
        }
        let fu = flat(&pathintegrate::evolve_segment(&params(), &u, a, b, settings).unwrap());
        let fd = flat(&pathintegrate::evolve_segment(&params(), &d, a, b, settings).unwrap());
        cols.push(fu.iter().zip(&fd).map(|(x, y)| (x - y) / (2.0 * h)).collect());
    }
    // Row-major M[i][j] = ∂out_i/∂in_j.
    (0..2 * n).map(|i| (0..2 * n).map(|j| cols[j][i]).collect()).collect()
}

fn symplectic_defect(m: &[Vec<f64>]) -> f64 {
    let d = m.len();
    let n = d / 2;
    let omega = |i: usize, j: usize| -> f64 {
        if i < n && j == i + n {
            1.0
        } else if i >= n && j + n == i {
            -1.0
        } else {
            0.0
        }
    };
    let mut worst = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            let mut v = 0.0;
            for a in 0..d {
                for b in 0..d {
                    v += m[a][i] * omega(a, b) * m[b][j];
                }
            }
            worst = worst.max((v - omega(i, j)).abs());
        }
    }
    worst
}

#[test]
fn flow_maps_are_symplectic() {
    let s = PhaseState::new(vec![0.4, -0.3], vec![0.2, 0.5], -3.0, 1.0).unwrap();
    let a = TwoTimePoint::new(-3.0, 1.0).unwrap();
    for b in [TwoTimePoint::new(2.0, 1.0).unwrap(), TwoTimePoint::new(-3.0, 2.5).unwrap()] {
        let mut schemes = vec![SegmentSettings::implicit_midpoint(0.01), SegmentSettings::rk_adaptive(1e-12)];
        // Splitting needs constant ε.
        if b.eps == a.eps {
            schemes.push(SegmentSettings::splitting4(0.01));
        }
        for set in schemes {
            let defect = symplectic_defect(&jacobian(set, &s, a, b));
            assert!(defect < 1e-6, "{:?} to {b:?}: {defect:e}", set.scheme);
        }
    }
}

#[test]
fn schemes_agree_on_a_diagonal_segment() {
    let s = start(-20.0, 1e-2);
    let a = TwoTimePoint::new(-20.0, 1.0).unwrap();
    let b = TwoTimePoint::new(20.0, 2.0).unwrap();
    let reference = pathintegrate::evolve_segment(&params(), &s, a, b, SegmentSettings::rk_adaptive(1e-12)).unwrap();
    let mp = pathintegrate::evolve_segment(&params(), &s, a, b, SegmentSettings::implicit_midpoint(0.0005)).unwrap();
    assert!(mp.rel_distance(&reference) < 1e-3, "{}", mp.rel_distance(&reference));
}
