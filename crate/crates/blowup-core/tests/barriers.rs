use blowup_core::barriers::*;
use blowup_core::integrator::IntegrationControls;
use blowup_core::orbits::{run_orbit, FateOptions, Source, DEFAULT_DELTA};
use blowup_core::parameters::{p2_coordinates, Params};
use blowup_core::Error;

fn p(m: f64, s: f64) -> Params {
    Params::new(m, s).unwrap()
}

fn grid() -> Vec<Params> {
    let mut out = Vec::new();
    for m in [1.2, 1.5, 1.8] {
        for s in [2.5, 3.0, 4.0] {
            out.push(p(m, s));
        }
    }
    out
}

fn spec<'a>(cat: &'a [BarrierSpec], id: &str) -> &'a BarrierSpec {
    cat.iter().find(|b| b.id == id).unwrap()
}

#[test]
fn catalog_coefficients() {
    let pr = p(1.5, 3.0);
    let k = small_sigma_constants(&pr);
    assert!((k.c - 0.01).abs() < 1e-15 && (k.d - 0.005).abs() < 1e-15);
    assert!((k.y_star + 0.5 / 57.0).abs() < 1e-15);
    assert!((k.x_star - 1.0 / 900.0).abs() < 1e-15);
    assert!((large_sigma_constants(&pr).x_star - 0.16).abs() < 1e-15);
    let ids = barrier_ids(&pr);
    for id in ["midplane", "cylinder", "plane_x_eq_z", "plane1", "plane2", "d4_wall_x", "d4_wall_y", "plane3", "surface_t", "plane_y_kz", "plane4", "s_line", "s_curve"] {
        assert!(ids.contains(&id), "{id}");
    }
}

#[test]
fn reference_signs() {
    let pr = p(1.5, 3.0);
    let cat = barrier_catalog(&pr);
    let cyl = spec(&cat, "cylinder");
    let y: f64 = -0.05;
    let pt = [0.01, y, -y * y - 0.2 * y];
    assert!(((cyl.sign)(&pt) + 0.01 * 0.1125).abs() < 1e-15);
    assert!((cyl.flux(&pt) - (cyl.sign)(&pt)).abs() < 1e-15);
    // the vertex sits on the midplane with F = 0
    let mid = spec(&cat, "midplane");
    assert!((mid.sign)(&[0.0, -0.1, 0.01]).abs() < 1e-16);
}

#[test]
fn grid_barriers_pass() {
    for pr in grid() {
        let out = verify_all(&pr, &[], 10_000, DEFAULT_SEED).unwrap();
        for o in &out {
            assert!(o.passed(), "{pr:?} {o:?}");
            if let BarrierOutcome::Verified(r) = o {
                assert!(r.violations.is_empty());
                assert!(r.identity_error <= IDENTITY_TOL, "{} {}", r.barrier, r.identity_error);
                assert_eq!(r.samples_tested, 10_000, "{}", r.barrier);
            }
        }
        // the plane through P2 has an empty validity strip on this grid
        assert!(out.iter().any(|o| matches!(o, BarrierOutcome::NotApplicable { barrier, .. } if barrier == "plane3")));
    }
}

#[test]
fn cylinder_margin_strictly_negative() {
    for pr in grid() {
        let r = verify_barrier(spec(&barrier_catalog(&pr), "cylinder"), 1000, 7).unwrap();
        assert!(r.passed && r.worst_margin < 0.0, "{r:?}");
    }
}

#[test]
fn plane3_applies_for_large_sigma() {
    let pr = p(1.5, 20.0);
    assert!(large_sigma_hypotheses(&pr).iter().all(|h| h.holds));
    let cat = barrier_catalog(&pr);
    let b = spec(&cat, "plane3");
    assert!(b.witness.is_some());
    let r = verify_barrier(b, 2000, DEFAULT_SEED).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(plane3_normal_dot_e3(&pr) > 0.0);
}

#[test]
fn empty_region_is_a_config_error() {
    let pr = p(1.5, 3.0);
    let cat = barrier_catalog(&pr);
    assert!(matches!(verify_barrier(spec(&cat, "plane3"), 200, 1), Err(Error::Config(_))));
    assert!(matches!(verify_barrier(spec(&cat, "cylinder"), 99, 1), Err(Error::Config(_))));
}

#[test]
fn unknown_id_lists_catalog() {
    match verify_all(&p(1.5, 3.0), &["nope"], 100, 1) {
        Err(Error::Config(msg)) => assert!(msg.contains("cylinder") && msg.contains("nope")),
        other => panic!("{other:?}"),
    }
}

#[test]
fn seeded_reports_are_reproducible() {
    let pr = p(1.2, 2.5);
    let a = verify_all(&pr, &["plane1", "surface_t"], 500, 9).unwrap();
    let b = verify_all(&pr, &["plane1", "surface_t"], 500, 9).unwrap();
    assert_eq!(a, b);
    let c = verify_all(&pr, &["plane1"], 500, 10).unwrap();
    assert_ne!(a[0], c[0]);
}

#[test]
fn region_examples() {
    let pr = p(1.5, 3.0);
    let p2 = p2_coordinates(&pr);
    let pt = [p2.x, p2.y, p2.z];
    assert!(!region_membership(Region::D1, &pt, &pr));
    assert!(region_membership(Region::D4, &pt, &pr));
    assert!(region_membership(Region::D1, &[0.0; 3], &pr));
    // (w, y) = (1, 1): above the line y = w/25, on the inner side of the curve
    assert!(region_membership(Region::S, &[1.0, 1.0, 0.0], &pr));
    assert!(!region_membership(Region::S, &[1.0, 0.01, 0.0], &pr));
    assert!(region_membership(Region::D0, &[0.1, -0.2, 0.5], &pr));
    assert!(!region_membership(Region::D0, &[0.1, 0.2, 0.0], &pr));
}

#[test]
fn small_sigma_gate() {
    let pr = p(1.5, 3.0);
    let h = small_sigma_hypotheses(&pr);
    assert!(!h[0].holds, "X(P2) = 0.01 is not below X* = 1/900");
    let grid: Vec<f64> = (1..=100).map(|i| 2.0 + 1e-4 * i as f64).collect();
    let s0 = empirical_sigma0(1.5, &grid).unwrap().unwrap();
    assert!(s0 > 2.0 && s0 < 2.01, "{s0}");
    assert!(small_sigma_hypotheses(&p(1.5, s0)).iter().all(|h| h.holds));
}

#[test]
fn large_sigma_gate() {
    let grid = [4.0, 6.0, 10.0, 15.0, 20.0];
    let s1 = empirical_sigma1(1.5, &grid, &IntegrationControls::default(), &FateOptions::default()).unwrap();
    let s1 = s1.expect("some sigma satisfies the large-sigma hypotheses");
    assert!(s1 >= 10.0, "{s1}");
}

#[test]
fn escaping_orbit_stays_below_midplane() {
    let pr = p(1.5, 3.4);
    let run = run_orbit(&pr, Source::P2 { delta: DEFAULT_DELTA }, &IntegrationControls::default(), &FateOptions::default()).unwrap();
    let hb = -pr.vertex_lambda();
    let first = run.trajectory.samples.iter().position(|s| s.point.y < -hb).unwrap();
    assert!(run.trajectory.samples[first..].iter().all(|s| s.point.y < -hb + 1e-12));
    assert!(monotone_in_lower_half(&run.trajectory));
}

#[test]
fn entering_orbit_monotone_in_lower_half() {
    let pr = p(1.5, 3.0);
    let run = run_orbit(&pr, Source::P2 { delta: DEFAULT_DELTA }, &IntegrationControls::default(), &FateOptions::default()).unwrap();
    assert!(run.trajectory.samples.iter().any(|s| s.point.y < 0.0));
    assert!(monotone_in_lower_half(&run.trajectory));
}
