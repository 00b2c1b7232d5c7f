use std::f64::consts::PI;
use std::sync::OnceLock;

use tactoidlab::potentials::wall_cost;
use tactoidlab::sharp::{config_residuals, junction_residual};
use tactoidlab::tactoid::*;
use tactoidlab::{Error, PotentialSpec, TactoidSolution};

fn csh() -> PotentialSpec {
    PotentialSpec::csh()
}

fn unit() -> &'static TactoidSolution {
    static SOL: OnceLock<TactoidSolution> = OnceLock::new();
    SOL.get_or_init(|| solve_tactoid(1.0, &csh()).unwrap())
}

fn double() -> &'static TactoidSolution {
    static SOL: OnceLock<TactoidSolution> = OnceLock::new();
    SOL.get_or_init(|| solve_tactoid(2.0, &csh()).unwrap())
}

fn fd_angle(a: [f64; 2], b: [f64; 2]) -> f64 {
    (b[1] - a[1]).atan2(b[0] - a[0])
}

#[test]
fn density_endpoints() {
    let s = csh();
    assert!((f_theta(0.0, &s).unwrap() - 0.75).abs() < 1e-8);
    assert!((f_theta(PI, &s).unwrap() - 0.25).abs() < 1e-8);
    let k0 = wall_cost(0.0, &s).unwrap();
    assert!((f_theta(PI, &s).unwrap() - 0.5 * k0).abs() < 1e-12);
    assert!((f_theta(PI - 1e-4, &s).unwrap() - f_theta(PI, &s).unwrap()).abs() <= 1e-3);
    assert!(matches!(f_theta(-0.1, &s), Err(Error::Range { .. })));
    assert!(f_theta(PI + 1e-9, &s).is_err());
}

#[test]
fn density_is_continuous_and_positive() {
    let s = csh();
    let vals: Vec<f64> = (0..=1000).map(|i| f_theta(PI * i as f64 / 1000.0, &s).unwrap()).collect();
    assert!(vals.iter().all(|v| *v > 0.0 && v.is_finite()));
    assert!(vals.windows(2).all(|w| (w[1] - w[0]).abs() < 0.01));
}

#[test]
fn junction_angle_is_a_root() {
    let s = csh();
    let th = junction_angle(&s).unwrap();
    assert!(th > 0.0 && th < PI);
    assert!(junction_function(th, &s).abs() <= 1e-8);
}

#[test]
fn junction_function_at_right_angle() {
    let s = csh();
    let g = junction_function(PI / 2.0, &s);
    assert!((g - f_prime(PI / 2.0, &s)).abs() < 1e-15);
}

#[test]
fn junction_function_changes_sign_once() {
    let scan = junction_scan(&csh(), 10_000);
    assert_eq!(scan.len(), 10_000);
    assert!((scan[0].0 - 0.01).abs() < 1e-15 && (scan[9_999].0 - (PI - 0.01)).abs() < 1e-12);
    let changes = scan.windows(2).filter(|w| w[0].1 * w[1].1 < 0.0).count();
    assert_eq!(changes, 1);
}

#[test]
fn profile_is_monotone_from_junction_to_axis() {
    let p = &unit().profile;
    assert_eq!(p.theta.len(), PROFILE_SAMPLES);
    assert_eq!(p.theta[0], p.theta_star);
    assert!((p.theta[p.theta.len() - 1] - PI).abs() < 1e-12);
    assert!(p.theta.windows(2).all(|w| w[1] > w[0]));
    assert!(p.length.is_finite() && p.length > 0.0);
    assert!((p.s[p.s.len() - 1] - p.length).abs() < 1e-12);
}

#[test]
fn length_scales_inversely_with_lambda() {
    let (a, b) = (&unit().profile, &double().profile);
    assert!((b.length - a.length / 2.0).abs() < 1e-8, "{} vs {}", b.length, a.length);
}

#[test]
fn profile_satisfies_the_interface_ode() {
    let s = csh();
    let p = &unit().profile;
    let n = p.theta.len();
    let ds = p.length / (n - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let th = p.theta[i];
        let d = (p.theta[i + 1] - p.theta[i - 1]) / (2.0 * ds);
        let r = (f_second(th, &s) + f_theta(th, &s).unwrap()) * d + p.lambda_eff;
        worst = worst.max(r.abs());
    }
    assert!(worst <= 1e-6, "max residual {worst}");
    assert_eq!(p.lambda_eff.abs(), 1.0);
}

#[test]
fn negative_multiplier_gives_the_same_island() {
    let s = csh();
    let neg = solve_profile(-1.0, &s).unwrap();
    assert_eq!(neg.lambda, -1.0);
    assert_eq!(neg.lambda_eff, unit().profile.lambda_eff);
    assert_eq!(neg.length, unit().profile.length);
    assert!(solve_profile(0.0, &s).is_err());
}

#[test]
fn characteristic_lengths_start_at_zero_and_grow() {
    let sol = unit();
    assert_eq!(sol.t[0], 0.0);
    assert!(sol.t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(sol.t.len(), sol.wall.len());
}

#[test]
fn wall_angle_is_half_the_interface_angle() {
    let sol = unit();
    for (psi, th) in sol.psi.iter().zip(&sol.profile.theta) {
        assert!((psi - th / 2.0).abs() <= 1e-10);
    }
    let w = &sol.wall.vertices;
    let mut worst: f64 = 0.0;
    for i in 1..w.len() - 1 {
        let fd = fd_angle(w[i - 1], w[i + 1]);
        worst = worst.max((fd - sol.psi[i]).abs());
    }
    assert!(worst <= 1e-4, "max wall angle error {worst}");
}

#[test]
fn interface_meets_the_axis_vertically() {
    let sol = unit();
    let v = &sol.interface.vertices;
    let n = v.len();
    assert!(v[n - 1][0].abs() < 1e-12);
    assert!(v[0][1].abs() < 1e-15);
    let end = fd_angle(v[n - 2], v[n - 1]);
    assert!((end - PI).abs() < 1e-4, "end tangent {end}");
    assert_eq!(sol.junction_point(), v[0]);
}

#[test]
fn wall_speed_identity() {
    // |r~'| = (1 + theta' t) / cos(theta / 2); the speed blows up at the axis
    let sol = unit();
    let p = &sol.profile;
    let w = &sol.wall.vertices;
    let ds = p.length / (p.theta.len() - 1) as f64;
    let mut worst: f64 = 0.0;
    for i in (1..w.len() - 1).filter(|&i| p.theta[i] < PI - 0.1) {
        let fd = (w[i + 1][0] - w[i - 1][0]).hypot(w[i + 1][1] - w[i - 1][1]) / (2.0 * ds);
        let exact = (1.0 + p.dtheta[i] * sol.t[i]) / (0.5 * p.theta[i]).cos();
        worst = worst.max((fd - exact).abs() / exact);
    }
    assert!(worst <= 1e-4, "max relative error {worst}");
}

#[test]
fn traces_match_across_the_wall() {
    let sol = unit();
    for (i, th) in sol.profile.theta[..sol.wall.len()].iter().enumerate() {
        let nu = sol.wall.normal(i);
        let left = [-th.cos(), -th.sin()];
        let a = left[0] * nu[0] + left[1] * nu[1];
        let b = nu[0];
        assert!((a.abs() - b.abs()).abs() <= 1e-6);
    }
}

#[test]
fn characteristics_do_not_cross() {
    assert!(fan_min_separation(unit(), 256) > 0.0);
}

#[test]
fn island_is_symmetric_and_closed() {
    let sol = unit();
    let c = &sol.island;
    assert!(c.closed);
    assert!(sol.area > 0.0);
    for p in &c.vertices {
        for q in [[-p[0], p[1]], [p[0], -p[1]]] {
            assert!(c.distance_to(q) < 1e-12);
        }
    }
}

#[test]
fn reduced_energy_matches_the_sharp_energy() {
    let e = tactoid_energy(unit(), &csh()).unwrap();
    assert!(e.relative_gap() <= 5e-3, "{e:?}");
    assert!(e.sharp.bulk == 0.0 && e.sharp.perimeter > 0.0 && e.sharp.wall > 0.0);
}

#[test]
fn energy_scales_with_dilation() {
    let s = csh();
    let a = tactoid_energy(unit(), &s).unwrap();
    let b = tactoid_energy(double(), &s).unwrap();
    assert!((b.reduced - a.reduced / 2.0).abs() < 1e-8 * a.reduced);
    assert!((b.sharp.total - a.sharp.total / 2.0).abs() < 1e-6 * a.sharp.total);
}

#[test]
fn area_quarters_when_lambda_doubles() {
    let (a, b) = (unit().area, double().area);
    assert!((b - a / 4.0).abs() <= 1e-6 * a / 4.0, "{a} {b}");
}

#[test]
fn area_is_monotone_in_inverse_lambda() {
    let half = solve_tactoid(0.5, &csh()).unwrap();
    assert!(half.area > unit().area && unit().area > double().area);
}

#[test]
fn calibration_round_trip() {
    let target = unit().area;
    let sol = calibrate_lambda(target, &csh()).unwrap();
    assert!((sol.area - target).abs() <= 1e-6 * target);
    assert!((sol.lambda() - 1.0).abs() < 1e-5);
    let quarter = calibrate_lambda(target / 4.0, &csh()).unwrap();
    assert!((quarter.lambda() - 2.0).abs() < 1e-4);
    assert!(calibrate_lambda(-1.0, &csh()).is_err());
}

#[test]
fn junction_data_is_well_formed() {
    let sol = unit();
    let j = junction_data(sol);
    assert!(j.validate().is_ok());
    assert_eq!(j.point, sol.junction_point());
    // the wall leaves the junction at half the interface angle
    let th = sol.profile.theta_star;
    assert!((j.tau12[1].atan2(j.tau12[0]) - th / 2.0).abs() < 1e-15);
}

#[test]
fn junction_balance_has_no_divergence_terms_to_absorb_the_interface_pull() {
    // with zero divergences only the line tensions remain; they balance only
    // when K(0) cos theta* + 2 K(sin(theta*/2)) cos(theta*/2) vanishes
    let s = csh();
    let sol = unit();
    let th = sol.profile.theta_star;
    let j = junction_data(sol);
    let r = junction_residual(&j, &s).unwrap();
    let k0 = wall_cost(0.0, &s).unwrap();
    let kz = wall_cost((th / 2.0).sin(), &s).unwrap();
    let expected = k0 * th.cos() + 2.0 * kz * (th / 2.0).cos();
    assert!((r[0] - expected).abs() < 1e-10, "{r:?} vs {expected}");
    assert!(r[1].abs() < 1e-12);
}

#[test]
fn rotated_wall_breaks_the_junction() {
    let s = csh();
    let j = junction_data(unit());
    let base = junction_residual(&j, &s).unwrap();
    let mut rot = j.clone();
    let a = rot.tau12[1].atan2(rot.tau12[0]) + 0.1;
    rot.tau12 = [a.cos(), a.sin()];
    rot.nu12 = [a.sin(), -a.cos()];
    let r = junction_residual(&rot, &s).unwrap();
    assert!(r[0].hypot(r[1]) > 1e-3);
    assert!((r[0] - base[0]).hypot(r[1] - base[1]) > 1e-3);
}

#[test]
fn config_passes_the_jump_conditions() {
    let s = csh();
    let cfg = tactoid_config(unit());
    assert_eq!(cfg.interfaces.len(), 4);
    assert_eq!(cfg.walls.len(), 4);
    assert_eq!(cfg.junctions.len(), 1);
    let rep = config_residuals(&cfg, f64::INFINITY, 1.0, &s).unwrap();
    assert!(rep.interface.is_none() && rep.wall_jump.is_none());
    assert!(rep.junction.is_some());
    for w in &cfg.walls {
        let c = w.curve().unwrap();
        assert!(c.max_chord_angle_error() < 1e-3);
    }
}
