use proptest::prelude::*;
use tactoidlab::potentials::*;
use tactoidlab::Error;

fn csh() -> PotentialSpec {
    PotentialSpec::csh()
}

fn csh_v(t: f64) -> f64 {
    t * t * (t * t - 1.0).powi(2)
}

#[test]
fn csh_value_at_inverse_sqrt_two() {
    let t = 0.5f64.sqrt();
    assert!((eval_v(t, &csh()).unwrap() - 0.125).abs() < 1e-15);
}

#[test]
fn gradient_vanishes_at_critical_radii() {
    let s = csh();
    for u in [[0.0, 0.0], [1.0, 0.0], [0.0, -1.0], [1.0 / 3f64.sqrt(), 0.0]] {
        let g = eval_w_grad(u, &s);
        assert!(g[0].abs() < 1e-15 && g[1].abs() < 1e-15, "{u:?} -> {g:?}");
    }
}

#[test]
fn c0_is_a_quarter_and_half_of_k0() {
    let s = csh();
    let c0 = modica_mortola_constant(&s).unwrap();
    assert!((c0 - 0.25).abs() < 1e-12);
    let k0 = wall_cost(0.0, &s).unwrap();
    assert!((k0 - 0.5).abs() < 1e-10);
    assert!((k0 - 2.0 * c0).abs() < 1e-8);
}

#[test]
fn tabulated_copy_reproduces_c0() {
    let table = TabulatedPotential::from_fn(csh_v, 1.5, 4096).unwrap();
    let s = PotentialSpec::tabulated(table);
    assert!((modica_mortola_constant(&s).unwrap() - 0.25).abs() < 1e-6);
    assert!(matches!(eval_v(1.6, &s), Err(Error::Range { .. })));
}

#[test]
fn scaled_potential_scales_wall_cost() {
    let s = csh().with_scale(4.0).unwrap();
    for z in [0.0, 0.3, 0.8] {
        let a = wall_cost(z, &s).unwrap();
        let b = 2.0 * wall_cost(z, &csh()).unwrap();
        assert!((a - b).abs() < 1e-10 * b.max(1e-3));
    }
}

#[test]
fn wall_cost_vanishes_at_one_and_rejects_outside() {
    assert!(wall_cost(1.0, &csh()).unwrap().abs() < 1e-10);
    assert!(wall_cost(-0.1, &csh()).is_err());
    assert!(wall_cost(1.0 + 1e-9, &csh()).is_err());
}

#[test]
fn wall_cost_matches_direct_integral() {
    // K(z) = integral over |y| < b of sqrt(V(sqrt(z^2 + y^2))), by composite Simpson
    let s = csh();
    for z in [0.1, 0.45, 0.9] {
        let b = (1.0f64 - z * z).sqrt();
        let n = 20_000;
        let h = 2.0 * b / n as f64;
        let f = |y: f64| csh_v((z * z + y * y).sqrt()).sqrt();
        let mut acc = f(-b) + f(b);
        for i in 1..n {
            acc += f(-b + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let direct = acc * h / 3.0;
        let k = wall_cost(z, &s).unwrap();
        assert!((k - direct).abs() < 1e-9, "z={z}: {k} vs {direct}");
    }
}

#[test]
fn k_has_one_interior_maximum() {
    let s = csh();
    let table = WallCostTable::build(&s, 10_001).unwrap();
    let k = &table.k_values;
    let peaks: Vec<usize> = (1..k.len() - 1).filter(|&i| k[i] > k[i - 1] && k[i] >= k[i + 1]).collect();
    assert_eq!(peaks.len(), 1);
    let z_peak = table.z_samples[peaks[0]];
    assert!((z_peak - table.z_star).abs() < 2e-4);
    assert!(table.z_star > 0.0 && table.z_star < 1.0);
}

#[test]
fn derivative_vanishes_at_ends_and_peak() {
    let s = csh();
    let z_star = wall_cost_argmax(&s).unwrap();
    for z in [0.0, 1.0, z_star] {
        assert!(wall_cost_derivative(z, &s).unwrap().abs() < 1e-6, "z={z}");
    }
    // K is even but only C^1 at 0: the one-sided slope decays like h |ln h|
    for h in [1e-4, 1e-5, 1e-6] {
        let fd0 = (wall_cost(h, &s).unwrap() - wall_cost(0.0, &s).unwrap()) / h;
        assert!(fd0.abs() < 1.5 * h * h.ln().abs(), "h={h}: {fd0}");
    }
    // near 1, K ~ (1 - z^2)^(3/2): the one-sided slope decays like sqrt(h)
    let fd1 = |h: f64| (wall_cost(1.0, &s).unwrap() - wall_cost(1.0 - h, &s).unwrap()) / h;
    let ratio = fd1(1e-6) / fd1(1e-8);
    assert!((ratio - 10.0).abs() < 0.1, "ratio {ratio}");
    assert!(fd1(1e-12).abs() < 1e-5);
}

#[test]
fn derivative_matches_central_differences() {
    let s = csh();
    let h = 1e-5;
    for i in 1..20 {
        let z = i as f64 / 20.0;
        let fd = (wall_cost(z + h, &s).unwrap() - wall_cost(z - h, &s).unwrap()) / (2.0 * h);
        let kp = wall_cost_derivative(z, &s).unwrap();
        assert!((kp - fd).abs() < 1e-6, "z={z}: {kp} vs {fd}");
    }
}

#[test]
fn h_is_finite_and_increasing() {
    let s = csh();
    assert_eq!(h_cumulative(0.0, &s).unwrap(), 0.0);
    let (a, b, c) = (
        h_cumulative(0.5, &s).unwrap(),
        h_cumulative(0.9, &s).unwrap(),
        h_cumulative(1.0, &s).unwrap(),
    );
    assert!(a < b && b < c);
    assert!((c - 1.5421256876447447).abs() < 1e-9, "H(1) = {c}");
}

#[test]
fn h_matches_its_definition_away_from_one() {
    let s = csh();
    let n = 2000;
    let v = 0.7;
    let h = v / n as f64;
    let g = |w: f64| wall_cost(w, &s).unwrap() / (1.0 - w * w).powi(2);
    let mut acc = g(0.0) + g(v);
    for i in 1..n {
        acc += g(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    assert!((h_cumulative(v, &s).unwrap() - acc * h / 3.0).abs() < 1e-9);
}

#[test]
fn hat_inequality_constant_for_csh() {
    let s = csh();
    let c = hat_constant(&s, 1.5, 10_000).unwrap();
    assert!(c.is_finite());
    // the worst ratio sits where t^2 = 1 - t^2
    assert!((c - 2f64.sqrt()).abs() < 1e-3, "c = {c}");
    let t = 0.5f64.sqrt();
    let lhs = (t * t).min(1.0 - t * t);
    assert!(lhs > eval_v(t, &s).unwrap().sqrt());
}

#[test]
fn heteroclinic_energy_equals_wall_cost() {
    let s = csh();
    for a in [0.0, 0.3, 0.6, 0.9] {
        let p = heteroclinic_profile(a, &s, 40.0, 20_001).unwrap();
        let k = wall_cost(a, &s).unwrap();
        assert!((p.energy - k).abs() < 1e-6, "a={a}: {} vs {k}", p.energy);
    }
}

#[test]
fn heteroclinic_profile_is_odd_and_monotone() {
    let p = heteroclinic_profile(0.3, &csh(), 20.0, 4001).unwrap();
    let n = p.f.len();
    for i in 0..n {
        assert!((p.f[i] + p.f[n - 1 - i]).abs() < 1e-14);
    }
    assert!(p.f.windows(2).all(|w| w[1] >= w[0]));
    let b = (1.0f64 - 0.09).sqrt();
    assert!((p.f[n - 1] - b).abs() < 1e-6);
}

#[test]
fn heteroclinic_width_shrinks_toward_unit_normal() {
    let s = csh();
    let jump = |a: f64| {
        let p = heteroclinic_profile(a, &s, 20.0, 2001).unwrap();
        p.f[p.f.len() - 1] - p.f[0]
    };
    assert!(jump(0.99) < jump(0.9) && jump(0.9) < jump(0.5));
    let p = heteroclinic_profile(1.0, &s, 5.0, 11).unwrap();
    assert!(p.f.iter().all(|&x| x == 0.0) && p.energy == 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn w_gradient_is_radial(x in -1.5f64..1.5, y in -1.5f64..1.5) {
        let g = eval_w_grad([x, y], &csh());
        prop_assert!((g[0] * y - g[1] * x).abs() < 1e-12);
    }

    #[test]
    fn wall_cost_bounded_by_k0(z in 0.0f64..=1.0) {
        let k = wall_cost(z, &csh()).unwrap();
        let kmax = wall_cost(wall_cost_argmax(&csh()).unwrap(), &csh()).unwrap();
        prop_assert!(k >= 0.0 && k <= kmax + 1e-12);
    }
}
