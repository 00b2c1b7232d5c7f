use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tactoidlab::oned::*;
use tactoidlab::potentials::{heteroclinic_profile, wall_cost};
use tactoidlab::PotentialSpec;

fn csh() -> PotentialSpec {
    PotentialSpec::csh()
}

fn sup_distance(p: &OneDProfile, q: &OneDProfile) -> f64 {
    p.y.iter()
        .enumerate()
        .map(|(i, &y)| {
            let v = q.sample(y);
            (p.u1[i] - v[0]).abs().max((p.u2[i] - v[1]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn two_interface_energy_is_twice_c0() {
    let e = gamma_energy_1d(OneDStructure::TwoInterface { y0: 0.2 }, 0.0, 0.5, 3.0, &csh()).unwrap();
    assert!((e - 0.5).abs() < 1e-8);
}

#[test]
fn wall_at_boundary_value_costs_k() {
    let s = csh();
    for a in [0.0, 0.2, 0.6, 0.95] {
        let e = gamma_energy_1d(OneDStructure::SingleWall { m: a }, a, 0.5, 2.0, &s).unwrap();
        assert_eq!(e, wall_cost(a, &s).unwrap());
    }
    let e = gamma_energy_1d(OneDStructure::SingleWall { m: 0.0 }, 0.0, 0.5, 2.0, &s).unwrap();
    assert!((e - 0.5).abs() < 1e-8);
}

#[test]
fn objective_end_values_are_exact() {
    let s = csh();
    let (a, h, l) = (0.35, 0.5, 0.8);
    assert_eq!(single_wall_objective(a, a, h, l, &s).unwrap(), wall_cost(a, &s).unwrap());
    assert_eq!(single_wall_objective(1.0, a, h, l, &s).unwrap(), l * (1.0 - a) * (1.0 - a) / h);
}

#[test]
fn minimizer_beats_random_admissible_states() {
    let s = csh();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for (a, h, l) in [(0.0, 0.5, 0.1), (0.0, 0.5, 0.4), (0.3, 1.0, 0.7), (0.6, 0.5, 0.4)] {
        let best = gamma_minimizer(a, h, l, &s).unwrap();
        for _ in 0..1000 {
            let structure = if a == 0.0 && rng.gen_bool(0.2) {
                OneDStructure::TwoInterface { y0: rng.gen_range(0.0..h) }
            } else {
                OneDStructure::SingleWall { m: rng.gen_range(a..=1.0) }
            };
            let e = gamma_energy_1d(structure, a, h, l, &s).unwrap();
            assert!(best.energy <= e + 1e-12, "a={a} L={l}: {} > {e} at {structure:?}", best.energy);
        }
    }
}

#[test]
fn vanishing_l_removes_the_wall() {
    let s = csh();
    for a in [0.0, 0.3, 0.6] {
        let st = gamma_minimizer(a, 0.5, 1e-4, &s).unwrap();
        let OneDStructure::SingleWall { m } = st.structure else {
            panic!("expected a single wall");
        };
        assert!(m > 0.999, "a={a}: m={m}");
        let jump = 2.0 * (1.0 - m * m).sqrt();
        assert!(jump < 0.1);
    }
}

#[test]
fn regimes_split_at_the_threshold() {
    let s = csh();
    let t = regime_threshold(&s).unwrap();
    assert!(t > 0.0 && t.is_finite());
    let below = gamma_minimizer(0.0, 1.0, 0.9 * t, &s).unwrap();
    match below.structure {
        OneDStructure::SingleWall { m } => assert!(m > 0.0 && m < 1.0),
        other => panic!("{other:?}"),
    }
    assert!(below.energy < 0.5);
    let above = gamma_minimizer(0.0, 1.0, 1.1 * t, &s).unwrap();
    assert!(matches!(above.structure, OneDStructure::TwoInterface { .. }));
    assert!((above.energy - 0.5).abs() < 1e-8);
    // only the ratio L/H matters
    let scaled = gamma_minimizer(0.0, 2.0, 2.0 * 0.9 * t, &s).unwrap();
    assert!((scaled.energy - below.energy).abs() < 1e-9);
}

#[test]
fn distinct_l_give_distinct_wall_heights() {
    let s = csh();
    let m = |l: f64| match gamma_minimizer(0.6, 0.5, l, &s).unwrap().structure {
        OneDStructure::SingleWall { m } => m,
        other => panic!("{other:?}"),
    };
    let (m4, m5) = (m(0.4), m(0.5));
    assert!(m4 > m5 && m5 > 0.6, "{m4} {m5}");
}

#[test]
fn eps_scaling_of_the_discrete_energy() {
    let s = csh();
    let p = OneDProfile::from_fn(0.5, 201, |y| {
        let u2: f64 = 0.3;
        [(1.0 - u2 * u2).sqrt() * (y / 0.05).tanh(), u2]
    });
    let (p1, g1, d1) = energy_parts_1d(&p, 0.02, 0.7, &s);
    let (p2, g2, d2) = energy_parts_1d(&p, 0.04, 0.7, &s);
    assert!((g2 - 2.0 * g1).abs() <= 1e-14 * g2);
    assert!((p2 - 0.5 * p1).abs() <= 1e-14 * p1);
    assert_eq!(d1, d2);
    let total = energy_eps_1d(&p, 0.02, 0.7, &s).unwrap();
    assert!(total > 0.0 && (total - (p1 + g1 + d1)).abs() < 1e-15);
    assert!(energy_eps_1d(&p, 0.0, 0.7, &s).is_err());
}

#[test]
fn embedded_heteroclinic_energy_matches_k() {
    // stretched by eps at a fixed number of nodes per eps, the energy does not depend on eps
    let s = csh();
    let a = 0.3;
    let k = wall_cost(a, &s).unwrap();
    let mut energies = Vec::new();
    for eps in [1e-2, 1e-3] {
        let nodes = (40.0 / eps) as usize + 1;
        let het = heteroclinic_profile(a, &s, 0.5 / eps, nodes).unwrap();
        let inner = OneDProfile {
            half_length: 0.5 / eps,
            y: het.t.clone(),
            u1: het.f.clone(),
            u2: vec![a; het.t.len()],
        };
        let p = OneDProfile::from_fn(0.5, nodes, |y| inner.sample(y / eps));
        energies.push(energy_eps_1d(&p, eps, 0.4, &s).unwrap());
    }
    for e in &energies {
        assert!((e - k).abs() < 0.1 * k, "{e} vs {k}");
    }
    assert!((energies[0] - energies[1]).abs() < 1e-6 * k, "{energies:?}");
}

#[test]
fn relaxed_profile_tracks_the_composite() {
    let s = csh();
    let (a, h, l, eps) = (0.6, 0.5, 0.4, 1e-3);
    let run = relax_1d(a, h, eps, l, &s, &OneDInit::MollifiedMinimizer, &OneDSolverOptions::default()).unwrap();
    assert!(run.converged);
    let state = gamma_minimizer(a, h, l, &s).unwrap();
    let comp = composite_profile(&state, h, eps, &s, run.profile.y.len()).unwrap();
    let d = sup_distance(&run.profile, &comp);
    assert!(d < 0.05, "sup distance {d}");
    let e = energy_eps_1d(&run.profile, eps, l, &s).unwrap();
    assert!(e >= state.energy - 0.05, "{e} vs {}", state.energy);
    let n = run.profile.y.len();
    let b = (1.0 - a * a).sqrt();
    assert_eq!([run.profile.u1[0], run.profile.u2[0]], [-b, a]);
    assert_eq!([run.profile.u1[n - 1], run.profile.u2[n - 1]], [b, a]);
}

#[test]
fn relaxed_energy_decreases_and_approaches_the_limit() {
    let s = csh();
    let (a, h, l) = (0.6, 0.5, 0.4);
    let limit = gamma_minimizer(a, h, l, &s).unwrap().energy;
    let mut gaps = Vec::new();
    for eps in [1e-2, 1e-3] {
        let run = relax_1d(a, h, eps, l, &s, &OneDInit::Linear, &OneDSolverOptions::default()).unwrap();
        for w in run.energy_history.windows(2) {
            assert!(w[1].1 <= w[0].1 + 1e-12);
        }
        let e = run.energy_history.last().unwrap().1;
        assert!(e >= limit - 0.05);
        gaps.push((e - limit).abs());
    }
    assert!(gaps[1] < gaps[0], "{gaps:?}");
}

#[test]
fn invalid_parameters_are_rejected() {
    let s = csh();
    let opts = OneDSolverOptions::default();
    assert!(gamma_minimizer(1.0, 0.5, 0.4, &s).is_err());
    assert!(gamma_minimizer(0.2, 0.0, 0.4, &s).is_err());
    assert!(relax_1d(0.2, 0.5, 0.0, 0.4, &s, &OneDInit::Linear, &opts).is_err());
    let fast = OneDSolverOptions { dt_over_eps: 0.5, ..opts };
    assert!(relax_1d(0.2, 0.5, 0.01, 0.4, &s, &OneDInit::Linear, &fast).is_err());
}
