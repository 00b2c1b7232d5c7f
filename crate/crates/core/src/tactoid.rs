//! Isotropic island in a nematic sea with u = e1 at infinity: the reduced
//! interface energy density f(theta), the interface ODE with its junction
//! condition, and reconstruction of interface, walls and characteristic fan.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::potentials::{h_tail_angle, wall_cost_over_cos, PotentialSpec};
use crate::sharp::{e0_energy, CharInitialData, E0Breakdown, Interface, JunctionData, Region, SharpConfig, Wall};

const FP_STEP: f64 = 1e-6;
const FPP_STEP: f64 = 1e-4;
/// Samples of the uniform arclength grid returned by `solve_profile`.
pub const PROFILE_SAMPLES: usize = 4097;

/// f evaluated without a range check; smooth and even about theta = pi.
fn f_ext(theta: f64, spec: &PotentialSpec) -> f64 {
    let half_k0 = 0.5 * wall_cost_over_cos(0.0, spec);
    let phi = 0.5 * theta;
    half_k0 + wall_cost_over_cos(phi, spec) + h_tail_angle(phi, spec) * theta.sin()
}

/// Reduced energy density of the interface as a function of its tangent angle:
/// K(0)/2 + K(sin(theta/2))/cos(theta/2) + (H(1) - H(sin(theta/2))) sin(theta).
pub fn f_theta(theta: f64, spec: &PotentialSpec) -> Result<f64> {
    if !(0.0..=PI).contains(&theta) {
        return Err(Error::range("theta", theta, "[0, pi]"));
    }
    if theta == PI {
        return Ok(0.5 * wall_cost_over_cos(0.0, spec));
    }
    Ok(f_ext(theta, spec))
}

pub fn f_prime(theta: f64, spec: &PotentialSpec) -> f64 {
    (f_ext(theta + FP_STEP, spec) - f_ext(theta - FP_STEP, spec)) / (2.0 * FP_STEP)
}

pub fn f_second(theta: f64, spec: &PotentialSpec) -> f64 {
    let h = FPP_STEP;
    (f_ext(theta + h, spec) - 2.0 * f_ext(theta, spec) + f_ext(theta - h, spec)) / (h * h)
}

/// g(theta) = f'(theta) sin(theta) - f(theta) cos(theta).
pub fn junction_function(theta: f64, spec: &PotentialSpec) -> f64 {
    f_prime(theta, spec) * theta.sin() - f_ext(theta, spec) * theta.cos()
}

/// g on `n` equally spaced points of [0.01, pi - 0.01].
pub fn junction_scan(spec: &PotentialSpec, n: usize) -> Vec<(f64, f64)> {
    let (a, b) = (0.01, PI - 0.01);
    (0..n)
        .map(|i| {
            let th = a + (b - a) * i as f64 / (n - 1) as f64;
            (th, junction_function(th, spec))
        })
        .collect()
}

/// Root of g on (0, pi): the interface angle at the junction.
pub fn junction_angle(spec: &PotentialSpec) -> Result<f64> {
    let table = junction_scan(spec, 10_000);
    let Some(w) = table.windows(2).find(|w| w[0].1 == 0.0 || w[0].1 * w[1].1 < 0.0) else {
        return Err(Error::RootNotFound {
            message: "g(theta) keeps one sign on the scan of (0, pi)".into(),
            table,
        });
    };
    let (mut a, mut b) = (w[0].0, w[1].0);
    let mut ga = w[0].1;
    if ga == 0.0 {
        return Ok(a);
    }
    while b - a > 4.0 * f64::EPSILON * b {
        let m = 0.5 * (a + b);
        let gm = junction_function(m, spec);
        if gm == 0.0 {
            return Ok(m);
        }
        if ga * gm < 0.0 {
            b = m;
        } else {
            a = m;
            ga = gm;
        }
    }
    let root = 0.5 * (a + b);
    let residual = junction_function(root, spec);
    if residual.abs() > 1e-8 {
        return Err(Error::RootNotFound {
            message: format!("bisection ended with |g| = {residual:e}"),
            table,
        });
    }
    Ok(root)
}

/// Interface angle theta(s) on a uniform arclength grid from the junction
/// (theta = theta_star) to the x2-axis (theta = pi).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaProfile {
    pub lambda: f64,
    /// Multiplier with the sign that makes theta increase.
    pub lambda_eff: f64,
    pub theta_star: f64,
    pub s: Vec<f64>,
    pub theta: Vec<f64>,
    /// theta'(s) from the ODE right-hand side.
    pub dtheta: Vec<f64>,
    pub length: f64,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
const TOL: f64 = 1e-12;

struct Rhs<'a> {
    spec: &'a PotentialSpec,
    lambda_eff: f64,
    sign: f64,
}

impl Rhs<'_> {
    fn eval(&self, theta: f64, s: f64) -> Result<f64> {
        let d = f_second(theta, self.spec) + f_ext(theta, self.spec);
        if d * self.sign <= 0.0 {
            return Err(Error::SingularOde { theta, s });
        }
        Ok(-self.lambda_eff / d)
    }
}

/// An accepted Dormand-Prince step with its continuous extension.
struct Step {
    s0: f64,
    h: f64,
    rcont: [f64; 5],
}

impl Step {
    fn eval(&self, s: f64) -> f64 {
        let x = (s - self.s0) / self.h;
        let x1 = 1.0 - x;
        let r = &self.rcont;
        r[0] + x * (r[1] + x1 * (r[2] + x * (r[3] + x1 * r[4])))
    }
}

/// One Dormand-Prince step; returns the stages, the new value and the error estimate.
fn dp_step(rhs: &Rhs, s: f64, theta: f64, k1: f64, h: f64) -> Result<([f64; 7], f64, f64)> {
    let mut k = [0.0; 7];
    k[0] = k1;
    for i in 1..7 {
        let mut acc = 0.0;
        for (j, kj) in k.iter().enumerate().take(i) {
            acc += A[i][j] * kj;
        }
        k[i] = rhs.eval(theta + h * acc, s + C[i] * h)?;
    }
    let next = theta + h * A[6].iter().zip(&k).map(|(a, kk)| a * kk).sum::<f64>();
    let err = h * E.iter().zip(&k).map(|(e, kk)| e * kk).sum::<f64>();
    Ok((k, next, err.abs()))
}

// dense output weights of the Dormand-Prince pair
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

fn continuous(s0: f64, h: f64, theta: f64, next: f64, k: &[f64; 7]) -> Step {
    let diff = next - theta;
    let bspl = h * k[0] - diff;
    Step {
        s0,
        h,
        rcont: [
            theta,
            diff,
            bspl,
            diff - h * k[6] - bspl,
            h * D.iter().zip(k).map(|(d, kk)| d * kk).sum::<f64>(),
        ],
    }
}

fn next_step(h: f64, err: f64, scale: f64) -> f64 {
    let ratio = if err == 0.0 { 5.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 5.0) };
    h * ratio
}

/// Integrates until theta reaches pi; returns the accepted steps and the
/// arclength of the crossing.
fn integrate_to_axis(rhs: &Rhs, theta_star: f64) -> Result<(Vec<Step>, f64)> {
    let mut steps = Vec::new();
    let mut s = 0.0;
    let mut theta = theta_star;
    let mut k1 = rhs.eval(theta, s)?;
    let mut h = 0.01 * (PI - theta_star) / k1.abs();
    for _ in 0..1_000_000 {
        let (k, next, err) = dp_step(rhs, s, theta, k1, h)?;
        let scale = TOL * (1.0 + next.abs());
        if err > scale {
            h = next_step(h, err, scale);
            continue;
        }
        let step = continuous(s, h, theta, next, &k);
        if next >= PI {
            let (mut a, mut b) = (s, s + h);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if step.eval(m) < PI {
                    a = m;
                } else {
                    b = m;
                }
            }
            steps.push(step);
            return Ok((steps, 0.5 * (a + b)));
        }
        steps.push(step);
        s += h;
        theta = next;
        k1 = k[6];
        h = next_step(h, err, scale);
    }
    Err(Error::RootNotFound {
        message: "theta did not reach pi".into(),
        table: vec![(s, theta)],
    })
}

/// Integrates (f'' + f) theta' + lambda = 0 from theta_star until theta = pi
/// and samples the solution on `PROFILE_SAMPLES` uniform arclength points.
pub fn solve_profile(lambda: f64, spec: &PotentialSpec) -> Result<ThetaProfile> {
    solve_profile_with(lambda, spec, PROFILE_SAMPLES)
}

pub fn solve_profile_with(lambda: f64, spec: &PotentialSpec, samples: usize) -> Result<ThetaProfile> {
    if !(lambda != 0.0 && lambda.is_finite()) {
        return Err(Error::range("lambda", lambda, "finite and non-zero"));
    }
    if samples < 3 {
        return Err(Error::range("samples", samples as f64, "[3, inf)"));
    }
    let theta_star = junction_angle(spec)?;
    let d0 = f_second(theta_star, spec) + f_ext(theta_star, spec);
    if d0 == 0.0 {
        return Err(Error::SingularOde { theta: theta_star, s: 0.0 });
    }
    let sign = d0.signum();
    let rhs = Rhs {
        spec,
        lambda_eff: -sign * lambda.abs(),
        sign,
    };
    let (steps, length) = integrate_to_axis(&rhs, theta_star)?;

    let ds = length / (samples - 1) as f64;
    let s: Vec<f64> = (0..samples).map(|i| i as f64 * ds).collect();
    let mut theta = Vec::with_capacity(samples);
    let mut j = 0;
    for &si in &s {
        while j + 1 < steps.len() && si >= steps[j + 1].s0 {
            j += 1;
        }
        theta.push(steps[j].eval(si));
    }
    theta[0] = theta_star;
    // the last sample sits on the axis by construction
    theta[samples - 1] = PI;
    let dtheta = theta
        .par_iter()
        .zip(&s)
        .map(|(&t, &si)| rhs.eval(t, si))
        .collect::<Result<Vec<_>>>()?;
    Ok(ThetaProfile {
        lambda,
        lambda_eff: rhs.lambda_eff,
        theta_star,
        s,
        theta,
        dtheta,
        length,
    })
}


/// The reconstructed island: first-quadrant interface and wall, the
/// characteristic lengths between them and the full island by symmetry.
#[derive(Debug, Clone, PartialEq)]
pub struct TactoidSolution {
    pub profile: ThetaProfile,
    /// Interface r(s) in the first quadrant, from the x1-axis to the x2-axis.
    pub interface: Curve,
    /// Wall r + t nu, one vertex per profile sample except the last
    /// (where t is infinite).
    pub wall: Curve,
    pub t: Vec<f64>,
    /// Wall tangent angles, theta / 2.
    pub psi: Vec<f64>,
    pub island: Curve,
    pub area: f64,
}

impl TactoidSolution {
    pub fn lambda(&self) -> f64 {
        self.profile.lambda
    }

    pub fn junction_point(&self) -> [f64; 2] {
        self.interface.vertices[0]
    }
}

/// Cumulative integral of g over a uniform grid, corrected with g'.
fn cumulative_hermite(ds: f64, g: &[f64], dg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(g.len());
    out.push(0.0);
    for i in 1..g.len() {
        let inc = 0.5 * ds * (g[i - 1] + g[i]) + ds * ds / 12.0 * (dg[i - 1] - dg[i]);
        out.push(out[i - 1] + inc);
    }
    out
}

/// Builds interface, wall and island from a profile (arclength parametrization).
pub fn reconstruct(profile: &ThetaProfile, _spec: &PotentialSpec) -> Result<TactoidSolution> {
    let th = &profile.theta;
    let n = th.len();
    if n < 3 || th.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Assumption("theta must increase strictly toward pi".into()));
    }
    let ds = profile.length / (n - 1) as f64;
    let cos: Vec<f64> = th.iter().map(|t| t.cos()).collect();
    let sin: Vec<f64> = th.iter().map(|t| t.sin()).collect();
    let dcos: Vec<f64> = (0..n).map(|i| -sin[i] * profile.dtheta[i]).collect();
    let dsin: Vec<f64> = (0..n).map(|i| cos[i] * profile.dtheta[i]).collect();
    let x = cumulative_hermite(ds, &cos, &dcos);
    let y = cumulative_hermite(ds, &sin, &dsin);
    let x0 = -x[n - 1];
    let r: Vec<[f64; 2]> = (0..n).map(|i| [x0 + x[i], y[i]]).collect();

    // t = (integral of sin theta) / (1 + cos theta); the integral is y itself
    let m = n - 1;
    let mut t = Vec::with_capacity(m);
    let mut wall = Vec::with_capacity(m);
    let mut psi = Vec::with_capacity(m);
    for i in 0..m {
        let half = 0.5 * th[i];
        let ti = if i == 0 { 0.0 } else { y[i] / (2.0 * half.cos() * half.cos()) };
        t.push(ti);
        wall.push([r[i][0] + ti * sin[i], r[i][1] - ti * cos[i]]);
        psi.push(half);
    }
    if let Some(i) = (1..m).find(|&i| !(t[i] > t[i - 1])) {
        return Err(Error::Assumption(format!(
            "characteristic length stops increasing at sample {i} (t = {})",
            t[i]
        )));
    }

    let params = &profile.s;
    let interface = Curve::from_parametric(r.clone(), params, false).with_tangent_angles(th.clone());
    let wall = Curve::from_parametric(wall, &params[..m], false).with_tangent_angles(psi.clone());

    let mut ring = Vec::with_capacity(4 * n);
    ring.extend(r.iter().copied());
    ring.extend(r[..m].iter().rev().map(|p| [-p[0], p[1]]));
    ring.extend(r[1..].iter().map(|p| [-p[0], -p[1]]));
    ring.extend(r[1..m].iter().rev().map(|p| [p[0], -p[1]]));
    let island = Curve::from_points(ring, true);
    let area = island.signed_area();

    Ok(TactoidSolution {
        profile: profile.clone(),
        interface,
        wall,
        t,
        psi,
        island,
        area,
    })
}

/// Reduced and direct evaluations of the island energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TactoidEnergy {
    /// Four times the integral of f(theta(s)) over the quadrant interface.
    pub reduced: f64,
    /// E_0^inf of the assembled piecewise configuration.
    pub sharp: E0Breakdown,
}

impl TactoidEnergy {
    pub fn relative_gap(&self) -> f64 {
        (self.reduced - self.sharp.total).abs() / self.reduced.abs()
    }
}

fn simpson(ds: f64, g: &[f64]) -> f64 {
    let n = g.len();
    if n % 2 == 0 {
        // trapezoid on the last interval keeps odd panels for Simpson
        return simpson(ds, &g[..n - 1]) + 0.5 * ds * (g[n - 2] + g[n - 1]);
    }
    let mut acc = g[0] + g[n - 1];
    for (i, v) in g.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * ds / 3.0
}

pub fn tactoid_energy(sol: &TactoidSolution, spec: &PotentialSpec) -> Result<TactoidEnergy> {
    let p = &sol.profile;
    let ds = p.length / (p.theta.len() - 1) as f64;
    let f: Vec<f64> = p.theta.iter().map(|&t| f_theta(t.min(PI), spec)).collect::<Result<_>>()?;
    let reduced = 4.0 * simpson(ds, &f);
    let sharp = e0_energy(&tactoid_config(sol), f64::INFINITY, spec)?;
    let out = TactoidEnergy { reduced, sharp };
    if out.relative_gap() > 0.02 {
        return Err(Error::CrossCheck(format!(
            "reduced energy {reduced} and direct energy {} differ by {:.3}%",
            sharp.total,
            100.0 * out.relative_gap()
        )));
    }
    Ok(out)
}

/// Images of a first-quadrant point and vector under the island symmetries,
/// in the order Q1, Q2, Q3, Q4. Vectors keep u1 and flip u2 under each
/// reflection; `reverses` tells whether the reflection reverses orientation.
fn quadrant_maps() -> [(f64, f64, bool); 4] {
    // (x sign, y sign, orientation reversed)
    [(1.0, 1.0, false), (-1.0, 1.0, true), (-1.0, -1.0, false), (1.0, -1.0, true)]
}

fn map_vec(v: [f64; 2], sx: f64, sy: f64) -> [f64; 2] {
    // each reflection flips the second component of u
    [v[0], v[1] * sx * sy]
}

fn map_angle(a: f64, sx: f64, sy: f64) -> f64 {
    let (s, c) = a.sin_cos();
    (sy * s).atan2(sx * c)
}

/// The island as a piecewise E_0^inf configuration: four interface pieces,
/// four walls, the straight characteristic fans between them and the
/// isotropic island.
pub fn tactoid_config(sol: &TactoidSolution) -> SharpConfig {
    let th = &sol.profile.theta;
    let m = sol.wall.len();
    let mut cfg = SharpConfig {
        regions: vec![Region::Isotropic {
            polygon: sol.island.vertices.clone(),
        }],
        ..Default::default()
    };
    for (sx, sy, reversed) in quadrant_maps() {
        let pt = |p: [f64; 2]| [sx * p[0], sy * p[1]];
        let inside: Vec<[f64; 2]> = th.iter().map(|&t| map_vec([-t.cos(), -t.sin()], sx, sy)).collect();
        cfg.interfaces.push(Interface {
            vertices: sol.interface.vertices.iter().map(|&p| pt(p)).collect(),
            closed: false,
            tangent_angles: Some(th.iter().map(|&a| map_angle(a, sx, sy)).collect()),
            trace: inside.clone(),
            div: None,
        });
        let e1 = vec![[1.0, 0.0]; m];
        let near = inside[..m].to_vec();
        let (trace1, trace2) = if reversed { (e1, near) } else { (near, e1) };
        cfg.walls.push(Wall {
            vertices: sol.wall.vertices.iter().map(|&p| pt(p)).collect(),
            closed: false,
            tangent_angles: Some(sol.psi.iter().map(|&a| map_angle(a, sx, sy)).collect()),
            trace1,
            trace2,
            div1: None,
            div2: None,
        });
        // straight characteristics from the interface to the wall
        let data = CharInitialData::from_fn((0..m).map(|i| sol.profile.s[i]).collect(), |s| {
            let i = ((s / sol.profile.length) * (th.len() - 1) as f64).round() as usize;
            let p = pt(sol.interface.vertices[i]);
            let u = inside[i];
            (p, u[1].atan2(u[0]), 0.0)
        });
        let mut data = data;
        // keep theta0 continuous along the fan
        for i in 1..data.theta0.len() {
            let d = data.theta0[i] - data.theta0[i - 1];
            data.theta0[i] -= 2.0 * PI * (d / (2.0 * PI)).round();
        }
        cfg.regions.push(Region::Characteristic {
            data,
            t_end: sol.t.clone(),
        });
    }
    cfg.junctions.push(junction_data(sol));
    cfg
}

/// Junction data at the right corner of the island, in the orientation
/// convention of the junction condition: region 0 isotropic, regions 1 and 3
/// the fans above and below the x1-axis, region 2 the outer e1 region.
pub fn junction_data(sol: &TactoidSolution) -> JunctionData {
    let th = sol.profile.theta_star;
    let ps = 0.5 * th;
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ps.sin_cos();
    JunctionData {
        point: sol.junction_point(),
        tau01: [ct, st],
        tau12: [cp, sp],
        tau23: [cp, -sp],
        tau03: [ct, -st],
        nu01: [st, -ct],
        nu12: [sp, -cp],
        nu23: [-sp, -cp],
        nu03: [st, ct],
        u1: [-ct, -st],
        u2: [1.0, 0.0],
        u3: [-ct, st],
        div1: 0.0,
        div2: 0.0,
        div3: 0.0,
        // divergence-free: the L terms vanish for any finite L
        l: 1.0,
    }
}

fn segment_distance(p0: [f64; 2], p1: [f64; 2], q0: [f64; 2], q1: [f64; 2]) -> f64 {
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let (d1, d2) = (cross(q0, q1, p0), cross(q0, q1, p1));
    let (d3, d4) = (cross(p0, p1, q0), cross(p0, p1, q1));
    if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
        return 0.0;
    }
    let point_seg = |p: [f64; 2], a: [f64; 2], b: [f64; 2]| {
        let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
        let l2 = dx * dx + dy * dy;
        let t = if l2 > 0.0 { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) } else { 0.0 };
        (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
    };
    point_seg(p0, q0, q1)
        .min(point_seg(p1, q0, q1))
        .min(point_seg(q0, p0, p1))
        .min(point_seg(q1, p0, p1))
}

/// Smallest distance between distinct characteristic segments r -> r + t nu
/// over `count` evenly spaced samples (the degenerate one at the junction
/// excluded). Zero means two characteristics cross.
pub fn fan_min_separation(sol: &TactoidSolution, count: usize) -> f64 {
    let m = sol.wall.len();
    let idx: Vec<usize> = (1..=count).map(|k| 1 + (k - 1) * (m - 2) / (count - 1).max(1)).collect();
    let seg = |i: usize| (sol.interface.vertices[i], sol.wall.vertices[i]);
    let mut best = f64::INFINITY;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] == idx[b] {
                continue;
            }
            let (p0, p1) = seg(idx[a]);
            let (q0, q1) = seg(idx[b]);
            best = best.min(segment_distance(p0, p1, q0, q1));
        }
    }
    best
}

pub fn solve_tactoid(lambda: f64, spec: &PotentialSpec) -> Result<TactoidSolution> {
    reconstruct(&solve_profile(lambda, spec)?, spec)
}

/// Solution whose island area matches `target_area`, found by bisection on
/// lambda inside the bracket predicted by the scaling area ~ 1 / lambda^2.
pub fn calibrate_lambda(target_area: f64, spec: &PotentialSpec) -> Result<TactoidSolution> {
    if !(target_area > 0.0 && target_area.is_finite()) {
        return Err(Error::range("target area", target_area, "(0, inf)"));
    }
    let unit = solve_tactoid(1.0, spec)?;
    let guess = (unit.area / target_area).sqrt();
    if !(1e-8..=1e8).contains(&guess) {
        return Err(Error::range(
            "target area",
            target_area,
            format!("[{:e}, {:e}] (area at lambda = 1 is {})", unit.area * 1e-16, unit.area * 1e16, unit.area),
        ));
    }
    let tol = 1e-6 * target_area;
    let sol = solve_tactoid(guess, spec)?;
    if (sol.area - target_area).abs() <= tol {
        return Ok(sol);
    }
    // area decreases in lambda
    let (mut lo, mut hi) = (0.9 * guess, 1.1 * guess);
    let mut best = sol;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let s = solve_tactoid(mid, spec)?;
        let diff = s.area - target_area;
        best = s;
        if diff.abs() <= tol {
            return Ok(best);
        }
        if diff > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::RootNotFound {
        message: format!("area {} not within {tol:e} of {target_area}", best.area),
        table: vec![(best.lambda(), best.area)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f_endpoints() {
        let spec = PotentialSpec::csh();
        assert!((f_theta(0.0, &spec).unwrap() - 0.75).abs() < 1e-10);
        assert!((f_theta(PI, &spec).unwrap() - 0.25).abs() < 1e-10);
        assert!(f_theta(3.2, &spec).is_err());
    }

    #[test]
    fn simpson_integrates_cubics() {
        let ds = 0.1;
        let g: Vec<f64> = (0..11).map(|i| (i as f64 * ds).powi(3)).collect();
        assert!((simpson(ds, &g) - 0.25).abs() < 1e-14);
    }
}
