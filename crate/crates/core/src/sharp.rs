//! Sharp-interface toolkit: characteristics of the criticality system,
//! criticality residuals along walls, interfaces and junctions, the astroid
//! construction in the unit disk, and E_0 on piecewise configurations.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::potentials::{wall_cost, wall_cost_derivative, PotentialSpec};
use crate::quadrature::integrate;

/// Below this |v0| a characteristic is traced as a straight line.
pub const STRAIGHT_TOL: f64 = 1e-12;

/// Point and angle reached after time `t` along the characteristic issued
/// from `x0` with angle `theta0` and divergence `v0`: a circular arc of
/// curvature `v0`, or a straight line when `v0` vanishes.
pub fn trace_characteristic(x0: [f64; 2], theta0: f64, v0: f64, t: f64) -> ([f64; 2], f64) {
    if v0.abs() < STRAIGHT_TOL {
        return ([x0[0] - t * theta0.sin(), x0[1] + t * theta0.cos()], theta0);
    }
    // difference-of-cosines form; no cancellation for small v0 t
    let half = 0.5 * v0 * t;
    let mid = theta0 + half;
    let chord = 2.0 * half.sin() / v0;
    (
        [x0[0] - chord * mid.sin(), x0[1] + chord * mid.cos()],
        theta0 + v0 * t,
    )
}

/// Geometry of a uniform node grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub origin: [f64; 2],
}

impl GridSpec {
    pub fn coords(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major scalar samples; NaN marks nodes without data.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn from_fn(spec: GridSpec, f: impl Fn(f64, f64) -> f64 + Sync) -> Self {
        let values = (0..spec.len())
            .into_par_iter()
            .map(|n| {
                let p = spec.coords(n % spec.nx, n / spec.nx);
                f(p[0], p[1])
            })
            .collect();
        Self { spec, values }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.spec.nx + i]
    }

    /// Largest |value| over nodes that carry data.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn count_finite(&self) -> usize {
        self.values.iter().filter(|v| v.is_finite()).count()
    }
}

fn wrap_angle(d: f64) -> f64 {
    d - 2.0 * PI * (d / (2.0 * PI)).round()
}

/// Residuals of the transport system for (theta, v) by central differences:
/// R1 = -sin(theta) theta_x + cos(theta) theta_y - v and
/// R2 = -sin(theta) v_x + cos(theta) v_y.
/// Border nodes and nodes whose stencil touches NaN get NaN.
pub fn pde_residual(theta: &ScalarGrid, v: &ScalarGrid) -> Result<(ScalarGrid, ScalarGrid)> {
    if theta.spec != v.spec {
        return Err(Error::Precondition("theta and v grids differ".into()));
    }
    let g = theta.spec;
    let inv = 0.5 / g.h;
    let mut r1 = vec![f64::NAN; g.len()];
    let mut r2 = vec![f64::NAN; g.len()];
    for j in 1..g.ny.saturating_sub(1) {
        for i in 1..g.nx - 1 {
            let n = j * g.nx + i;
            let th = theta.values[n];
            let tx = wrap_angle(theta.values[n + 1] - theta.values[n - 1]) * inv;
            let ty = wrap_angle(theta.values[n + g.nx] - theta.values[n - g.nx]) * inv;
            let vx = (v.values[n + 1] - v.values[n - 1]) * inv;
            let vy = (v.values[n + g.nx] - v.values[n - g.nx]) * inv;
            let (s, c) = th.sin_cos();
            // NaN anywhere in the stencil propagates
            r1[n] = -s * tx + c * ty - v.values[n];
            r2[n] = -s * vx + c * vy;
        }
    }
    Ok((
        ScalarGrid { spec: g, values: r1 },
        ScalarGrid { spec: g, values: r2 },
    ))
}

/// Initial data for a fan of characteristics, sampled at increasing `s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharInitialData {
    pub s: Vec<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub theta0: Vec<f64>,
    pub v0: Vec<f64>,
}

impl CharInitialData {
    pub fn from_fn(s: Vec<f64>, f: impl Fn(f64) -> ([f64; 2], f64, f64)) -> Self {
        let mut d = Self {
            s: Vec::with_capacity(s.len()),
            x1: vec![],
            x2: vec![],
            theta0: vec![],
            v0: vec![],
        };
        for si in s {
            let (x, th, v) = f(si);
            d.s.push(si);
            d.x1.push(x[0]);
            d.x2.push(x[1]);
            d.theta0.push(th);
            d.v0.push(v);
        }
        d
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.s.len();
        if n < 2 {
            return Err(Error::InvalidConfig("characteristic data needs two samples".into()));
        }
        if [&self.x1, &self.x2, &self.theta0, &self.v0].iter().any(|c| c.len() != n) {
            return Err(Error::InvalidConfig("characteristic data columns differ in length".into()));
        }
        let all = self.s.iter().chain(&self.x1).chain(&self.x2).chain(&self.theta0).chain(&self.v0);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("non-finite characteristic data".into()));
        }
        if self.s.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidConfig("characteristic parameter must increase".into()));
        }
        if self.theta0.windows(2).any(|w| (w[1] - w[0]).abs() > 0.5 * PI) {
            return Err(Error::InvalidConfig("theta0 samples are not continuous".into()));
        }
        Ok(())
    }

    pub fn trace(&self, i: usize, t: f64) -> ([f64; 2], f64) {
        trace_characteristic([self.x1[i], self.x2[i]], self.theta0[i], self.v0[i], t)
    }
}

/// Monotone cubic interpolants of the initial data in `s`.
struct FanInterp {
    x1: MonotoneCubic,
    x2: MonotoneCubic,
    theta0: MonotoneCubic,
    v0: MonotoneCubic,
}

impl FanInterp {
    fn new(d: &CharInitialData) -> Result<Self> {
        d.validate()?;
        let mk = |ys: &Vec<f64>| {
            MonotoneCubic::new(d.s.clone(), ys.clone())
                .map_err(|e| Error::InvalidConfig(e.to_string()))
        };
        Ok(Self {
            x1: mk(&d.x1)?,
            x2: mk(&d.x2)?,
            theta0: mk(&d.theta0)?,
            v0: mk(&d.v0)?,
        })
    }

    fn range(&self) -> (f64, f64) {
        (self.x1.x_min(), self.x1.x_max())
    }

    fn point(&self, s: f64, t: f64) -> ([f64; 2], f64, f64) {
        let v = self.v0.eval(s);
        let (x, th) = trace_characteristic([self.x1.eval(s), self.x2.eval(s)], self.theta0.eval(s), v, t);
        (x, th, v)
    }

    fn d_ds(&self, s: f64, t: f64) -> [f64; 2] {
        let (lo, hi) = self.range();
        let delta = 1e-6 * (hi - lo);
        let (a, b) = ((s - delta).max(lo), (s + delta).min(hi));
        let (pa, _, _) = self.point(a, t);
        let (pb, _, _) = self.point(b, t);
        [(pb[0] - pa[0]) / (b - a), (pb[1] - pa[1]) / (b - a)]
    }
}

/// Samples the fan of characteristics issued from `data` for t in [0, t_max]
/// onto the grid: each node is inverted to its (s, t) by Newton iteration
/// seeded from a dense traced fan. Nodes the fan does not reach are NaN.
pub fn reconstruct_fan(data: &CharInitialData, t_max: f64, grid: GridSpec) -> Result<(ScalarGrid, ScalarGrid)> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::range("t_max", t_max, "(0, inf)"));
    }
    let fan = FanInterp::new(data)?;
    let (s_lo, s_hi) = fan.range();

    // seed density: finer than the grid in both fan directions
    let mut s_extent: f64 = 0.0;
    for k in 0..=4 {
        let t = t_max * k as f64 / 4.0;
        let mut len = 0.0;
        let mut prev = fan.point(s_lo, t).0;
        for i in 1..=256 {
            let p = fan.point(s_lo + (s_hi - s_lo) * i as f64 / 256.0, t).0;
            len += (p[0] - prev[0]).hypot(p[1] - prev[1]);
            prev = p;
        }
        s_extent = s_extent.max(len);
    }
    let ns = ((2.0 * s_extent / grid.h).ceil() as usize + 2).min(200_000);
    let nt = ((2.0 * t_max / grid.h).ceil() as usize + 2).min(200_000);

    let cell = |p: [f64; 2]| -> Option<usize> {
        let fi = ((p[0] - grid.origin[0]) / grid.h).round();
        let fj = ((p[1] - grid.origin[1]) / grid.h).round();
        if fi < 0.0 || fj < 0.0 || fi >= grid.nx as f64 || fj >= grid.ny as f64 {
            return None;
        }
        Some(fj as usize * grid.nx + fi as usize)
    };
    let mut buckets: Vec<Vec<(f64, f64, [f64; 2])>> = vec![Vec::new(); grid.len()];
    for a in 0..ns {
        let s = s_lo + (s_hi - s_lo) * a as f64 / (ns - 1) as f64;
        for b in 0..nt {
            let t = t_max * b as f64 / (nt - 1) as f64;
            let p = fan.point(s, t).0;
            if let Some(c) = cell(p) {
                buckets[c].push((s, t, p));
            }
        }
    }

    let scale = s_extent.max(t_max).max(grid.h);
    let solve = |n: usize| -> (f64, f64) {
        let (i, j) = (n % grid.nx, n / grid.nx);
        let x = grid.coords(i, j);
        let mut best: Option<(f64, f64, f64)> = None;
        for dj in -1i64..=1 {
            for di in -1i64..=1 {
                let (ii, jj) = (i as i64 + di, j as i64 + dj);
                if ii < 0 || jj < 0 || ii >= grid.nx as i64 || jj >= grid.ny as i64 {
                    continue;
                }
                for &(s, t, p) in &buckets[jj as usize * grid.nx + ii as usize] {
                    let d = (p[0] - x[0]).hypot(p[1] - x[1]);
                    if best.is_none_or(|b| d < b.2) {
                        best = Some((s, t, d));
                    }
                }
            }
        }
        let Some((mut s, mut t, _)) = best else {
            return (f64::NAN, f64::NAN);
        };
        for _ in 0..40 {
            let (p, th, v) = fan.point(s, t);
            let f = [p[0] - x[0], p[1] - x[1]];
            if f[0].hypot(f[1]) < 1e-13 * scale {
                let tol = 1e-9 * (s_hi - s_lo);
                if s < s_lo - tol || s > s_hi + tol || t < -1e-9 * t_max || t > t_max * (1.0 + 1e-9) {
                    return (f64::NAN, f64::NAN);
                }
                return (th, v);
            }
            let js = fan.d_ds(s, t);
            let jt = [-th.sin(), th.cos()];
            let det = js[0] * jt[1] - js[1] * jt[0];
            if det.abs() < 1e-300 {
                break;
            }
            let ds = (f[0] * jt[1] - f[1] * jt[0]) / det;
            let dt = (js[0] * f[1] - js[1] * f[0]) / det;
            s = (s - ds).clamp(s_lo - 0.1 * (s_hi - s_lo), s_hi + 0.1 * (s_hi - s_lo));
            t -= dt;
        }
        (f64::NAN, f64::NAN)
    };
    let out: Vec<(f64, f64)> = (0..grid.len()).into_par_iter().map(solve).collect();
    let (th, v): (Vec<f64>, Vec<f64>) = out.into_iter().unzip();
    Ok((ScalarGrid { spec: grid, values: th }, ScalarGrid { spec: grid, values: v }))
}

/// K extended evenly to [-1, 1].
fn k_even(z: f64, spec: &PotentialSpec) -> Result<f64> {
    wall_cost(z.abs(), spec)
}

/// K' extended oddly to [-1, 1].
fn kp_odd(z: f64, spec: &PotentialSpec) -> Result<f64> {
    Ok(z.signum() * wall_cost_derivative(z.abs(), spec)?)
}

/// L * x with the convention that an infinite L times a zero term is zero.
fn lmul(l: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        l * x
    }
}

fn check_z(z: f64) -> Result<()> {
    if !(z.abs() <= 1.0) {
        return Err(Error::range("u.nu", z, "[-1, 1]"));
    }
    Ok(())
}

/// Natural boundary condition on a wall: K'(u.nu) - L (div u2 - div u1).
pub fn wall_jump_residual(u_dot_nu: f64, div1: f64, div2: f64, l: f64, spec: &PotentialSpec) -> Result<f64> {
    check_z(u_dot_nu)?;
    Ok(kp_odd(u_dot_nu, spec)? - lmul(l, div2 - div1))
}

/// Second-order derivative of samples `f` with respect to nonuniform `s`.
pub fn derivative(s: &[f64], f: &[f64]) -> Vec<f64> {
    let n = s.len();
    assert_eq!(n, f.len());
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (f[1] - f[0]) / (s[1] - s[0]);
        return vec![d, d];
    }
    let three = |i0: usize, at: usize| {
        // derivative at s[at] of the parabola through i0, i0+1, i0+2
        let (x0, x1, x2) = (s[i0], s[i0 + 1], s[i0 + 2]);
        let (y0, y1, y2) = (f[i0], f[i0 + 1], f[i0 + 2]);
        let x = s[at];
        y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n)
        .map(|i| match i {
            0 => three(0, 0),
            _ if i == n - 1 => three(n - 3, n - 1),
            _ => three(i - 1, i),
        })
        .collect()
}

/// Samples along a wall for the evolution residual.
#[derive(Debug, Clone, PartialEq)]
pub struct WallSamples {
    pub s: Vec<f64>,
    pub div1: Vec<f64>,
    pub div2: Vec<f64>,
    pub u1_tau: Vec<f64>,
    pub kappa: Vec<f64>,
    pub u_dot_nu: Vec<f64>,
}

/// Criticality of a wall under normal motion, per sample:
/// (L/2)(div1^2 - div2^2) - L (div1 + div2)' (u1.tau) - L (div1 + div2)(u1.tau)' - K(u.nu) kappa.
pub fn wall_evolution_residual(w: &WallSamples, l: f64, spec: &PotentialSpec) -> Result<Vec<f64>> {
    let n = w.s.len();
    if [&w.div1, &w.div2, &w.u1_tau, &w.kappa, &w.u_dot_nu].iter().any(|c| c.len() != n) {
        return Err(Error::Precondition("wall sample columns differ in length".into()));
    }
    let sum: Vec<f64> = w.div1.iter().zip(&w.div2).map(|(a, b)| a + b).collect();
    let dsum = derivative(&w.s, &sum);
    let dtau = derivative(&w.s, &w.u1_tau);
    (0..n)
        .map(|i| {
            check_z(w.u_dot_nu[i])?;
            let k = k_even(w.u_dot_nu[i], spec)?;
            Ok(lmul(l, 0.5 * (w.div1[i] * w.div1[i] - w.div2[i] * w.div2[i]))
                - lmul(l, dsum[i] * w.u1_tau[i])
                - lmul(l, sum[i] * dtau[i])
                - if w.kappa[i] == 0.0 { 0.0 } else { k * w.kappa[i] })
        })
        .collect()
}

/// Criticality of an interface, per sample:
/// (L/2)(div u*)^2 - L (div u*)' (u*.tau) + (K(0)/2) kappa - lambda.
/// `orientation` is u*.tau and must be +1 or -1.
pub fn interface_residual(
    s: &[f64],
    div_star: &[f64],
    orientation: &[f64],
    kappa: &[f64],
    lambda: f64,
    l: f64,
    spec: &PotentialSpec,
) -> Result<Vec<f64>> {
    let n = s.len();
    if div_star.len() != n || orientation.len() != n || kappa.len() != n {
        return Err(Error::Precondition("interface sample columns differ in length".into()));
    }
    if orientation.iter().any(|o| (o.abs() - 1.0).abs() > 1e-8) {
        return Err(Error::Precondition("u*.tau must be +1 or -1 on an interface".into()));
    }
    let half_k0 = 0.5 * wall_cost(0.0, spec)?;
    let dd = derivative(s, div_star);
    Ok((0..n)
        .map(|i| {
            lmul(l, 0.5 * div_star[i] * div_star[i]) - lmul(l, dd[i] * orientation[i]) + half_k0 * kappa[i]
                - lambda
        })
        .collect())
}

/// Local data at a point where two interfaces (01, 03) meet two walls (12, 23).
/// Tangents point away from the point; normals point from region i into j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JunctionData {
    pub point: [f64; 2],
    pub tau01: [f64; 2],
    pub tau12: [f64; 2],
    pub tau23: [f64; 2],
    pub tau03: [f64; 2],
    pub nu01: [f64; 2],
    pub nu12: [f64; 2],
    pub nu23: [f64; 2],
    pub nu03: [f64; 2],
    pub u1: [f64; 2],
    pub u2: [f64; 2],
    pub u3: [f64; 2],
    pub div1: f64,
    pub div2: f64,
    pub div3: f64,
    #[serde(rename = "L")]
    pub l: f64,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

impl JunctionData {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: [f64; 2], tol: f64| {
            if (v[0].hypot(v[1]) - 1.0).abs() > tol {
                return Err(Error::Precondition(format!("{name} is not a unit vector")));
            }
            Ok(())
        };
        for (name, v) in [
            ("tau01", self.tau01),
            ("tau12", self.tau12),
            ("tau23", self.tau23),
            ("tau03", self.tau03),
            ("nu01", self.nu01),
            ("nu12", self.nu12),
            ("nu23", self.nu23),
            ("nu03", self.nu03),
        ] {
            unit(name, v, 1e-12)?;
        }
        for (name, v) in [("u1", self.u1), ("u2", self.u2), ("u3", self.u3)] {
            unit(name, v, 1e-10)?;
        }
        Ok(())
    }
}

/// Force balance at a junction; zero for a critical configuration.
pub fn junction_residual(j: &JunctionData, spec: &PotentialSpec) -> Result<[f64; 2]> {
    j.validate()?;
    let half_k0 = 0.5 * wall_cost(0.0, spec)?;
    let k12 = k_even(dot(j.u1, j.nu12), spec)?;
    let k23 = k_even(dot(j.u2, j.nu23), spec)?;
    let c01 = lmul(j.l, j.div1 * dot(j.u1, j.tau01));
    let c03 = lmul(j.l, j.div3 * dot(j.u3, j.tau03));
    let c12 = lmul(j.l, (j.div1 + j.div2) * dot(j.u1, j.tau12));
    let c23 = lmul(j.l, (j.div2 + j.div3) * dot(j.u2, j.tau23));
    let comp = |c: usize| {
        half_k0 * (j.tau01[c] + j.tau03[c]) + k12 * j.tau12[c] + k23 * j.tau23[c]
            - (c01 * j.nu01[c] + c03 * j.nu03[c])
            + (c12 * j.nu12[c] + c23 * j.nu23[c])
    };
    Ok([comp(0), comp(1)])
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::range("k", 0.0, "[1, inf)"));
    }
    Ok(())
}

/// Half-angle of one symmetry sector, pi / (k + 1).
pub fn astroid_sector(k: u32) -> f64 {
    PI / (k as f64 + 1.0)
}

/// Interface point reached by the characteristic with foot angle `s` in the
/// first sector.
pub fn astroid_point(k: u32, s: f64) -> [f64; 2] {
    let kf = k as f64;
    let a = (kf + 1.0) * s;
    let t = a.sin() / (kf + 1.0);
    [s.cos() - t * (kf * s).sin(), s.sin() - t * (kf * s).cos()]
}

/// Boundary trace (-cos ks, sin ks) at foot angle `s`.
pub fn astroid_trace(k: u32, s: f64) -> [f64; 2] {
    let ks = k as f64 * s;
    [-ks.cos(), ks.sin()]
}

struct AstroidSamples {
    vertices: Vec<[f64; 2]>,
    params: Vec<f64>,
    theta: Vec<f64>,
    trace: Vec<[f64; 2]>,
}

fn astroid_samples(k: u32, samples: usize) -> Result<AstroidSamples> {
    check_k(k)?;
    let sectors = 2 * (k as usize + 1);
    let per = samples.div_ceil(sectors).max(8);
    let width = astroid_sector(k);
    let kf = k as f64;
    let cap = sectors * (per + 1);
    let mut out = AstroidSamples {
        vertices: Vec::with_capacity(cap),
        params: Vec::with_capacity(cap + 1),
        theta: Vec::with_capacity(cap),
        trace: Vec::with_capacity(cap),
    };
    for j in 0..sectors {
        let rot = j as f64 * width;
        let (sr, cr) = rot.sin_cos();
        let last = if j + 1 == sectors { per - 1 } else { per };
        for i in 0..=last {
            let s = width * i as f64 / per as f64;
            let p = astroid_point(k, s);
            out.vertices.push([cr * p[0] - sr * p[1], sr * p[0] + cr * p[1]]);
            out.params.push(rot + s);
            out.theta.push(PI - kf * s + rot);
            out.trace.push(astroid_trace(k, rot + s));
        }
    }
    out.params.push(2.0 * PI);
    Ok(out)
}

/// Closed interface of the astroid construction, counter-clockwise, with
/// about `samples` vertices. Each of the 2(k+1) sector pieces carries both
/// of its cusp endpoints, so interior cusp vertices appear twice; tangent
/// angles are exact.
pub fn astroid_interface(k: u32, samples: usize) -> Result<Curve> {
    let a = astroid_samples(k, samples)?;
    Ok(Curve::from_parametric(a.vertices, &a.params, true).with_tangent_angles(a.theta))
}

/// Limit field of the astroid construction at `x` in the closed unit disk:
/// zero on the island, otherwise the boundary trace carried along the
/// straight characteristic through `x`.
pub fn astroid_field(k: u32, x: [f64; 2]) -> Result<[f64; 2]> {
    Ok(astroid_foot(k, x)?.map_or([0.0, 0.0], |s| astroid_trace(k, s)))
}

/// Foot angle of the characteristic through `x`, or None on the island.
pub fn astroid_foot(k: u32, x: [f64; 2]) -> Result<Option<f64>> {
    check_k(k)?;
    let r = x[0].hypot(x[1]);
    if !(r <= 1.0 + 1e-12) {
        return Err(Error::range("|x|", r, "[0, 1]"));
    }
    let width = astroid_sector(k);
    let phi = x[1].atan2(x[0]).rem_euclid(2.0 * PI);
    if r >= 1.0 - 1e-14 {
        return Ok(Some(phi));
    }
    let sectors = 2 * (k as usize + 1);
    let j = ((phi / width).floor() as usize).min(sectors - 1);
    let rot = j as f64 * width;
    let (sr, cr) = rot.sin_cos();
    let y = [cr * x[0] + sr * x[1], -sr * x[0] + cr * x[1]];
    let kf = k as f64;

    let g = |s: f64| {
        let (ss, cs) = (kf * s).sin_cos();
        (y[0] - s.cos()) * cs - (y[1] - s.sin()) * ss
    };
    let arrival = |s: f64| {
        let (ss, cs) = (kf * s).sin_cos();
        (s.cos() - y[0]) * ss + (s.sin() - y[1]) * cs
    };
    let valid = |s: f64| {
        let t = arrival(s);
        let t_end = ((kf + 1.0) * s).sin() / (kf + 1.0);
        t >= -1e-12 && t <= t_end + 1e-12
    };

    const SCAN: usize = 512;
    let mut prev_s = 0.0;
    let mut prev_g = g(0.0);
    for i in 1..=SCAN {
        let s = width * i as f64 / SCAN as f64;
        let gs = g(s);
        let root = if prev_g == 0.0 {
            Some(prev_s)
        } else if prev_g * gs < 0.0 {
            let (mut a, mut b, mut ga) = (prev_s, s, prev_g);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                let gm = g(m);
                if gm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if ga * gm < 0.0 {
                    b = m;
                } else {
                    a = m;
                    ga = gm;
                }
            }
            Some(0.5 * (a + b))
        } else {
            None
        };
        if let Some(s0) = root {
            if valid(s0) {
                return Ok(Some(s0 + rot));
            }
        }
        prev_s = s;
        prev_g = gs;
    }
    if g(width) == 0.0 && valid(width) {
        return Ok(Some(width + rot));
    }
    Ok(None)
}

/// Area of the astroid island by the shoelace formula.
pub fn island_area(k: u32) -> Result<f64> {
    Ok(astroid_interface(k, 1 << 16)?.signed_area())
}

/// A region of the plane with its rule for u.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Isotropic {
        polygon: Vec<[f64; 2]>,
    },
    /// Nematic patch with constant u = (cos theta, sin theta).
    Constant {
        polygon: Vec<[f64; 2]>,
        theta: f64,
    },
    /// Nematic patch swept by characteristics; sample i runs for t in [0, t_end[i]].
    Characteristic {
        data: CharInitialData,
        t_end: Vec<f64>,
    },
}

/// A wall polyline; `trace1` lies on the side opposite the normal
/// (sin theta, -cos theta), `trace2` on the side it points to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub closed: bool,
    /// Exact tangent angles; chord estimates are used when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent_angles: Option<Vec<f64>>,
    pub trace1: Vec<[f64; 2]>,
    pub trace2: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div2: Option<Vec<f64>>,
}

/// An interface polyline with the nematic-side trace at each vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Interface {
    pub vertices: Vec<[f64; 2]>,
    #[serde(default)]
    pub closed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tangent_angles: Option<Vec<f64>>,
    pub trace: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub div: Option<Vec<f64>>,
}

/// Piecewise description of a limit state.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SharpConfig {
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub interfaces: Vec<Interface>,
    #[serde(default)]
    pub junctions: Vec<JunctionData>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct E0Breakdown {
    pub bulk: f64,
    pub perimeter: f64,
    pub wall: f64,
    pub total: f64,
}

fn build_curve(vertices: &[[f64; 2]], closed: bool, angles: &Option<Vec<f64>>, what: &str) -> Result<Curve> {
    if vertices.len() < 2 {
        return Err(Error::InvalidConfig(format!("{what} needs at least two vertices")));
    }
    if vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig(format!("{what} has a non-finite vertex")));
    }
    let c = Curve::from_points(vertices.to_vec(), closed);
    match angles {
        Some(a) if a.len() != vertices.len() => Err(Error::InvalidConfig(format!(
            "{what}: {} tangent angles for {} vertices",
            a.len(),
            vertices.len()
        ))),
        Some(a) => Ok(c.with_tangent_angles(a.clone())),
        None => Ok(c),
    }
}

fn is_unit(v: [f64; 2]) -> bool {
    (v[0].hypot(v[1]) - 1.0).abs() <= 1e-10
}

fn edge_lengths(c: &Curve) -> Vec<(usize, usize, f64)> {
    let n = c.len();
    let edges = if c.closed { n } else { n - 1 };
    (0..edges)
        .map(|i| {
            let (a, b) = (c.vertices[i], c.vertices[(i + 1) % n]);
            (i, (i + 1) % n, (b[0] - a[0]).hypot(b[1] - a[1]))
        })
        .collect()
}

impl Wall {
    pub fn curve(&self) -> Result<Curve> {
        build_curve(&self.vertices, self.closed, &self.tangent_angles, "wall")
    }

    /// Checks unit traces, equal normal components and opposite tangential
    /// components at every vertex; returns the curve and u.nu per vertex.
    pub fn validate(&self) -> Result<(Curve, Vec<f64>)> {
        let c = self.curve()?;
        let n = c.len();
        if self.trace1.len() != n || self.trace2.len() != n {
            return Err(Error::InvalidConfig("wall traces do not match its vertices".into()));
        }
        for d in [&self.div1, &self.div2].into_iter().flatten() {
            if d.len() != n {
                return Err(Error::InvalidConfig("wall divergences do not match its vertices".into()));
            }
        }
        let mut z = Vec::with_capacity(n);
        for i in 0..n {
            let (u1, u2) = (self.trace1[i], self.trace2[i]);
            if !is_unit(u1) || !is_unit(u2) {
                return Err(Error::InvalidConfig(format!("wall vertex {i}: trace is not a unit vector")));
            }
            let (nu, tau) = (c.normal(i), c.tangent(i));
            let (z1, z2) = (dot(u1, nu), dot(u2, nu));
            if (z1 - z2).abs() > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "wall vertex {i}: normal components differ ({z1} vs {z2})"
                )));
            }
            if (dot(u1, tau) + dot(u2, tau)).abs() > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "wall vertex {i}: tangential components are not opposite"
                )));
            }
            z.push(z1.clamp(-1.0, 1.0));
        }
        Ok((c, z))
    }
}

impl Interface {
    pub fn curve(&self) -> Result<Curve> {
        build_curve(&self.vertices, self.closed, &self.tangent_angles, "interface")
    }

    /// Checks unit tangent traces; returns the curve and u.tau per vertex.
    pub fn validate(&self) -> Result<(Curve, Vec<f64>)> {
        let c = self.curve()?;
        let n = c.len();
        if self.trace.len() != n {
            return Err(Error::InvalidConfig("interface traces do not match its vertices".into()));
        }
        if self.div.as_ref().is_some_and(|d| d.len() != n) {
            return Err(Error::InvalidConfig("interface divergences do not match its vertices".into()));
        }
        let mut orient = Vec::with_capacity(n);
        for i in 0..n {
            let u = self.trace[i];
            if !is_unit(u) {
                return Err(Error::InvalidConfig(format!("interface vertex {i}: trace is not a unit vector")));
            }
            let un = dot(u, c.normal(i));
            if un.abs() > 1e-8 {
                return Err(Error::InvalidConfig(format!(
                    "interface vertex {i}: trace not tangent (u.nu = {un:e})"
                )));
            }
            orient.push(dot(u, c.tangent(i)).signum());
        }
        Ok((c, orient))
    }
}

fn check_polygon(p: &[[f64; 2]]) -> Result<()> {
    if p.len() < 3 || p.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig("region polygon needs three finite vertices".into()));
    }
    Ok(())
}

/// (L/2) times the integral of v0^2 over the fan, in (s, t) coordinates.
fn fan_bulk(data: &CharInitialData, t_end: &[f64], l: f64) -> Result<f64> {
    if t_end.len() != data.len() || t_end.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidConfig("t_end must give one finite non-negative length per sample".into()));
    }
    if data.v0.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    if l.is_infinite() {
        return Err(Error::InvalidConfig(
            "a patch with non-zero divergence has infinite energy at L = inf".into(),
        ));
    }
    let fan = FanInterp::new(data)?;
    let mut inner = Vec::with_capacity(data.len());
    for i in 0..data.len() {
        let s = data.s[i];
        let v = data.v0[i];
        let jac = |t: f64| {
            let (_, th, _) = fan.point(s, t);
            let js = fan.d_ds(s, t);
            (js[0] * th.cos() + js[1] * th.sin()).abs()
        };
        let r = if t_end[i] > 0.0 { integrate(jac, 0.0, t_end[i], 1e-10)?.value } else { 0.0 };
        inner.push(v * v * r);
    }
    Ok(0.5 * l * crate::quadrature::trapezoid(&data.s, &inner))
}

/// E_0 of a piecewise configuration after checking its jump conditions.
/// Pass `f64::INFINITY` for the divergence-free energy E_0^inf.
pub fn e0_energy(config: &SharpConfig, l: f64, spec: &PotentialSpec) -> Result<E0Breakdown> {
    if !(l >= 0.0) {
        return Err(Error::range("L", l, "[0, inf]"));
    }
    let mut bulk = 0.0;
    for r in &config.regions {
        match r {
            Region::Isotropic { polygon } => check_polygon(polygon)?,
            Region::Constant { polygon, theta } => {
                check_polygon(polygon)?;
                if !theta.is_finite() {
                    return Err(Error::InvalidConfig("non-finite patch angle".into()));
                }
            }
            Region::Characteristic { data, t_end } => {
                data.validate()?;
                bulk += fan_bulk(data, t_end, l)?;
            }
        }
    }
    let half_k0 = 0.5 * wall_cost(0.0, spec)?;
    let mut perimeter = 0.0;
    for i in &config.interfaces {
        let (c, _) = i.validate()?;
        perimeter += half_k0 * c.length();
    }
    let mut wall = 0.0;
    for w in &config.walls {
        let (c, z) = w.validate()?;
        let k: Vec<f64> = z.iter().map(|&z| k_even(z, spec)).collect::<Result<_>>()?;
        wall += edge_lengths(&c)
            .iter()
            .map(|&(a, b, len)| 0.5 * (k[a] + k[b]) * len)
            .sum::<f64>();
    }
    for j in &config.junctions {
        j.validate()?;
    }
    Ok(E0Breakdown {
        bulk,
        perimeter,
        wall,
        total: bulk + perimeter + wall,
    })
}

impl SharpConfig {
    /// Union of two configurations describing disjoint pieces.
    pub fn merged(mut self, other: SharpConfig) -> Self {
        self.regions.extend(other.regions);
        self.walls.extend(other.walls);
        self.interfaces.extend(other.interfaces);
        self.junctions.extend(other.junctions);
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Largest |residual| of each criticality condition over a configuration.
/// Wall and interface conditions are local first variations at finite L only;
/// at L = infinity they stay `None` and only the junction balance is evaluated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct ResidualReport {
    pub wall_jump: Option<f64>,
    pub wall_evolution: Option<f64>,
    pub interface: Option<f64>,
    pub junction: Option<f64>,
}

/// Vertices within two samples of a cusp carry no curvature information.
fn cusp_window(c: &Curve) -> Vec<bool> {
    let n = c.len();
    let mut skip = vec![false; n];
    let mut mark = |i: usize| {
        for d in -2i64..=2 {
            let k = i as i64 + d;
            if c.closed {
                skip[k.rem_euclid(n as i64) as usize] = true;
            } else if k >= 0 && (k as usize) < n {
                skip[k as usize] = true;
            }
        }
    };
    for i in c.cusp_indices() {
        mark(i);
        // the duplicated vertex of a cusp sits right before the reported index
        mark((i + n - 1) % n);
    }
    if !c.closed {
        mark(0);
        mark(n - 1);
    }
    skip
}

fn fold_max(acc: Option<f64>, values: impl Iterator<Item = f64>) -> Option<f64> {
    values.fold(acc, |m, v| Some(m.map_or(v.abs(), |m: f64| m.max(v.abs()))))
}

/// Evaluates every criticality residual the configuration carries data for.
pub fn config_residuals(config: &SharpConfig, l: f64, lambda: f64, spec: &PotentialSpec) -> Result<ResidualReport> {
    let mut rep = ResidualReport::default();
    let finite = l.is_finite();
    for w in &config.walls {
        let (c, z) = w.validate()?;
        if !finite {
            continue;
        }
        let n = c.len();
        let zeros = vec![0.0; n];
        let d1 = w.div1.as_ref().unwrap_or(&zeros);
        let d2 = w.div2.as_ref().unwrap_or(&zeros);
        let jumps: Vec<f64> = (0..n)
            .map(|i| wall_jump_residual(z[i], d1[i], d2[i], l, spec))
            .collect::<Result<_>>()?;
        rep.wall_jump = fold_max(rep.wall_jump, jumps.into_iter());
        let samples = WallSamples {
            s: c.arclength(),
            div1: d1.clone(),
            div2: d2.clone(),
            u1_tau: (0..n).map(|i| dot(w.trace1[i], c.tangent(i))).collect(),
            kappa: c.curvature.clone(),
            u_dot_nu: z,
        };
        let skip = cusp_window(&c);
        let ev = wall_evolution_residual(&samples, l, spec)?;
        rep.wall_evolution = fold_max(rep.wall_evolution, ev.into_iter().zip(&skip).filter(|(_, s)| !**s).map(|(v, _)| v));
    }
    for i in &config.interfaces {
        let (c, orient) = i.validate()?;
        if !finite {
            continue;
        }
        let n = c.len();
        let zeros = vec![0.0; n];
        let div = i.div.as_ref().unwrap_or(&zeros);
        let res = interface_residual(&c.arclength(), div, &orient, &c.curvature, lambda, l, spec)?;
        let skip = cusp_window(&c);
        rep.interface = fold_max(rep.interface, res.into_iter().zip(&skip).filter(|(_, s)| !**s).map(|(v, _)| v));
    }
    for j in &config.junctions {
        let r = junction_residual(j, spec)?;
        rep.junction = fold_max(rep.junction, std::iter::once(r[0].hypot(r[1])));
    }
    Ok(rep)
}

/// The astroid construction as a configuration: one closed interface with
/// exact tangents and the boundary traces carried to it.
pub fn astroid_config(k: u32, samples: usize) -> Result<SharpConfig> {
    let a = astroid_samples(k, samples)?;
    Ok(SharpConfig {
        regions: vec![Region::Isotropic {
            polygon: a.vertices.clone(),
        }],
        walls: vec![],
        interfaces: vec![Interface {
            vertices: a.vertices,
            closed: true,
            tangent_angles: Some(a.theta),
            trace: a.trace,
            div: None,
        }],
        junctions: vec![],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_and_arc_spot_values() {
        let (p, th) = trace_characteristic([0.0, 0.0], 0.0, 0.0, 1.0);
        assert_eq!((p, th), ([0.0, 1.0], 0.0));
        let (p, th) = trace_characteristic([0.0, 0.0], 0.0, 1.0, PI / 2.0);
        assert!((p[0] + 1.0).abs() < 1e-12 && (p[1] - 1.0).abs() < 1e-12);
        assert!((th - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn astroid_first_sector_is_classical() {
        for i in 0..=100 {
            let s = 0.5 * PI * i as f64 / 100.0;
            let p = astroid_point(1, s);
            assert!((p[0] - s.cos().powi(3)).abs() < 1e-14);
            assert!((p[1] - s.sin().powi(3)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_on_circle_is_trace() {
        let s: f64 = 0.3;
        let u = astroid_field(2, [s.cos(), s.sin()]).unwrap();
        let e = astroid_trace(2, s);
        assert!((u[0] - e[0]).abs() < 1e-12 && (u[1] - e[1]).abs() < 1e-12);
        assert_eq!(astroid_field(2, [0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert!(astroid_field(1, [1.0, 0.5]).is_err());
    }

    #[test]
    fn derivative_is_exact_for_quadratics() {
        let s = [0.0, 0.1, 0.35, 0.5, 0.9];
        let f: Vec<f64> = s.iter().map(|x| 3.0 * x * x - x + 2.0).collect();
        let d = derivative(&s, &f);
        for (x, di) in s.iter().zip(d) {
            assert!((di - (6.0 * x - 1.0)).abs() < 1e-12);
        }
    }
}
