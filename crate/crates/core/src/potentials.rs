//! Radial potentials W(u) = V(|u|) and the quantities derived from them:
//! the interface constant c0, the wall cost K(z), its derivative, the
//! cumulative function H(v) and one-dimensional heteroclinic profiles.

use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::GaussLegendre;

use crate::error::{Error, Result};
use crate::interp::MonotoneCubic;
use crate::quadrature::{integrate_with, ABS_FLOOR};

/// Relative tolerance used for every adaptive integral in this module.
const REL_TOL: f64 = 1e-12;
/// Below this half-width the generic wall-cost integrand is frozen (see `scaled_sqrt_v`).
const B_FLOOR: f64 = 1e-4;
const FIXED_NODES: usize = 48;

fn fixed_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(FIXED_NODES).unwrap()))
}

/// Sampled potential V(t) on `[0, t_max]`, interpolated through sqrt(V).
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedPotential {
    ts: Vec<f64>,
    vs: Vec<f64>,
    root: MonotoneCubic,
}

impl TabulatedPotential {
    pub fn new(ts: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        if ts.len() < 4 || ts.len() != vs.len() {
            return Err(Error::InvalidPotential(
                "table needs at least four (t, V) pairs of equal length".into(),
            ));
        }
        if ts[0] != 0.0 {
            return Err(Error::InvalidPotential("table must start at t = 0".into()));
        }
        let t_max = *ts.last().unwrap();
        if t_max < 1.5 {
            return Err(Error::InvalidPotential(format!(
                "table must extend to t >= 1.5, ends at {t_max}"
            )));
        }
        if vs.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidPotential("V must be finite and nonnegative".into()));
        }
        let roots: Vec<f64> = vs.iter().map(|v| v.sqrt()).collect();
        let root = MonotoneCubic::new(ts.clone(), roots)?;
        let table = Self { ts, vs, root };
        let v0 = table.v(0.0);
        let v1 = table.v(1.0);
        if v0.abs() > 1e-12 || v1.abs() > 1e-12 {
            return Err(Error::InvalidPotential(format!(
                "V must vanish at 0 and 1 (V(0) = {v0:e}, V(1) = {v1:e})"
            )));
        }
        if let Some((t, _)) = table
            .ts
            .iter()
            .zip(&table.vs)
            .find(|(t, v)| (**t - 1.0).abs() > 1e-12 && **t > 0.0 && **v <= 0.0)
        {
            return Err(Error::InvalidPotential(format!(
                "V must be positive away from 0 and 1, vanishes at t = {t}"
            )));
        }
        Ok(table)
    }

    /// Samples `v` on `n` uniform points of `[0, t_max]`.
    pub fn from_fn(v: impl Fn(f64) -> f64, t_max: f64, n: usize) -> Result<Self> {
        let ts: Vec<f64> = (0..n)
            .map(|i| t_max * i as f64 / (n - 1) as f64)
            .collect();
        let vs = ts.iter().map(|&t| v(t)).collect();
        Self::new(ts, vs)
    }

    pub fn t_max(&self) -> f64 {
        self.root.x_max()
    }

    pub fn samples(&self) -> (&[f64], &[f64]) {
        (&self.ts, &self.vs)
    }

    fn sqrt_v(&self, t: f64) -> f64 {
        self.root.eval(t).max(0.0)
    }

    fn sqrt_v_with_derivative(&self, t: f64) -> (f64, f64) {
        let (s, ds) = self.root.eval_with_derivative(t);
        (s.max(0.0), ds)
    }

    fn v(&self, t: f64) -> f64 {
        let s = self.sqrt_v(t);
        s * s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// V(t) = t^2 (t^2 - 1)^2.
    ChernSimonsHiggs,
    Tabulated(TabulatedPotential),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    pub kind: PotentialKind,
    /// Positive multiplier on V.
    pub scale: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        Self::csh()
    }
}

impl PotentialSpec {
    pub fn csh() -> Self {
        Self {
            kind: PotentialKind::ChernSimonsHiggs,
            scale: 1.0,
        }
    }

    pub fn tabulated(table: TabulatedPotential) -> Self {
        Self {
            kind: PotentialKind::Tabulated(table),
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::range("scale", scale, "(0, inf)"));
        }
        self.scale = scale;
        Ok(self)
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PotentialKind::ChernSimonsHiggs => "csh",
            PotentialKind::Tabulated(_) => "tabulated",
        }
    }

    fn check_t(&self, t: f64) -> Result<()> {
        let upper = match &self.kind {
            PotentialKind::ChernSimonsHiggs => f64::INFINITY,
            PotentialKind::Tabulated(tab) => tab.t_max(),
        };
        if !(t >= 0.0 && t <= upper) {
            return Err(Error::range("t", t, format!("[0, {upper}]")));
        }
        Ok(())
    }

    /// sqrt(V(t)) without range checks; tables clamp to their range.
    pub(crate) fn sqrt_v(&self, t: f64) -> f64 {
        let s = match &self.kind {
            PotentialKind::ChernSimonsHiggs => t * (1.0 - t * t).abs(),
            PotentialKind::Tabulated(tab) => tab.sqrt_v(t),
        };
        self.scale.sqrt() * s
    }

    /// Derivative of sqrt(V) at `t`.
    pub(crate) fn sqrt_v_derivative(&self, t: f64) -> f64 {
        let d = match &self.kind {
            PotentialKind::ChernSimonsHiggs => {
                let inner = 1.0 - 3.0 * t * t;
                if t <= 1.0 {
                    inner
                } else {
                    -inner
                }
            }
            PotentialKind::Tabulated(tab) => tab.sqrt_v_with_derivative(t).1,
        };
        self.scale.sqrt() * d
    }

    /// Wall-cost integrand sqrt(V(r)) / b^2 with r = sqrt(z^2 + b^2 s^2) and
    /// b = sqrt(1 - z^2). For CSH the factor 1 - r^2 = b^2 (1 - s^2) is
    /// cancelled analytically so the expression stays exact as b -> 0.
    fn scaled_sqrt_v(&self, z: f64, b: f64, s: f64) -> f64 {
        let r = (z * z + b * b * s * s).sqrt();
        match &self.kind {
            PotentialKind::ChernSimonsHiggs => self.scale.sqrt() * r * (1.0 - s * s),
            PotentialKind::Tabulated(_) => {
                let bb = b.max(B_FLOOR);
                let r = (z * z + bb * bb * s * s).sqrt().min(1.0 - 0.5 * bb * bb * (1.0 - s * s));
                self.sqrt_v(r) / (bb * bb)
            }
        }
    }

    fn adaptive_budget(&self) -> usize {
        match self.kind {
            PotentialKind::ChernSimonsHiggs => 4000,
            PotentialKind::Tabulated(_) => 200_000,
        }
    }

    fn adaptive(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, rel: f64) -> Result<f64> {
        Ok(integrate_with(f, a, b, rel, ABS_FLOOR, self.adaptive_budget())?.value)
    }
}

/// V(t) for `t >= 0` (and `t <= t_max` for tables).
pub fn eval_v(t: f64, spec: &PotentialSpec) -> Result<f64> {
    spec.check_t(t)?;
    Ok(match &spec.kind {
        PotentialKind::ChernSimonsHiggs => {
            let w = t * t - 1.0;
            spec.scale * t * t * w * w
        }
        PotentialKind::Tabulated(tab) => spec.scale * tab.v(t),
    })
}

/// Gradient of W(u) = V(|u|) with respect to u; zero at the origin.
pub fn eval_w_grad(u: [f64; 2], spec: &PotentialSpec) -> [f64; 2] {
    match &spec.kind {
        PotentialKind::ChernSimonsHiggs => {
            let m2 = u[0] * u[0] + u[1] * u[1];
            let c = 2.0 * spec.scale * (m2 - 1.0) * (3.0 * m2 - 1.0);
            [c * u[0], c * u[1]]
        }
        PotentialKind::Tabulated(tab) => {
            let m = u[0].hypot(u[1]);
            if m == 0.0 {
                return [0.0, 0.0];
            }
            let (s, ds) = tab.sqrt_v_with_derivative(m.min(tab.t_max()));
            let c = 2.0 * spec.scale * s * ds / m;
            [c * u[0], c * u[1]]
        }
    }
}

/// c0 = integral of sqrt(V) over [0, 1].
pub fn modica_mortola_constant(spec: &PotentialSpec) -> Result<f64> {
    spec.adaptive(|t| spec.sqrt_v(t), 0.0, 1.0, REL_TOL)
}

fn check_unit(what: &'static str, z: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::range(what, z, "[0, 1]"));
    }
    Ok(())
}

fn half_chord(z: f64) -> f64 {
    ((1.0 - z) * (1.0 + z)).max(0.0).sqrt()
}

/// K(z) = integral of sqrt(V(sqrt(z^2 + y^2))) over |y| <= sqrt(1 - z^2).
pub fn wall_cost(z: f64, spec: &PotentialSpec) -> Result<f64> {
    check_unit("z", z)?;
    wall_cost_chord(z, half_chord(z), spec)
}

fn wall_cost_chord(z: f64, b: f64, spec: &PotentialSpec) -> Result<f64> {
    if b == 0.0 {
        return Ok(0.0);
    }
    let inner = spec.adaptive(|s| spec.scaled_sqrt_v(z, b, s), 0.0, 1.0, REL_TOL)?;
    Ok(2.0 * b * b * b * inner)
}

/// K(z) by a fixed Gauss–Legendre rule: a smooth function of `z`, suited to
/// finite differencing. Accurate to round-off for CSH.
pub fn wall_cost_smooth(z: f64, spec: &PotentialSpec) -> f64 {
    let z = z.clamp(0.0, 1.0);
    let b = half_chord(z);
    2.0 * b * b * b * fixed_rule().integrate(0.0, 1.0, |s| spec.scaled_sqrt_v(z, b, s))
}

/// K(sin phi) / cos(phi) by the fixed rule, written so that it is smooth
/// and even in cos(phi) through phi = pi/2.
pub(crate) fn wall_cost_over_cos(phi: f64, spec: &PotentialSpec) -> f64 {
    let (z, b) = phi.sin_cos();
    let b = b.abs();
    2.0 * b * b * fixed_rule().integrate(0.0, 1.0, |s| spec.scaled_sqrt_v(z, b, s))
}

/// H(1) - H(sin phi0) by the fixed rule on [phi0, pi/2]; the integrand is
/// even about pi/2, so the result extends smoothly (and oddly) past it.
pub(crate) fn h_tail_angle(phi0: f64, spec: &PotentialSpec) -> f64 {
    fixed_rule().integrate(phi0, std::f64::consts::FRAC_PI_2, |phi| h_integrand(phi, spec))
}

/// K'(z), differentiating under the integral sign (the endpoint terms vanish
/// because V is zero on the unit circle).
pub fn wall_cost_derivative(z: f64, spec: &PotentialSpec) -> Result<f64> {
    check_unit("z", z)?;
    let b = half_chord(z);
    if b == 0.0 || z == 0.0 {
        return Ok(0.0);
    }
    let integrand = |s: f64| {
        let r = (z * z + b * b * s * s).sqrt();
        spec.sqrt_v_derivative(r) * z / r
    };
    Ok(2.0 * b * spec.adaptive(integrand, 0.0, 1.0, REL_TOL)?)
}

/// Integrand of H after the substitution w = sin(phi):
/// K(sin phi) / cos^3 phi, finite at phi = pi/2.
fn h_integrand(phi: f64, spec: &PotentialSpec) -> f64 {
    let z = phi.sin().min(1.0);
    let b = phi.cos().abs();
    let g = |s: f64| spec.scaled_sqrt_v(z, b, s);
    let inner = match spec.kind {
        PotentialKind::ChernSimonsHiggs => fixed_rule().integrate(0.0, 1.0, g),
        PotentialKind::Tabulated(_) => spec.adaptive(g, 0.0, 1.0, 1e-10).unwrap_or(f64::NAN),
    };
    2.0 * inner
}

/// Rejects potentials whose wall cost decays too slowly at z = 1 for H to be finite.
fn check_decay(spec: &PotentialSpec) -> Result<()> {
    if matches!(spec.kind, PotentialKind::ChernSimonsHiggs) {
        return Ok(());
    }
    let k1 = wall_cost_chord((1.0f64 - 0.01).sqrt(), 0.1, spec)?;
    let k2 = wall_cost_chord((1.0f64 - 0.04).sqrt(), 0.2, spec)?;
    if k1 <= 0.0 {
        return Ok(());
    }
    let exponent = (k2 / k1).log2();
    if exponent < 2.25 {
        return Err(Error::UnsupportedPotential(format!(
            "K(z) decays like (1 - z^2)^{:.3} near z = 1; H needs an exponent above 1",
            exponent / 2.0
        )));
    }
    Ok(())
}

/// H(v) = integral over [0, v] of K(w) / (1 - w^2)^2.
pub fn h_cumulative(v: f64, spec: &PotentialSpec) -> Result<f64> {
    check_unit("v", v)?;
    check_decay(spec)?;
    h_between(0.0, v.asin(), spec)
}

fn h_between(phi0: f64, phi1: f64, spec: &PotentialSpec) -> Result<f64> {
    let r = integrate_with(
        |phi| h_integrand(phi, spec),
        phi0,
        phi1,
        REL_TOL,
        ABS_FLOOR,
        spec.adaptive_budget(),
    )?;
    if !r.value.is_finite() {
        return Err(Error::Quadrature {
            achieved: f64::INFINITY,
            requested: REL_TOL,
        });
    }
    Ok(r.value)
}

/// H(1) - H(v) by the fixed rule on [asin v, pi/2]; smooth in `v`.
pub fn h_tail_smooth(v: f64, spec: &PotentialSpec) -> f64 {
    h_tail_angle(v.clamp(0.0, 1.0).asin(), spec)
}

/// Location of the interior maximum of K, from the sign change of K'.
pub fn wall_cost_argmax(spec: &PotentialSpec) -> Result<f64> {
    const SCAN: usize = 400;
    let kp = |z: f64| wall_cost_derivative(z, spec);
    let mut lo = None;
    let mut prev = kp(1.0 / SCAN as f64)?;
    for i in 2..SCAN {
        let z = i as f64 / SCAN as f64;
        let cur = kp(z)?;
        if prev > 0.0 && cur <= 0.0 {
            lo = Some(((i - 1) as f64 / SCAN as f64, z));
            break;
        }
        prev = cur;
    }
    let (mut a, mut b) = lo.ok_or_else(|| Error::RootNotFound {
        message: "K' has no sign change on (0, 1)".into(),
        table: Vec::new(),
    })?;
    while b - a > 1e-15 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if kp(m)? > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Tabulated K, K', H on a uniform z grid together with c0 and z_star.
#[derive(Debug, Clone)]
pub struct WallCostTable {
    pub z_samples: Vec<f64>,
    pub k_values: Vec<f64>,
    pub kp_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub c0: f64,
    pub z_star: f64,
}

impl WallCostTable {
    pub fn build(spec: &PotentialSpec, samples: usize) -> Result<Self> {
        if samples < 2 {
            return Err(Error::range("samples", samples as f64, "[2, inf)"));
        }
        check_decay(spec)?;
        let z_samples: Vec<f64> = (0..samples)
            .map(|i| i as f64 / (samples - 1) as f64)
            .collect();
        let k_values = z_samples
            .iter()
            .map(|&z| wall_cost(z, spec))
            .collect::<Result<Vec<_>>>()?;
        let kp_values = z_samples
            .iter()
            .map(|&z| wall_cost_derivative(z, spec))
            .collect::<Result<Vec<_>>>()?;
        let mut h_values = Vec::with_capacity(samples);
        let mut acc = 0.0;
        h_values.push(0.0);
        for w in z_samples.windows(2) {
            acc += h_between(w[0].asin(), w[1].asin(), spec)?;
            h_values.push(acc);
        }
        Ok(Self {
            z_samples,
            k_values,
            kp_values,
            h_values,
            c0: modica_mortola_constant(spec)?,
            z_star: wall_cost_argmax(spec)?,
        })
    }
}

/// Smallest c with min(t^2, |1 - t^2|) <= c sqrt(V(t)) on `n` points of
/// `[0, t_max]`; points where both sides vanish are skipped.
pub fn hat_constant(spec: &PotentialSpec, t_max: f64, n: usize) -> Result<f64> {
    let mut c: f64 = 0.0;
    for i in 0..n {
        let t = t_max * i as f64 / (n - 1) as f64;
        let lhs = (t * t).min((1.0 - t * t).abs());
        let rhs = eval_v(t, spec)?.sqrt();
        if lhs == 0.0 {
            continue;
        }
        if rhs == 0.0 {
            return Ok(f64::INFINITY);
        }
        c = c.max(lhs / rhs);
    }
    Ok(c)
}

/// Odd one-dimensional wall profile f(t) for fixed normal component `a`.
#[derive(Debug, Clone)]
pub struct HeteroclinicProfile {
    pub a: f64,
    pub t: Vec<f64>,
    pub f: Vec<f64>,
    /// Integral of sqrt(V(sqrt(a^2 + f^2))) f' over the sampled window.
    pub energy: f64,
}

/// Starting offset used when sqrt(V(a)) = 0, where f = 0 is itself an
/// equilibrium of the first-order equation (only a = 0 for admissible V).
const SEED: f64 = 1e-9;
const RK_STEP: f64 = 2e-3;

/// Minimizer of the integral of V(sqrt(f^2 + a^2)) + f'^2 with
/// f(-inf) = -sqrt(1 - a^2), f(inf) = sqrt(1 - a^2), built from the first
/// integral f' = sqrt(V(sqrt(a^2 + f^2))) with f(0) = 0.
pub fn heteroclinic_profile(
    a: f64,
    spec: &PotentialSpec,
    half_width: f64,
    samples: usize,
) -> Result<HeteroclinicProfile> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::range("a", a, "[0, 1)"));
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(Error::range("half_width", half_width, "(0, inf)"));
    }
    if samples < 3 {
        return Err(Error::range("samples", samples as f64, "[3, inf)"));
    }
    let n = samples;
    let t: Vec<f64> = (0..n)
        .map(|j| half_width * (2.0 * j as f64 - (n - 1) as f64) / (n - 1) as f64)
        .collect();
    if a == 1.0 {
        return Ok(HeteroclinicProfile {
            a,
            t,
            f: vec![0.0; n],
            energy: 0.0,
        });
    }
    let rhs = |f: f64| spec.sqrt_v((a * a + f * f).sqrt());
    let mut f = vec![0.0; n];
    let mid = (n - 1) / 2;
    let first_positive = if n % 2 == 1 { mid + 1 } else { n / 2 };
    let mut y = if rhs(0.0) == 0.0 { SEED } else { 0.0 };
    let mut s = 0.0;
    for j in first_positive..n {
        let target = t[j];
        let steps = ((target - s) / RK_STEP).ceil().max(1.0) as usize;
        let h = (target - s) / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(y);
            let k2 = rhs(y + 0.5 * h * k1);
            let k3 = rhs(y + 0.5 * h * k2);
            let k4 = rhs(y + h * k3);
            y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        s = target;
        f[j] = y;
        f[n - 1 - j] = -y;
    }
    let top = f[n - 1];
    let energy = 2.0 * spec.adaptive(rhs, 0.0, top, REL_TOL)?;
    Ok(HeteroclinicProfile { a, t, f, energy })
}
