//! One-dimensional reduction on [-H, H] with u(+-H) = (+-sqrt(1 - a^2), a):
//! the discrete energy and its flow, the limit energy and its minimizers.

use crate::error::{Error, Result};
use crate::potentials::{
    eval_w_grad, heteroclinic_profile, modica_mortola_constant, wall_cost, wall_cost_smooth,
    PotentialSpec,
};
use crate::quadrature::pairwise_sum;

/// Samples of (u1, u2) on a uniform grid of [-H, H], endpoints included.
#[derive(Debug, Clone, PartialEq)]
pub struct OneDProfile {
    pub half_length: f64,
    pub y: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl OneDProfile {
    pub fn from_fn(half_length: f64, nodes: usize, f: impl Fn(f64) -> [f64; 2]) -> Self {
        let y: Vec<f64> = (0..nodes)
            .map(|i| half_length * (2.0 * i as f64 / (nodes - 1) as f64 - 1.0))
            .collect();
        let (u1, u2) = y.iter().map(|&t| {
            let v = f(t);
            (v[0], v[1])
        }).unzip();
        Self {
            half_length,
            y,
            u1,
            u2,
        }
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / (self.y.len() - 1) as f64
    }

    /// Linear interpolation at `y` (clamped to [-H, H]).
    pub fn sample(&self, y: f64) -> [f64; 2] {
        let n = self.y.len();
        let p = ((y + self.half_length) / self.spacing()).clamp(0.0, (n - 1) as f64);
        let i = (p.floor() as usize).min(n - 2);
        let t = p - i as f64;
        [
            (1.0 - t) * self.u1[i] + t * self.u1[i + 1],
            (1.0 - t) * self.u2[i] + t * self.u2[i + 1],
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OneDStructure {
    /// Wall at y = 0 where u2 = m; u2 linear from a to m on each side.
    SingleWall { m: f64 },
    /// Isotropic plateau on [-y0, y0] bounded by two interfaces (a = 0 only).
    TwoInterface { y0: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OneDLimitState {
    pub a: f64,
    pub structure: OneDStructure,
    pub energy: f64,
    /// Set when a single wall attains the same energy (resolved toward two interfaces).
    pub tie: bool,
}

impl OneDLimitState {
    /// Sharp limit profile at `y`.
    pub fn limit_value(&self, y: f64, half_length: f64) -> [f64; 2] {
        match self.structure {
            OneDStructure::SingleWall { m } => {
                let u2 = m + (self.a - m) * y.abs() / half_length;
                let u1 = (1.0 - u2 * u2).max(0.0).sqrt();
                [if y < 0.0 { -u1 } else { u1 }, u2]
            }
            OneDStructure::TwoInterface { y0 } => {
                if y.abs() <= y0 {
                    [0.0, 0.0]
                } else {
                    [y.signum(), 0.0]
                }
            }
        }
    }
}

fn check_params(a: f64, h: f64, l: f64) -> Result<()> {
    if !(0.0..1.0).contains(&a) {
        return Err(Error::range("a", a, "a in [0,1)"));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::range("H", h, "(0, inf)"));
    }
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::range("L", l, "[0, inf)"));
    }
    Ok(())
}

/// Single-wall objective g(m) = L (m - a)^2 / H + K(m).
pub fn single_wall_objective(m: f64, a: f64, h: f64, l: f64, spec: &PotentialSpec) -> Result<f64> {
    Ok(l * (m - a) * (m - a) / h + wall_cost(m, spec)?)
}

/// Limit energy of a candidate structure.
pub fn gamma_energy_1d(
    structure: OneDStructure,
    a: f64,
    h: f64,
    l: f64,
    spec: &PotentialSpec,
) -> Result<f64> {
    check_params(a, h, l)?;
    match structure {
        OneDStructure::SingleWall { m } => {
            if !(m >= a && m <= 1.0) {
                return Err(Error::InvalidConfig(format!(
                    "single wall needs m in [a, 1] = [{a}, 1], got {m}"
                )));
            }
            single_wall_objective(m, a, h, l, spec)
        }
        OneDStructure::TwoInterface { y0 } => {
            if a != 0.0 {
                return Err(Error::InvalidConfig(
                    "two interfaces are admissible only for a = 0".into(),
                ));
            }
            if !(0.0..h).contains(&y0) {
                return Err(Error::InvalidConfig(format!(
                    "plateau half-width {y0} outside [0, {h})"
                )));
            }
            Ok(2.0 * modica_mortola_constant(spec)?)
        }
    }
}

const SCAN_POINTS: usize = 10_000;
const GOLDEN_TOL: f64 = 1e-10;

fn golden_section(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while hi - lo > GOLDEN_TOL {
        if fc <= fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c)?;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Minimizer of the limit energy over the single-wall family (and the
/// two-interface state when a = 0).
///
/// g is scanned on 10^4 points of [a, 1]; golden-section search then refines
/// either the whole interval (when the scan shows a single local minimum) or
/// the bracket around the best scan point.
pub fn gamma_minimizer(a: f64, h: f64, l: f64, spec: &PotentialSpec) -> Result<OneDLimitState> {
    check_params(a, h, l)?;
    if !(l > 0.0) {
        return Err(Error::range("L", l, "(0, inf)"));
    }
    let grid: Vec<f64> = (0..SCAN_POINTS)
        .map(|i| a + (1.0 - a) * i as f64 / (SCAN_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&m| l * (m - a) * (m - a) / h + wall_cost_smooth(m, spec))
        .collect();
    let local_minima = (0..SCAN_POINTS)
        .filter(|&i| {
            let left = i == 0 || values[i] <= values[i - 1];
            let right = i == SCAN_POINTS - 1 || values[i] <= values[i + 1];
            left && right
        })
        .count();
    let best = values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))
        .map(|(i, _)| i)
        .unwrap();
    let (lo, hi) = if local_minima == 1 {
        (a, 1.0)
    } else {
        (grid[best.saturating_sub(1)], grid[(best + 1).min(SCAN_POINTS - 1)])
    };
    let objective = |m: f64| single_wall_objective(m, a, h, l, spec);
    let mut m = golden_section(objective, lo, hi)?;
    let mut energy = objective(m)?;
    // golden section never evaluates the end points themselves
    for end in [lo, hi] {
        let e = objective(end)?;
        if e < energy {
            m = end;
            energy = e;
        }
    }

    if a == 0.0 {
        let two = 2.0 * modica_mortola_constant(spec)?;
        if two <= energy + 1e-12 * two {
            return Ok(OneDLimitState {
                a,
                structure: OneDStructure::TwoInterface { y0: 0.5 * h },
                energy: two,
                tie: (two - energy).abs() <= 1e-12 * two,
            });
        }
    }
    Ok(OneDLimitState {
        a,
        structure: OneDStructure::SingleWall { m },
        energy,
        tie: false,
    })
}

/// L/H above which a = 0 selects two interfaces, located by bisection.
pub fn regime_threshold(spec: &PotentialSpec) -> Result<f64> {
    let two_interfaces = |ratio: f64| -> Result<bool> {
        Ok(matches!(
            gamma_minimizer(0.0, 1.0, ratio, spec)?.structure,
            OneDStructure::TwoInterface { .. }
        ))
    };
    let (mut lo, mut hi) = (1e-3, 1.0);
    while two_interfaces(hi)? == false {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::RootNotFound {
                message: "no two-interface regime found".into(),
                table: Vec::new(),
            });
        }
    }
    if two_interfaces(lo)? {
        return Err(Error::RootNotFound {
            message: "two interfaces selected even for tiny L/H".into(),
            table: Vec::new(),
        });
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if two_interfaces(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn potential_density(u: [f64; 2], spec: &PotentialSpec) -> f64 {
    let m = u[0].hypot(u[1]);
    let s = spec.sqrt_v(m);
    s * s
}

/// Discrete (1/2) integral of W/eps + eps |u'|^2 + L (u2')^2: W at the nodes
/// (trapezoid weights), derivatives on the cells.
pub fn energy_eps_1d(profile: &OneDProfile, eps: f64, l: f64, spec: &PotentialSpec) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::range("eps", eps, "(0, inf)"));
    }
    let parts = energy_parts_1d(profile, eps, l, spec);
    Ok(parts.0 + parts.1 + parts.2)
}

/// (potential, gradient, divergence) terms of `energy_eps_1d`.
pub fn energy_parts_1d(profile: &OneDProfile, eps: f64, l: f64, spec: &PotentialSpec) -> (f64, f64, f64) {
    let n = profile.y.len();
    let h = profile.spacing();
    let pot: Vec<f64> = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            w * h * potential_density([profile.u1[i], profile.u2[i]], spec) / (2.0 * eps)
        })
        .collect();
    let grad: Vec<f64> = (0..n - 1)
        .map(|i| {
            let d1 = profile.u1[i + 1] - profile.u1[i];
            let d2 = profile.u2[i + 1] - profile.u2[i];
            0.5 * eps * (d1 * d1 + d2 * d2) / h
        })
        .collect();
    let div: Vec<f64> = (0..n - 1)
        .map(|i| {
            let d2 = profile.u2[i + 1] - profile.u2[i];
            0.5 * l * d2 * d2 / h
        })
        .collect();
    (pairwise_sum(&pot), pairwise_sum(&grad), pairwise_sum(&div))
}

#[derive(Debug, Clone)]
pub enum OneDInit {
    /// Limit minimizer with the jump replaced by a tanh layer of width eps.
    MollifiedMinimizer,
    /// u1 linear between the boundary values, u2 = a.
    Linear,
    Profile(OneDProfile),
}

#[derive(Debug, Clone, Copy)]
pub struct OneDSolverOptions {
    /// Cells per eps.
    pub cells_per_eps: f64,
    /// Time step as a multiple of eps (at most 0.2).
    pub dt_over_eps: f64,
    pub max_steps: usize,
    pub stop_tol: f64,
}

impl Default for OneDSolverOptions {
    fn default() -> Self {
        Self {
            cells_per_eps: 8.0,
            dt_over_eps: 0.2,
            max_steps: 2_000_000,
            stop_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OneDRun {
    pub profile: OneDProfile,
    pub steps: usize,
    pub converged: bool,
    pub final_rate: f64,
    /// (step, energy) every 100 steps and at the end.
    pub energy_history: Vec<(usize, f64)>,
}

/// Solves (I - dt c D2) x = rhs with homogeneous Dirichlet ends folded into rhs.
fn solve_tridiagonal(diag: f64, off: f64, rhs: &mut [f64], scratch: &mut [f64]) {
    let n = rhs.len();
    scratch[0] = off / diag;
    rhs[0] /= diag;
    for i in 1..n {
        let denom = diag - off * scratch[i - 1];
        scratch[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}

/// Gradient flow of `energy_eps_1d` to stationarity. Diffusion is implicit
/// and the potential explicit, so dt <= 0.2 eps is the only step restriction.
pub fn relax_1d(
    a: f64,
    half_length: f64,
    eps: f64,
    l: f64,
    spec: &PotentialSpec,
    init: &OneDInit,
    options: &OneDSolverOptions,
) -> Result<OneDRun> {
    check_params(a, half_length, l)?;
    if !(eps > 0.0) {
        return Err(Error::range("eps", eps, "(0, inf)"));
    }
    if !(options.dt_over_eps > 0.0 && options.dt_over_eps <= 0.2) {
        return Err(Error::range("dt / eps", options.dt_over_eps, "(0, 0.2]"));
    }
    let b = (1.0 - a * a).sqrt();
    let cells = ((2.0 * half_length / eps) * options.cells_per_eps).ceil().max(8.0) as usize;
    let nodes = cells + 1;
    let mut profile = match init {
        OneDInit::Profile(p) => {
            if p.y.len() != nodes || p.half_length != half_length {
                OneDProfile::from_fn(half_length, nodes, |y| p.sample(y))
            } else {
                p.clone()
            }
        }
        OneDInit::Linear => OneDProfile::from_fn(half_length, nodes, |y| [b * y / half_length, a]),
        OneDInit::MollifiedMinimizer => {
            let state = gamma_minimizer(a, half_length, l, spec)?;
            OneDProfile::from_fn(half_length, nodes, |y| {
                let v = state.limit_value(y, half_length);
                match state.structure {
                    OneDStructure::SingleWall { .. } => {
                        [v[0].abs() * (y / eps).tanh(), v[1]]
                    }
                    OneDStructure::TwoInterface { y0 } => {
                        let s = 0.5 * (1.0 + ((y.abs() - y0) / eps).tanh());
                        [y.signum() * s, 0.0]
                    }
                }
            })
        }
    };
    profile.u1[0] = -b;
    profile.u2[0] = a;
    profile.u1[nodes - 1] = b;
    profile.u2[nodes - 1] = a;

    let h = profile.spacing();
    let dt = options.dt_over_eps * eps;
    let interior = nodes - 2;
    let mut rhs1 = vec![0.0; interior];
    let mut rhs2 = vec![0.0; interior];
    let mut scratch = vec![0.0; interior];
    let c1 = dt * eps / (h * h);
    let c2 = dt * (eps + l) / (h * h);
    let mut history = vec![(0usize, energy_eps_1d(&profile, eps, l, spec)?)];
    let mut rate = f64::INFINITY;
    let mut steps = 0;
    let mut converged = false;
    while steps < options.max_steps {
        for i in 0..interior {
            let g = eval_w_grad([profile.u1[i + 1], profile.u2[i + 1]], spec);
            rhs1[i] = profile.u1[i + 1] - dt * g[0] / (2.0 * eps);
            rhs2[i] = profile.u2[i + 1] - dt * g[1] / (2.0 * eps);
        }
        rhs1[0] += c1 * profile.u1[0];
        rhs1[interior - 1] += c1 * profile.u1[nodes - 1];
        rhs2[0] += c2 * profile.u2[0];
        rhs2[interior - 1] += c2 * profile.u2[nodes - 1];
        solve_tridiagonal(1.0 + 2.0 * c1, -c1, &mut rhs1, &mut scratch);
        solve_tridiagonal(1.0 + 2.0 * c2, -c2, &mut rhs2, &mut scratch);
        rate = 0.0f64;
        for i in 0..interior {
            let d1 = (rhs1[i] - profile.u1[i + 1]).abs();
            let d2 = (rhs2[i] - profile.u2[i + 1]).abs();
            if !(d1.is_finite() && d2.is_finite()) {
                return Err(Error::Divergence { step: steps + 1 });
            }
            rate = rate.max(d1).max(d2);
            profile.u1[i + 1] = rhs1[i];
            profile.u2[i + 1] = rhs2[i];
        }
        rate /= dt;
        steps += 1;
        if steps % 100 == 0 {
            history.push((steps, energy_eps_1d(&profile, eps, l, spec)?));
        }
        if rate < options.stop_tol {
            converged = true;
            break;
        }
    }
    if history.last().map(|x| x.0) != Some(steps) {
        history.push((steps, energy_eps_1d(&profile, eps, l, spec)?));
    }
    Ok(OneDRun {
        profile,
        steps,
        converged,
        final_rate: rate,
        energy_history: history,
    })
}

/// Limit profile with the wall resolved by the heteroclinic connection at
/// scale eps: u2 piecewise linear and u1 = f_m(y / eps) sqrt(1 - u2^2) / sqrt(1 - m^2).
pub fn composite_profile(
    state: &OneDLimitState,
    half_length: f64,
    eps: f64,
    spec: &PotentialSpec,
    nodes: usize,
) -> Result<OneDProfile> {
    match state.structure {
        OneDStructure::SingleWall { m } => {
            let inner_width = half_length / eps;
            let het = heteroclinic_profile(m, spec, inner_width, 2 * nodes + 1)?;
            let bm = (1.0 - m * m).sqrt();
            let inner = OneDProfile {
                half_length: inner_width,
                y: het.t.clone(),
                u1: het.f.clone(),
                u2: vec![m; het.t.len()],
            };
            Ok(OneDProfile::from_fn(half_length, nodes, |y| {
                let outer = state.limit_value(y, half_length);
                let f = inner.sample(y / eps)[0];
                let scale = if bm > 0.0 { outer[0].abs() / bm } else { 0.0 };
                [f * scale, outer[1]]
            }))
        }
        OneDStructure::TwoInterface { y0 } => {
            let het = heteroclinic_profile(0.0, spec, half_length / eps, 2 * nodes + 1)?;
            let inner = OneDProfile {
                half_length: half_length / eps,
                y: het.t.clone(),
                u1: het.f.clone(),
                u2: vec![0.0; het.t.len()],
            };
            Ok(OneDProfile::from_fn(half_length, nodes, |y| {
                // each interface is half of the a = 0 connection
                let f = inner.sample((y.abs() - y0) / eps + het_center_offset(&inner))[0];
                [y.signum() * f.max(0.0), 0.0]
            }))
        }
    }
}

/// Shift placing the |f| = 1/2 crossing of the a = 0 connection at zero.
fn het_center_offset(inner: &OneDProfile) -> f64 {
    let n = inner.y.len();
    (n / 2..n)
        .find(|&i| inner.u1[i] >= 0.5)
        .map(|i| inner.y[i])
        .unwrap_or(0.0)
}
