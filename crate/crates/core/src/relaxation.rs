//! Explicit L^2 gradient flow of the discrete E_eps:
//! u_t = eps Lap u + L grad(div u) - grad_u W(u) / (2 eps) on inside nodes.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{divergence_at, energy_eps, Domain, EnergyBreakdown, GridField};
use crate::potentials::{eval_w_grad, PotentialSpec};

#[derive(Debug, Clone)]
pub enum InitKind {
    BoundaryExtension,
    /// Boundary extension plus uniform noise in [-amplitude, amplitude] per component.
    SeededRandom { seed: u64, amplitude: f64 },
    Prescribed(GridField),
    /// e1 outside the disk, 0 inside, blended over 2h.
    IsotropicDisk { center: [f64; 2], radius: f64 },
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub domain: Arc<Domain>,
    pub eps: f64,
    pub l: f64,
    pub spec: PotentialSpec,
    /// Time step; the stability bound is used when absent.
    pub dt: Option<f64>,
    pub max_steps: usize,
    /// Stop when sup |u^{n+1} - u^n| / dt falls below this.
    pub stop_tol: f64,
    pub init: InitKind,
    pub snapshot_every: usize,
}

impl SimConfig {
    pub fn new(domain: Arc<Domain>, eps: f64, l: f64) -> Self {
        Self {
            domain,
            eps,
            l,
            spec: PotentialSpec::csh(),
            dt: None,
            max_steps: 100_000,
            stop_tol: 1e-6,
            init: InitKind::BoundaryExtension,
            snapshot_every: 100,
        }
    }

    /// Largest admissible step: min(0.2 h^2 / (4 eps + 4 L), 0.2 eps).
    pub fn stability_bound(&self) -> f64 {
        let h = self.domain.h();
        (0.2 * h * h / (4.0 * self.eps + 4.0 * self.l)).min(0.2 * self.eps)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::range("eps", self.eps, "(0, inf)"));
        }
        if !(self.l >= 0.0 && self.l.is_finite()) {
            return Err(Error::range("L", self.l, "[0, inf)"));
        }
        if !(self.stop_tol > 0.0) {
            return Err(Error::range("stop_tol", self.stop_tol, "(0, inf)"));
        }
        if self.snapshot_every == 0 {
            return Err(Error::range("snapshot_every", 0.0, "[1, inf)"));
        }
        if let Some(dt) = self.dt {
            let bound = self.stability_bound();
            if !(dt > 0.0 && dt <= bound) {
                return Err(Error::range("dt", dt, format!("(0, {bound:e}]")));
            }
        }
        if let InitKind::Prescribed(f) = &self.init {
            if f.u1.len() != self.domain.len() || f.u2.len() != self.domain.len() {
                return Err(Error::InvalidConfig(
                    "prescribed field does not match the domain grid".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn resolved_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| self.stability_bound())
    }

    /// Initial field with boundary data imposed.
    pub fn initial_field(&self) -> GridField {
        let d = Arc::clone(&self.domain);
        let mut field = match &self.init {
            InitKind::BoundaryExtension => GridField::boundary_extension(d),
            InitKind::SeededRandom { seed, amplitude } => {
                let mut f = GridField::boundary_extension(d.clone());
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                for n in 0..d.len() {
                    if d.is_inside(n) {
                        f.u1[n] += amplitude * rng.gen_range(-1.0..=1.0);
                        f.u2[n] += amplitude * rng.gen_range(-1.0..=1.0);
                    }
                }
                f
            }
            InitKind::Prescribed(f) => GridField {
                domain: d,
                u1: f.u1.clone(),
                u2: f.u2.clone(),
            },
            InitKind::IsotropicDisk { center, radius } => {
                let width = 2.0 * d.h();
                let (c, r) = (*center, *radius);
                GridField::from_fn(d, move |x, y| {
                    let dist = (x - c[0]).hypot(y - c[1]);
                    let s = ((dist - r) / width + 0.5).clamp(0.0, 1.0);
                    [s, 0.0]
                })
            }
        };
        field.apply_boundary();
        field
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub energy_history: Vec<(usize, EnergyBreakdown)>,
    pub final_field: GridField,
    pub steps_taken: usize,
    pub converged: bool,
    /// sup |u^{n+1} - u^n| / dt at the last step.
    pub final_rate: f64,
    pub dt: f64,
}

/// Reusable buffers for repeated steps on one domain.
struct Stepper {
    masked_div: Vec<f64>,
    next1: Vec<f64>,
    next2: Vec<f64>,
}

impl Stepper {
    fn new(n: usize) -> Self {
        Self {
            masked_div: vec![0.0; n],
            next1: vec![0.0; n],
            next2: vec![0.0; n],
        }
    }

    /// Advances `field` in place by one explicit Euler step and returns
    /// sup |u^{n+1} - u^n| / dt.
    fn advance(&mut self, field: &mut GridField, cfg: &SimConfig, dt: f64) -> f64 {
        let d: &Domain = &field.domain;
        let s = &d.stencils;
        let nx = d.nx;
        let (u1, u2) = (&field.u1, &field.u2);
        let (eps, l) = (cfg.eps, cfg.l);
        let (ix2, iy2) = (1.0 / (d.hx * d.hx), 1.0 / (d.hy * d.hy));
        let inv_two_eps = 0.5 / eps;
        let bc = d.boundary_values();

        self.masked_div
            .par_chunks_mut(nx)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, out) in row.iter_mut().enumerate() {
                    let n = j * nx + i;
                    *out = if d.is_inside(n) { divergence_at(s, u1, u2, n) } else { 0.0 };
                }
            });
        let dm = &self.masked_div;

        let rates: Vec<f64> = self
            .next1
            .par_chunks_mut(nx)
            .zip(self.next2.par_chunks_mut(nx))
            .enumerate()
            .map(|(j, (r1, r2))| {
                let mut rate: f64 = 0.0;
                for i in 0..nx {
                    let n = j * nx + i;
                    if !d.is_inside(n) {
                        r1[i] = bc[n][0];
                        r2[i] = bc[n][1];
                        continue;
                    }
                    let (a, b) = (u1[n], u2[n]);
                    let mut lap1 = 0.0;
                    let mut lap2 = 0.0;
                    for (dir, w) in [(0usize, ix2), (1, ix2), (2, iy2), (3, iy2)] {
                        let m = s.nb[n][dir];
                        if m != u32::MAX {
                            lap1 += w * (u1[m as usize] - a);
                            lap2 += w * (u2[m as usize] - b);
                        }
                    }
                    let mut g1 = 0.0;
                    let mut g2 = 0.0;
                    for k in s.adj_ptr[n] as usize..s.adj_ptr[n + 1] as usize {
                        let v = dm[s.adj_node[k] as usize];
                        g1 += s.adj_c1[k] * v;
                        g2 += s.adj_c2[k] * v;
                    }
                    let w = eval_w_grad([a, b], &cfg.spec);
                    let f1 = eps * lap1 - l * g1 - w[0] * inv_two_eps;
                    let f2 = eps * lap2 - l * g2 - w[1] * inv_two_eps;
                    r1[i] = a + dt * f1;
                    r2[i] = b + dt * f2;
                    rate = rate.max(f1.abs()).max(f2.abs());
                }
                rate
            })
            .collect();
        std::mem::swap(&mut field.u1, &mut self.next1);
        std::mem::swap(&mut field.u2, &mut self.next2);
        rates.iter().fold(0.0f64, |m, r| if r.is_nan() { f64::NAN } else { m.max(*r) })
    }
}

fn check_domain(field: &GridField, cfg: &SimConfig) -> Result<()> {
    if !Arc::ptr_eq(&field.domain, &cfg.domain)
        && (field.domain.nx != cfg.domain.nx || field.domain.ny != cfg.domain.ny)
    {
        return Err(Error::InvalidConfig("field and configuration grids differ".into()));
    }
    Ok(())
}

/// One explicit Euler step; non-inside nodes are rewritten from the boundary data.
pub fn step(field: &GridField, cfg: &SimConfig) -> Result<GridField> {
    cfg.validate()?;
    check_domain(field, cfg)?;
    let mut next = field.clone();
    let mut stepper = Stepper::new(field.domain.len());
    let rate = stepper.advance(&mut next, cfg, cfg.resolved_dt());
    if !rate.is_finite() || !next.is_finite() {
        return Err(Error::Divergence { step: 1 });
    }
    Ok(next)
}

/// Runs the flow until the update rate drops below `stop_tol` or `max_steps`
/// is reached; energies are recorded every `snapshot_every` steps and at the end.
pub fn relax(cfg: &SimConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let dt = cfg.resolved_dt();
    let mut field = cfg.initial_field();
    let mut stepper = Stepper::new(field.domain.len());
    let energy = |f: &GridField| energy_eps(f, cfg.eps, cfg.l, &cfg.spec);
    let mut history = vec![(0, energy(&field)?)];
    let mut converged = false;
    let mut rate = f64::INFINITY;
    let mut steps = 0;
    while steps < cfg.max_steps {
        rate = stepper.advance(&mut field, cfg, dt);
        steps += 1;
        if !rate.is_finite() {
            return Err(Error::Divergence { step: steps });
        }
        if rate < cfg.stop_tol {
            converged = true;
            break;
        }
        if steps % cfg.snapshot_every == 0 {
            history.push((steps, energy(&field)?));
        }
    }
    if history.last().map(|h| h.0) != Some(steps) {
        history.push((steps, energy(&field)?));
    }
    Ok(RunRecord {
        energy_history: history,
        final_field: field,
        steps_taken: steps,
        converged,
        final_rate: rate,
        dt,
    })
}
