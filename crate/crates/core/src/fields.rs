//! Vector fields on masked Cartesian grids: the discrete energy E_eps, the
//! divergence, the Fourier degree, winding numbers, the divergence lower
//! bound on annuli and |u| level sets.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::num_complex::Complex;
use serde::Serialize;
use rustfft::FftPlanner;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::potentials::{eval_w_grad, PotentialSpec};
use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// Centred at the origin: (-width/2, width/2) x (-height/2, height/2).
    Rectangle { width: f64, height: f64 },
    /// Centred at the origin, embedded in its bounding square.
    Disk { radius: f64 },
    /// inner < r < outer, embedded in the square of the outer disk.
    Annulus { inner: f64, outer: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryData {
    /// (cos(k s + alpha), sin(k s + alpha)) with s the polar angle.
    Degree { k: i32, alpha: f64 },
    Constant([f64; 2]),
    /// (+-sqrt(1 - a^2), a) on the top and bottom sides, free sides.
    OneD { a: f64 },
    /// As `OneD` with periodic sides.
    PeriodicXDirichletY { a: f64 },
}

impl BoundaryData {
    pub fn value_at(&self, x: f64, y: f64) -> [f64; 2] {
        match *self {
            BoundaryData::Degree { k, alpha } => {
                let s = y.atan2(x);
                let phase = k as f64 * s + alpha;
                [phase.cos(), phase.sin()]
            }
            BoundaryData::Constant(v) => v,
            BoundaryData::OneD { a } | BoundaryData::PeriodicXDirichletY { a } => {
                let b = (1.0 - a * a).sqrt();
                [if y < 0.0 { -b } else { b }, a]
            }
        }
    }

    fn one_d_parameter(&self) -> Option<f64> {
        match *self {
            BoundaryData::OneD { a } | BoundaryData::PeriodicXDirichletY { a } => Some(a),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// Unknown updated by the solver.
    Inside,
    /// Not inside, with an inside 4-neighbour; holds boundary data.
    Boundary,
    /// Holds boundary data, never coupled to an inside cell.
    Outside,
}

const NONE: u32 = u32::MAX;

/// Precomputed stencils shared by the energy, the divergence and the flow.
#[derive(Debug, Clone)]
pub(crate) struct Stencils {
    /// Divergence stencil per node: x part acts on u1, y part on u2.
    pub dx_idx: Vec<[u32; 3]>,
    pub dx_c: Vec<[f64; 3]>,
    pub dy_idx: Vec<[u32; 3]>,
    pub dy_c: Vec<[f64; 3]>,
    /// Transpose of the divergence restricted to inside rows, in CSR form:
    /// for node n, entries (c, coef on u1, coef on u2).
    pub adj_ptr: Vec<u32>,
    pub adj_node: Vec<u32>,
    pub adj_c1: Vec<f64>,
    pub adj_c2: Vec<f64>,
    /// Neighbours (east, west, north, south); `NONE` when absent.
    pub nb: Vec<[u32; 4]>,
}

#[derive(Debug, Clone)]
pub struct Domain {
    pub shape: Shape,
    pub bc: BoundaryData,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    /// Coordinates of node (0, 0).
    pub origin: [f64; 2],
    pub periodic_x: bool,
    mask: Vec<Cell>,
    bc_values: Vec<[f64; 2]>,
    pub(crate) stencils: Stencils,
}

fn check_positive(what: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::range(what, v, "(0, inf)"));
    }
    Ok(())
}

fn check_bc(bc: &BoundaryData) -> Result<()> {
    if let Some(a) = bc.one_d_parameter() {
        if !(0.0..1.0).contains(&a) {
            return Err(Error::range("a", a, "a in [0,1)"));
        }
    }
    if let BoundaryData::Degree { alpha, .. } = bc {
        if !alpha.is_finite() {
            return Err(Error::range("alpha", *alpha, "finite"));
        }
    }
    Ok(())
}

impl Domain {
    /// Rectangle grid. With periodic sides the `nx` columns tile the width
    /// (hx = width / nx); otherwise they include both sides (hx = width / (nx - 1)).
    pub fn rectangle(width: f64, height: f64, nx: usize, ny: usize, bc: BoundaryData) -> Result<Self> {
        check_positive("width", width)?;
        check_positive("height", height)?;
        check_bc(&bc)?;
        if nx < 3 || ny < 3 {
            return Err(Error::range("grid size", nx.min(ny) as f64, "[3, inf)"));
        }
        let periodic_x = matches!(bc, BoundaryData::PeriodicXDirichletY { .. });
        let free_sides = matches!(bc, BoundaryData::OneD { .. }) || periodic_x;
        let hx = if periodic_x { width / nx as f64 } else { width / (nx - 1) as f64 };
        let hy = height / (ny - 1) as f64;
        let origin = [-0.5 * width, -0.5 * height];
        let mask = (0..ny)
            .flat_map(|j| {
                (0..nx).map(move |i| {
                    let edge_row = j == 0 || j == ny - 1;
                    let edge_col = i == 0 || i == nx - 1;
                    if edge_row || (edge_col && !free_sides) {
                        Cell::Boundary
                    } else {
                        Cell::Inside
                    }
                })
            })
            .collect();
        Ok(Self::assemble(
            Shape::Rectangle { width, height },
            bc,
            nx,
            ny,
            hx,
            hy,
            origin,
            periodic_x,
            mask,
        ))
    }

    /// Disk of the given radius on an n x n node grid with h = 2R / (n - 1).
    pub fn disk(radius: f64, n: usize, bc: BoundaryData) -> Result<Self> {
        check_positive("radius", radius)?;
        Self::radial(Shape::Disk { radius }, 0.0, radius, n, bc)
    }

    pub fn annulus(inner: f64, outer: f64, n: usize, bc: BoundaryData) -> Result<Self> {
        check_positive("outer radius", outer)?;
        if !(inner >= 0.0 && inner < outer) {
            return Err(Error::range("inner radius", inner, format!("[0, {outer})")));
        }
        Self::radial(Shape::Annulus { inner, outer }, inner, outer, n, bc)
    }

    fn radial(shape: Shape, inner: f64, outer: f64, n: usize, bc: BoundaryData) -> Result<Self> {
        check_bc(&bc)?;
        if bc.one_d_parameter().is_some() {
            return Err(Error::InvalidConfig(
                "one-dimensional boundary data needs a rectangle".into(),
            ));
        }
        if n < 5 {
            return Err(Error::range("grid size", n as f64, "[5, inf)"));
        }
        let h = 2.0 * outer / (n - 1) as f64;
        let origin = [-outer, -outer];
        let is_inside = |i: usize, j: usize| {
            let x = origin[0] + i as f64 * h;
            let y = origin[1] + j as f64 * h;
            let r = x.hypot(y);
            r < outer && (r > inner || inner == 0.0)
        };
        let mask = (0..n)
            .flat_map(|j| {
                (0..n).map(move |i| {
                    if is_inside(i, j) {
                        Cell::Inside
                    } else if (i > 0 && is_inside(i - 1, j))
                        || (i + 1 < n && is_inside(i + 1, j))
                        || (j > 0 && is_inside(i, j - 1))
                        || (j + 1 < n && is_inside(i, j + 1))
                    {
                        Cell::Boundary
                    } else {
                        Cell::Outside
                    }
                })
            })
            .collect();
        Ok(Self::assemble(shape, bc, n, n, h, h, origin, false, mask))
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        shape: Shape,
        bc: BoundaryData,
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
        origin: [f64; 2],
        periodic_x: bool,
        mask: Vec<Cell>,
    ) -> Self {
        let bc_values = (0..nx * ny)
            .map(|n| {
                let (i, j) = (n % nx, n / nx);
                bc.value_at(origin[0] + i as f64 * hx, origin[1] + j as f64 * hy)
            })
            .collect();
        let stencils = build_stencils(nx, ny, hx, hy, periodic_x, &mask);
        Self {
            shape,
            bc,
            nx,
            ny,
            hx,
            hy,
            origin,
            periodic_x,
            mask,
            bc_values,
            stencils,
        }
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Smallest grid spacing.
    pub fn h(&self) -> f64 {
        self.hx.min(self.hy)
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, n: usize) -> [f64; 2] {
        let (i, j) = (n % self.nx, n / self.nx);
        [
            self.origin[0] + i as f64 * self.hx,
            self.origin[1] + j as f64 * self.hy,
        ]
    }

    pub fn cell(&self, n: usize) -> Cell {
        self.mask[n]
    }

    pub fn is_inside(&self, n: usize) -> bool {
        self.mask[n] == Cell::Inside
    }

    pub fn mask(&self) -> &[Cell] {
        &self.mask
    }

    pub fn boundary_values(&self) -> &[[f64; 2]] {
        &self.bc_values
    }

    pub fn inside_count(&self) -> usize {
        self.mask.iter().filter(|c| **c == Cell::Inside).count()
    }

    pub fn cell_area(&self) -> f64 {
        self.hx * self.hy
    }

    /// Largest radius of a circle about the origin that fits in the grid box.
    fn max_radius(&self) -> f64 {
        let x_extent = if self.periodic_x {
            f64::INFINITY
        } else {
            (-self.origin[0]).min(self.origin[0] + (self.nx - 1) as f64 * self.hx)
        };
        let y_extent = (-self.origin[1]).min(self.origin[1] + (self.ny - 1) as f64 * self.hy);
        x_extent.min(y_extent)
    }
}

fn build_stencils(nx: usize, ny: usize, hx: f64, hy: f64, periodic_x: bool, mask: &[Cell]) -> Stencils {
    let n_nodes = nx * ny;
    let idx = |i: usize, j: usize| (j * nx + i) as u32;
    let mut dx_idx = Vec::with_capacity(n_nodes);
    let mut dx_c = Vec::with_capacity(n_nodes);
    let mut dy_idx = Vec::with_capacity(n_nodes);
    let mut dy_c = Vec::with_capacity(n_nodes);
    let mut nb = Vec::with_capacity(n_nodes);
    for j in 0..ny {
        for i in 0..nx {
            // x derivative
            let (ix, cx) = if periodic_x {
                let w = (i + nx - 1) % nx;
                let e = (i + 1) % nx;
                ([idx(w, j), idx(e, j), idx(i, j)], [-0.5 / hx, 0.5 / hx, 0.0])
            } else if i == 0 {
                ([idx(0, j), idx(1, j), idx(2, j)], [-1.5 / hx, 2.0 / hx, -0.5 / hx])
            } else if i == nx - 1 {
                (
                    [idx(i, j), idx(i - 1, j), idx(i - 2, j)],
                    [1.5 / hx, -2.0 / hx, 0.5 / hx],
                )
            } else {
                ([idx(i - 1, j), idx(i + 1, j), idx(i, j)], [-0.5 / hx, 0.5 / hx, 0.0])
            };
            let (iy, cy) = if j == 0 {
                ([idx(i, 0), idx(i, 1), idx(i, 2)], [-1.5 / hy, 2.0 / hy, -0.5 / hy])
            } else if j == ny - 1 {
                (
                    [idx(i, j), idx(i, j - 1), idx(i, j - 2)],
                    [1.5 / hy, -2.0 / hy, 0.5 / hy],
                )
            } else {
                ([idx(i, j - 1), idx(i, j + 1), idx(i, j)], [-0.5 / hy, 0.5 / hy, 0.0])
            };
            dx_idx.push(ix);
            dx_c.push(cx);
            dy_idx.push(iy);
            dy_c.push(cy);

            let east = if i + 1 < nx {
                idx(i + 1, j)
            } else if periodic_x {
                idx(0, j)
            } else {
                NONE
            };
            let west = if i > 0 {
                idx(i - 1, j)
            } else if periodic_x {
                idx(nx - 1, j)
            } else {
                NONE
            };
            let north = if j + 1 < ny { idx(i, j + 1) } else { NONE };
            let south = if j > 0 { idx(i, j - 1) } else { NONE };
            nb.push([east, west, north, south]);
        }
    }

    // transpose of the inside rows of the divergence operator
    let mut entries: Vec<Vec<(u32, f64, f64)>> = vec![Vec::new(); n_nodes];
    for c in 0..n_nodes {
        if mask[c] != Cell::Inside {
            continue;
        }
        for k in 0..3 {
            if dx_c[c][k] != 0.0 {
                entries[dx_idx[c][k] as usize].push((c as u32, dx_c[c][k], 0.0));
            }
            if dy_c[c][k] != 0.0 {
                entries[dy_idx[c][k] as usize].push((c as u32, 0.0, dy_c[c][k]));
            }
        }
    }
    let mut adj_ptr = Vec::with_capacity(n_nodes + 1);
    let mut adj_node = Vec::new();
    let mut adj_c1 = Vec::new();
    let mut adj_c2 = Vec::new();
    adj_ptr.push(0u32);
    for list in entries {
        for (c, a1, a2) in list {
            adj_node.push(c);
            adj_c1.push(a1);
            adj_c2.push(a2);
        }
        adj_ptr.push(adj_node.len() as u32);
    }
    Stencils {
        dx_idx,
        dx_c,
        dy_idx,
        dy_c,
        adj_ptr,
        adj_node,
        adj_c1,
        adj_c2,
        nb,
    }
}

/// Two-component field sampled on every node of a domain grid.
#[derive(Debug, Clone)]
pub struct GridField {
    pub domain: Arc<Domain>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl PartialEq for GridField {
    fn eq(&self, other: &Self) -> bool {
        self.u1 == other.u1 && self.u2 == other.u2
    }
}

impl GridField {
    /// Samples `f` at every node (no boundary data is imposed).
    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let (u1, u2) = (0..domain.len())
            .map(|n| {
                let [x, y] = domain.coords(n);
                let v = f(x, y);
                (v[0], v[1])
            })
            .unzip();
        Self { domain, u1, u2 }
    }

    pub fn zeros(domain: Arc<Domain>) -> Self {
        let n = domain.len();
        Self {
            domain,
            u1: vec![0.0; n],
            u2: vec![0.0; n],
        }
    }

    /// Extends the boundary data into the domain: scaled by r/R on disks
    /// (continuous at the centre), along rays on annuli, linearly in y for
    /// one-dimensional data and unchanged otherwise.
    pub fn boundary_extension(domain: Arc<Domain>) -> Self {
        let bc = domain.bc;
        let shape = domain.shape;
        let mut field = Self::from_fn(domain, |x, y| match (bc, shape) {
            (
                BoundaryData::OneD { a } | BoundaryData::PeriodicXDirichletY { a },
                Shape::Rectangle { height, .. },
            ) => [(1.0 - a * a).sqrt() * (2.0 * y / height), a],
            (BoundaryData::Degree { .. }, Shape::Disk { radius }) => {
                let v = bc.value_at(x, y);
                let s = (x.hypot(y) / radius).min(1.0);
                [s * v[0], s * v[1]]
            }
            _ => bc.value_at(x, y),
        });
        field.apply_boundary();
        field
    }

    /// Overwrites every non-inside node with the boundary data.
    pub fn apply_boundary(&mut self) {
        let d = Arc::clone(&self.domain);
        for n in 0..d.len() {
            if !d.is_inside(n) {
                let v = d.bc_values[n];
                self.u1[n] = v[0];
                self.u2[n] = v[1];
            }
        }
    }

    pub fn get(&self, n: usize) -> [f64; 2] {
        [self.u1[n], self.u2[n]]
    }

    pub fn modulus(&self) -> Vec<f64> {
        self.u1.iter().zip(&self.u2).map(|(a, b)| a.hypot(*b)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().chain(&self.u2).all(|v| v.is_finite())
    }

    /// Bilinear interpolation; points outside the grid are clamped to it
    /// (wrapped for periodic sides).
    pub fn bilinear(&self, x: f64, y: f64) -> [f64; 2] {
        bilinear_pair(&self.domain, &self.u1, &self.u2, x, y)
    }
}

fn bilinear_pair(d: &Domain, a: &[f64], b: &[f64], x: f64, y: f64) -> [f64; 2] {
    let (i0, i1, tx) = axis_weights(x, d.origin[0], d.hx, d.nx, d.periodic_x);
    let (j0, j1, ty) = axis_weights(y, d.origin[1], d.hy, d.ny, false);
    let at = |v: &[f64]| {
        let v00 = v[j0 * d.nx + i0];
        let v10 = v[j0 * d.nx + i1];
        let v01 = v[j1 * d.nx + i0];
        let v11 = v[j1 * d.nx + i1];
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    };
    [at(a), at(b)]
}

fn axis_weights(x: f64, x0: f64, h: f64, n: usize, periodic: bool) -> (usize, usize, f64) {
    let p = (x - x0) / h;
    if periodic {
        let p = p.rem_euclid(n as f64);
        let i0 = (p.floor() as usize).min(n - 1);
        return (i0, (i0 + 1) % n, p - i0 as f64);
    }
    let p = p.clamp(0.0, (n - 1) as f64);
    let i0 = (p.floor() as usize).min(n - 2);
    (i0, i0 + 1, p - i0 as f64)
}

/// Discrete energy terms, each including the global factor 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct EnergyBreakdown {
    pub potential: f64,
    pub gradient: f64,
    pub divergence: f64,
    pub total: f64,
}

/// Divergence at every node: central differences, second-order one-sided
/// differences on the grid edges (periodic sides wrap).
pub fn divergence(field: &GridField) -> Vec<f64> {
    let s = &field.domain.stencils;
    (0..field.domain.len())
        .map(|n| divergence_at(s, &field.u1, &field.u2, n))
        .collect()
}

#[inline]
pub(crate) fn divergence_at(s: &Stencils, u1: &[f64], u2: &[f64], n: usize) -> f64 {
    let ix = &s.dx_idx[n];
    let cx = &s.dx_c[n];
    let iy = &s.dy_idx[n];
    let cy = &s.dy_c[n];
    cx[0] * u1[ix[0] as usize]
        + cx[1] * u1[ix[1] as usize]
        + cx[2] * u1[ix[2] as usize]
        + cy[0] * u2[iy[0] as usize]
        + cy[1] * u2[iy[1] as usize]
        + cy[2] * u2[iy[2] as usize]
}

/// Midpoint-rule value of (1/2) integral of W/eps + eps |grad u|^2 + L (div u)^2.
///
/// The potential and divergence terms are summed over inside nodes. The
/// gradient term is summed over grid edges with at least one inside end,
/// which makes its variation the 5-point Laplacian.
pub fn energy_eps(field: &GridField, eps: f64, l: f64, spec: &PotentialSpec) -> Result<EnergyBreakdown> {
    check_positive("eps", eps)?;
    if !(l >= 0.0 && l.is_finite()) {
        return Err(Error::range("L", l, "[0, inf)"));
    }
    let d = &field.domain;
    let s = &d.stencils;
    let area = d.cell_area();
    let wx = d.hy / d.hx;
    let wy = d.hx / d.hy;
    let mut pot = Vec::with_capacity(d.ny);
    let mut grad = Vec::with_capacity(d.ny);
    let mut div = Vec::with_capacity(d.ny);
    let w_of = |n: usize| {
        let m = field.u1[n].hypot(field.u2[n]);
        crate::potentials::eval_v(m, spec).unwrap_or_else(|_| {
            // beyond a table's range: extend by the gradient magnitude
            let g = eval_w_grad([field.u1[n], field.u2[n]], spec);
            g[0].hypot(g[1]) * m
        })
    };
    for j in 0..d.ny {
        let (mut p_row, mut g_row, mut d_row) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..d.nx {
            let n = j * d.nx + i;
            let inside = d.is_inside(n);
            if inside {
                p_row.push(w_of(n) / (2.0 * eps) * area);
                let dv = divergence_at(s, &field.u1, &field.u2, n);
                d_row.push(0.5 * l * dv * dv * area);
            }
            // east and north edges own each edge exactly once
            for (dir, w) in [(0usize, wx), (2usize, wy)] {
                let m = s.nb[n][dir];
                if m == NONE {
                    continue;
                }
                let m = m as usize;
                if inside || d.is_inside(m) {
                    let a = field.u1[m] - field.u1[n];
                    let b = field.u2[m] - field.u2[n];
                    g_row.push(0.5 * eps * (a * a + b * b) * w);
                }
            }
        }
        pot.push(pairwise_sum(&p_row));
        grad.push(pairwise_sum(&g_row));
        div.push(pairwise_sum(&d_row));
    }
    let potential = pairwise_sum(&pot);
    let gradient = pairwise_sum(&grad);
    let divergence = pairwise_sum(&div);
    Ok(EnergyBreakdown {
        potential,
        gradient,
        divergence,
        total: potential + gradient + divergence,
    })
}

/// Number of circle samples used by `degree_fourier`.
pub const DEGREE_SAMPLES: usize = 2048;
const LOW_MODULUS: f64 = 0.25;

/// Degree of u on the circle of radius `t` about the origin:
/// sum of n |u_n|^2 over Fourier modes |n| <= M/4 of the normalized samples.
pub fn degree_fourier(field: &GridField, t: f64) -> Result<f64> {
    check_positive("t", t)?;
    let limit = field.domain.max_radius();
    if t > limit * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "circle of radius {t} leaves the grid (max {limit})"
        )));
    }
    let m = DEGREE_SAMPLES;
    let mut buf = Vec::with_capacity(m);
    for j in 0..m {
        let a = 2.0 * PI * j as f64 / m as f64;
        let u = field.bilinear(t * a.cos(), t * a.sin());
        let r = u[0].hypot(u[1]);
        if !(r >= LOW_MODULUS) {
            return Err(Error::LowModulus {
                modulus: r,
                threshold: LOW_MODULUS,
            });
        }
        buf.push(Complex::new(u[0] / r, u[1] / r));
    }
    FftPlanner::new().plan_fft_forward(m).process(&mut buf);
    let norm = 1.0 / (m as f64 * m as f64);
    let mut terms = Vec::with_capacity(m / 2 + 1);
    for n in 1..=(m / 4) {
        let pos = buf[n].norm_sqr();
        let neg = buf[m - n].norm_sqr();
        terms.push(n as f64 * (pos - neg) * norm);
    }
    Ok(pairwise_sum(&terms))
}

/// (1/2 pi) times the integral of (u x du) / |u|^2 along the closed polyline,
/// with u interpolated between samples along the shorter arc of directions.
pub fn winding_number(field: &GridField, path: &Curve) -> Result<f64> {
    let n = path.len();
    let samples: Vec<[f64; 2]> = path
        .vertices
        .iter()
        .map(|p| field.bilinear(p[0], p[1]))
        .collect();
    for u in &samples {
        let r = u[0].hypot(u[1]);
        if !(r >= LOW_MODULUS) {
            return Err(Error::LowModulus {
                modulus: r,
                threshold: LOW_MODULUS,
            });
        }
    }
    let increments: Vec<f64> = (0..n)
        .map(|i| {
            let a = samples[i];
            let b = samples[(i + 1) % n];
            (a[0] * b[1] - a[1] * b[0]).atan2(a[0] * b[0] + a[1] * b[1])
        })
        .collect();
    Ok(pairwise_sum(&increments) / (2.0 * PI))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DivBoundReport {
    pub d: i64,
    /// Integral of (div u)^2 over the annulus.
    pub lhs: f64,
    /// Lower bound; `None` when the degree is 0 or 1.
    pub rhs: Option<f64>,
    pub tolerance: f64,
    pub satisfied: Option<bool>,
}

impl DivBoundReport {
    pub fn applicable(&self) -> bool {
        self.rhs.is_some()
    }
}

/// Divergence lower bound on the annulus rho < |x| < rho_prime for fields of
/// degree d not in {0, 1}.
pub fn div_lower_bound_check(field: &GridField, rho: f64, rho_prime: f64) -> Result<DivBoundReport> {
    if !(rho > 0.0 && rho < rho_prime && rho_prime <= 1.0) {
        return Err(Error::Precondition(format!(
            "need 0 < rho < rho' <= 1, got rho = {rho}, rho' = {rho_prime}"
        )));
    }
    let dom = &field.domain;
    for n in 0..dom.len() {
        let [x, y] = dom.coords(n);
        let r = x.hypot(y);
        if r >= rho && r <= rho_prime {
            let m = field.u1[n].hypot(field.u2[n]);
            if m < 0.5 {
                return Err(Error::Precondition(format!(
                    "|u| = {m} < 1/2 at ({x}, {y}) in the annulus"
                )));
            }
        }
    }
    let mut degrees = Vec::with_capacity(8);
    for k in 0..8 {
        let t = rho + (rho_prime - rho) * k as f64 / 7.0;
        degrees.push(degree_fourier(field, t)?);
    }
    let d = degrees[0].round();
    if let Some(bad) = degrees.iter().find(|x| (**x - d).abs() > 0.1) {
        return Err(Error::Precondition(format!(
            "degree is not constant across the annulus ({} vs {bad})",
            degrees[0]
        )));
    }
    let d = d as i64;

    // midpoint rule in polar coordinates on the bilinear interpolant of div u
    let div = divergence(field);
    let zeros = vec![0.0; div.len()];
    let (nr, nt) = (256usize, 1024usize);
    let dr = (rho_prime - rho) / nr as f64;
    let dth = 2.0 * PI / nt as f64;
    let rows: Vec<f64> = (0..nr)
        .map(|a| {
            let r = rho + (a as f64 + 0.5) * dr;
            let ring: Vec<f64> = (0..nt)
                .map(|b| {
                    let th = (b as f64 + 0.5) * dth;
                    let v = bilinear_pair(dom, &div, &zeros, r * th.cos(), r * th.sin())[0];
                    v * v
                })
                .collect();
            pairwise_sum(&ring) * r * dr * dth
        })
        .collect();
    let lhs = pairwise_sum(&rows);

    let log_ratio = (rho_prime / rho).ln();
    let rhs = if d < 0 {
        Some((PI * d as f64 * log_ratio + 4.0).abs())
    } else if d > 1 {
        Some((PI * (d - 1) as f64 * log_ratio - 4.0).abs())
    } else {
        None
    };
    let tolerance = rhs.map_or(0.0, |r| r * 1e-3 + 1e-6);
    Ok(DivBoundReport {
        d,
        lhs,
        rhs,
        tolerance,
        satisfied: rhs.map(|r| lhs >= r - tolerance),
    })
}

/// e^{i d theta} times a smooth seeded factor: modulus 1 + 0.4 a m(x) and
/// phase a p(x), with m and p random trigonometric polynomials of degree 2
/// bounded by 1. For 0 <= a <= 1 the modulus stays in [0.6, 1.4] and the
/// degree around the origin stays d.
pub fn seeded_degree_field(domain: Arc<Domain>, d: i32, seed: u64, amplitude: f64) -> Result<GridField> {
    if !(0.0..=1.0).contains(&amplitude) {
        return Err(Error::range("amplitude", amplitude, "[0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<(f64, f64)> = (0..=2)
        .flat_map(|p| (0..=2).map(move |q| (p as f64, q as f64)))
        .filter(|&(p, q)| p + q > 0.0)
        .collect();
    let weight = 1.0 / (2 * modes.len()) as f64;
    let mut draw = || -> Vec<[f64; 2]> {
        modes
            .iter()
            .map(|_| [weight * rng.gen_range(-1.0..=1.0), weight * rng.gen_range(-1.0..=1.0)])
            .collect()
    };
    let (cm, cp) = (draw(), draw());
    let eval = |c: &[[f64; 2]], x: f64, y: f64| -> f64 {
        modes
            .iter()
            .zip(c)
            .map(|(&(p, q), w)| {
                let arg = PI * (p * x + q * y);
                w[0] * arg.cos() + w[1] * arg.sin()
            })
            .sum()
    };
    Ok(GridField::from_fn(domain, |x, y| {
        let m = 1.0 + 0.4 * amplitude * eval(&cm, x, y);
        let phase = d as f64 * y.atan2(x) + amplitude * eval(&cp, x, y);
        [m * phase.cos(), m * phase.sin()]
    }))
}

/// Polylines of {|u| = level} by marching squares with linear edge
/// interpolation. Curves are emitted in row-major order of their first cell.
pub fn interface_contour(field: &GridField, level: f64) -> Vec<Curve> {
    let d = &field.domain;
    let (nx, ny) = (d.nx, d.ny);
    let g: Vec<f64> = field.modulus().iter().map(|m| m - level).collect();
    let point_on = |edge: usize| -> [f64; 2] {
        let base = edge / 2;
        let (i, j) = (base % nx, base / nx);
        let (a, b) = if edge % 2 == 0 {
            (base, j * nx + i + 1)
        } else {
            (base, (j + 1) * nx + i)
        };
        let t = g[a] / (g[a] - g[b]);
        let pa = d.coords(a);
        let pb = d.coords(b);
        [pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]
    };

    // segments between edge ids; an edge id is 2*node (east edge) or 2*node+1 (north edge)
    let mut segments: Vec<(usize, usize)> = Vec::new();
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            let n00 = j * nx + i;
            let n10 = n00 + 1;
            let n01 = n00 + nx;
            let n11 = n01 + 1;
            let (v00, v10, v11, v01) = (g[n00], g[n10], g[n11], g[n01]);
            let case = (v00 > 0.0) as u8
                | ((v10 > 0.0) as u8) << 1
                | ((v11 > 0.0) as u8) << 2
                | ((v01 > 0.0) as u8) << 3;
            let bottom = 2 * n00;
            let top = 2 * n01;
            let left = 2 * n00 + 1;
            let right = 2 * n10 + 1;
            let centre_positive = 0.25 * (v00 + v10 + v11 + v01) > 0.0;
            match case {
                0 | 15 => {}
                1 | 14 => segments.push((left, bottom)),
                2 | 13 => segments.push((bottom, right)),
                3 | 12 => segments.push((left, right)),
                4 | 11 => segments.push((right, top)),
                6 | 9 => segments.push((bottom, top)),
                7 | 8 => segments.push((left, top)),
                5 => {
                    if centre_positive {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    } else {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    }
                }
                10 => {
                    if centre_positive {
                        segments.push((left, bottom));
                        segments.push((right, top));
                    } else {
                        segments.push((left, top));
                        segments.push((bottom, right));
                    }
                }
                _ => unreachable!(),
            }
        }
    }

    let mut incident: std::collections::HashMap<usize, Vec<usize>> = std::collections::HashMap::new();
    for (k, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(k);
        incident.entry(b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut curves = Vec::new();
    let walk = |start_seg: usize, start_edge: usize, used: &mut Vec<bool>| -> (Vec<usize>, bool) {
        let mut edges = vec![start_edge];
        let mut seg = start_seg;
        let mut at = start_edge;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            if next == start_edge {
                return (edges, true);
            }
            edges.push(next);
            at = next;
            match incident[&next].iter().find(|&&s| !used[s]) {
                Some(&s) => seg = s,
                None => return (edges, false),
            }
        }
    };
    // open chains start at edges touched by a single segment
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (a, b) = segments[k];
        let start = if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(edge) = start {
            let (edges, _) = walk(k, edge, &mut used);
            let pts: Vec<[f64; 2]> = edges.iter().map(|&e| point_on(e)).collect();
            if pts.len() >= 2 {
                curves.push((k, Curve::from_points(pts, false)));
            }
        }
    }
    for k in 0..segments.len() {
        if used[k] {
            continue;
        }
        let (edges, closed) = walk(k, segments[k].0, &mut used);
        let pts: Vec<[f64; 2]> = edges.iter().map(|&e| point_on(e)).collect();
        if pts.len() >= 3 {
            curves.push((k, Curve::from_points(pts, closed)));
        }
    }
    curves.sort_by_key(|(k, _)| *k);
    curves.into_iter().map(|(_, c)| c).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_disk(n: usize, bc: BoundaryData) -> Arc<Domain> {
        Arc::new(Domain::disk(1.0, n, bc).unwrap())
    }

    #[test]
    fn rectangle_spacing() {
        let d = Domain::rectangle(0.4, 1.0, 65, 161, BoundaryData::OneD { a: 0.6 }).unwrap();
        assert!((d.hx * 64.0 - 0.4).abs() < 1e-12 && (d.hy * 160.0 - 1.0).abs() < 1e-12);
        let p = Domain::rectangle(0.4, 1.0, 64, 160, BoundaryData::PeriodicXDirichletY { a: 0.6 }).unwrap();
        assert!((p.hx * 64.0 - 0.4).abs() < 1e-12);
        assert!(Domain::rectangle(0.4, 1.0, 64, 160, BoundaryData::OneD { a: 1.2 }).is_err());
    }

    #[test]
    fn disk_mask_is_consistent() {
        let d = unit_disk(65, BoundaryData::Constant([1.0, 0.0]));
        for n in 0..d.len() {
            let [x, y] = d.coords(n);
            if d.is_inside(n) {
                assert!(x.hypot(y) < 1.0);
            }
        }
        assert!((d.hx * 64.0 - 2.0).abs() < 1e-12);
    }

    #[test]
    fn affine_divergence_is_exact() {
        let d = unit_disk(33, BoundaryData::Constant([0.0, 0.0]));
        let f = GridField::from_fn(d.clone(), |x, y| [x, y]);
        assert!(divergence(&f).iter().all(|v| (v - 2.0).abs() < 1e-12));
        let f = GridField::from_fn(d, |x, _| [x, 0.0]);
        assert!(divergence(&f).iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_and_zero_fields_have_zero_energy() {
        let d = Arc::new(
            Domain::rectangle(1.0, 1.0, 20, 20, BoundaryData::Constant([1.0, 0.0])).unwrap(),
        );
        let spec = PotentialSpec::csh();
        let f = GridField::from_fn(d.clone(), |_, _| [1.0, 0.0]);
        assert_eq!(energy_eps(&f, 0.1, 1.0, &spec).unwrap().total, 0.0);
        let z = GridField::zeros(d);
        assert_eq!(energy_eps(&z, 0.1, 1.0, &spec).unwrap().total, 0.0);
    }

    #[test]
    fn constant_field_has_degree_zero() {
        let d = unit_disk(65, BoundaryData::Constant([0.6, 0.8]));
        let f = GridField::boundary_extension(d);
        assert!(degree_fourier(&f, 0.5).unwrap().abs() < 1e-10);
    }

    #[test]
    fn low_modulus_is_rejected() {
        let d = unit_disk(33, BoundaryData::Constant([0.0, 0.0]));
        let f = GridField::from_fn(d, |_, _| [0.1, 0.0]);
        assert!(matches!(degree_fourier(&f, 0.5), Err(Error::LowModulus { .. })));
    }

    #[test]
    fn unit_modulus_has_no_contour() {
        let d = unit_disk(33, BoundaryData::Constant([1.0, 0.0]));
        let f = GridField::from_fn(d, |x, y| {
            let a = y.atan2(x);
            [a.cos(), a.sin()]
        });
        assert!(interface_contour(&f, 0.5).is_empty());
    }
}
