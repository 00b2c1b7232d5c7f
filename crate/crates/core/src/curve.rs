//! Sampled planar curves with tangent angle, parametrization speed and curvature.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub vertices: Vec<[f64; 2]>,
    /// Tangent angle per vertex, unwrapped along the curve.
    pub theta: Vec<f64>,
    /// |r'| per vertex with respect to the sampling parameter.
    pub speed: Vec<f64>,
    /// d(theta)/ds per vertex (s = arclength).
    pub curvature: Vec<f64>,
    pub closed: bool,
    /// +1 for the normal (sin theta, -cos theta), -1 for its opposite.
    pub normal_sign: f64,
}

fn unwrap_angles(raw: &mut [f64]) {
    for i in 1..raw.len() {
        let mut d = raw[i] - raw[i - 1];
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        raw[i] = raw[i - 1] + d;
    }
}

impl Curve {
    /// Builds a curve from vertices sampled at parameter values `params`.
    /// For a closed curve the last vertex must not repeat the first;
    /// `params` then has one extra entry giving the parameter period end.
    pub fn from_parametric(vertices: Vec<[f64; 2]>, params: &[f64], closed: bool) -> Self {
        let n = vertices.len();
        assert!(n >= 2, "a curve needs at least two vertices");
        assert!(params.len() == n || (closed && params.len() == n + 1));
        let period = if closed { params[n.min(params.len() - 1)] - params[0] } else { 0.0 };
        let param = |i: isize| -> f64 {
            if i < 0 {
                params[(i + n as isize) as usize] - period
            } else if i as usize >= n {
                params[i as usize - n] + period
            } else {
                params[i as usize]
            }
        };
        let vert = |i: isize| -> [f64; 2] { vertices[i.rem_euclid(n as isize) as usize] };

        let mut theta = Vec::with_capacity(n);
        let mut speed = Vec::with_capacity(n);
        for i in 0..n as isize {
            let (lo, hi) = if closed {
                (i - 1, i + 1)
            } else if i == 0 {
                (0, 1)
            } else if i as usize == n - 1 {
                (i - 1, i)
            } else {
                (i - 1, i + 1)
            };
            let (a, b) = (vert(lo), vert(hi));
            let dx = b[0] - a[0];
            let dy = b[1] - a[1];
            theta.push(dy.atan2(dx));
            let dp = param(hi) - param(lo);
            speed.push(dx.hypot(dy) / dp.abs().max(f64::MIN_POSITIVE));
        }
        unwrap_angles(&mut theta);

        let mut curve = Self {
            vertices,
            theta,
            speed,
            curvature: vec![0.0; n],
            closed,
            normal_sign: 1.0,
        };
        curve.curvature = curve.compute_curvature();
        curve
    }

    /// Builds a curve parametrized by its own polyline arclength.
    pub fn from_points(vertices: Vec<[f64; 2]>, closed: bool) -> Self {
        let mut s = vec![0.0];
        let n = vertices.len();
        let edges = if closed { n } else { n - 1 };
        for i in 0..edges {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            s.push(s.last().unwrap() + (b[0] - a[0]).hypot(b[1] - a[1]));
        }
        if !closed {
            s.truncate(n);
        }
        Self::from_parametric(vertices, &s, closed)
    }

    /// Replaces the chord-based tangent angles by exact ones (unwrapped here)
    /// and recomputes the curvature.
    pub fn with_tangent_angles(mut self, mut theta: Vec<f64>) -> Self {
        assert_eq!(theta.len(), self.vertices.len());
        unwrap_angles(&mut theta);
        self.theta = theta;
        self.curvature = self.compute_curvature();
        self
    }

    fn compute_curvature(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let s = self.arclength();
        let total = self.length();
        let mut theta = self.theta.clone();
        if self.closed {
            // extend with wrapped neighbours so the derivative is periodic
            let turn = {
                let mut t = theta.clone();
                t.push(theta[0]);
                unwrap_angles(&mut t);
                t[n] - theta[0]
            };
            let mut out = vec![0.0; n];
            for i in 0..n {
                let (tp, sp) = if i + 1 < n {
                    (theta[i + 1], s[i + 1])
                } else {
                    (theta[0] + turn, total)
                };
                let (tm, sm) = if i > 0 {
                    (theta[i - 1], s[i - 1])
                } else {
                    (theta[n - 1] - turn, s[n - 1] - total)
                };
                out[i] = (tp - tm) / (sp - sm);
            }
            return out;
        }
        theta.truncate(n);
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(1);
                let hi = (i + 1).min(n - 1);
                (theta[hi] - theta[lo]) / (s[hi] - s[lo])
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Cumulative polyline arclength at each vertex.
    pub fn arclength(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.vertices.len());
        s.push(0.0);
        for w in self.vertices.windows(2) {
            s.push(s.last().unwrap() + (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]));
        }
        s
    }

    /// Total polyline length (including the closing edge).
    pub fn length(&self) -> f64 {
        let open = *self.arclength().last().unwrap();
        if self.closed {
            let a = self.vertices[self.vertices.len() - 1];
            let b = self.vertices[0];
            open + (b[0] - a[0]).hypot(b[1] - a[1])
        } else {
            open
        }
    }

    pub fn tangent(&self, i: usize) -> [f64; 2] {
        [self.theta[i].cos(), self.theta[i].sin()]
    }

    pub fn normal(&self, i: usize) -> [f64; 2] {
        let t = self.theta[i];
        [self.normal_sign * t.sin(), -self.normal_sign * t.cos()]
    }

    /// Signed shoelace area (positive for counter-clockwise curves).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        let mut acc = 0.0;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            acc += a[0] * b[1] - a[1] * b[0];
        }
        0.5 * acc
    }

    /// Largest angle between the stored tangent and the normalized central
    /// chord through neighbouring vertices. Interior vertices only; vertices
    /// within two samples of a cusp are skipped.
    pub fn max_chord_angle_error(&self) -> f64 {
        let n = self.vertices.len();
        let cusps = self.cusp_indices();
        let near_cusp = |i: usize| {
            cusps.iter().any(|&c| {
                let d = i.abs_diff(c);
                let d = if self.closed { d.min(n - d) } else { d };
                d <= 2 || (c > 0 && i.abs_diff(c - 1) <= 2)
            })
        };
        let mut worst: f64 = 0.0;
        for i in (1..n - 1).filter(|&i| !near_cusp(i)) {
            let a = self.vertices[i - 1];
            let b = self.vertices[i + 1];
            let chord = (b[1] - a[1]).atan2(b[0] - a[0]);
            let mut d = (chord - self.theta[i]).rem_euclid(2.0 * PI);
            if d > PI {
                d = 2.0 * PI - d;
            }
            worst = worst.max(d);
        }
        worst
    }

    /// Indices of vertices where the polyline reverses direction (cusps).
    /// Edges of negligible length are skipped, so a duplicated cusp vertex is reported once.
    pub fn cusp_indices(&self) -> Vec<usize> {
        let n = self.vertices.len();
        let edges = if self.closed { n } else { n - 1 };
        let edge = |i: usize| {
            let a = self.vertices[i % n];
            let b = self.vertices[(i + 1) % n];
            [b[0] - a[0], b[1] - a[1]]
        };
        let tiny = 1e-9 * self.length() / edges as f64;
        let nonzero: Vec<usize> = (0..edges)
            .filter(|&i| {
                let e = edge(i);
                e[0].hypot(e[1]) > tiny
            })
            .collect();
        let mut cusps = Vec::new();
        let m = nonzero.len();
        let pairs = if self.closed { m } else { m.saturating_sub(1) };
        for p in 0..pairs {
            let (i, j) = (nonzero[p], nonzero[(p + 1) % m]);
            let (a, b) = (edge(i), edge(j));
            let cos = (a[0] * b[0] + a[1] * b[1]) / (a[0].hypot(a[1]) * b[0].hypot(b[1]));
            if cos < -0.5 {
                cusps.push((i + 1) % n);
            }
        }
        cusps
    }

    /// Shortest distance from `p` to the polyline.
    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        let n = self.vertices.len();
        let edges = if self.closed { n } else { n - 1 };
        (0..edges)
            .map(|i| segment_distance(p, self.vertices[i], self.vertices[(i + 1) % n]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

/// Largest distance from a vertex of `from` to the polyline `to`.
pub fn directed_hausdorff(from: &Curve, to: &Curve) -> f64 {
    from.vertices.iter().map(|&p| to.distance_to(p)).fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two sampled curves.
pub fn hausdorff(a: &Curve, b: &Curve) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}
