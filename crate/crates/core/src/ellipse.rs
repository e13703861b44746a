//! Direct least-squares ellipse fitting.
//!
//! Minimizes the algebraic distance of a general conic
//! `A x² + B xy + C y² + D x + E y + F = 0` under the constraint
//! `4AC - B² = 1`, which only admits ellipses. The problem is split into the
//! quadratic and linear coefficient blocks so that the constrained
//! eigenproblem is 3×3 and well conditioned; points are centred and scaled
//! before fitting.

use core::f64::consts::{FRAC_PI_2, PI};
use core::fmt;

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    TooFewPoints { needed: usize, got: usize },
    /// The points do not determine a conic (e.g. they are collinear).
    Degenerate,
    /// The best constrained conic is not a real ellipse.
    NotAnEllipse,
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::TooFewPoints { needed, got } => write!(f, "too few points: need {needed}, got {got}"),
            Self::Degenerate => write!(f, "points do not determine a conic"),
            Self::NotAnEllipse => write!(f, "fitted conic is not an ellipse"),
        }
    }
}

impl core::error::Error for FitError {}

/// General conic coefficients `[A, B, C, D, E, F]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conic(pub [f64; 6]);

impl Conic {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let [a, b, c, d, e, f] = self.0;
        a * x * x + b * x * y + c * y * y + d * x + e * y + f
    }

    /// Geometric parameters, or `None` when the conic is not a real ellipse.
    pub fn to_ellipse(&self) -> Option<Ellipse> {
        let [a, b, c, d, e, f] = self.0;
        let det = 4.0 * a * c - b * b;
        if !(det.is_finite()) || det.abs() < 1e-300 {
            return None;
        }
        let cx = (b * e - 2.0 * c * d) / det;
        let cy = (b * d - 2.0 * a * e) / det;
        let f0 = f + 0.5 * (d * cx + e * cy);
        let theta = 0.5 * math::atan2(b, a - c);
        let (s, co) = (math::sin(theta), math::cos(theta));
        let ap = a * co * co + b * co * s + c * s * s;
        let cp = a * s * s - b * s * co + c * co * co;
        let (ra, rb) = (-f0 / ap, -f0 / cp);
        if !(ra > 0.0 && rb > 0.0 && ra.is_finite() && rb.is_finite()) {
            return None;
        }
        Some(Ellipse { cx, cy, a: math::sqrt(ra), b: math::sqrt(rb), rotation: theta }.canonical())
    }
}

/// Ellipse in geometric form. `a` is the semi-axis along `rotation`
/// (radians from +x towards +y), `b` the perpendicular one.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Ellipse {
    pub cx: f64,
    pub cy: f64,
    pub a: f64,
    pub b: f64,
    pub rotation: f64,
}

impl Ellipse {
    /// Same ellipse with `a >= b` and rotation in (-π/2, π/2].
    pub fn canonical(self) -> Self {
        let mut e = self;
        if e.b > e.a {
            core::mem::swap(&mut e.a, &mut e.b);
            e.rotation += FRAC_PI_2;
        }
        e.rotation = normalize_half_turn(e.rotation);
        e
    }

    pub fn point_at(&self, t: f64) -> (f64, f64) {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        let (u, v) = (self.a * math::cos(t), self.b * math::sin(t));
        (self.cx + c * u - s * v, self.cy + s * u + c * v)
    }

    /// `<= 1` inside or on the ellipse.
    pub fn normalized_radius2(&self, x: f64, y: f64) -> f64 {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        let (dx, dy) = (x - self.cx, y - self.cy);
        let u = (c * dx + s * dy) / self.a;
        let v = (-s * dx + c * dy) / self.b;
        u * u + v * v
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.normalized_radius2(x, y) <= 1.0
    }

    pub fn to_conic(&self) -> Conic {
        let (s, c) = (math::sin(self.rotation), math::cos(self.rotation));
        let (ia, ib) = (1.0 / (self.a * self.a), 1.0 / (self.b * self.b));
        let a = c * c * ia + s * s * ib;
        let b = 2.0 * c * s * (ia - ib);
        let cc = s * s * ia + c * c * ib;
        let d = -2.0 * a * self.cx - b * self.cy;
        let e = -b * self.cx - 2.0 * cc * self.cy;
        let f = a * self.cx * self.cx + b * self.cx * self.cy + cc * self.cy * self.cy - 1.0;
        Conic([a, b, cc, d, e, f])
    }
}

/// Maps an angle into (-π/2, π/2].
pub fn normalize_half_turn(theta: f64) -> f64 {
    let mut t = theta % PI;
    if t <= -FRAC_PI_2 {
        t += PI;
    } else if t > FRAC_PI_2 {
        t -= PI;
    }
    t
}

type M3 = [[f64; 3]; 3];

fn mat_mul(a: &M3, b: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn transpose(a: &M3) -> M3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[j][i];
        }
    }
    out
}

fn det3(m: &M3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn inverse3(m: &M3) -> Option<M3> {
    let det = det3(m);
    let scale = m.iter().flatten().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(det.abs() > 1e-12 * scale * scale * scale) {
        return None;
    }
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    let adj = [
        [c(1, 2, 1, 2), -c(0, 2, 1, 2), c(0, 1, 1, 2)],
        [-c(1, 2, 0, 2), c(0, 2, 0, 2), -c(0, 1, 0, 2)],
        [c(1, 2, 0, 1), -c(0, 2, 0, 1), c(0, 1, 0, 1)],
    ];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    Some(out)
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm2(v: [f64; 3]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Real roots of `x³ + p2 x² + p1 x + p0`, each polished by Newton steps.
fn cubic_real_roots(p2: f64, p1: f64, p0: f64) -> ([f64; 3], usize) {
    let shift = p2 / 3.0;
    let p = p1 - p2 * p2 / 3.0;
    let q = 2.0 * p2 * p2 * p2 / 27.0 - p2 * p1 / 3.0 + p0;
    let mut roots = [0.0; 3];
    let count;
    let disc = q * q / 4.0 + p * p * p / 27.0;
    if p.abs() < 1e-300 && q.abs() < 1e-300 {
        roots[0] = 0.0;
        count = 1;
    } else if disc > 0.0 {
        let sd = math::sqrt(disc);
        roots[0] = math::cbrt(-q / 2.0 + sd) + math::cbrt(-q / 2.0 - sd);
        count = 1;
    } else {
        let r = math::sqrt(-p / 3.0);
        let arg = if r == 0.0 { 0.0 } else { (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0) };
        let phi = math::acos(arg);
        for (k, root) in roots.iter_mut().enumerate() {
            *root = 2.0 * r * math::cos((phi - 2.0 * PI * k as f64) / 3.0);
        }
        count = 3;
    }
    for root in roots.iter_mut().take(count) {
        let mut x = *root - shift;
        for _ in 0..4 {
            let f = ((x + p2) * x + p1) * x + p0;
            let df = (3.0 * x + 2.0 * p2) * x + p1;
            if df == 0.0 {
                break;
            }
            let step = f / df;
            if !step.is_finite() {
                break;
            }
            x -= step;
        }
        *root = x;
    }
    (roots, count)
}

/// Unit null vector of `m - λI`, from the best-conditioned cross product of
/// two rows.
fn null_vector(m: &M3, lambda: f64) -> Option<[f64; 3]> {
    let mut r = *m;
    for (i, row) in r.iter_mut().enumerate() {
        row[i] -= lambda;
    }
    let candidates = [cross(r[0], r[1]), cross(r[0], r[2]), cross(r[1], r[2])];
    let best = candidates.into_iter().max_by(|a, b| norm2(*a).total_cmp(&norm2(*b)))?;
    let n = math::sqrt(norm2(best));
    (n > 0.0 && n.is_finite()).then(|| [best[0] / n, best[1] / n, best[2] / n])
}

/// Fits an ellipse to at least six points.
pub fn fit_ellipse(points: &[(f64, f64)]) -> Result<Ellipse, FitError> {
    const NEEDED: usize = 6;
    if points.len() < NEEDED {
        return Err(FitError::TooFewPoints { needed: NEEDED, got: points.len() });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let spread = points.iter().map(|p| math::hypot(p.0 - mx, p.1 - my)).sum::<f64>() / n;
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(FitError::Degenerate);
    }
    let s = core::f64::consts::SQRT_2 / spread;

    let mut s1 = [[0.0; 3]; 3];
    let mut s2 = [[0.0; 3]; 3];
    let mut s3 = [[0.0; 3]; 3];
    for &(px, py) in points {
        let (x, y) = ((px - mx) * s, (py - my) * s);
        let quad = [x * x, x * y, y * y];
        let lin = [x, y, 1.0];
        for i in 0..3 {
            for j in 0..3 {
                s1[i][j] += quad[i] * quad[j];
                s2[i][j] += quad[i] * lin[j];
                s3[i][j] += lin[i] * lin[j];
            }
        }
    }
    let s3_inv = inverse3(&s3).ok_or(FitError::Degenerate)?;
    // linear block as a function of the quadratic block: lin = t * quad
    let mut t = mat_mul(&s3_inv, &transpose(&s2));
    for row in t.iter_mut() {
        for v in row.iter_mut() {
            *v = -*v;
        }
    }
    let reduced = {
        let st = mat_mul(&s2, &t);
        let mut m = s1;
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += st[i][j];
            }
        }
        m
    };
    // premultiply by the inverse of the constraint block [[0,0,2],[0,-1,0],[2,0,0]]
    let m = [
        [reduced[2][0] / 2.0, reduced[2][1] / 2.0, reduced[2][2] / 2.0],
        [-reduced[1][0], -reduced[1][1], -reduced[1][2]],
        [reduced[0][0] / 2.0, reduced[0][1] / 2.0, reduced[0][2] / 2.0],
    ];
    let trace = m[0][0] + m[1][1] + m[2][2];
    let minors = (m[0][0] * m[1][1] - m[0][1] * m[1][0])
        + (m[0][0] * m[2][2] - m[0][2] * m[2][0])
        + (m[1][1] * m[2][2] - m[1][2] * m[2][1]);
    let (roots, count) = cubic_real_roots(-trace, minors, -det3(&m));

    let quad = roots[..count]
        .iter()
        .filter_map(|&l| null_vector(&m, l))
        .map(|v| (4.0 * v[0] * v[2] - v[1] * v[1], v))
        .filter(|(c, _)| *c > 0.0)
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v)
        .ok_or(FitError::NotAnEllipse)?;
    let lin = [
        t[0][0] * quad[0] + t[0][1] * quad[1] + t[0][2] * quad[2],
        t[1][0] * quad[0] + t[1][1] * quad[1] + t[1][2] * quad[2],
        t[2][0] * quad[0] + t[2][1] * quad[1] + t[2][2] * quad[2],
    ];

    // undo the normalization x' = s (x - mx), y' = s (y - my)
    let [a, b, c] = quad;
    let [d, e, f] = lin;
    let s2c = s * s;
    let conic = Conic([
        a * s2c,
        b * s2c,
        c * s2c,
        -2.0 * a * s2c * mx - b * s2c * my + d * s,
        -2.0 * c * s2c * my - b * s2c * mx + e * s,
        a * s2c * mx * mx + b * s2c * mx * my + c * s2c * my * my - d * s * mx - e * s * my + f,
    ]);
    conic.to_ellipse().ok_or(FitError::NotAnEllipse)
}
