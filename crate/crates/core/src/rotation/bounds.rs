//! Exact extremes of the two axis-dependent residual coefficients over a
//! cube of rotation axes.
//!
//! For an association `(n, v)` and a rotation `R(u, theta)` the residual
//! expands to `n.v + h1(u) sin(theta) + h2(u) (1 - cos(theta))` with
//! `h1(u) = u . (v x n)` and `h2(u) = n^T [u]x^2 v = u^T M u - n.v`,
//! `M = (n v^T + v n^T) / 2`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use crate::bnb::Rect;
use crate::error::{Error, Result};
use crate::geometry::{polar_to_unit, unit_to_polar, Mat3, Vec3};
use crate::poly::real_roots;

const ANGLE_TOL: f64 = 1e-12;
const PARALLEL_TOL: f64 = 1e-9;

/// One candidate correspondence between a query line and a map line.
#[derive(Debug, Clone, PartialEq)]
pub struct Association {
    /// Query line (sample) index.
    pub query: usize,
    /// Map line index.
    pub map: usize,
    n: Vec3,
    v: Vec3,
    dot: f64,
    w: Vec3,
    w_norm: f64,
    c_polar: (f64, f64),
    // polar coordinates of +-m and +-m_perp
    m_polar: [(f64, f64); 2],
    m_perp_polar: [(f64, f64); 2],
    m: Vec3,
    m_perp: Vec3,
    c: Vec3,
    quad: Mat3,
}

fn any_orthogonal(x: &Vec3) -> Vec3 {
    let e = if x.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    x.cross(&e).normalize()
}

impl Association {
    /// `n` is the query line's normal and `v` the map line's direction; both
    /// are normalized here.
    pub fn new(query: usize, map: usize, n: Vec3, v: Vec3) -> Result<Self> {
        let (nn, vn) = (n.norm(), v.norm());
        if !(nn > 1e-12 && vn > 1e-12) || !nn.is_finite() || !vn.is_finite() {
            return Err(Error::invalid("association needs nonzero vectors"));
        }
        let (n, v) = (n / nn, v / vn);
        let dot = n.dot(&v);
        let w = v.cross(&n);
        let w_norm = w.norm();
        let sum = v + n;
        let diff = v - n;
        let (m, m_perp) = match (sum.norm() > PARALLEL_TOL, diff.norm() > PARALLEL_TOL) {
            (true, true) => (sum.normalize(), diff.normalize()),
            // v = n: the minimum eigenvalue is shared by the whole plane orthogonal to n
            (true, false) => (n, any_orthogonal(&n)),
            // v = -n
            (false, _) => (any_orthogonal(&n), -n),
        };
        let c = if w_norm > PARALLEL_TOL {
            w / w_norm
        } else {
            m.cross(&m_perp).normalize()
        };
        let quad = (n * v.transpose() + v * n.transpose()) * 0.5;
        Ok(Association {
            query,
            map,
            n,
            v,
            dot,
            w,
            w_norm,
            c_polar: unit_to_polar(&c),
            m_polar: [unit_to_polar(&m), unit_to_polar(&-m)],
            m_perp_polar: [unit_to_polar(&m_perp), unit_to_polar(&-m_perp)],
            m,
            m_perp,
            c,
            quad,
        })
    }

    pub fn normal(&self) -> &Vec3 {
        &self.n
    }

    pub fn direction(&self) -> &Vec3 {
        &self.v
    }

    /// `n . v`
    pub fn dot(&self) -> f64 {
        self.dot
    }

    /// Direction maximizing `h2`.
    pub fn m(&self) -> &Vec3 {
        &self.m
    }

    /// Direction minimizing `h2`.
    pub fn m_perp(&self) -> &Vec3 {
        &self.m_perp
    }

    /// Unit `v x n`, the maximizer of `h1`.
    pub fn c(&self) -> &Vec3 {
        &self.c
    }

    /// `|v x n|`, the Lipschitz constant of `h1` on the sphere.
    pub fn cross_norm(&self) -> f64 {
        self.w_norm
    }

    /// `M = (n v^T + v n^T) / 2`.
    pub fn quad(&self) -> &Mat3 {
        &self.quad
    }

    #[inline]
    pub fn h1(&self, u: &Vec3) -> f64 {
        u.dot(&self.w)
    }

    #[inline]
    pub fn h2(&self, u: &Vec3) -> f64 {
        u.dot(&(self.quad * u)) - self.dot
    }

    /// Signed residual `n^T R(u, theta) v`.
    pub fn residual(&self, u: &Vec3, theta: f64) -> f64 {
        let (s, c) = theta.sin_cos();
        self.dot + self.h1(u) * s + self.h2(u) * (1.0 - c)
    }
}

/// A cube of rotation axes in polar coordinates: `alpha in [0, pi]`,
/// `phi in [0, 2 pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisCube {
    pub alpha: [f64; 2],
    pub phi: [f64; 2],
}

impl AxisCube {
    pub fn new(alpha: [f64; 2], phi: [f64; 2]) -> Result<Self> {
        let ok = 0.0 <= alpha[0] && alpha[0] <= alpha[1] && alpha[1] <= PI
            && 0.0 <= phi[0] && phi[0] <= phi[1] && phi[1] <= TAU;
        if !ok {
            return Err(Error::invalid(format!("axis cube {alpha:?} x {phi:?} out of range")));
        }
        Ok(AxisCube { alpha, phi })
    }

    pub fn full_sphere() -> Self {
        AxisCube {
            alpha: [0.0, PI],
            phi: [0.0, TAU],
        }
    }

    pub fn point(alpha: f64, phi: f64) -> Self {
        AxisCube {
            alpha: [alpha, alpha],
            phi: [phi, phi],
        }
    }

    pub fn rect(&self) -> Rect {
        Rect::new([self.alpha[0], self.phi[0]], [self.alpha[1], self.phi[1]])
    }

    pub fn from_rect(r: &Rect) -> Self {
        AxisCube {
            alpha: [r.lo[0], r.hi[0]],
            phi: [r.lo[1], r.hi[1]],
        }
    }

    pub fn width(&self) -> f64 {
        (self.alpha[1] - self.alpha[0]).max(self.phi[1] - self.phi[0])
    }

    pub fn center(&self) -> (f64, f64) {
        (
            0.5 * (self.alpha[0] + self.alpha[1]),
            0.5 * (self.phi[0] + self.phi[1]),
        )
    }

    pub fn center_axis(&self) -> Vec3 {
        let (a, p) = self.center();
        polar_to_unit(a, p)
    }

    /// Upper bound on the geodesic distance from the center axis to any axis
    /// in the cube.
    pub fn angular_radius(&self) -> f64 {
        let (da, dp) = (self.alpha[1] - self.alpha[0], self.phi[1] - self.phi[0]);
        let sin_max = if self.alpha[0] <= FRAC_PI_2 && FRAC_PI_2 <= self.alpha[1] {
            1.0
        } else {
            self.alpha[0].sin().max(self.alpha[1].sin())
        };
        (0.5 * da + 0.5 * sin_max * dp).min(PI)
    }

    fn phi_contains(&self, phi: f64) -> bool {
        (phi - self.phi[0]).rem_euclid(TAU) <= self.phi[1] - self.phi[0] + ANGLE_TOL
    }

    /// Whether the unit vector `u` lies in the cube (poles match any `phi`).
    pub fn contains_axis(&self, u: &Vec3) -> bool {
        let (a, p) = unit_to_polar(u);
        self.contains_polar(a, p)
    }

    fn contains_polar(&self, a: f64, p: f64) -> bool {
        if a < self.alpha[0] - ANGLE_TOL || a > self.alpha[1] + ANGLE_TOL {
            return false;
        }
        a <= ANGLE_TOL || a >= PI - ANGLE_TOL || self.phi_contains(p)
    }

}

fn unit_sc((sa, ca): (f64, f64), (sp, cp): (f64, f64)) -> Vec3 {
    Vec3::new(sa * cp, sa * sp, ca)
}

/// Per-cube quantities shared by the bounds of every association.
#[derive(Debug, Clone)]
pub struct CubeFrame {
    cube: AxisCube,
    sc_alpha: [(f64, f64); 2],
    sc_phi: [(f64, f64); 2],
    /// `[alpha_i][phi_j]`
    corners: [[Vec3; 2]; 2],
}

impl CubeFrame {
    pub fn new(cube: &AxisCube) -> Self {
        let sc_alpha = [cube.alpha[0].sin_cos(), cube.alpha[1].sin_cos()];
        let sc_phi = [cube.phi[0].sin_cos(), cube.phi[1].sin_cos()];
        let corners = [
            [unit_sc(sc_alpha[0], sc_phi[0]), unit_sc(sc_alpha[0], sc_phi[1])],
            [unit_sc(sc_alpha[1], sc_phi[0]), unit_sc(sc_alpha[1], sc_phi[1])],
        ];
        CubeFrame {
            cube: *cube,
            sc_alpha,
            sc_phi,
            corners,
        }
    }

    pub fn cube(&self) -> &AxisCube {
        &self.cube
    }

    fn corner_iter(&self) -> impl Iterator<Item = &Vec3> {
        self.corners.iter().flatten()
    }
}

/// Wraps an angle into `(-pi, pi]`.
fn wrap(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(TAU) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

fn circ_dist(a: f64, b: f64) -> f64 {
    wrap(a - b).abs()
}

fn clamp_near(range: [f64; 2], x: f64) -> f64 {
    x.clamp(range[0], range[1])
}

fn far(range: [f64; 2], x: f64) -> f64 {
    if (x - range[0]).abs() >= (range[1] - x).abs() {
        range[0]
    } else {
        range[1]
    }
}

/// `alpha` maximizing `g(alpha) = sin(a_c) sin(alpha) cos(delta) + cos(a_c)
/// cos(alpha)` over `range`.
fn alpha_argmax(range: [f64; 2], alpha_c: f64, delta: f64) -> f64 {
    if delta <= ANGLE_TOL {
        return clamp_near(range, alpha_c);
    }
    if (delta - FRAC_PI_2).abs() <= ANGLE_TOL {
        return if alpha_c <= FRAC_PI_2 { range[0] } else { range[1] };
    }
    let a = alpha_c.sin() * delta.cos();
    let b = alpha_c.cos();
    if delta < FRAC_PI_2 {
        // g = rho cos(alpha - beta) with beta in [0, pi] its maximizer
        clamp_near(range, a.atan2(b).clamp(0.0, PI))
    } else {
        // beta + pi in [0, pi] is the minimizer; g grows away from it
        far(range, (a.atan2(b) + PI).clamp(0.0, PI))
    }
}

/// `alpha` minimizing `g` over `range`.
fn alpha_argmin(range: [f64; 2], alpha_c: f64, delta: f64) -> f64 {
    if (delta - FRAC_PI_2).abs() <= ANGLE_TOL {
        return if alpha_c <= FRAC_PI_2 { range[1] } else { range[0] };
    }
    let a = alpha_c.sin() * delta.cos();
    let b = alpha_c.cos();
    if delta < FRAC_PI_2 {
        far(range, a.atan2(b).clamp(0.0, PI))
    } else {
        clamp_near(range, (a.atan2(b) + PI).clamp(0.0, PI))
    }
}

/// Exact `(min, max)` of `h1` over the cube.
///
/// `h1(u) = |v x n| (u . c)`. For a fixed `alpha` the dot product is largest
/// at the `phi` closest (circularly) to `phi_c` and smallest at the farthest,
/// which reduces each extreme to a one-dimensional sinusoid in `alpha`.
pub fn h1_bounds(cube: &AxisCube, a: &Association) -> (f64, f64) {
    h1_bounds_in(&CubeFrame::new(cube), a)
}

/// [`h1_bounds`] with the per-cube work already done.
pub fn h1_bounds_in(frame: &CubeFrame, a: &Association) -> (f64, f64) {
    let cube = &frame.cube;
    if a.w_norm <= PARALLEL_TOL {
        // |h1| <= |v x n|, which is negligible here
        return (-a.w_norm, a.w_norm);
    }
    let (alpha_c, phi_c) = a.c_polar;
    let (phi_near, d_near) = if cube.phi_contains(phi_c) {
        (phi_c, 0.0)
    } else {
        let (d0, d1) = (circ_dist(cube.phi[0], phi_c), circ_dist(cube.phi[1], phi_c));
        if d0 <= d1 {
            (cube.phi[0], d0)
        } else {
            (cube.phi[1], d1)
        }
    };
    let anti = phi_c + PI;
    let (phi_far, d_far) = if cube.phi_contains(anti) {
        (anti, PI)
    } else {
        let (d0, d1) = (circ_dist(cube.phi[0], phi_c), circ_dist(cube.phi[1], phi_c));
        if d0 >= d1 {
            (cube.phi[0], d0)
        } else {
            (cube.phi[1], d1)
        }
    };
    let u_max = polar_to_unit(alpha_argmax(cube.alpha, alpha_c, d_near), phi_near);
    let u_min = polar_to_unit(alpha_argmin(cube.alpha, alpha_c, d_far), phi_far);
    let mut hi = a.h1(&u_max);
    let mut lo = a.h1(&u_min);
    // corners are attained values, so folding them in never loosens the bounds
    for u in frame.corner_iter() {
        let h = a.h1(u);
        hi = hi.max(h);
        lo = lo.min(h);
    }
    (lo, hi)
}

/// Exact `(min, max)` of `h2` over the cube.
///
/// Interior extremes can only sit at `+-m` (maximum) or `+-m_perp`
/// (minimum); everything else is found on the four boundary arcs.
pub fn h2_bounds(cube: &AxisCube, a: &Association) -> (f64, f64) {
    h2_bounds_in(&CubeFrame::new(cube), a)
}

/// [`h2_bounds`] with the per-cube work already done.
pub fn h2_bounds_in(frame: &CubeFrame, a: &Association) -> (f64, f64) {
    let cube = &frame.cube;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut visit = |u: &Vec3| {
        let h = a.h2(u);
        lo = lo.min(h);
        hi = hi.max(h);
    };
    for u in frame.corner_iter() {
        visit(u);
    }
    for j in 0..2 {
        meridian_candidates(&a.quad, cube.alpha, &frame.sc_alpha, frame.sc_phi[j], &mut visit);
    }
    for i in 0..2 {
        parallel_candidates(&a.quad, cube.alpha[i], frame.sc_alpha[i], cube.phi, &frame.sc_phi, &mut visit);
    }
    if a.m_polar.iter().any(|&(al, ph)| cube.contains_polar(al, ph)) {
        hi = hi.max(a.h2(&a.m));
    }
    if a.m_perp_polar.iter().any(|&(al, ph)| cube.contains_polar(al, ph)) {
        lo = lo.min(a.h2(&a.m_perp));
    }
    (lo, hi)
}

/// Interior stationary points of `u^T M u` along `phi = const`; the arc ends
/// are corners and visited by the caller.
///
/// On a meridian `u = sin(alpha) e + cos(alpha) z`, so the quadratic form is
/// `P + Q cos(2 alpha) + S sin(2 alpha)`.
fn meridian_candidates(
    m: &Mat3,
    alpha: [f64; 2],
    sc_alpha: &[(f64, f64); 2],
    (sp, cp): (f64, f64),
    visit: &mut impl FnMut(&Vec3),
) {
    if alpha[1] <= alpha[0] {
        return;
    }
    let e = Vec3::new(cp, sp, 0.0);
    let me = m * e;
    let eme = e.dot(&me);
    let q = 0.5 * (m[(2, 2)] - eme);
    let s = me.z;
    if q == 0.0 && s == 0.0 {
        return;
    }
    // same no-root certificate as on parallels, with |f''| <= 4 |(q, s)|
    let slope = |(sa, ca): (f64, f64)| 2.0 * (s * (ca * ca - sa * sa) - 2.0 * q * sa * ca);
    let ends = slope(sc_alpha[0]).abs() + slope(sc_alpha[1]).abs();
    if ends > 4.0 * (q * q + s * s).sqrt() * (alpha[1] - alpha[0]) * (1.0 + 1e-9) + 1e-15 {
        return;
    }
    let base = 0.5 * s.atan2(q);
    for k in -1..=2 {
        let x = base + k as f64 * FRAC_PI_2;
        if alpha[0] < x && x < alpha[1] {
            visit(&unit_sc(x.sin_cos(), (sp, cp)));
        }
    }
}

/// Interior stationary points of `u^T M u` along `alpha = const`; the arc
/// ends are corners and visited by the caller.
///
/// With `u = (s cos(phi), s sin(phi), c)` the form is
/// `const + B cos(2 phi) + C sin(2 phi) + D cos(phi) + E sin(phi)`; the
/// substitution `t = tan(phi / 2)` turns its stationary equation into a
/// quartic in `t`. `phi = pi` (t at infinity) is checked separately.
fn parallel_candidates(
    m: &Mat3,
    alpha: f64,
    sc_alpha: (f64, f64),
    phi: [f64; 2],
    sc_phi: &[(f64, f64); 2],
    visit: &mut impl FnMut(&Vec3),
) {
    let (s, c) = sc_alpha;
    if phi[1] <= phi[0] || s.abs() < 1e-15 {
        return;
    }
    let b = 0.5 * s * s * (m[(0, 0)] - m[(1, 1)]);
    let cc = s * s * m[(0, 1)];
    let d = 2.0 * s * c * m[(0, 2)];
    let e = 2.0 * s * c * m[(1, 2)];
    // If f' had a root x inside, |f'(phi0)| + |f'(phi1)| <= sup|f''| (phi1 - phi0).
    let slope = |(sp, cp): (f64, f64)| {
        -4.0 * b * sp * cp + 2.0 * cc * (cp * cp - sp * sp) - d * sp + e * cp
    };
    let curv = 4.0 * (b * b + cc * cc).sqrt() + (d * d + e * e).sqrt();
    let ends = slope(sc_phi[0]).abs() + slope(sc_phi[1]).abs();
    if ends > curv * (phi[1] - phi[0]) * (1.0 + 1e-9) + 1e-15 {
        return;
    }
    let coeffs = [
        2.0 * cc + e,
        -8.0 * b - 2.0 * d,
        -12.0 * cc,
        8.0 * b - 2.0 * d,
        2.0 * cc - e,
    ];
    let mut push = |x: f64| {
        for k in -1..=2 {
            let y = x + k as f64 * TAU;
            if phi[0] < y && y < phi[1] {
                visit(&polar_to_unit(alpha, y));
            }
        }
    };
    push(PI);
    for &t in real_roots(coeffs).as_slice() {
        push(2.0 * t.atan());
    }
}
