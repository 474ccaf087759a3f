//! Real roots of low-degree polynomials (closed-form complex solutions plus
//! Newton polishing).

use nalgebra::Complex;

type C64 = Complex<f64>;

const LEAD_TOL: f64 = 1e-12;
/// Roots whose imaginary part is below this (relative) are treated as real;
/// near-double roots often come out as a complex pair with a tiny imaginary
/// part.
const IMAG_TOL: f64 = 1e-6;

/// Small fixed-capacity root list.
#[derive(Debug, Clone, Copy, Default)]
pub struct Roots {
    buf: [f64; 4],
    len: usize,
}

impl Roots {
    fn push(&mut self, x: f64) {
        if self.len < 4 {
            self.buf[self.len] = x;
            self.len += 1;
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.buf[..self.len]
    }
}

fn horner(c: &[f64], x: C64) -> (C64, C64) {
    // c[i] multiplies x^i; returns (p(x), p'(x))
    let mut p = C64::new(0.0, 0.0);
    let mut dp = C64::new(0.0, 0.0);
    for &ci in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + ci;
    }
    (p, dp)
}

fn polish(c: &[f64], mut x: C64) -> C64 {
    // Newton steps, kept only while they reduce |p|; near multiple roots the
    // derivative is tiny and a raw step can jump far away
    let (mut p, mut dp) = horner(c, x);
    for _ in 0..6 {
        if p.norm_sqr() == 0.0 || dp.norm_sqr() < 1e-300 {
            break;
        }
        let next = x - p / dp;
        if !next.re.is_finite() || !next.im.is_finite() {
            break;
        }
        let (np, ndp) = horner(c, next);
        if np.norm_sqr() >= p.norm_sqr() {
            break;
        }
        x = next;
        p = np;
        dp = ndp;
    }
    x
}

fn quadratic(b: C64, c: C64) -> [C64; 2] {
    // x^2 + b x + c, computed to avoid cancellation
    let d = (b * b - c * 4.0).sqrt();
    let s = if (b.conj() * d).re >= 0.0 { -(b + d) * 0.5 } else { (d - b) * 0.5 };
    if s.norm() == 0.0 {
        return [C64::new(0.0, 0.0); 2];
    }
    [s, c / s]
}

fn cubic(a: f64, b: f64, c: f64) -> [C64; 3] {
    // x^3 + a x^2 + b x + c
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let shift = C64::new(-a / 3.0, 0.0);
    let disc = C64::new(q * q / 4.0 + p * p * p / 27.0, 0.0).sqrt();
    let mut u = (C64::new(-q / 2.0, 0.0) + disc).powf(1.0 / 3.0);
    if u.norm() < 1e-14 {
        u = (C64::new(-q / 2.0, 0.0) - disc).powf(1.0 / 3.0);
    }
    let omega = C64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut out = [shift; 3];
    let mut w = C64::new(1.0, 0.0);
    for r in &mut out {
        let uk = u * w;
        let vk = if uk.norm() < 1e-300 { C64::new(0.0, 0.0) } else { -p / (uk * 3.0) };
        *r += uk + vk;
        w *= omega;
    }
    out
}

fn quartic(a: f64, b: f64, c: f64, d: f64) -> [C64; 4] {
    // x^4 + a x^3 + b x^2 + c x + d, via the depressed form y = x + a/4
    let a2 = a * a;
    let p = b - 3.0 * a2 / 8.0;
    let q = c - a * b / 2.0 + a2 * a / 8.0;
    let r = d - a * c / 4.0 + a2 * b / 16.0 - 3.0 * a2 * a2 / 256.0;
    let shift = C64::new(-a / 4.0, 0.0);
    let scale = 1.0 + p.abs() + r.abs().sqrt();
    if q.abs() <= 1e-14 * scale * scale.sqrt() {
        // biquadratic in y^2
        let [z1, z2] = quadratic(C64::new(p, 0.0), C64::new(r, 0.0));
        let (s1, s2) = (z1.sqrt(), z2.sqrt());
        return [shift + s1, shift - s1, shift + s2, shift - s2];
    }
    // resolvent cubic m^3 + p m^2 + (p^2/4 - r) m - q^2/8 = 0; any nonzero root works
    let ms = cubic(p, p * p / 4.0 - r, -q * q / 8.0);
    let m = ms
        .into_iter()
        .max_by(|x, y| x.norm_sqr().total_cmp(&y.norm_sqr()))
        .unwrap_or_default();
    let s = (m * 2.0).sqrt();
    if s.norm() < 1e-300 {
        let [z1, z2] = quadratic(C64::new(p, 0.0), C64::new(r, 0.0));
        let (s1, s2) = (z1.sqrt(), z2.sqrt());
        return [shift + s1, shift - s1, shift + s2, shift - s2];
    }
    let half_p = C64::new(p / 2.0, 0.0);
    let k = C64::new(q, 0.0) / (s * 2.0);
    let [y1, y2] = quadratic(-s, half_p + m + k);
    let [y3, y4] = quadratic(s, half_p + m - k);
    [shift + y1, shift + y2, shift + y3, shift + y4]
}

/// Real roots of `c[0] + c[1] x + c[2] x^2 + c[3] x^3 + c[4] x^4`.
///
/// Leading coefficients below `1e-12` of the largest one are dropped; the
/// roots lost that way have magnitude around `1e12` and beyond. An identically
/// zero polynomial has no reported roots.
pub fn real_roots(c: [f64; 5]) -> Roots {
    let mut out = Roots::default();
    let scale = c.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(scale > 0.0) || !scale.is_finite() {
        return out;
    }
    let c = c.map(|x| x / scale);
    let deg = match (0..5).rev().find(|&i| c[i].abs() > LEAD_TOL) {
        Some(d) => d,
        None => return out,
    };
    let lead = c[deg];
    let mut buf = [0.0; 5];
    for (m, x) in buf.iter_mut().zip(&c[..=deg]) {
        *m = x / lead;
    }
    let monic = &buf[..=deg];
    let mut push_all = |roots: &[C64]| {
        for &z in roots {
            let z = polish(monic, z);
            if z.re.is_finite() && z.im.abs() <= IMAG_TOL * (1.0 + z.re.abs()) {
                out.push(z.re);
            }
        }
    };
    match deg {
        0 => {}
        1 => push_all(&[C64::new(-monic[0], 0.0)]),
        2 => push_all(&quadratic(C64::new(monic[1], 0.0), C64::new(monic[0], 0.0))),
        3 => push_all(&cubic(monic[2], monic[1], monic[0])),
        _ => push_all(&quartic(monic[3], monic[2], monic[1], monic[0])),
    }
    out
}
