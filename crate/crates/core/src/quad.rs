//! Adaptive Gauss–Kronrod quadrature for real- and complex-valued integrands,
//! with a rational map for half-line tails.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// 15-point Kronrod abscissae (positive half, descending), from QUADPACK dqk15.
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715526,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];

const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

/// Scalar abstraction so the same driver serves f64 and Complex64 integrands.
pub trait QuadScalar: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, w: f64) -> Self;
    fn magnitude(self) -> f64;
}

impl QuadScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add(self, other: Self) -> Self {
        self + other
    }
    fn scale(self, w: f64) -> Self {
        self * w
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

/// One Gauss–Kronrod 15(7) panel; returns (integral, error estimate).
pub fn gk15<S: QuadScalar>(f: &mut impl FnMut(f64) -> S, a: f64, b: f64) -> (S, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_k = fc.scale(WGK[7]);
    let mut res_g = fc.scale(WG[3]);
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        let sum = f1.add(f2);
        res_k = res_k.add(sum.scale(WGK[j]));
        if j % 2 == 1 {
            res_g = res_g.add(sum.scale(WG[j / 2]));
        }
    }
    let err = res_k.add(res_g.scale(-1.0)).magnitude() * half.abs();
    (res_k.scale(half), err)
}

pub struct QuadResult<S> {
    pub value: S,
    pub error: f64,
    pub max_depth: usize,
}

/// Adaptive bisection driver on a finite interval, absolute tolerance.
pub fn adaptive<S: QuadScalar>(
    f: &mut impl FnMut(f64) -> S,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> QuadResult<S> {
    fn rec<S: QuadScalar>(
        f: &mut impl FnMut(f64) -> S,
        a: f64,
        b: f64,
        tol: f64,
        depth: usize,
        max_depth: usize,
    ) -> QuadResult<S> {
        let (v, e) = gk15(f, a, b);
        // the rounding floor keeps sub-machine-precision tolerances from
        // driving unbounded subdivision
        let floor = 1e-15 * (1.0 + v.magnitude());
        if e <= tol.max(floor)
            || depth >= max_depth
            || (b - a).abs() < 1e-13 * (1.0 + a.abs() + b.abs())
        {
            return QuadResult {
                value: v,
                error: e,
                max_depth: depth,
            };
        }
        let m = 0.5 * (a + b);
        let left = rec(f, a, m, 0.5 * tol, depth + 1, max_depth);
        let right = rec(f, m, b, 0.5 * tol, depth + 1, max_depth);
        QuadResult {
            value: left.value.add(right.value),
            error: left.error + right.error,
            max_depth: left.max_depth.max(right.max_depth),
        }
    }
    rec(f, a, b, tol, 0, max_depth)
}

/// Convenience: adaptive integral of a real function, error ignored on success.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let mut g = |x: f64| f(x);
    adaptive(&mut g, a, b, tol, 40).value
}

/// Adaptive integral that fails when the requested tolerance cannot be met.
/// Used where divergence must surface as an error rather than garbage.
pub fn integrate_checked(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut g = |x: f64| f(x);
    let r = adaptive(&mut g, a, b, tol, 44);
    let scale = 1.0 + r.value.abs();
    if !r.value.is_finite() || r.error > tol.max(1e-9 * scale) * 100.0 {
        return Err(Error::Divergence(format!(
            "integral on [{a}, {b}] did not converge (error estimate {:.3e})",
            r.error
        )));
    }
    Ok(r.value)
}

/// Integral over [a, ∞) via the substitution x = a + t/(1-t), t in [0,1).
///
/// The integrand must decay fast enough that the mapped integrand is
/// integrable up to t = 1; otherwise the error estimate blows up and an
/// error is returned.
pub fn integrate_tail(f: impl Fn(f64) -> f64, a: f64, tol: f64) -> Result<f64> {
    let g = |t: f64| {
        let om = 1.0 - t;
        if om <= 1e-14 {
            return 0.0;
        }
        let x = a + t / om;
        let jac = 1.0 / (om * om);
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    integrate_checked(g, 0.0, 1.0, tol)
}

/// Composite Simpson weights for a uniform grid with an odd node count.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 3 && n % 2 == 1, "simpson needs an odd node count >= 3");
    let mut w = vec![0.0; n];
    for (j, wj) in w.iter_mut().enumerate() {
        *wj = if j == 0 || j == n - 1 {
            1.0
        } else if j % 2 == 1 {
            4.0
        } else {
            2.0
        } * h
            / 3.0;
    }
    w
}
