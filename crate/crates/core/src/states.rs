//! Test states on the half-line: localized wave packets with closed-form
//! derivatives, plus the seeded dictionary used by the smoothness and
//! wave-operator experiments.


use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::C64;

/// Analytic state families. Both vanish (exactly or to machine level) at the
/// origin, so sampling onto a Dirichlet grid is consistent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum StateSpec {
    /// `exp(-1/(1-u²)) e^{i momentum x}` on `|u| < 1`, `u = (x-center)/halfwidth`;
    /// identically zero outside. Compact support keeps every boundary term exact.
    Bump {
        center: f64,
        halfwidth: f64,
        momentum: f64,
    },
    /// `x·exp(-(x-center)²/(2 width²)) e^{i momentum x}`; the x-prefactor
    /// enforces the Dirichlet condition exactly.
    Gaussian {
        center: f64,
        width: f64,
        momentum: f64,
    },
}

impl StateSpec {
    /// Unnormalized value.
    pub fn eval(&self, x: f64) -> C64 {
        match *self {
            StateSpec::Bump {
                center,
                halfwidth,
                momentum,
            } => {
                let u = (x - center) / halfwidth;
                if u.abs() >= 1.0 {
                    return C64::new(0.0, 0.0);
                }
                let amp = (-1.0 / (1.0 - u * u)).exp();
                C64::from_polar(amp, momentum * x)
            }
            StateSpec::Gaussian {
                center,
                width,
                momentum,
            } => {
                let g = (-(x - center) * (x - center) / (2.0 * width * width)).exp();
                C64::from_polar(x * g, momentum * x)
            }
        }
    }

    /// Closed-form second derivative of the unnormalized state; the
    /// similarity experiments need `-φ''` without stencil error.
    pub fn second_derivative(&self, x: f64) -> C64 {
        match *self {
            StateSpec::Bump {
                center,
                halfwidth,
                momentum,
            } => {
                let w = halfwidth;
                let u = (x - center) / w;
                if u.abs() >= 1.0 {
                    return C64::new(0.0, 0.0);
                }
                let om = 1.0 - u * u;
                let f = self.eval(x);
                // logarithmic derivative a = φ'/φ and its derivative
                let a = C64::new(-2.0 * u / (w * om * om), momentum);
                let da = C64::new(-2.0 * (1.0 + 3.0 * u * u) / (w * w * om * om * om), 0.0);
                (a * a + da) * f
            }
            StateSpec::Gaussian {
                center,
                width,
                momentum,
            } => {
                let s2 = width * width;
                let d = x - center;
                let g = (-d * d / (2.0 * s2)).exp();
                let phase = C64::from_polar(1.0, momentum * x);
                // φ = x g e^{iqx}: φ'' = (x g'' + 2 g') e^{iqx} + 2 i q (x g)' e^{iqx} - q² x g e^{iqx}
                let gp = -d / s2 * g;
                let gpp = (d * d / (s2 * s2) - 1.0 / s2) * g;
                let iq = C64::new(0.0, momentum);
                let real_part = x * gpp + 2.0 * gp;
                let first = x * gp + g;
                (C64::new(real_part, 0.0) + iq * 2.0 * first + iq * iq * (x * g)) * phase
            }
        }
    }

    /// Continuum L² norm of the unnormalized state.
    pub fn l2_norm(&self) -> f64 {
        let (lo, hi) = self.support_window();
        quad::integrate(|x| self.eval(x).norm_sqr(), lo, hi, 1e-13)
            .sqrt()
    }

    /// Interval outside which the state is zero or negligible.
    pub fn support_window(&self) -> (f64, f64) {
        match *self {
            StateSpec::Bump {
                center, halfwidth, ..
            } => ((center - halfwidth).max(0.0), center + halfwidth),
            StateSpec::Gaussian { center, width, .. } => {
                ((center - 12.0 * width).max(0.0), center + 12.0 * width)
            }
        }
    }

    /// Samples normalized to unit continuum L² norm.
    pub fn sample_normalized(&self, grid: &[f64]) -> Vec<C64> {
        let n = self.l2_norm();
        grid.iter().map(|&x| self.eval(x) / n).collect()
    }

    pub fn from_json(text: &str) -> Result<StateSpec> {
        serde_json::from_str(text).map_err(|e| Error::Schema(format!("state JSON: {e}")))
    }
}

/// Deterministic dictionary of test states. The seed only perturbs packet
/// parameters; identical seeds give identical dictionaries.
pub fn dictionary(seed: u64, count: usize) -> Vec<StateSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|j| {
            let center = rng.gen_range(5.0..11.0);
            let halfwidth = rng.gen_range(2.0..4.0f64).min(center - 0.5);
            let momentum = -rng.gen_range(0.8..2.2);
            if j % 3 == 2 {
                StateSpec::Gaussian {
                    center,
                    width: halfwidth / 2.5,
                    momentum,
                }
            } else {
                StateSpec::Bump {
                    center,
                    halfwidth,
                    momentum,
                }
            }
        })
        .collect()
}
