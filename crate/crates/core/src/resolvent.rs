//! Resolvent integral kernel, weighted operator-norm checks, and the
//! Kato-smoothness integrals by stationary and time-dependent routes.


use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{self, DynamicsConfig};
use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::quad;
use crate::spectrum::{self, SearchRegion};
use crate::states::StateSpec;
use crate::{sinc_c, solver, C64};

/// Multiplication operator with finite bracket norm `(∫ x |w(x)|² dx)^{1/2}`.
#[derive(Debug, Clone)]
pub struct WeightedFactor {
    kind: FactorKind,
    bracket: f64,
}

#[derive(Debug, Clone)]
enum FactorKind {
    /// `|V(x)|^{1/2}`
    SqrtAbsV(Potential),
    /// `V(x) / |V(x)|^{1/2}`: same magnitude, carries the phase of V so the
    /// factorization `A·B = V` is exact in the resolvent identity
    KatoSqrtV(Potential),
    /// indicator of `[lo, hi]`
    Indicator { lo: f64, hi: f64 },
    Zero,
}

impl WeightedFactor {
    pub fn sqrt_abs_v(p: &Potential) -> Result<Self> {
        let bracket = p.first_moment()?.sqrt();
        Ok(WeightedFactor {
            kind: FactorKind::SqrtAbsV(p.clone()),
            bracket,
        })
    }

    /// The phase-carrying square root used for the left factor `A = √V`.
    pub fn kato_sqrt_v(p: &Potential) -> Result<Self> {
        let bracket = p.first_moment()?.sqrt();
        Ok(WeightedFactor {
            kind: FactorKind::KatoSqrtV(p.clone()),
            bracket,
        })
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        let bracket = (0.5 * (hi * hi - lo * lo)).sqrt();
        WeightedFactor {
            kind: FactorKind::Indicator { lo, hi },
            bracket,
        }
    }

    pub fn zero() -> Self {
        WeightedFactor {
            kind: FactorKind::Zero,
            bracket: 0.0,
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        match &self.kind {
            FactorKind::SqrtAbsV(p) => C64::new(p.abs_at(x).sqrt(), 0.0),
            FactorKind::KatoSqrtV(p) => {
                let v = p.evaluate(x).unwrap_or(C64::new(0.0, 0.0));
                let m = v.norm();
                if m == 0.0 {
                    C64::new(0.0, 0.0)
                } else {
                    v / m.sqrt()
                }
            }
            FactorKind::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    C64::new(1.0, 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }
            FactorKind::Zero => C64::new(0.0, 0.0),
        }
    }

    pub fn bracket_norm(&self) -> f64 {
        self.bracket
    }

    /// Right endpoint beyond which the factor vanishes (or is negligible).
    pub fn support_end(&self, fallback: f64) -> f64 {
        match &self.kind {
            FactorKind::SqrtAbsV(p) | FactorKind::KatoSqrtV(p) => {
                p.support().unwrap_or(fallback)
            }
            FactorKind::Indicator { hi, .. } => *hi,
            FactorKind::Zero => 0.0,
        }
    }
}

/// Resolvent kernel `s(min{x,ξ}, k) e(max{x,ξ}, k) / e(k)` for `λ = k²`.
pub fn resolvent_kernel(p: &Potential, k: C64, x: f64, xi: f64) -> Result<C64> {
    let ek = spectrum::jost_function(p, k)?;
    if ek.norm() < 1e-10 {
        return Err(Error::Pole(format!(
            "|e(k)| = {:.3e} at k = {k}",
            ek.norm()
        )));
    }
    let (lo, hi) = if x <= xi { (x, xi) } else { (xi, x) };
    let s = solver::regular_solution(p, k, &[lo])?.values[0];
    let e = solver::jost_solution(p, k, &[hi])?.values[0];
    Ok(s * e / ek)
}

/// Cached solutions of one wavenumber on a quadrature grid; applies the
/// resolvent by two cumulative passes.
pub struct ResolventEvaluator {
    pub k: C64,
    pub jost_value: C64,
    pub grid: Vec<f64>,
    s_vals: Vec<C64>,
    e_vals: Vec<C64>,
}

impl ResolventEvaluator {
    /// Build on an ascending grid starting at (or near) 0. `free` selects the
    /// zero potential regardless of `p`.
    pub fn new(p: &Potential, k: C64, grid: &[f64]) -> Result<Self> {
        let s = solver::regular_solution(p, k, grid)?;
        let e = solver::jost_solution(p, k, grid)?;
        let ek = spectrum::jost_function(p, k)?;
        Ok(ResolventEvaluator {
            k,
            jost_value: ek,
            grid: grid.to_vec(),
            s_vals: s.values,
            e_vals: e.values,
        })
    }

    /// Free-field evaluator from closed forms (`s = sin(kx)/k`, `e = e^{ikx}`).
    pub fn free(k: C64, grid: &[f64]) -> Self {
        let s_vals = grid.iter().map(|&x| sinc_c(k * x) * x).collect();
        let e_vals = grid
            .iter()
            .map(|&x| (C64::new(0.0, 1.0) * k * x).exp())
            .collect();
        ResolventEvaluator {
            k,
            jost_value: C64::new(1.0, 0.0),
            grid: grid.to_vec(),
            s_vals,
            e_vals,
        }
    }

    /// `u = R(k²) φ` by cumulative trapezoid quadrature on the grid.
    pub fn apply(&self, phi: &[C64]) -> Result<Vec<C64>> {
        if phi.len() != self.grid.len() {
            return Err(Error::Mismatch("state length != grid length".into()));
        }
        if self.jost_value.norm() < 1e-10 {
            return Err(Error::Pole(format!(
                "|e(k)| = {:.3e} at k = {}",
                self.jost_value.norm(),
                self.k
            )));
        }
        let n = self.grid.len();
        let f1: Vec<C64> = (0..n).map(|i| self.s_vals[i] * phi[i]).collect();
        let f2: Vec<C64> = (0..n).map(|i| self.e_vals[i] * phi[i]).collect();
        let c1 = cumulative_forward(&self.grid, &f1);
        let c2 = cumulative_backward(&self.grid, &f2);
        Ok((0..n)
            .map(|i| (self.e_vals[i] * c1[i] + self.s_vals[i] * c2[i]) / self.jost_value)
            .collect())
    }

    /// Kernel of `e(k) R(k²)` (no division): `s(min) e(max)`.
    pub fn numerator_kernel(&self, i: usize, j: usize) -> C64 {
        let (lo, hi) = if i <= j { (i, j) } else { (j, i) };
        self.s_vals[lo] * self.e_vals[hi]
    }
}

/// Prefix integrals `∫_{x_0}^{x_i} f` on a uniform grid with fourth-order
/// three-point cell rules; falls back to trapezoid on nonuniform grids.
fn cumulative_forward(grid: &[f64], f: &[C64]) -> Vec<C64> {
    let n = grid.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 3 || !is_uniform(grid) {
        for i in 1..n {
            let h = grid[i] - grid[i - 1];
            out[i] = out[i - 1] + (f[i - 1] + f[i]) * (0.5 * h);
        }
        return out;
    }
    let h = grid[1] - grid[0];
    for i in 1..n {
        let cell = if i + 1 < n {
            (f[i - 1] * 5.0 + f[i] * 8.0 - f[i + 1]) * (h / 12.0)
        } else {
            (-f[i - 2] + f[i - 1] * 8.0 + f[i] * 5.0) * (h / 12.0)
        };
        out[i] = out[i - 1] + cell;
    }
    out
}

/// Suffix integrals `∫_{x_i}^{x_{n-1}} f`, same rules.
fn cumulative_backward(grid: &[f64], f: &[C64]) -> Vec<C64> {
    let n = grid.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    if n < 3 || !is_uniform(grid) {
        for i in (0..n - 1).rev() {
            let h = grid[i + 1] - grid[i];
            out[i] = out[i + 1] + (f[i] + f[i + 1]) * (0.5 * h);
        }
        return out;
    }
    let h = grid[1] - grid[0];
    for i in (0..n - 1).rev() {
        let cell = if i + 2 < n {
            (f[i] * 5.0 + f[i + 1] * 8.0 - f[i + 2]) * (h / 12.0)
        } else {
            (-f[i - 1] + f[i] * 8.0 + f[i + 1] * 5.0) * (h / 12.0)
        };
        out[i] = out[i + 1] + cell;
    }
    out
}

fn is_uniform(grid: &[f64]) -> bool {
    if grid.len() < 2 {
        return true;
    }
    let h = grid[1] - grid[0];
    grid.windows(2)
        .all(|w| ((w[1] - w[0]) - h).abs() < 1e-9 * (1.0 + h))
}

/// One wavenumber's outcome of the weighted-resolvent norm check.
#[derive(Debug, Clone, Serialize)]
pub struct WeightedNormPoint {
    pub k: [f64; 2],
    /// Hilbert–Schmidt norm of `e(k) A R_V(k²) B`, formed from the
    /// numerator kernel so it stays finite across resolvent poles
    pub hs_norm: f64,
    pub bound: f64,
    pub abs_jost: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct WeightedNormReport {
    pub constant: f64,
    pub bracket_a: f64,
    pub bracket_b: f64,
    pub points: Vec<WeightedNormPoint>,
}

impl WeightedNormReport {
    pub fn all_hold(&self) -> bool {
        self.points.iter().all(|p| p.holds)
    }
}

/// Check `‖e(k) A R_V(k²) B‖_HS <= exp(∫ x|V|) ⟨a⟩⟨b⟩` on a wavenumber grid.
///
/// The Hilbert–Schmidt norm is what the underlying Cauchy–Schwarz chain
/// bounds, so the inequality is exact up to quadrature; violations are
/// reported, not raised.
pub fn weighted_norm_check(
    p: &Potential,
    a_factor: &WeightedFactor,
    b_factor: &WeightedFactor,
    k_grid: &[C64],
) -> Result<WeightedNormReport> {
    let first_moment = p.first_moment()?;
    let constant = first_moment.exp();
    let bound = constant * a_factor.bracket_norm() * b_factor.bracket_norm();
    let x_end = p
        .truncation_radius(1e-10)
        .max(a_factor.support_end(0.0))
        .max(b_factor.support_end(0.0))
        .max(1.0);
    let n = 201;
    let h = x_end / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let w = quad::simpson_weights(n, h);
    let points: Vec<Result<WeightedNormPoint>> = k_grid
        .par_iter()
        .map(|&k| {
            let ev = ResolventEvaluator::new(p, k, &grid)?;
            let a2: Vec<f64> = grid.iter().map(|&x| a_factor.eval(x).norm_sqr()).collect();
            let b2: Vec<f64> = grid.iter().map(|&x| b_factor.eval(x).norm_sqr()).collect();
            // |K(i,j)|² = |s(min)|²|e(max)|²: prefix sums give O(n)
            let s2: Vec<f64> = ev.s_vals.iter().map(|v| v.norm_sqr()).collect();
            let e2: Vec<f64> = ev.e_vals.iter().map(|v| v.norm_sqr()).collect();
            let mut pre_s = vec![0.0; n]; // Σ_{j<=i} w_j s2_j b2_j
            let mut acc = 0.0;
            for j in 0..n {
                acc += w[j] * s2[j] * b2[j];
                pre_s[j] = acc;
            }
            let mut suf_e = vec![0.0; n]; // Σ_{j>i} w_j e2_j b2_j
            acc = 0.0;
            for j in (0..n).rev() {
                suf_e[j] = acc;
                acc += w[j] * e2[j] * b2[j];
            }
            let mut hs2 = 0.0;
            for i in 0..n {
                hs2 += w[i] * a2[i] * (e2[i] * pre_s[i] + s2[i] * suf_e[i]);
            }
            let hs = hs2.sqrt();
            Ok(WeightedNormPoint {
                k: [k.re, k.im],
                hs_norm: hs,
                bound,
                abs_jost: ev.jost_value.norm(),
                holds: hs <= bound * (1.0 + 1e-9) + 1e-12,
            })
        })
        .collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(WeightedNormReport {
        constant,
        bracket_a: a_factor.bracket_norm(),
        bracket_b: b_factor.bracket_norm(),
        points,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Stationary,
    TimeDomain,
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct RouteValue {
    pub value: f64,
    pub tail_estimate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SmoothnessReport {
    pub stationary: Option<RouteValue>,
    pub time_domain: Option<RouteValue>,
    /// relative disagreement `|s - t| / max(s, t)` when both routes ran
    pub agreement: Option<f64>,
}

/// Gate shared by the smoothness and wave-operator machinery: the spectrum in
/// the closed upper half-plane must be empty.
pub fn require_empty_spectrum(p: &Potential) -> Result<()> {
    let region = SearchRegion::auto(p)?;
    let points = spectrum::locate_spectrum(p, &region, 1e-9)?;
    if !points.is_empty() {
        return Err(Error::Hypothesis(format!(
            "spectrum is nonempty ({} zero(s) of the Jost function found)",
            points.len()
        )));
    }
    Ok(())
}

/// Kato-smoothness integral of the weighted resolvent along the state `phi`.
///
/// The stationary route evaluates `(1/2π) ∫ ‖A R_V(τ+i0) φ‖² dτ`; the time
/// route evaluates `∫_0^T ‖A e^{-isL_V} φ‖² ds`. The two coincide by the
/// Parseval identity for the half-line Laplace transform of the semigroup.
pub fn smoothness_integral(
    p: &Potential,
    factor: &WeightedFactor,
    phi: &StateSpec,
    route: Route,
) -> Result<SmoothnessReport> {
    p.first_moment()?;
    require_empty_spectrum(p)?;

    let stationary = if route != Route::TimeDomain {
        Some(stationary_route(p, factor, phi)?)
    } else {
        None
    };
    let time_domain = if route != Route::Stationary {
        Some(time_route(p, factor, phi)?)
    } else {
        None
    };
    let agreement = match (&stationary, &time_domain) {
        (Some(s), Some(t)) => {
            let m = s.value.max(t.value);
            if m > 0.0 {
                Some((s.value - t.value).abs() / m)
            } else {
                Some(0.0)
            }
        }
        _ => None,
    };
    Ok(SmoothnessReport {
        stationary,
        time_domain,
        agreement,
    })
}

fn stationary_route(
    p: &Potential,
    factor: &WeightedFactor,
    phi: &StateSpec,
) -> Result<RouteValue> {
    let (_, state_hi) = phi.support_window();
    let x_end = p
        .truncation_radius(1e-10)
        .max(factor.support_end(1.0))
        .max(state_hi)
        + 2.0;
    let n = 1601;
    let h = x_end / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let w = quad::simpson_weights(n, h);
    let phi_vals = phi.sample_normalized(&grid);
    let a2: Vec<f64> = grid.iter().map(|&x| factor.eval(x).norm_sqr()).collect();

    let norm_at = |k: C64| -> Result<f64> {
        let ev = ResolventEvaluator::new(p, k, &grid)?;
        let u = ev.apply(&phi_vals)?;
        Ok((0..n).map(|i| w[i] * a2[i] * u[i].norm_sqr()).sum())
    };

    // positive τ = k², parameterized by real k (uniform grids resolve the
    // oscillation scale); negative τ = -μ² on the imaginary axis
    let integrate_branch = |ks: &Vec<f64>, imag: bool| -> Result<(f64, f64)> {
        let vals: Vec<Result<f64>> = ks
            .par_iter()
            .map(|&t| {
                let k = if imag {
                    C64::new(0.0, t)
                } else {
                    C64::new(t, 0.0)
                };
                norm_at(k)
            })
            .collect();
        let vals = vals.into_iter().collect::<Result<Vec<f64>>>()?;
        // trapezoid in k with jacobian 2k
        let mut total = 0.0;
        for j in 1..ks.len() {
            let f0 = vals[j - 1] * 2.0 * ks[j - 1];
            let f1 = vals[j] * 2.0 * ks[j];
            total += 0.5 * (f0 + f1) * (ks[j] - ks[j - 1]);
        }
        // tail bound assuming ~C/τ² decay of the integrand in τ
        let tau_max = ks.last().unwrap() * ks.last().unwrap();
        let tail = vals.last().unwrap() * tau_max;
        Ok((total, tail))
    };

    let k_max = 8.0_f64.max(2.5 * phi_momentum_scale(phi));
    let n_k = 700;
    let ks: Vec<f64> = (0..=n_k).map(|j| k_max * j as f64 / n_k as f64).collect();
    let (pos, tail_pos) = integrate_branch(&ks, false)?;
    let mu_max = 6.0;
    let n_mu = 260;
    let mus: Vec<f64> = (0..=n_mu)
        .map(|j| mu_max * j as f64 / n_mu as f64)
        .collect();
    let (neg, tail_neg) = integrate_branch(&mus, true)?;

    let value = (pos + neg) / (2.0 * std::f64::consts::PI);
    let tail = (tail_pos + tail_neg) / (2.0 * std::f64::consts::PI);
    if tail > 0.2 * value.max(1e-300) {
        return Err(Error::TruncationDominated(format!(
            "stationary tail estimate {tail:.3e} exceeds 20% of {value:.3e}"
        )));
    }
    Ok(RouteValue {
        value,
        tail_estimate: tail,
    })
}

fn phi_momentum_scale(phi: &StateSpec) -> f64 {
    match *phi {
        StateSpec::Bump {
            momentum,
            halfwidth,
            ..
        } => momentum.abs() + 4.0 / halfwidth,
        StateSpec::Gaussian {
            momentum, width, ..
        } => momentum.abs() + 4.0 / width,
    }
}

fn time_route(p: &Potential, factor: &WeightedFactor, phi: &StateSpec) -> Result<RouteValue> {
    let (_, state_hi) = phi.support_window();
    let cfg = DynamicsConfig::for_smoothness(p, state_hi);
    let op = dynamics::discretize(p, cfg.x_box, cfg.n_nodes)?;
    let phi_vals = phi.sample_normalized(&op.x);
    let a2: Vec<f64> = op.x.iter().map(|&x| factor.eval(x).norm_sqr()).collect();
    let h = op.h;
    let weighted_norm = |v: &[C64]| -> f64 {
        v.iter()
            .zip(a2.iter())
            .map(|(c, a)| a * c.norm_sqr() * h)
            .sum()
    };
    // e^{-isL_V}: one Crank–Nicolson factorization, reused every step
    let dt = cfg.dt();
    let stepper = dynamics::CrankNicolson::new(&op, -dt)?;
    let mut state = phi_vals;
    let mut acc = 0.0;
    let mut prev = weighted_norm(&state);
    let mut peak = prev;
    let mut quiet = 0usize;
    let mut t = 0.0;
    let t_cap = 400.0;
    while t < t_cap {
        stepper.step(&mut state);
        t += dt;
        let cur = weighted_norm(&state);
        acc += 0.5 * (prev + cur) * dt;
        prev = cur;
        peak = peak.max(cur);
        if cur < 1e-7 * peak.max(1e-300) {
            quiet += 1;
            if quiet > 200 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    // tail bound from free dispersive decay of the integrand, ~ C/t^3
    let tail = prev * t / 2.0;
    if tail > 0.2 * acc.max(1e-300) {
        return Err(Error::TruncationDominated(format!(
            "time-route tail estimate {tail:.3e} exceeds 20% of {acc:.3e}"
        )));
    }
    Ok(RouteValue {
        value: acc,
        tail_estimate: tail,
    })
}

/// Boundary value `R_V(τ ± i0) φ` by ε-extrapolation: Richardson in ε against
/// direct evaluation on the axis. Returns (direct, extrapolated) norms for a
/// cross-check.
pub fn boundary_value_cross_check(
    p: &Potential,
    tau: f64,
    factor: &WeightedFactor,
    phi: &StateSpec,
) -> Result<(f64, f64)> {
    let x_end = p.truncation_radius(1e-10).max(phi.support_window().1) + 2.0;
    let n = 1201;
    let h = x_end / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
    let w = quad::simpson_weights(n, h);
    let phi_vals = phi.sample_normalized(&grid);
    let a2: Vec<f64> = grid.iter().map(|&x| factor.eval(x).norm_sqr()).collect();
    let weighted = |k: C64| -> Result<f64> {
        let ev = ResolventEvaluator::new(p, k, &grid)?;
        let u = ev.apply(&phi_vals)?;
        Ok((0..n).map(|i| w[i] * a2[i] * u[i].norm_sqr()).sum::<f64>())
    };
    let k_direct = if tau >= 0.0 {
        C64::new(tau.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-tau).sqrt())
    };
    let direct = weighted(k_direct)?;
    let eps = 1e-6 * (1.0 + tau.abs());
    let k_of = |e: f64| {
        let lam = C64::new(tau, e);
        let mut k = lam.sqrt();
        if k.im < 0.0 {
            k = -k;
        }
        k
    };
    let f1 = weighted(k_of(eps))?;
    let f2 = weighted(k_of(eps / 2.0))?;
    let extrapolated = 2.0 * f2 - f1;
    Ok((direct, extrapolated))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_kernel_value() {
        // V=0, k=i, x=1, ξ=2: sinh(1) e^{-2}
        let p = Potential::zero();
        let v = resolvent_kernel(&p, c(0.0, 1.0), 1.0, 2.0).unwrap();
        assert_relative_eq!(v.re, 1.0f64.sinh() * (-2.0f64).exp(), epsilon = 1e-10);
        assert!(v.im.abs() < 1e-12);
    }

    #[test]
    fn kernel_symmetry() {
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        let k = c(0.0, 2.0);
        let v1 = resolvent_kernel(&p, k, 0.3, 0.7).unwrap();
        let v2 = resolvent_kernel(&p, k, 0.7, 0.3).unwrap();
        assert!((v1 - v2).norm() < 1e-12 * (1.0 + v1.norm()));
    }

    #[test]
    fn well_kernel_closed_form() {
        // assemble from the well's trigonometric solutions at k = 2i
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        let k = c(0.0, 2.0);
        let kap = (k * k + c(4.0, 0.0)).sqrt(); // κ = 0 at this k... kappa² = -4+4 = 0
        assert!(kap.norm() < 1e-12);
        // κ = 0: s(x) = x, e from the matching formula with sinc
        let s03 = 0.3;
        let e07 = crate::solver::jost_solution(&p, k, &[0.7]).unwrap().values[0];
        let ek = spectrum::jost_function(&p, k).unwrap();
        let got = resolvent_kernel(&p, k, 0.3, 0.7).unwrap();
        assert!((got - s03 * e07 / ek).norm() < 1e-9);
    }

    #[test]
    fn pole_detected() {
        use crate::spectrum::tests_support::well_bound_state_gamma;
        let gamma = well_bound_state_gamma(4.0).unwrap();
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        assert!(matches!(
            resolvent_kernel(&p, c(0.0, gamma), 0.5, 0.5),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn weighted_norm_bound_holds_indicator() {
        let p = Potential::well(c(-1.0, 0.0), 1.0);
        let a = WeightedFactor::indicator(0.0, 1.0);
        let b = WeightedFactor::indicator(0.0, 1.0);
        assert_relative_eq!(a.bracket_norm(), 0.5f64.sqrt(), epsilon = 1e-14);
        let ks: Vec<C64> = vec![c(1.0, 0.5), c(0.3, 1.0), c(2.0, 2.0), c(-1.0, 0.7)];
        let rep = weighted_norm_check(&p, &a, &b, &ks).unwrap();
        assert_relative_eq!(rep.constant, 0.5f64.exp(), epsilon = 1e-9);
        assert!(rep.all_hold());
        for pt in &rep.points {
            assert!(pt.bound <= 0.5f64.exp() / 2.0 + 1e-9);
        }
    }

    #[test]
    fn weighted_norm_zero_factor() {
        let p = Potential::zero();
        let rep = weighted_norm_check(
            &p,
            &WeightedFactor::zero(),
            &WeightedFactor::zero(),
            &[c(1.0, 1.0)],
        )
        .unwrap();
        assert_eq!(rep.points[0].hs_norm, 0.0);
        assert!(rep.all_hold());
    }

    #[test]
    fn resolvent_identity_with_kato_factorization() {
        // A R_V φ = (I - A R_V B) A R_0 φ requires B·A = V exactly
        let p = Potential::well(c(-0.5, 0.3), 1.0);
        let n = 801;
        let x_end = 12.0;
        let h = x_end / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|j| j as f64 * h).collect();
        let phi = StateSpec::Bump {
            center: 4.0,
            halfwidth: 2.0,
            momentum: -1.0,
        };
        let phi_vals = phi.sample_normalized(&grid);
        let a = WeightedFactor::kato_sqrt_v(&p).unwrap();
        let b = WeightedFactor::sqrt_abs_v(&p).unwrap();
        for k in [c(1.3, 0.6), c(0.4, 1.1)] {
            let rv = ResolventEvaluator::new(&p, k, &grid).unwrap();
            let r0 = ResolventEvaluator::free(k, &grid);
            let lhs: Vec<C64> = rv
                .apply(&phi_vals)
                .unwrap()
                .iter()
                .zip(grid.iter())
                .map(|(u, &x)| a.eval(x) * u)
                .collect();
            let g: Vec<C64> = r0
                .apply(&phi_vals)
                .unwrap()
                .iter()
                .zip(grid.iter())
                .map(|(u, &x)| a.eval(x) * u)
                .collect();
            let bg: Vec<C64> = g
                .iter()
                .zip(grid.iter())
                .map(|(u, &x)| b.eval(x) * u)
                .collect();
            let rvbg = rv.apply(&bg).unwrap();
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                let rhs = g[i] - a.eval(grid[i]) * rvbg[i];
                num += (lhs[i] - rhs).norm_sqr();
                den += lhs[i].norm_sqr();
            }
            let rel = (num / den.max(1e-300)).sqrt();
            assert!(rel < 1e-6, "resolvent identity off by {rel:.2e} at k={k}");
        }
    }

    #[test]
    fn smoothness_gate_rejects_bound_state() {
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        let phi = StateSpec::Bump {
            center: 5.0,
            halfwidth: 2.0,
            momentum: -1.0,
        };
        let f = WeightedFactor::sqrt_abs_v(&p).unwrap();
        assert!(matches!(
            smoothness_integral(&p, &f, &phi, Route::Stationary),
            Err(Error::Hypothesis(_))
        ));
    }

    #[test]
    fn boundary_extrapolation_matches_direct() {
        let p = Potential::well(c(-0.5, 0.0), 1.0);
        let phi = StateSpec::Bump {
            center: 4.0,
            halfwidth: 1.5,
            momentum: -1.2,
        };
        let f = WeightedFactor::sqrt_abs_v(&p).unwrap();
        for tau in [0.8, 2.5, -1.0] {
            let (direct, extrap) = boundary_value_cross_check(&p, tau, &f, &phi).unwrap();
            assert_relative_eq!(direct, extrap, max_relative = 1e-3);
        }
    }
}
