//! Jost function evaluation and localization of its zeros in the closed
//! upper half-plane: eigenvalues `λ = k²` (Im k > 0) and spectral
//! singularities (real k).


use serde::Serialize;

use crate::contour::{self, AnalyticFn, Rect, SubdivisionConfig};
use crate::error::{Error, Result};
use crate::ode;
use crate::potential::Potential;
use crate::quad;
use crate::C64;

/// Jost function `e(k) = e(0,k)`.
pub fn jost_function(p: &Potential, k: C64) -> Result<C64> {
    jost_function_with_derivative(p, k).map(|(v, _)| v)
}

/// Jost function and its k-derivative from one backward pass of the reduced
/// equation augmented with its variational system; the derivative is exact to
/// solver tolerance (no finite differencing for interior points).
pub fn jost_function_with_derivative(p: &Potential, k: C64) -> Result<(C64, C64)> {
    let a = p.decay_rate();
    if !(k.im > -a / 2.0 || k.im >= 0.0) {
        return Err(Error::Region(format!(
            "Im k = {} below the admissible region for decay rate {a}",
            k.im
        )));
    }
    let x_start = p.truncation_radius(1e-13);
    if x_start == 0.0 {
        return Ok((C64::new(1.0, 0.0), C64::new(0.0, 0.0)));
    }
    let two_i = C64::new(0.0, 2.0);
    // state: (m, m', ∂m/∂k, ∂m'/∂k)
    let f = |x: f64, y: &ode::State<4>| {
        let v = p.evaluate(x).unwrap_or(C64::new(0.0, 0.0));
        [
            y[1],
            v * y[0] - two_i * k * y[1],
            y[3],
            v * y[2] - two_i * k * y[3] - two_i * y[1],
        ]
    };
    let y = ode::integrate_through(
        &f,
        x_start,
        [
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
        &[0.0],
        &p.breakpoints(),
        1e-11,
        |_, _, _| {},
    )?;
    Ok((y[0], y[2]))
}

/// Jost derivative by central differences, used to cross-check the
/// variational route on the real boundary.
pub fn jost_derivative_fd(p: &Potential, k: C64) -> Result<C64> {
    let h = 1e-5 * (1.0 + k.norm());
    let fp = jost_function(p, k + C64::new(h, 0.0))?;
    let fm = jost_function(p, k - C64::new(h, 0.0))?;
    Ok((fp - fm) / (2.0 * h))
}

/// Zero-enclosing radius `((1/ln 2) ∫ (2x)^α |V| dx)^{1/(1-α)}`: every Jost
/// zero in the closed upper half-plane has `|k|` below it.
pub fn enclosing_radius(p: &Potential, alpha: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0,1)")));
    }
    let moment = p.weighted_integral(
        0.0,
        |x| (2.0 * x).powf(alpha),
        1e-11,
        0.0,
    )?;
    Ok((moment / std::f64::consts::LN_2).powf(1.0 / (1.0 - alpha)))
}

/// `min_α R̃(α)` over the standard 16-point α grid.
pub fn enclosing_radius_min(p: &Potential) -> Result<f64> {
    let mut best = f64::INFINITY;
    for j in 0..16 {
        let alpha = 0.95 * j as f64 / 15.0;
        best = best.min(enclosing_radius(p, alpha)?);
    }
    Ok(best)
}

/// Contour shape for the zero search.
#[derive(Debug, Clone, Copy, Serialize)]
pub enum ContourSpec {
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
    Semidisc { radius: f64 },
}

/// Search region in the closed upper half-plane.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SearchRegion {
    pub contour: ContourSpec,
    pub exclusion_radius_at_zero: f64,
}

impl SearchRegion {
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Self {
        SearchRegion {
            contour: ContourSpec::Rectangle { x0, x1, y0, y1 },
            exclusion_radius_at_zero: 1e-3,
        }
    }

    pub fn semidisc(radius: f64) -> Self {
        SearchRegion {
            contour: ContourSpec::Semidisc { radius },
            exclusion_radius_at_zero: 1e-3,
        }
    }

    /// Auto-sized region: encloses the disc `|k| <= min_α R̃(α)` with 10%
    /// padding.
    pub fn auto(p: &Potential) -> Result<Self> {
        let r = enclosing_radius_min(p)?;
        let pad = 0.1 * (1.0 + r);
        Ok(SearchRegion::semidisc(r + pad))
    }

    fn bounding_rect(&self) -> Rect {
        match self.contour {
            ContourSpec::Rectangle { x0, x1, y0, y1 } => Rect { x0, x1, y0, y1 },
            ContourSpec::Semidisc { radius } => Rect {
                x0: -radius,
                x1: radius,
                y0: 0.0,
                y1: radius,
            },
        }
    }
}

/// Classification of a Jost-function zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointKind {
    Eigenvalue,
    SpectralSingularity,
}

/// A zero of the Jost function with its classification.
#[derive(Debug, Clone, Copy)]
pub struct SpectralPoint {
    pub k: C64,
    pub lambda: C64,
    pub multiplicity: usize,
    pub kind: PointKind,
    pub residual: f64,
    /// set when `|Im k|` falls in the ambiguity band around the
    /// classification threshold
    pub flagged: bool,
}

struct JostF<'a> {
    p: &'a Potential,
}

impl AnalyticFn for JostF<'_> {
    fn eval(&self, k: C64) -> Result<C64> {
        jost_function(self.p, k)
    }
    fn eval_with_derivative(&self, k: C64) -> Result<(C64, C64)> {
        jost_function_with_derivative(self.p, k)
    }
}

/// Classification threshold separating eigenvalues from spectral
/// singularities, scale-aware in the enclosing radius.
pub fn singularity_threshold(p: &Potential) -> Result<f64> {
    Ok(1e-6 * (1.0 + enclosing_radius_min(p)?))
}

/// How far below the real axis the counting contour may dip. Zeros on the
/// axis are then strictly inside the contour. Zero when the potential admits
/// no continuation (decay rate 0).
fn bottom_edge(p: &Potential, delta_sing: f64) -> f64 {
    let band = p.decay_rate() / 2.0;
    if band <= 0.0 {
        return 0.0;
    }
    -(4.0 * delta_sing).min(band / 2.0)
}

/// Number of Jost zeros inside the region, by the argument principle with a
/// certified quadrature error below 1/4.
pub fn count_zeros(p: &Potential, region: &SearchRegion) -> Result<usize> {
    let delta = singularity_threshold(p)?;
    let mut rect = region.bounding_rect();
    let y_bot = bottom_edge(p, delta);
    if rect.y0 <= 0.0 {
        rect.y0 = y_bot;
    }
    if rect.y0 == 0.0 && p.decay_rate() == 0.0 {
        // no continuation below the axis: indent upward around the origin
        rect.y0 = 0.0f64.max(rect.y0);
    }
    let f = JostF { p };
    contour::count_in_rect(&f, &rect, 1e-9)
}

/// Locate all zeros of the Jost function in the region and classify them.
///
/// Subdivision holds the count/locate consistency invariant: the sum of the
/// returned multiplicities equals the outer contour count.
pub fn locate_spectrum(
    p: &Potential,
    region: &SearchRegion,
    tol: f64,
) -> Result<Vec<SpectralPoint>> {
    let delta = singularity_threshold(p)?;
    let mut rect = region.bounding_rect();
    let y_bot = bottom_edge(p, delta);
    if rect.y0 <= 0.0 {
        rect.y0 = y_bot;
    }
    let scale = 1.0 + rect.width().max(rect.height());
    let f = JostF { p };
    let cfg = SubdivisionConfig {
        cluster_size: 1e-7 * scale,
        tol,
        multiplicity_cap: 4,
        y_floor: y_bot,
        margin: 1e-9,
    };
    let zeros = contour::locate_zeros(&f, &rect, &cfg)?;
    let mut points: Vec<SpectralPoint> = zeros
        .into_iter()
        .map(|z| {
            let kind = if z.k.im > delta {
                PointKind::Eigenvalue
            } else {
                PointKind::SpectralSingularity
            };
            let band = z.k.im.abs();
            let flagged = (band >= delta / 2.0 && band <= 2.0 * delta) || z.k.im < -delta;
            SpectralPoint {
                k: z.k,
                lambda: z.k * z.k,
                multiplicity: z.multiplicity,
                kind,
                residual: z.residual,
                flagged,
            }
        })
        .collect();
    points.sort_by(|a, b| a.k.re.total_cmp(&b.k.re).then(a.k.im.total_cmp(&b.k.im)));
    Ok(points)
}

/// Left- and right-hand sides of the weighted Jost-function bound
/// `|e(k) - 1| <= exp((2|k|)^{α-1} ∫ ξ^α (1 + e^{-2 Im k ξ}) |V| dξ) - 1`
/// for `k` in the closed upper half-plane.
pub fn jost_bound_margin(p: &Potential, k: C64, alpha: f64) -> Result<(f64, f64)> {
    if k.im < 0.0 {
        return Err(Error::Region("bound requires Im k >= 0".into()));
    }
    if k.norm() == 0.0 {
        return Err(Error::Domain("bound requires k != 0".into()));
    }
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0,1]")));
    }
    let x_end = p.truncation_radius(1e-13);
    let lhs = (jost_function(p, k)? - C64::new(1.0, 0.0)).norm();
    let integrand = |xi: f64| xi.powf(alpha) * (1.0 + (-2.0 * k.im * xi).exp()) * p.abs_at(xi);
    let integral = quad::integrate(integrand, 0.0, x_end.max(1e-12), 1e-11);
    let rhs = (integral / (2.0 * k.norm()).powf(1.0 - alpha)).exp_m1();
    Ok((lhs, rhs))
}

#[cfg(test)]
pub(crate) mod tests_support {
    /// Bisection root of `sqrt(v0 - γ²) cot(sqrt(v0 - γ²)) = -γ` on (0, √v0):
    /// the bound-state wavenumber oracle for the depth-`v0` unit well.
    pub(crate) fn well_bound_state_gamma(v0: f64) -> Option<f64> {
        let g = |gam: f64| {
            let kap = (v0 - gam * gam).sqrt();
            kap / kap.tan() + gam
        };
        let mut lo = 1e-9;
        let mut hi = v0.sqrt() - 1e-12;
        if g(lo).signum() == g(hi).signum() {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid).signum() == g(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::tests_support::well_bound_state_gamma;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn free_jost_function_is_one() {
        let p = Potential::zero();
        let (v, d) = jost_function_with_derivative(&p, c(1.0, 0.5)).unwrap();
        assert_eq!(v, c(1.0, 0.0));
        assert_eq!(d, c(0.0, 0.0));
    }

    #[test]
    fn well_jost_function_closed_form() {
        // e(k) = e^{ik}(cos κ - (ik/κ) sin κ), κ² = k² - V0
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        for k in [c(1.0, 0.0), c(0.5, 0.5), c(0.0, 1.0), c(-2.0, 0.7)] {
            let kap = (k * k + c(4.0, 0.0)).sqrt();
            let exact = (C64::new(0.0, 1.0) * k).exp()
                * (kap.cos() - C64::new(0.0, 1.0) * k / kap * kap.sin());
            let got = jost_function(&p, k).unwrap();
            assert!((got - exact).norm() < 1e-9 * (1.0 + exact.norm()), "k = {k}");
        }
        // k -> 0 limit: cos(sqrt(V0)) for depth V0
        let got = jost_function(&p, c(0.0, 0.0)).unwrap();
        assert_relative_eq!(got.re, 2.0f64.cos(), epsilon = 1e-9);
    }

    #[test]
    fn variational_derivative_matches_finite_differences() {
        let p = Potential::well(c(-2.0, -1.0), 1.0);
        for k in [c(1.0, 0.5), c(2.0, 0.0), c(-0.5, 1.5)] {
            let (_, d) = jost_function_with_derivative(&p, k).unwrap();
            let fd = jost_derivative_fd(&p, k).unwrap();
            assert!((d - fd).norm() < 1e-6 * (1.0 + d.norm()), "k = {k}");
        }
    }

    #[test]
    fn enclosing_radius_examples() {
        let p = Potential::zero();
        assert_eq!(enclosing_radius(&p, 0.0).unwrap(), 0.0);
        let p = Potential::well(c(-1.0, 0.0), 1.0);
        let r0 = enclosing_radius(&p, 0.0).unwrap();
        assert_relative_eq!(r0, 1.0 / std::f64::consts::LN_2, epsilon = 1e-10);
        // α = 1/2: ((1/ln2) ∫_0^1 sqrt(2x) dx)^2 = ((2√2/3)/ln2)^2
        let r12 = enclosing_radius(&p, 0.5).unwrap();
        let exact = (2.0 * 2.0f64.sqrt() / 3.0 / std::f64::consts::LN_2).powi(2);
        assert_relative_eq!(r12, exact, epsilon = 1e-9);
    }

    #[test]
    fn count_zeros_wells() {
        let region = SearchRegion::semidisc(3.0);
        assert_eq!(count_zeros(&Potential::zero(), &region).unwrap(), 0);
        let deep = Potential::well(c(-4.0, 0.0), 1.0);
        assert_eq!(count_zeros(&deep, &region).unwrap(), 1);
        let shallow = Potential::well(c(-1.0, 0.0), 1.0);
        assert_eq!(count_zeros(&shallow, &region).unwrap(), 0);
    }

    #[test]
    fn locate_spectrum_well_eigenvalue() {
        let p = Potential::well(c(-4.0, 0.0), 1.0);
        let region = SearchRegion::auto(&p).unwrap();
        let pts = locate_spectrum(&p, &region, 1e-10).unwrap();
        assert_eq!(pts.len(), 1);
        let gamma = well_bound_state_gamma(4.0).unwrap();
        assert_eq!(pts[0].kind, PointKind::Eigenvalue);
        assert_eq!(pts[0].multiplicity, 1);
        assert!((pts[0].k - c(0.0, gamma)).norm() < 1e-8);
        assert!((pts[0].lambda.re + gamma * gamma).abs() < 1e-8);
        assert!(pts[0].residual < 1e-10);
        // eigenvalue off the positive half-line
        assert!(pts[0].lambda.re < 0.0 || pts[0].lambda.im.abs() > 1e-12);
    }

    #[test]
    fn locate_spectrum_threshold_singularity() {
        let v0 = std::f64::consts::PI * std::f64::consts::PI / 4.0;
        let p = Potential::well(c(-v0, 0.0), 1.0);
        let region = SearchRegion::auto(&p).unwrap();
        let pts = locate_spectrum(&p, &region, 1e-9).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].kind, PointKind::SpectralSingularity);
        let delta = singularity_threshold(&p).unwrap();
        assert!(pts[0].k.norm() <= 2.0 * delta + 1e-9);
    }

    #[test]
    fn locate_spectrum_empty() {
        let p = Potential::zero();
        let region = SearchRegion::rectangle(-2.0, 2.0, 0.0, 2.0);
        assert!(locate_spectrum(&p, &region, 1e-10).unwrap().is_empty());
    }

    #[test]
    fn located_zeros_respect_enclosing_radius() {
        let p = Potential::well(c(-4.0, -4.0), 1.0);
        let region = SearchRegion::auto(&p).unwrap();
        let pts = locate_spectrum(&p, &region, 1e-9).unwrap();
        let rmin = enclosing_radius_min(&p).unwrap();
        assert!(!pts.is_empty());
        for pt in &pts {
            assert!(pt.k.norm() <= rmin + 1e-6);
        }
        let total: usize = pts.iter().map(|z| z.multiplicity).sum();
        let n = count_zeros(&p, &region).unwrap();
        assert_eq!(total, n);
    }

    #[test]
    fn jost_bound_holds_on_upper_half_plane() {
        let p = Potential::well(c(-2.0, 2.0), 1.0);
        for k in [c(0.5, 0.0), c(1.0, 1.0), c(-3.0, 0.4), c(6.0, 2.0)] {
            for alpha in [0.0, 0.5, 0.9] {
                let (lhs, rhs) = jost_bound_margin(&p, k, alpha).unwrap();
                assert!(lhs <= rhs * (1.0 + 1e-9) + 1e-12, "k={k} alpha={alpha}");
            }
        }
    }

    #[test]
    fn real_potential_zero_symmetry() {
        // depth 25 well (above the second threshold (3π/2)² ≈ 22.2): two
        // bound states, both on the imaginary axis; |k| ≤ √25 bounds them
        let p = Potential::well(c(-25.0, 0.0), 1.0);
        let region = SearchRegion::rectangle(-6.0, 6.0, 0.0, 6.0);
        let pts = locate_spectrum(&p, &region, 1e-10).unwrap();
        assert_eq!(pts.len(), 2);
        for pt in &pts {
            assert!(
                pt.k.re.abs() < 1e-8,
                "real-potential zero off the imaginary axis: {}",
                pt.k
            );
        }
    }
}
