//! Jost and regular solutions of `-y'' + V y = k² y` and the associated
//! solution estimates.
//!
//! The Jost solution is computed in the reduced variable `m(x) = e(x,k) e^{-ikx}`,
//! which satisfies `m'' = V m - 2ik m'` and tends to 1 at infinity. Backward
//! integration of `m` from the truncation radius is stable throughout the
//! closed upper half-plane; an independent construction by Picard iteration of
//! the Volterra integral equation is available as a cross-check.



use crate::error::{Error, Result};
use crate::ode;
use crate::potential::Potential;
use crate::quad;
use crate::{expm1_over, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolutionKind {
    Jost,
    Regular,
}

/// Sampled values and x-derivatives of a solution at one wavenumber.
#[derive(Debug, Clone)]
pub struct SolutionRecord {
    pub k: C64,
    pub x_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub derivatives: Vec<C64>,
    pub kind: SolutionKind,
}

impl SolutionRecord {
    /// Midpoint consistency residuals `|-y'' + (V - k²) y|`-style, formed from
    /// the cubic Hermite interpolant of stored values and derivatives on each
    /// cell. Scales as O(h²); callers compare against an h-aware tolerance.
    pub fn ode_residuals(&self, p: &Potential) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.x_grid.len().saturating_sub(1));
        for j in 0..self.x_grid.len().saturating_sub(1) {
            let h = self.x_grid[j + 1] - self.x_grid[j];
            let mid = 0.5 * (self.x_grid[j] + self.x_grid[j + 1]);
            let y_mid = 0.5 * (self.values[j] + self.values[j + 1])
                + (self.derivatives[j] - self.derivatives[j + 1]) * (h / 8.0);
            let ypp = (self.derivatives[j + 1] - self.derivatives[j]) / h;
            let rhs = (p.evaluate(mid)? - self.k * self.k) * y_mid;
            out.push((ypp - rhs).norm());
        }
        Ok(out)
    }
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(Error::Domain("empty x grid".into()));
    }
    if x_grid[0] < 0.0 || x_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain(
            "x grid must be nonnegative and strictly increasing".into(),
        ));
    }
    Ok(())
}

fn check_region(p: &Potential, k: C64) -> Result<()> {
    let a = p.decay_rate();
    if k.im <= -a / 2.0 {
        return Err(Error::Region(format!(
            "Im k = {} not above -a/2 = {} for this decay class",
            k.im,
            -a / 2.0
        )));
    }
    Ok(())
}

/// Grid with geometric refinement near the origin and uniform spacing beyond,
/// capped at the truncation radius.
pub fn default_grid(p: &Potential, n: usize) -> Vec<f64> {
    let n = n.max(16);
    let x_max = p.truncation_radius(1e-12).max(1.0);
    let x_switch = (x_max / 4.0).min(1.0);
    let n_geo = n / 4;
    let n_uni = n - n_geo;
    let mut grid = vec![0.0];
    let ratio: f64 = 1e-3f64.powf(1.0 / n_geo as f64);
    let mut scale = 1.0;
    let mut geo = Vec::with_capacity(n_geo);
    for _ in 0..n_geo {
        geo.push(x_switch * scale);
        scale *= ratio;
    }
    geo.reverse();
    grid.extend(geo);
    let h = (x_max - x_switch) / n_uni as f64;
    for j in 1..=n_uni {
        grid.push(x_switch + h * j as f64);
    }
    grid
}

/// Jost solution `e(x,k) ~ e^{ikx}` by backward integration of the reduced
/// equation from the truncation radius.
pub fn jost_solution(p: &Potential, k: C64, x_grid: &[f64]) -> Result<SolutionRecord> {
    check_grid(x_grid)?;
    check_region(p, k)?;
    let x_start = p
        .truncation_radius(1e-13)
        .max(*x_grid.last().unwrap());
    let f = |x: f64, y: &ode::State<2>| {
        let v = p.evaluate(x).unwrap_or(C64::new(0.0, 0.0));
        [y[1], v * y[0] - C64::new(0.0, 2.0) * k * y[1]]
    };
    let mut targets: Vec<f64> = x_grid.to_vec();
    targets.reverse();
    let mut values = vec![C64::new(0.0, 0.0); x_grid.len()];
    let mut derivatives = vec![C64::new(0.0, 0.0); x_grid.len()];
    let bps = p.breakpoints();
    let n = x_grid.len();
    ode::integrate_through(
        &f,
        x_start,
        [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        &targets,
        &bps,
        1e-10,
        |i, x, y| {
            let phase = (C64::new(0.0, 1.0) * k * x).exp();
            values[n - 1 - i] = y[0] * phase;
            derivatives[n - 1 - i] = (y[1] + C64::new(0.0, 1.0) * k * y[0]) * phase;
        },
    )?;
    Ok(SolutionRecord {
        k,
        x_grid: x_grid.to_vec(),
        values,
        derivatives,
        kind: SolutionKind::Jost,
    })
}

/// Jost solution with the Volterra-series cross-check on the same grid.
/// Fails with a non-convergence error when the two constructions disagree
/// beyond `cross_tol` (relative).
pub fn jost_solution_checked(
    p: &Potential,
    k: C64,
    x_grid: &[f64],
    cross_tol: f64,
) -> Result<SolutionRecord> {
    let rec = jost_solution(p, k, x_grid)?;
    let vol = jost_volterra(p, k, x_grid)?;
    for j in 0..x_grid.len() {
        let denom = 1.0 + rec.values[j].norm();
        let d = (rec.values[j] - vol.values[j]).norm() / denom;
        if d > cross_tol {
            return Err(Error::NonConvergence(format!(
                "Volterra cross-check disagrees at x = {} (rel diff {:.3e})",
                x_grid[j], d
            )));
        }
    }
    Ok(rec)
}

/// Jost solution by Picard iteration of the Volterra integral equation,
/// with the factorial majorant of the series used as the truncation rule.
pub fn jost_volterra(p: &Potential, k: C64, x_grid: &[f64]) -> Result<SolutionRecord> {
    check_grid(x_grid)?;
    check_region(p, k)?;
    if k.norm() < 1e-3 {
        return Err(Error::Domain(
            "Volterra construction needs |k| >= 1e-3 (separated kernel)".into(),
        ));
    }
    let x_end = p
        .truncation_radius(1e-13)
        .max(*x_grid.last().unwrap());
    // uniform working grid fine enough for O(h^4) cumulative quadrature
    let n_cells = 6000usize;
    let h = x_end / n_cells as f64;
    let xs: Vec<f64> = (0..=n_cells).map(|j| j as f64 * h).collect();
    let vv: Vec<C64> = xs
        .iter()
        .map(|&x| p.evaluate(x).unwrap_or(C64::new(0.0, 0.0)))
        .collect();

    // factorial majorant for the truncation rule
    let majorant = {
        let mut best = f64::INFINITY;
        for alpha in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let mut f = |xi: f64| {
                let m1 = (-2.0 * k.im * xi).exp().max(1.0);
                xi.powf(alpha)
                    * m1.powf(alpha)
                    * (1.0 + (-2.0 * k.im * xi).exp()).powf(1.0 - alpha)
                    * p.abs_at(xi)
            };
            let v = quad::adaptive(&mut f, 0.0, x_end, 1e-10, 36).value;
            best = best.min(v / (2.0 * k.norm()).powf(1.0 - alpha));
        }
        best
    };

    let two_ik = C64::new(0.0, 2.0) * k;
    let ph1 = (two_ik * h).exp();
    let ph2 = ph1 * ph1;
    let mut eps = vec![C64::new(1.0, 0.0); n_cells + 1];
    let mut m_val = eps.clone();
    let mut m_der = vec![C64::new(0.0, 0.0); n_cells + 1];
    let mut factor = 1.0;
    let mut n_terms = 0usize;
    for n in 1..=400 {
        factor *= majorant / n as f64;
        // next term: eps_{n}(x_i) = (A_i - B_i)/(2ik), eps'_{n}(x_i) = -A_i
        // A_i = ∫_{x_i}^{X} e^{2ik(ξ - x_i)} V εprev dξ (stable右-to-left recurrence)
        let g: Vec<C64> = (0..=n_cells).map(|j| vv[j] * eps[j]).collect();
        let mut a = vec![C64::new(0.0, 0.0); n_cells + 1];
        let mut b = vec![C64::new(0.0, 0.0); n_cells + 1];
        for i in (0..n_cells).rev() {
            // O(h^4) three-point rules over [x_i, x_{i+1}]
            let (la, lb) = if i + 2 <= n_cells {
                (
                    (g[i] * 5.0 + g[i + 1] * ph1 * 8.0 - g[i + 2] * ph2) * (h / 12.0),
                    (g[i] * 5.0 + g[i + 1] * 8.0 - g[i + 2]) * (h / 12.0),
                )
            } else {
                // last cell: right-open rule on nodes i-1, i, i+1
                let phm = ph1.inv();
                (
                    (-g[i - 1] * phm + g[i] * 8.0 + g[i + 1] * ph1 * 5.0) * (h / 12.0),
                    (-g[i - 1] + g[i] * 8.0 + g[i + 1] * 5.0) * (h / 12.0),
                )
            };
            a[i] = a[i + 1] * ph1 + la;
            b[i] = b[i + 1] + lb;
        }
        for j in 0..=n_cells {
            eps[j] = (a[j] - b[j]) / two_ik;
            m_val[j] += eps[j];
            m_der[j] -= a[j];
        }
        n_terms = n;
        if factor < 1e-14 {
            break;
        }
    }
    if factor >= 1e-14 {
        return Err(Error::NonConvergence(format!(
            "Volterra series majorant still {factor:.2e} after {n_terms} terms"
        )));
    }

    // cubic Hermite interpolation of (m, m') onto the requested grid
    let interp = |x: f64| -> (C64, C64) {
        if x >= x_end {
            return (
                m_val[n_cells],
                m_der[n_cells],
            );
        }
        let j = ((x / h) as usize).min(n_cells - 1);
        let t = (x - xs[j]) / h;
        let (y0, y1, d0, d1) = (m_val[j], m_val[j + 1], m_der[j], m_der[j + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let v = y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
            + d0 * ((t3 - 2.0 * t2 + t) * h)
            + y1 * (-2.0 * t3 + 3.0 * t2)
            + d1 * ((t3 - t2) * h);
        let dv = y0 * ((6.0 * t2 - 6.0 * t) / h)
            + d0 * (3.0 * t2 - 4.0 * t + 1.0)
            + y1 * ((-6.0 * t2 + 6.0 * t) / h)
            + d1 * (3.0 * t2 - 2.0 * t);
        (v, dv)
    };
    let mut values = Vec::with_capacity(x_grid.len());
    let mut derivatives = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let (m, mp) = interp(x);
        let phase = (C64::new(0.0, 1.0) * k * x).exp();
        values.push(m * phase);
        derivatives.push((mp + C64::new(0.0, 1.0) * k * m) * phase);
    }
    Ok(SolutionRecord {
        k,
        x_grid: x_grid.to_vec(),
        values,
        derivatives,
        kind: SolutionKind::Jost,
    })
}

/// Regular solution with `s(0,k) = 0`, `s'(0,k) = 1` by forward integration.
pub fn regular_solution(p: &Potential, k: C64, x_grid: &[f64]) -> Result<SolutionRecord> {
    check_grid(x_grid)?;
    let f = |x: f64, y: &ode::State<2>| {
        let v = p.evaluate(x).unwrap_or(C64::new(0.0, 0.0));
        [y[1], (v - k * k) * y[0]]
    };
    let bps = p.breakpoints();
    let mut values = vec![C64::new(0.0, 0.0); x_grid.len()];
    let mut derivatives = vec![C64::new(0.0, 0.0); x_grid.len()];
    ode::integrate_through(
        &f,
        0.0,
        [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
        x_grid,
        &bps,
        1e-10,
        |i, _x, y| {
            values[i] = y[0];
            derivatives[i] = y[1];
        },
    )?;
    Ok(SolutionRecord {
        k,
        x_grid: x_grid.to_vec(),
        values,
        derivatives,
        kind: SolutionKind::Regular,
    })
}

/// Wronskian `e s' - e' s` per grid node; constant in x and equal to the Jost
/// function by the initial data of the regular solution.
pub fn wronskian(jost: &SolutionRecord, regular: &SolutionRecord) -> Result<Vec<C64>> {
    if jost.k != regular.k {
        return Err(Error::Mismatch(format!(
            "wronskian inputs have different k: {} vs {}",
            jost.k, regular.k
        )));
    }
    if jost.x_grid != regular.x_grid {
        return Err(Error::Mismatch("wronskian inputs have different grids".into()));
    }
    Ok((0..jost.x_grid.len())
        .map(|j| jost.values[j] * regular.derivatives[j] - jost.derivatives[j] * regular.values[j])
        .collect())
}

/// One verified inequality: pointwise left-hand sides, right-hand sides, and
/// whether the estimate holds on the whole grid.
#[derive(Debug, Clone)]
pub struct EstimateCheck {
    pub applicable: bool,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub holds: bool,
    /// max over the grid of (lhs - rhs); negative when the estimate holds.
    pub max_violation: f64,
}

impl EstimateCheck {
    fn inapplicable() -> Self {
        EstimateCheck {
            applicable: false,
            lhs: Vec::new(),
            rhs: Vec::new(),
            holds: true,
            max_violation: f64::NEG_INFINITY,
        }
    }

    fn from_sides(lhs: Vec<f64>, rhs: Vec<f64>) -> Self {
        let mut max_violation = f64::NEG_INFINITY;
        let mut holds = true;
        for (l, r) in lhs.iter().zip(rhs.iter()) {
            max_violation = max_violation.max(l - r);
            if *l > r * (1.0 + 1e-9) + 1e-12 {
                holds = false;
            }
        }
        EstimateCheck {
            applicable: true,
            lhs,
            rhs,
            holds,
            max_violation,
        }
    }
}

/// Measured vs predicted sides for the three solution estimates: the weighted
/// Jost bound, its upper-half-plane corollary, and the regular-solution bound.
#[derive(Debug, Clone)]
pub struct EstimateReport {
    pub jost_weighted: EstimateCheck,
    pub jost_upper: EstimateCheck,
    pub regular_growth: EstimateCheck,
}

impl EstimateReport {
    pub fn all_hold(&self) -> bool {
        self.jost_weighted.holds && self.jost_upper.holds && self.regular_growth.holds
    }
}

/// Verify the three solution estimates at wavenumber `k` and weight exponent
/// `alpha` over `x_grid`. A violated inequality is a report outcome, not an
/// error.
pub fn verify_estimates(
    p: &Potential,
    k: C64,
    alpha: f64,
    x_grid: &[f64],
) -> Result<EstimateReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("alpha = {alpha} outside [0,1]")));
    }
    check_region(p, k)?;
    let x_end = p.truncation_radius(1e-13).max(*x_grid.last().unwrap());
    let jost = jost_solution(p, k, x_grid)?;

    // weighted Jost estimate: |e e^{-ikx} - 1| <= exp(I_alpha(x)) - 1
    let weight = |xi: f64| {
        let d = (-2.0 * k.im * xi).exp();
        xi.powf(alpha) * d.max(1.0).powf(alpha) * (1.0 + d).powf(1.0 - alpha) * p.abs_at(xi)
    };
    let denom = (2.0 * k.norm()).powf(1.0 - alpha);
    let mut lhs1 = Vec::with_capacity(x_grid.len());
    let mut rhs1 = Vec::with_capacity(x_grid.len());
    for (j, &x) in x_grid.iter().enumerate() {
        let m = jost.values[j] * (-C64::new(0.0, 1.0) * k * x).exp();
        lhs1.push((m - C64::new(1.0, 0.0)).norm());
        let integral = quad::integrate(weight, x, x_end, 1e-11);
        rhs1.push((integral / denom).exp_m1());
    }
    let jost_weighted = EstimateCheck::from_sides(lhs1, rhs1);

    // upper-half-plane bound |e(x,k)| <= exp(∫_x^∞ ξ|V|) e^{-Im k x}
    let jost_upper = if k.im >= 0.0 {
        let mut lhs = Vec::with_capacity(x_grid.len());
        let mut rhs = Vec::with_capacity(x_grid.len());
        for (j, &x) in x_grid.iter().enumerate() {
            lhs.push(jost.values[j].norm());
            let integral = quad::integrate(|xi| xi * p.abs_at(xi), x, x_end, 1e-11);
            rhs.push(integral.exp() * (-k.im * x).exp());
        }
        EstimateCheck::from_sides(lhs, rhs)
    } else {
        EstimateCheck::inapplicable()
    };

    // regular-solution bound |s(x,k)| <= x exp(∫_0^x ξ|V|) e^{Im k x}
    let regular_growth = if k.im >= 0.0 {
        let pos: Vec<f64> = x_grid.iter().copied().filter(|&x| x > 0.0).collect();
        let reg = regular_solution(p, k, &pos)?;
        let mut lhs = Vec::with_capacity(pos.len());
        let mut rhs = Vec::with_capacity(pos.len());
        for (j, &x) in pos.iter().enumerate() {
            lhs.push(reg.values[j].norm());
            let integral = quad::integrate(|xi| xi * p.abs_at(xi), 0.0, x.min(x_end), 1e-11);
            rhs.push(x * integral.exp() * (k.im * x).exp());
        }
        EstimateCheck::from_sides(lhs, rhs)
    } else {
        EstimateCheck::inapplicable()
    };

    Ok(EstimateReport {
        jost_weighted,
        jost_upper,
        regular_growth,
    })
}

/// Free-field regular solution `sin(kx)/k`, series-safe at small `|kx|`.
pub fn free_regular(k: C64, x: f64) -> C64 {
    crate::sinc_c(k * x) * x
}

/// Volterra kernel `(e^{2iku} - 1)/(2ik)`, series-safe at small argument.
pub fn volterra_kernel(k: C64, u: f64) -> C64 {
    let z = C64::new(0.0, 2.0) * k * u;
    expm1_over(z) * u
}
