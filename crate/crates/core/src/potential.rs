//! Complex potentials on the half-line and their weighted moments.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::quad;

/// Potential families supported by the library.
#[derive(Debug, Clone)]
pub enum Family {
    /// `V(x) = depth` on `[0, width]`, zero beyond.
    Well { depth: Complex64, width: f64 },
    /// `V(x) = amplitude * exp(-x / length)`.
    Exponential { amplitude: Complex64, length: f64 },
    /// `V(x) = amplitude * exp(-((x - center) / sigma)^2)`.
    Gaussian {
        amplitude: Complex64,
        center: f64,
        sigma: f64,
    },
    /// Linear interpolation of samples; zero beyond the last node.
    Sampled {
        nodes: Vec<f64>,
        values: Vec<Complex64>,
    },
    /// Interpreted arithmetic expression in `x`.
    Expression { source: String, compiled: Expr },
}

/// A complex-valued potential on `[0, ∞)` with a declared decay class.
#[derive(Debug, Clone)]
pub struct Potential {
    family: Family,
    declared_decay: Option<f64>,
    support_override: Option<f64>,
    // truncation radii are requested on every solver call; memoize per tol
    radius_cache: std::sync::Arc<std::sync::Mutex<Vec<(f64, f64)>>>,
}

/// Weight specification for `weighted_moment`: integrand
/// `x^alpha * exp(exp_weight * x) * |V(x)|` from `lower`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MomentSpec {
    pub alpha: f64,
    pub exp_weight: f64,
    pub lower: f64,
}

impl MomentSpec {
    pub fn new(alpha: f64, exp_weight: f64, lower: f64) -> Self {
        MomentSpec {
            alpha,
            exp_weight,
            lower,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Domain(format!(
                "moment alpha must lie in [0,1], got {}",
                self.alpha
            )));
        }
        if self.lower < 0.0 {
            return Err(Error::Domain("moment lower limit must be >= 0".into()));
        }
        Ok(())
    }
}

impl Potential {
    pub fn well(depth: Complex64, width: f64) -> Self {
        Potential {
            family: Family::Well { depth, width },
            declared_decay: None,
            support_override: None,
            radius_cache: Default::default(),
        }
    }

    pub fn zero() -> Self {
        Potential::well(Complex64::new(0.0, 0.0), 0.0)
    }

    pub fn exponential(amplitude: Complex64, length: f64) -> Self {
        Potential {
            family: Family::Exponential { amplitude, length },
            declared_decay: None,
            support_override: None,
            radius_cache: Default::default(),
        }
    }

    pub fn gaussian(amplitude: Complex64, center: f64, sigma: f64) -> Self {
        Potential {
            family: Family::Gaussian {
                amplitude,
                center,
                sigma,
            },
            declared_decay: None,
            support_override: None,
            radius_cache: Default::default(),
        }
    }

    pub fn sampled(nodes: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if nodes.len() != values.len() || nodes.len() < 2 {
            return Err(Error::Schema(
                "sampled potential needs matching x/value lists with >= 2 entries".into(),
            ));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) || nodes[0] < 0.0 {
            return Err(Error::Schema(
                "sampled potential nodes must be nonnegative and strictly increasing".into(),
            ));
        }
        Ok(Potential {
            family: Family::Sampled { nodes, values },
            declared_decay: None,
            support_override: None,
            radius_cache: Default::default(),
        })
    }

    pub fn expression(source: &str, decay_rate: f64) -> Result<Self> {
        let compiled = Expr::parse(source)?;
        Ok(Potential {
            family: Family::Expression {
                source: source.to_string(),
                compiled,
            },
            declared_decay: Some(decay_rate),
            support_override: None,
            radius_cache: Default::default(),
        })
    }

    pub fn with_declared_decay(mut self, a: f64) -> Self {
        self.declared_decay = Some(a);
        self.radius_cache = Default::default();
        self
    }

    pub fn with_support(mut self, support: f64) -> Self {
        self.support_override = Some(support);
        self.radius_cache = Default::default();
        self
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// Evaluate `V(x)`. Exact zero outside the declared support.
    pub fn evaluate(&self, x: f64) -> Result<Complex64> {
        if x < 0.0 {
            return Err(Error::Domain(format!("potential evaluated at x = {x} < 0")));
        }
        if let Some(s) = self.support() {
            if x > s {
                return Ok(Complex64::new(0.0, 0.0));
            }
        }
        Ok(match &self.family {
            Family::Well { depth, width } => {
                if x <= *width {
                    *depth
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            Family::Exponential { amplitude, length } => amplitude * (-x / length).exp(),
            Family::Gaussian {
                amplitude,
                center,
                sigma,
            } => {
                let u = (x - center) / sigma;
                amplitude * (-u * u).exp()
            }
            Family::Sampled { nodes, values } => {
                if x <= nodes[0] {
                    // flat extension down to 0 keeps the contract simple
                    values[0]
                } else if x >= *nodes.last().unwrap() {
                    Complex64::new(0.0, 0.0)
                } else {
                    let j = nodes.partition_point(|&n| n <= x) - 1;
                    let t = (x - nodes[j]) / (nodes[j + 1] - nodes[j]);
                    values[j] * (1.0 - t) + values[j + 1] * t
                }
            }
            Family::Expression { compiled, .. } => compiled.eval(x),
        })
    }

    /// Magnitude `|V(x)|`; panics never (x < 0 treated as 0 for internal use).
    pub(crate) fn abs_at(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.evaluate(x).map(|v| v.norm()).unwrap_or(0.0)
    }

    /// Exact right endpoint of the support, when the family has one.
    pub fn support(&self) -> Option<f64> {
        if let Some(s) = self.support_override {
            return Some(s);
        }
        match &self.family {
            Family::Well { width, .. } => Some(*width),
            Family::Sampled { nodes, .. } => Some(*nodes.last().unwrap()),
            _ => None,
        }
    }

    /// Largest `a` for which `∫ e^{ax} |V| dx` is guaranteed finite by the
    /// family (`f64::INFINITY` for compactly supported and gaussian tails).
    pub fn decay_rate(&self) -> f64 {
        if let Some(a) = self.declared_decay {
            return a;
        }
        match &self.family {
            Family::Well { .. } | Family::Sampled { .. } | Family::Gaussian { .. } => f64::INFINITY,
            Family::Exponential { length, .. } => 1.0 / length,
            Family::Expression { .. } => 0.0,
        }
    }

    /// Points where the potential is non-smooth; ODE and quadrature drivers
    /// split their intervals here.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.family {
            Family::Well { width, .. } => vec![*width],
            Family::Sampled { nodes, .. } => nodes.clone(),
            _ => self.support().map(|s| vec![s]).unwrap_or_default(),
        }
    }

    /// Weighted moment `∫_lower^∞ x^alpha e^{a x} |V(x)| dx` to the given
    /// absolute tolerance (default callers use 1e-10).
    pub fn weighted_moment(&self, spec: &MomentSpec) -> Result<f64> {
        self.weighted_moment_tol(spec, 1e-10)
    }

    pub fn weighted_moment_tol(&self, spec: &MomentSpec, tol: f64) -> Result<f64> {
        spec.validate()?;
        let w = |x: f64| {
            let p = if spec.alpha == 0.0 {
                1.0
            } else {
                x.powf(spec.alpha)
            };
            p * (spec.exp_weight * x).exp()
        };
        self.weighted_integral(spec.lower, w, tol, spec.exp_weight)
    }

    /// General weighted integral `∫_lower^∞ w(x) |V(x)| dx`.
    ///
    /// `growth_rate` is the caller's bound on the exponential growth of `w`;
    /// it gates the divergence pre-check against the declared decay class.
    pub(crate) fn weighted_integral(
        &self,
        lower: f64,
        w: impl Fn(f64) -> f64,
        tol: f64,
        growth_rate: f64,
    ) -> Result<f64> {
        // evaluate |V| first: where it underflows to zero the weight may
        // already overflow, and 0·inf would poison the quadrature
        let f = |x: f64| {
            let a = self.abs_at(x);
            if a == 0.0 {
                0.0
            } else {
                w(x) * a
            }
        };
        if let Some(s) = self.support() {
            if lower >= s {
                return Ok(0.0);
            }
            return self.integrate_with_breakpoints(&f, lower, s, tol);
        }
        let a = self.decay_rate();
        if growth_rate >= a {
            // Declared class does not cover this weight; accept only if the
            // tail passes a doubling-window convergence test.
            let x0 = lower.max(1.0);
            let mut prev = quad::integrate(&f, x0, 2.0 * x0, tol);
            let mut ok = false;
            for j in 1..6 {
                let a0 = x0 * (1u64 << j) as f64;
                let cur = quad::integrate(&f, a0, 2.0 * a0, tol);
                if cur.abs() < tol && prev.abs() < tol {
                    ok = true;
                    break;
                }
                if cur.abs() > 0.9 * prev.abs() {
                    break;
                }
                prev = cur;
            }
            if !ok {
                return Err(Error::Divergence(format!(
                    "weight grows like e^({growth_rate} x) but decay class only guarantees a = {a}"
                )));
            }
        }
        let head_end = lower + 1.0;
        let head = self.integrate_with_breakpoints(&f, lower, head_end, tol / 2.0)?;
        let tail = quad::integrate_tail(&f, head_end, tol / 2.0)?;
        Ok(head + tail)
    }

    fn integrate_with_breakpoints(
        &self,
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
    ) -> Result<f64> {
        let mut cuts: Vec<f64> = vec![a];
        for bp in self.breakpoints() {
            if bp > a && bp < b {
                cuts.push(bp);
            }
        }
        cuts.push(b);
        cuts.sort_by(f64::total_cmp);
        let mut total = 0.0;
        let n = cuts.len() - 1;
        for w in cuts.windows(2) {
            total += quad::integrate_checked(f, w[0], w[1], tol / n as f64)?;
        }
        Ok(total)
    }

    /// `∫_0^∞ |V| dx`.
    pub fn l1_norm(&self) -> Result<f64> {
        self.weighted_moment(&MomentSpec::new(0.0, 0.0, 0.0))
    }

    /// First moment `∫_0^∞ x |V| dx` (condition (∗) of the smoothness and
    /// wave-operator machinery).
    pub fn first_moment(&self) -> Result<f64> {
        self.weighted_moment(&MomentSpec::new(1.0, 0.0, 0.0))
    }

    /// Smallest `X` with `∫_X^∞ (1+ξ)|V(ξ)| dξ < tol`; the half-line is
    /// truncated there. Compactly supported potentials report their support.
    pub fn truncation_radius(&self, tol: f64) -> f64 {
        assert!(tol > 0.0, "truncation tolerance must be positive");
        if let Ok(cache) = self.radius_cache.lock() {
            if let Some(&(_, x)) = cache.iter().find(|(t, _)| *t == tol) {
                return x;
            }
        }
        let x = self.truncation_radius_uncached(tol);
        if let Ok(mut cache) = self.radius_cache.lock() {
            cache.push((tol, x));
        }
        x
    }

    fn truncation_radius_uncached(&self, tol: f64) -> f64 {
        let qtol = (tol * 1e-3).max(1e-13);
        let tail = |x: f64| -> f64 {
            let f = |xi: f64| (1.0 + xi) * self.abs_at(xi);
            if let Some(s) = self.support() {
                if x >= s {
                    return 0.0;
                }
                return quad::integrate(&f, x, s, qtol);
            }
            quad::integrate_tail(&f, x, qtol).unwrap_or(f64::INFINITY)
        };
        if tail(0.0) < tol {
            return 0.0;
        }
        if let Some(s) = self.support() {
            return s;
        }
        // bracket then bisect: tail(X) is nonincreasing
        let mut hi = 1.0;
        while tail(hi) >= tol {
            hi *= 2.0;
            if hi > 1e6 {
                return hi;
            }
        }
        let mut lo = hi / 2.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if tail(mid) < tol {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-9 * (1.0 + hi) {
                break;
            }
        }
        hi
    }

    /// Verifies the declared decay class against the numerically observed
    /// tail; used by the JSON loader.
    pub fn validate(&self) -> Result<()> {
        if let Family::Well { width, .. } = &self.family {
            if *width < 0.0 {
                return Err(Error::Schema("well width must be >= 0".into()));
            }
        }
        if let Family::Exponential { length, .. } = &self.family {
            if *length <= 0.0 {
                return Err(Error::Schema("exponential length must be > 0".into()));
            }
        }
        if let Family::Gaussian { sigma, .. } = &self.family {
            if *sigma <= 0.0 {
                return Err(Error::Schema("gaussian sigma must be > 0".into()));
            }
        }
        let a = self.decay_rate();
        if a < 0.0 {
            return Err(Error::Schema("decay_rate_a must be >= 0".into()));
        }
        if a.is_finite() && a > 0.0 {
            // spot-check a' < a
            let spec = MomentSpec::new(0.0, 0.75 * a, 0.0);
            self.weighted_moment_tol(&spec, 1e-8).map_err(|_| {
                Error::Schema(format!(
                    "declared decay_rate_a = {a} inconsistent with the observed tail"
                ))
            })?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// JSON schema
// ---------------------------------------------------------------------------

/// Wire format: `{ "family": "...", "params": { ... }, "decay_rate_a": n?, "support": n? }`.
/// Complex numbers are `[re, im]` pairs.
#[derive(Debug, Serialize, Deserialize)]
pub struct PotentialSchema {
    pub family: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decay_rate_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub support: Option<f64>,
}

fn get_complex(params: &serde_json::Value, key: &str) -> Result<Complex64> {
    let v = params
        .get(key)
        .ok_or_else(|| Error::Schema(format!("missing param '{key}'")))?;
    if let Some(arr) = v.as_array() {
        if arr.len() == 2 {
            let re = arr[0]
                .as_f64()
                .ok_or_else(|| Error::Schema(format!("param '{key}' must be [re, im]")))?;
            let im = arr[1]
                .as_f64()
                .ok_or_else(|| Error::Schema(format!("param '{key}' must be [re, im]")))?;
            return Ok(Complex64::new(re, im));
        }
    }
    if let Some(re) = v.as_f64() {
        return Ok(Complex64::new(re, 0.0));
    }
    Err(Error::Schema(format!(
        "param '{key}' must be a number or [re, im]"
    )))
}

fn get_real(params: &serde_json::Value, key: &str) -> Result<f64> {
    params
        .get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::Schema(format!("missing real param '{key}'")))
}

fn get_real_or(params: &serde_json::Value, key: &str, default: f64) -> f64 {
    params.get(key).and_then(|v| v.as_f64()).unwrap_or(default)
}

impl Potential {
    /// Parse the JSON wire format used by every CLI command.
    pub fn from_json(text: &str) -> Result<Potential> {
        let schema: PotentialSchema =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("potential JSON: {e}")))?;
        Potential::from_schema(&schema)
    }

    pub fn from_schema(schema: &PotentialSchema) -> Result<Potential> {
        let p = &schema.params;
        let mut pot = match schema.family.as_str() {
            "zero" => Potential::zero(),
            "well" => Potential::well(get_complex(p, "depth")?, get_real(p, "width")?),
            "exponential" => {
                Potential::exponential(get_complex(p, "amplitude")?, get_real(p, "length")?)
            }
            "gaussian" => Potential::gaussian(
                get_complex(p, "amplitude")?,
                get_real_or(p, "center", 0.0),
                get_real(p, "sigma")?,
            ),
            "sampled" => {
                let xs: Vec<f64> = p
                    .get("x")
                    .and_then(|v| serde_json::from_value(v.clone()).ok())
                    .ok_or_else(|| Error::Schema("sampled potential needs 'x': [..]".into()))?;
                let vals: Vec<[f64; 2]> = p
                    .get("values")
                    .and_then(|v| serde_json::from_value(v.clone()).ok())
                    .ok_or_else(|| {
                        Error::Schema("sampled potential needs 'values': [[re,im],..]".into())
                    })?;
                Potential::sampled(
                    xs,
                    vals.into_iter()
                        .map(|[re, im]| Complex64::new(re, im))
                        .collect(),
                )?
            }
            "expression" => {
                let src = p
                    .get("expr")
                    .and_then(|v| v.as_str())
                    .ok_or_else(|| Error::Schema("expression potential needs 'expr'".into()))?;
                Potential::expression(src, schema.decay_rate_a.unwrap_or(0.0))?
            }
            other => {
                return Err(Error::Schema(format!(
                    "unknown potential family '{other}' \
                     (expected well | exponential | gaussian | sampled | expression | zero)"
                )))
            }
        };
        if let Some(a) = schema.decay_rate_a {
            pot = pot.with_declared_decay(a);
        }
        if let Some(s) = schema.support {
            pot = pot.with_support(s);
        }
        pot.validate()?;
        Ok(pot)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_well() {
        let p = Potential::well(c(-2.0, -2.0), 1.0);
        assert_eq!(p.evaluate(0.5).unwrap(), c(-2.0, -2.0));
        assert_eq!(p.evaluate(1.5).unwrap(), c(0.0, 0.0));
        assert!(p.evaluate(-0.1).is_err());
        assert_eq!(Potential::zero().evaluate(3.7).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn moment_zero_potential() {
        let p = Potential::zero();
        let m = p
            .weighted_moment(&MomentSpec::new(0.5, 1.0, 0.0))
            .unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn moment_well_closed_forms() {
        let p = Potential::well(c(-1.0, 0.0), 1.0);
        // ∫_0^1 x dx = 1/2
        let m = p.weighted_moment(&MomentSpec::new(1.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(m, 0.5, epsilon = 1e-12);
        // a = 1/ln2: ∫_0^1 e^{ax} dx = (e^a - 1)/a
        let a = 1.0 / std::f64::consts::LN_2;
        let m = p.weighted_moment(&MomentSpec::new(0.0, a, 0.0)).unwrap();
        assert_relative_eq!(m, (a.exp() - 1.0) / a, epsilon = 1e-12);
    }

    #[test]
    fn moment_exponential_closed_form() {
        // |V| = 3 e^{-x}: ∫_0^∞ 3 e^{(a-1)x} dx = 3/(1-a) for a < 1
        let p = Potential::exponential(c(-3.0, 0.0), 1.0);
        let m = p.weighted_moment(&MomentSpec::new(0.0, 0.25, 0.0)).unwrap();
        assert_relative_eq!(m, 3.0 / 0.75, epsilon = 1e-9);
        assert!(p
            .weighted_moment(&MomentSpec::new(0.0, 1.0, 0.0))
            .is_err());
    }

    #[test]
    fn truncation_radius_cases() {
        let p = Potential::well(c(-1.0, 0.0), 1.0);
        assert_relative_eq!(p.truncation_radius(1e-10), 1.0, epsilon = 1e-9);
        assert_eq!(Potential::zero().truncation_radius(1e-6), 0.0);
        // V = -e^{-x}: solve (2+X) e^{-X} = 1e-8
        let p = Potential::exponential(c(-1.0, 0.0), 1.0);
        let x = p.truncation_radius(1e-8);
        let mut lo = 1.0f64;
        let mut hi = 60.0f64;
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if (2.0 + m) * f64::exp(-m) < 1e-8 {
                hi = m;
            } else {
                lo = m;
            }
        }
        assert_relative_eq!(x, hi, epsilon = 1e-4);
        assert!((x - 21.6).abs() < 0.1);
    }

    #[test]
    fn sampled_interpolation_and_support() {
        let p = Potential::sampled(
            vec![0.0, 1.0, 2.0],
            vec![c(1.0, 0.0), c(0.0, 1.0), c(0.0, 0.0)],
        )
        .unwrap();
        assert_eq!(p.evaluate(0.5).unwrap(), c(0.5, 0.5));
        assert_eq!(p.evaluate(3.0).unwrap(), c(0.0, 0.0));
        assert_eq!(p.support(), Some(2.0));
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{
            "family": "well",
            "params": { "depth": [-4.0, 0.0], "width": 1.0 },
            "support": 1.0
        }"#;
        let p = Potential::from_json(text).unwrap();
        assert_eq!(p.evaluate(0.5).unwrap(), c(-4.0, 0.0));
        assert_eq!(p.decay_rate(), f64::INFINITY);
        assert!(Potential::from_json("{\"family\": \"nope\", \"params\": {}}").is_err());
    }

    #[test]
    fn expression_family() {
        let p = Potential::expression("-(2+i)*exp(-x)", 1.0).unwrap();
        let v = p.evaluate(1.0).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((v - c(-2.0 * e1, -e1)).norm() < 1e-14);
        let m = p.weighted_moment(&MomentSpec::new(0.0, 0.0, 0.0)).unwrap();
        assert_relative_eq!(m, 5.0f64.sqrt(), epsilon = 1e-8);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn moment_monotone_in_lower(lower in 0.0f64..3.0, alpha in 0.0f64..1.0) {
            let p = Potential::well(c(-2.0, 1.0), 2.0);
            let m0 = p.weighted_moment(&MomentSpec::new(alpha, 0.3, 0.0)).unwrap();
            let m1 = p.weighted_moment(&MomentSpec::new(alpha, 0.3, lower)).unwrap();
            prop_assert!(m1 <= m0 + 1e-9);
        }

        #[test]
        fn moment_additive_over_split(split in 0.1f64..1.9) {
            let p = Potential::exponential(c(0.0, -3.0), 0.7);
            let whole = p.weighted_moment(&MomentSpec::new(0.5, 0.2, 0.0)).unwrap();
            let left = p.weighted_integral(0.0, |x| x.powf(0.5) * (0.2 * x).exp(), 1e-10, 0.2)
                .unwrap()
                - p.weighted_moment(&MomentSpec::new(0.5, 0.2, split)).unwrap();
            let right = p.weighted_moment(&MomentSpec::new(0.5, 0.2, split)).unwrap();
            prop_assert!((left + right - whole).abs() < 1e-8);
        }
    }

    #[test]
    fn l1_norm_of_well_is_exact() {
        let p = Potential::well(c(-3.0, 4.0), 2.0);
        assert_relative_eq!(p.l1_norm().unwrap(), 10.0, epsilon = 1e-10);
    }
}
