//! Argument-principle machinery on rectangles, generic over the analytic
//! function so the counting and subdivision logic can be tested on
//! polynomials with known zeros.



use crate::error::{Error, Result};
use crate::quad;
use crate::C64;

/// An analytic function together with its derivative.
pub trait AnalyticFn {
    fn eval(&self, k: C64) -> Result<C64>;
    fn eval_with_derivative(&self, k: C64) -> Result<(C64, C64)>;
}

/// Axis-aligned rectangle in the k-plane.
#[derive(Debug, Clone, Copy)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }
    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }
    pub fn center(&self) -> C64 {
        C64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }
    pub fn contains(&self, k: C64, slack: f64) -> bool {
        k.re >= self.x0 - slack
            && k.re <= self.x1 + slack
            && k.im >= self.y0 - slack
            && k.im <= self.y1 + slack
    }
    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.x0, self.y0),
            C64::new(self.x1, self.y0),
            C64::new(self.x1, self.y1),
            C64::new(self.x0, self.y1),
        ]
    }
}

/// Winding count `(1/2πi) ∮ f'/f dk` over the rectangle boundary (CCW),
/// with the total adaptive quadrature error bound required under 0.25.
pub fn count_in_rect(f: &impl AnalyticFn, rect: &Rect, margin: f64) -> Result<usize> {
    let corners = rect.corners();
    let mut total = C64::new(0.0, 0.0);
    let mut err_total = 0.0;
    for i in 0..4 {
        let za = corners[i];
        let zb = corners[(i + 1) % 4];
        // pre-scan for zeros essentially on the contour
        for t in [0.0, 0.13, 0.29, 0.5, 0.71, 0.87, 1.0] {
            let z = za + (zb - za) * t;
            let v = f.eval(z)?;
            if v.norm() < margin {
                return Err(Error::ContourNearZero(format!(
                    "|f| = {:.3e} at {} on the contour",
                    v.norm(),
                    z
                )));
            }
        }
        let dz = zb - za;
        let mut bad: Option<Error> = None;
        let mut g = |t: f64| -> C64 {
            if bad.is_some() {
                return C64::new(0.0, 0.0);
            }
            match f.eval_with_derivative(za + dz * t) {
                Ok((v, d)) => {
                    if v.norm() == 0.0 {
                        bad = Some(Error::ContourNearZero(format!(
                            "exact zero on contour near {}",
                            za + dz * t
                        )));
                        C64::new(0.0, 0.0)
                    } else {
                        d / v * dz
                    }
                }
                Err(e) => {
                    bad = Some(e);
                    C64::new(0.0, 0.0)
                }
            }
        };
        let r = quad::adaptive(&mut g, 0.0, 1.0, 0.02, 44);
        if let Some(e) = bad {
            return Err(e);
        }
        total += r.value;
        err_total += r.error;
    }
    let n = total / C64::new(0.0, 2.0 * std::f64::consts::PI);
    let err = err_total / (2.0 * std::f64::consts::PI);
    let rounded = n.re.round();
    if err >= 0.25 || (n.re - rounded).abs() >= 0.25 || n.im.abs() >= 0.25 {
        return Err(Error::QuadratureUncertain(format!(
            "winding integral {} with error bound {:.3e}",
            n, err
        )));
    }
    if rounded < -0.25 {
        return Err(Error::QuadratureUncertain(format!(
            "negative winding {rounded} (function not analytic inside?)"
        )));
    }
    Ok(rounded.max(0.0) as usize)
}

/// Retry `count_in_rect` with slightly inflated rectangles when the contour
/// passes too close to a zero. The perturbation sequence is deterministic.
pub fn count_with_perturbation(
    f: &impl AnalyticFn,
    rect: &Rect,
    margin: f64,
    y_floor: f64,
) -> Result<(usize, Rect)> {
    let mut factor = 0.0;
    for attempt in 0..6 {
        let g = factor * rect.width().max(rect.height());
        let r = Rect {
            x0: rect.x0 - g,
            x1: rect.x1 + g,
            y0: (rect.y0 - g).max(y_floor),
            y1: rect.y1 + g,
        };
        match count_in_rect(f, &r, margin) {
            Ok(n) => return Ok((n, r)),
            Err(Error::ContourNearZero(_)) | Err(Error::QuadratureUncertain(_)) if attempt < 5 => {
                factor = 0.013 * (attempt + 1) as f64;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!()
}

/// A zero found by subdivision plus Newton refinement.
#[derive(Debug, Clone, Copy)]
pub struct FoundZero {
    pub k: C64,
    pub multiplicity: usize,
    pub residual: f64,
}

pub struct SubdivisionConfig {
    /// rectangles at most this size are treated as a single (possibly
    /// multiple) zero cluster
    pub cluster_size: f64,
    /// newton refinement target on |f|
    pub tol: f64,
    /// per-cluster multiplicity cap
    pub multiplicity_cap: usize,
    /// zeros are not pushed below this imaginary part
    pub y_floor: f64,
    pub margin: f64,
}

/// Recursively subdivide `rect` until every cluster holds one zero (counted
/// with multiplicity), then polish each with Newton's method.
pub fn locate_zeros(
    f: &impl AnalyticFn,
    rect: &Rect,
    cfg: &SubdivisionConfig,
) -> Result<Vec<FoundZero>> {
    let (n, outer) = count_with_perturbation(f, rect, cfg.margin, cfg.y_floor)?;
    let mut out = Vec::with_capacity(n);
    if n > 0 {
        subdivide(f, &outer, n, cfg, &mut out, 0)?;
    }
    let found: usize = out.iter().map(|z| z.multiplicity).sum();
    if found != n {
        return Err(Error::RefinementStagnation(format!(
            "outer contour counts {n} zeros but subdivision located {found}"
        )));
    }
    out.sort_by(|a, b| {
        a.k.re
            .total_cmp(&b.k.re)
            .then(a.k.im.total_cmp(&b.k.im))
    });
    Ok(out)
}

fn subdivide(
    f: &impl AnalyticFn,
    rect: &Rect,
    count: usize,
    cfg: &SubdivisionConfig,
    out: &mut Vec<FoundZero>,
    depth: usize,
) -> Result<()> {
    if depth > 60 {
        return Err(Error::RefinementStagnation(format!(
            "subdivision depth exceeded near {}",
            rect.center()
        )));
    }
    let size = rect.width().max(rect.height());
    if count <= cfg.multiplicity_cap {
        // Newton first: splitting straight through a multiple zero would put
        // every candidate split line near-on the zero
        if let Some(z) = newton(f, rect.center(), count, cfg.tol) {
            if rect.contains(z.k, 0.05 * size) {
                if count == 1 {
                    out.push(z);
                    return Ok(());
                }
                // a multiple zero must hold the full count inside a
                // cluster-sized verification box (margin 0: the prescan
                // would always fire this close to a zero)
                let r = cfg.cluster_size;
                let vrect = Rect {
                    x0: z.k.re - r,
                    x1: z.k.re + r,
                    y0: (z.k.im - r).max(cfg.y_floor),
                    y1: z.k.im + r,
                };
                if let Ok(vc) = count_in_rect(f, &vrect, 0.0) {
                    if vc == count {
                        out.push(z);
                        return Ok(());
                    }
                }
            }
        }
    }
    if count > cfg.multiplicity_cap && size <= cfg.cluster_size {
        return Err(Error::RefinementStagnation(format!(
            "cluster at {} carries multiplicity {count} above the cap {}",
            rect.center(),
            cfg.multiplicity_cap
        )));
    }
    if size <= cfg.cluster_size {
        return Err(Error::RefinementStagnation(format!(
            "Newton refinement stagnated in cluster at {}",
            rect.center()
        )));
    }
    // split the longer side; dodge splits that run through a zero
    let vertical = rect.width() >= rect.height();
    let fracs = [0.5, 0.55, 0.45, 0.6, 0.4, 0.65];
    let mut last_err: Option<Error> = None;
    for frac in fracs {
        let (ra, rb) = if vertical {
            let xm = rect.x0 + frac * rect.width();
            (
                Rect { x1: xm, ..*rect },
                Rect { x0: xm, ..*rect },
            )
        } else {
            let ym = rect.y0 + frac * rect.height();
            (
                Rect { y1: ym, ..*rect },
                Rect { y0: ym, ..*rect },
            )
        };
        let na = match count_in_rect(f, &ra, cfg.margin) {
            Ok(v) => v,
            Err(e @ Error::ContourNearZero(_)) | Err(e @ Error::QuadratureUncertain(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let nb = match count_in_rect(f, &rb, cfg.margin) {
            Ok(v) => v,
            Err(e @ Error::ContourNearZero(_)) | Err(e @ Error::QuadratureUncertain(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if na + nb != count {
            last_err = Some(Error::QuadratureUncertain(format!(
                "child counts {na}+{nb} != parent {count} at {}",
                rect.center()
            )));
            continue;
        }
        if na > 0 {
            subdivide(f, &ra, na, cfg, out, depth + 1)?;
        }
        if nb > 0 {
            subdivide(f, &rb, nb, cfg, out, depth + 1)?;
        }
        return Ok(());
    }
    Err(last_err.unwrap_or_else(|| {
        Error::RefinementStagnation(format!("could not split rectangle at {}", rect.center()))
    }))
}

/// Newton iteration `k <- k - m f/f'` for a zero of multiplicity `m`.
fn newton(f: &impl AnalyticFn, start: C64, multiplicity: usize, tol: f64) -> Option<FoundZero> {
    let m = multiplicity.max(1) as f64;
    let mut k = start;
    let mut best = (f64::INFINITY, start);
    for _ in 0..80 {
        let (v, d) = f.eval_with_derivative(k).ok()?;
        let r = v.norm();
        if r < best.0 {
            best = (r, k);
        }
        if r < tol {
            return Some(FoundZero {
                k,
                multiplicity,
                residual: r,
            });
        }
        if d.norm() == 0.0 {
            break;
        }
        let step = v / d * m;
        k -= step;
        if step.norm() < 1e-17 * (1.0 + k.norm()) {
            break;
        }
    }
    // accept near-miss for multiple zeros where |f| ~ tol^multiplicity is
    // not reachable in double precision
    let (r, kb) = best;
    if multiplicity > 1 && r < tol.powf(1.0 / (m + 1.0)) {
        return Some(FoundZero {
            k: kb,
            multiplicity,
            residual: r,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Polynomial with prescribed zeros, for exercising the engine.
    struct Poly {
        zeros: Vec<(C64, usize)>,
    }

    impl AnalyticFn for Poly {
        fn eval(&self, k: C64) -> Result<C64> {
            let mut v = C64::new(1.0, 0.0);
            for (z, m) in &self.zeros {
                for _ in 0..*m {
                    v *= k - z;
                }
            }
            Ok(v)
        }
        fn eval_with_derivative(&self, k: C64) -> Result<(C64, C64)> {
            let v = self.eval(k)?;
            let mut dlog = C64::new(0.0, 0.0);
            for (z, m) in &self.zeros {
                dlog += C64::new(*m as f64, 0.0) / (k - z);
            }
            Ok((v, v * dlog))
        }
    }

    fn cfg() -> SubdivisionConfig {
        SubdivisionConfig {
            cluster_size: 1e-7,
            tol: 1e-10,
            multiplicity_cap: 4,
            y_floor: -10.0,
            margin: 1e-12,
        }
    }

    #[test]
    fn counts_simple_zeros() {
        let f = Poly {
            zeros: vec![
                (C64::new(0.5, 0.5), 1),
                (C64::new(-1.0, 2.0), 1),
                (C64::new(3.0, 4.0), 1),
            ],
        };
        let rect = Rect {
            x0: -2.0,
            x1: 2.0,
            y0: 0.0,
            y1: 3.0,
        };
        assert_eq!(count_in_rect(&f, &rect, 1e-12).unwrap(), 2);
    }

    #[test]
    fn locates_zeros_with_multiplicity() {
        let f = Poly {
            zeros: vec![(C64::new(0.3, 1.1), 2), (C64::new(-0.7, 0.4), 1)],
        };
        let rect = Rect {
            x0: -2.0,
            x1: 2.0,
            y0: 0.0,
            y1: 2.0,
        };
        let zs = locate_zeros(&f, &rect, &cfg()).unwrap();
        assert_eq!(zs.len(), 2);
        assert_eq!(zs[0].multiplicity, 1);
        assert!((zs[0].k - C64::new(-0.7, 0.4)).norm() < 1e-7);
        assert_eq!(zs[1].multiplicity, 2);
        assert!((zs[1].k - C64::new(0.3, 1.1)).norm() < 1e-5);
    }

    #[test]
    fn counts_are_stable_under_contour_perturbation() {
        let f = Poly {
            zeros: vec![(C64::new(0.0, 1.0), 1), (C64::new(1.5, 0.2), 1)],
        };
        let base = Rect {
            x0: -2.0,
            x1: 2.0,
            y0: 0.0,
            y1: 2.0,
        };
        for s in [0.9, 1.0, 1.1] {
            let r = Rect {
                x0: base.x0 * s,
                x1: base.x1 * s,
                y0: 0.0,
                y1: base.y1 * s,
            };
            assert_eq!(count_in_rect(&f, &r, 1e-12).unwrap(), 2);
        }
    }

    #[test]
    fn zero_on_contour_is_detected_and_dodged() {
        let f = Poly {
            zeros: vec![(C64::new(0.0, 1.0), 1)],
        };
        let rect = Rect {
            x0: -1.0,
            x1: 0.0, // right edge passes through the zero's real part... on x=0 line through (0,1)
            y0: 0.0,
            y1: 2.0,
        };
        assert!(matches!(
            count_in_rect(&f, &rect, 1e-12),
            Err(Error::ContourNearZero(_)) | Err(Error::QuadratureUncertain(_))
        ));
        let (n, _) = count_with_perturbation(&f, &rect, 1e-12, 0.0).unwrap();
        // inflation pushes the edge past the zero, so it is now inside
        assert_eq!(n, 1);
    }

    #[test]
    fn empty_region() {
        let f = Poly {
            zeros: vec![(C64::new(5.0, 5.0), 1)],
        };
        let rect = Rect {
            x0: -1.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        };
        assert_eq!(count_in_rect(&f, &rect, 1e-12).unwrap(), 0);
        assert!(locate_zeros(&f, &rect, &cfg()).unwrap().is_empty());
    }
}
