//! Quantitative loss bounds for extension at controlled scale.
//!
//! Two competing bounds govern the constant of a one-point extension against
//! sources kept at distance at least r:
//!
//!   c_hat(C, r)      = C + ln(2) / r        (thin-triangle gap), and
//!   asinh_bound(C, r) = asinh(C sinh r) / r (radial containment).
//!
//! The first decreases in r, the second increases, and
//!
//!   c_star(C) = min_r max(c_hat, asinh_bound)
//!
//! sits at their crossing. For every C < 1 the crossing stays strictly below
//! 1, which is what makes the certified pipeline possible, at the price of
//! c_star(C) approaching 1 quadratically as C does.

use crate::error::{Error, Result};
use crate::geometry::{exp_map, log_map, HPoint};

/// The thin-triangle gap: sup over legs a, b of a + b minus the distance
/// realized when the legs meet at a right angle. Every right or obtuse
/// hinge loses at most this much over the degenerate (flat-angle) case.
pub const DELTA: f64 = std::f64::consts::LN_2;

/// Upper limit on leg lengths and radii accepted by the bound functions;
/// sinh overflows not far beyond it.
const MAX_SCALE: f64 = 600.0;

fn check_scale(name: &'static str, r: f64) -> Result<()> {
    if !(r.is_finite() && r >= 0.0 && r <= MAX_SCALE) {
        return Err(Error::OutOfDomain {
            name,
            value: r,
            reason: "must lie in [0, 600]",
        });
    }
    Ok(())
}

fn check_contraction(c: f64) -> Result<()> {
    if !(c.is_finite() && c > 0.0 && c < 1.0) {
        return Err(Error::OutOfDomain {
            name: "c",
            value: c,
            reason: "must lie strictly between 0 and 1",
        });
    }
    Ok(())
}

/// a + b - d, where d is the side opposite a right angle with legs a and b.
///
/// Written as -ln(P + sqrt(P^2 - e^{-2(a+b)})) with
/// P = (1 + e^{-2a})(1 + e^{-2b})/4, which avoids the catastrophic
/// subtraction of two nearly equal lengths; the gap tends to ln 2 from
/// below as the legs grow.
pub fn delta_gap(a: f64, b: f64) -> Result<f64> {
    check_scale("a", a)?;
    check_scale("b", b)?;
    let p = 0.25 * (1.0 + (-2.0 * a).exp()) * (1.0 + (-2.0 * b).exp());
    let e = (-2.0 * (a + b)).exp();
    let s = p + (p * p - e).max(0.0).sqrt();
    Ok(-s.ln())
}

/// The gap bound on a one-point extension constant: C + ln(2)/r when every
/// source is at distance at least r from the new point.
pub fn c_hat(c: f64, r: f64) -> Result<f64> {
    check_contraction(c)?;
    check_scale("r", r)?;
    if r <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "r",
            value: r,
            reason: "must be positive",
        });
    }
    Ok(c + DELTA / r)
}

/// The radial containment bound: asinh(C sinh r)/r. Increases from C at
/// r = 0 toward 1, so it only helps at moderate scales. Evaluated in log
/// domain for r > 30, where C sinh r overflows the direct asinh argument's
/// useful range long before f64 does.
pub fn asinh_bound(c: f64, r: f64) -> Result<f64> {
    check_contraction(c)?;
    check_scale("r", r)?;
    if r <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "r",
            value: r,
            reason: "must be positive",
        });
    }
    if r > 30.0 {
        Ok((c.ln() + r + (-(-2.0 * r).exp()).ln_1p()) / r)
    } else {
        Ok((c * r.sinh()).asinh() / r)
    }
}

/// Everything `compute_c_star` learned: the minimizing scale, both bounds
/// there, and their maximum.
#[derive(Debug, Clone)]
pub struct BoundsReport {
    pub c: f64,
    pub r_star: f64,
    pub c_hat: f64,
    pub asinh_value: f64,
    pub c_star: f64,
    pub delta: f64,
}

/// Minimizes max(c_hat, asinh_bound) over r by golden section on ln r.
///
/// The search starts just above ln(2)/(1 - C), below which c_hat is not
/// even a contraction, and caps at r = 1000; C too close to 1 pushes the
/// window empty and errors rather than returning a meaningless bound.
pub fn compute_c_star(c: f64) -> Result<BoundsReport> {
    check_contraction(c)?;
    let r_min = DELTA / (1.0 - c) * (1.0 + 1e-6);
    let r_max = 1e3;
    if r_min >= r_max {
        return Err(Error::OutOfDomain {
            name: "c",
            value: c,
            reason: "too close to 1: no admissible scale below r = 1000",
        });
    }
    let objective = |t: f64| -> f64 {
        let r = t.exp();
        let a = c + DELTA / r;
        let b = asinh_bound(c, r).expect("r inside the validated window");
        a.max(b)
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = r_min.ln();
    let mut hi = r_max.ln();
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1);
    let mut f2 = objective(x2);
    for _ in 0..200 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    let r_star = (0.5 * (lo + hi)).exp();
    let ch = c + DELTA / r_star;
    let ab = asinh_bound(c, r_star)?;
    Ok(BoundsReport {
        c,
        r_star,
        c_hat: ch,
        asinh_value: ab,
        c_star: ch.max(ab),
        delta: DELTA,
    })
}

/// The radial homothety with the given factor about a center: push every
/// point along its geodesic ray from the center, scaling arclength by the
/// factor.
#[derive(Debug, Clone)]
pub struct Homothety {
    factor: f64,
    center: HPoint,
}

impl Homothety {
    pub fn new(factor: f64, center: HPoint) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::OutOfDomain {
                name: "factor",
                value: factor,
                reason: "must be positive and finite",
            });
        }
        Ok(Homothety { factor, center })
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn center(&self) -> &HPoint {
        &self.center
    }

    pub fn apply(&self, x: &HPoint) -> Result<HPoint> {
        let v = log_map(&self.center, x)?;
        exp_map(&self.center, &v.scaled(self.factor))
    }

    pub fn inverse(&self) -> Homothety {
        Homothety {
            factor: 1.0 / self.factor,
            center: self.center.clone(),
        }
    }
}

/// exp_center(c log_center(x)) as a free function.
pub fn radial_homothety(center: &HPoint, c: f64, x: &HPoint) -> Result<HPoint> {
    Homothety::new(c, center.clone())?.apply(x)
}

/// Extremal distance ratios of the homothety with factor c on the ball of
/// radius r about its center.
///
/// `forward` = sinh(c r)/sinh(r) is the infimum of pairwise ratios,
/// approached by short arcs along the boundary sphere; `radial` = c is the
/// supremum, attained by radial pairs, hence the Lipschitz constant of the
/// restricted map; `inverse` = 1/forward is the Lipschitz constant of the
/// inverse homothety on the image ball of radius c r.
#[derive(Debug, Clone, Copy)]
pub struct HomothetyConstants {
    pub forward: f64,
    pub radial: f64,
    pub inverse: f64,
}

pub fn homothety_lip_constants(c: f64, r: f64) -> Result<HomothetyConstants> {
    if !(c.is_finite() && c > 0.0 && c <= 1.0) {
        return Err(Error::OutOfDomain {
            name: "c",
            value: c,
            reason: "must lie in (0, 1]",
        });
    }
    check_scale("r", r)?;
    if r <= 0.0 {
        return Err(Error::OutOfDomain {
            name: "r",
            value: r,
            reason: "must be positive",
        });
    }
    let forward = (c * r).sinh() / r.sinh();
    Ok(HomothetyConstants {
        forward,
        radial: c,
        inverse: 1.0 / forward,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{d_theta, distance, exp_map, HPoint, TangentVec};
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, LN_2, PI};

    #[test]
    fn delta_gap_matches_the_right_angle_hinge() {
        for &(a, b) in &[(0.5, 0.5), (1.0, 2.0), (3.0, 3.0), (4.0, 0.3)] {
            let direct = a + b - d_theta(FRAC_PI_2, a, b).unwrap();
            assert_relative_eq!(delta_gap(a, b).unwrap(), direct, epsilon = 1e-11);
        }
        assert_relative_eq!(
            delta_gap(3.0, 3.0).unwrap(),
            0.688220145845134327,
            epsilon = 1e-15
        );
    }

    #[test]
    fn delta_gap_saturates_at_ln_two() {
        // The true gap at (20, 20) is ln 2 - 8.5e-18, below f64 resolution;
        // the stable form must land on ln 2 instead of shedding all digits
        // to cancellation.
        assert_relative_eq!(delta_gap(20.0, 20.0).unwrap(), LN_2, epsilon = 1e-15);
        let mut prev = 0.0;
        for k in 1..=12 {
            let g = delta_gap(k as f64, k as f64).unwrap();
            assert!(g >= prev);
            assert!(g <= LN_2 + 1e-15);
            prev = g;
        }
    }

    #[test]
    fn gap_bound_and_radial_bound_take_their_frozen_values() {
        assert_relative_eq!(
            c_hat(0.5, 2.0).unwrap(),
            0.5 + LN_2 / 2.0,
            epsilon = 1e-16
        );
        assert_relative_eq!(
            asinh_bound(0.5, 2.0).unwrap(),
            0.678472245037153246,
            epsilon = 1e-15
        );
    }

    #[test]
    fn radial_bound_is_continuous_across_the_log_domain_switch() {
        for &c in &[0.1, 0.5, 0.9, 0.99] {
            let below = asinh_bound(c, 30.0 - 1e-12).unwrap();
            let above = asinh_bound(c, 30.0 + 1e-12).unwrap();
            assert_relative_eq!(below, above, epsilon = 1e-12);
        }
        // Large scale: the bound creeps toward 1 from below.
        let far = asinh_bound(0.5, 500.0).unwrap();
        assert!(far < 1.0);
        assert!(far > 0.998);
    }

    #[test]
    fn c_star_reproduces_the_pinned_table() {
        let table = [
            (0.1, 0.318482814250717),
            (0.3, 0.562324826027221),
            (0.5, 0.752188020195991),
            (0.7, 0.898255775654839),
            (0.8, 0.951303902895732),
            (0.9, 0.986805325415329),
            (0.95, 0.996554909619123),
            (0.99, 0.999857076630407),
        ];
        for &(c, expected) in &table {
            let rep = compute_c_star(c).unwrap();
            assert_relative_eq!(rep.c_star, expected, epsilon = 1e-9);
            assert!(rep.c_star < 1.0);
            assert!(rep.c_star > c);
            // At the optimum the two bounds cross.
            assert_relative_eq!(rep.c_hat, rep.asinh_value, epsilon = 1e-7);
        }
        let rep = compute_c_star(0.5).unwrap();
        assert_relative_eq!(rep.r_star, 2.74853333644182267, epsilon = 1e-7);
    }

    #[test]
    fn c_star_rejects_non_contractions() {
        assert!(compute_c_star(1.0).is_err());
        assert!(compute_c_star(0.0).is_err());
        assert!(compute_c_star(1.5).is_err());
        // Close enough to 1 that no scale below 1000 works.
        assert!(compute_c_star(1.0 - 1e-4).is_err());
    }

    #[test]
    fn loss_scales_quadratically_in_the_contraction_deficit() {
        let cs: Vec<f64> = vec![0.9, 0.93, 0.96, 0.99];
        let pts: Vec<(f64, f64)> = cs
            .iter()
            .map(|&c| {
                let rep = compute_c_star(c).unwrap();
                ((1.0 - c).ln(), (1.0 - rep.c_star).ln())
            })
            .collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        assert_relative_eq!(slope, 1.9674882669022429, epsilon = 1e-6);
    }

    #[test]
    fn homothety_scales_radial_distance_exactly() {
        let o = HPoint::basepoint(3);
        let h = Homothety::new(0.5, o.clone()).unwrap();
        let v = TangentVec::new(o.clone(), vec![0.0, 1.2, -0.4, 0.8]).unwrap();
        let x = exp_map(&o, &v).unwrap();
        let hx = h.apply(&x).unwrap();
        assert_relative_eq!(
            distance(&o, &hx),
            0.5 * distance(&o, &x),
            epsilon = 1e-12
        );
        let back = h.inverse().apply(&hx).unwrap();
        assert!(distance(&back, &x) < 1e-10);
        let free = radial_homothety(&o, 0.5, &x).unwrap();
        assert_eq!(free, hx);
        assert!(distance(&radial_homothety(&o, 1.0, &x).unwrap(), &x) < 1e-10);
    }

    #[test]
    fn homothety_constants_bracket_the_sampled_ratios() {
        let c = 0.5;
        let r = 2.0;
        let k = homothety_lip_constants(c, r).unwrap();
        assert_relative_eq!(k.forward, 0.324027136831942700, epsilon = 1e-15);
        assert_relative_eq!(k.inverse, 3.086161269630487557, epsilon = 1e-15);
        assert_relative_eq!(k.radial, c, epsilon = 0.0);

        let o = HPoint::basepoint(2);
        let h = Homothety::new(c, o.clone()).unwrap();
        let n = 400;
        let ring: Vec<HPoint> = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                let v = TangentVec::new(o.clone(), vec![0.0, r * a.cos(), r * a.sin()]).unwrap();
                exp_map(&o, &v).unwrap()
            })
            .collect();
        let images: Vec<HPoint> = ring.iter().map(|p| h.apply(p).unwrap()).collect();
        let mut min_ratio = f64::INFINITY;
        let mut max_ratio: f64 = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            let ratio = distance(&images[i], &images[j]) / distance(&ring[i], &ring[j]);
            min_ratio = min_ratio.min(ratio);
            max_ratio = max_ratio.max(ratio);
        }
        // Adjacent boundary pairs approach the tangential infimum from
        // above; all pairs stay below the radial supremum.
        assert!(min_ratio >= k.forward - 1e-9);
        assert!(min_ratio <= k.forward + 1e-3);
        assert!(max_ratio <= k.radial + 1e-9);

        let mut inv_max: f64 = 0.0;
        for i in 0..n {
            let j = (i + 1) % n;
            let ratio = distance(&ring[i], &ring[j]) / distance(&images[i], &images[j]);
            inv_max = inv_max.max(ratio);
        }
        assert!(inv_max <= k.inverse + 1e-9);
        assert!(inv_max >= k.inverse - 1e-2);
    }

    #[test]
    fn bound_functions_reject_bad_domains() {
        assert!(delta_gap(-1.0, 2.0).is_err());
        assert!(delta_gap(2.0, 601.0).is_err());
        assert!(c_hat(0.5, 0.0).is_err());
        assert!(c_hat(-0.2, 1.0).is_err());
        assert!(asinh_bound(0.5, -1.0).is_err());
        assert!(homothety_lip_constants(1.2, 1.0).is_err());
        assert!(homothety_lip_constants(0.5, 0.0).is_err());
        assert!(Homothety::new(0.0, HPoint::basepoint(2)).is_err());
    }
}
