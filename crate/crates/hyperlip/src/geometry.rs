//! Hyperboloid model of the m-dimensional hyperbolic space of curvature -1.
//!
//! Points live on the upper sheet {x in R^{m+1} : <x,x> = -1, x_0 > 0} of the
//! unit hyperboloid, where <u,v> = -u_0 v_0 + sum_i u_i v_i is the Minkowski
//! bilinear form. The distance is d(x, y) = arccosh(-<x,y>), geodesics are
//! intersections with 2-planes through the origin, and the exponential map has
//! the closed form exp_x(v) = cosh(|v|) x + sinh(|v|) v/|v|.
//!
//! The arccosh formulation is exact in real arithmetic but loses up to ~1e-8
//! absolute accuracy in f64 once coordinates reach cosh of a moderate radius,
//! because -<x,y> is a difference of large near-equal products. Distances here
//! are instead computed from
//!
//!   cosh d - 1 = [ sum_i (x_i - y_i)^2 + sum_{i<j} (x_i y_j - x_j y_i)^2 ] /
//!                [ x_0 y_0 + 1 + sum_i x_i y_i ]
//!
//! (spatial indices only), whose numerator is a sum of squares by the Lagrange
//! identity and whose denominator is evaluated on the mirrored point when the
//! spatial inner product is negative, so no catastrophic cancellation occurs in
//! any regime. Side lengths from the hyperbolic law of cosines use the same
//! idea: cosh D - 1 = 2 sinh^2((l1-l2)/2) + 2 sinh l1 sinh l2 sin^2(theta/2).

use crate::error::{Error, Result};

/// Relative defect of <x,x> = -1 beyond which a point is rejected instead of
/// renormalized. Correctly computed points accumulate defect on the order of a
/// few ulps of x_0^2, many orders below this.
pub const SHEET_DEFECT_LIMIT: f64 = 1e-6;

/// Relative defect of <base,v> = 0 beyond which a vector is rejected as not
/// tangent.
pub const TANGENT_DEFECT_LIMIT: f64 = 1e-9;

/// Distances below this are treated as coincidence by degeneracy checks.
pub const COINCIDENCE_TOL: f64 = 1e-12;

/// Minkowski inner product -u_0 v_0 + sum_{i>=1} u_i v_i.
pub fn mink_inner(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    let mut s = -u[0] * v[0];
    for i in 1..u.len() {
        s += u[i] * v[i];
    }
    s
}

/// cosh(d(x,y)) - 1 evaluated without cancellation. Inputs are raw coordinate
/// slices of points on the sheet.
pub(crate) fn cosh_dist_minus_one(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let n = x.len();
    let mut diff_sq = 0.0; // sum of squared spatial differences
    let mut s = 0.0; // spatial inner product
    for i in 1..n {
        let d = x[i] - y[i];
        diff_sq += d * d;
        s += x[i] * y[i];
    }
    let mut gram = 0.0; // sum of squared 2x2 spatial minors
    for i in 1..n {
        for j in (i + 1)..n {
            let m = x[i] * y[j] - x[j] * y[i];
            gram += m * m;
        }
    }
    let num = diff_sq + gram;
    let den = if s >= 0.0 {
        x[0] * y[0] + 1.0 + s
    } else {
        // x_0 y_0 + s cancels when the points are nearly antipodal in the
        // spatial directions; route through the mirrored point (y_0, -y_i),
        // for which the same sum-of-squares identity applies with s negated.
        let mut sum_sq = 0.0;
        for i in 1..n {
            let d = x[i] + y[i];
            sum_sq += d * d;
        }
        2.0 + (sum_sq + gram) / (x[0] * y[0] + 1.0 - s)
    };
    num / den
}

/// arccosh(1 + q) for q >= 0, stable down to q = 0.
pub(crate) fn acosh_1p(q: f64) -> f64 {
    let q = q.max(0.0);
    (q + (q * (q + 2.0)).sqrt()).ln_1p()
}

/// Distance between raw coordinate slices.
pub(crate) fn dist_raw(x: &[f64], y: &[f64]) -> f64 {
    acosh_1p(cosh_dist_minus_one(x, y))
}

/// Recomputes x_0 = sqrt(1 + |x_spatial|^2) so the sheet constraint holds to
/// machine precision, after checking the incoming defect is small.
fn project_to_sheet(coords: &mut [f64]) -> Result<()> {
    if coords[0] <= 0.0 {
        return Err(Error::WrongSheet { x0: coords[0] });
    }
    let q = mink_inner(coords, coords);
    let defect = (q + 1.0).abs() / (1.0 + coords[0] * coords[0]);
    if !defect.is_finite() || defect > SHEET_DEFECT_LIMIT {
        return Err(Error::OffSheet {
            defect,
            limit: SHEET_DEFECT_LIMIT,
        });
    }
    let mut spatial_sq = 0.0;
    for c in coords[1..].iter() {
        spatial_sq += c * c;
    }
    coords[0] = (1.0 + spatial_sq).sqrt();
    Ok(())
}

/// A point on the upper sheet of the unit hyperboloid in R^{m+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct HPoint {
    coords: Vec<f64>,
}

impl HPoint {
    /// Validates the sheet constraint (relative defect at most 1e-6), then
    /// renormalizes the time coordinate so it holds exactly.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::DimensionMismatch {
                expected: 2,
                got: coords.len(),
            });
        }
        let mut coords = coords;
        project_to_sheet(&mut coords)?;
        Ok(HPoint { coords })
    }

    /// The point (1, 0, ..., 0), used as the reference origin throughout.
    pub fn basepoint(dim: usize) -> Self {
        let mut coords = vec![0.0; dim + 1];
        coords[0] = 1.0;
        HPoint { coords }
    }

    /// Ambient dimension of the model space (the sheet sits in R^{dim+1}).
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// A tangent vector at a base point, stored in ambient coordinates. Tangency
/// means Minkowski-orthogonality to the base.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVec {
    base: HPoint,
    components: Vec<f64>,
}

impl TangentVec {
    /// Projects the ambient vector onto the tangent space at `base` and
    /// rejects it if the remaining non-tangency is beyond roundoff scale.
    pub fn new(base: HPoint, components: Vec<f64>) -> Result<Self> {
        if components.len() != base.coords.len() {
            return Err(Error::DimensionMismatch {
                expected: base.coords.len(),
                got: components.len(),
            });
        }
        let mut components = components;
        let ip = mink_inner(base.coords(), &components);
        let scale = norm_sq_raw(&components).max(1.0);
        let defect = ip.abs() / scale.sqrt().max(1e-300);
        // <base, v + <base,v> base> = 0 exactly, since <base,base> = -1.
        for (c, b) in components.iter_mut().zip(base.coords()) {
            *c += ip * b;
        }
        if !defect.is_finite() || defect > TANGENT_DEFECT_LIMIT.max(1e-9) {
            return Err(Error::NotTangent { defect });
        }
        Ok(TangentVec { base, components })
    }

    pub(crate) fn from_raw_unchecked(base: HPoint, components: Vec<f64>) -> Self {
        TangentVec { base, components }
    }

    pub fn base(&self) -> &HPoint {
        &self.base
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    /// Riemannian norm, i.e. the Minkowski norm of the components, which is
    /// positive definite on a tangent space.
    pub fn norm(&self) -> f64 {
        mink_inner(&self.components, &self.components).max(0.0).sqrt()
    }

    pub fn scaled(&self, t: f64) -> TangentVec {
        TangentVec {
            base: self.base.clone(),
            components: self.components.iter().map(|c| c * t).collect(),
        }
    }
}

fn norm_sq_raw(v: &[f64]) -> f64 {
    mink_inner(v, v)
}

/// Geodesic distance d(x, y) = arccosh(-<x,y>), computed cancellation-free.
pub fn distance(x: &HPoint, y: &HPoint) -> f64 {
    assert_eq!(x.dim(), y.dim(), "points from different spaces");
    dist_raw(x.coords(), y.coords())
}

pub(crate) fn exp_raw(base: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let t = norm_sq_raw(v).max(0.0).sqrt();
    let mut out = Vec::with_capacity(base.len());
    if t < 1e-300 {
        out.extend_from_slice(base);
    } else {
        let (ch, sh_over_t) = if t < 1e-8 {
            // Leading-order series; enough at this scale since t^2 < 1e-16.
            (1.0 + 0.5 * t * t, 1.0 + t * t / 6.0)
        } else {
            (t.cosh(), t.sinh() / t)
        };
        for i in 0..base.len() {
            out.push(ch * base[i] + sh_over_t * v[i]);
        }
    }
    project_to_sheet(&mut out)?;
    Ok(out)
}

/// Exponential map: shoots the geodesic from `x` with initial velocity `v`
/// and returns the point at arc length |v|.
pub fn exp_map(x: &HPoint, v: &TangentVec) -> Result<HPoint> {
    if v.base() != x {
        return Err(Error::BaseMismatch);
    }
    Ok(HPoint {
        coords: exp_raw(x.coords(), v.components())?,
    })
}

pub(crate) fn log_raw(base: &[f64], target: &[f64]) -> Vec<f64> {
    let q = cosh_dist_minus_one(base, target);
    let n = base.len();
    if q <= 0.0 {
        return vec![0.0; n];
    }
    let d = acosh_1p(q);
    // sinh d = sqrt(q (q + 2)); the unnormalized direction is
    // target + <base,target> base = (target - base) - q * base,
    // written as a difference of nearby quantities only where it is exact.
    let sinh_d = (q * (q + 2.0)).sqrt();
    let scale = d / sinh_d;
    let mut v = Vec::with_capacity(n);
    for i in 0..n {
        v.push(((target[i] - base[i]) - q * base[i]) * scale);
    }
    v
}

/// Inverse of the exponential map: the tangent vector at `x` whose geodesic
/// reaches `y` at arc length d(x, y).
pub fn log_map(x: &HPoint, y: &HPoint) -> Result<TangentVec> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.coords.len(),
            got: y.coords.len(),
        });
    }
    Ok(TangentVec {
        base: x.clone(),
        components: log_raw(x.coords(), y.coords()),
    })
}

/// Interior angle at `vertex` of the geodesic triangle (vertex, a, b).
pub fn angle(vertex: &HPoint, a: &HPoint, b: &HPoint) -> Result<f64> {
    let u = log_map(vertex, a)?;
    let w = log_map(vertex, b)?;
    let nu = u.norm();
    let nw = w.norm();
    if nu < COINCIDENCE_TOL || nw < COINCIDENCE_TOL {
        return Err(Error::DegenerateAngle);
    }
    let cos = (mink_inner(u.components(), w.components()) / (nu * nw)).clamp(-1.0, 1.0);
    Ok(cos.acos())
}

/// Point at parameter t on the geodesic from `a` (t = 0) to `b` (t = 1).
/// Returns `a` exactly when the endpoints coincide.
pub fn geodesic_point(a: &HPoint, b: &HPoint, t: f64) -> Result<HPoint> {
    if a == b {
        return Ok(a.clone());
    }
    let v = log_map(a, b)?;
    exp_map(a, &v.scaled(t))
}

/// Side length opposite the angle in the hyperbolic law of cosines:
/// D with cosh D = cosh l1 cosh l2 - sinh l1 sinh l2 cos(theta).
///
/// Evaluated as cosh D - 1 = 2 sinh^2((l1-l2)/2) + 2 sinh l1 sinh l2
/// sin^2(theta/2), a sum of nonnegative terms.
pub fn d_theta(theta: f64, l1: f64, l2: f64) -> Result<f64> {
    if !(0.0..=std::f64::consts::PI + 1e-12).contains(&theta) || theta < -1e-12 {
        return Err(Error::OutOfDomain {
            name: "theta",
            value: theta,
            reason: "must lie in [0, pi]",
        });
    }
    for (name, l) in [("l1", l1), ("l2", l2)] {
        if !(0.0..=600.0).contains(&l) {
            return Err(Error::OutOfDomain {
                name,
                value: l,
                reason: "must lie in [0, 600] to stay inside f64 range",
            });
        }
    }
    let theta = theta.clamp(0.0, std::f64::consts::PI);
    let half_diff = 0.5 * (l1 - l2);
    let sh = half_diff.sinh();
    let sin_half = (0.5 * theta).sin();
    let q = 2.0 * sh * sh + 2.0 * l1.sinh() * l2.sinh() * sin_half * sin_half;
    Ok(acosh_1p(q))
}

/// Orthonormal basis of the tangent space at `x`, by Gram-Schmidt on the
/// coordinate directions.
pub fn tangent_basis(x: &HPoint) -> Vec<TangentVec> {
    let n = x.coords.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n - 1);
    for k in 0..n {
        if basis.len() == n - 1 {
            break;
        }
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        let ip = mink_inner(x.coords(), &v);
        for (c, b) in v.iter_mut().zip(x.coords()) {
            *c += ip * b;
        }
        for prev in &basis {
            let p = mink_inner(prev, &v);
            for (c, b) in v.iter_mut().zip(prev) {
                *c -= p * b;
            }
        }
        let norm = norm_sq_raw(&v).max(0.0).sqrt();
        if norm > 1e-8 {
            for c in v.iter_mut() {
                *c /= norm;
            }
            basis.push(v);
        }
    }
    basis
        .into_iter()
        .map(|v| TangentVec {
            base: x.clone(),
            components: v,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;

    fn pt(coords: &[f64]) -> HPoint {
        HPoint::new(coords.to_vec()).unwrap()
    }

    #[test]
    fn mink_inner_of_a_sheet_point_with_itself_is_minus_one() {
        let x = pt(&[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        assert_relative_eq!(mink_inner(x.coords(), x.coords()), -1.0, epsilon = TOL);
    }

    #[test]
    fn mink_inner_against_the_basepoint() {
        // -<(cosh 1, sinh 1), (1, 0)> = cosh 1
        let x = [1.0f64.cosh(), 1.0f64.sinh()];
        let o = [1.0, 0.0];
        assert_relative_eq!(
            mink_inner(&x, &o),
            -1.5430806348152437,
            epsilon = 1e-14
        );
    }

    #[test]
    fn mink_inner_is_symmetric() {
        let u = [1.3, 0.2, -0.7];
        let v = [2.0, -0.4, 0.5];
        assert_eq!(mink_inner(&u, &v), mink_inner(&v, &u));
    }

    #[test]
    fn distance_to_self_is_zero_and_symmetric() {
        let x = pt(&[2.0f64.cosh(), 2.0f64.sinh(), 0.0]);
        let y = pt(&[1.5f64.cosh(), 0.0, 1.5f64.sinh()]);
        assert_eq!(distance(&x, &x), 0.0);
        assert_eq!(distance(&x, &y), distance(&y, &x));
    }

    #[test]
    fn distance_along_a_coordinate_geodesic() {
        let o = HPoint::basepoint(1);
        let x = pt(&[2.0f64.cosh(), 2.0f64.sinh()]);
        assert_relative_eq!(distance(&o, &x), 2.0, epsilon = 1e-14);
    }

    #[test]
    fn distance_is_accurate_for_nearly_antipodal_far_points() {
        // Two points at radius 10 on opposite sides of the origin in H^2:
        // the exact distance is 20, and the naive arccosh form loses ~1e-8.
        let a = pt(&[10.0f64.cosh(), 10.0f64.sinh(), 0.0]);
        let b = pt(&[10.0f64.cosh(), -10.0f64.sinh(), 0.0]);
        assert_relative_eq!(distance(&a, &b), 20.0, epsilon = 1e-13);
    }

    #[test]
    fn distance_resolves_tiny_separations_at_radius() {
        // Points 1e-7 apart along a geodesic through radius 5; the stable
        // form keeps relative accuracy near the limit set by rounding of
        // the input coordinates, where arccosh(1 + q) alone would lose
        // every digit to cancellation in q.
        let a = pt(&[5.0f64.cosh(), 5.0f64.sinh(), 0.0]);
        let s = 5.0f64 + 1e-7;
        let b = pt(&[s.cosh(), s.sinh(), 0.0]);
        assert_relative_eq!(distance(&a, &b), 1e-7, max_relative = 1e-8);
    }

    #[test]
    fn new_rejects_far_off_sheet_points_and_renormalizes_small_drift() {
        assert!(HPoint::new(vec![1.0, 0.5]).is_err());
        let drifted = vec![1.0f64.cosh() + 1e-8, 1.0f64.sinh(), 0.0];
        let p = HPoint::new(drifted).unwrap();
        assert_relative_eq!(mink_inner(p.coords(), p.coords()), -1.0, epsilon = 1e-15);
        assert!(HPoint::new(vec![-1.0, 0.0]).is_err());
    }

    #[test]
    fn exp_map_of_zero_is_the_base() {
        let x = pt(&[1.2f64.cosh(), 1.2f64.sinh(), 0.0]);
        let v = TangentVec::new(x.clone(), vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(exp_map(&x, &v).unwrap(), x);
    }

    #[test]
    fn exp_map_moves_the_basepoint_along_a_coordinate_axis() {
        let o = HPoint::basepoint(2);
        let v = TangentVec::new(o.clone(), vec![0.0, 3.0, 0.0]).unwrap();
        let y = exp_map(&o, &v).unwrap();
        assert_relative_eq!(y.coords()[0], 3.0f64.cosh(), epsilon = 1e-12);
        assert_relative_eq!(y.coords()[1], 3.0f64.sinh(), epsilon = 1e-12);
        assert_relative_eq!(distance(&o, &y), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn log_map_inverts_exp_map() {
        let x = pt(&[0.7f64.cosh(), 0.0, 0.7f64.sinh()]);
        let radial = [0.7f64.sinh(), 0.0, 0.7f64.cosh()];
        let v = TangentVec::new(
            x.clone(),
            vec![-0.4 * radial[0], 0.9, -0.4 * radial[2]],
        )
        .unwrap();
        let y = exp_map(&x, &v).unwrap();
        let w = log_map(&x, &y).unwrap();
        for (a, b) in v.components().iter().zip(w.components()) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
        assert_relative_eq!(w.norm(), distance(&x, &y), epsilon = 1e-12);
    }

    #[test]
    fn log_map_of_the_base_itself_is_zero() {
        let x = pt(&[0.3f64.cosh(), 0.3f64.sinh(), 0.0]);
        let v = log_map(&x, &x).unwrap();
        assert_eq!(v.components(), &[0.0, 0.0, 0.0]);
        assert_eq!(v.norm(), 0.0);
    }

    #[test]
    fn angle_between_orthogonal_axes_is_right() {
        let o = HPoint::basepoint(2);
        let a = pt(&[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let b = pt(&[1.0f64.cosh(), 0.0, 1.0f64.sinh()]);
        assert_relative_eq!(
            angle(&o, &a, &b).unwrap(),
            std::f64::consts::FRAC_PI_2,
            epsilon = 1e-12
        );
    }

    #[test]
    fn angle_of_coincident_leg_errors() {
        let o = HPoint::basepoint(2);
        let a = pt(&[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        assert!(matches!(angle(&o, &o, &a), Err(Error::DegenerateAngle)));
    }

    #[test]
    fn angle_of_opposite_rays_is_pi() {
        let o = HPoint::basepoint(2);
        let a = pt(&[1.0f64.cosh(), 1.0f64.sinh(), 0.0]);
        let b = pt(&[2.0f64.cosh(), -(2.0f64.sinh()), 0.0]);
        assert_relative_eq!(
            angle(&o, &a, &b).unwrap(),
            std::f64::consts::PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn geodesic_point_hits_endpoints_and_midpoint() {
        let a = pt(&[0.5f64.cosh(), 0.5f64.sinh(), 0.0]);
        let b = pt(&[1.5f64.cosh(), 0.0, 1.5f64.sinh()]);
        assert_eq!(geodesic_point(&a, &b, 0.0).unwrap(), a);
        let end = geodesic_point(&a, &b, 1.0).unwrap();
        assert!(distance(&end, &b) < 1e-12);
        let mid = geodesic_point(&a, &b, 0.5).unwrap();
        let d = distance(&a, &b);
        assert_relative_eq!(distance(&a, &mid), 0.5 * d, epsilon = 1e-12);
        assert_relative_eq!(distance(&mid, &b), 0.5 * d, epsilon = 1e-12);
    }

    #[test]
    fn geodesic_point_of_coincident_endpoints_is_exact() {
        let a = pt(&[(1.0f64 + 0.16 + 0.3481).sqrt(), 0.4, 0.59]);
        let m = geodesic_point(&a, &a, 0.37).unwrap();
        assert_eq!(m, a);
    }

    #[test]
    fn d_theta_degenerate_cases() {
        // Zero opposite length collapses to the other side.
        assert_relative_eq!(d_theta(1.1, 0.0, 2.3).unwrap(), 2.3, epsilon = 1e-14);
        // theta = 0 folds the legs onto each other.
        assert_relative_eq!(d_theta(0.0, 3.0, 1.2).unwrap(), 1.8, epsilon = 1e-13);
        // theta = pi straightens them into one geodesic.
        assert_relative_eq!(
            d_theta(std::f64::consts::PI, 3.0, 1.2).unwrap(),
            4.2,
            epsilon = 1e-13
        );
    }

    #[test]
    fn d_theta_right_angle_unit_legs() {
        // arccosh(cosh^2 1)
        assert_relative_eq!(
            d_theta(std::f64::consts::FRAC_PI_2, 1.0, 1.0).unwrap(),
            1.5133740065965040,
            epsilon = 1e-14
        );
    }

    #[test]
    fn d_theta_rejects_domain_violations() {
        assert!(d_theta(-0.1, 1.0, 1.0).is_err());
        assert!(d_theta(4.0, 1.0, 1.0).is_err());
        assert!(d_theta(1.0, -1.0, 1.0).is_err());
        assert!(d_theta(1.0, 1.0, 1e9).is_err());
    }

    #[test]
    fn d_theta_matches_realized_triangles() {
        // Build the triangle with the stated angle at the basepoint of H^2
        // and compare the realized side with the formula.
        let o = HPoint::basepoint(2);
        for &(theta, l1, l2) in &[
            (0.3, 0.5, 2.0),
            (std::f64::consts::FRAC_PI_2, 1.0, 1.0),
            (2.9, 4.0, 3.5),
            (1.0, 10.0, 9.8),
        ] {
            let u = TangentVec::new(o.clone(), vec![0.0, l1, 0.0]).unwrap();
            let w = TangentVec::new(
                o.clone(),
                vec![0.0, l2 * theta.cos(), l2 * theta.sin()],
            )
            .unwrap();
            let x = exp_map(&o, &u).unwrap();
            let y = exp_map(&o, &w).unwrap();
            assert_relative_eq!(
                distance(&x, &y),
                d_theta(theta, l1, l2).unwrap(),
                epsilon = 1e-11
            );
        }
    }

    #[test]
    fn tangent_basis_is_orthonormal() {
        let x = pt(&[1.7f64.cosh(), 1.7f64.sinh() * 0.6, 1.7f64.sinh() * 0.8]);
        let basis = tangent_basis(&x);
        assert_eq!(basis.len(), 2);
        for (i, u) in basis.iter().enumerate() {
            assert_relative_eq!(u.norm(), 1.0, epsilon = 1e-10);
            assert!(mink_inner(x.coords(), u.components()).abs() < 1e-10);
            for w in basis.iter().skip(i + 1) {
                assert!(mink_inner(u.components(), w.components()).abs() < 1e-10);
            }
        }
    }
}
