//! Greedy epsilon-nets, separation binning, and the packing bound tying
//! them together.
//!
//! A greedy pass over any finite set yields centers that are pairwise at
//! least epsilon apart yet epsilon-cover the set. First-fit binning then
//! splits the centers into groups with pairwise separation at least R. The
//! number of groups is controlled by a packing count: centers blocking a
//! bin all lie in a ball of radius R, are epsilon-separated, and disjoint
//! balls of radius epsilon/2 around them fit inside the ball of radius
//! R + epsilon/2, so their number is at most
//!
//!   N = vol_H(B(R + eps/2)) / vol_E(B(eps/2)),
//!
//! where the denominator may be taken Euclidean because a hyperbolic ball
//! is no smaller than the Euclidean ball of the same radius.

use crate::error::{Error, Result};
use crate::geometry::{distance, HPoint};

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::OutOfDomain {
            name,
            value: v,
            reason: "must be positive and finite",
        });
    }
    Ok(())
}

/// Indices of a greedy epsilon-net through `points` in input order: a point
/// joins the net iff it is at least epsilon away from every earlier center.
pub fn greedy_net(points: &[HPoint], epsilon: f64) -> Result<Vec<usize>> {
    check_positive("epsilon", epsilon)?;
    if points.is_empty() {
        return Err(Error::TooFewPoints { got: 0 });
    }
    let mut centers: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if centers
            .iter()
            .all(|&c| distance(p, &points[c]) >= epsilon)
        {
            centers.push(i);
        }
    }
    Ok(centers)
}

/// First-fit binning: each center lands in the lowest-numbered bin none of
/// whose members is strictly closer than `r_separation`. Returns the bin of
/// each center and the number of bins used.
pub fn assign_bins(centers: &[HPoint], r_separation: f64) -> Result<(Vec<usize>, usize)> {
    check_positive("r_separation", r_separation)?;
    let mut bins: Vec<Vec<usize>> = Vec::new();
    let mut bin_of = Vec::with_capacity(centers.len());
    for (i, c) in centers.iter().enumerate() {
        let slot = bins.iter().position(|members| {
            members
                .iter()
                .all(|&j| distance(c, &centers[j]) >= r_separation)
        });
        let b = match slot {
            Some(b) => b,
            None => {
                bins.push(Vec::new());
                bins.len() - 1
            }
        };
        bins[b].push(i);
        bin_of.push(b);
    }
    Ok((bin_of, bins.len()))
}

fn gamma_of_half_integer(twice: usize) -> f64 {
    // Gamma(twice / 2) for twice >= 1, by the recurrence from Gamma(1/2)
    // or Gamma(1).
    let mut z = if twice % 2 == 0 { 1.0 } else { 0.5 };
    let mut g = if twice % 2 == 0 {
        1.0
    } else {
        std::f64::consts::PI.sqrt()
    };
    while 2.0 * z < twice as f64 {
        g *= z;
        z += 1.0;
    }
    g
}

fn unit_sphere_area(dim: usize) -> f64 {
    // Surface area of the unit sphere bounding a ball in dimension `dim`.
    2.0 * std::f64::consts::PI.powf(dim as f64 / 2.0) / gamma_of_half_integer(dim)
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, lm + (m - lm), fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, rel_tol * whole.abs().max(1e-300), 50)
}

/// Volume of the ball of radius rho in the hyperbolic space of the given
/// dimension. Closed forms in dimensions 2 and 3; numerical integration of
/// the sinh power otherwise.
pub fn hyperbolic_ball_volume(dim: usize, rho: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::OutOfDomain {
            name: "dim",
            value: 0.0,
            reason: "dimension must be at least 1",
        });
    }
    if !(rho.is_finite() && rho >= 0.0 && rho <= 600.0) {
        return Err(Error::OutOfDomain {
            name: "rho",
            value: rho,
            reason: "must lie in [0, 600]",
        });
    }
    let v = match dim {
        2 => 2.0 * std::f64::consts::PI * (rho.cosh() - 1.0),
        3 => std::f64::consts::PI * ((2.0 * rho).sinh() - 2.0 * rho),
        _ => {
            let k = dim as i32 - 1;
            unit_sphere_area(dim)
                * adaptive_simpson(&|t: f64| t.sinh().powi(k), 0.0, rho, 1e-10)
        }
    };
    Ok(v)
}

/// Volume of the Euclidean ball of radius rho in the given dimension.
pub fn euclidean_ball_volume(dim: usize, rho: f64) -> Result<f64> {
    if dim == 0 {
        return Err(Error::OutOfDomain {
            name: "dim",
            value: 0.0,
            reason: "dimension must be at least 1",
        });
    }
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(Error::OutOfDomain {
            name: "rho",
            value: rho,
            reason: "must be nonnegative and finite",
        });
    }
    Ok(std::f64::consts::PI.powf(dim as f64 / 2.0) * rho.powf(dim as f64)
        / gamma_of_half_integer(dim + 2))
}

/// Packing bound on the number of epsilon-separated points inside a ball
/// of radius R, rounded up. Kept as a float: near-unit contractions push R
/// large enough that the count overflows any fixed-width integer while
/// remaining perfectly representable as a magnitude.
pub fn volume_bound_n(dim: usize, r_separation: f64, epsilon: f64) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    check_positive("r_separation", r_separation)?;
    let big = hyperbolic_ball_volume(dim, r_separation + 0.5 * epsilon)?;
    let small = euclidean_ball_volume(dim, 0.5 * epsilon)?;
    Ok((big / small).ceil())
}

/// An epsilon-net over a sample with its separation binning and the packing
/// bound that caps the number of bins.
#[derive(Debug, Clone)]
pub struct Net {
    pub centers: Vec<HPoint>,
    /// Indices of the centers inside the original sample.
    pub center_indices: Vec<usize>,
    pub epsilon: f64,
    pub r_separation: f64,
    /// Bin of each center, parallel to `centers`.
    pub bin_of: Vec<usize>,
    pub num_bins: usize,
    pub theoretical_n: f64,
}

impl Net {
    /// Index (into `centers`) of the center nearest to `p`.
    pub fn nearest_center(&self, p: &HPoint) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.centers.iter().enumerate() {
            let d = distance(p, c);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Center indices belonging to the given bin.
    pub fn bin_members(&self, bin: usize) -> Vec<usize> {
        self.bin_of
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b == bin)
            .map(|(i, _)| i)
            .collect()
    }
}

pub fn build_net(points: &[HPoint], epsilon: f64, r_separation: f64) -> Result<Net> {
    let center_indices = greedy_net(points, epsilon)?;
    let centers: Vec<HPoint> = center_indices.iter().map(|&i| points[i].clone()).collect();
    let (bin_of, num_bins) = assign_bins(&centers, r_separation)?;
    let theoretical_n = volume_bound_n(points[0].dim(), r_separation, epsilon)?;
    Ok(Net {
        centers,
        center_indices,
        epsilon,
        r_separation,
        bin_of,
        num_bins,
        theoretical_n,
    })
}
