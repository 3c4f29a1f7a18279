//! Seeded random generation of points, contractions, and structured
//! instances.
//!
//! Uniform sampling in a ball draws a direction from the sphere and a
//! radius by rejection against the sinh-power area density, so the samples
//! are uniform with respect to the volume measure, not the chart.

use crate::bounds::Homothety;
use crate::error::{Error, Result};
use crate::geometry::{distance, exp_map, tangent_basis, HPoint, TangentVec};
use crate::solver::PartialMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// The crate-wide deterministic generator: every seeded run of the same
/// code sees the same stream.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniformly random unit tangent vector at `base`.
pub fn random_unit_tangent(rng: &mut impl Rng, base: &HPoint) -> TangentVec {
    let basis = tangent_basis(base);
    loop {
        let coeffs: Vec<f64> = (0..basis.len())
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-12 {
            let mut components = vec![0.0; base.dim() + 1];
            for (c, b) in coeffs.iter().zip(&basis) {
                for (out, v) in components.iter_mut().zip(b.components()) {
                    *out += c / norm * v;
                }
            }
            return TangentVec::from_raw_unchecked(base.clone(), components);
        }
    }
}

/// `n` points drawn uniformly (volume measure) from the ball of the given
/// radius about `center`.
pub fn sample_ball(
    rng: &mut impl Rng,
    center: &HPoint,
    radius: f64,
    n: usize,
) -> Result<Vec<HPoint>> {
    if !(radius.is_finite() && radius > 0.0 && radius <= 50.0) {
        return Err(Error::OutOfDomain {
            name: "radius",
            value: radius,
            reason: "must lie in (0, 50]",
        });
    }
    let m = center.dim() as i32;
    let envelope = radius.sinh();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = loop {
            let u: f64 = rng.gen::<f64>() * radius;
            let gate: f64 = rng.gen();
            if gate <= (u.sinh() / envelope).powi(m - 1) {
                break u;
            }
        };
        let dir = random_unit_tangent(rng, center);
        out.push(exp_map(center, &dir.scaled(t))?);
    }
    Ok(out)
}

/// A random map on `sources` with Lipschitz constant at most `c`: a
/// homothety at factor 0.9 c about `center`, plus tangent perturbations
/// small enough to keep every pairwise ratio under c. Perturbations halve
/// until the ratios validate; the unperturbed homothety is the (always
/// valid) last resort.
pub fn random_contraction(
    rng: &mut impl Rng,
    sources: &[HPoint],
    c: f64,
    center: &HPoint,
) -> Result<PartialMap> {
    if !(c.is_finite() && c > 0.0 && c <= 1.0) {
        return Err(Error::OutOfDomain {
            name: "c",
            value: c,
            reason: "must lie in (0, 1]",
        });
    }
    let base_factor = 0.9 * c;
    let homothety = Homothety::new(base_factor, center.clone())?;
    let base_images: Vec<HPoint> = sources
        .iter()
        .map(|s| homothety.apply(s))
        .collect::<Result<Vec<_>>>()?;

    let mut min_sep = f64::INFINITY;
    for i in 0..sources.len() {
        for j in (i + 1)..sources.len() {
            min_sep = min_sep.min(distance(&sources[i], &sources[j]));
        }
    }
    // A perturbation of size delta moves any image pair's distance by at
    // most 2 delta, so delta below (c - 0.9c) min_sep / 2 keeps every
    // ratio valid; start slightly under that and shrink on failure.
    let mut delta = if min_sep.is_finite() {
        0.04 * c * min_sep
    } else {
        0.0
    };
    for _ in 0..8 {
        let images: Vec<HPoint> = base_images
            .iter()
            .map(|img| {
                let dir = random_unit_tangent(rng, img);
                let t: f64 = rng.gen::<f64>() * delta;
                exp_map(img, &dir.scaled(t))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Ok(map) = PartialMap::new(sources.to_vec(), images, c) {
            return Ok(map);
        }
        delta *= 0.5;
    }
    PartialMap::new(sources.to_vec(), base_images, c)
}

/// Circumradius of the equilateral triangle with the given side length,
/// from the hinge identity at the center: sinh^2 rho = (2/3)(cosh s - 1).
pub fn triangle_circumradius(side: f64) -> Result<f64> {
    if !(side.is_finite() && side > 0.0 && side <= 600.0) {
        return Err(Error::OutOfDomain {
            name: "side",
            value: side,
            reason: "must lie in (0, 600]",
        });
    }
    Ok(((2.0 / 3.0) * (side.cosh() - 1.0)).sqrt().asinh())
}

/// Vertices of the equilateral triangle with the given circumradius,
/// centered at the basepoint in the first two spatial directions, rotated
/// by `rotation`.
pub fn triangle_vertices(dim: usize, circumradius: f64, rotation: f64) -> Result<Vec<HPoint>> {
    if dim < 2 {
        return Err(Error::OutOfDomain {
            name: "dim",
            value: dim as f64,
            reason: "triangles need at least two spatial dimensions",
        });
    }
    let o = HPoint::basepoint(dim);
    (0..3)
        .map(|k| {
            let a = rotation + 2.0 * std::f64::consts::PI * k as f64 / 3.0;
            let mut v = vec![0.0; dim + 1];
            v[1] = circumradius * a.cos();
            v[2] = circumradius * a.sin();
            let tv = TangentVec::new(o.clone(), v)?;
            exp_map(&o, &tv)
        })
        .collect()
}

/// The map sending the equilateral triangle of side `side` vertexwise onto
/// the one of side `image_side`, rotated by `rotation`. All pairwise ratios
/// equal image_side / side, which is the declared constant.
pub fn equilateral_triangle_map(
    dim: usize,
    side: f64,
    image_side: f64,
    rotation: f64,
) -> Result<PartialMap> {
    let rho = triangle_circumradius(side)?;
    let rho_img = triangle_circumradius(image_side)?;
    let sources = triangle_vertices(dim, rho, 0.0)?;
    let targets = triangle_vertices(dim, rho_img, rotation)?;
    PartialMap::new(sources, targets, image_side / side)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::lipschitz_constant;
    use approx::assert_relative_eq;

    fn o() -> HPoint {
        HPoint::basepoint(2)
    }

    #[test]
    fn ball_samples_stay_inside_and_match_the_radial_law() {
        let mut rng = seeded_rng(7);
        let rho = 2.0;
        let pts = sample_ball(&mut rng, &o(), rho, 20_000).unwrap();
        let mut mean = 0.0;
        for p in &pts {
            let d = distance(&o(), p);
            assert!(d <= rho + 1e-9);
            mean += d;
        }
        mean /= pts.len() as f64;
        // E[d] = (rho cosh rho - sinh rho) / (cosh rho - 1) for the sinh
        // density in dimension 2.
        let expected = (rho * rho.cosh() - rho.sinh()) / (rho.cosh() - 1.0);
        assert_relative_eq!(mean, expected, epsilon = 0.02);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let a = sample_ball(&mut seeded_rng(11), &o(), 1.5, 50).unwrap();
        let b = sample_ball(&mut seeded_rng(11), &o(), 1.5, 50).unwrap();
        let c = sample_ball(&mut seeded_rng(12), &o(), 1.5, 50).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().zip(&c).any(|(x, y)| x != y));
    }

    #[test]
    fn random_unit_tangents_have_unit_norm_and_spread() {
        let mut rng = seeded_rng(3);
        let base = sample_ball(&mut rng, &o(), 1.0, 1).unwrap().remove(0);
        let mut sum = vec![0.0; 3];
        for _ in 0..500 {
            let v = random_unit_tangent(&mut rng, &base);
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-10);
            for (s, c) in sum.iter_mut().zip(v.components()) {
                *s += c;
            }
        }
        let drift = sum.iter().map(|s| s * s).sum::<f64>().sqrt() / 500.0;
        assert!(drift < 0.1, "directions are biased: drift {drift}");
    }

    #[test]
    fn random_contractions_respect_the_declared_constant() {
        let mut rng = seeded_rng(21);
        let sources = sample_ball(&mut rng, &o(), 2.0, 12).unwrap();
        let map = random_contraction(&mut rng, &sources, 0.8, &o()).unwrap();
        let emp = lipschitz_constant(&map).unwrap().constant;
        assert!(emp <= 0.8 + 1e-9);
        assert!(emp > 0.3);
        // The perturbation actually moved something off the pure homothety.
        let h = Homothety::new(0.72, o()).unwrap();
        let moved = map
            .sources()
            .iter()
            .zip(map.targets())
            .any(|(s, t)| distance(&h.apply(s).unwrap(), t) > 1e-6);
        assert!(moved);
    }

    #[test]
    fn triangle_maps_scale_all_sides_by_the_same_ratio() {
        let map = equilateral_triangle_map(2, 2.0, 1.8, 0.7).unwrap();
        for i in 0..3 {
            let j = (i + 1) % 3;
            let ds = distance(&map.sources()[i], &map.sources()[j]);
            let dt = distance(&map.targets()[i], &map.targets()[j]);
            assert_relative_eq!(ds, 2.0, epsilon = 1e-10);
            assert_relative_eq!(dt / ds, 0.9, epsilon = 1e-10);
        }
        assert_relative_eq!(
            triangle_circumradius(2.0).unwrap(),
            1.112735304613054,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            triangle_circumradius(1.8).unwrap(),
            1.006540819053133,
            epsilon = 1e-12
        );
    }

    #[test]
    fn domain_validation() {
        let mut rng = seeded_rng(1);
        assert!(sample_ball(&mut rng, &o(), 0.0, 3).is_err());
        assert!(random_contraction(&mut rng, &[o()], 1.3, &o()).is_err());
        assert!(triangle_circumradius(-1.0).is_err());
        assert!(triangle_vertices(1, 1.0, 0.0).is_err());
    }
}
