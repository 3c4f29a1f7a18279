//! Geodesic interpolation and averaging of finitely sampled maps.
//!
//! Two maps tabulated on the same domain interpolate pointwise along
//! geodesics, and the interpolant's Lipschitz constant on any subset never
//! exceeds the larger of the two inputs' (convexity of distance along
//! geodesic pairs). Averaging n maps left-folds interpolation with weights
//! 1/k, which lands every point on the barycenter-along-the-fold of its n
//! images.

use crate::error::{Error, Result};
use crate::geometry::{distance, geodesic_point, HPoint};
use crate::solver::{lipschitz_of_pairs, LipschitzReport};

/// Tolerance for deciding that two tabulated maps share a domain point.
pub const DOMAIN_MATCH_TOL: f64 = 1e-12;

/// A map known only through finitely many domain points and their images.
#[derive(Debug, Clone)]
pub struct MapTable {
    pub domain: Vec<HPoint>,
    pub images: Vec<HPoint>,
    pub label: String,
}

impl MapTable {
    pub fn new(domain: Vec<HPoint>, images: Vec<HPoint>, label: impl Into<String>) -> Result<Self> {
        if domain.is_empty() {
            return Err(Error::EmptyMap);
        }
        if domain.len() != images.len() {
            return Err(Error::DimensionMismatch {
                expected: domain.len(),
                got: images.len(),
            });
        }
        Ok(MapTable {
            domain,
            images,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.domain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.domain.is_empty()
    }
}

fn check_same_domain(f: &MapTable, g: &MapTable) -> Result<()> {
    if f.len() != g.len() {
        return Err(Error::DomainMismatch {
            reason: format!("tables have {} and {} points", f.len(), g.len()),
        });
    }
    for (i, (a, b)) in f.domain.iter().zip(&g.domain).enumerate() {
        if a.dim() != b.dim() {
            return Err(Error::DomainMismatch {
                reason: format!("point {i} lives in different dimensions"),
            });
        }
        let d = distance(a, b);
        if d > DOMAIN_MATCH_TOL {
            return Err(Error::DomainMismatch {
                reason: format!("point {i} differs between tables by distance {d:.3e}"),
            });
        }
    }
    Ok(())
}

/// Pointwise geodesic interpolation (1 - t) f + t g: every image moves the
/// fraction t of the way along the geodesic from f's image toward g's.
/// Requires the two tables to list the same domain in the same order.
pub fn interpolate_maps(f: &MapTable, g: &MapTable, t: f64) -> Result<MapTable> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::OutOfDomain {
            name: "t",
            value: t,
            reason: "interpolation weight must lie in [0, 1]",
        });
    }
    check_same_domain(f, g)?;
    let images = f
        .images
        .iter()
        .zip(&g.images)
        .map(|(a, b)| geodesic_point(a, b, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(MapTable {
        domain: f.domain.clone(),
        images,
        label: format!("interp({}, {}; {t})", f.label, g.label),
    })
}

/// Averages tables by left-folding interpolation: the k-th map enters with
/// weight 1/k, so after n steps each input has contributed weight 1/n along
/// the fold. The result depends on the input order in general; its
/// Lipschitz constant on any subset is bounded by the worst input's
/// regardless of order.
pub fn average_maps(tables: &[MapTable]) -> Result<MapTable> {
    let mut iter = tables.iter();
    let first = iter.next().ok_or(Error::NoMaps)?;
    let mut acc = first.clone();
    for (k, table) in iter.enumerate() {
        let t = 1.0 / (k + 2) as f64;
        acc = interpolate_maps(&acc, table, t)?;
    }
    acc.label = format!("average[{}]", tables.len());
    Ok(acc)
}

/// Empirical Lipschitz constant of the table restricted to the domain
/// points listed in `subset`.
pub fn lipschitz_on_subset(table: &MapTable, subset: &[usize]) -> Result<LipschitzReport> {
    for &i in subset {
        if i >= table.len() {
            return Err(Error::OutOfDomain {
                name: "subset index",
                value: i as f64,
                reason: "exceeds the table",
            });
        }
    }
    let sources: Vec<HPoint> = subset.iter().map(|&i| table.domain[i].clone()).collect();
    let images: Vec<HPoint> = subset.iter().map(|&i| table.images[i].clone()).collect();
    lipschitz_of_pairs(&sources, &images)
}
