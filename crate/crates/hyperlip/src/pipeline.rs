//! End-to-end certified extension: parameter selection, chart patches,
//! two-center compatibility, binned global extensions, and final averaging.
//!
//! The scheme turns a C-Lipschitz map on finitely many sources into a map
//! on a whole sampled region with constant strictly below 1: cover the
//! region by an epsilon-net, patch a sqrt(c_star)-Lipschitz local extension
//! around every center, split centers into R-separated bins so patches in
//! one bin never conflict, extend each bin's union map over the full sample
//! one optimal step at a time, and average the bins. Every stage emits a
//! pairwise certificate rather than trusting the theory it implements.

use crate::averaging::{average_maps, MapTable};
use crate::bounds::{compute_c_star, BoundsReport, DELTA};
use crate::error::{Error, Result};
use crate::geometry::{distance, exp_map, log_map, mink_inner, tangent_basis, HPoint, TangentVec};
use crate::minimax::{minimize, EuclideanSpace, MinimaxParams, MinimaxProblem};
use crate::net::{build_net, Net};
use crate::sampling::{
    equilateral_triangle_map, sample_ball, seeded_rng, random_contraction,
};
use crate::solver::{
    lipschitz_of_pairs, obtuse_pair, sequential_extension, solve_one_point, PartialMap,
    SolverOptions, DUPLICATE_SOURCE_TOL,
};
use rayon::prelude::*;

/// Slack accepted by every pipeline certificate.
pub const CERT_TOL: f64 = 1e-6;

/// Everything the pipeline needs to know beyond the map itself.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub c: f64,
    pub c_star: f64,
    pub sqrt_c_star: f64,
    /// Chart radius: the largest scale at which tangent charts distort
    /// distances by at most c_star^(-1/4) each way.
    pub epsilon0: f64,
    /// Net sparsity radius.
    pub epsilon: f64,
    /// Within-bin separation radius.
    pub r_separation: f64,
    pub delta: f64,
    pub bounds: BoundsReport,
    pub solver: SolverOptions,
    pub seed: u64,
    /// Points drawn per epsilon-ball when a caller asks this config to
    /// sample around a center.
    pub samples_per_ball: usize,
}

impl PipelineConfig {
    /// Left-hand sides of the two admissibility constraints; both must be
    /// at most 1 for the patch-overlap arithmetic to close.
    pub fn buffer_values(&self) -> (f64, f64) {
        let a = (self.c_star + self.epsilon / self.epsilon0)
            / (1.0 - self.epsilon / self.epsilon0);
        let b = ((self.c_star + self.delta / self.r_separation)
            + 2.0 * self.epsilon / self.r_separation)
            / (1.0 - 2.0 * self.epsilon / self.r_separation);
        (a, b)
    }
}

/// Derives all pipeline scales from the contraction constant alone.
///
/// epsilon0 is the largest radius with (sinh e / e)^2 <= c_star^(-1/2), by
/// bisection; epsilon then sits at the larger of the two admissible
/// closed-form caps, and R at the smallest separation making the two-center
/// arithmetic close, each nudged by a relative 1e-9 so the constraints hold
/// strictly.
pub fn choose_parameters(c: f64) -> Result<PipelineConfig> {
    let bounds = compute_c_star(c)?;
    let cs = bounds.c_star;
    let target = cs.powf(-0.25);
    let stretch = |e: f64| if e < 1e-8 { 1.0 } else { e.sinh() / e };
    let mut lo = 1e-8;
    let mut hi = 5.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if stretch(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let epsilon0 = lo;
    let epsilon = (epsilon0 / 4.0).min(0.5 * epsilon0 * (1.0 - cs) * (1.0 - 1e-9));
    let r_separation =
        (((DELTA + 4.0 * epsilon) / (1.0 - cs)) * (1.0 + 1e-9)).max(1.0 + 1e-9);
    let cfg = PipelineConfig {
        c,
        c_star: cs,
        sqrt_c_star: cs.sqrt(),
        epsilon0,
        epsilon,
        r_separation,
        delta: DELTA,
        bounds,
        solver: SolverOptions::default(),
        seed: 0,
        samples_per_ball: 25,
    };
    let (a, b) = cfg.buffer_values();
    debug_assert!(a <= 1.0 && b <= 1.0, "parameter selection violated its own constraints");
    Ok(cfg)
}

/// A local extension around one center, with its certificate.
#[derive(Debug, Clone)]
pub struct PatchReport {
    /// Domain: the center, then sources within epsilon0, then the ball
    /// sample; images aligned.
    pub table: MapTable,
    /// How many existing sources fell inside the chart ball (they occupy
    /// table indices 1..=nearby_count).
    pub nearby_count: usize,
    pub eta: HPoint,
    pub c_xi: f64,
    /// Euclidean Lipschitz constant of the chart anchors.
    pub chart_constant: f64,
    /// Empirical constant of the finished patch over all table pairs.
    pub certified_constant: f64,
    /// sqrt(c_star), what the patch must stay under.
    pub bound: f64,
    pub pass: bool,
}

fn chart_coords(basis: &[TangentVec], base: &HPoint, p: &HPoint) -> Result<Vec<f64>> {
    let v = log_map(base, p)?;
    Ok(basis
        .iter()
        .map(|b| mink_inner(v.components(), b.components()))
        .collect())
}

fn chart_push(basis: &[TangentVec], base: &HPoint, coords: &[f64]) -> Result<HPoint> {
    let mut components = vec![0.0; base.dim() + 1];
    for (w, b) in coords.iter().zip(basis) {
        for (out, c) in components.iter_mut().zip(b.components()) {
            *out += w * c;
        }
    }
    exp_map(base, &TangentVec::from_raw_unchecked(base.clone(), components))
}

fn euclid_dist(u: &[f64], v: &[f64]) -> f64 {
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// Extends the map around `xi` to `ball_sample` (all within epsilon0 of
/// xi): pull the center, the nearby sources, and their images into
/// orthonormal tangent charts at xi and at the optimal image eta, extend
/// one point at a time in the flat charts where one-point extension is
/// loss-free, and push the results back. The chart distortion budget turns
/// the c_star-Lipschitz data into a sqrt(c_star)-Lipschitz patch, which the
/// report certifies pairwise.
pub fn local_patch(
    map: &PartialMap,
    xi: &HPoint,
    cfg: &PipelineConfig,
    ball_sample: &[HPoint],
) -> Result<PatchReport> {
    for (i, p) in ball_sample.iter().enumerate() {
        let d = distance(xi, p);
        if d > cfg.epsilon0 {
            return Err(Error::OutsideBall {
                index: i,
                dist: d,
                radius: cfg.epsilon0,
            });
        }
    }
    let sol = solve_one_point(map, xi, &cfg.solver)?;
    let eta = sol.eta.clone();

    let nearby: Vec<usize> = map
        .sources()
        .iter()
        .enumerate()
        .filter(|(_, s)| {
            let d = distance(xi, s);
            d >= DUPLICATE_SOURCE_TOL && d <= cfg.epsilon0
        })
        .map(|(i, _)| i)
        .collect();

    let basis_src = tangent_basis(xi);
    let basis_tgt = tangent_basis(&eta);
    let m = xi.dim();
    let mut anchors_u: Vec<Vec<f64>> = vec![vec![0.0; m]];
    let mut anchors_v: Vec<Vec<f64>> = vec![vec![0.0; m]];
    for &i in &nearby {
        anchors_u.push(chart_coords(&basis_src, xi, &map.sources()[i])?);
        anchors_v.push(chart_coords(&basis_tgt, &eta, &map.targets()[i])?);
    }
    let mut chart_constant = 0.0f64;
    for i in 0..anchors_u.len() {
        for j in (i + 1)..anchors_u.len() {
            let du = euclid_dist(&anchors_u[i], &anchors_u[j]);
            if du > 1e-12 {
                chart_constant =
                    chart_constant.max(euclid_dist(&anchors_v[i], &anchors_v[j]) / du);
            }
        }
    }

    let space = EuclideanSpace;
    let params = MinimaxParams {
        tol: cfg.solver.tol,
        active_tol: cfg.solver.active_tol,
        max_iters: cfg.solver.max_iters,
        step0: (0.1 * cfg.epsilon0).max(1e-6),
        subgradient_iters: 60,
    };
    let mut images = Vec::with_capacity(ball_sample.len());
    for p in ball_sample {
        let u = chart_coords(&basis_src, xi, p)?;
        let existing = anchors_u
            .iter()
            .position(|a| euclid_dist(a, &u) < 1e-12);
        let v = match existing {
            Some(i) => anchors_v[i].clone(),
            None => {
                let lengths: Vec<f64> =
                    anchors_u.iter().map(|a| euclid_dist(a, &u)).collect();
                let problem = MinimaxProblem {
                    anchors: &anchors_v,
                    lengths: &lengths,
                };
                let nearest = lengths
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .map(|(i, _)| i)
                    .unwrap();
                let out = minimize(&space, &problem, anchors_v[nearest].clone(), &params);
                out.point
            }
        };
        images.push(chart_push(&basis_tgt, &eta, &v)?);
        anchors_u.push(u);
        anchors_v.push(images
            .last()
            .map(|img| chart_coords(&basis_tgt, &eta, img))
            .unwrap()?);
    }

    let mut domain = Vec::with_capacity(1 + nearby.len() + ball_sample.len());
    let mut table_images = Vec::with_capacity(domain.capacity());
    domain.push(xi.clone());
    table_images.push(eta.clone());
    for &i in &nearby {
        domain.push(map.sources()[i].clone());
        table_images.push(map.targets()[i].clone());
    }
    domain.extend(ball_sample.iter().cloned());
    table_images.extend(images);

    let certified_constant = if domain.len() >= 2 {
        lipschitz_of_pairs(&domain, &table_images)?.constant
    } else {
        0.0
    };
    let bound = cfg.sqrt_c_star;
    let pass = certified_constant <= bound + CERT_TOL;
    Ok(PatchReport {
        table: MapTable::new(domain, table_images, "patch")?,
        nearby_count: nearby.len(),
        eta,
        c_xi: sol.c_xi,
        chart_constant,
        certified_constant,
        bound,
        pass,
    })
}

/// Pairwise verdict on the union of the original map with two patches at
/// centers at least R apart, split by pair type.
#[derive(Debug, Clone)]
pub struct TwoCenterReport {
    /// Max ratio among: source pairs; pairs inside the first patch; pairs
    /// inside the second; first patch against sources; second patch
    /// against sources; cross-patch pairs. Zero where a class has no pair.
    pub case_maxima: [f64; 6],
    pub xi_distance: f64,
    pub eta_distance: f64,
    /// d(eta, eta') / d(xi, xi').
    pub eta_ratio: f64,
    /// c_star + delta / R, what the ratio must stay under.
    pub eta_ratio_bound: f64,
    /// Whether d(eta, eta') <= c_star d(xi, xi') + delta + tolerance.
    pub additive_ok: bool,
    /// An active index at the first center whose image direction makes a
    /// non-acute angle with the direction toward the second image, when one
    /// is defined.
    pub obtuse_witness: Option<(usize, f64)>,
    pub patch_first: PatchReport,
    pub patch_second: PatchReport,
    pub pass: bool,
}

fn class_pairs_max(
    a: &[(HPoint, HPoint)],
    b: Option<&[(HPoint, HPoint)]>,
) -> f64 {
    let mut best = 0.0f64;
    match b {
        None => {
            for i in 0..a.len() {
                for j in (i + 1)..a.len() {
                    let d = distance(&a[i].0, &a[j].0);
                    if d > 1e-12 {
                        best = best.max(distance(&a[i].1, &a[j].1) / d);
                    }
                }
            }
        }
        Some(b) => {
            for x in a {
                for y in b {
                    let d = distance(&x.0, &y.0);
                    if d > 1e-12 {
                        best = best.max(distance(&x.1, &y.1) / d);
                    }
                }
            }
        }
    }
    best
}

fn patch_pairs(patch: &PatchReport) -> Vec<(HPoint, HPoint)> {
    let t = &patch.table;
    let mut out = vec![(t.domain[0].clone(), t.images[0].clone())];
    for i in (1 + patch.nearby_count)..t.len() {
        out.push((t.domain[i].clone(), t.images[i].clone()));
    }
    out
}

/// Builds both patches restricted to epsilon-balls and certifies every
/// pair class of the union map, plus the image-distance estimate between
/// the two optimal candidates.
pub fn verify_two_center_patch(
    map: &PartialMap,
    xi: &HPoint,
    xi2: &HPoint,
    cfg: &PipelineConfig,
    samples_first: &[HPoint],
    samples_second: &[HPoint],
) -> Result<TwoCenterReport> {
    let xi_distance = distance(xi, xi2);
    if xi_distance < cfg.r_separation {
        return Err(Error::CentersTooClose {
            dist: xi_distance,
            required: cfg.r_separation,
        });
    }
    for (i, p) in samples_first.iter().enumerate() {
        let d = distance(xi, p);
        if d > cfg.epsilon {
            return Err(Error::OutsideBall {
                index: i,
                dist: d,
                radius: cfg.epsilon,
            });
        }
    }
    for (i, p) in samples_second.iter().enumerate() {
        let d = distance(xi2, p);
        if d > cfg.epsilon {
            return Err(Error::OutsideBall {
                index: i,
                dist: d,
                radius: cfg.epsilon,
            });
        }
    }
    let patch_first = local_patch(map, xi, cfg, samples_first)?;
    let patch_second = local_patch(map, xi2, cfg, samples_second)?;

    let source_pairs: Vec<(HPoint, HPoint)> = map
        .sources()
        .iter()
        .cloned()
        .zip(map.targets().iter().cloned())
        .collect();
    let first_pairs = patch_pairs(&patch_first);
    let second_pairs = patch_pairs(&patch_second);

    let case_maxima = [
        class_pairs_max(&source_pairs, None),
        class_pairs_max(&first_pairs, None),
        class_pairs_max(&second_pairs, None),
        class_pairs_max(&first_pairs, Some(&source_pairs)),
        class_pairs_max(&second_pairs, Some(&source_pairs)),
        class_pairs_max(&first_pairs, Some(&second_pairs)),
    ];

    let eta_distance = distance(&patch_first.eta, &patch_second.eta);
    let eta_ratio = eta_distance / xi_distance;
    let eta_ratio_bound = cfg.c_star + cfg.delta / cfg.r_separation;
    let additive_ok =
        eta_distance <= cfg.c_star * xi_distance + cfg.delta + CERT_TOL;

    let obtuse_witness = if patch_first.c_xi > 1e-9 {
        let sol = solve_one_point(map, xi, &cfg.solver)?;
        obtuse_pair(&sol, map, &patch_second.eta)
            .ok()
            .map(|w| (w.index, w.angle))
    } else {
        None
    };

    let pass = case_maxima.iter().all(|&m| m <= 1.0 + CERT_TOL)
        && eta_ratio <= eta_ratio_bound + CERT_TOL
        && additive_ok
        && patch_first.pass
        && patch_second.pass;
    Ok(TwoCenterReport {
        case_maxima,
        xi_distance,
        eta_distance,
        eta_ratio,
        eta_ratio_bound,
        additive_ok,
        obtuse_witness,
        patch_first,
        patch_second,
        pass,
    })
}

/// The full run: evaluation points, the averaged images, and every
/// certificate the stages produced.
#[derive(Debug, Clone)]
pub struct ExtensionResult {
    /// Original sources first, then the deduplicated domain sample.
    pub eval_points: Vec<HPoint>,
    pub images: Vec<HPoint>,
    pub net_size: usize,
    pub num_bins: usize,
    pub theoretical_n: f64,
    /// Empirical constant of each bin's global extension.
    pub per_bin_constants: Vec<f64>,
    pub final_constant: f64,
    pub witness: (usize, usize),
    /// 1 - (1 - sqrt(c_star)) / num_bins.
    pub c_prime_empirical: f64,
    /// Same with the packing bound in place of the bin count.
    pub c_prime_theoretical: f64,
    /// Whether the averaged map reproduces every original target bit for
    /// bit.
    pub restriction_exact: bool,
    pub pass: bool,
}

fn dedup_eval_points(map: &PartialMap, domain_sample: &[HPoint]) -> Vec<HPoint> {
    let mut eval: Vec<HPoint> = map.sources().to_vec();
    for p in domain_sample {
        if eval
            .iter()
            .all(|q| distance(p, q) >= DUPLICATE_SOURCE_TOL)
        {
            eval.push(p.clone());
        }
    }
    eval
}

fn bin_extension(
    map: &PartialMap,
    cfg: &PipelineConfig,
    net: &Net,
    bin: usize,
    domain_sample: &[HPoint],
    eval_points: &[HPoint],
) -> Result<(Vec<HPoint>, f64)> {
    let mut seed_sources: Vec<HPoint> = map.sources().to_vec();
    let mut seed_targets: Vec<HPoint> = map.targets().to_vec();
    for &ci in &net.bin_members(bin) {
        let center = &net.centers[ci];
        let ball: Vec<HPoint> = domain_sample
            .iter()
            .filter(|p| distance(p, center) < cfg.epsilon)
            .cloned()
            .collect();
        let patch = local_patch(map, center, cfg, &ball)?;
        if !patch.pass {
            return Err(Error::PatchCertificate {
                constant: patch.certified_constant,
                bound: patch.bound,
            });
        }
        for (p, img) in patch_pairs(&patch) {
            if seed_sources
                .iter()
                .all(|q| distance(&p, q) >= DUPLICATE_SOURCE_TOL)
            {
                seed_sources.push(p);
                seed_targets.push(img);
            }
        }
    }
    let seed_constant = if seed_sources.len() >= 2 {
        lipschitz_of_pairs(&seed_sources, &seed_targets)?.constant
    } else {
        0.0
    };
    if seed_constant > 1.0 + CERT_TOL {
        return Err(Error::BinCertificate {
            bin,
            constant: seed_constant,
            bound: 1.0,
        });
    }
    let seed = PartialMap::new(
        seed_sources,
        seed_targets,
        seed_constant.max(cfg.c),
    )?;
    let extended = sequential_extension(&seed, eval_points, &cfg.solver)?;
    let bin_constant = lipschitz_of_pairs(extended.sources(), extended.targets())?.constant;
    if bin_constant > 1.0 + CERT_TOL {
        return Err(Error::BinCertificate {
            bin,
            constant: bin_constant,
            bound: 1.0,
        });
    }
    let images = eval_points
        .iter()
        .map(|p| {
            let i = extended
                .source_index_of(p)
                .expect("every evaluation point was placed");
            extended.targets()[i].clone()
        })
        .collect();
    Ok((images, bin_constant))
}

/// Runs the whole construction over a bounded sample and certifies the
/// averaged result. Bins are processed in parallel; the output is
/// deterministic for fixed inputs.
pub fn run_pipeline(
    map: &PartialMap,
    domain_sample: &[HPoint],
    cfg: &PipelineConfig,
) -> Result<ExtensionResult> {
    if map.declared_c() > cfg.c + 1e-9 {
        return Err(Error::DomainMismatch {
            reason: format!(
                "map declares constant {} but the pipeline was configured for {}",
                map.declared_c(),
                cfg.c
            ),
        });
    }
    let net = build_net(domain_sample, cfg.epsilon, cfg.r_separation)?;
    let eval_points = dedup_eval_points(map, domain_sample);

    let per_bin: Vec<(Vec<HPoint>, f64)> = (0..net.num_bins)
        .into_par_iter()
        .map(|bin| bin_extension(map, cfg, &net, bin, domain_sample, &eval_points))
        .collect::<Result<Vec<_>>>()?;

    let tables: Vec<MapTable> = per_bin
        .iter()
        .enumerate()
        .map(|(j, (images, _))| {
            MapTable::new(eval_points.clone(), images.clone(), format!("bin{j}"))
        })
        .collect::<Result<Vec<_>>>()?;
    let per_bin_constants: Vec<f64> = per_bin.iter().map(|(_, c)| *c).collect();
    let averaged = average_maps(&tables)?;

    let report = lipschitz_of_pairs(&eval_points, &averaged.images)?;
    let c_prime_empirical = 1.0 - (1.0 - cfg.sqrt_c_star) / net.num_bins as f64;
    let c_prime_theoretical = 1.0 - (1.0 - cfg.sqrt_c_star) / net.theoretical_n;
    let restriction_exact = map
        .targets()
        .iter()
        .zip(&averaged.images)
        .all(|(t, img)| t == img);
    let pass = report.constant <= c_prime_empirical + CERT_TOL && restriction_exact;
    Ok(ExtensionResult {
        eval_points,
        images: averaged.images,
        net_size: net.centers.len(),
        num_bins: net.num_bins,
        theoretical_n: net.theoretical_n,
        per_bin_constants,
        final_constant: report.constant,
        witness: report.witness,
        c_prime_empirical,
        c_prime_theoretical,
        restriction_exact,
        pass,
    })
}

/// One row of the loss-curve table.
#[derive(Debug, Clone)]
pub struct LossCurveRow {
    pub c: f64,
    /// Largest one-point constant observed over the instance families: an
    /// empirical lower bound on the worst-case extension loss at this c.
    pub lower_bound: f64,
    pub c_star: f64,
    /// Final-constant bound a pipeline run would certify, using the bin
    /// count of a seeded reference net.
    pub c_prime_empirical: f64,
}

fn mix_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed
        ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Estimates the extension loss over a grid of contraction constants:
/// random contractions challenged at random points, plus the equilateral
/// triangle family challenged at its center, reported against the c_star
/// upper bound and the reference-net final constant.
pub fn loss_curve(c_grid: &[f64], trials: usize, seed: u64) -> Result<Vec<LossCurveRow>> {
    if trials == 0 {
        return Err(Error::OutOfDomain {
            name: "trials",
            value: 0.0,
            reason: "must be at least 1",
        });
    }
    let o = HPoint::basepoint(2);
    c_grid
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let bounds = compute_c_star(c)?;
            let per_trial: Vec<f64> = (0..trials)
                .into_par_iter()
                .map(|t| -> Result<f64> {
                    let mut rng = seeded_rng(mix_seed(seed, ci as u64, t as u64));
                    let n = 3 + t % 6;
                    let sources = sample_ball(&mut rng, &o, 2.0, n)?;
                    let map = random_contraction(&mut rng, &sources, c, &o)?;
                    let challenge = loop {
                        let p = sample_ball(&mut rng, &o, 2.0, 1)?.remove(0);
                        if map.source_index_of(&p).is_none() {
                            break p;
                        }
                    };
                    let sol = solve_one_point(&map, &challenge, &SolverOptions::default())?;
                    Ok(sol.c_xi)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut lower = per_trial.into_iter().fold(0.0f64, f64::max);
            for side in [1.0, 2.0, 3.0] {
                let tri = equilateral_triangle_map(2, side, c * side, 0.0)?;
                let sol = solve_one_point(&tri, &o, &SolverOptions::default())?;
                lower = lower.max(sol.c_xi);
            }
            let cfg = choose_parameters(c)?;
            let mut net_rng = seeded_rng(mix_seed(seed, ci as u64, 0xA5A5_A5A5));
            let reference = sample_ball(&mut net_rng, &o, 3.0, 300)?;
            let net = build_net(&reference, cfg.epsilon, cfg.r_separation)?;
            Ok(LossCurveRow {
                c,
                lower_bound: lower,
                c_star: bounds.c_star,
                c_prime_empirical: 1.0 - (1.0 - cfg.sqrt_c_star) / net.num_bins as f64,
            })
        })
        .collect()
}
