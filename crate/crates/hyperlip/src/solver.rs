//! Optimal one-point extension of a Lipschitz map between hyperbolic spaces.
//!
//! Given finitely many source points x_i with images f(x_i) and a new point
//! xi, the smallest constant at which f extends to xi is
//!
//!   c_xi = min_y max_i d(y, f(x_i)) / d(xi, x_i),
//!
//! attained at a unique minimizer eta. Optimality is witnessed by a convex
//! combination of the unit directions from eta toward the images of the
//! active indices summing to (numerically) zero; `certify_hull` recomputes
//! that witness independently of the solve.

use crate::error::{Error, Result};
use crate::geometry::{angle, distance, mink_inner, HPoint};
use crate::minimax::{
    min_norm_convex_combination, minimize, HyperbolicSpace, MinimaxParams, MinimaxProblem,
    MinimaxSpace,
};

/// Sources are considered duplicates below this distance.
pub const DUPLICATE_SOURCE_TOL: f64 = 1e-9;

/// Slack allowed when validating pairwise ratios against the declared
/// constant.
pub const DECLARED_SLACK: f64 = 1e-9;

/// Norm threshold for the convex hull certificate.
pub const HULL_CERT_TOL: f64 = 1e-4;

/// A finite Lipschitz map: source points, their images, and the constant the
/// data is declared to satisfy. Construction verifies every pairwise ratio.
#[derive(Debug, Clone)]
pub struct PartialMap {
    sources: Vec<HPoint>,
    targets: Vec<HPoint>,
    declared_c: f64,
}

impl PartialMap {
    pub fn new(sources: Vec<HPoint>, targets: Vec<HPoint>, declared_c: f64) -> Result<Self> {
        if sources.is_empty() {
            return Err(Error::EmptyMap);
        }
        if sources.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: sources.len(),
                got: targets.len(),
            });
        }
        if !(declared_c.is_finite() && declared_c > 0.0) {
            return Err(Error::OutOfDomain {
                name: "declared_c",
                value: declared_c,
                reason: "must be positive and finite",
            });
        }
        for i in 0..sources.len() {
            for j in (i + 1)..sources.len() {
                let ds = distance(&sources[i], &sources[j]);
                if ds < DUPLICATE_SOURCE_TOL {
                    return Err(Error::DuplicateSource { i, j, dist: ds });
                }
                let dt = distance(&targets[i], &targets[j]);
                if dt > declared_c * ds + DECLARED_SLACK {
                    return Err(Error::LipschitzViolation {
                        i,
                        j,
                        ratio: dt / ds,
                        declared: declared_c,
                    });
                }
            }
        }
        Ok(PartialMap {
            sources,
            targets,
            declared_c,
        })
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.sources[0].dim()
    }

    pub fn sources(&self) -> &[HPoint] {
        &self.sources
    }

    pub fn targets(&self) -> &[HPoint] {
        &self.targets
    }

    pub fn declared_c(&self) -> f64 {
        self.declared_c
    }

    /// Index of a source within duplicate tolerance of `p`, if any.
    pub fn source_index_of(&self, p: &HPoint) -> Option<usize> {
        self.sources
            .iter()
            .position(|s| distance(s, p) < DUPLICATE_SOURCE_TOL)
    }

    /// Appends a pair without revalidating existing pairs; the new ratios
    /// are checked against the (possibly raised) declared constant.
    pub(crate) fn push_pair(&mut self, source: HPoint, target: HPoint, raise_to: f64) {
        self.declared_c = self.declared_c.max(raise_to);
        self.sources.push(source);
        self.targets.push(target);
    }
}

/// Knobs for the one-point solve.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// First-order residual at which the solve counts as converged.
    pub tol: f64,
    /// Relative ratio window for membership in the active set.
    pub active_tol: f64,
    pub max_iters: usize,
    /// Optional starting point; defaults to the image of the nearest source.
    pub initial: Option<HPoint>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            active_tol: 1e-6,
            max_iters: 100_000,
            initial: None,
        }
    }
}

/// Result of a one-point solve.
#[derive(Debug, Clone)]
pub struct OnePointSolution {
    pub xi: HPoint,
    pub eta: HPoint,
    pub c_xi: f64,
    /// Indices whose ratio is within the active window of the maximum.
    pub active_indices: Vec<usize>,
    /// Barycentric weights of the minimum-norm convex combination of unit
    /// directions toward the active images.
    pub hull_weights: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// max_i d(y, f(x_i)) / d(xi, x_i), the constant forced by sending xi to y.
pub fn eval_phi(map: &PartialMap, xi: &HPoint, y: &HPoint) -> Result<f64> {
    let lengths = challenge_lengths(map, xi)?;
    let mut m = 0.0f64;
    for (t, l) in map.targets().iter().zip(&lengths) {
        m = m.max(distance(y, t) / l);
    }
    Ok(m)
}

fn challenge_lengths(map: &PartialMap, xi: &HPoint) -> Result<Vec<f64>> {
    let mut lengths = Vec::with_capacity(map.len());
    for (i, s) in map.sources().iter().enumerate() {
        let d = distance(xi, s);
        if d < DUPLICATE_SOURCE_TOL {
            return Err(Error::ChallengeAtSource { index: i, dist: d });
        }
        lengths.push(d);
    }
    Ok(lengths)
}

/// Mean pairwise distance over (a deterministic subset of) the targets, used
/// to scale the subgradient phase steps.
fn target_spread(targets: &[HPoint]) -> f64 {
    let n = targets.len().min(32);
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += distance(&targets[i], &targets[j]);
            count += 1;
        }
    }
    sum / count as f64
}

/// Active set at `eta`: indices whose ratio is within the relative window of
/// the maximum.
fn active_at(
    map: &PartialMap,
    lengths: &[f64],
    eta: &HPoint,
    active_tol: f64,
) -> (f64, Vec<usize>) {
    let mut ratios = Vec::with_capacity(map.len());
    let mut m = 0.0f64;
    for (t, &l) in map.targets().iter().zip(lengths) {
        let r = distance(eta, t) / l;
        ratios.push(r);
        m = m.max(r);
    }
    let window = active_tol * m.max(1e-12);
    let active = ratios
        .iter()
        .enumerate()
        .filter(|(_, &r)| r >= m - window)
        .map(|(i, _)| i)
        .collect();
    (m, active)
}

/// Solves the optimal one-point extension problem at `xi`.
///
/// A challenge that coincides with a source returns that source's image with
/// c_xi equal to the declared constant, by convention. The solve itself is a
/// subgradient phase followed by minimum-norm descent; the reported residual
/// is the norm of the best convex combination of active gradients at the
/// final iterate.
pub fn solve_one_point(
    map: &PartialMap,
    xi: &HPoint,
    opts: &SolverOptions,
) -> Result<OnePointSolution> {
    if let Some(i) = map.source_index_of(xi) {
        return Ok(OnePointSolution {
            xi: xi.clone(),
            eta: map.targets()[i].clone(),
            c_xi: map.declared_c(),
            active_indices: vec![i],
            hull_weights: vec![1.0],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let lengths = challenge_lengths(map, xi)?;

    let spread = target_spread(map.targets());
    let anchors: Vec<Vec<f64>> = map.targets().iter().map(|t| t.coords().to_vec()).collect();
    let problem = MinimaxProblem {
        anchors: &anchors,
        lengths: &lengths,
    };
    let init = match &opts.initial {
        Some(p) => p.coords().to_vec(),
        None => {
            let nearest = lengths
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            anchors[nearest].clone()
        }
    };
    let params = MinimaxParams {
        tol: opts.tol,
        active_tol: opts.active_tol,
        max_iters: opts.max_iters,
        step0: (0.1 * spread).max(1e-3),
        subgradient_iters: 80,
    };
    let space = HyperbolicSpace;
    let out = minimize(&space, &problem, init, &params);
    let eta = HPoint::new(out.point).expect("solver iterate left the sheet");

    let (c_xi, active_indices) = active_at(map, &lengths, &eta, opts.active_tol);
    let hull_weights = if c_xi <= 0.0 {
        vec![1.0 / active_indices.len().max(1) as f64; active_indices.len().max(1)]
    } else {
        let dirs: Vec<Vec<f64>> = active_indices
            .iter()
            .filter_map(|&i| space.unit_toward(eta.coords(), anchors[i].as_slice()))
            .collect();
        if dirs.len() == active_indices.len() && !dirs.is_empty() {
            min_norm_convex_combination(&dirs, |u, v| mink_inner(u, v)).0
        } else {
            vec![1.0 / active_indices.len().max(1) as f64; active_indices.len().max(1)]
        }
    };

    Ok(OnePointSolution {
        xi: xi.clone(),
        eta,
        c_xi,
        active_indices,
        hull_weights,
        iterations: out.iterations,
        residual: out.residual,
        converged: out.converged,
    })
}

/// Outcome of independently re-checking the first-order certificate of a
/// solution.
#[derive(Debug, Clone)]
pub struct HullCertificate {
    pub active_indices: Vec<usize>,
    pub weights: Vec<f64>,
    /// Norm of the best convex combination of unit directions from eta
    /// toward the active images.
    pub norm: f64,
    pub pass: bool,
    pub reason: &'static str,
}

/// Recomputes the convex hull certificate at `sol.eta` from scratch: active
/// set, minimum-norm weights, and the pass/fail verdict at the 1e-4 norm
/// threshold. A single active index with positive c_xi cannot be optimal and
/// fails as a minimality violation.
pub fn certify_hull(sol: &OnePointSolution, map: &PartialMap) -> Result<HullCertificate> {
    if map.source_index_of(&sol.xi).is_some() {
        return Ok(HullCertificate {
            active_indices: sol.active_indices.clone(),
            weights: vec![1.0],
            norm: 0.0,
            pass: true,
            reason: "challenge coincides with a source",
        });
    }
    let lengths = challenge_lengths(map, &sol.xi)?;
    let (c, active) = active_at(map, &lengths, &sol.eta, 1e-6);
    if c <= 1e-9 {
        return Ok(HullCertificate {
            active_indices: active,
            weights: Vec::new(),
            norm: 0.0,
            pass: true,
            reason: "zero constant: eta sits on every image",
        });
    }
    if active.len() == 1 {
        return Ok(HullCertificate {
            active_indices: active,
            weights: vec![1.0],
            norm: 1.0,
            pass: false,
            reason: "minimality violation: a single active direction admits descent",
        });
    }
    let space = HyperbolicSpace;
    let mut dirs = Vec::with_capacity(active.len());
    for &i in &active {
        match space.unit_toward(sol.eta.coords(), map.targets()[i].coords()) {
            Some(u) => dirs.push(u),
            None => {
                return Ok(HullCertificate {
                    active_indices: active,
                    weights: Vec::new(),
                    norm: 1.0,
                    pass: false,
                    reason: "active image coincides with eta but c_xi is positive",
                })
            }
        }
    }
    let (weights, norm) = min_norm_convex_combination(&dirs, |u, v| mink_inner(u, v));
    let pass = norm <= HULL_CERT_TOL;
    Ok(HullCertificate {
        active_indices: active,
        weights,
        norm,
        pass,
        reason: if pass {
            "zero lies in the hull of active directions"
        } else {
            "active directions do not balance"
        },
    })
}

/// An active index whose image subtends a non-acute angle at eta with the
/// reference point.
#[derive(Debug, Clone)]
pub struct ObtusePair {
    pub index: usize,
    pub angle: f64,
    /// Whether the angle clears pi/2 - 1e-6. A certified optimum always
    /// admits such an index; failure here flags numerical trouble rather
    /// than a structural error.
    pub meets_threshold: bool,
}

/// Finds an active index j maximizing the angle at `sol.eta` between
/// `reference` and the j-th image. When the hull certificate holds, some
/// direction must make a non-acute angle with any fixed direction, because
/// the active directions admit a zero convex combination.
pub fn obtuse_pair(
    sol: &OnePointSolution,
    map: &PartialMap,
    reference: &HPoint,
) -> Result<ObtusePair> {
    let lengths = challenge_lengths(map, &sol.xi)?;
    let (c, active) = active_at(map, &lengths, &sol.eta, 1e-6);
    if c <= 1e-9 {
        return Err(Error::DegenerateAngle);
    }
    let mut best: Option<(usize, f64)> = None;
    for &i in &active {
        let a = angle(&sol.eta, reference, &map.targets()[i])?;
        if best.map_or(true, |(_, prev)| a > prev) {
            best = Some((i, a));
        }
    }
    let (index, a) = best.ok_or(Error::DegenerateAngle)?;
    Ok(ObtusePair {
        index,
        angle: a,
        meets_threshold: a >= std::f64::consts::FRAC_PI_2 - 1e-6,
    })
}

/// Empirical Lipschitz constant of a finite map: the maximal pairwise ratio
/// and the first pair attaining it.
#[derive(Debug, Clone)]
pub struct LipschitzReport {
    pub constant: f64,
    pub witness: (usize, usize),
}

pub fn lipschitz_constant(map: &PartialMap) -> Result<LipschitzReport> {
    lipschitz_of_pairs(map.sources(), map.targets())
}

pub(crate) fn lipschitz_of_pairs(
    sources: &[HPoint],
    targets: &[HPoint],
) -> Result<LipschitzReport> {
    if sources.len() < 2 {
        return Err(Error::TooFewPoints {
            got: sources.len(),
        });
    }
    let mut best = LipschitzReport {
        constant: 0.0,
        witness: (0, 1),
    };
    for i in 0..sources.len() {
        for j in (i + 1)..sources.len() {
            let ds = distance(&sources[i], &sources[j]);
            if ds < DUPLICATE_SOURCE_TOL {
                continue;
            }
            let r = distance(&targets[i], &targets[j]) / ds;
            if r > best.constant {
                best = LipschitzReport {
                    constant: r,
                    witness: (i, j),
                };
            }
        }
    }
    Ok(best)
}

/// Extends the map over `queue` one point at a time, each step placing the
/// new point at its optimal one-point extension against everything already
/// placed. Queue points that coincide with an existing source keep that
/// source's image. The declared constant of the returned map is the maximum
/// of the original one, every step's c_xi, and the final empirical constant,
/// so its pairwise invariant keeps holding as the map grows.
///
/// The result depends on the queue order; only the final constant bounds of
/// the containing pipeline are order-free.
pub fn sequential_extension(
    map: &PartialMap,
    queue: &[HPoint],
    opts: &SolverOptions,
) -> Result<PartialMap> {
    let mut current = map.clone();
    let step_opts = SolverOptions {
        initial: None,
        ..opts.clone()
    };
    for xi in queue {
        if current.source_index_of(xi).is_some() {
            continue;
        }
        let sol = solve_one_point(&current, xi, &step_opts)?;
        current.push_pair(xi.clone(), sol.eta, sol.c_xi);
    }
    if current.len() >= 2 {
        let empirical = lipschitz_constant(&current)?.constant;
        if empirical > current.declared_c {
            current.declared_c = empirical;
        }
    }
    Ok(current)
}
