//! Finite minimax engine: minimizes y -> max_i d(y, t_i) / l_i over a
//! geodesic space, for a small list of anchor points t_i with positive
//! weights 1/l_i.
//!
//! The objective is convex along geodesics, so a subgradient phase with
//! diminishing steps gets near the optimum and a descent phase finishes it.
//! The descent direction is the negative minimum-norm element of the convex
//! hull of the active ratio gradients; at the optimum that element is zero,
//! which makes its norm a first-order residual and, reweighted, the convex
//! hull certificate for the solution.
//!
//! Both the hyperbolic solver and the Euclidean chart extension reduce to
//! this module; the space enters only through distances, unit directions,
//! and geodesic steps.

/// Geometry hooks needed by the minimax iteration. Implementations operate on
/// raw coordinate vectors; points are ambient coordinate slices.
pub(crate) trait MinimaxSpace {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64;
    /// Unit tangent vector at `y` pointing toward `t`, in ambient
    /// coordinates, or None when the points coincide to working precision.
    fn unit_toward(&self, y: &[f64], t: &[f64]) -> Option<Vec<f64>>;
    /// Point at arc length `len` from `y` along the unit direction `dir`.
    fn step(&self, y: &[f64], dir: &[f64], len: f64) -> Vec<f64>;
    /// Inner product of tangent vectors, in the metric that makes
    /// `unit_toward` unit and `step`'s `len` an arc length. All descent
    /// arithmetic must use this product: the minimum-norm direction is a
    /// guaranteed descent direction only in its own metric.
    fn inner(&self, u: &[f64], v: &[f64]) -> f64;
}

/// Hyperboloid sheet in R^{m+1}.
pub(crate) struct HyperbolicSpace;

impl MinimaxSpace for HyperbolicSpace {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        crate::geometry::dist_raw(a, b)
    }

    fn unit_toward(&self, y: &[f64], t: &[f64]) -> Option<Vec<f64>> {
        let v = crate::geometry::log_raw(y, t);
        let n = crate::geometry::mink_inner(&v, &v).max(0.0).sqrt();
        if n < 1e-14 {
            return None;
        }
        Some(v.into_iter().map(|c| c / n).collect())
    }

    fn step(&self, y: &[f64], dir: &[f64], len: f64) -> Vec<f64> {
        // Accumulated directions carry a roundoff-scale non-tangent
        // component that grows with the base radius; project it out so the
        // exponential stays within the sheet tolerance.
        let ip = crate::geometry::mink_inner(y, dir);
        let scaled: Vec<f64> = dir.iter().zip(y).map(|(c, b)| (c + ip * b) * len).collect();
        crate::geometry::exp_raw(y, &scaled).expect("geodesic step left the sheet")
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        crate::geometry::mink_inner(u, v)
    }
}

/// Flat R^n with the usual metric; used for tangent-chart extensions.
pub(crate) struct EuclideanSpace;

impl MinimaxSpace for EuclideanSpace {
    fn dist(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    fn unit_toward(&self, y: &[f64], t: &[f64]) -> Option<Vec<f64>> {
        let d = self.dist(y, t);
        if d < 1e-14 {
            return None;
        }
        Some(y.iter().zip(t).map(|(a, b)| (b - a) / d).collect())
    }

    fn step(&self, y: &[f64], dir: &[f64], len: f64) -> Vec<f64> {
        y.iter().zip(dir).map(|(a, d)| a + d * len).collect()
    }

    fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

pub(crate) struct MinimaxProblem<'a> {
    /// Anchor coordinate vectors.
    pub anchors: &'a [Vec<f64>],
    /// Positive divisors l_i of each distance.
    pub lengths: &'a [f64],
}

impl MinimaxProblem<'_> {
    pub fn value<S: MinimaxSpace>(&self, space: &S, y: &[f64]) -> f64 {
        let mut m = 0.0f64;
        for (t, &l) in self.anchors.iter().zip(self.lengths) {
            m = m.max(space.dist(y, t) / l);
        }
        m
    }

    fn ratios<S: MinimaxSpace>(&self, space: &S, y: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (t, &l) in self.anchors.iter().zip(self.lengths) {
            out.push(space.dist(y, t) / l);
        }
    }
}

pub(crate) struct MinimaxOutcome {
    pub point: Vec<f64>,
    /// Norm of the minimum-norm convex combination of active ratio gradients
    /// at the final point; zero at an exact optimum.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) struct MinimaxParams {
    pub tol: f64,
    pub active_tol: f64,
    pub max_iters: usize,
    /// Step scale for the subgradient phase; chosen from the anchor spread
    /// by the caller.
    pub step0: f64,
    pub subgradient_iters: usize,
}

/// Runs the two-phase minimization from `init`. The returned point is always
/// the best iterate seen.
pub(crate) fn minimize<S: MinimaxSpace>(
    space: &S,
    problem: &MinimaxProblem,
    init: Vec<f64>,
    params: &MinimaxParams,
) -> MinimaxOutcome {
    let n = problem.anchors.len();
    debug_assert_eq!(n, problem.lengths.len());
    let mut y = init;
    let mut best_y = y.clone();
    let mut best_val = problem.value(space, &y);
    let mut iterations = 0usize;
    let mut ratios: Vec<f64> = Vec::with_capacity(n);

    if best_val <= 0.0 {
        return MinimaxOutcome {
            point: best_y,
            residual: 0.0,
            iterations,
            converged: true,
        };
    }

    // Phase 1: geodesic subgradient steps toward the average of the currently
    // worst anchors, with step0 / sqrt(k) lengths. Cheap global progress.
    let sub_iters = params.subgradient_iters.min(params.max_iters);
    for k in 1..=sub_iters {
        problem.ratios(space, &y, &mut ratios);
        let m = ratios.iter().cloned().fold(0.0f64, f64::max);
        if m < best_val {
            best_val = m;
            best_y.clone_from(&y);
        }
        let window = params.active_tol * m.max(1e-12);
        let mut dir = vec![0.0; y.len()];
        let mut count = 0usize;
        for (i, &r) in ratios.iter().enumerate() {
            if r >= m - window {
                if let Some(u) = space.unit_toward(&y, &problem.anchors[i]) {
                    for (d, c) in dir.iter_mut().zip(&u) {
                        *d += c;
                    }
                    count += 1;
                }
            }
        }
        iterations += 1;
        if count == 0 {
            break;
        }
        let norm = space.inner(&dir, &dir).max(0.0).sqrt();
        if norm < 1e-14 {
            break;
        }
        for d in dir.iter_mut() {
            *d /= norm;
        }
        y = space.step(&y, &dir, params.step0 / (k as f64).sqrt());
    }
    y.clone_from(&best_y);

    // Phase 2: minimum-norm subgradient descent with Armijo backtracking.
    // The active window widens when no descent is found, which handles
    // nearly-active ratios entering during a step.
    let mut residual = f64::INFINITY;
    let mut step_hint = params.step0.max(1e-6);
    let mut converged = false;
    let mut grads: Vec<Vec<f64>> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    while iterations < params.max_iters {
        problem.ratios(space, &y, &mut ratios);
        let m = ratios.iter().cloned().fold(0.0f64, f64::max);
        if m < best_val {
            best_val = m;
            best_y.clone_from(&y);
        }
        if m <= 0.0 {
            residual = 0.0;
            converged = true;
            break;
        }

        let mut window = params.active_tol * m.max(1e-12);
        let mut advanced = false;
        loop {
            iterations += 1;
            active.clear();
            grads.clear();
            for (i, &r) in ratios.iter().enumerate() {
                if r >= m - window {
                    if let Some(u) = space.unit_toward(&y, &problem.anchors[i]) {
                        // Gradient of d(., t_i)/l_i points away from t_i.
                        grads.push(u.iter().map(|c| -c / problem.lengths[i]).collect());
                        active.push(i);
                    }
                }
            }
            if grads.is_empty() {
                residual = 0.0;
                converged = true;
                break;
            }
            let (weights, vnorm) = min_norm_convex_combination(&grads, |u, v| space.inner(u, v));
            residual = vnorm;
            if vnorm <= params.tol {
                converged = true;
                break;
            }
            let mut dir = vec![0.0; y.len()];
            for (w, g) in weights.iter().zip(&grads) {
                for (d, c) in dir.iter_mut().zip(g) {
                    *d -= w * c;
                }
            }
            let dn = space.inner(&dir, &dir).max(0.0).sqrt();
            if dn < 1e-300 {
                converged = true;
                break;
            }
            for d in dir.iter_mut() {
                *d /= dn;
            }
            // Steepest-descent rate along dir is at least vnorm; accept any
            // step that realizes half of it.
            let mut alpha = step_hint;
            let mut accepted = false;
            while alpha > 1e-14 && iterations < params.max_iters {
                let cand = space.step(&y, &dir, alpha);
                let val = problem.value(space, &cand);
                iterations += 1;
                if val <= m - 0.5 * alpha * vnorm {
                    y = cand;
                    if val < best_val {
                        best_val = val;
                        best_y.clone_from(&y);
                    }
                    step_hint = (alpha * 2.0).min(params.step0.max(1.0));
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if accepted {
                advanced = true;
                break;
            }
            // No decrease: the linearization over this window was too
            // narrow. Widen and retry, give up once the window swallows
            // the whole ratio range.
            window *= 8.0;
            step_hint = (step_hint * 0.25).max(1e-12);
            if window > m || iterations >= params.max_iters {
                break;
            }
        }
        if converged || !advanced {
            break;
        }
    }

    MinimaxOutcome {
        point: best_y,
        residual,
        iterations,
        converged,
    }
}

/// Minimum-norm point of the convex hull of the given vectors, as barycentric
/// weights plus the attained norm, measured in the inner product given by
/// `inner` (which must be positive semidefinite on the span of the inputs).
///
/// For up to a few vectors this enumerates all subsets and solves each affine
/// KKT system exactly: the optimal face's affine minimizer has nonnegative
/// weights, so the smallest-norm feasible candidate is the global answer.
/// Larger collections (degenerate active sets) fall back to projected
/// gradient on the simplex.
pub(crate) fn min_norm_convex_combination<F>(vectors: &[Vec<f64>], inner: F) -> (Vec<f64>, f64)
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = vectors.len();
    assert!(n > 0);
    if n == 1 {
        let norm = inner(&vectors[0], &vectors[0]).max(0.0).sqrt();
        return (vec![1.0], norm);
    }
    let mut gram = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i..n {
            let g = inner(&vectors[i], &vectors[j]);
            gram[i][j] = g;
            gram[j][i] = g;
        }
    }
    let (w, _) = if n <= 10 {
        min_norm_by_enumeration(&gram)
    } else {
        min_norm_by_projection(&gram)
    };
    // The norm comes from the explicit combination rather than the Gram
    // quadratic form: summing the vectors first lets the cancellation
    // happen componentwise, which matters when the optimum is near zero.
    let dim = vectors[0].len();
    let mut combo = vec![0.0; dim];
    for (wi, v) in w.iter().zip(vectors) {
        for (s, c) in combo.iter_mut().zip(v) {
            *s += wi * c;
        }
    }
    let norm = inner(&combo, &combo).max(0.0).sqrt();
    (w, norm)
}

fn quad_form(gram: &[Vec<f64>], w: &[f64]) -> f64 {
    let n = w.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += w[i] * gram[i][j] * w[j];
        }
    }
    q.max(0.0)
}

fn min_norm_by_enumeration(gram: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = gram.len();
    let mut best_w: Option<Vec<f64>> = None;
    let mut best_q = f64::INFINITY;
    for mask in 1u32..(1u32 << n) {
        let subset: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let k = subset.len();
        let lambda = if k == 1 {
            vec![1.0]
        } else {
            // Stationarity of |sum l_i v_i|^2 under sum l_i = 1:
            // 2 G lambda = nu 1, solved as a bordered linear system.
            let mut a = vec![vec![0.0; k + 2]; k + 1];
            for (r, &i) in subset.iter().enumerate() {
                for (c, &j) in subset.iter().enumerate() {
                    a[r][c] = 2.0 * gram[i][j];
                }
                a[r][k] = -1.0;
                a[r][k + 1] = 0.0;
            }
            for c in 0..k {
                a[k][c] = 1.0;
            }
            a[k][k] = 0.0;
            a[k][k + 1] = 1.0;
            match solve_dense(&mut a) {
                Some(sol) => sol[..k].to_vec(),
                None => continue,
            }
        };
        if lambda.iter().any(|&l| l < -1e-10) {
            continue;
        }
        let mut w = vec![0.0; n];
        let mut sum = 0.0;
        for (&i, &l) in subset.iter().zip(&lambda) {
            let l = l.max(0.0);
            w[i] = l;
            sum += l;
        }
        if sum <= 0.0 {
            continue;
        }
        for wi in w.iter_mut() {
            *wi /= sum;
        }
        let q = quad_form(gram, &w);
        if q < best_q {
            best_q = q;
            best_w = Some(w);
        }
    }
    let w = best_w.unwrap_or_else(|| {
        let mut w = vec![0.0; n];
        w[0] = 1.0;
        w
    });
    let q = quad_form(gram, &w);
    (w, q.sqrt())
}

fn min_norm_by_projection(gram: &[Vec<f64>]) -> (Vec<f64>, f64) {
    let n = gram.len();
    let mut w = vec![1.0 / n as f64; n];
    let lip = 2.0
        * gram
            .iter()
            .map(|row| row.iter().map(|g| g.abs()).sum::<f64>())
            .fold(0.0f64, f64::max)
            .max(1e-300);
    let step = 1.0 / lip;
    let mut grad = vec![0.0; n];
    for _ in 0..2000 {
        for i in 0..n {
            grad[i] = 2.0 * (0..n).map(|j| gram[i][j] * w[j]).sum::<f64>();
        }
        for i in 0..n {
            w[i] -= step * grad[i];
        }
        project_to_simplex(&mut w);
    }
    let q = quad_form(gram, &w);
    (w, q.sqrt())
}

/// Euclidean projection onto the probability simplex.
fn project_to_simplex(w: &mut [f64]) {
    let n = w.len();
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (k, &v) in sorted.iter().enumerate() {
        acc += v;
        let t = (acc - 1.0) / (k + 1) as f64;
        if v - t > 0.0 {
            theta = t;
        }
    }
    let mut sum = 0.0;
    for wi in w.iter_mut() {
        *wi = (*wi - theta).max(0.0);
        sum += *wi;
    }
    if sum > 0.0 {
        for wi in w.iter_mut() {
            *wi /= sum;
        }
    } else {
        for wi in w.iter_mut() {
            *wi = 1.0 / n as f64;
        }
    }
}

/// Gaussian elimination with partial pivoting on an augmented matrix
/// (last column is the right-hand side). Returns None when a pivot
/// degenerates.
fn solve_dense(a: &mut [Vec<f64>]) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let mut piv = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[piv][col].abs() {
                piv = r;
            }
        }
        if a[piv][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, piv);
        let p = a[col][col];
        for c in col..=n {
            a[col][c] /= p;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|r| a[r][n]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn dot(u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    #[test]
    fn min_norm_of_opposite_unit_vectors_is_zero() {
        let vs = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let (w, norm) = min_norm_convex_combination(&vs, dot);
        assert!(norm < 1e-12, "norm = {norm}");
        assert_relative_eq!(w[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(w[1], 0.5, epsilon = 1e-9);
    }

    #[test]
    fn min_norm_of_a_spread_triple_balances() {
        // Three unit vectors at 120 degrees sum to zero with equal weights.
        let vs: Vec<Vec<f64>> = (0..3)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                vec![a.cos(), a.sin()]
            })
            .collect();
        let (w, norm) = min_norm_convex_combination(&vs, dot);
        assert!(norm < 1e-12);
        for wi in w {
            assert_relative_eq!(wi, 1.0 / 3.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn min_norm_with_hull_off_origin_picks_the_closest_face() {
        // Hull of (1,0) and (2,1): closest point is (1,0) itself.
        let vs = vec![vec![1.0, 0.0], vec![2.0, 1.0]];
        let (w, norm) = min_norm_convex_combination(&vs, dot);
        assert_relative_eq!(norm, 1.0, epsilon = 1e-9);
        assert_relative_eq!(w[0], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn projection_fallback_agrees_with_enumeration() {
        let vs: Vec<Vec<f64>> = (0..12)
            .map(|k| {
                let a = 0.3 + k as f64;
                vec![a.cos() + 0.4, a.sin() - 0.1]
            })
            .collect();
        let (_, by_proj) = min_norm_by_projection(&{
            let n = vs.len();
            let mut g = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
                }
            }
            g
        });
        let (_, by_enum) = min_norm_by_enumeration(&{
            let keep: Vec<_> = vs[..8].to_vec();
            let n = keep.len();
            let mut g = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    g[i][j] = keep[i].iter().zip(&keep[j]).map(|(a, b)| a * b).sum();
                }
            }
            g
        });
        // The 12-vector hull contains the 8-vector hull, so its minimum
        // norm cannot be larger by more than the solver slack.
        assert!(by_proj <= by_enum + 1e-6);
    }

    #[test]
    fn euclidean_minimax_finds_weighted_equalizer_on_a_segment() {
        // min max(|y - a|/2, |y - b|/1) on the segment between a and b:
        // the optimum splits the distance 3:... in ratio of the weights.
        let space = EuclideanSpace;
        let anchors = vec![vec![0.0, 0.0], vec![3.0, 0.0]];
        let lengths = vec![2.0, 1.0];
        let problem = MinimaxProblem {
            anchors: &anchors,
            lengths: &lengths,
        };
        let params = MinimaxParams {
            tol: 1e-10,
            active_tol: 1e-6,
            max_iters: 10_000,
            step0: 0.3,
            subgradient_iters: 50,
        };
        let out = minimize(&space, &problem, vec![2.9, 0.0], &params);
        assert!(out.converged);
        // Equalizer: |y|/2 = |3-y| -> y = 2.
        assert_relative_eq!(out.point[0], 2.0, epsilon = 1e-6);
        assert_relative_eq!(problem.value(&space, &out.point), 1.0, epsilon = 1e-6);
    }
}
