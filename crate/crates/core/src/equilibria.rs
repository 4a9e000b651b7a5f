//! Equilibria of the vector field: enumeration by concave maximization on
//! faces, stability classification, Jacobians and tangent spectra, and the
//! limit set (a point, or for balanced bipartite graphs possibly a closed
//! interval).
//!
//! Every zero of `F` is a maximizer of `L` restricted to some face of the
//! domain, and conversely. Faces are indexed by vertex covers (any support
//! missing an entire edge sends `L` to `-inf`), so enumeration reduces to
//! one concave maximization per cover.

use nalgebra::{Complex, DMatrix};
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{
    self, inf_distance, DomainParams, DynamicsError, SimplexPoint,
};
use crate::graph::{BipartiteClass, Graph, GraphError, DEFAULT_COVER_CAP};

/// `||F||_inf` threshold below which a point counts as an equilibrium.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Off-support gradient above this is an unstable direction.
pub const UNSTABLE_GRADIENT_TOL: f64 = 1e-8;
/// Points closer than this (inf norm) are the same equilibrium. Kept well
/// above `RESIDUAL_TOL` so deduplication never masks genuinely distinct
/// equilibria of nearby faces.
pub const DEDUP_TOL: f64 = 1e-6;
/// Default projected-gradient convergence tolerance.
pub const FACE_TOL: f64 = 1e-10;
/// Default iteration cap for face maximization.
pub const FACE_MAX_ITERS: usize = 100_000;
/// Coordinates below this are treated as zero when reading off supports.
pub const SUPPORT_EPS: f64 = 1e-9;
/// Bisection tolerance on the interval parameter eta.
pub const ETA_TOL: f64 = 1e-12;
/// Minimum eta width for a limit set to count as a genuine interval.
pub const MIN_INTERVAL_WIDTH: f64 = 1e-8;
/// Eigenvalues of modulus below this count as zero in spectrum reports.
pub const SPECTRUM_ZERO_TOL: f64 = 1e-8;
/// Maximum imaginary part tolerated by the interior realness check.
pub const REALNESS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum EquilibriaError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("support {support:?} is not a vertex cover; its face is empty")]
    NotACover { support: Vec<usize> },
    #[error(
        "face maximization on support {support:?} did not converge within {iterations} \
         iterations (last residual {residual:e})"
    )]
    FailedToConverge {
        support: Vec<usize>,
        iterations: usize,
        residual: f64,
    },
    #[error("point is not an equilibrium: ||F||_inf = {residual:e} exceeds {RESIDUAL_TOL:e}")]
    NotAnEquilibrium { residual: f64 },
    #[error("point is not a non-unstable equilibrium")]
    NotNonUnstable,
    #[error("no non-unstable equilibrium found; the solver missed one (theory guarantees existence)")]
    NoNonUnstable,
    #[error(
        "{count} disjoint non-unstable limit sets found; theory guarantees uniqueness, \
         so this signals a solver bug"
    )]
    MultipleNonUnstable { count: usize },
    #[error(
        "limit set is an interval but a non-unstable equilibrium has gradient component \
         {value:e} at vertex {vertex}; contradicts the flat-gradient characterization"
    )]
    GradientNotFlat { vertex: usize, value: f64 },
    #[error("tangent spectrum failed the symmetric cross-check: {detail}")]
    SpectrumMismatch { detail: String },
}

/// Stability of an equilibrium: unstable iff the Jacobian has an eigenvalue
/// with positive real part, which reduces to a positive off-support
/// gradient component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Unstable,
    NonUnstable,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Stability::Unstable => write!(f, "unstable"),
            Stability::NonUnstable => write!(f, "non-unstable"),
        }
    }
}

/// A zero of the vector field together with its support, gradient and
/// stability tag. For a balanced bipartite graph whose equilibria form a
/// continuum, the continuum appears as a single record (see
/// [`enumerate_equilibria`]).
#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub point: SimplexPoint,
    /// 0-based sorted vertex indices with positive coordinates.
    pub support: Vec<usize>,
    pub gradient: Vec<f64>,
    pub stability: Stability,
    /// True when some off-support gradient lies in `(-1e-8, 1e-8]`: the
    /// classification is NonUnstable by the weak inequality, but the margin
    /// is below resolution.
    pub marginal: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Singleton,
    Interval,
}

/// The limit set: either a single point or the closed segment
/// `{base + eta * direction : eta in [eta_minus, eta_plus]}` where
/// `direction` is +1 on one part of the bipartition and -1 on the other.
#[derive(Debug, Clone)]
pub struct LimitSet {
    pub kind: LimitKind,
    pub base: SimplexPoint,
    pub direction: Vec<f64>,
    pub eta_range: (f64, f64),
    pub endpoints: (SimplexPoint, SimplexPoint),
}

impl LimitSet {
    fn singleton(base: SimplexPoint) -> Self {
        let m = base.dim();
        LimitSet {
            kind: LimitKind::Singleton,
            endpoints: (base.clone(), base.clone()),
            base,
            direction: vec![0.0; m],
            eta_range: (0.0, 0.0),
        }
    }

    /// Parameter of the orthogonal projection of `x` onto the segment,
    /// clamped to the eta range. Zero for singletons.
    pub fn eta_of(&self, x: &[f64]) -> f64 {
        let dd: f64 = self.direction.iter().map(|d| d * d).sum();
        if dd == 0.0 {
            return 0.0;
        }
        let dot: f64 = x
            .iter()
            .zip(self.base.coords())
            .zip(&self.direction)
            .map(|((xi, bi), di)| (xi - bi) * di)
            .sum();
        (dot / dd).clamp(self.eta_range.0, self.eta_range.1)
    }

    /// Closest point of the limit set (projection clamped to the segment).
    pub fn nearest_point(&self, x: &[f64]) -> Vec<f64> {
        let eta = self.eta_of(x);
        self.base
            .coords()
            .iter()
            .zip(&self.direction)
            .map(|(b, d)| b + eta * d)
            .collect()
    }

    pub fn inf_distance(&self, x: &[f64]) -> f64 {
        inf_distance(x, &self.nearest_point(x))
    }

    pub fn euclid_distance(&self, x: &[f64]) -> f64 {
        dynamics::euclid_distance(x, &self.nearest_point(x))
    }
}

/// Eigenvalues of the Jacobian restricted to the sum-zero tangent space.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// `m - 1` eigenvalues, sorted by real part descending.
    pub eigenvalues: Vec<Complex<f64>>,
    pub max_imag: f64,
    /// Count of eigenvalues with modulus below [`SPECTRUM_ZERO_TOL`].
    pub zero_count: usize,
}

/// Euclidean projection onto the standard simplex, in place.
fn project_simplex(x: &mut [f64]) {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &xj) in sorted.iter().enumerate() {
        acc += xj;
        let candidate = (acc - 1.0) / (j + 1) as f64;
        if xj - candidate > 0.0 {
            theta = candidate;
        }
    }
    for xi in x.iter_mut() {
        *xi = (*xi - theta).max(0.0);
    }
}

fn embed(m: usize, support: &[usize], xs: &[f64]) -> Vec<f64> {
    let mut full = vec![0.0; m];
    for (&i, &v) in support.iter().zip(xs) {
        full[i] = v;
    }
    full
}

fn is_cover(g: &Graph, support: &[usize]) -> bool {
    let mut mask = vec![false; g.vertex_count()];
    for &i in support {
        mask[i] = true;
    }
    g.edges().iter().all(|&(u, v)| mask[u] || mask[v])
}

/// Maximizes `L` over the closed face `{v : v_i = 0 for i not in support}`
/// by projected gradient ascent with backtracking line search. The returned
/// point's actual support may be a strict subset of the requested one
/// (maximizer on the relative boundary).
///
/// Returns `None` if the face carries no point of the domain (cannot happen
/// for vertex covers with the default floor, but a user-supplied `c` close
/// to `1/N` is honored).
pub fn maximize_on_face(
    g: &Graph,
    dom: &DomainParams,
    support: &[usize],
    tol: f64,
) -> Result<Option<SimplexPoint>, EquilibriaError> {
    if support.is_empty() || !is_cover(g, support) {
        return Err(EquilibriaError::NotACover {
            support: support.to_vec(),
        });
    }
    let m = g.vertex_count();
    let k = support.len();
    let mut xs = vec![1.0 / k as f64; k];
    let mut l_cur = dynamics::lyapunov_or_neg_inf(g, &embed(m, support, &xs));
    debug_assert!(l_cur.is_finite(), "cover face has finite L at its center");
    let mut warm_step = 1.0f64;
    let mut residual = f64::INFINITY;
    // Near a maximizer with a degenerate boundary contact, function-value
    // differences drop below f64 resolution while the gradient is still
    // informative; from then on a fixed step bounded by the local curvature
    // ascends without consulting L (descent lemma).
    let mut blind_step: Option<f64> = None;

    for iter in 0..FACE_MAX_ITERS {
        let full = embed(m, support, &xs);
        let grad_full = dynamics::grad_lyapunov_raw(g, &full)?;
        let grad: Vec<f64> = support.iter().map(|&i| grad_full[i]).collect();

        // stationarity measure: unit-step gradient mapping
        let mut mapped: Vec<f64> = xs.iter().zip(&grad).map(|(x, gi)| x + gi).collect();
        project_simplex(&mut mapped);
        residual = mapped
            .iter()
            .zip(&xs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= tol {
            let point = finish_face_point(m, support, &xs);
            if dom.violated_edge(g, point.coords()).is_some() {
                return Ok(None);
            }
            return Ok(Some(point));
        }

        if let Some(step) = blind_step {
            if iter % 512 == 0 {
                blind_step = Some(curvature_step(g, support, &full));
            }
            let mut cand: Vec<f64> = xs.iter().zip(&grad).map(|(x, gi)| x + step * gi).collect();
            project_simplex(&mut cand);
            xs = cand;
            continue;
        }

        // backtracking line search along the projection arc
        let mut step = warm_step;
        let mut advanced = false;
        while step >= 1e-18 {
            let mut cand: Vec<f64> = xs.iter().zip(&grad).map(|(x, gi)| x + step * gi).collect();
            project_simplex(&mut cand);
            let expected_gain: f64 = grad
                .iter()
                .zip(&cand)
                .zip(&xs)
                .map(|((gi, c), x)| gi * (c - x))
                .sum();
            // gain > 0 iff the step actually moves; a floor that rounds
            // back to l_cur means f64 function values can no longer
            // certify progress either way
            let floor = l_cur + 1e-4 * expected_gain;
            if expected_gain <= 0.0 || floor == l_cur {
                break;
            }
            let l_cand = dynamics::lyapunov_or_neg_inf(g, &embed(m, support, &cand));
            if l_cand.is_finite() && l_cand >= floor {
                xs = cand;
                l_cur = l_cand;
                warm_step = (step * 2.0).min(1e3);
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            blind_step = Some(curvature_step(g, support, &full));
        }
    }
    Err(EquilibriaError::FailedToConverge {
        support: support.to_vec(),
        iterations: FACE_MAX_ITERS,
        residual,
    })
}

/// Safe fixed step for projected gradient ascent: half the reciprocal of a
/// Gershgorin bound on the support-restricted Hessian norm.
fn curvature_step(g: &Graph, support: &[usize], full: &[f64]) -> f64 {
    let hess = hessian(g, full);
    let bound = support
        .iter()
        .map(|&i| support.iter().map(|&j| hess[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    0.5 / bound.max(1.0)
}

fn finish_face_point(m: usize, support: &[usize], xs: &[f64]) -> SimplexPoint {
    let mut full = embed(m, support, xs);
    for v in &mut full {
        if *v < 1e-13 {
            *v = 0.0;
        }
    }
    SimplexPoint::new(full).expect("projected iterate stays on the simplex")
}

pub(crate) fn support_of(v: &[f64]) -> Vec<usize> {
    (0..v.len()).filter(|&i| v[i] > SUPPORT_EPS).collect()
}

/// Stability via the off-support gradient sign test. Errors unless `w` is
/// an equilibrium.
pub fn classify(g: &Graph, w: &SimplexPoint) -> Result<Stability, EquilibriaError> {
    let f = dynamics::vector_field_raw(g, w.coords())?;
    let residual = f.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if residual > RESIDUAL_TOL {
        return Err(EquilibriaError::NotAnEquilibrium { residual });
    }
    let grad = dynamics::grad_lyapunov_raw(g, w.coords())?;
    let support = support_of(w.coords());
    let unstable = (0..w.dim())
        .filter(|i| !support.contains(i))
        .any(|i| grad[i] > UNSTABLE_GRADIENT_TOL);
    Ok(if unstable {
        Stability::Unstable
    } else {
        Stability::NonUnstable
    })
}

fn build_record(g: &Graph, point: SimplexPoint) -> Result<Equilibrium, EquilibriaError> {
    let stability = classify(g, &point)?;
    let gradient = dynamics::grad_lyapunov_raw(g, point.coords())?;
    let support = support_of(point.coords());
    let marginal = (0..point.dim())
        .filter(|i| !support.contains(i))
        .any(|i| gradient[i] > -UNSTABLE_GRADIENT_TOL && gradient[i] <= UNSTABLE_GRADIENT_TOL);
    Ok(Equilibrium {
        point,
        support,
        gradient,
        stability,
        marginal,
    })
}

/// Enumerates all equilibria by maximizing `L` over every vertex-cover
/// face, recording each maximizer under its actual support and
/// deduplicating coincident points. When the graph is balanced bipartite
/// and the equilibria contain a continuum, the whole continuum is merged
/// into a single record.
pub fn enumerate_equilibria(
    g: &Graph,
    dom: &DomainParams,
) -> Result<Vec<Equilibrium>, EquilibriaError> {
    let covers = g.vertex_covers(DEFAULT_COVER_CAP)?;
    let maximizers: Vec<Option<SimplexPoint>> = covers
        .par_iter()
        .map(|s| maximize_on_face(g, dom, s, FACE_TOL))
        .collect::<Result<_, _>>()?;

    let mut unique: Vec<SimplexPoint> = Vec::new();
    for point in maximizers.into_iter().flatten() {
        if !unique
            .iter()
            .any(|p| p.inf_distance(point.coords()) < DEDUP_TOL)
        {
            unique.push(point);
        }
    }

    let mut records = unique
        .into_iter()
        .map(|p| build_record(g, p))
        .collect::<Result<Vec<_>, _>>()?;

    // A balanced bipartite graph can carry an interval of equilibria; all
    // records on it collapse into one, represented by the largest-support
    // member (the most interior one).
    if g.classify_bipartiteness().is_balanced_bipartite() {
        let interval = records
            .iter()
            .filter(|e| e.stability == Stability::NonUnstable)
            .find_map(|e| match compute_interval(g, dom, &e.point) {
                Ok(ls) if ls.kind == LimitKind::Interval => Some(ls),
                _ => None,
            });
        if let Some(interval) = interval {
            let mut on_interval: Vec<usize> = (0..records.len())
                .filter(|&i| interval.inf_distance(records[i].point.coords()) < DEDUP_TOL)
                .collect();
            if on_interval.len() > 1 {
                on_interval.sort_by_key(|&i| std::cmp::Reverse(records[i].support.len()));
                let keep = on_interval[0];
                let mut idx = 0;
                records.retain(|_| {
                    let drop = on_interval.contains(&idx) && idx != keep;
                    idx += 1;
                    !drop
                });
            }
        }
    }

    records.sort_by(|a, b| {
        a.support
            .len()
            .cmp(&b.support.len())
            .then_with(|| a.support.cmp(&b.support))
            .then_with(|| {
                a.point
                    .coords()
                    .partial_cmp(b.point.coords())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
    });
    Ok(records)
}

/// Second derivatives of `L`: `(d2L)_ij = -(1/N)/(v_i+v_j)^2` for adjacent
/// `i != j`, zero for non-adjacent, and the diagonal sums the incident
/// edge terms.
pub(crate) fn hessian(g: &Graph, v: &[f64]) -> DMatrix<f64> {
    let m = g.vertex_count();
    let n = g.edge_count() as f64;
    let mut h = DMatrix::zeros(m, m);
    for &(u, w) in g.edges() {
        let term = -1.0 / (n * (v[u] + v[w]) * (v[u] + v[w]));
        h[(u, w)] += term;
        h[(w, u)] += term;
        h[(u, u)] += term;
        h[(w, w)] += term;
    }
    h
}

/// The Jacobian of `F` at `w`: off-diagonal `w_i * (d2L)_ij`, diagonal
/// `dL_i + w_i * (d2L)_ii`. A row with `w_i = 0` is diagonal with entry
/// `dL_i(w)`.
pub fn jacobian(g: &Graph, w: &SimplexPoint) -> Result<DMatrix<f64>, EquilibriaError> {
    let v = w.coords();
    let grad = dynamics::grad_lyapunov_raw(g, v)?;
    let hess = hessian(g, v);
    let m = g.vertex_count();
    let mut j = DMatrix::zeros(m, m);
    for i in 0..m {
        for l in 0..m {
            j[(i, l)] = v[i] * hess[(i, l)];
        }
        j[(i, i)] += grad[i];
    }
    Ok(j)
}

/// Orthonormal basis of the sum-zero subspace, as columns of an
/// `m x (m-1)` matrix.
fn sum_zero_basis(m: usize) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(m, m);
    for i in 0..m {
        a[(i, 0)] = 1.0;
    }
    for j in 1..m {
        a[(j - 1, j)] = 1.0;
    }
    let q = a.qr().q();
    q.columns(1, m - 1).into_owned()
}

/// Spectrum of the Jacobian on the sum-zero tangent space.
///
/// For an interior equilibrium the Jacobian is similar to the symmetric
/// matrix `D^(1/2) * d2L * D^(1/2)` with `D = diag(w)`; its spectrum is
/// recomputed along that route and must agree, which also certifies that
/// the eigenvalues are real.
pub fn tangent_spectrum(g: &Graph, w: &SimplexPoint) -> Result<SpectrumReport, EquilibriaError> {
    let m = g.vertex_count();
    let jac = jacobian(g, w)?;
    let q = sum_zero_basis(m);
    let projected = q.transpose() * &jac * &q;
    let mut eigenvalues: Vec<Complex<f64>> =
        projected.complex_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(|a, b| {
        b.re.partial_cmp(&a.re)
            .unwrap()
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    let max_imag = eigenvalues.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let zero_count = eigenvalues
        .iter()
        .filter(|z| z.norm() < SPECTRUM_ZERO_TOL)
        .count();

    let interior = w.coords().iter().all(|&x| x > SUPPORT_EPS);
    if interior {
        if max_imag > REALNESS_TOL {
            return Err(EquilibriaError::SpectrumMismatch {
                detail: format!("imaginary part {max_imag:e} at an interior equilibrium"),
            });
        }
        let mut sym = hessian(g, w.coords());
        for i in 0..m {
            for l in 0..m {
                sym[(i, l)] *= (w[i] * w[l]).sqrt();
            }
        }
        let mut full: Vec<f64> = nalgebra::SymmetricEigen::new(sym)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        // the full spectrum carries one extra eigenvalue, exactly -1, in the
        // direction transverse to the simplex
        let closest = (0..full.len())
            .min_by(|&a, &b| {
                (full[a] + 1.0)
                    .abs()
                    .partial_cmp(&(full[b] + 1.0).abs())
                    .unwrap()
            })
            .expect("m >= 1");
        full.remove(closest);
        full.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (tangent, expected) in eigenvalues.iter().zip(&full) {
            if (tangent.re - expected).abs() > 1e-7 {
                return Err(EquilibriaError::SpectrumMismatch {
                    detail: format!(
                        "projected route gives {} where the symmetric route gives {}",
                        tangent.re, expected
                    ),
                });
            }
        }
    }

    Ok(SpectrumReport {
        eigenvalues,
        max_imag,
        zero_count,
    })
}

/// Builds the maximal limit interval through the non-unstable equilibrium
/// `w`. Non-balanced-bipartite graphs always give a singleton. Otherwise
/// eta is pushed to the domain boundary by bisection in the bipartition
/// direction, and the segment is kept only if it actually consists of
/// equilibria (the field is checked at both endpoints and the midpoint).
pub fn compute_interval(
    g: &Graph,
    dom: &DomainParams,
    w: &SimplexPoint,
) -> Result<LimitSet, EquilibriaError> {
    if classify(g, w)? != Stability::NonUnstable {
        return Err(EquilibriaError::NotNonUnstable);
    }
    let class = g.classify_bipartiteness();
    let BipartiteClass::BalancedBipartite { a, .. } = class else {
        return Ok(LimitSet::singleton(w.clone()));
    };
    let m = g.vertex_count();
    let mut direction = vec![-1.0; m];
    for &i in &a {
        direction[i] = 1.0;
    }

    let shifted = |eta: f64| -> Vec<f64> {
        w.coords()
            .iter()
            .zip(&direction)
            .map(|(x, d)| x + eta * d)
            .collect()
    };
    let feasible = |eta: f64| -> bool {
        let v = shifted(eta);
        v.iter().all(|&x| x >= -1e-15) && dom.violated_edge(g, &v).is_none()
    };
    let push = |sign: f64| -> f64 {
        let mut lo = 0.0;
        let mut hi = 1.0;
        if feasible(sign * hi) {
            return sign * hi; // cannot happen on the simplex; defensive
        }
        while hi - lo > ETA_TOL {
            let mid = 0.5 * (lo + hi);
            if feasible(sign * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        sign * lo
    };
    let eta_plus = push(1.0);
    let eta_minus = push(-1.0);

    let snap_point = |eta: f64| -> SimplexPoint {
        let mut v = shifted(eta);
        for x in &mut v {
            if x.abs() < 1e-11 {
                *x = 0.0;
            }
        }
        SimplexPoint::new(v).expect("shifted point stays on the simplex")
    };
    let is_equilibrium = |p: &SimplexPoint| -> Result<bool, EquilibriaError> {
        let f = dynamics::vector_field_raw(g, p.coords())?;
        Ok(f.iter().all(|x| x.abs() <= RESIDUAL_TOL))
    };

    let upper = snap_point(eta_plus);
    let lower = snap_point(eta_minus);
    let midpoint = snap_point(0.5 * (eta_plus + eta_minus));
    let genuine = eta_plus - eta_minus > MIN_INTERVAL_WIDTH
        && is_equilibrium(&upper)?
        && is_equilibrium(&lower)?
        && is_equilibrium(&midpoint)?;
    if !genuine {
        return Ok(LimitSet::singleton(w.clone()));
    }
    Ok(LimitSet {
        kind: LimitKind::Interval,
        base: w.clone(),
        direction,
        eta_range: (eta_minus, eta_plus),
        endpoints: (lower, upper),
    })
}

/// Predicts the almost-sure limit set: enumerate equilibria, keep the
/// non-unstable ones, and require that exactly one maximal point/interval
/// survives. An interval additionally demands flat gradients on every
/// non-unstable equilibrium.
pub fn predict_limit(g: &Graph, dom: &DomainParams) -> Result<LimitSet, EquilibriaError> {
    let records = enumerate_equilibria(g, dom)?;
    let non_unstable: Vec<&Equilibrium> = records
        .iter()
        .filter(|e| e.stability == Stability::NonUnstable)
        .collect();
    if non_unstable.is_empty() {
        return Err(EquilibriaError::NoNonUnstable);
    }
    // prefer the most interior representative as the base point
    let base = non_unstable
        .iter()
        .max_by_key(|e| e.support.len())
        .unwrap();
    let limit = compute_interval(g, dom, &base.point)?;
    let stray = non_unstable
        .iter()
        .filter(|e| limit.inf_distance(e.point.coords()) > DEDUP_TOL)
        .count();
    if stray > 0 {
        return Err(EquilibriaError::MultipleNonUnstable { count: stray + 1 });
    }
    if limit.kind == LimitKind::Interval {
        for e in &non_unstable {
            for (i, &gi) in e.gradient.iter().enumerate() {
                if gi.abs() > 1e-7 {
                    return Err(EquilibriaError::GradientNotFlat {
                        vertex: i + 1,
                        value: gi,
                    });
                }
            }
        }
    }
    Ok(limit)
}

/// Warnings for equilibria sitting suspiciously close to the edge-sum
/// floor (within `2c`), where the floor choice could be distorting the
/// picture.
pub fn boundary_warnings(g: &Graph, dom: &DomainParams, records: &[Equilibrium]) -> Vec<String> {
    let mut warnings = Vec::new();
    for e in records {
        let v = e.point.coords();
        for &(u, w) in g.edges() {
            let sum = v[u] + v[w];
            if sum < 3.0 * dom.c() {
                warnings.push(format!(
                    "equilibrium with support {:?} has edge {{{}, {}}} sum {:.3e} within 2c of the floor c = {:.3e}",
                    e.support.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    u + 1,
                    w + 1,
                    sum,
                    dom.c()
                ));
            }
        }
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::parse_edge_list;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn triangle() -> Graph {
        parse_edge_list("1 2\n2 3\n1 3").unwrap()
    }

    fn k2() -> Graph {
        parse_edge_list("1 2").unwrap()
    }

    fn c4() -> Graph {
        parse_edge_list("1 2\n2 3\n3 4\n4 1").unwrap()
    }

    fn c6() -> Graph {
        parse_edge_list("1 2\n2 3\n3 4\n4 5\n5 6\n6 1").unwrap()
    }

    fn k32() -> Graph {
        parse_edge_list("1 4\n1 5\n2 4\n2 5\n3 4\n3 5").unwrap()
    }

    fn k4() -> Graph {
        parse_edge_list("1 2\n1 3\n1 4\n2 3\n2 4\n3 4").unwrap()
    }

    fn pt(v: &[f64]) -> SimplexPoint {
        SimplexPoint::new(v.to_vec()).unwrap()
    }

    fn solve(g: &Graph, support: &[usize]) -> SimplexPoint {
        let dom = DomainParams::default_for(g);
        maximize_on_face(g, &dom, support, FACE_TOL)
            .unwrap()
            .expect("face is feasible")
    }

    #[test]
    fn projection_onto_simplex() {
        let mut x = vec![0.8, 0.8];
        project_simplex(&mut x);
        assert_relative_eq!(x[0], 0.5, epsilon = 1e-15);
        let mut y = vec![2.0, -1.0, 0.0];
        project_simplex(&mut y);
        assert_relative_eq!(y[0], 1.0, epsilon = 1e-15);
        assert_eq!(&y[1..], &[0.0, 0.0]);
        let mut z = vec![0.2, 0.3, 0.5];
        let orig = z.clone();
        project_simplex(&mut z);
        for (a, b) in z.iter().zip(&orig) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn face_maximum_triangle_full() {
        let got = solve(&triangle(), &[0, 1, 2]);
        assert!(got.inf_distance(&[1.0 / 3.0; 3]) < 1e-9);
    }

    #[test]
    fn face_maximum_triangle_edge() {
        // on the face v3 = 0: L = -1 + (ln 1 + ln v1 + ln v2)/3, maximal at
        // v1 = v2 = 1/2
        let got = solve(&triangle(), &[0, 1]);
        assert!(got.inf_distance(&[0.5, 0.5, 0.0]) < 1e-9);
    }

    #[test]
    fn face_maximum_c4_diagonal() {
        // L on the face is (2 ln v1 + 2 ln v3)/4 - 1, maximal at 1/2, 1/2
        let got = solve(&c4(), &[0, 2]);
        assert!(got.inf_distance(&[0.5, 0.0, 0.5, 0.0]) < 1e-9);
    }

    #[test]
    fn face_maximum_lands_on_relative_boundary() {
        // the maximizer over the face {1,2,3} of C4 pushes v2 to zero
        let got = solve(&c4(), &[0, 1, 2]);
        assert!(got.inf_distance(&[0.5, 0.0, 0.5, 0.0]) < 1e-8);
    }

    #[test]
    fn face_requires_cover() {
        let g = triangle();
        let dom = DomainParams::default_for(&g);
        assert!(matches!(
            maximize_on_face(&g, &dom, &[0], FACE_TOL),
            Err(EquilibriaError::NotACover { .. })
        ));
    }

    #[test]
    fn face_maxima_are_equilibria() {
        for g in [triangle(), k2(), c4(), c6(), k32(), k4()] {
            let dom = DomainParams::default_for(&g);
            for s in g.vertex_covers(DEFAULT_COVER_CAP).unwrap() {
                let p = maximize_on_face(&g, &dom, &s, FACE_TOL).unwrap().unwrap();
                let f = dynamics::vector_field_raw(&g, p.coords()).unwrap();
                let res = f.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
                assert!(res <= RESIDUAL_TOL, "residual {res:e} on face {s:?}");
            }
        }
    }

    /// Grid oracle: on every fixture face with at most 3 free coordinates,
    /// a 0.01-step sweep never beats the reported maximum by more than
    /// 1e-6.
    #[test]
    fn face_maxima_beat_dense_grids() {
        for g in [triangle(), k2(), c4(), c6(), k32(), k4()] {
            let dom = DomainParams::default_for(&g);
            for support in g.vertex_covers(DEFAULT_COVER_CAP).unwrap() {
                if support.len() > 3 {
                    continue;
                }
                let best = maximize_on_face(&g, &dom, &support, FACE_TOL)
                    .unwrap()
                    .unwrap();
                let l_best = dynamics::lyapunov_raw(&g, best.coords()).unwrap();
                let steps = 100usize;
                let mut beaten_by = f64::NEG_INFINITY;
                let mut sweep = |cells: &[usize]| {
                    let mut v = vec![0.0; g.vertex_count()];
                    for (&i, &k) in support.iter().zip(cells) {
                        v[i] = k as f64 / steps as f64;
                    }
                    if dom.violated_edge(&g, &v).is_none() {
                        if let Ok(l) = dynamics::lyapunov_raw(&g, &v) {
                            beaten_by = beaten_by.max(l - l_best);
                        }
                    }
                };
                match support.len() {
                    1 => sweep(&[steps]),
                    2 => {
                        for a in 0..=steps {
                            sweep(&[a, steps - a]);
                        }
                    }
                    _ => {
                        for a in 0..=steps {
                            for b in 0..=(steps - a) {
                                sweep(&[a, b, steps - a - b]);
                            }
                        }
                    }
                }
                assert!(
                    beaten_by <= 1e-6,
                    "grid beats the maximizer by {beaten_by:e} on face {support:?}"
                );
            }
        }
    }

    #[test]
    fn classify_examples() {
        let g = triangle();
        // dL_3 at (1/2,1/2,0) is -1 + (2+2)/3 = 1/3 > 0
        assert_eq!(
            classify(&g, &pt(&[0.5, 0.5, 0.0])).unwrap(),
            Stability::Unstable
        );
        assert_eq!(
            classify(&g, &SimplexPoint::uniform(3)).unwrap(),
            Stability::NonUnstable
        );
        assert_eq!(
            classify(&k32(), &pt(&[0.0, 0.0, 0.0, 0.5, 0.5])).unwrap(),
            Stability::NonUnstable
        );
        assert!(matches!(
            classify(&g, &pt(&[0.6, 0.3, 0.1])),
            Err(EquilibriaError::NotAnEquilibrium { .. })
        ));
    }

    #[test]
    fn census_triangle() {
        let g = triangle();
        let dom = DomainParams::default_for(&g);
        let eqs = enumerate_equilibria(&g, &dom).unwrap();
        assert_eq!(eqs.len(), 4);
        let non_unstable: Vec<_> = eqs
            .iter()
            .filter(|e| e.stability == Stability::NonUnstable)
            .collect();
        assert_eq!(non_unstable.len(), 1);
        assert!(non_unstable[0].point.inf_distance(&[1.0 / 3.0; 3]) < 1e-9);
        for expected in [
            [0.5, 0.5, 0.0],
            [0.5, 0.0, 0.5],
            [0.0, 0.5, 0.5],
        ] {
            assert!(
                eqs.iter().any(|e| e.stability == Stability::Unstable
                    && e.point.inf_distance(&expected) < 1e-9),
                "missing unstable equilibrium {expected:?}"
            );
        }
    }

    #[test]
    fn census_k32_contains_limit() {
        let g = k32();
        let dom = DomainParams::default_for(&g);
        let eqs = enumerate_equilibria(&g, &dom).unwrap();
        assert!(eqs.iter().any(|e| {
            e.stability == Stability::NonUnstable
                && e.point.inf_distance(&[0.0, 0.0, 0.0, 0.5, 0.5]) < 1e-9
        }));
    }

    #[test]
    fn census_k2_collapses_to_one_record() {
        let g = k2();
        let dom = DomainParams::default_for(&g);
        let eqs = enumerate_equilibria(&g, &dom).unwrap();
        assert_eq!(eqs.len(), 1);
        assert_eq!(eqs[0].stability, Stability::NonUnstable);
    }

    #[test]
    fn equilibrium_invariants_hold_on_fixtures() {
        for g in [triangle(), k2(), c4(), c6(), k32(), k4()] {
            let dom = DomainParams::default_for(&g);
            for e in enumerate_equilibria(&g, &dom).unwrap() {
                for &i in &e.support {
                    assert!(e.gradient[i].abs() <= 1e-8);
                }
                let f = dynamics::vector_field_raw(&g, e.point.coords()).unwrap();
                assert!(f.iter().all(|x| x.abs() <= 1e-8));
                let has_positive_off = (0..e.point.dim())
                    .filter(|i| !e.support.contains(i))
                    .any(|i| e.gradient[i] > 1e-8);
                assert_eq!(e.stability == Stability::Unstable, has_positive_off);
            }
        }
    }

    #[test]
    fn jacobian_triangle_uniform() {
        // dL = 0, edge sums 2/3: diagonal -1/2, off-diagonal -1/4
        let j = jacobian(&triangle(), &SimplexPoint::uniform(3)).unwrap();
        for i in 0..3 {
            for l in 0..3 {
                let expected = if i == l { -0.5 } else { -0.25 };
                assert_relative_eq!(j[(i, l)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobian_c4_uniform_is_scaled_circulant() {
        let j = jacobian(&c4(), &SimplexPoint::uniform(4)).unwrap();
        let row = [-0.5, -0.25, 0.0, -0.25];
        for i in 0..4 {
            for l in 0..4 {
                assert_relative_eq!(j[(i, l)], row[(4 + l - i) % 4], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn jacobian_zero_coordinate_row_is_diagonal() {
        let g = k32();
        let w = pt(&[0.0, 0.0, 0.0, 0.5, 0.5]);
        let j = jacobian(&g, &w).unwrap();
        let grad = dynamics::grad_lyapunov_raw(&g, w.coords()).unwrap();
        for i in 0..3 {
            for l in 0..5 {
                let expected = if i == l { grad[i] } else { 0.0 };
                assert_relative_eq!(j[(i, l)], expected, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn spectrum_c4_uniform() {
        let g = c4();
        let w = SimplexPoint::uniform(4);
        let rep = tangent_spectrum(&g, &w).unwrap();
        assert_eq!(rep.eigenvalues.len(), 3);
        assert_relative_eq!(rep.eigenvalues[0].re, 0.0, epsilon = 1e-10);
        assert_relative_eq!(rep.eigenvalues[1].re, -0.5, epsilon = 1e-10);
        assert_relative_eq!(rep.eigenvalues[2].re, -0.5, epsilon = 1e-10);
        assert!(rep.max_imag < 1e-9);
        assert_eq!(rep.zero_count, 1);
        // the kernel direction alternates with the bipartition
        let j = jacobian(&g, &w).unwrap();
        let kernel = nalgebra::DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0]);
        assert!((j * kernel).amax() < 1e-14);
    }

    #[test]
    fn spectrum_triangle_uniform_is_negative() {
        let rep = tangent_spectrum(&triangle(), &SimplexPoint::uniform(3)).unwrap();
        assert_eq!(rep.eigenvalues.len(), 2);
        for z in &rep.eigenvalues {
            assert_relative_eq!(z.re, -0.25, epsilon = 1e-10);
        }
        assert_eq!(rep.zero_count, 0);
        assert!(rep.max_imag < 1e-9);
    }

    #[test]
    fn spectrum_real_along_interval() {
        let g = c4();
        for p in [0.1, 0.25, 0.35] {
            let w = pt(&[p, 0.5 - p, p, 0.5 - p]);
            let rep = tangent_spectrum(&g, &w).unwrap();
            assert!(rep.max_imag < 1e-9);
            assert_eq!(rep.zero_count, 1, "at p = {p}: {:?}", rep.eigenvalues);
        }
    }

    #[test]
    fn interval_c4() {
        let g = c4();
        let dom = DomainParams::default_for(&g);
        let ls = compute_interval(&g, &dom, &SimplexPoint::uniform(4)).unwrap();
        assert_eq!(ls.kind, LimitKind::Interval);
        assert!(ls.endpoints.0.inf_distance(&[0.0, 0.5, 0.0, 0.5]) < 1e-9);
        assert!(ls.endpoints.1.inf_distance(&[0.5, 0.0, 0.5, 0.0]) < 1e-9);
        assert_relative_eq!(ls.eta_range.0, -0.25, epsilon = 1e-9);
        assert_relative_eq!(ls.eta_range.1, 0.25, epsilon = 1e-9);
    }

    #[test]
    fn interval_c4_from_endpoint_recovers_the_segment() {
        let g = c4();
        let dom = DomainParams::default_for(&g);
        let ls = compute_interval(&g, &dom, &pt(&[0.5, 0.0, 0.5, 0.0])).unwrap();
        assert_eq!(ls.kind, LimitKind::Interval);
        assert!(ls.endpoints.0.inf_distance(&[0.0, 0.5, 0.0, 0.5]) < 1e-9);
        assert!(ls.endpoints.1.inf_distance(&[0.5, 0.0, 0.5, 0.0]) < 1e-9);
    }

    #[test]
    fn interval_triangle_is_singleton() {
        let g = triangle();
        let dom = DomainParams::default_for(&g);
        let ls = compute_interval(&g, &dom, &SimplexPoint::uniform(3)).unwrap();
        assert_eq!(ls.kind, LimitKind::Singleton);
        assert_eq!(ls.eta_range, (0.0, 0.0));
    }

    #[test]
    fn interval_k2_spans_the_simplex() {
        let g = k2();
        let dom = DomainParams::default_for(&g);
        let ls = compute_interval(&g, &dom, &SimplexPoint::uniform(2)).unwrap();
        assert_eq!(ls.kind, LimitKind::Interval);
        assert!(ls.endpoints.0.inf_distance(&[0.0, 1.0]) < 1e-9);
        assert!(ls.endpoints.1.inf_distance(&[1.0, 0.0]) < 1e-9);
    }

    #[test]
    fn interval_rejects_unstable_base() {
        let g = triangle();
        let dom = DomainParams::default_for(&g);
        assert!(matches!(
            compute_interval(&g, &dom, &pt(&[0.5, 0.5, 0.0])),
            Err(EquilibriaError::NotNonUnstable)
        ));
    }

    #[test]
    fn predict_triangle() {
        let g = triangle();
        let ls = predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
        assert_eq!(ls.kind, LimitKind::Singleton);
        assert!(ls.base.inf_distance(&[1.0 / 3.0; 3]) < 1e-8);
    }

    #[test]
    fn predict_k32() {
        let g = k32();
        let ls = predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
        assert_eq!(ls.kind, LimitKind::Singleton);
        assert!(ls.base.inf_distance(&[0.0, 0.0, 0.0, 0.5, 0.5]) < 1e-8);
    }

    #[test]
    fn predict_c4() {
        let g = c4();
        let ls = predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
        assert_eq!(ls.kind, LimitKind::Interval);
        let (lo, hi) = (&ls.endpoints.0, &ls.endpoints.1);
        assert!(lo.inf_distance(&[0.0, 0.5, 0.0, 0.5]) < 1e-8);
        assert!(hi.inf_distance(&[0.5, 0.0, 0.5, 0.0]) < 1e-8);
    }

    #[test]
    fn predict_c6() {
        let g = c6();
        let ls = predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
        assert_eq!(ls.kind, LimitKind::Interval);
        let third = 1.0 / 3.0;
        assert!(ls.endpoints.1.inf_distance(&[third, 0.0, third, 0.0, third, 0.0]) < 1e-8);
        assert!(ls.endpoints.0.inf_distance(&[0.0, third, 0.0, third, 0.0, third]) < 1e-8);
    }

    #[test]
    fn predict_k4() {
        let g = k4();
        let ls = predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
        assert_eq!(ls.kind, LimitKind::Singleton);
        assert!(ls.base.inf_distance(&[0.25; 4]) < 1e-8);
    }

    #[test]
    fn interval_members_are_equilibria_with_constant_gradient() {
        let g = c4();
        let dom = DomainParams::default_for(&g);
        let ls = predict_limit(&g, &dom).unwrap();
        let grad_at_base = dynamics::grad_lyapunov_raw(&g, ls.base.coords()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let eta = rng.random_range(ls.eta_range.0..=ls.eta_range.1);
            let v: Vec<f64> = ls
                .base
                .coords()
                .iter()
                .zip(&ls.direction)
                .map(|(b, d)| (b + eta * d).max(0.0))
                .collect();
            let f = dynamics::vector_field_raw(&g, &v).unwrap();
            assert!(f.iter().all(|x| x.abs() <= 1e-7));
            let grad = dynamics::grad_lyapunov_raw(&g, &v).unwrap();
            for (a, b) in grad.iter().zip(&grad_at_base) {
                assert!((a - b).abs() <= 1e-7);
            }
        }
    }

    #[test]
    fn classification_agrees_with_spectrum_sign() {
        for g in [triangle(), c4(), k32(), k4(), c6()] {
            let dom = DomainParams::default_for(&g);
            for e in enumerate_equilibria(&g, &dom).unwrap() {
                let rep = tangent_spectrum(&g, &e.point).unwrap();
                let max_re = rep.eigenvalues.iter().map(|z| z.re).fold(f64::MIN, f64::max);
                match e.stability {
                    Stability::Unstable => assert!(
                        max_re > 1e-8,
                        "unstable equilibrium lacks positive eigenvalue: {:?}",
                        rep.eigenvalues
                    ),
                    Stability::NonUnstable => assert!(
                        max_re <= 1e-8,
                        "non-unstable equilibrium has positive eigenvalue: {:?}",
                        rep.eigenvalues
                    ),
                }
            }
        }
    }

    #[test]
    fn limit_set_projection_helpers() {
        let g = c4();
        let dom = DomainParams::default_for(&g);
        let ls = predict_limit(&g, &dom).unwrap();
        // a point slightly off the midpoint projects back near eta = 0
        let x = [0.26, 0.24, 0.26, 0.24];
        assert!(ls.eta_of(&x).abs() < 0.02);
        assert!(ls.euclid_distance(&x) < 0.03);
        // far beyond the upper endpoint clamps to eta_plus
        let y = [0.6, 0.0, 0.4, 0.0];
        assert_relative_eq!(ls.eta_of(&y), ls.eta_range.1, epsilon = 1e-9);
    }

    #[test]
    fn no_boundary_warnings_on_fixtures() {
        for g in [triangle(), k2(), c4(), c6(), k32(), k4()] {
            let dom = DomainParams::default_for(&g);
            let eqs = enumerate_equilibria(&g, &dom).unwrap();
            assert!(boundary_warnings(&g, &dom, &eqs).is_empty());
        }
    }

    #[test]
    fn boundary_warning_fires_near_the_floor() {
        let g = c4();
        // c = 0.2 < 1/N = 0.25; endpoints have edge sums 1/2 > 3c = 0.6? no:
        // 0.5 < 0.6, so the warning fires
        let dom = DomainParams::new(0.2, &g).unwrap();
        let eqs = vec![build_record(&g, pt(&[0.5, 0.0, 0.5, 0.0])).unwrap()];
        assert!(!boundary_warnings(&g, &dom, &eqs).is_empty());
    }
}

