//! The deterministic side of the process: the constrained simplex domain,
//! the Lyapunov function `L`, its gradient, the vector field `F`, and the
//! semiflow obtained by fixed-step integration.
//!
//! On a graph with `N` edges and edge set `E`,
//!
//! ```text
//! L(v)   = -sum_i v_i + (1/N) * sum_{{i,j} in E} ln(v_i + v_j)
//! dL_i   = -1 + (1/N) * sum_{j ~ i} 1/(v_i + v_j)
//! F_i(v) = v_i * dL_i(v)
//! ```
//!
//! `F` points along the gradient of `L` weighted by the coordinates, so `L`
//! never decreases along orbits; its stationary points are exactly the
//! equilibria of `F`.

use rand::Rng;
use thiserror::Error;

use crate::graph::Graph;

/// Tolerance on `|sum(v) - 1|` for simplex membership.
pub const SIMPLEX_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error("vector has length {got}, graph has {expected} vertices")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("coordinate {index} is {value}, expected a nonnegative real")]
    NegativeCoordinate { index: usize, value: f64 },
    #[error("coordinates sum to {sum}, expected 1 within {SIMPLEX_SUM_TOL:e}")]
    NotNormalized { sum: f64 },
    #[error("edge {{{u}, {v}}} has nonpositive sum {sum}; outside the domain of L")]
    EdgeSumNonPositive { u: usize, v: usize, sum: f64 },
    #[error("edge-sum floor c = {c} must satisfy 0 < c < 1/N = {limit}")]
    InvalidFloor { c: f64, limit: f64 },
    #[error("orbit left the domain at t = {time}: edge {{{u}, {v}}} sum {sum} fell below c = {c}")]
    LeftDomain {
        time: f64,
        u: usize,
        v: usize,
        sum: f64,
        c: f64,
    },
    #[error("step size dt = {dt} must be positive")]
    InvalidStep { dt: f64 },
}

/// A probability vector: nonnegative coordinates summing to 1 within
/// [`SIMPLEX_SUM_TOL`]. Membership in the constrained domain additionally
/// requires the edge-sum floor, checked by [`DomainParams::check`].
#[derive(Debug, Clone, PartialEq)]
pub struct SimplexPoint(Vec<f64>);

impl SimplexPoint {
    pub fn new(v: Vec<f64>) -> Result<Self, DynamicsError> {
        for (index, &value) in v.iter().enumerate() {
            if value.is_nan() || value < 0.0 {
                return Err(DynamicsError::NegativeCoordinate { index, value });
            }
        }
        let sum: f64 = v.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(DynamicsError::NotNormalized { sum });
        }
        Ok(SimplexPoint(v))
    }

    pub fn uniform(m: usize) -> Self {
        SimplexPoint(vec![1.0 / m as f64; m])
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Largest absolute coordinate difference to another point.
    pub fn inf_distance(&self, other: &[f64]) -> f64 {
        inf_distance(&self.0, other)
    }
}

impl std::ops::Index<usize> for SimplexPoint {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl serde::Serialize for SimplexPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

pub(crate) fn inf_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub(crate) fn euclid_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// The edge-sum floor `c` defining the domain: points of the simplex with
/// `v_i + v_j >= c` on every edge. Any `0 < c < 1/N` works; the default
/// `c = 1/(100 N)` keeps every equilibrium well inside the floor while
/// preserving the Lipschitz bound on `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainParams {
    c: f64,
}

impl DomainParams {
    pub fn new(c: f64, g: &Graph) -> Result<Self, DynamicsError> {
        let limit = 1.0 / g.edge_count() as f64;
        if !(c > 0.0 && c < limit) {
            return Err(DynamicsError::InvalidFloor { c, limit });
        }
        Ok(DomainParams { c })
    }

    pub fn default_for(g: &Graph) -> Self {
        DomainParams {
            c: 1.0 / (100.0 * g.edge_count() as f64),
        }
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// Domain membership of a simplex point (edge-sum floor only; the
    /// simplex constraints are the point's own invariant).
    pub fn contains(&self, g: &Graph, v: &SimplexPoint) -> bool {
        self.violated_edge(g, v.coords()).is_none()
    }

    pub(crate) fn violated_edge(&self, g: &Graph, v: &[f64]) -> Option<(usize, usize, f64)> {
        g.edges().iter().find_map(|&(u, w)| {
            let sum = v[u] + v[w];
            (sum < self.c - 1e-12).then_some((u, w, sum))
        })
    }
}

fn check_dim(g: &Graph, v: &[f64]) -> Result<(), DynamicsError> {
    if v.len() != g.vertex_count() {
        return Err(DynamicsError::DimensionMismatch {
            got: v.len(),
            expected: g.vertex_count(),
        });
    }
    Ok(())
}

fn check_edge_sums(g: &Graph, v: &[f64]) -> Result<(), DynamicsError> {
    for &(u, w) in g.edges() {
        let sum = v[u] + v[w];
        if sum <= 0.0 {
            return Err(DynamicsError::EdgeSumNonPositive {
                u: u + 1,
                v: w + 1,
                sum,
            });
        }
    }
    Ok(())
}

pub(crate) fn lyapunov_raw(g: &Graph, v: &[f64]) -> Result<f64, DynamicsError> {
    check_dim(g, v)?;
    check_edge_sums(g, v)?;
    let n = g.edge_count() as f64;
    let log_sum: f64 = g.edges().iter().map(|&(u, w)| (v[u] + v[w]).ln()).sum();
    Ok(-v.iter().sum::<f64>() + log_sum / n)
}

/// `-inf` instead of an error on nonpositive edge sums; used by line
/// searches that probe outside the domain.
pub(crate) fn lyapunov_or_neg_inf(g: &Graph, v: &[f64]) -> f64 {
    let n = g.edge_count() as f64;
    let mut log_sum = 0.0;
    for &(u, w) in g.edges() {
        let sum = v[u] + v[w];
        if sum <= 0.0 {
            return f64::NEG_INFINITY;
        }
        log_sum += sum.ln();
    }
    -v.iter().sum::<f64>() + log_sum / n
}

pub(crate) fn grad_lyapunov_raw(g: &Graph, v: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    check_dim(g, v)?;
    check_edge_sums(g, v)?;
    let n = g.edge_count() as f64;
    let mut grad = vec![-1.0; g.vertex_count()];
    for &(u, w) in g.edges() {
        let recip = 1.0 / (v[u] + v[w]);
        grad[u] += recip / n;
        grad[w] += recip / n;
    }
    Ok(grad)
}

pub(crate) fn vector_field_raw(g: &Graph, v: &[f64]) -> Result<Vec<f64>, DynamicsError> {
    let mut out = vec![0.0; v.len()];
    vector_field_into(g, v, &mut out)?;
    Ok(out)
}

/// `F_i = -v_i + (1/N) sum_{j~i} v_i/(v_i+v_j)`, written into `out`.
/// A term with `v_i = 0 < v_j` contributes 0; only a whole edge at 0 is
/// rejected. Satisfies `sum_i F_i = 1 - sum_i v_i` identically.
pub(crate) fn vector_field_into(
    g: &Graph,
    v: &[f64],
    out: &mut [f64],
) -> Result<(), DynamicsError> {
    check_dim(g, v)?;
    let n = g.edge_count() as f64;
    for (o, &x) in out.iter_mut().zip(v) {
        *o = -x;
    }
    for &(u, w) in g.edges() {
        let sum = v[u] + v[w];
        if sum <= 0.0 {
            return Err(DynamicsError::EdgeSumNonPositive {
                u: u + 1,
                v: w + 1,
                sum,
            });
        }
        out[u] += v[u] / sum / n;
        out[w] += v[w] / sum / n;
    }
    Ok(())
}

/// The Lyapunov function `L(v)`.
pub fn lyapunov(g: &Graph, v: &SimplexPoint) -> Result<f64, DynamicsError> {
    lyapunov_raw(g, v.coords())
}

/// The gradient of `L`; well defined whenever all edge sums are positive
/// (individual coordinates may be 0).
pub fn grad_lyapunov(g: &Graph, v: &SimplexPoint) -> Result<Vec<f64>, DynamicsError> {
    grad_lyapunov_raw(g, v.coords())
}

/// The vector field `F(v)`.
pub fn vector_field(g: &Graph, v: &SimplexPoint) -> Result<Vec<f64>, DynamicsError> {
    vector_field_raw(g, v.coords())
}

/// `d/dt (L o v) = sum_i v_i (dL_i)^2`: nonnegative, zero exactly at
/// equilibria.
pub fn lyapunov_time_derivative(g: &Graph, v: &SimplexPoint) -> Result<f64, DynamicsError> {
    let grad = grad_lyapunov_raw(g, v.coords())?;
    Ok(v.coords()
        .iter()
        .zip(&grad)
        .map(|(&x, &gi)| x * gi * gi)
        .sum())
}

struct Rk4Buffers {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    stage: Vec<f64>,
}

impl Rk4Buffers {
    fn new(m: usize) -> Self {
        Rk4Buffers {
            k1: vec![0.0; m],
            k2: vec![0.0; m],
            k3: vec![0.0; m],
            k4: vec![0.0; m],
            stage: vec![0.0; m],
        }
    }
}

/// One classical fourth-order step of size `h`, in place.
fn rk4_step(g: &Graph, v: &mut [f64], h: f64, buf: &mut Rk4Buffers) -> Result<(), DynamicsError> {
    vector_field_into(g, v, &mut buf.k1)?;
    for (s, (&vi, &ki)) in buf.stage.iter_mut().zip(v.iter().zip(&buf.k1)) {
        *s = vi + 0.5 * h * ki;
    }
    vector_field_into(g, &buf.stage, &mut buf.k2)?;
    for (s, (&vi, &ki)) in buf.stage.iter_mut().zip(v.iter().zip(&buf.k2)) {
        *s = vi + 0.5 * h * ki;
    }
    vector_field_into(g, &buf.stage, &mut buf.k3)?;
    for (s, (&vi, &ki)) in buf.stage.iter_mut().zip(v.iter().zip(&buf.k3)) {
        *s = vi + h * ki;
    }
    vector_field_into(g, &buf.stage, &mut buf.k4)?;
    for (i, vi) in v.iter_mut().enumerate() {
        *vi += h / 6.0 * (buf.k1[i] + 2.0 * buf.k2[i] + 2.0 * buf.k3[i] + buf.k4[i]);
        // faces are invariant; wipe integrator noise that would take a
        // coordinate below 0
        if *vi < 0.0 {
            debug_assert!(*vi > -1e-12, "integrator step went negative: {}", vi);
            *vi = 0.0;
        }
    }
    Ok(())
}

fn advance(
    g: &Graph,
    dom: &DomainParams,
    v: &mut [f64],
    t: f64,
    dt: f64,
    mut on_step: impl FnMut(f64, &[f64]),
) -> Result<(), DynamicsError> {
    if dt.is_nan() || dt <= 0.0 {
        return Err(DynamicsError::InvalidStep { dt });
    }
    if let Some((u, w, sum)) = dom.violated_edge(g, v) {
        return Err(DynamicsError::LeftDomain {
            time: 0.0,
            u: u + 1,
            v: w + 1,
            sum,
            c: dom.c(),
        });
    }
    let mut buf = Rk4Buffers::new(v.len());
    let mut elapsed = 0.0;
    while elapsed < t - 1e-12 {
        let h = dt.min(t - elapsed);
        rk4_step(g, v, h, &mut buf)?;
        elapsed += h;
        if let Some((u, w, sum)) = dom.violated_edge(g, v) {
            return Err(DynamicsError::LeftDomain {
                time: elapsed,
                u: u + 1,
                v: w + 1,
                sum,
                c: dom.c(),
            });
        }
        debug_assert!(
            (v.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_SUM_TOL,
            "mass leaked during integration"
        );
        on_step(elapsed, v);
    }
    Ok(())
}

/// The semiflow `Phi_t(v0)` by classical fixed-step fourth-order
/// integration. Errors if the orbit leaves the domain, reporting the time
/// of exit.
pub fn flow(
    g: &Graph,
    dom: &DomainParams,
    v0: &SimplexPoint,
    t: f64,
    dt: f64,
) -> Result<SimplexPoint, DynamicsError> {
    let mut v = v0.coords().to_vec();
    advance(g, dom, &mut v, t, dt, |_, _| {})?;
    SimplexPoint::new(v)
}

/// Like [`flow`] but records `(t, point)` at every integrator step,
/// starting with the initial condition at `t = 0`.
pub fn flow_trajectory(
    g: &Graph,
    dom: &DomainParams,
    v0: &SimplexPoint,
    t: f64,
    dt: f64,
) -> Result<Vec<(f64, SimplexPoint)>, DynamicsError> {
    let mut v = v0.coords().to_vec();
    let mut traj = vec![(0.0, v0.clone())];
    advance(g, dom, &mut v, t, dt, |time, state| {
        traj.push((time, SimplexPoint(state.to_vec())));
    })?;
    Ok(traj)
}

/// Renders a trajectory as CSV rows `t, v_1, ..., v_m, L(v)`.
pub fn trajectory_csv(g: &Graph, traj: &[(f64, SimplexPoint)]) -> String {
    let mut out = String::from("t");
    for i in 1..=g.vertex_count() {
        out.push_str(&format!(",v{i}"));
    }
    out.push_str(",L\n");
    for (t, v) in traj {
        out.push_str(&t.to_string());
        for x in v.coords() {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push(',');
        let l = lyapunov_raw(g, v.coords()).unwrap_or(f64::NAN);
        out.push_str(&l.to_string());
        out.push('\n');
    }
    out
}

/// Samples a point of the domain interior: Dirichlet(1) on the simplex,
/// rejecting the (rare) draws that violate the edge-sum floor.
pub fn sample_interior<R: Rng + ?Sized>(g: &Graph, dom: &DomainParams, rng: &mut R) -> SimplexPoint {
    let m = g.vertex_count();
    loop {
        let mut v: Vec<f64> = (0..m)
            .map(|_| -f64::ln(1.0 - rng.random::<f64>()))
            .collect();
        let sum: f64 = v.iter().sum();
        if sum <= 0.0 {
            continue;
        }
        for x in &mut v {
            *x /= sum;
        }
        if dom.violated_edge(g, &v).is_none() {
            return SimplexPoint(v);
        }
    }
}
