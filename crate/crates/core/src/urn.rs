//! Exact simulation of the urn process, its stochastic-approximation
//! decomposition, Monte Carlo harnesses, and shadowing diagnostics against
//! the deterministic flow.
//!
//! Each step adds one ball per edge: the ball on edge `{i, j}` goes to `i`
//! with probability `B_i / (B_i + B_j)` (or the alpha-power variant),
//! evaluated on the counts *before* the step. The proportion vector
//! `x(n) = B(n) / (N0 + nN)` is a stochastic approximation of the vector
//! field with gain `gamma_n = 1 / (N0/N + n + 1)`.
//!
//! Reproducibility contract: a trial is fully determined by
//! `(graph, b0, config)`. Edge draws consume the generator in edge-list
//! order within a step, and trial `k` of a Monte Carlo run is seeded with
//! `config.seed + k`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{self, euclid_distance, DomainParams, DynamicsError, SimplexPoint};
use crate::equilibria::{self, EquilibriaError, LimitKind, LimitSet, Stability};
use crate::graph::Graph;

/// Edge-count cap for the exact expectation oracle (enumerates `2^N`
/// outcomes).
pub const EXPECTATION_EDGE_CAP: usize = 20;

#[derive(Debug, Error)]
pub enum UrnError {
    #[error("initial ball count at vertex {vertex} is 0; every bin starts with at least 1 ball")]
    EmptyBin { vertex: usize },
    #[error("ball vector has length {got}, graph has {expected} vertices")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("invalid trial config: {detail}")]
    InvalidConfig { detail: String },
    #[error("graph has {n} edges, exact outcome enumeration is capped at {EXPECTATION_EDGE_CAP}")]
    TooManyEdges { n: usize },
    #[error(
        "requested window [{t}, {end}] is outside the recorded samples [{lo}, {hi}] in tau-time"
    )]
    WindowOutsideSamples { t: f64, end: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Equilibria(#[from] EquilibriaError),
}

/// Ball counts after `n` steps. `sum(balls) = n0 + n * N` always.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrnState {
    balls: Vec<u64>,
    n: u64,
    n0: u64,
}

impl UrnState {
    /// Fresh state at step 0 from initial ball counts (all at least 1).
    pub fn new(balls: Vec<u64>) -> Result<Self, UrnError> {
        if let Some(vertex) = balls.iter().position(|&b| b == 0) {
            return Err(UrnError::EmptyBin { vertex: vertex + 1 });
        }
        let n0 = balls.iter().sum();
        Ok(UrnState { balls, n: 0, n0 })
    }

    /// Re-creates a mid-process state. The caller vouches that the counts
    /// arose from `n` steps on the intended graph; the sum identity is
    /// re-asserted against the graph wherever one is available.
    pub fn resume(balls: Vec<u64>, n: u64, n0: u64) -> Result<Self, UrnError> {
        if let Some(vertex) = balls.iter().position(|&b| b == 0) {
            return Err(UrnError::EmptyBin { vertex: vertex + 1 });
        }
        Ok(UrnState { balls, n, n0 })
    }

    pub fn balls(&self) -> &[u64] {
        &self.balls
    }

    pub fn step_count(&self) -> u64 {
        self.n
    }

    pub fn initial_total(&self) -> u64 {
        self.n0
    }

    pub fn total(&self) -> u64 {
        self.balls.iter().sum()
    }

    fn assert_mass(&self, g: &Graph) {
        debug_assert_eq!(
            self.total(),
            self.n0 + self.n * g.edge_count() as u64,
            "ball mass identity violated"
        );
    }
}

/// Parameters of one simulated trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub steps: u64,
    pub seed: u64,
    /// Reinforcement exponent; 1 is the linear case all analysis assumes.
    pub alpha: f64,
    /// Record every k-th proportion vector.
    pub sample_stride: u64,
}

impl TrialConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        TrialConfig {
            steps,
            seed,
            alpha: 1.0,
            sample_stride: 100,
        }
    }

    fn validate(&self) -> Result<(), UrnError> {
        if self.steps == 0 {
            return Err(UrnError::InvalidConfig {
                detail: "steps must be at least 1".into(),
            });
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 {
            return Err(UrnError::InvalidConfig {
                detail: format!("alpha = {} must be positive", self.alpha),
            });
        }
        if self.sample_stride == 0 {
            return Err(UrnError::InvalidConfig {
                detail: "sample_stride must be at least 1".into(),
            });
        }
        Ok(())
    }
}

/// One recorded proportion vector, with its step index and interpolation
/// time `tau_n = sum_{i<=n} gamma_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialSample {
    pub n: u64,
    pub tau: f64,
    pub point: SimplexPoint,
}

/// Outcome of one trial: strided samples plus the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub samples: Vec<TrialSample>,
    pub final_point: SimplexPoint,
    pub seed: u64,
}

/// `x_i(n) = B_i(n) / (N0 + nN)`.
pub fn proportions(state: &UrnState, g: &Graph) -> SimplexPoint {
    state.assert_mass(g);
    let total = state.total() as f64;
    SimplexPoint::new(state.balls.iter().map(|&b| b as f64 / total).collect())
        .expect("integer counts normalize exactly")
}

/// Probability that the first bin wins one edge draw.
pub(crate) fn edge_probability(bi: u64, bj: u64, alpha: f64) -> f64 {
    if alpha == 1.0 {
        return bi as f64 / (bi + bj) as f64;
    }
    let pi = (bi as f64).powf(alpha);
    let pj = (bj as f64).powf(alpha);
    if pi.is_finite() && pj.is_finite() && pi + pj > 0.0 {
        pi / (pi + pj)
    } else {
        // large counts: 1 / (1 + (bj/bi)^alpha) computed in log space
        let log_ratio = alpha * ((bj as f64).ln() - (bi as f64).ln());
        1.0 / (1.0 + log_ratio.exp())
    }
}

fn step_with_buf<R: Rng + ?Sized>(
    g: &Graph,
    state: &mut UrnState,
    rng: &mut R,
    alpha: f64,
    delta: &mut [u64],
) {
    delta.fill(0);
    // probabilities use the counts at step start; increments land after
    for &(i, j) in g.edges() {
        let p = edge_probability(state.balls[i], state.balls[j], alpha);
        if rng.random::<f64>() < p {
            delta[i] += 1;
        } else {
            delta[j] += 1;
        }
    }
    for (b, d) in state.balls.iter_mut().zip(delta.iter()) {
        *b = b.checked_add(*d).expect("ball count overflow");
    }
    state.n += 1;
    state.assert_mass(g);
}

/// Performs one step of the process in place, drawing one Bernoulli per
/// edge in edge-list order.
pub fn step<R: Rng + ?Sized>(g: &Graph, state: &mut UrnState, rng: &mut R, alpha: f64) {
    let mut delta = vec![0u64; g.vertex_count()];
    step_with_buf(g, state, rng, alpha, &mut delta);
}

/// The stochastic-approximation gain `gamma_n = 1 / (N0/N + n + 1)`.
pub fn gamma(n: u64, n0: u64, n_edges: u64) -> f64 {
    1.0 / (n0 as f64 / n_edges as f64 + (n + 1) as f64)
}

/// Interpolation time `tau_n = sum_{i=0}^{n} gamma_i`.
pub fn tau(n: u64, n0: u64, n_edges: u64) -> f64 {
    (0..=n).map(|i| gamma(i, n0, n_edges)).sum()
}

/// `E[x(n+1) - x(n) | state]`, exactly, by enumerating all `2^N` edge
/// outcomes. This is the brute-force side of the decomposition
/// `x(n+1) - x(n) = gamma_n [F(x(n)) + noise]`: the expectation must equal
/// `gamma_n * F(x(n))` identically.
pub fn expected_increment(g: &Graph, state: &UrnState) -> Result<Vec<f64>, UrnError> {
    let n_edges = g.edge_count();
    if n_edges > EXPECTATION_EDGE_CAP {
        return Err(UrnError::TooManyEdges { n: n_edges });
    }
    if state.balls.len() != g.vertex_count() {
        return Err(UrnError::DimensionMismatch {
            got: state.balls.len(),
            expected: g.vertex_count(),
        });
    }
    state.assert_mass(g);
    let m = g.vertex_count();
    let probs: Vec<f64> = g
        .edges()
        .iter()
        .map(|&(i, j)| edge_probability(state.balls[i], state.balls[j], 1.0))
        .collect();
    let total_now = state.total() as f64;
    let total_next = (state.total() + n_edges as u64) as f64;
    let mut expectation = vec![0.0; m];
    let mut delta = vec![0u64; m];
    for mask in 0u64..1 << n_edges {
        delta.fill(0);
        let mut p = 1.0;
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            if mask & (1 << e) != 0 {
                p *= probs[e];
                delta[i] += 1;
            } else {
                p *= 1.0 - probs[e];
                delta[j] += 1;
            }
        }
        for i in 0..m {
            expectation[i] += p * (state.balls[i] + delta[i]) as f64 / total_next;
        }
    }
    for (i, e) in expectation.iter_mut().enumerate() {
        *e -= state.balls[i] as f64 / total_now;
    }
    Ok(expectation)
}

/// Runs one trial with a generator derived deterministically from the
/// seed, recording every `sample_stride`-th proportion vector (and step 0).
pub fn run_trial(g: &Graph, b0: &[u64], cfg: &TrialConfig) -> Result<TrialResult, UrnError> {
    cfg.validate()?;
    if b0.len() != g.vertex_count() {
        return Err(UrnError::DimensionMismatch {
            got: b0.len(),
            expected: g.vertex_count(),
        });
    }
    let mut state = UrnState::new(b0.to_vec())?;
    let n_edges = g.edge_count() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut delta = vec![0u64; g.vertex_count()];
    let mut tau_acc = gamma(0, state.n0, n_edges);
    let mut samples = vec![TrialSample {
        n: 0,
        tau: tau_acc,
        point: proportions(&state, g),
    }];
    for n in 1..=cfg.steps {
        step_with_buf(g, &mut state, &mut rng, cfg.alpha, &mut delta);
        tau_acc += gamma(n, state.n0, n_edges);
        if n % cfg.sample_stride == 0 {
            samples.push(TrialSample {
                n,
                tau: tau_acc,
                point: proportions(&state, g),
            });
        }
    }
    Ok(TrialResult {
        samples,
        final_point: proportions(&state, g),
        seed: cfg.seed,
    })
}

/// Renders a trial's samples as CSV rows `n, tau, x_1, ..., x_m`.
pub fn trial_csv(result: &TrialResult) -> String {
    let m = result.final_point.dim();
    let mut out = String::from("n,tau");
    for i in 1..=m {
        out.push_str(&format!(",x{i}"));
    }
    out.push('\n');
    for s in &result.samples {
        out.push_str(&format!("{},{}", s.n, s.tau));
        for x in s.point.coords() {
            out.push(',');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

/// Per-trial summary against the predicted limit set.
#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub trial: u64,
    pub seed: u64,
    pub final_point: SimplexPoint,
    /// Largest coordinate distance to the nearest point of the limit set.
    pub dist_inf: f64,
    /// Euclidean distance to the nearest point of the limit set (the
    /// transverse distance, for intervals).
    pub dist_euclid: f64,
    /// Projection parameter on the interval; absent for singleton limits.
    pub eta: Option<f64>,
    /// Distance (inf norm) to the closest unstable equilibrium, if any
    /// exist.
    pub nearest_unstable: Option<f64>,
}

/// Aggregated Monte Carlo run: the predicted limit set, the unstable
/// equilibria, and one outcome per trial (sorted by trial index regardless
/// of execution order).
#[derive(Debug, Clone)]
pub struct MonteCarloSummary {
    pub limit: LimitSet,
    pub unstable_points: Vec<SimplexPoint>,
    pub outcomes: Vec<TrialOutcome>,
}

impl MonteCarloSummary {
    pub fn mean_dist_inf(&self) -> f64 {
        self.outcomes.iter().map(|o| o.dist_inf).sum::<f64>() / self.outcomes.len() as f64
    }

    pub fn max_dist_inf(&self) -> f64 {
        self.outcomes.iter().map(|o| o.dist_inf).fold(0.0, f64::max)
    }

    pub fn fraction_within_inf(&self, radius: f64) -> f64 {
        let hits = self.outcomes.iter().filter(|o| o.dist_inf <= radius).count();
        hits as f64 / self.outcomes.len() as f64
    }

    pub fn fraction_within_transverse(&self, radius: f64) -> f64 {
        let hits = self
            .outcomes
            .iter()
            .filter(|o| o.dist_euclid <= radius)
            .count();
        hits as f64 / self.outcomes.len() as f64
    }

    /// Sample standard deviation of the eta coordinates; `None` for
    /// singleton limits or fewer than two trials.
    pub fn eta_std(&self) -> Option<f64> {
        let etas: Vec<f64> = self.outcomes.iter().filter_map(|o| o.eta).collect();
        if etas.len() < 2 {
            return None;
        }
        let mean = etas.iter().sum::<f64>() / etas.len() as f64;
        let var =
            etas.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (etas.len() - 1) as f64;
        Some(var.sqrt())
    }

    /// Smallest distance any trial came to any unstable equilibrium.
    pub fn min_nearest_unstable(&self) -> Option<f64> {
        self.outcomes
            .iter()
            .filter_map(|o| o.nearest_unstable)
            .min_by(|a, b| a.partial_cmp(b).unwrap())
    }
}

pub(crate) fn outcome_for(
    limit: &LimitSet,
    unstable_points: &[SimplexPoint],
    trial: u64,
    result: &TrialResult,
) -> TrialOutcome {
    let x = result.final_point.coords();
    let eta = match limit.kind {
        LimitKind::Interval => Some(limit.eta_of(x)),
        LimitKind::Singleton => None,
    };
    let nearest_unstable = unstable_points
        .iter()
        .map(|p| p.inf_distance(x))
        .min_by(|a, b| a.partial_cmp(b).unwrap());
    TrialOutcome {
        trial,
        seed: result.seed,
        final_point: result.final_point.clone(),
        dist_inf: limit.inf_distance(x),
        dist_euclid: limit.euclid_distance(x),
        eta,
        nearest_unstable,
    }
}

pub(crate) fn unstable_equilibria(
    g: &Graph,
    dom: &DomainParams,
) -> Result<Vec<SimplexPoint>, EquilibriaError> {
    Ok(equilibria::enumerate_equilibria(g, dom)?
        .into_iter()
        .filter(|e| e.stability == Stability::Unstable)
        .map(|e| e.point)
        .collect())
}

/// Runs independent trials (trial `k` seeded with `cfg.seed + k`) and
/// summarizes each final state against the predicted limit set. Trials
/// execute in parallel; outcomes are ordered by trial index.
pub fn monte_carlo(
    g: &Graph,
    dom: &DomainParams,
    b0: &[u64],
    trials: u64,
    cfg: &TrialConfig,
) -> Result<MonteCarloSummary, UrnError> {
    if trials == 0 {
        return Err(UrnError::InvalidConfig {
            detail: "trials must be at least 1".into(),
        });
    }
    let limit = equilibria::predict_limit(g, dom)?;
    let unstable_points = unstable_equilibria(g, dom)?;
    let outcomes: Vec<TrialOutcome> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let trial_cfg = TrialConfig {
                seed: cfg.seed.wrapping_add(k),
                ..cfg.clone()
            };
            run_trial(g, b0, &trial_cfg).map(|r| outcome_for(&limit, &unstable_points, k, &r))
        })
        .collect::<Result<_, _>>()?;
    Ok(MonteCarloSummary {
        limit,
        unstable_points,
        outcomes,
    })
}

fn interpolate_at(samples: &[TrialSample], t: f64) -> Vec<f64> {
    let idx = samples.partition_point(|s| s.tau < t);
    if idx == 0 {
        return samples[0].point.coords().to_vec();
    }
    if idx == samples.len() {
        return samples[samples.len() - 1].point.coords().to_vec();
    }
    let (lo, hi) = (&samples[idx - 1], &samples[idx]);
    let span = hi.tau - lo.tau;
    let w = if span > 0.0 { (t - lo.tau) / span } else { 0.0 };
    lo.point
        .coords()
        .iter()
        .zip(hi.point.coords())
        .map(|(a, b)| a + w * (b - a))
        .collect()
}

/// Shadowing diagnostic: the piecewise-linear interpolation `X` of the
/// trial in tau-time is compared against the flow started at `X(t)`,
/// returning `sup over h in [0, horizon]` of the Euclidean distance
/// `d(X(t+h), Phi_h(X(t)))`, sampled on the integrator grid.
pub fn shadowing_error(
    g: &Graph,
    dom: &DomainParams,
    result: &TrialResult,
    t: f64,
    horizon: f64,
    dt: f64,
) -> Result<f64, UrnError> {
    let samples = &result.samples;
    if samples.is_empty() {
        return Err(UrnError::InvalidConfig {
            detail: "trial has no recorded samples".into(),
        });
    }
    let lo = samples[0].tau;
    let hi = samples[samples.len() - 1].tau;
    let end = t + horizon;
    if t < lo || end > hi {
        return Err(UrnError::WindowOutsideSamples { t, end, lo, hi });
    }
    let start = SimplexPoint::new(
        interpolate_at(samples, t)
            .into_iter()
            .map(|x| x.max(0.0))
            .collect(),
    )
    .map_err(UrnError::from)?;
    let orbit = dynamics::flow_trajectory(g, dom, &start, horizon, dt)?;
    let mut sup = 0.0f64;
    for (h, phi) in &orbit {
        let interpolated = interpolate_at(samples, t + h);
        sup = sup.max(euclid_distance(&interpolated, phi.coords()));
    }
    Ok(sup)
}
