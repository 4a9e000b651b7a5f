//! The verification suite: every check the `verify` command and the
//! acceptance test target run, with tolerances pinned here.
//!
//! Checks 1-5 and 10-11 are deterministic numerics and run identically
//! under every budget. Checks 6-9 are Monte Carlo; their step counts and
//! thresholds come from the [`Budget`] table below. The full budget is the
//! reference configuration; the reduced budget reruns the same checks at a
//! smaller step count with correspondingly widened thresholds.
//!
//! All Monte Carlo checks use fixed seeds, so a passing suite stays green.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{self, DomainParams, SimplexPoint};
use crate::equilibria::{self, LimitKind, Stability};
use crate::graph::{parse_edge_list, Graph};
use crate::urn::{self, TrialConfig, UrnState};

/// A named fixture graph, embedded so `verify` works from any directory.
pub fn fixtures() -> Vec<(&'static str, Graph)> {
    [
        ("triangle", include_str!("../fixtures/triangle.txt")),
        ("k2", include_str!("../fixtures/k2.txt")),
        ("c4", include_str!("../fixtures/c4.txt")),
        ("k32", include_str!("../fixtures/k32.txt")),
        ("c6", include_str!("../fixtures/c6.txt")),
        ("k4", include_str!("../fixtures/k4.txt")),
    ]
    .into_iter()
    .map(|(name, text)| (name, parse_edge_list(text).expect("fixtures are valid")))
    .collect()
}

fn fixture(name: &str) -> Graph {
    fixtures()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, g)| g)
        .expect("known fixture")
}

/// Step counts and thresholds for the Monte Carlo checks.
///
/// | check                   | full (steps / threshold)      | reduced @ 1e4 steps          |
/// |-------------------------|-------------------------------|------------------------------|
/// | 6 singleton convergence | 1e5: mean < 0.05, 95% < 0.1   | mean < 0.12, 90% < 0.2       |
/// | 7 interval convergence  | 1e5: 95% transverse < 0.02    | 95% transverse < 0.06        |
/// | 8 unstable avoidance    | 1e5: 0 hits within 0.05       | at most 8 hits within 0.05   |
/// | 9 classical limit law   | 1e4: KS < 0.06                | KS < 0.10 (steps capped 1e4) |
///
/// The full row pins the reference thresholds verbatim. The reduced row is
/// calibrated against measured statistics at 1e4 steps with about a 2x
/// margin, so it stays green across seeds and serves as a smoke test.
/// The eta spread floor (0.01) is budget independent: the limit point
/// varies by realization regardless of when sampling stops.
#[derive(Debug, Clone)]
pub struct Budget {
    pub label: &'static str,
    /// Integrator step for the flow-based checks (0.01 unless overridden).
    pub dt: f64,
    pub mc_steps: u64,
    pub singleton_trials: u64,
    pub singleton_mean_tol: f64,
    pub singleton_radius: f64,
    pub singleton_min_frac: f64,
    pub interval_trials: u64,
    pub transverse_radius: f64,
    pub transverse_min_frac: f64,
    pub eta_std_min: f64,
    pub unstable_trials: u64,
    pub unstable_radius: f64,
    pub unstable_max_hits: usize,
    pub ks_trials: u64,
    pub ks_steps: u64,
    pub ks_tol: f64,
}

impl Budget {
    pub fn full() -> Self {
        Budget {
            label: "full",
            dt: 0.01,
            mc_steps: 100_000,
            singleton_trials: 100,
            singleton_mean_tol: 0.05,
            singleton_radius: 0.1,
            singleton_min_frac: 0.95,
            interval_trials: 200,
            transverse_radius: 0.02,
            transverse_min_frac: 0.95,
            eta_std_min: 0.01,
            unstable_trials: 200,
            unstable_radius: 0.05,
            unstable_max_hits: 0,
            ks_trials: 1000,
            ks_steps: 10_000,
            ks_tol: 0.06,
        }
    }

    /// Reduced budget running the stochastic checks at `steps`
    /// (calibrated for `steps = 10_000`; much smaller values may fail
    /// honestly).
    pub fn reduced(steps: u64) -> Self {
        Budget {
            label: "reduced",
            mc_steps: steps,
            singleton_mean_tol: 0.12,
            singleton_radius: 0.2,
            singleton_min_frac: 0.90,
            transverse_radius: 0.06,
            unstable_max_hits: 8,
            ks_steps: steps.min(10_000),
            ks_tol: 0.10,
            ..Budget::full()
        }
    }

    /// Budget selected by an optional step override: the full table unless
    /// the override is below the full step count.
    pub fn for_steps(steps: Option<u64>) -> Self {
        match steps {
            Some(s) if s < 100_000 => Budget::reduced(s),
            _ => Budget::full(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        CheckResult {
            id,
            name,
            passed,
            detail,
        }
    }
}

/// Runs every check under the given budget.
pub fn run_all(budget: &Budget) -> Vec<CheckResult> {
    vec![
        check_gradient_value(),
        check_predicted_limits(),
        check_interval_spectrum(),
        check_saa_identity(),
        check_lyapunov_monotonicity(budget.dt),
        check_singleton_convergence(budget),
        check_interval_convergence(budget),
        check_unstable_avoidance(budget),
        check_classical_limit_law(budget),
        check_gradient_finite_difference(),
        check_equilibrium_census(),
    ]
}

/// 1: on K_{3,2} at (0,0,0,1/2,1/2) the first gradient component is
/// exactly -1/3.
pub fn check_gradient_value() -> CheckResult {
    let g = fixture("k32");
    let w = SimplexPoint::new(vec![0.0, 0.0, 0.0, 0.5, 0.5]).unwrap();
    let grad = dynamics::grad_lyapunov(&g, &w).unwrap();
    let err = (grad[0] + 1.0 / 3.0).abs();
    CheckResult::new(
        1,
        "exact-gradient-value",
        err <= 1e-12,
        format!("dL_1 = {} (|error| = {err:.2e}, tol 1e-12)", grad[0]),
    )
}

/// 2: predicted limit sets of the triangle, K_{3,2} and the 4-cycle, all
/// coordinates to 1e-8.
pub fn check_predicted_limits() -> CheckResult {
    let tol = 1e-8;
    let mut errs: Vec<String> = Vec::new();
    let mut worst = 0.0f64;

    let g = fixture("triangle");
    let ls = equilibria::predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
    if ls.kind != LimitKind::Singleton {
        errs.push("triangle limit is not a singleton".into());
    }
    worst = worst.max(ls.base.inf_distance(&[1.0 / 3.0; 3]));

    let g = fixture("k32");
    let ls = equilibria::predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
    if ls.kind != LimitKind::Singleton {
        errs.push("k32 limit is not a singleton".into());
    }
    worst = worst.max(ls.base.inf_distance(&[0.0, 0.0, 0.0, 0.5, 0.5]));

    let g = fixture("c4");
    let ls = equilibria::predict_limit(&g, &DomainParams::default_for(&g)).unwrap();
    if ls.kind != LimitKind::Interval {
        errs.push("c4 limit is not an interval".into());
    }
    let want_hi = [0.5, 0.0, 0.5, 0.0];
    let want_lo = [0.0, 0.5, 0.0, 0.5];
    let (e0, e1) = (&ls.endpoints.0, &ls.endpoints.1);
    let direct = e0.inf_distance(&want_lo).max(e1.inf_distance(&want_hi));
    let swapped = e0.inf_distance(&want_hi).max(e1.inf_distance(&want_lo));
    worst = worst.max(direct.min(swapped));

    let passed = errs.is_empty() && worst <= tol;
    let mut detail = format!("worst coordinate error {worst:.2e} (tol 1e-8)");
    if !errs.is_empty() {
        detail.push_str(&format!("; {}", errs.join("; ")));
    }
    CheckResult::new(2, "predicted-limits", passed, detail)
}

/// 3: tangent eigenvalues at the uniform point of the 4-cycle are
/// {0, -1/2, -1/2} to 1e-9 with imaginary parts below 1e-9.
pub fn check_interval_spectrum() -> CheckResult {
    let g = fixture("c4");
    let rep = equilibria::tangent_spectrum(&g, &SimplexPoint::uniform(4)).unwrap();
    let expected = [0.0, -0.5, -0.5];
    let mut worst = 0.0f64;
    for (z, want) in rep.eigenvalues.iter().zip(&expected) {
        worst = worst.max((z.re - want).abs());
    }
    let passed = rep.eigenvalues.len() == 3 && worst <= 1e-9 && rep.max_imag < 1e-9;
    CheckResult::new(
        3,
        "interval-spectrum",
        passed,
        format!(
            "eigenvalues {:?}, worst error {worst:.2e} (tol 1e-9), max imag {:.2e}",
            rep.eigenvalues
                .iter()
                .map(|z| z.re)
                .collect::<Vec<_>>(),
            rep.max_imag
        ),
    )
}

/// 4: the exact expectation oracle (full 2^N enumeration) agrees with
/// gamma_n * F(x) componentwise to 1e-12 on every fixture, 20 random ball
/// states each.
pub fn check_saa_identity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(401);
    let mut worst = 0.0f64;
    for (_, g) in fixtures() {
        if g.edge_count() > 6 {
            continue;
        }
        for _ in 0..20 {
            let balls: Vec<u64> = (0..g.vertex_count())
                .map(|_| rng.random_range(1..=12))
                .collect();
            let state = UrnState::new(balls).unwrap();
            let oracle = urn::expected_increment(&g, &state).unwrap();
            let x = urn::proportions(&state, &g);
            let field = dynamics::vector_field(&g, &x).unwrap();
            let gain = urn::gamma(0, state.initial_total(), g.edge_count() as u64);
            for (got, fi) in oracle.iter().zip(&field) {
                worst = worst.max((got - gain * fi).abs());
            }
        }
    }
    CheckResult::new(
        4,
        "saa-identity",
        worst <= 1e-12,
        format!("worst componentwise deviation {worst:.2e} (tol 1e-12)"),
    )
}

/// 5: along 100 random orbits per fixture (t = 20, dt = 0.01 by default)
/// the Lyapunov function never drops by more than 1e-9 per step.
pub fn check_lyapunov_monotonicity(dt: f64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(502);
    let mut worst_drop = 0.0f64;
    for (_, g) in fixtures() {
        let dom = DomainParams::default_for(&g);
        for _ in 0..100 {
            let v0 = dynamics::sample_interior(&g, &dom, &mut rng);
            let traj = dynamics::flow_trajectory(&g, &dom, &v0, 20.0, dt).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for (_, p) in &traj {
                let l = dynamics::lyapunov(&g, p).unwrap();
                if prev - l > worst_drop {
                    worst_drop = prev - l;
                }
                prev = l;
            }
        }
    }
    CheckResult::new(
        5,
        "lyapunov-monotonicity",
        worst_drop <= 1e-9,
        format!("worst per-step decrease {worst_drop:.2e} (tol 1e-9)"),
    )
}

/// 6: triangle trials started from (1,1,1) end near (1/3,1/3,1/3).
pub fn check_singleton_convergence(budget: &Budget) -> CheckResult {
    let g = fixture("triangle");
    let dom = DomainParams::default_for(&g);
    let cfg = TrialConfig {
        sample_stride: budget.mc_steps,
        ..TrialConfig::new(budget.mc_steps, 601)
    };
    let summary = urn::monte_carlo(&g, &dom, &[1, 1, 1], budget.singleton_trials, &cfg).unwrap();
    let mean = summary.mean_dist_inf();
    let frac = summary.fraction_within_inf(budget.singleton_radius);
    let passed = mean < budget.singleton_mean_tol && frac >= budget.singleton_min_frac;
    CheckResult::new(
        6,
        "singleton-convergence",
        passed,
        format!(
            "{} trials x {} steps: mean inf-distance {mean:.4} (tol {}), {:.0}% within {} (need {:.0}%)",
            budget.singleton_trials,
            budget.mc_steps,
            budget.singleton_mean_tol,
            frac * 100.0,
            budget.singleton_radius,
            budget.singleton_min_frac * 100.0
        ),
    )
}

/// 7: 4-cycle trials land near the limit interval while the landing spot
/// spreads along it.
pub fn check_interval_convergence(budget: &Budget) -> CheckResult {
    let g = fixture("c4");
    let dom = DomainParams::default_for(&g);
    let cfg = TrialConfig {
        sample_stride: budget.mc_steps,
        ..TrialConfig::new(budget.mc_steps, 701)
    };
    let summary = urn::monte_carlo(&g, &dom, &[1, 1, 1, 1], budget.interval_trials, &cfg).unwrap();
    let frac = summary.fraction_within_transverse(budget.transverse_radius);
    let eta_std = summary.eta_std().unwrap_or(0.0);
    let passed = summary.limit.kind == LimitKind::Interval
        && frac >= budget.transverse_min_frac
        && eta_std > budget.eta_std_min;
    CheckResult::new(
        7,
        "interval-convergence",
        passed,
        format!(
            "{} trials x {} steps: {:.0}% within transverse {} (need {:.0}%), eta spread {eta_std:.4} (need > {})",
            budget.interval_trials,
            budget.mc_steps,
            frac * 100.0,
            budget.transverse_radius,
            budget.transverse_min_frac * 100.0,
            budget.eta_std_min
        ),
    )
}

/// 8: no triangle trial ends near any of the three unstable equilibria.
pub fn check_unstable_avoidance(budget: &Budget) -> CheckResult {
    let g = fixture("triangle");
    let dom = DomainParams::default_for(&g);
    let cfg = TrialConfig {
        sample_stride: budget.mc_steps,
        ..TrialConfig::new(budget.mc_steps, 801)
    };
    let summary = urn::monte_carlo(&g, &dom, &[1, 1, 1], budget.unstable_trials, &cfg).unwrap();
    let hits = summary
        .outcomes
        .iter()
        .filter(|o| o.nearest_unstable.is_some_and(|d| d < budget.unstable_radius))
        .count();
    let passed = hits <= budget.unstable_max_hits;
    CheckResult::new(
        8,
        "unstable-avoidance",
        passed,
        format!(
            "{} trials x {} steps: {hits} finals within {} of an unstable equilibrium (allowed {})",
            budget.unstable_trials, budget.mc_steps, budget.unstable_radius, budget.unstable_max_hits
        ),
    )
}

fn ks_statistic_against_uniform(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let hi = (i + 1) as f64 / n - x;
            let lo = x - i as f64 / n;
            hi.max(lo)
        })
        .fold(0.0, f64::max)
}

/// 9: K2 from (1,1) is a classical two-color urn; the terminal proportion
/// is uniform on [0,1].
pub fn check_classical_limit_law(budget: &Budget) -> CheckResult {
    let g = fixture("k2");
    let dom = DomainParams::default_for(&g);
    let cfg = TrialConfig {
        sample_stride: budget.ks_steps,
        ..TrialConfig::new(budget.ks_steps, 901)
    };
    let summary = urn::monte_carlo(&g, &dom, &[1, 1], budget.ks_trials, &cfg).unwrap();
    let mut finals: Vec<f64> = summary.outcomes.iter().map(|o| o.final_point[0]).collect();
    let ks = ks_statistic_against_uniform(&mut finals);
    CheckResult::new(
        9,
        "classical-limit-law",
        ks < budget.ks_tol,
        format!(
            "{} trials x {} steps: KS distance to Uniform[0,1] = {ks:.4} (tol {})",
            budget.ks_trials, budget.ks_steps, budget.ks_tol
        ),
    )
}

/// 10: central finite differences of L reproduce the gradient at 100
/// random interior points per fixture.
pub fn check_gradient_finite_difference() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (_, g) in fixtures() {
        let dom = DomainParams::default_for(&g);
        for _ in 0..100 {
            let v = dynamics::sample_interior(&g, &dom, &mut rng);
            let grad = dynamics::grad_lyapunov(&g, &v).unwrap();
            for i in 0..g.vertex_count() {
                let mut hi = v.coords().to_vec();
                let mut lo = v.coords().to_vec();
                hi[i] += h;
                lo[i] -= h;
                let (Ok(lhi), Ok(llo)) = (
                    crate::dynamics::lyapunov_raw(&g, &hi),
                    crate::dynamics::lyapunov_raw(&g, &lo),
                ) else {
                    continue;
                };
                let fd = (lhi - llo) / (2.0 * h);
                let rel = (fd - grad[i]).abs() / grad[i].abs().max(1.0);
                worst = worst.max(rel);
            }
        }
    }
    CheckResult::new(
        10,
        "gradient-finite-difference",
        worst < 1e-6,
        format!("worst relative deviation {worst:.2e} (tol 1e-6)"),
    )
}

/// Integer compositions of `total` into `parts` nonnegative summands.
fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if parts == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for k in 0..=total {
        prefix.push(k);
        compositions(total - k, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// 11: the triangle census finds exactly 4 equilibria (1 non-unstable),
/// and a dense grid over every face finds no value of L beating the
/// reported face maximum by more than 1e-6.
pub fn check_equilibrium_census() -> CheckResult {
    let g = fixture("triangle");
    let dom = DomainParams::default_for(&g);
    let records = equilibria::enumerate_equilibria(&g, &dom).unwrap();
    let non_unstable = records
        .iter()
        .filter(|e| e.stability == Stability::NonUnstable)
        .count();
    let census_ok = records.len() == 4 && non_unstable == 1;

    // independent grid oracle, step 0.01 over each cover face
    let mut worst_excess = f64::NEG_INFINITY;
    for support in g.vertex_covers(20).unwrap() {
        let face_max = equilibria::maximize_on_face(&g, &dom, &support, 1e-10)
            .unwrap()
            .expect("fixture faces are feasible");
        let l_max = dynamics::lyapunov(&g, &face_max).unwrap();
        let mut grid = Vec::new();
        compositions(100, support.len(), &mut Vec::new(), &mut grid);
        for cell in grid {
            let mut v = vec![0.0; g.vertex_count()];
            for (&i, &k) in support.iter().zip(&cell) {
                v[i] = k as f64 / 100.0;
            }
            if dom.violated_edge(&g, &v).is_some() {
                continue;
            }
            let Ok(l) = crate::dynamics::lyapunov_raw(&g, &v) else {
                continue;
            };
            worst_excess = worst_excess.max(l - l_max);
        }
    }
    let grid_ok = worst_excess <= 1e-6;
    CheckResult::new(
        11,
        "equilibrium-census",
        census_ok && grid_ok,
        format!(
            "{} equilibria ({} non-unstable); grid never beats the face maximum by more than {worst_excess:.2e} (tol 1e-6)",
            records.len(),
            non_unstable
        ),
    )
}
