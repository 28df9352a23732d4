//! Warm-starting the interior-point method from an approximate PDHG
//! solution.
//!
//! The PDHG point `(x, y, z)` usually has many exact zeros and badly
//! unbalanced products `x_j z_j`. [`centered_start`] floors both vectors at
//! `α_min` and then moves each pair toward `x_j z_j = μ_target`, never by
//! more than `δ_max` per coordinate:
//!
//! ```text
//!     μ = max(xᵀz/n, μ_min)
//!     x', z' = max(x, α_min), max(z, α_min)
//!     if x'_j < z'_j:  x'_j ← clamp(μ/z'_j);  z'_j ← clamp(μ/x'_j)
//!     else:            z'_j ← clamp(μ/x'_j);  x'_j ← clamp(μ/z'_j)
//!     clamp(t) = min(max(t, v − δ_max), v + δ_max)   (v = value being moved)
//!     x', z' = max(x', α_min), max(z', α_min)
//! ```
//!
//! [`warm_ipm`] then runs the IPM from `(x', y, z')`. Whenever the IPM
//! stalls, `α_min` is multiplied by the escalation factor, the current
//! iterate is floored at the new value and the IPM resumes.

use crate::ipm::{run_ipm, IpmError, IpmParams, IpmResult, IpmState};
use crate::lp::{GeneralLp, KktPoint};
use crate::pdhg::PdhgParams;
use crate::pipeline::{solve_general, Method, SolveOptions, SolveReport};
use crate::solution::SolutionFile;
use crate::sparse::dot;
use crate::status::SolveStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct WarmStartParams {
    pub mu_min: f64,
    pub alpha_min: f64,
    pub delta_max: f64,
    pub escalation_factor: f64,
    pub max_escalations: usize,
}

impl Default for WarmStartParams {
    fn default() -> Self {
        WarmStartParams {
            mu_min: 1e-6,
            alpha_min: 1e-6,
            delta_max: 1e-4,
            escalation_factor: 10.0,
            max_escalations: 6,
        }
    }
}

/// `max(xᵀz/n, μ_min)`.
pub fn mu_target(x: &[f64], z: &[f64], mu_min: f64) -> f64 {
    assert_eq!(x.len(), z.len());
    assert!(!x.is_empty());
    (dot(x, z) / x.len() as f64).max(mu_min)
}

fn clamped(target: f64, v: f64, delta: f64) -> f64 {
    target.max(v - delta).min(v + delta)
}

/// Centers one coordinate pair toward `x·z = mu`, without the final floor.
pub fn center_pair(x: f64, z: f64, mu: f64, alpha_min: f64, delta_max: f64) -> (f64, f64) {
    let mut x = x.max(alpha_min);
    let mut z = z.max(alpha_min);
    if x < z {
        x = clamped(mu / z, x, delta_max);
        z = clamped(mu / x, z, delta_max);
    } else {
        z = clamped(mu / x, z, delta_max);
        x = clamped(mu / z, x, delta_max);
    }
    (x, z)
}

/// Centered interior start point built from `pt` (a point of the scaled
/// model). `y` is copied unchanged.
pub fn centered_start(pt: &KktPoint, params: &WarmStartParams) -> KktPoint {
    let mu = mu_target(&pt.x, &pt.z, params.mu_min);
    let (x, z) = pt
        .x
        .iter()
        .zip(&pt.z)
        .map(|(&x, &z)| {
            let (x, z) = center_pair(x, z, mu, params.alpha_min, params.delta_max);
            (x.max(params.alpha_min), z.max(params.alpha_min))
        })
        .unzip();
    KktPoint {
        x,
        y: pt.y.clone(),
        z,
    }
}

/// Raises every `x_j` and `z_j` of `state` to at least `alpha_min`.
pub fn refloor(state: &mut IpmState, alpha_min: f64) {
    state.x.iter_mut().for_each(|v| *v = v.max(alpha_min));
    state.z.iter_mut().for_each(|v| *v = v.max(alpha_min));
}

#[derive(Debug, Clone)]
pub struct WarmOutcome {
    /// Result of the last IPM run; its state is the final iterate and its
    /// `best` the least violated iterate over all runs.
    pub result: IpmResult,
    /// Accepted IPM iterations summed over all runs.
    pub iterations: usize,
    pub escalations: usize,
    /// `α_min` in effect when the loop ended.
    pub alpha_min: f64,
}

/// Runs the IPM from `centered_start(pt)` with the stall-escalation loop.
pub fn warm_ipm(
    p: &crate::lp::StandardLp,
    pt: &KktPoint,
    ipm: &IpmParams,
    ws: &WarmStartParams,
) -> Result<WarmOutcome, IpmError> {
    assert!(ws.escalation_factor > 1.0);
    let start = IpmState::from_point(centered_start(pt, ws))?;
    warm_ipm_from(p, start, ipm, ws)
}

/// The escalation loop starting from an already centered state.
pub fn warm_ipm_from(
    p: &crate::lp::StandardLp,
    start: IpmState,
    ipm: &IpmParams,
    ws: &WarmStartParams,
) -> Result<WarmOutcome, IpmError> {
    let clock = std::time::Instant::now();
    let mut alpha_min = ws.alpha_min;
    let mut escalations = 0;
    let mut iterations = 0;
    let mut state = start;
    let mut best: Option<(KktPoint, f64)> = None;
    loop {
        let params = IpmParams {
            max_iters: ipm.max_iters.saturating_sub(iterations),
            time_limit_s: (ipm.time_limit_s - clock.elapsed().as_secs_f64()).max(0.0),
            ..ipm.clone()
        };
        let mut result = run_ipm(p, &params, Some(state))?;
        iterations += result.stats.iterations;
        match &best {
            Some((pt, v)) if *v < result.best_violation => {
                result.best = pt.clone();
                result.best_violation = *v;
            }
            _ => best = Some((result.best.clone(), result.best_violation)),
        }
        if result.status != SolveStatus::Stalled || escalations == ws.max_escalations {
            return Ok(WarmOutcome {
                result,
                iterations,
                escalations,
                alpha_min,
            });
        }
        escalations += 1;
        alpha_min *= ws.escalation_factor;
        state = result.state;
        refloor(&mut state, alpha_min);
    }
}

/// Per-phase counters of a hybrid solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HybridStats {
    pub pdhg_iterations: u64,
    pub ipm_iterations: u64,
    pub escalations: u64,
    pub pdhg_seconds: f64,
    pub ipm_seconds: f64,
    /// Max violation of the PDHG point on the original model.
    pub pdhg_max_violation: Option<f64>,
}

/// PDHG followed by the warm-started IPM on `g`, with presolve and scaling.
pub fn hybrid_solve(
    g: &GeneralLp,
    pdhg: &PdhgParams,
    ipm: &IpmParams,
    ws: &WarmStartParams,
) -> (SolutionFile, HybridStats) {
    let opts = SolveOptions {
        pdhg: pdhg.clone(),
        ipm: ipm.clone(),
        warm: ws.clone(),
        time_limit_s: pdhg.time_limit_s,
        ..SolveOptions::default()
    };
    let report = solve_general(g, Method::Hybrid { pdhg_eps: pdhg.eps_rel }, &opts);
    let stats = hybrid_stats(&report);
    (report.to_solution_file(g), stats)
}

fn hybrid_stats(r: &SolveReport) -> HybridStats {
    HybridStats {
        pdhg_iterations: r.pdhg_iterations,
        ipm_iterations: r.ipm_iterations,
        escalations: r.escalations,
        pdhg_seconds: r.pdhg_seconds,
        ipm_seconds: r.ipm_seconds,
        pdhg_max_violation: r.pdhg_violation.map(|v| v.max_violation),
    }
}
