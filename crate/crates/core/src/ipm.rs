//! Infeasible primal-dual interior-point method with Mehrotra's
//! predictor-corrector, for `min cᵀx s.t. Ax = b, x ≥ 0`.
//!
//! Newton systems are reduced to the normal equations
//! `(A·D²·Aᵀ)Δy = r_p − A·Z⁻¹(r_c − X·r_d)` with `D² = X/Z` and solved with
//! the sparse Cholesky factor from [`crate::cholesky`].

use std::time::Instant;

use thiserror::Error;

use crate::cholesky::{CholeskyError, NormalEquations, REG_MAX, REG_START};
use crate::error::{check_len, LpError};
use crate::lp::{
    residuals, termination_from_residuals, violation_from_residuals, KktPoint, StandardLp,
    TerminationCheck,
};
use crate::sparse::dot;
use crate::status::SolveStatus;

/// Largest accepted normwise backward error of a normal-equations solve.
const SOLVE_TOL: f64 = 1e-8;
const REFINE_STEPS: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct IpmParams {
    pub eps_rel: f64,
    pub max_iters: usize,
    pub step_fraction: f64,
    pub min_step: f64,
    pub centering_power: f64,
    pub time_limit_s: f64,
}

impl Default for IpmParams {
    fn default() -> Self {
        IpmParams {
            eps_rel: 1e-8,
            max_iters: 200,
            step_fraction: 0.99,
            min_step: 1e-6,
            centering_power: 3.0,
            time_limit_s: 10_000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("normal equations: {0}")]
    Factorization(#[from] CholeskyError),
    #[error("normal equations solved with backward error {0:e}")]
    InaccurateSolve(f64),
    #[error("start point is not strictly positive")]
    NotInterior,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub iteration: usize,
    pub alpha_p: f64,
    pub alpha_d: f64,
}

impl IpmState {
    pub fn from_point(pt: KktPoint) -> Result<Self, IpmError> {
        if !pt.x.iter().chain(&pt.z).all(|v| *v > 0.0 && v.is_finite()) {
            return Err(IpmError::NotInterior);
        }
        Ok(IpmState {
            x: pt.x,
            y: pt.y,
            z: pt.z,
            iteration: 0,
            alpha_p: 0.0,
            alpha_d: 0.0,
        })
    }

    pub fn mu(&self) -> f64 {
        dot(&self.x, &self.z) / self.x.len() as f64
    }

    pub fn point(&self) -> KktPoint {
        KktPoint {
            x: self.x.clone(),
            y: self.y.clone(),
            z: self.z.clone(),
        }
    }
}

/// Newton direction.
#[derive(Debug, Clone, PartialEq)]
pub struct Direction {
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
}

/// The Newton system of one iterate: holds `D² = X/Z` and the factor of
/// `A·D²·Aᵀ` so several right-hand sides can share one factorization.
#[derive(Debug, Clone)]
pub struct NewtonSystem {
    ne: NormalEquations,
    d2: Vec<f64>,
}

impl NewtonSystem {
    pub fn analyze(p: &StandardLp) -> Self {
        NewtonSystem {
            ne: NormalEquations::analyze(&p.a),
            d2: Vec::new(),
        }
    }

    pub fn factor(&mut self, p: &StandardLp, x: &[f64], z: &[f64]) -> Result<(), IpmError> {
        self.d2 = x.iter().zip(z).map(|(x, z)| x / z).collect();
        self.ne.factor(&p.a, &self.d2)?;
        Ok(())
    }

    pub fn regularization(&self) -> f64 {
        self.ne.regularization()
    }

    /// Solves `AΔx = rhs_p`, `AᵀΔy + Δz = rhs_d`, `ZΔx + XΔz = rhs_c` at the
    /// `(x, z)` last passed to [`Self::factor`]. An inaccurate solve
    /// refactors with 10× the regularization, up to [`REG_MAX`].
    pub fn solve(
        &mut self,
        p: &StandardLp,
        x: &[f64],
        z: &[f64],
        rhs_p: &[f64],
        rhs_d: &[f64],
        rhs_c: &[f64],
    ) -> Result<Direction, IpmError> {
        // w = Z⁻¹(r_c − X r_d)
        let w: Vec<f64> = (0..x.len())
            .map(|j| (rhs_c[j] - x[j] * rhs_d[j]) / z[j])
            .collect();
        let aw = p.a.mul_vec(&w);
        let rhs: Vec<f64> = rhs_p.iter().zip(&aw).map(|(r, a)| r - a).collect();
        let (mut dy, mut err) = self.ne.solve_refined(&p.a, &self.d2, &rhs, REFINE_STEPS);
        while !(err <= SOLVE_TOL) {
            let reg = self.ne.regularization();
            if reg >= REG_MAX {
                return Err(IpmError::InaccurateSolve(err));
            }
            let next = if reg == 0.0 { REG_START } else { (reg * 10.0).min(REG_MAX) };
            self.ne.refactor(next)?;
            (dy, err) = self.ne.solve_refined(&p.a, &self.d2, &rhs, REFINE_STEPS);
        }
        let atdy = p.a.tmul_vec(&dy);
        let dx = (0..x.len()).map(|j| w[j] + self.d2[j] * atdy[j]).collect();
        let dz = (0..x.len()).map(|j| rhs_d[j] - atdy[j]).collect();
        Ok(Direction { dx, dy, dz })
    }
}

/// One-shot Newton solve at `state` (analysis, factorization and solve).
pub fn kkt_solve(
    p: &StandardLp,
    state: &IpmState,
    rhs_p: &[f64],
    rhs_d: &[f64],
    rhs_c: &[f64],
) -> Result<Direction, IpmError> {
    check_len("rhs_p", p.m(), rhs_p.len())?;
    check_len("rhs_d", p.n(), rhs_d.len())?;
    check_len("rhs_c", p.n(), rhs_c.len())?;
    let mut sys = NewtonSystem::analyze(p);
    sys.factor(p, &state.x, &state.z)?;
    sys.solve(p, &state.x, &state.z, rhs_p, rhs_d, rhs_c)
}

/// Default cold start.
///
/// `x̃ = Aᵀ(AAᵀ)⁻¹b` is the least-norm solution of `Ax = b`, `z̃ = c` and
/// `y = 0`. Both vectors are shifted to be positive, balanced Mehrotra-style
/// so that their products are comparable, and finally raised to at least 1.
pub fn cold_start_point(p: &StandardLp) -> Result<IpmState, IpmError> {
    let n = p.n();
    let mut ne = NormalEquations::analyze(&p.a);
    let ones = vec![1.0; n];
    ne.factor(&p.a, &ones)?;
    let (v, _) = ne.solve_refined(&p.a, &ones, &p.b, REFINE_STEPS);
    let mut x = p.a.tmul_vec(&v);
    let mut z = p.c.clone();

    let shift = |u: &mut Vec<f64>| {
        let lo = u.iter().copied().fold(f64::INFINITY, f64::min);
        let d = (-1.5 * lo).max(0.0);
        u.iter_mut().for_each(|v| *v += d);
    };
    shift(&mut x);
    shift(&mut z);
    let xz = dot(&x, &z);
    let (sx, sz): (f64, f64) = (x.iter().sum(), z.iter().sum());
    if xz > 0.0 && sx > 0.0 && sz > 0.0 {
        let (dx, dz) = (0.5 * xz / sz, 0.5 * xz / sx);
        x.iter_mut().for_each(|v| *v += dx);
        z.iter_mut().for_each(|v| *v += dz);
    }
    x.iter_mut().for_each(|v| *v = v.max(1.0));
    z.iter_mut().for_each(|v| *v = v.max(1.0));
    IpmState::from_point(KktPoint {
        x,
        y: vec![0.0; p.m()],
        z,
    })
}

/// Largest `α ≤ 1` with `v + αΔv ≥ 0`.
fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, d)| **d < 0.0)
        .map(|(v, d)| -v / d)
        .fold(1.0, f64::min)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub alpha_p: f64,
    pub alpha_d: f64,
    pub sigma: f64,
    pub mu_before: f64,
    pub mu_after: f64,
}

impl StepReport {
    pub fn min_step(&self) -> f64 {
        self.alpha_p.min(self.alpha_d)
    }
}

/// Computes one predictor-corrector step. The step is applied only when
/// `min(α_p, α_d) ≥ params.min_step`; otherwise `state` is left untouched
/// and the report signals the stall.
pub fn predictor_corrector_iteration(
    p: &StandardLp,
    sys: &mut NewtonSystem,
    state: &mut IpmState,
    params: &IpmParams,
) -> Result<StepReport, IpmError> {
    let n = p.n();
    let pt = state.point();
    let r = residuals(p, &pt)?;
    let mu = state.mu();
    sys.factor(p, &state.x, &state.z)?;

    let xz: Vec<f64> = state.x.iter().zip(&state.z).map(|(x, z)| x * z).collect();
    let rc_aff: Vec<f64> = xz.iter().map(|v| -v).collect();
    let aff = sys.solve(p, &state.x, &state.z, &r.r_p, &r.r_d, &rc_aff)?;
    let ap = max_step(&state.x, &aff.dx);
    let ad = max_step(&state.z, &aff.dz);
    let mu_aff = (0..n)
        .map(|j| (state.x[j] + ap * aff.dx[j]) * (state.z[j] + ad * aff.dz[j]))
        .sum::<f64>()
        / n as f64;
    let sigma = if mu > 0.0 {
        (mu_aff.max(0.0) / mu).min(1.0).powf(params.centering_power)
    } else {
        0.0
    };

    let rc: Vec<f64> = (0..n)
        .map(|j| sigma * mu - xz[j] - aff.dx[j] * aff.dz[j])
        .collect();
    let dir = sys.solve(p, &state.x, &state.z, &r.r_p, &r.r_d, &rc)?;
    let alpha_p = (params.step_fraction * max_step(&state.x, &dir.dx)).min(1.0);
    let alpha_d = (params.step_fraction * max_step(&state.z, &dir.dz)).min(1.0);

    let mut report = StepReport {
        alpha_p,
        alpha_d,
        sigma,
        mu_before: mu,
        mu_after: mu,
    };
    if report.min_step() < params.min_step {
        return Ok(report);
    }
    for j in 0..n {
        state.x[j] += alpha_p * dir.dx[j];
        state.z[j] += alpha_d * dir.dz[j];
    }
    for (y, d) in state.y.iter_mut().zip(&dir.dy) {
        *y += alpha_d * d;
    }
    state.iteration += 1;
    state.alpha_p = alpha_p;
    state.alpha_d = alpha_d;
    report.mu_after = state.mu();
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IpmStats {
    /// Accepted predictor-corrector iterations.
    pub iterations: usize,
    pub wall_seconds: f64,
    /// `μ` at the start and after every accepted iteration.
    pub mu_history: Vec<f64>,
    /// Max violation (on the solved model) at the same points as `mu_history`.
    pub violation_history: Vec<f64>,
    /// Index of the iteration that could not take a step, on `Stalled`.
    pub stall_iteration: Option<usize>,
    pub final_check: TerminationCheck,
}

#[derive(Debug, Clone)]
pub struct IpmResult {
    pub status: SolveStatus,
    pub state: IpmState,
    pub stats: IpmStats,
    /// Set when the status is `NumericalFailure`.
    pub error: Option<IpmError>,
    /// Iterate with the smallest max violation seen, and that violation.
    pub best: KktPoint,
    pub best_violation: f64,
}

impl IpmResult {
    /// The last iterate.
    pub fn point(&self) -> KktPoint {
        self.state.point()
    }

    /// The last iterate when optimal, otherwise the least violated one.
    pub fn best_point(&self) -> KktPoint {
        if self.status == SolveStatus::Optimal {
            self.state.point()
        } else {
            self.best.clone()
        }
    }
}

/// Runs the interior-point method from `start` or from [`cold_start_point`].
///
/// Termination is tested before every step. `Stalled` is returned as soon
/// as an iteration's step length `min(α_p, α_d)` falls below
/// `params.min_step`; the returned state is the last accepted iterate and
/// `best` the least violated one.
pub fn run_ipm(
    p: &StandardLp,
    params: &IpmParams,
    start: Option<IpmState>,
) -> Result<IpmResult, IpmError> {
    assert!(params.step_fraction > 0.0 && params.step_fraction < 1.0);
    assert!(params.min_step > 0.0);
    let clock = Instant::now();
    let mut state = match start {
        Some(s) => {
            check_len("x", p.n(), s.x.len())?;
            check_len("y", p.m(), s.y.len())?;
            check_len("z", p.n(), s.z.len())?;
            IpmState::from_point(s.point())?;
            s
        }
        None => cold_start_point(p)?,
    };
    let mut sys = NewtonSystem::analyze(p);
    let first = state.iteration;
    let mut stats = IpmStats {
        iterations: 0,
        wall_seconds: 0.0,
        mu_history: Vec::new(),
        violation_history: Vec::new(),
        stall_iteration: None,
        final_check: termination_from_residuals(p, &residuals(p, &state.point())?, params.eps_rel),
    };

    let mut best = state.point();
    let mut best_violation = f64::INFINITY;
    let status = loop {
        let r = residuals(p, &state.point())?;
        stats.final_check = termination_from_residuals(p, &r, params.eps_rel);
        let v = violation_from_residuals(&r).max_violation;
        if v < best_violation {
            best_violation = v;
            best = state.point();
        }
        stats.mu_history.push(state.mu());
        stats.violation_history.push(v);
        if stats.final_check.passed {
            break SolveStatus::Optimal;
        }
        if state.iteration - first >= params.max_iters {
            break SolveStatus::IterationLimit;
        }
        if clock.elapsed().as_secs_f64() >= params.time_limit_s {
            break SolveStatus::TimeLimit;
        }
        match predictor_corrector_iteration(p, &mut sys, &mut state, params) {
            Ok(rep) if rep.min_step() < params.min_step => {
                stats.stall_iteration = Some(state.iteration - first);
                break SolveStatus::Stalled;
            }
            Ok(_) => {}
            Err(IpmError::Lp(e)) => return Err(IpmError::Lp(e)),
            Err(e) => {
                stats.iterations = state.iteration - first;
                stats.wall_seconds = clock.elapsed().as_secs_f64();
                return Ok(IpmResult {
                    status: SolveStatus::NumericalFailure,
                    state,
                    stats,
                    error: Some(e),
                    best,
                    best_violation,
                });
            }
        }
    };
    stats.iterations = state.iteration - first;
    stats.wall_seconds = clock.elapsed().as_secs_f64();
    Ok(IpmResult {
        status,
        state,
        stats,
        error: None,
        best,
        best_violation,
    })
}
