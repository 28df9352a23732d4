//! Restarted primal-dual hybrid gradient for `min cᵀx s.t. Ax = b, x ≥ 0`.
//!
//! Iteration (with primal weight `ω`):
//!
//! ```text
//!     x⁺ = max(0, x − (τ/ω)(c − Aᵀy))
//!     y⁺ = y + (σω)(b − A(2x⁺ − x))
//! ```
//!
//! Step sizes are constant, `τ = σ = 1/L` with `L ≥ ‖A‖₂` from
//! [`estimate_opnorm`]. Averages are uniform since the last restart. Every
//! `check_every` iterations both the current and the averaged iterate are
//! scored by their max violation on the (scaled) model. The better one
//! becomes a restart candidate; a restart happens when its score has
//! dropped to `restart_beta` times the score at the last restart, or when
//! the current restart epoch has run for more than a third of all
//! iterations so far.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::LpError;
use crate::lp::{
    residuals, termination_from_residuals, violation_from_residuals, KktPoint, StandardLp,
    TerminationCheck,
};
use crate::sparse::{norm2, CsMatrix};
use crate::status::SolveStatus;

#[derive(Debug, Clone, PartialEq)]
pub struct PdhgParams {
    pub eps_rel: f64,
    /// Budget in matrix passes (one `A·x` plus one `Aᵀ·y`).
    pub max_kkt_passes: u64,
    pub time_limit_s: f64,
    pub check_every: u64,
    pub restart_beta: f64,
    pub primal_weight_init: f64,
    /// Seed of the power-iteration start vector.
    pub seed: u64,
}

impl Default for PdhgParams {
    fn default() -> Self {
        PdhgParams {
            eps_rel: 1e-4,
            max_kkt_passes: 1_000_000,
            time_limit_s: 10_000.0,
            check_every: 64,
            restart_beta: 0.2,
            primal_weight_init: 1.0,
            seed: 0,
        }
    }
}

impl PdhgParams {
    pub fn with_eps(eps_rel: f64) -> Self {
        PdhgParams {
            eps_rel,
            ..Self::default()
        }
    }
}

const OPNORM_MAX_ITERS: usize = 100;
const OPNORM_REL_TOL: f64 = 1e-4;
/// Safety factor between the power-iteration estimate and the bound used
/// for step sizes.
pub const OPNORM_SAFETY: f64 = 1.05;
const PRIMAL_WEIGHT_MIN: f64 = 1e-4;
const PRIMAL_WEIGHT_MAX: f64 = 1e4;
const PRIMAL_WEIGHT_SMOOTHING: f64 = 0.5;
const ARTIFICIAL_RESTART_FRACTION: f64 = 0.36;

/// Power iteration on `AᵀA`. The returned estimate is a lower bound on
/// `‖A‖₂` (a Rayleigh quotient); callers that need an upper bound multiply
/// by [`OPNORM_SAFETY`] (see [`step_bound`]).
pub fn estimate_opnorm(a: &CsMatrix, seed: u64) -> Result<f64, LpError> {
    if a.nnz() == 0 {
        return Err(LpError::ZeroMatrix);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..a.ncols()).map(|_| rng.gen_range(0.5..1.5)).collect();
    let mut lambda = 0.0;
    for _ in 0..OPNORM_MAX_ITERS {
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let av = a.mul_vec(&v);
        let est = norm2(&av);
        let w = a.tmul_vec(&av);
        let done = lambda > 0.0 && (est - lambda).abs() <= OPNORM_REL_TOL * est;
        lambda = est;
        if done || norm2(&w) == 0.0 {
            break;
        }
        v = w;
    }
    if lambda == 0.0 {
        // The random start was orthogonal to the row space; fall back to the
        // largest column norm, which is also a lower bound.
        lambda = (0..a.ncols())
            .map(|j| a.col(j).map(|(_, v)| v * v).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
    }
    Ok(lambda)
}

/// Upper bound on `‖A‖₂` used for step sizes: the smaller of
/// `OPNORM_SAFETY · estimate` and `sqrt(‖A‖₁‖A‖∞)`.
pub fn step_bound(a: &CsMatrix, seed: u64) -> Result<f64, LpError> {
    let est = estimate_opnorm(a, seed)?;
    let holder = (a.norm_one() * a.norm_inf()).sqrt();
    Ok((OPNORM_SAFETY * est).min(holder))
}

#[derive(Debug, Clone)]
pub struct PdhgState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub x_sum: Vec<f64>,
    pub y_sum: Vec<f64>,
    pub avg_weight: f64,
    pub tau: f64,
    pub sigma: f64,
    pub primal_weight: f64,
    pub iteration: u64,
    pub restart_x: Vec<f64>,
    pub restart_y: Vec<f64>,
    pub restart_score: f64,
    pub last_restart_iter: u64,
    ax: Vec<f64>,
    aty: Vec<f64>,
}

impl PdhgState {
    /// State at `(x, y)` with `τ = σ = 1/bound`.
    pub fn new(p: &StandardLp, x: Vec<f64>, y: Vec<f64>, bound: f64, primal_weight: f64) -> Self {
        assert!(bound > 0.0);
        let ax = p.a.mul_vec(&x);
        let aty = p.a.tmul_vec(&y);
        PdhgState {
            x_sum: vec![0.0; x.len()],
            y_sum: vec![0.0; y.len()],
            avg_weight: 0.0,
            tau: 1.0 / bound,
            sigma: 1.0 / bound,
            primal_weight,
            iteration: 0,
            restart_x: x.clone(),
            restart_y: y.clone(),
            restart_score: f64::INFINITY,
            last_restart_iter: 0,
            x,
            y,
            ax,
            aty,
        }
    }

    pub fn average(&self) -> (Vec<f64>, Vec<f64>) {
        if self.avg_weight == 0.0 {
            return (self.x.clone(), self.y.clone());
        }
        let w = self.avg_weight;
        (
            self.x_sum.iter().map(|v| v / w).collect(),
            self.y_sum.iter().map(|v| v / w).collect(),
        )
    }

    fn restart_at(&mut self, p: &StandardLp, x: Vec<f64>, y: Vec<f64>, score: f64) {
        self.ax = p.a.mul_vec(&x);
        self.aty = p.a.tmul_vec(&y);
        self.restart_x = x.clone();
        self.restart_y = y.clone();
        self.x = x;
        self.y = y;
        self.x_sum.iter_mut().for_each(|v| *v = 0.0);
        self.y_sum.iter_mut().for_each(|v| *v = 0.0);
        self.avg_weight = 0.0;
        self.restart_score = score;
        self.last_restart_iter = self.iteration;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericalFailure;

/// One PDHG iteration; updates the running averages with unit weight.
pub fn pdhg_step(state: &mut PdhgState, p: &StandardLp) -> Result<(), NumericalFailure> {
    let tau = state.tau / state.primal_weight;
    let sigma = state.sigma * state.primal_weight;
    let n = state.x.len();
    let mut x_new = vec![0.0; n];
    for j in 0..n {
        x_new[j] = (state.x[j] - tau * (p.c[j] - state.aty[j])).max(0.0);
    }
    let ax_new = p.a.mul_vec(&x_new);
    for i in 0..state.y.len() {
        let extrap = 2.0 * ax_new[i] - state.ax[i];
        state.y[i] += sigma * (p.b[i] - extrap);
    }
    state.x = x_new;
    state.ax = ax_new;
    p.a.tmul_vec_into(&state.y, &mut state.aty);
    if !state.y.iter().chain(&state.x).all(|v| v.is_finite()) {
        return Err(NumericalFailure);
    }
    for (s, v) in state.x_sum.iter_mut().zip(&state.x) {
        *s += v;
    }
    for (s, v) in state.y_sum.iter_mut().zip(&state.y) {
        *s += v;
    }
    state.avg_weight += 1.0;
    state.iteration += 1;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdhgStats {
    pub iterations: u64,
    pub restarts: u64,
    pub kkt_passes: u64,
    pub wall_seconds: f64,
    pub final_check: TerminationCheck,
    /// Max violation of the returned point on the model it was solved on.
    pub final_score: f64,
    pub primal_weight: f64,
}

#[derive(Debug, Clone)]
pub struct PdhgResult {
    pub status: SolveStatus,
    pub point: KktPoint,
    pub stats: PdhgStats,
}

struct Scored {
    point: KktPoint,
    check: TerminationCheck,
    score: f64,
    primal_norm: f64,
    dual_norm: f64,
}

fn score_point(p: &StandardLp, x: Vec<f64>, y: Vec<f64>, eps: f64) -> Scored {
    let z = crate::lp::extract_reduced_costs(p, &y);
    let point = KktPoint { x, y, z };
    let r = residuals(p, &point).expect("dimensions fixed by construction");
    let check = termination_from_residuals(p, &r, eps);
    let score = violation_from_residuals(&r).max_violation;
    Scored {
        point,
        check,
        score,
        primal_norm: norm2(&r.r_p),
        dual_norm: norm2(&r.r_d),
    }
}

/// Runs restarted PDHG from the origin. The model should already be scaled.
pub fn run_pdhg(p: &StandardLp, params: &PdhgParams) -> Result<PdhgResult, LpError> {
    assert!(params.eps_rel > 0.0, "eps_rel must be positive");
    assert!(params.check_every >= 1, "check_every must be at least 1");
    let start = Instant::now();
    let bound = step_bound(&p.a, params.seed)?;
    let mut state = PdhgState::new(
        p,
        vec![0.0; p.n()],
        vec![0.0; p.m()],
        bound,
        params.primal_weight_init,
    );
    let mut passes: u64 = 2;
    let mut restarts = 0;

    let initial = score_point(p, state.x.clone(), state.y.clone(), params.eps_rel);
    state.restart_score = initial.score;
    let mut best = initial;

    let finish = |status: SolveStatus, s: Scored, st: &PdhgState, passes, restarts| PdhgResult {
        status,
        stats: PdhgStats {
            iterations: st.iteration,
            restarts,
            kkt_passes: passes,
            wall_seconds: start.elapsed().as_secs_f64(),
            final_check: s.check,
            final_score: s.score,
            primal_weight: st.primal_weight,
        },
        point: s.point,
    };

    if best.check.passed {
        return Ok(finish(SolveStatus::Optimal, best, &state, passes, restarts));
    }

    loop {
        if start.elapsed().as_secs_f64() >= params.time_limit_s {
            return Ok(finish(SolveStatus::TimeLimit, best, &state, passes, restarts));
        }
        if passes >= params.max_kkt_passes {
            return Ok(finish(SolveStatus::IterationLimit, best, &state, passes, restarts));
        }
        for _ in 0..params.check_every {
            if pdhg_step(&mut state, p).is_err() {
                return Ok(finish(SolveStatus::NumericalFailure, best, &state, passes, restarts));
            }
            passes += 1;
        }

        let cur = score_point(p, state.x.clone(), state.y.clone(), params.eps_rel);
        let (ax, ay) = state.average();
        let avg = score_point(p, ax, ay, params.eps_rel);
        passes += 2;

        let (cand, other) = match (cur.check.passed, avg.check.passed) {
            (true, false) => (cur, avg),
            (false, true) => (avg, cur),
            _ if avg.score <= cur.score => (avg, cur),
            _ => (cur, avg),
        };
        drop(other);
        if cand.check.passed {
            return Ok(finish(SolveStatus::Optimal, cand, &state, passes, restarts));
        }

        let since = state.iteration - state.last_restart_iter;
        let artificial = since as f64 >= ARTIFICIAL_RESTART_FRACTION * state.iteration as f64;
        if cand.score <= params.restart_beta * state.restart_score || artificial {
            update_primal_weight(&mut state, &cand);
            state.restart_at(p, cand.point.x.clone(), cand.point.y.clone(), cand.score);
            restarts += 1;
        }
        if cand.score < best.score {
            best = cand;
        }
    }
}

/// Rebalances `ω` toward the ratio of primal to dual residual norms
/// (geometric smoothing, clipped to `[1e-4, 1e4]`).
fn update_primal_weight(state: &mut PdhgState, cand: &Scored) {
    if cand.primal_norm > 0.0 && cand.dual_norm > 0.0 {
        let target = (cand.primal_norm / cand.dual_norm).ln();
        let cur = state.primal_weight.ln();
        let w = (PRIMAL_WEIGHT_SMOOTHING * target + (1.0 - PRIMAL_WEIGHT_SMOOTHING) * cur).exp();
        state.primal_weight = w.clamp(PRIMAL_WEIGHT_MIN, PRIMAL_WEIGHT_MAX);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::check_relative_termination;

    fn lp1() -> StandardLp {
        StandardLp::from_dense(&[vec![1.0, 1.0]], &[1.0], &[1.0, 2.0]).unwrap()
    }

    fn lp2() -> StandardLp {
        StandardLp::from_dense(
            &[vec![1.0, 2.0, 1.0, 0.0], vec![3.0, 1.0, 0.0, 1.0]],
            &[4.0, 6.0],
            &[-1.0, -1.0, 0.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn opnorm_examples() {
        let a = CsMatrix::from_dense(&[vec![3.0]]);
        assert!((estimate_opnorm(&a, 0).unwrap() - 3.0).abs() < 1e-12);
        let a = CsMatrix::from_dense(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 5.0],
        ]);
        let e = estimate_opnorm(&a, 0).unwrap();
        assert!(e <= 5.0 + 1e-12 && 5.0 <= OPNORM_SAFETY * e, "{e}");
        let a = CsMatrix::from_dense(&[vec![1.0, 1.0]]);
        let e = estimate_opnorm(&a, 0).unwrap();
        assert!(e <= 2f64.sqrt() + 1e-12 && 2f64.sqrt() <= OPNORM_SAFETY * e, "{e}");
        assert_eq!(estimate_opnorm(&CsMatrix::zeros(2, 2), 0), Err(LpError::ZeroMatrix));
    }

    #[test]
    fn first_step_on_lp1() {
        let p = lp1();
        let norm = 2f64.sqrt();
        let mut st = PdhgState::new(&p, vec![0.0; 2], vec![0.0], norm / 0.5, 1.0);
        pdhg_step(&mut st, &p).unwrap();
        assert_eq!(st.x, vec![0.0, 0.0]);
        assert!((st.y[0] - 0.5 / norm).abs() < 1e-15);
    }

    #[test]
    fn saddle_point_is_fixed() {
        let p = lp1();
        let mut st = PdhgState::new(&p, vec![1.0, 0.0], vec![1.0], 2.0, 1.0);
        pdhg_step(&mut st, &p).unwrap();
        assert_eq!(st.x, vec![1.0, 0.0]);
        assert_eq!(st.y, vec![1.0]);
    }

    #[test]
    fn negative_primal_entries_are_clamped() {
        let p = lp1();
        // c − Aᵀy = (11, 12): the gradient step overshoots zero.
        let mut st = PdhgState::new(&p, vec![0.01, 0.01], vec![-10.0], 1.0, 1.0);
        pdhg_step(&mut st, &p).unwrap();
        assert_eq!(st.x, vec![0.0, 0.0]);
    }

    #[test]
    fn lp1_converges_to_vertex() {
        let p = lp1();
        let res = run_pdhg(&p, &PdhgParams::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        assert!(check_relative_termination(&p, &res.point, 1e-4).unwrap().passed);
        assert!((res.point.x[0] - 1.0).abs() < 1e-3 && res.point.x[1].abs() < 1e-3);
    }

    #[test]
    fn lp2_converges() {
        let p = lp2();
        let res = run_pdhg(&p, &PdhgParams::default()).unwrap();
        assert_eq!(res.status, SolveStatus::Optimal);
        let v = crate::lp::violation_summary(&p, &res.point).unwrap();
        assert!(v.max_violation <= 1e-3, "{v:?}");
    }

    #[test]
    fn tighter_tolerance_costs_more_iterations() {
        let p = lp1();
        let loose = run_pdhg(&p, &PdhgParams::with_eps(1e-4)).unwrap();
        let tight = run_pdhg(&p, &PdhgParams::with_eps(1e-8)).unwrap();
        assert_eq!(loose.status, SolveStatus::Optimal);
        assert_eq!(tight.status, SolveStatus::Optimal);
        assert!(tight.stats.iterations >= loose.stats.iterations);
    }

    #[test]
    fn zero_time_limit_returns_best_point() {
        let p = lp2();
        let params = PdhgParams {
            time_limit_s: 0.0,
            ..PdhgParams::default()
        };
        let res = run_pdhg(&p, &params).unwrap();
        assert_eq!(res.status, SolveStatus::TimeLimit);
        assert_eq!(res.point.x.len(), 4);
    }

    #[test]
    fn primal_iterates_stay_nonnegative() {
        let p = lp2();
        let bound = step_bound(&p.a, 0).unwrap();
        let mut st = PdhgState::new(&p, vec![0.0; 4], vec![0.0; 2], bound, 1.0);
        for _ in 0..500 {
            pdhg_step(&mut st, &p).unwrap();
            assert!(st.x.iter().all(|&v| v >= 0.0));
        }
    }
}
