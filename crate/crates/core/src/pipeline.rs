//! End-to-end solves of a [`GeneralLp`]:
//! presolve → standard form → scale → solve → unscale → recover → postsolve,
//! with the violation measured on the original model.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::ipm::{run_ipm, IpmError, IpmParams, IpmResult};
use crate::lp::{
    original_violation, to_standard_form, violation_summary, GeneralLp, KktPoint, StandardLp,
    ViolationSummary,
};
use crate::pdhg::{run_pdhg, PdhgParams};
use crate::solution::{PhaseIterations, SolutionFile};
use crate::status::SolveStatus;
use crate::transform::{
    postsolve, presolve, ruiz_equilibrate, unscale_point, PresolveError, PresolveStack,
    ScalingInfo, DEFAULT_RUIZ_ITERS,
};
use crate::warmstart::{warm_ipm, WarmStartParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// PDHG alone at the given relative tolerance.
    Pdhg { eps: f64 },
    /// Interior point from the default cold start.
    IpmCold,
    /// PDHG at `pdhg_eps`, then the warm-started interior point.
    Hybrid { pdhg_eps: f64 },
}

fn eps_suffix(eps: f64) -> String {
    let k = -eps.log10();
    if (k - k.round()).abs() < 1e-12 && k.round() >= 1.0 {
        format!("1e{}", k.round() as i64)
    } else {
        format!("{eps:e}")
    }
}

fn parse_suffix(s: &str) -> Option<f64> {
    let v = match s.strip_prefix("1e") {
        Some(k) if !k.starts_with('-') => 10f64.powi(-k.parse::<i32>().ok()?),
        _ => s.parse::<f64>().ok()?,
    };
    (v > 0.0 && v.is_finite()).then_some(v)
}

impl Method {
    pub const DEFAULT_PDHG_EPS: f64 = 1e-4;

    /// Stable tag used in result files: `pdhg-1e4`, `ipm-cold`, `hybrid`,
    /// `hybrid-1e6`, ...
    pub fn tag(&self) -> String {
        match *self {
            Method::Pdhg { eps } => format!("pdhg-{}", eps_suffix(eps)),
            Method::IpmCold => "ipm-cold".into(),
            Method::Hybrid { pdhg_eps } if pdhg_eps == Self::DEFAULT_PDHG_EPS => "hybrid".into(),
            Method::Hybrid { pdhg_eps } => format!("hybrid-{}", eps_suffix(pdhg_eps)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown method `{0}` (expected pdhg[-1eK], ipm-cold or hybrid[-1eK])")]
pub struct UnknownMethod(pub String);

impl FromStr for Method {
    type Err = UnknownMethod;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || UnknownMethod(s.to_string());
        match s {
            "pdhg" => Ok(Method::Pdhg { eps: Self::DEFAULT_PDHG_EPS }),
            "ipm-cold" | "ipm" => Ok(Method::IpmCold),
            "hybrid" => Ok(Method::Hybrid { pdhg_eps: Self::DEFAULT_PDHG_EPS }),
            _ => {
                if let Some(rest) = s.strip_prefix("pdhg-") {
                    parse_suffix(rest).map(|eps| Method::Pdhg { eps }).ok_or_else(bad)
                } else if let Some(rest) = s.strip_prefix("hybrid-") {
                    parse_suffix(rest).map(|pdhg_eps| Method::Hybrid { pdhg_eps }).ok_or_else(bad)
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    pub presolve: bool,
    pub scaling: bool,
    pub ruiz_iters: usize,
    /// Wall-clock budget for the whole pipeline.
    pub time_limit_s: f64,
    pub pdhg: PdhgParams,
    pub ipm: IpmParams,
    pub warm: WarmStartParams,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            presolve: true,
            scaling: true,
            ruiz_iters: DEFAULT_RUIZ_ITERS,
            time_limit_s: 10_000.0,
            pdhg: PdhgParams::default(),
            ipm: IpmParams::default(),
            warm: WarmStartParams::default(),
        }
    }
}

/// Outcome of one (model, method) run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub model: String,
    pub method: String,
    pub status: SolveStatus,
    /// Objective of the original model in its own sense (NaN without a point).
    pub objective: f64,
    pub wall_seconds: f64,
    pub pdhg_iterations: u64,
    pub ipm_iterations: u64,
    pub escalations: u64,
    pub pdhg_seconds: f64,
    pub ipm_seconds: f64,
    /// Violation on the original model.
    pub violation: Option<ViolationSummary>,
    /// Violation on the presolved, scaled standard-form model the solver saw.
    pub scaled_violation: Option<ViolationSummary>,
    /// Original-model violation of the PDHG point (hybrid runs only).
    pub pdhg_violation: Option<ViolationSummary>,
    /// Solution of the original model.
    pub point: Option<KktPoint>,
    pub message: Option<String>,
}

impl SolveReport {
    fn empty(model: &str, method: Method) -> Self {
        SolveReport {
            model: model.to_string(),
            method: method.tag(),
            status: SolveStatus::Error,
            objective: f64::NAN,
            wall_seconds: 0.0,
            pdhg_iterations: 0,
            ipm_iterations: 0,
            escalations: 0,
            pdhg_seconds: 0.0,
            ipm_seconds: 0.0,
            violation: None,
            scaled_violation: None,
            pdhg_violation: None,
            point: None,
            message: None,
        }
    }

    pub fn max_violation(&self) -> Option<f64> {
        self.violation.map(|v| v.max_violation)
    }

    /// Serializable form, keyed by the names of `g` (the original model).
    pub fn to_solution_file(&self, g: &GeneralLp) -> SolutionFile {
        let pair = |names: &[String], vals: Option<&Vec<f64>>| -> Vec<(String, f64)> {
            match vals {
                Some(v) => names.iter().cloned().zip(v.iter().copied()).collect(),
                None => Vec::new(),
            }
        };
        let pt = self.point.as_ref();
        SolutionFile {
            model: self.model.clone(),
            status: self.status,
            method: self.method.clone(),
            objective: self.objective,
            wall_seconds: self.wall_seconds,
            iterations: PhaseIterations {
                pdhg: self.pdhg_iterations,
                ipm: self.ipm_iterations,
                escalations: self.escalations,
            },
            violation: self.violation,
            x: pair(&g.col_names, pt.map(|p| &p.x)),
            y: pair(&g.row_names, pt.map(|p| &p.y)),
            z: pair(&g.col_names, pt.map(|p| &p.z)),
        }
    }
}

/// Objective of `g` at `x` in the model's own sense.
pub fn reported_objective(g: &GeneralLp, x: &[f64]) -> f64 {
    let v = g.objective(x);
    // Adding 0 turns -0 into 0.
    if g.maximize {
        -v + 0.0
    } else {
        v + 0.0
    }
}

/// Everything needed to map a point of the solved model back to `g`.
struct Transformed {
    original: GeneralLp,
    reduced: GeneralLp,
    stack: PresolveStack,
    std: StandardLp,
    scaling: ScalingInfo,
    scaled: StandardLp,
}

impl Transformed {
    fn map_back(&self, pt_scaled: &KktPoint) -> Result<KktPoint, String> {
        let pt = unscale_point(&self.scaling, pt_scaled).map_err(|e| e.to_string())?;
        let general = self.std.recover(&self.reduced, &pt).map_err(|e| e.to_string())?;
        postsolve(&self.stack, &general).map_err(|e| e.to_string())
    }

    fn original_violation(&self, pt: &KktPoint) -> Option<ViolationSummary> {
        original_violation(&self.original, pt).ok()
    }
}

enum Prepared {
    Model(Box<Transformed>),
    /// Presolve removed everything; carries the original-model point.
    Solved(KktPoint),
    Verdict(SolveStatus, String),
}

fn prepare(g: &GeneralLp, opts: &SolveOptions) -> Prepared {
    if let Err(e) = g.validate() {
        return Prepared::Verdict(SolveStatus::Error, e.to_string());
    }
    let (reduced, stack) = if opts.presolve {
        match presolve(g) {
            Ok(r) => r,
            Err(PresolveError::Infeasible(m)) => return Prepared::Verdict(SolveStatus::Infeasible, m),
            Err(PresolveError::Unbounded(m)) => return Prepared::Verdict(SolveStatus::Unbounded, m),
            Err(PresolveError::Invalid(e)) => return Prepared::Verdict(SolveStatus::Error, e.to_string()),
        }
    } else {
        (g.clone(), PresolveStack::empty(g))
    };
    if stack.solved_completely() {
        return match postsolve(&stack, &KktPoint::zeros(0, 0)) {
            Ok(pt) => Prepared::Solved(pt),
            Err(e) => Prepared::Verdict(SolveStatus::Error, e.to_string()),
        };
    }
    let std = match to_standard_form(&reduced) {
        Ok(s) => s,
        Err(e) => return Prepared::Verdict(SolveStatus::Error, e.to_string()),
    };
    let (scaled, scaling) = if opts.scaling {
        match ruiz_equilibrate(&std, opts.ruiz_iters) {
            Ok(r) => r,
            Err(e) => return Prepared::Verdict(SolveStatus::Error, e.to_string()),
        }
    } else {
        (std.clone(), ScalingInfo::identity(std.m(), std.n()))
    };
    Prepared::Model(Box::new(Transformed {
        original: g.clone(),
        reduced,
        stack,
        std,
        scaling,
        scaled,
    }))
}

/// Runs `method` on `g`. Failures are reported through the status and
/// message of the returned report, never as a panic or an `Err`.
pub fn solve_general(g: &GeneralLp, method: Method, opts: &SolveOptions) -> SolveReport {
    let clock = Instant::now();
    let mut rep = SolveReport::empty(&g.name, method);
    let finish = |mut rep: SolveReport| {
        rep.wall_seconds = clock.elapsed().as_secs_f64();
        if let Some(pt) = &rep.point {
            rep.objective = reported_objective(g, &pt.x);
        }
        rep
    };

    let t = match prepare(g, opts) {
        Prepared::Model(t) => t,
        Prepared::Solved(pt) => {
            rep.status = SolveStatus::Optimal;
            rep.violation = original_violation(g, &pt).ok();
            rep.point = Some(pt);
            return finish(rep);
        }
        Prepared::Verdict(status, msg) => {
            rep.status = status;
            rep.message = Some(msg);
            return finish(rep);
        }
    };
    let remaining = || (opts.time_limit_s - clock.elapsed().as_secs_f64()).max(0.0);

    let solved: Result<(SolveStatus, KktPoint), String> = match method {
        Method::Pdhg { eps } => {
            let params = PdhgParams {
                eps_rel: eps,
                time_limit_s: remaining(),
                ..opts.pdhg.clone()
            };
            run_pdhg(&t.scaled, &params)
                .map(|r| {
                    rep.pdhg_iterations = r.stats.iterations;
                    rep.pdhg_seconds = r.stats.wall_seconds;
                    (r.status, r.point)
                })
                .map_err(|e| e.to_string())
        }
        Method::IpmCold => {
            let params = IpmParams {
                time_limit_s: remaining(),
                ..opts.ipm.clone()
            };
            let t0 = Instant::now();
            let r = run_ipm(&t.scaled, &params, None);
            rep.ipm_seconds = t0.elapsed().as_secs_f64();
            ipm_outcome(&mut rep, r.map(|r| (r.stats.iterations, 0, r)))
        }
        Method::Hybrid { pdhg_eps } => {
            let params = PdhgParams {
                eps_rel: pdhg_eps,
                time_limit_s: remaining(),
                ..opts.pdhg.clone()
            };
            match run_pdhg(&t.scaled, &params) {
                Err(e) => Err(e.to_string()),
                Ok(pd) => {
                    rep.pdhg_iterations = pd.stats.iterations;
                    rep.pdhg_seconds = pd.stats.wall_seconds;
                    if let Ok(orig) = t.map_back(&pd.point) {
                        rep.pdhg_violation = t.original_violation(&orig);
                    }
                    if pd.status == SolveStatus::TimeLimit || remaining() <= 0.0 {
                        Ok((SolveStatus::TimeLimit, pd.point))
                    } else {
                        let ipm = IpmParams {
                            time_limit_s: remaining(),
                            ..opts.ipm.clone()
                        };
                        let t0 = Instant::now();
                        let w = warm_ipm(&t.scaled, &pd.point, &ipm, &opts.warm);
                        rep.ipm_seconds = t0.elapsed().as_secs_f64();
                        ipm_outcome(&mut rep, w.map(|w| (w.iterations, w.escalations, w.result)))
                    }
                }
            }
        }
    };

    match solved {
        Err(msg) => {
            rep.status = SolveStatus::Error;
            rep.message = Some(msg);
        }
        Ok((status, pt_scaled)) => {
            rep.status = status;
            rep.scaled_violation = violation_summary(&t.scaled, &pt_scaled).ok();
            match t.map_back(&pt_scaled) {
                Ok(pt) => {
                    rep.violation = t.original_violation(&pt);
                    rep.point = Some(pt);
                }
                Err(msg) => {
                    rep.status = SolveStatus::Error;
                    rep.message = Some(msg);
                }
            }
        }
    }
    finish(rep)
}

fn ipm_outcome(
    rep: &mut SolveReport,
    r: Result<(usize, usize, IpmResult), IpmError>,
) -> Result<(SolveStatus, KktPoint), String> {
    let (iterations, escalations, result) = r.map_err(|e| e.to_string())?;
    rep.ipm_iterations = iterations as u64;
    rep.escalations = escalations as u64;
    if let Some(e) = &result.error {
        rep.message = Some(e.to_string());
    }
    Ok((result.status, result.best_point()))
}
