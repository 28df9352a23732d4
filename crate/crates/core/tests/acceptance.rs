//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test -p hylp --test acceptance`.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hylp::desk::{desk_suite, DeskInstance};
use hylp::harness::{format_summary, scatter_export, summarize, ResultRecord, SummaryRow};
use hylp::ipm::{run_ipm, IpmParams, IpmState};
use hylp::pdhg::{run_pdhg, PdhgParams};
use hylp::transform::{
    postsolve, presolve, ruiz_equilibrate, scale_point, unscale_point, DEFAULT_RUIZ_ITERS,
};
use hylp::warmstart::{center_pair, centered_start, warm_ipm_from, WarmStartParams};
use hylp::{
    check_relative_termination, original_violation, residuals, solve_general, to_standard_form,
    violation_summary, CsMatrix, GeneralLp, KktPoint, Method, SolveOptions, SolveReport,
    SolveStatus, StandardLp,
};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn fails(failures: &[String]) -> String {
    failures.iter().take(5).cloned().collect::<Vec<_>>().join("; ")
}

fn scaled(g: &GeneralLp) -> StandardLp {
    let (red, _) = presolve(g).expect("presolve");
    let std = to_standard_form(&red).expect("standard form");
    ruiz_equilibrate(&std, DEFAULT_RUIZ_ITERS).expect("scaling").0
}

// 1

fn criterion_1() -> Outcome {
    let clock = Instant::now();
    let ws = WarmStartParams::default();
    let (mu, amin, dmax) = (1e-6, ws.alpha_min, ws.delta_max);
    let mut bad = Vec::new();

    let (x, z) = center_pair(0.0, 5.0, mu, amin, dmax);
    if !(x == 2e-7 && z == 5.0) {
        bad.push(format!("(0,5) moved to ({x:e}, {z:e})"));
    }
    let out = centered_start(&KktPoint { x: vec![0.0], y: vec![0.7], z: vec![5.0] }, &ws);
    if !(out.x == vec![1e-6] && out.z == vec![5.0] && out.y == vec![0.7]) {
        bad.push(format!("(0,5) re-floored to ({:e}, {:e})", out.x[0], out.z[0]));
    }
    let (x, z) = center_pair(3.0, 2.0, mu, amin, dmax);
    if !(x == 2.9999 && z == 1.9999) {
        bad.push(format!("(3,2) moved to ({x:e}, {z:e})"));
    }
    let (x, z) = center_pair(1e-3, 1e-3, mu, amin, dmax);
    if !(x == 1e-3 && z == 1e-3) {
        bad.push(format!("(1e-3,1e-3) moved to ({x:e}, {z:e})"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let coord = |rng: &mut ChaCha8Rng| -> f64 {
        match rng.gen_range(0..4) {
            0 => 0.0,
            1 => 10f64.powf(rng.gen_range(-12.0..-4.0)),
            2 => rng.gen_range(0.0..1.0),
            _ => 10f64.powf(rng.gen_range(0.0..3.0)),
        }
    };
    let pairs = 10_000;
    let mut unclamped = 0;
    for _ in 0..pairs {
        let (x0, z0) = (coord(&mut rng), coord(&mut rng));
        let mu = 10f64.powf(rng.gen_range(-8.0..1.0)).max(ws.mu_min);
        let (xm, zm) = center_pair(x0, z0, mu, amin, dmax);
        let (xf, zf) = (xm.max(amin), zm.max(amin));
        let (xb, zb) = (x0.max(amin), z0.max(amin));
        // One rounding of `v ± δ` is allowed on top of δ.
        let room = |v: f64| dmax + 4.0 * f64::EPSILON * (v + dmax);
        if !(xf >= amin && zf >= amin) {
            bad.push(format!("floor broken at ({x0:e},{z0:e})"));
        }
        if !((xm - xb).abs() <= room(xb) && (zm - zb).abs() <= room(zb)) {
            bad.push(format!("clamp distance exceeded at ({x0:e},{z0:e})"));
        }
        let second_free = if xb < zb {
            (mu / xm - zb).abs() < dmax
        } else {
            (mu / zm - xb).abs() < dmax
        };
        if second_free {
            unclamped += 1;
            if (xm * zm - mu).abs() > 4.0 * f64::EPSILON * mu {
                bad.push(format!("product {:e} != {mu:e} at ({x0:e},{z0:e})", xm * zm));
            }
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    if secs >= 1.0 {
        bad.push(format!("took {secs:.2}s"));
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!("3 worked examples exact; {pairs} pairs ({unclamped} unclamped) in {secs:.3}s")
        } else {
            fails(&bad)
        },
    )
}

// 2

fn dense_oracle(a: &[Vec<f64>], b: &[f64], c: &[f64], pt: &KktPoint) -> (Vec<f64>, Vec<f64>) {
    let m = a.len();
    let n = c.len();
    let mut rp = vec![0.0; m];
    for i in 0..m {
        let mut s = 0.0;
        for j in 0..n {
            s += a[i][j] * pt.x[j];
        }
        rp[i] = b[i] - s;
    }
    let mut rd = vec![0.0; n];
    for j in 0..n {
        let mut s = 0.0;
        for i in 0..m {
            s += a[i][j] * pt.y[i];
        }
        rd[j] = c[j] - s - pt.z[j];
    }
    (rp, rd)
}

fn criterion_2() -> Outcome {
    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    let mut entries = 0;
    for _ in 0..100 {
        let m = rng.gen_range(1..=8);
        let n = rng.gen_range(1..=8);
        let a: Vec<Vec<f64>> = (0..m)
            .map(|_| {
                (0..n)
                    .map(|_| if rng.gen_bool(0.4) { 0.0 } else { rng.gen_range(-10.0..10.0) })
                    .collect()
            })
            .collect();
        let b: Vec<f64> = (0..m).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let p = StandardLp::from_dense(&a, &b, &c).unwrap();
        let pt = KktPoint {
            x: (0..n).map(|_| rng.gen_range(0.0..5.0)).collect(),
            y: (0..m).map(|_| rng.gen_range(-5.0..5.0)).collect(),
            z: (0..n).map(|_| rng.gen_range(0.0..5.0)).collect(),
        };
        let r = residuals(&p, &pt).unwrap();
        let (rp, rd) = dense_oracle(&a, &b, &c, &pt);
        for (u, v) in r.r_p.iter().zip(&rp).chain(r.r_d.iter().zip(&rd)) {
            worst = worst.max((u - v).abs());
            entries += 1;
        }
    }
    let secs = clock.elapsed().as_secs_f64();
    Outcome::new(
        worst <= 1e-12 && secs < 5.0,
        format!("100 LPs, {entries} entries, max |sparse - dense| = {worst:.1e} in {secs:.3}s"),
    )
}

// 3

fn criterion_3(suite: &[DeskInstance]) -> Outcome {
    let mut bad = Vec::new();
    let mut ordered = 0;
    for inst in suite {
        let p = scaled(&inst.model);
        let mut its = Vec::new();
        for eps in [1e-4, 1e-6, 1e-8] {
            let r = run_pdhg(&p, &PdhgParams::with_eps(eps)).unwrap();
            if eps == 1e-4 {
                let check = check_relative_termination(&p, &r.point, 1e-4).unwrap();
                if r.status != SolveStatus::Optimal || !check.passed {
                    bad.push(format!("{} {} check {}", inst.name, r.status, check.passed));
                }
            }
            its.push(r.stats.iterations);
        }
        if its[2] >= its[1] && its[1] >= its[0] {
            ordered += 1;
        }
    }
    let share = ordered as f64 / suite.len() as f64;
    if share < 0.9 {
        bad.push(format!("ordering holds on {:.0}%", 100.0 * share));
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{} instances pass the post-hoc check at 1e-4; it(1e-8) >= it(1e-6) >= it(1e-4) on {ordered}/{}",
                suite.len(),
                suite.len()
            )
        } else {
            fails(&bad)
        },
    )
}

// 4-8 share one set of pipeline runs.

struct Runs {
    pdhg: Vec<SolveReport>,
    cold: Vec<SolveReport>,
    hybrid: Vec<SolveReport>,
    hybrid6: Vec<SolveReport>,
    seconds: f64,
}

impl Runs {
    fn new(suite: &[DeskInstance]) -> Self {
        let clock = Instant::now();
        let opts = SolveOptions::default();
        let run = |tag: &str| -> Vec<SolveReport> {
            let m: Method = tag.parse().unwrap();
            suite.iter().map(|i| solve_general(&i.model, m, &opts)).collect()
        };
        let pdhg = run("pdhg-1e4");
        let cold = run("ipm-cold");
        let hybrid = run("hybrid");
        let hybrid6 = run("hybrid-1e6");
        Runs {
            pdhg,
            cold,
            hybrid,
            hybrid6,
            seconds: clock.elapsed().as_secs_f64(),
        }
    }

    fn records(&self, suite: &[DeskInstance]) -> Vec<ResultRecord> {
        [&self.pdhg, &self.cold, &self.hybrid, &self.hybrid6]
            .into_iter()
            .flat_map(|rs| {
                rs.iter().zip(suite).map(|(r, i)| {
                    let mut rec = ResultRecord::from_report(r);
                    rec.model = i.name.clone();
                    rec
                })
            })
            .collect()
    }
}

fn criterion_4(suite: &[DeskInstance], runs: &Runs) -> Outcome {
    let mut bad = Vec::new();
    let mut worst_v: f64 = 0.0;
    let mut worst_it = 0;
    for (inst, r) in suite.iter().zip(&runs.cold) {
        let v = r.max_violation().unwrap_or(f64::INFINITY);
        worst_v = worst_v.max(v);
        worst_it = worst_it.max(r.ipm_iterations);
        if r.status != SolveStatus::Optimal || r.ipm_iterations > 50 || v > 1e-7 {
            bad.push(format!("{} {} its {} viol {v:.1e}", inst.name, r.status, r.ipm_iterations));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{} instances Optimal; max iterations {worst_it}, max violation {worst_v:.1e}",
                suite.len()
            )
        } else {
            fails(&bad)
        },
    )
}

fn criterion_5(runs: &Runs) -> Outcome {
    let mut ratios: Vec<f64> = runs
        .pdhg
        .iter()
        .zip(&runs.hybrid)
        .filter_map(|(p, h)| {
            let v0 = p.max_violation()?;
            (v0 >= 1e-6).then(|| h.max_violation().unwrap_or(f64::INFINITY) / v0)
        })
        .collect();
    if ratios.is_empty() {
        return Outcome::new(false, "no instance with PDHG violation >= 1e-6");
    }
    ratios.sort_by(f64::total_cmp);
    // Upper median for even counts.
    let median = ratios[ratios.len() / 2];
    let pass = median <= 1e-3 && runs.seconds < 300.0;
    Outcome::new(
        pass,
        format!(
            "{} instances with v0 >= 1e-6; median hybrid/v0 = {median:.1e}; suite ran in {:.1}s",
            ratios.len(),
            runs.seconds
        ),
    )
}

fn row<'a>(rows: &'a [SummaryRow], method: &str) -> &'a SummaryRow {
    rows.iter().find(|r| r.method == method).expect("method present")
}

fn criterion_6(rows: &[SummaryRow]) -> Outcome {
    let r4 = row(rows, "hybrid").ipm_iteration_ratio;
    let r6 = row(rows, "hybrid-1e6").ipm_iteration_ratio;
    let pass = r4.is_some_and(|r| r <= 0.8) && r6.is_some_and(|r| r <= 0.6);
    Outcome::new(
        pass,
        format!(
            "geometric-mean warm/cold IPM iterations: from 1e-4 {}, from 1e-6 {}",
            r4.map_or("-".into(), |r| format!("{r:.3}")),
            r6.map_or("-".into(), |r| format!("{r:.3}"))
        ),
    )
}

fn criterion_7(rows: &[SummaryRow]) -> Outcome {
    let share = |m: &str| {
        let r = row(rows, m);
        r.fast_ipm_solves as f64 / r.attempted as f64
    };
    let (s4, s6) = (share("hybrid"), share("hybrid-1e6"));
    Outcome::new(
        s4 >= 0.4 && s6 >= 0.4,
        format!(
            "warm solves in <= 10 IPM iterations: from 1e-4 {:.0}%, from 1e-6 {:.0}%",
            100.0 * s4,
            100.0 * s6
        ),
    )
}

fn criterion_8(rows: &[SummaryRow]) -> Outcome {
    let mut bad = Vec::new();
    let table = format_summary(rows);
    let rates: Vec<String> = ["hybrid", "hybrid-1e6"]
        .iter()
        .map(|m| match row(rows, m).success_rate() {
            Some(r) => format!("{m} {:.0}%", 100.0 * r),
            None => format!("{m} -"),
        })
        .collect();
    if !table.contains("Success rate") {
        bad.push("summary lacks the success-rate row".to_string());
    }

    // LP1 with the second column started on the boundary.
    let lp = StandardLp::from_dense(&[vec![1.0, 1.0]], &[1.0], &[1.0, 2.0]).unwrap();
    let start = || {
        IpmState::from_point(KktPoint {
            x: vec![1.0, 1e-300],
            y: vec![5.0],
            z: vec![1e-300, 1e-300],
        })
        .unwrap()
    };
    let ipm = IpmParams::default();
    let ws = WarmStartParams::default();
    let plain = run_ipm(&lp, &ipm, Some(start())).unwrap();
    if plain.status != SolveStatus::Stalled {
        bad.push(format!("boundary start gave {} without escalation", plain.status));
    }
    let out = warm_ipm_from(&lp, start(), &ipm, &ws).unwrap();
    let expected_alpha = ws.alpha_min * ws.escalation_factor.powi(out.escalations as i32);
    if !(out.result.status == SolveStatus::Optimal
        && out.escalations >= 1
        && out.escalations <= ws.max_escalations
        && (out.alpha_min - expected_alpha).abs() <= 1e-12 * expected_alpha)
    {
        bad.push(format!(
            "escalation loop ended {} after {} escalations (alpha_min {:e})",
            out.result.status, out.escalations, out.alpha_min
        ));
    }
    let capped = warm_ipm_from(&lp, start(), &ipm, &WarmStartParams { max_escalations: 0, ..ws })
        .unwrap();
    if capped.result.status != SolveStatus::Stalled || capped.escalations != 0 {
        bad.push("escalation cap not respected".to_string());
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "boundary start stalls, recovers after {} escalation(s); success rates {}",
                out.escalations,
                rates.join(", ")
            )
        } else {
            fails(&bad)
        },
    )
}

// 9

fn close(u: f64, v: f64, rel: f64) -> bool {
    (u - v).abs() <= rel * u.abs().max(v.abs()).max(f64::MIN_POSITIVE)
}

fn check_scaling(name: &str, std: &StandardLp, rng: &mut ChaCha8Rng, bad: &mut Vec<String>) {
    let (ps, info) = ruiz_equilibrate(std, DEFAULT_RUIZ_ITERS).unwrap();
    if !info.row_scale.iter().chain(&info.col_scale).all(|s| s.is_finite() && *s > 0.0) {
        bad.push(format!("{name}: nonpositive scale"));
    }
    let expect = CsMatrix::from_triplets(
        std.m(),
        std.n(),
        &std.a
            .triplets()
            .into_iter()
            .map(|(i, j, v)| (i, j, info.row_scale[i] * v * info.col_scale[j]))
            .collect::<Vec<_>>(),
    );
    if !expect.triplets().iter().zip(ps.a.triplets()).all(|(e, s)| {
        e.0 == s.0 && e.1 == s.1 && close(e.2, s.2, 4.0 * f64::EPSILON)
    }) {
        bad.push(format!("{name}: scaled matrix is not R·A·C"));
    }
    let norms = ps.a.row_inf_norms().into_iter().chain(ps.a.col_inf_norms());
    if !norms.into_iter().all(|v| (0.5..=2.0).contains(&v)) {
        bad.push(format!("{name}: equilibrated norm outside [0.5, 2]"));
    }

    let pt = KktPoint {
        x: (0..std.n()).map(|_| rng.gen_range(0.0..3.0)).collect(),
        y: (0..std.m()).map(|_| rng.gen_range(-3.0..3.0)).collect(),
        z: (0..std.n()).map(|_| rng.gen_range(0.0..3.0)).collect(),
    };
    let spt = scale_point(&info, &pt).unwrap();
    let back = unscale_point(&info, &spt).unwrap();
    let same = |u: &[f64], v: &[f64]| u.iter().zip(v).all(|(a, b)| close(*a, *b, 1e-14));
    if !(same(&back.x, &pt.x) && same(&back.y, &pt.y) && same(&back.z, &pt.z)) {
        bad.push(format!("{name}: unscale(scale(pt)) != pt"));
    }
    let ro = residuals(std, &pt).unwrap();
    let rs = residuals(&ps, &spt).unwrap();
    let size = 1.0
        + std.b.iter().chain(&std.c).fold(0.0f64, |a, v| a.max(v.abs()))
        + std.a.norm_inf() * 3.0;
    let rp_ok = (0..std.m())
        .all(|i| (ro.r_p[i] - rs.r_p[i] / info.row_scale[i]).abs() <= 1e-12 * size);
    let rd_ok = (0..std.n())
        .all(|j| (ro.r_d[j] - rs.r_d[j] / info.col_scale[j]).abs() <= 1e-12 * size);
    if !(rp_ok && rd_ok) {
        bad.push(format!("{name}: residual identity broken"));
    }
}

fn check_optimum_maps(inst: &DeskInstance, bad: &mut Vec<String>) {
    let g = &inst.model;
    let std = to_standard_form(g).unwrap();
    let (ps, info) = ruiz_equilibrate(&std, DEFAULT_RUIZ_ITERS).unwrap();
    let lifted = std.lift(g, &inst.optimal).unwrap();
    let spt = scale_point(&info, &lifted).unwrap();
    if !check_relative_termination(&ps, &spt, 1e-8).unwrap().passed {
        bad.push(format!("{}: scaled image of the optimum is not optimal", inst.name));
    }
    // A solution of the scaled model maps back to a solution of the original.
    let r = run_ipm(&ps, &IpmParams::default(), None).unwrap();
    if r.status != SolveStatus::Optimal {
        bad.push(format!("{}: scaled solve ended {}", inst.name, r.status));
        return;
    }
    let back = unscale_point(&info, &r.point()).unwrap();
    if !check_relative_termination(&std, &back, 1e-8).unwrap().passed {
        bad.push(format!("{}: unscaled solution fails the 1e-8 test", inst.name));
    }
}

fn check_presolve(inst: &DeskInstance, bad: &mut Vec<String>) -> usize {
    let g = &inst.model;
    let (red, stack) = presolve(g).unwrap();
    if stack.replay(g).unwrap() != red {
        bad.push(format!("{}: replay differs from the reduced model", inst.name));
    }
    let opt = &inst.optimal;
    let y: Vec<f64> = stack.kept_rows.iter().map(|&i| opt.y[i]).collect();
    let exact = KktPoint {
        x: stack.kept_cols.iter().map(|&j| opt.x[j]).collect(),
        z: red.reduced_costs(&y),
        y,
    };
    let solved = solve_general(&red, Method::IpmCold, &SolveOptions::default())
        .point
        .expect("reduced solve point");
    for pt in [exact, solved] {
        let before = original_violation(&red, &pt).unwrap().primal_inf;
        let post = postsolve(&stack, &pt).unwrap();
        let after = original_violation(g, &post).unwrap().primal_inf;
        if after > before + 1e-12 {
            bad.push(format!("{}: postsolve raised primal inf {before:.1e} -> {after:.1e}", inst.name));
        }
    }
    stack.reductions.len()
}

fn criterion_9(suite: &[DeskInstance]) -> Outcome {
    let mut bad = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut reductions = 0;
    for inst in suite {
        let std = to_standard_form(&inst.model).unwrap();
        check_scaling(&inst.name, &std, &mut rng, &mut bad);
        check_optimum_maps(inst, &mut bad);
        reductions += check_presolve(inst, &mut bad);
        // The optimum itself must be exact on the untransformed model.
        let v = violation_summary(&std, &std.lift(&inst.model, &inst.optimal).unwrap()).unwrap();
        if v.max_violation > 1e-12 {
            bad.push(format!("{}: constructed optimum violation {:.1e}", inst.name, v.max_violation));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() {
            format!(
                "{} models: norms in [0.5, 2], inverse maps exact, optima preserved, {reductions} presolve reductions undone",
                suite.len()
            )
        } else {
            fails(&bad)
        },
    )
}

// 10

fn criterion_10() -> Outcome {
    let rec = |method: &str, status: SolveStatus, t: f64, v: Option<f64>| ResultRecord {
        status,
        wall_seconds: t,
        max_violation: v,
        ..ResultRecord::error("m", method)
    };
    let records = vec![
        rec("best", SolveStatus::Optimal, 1.0, Some(5e-5)),
        rec("slow", SolveStatus::Optimal, 250.0, Some(3e-15)),
        rec("loose", SolveStatus::Optimal, 2.0, Some(3e7)),
        rec("lost", SolveStatus::Stalled, 4.0, Some(1e-2)),
    ];
    let s = scatter_export(&records);
    let got: Vec<(f64, f64)> = s.iter().map(|p| (p.relative_runtime, p.max_violation)).collect();
    let want = vec![(1.0, 5e-5), (100.0, 1e-12), (2.0, 1e6), (100.0, 1e6)];
    Outcome::new(
        got == want,
        format!("ratio 250 -> {}, violation 3e-15 -> {:e}, 3e7 -> {:e}, unsolved -> {:e}", got[1].0, got[1].1, got[2].1, got[3].1),
    )
}

fn main() {
    let suite = desk_suite();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut timed = |k: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let clock = Instant::now();
        let o = f();
        results.push((k, name, o, clock.elapsed().as_secs_f64()));
    };
    timed(1, "centered start", &mut criterion_1);
    timed(2, "residual oracle", &mut criterion_2);
    timed(3, "PDHG correctness", &mut || criterion_3(&suite));
    let runs = Runs::new(&suite);
    let rows = summarize(&runs.records(&suite));
    timed(4, "IPM correctness", &mut || criterion_4(&suite, &runs));
    timed(5, "hybrid accuracy lift", &mut || criterion_5(&runs));
    timed(6, "iteration reduction", &mut || criterion_6(&rows));
    timed(7, "fast-convergence share", &mut || criterion_7(&rows));
    timed(8, "robustness accounting", &mut || criterion_8(&rows));
    timed(9, "transform round trips", &mut || criterion_9(&suite));
    timed(10, "clamp rules", &mut criterion_10);

    println!();
    print!("{}", format_summary(&rows));
    println!();
    let mut failed = 0;
    for (k, name, o, secs) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {k:>2} {tag} [{name}] {} ({secs:.2}s)", o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
