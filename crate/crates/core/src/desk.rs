//! Small LP instances with known optima, used by the tests, the benchmark
//! crate and the acceptance suite.
//!
//! Four hand-written models plus randomly generated general-form LPs whose
//! optimal primal/dual pair is constructed first and the data derived from
//! it (so the optimal objective is known exactly).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lp::{GeneralLp, KktPoint, RowSense};
use crate::sparse::CsMatrix;

const INF: f64 = f64::INFINITY;

#[derive(Debug, Clone)]
pub struct DeskInstance {
    pub name: String,
    pub model: GeneralLp,
    /// Optimal objective of `model` (internal minimization sense).
    pub optimal_objective: f64,
    /// An optimal primal-dual pair; `z` is the reduced cost `c − Aᵀy`.
    pub optimal: KktPoint,
}

fn optimum(g: &GeneralLp, x: Vec<f64>, y: Vec<f64>) -> KktPoint {
    let z = g.reduced_costs(&y);
    KktPoint { x, y, z }
}

fn named(mut g: GeneralLp, name: &str, rows: &[&str], cols: &[&str]) -> GeneralLp {
    g.name = name.to_string();
    g.row_names = rows.iter().map(|s| s.to_string()).collect();
    g.col_names = cols.iter().map(|s| s.to_string()).collect();
    g
}

/// `min x₁ + 2x₂ s.t. x₁ + x₂ = 1, x ≥ 0`; optimum `(1, 0)`, `y = 1`.
pub fn lp1() -> DeskInstance {
    let g = GeneralLp::new(
        vec![1.0, 2.0],
        CsMatrix::from_dense(&[vec![1.0, 1.0]]),
        vec![RowSense::Eq],
        vec![1.0],
        vec![0.0, 0.0],
        vec![INF, INF],
    );
    let model = named(g, "LP1", &["c1"], &["x1", "x2"]);
    DeskInstance {
        name: "lp1".into(),
        optimal_objective: 1.0,
        optimal: optimum(&model, vec![1.0, 0.0], vec![1.0]),
        model,
    }
}

/// `min −x₁ − x₂ s.t. x₁ + 2x₂ ≤ 4, 3x₁ + x₂ ≤ 6, x ≥ 0`; optimum
/// `(1.6, 1.2)`, `y = (−0.4, −0.2)`.
pub fn lp2() -> DeskInstance {
    let g = GeneralLp::new(
        vec![-1.0, -1.0],
        CsMatrix::from_dense(&[vec![1.0, 2.0], vec![3.0, 1.0]]),
        vec![RowSense::Le, RowSense::Le],
        vec![4.0, 6.0],
        vec![0.0, 0.0],
        vec![INF, INF],
    );
    let model = named(g, "LP2", &["c1", "c2"], &["x1", "x2"]);
    DeskInstance {
        name: "lp2".into(),
        optimal_objective: -2.8,
        optimal: optimum(&model, vec![1.6, 1.2], vec![-0.4, -0.2]),
        model,
    }
}

/// Primal degenerate: four constraints active at the optimum `(1, 1)` of a
/// two-variable problem. `y = (0, 0, −1, 0)` is one of many optimal duals.
pub fn degenerate_lp() -> DeskInstance {
    let g = GeneralLp::new(
        vec![-1.0, -1.0],
        CsMatrix::from_dense(&[
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
        ]),
        vec![RowSense::Le, RowSense::Le, RowSense::Le, RowSense::Le],
        vec![1.0, 1.0, 2.0, 0.0],
        vec![0.0, 0.0],
        vec![INF, INF],
    );
    let model = named(g, "DEGEN", &["r1", "r2", "r3", "r4"], &["x1", "x2"]);
    DeskInstance {
        name: "degenerate".into(),
        optimal_objective: -2.0,
        optimal: optimum(&model, vec![1.0, 1.0], vec![0.0, 0.0, -1.0, 0.0]),
        model,
    }
}

/// `min x₁ + 3x₂ s.t. x₁ + x₂ ≥ 2, x₁ − x₂ ≤ 1, x₁ free, x₂ ≥ 0`; optimum
/// `(1.5, 0.5)`, `y = (2, −1)`.
pub fn free_variable_lp() -> DeskInstance {
    let g = GeneralLp::new(
        vec![1.0, 3.0],
        CsMatrix::from_dense(&[vec![1.0, 1.0], vec![1.0, -1.0]]),
        vec![RowSense::Ge, RowSense::Le],
        vec![2.0, 1.0],
        vec![f64::NEG_INFINITY, 0.0],
        vec![INF, INF],
    );
    let model = named(g, "FREEVAR", &["r1", "r2"], &["x1", "x2"]);
    DeskInstance {
        name: "freevar".into(),
        optimal_objective: 3.0,
        optimal: optimum(&model, vec![1.5, 0.5], vec![2.0, -1.0]),
        model,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarKind {
    Lower,
    Boxed,
    Free,
    Upper,
    Fixed,
}

/// Random general-form LP with a constructed optimal pair.
///
/// Rows mix `=`, `≤` and `≥`; columns mix `[0, ∞)`, boxes, free, upper-only
/// and fixed variables. Row and column magnitudes vary over two decades so
/// equilibration has work to do. Roughly `m` variables are strictly between
/// their bounds (fewer when inequality rows are slack), which keeps the
/// instances close to nondegenerate.
pub fn random_instance(seed: u64, m: usize, n: usize, density: f64) -> DeskInstance {
    assert!(m >= 1 && n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let row_mag: Vec<f64> = (0..m).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    let col_mag: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.gen_range(-1.0..1.0))).collect();
    let mut trip = Vec::new();
    let entry = |rng: &mut ChaCha8Rng, i: usize, j: usize| {
        let v = rng.gen_range(0.2..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        (i, j, v * row_mag[i] * col_mag[j])
    };
    for i in 0..m {
        for j in 0..n {
            if rng.gen::<f64>() < density {
                trip.push(entry(&mut rng, i, j));
            }
        }
    }
    // Every row and column gets at least one entry.
    for i in 0..m {
        let j = rng.gen_range(0..n);
        trip.push(entry(&mut rng, i, j));
    }
    for j in 0..n {
        let i = rng.gen_range(0..m);
        trip.push(entry(&mut rng, i, j));
    }
    let a = CsMatrix::from_triplets(m, n, &trip);

    // Rows.
    let mut senses = Vec::with_capacity(m);
    let mut slack = vec![0.0; m];
    let mut y = vec![0.0; m];
    for i in 0..m {
        let r: f64 = rng.gen();
        let sense = if r < 0.5 {
            RowSense::Eq
        } else if r < 0.75 {
            RowSense::Le
        } else {
            RowSense::Ge
        };
        let active = sense == RowSense::Eq || rng.gen_bool(0.5);
        let scale = row_mag[i].recip();
        match (sense, active) {
            (RowSense::Eq, _) => y[i] = rng.gen_range(-2.0..2.0) * scale,
            (RowSense::Le, true) => y[i] = -rng.gen_range(0.1..2.0) * scale,
            (RowSense::Ge, true) => y[i] = rng.gen_range(0.1..2.0) * scale,
            _ => slack[i] = rng.gen_range(0.5..3.0) * row_mag[i],
        }
        senses.push(sense);
    }
    let inactive = slack.iter().filter(|&&s| s > 0.0).count();

    // Columns.
    let mut kinds: Vec<VarKind> = (0..n)
        .map(|_| {
            let r: f64 = rng.gen();
            if r < 0.68 {
                VarKind::Lower
            } else if r < 0.83 {
                VarKind::Boxed
            } else if r < 0.91 {
                VarKind::Free
            } else if r < 0.97 {
                VarKind::Upper
            } else {
                VarKind::Fixed
            }
        })
        .collect();
    let target_basic = m.saturating_sub(inactive).min(n);
    let free: Vec<usize> = (0..n).filter(|&j| kinds[j] == VarKind::Free).collect();
    if free.len() > target_basic {
        // Too many free columns for a vertex-like optimum: demote extras.
        for &j in &free[target_basic..] {
            kinds[j] = VarKind::Lower;
        }
    }
    let mut order: Vec<usize> = (0..n).filter(|&j| kinds[j] != VarKind::Fixed).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&j| kinds[j] != VarKind::Free);
    let basic: Vec<bool> = {
        let mut b = vec![false; n];
        for &j in order.iter().take(target_basic) {
            b[j] = true;
        }
        b
    };

    let mut lower = vec![0.0; n];
    let mut upper = vec![INF; n];
    let mut x = vec![0.0; n];
    let mut d = vec![0.0; n];
    for j in 0..n {
        let s = col_mag[j].recip();
        let span = rng.gen_range(1.0..5.0) * s;
        match kinds[j] {
            VarKind::Lower => lower[j] = 0.0,
            VarKind::Boxed => {
                lower[j] = -rng.gen_range(0.0..2.0) * s;
                upper[j] = lower[j] + span;
            }
            VarKind::Free => lower[j] = f64::NEG_INFINITY,
            VarKind::Upper => {
                lower[j] = f64::NEG_INFINITY;
                upper[j] = rng.gen_range(-1.0..2.0) * s;
            }
            VarKind::Fixed => {
                lower[j] = rng.gen_range(-1.0..1.0) * s;
                upper[j] = lower[j];
            }
        }
        let dmag = rng.gen_range(0.1..2.0) * col_mag[j];
        if basic[j] {
            x[j] = match kinds[j] {
                VarKind::Lower => rng.gen_range(0.5..3.0) * s,
                VarKind::Boxed => lower[j] + rng.gen_range(0.1..0.9) * span,
                VarKind::Free => rng.gen_range(-3.0..3.0) * s,
                VarKind::Upper => upper[j] - rng.gen_range(0.5..3.0) * s,
                VarKind::Fixed => unreachable!(),
            };
        } else {
            match kinds[j] {
                VarKind::Lower => {
                    x[j] = lower[j];
                    d[j] = dmag;
                }
                VarKind::Boxed => {
                    if rng.gen_bool(0.5) {
                        x[j] = lower[j];
                        d[j] = dmag;
                    } else {
                        x[j] = upper[j];
                        d[j] = -dmag;
                    }
                }
                VarKind::Upper => {
                    x[j] = upper[j];
                    d[j] = -dmag;
                }
                VarKind::Fixed => {
                    x[j] = lower[j];
                    d[j] = if rng.gen_bool(0.5) { dmag } else { -dmag };
                }
                VarKind::Free => unreachable!(),
            }
        }
    }

    let ax = a.mul_vec(&x);
    let rhs: Vec<f64> = (0..m)
        .map(|i| match senses[i] {
            RowSense::Le => ax[i] + slack[i],
            RowSense::Ge => ax[i] - slack[i],
            _ => ax[i],
        })
        .collect();
    let aty = a.tmul_vec(&y);
    let c: Vec<f64> = aty.iter().zip(&d).map(|(a, d)| a + d).collect();
    let objective = c.iter().zip(&x).map(|(c, x)| c * x).sum();

    let mut g = GeneralLp::new(c, a, senses, rhs, lower, upper);
    let name = format!("rand_{seed}_{m}x{n}");
    g.name = name.clone();
    DeskInstance {
        name,
        optimal_objective: objective,
        optimal: optimum(&g, x, y),
        model: g,
    }
}

/// Sizes `(seed, m, n, density)` of the random part of the desk suite.
pub const RANDOM_SPECS: [(u64, usize, usize, f64); 20] = [
    (1, 10, 15, 0.3),
    (2, 12, 20, 0.3),
    (3, 15, 25, 0.25),
    (4, 20, 30, 0.2),
    (5, 20, 40, 0.2),
    (6, 25, 40, 0.15),
    (7, 30, 50, 0.15),
    (8, 30, 60, 0.12),
    (9, 40, 60, 0.1),
    (10, 40, 80, 0.1),
    (11, 50, 80, 0.08),
    (12, 50, 100, 0.08),
    (13, 60, 100, 0.06),
    (14, 70, 120, 0.05),
    (15, 80, 120, 0.05),
    (16, 90, 150, 0.04),
    (17, 100, 150, 0.04),
    (18, 120, 180, 0.03),
    (19, 150, 200, 0.03),
    (20, 200, 200, 0.02),
];

/// The full desk suite: the four hand-written models followed by the
/// random instances of [`RANDOM_SPECS`].
pub fn desk_suite() -> Vec<DeskInstance> {
    let mut out = vec![lp1(), lp2(), degenerate_lp(), free_variable_lp()];
    out.extend(
        RANDOM_SPECS
            .iter()
            .map(|&(seed, m, n, dens)| random_instance(seed, m, n, dens)),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::original_violation;

    #[test]
    fn constructed_optima_satisfy_kkt() {
        for inst in desk_suite() {
            let g = &inst.model;
            g.validate().unwrap();
            let pt = &inst.optimal;
            assert!((g.objective(&pt.x) - inst.optimal_objective).abs() < 1e-9);
            let v = original_violation(g, pt).unwrap();
            assert!(v.max_violation < 1e-12, "{}: {v:?}", inst.name);
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = random_instance(5, 20, 30, 0.2);
        let b = random_instance(5, 20, 30, 0.2);
        assert_eq!(a.model, b.model);
    }
}
