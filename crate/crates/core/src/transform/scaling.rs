use crate::error::{check_len, LpError};
use crate::lp::{KktPoint, StandardLp};

pub const DEFAULT_RUIZ_ITERS: usize = 20;
const RUIZ_TOL: f64 = 1e-2;

/// Diagonal scalings: the scaled matrix is `diag(row_scale) · A · diag(col_scale)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingInfo {
    pub row_scale: Vec<f64>,
    pub col_scale: Vec<f64>,
    pub applied_iterations: usize,
}

impl ScalingInfo {
    pub fn identity(m: usize, n: usize) -> Self {
        ScalingInfo {
            row_scale: vec![1.0; m],
            col_scale: vec![1.0; n],
            applied_iterations: 0,
        }
    }
}

/// Ruiz equilibration in the infinity norm.
///
/// Each pass divides every row by the square root of its ∞-norm and every
/// column by the square root of its ∞-norm (both measured on the current
/// scaled matrix). Stops once all norms lie in `[1/(1+tol), 1+tol]` with
/// `tol = 1e-2`, or after `max_iters` passes. `b` picks up the row scaling
/// and `c` the column scaling.
pub fn ruiz_equilibrate(
    p: &StandardLp,
    max_iters: usize,
) -> Result<(StandardLp, ScalingInfo), LpError> {
    let (m, n) = (p.m(), p.n());
    if let Some(i) = (0..m).find(|&i| p.a.row_nnz(i) == 0) {
        return Err(LpError::ZeroRow(i));
    }
    if let Some(j) = (0..n).find(|&j| p.a.col_nnz(j) == 0) {
        return Err(LpError::ZeroColumn(j));
    }

    let mut row_scale = vec![1.0; m];
    let mut col_scale = vec![1.0; n];
    let mut a = p.a.clone();
    let mut applied = 0;
    let in_box = |v: &f64| *v >= 1.0 / (1.0 + RUIZ_TOL) && *v <= 1.0 + RUIZ_TOL;

    for _ in 0..max_iters {
        let rn = a.row_inf_norms();
        let cn = a.col_inf_norms();
        if rn.iter().all(in_box) && cn.iter().all(in_box) {
            break;
        }
        let r: Vec<f64> = rn.iter().map(|v| 1.0 / v.sqrt()).collect();
        let c: Vec<f64> = cn.iter().map(|v| 1.0 / v.sqrt()).collect();
        a = a.scaled(&r, &c);
        row_scale.iter_mut().zip(&r).for_each(|(s, f)| *s *= f);
        col_scale.iter_mut().zip(&c).for_each(|(s, f)| *s *= f);
        applied += 1;
    }

    let b = p.b.iter().zip(&row_scale).map(|(b, r)| b * r).collect();
    let c = p.c.iter().zip(&col_scale).map(|(c, s)| c * s).collect();
    let scaled = StandardLp {
        a,
        b,
        c,
        provenance: p.provenance.clone(),
    };
    Ok((
        scaled,
        ScalingInfo {
            row_scale,
            col_scale,
            applied_iterations: applied,
        },
    ))
}

/// Maps a point of the scaled model back: `x = C x̂`, `y = R ŷ`, `z = C⁻¹ ẑ`.
pub fn unscale_point(s: &ScalingInfo, pt: &KktPoint) -> Result<KktPoint, LpError> {
    check_dims(s, pt)?;
    Ok(KktPoint {
        x: pt.x.iter().zip(&s.col_scale).map(|(v, c)| v * c).collect(),
        y: pt.y.iter().zip(&s.row_scale).map(|(v, r)| v * r).collect(),
        z: pt.z.iter().zip(&s.col_scale).map(|(v, c)| v / c).collect(),
    })
}

/// Inverse of [`unscale_point`].
pub fn scale_point(s: &ScalingInfo, pt: &KktPoint) -> Result<KktPoint, LpError> {
    check_dims(s, pt)?;
    Ok(KktPoint {
        x: pt.x.iter().zip(&s.col_scale).map(|(v, c)| v / c).collect(),
        y: pt.y.iter().zip(&s.row_scale).map(|(v, r)| v / r).collect(),
        z: pt.z.iter().zip(&s.col_scale).map(|(v, c)| v * c).collect(),
    })
}

fn check_dims(s: &ScalingInfo, pt: &KktPoint) -> Result<(), LpError> {
    check_len("x", s.col_scale.len(), pt.x.len())?;
    check_len("y", s.row_scale.len(), pt.y.len())?;
    check_len("z", s.col_scale.len(), pt.z.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::residuals;
    use crate::sparse::CsMatrix;
    use proptest::prelude::*;

    fn lp(a: &[Vec<f64>]) -> StandardLp {
        let m = a.len();
        let n = a[0].len();
        StandardLp::from_dense(a, &vec![1.0; m], &vec![1.0; n]).unwrap()
    }

    #[test]
    fn diagonal_matrix_in_one_pass() {
        let (s, info) = ruiz_equilibrate(&lp(&[vec![4.0, 0.0], vec![0.0, 1.0]]), 20).unwrap();
        assert_eq!(s.a.to_dense(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(info.row_scale[0] * info.col_scale[0], 0.25);
        assert_eq!(info.row_scale[1] * info.col_scale[1], 1.0);
        assert_eq!(s.b, vec![0.5, 1.0]);
        assert_eq!(s.c, vec![0.5, 1.0]);
    }

    #[test]
    fn all_ones_is_a_fixed_point() {
        let (s, info) = ruiz_equilibrate(&lp(&[vec![1.0, 1.0], vec![1.0, 1.0]]), 20).unwrap();
        assert_eq!(info, ScalingInfo::identity(2, 2));
        assert_eq!(s.a.to_dense(), vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
    }

    #[test]
    fn badly_scaled_2x2_lands_in_norm_box() {
        let (s, info) = ruiz_equilibrate(&lp(&[vec![1.0, 100.0], vec![0.01, 1.0]]), 20).unwrap();
        assert!(info.applied_iterations <= 20);
        for v in s.a.row_inf_norms().into_iter().chain(s.a.col_inf_norms()) {
            assert!((0.99..=1.01).contains(&v), "norm {v}");
        }
    }

    #[test]
    fn zero_row_and_column_are_errors() {
        let p = StandardLp::new(
            CsMatrix::from_triplets(2, 2, &[(0, 0, 1.0)]),
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(ruiz_equilibrate(&p, 20).unwrap_err(), LpError::ZeroRow(1));
        let p = StandardLp::new(
            CsMatrix::from_triplets(1, 2, &[(0, 0, 1.0)]),
            vec![1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        assert_eq!(ruiz_equilibrate(&p, 20).unwrap_err(), LpError::ZeroColumn(1));
    }

    #[test]
    fn unscale_identity_and_lp1_dual() {
        let pt = KktPoint { x: vec![1.0, 0.0], y: vec![0.5], z: vec![0.0, 1.0] };
        assert_eq!(unscale_point(&ScalingInfo::identity(1, 2), &pt).unwrap(), pt);
        let s = ScalingInfo { row_scale: vec![2.0], col_scale: vec![1.0, 1.0], applied_iterations: 1 };
        assert_eq!(unscale_point(&s, &pt).unwrap().y, vec![1.0]);
    }

    fn dense_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, Vec<f64>, Vec<f64>)> {
        (1usize..6, 1usize..6).prop_flat_map(|(m, n)| {
            (
                proptest::collection::vec(
                    proptest::collection::vec(
                        prop_oneof![Just(0.0), -100.0f64..100.0, -0.01f64..0.01],
                        n,
                    ),
                    m,
                ),
                proptest::collection::vec(-10.0f64..10.0, n),
                proptest::collection::vec(-10.0f64..10.0, m),
                proptest::collection::vec(0.0f64..10.0, n),
            )
        })
    }

    proptest! {
        #[test]
        fn scaling_round_trip_and_residual_identity((mut a, x, y, z) in dense_strategy()) {
            let (m, n) = (a.len(), a[0].len());
            // Guarantee no empty rows/columns.
            for i in 0..m { a[i][i % n] += 1.0; }
            for j in 0..n { a[j % m][j] += 1.0; }
            let p = StandardLp::from_dense(&a, &vec![1.5; m], &vec![-0.5; n]).unwrap();
            let (ps, info) = ruiz_equilibrate(&p, DEFAULT_RUIZ_ITERS).unwrap();

            for v in ps.a.row_inf_norms().into_iter().chain(ps.a.col_inf_norms()) {
                prop_assert!((0.5..=2.0).contains(&v), "norm {}", v);
            }

            let pt = KktPoint { x, y, z };
            let back = unscale_point(&info, &scale_point(&info, &pt).unwrap()).unwrap();
            for (u, v) in back.x.iter().chain(&back.y).chain(&back.z).zip(pt.x.iter().chain(&pt.y).chain(&pt.z)) {
                prop_assert!((u - v).abs() <= 1e-14 * (1.0 + v.abs()));
            }

            // r_P(orig) = R⁻¹ r_P(scaled), r_D(orig) = C⁻¹ r_D(scaled)
            let spt = scale_point(&info, &pt).unwrap();
            let r = residuals(&p, &pt).unwrap();
            let rs = residuals(&ps, &spt).unwrap();
            for i in 0..m {
                let lhs = rs.r_p[i] / info.row_scale[i];
                prop_assert!((lhs - r.r_p[i]).abs() <= 1e-9 * (1.0 + r.r_p[i].abs()));
            }
            for j in 0..n {
                let lhs = rs.r_d[j] / info.col_scale[j];
                prop_assert!((lhs - r.r_d[j]).abs() <= 1e-9 * (1.0 + r.r_d[j].abs()));
            }
        }
    }
}
