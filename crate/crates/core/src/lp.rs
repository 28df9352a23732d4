//! Canonical LP data, standard-form conversion, residuals and the
//! termination / violation measures shared by every solver.
//!
//! Every solver in this crate consumes a [`StandardLp`]:
//!
//! ```text
//!     min  cᵀx   s.t.  A x = b,  x ≥ 0
//!     max  bᵀy   s.t.  Aᵀy + z = c,  z ≥ 0
//! ```
//!
//! A [`GeneralLp`] (inequalities, ranges, bounds, free variables) is mapped
//! onto that form by [`to_standard_form`], which records enough provenance to
//! carry points back and forth between the two.

use crate::error::{check_len, LpError};
use crate::sparse::{dot, norm2, norm_inf, CsMatrix};

/// Row type of a general constraint `a·x (sense) rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
    /// Two-sided row `rhs ≤ a·x ≤ rhs + width`, produced by MPS `RANGES`.
    Range { width: f64 },
}

/// An LP with general rows and variable bounds. Costs are always for
/// minimization; a maximization model is stored with negated costs and
/// `maximize = true` so reported objectives can be flipped back.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralLp {
    pub name: String,
    pub col_costs: Vec<f64>,
    pub matrix: CsMatrix,
    pub row_senses: Vec<RowSense>,
    pub row_rhs: Vec<f64>,
    pub var_lower: Vec<f64>,
    pub var_upper: Vec<f64>,
    pub obj_offset: f64,
    pub maximize: bool,
    pub row_names: Vec<String>,
    pub col_names: Vec<String>,
}

impl GeneralLp {
    /// Builds a model with default names (`R0..`, `C0..`) and zero offset.
    pub fn new(
        col_costs: Vec<f64>,
        matrix: CsMatrix,
        row_senses: Vec<RowSense>,
        row_rhs: Vec<f64>,
        var_lower: Vec<f64>,
        var_upper: Vec<f64>,
    ) -> Self {
        let row_names = (0..matrix.nrows()).map(|i| format!("R{i}")).collect();
        let col_names = (0..matrix.ncols()).map(|j| format!("C{j}")).collect();
        GeneralLp {
            name: String::new(),
            col_costs,
            matrix,
            row_senses,
            row_rhs,
            var_lower,
            var_upper,
            obj_offset: 0.0,
            maximize: false,
            row_names,
            col_names,
        }
    }

    pub fn n_vars(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let (m, n) = (self.n_rows(), self.n_vars());
        check_len("col_costs", n, self.col_costs.len())?;
        check_len("var_lower", n, self.var_lower.len())?;
        check_len("var_upper", n, self.var_upper.len())?;
        check_len("col_names", n, self.col_names.len())?;
        check_len("row_senses", m, self.row_senses.len())?;
        check_len("row_rhs", m, self.row_rhs.len())?;
        check_len("row_names", m, self.row_names.len())?;
        if let Some(j) = self.col_costs.iter().position(|c| !c.is_finite()) {
            return Err(LpError::InvalidModel(format!("cost of column {j} is not finite")));
        }
        if let Some(i) = self.row_rhs.iter().position(|r| !r.is_finite()) {
            return Err(LpError::InvalidModel(format!("rhs of row {i} is not finite")));
        }
        for (i, s) in self.row_senses.iter().enumerate() {
            if let RowSense::Range { width } = s {
                if !(width.is_finite() && *width >= 0.0) {
                    return Err(LpError::InvalidModel(format!("row {i} has invalid range {width}")));
                }
            }
        }
        for j in 0..n {
            let (l, u) = (self.var_lower[j], self.var_upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!("column {j} has bounds [{l}, {u}]")));
            }
            if l > u {
                return Err(LpError::InfeasibleBounds {
                    index: j,
                    lower: l,
                    upper: u,
                });
            }
        }
        Ok(())
    }

    /// `cᵀx + offset` in the internal (minimization) sense.
    pub fn objective(&self, x: &[f64]) -> f64 {
        dot(&self.col_costs, x) + self.obj_offset
    }

    /// Reduced costs `c − Aᵀy` of the general model.
    pub fn reduced_costs(&self, y: &[f64]) -> Vec<f64> {
        let aty = self.matrix.tmul_vec(y);
        self.col_costs.iter().zip(aty).map(|(c, a)| c - a).collect()
    }
}

/// Origin of one standard-form column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StdColumn {
    /// `x_var = shift + sign · x_std`; a free variable owns two such columns
    /// with opposite signs.
    Var { var: usize, sign: f64, shift: f64 },
    /// Slack of general row `row`, entering that row with coefficient `coef`.
    RowSlack { row: usize, coef: f64 },
    /// Slack of the upper-bound row that caps column `of_col`.
    BoundSlack { of_col: usize },
}

/// Origin of one standard-form row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StdRow {
    General(usize),
    /// `x_col + t = bound` where `col` is a standard-form column index.
    UpperBound { col: usize, bound: f64 },
}

/// Mapping from a [`StandardLp`] back to the [`GeneralLp`] it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub columns: Vec<StdColumn>,
    pub rows: Vec<StdRow>,
    /// Objective constant: general objective = `cᵀx_std + obj_constant`.
    pub obj_constant: f64,
    pub general_vars: usize,
    pub general_rows: usize,
}

/// `min cᵀx s.t. Ax = b, x ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardLp {
    pub a: CsMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub provenance: Provenance,
}

impl StandardLp {
    /// Wraps data that is already in standard form. Provenance is the
    /// identity map (every row an equality, every column `x ≥ 0`).
    pub fn new(a: CsMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self, LpError> {
        let (m, n) = (a.nrows(), a.ncols());
        check_len("b", m, b.len())?;
        check_len("c", n, c.len())?;
        if m == 0 || n == 0 {
            return Err(LpError::EmptyModel);
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(LpError::InvalidModel("b and c must be finite".into()));
        }
        let provenance = Provenance {
            columns: (0..n)
                .map(|j| StdColumn::Var {
                    var: j,
                    sign: 1.0,
                    shift: 0.0,
                })
                .collect(),
            rows: (0..m).map(StdRow::General).collect(),
            obj_constant: 0.0,
            general_vars: n,
            general_rows: m,
        };
        Ok(StandardLp { a, b, c, provenance })
    }

    pub fn from_dense(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Result<Self, LpError> {
        Self::new(CsMatrix::from_dense(a), b.to_vec(), c.to_vec())
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// General-model objective of a standard-form primal point.
    pub fn general_objective(&self, x_std: &[f64]) -> f64 {
        dot(&self.c, x_std) + self.provenance.obj_constant
    }

    /// Maps a standard-form point onto the general model it came from.
    ///
    /// `x` is reassembled from shifts and split pairs, `y` keeps the duals of
    /// the general rows, and `z` is the general reduced cost `c − Aᵀy`
    /// (signed: bound multipliers are folded in).
    pub fn recover(&self, g: &GeneralLp, pt: &KktPoint) -> Result<KktPoint, LpError> {
        self.check_point(pt)?;
        let prov = &self.provenance;
        check_len("general vars", prov.general_vars, g.n_vars())?;
        check_len("general rows", prov.general_rows, g.n_rows())?;
        let mut x = vec![0.0; g.n_vars()];
        let mut seen = vec![false; g.n_vars()];
        for (k, col) in prov.columns.iter().enumerate() {
            if let StdColumn::Var { var, sign, shift } = *col {
                if !seen[var] {
                    x[var] = shift;
                    seen[var] = true;
                }
                x[var] += sign * pt.x[k];
            }
        }
        let mut y = vec![0.0; g.n_rows()];
        for (r, row) in prov.rows.iter().enumerate() {
            if let StdRow::General(i) = *row {
                y[i] = pt.y[r];
            }
        }
        let z = g.reduced_costs(&y);
        Ok(KktPoint { x, y, z })
    }

    /// Maps a general-model point into this standard form.
    ///
    /// Structural values are projected onto `x_std ≥ 0` and slacks are set to
    /// the nonnegative part of what their row needs, so any violation of the
    /// general model surfaces as a standard-form residual rather than as a
    /// negative variable. Upper-bound rows take the dual `min(0, d)` of the
    /// column's reduced cost `d`, and `z = max(0, c − Aᵀy)`.
    pub fn lift(&self, g: &GeneralLp, pt: &KktPoint) -> Result<KktPoint, LpError> {
        check_len("x", g.n_vars(), pt.x.len())?;
        check_len("y", g.n_rows(), pt.y.len())?;
        let prov = &self.provenance;
        let n = self.n();
        let activity = g.matrix.mul_vec(&pt.x);
        let mut x = vec![0.0; n];
        // Structurals first: bound slacks depend on them.
        for (k, col) in prov.columns.iter().enumerate() {
            match *col {
                StdColumn::Var { var, sign, shift } => {
                    x[k] = (sign * (pt.x[var] - shift)).max(0.0);
                }
                StdColumn::RowSlack { row, coef } => {
                    let rhs = g.row_rhs[row];
                    x[k] = ((rhs - activity[row]) / coef).max(0.0);
                }
                StdColumn::BoundSlack { .. } => {}
            }
        }
        let mut bound_row_of = vec![usize::MAX; n];
        for (r, row) in prov.rows.iter().enumerate() {
            if let StdRow::UpperBound { col, .. } = *row {
                bound_row_of[col] = r;
            }
        }
        for (k, col) in prov.columns.iter().enumerate() {
            if let StdColumn::BoundSlack { of_col } = *col {
                let r = bound_row_of[of_col];
                let bound = match prov.rows[r] {
                    StdRow::UpperBound { bound, .. } => bound,
                    StdRow::General(_) => unreachable!(),
                };
                x[k] = (bound - x[of_col]).max(0.0);
            }
        }

        let mut y = vec![0.0; self.m()];
        for (r, row) in prov.rows.iter().enumerate() {
            if let StdRow::General(i) = *row {
                y[r] = pt.y[i];
            }
        }
        // Column reduced costs with only the general-row duals in place.
        let partial = self.a.tmul_vec(&y);
        for (r, row) in prov.rows.iter().enumerate() {
            if let StdRow::UpperBound { col, .. } = *row {
                y[r] = (self.c[col] - partial[col]).min(0.0);
            }
        }
        let z = extract_reduced_costs(self, &y);
        Ok(KktPoint { x, y, z })
    }

    pub(crate) fn check_point(&self, pt: &KktPoint) -> Result<(), LpError> {
        check_len("x", self.n(), pt.x.len())?;
        check_len("y", self.m(), pt.y.len())?;
        check_len("z", self.n(), pt.z.len())
    }
}

/// Converts a general model to standard form.
///
/// * finite lower bound `l`: `x = l + x'`
/// * only an upper bound `u`: `x = u − x'`
/// * free: `x = x⁺ − x⁻`
/// * both bounds finite: additionally a row `x' + t = u − l`
/// * `≤` / `≥` rows get slack / surplus columns; ranged rows get a surplus
///   column capped by its own bound row.
pub fn to_standard_form(g: &GeneralLp) -> Result<StandardLp, LpError> {
    g.validate()?;
    let (m, n) = (g.n_rows(), g.n_vars());

    let mut columns: Vec<StdColumn> = Vec::new();
    let mut costs: Vec<f64> = Vec::new();
    // (std column, upper bound in std coordinates)
    let mut caps: Vec<(usize, f64)> = Vec::new();
    let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
    let mut rhs = g.row_rhs.clone();
    let mut obj_constant = g.obj_offset;

    for j in 0..n {
        let (l, u, cj) = (g.var_lower[j], g.var_upper[j], g.col_costs[j]);
        let mut push = |sign: f64, shift: f64, columns: &mut Vec<StdColumn>| {
            let k = columns.len();
            columns.push(StdColumn::Var { var: j, sign, shift });
            costs.push(sign * cj);
            for (i, v) in g.matrix.col(j) {
                triplets.push((i, k, sign * v));
            }
            k
        };
        if l.is_finite() {
            let k = push(1.0, l, &mut columns);
            if u.is_finite() {
                caps.push((k, u - l));
            }
            shift_rhs(g, j, l, &mut rhs, &mut obj_constant);
        } else if u.is_finite() {
            push(-1.0, u, &mut columns);
            shift_rhs(g, j, u, &mut rhs, &mut obj_constant);
        } else {
            push(1.0, 0.0, &mut columns);
            push(-1.0, 0.0, &mut columns);
        }
    }

    for i in 0..m {
        let coef = match g.row_senses[i] {
            RowSense::Eq => continue,
            RowSense::Le => 1.0,
            RowSense::Ge | RowSense::Range { .. } => -1.0,
        };
        let k = columns.len();
        columns.push(StdColumn::RowSlack { row: i, coef });
        costs.push(0.0);
        triplets.push((i, k, coef));
        if let RowSense::Range { width } = g.row_senses[i] {
            caps.push((k, width));
        }
    }

    let mut rows: Vec<StdRow> = (0..m).map(StdRow::General).collect();
    for &(col, bound) in &caps {
        let r = rows.len();
        rows.push(StdRow::UpperBound { col, bound });
        let t = columns.len();
        columns.push(StdColumn::BoundSlack { of_col: col });
        costs.push(0.0);
        triplets.push((r, col, 1.0));
        triplets.push((r, t, 1.0));
        rhs.push(bound);
    }

    let (m_std, n_std) = (rows.len(), columns.len());
    if m_std == 0 || n_std == 0 {
        return Err(LpError::EmptyModel);
    }
    let a = CsMatrix::from_triplets(m_std, n_std, &triplets);
    Ok(StandardLp {
        a,
        b: rhs,
        c: costs,
        provenance: Provenance {
            columns,
            rows,
            obj_constant,
            general_vars: n,
            general_rows: m,
        },
    })
}

fn shift_rhs(g: &GeneralLp, j: usize, shift: f64, rhs: &mut [f64], obj_constant: &mut f64) {
    if shift == 0.0 {
        return;
    }
    for (i, v) in g.matrix.col(j) {
        rhs[i] -= v * shift;
    }
    *obj_constant += g.col_costs[j] * shift;
}

/// Primal/dual pair with reduced costs for a [`StandardLp`].
#[derive(Debug, Clone, PartialEq)]
pub struct KktPoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl KktPoint {
    pub fn zeros(m: usize, n: usize) -> Self {
        KktPoint {
            x: vec![0.0; n],
            y: vec![0.0; m],
            z: vec![0.0; n],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(&self.y).chain(&self.z).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Residuals {
    /// `b − A x`
    pub r_p: Vec<f64>,
    /// `c − Aᵀy − z`
    pub r_d: Vec<f64>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    /// `xᵀz`
    pub comp: f64,
}

pub fn residuals(p: &StandardLp, pt: &KktPoint) -> Result<Residuals, LpError> {
    p.check_point(pt)?;
    let ax = p.a.mul_vec(&pt.x);
    let aty = p.a.tmul_vec(&pt.y);
    let r_p = p.b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let r_d = p
        .c
        .iter()
        .zip(&aty)
        .zip(&pt.z)
        .map(|((c, a), z)| c - a - z)
        .collect();
    Ok(Residuals {
        r_p,
        r_d,
        primal_obj: dot(&p.c, &pt.x),
        dual_obj: dot(&p.b, &pt.y),
        comp: dot(&pt.x, &pt.z),
    })
}

/// Outcome of the relative termination test, with both sides of each
/// inequality kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerminationCheck {
    pub passed: bool,
    pub primal_lhs: f64,
    pub primal_rhs: f64,
    pub dual_lhs: f64,
    pub dual_rhs: f64,
    pub gap_lhs: f64,
    pub gap_rhs: f64,
}

/// `‖r_P‖₂ ≤ ε(1+‖b‖₂)`, `‖r_D‖₂ ≤ ε(1+‖c‖₂)` and
/// `|cᵀx − bᵀy| ≤ ε(1+|cᵀx|+|bᵀy|)`.
pub fn check_relative_termination(
    p: &StandardLp,
    pt: &KktPoint,
    eps_rel: f64,
) -> Result<TerminationCheck, LpError> {
    assert!(eps_rel > 0.0, "eps_rel must be positive");
    let r = residuals(p, pt)?;
    Ok(termination_from_residuals(p, &r, eps_rel))
}

pub(crate) fn termination_from_residuals(
    p: &StandardLp,
    r: &Residuals,
    eps_rel: f64,
) -> TerminationCheck {
    let primal_lhs = norm2(&r.r_p);
    let primal_rhs = eps_rel * (1.0 + norm2(&p.b));
    let dual_lhs = norm2(&r.r_d);
    let dual_rhs = eps_rel * (1.0 + norm2(&p.c));
    let gap_lhs = (r.primal_obj - r.dual_obj).abs();
    let gap_rhs = eps_rel * (1.0 + r.primal_obj.abs() + r.dual_obj.abs());
    TerminationCheck {
        passed: primal_lhs <= primal_rhs && dual_lhs <= dual_rhs && gap_lhs <= gap_rhs,
        primal_lhs,
        primal_rhs,
        dual_lhs,
        dual_rhs,
        gap_lhs,
        gap_rhs,
    }
}

/// Max-violation breakdown: infinity norms of both residuals and the
/// relative complementarity `xᵀz / (1 + |cᵀx|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViolationSummary {
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub rel_gap: f64,
    pub max_violation: f64,
}

impl ViolationSummary {
    pub fn new(primal_inf: f64, dual_inf: f64, rel_gap: f64) -> Self {
        ViolationSummary {
            primal_inf,
            dual_inf,
            rel_gap,
            max_violation: primal_inf.max(dual_inf).max(rel_gap),
        }
    }

    /// Negative complementarity is reported as-is, never clamped.
    pub fn has_negative_complementarity(&self) -> bool {
        self.rel_gap < 0.0
    }
}

/// Evaluates the violation on the model it is given. To report on an
/// original model, untransform the point first.
pub fn violation_summary(p: &StandardLp, pt: &KktPoint) -> Result<ViolationSummary, LpError> {
    let r = residuals(p, pt)?;
    Ok(violation_from_residuals(&r))
}

pub(crate) fn violation_from_residuals(r: &Residuals) -> ViolationSummary {
    ViolationSummary::new(
        norm_inf(&r.r_p),
        norm_inf(&r.r_d),
        r.comp / (1.0 + r.primal_obj.abs()),
    )
}

/// `z = max(0, c − Aᵀy)`; the negative part of `c − Aᵀy` is left in the
/// dual residual.
pub fn extract_reduced_costs(p: &StandardLp, y: &[f64]) -> Vec<f64> {
    let aty = p.a.tmul_vec(y);
    p.c.iter().zip(aty).map(|(c, a)| (c - a).max(0.0)).collect()
}

/// Violation of a general-model point measured on the standard form of
/// the general model (see [`StandardLp::lift`]).
pub fn original_violation(g: &GeneralLp, pt: &KktPoint) -> Result<ViolationSummary, LpError> {
    let std = to_standard_form(g)?;
    let lifted = std.lift(g, pt)?;
    violation_summary(&std, &lifted)
}
