use thiserror::Error;

use crate::error::{check_len, LpError};
use crate::lp::{GeneralLp, KktPoint, RowSense};
use crate::sparse::CsMatrix;

const FEAS_TOL: f64 = 1e-9;

/// One presolve reduction. Indices refer to the ORIGINAL model. Column
/// data (`cost`, `column` entries over original rows) is stored so that
/// postsolve can run without the model.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduction {
    FixedVariable {
        col: usize,
        value: f64,
        cost: f64,
        column: Vec<(usize, f64)>,
    },
    EmptyRow {
        row: usize,
    },
    EmptyColumn {
        col: usize,
        value: f64,
        cost: f64,
    },
    /// Equality row with a single active entry `coef · x_col = rhs`.
    SingletonRow {
        row: usize,
        col: usize,
        value: f64,
        cost: f64,
        column: Vec<(usize, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PresolveStack {
    pub reductions: Vec<Reduction>,
    pub original_rows: usize,
    pub original_cols: usize,
    /// Original indices of the rows / columns kept in the reduced model.
    pub kept_rows: Vec<usize>,
    pub kept_cols: Vec<usize>,
}

impl PresolveStack {
    /// Stack that keeps everything.
    pub fn empty(g: &GeneralLp) -> Self {
        PresolveStack {
            reductions: Vec::new(),
            original_rows: g.n_rows(),
            original_cols: g.n_vars(),
            kept_rows: (0..g.n_rows()).collect(),
            kept_cols: (0..g.n_vars()).collect(),
        }
    }

    /// Replays the reductions forward on `g`, rebuilding the reduced model.
    pub fn replay(&self, g: &GeneralLp) -> Result<GeneralLp, LpError> {
        check_len("rows", self.original_rows, g.n_rows())?;
        check_len("cols", self.original_cols, g.n_vars())?;
        let mut st = State::new(g);
        for r in &self.reductions {
            st.apply(g, r);
        }
        Ok(st.build(g))
    }

    /// True when presolve eliminated every column.
    pub fn solved_completely(&self) -> bool {
        self.kept_cols.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PresolveError {
    #[error("presolve detected infeasibility: {0}")]
    Infeasible(String),
    #[error("presolve detected unboundedness: {0}")]
    Unbounded(String),
    #[error(transparent)]
    Invalid(#[from] LpError),
}

struct State {
    row_active: Vec<bool>,
    col_active: Vec<bool>,
    rhs: Vec<f64>,
    row_count: Vec<usize>,
    col_count: Vec<usize>,
    offset: f64,
}

impl State {
    fn new(g: &GeneralLp) -> Self {
        State {
            row_active: vec![true; g.n_rows()],
            col_active: vec![true; g.n_vars()],
            rhs: g.row_rhs.clone(),
            row_count: (0..g.n_rows()).map(|i| g.matrix.row_nnz(i)).collect(),
            col_count: (0..g.n_vars()).map(|j| g.matrix.col_nnz(j)).collect(),
            offset: 0.0,
        }
    }

    fn remove_col(&mut self, g: &GeneralLp, j: usize, value: f64) {
        for (i, a) in g.matrix.col(j) {
            if self.row_active[i] {
                self.rhs[i] -= a * value;
                self.row_count[i] -= 1;
            }
        }
        self.offset += g.col_costs[j] * value;
        self.col_active[j] = false;
    }

    fn remove_row(&mut self, g: &GeneralLp, i: usize) {
        for (j, _) in g.matrix.row(i) {
            if self.col_active[j] {
                self.col_count[j] -= 1;
            }
        }
        self.row_active[i] = false;
    }

    fn apply(&mut self, g: &GeneralLp, r: &Reduction) {
        match *r {
            Reduction::FixedVariable { col, value, .. } | Reduction::EmptyColumn { col, value, .. } => {
                self.remove_col(g, col, value)
            }
            Reduction::EmptyRow { row } => self.remove_row(g, row),
            Reduction::SingletonRow { row, col, value, .. } => {
                self.remove_row(g, row);
                self.remove_col(g, col, value);
            }
        }
    }

    fn build(&self, g: &GeneralLp) -> GeneralLp {
        let kept_rows: Vec<usize> = (0..g.n_rows()).filter(|&i| self.row_active[i]).collect();
        let kept_cols: Vec<usize> = (0..g.n_vars()).filter(|&j| self.col_active[j]).collect();
        let mut row_pos = vec![usize::MAX; g.n_rows()];
        for (k, &i) in kept_rows.iter().enumerate() {
            row_pos[i] = k;
        }
        let mut trip = Vec::new();
        for (k, &j) in kept_cols.iter().enumerate() {
            for (i, a) in g.matrix.col(j) {
                if self.row_active[i] {
                    trip.push((row_pos[i], k, a));
                }
            }
        }
        GeneralLp {
            name: g.name.clone(),
            col_costs: kept_cols.iter().map(|&j| g.col_costs[j]).collect(),
            matrix: CsMatrix::from_triplets(kept_rows.len(), kept_cols.len(), &trip),
            row_senses: kept_rows.iter().map(|&i| g.row_senses[i]).collect(),
            row_rhs: kept_rows.iter().map(|&i| self.rhs[i]).collect(),
            var_lower: kept_cols.iter().map(|&j| g.var_lower[j]).collect(),
            var_upper: kept_cols.iter().map(|&j| g.var_upper[j]).collect(),
            obj_offset: g.obj_offset + self.offset,
            maximize: g.maximize,
            row_names: kept_rows.iter().map(|&i| g.row_names[i].clone()).collect(),
            col_names: kept_cols.iter().map(|&j| g.col_names[j].clone()).collect(),
        }
    }
}

fn tol(v: f64) -> f64 {
    FEAS_TOL * (1.0 + v.abs())
}

fn empty_row_consistent(sense: RowSense, rhs: f64) -> bool {
    let t = tol(rhs);
    match sense {
        RowSense::Eq => rhs.abs() <= t,
        RowSense::Le => rhs >= -t,
        RowSense::Ge => rhs <= t,
        RowSense::Range { width } => rhs <= t && rhs + width >= -t,
    }
}

/// Minimal presolve: fixed variables, empty rows, empty columns and
/// singleton equality rows, applied until nothing changes.
pub fn presolve(g: &GeneralLp) -> Result<(GeneralLp, PresolveStack), PresolveError> {
    g.validate()?;
    let (m, n) = (g.n_rows(), g.n_vars());
    let mut st = State::new(g);
    let mut reductions = Vec::new();
    let column_of = |j: usize| g.matrix.col(j).collect::<Vec<_>>();

    loop {
        let mut changed = false;
        for j in 0..n {
            if !st.col_active[j] {
                continue;
            }
            let (l, u, c) = (g.var_lower[j], g.var_upper[j], g.col_costs[j]);
            let red = if l == u {
                Reduction::FixedVariable {
                    col: j,
                    value: l,
                    cost: c,
                    column: column_of(j),
                }
            } else if st.col_count[j] == 0 {
                let value = if c > 0.0 {
                    if l.is_finite() {
                        l
                    } else {
                        return Err(PresolveError::Unbounded(format!(
                            "empty column {} decreases without bound",
                            g.col_names[j]
                        )));
                    }
                } else if c < 0.0 {
                    if u.is_finite() {
                        u
                    } else {
                        return Err(PresolveError::Unbounded(format!(
                            "empty column {} decreases without bound",
                            g.col_names[j]
                        )));
                    }
                } else if l.is_finite() {
                    l
                } else if u.is_finite() {
                    u
                } else {
                    0.0
                };
                Reduction::EmptyColumn { col: j, value, cost: c }
            } else {
                continue;
            };
            st.apply(g, &red);
            reductions.push(red);
            changed = true;
        }
        for i in 0..m {
            if !st.row_active[i] {
                continue;
            }
            let red = match st.row_count[i] {
                0 => {
                    if !empty_row_consistent(g.row_senses[i], st.rhs[i]) {
                        return Err(PresolveError::Infeasible(format!(
                            "empty row {} cannot meet rhs {}",
                            g.row_names[i], st.rhs[i]
                        )));
                    }
                    Reduction::EmptyRow { row: i }
                }
                1 if g.row_senses[i] == RowSense::Eq => {
                    let (j, a) = g
                        .matrix
                        .row(i)
                        .find(|&(j, _)| st.col_active[j])
                        .expect("row count says one active entry");
                    let mut value = st.rhs[i] / a;
                    let (l, u) = (g.var_lower[j], g.var_upper[j]);
                    if value < l - tol(l) || value > u + tol(u) {
                        return Err(PresolveError::Infeasible(format!(
                            "row {} fixes {} = {} outside [{}, {}]",
                            g.row_names[i], g.col_names[j], value, l, u
                        )));
                    }
                    value = value.clamp(l, u);
                    Reduction::SingletonRow {
                        row: i,
                        col: j,
                        value,
                        cost: g.col_costs[j],
                        column: column_of(j),
                    }
                }
                _ => continue,
            };
            st.apply(g, &red);
            reductions.push(red);
            changed = true;
        }
        if !changed {
            break;
        }
    }

    let reduced = st.build(g);
    let stack = PresolveStack {
        reductions,
        original_rows: m,
        original_cols: n,
        kept_rows: (0..m).filter(|&i| st.row_active[i]).collect(),
        kept_cols: (0..n).filter(|&j| st.col_active[j]).collect(),
    };
    Ok((reduced, stack))
}

/// Restores a reduced-model point to the original model.
///
/// Eliminated primal values come from the records; dropped empty rows get
/// dual 0; a dropped singleton row gets the dual that zeroes its column's
/// reduced cost. Reduced costs of eliminated columns are recomputed from
/// the stored column data, kept columns keep theirs.
pub fn postsolve(stack: &PresolveStack, pt: &KktPoint) -> Result<KktPoint, LpError> {
    check_len("x", stack.kept_cols.len(), pt.x.len())?;
    check_len("y", stack.kept_rows.len(), pt.y.len())?;
    check_len("z", stack.kept_cols.len(), pt.z.len())?;
    let mut x = vec![0.0; stack.original_cols];
    let mut y = vec![0.0; stack.original_rows];
    let mut z = vec![0.0; stack.original_cols];
    for (k, &j) in stack.kept_cols.iter().enumerate() {
        x[j] = pt.x[k];
        z[j] = pt.z[k];
    }
    for (k, &i) in stack.kept_rows.iter().enumerate() {
        y[i] = pt.y[k];
    }
    for r in stack.reductions.iter().rev() {
        match r {
            Reduction::FixedVariable { col, value, .. } | Reduction::EmptyColumn { col, value, .. } => {
                x[*col] = *value;
            }
            Reduction::EmptyRow { row } => y[*row] = 0.0,
            Reduction::SingletonRow {
                row,
                col,
                value,
                cost,
                column,
            } => {
                x[*col] = *value;
                let mut a_row = 0.0;
                let mut rest = 0.0;
                for &(i, a) in column {
                    if i == *row {
                        a_row = a;
                    } else {
                        rest += a * y[i];
                    }
                }
                y[*row] = (cost - rest) / a_row;
            }
        }
    }
    for r in &stack.reductions {
        match r {
            Reduction::FixedVariable { col, cost, column, .. }
            | Reduction::SingletonRow { col, cost, column, .. } => {
                z[*col] = cost - column.iter().map(|&(i, a)| a * y[i]).sum::<f64>();
            }
            Reduction::EmptyColumn { col, cost, .. } => z[*col] = *cost,
            Reduction::EmptyRow { .. } => {}
        }
    }
    Ok(KktPoint { x, y, z })
}
