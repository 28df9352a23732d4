//! MPS reader and writer.
//!
//! Free-format MPS is the primary dialect: fields are whitespace separated
//! and names may not contain blanks. Fixed-format files whose names contain
//! no blanks parse the same way. Sections must appear in the canonical order
//! `NAME, [OBJSENSE], ROWS, COLUMNS, [RHS], [RANGES], [BOUNDS], ENDATA`.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::ParseError;
use crate::lp::{GeneralLp, RowSense};
use crate::sparse::CsMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum RowKind {
    Objective,
    Constraint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum MpsRowType {
    L,
    G,
    E,
}

struct Builder {
    name: String,
    maximize: bool,
    objective_name: Option<String>,
    rows: HashMap<String, RowKind>,
    row_names: Vec<String>,
    row_types: Vec<MpsRowType>,
    rhs: Vec<f64>,
    ranges: Vec<Option<f64>>,
    obj_rhs: f64,
    cols: HashMap<String, usize>,
    col_names: Vec<String>,
    costs: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Parses MPS text into a [`GeneralLp`].
///
/// Missing bounds default to `[0, +∞)`. Duplicate `(row, column)` entries are
/// summed. A constant on the objective row in `RHS` becomes an objective
/// offset of the opposite sign. `OBJSENSE MAX` negates the costs and sets
/// [`GeneralLp::maximize`].
pub fn parse_mps(text: &str) -> Result<GeneralLp, ParseError> {
    let mut b = Builder {
        name: String::new(),
        maximize: false,
        objective_name: None,
        rows: HashMap::new(),
        row_names: Vec::new(),
        row_types: Vec::new(),
        rhs: Vec::new(),
        ranges: Vec::new(),
        obj_rhs: 0.0,
        cols: HashMap::new(),
        col_names: Vec::new(),
        costs: Vec::new(),
        triplets: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
    };
    let mut section = Section::Start;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        last_line = lineno;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let fields: Vec<&str> = raw.split_whitespace().collect();
        let is_header = !raw.starts_with(char::is_whitespace);

        if is_header {
            let next = match fields[0] {
                "NAME" => Section::Name,
                "OBJSENSE" => Section::ObjSense,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => {
                    return Err(ParseError::new(lineno, format!("unknown section '{other}'")));
                }
            };
            if next <= section {
                return Err(ParseError::new(
                    lineno,
                    format!("section {} out of order", fields[0]),
                ));
            }
            if next > Section::Rows && section < Section::Rows {
                return Err(ParseError::new(lineno, "ROWS section missing"));
            }
            if next > Section::Columns && section < Section::Columns {
                return Err(ParseError::new(lineno, "COLUMNS section missing"));
            }
            section = next;
            match section {
                Section::Name => b.name = fields.get(1).copied().unwrap_or("").to_string(),
                Section::ObjSense => {
                    if let Some(s) = fields.get(1) {
                        b.maximize = parse_sense(s, lineno)?;
                    }
                }
                Section::End => break,
                _ => {
                    if fields.len() > 1 {
                        return Err(ParseError::new(
                            lineno,
                            format!("unexpected data after {} header", fields[0]),
                        ));
                    }
                }
            }
            continue;
        }

        match section {
            Section::Start => {
                return Err(ParseError::new(lineno, "data before first section"));
            }
            Section::Name => {
                return Err(ParseError::new(lineno, "unexpected data in NAME section"));
            }
            Section::ObjSense => {
                if fields.len() != 1 {
                    return Err(ParseError::new(lineno, "OBJSENSE expects MIN or MAX"));
                }
                b.maximize = parse_sense(fields[0], lineno)?;
            }
            Section::Rows => b.row_line(&fields, lineno)?,
            Section::Columns => b.column_line(&fields, lineno)?,
            Section::Rhs => b.rhs_line(&fields, lineno)?,
            Section::Ranges => b.range_line(&fields, lineno)?,
            Section::Bounds => b.bound_line(&fields, lineno)?,
            Section::End => unreachable!(),
        }
    }

    if section != Section::End {
        return Err(ParseError::new(last_line.max(1), "missing ENDATA"));
    }
    if b.objective_name.is_none() {
        return Err(ParseError::new(last_line, "no objective (N) row declared"));
    }
    Ok(b.finish())
}

fn parse_sense(s: &str, lineno: usize) -> Result<bool, ParseError> {
    match s {
        "MIN" | "MINIMIZE" | "MINIMISE" => Ok(false),
        "MAX" | "MAXIMIZE" | "MAXIMISE" => Ok(true),
        other => Err(ParseError::new(lineno, format!("unknown objective sense '{other}'"))),
    }
}

fn parse_num(s: &str, lineno: usize) -> Result<f64, ParseError> {
    let v: f64 = s
        .parse()
        .map_err(|_| ParseError::new(lineno, format!("invalid number '{s}'")))?;
    if v.is_nan() {
        return Err(ParseError::new(lineno, format!("invalid number '{s}'")));
    }
    Ok(v)
}

impl Builder {
    fn row_line(&mut self, f: &[&str], lineno: usize) -> Result<(), ParseError> {
        if f.len() != 2 {
            return Err(ParseError::new(lineno, "ROWS entry must be '<type> <name>'"));
        }
        let name = f[1].to_string();
        if self.rows.contains_key(&name) {
            return Err(ParseError::new(lineno, format!("duplicate row '{name}'")));
        }
        let ty = match f[0] {
            "N" => {
                if self.objective_name.is_some() {
                    return Err(ParseError::new(lineno, "multiple N rows"));
                }
                self.objective_name = Some(name.clone());
                self.rows.insert(name, RowKind::Objective);
                return Ok(());
            }
            "L" => MpsRowType::L,
            "G" => MpsRowType::G,
            "E" => MpsRowType::E,
            other => return Err(ParseError::new(lineno, format!("unknown row type '{other}'"))),
        };
        let i = self.row_names.len();
        self.rows.insert(name.clone(), RowKind::Constraint(i));
        self.row_names.push(name);
        self.row_types.push(ty);
        self.rhs.push(0.0);
        self.ranges.push(None);
        Ok(())
    }

    fn row(&self, name: &str, lineno: usize) -> Result<RowKind, ParseError> {
        self.rows
            .get(name)
            .copied()
            .ok_or_else(|| ParseError::new(lineno, format!("undeclared row '{name}'")))
    }

    fn column_line(&mut self, f: &[&str], lineno: usize) -> Result<(), ParseError> {
        if f.len() >= 2 && f[1] == "'MARKER'" {
            // Integrality markers carry no LP data.
            return Ok(());
        }
        if f.len() != 3 && f.len() != 5 {
            return Err(ParseError::new(
                lineno,
                "COLUMNS entry must be '<col> <row> <value> [<row> <value>]'",
            ));
        }
        let j = match self.cols.get(f[0]) {
            Some(&j) => j,
            None => {
                let j = self.col_names.len();
                self.cols.insert(f[0].to_string(), j);
                self.col_names.push(f[0].to_string());
                self.costs.push(0.0);
                self.lower.push(0.0);
                self.upper.push(f64::INFINITY);
                j
            }
        };
        for pair in f[1..].chunks(2) {
            let v = parse_num(pair[1], lineno)?;
            match self.row(pair[0], lineno)? {
                RowKind::Objective => self.costs[j] += v,
                RowKind::Constraint(i) => self.triplets.push((i, j, v)),
            }
        }
        Ok(())
    }

    /// RHS and RANGES lines carry an optional set name: an odd field count
    /// means the first field is the set name.
    fn pairs<'a>(f: &'a [&'a str], lineno: usize, what: &str) -> Result<&'a [&'a str], ParseError> {
        match f.len() {
            2 | 4 => Ok(f),
            3 | 5 => Ok(&f[1..]),
            _ => Err(ParseError::new(lineno, format!("malformed {what} entry"))),
        }
    }

    fn rhs_line(&mut self, f: &[&str], lineno: usize) -> Result<(), ParseError> {
        for pair in Self::pairs(f, lineno, "RHS")?.chunks(2) {
            let v = parse_num(pair[1], lineno)?;
            if !v.is_finite() {
                return Err(ParseError::new(lineno, "rhs must be finite"));
            }
            match self.row(pair[0], lineno)? {
                RowKind::Objective => self.obj_rhs = v,
                RowKind::Constraint(i) => self.rhs[i] = v,
            }
        }
        Ok(())
    }

    fn range_line(&mut self, f: &[&str], lineno: usize) -> Result<(), ParseError> {
        for pair in Self::pairs(f, lineno, "RANGES")?.chunks(2) {
            let v = parse_num(pair[1], lineno)?;
            if !v.is_finite() {
                return Err(ParseError::new(lineno, "range must be finite"));
            }
            match self.row(pair[0], lineno)? {
                RowKind::Objective => {
                    return Err(ParseError::new(lineno, "range on objective row"));
                }
                RowKind::Constraint(i) => self.ranges[i] = Some(v),
            }
        }
        Ok(())
    }

    fn bound_line(&mut self, f: &[&str], lineno: usize) -> Result<(), ParseError> {
        let ty = f[0];
        let needs_value = matches!(ty, "UP" | "LO" | "FX" | "LI" | "UI");
        let valueless = matches!(ty, "FR" | "MI" | "PL" | "BV");
        if !needs_value && !valueless {
            return Err(ParseError::new(lineno, format!("unsupported bound type '{ty}'")));
        }
        // Fields after the type: [set name] column [value]
        let rest = &f[1..];
        let (col, value) = match (needs_value, rest.len()) {
            (true, 3) => (rest[1], Some(rest[2])),
            (true, 2) => (rest[0], Some(rest[1])),
            (false, 3) => (rest[1], Some(rest[2])),
            (false, 2) => (rest[1], None),
            (false, 1) => (rest[0], None),
            _ => return Err(ParseError::new(lineno, "malformed BOUNDS entry")),
        };
        let j = *self
            .cols
            .get(col)
            .ok_or_else(|| ParseError::new(lineno, format!("bound on undeclared column '{col}'")))?;
        let v = value.map(|s| parse_num(s, lineno)).transpose()?;
        match ty {
            "UP" | "UI" => {
                let v = v.unwrap();
                // Classic MPS rule: a negative upper bound on a default-bounded
                // column makes the lower bound -inf.
                if v < 0.0 && self.lower[j] == 0.0 {
                    self.lower[j] = f64::NEG_INFINITY;
                }
                self.upper[j] = v;
            }
            "LO" | "LI" => self.lower[j] = v.unwrap(),
            "FX" => {
                self.lower[j] = v.unwrap();
                self.upper[j] = v.unwrap();
            }
            "FR" => {
                self.lower[j] = f64::NEG_INFINITY;
                self.upper[j] = f64::INFINITY;
            }
            "MI" => self.lower[j] = f64::NEG_INFINITY,
            "PL" => self.upper[j] = f64::INFINITY,
            "BV" => {
                self.lower[j] = 0.0;
                self.upper[j] = 1.0;
            }
            _ => unreachable!(),
        }
        Ok(())
    }

    fn finish(self) -> GeneralLp {
        let m = self.row_names.len();
        let n = self.col_names.len();
        let mut senses = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        for i in 0..m {
            let r = self.rhs[i];
            let (sense, lo) = match (self.row_types[i], self.ranges[i]) {
                (MpsRowType::L, None) => (RowSense::Le, r),
                (MpsRowType::G, None) => (RowSense::Ge, r),
                (MpsRowType::E, None) => (RowSense::Eq, r),
                (MpsRowType::L, Some(w)) => (RowSense::Range { width: w.abs() }, r - w.abs()),
                (MpsRowType::G, Some(w)) => (RowSense::Range { width: w.abs() }, r),
                (MpsRowType::E, Some(w)) if w >= 0.0 => (RowSense::Range { width: w }, r),
                (MpsRowType::E, Some(w)) => (RowSense::Range { width: -w }, r + w),
            };
            senses.push(sense);
            rhs.push(lo);
        }
        let mut costs = self.costs;
        let mut offset = -self.obj_rhs;
        if self.maximize {
            costs.iter_mut().for_each(|c| *c = -*c);
            offset = -offset;
        }
        GeneralLp {
            name: self.name,
            col_costs: costs,
            matrix: CsMatrix::from_triplets(m, n, &self.triplets),
            row_senses: senses,
            row_rhs: rhs,
            var_lower: self.lower,
            var_upper: self.upper,
            obj_offset: offset,
            maximize: self.maximize,
            row_names: self.row_names,
            col_names: self.col_names,
        }
    }
}

/// Writes `g` as free-format MPS that [`parse_mps`] reads back to an equal
/// model. Names must not contain blanks.
pub fn write_mps(g: &GeneralLp) -> String {
    let mut obj = String::from("OBJ");
    while g.row_names.contains(&obj) {
        obj.push('_');
    }
    let sign = if g.maximize { -1.0 } else { 1.0 };
    let mut out = String::new();
    let name = if g.name.is_empty() { "UNNAMED" } else { &g.name };
    let _ = writeln!(out, "NAME {name}");
    if g.maximize {
        let _ = writeln!(out, "OBJSENSE\n    MAX");
    }
    let _ = writeln!(out, "ROWS\n N {obj}");
    for (name, sense) in g.row_names.iter().zip(&g.row_senses) {
        let t = match sense {
            RowSense::Le => 'L',
            RowSense::Ge | RowSense::Range { .. } => 'G',
            RowSense::Eq => 'E',
        };
        let _ = writeln!(out, " {t} {name}");
    }
    let _ = writeln!(out, "COLUMNS");
    for j in 0..g.col_names.len() {
        let col = &g.col_names[j];
        let _ = writeln!(out, " {col} {obj} {}", sign * g.col_costs[j]);
        for (i, v) in g.matrix.col(j) {
            let _ = writeln!(out, " {col} {} {v}", g.row_names[i]);
        }
    }
    let _ = writeln!(out, "RHS");
    let obj_rhs = -sign * g.obj_offset;
    if obj_rhs != 0.0 {
        let _ = writeln!(out, " RHS {obj} {obj_rhs}");
    }
    for (name, &r) in g.row_names.iter().zip(&g.row_rhs) {
        if r != 0.0 {
            let _ = writeln!(out, " RHS {name} {r}");
        }
    }
    if g.row_senses.iter().any(|s| matches!(s, RowSense::Range { .. })) {
        let _ = writeln!(out, "RANGES");
        for (name, s) in g.row_names.iter().zip(&g.row_senses) {
            if let RowSense::Range { width } = s {
                let _ = writeln!(out, " RNG {name} {width}");
            }
        }
    }
    let _ = writeln!(out, "BOUNDS");
    for (j, col) in g.col_names.iter().enumerate() {
        let (lo, up) = (g.var_lower[j], g.var_upper[j]);
        if lo == f64::NEG_INFINITY && up == f64::INFINITY {
            let _ = writeln!(out, " FR BND {col}");
        } else if lo == up {
            let _ = writeln!(out, " FX BND {col} {lo}");
        } else {
            // UP first: a negative UP on a zero lower bound would otherwise
            // turn the lower bound into -inf when read back.
            if up != f64::INFINITY {
                let _ = writeln!(out, " UP BND {col} {up}");
            }
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {col}");
            } else if lo != 0.0 || up < 0.0 {
                let _ = writeln!(out, " LO BND {col} {lo}");
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}
