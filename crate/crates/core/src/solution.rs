//! Solution files: a line-oriented key/value text format.
//!
//! ```text
//! HYLP-SOLUTION 1
//! model <name>
//! status <Optimal|TimeLimit|Stalled|...>
//! method <tag>
//! objective <real>
//! wall_seconds <real>
//! iterations.pdhg <int>
//! iterations.ipm <int>
//! iterations.escalations <int>
//! violation.primal_inf <real>      # the four violation lines are
//! violation.dual_inf <real>        # present together or not at all
//! violation.rel_gap <real>
//! violation.max_violation <real>
//! x <count>
//! <column name> <real>             # repeated <count> times
//! y <count>
//! <row name> <real>
//! z <count>
//! <column name> <real>
//! END
//! ```
//!
//! Keys always appear in this order. Reals are written with 17 significant
//! digits (`{:.16e}`), which round-trips every `f64` exactly.

use std::fmt::Write as _;

use crate::error::ParseError;
use crate::lp::ViolationSummary;
use crate::status::SolveStatus;

const MAGIC: &str = "HYLP-SOLUTION 1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseIterations {
    pub pdhg: u64,
    pub ipm: u64,
    pub escalations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolutionFile {
    pub model: String,
    pub status: SolveStatus,
    pub method: String,
    /// Objective of the original model in its own sense.
    pub objective: f64,
    pub wall_seconds: f64,
    pub iterations: PhaseIterations,
    pub violation: Option<ViolationSummary>,
    pub x: Vec<(String, f64)>,
    pub y: Vec<(String, f64)>,
    pub z: Vec<(String, f64)>,
}

impl SolutionFile {
    pub fn x_values(&self) -> Vec<f64> {
        self.x.iter().map(|(_, v)| *v).collect()
    }

    pub fn y_values(&self) -> Vec<f64> {
        self.y.iter().map(|(_, v)| *v).collect()
    }

    pub fn z_values(&self) -> Vec<f64> {
        self.z.iter().map(|(_, v)| *v).collect()
    }
}

fn real(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_solution(s: &SolutionFile) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    if s.model.is_empty() {
        let _ = writeln!(out, "model");
    } else {
        let _ = writeln!(out, "model {}", s.model);
    }
    let _ = writeln!(out, "status {}", s.status);
    let _ = writeln!(out, "method {}", s.method);
    let _ = writeln!(out, "objective {}", real(s.objective));
    let _ = writeln!(out, "wall_seconds {}", real(s.wall_seconds));
    let _ = writeln!(out, "iterations.pdhg {}", s.iterations.pdhg);
    let _ = writeln!(out, "iterations.ipm {}", s.iterations.ipm);
    let _ = writeln!(out, "iterations.escalations {}", s.iterations.escalations);
    if let Some(v) = &s.violation {
        let _ = writeln!(out, "violation.primal_inf {}", real(v.primal_inf));
        let _ = writeln!(out, "violation.dual_inf {}", real(v.dual_inf));
        let _ = writeln!(out, "violation.rel_gap {}", real(v.rel_gap));
        let _ = writeln!(out, "violation.max_violation {}", real(v.max_violation));
    }
    for (key, arr) in [("x", &s.x), ("y", &s.y), ("z", &s.z)] {
        let _ = writeln!(out, "{key} {}", arr.len());
        for (name, v) in arr {
            let _ = writeln!(out, "{name} {}", real(*v));
        }
    }
    out.push_str("END\n");
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<(usize, &'a str), ParseError> {
        match self.inner.next() {
            Some((i, l)) => {
                self.last = i + 1;
                Ok((i + 1, l))
            }
            None => Err(ParseError::new(self.last + 1, "unexpected end of file")),
        }
    }

    /// Next line as `key value`; the key must match.
    fn keyed(&mut self, key: &str) -> Result<(usize, &'a str), ParseError> {
        let (n, line) = self.next()?;
        let (k, v) = line.split_once(' ').unwrap_or((line, ""));
        if k != key {
            return Err(ParseError::new(n, format!("expected '{key}', found '{k}'")));
        }
        Ok((n, v))
    }

    fn real(&mut self, key: &str) -> Result<f64, ParseError> {
        let (n, v) = self.keyed(key)?;
        parse_real(v, n)
    }

    fn count(&mut self, key: &str) -> Result<u64, ParseError> {
        let (n, v) = self.keyed(key)?;
        v.parse()
            .map_err(|_| ParseError::new(n, format!("invalid count '{v}'")))
    }

    fn array(&mut self, key: &str) -> Result<Vec<(String, f64)>, ParseError> {
        let len = self.count(key)? as usize;
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let (n, line) = self.next()?;
            let (name, v) = line
                .split_once(' ')
                .ok_or_else(|| ParseError::new(n, "expected '<name> <value>'"))?;
            out.push((name.to_string(), parse_real(v, n)?));
        }
        Ok(out)
    }
}

fn parse_real(s: &str, line: usize) -> Result<f64, ParseError> {
    s.parse()
        .map_err(|_| ParseError::new(line, format!("invalid real '{s}'")))
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let (n, first) = lines.next()?;
    if first != MAGIC {
        return Err(ParseError::new(n, "not a solution file"));
    }
    let model = {
        let (_, line) = lines.next()?;
        match line.split_once(' ') {
            Some(("model", name)) => name.to_string(),
            None if line == "model" => String::new(),
            _ => return Err(ParseError::new(n + 1, "expected 'model'")),
        }
    };
    let (n, st) = lines.keyed("status")?;
    let status = st.parse().map_err(|e: String| ParseError::new(n, e))?;
    let (_, method) = lines.keyed("method")?;
    let method = method.to_string();
    let objective = lines.real("objective")?;
    let wall_seconds = lines.real("wall_seconds")?;
    let iterations = PhaseIterations {
        pdhg: lines.count("iterations.pdhg")?,
        ipm: lines.count("iterations.ipm")?,
        escalations: lines.count("iterations.escalations")?,
    };

    // Either the violation block or the x array comes next.
    let mut peek = lines.inner.clone();
    let has_violation = matches!(
        peek.next(),
        Some((_, l)) if l.starts_with("violation.")
    );
    let violation = if has_violation {
        let primal_inf = lines.real("violation.primal_inf")?;
        let dual_inf = lines.real("violation.dual_inf")?;
        let rel_gap = lines.real("violation.rel_gap")?;
        let max_violation = lines.real("violation.max_violation")?;
        Some(ViolationSummary {
            primal_inf,
            dual_inf,
            rel_gap,
            max_violation,
        })
    } else {
        None
    };
    if status == SolveStatus::Optimal && violation.is_none() {
        return Err(ParseError::new(lines.last, "Optimal solution without violation block"));
    }
    let x = lines.array("x")?;
    let y = lines.array("y")?;
    let z = lines.array("z")?;
    if x.len() != z.len() {
        return Err(ParseError::new(lines.last, "x and z lengths differ"));
    }
    let (n, end) = lines.next()?;
    if end != "END" {
        return Err(ParseError::new(n, "expected END"));
    }
    Ok(SolutionFile {
        model,
        status,
        method,
        objective,
        wall_seconds,
        iterations,
        violation,
        x,
        y,
        z,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lp1_optimal() -> SolutionFile {
        SolutionFile {
            model: "LP1".into(),
            status: SolveStatus::Optimal,
            method: "hybrid".into(),
            objective: 1.0,
            wall_seconds: 0.001,
            iterations: PhaseIterations {
                pdhg: 128,
                ipm: 4,
                escalations: 0,
            },
            violation: Some(ViolationSummary::new(0.0, 0.0, 0.0)),
            x: vec![("x1".into(), 1.0), ("x2".into(), 0.0)],
            y: vec![("c1".into(), 1.0)],
            z: vec![("x1".into(), 0.0), ("x2".into(), 1.0)],
        }
    }

    #[test]
    fn minimal_optimal_record() {
        let text = write_solution(&lp1_optimal());
        assert!(text.contains("status Optimal\n"));
        assert!(text.contains("x 2\nx1 1.0000000000000000e0\nx2 0.0000000000000000e0\n"));
        assert!(text.contains("y 1\nc1 "));
        assert!(text.contains("z 2\n"));
        assert!(text.ends_with("END\n"));
    }

    #[test]
    fn lp1_round_trip() {
        let s = lp1_optimal();
        assert_eq!(parse_solution(&write_solution(&s)).unwrap(), s);
    }

    #[test]
    fn stalled_partial_iterate_keeps_arrays_and_violation() {
        let mut s = lp1_optimal();
        s.status = SolveStatus::Stalled;
        s.x[0].1 = 0.75;
        s.violation = Some(ViolationSummary::new(0.25, 0.0, 0.1));
        let text = write_solution(&s);
        assert!(text.contains("violation.max_violation 2.5000000000000000e-1"));
        let back = parse_solution(&text).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn optimal_without_violation_is_rejected() {
        let mut s = lp1_optimal();
        s.violation = None;
        assert!(parse_solution(&write_solution(&s)).is_err());
        s.status = SolveStatus::Error;
        assert!(parse_solution(&write_solution(&s)).is_ok());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let text = write_solution(&lp1_optimal());
        for cut in [10, text.len() / 2, text.len() - 5] {
            assert!(parse_solution(&text[..cut]).is_err(), "cut at {cut}");
        }
    }

    proptest! {
        #[test]
        fn reals_round_trip_exactly(
            vals in proptest::collection::vec(proptest::num::f64::ANY, 1..6),
            secs in 0.0f64..1e4,
        ) {
            let mut s = lp1_optimal();
            s.wall_seconds = secs;
            s.x = vals.iter().enumerate().map(|(i, v)| (format!("c{i}"), *v)).collect();
            s.z = s.x.clone();
            let text = write_solution(&s);
            let back = parse_solution(&text).unwrap();
            prop_assert_eq!(write_solution(&back), text);
            for ((_, a), (_, b)) in back.x.iter().zip(&s.x) {
                prop_assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
            }
        }
    }
}
