use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Final state of a solve, shared by every solver and the solution file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    TimeLimit,
    Stalled,
    IterationLimit,
    NumericalFailure,
    Infeasible,
    Unbounded,
    Error,
}

impl SolveStatus {
    pub const ALL: [SolveStatus; 8] = [
        SolveStatus::Optimal,
        SolveStatus::TimeLimit,
        SolveStatus::Stalled,
        SolveStatus::IterationLimit,
        SolveStatus::NumericalFailure,
        SolveStatus::Infeasible,
        SolveStatus::Unbounded,
        SolveStatus::Error,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "Optimal",
            SolveStatus::TimeLimit => "TimeLimit",
            SolveStatus::Stalled => "Stalled",
            SolveStatus::IterationLimit => "IterationLimit",
            SolveStatus::NumericalFailure => "NumericalFailure",
            SolveStatus::Infeasible => "Infeasible",
            SolveStatus::Unbounded => "Unbounded",
            SolveStatus::Error => "Error",
        }
    }

    pub fn is_optimal(self) -> bool {
        self == SolveStatus::Optimal
    }
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SolveStatus {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SolveStatus::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| format!("unknown status '{s}'"))
    }
}
