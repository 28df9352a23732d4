pub mod cholesky;
pub mod desk;
pub mod error;
pub mod harness;
pub mod ipm;
pub mod lp;
pub mod mps;
pub mod pdhg;
pub mod pipeline;
pub mod solution;
pub mod sparse;
pub mod status;
pub mod transform;
pub mod warmstart;

pub use error::{LpError, ParseError};
pub use lp::{
    check_relative_termination, extract_reduced_costs, original_violation, residuals,
    to_standard_form, violation_summary, GeneralLp, KktPoint, Residuals, RowSense, StandardLp,
    TerminationCheck, ViolationSummary,
};
pub use harness::{check_solution, scatter_export, summarize, ResultRecord, SummaryRow};
pub use ipm::{run_ipm, IpmParams, IpmResult};
pub use mps::{parse_mps, write_mps};
pub use pdhg::{run_pdhg, PdhgParams, PdhgResult};
pub use pipeline::{solve_general, Method, SolveOptions, SolveReport};
pub use solution::{parse_solution, write_solution, PhaseIterations, SolutionFile};
pub use sparse::CsMatrix;
pub use status::SolveStatus;
pub use warmstart::{centered_start, hybrid_solve, WarmStartParams};
