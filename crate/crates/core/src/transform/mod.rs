//! Model transformations with exact inverse maps: minimal presolve and
//! Ruiz equilibration. The solve pipeline applies them in the order
//! presolve → standard form → scale, and undoes them in reverse.

mod presolve;
mod scaling;

pub use presolve::{postsolve, presolve, PresolveError, PresolveStack, Reduction};
pub use scaling::{ruiz_equilibrate, scale_point, unscale_point, ScalingInfo, DEFAULT_RUIZ_ITERS};
