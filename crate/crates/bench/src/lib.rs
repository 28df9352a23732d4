//! Shared setup for the benchmarks: desk instances by name and their
//! presolved, standardized and equilibrated forms.

use hylp::desk::{desk_suite, DeskInstance};
use hylp::transform::{presolve, ruiz_equilibrate, DEFAULT_RUIZ_ITERS};
use hylp::{to_standard_form, StandardLp};

/// Instances used by the method benchmarks, small to large.
pub const BENCH_MODELS: [&str; 3] = ["rand_4_20x30", "rand_12_50x100", "rand_20_200x200"];

pub fn instance(name: &str) -> DeskInstance {
    desk_suite()
        .into_iter()
        .find(|i| i.name == name)
        .unwrap_or_else(|| panic!("no desk instance named {name}"))
}

/// The model the solvers actually see.
pub fn prepared(name: &str) -> StandardLp {
    let (reduced, _) = presolve(&instance(name).model).expect("presolve");
    let std = to_standard_form(&reduced).expect("standard form");
    ruiz_equilibrate(&std, DEFAULT_RUIZ_ITERS).expect("scaling").0
}
