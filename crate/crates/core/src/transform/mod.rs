//! The compilation chain: labelling, CPS, value naming, closure conversion and hoisting.

mod cc;
mod compile;
mod cps;
mod hoist;
mod label;
mod vn;

pub use cc::{closure_convert, closure_convert_typed, CcOptions};
pub use compile::{check_label_grammar, compile, compile_with, functions_closed, CompileError, CompileOptions, Compiled};
pub use cps::{cps, cps_typed};
pub use hoist::{hoist, hoist_step, hoist_with, measure, HoistError, HoistOutcome, HoistRule, HoistStep, HoistStrategy};
pub use label::{label_i, label_init, well_labelled, AlreadyLabelled, WellLabelClass};
pub use vn::{readback, to_value_named};
