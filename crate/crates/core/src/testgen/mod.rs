//! Seeded generation of well-typed source terms, shrinking, and the property harness.

mod gen;
mod props;
mod shrink;

pub use gen::{gen_typed_term, GenConfig, GenError, Generator};
pub use props::{
    admin_normal, check_cc_simulation, check_cc_simulation_up_to_env, check_commutation, check_cost, check_cps_simulation, check_cps_simulation_up_to_admin, check_property, check_regions,
    check_simulation, check_structure, check_trace_equality, check_types, check_vn_simulation,
    closure_unconvert, default_ctx, gen_case, run_case, Case, CaseResult, Check, Finding, Outcome, Property,
};
pub use shrink::{minimize, shrink};
