//! Type checkers for every stage of the chain and the type translations between them.

mod check;
mod preserve;
mod translate;

pub use check::{typecheck_cps, typecheck_source, typecheck_vn, TypeCtx, TypeError};
pub use preserve::{
    check_subject_reduction, check_type_preservation, PreservationReport, StageCalculus, StageJudgement, SubjectReductionReport,
};
pub use translate::{cc_ctx, cc_type, compile_ctx, compile_type, cps_ctx, cps_type, halt_type, EXISTS_VAR};
