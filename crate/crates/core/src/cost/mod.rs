//! Cost instrumentation, RTL emission and per-label cost analysis.

mod certify;
mod cfg;
mod instrument;
mod monoid;
mod rtl;

pub use certify::{certify_cost, CertifyReport, Verdict};
pub use cfg::{check_precise, check_sound, costof_table, Cfg, Imprecision, UnsoundLabelling};
pub use instrument::{eval_instrumented, ialpha_eq, instrument, psi, IEvalError, ITerm};
pub use monoid::{CostMonoid, CostTable, MissingCost};
pub use rtl::{emit_rtl, Instr, Routine, RtlError, RtlProgram, TailCall};
