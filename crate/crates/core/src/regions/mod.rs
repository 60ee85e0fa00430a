//! The region-enriched hoisted calculus.

mod check;
mod effect;
mod erase;
mod heap;
mod parse;
mod syntax;

pub use check::{check_region_progress_and_sr, RegionReport, RegionViolation};
pub use effect::{def_types, effect_check, EffectError, RegionCtx};
pub use erase::{
    region_enrich, region_enrich_ctx, region_enrich_type, region_erase, region_erase_ctx, region_erase_term, region_erase_type,
    EnrichError, GLOBAL_REGION,
};
pub use heap::{
    blocked_on_free_var, coh, coh_violation, decompose, ndis, ndis_violation, region_is_answer, run_region, step_region,
    step_region_with, HeapCtx, HeapEntry, MemoryError, MemoryErrorKind, RegionRun, RegionStatus,
};
pub use parse::{parse_region_ctx, parse_region_program, parse_region_program_mode, parse_region_type};
pub use syntax::{region_alpha_eq, Effect, RBindable, RDef, RParam, RTerm, RegionMap, RegionProgram, RegionSupply, RegionType};

/// Worked programs from the memory-error discussion, in concrete syntax.
pub mod fixtures {
    /// Disposes the pair's region before `prj1` reads it.
    pub const P1: &str = "let prj1 = \\(x: *(t1, t2)@r). let z = proj 1 x in halt @ (z) in
let pair = \\(x1: t1) (x2: t2). newreg r in let y = (x1, x2)@r in dispose r in prj1 @ (y) in
pair @ (v1, v2)";

    /// `P1` with `prj1` abstracted over the region, still disposing before the call.
    pub const P1_REGION_ABSTRACTED: &str = "let prj1 = \\[r] (x: *(t1, t2)@r). let z = proj 1 x in halt @ (z) in
let pair = \\(x1: t1) (x2: t2). newreg r in let y = (x1, x2)@r in dispose r in prj1 @ [r] (y) in
pair @ (v1, v2)";

    /// Passes the region to `prj1`, which disposes it after projecting.
    pub const P2: &str = "let prj1 = \\[r] (x: *(t1, t2)@r). let z = proj 1 x in dispose r in halt @ (z) in
let pair = \\(x1: t1) (x2: t2). newreg r in let y = (x1, x2)@r in prj1 @ [r] (y) in
pair @ (v1, v2)";

    pub const CTX: &str = "v1: t1, v2: t2, halt: (t1) -{}-> R";

    pub const PAIR_TYPE: &str = "(t1, t2) -{}-> R";
    pub const PRJ1_TYPE: &str = "forall r. (*(t1, t2)@r) -{r}-> R";

    /// The final state of `P2`.
    pub const P2_FINAL: &str = "let prj1 = \\[r] (x: *(t1, t2)@r). let z = proj 1 x in dispose r in halt @ (z) in
let pair = \\(x1: t1) (x2: t2). newreg r in let y = (x1, x2)@r in prj1 @ [r] (y) in
newreg r in let y = (v1, v2)@r in dispose r in halt @ (v1)";
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::name::Name;
    use crate::semantics::{Fuel, StepResult};

    fn prog(s: &str) -> RegionProgram {
        parse_region_program(s).unwrap()
    }

    fn ctx() -> RegionCtx {
        parse_region_ctx(CTX).unwrap()
    }

    #[test]
    fn p2_terminates_cleanly() {
        let r = run_region(&prog(P2), Fuel::default());
        assert_eq!(r.status, RegionStatus::Value);
        assert!(region_alpha_eq(&r.last, &prog(P2_FINAL)), "{}", r.last);
    }

    #[test]
    fn p1_reads_a_disposed_region() {
        let r = run_region(&prog(P1), Fuel::default());
        match r.status {
            RegionStatus::MemoryError { error } => {
                assert_eq!(error.kind, MemoryErrorKind::AccessDisposed);
                assert_eq!(error.region, Name::new("r"));
                assert_eq!(error.index, 2);
            }
            other => panic!("{other}"),
        }
        let (h, _) = decompose(&r.last.main);
        assert!(matches!(&h.0[..], [HeapEntry::NewRegion(_), HeapEntry::BindTupleAt(_, ys, _), HeapEntry::Disposed(_)] if ys.len() == 2));
    }

    #[test]
    fn p2_has_the_displayed_types() {
        let tys = def_types(&ctx(), &prog(P2)).unwrap();
        assert!(tys[0].1.alpha_eq(&parse_region_type(PRJ1_TYPE).unwrap()), "{}", tys[0].1);
        assert!(tys[1].1.alpha_eq(&parse_region_type(PAIR_TYPE).unwrap()), "{}", tys[1].1);
        assert_eq!(effect_check(&ctx(), &prog(P2)).unwrap(), Effect::empty());
    }

    #[test]
    fn p1_is_rejected() {
        assert!(matches!(effect_check(&ctx(), &prog(P1)), Err(EffectError::FunctionNotRegionClosed { .. })));
        assert!(matches!(effect_check(&ctx(), &prog(P1_REGION_ABSTRACTED)), Err(EffectError::DisposedRegionUsed { .. })));
    }

    #[test]
    fn repeated_region_arguments() {
        let c = parse_region_ctx("x: forall r1, r2. (*()) -{r1, r2}-> R, y: *()").unwrap();
        let p = prog("newreg r in x @ [r, r] (y)");
        assert!(matches!(effect_check(&c, &p), Err(EffectError::RegionArgsNotDistinct { .. })));
    }

    #[test]
    fn region_open_function_types_cannot_be_applied() {
        let c = parse_region_ctx("x: forall r1. (*()) -{r1, r2}-> R, y: *()").unwrap();
        let p = prog("newreg r in x @ [r] (y)");
        assert!(matches!(effect_check(&c, &p), Err(EffectError::RegionOpenFunction { .. })));
    }

    #[test]
    fn double_disposal_is_incoherent() {
        let p = prog("newreg r in dispose r in dispose r in l> halt @ (x)");
        match step_region(&p) {
            Err(e) => {
                assert_eq!(e.kind, MemoryErrorKind::IncoherentHeap);
                assert_eq!(e.index, 2);
            }
            Ok(StepResult::Stepped { .. }) | Ok(StepResult::Stuck(_)) => panic!("expected a memory error"),
        }
    }

    #[test]
    fn p2_report_is_clean() {
        let rep = check_region_progress_and_sr(&prog(P2), &ctx(), Fuel::default());
        assert!(rep.is_clean(), "{:?}", rep.violations);
        assert_eq!(rep.status, Some(RegionStatus::Value));
        assert_eq!(rep.steps.len(), 3);
    }

    #[test]
    fn value_final_program_has_empty_trace() {
        let rep = check_region_progress_and_sr(&prog("halt @ (v1)"), &ctx(), Fuel::default());
        assert!(rep.is_clean());
        assert!(rep.steps.is_empty());
    }

    #[test]
    fn reallocated_region_names_are_freshened() {
        let p = prog(
            "let f = \\(k: (t1) -{}-> R) (a: t1). newreg r in let y = (a)@r in let z = proj 1 y in dispose r in k @ (z) in
             let g = \\(a: t1). f @ (halt, a) in
             newreg r in let y = (v1)@r in let w = proj 1 y in f @ (g, w)",
        );
        let rep = check_region_progress_and_sr(&p, &ctx(), Fuel::default());
        assert!(rep.is_clean(), "{:?}", rep.violations);
        assert_eq!(rep.status, Some(RegionStatus::Value));
    }

    #[test]
    fn enriched_compiled_program_simulates_its_erasure() {
        use crate::parse::{parse_ctx, parse_term};
        use crate::transform::{compile_with, label_init, CompileOptions};
        use crate::typing::TypeCtx;
        let m = parse_term("(\\(f: t -> *(t, t)). proj 1 (f @ (y))) @ (\\(z: t). (z, z))").unwrap();
        let ctx = TypeCtx::from_pairs(parse_ctx("y: t").unwrap());
        let lm = label_init(&m).unwrap();
        let out = compile_with(&lm, CompileOptions { typed: true, opt_halt: true }, Some(&ctx)).unwrap();
        let rp = region_enrich(&out.program).unwrap();
        let rctx = region_enrich_ctx(&out.cc_ctx().unwrap()).unwrap();
        assert_eq!(effect_check(&rctx, &rp).unwrap(), Effect::empty());
        let rep = check_region_progress_and_sr(&rp, &rctx, Fuel::default());
        assert!(rep.is_clean(), "{:?}\n{rp}", rep.violations);
        assert_eq!(rep.status, Some(RegionStatus::Value));
        let plain = crate::semantics::run(&out.program.to_term(), Fuel::default());
        assert_eq!(rep.labels(), plain.labels());
        assert!(!rep.labels().is_empty());
    }
}
