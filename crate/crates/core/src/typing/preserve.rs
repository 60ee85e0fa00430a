use super::check::{typecheck_cps, typecheck_source, typecheck_vn, TypeCtx, TypeError};
use crate::cps::CpsTerm;
use crate::semantics::{Lang, StepResult};
use crate::source::Term;
use crate::transform::{compile_with, CompileError, CompileOptions};
use crate::types::Type;
use crate::vn::VnTerm;
use serde::Serialize;

/// Calculi whose terms carry a typing judgement.
pub trait StageCalculus: Lang {
    /// The synthesized type, or `R` for calculi whose judgement has no type.
    fn judge(&self, ctx: &TypeCtx) -> Result<Type, TypeError>;
}

impl StageCalculus for Term {
    fn judge(&self, ctx: &TypeCtx) -> Result<Type, TypeError> {
        typecheck_source(ctx, self)
    }
}

impl StageCalculus for CpsTerm {
    fn judge(&self, ctx: &TypeCtx) -> Result<Type, TypeError> {
        typecheck_cps(ctx, self).map(|_| Type::Result)
    }
}

impl StageCalculus for VnTerm {
    fn judge(&self, ctx: &TypeCtx) -> Result<Type, TypeError> {
        typecheck_vn(ctx, self).map(|_| Type::Result)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SubjectReductionReport {
    pub initial_type: String,
    pub steps_checked: usize,
    /// First step after which the judgement failed, with the reason.
    pub violation: Option<(usize, String)>,
}

impl SubjectReductionReport {
    pub fn ok(&self) -> bool {
        self.violation.is_none()
    }
}

/// Steps `t` up to `steps` times, re-checking the judgement at the original type after each step.
pub fn check_subject_reduction<T: StageCalculus>(ctx: &TypeCtx, t: &T, steps: usize) -> Result<SubjectReductionReport, TypeError> {
    let a = t.judge(ctx)?;
    let mut supply = t.supply_for();
    let mut cur = t.clone();
    let mut report = SubjectReductionReport { initial_type: a.to_string(), steps_checked: 0, violation: None };
    for i in 1..=steps {
        match cur.step_with(&mut supply) {
            StepResult::Stuck(_) => break,
            StepResult::Stepped { next, .. } => {
                report.steps_checked = i;
                match next.judge(ctx) {
                    Ok(b) if b.alpha_eq(&a) => {}
                    Ok(b) => {
                        report.violation = Some((i, format!("type changed from {a} to {b}")));
                        break;
                    }
                    Err(e) => {
                        report.violation = Some((i, e.to_string()));
                        break;
                    }
                }
                cur = next;
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize)]
pub struct StageJudgement {
    pub stage: String,
    pub context: String,
    pub term: String,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PreservationReport {
    pub source_context: String,
    pub source_type: String,
    pub stages: Vec<StageJudgement>,
}

impl PreservationReport {
    pub fn ok(&self) -> bool {
        self.stages.iter().all(|s| s.error.is_none())
    }

    pub fn first_failure(&self) -> Option<&StageJudgement> {
        self.stages.iter().find(|s| s.error.is_some())
    }
}

/// Compiles `m` in typed mode and checks the judgement expected after every stage.
pub fn check_type_preservation(ctx: &TypeCtx, m: &Term, opt_halt: bool) -> Result<PreservationReport, TypeError> {
    let a = typecheck_source(ctx, m)?;
    let out = match compile_with(m, CompileOptions { typed: true, opt_halt }, Some(ctx)) {
        Ok(out) => out,
        Err(CompileError::Type(e)) => {
            return Ok(PreservationReport {
                source_context: ctx.to_string(),
                source_type: a.to_string(),
                stages: vec![StageJudgement {
                    stage: "compile".into(),
                    context: ctx.to_string(),
                    term: m.to_string(),
                    error: Some(e.to_string()),
                }],
            })
        }
        Err(CompileError::Hoist(e)) => {
            return Ok(PreservationReport {
                source_context: ctx.to_string(),
                source_type: a.to_string(),
                stages: vec![StageJudgement { stage: "hoist".into(), context: String::new(), term: String::new(), error: Some(e.to_string()) }],
            })
        }
    };
    let cps_ctx = out.cps_ctx().expect("typed compilation");
    let cc_ctx = out.cc_ctx().expect("typed compilation");
    let hoisted = out.program.to_term();
    let judge = |stage: &str, c: &TypeCtx, r: Result<(), TypeError>, term: String| StageJudgement {
        stage: stage.into(),
        context: c.to_string(),
        term,
        error: r.err().map(|e| e.at_stage(stage).to_string()),
    };
    let stages = vec![
        judge("cps", &cps_ctx, typecheck_cps(&cps_ctx, &out.cps), out.cps.to_string()),
        judge("vn", &cps_ctx, typecheck_vn(&cps_ctx, &out.vn), out.vn.to_string()),
        judge("cc", &cc_ctx, typecheck_vn(&cc_ctx, &out.cc), out.cc.to_string()),
        judge("hoist", &cc_ctx, typecheck_vn(&cc_ctx, &hoisted), out.program.to_string()),
    ];
    Ok(PreservationReport { source_context: ctx.to_string(), source_type: a.to_string(), stages })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ctx, parse_term};

    #[test]
    fn constant_function_all_stages() {
        let m = parse_term("\\(x: t2). y").unwrap();
        let ctx = TypeCtx::from_pairs(parse_ctx("y: t1").unwrap());
        for opt in [false, true] {
            let r = check_type_preservation(&ctx, &m, opt).unwrap();
            assert!(r.ok(), "{:?}", r.first_failure());
        }
    }

    #[test]
    fn identity_application_keeps_its_type() {
        let m = parse_term("(\\(x: t -> t). x) @ (\\(y: t). y)").unwrap();
        let r = check_subject_reduction(&TypeCtx::new(), &m, 50).unwrap();
        assert!(r.ok());
        assert_eq!(r.initial_type, "t -> t");
        let out = compile_with(&m, CompileOptions { typed: true, opt_halt: false }, None).unwrap();
        let r = check_subject_reduction(&out.cc_ctx().unwrap(), &out.program.to_term(), 200).unwrap();
        assert!(r.ok(), "{:?}", r.violation);
        assert!(r.steps_checked > 0);
    }
}
