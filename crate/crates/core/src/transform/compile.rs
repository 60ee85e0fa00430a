use super::cc::{closure_convert, closure_convert_typed, CcOptions};
use super::cps::{cps, cps_typed};
use super::hoist::{hoist, HoistError, HoistStep};
use super::vn::to_value_named;
use crate::cps::CpsTerm;
use crate::source::Term;
use crate::types::Type;
use crate::typing::{cc_ctx, cps_type, halt_type, TypeCtx, TypeError};
use crate::vn::{Bindable, HoistProgram, VnTerm, VnValue};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Hoist(#[from] HoistError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub typed: bool,
    pub opt_halt: bool,
}

/// Every intermediate of one run of the chain.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub source: Term,
    /// Source type and context, when compiled in typed mode.
    pub typing: Option<(TypeCtx, Type)>,
    pub cps: CpsTerm,
    pub vn: VnTerm,
    pub cc: VnTerm,
    pub hoist_steps: Vec<HoistStep>,
    pub program: HoistProgram,
    pub options: CompileOptions,
}

impl Compiled {
    /// Context of the closure-converted and hoisted stages, `halt` included.
    pub fn cc_ctx(&self) -> Option<TypeCtx> {
        self.typing.as_ref().map(|(ctx, a)| {
            let (h, t) = halt_type(a, self.options.opt_halt);
            cc_ctx(&crate::typing::cps_ctx(ctx)).with(h, t)
        })
    }

    /// Context of the CPS and value-named stages, `halt` included.
    pub fn cps_ctx(&self) -> Option<TypeCtx> {
        self.typing.as_ref().map(|(ctx, a)| crate::typing::cps_ctx(ctx).with(crate::name::Name::halt(), Type::neg(cps_type(a))))
    }
}

/// Untyped compilation `C_h ∘ C_cc ∘ C_vn ∘ C_cps`.
pub fn compile(m: &Term) -> Result<Compiled, CompileError> {
    compile_with(m, CompileOptions::default(), None)
}

pub fn compile_with(m: &Term, options: CompileOptions, ctx: Option<&TypeCtx>) -> Result<Compiled, CompileError> {
    let (cps_term, typing) = if options.typed {
        let ctx = ctx.cloned().unwrap_or_default();
        let a = crate::typing::typecheck_source(&ctx, m)?;
        (cps_typed(&ctx, m)?, Some((ctx, a)))
    } else {
        (cps(m), None)
    };
    let vn = to_value_named(&cps_term);
    let mut out = Compiled {
        source: m.clone(),
        typing,
        cps: cps_term,
        vn: vn.clone(),
        cc: vn.clone(),
        hoist_steps: Vec::new(),
        program: HoistProgram { defs: Vec::new(), main: vn.clone() },
        options,
    };
    out.cc = match out.cc_ctx() {
        Some(cctx) => closure_convert_typed(&vn, &cctx, options.opt_halt)?,
        None => closure_convert(&vn, CcOptions { typed: false, opt_halt: options.opt_halt }),
    };
    let h = hoist(&out.cc)?;
    out.hoist_steps = h.steps;
    out.program = h.program;
    Ok(out)
}

/// Checks the shape produced from labelled sources: each definition body is a run of non-function
/// lets followed by exactly one label and a label-free tail; `main` has no labels.
pub fn check_label_grammar(p: &HoistProgram) -> Result<(), String> {
    for d in &p.defs {
        let mut cur = &d.body;
        loop {
            match cur {
                VnTerm::Let(_, b, rest) if b.lam().is_none() => cur = rest,
                VnTerm::Pre(_, rest) => {
                    if !rest.labels().is_empty() {
                        return Err(format!("definition `{}` carries more than one label", d.name));
                    }
                    break;
                }
                _ => return Err(format!("definition `{}` has no label", d.name)),
            }
        }
    }
    if !p.main.labels().is_empty() {
        return Err("the main term carries labels".to_string());
    }
    Ok(())
}

/// True when every λ in `t` is closed.
pub fn functions_closed(t: &VnTerm) -> bool {
    match t {
        VnTerm::App(..) => true,
        VnTerm::Let(_, b @ Bindable::Value(VnValue::Lam(_, body)), rest) => {
            b.free_vars_ordered().is_empty() && functions_closed(body) && functions_closed(rest)
        }
        VnTerm::Let(_, _, rest) | VnTerm::Pre(_, rest) => functions_closed(rest),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_ctx, parse_term, parse_vn_mode, Mode};
    use crate::transform::label_init;

    #[test]
    fn optimised_typed_chain_on_constant_function() {
        let m = parse_term("\\(x: t2). y").unwrap();
        let ctx = TypeCtx::from_pairs(parse_ctx("y: t1").unwrap());
        let out = compile_with(&m, CompileOptions { typed: true, opt_halt: true }, Some(&ctx)).unwrap();
        let expected = parse_vn_mode(
            "let c = \\e x k. (let y = proj 1 e in let k = proj 1 k in let c = proj 1 k in let e = proj 2 k in c @ (e, y)) in \
             let e = (y) in let z1 = (c, e) in let z1 = (z1) in halt @ (z1)",
            Mode::Internal,
        )
        .unwrap();
        assert!(alpha_eq(&out.cc, &expected), "{:#}", out.cc);
        assert!(out.hoist_steps.is_empty());
        assert!(functions_closed(&out.cc));
    }

    #[test]
    fn labelled_compilation_has_one_label_per_definition() {
        let m = parse_term("(\\x. x @ (x @ (x))) @ (\\z. z)").unwrap();
        let lm = label_init(&m).unwrap();
        let out = compile(&lm).unwrap();
        check_label_grammar(&out.program).unwrap();
        assert!(alpha_eq(&out.program.erase(), &compile(&m).unwrap().program));
    }
}
