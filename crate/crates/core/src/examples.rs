//! The worked examples as self-checking fixtures: each returns `Err` with a description of the
//! first mismatch.

use crate::alpha::alpha_eq;
use crate::parse::{parse_cps, parse_ctx, parse_hoist, parse_term, parse_term_internal, parse_type, parse_vn};
use crate::regions::{
    def_types, effect_check, fixtures, parse_region_ctx, parse_region_program, parse_region_type, run_region, Effect, EffectError,
    MemoryErrorKind, RegionStatus,
};
use crate::semantics::{Fuel, Lang, StepResult};
use crate::transform::{closure_convert, compile_with, cps, hoist, label_init, readback, to_value_named, well_labelled, CcOptions, CompileOptions};
use crate::typing::{typecheck_cps, typecheck_source, typecheck_vn, TypeCtx};
use crate::vn::VnTerm;
use std::fmt::Display;

pub type ExampleCheck = fn() -> Result<(), String>;

/// Every worked example, by name.
pub const ALL: [(&str, ExampleCheck); 9] = [
    ("eta discrepancy", example_eta_discrepancy),
    ("cps translation and simulation", example_cps),
    ("value-named form", example_value_named),
    ("closure conversion", example_closure_conversion),
    ("hoisting orderings", example_hoisting_orderings),
    ("labelling", example_labelling),
    ("typed compilation", example_typed_compilation),
    ("memory errors", example_memory_errors),
    ("types and effects", example_types_and_effects),
];

fn ensure(ok: bool, what: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(what())
    }
}

fn same<T: crate::alpha::AlphaEq + Display>(what: &str, got: &T, expected: &T) -> Result<(), String> {
    ensure(alpha_eq(got, expected), || format!("{what}: got {got}, expected {expected}"))
}

fn parsed<T, E: Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| format!("fixture does not parse: {e}"))
}

fn step<T: Lang>(t: &T) -> Result<T, String> {
    match t.step() {
        StepResult::Stepped { next, .. } => Ok(next),
        StepResult::Stuck(_) => Err(format!("no step from {t}")),
    }
}

/// `λx.(@(x,x) >ℓ)` is not in W0, and erasure commutes with CPS only up to η.
pub fn example_eta_discrepancy() -> Result<(), String> {
    let m = parsed(parse_term("\\x. x @ (x) >l"))?;
    ensure(!well_labelled(&m).is_w0(), || "the term should not be in W0".into())?;
    let erase_cps = cps(&m).erase();
    let cps_erase = cps(&m.erase());
    same("erase(cps(M))", &erase_cps, &parsed(parse_cps("halt @ (\\x k. x @ (x, \\x. k @ (x)))"))?)?;
    same("cps(erase(M))", &cps_erase, &parsed(parse_cps("halt @ (\\x k. x @ (x, k))"))?)?;
    ensure(!alpha_eq(&erase_cps, &cps_erase), || "the two erasures should differ".into())
}

/// `M = @(λx.@(x,@(x,x)), I)` translates to `@(λx,k.@(x,x,λy.@(x,y,k)), I', H)` and each of its
/// three steps is simulated: one step, then at least one, then at least one.
pub fn example_cps() -> Result<(), String> {
    let m = parsed(parse_term("(\\x. x @ (x @ (x))) @ (\\x. x)"))?;
    let i = "\\x. x";
    let i_cps = "\\x k. k @ (x)";
    let h = "\\x. halt @ (x)";
    same("cps(M)", &cps(&m), &parsed(parse_cps(&format!("(\\x k. x @ (x, \\y. x @ (y, k))) @ ({i_cps}, {h})")))?)?;

    let source = [
        format!("({i}) @ (({i}) @ ({i}))"),
        format!("({i}) @ ({i})"),
        i.to_string(),
    ];
    let target = [
        format!("({i_cps}) @ ({i_cps}, \\y. ({i_cps}) @ (y, {h}))"),
        format!("({i_cps}) @ ({i_cps}, {h})"),
        format!("halt @ ({i_cps})"),
    ];
    let mut cur = m.clone();
    let mut cur_cps = cps(&m);
    for (k, (s, t)) in source.iter().zip(&target).enumerate() {
        cur = step(&cur)?;
        same(&format!("source step {}", k + 1), &cur, &parsed(parse_term(s))?)?;
        let t = parsed(parse_cps(t))?;
        same(&format!("cps of source step {}", k + 1), &cps(&cur), &t)?;
        let mut n = 0;
        loop {
            cur_cps = step(&cur_cps)?;
            n += 1;
            if alpha_eq(&cur_cps, &t) {
                break;
            }
            ensure(k > 0 && n < 50, || format!("cps side does not reach {t} (at {cur_cps})"))?;
        }
        ensure(k > 0 || n == 1, || "the first step is simulated by exactly one step".into())?;
    }
    Ok(())
}

/// The value-named form of the CPS term above names every value.
pub fn example_value_named() -> Result<(), String> {
    let n = parsed(parse_cps("(\\x k. x @ (x, \\y. x @ (y, k))) @ (\\x k. k @ (x), \\x. halt @ (x))"))?;
    let expected = parsed(parse_vn(
        "let z1 = \\x k. (let z11 = \\y. x @ (y, k) in x @ (x, z11)) in \
         let z2 = \\x k. k @ (x) in \
         let z3 = \\x. halt @ (x) in \
         z1 @ (z2, z3)",
    ))?;
    let vn = to_value_named(&n);
    same("vn(N)", &vn, &expected)?;
    same("readback(vn(N))", &readback(&vn), &n)
}

const CONST_VN: &str = "let z1 = \\x k. k @ (y) in halt @ (z1)";

/// Untyped closure conversion of `vn(cps(λx.y))`.
pub fn example_closure_conversion() -> Result<(), String> {
    let m = parsed(parse_vn(CONST_VN))?;
    same("vn(cps(λx.y))", &to_value_named(&cps(&parsed(parse_term("\\x. y"))?)), &m)?;
    let expected = parsed(parse_vn(
        "let c = \\e x k. (let y = proj 1 e in let c = proj 1 k in let e = proj 2 k in c @ (e, y)) in \
         let e = (y) in let z1 = (c, e) in let c = proj 1 halt in let e = proj 2 halt in c @ (e, z1)",
    ))?;
    same("cc(M)", &closure_convert(&m, CcOptions::default()), &expected)
}

/// Reducing then hoisting duplicates the inner definition; hoisting then reducing does not.
pub fn example_hoisting_orderings() -> Result<(), String> {
    let t2 = "halt @ (y2)";
    let t1 = |arg: &str| format!("x2 @ ({arg})");
    let n = format!("let x2 = \\y2. {t2} in {}", t1("y1"));
    let m = parsed(parse_vn(&format!("let x1 = \\y1. ({n}) in x1 @ (z)")))?;

    let reduced = step(&m)?;
    same("M → let x1 = λy1.N in [z/y1]N", &reduced, &parsed(parse_vn(&format!("let x1 = \\y1. ({n}) in let x2 = \\y2. {t2} in {}", t1("z"))))?)?;
    let reduce_then_hoist = hoist(&reduced).map_err(|e| e.to_string())?.program;
    let duplicated = parsed(parse_hoist(&format!(
        "let x2 = \\y2. {t2} in let x1 = \\y1. {} in let x2 = \\y2. {t2} in {}",
        t1("y1"),
        t1("z")
    )))?;
    same("reduce then hoist", &reduce_then_hoist, &duplicated)?;
    ensure(hoist(&reduce_then_hoist.to_term()).is_ok_and(|o| o.steps.is_empty()), || "duplicated form should be a hoisting normal form".into())?;

    let hoisted = hoist(&m).map_err(|e| e.to_string())?.program;
    same("hoist(M)", &hoisted, &parsed(parse_hoist(&format!("let x2 = \\y2. {t2} in let x1 = \\y1. {} in x1 @ (z)", t1("y1"))))?)?;
    let hoist_then_reduce = step(&hoisted.to_term())?;
    let expected: VnTerm = parsed(parse_vn(&format!("let x2 = \\y2. {t2} in let x1 = \\y1. {} in {}", t1("y1"), t1("z"))))?;
    same("hoist then reduce", &hoist_then_reduce, &expected)?;
    ensure(hoist(&hoist_then_reduce).is_ok_and(|o| o.steps.is_empty()), || "result should be a hoisting normal form".into())
}

/// `L(λx.@(x,@(x,x))) ≡ λx.ℓ0>@(x, @(x,x)>ℓ1)`: only the inner application is post-labelled.
pub fn example_labelling() -> Result<(), String> {
    let m = parsed(parse_term("\\x. x @ (x @ (x))"))?;
    let lm = label_init(&m).map_err(|e| e.to_string())?;
    let expected = parsed(parse_term_internal("\\x. _l0> x @ (x @ (x) >_l1)"))?;
    ensure(lm == expected, || format!("L(M): got {lm}, expected {expected}"))
}

/// `λx.y` typed at `t2 → t1` under `y: t1`, through every stage and in both halt configurations.
pub fn example_typed_compilation() -> Result<(), String> {
    let ctx = TypeCtx::from_pairs(parsed(parse_ctx("y: t1"))?);
    let m = parsed(parse_term("\\(x: t2). y"))?;
    let a = typecheck_source(&ctx, &m).map_err(|e| e.to_string())?;
    ensure(a == parsed(parse_type("t2 -> t1"))?, || format!("source type {a}"))?;

    let cps_halt = parsed(parse_type("((t2, t1 -> R) -> R) -> R"))?;
    let cmp = "exists t. *((t, t2, exists s. *((s, t1) -> R, s)) -> R, t)";
    let halts = [
        (false, parsed(parse_type(&format!("exists u. *((u, {cmp}) -> R, u)")))?),
        (true, parsed(parse_type(&format!("({cmp}) -> R")))?),
    ];
    let cc_body = "let c = \\e x k. (let y = proj 1 e in let k = proj 1 k in let c = proj 1 k in let e = proj 2 k in c @ (e, y)) in \
                   let e = (y) in let z1 = (c, e) in let z1 = (z1) in";
    for (opt_halt, halt_ty) in halts {
        let out = compile_with(&m, CompileOptions { typed: true, opt_halt }, Some(&ctx)).map_err(|e| e.to_string())?;
        let cps_ctx = out.cps_ctx().expect("typed");
        ensure(cps_ctx.get(&crate::name::Name::halt()).is_some_and(|h| h.alpha_eq(&cps_halt)), || format!("cps context {cps_ctx}"))?;
        typecheck_cps(&cps_ctx, &out.cps).map_err(|e| format!("cps judgement: {e}"))?;
        same("cps", &out.cps.strip_types(), &parsed(parse_cps("halt @ (\\x k. k @ (y))"))?)?;
        typecheck_vn(&cps_ctx, &out.vn).map_err(|e| format!("vn judgement: {e}"))?;
        same("vn", &out.vn.strip_types(), &parsed(parse_vn(CONST_VN))?)?;

        let cc_ctx = out.cc_ctx().expect("typed");
        let got_halt = cc_ctx.get(&crate::name::Name::halt()).cloned();
        ensure(got_halt.as_ref().is_some_and(|h| h.alpha_eq(&halt_ty)), || format!("halt type {got_halt:?}, expected {halt_ty}"))?;
        ensure(cc_ctx.get(&crate::name::Name::new("y")) == Some(&parsed(parse_type("t1"))?), || format!("cc context {cc_ctx}"))?;
        typecheck_vn(&cc_ctx, &out.cc).map_err(|e| format!("cc judgement: {e}"))?;
        let tail = if opt_halt { "halt @ (z1)" } else { "let halt = proj 1 halt in let c = proj 1 halt in let e = proj 2 halt in c @ (e, z1)" };
        same(if opt_halt { "M'" } else { "M" }, &out.cc.strip_types(), &parsed(parse_vn(&format!("{cc_body} {tail}")))?)?;
        ensure(out.hoist_steps.is_empty(), || "no hoisting step applies".into())?;
    }
    Ok(())
}

/// P1 reads a disposed region; P2 terminates.
pub fn example_memory_errors() -> Result<(), String> {
    let p1 = parsed(parse_region_program(fixtures::P1))?;
    match run_region(&p1, Fuel::default()).status {
        RegionStatus::MemoryError { error } if error.kind == MemoryErrorKind::AccessDisposed => {}
        other => return Err(format!("P1 ends with {other}")),
    }
    let p2 = parsed(parse_region_program(fixtures::P2))?;
    let r = run_region(&p2, Fuel::default());
    ensure(r.status == RegionStatus::Value, || format!("P2 ends with {}", r.status))?;
    ensure(crate::regions::region_alpha_eq(&r.last, &parsed(parse_region_program(fixtures::P2_FINAL))?), || format!("P2 final state {}", r.last))
}

/// P2 effect-checks with the displayed types; P1 is rejected.
pub fn example_types_and_effects() -> Result<(), String> {
    let ctx = parsed(parse_region_ctx(fixtures::CTX))?;
    let p2 = parsed(parse_region_program(fixtures::P2))?;
    let tys = def_types(&ctx, &p2).map_err(|e| e.to_string())?;
    let prj1 = parsed(parse_region_type(fixtures::PRJ1_TYPE))?;
    let pair = parsed(parse_region_type(fixtures::PAIR_TYPE))?;
    ensure(tys.len() == 2 && tys[0].1.alpha_eq(&prj1) && tys[1].1.alpha_eq(&pair), || format!("P2 definition types {tys:?}"))?;
    ensure(effect_check(&ctx, &p2) == Ok(Effect::empty()), || "P2 should check with the empty effect".into())?;
    let p1 = parsed(parse_region_program(fixtures::P1))?;
    ensure(matches!(effect_check(&ctx, &p1), Err(EffectError::FunctionNotRegionClosed { .. })), || "P1 should be rejected".into())
}
