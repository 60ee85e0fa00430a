//! Property checks over generated cases, with shrinking of counterexamples.

use super::gen::{GenConfig, GenError, Generator};
use super::shrink::minimize;
use crate::alpha::AlphaEq;
use crate::cps::{CpsSubst, CpsTerm, CpsValue};
use crate::cost::{certify_cost, check_precise, check_sound, emit_rtl, Verdict};
use crate::name::{Name, NameSupply, VAR_PREFIX};
use crate::regions::{
    check_region_progress_and_sr, effect_check, region_enrich, region_enrich_ctx, region_erase, RegionStatus,
};
use crate::semantics::{run, weak_reaches, Fuel, Lang, Status, StepResult};
use crate::source::Term;
use crate::transform::{
    check_label_grammar, closure_convert, compile, compile_with, cps, hoist, hoist_step, label_init, readback,
    to_value_named, well_labelled, CcOptions, CompileOptions, HoistStrategy,
};
use crate::types::Type;
use crate::typing::{check_subject_reduction, check_type_preservation, TypeCtx};
use crate::vn::{Bindable, Renaming, VnTerm, VnValue};
use crate::Cost;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Commutation,
    Simulation,
    Types,
    Regions,
    Cost,
    Structure,
}

impl Property {
    pub const ALL: [Property; 6] =
        [Property::Commutation, Property::Simulation, Property::Types, Property::Regions, Property::Cost, Property::Structure];

    pub fn name(self) -> &'static str {
        match self {
            Property::Commutation => "commutation",
            Property::Simulation => "simulation",
            Property::Types => "types",
            Property::Regions => "regions",
            Property::Cost => "cost",
            Property::Structure => "structure",
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Property {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Property::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| format!("unknown property `{s}`"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Outcome {
    Pass,
    Fail,
    Inconclusive,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Inconclusive => "INCONCLUSIVE",
        })
    }
}

/// Why one case did not pass.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub outcome: Outcome,
    /// The sub-check that failed, such as `cps commutation`.
    pub check: String,
    pub detail: String,
}

impl Finding {
    fn fail(check: &str, detail: impl Into<String>) -> Finding {
        Finding { outcome: Outcome::Fail, check: check.to_string(), detail: detail.into() }
    }

    fn inconclusive(check: &str, detail: impl Into<String>) -> Finding {
        Finding { outcome: Outcome::Inconclusive, check: check.to_string(), detail: detail.into() }
    }
}

/// A generated term together with its context and type.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Case {
    pub index: u64,
    pub ctx: TypeCtx,
    pub ty: Type,
    pub term: Term,
}

/// The context every generated case is typed under.
pub fn default_ctx() -> TypeCtx {
    TypeCtx::from_pairs(vec![(Name::new("x"), Type::var("t")), (Name::new("y"), Type::var("u")), (Name::new("z"), Type::var("t"))])
}

/// The `index`-th case of the corpus for `cfg`; independent of every other index.
pub fn gen_case(cfg: &GenConfig, index: u64) -> Result<Case, GenError> {
    let ctx = default_ctx();
    let mut g = Generator::for_stream(cfg.clone(), index);
    let ty = g.random_type(2);
    let term = g.term(&ty, &ctx)?;
    Ok(Case { index, ctx, ty, term })
}

pub type Check = Result<(), Finding>;

fn expect(check: &str, ok: bool, detail: impl FnOnce() -> String) -> Check {
    if ok {
        Ok(())
    } else {
        Err(Finding::fail(check, detail()))
    }
}

pub fn check_property(p: Property, ctx: &TypeCtx, m: &Term, fuel: Fuel) -> Check {
    match p {
        Property::Commutation => check_commutation(m),
        Property::Simulation => check_simulation(m, fuel),
        Property::Types => check_types(ctx, m, fuel),
        Property::Regions => check_regions(ctx, m, fuel),
        Property::Cost => check_cost(m, fuel),
        Property::Structure => check_structure(m),
    }
}

fn labelled(m: &Term) -> Result<Term, Finding> {
    let lm = label_init(m).map_err(|e| Finding::fail("labelling", e.to_string()))?;
    expect("labelling erasure", lm.erase().alpha_eq(m), || format!("erase(L(M)) = {}", lm.erase()))?;
    expect("labelling class", well_labelled(&lm).is_w0(), || format!("L(M) = {lm} is not in W0"))?;
    Ok(lm)
}

/// Erasure commutes with every stage of the chain on `L(m)`.
pub fn check_commutation(m: &Term) -> Check {
    let lm = labelled(m)?;
    let c = cps(&lm);
    expect("cps commutation", c.erase().alpha_eq(&cps(&lm.erase())), || format!("erase(cps(M)) = {}\ncps(erase(M)) = {}", c.erase(), cps(&lm.erase())))?;
    let v = to_value_named(&c);
    expect("readback", readback(&v).alpha_eq(&c), || format!("readback(vn(M)) = {}", readback(&v)))?;
    expect("vn commutation", v.erase().alpha_eq(&to_value_named(&c.erase())), || format!("erase(vn(M)) = {}", v.erase()))?;
    let cc = closure_convert(&v, CcOptions::default());
    let cc_e = closure_convert(&v.erase(), CcOptions::default());
    expect("cc commutation", cc.erase().alpha_eq(&cc_e), || format!("erase(cc(M)) = {}\ncc(erase(M)) = {cc_e}", cc.erase()))?;
    let h = hoist(&cc).map_err(|e| Finding::fail("hoist", e.to_string()))?;
    let h_e = hoist(&cc.erase()).map_err(|e| Finding::fail("hoist", e.to_string()))?;
    expect("hoist commutation", h.program.erase().alpha_eq(&h_e.program), || format!("erase(hoist(M)) = {}\nhoist(erase(M)) = {}", h.program.erase(), h_e.program))?;
    let whole = compile(&lm).map_err(|e| Finding::fail("compile", e.to_string()))?;
    let plain = compile(m).map_err(|e| Finding::fail("compile", e.to_string()))?;
    expect("compile commutation", whole.program.erase().alpha_eq(&plain.program), || {
        format!("erase(compile(L(M))) = {}\ncompile(M) = {}", whole.program.erase(), plain.program)
    })
}

/// Bound on the silent steps a simulating term may take per simulated step.
const WEAK_BOUND: usize = 400;

/// Steps of `t` with the term before each step; `None` when fuel runs out.
fn steps_of<T: Lang>(t: &T, fuel: Fuel) -> Option<Vec<(T, Option<Name>, T)>> {
    let mut supply = t.supply_for();
    let mut cur = t.clone();
    let mut out = Vec::new();
    loop {
        if out.len() >= fuel.0 {
            return None;
        }
        match cur.step_with(&mut supply) {
            StepResult::Stepped { label, next } => {
                out.push((cur, label, next.clone()));
                cur = next;
            }
            StepResult::Stuck(_) => return Some(out),
        }
    }
}

/// Inverts untyped closure conversion on terms of its image, including states reached by running
/// them: code/environment/pair triples become functions, pair openings become calls.
pub fn closure_unconvert(t: &VnTerm) -> VnTerm {
    let mut names = Vec::new();
    t.collect_names(&mut names);
    let mut supply = NameSupply::above(VAR_PREFIX, names.iter());
    uncc(t, &mut supply)
}

fn uncc(t: &VnTerm, supply: &mut NameSupply) -> VnTerm {
    if let Some(r) = uncc_function(t, supply).or_else(|| uncc_call(t)) {
        return r;
    }
    match t {
        VnTerm::App(..) => t.clone(),
        VnTerm::Let(x, Bindable::Value(VnValue::Lam(ps, body)), rest) => VnTerm::Let(
            x.clone(),
            Bindable::Value(VnValue::Lam(ps.clone(), Box::new(uncc(body, supply)))),
            Box::new(uncc(rest, supply)),
        ),
        VnTerm::Let(x, b, rest) => VnTerm::Let(x.clone(), b.clone(), Box::new(uncc(rest, supply))),
        VnTerm::Pre(l, rest) => VnTerm::Pre(l.clone(), Box::new(uncc(rest, supply))),
    }
}

/// `let c = λe ys. (let z1 = proj 1 e in … T) in let e' = (w1..wk) in let x = (c, e') in M`
fn uncc_function(t: &VnTerm, supply: &mut NameSupply) -> Option<VnTerm> {
    let VnTerm::Let(c, Bindable::Value(VnValue::Lam(ps, body)), r1) = t else { return None };
    let VnTerm::Let(env, Bindable::Value(VnValue::Tuple(ws)), r2) = &**r1 else { return None };
    let VnTerm::Let(x, Bindable::Value(VnValue::Tuple(pair)), rest) = &**r2 else { return None };
    if pair.as_slice() != [c.clone(), env.clone()] || ps.is_empty() {
        return None;
    }
    let e = &ps[0].name;
    let mut cur = &**body;
    let mut map = Renaming::new();
    for (i, w) in ws.iter().enumerate() {
        match cur {
            VnTerm::Let(z, Bindable::Proj(j, y), next) if y == e && *j == i + 1 => {
                map.insert(z.clone(), w.clone());
                cur = next;
            }
            _ => return None,
        }
    }
    if rest.free_vars().contains(c) || rest.free_vars().contains(env) {
        return None;
    }
    let inner = uncc(cur, supply).rename_with(&map, supply, true);
    Some(VnTerm::Let(
        x.clone(),
        Bindable::Value(VnValue::Lam(ps[1..].to_vec(), Box::new(inner))),
        Box::new(uncc(rest, supply)),
    ))
}

/// `let c = proj 1 x in let e = proj 2 x in @(c, e, ys)`
fn uncc_call(t: &VnTerm) -> Option<VnTerm> {
    let VnTerm::Let(c, Bindable::Proj(1, x), r1) = t else { return None };
    let VnTerm::Let(e, Bindable::Proj(2, x2), r2) = &**r1 else { return None };
    let VnTerm::App(f, args) = &**r2 else { return None };
    if x != x2 || f != c || args.first() != Some(e) || args[1..].contains(c) || args[1..].contains(e) || c == x || e == x {
        return None;
    }
    Some(VnTerm::App(x.clone(), args[1..].to_vec()))
}

/// Lock-step and weak-step simulation between consecutive stages, and end-to-end trace equality.
pub fn check_simulation(m: &Term, fuel: Fuel) -> Check {
    let lm = labelled(m)?;
    check_cps_simulation(&lm, fuel)?;
    check_vn_simulation(&lm, fuel)?;
    check_cc_simulation(&lm, fuel)?;
    check_trace_equality(&lm, fuel)
}

/// Every source step `M -a-> N` of `lm` is matched by `cps(M) =a=> cps(N)`.
pub fn check_cps_simulation(lm: &Term, fuel: Fuel) -> Check {
    cps_simulation(lm, fuel, false)
}

/// As [`check_cps_simulation`], but terms are compared after contracting every administrative
/// redex `@(λx. N, V)` (a one-parameter abstraction is always a continuation).
pub fn check_cps_simulation_up_to_admin(lm: &Term, fuel: Fuel) -> Check {
    cps_simulation(lm, fuel, true)
}

fn cps_simulation(lm: &Term, fuel: Fuel, up_to_admin: bool) -> Check {
    let src_steps = steps_of(lm, fuel).ok_or_else(|| Finding::inconclusive("source run", "fuel exhausted"))?;
    for (i, (before, label, after)) in src_steps.iter().enumerate() {
        let target = cps(after);
        let ok = if up_to_admin {
            let nf = admin_normal(&target);
            weak_reaches(&cps(before), label.as_ref(), WEAK_BOUND, |t| admin_normal(t).alpha_eq(&nf))
        } else {
            weak_reaches(&cps(before), label.as_ref(), WEAK_BOUND, |t| t.alpha_eq(&target))
        };
        expect("cps simulation", ok, || format!("source step {i} ({}): {before} -> {after}\ncps target: {target}", show(label)))?;
    }
    Ok(())
}

/// Contracts one-parameter redexes everywhere, innermost first.
pub fn admin_normal(t: &CpsTerm) -> CpsTerm {
    match t {
        CpsTerm::App(f, args) => {
            let f = admin_normal_value(f);
            let args: Vec<CpsValue> = args.iter().map(admin_normal_value).collect();
            match f {
                CpsValue::Lam(ps, body) if ps.len() == 1 && args.len() == 1 => {
                    let map: CpsSubst = [(ps[0].name.clone(), args[0].clone())].into_iter().collect();
                    admin_normal(&body.subst(&map))
                }
                f => CpsTerm::App(f, args),
            }
        }
        CpsTerm::LetProj(x, i, v, rest) => CpsTerm::LetProj(x.clone(), *i, admin_normal_value(v), Box::new(admin_normal(rest))),
        CpsTerm::Pre(l, rest) => CpsTerm::Pre(l.clone(), Box::new(admin_normal(rest))),
    }
}

fn admin_normal_value(v: &CpsValue) -> CpsValue {
    match v {
        CpsValue::Var(_) => v.clone(),
        CpsValue::Lam(ps, b) => CpsValue::Lam(ps.clone(), Box::new(admin_normal(b))),
        CpsValue::Tuple(vs) => CpsValue::Tuple(vs.iter().map(admin_normal_value).collect()),
    }
}

/// The value-named form of `cps(lm)` takes one step for each step of its readback.
pub fn check_vn_simulation(lm: &Term, fuel: Fuel) -> Check {
    let n0 = to_value_named(&cps(lm));
    let m0 = readback(&n0);
    let cps_steps = steps_of(&m0, fuel).ok_or_else(|| Finding::inconclusive("cps run", "fuel exhausted"))?;
    let mut n = n0;
    let mut n_supply = n.supply_for();
    for (i, (_, label, after)) in cps_steps.iter().enumerate() {
        match n.step_with(&mut n_supply) {
            StepResult::Stepped { label: l2, next } => {
                expect("vn simulation", l2 == *label, || format!("cps step {i} emits {} but vn emits {}", show(label), show(&l2)))?;
                expect("vn simulation", readback(&next).alpha_eq(after), || format!("cps step {i}: readback {} vs {after}", readback(&next)))?;
                n = next;
            }
            StepResult::Stuck(_) => return Err(Finding::fail("vn simulation", format!("vn term stuck at cps step {i}: {n}"))),
        }
    }
    match n.step_with(&mut n_supply) {
        StepResult::Stepped { .. } => Err(Finding::fail("vn simulation", format!("vn term steps past the end of the cps run: {n}"))),
        StepResult::Stuck(_) => Ok(()),
    }
}

/// Every value-named step `N -a-> N'` is matched by `cc(N) =a=> cc(N')`.
pub fn check_cc_simulation(lm: &Term, fuel: Fuel) -> Check {
    cc_simulation(lm, fuel, false)
}

/// As [`check_cc_simulation`], but a reached term also matches when it closure-unconverts to `N'`.
/// This accepts closures whose environment still lists two variables that the step merged.
pub fn check_cc_simulation_up_to_env(lm: &Term, fuel: Fuel) -> Check {
    cc_simulation(lm, fuel, true)
}

fn cc_simulation(lm: &Term, fuel: Fuel, up_to_env: bool) -> Check {
    let n0 = to_value_named(&cps(lm));
    let vn_steps = steps_of(&n0, fuel).ok_or_else(|| Finding::inconclusive("vn run", "fuel exhausted"))?;
    for (i, (before, label, after)) in vn_steps.iter().enumerate() {
        let target = closure_convert(after, CcOptions::default());
        let ok = weak_reaches(&closure_convert(before, CcOptions::default()), label.as_ref(), WEAK_BOUND, |t| {
            t.alpha_eq(&target) || (up_to_env && closure_unconvert(t).alpha_eq(after))
        });
        expect("cc simulation", ok, || format!("vn step {i} ({}): {before} -> {after}\ncc target: {target}", show(label)))?;
    }
    Ok(())
}

/// `lm` under the source semantics and `compile(lm)` under the value-named semantics emit the
/// same labels and both reach an answer.
pub fn check_trace_equality(lm: &Term, fuel: Fuel) -> Check {
    let src_run = run(lm, fuel);
    let compiled = compile(lm).map_err(|e| Finding::fail("compile", e.to_string()))?;
    let cmp_run = run(&compiled.program.to_term(), fuel);
    if src_run.status == Status::Fuel || cmp_run.status == Status::Fuel {
        return Err(Finding::inconclusive("trace equality", "fuel exhausted"));
    }
    expect("trace equality", src_run.labels() == cmp_run.labels(), || {
        format!("source trace {:?}\ncompiled trace {:?}", names(&src_run.labels()), names(&cmp_run.labels()))
    })?;
    expect("trace equality", src_run.status == Status::Value && cmp_run.status == Status::Value, || {
        format!("source ends {} and compiled ends {}", src_run.status, cmp_run.status)
    })
}

fn show(l: &Option<Name>) -> String {
    l.as_ref().map_or("silent".to_string(), |l| l.to_string())
}

fn names(ls: &[Name]) -> Vec<String> {
    ls.iter().map(|l| l.to_string()).collect()
}

/// Every stage judgement in both halt configurations, and subject reduction in every stage.
pub fn check_types(ctx: &TypeCtx, m: &Term, fuel: Fuel) -> Check {
    let sr = |stage: &str, r: Result<crate::typing::SubjectReductionReport, crate::typing::TypeError>| -> Check {
        match r {
            Err(e) => Err(Finding::fail(stage, e.to_string())),
            Ok(rep) => match rep.violation {
                Some((i, why)) => Err(Finding::fail(stage, format!("after step {i}: {why}"))),
                None => Ok(()),
            },
        }
    };
    sr("source subject reduction", check_subject_reduction(ctx, m, fuel.0))?;
    for opt_halt in [false, true] {
        let config = if opt_halt { "optimised halt" } else { "existential halt" };
        let rep = check_type_preservation(ctx, m, opt_halt).map_err(|e| Finding::fail("source typing", e.to_string()))?;
        if let Some(f) = rep.first_failure() {
            return Err(Finding::fail(&format!("{} judgement ({config})", f.stage), format!("{}\n{}", f.error.clone().unwrap_or_default(), f.term)));
        }
        let out = compile_with(m, CompileOptions { typed: true, opt_halt }, Some(ctx)).map_err(|e| Finding::fail("typed compile", e.to_string()))?;
        let cps_ctx = out.cps_ctx().expect("typed");
        let cc_ctx = out.cc_ctx().expect("typed");
        sr(&format!("cps subject reduction ({config})"), check_subject_reduction(&cps_ctx, &out.cps, fuel.0))?;
        sr(&format!("vn subject reduction ({config})"), check_subject_reduction(&cps_ctx, &out.vn, fuel.0))?;
        sr(&format!("cc subject reduction ({config})"), check_subject_reduction(&cc_ctx, &out.cc, fuel.0))?;
        sr(&format!("hoist subject reduction ({config})"), check_subject_reduction(&cc_ctx, &out.program.to_term(), fuel.0))?;
    }
    Ok(())
}

/// `ren(compile(L(m)))` effect-checks, runs safely in lock-step with its erasure, and erases back.
pub fn check_regions(ctx: &TypeCtx, m: &Term, fuel: Fuel) -> Check {
    let lm = labelled(m)?;
    let out = compile_with(&lm, CompileOptions { typed: true, opt_halt: true }, Some(ctx)).map_err(|e| Finding::fail("typed compile", e.to_string()))?;
    let rp = region_enrich(&out.program).map_err(|e| Finding::fail("enrichment", e.to_string()))?;
    expect("erasure of enrichment", region_erase(&rp).alpha_eq(&out.program), || format!("{}\nvs {}", region_erase(&rp), out.program))?;
    let rctx = region_enrich_ctx(&out.cc_ctx().expect("typed")).map_err(|e| Finding::fail("enrichment", e.to_string()))?;
    effect_check(&rctx, &rp).map_err(|e| Finding::fail("effect check", format!("{e}\n{rp}")))?;
    let rep = check_region_progress_and_sr(&rp, &rctx, fuel);
    if let Some(v) = rep.violations.first() {
        return Err(Finding::fail("region run", format!("{v:?}\n{rp}")));
    }
    match rep.status {
        Some(RegionStatus::Value) => {}
        Some(RegionStatus::Fuel) => return Err(Finding::inconclusive("region run", "fuel exhausted")),
        other => return Err(Finding::fail("region run", format!("ended with {other:?}\n{rp}"))),
    }
    let plain = run(&out.program.to_term(), fuel);
    expect("region trace", rep.labels() == plain.labels(), || {
        format!("enriched trace {:?}\nplain trace {:?}", names(&rep.labels()), names(&plain.labels()))
    })
}

/// The three cost computations agree and the emitted code is soundly and precisely labelled.
pub fn check_cost(m: &Term, fuel: Fuel) -> Check {
    let rep = certify_cost::<Cost>(m, fuel);
    match rep.verdict {
        Verdict::Agree => {}
        Verdict::Inconclusive => return Err(Finding::inconclusive("certify", rep.note.unwrap_or_default())),
        Verdict::Disagree => {
            return Err(Finding::fail(
                "certify",
                format!(
                    "instrumented {:?}, source {:?}, compiled {:?}; {}",
                    rep.instrumented_cost,
                    rep.source_cost,
                    rep.compiled_cost,
                    rep.note.unwrap_or_default()
                ),
            ))
        }
    }
    let lm = labelled(m)?;
    let out = compile(&lm).map_err(|e| Finding::fail("compile", e.to_string()))?;
    let rtl = emit_rtl(&out.program).map_err(|e| Finding::fail("rtl", e.to_string()))?;
    check_sound(&rtl).map_err(|e| Finding::fail("soundness", e.to_string()))?;
    check_precise(&rtl).map_err(|e| Finding::fail("precision", e.to_string()))
}

/// Hoisting normal forms, the decreasing measure, and the labelled program grammar.
pub fn check_structure(m: &Term) -> Check {
    let lm = labelled(m)?;
    let out = compile(&lm).map_err(|e| Finding::fail("compile", e.to_string()))?;
    for (i, s) in out.hoist_steps.iter().enumerate() {
        expect("hoist measure", s.measure_after < s.measure_before, || format!("step {i} ({:?}) does not decrease", s.rule))?;
    }
    let flat = out.program.to_term();
    for strategy in [HoistStrategy::LeftmostOutermost, HoistStrategy::RightmostInnermost] {
        expect("hoist normal form", hoist_step(&flat, strategy.clone()).is_none(), || format!("redex left in {}", out.program))?;
    }
    check_label_grammar(&out.program).map_err(|e| Finding::fail("label grammar", format!("{e}\n{}", out.program)))
}

/// Result of checking one case, with the shrunken counterexample when it did not pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CaseResult {
    pub index: u64,
    pub outcome: Outcome,
    pub term: String,
    pub size: usize,
    pub finding: Option<Finding>,
    pub shrunk: Option<String>,
}

/// Checks one case; a failure is shrunk to a smaller term failing the same sub-check.
pub fn run_case(p: Property, case: &Case, fuel: Fuel) -> CaseResult {
    let mut res = CaseResult { index: case.index, outcome: Outcome::Pass, term: case.term.to_string(), size: case.term.size(), finding: None, shrunk: None };
    if let Err(f) = check_property(p, &case.ctx, &case.term, fuel) {
        res.outcome = f.outcome;
        if f.outcome == Outcome::Fail {
            let still = |t: &Term| matches!(check_property(p, &case.ctx, t, fuel), Err(g) if g.outcome == Outcome::Fail && g.check == f.check);
            res.shrunk = Some(minimize(&case.term, &case.ctx, still, 200).to_string());
        }
        res.finding = Some(f);
    }
    res
}
