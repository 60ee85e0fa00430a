use costlam_core::alpha::alpha_eq;
use costlam_core::cost::{certify_cost, CostMonoid, CostTable, Verdict};
use costlam_core::name::Name;
use costlam_core::regions::{
    check_region_progress_and_sr, coh, effect_check, region_enrich, region_enrich_ctx, region_erase, region_erase_ctx, HeapCtx,
    HeapEntry,
};
use costlam_core::semantics::{eval_trace, run, Fuel, Lang, Status, StepResult};
use costlam_core::source::{Param, Term};
use costlam_core::testgen::{
    check_commutation, check_structure, gen_case, shrink, Case, GenConfig, Generator,
};
use costlam_core::transform::{
    closure_convert, compile_with, cps, hoist_with, label_init, to_value_named, CcOptions, CompileOptions, HoistStrategy,
};
use costlam_core::types::Type;
use costlam_core::typing::{cc_type, compile_type, cps_type, typecheck_source, typecheck_vn};
use costlam_core::{BigCost, Cost};
use num_bigint::BigUint;
use proptest::prelude::*;
use std::collections::{BTreeSet, HashMap};

fn case(seed: u64) -> Case {
    gen_case(&GenConfig { seed, ..GenConfig::default() }, 0).expect("generation succeeds for the default context")
}

/// Renames every binder of `t` to a name never used in `t`, via substitution.
fn rename_bound(t: &Term, n: &mut usize) -> Term {
    let fresh = |n: &mut usize| {
        *n += 1;
        Name::new(&format!("renamed{n}"))
    };
    match t {
        Term::Var(_) => t.clone(),
        Term::Lam(ps, b) => {
            let mut map = HashMap::new();
            let ps2: Vec<Param> = ps
                .iter()
                .map(|p| {
                    let z = fresh(n);
                    map.insert(p.name.clone(), Term::Var(z.clone()));
                    Param { name: z, ty: p.ty.clone() }
                })
                .collect();
            Term::Lam(ps2, Box::new(rename_bound(&b.subst(&map), n)))
        }
        Term::Let(x, m, b) => {
            let z = fresh(n);
            let b2 = b.subst1(x, &Term::Var(z.clone()));
            Term::Let(z, Box::new(rename_bound(m, n)), Box::new(rename_bound(&b2, n)))
        }
        Term::App(f, a) => Term::App(Box::new(rename_bound(f, n)), a.iter().map(|x| rename_bound(x, n)).collect()),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|x| rename_bound(x, n)).collect()),
        Term::Proj(i, b) => Term::Proj(*i, Box::new(rename_bound(b, n))),
        Term::Pre(l, b) => Term::Pre(l.clone(), Box::new(rename_bound(b, n))),
        Term::Post(l, b) => Term::Post(l.clone(), Box::new(rename_bound(b, n))),
    }
}

fn arrows_end_in_r(t: &Type) -> bool {
    match t {
        Type::Var(_) | Type::Result => true,
        Type::Arrow(d, c) => **c == Type::Result && d.iter().all(arrows_end_in_r),
        Type::Product(ts) => ts.iter().all(arrows_end_in_r),
        Type::Exists(_, b) => arrows_end_in_r(b),
    }
}

fn heap_entry() -> impl Strategy<Value = HeapEntry> {
    let r = prop::sample::select(vec!["r1", "r2", "r3"]).prop_map(Name::new);
    prop_oneof![
        r.clone().prop_map(HeapEntry::NewRegion),
        r.clone().prop_map(HeapEntry::Disposed),
        r.prop_map(|r| HeapEntry::BindTupleAt(Name::new("x"), vec![Name::new("y")], r)),
        Just(HeapEntry::BindUnit(Name::new("u"))),
    ]
}

fn region_set() -> impl Strategy<Value = BTreeSet<Name>> {
    prop::collection::btree_set(prop::sample::select(vec!["r1", "r2", "r3", "r4"]).prop_map(Name::new), 0..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn alpha_eq_is_an_equivalence(seed in any::<u64>()) {
        let t = case(seed).term;
        let mut n = 0;
        let u = rename_bound(&t, &mut n);
        let v = rename_bound(&u, &mut n);
        prop_assert!(alpha_eq(&t, &t));
        prop_assert!(alpha_eq(&t, &u) && alpha_eq(&u, &t));
        prop_assert!(alpha_eq(&u, &v) && alpha_eq(&t, &v));
        let other = case(seed.wrapping_add(1)).term;
        prop_assert_eq!(alpha_eq(&t, &other), alpha_eq(&other, &t));
    }

    #[test]
    fn renaming_a_free_variable_breaks_alpha_eq(seed in any::<u64>()) {
        let t = case(seed).term;
        if let Some(x) = t.free_vars().into_iter().next() {
            let moved = t.subst1(&x, &Term::var("elsewhere"));
            prop_assert!(!alpha_eq(&t, &moved));
        }
    }

    #[test]
    fn empty_substitution_is_identity(seed in any::<u64>()) {
        let t = case(seed).term;
        prop_assert!(alpha_eq(&t.subst(&HashMap::new()), &t));
    }

    #[test]
    fn substitution_through_a_fresh_name(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let c = case(seed);
        let v = case(seed ^ 0x5555).term;
        let fv: Vec<Name> = c.term.free_vars().into_iter().collect();
        prop_assume!(!fv.is_empty());
        let x = fv[pick.index(fv.len())].clone();
        let z = Name::new("zfresh");
        let direct = c.term.subst1(&x, &v);
        let via = c.term.subst1(&x, &Term::Var(z.clone())).subst1(&z, &v);
        prop_assert!(alpha_eq(&direct, &via), "{} vs {}", direct, via);
        let mut bound: BTreeSet<Name> = c.term.free_vars();
        bound.remove(&x);
        bound.extend(v.free_vars());
        prop_assert!(direct.free_vars().is_subset(&bound));
    }

    #[test]
    fn values_never_step_and_closed_typed_terms_progress(seed in any::<u64>()) {
        let c = case(seed);
        let mut cur = label_init(&c.term).unwrap();
        for _ in 0..10_000 {
            match cur.step() {
                StepResult::Stepped { label, next } => {
                    prop_assert!(!cur.is_value());
                    prop_assert_eq!(cur.step(), StepResult::Stepped { label, next: next.clone() });
                    cur = next;
                }
                StepResult::Stuck(_) => {
                    prop_assert!(cur.is_value(), "stuck at {}", cur);
                    break;
                }
            }
        }
    }

    #[test]
    fn silent_steps_preserve_erasure(seed in any::<u64>()) {
        let lm = label_init(&case(seed).term).unwrap();
        let mut cur = lm;
        loop {
            match cur.step() {
                StepResult::Stepped { label, next } => {
                    if label.is_none() {
                        let (e1, e2) = (cur.erase(), next.erase());
                        let ok = alpha_eq(&e1, &e2) || matches!(e1.step(), StepResult::Stepped { next: n, .. } if alpha_eq(&n, &e2));
                        prop_assert!(ok, "{} -> {}", cur, next);
                    }
                    cur = next;
                }
                StepResult::Stuck(_) => break,
            }
        }
    }

    #[test]
    fn generated_terms_terminate(seed in any::<u64>()) {
        let c = case(seed);
        prop_assert!(eval_trace(&c.term, Fuel::default()).is_ok());
        prop_assert!(c.term.size() <= GenConfig::default().max_size);
    }

    #[test]
    fn chain_commutes_and_hoisting_is_structural(seed in any::<u64>()) {
        let t = case(seed).term;
        prop_assert_eq!(check_commutation(&t), Ok(()));
        prop_assert_eq!(check_structure(&t), Ok(()));
    }

    #[test]
    fn hoisting_orders_agree(seed in any::<u64>()) {
        let vn = to_value_named(&cps(&label_init(&case(seed).term).unwrap()));
        let cc = closure_convert(&vn, CcOptions::default());
        let a = hoist_with(&cc, HoistStrategy::LeftmostOutermost).unwrap();
        let b = hoist_with(&cc, HoistStrategy::RightmostInnermost).unwrap();
        prop_assert!(alpha_eq(&a.program, &b.program));
        prop_assert!(a.steps.iter().chain(&b.steps).all(|s| s.measure_after < s.measure_before));
    }

    #[test]
    fn weakening(seed in any::<u64>()) {
        let c = case(seed);
        let wide = c.ctx.clone().with(Name::new("unused"), Type::var("u"));
        prop_assert_eq!(typecheck_source(&wide, &c.term).ok(), typecheck_source(&c.ctx, &c.term).ok());
    }

    #[test]
    fn type_translations(seed in any::<u64>()) {
        let mut g = Generator::new(GenConfig { seed, ..GenConfig::default() });
        let a = g.random_type(3);
        let v = Type::var("t");
        prop_assert_eq!(cps_type(&v), v.clone());
        prop_assert_eq!(cc_type(&v), v);
        prop_assert!(arrows_end_in_r(&compile_type(&a)), "{}", compile_type(&a));
        prop_assert!(arrows_end_in_r(&cps_type(&a)));
    }

    #[test]
    fn certification_agrees(seed in any::<u64>()) {
        let t = case(seed).term;
        let small = certify_cost::<Cost>(&t, Fuel::default());
        prop_assert_eq!(small.verdict, Verdict::Agree, "{:?}", small.note);
        prop_assert_eq!(small.value_agrees, Some(true));
        let big = certify_cost::<BigCost>(&t, Fuel::default());
        prop_assert_eq!(big.instrumented_cost, small.instrumented_cost.map(BigUint::from));
    }

    #[test]
    fn region_enrichment_round_trips_and_erases_to_a_typed_program(seed in any::<u64>()) {
        let c = case(seed);
        let lm = label_init(&c.term).unwrap();
        let out = compile_with(&lm, CompileOptions { typed: true, opt_halt: true }, Some(&c.ctx)).unwrap();
        let rp = region_enrich(&out.program).unwrap();
        let rctx = region_enrich_ctx(&out.cc_ctx().unwrap()).unwrap();
        prop_assert!(alpha_eq(&region_erase(&rp), &out.program));
        prop_assert!(effect_check(&rctx, &rp).is_ok());
        prop_assert!(typecheck_vn(&region_erase_ctx(&rctx), &region_erase(&rp).to_term()).is_ok());
        let rep = check_region_progress_and_sr(&rp, &rctx, Fuel::default());
        prop_assert!(rep.is_clean(), "{:?}", rep.violations);
        prop_assert_eq!(rep.labels(), run(&out.program.to_term(), Fuel::default()).labels());
    }

    #[test]
    fn shrinking_strictly_decreases(seed in any::<u64>()) {
        let c = case(seed);
        for s in shrink(&c.term, &c.ctx) {
            prop_assert!(s.size() < c.term.size());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn coh_is_monotone(h in prop::collection::vec(heap_entry(), 0..8), l in region_set(), extra in region_set()) {
        let h = HeapCtx(h);
        let wider: BTreeSet<Name> = l.union(&extra).cloned().collect();
        if coh(&h, &l) {
            prop_assert!(coh(&h, &wider));
        }
    }

    #[test]
    fn monoid_laws(a in 0..u64::MAX / 4, b in 0..u64::MAX / 4, c in 0..u64::MAX / 4) {
        let z = <Cost as CostMonoid>::zero();
        prop_assert_eq!(a.plus(&z), a);
        prop_assert_eq!(z.plus(&a), a);
        prop_assert_eq!(a.plus(&b).plus(&c), a.plus(&b.plus(&c)));
        prop_assert_eq!(a.plus(&b), b.plus(&a));
        let (x, y, w) = (BigUint::from(a) * BigUint::from(b), BigUint::from(c), BigUint::from(a));
        prop_assert_eq!(x.plus(&BigCost::zero()), x.clone());
        prop_assert_eq!(x.plus(&y).plus(&w), x.plus(&y.plus(&w)));
        prop_assert_eq!(x.plus(&y), y.plus(&x));
    }

    #[test]
    fn trace_cost_is_additive(costs in prop::collection::vec(0..1_000_000u64, 1..6), t1 in prop::collection::vec(any::<prop::sample::Index>(), 0..20), t2 in prop::collection::vec(any::<prop::sample::Index>(), 0..20)) {
        let mut table: CostTable<Cost> = CostTable::new();
        let labels: Vec<Name> = (0..costs.len()).map(|i| Name::new(&format!("l{i}"))).collect();
        for (l, c) in labels.iter().zip(&costs) {
            table.insert(l.clone(), *c);
        }
        let pick = |t: &[prop::sample::Index]| t.iter().map(|i| labels[i.index(labels.len())].clone()).collect::<Vec<_>>();
        let (a, b) = (pick(&t1), pick(&t2));
        let joined: Vec<Name> = a.iter().chain(&b).cloned().collect();
        prop_assert_eq!(table.costof(&joined).unwrap(), table.costof(&a).unwrap().plus(&table.costof(&b).unwrap()));
        let by_hand: u64 = joined.iter().map(|l| costs[labels.iter().position(|m| m == l).unwrap()]).sum();
        prop_assert_eq!(table.costof(&joined).unwrap(), by_hand);
    }
}

#[test]
fn generation_is_reproducible() {
    for seed in 0..20 {
        assert_eq!(case(seed).term, case(seed).term);
    }
    let statuses: Vec<Status> = (0..50).map(|s| run(&case(s).term, Fuel::default()).status).collect();
    assert!(statuses.iter().all(|s| *s == Status::Value));
}
