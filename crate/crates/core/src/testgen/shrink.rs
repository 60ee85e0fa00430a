//! Type-preserving shrinking of source terms.

use crate::name::Ident;
use crate::source::Term;
use crate::types::Type;
use crate::typing::{typecheck_source, TypeCtx};
use std::collections::HashMap;

fn children(t: &Term) -> Vec<&Term> {
    match t {
        Term::Var(_) => vec![],
        Term::Lam(_, b) | Term::Proj(_, b) | Term::Pre(_, b) | Term::Post(_, b) => vec![b],
        Term::App(f, a) => std::iter::once(&**f).chain(a.iter()).collect(),
        Term::Let(_, m, n) => vec![m, n],
        Term::Tuple(ts) => ts.iter().collect(),
    }
}

/// Names bound by `t` around its `i`-th child.
fn binders_at(t: &Term, i: usize) -> Vec<Ident> {
    match t {
        Term::Lam(ps, _) => ps.iter().map(|p| p.name.clone()).collect(),
        Term::Let(x, _, _) if i == 1 => vec![x.clone()],
        _ => vec![],
    }
}

fn replace_at(t: &Term, path: &[usize], new: Term) -> Term {
    let Some((&i, rest)) = path.split_first() else { return new };
    let go = |c: &Term| replace_at(c, rest, new.clone());
    match t {
        Term::Var(_) => t.clone(),
        Term::Lam(ps, b) => Term::Lam(ps.clone(), Box::new(go(b))),
        Term::Proj(k, b) => Term::Proj(*k, Box::new(go(b))),
        Term::Pre(l, b) => Term::Pre(l.clone(), Box::new(go(b))),
        Term::Post(l, b) => Term::Post(l.clone(), Box::new(go(b))),
        Term::App(f, a) => {
            if i == 0 {
                Term::App(Box::new(go(f)), a.clone())
            } else {
                let mut a2 = a.clone();
                a2[i - 1] = go(&a[i - 1]);
                Term::App(f.clone(), a2)
            }
        }
        Term::Let(x, m, n) => {
            if i == 0 {
                Term::Let(x.clone(), Box::new(go(m)), n.clone())
            } else {
                Term::Let(x.clone(), m.clone(), Box::new(go(n)))
            }
        }
        Term::Tuple(ts) => {
            let mut ts2 = ts.clone();
            ts2[i] = go(&ts[i]);
            Term::Tuple(ts2)
        }
    }
}

/// Every subterm with its path and the names in scope there (outermost first).
fn positions(t: &Term) -> Vec<(Vec<usize>, &Term, Vec<Ident>)> {
    fn walk<'a>(t: &'a Term, path: &mut Vec<usize>, scope: &mut Vec<Ident>, out: &mut Vec<(Vec<usize>, &'a Term, Vec<Ident>)>) {
        out.push((path.clone(), t, scope.clone()));
        for (i, c) in children(t).into_iter().enumerate() {
            let bs = binders_at(t, i);
            let n = scope.len();
            scope.extend(bs);
            path.push(i);
            walk(c, path, scope, out);
            path.pop();
            scope.truncate(n);
        }
    }
    let mut out = Vec::new();
    walk(t, &mut Vec::new(), &mut Vec::new(), &mut out);
    out
}

/// Decrements every projection index above `j` (used after dropping component `j`).
fn retarget(t: &Term, j: usize) -> Term {
    match t {
        Term::Var(_) => t.clone(),
        Term::Lam(ps, b) => Term::Lam(ps.clone(), Box::new(retarget(b, j))),
        Term::Proj(k, b) => Term::Proj(if *k > j { k - 1 } else { *k }, Box::new(retarget(b, j))),
        Term::Pre(l, b) => Term::Pre(l.clone(), Box::new(retarget(b, j))),
        Term::Post(l, b) => Term::Post(l.clone(), Box::new(retarget(b, j))),
        Term::App(f, a) => Term::App(Box::new(retarget(f, j)), a.iter().map(|x| retarget(x, j)).collect()),
        Term::Let(x, m, n) => Term::Let(x.clone(), Box::new(retarget(m, j)), Box::new(retarget(n, j))),
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|x| retarget(x, j)).collect()),
    }
}

/// Syntactic candidates, not yet checked.
fn raw_candidates(t: &Term, ctx: &TypeCtx) -> Vec<Term> {
    let globals: Vec<Ident> = ctx.visible().into_iter().map(|(x, _)| x).collect();
    let mut out = Vec::new();
    for (path, sub, scope) in positions(t) {
        match sub {
            Term::Let(x, m, n) => out.push(replace_at(t, &path, n.subst1(x, m))),
            Term::App(f, args) => {
                if let Term::Lam(ps, body) = &**f {
                    if ps.len() == args.len() {
                        let map: HashMap<Ident, Term> = ps.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
                        out.push(replace_at(t, &path, body.subst(&map)));
                    }
                }
            }
            Term::Tuple(ts) if !ts.is_empty() => {
                for j in 0..ts.len() {
                    let mut ts2 = ts.clone();
                    ts2.remove(j);
                    let dropped = replace_at(t, &path, Term::Tuple(ts2));
                    out.push(retarget(&dropped, j + 1));
                    out.push(dropped);
                }
            }
            _ => {}
        }
        if sub.size() > 1 {
            let mut seen = Vec::new();
            for x in scope.iter().rev().chain(globals.iter()) {
                if !seen.contains(x) {
                    seen.push(x.clone());
                    out.push(replace_at(t, &path, Term::Var(x.clone())));
                }
            }
        }
    }
    out
}

/// Smaller terms of the same type under `ctx`, lazily typechecked. Empty when `t` does not type.
pub fn shrink<'a>(t: &Term, ctx: &'a TypeCtx) -> impl Iterator<Item = Term> + 'a {
    let target: Option<Type> = typecheck_source(ctx, t).ok();
    let size = t.size();
    let cands = if target.is_some() { raw_candidates(t, ctx) } else { Vec::new() };
    cands.into_iter().filter(move |c| {
        c.size() < size && target.as_ref().is_some_and(|a| typecheck_source(ctx, c).is_ok_and(|b| b.alpha_eq(a)))
    })
}

/// Greedy shrinking: repeatedly moves to the first candidate that still satisfies `fails`.
pub fn minimize(t: &Term, ctx: &TypeCtx, mut fails: impl FnMut(&Term) -> bool, max_rounds: usize) -> Term {
    let mut cur = t.clone();
    for _ in 0..max_rounds {
        match shrink(&cur, ctx).find(|c| fails(c)) {
            Some(c) => cur = c,
            None => break,
        }
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ctx, parse_term};
    use crate::testgen::gen::{GenConfig, Generator};

    fn ctx(s: &str) -> TypeCtx {
        TypeCtx::from_pairs(parse_ctx(s).unwrap())
    }

    #[test]
    fn beta_candidate_is_offered() {
        let c = ctx("y: t");
        let m = parse_term("(\\(x: t). x) @ (y)").unwrap();
        assert!(shrink(&m, &c).any(|s| s == Term::var("y")));
    }

    #[test]
    fn variables_do_not_shrink() {
        let c = ctx("x: t");
        assert_eq!(shrink(&Term::var("x"), &c).count(), 0);
    }

    #[test]
    fn tuple_drop_retargets_projections() {
        let c = ctx("x: t, y: u");
        let m = parse_term("proj 2 (x, y)").unwrap();
        let out: Vec<Term> = shrink(&m, &c).collect();
        assert!(out.contains(&Term::Proj(1, Box::new(Term::Tuple(vec![Term::var("y")])))));
    }

    #[test]
    fn candidates_type_and_shrink() {
        let c = ctx("x: t, y: u, f: t -> t");
        for seed in 0..100 {
            let mut g = Generator::new(GenConfig { seed, ..GenConfig::default() });
            let target = g.random_type(2);
            let m = g.term(&target, &c).unwrap();
            for s in shrink(&m, &c) {
                assert!(s.size() < m.size());
                assert!(typecheck_source(&c, &s).unwrap().alpha_eq(&target));
            }
        }
    }

    #[test]
    fn minimize_reaches_a_local_minimum() {
        let c = ctx("x: t, y: u");
        let m = parse_term("let a = (x, y) in proj 1 ((\\(z: t). (z, y)) @ (proj 1 a))").unwrap();
        let small = minimize(&m, &c, |_| true, 100);
        assert_eq!(small, Term::var("x"));
    }
}
