use super::monoid::{CostMonoid, CostTable, MissingCost};
use crate::name::{Ident, Name, NameSupply, VAR_PREFIX};
use crate::source::Term;
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;

/// A label-free λ-term over a cost monoid; instrumented terms compute `(cost, value)` pairs.
#[derive(Clone, PartialEq, Eq)]
pub enum ITerm<M> {
    Var(Ident),
    Lam(Vec<Ident>, Box<ITerm<M>>),
    App(Box<ITerm<M>>, Vec<ITerm<M>>),
    Let(Ident, Box<ITerm<M>>, Box<ITerm<M>>),
    Tuple(Vec<ITerm<M>>),
    Proj(usize, Box<ITerm<M>>),
    Lit(M),
    Plus(Box<ITerm<M>>, Box<ITerm<M>>),
}

impl<M: CostMonoid> ITerm<M> {
    pub fn is_value(&self) -> bool {
        match self {
            ITerm::Var(_) | ITerm::Lam(..) | ITerm::Lit(_) => true,
            ITerm::Tuple(ts) => ts.iter().all(ITerm::is_value),
            _ => false,
        }
    }

    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut BTreeSet<Ident>) {
        match self {
            ITerm::Var(x) => {
                if !bound.contains(x) {
                    out.insert(x.clone());
                }
            }
            ITerm::Lam(ps, b) => {
                let n = bound.len();
                bound.extend(ps.iter().cloned());
                b.fv_into(bound, out);
                bound.truncate(n);
            }
            ITerm::App(f, a) => {
                f.fv_into(bound, out);
                a.iter().for_each(|t| t.fv_into(bound, out));
            }
            ITerm::Let(x, m, n) => {
                m.fv_into(bound, out);
                bound.push(x.clone());
                n.fv_into(bound, out);
                bound.pop();
            }
            ITerm::Tuple(ts) => ts.iter().for_each(|t| t.fv_into(bound, out)),
            ITerm::Proj(_, t) => t.fv_into(bound, out),
            ITerm::Lit(_) => {}
            ITerm::Plus(a, b) => {
                a.fv_into(bound, out);
                b.fv_into(bound, out);
            }
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out
    }

    fn names_into(&self, out: &mut Vec<Name>) {
        match self {
            ITerm::Var(x) => out.push(x.clone()),
            ITerm::Lam(ps, b) => {
                out.extend(ps.iter().cloned());
                b.names_into(out);
            }
            ITerm::App(f, a) => {
                f.names_into(out);
                a.iter().for_each(|t| t.names_into(out));
            }
            ITerm::Let(x, m, n) => {
                out.push(x.clone());
                m.names_into(out);
                n.names_into(out);
            }
            ITerm::Tuple(ts) => ts.iter().for_each(|t| t.names_into(out)),
            ITerm::Proj(_, t) => t.names_into(out),
            ITerm::Lit(_) => {}
            ITerm::Plus(a, b) => {
                a.names_into(out);
                b.names_into(out);
            }
        }
    }

    fn subst_with(&self, map: &HashMap<Ident, ITerm<M>>, supply: &mut NameSupply) -> ITerm<M> {
        if map.is_empty() {
            return self.clone();
        }
        let range_fv = |inner: &HashMap<Ident, ITerm<M>>, body: &ITerm<M>| {
            let fv = body.free_vars();
            let mut out = BTreeSet::new();
            for (k, v) in inner {
                if fv.contains(k) {
                    out.extend(v.free_vars());
                }
            }
            out
        };
        match self {
            ITerm::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            ITerm::Lam(ps, b) => {
                let mut inner = map.clone();
                for p in ps {
                    inner.remove(p);
                }
                let avoid = range_fv(&inner, b);
                let params = ps
                    .iter()
                    .map(|p| {
                        if avoid.contains(p) {
                            let z = supply.fresh();
                            inner.insert(p.clone(), ITerm::Var(z.clone()));
                            z
                        } else {
                            p.clone()
                        }
                    })
                    .collect();
                ITerm::Lam(params, Box::new(b.subst_with(&inner, supply)))
            }
            ITerm::App(f, a) => ITerm::App(Box::new(f.subst_with(map, supply)), a.iter().map(|t| t.subst_with(map, supply)).collect()),
            ITerm::Let(x, m, n) => {
                let m2 = m.subst_with(map, supply);
                let mut inner = map.clone();
                inner.remove(x);
                let x2 = if range_fv(&inner, n).contains(x) {
                    let z = supply.fresh();
                    inner.insert(x.clone(), ITerm::Var(z.clone()));
                    z
                } else {
                    x.clone()
                };
                ITerm::Let(x2, Box::new(m2), Box::new(n.subst_with(&inner, supply)))
            }
            ITerm::Tuple(ts) => ITerm::Tuple(ts.iter().map(|t| t.subst_with(map, supply)).collect()),
            ITerm::Proj(i, t) => ITerm::Proj(*i, Box::new(t.subst_with(map, supply))),
            ITerm::Lit(_) => self.clone(),
            ITerm::Plus(a, b) => ITerm::Plus(Box::new(a.subst_with(map, supply)), Box::new(b.subst_with(map, supply))),
        }
    }

    /// One call-by-value step, or `None` when no rule applies.
    fn step(&self, supply: &mut NameSupply) -> Option<ITerm<M>> {
        match self {
            ITerm::App(f, args) => {
                if !f.is_value() {
                    return Some(ITerm::App(Box::new(f.step(supply)?), args.clone()));
                }
                if let Some(i) = args.iter().position(|a| !a.is_value()) {
                    let mut a2 = args.clone();
                    a2[i] = args[i].step(supply)?;
                    return Some(ITerm::App(f.clone(), a2));
                }
                match &**f {
                    ITerm::Lam(ps, body) if ps.len() == args.len() => {
                        let map = ps.iter().cloned().zip(args.iter().cloned()).collect();
                        Some(body.subst_with(&map, supply))
                    }
                    _ => None,
                }
            }
            ITerm::Let(x, m, n) => {
                if m.is_value() {
                    let map = [(x.clone(), (**m).clone())].into_iter().collect();
                    Some(n.subst_with(&map, supply))
                } else {
                    Some(ITerm::Let(x.clone(), Box::new(m.step(supply)?), n.clone()))
                }
            }
            ITerm::Tuple(ts) => {
                let i = ts.iter().position(|t| !t.is_value())?;
                let mut t2 = ts.clone();
                t2[i] = ts[i].step(supply)?;
                Some(ITerm::Tuple(t2))
            }
            ITerm::Proj(i, t) => {
                if !t.is_value() {
                    return Some(ITerm::Proj(*i, Box::new(t.step(supply)?)));
                }
                match &**t {
                    ITerm::Tuple(vs) if *i >= 1 && *i <= vs.len() => Some(vs[*i - 1].clone()),
                    _ => None,
                }
            }
            ITerm::Plus(a, b) => {
                if !a.is_value() {
                    return Some(ITerm::Plus(Box::new(a.step(supply)?), b.clone()));
                }
                if !b.is_value() {
                    return Some(ITerm::Plus(a.clone(), Box::new(b.step(supply)?)));
                }
                match (&**a, &**b) {
                    (ITerm::Lit(x), ITerm::Lit(y)) => Some(ITerm::Lit(x.plus(y))),
                    _ => None,
                }
            }
            ITerm::Var(_) | ITerm::Lam(..) | ITerm::Lit(_) => None,
        }
    }

    fn level(&self) -> u8 {
        match self {
            ITerm::Var(_) | ITerm::Tuple(_) | ITerm::Lit(_) => 3,
            ITerm::App(..) | ITerm::Proj(..) => 2,
            ITerm::Plus(..) => 1,
            _ => 0,
        }
    }
}

/// α-equivalence of instrumented terms.
pub fn ialpha_eq<M: CostMonoid>(a: &ITerm<M>, b: &ITerm<M>) -> bool {
    fn go<M: CostMonoid>(a: &ITerm<M>, b: &ITerm<M>, env: &mut Vec<(Ident, Ident)>) -> bool {
        match (a, b) {
            (ITerm::Var(x), ITerm::Var(y)) => match env.iter().rev().find(|(p, q)| p == x || q == y) {
                Some((p, q)) => p == x && q == y,
                None => x == y,
            },
            (ITerm::Lam(ps, m), ITerm::Lam(qs, n)) if ps.len() == qs.len() => {
                let k = env.len();
                env.extend(ps.iter().cloned().zip(qs.iter().cloned()));
                let r = go(m, n, env);
                env.truncate(k);
                r
            }
            (ITerm::App(f, xs), ITerm::App(g, ys)) => {
                xs.len() == ys.len() && go(f, g, env) && xs.iter().zip(ys).all(|(x, y)| go(x, y, env))
            }
            (ITerm::Let(x, m1, n1), ITerm::Let(y, m2, n2)) => {
                if !go(m1, m2, env) {
                    return false;
                }
                env.push((x.clone(), y.clone()));
                let r = go(n1, n2, env);
                env.pop();
                r
            }
            (ITerm::Tuple(xs), ITerm::Tuple(ys)) => xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, env)),
            (ITerm::Proj(i, x), ITerm::Proj(j, y)) => i == j && go(x, y, env),
            (ITerm::Lit(x), ITerm::Lit(y)) => x == y,
            (ITerm::Plus(a1, b1), ITerm::Plus(a2, b2)) => go(a1, a2, env) && go(b1, b2, env),
            _ => false,
        }
    }
    go(a, b, &mut Vec::new())
}

struct Instrumenter<'a, M> {
    table: &'a CostTable<M>,
    supply: NameSupply,
}

impl<M: CostMonoid> Instrumenter<'_, M> {
    fn psi(&mut self, v: &Term) -> Result<ITerm<M>, MissingCost> {
        Ok(match v {
            Term::Var(x) => ITerm::Var(x.clone()),
            Term::Lam(ps, b) => ITerm::Lam(ps.iter().map(|p| p.name.clone()).collect(), Box::new(self.term(b)?)),
            Term::Tuple(ts) => ITerm::Tuple(ts.iter().map(|t| self.psi(t)).collect::<Result<_, _>>()?),
            _ => unreachable!("ψ applied to a non-value"),
        })
    }

    /// `let (m, x) = e in body`, desugared through a pair binder.
    fn let_pair(&mut self, m: &Ident, x: &Ident, e: ITerm<M>, body: ITerm<M>) -> ITerm<M> {
        let p = self.supply.fresh();
        let pv = || Box::new(ITerm::Var(p.clone()));
        ITerm::Let(
            p.clone(),
            Box::new(e),
            Box::new(ITerm::Let(
                m.clone(),
                Box::new(ITerm::Proj(1, pv())),
                Box::new(ITerm::Let(x.clone(), Box::new(ITerm::Proj(2, pv())), Box::new(body))),
            )),
        )
    }

    fn sum(ms: &[Ident]) -> ITerm<M> {
        let mut it = ms.iter().map(|m| ITerm::Var(m.clone()));
        let first = it.next().unwrap_or(ITerm::Lit(M::zero()));
        it.fold(first, |acc, m| ITerm::Plus(Box::new(acc), Box::new(m)))
    }

    fn pair(c: ITerm<M>, v: ITerm<M>) -> ITerm<M> {
        ITerm::Tuple(vec![c, v])
    }

    /// Binds `⟦M_i⟧` to `(m_i, x_i)` in sequence around `body`.
    fn sequence(&mut self, ms: &[&Term], names: &[(Ident, Ident)], body: ITerm<M>) -> Result<ITerm<M>, MissingCost> {
        let parts: Vec<ITerm<M>> = ms.iter().map(|m| self.term(m)).collect::<Result<_, _>>()?;
        Ok(parts.into_iter().zip(names).rev().fold(body, |acc, (e, (m, x))| self.let_pair(m, x, e, acc)))
    }

    fn fresh_pairs(&mut self, n: usize) -> Vec<(Ident, Ident)> {
        (0..n).map(|_| (self.supply.fresh(), self.supply.fresh())).collect()
    }

    fn term(&mut self, t: &Term) -> Result<ITerm<M>, MissingCost> {
        if t.is_value() {
            return Ok(Self::pair(ITerm::Lit(M::zero()), self.psi(t)?));
        }
        match t {
            Term::App(f, args) => {
                let ms: Vec<&Term> = std::iter::once(&**f).chain(args.iter()).collect();
                let names = self.fresh_pairs(ms.len() + 1);
                let (m_last, x_last) = names[ms.len()].clone();
                let call = ITerm::App(
                    Box::new(ITerm::Var(names[0].1.clone())),
                    names[1..ms.len()].iter().map(|(_, x)| ITerm::Var(x.clone())).collect(),
                );
                let costs: Vec<Ident> = names.iter().map(|(m, _)| m.clone()).collect();
                let result = Self::pair(Self::sum(&costs), ITerm::Var(x_last.clone()));
                let inner = self.let_pair(&m_last, &x_last, call, result);
                self.sequence(&ms, &names[..ms.len()], inner)
            }
            Term::Tuple(ts) => {
                let ms: Vec<&Term> = ts.iter().collect();
                let names = self.fresh_pairs(ms.len());
                let costs: Vec<Ident> = names.iter().map(|(m, _)| m.clone()).collect();
                let tuple = ITerm::Tuple(names.iter().map(|(_, x)| ITerm::Var(x.clone())).collect());
                let body = Self::pair(Self::sum(&costs), tuple);
                self.sequence(&ms, &names, body)
            }
            Term::Proj(i, a) => {
                let (m, x) = (self.supply.fresh(), self.supply.fresh());
                let e = self.term(a)?;
                let body = Self::pair(ITerm::Var(m.clone()), ITerm::Proj(*i, Box::new(ITerm::Var(x.clone()))));
                Ok(self.let_pair(&m, &x, e, body))
            }
            Term::Let(x, a, b) => {
                let m1 = self.supply.fresh();
                let (m2, x2) = (self.supply.fresh(), self.supply.fresh());
                let e1 = self.term(a)?;
                let e2 = self.term(b)?;
                let body = Self::pair(Self::sum(&[m1.clone(), m2.clone()]), ITerm::Var(x2.clone()));
                let inner = self.let_pair(&m2, &x2, e2, body);
                Ok(self.let_pair(&m1, x, e1, inner))
            }
            Term::Pre(l, a) | Term::Post(l, a) => {
                let cost = self.table.get(l)?.clone();
                let (m, x) = (self.supply.fresh(), self.supply.fresh());
                let e = self.term(a)?;
                let total = if matches!(t, Term::Pre(..)) {
                    ITerm::Plus(Box::new(ITerm::Lit(cost)), Box::new(ITerm::Var(m.clone())))
                } else {
                    ITerm::Plus(Box::new(ITerm::Var(m.clone())), Box::new(ITerm::Lit(cost)))
                };
                Ok(self.let_pair(&m, &x, e, Self::pair(total, ITerm::Var(x.clone()))))
            }
            Term::Var(_) | Term::Lam(..) => unreachable!(),
        }
    }
}

/// The monadic instrumentation `⟦M⟧`.
pub fn instrument<M: CostMonoid>(m: &Term, table: &CostTable<M>) -> Result<ITerm<M>, MissingCost> {
    let m = m.strip_types();
    let mut names = Vec::new();
    m.collect_names(&mut names);
    let mut i = Instrumenter { table, supply: NameSupply::above(VAR_PREFIX, names.iter()) };
    i.term(&m)
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
pub enum IEvalError {
    #[error("fuel exhausted after {0} steps")]
    Fuel(usize),
    #[error("evaluation stuck at {0}")]
    Stuck(String),
}

/// Evaluates an instrumented term to its `(cost, value)` result.
pub fn eval_instrumented<M: CostMonoid>(t: &ITerm<M>, fuel: usize) -> Result<(M, ITerm<M>), IEvalError> {
    let mut names = Vec::new();
    t.names_into(&mut names);
    let mut supply = NameSupply::above(VAR_PREFIX, names.iter());
    let mut cur = t.clone();
    let mut n = 0;
    while !cur.is_value() {
        if n == fuel {
            return Err(IEvalError::Fuel(n));
        }
        cur = cur.step(&mut supply).ok_or_else(|| IEvalError::Stuck(cur.to_string()))?;
        n += 1;
    }
    match cur {
        ITerm::Tuple(mut vs) if vs.len() == 2 => {
            let v = vs.pop().unwrap();
            match vs.pop().unwrap() {
                ITerm::Lit(m) => Ok((m, v)),
                other => Err(IEvalError::Stuck(other.to_string())),
            }
        }
        other => Err(IEvalError::Stuck(other.to_string())),
    }
}

/// `ψ(V)` of a label-free source value.
pub fn psi<M: CostMonoid>(v: &Term, table: &CostTable<M>) -> Result<ITerm<M>, MissingCost> {
    let mut names = Vec::new();
    v.collect_names(&mut names);
    let mut i = Instrumenter { table, supply: NameSupply::above(VAR_PREFIX, names.iter()) };
    i.psi(&v.strip_types())
}

struct IAt<'a, M>(&'a ITerm<M>, u8);

impl<M: CostMonoid> fmt::Display for IAt<'_, M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.level() < self.1 {
            write!(f, "({})", self.0)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl<M: CostMonoid> fmt::Display for ITerm<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ITerm::Var(x) => write!(f, "{x}"),
            ITerm::Lam(ps, b) => {
                write!(f, "\\")?;
                for (i, p) in ps.iter().enumerate() {
                    write!(f, "{}{p}", if i > 0 { " " } else { "" })?;
                }
                write!(f, ". {b}")
            }
            ITerm::App(g, a) => {
                write!(f, "{} @ (", IAt(g, 2))?;
                for (i, t) in a.iter().enumerate() {
                    write!(f, "{}{t}", if i > 0 { ", " } else { "" })?;
                }
                write!(f, ")")
            }
            ITerm::Let(x, m, n) => write!(f, "let {x} = {m} in {n}"),
            ITerm::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    write!(f, "{}{t}", if i > 0 { ", " } else { "" })?;
                }
                if ts.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
            ITerm::Proj(i, t) => write!(f, "proj {i} {}", IAt(t, 3)),
            ITerm::Lit(m) => write!(f, "#{m}"),
            ITerm::Plus(a, b) => write!(f, "{} + {}", IAt(a, 1), IAt(b, 2)),
        }
    }
}

impl<M: CostMonoid> fmt::Debug for ITerm<M> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term_internal;
    use crate::semantics::{eval_trace, Fuel};

    fn table(pairs: &[(&str, u64)]) -> CostTable<u64> {
        let mut t = CostTable::new();
        for (l, c) in pairs {
            t.insert(Name::new(l), *c);
        }
        t
    }

    #[test]
    fn values_cost_nothing() {
        let v = parse_term_internal("\\x. x").unwrap();
        let (m, r) = eval_instrumented(&instrument(&v, &table(&[])).unwrap(), 1000).unwrap();
        assert_eq!(m, 0);
        assert!(ialpha_eq(&r, &psi(&v, &table(&[])).unwrap()));
    }

    #[test]
    fn pre_label_charges_its_cost() {
        let t = parse_term_internal("l> (a, b)").unwrap();
        let (m, _) = eval_instrumented(&instrument(&t, &table(&[("l", 7)])).unwrap(), 1000).unwrap();
        assert_eq!(m, 7);
        assert!(instrument(&t, &table(&[])).is_err());
    }

    #[test]
    fn cost_matches_the_labelled_trace() {
        // the labelled self-application example applied to a labelled identity
        let t = parse_term_internal("(\\x. _l0> x @ (x @ (x) >_l1)) @ (\\z. _l2> z)").unwrap();
        let tbl = table(&[("_l0", 3), ("_l1", 5), ("_l2", 11)]);
        let (trace, _) = eval_trace(&t, Fuel::default()).unwrap();
        let expected = tbl.costof(&trace.labels).unwrap();
        let (m, _) = eval_instrumented(&instrument(&t, &tbl).unwrap(), 100_000).unwrap();
        assert_eq!(m, expected);
    }
}
