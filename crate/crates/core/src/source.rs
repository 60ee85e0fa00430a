//! The labelled call-by-value source calculus.

use crate::name::{Ident, Label, Name, NameSupply, VAR_PREFIX};
use crate::types::Type;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Param {
    pub name: Ident,
    pub ty: Option<Type>,
}

impl Param {
    pub fn new(name: Ident) -> Param {
        Param { name, ty: None }
    }

    pub fn typed(name: Ident, ty: Type) -> Param {
        Param { name, ty: Some(ty) }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ty {
            None => write!(f, "{}", self.name),
            Some(t) => write!(f, "({}: {})", self.name, t),
        }
    }
}

pub(crate) fn write_params(f: &mut fmt::Formatter<'_>, ps: &[Param]) -> fmt::Result {
    for (i, p) in ps.iter().enumerate() {
        if i > 0 {
            write!(f, " ")?;
        }
        write!(f, "{p}")?;
    }
    Ok(())
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Var(Ident),
    Lam(Vec<Param>, Box<Term>),
    App(Box<Term>, Vec<Term>),
    Let(Ident, Box<Term>, Box<Term>),
    Tuple(Vec<Term>),
    Proj(usize, Box<Term>),
    Pre(Label, Box<Term>),
    Post(Label, Box<Term>),
}

impl Term {
    pub fn var(s: &str) -> Term {
        Term::Var(Name::new(s))
    }

    pub fn lam(params: &[&str], body: Term) -> Term {
        Term::Lam(params.iter().map(|p| Param::new(Name::new(p))).collect(), Box::new(body))
    }

    pub fn app(f: Term, args: Vec<Term>) -> Term {
        Term::App(Box::new(f), args)
    }

    pub fn is_value(&self) -> bool {
        match self {
            Term::Var(_) | Term::Lam(..) => true,
            Term::Tuple(ts) => ts.iter().all(Term::is_value),
            _ => false,
        }
    }

    /// Number of syntax nodes.
    pub fn size(&self) -> usize {
        1 + match self {
            Term::Var(_) => 0,
            Term::Lam(_, b) | Term::Proj(_, b) | Term::Pre(_, b) | Term::Post(_, b) => b.size(),
            Term::App(f, a) => f.size() + a.iter().map(Term::size).sum::<usize>(),
            Term::Let(_, m, n) => m.size() + n.size(),
            Term::Tuple(ts) => ts.iter().map(Term::size).sum(),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        self.free_vars_ordered().into_iter().collect()
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out
    }

    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            Term::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            Term::Lam(ps, b) => {
                let n = bound.len();
                bound.extend(ps.iter().map(|p| p.name.clone()));
                b.fv_into(bound, out);
                bound.truncate(n);
            }
            Term::App(f, a) => {
                f.fv_into(bound, out);
                a.iter().for_each(|t| t.fv_into(bound, out));
            }
            Term::Let(x, m, n) => {
                m.fv_into(bound, out);
                bound.push(x.clone());
                n.fv_into(bound, out);
                bound.pop();
            }
            Term::Tuple(ts) => ts.iter().for_each(|t| t.fv_into(bound, out)),
            Term::Proj(_, b) | Term::Pre(_, b) | Term::Post(_, b) => b.fv_into(bound, out),
        }
    }

    /// Every identifier occurring anywhere (binders included).
    pub fn collect_names(&self, out: &mut Vec<Name>) {
        match self {
            Term::Var(x) => out.push(x.clone()),
            Term::Lam(ps, b) => {
                out.extend(ps.iter().map(|p| p.name.clone()));
                b.collect_names(out);
            }
            Term::App(f, a) => {
                f.collect_names(out);
                a.iter().for_each(|t| t.collect_names(out));
            }
            Term::Let(x, m, n) => {
                out.push(x.clone());
                m.collect_names(out);
                n.collect_names(out);
            }
            Term::Tuple(ts) => ts.iter().for_each(|t| t.collect_names(out)),
            Term::Proj(_, b) | Term::Pre(_, b) | Term::Post(_, b) => b.collect_names(out),
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.labels_into(&mut out);
        out
    }

    fn labels_into(&self, out: &mut Vec<Label>) {
        match self {
            Term::Var(_) => {}
            Term::Pre(l, b) | Term::Post(l, b) => {
                out.push(l.clone());
                b.labels_into(out);
            }
            Term::Lam(_, b) | Term::Proj(_, b) => b.labels_into(out),
            Term::App(f, a) => {
                f.labels_into(out);
                a.iter().for_each(|t| t.labels_into(out));
            }
            Term::Let(_, m, n) => {
                m.labels_into(out);
                n.labels_into(out);
            }
            Term::Tuple(ts) => ts.iter().for_each(|t| t.labels_into(out)),
        }
    }

    pub fn has_labels(&self) -> bool {
        !self.labels().is_empty()
    }

    /// Removes every pre- and post-labelling.
    pub fn erase(&self) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::Lam(ps, b) => Term::Lam(ps.clone(), Box::new(b.erase())),
            Term::App(f, a) => Term::App(Box::new(f.erase()), a.iter().map(Term::erase).collect()),
            Term::Let(x, m, n) => Term::Let(x.clone(), Box::new(m.erase()), Box::new(n.erase())),
            Term::Tuple(ts) => Term::Tuple(ts.iter().map(Term::erase).collect()),
            Term::Proj(i, b) => Term::Proj(*i, Box::new(b.erase())),
            Term::Pre(_, b) | Term::Post(_, b) => b.erase(),
        }
    }

    /// Drops binder type annotations.
    pub fn strip_types(&self) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::Lam(ps, b) => Term::Lam(
                ps.iter().map(|p| Param::new(p.name.clone())).collect(),
                Box::new(b.strip_types()),
            ),
            Term::App(f, a) => Term::App(Box::new(f.strip_types()), a.iter().map(Term::strip_types).collect()),
            Term::Let(x, m, n) => Term::Let(x.clone(), Box::new(m.strip_types()), Box::new(n.strip_types())),
            Term::Tuple(ts) => Term::Tuple(ts.iter().map(Term::strip_types).collect()),
            Term::Proj(i, b) => Term::Proj(*i, Box::new(b.strip_types())),
            Term::Pre(l, b) => Term::Pre(l.clone(), Box::new(b.strip_types())),
            Term::Post(l, b) => Term::Post(l.clone(), Box::new(b.strip_types())),
        }
    }

    pub fn fresh_supply(&self, extra: &[&Term]) -> NameSupply {
        let mut names = Vec::new();
        self.collect_names(&mut names);
        for t in extra {
            t.collect_names(&mut names);
        }
        NameSupply::above(VAR_PREFIX, names.iter())
    }

    /// Capture-avoiding simultaneous substitution.
    pub fn subst(&self, map: &HashMap<Ident, Term>) -> Term {
        let values: Vec<&Term> = map.values().collect();
        let mut supply = self.fresh_supply(&values);
        self.subst_with(map, &mut supply)
    }

    pub fn subst1(&self, x: &Ident, v: &Term) -> Term {
        let mut m = HashMap::new();
        m.insert(x.clone(), v.clone());
        self.subst(&m)
    }

    pub fn subst_with(&self, map: &HashMap<Ident, Term>, supply: &mut NameSupply) -> Term {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Term::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            Term::Lam(ps, b) => {
                let mut inner = map.clone();
                for p in ps {
                    inner.remove(&p.name);
                }
                let mut params = Vec::with_capacity(ps.len());
                let range_fv = range_free_vars(&inner, b);
                for p in ps {
                    if range_fv.contains(&p.name) {
                        let z = supply.fresh();
                        inner.insert(p.name.clone(), Term::Var(z.clone()));
                        params.push(Param { name: z, ty: p.ty.clone() });
                    } else {
                        params.push(p.clone());
                    }
                }
                Term::Lam(params, Box::new(b.subst_with(&inner, supply)))
            }
            Term::App(f, a) => Term::App(
                Box::new(f.subst_with(map, supply)),
                a.iter().map(|t| t.subst_with(map, supply)).collect(),
            ),
            Term::Let(x, m, n) => {
                let m2 = m.subst_with(map, supply);
                let mut inner = map.clone();
                inner.remove(x);
                let range_fv = range_free_vars(&inner, n);
                let x2 = if range_fv.contains(x) {
                    let z = supply.fresh();
                    inner.insert(x.clone(), Term::Var(z.clone()));
                    z
                } else {
                    x.clone()
                };
                Term::Let(x2, Box::new(m2), Box::new(n.subst_with(&inner, supply)))
            }
            Term::Tuple(ts) => Term::Tuple(ts.iter().map(|t| t.subst_with(map, supply)).collect()),
            Term::Proj(i, b) => Term::Proj(*i, Box::new(b.subst_with(map, supply))),
            Term::Pre(l, b) => Term::Pre(l.clone(), Box::new(b.subst_with(map, supply))),
            Term::Post(l, b) => Term::Post(l.clone(), Box::new(b.subst_with(map, supply))),
        }
    }

    fn level(&self) -> u8 {
        match self {
            Term::Var(_) | Term::Tuple(_) => 2,
            Term::App(..) | Term::Proj(..) => 1,
            _ => 0,
        }
    }
}

/// Free variables of the substituted values whose keys actually occur in `body`.
fn range_free_vars(map: &HashMap<Ident, Term>, body: &Term) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    if map.is_empty() {
        return out;
    }
    let fv = body.free_vars();
    for (k, v) in map {
        if fv.contains(k) {
            out.extend(v.free_vars());
        }
    }
    out
}

struct At<'a>(&'a Term, u8);

impl fmt::Display for At<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.level() >= self.1 {
            write!(f, "{}", self.0)
        } else {
            write!(f, "({})", self.0)
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(x) => write!(f, "{x}"),
            Term::Lam(ps, b) => {
                write!(f, "\\")?;
                write_params(f, ps)?;
                write!(f, ". {b}")
            }
            Term::App(h, args) => {
                match **h {
                    Term::App(..) => write!(f, "{h}")?,
                    _ => write!(f, "{}", At(h, 2))?,
                }
                write!(f, " @ (")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
            Term::Let(x, m, n) => write!(f, "let {x} = {m} in {n}"),
            Term::Tuple(ts) => {
                write!(f, "(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                if ts.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
            Term::Proj(i, b) => write!(f, "proj {i} {}", At(b, 1)),
            Term::Pre(l, b) => write!(f, "{l}> {b}"),
            Term::Post(l, b) => match **b {
                Term::Post(..) => write!(f, "{b} >{l}"),
                _ => write!(f, "{} >{l}", At(b, 1)),
            },
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
