//! Continuation-passing-style terms.

use crate::name::{Ident, Label, Name, NameSupply, VAR_PREFIX};
use crate::source::{write_params, Param, Term};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CpsValue {
    Var(Ident),
    Lam(Vec<Param>, Box<CpsTerm>),
    Tuple(Vec<CpsValue>),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CpsTerm {
    App(CpsValue, Vec<CpsValue>),
    LetProj(Ident, usize, CpsValue, Box<CpsTerm>),
    Pre(Label, Box<CpsTerm>),
}

/// A continuation: a variable or a one-parameter abstraction.
#[derive(Clone, Debug)]
pub enum Cont {
    Var(Ident),
    Lam(Param, CpsTerm),
}

impl Cont {
    pub fn to_value(&self) -> CpsValue {
        match self {
            Cont::Var(k) => CpsValue::Var(k.clone()),
            Cont::Lam(p, m) => CpsValue::Lam(vec![p.clone()], Box::new(m.clone())),
        }
    }
}

pub type CpsSubst = HashMap<Ident, CpsValue>;

impl CpsValue {
    pub fn var(s: &str) -> CpsValue {
        CpsValue::Var(Name::new(s))
    }

    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            CpsValue::Var(x) => {
                if !bound.contains(x) && !out.contains(x) {
                    out.push(x.clone());
                }
            }
            CpsValue::Lam(ps, b) => {
                let n = bound.len();
                bound.extend(ps.iter().map(|p| p.name.clone()));
                b.fv_into(bound, out);
                bound.truncate(n);
            }
            CpsValue::Tuple(vs) => vs.iter().for_each(|v| v.fv_into(bound, out)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out.into_iter().collect()
    }

    pub fn collect_names(&self, out: &mut Vec<Name>) {
        match self {
            CpsValue::Var(x) => out.push(x.clone()),
            CpsValue::Lam(ps, b) => {
                out.extend(ps.iter().map(|p| p.name.clone()));
                b.collect_names(out);
            }
            CpsValue::Tuple(vs) => vs.iter().for_each(|v| v.collect_names(out)),
        }
    }

    pub fn erase(&self) -> CpsValue {
        match self {
            CpsValue::Var(_) => self.clone(),
            CpsValue::Lam(ps, b) => CpsValue::Lam(ps.clone(), Box::new(b.erase())),
            CpsValue::Tuple(vs) => CpsValue::Tuple(vs.iter().map(CpsValue::erase).collect()),
        }
    }

    pub fn strip_types(&self) -> CpsValue {
        match self {
            CpsValue::Var(_) => self.clone(),
            CpsValue::Lam(ps, b) => CpsValue::Lam(
                ps.iter().map(|p| Param::new(p.name.clone())).collect(),
                Box::new(b.strip_types()),
            ),
            CpsValue::Tuple(vs) => CpsValue::Tuple(vs.iter().map(CpsValue::strip_types).collect()),
        }
    }

    pub fn subst_with(&self, map: &CpsSubst, supply: &mut NameSupply) -> CpsValue {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            CpsValue::Var(x) => map.get(x).cloned().unwrap_or_else(|| self.clone()),
            CpsValue::Lam(ps, b) => {
                let mut inner = map.clone();
                for p in ps {
                    inner.remove(&p.name);
                }
                let range_fv = range_free_vars(&inner, &b.free_vars());
                let mut params = Vec::with_capacity(ps.len());
                for p in ps {
                    if range_fv.contains(&p.name) {
                        let z = supply.fresh();
                        inner.insert(p.name.clone(), CpsValue::Var(z.clone()));
                        params.push(Param { name: z, ty: p.ty.clone() });
                    } else {
                        params.push(p.clone());
                    }
                }
                CpsValue::Lam(params, Box::new(b.subst_with(&inner, supply)))
            }
            CpsValue::Tuple(vs) => CpsValue::Tuple(vs.iter().map(|v| v.subst_with(map, supply)).collect()),
        }
    }

    /// Reads the value back as a source term.
    pub fn to_source(&self) -> Term {
        match self {
            CpsValue::Var(x) => Term::Var(x.clone()),
            CpsValue::Lam(ps, b) => Term::Lam(ps.clone(), Box::new(b.to_source())),
            CpsValue::Tuple(vs) => Term::Tuple(vs.iter().map(CpsValue::to_source).collect()),
        }
    }

    pub fn from_source(t: &Term) -> Result<CpsValue, String> {
        match t {
            Term::Var(x) => Ok(CpsValue::Var(x.clone())),
            Term::Lam(ps, b) => Ok(CpsValue::Lam(ps.clone(), Box::new(CpsTerm::from_source(b)?))),
            Term::Tuple(ts) => Ok(CpsValue::Tuple(ts.iter().map(CpsValue::from_source).collect::<Result<_, _>>()?)),
            other => Err(format!("expected a CPS value, found `{other}`")),
        }
    }
}

fn range_free_vars(map: &CpsSubst, fv: &BTreeSet<Ident>) -> BTreeSet<Ident> {
    let mut out = BTreeSet::new();
    for (k, v) in map {
        if fv.contains(k) {
            out.extend(v.free_vars());
        }
    }
    out
}

impl CpsTerm {
    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            CpsTerm::App(f, a) => {
                f.fv_into(bound, out);
                a.iter().for_each(|v| v.fv_into(bound, out));
            }
            CpsTerm::LetProj(x, _, v, m) => {
                v.fv_into(bound, out);
                bound.push(x.clone());
                m.fv_into(bound, out);
                bound.pop();
            }
            CpsTerm::Pre(_, m) => m.fv_into(bound, out),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out.into_iter().collect()
    }

    pub fn collect_names(&self, out: &mut Vec<Name>) {
        match self {
            CpsTerm::App(f, a) => {
                f.collect_names(out);
                a.iter().for_each(|v| v.collect_names(out));
            }
            CpsTerm::LetProj(x, _, v, m) => {
                out.push(x.clone());
                v.collect_names(out);
                m.collect_names(out);
            }
            CpsTerm::Pre(_, m) => m.collect_names(out),
        }
    }

    pub fn erase(&self) -> CpsTerm {
        match self {
            CpsTerm::App(f, a) => CpsTerm::App(f.erase(), a.iter().map(CpsValue::erase).collect()),
            CpsTerm::LetProj(x, i, v, m) => CpsTerm::LetProj(x.clone(), *i, v.erase(), Box::new(m.erase())),
            CpsTerm::Pre(_, m) => m.erase(),
        }
    }

    pub fn strip_types(&self) -> CpsTerm {
        match self {
            CpsTerm::App(f, a) => CpsTerm::App(f.strip_types(), a.iter().map(CpsValue::strip_types).collect()),
            CpsTerm::LetProj(x, i, v, m) => {
                CpsTerm::LetProj(x.clone(), *i, v.strip_types(), Box::new(m.strip_types()))
            }
            CpsTerm::Pre(l, m) => CpsTerm::Pre(l.clone(), Box::new(m.strip_types())),
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        self.to_source().labels()
    }

    pub fn fresh_supply(&self, extra: &[&CpsValue]) -> NameSupply {
        let mut names = Vec::new();
        self.collect_names(&mut names);
        for v in extra {
            v.collect_names(&mut names);
        }
        NameSupply::above(VAR_PREFIX, names.iter())
    }

    pub fn subst(&self, map: &CpsSubst) -> CpsTerm {
        let vals: Vec<&CpsValue> = map.values().collect();
        let mut supply = self.fresh_supply(&vals);
        self.subst_with(map, &mut supply)
    }

    pub fn subst_with(&self, map: &CpsSubst, supply: &mut NameSupply) -> CpsTerm {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            CpsTerm::App(f, a) => {
                CpsTerm::App(f.subst_with(map, supply), a.iter().map(|v| v.subst_with(map, supply)).collect())
            }
            CpsTerm::LetProj(x, i, v, m) => {
                let v2 = v.subst_with(map, supply);
                let mut inner = map.clone();
                inner.remove(x);
                let range_fv = range_free_vars(&inner, &m.free_vars());
                let x2 = if range_fv.contains(x) {
                    let z = supply.fresh();
                    inner.insert(x.clone(), CpsValue::Var(z.clone()));
                    z
                } else {
                    x.clone()
                };
                CpsTerm::LetProj(x2, *i, v2, Box::new(m.subst_with(&inner, supply)))
            }
            CpsTerm::Pre(l, m) => CpsTerm::Pre(l.clone(), Box::new(m.subst_with(map, supply))),
        }
    }

    /// Embeds into the source syntax (CPS terms form a sub-language).
    pub fn to_source(&self) -> Term {
        match self {
            CpsTerm::App(f, a) => Term::App(Box::new(f.to_source()), a.iter().map(CpsValue::to_source).collect()),
            CpsTerm::LetProj(x, i, v, m) => Term::Let(
                x.clone(),
                Box::new(Term::Proj(*i, Box::new(v.to_source()))),
                Box::new(m.to_source()),
            ),
            CpsTerm::Pre(l, m) => Term::Pre(l.clone(), Box::new(m.to_source())),
        }
    }

    pub fn from_source(t: &Term) -> Result<CpsTerm, String> {
        match t {
            Term::App(f, a) => Ok(CpsTerm::App(
                CpsValue::from_source(f)?,
                a.iter().map(CpsValue::from_source).collect::<Result<_, _>>()?,
            )),
            Term::Let(x, m, n) => match &**m {
                Term::Proj(i, v) => {
                    Ok(CpsTerm::LetProj(x.clone(), *i, CpsValue::from_source(v)?, Box::new(CpsTerm::from_source(n)?)))
                }
                other => Err(format!("CPS let must bind a projection, found `{other}`")),
            },
            Term::Pre(l, m) => Ok(CpsTerm::Pre(l.clone(), Box::new(CpsTerm::from_source(m)?))),
            other => Err(format!("expected a CPS term, found `{other}`")),
        }
    }

    pub fn size(&self) -> usize {
        self.to_source().size()
    }
}

impl fmt::Display for CpsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CpsValue::Var(x) => write!(f, "{x}"),
            CpsValue::Lam(ps, b) => {
                write!(f, "\\")?;
                write_params(f, ps)?;
                write!(f, ". {b}")
            }
            CpsValue::Tuple(vs) => {
                write!(f, "(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                if vs.len() == 1 {
                    write!(f, ",")?;
                }
                write!(f, ")")
            }
        }
    }
}

fn atomic(v: &CpsValue) -> String {
    match v {
        CpsValue::Lam(..) => format!("({v})"),
        _ => v.to_string(),
    }
}

impl fmt::Display for CpsTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CpsTerm::App(h, a) => {
                write!(f, "{} @ (", atomic(h))?;
                for (i, v) in a.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            CpsTerm::LetProj(x, i, v, m) => write!(f, "let {x} = proj {i} {} in {m}", atomic(v)),
            CpsTerm::Pre(l, m) => write!(f, "{l}> {m}"),
        }
    }
}

impl fmt::Debug for CpsValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for CpsTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
