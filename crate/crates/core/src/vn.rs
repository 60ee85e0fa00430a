//! Value-named CPS terms and hoisted programs.

use crate::name::{Ident, Label, Name, NameSupply, VAR_PREFIX};
use crate::source::{write_params, Param};
use crate::types::Type;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VnValue {
    Lam(Vec<Param>, Box<VnTerm>),
    Tuple(Vec<Ident>),
    /// A one-element tuple introducing the annotated existential type.
    Pack(Ident, Type),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Bindable {
    Value(VnValue),
    Proj(usize, Ident),
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VnTerm {
    App(Ident, Vec<Ident>),
    Let(Ident, Bindable, Box<VnTerm>),
    Pre(Label, Box<VnTerm>),
}

pub type Renaming = HashMap<Ident, Ident>;

fn ren(map: &Renaming, x: &Ident) -> Ident {
    map.get(x).cloned().unwrap_or_else(|| x.clone())
}

impl VnValue {
    pub fn is_lam(&self) -> bool {
        matches!(self, VnValue::Lam(..))
    }
}

impl Bindable {
    pub fn lam(&self) -> Option<(&Vec<Param>, &VnTerm)> {
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => Some((ps, b)),
            _ => None,
        }
    }

    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        let use_id = |x: &Ident, bound: &Vec<Ident>, out: &mut Vec<Ident>| {
            if !bound.contains(x) && !out.contains(x) {
                out.push(x.clone());
            }
        };
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => {
                let n = bound.len();
                bound.extend(ps.iter().map(|p| p.name.clone()));
                b.fv_into(bound, out);
                bound.truncate(n);
            }
            Bindable::Value(VnValue::Tuple(ys)) => ys.iter().for_each(|y| use_id(y, bound, out)),
            Bindable::Value(VnValue::Pack(y, _)) | Bindable::Proj(_, y) => use_id(y, bound, out),
        }
    }

    pub fn free_vars_ordered(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out
    }

    fn collect_names(&self, out: &mut Vec<Name>) {
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => {
                out.extend(ps.iter().map(|p| p.name.clone()));
                b.collect_names(out);
            }
            Bindable::Value(VnValue::Tuple(ys)) => out.extend(ys.iter().cloned()),
            Bindable::Value(VnValue::Pack(y, _)) | Bindable::Proj(_, y) => out.push(y.clone()),
        }
    }

    fn map_terms(&self, f: &mut dyn FnMut(&VnTerm) -> VnTerm) -> Bindable {
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => Bindable::Value(VnValue::Lam(ps.clone(), Box::new(f(b)))),
            other => other.clone(),
        }
    }

    /// Renames free identifiers; binders inside λ are renamed to fresh names when `freshen` is set
    /// or when needed to avoid capture.
    fn rename_with(&self, map: &Renaming, supply: &mut NameSupply, freshen: bool) -> Bindable {
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => {
                let mut inner = map.clone();
                let targets: BTreeSet<Ident> = if freshen { BTreeSet::new() } else { map.values().cloned().collect() };
                let params = ps
                    .iter()
                    .map(|p| {
                        if freshen || targets.contains(&p.name) {
                            let z = supply.fresh();
                            inner.insert(p.name.clone(), z.clone());
                            Param { name: z, ty: p.ty.clone() }
                        } else {
                            inner.remove(&p.name);
                            p.clone()
                        }
                    })
                    .collect();
                Bindable::Value(VnValue::Lam(params, Box::new(b.rename_with(&inner, supply, freshen))))
            }
            Bindable::Value(VnValue::Tuple(ys)) => Bindable::Value(VnValue::Tuple(ys.iter().map(|y| ren(map, y)).collect())),
            Bindable::Value(VnValue::Pack(y, t)) => Bindable::Value(VnValue::Pack(ren(map, y), t.clone())),
            Bindable::Proj(i, y) => Bindable::Proj(*i, ren(map, y)),
        }
    }
}

impl VnTerm {
    pub fn app(f: &str, args: &[&str]) -> VnTerm {
        VnTerm::App(Name::new(f), args.iter().map(|a| Name::new(a)).collect())
    }

    pub fn let_(x: &str, b: Bindable, m: VnTerm) -> VnTerm {
        VnTerm::Let(Name::new(x), b, Box::new(m))
    }

    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        match self {
            VnTerm::App(f, a) => {
                for x in std::iter::once(f).chain(a.iter()) {
                    if !bound.contains(x) && !out.contains(x) {
                        out.push(x.clone());
                    }
                }
            }
            VnTerm::Let(x, b, m) => {
                b.fv_into(bound, out);
                bound.push(x.clone());
                m.fv_into(bound, out);
                bound.pop();
            }
            VnTerm::Pre(_, m) => m.fv_into(bound, out),
        }
    }

    pub fn free_vars_ordered(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out
    }

    pub fn free_vars(&self) -> BTreeSet<Ident> {
        self.free_vars_ordered().into_iter().collect()
    }

    pub fn collect_names(&self, out: &mut Vec<Name>) {
        match self {
            VnTerm::App(f, a) => {
                out.push(f.clone());
                out.extend(a.iter().cloned());
            }
            VnTerm::Let(x, b, m) => {
                out.push(x.clone());
                b.collect_names(out);
                m.collect_names(out);
            }
            VnTerm::Pre(_, m) => m.collect_names(out),
        }
    }

    pub fn fresh_supply(&self) -> NameSupply {
        let mut names = Vec::new();
        self.collect_names(&mut names);
        NameSupply::above(VAR_PREFIX, names.iter())
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        self.labels_into(&mut out);
        out
    }

    fn labels_into(&self, out: &mut Vec<Label>) {
        match self {
            VnTerm::App(..) => {}
            VnTerm::Let(_, b, m) => {
                if let Some((_, body)) = b.lam() {
                    body.labels_into(out);
                }
                m.labels_into(out);
            }
            VnTerm::Pre(l, m) => {
                out.push(l.clone());
                m.labels_into(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        1 + match self {
            VnTerm::App(_, a) => a.len(),
            VnTerm::Let(_, b, m) => b.lam().map_or(1, |(_, body)| body.size()) + m.size(),
            VnTerm::Pre(_, m) => m.size(),
        }
    }

    pub fn erase(&self) -> VnTerm {
        match self {
            VnTerm::App(..) => self.clone(),
            VnTerm::Let(x, b, m) => VnTerm::Let(x.clone(), b.map_terms(&mut |t| t.erase()), Box::new(m.erase())),
            VnTerm::Pre(_, m) => m.erase(),
        }
    }

    /// Drops parameter annotations and turns packs into plain one-tuples.
    pub fn strip_types(&self) -> VnTerm {
        match self {
            VnTerm::App(..) => self.clone(),
            VnTerm::Let(x, b, m) => {
                let b2 = match b {
                    Bindable::Value(VnValue::Lam(ps, body)) => Bindable::Value(VnValue::Lam(
                        ps.iter().map(|p| Param::new(p.name.clone())).collect(),
                        Box::new(body.strip_types()),
                    )),
                    Bindable::Value(VnValue::Pack(y, _)) => Bindable::Value(VnValue::Tuple(vec![y.clone()])),
                    other => other.clone(),
                };
                VnTerm::Let(x.clone(), b2, Box::new(m.strip_types()))
            }
            VnTerm::Pre(l, m) => VnTerm::Pre(l.clone(), Box::new(m.strip_types())),
        }
    }

    /// Capture-avoiding identifier-for-identifier substitution.
    pub fn rename(&self, map: &Renaming) -> VnTerm {
        let mut names = Vec::new();
        self.collect_names(&mut names);
        names.extend(map.values().cloned());
        let mut supply = NameSupply::above(VAR_PREFIX, names.iter());
        self.rename_with(map, &mut supply, false)
    }

    /// Copies the term renaming every binder to a fresh name and applying `map` to free identifiers.
    pub fn refresh(&self, map: &Renaming, supply: &mut NameSupply) -> VnTerm {
        self.rename_with(map, supply, true)
    }

    pub fn rename_with(&self, map: &Renaming, supply: &mut NameSupply, freshen: bool) -> VnTerm {
        match self {
            VnTerm::App(f, a) => VnTerm::App(ren(map, f), a.iter().map(|y| ren(map, y)).collect()),
            VnTerm::Let(x, b, m) => {
                let b2 = b.rename_with(map, supply, freshen);
                let mut inner = map.clone();
                let capture = !freshen && map.iter().any(|(k, v)| v == x && k != x);
                let x2 = if freshen || capture {
                    let z = supply.fresh();
                    inner.insert(x.clone(), z.clone());
                    z
                } else {
                    inner.remove(x);
                    x.clone()
                };
                VnTerm::Let(x2, b2, Box::new(m.rename_with(&inner, supply, freshen)))
            }
            VnTerm::Pre(l, m) => VnTerm::Pre(l.clone(), Box::new(m.rename_with(map, supply, freshen))),
        }
    }

    /// True when no λ occurs anywhere.
    pub fn is_lambda_free(&self) -> bool {
        match self {
            VnTerm::App(..) => true,
            VnTerm::Let(_, b, m) => b.lam().is_none() && m.is_lambda_free(),
            VnTerm::Pre(_, m) => m.is_lambda_free(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Def {
    pub name: Ident,
    pub params: Vec<Param>,
    pub body: VnTerm,
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HoistProgram {
    pub defs: Vec<Def>,
    pub main: VnTerm,
}

impl HoistProgram {
    /// Splits `let f1 = λ.T1 in … let fn = λ.Tn in T` into definitions and main.
    pub fn from_term(t: &VnTerm) -> Result<HoistProgram, String> {
        let mut defs = Vec::new();
        let mut cur = t;
        while let VnTerm::Let(x, Bindable::Value(VnValue::Lam(ps, body)), rest) = cur {
            if !body.is_lambda_free() {
                return Err(format!("definition of `{x}` contains a nested function"));
            }
            defs.push(Def { name: x.clone(), params: ps.clone(), body: (**body).clone() });
            cur = rest;
        }
        if !cur.is_lambda_free() {
            return Err("a function definition occurs below the top level".to_string());
        }
        Ok(HoistProgram { defs, main: cur.clone() })
    }

    pub fn to_term(&self) -> VnTerm {
        self.defs.iter().rev().fold(self.main.clone(), |acc, d| {
            VnTerm::Let(d.name.clone(), Bindable::Value(VnValue::Lam(d.params.clone(), Box::new(d.body.clone()))), Box::new(acc))
        })
    }

    pub fn erase(&self) -> HoistProgram {
        HoistProgram {
            defs: self.defs.iter().map(|d| Def { name: d.name.clone(), params: d.params.clone(), body: d.body.erase() }).collect(),
            main: self.main.erase(),
        }
    }
}

impl fmt::Display for Bindable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bindable::Value(VnValue::Lam(ps, b)) => {
                write!(f, "\\")?;
                write_params(f, ps)?;
                write!(f, ". {b}")
            }
            Bindable::Value(VnValue::Tuple(ys)) => {
                write!(f, "(")?;
                for (i, y) in ys.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{y}")?;
                }
                write!(f, ")")
            }
            Bindable::Value(VnValue::Pack(y, t)) => write!(f, "pack[{t}] ({y})"),
            Bindable::Proj(i, y) => write!(f, "proj {i} {y}"),
        }
    }
}

pub(crate) fn write_args(f: &mut fmt::Formatter<'_>, xs: &[Ident]) -> fmt::Result {
    write!(f, "(")?;
    for (i, y) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{y}")?;
    }
    write!(f, ")")
}

impl fmt::Display for VnTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VnTerm::App(h, a) => {
                write!(f, "{h} @ ")?;
                write_args(f, a)
            }
            VnTerm::Let(x, b, m) => {
                if f.alternate() {
                    write!(f, "let {x} = {b} in\n{m:#}")
                } else {
                    write!(f, "let {x} = {b} in {m}")
                }
            }
            VnTerm::Pre(l, m) => {
                if f.alternate() {
                    write!(f, "{l}> {m:#}")
                } else {
                    write!(f, "{l}> {m}")
                }
            }
        }
    }
}

impl fmt::Display for HoistProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.defs {
            write!(f, "let {} = \\", d.name)?;
            write_params(f, &d.params)?;
            writeln!(f, ". {} in", d.body)?;
        }
        write!(f, "{}", self.main)
    }
}

impl fmt::Debug for VnTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for Bindable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Debug for HoistProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
