use crate::cps::CpsTerm;
use crate::name::{Ident, TyVar};
use crate::source::{Param, Term};
use crate::types::Type;
use crate::vn::{Bindable, VnTerm, VnValue};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum TypeError {
    #[error("at {path}: expected {expected}, found {found}")]
    Mismatch { path: String, expected: String, found: String },
    #[error("at {path}: unbound identifier `{name}`")]
    Unbound { path: String, name: String },
    #[error("at {path}: parameter `{name}` has no type annotation")]
    MissingAnnotation { path: String, name: String },
    #[error("at {path}: expected {expected} arguments, found {found}")]
    Arity { path: String, expected: usize, found: usize },
    #[error("at {path}: projection {index} out of range for a {width}-tuple")]
    ProjRange { path: String, index: usize, width: usize },
    #[error("at {path}: type variable `{tvar}` escapes its scope at an unpack")]
    Escape { path: String, tvar: String },
    #[error("{stage} stage: {error}")]
    Stage { stage: String, error: Box<TypeError> },
}

impl TypeError {
    pub fn at_stage(self, stage: &str) -> TypeError {
        TypeError::Stage { stage: stage.to_string(), error: Box::new(self) }
    }
}

/// A typing context; later entries shadow earlier ones.
#[derive(Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeCtx {
    entries: Vec<(Ident, Type)>,
}

impl TypeCtx {
    pub fn new() -> TypeCtx {
        TypeCtx::default()
    }

    pub fn from_pairs(pairs: Vec<(Ident, Type)>) -> TypeCtx {
        TypeCtx { entries: pairs }
    }

    pub fn with(mut self, x: Ident, t: Type) -> TypeCtx {
        self.entries.push((x, t));
        self
    }

    pub fn push(&mut self, x: Ident, t: Type) {
        self.entries.push((x, t));
    }

    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, x: &Ident) -> Option<&Type> {
        self.entries.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    /// Visible entries, outermost first.
    pub fn visible(&self) -> Vec<(Ident, Type)> {
        let mut seen = BTreeSet::new();
        let mut out: Vec<(Ident, Type)> = Vec::new();
        for (x, t) in self.entries.iter().rev() {
            if seen.insert(x.clone()) {
                out.push((x.clone(), t.clone()));
            }
        }
        out.reverse();
        out
    }

    pub fn entries(&self) -> &[(Ident, Type)] {
        &self.entries
    }

    pub fn ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        for (_, t) in self.visible() {
            out.extend(t.ftv());
        }
        out
    }

    pub fn map(&self, f: impl Fn(&Ident, &Type) -> Type) -> TypeCtx {
        TypeCtx { entries: self.entries.iter().map(|(x, t)| (x.clone(), f(x, t))).collect() }
    }
}

impl fmt::Display for TypeCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, t)) in self.entries.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{x}: {t}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for TypeCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

pub(crate) struct Checker {
    pub ctx: TypeCtx,
    path: Vec<String>,
}

impl Checker {
    pub fn new(ctx: &TypeCtx) -> Checker {
        Checker { ctx: ctx.clone(), path: Vec::new() }
    }

    pub fn path(&self) -> String {
        if self.path.is_empty() {
            "top".to_string()
        } else {
            self.path.join("/")
        }
    }

    fn enter<T>(&mut self, seg: impl Into<String>, f: impl FnOnce(&mut Checker) -> T) -> T {
        self.path.push(seg.into());
        let r = f(self);
        self.path.pop();
        r
    }

    fn lookup(&self, x: &Ident) -> Result<Type, TypeError> {
        self.ctx.get(x).cloned().ok_or_else(|| TypeError::Unbound { path: self.path(), name: x.to_string() })
    }

    fn mismatch(&self, expected: impl fmt::Display, found: impl fmt::Display) -> TypeError {
        TypeError::Mismatch { path: self.path(), expected: expected.to_string(), found: found.to_string() }
    }

    fn param_types(&self, ps: &[Param]) -> Result<Vec<Type>, TypeError> {
        ps.iter()
            .map(|p| p.ty.clone().ok_or_else(|| TypeError::MissingAnnotation { path: self.path(), name: p.name.to_string() }))
            .collect()
    }

    pub fn source(&mut self, t: &Term) -> Result<Type, TypeError> {
        match t {
            Term::Var(x) => self.lookup(x),
            Term::Lam(ps, b) => {
                let tys = self.param_types(ps)?;
                let n = self.ctx.len();
                for (p, ty) in ps.iter().zip(&tys) {
                    self.ctx.push(p.name.clone(), ty.clone());
                }
                let r = self.enter("lam", |c| c.source(b));
                self.ctx.truncate(n);
                Ok(Type::Arrow(tys, Box::new(r?)))
            }
            Term::App(f, args) => {
                let ft = self.enter("app.fn", |c| c.source(f))?;
                let (dom, cod) = match ft {
                    Type::Arrow(d, c) => (d, c),
                    other => return Err(self.mismatch("a function type", other)),
                };
                if dom.len() != args.len() {
                    return Err(TypeError::Arity { path: self.path(), expected: dom.len(), found: args.len() });
                }
                for (i, (a, d)) in args.iter().zip(&dom).enumerate() {
                    let at = self.enter(format!("app.arg{}", i + 1), |c| c.source(a))?;
                    if !at.alpha_eq(d) {
                        return Err(self.enter(format!("app.arg{}", i + 1), |c| c.mismatch(d, &at)));
                    }
                }
                Ok(*cod)
            }
            Term::Let(x, m, n) => {
                let a = self.enter("let.bound", |c| c.source(m))?;
                let k = self.ctx.len();
                self.ctx.push(x.clone(), a);
                let r = self.enter("let.body", |c| c.source(n));
                self.ctx.truncate(k);
                r
            }
            Term::Tuple(ts) => {
                let mut out = Vec::new();
                for (i, m) in ts.iter().enumerate() {
                    out.push(self.enter(format!("tuple{}", i + 1), |c| c.source(m))?);
                }
                Ok(Type::Product(out))
            }
            Term::Proj(i, m) => {
                let mt = self.enter("proj", |c| c.source(m))?;
                match mt {
                    Type::Product(ts) => {
                        if *i == 0 || *i > ts.len() {
                            Err(TypeError::ProjRange { path: self.path(), index: *i, width: ts.len() })
                        } else {
                            Ok(ts[*i - 1].clone())
                        }
                    }
                    other => Err(self.mismatch("a product type", other)),
                }
            }
            Term::Pre(_, m) | Term::Post(_, m) => self.source(m),
        }
    }

    pub fn vn(&mut self, t: &VnTerm) -> Result<(), TypeError> {
        match t {
            VnTerm::App(f, ys) => {
                let ft = self.lookup(f)?;
                let dom = match ft {
                    Type::Arrow(d, c) if *c == Type::Result => d,
                    other => return Err(self.mismatch(format!("a function type for `{f}`"), other)),
                };
                if dom.len() != ys.len() {
                    return Err(TypeError::Arity { path: self.path(), expected: dom.len(), found: ys.len() });
                }
                for (y, d) in ys.iter().zip(&dom) {
                    let yt = self.lookup(y)?;
                    if !yt.alpha_eq(d) {
                        return Err(self.mismatch(format!("{d} for `{y}`"), yt));
                    }
                }
                Ok(())
            }
            VnTerm::Let(x, b, m) => {
                let bt = self.enter(format!("let {x}"), |c| c.bindable(b))?;
                let k = self.ctx.len();
                self.ctx.push(x.clone(), bt);
                let r = self.enter(format!("in {x}"), |c| c.vn(m));
                self.ctx.truncate(k);
                r
            }
            VnTerm::Pre(_, m) => self.vn(m),
        }
    }

    fn bindable(&mut self, b: &Bindable) -> Result<Type, TypeError> {
        match b {
            Bindable::Value(VnValue::Lam(ps, body)) => {
                let tys = self.param_types(ps)?;
                let k = self.ctx.len();
                for (p, ty) in ps.iter().zip(&tys) {
                    self.ctx.push(p.name.clone(), ty.clone());
                }
                let r = self.vn(body);
                self.ctx.truncate(k);
                r?;
                Ok(Type::Arrow(tys, Box::new(Type::Result)))
            }
            Bindable::Value(VnValue::Tuple(ys)) => Ok(Type::Product(ys.iter().map(|y| self.lookup(y)).collect::<Result<_, _>>()?)),
            Bindable::Value(VnValue::Pack(y, ann)) => {
                let yt = self.lookup(y)?;
                match ann {
                    Type::Exists(t, body) => {
                        if yt.match_witness(t, body).is_none() {
                            return Err(self.mismatch(format!("an instance of {ann} for `{y}`"), yt));
                        }
                        Ok(ann.clone())
                    }
                    other => Err(self.mismatch("an existential pack annotation", other)),
                }
            }
            Bindable::Proj(i, y) => match self.lookup(y)? {
                Type::Product(ts) => {
                    if *i == 0 || *i > ts.len() {
                        Err(TypeError::ProjRange { path: self.path(), index: *i, width: ts.len() })
                    } else {
                        Ok(ts[*i - 1].clone())
                    }
                }
                Type::Exists(t, body) if *i == 1 => {
                    if self.ctx.ftv().contains(&t) {
                        return Err(TypeError::Escape { path: self.path(), tvar: t.to_string() });
                    }
                    Ok(*body)
                }
                other => Err(self.mismatch(format!("a product or existential type for `{y}`"), other)),
            },
        }
    }
}

/// Synthesizes the type of an annotated source term.
pub fn typecheck_source(ctx: &TypeCtx, t: &Term) -> Result<Type, TypeError> {
    Checker::new(ctx).source(t)
}

/// Checks `ctx ⊢ t : R` for a CPS term.
pub fn typecheck_cps(ctx: &TypeCtx, t: &CpsTerm) -> Result<(), TypeError> {
    let ty = typecheck_source(ctx, &t.to_source())?;
    if ty == Type::Result {
        Ok(())
    } else {
        Err(TypeError::Mismatch { path: "top".into(), expected: "R".into(), found: ty.to_string() })
    }
}

/// Checks the value-named judgement `ctx ⊢ t`.
pub fn typecheck_vn(ctx: &TypeCtx, t: &VnTerm) -> Result<(), TypeError> {
    Checker::new(ctx).vn(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;
    use crate::parse::{parse_term, parse_type, parse_vn};

    fn ctx(pairs: &[(&str, &str)]) -> TypeCtx {
        TypeCtx::from_pairs(pairs.iter().map(|(x, t)| (Name::new(x), parse_type(t).unwrap())).collect())
    }

    #[test]
    fn constant_function() {
        let t = parse_term("\\(x: t2). y").unwrap();
        let ty = typecheck_source(&ctx(&[("y", "t1")]), &t).unwrap();
        assert_eq!(ty, parse_type("t2 -> t1").unwrap());
    }

    #[test]
    fn empty_product_and_range() {
        assert_eq!(typecheck_source(&TypeCtx::new(), &parse_term("()").unwrap()).unwrap(), Type::Product(vec![]));
        let e = typecheck_source(&ctx(&[("x", "*(t1, t2)")]), &parse_term("proj 3 x").unwrap()).unwrap_err();
        assert!(matches!(e, TypeError::ProjRange { index: 3, width: 2, .. }));
    }

    #[test]
    fn escape_is_rejected() {
        // unpacking y : ∃t.t while t is free in the context
        let c = ctx(&[("y", "exists t. t"), ("k", "t -> R")]);
        let m = parse_vn("let x = proj 1 y in k @ (x)").unwrap();
        assert!(matches!(typecheck_vn(&c, &m), Err(TypeError::Escape { .. })));
        let c2 = ctx(&[("y", "exists t. *(t, t -> R)")]);
        let m2 = parse_vn("let x = proj 1 y in let v = proj 1 x in let k = proj 2 x in k @ (v)").unwrap();
        typecheck_vn(&c2, &m2).unwrap();
    }
}
