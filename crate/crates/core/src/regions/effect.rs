//! The type-and-effect system for region programs.
//!
//! Effects are synthesised minimal; containment is only demanded against declared function
//! effects, which is where subeffecting applies.

use super::syntax::{Effect, RBindable, RDef, RTerm, RegionMap, RegionProgram, RegionType};
use crate::name::{Ident, RegionId, TyVar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

/// A typing context over region types; later entries shadow earlier ones.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCtx {
    entries: Vec<(Ident, RegionType)>,
}

impl RegionCtx {
    pub fn new() -> RegionCtx {
        RegionCtx::default()
    }

    pub fn from_pairs(entries: Vec<(Ident, RegionType)>) -> RegionCtx {
        RegionCtx { entries }
    }

    pub fn push(&mut self, x: Ident, t: RegionType) {
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

    pub fn get(&self, x: &Ident) -> Option<&RegionType> {
        self.entries.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }

    pub fn entries(&self) -> &[(Ident, RegionType)] {
        &self.entries
    }

    fn visible(&self) -> impl Iterator<Item = &(Ident, RegionType)> {
        self.entries.iter().enumerate().filter(|(i, (x, _))| !self.entries[i + 1..].iter().any(|(y, _)| y == x)).map(|(_, e)| e)
    }

    pub fn frv(&self) -> BTreeSet<RegionId> {
        self.visible().flat_map(|(_, t)| t.frv()).collect()
    }

    pub fn ftv(&self) -> BTreeSet<TyVar> {
        self.visible().flat_map(|(_, t)| t.ftv()).collect()
    }
}

impl fmt::Display for RegionCtx {
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

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum EffectError {
    #[error("{at}: unbound variable `{name}`")]
    Unbound { at: String, name: String },
    #[error("{at}: parameter `{name}` has no type annotation")]
    MissingAnnotation { at: String, name: String },
    #[error("{at}: expected {expected}, found {found}")]
    Mismatch { at: String, expected: String, found: String },
    #[error("{at}: `{name}` is applied to {found} arguments but takes {expected}")]
    Arity { at: String, name: String, expected: usize, found: usize },
    #[error("{at}: `{name}` is applied to {found} regions but abstracts {expected}")]
    RegionArity { at: String, name: String, expected: usize, found: usize },
    #[error("{at}: region arguments must be distinct, `{region}` is repeated")]
    RegionArgsNotDistinct { at: String, region: String },
    #[error("{at}: the type of `{name}` has free regions {regions} and cannot be applied")]
    RegionOpenFunction { at: String, name: String, regions: String },
    #[error("{at}: projection {index} out of range for width {width}")]
    ProjRange { at: String, index: usize, width: usize },
    #[error("{at}: unpacking would let type variable `{tvar}` escape")]
    Escape { at: String, tvar: String },
    #[error("{at}: allocated region `{region}` already occurs free in the context or the effect")]
    AllocationEscapes { at: String, region: String },
    #[error("{at}: region `{region}` is disposed but used by the continuation")]
    DisposedRegionUsed { at: String, region: String },
    #[error("{at}: region parameter `{region}` occurs free in the context")]
    RegionParamInContext { at: String, region: String },
    #[error("{at}: function `{name}` is not region closed, free regions {regions}")]
    FunctionNotRegionClosed { at: String, name: String, regions: String },
    #[error("{at}: body effect {found} exceeds the declared effect {declared}")]
    EffectExceedsAnnotation { at: String, declared: String, found: String },
}

fn show(rs: &BTreeSet<RegionId>) -> String {
    Effect(rs.clone()).to_string()
}

struct Checker {
    ctx: RegionCtx,
    path: Vec<String>,
}

impl Checker {
    fn at(&self) -> String {
        self.path.join("/")
    }

    fn lookup(&self, x: &Ident) -> Result<RegionType, EffectError> {
        self.ctx.get(x).cloned().ok_or_else(|| EffectError::Unbound { at: self.at(), name: x.to_string() })
    }

    fn mismatch(&self, expected: impl fmt::Display, found: impl fmt::Display) -> EffectError {
        EffectError::Mismatch { at: self.at(), expected: expected.to_string(), found: found.to_string() }
    }

    fn def_type(&mut self, d: &RDef) -> Result<RegionType, EffectError> {
        self.path.push(format!("def {}", d.name));
        let r = self.def_type_inner(d);
        self.path.pop();
        r
    }

    fn def_type_inner(&mut self, d: &RDef) -> Result<RegionType, EffectError> {
        let open = d.frv();
        if !open.is_empty() {
            return Err(EffectError::FunctionNotRegionClosed { at: self.at(), name: d.name.to_string(), regions: show(&open) });
        }
        let ctx_regions = self.ctx.frv();
        if let Some(r) = d.regions.iter().find(|r| ctx_regions.contains(*r)) {
            return Err(EffectError::RegionParamInContext { at: self.at(), region: r.to_string() });
        }
        let mut dom = Vec::new();
        for p in &d.params {
            match &p.ty {
                Some(t) => dom.push(t.clone()),
                None => return Err(EffectError::MissingAnnotation { at: self.at(), name: p.name.to_string() }),
            }
        }
        let n = self.ctx.len();
        for (p, t) in d.params.iter().zip(&dom) {
            self.ctx.push(p.name.clone(), t.clone());
        }
        let e = self.term(&d.body);
        self.ctx.truncate(n);
        let e = e?;
        let declared = match &d.effect {
            Some(ann) => {
                if !e.is_subset(ann) {
                    return Err(EffectError::EffectExceedsAnnotation { at: self.at(), declared: ann.to_string(), found: e.to_string() });
                }
                ann.clone()
            }
            None => e,
        };
        Ok(RegionType::Arrow(d.regions.clone(), dom, declared))
    }

    fn term(&mut self, t: &RTerm) -> Result<Effect, EffectError> {
        match t {
            RTerm::App(x, rs, ys) => self.app(x, rs, ys),
            RTerm::Let(x, b, m) => {
                self.path.push(format!("let {x}"));
                let r = self.let_(x, b, m);
                self.path.pop();
                r
            }
            RTerm::Pre(_, m) => self.term(m),
            RTerm::NewReg(r, m) => {
                self.path.push(format!("newreg {r}"));
                let res = (|| {
                    if self.ctx.frv().contains(r) {
                        return Err(EffectError::AllocationEscapes { at: self.at(), region: r.to_string() });
                    }
                    Ok(self.term(m)?.without(r))
                })();
                self.path.pop();
                res
            }
            RTerm::Dispose(r, m) => {
                self.path.push(format!("dispose {r}"));
                let res = (|| {
                    let e = self.term(m)?;
                    if e.contains(r) {
                        return Err(EffectError::DisposedRegionUsed { at: self.at(), region: r.to_string() });
                    }
                    Ok(e.with(r))
                })();
                self.path.pop();
                res
            }
        }
    }

    fn app(&mut self, x: &Ident, rs: &[RegionId], ys: &[Ident]) -> Result<Effect, EffectError> {
        let b = self.lookup(x)?;
        let RegionType::Arrow(qs, dom, e) = &b else {
            return Err(self.mismatch(format!("a function type for `{x}`"), &b));
        };
        let open = b.frv();
        if !open.is_empty() {
            return Err(EffectError::RegionOpenFunction { at: self.at(), name: x.to_string(), regions: show(&open) });
        }
        if qs.len() != rs.len() {
            return Err(EffectError::RegionArity { at: self.at(), name: x.to_string(), expected: qs.len(), found: rs.len() });
        }
        if let Some((_, r)) = rs.iter().enumerate().find(|(i, r)| rs[..*i].contains(r)) {
            return Err(EffectError::RegionArgsNotDistinct { at: self.at(), region: r.to_string() });
        }
        if dom.len() != ys.len() {
            return Err(EffectError::Arity { at: self.at(), name: x.to_string(), expected: dom.len(), found: ys.len() });
        }
        let map: RegionMap = qs.iter().cloned().zip(rs.iter().cloned()).collect();
        for (y, a) in ys.iter().zip(dom) {
            let want = a.subst_regions(&map);
            let got = self.lookup(y)?;
            if !got.alpha_eq(&want) {
                return Err(self.mismatch(format!("{want} for `{y}`"), got));
            }
        }
        Ok(e.rename(&map))
    }

    fn let_(&mut self, x: &Ident, b: &RBindable, m: &RTerm) -> Result<Effect, EffectError> {
        let (ty, touched) = match b {
            RBindable::Unit => (RegionType::Unit, None),
            RBindable::TupleAt(ys, r) => {
                let ts = ys.iter().map(|y| self.lookup(y)).collect::<Result<Vec<_>, _>>()?;
                (RegionType::ProductAt(ts, r.clone()), Some(r.clone()))
            }
            RBindable::Pack(y, ann) => {
                let RegionType::ExistsAt(t, body, r) = ann else {
                    return Err(self.mismatch("a located existential pack annotation", ann));
                };
                let yt = self.lookup(y)?;
                if yt.match_witness(t, body).is_none() {
                    return Err(self.mismatch(format!("an instance of {ann} for `{y}`"), yt));
                }
                (ann.clone(), Some(r.clone()))
            }
            RBindable::Proj(i, y) => match self.lookup(y)? {
                RegionType::ProductAt(ts, r) => {
                    if *i == 0 || *i > ts.len() {
                        return Err(EffectError::ProjRange { at: self.at(), index: *i, width: ts.len() });
                    }
                    (ts[*i - 1].clone(), Some(r))
                }
                RegionType::ExistsAt(t, body, r) if *i == 1 => {
                    if self.ctx.ftv().contains(&t) {
                        return Err(EffectError::Escape { at: self.at(), tvar: t.to_string() });
                    }
                    (*body, Some(r))
                }
                RegionType::Unit => return Err(EffectError::ProjRange { at: self.at(), index: *i, width: 0 }),
                other => return Err(self.mismatch(format!("a located product or existential for `{y}`"), other)),
            },
        };
        let n = self.ctx.len();
        self.ctx.push(x.clone(), ty);
        let e = self.term(m);
        self.ctx.truncate(n);
        let e = e?;
        Ok(match touched {
            Some(r) => e.with(&r),
            None => e,
        })
    }
}

/// `Γ ⊢ P : e` with `e` minimal.
pub fn effect_check(ctx: &RegionCtx, p: &RegionProgram) -> Result<Effect, EffectError> {
    let mut c = Checker { ctx: ctx.clone(), path: Vec::new() };
    for d in &p.defs {
        let t = c.def_type(d)?;
        c.ctx.push(d.name.clone(), t);
    }
    c.path.push("main".into());
    c.term(&p.main)
}

/// Types of the program's definitions, in order, as seen by `main`.
pub fn def_types(ctx: &RegionCtx, p: &RegionProgram) -> Result<Vec<(Ident, RegionType)>, EffectError> {
    let mut c = Checker { ctx: ctx.clone(), path: Vec::new() };
    let mut out = Vec::new();
    for d in &p.defs {
        let t = c.def_type(d)?;
        c.ctx.push(d.name.clone(), t.clone());
        out.push((d.name.clone(), t));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regions::parse::{parse_region_ctx, parse_region_program};

    #[test]
    fn allocation_and_disposal() {
        let ctx = parse_region_ctx("a: t, k: (*(t)@s) -{s}-> R").unwrap();
        // s is free in the context, so it cannot be allocated here
        let p = parse_region_program("newreg s in let y = (a)@s in k @ (y)").unwrap();
        assert!(matches!(effect_check(&ctx, &p), Err(EffectError::AllocationEscapes { .. })));
        let ctx = parse_region_ctx("a: t, k: forall s. (*(t)@s) -{s}-> R").unwrap();
        let p = parse_region_program("newreg r in let y = (a)@r in k @ [r] (y)").unwrap();
        assert_eq!(effect_check(&ctx, &p).unwrap(), Effect::empty());
        let p = parse_region_program("newreg r in let y = (a)@r in dispose r in k @ [r] (y)").unwrap();
        assert!(matches!(effect_check(&ctx, &p), Err(EffectError::DisposedRegionUsed { .. })));
    }

    #[test]
    fn declared_effects_bound_bodies() {
        let ctx = parse_region_ctx("h: (t) -{}-> R").unwrap();
        let ok = parse_region_program("let f = \\[r] (x: *(t)@r) !{r}. let z = proj 1 x in h @ (z) in h @ (a)").unwrap();
        let ctx2 = {
            let mut c = ctx.clone();
            c.push(crate::name::Name::new("a"), RegionType::var("t"));
            c
        };
        assert_eq!(effect_check(&ctx2, &ok).unwrap(), Effect::empty());
        let bad = parse_region_program("let f = \\[r] (x: *(t)@r) !{}. let z = proj 1 x in h @ (z) in h @ (a)").unwrap();
        assert!(matches!(effect_check(&ctx2, &bad), Err(EffectError::EffectExceedsAnnotation { .. })));
    }

    #[test]
    fn existential_unpack() {
        let ctx = parse_region_ctx("a: t, k: forall r. ((exists u. *(u, (u) -{}-> R)@r)@r) -{r}-> R").unwrap();
        let p = parse_region_program(
            "let f = \\(x: t). newreg r in let c = (x, x)@r in dispose r in k2 @ (x) in
             newreg r in let q = (a, f)@r in let p = pack[(exists u. *(u, (u) -{}-> R)@r)@r] (q) in k @ [r] (p)",
        )
        .unwrap();
        let mut ctx = ctx;
        ctx.push(crate::name::Name::new("k2"), crate::regions::parse::parse_region_type("(t) -{}-> R").unwrap());
        assert_eq!(effect_check(&ctx, &p).unwrap(), Effect::empty());
    }
}
