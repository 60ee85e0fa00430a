//! Region-enriched hoisted programs, their types, and effects.

use crate::alpha::Scope;
use crate::name::{Ident, Label, Name, NameSupply, RegionId, TyVar, REGION_PREFIX, VAR_PREFIX};
use crate::vn::{write_args, Renaming};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub type RegionMap = HashMap<RegionId, RegionId>;

fn ren(map: &HashMap<Name, Name>, x: &Name) -> Name {
    map.get(x).cloned().unwrap_or_else(|| x.clone())
}

/// A finite set of regions a computation may access or dispose.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Effect(pub BTreeSet<RegionId>);

impl Effect {
    pub fn empty() -> Effect {
        Effect::default()
    }

    pub fn single(r: &RegionId) -> Effect {
        Effect([r.clone()].into_iter().collect())
    }

    pub fn of(rs: &[&str]) -> Effect {
        Effect(rs.iter().map(|r| Name::new(r)).collect())
    }

    pub fn contains(&self, r: &RegionId) -> bool {
        self.0.contains(r)
    }

    pub fn is_subset(&self, other: &Effect) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn with(mut self, r: &RegionId) -> Effect {
        self.0.insert(r.clone());
        self
    }

    pub fn without(mut self, r: &RegionId) -> Effect {
        self.0.remove(r);
        self
    }

    pub fn rename(&self, map: &RegionMap) -> Effect {
        Effect(self.0.iter().map(|r| ren(map, r)).collect())
    }
}

impl fmt::Display for Effect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{r}")?;
        }
        write!(f, "}}")
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionType {
    Var(TyVar),
    /// `∀r*. A+ -{e}-> R`
    Arrow(Vec<RegionId>, Vec<RegionType>, Effect),
    /// `×()`, stored locally rather than in a region.
    Unit,
    /// `×(A+)@r`
    ProductAt(Vec<RegionType>, RegionId),
    /// `(∃t.A)@r`
    ExistsAt(TyVar, Box<RegionType>, RegionId),
}

impl RegionType {
    pub fn var(s: &str) -> RegionType {
        RegionType::Var(Name::new(s))
    }

    /// The region a value of this type is stored in.
    pub fn region(&self) -> Option<&RegionId> {
        match self {
            RegionType::ProductAt(_, r) | RegionType::ExistsAt(_, _, r) => Some(r),
            _ => None,
        }
    }

    pub fn frv(&self) -> BTreeSet<RegionId> {
        let mut out = BTreeSet::new();
        self.frv_into(&mut Vec::new(), &mut out);
        out
    }

    fn frv_into(&self, bound: &mut Vec<RegionId>, out: &mut BTreeSet<RegionId>) {
        let mut add = |r: &RegionId, bound: &Vec<RegionId>| {
            if !bound.contains(r) {
                out.insert(r.clone());
            }
        };
        match self {
            RegionType::Var(_) | RegionType::Unit => {}
            RegionType::ProductAt(ts, r) => {
                add(r, bound);
                ts.iter().for_each(|t| t.frv_into(bound, out));
            }
            RegionType::ExistsAt(_, a, r) => {
                add(r, bound);
                a.frv_into(bound, out);
            }
            RegionType::Arrow(rs, dom, e) => {
                let n = bound.len();
                bound.extend(rs.iter().cloned());
                for r in &e.0 {
                    add(r, bound);
                }
                dom.iter().for_each(|t| t.frv_into(bound, out));
                bound.truncate(n);
            }
        }
    }

    pub fn ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.ftv_into(&mut Vec::new(), &mut out);
        out
    }

    fn ftv_into(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            RegionType::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            RegionType::Unit => {}
            RegionType::ProductAt(ts, _) | RegionType::Arrow(_, ts, _) => ts.iter().for_each(|t| t.ftv_into(bound, out)),
            RegionType::ExistsAt(v, a, _) => {
                bound.push(v.clone());
                a.ftv_into(bound, out);
                bound.pop();
            }
        }
    }

    fn region_names(&self, out: &mut Vec<Name>) {
        match self {
            RegionType::Var(_) | RegionType::Unit => {}
            RegionType::ProductAt(ts, r) => {
                out.push(r.clone());
                ts.iter().for_each(|t| t.region_names(out));
            }
            RegionType::ExistsAt(_, a, r) => {
                out.push(r.clone());
                a.region_names(out);
            }
            RegionType::Arrow(rs, dom, e) => {
                out.extend(rs.iter().cloned());
                out.extend(e.0.iter().cloned());
                dom.iter().for_each(|t| t.region_names(out));
            }
        }
    }

    /// Capture-avoiding region substitution.
    pub fn subst_regions(&self, map: &RegionMap) -> RegionType {
        let map: RegionMap = map.iter().filter(|(k, v)| k != v).map(|(k, v)| (k.clone(), v.clone())).collect();
        if map.is_empty() {
            return self.clone();
        }
        let map = &map;
        let mut names = Vec::new();
        self.region_names(&mut names);
        names.extend(map.values().cloned());
        let mut s = NameSupply::above(REGION_PREFIX, names.iter());
        self.subst_regions_with(map, &mut s)
    }

    fn subst_regions_with(&self, map: &RegionMap, s: &mut NameSupply) -> RegionType {
        match self {
            RegionType::Var(_) | RegionType::Unit => self.clone(),
            RegionType::ProductAt(ts, r) => RegionType::ProductAt(ts.iter().map(|t| t.subst_regions_with(map, s)).collect(), ren(map, r)),
            RegionType::ExistsAt(v, a, r) => RegionType::ExistsAt(v.clone(), Box::new(a.subst_regions_with(map, s)), ren(map, r)),
            RegionType::Arrow(rs, dom, e) => {
                let free = self.frv();
                let mut inner: RegionMap = map.iter().filter(|(k, _)| free.contains(*k)).map(|(k, v)| (k.clone(), v.clone())).collect();
                let targets: BTreeSet<RegionId> = inner.values().cloned().collect();
                let mut bound = Vec::new();
                for r in rs {
                    if targets.contains(r) {
                        let z = s.fresh();
                        inner.insert(r.clone(), z.clone());
                        bound.push(z);
                    } else {
                        bound.push(r.clone());
                    }
                }
                RegionType::Arrow(bound, dom.iter().map(|t| t.subst_regions_with(&inner, s)).collect(), e.rename(&inner))
            }
        }
    }

    /// Equality up to renaming of bound regions and type variables.
    pub fn alpha_eq(&self, other: &RegionType) -> bool {
        alpha_ty(self, other, &mut Scope::default(), &mut Scope::default())
    }

    /// Finds `B` with `[B/t]pattern ≡ self` up to α, if any. The substitution does not rename
    /// region binders, so a witness located at `r` may be captured by a `∀r` in `pattern`.
    pub fn match_witness(&self, t: &TyVar, pattern: &RegionType) -> Option<RegionType> {
        let w = find_witness(pattern, self, t).unwrap_or(RegionType::Unit);
        pattern.replace_tyvar(t, &w).alpha_eq(self).then_some(w)
    }

    /// `[b/t]self` without renaming any binder.
    pub fn replace_tyvar(&self, t: &TyVar, b: &RegionType) -> RegionType {
        match self {
            RegionType::Var(v) if v == t => b.clone(),
            RegionType::Var(_) | RegionType::Unit => self.clone(),
            RegionType::ProductAt(ts, r) => RegionType::ProductAt(ts.iter().map(|x| x.replace_tyvar(t, b)).collect(), r.clone()),
            RegionType::Arrow(rs, dom, e) => RegionType::Arrow(rs.clone(), dom.iter().map(|x| x.replace_tyvar(t, b)).collect(), e.clone()),
            RegionType::ExistsAt(v, _, _) if v == t => self.clone(),
            RegionType::ExistsAt(v, a, r) => RegionType::ExistsAt(v.clone(), Box::new(a.replace_tyvar(t, b)), r.clone()),
        }
    }
}

/// The subterm of `target` at the first free occurrence of `t` in `p`.
fn find_witness(p: &RegionType, target: &RegionType, t: &TyVar) -> Option<RegionType> {
    match (p, target) {
        (RegionType::Var(v), _) if v == t => Some(target.clone()),
        (RegionType::ProductAt(t1, _), RegionType::ProductAt(t2, _)) | (RegionType::Arrow(_, t1, _), RegionType::Arrow(_, t2, _)) => {
            t1.iter().zip(t2).find_map(|(x, y)| find_witness(x, y, t))
        }
        (RegionType::ExistsAt(v, a1, _), RegionType::ExistsAt(_, a2, _)) if v != t => find_witness(a1, a2, t),
        _ => None,
    }
}

fn effects_eq(a: &Effect, b: &Effect, rs: &Scope) -> bool {
    a.0.len() == b.0.len() && a.0.iter().all(|x| b.0.iter().any(|y| rs.same(x, y)))
}

fn alpha_ty(a: &RegionType, b: &RegionType, rs: &mut Scope, ts: &mut Scope) -> bool {
    match (a, b) {
        (RegionType::Var(x), RegionType::Var(y)) => ts.same(x, y),
        (RegionType::Unit, RegionType::Unit) => true,
        (RegionType::ProductAt(t1, r1), RegionType::ProductAt(t2, r2)) => {
            rs.same(r1, r2) && t1.len() == t2.len() && t1.iter().zip(t2).all(|(x, y)| alpha_ty(x, y, rs, ts))
        }
        (RegionType::ExistsAt(v1, a1, r1), RegionType::ExistsAt(v2, a2, r2)) => {
            if !rs.same(r1, r2) {
                return false;
            }
            let d = ts.depth();
            ts.bind(v1, v2);
            let ok = alpha_ty(a1, a2, rs, ts);
            ts.restore(d);
            ok
        }
        (RegionType::Arrow(q1, d1, e1), RegionType::Arrow(q2, d2, e2)) => {
            if q1.len() != q2.len() || d1.len() != d2.len() {
                return false;
            }
            let d = rs.depth();
            q1.iter().zip(q2).for_each(|(x, y)| rs.bind(x, y));
            let ok = effects_eq(e1, e2, rs) && d1.iter().zip(d2).all(|(x, y)| alpha_ty(x, y, rs, ts));
            rs.restore(d);
            ok
        }
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RParam {
    pub name: Ident,
    pub ty: Option<RegionType>,
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RBindable {
    /// `()`
    Unit,
    /// `(y+)@r`
    TupleAt(Vec<Ident>, RegionId),
    /// `(y)@r` introducing the annotated `(∃t.A)@r`.
    Pack(Ident, RegionType),
    Proj(usize, Ident),
}

impl RBindable {
    /// Region written by allocating this value, if any.
    pub fn alloc_region(&self) -> Option<&RegionId> {
        match self {
            RBindable::TupleAt(_, r) => Some(r),
            RBindable::Pack(_, ann) => ann.region(),
            _ => None,
        }
    }

    /// Components of an allocated tuple, packs counting as one-tuples.
    pub fn components(&self) -> Option<Vec<Ident>> {
        match self {
            RBindable::TupleAt(ys, _) => Some(ys.clone()),
            RBindable::Pack(y, _) => Some(vec![y.clone()]),
            _ => None,
        }
    }

    fn ids(&self) -> Vec<&Ident> {
        match self {
            RBindable::Unit => vec![],
            RBindable::TupleAt(ys, _) => ys.iter().collect(),
            RBindable::Pack(y, _) | RBindable::Proj(_, y) => vec![y],
        }
    }

    fn frv_into(&self, out: &mut BTreeSet<RegionId>) {
        match self {
            RBindable::TupleAt(_, r) => {
                out.insert(r.clone());
            }
            RBindable::Pack(_, ann) => out.extend(ann.frv()),
            _ => {}
        }
    }

    fn rename(&self, vmap: &Renaming, rmap: &RegionMap) -> RBindable {
        match self {
            RBindable::Unit => RBindable::Unit,
            RBindable::TupleAt(ys, r) => RBindable::TupleAt(ys.iter().map(|y| ren(vmap, y)).collect(), ren(rmap, r)),
            RBindable::Pack(y, ann) => RBindable::Pack(ren(vmap, y), if rmap.is_empty() { ann.clone() } else { ann.subst_regions(rmap) }),
            RBindable::Proj(i, y) => RBindable::Proj(*i, ren(vmap, y)),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RTerm {
    /// `@(x, r*, y+)`
    App(Ident, Vec<RegionId>, Vec<Ident>),
    Let(Ident, RBindable, Box<RTerm>),
    Pre(Label, Box<RTerm>),
    NewReg(RegionId, Box<RTerm>),
    Dispose(RegionId, Box<RTerm>),
}

/// Fresh-name sources for variables and regions.
#[derive(Clone, Debug)]
pub struct RegionSupply {
    pub vars: NameSupply,
    pub regions: NameSupply,
}

impl RTerm {
    fn fv_into(&self, bound: &mut Vec<Ident>, out: &mut Vec<Ident>) {
        let mut use_id = |x: &Ident, bound: &Vec<Ident>| {
            if !bound.contains(x) && !out.contains(x) {
                out.push(x.clone());
            }
        };
        match self {
            RTerm::App(f, _, ys) => std::iter::once(f).chain(ys).for_each(|x| use_id(x, bound)),
            RTerm::Let(x, b, m) => {
                b.ids().into_iter().for_each(|y| use_id(y, bound));
                bound.push(x.clone());
                m.fv_into(bound, out);
                bound.pop();
            }
            RTerm::Pre(_, m) | RTerm::NewReg(_, m) | RTerm::Dispose(_, m) => m.fv_into(bound, out),
        }
    }

    pub fn free_vars_ordered(&self) -> Vec<Ident> {
        let mut out = Vec::new();
        self.fv_into(&mut Vec::new(), &mut out);
        out
    }

    pub fn frv(&self) -> BTreeSet<RegionId> {
        let mut out = BTreeSet::new();
        match self {
            RTerm::App(_, rs, _) => out.extend(rs.iter().cloned()),
            RTerm::Let(_, b, m) => {
                b.frv_into(&mut out);
                out.extend(m.frv());
            }
            RTerm::Pre(_, m) => out = m.frv(),
            RTerm::NewReg(r, m) => {
                out = m.frv();
                out.remove(r);
            }
            RTerm::Dispose(r, m) => {
                out = m.frv();
                out.insert(r.clone());
            }
        }
        out
    }

    /// Every variable and region name occurring anywhere, bound or free.
    pub fn collect_names(&self, vars: &mut Vec<Name>, regions: &mut Vec<Name>) {
        match self {
            RTerm::App(f, rs, ys) => {
                vars.push(f.clone());
                vars.extend(ys.iter().cloned());
                regions.extend(rs.iter().cloned());
            }
            RTerm::Let(x, b, m) => {
                vars.push(x.clone());
                vars.extend(b.ids().into_iter().cloned());
                match b {
                    RBindable::TupleAt(_, r) => regions.push(r.clone()),
                    RBindable::Pack(_, ann) => ann.region_names(regions),
                    _ => {}
                }
                m.collect_names(vars, regions);
            }
            RTerm::Pre(_, m) => m.collect_names(vars, regions),
            RTerm::NewReg(r, m) | RTerm::Dispose(r, m) => {
                regions.push(r.clone());
                m.collect_names(vars, regions);
            }
        }
    }

    pub fn labels(&self) -> Vec<Label> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match cur {
                RTerm::App(..) => return out,
                RTerm::Pre(l, m) => {
                    out.push(l.clone());
                    cur = m;
                }
                RTerm::Let(_, _, m) | RTerm::NewReg(_, m) | RTerm::Dispose(_, m) => cur = m,
            }
        }
    }

    /// Renames free variables and regions. Variable binders are renamed when `freshen` is set or
    /// to avoid capture; region binders are renamed to avoid capture or any name in `avoid`.
    pub fn rename_with(
        &self,
        vmap: &Renaming,
        rmap: &RegionMap,
        avoid: &BTreeSet<RegionId>,
        s: &mut RegionSupply,
        freshen: bool,
    ) -> RTerm {
        match self {
            RTerm::App(f, rs, ys) => {
                RTerm::App(ren(vmap, f), rs.iter().map(|r| ren(rmap, r)).collect(), ys.iter().map(|y| ren(vmap, y)).collect())
            }
            RTerm::Let(x, b, m) => {
                let b2 = b.rename(vmap, rmap);
                let mut inner = vmap.clone();
                let capture = vmap.iter().any(|(k, v)| v == x && k != x);
                let x2 = if freshen || capture {
                    let z = s.vars.fresh();
                    inner.insert(x.clone(), z.clone());
                    z
                } else {
                    inner.remove(x);
                    x.clone()
                };
                RTerm::Let(x2, b2, Box::new(m.rename_with(&inner, rmap, avoid, s, freshen)))
            }
            RTerm::Pre(l, m) => RTerm::Pre(l.clone(), Box::new(m.rename_with(vmap, rmap, avoid, s, freshen))),
            RTerm::NewReg(r, m) => {
                let mut inner = rmap.clone();
                let capture = rmap.iter().any(|(k, v)| v == r && k != r);
                let r2 = if capture || avoid.contains(r) {
                    let z = s.regions.fresh();
                    inner.insert(r.clone(), z.clone());
                    z
                } else {
                    inner.remove(r);
                    r.clone()
                };
                RTerm::NewReg(r2, Box::new(m.rename_with(vmap, &inner, avoid, s, freshen)))
            }
            RTerm::Dispose(r, m) => RTerm::Dispose(ren(rmap, r), Box::new(m.rename_with(vmap, rmap, avoid, s, freshen))),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RDef {
    pub name: Ident,
    pub regions: Vec<RegionId>,
    pub params: Vec<RParam>,
    /// Declared latent effect; the inferred minimal one is used when absent.
    pub effect: Option<Effect>,
    pub body: RTerm,
}

impl RDef {
    /// Free regions of the abstraction, including its annotations.
    pub fn frv(&self) -> BTreeSet<RegionId> {
        let mut out = self.body.frv();
        for p in &self.params {
            if let Some(t) = &p.ty {
                out.extend(t.frv());
            }
        }
        if let Some(e) = &self.effect {
            out.extend(e.0.iter().cloned());
        }
        for r in &self.regions {
            out.remove(r);
        }
        out
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RegionProgram {
    pub defs: Vec<RDef>,
    pub main: RTerm,
}

impl RegionProgram {
    pub fn frv(&self) -> BTreeSet<RegionId> {
        let mut out = self.main.frv();
        for d in &self.defs {
            out.extend(d.frv());
        }
        out
    }

    /// Free variables of the whole program, in order of first occurrence.
    pub fn free_vars_ordered(&self) -> Vec<Ident> {
        let mut bound: Vec<Ident> = Vec::new();
        let mut out: Vec<Ident> = Vec::new();
        for d in &self.defs {
            let mut inner = bound.clone();
            inner.extend(d.params.iter().map(|p| p.name.clone()));
            d.body.fv_into(&mut inner, &mut out);
            bound.push(d.name.clone());
        }
        self.main.fv_into(&mut bound, &mut out);
        out
    }

    pub fn supply(&self) -> RegionSupply {
        let (mut vars, mut regions) = (Vec::new(), Vec::new());
        for d in &self.defs {
            vars.push(d.name.clone());
            vars.extend(d.params.iter().map(|p| p.name.clone()));
            regions.extend(d.regions.iter().cloned());
            for p in &d.params {
                if let Some(t) = &p.ty {
                    t.region_names(&mut regions);
                }
            }
            d.body.collect_names(&mut vars, &mut regions);
        }
        self.main.collect_names(&mut vars, &mut regions);
        RegionSupply { vars: NameSupply::above(VAR_PREFIX, vars.iter()), regions: NameSupply::above(REGION_PREFIX, regions.iter()) }
    }

    /// Labels occurring anywhere in the program.
    pub fn labels(&self) -> Vec<Label> {
        let mut out: Vec<Label> = self.defs.iter().flat_map(|d| d.body.labels()).collect();
        out.extend(self.main.labels());
        out
    }
}

/// α-equivalence of region programs; annotations are ignored, region names are not.
pub fn region_alpha_eq(a: &RegionProgram, b: &RegionProgram) -> bool {
    let (mut vs, mut rs) = (Scope::default(), Scope::default());
    if a.defs.len() != b.defs.len() {
        return false;
    }
    for (d1, d2) in a.defs.iter().zip(&b.defs) {
        if d1.params.len() != d2.params.len() || d1.regions.len() != d2.regions.len() {
            return false;
        }
        let (dv, dr) = (vs.depth(), rs.depth());
        d1.params.iter().zip(&d2.params).for_each(|(p, q)| vs.bind(&p.name, &q.name));
        d1.regions.iter().zip(&d2.regions).for_each(|(p, q)| rs.bind(p, q));
        let ok = term_alpha(&d1.body, &d2.body, &mut vs, &mut rs);
        vs.restore(dv);
        rs.restore(dr);
        if !ok {
            return false;
        }
        vs.bind(&d1.name, &d2.name);
    }
    term_alpha(&a.main, &b.main, &mut vs, &mut rs)
}

fn term_alpha(a: &RTerm, b: &RTerm, vs: &mut Scope, rs: &mut Scope) -> bool {
    let same_all = |xs: &[Name], ys: &[Name], s: &Scope| xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| s.same(x, y));
    match (a, b) {
        (RTerm::App(f, r1, y1), RTerm::App(g, r2, y2)) => vs.same(f, g) && same_all(r1, r2, rs) && same_all(y1, y2, vs),
        (RTerm::Let(x1, b1, m1), RTerm::Let(x2, b2, m2)) => {
            let ok = match (b1, b2) {
                (RBindable::Unit, RBindable::Unit) => true,
                (RBindable::Proj(i, y), RBindable::Proj(j, z)) => i == j && vs.same(y, z),
                _ => match (b1.components(), b2.components(), b1.alloc_region(), b2.alloc_region()) {
                    (Some(c1), Some(c2), Some(r1), Some(r2)) => rs.same(r1, r2) && same_all(&c1, &c2, vs),
                    _ => false,
                },
            };
            if !ok {
                return false;
            }
            let d = vs.depth();
            vs.bind(x1, x2);
            let ok = term_alpha(m1, m2, vs, rs);
            vs.restore(d);
            ok
        }
        (RTerm::Pre(l1, m1), RTerm::Pre(l2, m2)) => l1 == l2 && term_alpha(m1, m2, vs, rs),
        (RTerm::NewReg(r1, m1), RTerm::NewReg(r2, m2)) => {
            let d = rs.depth();
            rs.bind(r1, r2);
            let ok = term_alpha(m1, m2, vs, rs);
            rs.restore(d);
            ok
        }
        (RTerm::Dispose(r1, m1), RTerm::Dispose(r2, m2)) => rs.same(r1, r2) && term_alpha(m1, m2, vs, rs),
        _ => false,
    }
}

// ---- printing ----

fn write_list<T: fmt::Display>(f: &mut fmt::Formatter<'_>, xs: &[T]) -> fmt::Result {
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            write!(f, ", ")?;
        }
        write!(f, "{x}")?;
    }
    Ok(())
}

impl fmt::Display for RegionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionType::Var(v) => write!(f, "{v}"),
            RegionType::Unit => write!(f, "*()"),
            RegionType::ProductAt(ts, r) => {
                write!(f, "*(")?;
                write_list(f, ts)?;
                write!(f, ")@{r}")
            }
            RegionType::ExistsAt(v, a, r) => write!(f, "(exists {v}. {a})@{r}"),
            RegionType::Arrow(rs, dom, e) => {
                if !rs.is_empty() {
                    write!(f, "forall ")?;
                    write_list(f, rs)?;
                    write!(f, ". ")?;
                }
                write!(f, "(")?;
                write_list(f, dom)?;
                write!(f, ") -{{")?;
                write_list(f, &e.0.iter().collect::<Vec<_>>())?;
                write!(f, "}}-> R")
            }
        }
    }
}

impl fmt::Display for RParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.ty {
            None => write!(f, "{}", self.name),
            Some(t) => write!(f, "({}: {})", self.name, t),
        }
    }
}

impl fmt::Display for RBindable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RBindable::Unit => write!(f, "()"),
            RBindable::TupleAt(ys, r) => {
                write_args(f, ys)?;
                write!(f, "@{r}")
            }
            RBindable::Pack(y, ann) => write!(f, "pack[{ann}] ({y})"),
            RBindable::Proj(i, y) => write!(f, "proj {i} {y}"),
        }
    }
}

impl fmt::Display for RTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sep = if f.alternate() { "\n" } else { " " };
        match self {
            RTerm::App(h, rs, ys) => {
                write!(f, "{h} @ ")?;
                if !rs.is_empty() {
                    write!(f, "[")?;
                    write_list(f, rs)?;
                    write!(f, "] ")?;
                }
                write_args(f, ys)
            }
            RTerm::Let(x, b, m) => {
                write!(f, "let {x} = {b} in{sep}")?;
                fmt::Display::fmt(m, f)
            }
            RTerm::Pre(l, m) => {
                write!(f, "{l}> ")?;
                fmt::Display::fmt(m, f)
            }
            RTerm::NewReg(r, m) => {
                write!(f, "newreg {r} in{sep}")?;
                fmt::Display::fmt(m, f)
            }
            RTerm::Dispose(r, m) => {
                write!(f, "dispose {r} in{sep}")?;
                fmt::Display::fmt(m, f)
            }
        }
    }
}

impl fmt::Display for RDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "let {} = \\", self.name)?;
        if !self.regions.is_empty() {
            write!(f, "[")?;
            write_list(f, &self.regions)?;
            write!(f, "] ")?;
        }
        for (i, p) in self.params.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(e) = &self.effect {
            write!(f, " !{e}")?;
        }
        write!(f, ". {} in", self.body)
    }
}

impl fmt::Display for RegionProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.defs {
            writeln!(f, "{d}")?;
        }
        write!(f, "{}", self.main)
    }
}

macro_rules! debug_via_display {
    ($($t:ty),*) => {$(
        impl fmt::Debug for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                fmt::Display::fmt(self, f)
            }
        }
    )*};
}

debug_via_display!(RegionType, RBindable, RTerm, RDef, RegionProgram);
