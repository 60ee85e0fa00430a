//! Heap contexts, their coherence predicates, and the memory-checking reduction.

use super::syntax::{RBindable, RDef, RTerm, RegionMap, RegionProgram, RegionSupply};
use crate::name::{Ident, Label, RegionId};
use crate::semantics::{Fuel, StepResult};
use crate::vn::Renaming;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HeapEntry {
    BindUnit(Ident),
    BindTupleAt(Ident, Vec<Ident>, RegionId),
    NewRegion(RegionId),
    Disposed(RegionId),
}

/// A heap context, outermost entry first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeapCtx(pub Vec<HeapEntry>);

impl fmt::Display for HeapCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.0 {
            match e {
                HeapEntry::BindUnit(x) => write!(f, "let {x} = () in ")?,
                HeapEntry::BindTupleAt(x, ys, r) => write!(f, "let {x} = ({})@{r} in ", ys.iter().map(|y| y.as_str()).collect::<Vec<_>>().join(", "))?,
                HeapEntry::NewRegion(r) => write!(f, "newreg {r} in ")?,
                HeapEntry::Disposed(r) => write!(f, "dispose {r} in ")?,
            }
        }
        write!(f, "[]")
    }
}

/// Index of the first entry violating coherence relative to the live regions `live`.
pub fn coh_violation(h: &[HeapEntry], live: &BTreeSet<RegionId>) -> Option<(usize, RegionId)> {
    let mut live = live.clone();
    for (i, e) in h.iter().enumerate() {
        match e {
            HeapEntry::BindUnit(_) => {}
            HeapEntry::BindTupleAt(_, _, r) => {
                if !live.contains(r) {
                    return Some((i, r.clone()));
                }
            }
            HeapEntry::NewRegion(r) => {
                live.insert(r.clone());
            }
            HeapEntry::Disposed(r) => {
                if !live.remove(r) {
                    return Some((i, r.clone()));
                }
            }
        }
    }
    None
}

/// `Coh(H, L)`
pub fn coh(h: &HeapCtx, live: &BTreeSet<RegionId>) -> bool {
    coh_violation(&h.0, live).is_none()
}

/// Index of the disposal of `r` that makes `NDis(r, h)` fail, if any.
pub fn ndis_violation(r: &RegionId, h: &[HeapEntry]) -> Option<usize> {
    for (i, e) in h.iter().enumerate() {
        match e {
            HeapEntry::NewRegion(r2) if r2 == r => return None,
            HeapEntry::Disposed(r2) if r2 == r => return Some(i),
            _ => {}
        }
    }
    None
}

/// `NDis(r, H)`
pub fn ndis(r: &RegionId, h: &HeapCtx) -> bool {
    ndis_violation(r, &h.0).is_none()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MemoryErrorKind {
    AccessDisposed,
    IncoherentHeap,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{kind:?} on region `{region}` at heap entry {index}")]
pub struct MemoryError {
    pub kind: MemoryErrorKind,
    pub region: RegionId,
    /// Position in the heap context of the offending allocation or disposal.
    pub index: usize,
}

/// Splits a main term into its heap context and redex.
pub fn decompose(t: &RTerm) -> (HeapCtx, &RTerm) {
    let mut h = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            RTerm::Let(x, RBindable::Unit, m) => {
                h.push(HeapEntry::BindUnit(x.clone()));
                cur = m;
            }
            RTerm::Let(x, b @ (RBindable::TupleAt(..) | RBindable::Pack(..)), m) => {
                let r = b.alloc_region().expect("allocations carry a region").clone();
                h.push(HeapEntry::BindTupleAt(x.clone(), b.components().expect("allocations have components"), r));
                cur = m;
            }
            RTerm::NewReg(r, m) => {
                h.push(HeapEntry::NewRegion(r.clone()));
                cur = m;
            }
            RTerm::Dispose(r, m) => {
                h.push(HeapEntry::Disposed(r.clone()));
                cur = m;
            }
            _ => return (HeapCtx(h), cur),
        }
    }
}

fn replace_redex(t: &RTerm, new: RTerm) -> RTerm {
    match t {
        RTerm::Let(x, b, m) if !matches!(b, RBindable::Proj(..)) => RTerm::Let(x.clone(), b.clone(), Box::new(replace_redex(m, new))),
        RTerm::NewReg(r, m) => RTerm::NewReg(r.clone(), Box::new(replace_redex(m, new))),
        RTerm::Dispose(r, m) => RTerm::Dispose(r.clone(), Box::new(replace_redex(m, new))),
        _ => new,
    }
}

/// Result of `E(x)`.
enum Lookup<'a> {
    Fun(&'a RDef),
    /// Tuple components, region, and the start of the explored suffix of the heap.
    Tuple(Vec<Ident>, RegionId, usize),
    Unit,
}

fn lookup<'a>(defs: &'a [RDef], h: &HeapCtx, x: &Ident) -> Option<Lookup<'a>> {
    for (i, e) in h.0.iter().enumerate().rev() {
        match e {
            HeapEntry::BindUnit(y) if y == x => return Some(Lookup::Unit),
            HeapEntry::BindTupleAt(y, ys, r) if y == x => return Some(Lookup::Tuple(ys.clone(), r.clone(), i + 1)),
            _ => {}
        }
    }
    defs.iter().rev().find(|d| &d.name == x).map(Lookup::Fun)
}

fn bound_in(defs: &[RDef], h: &HeapCtx, x: &Ident) -> bool {
    lookup(defs, h, x).is_some()
}

/// Regions occurring anywhere in a term.
fn regions_of(t: &RTerm) -> BTreeSet<RegionId> {
    let (mut vars, mut regions) = (Vec::new(), Vec::new());
    t.collect_names(&mut vars, &mut regions);
    regions.into_iter().collect()
}

fn check_coh(h: &HeapCtx) -> Result<(), MemoryError> {
    match coh_violation(&h.0, &BTreeSet::new()) {
        None => Ok(()),
        Some((index, region)) => Err(MemoryError { kind: MemoryErrorKind::IncoherentHeap, region, index }),
    }
}

pub fn step_region_with(p: &RegionProgram, s: &mut RegionSupply) -> Result<StepResult<RegionProgram>, MemoryError> {
    let (h, redex) = decompose(&p.main);
    let stepped = |label: Option<Label>, new: RTerm| {
        Ok(StepResult::Stepped { label, next: RegionProgram { defs: p.defs.clone(), main: replace_redex(&p.main, new) } })
    };
    match redex {
        RTerm::App(x, rs, ys) => match lookup(&p.defs, &h, x) {
            Some(Lookup::Fun(d)) if d.regions.len() == rs.len() && d.params.len() == ys.len() => {
                check_coh(&h)?;
                let vmap: Renaming = d.params.iter().map(|q| q.name.clone()).zip(ys.iter().cloned()).collect();
                let rmap: RegionMap = d.regions.iter().cloned().zip(rs.iter().cloned()).collect();
                let avoid = regions_of(&p.main);
                stepped(None, d.body.rename_with(&vmap, &rmap, &avoid, s, true))
            }
            _ => Ok(StepResult::Stuck(p.clone())),
        },
        RTerm::Let(z, RBindable::Proj(i, x), m) => match lookup(&p.defs, &h, x) {
            Some(Lookup::Tuple(ys, r, start)) if *i >= 1 && *i <= ys.len() => {
                check_coh(&h)?;
                if let Some(k) = ndis_violation(&r, &h.0[start..]) {
                    return Err(MemoryError { kind: MemoryErrorKind::AccessDisposed, region: r, index: start + k });
                }
                let mut vmap = Renaming::new();
                vmap.insert(z.clone(), ys[*i - 1].clone());
                stepped(None, m.rename_with(&vmap, &RegionMap::new(), &BTreeSet::new(), s, false))
            }
            _ => Ok(StepResult::Stuck(p.clone())),
        },
        RTerm::Pre(l, m) => {
            check_coh(&h)?;
            stepped(Some(l.clone()), (**m).clone())
        }
        _ => unreachable!("decompose stops at a redex"),
    }
}

pub fn step_region(p: &RegionProgram) -> Result<StepResult<RegionProgram>, MemoryError> {
    step_region_with(p, &mut p.supply())
}

/// `F[H[@(halt, r*, x)]]` with `halt` free.
pub fn region_is_answer(p: &RegionProgram) -> bool {
    let (h, redex) = decompose(&p.main);
    matches!(redex, RTerm::App(f, _, ys) if f.is_halt() && ys.len() == 1 && !bound_in(&p.defs, &h, f))
}

/// A stuck program blocked only on a free variable of the whole program.
pub fn blocked_on_free_var(p: &RegionProgram) -> bool {
    let (h, redex) = decompose(&p.main);
    match redex {
        RTerm::App(x, ..) | RTerm::Let(_, RBindable::Proj(_, x), _) => !bound_in(&p.defs, &h, x),
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RegionStatus {
    Value,
    Stuck,
    Fuel,
    MemoryError { error: MemoryError },
}

impl fmt::Display for RegionStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionStatus::Value => write!(f, "VALUE"),
            RegionStatus::Stuck => write!(f, "STUCK"),
            RegionStatus::Fuel => write!(f, "FUEL"),
            RegionStatus::MemoryError { error } => write!(f, "MEMORY_ERROR {error}"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RegionRun {
    pub steps: Vec<Option<Label>>,
    pub last: RegionProgram,
    pub status: RegionStatus,
}

impl RegionRun {
    pub fn labels(&self) -> Vec<Label> {
        self.steps.iter().flatten().cloned().collect()
    }
}

pub fn run_region(p: &RegionProgram, fuel: Fuel) -> RegionRun {
    let mut s = p.supply();
    let mut cur = p.clone();
    let mut steps = Vec::new();
    loop {
        if steps.len() >= fuel.0 {
            return RegionRun { steps, last: cur, status: RegionStatus::Fuel };
        }
        match step_region_with(&cur, &mut s) {
            Ok(StepResult::Stepped { label, next }) => {
                steps.push(label);
                cur = next;
            }
            Ok(StepResult::Stuck(_)) => {
                let status = if region_is_answer(&cur) { RegionStatus::Value } else { RegionStatus::Stuck };
                return RegionRun { steps, last: cur, status };
            }
            Err(error) => return RegionRun { steps, last: cur, status: RegionStatus::MemoryError { error } },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::name::Name;

    fn r(s: &str) -> RegionId {
        Name::new(s)
    }

    fn x(s: &str) -> Ident {
        Name::new(s)
    }

    #[test]
    fn coherence_rules() {
        let none = BTreeSet::new();
        assert!(coh(&HeapCtx::default(), &none));
        assert!(!coh(&HeapCtx(vec![HeapEntry::BindTupleAt(x("x"), vec![x("y")], r("r"))]), &none));
        let h2 = HeapCtx(vec![
            HeapEntry::NewRegion(r("r")),
            HeapEntry::BindTupleAt(x("y"), vec![x("v1"), x("v2")], r("r")),
            HeapEntry::Disposed(r("r")),
        ]);
        assert!(coh(&h2, &none));
    }

    #[test]
    fn not_disposed_rules() {
        assert!(ndis(&r("r"), &HeapCtx::default()));
        assert!(!ndis(&r("r"), &HeapCtx(vec![HeapEntry::Disposed(r("r"))])));
        assert!(ndis(&r("r"), &HeapCtx(vec![HeapEntry::NewRegion(r("r")), HeapEntry::Disposed(r("s"))])));
        // reallocation after disposal resets
        assert!(ndis(&r("r"), &HeapCtx(vec![HeapEntry::NewRegion(r("r")), HeapEntry::Disposed(r("r"))])));
    }
}
