//! Region erasure and the single-region enrichment `ren`.

use super::effect::RegionCtx;
use super::syntax::{Effect, RBindable, RDef, RParam, RTerm, RegionProgram, RegionType};
use crate::name::{Name, RegionId};
use crate::source::Param;
use crate::types::Type;
use crate::typing::TypeCtx;
use crate::vn::{Bindable, Def, HoistProgram, VnTerm, VnValue};
use serde::{Deserialize, Serialize};

/// The region allocated around `main` and abstracted by every function under `ren`.
pub const GLOBAL_REGION: &str = "r";

pub fn region_erase_type(a: &RegionType) -> Type {
    match a {
        RegionType::Var(t) => Type::Var(t.clone()),
        RegionType::Arrow(_, dom, _) => Type::arrow(dom.iter().map(region_erase_type).collect(), Type::Result),
        RegionType::Unit => Type::Product(vec![]),
        RegionType::ProductAt(ts, _) => Type::Product(ts.iter().map(region_erase_type).collect()),
        RegionType::ExistsAt(t, b, _) => Type::Exists(t.clone(), Box::new(region_erase_type(b))),
    }
}

pub fn region_erase_ctx(ctx: &RegionCtx) -> TypeCtx {
    TypeCtx::from_pairs(ctx.entries().iter().map(|(x, t)| (x.clone(), region_erase_type(t))).collect())
}

pub fn region_erase_term(t: &RTerm) -> VnTerm {
    match t {
        RTerm::App(f, _, ys) => VnTerm::App(f.clone(), ys.clone()),
        RTerm::Let(x, b, m) => {
            let b2 = match b {
                RBindable::Unit => Bindable::Value(VnValue::Tuple(vec![])),
                RBindable::TupleAt(ys, _) => Bindable::Value(VnValue::Tuple(ys.clone())),
                RBindable::Pack(y, ann) => Bindable::Value(VnValue::Pack(y.clone(), region_erase_type(ann))),
                RBindable::Proj(i, y) => Bindable::Proj(*i, y.clone()),
            };
            VnTerm::Let(x.clone(), b2, Box::new(region_erase_term(m)))
        }
        RTerm::Pre(l, m) => VnTerm::Pre(l.clone(), Box::new(region_erase_term(m))),
        RTerm::NewReg(_, m) | RTerm::Dispose(_, m) => region_erase_term(m),
    }
}

pub fn region_erase(p: &RegionProgram) -> HoistProgram {
    HoistProgram {
        defs: p
            .defs
            .iter()
            .map(|d| Def {
                name: d.name.clone(),
                params: d.params.iter().map(|q| Param { name: q.name.clone(), ty: q.ty.as_ref().map(region_erase_type) }).collect(),
                body: region_erase_term(&d.body),
            })
            .collect(),
        main: region_erase_term(&p.main),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
pub enum EnrichError {
    #[error("`{name}` has type {ty}; free variables of product or existential type have no region to live in")]
    LocatedFreeVariable { name: String, ty: String },
    #[error("type {0} is not a value type")]
    NotAValueType(String),
}

fn global() -> RegionId {
    Name::new(GLOBAL_REGION)
}

/// `ren` on types.
pub fn region_enrich_type(a: &Type) -> Result<RegionType, EnrichError> {
    let r = global();
    Ok(match a {
        Type::Var(t) => RegionType::Var(t.clone()),
        Type::Arrow(dom, cod) => {
            if **cod != Type::Result {
                return Err(EnrichError::NotAValueType(a.to_string()));
            }
            RegionType::Arrow(vec![r.clone()], dom.iter().map(region_enrich_type).collect::<Result<_, _>>()?, Effect::single(&r))
        }
        Type::Product(ts) if ts.is_empty() => RegionType::Unit,
        Type::Product(ts) => RegionType::ProductAt(ts.iter().map(region_enrich_type).collect::<Result<_, _>>()?, r),
        Type::Exists(t, b) => RegionType::ExistsAt(t.clone(), Box::new(region_enrich_type(b)?), r),
        Type::Result => return Err(EnrichError::NotAValueType(a.to_string())),
    })
}

/// `ren` on a context whose entries have no product or existential types.
pub fn region_enrich_ctx(ctx: &TypeCtx) -> Result<RegionCtx, EnrichError> {
    let mut out = Vec::new();
    for (x, t) in ctx.entries() {
        if matches!(t, Type::Product(ts) if !ts.is_empty()) || matches!(t, Type::Exists(..)) {
            return Err(EnrichError::LocatedFreeVariable { name: x.to_string(), ty: t.to_string() });
        }
        out.push((x.clone(), region_enrich_type(t)?));
    }
    Ok(RegionCtx::from_pairs(out))
}

fn enrich_term(t: &VnTerm) -> Result<RTerm, EnrichError> {
    let r = global();
    Ok(match t {
        VnTerm::App(f, ys) => RTerm::App(f.clone(), vec![r], ys.clone()),
        VnTerm::Let(x, b, m) => {
            let b2 = match b {
                Bindable::Value(VnValue::Tuple(ys)) if ys.is_empty() => RBindable::Unit,
                Bindable::Value(VnValue::Tuple(ys)) => RBindable::TupleAt(ys.clone(), r),
                Bindable::Value(VnValue::Pack(y, ann)) => RBindable::Pack(y.clone(), region_enrich_type(ann)?),
                Bindable::Proj(i, y) => RBindable::Proj(*i, y.clone()),
                Bindable::Value(VnValue::Lam(..)) => unreachable!("hoisted main terms and bodies are λ-free"),
            };
            RTerm::Let(x.clone(), b2, Box::new(enrich_term(m)?))
        }
        VnTerm::Pre(l, m) => RTerm::Pre(l.clone(), Box::new(enrich_term(m)?)),
    })
}

/// `ren` on programs: one region allocated around `main`, abstracted by every function, holding
/// every tuple, and passed at every call.
pub fn region_enrich(p: &HoistProgram) -> Result<RegionProgram, EnrichError> {
    let r = global();
    let mut defs = Vec::new();
    for d in &p.defs {
        let params = d
            .params
            .iter()
            .map(|q| Ok(RParam { name: q.name.clone(), ty: q.ty.as_ref().map(region_enrich_type).transpose()? }))
            .collect::<Result<Vec<_>, EnrichError>>()?;
        defs.push(RDef { name: d.name.clone(), regions: vec![r.clone()], params, effect: Some(Effect::single(&r)), body: enrich_term(&d.body)? });
    }
    Ok(RegionProgram { defs, main: RTerm::NewReg(r, Box::new(enrich_term(&p.main)?)) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;
    use crate::parse::{parse_hoist, parse_type};
    use crate::regions::parse::{parse_region_program, parse_region_type};

    #[test]
    fn erasing_types() {
        let t = parse_region_type("forall r. (*(t1, t2)@r) -{r}-> R").unwrap();
        assert_eq!(region_erase_type(&t), parse_type("*(t1, t2) -> R").unwrap());
        let u = parse_region_type("(exists t. *(t, (t) -{}-> R)@r)@r").unwrap();
        assert_eq!(region_erase_type(&u), parse_type("exists t. *(t, t -> R)").unwrap());
    }

    #[test]
    fn erasing_applications() {
        let p = parse_region_program("newreg r in x @ [r, s] (y, z)").unwrap();
        assert_eq!(region_erase(&p).main, VnTerm::app("x", &["y", "z"]));
    }

    #[test]
    fn enrich_call_passes_the_region() {
        let p = parse_hoist("x @ (y)").unwrap();
        let q = region_enrich(&p).unwrap();
        assert_eq!(q.main, RTerm::NewReg(global(), Box::new(RTerm::App(Name::new("x"), vec![global()], vec![Name::new("y")]))));
    }

    #[test]
    fn erase_undoes_enrich() {
        let p = parse_hoist(
            "let f = \\(k: t -> R) (a: t). let p = (a, a) in let q = proj 2 p in l> k @ (q) in
             let u = () in f @ (h, v)",
        )
        .unwrap();
        let q = region_enrich(&p).unwrap();
        let back = region_erase(&q);
        assert!(back.alpha_eq(&p));
        for (d1, d2) in back.defs.iter().zip(&p.defs) {
            for (a, b) in d1.params.iter().zip(&d2.params) {
                assert!(a.ty.as_ref().unwrap().alpha_eq(b.ty.as_ref().unwrap()));
            }
        }
    }

    #[test]
    fn located_free_variables_are_rejected() {
        let ctx = TypeCtx::from_pairs(vec![(Name::new("p"), parse_type("*(t, t)").unwrap())]);
        assert!(matches!(region_enrich_ctx(&ctx), Err(EnrichError::LocatedFreeVariable { .. })));
    }
}
