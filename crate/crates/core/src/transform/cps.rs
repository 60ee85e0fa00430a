use crate::cps::{Cont, CpsTerm, CpsValue};
use crate::name::{Ident, Name, NameSupply};
use crate::source::{Param, Term};
use crate::types::Type;
use crate::typing::{cps_type, typecheck_source, TypeCtx, TypeError};
use std::collections::HashMap;

struct Translator {
    supply: NameSupply,
    ctx: Option<TypeCtx>,
    value_tuples: bool,
}

impl Translator {
    fn param(&self, x: Ident, ty: &Option<Type>) -> Param {
        Param { name: x, ty: ty.as_ref().map(cps_type) }
    }

    fn type_of(&self, m: &Term) -> Result<Option<Type>, TypeError> {
        match &self.ctx {
            Some(ctx) => typecheck_source(ctx, m).map(Some),
            None => Ok(None),
        }
    }

    fn with_binders<T>(&mut self, bs: &[(Ident, Option<Type>)], f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.ctx.as_ref().map_or(0, TypeCtx::len);
        if let Some(ctx) = &mut self.ctx {
            for (x, t) in bs {
                ctx.push(x.clone(), t.clone().expect("typed translation needs annotated binders"));
            }
        }
        let r = f(self);
        if let Some(ctx) = &mut self.ctx {
            ctx.truncate(n);
        }
        r
    }

    /// `ψ(V)`
    fn value(&mut self, v: &Term) -> Result<CpsValue, TypeError> {
        match v {
            Term::Var(x) => Ok(CpsValue::Var(x.clone())),
            Term::Lam(ps, body) => {
                let bs: Vec<(Ident, Option<Type>)> = ps.iter().map(|p| (p.name.clone(), p.ty.clone())).collect();
                self.with_binders(&bs, |t| {
                    let body_ty = t.type_of(body)?;
                    let k = t.supply.fresh();
                    let mut params: Vec<Param> = ps.iter().map(|p| t.param(p.name.clone(), &p.ty)).collect();
                    params.push(Param { name: k.clone(), ty: body_ty.map(|b| Type::neg(cps_type(&b))) });
                    let m = t.colon(body, Cont::Var(k))?;
                    Ok(CpsValue::Lam(params, Box::new(m)))
                })
            }
            Term::Tuple(ts) => Ok(CpsValue::Tuple(ts.iter().map(|t| self.value(t)).collect::<Result<_, _>>()?)),
            _ => unreachable!("ψ applied to a non-value"),
        }
    }

    fn apply_cont(&mut self, v: CpsValue, k: Cont) -> CpsTerm {
        match k {
            Cont::Var(k) => CpsTerm::App(CpsValue::Var(k), vec![v]),
            Cont::Lam(p, body) => {
                let mut map = HashMap::new();
                map.insert(p.name, v);
                body.subst_with(&map, &mut self.supply)
            }
        }
    }

    /// Translates `m1 … mn` in sequence, naming their results `xs`, then continues with `inner`.
    fn sequence(&mut self, ms: &[&Term], xs: &[Ident], inner: CpsTerm) -> Result<CpsTerm, TypeError> {
        let mut acc = inner;
        for (m, x) in ms.iter().zip(xs).rev() {
            let ty = self.type_of(m)?;
            let p = self.param(x.clone(), &ty);
            acc = self.colon(m, Cont::Lam(p, acc))?;
        }
        Ok(acc)
    }

    /// The colon translation `M : K`.
    fn colon(&mut self, m: &Term, k: Cont) -> Result<CpsTerm, TypeError> {
        if m.is_value() && (self.value_tuples || !matches!(m, Term::Tuple(_))) {
            let v = self.value(m)?;
            return Ok(self.apply_cont(v, k));
        }
        match m {
            Term::App(f, args) => {
                let ms: Vec<&Term> = std::iter::once(&**f).chain(args.iter()).collect();
                let xs: Vec<Ident> = ms.iter().map(|_| self.supply.fresh()).collect();
                let mut call_args: Vec<CpsValue> = xs[1..].iter().cloned().map(CpsValue::Var).collect();
                call_args.push(k.to_value());
                let inner = CpsTerm::App(CpsValue::Var(xs[0].clone()), call_args);
                self.sequence(&ms, &xs, inner)
            }
            Term::Tuple(ts) => {
                let ms: Vec<&Term> = ts.iter().collect();
                let xs: Vec<Ident> = ms.iter().map(|_| self.supply.fresh()).collect();
                let tuple = CpsValue::Tuple(xs.iter().cloned().map(CpsValue::Var).collect());
                let inner = self.apply_cont(tuple, k);
                self.sequence(&ms, &xs, inner)
            }
            Term::Let(x, a, b) => {
                let a_ty = self.type_of(a)?;
                let k_fv = match &k {
                    Cont::Var(v) => [v.clone()].into_iter().collect(),
                    Cont::Lam(..) => k.to_value().free_vars(),
                };
                let (x, b) = if k_fv.contains(x) {
                    let z = self.supply.fresh();
                    let b2 = b.subst_with(&[(x.clone(), Term::Var(z.clone()))].into_iter().collect(), &mut self.supply);
                    (z, b2)
                } else {
                    (x.clone(), (**b).clone())
                };
                let rest = self.with_binders(&[(x.clone(), a_ty.clone())], |t| t.colon(&b, k))?;
                let p = self.param(x, &a_ty);
                self.colon(a, Cont::Lam(p, rest))
            }
            Term::Proj(i, a) => {
                let a_ty = self.type_of(a)?;
                let x = self.supply.fresh();
                let y = self.supply.fresh();
                let tail = self.apply_cont(CpsValue::Var(y.clone()), k);
                let inner = CpsTerm::LetProj(y, *i, CpsValue::Var(x.clone()), Box::new(tail));
                let p = self.param(x, &a_ty);
                self.colon(a, Cont::Lam(p, inner))
            }
            Term::Pre(l, a) => Ok(CpsTerm::Pre(l.clone(), Box::new(self.colon(a, k)?))),
            Term::Post(l, a) => {
                let a_ty = self.type_of(a)?;
                let x = self.supply.fresh();
                let tail = self.apply_cont(CpsValue::Var(x.clone()), k);
                let p = self.param(x, &a_ty);
                self.colon(a, Cont::Lam(p, CpsTerm::Pre(l.clone(), Box::new(tail))))
            }
            Term::Var(_) | Term::Lam(..) => unreachable!(),
        }
    }

    fn top(&mut self, m: &Term) -> Result<CpsTerm, TypeError> {
        let ty = self.type_of(m)?;
        let x = self.supply.fresh();
        let halt = CpsTerm::App(CpsValue::Var(Name::halt()), vec![CpsValue::Var(x.clone())]);
        let p = self.param(x, &ty);
        self.colon(m, Cont::Lam(p, halt))
    }
}

/// CPS translation `M : λx.@(halt, x)`; annotations are dropped.
pub fn cps(m: &Term) -> CpsTerm {
    let m = m.strip_types();
    let mut t = Translator { supply: m.fresh_supply(&[]), ctx: None, value_tuples: true };
    t.top(&m).expect("untyped translation cannot fail")
}

/// CPS translation carrying annotations through: parameters get `cps(A)`, continuations `¬cps(B)`.
pub fn cps_typed(ctx: &TypeCtx, m: &Term) -> Result<CpsTerm, TypeError> {
    typecheck_source(ctx, m)?;
    let mut t = Translator { supply: m.fresh_supply(&[]), ctx: Some(ctx.clone()), value_tuples: true };
    t.top(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_cps, parse_term};

    #[test]
    fn duplicating_application() {
        let m = parse_term("(\\x. x @ (x @ (x))) @ (\\z. z)").unwrap();
        let expected = parse_cps(
            "(\\x k. x @ (x, \\y. x @ (y, k))) @ (\\x k. k @ (x), \\x. halt @ (x))",
        )
        .unwrap();
        assert!(alpha_eq(&cps(&m), &expected), "{}", cps(&m));
    }

    #[test]
    fn variable_goes_to_halt() {
        assert_eq!(cps(&parse_term("x").unwrap()), parse_cps("halt @ (x)").unwrap());
    }

    #[test]
    fn post_label_under_lambda_eta_expands() {
        let m = parse_term("\\x. x @ (x) >l").unwrap();
        let expected = parse_cps("halt @ (\\x k. x @ (x, \\x. l> k @ (x)))").unwrap();
        assert!(alpha_eq(&cps(&m), &expected));
        let erased = parse_cps("halt @ (\\x k. x @ (x, \\x. k @ (x)))").unwrap();
        assert!(alpha_eq(&cps(&m).erase(), &erased));
        let direct = parse_cps("halt @ (\\x k. x @ (x, k))").unwrap();
        assert!(alpha_eq(&cps(&m.erase()), &direct));
    }

    #[test]
    fn let_binder_does_not_capture_continuation() {
        let m = parse_term("f @ (let y = b in y, y)").unwrap();
        let out = cps(&m);
        let expected = parse_cps("f @ (b, y, \\x. halt @ (x))").unwrap();
        assert!(alpha_eq(&out, &expected), "{out}");
    }

    #[test]
    fn tuple_clauses_agree() {
        for src in ["(a, \\x. x)", "(a, (b, c), ())", "f @ ((a, b))"] {
            let m = parse_term(src).unwrap();
            let by_value = cps(&m);
            let mut t = Translator { supply: m.fresh_supply(&[]), ctx: None, value_tuples: false };
            let general = t.top(&m).unwrap();
            assert!(alpha_eq(&by_value, &general), "{by_value} vs {general}");
        }
        let expected = parse_cps("halt @ ((a, \\x k. k @ (x)))").unwrap();
        assert!(alpha_eq(&cps(&parse_term("(a, \\x. x)").unwrap()), &expected));
    }
}
