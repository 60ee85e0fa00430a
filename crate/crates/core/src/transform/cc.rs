use crate::name::{Ident, NameSupply};
use crate::source::Param;
use crate::types::Type;
use crate::typing::{cc_type, TypeCtx, TypeError};
use crate::vn::{Bindable, VnTerm, VnValue};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CcOptions {
    /// Insert existential packs and unpacks and carry annotations.
    pub typed: bool,
    /// Leave `@(halt, x)` untouched so `halt` keeps a plain function type.
    pub opt_halt: bool,
}

struct Converter {
    supply: NameSupply,
    opts: CcOptions,
    /// Types of the converted program's identifiers; only maintained when typed.
    ctx: TypeCtx,
}

fn proj(x: Ident, i: usize, y: Ident, rest: VnTerm) -> VnTerm {
    VnTerm::Let(x, Bindable::Proj(i, y), Box::new(rest))
}

fn value(x: Ident, v: VnValue, rest: VnTerm) -> VnTerm {
    VnTerm::Let(x, Bindable::Value(v), Box::new(rest))
}

impl Converter {
    fn lookup(&self, x: &Ident) -> Result<Type, TypeError> {
        self.ctx.get(x).cloned().ok_or_else(|| TypeError::Unbound { path: "closure conversion".into(), name: x.to_string() })
    }

    fn scoped<T>(&mut self, bs: Vec<(Ident, Type)>, f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.ctx.len();
        if self.opts.typed {
            for (x, t) in bs {
                self.ctx.push(x, t);
            }
        }
        let r = f(self);
        self.ctx.truncate(n);
        r
    }

    fn term(&mut self, m: &VnTerm) -> Result<VnTerm, TypeError> {
        match m {
            VnTerm::App(x, ys) => {
                if self.opts.opt_halt && x.is_halt() {
                    return Ok(m.clone());
                }
                let c = self.supply.fresh();
                let e = self.supply.fresh();
                let call = VnTerm::App(c.clone(), std::iter::once(e.clone()).chain(ys.iter().cloned()).collect());
                if self.opts.typed {
                    let p = self.supply.fresh();
                    Ok(proj(p.clone(), 1, x.clone(), proj(c, 1, p.clone(), proj(e, 2, p, call))))
                } else {
                    Ok(proj(c, 1, x.clone(), proj(e, 2, x.clone(), call)))
                }
            }
            VnTerm::Let(x, Bindable::Value(VnValue::Lam(ps, body)), rest) => self.function(x, ps, body, rest),
            VnTerm::Let(x, b, rest) => {
                let ty = if self.opts.typed { Some(self.bindable_type(b)?) } else { None };
                let rest2 = self.scoped(ty.into_iter().map(|t| (x.clone(), t)).collect(), |c| c.term(rest))?;
                Ok(VnTerm::Let(x.clone(), b.clone(), Box::new(rest2)))
            }
            VnTerm::Pre(l, body) => Ok(VnTerm::Pre(l.clone(), Box::new(self.term(body)?))),
        }
    }

    fn bindable_type(&self, b: &Bindable) -> Result<Type, TypeError> {
        match b {
            Bindable::Value(VnValue::Tuple(ys)) => Ok(Type::Product(ys.iter().map(|y| self.lookup(y)).collect::<Result<_, _>>()?)),
            Bindable::Value(VnValue::Pack(_, t)) => Ok(t.clone()),
            Bindable::Proj(i, y) => match self.lookup(y)? {
                Type::Product(ts) if *i >= 1 && *i <= ts.len() => Ok(ts[*i - 1].clone()),
                other => Err(TypeError::Mismatch {
                    path: "closure conversion".into(),
                    expected: format!("a product with a component {i}"),
                    found: other.to_string(),
                }),
            },
            Bindable::Value(VnValue::Lam(..)) => unreachable!(),
        }
    }

    fn function(&mut self, x: &Ident, ps: &[Param], body: &VnTerm, rest: &VnTerm) -> Result<VnTerm, TypeError> {
        let lam = Bindable::Value(VnValue::Lam(ps.to_vec(), Box::new(body.clone())));
        let zs = lam.free_vars_ordered();
        let code = self.supply.fresh();
        let env_param = self.supply.fresh();
        let env = self.supply.fresh();
        let typed = self.opts.typed;

        let (env_ty, param_tys) = if typed {
            let env_ty = Type::Product(zs.iter().map(|z| self.lookup(z)).collect::<Result<_, _>>()?);
            let tys = ps
                .iter()
                .map(|p| {
                    p.ty.as_ref().map(cc_type).ok_or_else(|| TypeError::MissingAnnotation {
                        path: "closure conversion".into(),
                        name: p.name.to_string(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            (Some(env_ty), tys)
        } else {
            (None, Vec::new())
        };

        // Inside the code, the context is the environment, the parameters and the unpacked free variables.
        let mut inner_bs: Vec<(Ident, Type)> = Vec::new();
        if let Some(t) = &env_ty {
            inner_bs.push((env_param.clone(), t.clone()));
            inner_bs.extend(ps.iter().map(|p| p.name.clone()).zip(param_tys.iter().cloned()));
            if let Type::Product(ts) = t {
                inner_bs.extend(zs.iter().cloned().zip(ts.iter().cloned()));
            }
        }
        let saved = std::mem::take(&mut self.ctx);
        let converted = self.scoped(inner_bs, |c| c.term(body));
        self.ctx = saved;
        let converted = converted?;
        let code_body = zs.iter().enumerate().rev().fold(converted, |acc, (i, z)| proj(z.clone(), i + 1, env_param.clone(), acc));

        let mut params = vec![Param { name: env_param, ty: env_ty.clone() }];
        params.extend(ps.iter().enumerate().map(|(i, p)| Param { name: p.name.clone(), ty: param_tys.get(i).cloned() }));

        let mut outer_bs = Vec::new();
        let closure_ty = if typed {
            let env_ty = env_ty.clone().unwrap();
            let code_ty = Type::arrow(std::iter::once(env_ty.clone()).chain(param_tys.iter().cloned()).collect(), Type::Result);
            let source_ty = Type::arrow(ps.iter().map(|p| p.ty.clone().unwrap()).collect(), Type::Result);
            outer_bs.push((code.clone(), code_ty.clone()));
            outer_bs.push((env.clone(), env_ty.clone()));
            Some((Type::Product(vec![code_ty, env_ty]), cc_type(&source_ty)))
        } else {
            None
        };

        let pair = self.supply.fresh();
        let rest_bs = match &closure_ty {
            Some((pair_ty, packed_ty)) => {
                let mut bs = outer_bs.clone();
                bs.push((pair.clone(), pair_ty.clone()));
                bs.push((x.clone(), packed_ty.clone()));
                bs
            }
            None => Vec::new(),
        };
        let rest2 = self.scoped(rest_bs, |c| c.term(rest))?;

        let tail = match &closure_ty {
            Some((_, packed_ty)) => value(
                pair.clone(),
                VnValue::Tuple(vec![code.clone(), env.clone()]),
                value(x.clone(), VnValue::Pack(pair, packed_ty.clone()), rest2),
            ),
            None => value(x.clone(), VnValue::Tuple(vec![code.clone(), env.clone()]), rest2),
        };
        Ok(value(
            code,
            VnValue::Lam(params, Box::new(code_body)),
            value(env, VnValue::Tuple(zs), tail),
        ))
    }
}

/// Untyped closure conversion.
pub fn closure_convert(m: &VnTerm, opts: CcOptions) -> VnTerm {
    let opts = CcOptions { typed: false, ..opts };
    let mut c = Converter { supply: m.fresh_supply(), opts, ctx: TypeCtx::new() };
    c.term(&m.strip_types()).expect("untyped closure conversion cannot fail")
}

/// Typed closure conversion under the already converted context `cc_ctx`, which must type `halt`.
pub fn closure_convert_typed(m: &VnTerm, cc_ctx: &TypeCtx, opt_halt: bool) -> Result<VnTerm, TypeError> {
    let mut c = Converter { supply: m.fresh_supply(), opts: CcOptions { typed: true, opt_halt }, ctx: cc_ctx.clone() };
    c.term(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_ctx, parse_vn, parse_vn_mode, Mode};

    #[test]
    fn two_block_closure() {
        let m = parse_vn("let z1 = \\x k. k @ (y) in halt @ (z1)").unwrap();
        let expected = parse_vn_mode(
            "let c = \\e x k. (let y = proj 1 e in let c = proj 1 k in let e = proj 2 k in c @ (e, y)) in \
             let e = (y) in let z1 = (c, e) in let c = proj 1 halt in let e = proj 2 halt in c @ (e, z1)",
            Mode::Internal,
        )
        .unwrap();
        let out = closure_convert(&m, CcOptions::default());
        assert!(alpha_eq(&out, &expected), "{out:#}");
    }

    #[test]
    fn application_opens_the_pair() {
        let out = closure_convert(&parse_vn("x @ (y)").unwrap(), CcOptions::default());
        let expected = parse_vn("let c = proj 1 x in let e = proj 2 x in c @ (e, y)").unwrap();
        assert!(alpha_eq(&out, &expected));
    }

    #[test]
    fn opt_halt_keeps_halt_calls() {
        let m = parse_vn("let z1 = \\x k. k @ (y) in halt @ (z1)").unwrap();
        let out = closure_convert(&m, CcOptions { typed: false, opt_halt: true });
        assert!(matches!(last_call(&out), VnTerm::App(h, _) if h.is_halt()));
    }

    fn last_call(t: &VnTerm) -> &VnTerm {
        match t {
            VnTerm::Let(_, _, m) | VnTerm::Pre(_, m) => last_call(m),
            app => app,
        }
    }

    #[test]
    fn typed_conversion_matches_pack_form() {
        let m = parse_vn("let z1 = \\(x: t2) (k: t1 -> R). k @ (y) in halt @ (z1)").unwrap();
        let ctx = TypeCtx::from_pairs(
            parse_ctx("y: t1, halt: exists u. *((u, exists v. *((v, t2, exists w. *((w, t1) -> R, w)) -> R, v)) -> R, u)").unwrap(),
        );
        let out = closure_convert_typed(&m, &ctx, false).unwrap();
        let expected = parse_vn_mode(
            "let c = \\e x k. (let y = proj 1 e in let k = proj 1 k in let c = proj 1 k in let e = proj 2 k in c @ (e, y)) in \
             let e = (y) in let z1 = (c, e) in let z1 = (z1) in let halt = proj 1 halt in let c = proj 1 halt in \
             let e = proj 2 halt in c @ (e, z1)",
            Mode::Internal,
        )
        .unwrap();
        assert!(alpha_eq(&out, &expected), "{out:#}");
        crate::typing::typecheck_vn(&ctx, &out).unwrap();
    }
}
