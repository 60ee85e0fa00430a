use super::check::TypeCtx;
use crate::name::{Ident, Name};
use crate::types::Type;

/// Name of the type variable bound by closure types. Reserved, so it never clashes with user types.
pub const EXISTS_VAR: &str = "_t";

pub fn cps_type(a: &Type) -> Type {
    match a {
        Type::Var(_) | Type::Result => a.clone(),
        Type::Arrow(dom, cod) => {
            let mut d: Vec<Type> = dom.iter().map(cps_type).collect();
            d.push(Type::neg(cps_type(cod)));
            Type::arrow(d, Type::Result)
        }
        Type::Product(ts) => Type::Product(ts.iter().map(cps_type).collect()),
        Type::Exists(t, b) => Type::Exists(t.clone(), Box::new(cps_type(b))),
    }
}

pub fn cc_type(a: &Type) -> Type {
    match a {
        Type::Var(_) | Type::Result => a.clone(),
        Type::Arrow(dom, _) => {
            let t = Name::new(EXISTS_VAR);
            let mut d = vec![Type::Var(t.clone())];
            d.extend(dom.iter().map(cc_type));
            Type::Exists(t.clone(), Box::new(Type::Product(vec![Type::arrow(d, Type::Result), Type::Var(t)])))
        }
        Type::Product(ts) => Type::Product(ts.iter().map(cc_type).collect()),
        Type::Exists(t, b) => Type::Exists(t.clone(), Box::new(cc_type(b))),
    }
}

pub fn compile_type(a: &Type) -> Type {
    cc_type(&cps_type(a))
}

pub fn cps_ctx(ctx: &TypeCtx) -> TypeCtx {
    ctx.map(|_, t| cps_type(t))
}

pub fn cc_ctx(ctx: &TypeCtx) -> TypeCtx {
    ctx.map(|_, t| cc_type(t))
}

pub fn compile_ctx(ctx: &TypeCtx) -> TypeCtx {
    ctx.map(|_, t| compile_type(t))
}

/// Type of `halt` after closure conversion for a program of source type `a`.
pub fn halt_type(a: &Type, opt_halt: bool) -> (Ident, Type) {
    let ty = if opt_halt { Type::neg(compile_type(a)) } else { cc_type(&Type::neg(cps_type(a))) };
    (Name::halt(), ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_type;

    fn ty(s: &str) -> Type {
        parse_type(s).unwrap()
    }

    #[test]
    fn cps_of_function() {
        assert_eq!(cps_type(&ty("t2 -> t1")), ty("(t2, t1 -> R) -> R"));
        assert_eq!(cps_type(&ty("t")), ty("t"));
        assert_eq!(cps_type(&ty("*()")), ty("*()"));
    }

    #[test]
    fn cc_of_continuation() {
        assert!(cc_type(&ty("a -> R")).alpha_eq(&ty("exists u. *((u, a) -> R, u)")));
    }

    #[test]
    fn compiled_types_only_return_results() {
        for s in ["t2 -> t1", "(t -> t) -> *(t, t -> t)", "*(t, (t, t) -> t)"] {
            assert!(compile_type(&ty(s)).is_result_typed());
        }
    }
}
