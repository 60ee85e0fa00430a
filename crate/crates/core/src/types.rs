//! Types shared by the source, CPS and value-named calculi.

use crate::name::{Name, NameSupply, TyVar};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Type {
    Var(TyVar),
    Arrow(Vec<Type>, Box<Type>),
    Product(Vec<Type>),
    Exists(TyVar, Box<Type>),
    /// The distinguished type of results.
    Result,
}

impl Type {
    pub fn var(s: &str) -> Type {
        Type::Var(Name::new(s))
    }

    pub fn arrow(dom: Vec<Type>, cod: Type) -> Type {
        Type::Arrow(dom, Box::new(cod))
    }

    /// `A -> R`
    pub fn neg(a: Type) -> Type {
        Type::arrow(vec![a], Type::Result)
    }

    pub fn ftv(&self) -> BTreeSet<TyVar> {
        let mut out = BTreeSet::new();
        self.collect_ftv(&mut Vec::new(), &mut out);
        out
    }

    fn collect_ftv(&self, bound: &mut Vec<TyVar>, out: &mut BTreeSet<TyVar>) {
        match self {
            Type::Var(v) => {
                if !bound.contains(v) {
                    out.insert(v.clone());
                }
            }
            Type::Arrow(d, c) => {
                for t in d {
                    t.collect_ftv(bound, out);
                }
                c.collect_ftv(bound, out);
            }
            Type::Product(ts) => {
                for t in ts {
                    t.collect_ftv(bound, out);
                }
            }
            Type::Exists(v, b) => {
                bound.push(v.clone());
                b.collect_ftv(bound, out);
                bound.pop();
            }
            Type::Result => {}
        }
    }

    pub fn has_ftv(&self, v: &TyVar) -> bool {
        self.ftv().contains(v)
    }

    fn all_names(&self, out: &mut Vec<Name>) {
        match self {
            Type::Var(v) => out.push(v.clone()),
            Type::Arrow(d, c) => {
                d.iter().for_each(|t| t.all_names(out));
                c.all_names(out);
            }
            Type::Product(ts) => ts.iter().for_each(|t| t.all_names(out)),
            Type::Exists(v, b) => {
                out.push(v.clone());
                b.all_names(out);
            }
            Type::Result => {}
        }
    }

    /// Capture-avoiding `[b/t]self`.
    pub fn subst(&self, t: &TyVar, b: &Type) -> Type {
        match self {
            Type::Var(v) if v == t => b.clone(),
            Type::Var(_) | Type::Result => self.clone(),
            Type::Arrow(d, c) => Type::Arrow(d.iter().map(|x| x.subst(t, b)).collect(), Box::new(c.subst(t, b))),
            Type::Product(ts) => Type::Product(ts.iter().map(|x| x.subst(t, b)).collect()),
            Type::Exists(v, body) => {
                if v == t {
                    return self.clone();
                }
                if b.has_ftv(v) {
                    let mut names = Vec::new();
                    b.all_names(&mut names);
                    body.all_names(&mut names);
                    let mut s = NameSupply::above("_t", names.iter());
                    let fresh = s.fresh();
                    let renamed = body.subst(v, &Type::Var(fresh.clone()));
                    Type::Exists(fresh, Box::new(renamed.subst(t, b)))
                } else {
                    Type::Exists(v.clone(), Box::new(body.subst(t, b)))
                }
            }
        }
    }

    /// Equality up to renaming of existential binders.
    pub fn alpha_eq(&self, other: &Type) -> bool {
        alpha(self, other, &mut Vec::new())
    }

    /// Finds `B` with `[B/t]pattern ≡ self` up to α, if any.
    pub fn match_witness(&self, t: &TyVar, pattern: &Type) -> Option<Type> {
        let mut witness = None;
        if matches(pattern, self, t, &mut Vec::new(), &mut witness) {
            // An unconstrained witness (t unused) is arbitrary; pick the empty product.
            Some(witness.unwrap_or(Type::Product(vec![])))
        } else {
            None
        }
    }

    /// Every arrow codomain is `R`.
    pub fn is_result_typed(&self) -> bool {
        match self {
            Type::Var(_) | Type::Result => true,
            Type::Arrow(d, c) => **c == Type::Result && d.iter().all(Type::is_result_typed),
            Type::Product(ts) => ts.iter().all(Type::is_result_typed),
            Type::Exists(_, b) => b.is_result_typed(),
        }
    }
}

fn alpha(a: &Type, b: &Type, env: &mut Vec<(TyVar, TyVar)>) -> bool {
    match (a, b) {
        (Type::Var(x), Type::Var(y)) => {
            for (l, r) in env.iter().rev() {
                if l == x || r == y {
                    return l == x && r == y;
                }
            }
            x == y
        }
        (Type::Result, Type::Result) => true,
        (Type::Arrow(d1, c1), Type::Arrow(d2, c2)) => {
            d1.len() == d2.len() && d1.iter().zip(d2).all(|(x, y)| alpha(x, y, env)) && alpha(c1, c2, env)
        }
        (Type::Product(t1), Type::Product(t2)) => {
            t1.len() == t2.len() && t1.iter().zip(t2).all(|(x, y)| alpha(x, y, env))
        }
        (Type::Exists(v1, b1), Type::Exists(v2, b2)) => {
            env.push((v1.clone(), v2.clone()));
            let r = alpha(b1, b2, env);
            env.pop();
            r
        }
        _ => false,
    }
}

fn matches(p: &Type, target: &Type, t: &TyVar, env: &mut Vec<(TyVar, TyVar)>, witness: &mut Option<Type>) -> bool {
    match p {
        Type::Var(v) => {
            for (l, r) in env.iter().rev() {
                if l == v {
                    return matches!(target, Type::Var(y) if y == r);
                }
            }
            if v == t {
                // The witness may not mention binders of the target that are in scope here.
                let ftv = target.ftv();
                if env.iter().any(|(_, r)| ftv.contains(r)) {
                    return false;
                }
                match witness {
                    Some(w) => w.alpha_eq(target),
                    None => {
                        *witness = Some(target.clone());
                        true
                    }
                }
            } else {
                match target {
                    Type::Var(y) => y == v && !env.iter().any(|(_, r)| r == y),
                    _ => false,
                }
            }
        }
        Type::Result => *target == Type::Result,
        Type::Arrow(d1, c1) => match target {
            Type::Arrow(d2, c2) => {
                d1.len() == d2.len()
                    && d1.iter().zip(d2).all(|(x, y)| matches(x, y, t, env, witness))
                    && matches(c1, c2, t, env, witness)
            }
            _ => false,
        },
        Type::Product(t1) => match target {
            Type::Product(t2) => t1.len() == t2.len() && t1.iter().zip(t2).all(|(x, y)| matches(x, y, t, env, witness)),
            _ => false,
        },
        Type::Exists(v1, b1) => match target {
            Type::Exists(v2, b2) => {
                if v1 == t {
                    // t is shadowed: no witness position below.
                    return alpha(b1, b2, &mut {
                        let mut e = env.clone();
                        e.push((v1.clone(), v2.clone()));
                        e
                    });
                }
                env.push((v1.clone(), v2.clone()));
                let r = matches(b1, b2, t, env, witness);
                env.pop();
                r
            }
            _ => false,
        },
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Var(v) => write!(f, "{v}"),
            Type::Result => write!(f, "R"),
            Type::Product(ts) => {
                write!(f, "*(")?;
                for (i, t) in ts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            Type::Arrow(d, c) => {
                if d.len() == 1 && matches!(d[0], Type::Var(_) | Type::Result | Type::Product(_)) {
                    write!(f, "{} -> {}", d[0], c)
                } else {
                    write!(f, "(")?;
                    for (i, t) in d.iter().enumerate() {
                        if i > 0 {
                            write!(f, ", ")?;
                        }
                        write!(f, "{t}")?;
                    }
                    write!(f, ") -> {c}")
                }
            }
            Type::Exists(v, b) => write!(f, "exists {v}. {b}"),
        }
    }
}

impl fmt::Debug for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex(v: &str, b: Type) -> Type {
        Type::Exists(Name::new(v), Box::new(b))
    }

    #[test]
    fn exists_alpha() {
        let a = ex("t", Type::Product(vec![Type::var("t")]));
        let b = ex("u", Type::Product(vec![Type::var("u")]));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&ex("u", Type::Product(vec![Type::var("t")]))));
    }

    #[test]
    fn witness_matching() {
        let t = Name::new("t");
        let pat = Type::Product(vec![Type::var("t"), Type::var("a")]);
        let target = Type::Product(vec![Type::Product(vec![]), Type::var("a")]);
        assert_eq!(target.match_witness(&t, &pat), Some(Type::Product(vec![])));
        let bad = Type::Product(vec![Type::var("b"), Type::var("b")]);
        assert_eq!(bad.match_witness(&t, &pat), None);
    }

    #[test]
    fn witness_cannot_capture() {
        let t = Name::new("t");
        let pat = ex("s", Type::Product(vec![Type::var("t")]));
        let target = ex("s", Type::Product(vec![Type::var("s")]));
        assert_eq!(target.match_witness(&t, &pat), None);
    }

    #[test]
    fn subst_avoids_capture() {
        let body = ex("u", Type::Product(vec![Type::var("t"), Type::var("u")]));
        let r = body.subst(&Name::new("t"), &Type::var("u"));
        let expect = ex("w", Type::Product(vec![Type::var("u"), Type::var("w")]));
        assert!(r.alpha_eq(&expect));
    }
}
