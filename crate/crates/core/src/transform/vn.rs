use crate::cps::{CpsSubst, CpsTerm, CpsValue};
use crate::name::{Ident, NameSupply};
use crate::vn::{Bindable, VnTerm, VnValue};

type Bindings = Vec<(Ident, Bindable)>;

fn wrap(bs: Bindings, body: VnTerm) -> VnTerm {
    bs.into_iter().rev().fold(body, |acc, (x, b)| VnTerm::Let(x, b, Box::new(acc)))
}

struct Namer {
    supply: NameSupply,
}

impl Namer {
    /// Names `v`, appending its bindings to `bs`, and returns the identifier standing for it.
    fn name_value(&mut self, v: &CpsValue, bs: &mut Bindings) -> Ident {
        match v {
            CpsValue::Var(x) => x.clone(),
            _ => {
                let y = self.supply.fresh();
                self.bind_value(v, y.clone(), bs);
                y
            }
        }
    }

    /// `E_vn(V, y)`
    fn bind_value(&mut self, v: &CpsValue, y: Ident, bs: &mut Bindings) {
        match v {
            CpsValue::Lam(ps, body) => {
                let b = self.term(body);
                bs.push((y, Bindable::Value(VnValue::Lam(ps.clone(), Box::new(b)))));
            }
            CpsValue::Tuple(vs) => {
                let ids = vs.iter().map(|c| self.name_value(c, bs)).collect();
                bs.push((y, Bindable::Value(VnValue::Tuple(ids))));
            }
            CpsValue::Var(_) => unreachable!("identifiers are not named again"),
        }
    }

    fn term(&mut self, m: &CpsTerm) -> VnTerm {
        match m {
            CpsTerm::App(f, args) => {
                let mut bs = Vec::new();
                let f2 = self.name_value(f, &mut bs);
                let a2 = args.iter().map(|a| self.name_value(a, &mut bs)).collect();
                wrap(bs, VnTerm::App(f2, a2))
            }
            CpsTerm::LetProj(x, i, v, body) => {
                let mut bs = Vec::new();
                let y = self.name_value(v, &mut bs);
                bs.push((x.clone(), Bindable::Proj(*i, y)));
                let rest = self.term(body);
                wrap(bs, rest)
            }
            CpsTerm::Pre(l, body) => VnTerm::Pre(l.clone(), Box::new(self.term(body))),
        }
    }
}

/// Names every non-identifier value with a fresh let-binding.
pub fn to_value_named(m: &CpsTerm) -> VnTerm {
    let mut n = Namer { supply: m.fresh_supply(&[]) };
    n.term(m)
}

fn readback_value(v: &VnValue, supply: &mut NameSupply) -> CpsValue {
    match v {
        VnValue::Lam(ps, body) => CpsValue::Lam(ps.clone(), Box::new(readback_with(body, supply))),
        VnValue::Tuple(ys) => CpsValue::Tuple(ys.iter().cloned().map(CpsValue::Var).collect()),
        VnValue::Pack(y, _) => CpsValue::Tuple(vec![CpsValue::Var(y.clone())]),
    }
}

fn readback_with(n: &VnTerm, supply: &mut NameSupply) -> CpsTerm {
    match n {
        VnTerm::App(f, args) => CpsTerm::App(CpsValue::Var(f.clone()), args.iter().cloned().map(CpsValue::Var).collect()),
        VnTerm::Let(x, Bindable::Proj(i, y), body) => {
            CpsTerm::LetProj(x.clone(), *i, CpsValue::Var(y.clone()), Box::new(readback_with(body, supply)))
        }
        VnTerm::Let(x, Bindable::Value(v), body) => {
            let v2 = readback_value(v, supply);
            let b2 = readback_with(body, supply);
            let mut map = CpsSubst::new();
            map.insert(x.clone(), v2);
            b2.subst_with(&map, supply)
        }
        VnTerm::Pre(l, body) => CpsTerm::Pre(l.clone(), Box::new(readback_with(body, supply))),
    }
}

/// Substitutes let-bound values back into their uses.
pub fn readback(n: &VnTerm) -> CpsTerm {
    let mut supply = n.fresh_supply();
    readback_with(n, &mut supply)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_cps, parse_vn};

    #[test]
    fn names_every_value() {
        let m = parse_cps("(\\x k. x @ (x, \\y. x @ (y, k))) @ (\\x k. k @ (x), \\x. halt @ (x))").unwrap();
        let expected = parse_vn(
            "let z1 = \\x k. (let z11 = \\y. x @ (y, k) in x @ (x, z11)) in \
             let z2 = \\x k. k @ (x) in let z3 = \\x. halt @ (x) in z1 @ (z2, z3)",
        )
        .unwrap();
        let out = to_value_named(&m);
        assert!(alpha_eq(&out, &expected), "{out}");
        assert!(alpha_eq(&readback(&out), &m));
    }

    #[test]
    fn named_application_is_unchanged() {
        let m = parse_cps("x @ (y)").unwrap();
        assert_eq!(to_value_named(&m), parse_vn("x @ (y)").unwrap());
    }

    #[test]
    fn nested_tuples_name_components_first() {
        let m = parse_cps("k @ ((a, (b, \\x. x @ (x))))").unwrap();
        let out = to_value_named(&m);
        assert!(alpha_eq(&readback(&out), &m));
        assert!(out.to_string().contains("let"));
    }
}
