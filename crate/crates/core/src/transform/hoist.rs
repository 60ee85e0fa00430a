use crate::name::{Ident, NameSupply};
use crate::source::Param;
use crate::vn::{Bindable, HoistProgram, Renaming, VnTerm, VnValue};
use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoistRule {
    H1,
    H2,
    H3,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HoistStrategy {
    /// The outermost redex reached first by a left-to-right descent.
    LeftmostOutermost,
    /// The innermost redex, continuation first.
    RightmostInnermost,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoistStep {
    pub rule: HoistRule,
    /// Path of the redex from the root; `b` enters a function body, `k` a continuation.
    pub path: String,
    pub measure_before: BigUint,
    pub measure_after: BigUint,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum HoistError {
    #[error("no hoisting step applies but a nested function remains: {0}")]
    Blocked(String),
    #[error("size measure did not decrease at step {step} ({rule:?})")]
    MeasureNotDecreasing { step: usize, rule: HoistRule },
}

#[derive(Clone, Debug)]
pub struct HoistOutcome {
    pub program: HoistProgram,
    pub steps: Vec<HoistStep>,
}

/// The termination measure: 1 for calls, `2·ms(M) + ms(N)` for function lets, `2·ms(N)` otherwise.
pub fn measure(t: &VnTerm) -> BigUint {
    match t {
        VnTerm::App(..) => BigUint::one(),
        VnTerm::Let(_, Bindable::Value(VnValue::Lam(_, body)), rest) => measure(body) * 2u32 + measure(rest),
        VnTerm::Let(_, _, rest) | VnTerm::Pre(_, rest) => measure(rest) * 2u32,
    }
}

fn simple_fn(b: &Bindable) -> Option<(&Vec<Param>, &VnTerm)> {
    b.lam().filter(|(_, body)| body.is_lambda_free())
}

fn lam_fv(ps: &[Param], body: &VnTerm) -> BTreeSet<Ident> {
    Bindable::Value(VnValue::Lam(ps.to_vec(), Box::new(body.clone()))).free_vars_ordered().into_iter().collect()
}

struct Hoister {
    supply: NameSupply,
    strategy: HoistStrategy,
}

impl Hoister {
    /// Renames the hoisted binder `y` in its scope `m` when it would capture something once moved.
    fn freshen(&mut self, y: &Ident, m: &VnTerm, avoid: &BTreeSet<Ident>) -> (Ident, VnTerm) {
        if avoid.contains(y) {
            let z = self.supply.fresh();
            let mut map = Renaming::new();
            map.insert(y.clone(), z.clone());
            (z, m.rename_with(&map, &mut self.supply, false))
        } else {
            (y.clone(), m.clone())
        }
    }

    /// Tries a rule at the root of `t`.
    fn at_root(&mut self, t: &VnTerm) -> Option<(HoistRule, VnTerm)> {
        match t {
            VnTerm::Let(x, c, inner) if c.lam().is_none() => {
                let VnTerm::Let(y, f, m) = &**inner else { return None };
                let (ps, body) = simple_fn(f)?;
                if lam_fv(ps, body).contains(x) {
                    return None;
                }
                let mut avoid: BTreeSet<Ident> = c.free_vars_ordered().into_iter().collect();
                avoid.insert(x.clone());
                let (y2, m2) = self.freshen(y, m, &avoid);
                Some((HoistRule::H1, VnTerm::Let(y2, f.clone(), Box::new(VnTerm::Let(x.clone(), c.clone(), Box::new(m2))))))
            }
            VnTerm::Let(x, Bindable::Value(VnValue::Lam(ws, outer_body)), n) => {
                let VnTerm::Let(y, f, m) = &**outer_body else { return None };
                let (ps, body) = simple_fn(f)?;
                let fv = lam_fv(ps, body);
                if ws.iter().any(|w| fv.contains(&w.name)) {
                    return None;
                }
                let mut avoid: BTreeSet<Ident> = n.free_vars();
                avoid.insert(x.clone());
                avoid.extend(ws.iter().map(|w| w.name.clone()));
                let (y2, m2) = self.freshen(y, m, &avoid);
                let outer = Bindable::Value(VnValue::Lam(ws.clone(), Box::new(m2)));
                Some((HoistRule::H2, VnTerm::Let(y2, f.clone(), Box::new(VnTerm::Let(x.clone(), outer, n.clone())))))
            }
            VnTerm::Pre(l, inner) => {
                let VnTerm::Let(y, f, m) = &**inner else { return None };
                simple_fn(f)?;
                Some((HoistRule::H3, VnTerm::Let(y.clone(), f.clone(), Box::new(VnTerm::Pre(l.clone(), m.clone())))))
            }
            _ => None,
        }
    }

    /// Children reachable through hoisting contexts, in left-to-right order.
    fn step(&mut self, t: &VnTerm, path: &mut String) -> Option<(HoistRule, VnTerm)> {
        let outermost = self.strategy == HoistStrategy::LeftmostOutermost;
        if outermost {
            if let Some(r) = self.at_root(t) {
                return Some(r);
            }
        }
        let below = self.below(t, path, outermost);
        if below.is_some() || outermost {
            return below;
        }
        self.at_root(t)
    }

    fn below(&mut self, t: &VnTerm, path: &mut String, left_first: bool) -> Option<(HoistRule, VnTerm)> {
        let n = path.len();
        let r = match t {
            VnTerm::App(..) => None,
            VnTerm::Let(x, Bindable::Value(VnValue::Lam(ps, body)), rest) => {
                let try_body = |h: &mut Self, path: &mut String| {
                    path.push('b');
                    let r = h.step(body, path).map(|(rule, b2)| {
                        (rule, VnTerm::Let(x.clone(), Bindable::Value(VnValue::Lam(ps.clone(), Box::new(b2))), rest.clone()))
                    });
                    if r.is_none() {
                        path.pop();
                    }
                    r
                };
                let try_rest = |h: &mut Self, path: &mut String| {
                    path.push('k');
                    let r = h.step(rest, path).map(|(rule, r2)| {
                        (rule, VnTerm::Let(x.clone(), Bindable::Value(VnValue::Lam(ps.clone(), body.clone())), Box::new(r2)))
                    });
                    if r.is_none() {
                        path.pop();
                    }
                    r
                };
                if left_first {
                    try_body(self, path).or_else(|| try_rest(self, path))
                } else {
                    let tr = try_rest(self, path);
                    tr.or_else(|| try_body(self, path))
                }
            }
            VnTerm::Let(x, c, rest) => {
                path.push('k');
                self.step(rest, path).map(|(rule, r2)| (rule, VnTerm::Let(x.clone(), c.clone(), Box::new(r2))))
            }
            VnTerm::Pre(l, rest) => {
                path.push('k');
                self.step(rest, path).map(|(rule, r2)| (rule, VnTerm::Pre(l.clone(), Box::new(r2))))
            }
        };
        if r.is_none() {
            path.truncate(n);
        }
        r
    }
}

/// Applies one hoisting step under the given strategy.
pub fn hoist_step(t: &VnTerm, strategy: HoistStrategy) -> Option<(HoistRule, VnTerm)> {
    let mut h = Hoister { supply: t.fresh_supply(), strategy };
    h.step(t, &mut String::new())
}

/// Rewrites with the hoisting rules until none applies, recording the measure at each step.
pub fn hoist_with(m: &VnTerm, strategy: HoistStrategy) -> Result<HoistOutcome, HoistError> {
    let mut h = Hoister { supply: m.fresh_supply(), strategy };
    let mut cur = m.clone();
    let mut steps = Vec::new();
    let mut before = measure(&cur);
    loop {
        let mut path = String::new();
        let Some((rule, next)) = h.step(&cur, &mut path) else { break };
        let after = measure(&next);
        if after >= before {
            return Err(HoistError::MeasureNotDecreasing { step: steps.len(), rule });
        }
        steps.push(HoistStep { rule, path, measure_before: before, measure_after: after.clone() });
        before = after;
        cur = next;
    }
    let program = HoistProgram::from_term(&cur).map_err(HoistError::Blocked)?;
    Ok(HoistOutcome { program, steps })
}

pub fn hoist(m: &VnTerm) -> Result<HoistOutcome, HoistError> {
    hoist_with(m, HoistStrategy::LeftmostOutermost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_hoist, parse_vn};

    #[test]
    fn nested_definition_moves_out() {
        let m = parse_vn("let x1 = \\y1. (let x2 = \\y2. a @ (y2) in b @ (x2)) in x1 @ (z)").unwrap();
        let out = hoist(&m).unwrap();
        let expected = parse_hoist("let x2 = \\y2. a @ (y2) in let x1 = \\y1. b @ (x2) in x1 @ (z)").unwrap();
        assert!(alpha_eq(&out.program, &expected), "{}", out.program);
        assert_eq!(out.steps.len(), 1);
        assert_eq!(out.steps[0].rule, HoistRule::H2);
    }

    #[test]
    fn label_rule() {
        let m = parse_vn("l> let y = \\z. z @ (z) in y @ (y)").unwrap();
        let out = hoist(&m).unwrap();
        let expected = parse_hoist("let y = \\z. z @ (z) in l> y @ (y)").unwrap();
        assert!(alpha_eq(&out.program, &expected));
    }

    #[test]
    fn hoisted_program_is_fixed_point() {
        let m = parse_vn("let f = \\x. x @ (x) in let p = (f, f) in f @ (p)").unwrap();
        let out = hoist(&m).unwrap();
        assert!(out.steps.is_empty());
        assert!(alpha_eq(&out.program.to_term(), &m));
    }

    #[test]
    fn binder_is_renamed_instead_of_capturing() {
        // moving y past `let x = (y)` must not capture the outer y
        let m = parse_vn("let x = (y) in let y = \\z. z @ (z) in y @ (x)").unwrap();
        let out = hoist(&m).unwrap();
        let expected = parse_hoist("let f = \\z. z @ (z) in let x = (y) in f @ (x)").unwrap();
        assert!(alpha_eq(&out.program, &expected), "{}", out.program);
    }

    #[test]
    fn strategies_agree() {
        let m = parse_vn(
            "let a = \\u. (let b = \\v. (let c = \\w. w @ (w) in v @ (c)) in u @ (b)) in \
             let p = (a) in l> let d = \\s. s @ (s) in d @ (p)",
        )
        .unwrap();
        let lo = hoist_with(&m, HoistStrategy::LeftmostOutermost).unwrap();
        let ri = hoist_with(&m, HoistStrategy::RightmostInnermost).unwrap();
        assert!(alpha_eq(&lo.program, &ri.program));
        for s in &lo.steps {
            assert!(s.measure_after < s.measure_before);
        }
    }
}
