//! α-equivalence by simultaneous traversal.
//!
//! Type annotations on binders and pack sites are ignored; a pack compares equal to the
//! corresponding one-element tuple. Labels are compared by name.

use crate::cps::{CpsTerm, CpsValue};
use crate::name::Name;
use crate::source::{Param, Term};
use crate::vn::{Bindable, HoistProgram, VnTerm, VnValue};

#[derive(Default)]
pub struct Scope {
    left: Vec<Name>,
    right: Vec<Name>,
}

impl Scope {
    pub fn same(&self, x: &Name, y: &Name) -> bool {
        let i = self.left.iter().rposition(|n| n == x);
        let j = self.right.iter().rposition(|n| n == y);
        match (i, j) {
            (None, None) => x == y,
            (Some(i), Some(j)) => i == j,
            _ => false,
        }
    }

    pub fn bound_left(&self, x: &Name) -> bool {
        self.left.contains(x)
    }

    pub fn bound_right(&self, y: &Name) -> bool {
        self.right.contains(y)
    }

    pub fn bind(&mut self, x: &Name, y: &Name) {
        self.left.push(x.clone());
        self.right.push(y.clone());
    }

    pub fn depth(&self) -> usize {
        self.left.len()
    }

    pub fn restore(&mut self, depth: usize) {
        self.left.truncate(depth);
        self.right.truncate(depth);
    }

    fn bind_params(&mut self, a: &[Param], b: &[Param]) -> bool {
        if a.len() != b.len() {
            return false;
        }
        for (p, q) in a.iter().zip(b) {
            self.bind(&p.name, &q.name);
        }
        true
    }
}

pub trait AlphaEq {
    fn alpha_in(&self, other: &Self, scope: &mut Scope) -> bool;

    fn alpha_eq(&self, other: &Self) -> bool {
        self.alpha_in(other, &mut Scope::default())
    }
}

pub fn alpha_eq<T: AlphaEq + ?Sized>(a: &T, b: &T) -> bool {
    a.alpha_eq(b)
}

fn all<T: AlphaEq>(a: &[T], b: &[T], s: &mut Scope) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.alpha_in(y, s))
}

fn ids(a: &[Name], b: &[Name], s: &Scope) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| s.same(x, y))
}

impl AlphaEq for Term {
    fn alpha_in(&self, other: &Term, s: &mut Scope) -> bool {
        match (self, other) {
            (Term::Var(x), Term::Var(y)) => s.same(x, y),
            (Term::Lam(p1, b1), Term::Lam(p2, b2)) => {
                let d = s.depth();
                let r = s.bind_params(p1, p2) && b1.alpha_in(b2, s);
                s.restore(d);
                r
            }
            (Term::App(f1, a1), Term::App(f2, a2)) => f1.alpha_in(f2, s) && all(a1, a2, s),
            (Term::Let(x1, m1, n1), Term::Let(x2, m2, n2)) => {
                if !m1.alpha_in(m2, s) {
                    return false;
                }
                let d = s.depth();
                s.bind(x1, x2);
                let r = n1.alpha_in(n2, s);
                s.restore(d);
                r
            }
            (Term::Tuple(t1), Term::Tuple(t2)) => all(t1, t2, s),
            (Term::Proj(i, m1), Term::Proj(j, m2)) => i == j && m1.alpha_in(m2, s),
            (Term::Pre(l1, m1), Term::Pre(l2, m2)) | (Term::Post(l1, m1), Term::Post(l2, m2)) => {
                l1 == l2 && m1.alpha_in(m2, s)
            }
            _ => false,
        }
    }
}

impl AlphaEq for CpsValue {
    fn alpha_in(&self, other: &CpsValue, s: &mut Scope) -> bool {
        match (self, other) {
            (CpsValue::Var(x), CpsValue::Var(y)) => s.same(x, y),
            (CpsValue::Lam(p1, b1), CpsValue::Lam(p2, b2)) => {
                let d = s.depth();
                let r = s.bind_params(p1, p2) && b1.alpha_in(b2, s);
                s.restore(d);
                r
            }
            (CpsValue::Tuple(a), CpsValue::Tuple(b)) => all(a, b, s),
            _ => false,
        }
    }
}

impl AlphaEq for CpsTerm {
    fn alpha_in(&self, other: &CpsTerm, s: &mut Scope) -> bool {
        match (self, other) {
            (CpsTerm::App(f1, a1), CpsTerm::App(f2, a2)) => f1.alpha_in(f2, s) && all(a1, a2, s),
            (CpsTerm::LetProj(x1, i, v1, m1), CpsTerm::LetProj(x2, j, v2, m2)) => {
                if i != j || !v1.alpha_in(v2, s) {
                    return false;
                }
                let d = s.depth();
                s.bind(x1, x2);
                let r = m1.alpha_in(m2, s);
                s.restore(d);
                r
            }
            (CpsTerm::Pre(l1, m1), CpsTerm::Pre(l2, m2)) => l1 == l2 && m1.alpha_in(m2, s),
            _ => false,
        }
    }
}

fn tuple_view(b: &Bindable) -> Option<Vec<Name>> {
    match b {
        Bindable::Value(VnValue::Tuple(ys)) => Some(ys.clone()),
        Bindable::Value(VnValue::Pack(y, _)) => Some(vec![y.clone()]),
        _ => None,
    }
}

impl AlphaEq for Bindable {
    fn alpha_in(&self, other: &Bindable, s: &mut Scope) -> bool {
        if let (Some(a), Some(b)) = (tuple_view(self), tuple_view(other)) {
            return ids(&a, &b, s);
        }
        match (self, other) {
            (Bindable::Value(VnValue::Lam(p1, b1)), Bindable::Value(VnValue::Lam(p2, b2))) => {
                let d = s.depth();
                let r = s.bind_params(p1, p2) && b1.alpha_in(b2, s);
                s.restore(d);
                r
            }
            (Bindable::Proj(i, x), Bindable::Proj(j, y)) => i == j && s.same(x, y),
            _ => false,
        }
    }
}

impl AlphaEq for VnTerm {
    fn alpha_in(&self, other: &VnTerm, s: &mut Scope) -> bool {
        match (self, other) {
            (VnTerm::App(f1, a1), VnTerm::App(f2, a2)) => s.same(f1, f2) && ids(a1, a2, s),
            (VnTerm::Let(x1, b1, m1), VnTerm::Let(x2, b2, m2)) => {
                if !b1.alpha_in(b2, s) {
                    return false;
                }
                let d = s.depth();
                s.bind(x1, x2);
                let r = m1.alpha_in(m2, s);
                s.restore(d);
                r
            }
            (VnTerm::Pre(l1, m1), VnTerm::Pre(l2, m2)) => l1 == l2 && m1.alpha_in(m2, s),
            _ => false,
        }
    }
}

impl AlphaEq for HoistProgram {
    fn alpha_in(&self, other: &HoistProgram, s: &mut Scope) -> bool {
        self.to_term().alpha_in(&other.to_term(), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binder_renaming() {
        assert!(Term::lam(&["x"], Term::var("x")).alpha_eq(&Term::lam(&["y"], Term::var("y"))));
        assert!(!Term::lam(&["x"], Term::var("y")).alpha_eq(&Term::lam(&["x"], Term::var("z"))));
    }

    #[test]
    fn shadowing_is_positional() {
        // \x x. x  vs  \a b. b
        let a = Term::lam(&["x", "x2"], Term::var("x2"));
        let b = Term::lam(&["a", "b"], Term::var("b"));
        let c = Term::lam(&["a", "b"], Term::var("a"));
        assert!(a.alpha_eq(&b));
        assert!(!a.alpha_eq(&c));
    }

    #[test]
    fn labels_are_not_binders() {
        let a = Term::lam(&["x"], Term::Pre(Name::new("l0"), Box::new(Term::var("x"))));
        let b = Term::lam(&["x"], Term::Pre(Name::new("l1"), Box::new(Term::var("x"))));
        assert!(!a.alpha_eq(&b));
    }

    #[test]
    fn bound_vs_free_differs() {
        let a = Term::lam(&["x"], Term::var("x"));
        let b = Term::lam(&["y"], Term::var("x"));
        assert!(!a.alpha_eq(&b));
    }
}
