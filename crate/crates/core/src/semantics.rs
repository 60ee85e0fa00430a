//! Small-step labelled semantics and trace-collecting evaluation.

use crate::cps::{CpsSubst, CpsTerm, CpsValue};
use crate::name::{Ident, Label, NameSupply};
use crate::source::Term;
use crate::vn::{Bindable, Renaming, VnTerm, VnValue};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::fmt;

pub const DEFAULT_FUEL: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepResult<T> {
    Stepped { label: Option<Label>, next: T },
    Stuck(T),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Fuel(pub usize);

impl Default for Fuel {
    fn default() -> Fuel {
        Fuel(DEFAULT_FUEL)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    /// Irreducible and an answer: a value, or a call of the free `halt`.
    Value,
    Stuck,
    Fuel,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Value => "VALUE",
            Status::Stuck => "STUCK",
            Status::Fuel => "FUEL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelTrace {
    pub labels: Vec<Label>,
    pub terminated: bool,
}

/// Everything observed while evaluating a term.
#[derive(Clone, Debug)]
pub struct Run<T> {
    /// Annotation of each step, `None` for silent steps.
    pub steps: Vec<Option<Label>>,
    pub last: T,
    pub status: Status,
}

impl<T> Run<T> {
    pub fn labels(&self) -> Vec<Label> {
        self.steps.iter().flatten().cloned().collect()
    }

    pub fn trace(&self) -> LabelTrace {
        LabelTrace { labels: self.labels(), terminated: self.status != Status::Fuel }
    }

    /// Line-oriented rendering: one line per step, then the status.
    pub fn render_lines(&self) -> String {
        let mut s = String::new();
        for (i, l) in self.steps.iter().enumerate() {
            match l {
                Some(l) => s.push_str(&format!("{i} {l}\n")),
                None => s.push_str(&format!("{i} .\n")),
            }
        }
        s.push_str(&format!("{}\n", self.status));
        s
    }
}

#[derive(Clone, Debug, thiserror::Error)]
#[error("fuel exhausted after {} steps", .steps.len())]
pub struct FuelExhausted<T> {
    pub steps: Vec<Option<Label>>,
    pub last: T,
}

/// A calculus with a deterministic labelled step function.
pub trait Lang: Clone + fmt::Display {
    fn step_with(&self, supply: &mut NameSupply) -> StepResult<Self>;
    fn supply_for(&self) -> NameSupply;
    fn is_answer(&self) -> bool;

    fn step(&self) -> StepResult<Self> {
        self.step_with(&mut self.supply_for())
    }
}

/// Evaluates until irreducible or out of fuel; fuel exhaustion is reported in `status`.
pub fn run<T: Lang>(t: &T, fuel: Fuel) -> Run<T> {
    let mut supply = t.supply_for();
    let mut cur = t.clone();
    let mut steps = Vec::new();
    loop {
        if steps.len() >= fuel.0 {
            return Run { steps, last: cur, status: Status::Fuel };
        }
        match cur.step_with(&mut supply) {
            StepResult::Stepped { label, next } => {
                steps.push(label);
                cur = next;
            }
            StepResult::Stuck(t) => {
                let status = if t.is_answer() { Status::Value } else { Status::Stuck };
                return Run { steps, last: t, status };
            }
        }
    }
}

pub fn eval_trace<T: Lang>(t: &T, fuel: Fuel) -> Result<(LabelTrace, T), FuelExhausted<T>> {
    let r = run(t, fuel);
    if r.status == Status::Fuel {
        return Err(FuelExhausted { steps: r.steps, last: r.last });
    }
    let trace = r.trace();
    Ok((trace, r.last))
}

/// Follows silent steps and at most the single step labelled `label` (if any), returning true
/// as soon as `accept` holds on a term reached after that labelled step.
pub fn weak_reaches<T: Lang>(start: &T, label: Option<&Label>, max_steps: usize, accept: impl Fn(&T) -> bool) -> bool {
    let mut supply = start.supply_for();
    let mut cur = start.clone();
    let mut seen = label.is_none();
    for _ in 0..=max_steps {
        if seen && accept(&cur) {
            return true;
        }
        match cur.step_with(&mut supply) {
            StepResult::Stepped { label: None, next } => cur = next,
            StepResult::Stepped { label: Some(l), next } => {
                if !seen && Some(&l) == label {
                    seen = true;
                    cur = next;
                } else {
                    return false;
                }
            }
            StepResult::Stuck(_) => return false,
        }
    }
    false
}

// ---- source ----

pub fn step_source(t: &Term) -> StepResult<Term> {
    t.step()
}

fn src_step(t: &Term, s: &mut NameSupply) -> Option<(Option<Label>, Term)> {
    match t {
        Term::Var(_) | Term::Lam(..) => None,
        Term::Tuple(ts) => {
            let i = ts.iter().position(|x| !x.is_value())?;
            let (l, n) = src_step(&ts[i], s)?;
            let mut ts2 = ts.clone();
            ts2[i] = n;
            Some((l, Term::Tuple(ts2)))
        }
        Term::App(f, args) => {
            if !f.is_value() {
                let (l, n) = src_step(f, s)?;
                return Some((l, Term::App(Box::new(n), args.clone())));
            }
            if let Some(i) = args.iter().position(|x| !x.is_value()) {
                let (l, n) = src_step(&args[i], s)?;
                let mut a2 = args.clone();
                a2[i] = n;
                return Some((l, Term::App(f.clone(), a2)));
            }
            match &**f {
                Term::Lam(ps, body) if ps.len() == args.len() => {
                    let map: HashMap<Ident, Term> = ps.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
                    Some((None, body.subst_with(&map, s)))
                }
                _ => None,
            }
        }
        Term::Let(x, m, n) => {
            if !m.is_value() {
                let (l, m2) = src_step(m, s)?;
                return Some((l, Term::Let(x.clone(), Box::new(m2), n.clone())));
            }
            let mut map = HashMap::new();
            map.insert(x.clone(), (**m).clone());
            Some((None, n.subst_with(&map, s)))
        }
        Term::Proj(i, m) => {
            if !m.is_value() {
                let (l, m2) = src_step(m, s)?;
                return Some((l, Term::Proj(*i, Box::new(m2))));
            }
            match &**m {
                Term::Tuple(vs) if *i >= 1 && *i <= vs.len() => Some((None, vs[*i - 1].clone())),
                _ => None,
            }
        }
        Term::Pre(l, m) => Some((Some(l.clone()), (**m).clone())),
        Term::Post(l, m) => {
            if m.is_value() {
                Some((Some(l.clone()), (**m).clone()))
            } else {
                let (l2, m2) = src_step(m, s)?;
                Some((l2, Term::Post(l.clone(), Box::new(m2))))
            }
        }
    }
}

impl Lang for Term {
    fn step_with(&self, supply: &mut NameSupply) -> StepResult<Term> {
        match src_step(self, supply) {
            Some((label, next)) => StepResult::Stepped { label, next },
            None => StepResult::Stuck(self.clone()),
        }
    }

    fn supply_for(&self) -> NameSupply {
        self.fresh_supply(&[])
    }

    fn is_answer(&self) -> bool {
        self.is_value()
    }
}

// ---- CPS ----

pub fn step_cps(t: &CpsTerm) -> StepResult<CpsTerm> {
    t.step()
}

impl Lang for CpsTerm {
    fn step_with(&self, supply: &mut NameSupply) -> StepResult<CpsTerm> {
        match self {
            CpsTerm::App(CpsValue::Lam(ps, body), args) if ps.len() == args.len() => {
                let map: CpsSubst = ps.iter().map(|p| p.name.clone()).zip(args.iter().cloned()).collect();
                StepResult::Stepped { label: None, next: body.subst_with(&map, supply) }
            }
            CpsTerm::LetProj(x, i, CpsValue::Tuple(vs), m) if *i >= 1 && *i <= vs.len() => {
                let mut map = CpsSubst::new();
                map.insert(x.clone(), vs[*i - 1].clone());
                StepResult::Stepped { label: None, next: m.subst_with(&map, supply) }
            }
            CpsTerm::Pre(l, m) => StepResult::Stepped { label: Some(l.clone()), next: (**m).clone() },
            _ => StepResult::Stuck(self.clone()),
        }
    }

    fn supply_for(&self) -> NameSupply {
        self.fresh_supply(&[])
    }

    fn is_answer(&self) -> bool {
        matches!(self, CpsTerm::App(CpsValue::Var(h), args) if h.is_halt() && args.len() == 1)
    }
}

// ---- value-named ----

pub fn step_vn(t: &VnTerm) -> StepResult<VnTerm> {
    t.step()
}

fn lookup<'a>(env: &[(&'a Ident, &'a VnValue)], x: &Ident) -> Option<&'a VnValue> {
    env.iter().rev().find(|(y, _)| *y == x).map(|(_, v)| *v)
}

fn vn_step<'a>(t: &'a VnTerm, env: &mut Vec<(&'a Ident, &'a VnValue)>, s: &mut NameSupply) -> Option<(Option<Label>, VnTerm)> {
    match t {
        VnTerm::Let(x, Bindable::Value(v), rest) => {
            env.push((x, v));
            let r = vn_step(rest, env, s);
            env.pop();
            let (l, n) = r?;
            Some((l, VnTerm::Let(x.clone(), Bindable::Value(v.clone()), Box::new(n))))
        }
        VnTerm::App(f, ys) => match lookup(env, f)? {
            VnValue::Lam(ps, body) if ps.len() == ys.len() => {
                let map: Renaming = ps.iter().map(|p| p.name.clone()).zip(ys.iter().cloned()).collect();
                Some((None, body.refresh(&map, s)))
            }
            _ => None,
        },
        VnTerm::Let(z, Bindable::Proj(i, y), m) => {
            let target = match lookup(env, y)? {
                VnValue::Tuple(ys) if *i >= 1 && *i <= ys.len() => ys[*i - 1].clone(),
                VnValue::Pack(y2, _) if *i == 1 => y2.clone(),
                _ => return None,
            };
            let mut map = Renaming::new();
            map.insert(z.clone(), target);
            Some((None, m.rename_with(&map, s, false)))
        }
        VnTerm::Pre(l, m) => Some((Some(l.clone()), (**m).clone())),
    }
}

/// The value-named answer shape `E[@(halt, x)]`, or its closure-converted form, which opens the
/// free `halt` as a pair: `E[let c = proj 1 halt in …]`.
pub fn vn_is_answer(t: &VnTerm) -> bool {
    match t {
        VnTerm::Let(x, Bindable::Value(_), rest) => !x.is_halt() && vn_is_answer(rest),
        VnTerm::App(h, a) => h.is_halt() && a.len() == 1,
        VnTerm::Let(_, Bindable::Proj(1, h), _) => h.is_halt(),
        _ => false,
    }
}

impl Lang for VnTerm {
    fn step_with(&self, supply: &mut NameSupply) -> StepResult<VnTerm> {
        match vn_step(self, &mut Vec::new(), supply) {
            Some((label, next)) => StepResult::Stepped { label, next },
            None => StepResult::Stuck(self.clone()),
        }
    }

    fn supply_for(&self) -> NameSupply {
        self.fresh_supply()
    }

    fn is_answer(&self) -> bool {
        vn_is_answer(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaEq;
    use crate::parse::{parse_cps, parse_term, parse_vn};

    fn src(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    #[test]
    fn beta_and_labels() {
        let t = src("l> (\\x. x) @ (y)");
        match step_source(&t) {
            StepResult::Stepped { label: Some(l), next } => {
                assert_eq!(l.as_str(), "l");
                assert!(next.alpha_eq(&src("(\\x. x) @ (y)")));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn projection_and_stuck() {
        let t = src("proj 2 (a, b, c)");
        assert!(matches!(step_source(&t), StepResult::Stepped { label: None, next } if next == src("b")));
        assert!(matches!(step_source(&src("(a, b) @ (c)")), StepResult::Stuck(_)));
        assert!(matches!(step_source(&src("proj 1 (\\x. x)")), StepResult::Stuck(_)));
    }

    #[test]
    fn post_label_inner_first() {
        let t = src("(\\x. x) @ (y) >l");
        let r = run(&t, Fuel::default());
        assert_eq!(r.steps, vec![None, Some("l".into())]);
        assert_eq!(r.status, Status::Value);
    }

    #[test]
    fn omega_runs_out_of_fuel() {
        let t = src("(\\x. x @ (x)) @ (\\x. x @ (x))");
        assert!(eval_trace(&t, Fuel(100)).is_err());
    }

    #[test]
    fn fused_projection() {
        let t = parse_cps("let x = proj 1 (v,) in k @ (x)").unwrap();
        match step_cps(&t) {
            StepResult::Stepped { label: None, next } => assert!(next.alpha_eq(&parse_cps("k @ (v)").unwrap())),
            other => panic!("{other:?}"),
        }
        assert!(matches!(step_cps(&parse_cps("halt @ (v)").unwrap()), StepResult::Stuck(_)));
    }

    #[test]
    fn vn_copies_bodies() {
        let t = parse_vn("let f = \\x. let y = (x) in k @ (y) in f @ (z)").unwrap();
        let expect = parse_vn("let f = \\x. let y = (x) in k @ (y) in let w = (z) in k @ (w)").unwrap();
        match step_vn(&t) {
            StepResult::Stepped { label: None, next } => assert!(next.alpha_eq(&expect), "{next}"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(step_vn(&parse_vn("g @ (x)").unwrap()), StepResult::Stuck(_)));
        let p = parse_vn("let y = (a, b) in let z = proj 2 y in k @ (z)").unwrap();
        match step_vn(&p) {
            StepResult::Stepped { next, .. } => assert!(next.alpha_eq(&parse_vn("let y = (a, b) in k @ (b)").unwrap())),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn trace_rendering() {
        let r = run(&src("l> x"), Fuel::default());
        assert_eq!(r.render_lines(), "0 l\nVALUE\n");
    }
}
