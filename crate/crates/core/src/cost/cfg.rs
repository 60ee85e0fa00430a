use super::monoid::{CostMonoid, CostTable};
use super::rtl::{Instr, RtlProgram};
use crate::name::{Ident, Label};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

/// Node `(routine, index)`; the index equal to the body length is the terminal call.
type Node = (usize, usize);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("label-free cycle: {}", cycle.join(" -> "))]
pub struct UnsoundLabelling {
    pub cycle: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
#[error("label {label} has paths costing between {min} and {max} instructions")]
pub struct Imprecision {
    pub label: String,
    pub min: u64,
    pub max: u64,
}

/// Interprocedural control-flow graph of an RTL program.
pub struct Cfg<'a> {
    rtl: &'a RtlProgram,
    succs: BTreeMap<Node, Vec<Node>>,
}

impl<'a> Cfg<'a> {
    pub fn new(rtl: &'a RtlProgram) -> Cfg<'a> {
        let mut succs = BTreeMap::new();
        for (r, routine) in rtl.routines.iter().enumerate() {
            let n = routine.body.len();
            for i in 0..n {
                succs.insert((r, i), vec![(r, i + 1)]);
            }
            succs.insert((r, n), call_targets(rtl, r).into_iter().map(|t| (t, 0)).collect());
        }
        Cfg { rtl, succs }
    }

    fn instr(&self, (r, i): Node) -> Option<&Instr> {
        self.rtl.routines[r].body.get(i)
    }

    fn is_label(&self, n: Node) -> bool {
        self.instr(n).is_some_and(Instr::is_label)
    }

    fn weight(&self, n: Node) -> u64 {
        u64::from(!self.is_label(n))
    }

    fn render(&self, (r, i): Node) -> String {
        format!("{}[{i}]", self.rtl.routines[r].name)
    }

    /// Finds a cycle avoiding label nodes.
    pub fn label_free_cycle(&self) -> Option<Vec<String>> {
        // 0 unvisited, 1 on stack, 2 done
        let mut state: BTreeMap<Node, u8> = BTreeMap::new();
        let mut stack: Vec<Node> = Vec::new();
        for &start in self.succs.keys() {
            if self.is_label(start) || state.get(&start).copied().unwrap_or(0) != 0 {
                continue;
            }
            if let Some(c) = self.dfs(start, &mut state, &mut stack) {
                return Some(c);
            }
        }
        None
    }

    fn dfs(&self, n: Node, state: &mut BTreeMap<Node, u8>, stack: &mut Vec<Node>) -> Option<Vec<String>> {
        // iterative to survive long routines
        let mut work: Vec<(Node, usize)> = vec![(n, 0)];
        state.insert(n, 1);
        stack.push(n);
        while let Some(&mut (node, ref mut next)) = work.last_mut() {
            let succs = &self.succs[&node];
            if *next < succs.len() {
                let s = succs[*next];
                *next += 1;
                if self.is_label(s) {
                    continue;
                }
                match state.get(&s).copied().unwrap_or(0) {
                    0 => {
                        state.insert(s, 1);
                        stack.push(s);
                        work.push((s, 0));
                    }
                    1 => {
                        let pos = stack.iter().position(|&x| x == s).unwrap();
                        let mut cycle: Vec<String> = stack[pos..].iter().map(|&x| self.render(x)).collect();
                        cycle.push(self.render(s));
                        return Some(cycle);
                    }
                    _ => {}
                }
            } else {
                state.insert(node, 2);
                stack.pop();
                work.pop();
            }
        }
        None
    }

    /// Shortest and longest instruction counts over maximal label-free paths leaving `n`.
    fn extent(&self, n: Node, memo: &mut BTreeMap<Node, (u64, u64)>) -> (u64, u64) {
        if let Some(&v) = memo.get(&n) {
            return v;
        }
        // post-order without recursion
        let mut work = vec![(n, false)];
        while let Some((node, expanded)) = work.pop() {
            if memo.contains_key(&node) {
                continue;
            }
            let succs: Vec<Node> = self.succs[&node].iter().copied().filter(|&s| !self.is_label(s)).collect();
            let label_exit = self.succs[&node].iter().any(|&s| self.is_label(s)) || self.succs[&node].is_empty();
            if !expanded {
                work.push((node, true));
                for s in succs {
                    if !memo.contains_key(&s) {
                        work.push((s, false));
                    }
                }
                continue;
            }
            let mut lo = if label_exit { Some(0) } else { None };
            let mut hi = if label_exit { Some(0) } else { None };
            for s in succs {
                let (a, b) = memo[&s];
                lo = Some(lo.map_or(a, |x: u64| x.min(a)));
                hi = Some(hi.map_or(b, |x: u64| x.max(b)));
            }
            let w = self.weight(node);
            memo.insert(node, (w + lo.unwrap_or(0), w + hi.unwrap_or(0)));
        }
        memo[&n]
    }

    /// Per label occurrence: (label, min, max) over the paths that start right after it.
    fn label_extents(&self) -> Vec<(Label, u64, u64)> {
        let mut memo = BTreeMap::new();
        let mut out = Vec::new();
        for (r, routine) in self.rtl.routines.iter().enumerate() {
            for (i, ins) in routine.body.iter().enumerate() {
                if let Instr::EmitLabel(l) = ins {
                    let next = (r, i + 1);
                    let (lo, hi) = if self.is_label(next) { (0, 0) } else { self.extent(next, &mut memo) };
                    out.push((l.clone(), lo, hi));
                }
            }
        }
        out
    }
}

fn call_targets(rtl: &RtlProgram, r: usize) -> Vec<usize> {
    let routine = &rtl.routines[r];
    let f = &routine.call.func;
    if f.is_halt() {
        return Vec::new();
    }
    let local: BTreeSet<&Ident> = routine
        .params
        .iter()
        .chain(routine.body.iter().filter_map(|i| match i {
            Instr::MakeTuple(d, _) | Instr::Proj(d, _, _) => Some(d),
            Instr::EmitLabel(_) => None,
        }))
        .collect();
    if !local.contains(f) {
        if let Some(t) = rtl.routine(f) {
            return vec![t];
        }
    }
    (0..rtl.routines.len())
        .filter(|&t| t != rtl.entry && rtl.routines[t].params.len() == routine.call.args.len())
        .collect()
}

pub fn check_sound(rtl: &RtlProgram) -> Result<(), UnsoundLabelling> {
    match Cfg::new(rtl).label_free_cycle() {
        Some(cycle) => Err(UnsoundLabelling { cycle }),
        None => Ok(()),
    }
}

/// Every path leaving a label has the same count, and repeated labels agree.
pub fn check_precise(rtl: &RtlProgram) -> Result<(), Imprecision> {
    let cfg = Cfg::new(rtl);
    if cfg.label_free_cycle().is_some() {
        return Err(Imprecision { label: String::new(), min: 0, max: u64::MAX });
    }
    let mut seen: BTreeMap<Label, (u64, u64)> = BTreeMap::new();
    for (l, lo, hi) in cfg.label_extents() {
        let (a, b) = seen.get(&l).map_or((lo, hi), |&(a, b)| (a.min(lo), b.max(hi)));
        seen.insert(l, (a, b));
    }
    match seen.into_iter().find(|(_, (a, b))| a != b) {
        Some((l, (min, max))) => Err(Imprecision { label: l.to_string(), min, max }),
        None => Ok(()),
    }
}

/// Cost of each label: the largest instruction count over label-free paths starting at it.
pub fn costof_table<M: CostMonoid>(rtl: &RtlProgram) -> Result<CostTable<M>, UnsoundLabelling> {
    check_sound(rtl)?;
    let mut best: BTreeMap<Label, u64> = BTreeMap::new();
    for (l, _, hi) in Cfg::new(rtl).label_extents() {
        let e = best.entry(l).or_insert(0);
        *e = (*e).max(hi);
    }
    let mut t = CostTable::new();
    for (l, n) in best {
        t.insert(l, M::units(n));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::rtl::{Routine, TailCall};
    use crate::name::Name;

    fn n(s: &str) -> Ident {
        Name::new(s)
    }

    fn routine(name: &str, params: &[&str], body: Vec<Instr>, func: &str, args: &[&str]) -> Routine {
        Routine {
            name: n(name),
            params: params.iter().map(|p| n(p)).collect(),
            body,
            call: TailCall { func: n(func), args: args.iter().map(|a| n(a)).collect() },
        }
    }

    #[test]
    fn straight_line_cost_counts_instructions() {
        let rtl = RtlProgram {
            routines: vec![
                routine(
                    "g",
                    &["x"],
                    vec![Instr::EmitLabel(n("l")), Instr::Proj(n("a"), 1, n("x")), Instr::MakeTuple(n("b"), vec![n("a")])],
                    "halt",
                    &["b"],
                ),
                routine("main", &["x"], vec![], "g", &["x"]),
            ],
            entry: 1,
        };
        let t: CostTable<u64> = costof_table(&rtl).unwrap();
        assert_eq!(t.get(&n("l")).unwrap(), &3);
        check_precise(&rtl).unwrap();
    }

    #[test]
    fn unlabelled_loop_is_unsound() {
        let rtl = RtlProgram {
            routines: vec![
                routine("g", &["x"], vec![Instr::Proj(n("a"), 1, n("x"))], "g", &["a"]),
                routine("main", &["x"], vec![Instr::EmitLabel(n("l"))], "g", &["x"]),
            ],
            entry: 1,
        };
        let err = check_sound(&rtl).unwrap_err();
        assert_eq!(err.cycle.first(), err.cycle.last());
        assert!(costof_table::<u64>(&rtl).is_err());
    }

    #[test]
    fn diverging_path_lengths_are_imprecise() {
        // the indirect call from `k` may land in `short` (1 instruction) or `long` (2)
        let rtl = RtlProgram {
            routines: vec![
                routine("short", &["x"], vec![], "halt", &["x"]),
                routine("long", &["x"], vec![Instr::Proj(n("a"), 1, n("x"))], "halt", &["a"]),
                routine("main", &["k", "x"], vec![Instr::EmitLabel(n("l"))], "k", &["x"]),
            ],
            entry: 2,
        };
        let err = check_precise(&rtl).unwrap_err();
        assert_eq!((err.min, err.max), (2, 3));
        assert_eq!(costof_table::<u64>(&rtl).unwrap().get(&n("l")).unwrap(), &3);
    }
}
