use crate::name::{Ident, Label, Name};
use crate::vn::{Bindable, HoistProgram, VnTerm, VnValue};
use serde::Serialize;
use std::collections::BTreeSet;
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Instr {
    MakeTuple(Ident, Vec<Ident>),
    Proj(Ident, usize, Ident),
    EmitLabel(Label),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TailCall {
    pub func: Ident,
    pub args: Vec<Ident>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Routine {
    pub name: Ident,
    pub params: Vec<Ident>,
    pub body: Vec<Instr>,
    pub call: TailCall,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RtlProgram {
    pub routines: Vec<Routine>,
    /// Index of the routine running the main term.
    pub entry: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize)]
pub enum RtlError {
    #[error("routine `{0}` contains a nested function definition")]
    NestedFunction(String),
    #[error("routine `{routine}` uses register `{reg}` before defining it")]
    UseBeforeDef { routine: String, reg: String },
    #[error("duplicate routine name `{0}`")]
    DuplicateRoutine(String),
}

impl Instr {
    pub fn is_label(&self) -> bool {
        matches!(self, Instr::EmitLabel(_))
    }
}

fn lower_body(name: &Ident, t: &VnTerm) -> Result<(Vec<Instr>, TailCall), RtlError> {
    let mut body = Vec::new();
    let mut cur = t;
    loop {
        match cur {
            VnTerm::App(f, args) => return Ok((body, TailCall { func: f.clone(), args: args.clone() })),
            VnTerm::Pre(l, rest) => {
                body.push(Instr::EmitLabel(l.clone()));
                cur = rest;
            }
            VnTerm::Let(x, b, rest) => {
                body.push(match b {
                    Bindable::Value(VnValue::Tuple(ys)) => Instr::MakeTuple(x.clone(), ys.clone()),
                    Bindable::Value(VnValue::Pack(y, _)) => Instr::MakeTuple(x.clone(), vec![y.clone()]),
                    Bindable::Proj(i, y) => Instr::Proj(x.clone(), *i, y.clone()),
                    Bindable::Value(VnValue::Lam(..)) => return Err(RtlError::NestedFunction(name.to_string())),
                });
                cur = rest;
            }
        }
    }
}

/// Moves the first label of a body to its head; the instructions it crosses are pure.
fn label_to_head(body: &mut Vec<Instr>) {
    if let Some(i) = body.iter().position(Instr::is_label) {
        let l = body.remove(i);
        body.insert(0, l);
    }
}

/// One routine per definition plus an entry routine for the main term, whose parameters are the
/// program's free identifiers.
pub fn emit_rtl(p: &HoistProgram) -> Result<RtlProgram, RtlError> {
    let mut routines = Vec::new();
    for d in &p.defs {
        let (mut body, call) = lower_body(&d.name, &d.body)?;
        label_to_head(&mut body);
        routines.push(Routine { name: d.name.clone(), params: d.params.iter().map(|q| q.name.clone()).collect(), body, call });
    }
    let taken: BTreeSet<&str> = p.defs.iter().map(|d| d.name.as_str()).collect();
    let mut entry_name = "main".to_string();
    let mut k = 1;
    while taken.contains(entry_name.as_str()) {
        entry_name = format!("main{k}");
        k += 1;
    }
    let entry_name = Name::new(&entry_name);
    let (body, call) = lower_body(&entry_name, &p.main)?;
    let params = p.to_term().free_vars_ordered();
    routines.push(Routine { name: entry_name, params, body, call });
    let rtl = RtlProgram { entry: routines.len() - 1, routines };
    rtl.validate()?;
    Ok(rtl)
}

impl RtlProgram {
    pub fn entry_routine(&self) -> &Routine {
        &self.routines[self.entry]
    }

    pub fn routine(&self, name: &Ident) -> Option<usize> {
        self.routines.iter().position(|r| &r.name == name)
    }

    /// Every register is a parameter, an earlier destination, or a routine name.
    pub fn validate(&self) -> Result<(), RtlError> {
        let mut names = BTreeSet::new();
        for r in &self.routines {
            if !names.insert(r.name.clone()) {
                return Err(RtlError::DuplicateRoutine(r.name.to_string()));
            }
        }
        for r in &self.routines {
            let mut defined: BTreeSet<Ident> = r.params.iter().cloned().collect();
            let check = |x: &Ident, defined: &BTreeSet<Ident>| {
                if defined.contains(x) || names.contains(x) {
                    Ok(())
                } else {
                    Err(RtlError::UseBeforeDef { routine: r.name.to_string(), reg: x.to_string() })
                }
            };
            for i in &r.body {
                match i {
                    Instr::MakeTuple(d, ys) => {
                        ys.iter().try_for_each(|y| check(y, &defined))?;
                        defined.insert(d.clone());
                    }
                    Instr::Proj(d, _, y) => {
                        check(y, &defined)?;
                        defined.insert(d.clone());
                    }
                    Instr::EmitLabel(_) => {}
                }
            }
            std::iter::once(&r.call.func).chain(&r.call.args).try_for_each(|y| check(y, &defined))?;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<Label> {
        self.routines
            .iter()
            .flat_map(|r| r.body.iter())
            .filter_map(|i| if let Instr::EmitLabel(l) = i { Some(l.clone()) } else { None })
            .collect()
    }
}

impl fmt::Display for RtlProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, r) in self.routines.iter().enumerate() {
            if k > 0 {
                writeln!(f)?;
            }
            let ps: Vec<String> = r.params.iter().map(|p| p.to_string()).collect();
            writeln!(f, "routine {} ({})", r.name, ps.join(", "))?;
            for i in &r.body {
                match i {
                    Instr::MakeTuple(d, ys) => {
                        let ys: Vec<String> = ys.iter().map(|y| y.to_string()).collect();
                        writeln!(f, "  {d} := make_tuple({})", ys.join(", "))?
                    }
                    Instr::Proj(d, i, y) => writeln!(f, "  {d} := proj_{i}({y})")?,
                    Instr::EmitLabel(l) => writeln!(f, "  emit {l}")?,
                }
            }
            let args: Vec<String> = r.call.args.iter().map(|a| a.to_string()).collect();
            writeln!(f, "  call {}({})", r.call.func, args.join(", "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_hoist;

    #[test]
    fn clause_by_clause_lowering() {
        let p = parse_hoist("let g = \\k x f. (l> let a = proj 1 k in let b = (a, x) in f @ (b)) in halt @ (g)").unwrap();
        let rtl = emit_rtl(&p).unwrap();
        let g = &rtl.routines[0];
        let n = Name::new;
        assert_eq!(
            g.body,
            vec![
                Instr::EmitLabel(n("l")),
                Instr::Proj(n("a"), 1, n("k")),
                Instr::MakeTuple(n("b"), vec![n("a"), n("x")])
            ]
        );
        assert_eq!(g.call, TailCall { func: n("f"), args: vec![n("b")] });
        assert!(rtl.to_string().contains("routine g (k, x, f)"));
    }

    #[test]
    fn bare_main_is_one_call() {
        let rtl = emit_rtl(&parse_hoist("halt @ (x)").unwrap()).unwrap();
        assert_eq!(rtl.routines.len(), 1);
        assert!(rtl.routines[0].body.is_empty());
        assert_eq!(rtl.routines[0].params, vec![Name::halt(), Name::new("x")]);
    }

    #[test]
    fn label_moves_to_head() {
        let p = parse_hoist("let g = \\e k. (let a = proj 1 e in l> k @ (a)) in halt @ (g)").unwrap();
        let rtl = emit_rtl(&p).unwrap();
        assert!(rtl.routines[0].body[0].is_label());
    }
}
