use super::cfg::costof_table;
use super::instrument::{eval_instrumented, instrument, psi, ialpha_eq, IEvalError};
use super::monoid::{CostMonoid, CostTable};
use super::rtl::emit_rtl;
use crate::name::Label;
use crate::semantics::{eval_trace, Fuel};
use crate::source::Term;
use crate::transform::{compile, label_init};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Agree,
    Disagree,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertifyReport<M> {
    pub verdict: Verdict,
    pub labelled: String,
    pub table: Option<CostTable<M>>,
    /// Source labels with no surviving code; they are charged nothing.
    pub eliminated: Vec<String>,
    pub instrumented_cost: Option<M>,
    pub source_trace: Option<Vec<Label>>,
    pub source_cost: Option<M>,
    pub compiled_trace: Option<Vec<Label>>,
    pub compiled_cost: Option<M>,
    /// `⟦U⟧` for the final labelled term evaluates to `(0, V)` with `V` the instrumented value.
    pub value_agrees: Option<bool>,
    pub note: Option<String>,
}

impl<M: CostMonoid> CertifyReport<M> {
    fn failed(labelled: String, verdict: Verdict, note: String) -> Self {
        CertifyReport {
            verdict,
            labelled,
            table: None,
            eliminated: Vec::new(),
            instrumented_cost: None,
            source_trace: None,
            source_cost: None,
            compiled_trace: None,
            compiled_cost: None,
            value_agrees: None,
            note: Some(note),
        }
    }
}

/// Labels `m`, compiles it, derives costs from the RTL, and compares the instrumented cost with the
/// cost of the source and compiled traces.
pub fn certify_cost<M: CostMonoid>(m: &Term, fuel: Fuel) -> CertifyReport<M> {
    let lm = match label_init(m) {
        Ok(lm) => lm,
        Err(e) => return CertifyReport::failed(m.to_string(), Verdict::Disagree, e.to_string()),
    };
    let shown = lm.to_string();
    let compiled = match compile(&lm) {
        Ok(c) => c,
        Err(e) => return CertifyReport::failed(shown, Verdict::Disagree, e.to_string()),
    };
    let rtl = match emit_rtl(&compiled.program) {
        Ok(r) => r,
        Err(e) => return CertifyReport::failed(shown, Verdict::Disagree, e.to_string()),
    };
    let mut table: CostTable<M> = match costof_table(&rtl) {
        Ok(t) => t,
        Err(e) => return CertifyReport::failed(shown, Verdict::Disagree, e.to_string()),
    };
    let mut eliminated = Vec::new();
    for l in lm.labels() {
        if !table.entries.contains_key(&l) {
            eliminated.push(l.to_string());
            table.insert(l, M::zero());
        }
    }
    let mut report = CertifyReport { table: Some(table.clone()), eliminated, ..CertifyReport::failed(shown, Verdict::Agree, String::new()) };
    report.note = None;

    let inconclusive = |mut r: CertifyReport<M>, what: &str| {
        r.verdict = Verdict::Inconclusive;
        r.note = Some(format!("{what} did not terminate within fuel"));
        r
    };

    let (src_trace, final_term) = match eval_trace(&lm, fuel) {
        Ok(x) => x,
        Err(_) => return inconclusive(report, "source evaluation"),
    };
    let src_cost = table.costof(&src_trace.labels).expect("table covers every source label");
    report.source_trace = Some(src_trace.labels.clone());
    report.source_cost = Some(src_cost.clone());

    let (cmp_trace, _) = match eval_trace(&compiled.program.to_term(), fuel) {
        Ok(x) => x,
        Err(_) => return inconclusive(report, "compiled evaluation"),
    };
    let cmp_cost = table.costof(&cmp_trace.labels);
    report.compiled_trace = Some(cmp_trace.labels.clone());

    let inst = instrument(&lm, &table).expect("table covers every source label");
    let inst_result = eval_instrumented(&inst, fuel.0.saturating_mul(16));
    match inst_result {
        Ok((cost, value)) => {
            report.instrumented_cost = Some(cost.clone());
            if final_term.is_value() {
                let agrees = psi(&final_term, &table).map(|v| ialpha_eq(&v, &value)).unwrap_or(false);
                report.value_agrees = Some(agrees);
            }
            let agree = match &cmp_cost {
                Ok(c) => *c == cost && src_cost == cost,
                Err(_) => false,
            };
            report.compiled_cost = cmp_cost.ok();
            if !agree || report.value_agrees == Some(false) {
                report.verdict = Verdict::Disagree;
            }
            report
        }
        Err(IEvalError::Fuel(_)) => {
            report.compiled_cost = cmp_cost.ok();
            inconclusive(report, "instrumented evaluation")
        }
        Err(IEvalError::Stuck(s)) => {
            report.compiled_cost = cmp_cost.ok();
            report.verdict = if final_term.is_value() { Verdict::Disagree } else { Verdict::Inconclusive };
            report.note = Some(format!("instrumented evaluation stuck at {s}"));
            report
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_term;

    #[test]
    fn self_application_agrees_three_ways() {
        let m = parse_term("(\\x. x @ (x @ (x))) @ (\\z. z)").unwrap();
        let r: CertifyReport<u64> = certify_cost(&m, Fuel::default());
        assert_eq!(r.verdict, Verdict::Agree, "{r:?}");
        assert_eq!(r.source_trace, r.compiled_trace);
        assert_eq!(r.value_agrees, Some(true));
    }

    #[test]
    fn closed_value_costs_nothing() {
        let r: CertifyReport<u64> = certify_cost(&parse_term("\\x. x").unwrap(), Fuel::default());
        assert_eq!(r.verdict, Verdict::Agree);
        assert_eq!(r.instrumented_cost, Some(0));
        assert_eq!(r.source_trace, Some(vec![]));
    }

    #[test]
    fn divergence_is_inconclusive() {
        let r: CertifyReport<u64> = certify_cost(&parse_term("(\\x. x @ (x)) @ (\\x. x @ (x))").unwrap(), Fuel(200));
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }
}
