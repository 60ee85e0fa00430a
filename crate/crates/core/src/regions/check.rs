//! Runtime validation of progress, effect preservation, and simulation of the erased program.

use super::effect::{effect_check, EffectError, RegionCtx};
use super::erase::{region_erase, region_erase_ctx};
use super::heap::{blocked_on_free_var, region_is_answer, step_region_with, MemoryError, RegionStatus};
use super::syntax::{Effect, RegionProgram};
use crate::alpha::AlphaEq;
use crate::name::Label;
use crate::semantics::{Fuel, Lang, StepResult};
use crate::typing::{typecheck_vn, TypeError};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionViolation {
    /// The precondition failed: the program does not effect-check.
    IllTyped { error: EffectError },
    /// The precondition failed: free regions in the program.
    RegionOpen { regions: String },
    /// The erased program does not type in the value-named system.
    ErasureIllTyped { error: TypeError },
    Memory { step: usize, error: MemoryError },
    /// Stuck on something other than a free variable of the program.
    NoProgress { step: usize, term: String },
    EffectNotPreserved { step: usize, before: String, after: String },
    LabelMismatch { step: usize, region: Option<Label>, erased: Option<Label> },
    /// The erased program stepped while the enriched one did not, or the reverse.
    StepMismatch { step: usize, region_stepped: bool },
    ResidualMismatch { step: usize, expected: String, found: String },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegionReport {
    pub effect: Option<Effect>,
    pub steps: Vec<Option<Label>>,
    pub status: Option<RegionStatus>,
    pub violations: Vec<RegionViolation>,
}

impl RegionReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.steps.iter().flatten().cloned().collect()
    }
}

/// Steps an effect-checked, region-closed program to termination, checking after every step that
/// no memory error occurs, the effect judgement still holds within the original effect, and the
/// erased program takes the matching step to the erasure of the result.
pub fn check_region_progress_and_sr(p: &RegionProgram, ctx: &RegionCtx, fuel: Fuel) -> RegionReport {
    let mut report = RegionReport { effect: None, steps: Vec::new(), status: None, violations: Vec::new() };
    let e0 = match effect_check(ctx, p) {
        Ok(e) => e,
        Err(error) => {
            report.violations.push(RegionViolation::IllTyped { error });
            return report;
        }
    };
    report.effect = Some(e0.clone());
    let open = p.frv();
    if !open.is_empty() {
        report.violations.push(RegionViolation::RegionOpen { regions: Effect(open).to_string() });
        return report;
    }
    let erased_ctx = region_erase_ctx(ctx);
    let mut erased = region_erase(p).to_term();
    if let Err(error) = typecheck_vn(&erased_ctx, &erased) {
        report.violations.push(RegionViolation::ErasureIllTyped { error });
    }
    let mut supply = p.supply();
    let mut erased_supply = erased.supply_for();
    let mut cur = p.clone();
    loop {
        let step = report.steps.len();
        if step >= fuel.0 {
            report.status = Some(RegionStatus::Fuel);
            return report;
        }
        let region_step = step_region_with(&cur, &mut supply);
        let erased_step = erased.step_with(&mut erased_supply);
        match (region_step, erased_step) {
            (Err(error), _) => {
                report.violations.push(RegionViolation::Memory { step, error: error.clone() });
                report.status = Some(RegionStatus::MemoryError { error });
                return report;
            }
            (Ok(StepResult::Stuck(_)), other) => {
                if matches!(other, StepResult::Stepped { .. }) {
                    report.violations.push(RegionViolation::StepMismatch { step, region_stepped: false });
                }
                if !blocked_on_free_var(&cur) {
                    report.violations.push(RegionViolation::NoProgress { step, term: cur.main.to_string() });
                }
                report.status = Some(if region_is_answer(&cur) { RegionStatus::Value } else { RegionStatus::Stuck });
                return report;
            }
            (Ok(StepResult::Stepped { .. }), StepResult::Stuck(_)) => {
                report.violations.push(RegionViolation::StepMismatch { step, region_stepped: true });
                report.status = Some(RegionStatus::Stuck);
                return report;
            }
            (Ok(StepResult::Stepped { label, next }), StepResult::Stepped { label: erased_label, next: erased_next }) => {
                if label != erased_label {
                    report.violations.push(RegionViolation::LabelMismatch { step, region: label.clone(), erased: erased_label });
                }
                let image = region_erase(&next).to_term();
                if !image.alpha_eq(&erased_next) {
                    report.violations.push(RegionViolation::ResidualMismatch {
                        step,
                        expected: erased_next.to_string(),
                        found: image.to_string(),
                    });
                }
                match effect_check(ctx, &next) {
                    Ok(e) if e.is_subset(&e0) => {}
                    Ok(e) => report.violations.push(RegionViolation::EffectNotPreserved { step, before: e0.to_string(), after: e.to_string() }),
                    Err(err) => report.violations.push(RegionViolation::EffectNotPreserved { step, before: e0.to_string(), after: err.to_string() }),
                }
                report.steps.push(label);
                if !report.violations.is_empty() {
                    report.status = Some(RegionStatus::Stuck);
                    return report;
                }
                cur = next;
                erased = erased_next;
            }
        }
    }
}
