use crate::name::{NameSupply, LABEL_PREFIX};
use crate::source::Term;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WellLabelClass {
    W0,
    W1,
    NotWellLabelled,
}

impl WellLabelClass {
    pub fn is_w0(self) -> bool {
        self != WellLabelClass::NotWellLabelled
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("term already carries labels")]
pub struct AlreadyLabelled;

/// The initial labelling `L = L_0`.
pub fn label_init(m: &Term) -> Result<Term, AlreadyLabelled> {
    if m.has_labels() {
        return Err(AlreadyLabelled);
    }
    let mut supply = NameSupply::new(LABEL_PREFIX);
    Ok(label_i(m, false, &mut supply))
}

/// `L_i` with `under_lam` standing for `i = 1`.
pub fn label_i(m: &Term, under_lam: bool, supply: &mut NameSupply) -> Term {
    match m {
        Term::Var(_) => m.clone(),
        Term::Lam(ps, b) => {
            let l = supply.fresh();
            Term::Lam(ps.clone(), Box::new(Term::Pre(l, Box::new(label_i(b, true, supply)))))
        }
        Term::Tuple(ts) => Term::Tuple(ts.iter().map(|t| label_i(t, false, supply)).collect()),
        Term::Proj(j, t) => Term::Proj(*j, Box::new(label_i(t, false, supply))),
        Term::App(f, args) => {
            let l = if under_lam { None } else { Some(supply.fresh()) };
            let f2 = label_i(f, false, supply);
            let a2 = args.iter().map(|a| label_i(a, false, supply)).collect();
            let app = Term::App(Box::new(f2), a2);
            match l {
                Some(l) => Term::Post(l, Box::new(app)),
                None => app,
            }
        }
        Term::Let(x, a, b) => {
            let a2 = label_i(a, false, supply);
            Term::Let(x.clone(), Box::new(a2), Box::new(label_i(b, under_lam, supply)))
        }
        Term::Pre(..) | Term::Post(..) => m.clone(),
    }
}

/// Least class of the well-labelling predicates containing `m`.
pub fn well_labelled(m: &Term) -> WellLabelClass {
    use WellLabelClass::*;
    fn all_w0<'a>(mut ts: impl Iterator<Item = &'a Term>) -> bool {
        ts.all(|t| well_labelled(t).is_w0())
    }
    match m {
        Term::Var(_) => W1,
        Term::Lam(_, b) => {
            if well_labelled(b) == W1 {
                W1
            } else {
                NotWellLabelled
            }
        }
        Term::App(f, args) => {
            if all_w0(std::iter::once(&**f).chain(args.iter())) {
                W1
            } else {
                NotWellLabelled
            }
        }
        Term::Tuple(ts) => {
            if all_w0(ts.iter()) {
                W1
            } else {
                NotWellLabelled
            }
        }
        Term::Proj(_, t) => {
            if well_labelled(t).is_w0() {
                W1
            } else {
                NotWellLabelled
            }
        }
        Term::Post(_, t) => {
            if well_labelled(t).is_w0() {
                W0
            } else {
                NotWellLabelled
            }
        }
        Term::Pre(_, t) => well_labelled(t),
        Term::Let(_, a, b) => {
            if well_labelled(a).is_w0() {
                well_labelled(b)
            } else {
                NotWellLabelled
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::alpha_eq;
    use crate::parse::{parse_term, parse_term_internal};

    #[test]
    fn labels_only_the_inner_application() {
        let m = parse_term("\\x. x @ (x @ (x))").unwrap();
        let expected = parse_term_internal("\\x. _l0> x @ (x @ (x) >_l1)").unwrap();
        assert_eq!(label_init(&m).unwrap(), expected);
    }

    #[test]
    fn let_bound_application_is_post_labelled() {
        let m = parse_term("let y = f @ (z) in y").unwrap();
        let expected = parse_term_internal("let y = f @ (z) >_l0 in y").unwrap();
        assert!(alpha_eq(&label_init(&m).unwrap(), &expected));
    }

    #[test]
    fn classes() {
        assert_eq!(well_labelled(&parse_term("x").unwrap()), WellLabelClass::W1);
        assert_eq!(well_labelled(&parse_term("\\x. x @ (x) >l").unwrap()), WellLabelClass::NotWellLabelled);
        assert_eq!(well_labelled(&parse_term("x @ (x) >l").unwrap()), WellLabelClass::W0);
        assert!(label_init(&parse_term("l> x").unwrap()).is_err());
    }
}
