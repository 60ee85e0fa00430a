//! Typed-by-construction generation of source terms.

use crate::name::{Ident, Name, TyVar};
use crate::source::{Param, Term};
use crate::types::Type;
use crate::typing::TypeCtx;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    /// Upper bound on `Term::size` of every generated term.
    pub max_size: usize,
    pub max_tuple_width: usize,
    pub base_types: Vec<TyVar>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { seed: 0, max_size: 30, max_tuple_width: 3, base_types: vec![Name::new("t"), Name::new("u")] }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum GenError {
    #[error("no inhabitant of {target} found within size {budget}")]
    GiveUp { target: String, budget: usize },
}

#[derive(Clone, Copy)]
enum Form {
    Var,
    Intro,
    App,
    Let,
    Proj,
}

/// Percent weights; applications dominate.
const WEIGHTS: [(Form, u32); 5] = [(Form::App, 40), (Form::Intro, 20), (Form::Var, 15), (Form::Proj, 13), (Form::Let, 12)];

/// A seeded term generator. Successive calls continue one deterministic stream.
pub struct Generator {
    cfg: GenConfig,
    rng: ChaCha8Rng,
    next_name: usize,
}

impl Generator {
    pub fn new(cfg: GenConfig) -> Generator {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Generator { cfg, rng, next_name: 0 }
    }

    /// An independent generator for the `stream`-th case under the same seed.
    pub fn for_stream(cfg: GenConfig, stream: u64) -> Generator {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(stream);
        Generator { cfg, rng, next_name: 0 }
    }

    pub fn config(&self) -> &GenConfig {
        &self.cfg
    }

    pub fn term(&mut self, target: &Type, ctx: &TypeCtx) -> Result<Term, GenError> {
        self.next_name = 0;
        let mut scope: Vec<(Ident, Type)> = ctx.visible();
        for _ in 0..8 {
            if let Some(t) = self.gen(&mut scope, target, self.cfg.max_size) {
                return Ok(t);
            }
        }
        Err(GenError::GiveUp { target: target.to_string(), budget: self.cfg.max_size })
    }

    /// A small random type over the base types, at most `depth` constructors deep.
    pub fn random_type(&mut self, depth: usize) -> Type {
        let base = Type::Var(self.cfg.base_types.choose(&mut self.rng).expect("at least one base type").clone());
        if depth == 0 {
            return base;
        }
        match self.rng.gen_range(0..10) {
            0 | 1 => {
                let n = self.rng.gen_range(1..=2);
                let dom = (0..n).map(|_| self.random_type(depth - 1)).collect();
                Type::arrow(dom, self.random_type(depth - 1))
            }
            2 => {
                let n = self.rng.gen_range(2..=self.cfg.max_tuple_width.max(2));
                Type::Product((0..n).map(|_| self.random_type(depth - 1)).collect())
            }
            _ => base,
        }
    }

    fn fresh(&mut self, scope: &[(Ident, Type)]) -> Ident {
        loop {
            let n = Name::new(&format!("v{}", self.next_name));
            self.next_name += 1;
            if !scope.iter().any(|(x, _)| *x == n) {
                return n;
            }
        }
    }

    /// A type for an intermediate: either one already in scope or a fresh random one.
    fn pick_type(&mut self, scope: &[(Ident, Type)]) -> Type {
        if !scope.is_empty() && self.rng.gen_bool(0.4) {
            scope.choose(&mut self.rng).unwrap().1.clone()
        } else {
            self.random_type(1)
        }
    }

    /// Budgets at least `mins[i]` each, summing to at most `total`, with the slack spread randomly.
    fn split(&mut self, total: usize, mins: &[usize]) -> Option<Vec<usize>> {
        let need: usize = mins.iter().sum();
        if need > total {
            return None;
        }
        let mut out = mins.to_vec();
        let mut slack = total - need;
        while slack > 0 && !out.is_empty() {
            let i = self.rng.gen_range(0..out.len());
            let give = self.rng.gen_range(1..=slack);
            out[i] += give;
            slack -= give;
            if self.rng.gen_bool(0.3) {
                break;
            }
        }
        Some(out)
    }

    fn gen(&mut self, scope: &mut Vec<(Ident, Type)>, ty: &Type, budget: usize) -> Option<Term> {
        if budget == 0 {
            return None;
        }
        let mut forms: Vec<(Form, u32)> = WEIGHTS.to_vec();
        let mut order = Vec::new();
        while !forms.is_empty() {
            let total: u32 = forms.iter().map(|(_, w)| w).sum();
            let mut pick = self.rng.gen_range(0..total);
            let i = forms
                .iter()
                .position(|(_, w)| {
                    if pick < *w {
                        true
                    } else {
                        pick -= w;
                        false
                    }
                })
                .unwrap();
            order.push(forms.remove(i).0);
        }
        for form in order {
            let r = match form {
                Form::Var => self.var(scope, ty),
                Form::Intro => self.intro(scope, ty, budget),
                Form::App => self.app(scope, ty, budget),
                Form::Let => self.let_(scope, ty, budget),
                Form::Proj => self.proj(scope, ty, budget),
            };
            if r.is_some() {
                return r;
            }
        }
        None
    }

    fn var(&mut self, scope: &[(Ident, Type)], ty: &Type) -> Option<Term> {
        // Only the innermost binding of a name is visible.
        let hits: Vec<&Ident> = scope
            .iter()
            .enumerate()
            .filter(|(i, (x, t))| t.alpha_eq(ty) && !scope[i + 1..].iter().any(|(y, _)| y == x))
            .map(|(_, (x, _))| x)
            .collect();
        hits.choose(&mut self.rng).map(|x| Term::Var((*x).clone()))
    }

    fn intro(&mut self, scope: &mut Vec<(Ident, Type)>, ty: &Type, budget: usize) -> Option<Term> {
        match ty {
            Type::Arrow(dom, cod) => {
                let n = scope.len();
                let mut params = Vec::new();
                for d in dom {
                    let x = self.fresh(scope);
                    scope.push((x.clone(), d.clone()));
                    params.push(Param::typed(x, d.clone()));
                }
                let body = self.gen(scope, cod, budget - 1);
                scope.truncate(n);
                Some(Term::Lam(params, Box::new(body?)))
            }
            Type::Product(ts) => {
                let mins: Vec<usize> = ts.iter().map(|t| min_size(scope, t)).collect::<Option<_>>()?;
                let budgets = self.split(budget - 1, &mins)?;
                let mut out = Vec::new();
                for (t, b) in ts.iter().zip(budgets) {
                    out.push(self.gen(scope, t, b)?);
                }
                Some(Term::Tuple(out))
            }
            _ => None,
        }
    }

    fn app(&mut self, scope: &mut Vec<(Ident, Type)>, ty: &Type, budget: usize) -> Option<Term> {
        if budget < 3 {
            return None;
        }
        let arity = if budget >= 6 && self.rng.gen_bool(0.3) { 2 } else { 1 };
        let args: Vec<Type> = (0..arity).map(|_| self.pick_type(scope)).collect();
        let fty = Type::arrow(args.clone(), ty.clone());
        let mut mins = vec![min_size(scope, &fty)?];
        for a in &args {
            mins.push(min_size(scope, a)?);
        }
        let budgets = self.split(budget - 1, &mins)?;
        let f = self.gen(scope, &fty, budgets[0])?;
        let mut out = Vec::new();
        for (a, b) in args.iter().zip(&budgets[1..]) {
            out.push(self.gen(scope, a, *b)?);
        }
        Some(Term::app(f, out))
    }

    fn let_(&mut self, scope: &mut Vec<(Ident, Type)>, ty: &Type, budget: usize) -> Option<Term> {
        if budget < 3 {
            return None;
        }
        let a = self.pick_type(scope);
        let x = self.fresh(scope);
        let m_min = min_size(scope, &a)?;
        scope.push((x.clone(), a.clone()));
        let n_min = min_size(scope, ty);
        scope.pop();
        let budgets = self.split(budget - 1, &[m_min, n_min?])?;
        let m = self.gen(scope, &a, budgets[0])?;
        scope.push((x.clone(), a));
        let n = self.gen(scope, ty, budgets[1]);
        scope.pop();
        Some(Term::Let(x, Box::new(m), Box::new(n?)))
    }

    fn proj(&mut self, scope: &mut Vec<(Ident, Type)>, ty: &Type, budget: usize) -> Option<Term> {
        if budget < 2 {
            return None;
        }
        let w = self.rng.gen_range(1..=self.cfg.max_tuple_width.max(1));
        let i = self.rng.gen_range(1..=w);
        let comps: Vec<Type> = (1..=w).map(|j| if j == i { ty.clone() } else { self.random_type(0) }).collect();
        let pty = Type::Product(comps);
        if min_size(scope, &pty)? > budget - 1 {
            return None;
        }
        let m = self.gen(scope, &pty, budget - 1)?;
        Some(Term::Proj(i, Box::new(m)))
    }
}

/// Size of the smallest inhabitant built from variables and introduction forms only.
fn min_size(scope: &[(Ident, Type)], ty: &Type) -> Option<usize> {
    fn go(avail: &mut Vec<Type>, ty: &Type, depth: usize) -> Option<usize> {
        if avail.iter().any(|t| t.alpha_eq(ty)) {
            return Some(1);
        }
        if depth == 0 {
            return None;
        }
        match ty {
            Type::Arrow(dom, cod) => {
                let n = avail.len();
                avail.extend(dom.iter().cloned());
                let r = go(avail, cod, depth - 1);
                avail.truncate(n);
                Some(1 + r?)
            }
            Type::Product(ts) => {
                let mut s = 1;
                for t in ts {
                    s += go(avail, t, depth - 1)?;
                }
                Some(s)
            }
            _ => None,
        }
    }
    go(&mut scope.iter().map(|(_, t)| t.clone()).collect(), ty, 6)
}

pub fn gen_typed_term(cfg: &GenConfig, target: &Type, ctx: &TypeCtx) -> Result<Term, GenError> {
    Generator::new(cfg.clone()).term(target, ctx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::{parse_ctx, parse_type};
    use crate::semantics::{eval_trace, Fuel};
    use crate::transform::{label_init, well_labelled};
    use crate::typing::typecheck_source;

    fn ctx() -> TypeCtx {
        TypeCtx::from_pairs(parse_ctx("x: t, y: u, f: t -> t").unwrap())
    }

    #[test]
    fn size_one_gives_the_only_inhabitant() {
        let cfg = GenConfig { max_size: 1, ..GenConfig::default() };
        let c = TypeCtx::from_pairs(parse_ctx("x: t").unwrap());
        assert_eq!(gen_typed_term(&cfg, &Type::var("t"), &c).unwrap(), Term::var("x"));
    }

    #[test]
    fn uninhabited_targets_give_up() {
        let cfg = GenConfig { max_size: 5, ..GenConfig::default() };
        assert!(matches!(gen_typed_term(&cfg, &Type::var("w"), &ctx()), Err(GenError::GiveUp { .. })));
    }

    #[test]
    fn same_seed_same_sequence() {
        let cfg = GenConfig { seed: 11, ..GenConfig::default() };
        let target = parse_type("*(t, u)").unwrap();
        let mut a = Generator::new(cfg.clone());
        let mut b = Generator::new(cfg);
        for _ in 0..20 {
            assert_eq!(a.term(&target, &ctx()).unwrap(), b.term(&target, &ctx()).unwrap());
        }
    }

    #[test]
    fn generated_terms_type_terminate_and_label_well() {
        for seed in 0..200 {
            let mut g = Generator::new(GenConfig { seed, ..GenConfig::default() });
            let target = g.random_type(2);
            let m = g.term(&target, &ctx()).unwrap();
            assert!(m.size() <= 30);
            let got = typecheck_source(&ctx(), &m).unwrap();
            assert!(got.alpha_eq(&target), "{m}: {got} vs {target}");
            assert!(eval_trace(&m, Fuel::default()).is_ok(), "{m}");
            assert!(well_labelled(&label_init(&m).unwrap()).is_w0());
        }
    }
}
