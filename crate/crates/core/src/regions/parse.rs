use super::effect::RegionCtx;
use super::syntax::{Effect, RBindable, RDef, RParam, RTerm, RegionProgram, RegionType};
use crate::name::{Ident, RegionId};
use crate::parse::{Mode, ParseError, Parser, Tok};

impl Parser {
    fn region_list(&mut self, close: &str) -> Result<Vec<RegionId>, ParseError> {
        let mut out = Vec::new();
        if !self.is_sym(close) {
            out.push(self.ident()?);
            while self.eat_sym(",") {
                out.push(self.ident()?);
            }
        }
        self.expect_sym(close)?;
        Ok(out)
    }

    /// After the domain: `-{e}-> R` or `-> R`.
    fn arrow_tail(&mut self, regions: Vec<RegionId>, dom: Vec<RegionType>) -> Result<RegionType, ParseError> {
        let e = if self.eat_sym("-{") {
            let rs = self.region_list("}->")?;
            Effect(rs.into_iter().collect())
        } else {
            self.expect_sym("->")?;
            Effect::empty()
        };
        self.expect_kw("R")?;
        if dom.is_empty() {
            return Err(self.error("a function type needs at least one argument type"));
        }
        Ok(RegionType::Arrow(regions, dom, e))
    }

    fn rty_list(&mut self) -> Result<Vec<RegionType>, ParseError> {
        let mut items = Vec::new();
        if !self.is_sym(")") {
            items.push(self.rty()?);
            while self.eat_sym(",") {
                items.push(self.rty()?);
            }
        }
        self.expect_sym(")")?;
        Ok(items)
    }

    pub(crate) fn rty(&mut self) -> Result<RegionType, ParseError> {
        if self.is_kw("forall") {
            self.next();
            let mut rs = vec![self.ident()?];
            while self.eat_sym(",") {
                rs.push(self.ident()?);
            }
            self.expect_sym(".")?;
            let dom = if self.eat_sym("(") { self.rty_list()? } else { vec![self.rty_atom()?] };
            return self.arrow_tail(rs, dom);
        }
        if self.eat_sym("(") {
            if self.is_kw("exists") {
                self.next();
                let t = self.ident()?;
                self.expect_sym(".")?;
                let a = self.rty()?;
                self.expect_sym(")")?;
                self.expect_sym("@")?;
                let r = self.ident()?;
                let ty = RegionType::ExistsAt(t, Box::new(a), r);
                return self.maybe_arrow(ty);
            }
            let items = self.rty_list()?;
            if self.is_sym("-{") || self.is_sym("->") {
                return self.arrow_tail(vec![], items);
            }
            let mut items = items;
            if items.len() != 1 {
                return Err(self.error("a parenthesised type list must be followed by an arrow"));
            }
            return Ok(items.pop().unwrap());
        }
        let a = self.rty_atom()?;
        self.maybe_arrow(a)
    }

    fn maybe_arrow(&mut self, a: RegionType) -> Result<RegionType, ParseError> {
        if self.is_sym("-{") || self.is_sym("->") {
            self.arrow_tail(vec![], vec![a])
        } else {
            Ok(a)
        }
    }

    fn rty_atom(&mut self) -> Result<RegionType, ParseError> {
        if self.eat_sym("*") {
            self.expect_sym("(")?;
            let items = self.rty_list()?;
            if items.is_empty() {
                return Ok(RegionType::Unit);
            }
            self.expect_sym("@")?;
            let r = self.ident()?;
            return Ok(RegionType::ProductAt(items, r));
        }
        if self.eat_sym("(") {
            let t = self.rty()?;
            self.expect_sym(")")?;
            return Ok(t);
        }
        Ok(RegionType::Var(self.ident()?))
    }

    fn rparams(&mut self) -> Result<Vec<RParam>, ParseError> {
        let mut ps: Vec<RParam> = Vec::new();
        loop {
            if self.eat_sym("(") {
                let x = self.binder()?;
                self.expect_sym(":")?;
                let t = self.rty()?;
                self.expect_sym(")")?;
                ps.push(RParam { name: x, ty: Some(t) });
            } else if matches!(self.peek(), Tok::Id(_)) {
                let x = self.binder()?;
                ps.push(RParam { name: x, ty: None });
            } else {
                break;
            }
            self.eat_sym(",");
        }
        if ps.is_empty() {
            return Err(self.error("an abstraction needs at least one parameter"));
        }
        for (i, p) in ps.iter().enumerate() {
            if ps[..i].iter().any(|q| q.name == p.name) {
                return Err(self.error(format!("duplicate parameter `{}`", p.name)));
            }
        }
        Ok(ps)
    }

    fn rdef_after_eq(&mut self, name: Ident) -> Result<RDef, ParseError> {
        self.expect_sym("\\")?;
        let regions = if self.eat_sym("[") { self.region_list("]")? } else { vec![] };
        for (i, r) in regions.iter().enumerate() {
            if regions[..i].contains(r) {
                return Err(self.error(format!("duplicate region parameter `{r}`")));
            }
        }
        let params = self.rparams()?;
        let effect = if self.eat_sym("!") {
            self.expect_sym("{")?;
            Some(Effect(self.region_list("}")?.into_iter().collect()))
        } else {
            None
        };
        self.expect_sym(".")?;
        let body = self.rterm()?;
        self.expect_kw("in")?;
        Ok(RDef { name, regions, params, effect, body })
    }

    fn rbindable(&mut self) -> Result<RBindable, ParseError> {
        if self.is_kw("proj") {
            self.next();
            let i = self.index()?;
            return Ok(RBindable::Proj(i, self.ident()?));
        }
        if self.is_kw("pack") {
            self.next();
            self.expect_sym("[")?;
            let t = self.rty()?;
            self.expect_sym("]")?;
            self.expect_sym("(")?;
            let y = self.ident()?;
            self.expect_sym(")")?;
            if !matches!(t, RegionType::ExistsAt(..)) {
                return Err(self.error("a pack annotation must be a located existential type"));
            }
            return Ok(RBindable::Pack(y, t));
        }
        let ys = self.id_list()?;
        if ys.is_empty() {
            if self.is_sym("@") {
                return Err(self.error("an empty tuple is not stored in a region"));
            }
            return Ok(RBindable::Unit);
        }
        self.expect_sym("@")?;
        Ok(RBindable::TupleAt(ys, self.ident()?))
    }

    pub(crate) fn rterm(&mut self) -> Result<RTerm, ParseError> {
        if self.is_kw("let") {
            self.next();
            let x = self.binder()?;
            self.expect_sym("=")?;
            if self.is_sym("\\") {
                return Err(self.error("functions may only be defined at the top of a region program"));
            }
            let b = self.rbindable()?;
            self.expect_kw("in")?;
            return Ok(RTerm::Let(x, b, Box::new(self.rterm()?)));
        }
        for (kw, ctor) in [("newreg", RTerm::NewReg as fn(_, _) -> _), ("dispose", RTerm::Dispose)] {
            if self.is_kw(kw) {
                self.next();
                let r = self.ident()?;
                self.expect_kw("in")?;
                return Ok(ctor(r, Box::new(self.rterm()?)));
            }
        }
        if let Tok::PreLabel(l) = self.peek().clone() {
            let l = self.label_name(&l)?;
            self.next();
            return Ok(RTerm::Pre(l, Box::new(self.rterm()?)));
        }
        if self.eat_sym("(") {
            let m = self.rterm()?;
            self.expect_sym(")")?;
            return Ok(m);
        }
        let f = self.ident()?;
        self.expect_sym("@")?;
        let rs = if self.eat_sym("[") { self.region_list("]")? } else { vec![] };
        let ys = self.id_list()?;
        if ys.is_empty() {
            return Err(self.error("an application needs at least one argument"));
        }
        Ok(RTerm::App(f, rs, ys))
    }

    fn region_program(&mut self) -> Result<RegionProgram, ParseError> {
        let mut defs = Vec::new();
        while self.is_kw("let") && *self.peek_at(3) == Tok::Sym("\\") {
            self.next();
            let name = self.binder()?;
            self.expect_sym("=")?;
            defs.push(self.rdef_after_eq(name)?);
        }
        let main = self.rterm()?;
        Ok(RegionProgram { defs, main })
    }
}

pub fn parse_region_program_mode(src: &str, mode: Mode) -> Result<RegionProgram, ParseError> {
    let mut p = Parser::new(src, mode)?;
    let prog = p.region_program()?;
    p.expect_eof()?;
    Ok(prog)
}

/// Parses a region program; reserved names are accepted so printed output round-trips.
pub fn parse_region_program(src: &str) -> Result<RegionProgram, ParseError> {
    parse_region_program_mode(src, Mode::Internal)
}

pub fn parse_region_type(src: &str) -> Result<RegionType, ParseError> {
    let mut p = Parser::new(src, Mode::Internal)?;
    let t = p.rty()?;
    p.expect_eof()?;
    Ok(t)
}

/// Parses a context `x: A, y: B` over region types.
pub fn parse_region_ctx(src: &str) -> Result<RegionCtx, ParseError> {
    let mut p = Parser::new(src, Mode::Internal)?;
    let mut out = Vec::new();
    if *p.peek() != Tok::Eof {
        loop {
            let x = p.ident()?;
            p.expect_sym(":")?;
            out.push((x, p.rty()?));
            if !p.eat_sym(",") {
                break;
            }
        }
    }
    p.expect_eof()?;
    Ok(RegionCtx::from_pairs(out))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn types_round_trip() {
        for s in ["t", "*()", "*(t1, t2)@r", "(exists t. *(t, t)@r)@r", "forall r. (*(t1, t2)@r) -{r}-> R", "(t1, t2) -{}-> R"] {
            let t = parse_region_type(s).unwrap();
            assert_eq!(parse_region_type(&t.to_string()).unwrap(), t, "{s}");
        }
        assert_eq!(parse_region_type("t1 -> R").unwrap(), parse_region_type("(t1) -{}-> R").unwrap());
    }

    #[test]
    fn programs_round_trip() {
        let src = "let f = \\[r] (x: *(t1, t2)@r) !{r}. let z = proj 1 x in dispose r in halt @ (z) in
                   newreg r in let u = () in let y = (a, b)@r in f @ [r] (y)";
        let p = parse_region_program(src).unwrap();
        assert_eq!(p.defs.len(), 1);
        assert_eq!(parse_region_program(&p.to_string()).unwrap(), p);
    }

    #[test]
    fn empty_tuple_has_no_region() {
        assert!(parse_region_program("let x = ()@r in f @ (x)").is_err());
    }
}
