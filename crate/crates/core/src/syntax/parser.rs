//! Recursive-descent parser for the theory DSL.
//!
//! Formulas are read into an untyped form first and elaborated once their
//! context is known, since in a sequent the context sits between premise and
//! conclusion. During elaboration an identifier denotes a context variable if
//! one of that name exists and a constant symbol otherwise.

use super::ast::{Atom, Context, FormulaInContext, HornFormula, Sequent, Signature, Sort, Term, Theory, Variable};
use super::error::{ParseError, SyntaxError};
use super::lexer::{tokenize, Tok, Token};
use super::relative::{Operator, RelativeTheory};

const SECTION_KEYWORDS: &[&str] = &["functions", "relations", "axioms", "operators", "judgments", "end"];

/// Result of parsing a theory file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ParsedTheory {
    Plain(Theory),
    Relative(RelativeTheory),
}

impl ParsedTheory {
    pub fn name(&self) -> &str {
        match self {
            ParsedTheory::Plain(t) => &t.name,
            ParsedTheory::Relative(rt) => &rt.name,
        }
    }

    /// The partial Horn theory whose models are the models of this one;
    /// relative theories are expanded.
    pub fn theory(&self) -> Theory {
        match self {
            ParsedTheory::Plain(t) => t.clone(),
            ParsedTheory::Relative(rt) => rt.expand(),
        }
    }

    /// Plain theories are read as relative theories without operators.
    pub fn relative(&self) -> RelativeTheory {
        match self {
            ParsedTheory::Plain(t) => RelativeTheory::trivial(t.clone()),
            ParsedTheory::Relative(rt) => rt.clone(),
        }
    }
}

pub fn parse_theory(src: &str) -> Result<ParsedTheory, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.theory()?;
    p.expect_eof()?;
    Ok(t)
}

/// `g:mor, f:mor`, with or without surrounding brackets.
pub fn parse_context(sig: &Signature, src: &str) -> Result<Context, ParseError> {
    let mut p = Parser::new(src)?;
    let ctx = if p.peek() == &Tok::LBracket {
        p.context(sig)?
    } else {
        p.context_body(sig, &Tok::Eof)?
    };
    p.expect_eof()?;
    Ok(ctx)
}

/// A formula (`top` or atoms joined by `&`) over an already known context.
pub fn parse_formula(sig: &Signature, ctx: &Context, src: &str) -> Result<HornFormula, ParseError> {
    let mut p = Parser::new(src)?;
    let raw = p.formula()?;
    p.expect_eof()?;
    elaborate_formula(sig, ctx, &raw)
}

/// `[x:s, y:s] formula`
pub fn parse_formula_in_context(sig: &Signature, src: &str) -> Result<FormulaInContext, ParseError> {
    let mut p = Parser::new(src)?;
    let ctx = p.context(sig)?;
    let raw = p.formula()?;
    p.expect_eof()?;
    let body = elaborate_formula(sig, &ctx, &raw)?;
    Ok(FormulaInContext::new(ctx, body))
}

/// A single sequent; a bisequent is rejected here since it denotes two.
pub fn parse_sequent(sig: &Signature, src: &str) -> Result<Sequent, ParseError> {
    let mut p = Parser::new(src)?;
    let (start, seqs) = p.sequent(sig)?;
    p.expect_eof()?;
    match <[Sequent; 1]>::try_from(seqs) {
        Ok([s]) => Ok(s),
        Err(_) => Err(ParseError::syntax(start.0, start.1, "expected `|-`, found a bisequent")),
    }
}

pub fn parse_term(sig: &Signature, ctx: &Context, src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let raw = p.term()?;
    p.expect_eof()?;
    Ok(elaborate_term(sig, ctx, &raw)?.0)
}

/// Comma-separated terms; the empty string is the empty list.
pub fn parse_terms(sig: &Signature, ctx: &Context, src: &str) -> Result<Vec<Term>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    if p.peek() != &Tok::Eof {
        loop {
            let raw = p.term()?;
            out.push(elaborate_term(sig, ctx, &raw)?.0);
            if !p.eat(&Tok::Comma) {
                break;
            }
        }
    }
    p.expect_eof()?;
    Ok(out)
}

type Pos = (usize, usize);

#[derive(Debug, Clone)]
enum RawTerm {
    Name(String, Pos),
    Call(String, Vec<RawTerm>, Pos),
}

impl RawTerm {
    fn pos(&self) -> Pos {
        match self {
            RawTerm::Name(_, p) | RawTerm::Call(_, _, p) => *p,
        }
    }
}

#[derive(Debug, Clone)]
enum RawAtom {
    Eq(RawTerm, RawTerm, Pos),
    Defined(RawTerm),
    Rel(String, Vec<RawTerm>, Pos),
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: tokenize(src)?,
            i: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.i + k).min(self.toks.len() - 1)].tok
    }

    fn pos(&self) -> Pos {
        let t = &self.toks[self.i];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if self.i + 1 < self.toks.len() {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn unexpected(&self, what: &str) -> ParseError {
        let (l, c) = self.pos();
        ParseError::syntax(l, c, format!("expected {what}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn expect_eof(&mut self) -> Result<(), ParseError> {
        self.expect(&Tok::Eof)
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn at_section_keyword(&self) -> bool {
        matches!(self.peek(), Tok::Ident(s) if SECTION_KEYWORDS.contains(&s.as_str()))
    }

    /// A sort name: an identifier or `*`.
    fn sort_name(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Sort::new(s))
            }
            Tok::Star => {
                self.bump();
                Ok(Sort::new("*"))
            }
            _ => Err(self.unexpected("a sort")),
        }
    }

    fn declared_sort(&mut self, sig: &Signature) -> Result<Sort, ParseError> {
        let (l, c) = self.pos();
        let s = self.sort_name()?;
        sig.ensure_sort(&s).map_err(|e| ParseError::from_syntax_error(l, c, e))?;
        Ok(s)
    }

    /// `s1 * s2 * ... * sn`
    fn sort_product(&mut self, sig: &Signature) -> Result<Vec<Sort>, ParseError> {
        let mut out = vec![self.declared_sort(sig)?];
        while self.peek() == &Tok::Star {
            self.bump();
            out.push(self.declared_sort(sig)?);
        }
        Ok(out)
    }

    /// Declared symbol name: identifier or one of the infix operators.
    fn symbol_name(&mut self) -> Result<String, ParseError> {
        if let Some(sym) = self.peek().infix_symbol() {
            self.bump();
            return Ok(sym.to_string());
        }
        self.ident()
    }

    fn at_declaration(&self) -> bool {
        let name = matches!(self.peek(), Tok::Ident(_)) && !self.at_section_keyword() || self.peek().infix_symbol().is_some();
        name && self.peek_at(1) == &Tok::Colon
    }

    fn theory(&mut self) -> Result<ParsedTheory, ParseError> {
        self.keyword("theory")?;
        let name = self.ident()?;
        self.keyword("sorts")?;
        let mut sig = Signature::new();
        while !self.at_section_keyword() && matches!(self.peek(), Tok::Ident(_) | Tok::Star) {
            let (l, c) = self.pos();
            let s = self.sort_name()?;
            sig.add_sort(s).map_err(|e| ParseError::from_syntax_error(l, c, e))?;
        }
        if sig.sorts().is_empty() {
            return Err(self.unexpected("at least one sort"));
        }

        let mut axioms = Vec::new();
        let mut operators: Vec<Operator> = Vec::new();
        let mut judgments = Vec::new();
        let mut relative = false;
        let mut ext = sig.clone();

        loop {
            let (l, c) = self.pos();
            let kw = match self.peek() {
                Tok::Ident(s) if SECTION_KEYWORDS.contains(&s.as_str()) => s.clone(),
                _ => return Err(self.unexpected("a section keyword or `end`")),
            };
            self.bump();
            let base_frozen = relative;
            match kw.as_str() {
                "end" => break,
                "functions" | "relations" if base_frozen => {
                    return Err(ParseError::syntax(l, c, format!("`{kw}` must precede operators and judgments")));
                }
                "functions" => {
                    while self.at_declaration() {
                        let (l, c) = self.pos();
                        let f = self.symbol_name()?;
                        self.expect(&Tok::Colon)?;
                        let args = if self.peek() == &Tok::Arrow {
                            Vec::new()
                        } else {
                            self.sort_product(&sig)?
                        };
                        self.expect(&Tok::Arrow)?;
                        let result = self.declared_sort(&sig)?;
                        sig.add_function(f, args, result)
                            .map_err(|e| ParseError::from_syntax_error(l, c, e))?;
                    }
                    ext = sig.clone();
                }
                "relations" => {
                    while self.at_declaration() {
                        let (l, c) = self.pos();
                        let r = self.symbol_name()?;
                        self.expect(&Tok::Colon)?;
                        let args = if self.eat(&Tok::LParen) {
                            self.expect(&Tok::RParen)?;
                            Vec::new()
                        } else {
                            self.sort_product(&sig)?
                        };
                        sig.add_relation(r, args)
                            .map_err(|e| ParseError::from_syntax_error(l, c, e))?;
                    }
                    ext = sig.clone();
                }
                "axioms" => {
                    if base_frozen {
                        return Err(ParseError::syntax(l, c, "`axioms` must precede operators and judgments"));
                    }
                    while !self.at_section_keyword() && self.peek() != &Tok::Eof {
                        axioms.extend(self.sequent(&sig)?.1);
                    }
                }
                "operators" => {
                    relative = true;
                    while self.at_declaration() {
                        let (l, c) = self.pos();
                        let name = self.symbol_name()?;
                        self.expect(&Tok::Colon)?;
                        let ctx = self.context_open(&sig, &Tok::Bar)?;
                        self.expect(&Tok::Bar)?;
                        let raw = self.formula()?;
                        self.expect(&Tok::RBracket)?;
                        self.expect(&Tok::Arrow)?;
                        let result = self.declared_sort(&sig)?;
                        let body = elaborate_formula(&sig, &ctx, &raw)?;
                        let op = Operator {
                            name: name.clone(),
                            arity: FormulaInContext::new(ctx, body),
                            result: result.clone(),
                        };
                        ext.add_function(name, op.arg_sorts(), result)
                            .map_err(|e| ParseError::from_syntax_error(l, c, e))?;
                        operators.push(op);
                    }
                }
                "judgments" => {
                    relative = true;
                    while !self.at_section_keyword() && self.peek() != &Tok::Eof {
                        let ((l, c), seqs) = self.sequent(&ext)?;
                        for s in seqs {
                            if let Some(op) = s.premise.symbols().into_iter().find(|f| operators.iter().any(|o| o.name == *f)) {
                                return Err(ParseError::from_syntax_error(l, c, SyntaxError::OperatorInPremise(op.to_string())));
                            }
                            judgments.push(s);
                        }
                    }
                }
                _ => unreachable!(),
            }
        }

        let base = Theory {
            name: name.clone(),
            signature: sig,
            axioms,
        };
        if relative {
            Ok(ParsedTheory::Relative(RelativeTheory {
                name,
                base,
                operators,
                judgments,
            }))
        } else {
            Ok(ParsedTheory::Plain(base))
        }
    }

    /// `[ctx]`
    fn context(&mut self, sig: &Signature) -> Result<Context, ParseError> {
        let ctx = self.context_open(sig, &Tok::RBracket)?;
        self.expect(&Tok::RBracket)?;
        Ok(ctx)
    }

    /// `[ctx` up to (not including) `close`.
    fn context_open(&mut self, sig: &Signature, close: &Tok) -> Result<Context, ParseError> {
        self.expect(&Tok::LBracket)?;
        self.context_body(sig, close)
    }

    fn context_body(&mut self, sig: &Signature, close: &Tok) -> Result<Context, ParseError> {
        let mut vars = Vec::new();
        let start = self.pos();
        if self.peek() != close {
            loop {
                let (l, c) = self.pos();
                let name = self.ident()?;
                if sig.is_symbol(&name) {
                    return Err(ParseError::from_syntax_error(l, c, SyntaxError::VariableShadowsSymbol(name)));
                }
                self.expect(&Tok::Colon)?;
                let sort = self.declared_sort(sig)?;
                vars.push(Variable::new(name, sort));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        Context::new(vars).map_err(|e| ParseError::from_syntax_error(start.0, start.1, e))
    }

    /// `formula (|- | -||-) [ctx] formula`, returning one or two sequents.
    fn sequent(&mut self, sig: &Signature) -> Result<(Pos, Vec<Sequent>), ParseError> {
        let start = self.pos();
        let lhs = self.formula()?;
        let bi = match self.peek() {
            Tok::Turnstile => false,
            Tok::Biturnstile => true,
            _ => return Err(self.unexpected("`|-` or `-||-`")),
        };
        self.bump();
        let ctx = self.context(sig)?;
        let rhs = self.formula()?;
        let premise = elaborate_formula(sig, &ctx, &lhs)?;
        let conclusion = elaborate_formula(sig, &ctx, &rhs)?;
        let mut out = vec![Sequent::new(ctx.clone(), premise.clone(), conclusion.clone())];
        if bi {
            out.push(Sequent::new(ctx, conclusion, premise));
        }
        Ok((start, out))
    }

    fn formula(&mut self) -> Result<Vec<RawAtom>, ParseError> {
        if matches!(self.peek(), Tok::Ident(s) if s == "top") {
            self.bump();
            return Ok(Vec::new());
        }
        let mut atoms = vec![self.atom()?];
        while self.eat(&Tok::Amp) {
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<RawAtom, ParseError> {
        let start = self.pos();
        let lhs = self.term()?;
        if self.eat(&Tok::Equals) {
            let rhs = self.term()?;
            return Ok(RawAtom::Eq(lhs, rhs, start));
        }
        if self.eat(&Tok::Bang) {
            return Ok(RawAtom::Defined(lhs));
        }
        match lhs {
            RawTerm::Name(r, p) => Ok(RawAtom::Rel(r, Vec::new(), p)),
            RawTerm::Call(r, args, p) if !super::ast::is_infix(&r) => Ok(RawAtom::Rel(r, args, p)),
            RawTerm::Call(..) => Err(self.unexpected("`=` or `!` after a term")),
        }
    }

    /// Infix operators share one precedence level and associate to the left.
    fn term(&mut self) -> Result<RawTerm, ParseError> {
        let mut lhs = self.primary()?;
        while let Some(sym) = self.peek().infix_symbol() {
            let p = self.pos();
            self.bump();
            let rhs = self.primary()?;
            lhs = RawTerm::Call(sym.to_string(), vec![lhs, rhs], p);
        }
        Ok(lhs)
    }

    fn primary(&mut self) -> Result<RawTerm, ParseError> {
        let p = self.pos();
        if self.eat(&Tok::LParen) {
            let t = self.term()?;
            self.expect(&Tok::RParen)?;
            return Ok(t);
        }
        let name = self.ident()?;
        // An argument list must follow its symbol without intervening space.
        let adjacent = {
            let t = &self.toks[self.i];
            t.tok == Tok::LParen && t.line == p.0 && t.column == p.1 + name.chars().count()
        };
        if !adjacent {
            return Ok(RawTerm::Name(name, p));
        }
        self.bump();
        let mut args = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                args.push(self.term()?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        Ok(RawTerm::Call(name, args, p))
    }
}

fn at(pos: Pos, err: SyntaxError) -> ParseError {
    ParseError::from_syntax_error(pos.0, pos.1, err)
}

fn elaborate_term(sig: &Signature, ctx: &Context, raw: &RawTerm) -> Result<(Term, Sort), ParseError> {
    match raw {
        RawTerm::Name(n, p) => {
            if let Some(v) = ctx.get(n) {
                return Ok((Term::Var(v.clone()), v.sort.clone()));
            }
            match sig.function(n) {
                Some(decl) if decl.args.is_empty() => Ok((Term::constant(n.clone()), decl.result.clone())),
                Some(decl) => Err(at(
                    *p,
                    SyntaxError::ArityMismatch {
                        symbol: n.clone(),
                        expected: decl.args.len(),
                        found: 0,
                    },
                )),
                None => Err(at(*p, SyntaxError::UnboundVariable(n.clone()))),
            }
        }
        RawTerm::Call(f, args, p) => {
            let decl = sig.function(f).ok_or_else(|| at(*p, SyntaxError::UnknownFunction(f.clone())))?;
            if decl.args.len() != args.len() {
                return Err(at(
                    *p,
                    SyntaxError::ArityMismatch {
                        symbol: f.clone(),
                        expected: decl.args.len(),
                        found: args.len(),
                    },
                ));
            }
            let mut out = Vec::with_capacity(args.len());
            for (arg, expected) in args.iter().zip(&decl.args) {
                let (t, s) = elaborate_term(sig, ctx, arg)?;
                if &s != expected {
                    return Err(at(
                        arg.pos(),
                        SyntaxError::SortMismatch {
                            at: format!("argument of `{f}`"),
                            expected: expected.clone(),
                            found: s,
                        },
                    ));
                }
                out.push(t);
            }
            Ok((Term::App(f.clone(), out), decl.result.clone()))
        }
    }
}

fn elaborate_formula(sig: &Signature, ctx: &Context, raw: &[RawAtom]) -> Result<HornFormula, ParseError> {
    let mut atoms = Vec::with_capacity(raw.len());
    for a in raw {
        atoms.push(match a {
            RawAtom::Defined(t) => Atom::defined(elaborate_term(sig, ctx, t)?.0),
            RawAtom::Eq(l, r, p) => {
                let (lt, ls) = elaborate_term(sig, ctx, l)?;
                let (rt, rs) = elaborate_term(sig, ctx, r)?;
                if ls != rs {
                    return Err(at(
                        *p,
                        SyntaxError::SortMismatch {
                            at: "equation".into(),
                            expected: ls,
                            found: rs,
                        },
                    ));
                }
                Atom::Eq(lt, rt)
            }
            RawAtom::Rel(r, args, p) => {
                let decl = sig.relation(r).ok_or_else(|| at(*p, SyntaxError::UnknownRelation(r.clone())))?;
                if decl.args.len() != args.len() {
                    return Err(at(
                        *p,
                        SyntaxError::ArityMismatch {
                            symbol: r.clone(),
                            expected: decl.args.len(),
                            found: args.len(),
                        },
                    ));
                }
                let mut out = Vec::with_capacity(args.len());
                for (arg, expected) in args.iter().zip(&decl.args) {
                    let (t, s) = elaborate_term(sig, ctx, arg)?;
                    if &s != expected {
                        return Err(at(
                            arg.pos(),
                            SyntaxError::SortMismatch {
                                at: format!("argument of `{r}`"),
                                expected: expected.clone(),
                                found: s,
                            },
                        ));
                    }
                    out.push(t);
                }
                Atom::Rel(r.clone(), out)
            }
        });
    }
    Ok(HornFormula::new(atoms))
}
