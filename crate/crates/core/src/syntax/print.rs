//! Printing in the concrete syntax accepted by the parser.

use std::fmt::{self, Display, Formatter, Write as _};

use super::ast::{is_infix, Atom, Context, FormulaInContext, HornFormula, Sequent, Signature, Term, Theory};
use super::parser::ParsedTheory;
use super::relative::RelativeTheory;

fn write_args(f: &mut Formatter<'_>, args: &[Term]) -> fmt::Result {
    f.write_char('(')?;
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        write!(f, "{a}")?;
    }
    f.write_char(')')
}

fn is_infix_app(t: &Term) -> bool {
    matches!(t, Term::App(s, args) if args.len() == 2 && is_infix(s))
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => f.write_str(&v.name),
            Term::App(s, args) if args.len() == 2 && is_infix(s) => {
                // Left-associative: only a right operand that is itself infix needs parentheses.
                let sep = if s == "." { "." } else { &format!(" {s} ")[..] };
                write!(f, "{}{sep}", args[0])?;
                if is_infix_app(&args[1]) {
                    write!(f, "({})", args[1])
                } else {
                    write!(f, "{}", args[1])
                }
            }
            Term::App(s, args) if args.is_empty() => f.write_str(s),
            Term::App(s, args) => {
                f.write_str(s)?;
                write_args(f, args)
            }
        }
    }
}

impl Display for Atom {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Eq(l, r) if l == r => write!(f, "{l}!"),
            Atom::Eq(l, r) => write!(f, "{l} = {r}"),
            Atom::Rel(r, args) => {
                f.write_str(r)?;
                write_args(f, args)
            }
        }
    }
}

impl Display for HornFormula {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.atoms.is_empty() {
            return f.write_str("top");
        }
        for (i, a) in self.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(" & ")?;
            }
            write!(f, "{a}")?;
        }
        Ok(())
    }
}

impl Display for Context {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        f.write_char('[')?;
        for (i, v) in self.vars().iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}:{}", v.name, v.sort)?;
        }
        f.write_char(']')
    }
}

impl Display for FormulaInContext {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.context, self.body)
    }
}

impl Display for Sequent {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "{} |- {} {}", self.premise, self.context, self.conclusion)
    }
}

fn write_signature(f: &mut Formatter<'_>, sig: &Signature) -> fmt::Result {
    f.write_str("  sorts")?;
    for s in sig.sorts() {
        write!(f, " {s}")?;
    }
    f.write_char('\n')?;
    if sig.functions().next().is_some() {
        f.write_str("  functions\n")?;
        for (name, decl) in sig.functions() {
            write!(f, "    {name} :")?;
            for (i, s) in decl.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(" *")?;
                }
                write!(f, " {s}")?;
            }
            writeln!(f, " -> {}", decl.result)?;
        }
    }
    if sig.relations().next().is_some() {
        f.write_str("  relations\n")?;
        for (name, decl) in sig.relations() {
            write!(f, "    {name} :")?;
            if decl.args.is_empty() {
                f.write_str(" ()")?;
            }
            for (i, s) in decl.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(" *")?;
                }
                write!(f, " {s}")?;
            }
            f.write_char('\n')?;
        }
    }
    Ok(())
}

fn write_sequents(f: &mut Formatter<'_>, header: &str, seqs: &[Sequent]) -> fmt::Result {
    if !seqs.is_empty() {
        writeln!(f, "  {header}")?;
        for s in seqs {
            writeln!(f, "    {s}")?;
        }
    }
    Ok(())
}

impl Display for Theory {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "theory {}", self.name)?;
        write_signature(f, &self.signature)?;
        write_sequents(f, "axioms", &self.axioms)?;
        f.write_str("end\n")
    }
}

impl Display for RelativeTheory {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        writeln!(f, "theory {}", self.name)?;
        write_signature(f, &self.base.signature)?;
        write_sequents(f, "axioms", &self.base.axioms)?;
        // Always emitted so that a relative theory without operators stays relative.
        f.write_str("  operators\n")?;
        for op in &self.operators {
            let ctx = op.arity.context.to_string();
            writeln!(f, "    {} : {} | {}] -> {}", op.name, &ctx[..ctx.len() - 1], op.arity.body, op.result)?;
        }
        write_sequents(f, "judgments", &self.judgments)?;
        f.write_str("end\n")
    }
}

impl Display for ParsedTheory {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            ParsedTheory::Plain(t) => t.fmt(f),
            ParsedTheory::Relative(rt) => rt.fmt(f),
        }
    }
}
