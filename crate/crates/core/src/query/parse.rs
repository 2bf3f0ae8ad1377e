use super::{Atom, ConjunctiveQuery, Term, Ucq};
use crate::db::Schema;
use crate::error::{Error, Result};

/// Parses `ucq := cq { "|" cq }`, `cq := atom { "," atom }`,
/// `atom := PRED "(" term { "," term } ")"`.
///
/// Variables start with a lowercase letter; constants start with an
/// uppercase letter or are double-quoted strings.
pub fn parse_ucq(text: &str, schema: &Schema) -> Result<Ucq> {
    let mut p = Parser { src: text, pos: 0 };
    let mut disjuncts = vec![p.cq(schema)?];
    loop {
        p.skip_ws();
        match p.peek() {
            None => break,
            Some('|') => {
                p.pos += 1;
                disjuncts.push(p.cq(schema)?);
            }
            Some(c) => return Err(p.err(format!("expected `|` or end of input, found `{c}`"))),
        }
    }
    Ok(Ucq::new(disjuncts))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Syntax {
            pos: self.pos,
            msg: msg.into(),
        }
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == ch => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `{ch}`, found `{c}`"))),
            None => Err(self.err(format!("expected `{ch}`, found end of input"))),
        }
    }

    fn ident(&mut self) -> Option<&str> {
        let start = self.pos;
        let mut chars = self.src[start..].char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() => {}
            _ => return None,
        }
        let len = chars
            .find(|(_, c)| !(c.is_ascii_alphanumeric() || *c == '_'))
            .map_or(self.src.len() - start, |(i, _)| i);
        self.pos = start + len;
        Some(&self.src[start..start + len])
    }

    fn quoted(&mut self) -> Result<String> {
        self.pos += 1;
        let mut out = String::new();
        let mut escaped = false;
        while let Some(c) = self.peek() {
            self.pos += c.len_utf8();
            match (escaped, c) {
                (true, _) => {
                    out.push(c);
                    escaped = false;
                }
                (false, '\\') => escaped = true,
                (false, '"') => {
                    if out.is_empty() {
                        return Err(self.err("empty quoted constant"));
                    }
                    return Ok(out);
                }
                (false, _) => out.push(c),
            }
        }
        Err(self.err("unterminated string constant"))
    }

    fn term(&mut self) -> Result<Term> {
        self.skip_ws();
        if self.peek() == Some('"') {
            return Ok(Term::Const(self.quoted()?));
        }
        let start = self.pos;
        match self.ident() {
            Some(name) if name.starts_with(|c: char| c.is_ascii_lowercase()) => {
                Ok(Term::Var(name.to_string()))
            }
            Some(name) => Ok(Term::Const(name.to_string())),
            None => {
                self.pos = start;
                Err(self.err("expected a variable or constant"))
            }
        }
    }

    fn atom(&mut self, schema: &Schema) -> Result<Atom> {
        self.skip_ws();
        let start = self.pos;
        let pred = match self.ident() {
            Some(name) => name.to_string(),
            None => return Err(self.err("expected a predicate name")),
        };
        self.expect('(')?;
        let mut args = vec![self.term()?];
        loop {
            self.skip_ws();
            match self.peek() {
                Some(',') => {
                    self.pos += 1;
                    args.push(self.term()?);
                }
                Some(')') => {
                    self.pos += 1;
                    break;
                }
                _ => return Err(self.err("expected `,` or `)` in argument list")),
            }
        }
        let arity = schema.arity(&pred).ok_or_else(|| {
            self.pos = start;
            Error::UnknownPredicate(pred.clone())
        })?;
        if arity != args.len() {
            return Err(Error::ArityMismatch {
                pred,
                expected: arity,
                found: args.len(),
            });
        }
        Ok(Atom::new(pred, args))
    }

    fn cq(&mut self, schema: &Schema) -> Result<ConjunctiveQuery> {
        let mut atoms = vec![self.atom(schema)?];
        loop {
            self.skip_ws();
            if self.peek() == Some(',') {
                self.pos += 1;
                atoms.push(self.atom(schema)?);
            } else {
                break;
            }
        }
        Ok(ConjunctiveQuery::new(atoms))
    }
}
