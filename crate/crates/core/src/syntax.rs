//! Concrete formula syntax shared by both logics.
//!
//! ```text
//! phi ::= tt | ff | ~phi | phi & phi | phi | phi
//!       | <a>(psi) | [a](psi) | X | mu X. phi | nu X. phi | (phi)
//! psi ::= sum { (|) sum }
//! sum ::= part { (+) part }
//! part ::= prob * phi | [phi]_prob
//! ```
//!
//! `(|)` is a choice between distribution formulae: a distribution satisfies
//! it when it satisfies one of the alternatives.
//!
//! `~` binds tightest, then `&`, then `|`; `mu`/`nu` bodies extend as far
//! right as possible. `[phi]_p` abbreviates `p*phi (+) (1-p)*tt`.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{parse_rational, Rational};

/// Untyped parse tree; each logic checks which connectives it admits.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Ast {
    Tt,
    Ff,
    Not(Box<Ast>),
    And(Box<Ast>, Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
    Diamond(String, Vec<Vec<(Rational, Ast)>>),
    Box(String, Vec<Vec<(Rational, Ast)>>),
    Var(String),
    Mu(String, Box<Ast>),
    Nu(String, Box<Ast>),
}

pub(crate) fn parse_ast(text: &str) -> Result<Ast> {
    let mut p = Parser { text, pos: 0 };
    let ast = p.phi()?;
    p.skip_ws();
    if p.pos < text.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(ast)
}

const KEYWORDS: [&str; 4] = ["tt", "ff", "mu", "nu"];

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn error(&self, message: impl Into<String>) -> Error {
        Error::FormulaSyntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn peek(&mut self, tok: &str) -> bool {
        self.skip_ws();
        self.rest().starts_with(tok)
    }

    fn eat(&mut self, tok: &str) -> bool {
        if self.peek(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = self.rest();
        let mut chars = rest.char_indices();
        match chars.next() {
            Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Err(self.error("expected an identifier")),
        }
        let end = chars
            .find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_' || c == '\''))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.pos += end;
        Ok(&rest[..end])
    }

    fn variable(&mut self) -> Result<String> {
        let start = self.pos;
        let name = self.ident()?;
        if KEYWORDS.contains(&name) {
            self.pos = start;
            return Err(self.error(format!("`{name}` cannot be used as a variable")));
        }
        Ok(name.to_string())
    }

    fn probability(&mut self) -> Result<Rational> {
        self.skip_ws();
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_digit() || c == '/' || c == '.'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        match parse_rational(&rest[..end]) {
            Some(p) if p <= Rational::one() => {
                self.pos += end;
                Ok(p)
            }
            Some(_) => Err(self.error("probability exceeds 1")),
            None => Err(self.error("expected a probability")),
        }
    }

    fn phi(&mut self) -> Result<Ast> {
        if self.peek_keyword("mu") || self.peek_keyword("nu") {
            let greatest = self.peek_keyword("nu");
            self.pos += 2;
            let x = self.variable()?;
            self.expect(".")?;
            let body = Box::new(self.phi()?);
            return Ok(if greatest {
                Ast::Nu(x, body)
            } else {
                Ast::Mu(x, body)
            });
        }
        let mut left = self.conjunction()?;
        while self.eat("|") {
            let right = self.conjunction()?;
            left = Ast::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn conjunction(&mut self) -> Result<Ast> {
        let mut left = self.unary()?;
        while self.eat("&") {
            let right = self.unary()?;
            left = Ast::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn peek_keyword(&mut self, kw: &str) -> bool {
        self.skip_ws();
        let rest = self.rest();
        rest.starts_with(kw)
            && !rest[kw.len()..]
                .chars()
                .next()
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '\'')
    }

    fn unary(&mut self) -> Result<Ast> {
        self.skip_ws();
        if self.eat("~") {
            return Ok(Ast::Not(Box::new(self.unary()?)));
        }
        if self.peek_keyword("mu") || self.peek_keyword("nu") {
            return self.phi();
        }
        if self.peek("(+)") || self.peek("(|)") {
            return Err(self.error("expected a formula"));
        }
        if self.eat("(") {
            let inner = self.phi()?;
            self.expect(")")?;
            return Ok(inner);
        }
        if self.eat("<") {
            let a = self.ident()?.to_string();
            self.expect(">")?;
            return Ok(Ast::Diamond(a, self.modal_body()?));
        }
        if self.eat("[") {
            let a = self.ident()?.to_string();
            self.expect("]")?;
            return Ok(Ast::Box(a, self.modal_body()?));
        }
        if self.peek_keyword("tt") {
            self.pos += 2;
            return Ok(Ast::Tt);
        }
        if self.peek_keyword("ff") {
            self.pos += 2;
            return Ok(Ast::Ff);
        }
        if self.rest().starts_with(|c: char| c.is_ascii_alphabetic() || c == '_') {
            return Ok(Ast::Var(self.variable()?));
        }
        Err(self.error("expected a formula"))
    }

    fn modal_body(&mut self) -> Result<Vec<Vec<(Rational, Ast)>>> {
        self.expect("(")?;
        let mut alternatives = vec![self.sum()?];
        while self.eat("(|)") {
            alternatives.push(self.sum()?);
        }
        self.expect(")")?;
        Ok(alternatives)
    }

    fn sum(&mut self) -> Result<Vec<(Rational, Ast)>> {
        self.skip_ws();
        let start = self.pos;
        let mut parts = Vec::new();
        loop {
            parts.extend(self.part()?);
            if !self.eat("(+)") {
                break;
            }
        }
        let sum = parts.iter().fold(Rational::zero(), |acc, (p, _)| acc + p);
        if !sum.is_one() {
            return Err(Error::FormulaSyntax {
                offset: start,
                message: format!("probabilities sum to {sum}, expected 1"),
            });
        }
        Ok(parts)
    }

    fn part(&mut self) -> Result<Vec<(Rational, Ast)>> {
        if self.peek("[") && self.is_macro() {
            self.expect("[")?;
            let phi = self.phi()?;
            self.expect("]_")?;
            let p = self.probability()?;
            let rest = Rational::one() - &p;
            let mut out = Vec::new();
            if !p.is_zero() {
                out.push((p, phi));
            }
            if !rest.is_zero() {
                out.push((rest, Ast::Tt));
            }
            return Ok(out);
        }
        let p = self.probability()?;
        if p.is_zero() {
            return Err(self.error("probabilities must be positive"));
        }
        self.expect("*")?;
        Ok(vec![(p, self.phi()?)])
    }

    /// Whether the `[` at the cursor opens `[phi]_p` rather than a box.
    fn is_macro(&self) -> bool {
        let mut depth = 0usize;
        for (i, c) in self.rest().char_indices() {
            match c {
                '[' => depth += 1,
                ']' => {
                    depth -= 1;
                    if depth == 0 {
                        return self.rest()[i + 1..].starts_with('_');
                    }
                }
                _ => {}
            }
        }
        false
    }
}

/// Operator strength used by the printers.
pub(crate) fn precedence(kind: Kind) -> u8 {
    match kind {
        Kind::Fix => 0,
        Kind::Or => 1,
        Kind::And => 2,
        Kind::Atom => 3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Kind {
    Fix,
    Or,
    And,
    Atom,
}

/// Writes `child`, parenthesised when it binds weaker than `min`.
pub(crate) fn wrap(child: Kind, min: u8, text: String) -> String {
    if precedence(child) < min {
        format!("({text})")
    } else {
        text
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::ratio;

    #[test]
    fn precedence_and_associativity() {
        let a = parse_ast("tt & ff | ~tt & tt").unwrap();
        assert_eq!(
            a,
            Ast::Or(
                Box::new(Ast::And(Box::new(Ast::Tt), Box::new(Ast::Ff))),
                Box::new(Ast::And(
                    Box::new(Ast::Not(Box::new(Ast::Tt))),
                    Box::new(Ast::Tt)
                ))
            )
        );
        let fix = parse_ast("nu X. X & tt | ff").unwrap();
        assert!(matches!(fix, Ast::Nu(_, ref b) if matches!(**b, Ast::Or(..))));
    }

    #[test]
    fn diamond_with_choice() {
        let a = parse_ast("<a>(1/2*<b>(1*tt) (+) 1/2*tt)").unwrap();
        assert_eq!(
            a,
            Ast::Diamond(
                "a".into(),
                vec![vec![
                    (ratio(1, 2), Ast::Diamond("b".into(), vec![vec![(ratio(1, 1), Ast::Tt)]])),
                    (ratio(1, 2), Ast::Tt)
                ]]
            )
        );
    }

    #[test]
    fn macro_expands() {
        assert_eq!(
            parse_ast("<a>([<b>(1*tt)]_0.25)").unwrap(),
            parse_ast("<a>(1/4*<b>(1*tt) (+) 3/4*tt)").unwrap()
        );
        assert_eq!(
            parse_ast("<a>([tt]_1)").unwrap(),
            parse_ast("<a>(1*tt)").unwrap()
        );
        // a box inside the macro body
        assert_eq!(
            parse_ast("<a>([[b](1*tt)]_1/2)").unwrap(),
            parse_ast("<a>(1/2*[b](1*tt) (+) 1/2*tt)").unwrap()
        );
        // and a plain box in part position is still a part formula
        assert!(parse_ast("<a>(1*[b](1*tt))").is_ok());
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_ast("<a>(1/3*tt (+) 1/3*tt)"),
            Err(Error::FormulaSyntax { ref message, .. }) if message.contains("2/3")
        ));
        assert!(matches!(parse_ast("tt &"), Err(Error::FormulaSyntax { offset: 4, .. })));
        assert!(parse_ast("mu tt. tt").is_err());
        assert!(parse_ast("(tt").is_err());
        assert!(parse_ast("tt tt").is_err());
        assert!(parse_ast("<a>(0*tt (+) 1*tt)").is_err());
        assert!(parse_ast("[a](1*tt (|) 1/2*tt)").is_err());
    }

    #[test]
    fn choice_between_sums() {
        let a = parse_ast("[a](1/2*X (+) 1/2*tt (|) 1*ff)").unwrap();
        assert_eq!(
            a,
            Ast::Box(
                "a".into(),
                vec![
                    vec![(ratio(1, 2), Ast::Var("X".into())), (ratio(1, 2), Ast::Tt)],
                    vec![(ratio(1, 1), Ast::Ff)]
                ]
            )
        );
    }

    #[test]
    fn keywords_need_boundaries() {
        assert_eq!(parse_ast("ttx").unwrap(), Ast::Var("ttx".into()));
        assert_eq!(parse_ast("mux").unwrap(), Ast::Var("mux".into()));
    }
}
