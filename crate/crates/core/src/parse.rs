//! Line-oriented text format for pLTSs.
//!
//! ```text
//! # comment
//! states: s t u v          # optional explicit declaration
//! s a -> 1/2 u, 1/2 v
//! u b -> 1 u
//! ```
//!
//! Probabilities are `p/q` fractions, integers or finite decimals and are
//! converted to exact rationals. States mentioned only as targets are
//! registered automatically. Declaration order (first mention) fixes the
//! state numbering.

use num_traits::{One, Zero};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::model::{Plts, PltsBuilder};
use crate::scalar::{parse_rational, Rational, Scalar};

/// Parses a model with exact rational probabilities.
pub fn parse_plts(text: &str) -> Result<Plts<Rational>> {
    parse_plts_as(text)
}

/// Parses a model and converts its probabilities into `P`. Sums are checked
/// exactly before conversion.
pub fn parse_plts_as<P: Scalar>(text: &str) -> Result<Plts<P>> {
    let mut builder = PltsBuilder::<P>::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut sc = Scanner::new(line, line_no);
        sc.skip_ws();
        if sc.at_end() {
            continue;
        }
        if sc.eat_keyword("states:") {
            loop {
                sc.skip_ws();
                if sc.at_end() {
                    break;
                }
                let name = sc.ident()?;
                builder.add_state(name);
            }
            continue;
        }

        let source = sc.ident()?;
        sc.skip_ws();
        let action = sc.ident()?;
        sc.skip_ws();
        sc.expect("->")?;
        let mut targets: Vec<(&str, Rational)> = Vec::new();
        loop {
            sc.skip_ws();
            let col = sc.column();
            let p = sc.probability()?;
            if p.is_zero() {
                return Err(sc.error_at(col, "probabilities must be positive"));
            }
            sc.skip_ws();
            let name = sc.ident()?;
            targets.push((name, p));
            sc.skip_ws();
            if sc.at_end() {
                break;
            }
            sc.expect(",")?;
        }

        let sum = targets
            .iter()
            .fold(Rational::zero(), |acc, (_, p)| acc + p);
        if !sum.is_one() {
            return Err(Error::ProbabilitySum {
                line: line_no,
                sum: sum.to_string(),
            });
        }

        let s = builder.add_state(source);
        let a = builder.add_action(action);
        let entries: Vec<_> = targets
            .iter()
            .map(|(name, p)| (builder.add_state(name), P::from_rational(p)))
            .collect();
        let dist = Dist::new(entries)?;
        builder
            .add_transition(s, a, dist)
            .map_err(|e| match e {
                Error::DuplicateTransition { message, .. } => Error::DuplicateTransition {
                    line: line_no,
                    message,
                },
                other => other,
            })?;
    }
    Ok(builder.build())
}

struct Scanner<'a> {
    text: &'a str,
    pos: usize,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Scanner { text, pos: 0, line }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn at_end(&self) -> bool {
        self.rest().trim().is_empty()
    }

    fn column(&self) -> usize {
        self.text[..self.pos].chars().count() + 1
    }

    fn error_at(&self, column: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            line: self.line,
            column,
            message: message.into(),
        }
    }

    fn error(&self, message: impl Into<String>) -> Error {
        self.error_at(self.column(), message)
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.rest().starts_with(kw) {
            self.pos += kw.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat_keyword(tok) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
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

    fn probability(&mut self) -> Result<Rational> {
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|&(_, c)| !(c.is_ascii_digit() || c == '/' || c == '.'))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        let tok = &rest[..end];
        match parse_rational(tok) {
            Some(p) => {
                self.pos += end;
                Ok(p)
            }
            None => Err(self.error(format!("expected a probability, found `{tok}`"))),
        }
    }
}
