//! Canonical text form of terms.
//!
//! ```text
//! term := enc ('.' term)?
//! enc  := '{' term '}' '_' key | 'h(' term ')' | '(' term ')' | 'eps' | atom | '?' ident
//! key  := atom | '?' ident
//! atom := ident ('@' ident)? ('#' digits)?
//! ```

use std::collections::BTreeSet;

use thiserror::Error;

use crate::term::{Ident, Term};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("column {column}: {message}")]
pub struct SyntaxError {
    pub column: usize,
    pub message: String,
}

pub fn parse_term(text: &str) -> Result<Term, SyntaxError> {
    let mut p = Parser {
        chars: text.chars().collect(),
        pos: 0,
    };
    let t = p.term()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.error(format!("unexpected `{}`", p.chars[p.pos])));
    }
    Ok(t)
}

/// Turn Params whose name is a declared constant into Consts.
pub fn resolve_constants(t: &Term, constants: &BTreeSet<String>) -> Term {
    if constants.is_empty() {
        return t.clone();
    }
    t.map_atomic(&mut |leaf| match leaf {
        Term::Param(id) if id.salt.is_none() && constants.contains(&id.name) => Term::Const(id.name.clone()),
        other => other.clone(),
    })
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
}

impl Parser {
    fn error(&self, message: impl Into<String>) -> SyntaxError {
        SyntaxError {
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<(), SyntaxError> {
        match self.peek() {
            Some(d) if d == c => {
                self.pos += 1;
                Ok(())
            }
            Some(d) => Err(self.error(format!("expected `{c}`, found `{d}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn term(&mut self) -> Result<Term, SyntaxError> {
        let head = self.enc()?;
        if self.peek() == Some('.') {
            self.pos += 1;
            let tail = self.term()?;
            Ok(Term::pair(head, tail))
        } else {
            Ok(head)
        }
    }

    fn enc(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some('{') => {
                self.pos += 1;
                let body = self.term()?;
                self.expect('}')?;
                self.expect('_')?;
                let key = self.key()?;
                Ok(Term::enc(body, key))
            }
            Some('(') => {
                self.pos += 1;
                let t = self.term()?;
                self.expect(')')?;
                Ok(t)
            }
            Some('?') => {
                self.pos += 1;
                Ok(Term::Var(self.ident()?))
            }
            Some(c) if is_ident_start(c) => {
                let start = self.pos;
                let id = self.ident()?;
                if id.salt.is_none() && id.name == "h" && self.chars.get(self.pos) == Some(&'(') {
                    self.pos += 1;
                    let body = self.term()?;
                    self.expect(')')?;
                    return Ok(Term::hash(body));
                }
                if id.salt.is_none() && id.name == "eps" {
                    return Ok(Term::Epsilon);
                }
                if id.name.is_empty() {
                    self.pos = start;
                    return Err(self.error("expected an identifier"));
                }
                Ok(Term::Param(id))
            }
            Some(c) => Err(self.error(format!("unexpected `{c}`"))),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn key(&mut self) -> Result<Term, SyntaxError> {
        match self.peek() {
            Some('?') => {
                self.pos += 1;
                Ok(Term::Var(self.ident()?))
            }
            Some(c) if is_ident_start(c) => Ok(Term::Param(self.ident()?)),
            Some('{') | Some('(') => Err(self.error("keys must be atomic")),
            _ => Err(self.error("expected a key")),
        }
    }

    fn ident(&mut self) -> Result<Ident, SyntaxError> {
        let start = self.pos;
        while self.pos < self.chars.len() && is_ident_char(self.chars[self.pos]) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.error("expected an identifier"));
        }
        if self.chars.get(self.pos) == Some(&'@') {
            self.pos += 1;
            let s = self.pos;
            while self.pos < self.chars.len() && is_ident_char(self.chars[self.pos]) {
                self.pos += 1;
            }
            if self.pos == s {
                return Err(self.error("expected a session name after `@`"));
            }
        }
        // Earlier salts stay part of the name; the last one is the current salt.
        let mut salts = Vec::new();
        let mut name_end = self.pos;
        while self.chars.get(self.pos) == Some(&'#') {
            let s = self.pos + 1;
            let mut e = s;
            while e < self.chars.len() && self.chars[e].is_ascii_digit() {
                e += 1;
            }
            if e == s {
                self.pos = s;
                return Err(self.error("expected digits after `#`"));
            }
            salts.push((self.pos, self.chars[s..e].iter().collect::<String>()));
            self.pos = e;
        }
        let salt = match salts.pop() {
            Some((at, digits)) => {
                name_end = at;
                Some(digits.parse().map_err(|_| self.error("salt out of range"))?)
            }
            None => None,
        };
        let name: String = self.chars[start..name_end].iter().collect();
        Ok(Ident { name, salt })
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}
