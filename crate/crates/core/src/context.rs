//! Verification context: principals, intruder, typing, key inverses, theory.
//!
//! File grammar, one directive per line, `#` starts a comment:
//!
//! ```text
//! principals A, B, S, I
//! intruder I
//! theory homomorphic | empty
//! const <name> (, <name>)*
//! type <atom> = ALL | { id (, id)* }
//! inv <key> = <key>
//! owner <atom> = <principal> (, <principal>)*
//! ```
//!
//! `owner` ties an atom to the principals it belongs to (the creator of a
//! nonce, the holders of a key). Unification uses it to keep renamed
//! parameters consistent with each other.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lattice::SecurityLevel;
use crate::term::{base_name, TheoryTag};
use crate::unify::{AtomKind, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Context {
    pub principals: BTreeSet<String>,
    pub intruder: String,
    pub typing: BTreeMap<String, SecurityLevel>,
    /// Symmetric closure of the declared pairs.
    pub inverses: BTreeMap<String, String>,
    pub theory: TheoryTag,
    pub constants: BTreeSet<String>,
    pub owners: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContextError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: `{atom}` is typed twice")]
    DuplicateTyping { line: usize, atom: String },
    #[error("line {line}: inverse of `{key}` already declared as `{previous}`")]
    NonInvolutive { line: usize, key: String, previous: String },
    #[error("missing `{0}` declaration")]
    Missing(&'static str),
    #[error("intruder `{0}` is not a declared principal")]
    IntruderNotPrincipal(String),
    #[error("key `{0}` has an inverse but no type")]
    UntypedKey(String),
    #[error("line {line}: owner `{owner}` of `{atom}` is not a declared principal")]
    UnknownOwner { line: usize, atom: String, owner: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("atom `{0}` has no type and is not a principal")]
    Untyped(String),
    #[error("`{0}` is not a declared key")]
    UnknownKey(String),
}

impl Context {
    pub fn load(text: &str) -> Result<Context, ContextError> {
        load_context(text)
    }

    /// Declared type of the atom's base name; undeclared principals are public.
    pub fn type_of(&self, atom: &str) -> Result<SecurityLevel, LookupError> {
        let base = base_name(atom);
        if let Some(level) = self.typing.get(base) {
            Ok(level.clone())
        } else if self.principals.contains(base) {
            Ok(SecurityLevel::All)
        } else {
            Err(LookupError::Untyped(atom.to_string()))
        }
    }

    /// Base name of the inverse of `key`.
    pub fn inverse(&self, key: &str) -> Result<&str, LookupError> {
        self.inverses
            .get(base_name(key))
            .map(String::as_str)
            .ok_or_else(|| LookupError::UnknownKey(key.to_string()))
    }

    pub fn is_principal(&self, name: &str) -> bool {
        self.principals.contains(base_name(name))
    }

    pub fn is_key(&self, name: &str) -> bool {
        self.inverses.contains_key(base_name(name))
    }
}

impl Signature for Context {
    fn kind(&self, base: &str) -> AtomKind {
        if self.principals.contains(base) {
            AtomKind::Principal
        } else if self.inverses.contains_key(base) {
            AtomKind::Key
        } else {
            AtomKind::Data
        }
    }

    fn owners(&self, base: &str) -> &[String] {
        self.owners.get(base).map_or(&[], Vec::as_slice)
    }

    fn is_constant(&self, name: &str) -> bool {
        self.constants.contains(name)
    }
}

pub fn load_context(text: &str) -> Result<Context, ContextError> {
    let mut principals: Option<BTreeSet<String>> = None;
    let mut intruder: Option<String> = None;
    let mut theory: Option<TheoryTag> = None;
    let mut constants = BTreeSet::new();
    let mut typing = BTreeMap::new();
    let mut inverses: BTreeMap<String, String> = BTreeMap::new();
    let mut owners: BTreeMap<String, (usize, Vec<String>)> = BTreeMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        let (word, rest) = trimmed.split_once(char::is_whitespace).unwrap_or((trimmed, ""));
        let rest_col = indent + word.len() + 2;
        let syntax = |column: usize, message: String| ContextError::Syntax {
            line: line_no,
            column,
            message,
        };
        match word {
            "principals" => {
                if principals.is_some() {
                    return Err(syntax(indent + 1, "duplicate `principals` line".into()));
                }
                principals = Some(ident_list(rest).map_err(|m| syntax(rest_col, m))?);
            }
            "intruder" => {
                if intruder.is_some() {
                    return Err(syntax(indent + 1, "duplicate `intruder` line".into()));
                }
                let name = rest.trim();
                if !is_ident(name) {
                    return Err(syntax(rest_col, format!("bad intruder name `{name}`")));
                }
                intruder = Some(name.to_string());
            }
            "theory" => {
                if theory.is_some() {
                    return Err(syntax(indent + 1, "duplicate `theory` line".into()));
                }
                theory = Some(rest.trim().parse().map_err(|m| syntax(rest_col, m))?);
            }
            "const" => {
                constants.extend(ident_list(rest).map_err(|m| syntax(rest_col, m))?);
            }
            "type" => {
                let (atom, level) = binding(rest).map_err(|m| syntax(rest_col, m))?;
                let level: SecurityLevel = level.parse().map_err(|m| syntax(rest_col, m))?;
                if typing.insert(atom.to_string(), level).is_some() {
                    return Err(ContextError::DuplicateTyping {
                        line: line_no,
                        atom: atom.to_string(),
                    });
                }
            }
            "inv" => {
                let (key, inv) = binding(rest).map_err(|m| syntax(rest_col, m))?;
                if !is_ident(inv) {
                    return Err(syntax(rest_col, format!("bad key name `{inv}`")));
                }
                for (a, b) in [(key, inv), (inv, key)] {
                    if let Some(previous) = inverses.get(a) {
                        if previous != b {
                            return Err(ContextError::NonInvolutive {
                                line: line_no,
                                key: a.to_string(),
                                previous: previous.clone(),
                            });
                        }
                    }
                }
                inverses.insert(key.to_string(), inv.to_string());
                inverses.insert(inv.to_string(), key.to_string());
            }
            "owner" => {
                let (atom, list) = binding(rest).map_err(|m| syntax(rest_col, m))?;
                let list: Vec<String> = list.split(',').map(|p| p.trim().to_string()).collect();
                if let Some(bad) = list.iter().find(|p| !is_ident(p)) {
                    return Err(syntax(rest_col, format!("bad owner name `{bad}`")));
                }
                if owners.insert(atom.to_string(), (line_no, list)).is_some() {
                    return Err(syntax(indent + 1, format!("duplicate owner line for `{atom}`")));
                }
            }
            other => {
                return Err(syntax(indent + 1, format!("unknown directive `{other}`")));
            }
        }
    }

    let principals = principals.ok_or(ContextError::Missing("principals"))?;
    let intruder = intruder.ok_or(ContextError::Missing("intruder"))?;
    if !principals.contains(&intruder) {
        return Err(ContextError::IntruderNotPrincipal(intruder));
    }
    if let Some(k) = inverses.keys().find(|k| !typing.contains_key(*k)) {
        return Err(ContextError::UntypedKey(k.clone()));
    }
    for (atom, (line, list)) in &owners {
        if let Some(o) = list.iter().find(|o| !principals.contains(*o)) {
            return Err(ContextError::UnknownOwner {
                line: *line,
                atom: atom.clone(),
                owner: o.clone(),
            });
        }
    }
    Ok(Context {
        principals,
        intruder,
        typing,
        inverses,
        theory: theory.unwrap_or_default(),
        constants,
        owners: owners.into_iter().map(|(k, (_, v))| (k, v)).collect(),
    })
}

fn strip_comment(line: &str) -> &str {
    let mut prev_ws = true;
    for (i, c) in line.char_indices() {
        if c == '#' && prev_ws {
            return &line[..i];
        }
        prev_ws = c.is_whitespace();
    }
    line
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

fn ident_list(s: &str) -> Result<BTreeSet<String>, String> {
    let mut out = BTreeSet::new();
    for part in s.split(',') {
        let p = part.trim();
        if !is_ident(p) {
            return Err(format!("bad identifier `{p}`"));
        }
        out.insert(p.to_string());
    }
    Ok(out)
}

fn binding(s: &str) -> Result<(&str, &str), String> {
    let (lhs, rhs) = s.split_once('=').ok_or("expected `=`")?;
    let lhs = lhs.trim();
    if !is_ident(lhs) {
        return Err(format!("bad name `{lhs}`"));
    }
    Ok((lhs, rhs.trim()))
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |s: &mut dyn Iterator<Item = &String>| s.cloned().collect::<Vec<_>>().join(", ");
        writeln!(f, "principals {}", list(&mut self.principals.iter()))?;
        writeln!(f, "intruder {}", self.intruder)?;
        writeln!(f, "theory {}", self.theory)?;
        if !self.constants.is_empty() {
            writeln!(f, "const {}", list(&mut self.constants.iter()))?;
        }
        for (atom, level) in &self.typing {
            writeln!(f, "type {atom} = {level}")?;
        }
        for (k, v) in &self.inverses {
            if k <= v {
                writeln!(f, "inv {k} = {v}")?;
            }
        }
        for (atom, list) in &self.owners {
            writeln!(f, "owner {atom} = {}", list.join(", "))?;
        }
        Ok(())
    }
}
