//! Message algebra: terms, substitutions, normalization and derivation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Name of a parameter or variable, optionally carrying a rename salt.
///
/// The textual name may hold a session suffix (`Na@a`) and, after repeated
/// renaming, earlier salts (`X#1`). The current salt is kept separately so
/// renaming stays injective.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Ident {
    pub name: String,
    pub salt: Option<u32>,
}

impl Ident {
    pub fn new(name: impl Into<String>) -> Ident {
        Ident {
            name: name.into(),
            salt: None,
        }
    }

    pub fn salted(name: impl Into<String>, salt: u32) -> Ident {
        Ident {
            name: name.into(),
            salt: Some(salt),
        }
    }

    /// Name used for typing, inverses and ownership lookups.
    pub fn base(&self) -> &str {
        base_name(&self.name)
    }

    pub fn renamed(&self, salt: u32) -> Ident {
        let name = match self.salt {
            Some(old) => format!("{}#{}", self.name, old),
            None => self.name.clone(),
        };
        Ident { name, salt: Some(salt) }
    }

    /// The identifier `base` living in the same renaming scope as `self`.
    pub fn sibling(&self, base: &str) -> Ident {
        let suffix = self.name.find('#').map_or("", |i| &self.name[i..]);
        Ident {
            name: format!("{base}{suffix}"),
            salt: self.salt,
        }
    }
}

impl fmt::Display for Ident {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.salt {
            Some(s) => write!(f, "{}#{}", self.name, s),
            None => f.write_str(&self.name),
        }
    }
}

pub fn base_name(name: &str) -> &str {
    let end = name.find(['@', '#']).unwrap_or(name.len());
    &name[..end]
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Const(String),
    Param(Ident),
    Var(Ident),
    Pair(Box<Term>, Box<Term>),
    Enc(Box<Term>, Box<Term>),
    Hash(Box<Term>),
    Epsilon,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TheoryTag {
    #[default]
    Empty,
    Homomorphic,
}

impl fmt::Display for TheoryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TheoryTag::Empty => "empty",
            TheoryTag::Homomorphic => "homomorphic",
        })
    }
}

impl std::str::FromStr for TheoryTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "empty" => Ok(TheoryTag::Empty),
            "homomorphic" => Ok(TheoryTag::Homomorphic),
            other => Err(format!("unknown theory `{other}`")),
        }
    }
}

impl Term {
    pub fn constant(name: impl Into<String>) -> Term {
        Term::Const(name.into())
    }

    pub fn param(name: impl Into<String>) -> Term {
        Term::Param(Ident::new(name))
    }

    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(Ident::new(name))
    }

    pub fn pair(left: Term, right: Term) -> Term {
        Term::Pair(Box::new(left), Box::new(right))
    }

    pub fn enc(body: Term, key: Term) -> Term {
        debug_assert!(key.is_atomic(), "compound key {key}");
        Term::Enc(Box::new(body), Box::new(key))
    }

    pub fn hash(body: Term) -> Term {
        Term::Hash(Box::new(body))
    }

    /// Right-associated pairing of `parts`; empty input gives ε.
    pub fn tuple(parts: impl IntoIterator<Item = Term>) -> Term {
        let mut parts: Vec<Term> = parts.into_iter().collect();
        let Some(mut acc) = parts.pop() else {
            return Term::Epsilon;
        };
        while let Some(t) = parts.pop() {
            acc = Term::pair(t, acc);
        }
        acc
    }

    /// Const, Param or Var.
    pub fn is_atomic(&self) -> bool {
        matches!(self, Term::Const(_) | Term::Param(_) | Term::Var(_))
    }

    /// Const or Param.
    pub fn is_atom(&self) -> bool {
        matches!(self, Term::Const(_) | Term::Param(_))
    }

    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// Base name of an atomic term.
    pub fn base(&self) -> Option<&str> {
        match self {
            Term::Const(n) => Some(base_name(n)),
            Term::Param(id) | Term::Var(id) => Some(id.base()),
            _ => None,
        }
    }

    pub fn atoms(&self) -> BTreeSet<Term> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if t.is_atom() {
                out.insert(t.clone());
            }
        });
        out
    }

    pub fn vars(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Var(id) = t {
                out.insert(id.clone());
            }
        });
        out
    }

    /// Every Param and Var identifier in the term.
    pub fn flex_idents(&self) -> BTreeSet<Ident> {
        let mut out = BTreeSet::new();
        self.visit(&mut |t| {
            if let Term::Param(id) | Term::Var(id) = t {
                out.insert(id.clone());
            }
        });
        out
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Term)) {
        f(self);
        match self {
            Term::Pair(a, b) | Term::Enc(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Term::Hash(a) => a.visit(f),
            _ => {}
        }
    }

    pub fn contains(&self, needle: &Term) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= t == needle);
        found
    }

    pub fn contains_hash(&self) -> bool {
        let mut found = false;
        self.visit(&mut |t| found |= matches!(t, Term::Hash(_)));
        found
    }

    pub fn depth(&self) -> usize {
        match self {
            Term::Pair(a, b) | Term::Enc(a, b) => 1 + a.depth().max(b.depth()),
            Term::Hash(a) => 1 + a.depth(),
            _ => 0,
        }
    }

    pub fn size(&self) -> usize {
        let mut n = 0;
        self.visit(&mut |_| n += 1);
        n
    }

    /// Leaves of the top-level pair tree, left to right.
    pub fn components(&self) -> Vec<&Term> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(t) = stack.pop() {
            match t {
                Term::Pair(a, b) => {
                    stack.push(b);
                    stack.push(a);
                }
                other => out.push(other),
            }
        }
        out
    }

    /// Rebuild the term bottom-up, replacing each atomic leaf with `f(leaf)`.
    pub fn map_atomic(&self, f: &mut impl FnMut(&Term) -> Term) -> Term {
        match self {
            Term::Pair(a, b) => Term::pair(a.map_atomic(f), b.map_atomic(f)),
            Term::Enc(a, k) => Term::Enc(Box::new(a.map_atomic(f)), Box::new(k.map_atomic(f))),
            Term::Hash(a) => Term::hash(a.map_atomic(f)),
            Term::Epsilon => Term::Epsilon,
            leaf => f(leaf),
        }
    }

    /// Replace every occurrence of `from` (largest matches first) by `to`.
    pub fn replace(&self, from: &Term, to: &Term) -> Term {
        if self == from {
            return to.clone();
        }
        match self {
            Term::Pair(a, b) => Term::pair(a.replace(from, to), b.replace(from, to)),
            Term::Enc(a, k) => Term::Enc(Box::new(a.replace(from, to)), Box::new(k.replace(from, to))),
            Term::Hash(a) => Term::hash(a.replace(from, to)),
            other => other.clone(),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Const(n) => f.write_str(n),
            Term::Param(id) => write!(f, "{id}"),
            Term::Var(id) => write!(f, "?{id}"),
            Term::Pair(a, b) => {
                if matches!(**a, Term::Pair(..)) {
                    write!(f, "({a}).{b}")
                } else {
                    write!(f, "{a}.{b}")
                }
            }
            Term::Enc(body, key) => write!(f, "{{{body}}}_{key}"),
            Term::Hash(body) => write!(f, "h({body})"),
            Term::Epsilon => f.write_str("eps"),
        }
    }
}

/// Key of a substitution binding.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Flex {
    Param(Ident),
    Var(Ident),
}

impl Flex {
    pub fn of(t: &Term) -> Option<Flex> {
        match t {
            Term::Param(id) => Some(Flex::Param(id.clone())),
            Term::Var(id) => Some(Flex::Var(id.clone())),
            _ => None,
        }
    }

    pub fn term(&self) -> Term {
        match self {
            Flex::Param(id) => Term::Param(id.clone()),
            Flex::Var(id) => Term::Var(id.clone()),
        }
    }
}

impl fmt::Display for Flex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.term())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("parameter {0} cannot be bound to non-atomic term {1}")]
    ParamToCompound(Ident, Term),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    bindings: BTreeMap<Flex, Term>,
}

impl Substitution {
    pub fn new() -> Substitution {
        Substitution::default()
    }

    /// Bind `key` to `value`. Identity bindings are dropped.
    pub fn bind(&mut self, key: Flex, value: Term) -> Result<(), SortError> {
        if let Flex::Param(id) = &key {
            if !value.is_atomic() {
                return Err(SortError::ParamToCompound(id.clone(), value));
            }
        }
        if key.term() == value {
            self.bindings.remove(&key);
        } else {
            self.bindings.insert(key, value);
        }
        Ok(())
    }

    pub fn get(&self, key: &Flex) -> Option<&Term> {
        self.bindings.get(key)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Flex, &Term)> {
        self.bindings.iter()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn apply(&self, m: &Term) -> Term {
        if self.bindings.is_empty() {
            return m.clone();
        }
        m.map_atomic(&mut |leaf| {
            Flex::of(leaf)
                .and_then(|k| self.bindings.get(&k).cloned())
                .unwrap_or_else(|| leaf.clone())
        })
    }

    /// Substitution equal to applying `self` then `next`.
    pub fn compose(&self, next: &Substitution) -> Substitution {
        let mut out = Substitution::new();
        for (k, v) in &self.bindings {
            let v = next.apply(v);
            if k.term() != v {
                out.bindings.insert(k.clone(), v);
            }
        }
        for (k, v) in &next.bindings {
            if !self.bindings.contains_key(k) {
                out.bindings.insert(k.clone(), v.clone());
            }
        }
        out
    }

    /// Bindings whose key is a Param.
    pub fn params_only(&self) -> Substitution {
        Substitution {
            bindings: self
                .bindings
                .iter()
                .filter(|(k, _)| matches!(k, Flex::Param(_)))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        }
    }

    pub fn is_idempotent(&self) -> bool {
        self.bindings.values().all(|v| self.apply(v) == *v)
    }
}

impl fmt::Display for Substitution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, (k, v)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{k} -> {v}")?;
        }
        f.write_str("}")
    }
}

fn eps_pair(a: Term, b: Term) -> Term {
    match (a, b) {
        (Term::Epsilon, x) | (x, Term::Epsilon) => x,
        (Term::Pair(a1, a2), b) => eps_pair(*a1, eps_pair(*a2, b)),
        (a, b) => Term::pair(a, b),
    }
}

fn eps_enc(body: Term, key: Term) -> Term {
    if body == Term::Epsilon {
        Term::Epsilon
    } else {
        Term::Enc(Box::new(body), Box::new(key))
    }
}

/// Normal form under `theory` plus ε-elimination and right-association of pairs.
pub fn normalize(m: &Term, theory: TheoryTag) -> Term {
    match m {
        Term::Pair(a, b) => eps_pair(normalize(a, theory), normalize(b, theory)),
        Term::Enc(body, key) => push_enc(normalize(body, theory), key, theory),
        Term::Hash(body) => match normalize(body, theory) {
            Term::Epsilon => Term::Epsilon,
            b => Term::hash(b),
        },
        other => other.clone(),
    }
}

// `body` is already normal.
fn push_enc(body: Term, key: &Term, theory: TheoryTag) -> Term {
    match (theory, body) {
        (TheoryTag::Homomorphic, Term::Pair(a, b)) => eps_pair(push_enc(*a, key, theory), push_enc(*b, key, theory)),
        (_, body) => eps_enc(body, key.clone()),
    }
}

/// All terms reachable from `m` by one rewrite step of the theory, the
/// ε-rules or pair re-association.
pub fn rewrite_steps(m: &Term, theory: TheoryTag) -> Vec<Term> {
    let mut out = Vec::new();
    match m {
        Term::Pair(a, b) => {
            if **a == Term::Epsilon {
                out.push((**b).clone());
            }
            if **b == Term::Epsilon {
                out.push((**a).clone());
            }
            if let Term::Pair(a1, a2) = &**a {
                out.push(Term::pair((**a1).clone(), Term::pair((**a2).clone(), (**b).clone())));
            }
            for a2 in rewrite_steps(a, theory) {
                out.push(Term::pair(a2, (**b).clone()));
            }
            for b2 in rewrite_steps(b, theory) {
                out.push(Term::pair((**a).clone(), b2));
            }
        }
        Term::Enc(body, key) => {
            if **body == Term::Epsilon {
                out.push(Term::Epsilon);
            }
            if let (TheoryTag::Homomorphic, Term::Pair(x, y)) = (theory, &**body) {
                out.push(Term::pair(
                    Term::Enc(x.clone(), key.clone()),
                    Term::Enc(y.clone(), key.clone()),
                ));
            }
            for b2 in rewrite_steps(body, theory) {
                out.push(Term::Enc(Box::new(b2), key.clone()));
            }
        }
        Term::Hash(body) => {
            if **body == Term::Epsilon {
                out.push(Term::Epsilon);
            }
            for b2 in rewrite_steps(body, theory) {
                out.push(Term::hash(b2));
            }
        }
        _ => {}
    }
    out
}

/// Remove ε by the ε-rules only, keeping every other shape.
pub fn eps_eliminate(m: &Term) -> Term {
    match m {
        Term::Pair(a, b) => match (eps_eliminate(a), eps_eliminate(b)) {
            (Term::Epsilon, x) | (x, Term::Epsilon) => x,
            (a, b) => Term::pair(a, b),
        },
        Term::Enc(body, key) => eps_enc(eps_eliminate(body), (**key).clone()),
        Term::Hash(body) => match eps_eliminate(body) {
            Term::Epsilon => Term::Epsilon,
            b => Term::hash(b),
        },
        other => other.clone(),
    }
}

/// Derivation: erase every variable except `keep`, then ε-eliminate.
pub fn derive(m: &Term, keep: Option<&Ident>) -> Term {
    let erased = m.map_atomic(&mut |leaf| match leaf {
        Term::Var(id) if Some(id) != keep => Term::Epsilon,
        other => other.clone(),
    });
    eps_eliminate(&erased)
}

/// Rename every Param and Var with `salt`; Consts untouched.
pub fn alpha_rename(m: &Term, salt: u32) -> Term {
    m.map_atomic(&mut |leaf| match leaf {
        Term::Param(id) => Term::Param(id.renamed(salt)),
        Term::Var(id) => Term::Var(id.renamed(salt)),
        other => other.clone(),
    })
}

/// Equality up to a bijective renaming of Vars and of Params that keeps
/// base names.
pub fn alpha_equivalent(a: &Term, b: &Term) -> bool {
    fn go(a: &Term, b: &Term, fwd: &mut BTreeMap<Flex, Flex>, back: &mut BTreeMap<Flex, Flex>) -> bool {
        match (a, b) {
            (Term::Const(x), Term::Const(y)) => x == y,
            (Term::Param(x), Term::Param(y)) if x.base() == y.base() => {
                link(Flex::Param(x.clone()), Flex::Param(y.clone()), fwd, back)
            }
            (Term::Var(x), Term::Var(y)) => link(Flex::Var(x.clone()), Flex::Var(y.clone()), fwd, back),
            (Term::Pair(a1, a2), Term::Pair(b1, b2)) | (Term::Enc(a1, a2), Term::Enc(b1, b2)) => {
                go(a1, b1, fwd, back) && go(a2, b2, fwd, back)
            }
            (Term::Hash(x), Term::Hash(y)) => go(x, y, fwd, back),
            (Term::Epsilon, Term::Epsilon) => true,
            _ => false,
        }
    }
    fn link(x: Flex, y: Flex, fwd: &mut BTreeMap<Flex, Flex>, back: &mut BTreeMap<Flex, Flex>) -> bool {
        match (fwd.get(&x), back.get(&y)) {
            (None, None) => {
                fwd.insert(x.clone(), y.clone());
                back.insert(y, x);
                true
            }
            (Some(fy), Some(bx)) => *fy == y && *bx == x,
            _ => false,
        }
    }
    go(a, b, &mut BTreeMap::new(), &mut BTreeMap::new())
}
