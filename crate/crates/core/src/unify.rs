//! Sorted syntactic unification.
//!
//! Consts and the target's Params are rigid. Pattern Params bind to atoms of
//! the same kind whose owners unify with theirs, Vars bind to anything that
//! passes the occurs check. Equations are oriented pattern-first, so a
//! pattern variable facing a target variable binds to it.

use std::collections::{BTreeMap, BTreeSet};

use crate::term::{Flex, Ident, Substitution, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AtomKind {
    Principal,
    Key,
    Data,
}

/// Sort information consulted by unification.
pub trait Signature {
    fn kind(&self, base: &str) -> AtomKind;
    fn owners(&self, base: &str) -> &[String];
    fn is_constant(&self, name: &str) -> bool;
}

/// Every atom is data with no owners.
#[derive(Clone, Copy, Debug, Default)]
pub struct Untyped;

impl Signature for Untyped {
    fn kind(&self, _: &str) -> AtomKind {
        AtomKind::Data
    }

    fn owners(&self, _: &str) -> &[String] {
        &[]
    }

    fn is_constant(&self, _: &str) -> bool {
        false
    }
}

/// Owner atoms of a Const or Param, in the atom's renaming scope.
pub fn owner_terms(atom: &Term, sig: &dyn Signature) -> Vec<Term> {
    let scope = match atom {
        Term::Param(id) => id.clone(),
        Term::Const(name) => Ident::new(name.clone()),
        _ => return Vec::new(),
    };
    let base = atom.base().unwrap_or_default();
    sig.owners(base)
        .iter()
        .map(|o| {
            if sig.is_constant(o) {
                Term::Const(o.clone())
            } else if matches!(atom, Term::Const(_)) {
                Term::param(o.clone())
            } else {
                Term::Param(scope.sibling(o))
            }
        })
        .collect()
}

pub fn mgu(pattern: &Term, target: &Term, sig: &dyn Signature) -> Option<Substitution> {
    let mut rigid = BTreeSet::new();
    target.visit(&mut |t| {
        if let Term::Param(id) = t {
            rigid.insert(id.clone());
        }
        for o in owner_terms(t, sig) {
            if let Term::Param(id) = o {
                rigid.insert(id);
            }
        }
    });
    let mut u = Unifier {
        sig,
        rigid,
        bound: BTreeMap::new(),
    };
    u.solve(vec![(pattern.clone(), target.clone())])?;
    Some(u.finish())
}

/// Patterns of `space` that unify with `target`, each with its mgu, in space
/// order. Patterns sharing identifiers with the target are renamed apart.
pub fn unifiable_patterns(space: &[Term], target: &Term, sig: &dyn Signature) -> Vec<(Term, Substitution)> {
    let target_ids = target.flex_idents();
    let mut fresh = target_ids
        .iter()
        .chain(space.iter().flat_map(|p| p.flex_idents()).collect::<Vec<_>>().iter())
        .filter_map(|id| id.salt)
        .max()
        .unwrap_or(0);
    let mut out = Vec::new();
    for pattern in space {
        let pattern = if pattern.flex_idents().is_disjoint(&target_ids) {
            pattern.clone()
        } else {
            fresh += 1;
            crate::term::alpha_rename(pattern, fresh)
        };
        if let Some(sigma) = mgu(&pattern, target, sig) {
            out.push((pattern, sigma));
        }
    }
    out
}

struct Unifier<'a> {
    sig: &'a dyn Signature,
    /// Params of the target and their owners: names of the checked instance.
    rigid: BTreeSet<Ident>,
    bound: BTreeMap<Flex, Term>,
}

impl Unifier<'_> {
    fn walk(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        while let Some(next) = Flex::of(&cur).and_then(|k| self.bound.get(&k)) {
            cur = next.clone();
        }
        cur
    }

    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Pair(a, b) => Term::pair(self.resolve(&a), self.resolve(&b)),
            Term::Enc(a, k) => Term::Enc(Box::new(self.resolve(&a)), Box::new(self.resolve(&k))),
            Term::Hash(a) => Term::hash(self.resolve(&a)),
            other => other,
        }
    }

    fn occurs(&self, v: &Term, t: &Term) -> bool {
        self.resolve(t).contains(v)
    }

    fn is_flex_param(&self, t: &Term) -> bool {
        matches!(t, Term::Param(id) if !self.rigid.contains(id))
    }

    fn kind_of(&self, t: &Term) -> AtomKind {
        self.sig.kind(t.base().unwrap_or_default())
    }

    /// Param `p` against an atom `a` (Const or Param): same kind, same owner
    /// arity; returns the owner equations.
    fn atom_link(&self, p: &Term, a: &Term) -> Option<Vec<(Term, Term)>> {
        if self.kind_of(p) != self.kind_of(a) {
            return None;
        }
        let po = owner_terms(p, self.sig);
        let ao = owner_terms(a, self.sig);
        if po.len() != ao.len() {
            return None;
        }
        Some(po.into_iter().zip(ao).collect())
    }

    fn solve(&mut self, mut eqs: Vec<(Term, Term)>) -> Option<()> {
        eqs.reverse();
        while let Some((a, b)) = eqs.pop() {
            let a = self.walk(&a);
            let b = self.walk(&b);
            if a == b {
                continue;
            }
            match (&a, &b) {
                (Term::Var(_), _) => {
                    if self.occurs(&a, &b) {
                        return None;
                    }
                    self.bound.insert(Flex::of(&a)?, b);
                }
                (_, Term::Var(_)) => {
                    if self.occurs(&b, &a) {
                        return None;
                    }
                    self.bound.insert(Flex::of(&b)?, a);
                }
                (Term::Param(_), Term::Param(_) | Term::Const(_)) | (Term::Const(_), Term::Param(_)) => {
                    let (flex, other) = if self.is_flex_param(&a) {
                        (a, b)
                    } else if self.is_flex_param(&b) {
                        (b, a)
                    } else {
                        return None;
                    };
                    let extra = self.atom_link(&flex, &other)?;
                    self.bound.insert(Flex::of(&flex)?, other);
                    eqs.extend(extra);
                }
                (Term::Pair(a1, a2), Term::Pair(b1, b2)) | (Term::Enc(a1, a2), Term::Enc(b1, b2)) => {
                    eqs.push(((**a2).clone(), (**b2).clone()));
                    eqs.push(((**a1).clone(), (**b1).clone()));
                }
                (Term::Hash(x), Term::Hash(y)) => eqs.push(((**x).clone(), (**y).clone())),
                _ => return None,
            }
        }
        Some(())
    }

    fn finish(&self) -> Substitution {
        let mut s = Substitution::new();
        for k in self.bound.keys() {
            let v = self.resolve(&k.term());
            s.bind(k.clone(), v).expect("params only bind atoms");
        }
        s
    }
}
