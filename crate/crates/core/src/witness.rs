//! Protective keys, selections, the reliable function F and the static
//! bounds of witness functions.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::context::{Context, LookupError};
use crate::lattice::SecurityLevel;
use crate::report::{AnalysisRow, AtomClass, CaseRow, Verdict};
use crate::roles::{GeneralizedRole, MessageSpace};
use crate::term::{derive, normalize, Flex, Ident, Substitution, Term};
use crate::unify::{unifiable_patterns, AtomKind, Signature};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionVariant {
    #[default]
    Max,
    Ek,
    N,
}

impl fmt::Display for SelectionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionVariant::Max => "max",
            SelectionVariant::Ek => "ek",
            SelectionVariant::N => "n",
        })
    }
}

impl std::str::FromStr for SelectionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max" => Ok(SelectionVariant::Max),
            "ek" => Ok(SelectionVariant::Ek),
            "n" => Ok(SelectionVariant::N),
            other => Err(format!("unknown selection variant `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Entry {
    Identity(String),
    /// Stands for the inverse of the named key.
    InverseKey(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Selection {
    pub entries: BTreeSet<Entry>,
}

impl Selection {
    pub fn is_subset(&self, other: &Selection) -> bool {
        self.entries.is_subset(&other.entries)
    }
}

/// Selection under one protective-key hypothesis. `selection` is `None` when
/// some occurrence of the analyzed element has no protective key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectionCase {
    pub key: Option<String>,
    pub selection: Option<Selection>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundCase {
    pub protective_key: Option<String>,
    pub value: SecurityLevel,
}

/// A level per protective-key case; a single case for typed atoms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bound {
    pub cases: Vec<BoundCase>,
}

impl Bound {
    pub fn single(value: SecurityLevel) -> Bound {
        Bound {
            cases: vec![BoundCase {
                protective_key: None,
                value,
            }],
        }
    }

    pub fn top() -> Bound {
        Bound::single(SecurityLevel::top())
    }

    /// Meet of every case value.
    pub fn lowest(&self) -> SecurityLevel {
        SecurityLevel::meet_all(self.cases.iter().map(|c| &c.value))
    }

    /// Join of every case value.
    pub fn highest(&self) -> SecurityLevel {
        SecurityLevel::join_all(self.cases.iter().map(|c| &c.value))
    }

    /// Value when there is exactly one case.
    pub fn value(&self) -> Option<&SecurityLevel> {
        match self.cases.as_slice() {
            [only] => Some(&only.value),
            _ => None,
        }
    }

    /// Pointwise meet over every pairing of cases.
    pub fn meet(&self, other: &Bound) -> Bound {
        let mut out: Vec<BoundCase> = Vec::new();
        for a in &self.cases {
            for b in &other.cases {
                let key = merge_labels(&a.protective_key, &b.protective_key);
                let value = a.value.meet(&b.value);
                match out.iter_mut().find(|c| c.protective_key == key) {
                    Some(c) => c.value = c.value.meet(&value),
                    None => out.push(BoundCase {
                        protective_key: key,
                        value,
                    }),
                }
            }
        }
        Bound { cases: out }
    }
}

fn merge_labels(a: &Option<String>, b: &Option<String>) -> Option<String> {
    match (a, b) {
        (None, x) | (x, None) => x.clone(),
        (Some(a), Some(b)) => {
            let mut parts: Vec<&str> = a.split('+').collect();
            for p in b.split('+') {
                if !parts.contains(&p) {
                    parts.push(p);
                }
            }
            Some(parts.join("+"))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WitnessError {
    #[error(transparent)]
    Lookup(#[from] LookupError),
    #[error("`{0}` does not occur in `{1}`")]
    Absent(Term, Term),
    #[error("`{alpha}` cannot be traced in pattern `{pattern}`")]
    Untraceable { alpha: Term, pattern: Term },
    #[error("`{0}` is not an atom or a variable")]
    NotAtomic(Term),
}

/// Enclosing Enc nodes, outermost first, of every occurrence of `alpha`
/// outside key positions and hash bodies.
fn occurrences<'a>(m: &'a Term, alpha: &Term) -> Vec<Vec<&'a Term>> {
    fn walk<'a>(m: &'a Term, alpha: &Term, path: &mut Vec<&'a Term>, out: &mut Vec<Vec<&'a Term>>) {
        if m == alpha {
            out.push(path.clone());
            return;
        }
        match m {
            Term::Pair(a, b) => {
                walk(a, alpha, path, out);
                walk(b, alpha, path, out);
            }
            Term::Enc(body, _) => {
                path.push(m);
                walk(body, alpha, path, out);
                path.pop();
            }
            _ => {}
        }
    }
    let mut out = Vec::new();
    walk(m, alpha, &mut Vec::new(), &mut out);
    out
}

fn enc_key(enc: &Term) -> &Term {
    match enc {
        Term::Enc(_, k) => k,
        _ => unreachable!("path entries are Enc nodes"),
    }
}

/// Type of the analyzed element; `None` for variables.
fn subject_type(alpha: &Term, ctx: &Context) -> Result<Option<SecurityLevel>, WitnessError> {
    match alpha {
        Term::Const(n) => Ok(Some(ctx.type_of(n)?)),
        Term::Param(id) => Ok(Some(ctx.type_of(&id.name)?)),
        Term::Var(_) => Ok(None),
        other => Err(WitnessError::NotAtomic(other.clone())),
    }
}

fn inverse_type(key: &Term, ctx: &Context) -> Result<Option<SecurityLevel>, WitnessError> {
    // Variable keys, and keys erased by derivation, protect nothing.
    match key.base() {
        Some(base) if key.is_atom() => Ok(Some(ctx.type_of(ctx.inverse(base)?)?)),
        _ => Ok(None),
    }
}

fn is_protective(key: &Term, alpha_type: &SecurityLevel, ctx: &Context) -> Result<bool, WitnessError> {
    Ok(inverse_type(key, ctx)?.is_some_and(|inv| inv.geq(alpha_type)))
}

/// Principal atoms under `enc` that travel with the occurrence whose
/// enclosing path is `path`. Hash bodies, keys and sibling ciphertexts under
/// a key protective for `alpha` are skipped.
fn identities_under(
    enc: &Term,
    path: &[&Term],
    alpha: &Term,
    alpha_type: Option<&SecurityLevel>,
    ctx: &Context,
) -> Result<BTreeSet<String>, WitnessError> {
    fn walk(
        m: &Term,
        path: &[&Term],
        alpha: &Term,
        alpha_type: Option<&SecurityLevel>,
        ctx: &Context,
        out: &mut BTreeSet<String>,
    ) -> Result<(), WitnessError> {
        match m {
            Term::Pair(a, b) => {
                walk(a, path, alpha, alpha_type, ctx, out)?;
                walk(b, path, alpha, alpha_type, ctx, out)?;
            }
            Term::Enc(body, key) => {
                let on_path = path.iter().any(|p| std::ptr::eq(*p, m));
                let shields = match alpha_type {
                    Some(t) if !on_path => is_protective(key, t, ctx)?,
                    _ => false,
                };
                if !shields {
                    walk(body, path, alpha, alpha_type, ctx, out)?;
                }
            }
            Term::Const(_) | Term::Param(_)
                if m != alpha && ctx.kind(m.base().unwrap_or_default()) == AtomKind::Principal =>
            {
                out.insert(m.to_string());
            }
            _ => {}
        }
        Ok(())
    }
    let Term::Enc(body, _) = enc else {
        unreachable!("protective node is an Enc")
    };
    let mut out = BTreeSet::new();
    walk(body, path, alpha, alpha_type, ctx, &mut out)?;
    Ok(out)
}

fn selection_at(
    variant: SelectionVariant,
    enc: &Term,
    path: &[&Term],
    alpha: &Term,
    alpha_type: Option<&SecurityLevel>,
    ctx: &Context,
) -> Result<Selection, WitnessError> {
    let mut entries = BTreeSet::new();
    if variant != SelectionVariant::Ek {
        for id in identities_under(enc, path, alpha, alpha_type, ctx)? {
            entries.insert(Entry::Identity(id));
        }
    }
    if variant != SelectionVariant::N {
        entries.insert(Entry::InverseKey(enc_key(enc).to_string()));
    }
    Ok(Selection { entries })
}

/// Candidate external protective keys of `alpha` in `m`.
pub fn external_protective_key(alpha: &Term, m: &Term, ctx: &Context) -> Result<Vec<String>, WitnessError> {
    let occs = occurrences(m, alpha);
    if occs.is_empty() {
        return Err(WitnessError::Absent(alpha.clone(), m.clone()));
    }
    let alpha_type = subject_type(alpha, ctx)?;
    let mut keys: Vec<String> = Vec::new();
    for path in &occs {
        for enc in path {
            let key = enc_key(enc);
            let candidate = match &alpha_type {
                Some(t) => is_protective(key, t, ctx)?,
                None => key.is_atom(),
            };
            if candidate {
                let name = key.to_string();
                if !keys.contains(&name) {
                    keys.push(name);
                }
                if alpha_type.is_some() {
                    break;
                }
            }
        }
    }
    Ok(keys)
}

/// Selections of `alpha` in `m` (taken as given, not normalized), one per
/// protective-key case.
pub fn select(
    variant: SelectionVariant,
    alpha: &Term,
    m: &Term,
    ctx: &Context,
) -> Result<Vec<SelectionCase>, WitnessError> {
    let alpha_type = subject_type(alpha, ctx)?;
    let occs = occurrences(m, alpha);
    let mut cases = vec![SelectionCase {
        key: None,
        selection: Some(Selection::default()),
    }];
    for path in &occs {
        let mut options: Vec<SelectionCase> = Vec::new();
        match &alpha_type {
            Some(t) => {
                let mut protective = None;
                for enc in path {
                    if is_protective(enc_key(enc), t, ctx)? {
                        protective = Some(*enc);
                        break;
                    }
                }
                options.push(match protective {
                    Some(enc) => SelectionCase {
                        key: Some(enc_key(enc).to_string()),
                        selection: Some(selection_at(variant, enc, path, alpha, Some(t), ctx)?),
                    },
                    None => SelectionCase {
                        key: None,
                        selection: None,
                    },
                });
            }
            None => {
                let mut seen: Vec<String> = Vec::new();
                for enc in path {
                    let key = enc_key(enc);
                    let name = key.to_string();
                    if !key.is_atom() || seen.contains(&name) {
                        continue;
                    }
                    seen.push(name.clone());
                    options.push(SelectionCase {
                        key: Some(name),
                        selection: Some(selection_at(variant, enc, path, alpha, None, ctx)?),
                    });
                }
                if options.is_empty() {
                    options.push(SelectionCase {
                        key: None,
                        selection: None,
                    });
                }
            }
        }
        cases = combine(&cases, &options, alpha_type.is_some());
    }
    Ok(cases)
}

fn combine(acc: &[SelectionCase], options: &[SelectionCase], typed: bool) -> Vec<SelectionCase> {
    let mut out: Vec<SelectionCase> = Vec::new();
    for a in acc {
        for o in options {
            let key = if typed {
                a.key.clone().or_else(|| o.key.clone())
            } else {
                merge_labels(&a.key, &o.key)
            };
            let selection = match (&a.selection, &o.selection) {
                (Some(x), Some(y)) => Some(Selection {
                    entries: x.entries.union(&y.entries).cloned().collect(),
                }),
                _ => None,
            };
            match out.iter_mut().find(|c| c.key == key) {
                Some(c) => {
                    c.selection = match (&c.selection, &selection) {
                        (Some(x), Some(y)) => Some(Selection {
                            entries: x.entries.union(&y.entries).cloned().collect(),
                        }),
                        _ => None,
                    }
                }
                None => out.push(SelectionCase { key, selection }),
            }
        }
    }
    out
}

/// Morphism from selections to levels; the empty selection is top.
pub fn psi(sel: &Selection, ctx: &Context) -> Result<SecurityLevel, WitnessError> {
    let mut level = SecurityLevel::top();
    for e in &sel.entries {
        let l = match e {
            Entry::Identity(p) => SecurityLevel::of([p.clone()]),
            Entry::InverseKey(k) => ctx.type_of(ctx.inverse(k)?)?,
        };
        level = level.meet(&l);
    }
    Ok(level)
}

/// The reliable function F = ψ ∘ S on the normal form of `m`.
#[allow(non_snake_case)]
pub fn F(variant: SelectionVariant, alpha: &Term, m: &Term, ctx: &Context) -> Result<Bound, WitnessError> {
    let m = normalize(m, ctx.theory);
    let cases = select(variant, alpha, &m, ctx)?
        .into_iter()
        .map(|c| {
            let value = match &c.selection {
                Some(s) => psi(s, ctx)?,
                None => SecurityLevel::All,
            };
            Ok(BoundCase {
                protective_key: c.key,
                value,
            })
        })
        .collect::<Result<Vec<_>, WitnessError>>()?;
    Ok(Bound { cases })
}

fn exposed_in(t: &Term, alpha: &Term) -> bool {
    if t == alpha {
        return true;
    }
    match t {
        Term::Pair(a, b) | Term::Enc(a, b) => exposed_in(a, alpha) || exposed_in(b, alpha),
        _ => false,
    }
}

/// Replace the pattern subterms standing at the target positions of the
/// variable `alpha` by `z`.
fn block_replace(pattern: &Term, target: &Term, alpha: &Term, z: &Term) -> (Term, bool) {
    if target == alpha {
        return match pattern {
            Term::Var(_) => (pattern.clone(), false),
            _ => (z.clone(), true),
        };
    }
    match (pattern, target) {
        (Term::Pair(p1, p2), Term::Pair(t1, t2)) => {
            let (a, x) = block_replace(p1, t1, alpha, z);
            let (b, y) = block_replace(p2, t2, alpha, z);
            (Term::pair(a, b), x || y)
        }
        (Term::Enc(p1, pk), Term::Enc(t1, tk)) => {
            let (a, x) = block_replace(p1, t1, alpha, z);
            let (k, y) = block_replace(pk, tk, alpha, z);
            (Term::Enc(Box::new(a), Box::new(k)), x || y)
        }
        (Term::Hash(p1), Term::Hash(t1)) => {
            let (a, x) = block_replace(p1, t1, alpha, z);
            (Term::hash(a), x)
        }
        _ => (pattern.clone(), false),
    }
}

/// F applied to the derivative of a unified source pattern.
///
/// `sigma` must be the mgu of `pattern` and `target`.
#[allow(non_snake_case)]
pub fn F_derivative(
    variant: SelectionVariant,
    alpha: &Term,
    pattern: &Term,
    sigma: &Substitution,
    target: &Term,
    ctx: &Context,
) -> Result<Bound, WitnessError> {
    let neighborhood = sigma.params_only().apply(pattern);
    if alpha.is_atom() {
        let d = derive(&neighborhood, None);
        if d.atoms().contains(alpha) {
            return F(variant, alpha, &d, ctx);
        }
    }
    let mut parts: Vec<Bound> = Vec::new();
    for x in neighborhood.vars() {
        let xt = Term::Var(x.clone());
        let bound_to = sigma.get(&Flex::Var(x.clone())).cloned().unwrap_or_else(|| xt.clone());
        if !bound_to.contains(alpha) {
            continue;
        }
        if exposed_in(&bound_to, alpha) {
            parts.push(F(variant, &xt, &derive(&neighborhood, Some(&x)), ctx)?);
        } else {
            parts.push(Bound::top());
        }
    }
    if alpha.is_var() {
        let z_id = fresh_ident(&neighborhood, target);
        let z = Term::Var(z_id.clone());
        let (replaced, hit) = block_replace(&neighborhood, target, alpha, &z);
        if hit {
            parts.push(F(variant, &z, &derive(&replaced, Some(&z_id)), ctx)?);
        }
    }
    if parts.is_empty() {
        return Err(WitnessError::Untraceable {
            alpha: alpha.clone(),
            pattern: pattern.clone(),
        });
    }
    Ok(parts.iter().skip(1).fold(parts[0].clone(), |acc, b| acc.meet(b)))
}

fn fresh_ident(a: &Term, b: &Term) -> Ident {
    let used: BTreeSet<Ident> = a.flex_idents().union(&b.flex_idents()).cloned().collect();
    (0..)
        .map(|i| Ident::new(format!("Z{i}'")))
        .find(|id| !used.contains(id))
        .expect("unbounded supply")
}

/// Meet, over the components of `r_plus` containing `alpha`, of
/// `F_derivative` over every unifiable source pattern. Case values are
/// collapsed to their meet.
pub fn lower_bound(
    variant: SelectionVariant,
    alpha: &Term,
    r_plus: &Term,
    space: &MessageSpace,
    ctx: &Context,
) -> Result<SecurityLevel, WitnessError> {
    let sources: Vec<Term> = space.patterns.iter().filter(|p| !p.is_var()).cloned().collect();
    let mut acc = SecurityLevel::top();
    for c in r_plus.components() {
        if !c.contains(alpha) {
            continue;
        }
        if c.is_var() {
            acc = acc.meet(&F(variant, alpha, c, ctx)?.lowest());
            continue;
        }
        for (p, sigma) in unifiable_patterns(&sources, c, ctx) {
            acc = acc.meet(&F_derivative(variant, alpha, &p, &sigma, c, ctx)?.lowest());
        }
    }
    Ok(acc)
}

/// Meet over the received messages of F on their derivative keeping `alpha`.
pub fn upper_bound(
    variant: SelectionVariant,
    alpha: &Term,
    r_minus: &[&Term],
    ctx: &Context,
) -> Result<Bound, WitnessError> {
    let keep = match alpha {
        Term::Var(id) => Some(id),
        _ => None,
    };
    let mut acc = Bound::top();
    for m in r_minus {
        acc = acc.meet(&F(variant, alpha, &derive(m, keep), ctx)?);
    }
    Ok(acc)
}

/// Elements analyzed for a role: atoms of r+ outside key positions
/// (principals skipped) and variables of r+ and R-, sorted by name.
pub fn subjects(r_minus: &[&Term], r_plus: &Term, ctx: &Context) -> Vec<Term> {
    fn collect(m: &Term, ctx: &Context, out: &mut BTreeSet<(String, Term)>) {
        match m {
            Term::Pair(a, b) => {
                collect(a, ctx, out);
                collect(b, ctx, out);
            }
            Term::Enc(body, key) => {
                collect(body, ctx, out);
                if key.is_var() {
                    out.insert((key.to_string(), (**key).clone()));
                }
            }
            Term::Hash(body) => collect(body, ctx, out),
            Term::Var(_) => {
                out.insert((m.to_string(), m.clone()));
            }
            Term::Const(_) | Term::Param(_) => {
                if !ctx.is_principal(m.base().unwrap_or_default()) {
                    out.insert((m.to_string(), m.clone()));
                }
            }
            Term::Epsilon => {}
        }
    }
    let mut out = BTreeSet::new();
    collect(r_plus, ctx, &mut out);
    for m in r_minus {
        for v in m.vars() {
            let t = Term::Var(v);
            out.insert((t.to_string(), t));
        }
    }
    out.into_iter().map(|(_, t)| t).collect()
}

/// Rows for the final send of `role`; empty when the role ends with a receive.
pub fn check_step(
    variant: SelectionVariant,
    role: &GeneralizedRole,
    space: &MessageSpace,
    ctx: &Context,
) -> Result<Vec<AnalysisRow>, WitnessError> {
    let Some((r_minus, last)) = role.final_send() else {
        return Ok(Vec::new());
    };
    let r_plus = &last.payload;
    let mut rows = Vec::new();
    for alpha in subjects(&r_minus, r_plus, ctx) {
        let atom_type = subject_type(&alpha, ctx)?;
        let rhs_type = atom_type.clone().unwrap_or_else(SecurityLevel::top);
        let lower = lower_bound(variant, &alpha, r_plus, space, ctx)?;
        let upper = upper_bound(variant, &alpha, &r_minus, ctx)?;
        let case_rows: Vec<CaseRow> = upper
            .cases
            .iter()
            .map(|c| CaseRow {
                key: c.protective_key.clone(),
                lower: lower.clone(),
                upper: c.value.clone(),
                verdict: Verdict::from(lower.geq(&rhs_type.meet(&c.value))),
            })
            .collect();
        let verdict = Verdict::from(case_rows.iter().all(|c| c.verdict == Verdict::Pass));
        rows.push(AnalysisRow {
            role: role.label(),
            session: role.session.clone(),
            step: last.number,
            atom: alpha.to_string(),
            kind: if alpha.is_var() {
                AtomClass::Variable
            } else {
                AtomClass::Atom
            },
            atom_type,
            lower,
            upper: upper.highest(),
            verdict,
            cases: if alpha.is_var() && case_rows.len() > 1 {
                case_rows
            } else {
                Vec::new()
            },
            r_minus: r_minus.iter().map(|m| m.to_string()).collect(),
            r_plus: r_plus.to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_term;

    fn t(s: &str) -> Term {
        parse_term(s).unwrap()
    }

    fn example_ctx(theory: &str) -> Context {
        Context::load(&format!(
            "principals A, B, C, D, S, I\nintruder I\ntheory {theory}\n\
             type alpha = {{A, B, S}}\ntype kab = {{A, B}}\ntype kas = {{A, S}}\n\
             inv kab = kab\ninv kas = kas\n"
        ))
        .unwrap()
    }

    #[test]
    fn example_selection_empty_theory() {
        let ctx = example_ctx("empty");
        let m = t("{A.C.{alpha.D}_kas}_kab");
        let alpha = t("alpha");
        assert_eq!(external_protective_key(&alpha, &m, &ctx).unwrap(), ["kab"]);
        let sel = select(SelectionVariant::Max, &alpha, &m, &ctx).unwrap();
        let names: Vec<String> = sel[0]
            .selection
            .as_ref()
            .unwrap()
            .entries
            .iter()
            .map(|e| format!("{e:?}"))
            .collect();
        assert_eq!(
            names,
            [
                "Identity(\"A\")",
                "Identity(\"C\")",
                "Identity(\"D\")",
                "InverseKey(\"kab\")"
            ]
        );
        let f = F(SelectionVariant::Max, &alpha, &m, &ctx).unwrap();
        assert_eq!(f.value().unwrap(), &SecurityLevel::of(["A", "B", "C", "D"]));
    }

    #[test]
    fn example_selection_homomorphic() {
        let ctx = example_ctx("homomorphic");
        let f = F(SelectionVariant::Max, &t("alpha"), &t("{A.C.{alpha.D}_kas}_kab"), &ctx).unwrap();
        assert_eq!(f.value().unwrap(), &SecurityLevel::of(["A", "B"]));
    }

    #[test]
    fn ek_and_n_variants() {
        let ctx = example_ctx("empty");
        let m = t("{A.C.{alpha.D}_kas}_kab");
        let ek = F(SelectionVariant::Ek, &t("alpha"), &m, &ctx).unwrap();
        assert_eq!(ek.value().unwrap(), &SecurityLevel::of(["A", "B"]));
        let n = F(SelectionVariant::N, &t("alpha"), &m, &ctx).unwrap();
        assert_eq!(n.value().unwrap(), &SecurityLevel::of(["A", "C", "D"]));
        let lone = F(SelectionVariant::N, &t("alpha"), &t("{alpha}_kab"), &ctx).unwrap();
        assert!(lone.value().unwrap().is_top());
    }

    #[test]
    fn axioms() {
        let ctx = example_ctx("empty");
        let alpha = t("alpha");
        assert_eq!(
            F(SelectionVariant::Max, &alpha, &alpha, &ctx).unwrap().value().unwrap(),
            &SecurityLevel::All
        );
        assert!(F(SelectionVariant::Max, &alpha, &t("{A}_kab"), &ctx)
            .unwrap()
            .value()
            .unwrap()
            .is_top());
        assert_eq!(
            F(SelectionVariant::Max, &alpha, &t("{alpha}_kab.alpha"), &ctx)
                .unwrap()
                .value()
                .unwrap(),
            &SecurityLevel::All
        );
        assert!(F(SelectionVariant::Max, &alpha, &t("h(alpha)"), &ctx)
            .unwrap()
            .value()
            .unwrap()
            .is_top());
        assert!(external_protective_key(&alpha, &t("A"), &ctx).is_err());
        assert!(external_protective_key(&alpha, &alpha, &ctx).unwrap().is_empty());
    }

    #[test]
    fn variable_cases() {
        let ctx = Context::load(
            "principals A, B, S, I\nintruder I\ntype kas = {A, S}\ntype kbs = {B, S}\ninv kas = kas\ninv kbs = kbs\n",
        )
        .unwrap();
        let v = t("?V");
        let m = t("{A.{?U.?V}_kas}_kbs");
        assert_eq!(external_protective_key(&v, &m, &ctx).unwrap(), ["kbs", "kas"]);
        let f = F(SelectionVariant::Max, &v, &derive(&m, Some(&Ident::new("V"))), &ctx).unwrap();
        let cases: Vec<(String, String)> = f
            .cases
            .iter()
            .map(|c| (c.protective_key.clone().unwrap(), c.value.to_string()))
            .collect();
        assert_eq!(
            cases,
            [
                ("kbs".to_string(), "{A,B,S}".to_string()),
                ("kas".to_string(), "{A,S}".to_string())
            ]
        );
    }

    #[test]
    fn bound_meet_labels() {
        let a = Bound {
            cases: vec![
                BoundCase {
                    protective_key: Some("k1".into()),
                    value: SecurityLevel::of(["A"]),
                },
                BoundCase {
                    protective_key: Some("k2".into()),
                    value: SecurityLevel::of(["B"]),
                },
            ],
        };
        let m = a.meet(&Bound::top());
        assert_eq!(m, a);
        assert_eq!(a.lowest(), SecurityLevel::of(["A", "B"]));
        assert!(a.highest().is_top());
    }
}
