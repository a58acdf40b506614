//! Generators, fixtures and property checks shared by the property suite and
//! the acceptance target.
#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::OnceLock;

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use wifn::analyze::{prepare, Prepared};
use wifn::term::{derive, normalize, rewrite_steps, Flex, Ident, Substitution, Term, TheoryTag};
use wifn::unify::{mgu, Untyped};
use wifn::witness::{lower_bound, select, SelectionVariant, F};
use wifn::{Context, SecurityLevel};

pub const CASES: u32 = 1000;
pub const MAX_DEPTH: usize = 6;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Eight atoms: three principals, two nonces, a shared key and a key pair.
pub const ATOMS: [&str; 8] = ["A", "B", "C", "n1", "n2", "kab", "ka", "ka_inv"];
pub const SUBJECTS: [&str; 3] = ["n1", "n2", "kab"];

const CONTEXT: &str = "\
principals A, B, C, I
intruder I
type n1 = {A, B}
type n2 = ALL
type kab = {A, B}
type ka = ALL
type ka_inv = {A}
inv kab = kab
inv ka = ka_inv
";

pub fn context(theory: TheoryTag) -> Context {
    let mut ctx = Context::load(CONTEXT).expect("property context");
    ctx.theory = theory;
    ctx
}

fn key() -> BoxedStrategy<Term> {
    prop_oneof![
        4 => prop::sample::select(vec!["kab", "ka", "ka_inv"]).prop_map(Term::param),
        1 => Just(Term::var("K")),
    ]
    .boxed()
}

fn grow(leaf: BoxedStrategy<Term>, key: BoxedStrategy<Term>) -> BoxedStrategy<Term> {
    leaf.prop_recursive(MAX_DEPTH as u32, 48, 2, move |inner| {
        prop_oneof![
            3 => (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            3 => (inner.clone(), key.clone()).prop_map(|(b, k)| Term::enc(b, k)),
            1 => inner.prop_map(Term::hash),
        ]
    })
    .boxed()
}

/// Ground terms over `ATOMS`, with ε and a variable key now and then.
pub fn ground_term() -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        12 => prop::sample::select(ATOMS.to_vec()).prop_map(Term::param),
        1 => Just(Term::Epsilon),
    ];
    grow(leaf.boxed(), key())
}

/// Terms over `ATOMS` with variables.
pub fn open_term() -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        8 => prop::sample::select(ATOMS.to_vec()).prop_map(Term::param),
        3 => prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
        1 => Just(Term::Epsilon),
    ];
    grow(leaf.boxed(), key())
}

pub fn theory() -> impl Strategy<Value = TheoryTag> {
    prop_oneof![Just(TheoryTag::Empty), Just(TheoryTag::Homomorphic)]
}

pub fn subject() -> impl Strategy<Value = Term> {
    prop::sample::select(SUBJECTS.to_vec()).prop_map(Term::param)
}

pub fn variant() -> impl Strategy<Value = SelectionVariant> {
    prop_oneof![
        Just(SelectionVariant::Max),
        Just(SelectionVariant::Ek),
        Just(SelectionVariant::N)
    ]
}

pub fn level() -> impl Strategy<Value = SecurityLevel> {
    prop_oneof![
        1 => Just(SecurityLevel::All),
        5 => prop::collection::btree_set(prop::sample::select(vec!["A", "B", "C", "D"]), 0..=4)
            .prop_map(SecurityLevel::of),
    ]
}

/// Small universe for brute-force unification: constants a, b, key k,
/// variables X, Y, Z, depth at most 3.
pub fn small_term() -> BoxedStrategy<Term> {
    let leaf = prop_oneof![
        prop::sample::select(vec!["a", "b"]).prop_map(Term::constant),
        prop::sample::select(vec!["X", "Y", "Z"]).prop_map(Term::var),
    ];
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
            inner.clone().prop_map(|b| Term::enc(b, Term::constant("k"))),
            inner.prop_map(Term::hash),
        ]
    })
    .boxed()
}

pub fn small_substitution() -> impl Strategy<Value = Substitution> {
    prop::collection::btree_map(prop::sample::select(vec!["X", "Y", "Z"]), small_term(), 0..=3).prop_map(|bindings| {
        let mut s = Substitution::new();
        for (v, t) in bindings {
            s.bind(Flex::Var(Ident::new(v)), t).expect("vars take any term");
        }
        s
    })
}

// ---------------------------------------------------------------------------
// Properties

pub fn normalize_idempotent(m: &Term, theory: TheoryTag) -> Result<(), TestCaseError> {
    let n = normalize(m, theory);
    prop_assert_eq!(normalize(&n, theory), n.clone());
    prop_assert!(rewrite_steps(&n, theory).is_empty(), "normal form {} still rewrites", n);
    Ok(())
}

/// Any rewrite order ends in the normal form.
pub fn normalize_order_independent(m: &Term, theory: TheoryTag, choices: &[usize]) -> Result<(), TestCaseError> {
    let mut cur = m.clone();
    let mut i = 0;
    loop {
        let next = rewrite_steps(&cur, theory);
        if next.is_empty() {
            break;
        }
        let pick = choices.get(i % choices.len().max(1)).copied().unwrap_or(0);
        cur = next[pick % next.len()].clone();
        i += 1;
        prop_assert!(i < 100_000, "rewriting did not terminate");
    }
    prop_assert_eq!(cur, normalize(m, theory));
    Ok(())
}

pub fn derive_laws(m: &Term) -> Result<(), TestCaseError> {
    let d = derive(m, None);
    prop_assert!(d.vars().is_empty());
    prop_assert_eq!(derive(&d, None), d.clone());
    let x = Ident::new("X");
    let dx = derive(m, Some(&x));
    prop_assert!(dx.vars().iter().all(|v| *v == x));
    prop_assert_eq!(derive(&dx, Some(&x)), dx.clone());
    prop_assert_eq!(dx.contains(&Term::Var(x.clone())), m.contains(&Term::Var(x)));
    prop_assert_eq!(d.atoms(), derive(&dx, None).atoms());
    Ok(())
}

const GROUND: [&str; 4] = ["a", "b", "a.b", "{a}_k"];

fn ground_values() -> Vec<Term> {
    GROUND
        .iter()
        .map(|s| {
            wifn::syntax::resolve_constants(
                &wifn::syntax::parse_term(s).unwrap(),
                &["a", "b", "k"].iter().map(|c| c.to_string()).collect(),
            )
        })
        .collect()
}

/// Soundness of mgu, and on the small universe: every ground unifier is an
/// instance of the mgu, and no mgu means no ground unifier.
pub fn mgu_sound_and_general(p: &Term, t: &Term) -> Result<(), TestCaseError> {
    let sigma = mgu(p, t, &Untyped);
    if let Some(s) = &sigma {
        prop_assert_eq!(s.apply(p), s.apply(t), "mgu {} does not unify", s);
        prop_assert!(s.is_idempotent());
    }
    let vars: Vec<Ident> = p.vars().union(&t.vars()).cloned().collect();
    let values = ground_values();
    let combos = values.len().pow(vars.len() as u32);
    for n in 0..combos {
        let mut theta = Substitution::new();
        let mut k = n;
        for v in &vars {
            theta
                .bind(Flex::Var(v.clone()), values[k % values.len()].clone())
                .unwrap();
            k /= values.len();
        }
        if theta.apply(p) != theta.apply(t) {
            continue;
        }
        let Some(s) = &sigma else {
            return Err(TestCaseError::fail(format!(
                "{theta} unifies {p} and {t} but mgu failed"
            )));
        };
        for v in &vars {
            let x = Term::Var(v.clone());
            prop_assert_eq!(
                theta.apply(&s.apply(&x)),
                theta.apply(&x),
                "{} is not an instance of {}",
                theta,
                s
            );
        }
    }
    Ok(())
}

pub fn compose_law(s: &Substitution, t: &Substitution, m: &Term) -> Result<(), TestCaseError> {
    prop_assert_eq!(s.compose(t).apply(m), t.apply(&s.apply(m)));
    Ok(())
}

pub fn lattice_laws(a: &SecurityLevel, b: &SecurityLevel, c: &SecurityLevel) -> Result<(), TestCaseError> {
    prop_assert_eq!(a.meet(b), b.meet(a));
    prop_assert_eq!(a.join(b), b.join(a));
    prop_assert_eq!(a.meet(&b.meet(c)), a.meet(b).meet(c));
    prop_assert_eq!(a.join(&b.join(c)), a.join(b).join(c));
    prop_assert_eq!(a.meet(&a.join(b)), a.clone());
    prop_assert_eq!(a.join(&a.meet(b)), a.clone());
    prop_assert_eq!(a.meet(a), a.clone());
    prop_assert_eq!(a.join(a), a.clone());
    prop_assert_eq!(a.meet(&SecurityLevel::top()), a.clone());
    prop_assert_eq!(a.join(&SecurityLevel::bottom()), a.clone());
    prop_assert!(a.geq(&SecurityLevel::bottom()) && SecurityLevel::top().geq(a));
    prop_assert_eq!(a.geq(b), a.join(b) == *a);
    prop_assert_eq!(a.geq(b), a.meet(b) == *b);
    prop_assert!(a.join(b).geq(a) && a.geq(&a.meet(b)));
    if a.geq(b) && b.geq(c) {
        prop_assert!(a.geq(c));
    }
    if a.geq(b) && b.geq(a) {
        prop_assert_eq!(a, b);
    }
    Ok(())
}

fn f_value(variant: SelectionVariant, alpha: &Term, m: &Term, ctx: &Context) -> Result<SecurityLevel, TestCaseError> {
    let b = F(variant, alpha, m, ctx).map_err(|e| TestCaseError::fail(e.to_string()))?;
    b.value()
        .cloned()
        .ok_or_else(|| TestCaseError::fail("typed atom gave several cases"))
}

/// F(α,α) is bottom, F is top when α is absent or hashed, F distributes
/// over pairs as a meet and only sees normal forms.
pub fn f_axioms(
    variant: SelectionVariant,
    alpha: &Term,
    m1: &Term,
    m2: &Term,
    theory: TheoryTag,
) -> Result<(), TestCaseError> {
    let ctx = context(theory);
    prop_assert_eq!(f_value(variant, alpha, alpha, &ctx)?, SecurityLevel::All);
    if !m1.contains(alpha) {
        prop_assert!(f_value(variant, alpha, m1, &ctx)?.is_top());
    }
    prop_assert!(f_value(variant, alpha, &Term::hash(m1.clone()), &ctx)?.is_top());
    let pair = f_value(variant, alpha, &Term::pair(m1.clone(), m2.clone()), &ctx)?;
    let parts = f_value(variant, alpha, m1, &ctx)?.meet(&f_value(variant, alpha, m2, &ctx)?);
    prop_assert_eq!(pair, parts);
    prop_assert_eq!(
        f_value(variant, alpha, m1, &ctx)?,
        f_value(variant, alpha, &normalize(m1, theory), &ctx)?
    );
    Ok(())
}

/// Selections never grow along a rewrite step l -> r.
pub fn condition_one(
    variant: SelectionVariant,
    alpha: &Term,
    l: &Term,
    theory: TheoryTag,
) -> Result<(), TestCaseError> {
    let ctx = context(theory);
    let before = select(variant, alpha, l, &ctx).map_err(|e| TestCaseError::fail(e.to_string()))?;
    prop_assert_eq!(before.len(), 1);
    for r in rewrite_steps(l, theory) {
        let after = select(variant, alpha, &r, &ctx).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(after.len(), 1);
        match (&after[0].selection, &before[0].selection) {
            (Some(a), Some(b)) => prop_assert!(a.is_subset(b), "{:?} grew to {:?} on {} -> {}", b, a, l, r),
            (None, None) => {}
            (a, b) => {
                return Err(TestCaseError::fail(format!(
                    "protection changed on {l} -> {r}: {b:?} vs {a:?}"
                )))
            }
        }
    }
    Ok(())
}

pub const FIXTURES: [(&str, &str); 4] = [
    ("nsl.ctx", "nsl.proto"),
    ("nsl.ctx", "nsl-hash.proto"),
    ("woolam.ctx", "woolam-amended.proto"),
    ("woolam.ctx", "woolam-flawed.proto"),
];

pub fn prepared(index: usize, theory: TheoryTag) -> &'static Prepared {
    static CACHE: OnceLock<Vec<Prepared>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        let mut v = Vec::new();
        for t in [TheoryTag::Empty, TheoryTag::Homomorphic] {
            for (c, p) in FIXTURES {
                v.push(prepare(&read_fixture(c), &read_fixture(p), None, Some(t)).expect("fixture loads"));
            }
        }
        v
    });
    let offset = if theory == TheoryTag::Empty { 0 } else { FIXTURES.len() };
    &all[offset + index % FIXTURES.len()]
}

/// Every case of F(α, ∂[ᾱ]r+) lies above the lower bound.
pub fn bounds_ordering(
    fixture: usize,
    theory: TheoryTag,
    variant: SelectionVariant,
    role: usize,
    element: usize,
) -> Result<(), TestCaseError> {
    let p = prepared(fixture, theory);
    let roles: Vec<_> = p.roles.iter().filter(|r| r.ends_with_send()).collect();
    let r = roles[role % roles.len()];
    let (r_minus, last) = r.final_send().expect("send-terminated");
    let elements = wifn::witness::subjects(&r_minus, &last.payload, &p.context);
    if elements.is_empty() {
        return Ok(());
    }
    let alpha = &elements[element % elements.len()];
    let keep = match alpha {
        Term::Var(id) => Some(id),
        _ => None,
    };
    let lower = lower_bound(variant, alpha, &last.payload, &p.space, &p.context)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let f =
        F(variant, alpha, &derive(&last.payload, keep), &p.context).map_err(|e| TestCaseError::fail(e.to_string()))?;
    for c in &f.cases {
        prop_assert!(
            c.value.geq(&lower),
            "{}: F case {:?} = {} below lower {}",
            r.label(),
            c.protective_key,
            c.value,
            lower
        );
    }
    Ok(())
}
