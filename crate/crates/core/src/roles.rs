//! Protocol narrations, generalized roles and the pattern message space.
//!
//! Narration file:
//!
//! ```text
//! protocol nsl
//! principals A, B
//! intruder I
//! fresh A: Na
//! uses-context nsl.ctx
//! step 1: A -> B : {Na.A}_kb
//! ```
//!
//! Role file:
//!
//! ```text
//! role B 1 session b
//! recv: {?Y.A}_kb
//! send: {B.?Y}_ka.{B.Nb@b}_ka
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::context::Context;
use crate::syntax::{parse_term, resolve_constants};
use crate::term::{alpha_equivalent, alpha_rename, Ident, Term};
use crate::unify::{AtomKind, Signature};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RolesError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: expected step {expected}, found step {found}")]
    StepGap { line: usize, expected: u32, found: u32 },
    #[error("line {line}: `{name}` is not a declared principal")]
    UndeclaredPrincipal { line: usize, name: String },
    #[error("no steps or roles found")]
    Empty,
    #[error("role {0} has no send step")]
    NoSend(String),
    #[error("role {role}: variable ?{var} first appears in a send")]
    VarInSend { role: String, var: String },
    #[error("role {0} is declared twice")]
    DuplicateRole(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub index: u32,
    pub sender: String,
    pub receiver: String,
    pub payload: Term,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Narration {
    pub name: String,
    pub principals: Vec<String>,
    pub intruder: Option<String>,
    pub fresh: BTreeMap<String, BTreeSet<String>>,
    pub context: Option<String>,
    pub steps: Vec<Step>,
}

impl Narration {
    fn creator(&self, atom: &str) -> Option<&str> {
        self.fresh
            .iter()
            .find(|(_, atoms)| atoms.contains(atom))
            .map(|(p, _)| p.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Recv,
    Send,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Recv => "recv",
            Direction::Send => "send",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleStep {
    /// Narration step number, or position in a role file.
    pub number: u32,
    pub direction: Direction,
    pub payload: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralizedRole {
    pub agent: String,
    pub index: u32,
    pub session: String,
    pub steps: Vec<RoleStep>,
}

impl GeneralizedRole {
    pub fn label(&self) -> String {
        format!("{}^{}", self.agent, self.index)
    }

    pub fn ends_with_send(&self) -> bool {
        self.steps.last().is_some_and(|s| s.direction == Direction::Send)
    }

    /// Received payloads before the final send, the final send itself.
    pub fn final_send(&self) -> Option<(Vec<&Term>, &RoleStep)> {
        let (last, before) = self.steps.split_last()?;
        if last.direction != Direction::Send {
            return None;
        }
        let r_minus = before
            .iter()
            .filter(|s| s.direction == Direction::Recv)
            .map(|s| &s.payload)
            .collect();
        Some((r_minus, last))
    }

    pub fn resolve_constants(&mut self, constants: &BTreeSet<String>) {
        for s in &mut self.steps {
            s.payload = resolve_constants(&s.payload, constants);
        }
    }
}

impl fmt::Display for GeneralizedRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "role {} {} session {}", self.agent, self.index, self.session)?;
        for s in &self.steps {
            writeln!(f, "{}: {}", s.direction, s.payload)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MessageSpace {
    pub patterns: Vec<Term>,
}

impl MessageSpace {
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> RolesError {
    RolesError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.trim_start().starts_with('#') {
        true => "",
        false => line,
    }
}

fn names(list: &str, line: usize, column: usize) -> Result<Vec<String>, RolesError> {
    list.split(',')
        .map(|p| {
            let p = p.trim();
            if p.is_empty() || !p.chars().all(|c| c.is_alphanumeric() || c == '_') {
                Err(syntax(line, column, format!("bad name `{p}`")))
            } else {
                Ok(p.to_string())
            }
        })
        .collect()
}

fn term_at(text: &str, line: usize, offset: usize) -> Result<Term, RolesError> {
    parse_term(text).map_err(|e| syntax(line, offset + e.column, e.message))
}

pub fn parse_narration(text: &str) -> Result<Narration, RolesError> {
    let mut n = Narration::default();
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
        match word {
            "protocol" => n.name = rest.trim().to_string(),
            "principals" => n.principals = names(rest, line_no, rest_col)?,
            "intruder" => n.intruder = Some(rest.trim().to_string()),
            "uses-context" => n.context = Some(rest.trim().to_string()),
            "fresh" => {
                let (who, atoms) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line_no, rest_col, "expected `fresh P: atoms`"))?;
                let who = who.trim().to_string();
                if !n.principals.contains(&who) {
                    return Err(RolesError::UndeclaredPrincipal {
                        line: line_no,
                        name: who,
                    });
                }
                let atoms = names(atoms, line_no, rest_col)?;
                n.fresh.entry(who).or_default().extend(atoms);
            }
            "step" => {
                let (head, payload) = rest
                    .split_once(':')
                    .ok_or_else(|| syntax(line_no, rest_col, "expected `step n: P -> Q : term`"))?;
                let index: u32 = head
                    .trim()
                    .parse()
                    .map_err(|_| syntax(line_no, rest_col, format!("bad step number `{}`", head.trim())))?;
                let expected = n.steps.len() as u32 + 1;
                if index != expected {
                    return Err(RolesError::StepGap {
                        line: line_no,
                        expected,
                        found: index,
                    });
                }
                let (route, body) = payload
                    .split_once(':')
                    .ok_or_else(|| syntax(line_no, rest_col, "expected `P -> Q : term`"))?;
                let (sender, receiver) = route
                    .split_once("->")
                    .ok_or_else(|| syntax(line_no, rest_col, "expected `P -> Q`"))?;
                let (sender, receiver) = (sender.trim().to_string(), receiver.trim().to_string());
                for who in [&sender, &receiver] {
                    if !n.principals.contains(who) {
                        return Err(RolesError::UndeclaredPrincipal {
                            line: line_no,
                            name: who.clone(),
                        });
                    }
                }
                if sender == receiver {
                    return Err(syntax(line_no, rest_col, "sender and receiver coincide"));
                }
                let offset = line.len() - body.len();
                let payload = term_at(body, line_no, offset)?;
                if !payload.vars().is_empty() {
                    return Err(syntax(line_no, offset + 1, "narrations cannot contain variables"));
                }
                n.steps.push(Step {
                    index,
                    sender,
                    receiver,
                    payload,
                });
            }
            other => return Err(syntax(line_no, indent + 1, format!("unknown directive `{other}`"))),
        }
    }
    if n.steps.is_empty() {
        return Err(RolesError::Empty);
    }
    Ok(n)
}

pub fn parse_roles(text: &str) -> Result<Vec<GeneralizedRole>, RolesError> {
    let mut roles: Vec<GeneralizedRole> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let trimmed = line.trim_start();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - trimmed.len();
        if let Some(rest) = trimmed.strip_prefix("role ") {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            let [agent, index, "session", session] = parts.as_slice() else {
                return Err(syntax(
                    line_no,
                    indent + 1,
                    "expected `role <Agent> <k> session <salt>`",
                ));
            };
            let index: u32 = index
                .parse()
                .map_err(|_| syntax(line_no, indent + 6, format!("bad role index `{index}`")))?;
            let role = GeneralizedRole {
                agent: agent.to_string(),
                index,
                session: session.to_string(),
                steps: Vec::new(),
            };
            if roles.iter().any(|r| r.agent == role.agent && r.index == role.index) {
                return Err(RolesError::DuplicateRole(role.label()));
            }
            roles.push(role);
            continue;
        }
        let (direction, body) = if let Some(b) = trimmed.strip_prefix("recv:") {
            (Direction::Recv, b)
        } else if let Some(b) = trimmed.strip_prefix("send:") {
            (Direction::Send, b)
        } else {
            return Err(syntax(line_no, indent + 1, "expected `role`, `recv:` or `send:`"));
        };
        let role = roles
            .last_mut()
            .ok_or_else(|| syntax(line_no, indent + 1, "step before any `role` line"))?;
        let payload = term_at(body, line_no, line.len() - body.len())?;
        let number = role.steps.len() as u32 + 1;
        role.steps.push(RoleStep {
            number,
            direction,
            payload,
        });
    }
    if roles.is_empty() {
        return Err(RolesError::Empty);
    }
    for role in &roles {
        check_role(role)?;
    }
    Ok(roles)
}

fn check_role(role: &GeneralizedRole) -> Result<(), RolesError> {
    if !role.steps.iter().any(|s| s.direction == Direction::Send) {
        return Err(RolesError::NoSend(role.label()));
    }
    let mut seen: BTreeSet<Ident> = BTreeSet::new();
    for step in &role.steps {
        let vars = step.payload.vars();
        match step.direction {
            Direction::Recv => seen.extend(vars),
            Direction::Send => {
                if let Some(v) = vars.iter().find(|v| !seen.contains(*v)) {
                    return Err(RolesError::VarInSend {
                        role: role.label(),
                        var: v.to_string(),
                    });
                }
            }
        }
    }
    Ok(())
}

const VAR_POOL: [&str; 6] = ["X", "Y", "Z", "U", "V", "W"];

struct VarPool(usize);

impl VarPool {
    fn next(&mut self) -> Term {
        let i = self.0;
        self.0 += 1;
        let name = match VAR_POOL.get(i) {
            Some(n) => n.to_string(),
            None => format!("X{}", i - VAR_POOL.len() + 1),
        };
        Term::var(name)
    }
}

/// One agent's view while walking the narration.
struct AgentView<'a> {
    agent: &'a str,
    session: String,
    narration: &'a Narration,
    ctx: &'a Context,
    /// Received subterm (narration form) and the variable standing for it.
    unknown: Vec<(Term, Term)>,
}

impl AgentView<'_> {
    fn creates(&self, atom: &str) -> bool {
        self.narration.fresh.get(self.agent).is_some_and(|s| s.contains(atom))
    }

    fn knows_atom(&self, a: &Term) -> bool {
        match a {
            Term::Const(_) => true,
            Term::Param(id) => {
                let name = id.name.as_str();
                if self.ctx.is_principal(name) {
                    return true;
                }
                match self.narration.creator(name) {
                    Some(p) => p == self.agent,
                    None => match self.ctx.type_of(name) {
                        Ok(crate::lattice::SecurityLevel::All) => true,
                        Ok(crate::lattice::SecurityLevel::Principals(s)) => s.contains(self.agent),
                        Err(_) => false,
                    },
                }
            }
            _ => false,
        }
    }

    fn can_decrypt(&self, key: &Term) -> bool {
        let Some(base) = key.base() else { return false };
        let Ok(inv) = self.ctx.inverse(base) else {
            return false;
        };
        match self.ctx.type_of(inv) {
            Ok(crate::lattice::SecurityLevel::All) => true,
            Ok(crate::lattice::SecurityLevel::Principals(s)) => s.contains(self.agent),
            Err(_) => false,
        }
    }

    fn knows_all(&self, t: &Term) -> bool {
        t.atoms().iter().all(|a| self.knows_atom(a)) || self.unknown.iter().any(|(u, _)| u == t)
    }

    /// Session-salt the agent's own fresh atoms.
    fn local(&self, t: &Term) -> Term {
        t.map_atomic(&mut |leaf| match leaf {
            Term::Param(id) if id.salt.is_none() && self.creates(&id.name) => {
                Term::Param(Ident::new(format!("{}@{}", id.name, self.session)))
            }
            other => other.clone(),
        })
    }

    fn lookup(&self, t: &Term) -> Option<Term> {
        self.unknown.iter().find(|(u, _)| u == t).map(|(_, v)| v.clone())
    }

    fn fresh_var(&mut self, t: &Term, pool: &mut VarPool) -> Term {
        let v = pool.next();
        self.unknown.push((t.clone(), v.clone()));
        v
    }

    fn receive(&mut self, t: &Term, pool: &mut VarPool) -> Term {
        if let Some(v) = self.lookup(t) {
            return v;
        }
        match t {
            Term::Pair(a, b) => {
                let a = self.receive(a, pool);
                let b = self.receive(b, pool);
                Term::pair(a, b)
            }
            Term::Enc(body, key) if self.can_decrypt(key) => {
                let body = self.receive(body, pool);
                Term::Enc(Box::new(body), Box::new(self.local(key)))
            }
            Term::Epsilon => Term::Epsilon,
            other if self.knows_all(other) => self.local(other),
            other => self.fresh_var(other, pool),
        }
    }

    fn send(&self, t: &Term) -> Term {
        if let Some(v) = self.lookup(t) {
            return v;
        }
        match t {
            Term::Pair(a, b) => Term::pair(self.send(a), self.send(b)),
            Term::Enc(a, k) => Term::Enc(Box::new(self.send(a)), Box::new(self.send(k))),
            Term::Hash(a) => Term::hash(self.send(a)),
            other => self.local(other),
        }
    }
}

/// Project the narration onto each agent, replacing what the agent cannot
/// check by variables. Each send-terminated prefix is a role; a complete
/// sequence ending with a receive is kept as a further role so its payload
/// reaches the message space.
pub fn generalize(n: &Narration, ctx: &Context) -> Vec<GeneralizedRole> {
    let mut agents: Vec<&str> = Vec::new();
    for s in &n.steps {
        for who in [&s.sender, &s.receiver] {
            if !agents.contains(&who.as_str()) {
                agents.push(who);
            }
        }
    }
    let mut pool = VarPool(0);
    let mut roles = Vec::new();
    for agent in agents {
        let mut view = AgentView {
            agent,
            session: agent.to_lowercase(),
            narration: n,
            ctx,
            unknown: Vec::new(),
        };
        let mut steps = Vec::new();
        for s in &n.steps {
            let payload = resolve_constants(&s.payload, &ctx.constants);
            if s.sender == agent {
                steps.push(RoleStep {
                    number: s.index,
                    direction: Direction::Send,
                    payload: view.send(&payload),
                });
            } else if s.receiver == agent {
                let p = view.receive(&payload, &mut pool);
                steps.push(RoleStep {
                    number: s.index,
                    direction: Direction::Recv,
                    payload: p,
                });
            }
        }
        let mut index = 0;
        let mut push = |len: usize, roles: &mut Vec<GeneralizedRole>| {
            index += 1;
            roles.push(GeneralizedRole {
                agent: agent.to_string(),
                index,
                session: view.session.clone(),
                steps: steps[..len].to_vec(),
            });
        };
        for (i, s) in steps.iter().enumerate() {
            if s.direction == Direction::Send {
                push(i + 1, &mut roles);
            }
        }
        let has_send = steps.iter().any(|s| s.direction == Direction::Send);
        if has_send && steps.last().is_some_and(|s| s.direction == Direction::Recv) {
            push(steps.len(), &mut roles);
        }
    }
    roles
}

/// Payload components of every role, without bare identities or alpha
/// duplicates; kept entry `i` is renamed with salt `i + 1`.
pub fn message_space(roles: &[GeneralizedRole], sig: &dyn Signature) -> MessageSpace {
    let mut kept: Vec<Term> = Vec::new();
    for role in roles {
        for step in &role.steps {
            for c in step.payload.components() {
                let identity = c.is_atom() && sig.kind(c.base().unwrap_or_default()) == AtomKind::Principal;
                if identity || *c == Term::Epsilon {
                    continue;
                }
                if !kept.iter().any(|k| alpha_equivalent(k, c)) {
                    kept.push(c.clone());
                }
            }
        }
    }
    MessageSpace {
        patterns: kept
            .iter()
            .enumerate()
            .map(|(i, p)| alpha_rename(p, i as u32 + 1))
            .collect(),
    }
}
