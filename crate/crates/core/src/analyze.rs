//! End-to-end analysis: load inputs, build roles and the message space, run
//! the check on every send-terminated role.

use thiserror::Error;

use crate::context::{Context, ContextError};
use crate::report::{AnalysisRow, Report};
use crate::roles::{
    generalize, message_space, parse_narration, parse_roles, GeneralizedRole, MessageSpace, RolesError,
};
use crate::term::{Term, TheoryTag};
use crate::witness::{check_step, SelectionVariant, WitnessError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalyzeError {
    #[error("context: {0}")]
    Context(#[from] ContextError),
    #[error("protocol: {0}")]
    Protocol(RolesError),
    #[error("roles: {0}")]
    Roles(RolesError),
    #[error("role {role}: {message}")]
    Typing { role: String, message: String },
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

#[derive(Clone, Copy, Debug, Default)]
pub struct Options {
    pub variant: SelectionVariant,
    /// Overrides the theory declared in the context.
    pub theory: Option<TheoryTag>,
}

/// Everything the check needs, kept around for inspection.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub protocol: String,
    pub context: Context,
    pub roles: Vec<GeneralizedRole>,
    pub space: MessageSpace,
}

impl Prepared {
    pub fn has_hash(&self) -> bool {
        self.roles
            .iter()
            .flat_map(|r| &r.steps)
            .any(|s| s.payload.contains_hash())
    }
}

pub fn prepare(
    context_text: &str,
    protocol_text: &str,
    roles_text: Option<&str>,
    theory: Option<TheoryTag>,
) -> Result<Prepared, AnalyzeError> {
    let mut ctx = Context::load(context_text)?;
    if let Some(t) = theory {
        ctx.theory = t;
    }
    let narration = parse_narration(protocol_text).map_err(AnalyzeError::Protocol)?;
    let roles = match roles_text {
        Some(text) => {
            let mut roles = parse_roles(text).map_err(AnalyzeError::Roles)?;
            for r in &mut roles {
                r.resolve_constants(&ctx.constants);
            }
            roles
        }
        None => generalize(&narration, &ctx),
    };
    for r in &roles {
        validate(r, &ctx)?;
    }
    let space = message_space(&roles, &ctx);
    let protocol = if narration.name.is_empty() {
        "protocol".to_string()
    } else {
        narration.name.clone()
    };
    Ok(Prepared {
        protocol,
        context: ctx,
        roles,
        space,
    })
}

fn validate(role: &GeneralizedRole, ctx: &Context) -> Result<(), AnalyzeError> {
    let fail = |message: String| AnalyzeError::Typing {
        role: role.label(),
        message,
    };
    for s in &role.steps {
        let mut err = None;
        s.payload.visit(&mut |t| {
            if err.is_some() {
                return;
            }
            match t {
                Term::Const(_) | Term::Param(_) => {
                    let name = t.base().unwrap_or_default();
                    if ctx.type_of(name).is_err() {
                        err = Some(format!("atom `{t}` has no type in the context"));
                    }
                }
                Term::Enc(_, k) if !k.is_var() && !ctx.is_key(k.base().unwrap_or_default()) => {
                    err = Some(format!("key `{k}` has no declared inverse"));
                }
                _ => {}
            }
        });
        if let Some(m) = err {
            return Err(fail(m));
        }
    }
    Ok(())
}

pub fn run(prepared: &Prepared, variant: SelectionVariant) -> Result<Report, AnalyzeError> {
    let mut roles: Vec<&GeneralizedRole> = prepared.roles.iter().filter(|r| r.ends_with_send()).collect();
    roles.sort_by(|a, b| (&a.agent, a.index).cmp(&(&b.agent, b.index)));
    let mut rows: Vec<AnalysisRow> = Vec::new();
    for r in roles {
        rows.extend(check_step(variant, r, &prepared.space, &prepared.context)?);
    }
    Ok(Report::new(
        prepared.protocol.clone(),
        prepared.context.theory,
        variant,
        rows,
    ))
}

pub fn analyze(
    context_text: &str,
    protocol_text: &str,
    roles_text: Option<&str>,
    options: Options,
) -> Result<Report, AnalyzeError> {
    let prepared = prepare(context_text, protocol_text, roles_text, options.theory)?;
    run(&prepared, options.variant)
}
