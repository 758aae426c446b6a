//! Check-site placement for the shape-checking semantics. Instrumentation is
//! a set of side tables keyed by node id — the tree itself is never
//! rewritten — computed per run because it depends on which modules the
//! active configuration makes typed.
//!
//! Placement rules, applied inside typed modules only:
//!   1. function entry: every annotated parameter of a user-written lambda
//!      gets a shape test on entry;
//!   2. elimination results: every user-written application or field access
//!      gets a shape test on its result, except when the operator is a
//!      primitive whose results always satisfy it; loop code introduced by
//!      desugaring is exempt unless `check_desugared` is set;
//!   3. casts always check;
//!   4. instantiations check the shape of the instantiated type;
//!   5. imports from untyped modules are checked once at link time.
//! A shape with no run-time test (a bare quantified variable) is rejected
//! when a rule would have to check it.

use std::collections::{HashMap, HashSet};

use crate::blamemap::Action;
use crate::shapes::{shape_of, Shape};
use crate::syntax::{NodeId, Origin, Program, SourceLoc, Term, TermKind};
use crate::types::{prim_sig_of, BoundaryDirection, PrimOp, TypeInfo};

/// Where the parent value of a result check lives at the moment the check
/// runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParentAt {
    Operator,
    Arg(usize),
    /// The single subexpression (field access).
    TheExpr,
}

#[derive(Debug, Clone)]
pub struct ResultCheck {
    pub shape: Shape,
    pub hook: Option<(ParentAt, Action)>,
}

/// Parameter shapes for one lambda clause; `None` slots are unchecked.
#[derive(Debug, Clone)]
pub struct ClauseChecks {
    pub params: Vec<Option<Shape>>,
}

/// Link-time shape check for one import into typed code.
#[derive(Debug, Clone)]
pub struct BoundaryCheck {
    pub importer: String,
    pub binding: String,
    pub shape: Shape,
    pub loc: SourceLoc,
    /// Index into the checker's boundary-import list.
    pub boundary_index: usize,
}

/// Ownership recording done at a call (blame-tracking mode only).
#[derive(Debug, Clone)]
pub enum LinkPlan {
    /// Result derives from one subvalue: `parent --action--> result`.
    Container { parent: ParentAt, action: Action },
    /// Arguments flow into the operator, the result flows out of it.
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKind {
    FnEntry(usize),
    ElimResult,
    Cast,
    Inst,
    BoundaryImport,
}

/// One entry of the static check dump.
#[derive(Debug, Clone)]
pub struct CheckSite {
    pub kind: SiteKind,
    pub loc: SourceLoc,
    pub shape: Shape,
}

impl CheckSite {
    pub fn render(&self) -> String {
        let kind = match self.kind {
            SiteKind::FnEntry(i) => format!("fn-entry[{i}]"),
            SiteKind::ElimResult => "elim-result".into(),
            SiteKind::Cast => "cast".into(),
            SiteKind::Inst => "inst".into(),
            SiteKind::BoundaryImport => "boundary-import".into(),
        };
        format!("{kind} {} {}", self.loc.render(), self.shape.render())
    }
}

/// A check rule hit a type with no first-order test.
#[derive(Debug, Clone)]
pub struct UnsupportedCheck {
    pub loc: SourceLoc,
    pub subject: String,
    pub reason: String,
}

impl std::fmt::Display for UnsupportedCheck {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {} has no run-time check: {}", self.loc.render(), self.subject, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Instrumentation {
    /// Lambda node -> per-clause parameter checks.
    pub fn_entries: HashMap<NodeId, Vec<ClauseChecks>>,
    /// Application / field-access node -> result check.
    pub results: HashMap<NodeId, ResultCheck>,
    pub casts: HashMap<NodeId, Shape>,
    pub insts: HashMap<NodeId, Shape>,
    pub boundaries: Vec<BoundaryCheck>,
    /// Application / field-access node -> ownership recording plan.
    pub link_plans: HashMap<NodeId, LinkPlan>,
    /// Application whose operator is a direct reference to an import from
    /// untyped code -> index into the boundary-import list.
    pub boundary_calls: HashMap<NodeId, usize>,
    /// Flat dump, in module declaration order then source order.
    pub sites: Vec<CheckSite>,
}

struct Walker<'a> {
    info: &'a TypeInfo,
    check_desugared: bool,
    /// Import bindings of the current module that cross from untyped code,
    /// with their boundary indices.
    typed_imports: HashMap<String, usize>,
    /// Names bound by the current module's own definitions.
    module_defs: HashSet<String>,
    scope: Vec<String>,
    out: Instrumentation,
}

fn container_action(op: PrimOp, args: &[std::sync::Arc<Term>]) -> Option<Action> {
    match op {
        PrimOp::First | PrimOp::ListRef => Some(Action::ListElem),
        PrimOp::Rest => Some(Action::ListRest),
        PrimOp::VectorRef | PrimOp::VectorRefUnchecked => {
            // A constant index names the slot; anything else falls back to
            // the index-free element edge.
            match args.get(1).map(|a| &a.kind) {
                Some(TermKind::IntLit(i)) => Some(Action::ListElemAt(*i)),
                _ => Some(Action::ListElem),
            }
        }
        PrimOp::HashRef => Some(Action::HashValue),
        _ => None,
    }
}

impl<'a> Walker<'a> {
    fn reject_unsupported(
        &self,
        shape: &Shape,
        loc: &SourceLoc,
        subject: &str,
    ) -> Result<(), UnsupportedCheck> {
        if let Shape::Unsupported(reason) = shape {
            return Err(UnsupportedCheck {
                loc: loc.clone(),
                subject: subject.to_string(),
                reason: reason.clone(),
            });
        }
        Ok(())
    }

    fn walk(&mut self, t: &Term) -> Result<(), UnsupportedCheck> {
        match &t.kind {
            TermKind::Lambda { clauses } => {
                if t.loc.origin == Origin::User {
                    let mut checks = Vec::new();
                    for c in clauses {
                        let mut params = Vec::new();
                        for (i, p) in c.params.iter().enumerate() {
                            let shape = p.ty.as_ref().map(|ty| shape_of(ty));
                            match shape {
                                Some(s) if s == Shape::AnyShape => params.push(None),
                                Some(s) => {
                                    self.reject_unsupported(
                                        &s,
                                        &t.loc,
                                        &format!("parameter `{}`", p.name),
                                    )?;
                                    self.out.sites.push(CheckSite {
                                        kind: SiteKind::FnEntry(i),
                                        loc: t.loc.clone(),
                                        shape: s.clone(),
                                    });
                                    params.push(Some(s));
                                }
                                None => params.push(None),
                            }
                        }
                        checks.push(ClauseChecks { params });
                    }
                    self.out.fn_entries.insert(t.id, checks);
                }
                for c in clauses {
                    let depth = self.scope.len();
                    self.scope.extend(c.params.iter().map(|p| p.name.clone()));
                    let r = self.walk(&c.body);
                    self.scope.truncate(depth);
                    r?;
                }
                Ok(())
            }
            TermKind::App { op, args } => {
                let resolved = self.info.resolved_prims.get(&t.id).copied();
                let guaranteed =
                    resolved.map(|p| prim_sig_of(p).result_guaranteed).unwrap_or(false);
                let user = t.loc.origin == Origin::User;

                if (user || self.check_desugared) && !guaranteed {
                    if let Some(ty) = self.info.node_types.get(&t.id) {
                        let shape = shape_of(ty);
                        if shape != Shape::AnyShape && !shape.is_unsupported() {
                            let hook = match resolved.and_then(|p| container_action(p, args)) {
                                Some(action) => Some((ParentAt::Arg(0), action)),
                                None => Some((ParentAt::Operator, Action::Cod(0))),
                            };
                            self.out.sites.push(CheckSite {
                                kind: SiteKind::ElimResult,
                                loc: t.loc.clone(),
                                shape: shape.clone(),
                            });
                            self.out.results.insert(t.id, ResultCheck { shape, hook });
                        }
                    }
                }

                if user {
                    let plan = match resolved.and_then(|p| container_action(p, args)) {
                        Some(action) => {
                            LinkPlan::Container { parent: ParentAt::Arg(0), action }
                        }
                        None => LinkPlan::Generic,
                    };
                    self.out.link_plans.insert(t.id, plan);
                    if let TermKind::Var(name) = &op.kind {
                        if !self.scope.iter().any(|n| n == name)
                            && !self.module_defs.contains(name)
                        {
                            if let Some(&bi) = self.typed_imports.get(name) {
                                self.out.boundary_calls.insert(t.id, bi);
                            }
                        }
                    }
                }

                self.walk(op)?;
                for a in args {
                    self.walk(a)?;
                }
                Ok(())
            }
            TermKind::RecordRef { expr, field } => {
                let user = t.loc.origin == Origin::User;
                if user || self.check_desugared {
                    if let Some(ty) = self.info.node_types.get(&t.id) {
                        let shape = shape_of(ty);
                        if shape != Shape::AnyShape && !shape.is_unsupported() {
                            self.out.sites.push(CheckSite {
                                kind: SiteKind::ElimResult,
                                loc: t.loc.clone(),
                                shape: shape.clone(),
                            });
                            self.out.results.insert(
                                t.id,
                                ResultCheck {
                                    shape,
                                    hook: Some((
                                        ParentAt::TheExpr,
                                        Action::RecordField(field.clone()),
                                    )),
                                },
                            );
                        }
                    }
                }
                if user {
                    self.out.link_plans.insert(
                        t.id,
                        LinkPlan::Container {
                            parent: ParentAt::TheExpr,
                            action: Action::RecordField(field.clone()),
                        },
                    );
                }
                self.walk(expr)
            }
            TermKind::Cast { expr, ty } => {
                let shape = shape_of(ty);
                self.reject_unsupported(&shape, &t.loc, "cast target")?;
                if shape != Shape::AnyShape {
                    self.out.sites.push(CheckSite {
                        kind: SiteKind::Cast,
                        loc: t.loc.clone(),
                        shape: shape.clone(),
                    });
                    self.out.casts.insert(t.id, shape);
                }
                self.walk(expr)
            }
            TermKind::Inst { expr, .. } => {
                if let Some(ty) = self.info.node_types.get(&t.id) {
                    let shape = shape_of(ty);
                    self.reject_unsupported(&shape, &t.loc, "instantiated type")?;
                    if shape != Shape::AnyShape {
                        self.out.sites.push(CheckSite {
                            kind: SiteKind::Inst,
                            loc: t.loc.clone(),
                            shape: shape.clone(),
                        });
                        self.out.insts.insert(t.id, shape);
                    }
                }
                self.walk(expr)
            }
            TermKind::If { cond, then_, else_ } => {
                self.walk(cond)?;
                self.walk(then_)?;
                self.walk(else_)
            }
            TermKind::Let { bindings, body } => {
                for (_, _, e) in bindings {
                    self.walk(e)?;
                }
                let depth = self.scope.len();
                self.scope.extend(bindings.iter().map(|(n, _, _)| n.clone()));
                let r = self.walk(body);
                self.scope.truncate(depth);
                r
            }
            TermKind::Letrec { name, func, body } => {
                let depth = self.scope.len();
                self.scope.push(name.clone());
                let r = self.walk(func).and_then(|_| self.walk(body));
                self.scope.truncate(depth);
                r
            }
            TermKind::ListCtor(items) => {
                for i in items {
                    self.walk(i)?;
                }
                Ok(())
            }
            TermKind::VectorCtor { items, .. } => {
                for i in items {
                    self.walk(i)?;
                }
                Ok(())
            }
            TermKind::HashCtor(pairs) => {
                for (k, v) in pairs {
                    self.walk(k)?;
                    self.walk(v)?;
                }
                Ok(())
            }
            TermKind::RecordCtor { fields, .. } => {
                for (_, e) in fields {
                    self.walk(e)?;
                }
                Ok(())
            }
            TermKind::ForSum { .. } | TermKind::ForSkip { .. } => {
                unreachable!("instrumentation runs on desugared programs")
            }
            _ => Ok(()),
        }
    }
}

/// Build the check tables for one configuration. `check_desugared` extends
/// the elimination-result rule to loop code introduced by desugaring.
pub fn instrument(
    p: &Program,
    info: &TypeInfo,
    check_desugared: bool,
) -> Result<Instrumentation, UnsupportedCheck> {
    let mut out = Instrumentation::default();
    for m in &p.modules {
        if !info.typed_modules.contains(&m.name) {
            continue;
        }
        let mut typed_imports = HashMap::new();
        for imp in &m.imports {
            let Some((bi, b)) = info
                .boundary_imports
                .iter()
                .enumerate()
                .find(|(_, b)| {
                    b.importer == m.name
                        && b.binding == imp.binding
                        && b.direction == BoundaryDirection::IntoTyped
                })
            else {
                continue;
            };
            let shape = shape_of(&b.ty);
            if let Shape::Unsupported(reason) = &shape {
                return Err(UnsupportedCheck {
                    loc: imp.loc.clone(),
                    subject: format!("import `{}`", imp.binding),
                    reason: reason.clone(),
                });
            }
            out.sites.push(CheckSite {
                kind: SiteKind::BoundaryImport,
                loc: imp.loc.clone(),
                shape: shape.clone(),
            });
            out.boundaries.push(BoundaryCheck {
                importer: m.name.clone(),
                binding: imp.binding.clone(),
                shape,
                loc: imp.loc.clone(),
                boundary_index: bi,
            });
            typed_imports.insert(imp.binding.clone(), bi);
        }

        let mut w = Walker {
            info,
            check_desugared,
            typed_imports,
            module_defs: m.defs.iter().map(|d| d.name.clone()).collect(),
            scope: Vec::new(),
            out,
        };
        for d in &m.defs {
            w.walk(&d.expr)?;
        }
        out = w.out;
    }
    Ok(out)
}
