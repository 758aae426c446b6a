//! AST node definitions shared by every later pass.

use std::sync::Arc;

use crate::types::Type;

/// Where a node came from. Checks are never attached to `Desugared` nodes,
/// so code injected by loop expansion cannot raise spurious shape errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Origin {
    User,
    Desugared,
}

/// Module name + character span + origin. Spans are char offsets, not bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SourceLoc {
    pub module: Arc<str>,
    pub start: usize,
    pub end: usize,
    pub origin: Origin,
}

impl SourceLoc {
    pub fn new(module: impl Into<Arc<str>>, start: usize, end: usize) -> Self {
        SourceLoc { module: module.into(), start, end, origin: Origin::User }
    }

    pub fn desugared(&self) -> Self {
        SourceLoc { origin: Origin::Desugared, ..self.clone() }
    }

    /// `module:start-end` rendering used in check dumps and errors.
    pub fn render(&self) -> String {
        format!("{}:{}-{}", self.module, self.start, self.end)
    }
}

impl std::fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Identity of an AST node, unique within one `Program`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

/// Typedness discipline of a module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lang {
    Typed,
    Untyped,
    /// Typedness supplied per run by the active lattice configuration.
    Configurable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub ty: Option<Type>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaClause {
    pub params: Vec<Param>,
    pub result: Option<Type>,
    pub body: Arc<Term>,
}

/// Inline annotations on a surface loop: result type and element type.
/// Required in typed modules (desugaring runs before typechecking, and the
/// language has no inference), optional in untyped ones.
#[derive(Debug, Clone, PartialEq)]
pub struct ForAnn {
    pub result: Type,
    pub elem: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TermKind {
    IntLit(i64),
    RealLit(f64),
    BoolLit(bool),
    StrLit(String),
    Var(String),
    /// One clause is a plain lambda; several clauses form a case-lambda
    /// dispatching on argument count.
    Lambda { clauses: Vec<LambdaClause> },
    App { op: Arc<Term>, args: Vec<Arc<Term>> },
    If { cond: Arc<Term>, then_: Arc<Term>, else_: Arc<Term> },
    Let { bindings: Vec<(String, Option<Type>, Arc<Term>)>, body: Arc<Term> },
    /// Single-binding local recursion; the desugar target for surface loops.
    Letrec { name: String, func: Arc<Term>, body: Arc<Term> },
    ListCtor(Vec<Arc<Term>>),
    /// `mutable: false` is the immutable fixed-length constructor `(vector ...)`;
    /// `mutable: true` is `(mutable-vector ...)`.
    VectorCtor { items: Vec<Arc<Term>>, mutable: bool },
    HashCtor(Vec<(Arc<Term>, Arc<Term>)>),
    RecordCtor { tag: String, fields: Vec<(String, Arc<Term>)> },
    RecordRef { expr: Arc<Term>, field: String },
    Cast { expr: Arc<Term>, ty: Type },
    Inst { expr: Arc<Term>, ty: Type },
    /// Surface only: sum of `body` over the elements of `source`.
    ForSum { ann: Option<ForAnn>, var: String, source: Arc<Term>, body: Arc<Term> },
    /// Surface only: like `ForSum` but elements failing the sentinel test are
    /// skipped without evaluating `body`.
    ForSkip { ann: Option<ForAnn>, var: String, source: Arc<Term>, body: Arc<Term> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub id: NodeId,
    pub loc: SourceLoc,
    pub kind: TermKind,
}

impl Term {
    /// True when no surface-only loop form remains anywhere below.
    pub fn is_kernel(&self) -> bool {
        let mut kernel = true;
        self.walk(&mut |t| {
            if matches!(t.kind, TermKind::ForSum { .. } | TermKind::ForSkip { .. }) {
                kernel = false;
            }
        });
        kernel
    }

    /// Pre-order traversal over this term and all subterms.
    pub fn walk(&self, f: &mut impl FnMut(&Term)) {
        f(self);
        match &self.kind {
            TermKind::IntLit(_)
            | TermKind::RealLit(_)
            | TermKind::BoolLit(_)
            | TermKind::StrLit(_)
            | TermKind::Var(_) => {}
            TermKind::Lambda { clauses } => {
                for c in clauses {
                    c.body.walk(f);
                }
            }
            TermKind::App { op, args } => {
                op.walk(f);
                for a in args {
                    a.walk(f);
                }
            }
            TermKind::If { cond, then_, else_ } => {
                cond.walk(f);
                then_.walk(f);
                else_.walk(f);
            }
            TermKind::Let { bindings, body } => {
                for (_, _, e) in bindings {
                    e.walk(f);
                }
                body.walk(f);
            }
            TermKind::Letrec { func, body, .. } => {
                func.walk(f);
                body.walk(f);
            }
            TermKind::ListCtor(items) => {
                for i in items {
                    i.walk(f);
                }
            }
            TermKind::VectorCtor { items, .. } => {
                for i in items {
                    i.walk(f);
                }
            }
            TermKind::HashCtor(pairs) => {
                for (k, v) in pairs {
                    k.walk(f);
                    v.walk(f);
                }
            }
            TermKind::RecordCtor { fields, .. } => {
                for (_, e) in fields {
                    e.walk(f);
                }
            }
            TermKind::RecordRef { expr, .. } => expr.walk(f),
            TermKind::Cast { expr, .. } | TermKind::Inst { expr, .. } => expr.walk(f),
            TermKind::ForSum { source, body, .. } | TermKind::ForSkip { source, body, .. } => {
                source.walk(f);
                body.walk(f);
            }
        }
    }

    /// Structural equality ignoring node ids and source locations.
    pub fn structurally_eq(&self, other: &Term) -> bool {
        use TermKind::*;
        match (&self.kind, &other.kind) {
            (IntLit(a), IntLit(b)) => a == b,
            (RealLit(a), RealLit(b)) => a == b,
            (BoolLit(a), BoolLit(b)) => a == b,
            (StrLit(a), StrLit(b)) => a == b,
            (Var(a), Var(b)) => a == b,
            (Lambda { clauses: a }, Lambda { clauses: b }) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| {
                        x.params == y.params
                            && x.result == y.result
                            && x.body.structurally_eq(&y.body)
                    })
            }
            (App { op: o1, args: a1 }, App { op: o2, args: a2 }) => {
                o1.structurally_eq(o2)
                    && a1.len() == a2.len()
                    && a1.iter().zip(a2).all(|(x, y)| x.structurally_eq(y))
            }
            (
                If { cond: c1, then_: t1, else_: e1 },
                If { cond: c2, then_: t2, else_: e2 },
            ) => c1.structurally_eq(c2) && t1.structurally_eq(t2) && e1.structurally_eq(e2),
            (Let { bindings: b1, body: bo1 }, Let { bindings: b2, body: bo2 }) => {
                b1.len() == b2.len()
                    && b1
                        .iter()
                        .zip(b2)
                        .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && x.2.structurally_eq(&y.2))
                    && bo1.structurally_eq(bo2)
            }
            (
                Letrec { name: n1, func: f1, body: b1 },
                Letrec { name: n2, func: f2, body: b2 },
            ) => n1 == n2 && f1.structurally_eq(f2) && b1.structurally_eq(b2),
            (ListCtor(a), ListCtor(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.structurally_eq(y))
            }
            (
                VectorCtor { items: a, mutable: m1 },
                VectorCtor { items: b, mutable: m2 },
            ) => {
                m1 == m2 && a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.structurally_eq(y))
            }
            (HashCtor(a), HashCtor(b)) => {
                a.len() == b.len()
                    && a.iter()
                        .zip(b)
                        .all(|(x, y)| x.0.structurally_eq(&y.0) && x.1.structurally_eq(&y.1))
            }
            (
                RecordCtor { tag: t1, fields: f1 },
                RecordCtor { tag: t2, fields: f2 },
            ) => {
                t1 == t2
                    && f1.len() == f2.len()
                    && f1.iter().zip(f2).all(|(x, y)| x.0 == y.0 && x.1.structurally_eq(&y.1))
            }
            (
                RecordRef { expr: e1, field: n1 },
                RecordRef { expr: e2, field: n2 },
            ) => n1 == n2 && e1.structurally_eq(e2),
            (Cast { expr: e1, ty: t1 }, Cast { expr: e2, ty: t2 }) => {
                t1 == t2 && e1.structurally_eq(e2)
            }
            (Inst { expr: e1, ty: t1 }, Inst { expr: e2, ty: t2 }) => {
                t1 == t2 && e1.structurally_eq(e2)
            }
            (
                ForSum { ann: a1, var: v1, source: s1, body: b1 },
                ForSum { ann: a2, var: v2, source: s2, body: b2 },
            )
            | (
                ForSkip { ann: a1, var: v1, source: s1, body: b1 },
                ForSkip { ann: a2, var: v2, source: s2, body: b2 },
            ) => a1 == a2 && v1 == v2 && s1.structurally_eq(s2) && b1.structurally_eq(b2),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Definition {
    pub name: String,
    /// Annotation; required in typed modules.
    pub ty: Option<Type>,
    pub expr: Arc<Term>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Import {
    pub source_module: String,
    pub binding: String,
    /// Used only when the importer is typed and the exporter untyped under
    /// the active configuration; ignored when the exporter is typed.
    pub declared_type: Option<Type>,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModuleDecl {
    pub name: String,
    pub lang: Lang,
    pub imports: Vec<Import>,
    pub defs: Vec<Definition>,
    pub loc: SourceLoc,
}

impl ModuleDecl {
    pub fn is_kernel(&self) -> bool {
        self.defs.iter().all(|d| d.expr.is_kernel())
    }

    pub fn structurally_eq(&self, other: &ModuleDecl) -> bool {
        self.name == other.name
            && self.lang == other.lang
            && self.imports.len() == other.imports.len()
            && self.imports.iter().zip(&other.imports).all(|(a, b)| {
                a.source_module == b.source_module
                    && a.binding == b.binding
                    && a.declared_type == b.declared_type
            })
            && self.defs.len() == other.defs.len()
            && self.defs.iter().zip(&other.defs).all(|(a, b)| {
                a.name == b.name && a.ty == b.ty && a.expr.structurally_eq(&b.expr)
            })
    }
}

/// A parsed program: modules in declaration order plus the next free NodeId
/// (desugaring keeps allocating from here).
#[derive(Debug, Clone)]
pub struct Program {
    pub modules: Vec<ModuleDecl>,
    pub next_id: u32,
}

impl Program {
    pub fn module(&self, name: &str) -> Option<&ModuleDecl> {
        self.modules.iter().find(|m| m.name == name)
    }

    /// Modules whose typedness the lattice controls, in declaration order.
    pub fn configurable_modules(&self) -> Vec<&ModuleDecl> {
        self.modules.iter().filter(|m| m.lang == Lang::Configurable).collect()
    }

    pub fn structurally_eq(&self, other: &Program) -> bool {
        self.modules.len() == other.modules.len()
            && self.modules.iter().zip(&other.modules).all(|(a, b)| a.structurally_eq(b))
    }

    /// Desugar every module, replacing surface loops with kernel recursion.
    pub fn desugar(&self) -> Program {
        let mut next_id = self.next_id;
        let modules =
            self.modules.iter().map(|m| super::desugar_module(m, &mut next_id)).collect();
        Program { modules, next_id }
    }
}
