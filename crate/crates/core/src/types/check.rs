//! Config-aware typechecker. Runs on desugared (kernel) programs only.
//!
//! Modules marked typed under the active configuration are checked against
//! their annotations — there is no inference, so every definition and every
//! lambda parameter in typed code carries a type. Untyped modules get an
//! unbound-variable scan and nothing else.
//!
//! Import rules, per binding:
//!   exporter typed:   the importer sees the exporter's annotation; a
//!                     declared import type must be a supertype of it and
//!                     then takes precedence as the interface.
//!   exporter untyped: a typed importer must declare a type (that is the
//!                     boundary); an untyped importer just gets the value.

use std::collections::{BTreeSet, HashMap};

use crate::syntax::{
    Import, Lang, ModuleDecl, NodeId, Param, Program, SourceLoc, Term, TermKind,
};
use crate::types::{join, prim_sig, prim_value_type, subtype, PrimOp, PrimSig, Type};

#[derive(Debug, Clone, PartialEq)]
pub struct StaticError {
    pub loc: Option<SourceLoc>,
    pub message: String,
}

impl StaticError {
    fn at(loc: &SourceLoc, message: impl Into<String>) -> Self {
        StaticError { loc: Some(loc.clone()), message: message.into() }
    }

    fn global(message: impl Into<String>) -> Self {
        StaticError { loc: None, message: message.into() }
    }
}

impl std::fmt::Display for StaticError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.loc {
            Some(l) => write!(f, "{}:{}: {}", l.module, l.start, self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

impl std::error::Error for StaticError {}

/// Which way a typed/untyped boundary import points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryDirection {
    /// Typed importer, untyped exporter: the declared type is the contract.
    IntoTyped,
    /// Untyped importer, typed exporter: the annotation is the contract.
    OutOfTyped,
}

/// One import whose two sides disagree about typedness under the active
/// configuration.
#[derive(Debug, Clone)]
pub struct BoundaryImportInfo {
    pub importer: String,
    pub exporter: String,
    pub binding: String,
    /// The type enforced at this boundary.
    pub ty: Type,
    pub direction: BoundaryDirection,
    /// The require form.
    pub import_loc: SourceLoc,
    /// The exporter-side definition.
    pub export_loc: SourceLoc,
}

/// Everything later passes need to know about a checked program.
#[derive(Debug, Clone, Default)]
pub struct TypeInfo {
    /// Static type of every term node in typed modules.
    pub node_types: HashMap<NodeId, Type>,
    /// Application nodes whose operator is a direct, unshadowed primitive
    /// reference (in typed modules).
    pub resolved_prims: HashMap<NodeId, PrimOp>,
    pub boundary_imports: Vec<BoundaryImportInfo>,
    /// (module, definition) -> type, for typed modules.
    pub def_types: HashMap<(String, String), Type>,
    pub main_module: String,
    /// Annotation of `main` when its module is typed.
    pub main_type: Option<Type>,
    /// Module names typed under the active configuration.
    pub typed_modules: BTreeSet<String>,
    /// Modules in evaluation (topological) order.
    pub eval_order: Vec<String>,
}

/// Resolve the set of typed module names: fixed langs stay fixed and
/// configurable modules follow `bits` (declaration order, true = typed).
pub fn resolve_typedness(p: &Program, bits: &[bool]) -> Result<BTreeSet<String>, StaticError> {
    let configurable = p.configurable_modules();
    if bits.len() != configurable.len() {
        return Err(StaticError::global(format!(
            "configuration has {} bits but the program has {} configurable modules",
            bits.len(),
            configurable.len()
        )));
    }
    let mut typed = BTreeSet::new();
    let mut i = 0;
    for m in &p.modules {
        let is_typed = match m.lang {
            Lang::Typed => true,
            Lang::Untyped => false,
            Lang::Configurable => {
                let b = bits[i];
                i += 1;
                b
            }
        };
        if is_typed {
            typed.insert(m.name.clone());
        }
    }
    Ok(typed)
}

// --- module graph -----------------------------------------------------------

fn topo_order(p: &Program) -> Result<Vec<String>, StaticError> {
    // importer depends on exporter; Kahn's algorithm, declaration order
    // breaking ties so evaluation order is reproducible.
    let names: Vec<&str> = p.modules.iter().map(|m| m.name.as_str()).collect();
    let index: HashMap<&str, usize> =
        names.iter().enumerate().map(|(i, n)| (*n, i)).collect();
    let mut indegree = vec![0usize; names.len()];
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (mi, m) in p.modules.iter().enumerate() {
        for imp in &m.imports {
            let ei = *index.get(imp.source_module.as_str()).ok_or_else(|| {
                StaticError::at(&imp.loc, format!("unknown module `{}`", imp.source_module))
            })?;
            let exporter = &p.modules[ei];
            if !exporter.defs.iter().any(|d| d.name == imp.binding) {
                return Err(StaticError::at(
                    &imp.loc,
                    format!("module `{}` does not define `{}`", imp.source_module, imp.binding),
                ));
            }
            indegree[mi] += 1;
            dependents[ei].push(mi);
        }
    }
    let mut ready: Vec<usize> =
        (0..names.len()).filter(|i| indegree[*i] == 0).collect();
    let mut order = Vec::with_capacity(names.len());
    while let Some(&next) = ready.iter().min() {
        ready.retain(|i| *i != next);
        order.push(names[next].to_string());
        for &d in &dependents[next] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.push(d);
            }
        }
    }
    if order.len() != names.len() {
        let stuck = (0..names.len()).find(|i| indegree[*i] > 0).unwrap();
        return Err(StaticError::at(
            &p.modules[stuck].loc,
            format!("import cycle involving module `{}`", names[stuck]),
        ));
    }
    Ok(order)
}

// --- expression checking ----------------------------------------------------

struct Ck<'a> {
    /// Imports and annotated definitions of the current module.
    globals: HashMap<String, Type>,
    locals: Vec<(String, Type)>,
    node_types: &'a mut HashMap<NodeId, Type>,
    resolved_prims: &'a mut HashMap<NodeId, PrimOp>,
}

fn err(loc: &SourceLoc, msg: impl Into<String>) -> StaticError {
    StaticError::at(loc, msg)
}

impl<'a> Ck<'a> {
    fn lookup(&self, name: &str) -> Option<Type> {
        for (n, t) in self.locals.iter().rev() {
            if n == name {
                return Some(t.clone());
            }
        }
        if let Some(t) = self.globals.get(name) {
            return Some(t.clone());
        }
        prim_sig(name).filter(|s| !s.internal).map(|s| prim_value_type(&s))
    }

    /// The primitive `name` resolves to, unless shadowed locally or by a
    /// module-level binding.
    fn unshadowed_prim(&self, name: &str) -> Option<PrimSig> {
        if self.locals.iter().any(|(n, _)| n == name) || self.globals.contains_key(name) {
            return None;
        }
        prim_sig(name).filter(|s| !s.internal)
    }

    fn record(&mut self, t: &Term, ty: Type) -> Type {
        self.node_types.insert(t.id, ty.clone());
        ty
    }

    fn synth(&mut self, t: &Term) -> Result<Type, StaticError> {
        let ty = self.synth_inner(t)?;
        Ok(self.record(t, ty))
    }

    fn synth_inner(&mut self, t: &Term) -> Result<Type, StaticError> {
        match &t.kind {
            TermKind::IntLit(i) => Ok(if *i >= 0 { Type::Nat } else { Type::Int }),
            TermKind::RealLit(_) => Ok(Type::Real),
            TermKind::BoolLit(_) => Ok(Type::Bool),
            TermKind::StrLit(_) => Ok(Type::Str),
            TermKind::Var(x) => self
                .lookup(x)
                .ok_or_else(|| err(&t.loc, format!("unbound variable `{x}`"))),
            TermKind::Lambda { clauses } => {
                let mut branches = Vec::new();
                for c in clauses {
                    let mut params = Vec::new();
                    for p in &c.params {
                        let ty = p.ty.clone().ok_or_else(|| {
                            err(&t.loc, format!("parameter `{}` needs a type", p.name))
                        })?;
                        params.push(ty);
                    }
                    let result = c.result.clone().ok_or_else(|| {
                        err(&t.loc, "lambda needs a result type in typed code")
                    })?;
                    let depth = self.locals.len();
                    for (p, ty) in c.params.iter().zip(&params) {
                        self.locals.push((p.name.clone(), ty.clone()));
                    }
                    let out = self.check(&c.body, &result);
                    self.locals.truncate(depth);
                    out?;
                    branches.push(Type::Fun { params, result: Box::new(result) });
                }
                if branches.len() == 1 {
                    Ok(branches.pop().unwrap())
                } else {
                    Ok(Type::CaseFun { branches })
                }
            }
            TermKind::App { op, args } => self.synth_app(t, op, args),
            TermKind::If { cond, then_, else_ } => {
                self.check(cond, &Type::Bool)?;
                let a = self.synth(then_)?;
                let b = self.synth(else_)?;
                Ok(join(&a, &b))
            }
            TermKind::Let { bindings, body } => {
                let depth = self.locals.len();
                let mut bound = Vec::new();
                for (name, ann, e) in bindings {
                    // parallel let: all right-hand sides see the outer scope
                    let ty = match ann {
                        Some(a) => {
                            self.check(e, a)?;
                            a.clone()
                        }
                        None => self.synth(e)?,
                    };
                    bound.push((name.clone(), ty));
                }
                self.locals.extend(bound);
                let out = self.synth(body);
                self.locals.truncate(depth);
                out
            }
            TermKind::Letrec { name, func, body } => {
                let fun_ty = letrec_annotation(func)
                    .ok_or_else(|| err(&t.loc, "letrec function needs full annotations"))?;
                let depth = self.locals.len();
                self.locals.push((name.clone(), fun_ty));
                let r = self.synth(func).and_then(|_| self.synth(body));
                self.locals.truncate(depth);
                r
            }
            TermKind::ListCtor(items) => {
                if items.is_empty() {
                    return Err(err(&t.loc, "empty list needs a type from context"));
                }
                let mut elem = self.synth(&items[0])?;
                for i in &items[1..] {
                    let ty = self.synth(i)?;
                    elem = join(&elem, &ty);
                }
                Ok(Type::list(elem))
            }
            TermKind::VectorCtor { items, mutable } => {
                if *mutable {
                    if items.is_empty() {
                        return Err(err(&t.loc, "empty vector needs a type from context"));
                    }
                    let mut elem = self.synth(&items[0])?;
                    for i in &items[1..] {
                        let ty = self.synth(i)?;
                        elem = join(&elem, &ty);
                    }
                    Ok(Type::VecOf(Box::new(elem)))
                } else {
                    let mut slots = Vec::new();
                    for i in items {
                        slots.push(self.synth(i)?);
                    }
                    Ok(Type::VecFixed(slots))
                }
            }
            TermKind::HashCtor(pairs) => {
                if pairs.is_empty() {
                    return Err(err(&t.loc, "empty hash needs a type from context"));
                }
                let mut key = self.synth(&pairs[0].0)?;
                let mut val = self.synth(&pairs[0].1)?;
                for (k, v) in &pairs[1..] {
                    let kt = self.synth(k)?;
                    let vt = self.synth(v)?;
                    key = join(&key, &kt);
                    val = join(&val, &vt);
                }
                Ok(Type::Hash { key: Box::new(key), val: Box::new(val) })
            }
            TermKind::RecordCtor { tag, fields } => {
                let mut fs = Vec::new();
                for (n, e) in fields {
                    fs.push((n.clone(), self.synth(e)?));
                }
                Ok(Type::Record { tag: tag.clone(), fields: fs })
            }
            TermKind::RecordRef { expr, field } => {
                let rt = self.synth(expr)?;
                match rt {
                    Type::Record { ref fields, .. } => fields
                        .iter()
                        .find(|(n, _)| n == field)
                        .map(|(_, ty)| ty.clone())
                        .ok_or_else(|| {
                            err(&t.loc, format!("record has no field `{field}`"))
                        }),
                    other => Err(err(
                        &t.loc,
                        format!("record-ref needs a record, got {}", other.render()),
                    )),
                }
            }
            TermKind::Cast { expr, ty } => {
                self.synth(expr)?;
                Ok(ty.clone())
            }
            TermKind::Inst { expr, ty } => {
                let et = self.synth(expr)?;
                match et {
                    Type::Forall { var, body } => Ok(body.substitute(&var, ty)),
                    other => Err(err(
                        &t.loc,
                        format!("inst needs a polymorphic value, got {}", other.render()),
                    )),
                }
            }
            TermKind::ForSum { .. } | TermKind::ForSkip { .. } => {
                Err(err(&t.loc, "internal: loop form survived desugaring"))
            }
        }
    }

    fn check(&mut self, t: &Term, expected: &Type) -> Result<(), StaticError> {
        match (&t.kind, expected) {
            (TermKind::ListCtor(items), Type::List(elem)) => {
                for i in items {
                    self.check(i, elem)?;
                }
                self.record(t, expected.clone());
                Ok(())
            }
            (TermKind::VectorCtor
                { items, mutable: true }, Type::VecOf(elem)) => {
                for i in items {
                    self.check(i, elem)?;
                }
                self.record(t, expected.clone());
                Ok(())
            }
            (TermKind::VectorCtor { items, mutable: false }, Type::VecFixed(slots)) => {
                if items.len() != slots.len() {
                    return Err(err(
                        &t.loc,
                        format!("expected {} vector slots, got {}", slots.len(), items.len()),
                    ));
                }
                for (i, s) in items.iter().zip(slots) {
                    self.check(i, s)?;
                }
                self.record(t, expected.clone());
                Ok(())
            }
            (TermKind::HashCtor(pairs), Type::Hash { key, val }) => {
                for (k, v) in pairs {
                    self.check(k, key)?;
                    self.check(v, val)?;
                }
                self.record(t, expected.clone());
                Ok(())
            }
            (TermKind::If { cond, then_, else_ }, _) => {
                self.check(cond, &Type::Bool)?;
                self.check(then_, expected)?;
                self.check(else_, expected)?;
                self.record(t, expected.clone());
                Ok(())
            }
            (TermKind::Let { bindings, body }, _) => {
                let depth = self.locals.len();
                let mut bound = Vec::new();
                for (name, ann, e) in bindings {
                    let ty = match ann {
                        Some(a) => {
                            self.check(e, a)?;
                            a.clone()
                        }
                        None => self.synth(e)?,
                    };
                    bound.push((name.clone(), ty));
                }
                self.locals.extend(bound);
                let out = self.check(body, expected);
                self.locals.truncate(depth);
                out?;
                self.record(t, expected.clone());
                Ok(())
            }
            _ => {
                let actual = self.synth(t)?;
                if subtype(&actual, expected) {
                    Ok(())
                } else {
                    Err(err(
                        &t.loc,
                        format!(
                            "expected {}, found {}",
                            expected.render(),
                            actual.render()
                        ),
                    ))
                }
            }
        }
    }

    fn synth_app(
        &mut self,
        t: &Term,
        op: &Term,
        args: &[std::sync::Arc<Term>],
    ) -> Result<Type, StaticError> {
        if let TermKind::Var(name) = &op.kind {
            if let Some(sig) = self.unshadowed_prim(name) {
                self.record(op, prim_value_type(&sig));
                let ty = self.synth_prim_app(t, &sig, args)?;
                self.resolved_prims.insert(t.id, sig.op);
                return Ok(ty);
            }
        }
        let fty = self.synth(op)?;
        match fty {
            Type::Fun { params, result } => {
                if params.len() != args.len() {
                    return Err(err(
                        &t.loc,
                        format!("expected {} arguments, got {}", params.len(), args.len()),
                    ));
                }
                for (a, p) in args.iter().zip(&params) {
                    self.check(a, p)?;
                }
                Ok(*result)
            }
            Type::CaseFun { branches } => {
                let branch = branches
                    .iter()
                    .find(|b| matches!(b, Type::Fun { params, .. } if params.len() == args.len()))
                    .cloned()
                    .ok_or_else(|| {
                        err(&t.loc, format!("no overload accepts {} arguments", args.len()))
                    })?;
                let Type::Fun { params, result } = branch else { unreachable!() };
                for (a, p) in args.iter().zip(&params) {
                    self.check(a, p)?;
                }
                Ok(*result)
            }
            Type::Forall { .. } => Err(err(
                &t.loc,
                "polymorphic value must be instantiated with inst before application",
            )),
            other => Err(err(&t.loc, format!("cannot apply {}", other.render()))),
        }
    }

    fn expect_arity(
        &self,
        t: &Term,
        sig: &PrimSig,
        args: &[std::sync::Arc<Term>],
    ) -> Result<(), StaticError> {
        if sig.params.len() != args.len() {
            return Err(err(
                &t.loc,
                format!("{} expects {} arguments, got {}", sig.name, sig.params.len(), args.len()),
            ));
        }
        Ok(())
    }

    /// Hand-written rules per primitive: the numeric tower result rules and
    /// the container polymorphism (with fixed-vector special cases).
    fn synth_prim_app(
        &mut self,
        t: &Term,
        sig: &PrimSig,
        args: &[std::sync::Arc<Term>],
    ) -> Result<Type, StaticError> {
        use PrimOp::*;
        self.expect_arity(t, sig, args)?;
        match sig.op {
            Add | Sub | Mul => {
                let a = self.synth(&args[0])?;
                let b = self.synth(&args[1])?;
                for (ty, arg) in [(&a, &args[0]), (&b, &args[1])] {
                    if !subtype(ty, &Type::Real) {
                        return Err(err(
                            &arg.loc,
                            format!("expected Real, found {}", ty.render()),
                        ));
                    }
                }
                let nat = subtype(&a, &Type::Nat) && subtype(&b, &Type::Nat);
                let int = subtype(&a, &Type::Int) && subtype(&b, &Type::Int);
                Ok(if nat && sig.op != Sub {
                    Type::Nat
                } else if int {
                    Type::Int
                } else {
                    Type::Real
                })
            }
            Quotient | Modulo => {
                self.check(&args[0], &Type::Int)?;
                self.check(&args[1], &Type::Int)?;
                Ok(Type::Int)
            }
            Lt | Le | NumEq => {
                self.check(&args[0], &Type::Real)?;
                self.check(&args[1], &Type::Real)?;
                Ok(Type::Bool)
            }
            Not => {
                self.check(&args[0], &Type::Bool)?;
                Ok(Type::Bool)
            }
            EqualP => {
                self.synth(&args[0])?;
                self.synth(&args[1])?;
                Ok(Type::Bool)
            }
            Print | SentinelP | EmptyP => {
                self.synth(&args[0])?;
                Ok(Type::Bool)
            }
            Cons => {
                let head = self.synth(&args[0])?;
                let tail = self.synth(&args[1])?;
                match tail {
                    Type::List(e) => Ok(Type::list(join(&head, &e))),
                    other => Err(err(
                        &args[1].loc,
                        format!("cons needs a list tail, got {}", other.render()),
                    )),
                }
            }
            First | Rest | Length | ListRef => {
                let lt = self.synth(&args[0])?;
                let Type::List(elem) = lt else {
                    return Err(err(
                        &args[0].loc,
                        format!("{} needs a list, got {}", sig.name, lt.render()),
                    ));
                };
                match sig.op {
                    First => Ok(*elem),
                    Rest => Ok(Type::List(elem)),
                    Length => Ok(Type::Nat),
                    ListRef => {
                        self.check(&args[1], &Type::Int)?;
                        Ok(*elem)
                    }
                    _ => unreachable!(),
                }
            }
            Map => {
                let f = self.synth(&args[0])?;
                let Type::Fun { params, result } = f else {
                    return Err(err(&args[0].loc, "map needs a one-argument function"));
                };
                if params.len() != 1 {
                    return Err(err(&args[0].loc, "map needs a one-argument function"));
                }
                let lt = self.synth(&args[1])?;
                let Type::List(elem) = lt else {
                    return Err(err(
                        &args[1].loc,
                        format!("map needs a list, got {}", lt.render()),
                    ));
                };
                if !subtype(&elem, &params[0]) {
                    return Err(err(
                        &args[1].loc,
                        format!("expected (Listof {}), found (Listof {})",
                            params[0].render(), elem.render()),
                    ));
                }
                Ok(Type::list(*result))
            }
            VectorRef | VectorRefUnchecked => {
                let vt = self.synth(&args[0])?;
                match vt {
                    Type::VecOf(elem) => {
                        self.check(&args[1], &Type::Int)?;
                        Ok(*elem)
                    }
                    Type::VecFixed(slots) => {
                        if let TermKind::IntLit(i) = args[1].kind {
                            if i < 0 || i as usize >= slots.len() {
                                return Err(err(
                                    &args[1].loc,
                                    format!(
                                        "index {i} out of range for a {}-slot vector",
                                        slots.len()
                                    ),
                                ));
                            }
                            self.synth(&args[1])?;
                            Ok(slots[i as usize].clone())
                        } else {
                            self.check(&args[1], &Type::Int)?;
                            let mut ty = slots
                                .first()
                                .cloned()
                                .ok_or_else(|| err(&args[0].loc, "empty vector has no elements"))?;
                            for s in &slots[1..] {
                                ty = join(&ty, s);
                            }
                            Ok(ty)
                        }
                    }
                    other => Err(err(
                        &args[0].loc,
                        format!("vector-ref needs a vector, got {}", other.render()),
                    )),
                }
            }
            VectorSet => {
                let vt = self.synth(&args[0])?;
                match vt {
                    Type::VecOf(elem) => {
                        self.check(&args[1], &Type::Int)?;
                        self.check(&args[2], &elem)?;
                        Ok(Type::Bool)
                    }
                    Type::VecFixed(_) => Err(err(
                        &args[0].loc,
                        "fixed vectors are immutable; vector-set! needs a mutable vector",
                    )),
                    other => Err(err(
                        &args[0].loc,
                        format!("vector-set! needs a mutable vector, got {}", other.render()),
                    )),
                }
            }
            VectorLength => {
                let vt = self.synth(&args[0])?;
                match vt {
                    Type::VecOf(_) | Type::VecFixed(_) => Ok(Type::Nat),
                    other => Err(err(
                        &args[0].loc,
                        format!("vector-length needs a vector, got {}", other.render()),
                    )),
                }
            }
            HashRef => {
                let ht = self.synth(&args[0])?;
                let Type::Hash { key, val } = ht else {
                    return Err(err(
                        &args[0].loc,
                        format!("hash-ref needs a hash, got {}", ht.render()),
                    ));
                };
                self.check(&args[1], &key)?;
                Ok(*val)
            }
            HashSet => {
                let ht = self.synth(&args[0])?;
                let Type::Hash { key, val } = ht else {
                    return Err(err(
                        &args[0].loc,
                        format!("hash-set! needs a hash, got {}", ht.render()),
                    ));
                };
                self.check(&args[1], &key)?;
                self.check(&args[2], &val)?;
                Ok(Type::Bool)
            }
            MakeByteSource => {
                self.check(&args[0], &Type::Int)?;
                Ok(Type::list(Type::Int))
            }
            StringAppend => {
                self.check(&args[0], &Type::Str)?;
                self.check(&args[1], &Type::Str)?;
                Ok(Type::Str)
            }
        }
    }
}

/// The arrow type a fully annotated single-clause lambda describes.
fn letrec_annotation(func: &Term) -> Option<Type> {
    let TermKind::Lambda { clauses } = &func.kind else {
        return None;
    };
    let [clause] = clauses.as_slice() else {
        return None;
    };
    let params: Option<Vec<Type>> = clause.params.iter().map(|p| p.ty.clone()).collect();
    Some(Type::Fun { params: params?, result: Box::new(clause.result.clone()?) })
}

// --- untyped scan ------------------------------------------------------------

fn scan_term(
    t: &Term,
    scope: &mut Vec<String>,
    globals: &BTreeSet<String>,
) -> Result<(), StaticError> {
    match &t.kind {
        TermKind::Var(x) => {
            if scope.iter().any(|n| n == x)
                || globals.contains(x)
                || prim_sig(x).is_some_and(|s| !s.internal)
            {
                Ok(())
            } else {
                Err(err(&t.loc, format!("unbound variable `{x}`")))
            }
        }
        TermKind::Lambda { clauses } => {
            for c in clauses {
                let depth = scope.len();
                scope.extend(c.params.iter().map(|p: &Param| p.name.clone()));
                let r = scan_term(&c.body, scope, globals);
                scope.truncate(depth);
                r?;
            }
            Ok(())
        }
        TermKind::Let { bindings, body } => {
            for (_, _, e) in bindings {
                scan_term(e, scope, globals)?;
            }
            let depth = scope.len();
            scope.extend(bindings.iter().map(|(n, _, _)| n.clone()));
            let r = scan_term(body, scope, globals);
            scope.truncate(depth);
            r
        }
        TermKind::Letrec { name, func, body } => {
            let depth = scope.len();
            scope.push(name.clone());
            let r = scan_term(func, scope, globals).and_then(|_| scan_term(body, scope, globals));
            scope.truncate(depth);
            r
        }
        _ => {
            let mut out = Ok(());
            let mut kids: Vec<&Term> = Vec::new();
            match &t.kind {
                TermKind::App { op, args } => {
                    kids.push(op);
                    kids.extend(args.iter().map(|a| a.as_ref()));
                }
                TermKind::If { cond, then_, else_ } => {
                    kids.extend([cond.as_ref(), then_.as_ref(), else_.as_ref()]);
                }
                TermKind::ListCtor(items) | TermKind::VectorCtor { items, .. } => {
                    kids.extend(items.iter().map(|i| i.as_ref()));
                }
                TermKind::HashCtor(pairs) => {
                    for (k, v) in pairs {
                        kids.push(k);
                        kids.push(v);
                    }
                }
                TermKind::RecordCtor { fields, .. } => {
                    kids.extend(fields.iter().map(|(_, e)| e.as_ref()));
                }
                TermKind::RecordRef { expr, .. }
                | TermKind::Cast { expr, .. }
                | TermKind::Inst { expr, .. } => kids.push(expr),
                TermKind::ForSum { source, body, .. }
                | TermKind::ForSkip { source, body, .. } => {
                    kids.push(source);
                    kids.push(body);
                }
                _ => {}
            }
            for k in kids {
                if out.is_ok() {
                    out = scan_term(k, scope, globals);
                }
            }
            out
        }
    }
}

// --- whole program -----------------------------------------------------------

/// Typecheck a desugared program under one typedness assignment.
pub fn typecheck(p: &Program, typed: &BTreeSet<String>) -> Result<TypeInfo, StaticError> {
    let order = topo_order(p)?;

    let mains: Vec<&ModuleDecl> =
        p.modules.iter().filter(|m| m.defs.iter().any(|d| d.name == "main")).collect();
    let main_module = match mains.as_slice() {
        [m] => m.name.clone(),
        [] => return Err(StaticError::global("no module defines `main`")),
        [_, second, ..] => {
            return Err(StaticError::at(&second.loc, "more than one module defines `main`"))
        }
    };

    let mut info = TypeInfo {
        typed_modules: typed.clone(),
        eval_order: order.clone(),
        main_module,
        ..TypeInfo::default()
    };

    for name in &order {
        let m = p.module(name).expect("topo order names come from the program");
        let m_typed = typed.contains(name);
        check_module(p, m, m_typed, typed, &mut info)?;
    }

    if typed.contains(&info.main_module) {
        info.main_type =
            info.def_types.get(&(info.main_module.clone(), "main".to_string())).cloned();
    }
    Ok(info)
}

fn export_info(
    p: &Program,
    imp: &Import,
    typed: &BTreeSet<String>,
    info: &TypeInfo,
) -> (bool, Option<Type>, SourceLoc) {
    let exporter = p.module(&imp.source_module).expect("validated by topo_order");
    let exp_typed = typed.contains(&exporter.name);
    let def = exporter
        .defs
        .iter()
        .find(|d| d.name == imp.binding)
        .expect("validated by topo_order");
    let ann = if exp_typed {
        info.def_types.get(&(exporter.name.clone(), imp.binding.clone())).cloned()
    } else {
        None
    };
    (exp_typed, ann, def.loc.clone())
}

fn check_module(
    p: &Program,
    m: &ModuleDecl,
    m_typed: bool,
    typed: &BTreeSet<String>,
    info: &mut TypeInfo,
) -> Result<(), StaticError> {
    // Imports first: they define the module's global scope and the boundary
    // list, whatever the module's own typedness.
    let mut globals: HashMap<String, Type> = HashMap::new();
    for imp in &m.imports {
        let (exp_typed, ann, export_loc) = export_info(p, imp, typed, info);
        match (m_typed, exp_typed) {
            (true, true) => {
                let actual = ann.expect("typed exporters annotate every definition");
                let seen = match &imp.declared_type {
                    Some(declared) => {
                        if !subtype(&actual, declared) {
                            return Err(err(
                                &imp.loc,
                                format!(
                                    "declared type {} does not cover the export's type {}",
                                    declared.render(),
                                    actual.render()
                                ),
                            ));
                        }
                        declared.clone()
                    }
                    None => actual,
                };
                globals.insert(imp.binding.clone(), seen);
            }
            (true, false) => {
                let declared = imp.declared_type.clone().ok_or_else(|| {
                    err(
                        &imp.loc,
                        format!(
                            "import `{}` from untyped module `{}` needs a declared type",
                            imp.binding, imp.source_module
                        ),
                    )
                })?;
                info.boundary_imports.push(BoundaryImportInfo {
                    importer: m.name.clone(),
                    exporter: imp.source_module.clone(),
                    binding: imp.binding.clone(),
                    ty: declared.clone(),
                    direction: BoundaryDirection::IntoTyped,
                    import_loc: imp.loc.clone(),
                    export_loc,
                });
                globals.insert(imp.binding.clone(), declared);
            }
            (false, true) => {
                let actual = ann.expect("typed exporters annotate every definition");
                info.boundary_imports.push(BoundaryImportInfo {
                    importer: m.name.clone(),
                    exporter: imp.source_module.clone(),
                    binding: imp.binding.clone(),
                    ty: actual,
                    direction: BoundaryDirection::OutOfTyped,
                    import_loc: imp.loc.clone(),
                    export_loc,
                });
            }
            (false, false) => {}
        }
    }

    if !m_typed {
        let mut names: BTreeSet<String> =
            m.imports.iter().map(|i| i.binding.clone()).collect();
        names.extend(m.defs.iter().map(|d| d.name.clone()));
        for d in &m.defs {
            scan_term(&d.expr, &mut Vec::new(), &names)?;
        }
        return Ok(());
    }

    // Typed module: bind every annotated definition up front so functions
    // can refer to themselves and to later definitions.
    for d in &m.defs {
        let ann = d.ty.clone().ok_or_else(|| {
            err(&d.loc, format!("typed definition `{}` needs a type annotation", d.name))
        })?;
        globals.insert(d.name.clone(), ann.clone());
        info.def_types.insert((m.name.clone(), d.name.clone()), ann);
    }

    for d in &m.defs {
        let ann = info.def_types[&(m.name.clone(), d.name.clone())].clone();
        let mut ck = Ck {
            globals: globals.clone(),
            locals: Vec::new(),
            node_types: &mut info.node_types,
            resolved_prims: &mut info.resolved_prims,
        };
        ck.check(&d.expr, &ann)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::syntax::parse_program;

    fn check_src(src: &str) -> Result<TypeInfo, StaticError> {
        let p = parse_program(src).unwrap().desugar();
        let typed = resolve_typedness(&p, &[]).unwrap();
        typecheck(&p, &typed)
    }

    fn check_bits(src: &str, bits: &[bool]) -> Result<TypeInfo, StaticError> {
        let p = parse_program(src).unwrap().desugar();
        let typed = resolve_typedness(&p, bits).unwrap();
        typecheck(&p, &typed)
    }

    #[test]
    fn fixtures_typecheck_under_their_declared_langs() {
        for src in fixtures::ALL {
            let p = parse_program(src).unwrap().desugar();
            let n = p.configurable_modules().len();
            for bits in [vec![false; n], vec![true; n]] {
                let typed = resolve_typedness(&p, &bits).unwrap();
                typecheck(&p, &typed).unwrap_or_else(|e| panic!("{e}\nin fixture:\n{src}"));
            }
        }
    }

    #[test]
    fn lattice_fixtures_typecheck_under_every_configuration() {
        for (_, src) in fixtures::LATTICE {
            let p = parse_program(src).unwrap().desugar();
            let n = p.configurable_modules().len();
            for mask in 0..(1u32 << n) {
                let bits: Vec<bool> = (0..n).map(|i| mask & (1 << i) != 0).collect();
                let typed = resolve_typedness(&p, &bits).unwrap();
                typecheck(&p, &typed).unwrap_or_else(|e| panic!("config {mask:b}: {e}"));
            }
        }
    }

    #[test]
    fn median_boundaries_point_both_ways() {
        let p = parse_program(fixtures::MEDIAN).unwrap().desugar();
        let typed = resolve_typedness(&p, &[]).unwrap();
        let info = typecheck(&p, &typed).unwrap();
        assert_eq!(info.main_module, "client");
        assert_eq!(info.main_type, None);
        let dirs: Vec<(&str, &str, BoundaryDirection)> = info
            .boundary_imports
            .iter()
            .map(|b| (b.importer.as_str(), b.binding.as_str(), b.direction))
            .collect();
        assert!(dirs.contains(&("median", "sort", BoundaryDirection::IntoTyped)));
        assert!(dirs.contains(&("client", "median", BoundaryDirection::OutOfTyped)));
        assert_eq!(info.eval_order, vec!["sort", "median", "client"]);
    }

    #[test]
    fn numeric_results_follow_the_tower() {
        let info = check_src(
            "(module m typed
               (define a : Nat (+ 2 3))
               (define b : Int (- 2 3))
               (define c : Real (+ 2 2.5))
               (define main : Int (quotient 7 2)))",
        )
        .unwrap();
        assert_eq!(info.main_type, Some(Type::Int));
        assert!(check_src("(module m typed (define main : Nat (- 2 3)))").is_err());
        assert!(check_src(r#"(module m typed (define main : Int (+ 1 "x")))"#).is_err());
    }

    #[test]
    fn polymorphic_primitives_instantiate_from_arguments() {
        check_src(
            "(module m typed
               (define xs : (Listof Int) (list 1 2 3))
               (define a : Int (first xs))
               (define b : (Listof Int) (rest xs))
               (define c : Int (list-ref xs 1))
               (define d : Nat (length xs))
               (define e : (Listof Int) (cons 0 xs))
               (define f : (Listof Bool) (map (lambda ([x : Int]) : Bool (< x 2)) xs))
               (define main : Bool (empty? xs)))",
        )
        .unwrap();
    }

    #[test]
    fn fixed_vectors_check_constant_indices() {
        check_src(
            "(module m typed
               (define v : (Vector Int Str) (vector 1 \"x\"))
               (define main : Str (vector-ref v 1)))",
        )
        .unwrap();
        let e = check_src(
            "(module m typed
               (define v : (Vector Int Str) (vector 1 \"x\"))
               (define main : Str (vector-ref v 2)))",
        )
        .unwrap_err();
        assert!(e.message.contains("out of range"), "{e}");
        let e = check_src(
            "(module m typed
               (define v : (Vector Int Int) (vector 1 2))
               (define main : Bool (vector-set! v 0 3)))",
        )
        .unwrap_err();
        assert!(e.message.contains("immutable"), "{e}");
        check_src(
            "(module m typed
               (define v : (Vectorof Int) (mutable-vector 1 2))
               (define main : Bool (vector-set! v 0 3)))",
        )
        .unwrap();
    }

    #[test]
    fn overloads_select_by_arity() {
        check_src(
            "(module m typed
               (define f : (case-> (-> Int Str) (-> Str Int Str))
                 (case-lambda
                   [([n : Int]) : Str \"one\"]
                   [([s : Str] [n : Int]) : Str s]))
               (define main : Str (f \"x\" 1)))",
        )
        .unwrap();
        let e = check_src(
            "(module m typed
               (define f : (case-> (-> Int Str) (-> Str Int Str))
                 (case-lambda
                   [([n : Int]) : Str \"one\"]
                   [([s : Str] [n : Int]) : Str s]))
               (define main : Str (f \"x\" 1 2)))",
        )
        .unwrap_err();
        assert!(e.message.contains("overload"), "{e}");
    }

    #[test]
    fn unions_accept_members_and_casts_are_free() {
        check_src(
            "(module m typed
               (define (f [x : (U Int Str)]) : Str (cast x Str))
               (define main : Str (f 3)))",
        )
        .unwrap();
        assert!(check_src(
            "(module m typed
               (define (f [x : (U Int Str)]) : Str \"s\")
               (define main : Str (f #true)))",
        )
        .is_err());
    }

    #[test]
    fn inst_opens_foralls_and_bare_application_is_rejected() {
        let src = "(module lib untyped (define (dup x) x))
             (module m typed
               (require/typed lib dup (All (a) (-> a a)))
               (define main : Int ((inst dup Int) 5)))";
        check_src(src).unwrap();
        let e = check_src(
            "(module lib untyped (define (dup x) x))
             (module m typed
               (require/typed lib dup (All (a) (-> a a)))
               (define main : Int (dup 5)))",
        )
        .unwrap_err();
        assert!(e.message.contains("inst"), "{e}");
    }

    #[test]
    fn untyped_modules_get_an_unbound_scan_only() {
        assert!(check_src("(module m untyped (define main (ghost 1)))").is_err());
        // ill-typed but untyped: allowed statically
        check_src(r#"(module m untyped (define main (+ 1 "x")))"#).unwrap();
    }

    #[test]
    fn import_rules_per_direction() {
        // typed importer of untyped export needs a declared type
        let e = check_src(
            "(module lib untyped (define x 1))
             (module m typed (require lib x) (define main : Int x))",
        )
        .unwrap_err();
        assert!(e.message.contains("declared type"), "{e}");
        // declared type must cover a typed export's annotation
        let e = check_src(
            "(module lib typed (define x : Str \"s\"))
             (module m typed (require/typed lib x Int) (define main : Int x))",
        )
        .unwrap_err();
        assert!(e.message.contains("does not cover"), "{e}");
        // widening a typed export through a declared supertype is fine
        check_src(
            "(module lib typed (define x : Nat 1))
             (module m typed (require/typed lib x Real) (define main : Real x))",
        )
        .unwrap();
    }

    #[test]
    fn module_graph_errors() {
        let e = check_src(
            "(module a untyped (require b f) (define main 1))
             (module b untyped (require a main) (define f 2))",
        )
        .unwrap_err();
        assert!(e.message.contains("cycle"), "{e}");
        let e = check_src("(module a untyped (require ghost f) (define main 1))").unwrap_err();
        assert!(e.message.contains("unknown module"), "{e}");
        let e = check_src(
            "(module a untyped (define x 1))
             (module b untyped (require a y) (define main 1))",
        )
        .unwrap_err();
        assert!(e.message.contains("does not define"), "{e}");
        let e = check_src("(module a untyped (define x 1))").unwrap_err();
        assert!(e.message.contains("main"), "{e}");
        let e = check_src(
            "(module a untyped (define main 1)) (module b untyped (define main 2))",
        )
        .unwrap_err();
        assert!(e.message.contains("more than one"), "{e}");
    }

    #[test]
    fn configurable_modules_flip_between_checked_and_scanned() {
        // ill-typed body: rejected only when the module is switched on
        let src = "(module m configurable (define main : Int (+ 1 \"x\")))";
        assert!(check_bits(src, &[true]).is_err());
        check_bits(src, &[false]).unwrap();
    }

    #[test]
    fn empty_collections_need_context() {
        check_src("(module m typed (define main : (Listof Int) (list)))").unwrap();
        let e =
            check_src("(module m typed (define main : Int (length (list))))").unwrap_err();
        assert!(e.message.contains("context"), "{e}");
    }

    #[test]
    fn eval_order_breaks_ties_by_declaration() {
        let info = check_src(
            "(module z untyped (define a 1))
             (module y untyped (define b 1))
             (module x untyped (require z a) (require y b) (define main (+ a b)))",
        )
        .unwrap();
        assert_eq!(info.eval_order, vec!["z", "y", "x"]);
    }
}
