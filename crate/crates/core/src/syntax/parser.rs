//! Datum-to-AST parser. A program is a sequence of
//! `(module <name> <lang> <import-or-definition>...)` forms with
//! `<lang>` one of `typed`, `untyped`, `configurable`.
//!
//! Imports: `(require <module> <binding>)` or
//! `(require/typed <module> <binding> <type>)`.
//! Definitions: `(define x e)`, `(define x : T e)`, and function sugar
//! `(define (f [x : T] ...) : R e)` / `(define (f x ...) e)`.

use std::sync::Arc;

use thiserror::Error;

use super::ast::*;
use super::reader::{read_all, Sexp, SexpKind};
use crate::types::Type;

#[derive(Debug, Clone, Error, PartialEq)]
#[error("{offset}: {message}")]
pub struct ParseError {
    pub offset: usize,
    pub message: String,
}

impl ParseError {
    pub fn new(offset: usize, message: impl Into<String>) -> Self {
        ParseError { offset, message: message.into() }
    }
}

struct Ctx {
    module: Arc<str>,
    next_id: u32,
}

impl Ctx {
    fn id(&mut self) -> NodeId {
        let id = NodeId(self.next_id);
        self.next_id += 1;
        id
    }

    fn loc(&self, s: &Sexp) -> SourceLoc {
        SourceLoc::new(self.module.clone(), s.start, s.end)
    }

    fn term(&mut self, s: &Sexp, kind: TermKind) -> Arc<Term> {
        Arc::new(Term { id: self.id(), loc: self.loc(s), kind })
    }
}

fn err(s: &Sexp, msg: impl Into<String>) -> ParseError {
    ParseError::new(s.start, msg)
}

fn expect_atom<'a>(s: &'a Sexp, what: &str) -> Result<&'a str, ParseError> {
    s.atom().ok_or_else(|| err(s, format!("expected {what}")))
}

/// Classify an atom as a literal or identifier.
fn atom_term(text: &str, s: &Sexp, ctx: &mut Ctx) -> Result<Arc<Term>, ParseError> {
    let kind = match text {
        "#true" | "#t" => TermKind::BoolLit(true),
        "#false" | "#f" => TermKind::BoolLit(false),
        _ => {
            let leading = text.chars().next().unwrap_or(' ');
            let numeric_start = leading.is_ascii_digit()
                || (leading == '-'
                    && text.len() > 1
                    && text.chars().nth(1).is_some_and(|c| c.is_ascii_digit()));
            if numeric_start {
                if let Ok(i) = text.parse::<i64>() {
                    TermKind::IntLit(i)
                } else if let Ok(r) = text.parse::<f64>() {
                    TermKind::RealLit(r)
                } else {
                    return Err(err(s, format!("malformed number `{text}`")));
                }
            } else {
                TermKind::Var(text.to_string())
            }
        }
    };
    Ok(ctx.term(s, kind))
}

// --- types ----------------------------------------------------------------

/// Parse a type datum. `tvars` holds variables bound by enclosing `All`s.
fn parse_type_sexp(s: &Sexp, tvars: &mut Vec<String>) -> Result<Type, ParseError> {
    match &s.kind {
        SexpKind::Str(_) => Err(err(s, "expected a type")),
        SexpKind::Atom(name) => match name.as_str() {
            "Int" => Ok(Type::Int),
            "Nat" => Ok(Type::Nat),
            "Real" => Ok(Type::Real),
            "Bool" => Ok(Type::Bool),
            "Str" => Ok(Type::Str),
            other => {
                if tvars.iter().any(|v| v == other) {
                    Ok(Type::TVar(other.to_string()))
                } else {
                    Err(err(s, format!("unknown type `{other}`")))
                }
            }
        },
        SexpKind::List(items) => {
            let head = items
                .first()
                .and_then(|h| h.atom())
                .ok_or_else(|| err(s, "expected a type constructor"))?;
            match head {
                "->" => {
                    if items.len() < 2 {
                        return Err(err(s, "-> needs a result type"));
                    }
                    let mut tys = Vec::new();
                    for it in &items[1..] {
                        tys.push(parse_type_sexp(it, tvars)?);
                    }
                    let result = tys.pop().unwrap();
                    Ok(Type::Fun { params: tys, result: Box::new(result) })
                }
                "case->" => {
                    if items.len() < 2 {
                        return Err(err(s, "case-> needs at least one arrow"));
                    }
                    let mut branches = Vec::new();
                    for it in &items[1..] {
                        let b = parse_type_sexp(it, tvars)?;
                        if !matches!(b, Type::Fun { .. }) {
                            return Err(err(it, "case-> branches must be arrow types"));
                        }
                        branches.push(b);
                    }
                    let mut arities: Vec<usize> = branches
                        .iter()
                        .map(|b| match b {
                            Type::Fun { params, .. } => params.len(),
                            _ => unreachable!(),
                        })
                        .collect();
                    arities.sort_unstable();
                    let before = arities.len();
                    arities.dedup();
                    if arities.len() != before {
                        return Err(err(s, "case-> branches must have distinct arities"));
                    }
                    Ok(Type::CaseFun { branches })
                }
                "Listof" => {
                    if items.len() != 2 {
                        return Err(err(s, "Listof takes one type"));
                    }
                    Ok(Type::list(parse_type_sexp(&items[1], tvars)?))
                }
                "Vector" => {
                    let mut es = Vec::new();
                    for it in &items[1..] {
                        es.push(parse_type_sexp(it, tvars)?);
                    }
                    Ok(Type::VecFixed(es))
                }
                "Vectorof" => {
                    if items.len() != 2 {
                        return Err(err(s, "Vectorof takes one type"));
                    }
                    Ok(Type::VecOf(Box::new(parse_type_sexp(&items[1], tvars)?)))
                }
                "Hash" => {
                    if items.len() != 3 {
                        return Err(err(s, "Hash takes a key type and a value type"));
                    }
                    Ok(Type::Hash {
                        key: Box::new(parse_type_sexp(&items[1], tvars)?),
                        val: Box::new(parse_type_sexp(&items[2], tvars)?),
                    })
                }
                "Record" => {
                    if items.len() < 2 {
                        return Err(err(s, "Record needs a tag"));
                    }
                    let tag = expect_atom(&items[1], "record tag")?.to_string();
                    let mut fields = Vec::new();
                    for it in &items[2..] {
                        let pair = it.list().ok_or_else(|| err(it, "expected [name type]"))?;
                        if pair.len() != 2 {
                            return Err(err(it, "expected [name type]"));
                        }
                        let n = expect_atom(&pair[0], "field name")?.to_string();
                        if fields.iter().any(|(m, _)| *m == n) {
                            return Err(err(&pair[0], format!("duplicate field `{n}`")));
                        }
                        fields.push((n, parse_type_sexp(&pair[1], tvars)?));
                    }
                    Ok(Type::Record { tag, fields })
                }
                "U" => {
                    if items.len() < 3 {
                        return Err(err(s, "U needs at least two members"));
                    }
                    let mut ms = Vec::new();
                    for it in &items[1..] {
                        ms.push(parse_type_sexp(it, tvars)?);
                    }
                    Ok(Type::union_of(ms))
                }
                "All" => {
                    if items.len() != 3 {
                        return Err(err(s, "All takes a variable list and a body"));
                    }
                    let vars = items[1]
                        .list()
                        .ok_or_else(|| err(&items[1], "expected (var)"))?;
                    if vars.len() != 1 {
                        return Err(err(&items[1], "All binds exactly one variable"));
                    }
                    let v = expect_atom(&vars[0], "type variable")?.to_string();
                    tvars.push(v.clone());
                    let body = parse_type_sexp(&items[2], tvars);
                    tvars.pop();
                    Ok(Type::Forall { var: v, body: Box::new(body?) })
                }
                other => Err(err(s, format!("unknown type constructor `{other}`"))),
            }
        }
    }
}

/// Parse a standalone type from text (used by tests and the CLI).
pub fn parse_type(text: &str) -> Result<Type, ParseError> {
    let ds = read_all(text)?;
    if ds.len() != 1 {
        return Err(ParseError::new(0, "expected exactly one type"));
    }
    parse_type_sexp(&ds[0], &mut Vec::new())
}

// --- terms ----------------------------------------------------------------

/// `[x : T]` or bare `x`.
fn parse_param(s: &Sexp) -> Result<Param, ParseError> {
    match &s.kind {
        SexpKind::Atom(name) => Ok(Param { name: name.clone(), ty: None }),
        SexpKind::List(items) => {
            if items.len() == 3 && items[1].atom() == Some(":") {
                let name = expect_atom(&items[0], "parameter name")?.to_string();
                let ty = parse_type_sexp(&items[2], &mut Vec::new())?;
                Ok(Param { name, ty: Some(ty) })
            } else {
                Err(err(s, "expected [name : Type]"))
            }
        }
        SexpKind::Str(_) => Err(err(s, "expected a parameter")),
    }
}

/// Parse `([x e])`-style binding lists shared by let and the loops.
/// Each binding is `[x e]` or `[x : T e]`.
fn parse_binding(s: &Sexp) -> Result<(String, Option<Type>, &Sexp), ParseError> {
    let items = s.list().ok_or_else(|| err(s, "expected a binding"))?;
    match items.len() {
        2 => Ok((expect_atom(&items[0], "binding name")?.to_string(), None, &items[1])),
        4 if items[1].atom() == Some(":") => Ok((
            expect_atom(&items[0], "binding name")?.to_string(),
            Some(parse_type_sexp(&items[2], &mut Vec::new())?),
            &items[3],
        )),
        _ => Err(err(s, "expected [name expr] or [name : Type expr]")),
    }
}

fn parse_clause_parts<'a>(
    params_sexp: &Sexp,
    rest: &'a [Sexp],
    whole: &Sexp,
) -> Result<(Vec<Param>, Option<Type>, &'a Sexp), ParseError> {
    let plist = params_sexp.list().ok_or_else(|| err(params_sexp, "expected parameter list"))?;
    let mut params = Vec::new();
    for p in plist {
        params.push(parse_param(p)?);
    }
    match rest {
        [body] => Ok((params, None, body)),
        [colon, ty, body] if colon.atom() == Some(":") => {
            Ok((params, Some(parse_type_sexp(ty, &mut Vec::new())?), body))
        }
        _ => Err(err(whole, "expected optional `: Type` then a single body expression")),
    }
}

fn parse_for_parts<'a>(
    items: &'a [Sexp],
    s: &Sexp,
    form: &str,
) -> Result<(Option<ForAnn>, String, &'a Sexp, &'a Sexp), ParseError> {
    // (for/... ([x src]) body) or (for/... : R ([x : E src]) body)
    let (ann_result, rest) = if items.len() >= 2 && items[1].atom() == Some(":") {
        if items.len() != 5 {
            return Err(err(s, format!("malformed {form}")));
        }
        (Some(parse_type_sexp(&items[2], &mut Vec::new())?), &items[3..])
    } else {
        if items.len() != 3 {
            return Err(err(s, format!("malformed {form}")));
        }
        (None, &items[1..])
    };
    let binds = rest[0].list().ok_or_else(|| err(&rest[0], "expected ([x source])"))?;
    if binds.len() != 1 {
        return Err(err(&rest[0], format!("{form} binds exactly one variable")));
    }
    let (var, elem_ty, src) = parse_binding(&binds[0])?;
    let ann = match (ann_result, elem_ty) {
        (Some(result), Some(elem)) => Some(ForAnn { result, elem }),
        (None, None) => None,
        _ => {
            return Err(err(
                s,
                format!("{form} annotations must give both the result and element types"),
            ))
        }
    };
    Ok((ann, var, src, &rest[1]))
}

fn parse_term(s: &Sexp, ctx: &mut Ctx) -> Result<Arc<Term>, ParseError> {
    match &s.kind {
        SexpKind::Str(text) => Ok(ctx.term(s, TermKind::StrLit(text.clone()))),
        SexpKind::Atom(text) => atom_term(text, s, ctx),
        SexpKind::List(items) => {
            let head = items.first().and_then(|h| h.atom());
            match head {
                Some("lambda") => {
                    if items.len() < 3 {
                        return Err(err(s, "malformed lambda"));
                    }
                    let (params, result, body) =
                        parse_clause_parts(&items[1], &items[2..], s)?;
                    let body = parse_term(body, ctx)?;
                    Ok(ctx.term(
                        s,
                        TermKind::Lambda { clauses: vec![LambdaClause { params, result, body }] },
                    ))
                }
                Some("case-lambda") => {
                    if items.len() < 2 {
                        return Err(err(s, "case-lambda needs at least one clause"));
                    }
                    let mut clauses = Vec::new();
                    for cl in &items[1..] {
                        let parts = cl.list().ok_or_else(|| err(cl, "expected a clause"))?;
                        if parts.is_empty() {
                            return Err(err(cl, "expected a clause"));
                        }
                        let (params, result, body) =
                            parse_clause_parts(&parts[0], &parts[1..], cl)?;
                        let body = parse_term(body, ctx)?;
                        clauses.push(LambdaClause { params, result, body });
                    }
                    let mut arities: Vec<usize> =
                        clauses.iter().map(|c| c.params.len()).collect();
                    arities.sort_unstable();
                    let n = arities.len();
                    arities.dedup();
                    if arities.len() != n {
                        return Err(err(s, "case-lambda clauses must have distinct arities"));
                    }
                    Ok(ctx.term(s, TermKind::Lambda { clauses }))
                }
                Some("if") => {
                    if items.len() != 4 {
                        return Err(err(s, "if takes three subexpressions"));
                    }
                    let cond = parse_term(&items[1], ctx)?;
                    let then_ = parse_term(&items[2], ctx)?;
                    let else_ = parse_term(&items[3], ctx)?;
                    Ok(ctx.term(s, TermKind::If { cond, then_, else_ }))
                }
                Some("let") => {
                    if items.len() != 3 {
                        return Err(err(s, "let takes a binding list and a body"));
                    }
                    let blist = items[1].list().ok_or_else(|| err(&items[1], "expected bindings"))?;
                    let mut bindings = Vec::new();
                    for b in blist {
                        let (name, ty, e) = parse_binding(b)?;
                        bindings.push((name, ty, parse_term(e, ctx)?));
                    }
                    let body = parse_term(&items[2], ctx)?;
                    Ok(ctx.term(s, TermKind::Let { bindings, body }))
                }
                Some("letrec") => {
                    if items.len() != 3 {
                        return Err(err(s, "letrec takes a binding list and a body"));
                    }
                    let blist = items[1].list().ok_or_else(|| err(&items[1], "expected bindings"))?;
                    if blist.len() != 1 {
                        return Err(err(&items[1], "letrec binds exactly one function"));
                    }
                    let pair = blist[0].list().ok_or_else(|| err(&blist[0], "expected [f lambda]"))?;
                    if pair.len() != 2 {
                        return Err(err(&blist[0], "expected [f lambda]"));
                    }
                    let name = expect_atom(&pair[0], "binding name")?.to_string();
                    let func = parse_term(&pair[1], ctx)?;
                    if !matches!(func.kind, TermKind::Lambda { .. }) {
                        return Err(err(&pair[1], "letrec binds a lambda"));
                    }
                    let body = parse_term(&items[2], ctx)?;
                    Ok(ctx.term(s, TermKind::Letrec { name, func, body }))
                }
                Some("list") => {
                    let mut es = Vec::new();
                    for it in &items[1..] {
                        es.push(parse_term(it, ctx)?);
                    }
                    Ok(ctx.term(s, TermKind::ListCtor(es)))
                }
                Some("vector") | Some("mutable-vector") => {
                    let mutable = head == Some("mutable-vector");
                    let mut es = Vec::new();
                    for it in &items[1..] {
                        es.push(parse_term(it, ctx)?);
                    }
                    Ok(ctx.term(s, TermKind::VectorCtor { items: es, mutable }))
                }
                Some("hash") => {
                    if (items.len() - 1) % 2 != 0 {
                        return Err(err(s, "hash takes alternating keys and values"));
                    }
                    let mut pairs = Vec::new();
                    let mut i = 1;
                    while i < items.len() {
                        let k = parse_term(&items[i], ctx)?;
                        let v = parse_term(&items[i + 1], ctx)?;
                        pairs.push((k, v));
                        i += 2;
                    }
                    Ok(ctx.term(s, TermKind::HashCtor(pairs)))
                }
                Some("record") => {
                    if items.len() < 2 {
                        return Err(err(s, "record needs a tag"));
                    }
                    let tag = expect_atom(&items[1], "record tag")?.to_string();
                    let mut fields = Vec::new();
                    for it in &items[2..] {
                        let pair = it.list().ok_or_else(|| err(it, "expected [name expr]"))?;
                        if pair.len() != 2 {
                            return Err(err(it, "expected [name expr]"));
                        }
                        let n = expect_atom(&pair[0], "field name")?.to_string();
                        if fields.iter().any(|(m, _)| *m == n) {
                            return Err(err(&pair[0], format!("duplicate field `{n}`")));
                        }
                        fields.push((n, parse_term(&pair[1], ctx)?));
                    }
                    Ok(ctx.term(s, TermKind::RecordCtor { tag, fields }))
                }
                Some("record-ref") => {
                    if items.len() != 3 {
                        return Err(err(s, "record-ref takes a record and a field name"));
                    }
                    let expr = parse_term(&items[1], ctx)?;
                    let field = expect_atom(&items[2], "field name")?.to_string();
                    Ok(ctx.term(s, TermKind::RecordRef { expr, field }))
                }
                Some("cast") => {
                    if items.len() != 3 {
                        return Err(err(s, "cast takes an expression and a type"));
                    }
                    let expr = parse_term(&items[1], ctx)?;
                    let ty = parse_type_sexp(&items[2], &mut Vec::new())?;
                    Ok(ctx.term(s, TermKind::Cast { expr, ty }))
                }
                Some("inst") => {
                    if items.len() != 3 {
                        return Err(err(s, "inst takes an expression and a type"));
                    }
                    let expr = parse_term(&items[1], ctx)?;
                    let ty = parse_type_sexp(&items[2], &mut Vec::new())?;
                    Ok(ctx.term(s, TermKind::Inst { expr, ty }))
                }
                Some("for/sum") => {
                    let (ann, var, src, body) = parse_for_parts(items, s, "for/sum")?;
                    let source = parse_term(src, ctx)?;
                    let body = parse_term(body, ctx)?;
                    Ok(ctx.term(s, TermKind::ForSum { ann, var, source, body }))
                }
                Some("for/skip") => {
                    let (ann, var, src, body) = parse_for_parts(items, s, "for/skip")?;
                    let source = parse_term(src, ctx)?;
                    let body = parse_term(body, ctx)?;
                    Ok(ctx.term(s, TermKind::ForSkip { ann, var, source, body }))
                }
                _ => {
                    // application
                    if items.is_empty() {
                        return Err(err(s, "empty application"));
                    }
                    let op = parse_term(&items[0], ctx)?;
                    let mut args = Vec::new();
                    for it in &items[1..] {
                        args.push(parse_term(it, ctx)?);
                    }
                    Ok(ctx.term(s, TermKind::App { op, args }))
                }
            }
        }
    }
}

// --- modules ---------------------------------------------------------------

fn parse_define(s: &Sexp, ctx: &mut Ctx) -> Result<Definition, ParseError> {
    let items = s.list().expect("checked by caller");
    let loc = ctx.loc(s);
    match items.get(1) {
        Some(target) if target.atom().is_some() => {
            let name = target.atom().unwrap().to_string();
            match &items[2..] {
                [e] => Ok(Definition { name, ty: None, expr: parse_term(e, ctx)?, loc }),
                [colon, ty, e] if colon.atom() == Some(":") => Ok(Definition {
                    name,
                    ty: Some(parse_type_sexp(ty, &mut Vec::new())?),
                    expr: parse_term(e, ctx)?,
                    loc,
                }),
                _ => Err(err(s, "malformed define")),
            }
        }
        Some(target) if target.list().is_some() => {
            // (define (f params...) [: R] body) => f = lambda
            let sig = target.list().unwrap();
            if sig.is_empty() {
                return Err(err(target, "expected (name params...)"));
            }
            let name = expect_atom(&sig[0], "function name")?.to_string();
            let mut params = Vec::new();
            for p in &sig[1..] {
                params.push(parse_param(p)?);
            }
            let (result, body) = match &items[2..] {
                [e] => (None, e),
                [colon, ty, e] if colon.atom() == Some(":") => {
                    (Some(parse_type_sexp(ty, &mut Vec::new())?), e)
                }
                _ => return Err(err(s, "malformed define")),
            };
            let body = parse_term(body, ctx)?;
            let ann = match (&result, params.iter().all(|p| p.ty.is_some())) {
                (Some(r), true) => Some(Type::Fun {
                    params: params.iter().map(|p| p.ty.clone().unwrap()).collect(),
                    result: Box::new(r.clone()),
                }),
                _ => None,
            };
            let lambda = Arc::new(Term {
                id: ctx.id(),
                loc: ctx.loc(target),
                kind: TermKind::Lambda {
                    clauses: vec![LambdaClause { params, result, body }],
                },
            });
            Ok(Definition { name, ty: ann, expr: lambda, loc })
        }
        _ => Err(err(s, "malformed define")),
    }
}

fn parse_module(s: &Sexp, ctx_id: &mut u32) -> Result<ModuleDecl, ParseError> {
    let items = s
        .list()
        .filter(|items| items.first().and_then(|h| h.atom()) == Some("module"))
        .ok_or_else(|| err(s, "expected a (module ...) form"))?;
    if items.len() < 3 {
        return Err(err(s, "module needs a name and a language"));
    }
    let name = expect_atom(&items[1], "module name")?.to_string();
    let lang = match expect_atom(&items[2], "module language")? {
        "typed" => Lang::Typed,
        "untyped" => Lang::Untyped,
        "configurable" => Lang::Configurable,
        other => {
            return Err(err(
                &items[2],
                format!("unknown language `{other}` (expected typed, untyped, or configurable)"),
            ))
        }
    };
    let mut ctx = Ctx { module: Arc::from(name.as_str()), next_id: *ctx_id };
    let mut imports = Vec::new();
    let mut defs = Vec::new();
    for form in &items[3..] {
        let parts = form.list().ok_or_else(|| err(form, "expected require or define"))?;
        match parts.first().and_then(|h| h.atom()) {
            Some("require") | Some("require/typed") => {
                let typed_form = parts[0].atom() == Some("require/typed");
                let want = if typed_form { 4 } else { 3 };
                if parts.len() != want {
                    return Err(err(form, "malformed require"));
                }
                let source_module = expect_atom(&parts[1], "module name")?.to_string();
                if source_module == name {
                    return Err(err(form, "a module cannot import itself"));
                }
                let binding = expect_atom(&parts[2], "imported name")?.to_string();
                if imports.iter().any(|i: &Import| i.binding == binding) {
                    return Err(err(form, format!("duplicate import `{binding}`")));
                }
                let declared_type = if typed_form {
                    Some(parse_type_sexp(&parts[3], &mut Vec::new())?)
                } else {
                    None
                };
                imports.push(Import {
                    source_module,
                    binding,
                    declared_type,
                    loc: ctx.loc(form),
                });
            }
            Some("define") => {
                let d = parse_define(form, &mut ctx)?;
                if defs.iter().any(|x: &Definition| x.name == d.name) {
                    return Err(err(form, format!("duplicate definition `{}`", d.name)));
                }
                defs.push(d);
            }
            _ => return Err(err(form, "expected require or define")),
        }
    }
    *ctx_id = ctx.next_id;
    Ok(ModuleDecl { name, lang, imports, defs, loc: SourceLoc::new(ctx.module, s.start, s.end) })
}

/// Parse a whole program.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let data = read_all(text)?;
    if data.is_empty() {
        return Err(ParseError::new(0, "empty program"));
    }
    let mut next_id = 0;
    let mut modules = Vec::new();
    for d in &data {
        let m = parse_module(d, &mut next_id)?;
        if modules.iter().any(|x: &ModuleDecl| x.name == m.name) {
            return Err(err(d, format!("duplicate module `{}`", m.name)));
        }
        modules.push(m);
    }
    Ok(Program { modules, next_id })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_the_median_fixture_into_three_modules() {
        let p = parse_program(fixtures::MEDIAN).unwrap();
        assert_eq!(p.modules.len(), 3);
        assert_eq!(p.modules[0].name, "sort");
        assert_eq!(p.modules[1].name, "median");
        assert_eq!(p.modules[2].name, "client");
        let client = p.module("client").unwrap();
        assert!(client.imports.iter().any(|i| i.binding == "median"));
        assert_eq!(client.lang, Lang::Untyped);
        assert_eq!(p.module("median").unwrap().lang, Lang::Typed);
    }

    #[test]
    fn typed_function_sugar_builds_arrow_annotation() {
        let p = parse_program(
            "(module m typed (define (f [x : Int] [y : Real]) : Bool (< x y)))",
        )
        .unwrap();
        let d = &p.modules[0].defs[0];
        assert_eq!(
            d.ty.as_ref().unwrap().render(),
            "(-> Int Real Bool)"
        );
        assert!(matches!(d.expr.kind, TermKind::Lambda { .. }));
    }

    #[test]
    fn rejects_self_import_and_duplicates() {
        assert!(parse_program("(module m untyped (require m f))").is_err());
        assert!(parse_program(
            "(module a untyped (require b f) (require c f))"
        )
        .is_err());
        assert!(parse_program("(module a untyped (define x 1) (define x 2))").is_err());
        assert!(parse_program("(module a untyped) (module a untyped)").is_err());
    }

    #[test]
    fn type_syntax_round_trips() {
        for src in [
            "(-> Int Real Bool)",
            "(case-> (-> Real Bool) (-> Str Str Real))",
            "(Listof Real)",
            "(Vector Real Real)",
            "(Vectorof Int)",
            "(Hash Str Int)",
            "(Record bear [name Str] [honey Int])",
            "(U Int Str)",
            "(All (a) (-> a a))",
        ] {
            let t = parse_type(src).unwrap();
            assert_eq!(parse_type(&t.render()).unwrap(), t);
        }
    }

    #[test]
    fn unknown_type_variable_is_an_error() {
        assert!(parse_type("(Listof a)").is_err());
        assert!(parse_type("(All (a) (Listof a))").is_ok());
    }

    #[test]
    fn loop_annotations_need_both_parts() {
        assert!(parse_program(
            "(module m typed (define x : Int (for/sum : Int ([i : Int (list 1)]) i)))"
        )
        .is_ok());
        assert!(parse_program(
            "(module m typed (define x : Int (for/sum : Int ([i (list 1)]) i)))"
        )
        .is_err());
        assert!(parse_program(
            "(module m untyped (define x (for/sum ([i (list 1)]) i)))"
        )
        .is_ok());
    }

    #[test]
    fn numbers_and_booleans() {
        let p = parse_program("(module m untyped (define a -5) (define b 2.5) (define c #t))")
            .unwrap();
        assert!(matches!(p.modules[0].defs[0].expr.kind, TermKind::IntLit(-5)));
        assert!(matches!(p.modules[0].defs[1].expr.kind, TermKind::RealLit(x) if x == 2.5));
        assert!(matches!(p.modules[0].defs[2].expr.kind, TermKind::BoolLit(true)));
        assert!(parse_program("(module m untyped (define a 5x))").is_err());
    }
}
