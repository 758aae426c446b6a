//! First-order shapes: the run-time residue of a type. A shape test looks at
//! one level of a value — constructor, length, tag, field names, or arity —
//! and never at element types. The single exception is the proper-list
//! shape, which must walk the spine; a per-run cache makes re-checking a
//! spine O(1).

use std::collections::HashMap;

use crate::runtime::{CostCounters, Value};
use crate::types::Type;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    IsInt,
    IsNat,
    IsReal,
    IsBool,
    IsStr,
    IsProperList,
    IsVector,
    IsVectorLen(usize),
    IsHash,
    /// Tag must match and every named field must be present; extra fields
    /// are fine (width subtyping).
    IsRecordWith { tag: String, fields: Vec<String> },
    /// The value must accept every arity in the set.
    IsProcArity(Vec<usize>),
    /// At least two alternatives.
    AnyOf(Vec<Shape>),
    AnyShape,
    /// No first-order test exists for the type; rejected at load time.
    Unsupported(String),
}

impl Shape {
    pub fn render(&self) -> String {
        match self {
            Shape::IsInt => "int?".into(),
            Shape::IsNat => "nat?".into(),
            Shape::IsReal => "real?".into(),
            Shape::IsBool => "bool?".into(),
            Shape::IsStr => "str?".into(),
            Shape::IsProperList => "list?".into(),
            Shape::IsVector => "vector?".into(),
            Shape::IsVectorLen(n) => format!("(vector/len {n})"),
            Shape::IsHash => "hash?".into(),
            Shape::IsRecordWith { tag, fields } => {
                let mut s = format!("(record/with {tag}");
                for f in fields {
                    s.push(' ');
                    s.push_str(f);
                }
                s.push(')');
                s
            }
            Shape::IsProcArity(ns) => {
                let mut s = String::from("(procedure/arity");
                for n in ns {
                    s.push_str(&format!(" {n}"));
                }
                s.push(')');
                s
            }
            Shape::AnyOf(ms) => {
                let mut s = String::from("(or");
                for m in ms {
                    s.push(' ');
                    s.push_str(&m.render());
                }
                s.push(')');
                s
            }
            Shape::AnyShape => "any".into(),
            Shape::Unsupported(reason) => format!("(unsupported {reason})"),
        }
    }

    pub fn is_unsupported(&self) -> bool {
        matches!(self, Shape::Unsupported(_))
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// The shape of a type. Universal types take the shape of their body, so a
/// quantified arrow still gets an arity test; a bare type variable has no
/// test at all and comes back unsupported.
pub fn shape_of(ty: &Type) -> Shape {
    shape_at(ty, true)
}

fn shape_at(ty: &Type, root: bool) -> Shape {
    match ty {
        Type::Int => Shape::IsInt,
        Type::Nat => Shape::IsNat,
        Type::Real => Shape::IsReal,
        Type::Bool => Shape::IsBool,
        Type::Str => Shape::IsStr,
        Type::Fun { params, .. } => Shape::IsProcArity(vec![params.len()]),
        Type::CaseFun { .. } => match ty.arities() {
            Some(ns) => Shape::IsProcArity(ns),
            None => Shape::Unsupported("malformed overload".into()),
        },
        Type::List(_) => Shape::IsProperList,
        Type::VecFixed(es) => Shape::IsVectorLen(es.len()),
        Type::VecOf(_) => Shape::IsVector,
        Type::Hash { .. } => Shape::IsHash,
        Type::Record { tag, fields } => Shape::IsRecordWith {
            tag: tag.clone(),
            fields: fields.iter().map(|(n, _)| n.clone()).collect(),
        },
        Type::Union(ms) => {
            let mut shapes: Vec<Shape> = Vec::new();
            for m in ms {
                let s = shape_at(m, false);
                if s.is_unsupported() {
                    return s;
                }
                if !shapes.contains(&s) {
                    shapes.push(s);
                }
            }
            match shapes.len() {
                0 => Shape::Unsupported("empty union".into()),
                1 => shapes.pop().unwrap(),
                _ => Shape::AnyOf(shapes),
            }
        }
        Type::Forall { body, .. } => shape_at(body, root),
        Type::TVar(_) => {
            if root {
                Shape::Unsupported("bare type variable".into())
            } else {
                Shape::AnyShape
            }
        }
    }
}

/// Per-run state for shape checking: the counters and the proper-list spine
/// cache. Cache entries pin their list heads so addresses stay valid.
pub struct ShapeCtx<'a> {
    pub counters: &'a mut CostCounters,
    spine_ok: HashMap<usize, Value>,
    pub lax: bool,
}

impl<'a> ShapeCtx<'a> {
    pub fn new(counters: &'a mut CostCounters, lax: bool) -> ShapeCtx<'a> {
        ShapeCtx { counters, spine_ok: HashMap::new(), lax }
    }

    /// Resume with a cache carried over from earlier checks in the same run.
    pub fn with_cache(
        counters: &'a mut CostCounters,
        cache: HashMap<usize, Value>,
        lax: bool,
    ) -> ShapeCtx<'a> {
        ShapeCtx { counters, spine_ok: cache, lax }
    }

    /// Hand the cache back to its owner between checks.
    pub fn into_cache(self) -> HashMap<usize, Value> {
        self.spine_ok
    }

    pub fn cached_spines(&self) -> usize {
        self.spine_ok.len()
    }
}

/// One counted shape test. Wrappers are transparent.
pub fn check_shape(shape: &Shape, v: &Value, ctx: &mut ShapeCtx<'_>) -> bool {
    ctx.counters.shape_checks += 1;
    test(shape, v, ctx)
}

fn test(shape: &Shape, v: &Value, ctx: &mut ShapeCtx<'_>) -> bool {
    let v = v.unwrap_all();
    match shape {
        Shape::AnyShape => true,
        Shape::Unsupported(_) => false,
        Shape::IsInt => matches!(v, Value::Int(_)),
        Shape::IsNat => matches!(v, Value::Int(i) if *i >= 0),
        Shape::IsReal => matches!(v, Value::Int(_) | Value::Real(_)),
        Shape::IsBool => matches!(v, Value::Bool(_)),
        Shape::IsStr => matches!(v, Value::Str(_)),
        Shape::IsProperList => {
            if ctx.lax {
                return matches!(v, Value::EmptyList | Value::Pair(_));
            }
            proper_spine(v, ctx)
        }
        Shape::IsVector => matches!(v, Value::Vector(_)),
        Shape::IsVectorLen(n) => {
            matches!(v, Value::Vector(d) if d.items.borrow().len() == *n)
        }
        Shape::IsHash => matches!(v, Value::Hash(_)),
        Shape::IsRecordWith { tag, fields } => match v {
            Value::Record(d) => {
                d.tag == *tag
                    && fields.iter().all(|f| d.fields.iter().any(|(n, _)| n == f))
            }
            _ => false,
        },
        Shape::IsProcArity(need) => {
            let have: Vec<usize> = match v {
                Value::Closure(c) => c.clauses.iter().map(|cl| cl.params.len()).collect(),
                Value::Primitive(sig) => vec![sig.params.len()],
                _ => return false,
            };
            need.iter().all(|n| have.contains(n))
        }
        Shape::AnyOf(members) => {
            if ctx.lax {
                return true;
            }
            members.iter().any(|m| test(m, v, ctx))
        }
    }
}

fn proper_spine(v: &Value, ctx: &mut ShapeCtx<'_>) -> bool {
    let mut cur = v.clone();
    let mut visited: Vec<Value> = Vec::new();
    let ok = loop {
        let u = cur.unwrap_all().clone();
        match u {
            Value::EmptyList => break true,
            Value::Pair(ref p) => {
                if ctx.spine_ok.contains_key(&u.addr().expect("pairs have identity")) {
                    break true;
                }
                ctx.counters.steps += 1;
                visited.push(u.clone());
                let tail = p.1.clone();
                cur = tail;
            }
            _ => break false,
        }
    };
    if ok {
        for p in visited {
            let addr = p.addr().expect("pairs have identity");
            ctx.spine_ok.insert(addr, p);
        }
    }
    ok
}

/// Uncounted one-off strict shape test with a fresh context. For decisions
/// that are not themselves checks (union-branch dispatch, result filtering).
pub fn shape_matches(shape: &Shape, v: &Value) -> bool {
    let mut counters = CostCounters::default();
    let mut ctx = ShapeCtx::new(&mut counters, false);
    check_shape(shape, v, &mut ctx)
}

/// Does the value satisfy the first-order residue of the type? Used by the
/// soundness fuzzer on error-free runs; unsupported shapes hold vacuously.
pub fn weak_soundness_probe(ty: &Type, v: &Value) -> bool {
    let shape = shape_of(ty);
    if shape.is_unsupported() {
        return true;
    }
    shape_matches(&shape, v)
}
