//! The static type language: structural types with numeric-tower base
//! subtyping (`Nat <: Int <: Real`), function/case-function arrow types,
//! immutable collections (covariant) and mutable collections (invariant),
//! tagged records with width subtyping, unions, and single-variable
//! universal types. No `Dynamic` type and no inference: typed definitions
//! carry annotations and mixing happens through casts, instantiation, and
//! declared import types.

mod check;
mod prims;

pub use check::{
    resolve_typedness, typecheck, BoundaryDirection, BoundaryImportInfo, StaticError, TypeInfo,
};
pub use prims::{prim_sig, prim_sig_of, prim_value_type, PrimOp, PrimSig, PRIMITIVES};

#[derive(Debug, Clone, PartialEq)]
pub enum Type {
    Int,
    Nat,
    Real,
    Bool,
    Str,
    /// `(-> p... r)`; arity is `params.len()`.
    Fun { params: Vec<Type>, result: Box<Type> },
    /// `(case-> arrow...)`; branches have pairwise distinct arities.
    CaseFun { branches: Vec<Type> },
    /// Immutable homogeneous proper list.
    List(Box<Type>),
    /// Immutable fixed-length vector, one type per slot.
    VecFixed(Vec<Type>),
    /// Mutable uniform vector.
    VecOf(Box<Type>),
    /// Mutable map.
    Hash { key: Box<Type>, val: Box<Type> },
    /// Immutable tagged record.
    Record { tag: String, fields: Vec<(String, Type)> },
    /// At least two members, flattened and deduplicated.
    Union(Vec<Type>),
    Forall { var: String, body: Box<Type> },
    TVar(String),
}

impl Type {
    pub fn fun(params: Vec<Type>, result: Type) -> Type {
        Type::Fun { params, result: Box::new(result) }
    }

    pub fn list(elem: Type) -> Type {
        Type::List(Box::new(elem))
    }

    /// Union smart constructor: flattens nested unions, deduplicates, and
    /// sorts members by render key so equal unions compare equal. Collapses
    /// to the single member when only one distinct type remains.
    pub fn union_of(members: Vec<Type>) -> Type {
        let mut flat: Vec<Type> = Vec::new();
        fn push(flat: &mut Vec<Type>, t: Type) {
            match t {
                Type::Union(ms) => {
                    for m in ms {
                        push(flat, m);
                    }
                }
                other => {
                    if !flat.contains(&other) {
                        flat.push(other);
                    }
                }
            }
        }
        for m in members {
            push(&mut flat, m);
        }
        flat.sort_by_key(|t| t.render());
        if flat.len() == 1 {
            flat.pop().unwrap()
        } else {
            Type::Union(flat)
        }
    }

    /// Arity set of an arrow type, if this is one.
    pub fn arities(&self) -> Option<Vec<usize>> {
        match self {
            Type::Fun { params, .. } => Some(vec![params.len()]),
            Type::CaseFun { branches } => {
                let mut out = Vec::new();
                for b in branches {
                    out.extend(b.arities()?);
                }
                out.sort_unstable();
                out.dedup();
                Some(out)
            }
            _ => None,
        }
    }

    /// Substitute `var := replacement` throughout (capture-avoiding for the
    /// single-variable binders used here).
    pub fn substitute(&self, var: &str, replacement: &Type) -> Type {
        match self {
            Type::TVar(v) if v == var => replacement.clone(),
            Type::TVar(_) | Type::Int | Type::Nat | Type::Real | Type::Bool | Type::Str => {
                self.clone()
            }
            Type::Fun { params, result } => Type::Fun {
                params: params.iter().map(|p| p.substitute(var, replacement)).collect(),
                result: Box::new(result.substitute(var, replacement)),
            },
            Type::CaseFun { branches } => Type::CaseFun {
                branches: branches.iter().map(|b| b.substitute(var, replacement)).collect(),
            },
            Type::List(e) => Type::List(Box::new(e.substitute(var, replacement))),
            Type::VecFixed(es) => {
                Type::VecFixed(es.iter().map(|e| e.substitute(var, replacement)).collect())
            }
            Type::VecOf(e) => Type::VecOf(Box::new(e.substitute(var, replacement))),
            Type::Hash { key, val } => Type::Hash {
                key: Box::new(key.substitute(var, replacement)),
                val: Box::new(val.substitute(var, replacement)),
            },
            Type::Record { tag, fields } => Type::Record {
                tag: tag.clone(),
                fields: fields
                    .iter()
                    .map(|(n, t)| (n.clone(), t.substitute(var, replacement)))
                    .collect(),
            },
            Type::Union(ms) => {
                Type::union_of(ms.iter().map(|m| m.substitute(var, replacement)).collect())
            }
            Type::Forall { var: v, body } => {
                if v == var {
                    self.clone() // shadowed
                } else {
                    Type::Forall {
                        var: v.clone(),
                        body: Box::new(body.substitute(var, replacement)),
                    }
                }
            }
        }
    }

    /// Surface rendering, matching the type syntax the parser accepts.
    pub fn render(&self) -> String {
        match self {
            Type::Int => "Int".into(),
            Type::Nat => "Nat".into(),
            Type::Real => "Real".into(),
            Type::Bool => "Bool".into(),
            Type::Str => "Str".into(),
            Type::Fun { params, result } => {
                let mut s = String::from("(->");
                for p in params {
                    s.push(' ');
                    s.push_str(&p.render());
                }
                s.push(' ');
                s.push_str(&result.render());
                s.push(')');
                s
            }
            Type::CaseFun { branches } => {
                let mut s = String::from("(case->");
                for b in branches {
                    s.push(' ');
                    s.push_str(&b.render());
                }
                s.push(')');
                s
            }
            Type::List(e) => format!("(Listof {})", e.render()),
            Type::VecFixed(es) => {
                let mut s = String::from("(Vector");
                for e in es {
                    s.push(' ');
                    s.push_str(&e.render());
                }
                s.push(')');
                s
            }
            Type::VecOf(e) => format!("(Vectorof {})", e.render()),
            Type::Hash { key, val } => format!("(Hash {} {})", key.render(), val.render()),
            Type::Record { tag, fields } => {
                let mut s = format!("(Record {tag}");
                for (n, t) in fields {
                    s.push_str(&format!(" [{n} {}]", t.render()));
                }
                s.push(')');
                s
            }
            Type::Union(ms) => {
                let mut s = String::from("(U");
                for m in ms {
                    s.push(' ');
                    s.push_str(&m.render());
                }
                s.push(')');
                s
            }
            Type::Forall { var, body } => format!("(All ({var}) {})", body.render()),
            Type::TVar(v) => v.clone(),
        }
    }
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.render())
    }
}

/// Structural subtyping. Reflexive and transitive; immutable constructors
/// are covariant, mutable ones invariant, arrows contravariant in parameters.
pub fn subtype(a: &Type, b: &Type) -> bool {
    if a == b {
        return true;
    }
    match (a, b) {
        // Union on the left: every member must fit.
        (Type::Union(ms), _) => ms.iter().all(|m| subtype(m, b)),
        // Union on the right: some member must admit `a`.
        (_, Type::Union(ms)) => ms.iter().any(|m| subtype(a, m)),
        (Type::Nat, Type::Int) | (Type::Nat, Type::Real) | (Type::Int, Type::Real) => true,
        (Type::Fun { params: p1, result: r1 }, Type::Fun { params: p2, result: r2 }) => {
            p1.len() == p2.len()
                && p2.iter().zip(p1).all(|(x, y)| subtype(x, y))
                && subtype(r1, r2)
        }
        (Type::CaseFun { branches }, Type::Fun { .. }) => {
            branches.iter().any(|br| subtype(br, b))
        }
        (_, Type::CaseFun { branches }) => branches.iter().all(|br| subtype(a, br)),
        (Type::List(e1), Type::List(e2)) => subtype(e1, e2),
        (Type::VecFixed(e1), Type::VecFixed(e2)) => {
            e1.len() == e2.len() && e1.iter().zip(e2).all(|(x, y)| subtype(x, y))
        }
        // VecOf and Hash are mutable: invariant, so only equality (above).
        (Type::Record { tag: t1, fields: f1 }, Type::Record { tag: t2, fields: f2 }) => {
            // Width and depth on fields; tags must agree because the runtime
            // shape test includes the tag.
            t1 == t2
                && f2.iter().all(|(n2, ty2)| {
                    f1.iter().any(|(n1, ty1)| n1 == n2 && subtype(ty1, ty2))
                })
        }
        (Type::Forall { var: v1, body: b1 }, Type::Forall { var: v2, body: b2 }) => {
            let renamed = b2.substitute(v2, &Type::TVar(v1.clone()));
            subtype(b1, &renamed)
        }
        _ => false,
    }
}

/// Least upper bound used for `if` joins and list-literal elements: picks a
/// side when one subsumes the other, otherwise forms a union.
pub fn join(a: &Type, b: &Type) -> Type {
    if subtype(a, b) {
        b.clone()
    } else if subtype(b, a) {
        a.clone()
    } else {
        Type::union_of(vec![a.clone(), b.clone()])
    }
}
