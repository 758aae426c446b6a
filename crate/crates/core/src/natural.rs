//! Higher-order contracts for the deep semantics. A boundary type compiles
//! to a contract once, at link time:
//!
//!   - types with no code and no state inside become one eager structural
//!     check (`Flat`) — elements and all, no wrapper;
//!   - arrows become function guards: the value is wrapped, and every call
//!     through the wrapper checks arguments against the negative party and
//!     results against the positive one;
//!   - mutable vectors and hashes become lazy guards: reads check what comes
//!     out, writes check what goes in;
//!   - immutable containers with higher-order pieces inside are rebuilt,
//!     applying the piece contracts element by element;
//!   - unions pick the branch whose first-order shape matches, so members
//!     must have pairwise disjoint shapes;
//!   - universal types have no deep contract at all and are rejected.
//!
//! Every failure names exactly one boundary and one party.

use std::rc::Rc;

use crate::runtime::{sketch, CostCounters, RecordData, Value, VectorData};
use crate::shapes::{shape_matches, shape_of, Shape};
use crate::syntax::SourceLoc;
use crate::types::Type;

/// The boundary a contract guards: both ends, and which party is on the
/// hook for the position currently being checked. `positive` answers for
/// values the exporter produces; argument positions swap the parties.
#[derive(Debug, Clone)]
pub struct Blame {
    pub import_loc: SourceLoc,
    pub export_loc: SourceLoc,
    pub positive: String,
    pub negative: String,
}

impl Blame {
    pub fn swap(&self) -> Blame {
        Blame {
            import_loc: self.import_loc.clone(),
            export_loc: self.export_loc.clone(),
            positive: self.negative.clone(),
            negative: self.positive.clone(),
        }
    }
}

/// A contract violation: one boundary, one blamed party.
#[derive(Debug, Clone)]
pub struct ContractFail {
    pub blame: Blame,
    pub expected: Type,
    pub got: String,
}

#[derive(Debug)]
pub struct FunBranch {
    pub params: Vec<Contract>,
    pub result: Contract,
}

#[derive(Debug)]
pub struct FunContract {
    pub ty: Type,
    /// One branch per arity.
    pub branches: Vec<FunBranch>,
}

impl FunContract {
    pub fn branch_for(&self, arity: usize) -> Option<&FunBranch> {
        self.branches.iter().find(|b| b.params.len() == arity)
    }
}

#[derive(Debug)]
pub struct VecContract {
    pub ty: Type,
    pub elem: Contract,
}

#[derive(Debug)]
pub struct HashContract {
    pub ty: Type,
    pub key: Contract,
    pub val: Contract,
}

#[derive(Debug, Clone)]
pub enum Contract {
    /// Eager structural check; never allocates.
    Flat { ty: Type },
    Fun(Rc<FunContract>),
    VecGuard(Rc<VecContract>),
    HashGuard(Rc<HashContract>),
    /// Immutable list with higher-order elements: rebuild the spine.
    ListRebuild { ty: Type, elem: Rc<Contract> },
    /// Immutable fixed vector with higher-order slots: rebuild.
    FixedRebuild { ty: Type, slots: Rc<Vec<Contract>> },
    /// Immutable record with higher-order fields: rebuild.
    RecordRebuild { ty: Type, tag: String, fields: Rc<Vec<(String, Contract)>> },
    /// Shape-dispatched union; members have pairwise disjoint shapes.
    UnionPick { ty: Type, members: Rc<Vec<(Shape, Contract)>> },
}

/// The wrapper payload carried by a guarded value.
#[derive(Debug)]
pub struct WrapData {
    pub inner: Value,
    pub guard: Guard,
    pub blame: Blame,
}

#[derive(Debug, Clone)]
pub enum Guard {
    Fun(Rc<FunContract>),
    Vec(Rc<VecContract>),
    Hash(Rc<HashContract>),
}

/// No code or state anywhere inside: one eager check covers the type.
fn first_order(ty: &Type) -> bool {
    match ty {
        Type::Int | Type::Nat | Type::Real | Type::Bool | Type::Str => true,
        Type::Fun { .. } | Type::CaseFun { .. } => false,
        Type::VecOf(_) | Type::Hash { .. } => false,
        Type::Forall { .. } | Type::TVar(_) => false,
        Type::List(e) => first_order(e),
        Type::VecFixed(es) => es.iter().all(first_order),
        Type::Record { fields, .. } => fields.iter().all(|(_, t)| first_order(t)),
        Type::Union(ms) => ms.iter().all(first_order),
    }
}

/// Can a single value satisfy both shapes? Conservative: any doubt counts
/// as overlap.
fn shapes_overlap(a: &Shape, b: &Shape) -> bool {
    use Shape::*;
    let numeric = |s: &Shape| matches!(s, IsInt | IsNat | IsReal);
    match (a, b) {
        (AnyShape, _) | (_, AnyShape) => true,
        (Unsupported(_), _) | (_, Unsupported(_)) => true,
        (AnyOf(ms), _) => ms.iter().any(|m| shapes_overlap(m, b)),
        (_, AnyOf(ms)) => ms.iter().any(|m| shapes_overlap(a, m)),
        _ if numeric(a) && numeric(b) => true,
        (IsBool, IsBool) | (IsStr, IsStr) | (IsProperList, IsProperList) | (IsHash, IsHash) => {
            true
        }
        (IsVector | IsVectorLen(_), IsVector) | (IsVector, IsVectorLen(_)) => true,
        (IsVectorLen(n), IsVectorLen(m)) => n == m,
        (IsRecordWith { tag: t1, .. }, IsRecordWith { tag: t2, .. }) => t1 == t2,
        // a single overload can satisfy both arity sets
        (IsProcArity(_), IsProcArity(_)) => true,
        _ => false,
    }
}

/// Compile a boundary type. `Err` carries the reason the type has no deep
/// contract (link-time rejection).
pub fn compile(ty: &Type) -> Result<Contract, String> {
    if first_order(ty) {
        return Ok(Contract::Flat { ty: ty.clone() });
    }
    match ty {
        Type::Fun { params, result } => {
            let branch = FunBranch {
                params: params.iter().map(compile).collect::<Result<_, _>>()?,
                result: compile(result)?,
            };
            Ok(Contract::Fun(Rc::new(FunContract { ty: ty.clone(), branches: vec![branch] })))
        }
        Type::CaseFun { branches } => {
            let mut out = Vec::new();
            for b in branches {
                let Type::Fun { params, result } = b else {
                    return Err("overload branch is not an arrow".into());
                };
                out.push(FunBranch {
                    params: params.iter().map(compile).collect::<Result<_, _>>()?,
                    result: compile(result)?,
                });
            }
            Ok(Contract::Fun(Rc::new(FunContract { ty: ty.clone(), branches: out })))
        }
        Type::VecOf(e) => Ok(Contract::VecGuard(Rc::new(VecContract {
            ty: ty.clone(),
            elem: compile(e)?,
        }))),
        Type::Hash { key, val } => Ok(Contract::HashGuard(Rc::new(HashContract {
            ty: ty.clone(),
            key: compile(key)?,
            val: compile(val)?,
        }))),
        Type::List(e) => {
            Ok(Contract::ListRebuild { ty: ty.clone(), elem: Rc::new(compile(e)?) })
        }
        Type::VecFixed(es) => Ok(Contract::FixedRebuild {
            ty: ty.clone(),
            slots: Rc::new(es.iter().map(compile).collect::<Result<_, _>>()?),
        }),
        Type::Record { tag, fields } => Ok(Contract::RecordRebuild {
            ty: ty.clone(),
            tag: tag.clone(),
            fields: Rc::new(
                fields
                    .iter()
                    .map(|(n, t)| compile(t).map(|c| (n.clone(), c)))
                    .collect::<Result<_, _>>()?,
            ),
        }),
        Type::Union(ms) => {
            let mut members = Vec::new();
            for m in ms {
                let s = shape_of(m);
                if s.is_unsupported() {
                    return Err("union member has no dispatchable shape".into());
                }
                members.push((s, compile(m)?));
            }
            for i in 0..members.len() {
                for j in (i + 1)..members.len() {
                    if shapes_overlap(&members[i].0, &members[j].0) {
                        return Err(format!(
                            "union members {} and {} overlap; no deep dispatch",
                            members[i].0.render(),
                            members[j].0.render()
                        ));
                    }
                }
            }
            Ok(Contract::UnionPick { ty: ty.clone(), members: Rc::new(members) })
        }
        Type::Forall { .. } => Err("universal types have no deep contract".into()),
        Type::TVar(_) => Err("bare type variable has no deep contract".into()),
        _ => unreachable!("first-order types were handled above"),
    }
}

fn fail(blame: &Blame, expected: &Type, v: &Value) -> ContractFail {
    ContractFail { blame: blame.clone(), expected: expected.clone(), got: sketch(v) }
}

/// Eager structural check. Counts one flat check per type-node/value pair
/// visited and one step per list-spine cell.
pub fn flat_holds(ty: &Type, v: &Value, counters: &mut CostCounters) -> bool {
    counters.flat_checks += 1;
    let v = v.unwrap_all();
    match ty {
        Type::Int => matches!(v, Value::Int(_)),
        Type::Nat => matches!(v, Value::Int(i) if *i >= 0),
        Type::Real => matches!(v, Value::Int(_) | Value::Real(_)),
        Type::Bool => matches!(v, Value::Bool(_)),
        Type::Str => matches!(v, Value::Str(_)),
        Type::List(e) => {
            let mut cur = v.clone();
            loop {
                match cur.unwrap_all().clone() {
                    Value::EmptyList => break true,
                    Value::Pair(p) => {
                        counters.steps += 1;
                        if !flat_holds(e, &p.0, counters) {
                            break false;
                        }
                        cur = p.1.clone();
                    }
                    _ => break false,
                }
            }
        }
        Type::VecFixed(es) => match v {
            Value::Vector(d) => {
                let items = d.items.borrow();
                items.len() == es.len()
                    && es.iter().zip(items.iter()).all(|(t, item)| flat_holds(t, item, counters))
            }
            _ => false,
        },
        Type::Record { tag, fields } => match v {
            Value::Record(d) => {
                d.tag == *tag
                    && fields.iter().all(|(n, t)| {
                        d.fields
                            .iter()
                            .find(|(fname, _)| fname == n)
                            .is_some_and(|(_, fv)| flat_holds(t, fv, counters))
                    })
            }
            _ => false,
        },
        Type::Union(ms) => ms.iter().any(|m| flat_holds(m, v, counters)),
        _ => unreachable!("flat contracts cover first-order types only"),
    }
}

/// Apply a compiled contract to a value crossing a boundary. Flat contracts
/// check in place; guards wrap; rebuilds return a fresh container.
pub fn apply_contract(
    c: &Contract,
    v: &Value,
    blame: &Blame,
    counters: &mut CostCounters,
) -> Result<Value, ContractFail> {
    match c {
        Contract::Flat { ty } => {
            if flat_holds(ty, v, counters) {
                Ok(v.clone())
            } else {
                Err(fail(blame, ty, v))
            }
        }
        Contract::Fun(fc) => {
            let arities: Vec<usize> = fc.branches.iter().map(|b| b.params.len()).collect();
            counters.flat_checks += 1;
            let ok = shape_matches(&Shape::IsProcArity(arities), v);
            if !ok {
                return Err(fail(blame, &fc.ty, v));
            }
            counters.wrappers_allocated += 1;
            Ok(Value::Wrapped(Rc::new(WrapData {
                inner: v.clone(),
                guard: Guard::Fun(fc.clone()),
                blame: blame.clone(),
            })))
        }
        Contract::VecGuard(vc) => {
            counters.flat_checks += 1;
            if !matches!(v.unwrap_all(), Value::Vector(_)) {
                return Err(fail(blame, &vc.ty, v));
            }
            counters.wrappers_allocated += 1;
            Ok(Value::Wrapped(Rc::new(WrapData {
                inner: v.clone(),
                guard: Guard::Vec(vc.clone()),
                blame: blame.clone(),
            })))
        }
        Contract::HashGuard(hc) => {
            counters.flat_checks += 1;
            if !matches!(v.unwrap_all(), Value::Hash(_)) {
                return Err(fail(blame, &hc.ty, v));
            }
            counters.wrappers_allocated += 1;
            Ok(Value::Wrapped(Rc::new(WrapData {
                inner: v.clone(),
                guard: Guard::Hash(hc.clone()),
                blame: blame.clone(),
            })))
        }
        Contract::ListRebuild { ty, elem } => {
            counters.flat_checks += 1;
            let mut out = Vec::new();
            let mut cur = v.clone();
            loop {
                match cur.unwrap_all().clone() {
                    Value::EmptyList => break,
                    Value::Pair(p) => {
                        counters.steps += 1;
                        out.push(apply_contract(elem, &p.0, blame, counters)?);
                        cur = p.1.clone();
                    }
                    _ => return Err(fail(blame, ty, v)),
                }
            }
            Ok(Value::list(out))
        }
        Contract::FixedRebuild { ty, slots } => {
            counters.flat_checks += 1;
            let Value::Vector(d) = v.unwrap_all() else {
                return Err(fail(blame, ty, v));
            };
            let items = d.items.borrow().clone();
            if items.len() != slots.len() {
                return Err(fail(blame, ty, v));
            }
            let mut out = Vec::new();
            for (c, item) in slots.iter().zip(items.iter()) {
                out.push(apply_contract(c, item, blame, counters)?);
            }
            Ok(Value::Vector(Rc::new(VectorData {
                items: std::cell::RefCell::new(out),
                mutable: false,
            })))
        }
        Contract::RecordRebuild { ty, tag, fields } => {
            counters.flat_checks += 1;
            let Value::Record(d) = v.unwrap_all() else {
                return Err(fail(blame, ty, v));
            };
            if d.tag != *tag {
                return Err(fail(blame, ty, v));
            }
            let mut out = Vec::new();
            for (n, fv) in &d.fields {
                match fields.iter().find(|(cn, _)| cn == n) {
                    Some((_, c)) => out.push((n.clone(), apply_contract(c, fv, blame, counters)?)),
                    None => out.push((n.clone(), fv.clone())), // extra field: untouched
                }
            }
            // every contracted field must exist on the value
            for (n, _) in fields.iter() {
                if !d.fields.iter().any(|(fname, _)| fname == n) {
                    return Err(fail(blame, ty, v));
                }
            }
            Ok(Value::Record(Rc::new(RecordData { tag: d.tag.clone(), fields: out })))
        }
        Contract::UnionPick { ty, members } => {
            for (s, c) in members.iter() {
                counters.flat_checks += 1;
                if shape_matches(s, v) {
                    return apply_contract(c, v, blame, counters);
                }
            }
            Err(fail(blame, ty, v))
        }
    }
}

/// Full structural conformance of a value to a type, ignoring function
/// interiors (arity only) and quantifiers (vacuous). The oracle the fuzzer
/// holds error-free deep runs to.
pub fn structural_probe(ty: &Type, v: &Value) -> bool {
    let v = v.unwrap_all();
    match ty {
        Type::Int => matches!(v, Value::Int(_)),
        Type::Nat => matches!(v, Value::Int(i) if *i >= 0),
        Type::Real => matches!(v, Value::Int(_) | Value::Real(_)),
        Type::Bool => matches!(v, Value::Bool(_)),
        Type::Str => matches!(v, Value::Str(_)),
        Type::Fun { .. } | Type::CaseFun { .. } => {
            shape_matches(&shape_of(ty), v)
        }
        Type::List(e) => {
            let mut cur = v.clone();
            loop {
                match cur.unwrap_all().clone() {
                    Value::EmptyList => break true,
                    Value::Pair(p) => {
                        if !structural_probe(e, &p.0) {
                            break false;
                        }
                        cur = p.1.clone();
                    }
                    _ => break false,
                }
            }
        }
        Type::VecFixed(es) => match v {
            Value::Vector(d) => {
                let items = d.items.borrow();
                items.len() == es.len()
                    && es.iter().zip(items.iter()).all(|(t, item)| structural_probe(t, item))
            }
            _ => false,
        },
        Type::VecOf(e) => match v {
            Value::Vector(d) => d.items.borrow().iter().all(|item| structural_probe(e, item)),
            _ => false,
        },
        Type::Hash { key, val } => match v {
            Value::Hash(d) => d
                .entries
                .borrow()
                .iter()
                .all(|(k, x)| structural_probe(key, k) && structural_probe(val, x)),
            _ => false,
        },
        Type::Record { tag, fields } => match v {
            Value::Record(d) => {
                d.tag == *tag
                    && fields.iter().all(|(n, t)| {
                        d.fields
                            .iter()
                            .find(|(fname, _)| fname == n)
                            .is_some_and(|(_, fv)| structural_probe(t, fv))
                    })
            }
            _ => false,
        },
        Type::Union(ms) => ms.iter().any(|m| structural_probe(m, v)),
        Type::Forall { .. } | Type::TVar(_) => true,
    }
}
