//! Base environment of primitives: names, signatures, and whether a
//! primitive's result always satisfies the first-order shape of its declared
//! result type. That flag decides whether Shallow inserts a result check at
//! direct call sites.

use super::Type;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrimOp {
    Add,
    Sub,
    Mul,
    Quotient,
    Modulo,
    Lt,
    Le,
    NumEq,
    Not,
    EqualP,
    Cons,
    First,
    Rest,
    EmptyP,
    ListRef,
    Length,
    Map,
    VectorRef,
    /// Bounds-check-free read, introduced by the optimizer for fixed-vector
    /// reads whose index is a constant the checker proved in range.
    VectorRefUnchecked,
    VectorSet,
    VectorLength,
    HashRef,
    HashSet,
    Print,
    SentinelP,
    MakeByteSource,
    StringAppend,
}

/// Signature of one primitive. `tyvars` lists the universally quantified
/// variables appearing in `params`/`result`; direct applications in typed
/// code instantiate them against argument types.
#[derive(Debug, Clone)]
pub struct PrimSig {
    pub op: PrimOp,
    pub name: &'static str,
    pub tyvars: &'static [&'static str],
    pub params: Vec<Type>,
    pub result: Type,
    /// True when every value the implementation can return matches the
    /// first-order shape of `result`, for any arguments whatsoever.
    pub result_guaranteed: bool,
    /// Hidden from source programs (optimizer-internal).
    pub internal: bool,
}

fn a() -> Type {
    Type::TVar("a".into())
}
fn b() -> Type {
    Type::TVar("b".into())
}
fn list_a() -> Type {
    Type::list(a())
}

fn sig(
    op: PrimOp,
    name: &'static str,
    tyvars: &'static [&'static str],
    params: Vec<Type>,
    result: Type,
    result_guaranteed: bool,
) -> PrimSig {
    PrimSig { op, name, tyvars, params, result, result_guaranteed, internal: false }
}

/// The full primitive table, in a fixed order.
pub fn primitives() -> Vec<PrimSig> {
    use PrimOp::*;
    let mut t = vec![
        sig(Add, "+", &[], vec![Type::Real, Type::Real], Type::Real, true),
        sig(Sub, "-", &[], vec![Type::Real, Type::Real], Type::Real, true),
        sig(Mul, "*", &[], vec![Type::Real, Type::Real], Type::Real, true),
        sig(Quotient, "quotient", &[], vec![Type::Int, Type::Int], Type::Int, true),
        sig(Modulo, "modulo", &[], vec![Type::Int, Type::Int], Type::Int, true),
        sig(Lt, "<", &[], vec![Type::Real, Type::Real], Type::Bool, true),
        sig(Le, "<=", &[], vec![Type::Real, Type::Real], Type::Bool, true),
        sig(NumEq, "=", &[], vec![Type::Real, Type::Real], Type::Bool, true),
        sig(Not, "not", &[], vec![Type::Bool], Type::Bool, true),
        sig(EqualP, "equal?", &["a", "b"], vec![a(), b()], Type::Bool, true),
        // cons can build an improper pair, so its result is not guaranteed
        // to be a proper list.
        sig(Cons, "cons", &["a"], vec![a(), list_a()], list_a(), false),
        sig(First, "first", &["a"], vec![list_a()], a(), false),
        // rest of an arbitrary pair may be any value.
        sig(Rest, "rest", &["a"], vec![list_a()], list_a(), false),
        sig(EmptyP, "empty?", &["a"], vec![a()], Type::Bool, true),
        sig(ListRef, "list-ref", &["a"], vec![list_a(), Type::Int], a(), false),
        sig(Length, "length", &["a"], vec![list_a()], Type::Nat, true),
        sig(
            Map,
            "map",
            &["a", "b"],
            vec![Type::fun(vec![a()], b()), list_a()],
            Type::list(b()),
            true,
        ),
        sig(VectorRef, "vector-ref", &["a"], vec![Type::VecOf(Box::new(a())), Type::Int], a(), false),
        sig(
            VectorSet,
            "vector-set!",
            &["a"],
            vec![Type::VecOf(Box::new(a())), Type::Int, a()],
            Type::Bool,
            true,
        ),
        sig(
            VectorLength,
            "vector-length",
            &["a"],
            vec![Type::VecOf(Box::new(a()))],
            Type::Nat,
            true,
        ),
        sig(
            HashRef,
            "hash-ref",
            &["k", "v"],
            vec![
                Type::Hash { key: Box::new(Type::TVar("k".into())), val: Box::new(Type::TVar("v".into())) },
                Type::TVar("k".into()),
            ],
            Type::TVar("v".into()),
            false,
        ),
        sig(
            HashSet,
            "hash-set!",
            &["k", "v"],
            vec![
                Type::Hash { key: Box::new(Type::TVar("k".into())), val: Box::new(Type::TVar("v".into())) },
                Type::TVar("k".into()),
                Type::TVar("v".into()),
            ],
            Type::Bool,
            true,
        ),
        sig(Print, "print", &["a"], vec![a()], Type::Bool, true),
        sig(SentinelP, "sentinel?", &["a"], vec![a()], Type::Bool, true),
        // Returns a proper list whose declared element type underapproximates
        // the values inside: sentinel markers are interleaved with the ints.
        sig(MakeByteSource, "make-byte-source", &[], vec![Type::Int], Type::list(Type::Int), true),
        sig(StringAppend, "string-append", &[], vec![Type::Str, Type::Str], Type::Str, true),
    ];
    let mut unchecked = sig(
        VectorRefUnchecked,
        "vector-ref/unchecked",
        &["a"],
        vec![Type::VecOf(Box::new(a())), Type::Int],
        a(),
        false,
    );
    unchecked.internal = true;
    t.push(unchecked);
    t
}

thread_local! {
    static TABLE: Vec<PrimSig> = primitives();
}

/// Names of every primitive visible to source programs.
pub const PRIMITIVES: &[&str] = &[
    "+", "-", "*", "quotient", "modulo", "<", "<=", "=", "not", "equal?", "cons", "first",
    "rest", "empty?", "list-ref", "length", "map", "vector-ref", "vector-set!",
    "vector-length", "hash-ref", "hash-set!", "print", "sentinel?", "make-byte-source",
    "string-append",
];

pub fn prim_sig(name: &str) -> Option<PrimSig> {
    TABLE.with(|t| t.iter().find(|s| s.name == name).cloned())
}

pub fn prim_sig_of(op: PrimOp) -> PrimSig {
    TABLE.with(|t| t.iter().find(|s| s.op == op).cloned().expect("op in table"))
}

///// Type of a primitive when referenced as a value (not directly applied):
/// its quantified variables folded into nested universal types.
pub fn prim_value_type(sig: &PrimSig) -> Type {
    let mut ty = Type::Fun { params: sig.params.clone(), result: Box::new(sig.result.clone()) };
    for v in sig.tyvars.iter().rev() {
        ty = Type::Forall { var: (*v).into(), body: Box::new(ty) };
    }
    ty
}
