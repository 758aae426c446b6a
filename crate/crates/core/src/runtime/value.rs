//! Runtime values and environments. Values are `Rc`-shared and confined to
//! the thread that runs the program; only rendered summaries leave it.
//!
//! Heap-allocated values (pairs, vectors, hashes, records, closures,
//! primitives, wrappers) have a stable address that doubles as their
//! identity for the ownership map and for the list-spine cache. Primitives
//! are allocated exactly once per run so that the same primitive observed
//! twice is the same value.

use std::cell::RefCell;
use std::rc::Rc;
use std::sync::Arc;

use crate::natural::WrapData;
use crate::syntax::{LambdaClause, NodeId, SourceLoc};
use crate::types::PrimSig;

/// Per-run cost and footprint counters. `steps` approximates work (one tick
/// per evaluated node, per list-spine cell visited, and per bounds check);
/// the rest count checks, allocations, and map traffic directly.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub shape_checks: u64,
    pub flat_checks: u64,
    pub wrappers_allocated: u64,
    pub wrapped_calls: u64,
    pub blame_ops: u64,
    pub steps: u64,
    /// Final ownership-map entry count (set once at the end of a run).
    pub map_size: u64,
}

#[derive(Debug)]
pub struct VectorData {
    pub items: RefCell<Vec<Value>>,
    pub mutable: bool,
}

#[derive(Debug)]
pub struct HashData {
    /// Association vector in insertion order; keys compared structurally.
    pub entries: RefCell<Vec<(Value, Value)>>,
}

#[derive(Debug)]
pub struct RecordData {
    pub tag: String,
    pub fields: Vec<(String, Value)>,
}

#[derive(Debug)]
pub struct ClosureData {
    pub clauses: Vec<LambdaClause>,
    pub env: Env,
    /// Binding name, when the closure was created by a definition or a
    /// named recursive binding. Printing only.
    pub name: RefCell<Option<String>>,
    pub module: Arc<str>,
    pub module_typed: bool,
    pub lambda_id: NodeId,
    pub loc: SourceLoc,
}

#[derive(Debug, Clone)]
pub enum Value {
    Int(i64),
    Real(f64),
    Bool(bool),
    Str(Rc<str>),
    /// The in-band gap marker produced by byte sources.
    Sentinel,
    EmptyList,
    Pair(Rc<(Value, Value)>),
    Vector(Rc<VectorData>),
    Hash(Rc<HashData>),
    Record(Rc<RecordData>),
    Closure(Rc<ClosureData>),
    Primitive(Rc<PrimSig>),
    /// A value guarded by a higher-order contract (deep mode only).
    Wrapped(Rc<WrapData>),
}

impl Value {
    pub fn str(s: impl Into<Rc<str>>) -> Value {
        Value::Str(s.into())
    }

    pub fn list(items: impl IntoIterator<Item = Value>) -> Value {
        let items: Vec<Value> = items.into_iter().collect();
        let mut out = Value::EmptyList;
        for v in items.into_iter().rev() {
            out = Value::Pair(Rc::new((v, out)));
        }
        out
    }

    /// Heap identity, for values that have one. This is the key space of the
    /// ownership map and of the spine cache; atoms are untracked.
    pub fn addr(&self) -> Option<usize> {
        match self {
            Value::Pair(r) => Some(Rc::as_ptr(r) as usize),
            Value::Vector(r) => Some(Rc::as_ptr(r) as usize),
            Value::Hash(r) => Some(Rc::as_ptr(r) as usize),
            Value::Record(r) => Some(Rc::as_ptr(r) as usize),
            Value::Closure(r) => Some(Rc::as_ptr(r) as usize),
            Value::Primitive(r) => Some(Rc::as_ptr(r) as usize),
            Value::Wrapped(r) => Some(Rc::as_ptr(r) as usize),
            _ => None,
        }
    }

    /// Strip contract wrappers; the underlying value drives printing,
    /// structural equality, and shape tests.
    pub fn unwrap_all(&self) -> &Value {
        let mut v = self;
        while let Value::Wrapped(w) = v {
            v = &w.inner;
        }
        v
    }

    pub fn is_false(&self) -> bool {
        matches!(self.unwrap_all(), Value::Bool(false))
    }
}

fn real_text(r: f64) -> String {
    if r.fract() == 0.0 && r.is_finite() && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

fn print_into(v: &Value, out: &mut String, depth: usize, limit: Option<usize>) {
    if depth > 48 {
        out.push_str("...");
        return;
    }
    match v.unwrap_all() {
        Value::Int(i) => out.push_str(&i.to_string()),
        Value::Real(r) => out.push_str(&real_text(*r)),
        Value::Bool(true) => out.push_str("#true"),
        Value::Bool(false) => out.push_str("#false"),
        Value::Str(s) => out.push_str(s),
        Value::Sentinel => out.push_str("#<sentinel>"),
        Value::EmptyList => out.push_str("()"),
        Value::Pair(_) => {
            out.push('(');
            let mut cur = v.unwrap_all().clone();
            let mut n = 0;
            loop {
                if let Some(max) = limit {
                    if n >= max {
                        if n > 0 {
                            out.push(' ');
                        }
                        out.push_str("...");
                        break;
                    }
                }
                match cur.unwrap_all().clone() {
                    Value::Pair(p) => {
                        if n > 0 {
                            out.push(' ');
                        }
                        print_into(&p.0, out, depth + 1, limit);
                        cur = p.1.clone();
                        n += 1;
                    }
                    Value::EmptyList => break,
                    tail => {
                        out.push_str(" . ");
                        print_into(&tail, out, depth + 1, limit);
                        break;
                    }
                }
            }
            out.push(')');
        }
        Value::Vector(d) => {
            out.push_str("#(");
            for (i, item) in d.items.borrow().iter().enumerate() {
                if let Some(max) = limit {
                    if i >= max {
                        out.push_str(" ...");
                        break;
                    }
                }
                if i > 0 {
                    out.push(' ');
                }
                print_into(item, out, depth + 1, limit);
            }
            out.push(')');
        }
        Value::Hash(d) => {
            out.push_str("(hash");
            for (i, (k, val)) in d.entries.borrow().iter().enumerate() {
                if let Some(max) = limit {
                    if i >= max {
                        out.push_str(" ...");
                        break;
                    }
                }
                out.push(' ');
                print_into(k, out, depth + 1, limit);
                out.push(' ');
                print_into(val, out, depth + 1, limit);
            }
            out.push(')');
        }
        Value::Record(d) => {
            out.push_str("(record ");
            out.push_str(&d.tag);
            for (n, val) in &d.fields {
                out.push_str(" [");
                out.push_str(n);
                out.push(' ');
                print_into(val, out, depth + 1, limit);
                out.push(']');
            }
            out.push(')');
        }
        Value::Closure(d) => match d.name.borrow().as_deref() {
            Some(n) => {
                out.push_str("#<procedure:");
                out.push_str(n);
                out.push('>');
            }
            None => out.push_str("#<procedure>"),
        },
        Value::Primitive(sig) => {
            out.push_str("#<procedure:");
            out.push_str(sig.name);
            out.push('>');
        }
        Value::Wrapped(_) => unreachable!("unwrap_all strips wrappers"),
    }
}

/// Full rendering, display style (strings print bare).
pub fn print_value(v: &Value) -> String {
    let mut s = String::new();
    print_into(v, &mut s, 0, None);
    s
}

/// Abbreviated rendering for error messages: at most three elements per
/// container level.
pub fn sketch(v: &Value) -> String {
    let mut s = String::new();
    print_into(v, &mut s, 0, Some(3));
    s
}

/// Structural equality. Wrappers are transparent; closures and primitives
/// compare by identity; hashes compare as key/value sets.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a.unwrap_all(), b.unwrap_all()) {
        (Value::Int(x), Value::Int(y)) => x == y,
        (Value::Real(x), Value::Real(y)) => x == y,
        (Value::Bool(x), Value::Bool(y)) => x == y,
        (Value::Str(x), Value::Str(y)) => x == y,
        (Value::Sentinel, Value::Sentinel) => true,
        (Value::EmptyList, Value::EmptyList) => true,
        (Value::Pair(x), Value::Pair(y)) => {
            Rc::ptr_eq(x, y) || (values_equal(&x.0, &y.0) && values_equal(&x.1, &y.1))
        }
        (Value::Vector(x), Value::Vector(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let xs = x.items.borrow();
            let ys = y.items.borrow();
            xs.len() == ys.len() && xs.iter().zip(ys.iter()).all(|(p, q)| values_equal(p, q))
        }
        (Value::Hash(x), Value::Hash(y)) => {
            if Rc::ptr_eq(x, y) {
                return true;
            }
            let xs = x.entries.borrow();
            let ys = y.entries.borrow();
            xs.len() == ys.len()
                && xs.iter().all(|(k, v)| {
                    ys.iter().any(|(k2, v2)| values_equal(k, k2) && values_equal(v, v2))
                })
        }
        (Value::Record(x), Value::Record(y)) => {
            Rc::ptr_eq(x, y)
                || (x.tag == y.tag
                    && x.fields.len() == y.fields.len()
                    && x.fields.iter().all(|(n, v)| {
                        y.fields.iter().any(|(n2, v2)| n == n2 && values_equal(v, v2))
                    }))
        }
        (Value::Closure(x), Value::Closure(y)) => Rc::ptr_eq(x, y),
        (Value::Primitive(x), Value::Primitive(y)) => Rc::ptr_eq(x, y),
        _ => false,
    }
}

// --- environments ------------------------------------------------------------

#[derive(Debug)]
enum Slot {
    Filled(Value),
    /// Declared but not yet evaluated (module definitions during load).
    Pending,
}

#[derive(Debug)]
pub struct Frame {
    slots: RefCell<Vec<(String, Slot)>>,
    parent: Option<Env>,
}

#[derive(Debug, Clone)]
pub struct Env(Rc<Frame>);

pub enum Lookup {
    Found(Value),
    /// Forward reference to a definition still being loaded.
    Uninitialized,
    Missing,
}

impl Env {
    pub fn root() -> Env {
        Env(Rc::new(Frame { slots: RefCell::new(Vec::new()), parent: None }))
    }

    pub fn child(&self) -> Env {
        Env(Rc::new(Frame { slots: RefCell::new(Vec::new()), parent: Some(self.clone()) }))
    }

    pub fn define(&self, name: impl Into<String>, value: Value) {
        self.0.slots.borrow_mut().push((name.into(), Slot::Filled(value)));
    }

    pub fn declare(&self, name: impl Into<String>) {
        self.0.slots.borrow_mut().push((name.into(), Slot::Pending));
    }

    /// Fill a declared slot (or redefine). Used while loading a module's
    /// definitions in order.
    pub fn fill(&self, name: &str, value: Value) {
        let mut slots = self.0.slots.borrow_mut();
        if let Some((_, s)) = slots.iter_mut().rev().find(|(n, _)| n == name) {
            *s = Slot::Filled(value);
        } else {
            slots.push((name.to_string(), Slot::Filled(value)));
        }
    }

    pub fn lookup(&self, name: &str) -> Lookup {
        let mut frame = &self.0;
        loop {
            {
                let slots = frame.slots.borrow();
                if let Some((_, s)) = slots.iter().rev().find(|(n, _)| n == name) {
                    return match s {
                        Slot::Filled(v) => Lookup::Found(v.clone()),
                        Slot::Pending => Lookup::Uninitialized,
                    };
                }
            }
            match &frame.parent {
                Some(p) => frame = &p.0,
                None => return Lookup::Missing,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_follows_display_conventions() {
        let l = Value::list([Value::Int(1), Value::Int(2), Value::Int(3)]);
        assert_eq!(print_value(&l), "(1 2 3)");
        let improper = Value::Pair(Rc::new((Value::Int(1), Value::Int(2))));
        assert_eq!(print_value(&improper), "(1 . 2)");
        let v = Value::Vector(Rc::new(VectorData {
            items: RefCell::new(vec![Value::Int(1), Value::str("two")]),
            mutable: false,
        }));
        assert_eq!(print_value(&v), "#(1 two)");
        assert_eq!(print_value(&Value::Real(2.0)), "2.0");
        assert_eq!(print_value(&Value::Bool(true)), "#true");
        assert_eq!(print_value(&Value::Sentinel), "#<sentinel>");
        assert_eq!(print_value(&Value::EmptyList), "()");
    }

    #[test]
    fn sketches_truncate_long_structures() {
        let l = Value::list((0..10).map(Value::Int));
        assert_eq!(sketch(&l), "(0 1 2 ...)");
    }

    #[test]
    fn equality_is_structural_for_data_and_identity_for_code() {
        let a = Value::list([Value::Int(1), Value::str("x")]);
        let b = Value::list([Value::Int(1), Value::str("x")]);
        assert!(values_equal(&a, &b));
        assert!(!values_equal(&Value::Int(1), &Value::Real(1.0)));
        let h1 = Value::Hash(Rc::new(HashData {
            entries: RefCell::new(vec![
                (Value::str("a"), Value::Int(1)),
                (Value::str("b"), Value::Int(2)),
            ]),
        }));
        let h2 = Value::Hash(Rc::new(HashData {
            entries: RefCell::new(vec![
                (Value::str("b"), Value::Int(2)),
                (Value::str("a"), Value::Int(1)),
            ]),
        }));
        assert!(values_equal(&h1, &h2));
    }

    #[test]
    fn environment_shadows_and_reports_pending_slots() {
        let root = Env::root();
        root.define("x", Value::Int(1));
        let inner = root.child();
        inner.define("x", Value::Int(2));
        assert!(matches!(inner.lookup("x"), Lookup::Found(Value::Int(2))));
        assert!(matches!(root.lookup("x"), Lookup::Found(Value::Int(1))));
        root.declare("later");
        assert!(matches!(inner.lookup("later"), Lookup::Uninitialized));
        root.fill("later", Value::Int(3));
        assert!(matches!(inner.lookup("later"), Lookup::Found(Value::Int(3))));
        assert!(matches!(inner.lookup("ghost"), Lookup::Missing));
    }

    #[test]
    fn identity_keys_are_stable_and_atoms_have_none() {
        let p = Value::list([Value::Int(1)]);
        let a1 = p.addr().unwrap();
        let a2 = p.clone().addr().unwrap();
        assert_eq!(a1, a2);
        assert_eq!(Value::Int(5).addr(), None);
        assert_eq!(Value::str("s").addr(), None);
        assert_eq!(Value::EmptyList.addr(), None);
        assert_eq!(Value::Sentinel.addr(), None);
    }
}
