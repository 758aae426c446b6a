//! Global provenance map used by the blame-carrying first-order semantics.
//!
//! Trackable values (anything with heap identity: pairs, vectors, hashes,
//! records, closures, primitives-as-values, wrappers) are keyed by address.
//! Each key owns an append-only sequence of entries: a boundary entry when
//! the value itself crossed a typed/untyped seam, a link entry when it was
//! extracted from a parent container or call. Numbers, booleans and strings
//! have no identity and never enter the map; checks that fail on them walk
//! up from the parent recorded at the check site instead.
//!
//! The map only ever grows. The same value crossing two boundaries gets two
//! boundary entries, and a loop that re-imports a fresh list every pass adds
//! an entry per pass. That growth is the point: `map_size` at end of run is
//! the direct cost of remembering enough provenance to blame.

use std::collections::HashSet;
use std::fmt;
use std::rc::Rc;

use indexmap::IndexMap;

use crate::runtime::{CostCounters, Value};
use crate::shapes::{shape_matches, shape_of};
use crate::syntax::SourceLoc;
use crate::types::Type;

/// How a value was derived from its parent — the edge label of the
/// provenance trail, and the step used to navigate a boundary type down to
/// the witness's position when filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Action {
    /// i-th argument of a call (zero-based).
    Dom(usize),
    /// Result of a call.
    Cod(usize),
    /// Element of a list or vector, index unknown.
    ListElem,
    /// Tail of a proper list.
    ListRest,
    /// Element at a constant index; names the slot in a fixed vector.
    ListElemAt(i64),
    /// Key of a hash entry.
    HashKey,
    /// Value of a hash entry.
    HashValue,
    RecordField(String),
    /// Direct alias of the parent.
    Noop,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Dom(i) => write!(f, "dom({i})"),
            Action::Cod(i) => write!(f, "cod({i})"),
            Action::ListElem => write!(f, "list-elem"),
            Action::ListRest => write!(f, "list-rest"),
            Action::ListElemAt(i) => write!(f, "list-elem-at({i})"),
            Action::HashKey => write!(f, "hash-key"),
            Action::HashValue => write!(f, "hash-value"),
            Action::RecordField(name) => write!(f, "record-field({name})"),
            Action::Noop => write!(f, "noop"),
        }
    }
}

/// A boundary type with one label per position: the location of the client
/// module that sent the value, or an unblamable mark on every position that
/// sits inside a call result. A result flows from the component that defined
/// the function, not from the client that imported it, so a mismatch found
/// there can never indict the importing side of this particular boundary.
///
/// The two-valued labeling is fixed at construction time: once a position is
/// inside a result it stays unblamable, including domains of higher-order
/// results.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledType {
    pub ty: Type,
    pub client: SourceLoc,
}

/// Outcome of navigating a labeled type along an action path.
#[derive(Debug, Clone, PartialEq)]
pub enum Traversal {
    /// The path lands on a position of this type.
    At { ty: Type, blamable: bool },
    /// The path does not fit the type's structure. Filtering treats this as
    /// "cannot exonerate" and keeps the boundary.
    Mismatch,
}

impl LabeledType {
    /// Walk `path` into the type, outermost action first. Quantifiers are
    /// transparent.
    pub fn position(&self, path: &[Action]) -> Traversal {
        walk(&self.ty, path, true)
    }

    pub fn render(&self) -> String {
        render_labeled(&self.ty, true, &self.client)
    }
}

fn walk(ty: &Type, path: &[Action], blamable: bool) -> Traversal {
    let Some((first, rest)) = path.split_first() else {
        return Traversal::At { ty: ty.clone(), blamable };
    };
    if let Type::Forall { body, .. } = ty {
        return walk(body, path, blamable);
    }
    match (first, ty) {
        (Action::Noop, _) => walk(ty, rest, blamable),
        (Action::Dom(i), Type::Fun { params, .. }) if *i < params.len() => {
            walk(&params[*i], rest, blamable)
        }
        (Action::Dom(i), Type::CaseFun { branches }) => {
            for b in branches {
                if let Type::Fun { params, .. } = b {
                    if *i < params.len() {
                        return walk(&params[*i], rest, blamable);
                    }
                }
            }
            Traversal::Mismatch
        }
        (Action::Cod(_), Type::Fun { result, .. }) => walk(result, rest, false),
        (Action::Cod(_), Type::CaseFun { branches }) => match branches.first() {
            Some(Type::Fun { result, .. }) => walk(result, rest, false),
            _ => Traversal::Mismatch,
        },
        (Action::ListElem | Action::ListElemAt(_), Type::List(elem) | Type::VecOf(elem)) => {
            walk(elem, rest, blamable)
        }
        (Action::ListElemAt(i), Type::VecFixed(slots)) => {
            if *i >= 0 && (*i as usize) < slots.len() {
                walk(&slots[*i as usize], rest, blamable)
            } else {
                Traversal::Mismatch
            }
        }
        (Action::ListRest, Type::List(_)) => walk(ty, rest, blamable),
        (Action::HashKey, Type::Hash { key, .. }) => walk(key, rest, blamable),
        (Action::HashValue, Type::Hash { val, .. }) => walk(val, rest, blamable),
        (Action::RecordField(name), Type::Record { fields, .. }) => {
            match fields.iter().find(|(f, _)| f == name) {
                Some((_, fty)) => walk(fty, rest, blamable),
                None => Traversal::Mismatch,
            }
        }
        _ => Traversal::Mismatch,
    }
}

fn render_labeled(ty: &Type, blamable: bool, client: &SourceLoc) -> String {
    let label = |b: bool| if b { format!("@{}", client.render()) } else { "@-".to_string() };
    match ty {
        Type::Int => format!("Int{}", label(blamable)),
        Type::Nat => format!("Nat{}", label(blamable)),
        Type::Real => format!("Real{}", label(blamable)),
        Type::Bool => format!("Bool{}", label(blamable)),
        Type::Str => format!("Str{}", label(blamable)),
        Type::TVar(v) => format!("{v}{}", label(blamable)),
        Type::Fun { params, result } => {
            let mut parts = vec!["->".to_string()];
            parts.extend(params.iter().map(|p| render_labeled(p, blamable, client)));
            parts.push(render_labeled(result, false, client));
            format!("({})", parts.join(" "))
        }
        Type::CaseFun { branches } => {
            let mut parts = vec!["case->".to_string()];
            parts.extend(branches.iter().map(|b| render_labeled(b, blamable, client)));
            format!("({})", parts.join(" "))
        }
        Type::List(e) => format!("(Listof {})", render_labeled(e, blamable, client)),
        Type::VecFixed(slots) => {
            let mut parts = vec!["Vector".to_string()];
            parts.extend(slots.iter().map(|s| render_labeled(s, blamable, client)));
            format!("({})", parts.join(" "))
        }
        Type::VecOf(e) => format!("(Vectorof {})", render_labeled(e, blamable, client)),
        Type::Hash { key, val } => format!(
            "(Hash {} {})",
            render_labeled(key, blamable, client),
            render_labeled(val, blamable, client)
        ),
        Type::Record { tag, fields } => {
            let mut parts = vec!["Record".to_string(), tag.clone()];
            for (f, t) in fields {
                parts.push(format!("[{} {}]", f, render_labeled(t, blamable, client)));
            }
            format!("({})", parts.join(" "))
        }
        Type::Union(members) => {
            let mut parts = vec!["U".to_string()];
            parts.extend(members.iter().map(|m| render_labeled(m, blamable, client)));
            format!("({})", parts.join(" "))
        }
        Type::Forall { var, body } => {
            format!("(All ({var}) {})", render_labeled(body, blamable, client))
        }
    }
}

/// One typed/untyped crossing of one value: the type it crossed at, labeled
/// with the client side, plus the specification side. Reports print both —
/// either the value is wrong or the declared type is.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryEntry {
    pub labeled: LabeledType,
    pub spec_loc: SourceLoc,
}

impl BoundaryEntry {
    pub fn client_loc(&self) -> &SourceLoc {
        &self.labeled.client
    }

    /// One report line: `client-loc ⇄ spec-loc : labeled-type`.
    pub fn render(&self) -> String {
        format!("{} ⇄ {} : {}", self.labeled.client.render(), self.spec_loc.render(), self.labeled.render())
    }
}

#[derive(Debug, Clone)]
struct LinkEntry {
    parent: usize,
    /// Keeps the parent alive so its key is never reused by a later value.
    _pin: Value,
    action: Action,
}

#[derive(Debug, Clone)]
enum Entry {
    Boundary(Rc<BoundaryEntry>),
    Link(LinkEntry),
}

#[derive(Debug, Clone)]
struct KeyRecord {
    _pin: Value,
    entries: Vec<Entry>,
}

/// A boundary entry found by `gather`, paired with the action path from the
/// boundary type down to the witness's position (outermost action first).
#[derive(Debug, Clone)]
pub struct Gathered {
    pub entry: Rc<BoundaryEntry>,
    pub path: Vec<Action>,
}

#[derive(Debug, Default)]
pub struct BlameMap {
    records: IndexMap<usize, KeyRecord>,
}

impl BlameMap {
    pub fn new() -> Self {
        BlameMap::default()
    }

    /// Record that `v` crossed a boundary at type `ty`, sent by the module
    /// at `client` against the specification at `spec`. Counts as one map
    /// operation whether or not the value is trackable.
    pub fn record_boundary(
        &mut self,
        v: &Value,
        ty: &Type,
        client: &SourceLoc,
        spec: &SourceLoc,
        counters: &mut CostCounters,
    ) {
        counters.blame_ops += 1;
        let Some(key) = v.addr() else { return };
        let entry = Rc::new(BoundaryEntry {
            labeled: LabeledType { ty: ty.clone(), client: client.clone() },
            spec_loc: spec.clone(),
        });
        self.record_at(key, v, Entry::Boundary(entry));
    }

    /// Record that `child` was derived from `parent` by `action`. Only
    /// recorded when both have identity; a parent that never crossed a
    /// boundary is a legitimate dead end for `gather`.
    pub fn record_link(
        &mut self,
        child: &Value,
        parent: &Value,
        action: Action,
        counters: &mut CostCounters,
    ) {
        counters.blame_ops += 1;
        let (Some(child_key), Some(parent_key)) = (child.addr(), parent.addr()) else {
            return;
        };
        let link = LinkEntry { parent: parent_key, _pin: parent.clone(), action };
        self.record_at(child_key, child, Entry::Link(link));
    }

    fn record_at(&mut self, key: usize, v: &Value, entry: Entry) {
        self.records
            .entry(key)
            .or_insert_with(|| KeyRecord { _pin: v.clone(), entries: Vec::new() })
            .entries
            .push(entry);
    }

    /// Total entries across all keys — the `map_size` cost of the run.
    pub fn total_entries(&self) -> u64 {
        self.records.values().map(|r| r.entries.len() as u64).sum()
    }

    pub fn key_count(&self) -> usize {
        self.records.len()
    }

    /// Boundary entries recorded directly on `v`, in insertion order.
    pub fn boundary_entries(&self, v: &Value) -> Vec<Rc<BoundaryEntry>> {
        let Some(key) = v.addr() else { return Vec::new() };
        let Some(record) = self.records.get(&key) else { return Vec::new() };
        record
            .entries
            .iter()
            .filter_map(|e| match e {
                Entry::Boundary(b) => Some(b.clone()),
                Entry::Link(_) => None,
            })
            .collect()
    }

    /// Every boundary reachable from the witness itself, depth-first through
    /// link parents, in discovery order. Read-only: gathering twice returns
    /// the same answer.
    pub fn gather(&self, witness: &Value) -> Vec<Gathered> {
        let mut out = Vec::new();
        let mut visited = HashSet::new();
        if let Some(key) = witness.addr() {
            self.gather_key(key, &mut Vec::new(), &mut visited, &mut out);
        }
        out
    }

    /// Gather for a witness without identity: start from the parent it was
    /// extracted from and the extraction action recorded at the check site.
    pub fn gather_hop(&self, parent: &Value, action: Action) -> Vec<Gathered> {
        let mut out = Vec::new();
        let mut visited = HashSet::new();
        if let Some(key) = parent.addr() {
            self.gather_key(key, &mut vec![action], &mut visited, &mut out);
        }
        out
    }

    /// `path_rev` holds the actions from the witness up to `key`, innermost
    /// first; a boundary found here is reported with the reversed path so it
    /// can be replayed from the boundary type downward.
    fn gather_key(
        &self,
        key: usize,
        path_rev: &mut Vec<Action>,
        visited: &mut HashSet<usize>,
        out: &mut Vec<Gathered>,
    ) {
        if !visited.insert(key) {
            return;
        }
        let Some(record) = self.records.get(&key) else { return };
        for entry in &record.entries {
            match entry {
                Entry::Boundary(b) => {
                    let mut path = path_rev.clone();
                    path.reverse();
                    out.push(Gathered { entry: b.clone(), path });
                }
                Entry::Link(link) => {
                    path_rev.push(link.action.clone());
                    self.gather_key(link.parent, path_rev, visited, out);
                    path_rev.pop();
                }
            }
        }
    }
}

/// Drop every gathered boundary that provably expected something the witness
/// already satisfies. A boundary survives when the witness's position in its
/// type fails the shape test there, when the path does not fit the type at
/// all, or when the position's shape is not checkable; it is dropped when
/// the position is satisfied or sits on an unblamable result. The output is
/// always a subset of the input, and may be empty — reports then fall back
/// to the unfiltered set.
pub fn filter_blame(witness: &Value, gathered: &[Gathered]) -> Vec<Rc<BoundaryEntry>> {
    let mut kept = Vec::new();
    for g in gathered {
        match g.entry.labeled.position(&g.path) {
            Traversal::Mismatch => kept.push(g.entry.clone()),
            Traversal::At { blamable: false, .. } => {}
            Traversal::At { ty, blamable: true } => {
                let shape = shape_of(&ty);
                if shape.is_unsupported() || !shape_matches(&shape, witness) {
                    kept.push(g.entry.clone());
                }
            }
        }
    }
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::VectorData;
    use crate::syntax::SourceLoc;
    use crate::types::prim_sig;
    use std::cell::RefCell;
    use std::sync::Arc;

    fn loc(module: &str, start: usize, end: usize) -> SourceLoc {
        SourceLoc::new(Arc::from(module), start, end)
    }

    /// Any heap value works as a function stand-in; primitives are the
    /// cheapest trackable values to mint.
    fn tracked_fn() -> Value {
        Value::Primitive(Rc::new(prim_sig("not").unwrap()))
    }

    fn fresh_vector() -> Value {
        Value::Vector(Rc::new(VectorData { items: RefCell::new(Vec::new()), mutable: false }))
    }

    fn arrow(param: Type, result: Type) -> Type {
        Type::fun(vec![param], result)
    }

    #[test]
    fn shared_argument_is_filtered_down_to_the_boundary_it_violates() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let f = tracked_fn();
        let g = tracked_fn();
        let shared_list = Value::list(vec![Value::str("wolf")]);

        map.record_boundary(
            &f,
            &arrow(Type::list(Type::Str), Type::Bool),
            &loc("client", 10, 20),
            &loc("strlib", 5, 30),
            &mut counters,
        );
        map.record_boundary(
            &g,
            &arrow(Type::list(Type::Int), Type::Bool),
            &loc("client", 40, 50),
            &loc("intlib", 7, 33),
            &mut counters,
        );
        map.record_link(&shared_list, &f, Action::Dom(0), &mut counters);
        map.record_link(&shared_list, &g, Action::Dom(0), &mut counters);
        assert_eq!(counters.blame_ops, 4);

        // The failing check pulled a string element out of the shared list.
        let witness = Value::str("wolf");
        let gathered = map.gather_hop(&shared_list, Action::ListElem);
        assert_eq!(gathered.len(), 2);
        assert_eq!(gathered[0].entry.spec_loc.render(), "strlib:5-30");
        assert_eq!(gathered[1].entry.spec_loc.render(), "intlib:7-33");
        for g in &gathered {
            assert_eq!(g.path, vec![Action::Dom(0), Action::ListElem]);
        }

        // f expected list-of-Str and a string satisfies that position, so
        // only the Int-expecting boundary survives.
        let filtered = filter_blame(&witness, &gathered);
        assert_eq!(filtered.len(), 1);
        assert_eq!(filtered[0].spec_loc.render(), "intlib:7-33");
        assert_eq!(
            filtered[0].render(),
            "client:40-50 ⇄ intlib:7-33 : (-> (Listof Int@client:40-50) Bool@-)"
        );
    }

    #[test]
    fn result_positions_are_unblamable() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let h = tracked_fn();
        let produced = Value::list(vec![Value::str("oops")]);
        map.record_boundary(
            &h,
            &arrow(Type::Int, Type::list(Type::Int)),
            &loc("client", 1, 2),
            &loc("lib", 3, 4),
            &mut counters,
        );
        map.record_link(&produced, &h, Action::Cod(0), &mut counters);

        let gathered = map.gather_hop(&produced, Action::ListElem);
        assert_eq!(gathered.len(), 1);
        assert_eq!(gathered[0].path, vec![Action::Cod(0), Action::ListElem]);
        match gathered[0].entry.labeled.position(&gathered[0].path) {
            Traversal::At { ty, blamable } => {
                assert_eq!(ty, Type::Int);
                assert!(!blamable);
            }
            Traversal::Mismatch => panic!("path fits the type"),
        }

        // The element genuinely fails int?, but it came out of a result:
        // this boundary's client cannot be the culprit.
        let filtered = filter_blame(&Value::str("oops"), &gathered);
        assert!(filtered.is_empty());
    }

    #[test]
    fn structurally_impossible_paths_are_kept() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let parent = fresh_vector();
        let child = fresh_vector();
        map.record_boundary(&parent, &Type::Int, &loc("a", 0, 1), &loc("b", 2, 3), &mut counters);
        map.record_link(&child, &parent, Action::HashValue, &mut counters);

        let gathered = map.gather(&child);
        assert_eq!(gathered.len(), 1);
        // Witness satisfies int?, but hash-value into Int is no traversal at
        // all, so the boundary cannot be exonerated.
        let filtered = filter_blame(&Value::Int(1), &gathered);
        assert_eq!(filtered.len(), 1);
    }

    #[test]
    fn every_crossing_appends_its_own_entry() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let v = Value::list(vec![Value::Int(1)]);
        map.record_boundary(&v, &Type::list(Type::Int), &loc("a", 0, 1), &loc("s", 0, 1), &mut counters);
        map.record_boundary(&v, &Type::list(Type::Int), &loc("b", 2, 3), &loc("s", 0, 1), &mut counters);
        // Same boundary taken twice appends twice: the map never, ever
        // deduplicates.
        map.record_boundary(&v, &Type::list(Type::Int), &loc("b", 2, 3), &loc("s", 0, 1), &mut counters);

        let direct = map.boundary_entries(&v);
        assert_eq!(direct.len(), 3);
        assert_eq!(direct[0].client_loc().render(), "a:0-1");
        assert_eq!(direct[1].client_loc().render(), "b:2-3");
        assert_eq!(direct[2].client_loc().render(), "b:2-3");
        assert_eq!(map.total_entries(), 3);
        assert_eq!(map.key_count(), 1);

        let gathered = map.gather(&v);
        assert_eq!(gathered.len(), 3);
        assert!(gathered.iter().all(|g| g.path.is_empty()));
    }

    #[test]
    fn values_without_identity_never_enter_the_map() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let f = tracked_fn();
        map.record_boundary(&Value::Int(5), &Type::Int, &loc("a", 0, 1), &loc("s", 0, 1), &mut counters);
        map.record_boundary(&Value::str("x"), &Type::Str, &loc("a", 0, 1), &loc("s", 0, 1), &mut counters);
        map.record_link(&Value::Int(5), &f, Action::Dom(0), &mut counters);
        map.record_link(&f, &Value::Int(5), Action::Dom(0), &mut counters);

        // Four operations counted, zero entries stored.
        assert_eq!(counters.blame_ops, 4);
        assert_eq!(map.total_entries(), 0);
        assert!(map.gather(&Value::Int(5)).is_empty());
    }

    #[test]
    fn uninitialized_parents_are_dead_ends_until_seeded() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let trusted = tracked_fn();
        let produced = Value::list(vec![Value::Int(1)]);
        map.record_link(&produced, &trusted, Action::Cod(0), &mut counters);
        assert!(map.gather(&produced).is_empty());

        // Seeding the trusted function afterwards makes the same trail
        // productive; link entries don't care about recording order.
        map.record_boundary(
            &trusted,
            &arrow(Type::Int, Type::list(Type::Int)),
            &loc("prelude", 0, 0),
            &loc("builtins", 0, 0),
            &mut counters,
        );
        let gathered = map.gather(&produced);
        assert_eq!(gathered.len(), 1);
        assert_eq!(gathered[0].path, vec![Action::Cod(0)]);
    }

    #[test]
    fn link_cycles_terminate() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let a = fresh_vector();
        let b = fresh_vector();
        map.record_link(&a, &b, Action::ListElem, &mut counters);
        map.record_link(&b, &a, Action::ListElem, &mut counters);
        map.record_boundary(&b, &Type::VecOf(Box::new(Type::Int)), &loc("m", 0, 1), &loc("s", 2, 3), &mut counters);

        let gathered = map.gather(&a);
        assert_eq!(gathered.len(), 1);
        assert_eq!(gathered[0].path, vec![Action::ListElem]);
    }

    #[test]
    fn deep_extraction_chains_accumulate_the_full_path() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let f = tracked_fn();
        let outer = Value::list(vec![Value::list(vec![Value::Int(1)])]);
        let inner = Value::list(vec![Value::Int(1)]);
        map.record_boundary(
            &f,
            &arrow(Type::list(Type::list(Type::Int)), Type::Bool),
            &loc("client", 0, 9),
            &loc("lib", 0, 9),
            &mut counters,
        );
        map.record_link(&outer, &f, Action::Dom(0), &mut counters);
        map.record_link(&inner, &outer, Action::ListElem, &mut counters);

        let gathered = map.gather(&inner);
        assert_eq!(gathered.len(), 1);
        assert_eq!(gathered[0].path, vec![Action::Dom(0), Action::ListElem]);
        match gathered[0].entry.labeled.position(&gathered[0].path) {
            Traversal::At { ty, blamable } => {
                assert_eq!(ty, Type::list(Type::Int));
                assert!(blamable);
            }
            Traversal::Mismatch => panic!("path fits the type"),
        }

        // A string at an inner-list position keeps the boundary; the inner
        // list itself (which satisfies list?) would drop it.
        assert_eq!(filter_blame(&Value::str("bad"), &gathered).len(), 1);
        assert!(filter_blame(&inner, &gathered).is_empty());
    }

    #[test]
    fn fixed_vector_slots_are_navigated_by_constant_index() {
        let labeled = LabeledType {
            ty: Type::VecFixed(vec![Type::Int, Type::Str]),
            client: loc("m", 0, 1),
        };
        match labeled.position(&[Action::ListElemAt(1)]) {
            Traversal::At { ty, blamable } => {
                assert_eq!(ty, Type::Str);
                assert!(blamable);
            }
            Traversal::Mismatch => panic!("slot 1 exists"),
        }
        // Index-free element reads can't name a slot of a heterogeneous
        // vector; that is a mismatch, not a guess.
        assert_eq!(labeled.position(&[Action::ListElem]), Traversal::Mismatch);
        assert_eq!(labeled.position(&[Action::ListElemAt(7)]), Traversal::Mismatch);
    }

    #[test]
    fn gather_is_read_only() {
        let mut map = BlameMap::new();
        let mut counters = CostCounters::default();

        let v = Value::list(vec![Value::Int(1)]);
        map.record_boundary(&v, &Type::list(Type::Int), &loc("a", 0, 1), &loc("s", 0, 1), &mut counters);
        let first = map.gather(&v);
        let second = map.gather(&v);
        assert_eq!(first.len(), second.len());
        assert_eq!(map.total_entries(), 1);
    }

    /// Brute-force mirror: every boundary whose key is reachable from the
    /// start along recorded links must be gathered, and nothing else.
    #[test]
    fn random_link_graphs_match_brute_force_reachability() {
        let mut seed: u64 = 0x00c0_ffee;
        let mut next = move || {
            // xorshift64*; plenty for test-case shuffling.
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            seed
        };

        for _ in 0..40 {
            let n = 4 + (next() % 12) as usize;
            let values: Vec<Value> = (0..n).map(|_| fresh_vector()).collect();
            let mut map = BlameMap::new();
            let mut counters = CostCounters::default();

            // Mirror adjacency + boundary flags, maintained independently.
            let mut links: Vec<Vec<usize>> = vec![Vec::new(); n];
            let mut has_boundary = vec![false; n];

            for child in 0..n {
                for parent in (child + 1)..n {
                    if next() % 3 == 0 {
                        map.record_link(&values[child], &values[parent], Action::ListElem, &mut counters);
                        links[child].push(parent);
                    }
                }
            }
            for (i, v) in values.iter().enumerate() {
                if next() % 2 == 0 {
                    map.record_boundary(
                        &v.clone(),
                        &Type::VecOf(Box::new(Type::Int)),
                        &loc("client", i, i + 1),
                        &loc("spec", i, i + 1),
                        &mut counters,
                    );
                    has_boundary[i] = true;
                }
            }

            for start in 0..n {
                let mut reachable = Vec::new();
                let mut stack = vec![start];
                let mut seen = vec![false; n];
                while let Some(k) = stack.pop() {
                    if seen[k] {
                        continue;
                    }
                    seen[k] = true;
                    if has_boundary[k] {
                        reachable.push(k);
                    }
                    for &p in &links[k] {
                        stack.push(p);
                    }
                }

                let gathered = map.gather(&values[start]);
                let mut got: Vec<usize> = gathered
                    .iter()
                    .map(|g| g.entry.spec_loc.start)
                    .collect();
                got.sort_unstable();
                reachable.sort_unstable();
                assert_eq!(got, reachable);
            }
        }
    }
}
