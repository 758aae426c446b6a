//! Loop expansion. Surface `for/sum` and `for/skip` become single-binding
//! `letrec` recursion over the source list. Every introduced node carries the
//! loop form's span marked `Origin::Desugared`; user subterms (the source and
//! the body) pass through untouched, ids included.

use std::sync::Arc;

use super::ast::*;
use crate::types::Type;

struct Fresh<'a> {
    next_id: &'a mut u32,
}

impl Fresh<'_> {
    fn mk(&mut self, loc: &SourceLoc, kind: TermKind) -> Arc<Term> {
        let id = NodeId(*self.next_id);
        *self.next_id += 1;
        Arc::new(Term { id, loc: loc.clone(), kind })
    }

    fn var(&mut self, loc: &SourceLoc, name: &str) -> Arc<Term> {
        self.mk(loc, TermKind::Var(name.to_string()))
    }

    fn app(&mut self, loc: &SourceLoc, op: &str, args: Vec<Arc<Term>>) -> Arc<Term> {
        let op = self.var(loc, op);
        self.mk(loc, TermKind::App { op, args })
    }
}

/// Expand one loop form whose source and body are already kernel terms.
fn expand_loop(
    skip: bool,
    id: NodeId,
    loc: &SourceLoc,
    ann: &Option<ForAnn>,
    var: &str,
    source: Arc<Term>,
    body: Arc<Term>,
    f: &mut Fresh,
) -> Arc<Term> {
    let d = loc.desugared();
    let loop_name = format!("loop%{}", id.0);
    let list_name = format!("l%{}", id.0);
    let acc_name = format!("acc%{}", id.0);

    // (+ acc body)
    let acc_ref = f.var(&d, &acc_name);
    let add = f.app(&d, "+", vec![acc_ref, body]);

    // (loop (rest l) (+ acc body))
    let rest = {
        let l = f.var(&d, &list_name);
        f.app(&d, "rest", vec![l])
    };
    let advance = {
        let op = f.var(&d, &loop_name);
        f.mk(&d, TermKind::App { op, args: vec![rest, add] })
    };

    let step = if skip {
        // (if (sentinel? x) (loop (rest l) acc) (loop (rest l) (+ acc body)))
        let x = f.var(&d, var);
        let test = f.app(&d, "sentinel?", vec![x]);
        let rest2 = {
            let l = f.var(&d, &list_name);
            f.app(&d, "rest", vec![l])
        };
        let acc2 = f.var(&d, &acc_name);
        let pass = {
            let op = f.var(&d, &loop_name);
            f.mk(&d, TermKind::App { op, args: vec![rest2, acc2] })
        };
        f.mk(&d, TermKind::If { cond: test, then_: pass, else_: advance })
    } else {
        advance
    };

    // (let ([x (first l)]) step)
    let first = {
        let l = f.var(&d, &list_name);
        f.app(&d, "first", vec![l])
    };
    let bind_elem = f.mk(
        &d,
        TermKind::Let { bindings: vec![(var.to_string(), None, first)], body: step },
    );

    // (if (empty? l) acc bind_elem)
    let empty = {
        let l = f.var(&d, &list_name);
        f.app(&d, "empty?", vec![l])
    };
    let acc_done = f.var(&d, &acc_name);
    let dispatch = f.mk(&d, TermKind::If { cond: empty, then_: acc_done, else_: bind_elem });

    let (list_ty, acc_ty, result_ty) = match ann {
        Some(a) => (
            Some(Type::list(a.elem.clone())),
            Some(a.result.clone()),
            Some(a.result.clone()),
        ),
        None => (None, None, None),
    };
    let lambda = f.mk(
        &d,
        TermKind::Lambda {
            clauses: vec![LambdaClause {
                params: vec![
                    Param { name: list_name, ty: list_ty },
                    Param { name: acc_name, ty: acc_ty },
                ],
                result: result_ty,
                body: dispatch,
            }],
        },
    );

    // (letrec ([loop lambda]) (loop source 0))
    let zero = f.mk(&d, TermKind::IntLit(0));
    let kick = {
        let op = f.var(&d, &loop_name);
        f.mk(&d, TermKind::App { op, args: vec![source, zero] })
    };
    f.mk(&d, TermKind::Letrec { name: loop_name, func: lambda, body: kick })
}

fn desugar_term(t: &Arc<Term>, f: &mut Fresh) -> Arc<Term> {
    if t.is_kernel() {
        return t.clone();
    }
    let rebuilt = |kind| Arc::new(Term { id: t.id, loc: t.loc.clone(), kind });
    match &t.kind {
        TermKind::ForSum { ann, var, source, body } => {
            let source = desugar_term(source, f);
            let body = desugar_term(body, f);
            expand_loop(false, t.id, &t.loc, ann, var, source, body, f)
        }
        TermKind::ForSkip { ann, var, source, body } => {
            let source = desugar_term(source, f);
            let body = desugar_term(body, f);
            expand_loop(true, t.id, &t.loc, ann, var, source, body, f)
        }
        TermKind::Lambda { clauses } => rebuilt(TermKind::Lambda {
            clauses: clauses
                .iter()
                .map(|c| LambdaClause {
                    params: c.params.clone(),
                    result: c.result.clone(),
                    body: desugar_term(&c.body, f),
                })
                .collect(),
        }),
        TermKind::App { op, args } => rebuilt(TermKind::App {
            op: desugar_term(op, f),
            args: args.iter().map(|a| desugar_term(a, f)).collect(),
        }),
        TermKind::If { cond, then_, else_ } => rebuilt(TermKind::If {
            cond: desugar_term(cond, f),
            then_: desugar_term(then_, f),
            else_: desugar_term(else_, f),
        }),
        TermKind::Let { bindings, body } => rebuilt(TermKind::Let {
            bindings: bindings
                .iter()
                .map(|(n, ty, e)| (n.clone(), ty.clone(), desugar_term(e, f)))
                .collect(),
            body: desugar_term(body, f),
        }),
        TermKind::Letrec { name, func, body } => rebuilt(TermKind::Letrec {
            name: name.clone(),
            func: desugar_term(func, f),
            body: desugar_term(body, f),
        }),
        TermKind::ListCtor(items) => {
            rebuilt(TermKind::ListCtor(items.iter().map(|i| desugar_term(i, f)).collect()))
        }
        TermKind::VectorCtor { items, mutable } => rebuilt(TermKind::VectorCtor {
            items: items.iter().map(|i| desugar_term(i, f)).collect(),
            mutable: *mutable,
        }),
        TermKind::HashCtor(pairs) => rebuilt(TermKind::HashCtor(
            pairs
                .iter()
                .map(|(k, v)| (desugar_term(k, f), desugar_term(v, f)))
                .collect(),
        )),
        TermKind::RecordCtor { tag, fields } => rebuilt(TermKind::RecordCtor {
            tag: tag.clone(),
            fields: fields.iter().map(|(n, e)| (n.clone(), desugar_term(e, f))).collect(),
        }),
        TermKind::RecordRef { expr, field } => rebuilt(TermKind::RecordRef {
            expr: desugar_term(expr, f),
            field: field.clone(),
        }),
        TermKind::Cast { expr, ty } => {
            rebuilt(TermKind::Cast { expr: desugar_term(expr, f), ty: ty.clone() })
        }
        TermKind::Inst { expr, ty } => {
            rebuilt(TermKind::Inst { expr: desugar_term(expr, f), ty: ty.clone() })
        }
        // kernel leaves are caught by the is_kernel fast path above
        _ => t.clone(),
    }
}

/// Desugar one module. Modules already in kernel form come back unchanged,
/// node ids included, so the pass is idempotent.
pub fn desugar_module(m: &ModuleDecl, next_id: &mut u32) -> ModuleDecl {
    if m.is_kernel() {
        return m.clone();
    }
    let mut f = Fresh { next_id };
    let defs = m
        .defs
        .iter()
        .map(|d| Definition {
            name: d.name.clone(),
            ty: d.ty.clone(),
            expr: desugar_term(&d.expr, &mut f),
            loc: d.loc.clone(),
        })
        .collect();
    ModuleDecl {
        name: m.name.clone(),
        lang: m.lang,
        imports: m.imports.clone(),
        defs,
        loc: m.loc.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parser::parse_program;

    fn find_loop_id(p: &Program) -> NodeId {
        let mut found = None;
        for m in &p.modules {
            for d in &m.defs {
                d.expr.walk(&mut |t| {
                    if matches!(t.kind, TermKind::ForSum { .. } | TermKind::ForSkip { .. }) {
                        found = Some(t.id);
                    }
                });
            }
        }
        found.expect("no loop in program")
    }

    #[test]
    fn sum_loop_expands_to_the_expected_letrec() {
        let p = parse_program(
            "(module m typed (define x : Int (for/sum : Int ([i : Int (list 1 2)]) (* i i))))",
        )
        .unwrap();
        let n = find_loop_id(&p).0;
        let d = p.desugar();
        let expected_src = format!(
            "(module m typed (define x : Int \
               (letrec ([loop%{n} (lambda ([l%{n} : (Listof Int)] [acc%{n} : Int]) : Int \
                  (if (empty? l%{n}) acc%{n} \
                      (let ([i (first l%{n})]) \
                        (loop%{n} (rest l%{n}) (+ acc%{n} (* i i))))))]) \
                 (loop%{n} (list 1 2) 0))))"
        );
        let expected = parse_program(&expected_src).unwrap();
        assert!(
            d.structurally_eq(&expected),
            "got:\n{}",
            crate::syntax::print_program(&d)
        );
    }

    #[test]
    fn skip_loop_tests_the_sentinel_before_the_body() {
        let p = parse_program(
            "(module m untyped (define x (for/skip ([i (list 1 2)]) i)))",
        )
        .unwrap();
        let n = find_loop_id(&p).0;
        let d = p.desugar();
        let expected_src = format!(
            "(module m untyped (define x \
               (letrec ([loop%{n} (lambda (l%{n} acc%{n}) \
                  (if (empty? l%{n}) acc%{n} \
                      (let ([i (first l%{n})]) \
                        (if (sentinel? i) \
                            (loop%{n} (rest l%{n}) acc%{n}) \
                            (loop%{n} (rest l%{n}) (+ acc%{n} i))))))]) \
                 (loop%{n} (list 1 2) 0))))"
        );
        let expected = parse_program(&expected_src).unwrap();
        assert!(
            d.structurally_eq(&expected),
            "got:\n{}",
            crate::syntax::print_program(&d)
        );
    }

    #[test]
    fn introduced_nodes_are_marked_and_user_nodes_are_not() {
        let p = parse_program(
            "(module m untyped (define x (for/sum ([i (list 1 2)]) (* i 2))))",
        )
        .unwrap();
        let d = p.desugar();
        let mut desugared = 0;
        let mut user = 0;
        d.modules[0].defs[0].expr.walk(&mut |t| match t.loc.origin {
            Origin::Desugared => desugared += 1,
            Origin::User => user += 1,
        });
        assert!(desugared > 0);
        // user nodes: (list 1 2) = 3, (* i 2) = 4
        assert_eq!(user, 7);
        // all ids unique and below the advanced counter
        let mut ids = Vec::new();
        d.modules[0].defs[0].expr.walk(&mut |t| ids.push(t.id));
        let n = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), n);
        assert!(ids.iter().all(|i| i.0 < d.next_id));
    }

    #[test]
    fn kernel_modules_come_back_identical() {
        let p = parse_program(
            "(module m typed (define (f [x : Int]) : Int (+ x 1)) (define main : Int (f 2)))",
        )
        .unwrap();
        let d = p.desugar();
        assert!(std::sync::Arc::ptr_eq(&p.modules[0].defs[0].expr, &d.modules[0].defs[0].expr));
        assert_eq!(p.next_id, d.next_id);
        let dd = d.desugar();
        assert!(d.structurally_eq(&dd));
        assert_eq!(d.next_id, dd.next_id);
    }

    #[test]
    fn nested_loops_expand_inside_out() {
        let p = parse_program(
            "(module m untyped (define x (for/sum ([xs (list (list 1) (list 2))]) (for/sum ([y xs]) y))))",
        )
        .unwrap();
        let d = p.desugar();
        assert!(d.modules[0].is_kernel());
        let printed = crate::syntax::print_program(&d);
        let q = parse_program(&printed).unwrap();
        assert!(d.structurally_eq(&q));
    }
}
