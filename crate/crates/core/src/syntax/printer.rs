//! Surface-syntax printer. `parse_program` of the printed text is
//! structurally equal to the original (node ids and source spans differ).

use std::fmt::Write;

use super::ast::*;
use crate::types::Type;

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn real_text(r: f64) -> String {
    if r.fract() == 0.0 && r.is_finite() && r.abs() < 1e15 {
        format!("{r:.1}")
    } else {
        format!("{r}")
    }
}

fn param_text(p: &Param) -> String {
    match &p.ty {
        Some(t) => format!("[{} : {}]", p.name, t.render()),
        None => p.name.clone(),
    }
}

fn clause_text(c: &LambdaClause) -> String {
    let params: Vec<String> = c.params.iter().map(param_text).collect();
    let res = match &c.result {
        Some(t) => format!(" : {}", t.render()),
        None => String::new(),
    };
    format!("({}){} {}", params.join(" "), res, term_text(&c.body))
}

fn binding_text(name: &str, ty: &Option<Type>, e: &Term) -> String {
    match ty {
        Some(t) => format!("[{} : {} {}]", name, t.render(), term_text(e)),
        None => format!("[{} {}]", name, term_text(e)),
    }
}

fn for_text(form: &str, ann: &Option<ForAnn>, var: &str, source: &Term, body: &Term) -> String {
    match ann {
        Some(a) => format!(
            "({form} : {} ([{var} : {} {}]) {})",
            a.result.render(),
            a.elem.render(),
            term_text(source),
            term_text(body)
        ),
        None => format!("({form} ([{var} {}]) {})", term_text(source), term_text(body)),
    }
}

pub fn term_text(t: &Term) -> String {
    match &t.kind {
        TermKind::IntLit(i) => i.to_string(),
        TermKind::RealLit(r) => real_text(*r),
        TermKind::BoolLit(true) => "#true".to_string(),
        TermKind::BoolLit(false) => "#false".to_string(),
        TermKind::StrLit(s) => escape(s),
        TermKind::Var(x) => x.clone(),
        TermKind::Lambda { clauses } => {
            if clauses.len() == 1 {
                format!("(lambda {})", clause_text(&clauses[0]))
            } else {
                let cs: Vec<String> =
                    clauses.iter().map(|c| format!("[{}]", clause_text(c))).collect();
                format!("(case-lambda {})", cs.join(" "))
            }
        }
        TermKind::App { op, args } => {
            let mut parts = vec![term_text(op)];
            parts.extend(args.iter().map(|a| term_text(a)));
            format!("({})", parts.join(" "))
        }
        TermKind::If { cond, then_, else_ } => {
            format!("(if {} {} {})", term_text(cond), term_text(then_), term_text(else_))
        }
        TermKind::Let { bindings, body } => {
            let bs: Vec<String> =
                bindings.iter().map(|(n, ty, e)| binding_text(n, ty, e)).collect();
            format!("(let ({}) {})", bs.join(" "), term_text(body))
        }
        TermKind::Letrec { name, func, body } => {
            format!("(letrec ([{} {}]) {})", name, term_text(func), term_text(body))
        }
        TermKind::ListCtor(items) => {
            let xs: Vec<String> = items.iter().map(|i| term_text(i)).collect();
            if xs.is_empty() {
                "(list)".to_string()
            } else {
                format!("(list {})", xs.join(" "))
            }
        }
        TermKind::VectorCtor { items, mutable } => {
            let head = if *mutable { "mutable-vector" } else { "vector" };
            let xs: Vec<String> = items.iter().map(|i| term_text(i)).collect();
            if xs.is_empty() {
                format!("({head})")
            } else {
                format!("({head} {})", xs.join(" "))
            }
        }
        TermKind::HashCtor(pairs) => {
            let xs: Vec<String> = pairs
                .iter()
                .map(|(k, v)| format!("{} {}", term_text(k), term_text(v)))
                .collect();
            if xs.is_empty() {
                "(hash)".to_string()
            } else {
                format!("(hash {})", xs.join(" "))
            }
        }
        TermKind::RecordCtor { tag, fields } => {
            let xs: Vec<String> =
                fields.iter().map(|(n, e)| format!("[{} {}]", n, term_text(e))).collect();
            if xs.is_empty() {
                format!("(record {tag})")
            } else {
                format!("(record {tag} {})", xs.join(" "))
            }
        }
        TermKind::RecordRef { expr, field } => {
            format!("(record-ref {} {})", term_text(expr), field)
        }
        TermKind::Cast { expr, ty } => format!("(cast {} {})", term_text(expr), ty.render()),
        TermKind::Inst { expr, ty } => format!("(inst {} {})", term_text(expr), ty.render()),
        TermKind::ForSum { ann, var, source, body } => for_text("for/sum", ann, var, source, body),
        TermKind::ForSkip { ann, var, source, body } => {
            for_text("for/skip", ann, var, source, body)
        }
    }
}

pub fn print_module(m: &ModuleDecl) -> String {
    let lang = match m.lang {
        Lang::Typed => "typed",
        Lang::Untyped => "untyped",
        Lang::Configurable => "configurable",
    };
    let mut out = String::new();
    let _ = write!(out, "(module {} {}", m.name, lang);
    for i in &m.imports {
        out.push_str("\n  ");
        match &i.declared_type {
            Some(t) => {
                let _ = write!(out, "(require/typed {} {} {})", i.source_module, i.binding, t.render());
            }
            None => {
                let _ = write!(out, "(require {} {})", i.source_module, i.binding);
            }
        }
    }
    for d in &m.defs {
        out.push_str("\n  ");
        match &d.ty {
            Some(t) => {
                let _ = write!(out, "(define {} : {} {})", d.name, t.render(), term_text(&d.expr));
            }
            None => {
                let _ = write!(out, "(define {} {})", d.name, term_text(&d.expr));
            }
        }
    }
    out.push(')');
    out
}

pub fn print_program(p: &Program) -> String {
    let mods: Vec<String> = p.modules.iter().map(print_module).collect();
    let mut out = mods.join("\n\n");
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::syntax::parser::parse_program;

    #[test]
    fn printed_fixtures_reparse_to_equal_programs() {
        for src in fixtures::ALL {
            let p = parse_program(src).unwrap();
            let printed = print_program(&p);
            let q = parse_program(&printed).unwrap_or_else(|e| {
                panic!("reparse failed: {e}\n{printed}");
            });
            assert!(p.structurally_eq(&q), "round trip changed structure:\n{printed}");
        }
    }

    #[test]
    fn string_escapes_round_trip() {
        let src = r#"(module m untyped (define s "a \"b\" \\ c"))"#;
        let p = parse_program(src).unwrap();
        let q = parse_program(&print_program(&p)).unwrap();
        assert!(p.structurally_eq(&q));
    }

    #[test]
    fn reals_keep_their_point() {
        let p = parse_program("(module m untyped (define x 2.0))").unwrap();
        let printed = print_program(&p);
        assert!(printed.contains("2.0"), "{printed}");
        let q = parse_program(&printed).unwrap();
        assert!(p.structurally_eq(&q));
    }
}
