//! S-expression reader. Produces a datum tree with character spans; the
//! parser in `parser.rs` turns datums into the module AST.
//!
//! Lexical rules: `(`/`[` open lists (close must match kind), `;` comments to
//! end of line, strings accept exactly the escapes `\"` and `\\`, everything
//! else between delimiters is an atom. Offsets count characters.

use super::parser::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub enum SexpKind {
    Atom(String),
    Str(String),
    List(Vec<Sexp>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sexp {
    pub kind: SexpKind,
    pub start: usize,
    pub end: usize,
}

impl Sexp {
    pub fn atom(&self) -> Option<&str> {
        match &self.kind {
            SexpKind::Atom(s) => Some(s),
            _ => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexp]> {
        match &self.kind {
            SexpKind::List(items) => Some(items),
            _ => None,
        }
    }
}

struct Reader {
    chars: Vec<char>,
    pos: usize,
}

impl Reader {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some(';') => {
                    while let Some(c) = self.bump() {
                        if c == '\n' {
                            break;
                        }
                    }
                }
                _ => break,
            }
        }
    }

    fn read_string(&mut self) -> Result<Sexp, ParseError> {
        let start = self.pos;
        self.bump(); // opening quote
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(ParseError::new(start, "unterminated string literal"));
                }
                Some('"') => {
                    return Ok(Sexp { kind: SexpKind::Str(out), start, end: self.pos });
                }
                Some('\\') => match self.bump() {
                    Some('"') => out.push('"'),
                    Some('\\') => out.push('\\'),
                    Some(c) => {
                        return Err(ParseError::new(
                            self.pos - 1,
                            format!("unsupported string escape `\\{c}`"),
                        ));
                    }
                    None => {
                        return Err(ParseError::new(start, "unterminated string literal"));
                    }
                },
                Some(c) => out.push(c),
            }
        }
    }

    fn read_atom(&mut self) -> Sexp {
        let start = self.pos;
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '"' | ';') {
                break;
            }
            out.push(c);
            self.bump();
        }
        Sexp { kind: SexpKind::Atom(out), start, end: self.pos }
    }

    fn read_datum(&mut self) -> Result<Sexp, ParseError> {
        self.skip_trivia();
        match self.peek() {
            None => Err(ParseError::new(self.pos, "unexpected end of input")),
            Some(open @ ('(' | '[')) => {
                let start = self.pos;
                self.bump();
                let close = if open == '(' { ')' } else { ']' };
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    match self.peek() {
                        // Unbalanced input reports the opening delimiter.
                        None => {
                            return Err(ParseError::new(start, "unclosed delimiter"));
                        }
                        Some(c @ (')' | ']')) => {
                            if c != close {
                                return Err(ParseError::new(
                                    self.pos,
                                    format!("mismatched delimiter: expected `{close}`"),
                                ));
                            }
                            self.bump();
                            return Ok(Sexp {
                                kind: SexpKind::List(items),
                                start,
                                end: self.pos,
                            });
                        }
                        Some(_) => items.push(self.read_datum()?),
                    }
                }
            }
            Some(')') | Some(']') => {
                Err(ParseError::new(self.pos, "unexpected closing delimiter"))
            }
            Some('"') => self.read_string(),
            Some(_) => Ok(self.read_atom()),
        }
    }
}

/// Read every top-level datum in the input.
pub fn read_all(text: &str) -> Result<Vec<Sexp>, ParseError> {
    let mut r = Reader { chars: text.chars().collect(), pos: 0 };
    let mut out = Vec::new();
    loop {
        r.skip_trivia();
        if r.peek().is_none() {
            return Ok(out);
        }
        out.push(r.read_datum()?);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_lists_and_spans() {
        let ds = read_all("(a [b 12] \"x\")").unwrap();
        assert_eq!(ds.len(), 1);
        let items = ds[0].list().unwrap();
        assert_eq!(items.len(), 3);
        assert_eq!(items[0].atom(), Some("a"));
        let inner = items[1].list().unwrap();
        assert_eq!(inner[1].atom(), Some("12"));
        assert_eq!(items[2].kind, SexpKind::Str("x".into()));
        assert_eq!(ds[0].start, 0);
        assert_eq!(ds[0].end, 14);
    }

    #[test]
    fn comments_are_skipped() {
        let ds = read_all("; hi\n(a) ; tail\n").unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].start, 5);
    }

    #[test]
    fn unclosed_reports_opening_offset() {
        let err = read_all("(define x 5").unwrap_err();
        assert_eq!(err.offset, 0);
        let err = read_all("(a (b").unwrap_err();
        assert_eq!(err.offset, 3);
    }

    #[test]
    fn mismatched_bracket_kind() {
        let err = read_all("(a]").unwrap_err();
        assert_eq!(err.offset, 2);
    }

    #[test]
    fn string_escapes_limited() {
        let ds = read_all(r#""a\"b\\c""#).unwrap();
        assert_eq!(ds[0].kind, SexpKind::Str("a\"b\\c".into()));
        assert!(read_all(r#""a\nb""#).is_err());
    }

    #[test]
    fn offsets_count_chars_not_bytes() {
        // Two-byte character before the list: char offset is 2, byte offset 3.
        let ds = read_all("é (a)").unwrap();
        assert_eq!(ds[1].start, 2);
    }
}
