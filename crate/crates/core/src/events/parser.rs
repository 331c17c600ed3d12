//! Lexer and recursive-descent parser for the structure-function DSL.
//!
//! ```text
//! file := decl* "system" ":=" expr
//! decl := "component" IDENT "dim" INT ("matrix" STRING)?
//! expr := IDENT | "not" expr | expr "and" expr | expr "or" expr
//!       | "series" "(" list ")" | "parallel" "(" list ")"
//!       | "all_of" "(" list ")" | "any_of" "(" list ")"
//!       | "atleast" INT "of" "(" list ")" | "(" expr ")"
//! ```
//!
//! Precedence: `not` > `and` > `or`. Comments run from `#` to end of line.

use crate::error::{Error, Result};

use super::StructureExpr;

/// One `component` declaration from a system file.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentDecl {
    pub name: String,
    pub dim: usize,
    /// Optional matrix text file supplying the survival projector.
    pub matrix_path: Option<String>,
}

/// A parsed system file: component declarations plus the structure
/// expression after `system :=`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    pub components: Vec<ComponentDecl>,
    pub expr: StructureExpr,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(usize),
    Str(String),
    Assign, // :=
    LParen,
    RParen,
    Comma,
    Eof,
}

#[derive(Debug, Clone)]
struct Lexeme {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexeme>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match c {
            '#' => {
                while let Some(&c) = chars.peek() {
                    chars.next();
                    bump(c, &mut line, &mut col);
                    if c == '\n' {
                        break;
                    }
                }
            }
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut col);
            }
            '(' => {
                chars.next();
                bump(c, &mut line, &mut col);
                out.push(Lexeme { tok: Tok::LParen, line: tl, col: tc });
            }
            ')' => {
                chars.next();
                bump(c, &mut line, &mut col);
                out.push(Lexeme { tok: Tok::RParen, line: tl, col: tc });
            }
            ',' => {
                chars.next();
                bump(c, &mut line, &mut col);
                out.push(Lexeme { tok: Tok::Comma, line: tl, col: tc });
            }
            ':' => {
                chars.next();
                bump(c, &mut line, &mut col);
                match chars.peek() {
                    Some('=') => {
                        chars.next();
                        bump('=', &mut line, &mut col);
                        out.push(Lexeme { tok: Tok::Assign, line: tl, col: tc });
                    }
                    _ => {
                        return Err(Error::Syntax {
                            line: tl,
                            col: tc,
                            msg: "expected `:=`".into(),
                        })
                    }
                }
            }
            '"' => {
                chars.next();
                bump('"', &mut line, &mut col);
                let mut s = String::new();
                loop {
                    match chars.next() {
                        Some('"') => {
                            bump('"', &mut line, &mut col);
                            break;
                        }
                        Some(c) => {
                            bump(c, &mut line, &mut col);
                            s.push(c);
                        }
                        None => {
                            return Err(Error::Syntax {
                                line: tl,
                                col: tc,
                                msg: "unterminated string".into(),
                            })
                        }
                    }
                }
                out.push(Lexeme { tok: Tok::Str(s), line: tl, col: tc });
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() {
                        s.push(c);
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                let value: usize = s.parse().map_err(|_| Error::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("integer `{}` out of range", s),
                })?;
                out.push(Lexeme { tok: Tok::Int(value), line: tl, col: tc });
            }
            c if c.is_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_alphanumeric() || c == '_' {
                        s.push(c);
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                out.push(Lexeme { tok: Tok::Ident(s), line: tl, col: tc });
            }
            other => {
                return Err(Error::Syntax {
                    line: tl,
                    col: tc,
                    msg: format!("unexpected character `{}`", other),
                })
            }
        }
    }
    out.push(Lexeme { tok: Tok::Eof, line, col });
    Ok(out)
}

struct Parser {
    toks: Vec<Lexeme>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Lexeme {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Lexeme {
        let l = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        l
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        let l = self.peek();
        Err(Error::Syntax { line: l.line, col: l.col, msg: msg.into() })
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        match &self.peek().tok {
            Tok::Ident(s) if s == kw => {
                self.next();
                Ok(())
            }
            other => self.err(format!("expected `{}`, found {}", kw, describe(other))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            let found = describe(&self.peek().tok);
            self.err(format!("expected {}, found {}", what, found))
        }
    }

    fn expect_ident(&mut self) -> Result<String> {
        match self.peek().tok.clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.next();
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {}", describe(&other))),
        }
    }

    fn expect_int(&mut self) -> Result<usize> {
        match self.peek().tok.clone() {
            Tok::Int(v) => {
                self.next();
                Ok(v)
            }
            other => self.err(format!("expected integer, found {}", describe(&other))),
        }
    }

    fn parse_expr(&mut self) -> Result<StructureExpr> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<StructureExpr> {
        let mut lhs = self.parse_and()?;
        while matches!(&self.peek().tok, Tok::Ident(s) if s == "or") {
            self.next();
            let rhs = self.parse_and()?;
            lhs = StructureExpr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_and(&mut self) -> Result<StructureExpr> {
        let mut lhs = self.parse_unary()?;
        while matches!(&self.peek().tok, Tok::Ident(s) if s == "and") {
            self.next();
            let rhs = self.parse_unary()?;
            lhs = StructureExpr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn parse_unary(&mut self) -> Result<StructureExpr> {
        if matches!(&self.peek().tok, Tok::Ident(s) if s == "not") {
            self.next();
            let inner = self.parse_unary()?;
            return Ok(StructureExpr::Not(Box::new(inner)));
        }
        self.parse_primary()
    }

    fn parse_list(&mut self) -> Result<Vec<StructureExpr>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut items = vec![self.parse_expr()?];
        loop {
            match &self.peek().tok {
                Tok::Comma => {
                    self.next();
                    items.push(self.parse_expr()?);
                }
                Tok::RParen => {
                    self.next();
                    return Ok(items);
                }
                other => {
                    let found = describe(other);
                    return self.err(format!("expected `,` or `)`, found {}", found));
                }
            }
        }
    }

    fn parse_primary(&mut self) -> Result<StructureExpr> {
        match self.peek().tok.clone() {
            Tok::LParen => {
                self.next();
                let e = self.parse_expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(s) => match s.as_str() {
                // `parallel` demands every branch survive; `all_of` is
                // the conventional-name alias for the same operation.
                "parallel" | "all_of" => {
                    self.next();
                    Ok(StructureExpr::Parallel(self.parse_list()?))
                }
                "series" | "any_of" => {
                    self.next();
                    Ok(StructureExpr::Series(self.parse_list()?))
                }
                "atleast" => {
                    self.next();
                    let k = self.expect_int()?;
                    self.expect_keyword("of")?;
                    let list = self.parse_list()?;
                    if k < 1 || k > list.len() {
                        return self.err(format!(
                            "atleast {} of {} items is out of range",
                            k,
                            list.len()
                        ));
                    }
                    Ok(StructureExpr::AtLeast(k, list))
                }
                _ if is_keyword(&s) => {
                    self.err(format!("keyword `{}` cannot start an expression", s))
                }
                _ => {
                    self.next();
                    Ok(StructureExpr::Atom(s))
                }
            },
            other => self.err(format!("expected expression, found {}", describe(&other))),
        }
    }

    fn parse_system_file(&mut self) -> Result<SystemSpec> {
        let mut components = Vec::new();
        loop {
            match &self.peek().tok {
                Tok::Ident(s) if s == "component" => {
                    self.next();
                    let name = self.expect_ident()?;
                    self.expect_keyword("dim")?;
                    let dim = self.expect_int()?;
                    let matrix_path = if matches!(&self.peek().tok, Tok::Ident(s) if s == "matrix")
                    {
                        self.next();
                        match self.peek().tok.clone() {
                            Tok::Str(p) => {
                                self.next();
                                Some(p)
                            }
                            other => {
                                return self.err(format!(
                                    "expected quoted path after `matrix`, found {}",
                                    describe(&other)
                                ))
                            }
                        }
                    } else {
                        None
                    };
                    components.push(ComponentDecl { name, dim, matrix_path });
                }
                Tok::Ident(s) if s == "system" => break,
                other => {
                    let found = describe(other);
                    return self.err(format!(
                        "expected `component` or `system`, found {}",
                        found
                    ));
                }
            }
        }
        self.expect_keyword("system")?;
        self.expect(Tok::Assign, "`:=`")?;
        let expr = self.parse_expr()?;
        match &self.peek().tok {
            Tok::Eof => Ok(SystemSpec { components, expr }),
            other => {
                let found = describe(other);
                self.err(format!("trailing input: {}", found))
            }
        }
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(
        s,
        "component"
            | "dim"
            | "matrix"
            | "system"
            | "not"
            | "and"
            | "or"
            | "series"
            | "parallel"
            | "all_of"
            | "any_of"
            | "atleast"
            | "of"
    )
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Ident(s) => format!("`{}`", s),
        Tok::Int(v) => format!("`{}`", v),
        Tok::Str(s) => format!("\"{}\"", s),
        Tok::Assign => "`:=`".into(),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::Comma => "`,`".into(),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse a bare structure expression.
pub fn parse_structure(text: &str) -> Result<StructureExpr> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    let e = p.parse_expr()?;
    match &p.peek().tok {
        Tok::Eof => Ok(e),
        other => {
            let found = describe(other);
            p.err(format!("trailing input: {}", found))
        }
    }
}

/// Parse a full system file (declarations plus `system := expr`).
pub fn parse_system(text: &str) -> Result<SystemSpec> {
    let mut p = Parser { toks: lex(text)?, pos: 0 };
    p.parse_system_file()
}

#[cfg(test)]
mod tests {
    use super::*;
    use StructureExpr::*;

    #[test]
    fn parses_parallel_pair() {
        let e = parse_structure("parallel(q1, q2)").unwrap();
        assert_eq!(e, Parallel(vec![Atom("q1".into()), Atom("q2".into())]));
    }

    #[test]
    fn parses_atleast() {
        let e = parse_structure("atleast 2 of (q1, q2, q3)").unwrap();
        assert_eq!(
            e,
            AtLeast(2, vec![Atom("q1".into()), Atom("q2".into()), Atom("q3".into())])
        );
    }

    #[test]
    fn parses_and_not_with_precedence() {
        let e = parse_structure("q1 and not q2").unwrap();
        assert_eq!(
            e,
            And(Box::new(Atom("q1".into())), Box::new(Not(Box::new(Atom("q2".into())))))
        );
        // not > and > or
        let e = parse_structure("not q1 and q2 or q3").unwrap();
        assert_eq!(
            e,
            Or(
                Box::new(And(
                    Box::new(Not(Box::new(Atom("q1".into())))),
                    Box::new(Atom("q2".into()))
                )),
                Box::new(Atom("q3".into()))
            )
        );
    }

    #[test]
    fn aliases_map_to_semantic_nodes() {
        assert_eq!(
            parse_structure("all_of(a, b)").unwrap(),
            parse_structure("parallel(a, b)").unwrap()
        );
        assert_eq!(
            parse_structure("any_of(a, b)").unwrap(),
            parse_structure("series(a, b)").unwrap()
        );
    }

    #[test]
    fn comments_and_grouping() {
        let e = parse_structure("# leading note\n(q1 or q2) and q3 # trailing").unwrap();
        assert_eq!(
            e,
            And(
                Box::new(Or(Box::new(Atom("q1".into())), Box::new(Atom("q2".into())))),
                Box::new(Atom("q3".into()))
            )
        );
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_structure("q1 and\n  or q2") {
            Err(crate::error::Error::Syntax { line, col, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(col, 3);
            }
            other => panic!("expected syntax error, got {:?}", other),
        }
        match parse_structure("atleast 5 of (a, b)") {
            Err(crate::error::Error::Syntax { .. }) => {}
            other => panic!("expected range error, got {:?}", other),
        }
    }

    #[test]
    fn parses_system_file() {
        let text = r#"
            # three qubits
            component q1 dim 2 matrix "e1.mat"
            component q2 dim 2
            component q3 dim 2
            system := atleast 2 of (q1, q2, q3)
        "#;
        let spec = parse_system(text).unwrap();
        assert_eq!(spec.components.len(), 3);
        assert_eq!(spec.components[0].matrix_path.as_deref(), Some("e1.mat"));
        assert_eq!(spec.components[1].matrix_path, None);
        assert!(matches!(spec.expr, AtLeast(2, _)));
    }

    #[test]
    fn system_file_requires_system_line() {
        let err = parse_system("component q1 dim 2\n").unwrap_err();
        assert!(matches!(err, crate::error::Error::Syntax { .. }));
    }
}
