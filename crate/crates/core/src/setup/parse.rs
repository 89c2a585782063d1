//! Recursive-descent parser for the setup DSL.
//!
//! ```text
//! expr     := or_expr ;
//! or_expr  := and_expr { "OR" and_expr } ;
//! and_expr := atom { "AND" atom } ;          (* left operand is later *)
//! atom     := canonical | "(" expr ")" ;
//! canonical:= "[" point { ";" filter } ";" point "]" ;
//! filter   := "{" int { "," int } "}" "@" int ;
//! point    := "(" int "," int ")" ;           (* (site, time) *)
//! ```
//!
//! Whitespace is insignificant and `#` starts a comment that runs to the end
//! of the line. Both connectives associate to the left.

use std::fmt;

use thiserror::Error;

use super::{ExprKind, Filter, Pos, SetupExpr, Span, SpacetimePoint};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {}, column {}: {message}", .pos.line, .pos.col)]
pub struct ParseError {
    pub pos: Pos,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LBracket,
    RBracket,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Comma,
    At,
    Int(u64),
    And,
    Or,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LBracket => f.write_str("'['"),
            Tok::RBracket => f.write_str("']'"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::LBrace => f.write_str("'{'"),
            Tok::RBrace => f.write_str("'}'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Comma => f.write_str("','"),
            Tok::At => f.write_str("'@'"),
            Tok::Int(n) => write!(f, "integer {n}"),
            Tok::And => f.write_str("AND"),
            Tok::Or => f.write_str("OR"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    start: Pos,
    end: Pos,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let start = Pos { line, col };
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while chars.next_if(|&c| c != '\n').is_some() {}
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            ';' => Some(Tok::Semi),
            ',' => Some(Tok::Comma),
            '@' => Some(Tok::At),
            _ => None,
        };
        if let Some(tok) = single {
            chars.next();
            col += 1;
            tokens.push(Token {
                tok,
                start,
                end: Pos { line, col },
            });
            continue;
        }
        if c.is_ascii_digit() {
            let mut value: u64 = 0;
            while let Some(d) = chars.next_if(char::is_ascii_digit) {
                col += 1;
                value = value
                    .checked_mul(10)
                    .and_then(|v| v.checked_add(u64::from(d as u8 - b'0')))
                    .ok_or_else(|| ParseError {
                        pos: start,
                        message: "integer literal is too large".into(),
                    })?;
            }
            tokens.push(Token {
                tok: Tok::Int(value),
                start,
                end: Pos { line, col },
            });
            continue;
        }
        if c.is_ascii_alphabetic() {
            let mut word = String::new();
            while let Some(ch) = chars.next_if(char::is_ascii_alphanumeric) {
                col += 1;
                word.push(ch);
            }
            let tok = match word.as_str() {
                "AND" => Tok::And,
                "OR" => Tok::Or,
                _ => {
                    return Err(ParseError {
                        pos: start,
                        message: format!("unknown keyword '{word}' (expected AND or OR)"),
                    })
                }
            };
            tokens.push(Token {
                tok,
                start,
                end: Pos { line, col },
            });
            continue;
        }
        return Err(ParseError {
            pos: start,
            message: format!("unexpected character {c:?}"),
        });
    }
    tokens.push(Token {
        tok: Tok::Eof,
        start: Pos { line, col },
        end: Pos { line, col },
    });
    Ok(tokens)
}

/// Deepest tree (or parenthesis nesting) the parser accepts.
pub const MAX_DEPTH: usize = 256;

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    parens: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.at].clone();
        if t.tok != Tok::Eof {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let t = self.peek();
        Err(ParseError {
            pos: t.start,
            message: format!("expected {expected}, found {}", t.tok),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Token, ParseError> {
        if self.peek().tok == tok {
            Ok(self.bump())
        } else {
            self.error(&tok.to_string())
        }
    }

    fn int(&mut self, what: &str) -> Result<(u64, Pos), ParseError> {
        match self.peek().tok {
            Tok::Int(n) => {
                let pos = self.bump().start;
                Ok((n, pos))
            }
            _ => self.error(what),
        }
    }

    fn site(&mut self) -> Result<usize, ParseError> {
        let (n, pos) = self.int("site index")?;
        usize::try_from(n).map_err(|_| ParseError {
            pos,
            message: "site index is too large".into(),
        })
    }

    fn time(&mut self) -> Result<i64, ParseError> {
        let (n, pos) = self.int("time step")?;
        i64::try_from(n).map_err(|_| ParseError {
            pos,
            message: "time step is too large".into(),
        })
    }

    fn check_depth(&self, depth: usize) -> Result<usize, ParseError> {
        if depth > MAX_DEPTH {
            return Err(ParseError {
                pos: self.peek().start,
                message: format!("expression nests deeper than {MAX_DEPTH} levels"),
            });
        }
        Ok(depth)
    }

    // Each parser level returns the tree together with its depth.
    fn expr(&mut self) -> Result<(SetupExpr, usize), ParseError> {
        let (mut left, mut depth) = self.and_expr()?;
        while self.peek().tok == Tok::Or {
            self.bump();
            let (right, d) = self.and_expr()?;
            depth = self.check_depth(1 + depth.max(d))?;
            left = join(left, right, |left, right| ExprKind::Or { left, right });
        }
        Ok((left, depth))
    }

    fn and_expr(&mut self) -> Result<(SetupExpr, usize), ParseError> {
        let (mut later, mut depth) = self.atom()?;
        while self.peek().tok == Tok::And {
            self.bump();
            let (earlier, d) = self.atom()?;
            depth = self.check_depth(1 + depth.max(d))?;
            later = join(later, earlier, |later, earlier| ExprKind::And { later, earlier });
        }
        Ok((later, depth))
    }

    fn atom(&mut self) -> Result<(SetupExpr, usize), ParseError> {
        match self.peek().tok {
            Tok::LBracket => Ok((self.canonical()?, 1)),
            Tok::LParen => {
                let open = self.bump();
                self.parens += 1;
                self.check_depth(self.parens)?;
                let (mut inner, depth) = self.expr()?;
                let close = self.expect(Tok::RParen)?;
                self.parens -= 1;
                inner.span = Some(Span {
                    start: open.start,
                    end: close.end,
                });
                Ok((inner, depth))
            }
            _ => self.error("'[' or '('"),
        }
    }

    fn canonical(&mut self) -> Result<SetupExpr, ParseError> {
        let open = self.expect(Tok::LBracket)?;
        let dst = self.point()?;
        let mut filters = Vec::new();
        let src = loop {
            self.expect(Tok::Semi)?;
            match self.peek().tok {
                Tok::LBrace => filters.push(self.filter()?),
                Tok::LParen => break self.point()?,
                _ => return self.error("filter '{' or point '('"),
            }
        };
        let close = self.expect(Tok::RBracket)?;
        // Written latest first; stored in time order.
        filters.reverse();
        Ok(SetupExpr {
            kind: ExprKind::Leaf { dst, filters, src },
            span: Some(Span {
                start: open.start,
                end: close.end,
            }),
        })
    }

    fn filter(&mut self) -> Result<Filter, ParseError> {
        let open = self.expect(Tok::LBrace)?;
        let mut holes = vec![self.site()?];
        while self.peek().tok == Tok::Comma {
            self.bump();
            holes.push(self.site()?);
        }
        self.expect(Tok::RBrace)?;
        self.expect(Tok::At)?;
        let time = self.time()?;
        Filter::new(time, holes).map_err(|e| ParseError {
            pos: open.start,
            message: match e {
                super::SetupError::InvalidSetup { reason, .. } => reason,
                other => other.to_string(),
            },
        })
    }

    fn point(&mut self) -> Result<SpacetimePoint, ParseError> {
        self.expect(Tok::LParen)?;
        let site = self.site()?;
        self.expect(Tok::Comma)?;
        let time = self.time()?;
        self.expect(Tok::RParen)?;
        Ok(SpacetimePoint { site, time })
    }
}

fn join(
    a: SetupExpr,
    b: SetupExpr,
    make: impl FnOnce(Box<SetupExpr>, Box<SetupExpr>) -> ExprKind,
) -> SetupExpr {
    let span = match (a.span, b.span) {
        (Some(x), Some(y)) => Some(Span {
            start: x.start,
            end: y.end,
        }),
        _ => None,
    };
    SetupExpr {
        kind: make(Box::new(a), Box::new(b)),
        span,
    }
}

/// Parses DSL text into an expression tree. Site bounds are checked later,
/// when the expression is bound to a lattice.
pub fn parse(text: &str) -> Result<SetupExpr, ParseError> {
    let mut parser = Parser {
        tokens: lex(text)?,
        at: 0,
        parens: 0,
    };
    let (e, _) = parser.expr()?;
    if parser.peek().tok != Tok::Eof {
        return parser.error("AND, OR or end of input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::setup::{canonicalize, CanonicalSetup};

    fn p(site: usize, time: i64) -> SpacetimePoint {
        SpacetimePoint::new(site, time)
    }

    #[test]
    fn parses_canonical_form() {
        let e = parse("[(0,4); {1,3}@2; (0,0)]").unwrap();
        let expected = CanonicalSetup::new(p(0, 0), p(0, 4), vec![Filter::new(2, vec![1, 3]).unwrap()]).unwrap();
        assert_eq!(canonicalize(&e).unwrap(), expected);
    }

    #[test]
    fn and_of_links_canonicalizes() {
        let e = parse("([(0,4);(2,2)] AND [(2,2);(0,0)])").unwrap();
        assert_eq!(canonicalize(&e).unwrap().to_string(), "[(0,4); {2}@2; (0,0)]");
    }

    #[test]
    fn missing_separator_is_located() {
        let err = parse("[(0,4); {1}@2 (0,0)]").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (1, 15));
        assert!(err.message.contains("expected ';'"), "{}", err.message);
    }

    #[test]
    fn comments_and_newlines() {
        let text = "# two paths\n[(0,4); {1}@2; (0,0)]   # upper\n  OR [(0,4); {3}@2; (0,0)]\n";
        let e = parse(text).unwrap();
        assert_eq!(canonicalize(&e).unwrap().to_string(), "[(0,4); {1,3}@2; (0,0)]");
        let err = parse("[(0,4); (0,0)]\n  AND\n  [(0,0); x]").unwrap_err();
        assert_eq!((err.pos.line, err.pos.col), (3, 11));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("[(0,2);(1,1)] AND [(1,1);(0,0)] OR [(0,2);(2,1)] AND [(2,1);(0,0)]").unwrap();
        assert!(matches!(e.kind, ExprKind::Or { .. }));
        let chain = parse("[(0,3);(0,2)] AND [(0,2);(0,1)] AND [(0,1);(0,0)]").unwrap();
        match &chain.kind {
            ExprKind::And { later, .. } => assert!(matches!(later.kind, ExprKind::And { .. })),
            _ => panic!("expected AND"),
        }
    }

    #[test]
    fn printing_reparses_to_same_tree() {
        for text in [
            "[(0,3);(0,2)] AND ([(0,2);(0,1)] AND [(0,1);(0,0)])",
            "([(0,2);{1}@1;(0,0)] OR [(0,2);{2}@1;(0,0)]) AND [(0,0);(0,0)]",
            "[(0,2);{1}@1;(0,0)] OR ([(0,2);{2}@1;(0,0)] OR [(0,2);{3}@1;(0,0)])",
            "[(0,2);(0,1)] AND ([(0,1);{1}@0;(0,0)] OR [(0,1);(0,0)])",
        ] {
            let e = parse(text).unwrap().without_spans();
            let printed = e.to_string();
            assert_eq!(parse(&printed).unwrap().without_spans(), e, "{printed}");
        }
    }

    #[test]
    fn depth_is_capped() {
        let deep = format!("{}[(0,1);(0,0)]{}", "(".repeat(10_000), ")".repeat(10_000));
        assert!(parse(&deep).unwrap_err().message.contains("deeper"));
        let chain = vec!["[(0,1);(0,0)]"; 2_000].join(" AND ");
        assert!(parse(&chain).is_err());
        let ok = vec!["[(0,1);(0,0)]"; 200].join(" OR ");
        assert!(parse(&ok).is_ok());
    }

    #[test]
    fn rejects_garbage() {
        for bad in [
            "",
            "[",
            "[(0,1)]",
            "[(0,1);(0,0)] AND",
            "[(0,1);(0,0)] XOR [(0,1);(0,0)]",
            "[(0,1);{}@0;(0,0)]",
            "[(0,1);{1,1}@0;(0,0)]",
            "[(0,99999999999999999999999);(0,0)]",
            "[(0,1);(0,0)])",
            "[(0,1);(0,0)] $",
            "[(0,9223372036854775808);(0,0)]",
        ] {
            assert!(parse(bad).is_err(), "{bad:?} should not parse");
        }
    }
}
