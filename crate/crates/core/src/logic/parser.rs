//! Recursive-descent parser for the ASCII formula grammar:
//!
//! ```text
//! formula := ("forall" | "exists" | "existsu") var+ ":" formula | iff
//! iff     := imp ("<->" imp)*
//! imp     := or ("->" imp)?
//! or      := and ("|" and)*
//! and     := neg ("&" neg)*
//! neg     := "!" neg | "(" formula ")" | atom
//! atom    := var "~" var | var "=" var | NAME "(" var ("," var)* ")"
//! var     := [a-z][a-z0-9_]*
//! NAME    := [A-Z][A-Za-z0-9_]*
//! ```
//!
//! Quantifier scope extends maximally to the right; `forall x y : f` is
//! sugar for nested single-variable quantifiers; `existsu` binds exactly one
//! variable; `<->` associates left and `->` associates right.

use super::Formula;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Var(String),
    Name(String),
    Forall,
    Exists,
    ExistsU,
    Tilde,
    EqSign,
    Bang,
    Amp,
    Pipe,
    Arrow,
    DoubleArrow,
    LParen,
    RParen,
    Colon,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Var(v) => format!("variable '{v}'"),
            Tok::Name(n) => format!("relation name '{n}'"),
            Tok::Forall => "'forall'".into(),
            Tok::Exists => "'exists'".into(),
            Tok::ExistsU => "'existsu'".into(),
            Tok::Tilde => "'~'".into(),
            Tok::EqSign => "'='".into(),
            Tok::Bang => "'!'".into(),
            Tok::Amp => "'&'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::DoubleArrow => "'<->'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Colon => "':'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Token {
    tok: Tok,
    line: u32,
    col: u32,
}

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    let mut line = 1u32;
    let mut col = 1u32;
    while i < chars.len() {
        let c = chars[i];
        let (tline, tcol) = (line, col);
        let mut push = |tok: Tok| tokens.push(Token { tok, line: tline, col: tcol });
        match c {
            '\n' => {
                line += 1;
                col = 1;
                i += 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '~' => push(Tok::Tilde),
            '=' => push(Tok::EqSign),
            '!' => push(Tok::Bang),
            '&' => push(Tok::Amp),
            '|' => push(Tok::Pipe),
            '(' => push(Tok::LParen),
            ')' => push(Tok::RParen),
            ':' => push(Tok::Colon),
            ',' => push(Tok::Comma),
            '-' => {
                if chars.get(i + 1) == Some(&'>') {
                    push(Tok::Arrow);
                    i += 1;
                    col += 1;
                } else {
                    return Err(ParseError {
                        line,
                        col,
                        message: "expected '->' after '-'".into(),
                    });
                }
            }
            '<' => {
                if chars.get(i + 1) == Some(&'-') && chars.get(i + 2) == Some(&'>') {
                    push(Tok::DoubleArrow);
                    i += 2;
                    col += 2;
                } else {
                    return Err(ParseError {
                        line,
                        col,
                        message: "expected '<->' after '<'".into(),
                    });
                }
            }
            'a'..='z' => {
                let start = i;
                while i < chars.len()
                    && (chars[i].is_ascii_lowercase() || chars[i].is_ascii_digit() || chars[i] == '_')
                {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                tokens.push(Token {
                    tok: match word.as_str() {
                        "forall" => Tok::Forall,
                        "exists" => Tok::Exists,
                        "existsu" => Tok::ExistsU,
                        _ => Tok::Var(word),
                    },
                    line: tline,
                    col: tcol,
                });
                continue;
            }
            'A'..='Z' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                col += (i - start) as u32;
                tokens.push(Token {
                    tok: Tok::Name(word),
                    line: tline,
                    col: tcol,
                });
                continue;
            }
            other => {
                return Err(ParseError {
                    line,
                    col,
                    message: format!("unexpected character {other:?}"),
                });
            }
        }
        i += 1;
        col += 1;
    }
    tokens.push(Token {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, message: impl Into<String>) -> ParseError {
        let t = &self.tokens[self.pos];
        ParseError {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.error_here(format!(
                "expected {}, found {}",
                want.describe(),
                self.peek().describe()
            )))
        }
    }

    fn expect_var(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Var(v) => {
                self.advance();
                Ok(v)
            }
            other => Err(self.error_here(format!("expected a variable, found {}", other.describe()))),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Forall | Tok::Exists => {
                let kw = self.advance();
                let mut vars = vec![self.expect_var()?];
                while matches!(self.peek(), Tok::Var(_)) {
                    vars.push(self.expect_var()?);
                }
                self.expect(Tok::Colon)?;
                let mut body = self.formula()?;
                for v in vars.into_iter().rev() {
                    body = match kw {
                        Tok::Forall => Formula::forall(v, body),
                        _ => Formula::exists(v, body),
                    };
                }
                Ok(body)
            }
            Tok::ExistsU => {
                self.advance();
                let v = self.expect_var()?;
                if matches!(self.peek(), Tok::Var(_)) {
                    return Err(self.error_here("existsu binds exactly one variable"));
                }
                self.expect(Tok::Colon)?;
                let body = self.formula()?;
                Ok(Formula::exists_unique(v, body))
            }
            _ => self.iff(),
        }
    }

    fn iff(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.imp()?;
        while *self.peek() == Tok::DoubleArrow {
            self.advance();
            let rhs = self.imp()?;
            f = Formula::iff(f, rhs);
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if *self.peek() == Tok::Arrow {
            self.advance();
            let rhs = self.imp()?;
            Ok(Formula::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Pipe {
            self.advance();
            let rhs = self.and()?;
            f = Formula::or(f, rhs);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut f = self.neg()?;
        while *self.peek() == Tok::Amp {
            self.advance();
            let rhs = self.neg()?;
            f = Formula::and(f, rhs);
        }
        Ok(f)
    }

    fn neg(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Bang => {
                self.advance();
                Ok(Formula::not(self.neg()?))
            }
            Tok::LParen => {
                self.advance();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::Var(a) => {
                self.advance();
                match self.advance() {
                    Tok::Tilde => Ok(Formula::Adj(a, self.expect_var()?)),
                    Tok::EqSign => Ok(Formula::Eq(a, self.expect_var()?)),
                    _ => {
                        self.pos -= 1;
                        Err(self.error_here("expected '~' or '=' after a variable"))
                    }
                }
            }
            Tok::Name(name) => {
                self.advance();
                self.expect(Tok::LParen)?;
                let mut args = vec![self.expect_var()?];
                while *self.peek() == Tok::Comma {
                    self.advance();
                    args.push(self.expect_var()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Formula::Rel(name, args))
            }
            other => Err(self.error_here(format!("expected a formula, found {}", other.describe()))),
        }
    }
}

/// Parses a formula from concrete syntax.
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        tokens: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error_here(format!("unexpected {} after formula", p.peek().describe())));
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_triangle_free_sentence() {
        let f = parse("!(exists x y z : x ~ y & x ~ z & y ~ z)").unwrap();
        let expected = Formula::not(Formula::exists(
            "x",
            Formula::exists(
                "y",
                Formula::exists(
                    "z",
                    Formula::and_all(vec![
                        Formula::adj("x", "y"),
                        Formula::adj("x", "z"),
                        Formula::adj("y", "z"),
                    ]),
                ),
            ),
        ));
        assert_eq!(f, expected);
    }

    #[test]
    fn multi_variable_quantifier_desugars() {
        assert_eq!(
            parse("forall x y : x = y").unwrap(),
            parse("forall x : forall y : x = y").unwrap()
        );
    }

    #[test]
    fn quantifier_scope_extends_right() {
        assert_eq!(
            parse("exists x : x ~ y & x ~ z").unwrap(),
            Formula::exists("x", Formula::and(Formula::adj("x", "y"), Formula::adj("x", "z")))
        );
    }

    #[test]
    fn implication_is_right_associative() {
        assert_eq!(
            parse("x = x -> y = y -> z = z").unwrap(),
            Formula::implies(
                Formula::var_eq("x", "x"),
                Formula::implies(Formula::var_eq("y", "y"), Formula::var_eq("z", "z"))
            )
        );
    }

    #[test]
    fn iff_is_left_associative() {
        assert_eq!(
            parse("x = x <-> y = y <-> z = z").unwrap(),
            Formula::iff(
                Formula::iff(Formula::var_eq("x", "x"), Formula::var_eq("y", "y")),
                Formula::var_eq("z", "z")
            )
        );
    }

    #[test]
    fn precedence_of_and_over_or() {
        assert_eq!(
            parse("x = x | y = y & z = z").unwrap(),
            Formula::or(
                Formula::var_eq("x", "x"),
                Formula::and(Formula::var_eq("y", "y"), Formula::var_eq("z", "z"))
            )
        );
    }

    #[test]
    fn relation_atoms_parse() {
        assert_eq!(
            parse("Hedge(a, b, c)").unwrap(),
            Formula::rel("Hedge", &["a", "b", "c"])
        );
    }

    #[test]
    fn existsu_rejects_two_variables() {
        let err = parse("existsu x y : x = y").unwrap_err();
        assert!(err.message.contains("exactly one"));
    }

    #[test]
    fn error_carries_line_and_column() {
        let err = parse("forall x :\n  x ~ ?").unwrap_err();
        assert_eq!(err.line, 2);
        assert_eq!(err.col, 7);
    }

    #[test]
    fn trailing_tokens_are_rejected() {
        assert!(parse("x = x x").is_err());
    }
}
