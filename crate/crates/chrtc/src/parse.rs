//! Text syntax for terms, constraints, rules and programs.
//!
//! Terms follow Haskell type notation (`P x (Q y) [z]`), constraints are
//! comma separated, equations are written `t1 = t2`, and rules are written
//! one per line as `Name @ H1, H2 <=> B1, B2.` or `Name @ H ==> B.` with
//! the name and the trailing period optional. `%` and `--` start line
//! comments.

use crate::engine::{Program, Rule, RuleKind};
use crate::term::{Constraint, Term, Var};
use std::fmt;
use thiserror::Error;

/// A syntax error with a 1-based source position.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

impl ParseError {
    fn new(message: impl Into<String>, line: usize, col: usize) -> ParseError {
        ParseError {
            message: message.into(),
            line,
            col,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Tok {
    Upper(String),
    Lower(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Equals,
    SimpArrow,
    PropArrow,
    ContextArrow,
    FdArrow,
    At,
    Dot,
    Pipe,
    Semi,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Upper(n) | Tok::Lower(n) => n.as_str(),
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Equals => "=",
            Tok::SimpArrow => "<=>",
            Tok::PropArrow => "==>",
            Tok::ContextArrow => "=>",
            Tok::FdArrow => "->",
            Tok::At => "@",
            Tok::Dot => ".",
            Tok::Pipe => "|",
            Tok::Semi => ";",
        };
        write!(f, "{s}")
    }
}

pub(crate) struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

/// Tokenizes `input`, stripping whitespace and `%` / `--` comments.
pub(crate) fn lex(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    let mut chars = input.chars().peekable();
    let mut line = 1usize;
    let mut col = 1usize;
    macro_rules! push {
        ($tok:expr, $len:expr) => {{
            out.push(Spanned {
                tok: $tok,
                line,
                col,
            });
            col += $len;
        }};
    }
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '[' => {
                chars.next();
                push!(Tok::LBracket, 1);
            }
            ']' => {
                chars.next();
                push!(Tok::RBracket, 1);
            }
            '(' => {
                chars.next();
                push!(Tok::LParen, 1);
            }
            ')' => {
                chars.next();
                push!(Tok::RParen, 1);
            }
            ',' => {
                chars.next();
                push!(Tok::Comma, 1);
            }
            '@' => {
                chars.next();
                push!(Tok::At, 1);
            }
            '.' => {
                chars.next();
                push!(Tok::Dot, 1);
            }
            '|' => {
                chars.next();
                push!(Tok::Pipe, 1);
            }
            ';' => {
                chars.next();
                push!(Tok::Semi, 1);
            }
            '<' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    if chars.peek() == Some(&'>') {
                        chars.next();
                        push!(Tok::SimpArrow, 3);
                        continue;
                    }
                }
                return Err(ParseError::new("expected `<=>`", line, col));
            }
            '=' => {
                chars.next();
                if chars.peek() == Some(&'=') {
                    chars.next();
                    if chars.peek() == Some(&'>') {
                        chars.next();
                        push!(Tok::PropArrow, 3);
                        continue;
                    }
                    return Err(ParseError::new("expected `==>`", line, col));
                }
                if chars.peek() == Some(&'>') {
                    chars.next();
                    push!(Tok::ContextArrow, 2);
                    continue;
                }
                push!(Tok::Equals, 1);
            }
            '-' => {
                chars.next();
                match chars.peek() {
                    Some('-') => {
                        while let Some(&c) = chars.peek() {
                            if c == '\n' {
                                break;
                            }
                            chars.next();
                        }
                        col += 2;
                    }
                    Some('>') => {
                        chars.next();
                        push!(Tok::FdArrow, 2);
                    }
                    _ => return Err(ParseError::new("expected `->` or `--`", line, col)),
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut name = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        name.push(c);
                        chars.next();
                    } else {
                        break;
                    }
                }
                let len = name.len();
                let tok = if c.is_ascii_uppercase() {
                    Tok::Upper(name)
                } else {
                    Tok::Lower(name)
                };
                push!(tok, len);
            }
            other => {
                return Err(ParseError::new(
                    format!("unexpected character `{other}`"),
                    line,
                    col,
                ))
            }
        }
    }
    Ok(out)
}

/// Token cursor shared by the rule and declaration parsers.
pub(crate) struct Cursor {
    toks: Vec<Spanned>,
    pos: usize,
    end_line: usize,
    end_col: usize,
}

impl Cursor {
    pub(crate) fn new(input: &str) -> Result<Cursor, ParseError> {
        let toks = lex(input)?;
        let lines: Vec<&str> = input.lines().collect();
        let end_line = lines.len().max(1);
        let end_col = lines.last().map(|l| l.len() + 1).unwrap_or(1);
        Ok(Cursor {
            toks,
            pos: 0,
            end_line,
            end_col,
        })
    }

    pub(crate) fn from_tokens(toks: Vec<Spanned>) -> Cursor {
        let (end_line, end_col) = toks.last().map(|s| (s.line, s.col + 1)).unwrap_or((1, 1));
        Cursor {
            toks,
            pos: 0,
            end_line,
            end_col,
        }
    }

    pub(crate) fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    pub(crate) fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    pub(crate) fn peek_at(&self, offset: usize) -> Option<&Tok> {
        self.toks.get(self.pos + offset).map(|s| &s.tok)
    }

    pub(crate) fn next(&mut self) -> Option<&Spanned> {
        let s = self.toks.get(self.pos);
        if s.is_some() {
            self.pos += 1;
        }
        s
    }

    pub(crate) fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub(crate) fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos)
            .map(|s| (s.line, s.col))
            .unwrap_or((self.end_line, self.end_col))
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError::new(message, line, col)
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.next();
                Ok(())
            }
            Some(t) => Err(self.error(format!("expected `{tok}`, found `{t}`"))),
            None => Err(self.error(format!("expected `{tok}`, found end of input"))),
        }
    }

    /// Parses a full term: either a variable, or a functor applied to
    /// atomic arguments.
    pub(crate) fn term(&mut self, mk: &impl Fn(&str) -> Var) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Upper(_)) => {
                let name = match self.next().map(|s| &s.tok) {
                    Some(Tok::Upper(n)) => n.clone(),
                    _ => unreachable!(),
                };
                let mut args = Vec::new();
                while self.at_atom_start() {
                    args.push(self.atom(mk)?);
                }
                Ok(Term::App(name, args))
            }
            _ => {
                let t = self.atom(mk)?;
                if self.at_atom_start() {
                    return Err(self.error(format!(
                        "`{t}` is not a functor and cannot be applied to arguments"
                    )));
                }
                Ok(t)
            }
        }
    }

    fn at_atom_start(&self) -> bool {
        matches!(
            self.peek(),
            Some(Tok::Upper(_)) | Some(Tok::Lower(_)) | Some(Tok::LBracket) | Some(Tok::LParen)
        )
    }

    /// Parses an atomic term: a variable, a nullary functor, `[t]` or a
    /// parenthesized term.
    pub(crate) fn atom(&mut self, mk: &impl Fn(&str) -> Var) -> Result<Term, ParseError> {
        match self.peek() {
            Some(Tok::Lower(_)) => {
                let name = match self.next().map(|s| &s.tok) {
                    Some(Tok::Lower(n)) => n.clone(),
                    _ => unreachable!(),
                };
                Ok(Term::Var(mk(&name)))
            }
            Some(Tok::Upper(_)) => {
                let name = match self.next().map(|s| &s.tok) {
                    Some(Tok::Upper(n)) => n.clone(),
                    _ => unreachable!(),
                };
                Ok(Term::App(name, Vec::new()))
            }
            Some(Tok::LBracket) => {
                self.next();
                let inner = self.term(mk)?;
                self.expect(Tok::RBracket)?;
                Ok(Term::list(inner))
            }
            Some(Tok::LParen) => {
                self.next();
                let inner = self.term(mk)?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(t) => Err(self.error(format!("expected a term, found `{t}`"))),
            None => Err(self.error("expected a term, found end of input")),
        }
    }

    /// Parses one constraint: `t1 = t2`, `True`, `False` or `C t ... t`.
    pub(crate) fn constraint(
        &mut self,
        mk: &impl Fn(&str) -> Var,
    ) -> Result<Constraint, ParseError> {
        let lhs = self.term(mk)?;
        if self.peek() == Some(&Tok::Equals) {
            self.next();
            let rhs = self.term(mk)?;
            return Ok(Constraint::Eq(lhs, rhs));
        }
        match lhs {
            Term::App(name, args) if name == "True" => {
                if args.is_empty() {
                    Ok(Constraint::True)
                } else {
                    Err(self.error("`True` takes no arguments"))
                }
            }
            Term::App(name, args) if name == "False" => {
                if args.is_empty() {
                    Ok(Constraint::False)
                } else {
                    Err(self.error("`False` takes no arguments"))
                }
            }
            Term::App(name, args) if name == crate::term::LIST_FUNCTOR && args.len() == 1 => {
                Err(self.error("a list term is not a constraint"))
            }
            Term::App(name, args) => Ok(Constraint::User(name, args)),
            Term::Var(v) => Err(self.error(format!(
                "expected a user constraint or equation, found bare variable `{v}`"
            ))),
        }
    }

    /// Comma-separated nonempty constraint list.
    pub(crate) fn constraints(
        &mut self,
        mk: &impl Fn(&str) -> Var,
    ) -> Result<Vec<Constraint>, ParseError> {
        let mut out = vec![self.constraint(mk)?];
        while self.peek() == Some(&Tok::Comma) {
            self.next();
            out.push(self.constraint(mk)?);
        }
        Ok(out)
    }
}

fn program_var(name: &str) -> Var {
    Var::Program(name.to_string())
}

fn global_var(name: &str) -> Var {
    Var::Global(name.to_string())
}

/// Parses a single term; variables become program variables.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut cur = Cursor::new(text)?;
    if cur.at_end() {
        return Err(cur.error("empty input"));
    }
    let t = cur.term(&program_var)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after term"));
    }
    Ok(t)
}

/// Parses a comma-separated constraint multiset; variables become global
/// variables, as in a goal.
pub fn parse_goal(text: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut cur = Cursor::new(text)?;
    if cur.at_end() {
        return Err(cur.error("empty input"));
    }
    let cs = cur.constraints(&global_var)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after constraints"));
    }
    Ok(cs)
}

/// Parses a comma-separated constraint multiset over program variables.
pub fn parse_constraints(text: &str) -> Result<Vec<Constraint>, ParseError> {
    let mut cur = Cursor::new(text)?;
    if cur.at_end() {
        return Err(cur.error("empty input"));
    }
    let cs = cur.constraints(&program_var)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after constraints"));
    }
    Ok(cs)
}

/// Parses one rule, e.g. `name @ Eq [a] <=> Eq a.`
pub fn parse_rule(text: &str) -> Result<Rule, ParseError> {
    let mut cur = Cursor::new(text)?;
    let rule = rule_from_cursor(&mut cur, 1)?;
    if !cur.at_end() {
        return Err(cur.error("trailing input after rule"));
    }
    Ok(rule)
}

fn rule_from_cursor(cur: &mut Cursor, index: usize) -> Result<Rule, ParseError> {
    let name = match (cur.peek(), cur.peek2()) {
        (Some(Tok::Upper(n)), Some(Tok::At)) | (Some(Tok::Lower(n)), Some(Tok::At)) => {
            let n = n.clone();
            cur.next();
            cur.next();
            Some(n)
        }
        _ => None,
    };
    let head = cur.constraints(&program_var)?;
    let kind = match cur.peek() {
        Some(Tok::SimpArrow) => {
            cur.next();
            RuleKind::Simp
        }
        Some(Tok::PropArrow) => {
            cur.next();
            RuleKind::Prop
        }
        Some(t) => return Err(cur.error(format!("expected `<=>` or `==>`, found `{t}`"))),
        None => return Err(cur.error("expected `<=>` or `==>`")),
    };
    let body = cur.constraints(&program_var)?;
    if cur.peek() == Some(&Tok::Dot) {
        cur.next();
    }
    let name = name.unwrap_or_else(|| format!("r{index}"));
    Rule::new(name, kind, head, body).map_err(|e| cur.error(e.to_string()))
}

/// Parses a whole program: one rule per line, `%`/`--` comments and blank
/// lines allowed.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut rules = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let stripped = line.trim();
        if stripped.is_empty() || stripped.starts_with('%') || stripped.starts_with("--") {
            continue;
        }
        let toks = lex(line)?;
        let toks = toks
            .into_iter()
            .map(|mut s| {
                s.line = lineno + 1;
                s
            })
            .collect();
        let mut cur = Cursor::from_tokens(toks);
        if cur.at_end() {
            continue;
        }
        let rule = rule_from_cursor(&mut cur, rules.len() + 1)?;
        if !cur.at_end() {
            return Err(cur.error("trailing input after rule"));
        }
        rules.push(rule);
    }
    Program::new(rules).map_err(|e| ParseError::new(e.to_string(), 1, 1))
}
