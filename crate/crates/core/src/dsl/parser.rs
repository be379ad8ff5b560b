//! Hand-written lexer and recursive-descent parser for `.ipd` sources.

use std::fmt;

use thiserror::Error;

use super::ast::*;
use crate::bank::Attitude;
use crate::game::Action;

/// Line prefix that carries the natural-language description.
pub const HEADER_PREFIX: &str = "#>";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: expected {}, found {found}", expected.join(" | "))]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub found: String,
    pub expected: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {what} is {value}, limit is {limit}")]
pub struct LimitError {
    pub line: usize,
    pub col: usize,
    pub what: String,
    pub value: usize,
    pub limit: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DslError {
    #[error("parse error at {0}")]
    Parse(#[from] ParseError),
    #[error("limit exceeded at {0}")]
    Limit(#[from] LimitError),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(i64),
    Num(f64),
    Str(String),
    Sym(&'static str),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Num(x) => write!(f, "`{x:?}`"),
            Tok::Str(s) => write!(f, "{s:?}"),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => write!(f, "end of input"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

const SYMBOLS: [&str; 22] = [
    ":=", "->", "==", "!=", "<=", ">=", "{", "}", "(", ")", "[", "]", ",", ":", "=", "<", ">", "+", "-", "*",
    "/", "%",
];

const KEYWORDS: [&str; 19] = [
    "strategy", "attitude", "first", "registers", "rules", "if", "default", "updates", "in", "and", "or",
    "not", "true", "false", "mix", "my", "opp", "C", "D",
];

fn lex(src: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let err = |line, col, found: String, expected: &str| ParseError {
        line,
        col,
        found,
        expected: vec![expected.to_string()],
    };
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col) = (line, col);
        if c.is_ascii_alphabetic() || c == '_' {
            let s = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[s..i].iter().collect();
            col += i - s;
            out.push(Spanned { tok: Tok::Ident(word), line: start_line, col: start_col });
            continue;
        }
        if c.is_ascii_digit() {
            let s = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut is_float = false;
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                is_float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    is_float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[s..i].iter().collect();
            col += i - s;
            let tok = if is_float {
                Tok::Num(text.parse().map_err(|_| err(start_line, start_col, text.clone(), "number"))?)
            } else {
                Tok::Int(
                    text.parse()
                        .map_err(|_| err(start_line, start_col, format!("`{text}`"), "integer within 64 bits"))?,
                )
            };
            out.push(Spanned { tok, line: start_line, col: start_col });
            continue;
        }
        if c == '"' {
            let s = i + 1;
            i += 1;
            while i < chars.len() && chars[i] != '"' && chars[i] != '\n' {
                i += 1;
            }
            if i >= chars.len() || chars[i] != '"' {
                return Err(err(start_line, start_col, "unterminated string".into(), "`\"`"));
            }
            let text: String = chars[s..i].iter().collect();
            i += 1;
            col += text.chars().count() + 2;
            out.push(Spanned { tok: Tok::Str(text), line: start_line, col: start_col });
            continue;
        }
        let rest = &chars[i..];
        let sym = SYMBOLS
            .iter()
            .find(|s| s.chars().zip(rest).all(|(a, &b)| a == b) && s.len() <= rest.len());
        match sym {
            Some(s) => {
                i += s.len();
                col += s.len();
                out.push(Spanned { tok: Tok::Sym(s), line: start_line, col: start_col });
            }
            None => return Err(err(start_line, start_col, format!("`{c}`"), "token")),
        }
    }
    out.push(Spanned { tok: Tok::Eof, line, col });
    Ok(out)
}

/// Extracts the `#>` description block at the top of a source file.
pub fn extract_header(src: &str) -> Option<String> {
    let mut lines = Vec::new();
    for line in src.split('\n') {
        match line.strip_prefix(HEADER_PREFIX) {
            Some(rest) => lines.push(rest.strip_prefix(' ').unwrap_or(rest)),
            None => break,
        }
    }
    if lines.is_empty() {
        None
    } else {
        Some(lines.join("\n"))
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    registers: Vec<String>,
}

type PResult<T> = Result<T, DslError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> (usize, usize) {
        let s = &self.toks[self.pos];
        (s.line, s.col)
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, expected: &[&str]) -> PResult<T> {
        let (line, col) = self.here();
        Err(ParseError {
            line,
            col,
            found: self.peek().to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
        .into())
    }

    fn limit(&self, what: &str, value: usize, limit: usize) -> DslError {
        let (line, col) = self.here();
        LimitError { line, col, what: what.into(), value, limit }.into()
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, k: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == k)
    }

    fn sym(&mut self, s: &'static str) -> PResult<()> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{s}`")])
        }
    }

    fn kw(&mut self, k: &str) -> PResult<()> {
        if self.is_kw(k) {
            self.bump();
            Ok(())
        } else {
            self.fail(&[&format!("`{k}`")])
        }
    }

    fn ident(&mut self, what: &str) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.fail(&[what]),
        }
    }

    fn int(&mut self) -> PResult<i64> {
        let neg = if self.is_sym("-") {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(if neg { -v } else { v })
            }
            _ => self.fail(&["integer"]),
        }
    }

    fn number(&mut self) -> PResult<f64> {
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(v as f64)
            }
            Tok::Num(v) => {
                self.bump();
                Ok(v)
            }
            _ => self.fail(&["number"]),
        }
    }

    fn window(&mut self) -> PResult<usize> {
        match self.peek().clone() {
            Tok::Int(v) if v >= 1 => {
                if v as usize > MAX_WINDOW {
                    return Err(self.limit("window", v as usize, MAX_WINDOW));
                }
                self.bump();
                Ok(v as usize)
            }
            _ => self.fail(&["window length >= 1"]),
        }
    }

    fn who(&mut self) -> PResult<Who> {
        if self.is_kw("my") {
            self.bump();
            Ok(Who::My)
        } else if self.is_kw("opp") {
            self.bump();
            Ok(Who::Opp)
        } else {
            self.fail(&["`my`", "`opp`"])
        }
    }

    fn program(&mut self) -> PResult<StrategySpec> {
        self.kw("strategy")?;
        let name = match self.bump() {
            Tok::Str(s) => s,
            _ => {
                self.pos -= 1;
                return self.fail(&["strategy name string"]);
            }
        };
        self.kw("attitude")?;
        self.sym("=")?;
        let attitude = match self.peek().clone() {
            Tok::Ident(s) => match s.parse::<Attitude>() {
                Ok(a) => {
                    self.bump();
                    a
                }
                Err(_) => return self.fail(&["`aggressive`", "`cooperative`", "`neutral`"]),
            },
            _ => return self.fail(&["`aggressive`", "`cooperative`", "`neutral`"]),
        };
        self.sym("{")?;
        self.kw("first")?;
        self.sym(":")?;
        let first_move = self.move_()?;

        let mut registers = Vec::new();
        if self.is_kw("registers") {
            self.bump();
            self.sym(":")?;
            while matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str())) {
                if registers.len() == MAX_ITEMS {
                    return Err(self.limit("register count", MAX_ITEMS + 1, MAX_ITEMS));
                }
                let name = self.ident("register name")?;
                if Accessor::from_plain_name(&name).is_some() || is_call_name(&name) {
                    self.pos -= 1;
                    return self.fail(&["register name that is not a built-in"]);
                }
                self.sym("=")?;
                let init = self.int()?;
                self.kw("in")?;
                self.sym("[")?;
                let min = self.int()?;
                self.sym(",")?;
                let max = self.int()?;
                self.sym("]")?;
                self.registers.push(name.clone());
                registers.push(RegisterDecl { name, init, min, max });
            }
        }

        self.kw("rules")?;
        self.sym(":")?;
        let mut rules = Vec::new();
        while self.is_kw("if") {
            if rules.len() == MAX_ITEMS {
                return Err(self.limit("rule count", MAX_ITEMS + 1, MAX_ITEMS));
            }
            self.bump();
            let guard = self.expr()?;
            self.sym("->")?;
            let action = self.move_()?;
            rules.push(Rule { guard, action });
        }
        if !self.is_kw("default") {
            return self.fail(&["`if`", "`default`"]);
        }
        self.bump();
        self.sym(":")?;
        let default_action = self.move_()?;

        let mut updates = Vec::new();
        if self.is_kw("updates") {
            self.bump();
            self.sym(":")?;
            while matches!(self.peek(), Tok::Ident(s) if !KEYWORDS.contains(&s.as_str())) {
                if updates.len() == MAX_ITEMS {
                    return Err(self.limit("update count", MAX_ITEMS + 1, MAX_ITEMS));
                }
                let name = self.ident("register name")?;
                let target = self.var(name);
                self.sym(":=")?;
                let value = self.expr()?;
                let guard = if self.is_kw("if") {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                updates.push(Update { target, value, guard });
            }
        }
        if !self.is_sym("}") {
            return self.fail(&["`updates`", "register assignment", "`}`"]);
        }
        self.bump();
        if *self.peek() != Tok::Eof {
            return self.fail(&["end of input"]);
        }
        Ok(StrategySpec {
            name,
            attitude,
            description: None,
            first_move,
            registers,
            rules,
            default_action,
            updates,
        })
    }

    fn var(&self, name: String) -> Var {
        let slot = self.registers.iter().position(|r| *r == name);
        Var { name, slot }
    }

    fn move_(&mut self) -> PResult<Move> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "C" => {
                self.bump();
                Ok(Move::Pure(Action::Cooperate))
            }
            Tok::Ident(s) if s == "D" => {
                self.bump();
                Ok(Move::Pure(Action::Defect))
            }
            Tok::Ident(s) if s == "mix" => {
                self.bump();
                self.sym("(")?;
                let p = self.number()?;
                self.sym(")")?;
                Ok(Move::Mix(p))
            }
            _ => self.fail(&["`C`", "`D`", "`mix(p)`"]),
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and()?;
        while self.is_kw("or") {
            self.bump();
            let rhs = self.and()?;
            lhs = Expr::Binary(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> PResult<Expr> {
        let mut lhs = self.not()?;
        while self.is_kw("and") {
            self.bump();
            let rhs = self.not()?;
            lhs = Expr::Binary(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn not(&mut self) -> PResult<Expr> {
        if self.is_kw("not") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Not, Box::new(self.not()?)));
        }
        self.cmp()
    }

    fn cmp(&mut self) -> PResult<Expr> {
        let lhs = self.sum()?;
        let op = match self.peek() {
            Tok::Sym("==") => BinOp::Eq,
            Tok::Sym("!=") => BinOp::Ne,
            Tok::Sym("<") => BinOp::Lt,
            Tok::Sym("<=") => BinOp::Le,
            Tok::Sym(">") => BinOp::Gt,
            Tok::Sym(">=") => BinOp::Ge,
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.sum()?;
        Ok(Expr::Binary(op, Box::new(lhs), Box::new(rhs)))
    }

    fn sum(&mut self) -> PResult<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => BinOp::Add,
                Tok::Sym("-") => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => BinOp::Mul,
                Tok::Sym("/") => BinOp::Div,
                Tok::Sym("%") => BinOp::Rem,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        if self.is_sym("-") {
            self.bump();
            return Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> PResult<Expr> {
        const EXPECTED: &[&str] = &["number", "`true`", "`false`", "`C`", "`D`", "`(`", "accessor", "register"];
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.sym(")")?;
                Ok(e)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" => {
                    self.bump();
                    Ok(Expr::Bool(true))
                }
                "false" => {
                    self.bump();
                    Ok(Expr::Bool(false))
                }
                "C" => {
                    self.bump();
                    Ok(Expr::Act(Action::Cooperate))
                }
                "D" => {
                    self.bump();
                    Ok(Expr::Act(Action::Defect))
                }
                w if is_call_name(w) && matches!(self.peek_at(1), Tok::Sym("(")) => self.call(),
                w if KEYWORDS.contains(&w) => self.fail(EXPECTED),
                w => {
                    self.bump();
                    match Accessor::from_plain_name(w) {
                        Some(acc) => Ok(Expr::Get(acc)),
                        None => Ok(Expr::Var(self.var(word))),
                    }
                }
            },
            _ => self.fail(EXPECTED),
        }
    }

    fn call(&mut self) -> PResult<Expr> {
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => unreachable!("call() is entered on an identifier"),
        };
        self.sym("(")?;
        let e = match name.as_str() {
            "my_last" => Expr::Get(Accessor::MyLast(self.window()?)),
            "opp_last" => Expr::Get(Accessor::OppLast(self.window()?)),
            "rand" => Expr::Get(Accessor::Rand),
            "coop_rate" => {
                let who = self.who()?;
                let window = if self.is_sym(",") {
                    self.bump();
                    Some(self.window()?)
                } else {
                    None
                };
                Expr::Get(Accessor::CoopRate(who, window))
            }
            "pattern" => {
                let who = self.who()?;
                self.sym(",")?;
                let (line, col) = self.here();
                let text = match self.peek().clone() {
                    Tok::Str(s) => s,
                    _ => return self.fail(&["move pattern string"]),
                };
                let moves: Vec<Action> = match text.chars().map(Action::from_char).collect() {
                    Some(m) => m,
                    None => return self.fail(&["string over C and D"]),
                };
                if moves.is_empty() {
                    return self.fail(&["non-empty move pattern"]);
                }
                if moves.len() > MAX_WINDOW {
                    return Err(LimitError {
                        line,
                        col,
                        what: "pattern length".into(),
                        value: moves.len(),
                        limit: MAX_WINDOW,
                    }
                    .into());
                }
                self.bump();
                Expr::Get(Accessor::Pattern(who, moves))
            }
            "min" | "max" | "abs" => {
                let func = match name.as_str() {
                    "min" => Func::Min,
                    "max" => Func::Max,
                    _ => Func::Abs,
                };
                let mut args = vec![self.expr()?];
                while args.len() < func.arity() {
                    self.sym(",")?;
                    args.push(self.expr()?);
                }
                Expr::Call(func, args)
            }
            _ => unreachable!("is_call_name covers every call"),
        };
        self.sym(")")?;
        Ok(e)
    }
}

fn is_call_name(w: &str) -> bool {
    matches!(w, "my_last" | "opp_last" | "rand" | "coop_rate" | "pattern" | "min" | "max" | "abs")
}

/// Parses one strategy from `.ipd` source text.
pub fn parse(src: &str) -> Result<StrategySpec, DslError> {
    let toks = lex(src)?;
    let mut p = Parser { toks, pos: 0, registers: Vec::new() };
    let mut spec = p.program()?;
    spec.description = extract_header(src);
    Ok(spec)
}
