//! Hand-written lexer and recursive-descent parser for specifications.
//!
//! Declarations start with `input`, `time input`, `output` or `trigger`;
//! line breaks carry no meaning beyond separating tokens. After an error the
//! parser skips to the next declaration keyword and continues, so one run
//! reports every broken declaration.

mod lexer;
mod printer;

pub use printer::{print_expression, print_specification};

use std::collections::HashMap;
use std::fmt;

use num_traits::{CheckedMul, Zero};
use thiserror::Error;

use crate::ast::{
    AggFn, BinOp, ExprKind, Expression, InputDecl, Offset, Parameter, SourceSpan, Specification, StreamTemplate,
    TriggerDecl, TriggerKind, UnaryOp,
};
use crate::time::{parse_decimal, Frequency, Rational};
use crate::value::{Value, ValueType};
use lexer::{tokenize, Tok, Token};

/// Maximum nesting of parentheses, operators and operator chains within one expression.
pub const MAX_NESTING: usize = 64;

const KEYWORDS: &[&str] = &[
    "input", "output", "trigger", "time", "invoke", "extend", "terminate", "if", "then", "else", "true", "false",
];
const BUILTINS: &[&str] = &["abs", "sqrt", "min", "max"];

/// Anything that can be rendered with a source excerpt.
pub trait Diagnostic {
    fn span(&self) -> SourceSpan;
    fn message(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub message: String,
    pub span: SourceSpan,
    /// Tokens that would have been accepted at `span`; empty when not applicable.
    pub expected: Vec<String>,
}

impl ParseError {
    pub fn new(message: impl Into<String>, span: SourceSpan) -> ParseError {
        ParseError { message: message.into(), span, expected: Vec::new() }
    }
}

impl Diagnostic for ParseError {
    fn span(&self) -> SourceSpan {
        self.span
    }

    fn message(&self) -> String {
        self.message.clone()
    }
}

/// Renders diagnostics with the offending source line and a caret under the span.
pub fn format_diagnostics<D: Diagnostic>(source: &str, errors: &[D]) -> String {
    let lines: Vec<&str> = source.lines().collect();
    let mut out = String::new();
    for err in errors {
        let span = err.span();
        out.push_str(&format!("{}:{}: error: {}\n", span.line, span.column, err.message()));
        if let Some(text) = lines.get(span.line.saturating_sub(1) as usize) {
            let gutter = span.line.to_string();
            let pad = " ".repeat(gutter.len());
            let indent: String = text
                .chars()
                .take(span.column.saturating_sub(1) as usize)
                .map(|c| if c == '\t' { '\t' } else { ' ' })
                .collect();
            out.push_str(&format!("{gutter} | {text}\n"));
            out.push_str(&format!("{pad} | {indent}{}\n", "^".repeat(span.length.max(1) as usize)));
        }
    }
    out
}

/// Converts a numeric literal and its unit to seconds.
pub fn duration_from_parts(number: &str, unit: &str) -> Result<Rational, String> {
    let value = parse_decimal(number).ok_or_else(|| format!("invalid duration `{number}{unit}`"))?;
    let scale = match unit {
        "ms" => Rational::new(1, 1000),
        "s" | "sec" => Rational::from_integer(1),
        "min" => Rational::from_integer(60),
        "h" => Rational::from_integer(3600),
        other => return Err(format!("unknown duration unit `{other}`")),
    };
    value.checked_mul(&scale).ok_or_else(|| format!("duration `{number}{unit}` is too large"))
}

/// Parses a frequency such as `0.1Hz`; a bare number is read as Hz.
pub fn parse_frequency(text: &str) -> Result<Frequency, String> {
    let text = text.trim();
    let number = text.strip_suffix("Hz").unwrap_or(text);
    let hz = parse_decimal(number).ok_or_else(|| format!("invalid frequency `{text}`"))?;
    Frequency::new(hz).ok_or_else(|| format!("frequency `{text}` must be positive"))
}

/// Parses a duration such as `10s` or `8h` to exact seconds.
pub fn parse_duration(text: &str) -> Result<Rational, String> {
    let text = text.trim();
    let split = text.find(|c: char| !(c.is_ascii_digit() || c == '.')).unwrap_or(text.len());
    let (number, unit) = text.split_at(split);
    if unit.is_empty() {
        return Err(format!("duration `{text}` needs a unit"));
    }
    duration_from_parts(number, unit)
}

/// Parses specification source text.
pub fn parse(source: &str) -> Result<Specification, Vec<ParseError>> {
    let (tokens, mut errors) = tokenize(source);
    let mut parser = Parser { tokens: &tokens, pos: 0, depth: 0, params: Vec::new(), errors: Vec::new() };
    let spec = parser.specification();
    errors.append(&mut parser.errors);
    if errors.is_empty() {
        Ok(spec)
    } else {
        errors.sort_by_key(|e| (e.span.line, e.span.column));
        Err(errors)
    }
}

type PResult<T> = Result<T, ParseError>;

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    depth: usize,
    /// Parameter names of the template being parsed.
    params: Vec<String>,
    errors: Vec<ParseError>,
}

fn is_keyword(name: &str) -> bool {
    KEYWORDS.contains(&name)
}

fn is_decl_start(tok: &Tok) -> bool {
    matches!(tok, Tok::Ident(name) if matches!(name.as_str(), "input" | "output" | "trigger" | "time"))
}

fn comparison(tok: &Tok) -> Option<BinOp> {
    Some(match tok {
        Tok::Lt => BinOp::Lt,
        Tok::Le => BinOp::Le,
        Tok::Gt => BinOp::Gt,
        Tok::Ge => BinOp::Ge,
        Tok::Eq | Tok::EqEq => BinOp::Eq,
        Tok::Ne => BinOp::Ne,
        _ => return None,
    })
}

fn aggregation(tok: &Tok) -> Option<AggFn> {
    match tok {
        Tok::Integral => Some(AggFn::Integral),
        Tok::Ident(word) => AggFn::from_keyword(word),
        _ => None,
    }
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Tok> {
        self.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, n: usize) -> Option<&'t Tok> {
        self.tokens.get(self.pos + n).map(|t| &t.tok)
    }

    fn current_span(&self) -> SourceSpan {
        match self.tokens.get(self.pos) {
            Some(t) => t.span,
            None => self.end_of_previous(),
        }
    }

    /// Position just past the previous token.
    fn end_of_previous(&self) -> SourceSpan {
        match self.pos.checked_sub(1).and_then(|p| self.tokens.get(p)) {
            Some(prev) => SourceSpan::new(prev.span.line, prev.span.column + prev.span.length, 1),
            None => SourceSpan::new(1, 1, 1),
        }
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, tok: &Tok) -> bool {
        self.peek() == Some(tok)
    }

    fn at_ident(&self, word: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(w)) if w == word)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.at(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Error describing the current token against the set of accepted ones.
    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (found, span) = match self.tokens.get(self.pos) {
            None => ("end of input".to_string(), self.end_of_previous()),
            Some(t) if self.pos > 0 && t.span.line > self.tokens[self.pos - 1].span.line => {
                ("end of line".to_string(), self.end_of_previous())
            }
            Some(t) => (t.tok.describe(), t.span),
        };
        ParseError {
            message: format!("expected {}, found {found}", expected.join(" or ")),
            span,
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn expect(&mut self, tok: &Tok, label: &str) -> PResult<SourceSpan> {
        if self.at(tok) {
            Ok(self.advance().map(|t| t.span).unwrap_or_default())
        } else {
            Err(self.unexpected(&[label]))
        }
    }

    fn expect_keyword(&mut self, word: &str) -> PResult<SourceSpan> {
        if self.at_ident(word) {
            Ok(self.advance().map(|t| t.span).unwrap_or_default())
        } else {
            Err(self.unexpected(&[&format!("'{word}'")]))
        }
    }

    fn identifier(&mut self, what: &str) -> PResult<(String, SourceSpan)> {
        match self.peek() {
            Some(Tok::Ident(name)) if !is_keyword(name) => {
                let span = self.advance().map(|t| t.span).unwrap_or_default();
                Ok((name.clone(), span))
            }
            _ => Err(self.unexpected(&[what])),
        }
    }

    fn stream_name(&mut self) -> PResult<(String, SourceSpan)> {
        let (name, span) = self.identifier("stream name")?;
        if BUILTINS.contains(&name.as_str()) {
            return Err(ParseError::new(format!("`{name}` is reserved and cannot name a stream"), span));
        }
        Ok((name, span))
    }

    /// Span from `start` to the end of the last consumed token.
    fn span_from(&self, start: SourceSpan) -> SourceSpan {
        let end = self.end_of_previous();
        if end.line == start.line && end.column > start.column {
            SourceSpan::new(start.line, start.column, end.column - start.column)
        } else {
            start
        }
    }

    fn recover(&mut self) {
        self.advance();
        while let Some(tok) = self.peek() {
            if is_decl_start(tok) {
                break;
            }
            self.pos += 1;
        }
    }

    fn specification(&mut self) -> Specification {
        let mut spec = Specification::default();
        let mut declared: HashMap<String, SourceSpan> = HashMap::new();
        while let Some(tok) = self.peek() {
            self.depth = 0;
            self.params.clear();
            let result = match tok {
                Tok::Ident(w) if w == "input" => self.input_decl(false).map(|i| {
                    let name = (i.name.clone(), i.span);
                    spec.inputs.push(i);
                    Some(name)
                }),
                Tok::Ident(w) if w == "time" => self.input_decl(true).map(|i| {
                    let name = (i.name.clone(), i.span);
                    spec.inputs.push(i);
                    Some(name)
                }),
                Tok::Ident(w) if w == "output" => self.output_decl().map(|o| {
                    let name = (o.name.clone(), o.span);
                    spec.outputs.push(o);
                    Some(name)
                }),
                Tok::Ident(w) if w == "trigger" => self.trigger_decl().map(|t| {
                    spec.triggers.push(t);
                    None
                }),
                _ => Err(self.unexpected(&["'input'", "'output'", "'trigger'"])),
            };
            match result {
                Ok(Some((name, span))) => {
                    if let Some(first) = declared.get(&name) {
                        self.errors.push(ParseError::new(
                            format!("duplicate declaration of `{name}` (first declared at {first})"),
                            span,
                        ));
                    } else {
                        declared.insert(name, span);
                    }
                }
                Ok(None) => {}
                Err(err) => {
                    self.errors.push(err);
                    self.recover();
                }
            }
        }
        spec
    }

    fn value_type(&mut self) -> PResult<ValueType> {
        let ty = match self.peek() {
            Some(Tok::Ident(w)) => match w.as_str() {
                "bool" | "Bool" => Some(ValueType::Bool),
                "int" | "Int" | "Int64" => Some(ValueType::Int),
                "double" | "Double" | "Float64" => Some(ValueType::Double),
                _ => None,
            },
            _ => None,
        };
        match ty {
            Some(ty) => {
                self.pos += 1;
                Ok(ty)
            }
            None => Err(self.unexpected(&["type"])),
        }
    }

    fn input_decl(&mut self, is_time: bool) -> PResult<InputDecl> {
        let start = self.current_span();
        if is_time {
            self.expect_keyword("time")?;
        }
        self.expect_keyword("input")?;
        let ty = self.value_type()?;
        let (name, _) = self.stream_name()?;
        Ok(InputDecl { name, ty, is_time, span: self.span_from(start) })
    }

    fn clause_keyword(&self, offset: usize) -> bool {
        matches!(self.peek_at(offset), Some(Tok::Ident(w)) if matches!(w.as_str(), "invoke" | "extend" | "terminate"))
            && self.peek_at(offset + 1) == Some(&Tok::Colon)
    }

    fn output_decl(&mut self) -> PResult<StreamTemplate> {
        let start = self.current_span();
        self.expect_keyword("output")?;
        let ty = self.value_type()?;
        let (name, _) = self.stream_name()?;
        let mut params = Vec::new();
        if self.eat(&Tok::Lt) {
            loop {
                let pstart = self.current_span();
                let pty = self.value_type()?;
                let (pname, _) = self.identifier("parameter name")?;
                if params.iter().any(|p: &Parameter| p.name == pname) {
                    return Err(ParseError::new(format!("duplicate parameter `{pname}`"), self.span_from(pstart)));
                }
                params.push(Parameter { name: pname, ty: pty, span: self.span_from(pstart) });
                if self.eat(&Tok::Comma) {
                    continue;
                }
                self.expect(&Tok::Gt, "'>'").map_err(|mut e| {
                    e.expected.insert(0, "','".to_string());
                    e.message = e.message.replacen("'>'", "',' or '>'", 1);
                    e
                })?;
                break;
            }
        }
        self.params = params.iter().map(|p| p.name.clone()).collect();
        let mut clock = None;
        if self.eat(&Tok::Colon) {
            clock = Some(self.frequency()?);
        }
        let mut invoke = None;
        let mut extend = None;
        let mut terminate = None;
        loop {
            if matches!(self.peek(), Some(Tok::Assign | Tok::Eq)) && self.clause_keyword(1) {
                self.pos += 1;
                continue;
            }
            if !self.clause_keyword(0) {
                break;
            }
            let Some(Token { tok: Tok::Ident(word), span }) = self.advance() else { break };
            self.pos += 1;
            let duplicate = match word.as_str() {
                "invoke" => {
                    let mut args = vec![self.expression()?];
                    while self.eat(&Tok::Comma) {
                        args.push(self.expression()?);
                    }
                    invoke.replace(args).is_some()
                }
                "extend" => extend.replace(self.expression()?).is_some(),
                _ => terminate.replace(self.expression()?).is_some(),
            };
            if duplicate {
                return Err(ParseError::new(format!("duplicate `{word}` clause"), *span));
            }
        }
        if !self.eat(&Tok::Assign) && !self.eat(&Tok::Eq) {
            return Err(self.unexpected(&["':='"]));
        }
        let expr = self.expression()?;
        Ok(StreamTemplate { name, ty, params, clock, invoke, extend, terminate, expr, span: start })
    }

    fn frequency(&mut self) -> PResult<Frequency> {
        match self.peek() {
            Some(Tok::Number { text, unit }) => {
                let span = self.current_span();
                if unit.as_deref() != Some("Hz") {
                    return Err(ParseError::new("frequency needs the unit `Hz`", span));
                }
                self.pos += 1;
                let hz = parse_decimal(text).ok_or_else(|| ParseError::new("invalid frequency", span))?;
                Frequency::new(hz).ok_or_else(|| ParseError::new("frequency must be positive", span))
            }
            _ => Err(self.unexpected(&["frequency"])),
        }
    }

    fn trigger_decl(&mut self) -> PResult<TriggerDecl> {
        let start = self.current_span();
        self.expect_keyword("trigger")?;
        let kind = if self.at_ident("any") && self.peek_at(1) == Some(&Tok::LParen) {
            self.pos += 2;
            let cond = self.expression()?;
            self.expect(&Tok::RParen, "')'")?;
            TriggerKind::Any(cond)
        } else if self.at_ident("count")
            && self.peek_at(1) == Some(&Tok::LParen)
            && matches!(self.peek_at(2), Some(Tok::Ident(_)))
            && self.peek_at(3) == Some(&Tok::RParen)
        {
            self.pos += 2;
            let (stream, stream_span) = self.stream_name()?;
            self.pos += 1;
            let cmp = self.peek().and_then(comparison).ok_or_else(|| self.unexpected(&["comparison"]))?;
            self.pos += 1;
            let negative = self.eat(&Tok::Minus);
            let bound = match self.peek() {
                Some(Tok::Number { text, unit: None }) => {
                    let span = self.current_span();
                    let n: i64 = text.parse().map_err(|_| ParseError::new("expected an integer bound", span))?;
                    self.pos += 1;
                    if negative {
                        -n
                    } else {
                        n
                    }
                }
                _ => return Err(self.unexpected(&["integer"])),
            };
            TriggerKind::Count { stream, cmp, bound, stream_span }
        } else {
            TriggerKind::Plain(self.expression()?)
        };
        let message = match self.peek() {
            Some(Tok::Str(text)) => {
                self.pos += 1;
                Some(text.clone())
            }
            _ => None,
        };
        Ok(TriggerDecl { kind, message, span: start })
    }

    fn expression(&mut self) -> PResult<Expression> {
        self.disjunction()
    }

    fn binary(op: BinOp, lhs: Expression, rhs: Expression, start: SourceSpan, parser: &Self) -> Expression {
        Expression::new(ExprKind::Binary { op, lhs: Box::new(lhs), rhs: Box::new(rhs) }, parser.span_from(start))
    }

    fn disjunction(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let saved = self.depth;
        let mut lhs = self.conjunction()?;
        while matches!(self.peek(), Some(Tok::Pipe | Tok::PipePipe)) {
            self.pos += 1;
            self.depth += 1;
            let rhs = self.conjunction()?;
            lhs = Self::binary(BinOp::Or, lhs, rhs, start, self);
        }
        self.depth = saved;
        Ok(lhs)
    }

    fn conjunction(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let saved = self.depth;
        let mut lhs = self.comparison()?;
        while matches!(self.peek(), Some(Tok::Amp | Tok::AmpAmp)) {
            self.pos += 1;
            self.depth += 1;
            let rhs = self.comparison()?;
            lhs = Self::binary(BinOp::And, lhs, rhs, start, self);
        }
        self.depth = saved;
        Ok(lhs)
    }

    fn comparison(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let lhs = self.additive()?;
        let Some(op) = self.peek().and_then(comparison) else { return Ok(lhs) };
        self.pos += 1;
        let rhs = self.additive()?;
        if self.peek().and_then(comparison).is_some() {
            return Err(ParseError::new("comparison operators cannot be chained", self.current_span()));
        }
        Ok(Self::binary(op, lhs, rhs, start, self))
    }

    fn additive(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let saved = self.depth;
        let mut lhs = self.multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Plus) => BinOp::Add,
                Some(Tok::Minus) => BinOp::Sub,
                _ => {
                    self.depth = saved;
                    return Ok(lhs);
                }
            };
            self.pos += 1;
            self.depth += 1;
            let rhs = self.multiplicative()?;
            lhs = Self::binary(op, lhs, rhs, start, self);
        }
    }

    fn multiplicative(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let saved = self.depth;
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Star) => BinOp::Mul,
                Some(Tok::Slash) => BinOp::Div,
                Some(Tok::Percent) => BinOp::Rem,
                _ => {
                    self.depth = saved;
                    return Ok(lhs);
                }
            };
            self.pos += 1;
            self.depth += 1;
            let rhs = self.unary()?;
            lhs = Self::binary(op, lhs, rhs, start, self);
        }
    }

    fn unary(&mut self) -> PResult<Expression> {
        if self.depth >= MAX_NESTING {
            return Err(ParseError::new("expression nested too deeply", self.current_span()));
        }
        self.depth += 1;
        let result = self.unary_inner();
        self.depth -= 1;
        result
    }

    fn unary_inner(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let op = match self.peek() {
            Some(Tok::Bang) => UnaryOp::Not,
            Some(Tok::Minus) => UnaryOp::Neg,
            _ => return self.postfix(),
        };
        self.pos += 1;
        let operand = self.unary()?;
        Ok(Expression::new(ExprKind::Unary { op, operand: Box::new(operand) }, self.span_from(start)))
    }

    fn postfix(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let mut expr = self.primary()?;
        let saved = self.depth;
        while self.eat(&Tok::Question) {
            self.depth += 1;
            let default = self.unary()?;
            expr = Expression::new(
                ExprKind::Default { inner: Box::new(expr), default: Box::new(default) },
                self.span_from(start),
            );
        }
        self.depth = saved;
        Ok(expr)
    }

    fn argument_list(&mut self) -> PResult<Vec<Expression>> {
        self.expect(&Tok::LParen, "'('")?;
        let mut args = vec![self.expression()?];
        while self.eat(&Tok::Comma) {
            args.push(self.expression()?);
        }
        self.expect(&Tok::RParen, "')'")?;
        Ok(args)
    }

    fn number(&mut self, text: &str, span: SourceSpan) -> PResult<Value> {
        if text.contains(['.', 'e', 'E']) {
            match text.parse::<f64>() {
                Ok(d) if d.is_finite() => Ok(Value::Double(d)),
                _ => Err(ParseError::new(format!("invalid number `{text}`"), span)),
            }
        } else {
            text.parse::<i64>()
                .map(Value::Int)
                .map_err(|_| ParseError::new(format!("integer literal `{text}` is out of range"), span))
        }
    }

    fn primary(&mut self) -> PResult<Expression> {
        let start = self.current_span();
        let expected = ["expression"];
        let Some(tok) = self.peek() else { return Err(self.unexpected(&expected)) };
        match tok {
            Tok::Number { text, unit: None } => {
                self.pos += 1;
                let value = self.number(text, start)?;
                Ok(Expression::new(ExprKind::Const(value), start))
            }
            Tok::LParen => {
                self.pos += 1;
                let inner = self.expression()?;
                self.expect(&Tok::RParen, "')'")?;
                Ok(inner)
            }
            Tok::Ident(word) => match word.as_str() {
                "true" | "false" => {
                    self.pos += 1;
                    Ok(Expression::new(ExprKind::Const(Value::Bool(word == "true")), start))
                }
                "if" => {
                    self.pos += 1;
                    let cond = self.expression()?;
                    self.expect_keyword("then")?;
                    let then = self.expression()?;
                    self.expect_keyword("else")?;
                    let otherwise = self.expression()?;
                    Ok(Expression::new(
                        ExprKind::IfThenElse { cond: Box::new(cond), then: Box::new(then), otherwise: Box::new(otherwise) },
                        self.span_from(start),
                    ))
                }
                w if is_keyword(w) => Err(self.unexpected(&expected)),
                w if self.params.iter().any(|p| p == w) => {
                    self.pos += 1;
                    Ok(Expression::new(ExprKind::ParamRef(w.to_string()), start))
                }
                w if BUILTINS.contains(&w) => {
                    self.pos += 1;
                    let args = self.argument_list()?;
                    Ok(Expression::new(ExprKind::FnCall { function: w.to_string(), args }, self.span_from(start)))
                }
                w => {
                    self.pos += 1;
                    let stream = w.to_string();
                    let args = if self.at(&Tok::LParen) { self.argument_list()? } else { Vec::new() };
                    if self.eat(&Tok::LBracket) {
                        self.bracket(stream, args, start)
                    } else {
                        Ok(Expression::new(
                            ExprKind::StreamAccess { stream, args, offset: Offset::Discrete(0) },
                            self.span_from(start),
                        ))
                    }
                }
            },
            _ => Err(self.unexpected(&expected)),
        }
    }

    /// Parses the inside of `[...]` after a stream name; the `[` is consumed.
    #[inline(never)]
    fn bracket(&mut self, stream: String, mut args: Vec<Expression>, start: SourceSpan) -> PResult<Expression> {
        let negative = self.eat(&Tok::Minus);
        let Some(Tok::Number { text, unit }) = self.peek() else {
            return Err(self.unexpected(&["offset", "duration"]));
        };
        let number_span = self.current_span();
        self.pos += 1;
        let with_default = |parser: &mut Self, access: ExprKind| -> PResult<Expression> {
            let default = if parser.eat(&Tok::Comma) { Some(parser.expression()?) } else { None };
            parser.expect(&Tok::RBracket, "']'")?;
            let access = Expression::new(access, parser.span_from(start));
            Ok(match default {
                Some(d) => Expression::new(
                    ExprKind::Default { inner: Box::new(access), default: Box::new(d) },
                    parser.span_from(start),
                ),
                None => access,
            })
        };
        match unit {
            None => {
                if !negative && self.at(&Tok::Comma) && self.peek_at(1).and_then(aggregation).is_some() {
                    return Err(ParseError::new("window duration needs a unit such as `s`", number_span));
                }
                let n: i64 = text
                    .parse()
                    .map_err(|_| ParseError::new(format!("offset `{text}` must be an integer"), number_span))?;
                with_default(self, ExprKind::StreamAccess { stream, args, offset: Offset::Discrete(if negative { -n } else { n }) })
            }
            Some(unit) => {
                let duration = duration_from_parts(text, unit).map_err(|m| ParseError::new(m, number_span))?;
                if negative {
                    return with_default(self, ExprKind::StreamAccess { stream, args, offset: Offset::RealTime(-duration) });
                }
                if duration.is_zero() {
                    return Err(ParseError::new("window duration must be positive", number_span));
                }
                self.expect(&Tok::Comma, "','")?;
                let (agg, default) = if self.peek().and_then(aggregation).is_some() {
                    let agg = self.aggregation(&mut args)?;
                    let default = if self.eat(&Tok::Comma) { Some(self.expression()?) } else { None };
                    (agg, default)
                } else {
                    let default = self.expression()?;
                    self.expect(&Tok::Comma, "','")?;
                    if self.peek().and_then(aggregation).is_none() {
                        return Err(self.unexpected(&["aggregation"]));
                    }
                    (self.aggregation(&mut args)?, Some(default))
                };
                self.expect(&Tok::RBracket, "']'")?;
                let window = Expression::new(
                    ExprKind::WindowAccess { stream, args, duration, aggregation: agg },
                    self.span_from(start),
                );
                Ok(match default {
                    Some(d) => Expression::new(
                        ExprKind::Default { inner: Box::new(window), default: Box::new(d) },
                        self.span_from(start),
                    ),
                    None => window,
                })
            }
        }
    }

    /// Aggregation keyword, moving any `(args)` onto the window target.
    fn aggregation(&mut self, stream_args: &mut Vec<Expression>) -> PResult<AggFn> {
        let span = self.current_span();
        let agg = self.peek().and_then(aggregation).ok_or_else(|| self.unexpected(&["aggregation"]))?;
        self.pos += 1;
        if self.at(&Tok::LParen) {
            let args = self.argument_list()?;
            if !stream_args.is_empty() {
                return Err(ParseError::new("instance arguments given both on the stream and the aggregation", span));
            }
            *stream_args = args;
        }
        Ok(agg)
    }
}
