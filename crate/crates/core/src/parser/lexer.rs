//! Tokenizer for specification source text.

use crate::ast::SourceSpan;

use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// A numeric literal, with the letters glued to it (`10sec`, `0.1Hz`) as its unit.
    Number { text: String, unit: Option<String> },
    Str(String),
    /// The integral aggregation symbol, written `∫` or `$\int$`.
    Integral,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Lt,
    Gt,
    Le,
    Ge,
    Assign,
    Eq,
    EqEq,
    Ne,
    Bang,
    Colon,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Amp,
    AmpAmp,
    Pipe,
    PipePipe,
    Question,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(name) => format!("`{name}`"),
            Tok::Number { text, unit: Some(u) } => format!("`{text}{u}`"),
            Tok::Number { text, unit: None } => format!("`{text}`"),
            Tok::Str(_) => "string literal".to_string(),
            Tok::Integral => "`∫`".to_string(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Lt => "<",
            Tok::Gt => ">",
            Tok::Le => "<=",
            Tok::Ge => ">=",
            Tok::Assign => ":=",
            Tok::Eq => "=",
            Tok::EqEq => "==",
            Tok::Ne => "!=",
            Tok::Bang => "!",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::Amp => "&",
            Tok::AmpAmp => "&&",
            Tok::Pipe => "|",
            Tok::PipePipe => "||",
            Tok::Question => "?",
            Tok::Ident(_) | Tok::Number { .. } | Tok::Str(_) | Tok::Integral => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    rest: &'a str,
    line: u32,
    column: u32,
}

impl<'a> Cursor<'a> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn peek2(&self) -> Option<char> {
        self.rest.chars().nth(1)
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        self.rest = &self.rest[c.len_utf8()..];
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> String {
        let mut out = String::new();
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            out.push(c);
            self.bump();
        }
        out
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens. Lexical errors are collected and the offending characters skipped.
pub(crate) fn tokenize(source: &str) -> (Vec<Token>, Vec<ParseError>) {
    let mut cur = Cursor { chars: source.chars().peekable(), rest: source, line: 1, column: 1 };
    let mut tokens = Vec::new();
    let mut errors = Vec::new();
    while let Some(c) = cur.peek() {
        let (line, column) = (cur.line, cur.column);
        let span_to = |cur: &Cursor<'_>| {
            let length = if cur.line == line { cur.column - column } else { 1 };
            SourceSpan::new(line, column, length.max(1))
        };
        if c.is_whitespace() {
            cur.bump();
            continue;
        }
        if c == '#' {
            cur.take_while(|c| c != '\n');
            continue;
        }
        let tok = if is_ident_start(c) {
            Tok::Ident(cur.take_while(is_ident_continue))
        } else if c.is_ascii_digit() || (c == '.' && cur.peek2().is_some_and(|d| d.is_ascii_digit())) {
            let mut text = cur.take_while(|c| c.is_ascii_digit());
            if cur.peek() == Some('.') {
                cur.bump();
                text.push('.');
                text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
            }
            // exponent: `e` followed by a digit or a signed digit
            if matches!(cur.peek(), Some('e' | 'E')) {
                let mut ahead = cur.rest.chars().skip(1);
                let next = ahead.next();
                let exp = match next {
                    Some(d) if d.is_ascii_digit() => true,
                    Some('+' | '-') => ahead.next().is_some_and(|d| d.is_ascii_digit()),
                    _ => false,
                };
                if exp {
                    text.push(cur.bump().unwrap_or('e'));
                    if matches!(cur.peek(), Some('+' | '-')) {
                        text.push(cur.bump().unwrap_or('+'));
                    }
                    text.push_str(&cur.take_while(|c| c.is_ascii_digit()));
                }
            }
            let unit = cur.take_while(is_ident_continue);
            Tok::Number { text, unit: (!unit.is_empty()).then_some(unit) }
        } else if c == '"' {
            cur.bump();
            let mut text = String::new();
            let mut closed = false;
            while let Some(c) = cur.peek() {
                if c == '\n' {
                    break;
                }
                cur.bump();
                match c {
                    '"' => {
                        closed = true;
                        break;
                    }
                    '\\' => match cur.bump() {
                        Some('n') => text.push('\n'),
                        Some('t') => text.push('\t'),
                        Some(other) => text.push(other),
                        None => break,
                    },
                    other => text.push(other),
                }
            }
            if !closed {
                errors.push(ParseError::new("unterminated string literal", span_to(&cur)));
                continue;
            }
            Tok::Str(text)
        } else if c == '∫' {
            cur.bump();
            Tok::Integral
        } else if cur.rest.starts_with("$\\int$") {
            for _ in 0..6 {
                cur.bump();
            }
            Tok::Integral
        } else {
            cur.bump();
            let next = cur.peek();
            let two = |tok: Tok, cur: &mut Cursor<'_>| {
                cur.bump();
                tok
            };
            match (c, next) {
                (':', Some('=')) => two(Tok::Assign, &mut cur),
                ('=', Some('=')) => two(Tok::EqEq, &mut cur),
                ('!', Some('=')) => two(Tok::Ne, &mut cur),
                ('<', Some('=')) => two(Tok::Le, &mut cur),
                ('>', Some('=')) => two(Tok::Ge, &mut cur),
                ('&', Some('&')) => two(Tok::AmpAmp, &mut cur),
                ('|', Some('|')) => two(Tok::PipePipe, &mut cur),
                ('(', _) => Tok::LParen,
                (')', _) => Tok::RParen,
                ('[', _) => Tok::LBracket,
                (']', _) => Tok::RBracket,
                ('<', _) => Tok::Lt,
                ('>', _) => Tok::Gt,
                ('=', _) => Tok::Eq,
                ('!', _) => Tok::Bang,
                (':', _) => Tok::Colon,
                (',', _) => Tok::Comma,
                ('+', _) => Tok::Plus,
                ('-', _) => Tok::Minus,
                ('*', _) => Tok::Star,
                ('/', _) => Tok::Slash,
                ('%', _) => Tok::Percent,
                ('&', _) => Tok::Amp,
                ('|', _) => Tok::Pipe,
                ('?', _) => Tok::Question,
                _ => {
                    errors.push(ParseError::new(format!("unexpected character `{c}`"), span_to(&cur)));
                    continue;
                }
            }
        };
        tokens.push(Token { tok, span: span_to(&cur) });
    }
    (tokens, errors)
}
