//! Translation of `#if`-family conditions into formulas.
//!
//! Supported: `defined(X)`, `defined X`, `!`, `&&`, `||`, parentheses,
//! integer literals and bare identifiers (read as a defined-test).
//! Everything else (arithmetic, comparisons, function-like macro calls,
//! character literals) makes the whole condition unparsable; the caller
//! then uses `true` and records a warning.

use std::collections::HashMap;

use crate::formula::Formula;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConditionKind {
    If,
    Ifdef,
    Ifndef,
    Elif,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MacroState {
    /// Defined, with the replacement text (empty for `#define X`).
    Defined(String),
    Undefined,
}

/// Macro states collected from unconditional `#define`/`#undef` lines seen
/// so far in the current file; later directives overwrite earlier ones.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MacroTable {
    entries: HashMap<String, MacroState>,
}

impl MacroTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn define(&mut self, name: impl Into<String>, value: impl Into<String>) {
        self.entries.insert(name.into(), MacroState::Defined(value.into()));
    }

    pub fn undefine(&mut self, name: impl Into<String>) {
        self.entries.insert(name.into(), MacroState::Undefined);
    }

    pub fn get(&self, name: &str) -> Option<&MacroState> {
        self.entries.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Applies a `#define` body (`NAME`, `NAME value`, `NAME(args) body`).
    /// Returns the macro name, or `None` when the body has no name.
    pub fn apply_define(&mut self, body: &str) -> Option<String> {
        let name_len = ident_len(body);
        if name_len == 0 {
            return None;
        }
        let name = &body[..name_len];
        let rest = &body[name_len..];
        let value = if rest.starts_with('(') {
            // Function-like macro: only its defined-ness is usable.
            String::from("<function-like>")
        } else {
            rest.trim().to_string()
        };
        self.define(name, value);
        Some(name.to_string())
    }

    pub fn apply_undef(&mut self, body: &str) -> Option<String> {
        let name_len = ident_len(body);
        if name_len == 0 {
            return None;
        }
        let name = body[..name_len].to_string();
        self.undefine(name.clone());
        Some(name)
    }
}

fn ident_len(text: &str) -> usize {
    let mut chars = text.char_indices();
    match chars.next() {
        Some((_, c)) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return 0,
    }
    chars.find(|&(_, c)| !(c.is_ascii_alphanumeric() || c == '_')).map_or(text.len(), |(i, _)| i)
}

/// Result of translating one directive condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedCondition {
    pub formula: Formula,
    /// Set when the text could not be parsed and `formula` is the `true` fallback.
    pub unparsable: Option<String>,
}

impl ParsedCondition {
    fn ok(formula: Formula) -> Self {
        ParsedCondition { formula, unparsable: None }
    }

    fn fallback(reason: impl Into<String>) -> Self {
        ParsedCondition { formula: Formula::True, unparsable: Some(reason.into()) }
    }
}

pub fn parse_cpp_condition(text: &str, kind: ConditionKind, macros: &MacroTable) -> ParsedCondition {
    match kind {
        ConditionKind::Ifdef | ConditionKind::Ifndef => {
            let text = text.trim();
            let len = ident_len(text);
            if len == 0 || !text[len..].trim().is_empty() {
                return ParsedCondition::fallback(format!("expected a single macro name, found `{text}`"));
            }
            let defined = defined_test(&text[..len], macros);
            ParsedCondition::ok(if kind == ConditionKind::Ifndef { negate(defined) } else { defined })
        }
        ConditionKind::If | ConditionKind::Elif => match tokenize(text) {
            Err(tok) => ParsedCondition::fallback(format!("unsupported token `{tok}`")),
            Ok(tokens) => {
                let mut parser = ExprParser { tokens: &tokens, pos: 0, macros };
                match parser.parse_or() {
                    Ok(f) if parser.pos == tokens.len() => ParsedCondition::ok(f),
                    Ok(_) => ParsedCondition::fallback("unexpected trailing tokens"),
                    Err(reason) => ParsedCondition::fallback(reason),
                }
            }
        },
    }
}

fn negate(f: Formula) -> Formula {
    match f {
        Formula::True => Formula::False,
        Formula::False => Formula::True,
        other => Formula::not(other),
    }
}

fn defined_test(name: &str, macros: &MacroTable) -> Formula {
    match macros.get(name) {
        Some(MacroState::Defined(_)) => Formula::True,
        Some(MacroState::Undefined) => Formula::False,
        None => Formula::var(name),
    }
}

fn parse_int(text: &str) -> Option<u64> {
    let digits = text.trim_end_matches(['u', 'U', 'l', 'L']);
    if let Some(hex) = digits.strip_prefix("0x").or_else(|| digits.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16).ok()
    } else if digits.len() > 1 && digits.starts_with('0') {
        u64::from_str_radix(&digits[1..], 8).ok()
    } else {
        digits.parse().ok()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    Ident(String),
    Int(u64),
    LParen,
    RParen,
    Not,
    AndAnd,
    OrOr,
}

/// Tokenizes the supported subset; the first unsupported token is returned
/// as the error.
fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let rest = &text[i..];
        if rest.starts_with("&&") {
            tokens.push(Token::AndAnd);
            i += 2;
        } else if rest.starts_with("||") {
            tokens.push(Token::OrOr);
            i += 2;
        } else if rest.starts_with("!=") {
            return Err("!=".into());
        } else if c == '!' {
            tokens.push(Token::Not);
            i += 1;
        } else if c == '(' {
            tokens.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            tokens.push(Token::RParen);
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let len = ident_len(rest);
            tokens.push(Token::Ident(rest[..len].to_string()));
            i += len;
        } else if c.is_ascii_digit() {
            let len = rest.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(rest.len());
            let literal = &rest[..len];
            tokens.push(Token::Int(parse_int(literal).ok_or_else(|| literal.to_string())?));
            i += len;
        } else {
            return Err(rest.chars().next().unwrap().to_string());
        }
    }
    Ok(tokens)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
    macros: &'a MacroTable,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn parse_or(&mut self) -> Result<Formula, String> {
        let mut ops = vec![self.parse_and()?];
        while self.peek() == Some(&Token::OrOr) {
            self.pos += 1;
            ops.push(self.parse_and()?);
        }
        Ok(Formula::or(ops))
    }

    fn parse_and(&mut self) -> Result<Formula, String> {
        let mut ops = vec![self.parse_unary()?];
        while self.peek() == Some(&Token::AndAnd) {
            self.pos += 1;
            ops.push(self.parse_unary()?);
        }
        Ok(Formula::and(ops))
    }

    fn parse_unary(&mut self) -> Result<Formula, String> {
        match self.next().cloned() {
            Some(Token::Not) => Ok(Formula::not(self.parse_unary()?)),
            Some(Token::LParen) => {
                let inner = self.parse_or()?;
                match self.next() {
                    Some(Token::RParen) => Ok(inner),
                    _ => Err("missing `)`".into()),
                }
            }
            Some(Token::Int(n)) => Ok(Formula::constant(n != 0)),
            Some(Token::Ident(name)) if name == "defined" => {
                let name = match self.next().cloned() {
                    Some(Token::Ident(n)) => n,
                    Some(Token::LParen) => {
                        let n = match self.next().cloned() {
                            Some(Token::Ident(n)) => n,
                            _ => return Err("expected macro name after `defined(`".into()),
                        };
                        if self.next() != Some(&Token::RParen) {
                            return Err("missing `)` after `defined(`".into());
                        }
                        n
                    }
                    _ => return Err("expected macro name after `defined`".into()),
                };
                Ok(defined_test(&name, self.macros))
            }
            Some(Token::Ident(name)) => {
                if self.peek() == Some(&Token::LParen) {
                    return Err(format!("function-like macro `{name}(...)`"));
                }
                Ok(self.bare_identifier(&name))
            }
            Some(t) => Err(format!("unexpected token {t:?}")),
            None => Err("unexpected end of condition".into()),
        }
    }

    /// A bare identifier is a defined-test unless a known macro gives it an
    /// integer value.
    fn bare_identifier(&self, name: &str) -> Formula {
        match self.macros.get(name) {
            Some(MacroState::Defined(value)) => match parse_int(value.trim()) {
                Some(n) => Formula::constant(n != 0),
                None => Formula::True,
            },
            Some(MacroState::Undefined) => Formula::False,
            None => Formula::var(name),
        }
    }
}
