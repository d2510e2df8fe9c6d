//! Parser for the textual formula syntax used in build-model CSV files and
//! in result tables: identifiers, `true`, `false`, `!`, `&&`, `||` and
//! parentheses. `&&` binds tighter than `||`.
//!
//! Operator chains are read into a single flat `And`/`Or`; explicitly
//! parenthesized sub-expressions stay nested, so `parse(f.to_string())`
//! reproduces `f` exactly.

use super::{Formula, FormulaError};

pub fn parse_formula(text: &str) -> Result<Formula, FormulaError> {
    let mut parser = Parser { src: text, pos: 0 };
    let f = parser.parse_or()?;
    parser.skip_ws();
    if parser.pos != text.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(f)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> FormulaError {
        FormulaError::Syntax { position: self.pos, message: message.to_string() }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn parse_or(&mut self) -> Result<Formula, FormulaError> {
        let mut ops = vec![self.parse_and()?];
        while self.eat("||") {
            ops.push(self.parse_and()?);
        }
        Ok(Formula::or(ops))
    }

    fn parse_and(&mut self) -> Result<Formula, FormulaError> {
        let mut ops = vec![self.parse_unary()?];
        while self.eat("&&") {
            ops.push(self.parse_unary()?);
        }
        Ok(Formula::and(ops))
    }

    fn parse_unary(&mut self) -> Result<Formula, FormulaError> {
        if self.eat("!") {
            return Ok(Formula::not(self.parse_unary()?));
        }
        if self.eat("(") {
            let inner = self.parse_or()?;
            if !self.eat(")") {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        self.skip_ws();
        let ident_len =
            self.rest().char_indices().find(|&(_, c)| !is_ident_char(c)).map_or(self.rest().len(), |(i, _)| i);
        if ident_len == 0 {
            return Err(self.error("expected identifier, constant, `!` or `(`"));
        }
        let ident = &self.rest()[..ident_len];
        let f = match ident {
            "true" => Formula::True,
            "false" => Formula::False,
            name => Formula::try_var(name)?,
        };
        self.pos += ident_len;
        Ok(f)
    }
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '.' || c == '-' || c == '$' || c == ':'
}
