//! Physical-line lexing: comment stripping, line classification and
//! preprocessor-directive detection with backslash continuations.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineKind {
    Code,
    Blank,
    Comment,
    Directive,
}

/// A preprocessor directive with continuation lines joined and comments removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Directive {
    /// 1-based line of the `#`.
    pub line: usize,
    /// 1-based last physical line (differs from `line` for continuations).
    pub last_line: usize,
    pub keyword: String,
    pub body: String,
}

#[derive(Debug, Default)]
pub struct LexedFile {
    pub kinds: Vec<LineKind>,
    pub directives: Vec<Directive>,
}

struct StrippedLine {
    text: String,
    has_code: bool,
    has_comment: bool,
}

#[derive(Default)]
struct Lexer {
    in_block_comment: bool,
}

impl Lexer {
    /// Removes comments from one physical line, keeping string and
    /// character literals intact. Comments are replaced by a space.
    fn strip(&mut self, line: &str) -> StrippedLine {
        let mut out = String::with_capacity(line.len());
        let mut has_code = false;
        let mut has_comment = self.in_block_comment;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let next = chars.get(i + 1).copied();
            if self.in_block_comment {
                if c == '*' && next == Some('/') {
                    self.in_block_comment = false;
                    out.push(' ');
                    i += 2;
                } else {
                    i += 1;
                }
                continue;
            }
            match (c, next) {
                ('/', Some('*')) => {
                    self.in_block_comment = true;
                    has_comment = true;
                    i += 2;
                }
                ('/', Some('/')) => {
                    has_comment = true;
                    // A trailing backslash still continues a directive.
                    if line.trim_end().ends_with('\\') {
                        out.push_str(" \\");
                    }
                    break;
                }
                ('"', _) | ('\'', _) => {
                    has_code = true;
                    out.push(c);
                    i += 1;
                    while i < chars.len() {
                        let d = chars[i];
                        out.push(d);
                        i += 1;
                        if d == '\\' && i < chars.len() {
                            out.push(chars[i]);
                            i += 1;
                        } else if d == c {
                            break;
                        }
                    }
                }
                _ => {
                    if !c.is_whitespace() {
                        has_code = true;
                    }
                    out.push(c);
                    i += 1;
                }
            }
        }
        StrippedLine { text: out, has_code, has_comment }
    }
}

/// Splits text into physical lines (a trailing newline does not start a
/// new line; `\r\n` is accepted).
pub fn physical_lines(text: &str) -> Vec<&str> {
    text.lines().collect()
}

pub fn lex(text: &str) -> LexedFile {
    let lines = physical_lines(text);
    let mut lexer = Lexer::default();
    let mut out = LexedFile { kinds: Vec::with_capacity(lines.len()), directives: Vec::new() };
    let mut pending: Option<(Directive, String)> = None;

    for (idx, raw) in lines.iter().enumerate() {
        let line_no = idx + 1;
        let stripped = lexer.strip(raw);
        let continues = stripped.text.trim_end().ends_with('\\');

        if let Some((mut directive, mut body)) = pending.take() {
            out.kinds.push(LineKind::Directive);
            body.push(' ');
            body.push_str(strip_continuation(&stripped.text));
            directive.last_line = line_no;
            if continues {
                pending = Some((directive, body));
            } else {
                out.directives.push(finish_directive(directive, &body));
            }
            continue;
        }

        let trimmed = stripped.text.trim_start();
        // Comments count as whitespace, so `/* x */ #if A` is a directive too.
        if let Some(after_hash) = trimmed.strip_prefix('#') {
            out.kinds.push(LineKind::Directive);
            let directive =
                Directive { line: line_no, last_line: line_no, keyword: String::new(), body: String::new() };
            let body = strip_continuation(after_hash.trim_start()).to_string();
            if continues {
                pending = Some((directive, body));
            } else {
                out.directives.push(finish_directive(directive, &body));
            }
            continue;
        }

        out.kinds.push(if stripped.has_code {
            LineKind::Code
        } else if stripped.has_comment {
            LineKind::Comment
        } else {
            LineKind::Blank
        });
    }
    if let Some((directive, body)) = pending {
        out.directives.push(finish_directive(directive, &body));
    }
    out
}

fn strip_continuation(text: &str) -> &str {
    let t = text.trim_end();
    t.strip_suffix('\\').unwrap_or(t)
}

fn finish_directive(mut directive: Directive, joined: &str) -> Directive {
    let joined = joined.trim();
    let keyword_len = joined.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(joined.len());
    directive.keyword = joined[..keyword_len].to_string();
    directive.body = joined[keyword_len..].split_whitespace().collect::<Vec<_>>().join(" ");
    directive
}
