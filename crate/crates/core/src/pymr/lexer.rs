use super::PymrError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    Str(String),
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

const OPS: &[&str] = &[
    "**=", "//=", "->", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "**", "//", ":=", "(", ")", "[", "]",
    "{", "}", ",", ":", ".", "=", "<", ">", "+", "-", "*", "/", "%", "@", ";", "|", "&", "^", "~",
];

fn syntax(line: usize, col: usize, message: impl Into<String>) -> PymrError {
    PymrError::Syntax { line, col, message: message.into() }
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, PymrError> {
    let mut out = Vec::new();
    let mut indents = vec![0usize];
    let mut depth = 0usize;
    let mut continued = false;
    for (lineno, raw) in src.lines().enumerate() {
        let line = lineno + 1;
        let chars: Vec<char> = raw.chars().collect();
        let mut i = 0;
        if depth == 0 && !continued {
            let mut width = 0;
            while i < chars.len() && (chars[i] == ' ' || chars[i] == '\t') {
                width += if chars[i] == '\t' { 8 - width % 8 } else { 1 };
                i += 1;
            }
            if i == chars.len() || chars[i] == '#' {
                continue;
            }
            let top = *indents.last().expect("nonempty");
            if width > top {
                indents.push(width);
                out.push(Token { tok: Tok::Indent, line, col: 1 });
            } else {
                while width < *indents.last().expect("nonempty") {
                    indents.pop();
                    out.push(Token { tok: Tok::Dedent, line, col: 1 });
                }
                if width != *indents.last().expect("nonempty") {
                    return Err(syntax(line, i + 1, "inconsistent dedent"));
                }
            }
        }
        continued = false;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c == ' ' || c == '\t' {
                i += 1;
            } else if c == '#' {
                break;
            } else if c == '\\' && i + 1 == chars.len() {
                continued = true;
                i += 1;
            } else if c == '"' || c == '\'' {
                let (s, next) = string(&chars, i, line)?;
                out.push(Token { tok: Tok::Str(s), line, col });
                i = next;
            } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '.' || chars[i] == '_') {
                    if (chars[i] == 'e' || chars[i] == 'E') && matches!(chars.get(i + 1), Some('+' | '-')) {
                        i += 1;
                    }
                    i += 1;
                }
                let text: String = chars[start..i].iter().filter(|c| **c != '_').collect();
                let tok = if let Ok(n) = text.parse::<i64>() {
                    Tok::Int(n)
                } else if let Ok(f) = text.parse::<f64>() {
                    Tok::Float(f)
                } else {
                    return Err(syntax(line, col, format!("bad number literal {text:?}")));
                };
                out.push(Token { tok, line, col });
            } else if c.is_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                if matches!(chars.get(i), Some('"' | '\'')) {
                    let prefix = word.to_lowercase();
                    if prefix.contains('f') {
                        return Err(PymrError::Unsupported { construct: "f-string".into(), line, col });
                    }
                    if matches!(prefix.as_str(), "r" | "b" | "u" | "rb" | "br") {
                        return Err(PymrError::Unsupported { construct: "prefixed string".into(), line, col });
                    }
                }
                out.push(Token { tok: Tok::Name(word), line, col });
            } else {
                let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
                let op = OPS
                    .iter()
                    .find(|op| rest.starts_with(**op))
                    .ok_or_else(|| syntax(line, col, format!("unexpected character {c:?}")))?;
                match *op {
                    "(" | "[" | "{" => depth += 1,
                    ")" | "]" | "}" => {
                        depth = depth.checked_sub(1).ok_or_else(|| syntax(line, col, format!("unmatched {op:?}")))?
                    }
                    _ => {}
                }
                out.push(Token { tok: Tok::Op(op), line, col });
                i += op.len();
            }
        }
        if depth == 0 && !continued && out.last().is_some_and(|t| t.tok != Tok::Newline) {
            out.push(Token { tok: Tok::Newline, line, col: chars.len() + 1 });
        }
    }
    let end_line = src.lines().count() + 1;
    if depth > 0 {
        return Err(syntax(end_line, 1, "unexpected end of input inside brackets"));
    }
    if out.last().is_some_and(|t| t.tok != Tok::Newline) {
        out.push(Token { tok: Tok::Newline, line: end_line, col: 1 });
    }
    while indents.len() > 1 {
        indents.pop();
        out.push(Token { tok: Tok::Dedent, line: end_line, col: 1 });
    }
    out.push(Token { tok: Tok::Eof, line: end_line, col: 1 });
    Ok(out)
}

fn string(chars: &[char], start: usize, line: usize) -> Result<(String, usize), PymrError> {
    let q = chars[start];
    if chars.get(start + 1) == Some(&q) && chars.get(start + 2) == Some(&q) {
        return Err(PymrError::Unsupported { construct: "triple-quoted string".into(), line, col: start + 1 });
    }
    let mut s = String::new();
    let mut i = start + 1;
    while i < chars.len() {
        match chars[i] {
            c if c == q => return Ok((s, i + 1)),
            '\\' => {
                let e = *chars.get(i + 1).ok_or_else(|| syntax(line, i + 1, "unterminated string"))?;
                s.push(match e {
                    'n' => '\n',
                    't' => '\t',
                    '\\' | '\'' | '"' => e,
                    other => return Err(syntax(line, i + 1, format!("unsupported escape \\{other}"))),
                });
                i += 2;
            }
            c => {
                s.push(c);
                i += 1;
            }
        }
    }
    Err(syntax(line, start + 1, "unterminated string"))
}
