use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use num_bigint::BigInt;

use super::parser::SyntaxError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(BigInt),
    Kw(Kw),
    Sym(&'static str),
    Eof,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Kw {
    Class,
    Void,
    Int,
    Boolean,
    If,
    Else,
    While,
    Return,
    True,
    False,
    New,
    Public,
    Private,
    Protected,
    Static,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(n) => write!(f, "integer `{n}`"),
            Tok::Kw(k) => write!(f, "`{}`", kw_text(*k)),
            Tok::Sym(s) => write!(f, "`{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn kw_text(k: Kw) -> &'static str {
    match k {
        Kw::Class => "class",
        Kw::Void => "void",
        Kw::Int => "int",
        Kw::Boolean => "boolean",
        Kw::If => "if",
        Kw::Else => "else",
        Kw::While => "while",
        Kw::Return => "return",
        Kw::True => "true",
        Kw::False => "false",
        Kw::New => "new",
        Kw::Public => "public",
        Kw::Private => "private",
        Kw::Protected => "protected",
        Kw::Static => "static",
    }
}

fn keyword(s: &str) -> Option<Kw> {
    Some(match s {
        "class" => Kw::Class,
        "void" => Kw::Void,
        "int" => Kw::Int,
        "boolean" => Kw::Boolean,
        "if" => Kw::If,
        "else" => Kw::Else,
        "while" => Kw::While,
        "return" => Kw::Return,
        "true" => Kw::True,
        "false" => Kw::False,
        "new" => Kw::New,
        "public" => Kw::Public,
        "private" => Kw::Private,
        "protected" => Kw::Protected,
        "static" => Kw::Static,
        _ => return None,
    })
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col: u32,
    pub start: usize,
    pub end: usize,
}

const SYMBOLS: [&str; 24] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ";", ",", ".", "=", "+", "-", "*",
    "/", "%", "<", ">", "!",
];

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == b'/' && bytes.get(i + 1) == Some(&b'/') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            keyword(word).map(Tok::Kw).unwrap_or_else(|| Tok::Ident(String::from(word)))
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let n = src[start..i].parse::<BigInt>().map_err(|_| SyntaxError {
                line,
                col,
                expected: String::from("integer literal"),
                found: String::from(&src[start..i]),
            })?;
            Tok::Int(n)
        } else {
            let rest = &src[i..];
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    Tok::Sym(s)
                }
                None => {
                    let ch = rest.chars().next().unwrap_or('?');
                    return Err(SyntaxError {
                        line,
                        col,
                        expected: String::from("a token"),
                        found: alloc::format!("character `{ch}`"),
                    });
                }
            }
        };
        out.push(Token { tok, line, col, start, end: i });
        col += (i - start) as u32;
    }
    out.push(Token { tok: Tok::Eof, line, col, start: bytes.len(), end: bytes.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_positions() {
        let toks = tokenize("x = 1; // note\n  y<=x").unwrap();
        let kinds: Vec<_> = toks.iter().map(|t| t.tok.clone()).collect();
        assert_eq!(kinds[0], Tok::Ident("x".into()));
        assert_eq!(kinds[4], Tok::Ident("y".into()));
        assert_eq!((toks[4].line, toks[4].col), (2, 3));
        assert_eq!(kinds[5], Tok::Sym("<="));
    }

    #[test]
    fn rejects_stray_characters() {
        let err = tokenize("x = @;").unwrap_err();
        assert_eq!((err.line, err.col), (1, 5));
    }
}
