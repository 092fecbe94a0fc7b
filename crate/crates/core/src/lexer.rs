//! Shared tokenizer for the architecture, delta, configuration and
//! annotated-architecture languages. Keywords are contextual: the lexer
//! only distinguishes identifiers, punctuation, operators and quoted
//! strings, and the parsers match keyword spellings themselves.

use alloc::borrow::ToOwned;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::parser::{ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Comma,
    Dot,
    Eq,
    Arrow,
    Bang,
    AndAnd,
    OrOr,
    StereoOpen,
    StereoClose,
    /// Quoted string; `text` holds the content without the quotes.
    Str,
    Eof,
}

impl TokenKind {
    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Ident => "identifier",
            TokenKind::LBrace => "`{`",
            TokenKind::RBrace => "`}`",
            TokenKind::LParen => "`(`",
            TokenKind::RParen => "`)`",
            TokenKind::Semi => "`;`",
            TokenKind::Comma => "`,`",
            TokenKind::Dot => "`.`",
            TokenKind::Eq => "`=`",
            TokenKind::Arrow => "`->`",
            TokenKind::Bang => "`!`",
            TokenKind::AndAnd => "`&&`",
            TokenKind::OrOr => "`||`",
            TokenKind::StereoOpen => "`<<`",
            TokenKind::StereoClose => "`>>`",
            TokenKind::Str => "string",
            TokenKind::Eof => "end of file",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based position of the first character.
    pub line: usize,
    pub column: usize,
    /// Byte span in the source, including quotes for strings.
    pub start: usize,
    pub end: usize,
}

struct Scanner<'a> {
    path: &'a str,
    src: &'a str,
    bytes: usize,
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Scanner<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn peek2(&self) -> Option<char> {
        let mut it = self.src[self.pos..].chars();
        it.next();
        it.next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, column: usize, message: String) -> ParseError {
        ParseError {
            path: self.path.to_owned(),
            line,
            column,
            message,
            expected: Vec::new(),
            kind: ParseErrorKind::Syntax,
        }
    }
}

/// Tokenizes `src`, discarding `//` and `/* */` comments, and appends an
/// `Eof` token positioned just past the last character.
pub fn tokenize(path: &str, src: &str) -> Result<Vec<Token>, ParseError> {
    let mut s = Scanner {
        path,
        src,
        bytes: src.len(),
        pos: 0,
        line: 1,
        column: 1,
    };
    let mut out = Vec::new();
    loop {
        // Skip whitespace and comments.
        loop {
            match s.peek() {
                Some(c) if c.is_whitespace() => {
                    s.bump();
                }
                Some('/') if s.peek2() == Some('/') => {
                    while let Some(c) = s.peek() {
                        if c == '\n' {
                            break;
                        }
                        s.bump();
                    }
                }
                Some('/') if s.peek2() == Some('*') => {
                    let (line, column) = (s.line, s.column);
                    s.bump();
                    s.bump();
                    let mut closed = false;
                    while let Some(c) = s.bump() {
                        if c == '*' && s.peek() == Some('/') {
                            s.bump();
                            closed = true;
                            break;
                        }
                    }
                    if !closed {
                        return Err(s.error(line, column, "unterminated block comment".to_owned()));
                    }
                }
                _ => break,
            }
        }

        let (line, column, start) = (s.line, s.column, s.pos);
        let c = match s.peek() {
            None => {
                out.push(Token {
                    kind: TokenKind::Eof,
                    text: String::new(),
                    line,
                    column,
                    start: s.bytes,
                    end: s.bytes,
                });
                return Ok(out);
            }
            Some(c) => c,
        };

        let kind = match c {
            'a'..='z' | 'A'..='Z' => {
                while matches!(s.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
                    s.bump();
                }
                TokenKind::Ident
            }
            '{' => {
                s.bump();
                TokenKind::LBrace
            }
            '}' => {
                s.bump();
                TokenKind::RBrace
            }
            '(' => {
                s.bump();
                TokenKind::LParen
            }
            ')' => {
                s.bump();
                TokenKind::RParen
            }
            ';' => {
                s.bump();
                TokenKind::Semi
            }
            ',' => {
                s.bump();
                TokenKind::Comma
            }
            '.' => {
                s.bump();
                TokenKind::Dot
            }
            '=' => {
                s.bump();
                TokenKind::Eq
            }
            '!' => {
                s.bump();
                TokenKind::Bang
            }
            '-' => {
                s.bump();
                if s.peek() == Some('>') {
                    s.bump();
                    TokenKind::Arrow
                } else {
                    return Err(s.error(line, column, "expected `->`".to_owned()));
                }
            }
            '&' => {
                s.bump();
                if s.peek() == Some('&') {
                    s.bump();
                    TokenKind::AndAnd
                } else {
                    return Err(s.error(line, column, "expected `&&`".to_owned()));
                }
            }
            '|' => {
                s.bump();
                if s.peek() == Some('|') {
                    s.bump();
                    TokenKind::OrOr
                } else {
                    return Err(s.error(line, column, "expected `||`".to_owned()));
                }
            }
            '<' => {
                s.bump();
                if s.peek() == Some('<') {
                    s.bump();
                    TokenKind::StereoOpen
                } else {
                    return Err(s.error(line, column, "expected `<<`".to_owned()));
                }
            }
            '>' => {
                s.bump();
                if s.peek() == Some('>') {
                    s.bump();
                    TokenKind::StereoClose
                } else {
                    return Err(s.error(line, column, "expected `>>`".to_owned()));
                }
            }
            '"' => {
                s.bump();
                let content_start = s.pos;
                loop {
                    match s.peek() {
                        Some('"') => break,
                        Some('\n') | None => {
                            return Err(s.error(line, column, "unterminated string".to_owned()));
                        }
                        Some(_) => {
                            s.bump();
                        }
                    }
                }
                let text = s.src[content_start..s.pos].to_owned();
                s.bump(); // closing quote
                out.push(Token {
                    kind: TokenKind::Str,
                    text,
                    line,
                    column,
                    start,
                    end: s.pos,
                });
                continue;
            }
            other => {
                return Err(s.error(line, column, format!("unexpected character `{}`", other)));
            }
        };

        out.push(Token {
            kind,
            text: s.src[start..s.pos].to_owned(),
            line,
            column,
            start,
            end: s.pos,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize("t", src).unwrap().iter().map(|t| t.kind).collect()
    }

    #[test]
    fn tokenizes_architecture_snippet() {
        let toks = tokenize("t", "component X { port in T p; }").unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(
            texts,
            vec!["component", "X", "{", "port", "in", "T", "p", ";", "}", ""]
        );
        assert_eq!(toks.last().unwrap().kind, TokenKind::Eof);
    }

    #[test]
    fn operators_and_stereotypes() {
        assert_eq!(
            kinds("a -> b && ! ( c || d ) << \"x\" >>"),
            vec![
                TokenKind::Ident,
                TokenKind::Arrow,
                TokenKind::Ident,
                TokenKind::AndAnd,
                TokenKind::Bang,
                TokenKind::LParen,
                TokenKind::Ident,
                TokenKind::OrOr,
                TokenKind::Ident,
                TokenKind::RParen,
                TokenKind::StereoOpen,
                TokenKind::Str,
                TokenKind::StereoClose,
                TokenKind::Eof,
            ]
        );
    }

    #[test]
    fn positions_are_one_based_and_track_newlines() {
        let toks = tokenize("t", "component X {\n  port in T p;\n}").unwrap();
        let port = toks.iter().find(|t| t.text == "port").unwrap();
        assert_eq!((port.line, port.column), (2, 3));
        let brace = toks.iter().rfind(|t| t.kind == TokenKind::RBrace).unwrap();
        assert_eq!((brace.line, brace.column), (3, 1));
    }

    #[test]
    fn comments_are_skipped() {
        let toks = tokenize("t", "a // rest\n/* b { } */ c").unwrap();
        let texts: Vec<&str> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, vec!["a", "c", ""]);
    }

    #[test]
    fn crlf_accepted() {
        let toks = tokenize("t", "a\r\nb").unwrap();
        assert_eq!(toks[1].line, 2);
        assert_eq!(toks[1].column, 1);
    }

    #[test]
    fn unterminated_block_comment_points_at_its_start() {
        let err = tokenize("t", "ok /* never closed").unwrap_err();
        assert_eq!((err.line, err.column), (1, 4));
        assert!(err.message.contains("unterminated block comment"));
    }

    #[test]
    fn stray_characters_rejected_with_position() {
        let err = tokenize("t", "component X @").unwrap_err();
        assert_eq!((err.line, err.column), (1, 13));
        for bad in ["a & b", "a | b", "a < b", "a > b", "a - b", "\"open"] {
            assert!(tokenize("t", bad).is_err(), "{}", bad);
        }
    }

    #[test]
    fn string_token_strips_quotes_and_keeps_span() {
        let toks = tokenize("t", "<<variant = \"A, B\">>").unwrap();
        let s = toks.iter().find(|t| t.kind == TokenKind::Str).unwrap();
        assert_eq!(s.text, "A, B");
        assert_eq!(&"<<variant = \"A, B\">>"[s.start..s.end], "\"A, B\"");
    }
}
