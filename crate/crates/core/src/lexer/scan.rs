use thiserror::Error;

/// Lexing failure. Offsets are byte positions into the lexed text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal starting at byte {offset}")]
    UnterminatedString { offset: usize },
    #[error("unterminated character literal starting at byte {offset}")]
    UnterminatedChar { offset: usize },
    #[error("unterminated block comment starting at byte {offset}")]
    UnterminatedComment { offset: usize },
}

impl LexError {
    pub fn offset(&self) -> usize {
        match *self {
            LexError::UnterminatedString { offset }
            | LexError::UnterminatedChar { offset }
            | LexError::UnterminatedComment { offset } => offset,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawKind {
    Ident,
    Integer,
    Float,
    Char,
    Str,
    /// A whole preprocessor line; the directive name is the first word after `#`.
    Directive,
    Operator,
    Punct,
    Unknown,
}

/// A token before anonymization, still carrying its source text and position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawToken<'a> {
    pub kind: RawKind,
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
    /// 1-based line of `start`.
    pub line: usize,
    /// Byte column of `start` within its line.
    pub column: usize,
}

impl RawToken<'_> {
    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == RawKind::Punct && self.text == p
    }

    pub fn is_ident(&self, name: &str) -> bool {
        self.kind == RawKind::Ident && self.text == name
    }

    /// Directive name for `Directive` tokens (`include` for `#include <x>`).
    pub fn directive_name(&self) -> &str {
        let rest = self.text.trim_start_matches('#').trim_start_matches([' ', '\t']);
        let end = rest.char_indices().find(|&(_, c)| !is_ident_char(c)).map_or(rest.len(), |(i, _)| i);
        &rest[..end]
    }
}

/// Tokens scanned before the first error, plus that error if one occurred.
#[derive(Debug, Clone)]
pub struct Scan<'a> {
    pub tokens: Vec<RawToken<'a>>,
    pub error: Option<LexError>,
}

const OPERATORS: &[&str] = &[
    "<<=", ">>=", "...", "->*", "<=>", "->", "++", "--", "<<", ">>", "<=", ">=", "==", "!=", "&&", "||", "+=", "-=",
    "*=", "/=", "%=", "&=", "|=", "^=", "::", ".*", "##", "+", "-", "*", "/", "%", "=", "<", ">", "!", "~", "&", "|",
    "^", "?", ":", ".", "#",
];

const PUNCTUATION: &[u8] = b"(){}[];,";

const CHAR_PREFIXES: &[&str] = &["L", "u", "U", "u8"];
const RAW_PREFIXES: &[&str] = &["R", "LR", "uR", "UR", "u8R"];

pub(crate) fn is_ident_start(c: char) -> bool {
    c == '_' || c == '$' || c.is_ascii_alphabetic() || (!c.is_ascii() && c.is_alphabetic())
}

pub(crate) fn is_ident_char(c: char) -> bool {
    is_ident_start(c) || c.is_ascii_digit() || (!c.is_ascii() && c.is_alphanumeric())
}

struct Scanner<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line_starts: Vec<usize>,
}

/// Split `src` into raw tokens, dropping whitespace and comments.
pub fn scan(src: &str) -> Scan<'_> {
    let mut line_starts = vec![0];
    line_starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
    let mut sc = Scanner { src, bytes: src.as_bytes(), pos: 0, line_starts };
    let mut tokens = Vec::new();
    loop {
        match sc.next_token() {
            Ok(Some(t)) => tokens.push(t),
            Ok(None) => return Scan { tokens, error: None },
            Err(e) => return Scan { tokens, error: Some(e) },
        }
    }
}

impl<'a> Scanner<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.bytes.get(self.pos + ahead).copied()
    }

    fn char_at(&self, pos: usize) -> Option<char> {
        self.src.get(pos..)?.chars().next()
    }

    fn line_of(&self, pos: usize) -> (usize, usize) {
        let idx = self.line_starts.partition_point(|&s| s <= pos) - 1;
        (idx + 1, pos - self.line_starts[idx])
    }

    fn at_line_start(&self, pos: usize) -> bool {
        let (line, _) = self.line_of(pos);
        self.bytes[self.line_starts[line - 1]..pos].iter().all(|&b| b == b' ' || b == b'\t')
    }

    fn make(&self, kind: RawKind, start: usize) -> RawToken<'a> {
        let (line, column) = self.line_of(start);
        RawToken { kind, text: &self.src[start..self.pos], start, end: self.pos, line, column }
    }

    /// Skip whitespace, line splices and comments.
    fn skip_trivia(&mut self) -> Result<(), LexError> {
        while let Some(b) = self.peek(0) {
            match b {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'\\' if matches!(self.peek(1), Some(b'\n')) => self.pos += 2,
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => self.pos += 3,
                b'/' if self.peek(1) == Some(b'/') => self.skip_line(),
                b'/' if self.peek(1) == Some(b'*') => {
                    let start = self.pos;
                    match self.src[self.pos + 2..].find("*/") {
                        Some(i) => self.pos += 2 + i + 2,
                        None => return Err(LexError::UnterminatedComment { offset: start }),
                    }
                }
                _ => break,
            }
        }
        Ok(())
    }

    /// Advance to the next unspliced newline (not consumed).
    fn skip_line(&mut self) {
        while let Some(b) = self.peek(0) {
            match b {
                b'\\' if self.peek(1) == Some(b'\n') => self.pos += 2,
                b'\\' if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => self.pos += 3,
                b'\n' => break,
                _ => self.pos += 1,
            }
        }
    }

    fn next_token(&mut self) -> Result<Option<RawToken<'a>>, LexError> {
        self.skip_trivia()?;
        let start = self.pos;
        let Some(c) = self.char_at(start) else {
            return Ok(None);
        };
        let kind = if c == '#' && self.at_line_start(start) {
            self.skip_line();
            RawKind::Directive
        } else if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|b| b.is_ascii_digit())) {
            self.scan_number()
        } else if is_ident_start(c) {
            self.scan_ident_or_prefixed(start)?
        } else if c == '"' {
            self.scan_quoted(b'"', start)?
        } else if c == '\'' {
            self.scan_quoted(b'\'', start)?
        } else if c.is_ascii() && PUNCTUATION.contains(&(c as u8)) {
            self.pos += 1;
            RawKind::Punct
        } else if let Some(op) = OPERATORS.iter().find(|op| self.src[start..].starts_with(**op)) {
            self.pos += op.len();
            RawKind::Operator
        } else {
            self.pos += c.len_utf8();
            RawKind::Unknown
        };
        Ok(Some(self.make(kind, start)))
    }

    fn scan_ident_or_prefixed(&mut self, start: usize) -> Result<RawKind, LexError> {
        while let Some(c) = self.char_at(self.pos) {
            if !is_ident_char(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
        let word = &self.src[start..self.pos];
        match self.peek(0) {
            Some(b'"') if RAW_PREFIXES.contains(&word) => self.scan_raw_string(start),
            Some(q @ (b'"' | b'\'')) if CHAR_PREFIXES.contains(&word) => self.scan_quoted(q, start),
            _ => Ok(RawKind::Ident),
        }
    }

    /// `"..."` or `'...'` with backslash escapes; a raw newline or end of input is an error.
    fn scan_quoted(&mut self, quote: u8, start: usize) -> Result<RawKind, LexError> {
        let err = || {
            if quote == b'"' {
                LexError::UnterminatedString { offset: start }
            } else {
                LexError::UnterminatedChar { offset: start }
            }
        };
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => return Err(err()),
                Some(b'\\') => {
                    self.pos += 1;
                    match self.char_at(self.pos) {
                        None => return Err(err()),
                        Some(c) => self.pos += c.len_utf8(),
                    }
                }
                Some(b) if b == quote => {
                    self.pos += 1;
                    return Ok(if quote == b'"' { RawKind::Str } else { RawKind::Char });
                }
                Some(_) => {
                    let c = self.char_at(self.pos).unwrap_or('\0');
                    self.pos += c.len_utf8().max(1);
                }
            }
        }
    }

    /// `R"delim( ... )delim"`; `pos` is on the opening quote.
    fn scan_raw_string(&mut self, start: usize) -> Result<RawKind, LexError> {
        let err = LexError::UnterminatedString { offset: start };
        let body = &self.src[self.pos + 1..];
        let open = body.find('(').ok_or(err.clone())?;
        let delim = &body[..open];
        if delim.len() > 16 || delim.contains(['"', ')', '\\', ' ', '\n']) {
            return Err(err);
        }
        let closing = format!("){delim}\"");
        let close = body[open..].find(&closing).ok_or(err)?;
        self.pos += 1 + open + close + closing.len();
        Ok(RawKind::Str)
    }

    fn eat_while(&mut self, pred: impl Fn(u8) -> bool) {
        while let Some(b) = self.peek(0) {
            // digit separators: 1'000'000
            if pred(b) || (b == b'\'' && self.peek(1).is_some_and(&pred)) {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn eat_exponent(&mut self, markers: &[u8]) -> bool {
        let Some(b) = self.peek(0) else { return false };
        if !markers.contains(&b) {
            return false;
        }
        let digit_at = |k: usize| self.peek(k).is_some_and(|d| d.is_ascii_digit());
        let sign = matches!(self.peek(1), Some(b'+' | b'-'));
        if digit_at(1) || (sign && digit_at(2)) {
            self.pos += if sign { 2 } else { 1 };
            self.eat_while(|d| d.is_ascii_digit());
            true
        } else {
            false
        }
    }

    fn eat_suffix(&mut self) {
        while let Some(c) = self.char_at(self.pos) {
            if !is_ident_char(c) {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn scan_number(&mut self) -> RawKind {
        let b0 = self.peek(0);
        let b1 = self.peek(1);
        let mut float = false;
        if b0 == Some(b'0') && matches!(b1, Some(b'x' | b'X')) {
            self.pos += 2;
            self.eat_while(|b| b.is_ascii_hexdigit());
            if self.peek(0) == Some(b'.') {
                float = true;
                self.pos += 1;
                self.eat_while(|b| b.is_ascii_hexdigit());
            }
            float |= self.eat_exponent(b"pP");
        } else if b0 == Some(b'0') && matches!(b1, Some(b'b' | b'B')) && matches!(self.peek(2), Some(b'0' | b'1')) {
            self.pos += 2;
            self.eat_while(|b| b == b'0' || b == b'1');
        } else {
            self.eat_while(|b| b.is_ascii_digit());
            if self.peek(0) == Some(b'.') && self.peek(1) != Some(b'.') {
                float = true;
                self.pos += 1;
                self.eat_while(|b| b.is_ascii_digit());
            }
            float |= self.eat_exponent(b"eE");
        }
        self.eat_suffix();
        if float {
            RawKind::Float
        } else {
            RawKind::Integer
        }
    }
}

/// Digit tokens of an integer literal: a radix prefix (`0x`, `0b`) then one entry per digit.
/// Suffixes and digit separators are dropped.
pub(crate) fn integer_digits(text: &str) -> Vec<String> {
    let lower = text.to_ascii_lowercase();
    let (prefix, body, is_digit): (Option<&str>, &str, fn(char) -> bool) = if let Some(rest) = lower.strip_prefix("0x")
    {
        (Some("0x"), rest, |c| c.is_ascii_hexdigit())
    } else if let Some(rest) = lower.strip_prefix("0b") {
        (Some("0b"), rest, |c| c == '0' || c == '1')
    } else {
        (None, lower.as_str(), |c| c.is_ascii_digit())
    };
    let mut out: Vec<String> = prefix.map(str::to_string).into_iter().collect();
    for c in body.chars() {
        if c == '\'' {
            continue;
        }
        if !is_digit(c) {
            break;
        }
        out.push(c.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(RawKind, &str)> {
        let s = scan(src);
        assert!(s.error.is_none(), "{:?}", s.error);
        s.tokens.into_iter().map(|t| (t.kind, t.text)).collect()
    }

    #[test]
    fn numbers() {
        use RawKind::*;
        assert_eq!(kinds("45"), vec![(Integer, "45")]);
        assert_eq!(kinds("0x1Fu"), vec![(Integer, "0x1Fu")]);
        assert_eq!(kinds("1.5e3"), vec![(Float, "1.5e3")]);
        assert_eq!(kinds(".5f"), vec![(Float, ".5f")]);
        assert_eq!(kinds("1e-9"), vec![(Float, "1e-9")]);
        assert_eq!(kinds("0x1.8p3"), vec![(Float, "0x1.8p3")]);
        assert_eq!(kinds("1'000'000"), vec![(Integer, "1'000'000")]);
        assert_eq!(kinds("0b101"), vec![(Integer, "0b101")]);
        assert_eq!(kinds("1..2"), vec![(Integer, "1"), (Operator, "."), (Float, ".2")]);
    }

    #[test]
    fn digit_splitting() {
        assert_eq!(integer_digits("45"), vec!["4", "5"]);
        assert_eq!(integer_digits("0x1Fu"), vec!["0x", "1", "f"]);
        assert_eq!(integer_digits("0755"), vec!["0", "7", "5", "5"]);
        assert_eq!(integer_digits("1'000ULL"), vec!["1", "0", "0", "0"]);
        assert_eq!(integer_digits("0b10"), vec!["0b", "1", "0"]);
    }

    #[test]
    fn operators_longest_match() {
        use RawKind::*;
        assert_eq!(
            kinds("a<<=b->c"),
            vec![(Ident, "a"), (Operator, "<<="), (Ident, "b"), (Operator, "->"), (Ident, "c")]
        );
    }

    #[test]
    fn literals_with_prefixes() {
        use RawKind::*;
        assert_eq!(kinds(r#"L"wide""#), vec![(Str, r#"L"wide""#)]);
        assert_eq!(kinds(r#"u8'a'"#), vec![(Char, "u8'a'")]);
        assert_eq!(kinds(r#"R"x(a")b)x""#), vec![(Str, r#"R"x(a")b)x""#)]);
        assert_eq!(kinds(r#""a\"b""#), vec![(Str, r#""a\"b""#)]);
    }

    #[test]
    fn directive_only_at_line_start() {
        let s = scan("  #include <stdio.h>\nx ## y");
        assert_eq!(s.tokens[0].kind, RawKind::Directive);
        assert_eq!(s.tokens[0].directive_name(), "include");
        assert_eq!(s.tokens[2].kind, RawKind::Operator);
    }

    #[test]
    fn directive_continuation() {
        let s = scan("#define X \\\n  1\nint");
        assert_eq!(s.tokens.len(), 2);
        assert_eq!(s.tokens[1].text, "int");
        assert_eq!(s.tokens[1].line, 3);
    }

    #[test]
    fn comments_dropped() {
        assert_eq!(kinds("a /* b */ c // d\ne").len(), 3);
    }

    #[test]
    fn errors_carry_offsets() {
        assert_eq!(scan("x = \"abc").error, Some(LexError::UnterminatedString { offset: 4 }));
        assert_eq!(scan("a /* b").error, Some(LexError::UnterminatedComment { offset: 2 }));
        assert_eq!(scan("c = 'a").error, Some(LexError::UnterminatedChar { offset: 4 }));
        let partial = scan("a b \"x");
        assert_eq!(partial.tokens.len(), 2);
    }

    #[test]
    fn positions() {
        let s = scan("int\n  x;");
        assert_eq!((s.tokens[1].line, s.tokens[1].column), (2, 2));
    }

    #[test]
    fn unknown_chars_are_single_tokens() {
        use RawKind::*;
        assert_eq!(kinds("@ `"), vec![(Unknown, "@"), (Unknown, "`")]);
    }
}
