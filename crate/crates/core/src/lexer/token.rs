use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Lexical bin of a canonical token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Type,
    ApiCall,
    Identifier,
    Operator,
    Number,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    Preprocessor,
    Punctuation,
}

pub const STRING_TOKEN: &str = "str";
pub const FLOAT_TOKEN: &str = "float";
pub const CHAR_TOKEN: &str = "charlit";
pub const UNKNOWN_CALL: &str = "call:<unk>";

/// One anonymized token. `text` is the canonical spelling (`kw:for`, `var:2`, `str`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    kind: TokenKind,
    text: String,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenParseError {
    #[error("empty token text")]
    Empty,
    #[error("token `{0}` contains whitespace")]
    Whitespace(String),
    #[error("unrecognized canonical token `{0}`")]
    Unrecognized(String),
}

impl Token {
    pub fn keyword(name: &str) -> Self {
        Self::with(TokenKind::Keyword, format!("kw:{name}"))
    }

    pub fn ty(name: &str) -> Self {
        Self::with(TokenKind::Type, format!("type:{name}"))
    }

    pub fn api_call(name: &str) -> Self {
        Self::with(TokenKind::ApiCall, format!("call:{name}"))
    }

    pub fn unknown_call() -> Self {
        Self::with(TokenKind::ApiCall, UNKNOWN_CALL.to_string())
    }

    pub fn variable(index: usize) -> Self {
        Self::with(TokenKind::Identifier, format!("var:{index}"))
    }

    pub fn operator(op: &str) -> Self {
        Self::with(TokenKind::Operator, format!("op:{op}"))
    }

    /// A single digit (or a radix prefix such as `0x`).
    pub fn digit(d: &str) -> Self {
        Self::with(TokenKind::Number, format!("num:{d}"))
    }

    pub fn float() -> Self {
        Self::with(TokenKind::FloatLiteral, FLOAT_TOKEN.to_string())
    }

    pub fn char_literal() -> Self {
        Self::with(TokenKind::CharLiteral, CHAR_TOKEN.to_string())
    }

    pub fn string_literal() -> Self {
        Self::with(TokenKind::StringLiteral, STRING_TOKEN.to_string())
    }

    pub fn preprocessor(directive: &str) -> Self {
        Self::with(TokenKind::Preprocessor, format!("pp:{directive}"))
    }

    pub fn punct(p: &str) -> Self {
        Self::with(TokenKind::Punctuation, format!("punct:{p}"))
    }

    fn with(kind: TokenKind, text: String) -> Self {
        Self { kind, text }
    }

    pub fn kind(&self) -> TokenKind {
        self.kind
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Variable index for identifier tokens.
    pub fn variable_index(&self) -> Option<usize> {
        match self.kind {
            TokenKind::Identifier => self.text.strip_prefix("var:")?.parse().ok(),
            _ => None,
        }
    }

    /// Recover a token from its canonical spelling.
    pub fn from_canonical(text: &str) -> Result<Self, TokenParseError> {
        if text.is_empty() {
            return Err(TokenParseError::Empty);
        }
        if text.chars().any(char::is_whitespace) {
            return Err(TokenParseError::Whitespace(text.to_string()));
        }
        let bad = || TokenParseError::Unrecognized(text.to_string());
        let kind = match text {
            STRING_TOKEN => TokenKind::StringLiteral,
            FLOAT_TOKEN => TokenKind::FloatLiteral,
            CHAR_TOKEN => TokenKind::CharLiteral,
            _ => {
                let (prefix, rest) = text.split_once(':').ok_or_else(bad)?;
                if rest.is_empty() {
                    return Err(bad());
                }
                match prefix {
                    "kw" => TokenKind::Keyword,
                    "type" => TokenKind::Type,
                    "call" => TokenKind::ApiCall,
                    "var" => {
                        rest.parse::<usize>().map_err(|_| bad())?;
                        TokenKind::Identifier
                    }
                    "op" => TokenKind::Operator,
                    "num" => TokenKind::Number,
                    "pp" => TokenKind::Preprocessor,
                    "punct" => TokenKind::Punctuation,
                    _ => return Err(bad()),
                }
            }
        };
        Ok(Self::with(kind, text.to_string()))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Provenance key of one function: source path, function name and optional revision.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionId(String);

impl FunctionId {
    pub fn new(path: &str, name: &str, revision: Option<&str>) -> Self {
        let mut id = format!("{path}:{name}");
        if let Some(rev) = revision.filter(|r| !r.is_empty()) {
            id.push('@');
            id.push_str(rev);
        }
        Self::from_raw(&id)
    }

    /// Wrap an existing key. Tabs and newlines are replaced so the key stays one TSV field.
    pub fn from_raw(raw: &str) -> Self {
        Self(raw.replace(['\t', '\n', '\r'], " "))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for FunctionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceParseError {
    #[error("line {line}: missing tab between function id and tokens")]
    MissingTab { line: usize },
    #[error("line {line}: {source}")]
    Token {
        line: usize,
        #[source]
        source: TokenParseError,
    },
}

/// The anonymized lexed form of one function.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    pub function_id: FunctionId,
    pub tokens: Vec<Token>,
}

impl TokenSequence {
    pub fn new(function_id: FunctionId, tokens: Vec<Token>) -> Self {
        Self { function_id, tokens }
    }

    pub fn with_id(mut self, function_id: FunctionId) -> Self {
        self.function_id = function_id;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in canonical form joined by single spaces. This is the dedup key input.
    pub fn canonical_text(&self) -> String {
        let mut out = String::with_capacity(self.tokens.len() * 6);
        for (i, t) in self.tokens.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            out.push_str(t.text());
        }
        out
    }

    /// `functionId \t tok tok tok`
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.function_id, self.canonical_text())
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Self, SequenceParseError> {
        let (id, rest) = line.split_once('\t').ok_or(SequenceParseError::MissingTab { line: line_no })?;
        let tokens = rest
            .split_whitespace()
            .map(Token::from_canonical)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| SequenceParseError::Token { line: line_no, source })?;
        Ok(Self::new(FunctionId::from_raw(id), tokens))
    }
}

/// Write one sequence per line.
pub fn write_sequences(seqs: &[TokenSequence]) -> String {
    let mut out = String::new();
    for s in seqs {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    out
}

/// Parse a token stream file; blank lines and `#` comment lines are skipped.
pub fn read_sequences(text: &str) -> Result<Vec<TokenSequence>, SequenceParseError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| TokenSequence::parse_line(l, i + 1))
        .collect()
}
