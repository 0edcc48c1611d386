//! Parse-free C/C++ lexer.
//!
//! Source text is split into raw tokens, then each token is binned and rewritten into a
//! canonical spelling that erases user content: variable names become per-function indices
//! (`var:0`, `var:1`, ... by first appearance), every string literal becomes `str`, every
//! float literal becomes `float`, character literals become `charlit` and integers are
//! emitted one digit at a time. Comments never reach the output.

mod config;
mod functions;
mod scan;
mod token;

use std::collections::HashMap;
use std::sync::OnceLock;

pub use config::LexerConfig;
pub use functions::{FileLex, FunctionLexError, LexedFunction};
pub use scan::{scan, LexError, RawKind, RawToken, Scan};
pub use token::{
    read_sequences, write_sequences, FunctionId, SequenceParseError, Token, TokenKind, TokenParseError, TokenSequence,
};

use config::NameTables;

pub struct Lexer {
    config: LexerConfig,
    tables: NameTables,
}

impl Default for Lexer {
    fn default() -> Self {
        Self::new(LexerConfig::default())
    }
}

impl Lexer {
    pub fn new(config: LexerConfig) -> Self {
        let tables = NameTables::from(&config);
        Self { config, tables }
    }

    pub fn config(&self) -> &LexerConfig {
        &self.config
    }

    /// Lex the text of a single function. The returned sequence has an empty function id.
    pub fn lex(&self, source: &str) -> Result<TokenSequence, LexError> {
        let scanned = scan(source);
        if let Some(err) = scanned.error {
            return Err(err);
        }
        Ok(TokenSequence::new(FunctionId::default(), self.canonicalize(&scanned.tokens)))
    }

    pub(crate) fn canonicalize(&self, raw: &[RawToken<'_>]) -> Vec<Token> {
        let mut vars: HashMap<&str, usize> = HashMap::new();
        let mut out = Vec::with_capacity(raw.len());
        for (i, t) in raw.iter().enumerate() {
            match t.kind {
                RawKind::Ident => {
                    let name = t.text;
                    if self.tables.types.contains(name) {
                        out.push(Token::ty(name));
                    } else if self.tables.keywords.contains(name) {
                        out.push(Token::keyword(name));
                    } else if raw.get(i + 1).is_some_and(|n| n.is_punct("(")) {
                        if self.tables.api_calls.contains(name) {
                            out.push(Token::api_call(name));
                        } else {
                            out.push(Token::unknown_call());
                        }
                    } else {
                        let next = vars.len();
                        let idx = *vars.entry(name).or_insert(next);
                        out.push(Token::variable(idx));
                    }
                }
                RawKind::Integer => out.extend(scan::integer_digits(t.text).iter().map(|d| Token::digit(d))),
                RawKind::Float => out.push(Token::float()),
                RawKind::Char => out.push(Token::char_literal()),
                RawKind::Str => out.push(Token::string_literal()),
                RawKind::Directive => {
                    let name = t.directive_name();
                    out.push(Token::preprocessor(if name.is_empty() { "null" } else { name }));
                }
                RawKind::Operator => out.push(Token::operator(t.text)),
                RawKind::Punct | RawKind::Unknown => out.push(Token::punct(t.text)),
            }
        }
        out
    }
}

fn default_lexer() -> &'static Lexer {
    static LEXER: OnceLock<Lexer> = OnceLock::new();
    LEXER.get_or_init(Lexer::default)
}

/// Lex one function with the built-in name tables.
pub fn lex(source: &str) -> Result<TokenSequence, LexError> {
    default_lexer().lex(source)
}

/// Split a translation unit into functions and lex each with the built-in name tables.
pub fn lex_file(path: &str, source: &str, revision: Option<&str>) -> FileLex {
    default_lexer().lex_file(path, source, revision)
}
