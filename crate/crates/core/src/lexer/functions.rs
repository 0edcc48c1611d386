//! Function boundary detection for whole translation units.

use std::collections::HashMap;

use thiserror::Error;

use super::scan::{scan, RawKind, RawToken};
use super::{FunctionId, Lexer, TokenSequence};

/// One function found in a file, with its 1-based inclusive line span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexedFunction {
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub sequence: TokenSequence,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct FunctionLexError {
    /// Header line of the affected function, or the offending line for file-level errors.
    pub line: usize,
    pub function: Option<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FileLex {
    pub functions: Vec<LexedFunction>,
    pub errors: Vec<FunctionLexError>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Frame {
    Function,
    /// namespace, `extern "C"` or class bodies; functions may be defined inside.
    Container,
    Other,
}

enum Header {
    Function { name: String, start: usize },
    Container,
    Other,
}

struct OpenFunction {
    name: String,
    start_tok: usize,
    frame: usize,
}

const NOT_A_FUNCTION_NAME: &[&str] = &[
    "if",
    "for",
    "while",
    "switch",
    "catch",
    "do",
    "else",
    "return",
    "sizeof",
    "alignas",
    "alignof",
    "decltype",
    "typeof",
    "__typeof__",
    "__attribute__",
    "__declspec",
    "static_assert",
    "_Static_assert",
    "noexcept",
    "throw",
];

const CONTAINER_WORDS: &[&str] = &["namespace", "class", "struct", "union"];

impl Lexer {
    /// Split `source` into top-level function definitions and lex each one independently.
    ///
    /// A function is a `name ( ... ) {` header at file, namespace or class scope. Globals and
    /// other brace blocks are skipped. A function whose braces do not balance is reported in
    /// `errors` and the scan resumes at the next `}` in column 0 (or gives up at end of input).
    pub fn lex_file(&self, path: &str, source: &str, revision: Option<&str>) -> FileLex {
        let scanned = scan(source);
        let toks = &scanned.tokens;
        let mut out = FileLex::default();
        let mut stack: Vec<Frame> = Vec::new();
        let mut open: Option<OpenFunction> = None;
        let mut seen_names: HashMap<String, usize> = HashMap::new();

        for (i, t) in toks.iter().enumerate() {
            if t.is_punct("{") {
                let frame = if open.is_some() || stack.contains(&Frame::Other) {
                    Frame::Other
                } else {
                    match self.classify_block(toks, i) {
                        Header::Function { name, start } => {
                            open = Some(OpenFunction { name, start_tok: start, frame: stack.len() });
                            Frame::Function
                        }
                        Header::Container => Frame::Container,
                        Header::Other => Frame::Other,
                    }
                };
                stack.push(frame);
            } else if t.is_punct("}") {
                match stack.pop() {
                    None => out.errors.push(FunctionLexError {
                        line: t.line,
                        function: None,
                        message: "unmatched `}`".into(),
                    }),
                    Some(Frame::Function) => {
                        let f = open.take().expect("function frame without open function");
                        let start = &toks[f.start_tok];
                        let text = &source[start.start..t.end];
                        let count = seen_names.entry(f.name.clone()).or_insert(0);
                        *count += 1;
                        let key = if *count == 1 { f.name.clone() } else { format!("{}#{}", f.name, count) };
                        let tokens = self.canonicalize(&scan(text).tokens);
                        out.functions.push(LexedFunction {
                            name: f.name,
                            start_line: start.line,
                            end_line: t.line,
                            sequence: TokenSequence::new(FunctionId::new(path, &key, revision), tokens),
                        });
                    }
                    Some(_) => {
                        let unbalanced = open.as_ref().is_some_and(|f| t.column == 0 && stack.len() > f.frame);
                        if unbalanced {
                            let f = open.take().unwrap();
                            out.errors.push(FunctionLexError {
                                line: toks[f.start_tok].line,
                                function: Some(f.name),
                                message: format!(
                                    "unbalanced braces (unclosed `{{` before column-0 `}}` at line {})",
                                    t.line
                                ),
                            });
                            stack.truncate(f.frame);
                        }
                    }
                }
            }
        }

        if let Some(f) = open {
            let message = match &scanned.error {
                Some(e) => e.to_string(),
                None => "unbalanced braces (function not closed before end of input)".into(),
            };
            out.errors.push(FunctionLexError { line: toks[f.start_tok].line, function: Some(f.name), message });
        } else if let Some(e) = &scanned.error {
            let line = source[..e.offset()].matches('\n').count() + 1;
            out.errors.push(FunctionLexError { line, function: None, message: e.to_string() });
        }
        out
    }

    /// Decide what kind of block the `{` at `open` starts by looking back to the previous
    /// statement boundary.
    fn classify_block(&self, toks: &[RawToken<'_>], open: usize) -> Header {
        let mut depth = 0i32;
        let mut j = open;
        while j > 0 {
            let t = &toks[j - 1];
            if t.is_punct(")") || t.is_punct("]") {
                depth += 1;
            } else if t.is_punct("(") || t.is_punct("[") {
                depth -= 1;
                if depth < 0 {
                    break;
                }
            } else if depth == 0 {
                let access_label = t.kind == RawKind::Operator
                    && t.text == ":"
                    && j >= 2
                    && ["public", "private", "protected"].iter().any(|w| toks[j - 2].is_ident(w));
                if t.is_punct(";") || t.is_punct("{") || t.is_punct("}") || t.kind == RawKind::Directive || access_label
                {
                    break;
                }
            }
            j -= 1;
        }
        let header = &toks[j..open];
        if header.is_empty() {
            return Header::Other;
        }

        let mut depth = 0i32;
        let mut parens = Vec::new();
        for (k, t) in header.iter().enumerate() {
            if t.is_punct("(") {
                if depth == 0 {
                    parens.push(k);
                }
                depth += 1;
            } else if t.is_punct(")") {
                depth -= 1;
            } else if depth == 0 && t.kind == RawKind::Operator && t.text == "=" {
                return Header::Other;
            }
        }

        for &p in &parens {
            if let Some(name) = self.function_name(&header[..p]) {
                return Header::Function { name, start: j };
            }
        }

        let has_word = |w: &str| header.iter().any(|t| t.is_ident(w));
        let extern_block = header.windows(2).any(|w| w[0].is_ident("extern") && w[1].kind == RawKind::Str);
        if parens.is_empty() && CONTAINER_WORDS.iter().any(|w| has_word(w)) || extern_block {
            Header::Container
        } else {
            Header::Other
        }
    }

    /// Name of a function whose parameter list starts right after `before`.
    fn function_name(&self, before: &[RawToken<'_>]) -> Option<String> {
        let last = before.last()?;
        if let Some(op_at) = before.iter().rposition(|t| t.is_ident("operator")) {
            if op_at + 1 == before.len() || before[op_at + 1..].iter().all(|t| t.kind == RawKind::Operator) {
                let mut name = String::new();
                for t in &before[op_at..] {
                    name.push_str(t.text);
                }
                return Some(self.qualify(&before[..op_at], name));
            }
        }
        if last.kind != RawKind::Ident
            || NOT_A_FUNCTION_NAME.contains(&last.text)
            || self.tables.keywords.contains(last.text)
            || self.tables.types.contains(last.text)
        {
            return None;
        }
        let mut name = last.text.to_string();
        let mut rest = &before[..before.len() - 1];
        if let Some(t) = rest.last() {
            if t.kind == RawKind::Operator && t.text == "~" {
                name.insert(0, '~');
                rest = &rest[..rest.len() - 1];
            }
        }
        Some(self.qualify(rest, name))
    }

    /// Prepend `A::B::` qualifiers that directly precede a name.
    fn qualify(&self, mut before: &[RawToken<'_>], mut name: String) -> String {
        while before.len() >= 2 {
            let sep = &before[before.len() - 1];
            let scope = &before[before.len() - 2];
            if sep.kind == RawKind::Operator && sep.text == "::" && scope.kind == RawKind::Ident {
                name = format!("{}::{}", scope.text, name);
                before = &before[..before.len() - 2];
            } else {
                break;
            }
        }
        name
    }
}
