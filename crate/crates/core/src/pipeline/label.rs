use std::collections::HashMap;

use super::{Finding, Label};
use crate::lexer::FunctionId;

/// A function's location: file path plus inclusive line span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSpan {
    pub function_id: FunctionId,
    pub file: String,
    pub start_line: u32,
    pub end_line: u32,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Labeling {
    pub labels: Vec<(FunctionId, Label)>,
    /// Findings that fell inside no listed function.
    pub unmatched: usize,
}

/// Strip leading `./` and use forward slashes.
pub fn normalize_path(p: &str) -> String {
    let mut s = p.replace('\\', "/");
    while let Some(rest) = s.strip_prefix("./") {
        s = rest.to_string();
    }
    s
}

/// A function is buggy iff at least one finding lies in its file and line span.
pub fn label_functions(functions: &[FunctionSpan], findings: &[Finding]) -> Labeling {
    let mut by_file: HashMap<String, Vec<usize>> = HashMap::new();
    for (i, f) in functions.iter().enumerate() {
        by_file.entry(normalize_path(&f.file)).or_default().push(i);
    }
    let mut buggy = vec![false; functions.len()];
    let mut unmatched = 0;
    for finding in findings {
        let mut hit = false;
        if let Some(idx) = by_file.get(&normalize_path(&finding.file)) {
            for &i in idx {
                let f = &functions[i];
                if (f.start_line..=f.end_line).contains(&finding.line) {
                    buggy[i] = true;
                    hit = true;
                }
            }
        }
        if !hit {
            unmatched += 1;
        }
    }
    if unmatched > 0 {
        log::warn!("{unmatched} findings matched no function");
    }
    let labels = functions.iter().zip(buggy).map(|(f, b)| (f.function_id.clone(), Label::from_bool(b))).collect();
    Labeling { labels, unmatched }
}
