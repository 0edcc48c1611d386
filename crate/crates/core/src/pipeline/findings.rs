use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PipelineError;

/// Security-relevant Clang static analyzer checkers. A trailing `*` matches any suffix.
pub const DEFAULT_CHECKERS: &[&str] = &[
    "core.NullDereference",
    "core.DivideZero",
    "core.UndefinedBinaryOperatorResult",
    "core.uninitialized.*",
    "core.CallAndMessage",
    "core.StackAddressEscape",
    "core.NonNullParamChecker",
    "core.VLASize",
    "cplusplus.NewDelete",
    "cplusplus.NewDeleteLeaks",
    "unix.Malloc",
    "unix.MallocSizeof",
    "unix.MismatchedDeallocator",
    "unix.cstring.*",
    "unix.API",
    "security.insecureAPI.*",
    "security.FloatLoopCounter",
    "alpha.security.*",
    "alpha.unix.cstring.*",
    "alpha.core.CastToStruct",
    "alpha.core.PointerArithm",
];

/// One analyzer report, as a JSON line `{"file","function","checker","line"}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Finding {
    pub file: String,
    pub function: String,
    pub checker: String,
    pub line: u32,
}

pub fn checker_allowed(checker: &str, allowlist: &[String]) -> bool {
    allowlist.is_empty()
        || allowlist.iter().any(|p| match p.strip_suffix('*') {
            Some(prefix) => checker.starts_with(prefix),
            None => p == checker,
        })
}

/// Parse JSON-lines findings, dropping checkers outside `allowlist` (empty allows all).
/// Blank lines are skipped.
pub fn ingest_findings(text: &str, allowlist: &[String]) -> Result<Vec<Finding>, PipelineError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| PipelineError::Finding { line: i + 1, message };
        let f: Finding = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        if f.line == 0 {
            return Err(err("line must be at least 1".into()));
        }
        if checker_allowed(&f.checker, allowlist) {
            out.push(f);
        } else {
            log::debug!("dropping finding from checker {}", f.checker);
        }
    }
    Ok(out)
}

pub fn read_findings(path: &Path, allowlist: &[String]) -> Result<Vec<Finding>, PipelineError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| PipelineError::Io { path: path.display().to_string(), source })?;
    ingest_findings(&text, allowlist)
}

/// Read several findings files in parallel; results are concatenated in `paths` order.
pub fn read_findings_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    allowlist: &[String],
) -> Result<Vec<Finding>, PipelineError> {
    let parts: Vec<Vec<Finding>> =
        paths.par_iter().map(|p| read_findings(p.as_ref(), allowlist)).collect::<Result<_, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}
