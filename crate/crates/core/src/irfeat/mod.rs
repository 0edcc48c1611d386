//! Build-based features from a textual SSA intermediate representation.
//!
//! Grammar accepted by [`parse_ir`]:
//!
//! ```text
//! define <name> {            ; optional `(params)` after the name
//! entry:
//!   %a = add %x, %y
//!   %c = icmp slt %a, 10
//!   br %c, then, done         ; conditional branch
//! then:
//!   br done                   ; unconditional branch
//! done:
//!   ret %a
//! }
//! ```
//!
//! Instructions are `%r = <opcode> <operands>` or `<opcode> <operands>`, operands are comma
//! separated and `;` starts a comment. `switch %v, default, <val>, <label>, ...` lists all of
//! its targets. Any `%name` inside an operand counts as a use of that variable.

mod features;
mod parse;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{
    build_vector, op_vec, read_feature_csv, use_def_matrix, use_def_slot, write_feature_csv, BuildFeatureVector, OpVec,
    UseDefMatrix, BUILD_VECTOR_LEN, USE_DEF_SIZE, USE_DEF_SLOTS,
};
pub use parse::{parse_ir, IrWarning, ParsedIr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IrError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: branch to undefined label `{label}`")]
    UndefinedLabel { line: usize, label: String },
    #[error("line {line}: block `{block}` does not end with a terminator")]
    MissingTerminator { line: usize, block: String },
    #[error("line {line}: instruction after terminator in block `{block}`")]
    InstructionAfterTerminator { line: usize, block: String },
    #[error("line {line}: `%{var}` is defined more than once")]
    Redefinition { line: usize, var: String },
    #[error("function `{0}` has no basic blocks")]
    NoBlocks(String),
    #[error("feature csv: {0}")]
    Csv(String),
}

/// Opcode classes tracked by the op-vec, in feature order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OpCategory {
    Conditional,
    Aggregate,
    Binary,
    BitBinary,
    Conversion,
    MemoryAddress,
    Termination,
    VectorOperation,
    Other,
}

impl OpCategory {
    pub const ALL: [OpCategory; 9] = [
        OpCategory::Conditional,
        OpCategory::Aggregate,
        OpCategory::Binary,
        OpCategory::BitBinary,
        OpCategory::Conversion,
        OpCategory::MemoryAddress,
        OpCategory::Termination,
        OpCategory::VectorOperation,
        OpCategory::Other,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(opcode: &str) -> OpCategory {
        category_of(opcode).unwrap_or(OpCategory::Other)
    }
}

/// Opcodes that are classified `other` without a warning.
const KNOWN_OTHER: &[&str] = &[
    "call",
    "phi",
    "va_arg",
    "landingpad",
    "freeze",
    "invoke",
    "resume",
    "fence",
    "cmpxchg",
    "atomicrmw",
    "catchpad",
    "cleanuppad",
    "catchswitch",
    "catchret",
    "cleanupret",
    "callbr",
    "indirectbr",
    "fneg",
    "nop",
];

fn category_of(opcode: &str) -> Option<OpCategory> {
    use OpCategory::*;
    Some(match opcode {
        "icmp" | "fcmp" | "select" => Conditional,
        "extractvalue" | "insertvalue" => Aggregate,
        "add" | "fadd" | "sub" | "fsub" | "mul" | "fmul" | "div" | "udiv" | "sdiv" | "fdiv" | "rem" | "urem"
        | "srem" | "frem" => Binary,
        "and" | "or" | "xor" | "shl" | "lshr" | "ashr" => BitBinary,
        "trunc" | "zext" | "sext" | "fptoint" | "inttofp" | "bitcast" | "fptoui" | "fptosi" | "uitofp" | "sitofp"
        | "fptrunc" | "fpext" | "ptrtoint" | "inttoptr" | "addrspacecast" => Conversion,
        "alloca" | "load" | "store" | "getelementptr" => MemoryAddress,
        "br" | "switch" | "ret" | "unreachable" => Termination,
        "extractelement" | "insertelement" | "shufflevector" => VectorOperation,
        _ if KNOWN_OTHER.contains(&opcode) => Other,
        _ => return None,
    })
}

pub(crate) fn is_known_opcode(opcode: &str) -> bool {
    category_of(opcode).is_some()
}

pub fn is_terminator(opcode: &str) -> bool {
    matches!(opcode, "br" | "switch" | "ret" | "unreachable")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub result: Option<String>,
    pub opcode: String,
    pub operands: Vec<String>,
}

impl Instruction {
    /// Operand positions that name branch targets rather than values.
    fn label_positions(&self) -> Vec<usize> {
        match (self.opcode.as_str(), self.operands.len()) {
            ("br", 1) => vec![0],
            ("br", 3) => vec![1, 2],
            ("switch", n) if n >= 2 => (1..n).step_by(2).collect(),
            _ => Vec::new(),
        }
    }

    /// Target labels of a terminator, as written.
    pub fn targets(&self) -> Vec<&str> {
        self.label_positions().into_iter().map(|i| label_name(&self.operands[i])).collect()
    }

    /// Variables read by this instruction (without the `%`), in operand order.
    pub fn uses(&self) -> Vec<&str> {
        let labels = self.label_positions();
        let mut out = Vec::new();
        for (i, op) in self.operands.iter().enumerate() {
            if labels.contains(&i) {
                continue;
            }
            out.extend(variables_in(op));
        }
        out
    }
}

fn label_name(operand: &str) -> &str {
    let s = operand.trim();
    let s = s.strip_prefix("label ").map(str::trim).unwrap_or(s);
    s.strip_prefix('%').unwrap_or(s)
}

pub(crate) fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '$' | '-')
}

fn variables_in(text: &str) -> impl Iterator<Item = &str> {
    text.match_indices('%').filter_map(move |(i, _)| {
        let rest = &text[i + 1..];
        let end = rest.find(|c: char| !is_name_char(c)).unwrap_or(rest.len());
        (end > 0).then(|| &rest[..end])
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasicBlock {
    pub label: String,
    pub instructions: Vec<Instruction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IrFunction {
    pub name: String,
    pub blocks: Vec<BasicBlock>,
    /// Deduplicated CFG edges as (from, to) block indices; block 0 is the entry.
    pub edges: Vec<(usize, usize)>,
}
