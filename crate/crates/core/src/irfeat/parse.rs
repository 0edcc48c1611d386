use std::collections::{HashMap, HashSet};

use super::{is_known_opcode, is_name_char, is_terminator, BasicBlock, Instruction, IrError, IrFunction};

/// An opcode outside the category table; it is classified `other`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IrWarning {
    pub line: usize,
    pub function: String,
    pub opcode: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedIr {
    pub functions: Vec<IrFunction>,
    pub warnings: Vec<IrWarning>,
}

struct PendingBlock {
    block: BasicBlock,
    label_line: usize,
    /// Line of the terminator, once seen.
    terminated_at: Option<usize>,
}

struct PendingFunction {
    name: String,
    blocks: Vec<PendingBlock>,
    defined: HashSet<String>,
}

fn syntax(line: usize, message: impl Into<String>) -> IrError {
    IrError::Syntax { line, message: message.into() }
}

fn parse_define(line: &str, line_no: usize) -> Result<String, IrError> {
    let rest = line
        .strip_prefix("define")
        .filter(|r| r.starts_with(char::is_whitespace))
        .ok_or_else(|| syntax(line_no, format!("expected `define <name> {{`, found `{line}`")))?;
    let rest = rest.trim();
    let Some(body) = rest.strip_suffix('{') else {
        return Err(syntax(line_no, "function header must end with `{`"));
    };
    let body = body.trim();
    let name_end = body.find(|c: char| c.is_whitespace() || c == '(').unwrap_or(body.len());
    let name = body[..name_end].trim_start_matches('@');
    if name.is_empty() {
        return Err(syntax(line_no, "missing function name"));
    }
    let tail = body[name_end..].trim();
    if !(tail.is_empty() || (tail.starts_with('(') && tail.ends_with(')'))) {
        return Err(syntax(line_no, format!("unexpected `{tail}` in function header")));
    }
    Ok(name.to_string())
}

fn parse_label(line: &str) -> Option<&str> {
    let name = line.strip_suffix(':')?;
    let name = name.strip_prefix('%').unwrap_or(name);
    (!name.is_empty() && name.chars().all(is_name_char)).then_some(name)
}

fn parse_instruction(line: &str, line_no: usize) -> Result<Instruction, IrError> {
    let (result, rest) = match line.split_once('=') {
        Some((lhs, rhs)) if lhs.trim_start().starts_with('%') => {
            let var = lhs.trim().trim_start_matches('%');
            if var.is_empty() || !var.chars().all(is_name_char) {
                return Err(syntax(line_no, format!("bad result name `{}`", lhs.trim())));
            }
            (Some(var.to_string()), rhs.trim())
        }
        _ => (None, line),
    };
    let (opcode, operands) = match rest.split_once(char::is_whitespace) {
        Some((op, tail)) => (op, tail.trim()),
        None => (rest, ""),
    };
    if opcode.is_empty() || !opcode.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.') {
        return Err(syntax(line_no, format!("bad opcode in `{line}`")));
    }
    let operands = operands.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
    Ok(Instruction { result, opcode: opcode.to_string(), operands })
}

impl PendingFunction {
    fn current_open(&self) -> bool {
        self.blocks.last().is_some_and(|b| b.terminated_at.is_none())
    }

    fn finish(self, close_line: usize) -> Result<IrFunction, IrError> {
        let mut index = HashMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            index.insert(b.block.label.clone(), i);
        }
        if let Some(last) = self.blocks.last() {
            if last.terminated_at.is_none() {
                return Err(IrError::MissingTerminator { line: close_line, block: last.block.label.clone() });
            }
        }
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        for (from, b) in self.blocks.iter().enumerate() {
            let term = b.block.instructions.last().expect("terminated block has instructions");
            for target in term.targets() {
                let to = *index.get(target).ok_or_else(|| IrError::UndefinedLabel {
                    line: b.terminated_at.unwrap_or(b.label_line),
                    label: target.to_string(),
                })?;
                if seen.insert((from, to)) {
                    edges.push((from, to));
                }
            }
        }
        Ok(IrFunction { name: self.name, blocks: self.blocks.into_iter().map(|b| b.block).collect(), edges })
    }
}

/// Parse every `define` in `text`.
pub fn parse_ir(text: &str) -> Result<ParsedIr, IrError> {
    let mut out = ParsedIr::default();
    let mut current: Option<PendingFunction> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split(';').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some(func) = current.as_mut() else {
            let name = parse_define(line, line_no)?;
            current = Some(PendingFunction { name, blocks: Vec::new(), defined: HashSet::new() });
            continue;
        };

        if line == "}" {
            let f = current.take().unwrap();
            out.functions.push(f.finish(line_no)?);
            continue;
        }

        if let Some(label) = parse_label(line) {
            if let Some(prev) = func.blocks.last() {
                if prev.terminated_at.is_none() {
                    return Err(IrError::MissingTerminator { line: line_no, block: prev.block.label.clone() });
                }
            }
            if func.blocks.iter().any(|b| b.block.label == label) {
                return Err(syntax(line_no, format!("duplicate label `{label}`")));
            }
            func.blocks.push(PendingBlock {
                block: BasicBlock { label: label.to_string(), instructions: Vec::new() },
                label_line: line_no,
                terminated_at: None,
            });
            continue;
        }

        let inst = parse_instruction(line, line_no)?;
        if func.blocks.is_empty() {
            func.blocks.push(PendingBlock {
                block: BasicBlock { label: "entry".into(), instructions: Vec::new() },
                label_line: line_no,
                terminated_at: None,
            });
        } else if !func.current_open() {
            return Err(IrError::InstructionAfterTerminator {
                line: line_no,
                block: func.blocks.last().unwrap().block.label.clone(),
            });
        }
        if let Some(r) = &inst.result {
            if !func.defined.insert(r.clone()) {
                return Err(IrError::Redefinition { line: line_no, var: r.clone() });
            }
        }
        if !is_known_opcode(&inst.opcode) {
            out.warnings.push(IrWarning { line: line_no, function: func.name.clone(), opcode: inst.opcode.clone() });
        }
        match inst.opcode.as_str() {
            "br" if !matches!(inst.operands.len(), 1 | 3) => {
                return Err(syntax(line_no, "`br` takes one label or a condition and two labels"));
            }
            "switch" if inst.operands.len() < 2 || inst.operands.len() % 2 != 0 => {
                return Err(syntax(line_no, "`switch` takes a value, a default label and value/label pairs"));
            }
            _ => {}
        }
        let terminator = is_terminator(&inst.opcode);
        let block = func.blocks.last_mut().unwrap();
        block.block.instructions.push(inst);
        if terminator {
            block.terminated_at = Some(line_no);
        }
    }

    if let Some(f) = current {
        return Err(syntax(text.lines().count(), format!("function `{}` is not closed", f.name)));
    }
    Ok(out)
}
