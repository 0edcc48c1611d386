//! Random small IR functions and a direct recomputation of their 116-entry feature vector.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

/// Opcode pool with the category index each must land in
/// (conditional, aggregate, binary, bit-binary, conversion, memory, termination, vector, other).
const OPCODES: &[(&str, usize)] = &[
    ("icmp", 0),
    ("fcmp", 0),
    ("select", 0),
    ("extractvalue", 1),
    ("insertvalue", 1),
    ("add", 2),
    ("fadd", 2),
    ("sub", 2),
    ("mul", 2),
    ("sdiv", 2),
    ("urem", 2),
    ("frem", 2),
    ("and", 3),
    ("or", 3),
    ("xor", 3),
    ("shl", 3),
    ("lshr", 3),
    ("ashr", 3),
    ("trunc", 4),
    ("zext", 4),
    ("sext", 4),
    ("bitcast", 4),
    ("fptoint", 4),
    ("inttofp", 4),
    ("alloca", 5),
    ("load", 5),
    ("store", 5),
    ("getelementptr", 5),
    ("extractelement", 7),
    ("insertelement", 7),
    ("shufflevector", 7),
    ("call", 8),
    ("phi", 8),
    ("frobnicate", 8),
];

#[derive(Debug, Clone)]
pub struct Instr {
    pub result: Option<String>,
    pub opcode: String,
    pub category: usize,
    /// Value operands (variables as `%name`, or constants).
    pub operands: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum Term {
    Ret(Option<String>),
    Br(usize),
    CondBr(String, usize, usize),
    Switch(String, usize, Vec<(i64, usize)>),
    Unreachable,
}

#[derive(Debug, Clone)]
pub struct Block {
    pub body: Vec<Instr>,
    pub term: Term,
}

#[derive(Debug, Clone)]
pub struct IrCase {
    pub name: String,
    pub blocks: Vec<Block>,
}

fn operand_vars(op: &str) -> Vec<&str> {
    op.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '%' || c == '.'))
        .filter_map(|w| w.strip_prefix('%'))
        .collect()
}

impl IrCase {
    pub fn random<R: Rng>(rng: &mut R, max_blocks: usize, max_body: usize) -> Self {
        let n = rng.gen_range(1..=max_blocks);
        let mut counter = 0;
        let mut all_defs: Vec<String> = Vec::new();
        let mut blocks = Vec::new();
        for _ in 0..n {
            let len = rng.gen_range(0..=max_body);
            let mut names: Vec<Option<String>> = Vec::new();
            for _ in 0..len {
                let (op, _) = OPCODES[rng.gen_range(0..OPCODES.len())];
                if op == "store" {
                    names.push(None);
                } else {
                    counter += 1;
                    names.push(Some(format!("v{counter}")));
                }
            }
            let local: Vec<String> = names.iter().flatten().cloned().collect();
            let mut body = Vec::new();
            for (i, result) in names.iter().enumerate() {
                let (op, cat) = loop {
                    let pick = OPCODES[rng.gen_range(0..OPCODES.len())];
                    if (pick.0 == "store") == result.is_none() {
                        break pick;
                    }
                };
                let k = rng.gen_range(1..=3);
                let operands = (0..k)
                    .map(|_| match rng.gen_range(0..10) {
                        // Mostly earlier locals, sometimes later ones, outer values and constants.
                        0..=4 if i > 0 => names[..i]
                            .iter()
                            .flatten()
                            .cloned()
                            .collect::<Vec<_>>()
                            .choose(rng)
                            .map(|v| format!("%{v}"))
                            .unwrap_or_else(|| "7".into()),
                        5 if !local.is_empty() => format!("%{}", local.choose(rng).unwrap()),
                        6 if !all_defs.is_empty() => format!("%{}", all_defs.choose(rng).unwrap()),
                        7 => format!("%arg{}", rng.gen_range(0..3)),
                        _ => rng.gen_range(0..50).to_string(),
                    })
                    .collect();
                body.push(Instr { result: result.clone(), opcode: op.into(), category: cat, operands });
            }
            let cond = || -> String { local.last().map(|v| format!("%{v}")).unwrap_or_else(|| "%arg0".into()) };
            let term = match rng.gen_range(0..6) {
                0 => Term::Ret(local.choose(rng).map(|v| format!("%{v}"))),
                1 => Term::Br(rng.gen_range(0..n)),
                2 | 3 => Term::CondBr(cond(), rng.gen_range(0..n), rng.gen_range(0..n)),
                4 => {
                    let cases = (0..rng.gen_range(1..4)).map(|c| (c as i64, rng.gen_range(0..n))).collect();
                    Term::Switch(cond(), rng.gen_range(0..n), cases)
                }
                _ => Term::Unreachable,
            };
            all_defs.extend(local);
            blocks.push(Block { body, term });
        }
        IrCase { name: format!("g{}", rng.gen_range(0..1000)), blocks }
    }

    /// IR text with block `k` named `label(k)`; operand order of value instructions shuffled
    /// when `shuffle` is given.
    pub fn render<R: Rng>(&self, label: &dyn Fn(usize) -> String, mut shuffle: Option<&mut R>) -> String {
        let mut out = format!("define {}(%arg0, %arg1, %arg2) {{\n", self.name);
        for (k, b) in self.blocks.iter().enumerate() {
            out.push_str(&format!("{}:\n", label(k)));
            for ins in &b.body {
                let mut ops = ins.operands.clone();
                if let Some(r) = shuffle.as_deref_mut() {
                    ops.shuffle(r);
                }
                let lhs = ins.result.as_ref().map(|r| format!("%{r} = ")).unwrap_or_default();
                out.push_str(&format!("  {lhs}{} {}\n", ins.opcode, ops.join(", ")));
            }
            let t = match &b.term {
                Term::Ret(None) => "ret".to_string(),
                Term::Ret(Some(v)) => format!("ret {v}"),
                Term::Br(t) => format!("br {}", label(*t)),
                Term::CondBr(c, a, b) => format!("br {c}, {}, {}", label(*a), label(*b)),
                Term::Switch(c, d, cases) => {
                    let mut s = format!("switch {c}, {}", label(*d));
                    for (v, t) in cases {
                        s.push_str(&format!(", {v}, {}", label(*t)));
                    }
                    s
                }
                Term::Unreachable => "unreachable".to_string(),
            };
            out.push_str(&format!("  {t}  ; end of block {k}\n"));
        }
        out.push_str("}\n");
        out
    }

    pub fn edges(&self) -> BTreeSet<(usize, usize)> {
        let mut e = BTreeSet::new();
        for (k, b) in self.blocks.iter().enumerate() {
            match &b.term {
                Term::Br(t) => {
                    e.insert((k, *t));
                }
                Term::CondBr(_, x, y) => {
                    e.insert((k, *x));
                    e.insert((k, *y));
                }
                Term::Switch(_, d, cases) => {
                    e.insert((k, *d));
                    for (_, t) in cases {
                        e.insert((k, *t));
                    }
                }
                Term::Ret(_) | Term::Unreachable => {}
            }
        }
        e
    }

    /// Full per-block matrices, truncated and averaged by hand.
    #[allow(clippy::needless_range_loop)]
    pub fn oracle_vector(&self) -> Vec<f64> {
        let nb = self.blocks.len() as f64;
        let mut slots = vec![0.0; 105];
        let mut ops = [0.0; 9];
        for b in &self.blocks {
            // (result, uses) per instruction, terminator last.
            let mut rows: Vec<(Option<&str>, Vec<&str>, usize)> = b
                .body
                .iter()
                .map(|i| (i.result.as_deref(), i.operands.iter().flat_map(|o| operand_vars(o)).collect(), i.category))
                .collect();
            let term_uses: Vec<&str> = match &b.term {
                Term::Ret(Some(v)) | Term::CondBr(v, ..) | Term::Switch(v, ..) => operand_vars(v),
                _ => Vec::new(),
            };
            rows.push((None, term_uses, 6));
            let n = rows.len();
            let mut m = vec![vec![0u8; n]; n];
            for i in 0..n {
                let Some(def) = rows[i].0 else { continue };
                for j in 0..n {
                    if i != j && rows[j].1.contains(&def) {
                        m[i][j] = 1;
                        m[j][i] = 1;
                    }
                }
            }
            let mut s = 0;
            for i in 0..15 {
                for j in (i + 1)..15 {
                    if i < n && j < n {
                        slots[s] += m[i][j] as f64;
                    }
                    s += 1;
                }
            }
            let mut present = [false; 9];
            for r in &rows {
                present[r.2] = true;
            }
            for c in 0..9 {
                ops[c] += present[c] as u8 as f64;
            }
        }
        let mut v: Vec<f64> = slots.into_iter().map(|x| x / nb).collect();
        v.extend(ops.iter().map(|x| x / nb));
        v.push(self.edges().len() as f64 / (nb * nb));
        v.push(nb);
        v
    }
}
