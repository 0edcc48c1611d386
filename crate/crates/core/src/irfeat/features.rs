use std::collections::HashMap;

use super::{BasicBlock, IrError, IrFunction, OpCategory};

pub const USE_DEF_SIZE: usize = 15;
/// Strictly-upper-triangular entries of a `USE_DEF_SIZE` square matrix.
pub const USE_DEF_SLOTS: usize = USE_DEF_SIZE * (USE_DEF_SIZE - 1) / 2;
pub const OPVEC_LEN: usize = 9;
pub const BUILD_VECTOR_LEN: usize = USE_DEF_SLOTS + OPVEC_LEN + 2;

const _: () = assert!(USE_DEF_SLOTS == 105 && BUILD_VECTOR_LEN == 116);

/// Which opcode categories occur in a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpVec {
    pub bits: [bool; OPVEC_LEN],
}

impl OpVec {
    pub fn has(&self, c: OpCategory) -> bool {
        self.bits[c.index()]
    }
}

pub fn op_vec(block: &BasicBlock) -> OpVec {
    let mut v = OpVec::default();
    for inst in &block.instructions {
        v.bits[OpCategory::of(&inst.opcode).index()] = true;
    }
    v
}

/// Symmetric per-block def/use adjacency between instruction positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UseDefMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl UseDefMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.n + j]
    }

    fn set(&mut self, i: usize, j: usize) {
        self.entries[i * self.n + j] = true;
    }
}

/// Entry (i, j) and (j, i) are set when a variable defined at instruction `i` is used at
/// instruction `j != i` of the same block. Values defined elsewhere contribute nothing.
pub fn use_def_matrix(block: &BasicBlock) -> UseDefMatrix {
    let n = block.instructions.len();
    let mut m = UseDefMatrix { n, entries: vec![false; n * n] };
    let defs: HashMap<&str, usize> =
        block.instructions.iter().enumerate().filter_map(|(i, inst)| inst.result.as_deref().map(|r| (r, i))).collect();
    for (j, inst) in block.instructions.iter().enumerate() {
        for var in inst.uses() {
            if let Some(&i) = defs.get(var) {
                if i != j {
                    m.set(i, j);
                    m.set(j, i);
                }
            }
        }
    }
    m
}

/// Fixed-length function summary:
/// `[105 mean use-def slots | 9 mean op-vec bits | CFG edge density | block count]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BuildFeatureVector {
    values: Vec<f64>,
}

impl BuildFeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, IrError> {
        if values.len() != BUILD_VECTOR_LEN {
            return Err(IrError::Csv(format!(
                "build vector must have {BUILD_VECTOR_LEN} entries, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(IrError::Csv("build vector contains non-finite values".into()));
        }
        if let Some(i) = values[..BUILD_VECTOR_LEN - 1].iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(IrError::Csv(format!("build vector entry {i} outside [0, 1]")));
        }
        if values[BUILD_VECTOR_LEN - 1] < 1.0 {
            return Err(IrError::Csv("build vector block count below 1".into()));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn use_def_slots(&self) -> &[f64] {
        &self.values[..USE_DEF_SLOTS]
    }

    pub fn op_vec_means(&self) -> &[f64] {
        &self.values[USE_DEF_SLOTS..USE_DEF_SLOTS + OPVEC_LEN]
    }

    pub fn adjacency_mean(&self) -> f64 {
        self.values[BUILD_VECTOR_LEN - 2]
    }

    pub fn block_count(&self) -> f64 {
        self.values[BUILD_VECTOR_LEN - 1]
    }

    /// Little-endian bytes of every entry, used for duplicate detection.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.values.iter().flat_map(|v| v.to_le_bytes()).collect()
    }
}

/// Slot of `(i, j)`, `i < j < USE_DEF_SIZE`, in row-major upper-triangular order.
pub fn use_def_slot(i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < USE_DEF_SIZE);
    i * (2 * USE_DEF_SIZE - i - 1) / 2 + (j - i - 1)
}

pub fn build_vector(f: &IrFunction) -> Result<BuildFeatureVector, IrError> {
    let n = f.blocks.len();
    if n == 0 {
        return Err(IrError::NoBlocks(f.name.clone()));
    }
    let mut values = vec![0.0; BUILD_VECTOR_LEN];
    for block in &f.blocks {
        let m = use_def_matrix(block);
        let k = m.size().min(USE_DEF_SIZE);
        for i in 0..k {
            for j in i + 1..k {
                if m.get(i, j) {
                    values[use_def_slot(i, j)] += 1.0;
                }
            }
        }
        let ops = op_vec(block);
        for (c, &bit) in ops.bits.iter().enumerate() {
            if bit {
                values[USE_DEF_SLOTS + c] += 1.0;
            }
        }
    }
    for v in &mut values[..USE_DEF_SLOTS + OPVEC_LEN] {
        *v /= n as f64;
    }
    values[BUILD_VECTOR_LEN - 2] = f.edges.len() as f64 / (n * n) as f64;
    values[BUILD_VECTOR_LEN - 1] = n as f64;
    BuildFeatureVector::new(values)
}

fn header() -> Vec<String> {
    std::iter::once("fid".to_string()).chain((0..BUILD_VECTOR_LEN).map(|i| format!("f{i}"))).collect()
}

/// CSV with header `fid,f0,...,f115`. Lines starting with `#` are prepended verbatim.
pub fn write_feature_csv<'a, I>(preamble: &[String], rows: I) -> Result<String, IrError>
where
    I: IntoIterator<Item = (&'a str, &'a BuildFeatureVector)>,
{
    let mut out = String::new();
    for line in preamble {
        out.push('#');
        out.push_str(line);
        out.push('\n');
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| IrError::Csv(e.to_string());
    w.write_record(header()).map_err(csv_err)?;
    for (fid, v) in rows {
        let mut rec = vec![fid.to_string()];
        rec.extend(v.values.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    let body = w.into_inner().map_err(|e| IrError::Csv(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

pub fn read_feature_csv(text: &str) -> Result<Vec<(String, BuildFeatureVector)>, IrError> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let csv_err = |e: csv::Error| IrError::Csv(e.to_string());
    let head = r.headers().map_err(csv_err)?.clone();
    if head.iter().collect::<Vec<_>>() != header() {
        return Err(IrError::Csv("unexpected header".into()));
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec.map_err(csv_err)?;
        let values = rec
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IrError::Csv(format!("record {}: {e}", n + 1)))?;
        out.push((rec[0].to_string(), BuildFeatureVector::new(values)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::irfeat::parse_ir;

    fn block(src: &str) -> BasicBlock {
        let text = format!("define t {{\n{src}\n}}");
        parse_ir(&text).unwrap().functions.remove(0).blocks.remove(0)
    }

    fn set(v: &OpVec) -> Vec<OpCategory> {
        OpCategory::ALL.iter().copied().filter(|c| v.has(*c)).collect()
    }

    #[test]
    fn op_vec_examples() {
        use OpCategory::*;
        let b = block("%a = add %x, %y\n%b = mul %a, 2\nbr done\ndone:\nret");
        assert_eq!(set(&op_vec(&b)), [Binary, Termination]);
        assert_eq!(set(&op_vec(&block("ret"))), [Termination]);
        let b = block("%p = load %q\nstore %p, %q\nbr done\ndone:\nret");
        assert_eq!(set(&op_vec(&b)), [MemoryAddress, Termination]);
    }

    #[test]
    fn use_def_hand_example() {
        let b = block("%a = add %x, %y\n%b = mul %a, %x\nbr %b, l1, l2\nl1:\nret\nl2:\nret");
        let m = use_def_matrix(&b);
        let ones: Vec<_> = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).filter(|&(i, j)| m.get(i, j)).collect();
        assert_eq!(ones, [(0, 1), (1, 0), (1, 2), (2, 1)]);
    }

    #[test]
    fn use_def_no_reuse_and_repeated_operand() {
        let m = use_def_matrix(&block("%a = add %x, 1\n%b = add %y, 2\nret"));
        assert!((0..3).all(|i| (0..3).all(|j| !m.get(i, j))));
        let m = use_def_matrix(&block("%a = add %x, %x\nret %a"));
        assert!(m.get(0, 1) && m.get(1, 0) && !m.get(0, 0) && !m.get(1, 1));
    }

    #[test]
    fn slot_layout() {
        assert_eq!(use_def_slot(0, 1), 0);
        assert_eq!(use_def_slot(0, 14), 13);
        assert_eq!(use_def_slot(1, 2), 14);
        assert_eq!(use_def_slot(13, 14), USE_DEF_SLOTS - 1);
    }

    #[test]
    fn three_block_vector() {
        let f = parse_ir("define f {\nentry:\n%a = add %x, %y\n%b = mul %a, %x\nbr %b, l1, l2\nl1:\nret\nl2:\nret\n}")
            .unwrap()
            .functions
            .remove(0);
        let v = build_vector(&f).unwrap();
        assert_eq!(v.values().len(), 116);
        let third = 1.0 / 3.0;
        for (s, &x) in v.use_def_slots().iter().enumerate() {
            let want = if s == use_def_slot(0, 1) || s == use_def_slot(1, 2) { third } else { 0.0 };
            assert!((x - want).abs() < 1e-12, "slot {s}");
        }
        let ops = v.op_vec_means();
        assert!((ops[OpCategory::Binary.index()] - third).abs() < 1e-12);
        assert!((ops[OpCategory::Termination.index()] - 1.0).abs() < 1e-12);
        assert!((v.adjacency_mean() - 2.0 / 9.0).abs() < 1e-12);
        assert_eq!(v.block_count(), 3.0);
    }

    #[test]
    fn single_ret_vector() {
        let f = parse_ir("define g {\n ret\n}").unwrap().functions.remove(0);
        let v = build_vector(&f).unwrap();
        assert!(v.use_def_slots().iter().all(|&x| x == 0.0));
        let mut e = [0.0; 9];
        e[OpCategory::Termination.index()] = 1.0;
        assert_eq!(v.op_vec_means(), e);
        assert_eq!(v.adjacency_mean(), 0.0);
        assert_eq!(v.block_count(), 1.0);
    }

    #[test]
    fn long_block_truncates_use_def_only() {
        // chain: %v1 = add %v0 ... each instruction uses the previous one
        let mut src = String::from("%v0 = add %x, 1\n");
        for i in 1..19 {
            src.push_str(&format!("%v{i} = add %v{}, 1\n", i - 1));
        }
        src.push_str("%c = icmp eq %v18, 0\nret %c");
        let f = parse_ir(&format!("define long {{\n{src}\n}}")).unwrap().functions.remove(0);
        assert_eq!(f.blocks[0].instructions.len(), 21);
        let v = build_vector(&f).unwrap();
        let ones = v.use_def_slots().iter().filter(|&&x| x == 1.0).count();
        assert_eq!(ones, 14);
        assert_eq!(v.op_vec_means()[OpCategory::Conditional.index()], 1.0);
    }

    #[test]
    fn empty_function_errors() {
        let f = IrFunction { name: "e".into(), blocks: vec![], edges: vec![] };
        assert_eq!(build_vector(&f), Err(IrError::NoBlocks("e".into())));
    }

    #[test]
    fn csv_round_trip() {
        let f = parse_ir("define g {\n ret\n}").unwrap().functions.remove(0);
        let v = build_vector(&f).unwrap();
        let text = write_feature_csv(&["config abc".into()], [("a.c,odd:g", &v)]).unwrap();
        assert!(text.starts_with("#config abc\nfid,f0,f1,"));
        let back = read_feature_csv(&text).unwrap();
        assert_eq!(back, vec![("a.c,odd:g".to_string(), v)]);
    }
}
