mod support;

use std::collections::{BTreeMap, HashMap, HashSet};

use bugsift::lexer::{lex, FunctionId};
use bugsift::pipeline::{
    dedup_key, deduplicate, label_functions, split, split_sizes, DatasetKind, DedupPolicy, Finding, FunctionSpan,
    Label, LabeledExample, ManifestFile, Split,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::cgen::{CFunction, Naming};

fn spans(n: usize) -> Vec<FunctionSpan> {
    (0..n)
        .map(|i| FunctionSpan {
            function_id: FunctionId::new(&format!("f{}.c", i % 3), &format!("fn{i}"), None),
            file: format!("f{}.c", i % 3),
            start_line: (i as u32 / 3) * 10 + 1,
            end_line: (i as u32 / 3) * 10 + 8,
        })
        .collect()
}

fn finding(file: usize, line: u32) -> Finding {
    Finding { file: format!("./f{file}.c"), function: "x".into(), checker: "core.NullDereference".into(), line }
}

/// `n` examples drawn from `distinct` base functions, each copy under a fresh naming.
fn corpus(seed: u64, n: usize, distinct: usize) -> Vec<LabeledExample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases: Vec<CFunction> = (0..distinct).map(|_| CFunction::random(&mut rng)).collect();
    (0..n)
        .map(|i| {
            let base = rng.gen_range(0..distinct);
            let (src, _) = bases[base].render(Naming::Renamed(i as u64));
            let id = FunctionId::new("a.c", &format!("fn{i}"), None);
            let seq = lex(&src).unwrap().with_id(id.clone());
            LabeledExample::new(id, Label::from_bool(base % 2 == 0), DatasetKind::GithubLike).with_tokens(seq)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn more_findings_never_unlabel(lines in prop::collection::vec((0usize..3, 1u32..80), 0..30), extra in prop::collection::vec((0usize..3, 1u32..80), 1..10)) {
        let fs = spans(24);
        let base: Vec<Finding> = lines.iter().map(|&(f, l)| finding(f, l)).collect();
        let mut more = base.clone();
        more.extend(extra.iter().map(|&(f, l)| finding(f, l)));
        let a = label_functions(&fs, &base);
        let b = label_functions(&fs, &more);
        for ((_, la), (_, lb)) in a.labels.iter().zip(&b.labels) {
            prop_assert!(!(la.is_buggy() && !lb.is_buggy()));
        }
    }

    #[test]
    fn no_key_crosses_splits(seed in any::<u64>(), n in 20usize..80) {
        let examples = corpus(seed, n, n / 2 + 1);
        let distinct: HashSet<String> = examples.iter().map(|e| dedup_key(e.tokens.as_ref().unwrap())).collect();
        let m = split(deduplicate(examples, DedupPolicy::SourceOnly).unwrap(), [0.8, 0.1, 0.1], seed).unwrap();
        prop_assert_eq!(m.examples.len(), distinct.len());
        prop_assert_eq!(m.removed, n - distinct.len());
        let mut owner: HashMap<String, Split> = HashMap::new();
        for e in &m.examples {
            let key = dedup_key(e.tokens.as_ref().unwrap());
            let s = e.split.unwrap();
            prop_assert!(owner.insert(key, s).is_none(), "key appears twice");
        }
    }

    #[test]
    fn split_sizes_partition(n in 0usize..5000, a in 0.05f64..1.0, b in 0.05f64..1.0, c in 0.05f64..1.0) {
        let t = a + b + c;
        let f = [a / t, b / t, 1.0 - a / t - b / t];
        prop_assume!(f[2] > 0.0);
        let sizes = split_sizes(n, f).unwrap();
        prop_assert_eq!(sizes.iter().sum::<usize>(), n);
        for (s, x) in sizes.iter().zip(f) {
            prop_assert!((*s as f64 - x * n as f64).abs() < 1.0 + 1e-9);
        }
    }

    #[test]
    fn manifest_round_trip_is_byte_identical(seed in any::<u64>(), n in 5usize..40) {
        let m = split(deduplicate(corpus(seed, n, n), DedupPolicy::SourceOnly).unwrap(), [0.8, 0.1, 0.1], seed).unwrap();
        let file = m.to_file(&"ab".repeat(32), |_| BTreeMap::from([("tokens".to_string(), "tokens.tsv".to_string())]));
        let text = file.to_jsonl();
        let back = ManifestFile::parse(&text).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn split_is_seeded(seed in any::<u64>()) {
        let run = || split(deduplicate(corpus(1, 30, 30), DedupPolicy::SourceOnly).unwrap(), [0.8, 0.1, 0.1], seed).unwrap();
        let a: Vec<_> = run().examples.iter().map(|e| e.split).collect();
        let b: Vec<_> = run().examples.iter().map(|e| e.split).collect();
        prop_assert_eq!(a, b);
    }
}
