use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use bugsift::embedding::{bag_of_words, train_embedding, Vocabulary};
use bugsift::irfeat::{build_vector, parse_ir, write_feature_csv, BuildFeatureVector, BUILD_VECTOR_LEN};
use bugsift::lexer::{write_sequences, FunctionId, Lexer, TokenSequence};
use bugsift::metrics::{pr_curve, rank_functions, ranking_csv, roc_curve, ScoredExample};
use bugsift::models::{combine_features, train_conv, train_ensemble, train_hybrid, ModelArtifact, ModelFile};
use bugsift::pipeline::{
    counts_tsv, deduplicate, label_functions, read_findings, split, FunctionSpan, Label, LabeledExample, Split,
};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::artifacts::*;
use crate::{Experiment, ModelChoice, UsageError};

const SOURCE_EXTS: &[&str] = &["c", "h", "cc", "cpp", "cxx", "c++", "hh", "hpp", "hxx", "inl"];

fn store(exp: &Experiment) -> Store<'_> {
    Store { dir: &exp.out, hash: &exp.hash }
}

/// Files under each root with a matching extension, in sorted order, paired with their
/// root-relative `/`-separated path.
fn collect_files(roots: &[PathBuf], keep: impl Fn(&Path) -> bool) -> anyhow::Result<Vec<(PathBuf, String)>> {
    let mut out = Vec::new();
    for root in roots {
        for entry in WalkDir::new(root).sort_by_file_name() {
            let entry = entry.with_context(|| format!("walking {}", root.display()))?;
            if !entry.file_type().is_file() || !keep(entry.path()) {
                continue;
            }
            let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
            let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
            out.push((entry.path().to_path_buf(), rel));
        }
    }
    Ok(out)
}

fn read_source(path: &Path) -> anyhow::Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(String::from_utf8(bytes).unwrap_or_else(|e| String::from_utf8_lossy(e.as_bytes()).into_owned()))
}

pub fn lex(exp: &Experiment) -> anyhow::Result<()> {
    if exp.corpus.is_empty() {
        return Err(UsageError("lex needs paths.corpus".into()).into());
    }
    let lexer = Lexer::new(exp.config.lexer.clone());
    let files = collect_files(&exp.corpus, |p| {
        p.extension().and_then(|e| e.to_str()).is_some_and(|e| SOURCE_EXTS.contains(&e.to_ascii_lowercase().as_str()))
    })?;
    let revision = exp.config.dataset.revision.as_deref();
    let lexed = files
        .par_iter()
        .map(|(path, rel)| Ok((rel, lexer.lex_file(rel, &read_source(path)?, revision))))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut seqs = Vec::new();
    let mut spans = String::from("functionId\tfile\tstartLine\tendLine\n");
    let mut errors = 0;
    for (rel, file) in lexed {
        for e in &file.errors {
            log::warn!("{rel}: {e}");
        }
        errors += file.errors.len();
        for f in file.functions {
            let _ = writeln!(spans, "{}\t{rel}\t{}\t{}", f.sequence.function_id, f.start_line, f.end_line);
            seqs.push(f.sequence);
        }
    }
    log::info!("lexed {} functions from {} files ({errors} skipped with errors)", seqs.len(), files.len());
    let s = store(exp);
    s.write_text(TOKENS, &write_sequences(&seqs))?;
    s.write_text(FUNCTIONS, &spans)
}

fn read_spans(s: &Store<'_>) -> anyhow::Result<Vec<FunctionSpan>> {
    let text = s.read_text(FUNCTIONS)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let bad = || anyhow!("{FUNCTIONS} line {}: malformed span", i + 2);
        let [id, file, a, b] = f[..] else { return Err(bad()) };
        out.push(FunctionSpan {
            function_id: FunctionId::from_raw(id),
            file: file.to_string(),
            start_line: a.parse().map_err(|_| bad())?,
            end_line: b.parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

pub fn featurize_ir(exp: &Experiment) -> anyhow::Result<()> {
    let Some(ir) = &exp.ir else {
        return Err(UsageError("featurize-ir needs paths.ir".into()).into());
    };
    let files = collect_files(std::slice::from_ref(ir), |p| p.extension().is_some_and(|e| e == "tir"))?;
    let revision = exp.config.dataset.revision.as_deref();
    let parsed = files
        .par_iter()
        .map(|(path, rel)| {
            let text = read_source(path)?;
            let source = rel.strip_suffix(".tir").unwrap_or(rel);
            let mut rows = Vec::new();
            match parse_ir(&text) {
                Err(e) => log::warn!("{rel}: {e}; file skipped"),
                Ok(p) => {
                    for w in &p.warnings {
                        log::warn!("{rel} line {}: unknown opcode `{}` in {}", w.line, w.opcode, w.function);
                    }
                    let mut seen: HashMap<&str, usize> = HashMap::new();
                    for f in &p.functions {
                        let n = seen.entry(&f.name).or_insert(0);
                        *n += 1;
                        let key = if *n == 1 { f.name.clone() } else { format!("{}#{n}", f.name) };
                        match build_vector(f) {
                            Ok(v) => rows.push((FunctionId::new(source, &key, revision).to_string(), v)),
                            Err(e) => log::warn!("{rel}: {}: {e}", f.name),
                        }
                    }
                }
            }
            Ok(rows)
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let rows: Vec<(String, BuildFeatureVector)> = parsed.into_iter().flatten().collect();
    log::info!("featurized {} IR functions from {} files", rows.len(), files.len());
    let csv = write_feature_csv(&[format!("config={}", exp.hash)], rows.iter().map(|(id, v)| (id.as_str(), v)))?;
    store(exp).write(BUILD, csv.as_bytes())
}

pub fn vocab(exp: &Experiment) -> anyhow::Result<()> {
    let s = store(exp);
    let v = Vocabulary::build(&s.tokens()?, exp.config.vocab.min_count)?;
    log::info!("vocabulary of {} tokens", v.len());
    s.write_text(VOCAB, &v.to_tsv())
}

pub fn embed(exp: &Experiment) -> anyhow::Result<()> {
    let s = store(exp);
    let m = train_embedding(&s.tokens()?, &s.vocab()?, &exp.config.embedding)?;
    s.write_embedding(&m)
}

pub fn dataset(exp: &Experiment) -> anyhow::Result<()> {
    let Some(findings_path) = &exp.findings else {
        return Err(UsageError("dataset needs paths.findings".into()).into());
    };
    let s = store(exp);
    let cfg = &exp.config.dataset;
    let spans = read_spans(&s)?;
    let seqs = s.tokens()?;
    if seqs.len() != spans.len() {
        bail!("{TOKENS} and {FUNCTIONS} list different functions");
    }
    let builds = if s.exists(BUILD) { Some(s.build_vectors()?) } else { None };
    let findings = read_findings(findings_path, &cfg.checkers)?;
    let labeling = label_functions(&spans, &findings);
    let examples: Vec<LabeledExample> = seqs
        .into_iter()
        .zip(labeling.labels)
        .map(|(seq, (id, label))| {
            let build = builds.as_ref().and_then(|b| b.get(id.as_str()).cloned());
            let mut ex = LabeledExample::new(id, label, cfg.kind).with_tokens(seq);
            ex.build = build;
            ex
        })
        .collect();
    let deduped = deduplicate(examples, cfg.policy)?;
    let manifest = split(deduped, cfg.fractions, exp.seed)?;
    let file = manifest.to_file(&exp.hash, |e| {
        let mut p = BTreeMap::from([("tokens".to_string(), TOKENS.to_string())]);
        if e.build.is_some() {
            p.insert("build".into(), BUILD.into());
        }
        p
    });
    log::info!(
        "{} examples after removing {} duplicates; {} findings matched no function",
        file.records.len(),
        manifest.removed,
        labeling.unmatched
    );
    s.write(MANIFEST, file.to_jsonl().as_bytes())?;
    s.write_text(COUNTS, &counts_tsv(&file.records))
}

/// Features available for scoring, keyed by function id.
struct FeatureTable {
    tokens: HashMap<String, TokenSequence>,
    build: HashMap<String, BuildFeatureVector>,
}

impl FeatureTable {
    fn load(s: &Store<'_>, kind: ModelChoice) -> anyhow::Result<(Self, Vec<String>)> {
        let mut order = Vec::new();
        let mut tokens = HashMap::new();
        if kind.needs_tokens() {
            for seq in s.tokens()? {
                order.push(seq.function_id.to_string());
                tokens.insert(seq.function_id.to_string(), seq);
            }
        }
        let mut build = HashMap::new();
        if kind.needs_build() {
            let csv = bugsift::irfeat::read_feature_csv(&s.read_text(BUILD)?).context(BUILD)?;
            if !kind.needs_tokens() {
                order = csv.iter().map(|(id, _)| id.clone()).collect();
            }
            build = csv.into_iter().collect();
        }
        let t = Self { tokens, build };
        order.retain(|id| t.has(kind, id));
        Ok((t, order))
    }

    fn has(&self, kind: ModelChoice, id: &str) -> bool {
        (!kind.needs_tokens() || self.tokens.contains_key(id)) && (!kind.needs_build() || self.build.contains_key(id))
    }
}

fn split_records(
    exp: &Experiment,
    split: Split,
    kind: ModelChoice,
    t: &FeatureTable,
) -> anyhow::Result<Vec<(String, bool)>> {
    let manifest = store(exp).manifest()?;
    let mut missing = 0;
    let mut out = Vec::new();
    for r in manifest.in_split(split) {
        if t.has(kind, r.function_id.as_str()) {
            out.push((r.function_id.to_string(), r.label == Label::Buggy));
        } else {
            missing += 1;
        }
    }
    if missing > 0 {
        log::warn!("{missing} {split} examples lack features for {} and are skipped", kind.name());
    }
    if out.is_empty() {
        bail!("no {split} examples have the features {} needs", kind.name());
    }
    Ok(out)
}

fn bow_row(vocab: &Vocabulary, seq: &TokenSequence) -> Vec<f64> {
    bag_of_words(seq, vocab).to_f64()
}

fn combined_row(vocab: &Vocabulary, id: &str, t: &FeatureTable) -> anyhow::Result<Vec<f64>> {
    let seq = &t.tokens[id];
    let fid = FunctionId::from_raw(id);
    Ok(combine_features(&fid, &t.build[id], &seq.function_id, &bag_of_words(seq, vocab))?.values)
}

pub fn train(exp: &Experiment, kind: ModelChoice) -> anyhow::Result<()> {
    let s = store(exp);
    let (t, _) = FeatureTable::load(&s, kind)?;
    let examples = split_records(exp, Split::Train, kind, &t)?;
    let y: Vec<bool> = examples.iter().map(|(_, y)| *y).collect();
    let seqs = || examples.iter().map(|(id, _)| t.tokens[id].clone()).collect::<Vec<_>>();
    let cfg = &exp.config;
    log::info!("training {} on {} examples ({} buggy)", kind.name(), y.len(), y.iter().filter(|&&b| b).count());
    let model = match kind {
        ModelChoice::BowEt => {
            let vocab = s.vocab()?;
            let x: Vec<Vec<f64>> = examples.iter().map(|(id, _)| bow_row(&vocab, &t.tokens[id])).collect();
            ModelArtifact::Ensemble(train_ensemble(&x, &y, &cfg.extra_trees)?)
        }
        ModelChoice::W2vCnn => ModelArtifact::Conv(train_conv(&seqs(), &y, &s.embedding()?, &cfg.conv)?),
        ModelChoice::CnnEt => {
            ModelArtifact::Hybrid(train_hybrid(&seqs(), &y, &s.embedding()?, &cfg.conv, &cfg.extra_trees)?)
        }
        ModelChoice::BuildRf => {
            let x: Vec<Vec<f64>> = examples.iter().map(|(id, _)| t.build[id].values().to_vec()).collect();
            ModelArtifact::Ensemble(train_ensemble(&x, &y, &cfg.random_forest)?)
        }
        ModelChoice::Combined => {
            let vocab = s.vocab()?;
            let x = examples.iter().map(|(id, _)| combined_row(&vocab, id, &t)).collect::<anyhow::Result<Vec<_>>>()?;
            ModelArtifact::Combined { ensemble: train_ensemble(&x, &y, &cfg.combined)?, bow_len: vocab.len() }
        }
    };
    let file = ModelFile { config_hash: exp.hash.clone(), model };
    s.write(&model_name(kind), &file.to_bytes())
}

struct Scorer {
    kind: ModelChoice,
    model: ModelArtifact,
    vocab: Option<Vocabulary>,
}

impl Scorer {
    fn load(s: &Store<'_>, kind: ModelChoice) -> anyhow::Result<Self> {
        let model = s.model(kind)?.model;
        let vocab = match kind {
            ModelChoice::BowEt | ModelChoice::Combined => Some(s.vocab()?),
            _ => None,
        };
        let ok = match (&model, kind) {
            (ModelArtifact::Ensemble(e), ModelChoice::BowEt) => e.n_features == vocab.as_ref().map_or(0, |v| v.len()),
            (ModelArtifact::Ensemble(e), ModelChoice::BuildRf) => e.n_features == BUILD_VECTOR_LEN,
            (ModelArtifact::Conv(_), ModelChoice::W2vCnn) | (ModelArtifact::Hybrid(_), ModelChoice::CnnEt) => true,
            (ModelArtifact::Combined { bow_len, .. }, ModelChoice::Combined) => {
                Some(*bow_len) == vocab.as_ref().map(|v| v.len())
            }
            _ => false,
        };
        if !ok {
            bail!("{} does not hold a {} model matching the vocabulary", model_name(kind), kind.name());
        }
        Ok(Self { kind, model, vocab })
    }

    fn score(&self, id: &str, t: &FeatureTable) -> anyhow::Result<f64> {
        let vocab = || self.vocab.as_ref().expect("vocabulary loaded for this kind");
        Ok(match (&self.model, self.kind) {
            (ModelArtifact::Ensemble(e), ModelChoice::BowEt) => e.predict_proba(&bow_row(vocab(), &t.tokens[id]))?,
            (ModelArtifact::Ensemble(e), _) => e.predict_proba(t.build[id].values())?,
            (ModelArtifact::Conv(c), _) => c.predict_proba(&t.tokens[id]),
            (ModelArtifact::Hybrid(h), _) => h.predict_proba(&t.tokens[id])?,
            (ModelArtifact::Combined { ensemble, .. }, _) => ensemble.predict_proba(&combined_row(vocab(), id, t)?)?,
        })
    }

    fn score_all(&self, ids: &[String], t: &FeatureTable) -> anyhow::Result<Vec<f64>> {
        ids.par_iter().map(|id| self.score(id, t)).collect()
    }
}

fn summary_name(split: Split) -> String {
    format!("summary-{split}.tsv")
}

/// Existing summary rows made under the current config, keyed by model name.
fn read_summary(s: &Store<'_>, name: &str) -> BTreeMap<String, String> {
    let Ok(text) = s.read_text(name) else { return BTreeMap::new() };
    text.lines().skip(1).filter_map(|l| l.split_once('\t').map(|(m, rest)| (m.to_string(), rest.to_string()))).collect()
}

pub fn evaluate(exp: &Experiment, kind: ModelChoice, split: Split) -> anyhow::Result<()> {
    let s = store(exp);
    let manifest = s.manifest()?;
    let model = s.model(kind)?;
    if model.config_hash != manifest.config_hash {
        bail!("model and manifest were produced under different configs");
    }
    let (t, _) = FeatureTable::load(&s, kind)?;
    let examples = split_records(exp, split, kind, &t)?;
    let scorer = Scorer::load(&s, kind)?;
    let ids: Vec<String> = examples.iter().map(|(id, _)| id.clone()).collect();
    let scores = scorer.score_all(&ids, &t)?;
    let data: Vec<ScoredExample> = scores.iter().zip(&examples).map(|(&p, (_, y))| ScoredExample::new(p, *y)).collect();
    let roc = roc_curve(&data)?;
    let pr = pr_curve(&data)?;
    log::info!("{} on {split}: ROC AUC {:.4}, P-R AUC {:.4}", kind.name(), roc.auc, pr.auc);
    s.write_text(&format!("roc-{}-{split}.csv", kind.name()), &roc.to_csv())?;
    s.write_text(&format!("pr-{}-{split}.csv", kind.name()), &pr.to_csv())?;
    let name = summary_name(split);
    let mut rows = read_summary(&s, &name);
    rows.insert(kind.name().to_string(), format!("{:.6}\t{:.6}", roc.auc, pr.auc));
    let mut out = String::from("model\trocAuc\tprAuc\n");
    for k in ModelChoice::ALL {
        if let Some(r) = rows.get(k.name()) {
            let _ = writeln!(out, "{}\t{r}", k.name());
        }
    }
    s.write_text(&name, &out)
}

pub fn rank(exp: &Experiment, kind: ModelChoice, split: Option<Split>) -> anyhow::Result<()> {
    let s = store(exp);
    let (t, all) = FeatureTable::load(&s, kind)?;
    let ids: Vec<String> = match split {
        Some(sp) => split_records(exp, sp, kind, &t)?.into_iter().map(|(id, _)| id).collect(),
        None => all,
    };
    let scorer = Scorer::load(&s, kind)?;
    let scores = scorer.score_all(&ids, &t)?;
    let ranked = rank_functions(&ids.into_iter().zip(scores).collect::<Vec<_>>());
    let name = match split {
        Some(sp) => format!("ranking-{}-{sp}.csv", kind.name()),
        None => format!("ranking-{}.csv", kind.name()),
    };
    s.write_text(&name, &ranking_csv(&ranked))
}
