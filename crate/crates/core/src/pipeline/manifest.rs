use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DatasetKind, DedupPolicy, Label, LabeledExample, PipelineError, Split};
use crate::lexer::FunctionId;

/// The deduplicated, optionally split example set.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub examples: Vec<LabeledExample>,
    pub policy: DedupPolicy,
    /// Duplicates dropped by [`super::deduplicate`].
    pub removed: usize,
}

/// `[split][label]` counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SplitCounts(pub [[usize; 2]; 3]);

impl SplitCounts {
    pub fn get(&self, split: Split, label: Label) -> usize {
        self.0[split.index()][label.is_buggy() as usize]
    }

    pub fn total(&self, split: Split) -> usize {
        self.0[split.index()].iter().sum()
    }
}

impl DatasetManifest {
    pub fn counts(&self) -> SplitCounts {
        self.counts_for(None)
    }

    pub fn counts_for(&self, dataset: Option<DatasetKind>) -> SplitCounts {
        let mut c = SplitCounts::default();
        for e in &self.examples {
            if let (Some(s), true) = (e.split, dataset.is_none_or(|d| d == e.dataset)) {
                c.0[s.index()][e.label.is_buggy() as usize] += 1;
            }
        }
        c
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &LabeledExample> {
        self.examples.iter().filter(move |e| e.split == Some(split))
    }

    /// Manifest records; `feature_paths` names the files holding each example's features.
    pub fn to_file<F>(&self, config_hash: &str, feature_paths: F) -> ManifestFile
    where
        F: Fn(&LabeledExample) -> BTreeMap<String, String>,
    {
        let records = self
            .examples
            .iter()
            .map(|e| ManifestRecord {
                function_id: e.function_id.clone(),
                label: e.label,
                split: e.split,
                dataset: e.dataset,
                feature_paths: feature_paths(e),
            })
            .collect();
        ManifestFile { config_hash: config_hash.to_string(), policy: self.policy, records }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ManifestRecord {
    pub function_id: FunctionId,
    pub label: Label,
    pub split: Option<Split>,
    pub dataset: DatasetKind,
    pub feature_paths: BTreeMap<String, String>,
}

/// On-disk manifest: `#config=` and `#dedupPolicy=` header lines, then one JSON record per line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestFile {
    pub config_hash: String,
    pub policy: DedupPolicy,
    pub records: Vec<ManifestRecord>,
}

impl ManifestFile {
    pub fn to_jsonl(&self) -> String {
        let mut out = format!("#config={}\n#dedupPolicy={}\n", self.config_hash, self.policy.name());
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut config_hash = None;
        let mut policy = None;
        let mut records = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let err = |message: String| PipelineError::Manifest { line: i + 1, message };
            if let Some(h) = line.strip_prefix("#config=") {
                config_hash = Some(h.to_string());
            } else if let Some(p) = line.strip_prefix("#dedupPolicy=") {
                policy = Some(p.parse().map_err(err)?);
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                records.push(serde_json::from_str(line).map_err(|e| err(e.to_string()))?);
            }
        }
        let missing = |what: &str| PipelineError::Manifest { line: 0, message: format!("missing {what} header") };
        Ok(Self {
            config_hash: config_hash.ok_or_else(|| missing("#config="))?,
            policy: policy.ok_or_else(|| missing("#dedupPolicy="))?,
            records,
        })
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ManifestRecord> {
        self.records.iter().filter(move |r| r.split == Some(split))
    }
}

/// Tab-separated split x label table with one count column per dataset present.
pub fn counts_tsv(records: &[ManifestRecord]) -> String {
    let datasets: BTreeSet<DatasetKind> = records.iter().map(|r| r.dataset).collect();
    let mut counts: BTreeMap<(DatasetKind, Split, Label), usize> = BTreeMap::new();
    for r in records {
        if let Some(s) = r.split {
            *counts.entry((r.dataset, s, r.label)).or_default() += 1;
        }
    }
    let mut out = String::from("split\tlabel");
    for d in &datasets {
        out.push('\t');
        out.push_str(d.name());
    }
    out.push('\n');
    for s in Split::ALL {
        for (label, name) in [(Label::Good, "good"), (Label::Buggy, "buggy")] {
            out.push_str(&format!("{s}\t{name}"));
            for &d in &datasets {
                out.push_str(&format!("\t{}", counts.get(&(d, s, label)).copied().unwrap_or(0)));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(id: &str, label: Label, split: Split, dataset: DatasetKind) -> ManifestRecord {
        ManifestRecord {
            function_id: FunctionId::from_raw(id),
            label,
            split: Some(split),
            dataset,
            feature_paths: BTreeMap::from([("tokens".to_string(), "tokens.tsv".to_string())]),
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let m = ManifestFile {
            config_hash: "cafe".into(),
            policy: DedupPolicy::SourceOrBuild,
            records: vec![
                record("a.c:f", Label::Buggy, Split::Train, DatasetKind::GithubLike),
                record("a.c:g", Label::Good, Split::Test, DatasetKind::DebianLike),
            ],
        };
        let text = m.to_jsonl();
        assert!(text.contains(r#""functionId":"a.c:f","label":1,"split":"train""#));
        let back = ManifestFile::parse(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_jsonl(), text);
        assert!(ManifestFile::parse("{}").is_err());
    }

    #[test]
    fn counts_table_layout() {
        let r = vec![
            record("a", Label::Good, Split::Train, DatasetKind::GithubLike),
            record("b", Label::Buggy, Split::Train, DatasetKind::GithubLike),
            record("c", Label::Good, Split::Valid, DatasetKind::GithubLike),
            record("d", Label::Good, Split::Train, DatasetKind::GithubLike),
        ];
        assert_eq!(
            counts_tsv(&r),
            "split\tlabel\tgithubLike\ntrain\tgood\t2\ntrain\tbuggy\t1\nvalid\tgood\t1\nvalid\tbuggy\t0\n\
             test\tgood\t0\ntest\tbuggy\t0\n"
        );
    }
}
