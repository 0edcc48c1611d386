use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DatasetManifest, PipelineError, Split};

pub const DEFAULT_FRACTIONS: [f64; 3] = [0.8, 0.1, 0.1];

/// Split sizes by largest remainder; remainder ties go to the earlier split.
pub fn split_sizes(n: usize, fractions: [f64; 3]) -> Result<[usize; 3], PipelineError> {
    if fractions.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(PipelineError::Fractions(format!("{fractions:?} must all be positive")));
    }
    let sum: f64 = fractions.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(PipelineError::Fractions(format!("{fractions:?} sum to {sum}, not 1")));
    }
    let quotas = fractions.map(|f| f * n as f64);
    let mut sizes = quotas.map(|q| q.floor() as usize);
    let mut left = n - sizes.iter().sum::<usize>();
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())));
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        sizes[i] += 1;
        left -= 1;
    }
    Ok(sizes)
}

/// Assign splits by a seeded shuffle. Example order in the manifest is unchanged.
pub fn split(mut manifest: DatasetManifest, fractions: [f64; 3], seed: u64) -> Result<DatasetManifest, PipelineError> {
    let sizes = split_sizes(manifest.examples.len(), fractions)?;
    let mut order: Vec<usize> = (0..manifest.examples.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut cursor = 0;
    for (s, &size) in Split::ALL.iter().zip(&sizes) {
        if size == 0 {
            log::warn!("split {s} is empty");
        }
        for &i in &order[cursor..cursor + size] {
            manifest.examples[i].split = Some(*s);
        }
        cursor += size;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::super::{deduplicate, DatasetKind, DedupPolicy, Label, LabeledExample};
    use super::*;
    use crate::lexer::{lex, FunctionId};

    fn manifest(n: usize) -> DatasetManifest {
        let ex = (0..n)
            .map(|i| {
                LabeledExample::new(FunctionId::from_raw(&format!("f{i}")), Label::Good, DatasetKind::GithubLike)
                    .with_tokens(lex(&format!("x = {i};")).unwrap())
            })
            .collect();
        deduplicate(ex, DedupPolicy::SourceOnly).unwrap()
    }

    #[test]
    fn largest_remainder_sizes() {
        assert_eq!(split_sizes(10, [0.8, 0.1, 0.1]).unwrap(), [8, 1, 1]);
        assert_eq!(split_sizes(7, [0.8, 0.1, 0.1]).unwrap(), [5, 1, 1]);
        assert_eq!(split_sizes(3, [1.0 / 3.0; 3]).unwrap(), [1, 1, 1]);
        assert!(split_sizes(10, [0.5, 0.5, 0.1]).is_err());
        assert!(split_sizes(10, [1.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn seeded_assignment() {
        let a = split(manifest(10), [0.8, 0.1, 0.1], 3).unwrap();
        let b = split(manifest(10), [0.8, 0.1, 0.1], 3).unwrap();
        assert_eq!(a, b);
        let c = a.counts();
        assert_eq!(c.total(Split::Train), 8);
        assert_eq!(c.total(Split::Valid), 1);
        assert_eq!(c.total(Split::Test), 1);
        assert!(a.examples.iter().all(|e| e.split.is_some()));
    }
}
