use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{LabelValue, RecordManifest, Split};

/// Default train/val/test fractions.
pub const DEFAULT_FRACTIONS: [f64; 3] = [0.85, 0.095, 0.055];

/// A split for every node plus the parameters that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitAssignment {
    pub splits: Vec<Split>,
    pub fractions: [f64; 3],
    pub seed: u64,
}

impl SplitAssignment {
    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|&&s| s == split).count()
    }

    pub fn apply(&self, manifest: &mut RecordManifest) {
        for (node, &s) in self.splits.iter().enumerate() {
            manifest.set_split(node, s);
        }
    }
}

// floor() that tolerates 0.095 * 1000 = 94.99999999999999
fn floor_tol(x: f64) -> usize {
    (x + 1e-9).floor().max(0.0) as usize
}

/// Largest-remainder apportionment of `n` items over `fractions`.
fn apportion(n: usize, fractions: &[f64; 3]) -> [usize; 3] {
    let mut q = [0usize; 3];
    let mut rem = [(0.0, 0usize); 3];
    for s in 0..3 {
        let x = n as f64 * fractions[s];
        q[s] = floor_tol(x);
        rem[s] = (x - q[s] as f64, s);
    }
    rem.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = n - q.iter().sum::<usize>();
    for &(_, s) in rem.iter().cycle() {
        if left == 0 {
            break;
        }
        q[s] += 1;
        left -= 1;
    }
    q
}

fn stratum_key(manifest: &RecordManifest, node: usize, key: &str) -> String {
    let r = manifest.get(node);
    match r.labels.get(key) {
        Some(LabelValue::Text(t)) => t.clone(),
        Some(LabelValue::Number(v)) => v.to_string(),
        Some(LabelValue::Set(_)) | None => r.property(key).to_string(),
    }
}

/// Random train/val/test assignment with exact global counts.
///
/// Global counts are the largest-remainder apportionment of the record
/// count. With `stratify_key`, each stratum (label value, else property
/// value) receives its proportional share as closely as the global counts
/// allow. Deterministic in `seed`.
pub fn make_splits(
    manifest: &RecordManifest,
    fractions: [f64; 3],
    seed: u64,
    stratify_key: Option<&str>,
) -> Result<SplitAssignment> {
    if manifest.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if fractions.iter().any(|f| !f.is_finite() || *f < 0.0) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions {fractions:?} must be non-negative and sum to 1"
        )));
    }
    let n = manifest.len();
    let mut quota = apportion(n, &fractions);

    let mut strata: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for node in 0..n {
        let k = stratify_key
            .map(|key| stratum_key(manifest, node, key))
            .unwrap_or_default();
        strata.entry(k).or_default().push(node);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut strata: Vec<Vec<usize>> = strata.into_values().collect();
    for members in &mut strata {
        members.shuffle(&mut rng);
    }

    // Whole shares first, never exceeding the global quota.
    let mut take: Vec<[usize; 3]> = vec![[0; 3]; strata.len()];
    let mut fracs = Vec::new();
    for (c, members) in strata.iter().enumerate() {
        for s in 0..3 {
            let x = members.len() as f64 * fractions[s];
            let want = floor_tol(x).min(quota[s]);
            take[c][s] = want;
            quota[s] -= want;
            fracs.push((x - floor_tol(x) as f64, c, s));
        }
    }
    // Then fractional shares, largest first.
    fracs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for &(f, c, s) in &fracs {
        if f > 0.0 && quota[s] > 0 && take[c].iter().sum::<usize>() < strata[c].len() {
            take[c][s] += 1;
            quota[s] -= 1;
        }
    }
    // Whatever is left goes wherever quota remains.
    for (c, members) in strata.iter().enumerate() {
        while take[c].iter().sum::<usize>() < members.len() {
            let s = (0..3).find(|&s| quota[s] > 0).expect("quotas sum to n");
            take[c][s] += 1;
            quota[s] -= 1;
        }
    }

    let mut splits = vec![Split::Train; n];
    for (c, members) in strata.iter().enumerate() {
        let mut it = members.iter();
        for (s, split) in Split::ALL.iter().enumerate() {
            for &node in it.by_ref().take(take[c][s]) {
                splits[node] = *split;
            }
        }
    }
    Ok(SplitAssignment {
        splits,
        fractions,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Record;

    fn manifest(n: usize, classes: usize) -> RecordManifest {
        RecordManifest::new(
            (0..n)
                .map(|i| {
                    Record::new(format!("r{i}"))
                        .with_label("style", LabelValue::Text(format!("s{}", (i * 7) % classes)))
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn thousand_records_split_exactly() {
        let m = manifest(1000, 1);
        let a = make_splits(&m, DEFAULT_FRACTIONS, 0, None).unwrap();
        assert_eq!(
            (a.count(Split::Train), a.count(Split::Val), a.count(Split::Test)),
            (850, 95, 55)
        );
    }

    #[test]
    fn stratified_proportions_within_two_percent() {
        let m = manifest(1000, 5);
        let a = make_splits(&m, DEFAULT_FRACTIONS, 3, Some("style")).unwrap();
        assert_eq!(a.count(Split::Train), 850);
        assert_eq!(a.count(Split::Val), 95);
        for class in 0..5 {
            let label = LabelValue::Text(format!("s{class}"));
            let nodes: Vec<usize> = (0..1000).filter(|&i| m.get(i).labels["style"] == label).collect();
            for (s, split) in Split::ALL.iter().enumerate() {
                let share = nodes.iter().filter(|&&i| a.splits[i] == *split).count() as f64 / nodes.len() as f64;
                assert!(
                    (share - DEFAULT_FRACTIONS[s]).abs() <= 0.02,
                    "class {class} {split}: {share}"
                );
            }
        }
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let m = manifest(300, 3);
        let a = make_splits(&m, DEFAULT_FRACTIONS, 9, Some("style")).unwrap();
        assert_eq!(a, make_splits(&m, DEFAULT_FRACTIONS, 9, Some("style")).unwrap());
        assert_ne!(
            a.splits,
            make_splits(&m, DEFAULT_FRACTIONS, 10, Some("style")).unwrap().splits
        );
    }

    #[test]
    fn bad_fractions_rejected() {
        let m = manifest(10, 1);
        assert!(make_splits(&m, [0.5, 0.3, 0.3], 0, None).is_err());
        assert!(make_splits(&m, [1.2, -0.1, -0.1], 0, None).is_err());
    }

    #[test]
    fn apply_writes_manifest() {
        let mut m = manifest(20, 2);
        let a = make_splits(&m, [0.5, 0.25, 0.25], 1, None).unwrap();
        a.apply(&mut m);
        assert_eq!(m.nodes_in(Split::Train).len(), 10);
        assert_eq!(m.nodes_in(Split::Test).len(), 5);
    }
}
