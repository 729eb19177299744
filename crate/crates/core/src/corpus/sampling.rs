//! Class balancing and stratified hold-out splitting.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::label::{SentimentLabel, NUM_CLASSES};

fn class_members<T>(labeled: &[(T, SentimentLabel)]) -> Result<[Vec<usize>; NUM_CLASSES]> {
    let mut members: [Vec<usize>; NUM_CLASSES] = Default::default();
    for (i, (_, label)) in labeled.iter().enumerate() {
        let class = label
            .class_index()
            .ok_or_else(|| Error::invalid(format!("row {i} carries the unlabeled sentinel")))?;
        members[class].push(i);
    }
    Ok(members)
}

/// Median of the three class sizes.
pub fn median_count(counts: [usize; NUM_CLASSES]) -> usize {
    let mut sorted = counts;
    sorted.sort_unstable();
    sorted[NUM_CLASSES / 2]
}

/// Resamples every class to the median class size. Classes below the median
/// keep all their members and are padded with uniform draws (with
/// replacement) from themselves; classes above it are reduced by uniform
/// sampling without replacement. Output is grouped by class in the fixed
/// class order, preserving input order within each class, with padding
/// draws appended after a class's originals.
pub fn balance_classes<T: Clone>(
    labeled: &[(T, SentimentLabel)],
    seed: u64,
) -> Result<Vec<(T, SentimentLabel)>> {
    let members = class_members(labeled)?;
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::invalid(format!(
            "class {} has no examples; balancing is undefined",
            SentimentLabel::CLASSES[empty]
        )));
    }
    let counts = [members[0].len(), members[1].len(), members[2].len()];
    let target = median_count(counts);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(target * NUM_CLASSES);
    for class_rows in &members {
        let chosen: Vec<usize> = if class_rows.len() < target {
            let mut rows = class_rows.clone();
            for _ in class_rows.len()..target {
                rows.push(class_rows[rng.gen_range(0..class_rows.len())]);
            }
            rows
        } else if class_rows.len() > target {
            let mut picked: Vec<usize> = index::sample(&mut rng, class_rows.len(), target)
                .into_iter()
                .map(|i| class_rows[i])
                .collect();
            picked.sort_unstable();
            picked
        } else {
            class_rows.clone()
        };
        out.extend(chosen.into_iter().map(|i| labeled[i].clone()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit<T> {
    pub train: Vec<T>,
    pub validation: Vec<T>,
    pub seed: u64,
}

/// Validation size `ceil(fraction * n)`, robust to binary rounding of the
/// product (0.3 * 10 must give 3, not 4).
pub fn holdout_size(fraction: f64, n: usize) -> usize {
    let raw = fraction * n as f64;
    ((raw - 1e-9).ceil().max(0.0) as usize).min(n)
}

/// Per-class hold-out quotas by largest remainder; ties go to the earlier
/// class in the fixed order.
fn stratified_quotas(counts: [usize; NUM_CLASSES], total_holdout: usize) -> [usize; NUM_CLASSES] {
    let n: usize = counts.iter().sum();
    let mut quotas = [0usize; NUM_CLASSES];
    let mut remainders = [(0usize, 0usize); NUM_CLASSES];
    for c in 0..NUM_CLASSES {
        let exact = total_holdout * counts[c];
        quotas[c] = exact / n;
        remainders[c] = (exact % n, c);
    }
    let assigned: usize = quotas.iter().sum();
    remainders.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut left = total_holdout - assigned;
    for &(_, c) in remainders.iter().cycle() {
        if left == 0 {
            break;
        }
        if quotas[c] < counts[c] {
            quotas[c] += 1;
            left -= 1;
        }
    }
    quotas
}

/// Class-stratified hold-out split. Both parts keep the input order.
pub fn split<T: Clone>(
    examples: &[(T, SentimentLabel)],
    holdout_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit<(T, SentimentLabel)>> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "hold-out fraction {holdout_fraction} must lie strictly between 0 and 1"
        )));
    }
    if examples.is_empty() {
        return Err(Error::invalid("cannot split an empty example list"));
    }
    let members = class_members(examples)?;
    let counts = [members[0].len(), members[1].len(), members[2].len()];
    let quotas = stratified_quotas(counts, holdout_size(holdout_fraction, examples.len()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_validation = vec![false; examples.len()];
    for (class_rows, quota) in members.iter().zip(quotas) {
        let mut rows = class_rows.clone();
        rows.shuffle(&mut rng);
        for &i in &rows[..quota] {
            in_validation[i] = true;
        }
    }
    let (mut train, mut validation) = (Vec::new(), Vec::new());
    for (i, ex) in examples.iter().enumerate() {
        if in_validation[i] {
            validation.push(ex.clone());
        } else {
            train.push(ex.clone());
        }
    }
    Ok(DatasetSplit {
        train,
        validation,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentLabel::*;

    fn rows(counts: [usize; 3]) -> Vec<(usize, SentimentLabel)> {
        let mut out = Vec::new();
        let mut id = 0;
        for (c, &n) in counts.iter().enumerate() {
            for _ in 0..n {
                out.push((id, SentimentLabel::CLASSES[c]));
                id += 1;
            }
        }
        out
    }

    fn class_counts<T>(v: &[(T, SentimentLabel)]) -> [usize; 3] {
        let mut c = [0; 3];
        for (_, l) in v {
            c[l.class_index().unwrap()] += 1;
        }
        c
    }

    #[test]
    fn reproduces_twenty_six_each() {
        // POSITIVE 26, NEGATIVE 13, NEUTRAL 69
        let out = balance_classes(&rows([26, 13, 69]), 1).unwrap();
        assert_eq!(class_counts(&out), [26, 26, 26]);
        assert_eq!(out.len(), 78);
    }

    #[test]
    fn already_balanced_is_unchanged() {
        let input = rows([5, 5, 5]);
        assert_eq!(balance_classes(&input, 9).unwrap(), input);
    }

    #[test]
    fn empty_class_is_an_error() {
        assert!(balance_classes(&rows([3, 0, 2]), 1).is_err());
        assert!(balance_classes(&[(0, Unlabeled)], 1).is_err());
    }

    #[test]
    fn holdout_size_ceiling() {
        assert_eq!(holdout_size(0.3, 78), 24);
        assert_eq!(holdout_size(0.3, 10), 3);
        assert_eq!(holdout_size(0.5, 10), 5);
        assert_eq!(holdout_size(0.01, 5), 1);
    }

    #[test]
    fn split_seventy_eight() {
        let s = split(&rows([26, 26, 26]), 0.3, 4).unwrap();
        assert_eq!(s.validation.len(), 24);
        assert_eq!(s.train.len(), 54);
        assert_eq!(class_counts(&s.validation), [8, 8, 8]);
    }

    #[test]
    fn split_ten_half() {
        let s = split(&rows([4, 3, 3]), 0.5, 4).unwrap();
        assert_eq!((s.train.len(), s.validation.len()), (5, 5));
    }

    #[test]
    fn split_rejects_bad_fraction() {
        for f in [0.0, 1.0, -0.1, f64::NAN] {
            assert!(split(&rows([1, 1, 1]), f, 0).is_err());
        }
        assert!(split::<usize>(&[], 0.3, 0).is_err());
    }

    #[test]
    fn split_is_deterministic() {
        let input = rows([7, 11, 5]);
        assert_eq!(split(&input, 0.3, 42).unwrap(), split(&input, 0.3, 42).unwrap());
        assert_ne!(split(&input, 0.3, 42).unwrap(), split(&input, 0.3, 43).unwrap());
    }

    #[test]
    fn quotas_sum_to_total() {
        for counts in [[1, 4, 9], [0, 3, 3], [10, 1, 1], [2, 2, 2]] {
            let n: usize = counts.iter().sum();
            for total in 0..=n {
                let q = stratified_quotas(counts, total);
                assert_eq!(q.iter().sum::<usize>(), total);
                assert!(q.iter().zip(counts).all(|(q, c)| *q <= c));
            }
        }
    }
}
